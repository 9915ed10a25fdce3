//! Complex dilogarithm, Rogers function, Bloch-Wigner function, and the
//! functional-equation checks built on them.
//!
//! `li2` evaluates the principal branch of `Li_2(z) = sum_{n>=1} z^n / n^2`
//! everywhere off the cut `(1, inf)` by splitting the plane into four
//! regions:
//!
//! * `|z| <= 1/2`: the defining series;
//! * `|1 - z| <= 1/2`: reflection, `Li_2(z) = pi^2/6 - log z log(1-z) - Li_2(1-z)`;
//! * `|z| > 1`: inversion, `Li_2(z) = -Li_2(1/z) - pi^2/6 - log^2(-z)/2`;
//! * the remaining ring: a Bernoulli-number series in `u = -log(1-z)`,
//!   `Li_2(z) = sum_{k>=0} B_k u^{k+1} / (k+1)!`, which converges for
//!   `|u| < 2 pi` while the ring keeps `|u| < 1.72`.
//!
//! The two series overlap on part of the annulus `0.4 <= |z| <= 0.5` and are
//! cross-checked against each other there (see the tests), so neither route
//! is trusted alone. Bernoulli numbers are computed once, exactly, from the
//! recurrence `sum_{k=0}^{m} C(m+1, k) B_k = 0`.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{Float, FloatConst, One, ToPrimitive, Zero};

use crate::series::TruncatedLogSeries;
use crate::Rat;

/// Error for arguments off a principal-branch domain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DomainError(pub &'static str);

impl std::fmt::Display for DomainError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "domain error: {}", self.0)
    }
}

impl std::error::Error for DomainError {}

pub type SpecialResult<T> = Result<T, DomainError>;

/// Entries in the cached Bernoulli table. The `u`-series needs roughly 30
/// even-index terms at f64 precision; the rest is margin.
const B_TABLE_LEN: usize = 52;

/// Bernoulli numbers `B_0 ..= B_{n_max}`, exactly.
pub fn bernoulli_table(n_max: usize) -> Vec<BigRational> {
    let mut b: Vec<BigRational> = Vec::with_capacity(n_max + 1);
    b.push(BigRational::one());
    for m in 1..=n_max {
        let mut acc = BigRational::zero();
        let mut binom = BigInt::one();
        for (k, bk) in b.iter().enumerate() {
            acc += bk * BigRational::from_integer(binom.clone());
            binom = binom * BigInt::from(m + 1 - k) / BigInt::from(k + 1);
        }
        // The k = m coefficient is C(m+1, m) = m + 1.
        b.push(-acc / BigRational::from_integer(BigInt::from(m + 1)));
    }
    b
}

/// Floats that can run the dilogarithm kernels: IEEE arithmetic, pi, and a
/// Bernoulli table cached at the type's own precision.
pub trait DilogFloat: Float + FloatConst + std::fmt::Debug + 'static {
    /// `B_n` rounded to this type; `n` must be below the table length.
    fn bernoulli(n: usize) -> Self;
}

macro_rules! impl_dilog_float {
    ($($f:ty),*) => {$(
        impl DilogFloat for $f {
            fn bernoulli(n: usize) -> Self {
                static TABLE: OnceLock<Vec<$f>> = OnceLock::new();
                let table = TABLE.get_or_init(|| {
                    bernoulli_table(B_TABLE_LEN - 1)
                        .iter()
                        .map(|b| b.to_f64().expect("bernoulli magnitude fits a float") as $f)
                        .collect()
                });
                table[n]
            }
        }
    )*};
}

impl_dilog_float!(f32, f64);

fn pi2_over_6<F: DilogFloat>() -> F {
    F::PI() * F::PI() / F::from(6.0).unwrap()
}

/// Principal-branch dilogarithm. Defined on the plane minus the cut
/// `(1, inf)`; `li2(1) = pi^2/6` by continuity.
pub fn li2<F: DilogFloat>(z: Complex<F>) -> SpecialResult<Complex<F>> {
    if z.im.is_zero() {
        if z.re == F::one() {
            return Ok(Complex::new(pi2_over_6::<F>(), F::zero()));
        }
        if z.re > F::one() {
            return Err(DomainError("li2: argument on the branch cut (1, inf)"));
        }
    }
    Ok(li2_inner(z))
}

/// Dispatch over the four regions; assumes the cut has been excluded.
fn li2_inner<F: DilogFloat>(z: Complex<F>) -> Complex<F> {
    let quarter = F::from(0.25).unwrap();
    let half = F::from(0.5).unwrap();
    let one = Complex::new(F::one(), F::zero());
    if z.norm_sqr() <= quarter {
        return li2_euler(z);
    }
    let w = one - z;
    if w.norm_sqr() <= quarter {
        let pi26 = Complex::new(pi2_over_6::<F>(), F::zero());
        return pi26 - z.ln() * w.ln() - li2_euler(w);
    }
    if z.norm_sqr() > F::one() {
        let lnmz = (-z).ln();
        let pi26 = Complex::new(pi2_over_6::<F>(), F::zero());
        return -li2_inner(one / z) - pi26 - lnmz * lnmz * half;
    }
    li2_bernoulli(z)
}

/// Defining series, for `|z| <= 1/2`.
fn li2_euler<F: DilogFloat>(z: Complex<F>) -> Complex<F> {
    let eps2 = F::epsilon() * F::epsilon();
    let mut acc = Complex::zero();
    let mut zn = Complex::new(F::one(), F::zero());
    for n in 1u32..400 {
        zn = zn * z;
        let t = zn / F::from(n * n).unwrap();
        acc = acc + t;
        if t.norm_sqr() <= acc.norm_sqr() * eps2 {
            break;
        }
    }
    acc
}

/// Series in `u = -log(1 - z)`, for the ring not covered by the other
/// regions (there `|u| < 1.72`, safely inside the radius `2 pi`).
fn li2_bernoulli<F: DilogFloat>(z: Complex<F>) -> Complex<F> {
    let one = Complex::new(F::one(), F::zero());
    let u = -((one - z).ln());
    let eps2 = F::epsilon() * F::epsilon();
    let mut acc = Complex::zero();
    let mut upow = u;
    let mut inv_fact = F::one();
    for k in 0..B_TABLE_LEN {
        inv_fact = inv_fact / F::from(k + 1).unwrap();
        let bk = F::bernoulli(k);
        if !bk.is_zero() {
            let t = upow * (bk * inv_fact);
            acc = acc + t;
            if k > 2 && t.norm_sqr() <= acc.norm_sqr() * eps2 {
                break;
            }
        }
        upow = upow * u;
    }
    acc
}

/// Rogers function `L(z) = Li_2(z) + log(z) log(1 - z) / 2` on the principal
/// domain, the plane minus `(-inf, 0]` and `[1, inf)`, extended to the two
/// endpoints by continuity: `L(0) = 0` and `L(1) = pi^2/6`.
pub fn rogers_l<F: DilogFloat>(z: Complex<F>) -> SpecialResult<Complex<F>> {
    if z.im.is_zero() {
        if z.re.is_zero() {
            return Ok(Complex::zero());
        }
        if z.re == F::one() {
            return Ok(Complex::new(pi2_over_6::<F>(), F::zero()));
        }
        if z.re < F::zero() || z.re > F::one() {
            return Err(DomainError(
                "rogers_l: real arguments must lie in [0, 1]",
            ));
        }
    }
    let one = Complex::new(F::one(), F::zero());
    let half = F::from(0.5).unwrap();
    Ok(li2_inner(z) + z.ln() * (one - z).ln() * half)
}

/// Rogers function restricted to the real interval `[0, 1]`, where it is
/// real-valued.
pub fn rogers_l_real<F: DilogFloat>(x: F) -> SpecialResult<F> {
    rogers_l(Complex::new(x, F::zero())).map(|v| v.re)
}

/// Principal-value extension of the Rogers function to `x > 1`:
/// `Re Li_2(x) + log(x) log(x - 1) / 2`. It coincides with `rogers_l_real`
/// on `(0, 1]` and satisfies `rogers_l_pv(x) + rogers_l_real(1/x) = pi^2/3`
/// exactly for `x > 1`.
pub fn rogers_l_pv<F: DilogFloat>(x: F) -> SpecialResult<F> {
    if x <= F::zero() {
        return Err(DomainError("rogers_l_pv: argument must be positive"));
    }
    if x <= F::one() {
        return rogers_l_real(x);
    }
    // Re Li_2(x) = pi^2/3 - log^2(x)/2 - Li_2(1/x) for x > 1.
    let half = F::from(0.5).unwrap();
    let lnx = x.ln();
    let li2_inv = li2_inner(Complex::new(x.recip(), F::zero())).re;
    let re_li2 = pi2_over_6::<F>() * F::from(2.0).unwrap() - lnx * lnx * half - li2_inv;
    Ok(re_li2 + lnx * (x - F::one()).ln() * half)
}

/// Bloch-Wigner function `D(z) = Im Li_2(z) + arg(1 - z) log |z|`.
///
/// Single-valued and real-analytic off `{0, 1}`, zero on the entire real
/// line, and odd under conjugation.
pub fn bloch_wigner<F: DilogFloat>(z: Complex<F>) -> F {
    if z.im.is_zero() {
        return F::zero();
    }
    let one = Complex::new(F::one(), F::zero());
    li2_inner(z).im + (one - z).arg() * z.norm().ln()
}

/// Residuals of the two reflection identities of the Rogers function at `z`.
#[derive(Clone, Copy, Debug)]
pub struct ReflectionCheck<F> {
    /// `|L(z) + L(1 - z) - L(1)|`.
    pub residual_a: F,
    /// Residual of the inversion identity. Off the real axis this is
    /// `|L(z) + L(1/z) - 2 L(1) - (i pi / 2) sgn(Im z) log z|`; for real
    /// `z` in `(0, 1)` the branch term drops and `L(1/z)` is taken in the
    /// principal-value extension.
    pub residual_b: F,
}

/// Evaluate both reflection residuals. Real arguments must lie in `(0, 1)`;
/// anything off the real axis is accepted.
pub fn check_reflection<F: DilogFloat>(z: Complex<F>) -> SpecialResult<ReflectionCheck<F>> {
    let l1 = pi2_over_6::<F>();
    if z.im.is_zero() {
        let x = z.re;
        if x <= F::zero() || x >= F::one() {
            return Err(DomainError(
                "check_reflection: real arguments must lie in (0, 1)",
            ));
        }
        let residual_a = (rogers_l_real(x)? + rogers_l_real(F::one() - x)? - l1).abs();
        let residual_b = (rogers_l_real(x)? + rogers_l_pv(x.recip())? - (l1 + l1)).abs();
        return Ok(ReflectionCheck {
            residual_a,
            residual_b,
        });
    }
    let one = Complex::new(F::one(), F::zero());
    let lz = rogers_l(z)?;
    let l1c = Complex::new(l1, F::zero());
    let residual_a = (lz + rogers_l(one - z)? - l1c).norm();
    let sign = if z.im > F::zero() { F::one() } else { -F::one() };
    let branch = Complex::new(F::zero(), sign * F::FRAC_PI_2()) * z.ln();
    let residual_b = (lz + rogers_l(one / z)? - (l1c + l1c) - branch).norm();
    Ok(ReflectionCheck {
        residual_a,
        residual_b,
    })
}

/// Residual of the five-term identity
/// `L(x) + L(y) = L(xy) + L((x - xy)/(1 - xy)) + L((y - xy)/(1 - xy))`
/// on the closed unit square minus the corner `(1, 1)`. When either
/// argument is zero the five terms cancel pairwise and the result is an
/// exact floating-point zero.
pub fn check_pentagon<F: DilogFloat>(x: F, y: F) -> SpecialResult<F> {
    let in_range = |v: F| v >= F::zero() && v <= F::one();
    if !in_range(x) || !in_range(y) || (x == F::one() && y == F::one()) {
        return Err(DomainError(
            "check_pentagon: arguments must lie in [0,1]^2 minus (1,1)",
        ));
    }
    let xy = x * y;
    let d = F::one() - xy;
    let u = (x - xy) / d;
    let v = (y - xy) / d;
    Ok(
        (rogers_l_real(x)? + rogers_l_real(y)?
            - rogers_l_real(xy)?
            - rogers_l_real(u)?
            - rogers_l_real(v)?)
        .abs(),
    )
}

/// Exact expansion of the Rogers function around `x = 0` with the formal
/// log `l` standing for `log x`:
/// `sum_{n>=1} x^n / n^2 - (l / 2) sum_{n>=1} x^n / n`.
pub fn rogers_series(trunc: u32) -> TruncatedLogSeries<Rat> {
    let mut s = TruncatedLogSeries::zero(trunc);
    for n in 1..=trunc {
        let n64 = i64::from(n);
        s = s + TruncatedLogSeries::monomial(n, 0, Rat::new(1, i128::from(n64) * i128::from(n64)), trunc);
        s = s + TruncatedLogSeries::monomial(n, 1, Rat::new(-1, 2 * i128::from(n64)), trunc);
    }
    s
}
