//! Radially ordered correlators of lattice vertex operators on the twisted
//! torus, in closed form and through an independent operator-algebra oracle.
//!
//! A vertex operator `e^alpha(z)` is attached to a ground label `alpha`
//! (winding and momentum).  Between lattice ground states the two-insertion
//! amplitude collapses to a monomial prefactor, a binomial factor from the
//! free-field pairing, and an exponentiated Rogers dilogarithm whose
//! coefficient is the signed volume spanned by the three winding vectors:
//!
//! ```text
//! <e^delta| e^alpha(z) e^beta(w) |e^gamma>
//!   = z^(alpha,alpha)+(alpha,gamma) w^(beta,beta)+(beta,gamma)
//!     (z - w)^(alpha,beta) exp( eps(alpha,beta,gamma) L(w/z) )
//! ```
//!
//! expanded for `|z| > |w|`.  Reversing the insertion order expands in
//! `|w| > |z|` and flips the sign of the dilogarithm exponent; the two
//! expansions are reconciled by the inversion identity
//! `L(x) + L(1/x) = 2 L(1) + (i pi / 2) log x` on the upper half plane.
//!
//! Three insertions produce a web of four Rogers factors,
//!
//! ```text
//! exp( eps(beta,gamma,delta)  L(t/w) + eps(alpha,beta,delta) L(w/z)
//!    + eps(alpha,gamma,delta) L(t/z) + eps(alpha,beta,gamma) L((w-t)/(z-t)) )
//! ```
//!
//! for `|z| > |w| > |t|`.  The same amplitude computed by normal ordering
//! before any resummation leaves a raw combination of `Li_2` values and
//! log products ([`five_point_raw`]); the two agree through the five-term
//! relation of the dilogarithm evaluated at `(w/z, t/w)`.
//!
//! Every closed form here is checked against an oracle that knows nothing
//! about dilogarithms: vertex insertions are applied mode by mode on the
//! Fock module over the twisted algebra ([`crate::fock`]), and the
//! resulting series in the insertion ratios is compared coefficient by
//! coefficient ([`four_point_oracle`]) or numerically after truncation at a
//! fixed oscillator weight ([`five_point_oracle`]).  Two purely
//! combinatorial identities used when resumming the normal-ordered double
//! sums are exposed as [`expansion_identity_check`] and
//! [`beta_sum_identity_check`].

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::algebra::ModeAlgebra;
use crate::fock::{bra_contract, insert_vertex_ket, FockState, GroundLabel, NumericCtx, SymbolicCtx, Var, VarLogPoly};
use crate::series::TruncatedLogSeries;
use crate::special::{li2, rogers_l, rogers_series, SpecialResult};
use crate::{Cplx, Rat, RatSeries};

/// Signed volume of the parallelepiped spanned by three winding vectors:
/// the `3 x 3` determinant with rows `a`, `b`, `c`.  This integer is the
/// only datum of the ground labels entering a dilogarithm exponent.
pub fn epsilon_triple(a: [i64; 3], b: [i64; 3], c: [i64; 3]) -> i64 {
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
        + a[2] * (b[0] * c[1] - b[1] * c[0])
}

/// Exact binomial coefficient in `i128`.
fn binom_i128(n: i128, k: i128) -> i128 {
    if k < 0 || k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: i128 = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Argument of one Rogers factor in a closed correlator, as a function of
/// the insertion points `(z, w, t)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DilogArg {
    /// `w/z`
    WOverZ,
    /// `z/w` (reversed radial ordering)
    ZOverW,
    /// `t/z`
    TOverZ,
    /// `t/w`
    TOverW,
    /// `(w-t)/(z-t)`
    WtOverZt,
    /// `(w^-1 - z^-1)/(t^-1 - z^-1)`
    InvRatio,
}

impl DilogArg {
    /// Evaluates the argument at concrete insertion points `[z, w, t]`.
    pub fn eval(self, pts: [Cplx; 3]) -> Cplx {
        let [z, w, t] = pts;
        match self {
            DilogArg::WOverZ => w / z,
            DilogArg::ZOverW => z / w,
            DilogArg::TOverZ => t / z,
            DilogArg::TOverW => t / w,
            DilogArg::WtOverZt => (w - t) / (z - t),
            DilogArg::InvRatio => (w.inv() - z.inv()) / (t.inv() - z.inv()),
        }
    }
}

impl fmt::Display for DilogArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DilogArg::WOverZ => "w/z",
            DilogArg::ZOverW => "z/w",
            DilogArg::TOverZ => "t/z",
            DilogArg::TOverW => "t/w",
            DilogArg::WtOverZt => "(w-t)/(z-t)",
            DilogArg::InvRatio => "(w^-1-z^-1)/(t^-1-z^-1)",
        };
        f.write_str(s)
    }
}

/// Symbolic skeleton of a closed correlator: monomial prefactors in each
/// insertion variable, binomial factors `(u - v)^e`, and exponentiated
/// Rogers factors `exp(c L(arg))` with integer coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelatorClosedForm {
    /// Exponent of each insertion variable in the monomial prefactor.
    pub prefactor: BTreeMap<Var, i64>,
    /// Binomial factors `(first - second)^exponent`.
    pub binomials: Vec<((Var, Var), i64)>,
    /// Rogers factors `exp(coefficient * L(argument))`.
    pub dilogs: Vec<(i64, DilogArg)>,
}

impl CorrelatorClosedForm {
    /// Evaluates the closed form at concrete points `[z, w, t]` with
    /// principal branches throughout.
    pub fn eval(&self, pts: [Cplx; 3]) -> SpecialResult<Cplx> {
        let mut acc = Cplx::one();
        for (v, e) in &self.prefactor {
            if *e != 0 {
                acc *= pts[v.index()].powi(*e as i32);
            }
        }
        for ((a, b), e) in &self.binomials {
            if *e != 0 {
                acc *= (pts[a.index()] - pts[b.index()]).powi(*e as i32);
            }
        }
        let mut expo = Cplx::zero();
        for (c, arg) in &self.dilogs {
            expo += Cplx::new(*c as f64, 0.0) * rogers_l(arg.eval(pts))?;
        }
        Ok(acc * expo.exp())
    }
}

/// Closed form of `<e^delta| e^alpha(z) e^beta(w) |e^gamma>` for
/// `|z| > |w|`: prefactor exponents `(alpha,alpha)+(alpha,gamma)` on `z`
/// and `(beta,beta)+(beta,gamma)` on `w`, binomial `(z-w)^(alpha,beta)`,
/// and one Rogers factor with coefficient
/// `eps = epsilon_triple(alpha.w, beta.w, gamma.w)`.
pub fn four_point_form(alpha: &GroundLabel, beta: &GroundLabel, gamma: &GroundLabel) -> CorrelatorClosedForm {
    let mut prefactor = BTreeMap::new();
    prefactor.insert(Var::Z, alpha.pairing(alpha) + alpha.pairing(gamma));
    prefactor.insert(Var::W, beta.pairing(beta) + beta.pairing(gamma));
    prefactor.insert(Var::T, 0);
    let eps = epsilon_triple(alpha.w, beta.w, gamma.w);
    CorrelatorClosedForm {
        prefactor,
        binomials: vec![((Var::Z, Var::W), alpha.pairing(beta))],
        dilogs: if eps == 0 { vec![] } else { vec![(eps, DilogArg::WOverZ)] },
    }
}

/// Closed form of the same amplitude expanded in the reversed ordering
/// `|w| > |z|`: the binomial becomes `(w - z)^(alpha,beta)` and the Rogers
/// coefficient flips sign with the inverted argument `z/w`.  Only the
/// dilogarithm data and exponents are recorded; the sign convention of the
/// reversed binomial (a two-cocycle choice) is left out, so comparisons
/// across orderings are made on magnitudes or log derivatives.
pub fn four_point_swapped_form(alpha: &GroundLabel, beta: &GroundLabel, gamma: &GroundLabel) -> CorrelatorClosedForm {
    let mut form = four_point_form(alpha, beta, gamma);
    form.binomials = vec![((Var::W, Var::Z), alpha.pairing(beta))];
    form.dilogs = form.dilogs.into_iter().map(|(c, _)| (-c, DilogArg::ZOverW)).collect();
    form
}

/// Ratio series of the two-insertion closed form: `(1 - x)^pair_ab`
/// times `exp(eps L(x))` expanded with `x` the insertion ratio and the
/// nilpotent log of `x` tracked alongside.
fn closed_ratio_series(pair_ab: i64, eps: i64, order: u32) -> RatSeries {
    let binomial = TruncatedLogSeries::one_minus_x_pow(pair_ab, order);
    let rogers = rogers_series(order).scale_int(eps).exp();
    binomial * rogers
}

/// Two-insertion amplitude in closed form.
#[derive(Clone, Debug)]
pub struct FourPointClosed {
    /// Expansion of the ratio-dependent part in `x = w/z` and `log x`.
    pub series: RatSeries,
    /// Symbolic prefactor, binomial, and dilogarithm data.
    pub form: CorrelatorClosedForm,
    /// Set when `delta != alpha + beta + gamma`; the amplitude then
    /// vanishes by lattice momentum conservation and `series` is zero.
    pub label_mismatch: bool,
}

/// Closed form of `<e^delta| e^alpha(z) e^beta(w) |e^gamma>` truncated at
/// ratio order `order`.
pub fn four_point_closed(
    delta: &GroundLabel,
    alpha: &GroundLabel,
    beta: &GroundLabel,
    gamma: &GroundLabel,
    order: u32,
) -> FourPointClosed {
    let form = four_point_form(alpha, beta, gamma);
    if *delta != *alpha + *beta + *gamma {
        return FourPointClosed { series: TruncatedLogSeries::zero(order), form, label_mismatch: true };
    }
    let eps = epsilon_triple(alpha.w, beta.w, gamma.w);
    FourPointClosed { series: closed_ratio_series(alpha.pairing(beta), eps, order), form, label_mismatch: false }
}

/// Expected ratio series of the reversed ordering, in `y = z/w`:
/// `(1 - y)^(alpha,beta) exp(-eps L(y))`.
pub fn swapped_closed_series(alpha: &GroundLabel, beta: &GroundLabel, gamma: &GroundLabel, order: u32) -> RatSeries {
    let eps = epsilon_triple(alpha.w, beta.w, gamma.w);
    closed_ratio_series(alpha.pairing(beta), -eps, order)
}

/// Two-insertion amplitude computed by the operator oracle.
#[derive(Clone, Debug)]
pub struct FourPointOracle {
    /// Ratio series extracted from the module computation; for
    /// [`four_point_oracle`] the ratio is `w/z`, for
    /// [`four_point_swapped`] it is `z/w`.
    pub series: RatSeries,
    /// Set when the labels violate lattice momentum conservation.
    pub label_mismatch: bool,
}

/// Rebuilds a single-ratio series from the exact multivariate result of a
/// module computation.  `num`/`den` are the variables whose ratio is the
/// expansion parameter, with scaling bases `base_num`/`base_den` fixed by
/// the vertex normal ordering; every term must sit on the homogeneity line
/// and its logs must assemble into powers of `log(num) - log(den)` through
/// the alternating binomial pattern.  Any violation indicates the module
/// result is not a function of the ratio alone and is a hard error.
fn extract_ratio_series(
    val: &VarLogPoly,
    num: Var,
    den: Var,
    base_num: i64,
    base_den: i64,
    order: u32,
) -> RatSeries {
    let ni = num.index();
    let di = den.index();
    let si = 3 - ni - di;
    let mut q: BTreeMap<(u32, u32), Rat> = BTreeMap::new();
    let mut seen: BTreeMap<(u32, u32), u32> = BTreeMap::new();
    for ((pow, log), _c) in val.terms() {
        assert!(
            pow[si] == 0 && log[si] == 0,
            "two-insertion amplitude depends on a spectator variable"
        );
        let k = i64::from(pow[ni]) - base_num;
        assert!(k >= 0, "ratio order fell below the scaling base");
        assert_eq!(
            i64::from(pow[di]),
            base_den - k,
            "term off the homogeneity line of the scaling weights"
        );
        let k = u32::try_from(k).expect("ratio order fits u32");
        assert!(k <= order, "ratio order beyond the requested truncation");
        let d = u32::from(log[ni]) + u32::from(log[di]);
        *seen.entry((k, d)).or_insert(0) += 1;
        if log[di] == 0 {
            q.insert((k, d), val.coeff(pow, log));
        }
    }
    // Each log level must carry exactly the binomial companions of its
    // leading term, with coefficients q_d * (-1)^j * C(d, j).
    for ((pow, log), c) in val.terms() {
        let k = u32::try_from(i64::from(pow[ni]) - base_num).expect("checked above");
        let d = u32::from(log[ni]) + u32::from(log[di]);
        let j = u32::from(log[di]);
        let qd = q.get(&(k, d)).copied().unwrap_or_else(Rat::zero);
        let sign = if j % 2 == 1 { -1 } else { 1 };
        let expect = qd * Rat::from_integer(sign * binom_i128(i128::from(d), i128::from(j)));
        assert_eq!(c, expect, "logs do not assemble into powers of the ratio log");
    }
    let mut series = TruncatedLogSeries::zero(order);
    for (&(k, d), &n) in &seen {
        if q.contains_key(&(k, d)) {
            assert_eq!(n, d + 1, "missing binomial companion at a log level");
        }
    }
    for ((k, d), qd) in q {
        series = series + TruncatedLogSeries::monomial(k, d, qd, order);
    }
    series
}

/// Two-insertion amplitude computed directly on the Fock module: the inner
/// vertex acts on `|e^gamma>` mode by mode, the outer vertex is contracted
/// against `<e^delta|`, and the exact multivariate result is folded into a
/// series in `x = w/z`.  No dilogarithm identity enters this path.
pub fn four_point_oracle(
    alg: &ModeAlgebra,
    delta: &GroundLabel,
    alpha: &GroundLabel,
    beta: &GroundLabel,
    gamma: &GroundLabel,
    order: u32,
) -> FourPointOracle {
    if *delta != *alpha + *beta + *gamma {
        return FourPointOracle { series: TruncatedLogSeries::zero(order), label_mismatch: true };
    }
    let ctx = SymbolicCtx;
    let ket = FockState::<VarLogPoly>::vacuum(*gamma);
    let mid = insert_vertex_ket(alg, &ctx, Var::W, beta, &ket, order);
    let val = bra_contract(alg, &ctx, Var::Z, alpha, delta, &mid);
    let base_w = beta.pairing(gamma);
    let base_z = alpha.pairing(&(*delta - *alpha));
    let series = extract_ratio_series(&val, Var::W, Var::Z, base_w, base_z, order);
    FourPointOracle { series, label_mismatch: false }
}

/// Same amplitude with the insertion order reversed, `e^beta(w)` outermost:
/// the module computation now expands in `y = z/w`, and the extracted
/// series should match `(1 - y)^(alpha,beta) exp(-eps L(y))`.
pub fn four_point_swapped(
    alg: &ModeAlgebra,
    delta: &GroundLabel,
    alpha: &GroundLabel,
    beta: &GroundLabel,
    gamma: &GroundLabel,
    order: u32,
) -> FourPointOracle {
    if *delta != *alpha + *beta + *gamma {
        return FourPointOracle { series: TruncatedLogSeries::zero(order), label_mismatch: true };
    }
    let ctx = SymbolicCtx;
    let ket = FockState::<VarLogPoly>::vacuum(*gamma);
    let mid = insert_vertex_ket(alg, &ctx, Var::Z, alpha, &ket, order);
    let val = bra_contract(alg, &ctx, Var::W, beta, delta, &mid);
    let base_z = alpha.pairing(gamma);
    let base_w = beta.pairing(&(*delta - *beta));
    let series = extract_ratio_series(&val, Var::Z, Var::W, base_z, base_w, order);
    FourPointOracle { series, label_mismatch: false }
}

/// Residual of the locality reconciliation between the two orderings: the
/// Rogers exponents of the direct and reversed expansions differ by the
/// constant `2 eps L(1)` plus the branch term `(i pi / 2) log r` of the
/// inversion identity (sign tied to the half plane of `r`).  Returns
/// `|eps| |L(r) + L(1/r) - 2 L(1) - (i pi/2) sgn(Im r) log r|`.
pub fn swap_locality_residual(eps: i64, r: Cplx) -> SpecialResult<f64> {
    let a = rogers_l(r)?;
    let b = rogers_l(r.inv())?;
    let l1 = std::f64::consts::PI * std::f64::consts::PI / 6.0;
    let sgn = if r.im > 0.0 {
        1.0
    } else if r.im < 0.0 {
        -1.0
    } else {
        0.0
    };
    let branch = Cplx::new(0.0, sgn * std::f64::consts::PI / 2.0) * r.ln();
    let resid = a + b - Cplx::new(2.0 * l1, 0.0) - branch;
    Ok(eps.unsigned_abs() as f64 * resid.norm())
}

fn assert_pure_winding(l: &GroundLabel, who: &str) {
    assert!(l.p == [0; 3], "{who} label must be pure winding");
}

/// The four Rogers factors of the three-insertion closed form, with
/// coefficients `eps(beta,gamma,delta)`, `eps(alpha,beta,delta)`,
/// `eps(alpha,gamma,delta)`, `eps(alpha,beta,gamma)` on the arguments
/// `t/w`, `w/z`, `t/z`, `(w-t)/(z-t)`.
pub fn five_point_form(
    alpha: &GroundLabel,
    beta: &GroundLabel,
    gamma: &GroundLabel,
    delta: &GroundLabel,
) -> CorrelatorClosedForm {
    let a = epsilon_triple(beta.w, gamma.w, delta.w);
    let b = epsilon_triple(alpha.w, beta.w, delta.w);
    let c = epsilon_triple(alpha.w, gamma.w, delta.w);
    let e = epsilon_triple(alpha.w, beta.w, gamma.w);
    let mut prefactor = BTreeMap::new();
    prefactor.insert(Var::Z, 0);
    prefactor.insert(Var::W, 0);
    prefactor.insert(Var::T, 0);
    let dilogs = [
        (a, DilogArg::TOverW),
        (b, DilogArg::WOverZ),
        (c, DilogArg::TOverZ),
        (e, DilogArg::WtOverZt),
    ]
    .into_iter()
    .filter(|(c, _)| *c != 0)
    .collect();
    CorrelatorClosedForm { prefactor, binomials: vec![], dilogs }
}

/// Closed value of `<e^psi| e^alpha(z) e^beta(w) e^gamma(t) |e^delta>` for
/// pure-winding labels and `|z| > |w| > |t| >= 0`: the exponential of the
/// four Rogers factors of [`five_point_form`].  Returns zero when the
/// labels violate lattice momentum conservation; domain violations of `L`
/// propagate as errors.
#[allow(clippy::too_many_arguments)]
pub fn five_point_closed(
    psi: &GroundLabel,
    alpha: &GroundLabel,
    beta: &GroundLabel,
    gamma: &GroundLabel,
    delta: &GroundLabel,
    z: Cplx,
    w: Cplx,
    t: Cplx,
) -> SpecialResult<Cplx> {
    for (l, who) in [(alpha, "alpha"), (beta, "beta"), (gamma, "gamma"), (delta, "delta")] {
        assert_pure_winding(l, who);
    }
    assert!(z.norm() > w.norm() && w.norm() > t.norm(), "insertion points must be radially ordered");
    if *psi != *alpha + *beta + *gamma + *delta {
        return Ok(Cplx::zero());
    }
    five_point_form(alpha, beta, gamma, delta).eval([z, w, t])
}

/// The same amplitude before any dilogarithm resummation: the exponent is
/// left as the normal-ordering produced it, a mix of Rogers values, bare
/// `Li_2` values, and log products,
///
/// ```text
/// A L(t/w) + (B + E) L(w/z) + C L(t/z)
///   - (E/2) (Li2(t/z) + log(w/z) log(1 - t/z))
///   + (E/2) S1 - (E/2) S2
/// S1 = Li2((t-w)/(t-z)) - Li2(t/(t-z)) - Li2(w/z)
/// S2 = Li2((w^-1 - z^-1)/(t^-1 - z^-1)) - Li2(t/(t-z)) - Li2(t/w)
/// ```
///
/// with `A, B, C, E` the epsilon triples of [`five_point_form`].  Equality
/// with [`five_point_closed`] is the five-term relation of the
/// dilogarithm at `(w/z, t/w)`.
#[allow(clippy::too_many_arguments)]
pub fn five_point_raw(
    psi: &GroundLabel,
    alpha: &GroundLabel,
    beta: &GroundLabel,
    gamma: &GroundLabel,
    delta: &GroundLabel,
    z: Cplx,
    w: Cplx,
    t: Cplx,
) -> SpecialResult<Cplx> {
    for (l, who) in [(alpha, "alpha"), (beta, "beta"), (gamma, "gamma"), (delta, "delta")] {
        assert_pure_winding(l, who);
    }
    assert!(
        z.norm() > w.norm() && w.norm() > t.norm() && t.norm() > 0.0,
        "insertion points must be radially ordered and nonzero"
    );
    if *psi != *alpha + *beta + *gamma + *delta {
        return Ok(Cplx::zero());
    }
    let a = epsilon_triple(beta.w, gamma.w, delta.w) as f64;
    let b = epsilon_triple(alpha.w, beta.w, delta.w) as f64;
    let c = epsilon_triple(alpha.w, gamma.w, delta.w) as f64;
    let e = epsilon_triple(alpha.w, beta.w, gamma.w) as f64;
    let half_e = Cplx::new(e / 2.0, 0.0);
    let li_t_tz = li2(t / (t - z))?;
    let s1 = li2((t - w) / (t - z))? - li_t_tz - li2(w / z)?;
    let s2 = li2((w.inv() - z.inv()) / (t.inv() - z.inv()))? - li_t_tz - li2(t / w)?;
    let mut expo = Cplx::new(a, 0.0) * rogers_l(t / w)?;
    expo += Cplx::new(b + e, 0.0) * rogers_l(w / z)?;
    expo += Cplx::new(c, 0.0) * rogers_l(t / z)?;
    expo -= half_e * (li2(t / z)? + (w / z).ln() * (Cplx::one() - t / z).ln());
    expo += half_e * s1;
    expo -= half_e * s2;
    Ok(expo.exp())
}

/// Three-insertion amplitude computed numerically on the Fock module,
/// truncated at oscillator weight `weight`.
#[derive(Clone, Debug)]
pub struct FivePointOracle {
    /// Value at the requested truncation weight.
    pub value: Cplx,
    /// `|value - value at weight - 2|`, the size of the last resolved
    /// orders.
    pub refinement_delta: f64,
    /// Geometric tail estimate for the discarded orders,
    /// `refinement_delta * r^2 / (1 - r)` with `r = max_ratio`.
    pub tail_bound: f64,
    /// Largest adjacent insertion ratio `max(|w/z|, |t/w|)`.
    pub max_ratio: f64,
    /// Set when the labels violate lattice momentum conservation.
    pub label_mismatch: bool,
}

#[allow(clippy::too_many_arguments)]
fn five_point_oracle_value(
    alg: &ModeAlgebra,
    psi: &GroundLabel,
    alpha: &GroundLabel,
    beta: &GroundLabel,
    gamma: &GroundLabel,
    delta: &GroundLabel,
    z: Cplx,
    w: Cplx,
    t: Cplx,
    weight: u32,
) -> Cplx {
    let ctx = NumericCtx::new(z, w, t);
    let ket = FockState::<Cplx>::vacuum(*delta);
    let s1 = insert_vertex_ket(alg, &ctx, Var::T, gamma, &ket, weight);
    let s2 = insert_vertex_ket(alg, &ctx, Var::W, beta, &s1, weight);
    bra_contract(alg, &ctx, Var::Z, alpha, psi, &s2)
}

/// Three-insertion amplitude straight from the module: the `gamma` and
/// `beta` vertices act in turn on `|e^delta>`, keeping every state of
/// oscillator weight at most `weight`, and the `alpha` vertex is
/// contracted against `<e^psi|`.  The truncation error is estimated by
/// rerunning at `weight - 2` and extrapolating the geometric tail in the
/// largest adjacent ratio.
#[allow(clippy::too_many_arguments)]
pub fn five_point_oracle(
    alg: &ModeAlgebra,
    psi: &GroundLabel,
    alpha: &GroundLabel,
    beta: &GroundLabel,
    gamma: &GroundLabel,
    delta: &GroundLabel,
    z: Cplx,
    w: Cplx,
    t: Cplx,
    weight: u32,
) -> FivePointOracle {
    let r = (w / z).norm().max((t / w).norm());
    assert!(r < 1.0, "insertion points must be radially ordered");
    if *psi != *alpha + *beta + *gamma + *delta {
        return FivePointOracle {
            value: Cplx::zero(),
            refinement_delta: 0.0,
            tail_bound: 0.0,
            max_ratio: r,
            label_mismatch: true,
        };
    }
    let value = five_point_oracle_value(alg, psi, alpha, beta, gamma, delta, z, w, t, weight);
    let coarse = five_point_oracle_value(alg, psi, alpha, beta, gamma, delta, z, w, t, weight.saturating_sub(2));
    let refinement_delta = (value - coarse).norm();
    let tail_bound = refinement_delta * r * r / (1.0 - r);
    FivePointOracle { value, refinement_delta, tail_bound, max_ratio: r, label_mismatch: false }
}

/// Comparison of the three-insertion closed value with the product of its
/// four two-insertion factors.
#[derive(Clone, Debug)]
pub struct FactorizationReport {
    /// Closed three-insertion value.
    pub closed: Cplx,
    /// Product of the four two-insertion closed forms at their paired
    /// points, including the factor at the shifted pair `(z-t, w-t)`.
    pub product: Cplx,
    /// `|closed - product|`.
    pub residual: f64,
}

/// Checks that the three-insertion closed form factorizes into four
/// two-insertion amplitudes: the pairs `(z,w)`, `(z,t)`, `(w,t)` against
/// the ket label, and the shifted pair `(z-t, w-t)` against `gamma`.  Each
/// factor is built and evaluated by the two-insertion closed form on its
/// own label triple, so the comparison exercises the label combinatorics
/// rather than one algebraic rearrangement.
#[allow(clippy::too_many_arguments)]
pub fn factorization_check(
    psi: &GroundLabel,
    alpha: &GroundLabel,
    beta: &GroundLabel,
    gamma: &GroundLabel,
    delta: &GroundLabel,
    z: Cplx,
    w: Cplx,
    t: Cplx,
) -> SpecialResult<FactorizationReport> {
    let closed = five_point_closed(psi, alpha, beta, gamma, delta, z, w, t)?;
    let one = Cplx::one();
    let factor = |x: &GroundLabel, y: &GroundLabel, ket: &GroundLabel, p: Cplx, q: Cplx| -> SpecialResult<Cplx> {
        four_point_form(x, y, ket).eval([p, q, one])
    };
    let product = factor(alpha, beta, delta, z, w)?
        * factor(alpha, gamma, delta, z, t)?
        * factor(beta, gamma, delta, w, t)?
        * factor(alpha, beta, gamma, z - t, w - t)?;
    let residual = (closed - product).norm();
    Ok(FactorizationReport { closed, product, residual })
}

/// Truncated polynomial in two formal variables with rational
/// coefficients, graded by total degree.
#[derive(Clone, Debug, PartialEq)]
struct Poly2 {
    trunc: u32,
    terms: BTreeMap<(u32, u32), Rat>,
}

impl Poly2 {
    fn zero(trunc: u32) -> Self {
        Poly2 { trunc, terms: BTreeMap::new() }
    }

    fn add_term(&mut self, wd: u32, td: u32, c: Rat) {
        if wd + td > self.trunc || c.is_zero() {
            return;
        }
        let e = self.terms.entry((wd, td)).or_insert_with(Rat::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&(wd, td));
        }
    }

    fn add(&mut self, other: &Poly2) {
        for (&(wd, td), c) in &other.terms {
            self.add_term(wd, td, *c);
        }
    }

    fn mul(&self, other: &Poly2) -> Poly2 {
        let mut out = Poly2::zero(self.trunc.min(other.trunc));
        for (&(aw, at), ac) in &self.terms {
            for (&(bw, bt), bc) in &other.terms {
                if aw + bw + at + bt <= out.trunc {
                    out.add_term(aw + bw, at + bt, *ac * *bc);
                }
            }
        }
        out
    }

    fn scaled(&self, c: Rat) -> Poly2 {
        let mut out = Poly2::zero(self.trunc);
        for (&(wd, td), a) in &self.terms {
            out.add_term(wd, td, *a * c);
        }
        out
    }

    fn coeff(&self, wd: u32, td: u32) -> Rat {
        self.terms.get(&(wd, td)).copied().unwrap_or_else(Rat::zero)
    }

    /// `Li_2` composed with a series of zero constant term:
    /// `sum_k u^k / k^2` up to the truncation degree.
    fn li2_compose(u: &Poly2) -> Poly2 {
        assert!(u.coeff(0, 0).is_zero(), "composition needs a zero constant term");
        let mut acc = Poly2::zero(u.trunc);
        let mut pow = Poly2::zero(u.trunc);
        pow.add_term(0, 0, Rat::one());
        for k in 1..=i128::from(u.trunc) {
            pow = pow.mul(u);
            if pow.terms.is_empty() {
                break;
            }
            acc.add(&pow.scaled(Rat::new(1, k * k)));
        }
        acc
    }
}

/// The combination `Li2((t-w)/(t-z)) - Li2(t/(t-z)) - Li2(w/z)` expanded
/// through total degree `order` in `W = w/z` and `T = t/z`.
fn expansion_series(order: u32) -> Poly2 {
    // t/(t-z) = -T/(1-T) = -(T + T^2 + ...)
    let mut u_tz = Poly2::zero(order);
    for j in 1..=order {
        u_tz.add_term(0, j, -Rat::one());
    }
    // (t-w)/(t-z) = (W - T)/(1 - T) = (W - T)(1 + T + T^2 + ...)
    let mut geom = Poly2::zero(order);
    for j in 0..=order {
        geom.add_term(0, j, Rat::one());
    }
    let mut w_minus_t = Poly2::zero(order);
    w_minus_t.add_term(1, 0, Rat::one());
    w_minus_t.add_term(0, 1, -Rat::one());
    let u_tw = w_minus_t.mul(&geom);
    // Li2(w/z) = sum W^k / k^2
    let mut li_w = Poly2::zero(order);
    for k in 1..=i128::from(order) {
        li_w.add_term(k as u32, 0, Rat::new(1, k * k));
    }
    let mut s = Poly2::li2_compose(&u_tw);
    let neg = Poly2::li2_compose(&u_tz);
    for (&(wd, td), c) in &neg.terms {
        s.add_term(wd, td, -*c);
    }
    for (&(wd, td), c) in &li_w.terms {
        s.add_term(wd, td, -*c);
    }
    s
}

/// Result of the double-expansion identity check.
#[derive(Clone, Debug)]
pub struct ExpansionIdentityReport {
    /// Total degree through which coefficients were compared.
    pub order: u32,
    /// Number of coefficients compared.
    pub coefficients_checked: u64,
    /// First failing position as `(n, m)` exponents of `z^-n w^m t^(n-m)`.
    pub first_failure: Option<(u32, u32)>,
}

impl ExpansionIdentityReport {
    pub fn passed(&self) -> bool {
        self.first_failure.is_none()
    }
}

/// Verifies the expansion used to resum the normal-ordered double sum:
/// inside `|t| < |w| < |z|`,
///
/// ```text
/// Li2((t-w)/(t-z)) - Li2(t/(t-z)) - Li2(w/z)
///   = sum_{n > m >= 1} t^(n-m) z^-n w^m / (n m),
/// ```
///
/// checked exactly through total degree `order` by composing the `Li_2`
/// series with the rational substitutions in the variables `W = w/z`,
/// `T = t/z` (so `z^-n w^m t^(n-m)` is the coefficient of `W^m T^(n-m)`).
/// All off-pattern coefficients, including the absent `m = n` band, must
/// vanish.
pub fn expansion_identity_check(order: u32) -> ExpansionIdentityReport {
    let s = expansion_series(order);
    let mut checked = 0u64;
    let mut first_failure = None;
    'outer: for m in 0..=order {
        for d in 0..=(order - m) {
            let n = m + d;
            let expect = if m >= 1 && d >= 1 {
                Rat::new(1, i128::from(n) * i128::from(m))
            } else {
                Rat::zero()
            };
            checked += 1;
            if s.coeff(m, d) != expect {
                first_failure = Some((n, m));
                break 'outer;
            }
        }
    }
    ExpansionIdentityReport { order, coefficients_checked: checked, first_failure }
}

/// Result of the alternating beta-sum identity check.
#[derive(Clone, Debug)]
pub struct BetaSumReport {
    /// `sum_{n=0}^{k} (-1)^n C(k,n) / (n + j)`.
    pub lhs: Rat,
    /// `1 / (j C(j+k, j))`.
    pub rhs: Rat,
    pub passed: bool,
}

/// Checks the Euler beta evaluation
/// `sum_{n=0}^{k} (-1)^n C(k,n)/(n+j) = 1/(j C(j+k,j))` in exact
/// arithmetic; it converts the inner mode sums of the oracle into the
/// `1/(n m)` coefficients resummed by the dilogarithm.  Requires `j >= 1`.
pub fn beta_sum_identity_check(j: u32, k: u32) -> BetaSumReport {
    assert!(j >= 1, "the identity needs j >= 1");
    let mut lhs = Rat::zero();
    for n in 0..=i128::from(k) {
        let sign = if n % 2 == 1 { -1 } else { 1 };
        lhs += Rat::new(sign * binom_i128(i128::from(k), n), n + i128::from(j));
    }
    let rhs = Rat::new(1, i128::from(j) * binom_i128(i128::from(j + k), i128::from(j)));
    BetaSumReport { lhs, rhs, passed: lhs == rhs }
}

/// Result of the exhaustive small-winding comparison of the oracle and the
/// closed form.
#[derive(Clone, Debug)]
pub struct WindingSweepReport {
    /// Ratio order of the compared series.
    pub order: u32,
    /// Number of winding triples compared (both insertion orders each).
    pub triples_checked: u64,
    /// First failing triple `(alpha.w, beta.w, gamma.w)`.
    pub first_failure: Option<[[i64; 3]; 3]>,
}

impl WindingSweepReport {
    pub fn passed(&self) -> bool {
        self.first_failure.is_none()
    }
}

/// Compares the oracle against the closed form as exact series through
/// `order`, for every winding triple with components in `{-1, 0, 1}` and
/// for both insertion orders, with `delta = alpha + beta + gamma`.
///
/// The module side is organised in blocks of fixed `gamma`: the 27 inner
/// insertions of a block are computed once and shared by every outer
/// contraction, and the reversed ordering of `(alpha, beta)` is read off the
/// direct value of `(beta, alpha)` by renaming the two insertion variables,
/// which is the same operator computation step for step (pinned against the
/// independently computed reversed pipeline by a unit test).  The closed
/// sides of the two orderings stay what they are in [`four_point_closed`]
/// and [`swapped_closed_series`]: `exp(+eps L(w/z))` against the direct
/// values and the reversed expansion `exp(-eps L(z/w))` against the renamed
/// ones, cached over the few distinct `((alpha,beta), eps)` pairs.
pub fn four_point_windings_sweep(alg: &ModeAlgebra, order: u32) -> WindingSweepReport {
    let vals = [-1i64, 0, 1];
    let mut windings = Vec::with_capacity(27);
    for &a in &vals {
        for &b in &vals {
            for &c in &vals {
                windings.push([a, b, c]);
            }
        }
    }
    let ctx = SymbolicCtx;
    let mut closed_cache: BTreeMap<(i64, i64), (RatSeries, RatSeries)> = BTreeMap::new();
    let mut triples_checked = 0u64;
    let mut first_failure = None;
    'blocks: for &cw in &windings {
        let gamma = GroundLabel::winding(cw);
        let ket = FockState::<VarLogPoly>::vacuum(gamma);
        let mids: Vec<FockState<VarLogPoly>> = windings
            .par_iter()
            .map(|&bw| insert_vertex_ket(alg, &ctx, Var::W, &GroundLabel::winding(bw), &ket, order))
            .collect();
        let raw: Vec<VarLogPoly> = (0..27 * 27)
            .into_par_iter()
            .map(|i| {
                let alpha = GroundLabel::winding(windings[i / 27]);
                let beta = GroundLabel::winding(windings[i % 27]);
                let delta = alpha + beta + gamma;
                bra_contract(alg, &ctx, Var::Z, &alpha, &delta, &mids[i % 27])
            })
            .collect();
        for (ai, &aw) in windings.iter().enumerate() {
            let alpha = GroundLabel::winding(aw);
            for (bi, &bw) in windings.iter().enumerate() {
                let beta = GroundLabel::winding(bw);
                let delta = alpha + beta + gamma;
                let key = (alpha.pairing(&beta), epsilon_triple(aw, bw, cw));
                let (closed, swapped_expect) = closed_cache
                    .entry(key)
                    .or_insert_with(|| {
                        (closed_ratio_series(key.0, key.1, order), closed_ratio_series(key.0, -key.1, order))
                    })
                    .clone();
                let direct = extract_ratio_series(
                    &raw[ai * 27 + bi],
                    Var::W,
                    Var::Z,
                    beta.pairing(&gamma),
                    alpha.pairing(&(delta - alpha)),
                    order,
                );
                let swapped = extract_ratio_series(
                    &raw[bi * 27 + ai].swap_vars(Var::Z, Var::W),
                    Var::Z,
                    Var::W,
                    alpha.pairing(&gamma),
                    beta.pairing(&(delta - beta)),
                    order,
                );
                triples_checked += 1;
                if !(direct - closed).is_zero() || !(swapped - swapped_expect).is_zero() {
                    first_failure = Some([aw, bw, cw]);
                    break 'blocks;
                }
            }
        }
    }
    WindingSweepReport { order, triples_checked, first_failure }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::rogers_l_real;

    fn ratf(r: &Rat) -> f64 {
        *r.numer() as f64 / *r.denom() as f64
    }

    fn e(i: usize) -> [i64; 3] {
        let mut v = [0i64; 3];
        v[i - 1] = 1;
        v
    }

    #[test]
    fn epsilon_triple_is_the_determinant() {
        assert_eq!(epsilon_triple(e(1), e(2), e(3)), 1);
        assert_eq!(epsilon_triple(e(2), e(1), e(3)), -1);
        assert_eq!(epsilon_triple(e(1), e(1), e(3)), 0);
        assert_eq!(epsilon_triple([1, 0, 0], [0, 2, 0], [0, 0, 4]), 8);
        assert_eq!(epsilon_triple([1, 2, 3], [1, 2, 3], [4, 5, 6]), 0);
    }

    #[test]
    fn unit_winding_series_starts_with_the_half_log() {
        let alpha = GroundLabel::winding(e(1));
        let beta = GroundLabel::winding(e(2));
        let gamma = GroundLabel::winding(e(3));
        let delta = alpha + beta + gamma;
        let out = four_point_closed(&delta, &alpha, &beta, &gamma, 1);
        assert!(!out.label_mismatch);
        assert_eq!(out.series.coeff(0, 0), Rat::one());
        assert_eq!(out.series.coeff(1, 0), Rat::one());
        assert_eq!(out.series.coeff(1, 1), Rat::new(-1, 2));
    }

    #[test]
    fn coplanar_windings_give_the_trivial_series() {
        let alpha = GroundLabel::winding(e(1));
        let beta = GroundLabel::winding(e(2));
        let gamma = GroundLabel::winding([1, 1, 0]);
        let delta = alpha + beta + gamma;
        let out = four_point_closed(&delta, &alpha, &beta, &gamma, 6);
        assert_eq!(out.series, TruncatedLogSeries::one(6));
        assert!(out.form.dilogs.is_empty());
    }

    #[test]
    fn winding_momentum_pair_reduces_to_the_binomial() {
        let alpha = GroundLabel::winding(e(1));
        let beta = GroundLabel::new([0; 3], e(1));
        let gamma = GroundLabel::zero();
        let delta = alpha + beta + gamma;
        let out = four_point_closed(&delta, &alpha, &beta, &gamma, 6);
        assert_eq!(out.form.binomials, vec![((Var::Z, Var::W), 1)]);
        assert!(out.form.dilogs.is_empty());
        assert_eq!(out.series, TruncatedLogSeries::one_minus_x_pow(1, 6));
    }

    #[test]
    fn mismatched_labels_flag_and_vanish() {
        let alpha = GroundLabel::winding(e(1));
        let beta = GroundLabel::winding(e(2));
        let gamma = GroundLabel::winding(e(3));
        let delta = GroundLabel::zero();
        let closed = four_point_closed(&delta, &alpha, &beta, &gamma, 4);
        assert!(closed.label_mismatch);
        assert!(closed.series.is_zero());
        let alg = ModeAlgebra::twisted();
        let oracle = four_point_oracle(&alg, &delta, &alpha, &beta, &gamma, 4);
        assert!(oracle.label_mismatch);
        assert!(oracle.series.is_zero());
    }

    #[test]
    fn oracle_matches_the_closed_series_for_unit_windings() {
        let alg = ModeAlgebra::twisted();
        let alpha = GroundLabel::winding(e(1));
        let beta = GroundLabel::winding(e(2));
        let gamma = GroundLabel::winding(e(3));
        let delta = alpha + beta + gamma;
        let closed = four_point_closed(&delta, &alpha, &beta, &gamma, 6);
        let oracle = four_point_oracle(&alg, &delta, &alpha, &beta, &gamma, 6);
        assert_eq!(oracle.series, closed.series);
    }

    #[test]
    fn oracle_matches_the_closed_series_with_momenta() {
        let alg = ModeAlgebra::twisted();
        let alpha = GroundLabel::winding(e(1));
        let beta = GroundLabel::new(e(2), e(1));
        let gamma = GroundLabel::winding(e(3));
        let delta = alpha + beta + gamma;
        assert_eq!(alpha.pairing(&beta), 1);
        let closed = four_point_closed(&delta, &alpha, &beta, &gamma, 5);
        let oracle = four_point_oracle(&alg, &delta, &alpha, &beta, &gamma, 5);
        assert_eq!(oracle.series, closed.series);
    }

    #[test]
    fn flux_off_oracle_is_the_bare_binomial() {
        let alg = ModeAlgebra::untwisted();
        let alpha = GroundLabel::winding(e(1));
        let beta = GroundLabel::new(e(2), e(1));
        let gamma = GroundLabel::winding(e(3));
        let delta = alpha + beta + gamma;
        let oracle = four_point_oracle(&alg, &delta, &alpha, &beta, &gamma, 6);
        assert_eq!(oracle.series, TruncatedLogSeries::one_minus_x_pow(1, 6));
        for (_, p, _) in oracle.series.terms() {
            assert_eq!(p, 0);
        }
    }

    #[test]
    fn swapped_oracle_flips_the_rogers_exponent() {
        let alg = ModeAlgebra::twisted();
        let alpha = GroundLabel::winding(e(1));
        let beta = GroundLabel::winding(e(2));
        let gamma = GroundLabel::winding(e(3));
        let delta = alpha + beta + gamma;
        let swapped = four_point_swapped(&alg, &delta, &alpha, &beta, &gamma, 6);
        let expect = swapped_closed_series(&alpha, &beta, &gamma, 6);
        assert_eq!(swapped.series, expect);
        assert_eq!(expect, rogers_series(6).scale_int(-1).exp());
    }

    #[test]
    fn reversed_order_is_the_variable_swap_of_the_exchanged_direct_value() {
        // The windings sweep reads the reversed ordering of (alpha, beta)
        // off the direct value of (beta, alpha) with the two insertion
        // variables renamed; check that against the independently computed
        // reversed pipeline at full value level.
        let alg = ModeAlgebra::twisted();
        let ctx = SymbolicCtx;
        let order = 6;
        let samples = [
            ([1, 1, 1], [1, -1, 1], [-1, 1, 1]),
            ([1, 0, -1], [0, 1, 1], [1, 1, 0]),
            ([-1, -1, 1], [1, 1, 1], [0, -1, 1]),
            ([0, 0, 1], [0, 1, 0], [1, 0, 0]),
            ([1, -1, 0], [-1, 0, 1], [-1, 1, -1]),
        ];
        for (aw, bw, cw) in samples {
            let alpha = GroundLabel::winding(aw);
            let beta = GroundLabel::winding(bw);
            let gamma = GroundLabel::winding(cw);
            let delta = alpha + beta + gamma;
            let ket = FockState::<VarLogPoly>::vacuum(gamma);
            let mid = insert_vertex_ket(&alg, &ctx, Var::Z, &alpha, &ket, order);
            let reversed = bra_contract(&alg, &ctx, Var::W, &beta, &delta, &mid);
            let mid = insert_vertex_ket(&alg, &ctx, Var::W, &alpha, &ket, order);
            let renamed =
                bra_contract(&alg, &ctx, Var::Z, &beta, &delta, &mid).swap_vars(Var::Z, Var::W);
            assert_eq!(reversed, renamed, "triple {aw:?} {bw:?} {cw:?}");
        }
    }

    #[test]
    fn swapping_labels_inverts_the_dilog_argument() {
        let alpha = GroundLabel::winding(e(1));
        let beta = GroundLabel::winding(e(2));
        let gamma = GroundLabel::winding(e(3));
        let form = four_point_form(&alpha, &beta, &gamma);
        let swapped = four_point_swapped_form(&alpha, &beta, &gamma);
        assert_eq!(form.dilogs, vec![(1, DilogArg::WOverZ)]);
        assert_eq!(swapped.dilogs, vec![(-1, DilogArg::ZOverW)]);
    }

    #[test]
    fn locality_residual_vanishes_off_the_real_axis() {
        let r = Cplx::new(2.0, 1.0);
        let resid = swap_locality_residual(1, r).unwrap();
        assert!(resid < 1e-10, "residual {resid}");
    }

    #[test]
    fn closed_series_evaluates_to_the_rogers_exponential() {
        let alpha = GroundLabel::winding(e(1));
        let beta = GroundLabel::winding(e(2));
        let gamma = GroundLabel::winding(e(3));
        let delta = alpha + beta + gamma;
        let closed = four_point_closed(&delta, &alpha, &beta, &gamma, 12);
        let x = 0.1f64;
        let got = closed.series.map(ratf).eval(&x, &x.ln());
        let want = rogers_l_real(x).unwrap().exp();
        assert!((got - want).abs() < 1e-12, "got {got}, want {want}");
    }

    fn grid_labels() -> (GroundLabel, GroundLabel, GroundLabel, GroundLabel, GroundLabel) {
        let alpha = GroundLabel::winding(e(1));
        let beta = GroundLabel::winding(e(2));
        let gamma = GroundLabel::winding(e(3));
        let delta = GroundLabel::winding([1, 1, 1]);
        let psi = alpha + beta + gamma + delta;
        (psi, alpha, beta, gamma, delta)
    }

    #[test]
    fn raw_and_closed_five_point_agree_on_the_real_ray() {
        let (psi, alpha, beta, gamma, delta) = grid_labels();
        let (z, w, t) = (Cplx::new(3.6, 0.0), Cplx::new(1.8, 0.0), Cplx::new(0.9, 0.0));
        let closed = five_point_closed(&psi, &alpha, &beta, &gamma, &delta, z, w, t).unwrap();
        let raw = five_point_raw(&psi, &alpha, &beta, &gamma, &delta, z, w, t).unwrap();
        assert!((closed - raw).norm() < 1e-10, "closed {closed}, raw {raw}");
    }

    #[test]
    fn raw_and_closed_five_point_agree_off_the_real_axis() {
        let (psi, alpha, beta, gamma, delta) = grid_labels();
        let (z, w, t) = (Cplx::new(3.2, 0.5), Cplx::new(1.7, -0.3), Cplx::new(0.8, 0.1));
        let closed = five_point_closed(&psi, &alpha, &beta, &gamma, &delta, z, w, t).unwrap();
        let raw = five_point_raw(&psi, &alpha, &beta, &gamma, &delta, z, w, t).unwrap();
        assert!((closed - raw).norm() < 1e-9, "closed {closed}, raw {raw}");
    }

    #[test]
    fn vanishing_ket_leaves_only_the_shifted_factor() {
        let alpha = GroundLabel::winding(e(1));
        let beta = GroundLabel::winding(e(2));
        let gamma = GroundLabel::winding(e(3));
        let delta = GroundLabel::zero();
        let psi = alpha + beta + gamma;
        let (z, w, t) = (Cplx::new(4.0, 0.0), Cplx::new(2.0, 0.0), Cplx::new(0.5, 0.0));
        let closed = five_point_closed(&psi, &alpha, &beta, &gamma, &delta, z, w, t).unwrap();
        let arg = (w - t) / (z - t);
        let want = rogers_l(arg).unwrap().exp();
        assert!((closed - want).norm() < 1e-12);
        let raw = five_point_raw(&psi, &alpha, &beta, &gamma, &delta, z, w, t).unwrap();
        assert!((closed - raw).norm() < 1e-10, "closed {closed}, raw {raw}");
    }

    #[test]
    fn coincident_limit_collapses_to_the_two_insertion_form() {
        let alpha = GroundLabel::winding(e(1));
        let beta = GroundLabel::winding(e(2));
        let gamma = GroundLabel::winding(e(3));
        let delta = GroundLabel::zero();
        let psi = alpha + beta + gamma;
        let (z, w) = (Cplx::new(4.0, 0.0), Cplx::new(2.0, 0.0));
        let closed = five_point_closed(&psi, &alpha, &beta, &gamma, &delta, z, w, Cplx::zero()).unwrap();
        let four = four_point_form(&alpha, &beta, &gamma).eval([z, w, Cplx::one()]).unwrap();
        assert!((closed - four).norm() < 1e-12);
    }

    #[test]
    fn degenerate_windings_give_unit_amplitude() {
        let alpha = GroundLabel::winding(e(1));
        let beta = GroundLabel::winding(e(2));
        let gamma = GroundLabel::winding([1, 1, 0]);
        let delta = GroundLabel::winding([1, -1, 0]);
        let psi = alpha + beta + gamma + delta;
        let (z, w, t) = (Cplx::new(4.0, 0.0), Cplx::new(2.0, 0.0), Cplx::new(0.5, 0.0));
        let closed = five_point_closed(&psi, &alpha, &beta, &gamma, &delta, z, w, t).unwrap();
        assert!((closed - Cplx::one()).norm() < 1e-15);
    }

    #[test]
    fn five_point_oracle_converges_to_the_closed_value() {
        let alg = ModeAlgebra::twisted();
        let alpha = GroundLabel::winding(e(1));
        let beta = GroundLabel::winding(e(2));
        let gamma = GroundLabel::winding(e(3));
        let delta = GroundLabel::zero();
        let psi = alpha + beta + gamma;
        let (z, w, t) = (Cplx::new(8.0, 0.0), Cplx::new(2.0, 0.0), Cplx::new(0.5, 0.0));
        let closed = five_point_closed(&psi, &alpha, &beta, &gamma, &delta, z, w, t).unwrap();
        let oracle = five_point_oracle(&alg, &psi, &alpha, &beta, &gamma, &delta, z, w, t, 10);
        assert!(!oracle.label_mismatch);
        let err = (oracle.value - closed).norm();
        assert!(err < 1e-5, "oracle {}, closed {closed}, err {err}", oracle.value);
    }

    #[test]
    fn vacuum_bra_oracle_matches_the_reduced_exponent() {
        let alg = ModeAlgebra::twisted();
        let alpha = GroundLabel::winding(e(1));
        let beta = GroundLabel::winding(e(2));
        let gamma = GroundLabel::winding(e(3));
        let delta = GroundLabel::winding([-1, -1, -1]);
        let psi = GroundLabel::zero();
        let (z, w, t) = (Cplx::new(8.0, 0.0), Cplx::new(2.0, 0.0), Cplx::new(0.5, 0.0));
        let closed = five_point_closed(&psi, &alpha, &beta, &gamma, &delta, z, w, t).unwrap();
        let oracle = five_point_oracle(&alg, &psi, &alpha, &beta, &gamma, &delta, z, w, t, 10);
        let err = (oracle.value - closed).norm();
        assert!(err < 1e-4, "oracle {}, closed {closed}, err {err}", oracle.value);
    }

    #[test]
    fn factorization_holds_at_the_sample_point() {
        let alpha = GroundLabel::winding(e(1));
        let beta = GroundLabel::winding(e(2));
        let gamma = GroundLabel::winding(e(3));
        let delta = GroundLabel::winding([1, 1, 0]);
        let psi = alpha + beta + gamma + delta;
        let (z, w, t) = (Cplx::new(4.0, 0.0), Cplx::new(2.0, 0.0), Cplx::new(0.5, 0.0));
        let report = factorization_check(&psi, &alpha, &beta, &gamma, &delta, z, w, t).unwrap();
        assert!(report.residual < 1e-10, "residual {}", report.residual);
    }

    #[test]
    fn expansion_identity_holds_through_degree_eight() {
        let report = expansion_identity_check(8);
        assert!(report.passed(), "failed at {:?}", report.first_failure);
        assert!(report.coefficients_checked >= 45);
    }

    #[test]
    fn expansion_coefficient_at_two_one_is_a_half() {
        // Coefficient of t^1 z^-2 w^1, i.e. of W^1 T^1: 1/(n m) at n=2, m=1.
        let s = expansion_series(4);
        assert_eq!(s.coeff(1, 1), Rat::new(1, 2));
        assert_eq!(s.coeff(2, 0), Rat::zero());
        assert_eq!(s.coeff(0, 2), Rat::zero());
    }

    #[test]
    fn beta_sum_identity_is_exact() {
        for j in 1..=8u32 {
            for k in 0..=(8 - j.min(8)) {
                let rep = beta_sum_identity_check(j, k);
                assert!(rep.passed, "failed at j={j} k={k}: {} vs {}", rep.lhs, rep.rhs);
            }
        }
        let rep = beta_sum_identity_check(2, 3);
        assert_eq!(rep.lhs, Rat::new(1, 20));
    }
}
