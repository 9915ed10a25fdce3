//! Truncated power series in one expansion variable `x` with polynomial
//! dependence on a formal logarithm `l`.
//!
//! A value represents `sum c_{k,p} x^k l^p` with `k <= trunc`; everything of
//! higher x-order is dropped. Terms are keyed by `(k, p)` in a `BTreeMap`, so
//! iteration order, equality, and printed form are canonical. The log power
//! is unconstrained by the truncation in general, but every series built here
//! carries `l` only in combinations `x^k l^p` with `p <= k`, because the logs
//! enter through `x^n l / n` terms.
//!
//! The ring operations never grow the truncation: products and sums of series
//! truncated at different orders are truncated at the smaller one.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use crate::scalar::RingScalar;

/// Power series in `x` and the formal log `l`, truncated past `x^trunc`.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedLogSeries<S: RingScalar> {
    /// Highest retained power of `x`.
    trunc: u32,
    /// Map from `(x_power, log_power)` to coefficient; zeros are pruned.
    terms: BTreeMap<(u32, u32), S>,
}

impl<S: RingScalar> TruncatedLogSeries<S> {
    pub fn zero(trunc: u32) -> Self {
        Self {
            trunc,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(trunc: u32) -> Self {
        Self::monomial(0, 0, S::one(), trunc)
    }

    /// The single term `c x^k l^p`, or zero if `k > trunc`.
    pub fn monomial(k: u32, p: u32, c: S, trunc: u32) -> Self {
        let mut s = Self::zero(trunc);
        if k <= trunc && !c.is_zero() {
            s.terms.insert((k, p), c);
        }
        s
    }

    /// `log(1 - x) = -sum_{n>=1} x^n / n`, exact in any ring containing the
    /// rationals.
    pub fn log_one_minus_x(trunc: u32) -> Self {
        let mut s = Self::zero(trunc);
        for n in 1..=trunc {
            s.terms.insert((n, 0), S::from_ratio(-1, i64::from(n)));
        }
        s
    }

    /// `(1 - x)^e` for any integer `e`, via `exp(e log(1 - x))`.
    pub fn one_minus_x_pow(e: i64, trunc: u32) -> Self {
        Self::log_one_minus_x(trunc).scale_int(e).exp()
    }

    pub fn trunc(&self) -> u32 {
        self.trunc
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of `x^k l^p` (zero when absent).
    pub fn coeff(&self, k: u32, p: u32) -> S {
        self.terms.get(&(k, p)).cloned().unwrap_or_else(S::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, u32, &S)> {
        self.terms.iter().map(|(&(k, p), c)| (k, p, c))
    }

    /// Same series re-truncated at `n <= trunc`.
    pub fn truncated(&self, n: u32) -> Self {
        let mut s = Self::zero(n.min(self.trunc));
        for (&(k, p), c) in &self.terms {
            if k <= s.trunc {
                s.terms.insert((k, p), c.clone());
            }
        }
        s
    }

    pub fn scale(&self, c: &S) -> Self {
        let mut s = Self::zero(self.trunc);
        if c.is_zero() {
            return s;
        }
        for (&key, coeff) in &self.terms {
            let v = coeff.clone() * c.clone();
            if !v.is_zero() {
                s.terms.insert(key, v);
            }
        }
        s
    }

    pub fn scale_int(&self, n: i64) -> Self {
        self.scale(&S::from_ratio(n, 1))
    }

    /// Multiply by the monomial `x^k l^p`.
    pub fn mul_monomial(&self, k: u32, p: u32) -> Self {
        let mut s = Self::zero(self.trunc);
        for (&(k0, p0), c) in &self.terms {
            if k0 + k <= self.trunc {
                s.terms.insert((k0 + k, p0 + p), c.clone());
            }
        }
        s
    }

    fn insert_add(&mut self, key: (u32, u32), c: S) {
        if key.0 > self.trunc || c.is_zero() {
            return;
        }
        let v = match self.terms.remove(&key) {
            Some(old) => old + c,
            None => c,
        };
        if !v.is_zero() {
            self.terms.insert(key, v);
        }
    }

    /// Exponential of a series with no `x^0` terms. The constant term of a
    /// series exponential is transcendental in the coefficient ring, so a
    /// nonzero `x^0` part is a caller bug and panics.
    pub fn exp(&self) -> Self {
        assert!(
            !self.terms.keys().any(|&(k, _)| k == 0),
            "exp needs a series vanishing at x = 0"
        );
        let mut result = Self::one(self.trunc);
        let mut term = Self::one(self.trunc);
        for n in 1..=self.trunc {
            term = (term * self.clone()).scale(&S::from_ratio(1, i64::from(n)));
            if term.is_zero() {
                break;
            }
            result = result + term.clone();
        }
        result
    }

    /// Convert coefficients through `f`, keeping truncation and keys.
    pub fn map<T: RingScalar>(&self, f: impl Fn(&S) -> T) -> TruncatedLogSeries<T> {
        let mut s = TruncatedLogSeries::zero(self.trunc);
        for (&key, c) in &self.terms {
            let v = f(c);
            if !v.is_zero() {
                s.terms.insert(key, v);
            }
        }
        s
    }

    /// Substitute values for `x` and `l`.
    pub fn eval(&self, x: &S, ell: &S) -> S {
        let mut acc = S::zero();
        for (&(k, p), c) in &self.terms {
            acc = acc + c.clone() * pow(x, k) * pow(ell, p);
        }
        acc
    }
}

fn pow<S: RingScalar>(base: &S, e: u32) -> S {
    let mut acc = S::one();
    for _ in 0..e {
        acc = acc * base.clone();
    }
    acc
}

impl<S: RingScalar> Add for TruncatedLogSeries<S> {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        let mut out = Self::zero(self.trunc.min(rhs.trunc));
        for (&key, c) in self.terms.iter().chain(rhs.terms.iter()) {
            out.insert_add(key, c.clone());
        }
        out
    }
}

impl<S: RingScalar> Sub for TruncatedLogSeries<S> {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl<S: RingScalar> Neg for TruncatedLogSeries<S> {
    type Output = Self;

    fn neg(self) -> Self {
        let mut s = Self::zero(self.trunc);
        for (&key, c) in &self.terms {
            s.terms.insert(key, -c.clone());
        }
        s
    }
}

impl<S: RingScalar> Mul for TruncatedLogSeries<S> {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        let mut out = Self::zero(self.trunc.min(rhs.trunc));
        for (&(k1, p1), c1) in &self.terms {
            if k1 > out.trunc {
                break;
            }
            for (&(k2, p2), c2) in &rhs.terms {
                // Keys are ordered by x-power first, so once the combined
                // power overflows the truncation it stays overflowed.
                if k1 + k2 > out.trunc {
                    break;
                }
                out.insert_add((k1 + k2, p1 + p2), c1.clone() * c2.clone());
            }
        }
        out
    }
}
