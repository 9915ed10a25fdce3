//! The mode Lie algebra of the flux three-torus.
//!
//! Generators: a central `hbar`; winding charges `W^i`; momenta `P_i`;
//! position modes `x^i_n`; and conjugate modes `x*_{i,n}`, with direction
//! indices `i` in `{1,2,3}` and mode numbers `n` in `Z`. The nonzero
//! brackets are
//!
//! * `[x*_{i,n}, x^j_m] = (1/m) d_i^j d_{m,-n} hbar` for `m != 0`,
//! * `[P_i, x^j_0] = d_i^j hbar` and `[W^j, x*_{i,0}] = d_i^j hbar`,
//! * `[P_i, P_j] = -e_{ijk} W^k`,
//! * `[P_i, x*_{j,n}] = -(1/2) e_{ijk} x^k_n`,
//! * `[x*_{i,m}, x*_{j,n}] = ((m+n)/(2mn)) e_{ijk} x^k_{m+n}
//!    + (1/m^2) e_{ijk} W^k d_{m,-n}` for `m, n != 0`,
//! * `[x*_{i,m}, x*_{j,0}] = (1/(2m)) e_{ijk} x^k_m` for `m != 0`,
//!
//! everything else (including `[x*_{i,0}, x*_{j,0}]`) vanishing. The
//! `e_{ijk}` terms are the flux couplings; with the flux switched off the
//! algebra degenerates to a direct sum of Heisenberg pairs, which is the
//! untwisted torus. Mode number defines a grading that every bracket
//! respects.

use std::ops::{Add, AddAssign, Neg, Sub};

use smallvec::SmallVec;

use crate::Rat;

/// Basis generator of the mode algebra. Direction fields are 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Generator {
    /// Central element.
    Hbar,
    /// Winding charge `W^i`.
    W(u8),
    /// Momentum `P_i`.
    P(u8),
    /// Position mode `x^i_n`.
    X(u8, i64),
    /// Conjugate mode `x*_{i,n}`.
    XStar(u8, i64),
}

impl Generator {
    pub fn w(i: u8) -> Self {
        assert!((1..=3).contains(&i));
        Generator::W(i)
    }

    pub fn p(i: u8) -> Self {
        assert!((1..=3).contains(&i));
        Generator::P(i)
    }

    pub fn x(i: u8, n: i64) -> Self {
        assert!((1..=3).contains(&i));
        Generator::X(i, n)
    }

    pub fn x_star(i: u8, n: i64) -> Self {
        assert!((1..=3).contains(&i));
        Generator::XStar(i, n)
    }

    /// Mode-number grading; brackets add grades.
    pub fn grade(self) -> i64 {
        match self {
            Generator::X(_, n) | Generator::XStar(_, n) => n,
            _ => 0,
        }
    }
}

/// Third index and sign of `e_{ijk}` given two distinct indices.
pub(crate) fn epsilon(i: u8, j: u8) -> Option<(u8, i64)> {
    if i == j || !(1..=3).contains(&i) || !(1..=3).contains(&j) {
        return None;
    }
    let k = 6 - i - j;
    let sign = match (i, j) {
        (1, 2) | (2, 3) | (3, 1) => 1,
        _ => -1,
    };
    Some((k, sign))
}

/// Formal rational linear combination of generators.
///
/// Terms live in a small inline buffer sorted by generator; brackets emit at
/// most one basis term, so the buffer almost never spills to the heap.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct LieElement {
    terms: SmallVec<[(Generator, Rat); 2]>,
}

impl LieElement {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn generator(g: Generator) -> Self {
        Self::term(g, Rat::new(1, 1))
    }

    pub fn term(g: Generator, c: Rat) -> Self {
        let mut e = Self::zero();
        if c != Rat::new(0, 1) {
            e.terms.push((g, c));
        }
        e
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of `g` (zero when absent).
    pub fn coeff(&self, g: Generator) -> Rat {
        match self.terms.binary_search_by_key(&g, |&(h, _)| h) {
            Ok(i) => self.terms[i].1,
            Err(_) => Rat::new(0, 1),
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (Generator, Rat)> + '_ {
        self.terms.iter().map(|&(g, c)| (g, c))
    }

    pub fn scale(&self, c: Rat) -> Self {
        let mut e = Self::zero();
        if c != Rat::new(0, 1) {
            for &(g, v) in &self.terms {
                e.terms.push((g, v * c));
            }
        }
        e
    }
}

impl AddAssign for LieElement {
    fn add_assign(&mut self, rhs: Self) {
        for (g, c) in rhs.terms {
            match self.terms.binary_search_by_key(&g, |&(h, _)| h) {
                Ok(i) => {
                    let v = self.terms[i].1 + c;
                    if v == Rat::new(0, 1) {
                        self.terms.remove(i);
                    } else {
                        self.terms[i].1 = v;
                    }
                }
                Err(i) => self.terms.insert(i, (g, c)),
            }
        }
    }
}

impl Add for LieElement {
    type Output = Self;

    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl Sub for LieElement {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Neg for LieElement {
    type Output = Self;

    fn neg(mut self) -> Self {
        for (_, c) in self.terms.iter_mut() {
            *c = -*c;
        }
        self
    }
}

/// The mode algebra with its flux coupling switched on or off.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModeAlgebra {
    flux: bool,
}

impl ModeAlgebra {
    /// Algebra of the torus with unit three-form flux.
    pub fn twisted() -> Self {
        Self { flux: true }
    }

    /// Same generators with every `e_{ijk}` coupling dropped.
    pub fn untwisted() -> Self {
        Self { flux: false }
    }

    pub fn with_flux(flux: bool) -> Self {
        Self { flux }
    }

    pub fn flux(&self) -> bool {
        self.flux
    }

    /// Bracket of two basis generators.
    pub fn bracket_generators(&self, a: Generator, b: Generator) -> LieElement {
        if let Some(v) = self.half_bracket(a, b) {
            v
        } else if let Some(v) = self.half_bracket(b, a) {
            -v
        } else {
            LieElement::zero()
        }
    }

    /// The bracket table in one canonical order per rule; the caller
    /// antisymmetrizes. Arms whose guard fails fall through to `None`, which
    /// means "this ordered pair carries no rule".
    fn half_bracket(&self, a: Generator, b: Generator) -> Option<LieElement> {
        use Generator::*;
        let eps = |i: u8, j: u8| epsilon(i, j).filter(|_| self.flux);
        match (a, b) {
            (XStar(i, n), X(j, m)) if m != 0 && m == -n && i == j => {
                Some(LieElement::term(Hbar, Rat::new(1, i128::from(m))))
            }
            (P(i), P(j)) => Some(match eps(i, j) {
                Some((k, s)) => LieElement::term(W(k), Rat::new(-s as i128, 1)),
                None => LieElement::zero(),
            }),
            (P(i), XStar(j, n)) => Some(match eps(i, j) {
                Some((k, s)) => LieElement::term(X(k, n), Rat::new(-(s as i128), 2)),
                None => LieElement::zero(),
            }),
            (P(i), X(j, 0)) if i == j => Some(LieElement::generator(Hbar)),
            (W(j), XStar(i, 0)) if i == j => Some(LieElement::generator(Hbar)),
            (XStar(i, m), XStar(j, n)) if m != 0 && n != 0 => {
                let mut out = LieElement::zero();
                if let Some((k, s)) = eps(i, j) {
                    if m + n == 0 {
                        // At n = -m the mode term drops and only the winding
                        // term survives; 1/m^2 = 1/n^2 keeps this
                        // antisymmetric.
                        out += LieElement::term(
                            W(k),
                            Rat::new(i128::from(s), i128::from(m) * i128::from(m)),
                        );
                    } else {
                        out += LieElement::term(
                            X(k, m + n),
                            Rat::new(
                                i128::from(s) * i128::from(m + n),
                                2 * i128::from(m) * i128::from(n),
                            ),
                        );
                    }
                }
                Some(out)
            }
            (XStar(i, m), XStar(j, 0)) if m != 0 => Some(match eps(i, j) {
                Some((k, s)) => {
                    LieElement::term(X(k, m), Rat::new(i128::from(s), 2 * i128::from(m)))
                }
                None => LieElement::zero(),
            }),
            _ => None,
        }
    }

    /// Bilinear extension of the bracket.
    pub fn bracket(&self, a: &LieElement, b: &LieElement) -> LieElement {
        let mut out = LieElement::zero();
        for (ga, ca) in a.terms() {
            for (gb, cb) in b.terms() {
                out += self.bracket_generators(ga, gb).scale(ca * cb);
            }
        }
        out
    }

    /// `[a,[b,c]] + [b,[c,a]] + [c,[a,b]]`, which the Jacobi identity says
    /// is zero.
    pub fn jacobiator(&self, a: &LieElement, b: &LieElement, c: &LieElement) -> LieElement {
        self.bracket(a, &self.bracket(b, c))
            + self.bracket(b, &self.bracket(c, a))
            + self.bracket(c, &self.bracket(a, b))
    }

    /// Every generator with mode number in `[-max_mode, max_mode]`.
    pub fn generators(max_mode: i64) -> Vec<Generator> {
        let mut gens = vec![Generator::Hbar];
        for i in 1..=3u8 {
            gens.push(Generator::W(i));
        }
        for i in 1..=3u8 {
            gens.push(Generator::P(i));
        }
        for i in 1..=3u8 {
            for n in -max_mode..=max_mode {
                gens.push(Generator::X(i, n));
            }
        }
        for i in 1..=3u8 {
            for n in -max_mode..=max_mode {
                gens.push(Generator::XStar(i, n));
            }
        }
        gens
    }

    /// Exhaustive Jacobi check over all generator triples with mode numbers
    /// bounded by `max_mode`.
    pub fn verify_jacobi(&self, max_mode: i64) -> JacobiReport {
        let gens = Self::generators(max_mode);
        let elems: Vec<LieElement> = gens.iter().map(|&g| LieElement::generator(g)).collect();
        let mut triples_checked = 0usize;
        let mut first_failure = None;
        for (ia, a) in elems.iter().enumerate() {
            for (ib, b) in elems.iter().enumerate() {
                for (ic, c) in elems.iter().enumerate() {
                    triples_checked += 1;
                    if !self.jacobiator(a, b, c).is_zero() && first_failure.is_none() {
                        first_failure = Some((gens[ia], gens[ib], gens[ic]));
                    }
                }
            }
        }
        JacobiReport {
            triples_checked,
            first_failure,
        }
    }
}

/// Outcome of an exhaustive Jacobi sweep.
#[derive(Clone, Debug)]
pub struct JacobiReport {
    pub triples_checked: usize,
    pub first_failure: Option<(Generator, Generator, Generator)>,
}

impl JacobiReport {
    pub fn passed(&self) -> bool {
        self.first_failure.is_none()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> Rat {
        Rat::new(i128::from(n), i128::from(d))
    }

    #[test]
    fn momentum_brackets_close_on_winding() {
        let alg = ModeAlgebra::twisted();
        let b = alg.bracket_generators(Generator::p(1), Generator::p(2));
        assert_eq!(b, LieElement::term(Generator::w(3), rat(-1, 1)));
        let b = alg.bracket_generators(Generator::p(2), Generator::p(1));
        assert_eq!(b, LieElement::term(Generator::w(3), rat(1, 1)));
    }

    #[test]
    fn mode_pairing() {
        let alg = ModeAlgebra::twisted();
        let b = alg.bracket_generators(Generator::x_star(1, 3), Generator::x(1, -3));
        assert_eq!(b, LieElement::term(Generator::Hbar, rat(-1, 3)));
        // Mismatched direction or mode: no pairing.
        assert!(alg
            .bracket_generators(Generator::x_star(1, 3), Generator::x(2, -3))
            .is_zero());
        assert!(alg
            .bracket_generators(Generator::x_star(1, 3), Generator::x(1, 3))
            .is_zero());
    }

    #[test]
    fn conjugate_modes_close_on_winding_at_opposite_modes() {
        let alg = ModeAlgebra::twisted();
        let b = alg.bracket_generators(Generator::x_star(1, 2), Generator::x_star(2, -2));
        assert_eq!(b, LieElement::term(Generator::w(3), rat(1, 4)));
        // Generic modes close on a position mode instead.
        let b = alg.bracket_generators(Generator::x_star(1, 2), Generator::x_star(2, 3));
        assert_eq!(b, LieElement::term(Generator::x(3, 5), rat(5, 12)));
    }

    #[test]
    fn zero_mode_sector() {
        let alg = ModeAlgebra::twisted();
        assert_eq!(
            alg.bracket_generators(Generator::p(1), Generator::x(1, 0)),
            LieElement::generator(Generator::Hbar)
        );
        assert_eq!(
            alg.bracket_generators(Generator::w(1), Generator::x_star(1, 0)),
            LieElement::generator(Generator::Hbar)
        );
        assert_eq!(
            alg.bracket_generators(Generator::p(1), Generator::x_star(2, 0)),
            LieElement::term(Generator::x(3, 0), rat(-1, 2))
        );
        assert_eq!(
            alg.bracket_generators(Generator::x_star(1, 2), Generator::x_star(2, 0)),
            LieElement::term(Generator::x(3, 2), rat(1, 4))
        );
        assert!(alg
            .bracket_generators(Generator::x_star(1, 0), Generator::x_star(2, 0))
            .is_zero());
    }

    #[test]
    fn winding_is_central_on_nonzero_modes() {
        let alg = ModeAlgebra::twisted();
        assert!(alg
            .bracket_generators(Generator::w(1), Generator::x(2, 5))
            .is_zero());
        assert!(alg
            .bracket_generators(Generator::w(1), Generator::x_star(2, 5))
            .is_zero());
        assert!(alg
            .bracket_generators(Generator::w(1), Generator::p(2))
            .is_zero());
    }

    #[test]
    fn spot_jacobi_triple() {
        let alg = ModeAlgebra::twisted();
        let a = LieElement::generator(Generator::x_star(1, 2));
        let b = LieElement::generator(Generator::x_star(2, 3));
        let c = LieElement::generator(Generator::x_star(3, -5));
        assert!(alg.jacobiator(&a, &b, &c).is_zero());
    }

    #[test]
    fn brackets_add_grades() {
        let alg = ModeAlgebra::twisted();
        for &a in &ModeAlgebra::generators(3) {
            for &b in &ModeAlgebra::generators(3) {
                let br = alg.bracket_generators(a, b);
                for (g, _) in br.terms() {
                    assert_eq!(g.grade(), a.grade() + b.grade(), "{a:?}, {b:?}");
                }
            }
        }
    }

    #[test]
    fn exhaustive_jacobi_small() {
        for alg in [ModeAlgebra::twisted(), ModeAlgebra::untwisted()] {
            let report = alg.verify_jacobi(2);
            assert!(report.passed(), "failure: {:?}", report.first_failure);
            assert_eq!(report.triples_checked, 37usize.pow(3));
        }
    }

    #[test]
    fn untwisted_algebra_drops_flux_couplings() {
        let alg = ModeAlgebra::untwisted();
        assert!(alg
            .bracket_generators(Generator::p(1), Generator::p(2))
            .is_zero());
        assert!(alg
            .bracket_generators(Generator::x_star(1, 2), Generator::x_star(2, -2))
            .is_zero());
        // The pairing and the zero-mode pairings survive.
        assert_eq!(
            alg.bracket_generators(Generator::x_star(1, 3), Generator::x(1, -3)),
            LieElement::term(Generator::Hbar, rat(-1, 3))
        );
        assert_eq!(
            alg.bracket_generators(Generator::p(1), Generator::x(1, 0)),
            LieElement::generator(Generator::Hbar)
        );
    }
}
