//! Free-field realization of the mode algebra by a pair of affine currents,
//! used as an independent re-derivation of the twisted bracket table.
//!
//! The currents are `beta_i(v) = sum_n beta_{i,n} v^{-1-n}` and
//! `alpha^i(v) = sum_n alpha^i_n v^{-1-n}` with the level-one affine
//! brackets
//!
//! ```text
//! [beta_{i,m}, beta_{j,n}] = e_{ijk} alpha^k_{m+n}
//! [beta_{i,m}, alpha^j_n]  = m d_i^j d_{m+n,0}
//! [alpha^i_m, alpha^j_n]   = 0
//! ```
//!
//! together with commuting zero-mode coordinates `x^j_0` satisfying
//! `[beta_{i,m}, x^j_0] = d_i^j d_{m,0}`. Under the identification
//! `alpha^k_n = -n x^k_n` (`n != 0`), `alpha^k_0 = W^k`, the substitutions
//!
//! ```text
//! x*_{i,n} = -(1/n) ( beta_{i,n} + e_{ijk} x^j_n W^k
//!                     - (1/2) e_{ijk} sum_m m x^j_{n-m} x^k_m )   (n != 0)
//! P_i      = beta_{i,0} + e_{ijk} x^j_0 W^k
//!            - (1/2) e_{ijk} sum_m m x^j_{-m} x^k_m
//! ```
//!
//! realize every mode-algebra generator except the conjugate zero modes
//! `x*_{i,0}`, which have no substitution here and are skipped. The
//! quadratic sums need no normal ordering because all `x`-type operators
//! commute with one another.
//!
//! The carrier is a highest-weight module: a vacuum killed by all
//! positive modes, with `alpha^j_0`-eigenvalue `w^j`, under polynomials in
//! the creators `beta_{i,-n}`, `alpha^j_{-n}` and the coordinates `x^j_0`.
//! Because `[beta_{i,0}, beta_{j,0}] = e_{ijk} W^k` is not zero, the
//! zero-mode betas cannot share eigenvectors; they act instead as magnetic
//! covariant derivatives in symmetric gauge,
//! `beta_{i,0} = d/dx^i_0 + p_i - (1/2) e_{ijk} x^j_0 w^k`, whose
//! curvature is exactly the required `e_{ijk} w^k`.
//! [`realize_via_currents`] applies both sides of every bracket to a basis
//! of such states and confirms the commutators of the realized operators
//! reproduce [`ModeAlgebra::bracket_generators`], exactly in rational
//! arithmetic.
//!
//! Truncating the quadratic sums at `|m| <= max weight + |n| + margin` is
//! exact, not approximate: an annihilator factor of mode above the state's
//! oscillator weight kills every term, and the only all-creator
//! contributions have `m` strictly between `n` and `0`. The margin is pure
//! safety and a test asserts enlarging it changes nothing.

use std::collections::BTreeMap;

use smallvec::SmallVec;

use crate::algebra::{epsilon, Generator, ModeAlgebra};
use crate::fock::UnsupportedOperator;
use crate::Rat;

/// The two current species. `Beta` sorts before `Alpha`, so the
/// `[beta, beta] -> alpha` correction of a transposition always lands
/// after the remaining betas and insertion sort keeps products canonical.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum CurKind {
    Beta,
    Alpha,
}

/// One creation mode `beta_{dir,-level}` or `alpha^dir_{-level}`,
/// `level > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct CurCreator {
    kind: CurKind,
    dir: u8,
    level: u32,
}

impl CurCreator {
    fn beta(dir: u8, level: u32) -> Self {
        assert!((1..=3).contains(&dir) && level > 0);
        CurCreator { kind: CurKind::Beta, dir, level }
    }

    fn alpha(dir: u8, level: u32) -> Self {
        assert!((1..=3).contains(&dir) && level > 0);
        CurCreator { kind: CurKind::Alpha, dir, level }
    }
}

/// Basis monomial of the affine module: a sorted creator product and a
/// multidegree in the commuting coordinates `x^1_0, x^2_0, x^3_0`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
struct CurMonomial {
    osc: SmallVec<[CurCreator; 8]>,
    x0: [u16; 3],
}

impl CurMonomial {
    fn weight(&self) -> u32 {
        self.osc.iter().map(|c| c.level).sum()
    }
}

/// Finite rational combination of basis monomials over the fixed vacuum.
#[derive(Clone, Debug, PartialEq, Default)]
struct CurState {
    terms: BTreeMap<CurMonomial, Rat>,
}

impl CurState {
    fn zero() -> Self {
        CurState::default()
    }

    #[cfg(test)]
    fn vacuum() -> Self {
        let mut s = CurState::zero();
        s.add_term(CurMonomial::default(), Rat::from_integer(1));
        s
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_term(&mut self, m: CurMonomial, c: Rat) {
        if c == Rat::from_integer(0) {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let merged = *o.get() + c;
                if merged == Rat::from_integer(0) {
                    o.remove();
                } else {
                    *o.get_mut() = merged;
                }
            }
        }
    }

    fn add_state(&mut self, other: &CurState) {
        for (m, c) in &other.terms {
            self.add_term(m.clone(), *c);
        }
    }

    fn scaled(&self, c: Rat) -> CurState {
        let mut out = CurState::zero();
        if c != Rat::from_integer(0) {
            for (m, v) in &self.terms {
                out.add_term(m.clone(), *v * c);
            }
        }
        out
    }

    fn max_weight(&self) -> u32 {
        self.terms.keys().map(CurMonomial::weight).max().unwrap_or(0)
    }
}

/// Evaluation context: flux switch, vacuum eigenvalues, and the safety
/// margin added to the exact quadratic-sum cutoff.
#[derive(Clone, Copy, Debug)]
struct CurrentsCtx {
    flux: bool,
    w: [i64; 3],
    p: [i64; 3],
    cap_margin: i64,
}

/// The two `(j, k, sign)` with `e_{ijk} = sign != 0` for a given `i`.
fn eps_cycle(i: u8) -> [(u8, u8, i64); 2] {
    match i {
        1 => [(2, 3, 1), (3, 2, -1)],
        2 => [(3, 1, 1), (1, 3, -1)],
        3 => [(1, 2, 1), (2, 1, -1)],
        _ => unreachable!("direction index out of range"),
    }
}

/// Inserts a creator that commutes with everything (any `Alpha`) at its
/// sorted position.
fn insert_commuting(osc: &[CurCreator], c: CurCreator) -> Vec<CurCreator> {
    let mut v = osc.to_vec();
    let pos = v.partition_point(|e| *e <= c);
    v.insert(pos, c);
    v
}

/// Left-multiplies the creator `c` onto the sorted creator slice. The only
/// nontrivial transposition is beta past beta, whose correction is an
/// `Alpha` creator commuting with everything, so the recursion terminates
/// with sorted output.
fn mul_cur_creator(flux: bool, c: CurCreator, osc: &[CurCreator]) -> Vec<(Vec<CurCreator>, Rat)> {
    if osc.is_empty() || c <= osc[0] {
        let mut m = Vec::with_capacity(osc.len() + 1);
        m.push(c);
        m.extend_from_slice(osc);
        return vec![(m, Rat::from_integer(1))];
    }
    let head = osc[0];
    let rest = &osc[1..];
    let mut out = Vec::new();
    for (m, r) in mul_cur_creator(flux, c, rest) {
        let mut full = Vec::with_capacity(m.len() + 1);
        full.push(head);
        full.extend_from_slice(&m);
        out.push((full, r));
    }
    if flux && c.kind == CurKind::Beta && head.kind == CurKind::Beta {
        if let Some((k, sg)) = epsilon(c.dir, head.dir) {
            let corr = CurCreator::alpha(k, c.level + head.level);
            out.push((insert_commuting(rest, corr), Rat::from_integer(sg.into())));
        }
    }
    out
}

/// Commutes the annihilator `alpha^k_q` (`q > 0`) through the slice; it
/// contracts only matching beta creators with coefficient `q` and kills
/// the vacuum.
fn sweep_alpha_ann(k: u8, q: i64, osc: &[CurCreator]) -> Vec<(Vec<CurCreator>, Rat)> {
    let mut out = Vec::new();
    for (j, cj) in osc.iter().enumerate() {
        if cj.kind == CurKind::Beta && cj.dir == k && i64::from(cj.level) == q {
            let mut m = osc[..j].to_vec();
            m.extend_from_slice(&osc[j + 1..]);
            out.push((m, Rat::from_integer(q.into())));
        }
    }
    out
}

/// Commutes the annihilator `beta_{i,n}` (`n > 0`) through the slice.
/// Against a beta creator the bracket is an alpha mode: creator, vacuum
/// eigenvalue, or a secondary alpha annihilator sweeping the tail; against
/// an alpha creator it is the level pairing.
fn sweep_beta_ann(
    ctx: &CurrentsCtx,
    i: u8,
    n: i64,
    osc: &[CurCreator],
) -> Vec<(Vec<CurCreator>, Rat)> {
    let mut out = Vec::new();
    for (j, cj) in osc.iter().enumerate() {
        match cj.kind {
            CurKind::Beta => {
                if !ctx.flux {
                    continue;
                }
                let Some((k, sg)) = epsilon(i, cj.dir) else { continue };
                let q = n - i64::from(cj.level);
                let sgr = Rat::from_integer(sg.into());
                if q < 0 {
                    let mut m = osc[..j].to_vec();
                    m.extend_from_slice(&osc[j + 1..]);
                    out.push((
                        insert_commuting(&m, CurCreator::alpha(k, (-q) as u32)),
                        sgr,
                    ));
                } else if q == 0 {
                    let eig = ctx.w[usize::from(k) - 1];
                    if eig != 0 {
                        let mut m = osc[..j].to_vec();
                        m.extend_from_slice(&osc[j + 1..]);
                        out.push((m, sgr * Rat::from_integer(eig.into())));
                    }
                } else {
                    for (m, r) in sweep_alpha_ann(k, q, &osc[j + 1..]) {
                        let mut full = osc[..j].to_vec();
                        full.extend_from_slice(&m);
                        out.push((full, sgr * r));
                    }
                }
            }
            CurKind::Alpha => {
                if cj.dir == i && i64::from(cj.level) == n {
                    let mut m = osc[..j].to_vec();
                    m.extend_from_slice(&osc[j + 1..]);
                    out.push((m, Rat::from_integer(n.into())));
                }
            }
        }
    }
    out
}

/// Applies the current mode `beta_{i,n}`.
fn apply_beta(ctx: &CurrentsCtx, i: u8, n: i64, s: &CurState) -> CurState {
    let mut out = CurState::zero();
    for (mono, c) in &s.terms {
        match n.cmp(&0) {
            std::cmp::Ordering::Less => {
                let cr = CurCreator::beta(i, (-n) as u32);
                for (osc, r) in mul_cur_creator(ctx.flux, cr, &mono.osc) {
                    out.add_term(
                        CurMonomial { osc: SmallVec::from_vec(osc), x0: mono.x0 },
                        *c * r,
                    );
                }
            }
            std::cmp::Ordering::Greater => {
                for (osc, r) in sweep_beta_ann(ctx, i, n, &mono.osc) {
                    out.add_term(
                        CurMonomial { osc: SmallVec::from_vec(osc), x0: mono.x0 },
                        *c * r,
                    );
                }
            }
            std::cmp::Ordering::Equal => {
                // beta_{i,0} is a derivation through the creators (flux
                // corrections) plus a magnetic covariant derivative on the
                // zero-mode sector, d_i + p_i - (1/2) e_{ijk} x^j_0 w^k,
                // whose curvature supplies [beta_{i,0}, beta_{j,0}] =
                // e_{ijk} w^k; bare eigenvalues alone would be
                // inconsistent with that bracket.
                if ctx.flux {
                    for (j, cj) in mono.osc.iter().enumerate() {
                        if cj.kind != CurKind::Beta {
                            continue;
                        }
                        let Some((k, sg)) = epsilon(i, cj.dir) else { continue };
                        let mut m = mono.osc[..j].to_vec();
                        m.extend_from_slice(&mono.osc[j + 1..]);
                        let osc = insert_commuting(&m, CurCreator::alpha(k, cj.level));
                        out.add_term(
                            CurMonomial { osc: SmallVec::from_vec(osc), x0: mono.x0 },
                            *c * Rat::from_integer(sg.into()),
                        );
                    }
                    for (j, k, sg) in eps_cycle(i) {
                        let wk = ctx.w[usize::from(k) - 1];
                        if wk != 0 {
                            let mut x0 = mono.x0;
                            x0[usize::from(j) - 1] += 1;
                            out.add_term(
                                CurMonomial { osc: mono.osc.clone(), x0 },
                                *c * Rat::new(-(sg as i128) * i128::from(wk), 2),
                            );
                        }
                    }
                }
                let deg = mono.x0[usize::from(i) - 1];
                if deg > 0 {
                    let mut x0 = mono.x0;
                    x0[usize::from(i) - 1] -= 1;
                    out.add_term(
                        CurMonomial { osc: mono.osc.clone(), x0 },
                        *c * Rat::from_integer(deg.into()),
                    );
                }
                let eig = ctx.p[usize::from(i) - 1];
                if eig != 0 {
                    out.add_term(mono.clone(), *c * Rat::from_integer(eig.into()));
                }
            }
        }
    }
    out
}

/// Applies the current mode `alpha^j_n`: an abelian creator, the central
/// eigenvalue `w^j` at `n = 0`, or the beta-level pairing as annihilator.
fn apply_alpha(ctx: &CurrentsCtx, j: u8, n: i64, s: &CurState) -> CurState {
    match n.cmp(&0) {
        std::cmp::Ordering::Less => {
            let mut out = CurState::zero();
            let cr = CurCreator::alpha(j, (-n) as u32);
            for (mono, c) in &s.terms {
                let osc = insert_commuting(&mono.osc, cr);
                out.add_term(CurMonomial { osc: SmallVec::from_vec(osc), x0: mono.x0 }, *c);
            }
            out
        }
        std::cmp::Ordering::Equal => s.scaled(Rat::from_integer(ctx.w[usize::from(j) - 1].into())),
        std::cmp::Ordering::Greater => {
            let mut out = CurState::zero();
            for (mono, c) in &s.terms {
                for (osc, r) in sweep_alpha_ann(j, n, &mono.osc) {
                    out.add_term(
                        CurMonomial { osc: SmallVec::from_vec(osc), x0: mono.x0 },
                        *c * r,
                    );
                }
            }
            out
        }
    }
}

/// Multiplication by the coordinate `x^j_0`.
fn apply_x0(j: u8, s: &CurState) -> CurState {
    let mut out = CurState::zero();
    for (mono, c) in &s.terms {
        let mut x0 = mono.x0;
        x0[usize::from(j) - 1] += 1;
        out.add_term(CurMonomial { osc: mono.osc.clone(), x0 }, *c);
    }
    out
}

/// The position mode `x^j_n = -(1/n) alpha^j_n` for `n != 0`, or the
/// coordinate multiplication at `n = 0`.
fn apply_x(ctx: &CurrentsCtx, j: u8, n: i64, s: &CurState) -> CurState {
    if n == 0 {
        apply_x0(j, s)
    } else {
        apply_alpha(ctx, j, n, s).scaled(Rat::new(-1, n.into()))
    }
}

/// The quadratic tail `-(1/2) e_{ijk} sum_m m x^j_{n-m} x^k_m` shared by
/// the conjugate-mode and momentum substitutions, truncated at the exact
/// cutoff plus margin.
fn quadratic_tail(ctx: &CurrentsCtx, i: u8, n: i64, s: &CurState) -> CurState {
    let mut acc = CurState::zero();
    if !ctx.flux {
        return acc;
    }
    let cap = i64::from(s.max_weight()) + n.abs() + ctx.cap_margin;
    for (j, k, sg) in eps_cycle(i) {
        for m in -cap..=cap {
            if m == 0 {
                continue;
            }
            let first = apply_x(ctx, k, m, s);
            if first.is_zero() {
                continue;
            }
            let second = apply_x(ctx, j, n - m, &first);
            acc.add_state(&second.scaled(Rat::new(-sg as i128 * i128::from(m), 2)));
        }
    }
    acc
}

/// The realized conjugate mode `x*_{i,n}`, `n != 0`.
fn apply_xstar(ctx: &CurrentsCtx, i: u8, n: i64, s: &CurState) -> CurState {
    assert!(n != 0);
    let mut acc = apply_beta(ctx, i, n, s);
    if ctx.flux {
        for (j, k, sg) in eps_cycle(i) {
            let wk = ctx.w[usize::from(k) - 1];
            if wk != 0 {
                acc.add_state(&apply_x(ctx, j, n, s).scaled(Rat::from_integer((sg * wk).into())));
            }
        }
    }
    acc.add_state(&quadratic_tail(ctx, i, n, s));
    acc.scaled(Rat::new(-1, n.into()))
}

/// The realized momentum `P_i`.
fn apply_momentum(ctx: &CurrentsCtx, i: u8, s: &CurState) -> CurState {
    let mut acc = apply_beta(ctx, i, 0, s);
    if ctx.flux {
        for (j, k, sg) in eps_cycle(i) {
            let wk = ctx.w[usize::from(k) - 1];
            if wk != 0 {
                acc.add_state(&apply_x0(j, s).scaled(Rat::from_integer((sg * wk).into())));
            }
        }
    }
    acc.add_state(&quadratic_tail(ctx, i, 0, s));
    acc
}

/// Applies the realized form of a mode-algebra generator. The conjugate
/// zero modes `x*_{i,0}` have no substitution and are rejected.
fn apply_realized(
    ctx: &CurrentsCtx,
    g: Generator,
    s: &CurState,
) -> Result<CurState, UnsupportedOperator> {
    match g {
        Generator::Hbar => Ok(s.clone()),
        Generator::W(k) => Ok(s.scaled(Rat::from_integer(ctx.w[usize::from(k) - 1].into()))),
        Generator::X(j, n) => Ok(apply_x(ctx, j, n, s)),
        Generator::XStar(_, 0) => Err(UnsupportedOperator { gen: g }),
        Generator::XStar(i, n) => Ok(apply_xstar(ctx, i, n, s)),
        Generator::P(i) => Ok(apply_momentum(ctx, i, s)),
    }
}

/// All creator monomials of oscillator weight at most `wmax` combined with
/// coordinate multidegrees of total degree at most `x0max`.
fn basis_states(wmax: u32, x0max: u16) -> Vec<CurState> {
    let mut species = Vec::new();
    for dir in 1..=3u8 {
        for level in 1..=wmax {
            species.push(CurCreator::beta(dir, level));
            species.push(CurCreator::alpha(dir, level));
        }
    }
    let mut oscs: Vec<Vec<CurCreator>> = Vec::new();
    let mut stack: Vec<(Vec<CurCreator>, usize, u32)> = vec![(Vec::new(), 0, 0)];
    while let Some((cur, start, wt)) = stack.pop() {
        oscs.push(cur.clone());
        for (idx, c) in species.iter().enumerate().skip(start) {
            if wt + c.level <= wmax {
                let mut nxt = cur.clone();
                nxt.push(*c);
                stack.push((nxt, idx, wt + c.level));
            }
        }
    }
    let mut x0s = Vec::new();
    for a in 0..=x0max {
        for b in 0..=(x0max - a) {
            for c in 0..=(x0max - a - b) {
                x0s.push([a, b, c]);
            }
        }
    }
    let mut states = Vec::new();
    for osc in &oscs {
        // The enumeration emits species in index order; sorting is safe
        // because equal-kind reordering happens only between commuting
        // creators here (corrections are not needed to *define* a basis,
        // only to multiply operators into it).
        let mut sorted = osc.clone();
        sorted.sort();
        for x0 in &x0s {
            let mut s = CurState::zero();
            s.add_term(
                CurMonomial { osc: SmallVec::from_vec(sorted.clone()), x0: *x0 },
                Rat::from_integer(1),
            );
            states.push(s);
        }
    }
    states
}

/// Memoizing wrapper around [`apply_realized`]: application is linear, so
/// the image of each generator on each basis monomial is computed once.
struct Realizer {
    ctx: CurrentsCtx,
    cache: std::collections::HashMap<(Generator, CurMonomial), CurState>,
}

impl Realizer {
    fn new(ctx: CurrentsCtx) -> Self {
        Realizer { ctx, cache: std::collections::HashMap::new() }
    }

    fn apply(&mut self, g: Generator, s: &CurState) -> Result<CurState, UnsupportedOperator> {
        let mut out = CurState::zero();
        for (mono, c) in &s.terms {
            let key = (g, mono.clone());
            if !self.cache.contains_key(&key) {
                let mut single = CurState::zero();
                single.add_term(mono.clone(), Rat::from_integer(1));
                let img = apply_realized(&self.ctx, g, &single)?;
                self.cache.insert(key.clone(), img);
            }
            out.add_state(&self.cache[&key].scaled(*c));
        }
        Ok(out)
    }
}

/// Outcome of the realization sweep.
#[derive(Clone, Debug)]
pub struct CurrentsReport {
    pub max_mode: i64,
    pub flux: bool,
    pub pairs_checked: usize,
    pub states_checked: usize,
    pub first_failure: Option<(Generator, Generator)>,
}

impl CurrentsReport {
    pub fn passed(&self) -> bool {
        self.first_failure.is_none()
    }
}

/// Substitutes the current realization into every bracket of the mode
/// algebra with `|mode| <= max_mode` (conjugate zero modes excluded) and
/// checks, exactly, that commutators of the realized operators reproduce
/// the bracket table on a module basis of oscillator weight `<= max_mode`
/// and coordinate degree `<= 2`.
pub fn realize_via_currents(alg: &ModeAlgebra, max_mode: i64) -> CurrentsReport {
    assert!(max_mode >= 1);
    let ctx = CurrentsCtx {
        flux: alg.flux(),
        w: [1, -1, 2],
        p: [3, 1, -1],
        cap_margin: 2,
    };
    let states = basis_states(max_mode as u32, 2);
    let gens: Vec<Generator> = ModeAlgebra::generators(max_mode)
        .into_iter()
        .filter(|g| !matches!(g, Generator::XStar(_, 0)))
        .collect();

    let mut realizer = Realizer::new(ctx);
    let images: Vec<Vec<CurState>> = gens
        .iter()
        .map(|&g| {
            states
                .iter()
                .map(|s| realizer.apply(g, s).expect("realizable generator"))
                .collect()
        })
        .collect();

    let mut pairs_checked = 0usize;
    let mut first_failure = None;
    for (ia, &a) in gens.iter().enumerate() {
        for (off, &b) in gens[ia..].iter().enumerate() {
            let ib = ia + off;
            pairs_checked += 1;
            if first_failure.is_some() {
                continue;
            }
            let target = alg.bracket_generators(a, b);
            for (is, s) in states.iter().enumerate() {
                let mut lhs = realizer.apply(a, &images[ib][is]).expect("realizable generator");
                lhs.add_state(
                    &realizer
                        .apply(b, &images[ia][is])
                        .expect("realizable generator")
                        .scaled(Rat::from_integer(-1)),
                );
                let mut rhs = CurState::zero();
                for (g, r) in target.terms() {
                    rhs.add_state(&realizer.apply(g, s).expect("bracket image").scaled(r));
                }
                if lhs != rhs {
                    first_failure = Some((a, b));
                    break;
                }
            }
        }
    }
    CurrentsReport {
        max_mode,
        flux: alg.flux(),
        pairs_checked,
        states_checked: states.len(),
        first_failure,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> Rat {
        Rat::new(n.into(), d.into())
    }

    fn ctx(flux: bool) -> CurrentsCtx {
        CurrentsCtx { flux, w: [1, -1, 2], p: [3, 1, -1], cap_margin: 2 }
    }

    fn commutator(
        ctx: &CurrentsCtx,
        a: Generator,
        b: Generator,
        s: &CurState,
    ) -> CurState {
        let mut out = apply_realized(ctx, a, &apply_realized(ctx, b, s).unwrap()).unwrap();
        out.add_state(
            &apply_realized(ctx, b, &apply_realized(ctx, a, s).unwrap())
                .unwrap()
                .scaled(Rat::from_integer(-1)),
        );
        out
    }

    #[test]
    fn positive_modes_kill_the_vacuum() {
        let c = ctx(true);
        let v = CurState::vacuum();
        assert!(apply_beta(&c, 2, 3, &v).is_zero());
        assert!(apply_alpha(&c, 1, 1, &v).is_zero());
    }

    #[test]
    fn conjugate_pair_at_opposite_modes_reads_the_winding() {
        // [x*_{1,1}, x*_{2,-1}] must act as W^3, eigenvalue 2 here.
        let c = ctx(true);
        let v = CurState::vacuum();
        let r = commutator(&c, Generator::x_star(1, 1), Generator::x_star(2, -1), &v);
        assert_eq!(r, v.scaled(rat(2, 1)));
    }

    #[test]
    fn conjugate_against_position_is_diagonal() {
        // [x*_{1,1}, x^2_{-1}] = 0; [x*_{1,1}, x^1_{-1}] = -1 (the 1/m
        // pairing at m = -1).
        let c = ctx(true);
        for s in basis_states(1, 1) {
            let r = commutator(&c, Generator::x_star(1, 1), Generator::x(2, -1), &s);
            assert!(r.is_zero());
            let r = commutator(&c, Generator::x_star(1, 1), Generator::x(1, -1), &s);
            assert_eq!(r, s.scaled(rat(-1, 1)));
        }
    }

    #[test]
    fn momentum_pairs_with_its_coordinate() {
        // [P_1, x^1_0] = 1 as operators.
        let c = ctx(true);
        for s in basis_states(1, 1) {
            let lhs = apply_momentum(&c, 1, &apply_x0(1, &s));
            let mut r = lhs;
            r.add_state(&apply_x0(1, &apply_momentum(&c, 1, &s)).scaled(rat(-1, 1)));
            assert_eq!(r, s);
        }
    }

    #[test]
    fn momentum_rotates_a_conjugate_creator() {
        // [P_1, x*_{2,-1}] = -(1/2) x^3_{-1} on the vacuum.
        let c = ctx(true);
        let v = CurState::vacuum();
        let r = commutator(&c, Generator::p(1), Generator::x_star(2, -1), &v);
        let expect = apply_x(&c, 3, -1, &v).scaled(rat(-1, 2));
        assert_eq!(r, expect);
    }

    #[test]
    fn flux_off_realization_is_free() {
        let c = ctx(false);
        let v = CurState::vacuum();
        // The winding channel closes only through the flux coupling.
        let r = commutator(&c, Generator::x_star(1, 1), Generator::x_star(2, -1), &v);
        assert!(r.is_zero());
        // Without flux the conjugate mode is the bare current mode.
        for s in basis_states(2, 1) {
            let a = apply_xstar(&c, 3, -2, &s);
            let b = apply_beta(&c, 3, -2, &s).scaled(rat(1, 2));
            assert_eq!(a, b);
        }
    }

    #[test]
    fn quadratic_sum_cutoff_is_stable() {
        let tight = ctx(true);
        let wide = CurrentsCtx { cap_margin: 6, ..tight };
        for s in basis_states(2, 1) {
            for n in [-2i64, -1, 1, 2] {
                assert_eq!(apply_xstar(&tight, 1, n, &s), apply_xstar(&wide, 1, n, &s));
            }
            assert_eq!(apply_momentum(&tight, 2, &s), apply_momentum(&wide, 2, &s));
        }
    }

    #[test]
    fn realization_reproduces_the_bracket_table() {
        for flux in [true, false] {
            let alg = ModeAlgebra::with_flux(flux);
            let report = realize_via_currents(&alg, 2);
            assert!(report.passed(), "failure: {:?}", report.first_failure);
            assert_eq!(report.pairs_checked, 34 * 35 / 2);
            assert_eq!(report.states_checked, 340);
        }
    }
}
