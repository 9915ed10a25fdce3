//! Fock modules over the winding/momentum lattice and vertex-operator
//! building blocks.
//!
//! A state is a finite combination of terms `m |e^lambda>` where `lambda`
//! is a lattice label carrying winding `w` and momentum `p`, and `m` is a
//! normal-ordered monomial in the creation modes `x*_{i,-n}`, `x^i_{-n}`
//! (`n > 0`). Annihilation modes act by commuting through the monomial with
//! the bracket table of [`crate::algebra::ModeAlgebra`] and killing the bare
//! label; `W^i` acts by the winding eigenvalue; `hbar` acts as `1`. The
//! zero modes `x^i_0`, `x*_{i,0}` and the bare momentum `P_i` have no
//! single-valued action here and are rejected; the diagonal momentum
//! combination `Q_i = P_i - (1/2) e_{ijk} x^j_0 W^k` does act, by the
//! eigenvalue `p_i` plus a nilpotent rotation of the conjugate creators.
//!
//! On top of the plain module action, this file provides the half-field
//! sums attached to a lattice label `alpha` at an insertion point `v`
//! (one of the formal variables `z`, `w`, `t`):
//!
//! ```text
//! alpha(v)_+- = sum_i [ w^i x*_i(v)_+- + p_i x^i(v)_+- ]
//!               + (log v / 2) e_{ijk} w^i W^j x^k(v)_+-
//! ```
//!
//! with `x(v)_+ = sum_{n>0} x_n v^{-n}` and `x(v)_- = sum_{n>0} x_{-n} v^n`,
//! their exponentials, the scaling factor `v^{alpha_l}` (eigenvalue
//! `(alpha, lambda)` under the tautological pairing, plus a nilpotent part),
//! and the lattice shift `e^{alpha_0}` (label translation conjugating the
//! creators). Coefficients live in any [`RingScalar`]; the two shipped
//! evaluation contexts are a symbolic one over [`VarLogPoly`] (exact
//! rationals with formal variable powers and logs) and a numeric one at
//! concrete complex points.

use std::collections::BTreeMap;
use std::fmt;

use smallvec::SmallVec;

use crate::algebra::{Generator, LieElement, ModeAlgebra};
use crate::scalar::RingScalar;
use crate::{Cplx, Rat};

pub mod currents;

/// The two species of creation mode: `x*_{i,-n}` sorts before `x^i_{-n}`.
///
/// The order matters: commuting two `Star` creators produces a `Plain`
/// creator correction, which then sorts after every `Star`, so insertion
/// sort with bracket corrections keeps monomials canonical.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CreatorKind {
    /// A conjugate mode `x*_{i,-n}`.
    Star,
    /// A position mode `x^i_{-n}`.
    Plain,
}

/// One creation mode `x*_{i,-n}` or `x^i_{-n}` with `level = n > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Creator {
    pub kind: CreatorKind,
    /// Direction index, 1-based.
    pub dir: u8,
    /// Mode magnitude `n > 0`; the generator carried is `x^{..}_{-n}`.
    pub level: u32,
}

impl Ord for Creator {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl PartialOrd for Creator {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Creator {
    /// Packs `(kind, dir, level)` into one word so the field-lexicographic
    /// order is a single integer compare.
    fn sort_key(self) -> u64 {
        (self.kind as u64) << 40 | u64::from(self.dir) << 32 | u64::from(self.level)
    }

    pub fn star(dir: u8, level: u32) -> Self {
        assert!((1..=3).contains(&dir) && level > 0);
        Creator { kind: CreatorKind::Star, dir, level }
    }

    pub fn plain(dir: u8, level: u32) -> Self {
        assert!((1..=3).contains(&dir) && level > 0);
        Creator { kind: CreatorKind::Plain, dir, level }
    }

    /// The algebra generator this creator stands for.
    pub fn generator(self) -> Generator {
        let n = -(i64::from(self.level));
        match self.kind {
            CreatorKind::Star => Generator::XStar(self.dir, n),
            CreatorKind::Plain => Generator::X(self.dir, n),
        }
    }
}

/// Normal-ordered product of creators, kept sorted in the `Creator` order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct OscMonomial(SmallVec<[Creator; 8]>);

impl OscMonomial {
    pub fn empty() -> Self {
        OscMonomial(SmallVec::new())
    }

    /// Builds a monomial from arbitrary-order creators, sorting them.
    /// Only valid when no bracket corrections arise (same-kind `Plain`s
    /// commute freely; `Star`s of equal direction too); for the general
    /// product use [`mul_creator`] term by term. Sorting is still always
    /// safe here because this constructor is only used in tests and
    /// callers that pass commuting sets.
    pub fn from_creators(mut cs: Vec<Creator>) -> Self {
        cs.sort();
        OscMonomial(SmallVec::from_vec(cs))
    }

    pub fn creators(&self) -> &[Creator] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Total mode weight `sum n`.
    pub fn weight(&self) -> u32 {
        self.0.iter().map(|c| c.level).sum()
    }
}

/// Lattice label `e^lambda` with winding `w` and momentum `p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct GroundLabel {
    pub w: [i64; 3],
    pub p: [i64; 3],
}

impl GroundLabel {
    pub fn zero() -> Self {
        GroundLabel::default()
    }

    pub fn winding(w: [i64; 3]) -> Self {
        GroundLabel { w, p: [0; 3] }
    }

    pub fn new(w: [i64; 3], p: [i64; 3]) -> Self {
        GroundLabel { w, p }
    }

    /// Tautological pairing `(alpha, beta) = w_a . p_b + p_a . w_b`.
    pub fn pairing(&self, other: &GroundLabel) -> i64 {
        let mut s = 0;
        for i in 0..3 {
            s += self.w[i] * other.p[i] + self.p[i] * other.w[i];
        }
        s
    }

    pub fn is_zero(&self) -> bool {
        *self == GroundLabel::zero()
    }
}

impl std::ops::Add for GroundLabel {
    type Output = GroundLabel;
    fn add(self, o: GroundLabel) -> GroundLabel {
        let mut r = self;
        for i in 0..3 {
            r.w[i] += o.w[i];
            r.p[i] += o.p[i];
        }
        r
    }
}

impl std::ops::Sub for GroundLabel {
    type Output = GroundLabel;
    fn sub(self, o: GroundLabel) -> GroundLabel {
        let mut r = self;
        for i in 0..3 {
            r.w[i] -= o.w[i];
            r.p[i] -= o.p[i];
        }
        r
    }
}

impl std::ops::Neg for GroundLabel {
    type Output = GroundLabel;
    fn neg(self) -> GroundLabel {
        GroundLabel::zero() - self
    }
}

/// Finite combination of `monomial |label>` terms with coefficients in `S`.
#[derive(Clone, Debug, PartialEq)]
pub struct FockState<S: RingScalar> {
    terms: BTreeMap<(OscMonomial, GroundLabel), S>,
}

impl<S: RingScalar> FockState<S> {
    pub fn zero() -> Self {
        FockState { terms: BTreeMap::new() }
    }

    /// The bare state `|e^label>`.
    pub fn vacuum(label: GroundLabel) -> Self {
        let mut s = FockState::zero();
        s.add_term(OscMonomial::empty(), label, S::one());
        s
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&OscMonomial, &GroundLabel, &S)> {
        self.terms.iter().map(|((m, l), c)| (m, l, c))
    }

    pub fn coeff(&self, mono: &OscMonomial, label: &GroundLabel) -> S {
        self.terms
            .get(&(mono.clone(), *label))
            .cloned()
            .unwrap_or_else(S::zero)
    }

    /// Adds `c . mono |label>`, merging and pruning exact zeros.
    pub fn add_term(&mut self, mono: OscMonomial, label: GroundLabel, c: S) {
        if c.is_zero() {
            return;
        }
        let key = (mono, label);
        let entry = self.terms.entry(key);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let merged = o.get().clone() + c;
                if merged.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = merged;
                }
            }
        }
    }

    pub fn add_state(&mut self, other: &FockState<S>) {
        for ((m, l), c) in &other.terms {
            self.add_term(m.clone(), *l, c.clone());
        }
    }

    pub fn scaled(&self, c: &S) -> Self {
        let mut out = FockState::zero();
        for ((m, l), v) in &self.terms {
            out.add_term(m.clone(), *l, v.clone() * c.clone());
        }
        out
    }

    /// Multiplies every coefficient by `c` without rebuilding the term map.
    /// The coefficient rings here have no zero divisors, so no term can
    /// vanish unless `c` itself is zero.
    pub fn scale_in_place(&mut self, c: &S) {
        if c.is_zero() {
            self.terms.clear();
            return;
        }
        for v in self.terms.values_mut() {
            *v = v.clone() * c.clone();
        }
    }

    pub fn max_weight(&self) -> u32 {
        self.terms.keys().map(|(m, _)| m.weight()).max().unwrap_or(0)
    }

    /// Drops every term of oscillator weight above `k`.
    pub fn truncated(&self, k: u32) -> Self {
        let mut out = FockState::zero();
        for ((m, l), c) in &self.terms {
            if m.weight() <= k {
                out.add_term(m.clone(), *l, c.clone());
            }
        }
        out
    }

    /// Coefficient of the oscillator-free term with the given label: the
    /// contraction against the bare bra `<e^bra|`.
    pub fn pair(&self, bra: &GroundLabel) -> S {
        self.coeff(&OscMonomial::empty(), bra)
    }
}

/// Zero-mode and bare-momentum operators have no single-valued action on
/// the lattice module; applying one reports this error.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UnsupportedOperator {
    pub gen: Generator,
}

impl fmt::Display for UnsupportedOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "operator {:?} has no single-valued action on the lattice Fock module",
            self.gen
        )
    }
}

impl std::error::Error for UnsupportedOperator {}

/// Operator labels accepted by [`apply_operator`]: a plain algebra
/// generator, or the diagonal momentum combination
/// `Q_i = P_i - (1/2) e_{ijk} x^j_0 W^k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FockOperator {
    Gen(Generator),
    Momentum(u8),
}

// ---------------------------------------------------------------------------
// Core normal-ordering engine. Every commutator goes through
// `ModeAlgebra::bracket_generators`, so the flux switch and all structure
// constants have a single source of truth.
// ---------------------------------------------------------------------------

/// Scratch buffer for monomials under construction, inline up to the
/// [`OscMonomial`] capacity.
type CreatorBuf = SmallVec<[Creator; 8]>;

/// `slice` with position `j` removed.
fn buf_without(slice: &[Creator], j: usize) -> CreatorBuf {
    let mut b = CreatorBuf::with_capacity(slice.len() - 1);
    b.extend_from_slice(&slice[..j]);
    b.extend_from_slice(&slice[j + 1..]);
    b
}

/// `slice` with positions `j < j2` both removed.
fn buf_without2(slice: &[Creator], j: usize, j2: usize) -> CreatorBuf {
    debug_assert!(j < j2);
    let mut b = CreatorBuf::with_capacity(slice.len() - 2);
    b.extend_from_slice(&slice[..j]);
    b.extend_from_slice(&slice[j + 1..j2]);
    b.extend_from_slice(&slice[j2 + 1..]);
    b
}

/// Inserts a `Plain` creator at its sorted position. Position creators
/// commute exactly with every creator, so no corrections arise.
fn buf_insert_plain(mut b: CreatorBuf, c: Creator) -> CreatorBuf {
    debug_assert_eq!(c.kind, CreatorKind::Plain);
    let pos = b.partition_point(|e| *e <= c);
    b.insert(pos, c);
    b
}

/// Packed key for a sorted monomial inside the single-label vertex chains:
/// one byte per creator (`kind`, `dir`, `level` from the high bit down),
/// first creator in the lowest byte. A real creator has `dir >= 1`, so
/// every occupied byte is nonzero, the empty monomial packs to zero, and
/// distinct monomials pack to distinct keys. Levels above 31 or more than
/// 16 creators do not fit; callers then fall back to the generic state
/// walk.
const PACK_MAX_LEVEL: u32 = 31;
const PACK_MAX_CREATORS: usize = 16;

/// Packed byte of one creator, also used as a dense table index; the lane
/// order agrees with the creator order, so sorted slices have nondecreasing
/// lanes. Only valid below [`PACK_MAX_LEVEL`].
fn creator_lane(c: Creator) -> usize {
    ((c.kind as usize) << 7) | (usize::from(c.dir) << 5) | c.level as usize
}

fn lane_creator(lane: usize) -> Creator {
    Creator {
        kind: if lane >> 7 == 0 { CreatorKind::Star } else { CreatorKind::Plain },
        dir: ((lane >> 5) & 0b11) as u8,
        level: (lane & 0x1f) as u32,
    }
}

fn pack_mono(cs: &[Creator]) -> Option<u128> {
    if cs.len() > PACK_MAX_CREATORS {
        return None;
    }
    let mut k = 0u128;
    for &c in cs.iter().rev() {
        if c.level > PACK_MAX_LEVEL {
            return None;
        }
        k = (k << 8) | creator_lane(c) as u128;
    }
    Some(k)
}

fn unpack_mono(mut k: u128, buf: &mut CreatorBuf) {
    buf.clear();
    while k != 0 {
        buf.push(lane_creator((k & 0xff) as usize));
        k >>= 8;
    }
}

/// Deterministic multiply-rotate hasher for the packed monomial keys: the
/// chain maps must not depend on a per-process random seed, so that
/// floating-point accumulation orders are reproducible from run to run.
#[derive(Default)]
struct MonoHasher(u64);

impl std::hash::Hasher for MonoHasher {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = (self.0.rotate_left(5) ^ u64::from(b)).wrapping_mul(0x517c_c1b7_2722_0a95);
        }
    }

    fn write_u128(&mut self, n: u128) {
        for w in [n as u64, (n >> 64) as u64] {
            self.0 = (self.0.rotate_left(5) ^ w).wrapping_mul(0x517c_c1b7_2722_0a95);
        }
    }
}

type MonoMap<S> = std::collections::HashMap<u128, S, std::hash::BuildHasherDefault<MonoHasher>>;

/// Distinct creators appearing across the keys of a packed map, sorted.
fn packed_lanes<S>(map: &MonoMap<S>) -> Vec<Creator> {
    let mut seen = [false; 256];
    for &key in map.keys() {
        let mut k = key;
        while k != 0 {
            seen[(k & 0xff) as usize] = true;
            k >>= 8;
        }
    }
    (0..256).filter(|&l| seen[l]).map(lane_creator).collect()
}

fn mono_map_add<S: RingScalar>(map: &mut MonoMap<S>, key: u128, v: S) {
    use std::collections::hash_map::Entry;
    match map.entry(key) {
        Entry::Occupied(mut e) => {
            let sum = std::mem::replace(e.get_mut(), S::zero()) + v;
            if sum.is_zero() {
                e.remove();
            } else {
                *e.get_mut() = sum;
            }
        }
        Entry::Vacant(e) => {
            if !v.is_zero() {
                e.insert(v);
            }
        }
    }
}

/// Multiplies the creator `c` onto the sorted monomial `mono` from the left,
/// returning sorted monomials with rational coefficients. The only nonzero
/// creator-creator bracket is `[x*, x*] -> x`, whose image commutes with
/// everything, so the recursion terminates with monomials still sorted.
fn mul_creator(alg: &ModeAlgebra, c: Creator, mono: &[Creator]) -> Vec<(CreatorBuf, Rat)> {
    if mono.is_empty() || c <= mono[0] {
        let mut m = CreatorBuf::with_capacity(mono.len() + 1);
        m.push(c);
        m.extend_from_slice(mono);
        return vec![(m, Rat::from_integer(1))];
    }
    let head = mono[0];
    let rest = &mono[1..];
    let mut out = Vec::new();
    for (m, r) in mul_creator(alg, c, rest) {
        let mut full = CreatorBuf::with_capacity(m.len() + 1);
        full.push(head);
        full.extend_from_slice(&m);
        out.push((full, r));
    }
    let br = alg.bracket_generators(c.generator(), head.generator());
    for (g, r) in br.terms() {
        match g {
            Generator::X(k, n) if n < 0 => {
                let c2 = Creator::plain(k, (-n) as u32);
                for (m, r2) in mul_creator(alg, c2, rest) {
                    out.push((m, r * r2));
                }
            }
            _ => unreachable!("creator-creator bracket must be a position creator"),
        }
    }
    out
}

/// Commutes the annihilator `a` (an `x` or `x*` mode with positive mode
/// number) through the sorted creator slice over the label `label`.
/// Returns the resulting sorted monomials with rational coefficients; the
/// term where `a` reaches the bare label vanishes.
fn sweep_annihilator(
    alg: &ModeAlgebra,
    a: Generator,
    slice: &[Creator],
    label: &GroundLabel,
) -> Vec<(CreatorBuf, Rat)> {
    let mut out = Vec::new();
    for j in 0..slice.len() {
        let br = alg.bracket_generators(a, slice[j].generator());
        if br.is_zero() {
            continue;
        }
        for (g, r) in br.terms() {
            match g {
                Generator::Hbar => {
                    out.push((buf_without(slice, j), r));
                }
                Generator::W(k) => {
                    let eig = label.w[usize::from(k) - 1];
                    if eig != 0 {
                        out.push((buf_without(slice, j), r * Rat::from_integer(eig.into())));
                    }
                }
                Generator::X(k, n) if n < 0 => {
                    out.push((
                        buf_insert_plain(buf_without(slice, j), Creator::plain(k, (-n) as u32)),
                        r,
                    ));
                }
                Generator::X(k, n) if n > 0 => {
                    // Secondary annihilator; it sits at position j, so it
                    // sweeps only the tail. Its own brackets are scalars,
                    // so the recursion stops at depth two.
                    for (m, r2) in
                        sweep_annihilator(alg, Generator::X(k, n), &slice[j + 1..], label)
                    {
                        let mut full = CreatorBuf::with_capacity(j + m.len());
                        full.extend_from_slice(&slice[..j]);
                        full.extend_from_slice(&m);
                        out.push((full, r * r2));
                    }
                }
                _ => unreachable!("annihilator bracket landed outside the oscillator span"),
            }
        }
    }
    out
}

/// Applies a single algebra generator to a state. Supported: `hbar` (acts
/// as 1), `W^i` (winding eigenvalue), and every `x`/`x*` mode with nonzero
/// mode number. Zero modes and `P_i` are rejected.
pub fn apply_generator<S: RingScalar>(
    alg: &ModeAlgebra,
    g: Generator,
    s: &FockState<S>,
) -> Result<FockState<S>, UnsupportedOperator> {
    match g {
        Generator::Hbar => Ok(s.clone()),
        Generator::W(i) => {
            let mut out = FockState::zero();
            for (m, l, c) in s.terms() {
                let eig = l.w[usize::from(i) - 1];
                if eig != 0 {
                    out.add_term(m.clone(), *l, c.clone() * S::from_ratio(eig, 1));
                }
            }
            Ok(out)
        }
        Generator::P(_) | Generator::X(_, 0) | Generator::XStar(_, 0) => {
            Err(UnsupportedOperator { gen: g })
        }
        Generator::X(i, n) | Generator::XStar(i, n) => {
            let creator = n < 0;
            let mut out = FockState::zero();
            for (m, l, c) in s.terms() {
                if creator {
                    let cr = match g {
                        Generator::X(..) => Creator::plain(i, (-n) as u32),
                        _ => Creator::star(i, (-n) as u32),
                    };
                    for (m2, r) in mul_creator(alg, cr, m.creators()) {
                        out.add_term(OscMonomial(m2), *l, c.clone() * S::from_rat(r));
                    }
                } else {
                    for (m2, r) in sweep_annihilator(alg, g, m.creators(), l) {
                        out.add_term(OscMonomial(m2), *l, c.clone() * S::from_rat(r));
                    }
                }
            }
            Ok(out)
        }
    }
}

/// Applies a [`FockOperator`]: a generator via [`apply_generator`], or the
/// diagonal momentum `Q_i`, which multiplies by the eigenvalue `p_i` and
/// rotates each conjugate creator by `ad P_i` (the `x^j_0 W^k` part of `Q_i`
/// commutes with every creator and contributes only the eigenvalue shift
/// that distinguishes `Q` from `P`).
pub fn apply_operator<S: RingScalar>(
    alg: &ModeAlgebra,
    op: FockOperator,
    s: &FockState<S>,
) -> Result<FockState<S>, UnsupportedOperator> {
    match op {
        FockOperator::Gen(g) => apply_generator(alg, g, s),
        FockOperator::Momentum(i) => {
            assert!((1..=3).contains(&i));
            let mut out = FockState::zero();
            for (m, l, c) in s.terms() {
                let eig = l.p[usize::from(i) - 1];
                if eig != 0 {
                    out.add_term(m.clone(), *l, c.clone() * S::from_ratio(eig, 1));
                }
                let slice = m.creators();
                for j in 0..slice.len() {
                    if slice[j].kind != CreatorKind::Star {
                        continue;
                    }
                    let br = alg.bracket_generators(Generator::P(i), slice[j].generator());
                    for (g, r) in br.terms() {
                        match g {
                            Generator::X(k, n) if n < 0 => {
                                let m2 = buf_insert_plain(
                                    buf_without(slice, j),
                                    Creator::plain(k, (-n) as u32),
                                );
                                out.add_term(OscMonomial(m2), *l, c.clone() * S::from_rat(r));
                            }
                            _ => unreachable!("ad P on a creator must be a position creator"),
                        }
                    }
                }
            }
            Ok(out)
        }
    }
}

// ---------------------------------------------------------------------------
// Formal variables, evaluation contexts, and the symbolic coefficient ring.
// ---------------------------------------------------------------------------

/// Formal insertion variable for vertex operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    Z,
    W,
    T,
}

impl Var {
    pub fn index(self) -> usize {
        match self {
            Var::Z => 0,
            Var::W => 1,
            Var::T => 2,
        }
    }
}

/// How the formal variables and their logs embed into the coefficient ring.
pub trait VertexCtx<S: RingScalar> {
    fn var_pow(&self, v: Var, e: i64) -> S;
    fn log_var(&self, v: Var) -> S;
}

/// Coefficient rational of [`VarLogPoly`]: machine-word sized, since the
/// vertex sweeps only ever produce small reduced fractions there. Narrowing
/// from the wide workspace rationals asserts the fit, and every arithmetic
/// overflow panics under the workspace overflow checks, so a value outside
/// this range cannot pass silently.
type CoeffRat = num_rational::Ratio<i64>;

fn narrow_rat(r: Rat) -> CoeffRat {
    let n = i64::try_from(*r.numer()).expect("coefficient numerator exceeds machine word");
    let d = i64::try_from(*r.denom()).expect("coefficient denominator exceeds machine word");
    CoeffRat::new_raw(n, d)
}

fn widen_rat(r: CoeffRat) -> Rat {
    Rat::new_raw(i128::from(*r.numer()), i128::from(*r.denom()))
}

/// Packed exponent key for [`VarLogPoly`]: three biased 16-bit variable
/// powers followed by three 16-bit log powers, so that unsigned order on the
/// packed word is the lexicographic order on `(pow, log)` with signed powers.
type VarLogKey = u128;

const VAR_POW_BIAS: i64 = 1 << 15;

/// Key of the unit monomial: bias in every power lane, no logs. Keys
/// multiply by lane-wise addition minus one copy of this.
const VAR_KEY_UNIT: VarLogKey = ((VAR_POW_BIAS as u128) << 80)
    | ((VAR_POW_BIAS as u128) << 64)
    | ((VAR_POW_BIAS as u128) << 48);

fn pack_varlog_key(pow: [i32; 3], log: [u16; 3]) -> VarLogKey {
    let mut k: u128 = 0;
    for &p in &pow {
        let b = i64::from(p) + VAR_POW_BIAS;
        assert!((0..1 << 16).contains(&b), "variable exponent out of range");
        k = (k << 16) | b as u128;
    }
    for &l in &log {
        k = (k << 16) | u128::from(l);
    }
    k
}

fn unpack_varlog_key(k: VarLogKey) -> ([i32; 3], [u16; 3]) {
    let lane = |s: u32| ((k >> s) & 0xffff) as u16;
    let pow = |s: u32| i32::from(lane(s)) - VAR_POW_BIAS as i32;
    ([pow(80), pow(64), pow(48)], [lane(32), lane(16), lane(0)])
}

/// Exact coefficient ring `Q[z^{+-1}, w^{+-1}, t^{+-1}, log z, log w, log t]`.
///
/// Terms are kept sorted by packed key in a small inline buffer; the hot
/// vertex-operator loops multiply by single monomials, which is a sorted map
/// in place rather than a general product.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct VarLogPoly {
    terms: SmallVec<[(VarLogKey, CoeffRat); 2]>,
}

impl VarLogPoly {
    pub fn new() -> Self {
        VarLogPoly::default()
    }

    pub fn constant(r: Rat) -> Self {
        let mut p = VarLogPoly::new();
        p.add_term([0; 3], [0; 3], r);
        p
    }

    pub fn monomial(pow: [i32; 3], log: [u16; 3], r: Rat) -> Self {
        let mut p = VarLogPoly::new();
        p.add_term(pow, log, r);
        p
    }

    pub fn var_pow_mono(v: Var, e: i64) -> Self {
        let mut pow = [0i32; 3];
        pow[v.index()] = i32::try_from(e).expect("variable exponent out of range");
        VarLogPoly::monomial(pow, [0; 3], Rat::from_integer(1))
    }

    pub fn log_mono(v: Var) -> Self {
        let mut log = [0u16; 3];
        log[v.index()] = 1;
        VarLogPoly::monomial([0; 3], log, Rat::from_integer(1))
    }

    pub fn add_term(&mut self, pow: [i32; 3], log: [u16; 3], r: Rat) {
        self.add_key_term(pack_varlog_key(pow, log), narrow_rat(r));
    }

    fn add_key_term(&mut self, key: VarLogKey, r: CoeffRat) {
        if r == CoeffRat::from_integer(0) {
            return;
        }
        match self.terms.binary_search_by_key(&key, |&(k, _)| k) {
            Ok(i) => {
                let v = self.terms[i].1 + r;
                if v == CoeffRat::from_integer(0) {
                    self.terms.remove(i);
                } else {
                    self.terms[i].1 = v;
                }
            }
            Err(i) => self.terms.insert(i, (key, r)),
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (([i32; 3], [u16; 3]), Rat)> + '_ {
        self.terms.iter().map(|&(k, c)| (unpack_varlog_key(k), widen_rat(c)))
    }

    pub fn coeff(&self, pow: [i32; 3], log: [u16; 3]) -> Rat {
        let key = pack_varlog_key(pow, log);
        match self.terms.binary_search_by_key(&key, |&(k, _)| k) {
            Ok(i) => widen_rat(self.terms[i].1),
            Err(_) => Rat::from_integer(0),
        }
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Product with the single term `r . kb`. Lane sums stay in range for
    /// any exponent the truncated series can produce, so keys translate
    /// additively with one bias removed, preserving the sorted order in
    /// one pass with no re-merging.
    fn mul_monomial_key(&self, kb: VarLogKey, r: CoeffRat) -> VarLogPoly {
        if r == CoeffRat::from_integer(0) {
            return VarLogPoly::new();
        }
        let mut out = VarLogPoly::new();
        out.terms.reserve(self.terms.len());
        for &(k, c) in &self.terms {
            out.terms.push((k + kb - VAR_KEY_UNIT, c * r));
        }
        out
    }

    /// Renames the formal variables by exchanging `a` and `b` (together with
    /// their logs) in every term.
    pub fn swap_vars(&self, a: Var, b: Var) -> VarLogPoly {
        if a == b {
            return self.clone();
        }
        let swap_lanes = |k: VarLogKey, s: u32, t: u32| -> VarLogKey {
            let x = ((k >> s) ^ (k >> t)) & 0xffff;
            k ^ (x << s) ^ (x << t)
        };
        let (ai, bi) = (a.index() as u32, b.index() as u32);
        let mut out = VarLogPoly::new();
        out.terms.reserve(self.terms.len());
        for &(k, c) in &self.terms {
            let k = swap_lanes(k, 80 - 16 * ai, 80 - 16 * bi);
            let k = swap_lanes(k, 32 - 16 * ai, 32 - 16 * bi);
            out.terms.push((k, c));
        }
        out.terms.sort_unstable_by_key(|&(k, _)| k);
        out
    }

    /// Evaluates at concrete points with principal logarithms.
    pub fn eval(&self, pts: [Cplx; 3]) -> Cplx {
        let logs: Vec<Cplx> = pts.iter().map(|z| z.ln()).collect();
        let mut acc = Cplx::new(0.0, 0.0);
        for &(k, r) in &self.terms {
            let (pow, log) = unpack_varlog_key(k);
            let mut t = Cplx::new(*r.numer() as f64 / *r.denom() as f64, 0.0);
            for i in 0..3 {
                if pow[i] != 0 {
                    t *= pts[i].powi(pow[i]);
                }
                for _ in 0..log[i] {
                    t *= logs[i];
                }
            }
            acc += t;
        }
        acc
    }
}

impl std::ops::Add for VarLogPoly {
    type Output = VarLogPoly;
    fn add(self, o: VarLogPoly) -> VarLogPoly {
        let mut r = self;
        for (k, c) in o.terms {
            r.add_key_term(k, c);
        }
        r
    }
}

impl std::ops::Sub for VarLogPoly {
    type Output = VarLogPoly;
    fn sub(self, o: VarLogPoly) -> VarLogPoly {
        self + (-o)
    }
}

impl std::ops::Neg for VarLogPoly {
    type Output = VarLogPoly;
    fn neg(mut self) -> VarLogPoly {
        for (_, c) in self.terms.iter_mut() {
            *c = -*c;
        }
        self
    }
}

impl std::ops::Mul for VarLogPoly {
    type Output = VarLogPoly;
    fn mul(self, o: VarLogPoly) -> VarLogPoly {
        VarLogPoly::mul_refs(&self, &o)
    }
}

impl num_traits::Zero for VarLogPoly {
    fn zero() -> Self {
        VarLogPoly::new()
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

impl num_traits::One for VarLogPoly {
    fn one() -> Self {
        VarLogPoly::constant(Rat::from_integer(1))
    }
}

impl RingScalar for VarLogPoly {
    const EXACT: bool = true;

    fn from_ratio(num: i64, den: i64) -> Self {
        let mut p = VarLogPoly::new();
        p.add_key_term(pack_varlog_key([0; 3], [0; 3]), CoeffRat::new(num, den));
        p
    }

    fn from_rat(r: Rat) -> Self {
        let mut p = VarLogPoly::new();
        p.add_key_term(pack_varlog_key([0; 3], [0; 3]), narrow_rat(r));
        p
    }

    fn mul_refs(a: &Self, b: &Self) -> Self {
        if b.terms.len() == 1 {
            return a.mul_monomial_key(b.terms[0].0, b.terms[0].1);
        }
        if a.terms.len() == 1 {
            return b.mul_monomial_key(a.terms[0].0, a.terms[0].1);
        }
        let mut r = VarLogPoly::new();
        for &(ka, ca) in &a.terms {
            for &(kb, cb) in &b.terms {
                r.add_key_term(ka + kb - VAR_KEY_UNIT, ca * cb);
            }
        }
        r
    }
}

/// Symbolic evaluation context: variables and logs stay formal.
#[derive(Clone, Copy, Debug, Default)]
pub struct SymbolicCtx;

impl VertexCtx<VarLogPoly> for SymbolicCtx {
    fn var_pow(&self, v: Var, e: i64) -> VarLogPoly {
        VarLogPoly::var_pow_mono(v, e)
    }
    fn log_var(&self, v: Var) -> VarLogPoly {
        VarLogPoly::log_mono(v)
    }
}

/// Numeric evaluation context at concrete complex points, principal logs.
#[derive(Clone, Copy, Debug)]
pub struct NumericCtx {
    pub pts: [Cplx; 3],
}

impl NumericCtx {
    pub fn new(z: Cplx, w: Cplx, t: Cplx) -> Self {
        NumericCtx { pts: [z, w, t] }
    }
}

impl VertexCtx<Cplx> for NumericCtx {
    fn var_pow(&self, v: Var, e: i64) -> Cplx {
        self.pts[v.index()].powi(e as i32)
    }
    fn log_var(&self, v: Var) -> Cplx {
        self.pts[v.index()].ln()
    }
}

// ---------------------------------------------------------------------------
// Half-field sums, exponentials, scaling, and lattice shifts.
// ---------------------------------------------------------------------------

fn cross3(a: &[i64; 3], b: &[i64; 3]) -> [i64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Mode-`n` piece of the half field for label `alpha` over a term whose
/// label has winding `label_w`: pairs `(generator, coefficient)` with the
/// mode number `mode` (`n` for the annihilator half, `-n` for the creator
/// half). The `W^j` factor in the log dressing is already replaced by its
/// eigenvalue, and the dressing only exists when the flux is on.
fn half_field_pieces<S: RingScalar, C: VertexCtx<S>>(
    alg: &ModeAlgebra,
    ctx: &C,
    var: Var,
    alpha: &GroundLabel,
    label_w: &[i64; 3],
    mode: i64,
) -> Vec<(Generator, S)> {
    let mut pieces = Vec::new();
    for i in 0..3usize {
        if alpha.w[i] != 0 {
            pieces.push((
                Generator::XStar(i as u8 + 1, mode),
                S::from_ratio(alpha.w[i], 1),
            ));
        }
        if alpha.p[i] != 0 {
            pieces.push((Generator::X(i as u8 + 1, mode), S::from_ratio(alpha.p[i], 1)));
        }
    }
    if alg.flux() {
        let cr = cross3(&alpha.w, label_w);
        for (k, &ck) in cr.iter().enumerate() {
            if ck != 0 {
                pieces.push((
                    Generator::X(k as u8 + 1, mode),
                    ctx.log_var(var) * S::from_ratio(ck, 2),
                ));
            }
        }
    }
    pieces
}

/// Applies the annihilator half `alpha(var)_+` once. Weight strictly
/// decreases, so iterating terminates.
///
/// Rather than sweeping every mode of every piece through every position,
/// this enumerates exactly the nonvanishing channels the bracket table
/// allows: a position creator is contracted by the conjugate piece at its
/// own mode; a conjugate creator is contracted by the position pieces
/// (momentum and log dressing) at its own mode; and the flux coupling
/// between a conjugate piece and a conjugate creator acts at every mode
/// split, leaving a creator image below the creator's level, reading the
/// winding charge at it, and annihilating a later conjugate creator above
/// it. Every coefficient still comes from
/// [`ModeAlgebra::bracket_generators`], and the piecewise sweep is kept in
/// the tests as the reference this must reproduce.
pub fn field_plus<S: RingScalar, C: VertexCtx<S>>(
    alg: &ModeAlgebra,
    ctx: &C,
    var: Var,
    alpha: &GroundLabel,
    s: &FockState<S>,
) -> FockState<S> {
    let mut out = FockState::zero();
    let wdirs = winding_dirs(alpha);
    for (m, l, c) in s.terms() {
        let cr = if alg.flux() { cross3(&alpha.w, &l.w) } else { [0; 3] };
        field_plus_channels(alg, ctx, var, alpha, &wdirs, &cr, &l.w, m.creators(), &mut |mono, factor| {
            out.add_term(OscMonomial(mono), *l, c.clone() * factor);
        });
    }
    out
}

/// Directions in which `alpha` winds, 1-based.
fn winding_dirs(alpha: &GroundLabel) -> SmallVec<[u8; 3]> {
    (1..=3u8).filter(|&i| alpha.w[usize::from(i) - 1] != 0).collect()
}

/// Channel enumeration of one annihilator-half application on a single
/// term over a label with winding `label_w`: calls `emit` with each image
/// monomial and its factor, the source coefficient not included.
/// `wdirs`/`cr` are [`winding_dirs`] and the flux cross product
/// `w_alpha x label_w` (zero with the flux off), precomputed by the caller.
#[allow(clippy::too_many_arguments)]
fn field_plus_channels<S: RingScalar, C: VertexCtx<S>, F: FnMut(CreatorBuf, S)>(
    alg: &ModeAlgebra,
    ctx: &C,
    var: Var,
    alpha: &GroundLabel,
    wdirs: &[u8],
    cr: &[i64; 3],
    label_w: &[i64; 3],
    slice: &[Creator],
    emit: &mut F,
) {
    {
        for (j, cj) in slice.iter().enumerate() {
            let d = usize::from(cj.dir) - 1;
            let lvl = i64::from(cj.level);
            match cj.kind {
                CreatorKind::Plain => {
                    if alpha.w[d] != 0 {
                        let br =
                            alg.bracket_generators(Generator::XStar(cj.dir, lvl), cj.generator());
                        for (g, r) in br.terms() {
                            debug_assert_eq!(g, Generator::Hbar);
                            let f = ctx.var_pow(var, -lvl)
                                * S::from_rat(r * Rat::from_integer(alpha.w[d].into()));
                            emit(buf_without(slice, j), f);
                        }
                    }
                }
                CreatorKind::Star => {
                    if alpha.p[d] != 0 || cr[d] != 0 {
                        let br =
                            alg.bracket_generators(Generator::X(cj.dir, lvl), cj.generator());
                        for (g, r) in br.terms() {
                            debug_assert_eq!(g, Generator::Hbar);
                            let mut pc = S::from_ratio(alpha.p[d], 1);
                            if cr[d] != 0 {
                                pc = pc + ctx.log_var(var) * S::from_ratio(cr[d], 2);
                            }
                            let f = pc * ctx.var_pow(var, -lvl) * S::from_rat(r);
                            emit(buf_without(slice, j), f);
                        }
                    }
                    if !alg.flux() {
                        continue;
                    }
                    for &i in wdirs {
                        if i == cj.dir {
                            continue;
                        }
                        let wc = Rat::from_integer(alpha.w[usize::from(i) - 1].into());
                        for n in 1..lvl {
                            let br =
                                alg.bracket_generators(Generator::XStar(i, n), cj.generator());
                            for (g, r) in br.terms() {
                                match g {
                                    Generator::X(k, nn) if nn < 0 => {
                                        let f = ctx.var_pow(var, -n) * S::from_rat(r * wc);
                                        emit(
                                            buf_insert_plain(
                                                buf_without(slice, j),
                                                Creator::plain(k, (-nn) as u32),
                                            ),
                                            f,
                                        );
                                    }
                                    _ => unreachable!("low-mode flux channel must leave a creator"),
                                }
                            }
                        }
                        let br = alg.bracket_generators(Generator::XStar(i, lvl), cj.generator());
                        for (g, r) in br.terms() {
                            match g {
                                Generator::W(k) => {
                                    let eig = label_w[usize::from(k) - 1];
                                    if eig != 0 {
                                        let f = ctx.var_pow(var, -lvl)
                                            * S::from_rat(r * wc * Rat::from_integer(eig.into()));
                                        emit(buf_without(slice, j), f);
                                    }
                                }
                                _ => unreachable!("level-matched flux channel must read winding"),
                            }
                        }
                        for (j2, cj2) in slice.iter().enumerate().skip(j + 1) {
                            if cj2.kind != CreatorKind::Star {
                                continue;
                            }
                            let n = lvl + i64::from(cj2.level);
                            let br =
                                alg.bracket_generators(Generator::XStar(i, n), cj.generator());
                            for (g, r) in br.terms() {
                                match g {
                                    Generator::X(k, nn) if nn > 0 => {
                                        debug_assert_eq!(nn, i64::from(cj2.level));
                                        if k != cj2.dir {
                                            continue;
                                        }
                                        let br2 = alg.bracket_generators(g, cj2.generator());
                                        for (g2, r2) in br2.terms() {
                                            debug_assert_eq!(g2, Generator::Hbar);
                                            let f = ctx.var_pow(var, -n)
                                                * S::from_rat(r * r2 * wc);
                                            emit(buf_without2(slice, j, j2), f);
                                        }
                                    }
                                    _ => unreachable!(
                                        "high-mode flux channel must leave an annihilator"
                                    ),
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Per-creator factor table of one annihilator-half application over a
/// fixed label, read off [`field_plus_channels`] on singleton and pair
/// slices: `single[lane]` merges every channel that removes exactly that
/// creator, `images[lane]` lists the flux channels replacing it by a lower
/// position creator, and `pairs[lane]` the double-annihilation channels
/// against a later conjugate creator. Every factor depends only on the
/// creators involved and the fixed label data, never on the rest of the
/// term, so a chain can replay the channel walk as table lookups; probing
/// the real channel enumeration keeps each entry on the bracket-table
/// route.
struct PlusTable<S> {
    single: Vec<Option<S>>,
    images: Vec<Vec<(Creator, S)>>,
    pairs: Vec<Vec<(usize, S)>>,
}

#[allow(clippy::too_many_arguments)]
fn build_plus_table<S: RingScalar, C: VertexCtx<S>>(
    alg: &ModeAlgebra,
    ctx: &C,
    var: Var,
    alpha: &GroundLabel,
    wdirs: &[u8],
    cr: &[i64; 3],
    label_w: &[i64; 3],
    present: &[Creator],
) -> PlusTable<S> {
    // Close the candidate set: annihilation only removes creators, and the
    // image channels only produce position creators strictly below the
    // level of an existing conjugate creator.
    let mut cand: Vec<Creator> = present.to_vec();
    let max_star = cand
        .iter()
        .filter(|c| c.kind == CreatorKind::Star)
        .map(|c| c.level)
        .max()
        .unwrap_or(0);
    for d in 1..=3u8 {
        for l in 1..max_star {
            let c = Creator::plain(d, l);
            if !cand.contains(&c) {
                cand.push(c);
            }
        }
    }
    let size = cand.iter().map(|&c| creator_lane(c)).max().map_or(0, |m| m + 1);
    let mut tab = PlusTable {
        single: (0..size).map(|_| None).collect(),
        images: (0..size).map(|_| Vec::new()).collect(),
        pairs: (0..size).map(|_| Vec::new()).collect(),
    };
    for &c in &cand {
        let mut single: Option<S> = None;
        let mut images: Vec<(Creator, S)> = Vec::new();
        field_plus_channels(alg, ctx, var, alpha, wdirs, cr, label_w, &[c], &mut |mono, f| {
            match mono.len() {
                0 => {
                    single = Some(match single.take() {
                        Some(a) => a + f,
                        None => f,
                    })
                }
                1 => match images.iter_mut().find(|(t, _)| *t == mono[0]) {
                    Some((_, a)) => *a = std::mem::replace(a, S::zero()) + f,
                    None => images.push((mono[0], f)),
                },
                _ => unreachable!("a singleton channel keeps at most one creator"),
            }
        });
        images.retain(|(_, f)| !f.is_zero());
        let lane = creator_lane(c);
        tab.single[lane] = single.filter(|f| !f.is_zero());
        tab.images[lane] = images;
    }
    let mut stars: Vec<Creator> =
        cand.iter().copied().filter(|c| c.kind == CreatorKind::Star).collect();
    stars.sort_unstable();
    for (i, &ca) in stars.iter().enumerate() {
        for &cb in &stars[i..] {
            let mut acc: Option<S> = None;
            field_plus_channels(alg, ctx, var, alpha, wdirs, cr, label_w, &[ca, cb], &mut |mono, f| {
                if mono.is_empty() {
                    acc = Some(match acc.take() {
                        Some(a) => a + f,
                        None => f,
                    });
                }
            });
            if let Some(f) = acc.filter(|f| !f.is_zero()) {
                tab.pairs[creator_lane(ca)].push((creator_lane(cb), f));
            }
        }
    }
    tab
}

/// Replays one annihilator-half application on a single term from the
/// factor table: the same emissions as [`field_plus_channels`], with the
/// channels sharing an image pre-merged.
fn apply_plus_table<S: RingScalar, F: FnMut(CreatorBuf, &S)>(
    tab: &PlusTable<S>,
    slice: &[Creator],
    emit: &mut F,
) {
    for (j, &cj) in slice.iter().enumerate() {
        let lane = creator_lane(cj);
        if let Some(f) = &tab.single[lane] {
            emit(buf_without(slice, j), f);
        }
        for (img, f) in &tab.images[lane] {
            emit(buf_insert_plain(buf_without(slice, j), *img), f);
        }
        let prs = &tab.pairs[lane];
        if !prs.is_empty() {
            for (j2, &cj2) in slice.iter().enumerate().skip(j + 1) {
                let lane2 = creator_lane(cj2);
                for (l2, f) in prs {
                    if *l2 == lane2 {
                        emit(buf_without2(slice, j, j2), f);
                    }
                }
            }
        }
    }
}

/// Applies the creator half `alpha(var)_-` once, keeping oscillator weight
/// at most `kmax`.
pub fn field_minus<S: RingScalar, C: VertexCtx<S>>(
    alg: &ModeAlgebra,
    ctx: &C,
    var: Var,
    alpha: &GroundLabel,
    s: &FockState<S>,
    kmax: u32,
) -> FockState<S> {
    let mut out = FockState::zero();
    for (m, l, c) in s.terms() {
        field_minus_channels(alg, ctx, var, alpha, &l.w, m.creators(), kmax, &mut |mono, factor| {
            out.add_term(OscMonomial(mono), *l, c.clone() * factor);
        });
    }
    out
}

/// Channel enumeration of one creator-half application on a single term
/// over a label with winding `label_w`, keeping oscillator weight at most
/// `kmax`; factors exclude the source coefficient.
#[allow(clippy::too_many_arguments)]
fn field_minus_channels<S: RingScalar, C: VertexCtx<S>, F: FnMut(CreatorBuf, S)>(
    alg: &ModeAlgebra,
    ctx: &C,
    var: Var,
    alpha: &GroundLabel,
    label_w: &[i64; 3],
    slice: &[Creator],
    kmax: u32,
    emit: &mut F,
) {
    let wt: u32 = slice.iter().map(|c| c.level).sum();
    if wt >= kmax {
        return;
    }
    let one = Rat::from_integer(1);
    for n in 1..=i64::from(kmax - wt) {
        let vp = ctx.var_pow(var, n);
        for (g, pc) in half_field_pieces(alg, ctx, var, alpha, label_w, -n) {
            let cr = match g {
                Generator::X(i, nn) => Creator::plain(i, (-nn) as u32),
                Generator::XStar(i, nn) => Creator::star(i, (-nn) as u32),
                _ => unreachable!(),
            };
            let factor = pc * vp.clone();
            for (m2, r) in mul_creator(alg, cr, slice) {
                let f = if r == one {
                    factor.clone()
                } else {
                    factor.clone() * S::from_rat(r)
                };
                emit(m2, f);
            }
        }
    }
}

/// `exp(alpha(var)_+)` applied to `s`; the sum is finite because each
/// application lowers oscillator weight.
pub fn vertex_exp_plus<S: RingScalar, C: VertexCtx<S>>(
    alg: &ModeAlgebra,
    ctx: &C,
    var: Var,
    alpha: &GroundLabel,
    s: &FockState<S>,
) -> FockState<S> {
    let mut total = s.clone();
    let mut cur = s.clone();
    let mut k: i64 = 1;
    loop {
        cur = field_plus(alg, ctx, var, alpha, &cur);
        cur.scale_in_place(&S::from_ratio(1, k));
        if cur.is_zero() {
            break;
        }
        total.add_state(&cur);
        k += 1;
    }
    total
}

/// `exp(alpha(var)_-)` applied to `s`, truncated at oscillator weight
/// `kmax`.
///
/// The creator half never moves a term off its lattice label, so the state
/// splits into independent per-label chains; each runs over packed monomial
/// keys when everything fits the packed range, with the generic state walk
/// as the fallback (and the reference the packed chain is tested against).
pub fn vertex_exp_minus<S: RingScalar, C: VertexCtx<S>>(
    alg: &ModeAlgebra,
    ctx: &C,
    var: Var,
    alpha: &GroundLabel,
    s: &FockState<S>,
    kmax: u32,
) -> FockState<S> {
    if kmax > PACK_MAX_CREATORS as u32 {
        return vertex_exp_minus_general(alg, ctx, var, alpha, s, kmax);
    }
    let mut labels: Vec<GroundLabel> = Vec::new();
    for (_, l, _) in s.terms() {
        if !labels.contains(l) {
            labels.push(*l);
        }
    }
    let mut out = FockState::zero();
    let mut buf = CreatorBuf::new();
    for label in labels {
        let mut cur: MonoMap<S> = MonoMap::default();
        for (m, l, c) in s.terms() {
            if *l != label {
                continue;
            }
            match pack_mono(m.creators()) {
                Some(key) => mono_map_add(&mut cur, key, c.clone()),
                None => return vertex_exp_minus_general(alg, ctx, var, alpha, s, kmax),
            }
        }
        for (key, c) in minus_chain_packed(alg, ctx, var, alpha, &label, cur, kmax) {
            unpack_mono(key, &mut buf);
            out.add_term(OscMonomial(buf.clone()), label, c);
        }
    }
    out
}

/// Truncated creator-exponential chain over the packed terms of one label.
/// The mode pieces with their variable dressing depend only on the label,
/// so they are built once and reused by every term of every order.
fn minus_chain_packed<S: RingScalar, C: VertexCtx<S>>(
    alg: &ModeAlgebra,
    ctx: &C,
    var: Var,
    alpha: &GroundLabel,
    label: &GroundLabel,
    mut cur: MonoMap<S>,
    kmax: u32,
) -> MonoMap<S> {
    let mut adds: Vec<(Creator, S)> = Vec::new();
    for n in 1..=i64::from(kmax) {
        let vp = ctx.var_pow(var, n);
        for (g, pc) in half_field_pieces(alg, ctx, var, alpha, &label.w, -n) {
            let c = match g {
                Generator::X(i, nn) => Creator::plain(i, (-nn) as u32),
                Generator::XStar(i, nn) => Creator::star(i, (-nn) as u32),
                _ => unreachable!("a half-field piece is a mode of x or x*"),
            };
            let f = S::mul_refs(&pc, &vp);
            match adds.iter_mut().find(|(t, _)| *t == c) {
                Some((_, a)) => *a = std::mem::replace(a, S::zero()) + f,
                None => adds.push((c, f)),
            }
        }
    }
    adds.retain(|(_, f)| !f.is_zero());
    let one = Rat::from_integer(1);
    let mut total = cur.clone();
    let mut k: i64 = 1;
    let mut k_factorial: i64 = 1;
    let mut buf = CreatorBuf::new();
    while !cur.is_empty() {
        // `cur` stays unscaled at (alpha_-)^k applied; the 1/k! of the
        // exponential is paid once per order when adding into `total`.
        let mut next: MonoMap<S> = MonoMap::default();
        for (&key, c) in &cur {
            unpack_mono(key, &mut buf);
            let wt: u32 = buf.iter().map(|cj| cj.level).sum();
            for (cr2, f) in &adds {
                if wt + cr2.level > kmax {
                    continue;
                }
                for (m2, r) in mul_creator(alg, *cr2, &buf) {
                    let pk = pack_mono(&m2).expect("creator image stays within the packed range");
                    let v = if r == one {
                        S::mul_refs(c, f)
                    } else {
                        S::mul_refs(c, f) * S::from_rat(r)
                    };
                    mono_map_add(&mut next, pk, v);
                }
            }
        }
        k_factorial *= k;
        let scale = S::from_ratio(1, k_factorial);
        for (&key, c) in &next {
            mono_map_add(&mut total, key, S::mul_refs(c, &scale));
        }
        k += 1;
        cur = next;
    }
    total
}

/// Generic-state presentation of [`vertex_exp_minus`], for inputs outside
/// the packed monomial range.
fn vertex_exp_minus_general<S: RingScalar, C: VertexCtx<S>>(
    alg: &ModeAlgebra,
    ctx: &C,
    var: Var,
    alpha: &GroundLabel,
    s: &FockState<S>,
    kmax: u32,
) -> FockState<S> {
    let mut total = s.clone();
    let mut cur = s.clone();
    let mut k: i64 = 1;
    loop {
        cur = field_minus(alg, ctx, var, alpha, &cur, kmax);
        cur.scale_in_place(&S::from_ratio(1, k));
        if cur.is_zero() {
            break;
        }
        total.add_state(&cur);
        k += 1;
    }
    total
}

/// Shift of a bra label by a vertex label: `<e^delta| e^{alpha_0}` pairs
/// like `<e^{delta - alpha}|`.
pub fn zero_mode_shift(alpha: &GroundLabel, bra: &GroundLabel) -> GroundLabel {
    *bra - *alpha
}

/// Exponent produced when `var^{alpha_l}` crosses a label: the tautological
/// pairing `(alpha, kappa)`.
pub fn scaling_weight(alpha: &GroundLabel, kappa: &GroundLabel) -> i64 {
    alpha.pairing(kappa)
}

/// Expands a product over creators where each creator may stay or be
/// replaced by finitely many images that commute with everything
/// (`Plain` creators). `rule` returns the image list for one creator.
fn conjugate_expand<S: RingScalar>(
    creators: &[Creator],
    rule: &mut dyn FnMut(Creator) -> Vec<(Creator, S)>,
    base: S,
) -> Vec<(Vec<Creator>, S)> {
    let mut acc: Vec<(Vec<Creator>, Vec<Creator>, S)> =
        vec![(Vec::new(), Vec::new(), base)];
    for &c in creators {
        let images = rule(c);
        let mut next = Vec::with_capacity(acc.len() * (1 + images.len()));
        for (kept, added, coeff) in acc {
            let mut k2 = kept.clone();
            k2.push(c);
            next.push((k2, added.clone(), coeff.clone()));
            for (img, f) in &images {
                debug_assert_eq!(img.kind, CreatorKind::Plain);
                let mut a2 = added.clone();
                a2.push(*img);
                next.push((kept.clone(), a2, coeff.clone() * f.clone()));
            }
        }
        acc = next;
    }
    acc.into_iter()
        .map(|(mut kept, added, coeff)| {
            for x in added {
                let pos = kept.partition_point(|e| *e <= x);
                kept.insert(pos, x);
            }
            (kept, coeff)
        })
        .collect()
}

fn creator_images_star(alg: &ModeAlgebra, le: &LieElement) -> Vec<(Creator, Rat)> {
    let _ = alg;
    let mut out = Vec::new();
    for (g, r) in le.terms() {
        match g {
            Generator::X(k, n) if n < 0 => out.push((Creator::plain(k, (-n) as u32), r)),
            _ => unreachable!("conjugation image must be a position creator"),
        }
    }
    out
}

/// Applies the scaling factor `var^{alpha_l}`: each term gains
/// `var^{(alpha, label)}`, and each conjugate creator is rotated by the
/// nilpotent part `log(var) . ad(w_alpha . P)`.
pub fn apply_scaling<S: RingScalar, C: VertexCtx<S>>(
    alg: &ModeAlgebra,
    ctx: &C,
    var: Var,
    alpha: &GroundLabel,
    s: &FockState<S>,
) -> FockState<S> {
    let mut out = FockState::zero();
    for (m, l, c) in s.terms() {
        let base = c.clone() * ctx.var_pow(var, scaling_weight(alpha, l));
        let mut rule = |cr: Creator| -> Vec<(Creator, S)> {
            if cr.kind != CreatorKind::Star {
                return Vec::new();
            }
            let mut le = LieElement::zero();
            for i in 0..3usize {
                if alpha.w[i] != 0 {
                    le += alg
                        .bracket_generators(Generator::P(i as u8 + 1), cr.generator())
                        .scale(Rat::from_integer(alpha.w[i].into()));
                }
            }
            creator_images_star(alg, &le)
                .into_iter()
                .map(|(img, r)| (img, ctx.log_var(var) * S::from_rat(r)))
                .collect()
        };
        for (m2, coeff) in conjugate_expand(m.creators(), &mut rule, base) {
            out.add_term(OscMonomial(SmallVec::from_vec(m2)), *l, coeff);
        }
    }
    out
}

/// Applies the lattice shift `e^{alpha_0}` on the ket side: labels
/// translate by `alpha` and each creator is conjugated,
/// `e^A C e^{-A} = C + [A, C]`, with `A = w_alpha . x*_0 + p_alpha . x_0`
/// (the `x_0` part commutes with every creator).
pub fn apply_zero_mode<S: RingScalar>(
    alg: &ModeAlgebra,
    alpha: &GroundLabel,
    s: &FockState<S>,
) -> FockState<S> {
    let mut out = FockState::zero();
    for (m, l, c) in s.terms() {
        let new_label = *l + *alpha;
        let mut rule = |cr: Creator| -> Vec<(Creator, S)> {
            if cr.kind != CreatorKind::Star {
                return Vec::new();
            }
            let mut le = LieElement::zero();
            for i in 0..3usize {
                if alpha.w[i] != 0 {
                    le += alg
                        .bracket_generators(Generator::XStar(i as u8 + 1, 0), cr.generator())
                        .scale(Rat::from_integer(alpha.w[i].into()));
                }
            }
            creator_images_star(alg, &le)
                .into_iter()
                .map(|(img, r)| (img, S::from_rat(r)))
                .collect()
        };
        for (m2, coeff) in conjugate_expand(m.creators(), &mut rule, c.clone()) {
            out.add_term(OscMonomial(SmallVec::from_vec(m2)), new_label, coeff);
        }
    }
    out
}

/// Depth-first expansion of the joined conjugation over one term: each
/// conjugate creator either stays or is replaced by one image from its
/// list, images being position creators that commute with everything.
/// Mirrors [`conjugate_expand`] on packed keys without intermediate
/// allocation.
fn conj_walk_packed<S: RingScalar>(
    imgs: &[Vec<(Creator, S)>],
    slice: &[Creator],
    j: usize,
    kept: &mut CreatorBuf,
    added: &mut CreatorBuf,
    coeff: &S,
    out: &mut MonoMap<S>,
) {
    if j == slice.len() {
        let mut m = kept.clone();
        for &x in added.iter() {
            let pos = m.partition_point(|e| *e <= x);
            m.insert(pos, x);
        }
        let pk = pack_mono(&m).expect("a conjugation image stays within the packed range");
        mono_map_add(out, pk, coeff.clone());
        return;
    }
    let c = slice[j];
    kept.push(c);
    conj_walk_packed(imgs, slice, j + 1, kept, added, coeff, out);
    kept.pop();
    let lane = creator_lane(c);
    if let Some(list) = imgs.get(lane) {
        for (img, f) in list {
            added.push(*img);
            let v = S::mul_refs(coeff, f);
            conj_walk_packed(imgs, slice, j + 1, kept, added, &v, out);
            added.pop();
        }
    }
}

/// Packed-lane route of [`insert_vertex_ket`] after the annihilator
/// exponential: per-label creator chains followed by one conjugation pass.
/// The scaling rotation (`log(var) . ad(w_alpha . P)`) and the lattice
/// shift rotation (`ad(w_alpha . x*_0)`) both act only on conjugate
/// creators and both produce position creators, which the other rotation
/// leaves alone; joining the image lists therefore expands the composition
/// of the two conjugations exactly. `None` when a term falls outside the
/// packed range.
fn insert_vertex_ket_packed<S: RingScalar, C: VertexCtx<S>>(
    alg: &ModeAlgebra,
    ctx: &C,
    var: Var,
    alpha: &GroundLabel,
    s: &FockState<S>,
    kmax: u32,
) -> Option<FockState<S>> {
    if kmax > PACK_MAX_CREATORS as u32 {
        return None;
    }
    let mut labels: Vec<GroundLabel> = Vec::new();
    for (_, l, _) in s.terms() {
        if !labels.contains(l) {
            labels.push(*l);
        }
    }
    let mut out = FockState::zero();
    let mut buf = CreatorBuf::new();
    for label in labels {
        let mut cur: MonoMap<S> = MonoMap::default();
        for (m, l, c) in s.terms() {
            if *l != label {
                continue;
            }
            mono_map_add(&mut cur, pack_mono(m.creators())?, c.clone());
        }
        let total = minus_chain_packed(alg, ctx, var, alpha, &label, cur, kmax);
        let lanes = packed_lanes(&total);
        let size = lanes.iter().map(|&c| creator_lane(c)).max().map_or(0, |m| m + 1);
        let mut imgs: Vec<Vec<(Creator, S)>> = (0..size).map(|_| Vec::new()).collect();
        for &c in &lanes {
            if c.kind != CreatorKind::Star {
                continue;
            }
            let mut rot = LieElement::zero();
            let mut shift = LieElement::zero();
            for i in 0..3usize {
                if alpha.w[i] != 0 {
                    let wr = Rat::from_integer(alpha.w[i].into());
                    rot += alg
                        .bracket_generators(Generator::P(i as u8 + 1), c.generator())
                        .scale(wr);
                    shift += alg
                        .bracket_generators(Generator::XStar(i as u8 + 1, 0), c.generator())
                        .scale(wr);
                }
            }
            let mut list: Vec<(Creator, S)> = Vec::new();
            for (img, r) in creator_images_star(alg, &rot) {
                list.push((img, ctx.log_var(var) * S::from_rat(r)));
            }
            for (img, r) in creator_images_star(alg, &shift) {
                let f = S::from_rat(r);
                match list.iter_mut().find(|(t, _)| *t == img) {
                    Some((_, a)) => *a = std::mem::replace(a, S::zero()) + f,
                    None => list.push((img, f)),
                }
            }
            list.retain(|(_, f)| !f.is_zero());
            imgs[creator_lane(c)] = list;
        }
        let mut conj: MonoMap<S> = MonoMap::default();
        let mut kept = CreatorBuf::new();
        let mut added = CreatorBuf::new();
        for (&key, c) in &total {
            unpack_mono(key, &mut buf);
            conj_walk_packed(&imgs, &buf, 0, &mut kept, &mut added, c, &mut conj);
        }
        let scale = ctx.var_pow(var, scaling_weight(alpha, &label));
        let new_label = label + *alpha;
        for (key, c) in conj {
            unpack_mono(key, &mut buf);
            out.add_term(OscMonomial(buf.clone()), new_label, S::mul_refs(&c, &scale));
        }
    }
    Some(out)
}

/// Full ket-side vertex insertion
/// `e^{alpha_0} var^{alpha_l} e^{alpha(var)_-} e^{alpha(var)_+}` applied to
/// `s`, truncated at oscillator weight `kmax`.
pub fn insert_vertex_ket<S: RingScalar, C: VertexCtx<S>>(
    alg: &ModeAlgebra,
    ctx: &C,
    var: Var,
    alpha: &GroundLabel,
    s: &FockState<S>,
    kmax: u32,
) -> FockState<S> {
    let s1 = vertex_exp_plus(alg, ctx, var, alpha, s);
    if let Some(out) = insert_vertex_ket_packed(alg, ctx, var, alpha, &s1, kmax) {
        return out;
    }
    let s2 = vertex_exp_minus(alg, ctx, var, alpha, &s1, kmax);
    let s3 = apply_scaling(alg, ctx, var, alpha, &s2);
    apply_zero_mode(alg, alpha, &s3)
}

/// Contracts the outermost vertex against a bare bra in one step:
///
/// ```text
/// <e^bra| e^{a_0} v^{a_l} e^{a_-} e^{a_+} |s>
///   = v^{(a, bra - a)} <e^{bra - a}| e^{a_+} |s>
/// ```
///
/// The creator exponential drops because a creator acting on any state
/// leaves at least one oscillator factor, which the bare bra annihilates;
/// conjugating `e^{a_+}` by `e^{a_0}` is the identity here because the only
/// candidate bracket carries `e_{ijk} w^i w^j = 0`.
pub fn bra_contract<S: RingScalar, C: VertexCtx<S>>(
    alg: &ModeAlgebra,
    ctx: &C,
    var: Var,
    alpha: &GroundLabel,
    bra: &GroundLabel,
    s: &FockState<S>,
) -> S {
    let shifted = zero_mode_shift(alpha, bra);
    // The annihilator half never moves a term off its lattice label, so
    // only the terms already over the shifted bra label can contribute;
    // each exponential order is paired off as it is produced instead of
    // accumulating the whole expanded state.
    let mut cur: MonoMap<S> = MonoMap::default();
    for (m, l, c) in s.terms() {
        if *l != shifted {
            continue;
        }
        match pack_mono(m.creators()) {
            Some(key) => mono_map_add(&mut cur, key, c.clone()),
            None => return bra_contract_general(alg, ctx, var, alpha, bra, s),
        }
    }
    let wdirs = winding_dirs(alpha);
    let cr = if alg.flux() { cross3(&alpha.w, &shifted.w) } else { [0; 3] };
    let tab = build_plus_table(alg, ctx, var, alpha, &wdirs, &cr, &shifted.w, &packed_lanes(&cur));
    let mut acc = cur.get(&0).cloned().unwrap_or_else(S::zero);
    let mut k: i64 = 1;
    let mut k_factorial: i64 = 1;
    let mut buf = CreatorBuf::new();
    while !cur.is_empty() {
        // `cur` stays unscaled at (alpha_+)^k applied; only the paired
        // scalar pays the 1/k! of the exponential. Annihilator images never
        // gain creators or levels, so packing cannot fail here.
        let mut next: MonoMap<S> = MonoMap::default();
        for (&key, c) in &cur {
            if key == 0 {
                continue;
            }
            unpack_mono(key, &mut buf);
            apply_plus_table(&tab, &buf, &mut |mono, factor| {
                let pk = pack_mono(&mono).expect("annihilator image stays within the packed range");
                mono_map_add(&mut next, pk, S::mul_refs(c, factor));
            });
        }
        k_factorial *= k;
        if let Some(v) = next.get(&0) {
            acc = acc + v.clone() * S::from_ratio(1, k_factorial);
        }
        k += 1;
        cur = next;
    }
    ctx.var_pow(var, scaling_weight(alpha, &shifted)) * acc
}

/// Generic-state presentation of [`bra_contract`], for states outside the
/// packed monomial range.
fn bra_contract_general<S: RingScalar, C: VertexCtx<S>>(
    alg: &ModeAlgebra,
    ctx: &C,
    var: Var,
    alpha: &GroundLabel,
    bra: &GroundLabel,
    s: &FockState<S>,
) -> S {
    let shifted = zero_mode_shift(alpha, bra);
    let mut cur = FockState::zero();
    for (m, l, c) in s.terms() {
        if *l == shifted {
            cur.add_term(m.clone(), *l, c.clone());
        }
    }
    let mut acc = cur.pair(&shifted);
    let mut k: i64 = 1;
    let mut k_factorial: i64 = 1;
    while !cur.is_zero() {
        cur = field_plus(alg, ctx, var, alpha, &cur);
        k_factorial *= k;
        acc = acc + cur.pair(&shifted) * S::from_ratio(1, k_factorial);
        k += 1;
    }
    ctx.var_pow(var, scaling_weight(alpha, &shifted)) * acc
}
