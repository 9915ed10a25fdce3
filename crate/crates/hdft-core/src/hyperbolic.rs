//! Tetrahedron volumes behind the correlator phases.
//!
//! The phase of a winding correlator factors through two tetrahedra: a
//! Euclidean one spanned by the winding vectors in `R^3`, whose oriented
//! volume is `det/6`, and an ideal hyperbolic one whose vertices are the
//! insertion points on the boundary sphere `CP^1` of hyperbolic 3-space.
//! The hyperbolic volume is a function of the cross-ratio of the four
//! vertices alone,
//!
//! ```text
//! cr(z1,z2,z3,z4) = ((z1 - z3)(z2 - z4)) / ((z1 - z4)(z2 - z3))
//! ```
//!
//! and is computed here in two readings: `Im L(cr)` with `L` the Rogers
//! dilogarithm, and the Bloch-Wigner function
//! `D(cr) = Im Li_2(cr) + arg(1 - cr) log|cr|`.  `D` is single valued on
//! `CP^1 \ {0, 1, inf}`, vanishes exactly on the real line (a flat
//! tetrahedron), and is bounded by the volume `1.01494...` of the regular
//! ideal tetrahedron at `cr = e^{i pi/3}`; the two readings agree whenever
//! `|1 - cr| = 1` and the per-tetrahedron reports expose both.
//!
//! The vertex ordering is fixed once and for all so that a two-insertion
//! amplitude with operators at `z` and `w` and the ket at the origin pairs
//! with the tetrahedron `(inf, 0, z, w)` of cross-ratio `w/z`, the argument
//! of its dilogarithm factor.  [`prop1_phase`] checks that pairing: the
//! phase of the closed two-insertion amplitude against
//! `eps(w1,w2,w3) . Im L(w/z)`, where `eps` is the determinant of the
//! winding triple, i.e. six times the Euclidean volume.  [`prop2_check`]
//! does the same for three insertions at `z1, z2, z3` with the ket at
//! `z4 = 0`: dropping the `i`-th winding from the Euclidean side pairs with
//! dropping the `i`-th insertion point from the hyperbolic side,
//!
//! ```text
//! phase = sum_i eps(w_1, .., ^w_i, .., w_4) . Im L(cr(Delta_i))
//! ```
//!
//! where `Delta_i` has vertices `inf` and the three remaining insertion
//! points, ordered ket point first.  Both checks report the residual
//! modulo `2 pi` together with the normalization convention used: the
//! dilogarithm coefficient is the bare determinant (`eps`), not the
//! Euclidean volume itself, and the reports say so explicitly rather than
//! absorb the factor 6.

use std::fmt;

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::correlators::{epsilon_triple, five_point_closed, four_point_form};
use crate::fock::GroundLabel;
use crate::special::{bloch_wigner, DomainError};
use crate::{Cplx, Rat};

/// A point of the Riemann sphere `CP^1 = C u {inf}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RiemannSpherePoint {
    /// A finite point of the complex plane.
    Finite(Cplx),
    /// The point at infinity.
    Infinity,
}

impl RiemannSpherePoint {
    /// Finite point with the given real and imaginary parts.
    pub fn finite(re: f64, im: f64) -> Self {
        RiemannSpherePoint::Finite(Cplx::new(re, im))
    }

    /// The origin.
    pub fn zero() -> Self {
        RiemannSpherePoint::Finite(Cplx::zero())
    }
}

impl From<Cplx> for RiemannSpherePoint {
    fn from(z: Cplx) -> Self {
        RiemannSpherePoint::Finite(z)
    }
}

impl fmt::Display for RiemannSpherePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RiemannSpherePoint::Finite(z) => write!(f, "{z}"),
            RiemannSpherePoint::Infinity => f.write_str("inf"),
        }
    }
}

/// Failure modes of the geometric constructions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GeometryError {
    /// Coincident vertices or an otherwise degenerate configuration.
    DegenerateInput(&'static str),
    /// A special-function evaluation left its domain.
    Domain(DomainError),
}

impl fmt::Display for GeometryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeometryError::DegenerateInput(msg) => write!(f, "degenerate input: {msg}"),
            GeometryError::Domain(e) => write!(f, "{}", e.0),
        }
    }
}

impl std::error::Error for GeometryError {}

impl From<DomainError> for GeometryError {
    fn from(e: DomainError) -> Self {
        GeometryError::Domain(e)
    }
}

pub type GeometryResult<T> = Result<T, GeometryError>;

/// Cross-ratio `((z1 - z3)(z2 - z4)) / ((z1 - z4)(z2 - z3))` of four
/// pairwise distinct points of `CP^1`.  A factor containing the point at
/// infinity cancels against its partner in the standard limit sense, so
/// e.g. `cr(inf, 0, z, w) = w/z`.  Four distinct points never produce a
/// cross-ratio in `{0, 1, inf}`.
pub fn cross_ratio(
    z1: RiemannSpherePoint,
    z2: RiemannSpherePoint,
    z3: RiemannSpherePoint,
    z4: RiemannSpherePoint,
) -> GeometryResult<Cplx> {
    let pts = [z1, z2, z3, z4];
    for i in 0..4 {
        for j in (i + 1)..4 {
            if pts[i] == pts[j] {
                return Err(GeometryError::DegenerateInput("cross_ratio: coincident vertices"));
            }
        }
    }
    Ok(cross_ratio_distinct(&pts))
}

/// Cross-ratio of four vertices already known to be pairwise distinct.
/// At most one vertex can be infinite; the two factors containing it drop
/// out as their ratio tends to one.
fn cross_ratio_distinct(pts: &[RiemannSpherePoint; 4]) -> Cplx {
    use RiemannSpherePoint::{Finite, Infinity};
    match *pts {
        [Infinity, Finite(z2), Finite(z3), Finite(z4)] => (z2 - z4) / (z2 - z3),
        [Finite(z1), Infinity, Finite(z3), Finite(z4)] => (z1 - z3) / (z1 - z4),
        [Finite(z1), Finite(z2), Infinity, Finite(z4)] => (z2 - z4) / (z1 - z4),
        [Finite(z1), Finite(z2), Finite(z3), Infinity] => (z1 - z3) / (z2 - z3),
        [Finite(z1), Finite(z2), Finite(z3), Finite(z4)] => {
            ((z1 - z3) * (z2 - z4)) / ((z1 - z4) * (z2 - z3))
        }
        _ => unreachable!("two infinite vertices are coincident"),
    }
}

/// An ideal tetrahedron: four pairwise distinct vertices on the boundary
/// sphere of hyperbolic 3-space.  The vertex order is part of the datum;
/// an odd permutation reverses the orientation and negates the volume.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdealTetrahedron {
    vertices: [RiemannSpherePoint; 4],
}

impl IdealTetrahedron {
    /// Builds the tetrahedron, rejecting coincident vertices.
    pub fn new(vertices: [RiemannSpherePoint; 4]) -> GeometryResult<Self> {
        for i in 0..4 {
            for j in (i + 1)..4 {
                if vertices[i] == vertices[j] {
                    return Err(GeometryError::DegenerateInput(
                        "ideal tetrahedron: coincident vertices",
                    ));
                }
            }
        }
        Ok(IdealTetrahedron { vertices })
    }

    /// The vertices in order.
    pub fn vertices(&self) -> &[RiemannSpherePoint; 4] {
        &self.vertices
    }

    /// Cross-ratio of the vertices in their stored order.
    pub fn cross_ratio(&self) -> Cplx {
        cross_ratio_distinct(&self.vertices)
    }
}

/// Oriented volume of the Euclidean tetrahedron spanned by three integer
/// vectors (with the origin as fourth vertex), together with the raw
/// determinant that multiplies the dilogarithm in the correlators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EuclideanVolume {
    /// Oriented volume `det / 6`, exact.
    pub volume: Rat,
    /// The `3 x 3` determinant of the spanning vectors, equal to the
    /// winding triple product of the correlator module.
    pub det: i64,
}

/// Oriented volume of the tetrahedron with vertices `0, w1, w2, w3`.
/// Swapping two arguments flips the sign; coplanar vectors give zero.
pub fn euclidean_volume(w1: [i64; 3], w2: [i64; 3], w3: [i64; 3]) -> EuclideanVolume {
    let det = epsilon_triple(w1, w2, w3);
    EuclideanVolume { volume: Rat::new(det as i128, 6), det }
}

/// Volume of an ideal tetrahedron in both readings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VolumeReport {
    /// Cross-ratio of the vertices in their stored order.
    pub cross_ratio: Cplx,
    /// Bloch-Wigner value `D(cr)`: the single-valued signed volume.
    pub bloch_wigner: f64,
    /// `Im L(cr)` with `L` the Rogers dilogarithm: the reading that
    /// appears literally in the correlator exponents.  Agrees with
    /// `D(cr)` when `|1 - cr| = 1`.
    pub im_rogers: f64,
    /// Set when the cross-ratio is real: the tetrahedron is flat and both
    /// volume fields are reported as zero.  (On the real cuts the Rogers
    /// reading would be branch-dependent; the flat volume is zero in every
    /// reading, which is exactly why `D` is the single-valued one.)
    pub flat: bool,
}

/// Signed hyperbolic volume of an ideal tetrahedron.  A real cross-ratio
/// means the four vertices lie on a circle through infinity's image, the
/// tetrahedron is flat, and the report carries zero volume with the `flat`
/// flag set.  The Bloch-Wigner value is the volume proper; the Rogers
/// reading is exposed alongside for the phase comparisons.
pub fn ideal_volume(t: &IdealTetrahedron) -> VolumeReport {
    let cr = t.cross_ratio();
    if cr.im == 0.0 {
        return VolumeReport { cross_ratio: cr, bloch_wigner: 0.0, im_rogers: 0.0, flat: true };
    }
    let im_rogers = rogers_im(cr);
    VolumeReport { cross_ratio: cr, bloch_wigner: bloch_wigner(cr), im_rogers, flat: false }
}

/// `Im L(z)` for non-real `z`, where the principal Rogers branch is
/// single-valued.
fn rogers_im(z: Cplx) -> f64 {
    crate::special::rogers_l(z).expect("rogers_l is defined off the real axis").im
}

/// Which coefficient multiplies `Im L` on the geometric side of a phase
/// comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Normalization {
    /// The bare winding determinant `eps = 6 . vol(Delta_E)`, the
    /// coefficient that actually appears in the correlator exponents.
    Epsilon,
    /// The Euclidean volume itself, `det / 6`.
    SixVolume,
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Normalization::Epsilon => "epsilon",
            Normalization::SixVolume => "six_volume",
        })
    }
}

/// Which volume reading enters a phase comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VolumeKind {
    /// `Im L(cr)`, the literal correlator exponent.
    ImRogers,
    /// The Bloch-Wigner single-valued volume.
    BlochWigner,
}

impl fmt::Display for VolumeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VolumeKind::ImRogers => "im_rogers",
            VolumeKind::BlochWigner => "bloch_wigner",
        })
    }
}

/// Principal value of an angle in `[-pi, pi)`.
fn wrap_angle(x: f64) -> f64 {
    use std::f64::consts::PI;
    (x + PI).rem_euclid(2.0 * PI) - PI
}

/// Outcome of the two-insertion phase comparison.
#[derive(Clone, Copy, Debug)]
pub struct Prop1Report {
    /// Winding determinant `eps(w1, w2, w3)`.
    pub epsilon: i64,
    /// Euclidean volume `eps / 6`.
    pub euclidean: Rat,
    /// Volume report of the ideal tetrahedron `(inf, 0, z, w)`.
    pub volume: VolumeReport,
    /// Principal phase of the closed amplitude
    /// `exp(eps(w1,w2,w3) L(w/z))`.
    pub corr_phase: f64,
    /// Principal value of `eps . Im L(cr)` with `cr` the tetrahedron's
    /// cross-ratio.
    pub volume_phase: f64,
    /// `|corr_phase - volume_phase|` modulo `2 pi`.
    pub residual: f64,
    /// Coefficient convention used on the volume side.
    pub normalization: Normalization,
    /// Volume reading used on the volume side.
    pub volume_kind: VolumeKind,
}

/// Compares the phase of the closed two-insertion amplitude
/// `<psi| e^{w1}(z) e^{w2}(w) |e^{w3}>` for pure windings against the
/// pairing of the Euclidean tetrahedron spanned by the windings with the
/// ideal tetrahedron `(inf, 0, z, w)` on the insertion points.  For pure
/// windings the rational prefactors of the amplitude are absent and its
/// phase is carried entirely by the dilogarithm factor
/// `exp(eps(w1,w2,w3) L(w/z))`; the geometric side recomputes
/// `eps . Im L` from the cross-ratio of the tetrahedron.  Requires
/// `|w| < |z|`.
pub fn prop1_phase(
    w1: [i64; 3],
    w2: [i64; 3],
    w3: [i64; 3],
    z: Cplx,
    w: Cplx,
) -> GeometryResult<Prop1Report> {
    assert!(w.norm() < z.norm(), "insertion points must satisfy |w| < |z|");
    let epsilon = epsilon_triple(w1, w2, w3);

    // Closed-amplitude side: for pure windings every prefactor and
    // binomial exponent is a pairing of winding-only labels, hence zero,
    // and the form evaluates to the dilogarithm factor alone.
    let form =
        four_point_form(&GroundLabel::winding(w1), &GroundLabel::winding(w2), &GroundLabel::winding(w3));
    let value = form.eval([z, w, Cplx::zero()])?;
    let corr_phase = value.arg();

    // Geometric side: ideal tetrahedron on (inf, 0, z, w), Euclidean
    // tetrahedron on the windings.
    let tet = IdealTetrahedron::new([
        RiemannSpherePoint::Infinity,
        RiemannSpherePoint::zero(),
        RiemannSpherePoint::Finite(z),
        RiemannSpherePoint::Finite(w),
    ])?;
    let volume = ideal_volume(&tet);
    let volume_phase = wrap_angle(epsilon as f64 * volume.im_rogers);

    Ok(Prop1Report {
        epsilon,
        euclidean: euclidean_volume(w1, w2, w3).volume,
        volume,
        corr_phase,
        volume_phase,
        residual: wrap_angle(corr_phase - volume_phase).abs(),
        normalization: Normalization::Epsilon,
        volume_kind: VolumeKind::ImRogers,
    })
}

/// One Euclidean-hyperbolic pairing in the three-insertion comparison.
#[derive(Clone, Copy, Debug)]
pub struct Prop2Term {
    /// Winding determinant of the three windings kept by this term.
    pub epsilon: i64,
    /// Euclidean volume `epsilon / 6`.
    pub euclidean: Rat,
    /// Volume report of the paired ideal tetrahedron; absent when
    /// `epsilon` vanishes and the term contributes no phase (its
    /// tetrahedron may then even be degenerate, e.g. at `z3 = 0`).
    pub volume: Option<VolumeReport>,
}

/// Outcome of the three-insertion phase comparison.
#[derive(Clone, Debug)]
pub struct Prop2Report {
    /// The four pairings, indexed by the dropped winding.
    pub terms: [Prop2Term; 4],
    /// Principal phase of the closed three-insertion amplitude.
    pub corr_phase: f64,
    /// Principal value of `sum_i eps_i . Im L(cr_i)`.
    pub volume_phase: f64,
    /// `|corr_phase - volume_phase|` modulo `2 pi`.
    pub residual: f64,
    /// Coefficient convention used on the volume side.
    pub normalization: Normalization,
    /// Volume reading used on the volume side.
    pub volume_kind: VolumeKind,
}

/// Compares the phase of the closed three-insertion amplitude
/// `<e^psi| e^{w1}(z1) e^{w2}(z2) e^{w3}(z3) |e^{w4}>` (ket insertion at
/// `z4 = 0`, `psi` the total winding) against the four-term volume sum:
/// dropping the `i`-th winding spans the `i`-th Euclidean tetrahedron,
/// and dropping the `i`-th insertion point spans the `i`-th ideal
/// tetrahedron with vertices `inf`, the ket point, and the remaining two
/// insertion points in radial order,
///
/// ```text
/// drop z1: (inf, 0, z2, z3)    cr = z3/z2
/// drop z2: (inf, 0, z1, z3)    cr = z3/z1
/// drop z3: (inf, 0, z1, z2)    cr = z2/z1
/// drop z4: (inf, z3, z1, z2)   cr = (z2 - z3)/(z1 - z3)
/// ```
///
/// exactly the four dilogarithm arguments of the closed form.  Requires
/// `|z1| > |z2| > |z3|`.
pub fn prop2_check(w: [[i64; 3]; 4], z1: Cplx, z2: Cplx, z3: Cplx) -> GeometryResult<Prop2Report> {
    use RiemannSpherePoint::{Finite, Infinity};
    let [alpha, beta, gamma, delta] = w.map(GroundLabel::winding);
    let psi = alpha + beta + gamma + delta;
    let value = five_point_closed(&psi, &alpha, &beta, &gamma, &delta, z1, z2, z3)?;
    let corr_phase = value.arg();

    let vertex_sets: [[RiemannSpherePoint; 4]; 4] = [
        [Infinity, RiemannSpherePoint::zero(), Finite(z2), Finite(z3)],
        [Infinity, RiemannSpherePoint::zero(), Finite(z1), Finite(z3)],
        [Infinity, RiemannSpherePoint::zero(), Finite(z1), Finite(z2)],
        [Infinity, Finite(z3), Finite(z1), Finite(z2)],
    ];
    let mut phase_sum = 0.0;
    let mut terms: [Option<Prop2Term>; 4] = [None; 4];
    for i in 0..4 {
        let kept: Vec<[i64; 3]> = (0..4).filter(|j| *j != i).map(|j| w[j]).collect();
        let eps = epsilon_triple(kept[0], kept[1], kept[2]);
        let volume = if eps == 0 {
            None
        } else {
            let report = ideal_volume(&IdealTetrahedron::new(vertex_sets[i])?);
            phase_sum += eps as f64 * report.im_rogers;
            Some(report)
        };
        terms[i] = Some(Prop2Term { epsilon: eps, euclidean: Rat::new(eps as i128, 6), volume });
    }
    let terms = terms.map(|t| t.expect("all four terms are filled"));
    let volume_phase = wrap_angle(phase_sum);

    Ok(Prop2Report {
        terms,
        corr_phase,
        volume_phase,
        residual: wrap_angle(corr_phase - volume_phase).abs(),
        normalization: Normalization::Epsilon,
        volume_kind: VolumeKind::ImRogers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn fin(re: f64, im: f64) -> RiemannSpherePoint {
        RiemannSpherePoint::finite(re, im)
    }

    #[test]
    fn cross_ratio_matches_the_infinity_limits() {
        let z = Cplx::new(2.0, 1.0);
        let w = Cplx::new(-0.5, 3.0);
        let standard =
            cross_ratio(RiemannSpherePoint::Infinity, RiemannSpherePoint::zero(), z.into(), w.into())
                .unwrap();
        assert!((standard - w / z).norm() < 1e-15);

        // Each infinite slot agrees with the finite formula at a large
        // proxy vertex.
        let big = Cplx::new(3.0e8, -2.0e8);
        let pts = [Cplx::new(0.3, -0.7), Cplx::new(1.4, 0.2), Cplx::new(-2.0, 0.9)];
        for slot in 0..4 {
            let mut with_inf = [RiemannSpherePoint::Infinity; 4];
            let mut with_big = [RiemannSpherePoint::Finite(big); 4];
            let mut k = 0;
            for i in 0..4 {
                if i != slot {
                    with_inf[i] = pts[k].into();
                    with_big[i] = pts[k].into();
                    k += 1;
                }
            }
            let exact = cross_ratio(with_inf[0], with_inf[1], with_inf[2], with_inf[3]).unwrap();
            let proxy = cross_ratio(with_big[0], with_big[1], with_big[2], with_big[3]).unwrap();
            assert!((exact - proxy).norm() < 1e-6, "slot {slot}: {exact} vs {proxy}");
        }

        // Real collinear inputs give a real value.
        let r = cross_ratio(fin(0.0, 0.0), fin(1.0, 0.0), fin(3.0, 0.0), fin(7.0, 0.0)).unwrap();
        assert_eq!(r.im, 0.0);
    }

    #[test]
    fn cross_ratio_rejects_coincident_vertices() {
        let z = Cplx::new(1.0, 1.0);
        let err = cross_ratio(z.into(), z.into(), fin(2.0, 0.0), fin(3.0, 0.0));
        assert!(matches!(err, Err(GeometryError::DegenerateInput(_))));
        let err = cross_ratio(
            RiemannSpherePoint::Infinity,
            RiemannSpherePoint::Infinity,
            fin(2.0, 0.0),
            fin(3.0, 0.0),
        );
        assert!(matches!(err, Err(GeometryError::DegenerateInput(_))));
        assert!(IdealTetrahedron::new([
            RiemannSpherePoint::Infinity,
            fin(1.0, 0.0),
            fin(1.0, 0.0),
            fin(3.0, 0.0)
        ])
        .is_err());
    }

    /// Fractional-linear action of an integer matrix on the sphere.
    fn moebius(m: [i64; 4], p: RiemannSpherePoint) -> RiemannSpherePoint {
        let [a, b, c, d] = m.map(|x| x as f64);
        match p {
            RiemannSpherePoint::Infinity => {
                if c == 0.0 {
                    RiemannSpherePoint::Infinity
                } else {
                    fin(a / c, 0.0)
                }
            }
            RiemannSpherePoint::Finite(z) => {
                let den = Cplx::new(c, 0.0) * z + Cplx::new(d, 0.0);
                if den.norm() == 0.0 {
                    RiemannSpherePoint::Infinity
                } else {
                    RiemannSpherePoint::Finite((Cplx::new(a, 0.0) * z + Cplx::new(b, 0.0)) / den)
                }
            }
        }
    }

    fn mat_mul(x: [i64; 4], y: [i64; 4]) -> [i64; 4] {
        [
            x[0] * y[0] + x[1] * y[2],
            x[0] * y[1] + x[1] * y[3],
            x[2] * y[0] + x[3] * y[2],
            x[2] * y[1] + x[3] * y[3],
        ]
    }

    #[test]
    fn cross_ratio_is_moebius_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        for _ in 0..20 {
            // A product of integer shears has unit determinant.
            let mut m = [1, 0, 0, 1];
            for _ in 0..3 {
                let s = rng.gen_range(-2..=2);
                m = mat_mul(m, [1, s, 0, 1]);
                let t = rng.gen_range(-2..=2);
                m = mat_mul(m, [1, 0, t, 1]);
            }
            assert_eq!(m[0] * m[3] - m[1] * m[2], 1);

            let pts: Vec<RiemannSpherePoint> = (0..4)
                .map(|_| fin(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)))
                .collect();
            let before = cross_ratio(pts[0], pts[1], pts[2], pts[3]).unwrap();
            let mapped: Vec<RiemannSpherePoint> = pts.iter().map(|p| moebius(m, *p)).collect();
            let after = cross_ratio(mapped[0], mapped[1], mapped[2], mapped[3]).unwrap();
            // Stiff maps push the images far apart; allow the roundoff the
            // matrix magnifies, scaled by the value itself.
            let tol = 1e-12 * (1.0 + before.norm()) * (1.0 + m.iter().map(|x| x.abs()).max().unwrap() as f64);
            assert!((before - after).norm() < tol, "{m:?}: {before} vs {after}");
        }
    }

    #[test]
    fn euclidean_volume_matches_the_determinant() {
        let e1 = [1, 0, 0];
        let e2 = [0, 1, 0];
        let e3 = [0, 0, 1];
        let unit = euclidean_volume(e1, e2, e3);
        assert_eq!(unit.volume, Rat::new(1, 6));
        assert_eq!(unit.det, 1);

        // Coplanar spans collapse.
        assert_eq!(euclidean_volume(e1, e2, [3, -5, 0]).volume, Rat::new(0, 1));

        // Swapping two arguments flips the orientation.
        let a = [2, -1, 3];
        let b = [0, 4, 1];
        let c = [-2, 5, 7];
        assert_eq!(euclidean_volume(a, b, c).volume, -euclidean_volume(b, a, c).volume);

        // Six times the volume is the winding determinant, exactly.
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let mut vec3 =
                || [rng.gen_range(-6i64..=6), rng.gen_range(-6..=6), rng.gen_range(-6..=6)];
            let (a, b, c) = (vec3(), vec3(), vec3());
            let ev = euclidean_volume(a, b, c);
            assert_eq!(ev.volume * Rat::new(6, 1), Rat::new(ev.det as i128, 1));
            assert_eq!(ev.det, epsilon_triple(a, b, c));
        }
    }

    #[test]
    fn regular_ideal_tetrahedron_has_the_maximal_volume() {
        let cr = Cplx::new(0.5, (3.0f64).sqrt() / 2.0);
        let tet = IdealTetrahedron::new([
            RiemannSpherePoint::Infinity,
            RiemannSpherePoint::zero(),
            fin(1.0, 0.0),
            RiemannSpherePoint::Finite(cr),
        ])
        .unwrap();
        let report = ideal_volume(&tet);
        assert!((report.cross_ratio - cr).norm() < 1e-15);
        assert!((report.bloch_wigner - 1.0149416).abs() < 1e-6);
        // |1 - cr| = 1 there, so the two readings agree.
        assert!((report.im_rogers - report.bloch_wigner).abs() < 1e-12);
        assert!(!report.flat);
    }

    #[test]
    fn flat_and_conjugated_tetrahedra() {
        // Concyclic vertices (all real) are flat.
        let tet = IdealTetrahedron::new([
            RiemannSpherePoint::Infinity,
            RiemannSpherePoint::zero(),
            fin(1.0, 0.0),
            fin(4.0, 0.0),
        ])
        .unwrap();
        let report = ideal_volume(&tet);
        assert!(report.flat);
        assert_eq!(report.bloch_wigner, 0.0);
        assert_eq!(report.im_rogers, 0.0);

        // Conjugating every vertex reverses the orientation.
        let verts = [
            RiemannSpherePoint::Infinity,
            fin(0.3, -0.4),
            fin(1.7, 0.8),
            fin(-0.9, 2.1),
        ];
        let conj = verts.map(|p| match p {
            RiemannSpherePoint::Finite(z) => RiemannSpherePoint::Finite(z.conj()),
            RiemannSpherePoint::Infinity => RiemannSpherePoint::Infinity,
        });
        let d = ideal_volume(&IdealTetrahedron::new(verts).unwrap()).bloch_wigner;
        let dc = ideal_volume(&IdealTetrahedron::new(conj).unwrap()).bloch_wigner;
        assert!((d + dc).abs() < 1e-12);
        assert!(d.abs() > 1e-3);

        // Swapping the last two vertices inverts the cross-ratio and
        // negates the volume as well.
        let swapped = [verts[0], verts[1], verts[3], verts[2]];
        let ds = ideal_volume(&IdealTetrahedron::new(swapped).unwrap()).bloch_wigner;
        assert!((d + ds).abs() < 1e-12);
    }

    #[test]
    fn bloch_wigner_satisfies_the_five_term_relation() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..40 {
            let x = Cplx::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
            let y = Cplx::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
            let xy = x * y;
            if (Cplx::one() - xy).norm() < 1e-3 {
                continue;
            }
            let sum = bloch_wigner(x) + bloch_wigner(y)
                - bloch_wigner(xy)
                - bloch_wigner((x - xy) / (Cplx::one() - xy))
                - bloch_wigner((y - xy) / (Cplx::one() - xy));
            assert!(sum.abs() < 1e-12, "x={x}, y={y}: {sum}");
        }
    }

    #[test]
    fn ideal_volume_is_bounded_by_the_regular_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..10_000 {
            let mut vs = [RiemannSpherePoint::Infinity; 4];
            for v in vs.iter_mut() {
                *v = fin(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            }
            let Ok(tet) = IdealTetrahedron::new(vs) else { continue };
            let vol = ideal_volume(&tet).bloch_wigner;
            assert!(vol <= 1.0149417, "{vs:?}: {vol}");
            assert!(vol >= -1.0149417, "{vs:?}: {vol}");
        }
    }

    #[test]
    fn prop1_phase_recovers_the_dilogarithm_phase() {
        let e1 = [1, 0, 0];
        let e2 = [0, 1, 0];
        let e3 = [0, 0, 1];
        let z = Cplx::new(2.0, 0.0);
        let w = Cplx::new(0.6, 0.4); // w/z = 0.3 + 0.2i
        let report = prop1_phase(e1, e2, e3, z, w).unwrap();
        assert_eq!(report.epsilon, 1);
        assert_eq!(report.euclidean, Rat::new(1, 6));
        assert!(report.residual < 1e-10, "residual {}", report.residual);
        assert_eq!(report.normalization, Normalization::Epsilon);
        assert_eq!(report.volume_kind, VolumeKind::ImRogers);
        assert!((report.volume.cross_ratio - w / z).norm() < 1e-15);

        // Reversed orientation flips both sides together.
        let flipped = prop1_phase(e2, e1, e3, z, w).unwrap();
        assert_eq!(flipped.epsilon, -1);
        assert!(flipped.residual < 1e-10);
        assert!((flipped.volume_phase + report.volume_phase).abs() < 1e-12);

        // A larger determinant scales the phase.
        let big = prop1_phase([3, 1, 0], [0, 2, 1], [1, 0, 4], z, w).unwrap();
        assert_eq!(big.epsilon, 25);
        assert!(big.residual < 1e-9, "residual {}", big.residual);
    }

    #[test]
    fn prop1_phase_degenerations() {
        let z = Cplx::new(2.0, 0.0);
        let w = Cplx::new(0.6, 0.4);
        // Coplanar windings: no dilogarithm factor, no volume factor.
        let coplanar = prop1_phase([1, 0, 0], [0, 1, 0], [2, 3, 0], z, w).unwrap();
        assert_eq!(coplanar.epsilon, 0);
        assert_eq!(coplanar.corr_phase, 0.0);
        assert_eq!(coplanar.volume_phase, 0.0);
        assert_eq!(coplanar.residual, 0.0);

        // Real ratio: flat tetrahedron, real amplitude.
        let real = prop1_phase([1, 0, 0], [0, 1, 0], [0, 0, 1], z, Cplx::new(0.8, 0.0)).unwrap();
        assert!(real.volume.flat);
        assert_eq!(real.volume_phase, 0.0);
        assert!(real.corr_phase.abs() < 1e-15);
        assert!(real.residual < 1e-12);
    }

    #[test]
    fn prop2_check_matches_the_four_term_volume_sum() {
        let w = [[1, 0, 0], [0, 1, 0], [0, 0, 1], [0, 0, 0]];
        let report =
            prop2_check(w, Cplx::new(8.0, 0.0), Cplx::new(2.0, 0.0), Cplx::new(0.0, 0.5)).unwrap();
        assert!(report.residual < 1e-8, "residual {}", report.residual);
        // Only the term dropping the zero winding survives.
        for i in 0..3 {
            assert_eq!(report.terms[i].epsilon, 0);
            assert!(report.terms[i].volume.is_none());
        }
        assert_eq!(report.terms[3].epsilon, 1);
        let vol = report.terms[3].volume.unwrap();
        let expected_cr = (Cplx::new(2.0, 0.0) - Cplx::new(0.0, 0.5))
            / (Cplx::new(8.0, 0.0) - Cplx::new(0.0, 0.5));
        assert!((vol.cross_ratio - expected_cr).norm() < 1e-15);

        // A generic non-coplanar quadruple exercises all four terms.
        let w = [[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1]];
        let report = prop2_check(
            w,
            Cplx::new(6.0, 1.0),
            Cplx::new(1.5, -2.0),
            Cplx::new(0.4, 0.3),
        )
        .unwrap();
        for term in &report.terms {
            assert_ne!(term.epsilon, 0);
            assert!(term.volume.is_some());
        }
        assert!(report.residual < 1e-8, "residual {}", report.residual);
    }

    #[test]
    fn prop2_check_with_coplanar_windings_is_trivial() {
        let w = [[1, 0, 0], [0, 1, 0], [1, 1, 0], [2, -1, 0]];
        let report =
            prop2_check(w, Cplx::new(8.0, 0.0), Cplx::new(2.0, 0.0), Cplx::new(0.0, 0.5)).unwrap();
        for term in &report.terms {
            assert_eq!(term.epsilon, 0);
        }
        assert_eq!(report.volume_phase, 0.0);
        assert!(report.corr_phase.abs() < 1e-15);
        assert!(report.residual < 1e-12);
    }

    #[test]
    fn prop2_check_degenerates_to_prop1_as_the_third_point_vanishes() {
        let z = Cplx::new(8.0, 0.0);
        let w = Cplx::new(2.0, 1.0);
        let one = prop1_phase([1, 0, 0], [0, 1, 0], [0, 0, 1], z, w).unwrap();
        let two = prop2_check(
            [[1, 0, 0], [0, 1, 0], [0, 0, 1], [0, 0, 0]],
            z,
            w,
            Cplx::new(1e-8, 1e-8),
        )
        .unwrap();
        assert!((one.volume_phase - two.volume_phase).abs() < 1e-6);
        assert!((one.corr_phase - two.corr_phase).abs() < 1e-6);
        assert!(two.residual < 1e-8);
    }

    #[test]
    fn wrapped_angles_stay_principal() {
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12 || (wrap_angle(3.0 * PI) + PI).abs() < 1e-12);
        assert!((wrap_angle(-0.3) + 0.3).abs() < 1e-15);
        assert!((wrap_angle(2.0 * PI + 0.7) - 0.7).abs() < 1e-12);
    }
}
