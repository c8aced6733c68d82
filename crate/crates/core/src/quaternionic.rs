//! Hyper-Kähler vector spaces `(V, g, I, J, K)` with `I² = J² = K² = IJK = −1`.
//!
//! Conventions used throughout the crate:
//!
//! * structure matrices act on column vectors of `V`;
//! * the Kähler form of an axis `A` is `ω_A(v, w) = g(Av, w) = vᵀ (AᵀG) w`,
//!   so its bilinear matrix is `Ω_A = AᵀG`;
//! * the adjoint `A*` on `V*` is `(A*ξ)(w) = ξ(Aw)`, i.e. `Aᵀ` acting on
//!   covector components;
//! * the orientation makes `ω_I^{2k} = (2k)! vol`.

use alloc::vec::Vec;
use core::fmt;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::exterior::{self, KForm, MetricData, Orientation, MAX_DIM};
use crate::linalg;

/// Largest quaternionic dimension, `4k <= 16`.
pub const MAX_K: usize = MAX_DIM / 4;

/// Largest condition number accepted for a random change of basis.
const MAX_CONDITION: f64 = 1e4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    I,
    J,
    K,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::I, Axis::J, Axis::K];

    pub fn index(self) -> usize {
        self as usize
    }

    /// The next axis in the cycle `I → J → K → I`.
    pub fn next(self) -> Axis {
        Axis::ALL[(self.index() + 1) % 3]
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::I => "I",
            Axis::J => "J",
            Axis::K => "K",
        })
    }
}

/// A real vector space of dimension `4k` with a metric and three complex
/// structures.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperKahlerSpace {
    k: usize,
    gram: DMatrix<f64>,
    structures: [DMatrix<f64>; 3],
    omegas: [DMatrix<f64>; 3],
    orientation: Orientation,
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 || k > MAX_K {
        Err(Error::QuaternionicDimension { k, max: MAX_K })
    } else {
        Ok(())
    }
}

impl HyperKahlerSpace {
    /// Flat model: identity metric and the block action
    /// `I: e0→e1, e2→e3`, `J: e0→e2, e1→−e3`, `K = IJ` on each 4-block.
    pub fn standard(k: usize) -> Result<Self> {
        check_k(k)?;
        let dim = 4 * k;
        let mut i = DMatrix::zeros(dim, dim);
        let mut j = DMatrix::zeros(dim, dim);
        for b in 0..k {
            let o = 4 * b;
            // Column c holds the image of e_c.
            i[(o + 1, o)] = 1.0;
            i[(o, o + 1)] = -1.0;
            i[(o + 3, o + 2)] = 1.0;
            i[(o + 2, o + 3)] = -1.0;

            j[(o + 2, o)] = 1.0;
            j[(o, o + 2)] = -1.0;
            j[(o + 3, o + 1)] = -1.0;
            j[(o + 1, o + 3)] = 1.0;
        }
        let kk = &i * &j;
        let structures = [i, j, kk];
        Ok(HyperKahlerSpace {
            k,
            gram: DMatrix::identity(dim, dim),
            omegas: structures.clone().map(|x| x.transpose()),
            structures,
            orientation: Orientation::Positive,
        })
    }

    /// Pulls the standard model back along `x ↦ A x`: `gram = AᵀA`,
    /// `X' = A⁻¹ X A`, and `Ω' = Aᵀ Ω A`.
    pub fn conjugated(k: usize, a: &DMatrix<f64>) -> Result<Self> {
        let std = Self::standard(k)?;
        let dim = 4 * k;
        if a.nrows() != dim || a.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: a.nrows(),
            });
        }
        let lu = a.clone().lu();
        let mut structures = std.structures.clone();
        for x in &mut structures {
            *x = lu.solve(&(&*x * a)).ok_or(Error::Singular {
                condition: linalg::condition_number(a),
            })?;
        }
        let det = a.determinant();
        Ok(HyperKahlerSpace {
            k,
            gram: linalg::symmetrize(&(a.transpose() * a)),
            structures,
            omegas: std.omegas.map(|w| a.transpose() * w * a),
            orientation: Orientation::from_sign(det),
        })
    }

    /// Conjugation of the standard model by a Gaussian matrix, redrawn until
    /// its condition number is at most `1e4`.
    pub fn random(k: usize, seed: u64) -> Result<Self> {
        check_k(k)?;
        let a = random_basis_change(4 * k, &mut ChaCha8Rng::seed_from_u64(seed));
        Self::conjugated(k, &a)
    }

    /// Assembles a space from explicit matrices and rejects it when the
    /// quaternionic residuals exceed `tol`. The orientation is read off the
    /// sign of `ω_I^{2k}`.
    pub fn from_parts(k: usize, gram: DMatrix<f64>, structures: [DMatrix<f64>; 3], tol: f64) -> Result<Self> {
        let space = Self::from_parts_unchecked(k, gram, structures)?;
        let report = space.check_quaternionic(tol);
        if !report.pass {
            return Err(Error::NotQuaternionic {
                residual: report.worst(),
                tol,
            });
        }
        Ok(space)
    }

    /// Like [`HyperKahlerSpace::from_parts`] without the quaternionic gate;
    /// the metric must still be positive definite.
    pub fn from_parts_unchecked(k: usize, gram: DMatrix<f64>, structures: [DMatrix<f64>; 3]) -> Result<Self> {
        check_k(k)?;
        let dim = 4 * k;
        for m in core::iter::once(&gram).chain(structures.iter()) {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: m.nrows(),
                });
            }
        }
        MetricData::new(gram.clone(), Orientation::Positive)?;
        let omegas = structures.clone().map(|x| x.transpose() * &gram);
        let mut space = HyperKahlerSpace {
            k,
            gram,
            structures,
            omegas,
            orientation: Orientation::Positive,
        };
        let top = exterior::wedge_power(&space.kahler_form(Axis::I)?, 2 * k)?;
        let c = top.coeff(exterior::BasisIndex::full(dim));
        space.orientation = Orientation::from_sign(c);
        Ok(space)
    }

    /// Quaternionic dimension.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Real dimension `4k`.
    pub fn dim(&self) -> usize {
        4 * self.k
    }

    /// Half the real dimension, the exponent in `ω^n = n! vol`.
    pub fn n(&self) -> usize {
        2 * self.k
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn structure(&self, axis: Axis) -> &DMatrix<f64> {
        &self.structures[axis.index()]
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn metric(&self) -> MetricData {
        MetricData::new(self.gram.clone(), self.orientation).expect("gram validated at construction")
    }

    /// Replaces one structure matrix without any validation.
    pub fn with_structure(&self, axis: Axis, m: DMatrix<f64>) -> Self {
        let mut out = self.clone();
        out.omegas[axis.index()] = m.transpose() * &self.gram;
        out.structures[axis.index()] = m;
        out
    }

    /// Same structures with the metric scaled by `lambda > 0`.
    pub fn with_scaled_metric(&self, lambda: f64) -> Self {
        let mut out = self.clone();
        out.gram *= lambda;
        for w in &mut out.omegas {
            *w *= lambda;
        }
        out
    }

    /// `Ω_A = AᵀG`, the matrix of `ω_A(v, w) = g(Av, w)`.
    pub fn omega_matrix(&self, axis: Axis) -> DMatrix<f64> {
        self.omegas[axis.index()].clone()
    }

    pub fn kahler_form(&self, axis: Axis) -> Result<KForm> {
        exterior::two_form_from_matrix(&self.omega_matrix(axis))
    }

    pub fn kahler_forms(&self) -> Result<KahlerFormSet> {
        let matrices = Axis::ALL.map(|a| self.omega_matrix(a));
        let forms = [
            exterior::two_form_from_matrix(&matrices[0])?,
            exterior::two_form_from_matrix(&matrices[1])?,
            exterior::two_form_from_matrix(&matrices[2])?,
        ];
        Ok(KahlerFormSet { matrices, forms })
    }

    /// Adjoint `A*` on covector components, `Aᵀ`.
    pub fn dual_action(&self, axis: Axis) -> DMatrix<f64> {
        self.structure(axis).transpose()
    }

    /// `aI + bJ + cK` for a unit vector `(a, b, c)`.
    pub fn unit_structure(&self, a: f64, b: f64, c: f64) -> Result<DMatrix<f64>> {
        let norm_sq = a * a + b * b + c * c;
        if (norm_sq - 1.0).abs() > 1e-12 {
            return Err(Error::NotUnit { a, b, c, norm_sq });
        }
        Ok(self.structure(Axis::I) * a + self.structure(Axis::J) * b + self.structure(Axis::K) * c)
    }

    pub fn check_quaternionic(&self, tol: f64) -> QuaternionicReport {
        QuaternionicReport::measure(Some(&self.gram), &self.structures, tol)
    }

    /// `v♭ = G⁻¹ v`: the vector metrically dual to a covector.
    pub fn musical_flat(&self, covector: &DVector<f64>) -> DVector<f64> {
        linalg::spd_inverse(&self.gram).expect("gram validated at construction") * covector
    }

    /// `w♯ = G w`: the covector `g(w, ·)`.
    pub fn musical_sharp(&self, vector: &DVector<f64>) -> DVector<f64> {
        &self.gram * vector
    }
}

/// Kähler forms of a hyper-Kähler space as matrices `Ω_A` and as 2-forms.
#[derive(Clone, Debug, PartialEq)]
pub struct KahlerFormSet {
    pub matrices: [DMatrix<f64>; 3],
    pub forms: [KForm; 3],
}

impl KahlerFormSet {
    pub fn matrix(&self, axis: Axis) -> &DMatrix<f64> {
        &self.matrices[axis.index()]
    }

    pub fn form(&self, axis: Axis) -> &KForm {
        &self.forms[axis.index()]
    }
}

/// Residuals of `A² = −1`, `IJK = −1` and, when a metric is known,
/// `AᵀGA = G`.
///
/// Square residuals are `‖A² + 1‖_F` divided by `max(1, ‖A‖_F² / dim)` so that
/// conjugation by an ill-conditioned basis change does not inflate them;
/// the other residuals are normalized the same way.
#[derive(Clone, Debug, PartialEq)]
pub struct QuaternionicReport {
    pub square: [f64; 3],
    pub triple_product: f64,
    pub compatibility: Option<[f64; 3]>,
    pub tolerance: f64,
    pub pass: bool,
}

impl QuaternionicReport {
    pub fn measure(gram: Option<&DMatrix<f64>>, structures: &[DMatrix<f64>; 3], tol: f64) -> Self {
        let dim = structures[0].nrows();
        let id = DMatrix::<f64>::identity(dim, dim);
        let scale = |m: &DMatrix<f64>| f64::max(1.0, m.norm_squared() / dim as f64);
        let square = core::array::from_fn(|a| {
            let m = &structures[a];
            (m * m + &id).norm() / scale(m)
        });
        let [i, j, k] = structures;
        let product_scale = libm::sqrt(scale(i) * scale(j) * scale(k));
        let triple_product = (i * j * k + &id).norm() / product_scale;
        let compatibility = gram.map(|g| {
            let gn = g.norm();
            core::array::from_fn(|a| {
                let m = &structures[a];
                (m.transpose() * g * m - g).norm() / (gn * scale(m))
            })
        });
        let worst = square
            .iter()
            .chain(compatibility.iter().flatten())
            .fold(triple_product, |w, &r| f64::max(w, r));
        QuaternionicReport {
            square,
            triple_product,
            compatibility,
            tolerance: tol,
            pass: worst < tol,
        }
    }

    pub fn worst(&self) -> f64 {
        self.square
            .iter()
            .chain(self.compatibility.iter().flatten())
            .fold(self.triple_product, |w, &r| f64::max(w, r))
    }
}

/// Gaussian `dim x dim` matrix with condition number at most `1e4`.
pub fn random_basis_change(dim: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    loop {
        let entries: Vec<f64> = (0..dim * dim).map(|_| StandardNormal.sample(rng)).collect();
        let a = DMatrix::from_row_slice(dim, dim, &entries);
        if linalg::condition_number(&a) <= MAX_CONDITION {
            return a;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::{volume_form, wedge};

    fn e(idx: &[usize]) -> KForm {
        KForm::blade(4, idx).unwrap()
    }

    #[test]
    fn standard_k_table() {
        let s = HyperKahlerSpace::standard(1).unwrap();
        let k = s.structure(Axis::K);
        let image = |c: usize| k.column(c).into_owned();
        assert_eq!(image(0), DVector::from_vec(alloc::vec![0.0, 0.0, 0.0, 1.0]));
        assert_eq!(image(1), DVector::from_vec(alloc::vec![0.0, 0.0, 1.0, 0.0]));
        assert_eq!(image(2), DVector::from_vec(alloc::vec![0.0, -1.0, 0.0, 0.0]));
        assert_eq!(image(3), DVector::from_vec(alloc::vec![-1.0, 0.0, 0.0, 0.0]));
        let ijk = s.structure(Axis::I) * s.structure(Axis::J) * k;
        assert_eq!(ijk, -DMatrix::<f64>::identity(4, 4));
    }

    #[test]
    fn standard_structures_orthogonal_k2() {
        let s = HyperKahlerSpace::standard(2).unwrap();
        for a in Axis::ALL {
            let m = s.structure(a);
            assert_eq!(m.transpose() * m, DMatrix::<f64>::identity(8, 8));
        }
        let r = s.check_quaternionic(1e-15);
        assert!(r.pass);
        assert_eq!(r.worst(), 0.0);
    }

    #[test]
    fn k_out_of_range() {
        assert!(matches!(
            HyperKahlerSpace::standard(0),
            Err(Error::QuaternionicDimension { .. })
        ));
        assert!(HyperKahlerSpace::standard(5).is_err());
        assert!(HyperKahlerSpace::random(5, 1).is_err());
    }

    #[test]
    fn conjugation_by_identity_is_standard() {
        for k in 1..=3 {
            let s = HyperKahlerSpace::conjugated(k, &DMatrix::identity(4 * k, 4 * k)).unwrap();
            assert_eq!(s, HyperKahlerSpace::standard(k).unwrap());
        }
    }

    #[test]
    fn random_spaces_are_quaternionic_and_skew() {
        for seed in 0..20 {
            for k in 1..=3 {
                let s = HyperKahlerSpace::random(k, seed).unwrap();
                let r = s.check_quaternionic(1e-9);
                assert!(r.pass, "seed {seed} k {k}: {r:?}");
                for a in Axis::ALL {
                    assert!(linalg::skew_residual(&s.omega_matrix(a)) < 1e-10);
                }
            }
        }
    }

    #[test]
    fn random_is_deterministic_in_seed() {
        assert_eq!(
            HyperKahlerSpace::random(2, 99).unwrap(),
            HyperKahlerSpace::random(2, 99).unwrap()
        );
        assert_ne!(
            HyperKahlerSpace::random(2, 99).unwrap(),
            HyperKahlerSpace::random(2, 100).unwrap()
        );
    }

    #[test]
    fn standard_kahler_forms() {
        let s = HyperKahlerSpace::standard(1).unwrap();
        let f = s.kahler_forms().unwrap();
        assert_eq!(*f.form(Axis::I), e(&[0, 1]).add(&e(&[2, 3])).unwrap());
        assert_eq!(*f.form(Axis::J), e(&[0, 2]).sub(&e(&[1, 3])).unwrap());
        assert_eq!(*f.form(Axis::K), e(&[0, 3]).add(&e(&[1, 2])).unwrap());
        let vol = volume_form(&s.metric());
        assert_eq!(wedge(f.form(Axis::I), f.form(Axis::I)).unwrap(), vol.scale(2.0));
        assert!(wedge(f.form(Axis::I), f.form(Axis::J)).unwrap().is_zero());
    }

    #[test]
    fn omega_matrix_is_bilinear_g_av_w() {
        let s = HyperKahlerSpace::random(1, 3).unwrap();
        let v = DVector::from_vec(alloc::vec![0.3, -1.2, 0.7, 2.0]);
        let w = DVector::from_vec(alloc::vec![1.1, 0.4, -0.5, 0.9]);
        for a in Axis::ALL {
            let lhs = (s.structure(a) * &v).dot(&(s.gram() * &w));
            let rhs = v.dot(&(s.omega_matrix(a) * &w));
            assert!((lhs - rhs).abs() < 1e-10);
        }
    }

    #[test]
    fn unit_structure_examples() {
        let s = HyperKahlerSpace::standard(1).unwrap();
        assert_eq!(s.unit_structure(1.0, 0.0, 0.0).unwrap(), *s.structure(Axis::I));
        let mk = s.unit_structure(0.0, 0.0, -1.0).unwrap();
        assert_eq!(mk, -s.structure(Axis::K));
        assert_eq!(&mk * &mk, -DMatrix::<f64>::identity(4, 4));
        let t = 1.0 / libm::sqrt(3.0);
        let q = s.unit_structure(t, t, t).unwrap();
        assert!((&q * &q + DMatrix::<f64>::identity(4, 4)).norm() < 1e-10);
        assert!(matches!(s.unit_structure(1.0, 1.0, 0.0), Err(Error::NotUnit { .. })));
    }

    #[test]
    fn corrupted_structure_fails_report() {
        let s = HyperKahlerSpace::standard(1).unwrap();
        let mut i = s.structure(Axis::I).clone();
        i[(1, 0)] += 0.01;
        let r = s.with_structure(Axis::I, i).check_quaternionic(1e-9);
        assert!(!r.pass);
        assert!(r.worst() > 5e-3 && r.worst() < 5e-2, "{r:?}");
    }

    #[test]
    fn musical_examples() {
        let s = HyperKahlerSpace::standard(1).unwrap();
        let e0 = DVector::from_vec(alloc::vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(s.musical_flat(&e0), e0);
        let g = DMatrix::from_diagonal(&DVector::from_vec(alloc::vec![2.0, 1.0, 1.0, 1.0]));
        let t = HyperKahlerSpace { gram: g, ..s.clone() };
        assert_eq!(t.musical_flat(&e0), e0.scale(0.5));
        let r = HyperKahlerSpace::random(1, 8).unwrap();
        let v = DVector::from_vec(alloc::vec![0.2, 1.0, -0.4, 0.6]);
        assert!((r.musical_sharp(&r.musical_flat(&v)) - &v).norm() < 1e-10);
    }

    #[test]
    fn from_parts_orientation_matches_generator() {
        for seed in 0..10 {
            let r = HyperKahlerSpace::random(1, seed).unwrap();
            let rebuilt =
                HyperKahlerSpace::from_parts(1, r.gram().clone(), Axis::ALL.map(|a| r.structure(a).clone()), 1e-9)
                    .unwrap();
            assert_eq!(rebuilt.orientation(), r.orientation());
        }
        let s = HyperKahlerSpace::standard(1).unwrap();
        let bad = s.structure(Axis::I) * 2.0;
        assert!(matches!(
            HyperKahlerSpace::from_parts(
                1,
                s.gram().clone(),
                [bad, s.structure(Axis::J).clone(), s.structure(Axis::K).clone()],
                1e-9
            ),
            Err(Error::NotQuaternionic { .. })
        ));
    }
}
