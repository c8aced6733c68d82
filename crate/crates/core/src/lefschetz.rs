//! Lefschetz operators `L_A = ω_A ∧ (·)`, their powers on covectors, the
//! pairings `ϖ_A` on `V*` and the operator identities tying them to the
//! quaternionic structure.
//!
//! For a hyper-Kähler space of real dimension `2n`,
//!
//! * `★⁻¹ ∘ L_A^{n-1} = (n−1)! · A*` on `V*`,
//! * `(L_I^{n-1})⁻¹ ∘ L_J^{n-1} = K*` and cyclically,
//!
//! so that the three pairings `ϖ_A(τ, η) = [τ ∧ L_A^{n-1} η] / vol` satisfy
//! the anticommutation conditions of a symplectic triple.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::exterior::{self, binomial, factorial, BasisIndex, KForm, MetricData};
use crate::linalg;
use crate::quaternionic::{Axis, HyperKahlerSpace};

/// Largest operator materialized as a dense matrix.
const MAX_ENTRIES: usize = 1 << 24;

/// Condition number past which `L^{n-1}` is treated as singular.
const MAX_CONDITION: f64 = 1e12;

/// A linear map `Λ^p → Λ^q` as a `C(2n, q) x C(2n, p)` matrix over blade
/// ranks.
#[derive(Clone, Debug, PartialEq)]
pub struct GradedMap {
    pub dim: usize,
    pub source_degree: usize,
    pub target_degree: usize,
    pub matrix: DMatrix<f64>,
}

impl GradedMap {
    pub fn apply(&self, form: &KForm) -> Result<KForm> {
        if form.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: form.dim(),
            });
        }
        if form.degree() != self.source_degree {
            return Err(Error::DegreeMismatch {
                expected: self.source_degree,
                found: form.degree(),
            });
        }
        let x = nalgebra::DVector::from_vec(form.to_dense());
        let y = &self.matrix * x;
        KForm::from_dense(self.dim, self.target_degree, y.as_slice())
    }
}

fn check_two_form(omega: &KForm) -> Result<()> {
    if omega.degree() != 2 {
        return Err(Error::DegreeMismatch {
            expected: 2,
            found: omega.degree(),
        });
    }
    Ok(())
}

/// `L = ω ∧ (·)` from `Λ^p` to `Λ^{p+2}` for an arbitrary 2-form.
pub fn lefschetz_operator_for(omega: &KForm, p: usize) -> Result<GradedMap> {
    check_two_form(omega)?;
    let dim = omega.dim();
    if p + 2 > dim {
        return Err(Error::DegreeOverflow { degree: p + 2, dim });
    }
    let (rows, cols) = (binomial(dim, p + 2), binomial(dim, p));
    if rows * cols > MAX_ENTRIES {
        return Err(Error::TooLarge { rows, cols });
    }
    let mut matrix = DMatrix::zeros(rows, cols);
    for (j, blade) in BasisIndex::all_of_degree(dim, p).enumerate() {
        let image = exterior::wedge(omega, &KForm::basis(dim, blade)?)?;
        for (b, c) in image.terms() {
            matrix[(b.rank(), j)] = c;
        }
    }
    Ok(GradedMap {
        dim,
        source_degree: p,
        target_degree: p + 2,
        matrix,
    })
}

pub fn lefschetz_operator(space: &HyperKahlerSpace, axis: Axis, p: usize) -> Result<GradedMap> {
    lefschetz_operator_for(&space.kahler_form(axis)?, p)
}

/// `L^e` from `Λ¹` to `Λ^{1+2e}`, applying `ω ∧ (·)` one step at a time to
/// each basis covector.
pub fn lefschetz_power_for(omega: &KForm, e: usize) -> Result<GradedMap> {
    check_two_form(omega)?;
    let dim = omega.dim();
    let target = 1 + 2 * e;
    if target > dim {
        return Err(Error::DegreeOverflow { degree: target, dim });
    }
    let mut matrix = DMatrix::zeros(binomial(dim, target), dim);
    for j in 0..dim {
        let mut image = KForm::blade(dim, &[j])?;
        for _ in 0..e {
            image = exterior::wedge(omega, &image)?;
        }
        for (b, c) in image.terms() {
            matrix[(b.rank(), j)] = c;
        }
    }
    Ok(GradedMap {
        dim,
        source_degree: 1,
        target_degree: target,
        matrix,
    })
}

pub fn lefschetz_power(space: &HyperKahlerSpace, axis: Axis, e: usize) -> Result<GradedMap> {
    lefschetz_power_for(&space.kahler_form(axis)?, e)
}

/// `L^{n-1}: Λ¹ → Λ^{2n-1}` as a square matrix.
fn top_power(omega: &KForm) -> Result<DMatrix<f64>> {
    Ok(lefschetz_power_for(omega, omega.dim() / 2 - 1)?.matrix)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LefschetzReport {
    pub invertible: bool,
    pub condition_number: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub tolerance: f64,
}

/// Invertibility of `L^{n-1}` on covectors: passes iff `σ_min / σ_max > tol`.
pub fn hard_lefschetz_check_for(omega: &KForm, tol: f64) -> Result<LefschetzReport> {
    let m = top_power(omega)?;
    let sv = m.singular_values();
    let (sigma_min, sigma_max) = (sv.min(), sv.max());
    let ratio = if sigma_max > 0.0 { sigma_min / sigma_max } else { 0.0 };
    Ok(LefschetzReport {
        invertible: ratio > tol,
        condition_number: if sigma_min > 0.0 {
            sigma_max / sigma_min
        } else {
            f64::INFINITY
        },
        sigma_min,
        sigma_max,
        tolerance: tol,
    })
}

pub fn hard_lefschetz_check(space: &HyperKahlerSpace, axis: Axis, tol: f64) -> Result<LefschetzReport> {
    hard_lefschetz_check_for(&space.kahler_form(axis)?, tol)
}

/// `ϖ` on the covector basis of one fiber.
#[derive(Clone, Debug, PartialEq)]
pub struct PairingMatrix {
    pub axis: Axis,
    pub matrix: DMatrix<f64>,
}

/// Entry `(i, j)` is the coefficient of `vol` in `e^i ∧ L^{n-1} e^j`.
pub fn pairing_matrix_for(omega: &KForm, metric: &MetricData) -> Result<DMatrix<f64>> {
    let dim = omega.dim();
    if metric.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: metric.dim(),
            found: dim,
        });
    }
    let l = top_power(omega)?;
    let vol = metric.volume_coefficient();
    let mut p = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        let ei = BasisIndex::from_bits(1 << i);
        let comp = ei.complement(dim);
        let sign = f64::from(exterior::merge_sign(ei, comp).expect("disjoint"));
        let row = comp.rank();
        for j in 0..dim {
            p[(i, j)] = sign * l[(row, j)] / vol;
        }
    }
    Ok(p)
}

pub fn pairing_matrix(space: &HyperKahlerSpace, axis: Axis) -> Result<PairingMatrix> {
    Ok(PairingMatrix {
        axis,
        matrix: pairing_matrix_for(&space.kahler_form(axis)?, &space.metric())?,
    })
}

/// `★⁻¹ ∘ L^{n-1}` as an endomorphism of `V*` in covector components.
pub fn star_lefschetz_for(omega: &KForm, metric: &MetricData) -> Result<DMatrix<f64>> {
    let dim = omega.dim();
    let l = top_power(omega)?;
    let mut out = DMatrix::zeros(dim, dim);
    for j in 0..dim {
        let image = KForm::from_dense(dim, dim - 1, l.column(j).as_slice())?;
        let back = exterior::star_inverse(&image, metric)?;
        for (b, c) in back.terms() {
            out[(b.rank(), j)] = c;
        }
    }
    Ok(out)
}

pub fn star_lefschetz(space: &HyperKahlerSpace, axis: Axis) -> Result<DMatrix<f64>> {
    star_lefschetz_for(&space.kahler_form(axis)?, &space.metric())
}

/// The scalar `c` in `★⁻¹ ∘ L^{n-1} = c · A*`, namely `(n−1)!`.
pub fn key_identity_scalar(n: usize) -> f64 {
    factorial(n - 1)
}

/// `‖★⁻¹ ∘ L_A^{n-1} − c·A*‖_F / ‖c·A*‖_F` for a caller-chosen scalar `c`.
pub fn key_identity_residual_with(space: &HyperKahlerSpace, axis: Axis, scalar: f64) -> Result<f64> {
    let op = star_lefschetz(space, axis)?;
    Ok(linalg::relative_diff(&op, &(space.dual_action(axis) * scalar)))
}

/// Residual of `★⁻¹ ∘ L_A^{n-1} = (n−1)!·A*`.
pub fn key_identity_residual(space: &HyperKahlerSpace, axis: Axis) -> Result<f64> {
    key_identity_residual_with(space, axis, key_identity_scalar(space.n()))
}

/// Least-squares `c` with `★⁻¹ ∘ L_A^{n-1} ≈ c·A*`.
pub fn key_identity_fitted_scalar(space: &HyperKahlerSpace, axis: Axis) -> Result<f64> {
    let op = star_lefschetz(space, axis)?;
    let a = space.dual_action(axis);
    Ok(op.dot(&a) / a.norm_squared())
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompositeReport {
    /// `(L_A^{n-1})⁻¹ L_B^{n-1} − C*` for `(A, B, C)` = `(I, J, K)`,
    /// `(J, K, I)`, `(K, I, J)`, relative to `‖C*‖`.
    pub composite: [f64; 3],
    /// `(L_A)⁻¹ L_B + (L_B)⁻¹ L_A` for the same pairs, relative to
    /// `‖(L_A)⁻¹ L_B‖`.
    pub anticommutation: [f64; 3],
}

impl CompositeReport {
    pub fn worst(&self) -> f64 {
        self.composite
            .iter()
            .chain(&self.anticommutation)
            .fold(0.0, |w, &r| f64::max(w, r))
    }
}

pub fn composite_identity_report(space: &HyperKahlerSpace) -> Result<CompositeReport> {
    let forms = space.kahler_forms()?;
    let powers: Vec<DMatrix<f64>> = Axis::ALL
        .iter()
        .map(|&a| top_power(forms.form(a)))
        .collect::<Result<_>>()?;
    let ratio = |a: Axis, b: Axis| -> Result<DMatrix<f64>> {
        linalg::solve(&powers[a.index()], &powers[b.index()], MAX_CONDITION)
            .map_err(|_| Error::LefschetzNotInvertible { axis: a })
    };
    let mut composite = [0.0; 3];
    let mut anticommutation = [0.0; 3];
    for a in Axis::ALL {
        let (b, c) = (a.next(), a.next().next());
        let ab = ratio(a, b)?;
        let ba = ratio(b, a)?;
        composite[a.index()] = linalg::relative_diff(&ab, &space.dual_action(c));
        anticommutation[a.index()] = (&ab + &ba).norm() / ab.norm();
    }
    Ok(CompositeReport {
        composite,
        anticommutation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(dim: usize, idx: &[usize]) -> KForm {
        KForm::blade(dim, idx).unwrap()
    }

    #[test]
    fn operator_examples() {
        let s = HyperKahlerSpace::standard(1).unwrap();
        let l = lefschetz_operator(&s, Axis::I, 1).unwrap();
        assert_eq!(l.apply(&e(4, &[0])).unwrap(), e(4, &[0, 2, 3]));
        let l0 = lefschetz_operator(&s, Axis::I, 0).unwrap();
        assert_eq!(
            l0.apply(&KForm::one(4).unwrap()).unwrap(),
            s.kahler_form(Axis::I).unwrap()
        );
        let s2 = HyperKahlerSpace::standard(2).unwrap();
        let l8 = lefschetz_operator(&s2, Axis::J, 1).unwrap();
        assert_eq!(l8.matrix.shape(), (56, 8));
        assert!(matches!(
            lefschetz_operator(&s, Axis::I, 3),
            Err(Error::DegreeOverflow { .. })
        ));
    }

    #[test]
    fn power_examples() {
        let s = HyperKahlerSpace::standard(1).unwrap();
        let p = lefschetz_power(&s, Axis::I, 1).unwrap();
        assert_eq!(p.matrix, lefschetz_operator(&s, Axis::I, 1).unwrap().matrix);
        assert_eq!(p.matrix.shape(), (4, 4));
        let lj = lefschetz_power(&s, Axis::J, 1).unwrap();
        assert_eq!(lj.apply(&e(4, &[0])).unwrap(), e(4, &[0, 1, 3]).scale(-1.0));
        let s2 = HyperKahlerSpace::standard(2).unwrap();
        let p3 = lefschetz_power(&s2, Axis::K, 3).unwrap();
        assert_eq!((p3.target_degree, p3.matrix.shape()), (7, (8, 8)));
        assert!(lefschetz_power(&s2, Axis::K, 4).is_err());
    }

    #[test]
    fn hard_lefschetz_standard_and_degenerate() {
        let s = HyperKahlerSpace::standard(1).unwrap();
        for a in Axis::ALL {
            let r = hard_lefschetz_check(&s, a, 1e-8).unwrap();
            assert!(r.invertible);
            assert!((r.sigma_min - r.sigma_max).abs() < 1e-12);
        }
        let zero = KForm::zero(4, 2).unwrap();
        let r = hard_lefschetz_check_for(&zero, 1e-8).unwrap();
        assert!(!r.invertible);
        assert_eq!(r.sigma_min, 0.0);
    }

    #[test]
    fn pairing_examples() {
        let s = HyperKahlerSpace::standard(1).unwrap();
        let p = pairing_matrix(&s, Axis::I).unwrap().matrix;
        assert_eq!(p[(0, 1)], 1.0);
        for i in 0..4 {
            assert_eq!(p[(i, i)], 0.0);
        }
        assert_eq!(p.transpose(), -p.clone());
    }

    #[test]
    fn pairing_scales_inversely_with_metric() {
        let s = HyperKahlerSpace::random(1, 11).unwrap();
        let scaled = s.with_scaled_metric(2.0);
        for a in Axis::ALL {
            let p = pairing_matrix(&s, a).unwrap().matrix;
            let q = pairing_matrix(&scaled, a).unwrap().matrix;
            assert!(linalg::relative_diff(&q, &(p * 0.5)) < 1e-12);
        }
    }

    #[test]
    fn key_identity_standard_is_exact() {
        for k in 1..=2 {
            let s = HyperKahlerSpace::standard(k).unwrap();
            for a in Axis::ALL {
                assert_eq!(key_identity_residual(&s, a).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn key_identity_scalar_is_n_minus_one_factorial() {
        for k in 1..=3 {
            let s = HyperKahlerSpace::random(k, 5).unwrap();
            let c = key_identity_fitted_scalar(&s, Axis::J).unwrap();
            assert!((c - factorial(2 * k - 1)).abs() < 1e-9 * c, "k {k}: {c}");
        }
    }

    #[test]
    fn key_identity_detects_corrupted_form() {
        let s = HyperKahlerSpace::standard(1).unwrap();
        let mut om = s.omega_matrix(Axis::I);
        om[(0, 1)] += 0.05;
        let bad = exterior::two_form_from_matrix(&om).unwrap();
        let op = star_lefschetz_for(&bad, &s.metric()).unwrap();
        let r = linalg::relative_diff(&op, &s.dual_action(Axis::I));
        assert!(r > 1e-3);
    }

    #[test]
    fn composite_standard_example() {
        let s = HyperKahlerSpace::standard(1).unwrap();
        let li = top_power(&s.kahler_form(Axis::I).unwrap()).unwrap();
        let lj = top_power(&s.kahler_form(Axis::J).unwrap()).unwrap();
        let m = li.lu().solve(&lj).unwrap();
        let image = m.column(0).into_owned();
        assert_eq!(image.as_slice(), &[0.0, 0.0, 0.0, -1.0]);
        let r = composite_identity_report(&s).unwrap();
        assert_eq!(r.worst(), 0.0);
    }

    #[test]
    fn composite_rejects_degenerate_axis() {
        let s = HyperKahlerSpace::standard(1).unwrap();
        let broken = s.with_structure(Axis::I, DMatrix::zeros(4, 4));
        assert!(matches!(
            composite_identity_report(&broken),
            Err(Error::LefschetzNotInvertible { axis: Axis::I })
        ));
    }

    #[test]
    fn graded_map_rejects_wrong_degree() {
        let s = HyperKahlerSpace::standard(1).unwrap();
        let l = lefschetz_operator(&s, Axis::I, 1).unwrap();
        assert!(l.apply(&e(4, &[0, 1])).is_err());
    }
}
