//! Metric and quaternionic structure recovered from three symplectic forms.
//!
//! A bilinear form `b` is identified with the map `v ↦ b(v, ·)`; with `Ω` the
//! matrix of `b(v, w) = vᵀ Ω w` this map has matrix `W = Ωᵀ`. Compositions
//! are taken literally under that identification: the candidate metric is
//! `g = W_I W_J⁻¹ W_K` and the structures are `A = g⁻¹ W_A`, so that
//! `ω_A(v, w) = g(Av, w)`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;
use crate::quaternionic::{Axis, HyperKahlerSpace, QuaternionicReport};

/// Condition number past which a form or metric is rejected as singular.
pub const MAX_CONDITION: f64 = 1e12;
/// Relative asymmetry tolerated in `g` before the signature is computed.
pub const SYMMETRY_GATE: f64 = 1e-8;
/// `g` is positive definite when `λ_min > margin · ‖g‖`.
pub const POSITIVITY_MARGIN: f64 = 1e-10;
/// Tolerance on the recovered quaternionic relations.
pub const QUATERNIONIC_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticTriple {
    maps: [DMatrix<f64>; 3],
}

impl SymplecticTriple {
    /// From the maps `v ↦ ω_A(v, ·)`.
    pub fn from_maps(maps: [DMatrix<f64>; 3]) -> Result<Self> {
        let dim = maps[0].nrows();
        if dim == 0 || dim % 2 != 0 {
            return Err(Error::UnsupportedDimension { dim, max: usize::MAX });
        }
        for m in &maps {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: if m.nrows() != dim { m.nrows() } else { m.ncols() },
                });
            }
        }
        Ok(SymplecticTriple { maps })
    }

    /// From bilinear matrices `Ω_A` with `ω_A(v, w) = vᵀ Ω_A w`.
    pub fn from_bilinear(forms: [DMatrix<f64>; 3]) -> Result<Self> {
        Self::from_maps(forms.map(|m| m.transpose()))
    }

    /// The Kähler forms of a hyper-Kähler space.
    pub fn from_space(space: &HyperKahlerSpace) -> Result<Self> {
        Self::from_bilinear(Axis::ALL.map(|a| space.omega_matrix(a)))
    }

    pub fn dim(&self) -> usize {
        self.maps[0].nrows()
    }

    pub fn map(&self, axis: Axis) -> &DMatrix<f64> {
        &self.maps[axis.index()]
    }

    pub fn bilinear(&self, axis: Axis) -> DMatrix<f64> {
        self.map(axis).transpose()
    }

    pub fn with_map(&self, axis: Axis, m: DMatrix<f64>) -> Self {
        let mut out = self.clone();
        out.maps[axis.index()] = m;
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    /// `‖W + Wᵀ‖ / ‖W‖` per axis.
    pub skew: [f64; 3],
    pub condition: [f64; 3],
    /// `‖W_A⁻¹W_B + W_B⁻¹W_A‖ / ‖W_A⁻¹W_B‖` for `(A, B)` = `(I, J)`, `(J, K)`, `(K, I)`.
    pub relations: [f64; 3],
    pub tolerance: f64,
    pub pass: bool,
}

impl ValidationReport {
    pub fn worst(&self) -> f64 {
        self.skew
            .iter()
            .chain(&self.relations)
            .fold(0.0, |w, &r| f64::max(w, r))
    }
}

/// Skewness, conditioning and the anticommutation conditions
/// `W_I⁻¹W_J = −W_J⁻¹W_I` (and cyclically).
pub fn validate_triple(t: &SymplecticTriple, tol: f64) -> Result<ValidationReport> {
    let mut condition = [0.0; 3];
    for a in Axis::ALL {
        let c = linalg::condition_number(t.map(a));
        if !(c <= MAX_CONDITION) {
            return Err(Error::SingularForm { axis: a, condition: c });
        }
        condition[a.index()] = c;
    }
    let skew = Axis::ALL.map(|a| linalg::skew_residual(t.map(a)));
    let mut relations = [0.0; 3];
    for a in Axis::ALL {
        let b = a.next();
        let ab = linalg::solve(t.map(a), t.map(b), MAX_CONDITION)?;
        let ba = linalg::solve(t.map(b), t.map(a), MAX_CONDITION)?;
        relations[a.index()] = (&ab + &ba).norm() / ab.norm();
    }
    let worst = skew.iter().chain(&relations).fold(0.0, |w: f64, &r| w.max(r));
    Ok(ValidationReport {
        skew,
        condition,
        relations,
        tolerance: tol,
        pass: worst < tol,
    })
}

/// `g = W_I W_J⁻¹ W_K` and its relative asymmetry, without any gate.
pub fn raw_metric(t: &SymplecticTriple) -> Result<(DMatrix<f64>, f64)> {
    let jk = linalg::solve(t.map(Axis::J), t.map(Axis::K), MAX_CONDITION).map_err(|e| match e {
        Error::Singular { condition } => Error::SingularForm {
            axis: Axis::J,
            condition,
        },
        other => other,
    })?;
    let g = t.map(Axis::I) * jk;
    let residual = linalg::symmetry_residual(&g);
    Ok((g, residual))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricReconstruction {
    pub g: DMatrix<f64>,
    pub symmetric_residual: f64,
    /// Positive and negative eigenvalue counts of the symmetrized metric.
    pub signature: (usize, usize),
    pub min_eigenvalue: f64,
}

/// The metric of a validated triple. Fails when the triple does not pass
/// [`validate_triple`] at `tol` or when the result is asymmetric beyond
/// [`SYMMETRY_GATE`].
pub fn metric_from_triple(t: &SymplecticTriple, tol: f64) -> Result<MetricReconstruction> {
    let report = validate_triple(t, tol)?;
    if !report.pass {
        return Err(Error::InvalidTriple {
            residual: report.worst(),
        });
    }
    let (g, symmetric_residual) = raw_metric(t)?;
    if symmetric_residual > SYMMETRY_GATE {
        return Err(Error::NotSymmetric {
            residual: symmetric_residual,
        });
    }
    let zero = POSITIVITY_MARGIN * g.norm();
    let (plus, minus, min_eigenvalue) = linalg::signature(&g, zero);
    Ok(MetricReconstruction {
        g,
        symmetric_residual,
        signature: (plus, minus),
        min_eigenvalue,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct StructureRecovery {
    pub structures: [DMatrix<f64>; 3],
    /// Residuals of `A² = −1`, `IJK = −1` and `AᵀgA = g`.
    pub quaternionic: QuaternionicReport,
    /// `‖IJK − 1‖`, normalized like the `IJK = −1` residual, for callers
    /// that want to detect a reversed orientation.
    pub ijk_plus_residual: f64,
}

impl StructureRecovery {
    pub fn structure(&self, axis: Axis) -> &DMatrix<f64> {
        &self.structures[axis.index()]
    }
}

/// `A = g⁻¹ W_A` for each axis, evaluated as `I = −W_J⁻¹W_K` and its cyclic
/// shifts; both agree when `g = W_I W_J⁻¹ W_K`, and the product form keeps
/// its accuracy when `g` is badly conditioned. `g` is used for the
/// compatibility check.
pub fn structures_from_triple(t: &SymplecticTriple, g: &DMatrix<f64>) -> Result<StructureRecovery> {
    if g.nrows() != t.dim() || g.ncols() != t.dim() {
        return Err(Error::DimensionMismatch {
            expected: t.dim(),
            found: g.nrows(),
        });
    }
    let sym = linalg::symmetrize(g);
    let mut structures = [DMatrix::zeros(0, 0), DMatrix::zeros(0, 0), DMatrix::zeros(0, 0)];
    for a in Axis::ALL {
        let (b, c) = (a.next(), a.next().next());
        let x = linalg::solve(t.map(b), t.map(c), MAX_CONDITION).map_err(|e| match e {
            Error::Singular { condition } => Error::SingularForm { axis: b, condition },
            other => other,
        })?;
        structures[a.index()] = -x;
    }
    let quaternionic = QuaternionicReport::measure(Some(&sym), &structures, QUATERNIONIC_TOL);
    let dim = t.dim();
    let [i, j, k] = &structures;
    let scale = |m: &DMatrix<f64>| f64::max(1.0, m.norm_squared() / dim as f64);
    let ijk_plus_residual =
        (i * j * k - DMatrix::<f64>::identity(dim, dim)).norm() / libm::sqrt(scale(i) * scale(j) * scale(k));
    Ok(StructureRecovery {
        structures,
        quaternionic,
        ijk_plus_residual,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PositivityReport {
    pub pass: bool,
    pub min_eigenvalue: f64,
}

/// Positive definiteness of a symmetric metric with margin `tol · ‖g‖`.
pub fn is_positive_definite(g: &DMatrix<f64>, tol: f64) -> Result<PositivityReport> {
    let residual = linalg::symmetry_residual(g);
    if residual > SYMMETRY_GATE {
        return Err(Error::NotSymmetric { residual });
    }
    let eig = nalgebra::SymmetricEigen::new(linalg::symmetrize(g));
    let min_eigenvalue = eig.eigenvalues.min();
    Ok(PositivityReport {
        pass: min_eigenvalue > tol * g.norm(),
        min_eigenvalue,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// Positive-definite metric with quaternionic structures.
    HyperKahler,
    /// Indefinite or negative metric with quaternionic structures.
    PseudoHyperKahler { plus: usize, minus: usize },
    /// The recovered structures fail the quaternionic relations.
    NotQuaternionic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructionResult {
    pub validation: ValidationReport,
    pub metric: MetricReconstruction,
    pub structures: StructureRecovery,
    pub positivity: PositivityReport,
    pub verdict: Verdict,
}

/// Full pipeline: validate, build `g`, recover `I, J, K`, classify.
pub fn reconstruct(t: &SymplecticTriple, tol: f64) -> Result<ReconstructionResult> {
    let validation = validate_triple(t, tol)?;
    let metric = metric_from_triple(t, tol)?;
    let structures = structures_from_triple(t, &metric.g)?;
    let positivity = is_positive_definite(&metric.g, POSITIVITY_MARGIN)?;
    let verdict = if !structures.quaternionic.pass {
        Verdict::NotQuaternionic
    } else if positivity.pass {
        Verdict::HyperKahler
    } else {
        Verdict::PseudoHyperKahler {
            plus: metric.signature.0,
            minus: metric.signature.1,
        }
    };
    Ok(ReconstructionResult {
        validation,
        metric,
        structures,
        positivity,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_triple_validates_exactly() {
        let s = HyperKahlerSpace::standard(1).unwrap();
        let t = SymplecticTriple::from_space(&s).unwrap();
        let r = validate_triple(&t, 1e-12).unwrap();
        assert!(r.pass);
        assert_eq!(r.worst(), 0.0);
    }

    #[test]
    fn duplicated_axis_fails_validation() {
        let s = HyperKahlerSpace::standard(1).unwrap();
        let t = SymplecticTriple::from_space(&s).unwrap();
        let bad = t.with_map(Axis::K, t.map(Axis::I).clone());
        let r = validate_triple(&bad, 1e-9).unwrap();
        assert!(!r.pass);
        assert!(r.worst() > 0.5);
        assert!(matches!(
            metric_from_triple(&bad, 1e-9),
            Err(Error::InvalidTriple { .. })
        ));
    }

    #[test]
    fn singular_form_names_axis() {
        let s = HyperKahlerSpace::standard(1).unwrap();
        let t = SymplecticTriple::from_space(&s).unwrap();
        let bad = t.with_map(Axis::J, DMatrix::zeros(4, 4));
        assert!(matches!(
            validate_triple(&bad, 1e-9),
            Err(Error::SingularForm { axis: Axis::J, .. })
        ));
    }

    #[test]
    fn mismatched_dimensions_rejected() {
        let r = SymplecticTriple::from_maps([
            DMatrix::identity(4, 4),
            DMatrix::identity(4, 4),
            DMatrix::identity(6, 6),
        ]);
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn standard_metric_and_structures() {
        let s = HyperKahlerSpace::standard(1).unwrap();
        let t = SymplecticTriple::from_space(&s).unwrap();
        let m = metric_from_triple(&t, 1e-9).unwrap();
        assert_eq!(m.g, DMatrix::<f64>::identity(4, 4));
        assert_eq!(m.signature, (4, 0));
        let rec = structures_from_triple(&t, &m.g).unwrap();
        for a in Axis::ALL {
            assert_eq!(rec.structure(a), s.structure(a));
        }
    }

    #[test]
    fn flipped_k_is_negative_definite_and_still_quaternionic() {
        let s = HyperKahlerSpace::standard(1).unwrap();
        let t = SymplecticTriple::from_space(&s).unwrap();
        let flipped = t.with_map(Axis::K, -t.map(Axis::K));
        let r = reconstruct(&flipped, 1e-9).unwrap();
        assert_eq!(r.metric.signature, (0, 4));
        assert!(!r.positivity.pass);
        assert!(r.structures.quaternionic.pass);
        assert_eq!(r.verdict, Verdict::PseudoHyperKahler { plus: 0, minus: 4 });
    }

    #[test]
    fn positivity_examples() {
        let id = DMatrix::<f64>::identity(4, 4);
        let r = is_positive_definite(&id, 1e-10).unwrap();
        assert!(r.pass);
        assert_eq!(r.min_eigenvalue, 1.0);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(alloc::vec![1.0, 1.0, 1.0, -1.0]));
        let r = is_positive_definite(&d, 1e-10).unwrap();
        assert!(!r.pass);
        assert_eq!(r.min_eigenvalue, -1.0);
        let mut asym = id.clone();
        asym[(0, 1)] = 0.5;
        assert!(matches!(
            is_positive_definite(&asym, 1e-10),
            Err(Error::NotSymmetric { .. })
        ));
    }

    #[test]
    fn random_roundtrip() {
        for seed in 0..10 {
            let s = HyperKahlerSpace::random(2, seed).unwrap();
            let t = SymplecticTriple::from_space(&s).unwrap();
            let r = reconstruct(&t, 1e-9).unwrap();
            assert_eq!(r.verdict, Verdict::HyperKahler);
            assert!(linalg::relative_diff(&r.metric.g, s.gram()) < 1e-9);
            for a in Axis::ALL {
                assert!(linalg::relative_diff(r.structures.structure(a), s.structure(a)) < 1e-8);
            }
            let pd = is_positive_definite(s.gram(), 1e-10).unwrap();
            assert!(pd.pass);
        }
    }
}
