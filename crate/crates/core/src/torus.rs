//! Tangent spaces of the moduli of flat `G`-bundles over flat tori `T^{4k}`.
//!
//! At a holonomy tuple `φ` (commuting generators of `G`, one per circle
//! factor) the harmonic 1-forms with values in the adjoint bundle are the
//! constant forms with values in the invariant subalgebra `𝔤^φ`, so the
//! tangent space is modeled as `𝔤^φ ⊗ R^{4k}` with basis `ξ_a ⊗ dx_μ`
//! ordered `a`-major. On it the L² metric is `vol · (B ⊗ g*)` and the three
//! pairings are `vol · (B ⊗ ϖ_A)`.
//!
//! [`lattice_harmonic_oracle`] computes the same harmonic dimension from
//! scratch as the kernel of a twisted cubical Hodge Laplacian.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::exterior::factorial;
use crate::lefschetz;
use crate::linalg;
use crate::quaternionic::{Axis, HyperKahlerSpace};
use crate::reconstruct::{self, ReconstructionResult, SymplecticTriple, Verdict};
use crate::spectral::{self, CsrMatrix, EigenOptions, SymmetricOperator};

pub type C64 = Complex<f64>;

/// Default tolerance for the invariant-subalgebra rank decision.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;
/// Unitarity and commutation tolerance for holonomy generators.
pub const GENERATOR_TOL: f64 = 1e-10;
/// Largest `k` for the tangent model on `T^{4k}`.
pub const MAX_TORUS_K: usize = 3;
/// Resonance guard width for the lattice oracle.
pub const RESONANCE_TOL: f64 = 1e-6;

fn cis(theta: f64) -> C64 {
    C64::new(libm::cos(theta), libm::sin(theta))
}

fn adjoint_of(m: &DMatrix<C64>) -> DMatrix<C64> {
    m.adjoint()
}

/// A compact matrix group through its Lie algebra basis and invariant inner
/// product `B(ξ, η) = −Re tr(ξη)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CompactGroupData {
    pub name: String,
    pub matrix_dim: usize,
    /// Rank of the group, the dimension of a maximal torus.
    pub rank: usize,
    pub basis: Vec<DMatrix<C64>>,
    /// `B` in the basis above.
    pub inner: DMatrix<f64>,
}

impl CompactGroupData {
    pub fn new(name: &str, rank: usize, basis: Vec<DMatrix<C64>>) -> Result<Self> {
        let matrix_dim = basis.first().map_or(0, |b| b.nrows());
        let inner = DMatrix::from_fn(basis.len(), basis.len(), |a, b| trace_form(&basis[a], &basis[b]));
        let eig = nalgebra::SymmetricEigen::new(inner.clone());
        if eig.eigenvalues.min() <= 0.0 {
            return Err(Error::NotPositiveDefinite {
                eigenvalue: eig.eigenvalues.min(),
            });
        }
        Ok(CompactGroupData {
            name: name.into(),
            matrix_dim,
            rank,
            basis,
            inner,
        })
    }

    /// `SU(2)` with basis `iσ_a / √2`, orthonormal for `B = −tr(ξη)`.
    pub fn su2() -> Self {
        let s = 1.0 / libm::sqrt(2.0);
        let z = C64::new(0.0, 0.0);
        let i = C64::new(0.0, s);
        let r = C64::new(s, 0.0);
        let basis = vec![
            DMatrix::from_row_slice(2, 2, &[z, i, i, z]),
            DMatrix::from_row_slice(2, 2, &[z, r, -r, z]),
            DMatrix::from_row_slice(2, 2, &[i, z, z, -i]),
        ];
        Self::new("su2", 1, basis).expect("su(2) trace form is definite")
    }

    pub fn algebra_dim(&self) -> usize {
        self.basis.len()
    }

    /// Coordinates of a Lie algebra element in the basis.
    pub fn coordinates(&self, xi: &DMatrix<C64>) -> DVector<f64> {
        let rhs = DVector::from_fn(self.algebra_dim(), |b, _| trace_form(&self.basis[b], xi));
        self.inner
            .clone()
            .cholesky()
            .expect("B validated at construction")
            .solve(&rhs)
    }

    /// `Ad(u)` in basis coordinates.
    pub fn adjoint(&self, u: &DMatrix<C64>) -> DMatrix<f64> {
        let u_inv = adjoint_of(u);
        let cols: Vec<DVector<f64>> = self
            .basis
            .iter()
            .map(|xi| self.coordinates(&(u * xi * &u_inv)))
            .collect();
        DMatrix::from_columns(&cols)
    }

    /// `‖Ad(u)ᵀ B Ad(u) − B‖_F`.
    pub fn invariance_residual(&self, u: &DMatrix<C64>) -> f64 {
        let ad = self.adjoint(u);
        (ad.transpose() * &self.inner * ad - &self.inner).norm()
    }
}

fn trace_form(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    -(a * b).trace().re
}

/// Commuting unitary generators, one per circle factor of the torus.
#[derive(Clone, Debug, PartialEq)]
pub struct HolonomyTuple {
    pub group: CompactGroupData,
    pub generators: Vec<DMatrix<C64>>,
}

impl HolonomyTuple {
    pub fn new(group: CompactGroupData, generators: Vec<DMatrix<C64>>) -> Result<Self> {
        let d = group.matrix_dim;
        let id = DMatrix::<C64>::identity(d, d);
        for (index, u) in generators.iter().enumerate() {
            if u.nrows() != d || u.ncols() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: u.nrows(),
                });
            }
            let residual = (u.adjoint() * u - &id).norm();
            if residual > GENERATOR_TOL {
                return Err(Error::NotUnitary { index, residual });
            }
        }
        for i in 0..generators.len() {
            for j in i + 1..generators.len() {
                let (a, b) = (&generators[i], &generators[j]);
                let residual = (a * b - b * a).norm();
                if residual > GENERATOR_TOL {
                    return Err(Error::NotCommuting { i, j, residual });
                }
            }
        }
        Ok(HolonomyTuple { group, generators })
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn adjoint_matrices(&self) -> Vec<DMatrix<f64>> {
        self.generators.iter().map(|u| self.group.adjoint(u)).collect()
    }

    /// Eigenphases `β_j − β_l` of each `Ad(φ_μ)`, reduced to `(−π, π]`.
    pub fn adjoint_phases(&self) -> Vec<Vec<f64>> {
        self.generators
            .iter()
            .map(|u| {
                let eig = unitary_eigenphases(u);
                let mut out = Vec::new();
                for (j, a) in eig.iter().enumerate() {
                    for (l, b) in eig.iter().enumerate() {
                        if j != l {
                            out.push(reduce_angle(a - b));
                        }
                    }
                }
                out
            })
            .collect()
    }
}

fn unitary_eigenphases(u: &DMatrix<C64>) -> Vec<f64> {
    let d = u.nrows();
    let diagonal = (0..d).all(|i| (0..d).all(|j| i == j || u[(i, j)] == C64::new(0.0, 0.0)));
    let values: Vec<C64> = if diagonal {
        (0..d).map(|i| u[(i, i)]).collect()
    } else {
        let schur = nalgebra::Schur::new(u.clone());
        let (_, t) = schur.unpack();
        (0..d).map(|i| t[(i, i)]).collect()
    };
    values.iter().map(|z| libm::atan2(z.im, z.re)).collect()
}

fn reduce_angle(a: f64) -> f64 {
    let two_pi = 2.0 * core::f64::consts::PI;
    let mut r = a - two_pi * libm::floor(a / two_pi);
    if r > core::f64::consts::PI {
        r -= two_pi;
    }
    r
}

/// `φ_μ = diag(e^{iθ_μ}, e^{−iθ_μ})` in `SU(2)`.
pub fn su2_holonomy_from_angles(angles: &[f64]) -> Result<HolonomyTuple> {
    let z = C64::new(0.0, 0.0);
    let generators = angles
        .iter()
        .map(|&t| DMatrix::from_row_slice(2, 2, &[cis(t), z, z, cis(-t)]))
        .collect();
    HolonomyTuple::new(CompactGroupData::su2(), generators)
}

/// B-orthonormal basis of the fixed subalgebra `𝔤^φ`.
#[derive(Clone, Debug, PartialEq)]
pub struct InvariantSubalgebra {
    /// Columns are coordinates of the basis elements.
    pub basis: DMatrix<f64>,
    /// Singular values of the stacked `Ad(φ_μ) − 1`.
    pub singular_values: Vec<f64>,
}

impl InvariantSubalgebra {
    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }
}

/// Numerical kernel of the stacked maps `Ad(φ_μ) − 1`.
///
/// Singular values below `tol` count as kernel; one within a factor of ten of
/// `tol` on either side is reported as ambiguous.
pub fn invariant_subalgebra(phi: &HolonomyTuple, tol: f64) -> Result<InvariantSubalgebra> {
    let g = phi.group.algebra_dim();
    let ads = phi.adjoint_matrices();
    let id = DMatrix::<f64>::identity(g, g);
    let mut stacked = DMatrix::zeros(g * ads.len().max(1), g);
    for (mu, ad) in ads.iter().enumerate() {
        stacked.view_mut((mu * g, 0), (g, g)).copy_from(&(ad - &id));
    }
    // Right singular vectors of the stacked map via its normal matrix, whose
    // eigenvalues are the squared singular values.
    let normal = stacked.transpose() * &stacked;
    let eig = nalgebra::SymmetricEigen::new(normal);
    let mut singular_values = Vec::with_capacity(g);
    let mut kernel = Vec::new();
    for i in 0..g {
        let s = libm::sqrt(eig.eigenvalues[i].max(0.0));
        singular_values.push(s);
        if s > tol / 10.0 && s < tol * 10.0 {
            return Err(Error::AmbiguousRank { singular_value: s, tol });
        }
        if s < tol {
            kernel.push(eig.eigenvectors.column(i).into_owned());
        }
    }
    singular_values.sort_by(f64::total_cmp);
    let basis = if kernel.is_empty() {
        DMatrix::zeros(g, 0)
    } else {
        b_orthonormalize(&DMatrix::from_columns(&kernel), &phi.group.inner)
    };
    Ok(InvariantSubalgebra { basis, singular_values })
}

fn b_orthonormalize(vectors: &DMatrix<f64>, inner: &DMatrix<f64>) -> DMatrix<f64> {
    let gram = linalg::symmetrize(&(vectors.transpose() * inner * vectors));
    let l = gram.cholesky().expect("independent kernel vectors").l();
    let l_inv_t = l.transpose().try_inverse().expect("Cholesky factor is invertible");
    vectors * l_inv_t
}

/// The model `𝔤^φ ⊗ R^{4k}` of the tangent space at `[φ]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentModel {
    pub invariant: InvariantSubalgebra,
    /// `B` restricted to `𝔤^φ` in the invariant basis.
    pub b_restricted: DMatrix<f64>,
    /// Fiber of the torus: the standard flat hyper-Kähler space.
    pub torus: HyperKahlerSpace,
    pub scale: f64,
    pub volume: f64,
    pub l2_gram: DMatrix<f64>,
    pub pairings: [DMatrix<f64>; 3],
    pub generic: bool,
}

impl TangentModel {
    /// Dimension `r · 4k`.
    pub fn dim(&self) -> usize {
        self.invariant.rank() * self.torus.dim()
    }

    pub fn rank(&self) -> usize {
        self.invariant.rank()
    }

    pub fn is_empty(&self) -> bool {
        self.dim() == 0
    }

    pub fn pairing(&self, axis: Axis) -> &DMatrix<f64> {
        &self.pairings[axis.index()]
    }
}

/// Builds the tangent model at `φ` on the cubical torus `[0, scale]^{4k}`
/// with its flat Euclidean metric.
pub fn tangent_model(phi: &HolonomyTuple, k: usize, scale: f64) -> Result<TangentModel> {
    tangent_model_with_tol(phi, k, scale, DEFAULT_RANK_TOL)
}

pub fn tangent_model_with_tol(phi: &HolonomyTuple, k: usize, scale: f64, tol: f64) -> Result<TangentModel> {
    if k == 0 || k > MAX_TORUS_K {
        return Err(Error::QuaternionicDimension { k, max: MAX_TORUS_K });
    }
    let torus = HyperKahlerSpace::standard(k)?;
    if phi.len() != torus.dim() {
        return Err(Error::GeneratorCount {
            expected: torus.dim(),
            found: phi.len(),
        });
    }
    if !(scale > 0.0) {
        return Err(Error::NotPositiveDefinite { eigenvalue: scale });
    }
    let invariant = invariant_subalgebra(phi, tol)?;
    let b_restricted = linalg::symmetrize(&(invariant.basis.transpose() * &phi.group.inner * &invariant.basis));
    let volume = libm::pow(scale, torus.dim() as f64);
    let dual = torus.metric().dual_gram().clone();
    let l2_gram = linalg::kron(&b_restricted, &dual) * volume;
    let generic = invariant.rank() == phi.group.rank;
    let mut model = TangentModel {
        invariant,
        b_restricted,
        torus,
        scale,
        volume,
        l2_gram,
        pairings: [DMatrix::zeros(0, 0), DMatrix::zeros(0, 0), DMatrix::zeros(0, 0)],
        generic,
    };
    model.pairings = moduli_pairings(&model)?;
    Ok(model)
}

/// `vol · (B|_{𝔤^φ} ⊗ ϖ_A)` for each axis.
pub fn moduli_pairings(model: &TangentModel) -> Result<[DMatrix<f64>; 3]> {
    let fiber: Vec<DMatrix<f64>> = Axis::ALL
        .iter()
        .map(|&a| lefschetz::pairing_matrix(&model.torus, a).map(|p| p.matrix))
        .collect::<Result<_>>()?;
    Ok(core::array::from_fn(|a| {
        linalg::kron(&model.b_restricted, &fiber[a]) * model.volume
    }))
}

/// `r = rank G`: the tuple generates a maximal torus. Only these points are
/// claimed as smooth.
pub fn smoothness_heuristic(phi: &HolonomyTuple) -> Result<bool> {
    Ok(invariant_subalgebra(phi, DEFAULT_RANK_TOL)?.rank() == phi.group.rank)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModuliReport {
    pub reconstruction: ReconstructionResult,
    /// `(n−1)!`: the reconstructed metric is this multiple of the L² metric.
    pub metric_scale: f64,
    /// `‖g − (n−1)!·l2_gram‖ / ‖(n−1)!·l2_gram‖`.
    pub metric_residual: f64,
    pub tolerance: f64,
    pub generic: bool,
    pub pass: bool,
}

impl ModuliReport {
    pub fn verdict(&self) -> Verdict {
        self.reconstruction.verdict
    }

    /// Hyper-Kähler verdict at a point the smoothness heuristic accepts.
    pub fn theorem_backed(&self) -> bool {
        self.generic && self.reconstruction.verdict == Verdict::HyperKahler
    }
}

/// Feeds the three pairings to [`reconstruct::reconstruct`] and compares the
/// recovered metric with the L² metric.
pub fn moduli_hyperkahler_check(model: &TangentModel, tol: f64) -> Result<ModuliReport> {
    if model.is_empty() {
        return Err(Error::EmptyModel);
    }
    let triple = SymplecticTriple::from_bilinear(model.pairings.clone())?;
    let reconstruction = reconstruct::reconstruct(&triple, tol)?;
    let metric_scale = factorial(model.torus.n() - 1);
    let expected = &model.l2_gram * metric_scale;
    let metric_residual = linalg::relative_diff(&reconstruction.metric.g, &expected);
    let pass = metric_residual < reconstruct::SYMMETRY_GATE && reconstruction.verdict == Verdict::HyperKahler;
    Ok(ModuliReport {
        reconstruction,
        metric_scale,
        metric_residual,
        tolerance: tol,
        generic: model.generic,
        pass,
    })
}

/// Output of [`lattice_harmonic_oracle`].
#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult {
    pub grid: usize,
    pub kernel_dim: usize,
    /// Smallest eigenvalue outside the kernel.
    pub spectral_gap: f64,
    /// Spectral gap over the largest kernel eigenvalue.
    pub gap_ratio: f64,
    pub eigenvalues_head: Vec<f64>,
    pub unknowns: usize,
}

const LATTICE_DIM: usize = 4;
const HEAD: usize = 20;

/// Twisted cubical Hodge Laplacian on `𝔤`-valued 1-cochains of `(Z/N)^4`.
///
/// Crossing the cut `x_μ = N−1 → 0` transports by `Ad(φ_μ)`; all other edges
/// carry the identity.
pub struct TwistedLattice {
    pub grid: usize,
    pub algebra_dim: usize,
    pub d0: CsrMatrix,
    pub d1: CsrMatrix,
    d0t: CsrMatrix,
    d1t: CsrMatrix,
    upper: f64,
}

impl TwistedLattice {
    pub fn new(ads: &[DMatrix<f64>], grid: usize) -> Self {
        let g = ads[0].nrows();
        let n = grid;
        let sites = n.pow(LATTICE_DIM as u32);
        let id = DMatrix::<f64>::identity(g, g);
        let stride = |mu: usize| n.pow(mu as u32);
        let coord = |s: usize, mu: usize| (s / stride(mu)) % n;
        let shift = |s: usize, mu: usize| {
            if coord(s, mu) == n - 1 {
                s + stride(mu) - n * stride(mu)
            } else {
                s + stride(mu)
            }
        };
        let transport = |s: usize, mu: usize| if coord(s, mu) == n - 1 { &ads[mu] } else { &id };
        let pairs: Vec<(usize, usize)> = (0..LATTICE_DIM)
            .flat_map(|mu| (mu + 1..LATTICE_DIM).map(move |nu| (mu, nu)))
            .collect();
        let v0 = |s: usize, a: usize| s * g + a;
        let v1 = |s: usize, mu: usize, a: usize| (s * LATTICE_DIM + mu) * g + a;
        let v2 = |s: usize, p: usize, a: usize| (s * pairs.len() + p) * g + a;

        let mut t0 = Vec::new();
        let mut t1 = Vec::new();
        for s in 0..sites {
            for mu in 0..LATTICE_DIM {
                let (next, t) = (shift(s, mu), transport(s, mu));
                for a in 0..g {
                    t0.push((v1(s, mu, a), v0(s, a), -1.0));
                    for b in 0..g {
                        t0.push((v1(s, mu, a), v0(next, b), t[(a, b)]));
                    }
                }
            }
            for (p, &(mu, nu)) in pairs.iter().enumerate() {
                let (s_mu, t_mu) = (shift(s, mu), transport(s, mu));
                let (s_nu, t_nu) = (shift(s, nu), transport(s, nu));
                for a in 0..g {
                    let row = v2(s, p, a);
                    t1.push((row, v1(s, mu, a), 1.0));
                    t1.push((row, v1(s, nu, a), -1.0));
                    for b in 0..g {
                        t1.push((row, v1(s_mu, nu, b), t_mu[(a, b)]));
                        t1.push((row, v1(s_nu, mu, b), -t_nu[(a, b)]));
                    }
                }
            }
        }
        let d0 = CsrMatrix::from_triplets(sites * LATTICE_DIM * g, sites * g, t0);
        let d1 = CsrMatrix::from_triplets(sites * pairs.len() * g, sites * LATTICE_DIM * g, t1);
        let (b0, b1) = (d0.norm_bound(), d1.norm_bound());
        let upper = b0 * b0 + b1 * b1;
        TwistedLattice {
            grid,
            algebra_dim: g,
            d0t: d0.transpose(),
            d1t: d1.transpose(),
            d0,
            d1,
            upper,
        }
    }
}

impl SymmetricOperator for TwistedLattice {
    fn dim(&self) -> usize {
        self.d0.nrows()
    }

    /// `Δ₁ = d₀ d₀ᵀ + d₁ᵀ d₁`.
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let mut zero = vec![0.0; self.d0t.nrows()];
        self.d0t.matvec(x, &mut zero);
        self.d0.matvec(&zero, y);
        let mut two = vec![0.0; self.d1.nrows()];
        self.d1.matvec(x, &mut two);
        let mut back = vec![0.0; y.len()];
        self.d1t.matvec(&two, &mut back);
        for (yi, bi) in y.iter_mut().zip(&back) {
            *yi += bi;
        }
    }

    fn upper_bound(&self) -> f64 {
        self.upper
    }
}

/// Rejects adjoint phases that are nonzero multiples of `2π/N`.
pub fn check_lattice_resonance(phi: &HolonomyTuple, grid: usize) -> Result<()> {
    let step = 2.0 * core::f64::consts::PI / grid as f64;
    for (axis, phases) in phi.adjoint_phases().iter().enumerate() {
        for &alpha in phases {
            if alpha.abs() <= RESONANCE_TOL {
                continue;
            }
            let m = libm::round(alpha / step);
            if (alpha - m * step).abs() <= RESONANCE_TOL {
                return Err(Error::LatticeResonance {
                    axis,
                    angle: alpha,
                    grid,
                });
            }
        }
    }
    Ok(())
}

/// Dimension of the kernel of the twisted lattice Laplacian on `(Z/N)^4`.
///
/// Eigenvalues below 1% of the first eigenvalue above the numerical floor
/// are counted as kernel; a gap ratio under 10 is an error.
pub fn lattice_harmonic_oracle(phi: &HolonomyTuple, k: usize, grid: usize) -> Result<OracleResult> {
    if k != 1 {
        return Err(Error::Oracle(alloc::format!("only k = 1 is supported, got k = {k}")));
    }
    if !(4..=10).contains(&grid) {
        return Err(Error::Oracle(alloc::format!("grid size {grid} outside 4..=10")));
    }
    if phi.len() != LATTICE_DIM {
        return Err(Error::GeneratorCount {
            expected: LATTICE_DIM,
            found: phi.len(),
        });
    }
    check_lattice_resonance(phi, grid)?;
    let lattice = TwistedLattice::new(&phi.adjoint_matrices(), grid);
    let opts = EigenOptions {
        block: 48,
        want: HEAD,
        degree: 20,
        tol: 1e-7,
        max_iter: 300,
        seed: 0x1a77_1ce5,
        max_block: 192,
    };
    let spectrum = spectral::lowest_eigenvalues(&lattice, &opts)?;
    let floor = 1e-8 * spectrum.upper_bound;
    let gap = spectrum
        .eigenvalues
        .iter()
        .copied()
        .find(|&l| l > floor)
        .ok_or_else(|| Error::Oracle("kernel fills the whole search block".into()))?;
    let kernel: Vec<f64> = spectrum
        .eigenvalues
        .iter()
        .copied()
        .filter(|&l| l < 0.01 * gap)
        .collect();
    let largest_kernel = kernel.iter().fold(0.0f64, |m, &l| m.max(l.abs()));
    let gap_ratio = if largest_kernel > 0.0 {
        gap / largest_kernel
    } else {
        f64::INFINITY
    };
    if gap_ratio < 10.0 {
        return Err(Error::Oracle(alloc::format!("spectral gap ratio {gap_ratio} below 10")));
    }
    Ok(OracleResult {
        grid,
        kernel_dim: kernel.len(),
        spectral_gap: gap,
        gap_ratio,
        eigenvalues_head: spectrum.eigenvalues.iter().take(HEAD).copied().collect(),
        unknowns: lattice.dim(),
    })
}
