//! Exterior algebra of the dual of an oriented inner-product space of even
//! dimension `2n <= 16`.
//!
//! Basis blades `e^S` are addressed by a bitmask over the coordinate
//! covectors; the covectors inside a blade are always taken in increasing
//! index order. Within a fixed degree `p` blades are also ranked
//! `0..C(2n, p)` through the combinatorial number system, which is the row
//! and column order of every operator matrix in this crate.
//!
//! The Hodge star follows the convention `β ∧ ★α = ⟨β, α⟩ vol`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg;

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 16;

/// Fill ratio above which a form switches to dense storage.
const DENSE_FILL: f64 = 0.25;

const fn binomial_table() -> [[usize; MAX_DIM + 1]; MAX_DIM + 1] {
    let mut t = [[0usize; MAX_DIM + 1]; MAX_DIM + 1];
    let mut n = 0;
    while n <= MAX_DIM {
        t[n][0] = 1;
        let mut k = 1;
        while k <= n {
            t[n][k] = t[n - 1][k - 1] + if k < n { t[n - 1][k] } else { 0 };
            k += 1;
        }
        n += 1;
    }
    t
}

static BINOMIAL: [[usize; MAX_DIM + 1]; MAX_DIM + 1] = binomial_table();

/// `C(n, k)` for `n <= 16`, zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        0
    } else {
        BINOMIAL[n][k]
    }
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

/// A basis blade `e^{i_1 ... i_p}` stored as a bitmask.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct BasisIndex(u32);

impl BasisIndex {
    pub const EMPTY: BasisIndex = BasisIndex(0);

    pub const fn from_bits(bits: u32) -> Self {
        BasisIndex(bits)
    }

    /// Builds a blade from strictly increasing covector indices.
    pub fn from_indices(dim: usize, indices: &[usize]) -> Result<Self> {
        let mut bits = 0u32;
        let mut last = None;
        for &i in indices {
            if i >= dim {
                return Err(Error::IndexOutOfRange { index: i, dim });
            }
            if last.is_some_and(|l| i <= l) {
                return Err(Error::NonCanonicalBlade);
            }
            last = Some(i);
            bits |= 1 << i;
        }
        Ok(BasisIndex(bits))
    }

    /// The top blade `e^{0 1 ... dim-1}`.
    pub fn full(dim: usize) -> Self {
        BasisIndex(((1u64 << dim) - 1) as u32)
    }

    pub const fn bits(self) -> u32 {
        self.0
    }

    pub const fn degree(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn indices(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        core::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(i)
            }
        })
    }

    pub fn complement(self, dim: usize) -> Self {
        BasisIndex(Self::full(dim).0 & !self.0)
    }

    /// Position of this blade among the blades of its degree.
    pub fn rank(self) -> usize {
        self.indices().enumerate().map(|(j, i)| binomial(i, j + 1)).sum()
    }

    /// Inverse of [`BasisIndex::rank`].
    pub fn unrank(dim: usize, degree: usize, mut rank: usize) -> Self {
        let mut bits = 0u32;
        let mut top = dim;
        for j in (1..=degree).rev() {
            let mut i = top - 1;
            while binomial(i, j) > rank {
                i -= 1;
            }
            bits |= 1 << i;
            rank -= binomial(i, j);
            top = i;
        }
        BasisIndex(bits)
    }

    /// All blades of a degree, in rank order.
    pub fn all_of_degree(dim: usize, degree: usize) -> impl Iterator<Item = BasisIndex> {
        (0..binomial(dim, degree)).map(move |r| BasisIndex::unrank(dim, degree, r))
    }
}

impl fmt::Debug for BasisIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e^{{")?;
        for (n, i) in self.indices().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

/// Sign of `e^a ∧ e^b` relative to `e^{a ∪ b}`, or `None` when the blades
/// share a covector.
pub fn merge_sign(a: BasisIndex, b: BasisIndex) -> Option<i8> {
    if a.0 & b.0 != 0 {
        return None;
    }
    // Each covector of `b` moves left past every covector of `a` above it.
    let swaps: u32 = b.indices().map(|i| (a.0 >> i).count_ones()).sum();
    Some(if swaps % 2 == 0 { 1 } else { -1 })
}

/// Sign of sorting an arbitrary index list, or `None` on a repeated index.
pub fn permutation_sign(indices: &[usize]) -> Option<i8> {
    let mut inversions = 0usize;
    for (a, &x) in indices.iter().enumerate() {
        for &y in &indices[a + 1..] {
            if x == y {
                return None;
            }
            if x > y {
                inversions += 1;
            }
        }
    }
    Some(if inversions % 2 == 0 { 1 } else { -1 })
}

#[derive(Clone, Debug)]
enum Coeffs {
    Sparse(BTreeMap<u32, f64>),
    Dense(Vec<f64>),
}

/// A homogeneous alternating form of fixed degree on `R^dim`.
#[derive(Clone, Debug)]
pub struct KForm {
    dim: usize,
    degree: usize,
    coeffs: Coeffs,
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 || dim % 2 != 0 || dim > MAX_DIM {
        Err(Error::UnsupportedDimension { dim, max: MAX_DIM })
    } else {
        Ok(())
    }
}

impl KForm {
    pub fn zero(dim: usize, degree: usize) -> Result<Self> {
        check_dim(dim)?;
        if degree > dim {
            return Err(Error::DegreeOverflow { degree, dim });
        }
        Ok(KForm {
            dim,
            degree,
            coeffs: Coeffs::Sparse(BTreeMap::new()),
        })
    }

    /// The constant function `1`.
    pub fn one(dim: usize) -> Result<Self> {
        Self::basis(dim, BasisIndex::EMPTY)
    }

    pub fn basis(dim: usize, blade: BasisIndex) -> Result<Self> {
        Self::from_terms(dim, blade.degree(), [(blade, 1.0)])
    }

    /// Single blade from ascending indices, e.g. `&[0, 2]` for `e^{02}`.
    pub fn blade(dim: usize, indices: &[usize]) -> Result<Self> {
        Self::basis(dim, BasisIndex::from_indices(dim, indices)?)
    }

    /// Sums canonical terms; repeated blades accumulate.
    pub fn from_terms<I>(dim: usize, degree: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (BasisIndex, f64)>,
    {
        let mut acc = Accumulator::new(dim, degree)?;
        for (blade, c) in terms {
            if blade.degree() != degree {
                return Err(Error::DegreeMismatch {
                    expected: degree,
                    found: blade.degree(),
                });
            }
            if blade.bits() >> dim != 0 {
                return Err(Error::IndexOutOfRange {
                    index: 31 - blade.bits().leading_zeros() as usize,
                    dim,
                });
            }
            acc.add(blade, c);
        }
        Ok(acc.finish())
    }

    /// Dense coefficient vector in rank order.
    pub fn from_dense(dim: usize, degree: usize, values: &[f64]) -> Result<Self> {
        check_dim(dim)?;
        let len = binomial(dim, degree);
        if values.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                found: values.len(),
            });
        }
        let mut acc = Accumulator::new(dim, degree)?;
        acc.dense.copy_from_slice(values);
        Ok(acc.finish())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.coeffs, Coeffs::Dense(_))
    }

    pub fn coeff(&self, blade: BasisIndex) -> f64 {
        if blade.degree() != self.degree {
            return 0.0;
        }
        match &self.coeffs {
            Coeffs::Sparse(map) => map.get(&blade.bits()).copied().unwrap_or(0.0),
            Coeffs::Dense(v) => v[blade.rank()],
        }
    }

    /// Nonzero terms in increasing bitmask order for sparse storage and rank
    /// order for dense storage.
    pub fn terms(&self) -> impl Iterator<Item = (BasisIndex, f64)> + '_ {
        let (sparse, dense) = match &self.coeffs {
            Coeffs::Sparse(map) => (Some(map.iter()), None),
            Coeffs::Dense(v) => (None, Some(v.iter().enumerate())),
        };
        let dim = self.dim;
        let degree = self.degree;
        sparse
            .into_iter()
            .flatten()
            .map(|(&b, &c)| (BasisIndex(b), c))
            .chain(
                dense
                    .into_iter()
                    .flatten()
                    .map(move |(r, &c)| (BasisIndex::unrank(dim, degree, r), c)),
            )
            .filter(|&(_, c)| c != 0.0)
    }

    pub fn to_dense(&self) -> Vec<f64> {
        match &self.coeffs {
            Coeffs::Dense(v) => v.clone(),
            Coeffs::Sparse(map) => {
                let mut v = vec![0.0; binomial(self.dim, self.degree)];
                for (&b, &c) in map {
                    v[BasisIndex(b).rank()] = c;
                }
                v
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms().next().is_none()
    }

    pub fn norm_inf(&self) -> f64 {
        self.terms().fold(0.0, |m, (_, c)| f64::max(m, c.abs()))
    }

    pub fn scale(&self, s: f64) -> KForm {
        let mut out = self.clone();
        match &mut out.coeffs {
            Coeffs::Sparse(map) => map.values_mut().for_each(|c| *c *= s),
            Coeffs::Dense(v) => v.iter_mut().for_each(|c| *c *= s),
        }
        out
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, other: &KForm, s: f64) -> Result<KForm> {
        self.check_same_space(other)?;
        let mut acc = Accumulator::new(self.dim, self.degree)?;
        for (b, c) in self.terms() {
            acc.add(b, c);
        }
        for (b, c) in other.terms() {
            acc.add(b, s * c);
        }
        Ok(acc.finish())
    }

    pub fn add(&self, other: &KForm) -> Result<KForm> {
        self.add_scaled(other, 1.0)
    }

    pub fn sub(&self, other: &KForm) -> Result<KForm> {
        self.add_scaled(other, -1.0)
    }

    /// Largest coefficient difference.
    pub fn max_abs_diff(&self, other: &KForm) -> Result<f64> {
        Ok(self.sub(other)?.norm_inf())
    }

    fn check_same_space(&self, other: &KForm) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        if self.degree != other.degree {
            return Err(Error::DegreeMismatch {
                expected: self.degree,
                found: other.degree,
            });
        }
        Ok(())
    }
}

impl PartialEq for KForm {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.degree == other.degree
            && match (&self.coeffs, &other.coeffs) {
                (Coeffs::Dense(a), Coeffs::Dense(b)) => a == b,
                _ => self.to_dense() == other.to_dense(),
            }
    }
}

/// Dense scratch space for building a form of known degree.
struct Accumulator {
    dim: usize,
    degree: usize,
    dense: Vec<f64>,
}

impl Accumulator {
    fn new(dim: usize, degree: usize) -> Result<Self> {
        check_dim(dim)?;
        if degree > dim {
            return Err(Error::DegreeOverflow { degree, dim });
        }
        Ok(Accumulator {
            dim,
            degree,
            dense: vec![0.0; binomial(dim, degree)],
        })
    }

    fn add(&mut self, blade: BasisIndex, c: f64) {
        self.dense[blade.rank()] += c;
    }

    fn finish(self) -> KForm {
        let nnz = self.dense.iter().filter(|c| **c != 0.0).count();
        let coeffs = if nnz as f64 > DENSE_FILL * self.dense.len() as f64 {
            Coeffs::Dense(self.dense)
        } else {
            let (dim, degree) = (self.dim, self.degree);
            Coeffs::Sparse(
                self.dense
                    .into_iter()
                    .enumerate()
                    .filter(|(_, c)| *c != 0.0)
                    .map(|(r, c)| (BasisIndex::unrank(dim, degree, r).bits(), c))
                    .collect(),
            )
        };
        KForm {
            dim: self.dim,
            degree: self.degree,
            coeffs,
        }
    }
}

/// Exterior product. Degrees summing past the dimension give the zero form
/// of top degree.
pub fn wedge(a: &KForm, b: &KForm) -> Result<KForm> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            found: b.dim,
        });
    }
    let dim = a.dim;
    if a.degree + b.degree > dim {
        return KForm::zero(dim, dim);
    }
    // Summation order depends only on the unordered pair, so swapping the
    // factors changes nothing but the sign, bit for bit.
    if !canonical_order(a, b) {
        let sign = if a.degree * b.degree % 2 == 0 { 1.0 } else { -1.0 };
        return Ok(wedge_ordered(b, a)?.scale(sign));
    }
    wedge_ordered(a, b)
}

fn canonical_order(a: &KForm, b: &KForm) -> bool {
    if a.degree != b.degree {
        return a.degree < b.degree;
    }
    let (da, db) = (a.to_dense(), b.to_dense());
    for (x, y) in da.iter().zip(&db) {
        match x.total_cmp(y) {
            core::cmp::Ordering::Less => return true,
            core::cmp::Ordering::Greater => return false,
            core::cmp::Ordering::Equal => {}
        }
    }
    true
}

fn wedge_ordered(a: &KForm, b: &KForm) -> Result<KForm> {
    let dim = a.dim;
    let mut acc = Accumulator::new(dim, a.degree + b.degree)?;
    let right: Vec<(BasisIndex, f64)> = b.terms().collect();
    for (sa, ca) in a.terms() {
        for &(sb, cb) in &right {
            if let Some(sign) = merge_sign(sa, sb) {
                acc.add(BasisIndex(sa.0 | sb.0), f64::from(sign) * ca * cb);
            }
        }
    }
    Ok(acc.finish())
}

/// `a ∧ a ∧ ... ∧ a` (`power` factors); `power = 0` gives `1`.
pub fn wedge_power(a: &KForm, power: usize) -> Result<KForm> {
    let mut out = KForm::one(a.dim)?;
    for _ in 0..power {
        out = wedge(&out, a)?;
    }
    Ok(out)
}

/// Sign of an oriented volume form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Orientation {
    Positive,
    Negative,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Positive => 1.0,
            Orientation::Negative => -1.0,
        }
    }

    pub fn from_sign(s: f64) -> Self {
        if s < 0.0 {
            Orientation::Negative
        } else {
            Orientation::Positive
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Orientation::Positive => Orientation::Negative,
            Orientation::Negative => Orientation::Positive,
        }
    }
}

/// An oriented inner product on `V`, given by its Gram matrix in the
/// coordinate basis. The induced metric on covectors is the inverse matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricData {
    gram: DMatrix<f64>,
    dual: DMatrix<f64>,
    orientation: Orientation,
    sqrt_det: f64,
    diagonal: bool,
    /// Lower Cholesky factor of `dual`.
    dual_factor: DMatrix<f64>,
}

impl MetricData {
    /// Validates symmetry and positive definiteness.
    pub fn new(gram: DMatrix<f64>, orientation: Orientation) -> Result<Self> {
        let dim = gram.nrows();
        if gram.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: gram.ncols(),
            });
        }
        check_dim(dim)?;
        let residual = linalg::symmetry_residual(&gram);
        if residual > 1e-12 {
            return Err(Error::NotSymmetric { residual });
        }
        let sym = linalg::symmetrize(&gram);
        let eig = SymmetricEigen::new(sym.clone());
        let min = eig.eigenvalues.min();
        if min <= 0.0 {
            return Err(Error::NotPositiveDefinite { eigenvalue: min });
        }
        let sqrt_det: f64 = match sym.clone().cholesky() {
            Some(c) => c.l().diagonal().iter().product(),
            None => return Err(Error::NotPositiveDefinite { eigenvalue: min }),
        };
        let dual = linalg::spd_inverse(&sym).ok_or(Error::NotPositiveDefinite { eigenvalue: min })?;
        let diagonal = (0..dim).all(|i| (0..dim).all(|j| i == j || sym[(i, j)] == 0.0));
        let dual_factor = match dual.clone().cholesky() {
            Some(c) => c.l(),
            None => return Err(Error::NotPositiveDefinite { eigenvalue: min }),
        };
        Ok(MetricData {
            gram: sym,
            dual,
            dual_factor,
            orientation,
            sqrt_det,
            diagonal,
        })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::new(DMatrix::identity(dim, dim), Orientation::Positive)
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// Inner product on covectors, the inverse of the Gram matrix.
    pub fn dual_gram(&self) -> &DMatrix<f64> {
        &self.dual
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn with_orientation(&self, orientation: Orientation) -> Self {
        MetricData {
            orientation,
            ..self.clone()
        }
    }

    pub fn sqrt_det(&self) -> f64 {
        self.sqrt_det
    }

    /// Coefficient of `e^{0..2n-1}` in the volume form.
    pub fn volume_coefficient(&self) -> f64 {
        self.sqrt_det * self.orientation.sign()
    }

    /// `⟨e^S, e^T⟩`, the minor of the dual Gram matrix on rows `S`, columns `T`.
    pub fn blade_inner(&self, s: BasisIndex, t: BasisIndex) -> f64 {
        if s.degree() != t.degree() {
            return 0.0;
        }
        if self.diagonal {
            if s != t {
                return 0.0;
            }
            return s.indices().map(|i| self.dual[(i, i)]).product();
        }
        let rows: Vec<usize> = s.indices().collect();
        let cols: Vec<usize> = t.indices().collect();
        let p = rows.len();
        let mut m = vec![0.0; p * p];
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                m[a * p + b] = self.dual[(i, j)];
            }
        }
        linalg::det_in_place(&mut m, p)
    }

    /// Coefficients of `Λ^p(dual) a`, indexed by blade bitmask. With
    /// `dual = C Cᵀ` and `C = L D`, the compound of each factor is applied
    /// as a diagonal scaling and one index substitution per entry of `L`.
    fn raise(&self, a: &KForm) -> Vec<f64> {
        let dim = self.dim();
        let masks: Vec<u32> = BasisIndex::all_of_degree(dim, a.degree).map(|b| b.0).collect();
        let mut w = vec![0.0; 1 << dim];
        for (b, c) in a.terms() {
            w[b.0 as usize] = c;
        }
        let c = &self.dual_factor;
        // Cᵀ = D L_{n-2}ᵀ ... L_0ᵀ, with L_jᵀ moving e_i onto e_j for i > j.
        for j in 0..dim {
            for i in j + 1..dim {
                let l = c[(i, j)] / c[(j, j)];
                if l != 0.0 {
                    substitute(&mut w, &masks, i, j, l);
                }
            }
        }
        scale_by_diagonal(&mut w, &masks, c);
        // C = L D = L_0 ... L_{n-2} D, with L_j moving e_j onto e_i.
        scale_by_diagonal(&mut w, &masks, c);
        for j in (0..dim).rev() {
            for i in j + 1..dim {
                let l = c[(i, j)] / c[(j, j)];
                if l != 0.0 {
                    substitute(&mut w, &masks, j, i, l);
                }
            }
        }
        w
    }
}

/// `w[t − from + to] += l·sign·w[t]` for every blade `t` containing `from`
/// and not `to`: the compound of `I + l·e_to e_fromᵀ`.
fn substitute(w: &mut [f64], masks: &[u32], from: usize, to: usize, l: f64) {
    let (f, t) = (1u32 << from, 1u32 << to);
    let (lo, hi) = (from.min(to), from.max(to));
    let between = ((1u32 << hi) - 1) & !((1u32 << (lo + 1)) - 1);
    for &m in masks {
        if m & f != 0 && m & t == 0 {
            let v = w[m as usize];
            if v != 0.0 {
                let sign = if (m & between).count_ones() % 2 == 0 { l } else { -l };
                w[(m ^ f ^ t) as usize] += sign * v;
            }
        }
    }
}

fn scale_by_diagonal(w: &mut [f64], masks: &[u32], c: &DMatrix<f64>) {
    for &m in masks {
        let v = &mut w[m as usize];
        if *v != 0.0 {
            *v *= BasisIndex(m).indices().map(|i| c[(i, i)]).product::<f64>();
        }
    }
}

/// Induced inner product on `Λ^p V*`.
pub fn inner_product(a: &KForm, b: &KForm, metric: &MetricData) -> Result<f64> {
    a.check_same_space(b)?;
    if a.dim != metric.dim() {
        return Err(Error::DimensionMismatch {
            expected: metric.dim(),
            found: a.dim,
        });
    }
    if metric.diagonal {
        return Ok(a
            .terms()
            .map(|(s, ca)| ca * b.coeff(s) * metric.blade_inner(s, s))
            .sum());
    }
    let (left, right): (Vec<_>, Vec<_>) = (a.terms().collect(), b.terms().collect());
    if left.len() * right.len() <= binomial(a.dim, a.degree) {
        return Ok(left
            .iter()
            .flat_map(|&(s, ca)| right.iter().map(move |&(t, cb)| (s, t, ca * cb)))
            .map(|(s, t, c)| c * metric.blade_inner(s, t))
            .sum());
    }
    let raised = metric.raise(b);
    Ok(left.iter().map(|&(s, ca)| ca * raised[s.0 as usize]).sum())
}

/// `√det(gram) · orientation · e^{0..2n-1}`.
pub fn volume_form(metric: &MetricData) -> KForm {
    let dim = metric.dim();
    KForm::from_terms(dim, dim, [(BasisIndex::full(dim), metric.volume_coefficient())])
        .expect("metric dimension was validated")
}

/// Hodge star, `β ∧ ★α = ⟨β, α⟩ vol` for every `β` of the degree of `α`.
pub fn hodge_star(a: &KForm, metric: &MetricData) -> Result<KForm> {
    let dim = metric.dim();
    if a.dim != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: a.dim,
        });
    }
    let p = a.degree;
    let vol = metric.volume_coefficient();
    let full = BasisIndex::full(dim);
    let terms: Vec<(BasisIndex, f64)> = a.terms().collect();
    let mut acc = Accumulator::new(dim, dim - p)?;
    let push = |s: BasisIndex, inner: f64, acc: &mut Accumulator| {
        if inner != 0.0 {
            let comp = BasisIndex(full.0 & !s.0);
            let sign = merge_sign(s, comp).expect("complementary blades are disjoint");
            acc.add(comp, f64::from(sign) * vol * inner);
        }
    };
    if metric.diagonal {
        for &(s, c) in &terms {
            push(s, c * metric.blade_inner(s, s), &mut acc);
        }
    } else {
        let raised = metric.raise(a);
        for s in BasisIndex::all_of_degree(dim, p) {
            push(s, raised[s.0 as usize], &mut acc);
        }
    }
    Ok(acc.finish())
}

/// Inverse of [`hodge_star`]: on degree `q`, `★⁻¹ = (-1)^{q(2n-q)} ★`.
pub fn star_inverse(a: &KForm, metric: &MetricData) -> Result<KForm> {
    let q = a.degree;
    let sign = if (q * (metric.dim() - q)) % 2 == 0 { 1.0 } else { -1.0 };
    Ok(hodge_star(a, metric)?.scale(sign))
}

/// The `2n x 2n` skew matrix `Ω` with `ω(v, w) = vᵀ Ω w` for a 2-form.
pub fn two_form_matrix(form: &KForm) -> Result<DMatrix<f64>> {
    if form.degree != 2 {
        return Err(Error::DegreeMismatch {
            expected: 2,
            found: form.degree,
        });
    }
    let mut m = DMatrix::zeros(form.dim, form.dim);
    for (b, c) in form.terms() {
        let mut it = b.indices();
        let (i, j) = (it.next().unwrap(), it.next().unwrap());
        m[(i, j)] = c;
        m[(j, i)] = -c;
    }
    Ok(m)
}

/// 2-form `Σ_{i<j} ½(Ω_ij − Ω_ji) e^{ij}` from the matrix of a bilinear form.
pub fn two_form_from_matrix(m: &DMatrix<f64>) -> Result<KForm> {
    let dim = m.nrows();
    if m.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: m.ncols(),
        });
    }
    let mut terms = Vec::new();
    for i in 0..dim {
        for j in i + 1..dim {
            let c = 0.5 * (m[(i, j)] - m[(j, i)]);
            if c != 0.0 {
                terms.push((BasisIndex((1 << i) | (1 << j)), c));
            }
        }
    }
    KForm::from_terms(dim, 2, terms)
}

/// Covector `Σ v_i e^i`.
pub fn covector(values: &[f64]) -> Result<KForm> {
    let dim = values.len();
    KForm::from_terms(dim, 1, values.iter().enumerate().map(|(i, &c)| (BasisIndex(1 << i), c)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(dim: usize, idx: &[usize]) -> KForm {
        KForm::blade(dim, idx).unwrap()
    }

    #[test]
    fn rank_unrank_roundtrip() {
        for dim in [2, 4, 8, 12] {
            for p in 0..=dim {
                for (r, b) in BasisIndex::all_of_degree(dim, p).enumerate() {
                    assert_eq!(b.degree(), p);
                    assert_eq!(b.rank(), r);
                }
            }
        }
        assert_eq!(BasisIndex::unrank(4, 2, 0), BasisIndex::from_bits(0b0011));
    }

    #[test]
    fn wedge_examples() {
        let w = wedge(&e(4, &[0]), &e(4, &[1])).unwrap();
        assert_eq!(w, e(4, &[0, 1]));
        assert!(wedge(&e(4, &[0, 1]), &e(4, &[0, 1])).unwrap().is_zero());
        let w = wedge(&e(4, &[1, 3]), &e(4, &[0])).unwrap();
        assert_eq!(w.coeff(BasisIndex::from_indices(4, &[0, 1, 3]).unwrap()), 1.0);
    }

    #[test]
    fn wedge_rejects_dimension_mismatch() {
        assert!(matches!(
            wedge(&e(4, &[0]), &e(6, &[0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn wedge_past_top_degree_is_zero() {
        let w = wedge(&e(4, &[0, 1, 2]), &e(4, &[1, 3])).unwrap();
        assert!(w.is_zero());
        assert_eq!(w.degree(), 4);
    }

    #[test]
    fn non_increasing_indices_are_rejected() {
        assert!(BasisIndex::from_indices(4, &[1, 0]).is_err());
        assert!(BasisIndex::from_indices(4, &[4]).is_err());
    }

    #[test]
    fn inner_product_examples() {
        let id = MetricData::identity(4).unwrap();
        assert_eq!(inner_product(&e(4, &[0, 1]), &e(4, &[0, 1]), &id).unwrap(), 1.0);
        assert_eq!(inner_product(&e(4, &[0, 1]), &e(4, &[2, 3]), &id).unwrap(), 0.0);
        let g = MetricData::new(
            DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 1.0, 1.0, 1.0])),
            Orientation::Positive,
        )
        .unwrap();
        assert_eq!(inner_product(&e(4, &[0]), &e(4, &[0]), &g).unwrap(), 0.5);
        assert!(matches!(
            inner_product(&e(4, &[0]), &e(4, &[0, 1]), &id),
            Err(Error::DegreeMismatch { .. })
        ));
    }

    #[test]
    fn volume_form_examples() {
        let id = MetricData::identity(4).unwrap();
        assert_eq!(volume_form(&id), e(4, &[0, 1, 2, 3]));
        let g = MetricData::new(
            DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![4.0, 1.0, 1.0, 1.0])),
            Orientation::Positive,
        )
        .unwrap();
        assert_eq!(volume_form(&g), e(4, &[0, 1, 2, 3]).scale(2.0));
        let flipped = id.with_orientation(Orientation::Negative);
        assert_eq!(volume_form(&flipped), e(4, &[0, 1, 2, 3]).scale(-1.0));
        let v = volume_form(&g);
        assert!((inner_product(&v, &v, &g).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn raise_matches_minors() {
        let dim = 6;
        let a = DMatrix::from_fn(dim, dim, |i, j| {
            if i == j {
                1.2
            } else {
                0.1 * ((3 * i + 5 * j) % 7) as f64 - 0.3
            }
        });
        let g = MetricData::new(linalg::symmetrize(&(a.transpose() * &a)), Orientation::Positive).unwrap();
        for p in 0..=dim {
            for t in BasisIndex::all_of_degree(dim, p) {
                let raised = g.raise(&KForm::basis(dim, t).unwrap());
                for s in BasisIndex::all_of_degree(dim, p) {
                    assert!((raised[s.0 as usize] - g.blade_inner(s, t)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn non_positive_gram_names_eigenvalue() {
        let g = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1.0, 1.0, -1.0]));
        match MetricData::new(g, Orientation::Positive) {
            Err(Error::NotPositiveDefinite { eigenvalue }) => assert_eq!(eigenvalue, -1.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn star_examples() {
        let id = MetricData::identity(4).unwrap();
        let one = KForm::one(4).unwrap();
        let vol = volume_form(&id);
        assert_eq!(hodge_star(&one, &id).unwrap(), vol);
        assert_eq!(hodge_star(&vol, &id).unwrap(), one);
        assert_eq!(hodge_star(&e(4, &[0]), &id).unwrap(), e(4, &[1, 2, 3]));
        assert_eq!(hodge_star(&e(4, &[0, 1]), &id).unwrap(), e(4, &[2, 3]));
        assert_eq!(star_inverse(&vol, &id).unwrap(), one);
        assert_eq!(star_inverse(&e(4, &[1, 2, 3]), &id).unwrap(), e(4, &[0]));
        let s = hodge_star(&e(4, &[0, 2]), &id).unwrap();
        assert_eq!(star_inverse(&s, &id).unwrap(), e(4, &[0, 2]));
    }

    #[test]
    fn double_star_sign_law_on_all_blades() {
        let id = MetricData::identity(4).unwrap();
        for p in 0..=4 {
            for b in BasisIndex::all_of_degree(4, p) {
                let a = KForm::basis(4, b).unwrap();
                let ss = hodge_star(&hodge_star(&a, &id).unwrap(), &id).unwrap();
                let sign = if (p * (4 - p)) % 2 == 0 { 1.0 } else { -1.0 };
                assert_eq!(ss, a.scale(sign));
            }
        }
    }

    #[test]
    fn two_form_matrix_roundtrip() {
        let w = e(4, &[0, 1]).add(&e(4, &[2, 3])).unwrap();
        let m = two_form_matrix(&w).unwrap();
        assert_eq!(m[(0, 1)], 1.0);
        assert_eq!(m[(1, 0)], -1.0);
        assert_eq!(two_form_from_matrix(&m).unwrap(), w);
    }

    #[test]
    fn storage_switches_with_fill() {
        let sparse = e(8, &[0, 1, 2, 3]);
        assert!(!sparse.is_dense());
        let dense = KForm::from_dense(4, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert!(dense.is_dense());
        assert_eq!(dense.terms().count(), 6);
        assert_eq!(KForm::from_terms(4, 2, dense.terms()).unwrap(), dense);
    }

    #[test]
    fn permutation_sign_counts_inversions() {
        assert_eq!(permutation_sign(&[0, 1, 2]), Some(1));
        assert_eq!(permutation_sign(&[1, 0, 2]), Some(-1));
        assert_eq!(permutation_sign(&[2, 0, 1]), Some(1));
        assert_eq!(permutation_sign(&[1, 1]), None);
    }
}
