//! Pure states and density matrices over small tensor-product spaces.
//!
//! Basis vectors are ordered lexicographically in the factor labels with the
//! last factor running fastest. For the cavity system `(atom1, atom2, field)`
//! the flat index of `|s1 s2, n>` is therefore `(2 s1 + s2) * D + n`, where
//! `D = n_max + 1`. Callers should address amplitudes by label through
//! [`SystemShape::index`] rather than relying on this layout.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Allowed deviation of a state norm from one.
pub const NORM_TOL: f64 = 1e-12;
/// Allowed deviation from Hermiticity and unit trace.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Eigenvalues above `-NEGATIVITY_TOL` are treated as nonnegative.
pub const NEGATIVITY_TOL: f64 = 1e-10;
/// At most three tensor factors are supported.
pub const MAX_FACTORS: usize = 3;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SystemShape {
    dims: Vec<usize>,
}

impl SystemShape {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.len() > MAX_FACTORS {
            return Err(Error::InvalidShape(format!(
                "need between 1 and {MAX_FACTORS} factors, got {}",
                dims.len()
            )));
        }
        if dims.contains(&0) {
            return Err(Error::InvalidShape(format!("zero-dimensional factor in {dims:?}")));
        }
        Ok(Self { dims })
    }

    /// `2 (x) 2 (x) (n_max + 1)`: two atoms and a truncated field mode.
    pub fn cavity(n_max: usize) -> Self {
        Self { dims: vec![2, 2, n_max + 1] }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn num_factors(&self) -> usize {
        self.dims.len()
    }

    pub fn dim(&self, factor: usize) -> usize {
        self.dims[factor]
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    /// Flat index of the basis vector with the given per-factor labels.
    pub fn index(&self, labels: &[usize]) -> Result<usize> {
        if labels.len() != self.dims.len() {
            return Err(Error::WrongFactorCount { expected: self.dims.len(), found: labels.len() });
        }
        let mut idx = 0;
        for (&l, &d) in labels.iter().zip(&self.dims) {
            if l >= d {
                return Err(Error::DimensionMismatch { expected: d, found: l + 1 });
            }
            idx = idx * d + l;
        }
        Ok(idx)
    }

    /// Inverse of [`SystemShape::index`].
    pub fn labels(&self, mut index: usize) -> Vec<usize> {
        let mut labels = vec![0; self.dims.len()];
        for (l, &d) in labels.iter_mut().zip(&self.dims).rev() {
            *l = index % d;
            index /= d;
        }
        labels
    }
}

fn validate_subset(keep: &[usize], n_factors: usize) -> Result<Vec<usize>> {
    let mut sorted = keep.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != keep.len() {
        return Err(Error::InvalidCut(format!("repeated factor in {keep:?}")));
    }
    if sorted.is_empty() || sorted.len() >= n_factors {
        return Err(Error::InvalidCut(format!(
            "kept factors {keep:?} must be a nonempty strict subset of {n_factors} factors"
        )));
    }
    if let Some(&bad) = sorted.iter().find(|&&f| f >= n_factors) {
        return Err(Error::InvalidCut(format!("factor {bad} out of range")));
    }
    Ok(sorted)
}

/// Bipartition of the factors of a state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cut {
    side_a: Vec<usize>,
    side_b: Vec<usize>,
}

impl Cut {
    pub fn new(side_a: Vec<usize>, side_b: Vec<usize>, n_factors: usize) -> Result<Self> {
        let a = validate_subset(&side_a, n_factors)?;
        let b = validate_subset(&side_b, n_factors)?;
        if a.len() + b.len() != n_factors || a.iter().any(|f| b.contains(f)) {
            return Err(Error::InvalidCut(format!(
                "{side_a:?} | {side_b:?} is not a partition of {n_factors} factors"
            )));
        }
        Ok(Self { side_a: a, side_b: b })
    }

    /// `side_a` against everything else.
    pub fn against_rest(side_a: Vec<usize>, n_factors: usize) -> Result<Self> {
        let side_b = (0..n_factors).filter(|f| !side_a.contains(f)).collect();
        Self::new(side_a, side_b, n_factors)
    }

    pub fn side_a(&self) -> &[usize] {
        &self.side_a
    }

    pub fn side_b(&self) -> &[usize] {
        &self.side_b
    }

    pub fn swapped(&self) -> Self {
        Self { side_a: self.side_b.clone(), side_b: self.side_a.clone() }
    }
}

/// Normalized state vector over a [`SystemShape`].
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    shape: SystemShape,
    amplitudes: DVector<C64>,
}

impl PureState {
    /// Wraps an already normalized amplitude vector.
    pub fn new(shape: SystemShape, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != shape.total() {
            return Err(Error::DimensionMismatch { expected: shape.total(), found: amplitudes.len() });
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { shape, amplitudes })
    }

    /// Normalizes `amplitudes` before wrapping them.
    pub fn normalized(shape: SystemShape, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != shape.total() {
            return Err(Error::DimensionMismatch { expected: shape.total(), found: amplitudes.len() });
        }
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroVector);
        }
        Ok(Self { shape, amplitudes: amplitudes / C64::from(norm) })
    }

    pub fn basis(shape: SystemShape, labels: &[usize]) -> Result<Self> {
        let idx = shape.index(labels)?;
        let mut amplitudes = DVector::zeros(shape.total());
        amplitudes[idx] = C64::new(1.0, 0.0);
        Ok(Self { shape, amplitudes })
    }

    /// No normalization check; used for states produced by unitary maps.
    pub(crate) fn from_raw(shape: SystemShape, amplitudes: DVector<C64>) -> Self {
        debug_assert_eq!(shape.total(), amplitudes.len());
        Self { shape, amplitudes }
    }

    pub fn shape(&self) -> &SystemShape {
        &self.shape
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn amplitude(&self, labels: &[usize]) -> Result<C64> {
        Ok(self.amplitudes[self.shape.index(labels)?])
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn inner(&self, other: &PureState) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// Reshapes the amplitudes into a matrix whose rows are indexed by the
    /// factors in `rows` (in the given order) and whose columns run over the
    /// remaining factors in their natural order.
    ///
    /// Column `k` is the unnormalized conditional state `<k|_rest |psi>`, so the
    /// marginal on `rows` is `M M^dagger`.
    pub fn matricize(&self, rows: &[usize]) -> DMatrix<C64> {
        let dims = self.shape.dims();
        let cols: Vec<usize> = (0..dims.len()).filter(|f| !rows.contains(f)).collect();
        let n_rows: usize = rows.iter().map(|&f| dims[f]).product();
        let n_cols: usize = cols.iter().map(|&f| dims[f]).product();
        // Per-factor contribution to the row or column index.
        let mut row_stride = vec![0; dims.len()];
        let mut col_stride = vec![0; dims.len()];
        let mut s = 1;
        for &f in rows.iter().rev() {
            row_stride[f] = s;
            s *= dims[f];
        }
        s = 1;
        for &f in cols.iter().rev() {
            col_stride[f] = s;
            s *= dims[f];
        }
        let mut m = DMatrix::zeros(n_rows, n_cols);
        let mut labels = vec![0usize; dims.len()];
        for amp in self.amplitudes.iter() {
            let r: usize = labels.iter().zip(&row_stride).map(|(l, s)| l * s).sum();
            let c: usize = labels.iter().zip(&col_stride).map(|(l, s)| l * s).sum();
            m[(r, c)] = *amp;
            for f in (0..dims.len()).rev() {
                labels[f] += 1;
                if labels[f] < dims[f] {
                    break;
                }
                labels[f] = 0;
            }
        }
        m
    }

    /// Projector onto this state.
    pub fn density_matrix(&self) -> DensityMatrix {
        let m = &self.amplitudes * self.amplitudes.adjoint();
        DensityMatrix::from_parts(
            (0..self.shape.num_factors()).collect(),
            self.shape.dims().to_vec(),
            m,
        )
    }

    /// Relabels factors: factor `i` of the result is factor `perm[i]` of `self`.
    pub fn permute_factors(&self, perm: &[usize]) -> Result<Self> {
        let n = self.shape.num_factors();
        let mut check = perm.to_vec();
        check.sort_unstable();
        if check != (0..n).collect::<Vec<_>>() {
            return Err(Error::InvalidShape(format!("{perm:?} is not a permutation of 0..{n}")));
        }
        let dims: Vec<usize> = perm.iter().map(|&p| self.shape.dim(p)).collect();
        let shape = SystemShape::new(dims)?;
        let mut out = DVector::zeros(shape.total());
        for (idx, amp) in self.amplitudes.iter().enumerate() {
            let old = self.shape.labels(idx);
            let new: Vec<usize> = perm.iter().map(|&p| old[p]).collect();
            out[shape.index(&new)?] = *amp;
        }
        Ok(Self { shape, amplitudes: out })
    }

    /// Applies `op` to a single factor.
    pub fn apply_local(&self, factor: usize, op: &DMatrix<C64>) -> Result<Self> {
        let n = self.shape.num_factors();
        if factor >= n {
            return Err(Error::InvalidShape(format!("factor {factor} out of range")));
        }
        let d = self.shape.dim(factor);
        if op.nrows() != d || op.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: op.nrows() });
        }
        let stride: usize = self.shape.dims()[factor + 1..].iter().product();
        let block = d * stride;
        let mut out = DVector::zeros(self.shape.total());
        for base in (0..self.shape.total()).step_by(block) {
            for inner in 0..stride {
                for i in 0..d {
                    let mut acc = C64::new(0.0, 0.0);
                    for j in 0..d {
                        acc += op[(i, j)] * self.amplitudes[base + j * stride + inner];
                    }
                    out[base + i * stride + inner] = acc;
                }
            }
        }
        Ok(Self { shape: self.shape.clone(), amplitudes: out })
    }
}

/// Density matrix over a subset of the factors of some parent system.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    factors: Vec<usize>,
    dims: Vec<usize>,
    matrix: DMatrix<C64>,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(dims: Vec<usize>, matrix: DMatrix<C64>) -> Result<Self> {
        let total: usize = dims.iter().product();
        if dims.is_empty() || dims.len() > MAX_FACTORS || total == 0 {
            return Err(Error::InvalidShape(format!("bad factor dims {dims:?}")));
        }
        if matrix.nrows() != total || matrix.ncols() != total {
            return Err(Error::DimensionMismatch { expected: total, found: matrix.nrows() });
        }
        let herm_err = (&matrix - matrix.adjoint()).camax();
        if herm_err > HERMITIAN_TOL {
            return Err(Error::InvalidDensityMatrix(format!("not Hermitian (deviation {herm_err:e})")));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > HERMITIAN_TOL || tr.im.abs() > HERMITIAN_TOL {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr} != 1")));
        }
        let rho = Self::from_parts((0..dims.len()).collect(), dims, matrix);
        let min_eig = rho.eigenvalues().first().copied().unwrap_or(0.0);
        if min_eig < -NEGATIVITY_TOL {
            return Err(Error::InvalidDensityMatrix(format!("negative eigenvalue {min_eig:e}")));
        }
        Ok(rho)
    }

    /// Normalizes a positive semidefinite matrix to unit trace.
    pub fn from_unnormalized(dims: Vec<usize>, matrix: DMatrix<C64>) -> Result<Self> {
        let tr = matrix.trace().re;
        if tr <= 0.0 || !tr.is_finite() {
            return Err(Error::ZeroVector);
        }
        let m = matrix.map(|z| z / tr);
        let hermitized = (&m + m.adjoint()).map(|z| z * 0.5);
        Self::new(dims, hermitized)
    }

    pub(crate) fn from_parts(factors: Vec<usize>, dims: Vec<usize>, matrix: DMatrix<C64>) -> Self {
        Self { factors, dims, matrix }
    }

    /// Labels of the parent-system factors this matrix lives on.
    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// `tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    pub fn effective_rank(&self, tol: f64) -> usize {
        self.eigenvalues().iter().filter(|&&l| l > tol).count()
    }

    fn local_position(&self, factor: usize) -> Result<usize> {
        self.factors
            .iter()
            .position(|&f| f == factor)
            .ok_or_else(|| Error::InvalidCut(format!("factor {factor} not present in {:?}", self.factors)))
    }
}

/// Marginals of states on a subset of their factors.
pub trait PartialTrace {
    /// Traces out everything except `keep` (parent-system factor labels).
    fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix>;
}

impl PartialTrace for PureState {
    fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let keep = validate_subset(keep, self.shape.num_factors())?;
        let m = self.matricize(&keep);
        let dims = keep.iter().map(|&f| self.shape.dim(f)).collect();
        Ok(DensityMatrix::from_parts(keep, dims, &m * m.adjoint()))
    }
}

impl PartialTrace for DensityMatrix {
    fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let local: Vec<usize> =
            keep.iter().map(|&f| self.local_position(f)).collect::<Result<_>>()?;
        let local = validate_subset(&local, self.factors.len())?;
        let shape = SystemShape::new(self.dims.clone())?;
        let kept_dims: Vec<usize> = local.iter().map(|&p| self.dims[p]).collect();
        let kept_shape = SystemShape::new(kept_dims.clone())?;
        let traced: Vec<usize> = (0..self.dims.len()).filter(|p| !local.contains(p)).collect();
        let n_traced: usize = traced.iter().map(|&p| self.dims[p]).product();

        // Row/column index of the full matrix from (kept labels, traced labels).
        let full_index = |kept_idx: usize, traced_idx: usize| -> usize {
            let kl = kept_shape.labels(kept_idx);
            let mut labels = vec![0; self.dims.len()];
            for (&p, &l) in local.iter().zip(&kl) {
                labels[p] = l;
            }
            let mut t = traced_idx;
            for &p in traced.iter().rev() {
                labels[p] = t % self.dims[p];
                t /= self.dims[p];
            }
            shape.index(&labels).expect("labels in range")
        };

        let n = kept_shape.total();
        let mut out = DMatrix::zeros(n, n);
        for t in 0..n_traced {
            let idx: Vec<usize> = (0..n).map(|k| full_index(k, t)).collect();
            for i in 0..n {
                for j in 0..n {
                    out[(i, j)] += self.matrix[(idx[i], idx[j])];
                }
            }
        }
        let factors = local.iter().map(|&p| self.factors[p]).collect();
        Ok(DensityMatrix::from_parts(factors, kept_dims, out))
    }
}

pub fn partial_trace<S: PartialTrace>(state: &S, keep: &[usize]) -> Result<DensityMatrix> {
    state.partial_trace(keep)
}

pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.purity()
}

/// Number of eigenvalues of `rho` above `tol`.
pub fn effective_rank(rho: &DensityMatrix, tol: f64) -> Result<usize> {
    if tol <= 0.0 || !tol.is_finite() {
        return Err(Error::InvalidTolerance(tol));
    }
    Ok(rho.effective_rank(tol))
}

/// Kronecker product of single-factor vectors, in factor order.
pub fn tensor_product(shape: &SystemShape, factors: &[DVector<C64>]) -> Result<PureState> {
    if factors.len() != shape.num_factors() {
        return Err(Error::WrongFactorCount { expected: shape.num_factors(), found: factors.len() });
    }
    for (v, &d) in factors.iter().zip(shape.dims()) {
        if v.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: v.len() });
        }
        let norm = v.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
    }
    let mut acc = DVector::from_element(1, C64::new(1.0, 0.0));
    for v in factors {
        acc = acc.kronecker(v);
    }
    PureState::normalized(shape.clone(), acc)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub(crate) fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues ascending and
/// eigenvectors in the matching columns.
pub(crate) fn hermitian_eigen(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}
