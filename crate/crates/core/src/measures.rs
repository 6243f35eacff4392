//! Tangle-based entanglement measures.
//!
//! All pure-state quantities are computed from the smaller Gram matrix of the
//! relevant reshaping, so a field factor with hundreds of Fock levels never
//! forces a large eigenproblem. Mixed qubit-qudit marginals of a global pure
//! state have rank at most two and use the closed rank-2 form; the general
//! convex roof lives in [`crate::roof`].

use nalgebra::{DMatrix, DVector, Matrix3, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::dynamics::atomic_inversion;
use crate::error::{Error, Result};
use crate::roof::{convex_roof_itangle, RoofOptions};
use crate::tensor::{hermitian_eigen, hermitian_eigenvalues, Cut, DensityMatrix, PartialTrace, PureState};

/// Eigenvalues at or below this are treated as zero when counting the rank of
/// a marginal handed to the rank-2 formula.
pub const RANK2_TOL: f64 = 1e-10;

/// Default tolerance for effective dimensions in the residual tangle.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

fn two_factor_dims(rho: &DensityMatrix) -> Result<(usize, usize)> {
    match rho.dims() {
        &[a, b] => Ok((a, b)),
        other => Err(Error::WrongFactorCount { expected: 2, found: other.len() }),
    }
}

fn frobenius_sq(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// Marginals `(rho_A, rho_B)` of a two-factor density matrix.
fn local_marginals(rho: &DensityMatrix) -> Result<(DensityMatrix, DensityMatrix)> {
    let f = rho.factors();
    Ok((rho.partial_trace(&[f[0]])?, rho.partial_trace(&[f[1]])?))
}

/// `nu_a nu_b (I (x) I - rho_A (x) I - I (x) rho_B + rho)`.
pub fn universal_inversion(rho: &DensityMatrix, nu_a: f64, nu_b: f64) -> Result<DMatrix<C64>> {
    let (da, db) = two_factor_dims(rho)?;
    let (rho_a, rho_b) = local_marginals(rho)?;
    let id_a = DMatrix::<C64>::identity(da, da);
    let id_b = DMatrix::<C64>::identity(db, db);
    let out = id_a.kronecker(&id_b) - rho_a.matrix().kronecker(&id_b) - id_a.kronecker(rho_b.matrix())
        + rho.matrix();
    Ok(out * C64::from(nu_a * nu_b))
}

/// `tr(rho rho~)` at unit scale, via `1 - tr rho_A^2 - tr rho_B^2 + tr rho^2`.
pub fn inversion_overlap(rho: &DensityMatrix) -> Result<f64> {
    let (rho_a, rho_b) = local_marginals(rho)?;
    Ok(1.0 - rho_a.purity() - rho_b.purity() + rho.purity())
}

fn sigma_y_y() -> DMatrix<C64> {
    let mut m = DMatrix::zeros(4, 4);
    // sigma_y (x) sigma_y is real: antidiagonal (-1, 1, 1, -1).
    m[(0, 3)] = C64::new(-1.0, 0.0);
    m[(1, 2)] = C64::new(1.0, 0.0);
    m[(2, 1)] = C64::new(1.0, 0.0);
    m[(3, 0)] = C64::new(-1.0, 0.0);
    m
}

/// Two-qubit tangle `max(0, l1 - l2 - l3 - l4)^2`, where `l_i` are the
/// decreasing square roots of the eigenvalues of `rho (sy sy) rho* (sy sy)`.
///
/// The `l_i` are computed as the singular values of `V^T (sy sy) V` with
/// `rho = V V^dagger`, which avoids square roots of roundoff-level
/// eigenvalues for rank-deficient states.
pub fn wootters_tangle(rho: &DensityMatrix) -> Result<f64> {
    let (da, db) = two_factor_dims(rho)?;
    if da != 2 || db != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: da.max(db) });
    }
    Ok(wootters_from_matrix(rho.matrix()))
}

pub(crate) fn wootters_from_matrix(rho: &DMatrix<C64>) -> f64 {
    let (vals, vecs) = hermitian_eigen(rho);
    let weights = DMatrix::from_diagonal(&DVector::from_iterator(
        4,
        vals.iter().map(|&l| C64::new(l.max(0.0).sqrt(), 0.0)),
    ));
    let v = vecs * weights;
    let w = v.transpose() * sigma_y_y() * &v;
    let mut lambdas: Vec<f64> = w.singular_values().iter().copied().collect();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    let c = lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3];
    c.max(0.0).powi(2)
}

/// Purity of the marginal of the rows of `m` (equivalently of its columns).
fn reshaped_purity(m: &DMatrix<C64>) -> f64 {
    if m.nrows() <= m.ncols() {
        frobenius_sq(&(m * m.adjoint()))
    } else {
        frobenius_sq(&(m.adjoint() * m))
    }
}

/// Spectrum of the marginal of the rows of `m`, read from the smaller Gram.
fn reshaped_spectrum(m: &DMatrix<C64>) -> Vec<f64> {
    if m.nrows() <= m.ncols() {
        hermitian_eigenvalues(&(m * m.adjoint()))
    } else {
        hermitian_eigenvalues(&(m.adjoint() * m))
    }
}

/// Pure-state I-tangle `2 nu_A nu_B (1 - tr rho_A^2)` across `cut`.
pub fn pure_itangle(state: &PureState, cut: &Cut, nu_product: f64) -> Result<f64> {
    let n = state.shape().num_factors();
    let checked = Cut::new(cut.side_a().to_vec(), cut.side_b().to_vec(), n)?;
    let m = state.matricize(checked.side_a());
    Ok(2.0 * nu_product * (1.0 - reshaped_purity(&m)))
}

/// Ingredients of the closed-form I-tangle of a rank-2 state:
/// `tau = overlap + 2 lambda_min (1 - purity)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rank2Form {
    /// `tr(rho rho~)` at unit scale.
    pub overlap: f64,
    /// Smallest eigenvalue of the 3x3 M matrix; zero for rank one.
    pub lambda_min: f64,
    /// `tr(rho^2)`.
    pub purity: f64,
}

impl Rank2Form {
    pub fn value(&self) -> f64 {
        self.overlap + 2.0 * self.lambda_min * (1.0 - self.purity)
    }
}

/// Reshapes a vector on `da (x) db` into the matrix `X[a, b]`, putting the
/// smaller factor on the rows.
fn reshape_small_rows(v: &DVector<C64>, da: usize, db: usize) -> DMatrix<C64> {
    if da <= db {
        DMatrix::from_fn(da, db, |a, b| v[a * db + b])
    } else {
        DMatrix::from_fn(db, da, |b, a| v[a * db + b])
    }
}

fn pauli(k: usize) -> [[C64; 2]; 2] {
    let o = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    match k {
        0 => [[o, one], [one, o]],
        1 => [[o, -i], [i, o]],
        _ => [[one, o], [o, -one]],
    }
}

/// Closed-form I-tangle of `rho = sum_k |v_k><v_k|` on `da (x) db` when the
/// span of the `v_k` is at most two-dimensional.
///
/// Writing normalized states in the range as Bloch vectors `n` over the
/// eigenbasis, the pure-state tangle is a quadratic `alpha + beta.n + n.M n`
/// with `M_kl = tr[A (s_k (x) s_l)] / 4`, `A = (1 - S_A)(1 - S_B)` acting on
/// two copies. Minimizing the ensemble average subject to the fixed mean Bloch
/// vector gives `tr(rho rho~) + 2 lambda_min(M) (1 - tr rho^2)`.
pub fn rank2_form_ensemble(vectors: &[DVector<C64>], da: usize, db: usize) -> Result<Rank2Form> {
    let dim = da * db;
    if vectors.is_empty() {
        return Err(Error::ZeroVector);
    }
    if let Some(v) = vectors.iter().find(|v| v.len() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
    }
    let k = vectors.len();
    let gram = DMatrix::from_fn(k, k, |i, j| vectors[i].dotc(&vectors[j]));
    let (mu, u) = hermitian_eigen(&gram);
    let trace: f64 = mu.iter().map(|m| m.max(0.0)).sum();
    if trace <= 0.0 {
        return Err(Error::ZeroVector);
    }
    let rank = mu.iter().filter(|&&m| m / trace > RANK2_TOL).count();
    if rank > 2 {
        return Err(Error::RankTooLarge { rank, limit: 2 });
    }
    // Orthonormal eigenvectors of rho, largest weight first.
    let kept: Vec<usize> = (0..k).rev().take(rank.max(1)).collect();
    let weights: Vec<f64> = kept.iter().map(|&j| mu[j].max(0.0) / trace).collect();
    let eig: Vec<DMatrix<C64>> = kept
        .iter()
        .map(|&j| {
            let mut e = DVector::zeros(dim);
            for (i, v) in vectors.iter().enumerate() {
                e += v * u[(i, j)];
            }
            let e = e / C64::from(mu[j].sqrt());
            reshape_small_rows(&e, da, db)
        })
        .collect();

    let r = eig.len();
    // P[z][x] = Z X^dagger on the smaller factor.
    let p: Vec<Vec<DMatrix<C64>>> =
        (0..r).map(|z| (0..r).map(|x| &eig[z] * eig[x].adjoint()).collect()).collect();
    let tr_p: Vec<Vec<C64>> = p.iter().map(|row| row.iter().map(|m| m.trace()).collect()).collect();
    let tr_pp = |a: &DMatrix<C64>, b: &DMatrix<C64>| -> C64 {
        // tr(a b) without forming the product
        let n = a.nrows();
        (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| a[(i, j)] * b[(j, i)]).sum()
    };
    // <x y| A |z w> = <x|z><y|w> - tr(Z X+ W Y+) - tr(Z Y+ W X+) + <x|w><y|z>
    let a_elem = |x: usize, y: usize, z: usize, w: usize| -> C64 {
        tr_p[z][x] * tr_p[w][y] - tr_pp(&p[z][x], &p[w][y]) - tr_pp(&p[z][y], &p[w][x])
            + tr_p[w][x] * tr_p[z][y]
    };

    let purity: f64 = weights.iter().map(|w| w * w).sum();
    let mut overlap = 0.0;
    for a in 0..r {
        for b in 0..r {
            overlap += weights[a] * weights[b] * a_elem(a, b, a, b).re;
        }
    }
    if r == 1 {
        return Ok(Rank2Form { overlap, lambda_min: 0.0, purity });
    }

    let mut t = [[[[C64::new(0.0, 0.0); 2]; 2]; 2]; 2];
    for (x, tx) in t.iter_mut().enumerate() {
        for (y, txy) in tx.iter_mut().enumerate() {
            for (z, txyz) in txy.iter_mut().enumerate() {
                for (w, slot) in txyz.iter_mut().enumerate() {
                    *slot = a_elem(x, y, z, w);
                }
            }
        }
    }
    let mut m = Matrix3::<f64>::zeros();
    for kk in 0..3 {
        let sk = pauli(kk);
        for ll in 0..3 {
            let sl = pauli(ll);
            let mut acc = C64::new(0.0, 0.0);
            for a in 0..2 {
                for b in 0..2 {
                    for c in 0..2 {
                        for d in 0..2 {
                            acc += t[b][d][a][c] * sk[a][b] * sl[c][d];
                        }
                    }
                }
            }
            m[(kk, ll)] = 0.25 * acc.re;
        }
    }
    let m = (m + m.transpose()) * 0.5;
    let lambda_min = SymmetricEigen::new(m).eigenvalues.min();
    Ok(Rank2Form { overlap, lambda_min, purity })
}

pub fn rank2_itangle_ensemble(vectors: &[DVector<C64>], da: usize, db: usize) -> Result<f64> {
    Ok(rank2_form_ensemble(vectors, da, db)?.value())
}

pub fn rank2_form(rho: &DensityMatrix) -> Result<Rank2Form> {
    let (da, db) = two_factor_dims(rho)?;
    let (vals, vecs) = hermitian_eigen(rho.matrix());
    let rank = vals.iter().filter(|&&l| l > RANK2_TOL).count();
    if rank > 2 {
        return Err(Error::RankTooLarge { rank, limit: 2 });
    }
    let n = vals.len();
    let vectors: Vec<DVector<C64>> = (n - rank.max(1)..n)
        .rev()
        .map(|j| vecs.column(j) * C64::from(vals[j].max(0.0).sqrt()))
        .collect();
    rank2_form_ensemble(&vectors, da, db)
}

/// Mixed-state I-tangle of a two-factor state of rank at most two.
pub fn rank2_itangle(rho: &DensityMatrix) -> Result<f64> {
    Ok(rank2_form(rho)?.value())
}

fn cavity_dims(state: &PureState) -> Result<usize> {
    match state.shape().dims() {
        &[2, 2, d] => Ok(d),
        other => Err(Error::UnsupportedDims(other.to_vec())),
    }
}

/// The four bipartite tangles of a `2 (x) 2 (x) D` pure state with unit scale.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BipartiteTangles {
    /// Field against the atom pair.
    pub tau_f_aa: f64,
    /// First atom against the second atom and the field.
    pub tau_a_rest: f64,
    /// Atom-atom tangle of the two-atom marginal.
    pub tau_aa: f64,
    /// First atom against the field, second atom traced.
    pub tau_af: f64,
}

pub fn bipartite_tangles_all(state: &PureState) -> Result<BipartiteTangles> {
    let d = cavity_dims(state)?;
    let atoms = state.matricize(&[0, 1]);
    let rho_aa = &atoms * atoms.adjoint();
    let tau_f_aa = 2.0 * (1.0 - frobenius_sq(&rho_aa));
    let tau_a_rest = 2.0 * (1.0 - reshaped_purity(&state.matricize(&[0])));
    let tau_aa = wootters_from_matrix(&rho_aa);
    let atom_field = state.matricize(&[0, 2]);
    let columns: Vec<DVector<C64>> =
        atom_field.column_iter().map(|c| c.into_owned()).collect();
    let tau_af = rank2_itangle_ensemble(&columns, 2, d)?;
    Ok(BipartiteTangles { tau_f_aa, tau_a_rest, tau_aa, tau_af })
}

/// Terms of the I-residual tangle with their dimension-dependent scales applied.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualBreakdown {
    /// `tau_{i(rest)}` for factors 0, 1, 2.
    pub one_vs_rest: [f64; 3],
    /// Effective dimension `d` used for each one-vs-rest cut.
    pub one_vs_rest_dims: [usize; 3],
    /// Pair tangles in the order (0,1), (0,2), (1,2).
    pub pairs: [f64; 3],
    pub pair_dims: [usize; 3],
    /// Effective rank of each single-factor marginal.
    pub marginal_ranks: [usize; 3],
    pub value: f64,
}

const PAIRS: [(usize, usize, usize); 3] = [(0, 1, 2), (0, 2, 1), (1, 2, 0)];

/// Pair I-tangle of the marginal on `(x, y)` at unit scale.
fn pair_itangle(state: &PureState, x: usize, y: usize) -> Result<f64> {
    let dims = state.shape().dims();
    let m = state.matricize(&[x, y]);
    if dims[x] == 2 && dims[y] == 2 {
        return Ok(wootters_from_matrix(&(&m * m.adjoint())));
    }
    let columns: Vec<DVector<C64>> = m.column_iter().map(|c| c.into_owned()).collect();
    match rank2_itangle_ensemble(&columns, dims[x], dims[y]) {
        Err(Error::RankTooLarge { .. }) => {
            let rho = state.partial_trace(&[x, y])?;
            Ok(convex_roof_itangle(&rho, &RoofOptions::default())?.value)
        }
        other => other,
    }
}

/// Permutation-averaged residual tangle with each bipartite term scaled by
/// `nu_A nu_B = d / 2`, `d` the smaller effective dimension of the two sides.
pub fn i_residual_breakdown(state: &PureState, rank_tol: f64) -> Result<ResidualBreakdown> {
    if !(rank_tol > 0.0 && rank_tol.is_finite()) {
        return Err(Error::InvalidTolerance(rank_tol));
    }
    let n = state.shape().num_factors();
    if n != 3 {
        return Err(Error::WrongFactorCount { expected: 3, found: n });
    }
    let mut one_vs_rest = [0.0; 3];
    let mut one_vs_rest_dims = [0; 3];
    let mut marginal_ranks = [0; 3];
    for i in 0..3 {
        // Both sides of a pure bipartition share their nonzero spectrum, so
        // the smaller Gram gives the rank of either side.
        let m = state.matricize(&[i]);
        let spectrum = reshaped_spectrum(&m);
        let rank = spectrum.iter().filter(|&&l| l > rank_tol).count();
        let purity: f64 = spectrum.iter().map(|l| l * l).sum();
        marginal_ranks[i] = rank;
        one_vs_rest_dims[i] = rank;
        one_vs_rest[i] = 2.0 * (rank as f64 / 2.0) * (1.0 - purity);
    }
    let mut pairs = [0.0; 3];
    let mut pair_dims = [0; 3];
    for (slot, &(x, y, _)) in PAIRS.iter().enumerate() {
        let d = marginal_ranks[x].min(marginal_ranks[y]);
        pair_dims[slot] = d;
        pairs[slot] = (d as f64 / 2.0) * pair_itangle(state, x, y)?;
    }
    let value = one_vs_rest.iter().sum::<f64>() / 3.0 - 2.0 * pairs.iter().sum::<f64>() / 3.0;
    Ok(ResidualBreakdown { one_vs_rest, one_vs_rest_dims, pairs, pair_dims, marginal_ranks, value })
}

pub fn i_residual_tangle(state: &PureState, rank_tol: f64) -> Result<f64> {
    Ok(i_residual_breakdown(state, rank_tol)?.value)
}

/// Everything reported per time point of a cavity scenario.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TangleReport {
    pub t: f64,
    pub tau_f_aa: f64,
    pub tau_a_rest: f64,
    pub tau_aa: f64,
    pub tau_af: f64,
    pub tau_res: f64,
    pub inversion: f64,
    /// Effective dimension of the field used in the residual scaling.
    pub field_dim: usize,
}

impl TangleReport {
    pub fn compute(state: &PureState, t: f64, rank_tol: f64) -> Result<Self> {
        let b = bipartite_tangles_all(state)?;
        let res = i_residual_breakdown(state, rank_tol)?;
        Ok(Self {
            t,
            tau_f_aa: b.tau_f_aa,
            tau_a_rest: b.tau_a_rest,
            tau_aa: b.tau_aa,
            tau_af: b.tau_af,
            tau_res: res.value,
            inversion: atomic_inversion(state),
            field_dim: res.marginal_ranks[2],
        })
    }

    pub fn tangles(&self) -> [f64; 5] {
        [self.tau_f_aa, self.tau_a_rest, self.tau_aa, self.tau_af, self.tau_res]
    }
}
