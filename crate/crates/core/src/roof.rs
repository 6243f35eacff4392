//! Numerical convex roof of the pure-state I-tangle.
//!
//! Decompositions of `rho = sum_j |v_j><v_j|` (with `v_j = sqrt(l_j) e_j`) are
//! parametrized by isometries `U` (m x r): `x_i = sum_j U_ij v_j`. The average
//! `sum_i N(x_i) / |x_i|^2`, with `N` the unnormalized pure tangle, is minimized
//! by Riemannian gradient descent on the Stiefel manifold with a polar
//! retraction and Armijo backtracking.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::tensor::{hermitian_eigen, DensityMatrix};

#[derive(Clone, Debug, PartialEq)]
pub struct RoofOptions {
    /// Random starts per ensemble size, counting the eigendecomposition start.
    pub restarts: usize,
    /// Ensemble sizes to try; `None` means every size from `r` to `r^2`.
    pub ensemble_sizes: Option<Vec<usize>>,
    /// Stop when the Riemannian gradient norm falls below this.
    pub tol: f64,
    pub seed: u64,
    pub max_iter: usize,
    /// Eigenvalues at or below this are dropped from the range of `rho`.
    pub rank_tol: f64,
    pub nu_product: f64,
}

impl Default for RoofOptions {
    fn default() -> Self {
        Self {
            restarts: 20,
            ensemble_sizes: None,
            tol: 1e-8,
            seed: 0,
            max_iter: 5000,
            rank_tol: 1e-10,
            nu_product: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoofResult {
    pub value: f64,
    /// Weights of the optimal decomposition (elements with zero weight dropped).
    pub weights: Vec<f64>,
    /// Normalized pure states matching `weights`.
    pub states: Vec<DVector<C64>>,
    pub ensemble_size: usize,
    /// Average over the spectral decomposition, an upper bound on `value`.
    pub spectral_average: f64,
}

struct Problem {
    vectors: Vec<DVector<C64>>,
    rows: usize,
    cols: usize,
    transpose: bool,
    db: usize,
    nu: f64,
}

impl Problem {
    fn reshape(&self, x: &DVector<C64>) -> DMatrix<C64> {
        let db = self.db;
        if self.transpose {
            DMatrix::from_fn(self.rows, self.cols, |b, a| x[a * db + b])
        } else {
            DMatrix::from_fn(self.rows, self.cols, |a, b| x[a * db + b])
        }
    }

    fn flatten(&self, m: &DMatrix<C64>) -> DVector<C64> {
        let db = self.db;
        let n = self.rows * self.cols;
        DVector::from_fn(n, |k, _| {
            let (a, b) = (k / db, k % db);
            if self.transpose {
                m[(b, a)]
            } else {
                m[(a, b)]
            }
        })
    }

    fn elements(&self, u: &DMatrix<C64>) -> Vec<DVector<C64>> {
        (0..u.nrows())
            .map(|i| {
                let mut x = DVector::zeros(self.vectors[0].len());
                for (j, v) in self.vectors.iter().enumerate() {
                    x.axpy(u[(i, j)], v, C64::new(1.0, 0.0));
                }
                x
            })
            .collect()
    }

    /// Objective and its gradient with respect to `conj(U)`.
    fn eval(&self, u: &DMatrix<C64>, with_grad: bool) -> (f64, DMatrix<C64>) {
        let r = self.vectors.len();
        let mut grad = DMatrix::zeros(u.nrows(), r);
        let mut f = 0.0;
        for (i, x) in self.elements(u).iter().enumerate() {
            let p = x.norm_squared();
            if p < 1e-300 {
                continue;
            }
            let xm = self.reshape(x);
            let s = &xm * xm.adjoint();
            let tr_s2: f64 = s.iter().map(|z| z.norm_sqr()).sum();
            let n = 2.0 * self.nu * (p * p - tr_s2);
            f += n / p;
            if with_grad {
                let dn = (&xm * C64::from(p) - &s * &xm) * C64::from(4.0 * self.nu);
                let gm = dn / C64::from(p) - xm * C64::from(n / (p * p));
                let g = self.flatten(&gm);
                for (j, v) in self.vectors.iter().enumerate() {
                    grad[(i, j)] = v.dotc(&g);
                }
            }
        }
        (f, grad)
    }
}

fn polar(a: &DMatrix<C64>) -> DMatrix<C64> {
    let (vals, vecs) = hermitian_eigen(&(a.adjoint() * a));
    let inv_sqrt = DMatrix::from_diagonal(&DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&l| C64::new(1.0 / l.max(1e-300).sqrt(), 0.0)),
    ));
    a * (&vecs * inv_sqrt * vecs.adjoint())
}

fn frob_sq(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

fn optimize(problem: &Problem, mut u: DMatrix<C64>, opts: &RoofOptions) -> (f64, DMatrix<C64>) {
    let (mut f, mut gamma) = problem.eval(&u, true);
    let mut step = 1.0;
    for _ in 0..opts.max_iter {
        let ug = u.adjoint() * &gamma;
        let herm = (&ug + ug.adjoint()) * C64::new(0.5, 0.0);
        let g = &gamma - &u * herm;
        let gnorm2 = frob_sq(&g);
        if gnorm2.sqrt() < opts.tol {
            break;
        }
        let mut s = step;
        let mut accepted = None;
        while s > 1e-14 {
            let cand = polar(&(&u - &g * C64::from(s)));
            let (fc, _) = problem.eval(&cand, false);
            if fc <= f - 2e-4 * s * gnorm2 {
                accepted = Some((fc, cand));
                break;
            }
            s *= 0.5;
        }
        let Some((fc, cand)) = accepted else { break };
        let decrease = f - fc;
        u = cand;
        f = fc;
        gamma = problem.eval(&u, true).1;
        step = (2.0 * s).min(1e3);
        if decrease <= 1e-15 * f.abs().max(1e-15) {
            break;
        }
    }
    (f, u)
}

fn start_point(m: usize, r: usize, seed: u64, restart: usize) -> DMatrix<C64> {
    if restart == 0 {
        return DMatrix::from_fn(m, r, |i, j| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((m as u64) << 32) | restart as u64);
    let a = DMatrix::from_fn(m, r, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        C64::new(re, im)
    });
    polar(&a)
}

/// Convex-roof extension of the pure-state I-tangle for a two-factor state.
pub fn convex_roof_itangle(rho: &DensityMatrix, opts: &RoofOptions) -> Result<RoofResult> {
    let (da, db) = match rho.dims() {
        &[a, b] => (a, b),
        other => return Err(Error::WrongFactorCount { expected: 2, found: other.len() }),
    };
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::InvalidTolerance(opts.tol));
    }
    if opts.rank_tol.is_nan() || opts.rank_tol <= 0.0 {
        return Err(Error::InvalidTolerance(opts.rank_tol));
    }
    if opts.restarts == 0 {
        return Err(Error::InvalidParams("at least one restart is required".into()));
    }
    let (vals, vecs) = hermitian_eigen(rho.matrix());
    let kept: Vec<usize> = (0..vals.len()).rev().filter(|&j| vals[j] > opts.rank_tol).collect();
    let r = kept.len();
    if r == 0 {
        return Err(Error::InvalidDensityMatrix("no eigenvalue above the rank tolerance".into()));
    }
    let sizes = match &opts.ensemble_sizes {
        Some(s) => s.clone(),
        None => (r..=r * r).collect(),
    };
    if sizes.is_empty() || sizes.iter().any(|&m| m < r) {
        let limit = sizes.iter().copied().max().unwrap_or(0);
        return Err(Error::RankTooLarge { rank: r, limit });
    }

    let vectors: Vec<DVector<C64>> =
        kept.iter().map(|&j| vecs.column(j) * C64::from(vals[j].sqrt())).collect();
    let transpose = da > db;
    let problem = Problem {
        vectors,
        rows: da.min(db),
        cols: da.max(db),
        transpose,
        db,
        nu: opts.nu_product,
    };

    let spectral_average = problem.eval(&start_point(r, r, opts.seed, 0), false).0;
    let jobs: Vec<(usize, usize)> =
        sizes.iter().flat_map(|&m| (0..opts.restarts).map(move |k| (m, k))).collect();
    let best = jobs
        .par_iter()
        .map(|&(m, k)| {
            let (f, u) = optimize(&problem, start_point(m, r, opts.seed, k), opts);
            (f, m, u)
        })
        .reduce_with(|a, b| if b.0 < a.0 { b } else { a })
        .expect("job list is non-empty");
    let (value, m, u) = best;

    let mut weights = Vec::new();
    let mut states = Vec::new();
    for x in problem.elements(&u) {
        let p = x.norm_squared();
        if p > 1e-14 {
            weights.push(p);
            states.push(x / C64::from(p.sqrt()));
        }
    }
    let value = value.min(spectral_average);
    Ok(RoofResult { value, weights, states, ensemble_size: m, spectral_average })
}
