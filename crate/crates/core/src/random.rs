//! Random pure states and the residual-tangle positivity sweep.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measures::{i_residual_tangle, DEFAULT_RANK_TOL};
use crate::tensor::{tensor_product, PureState, SystemShape};

/// Values below this count as negative in a sweep.
pub const NEGATIVITY_THRESHOLD: f64 = -1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SamplingMeasure {
    /// Unitarily invariant measure on the full space.
    #[default]
    Haar,
    /// Independent Haar states on each factor, then the tensor product.
    ProductOfFactors,
}

fn gaussian_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<C64> {
    DVector::from_fn(n, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im)
    })
}

fn normalize(v: DVector<C64>) -> DVector<C64> {
    let n = v.norm();
    v / C64::from(n)
}

/// Haar-random pure state on `shape`, determined by `(seed, stream)`.
pub fn haar_pure_stream(shape: &SystemShape, seed: u64, stream: u64) -> PureState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    PureState::from_raw(shape.clone(), normalize(gaussian_vector(&mut rng, shape.total())))
}

pub fn haar_pure(shape: &SystemShape, seed: u64) -> PureState {
    haar_pure_stream(shape, seed, 0)
}

pub fn sample_pure(shape: &SystemShape, measure: SamplingMeasure, seed: u64, stream: u64) -> PureState {
    match measure {
        SamplingMeasure::Haar => haar_pure_stream(shape, seed, stream),
        SamplingMeasure::ProductOfFactors => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream);
            let factors: Vec<DVector<C64>> =
                shape.dims().iter().map(|&d| normalize(gaussian_vector(&mut rng, d))).collect();
            tensor_product(shape, &factors).expect("factor dimensions match the shape")
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub samples: usize,
    pub min_value: f64,
    pub argmin_index: usize,
    pub argmin_state: PureState,
    pub negative_count: usize,
    /// Sample index and value of each state below the threshold, by index.
    pub counterexamples: Vec<(usize, f64, PureState)>,
}

#[derive(Clone, Debug)]
struct Partial {
    min: f64,
    argmin: usize,
    negatives: Vec<(usize, f64)>,
}

impl Partial {
    fn empty() -> Self {
        Self { min: f64::INFINITY, argmin: usize::MAX, negatives: Vec::new() }
    }

    fn push(mut self, index: usize, value: f64) -> Self {
        if value < self.min || (value == self.min && index < self.argmin) {
            self.min = value;
            self.argmin = index;
        }
        if value < NEGATIVITY_THRESHOLD {
            self.negatives.push((index, value));
        }
        self
    }

    fn merge(mut self, other: Self) -> Self {
        if other.min < self.min || (other.min == self.min && other.argmin < self.argmin) {
            self.min = other.min;
            self.argmin = other.argmin;
        }
        self.negatives.extend(other.negatives);
        self
    }
}

fn check_sweep_dims(shape: &SystemShape) -> Result<()> {
    match shape.dims() {
        [2, 2, 3] | [2, 2, 4] => Ok(()),
        other => Err(Error::UnsupportedDims(other.to_vec())),
    }
}

pub fn positivity_sweep(shape: &SystemShape, samples: usize, seed: u64) -> Result<SweepResult> {
    positivity_sweep_with(shape, samples, seed, SamplingMeasure::Haar)
}

/// Evaluates the I-residual tangle on `samples` random states; sample `i`
/// uses stream `i` of `seed`, so results do not depend on scheduling.
pub fn positivity_sweep_with(
    shape: &SystemShape,
    samples: usize,
    seed: u64,
    measure: SamplingMeasure,
) -> Result<SweepResult> {
    check_sweep_dims(shape)?;
    if samples == 0 {
        return Err(Error::InvalidParams("samples must be at least 1".into()));
    }
    let partial = (0..samples)
        .into_par_iter()
        .map(|i| {
            let psi = sample_pure(shape, measure, seed, i as u64);
            i_residual_tangle(&psi, DEFAULT_RANK_TOL).map(|v| (i, v))
        })
        .try_fold(Partial::empty, |acc, r| r.map(|(i, v)| acc.push(i, v)))
        .try_reduce(Partial::empty, |a, b| Ok(a.merge(b)))?;
    let mut negatives = partial.negatives;
    negatives.sort_by_key(|&(i, _)| i);
    let counterexamples = negatives
        .into_iter()
        .map(|(i, v)| (i, v, sample_pure(shape, measure, seed, i as u64)))
        .collect::<Vec<_>>();
    Ok(SweepResult {
        samples,
        min_value: partial.min,
        argmin_index: partial.argmin,
        argmin_state: sample_pure(shape, measure, seed, partial.argmin as u64),
        negative_count: counterexamples.len(),
        counterexamples,
    })
}

/// Writes states as text: a `dims d1,d2,...` header, then one state per line
/// as space-separated `(re,im)` pairs with 17 significant digits.
pub fn write_states<W: Write + ?Sized>(out: &mut W, shape: &SystemShape, states: &[PureState]) -> std::io::Result<()> {
    let dims: Vec<String> = shape.dims().iter().map(|d| d.to_string()).collect();
    writeln!(out, "dims {}", dims.join(","))?;
    for s in states {
        let mut line = String::new();
        for (k, z) in s.amplitudes().iter().enumerate() {
            if k > 0 {
                line.push(' ');
            }
            write!(line, "({:.16e},{:.16e})", z.re, z.im).expect("writing to a String");
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

fn parse_pair(tok: &str) -> Result<C64> {
    let inner = tok
        .strip_prefix('(')
        .and_then(|t| t.strip_suffix(')'))
        .ok_or_else(|| Error::Parse(format!("expected (re,im), got {tok:?}")))?;
    let (re, im) = inner.split_once(',').ok_or_else(|| Error::Parse(format!("missing comma in {tok:?}")))?;
    let num = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{s:?}: {e}")));
    Ok(C64::new(num(re)?, num(im)?))
}

/// Reads the format produced by [`write_states`]. States are checked for
/// normalization.
pub fn read_states<R: BufRead>(input: R) -> Result<(SystemShape, Vec<PureState>)> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty input".into()))?
        .map_err(|e| Error::Parse(e.to_string()))?;
    let dims_text =
        header.strip_prefix("dims ").ok_or_else(|| Error::Parse(format!("bad header {header:?}")))?;
    let dims = dims_text
        .split(',')
        .map(|d| d.trim().parse::<usize>().map_err(|e| Error::Parse(format!("{d:?}: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    let shape = SystemShape::new(dims)?;
    let mut states = Vec::new();
    for line in lines {
        let line = line.map_err(|e| Error::Parse(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let amps = line.split_whitespace().map(parse_pair).collect::<Result<Vec<_>>>()?;
        if amps.len() != shape.total() {
            return Err(Error::DimensionMismatch { expected: shape.total(), found: amps.len() });
        }
        states.push(PureState::new(shape.clone(), DVector::from_vec(amps))?);
    }
    Ok((shape, states))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(d: &[usize]) -> SystemShape {
        SystemShape::new(d.to_vec()).unwrap()
    }

    #[test]
    fn haar_is_normalized_and_deterministic() {
        let s = shape(&[2, 2, 3]);
        for seed in 0..20 {
            let a = haar_pure(&s, seed);
            assert!((a.norm() - 1.0).abs() < 1e-12);
            assert_eq!(a, haar_pure(&s, seed));
        }
        assert_ne!(haar_pure(&s, 1), haar_pure(&s, 2));
        assert_ne!(haar_pure_stream(&s, 1, 0), haar_pure_stream(&s, 1, 1));
    }

    #[test]
    fn haar_marginal_purity_moment() {
        // Haar states on C^m (x) C^n: E[tr rho_A^2] = (m + n)/(mn + 1), here 4/5.
        let s = shape(&[2, 2]);
        let n = 10_000;
        let mean: f64 = (0..n)
            .map(|i| {
                let m = haar_pure_stream(&s, 5, i).matricize(&[0]);
                (&m * m.adjoint()).iter().map(|z| z.norm_sqr()).sum::<f64>()
            })
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.8).abs() < 0.016, "mean purity {mean}");
    }

    #[test]
    fn product_measure_gives_product_states() {
        let s = shape(&[2, 2, 3]);
        let psi = sample_pure(&s, SamplingMeasure::ProductOfFactors, 3, 7);
        assert!((psi.norm() - 1.0).abs() < 1e-12);
        assert!(i_residual_tangle(&psi, DEFAULT_RANK_TOL).unwrap().abs() < 1e-12);
    }

    #[test]
    fn single_sample_sweep_matches_direct_value() {
        let s = shape(&[2, 2, 4]);
        let r = positivity_sweep(&s, 1, 11).unwrap();
        let direct = i_residual_tangle(&haar_pure_stream(&s, 11, 0), DEFAULT_RANK_TOL).unwrap();
        assert_eq!(r.min_value, direct);
        assert_eq!(r.samples, 1);
        assert_eq!(r.argmin_index, 0);
    }

    #[test]
    fn sweep_is_deterministic_and_validates() {
        let s = shape(&[2, 2, 3]);
        let a = positivity_sweep(&s, 200, 4).unwrap();
        let b = positivity_sweep(&s, 200, 4).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.negative_count, 0);
        assert!(a.min_value > 0.0);
        assert!(matches!(positivity_sweep(&shape(&[2, 2, 2]), 10, 0), Err(Error::UnsupportedDims(_))));
        assert!(positivity_sweep(&s, 0, 0).is_err());
    }

    #[test]
    fn dump_round_trip_is_exact() {
        let s = shape(&[2, 2, 3]);
        let states: Vec<PureState> = (0..3).map(|i| haar_pure_stream(&s, 8, i)).collect();
        let mut buf = Vec::new();
        write_states(&mut buf, &s, &states).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("dims 2,2,3\n"));
        let (back_shape, back) = read_states(buf.as_slice()).unwrap();
        assert_eq!(back_shape, s);
        assert_eq!(back, states);
        assert!(read_states("dims 2,2\n(1,0)\n".as_bytes()).is_err());
        assert!(read_states("2,2\n".as_bytes()).is_err());
    }
}
