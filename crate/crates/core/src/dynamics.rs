//! Exact propagation of the resonant two-atom Tavis-Cummings model.
//!
//! The Hamiltonian (hbar = 1)
//!
//! ```text
//! H = omega (a^dag a + sz1/2 + sz2/2) + g [(s-1 + s-2) a^dag + (s+1 + s+2) a]
//! ```
//!
//! conserves the excitation number `K = n + #excited atoms`, so it splits into
//! blocks spanned by `{|ee,K-2>, |eg,K-1>, |ge,K-1>, |gg,K>}` (states with a
//! photon label outside `0..=n_max` are dropped). Each block is at most 4x4 and
//! is diagonalized once; evolution to any time is then a phase rotation in the
//! block eigenbasis.
//!
//! The free part is `omega (K - 1)` on every block, a local phase. `omega`
//! therefore never changes a tangle or the inversion and defaults to zero
//! (interaction picture).

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::tensor::{PureState, SystemShape};

/// Population allowed on the top [`GUARD_LEVELS`] Fock levels.
pub const TRUNCATION_GUARD: f64 = 1e-8;
/// Number of Fock levels below and including `n_max` watched by the guard.
pub const GUARD_LEVELS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    Ground = 0,
    Excited = 1,
}

impl Level {
    fn sigma_z(self) -> f64 {
        match self {
            Level::Ground => -1.0,
            Level::Excited => 1.0,
        }
    }

    fn excitations(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    pub g: f64,
    pub omega: f64,
    pub n_max: usize,
}

impl ModelParams {
    pub fn new(g: f64, omega: f64, n_max: usize) -> Result<Self> {
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::InvalidParams(format!("coupling g must be positive, got {g}")));
        }
        if !omega.is_finite() {
            return Err(Error::InvalidParams(format!("omega must be finite, got {omega}")));
        }
        if n_max < 1 {
            return Err(Error::InvalidParams("n_max must be at least 1".into()));
        }
        Ok(Self { g, omega, n_max })
    }

    /// Interaction picture (`omega = 0`).
    pub fn resonant(g: f64, n_max: usize) -> Result<Self> {
        Self::new(g, 0.0, n_max)
    }

    pub fn shape(&self) -> SystemShape {
        SystemShape::cavity(self.n_max)
    }
}

/// Label `|s1 s2, n>` of a cavity basis vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BasisLabel {
    pub atom1: Level,
    pub atom2: Level,
    pub photons: usize,
}

impl BasisLabel {
    pub fn new(atom1: Level, atom2: Level, photons: usize) -> Self {
        Self { atom1, atom2, photons }
    }

    pub fn excitations(&self) -> usize {
        self.photons + self.atom1.excitations() + self.atom2.excitations()
    }

    pub fn index(&self, n_max: usize) -> usize {
        (2 * self.atom1 as usize + self.atom2 as usize) * (n_max + 1) + self.photons
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = |l: Level| if l == Level::Excited { 'e' } else { 'g' };
        write!(f, "|{}{},{}>", c(self.atom1), c(self.atom2), self.photons)
    }
}

/// Matrix element `<a|H|b>`.
pub fn hamiltonian_element(a: BasisLabel, b: BasisLabel, params: &ModelParams) -> f64 {
    if a == b {
        return params.omega
            * (a.photons as f64 + 0.5 * (a.atom1.sigma_z() + a.atom2.sigma_z()));
    }
    // Lowering one atom while creating a photon, or the Hermitian conjugate.
    let lowers = |hi: BasisLabel, lo: BasisLabel| -> bool {
        if lo.photons != hi.photons + 1 {
            return false;
        }
        let first = hi.atom1 == Level::Excited
            && lo.atom1 == Level::Ground
            && hi.atom2 == lo.atom2;
        let second = hi.atom2 == Level::Excited
            && lo.atom2 == Level::Ground
            && hi.atom1 == lo.atom1;
        first || second
    };
    if lowers(b, a) {
        params.g * (a.photons as f64).sqrt()
    } else if lowers(a, b) {
        params.g * (b.photons as f64).sqrt()
    } else {
        0.0
    }
}

pub fn fock_state(n: usize, n_max: usize) -> Result<DVector<C64>> {
    if n > n_max {
        return Err(Error::PhotonOutOfRange { n, n_max });
    }
    let mut v = DVector::zeros(n_max + 1);
    v[n] = C64::new(1.0, 0.0);
    Ok(v)
}

/// Truncated coherent state with real `alpha = sqrt(mean_n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoherentField {
    pub amplitudes: DVector<C64>,
    pub n_max: usize,
}

/// Natural log of the Poisson weights `P(n) = e^{-m} m^n / n!` for `n <= upto`.
fn poisson_log_pmf(mean_n: f64, upto: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(upto + 1);
    if mean_n == 0.0 {
        out.push(0.0);
        out.extend(std::iter::repeat_n(f64::NEG_INFINITY, upto));
        return out;
    }
    let ln_m = mean_n.ln();
    let mut acc = -mean_n;
    out.push(acc);
    for n in 1..=upto {
        acc += ln_m - (n as f64).ln();
        out.push(acc);
    }
    out
}

/// Smallest `N` with Poisson mass above `N` below `tail_tol`.
pub fn poisson_cutoff(mean_n: f64, tail_tol: f64) -> usize {
    // Far enough out that the remaining tail is below any f64 tolerance.
    let horizon = (mean_n + 60.0 * mean_n.sqrt() + 100.0).ceil() as usize;
    let log_pmf = poisson_log_pmf(mean_n, horizon);
    // `tail` is the mass strictly above `n`.
    let mut tail = 0.0;
    let mut n = horizon;
    while n > 0 {
        let next = tail + log_pmf[n].exp();
        if next >= tail_tol {
            break;
        }
        tail = next;
        n -= 1;
    }
    n
}

pub fn coherent_state(mean_n: f64, tail_tol: f64) -> Result<CoherentField> {
    if !(mean_n >= 0.0 && mean_n.is_finite()) {
        return Err(Error::InvalidParams(format!("mean photon number must be >= 0, got {mean_n}")));
    }
    if !(tail_tol > 0.0 && tail_tol < 1.0) {
        return Err(Error::InvalidTolerance(tail_tol));
    }
    let n_max = poisson_cutoff(mean_n, tail_tol).max(1);
    let log_pmf = poisson_log_pmf(mean_n, n_max);
    let mut amps = DVector::from_iterator(
        n_max + 1,
        log_pmf.iter().map(|&lp| C64::new((0.5 * lp).exp(), 0.0)),
    );
    let norm = amps.norm();
    amps /= C64::from(norm);
    Ok(CoherentField { amplitudes: amps, n_max })
}

/// Zero-pads a field vector to a larger truncation.
pub fn pad_field(field: &DVector<C64>, n_max: usize) -> Result<DVector<C64>> {
    if field.len() > n_max + 1 {
        return Err(Error::DimensionMismatch { expected: n_max + 1, found: field.len() });
    }
    let mut out = DVector::zeros(n_max + 1);
    out.rows_mut(0, field.len()).copy_from(field);
    Ok(out)
}

/// Named two-atom initial states. Amplitudes are ordered `gg, ge, eg, ee`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AtomicPreset {
    Ee,
    Gg,
    /// `(|eg> + |ge>)/sqrt 2`
    SymPlus,
    /// `(|gg> + |ee>)/sqrt 2`
    CatPlus,
    /// `(|eg> - |ge>)/sqrt 2`, decoupled from the field.
    Singlet,
}

impl AtomicPreset {
    pub const ALL: [AtomicPreset; 5] =
        [Self::Ee, Self::Gg, Self::SymPlus, Self::CatPlus, Self::Singlet];

    pub fn name(self) -> &'static str {
        match self {
            Self::Ee => "ee",
            Self::Gg => "gg",
            Self::SymPlus => "sym_plus",
            Self::CatPlus => "cat_plus",
            Self::Singlet => "singlet",
        }
    }
}

impl fmt::Display for AtomicPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AtomicPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown atomic state '{s}'")))
    }
}

pub fn atomic_state(preset: AtomicPreset) -> DVector<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let v = match preset {
        AtomicPreset::Ee => [0.0, 0.0, 0.0, 1.0],
        AtomicPreset::Gg => [1.0, 0.0, 0.0, 0.0],
        AtomicPreset::SymPlus => [0.0, s, s, 0.0],
        AtomicPreset::CatPlus => [s, 0.0, 0.0, s],
        AtomicPreset::Singlet => [0.0, -s, s, 0.0],
    };
    DVector::from_iterator(4, v.iter().map(|&x| C64::new(x, 0.0)))
}

/// Normalizes raw amplitudes in the order `gg, ge, eg, ee`.
pub fn atomic_state_from_amplitudes(amps: &[C64]) -> Result<DVector<C64>> {
    if amps.len() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: amps.len() });
    }
    let v = DVector::from_column_slice(amps);
    let norm = v.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::ZeroVector);
    }
    Ok(v / C64::from(norm))
}

/// `|atoms> (x) |field>` on the cavity shape with `n_max = field.len() - 1`.
pub fn product_state(atoms: &DVector<C64>, field: &DVector<C64>) -> Result<PureState> {
    if atoms.len() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: atoms.len() });
    }
    if field.len() < 2 {
        return Err(Error::InvalidShape("field needs at least two Fock levels".into()));
    }
    let shape = SystemShape::cavity(field.len() - 1);
    PureState::normalized(shape, atoms.kronecker(field))
}

/// Diagonalized Hamiltonian block for one excitation number.
#[derive(Clone, Debug)]
pub struct BlockPropagator {
    excitation: usize,
    basis: Vec<BasisLabel>,
    indices: Vec<usize>,
    hamiltonian: DMatrix<f64>,
    energies: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

impl BlockPropagator {
    pub fn excitation(&self) -> usize {
        self.excitation
    }

    pub fn basis(&self) -> &[BasisLabel] {
        &self.basis
    }

    /// Flat indices of the block basis in the cavity state vector.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn hamiltonian(&self) -> &DMatrix<f64> {
        &self.hamiltonian
    }

    pub fn energies(&self) -> &DVector<f64> {
        &self.energies
    }

    /// Columns are eigenvectors; real because the block is real symmetric.
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    fn gather(&self, state: &DVector<C64>) -> DVector<C64> {
        DVector::from_iterator(self.indices.len(), self.indices.iter().map(|&i| state[i]))
    }

    /// Amplitudes of `state` in this block's eigenbasis.
    fn project(&self, state: &DVector<C64>) -> DVector<C64> {
        let local = self.gather(state);
        DVector::from_fn(self.dim(), |j, _| {
            (0..self.dim()).map(|i| local[i] * self.eigenvectors[(i, j)]).sum()
        })
    }

    fn scatter_evolved(&self, coeffs: &DVector<C64>, t: f64, out: &mut DVector<C64>) {
        let phased: Vec<C64> = coeffs
            .iter()
            .zip(self.energies.iter())
            .map(|(c, &e)| c * C64::from_polar(1.0, -e * t))
            .collect();
        for (i, &idx) in self.indices.iter().enumerate() {
            out[idx] = (0..self.dim()).map(|j| phased[j] * self.eigenvectors[(i, j)]).sum();
        }
    }
}

/// Block basis of `Omega_K` in the order `ee, eg, ge, gg`, clipped to the
/// photon truncation.
fn block_basis(k: usize, n_max: usize) -> Vec<BasisLabel> {
    use Level::{Excited as E, Ground as G};
    let mut basis = Vec::with_capacity(4);
    if k >= 2 && k - 2 <= n_max {
        basis.push(BasisLabel::new(E, E, k - 2));
    }
    if k >= 1 && k - 1 <= n_max {
        basis.push(BasisLabel::new(E, G, k - 1));
        basis.push(BasisLabel::new(G, E, k - 1));
    }
    if k <= n_max {
        basis.push(BasisLabel::new(G, G, k));
    }
    basis
}

pub fn build_block(k: usize, params: &ModelParams) -> Result<BlockPropagator> {
    let basis = block_basis(k, params.n_max);
    if basis.is_empty() {
        return Err(Error::InvalidParams(format!(
            "excitation number {k} has no states below n_max = {}",
            params.n_max
        )));
    }
    let dim = basis.len();
    let hamiltonian =
        DMatrix::from_fn(dim, dim, |i, j| hamiltonian_element(basis[i], basis[j], params));
    let eig = SymmetricEigen::new(hamiltonian.clone());
    let indices = basis.iter().map(|b| b.index(params.n_max)).collect();
    Ok(BlockPropagator {
        excitation: k,
        basis,
        indices,
        hamiltonian,
        energies: eig.eigenvalues,
        eigenvectors: eig.eigenvectors,
    })
}

/// All blocks of the truncated model, diagonalized once.
#[derive(Clone, Debug)]
pub struct Propagator {
    params: ModelParams,
    blocks: Vec<BlockPropagator>,
}

impl Propagator {
    pub fn new(params: ModelParams) -> Self {
        let blocks = (0..=params.n_max + 2)
            .map(|k| build_block(k, &params).expect("every K <= n_max + 2 has a state"))
            .collect();
        Self { params, blocks }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn blocks(&self) -> &[BlockPropagator] {
        &self.blocks
    }

    fn check_shape(&self, state: &PureState) -> Result<()> {
        let expected = self.params.shape();
        if state.shape() != &expected {
            return Err(Error::DimensionMismatch {
                expected: expected.total(),
                found: state.shape().total(),
            });
        }
        Ok(())
    }

    /// Precomputes the block-eigenbasis amplitudes of `initial`.
    pub fn trajectory(&self, initial: &PureState) -> Result<Trajectory<'_>> {
        self.check_shape(initial)?;
        check_truncation(initial, 0.0)?;
        let coeffs = self
            .blocks
            .iter()
            .enumerate()
            .filter_map(|(b, block)| {
                let c = block.project(initial.amplitudes());
                (c.norm_squared() > 0.0).then_some((b, c))
            })
            .collect();
        Ok(Trajectory { propagator: self, shape: initial.shape().clone(), coeffs })
    }

    /// `exp(-iHt)|state>`.
    pub fn evolve(&self, state: &PureState, t: f64) -> Result<PureState> {
        self.trajectory(state)?.at(t)
    }

    /// `<H>` evaluated block by block from the Hamiltonian matrix elements.
    pub fn energy(&self, state: &PureState) -> Result<f64> {
        self.check_shape(state)?;
        let mut e = 0.0;
        for block in &self.blocks {
            let local = block.gather(state.amplitudes());
            let h = block.hamiltonian.map(|x| C64::new(x, 0.0));
            e += local.dotc(&(h * &local)).re;
        }
        Ok(e)
    }
}

/// An initial state expanded in the block eigenbases, ready to be sampled at
/// arbitrary times.
#[derive(Clone, Debug)]
pub struct Trajectory<'a> {
    propagator: &'a Propagator,
    shape: SystemShape,
    coeffs: Vec<(usize, DVector<C64>)>,
}

impl Trajectory<'_> {
    /// Excitation numbers with nonzero weight.
    pub fn populated_blocks(&self) -> Vec<usize> {
        self.coeffs.iter().map(|(b, _)| self.propagator.blocks[*b].excitation).collect()
    }

    /// State at time `t`, with the truncation guard applied.
    pub fn at(&self, t: f64) -> Result<PureState> {
        let mut amps = DVector::zeros(self.shape.total());
        for (b, c) in &self.coeffs {
            self.propagator.blocks[*b].scatter_evolved(c, t, &mut amps);
        }
        let state = PureState::from_raw(self.shape.clone(), amps);
        check_truncation(&state, t)?;
        Ok(state)
    }
}

pub fn evolve(state: &PureState, t: f64, params: &ModelParams) -> Result<PureState> {
    Propagator::new(*params).evolve(state, t)
}

fn cavity_n_max(state: &PureState) -> usize {
    let dims = state.shape().dims();
    assert!(
        dims.len() == 3 && dims[0] == 2 && dims[1] == 2,
        "expected a 2 x 2 x D cavity state, got {dims:?}"
    );
    dims[2] - 1
}

/// Population on the top [`GUARD_LEVELS`] photon numbers.
pub fn truncation_population(state: &PureState) -> f64 {
    let n_max = cavity_n_max(state);
    let lo = n_max.saturating_sub(GUARD_LEVELS - 1);
    let d = n_max + 1;
    state
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(i, _)| i % d >= lo)
        .map(|(_, z)| z.norm_sqr())
        .sum()
}

pub fn check_truncation(state: &PureState, time: f64) -> Result<()> {
    let population = truncation_population(state);
    if population > TRUNCATION_GUARD {
        return Err(Error::TruncationGuard { time, population });
    }
    Ok(())
}

/// `P(ee) - P(gg)`.
pub fn atomic_inversion(state: &PureState) -> f64 {
    let d = cavity_n_max(state) + 1;
    let amps = state.amplitudes();
    let pop = |atoms: usize| -> f64 { amps.rows(atoms * d, d).norm_squared() };
    pop(3) - pop(0)
}

/// Weight of the state on each excitation number `K = 0..=n_max + 2`.
pub fn excitation_distribution(state: &PureState) -> Vec<f64> {
    let n_max = cavity_n_max(state);
    let shape = state.shape();
    let mut out = vec![0.0; n_max + 3];
    for (i, z) in state.amplitudes().iter().enumerate() {
        let l = shape.labels(i);
        out[l[0] + l[1] + l[2]] += z.norm_sqr();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::PartialTrace;

    fn label(s: &str, n: usize) -> BasisLabel {
        let lv = |c| if c == 'e' { Level::Excited } else { Level::Ground };
        let mut ch = s.chars();
        BasisLabel::new(lv(ch.next().unwrap()), lv(ch.next().unwrap()), n)
    }

    #[test]
    fn fock_examples() {
        let v = fock_state(0, 5).unwrap();
        assert_eq!(v[0], C64::new(1.0, 0.0));
        let v = fock_state(10, 20).unwrap();
        assert_eq!(v.len(), 21);
        assert_eq!(v[10], C64::new(1.0, 0.0));
        assert_eq!(v.norm(), 1.0);
        assert_eq!(fock_state(21, 20), Err(Error::PhotonOutOfRange { n: 21, n_max: 20 }));
    }

    #[test]
    fn coherent_vacuum() {
        let f = coherent_state(0.0, 1e-12).unwrap();
        assert!((f.amplitudes[0].re - 1.0).abs() < 1e-15);
        assert!(f.amplitudes.iter().skip(1).all(|z| z.norm() == 0.0));
    }

    #[test]
    fn coherent_mean_and_peak() {
        let tol = 1e-12;
        let f = coherent_state(100.0, tol).unwrap();
        let probs: Vec<f64> = f.amplitudes.iter().map(|z| z.norm_sqr()).collect();
        let mean: f64 = probs.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
        assert!((mean - 100.0).abs() < tol * 100.0 + 1e-9, "mean {mean}");
        // Poisson mode sits at floor(m) and floor(m) - 1 for integer m.
        let peak = probs.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert!(peak == 100 || peak == 99);
        assert!(f.amplitudes.iter().all(|z| z.im == 0.0 && z.re >= 0.0));
    }

    #[test]
    fn coherent_cutoff_matches_cumulative_tail() {
        // Independent tail evaluation: sum pmf above N with a running product.
        let m: f64 = 100.0;
        let tol = 1e-12;
        let n_max = coherent_state(m, tol).unwrap().n_max;
        let tail_above = |cut: usize| -> f64 {
            let mut p = (-m).exp();
            let mut tail = 0.0;
            for n in 1..2000usize {
                p *= m / n as f64;
                if n > cut {
                    tail += p;
                }
            }
            tail
        };
        assert!(tail_above(n_max) < tol);
        assert!(tail_above(n_max - 1) >= tol);
        assert!(n_max > 150 && n_max < 200, "n_max = {n_max}");
    }

    #[test]
    fn atomic_presets() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let sym = atomic_state(AtomicPreset::SymPlus);
        assert!((sym[1].re - s).abs() < 1e-15 && (sym[2].re - s).abs() < 1e-15);
        let cat = atomic_state(AtomicPreset::CatPlus);
        assert!((cat[0].re - s).abs() < 1e-15 && (cat[3].re - s).abs() < 1e-15);
        let singlet = atomic_state(AtomicPreset::Singlet);
        // index 2 is |eg>, index 1 is |ge>
        assert!((singlet[2].re - s).abs() < 1e-15 && (singlet[1].re + s).abs() < 1e-15);
        assert_eq!("sym_plus".parse::<AtomicPreset>().unwrap(), AtomicPreset::SymPlus);
        assert!("bogus".parse::<AtomicPreset>().is_err());
        let zero = [C64::new(0.0, 0.0); 4];
        assert_eq!(atomic_state_from_amplitudes(&zero), Err(Error::ZeroVector));
        let raw = atomic_state_from_amplitudes(&[C64::new(3.0, 0.0), 0.0.into(), 0.0.into(), C64::new(0.0, 4.0)]).unwrap();
        assert!((raw.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn block_dimensions_and_elements() {
        let p = ModelParams::resonant(1.0, 10).unwrap();
        assert_eq!(build_block(0, &p).unwrap().dim(), 1);
        assert_eq!(build_block(1, &p).unwrap().dim(), 3);
        assert_eq!(build_block(2, &p).unwrap().dim(), 4);
        assert_eq!(build_block(7, &p).unwrap().dim(), 4);
        // Clipped at the truncation edge.
        assert_eq!(build_block(11, &p).unwrap().dim(), 3);
        assert_eq!(build_block(12, &p).unwrap().dim(), 1);
        assert!(build_block(13, &p).is_err());

        let b2 = build_block(2, &p).unwrap();
        let h = b2.hamiltonian();
        let s2 = 2f64.sqrt();
        // basis: ee0, eg1, ge1, gg2
        assert_eq!(b2.basis()[0], label("ee", 0));
        assert!((h[(0, 1)] - 1.0).abs() < 1e-15);
        assert!((h[(0, 2)] - 1.0).abs() < 1e-15);
        assert!((h[(1, 3)] - s2).abs() < 1e-15);
        assert!((h[(2, 3)] - s2).abs() < 1e-15);
        assert_eq!(h[(1, 2)], 0.0);
        assert_eq!(h[(0, 3)], 0.0);
        assert!((h - h.transpose()).amax() == 0.0);
    }

    #[test]
    fn k1_spectrum() {
        let g = 0.7;
        let b = build_block(1, &ModelParams::resonant(g, 5).unwrap()).unwrap();
        let mut e: Vec<f64> = b.energies().iter().copied().collect();
        e.sort_by(f64::total_cmp);
        let w = 2f64.sqrt() * g;
        assert!((e[0] + w).abs() < 1e-14 && e[1].abs() < 1e-14 && (e[2] - w).abs() < 1e-14);
    }

    #[test]
    fn block_eigenvectors_unitary() {
        let p = ModelParams::new(1.0, 0.3, 30).unwrap();
        for block in Propagator::new(p).blocks() {
            let v = block.eigenvectors();
            let err = (v.transpose() * v - DMatrix::identity(v.ncols(), v.ncols())).amax();
            assert!(err < 1e-12);
            // V diag(E) V^T reproduces the block.
            let rebuilt = v * DMatrix::from_diagonal(block.energies()) * v.transpose();
            assert!((rebuilt - block.hamiltonian()).amax() < 1e-12);
        }
    }

    #[test]
    fn free_hamiltonian_is_constant_per_block() {
        let p = ModelParams::new(1.0, 2.5, 8).unwrap();
        for k in 0..=10 {
            let b = build_block(k, &p).unwrap();
            for (i, lab) in b.basis().iter().enumerate() {
                assert_eq!(lab.excitations(), k);
                assert!((b.hamiltonian()[(i, i)] - 2.5 * (k as f64 - 1.0)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn vacuum_is_stationary() {
        let p = ModelParams::resonant(1.0, 4).unwrap();
        let psi = PureState::basis(p.shape(), &[0, 0, 0]).unwrap();
        for t in [0.0, 0.3, 17.0] {
            let out = evolve(&psi, t, &p).unwrap();
            assert!((out.inner(&psi).norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn single_excitation_return_probability() {
        // Oracle: the K = 1 block couples |gg,1> to (|eg,0> + |ge,0>)/sqrt2 with
        // strength sqrt2 g, so the return amplitude is cos(sqrt2 g t).
        let g = 1.3;
        let p = ModelParams::resonant(g, 6).unwrap();
        let psi = PureState::basis(p.shape(), &[0, 0, 1]).unwrap();
        let prop = Propagator::new(p);
        let traj = prop.trajectory(&psi).unwrap();
        for i in 0..200 {
            let t = i as f64 * 0.037;
            let amp = traj.at(t).unwrap().amplitude(&[0, 0, 1]).unwrap();
            let expected = (2f64.sqrt() * g * t).cos().powi(2);
            assert!((amp.norm_sqr() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn truncation_guard_trips() {
        let p = ModelParams::resonant(1.0, 4).unwrap();
        let psi = PureState::basis(p.shape(), &[1, 1, 2]).unwrap();
        match evolve(&psi, 0.0, &p) {
            Err(Error::TruncationGuard { population, .. }) => assert!((population - 1.0).abs() < 1e-12),
            other => panic!("expected guard error, got {other:?}"),
        }
        // n = 1 is clear of {2, 3, 4} at t = 0 but ee,1 reaches gg,3.
        let psi = PureState::basis(p.shape(), &[1, 1, 1]).unwrap();
        assert!(matches!(evolve(&psi, 0.5, &p), Err(Error::TruncationGuard { .. })));
    }

    #[test]
    fn inversion_examples() {
        let f = fock_state(3, 8).unwrap();
        let ee = product_state(&atomic_state(AtomicPreset::Ee), &f).unwrap();
        assert_eq!(atomic_inversion(&ee), 1.0);
        let coh = coherent_state(4.0, 1e-12).unwrap();
        let gg = product_state(&atomic_state(AtomicPreset::Gg), &coh.amplitudes).unwrap();
        assert!((atomic_inversion(&gg) + 1.0).abs() < 1e-14);
        let sym = product_state(&atomic_state(AtomicPreset::SymPlus), &coh.amplitudes).unwrap();
        assert_eq!(atomic_inversion(&sym), 0.0);
    }

    #[test]
    fn singlet_marginals_are_frozen() {
        let f = pad_field(&fock_state(3, 3).unwrap(), 9).unwrap();
        let psi = product_state(&atomic_state(AtomicPreset::Singlet), &f).unwrap();
        let p = ModelParams::resonant(1.0, 9).unwrap();
        let prop = Propagator::new(p);
        let traj = prop.trajectory(&psi).unwrap();
        let rho0 = psi.partial_trace(&[0, 1]).unwrap();
        for i in 0..50 {
            let s = traj.at(i as f64 * 0.21).unwrap();
            let rho = s.partial_trace(&[0, 1]).unwrap();
            assert!((rho.matrix() - rho0.matrix()).camax() < 1e-12);
        }
    }

    #[test]
    fn wrong_shape_is_rejected() {
        let p = ModelParams::resonant(1.0, 4).unwrap();
        let psi = PureState::basis(SystemShape::cavity(5), &[0, 0, 0]).unwrap();
        assert!(matches!(evolve(&psi, 1.0, &p), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(0.0, 0.0, 3).is_err());
        assert!(ModelParams::new(1.0, 0.0, 0).is_err());
        assert!(ModelParams::new(1.0, f64::NAN, 3).is_err());
    }
}
