use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use tcm_core::dynamics::{
    atomic_state, excitation_distribution, fock_state, product_state, AtomicPreset, ModelParams, Propagator,
};
use tcm_core::measures::{
    bipartite_tangles_all, i_residual_tangle, inversion_overlap, rank2_itangle, universal_inversion,
    wootters_tangle, TangleReport,
};
use tcm_core::random::{haar_pure_stream, positivity_sweep};
use tcm_core::roof::{convex_roof_itangle, RoofOptions};
use tcm_core::{partial_trace, DensityMatrix, PureState, SystemShape};

fn ginibre(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im)
    })
}

fn random_unitary(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<C64> {
    let qr = ginibre(rng, d, d).qr();
    let (q, r) = (qr.q(), qr.r());
    let phases = DMatrix::from_diagonal(&r.diagonal().map(|z| z / z.norm()));
    q * phases
}

fn random_mixed(seed: u64, dims: Vec<usize>, rank: usize) -> DensityMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = dims.iter().product();
    let g = ginibre(&mut rng, d, rank);
    DensityMatrix::from_unnormalized(dims, &g * g.adjoint()).unwrap()
}

fn shape(d: &[usize]) -> SystemShape {
    SystemShape::new(d.to_vec()).unwrap()
}

fn local_rotation(psi: &PureState, seed: u64) -> PureState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = psi.clone();
    for (f, &d) in psi.shape().dims().iter().enumerate() {
        out = out.apply_local(f, &random_unitary(&mut rng, d)).unwrap();
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn ckw_for_three_qubits(seed in any::<u64>()) {
        let psi = haar_pure_stream(&shape(&[2, 2, 2]), seed, 0);
        let a_bc = 2.0 * (1.0 - partial_trace(&psi, &[0]).unwrap().purity());
        let ab = wootters_tangle(&partial_trace(&psi, &[0, 1]).unwrap()).unwrap();
        let ac = wootters_tangle(&partial_trace(&psi, &[0, 2]).unwrap()).unwrap();
        prop_assert!(a_bc + 1e-12 >= ab + ac);
    }

    #[test]
    fn two_qubit_tangle_bounded_by_inversion_overlap(seed in any::<u64>(), rank in 1usize..=4) {
        let rho = random_mixed(seed, vec![2, 2], rank);
        prop_assert!(wootters_tangle(&rho).unwrap() <= inversion_overlap(&rho).unwrap() + 1e-12);
    }

    #[test]
    fn inversion_overlap_matches_matrix_route(seed in any::<u64>(), d in 2usize..=4) {
        let psi = haar_pure_stream(&shape(&[2, d, 3]), seed, 1);
        let rho = partial_trace(&psi, &[0, 1]).unwrap();
        let tilde = universal_inversion(&rho, 1.0, 1.0).unwrap();
        let direct = (rho.matrix() * tilde).trace().re;
        // For a pure global state tr(rho_AB^2) equals the purity of the traced factor.
        let rho_c = partial_trace(&psi, &[2]).unwrap();
        let rho_a = partial_trace(&psi, &[0]).unwrap();
        let rho_b = partial_trace(&psi, &[1]).unwrap();
        let via_purities = 1.0 - rho_a.purity() - rho_b.purity() + rho_c.purity();
        prop_assert!((direct - via_purities).abs() < 1e-12);
        prop_assert!((inversion_overlap(&rho).unwrap() - via_purities).abs() < 1e-12);
    }

    #[test]
    fn tangles_are_local_unitary_invariant(seed in any::<u64>(), d in 3usize..=6) {
        let psi = haar_pure_stream(&shape(&[2, 2, d]), seed, 2);
        let rotated = local_rotation(&psi, seed ^ 0x5555);
        let a = TangleReport::compute(&psi, 0.0, 1e-10).unwrap().tangles();
        let b = TangleReport::compute(&rotated, 0.0, 1e-10).unwrap().tangles();
        for (x, y) in a.iter().zip(b.iter()) {
            prop_assert!((x - y).abs() < 1e-9, "{x} vs {y}");
        }
    }

    #[test]
    fn residual_is_permutation_invariant(seed in any::<u64>(), d in 2usize..=4) {
        let psi = haar_pure_stream(&shape(&[2, 2, d]), seed, 3);
        let base = i_residual_tangle(&psi, 1e-10).unwrap();
        for perm in [[1, 0, 2], [2, 0, 1], [0, 2, 1], [2, 1, 0], [1, 2, 0]] {
            let p = psi.permute_factors(&perm).unwrap();
            prop_assert!((i_residual_tangle(&p, 1e-10).unwrap() - base).abs() < 1e-9);
        }
    }

    #[test]
    fn residual_is_nonnegative_on_qubit_qubit_qudit(seed in any::<u64>(), d in 3usize..=4) {
        let psi = haar_pure_stream(&shape(&[2, 2, d]), seed, 4);
        prop_assert!(i_residual_tangle(&psi, 1e-10).unwrap() > -1e-9);
    }

    #[test]
    fn evolution_preserves_norm_and_excitations(k in 0usize..5, n in 0usize..8, t in 0.0f64..20.0) {
        let n_max = n + 6;
        let atoms = atomic_state(AtomicPreset::ALL[k]);
        let psi = product_state(&atoms, &fock_state(n, n_max).unwrap()).unwrap();
        let prop = Propagator::new(ModelParams::resonant(1.0, n_max).unwrap());
        let out = prop.evolve(&psi, t).unwrap();
        prop_assert!((out.norm() - 1.0).abs() < 1e-12);
        let before = excitation_distribution(&psi);
        let after = excitation_distribution(&out);
        for (x, y) in before.iter().zip(after.iter()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn partial_trace_preserves_trace_and_positivity(seed in any::<u64>()) {
        let psi = haar_pure_stream(&shape(&[2, 3, 4]), seed, 5);
        for keep in [vec![0], vec![1], vec![2], vec![0, 1], vec![0, 2], vec![1, 2]] {
            let rho = partial_trace(&psi, &keep).unwrap();
            prop_assert!((rho.trace() - 1.0).abs() < 1e-12);
            prop_assert!(rho.eigenvalues()[0] > -1e-12);
        }
    }
}

#[test]
fn rank_two_closed_form_matches_roof() {
    let opts = RoofOptions { restarts: 6, ..Default::default() };
    for seed in 0..10 {
        for dims in [vec![2, 2], vec![2, 3], vec![3, 2]] {
            let rho = random_mixed(seed, dims.clone(), 2);
            let closed = rank2_itangle(&rho).unwrap();
            let roof = convex_roof_itangle(&rho, &opts).unwrap().value;
            assert!((closed - roof).abs() < 1e-6, "seed {seed} dims {dims:?}: {closed} vs {roof}");
        }
    }
}

#[test]
fn roof_matches_wootters_on_full_rank_states() {
    let opts = RoofOptions { restarts: 6, ..Default::default() };
    for seed in 0..5 {
        let rho = random_mixed(100 + seed, vec![2, 2], 3);
        let exact = wootters_tangle(&rho).unwrap();
        let roof = convex_roof_itangle(&rho, &opts).unwrap().value;
        assert!((exact - roof).abs() < 1e-6, "seed {seed}: {exact} vs {roof}");
    }
}

#[test]
fn seeded_sweep_is_reproducible() {
    let s = shape(&[2, 2, 4]);
    assert_eq!(positivity_sweep(&s, 300, 21).unwrap(), positivity_sweep(&s, 300, 21).unwrap());
}

#[test]
fn singlet_atoms_stay_frozen() {
    let n_max = 12;
    let psi = product_state(&atomic_state(AtomicPreset::Singlet), &fock_state(6, n_max).unwrap()).unwrap();
    let prop = Propagator::new(ModelParams::resonant(1.0, n_max).unwrap());
    let b0 = bipartite_tangles_all(&psi).unwrap();
    for k in 1..20 {
        let b = bipartite_tangles_all(&prop.evolve(&psi, 0.7 * k as f64).unwrap()).unwrap();
        assert!((b.tau_aa - b0.tau_aa).abs() < 1e-10);
        assert!((b.tau_f_aa - b0.tau_f_aa).abs() < 1e-10);
        assert!((b.tau_a_rest - b0.tau_a_rest).abs() < 1e-10);
        assert!((b.tau_af - b0.tau_af).abs() < 1e-10);
    }
}
