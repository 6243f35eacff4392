//! Closed-form approximation to the field/atom-pair tangle for a strong
//! coherent field, built on the symmetric `J_x` eigenbasis of the atoms.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Atomic amplitudes in the eigenbasis of `J_x = J+ + J-`.
///
/// Basis vectors in the atomic order `(gg, ge, eg, ee)`:
/// `m = +1: (1, 1, 1, 1)/2`, `m = 0: (-1, 0, 0, 1)/sqrt2`,
/// `m = -1: (1, -1, -1, 1)/2`, singlet `(0, -1, 1, 0)/sqrt2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JxCoefficients {
    pub d_minus1: C64,
    pub d_zero: C64,
    pub d_plus1: C64,
    pub singlet_amp: C64,
}

impl JxCoefficients {
    /// `(|d_-1|^2, |d_0|^2, |d_+1|^2)`.
    pub fn weights(&self) -> (f64, f64, f64) {
        (self.d_minus1.norm_sqr(), self.d_zero.norm_sqr(), self.d_plus1.norm_sqr())
    }

    pub fn total_weight(&self) -> f64 {
        let (m, z, p) = self.weights();
        m + z + p + self.singlet_amp.norm_sqr()
    }
}

/// Projects a normalized two-atom vector `(gg, ge, eg, ee)` onto the `J_x`
/// eigenbasis.
pub fn jx_coefficients(atomic: &[C64; 4]) -> JxCoefficients {
    let [gg, ge, eg, ee] = *atomic;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    JxCoefficients {
        d_plus1: (gg + ge + eg + ee) * 0.5,
        d_zero: (ee - gg) * s,
        d_minus1: (gg - ge - eg + ee) * 0.5,
        singlet_amp: (eg - ge) * s,
    }
}

pub fn constant_c(d: &JxCoefficients) -> f64 {
    let (m, z, p) = d.weights();
    4.0 * (m * m + z * z + p * p) + 2.0 * z * p + m * (2.0 * z + 3.0 * p) - 4.0 * m * p
}

pub fn h_of_t(d: &JxCoefficients, t_prime: f64) -> f64 {
    let (m, z, p) = d.weights();
    2.0 * z * (m + p) * (4.0 * t_prime).cos() + m * p * (8.0 * t_prime).cos()
}

/// `g t / (2 sqrt(mean_n - atoms/2 + 1/2))`.
pub fn scaled_time(g: f64, t: f64, mean_n: f64, atoms: usize) -> Result<f64> {
    let radicand = mean_n - atoms as f64 / 2.0 + 0.5;
    if radicand.is_nan() || radicand <= 0.0 {
        return Err(Error::NonPositiveRadicand(radicand));
    }
    Ok(g * t / (2.0 * radicand.sqrt()))
}

/// `2 (1 - (c - h(t')) / 4)` for two atoms. Meaningful for
/// `g t` up to roughly `2 pi sqrt(mean_n)`.
pub fn approx_tau_f_aa(d: &JxCoefficients, g: f64, t: f64, mean_n: f64) -> Result<f64> {
    let tp = scaled_time(g, t, mean_n, 2)?;
    Ok(approx_from_scaled(d, tp))
}

pub fn approx_from_scaled(d: &JxCoefficients, t_prime: f64) -> f64 {
    2.0 * (1.0 - (constant_c(d) - h_of_t(d, t_prime)) / 4.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{atomic_state, AtomicPreset};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn coeffs(p: AtomicPreset) -> JxCoefficients {
        let v = atomic_state(p);
        jx_coefficients(&[v[0], v[1], v[2], v[3]])
    }

    #[test]
    fn basis_is_jx_eigenbasis() {
        // J_x on (gg, ge, eg, ee): couples gg <-> ge, eg and ge, eg <-> ee.
        let jx = |v: [f64; 4]| [v[1] + v[2], v[0] + v[3], v[0] + v[3], v[1] + v[2]];
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for (v, m) in [
            ([0.5, 0.5, 0.5, 0.5], 2.0),
            ([-s, 0.0, 0.0, s], 0.0),
            ([0.5, -0.5, -0.5, 0.5], -2.0),
            ([0.0, -s, s, 0.0], 0.0),
        ] {
            let out = jx(v);
            for i in 0..4 {
                assert!((out[i] - m * v[i]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn preset_coefficients() {
        for p in [AtomicPreset::Ee, AtomicPreset::Gg] {
            let d = coeffs(p);
            assert!((d.d_minus1.norm() - 0.5).abs() < 1e-15);
            assert!((d.d_plus1.norm() - 0.5).abs() < 1e-15);
            assert!((d.d_zero.norm() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        }
        for p in [AtomicPreset::SymPlus, AtomicPreset::CatPlus] {
            let d = coeffs(p);
            assert!((d.d_minus1.norm_sqr() - 0.5).abs() < 1e-15);
            assert!((d.d_plus1.norm_sqr() - 0.5).abs() < 1e-15);
            assert!(d.d_zero.norm() < 1e-15);
        }
        let d = coeffs(AtomicPreset::Singlet);
        assert!((d.singlet_amp.norm() - 1.0).abs() < 1e-15);
        assert!(d.d_minus1.norm() + d.d_zero.norm() + d.d_plus1.norm() < 1e-15);
        for p in AtomicPreset::ALL {
            assert!((coeffs(p).total_weight() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_and_oscillation() {
        let st = coeffs(AtomicPreset::Ee);
        let sy = coeffs(AtomicPreset::SymPlus);
        assert!((constant_c(&st) - 31.0 / 16.0).abs() < 1e-14);
        assert!((constant_c(&sy) - 7.0 / 4.0).abs() < 1e-14);
        let zero = JxCoefficients {
            d_minus1: C64::new(0.0, 0.0),
            d_zero: C64::new(1.0, 0.0),
            d_plus1: C64::new(0.0, 0.0),
            singlet_amp: C64::new(0.0, 0.0),
        };
        assert!((constant_c(&zero) - 4.0).abs() < 1e-15);
        assert!((h_of_t(&st, 0.0) - 9.0 / 16.0).abs() < 1e-15);
        assert!((h_of_t(&sy, 0.0) - 0.25).abs() < 1e-15);
        for tp in [0.0, 0.3, 1.1] {
            assert!((h_of_t(&st, tp) - h_of_t(&st, tp + FRAC_PI_2)).abs() < 1e-12);
        }
    }

    #[test]
    fn scaled_time_examples() {
        assert_eq!(scaled_time(1.0, 0.0, 100.0, 2).unwrap(), 0.0);
        let tp = scaled_time(1.0, 2.0, 100.0, 2).unwrap();
        assert!((tp - 1.0 / 99.5f64.sqrt()).abs() < 1e-15);
        assert!(matches!(scaled_time(1.0, 1.0, 0.4, 2), Err(Error::NonPositiveRadicand(_))));
    }

    #[test]
    fn approximate_tangle_values() {
        let st = coeffs(AtomicPreset::Ee);
        let sy = coeffs(AtomicPreset::SymPlus);
        assert!((approx_tau_f_aa(&st, 1.0, 0.0, 100.0).unwrap() - 21.0 / 16.0).abs() < 1e-14);
        assert!((approx_tau_f_aa(&sy, 1.0, 0.0, 100.0).unwrap() - 1.25).abs() < 1e-14);
        // Time average over one period of h.
        let n = 4000;
        let avg: f64 =
            (0..n).map(|k| approx_from_scaled(&st, FRAC_PI_2 * k as f64 / n as f64)).sum::<f64>() / n as f64;
        assert!((avg - 33.0 / 32.0).abs() < 1e-12);
    }

    #[test]
    fn phase_blind() {
        for (a, b) in [(AtomicPreset::Ee, AtomicPreset::Gg), (AtomicPreset::SymPlus, AtomicPreset::CatPlus)] {
            let (da, db) = (coeffs(a), coeffs(b));
            for k in 0..50 {
                let t = 0.37 * k as f64;
                assert_eq!(approx_tau_f_aa(&da, 1.0, t, 100.0), approx_tau_f_aa(&db, 1.0, t, 100.0));
            }
        }
    }

    #[test]
    fn frequencies_are_four_and_eight() {
        let st = coeffs(AtomicPreset::Ee);
        let base = approx_from_scaled(&st, 0.2);
        assert!((approx_from_scaled(&st, 0.2 + PI / 2.0) - base).abs() < 1e-12);
        assert!((approx_from_scaled(&st, 0.2 + PI / 4.0) - base).abs() > 1e-3);
    }
}
