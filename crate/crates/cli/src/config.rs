//! Scenario configuration: flat `key = value` text.
//!
//! Recognized keys (blank lines and `#` comments are ignored):
//!
//! | key              | value                                                        | default   |
//! |------------------|--------------------------------------------------------------|-----------|
//! | `atomic`         | `ee`, `gg`, `sym_plus`, `cat_plus`, `singlet`, or eight comma-separated reals `gg_re,gg_im,ge_re,ge_im,eg_re,eg_im,ee_re,ee_im` | `ee` |
//! | `field`          | `fock:N` or `coherent:MEAN`                                  | `fock:10` |
//! | `g`              | coupling rate                                                | `1`       |
//! | `omega`          | atomic and field frequency                                   | `0`       |
//! | `t_max`          | final value of `g t`                                         | `5`       |
//! | `steps`          | number of time points, including both ends                   | `2000`    |
//! | `tail_tol`       | discarded coherent-state probability                         | `1e-12`   |
//! | `rank_tol`       | eigenvalue cutoff for effective dimensions                   | `1e-10`   |
//! | `pad`            | extra Fock levels above the field support                    | `5`       |
//! | `approx_compare` | `true` to add the approximate field tangle                   | `false`   |
//! | `out`            | output path; standard output when absent                     |           |

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use tcm_core::dynamics::{atomic_state, AtomicPreset};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq)]
pub enum AtomicSpec {
    Preset(AtomicPreset),
    /// Amplitudes in the order `(gg, ge, eg, ee)`.
    Amplitudes([C64; 4]),
}

impl AtomicSpec {
    pub fn amplitudes(&self) -> [C64; 4] {
        match self {
            AtomicSpec::Preset(p) => {
                let v = atomic_state(*p);
                [v[0], v[1], v[2], v[3]]
            }
            AtomicSpec::Amplitudes(a) => *a,
        }
    }
}

impl FromStr for AtomicSpec {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        let s = s.trim();
        if !s.contains(',') {
            return s.parse::<AtomicPreset>().map(AtomicSpec::Preset).map_err(|e| CliError::Config(e.to_string()));
        }
        let nums = s
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|e| CliError::Config(format!("atomic amplitude {t:?}: {e}"))))
            .collect::<CliResult<Vec<_>>>()?;
        if nums.len() != 8 {
            return Err(CliError::Config(format!("atomic amplitudes need 8 reals, got {}", nums.len())));
        }
        let mut a = [C64::new(0.0, 0.0); 4];
        for (k, slot) in a.iter_mut().enumerate() {
            *slot = C64::new(nums[2 * k], nums[2 * k + 1]);
        }
        Ok(AtomicSpec::Amplitudes(a))
    }
}

impl fmt::Display for AtomicSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AtomicSpec::Preset(p) => write!(f, "{p}"),
            AtomicSpec::Amplitudes(a) => {
                let parts: Vec<String> = a.iter().flat_map(|z| [z.re.to_string(), z.im.to_string()]).collect();
                write!(f, "{}", parts.join(","))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FieldSpec {
    Fock(usize),
    Coherent(f64),
}

impl FromStr for FieldSpec {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        let (kind, value) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| CliError::Config(format!("field must be fock:N or coherent:MEAN, got {s:?}")))?;
        match kind.trim() {
            "fock" => value
                .trim()
                .parse()
                .map(FieldSpec::Fock)
                .map_err(|e| CliError::Config(format!("fock photon number {value:?}: {e}"))),
            "coherent" => {
                let mean: f64 =
                    value.trim().parse().map_err(|e| CliError::Config(format!("coherent mean {value:?}: {e}")))?;
                if !(mean >= 0.0 && mean.is_finite()) {
                    return Err(CliError::Config(format!("coherent mean must be finite and >= 0, got {mean}")));
                }
                Ok(FieldSpec::Coherent(mean))
            }
            other => Err(CliError::Config(format!("unknown field kind {other:?}"))),
        }
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldSpec::Fock(n) => write!(f, "fock:{n}"),
            FieldSpec::Coherent(m) => write!(f, "coherent:{m}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub atomic: AtomicSpec,
    pub field: FieldSpec,
    pub g: f64,
    pub omega: f64,
    pub t_max: f64,
    pub steps: usize,
    pub tail_tol: f64,
    pub rank_tol: f64,
    pub pad: usize,
    pub approx_compare: bool,
    pub out: Option<PathBuf>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            atomic: AtomicSpec::Preset(AtomicPreset::Ee),
            field: FieldSpec::Fock(10),
            g: 1.0,
            omega: 0.0,
            t_max: 5.0,
            steps: 2000,
            tail_tol: 1e-12,
            rank_tol: 1e-10,
            pad: 5,
            approx_compare: false,
            out: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
}

impl FromStr for Preset {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s.trim() {
            "fig1" => Ok(Preset::Fig1),
            "fig2" => Ok(Preset::Fig2),
            "fig3" => Ok(Preset::Fig3),
            "fig4" => Ok(Preset::Fig4),
            other => Err(CliError::Config(format!("unknown preset {other:?}"))),
        }
    }
}

impl ScenarioConfig {
    /// Built-in scenarios. Time ranges are chosen to contain the Rabi
    /// oscillations (fig1), the first revival (fig2, fig3) and the full
    /// approximation window plus the revival (fig4).
    pub fn preset(p: Preset) -> Self {
        let base = Self::default();
        match p {
            Preset::Fig1 => base,
            Preset::Fig2 => Self { field: FieldSpec::Coherent(100.0), t_max: 80.0, steps: 4000, ..base },
            Preset::Fig3 => Self {
                atomic: AtomicSpec::Preset(AtomicPreset::SymPlus),
                field: FieldSpec::Coherent(100.0),
                t_max: 80.0,
                steps: 4000,
                ..base
            },
            Preset::Fig4 => Self {
                field: FieldSpec::Coherent(500.0),
                t_max: 145.0,
                steps: 6000,
                approx_compare: true,
                ..base
            },
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.steps < 2 {
            return Err(CliError::Config(format!("steps must be at least 2, got {}", self.steps)));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(CliError::Config(format!("t_max must be positive, got {}", self.t_max)));
        }
        if !(self.g > 0.0 && self.g.is_finite()) {
            return Err(CliError::Config(format!("g must be positive, got {}", self.g)));
        }
        if !(self.tail_tol > 0.0 && self.tail_tol < 1.0) {
            return Err(CliError::Config(format!("tail_tol must lie in (0, 1), got {}", self.tail_tol)));
        }
        if self.rank_tol.is_nan() || self.rank_tol <= 0.0 {
            return Err(CliError::Config(format!("rank_tol must be positive, got {}", self.rank_tol)));
        }
        if self.pad < 3 {
            return Err(CliError::Config(format!("pad must be at least 3, got {}", self.pad)));
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`.
    pub fn apply_text(mut self, text: &str) -> CliResult<Self> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", lineno + 1)))?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(self)
    }

    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        fn num<T: FromStr>(key: &str, value: &str) -> CliResult<T>
        where
            T::Err: fmt::Display,
        {
            value.parse().map_err(|e| CliError::Config(format!("{key} = {value:?}: {e}")))
        }
        match key {
            "atomic" => self.atomic = value.parse()?,
            "field" => self.field = value.parse()?,
            "g" => self.g = num(key, value)?,
            "omega" => self.omega = num(key, value)?,
            "t_max" => self.t_max = num(key, value)?,
            "steps" => self.steps = num(key, value)?,
            "tail_tol" => self.tail_tol = num(key, value)?,
            "rank_tol" => self.rank_tol = num(key, value)?,
            "pad" => self.pad = num(key, value)?,
            "approx_compare" => self.approx_compare = num(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            other => return Err(CliError::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// The configuration as `key = value` lines, parseable by [`apply_text`](Self::apply_text).
    pub fn to_text(&self) -> String {
        let mut lines = vec![
            format!("atomic = {}", self.atomic),
            format!("field = {}", self.field),
            format!("g = {}", self.g),
            format!("omega = {}", self.omega),
            format!("t_max = {}", self.t_max),
            format!("steps = {}", self.steps),
            format!("tail_tol = {:e}", self.tail_tol),
            format!("rank_tol = {:e}", self.rank_tol),
            format!("pad = {}", self.pad),
            format!("approx_compare = {}", self.approx_compare),
        ];
        if let Some(out) = &self.out {
            lines.push(format!("out = {}", out.display()));
        }
        lines.join("\n")
    }

    /// Dimensionless time `g t` of grid point `k`.
    pub fn gt(&self, k: usize) -> f64 {
        self.t_max * k as f64 / (self.steps - 1) as f64
    }
}
