//! Experiment configuration: one JSON file, unknown keys rejected.

use crate::error::CliError;
use nalgebra::DMatrix;
use ness_core::dispersion::DispersionParams;
use ness_core::quasifree::{FormFactor, TemperaturePair};
use ness_core::small_system::SmallSystem;
use ness_core::validator::{build_reference_instance, ModelInstance};
use num_complex::Complex64;
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub beta_plus: f64,
    pub beta_minus: f64,
    #[serde(default)]
    pub ness: NessOptions,
    #[serde(default)]
    pub dynamics: DynamicsOptions,
    #[serde(default)]
    pub levelshift: LevelShiftOptions,
    #[serde(default)]
    pub gapscan: GapScanOptions,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum ModelSpec {
    /// Two-level reference model `H_S = bσ_z`, `Y = σ_x`, `γ = 0`.
    Reference { v: f64, b: f64 },
    Explicit(ExplicitModel),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitModel {
    pub gamma: f64,
    pub v: f64,
    pub energies: Vec<f64>,
    /// Rows of `[re, im]` entries.
    pub coupling: Vec<Vec<[f64; 2]>>,
    pub form_factor: FormFactorSpec,
    pub a_bound: f64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
}

fn default_lambda() -> f64 {
    0.01
}

/// Form factor in the coordinate `t = tan(k/2)`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum FormFactorSpec {
    Plateau { pieces: Vec<PlateauPiece> },
    Bump { intervals: Vec<[f64; 2]> },
    Indicator { intervals: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlateauPiece {
    pub support: [f64; 2],
    pub flat: [f64; 2],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NessOptions {
    pub k_points: usize,
    pub probe_radius: usize,
}

impl Default for NessOptions {
    fn default() -> Self {
        NessOptions { k_points: 256, probe_radius: 5 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynamicsOptions {
    pub half_width: usize,
    pub horizons: Vec<f64>,
    pub samples_per_unit_time: f64,
    pub probe_radius: usize,
}

impl Default for DynamicsOptions {
    fn default() -> Self {
        DynamicsOptions { half_width: 1000, horizons: vec![50.0, 100.0, 200.0], samples_per_unit_time: 4.0, probe_radius: 5 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LevelShiftOptions {
    pub kernel_tol: f64,
    pub random_vectors: usize,
    pub seed: u64,
}

impl Default for LevelShiftOptions {
    fn default() -> Self {
        LevelShiftOptions { kernel_tol: 1e-8, random_vectors: 100, seed: 1 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GapScanOptions {
    pub beta_center: f64,
    pub deltas: Vec<f64>,
    /// `v` values for the small-`v` column, with the gap held at `fixed_gap`.
    pub v_values: Vec<f64>,
    pub fixed_gap: f64,
    pub lambda_constant: f64,
}

impl Default for GapScanOptions {
    fn default() -> Self {
        GapScanOptions {
            beta_center: 1.0,
            deltas: vec![0.001, 0.002, 0.005, 0.01, 0.02, 0.05],
            v_values: vec![0.5, 0.2, 0.1, 0.05, 0.01, 0.001],
            fixed_gap: 0.5,
            lambda_constant: 1.0,
        }
    }
}

fn usage(msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(msg.to_string())
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| usage(format!("config: {e}")))?;
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), CliError> {
        self.temperatures()?;
        self.instance()?;
        if self.ness.k_points < 2 {
            return Err(usage("ness.k_points must be at least 2"));
        }
        let d = &self.dynamics;
        if d.half_width < 1 || d.probe_radius > d.half_width {
            return Err(usage("dynamics.probe_radius must not exceed dynamics.half_width (≥ 1)"));
        }
        if d.horizons.iter().any(|t| !(*t > 0.0) || !t.is_finite()) || !(d.samples_per_unit_time > 0.0) {
            return Err(usage("dynamics horizons and sampling rate must be positive"));
        }
        if !(self.levelshift.kernel_tol > 0.0) {
            return Err(usage("levelshift.kernel_tol must be positive"));
        }
        let g = &self.gapscan;
        if !(g.beta_center > 0.0) || g.deltas.iter().any(|x| !(*x >= 0.0) || *x >= 2.0 * g.beta_center) {
            return Err(usage("gapscan needs beta_center > 0 and 0 ≤ Δβ < 2·beta_center"));
        }
        if g.v_values.iter().any(|v| !(*v > 0.0 && *v <= 1.0)) || !(g.fixed_gap > 0.0) || !(g.lambda_constant > 0.0) {
            return Err(usage("gapscan v_values must lie in (0, 1]; fixed_gap and lambda_constant must be positive"));
        }
        Ok(())
    }

    pub fn temperatures(&self) -> Result<TemperaturePair, CliError> {
        TemperaturePair::new(self.beta_plus, self.beta_minus).map_err(usage)
    }

    pub fn instance(&self) -> Result<ModelInstance, CliError> {
        let temps = self.temperatures()?;
        match &self.model {
            ModelSpec::Reference { v, b } => build_reference_instance(*v, *b, temps).map_err(usage),
            ModelSpec::Explicit(m) => {
                let d = m.energies.len();
                if m.coupling.len() != d || m.coupling.iter().any(|r| r.len() != d) {
                    return Err(usage(format!("coupling must be {d}×{d}")));
                }
                let y = DMatrix::from_fn(d, d, |i, j| Complex64::new(m.coupling[i][j][0], m.coupling[i][j][1]));
                let sys = SmallSystem::new(m.energies.clone(), y).map_err(usage)?;
                let f = match &m.form_factor {
                    FormFactorSpec::Plateau { pieces } => FormFactor::plateau(
                        &pieces.iter().map(|p| ((p.support[0], p.support[1]), (p.flat[0], p.flat[1]))).collect::<Vec<_>>(),
                    ),
                    FormFactorSpec::Bump { intervals } => {
                        FormFactor::bump(&intervals.iter().map(|i| (i[0], i[1])).collect::<Vec<_>>())
                    }
                    FormFactorSpec::Indicator { intervals } => {
                        FormFactor::indicator(&intervals.iter().map(|i| (i[0], i[1])).collect::<Vec<_>>())
                    }
                }
                .map_err(usage)?;
                let params = DispersionParams::new(m.gamma).map_err(usage)?;
                ModelInstance::new(params, sys, f, temps, m.v, m.a_bound, m.lambda).map_err(usage)
            }
        }
    }
}
