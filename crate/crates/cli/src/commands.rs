use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::{num, to_json, write_file, Csv, VERSION};
use nalgebra::DVector;
use ness_core::dispersion::omega;
use ness_core::lattice::{central_probe, ErgodicAverager, LatticeWindow};
use ness_core::level_shift::{
    assemble_gamma, delta_beta_exponent, dominant_term, gamma0_quadratic_form, gap_scan, gibbs_overlap,
    kernel_report, lambda1_active_term, lambda1_scaling, lambda1_terms, KernelReport, Limit,
};
use ness_core::quasifree::{momentum_asymmetry, ness_covariance, rho_of_k};
use ness_core::small_system::{delta0, gibbs_vector, liouville_spectrum};
use ness_core::validator::{validate, ValidationReport};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use std::path::Path;

/// What a command leaves behind besides its files.
pub struct Completion {
    pub exit_code: i32,
    pub summary: String,
}

fn done(summary: String) -> Completion {
    Completion { exit_code: 0, summary }
}

pub fn validate_cmd(cfg: &ExperimentConfig, hash: &str, out: &Path) -> Result<Completion, CliError> {
    #[derive(Serialize)]
    struct ValidationFile<'a> {
        version: &'a str,
        config_sha256: &'a str,
        report: ValidationReport,
    }
    let inst = cfg.instance()?;
    let report = validate(&inst)?;
    let passed = report.all_passed;
    let min_delta0 = report.coupling.min_delta0;
    write_file(out, "validation.json", &to_json(&ValidationFile { version: VERSION, config_sha256: hash, report })?)?;
    let delta = min_delta0.map_or("n/a".to_string(), |d| format!("{d}"));
    Ok(Completion {
        exit_code: if passed { 0 } else { 1 },
        summary: format!("assumptions {}; min δ₀ = {delta}", if passed { "satisfied" } else { "violated" }),
    })
}

pub fn ness_cmd(cfg: &ExperimentConfig, hash: &str, out: &Path) -> Result<Completion, CliError> {
    let inst = cfg.instance()?;
    let (temps, params) = (inst.temps, inst.params);
    let n = cfg.ness.k_points;
    let asym = momentum_asymmetry(&temps, &params, n);
    let mut rho = Csv::new(
        "ness",
        hash,
        &["k: rad", "omega: energy (hopping = 1)", "rho, one_minus_rho: occupation (dimensionless)"],
        &[format!("max |rho(k) - rho(-k)| on grid: {}", num(asym))],
        &["k", "omega", "rho", "one_minus_rho", "asymmetry"],
    );
    for i in 0..n {
        // integer numerator keeps the grid exactly symmetric under k → −k
        let k = PI * (2 * i as i64 + 1 - n as i64) as f64 / n as f64;
        let r = rho_of_k(k, &temps, &params);
        let mirror = rho_of_k(-k, &temps, &params);
        rho.row(&[num(k), num(omega(k, &params)), num(r), num(1.0 - r), num(r - mirror)]);
    }
    write_file(out, "ness_rho.csv", &rho.into_string())?;

    let probe = central_probe(cfg.ness.probe_radius);
    let c = ness_covariance(&probe, &temps, &params)?;
    let mut cov = Csv::new(
        "ness",
        hash,
        &["m, n: lattice site", "re, im: two-point function <a*(m) a(n)> (dimensionless)"],
        &[],
        &["m", "n", "re", "im"],
    );
    for (i, &m) in probe.iter().enumerate() {
        for (j, &nn) in probe.iter().enumerate() {
            let z = c.matrix[(i, j)];
            cov.row(&[m.to_string(), nn.to_string(), num(z.re), num(z.im)]);
        }
    }
    write_file(out, "ness_covariance.csv", &cov.into_string())?;
    Ok(done(format!("{n} momenta, {} probe sites; max asymmetry {}", probe.len(), num(asym))))
}

pub fn dynamics_cmd(cfg: &ExperimentConfig, hash: &str, out: &Path) -> Result<Completion, CliError> {
    let inst = cfg.instance()?;
    let opts = &cfg.dynamics;
    let window = LatticeWindow::new(opts.half_width)?;
    let probe = central_probe(opts.probe_radius);
    let averager = ErgodicAverager::new(window, &inst.temps, &inst.params);
    let ness = ness_covariance(&probe, &inst.temps, &inst.params)?;
    let drift = averager.particle_number_drift();
    let rows: Vec<_> = opts
        .horizons
        .par_iter()
        .map(|&horizon| {
            let samples = ((opts.samples_per_unit_time * horizon).ceil() as usize).max(2);
            averager.mean(horizon, samples, &probe).map(|m| {
                let dev = (&m.covariance.matrix - &ness.matrix).camax();
                (horizon, samples, dev, m.horizon_warning)
            })
        })
        .collect::<Result<_, _>>()?;
    let mut csv = Csv::new(
        "dynamics",
        hash,
        &["T: time (inverse hopping)", "max_deviation, trace_drift: dimensionless"],
        &[format!("lattice sites: {}; probe sites: {}", window.len(), probe.len())],
        &["T", "samples", "max_deviation", "trace_drift", "horizon_warning"],
    );
    for &(horizon, samples, dev, warn) in &rows {
        csv.row(&[num(horizon), samples.to_string(), num(dev), num(drift), warn.to_string()]);
    }
    write_file(out, "dynamics.csv", &csv.into_string())?;
    let last = rows.last().map_or("n/a".to_string(), |r| num(r.2));
    Ok(done(format!("{} horizons; deviation at the last horizon {last}", rows.len())))
}

#[derive(Serialize)]
struct LevelShiftBlock {
    e: f64,
    basis: Vec<(usize, usize)>,
    /// Rows of `[re, im]`.
    matrix: Vec<Vec<[f64; 2]>>,
    kernel: KernelReport,
    delta0: Option<f64>,
    gibbs_overlap: Option<f64>,
}

#[derive(Serialize)]
struct OracleCheck {
    vectors: usize,
    seed: u64,
    max_abs_difference: f64,
}

#[derive(Serialize)]
struct LevelShiftFile<'a> {
    version: &'a str,
    config_sha256: &'a str,
    beta_plus: f64,
    beta_minus: f64,
    blocks: Vec<LevelShiftBlock>,
    gamma0_oracle: OracleCheck,
}

pub fn levelshift_cmd(cfg: &ExperimentConfig, hash: &str, out: &Path) -> Result<Completion, CliError> {
    let inst = cfg.instance()?;
    let opts = &cfg.levelshift;
    let values = liouville_spectrum(&inst.sys)?.values();
    let gibbs = if inst.temps.is_equilibrium() { Some(gibbs_vector(&inst.sys, inst.temps.beta_plus())?) } else { None };
    let blocks: Vec<LevelShiftBlock> = values
        .par_iter()
        .map(|&e| -> Result<LevelShiftBlock, CliError> {
            let g = assemble_gamma(e, &inst.sys, &inst.form_factor, &inst.temps, &inst.params)?;
            let kernel = kernel_report(&g, opts.kernel_tol);
            let overlap = match (&gibbs, e == 0.0) {
                (Some(c), true) => Some(gibbs_overlap(&kernel, &g.basis, c)),
                _ => None,
            };
            let d0 = if e == 0.0 { None } else { Some(delta0(&inst.sys, e)?) };
            let matrix = (0..g.dim()).map(|i| (0..g.dim()).map(|j| [g.matrix[(i, j)].re, g.matrix[(i, j)].im]).collect()).collect();
            Ok(LevelShiftBlock { e: g.e, basis: g.basis, matrix, kernel, delta0: d0, gibbs_overlap: overlap })
        })
        .collect::<Result<_, _>>()?;

    let g0 = assemble_gamma(0.0, &inst.sys, &inst.form_factor, &inst.temps, &inst.params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut worst: f64 = 0.0;
    for _ in 0..opts.random_vectors {
        let c = DVector::from_fn(inst.sys.dim(), |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let direct = gamma0_quadratic_form(&c, &inst.sys, &inst.form_factor, &inst.temps, &inst.params)?;
        worst = worst.max((g0.quadratic_form(&c) - direct).abs());
    }
    let kernel_dims: Vec<String> = blocks.iter().map(|b| format!("{}:{}", b.e, b.kernel.kernel_dim())).collect();
    let file = LevelShiftFile {
        version: VERSION,
        config_sha256: hash,
        beta_plus: inst.temps.beta_plus(),
        beta_minus: inst.temps.beta_minus(),
        blocks,
        gamma0_oracle: OracleCheck { vectors: opts.random_vectors, seed: opts.seed, max_abs_difference: worst },
    };
    write_file(out, "levelshift.json", &to_json(&file)?)?;
    Ok(done(format!("kernel dimensions (e:dim) {}; oracle difference {}", kernel_dims.join(" "), num(worst))))
}

pub fn gapscan_cmd(cfg: &ExperimentConfig, hash: &str, out: &Path) -> Result<Completion, CliError> {
    let inst = cfg.instance()?;
    let opts = &cfg.gapscan;
    let scan = gap_scan(&inst.sys, &inst.form_factor, &inst.params, opts.beta_center, &opts.deltas)?;
    let slope = scan.slope.map_or("n/a".to_string(), num);
    let mut gaps = Csv::new(
        "gapscan",
        hash,
        &["delta_beta: inverse energy", "gamma0: energy (hopping = 1)"],
        &[format!("beta_center: {}", num(opts.beta_center)), format!("fitted log-log slope: {slope}")],
        &["delta_beta", "gamma0"],
    );
    for r in &scan.rows {
        gaps.row(&[num(r.delta_beta), num(r.gamma0)]);
    }
    write_file(out, "gapscan.csv", &gaps.into_string())?;

    let terms = lambda1_terms();
    let (_, v_exp) = dominant_term(Limit::SmallV);
    let mut lam = Csv::new(
        "gapscan",
        hash,
        &["v, gamma_e, lambda1: dimensionless (lambda1 up to the constant C)"],
        &[
            format!("lambda1_constant: {}", num(opts.lambda_constant)),
            format!("small-v exponent (exact): {v_exp}"),
            format!("small-delta-beta exponent with gamma_e = delta_beta^2 (exact): {}", delta_beta_exponent()),
        ],
        &["regime", "x", "v", "gamma_e", "lambda1", "active_term", "v_exponent", "gamma_exponent"],
    );
    let mut row = |regime: &str, x: f64, v: f64, gap: f64| -> Result<(), CliError> {
        let i = lambda1_active_term(v, gap)?;
        let value = lambda1_scaling(v, gap, opts.lambda_constant)?;
        lam.row(&[
            regime.to_string(),
            num(x),
            num(v),
            num(gap),
            num(value),
            i.to_string(),
            terms[i].v_exponent.to_string(),
            terms[i].gamma_exponent.to_string(),
        ]);
        Ok(())
    };
    for &v in &opts.v_values {
        row("small_v", v, v, opts.fixed_gap)?;
    }
    for &db in opts.deltas.iter().filter(|d| **d > 0.0) {
        row("small_delta_beta", db, inst.v, db * db)?;
    }
    write_file(out, "lambda1.csv", &lam.into_string())?;
    Ok(done(format!("{} Δβ rows; slope {slope}", scan.rows.len())))
}
