//! Experiment modes and the per-run artifact directory.

use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Map, Value};

use nlslab_core::imethod::{almost_conservation_sweep, modified_energy, rescaled_energy_check, IMultiplier};
use nlslab_core::initial::{free_gaussian, gaussian, localized_random, plane_wave, two_bump, GaussianSpec};
use nlslab_core::integrator::EnergyDiagnostic;
use nlslab_core::morawetz::{
    identity_check, interaction_inequality_report, monotonicity_report, morawetz_action, MorawetzDiagnostic,
};
use nlslab_core::numeric::cumulative_trapezoid;
use nlslab_core::record::{columns, Diagnostic, FnDiagnostic};
use nlslab_core::scattering::{
    asymptotic_state_probe, running_time_norm, spacetime_l4_accumulator, time_norm, NormDiagnostic,
    StrichartzDiagnostic,
};
use nlslab_core::{evolve, Field, Grid, NlsParams, Trajectory};

use crate::config::{ExperimentConfig, InitialData, OutputFormat};
use crate::error::{CliError, Result};
use crate::output::{write_json, write_records, write_snapshot, Check};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Run,
    VerifyIdentities,
    SweepN,
    ScatteringProbe,
    LinearSelftest,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Run => "run",
            Mode::VerifyIdentities => "verify-identities",
            Mode::SweepN => "sweep-n",
            Mode::ScatteringProbe => "scattering-probe",
            Mode::LinearSelftest => "linear-selftest",
        }
    }
}

/// What a finished experiment left on disk, and how it went.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub dir: PathBuf,
    pub summary: Value,
    pub checks: Vec<Check>,
    pub aborted: bool,
}

impl RunReport {
    /// 0 on success, 2 when a check failed, 1 when the evolution aborted.
    pub fn exit_code(&self) -> i32 {
        if self.aborted {
            1
        } else if self.checks.iter().any(|c| !c.pass) {
            2
        } else {
            0
        }
    }
}

struct ModeOutput {
    traj: Option<Trajectory>,
    report: Map<String, Value>,
    checks: Vec<Check>,
}

/// Runs `mode`, writing artifacts into `<out_root>/<mode>-<hash prefix>/`.
pub fn run_experiment(cfg: &ExperimentConfig, mode: Mode, out_root: &Path) -> Result<RunReport> {
    let hash = cfg.hash();
    let dir = out_root.join(format!("{}-{}", mode.name(), &hash[..12]));
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let started = Instant::now();

    let initial = build_initial(cfg)?;
    let mut out = match mode {
        Mode::Run => run_mode(cfg, &initial)?,
        Mode::VerifyIdentities => identities_mode(cfg, &initial)?,
        Mode::SweepN => sweep_mode(cfg, &initial)?,
        Mode::ScatteringProbe => scattering_mode(cfg, &initial)?,
        Mode::LinearSelftest => selftest_mode(cfg, &initial)?,
    };
    let wall_clock = started.elapsed().as_secs_f64();

    let mut summary = Map::new();
    summary.insert("mode".into(), json!(mode.name()));
    summary.insert("config_hash".into(), json!(hash));
    let mut aborted = false;
    if let Some(traj) = out.traj.as_mut() {
        traj.config_hash = Some(hash.clone());
        summary.insert("validity_horizon".into(), json!(traj.validity_horizon()));
        summary.insert("records".into(), json!(traj.records.len()));
        summary.insert("valid_records".into(), json!(traj.valid_prefix_len()));
        summary.insert("final".into(), final_values(traj));
        summary.insert("truncation".into(), json!(traj.truncation));
        aborted = traj.is_truncated();
    } else {
        summary.insert("validity_horizon".into(), Value::Null);
    }
    summary.insert("wall_clock_seconds".into(), json!(wall_clock));
    summary.insert("report".into(), Value::Object(out.report));
    summary.insert("checks".into(), json!(out.checks));
    let summary = Value::Object(summary);

    if let Some(traj) = &out.traj {
        if cfg.output.wants(OutputFormat::Csv) {
            write_records(&dir.join("records.csv"), traj)?;
        }
        if cfg.output.wants(OutputFormat::Snapshots) {
            let snap_dir = dir.join("snapshots");
            std::fs::create_dir_all(&snap_dir).map_err(|e| CliError::io(&snap_dir, e))?;
            for (i, s) in traj.snapshots.iter().enumerate() {
                write_snapshot(&snap_dir.join(format!("snap_{i:05}.bin")), s, cfg.output.snapshot_precision)?;
            }
        }
    }
    if cfg.output.wants(OutputFormat::Json) {
        write_json(&dir.join("summary.json"), &summary)?;
    }

    Ok(RunReport {
        dir,
        summary,
        checks: out.checks,
        aborted,
    })
}

/// Samples the configured initial data on the configured grid.
pub fn build_initial(cfg: &ExperimentConfig) -> Result<Field> {
    let grid = Grid::new(cfg.grid_spec())?;
    let field = match &cfg.initial_data {
        InitialData::Gaussian { .. } | InitialData::ChirpedGaussian { .. } => {
            let (spec, images) = gaussian_spec(&cfg.initial_data).expect("gaussian kinds");
            gaussian(&grid, &spec, images)
        }
        InitialData::TwoBump {
            amplitude,
            width,
            separation,
            chirp,
            images,
        } => two_bump(&grid, &GaussianSpec::new(*amplitude, *width).with_chirp(*chirp), *separation, *images),
        InitialData::PlaneWave {
            amplitude,
            phase,
            modes,
        } => plane_wave(&grid, Complex64::from_polar(*amplitude, *phase), *modes),
        InitialData::RandomBandLimited {
            kmax,
            envelope_width,
            amplitude,
            seed,
        } => {
            let base = localized_random(&grid, *kmax, *envelope_width, *seed);
            let values = base.values().iter().map(|v| v * *amplitude).collect();
            Field::new(grid, values, 0.0)?
        }
        InitialData::File { path } => {
            let f = crate::output::read_snapshot(path)?;
            if f.grid() != &grid {
                return Err(CliError::invalid(
                    "initial_data.path",
                    format!("snapshot grid {:?} differs from the configured grid", f.grid().spec()),
                ));
            }
            f
        }
    };
    Ok(field)
}

fn gaussian_spec(data: &InitialData) -> Option<(GaussianSpec, i32)> {
    match *data {
        InitialData::Gaussian {
            amplitude,
            width,
            center,
            wavevector,
            images,
        } => Some((
            GaussianSpec {
                amplitude,
                width,
                center,
                chirp: 0.0,
                wavevector,
            },
            images,
        )),
        InitialData::ChirpedGaussian {
            amplitude,
            width,
            chirp,
            center,
            wavevector,
            images,
        } => Some((
            GaussianSpec {
                amplitude,
                width,
                center,
                chirp,
                wavevector,
            },
            images,
        )),
        _ => None,
    }
}

fn final_values(traj: &Trajectory) -> Value {
    let k = traj.valid_prefix_len();
    let mut m = Map::new();
    if k > 0 {
        let r = &traj.records[k - 1];
        m.insert("t".into(), json!(r.t));
        for (name, v) in traj.columns.iter().zip(&r.values) {
            m.insert(name.clone(), json!(v));
        }
    }
    Value::Object(m)
}

/// `sup |c(t) − c(0)| / |c(0)|` over the valid prefix (absolute when `c(0) = 0`).
fn relative_drift(traj: &Trajectory, column: &str) -> Result<f64> {
    let col = traj.column(column)?;
    let k = traj.valid_prefix_len();
    if k == 0 {
        return Ok(0.0);
    }
    let c0 = col[0];
    let sup = col[..k].iter().map(|v| (v - c0).abs()).fold(0.0, f64::max);
    Ok(if c0 == 0.0 { sup } else { sup / c0.abs() })
}

fn mass_check(cfg: &ExperimentConfig, traj: &Trajectory) -> Result<Check> {
    Ok(Check::at_most(
        "mass_drift",
        relative_drift(traj, columns::MASS)?,
        cfg.checks.mass_drift,
    ))
}

/// Centre-wise Morawetz actions, plus the interaction potential when enabled.
fn morawetz_diagnostic(cfg: &ExperimentConfig, grid: &Grid) -> Result<Option<Box<dyn Diagnostic>>> {
    if cfg.grid.dim != 3 {
        return Ok(None);
    }
    let centers = cfg.diagnostics.centers.clone();
    if cfg.diagnostics.interaction {
        return Ok(Some(Box::new(MorawetzDiagnostic::new(grid, centers)?)));
    }
    struct Actions(Vec<[f64; 3]>);
    impl Diagnostic for Actions {
        fn columns(&self) -> Vec<String> {
            (0..self.0.len()).map(columns::morawetz_action).collect()
        }
        fn evaluate(&self, field: &Field) -> Vec<f64> {
            self.0
                .iter()
                .map(|&y| morawetz_action(field, y).unwrap_or(f64::NAN))
                .collect()
        }
    }
    Ok(Some(Box::new(Actions(centers))))
}

fn run_mode(cfg: &ExperimentConfig, initial: &Field) -> Result<ModeOutput> {
    let params = cfg.nls_params();
    let pairs = cfg.admissible_pairs()?;
    let mut diags: Vec<Box<dyn Diagnostic>> = vec![
        Box::new(EnergyDiagnostic::new(params)),
        Box::new(NormDiagnostic::new(cfg.imethod.s)),
    ];
    if let Some(n) = cfg.imethod.cutoff {
        let m = IMultiplier::new(cfg.imethod.s, n)?;
        diags.push(Box::new(FnDiagnostic::new(columns::MODIFIED_ENERGY, move |f: &Field| {
            modified_energy(f, &m, &params)
        })));
    }
    if let Some(d) = morawetz_diagnostic(cfg, initial.grid())? {
        diags.push(d);
    }
    diags.push(Box::new(StrichartzDiagnostic::new(pairs.clone(), cfg.diagnostics.regularity)));
    let refs: Vec<&dyn Diagnostic> = diags.iter().map(|d| d.as_ref()).collect();
    let mut traj = evolve(initial, &params, &cfg.stepper_config(), &refs)?;

    let times = traj.times();
    let l4 = traj.column(columns::L4X_FOURTH)?;
    let running: Vec<f64> = cumulative_trapezoid(&times, &l4);
    traj.push_column(columns::RUNNING_SPACETIME_L4, &running)?;
    let k = traj.valid_prefix_len();
    let mut strichartz = Vec::new();
    for (i, p) in pairs.iter().enumerate() {
        let lr = traj.column(&columns::strichartz_lr(i))?;
        traj.push_column(columns::strichartz_partial(i), &running_time_norm(&times, &lr, p.q()))?;
        strichartz.push(json!({
            "q": p.q(),
            "r": p.r(),
            "value": time_norm(&times[..k], &lr[..k], p.q()),
        }));
    }

    let mut report = Map::new();
    let mut checks = vec![mass_check(cfg, &traj)?];
    report.insert("energy_drift".into(), json!(relative_drift(&traj, columns::ENERGY)?));
    report.insert("strichartz".into(), Value::Array(strichartz));
    if k > 0 {
        report.insert("spacetime_l4".into(), json!(spacetime_l4_accumulator(&traj, cfg.diagnostics.epsilon)?));
        report.insert("interaction_inequality".into(), json!(interaction_inequality_report(&traj)?));
    }
    if traj.column_index(columns::M_INTERACTION).is_ok() {
        let mono = monotonicity_report(&traj)?;
        if params.is_defocusing() {
            checks.push(Check::at_most("monotonicity", mono.max_decrease, mono.tolerance));
        }
        report.insert("monotonicity".into(), json!(mono));
    }
    Ok(ModeOutput {
        traj: Some(traj),
        report,
        checks,
    })
}

fn identities_mode(cfg: &ExperimentConfig, initial: &Field) -> Result<ModeOutput> {
    if cfg.grid.dim != 3 {
        return Err(CliError::invalid("grid.dim", "identity verification needs dim = 3"));
    }
    let params = cfg.nls_params();
    let norms = NormDiagnostic::new(cfg.imethod.s);
    let morawetz = MorawetzDiagnostic::new(initial.grid(), cfg.diagnostics.centers.clone())?;
    let traj = evolve(initial, &params, &cfg.stepper_config(), &[&norms, &morawetz])?;

    let mut valid = traj.clone();
    valid.snapshots = traj.valid_snapshots().to_vec();
    let identity = identity_check(&valid, &params, &cfg.diagnostics.centers)?;
    let mono = monotonicity_report(&traj)?;
    let inequality = interaction_inequality_report(&traj)?;

    let mut checks = vec![
        mass_check(cfg, &traj)?,
        Check::at_most(
            "identity_residual",
            identity.max_relative_residual,
            cfg.checks.identity_residual,
        ),
    ];
    if params.is_defocusing() {
        checks.push(Check::at_most(
            "term_sign",
            (-identity.min_term).max(0.0),
            cfg.checks.term_sign,
        ));
        checks.push(Check::at_most("monotonicity", mono.max_decrease, mono.tolerance));
    }
    let mut report = Map::new();
    report.insert("max_relative_residual".into(), json!(identity.max_relative_residual));
    report.insert("min_term".into(), json!(identity.min_term));
    report.insert("identity".into(), json!(identity));
    report.insert("monotonicity".into(), json!(mono));
    report.insert("interaction_inequality".into(), json!(inequality));
    Ok(ModeOutput {
        traj: Some(traj),
        report,
        checks,
    })
}

fn sweep_mode(cfg: &ExperimentConfig, initial: &Field) -> Result<ModeOutput> {
    let params = cfg.nls_params();
    let s = cfg.imethod.s;
    let (result, traj) = almost_conservation_sweep(initial, &params, s, &cfg.imethod.cutoffs, &cfg.stepper_config())?;
    let slope = result.slope();

    let rescaled: Vec<Value> = cfg
        .imethod
        .cutoffs
        .iter()
        .map(|&n| {
            let m = IMultiplier::new(s, n)?;
            Ok(match rescaled_energy_check(initial, &m, &params, cfg.imethod.lambda_constant) {
                Ok(r) => json!({ "N": n, "report": r }),
                Err(e) => json!({ "N": n, "error": e.to_string() }),
            })
        })
        .collect::<Result<_>>()?;

    let mut report = Map::new();
    report.insert("fitted_slope".into(), json!(slope));
    report.insert("sweep".into(), json!(result));
    report.insert("rescaled_energy".into(), Value::Array(rescaled));
    let checks = vec![Check::at_most(
        "fitted_slope",
        slope.unwrap_or(f64::NAN),
        cfg.checks.sweep_slope,
    )];
    Ok(ModeOutput {
        traj: Some(traj),
        report,
        checks,
    })
}

fn scattering_mode(cfg: &ExperimentConfig, initial: &Field) -> Result<ModeOutput> {
    let params = cfg.nls_params();
    let pairs = cfg.admissible_pairs()?;
    let s = cfg.diagnostics.regularity;
    let norms = NormDiagnostic::new(cfg.imethod.s);
    let strichartz = StrichartzDiagnostic::new(pairs.clone(), s);
    let traj = evolve(initial, &params, &cfg.stepper_config(), &[&norms, &strichartz])?;

    let probe = asymptotic_state_probe(&traj, s, params.alpha)?;
    let l4 = spacetime_l4_accumulator(&traj, cfg.diagnostics.epsilon)?;
    let k = traj.valid_prefix_len();
    let times = traj.times();
    let mut strichartz_norms = Vec::new();
    for (i, p) in pairs.iter().enumerate() {
        let lr = traj.column(&columns::strichartz_lr(i))?;
        strichartz_norms.push(json!({
            "q": p.q(),
            "r": p.r(),
            "value": time_norm(&times[..k], &lr[..k], p.q()),
        }));
    }

    let mut report = Map::new();
    report.insert("final_increment".into(), json!(probe.increments.last()));
    report.insert("pullbacks".into(), json!(probe));
    report.insert("spacetime_l4".into(), json!(l4));
    report.insert("strichartz".into(), Value::Array(strichartz_norms));
    Ok(ModeOutput {
        checks: vec![mass_check(cfg, &traj)?],
        traj: Some(traj),
        report,
    })
}

fn selftest_mode(cfg: &ExperimentConfig, initial: &Field) -> Result<ModeOutput> {
    let (spec, images) = gaussian_spec(&cfg.initial_data).ok_or_else(|| {
        CliError::invalid(
            "initial_data.kind",
            "the linear self-test needs gaussian or chirped-gaussian data",
        )
    })?;
    let params = NlsParams::new(cfg.params.alpha, 0.0, cfg.params.p);
    let traj = evolve(initial, &params, &cfg.stepper_config(), &[])?;
    let snaps = traj.valid_snapshots();
    if snaps.len() < 2 {
        return Err(CliError::invalid(
            "stepper",
            "no snapshot after the initial one falls inside the validity window",
        ));
    }
    let grid = initial.grid();
    let mut l2_error = 0.0f64;
    let mut errors = Vec::with_capacity(snaps.len());
    for u in snaps {
        let exact = free_gaussian(grid, &spec, images, u.t(), params.alpha);
        let err = u.l2_distance(&exact)? / exact.l2_norm();
        l2_error = l2_error.max(err);
        errors.push(json!({ "t": u.t(), "l2_error": err }));
    }
    let mut report = Map::new();
    report.insert("l2_error".into(), json!(l2_error));
    report.insert("compared_at".into(), Value::Array(errors));
    Ok(ModeOutput {
        checks: vec![Check::at_most("l2_error", l2_error, cfg.checks.selftest_l2)],
        traj: Some(traj),
        report,
    })
}
