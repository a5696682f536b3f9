//! Strang-split spectral time stepping for `i u_t + αΔu = μ f(|u|²) u`.
//!
//! The linear half steps are exact Fourier multipliers and the nonlinear substep
//! is the exact pointwise phase rotation `u ← u·e^{−iμ f(|u|²) dt}`, so every
//! substep is unitary in L².

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{frequency_index, Grid};
use crate::numeric::{par_sum, par_sum_indexed};
use crate::record::{columns, Diagnostic, DiagnosticRecord, Trajectory, Truncation};

/// Coefficients of the generalized equation with pure-power nonlinearity
/// `f(z) = z^{(p−1)/2}`, `F(z) = ∫₀^z f = (2/(p+1))·z^{(p+1)/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NlsParams {
    pub alpha: f64,
    pub mu: f64,
    #[serde(default = "default_power")]
    pub power: f64,
}

fn default_power() -> f64 {
    3.0
}

impl NlsParams {
    pub fn new(alpha: f64, mu: f64, power: f64) -> Self {
        NlsParams { alpha, mu, power }
    }

    /// Cubic defocusing equation `iφ_t + Δφ = |φ|²φ`.
    pub fn cubic_defocusing() -> Self {
        NlsParams::new(1.0, 1.0, 3.0)
    }

    pub fn linear() -> Self {
        NlsParams::new(1.0, 0.0, 3.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() {
            return Err(Error::param("alpha", "must be finite"));
        }
        if !self.mu.is_finite() {
            return Err(Error::param("mu", "must be finite"));
        }
        if !(self.power.is_finite() && self.power >= 1.0) {
            return Err(Error::param("power", "must be at least 1"));
        }
        Ok(())
    }

    pub fn is_defocusing(&self) -> bool {
        self.mu > 0.0 && self.power > 1.0
    }

    /// `f(z)`.
    pub fn f(&self, z: f64) -> f64 {
        if self.power == 3.0 {
            z
        } else if self.power == 1.0 {
            1.0
        } else {
            z.powf(0.5 * (self.power - 1.0))
        }
    }

    /// `F(z)`.
    pub fn big_f(&self, z: f64) -> f64 {
        if self.power == 3.0 {
            0.5 * z * z
        } else {
            2.0 / (self.power + 1.0) * z.powf(0.5 * (self.power + 1.0))
        }
    }

    /// `μ{z f(z) − F(z)}`, the repulsivity integrand.
    pub fn repulsivity(&self, z: f64) -> f64 {
        self.mu * (z * self.f(z) - self.big_f(z))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RepulsivityReport {
    pub holds: bool,
    pub min_value: f64,
}

/// Evaluates `μ(z f(z) − F(z))` on the samples and at `z = 0`.
pub fn repulsivity_check(params: &NlsParams, z_samples: &[f64]) -> Result<RepulsivityReport> {
    if let Some(z) = z_samples.iter().find(|z| !(**z >= 0.0)) {
        return Err(Error::param("z_samples", format!("must be nonnegative, got {z}")));
    }
    let min_value = std::iter::once(0.0)
        .chain(z_samples.iter().copied())
        .map(|z| params.repulsivity(z))
        .fold(f64::INFINITY, f64::min);
    Ok(RepulsivityReport {
        holds: min_value >= -1e-12,
        min_value,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyParts {
    /// `½α∫|∇u|²`.
    pub kinetic: f64,
    /// `½μ∫F(|u|²)`.
    pub potential: f64,
}

impl EnergyParts {
    pub fn total(&self) -> f64 {
        self.kinetic + self.potential
    }
}

pub fn energy_parts(field: &Field, params: &NlsParams) -> EnergyParts {
    let grid = field.grid();
    let spectrum = field.spectrum();
    let k2 = grid.k_squared();
    let grad_sq = par_sum_indexed(spectrum.len(), |i| k2[i] * spectrum[i].norm_sqr()) * grid.parseval_factor();
    let pot = if params.mu == 0.0 {
        0.0
    } else {
        par_sum(field.values(), |v| params.big_f(v.norm_sqr())) * grid.cell_volume()
    };
    EnergyParts {
        kinetic: 0.5 * params.alpha * grad_sq,
        potential: 0.5 * params.mu * pot,
    }
}

/// `E(u) = ∫ ½α|∇u|² + ½μF(|u|²) dx`; for the cubic equation this is `∫ ½|∇u|² + ¼|u|⁴`.
pub fn energy(field: &Field, params: &NlsParams) -> f64 {
    energy_parts(field, params).total()
}

/// Records the energy in the `energy` column.
pub struct EnergyDiagnostic {
    params: NlsParams,
}

impl EnergyDiagnostic {
    pub fn new(params: NlsParams) -> Self {
        EnergyDiagnostic { params }
    }
}

impl Diagnostic for EnergyDiagnostic {
    fn columns(&self) -> Vec<String> {
        vec![columns::ENERGY.to_string()]
    }

    fn evaluate(&self, field: &Field) -> Vec<f64> {
        vec![energy(field, &self.params)]
    }
}

/// Modes kept by the 2/3 rule: every axis frequency strictly inside `n/3`.
/// The unpaired Nyquist index is always removed.
pub fn dealias_mask(grid: &Grid) -> Vec<bool> {
    let n = grid.n();
    let limit = n as f64 / 3.0;
    let keep_axis: Vec<bool> = (0..n).map(|j| (frequency_index(j, n).abs() as f64) < limit).collect();
    (0..grid.len())
        .map(|i| {
            let idx = grid.multi_index(i);
            idx[..grid.dim()].iter().all(|&j| keep_axis[j])
        })
        .collect()
}

/// Precomputed Strang stepper for a fixed grid, parameter set and (signed) step.
#[derive(Debug, Clone)]
pub struct Stepper {
    grid: Grid,
    params: NlsParams,
    dt: f64,
    half_phase: Vec<Complex64>,
    mask: Option<Vec<bool>>,
    blowup_ceiling: f64,
}

impl Stepper {
    /// `dt` may be negative to run backwards in time.
    pub fn new(grid: &Grid, params: NlsParams, dt: f64, dealias: bool) -> Result<Self> {
        params.validate()?;
        if !(dt.is_finite() && dt != 0.0) {
            return Err(Error::param("dt", "must be finite and nonzero"));
        }
        let half_phase = grid
            .k_squared()
            .par_iter()
            .map(|&k2| Complex64::from_polar(1.0, -params.alpha * k2 * 0.5 * dt))
            .collect();
        // with μ = 0 the nonlinear substep is the identity and generates no aliasing
        let mask = (dealias && params.mu != 0.0).then(|| dealias_mask(grid));
        Ok(Stepper {
            grid: grid.clone(),
            params,
            dt,
            half_phase,
            mask,
            blowup_ceiling: f64::INFINITY,
        })
    }

    pub fn with_blowup_ceiling(mut self, ceiling: f64) -> Self {
        self.blowup_ceiling = ceiling;
        self
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn rotate(&self, values: &mut [Complex64]) {
        let p = self.params;
        if p.mu == 0.0 {
            return;
        }
        let dt = self.dt;
        values.par_iter_mut().for_each(|v| {
            let phase = -p.mu * p.f(v.norm_sqr()) * dt;
            *v *= Complex64::from_polar(1.0, phase);
        });
    }

    /// Advances a spectrum by one step. `work` is scratch of the same length.
    /// Returns the sup norm observed after the nonlinear substep.
    fn advance_spectrum(&self, spectrum: &mut [Complex64], work: &mut Vec<Complex64>) -> f64 {
        spectrum
            .par_iter_mut()
            .zip(&self.half_phase)
            .for_each(|(c, h)| *c *= h);
        if self.params.mu == 0.0 {
            spectrum
                .par_iter_mut()
                .zip(&self.half_phase)
                .for_each(|(c, h)| *c *= h);
            return 0.0;
        }
        work.clear();
        work.extend_from_slice(spectrum);
        self.grid.inverse(work);
        self.rotate(work);
        let sup = work
            .par_iter()
            .map(|v| if v.re.is_finite() && v.im.is_finite() { v.norm() } else { f64::INFINITY })
            .reduce(|| 0.0, f64::max);
        self.grid.forward(work);
        if let Some(mask) = &self.mask {
            work.par_iter_mut().zip(mask).for_each(|(c, &keep)| {
                if !keep {
                    *c = Complex64::default();
                }
            });
        }
        spectrum
            .par_iter_mut()
            .zip(work.par_iter())
            .zip(&self.half_phase)
            .for_each(|((c, w), h)| *c = w * h);
        sup
    }

    fn check(&self, sup: f64, t: f64, last_good_t: f64) -> Result<()> {
        if !sup.is_finite() {
            return Err(Error::NonFinite { t, last_good_t });
        }
        if sup > self.blowup_ceiling {
            return Err(Error::Blowup {
                t,
                last_good_t,
                sup,
                ceiling: self.blowup_ceiling,
            });
        }
        Ok(())
    }

    pub fn step(&self, field: &Field) -> Result<Field> {
        if field.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let mut spectrum = field.spectrum();
        let mut work = Vec::with_capacity(spectrum.len());
        let sup = self.advance_spectrum(&mut spectrum, &mut work);
        let t = field.t() + self.dt;
        self.check(sup, t, field.t())?;
        let out = Field::from_spectrum(&self.grid, spectrum, t);
        if !out.is_finite() {
            return Err(Error::NonFinite {
                t,
                last_good_t: field.t(),
            });
        }
        Ok(out)
    }

    /// Takes `steps` steps without intermediate output.
    pub fn run(&self, field: &Field, steps: usize) -> Result<Field> {
        let mut spectrum = field.spectrum();
        let mut work = Vec::with_capacity(spectrum.len());
        let t0 = field.t();
        for k in 0..steps {
            let sup = self.advance_spectrum(&mut spectrum, &mut work);
            self.check(sup, t0 + (k + 1) as f64 * self.dt, t0 + k as f64 * self.dt)?;
        }
        let t = t0 + steps as f64 * self.dt;
        let out = Field::from_spectrum(&self.grid, spectrum, t);
        if !out.is_finite() {
            return Err(Error::NonFinite { t, last_good_t: t0 });
        }
        Ok(out)
    }
}

/// One Strang step: half linear step, exact nonlinear rotation (followed by 2/3
/// dealiasing when `dealias` is set), half linear step.
pub fn step(field: &Field, params: &NlsParams, dt: f64, dealias: bool) -> Result<Field> {
    if !(dt > 0.0) {
        return Err(Error::param("dt", "must be positive"));
    }
    Stepper::new(field.grid(), *params, dt, dealias)?.step(field)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepperConfig {
    pub dt: f64,
    pub t_final: f64,
    /// Time between diagnostic records; a positive multiple of `dt`.
    pub record_every: f64,
    /// Time between stored snapshots; a positive multiple of `dt`.
    pub snapshot_every: f64,
    pub dealias: bool,
    /// Abort when `‖u‖_{L^∞}` exceeds this.
    pub blowup_ceiling: f64,
    /// Records are flagged invalid once the outer-layer mass fraction exceeds this.
    pub spillover_tolerance: f64,
}

impl Default for StepperConfig {
    fn default() -> Self {
        StepperConfig {
            dt: 1e-3,
            t_final: 0.1,
            record_every: 1e-2,
            snapshot_every: 1e-1,
            dealias: true,
            blowup_ceiling: 1e6,
            spillover_tolerance: 1e-6,
        }
    }
}

fn cadence_steps(name: &'static str, every: f64, dt: f64) -> Result<usize> {
    let ratio = every / dt;
    let k = ratio.round();
    if !(k >= 1.0) || (ratio - k).abs() > 1e-6 * k {
        return Err(Error::param(name, format!("{every} is not a positive multiple of dt = {dt}")));
    }
    Ok(k as usize)
}

impl StepperConfig {
    pub fn new(dt: f64, t_final: f64) -> Self {
        StepperConfig {
            dt,
            t_final,
            record_every: dt,
            snapshot_every: t_final,
            ..Default::default()
        }
    }

    pub fn with_cadence(mut self, record_every: f64, snapshot_every: f64) -> Self {
        self.record_every = record_every;
        self.snapshot_every = snapshot_every;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.steps().map(|_| ())
    }

    /// (total steps, steps per record, steps per snapshot).
    pub fn steps(&self) -> Result<(usize, usize, usize)> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("dt", "must be positive"));
        }
        if !(self.t_final >= self.dt) {
            return Err(Error::param("t_final", "must be at least dt"));
        }
        let total = cadence_steps("t_final", self.t_final, self.dt)?;
        let rec = cadence_steps("record_every", self.record_every, self.dt)?;
        let snap = cadence_steps("snapshot_every", self.snapshot_every, self.dt)?;
        if !(self.blowup_ceiling > 0.0) {
            return Err(Error::param("blowup_ceiling", "must be positive"));
        }
        if !(self.spillover_tolerance >= 0.0) {
            return Err(Error::param("spillover_tolerance", "must be nonnegative"));
        }
        Ok((total, rec, snap))
    }
}

/// Evolves `initial` to `cfg.t_final`, recording diagnostics and snapshots at the
/// configured cadences (including the initial state).
///
/// Step failures do not return an error: the trajectory is marked truncated at
/// the last good time and everything captured so far is kept.
pub fn evolve(
    initial: &Field,
    params: &NlsParams,
    cfg: &StepperConfig,
    diagnostics: &[&dyn Diagnostic],
) -> Result<Trajectory> {
    let (total, rec_every, snap_every) = cfg.steps()?;
    let stepper = Stepper::new(initial.grid(), *params, cfg.dt, cfg.dealias)?.with_blowup_ceiling(cfg.blowup_ceiling);

    let mut names = vec![columns::MASS.to_string(), columns::BOUNDARY_FRACTION.to_string()];
    for d in diagnostics {
        names.extend(d.columns());
    }
    let mut traj = Trajectory::new(names);

    let t0 = initial.t();
    let capture = |traj: &mut Trajectory, field: &Field, k: usize| {
        if k % rec_every == 0 {
            traj.records.push(make_record(field, diagnostics, cfg.spillover_tolerance));
        }
        if k % snap_every == 0 {
            traj.snapshots.push(field.clone());
        }
    };
    capture(&mut traj, initial, 0);

    let grid = initial.grid();
    let mut spectrum = initial.spectrum();
    let mut work = Vec::with_capacity(spectrum.len());
    for k in 1..=total {
        let t = t0 + k as f64 * cfg.dt;
        let last_good = t0 + (k - 1) as f64 * cfg.dt;
        let sup = stepper.advance_spectrum(&mut spectrum, &mut work);
        if let Err(e) = stepper.check(sup, t, last_good) {
            traj.truncation = Some(Truncation {
                last_valid_t: last_good,
                reason: e.to_string(),
            });
            break;
        }
        if k % rec_every == 0 || k % snap_every == 0 {
            let field = Field::from_spectrum(grid, spectrum.clone(), t);
            if !field.is_finite() {
                traj.truncation = Some(Truncation {
                    last_valid_t: last_good,
                    reason: Error::NonFinite { t, last_good_t: last_good }.to_string(),
                });
                break;
            }
            capture(&mut traj, &field, k);
        }
    }
    Ok(traj)
}

fn make_record(field: &Field, diagnostics: &[&dyn Diagnostic], spillover: f64) -> DiagnosticRecord {
    let mass = field.mass();
    let boundary = field.boundary_mass_fraction();
    let evaluated: Vec<Vec<f64>> = diagnostics.par_iter().map(|d| d.evaluate(field)).collect();
    let mut values = vec![mass, boundary];
    for v in evaluated {
        values.extend(v);
    }
    let valid = boundary <= spillover && values.iter().all(|v| v.is_finite());
    DiagnosticRecord {
        t: field.t(),
        valid,
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial::{gaussian, GaussianSpec};
    use crate::spectral::linear_propagate;

    #[test]
    fn big_f_integrates_f() {
        for p in [1.0, 2.0, 3.0, 5.0, 7.5] {
            let params = NlsParams::new(1.0, 1.0, p);
            assert_eq!(params.big_f(0.0), 0.0);
            let z = 1.7;
            // Simpson's rule with many panels
            let m = 20_000;
            let h = z / m as f64;
            let mut acc = params.f(0.0) + params.f(z);
            for i in 1..m {
                acc += if i % 2 == 1 { 4.0 } else { 2.0 } * params.f(i as f64 * h);
            }
            let integral = acc * h / 3.0;
            assert!((integral - params.big_f(z)).abs() < 1e-5, "p = {p}");
        }
    }

    #[test]
    fn repulsivity_examples() {
        let samples = [0.0, 0.1, 0.5, 1.0, 4.0];
        let cubic = NlsParams::cubic_defocusing();
        let r = repulsivity_check(&cubic, &samples).unwrap();
        assert!(r.holds);
        for z in samples {
            // (p-1)/2 = 1 for the cubic case, so the value is F(z) = z²/2
            assert!((cubic.repulsivity(z) - cubic.big_f(z)).abs() <= 1e-14 * z * z);
            assert!((cubic.repulsivity(z) - z * z / 2.0).abs() <= 1e-14 * z * z);
        }

        let focusing = NlsParams::new(1.0, -1.0, 3.0);
        let r = repulsivity_check(&focusing, &[0.3]).unwrap();
        assert!(!r.holds);
        assert!(r.min_value < 0.0);

        let linear_f = NlsParams::new(1.0, 1.0, 1.0);
        let r = repulsivity_check(&linear_f, &samples).unwrap();
        assert!(r.holds);
        assert_eq!(r.min_value, 0.0);

        assert!(repulsivity_check(&cubic, &[-1.0]).is_err());
    }

    #[test]
    fn repulsivity_identity_for_pure_powers() {
        for p in [1.5, 3.0, 5.0] {
            let params = NlsParams::new(1.0, 1.0, p);
            for z in [0.2, 1.0, 3.3] {
                let lhs = params.repulsivity(z);
                let rhs = 0.5 * (p - 1.0) * params.big_f(z);
                assert!((lhs - rhs).abs() < 1e-12 * rhs.abs().max(1.0));
            }
        }
    }

    #[test]
    fn zero_mu_step_is_linear_propagation() {
        let g = Grid::cube(16, 8.0).unwrap();
        let u = gaussian(&g, &GaussianSpec::new(1.0, 1.0).with_chirp(0.5), 1);
        let params = NlsParams::new(1.3, 0.0, 3.0);
        let a = step(&u, &params, 0.05, true).unwrap();
        let b = linear_propagate(&u, 0.05, 1.3);
        assert!(a.l2_distance(&b).unwrap() <= 1e-13 * u.l2_norm());
        assert_eq!(a.t(), b.t());
    }

    #[test]
    fn zero_alpha_step_rotates_phase_only() {
        let g = Grid::cube(8, 8.0).unwrap();
        let u = gaussian(&g, &GaussianSpec::new(1.2, 1.5), 1);
        let params = NlsParams::new(0.0, 0.7, 5.0);
        let dt = 0.1;
        let v = step(&u, &params, dt, false).unwrap();
        for (a, b) in v.values().iter().zip(u.values()) {
            assert!((a.norm() - b.norm()).abs() < 1e-13);
            let expect = b * Complex64::from_polar(1.0, -0.7 * params.f(b.norm_sqr()) * dt);
            assert!((a - expect).norm() < 1e-13);
        }
    }

    #[test]
    fn step_rejects_bad_dt() {
        let g = Grid::cube(4, 1.0).unwrap();
        let u = Field::zeros(&g, 0.0);
        assert!(step(&u, &NlsParams::cubic_defocusing(), 0.0, true).is_err());
        assert!(step(&u, &NlsParams::cubic_defocusing(), -0.1, true).is_err());
    }

    #[test]
    fn config_cadence_validation() {
        assert!(StepperConfig::new(0.01, 0.1).validate().is_ok());
        assert!(StepperConfig::new(0.01, 0.1).with_cadence(0.015, 0.1).validate().is_err());
        assert!(StepperConfig::new(0.2, 0.1).validate().is_err());
        assert_eq!(StepperConfig::new(0.01, 0.1).with_cadence(0.02, 0.05).steps().unwrap(), (10, 2, 5));
    }

    #[test]
    fn single_step_run_has_one_post_initial_record() {
        let g = Grid::cube(8, 4.0).unwrap();
        let u = gaussian(&g, &GaussianSpec::new(1.0, 0.5), 1);
        let dt = 0.01;
        let traj = evolve(&u, &NlsParams::cubic_defocusing(), &StepperConfig::new(dt, dt), &[]).unwrap();
        assert_eq!(traj.records.len(), 2);
        assert_eq!(traj.snapshots.len(), 2);
        assert_eq!(traj.records[1].t, dt);
    }

    #[test]
    fn zero_field_stays_zero() {
        let g = Grid::cube(8, 4.0).unwrap();
        let u = Field::zeros(&g, 0.0);
        let e = crate::record::FnDiagnostic::new(columns::ENERGY, |f: &Field| energy(f, &NlsParams::cubic_defocusing()));
        let cfg = StepperConfig::new(0.01, 0.1).with_cadence(0.02, 0.05);
        let traj = evolve(&u, &NlsParams::cubic_defocusing(), &cfg, &[&e]).unwrap();
        assert_eq!(traj.records.len(), 6);
        for r in &traj.records {
            assert!(r.values.iter().all(|v| *v == 0.0));
            assert!(r.valid);
        }
        assert!(traj.snapshots.last().unwrap().is_zero());
    }

    #[test]
    fn blowup_truncates_trajectory() {
        let g = Grid::cube(8, 4.0).unwrap();
        let u = gaussian(&g, &GaussianSpec::new(3.0, 0.6), 1);
        let mut cfg = StepperConfig::new(0.01, 0.1);
        cfg.blowup_ceiling = 1.0;
        let traj = evolve(&u, &NlsParams::new(1.0, -1.0, 3.0), &cfg, &[]).unwrap();
        let trunc = traj.truncation.unwrap();
        assert_eq!(trunc.last_valid_t, 0.0);
        assert_eq!(traj.records.len(), 1);
    }
}
