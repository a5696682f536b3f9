//! The I-operator `Î f(ξ) = m_N(ξ) f̂(ξ)`, its modified energy, the scaling
//! symmetry `φ^(λ)(x,t) = λ^{-1} φ(x/λ, t/λ²)`, the λ(N, s) balance and the
//! almost-conservation N-sweep.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{frequency_index, Grid, GridSpec};
use crate::integrator::{evolve, EnergyParts, NlsParams, StepperConfig};
use crate::numeric::{fit_log_log, par_sum, par_sum_indexed, LineFit};
use crate::record::{columns, Diagnostic, Trajectory};
use crate::spectral::{apply_radial_multiplier, lebesgue_norm};

/// Multiplier `m_N`: 1 for `|ξ| ≤ N`, `(N/|ξ|)^{1−s}` for `|ξ| ≥ 2N`, and
/// `(N/|ξ|)^{θ(1−s)}` in between, with `θ` the C¹ smoothstep in `log₂(|ξ|/N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IMultiplier {
    pub s: f64,
    pub cutoff: f64,
}

impl IMultiplier {
    pub fn new(s: f64, cutoff: f64) -> Result<Self> {
        let m = IMultiplier { s, cutoff };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s > 0.5 && self.s <= 1.0) {
            return Err(Error::param("s", format!("must lie in (1/2, 1], got {}", self.s)));
        }
        if !(self.cutoff >= 1.0 && self.cutoff.is_finite()) {
            return Err(Error::param("N", format!("must be at least 1, got {}", self.cutoff)));
        }
        Ok(())
    }

    pub fn symbol(&self, xi: f64) -> f64 {
        let n = self.cutoff;
        if xi <= n || self.s == 1.0 {
            return 1.0;
        }
        let ratio = n / xi;
        if xi >= 2.0 * n {
            return ratio.powf(1.0 - self.s);
        }
        let x = (xi / n).log2();
        let theta = x * x * (3.0 - 2.0 * x);
        ratio.powf(theta * (1.0 - self.s))
    }

    /// True when the multiplier is 1 on every mode of `grid`.
    pub fn is_identity_on(&self, grid: &Grid) -> bool {
        self.s == 1.0 || self.cutoff >= grid.max_wavenumber()
    }
}

pub fn apply_i(field: &Field, spec: &IMultiplier) -> Field {
    apply_radial_multiplier(field, |k2| spec.symbol(k2.sqrt()))
}

pub fn modified_energy_parts(field: &Field, spec: &IMultiplier, params: &NlsParams) -> EnergyParts {
    crate::integrator::energy_parts(&apply_i(field, spec), params)
}

/// `E(Iφ)`.
pub fn modified_energy(field: &Field, spec: &IMultiplier, params: &NlsParams) -> f64 {
    modified_energy_parts(field, spec, params).total()
}

/// `φ^(λ)` sampled on a box of side `λL` with the same number of nodes, so node
/// values are `φ/λ` exactly and the clock becomes `λ²t`.
pub fn scaling_transform(field: &Field, lambda: f64) -> Result<Field> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::param("lambda", "must be positive"));
    }
    let g = field.grid();
    let target = Grid::new(GridSpec::new(g.dim(), g.n(), g.length() * lambda))?;
    let inv = 1.0 / lambda;
    let values = field.values().par_iter().map(|v| v * inv).collect();
    Ok(Field::from_parts(target, values, field.t() * lambda * lambda))
}

/// Spectral interpolation onto `n` nodes over the same box. Fails with
/// [`Error::UnderResolved`] when the discarded modes carry more than `1e-10` of
/// the spectral energy.
pub fn resample(field: &Field, n: usize) -> Result<Field> {
    let src = field.grid();
    let target = Grid::new(GridSpec::new(src.dim(), n, src.length()))?;
    if n == src.n() {
        return field.relabel(&target);
    }
    let dim = src.dim();
    let keep = src.n().min(n) / 2;
    let spectrum = field.spectrum();
    let total = par_sum(&spectrum, |c| c.norm_sqr());
    let mut out = vec![Complex64::default(); target.len()];
    let scale = (n as f64 / src.n() as f64).powi(dim as i32);
    let mut dropped = 0.0;
    for (i, c) in spectrum.iter().enumerate() {
        let idx = src.multi_index(i);
        let freqs: Vec<i64> = (0..dim).map(|a| frequency_index(idx[a], src.n())).collect();
        if freqs.iter().all(|m| m.unsigned_abs() < keep as u64) {
            let mut tidx = [0usize; 3];
            for a in 0..dim {
                tidx[a] = freqs[a].rem_euclid(n as i64) as usize;
            }
            out[target.flat_index(tidx)] = c * scale;
        } else {
            dropped += c.norm_sqr();
        }
    }
    if total > 0.0 && dropped > 1e-10 * total {
        return Err(Error::UnderResolved(format!(
            "{:.3e} of the spectral energy lies beyond the {n}-point lattice",
            dropped / total
        )));
    }
    Ok(Field::from_spectrum(&target, out, field.t()))
}

/// `φ^(λ)` resampled onto `n` nodes per axis.
pub fn scaling_transform_onto(field: &Field, lambda: f64, n: usize) -> Result<Field> {
    resample(&scaling_transform(field, lambda)?, n)
}

/// `λ = N^{(1−s)/(s−1/2)}`.
pub fn choose_lambda(n: f64, s: f64) -> Result<f64> {
    if !(s > 0.5 && s <= 1.0) {
        return Err(Error::param("s", format!("must exceed 1/2 (and be at most 1), got {s}")));
    }
    if !(n >= 1.0 && n.is_finite()) {
        return Err(Error::param("N", "must be at least 1"));
    }
    Ok(n.powf(lambda_exponent(s)))
}

/// `(1−s)/(s−1/2)`. When `s` is a decimal-style fraction `p/q` (to within a few
/// ulps) the exponent is formed from the integers, so `s = 0.8` yields exactly
/// the double nearest `2/3`.
fn lambda_exponent(s: f64) -> f64 {
    for q in 1..=10_000u32 {
        let p = (s * q as f64).round();
        if (p / q as f64 - s).abs() <= 4.0 * f64::EPSILON * s {
            let (p, q) = (p as i64, q as i64);
            return (2 * (q - p)) as f64 / (2 * p - q) as f64;
        }
    }
    (1.0 - s) / (s - 0.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RescaledEnergyReport {
    pub lambda: f64,
    /// `½α‖∇Iφ^(λ)‖²`.
    pub gradient_piece: f64,
    /// `½μ∫F(|Iφ^(λ)|²)`; `¼‖Iφ^(λ)‖⁴_{L⁴}` in the cubic case.
    pub potential_piece: f64,
    pub energy: f64,
    /// Balance predicted by the gradient bound, `N^{2(1−s)}λ^{1−2s}`.
    pub predicted_gradient_scale: f64,
    pub within_quarter: bool,
    pub gradient_margin: f64,
    pub potential_margin: f64,
}

/// Rescales by `λ = c·N^{(1−s)/(s−1/2)}` and evaluates `E(Iφ^(λ))` against the
/// 1/4 target (1/8 per piece), reporting margins rather than asserting them.
pub fn rescaled_energy_check(
    field: &Field,
    spec: &IMultiplier,
    params: &NlsParams,
    lambda_constant: f64,
) -> Result<RescaledEnergyReport> {
    spec.validate()?;
    if !(lambda_constant > 0.0) {
        return Err(Error::param("lambda_constant", "must be positive"));
    }
    let lambda = lambda_constant * choose_lambda(spec.cutoff, spec.s)?;
    let scaled = scaling_transform(field, lambda)?;
    let parts = modified_energy_parts(&scaled, spec, params);
    let energy = parts.total();
    Ok(RescaledEnergyReport {
        lambda,
        gradient_piece: parts.kinetic,
        potential_piece: parts.potential,
        energy,
        predicted_gradient_scale: spec.cutoff.powf(2.0 * (1.0 - spec.s)) * lambda.powf(1.0 - 2.0 * spec.s),
        within_quarter: energy <= 0.25,
        gradient_margin: 0.125 - parts.kinetic,
        potential_margin: 0.125 - parts.potential,
    })
}

/// Records `E(Iφ)` for several cutoffs, sharing one forward transform.
pub struct ModifiedEnergyDiagnostic {
    multipliers: Vec<IMultiplier>,
    params: NlsParams,
}

impl ModifiedEnergyDiagnostic {
    pub fn new(multipliers: Vec<IMultiplier>, params: NlsParams) -> Self {
        ModifiedEnergyDiagnostic { multipliers, params }
    }
}

impl Diagnostic for ModifiedEnergyDiagnostic {
    fn columns(&self) -> Vec<String> {
        (0..self.multipliers.len()).map(columns::modified_energy_at).collect()
    }

    fn evaluate(&self, field: &Field) -> Vec<f64> {
        let grid = field.grid();
        let spectrum = field.spectrum();
        let k2 = grid.k_squared();
        let p = self.params;
        self.multipliers
            .iter()
            .map(|m| {
                if m.is_identity_on(grid) {
                    return crate::integrator::energy(field, &p);
                }
                let mults: Vec<f64> = k2.par_iter().map(|&k| m.symbol(k.sqrt())).collect();
                let kinetic = par_sum_indexed(spectrum.len(), |i| k2[i] * mults[i] * mults[i] * spectrum[i].norm_sqr())
                    * grid.parseval_factor();
                let potential = if p.mu == 0.0 {
                    0.0
                } else {
                    let smoothed: Vec<Complex64> = spectrum.par_iter().zip(&mults).map(|(c, m)| c * m).collect();
                    let smoothed = Field::from_spectrum(grid, smoothed, field.t());
                    par_sum(smoothed.values(), |v| p.big_f(v.norm_sqr())) * grid.cell_volume()
                };
                0.5 * p.alpha * kinetic + 0.5 * p.mu * potential
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepStatus {
    /// Slope fitted from at least two active, valid cutoffs.
    Fitted,
    /// Every cutoff is at or above the lattice's largest wavenumber.
    IInactive,
    /// The multiplier is the identity (s = 1) or all increments coincide.
    Degenerate,
    /// Fewer than two usable increments.
    InsufficientData,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepEntry {
    pub cutoff: f64,
    /// `sup_{t ≤ T} |E(Iφ)(t) − E(Iφ)(0)|`.
    pub increment: f64,
    pub active: bool,
    pub valid: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub s: f64,
    pub entries: Vec<SweepEntry>,
    pub fit: Option<LineFit>,
    pub status: SweepStatus,
    /// Time up to which increments were measured.
    pub horizon: f64,
    /// `∫₀^T ∫|u|⁴` over the measured window.
    pub spacetime_l4: f64,
    /// Scheme-only drift `sup|E(t) − E(0)|` over the same window.
    pub energy_drift: f64,
    pub truncated: Option<String>,
}

impl SweepResult {
    pub fn slope(&self) -> Option<f64> {
        match self.status {
            SweepStatus::Fitted => self.fit.map(|f| f.slope),
            _ => None,
        }
    }
}

/// Evolves `initial` once and measures the modified-energy increment for every
/// cutoff in `cutoffs` (the evolution does not depend on N), then fits
/// `log(increment)` against `log(N)` by ordinary least squares.
pub fn almost_conservation_sweep(
    initial: &Field,
    params: &NlsParams,
    s: f64,
    cutoffs: &[f64],
    cfg: &StepperConfig,
) -> Result<(SweepResult, Trajectory)> {
    params.validate()?;
    if !params.is_defocusing() {
        return Err(Error::param("mu", "the sweep needs a defocusing nonlinearity"));
    }
    if cutoffs.is_empty() {
        return Err(Error::param("N_list", "must not be empty"));
    }
    let multipliers: Vec<IMultiplier> = cutoffs.iter().map(|&n| IMultiplier::new(s, n)).collect::<Result<_>>()?;
    let grid = initial.grid();
    let diag = ModifiedEnergyDiagnostic::new(multipliers.clone(), *params);
    let energy_diag = crate::integrator::EnergyDiagnostic::new(*params);
    let l4_diag = crate::record::FnDiagnostic::new(columns::L4X_FOURTH, |f: &Field| lebesgue_norm(f, 4.0).powi(4));
    let traj = evolve(initial, params, cfg, &[&diag, &energy_diag, &l4_diag])?;

    let k = traj.valid_prefix_len().max(1);
    let times = traj.times();
    let horizon = times[k - 1];
    let sup_increment = |name: &str| -> Result<f64> {
        let col = traj.column(name)?;
        Ok(col[..k].iter().map(|v| (v - col[0]).abs()).fold(0.0, f64::max))
    };

    let mut entries = Vec::with_capacity(cutoffs.len());
    for (i, m) in multipliers.iter().enumerate() {
        let increment = sup_increment(&columns::modified_energy_at(i))?;
        entries.push(SweepEntry {
            cutoff: m.cutoff,
            increment,
            active: !m.is_identity_on(grid),
            valid: traj.truncation.is_none() && increment.is_finite() && increment > 0.0,
        });
    }
    let energy_drift = sup_increment(columns::ENERGY)?;
    let l4 = traj.column(columns::L4X_FOURTH)?;
    let spacetime_l4 = crate::numeric::trapezoid(&times[..k], &l4[..k]);

    let usable: Vec<&SweepEntry> = entries.iter().filter(|e| e.active && e.valid).collect();
    let all_equal = entries
        .windows(2)
        .all(|w| (w[0].increment - w[1].increment).abs() <= 1e-12 * w[0].increment.abs().max(1e-300));
    let (status, fit) = if s == 1.0 {
        (SweepStatus::Degenerate, None)
    } else if entries.iter().all(|e| !e.active) {
        (SweepStatus::IInactive, None)
    } else if usable.len() < 2 {
        (SweepStatus::InsufficientData, None)
    } else if all_equal {
        (SweepStatus::Degenerate, None)
    } else {
        let x: Vec<f64> = usable.iter().map(|e| e.cutoff).collect();
        let y: Vec<f64> = usable.iter().map(|e| e.increment).collect();
        match fit_log_log(&x, &y) {
            Some(f) => (SweepStatus::Fitted, Some(f)),
            None => (SweepStatus::InsufficientData, None),
        }
    };

    let result = SweepResult {
        s,
        entries,
        fit,
        status,
        horizon,
        spacetime_l4,
        energy_drift,
        truncated: traj.truncation.as_ref().map(|t| t.reason.clone()),
    };
    Ok((result, traj))
}
