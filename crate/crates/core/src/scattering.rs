//! Scattering diagnostics: linear pullbacks `S^L(−t)u(t)`, Strichartz norms over
//! admissible pairs, and the running spacetime L⁴ integral with its ε-subdivision.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::numeric::cumulative_trapezoid;
use crate::record::{columns, Diagnostic, Trajectory};
use crate::spectral::{bessel_potential, lebesgue_norm, linear_propagate, sobolev_norm, SobolevSpec};

/// Exponents with `1/q + 3/(2r) = 3/4`, `q, r ≥ 2`. `q` may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "(f64, f64)", into = "(f64, f64)")]
pub struct AdmissiblePair {
    q: f64,
    r: f64,
}

impl AdmissiblePair {
    pub fn new(q: f64, r: f64) -> Result<Self> {
        if !(q >= 2.0 && r >= 2.0) || r.is_infinite() {
            return Err(Error::param("pair", format!("({q}, {r}) needs q, r ≥ 2 and finite r")));
        }
        let gap = 1.0 / q + 1.5 / r - 0.75;
        if gap.abs() > 1e-12 {
            return Err(Error::param(
                "pair",
                format!("({q}, {r}) is not admissible: 1/q + 3/(2r) − 3/4 = {gap:e}"),
            ));
        }
        Ok(AdmissiblePair { q, r })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// (∞, 2), (10/3, 10/3) and the endpoint (2, 6).
    pub fn defaults() -> Vec<AdmissiblePair> {
        vec![
            AdmissiblePair { q: f64::INFINITY, r: 2.0 },
            AdmissiblePair {
                q: 10.0 / 3.0,
                r: 10.0 / 3.0,
            },
            AdmissiblePair { q: 2.0, r: 6.0 },
        ]
    }
}

impl TryFrom<(f64, f64)> for AdmissiblePair {
    type Error = Error;

    fn try_from((q, r): (f64, f64)) -> Result<Self> {
        AdmissiblePair::new(q, r)
    }
}

impl From<AdmissiblePair> for (f64, f64) {
    fn from(p: AdmissiblePair) -> Self {
        (p.q, p.r)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScatteringReport {
    pub times: Vec<f64>,
    /// `‖v_{i+1} − v_i‖_{H^s}` for consecutive pullbacks.
    pub increments: Vec<f64>,
    /// `‖v_i‖_{L²}` for each pullback.
    pub pullback_norms: Vec<f64>,
    /// The last three increments are strictly decreasing.
    pub monotone_tail: bool,
    #[serde(skip)]
    pub pullbacks: Vec<Field>,
}

/// Pulls every valid snapshot back by the free flow, `v_i = S^L(−t_i)u(t_i)`, and
/// measures successive `H^s` differences.
pub fn asymptotic_state_probe(traj: &Trajectory, s: f64, alpha: f64) -> Result<ScatteringReport> {
    let snaps = if traj.records.is_empty() {
        &traj.snapshots[..]
    } else {
        traj.valid_snapshots()
    };
    if snaps.len() < 3 {
        return Err(Error::InsufficientSnapshots {
            needed: 3,
            got: snaps.len(),
        });
    }
    let pullbacks: Vec<Field> = snaps
        .iter()
        .map(|u| linear_propagate(u, -u.t(), alpha).with_time(u.t()))
        .collect();
    let spec = SobolevSpec::inhomogeneous(s);
    let increments: Vec<f64> = pullbacks
        .windows(2)
        .map(|w| w[1].sub(&w[0]).map(|d| sobolev_norm(&d, spec)))
        .collect::<Result<_>>()?;
    let monotone_tail = increments.len() >= 3 && {
        let tail = &increments[increments.len() - 3..];
        tail[0] > tail[1] && tail[1] > tail[2]
    };
    Ok(ScatteringReport {
        times: snaps.iter().map(|u| u.t()).collect(),
        increments,
        pullback_norms: pullbacks.iter().map(|v| v.l2_norm()).collect(),
        monotone_tail,
        pullbacks,
    })
}

/// `‖⟨∇⟩^s u‖_{L^r}`.
pub fn bessel_lr_norm(field: &Field, s: f64, r: f64) -> f64 {
    lebesgue_norm(&bessel_potential(field, s), r)
}

/// `(∫ g(t)^q dt)^{1/q}` by the trapezoid rule, or `sup g` when `q = ∞`.
pub fn time_norm(times: &[f64], values: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        return values.iter().fold(0.0, |a, &v| a.max(v));
    }
    let powered: Vec<f64> = values.iter().map(|v| v.powf(q)).collect();
    crate::numeric::trapezoid(times, &powered).powf(1.0 / q)
}

/// Running `(∫₀^{t_i} g^q)^{1/q}` (running sup for `q = ∞`).
pub fn running_time_norm(times: &[f64], values: &[f64], q: f64) -> Vec<f64> {
    if q.is_infinite() {
        let mut acc = 0.0f64;
        return values
            .iter()
            .map(|&v| {
                acc = acc.max(v);
                acc
            })
            .collect();
    }
    let powered: Vec<f64> = values.iter().map(|v| v.powf(q)).collect();
    cumulative_trapezoid(times, &powered)
        .into_iter()
        .map(|v| v.powf(1.0 / q))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StrichartzNorm {
    pub pair: AdmissiblePair,
    pub value: f64,
}

/// `‖⟨∇⟩^s u‖_{L^q_t L^r_x}` over the valid snapshots, for every pair.
pub fn strichartz_monitor(traj: &Trajectory, pairs: &[AdmissiblePair], s: f64) -> Vec<StrichartzNorm> {
    let snaps = if traj.records.is_empty() {
        &traj.snapshots[..]
    } else {
        traj.valid_snapshots()
    };
    let times: Vec<f64> = snaps.iter().map(|u| u.t()).collect();
    let smoothed: Vec<Field> = snaps.iter().map(|u| bessel_potential(u, s)).collect();
    pairs
        .iter()
        .map(|&pair| {
            let spatial: Vec<f64> = smoothed.iter().map(|u| lebesgue_norm(u, pair.r)).collect();
            StrichartzNorm {
                pair,
                value: time_norm(&times, &spatial, pair.q),
            }
        })
        .collect()
}

/// Records `‖⟨∇⟩^s u‖_{L^r}` for each pair.
pub struct StrichartzDiagnostic {
    pairs: Vec<AdmissiblePair>,
    s: f64,
}

impl StrichartzDiagnostic {
    pub fn new(pairs: Vec<AdmissiblePair>, s: f64) -> Self {
        StrichartzDiagnostic { pairs, s }
    }
}

impl Diagnostic for StrichartzDiagnostic {
    fn columns(&self) -> Vec<String> {
        (0..self.pairs.len()).map(columns::strichartz_lr).collect()
    }

    fn evaluate(&self, field: &Field) -> Vec<f64> {
        let smoothed = bessel_potential(field, self.s);
        self.pairs.iter().map(|p| lebesgue_norm(&smoothed, p.r)).collect()
    }
}

/// Records `‖u‖_{Ḣ^{1/2}}`, `‖u‖_{H^s}` and `‖u‖⁴_{L⁴}`.
pub struct NormDiagnostic {
    s: f64,
}

impl NormDiagnostic {
    pub fn new(s: f64) -> Self {
        NormDiagnostic { s }
    }
}

impl Diagnostic for NormDiagnostic {
    fn columns(&self) -> Vec<String> {
        vec![
            columns::HDOT_HALF.to_string(),
            columns::HS_NORM.to_string(),
            columns::L4X_FOURTH.to_string(),
        ]
    }

    fn evaluate(&self, field: &Field) -> Vec<f64> {
        vec![
            sobolev_norm(field, SobolevSpec::homogeneous(0.5)),
            sobolev_norm(field, SobolevSpec::inhomogeneous(self.s)),
            lebesgue_norm(field, 4.0).powi(4),
        ]
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct L4Accumulation {
    pub times: Vec<f64>,
    /// `∫₀^{t_i} ‖u‖⁴_{L⁴} dt`, nondecreasing.
    pub running: Vec<f64>,
    pub epsilon: f64,
    /// Consecutive intervals on each of which the accumulated `∫∫|u|⁴` stays
    /// within `ε⁴` (an interval spanning one sample step may exceed it).
    pub intervals: Vec<(f64, f64)>,
}

impl L4Accumulation {
    pub fn total(&self) -> f64 {
        self.running.last().copied().unwrap_or(0.0)
    }
}

/// Running trapezoid integral of the `‖u‖⁴_{L⁴}` column over the valid records,
/// plus a greedy split of the window into maximal intervals with
/// `‖u‖_{L⁴_{t,x}} ≤ ε`.
pub fn spacetime_l4_accumulator(traj: &Trajectory, epsilon: f64) -> Result<L4Accumulation> {
    if !(epsilon > 0.0) {
        return Err(Error::param("epsilon", "must be positive"));
    }
    let k = traj.valid_prefix_len();
    let col = traj.column(columns::L4X_FOURTH)?;
    let times = traj.times()[..k].to_vec();
    let mut running = Vec::with_capacity(k);
    let mut acc = 0.0;
    for i in 0..k {
        if i > 0 {
            // clamp so roundoff can never make the sequence decrease
            acc += (0.5 * (times[i] - times[i - 1]) * (col[i] + col[i - 1])).max(0.0);
        }
        running.push(acc);
    }
    let budget = epsilon.powi(4);
    let mut intervals = Vec::new();
    if k > 0 {
        let mut start = 0;
        let mut j = 1;
        while j < k {
            if running[j] - running[start] > budget {
                let end = if j - 1 > start { j - 1 } else { j };
                intervals.push((times[start], times[end]));
                start = end;
                j = end + 1;
            } else {
                j += 1;
            }
        }
        if start < k - 1 || intervals.is_empty() {
            intervals.push((times[start], times[k - 1]));
        }
    }
    Ok(L4Accumulation {
        times,
        running,
        epsilon,
        intervals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::initial::{gaussian, GaussianSpec};
    use crate::integrator::{evolve, NlsParams, StepperConfig};
    use crate::record::{DiagnosticRecord, FnDiagnostic};

    #[test]
    fn admissibility() {
        assert!(AdmissiblePair::new(2.0, 4.0).is_err());
        assert!(AdmissiblePair::new(f64::INFINITY, 2.0).is_ok());
        assert!(AdmissiblePair::new(2.0, 6.0).is_ok());
        assert!(AdmissiblePair::new(10.0 / 3.0, 10.0 / 3.0).is_ok());
        assert!(AdmissiblePair::new(4.0, 3.0).is_ok());
        assert!(AdmissiblePair::new(1.5, 18.0).is_err());
        for p in AdmissiblePair::defaults() {
            assert!((1.0 / p.q() + 1.5 / p.r() - 0.75).abs() <= 1e-12);
        }
    }

    fn constant_trajectory(value: f64, times: &[f64]) -> Trajectory {
        let mut traj = Trajectory::new(vec![columns::L4X_FOURTH.to_string()]);
        traj.records = times
            .iter()
            .map(|&t| DiagnosticRecord {
                t,
                valid: true,
                values: vec![value],
            })
            .collect();
        traj
    }

    #[test]
    fn accumulator_on_constant_integrand() {
        let times: Vec<f64> = (0..=100).map(|i| 0.01 * i as f64).collect();
        let c = 3.0;
        let traj = constant_trajectory(c, &times);
        let eps: f64 = 0.5;
        let acc = spacetime_l4_accumulator(&traj, eps).unwrap();
        assert!((acc.total() - c).abs() < 1e-12);
        assert!(acc.running.windows(2).all(|w| w[1] >= w[0]));
        let budget = eps.powi(4);
        assert!(acc.intervals.len() as f64 >= (c / budget).ceil());
        for w in acc.intervals.windows(2) {
            assert_eq!(w[0].1, w[1].0);
        }
        for &(a, b) in &acc.intervals {
            assert!(c * (b - a) <= budget + 1e-12);
        }
        assert_eq!(acc.intervals.first().unwrap().0, 0.0);
        assert_eq!(acc.intervals.last().unwrap().1, 1.0);
    }

    #[test]
    fn accumulator_on_zero_field() {
        let times: Vec<f64> = (0..=10).map(|i| 0.1 * i as f64).collect();
        let acc = spacetime_l4_accumulator(&constant_trajectory(0.0, &times), 0.1).unwrap();
        assert!(acc.running.iter().all(|v| *v == 0.0));
        assert_eq!(acc.intervals, vec![(0.0, 1.0)]);
    }

    #[test]
    fn strichartz_on_static_trajectory() {
        let g = Grid::cube(16, 8.0).unwrap();
        let u = gaussian(&g, &GaussianSpec::new(1.0, 1.0), 1);
        let mut traj = Trajectory::new(vec![]);
        let t_final: f64 = 0.8;
        traj.snapshots = (0..=4).map(|i| u.clone().with_time(0.2 * i as f64)).collect();
        let s = 0.5;
        for norm in strichartz_monitor(&traj, &AdmissiblePair::defaults(), s) {
            let spatial = bessel_lr_norm(&u, s, norm.pair.r());
            let expect = if norm.pair.q().is_infinite() {
                spatial
            } else {
                t_final.powf(1.0 / norm.pair.q()) * spatial
            };
            assert!((norm.value - expect).abs() <= 1e-12 * expect);
        }
    }

    #[test]
    fn linear_run_pullbacks_coincide() {
        let g = Grid::cube(32, 20.0).unwrap();
        let u = gaussian(&g, &GaussianSpec::new(1.0, 1.0).with_chirp(0.2), 1);
        let cfg = StepperConfig::new(0.05, 0.4).with_cadence(0.1, 0.1);
        let traj = evolve(&u, &NlsParams::linear(), &cfg, &[]).unwrap();
        let report = asymptotic_state_probe(&traj, 1.0, 1.0).unwrap();
        assert_eq!(report.increments.len(), 4);
        assert!(report.increments.iter().all(|d| *d <= 1e-12), "{:?}", report.increments);
        for n in &report.pullback_norms {
            assert!((n - u.l2_norm()).abs() <= 1e-12 * u.l2_norm());
        }
    }

    #[test]
    fn probe_needs_three_snapshots() {
        let g = Grid::cube(8, 4.0).unwrap();
        let u = gaussian(&g, &GaussianSpec::new(1.0, 0.5), 1);
        let traj = evolve(&u, &NlsParams::linear(), &StepperConfig::new(0.1, 0.1), &[]).unwrap();
        assert!(matches!(
            asymptotic_state_probe(&traj, 0.0, 1.0),
            Err(Error::InsufficientSnapshots { .. })
        ));
    }

    #[test]
    fn infinite_pair_with_zero_s_is_sup_of_mass_norm() {
        let g = Grid::cube(16, 8.0).unwrap();
        let u = gaussian(&g, &GaussianSpec::new(1.0, 1.0).with_chirp(0.5), 1);
        let cfg = StepperConfig::new(0.02, 0.2).with_cadence(0.02, 0.02);
        let d = FnDiagnostic::new("unused", |_: &Field| 0.0);
        let traj = evolve(&u, &NlsParams::cubic_defocusing(), &cfg, &[&d]).unwrap();
        let pair = AdmissiblePair::new(f64::INFINITY, 2.0).unwrap();
        let norm = strichartz_monitor(&traj, &[pair], 0.0)[0].value;
        let sup = traj.column(columns::MASS).unwrap().iter().fold(0.0f64, |a, m| a.max(m.sqrt()));
        assert!((norm - sup).abs() <= 1e-12 * sup);
    }
}
