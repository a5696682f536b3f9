//! Mass current, Morawetz actions, the interaction potential and the checks that
//! tie them to the evolution: the action identity, monotonicity of the
//! interaction potential and the spacetime L⁴ inequality.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fft::FftNd;
use crate::field::Field;
use crate::grid::{frequency_index, Grid};
use crate::integrator::NlsParams;
use crate::numeric::par_sum_indexed;
use crate::record::{columns, Diagnostic, Trajectory};
use crate::spectral::{gradient, gradient_from_spectrum};

/// `p(x) = Im[ū(x)∇u(x)]`, one real array per axis.
#[derive(Debug, Clone)]
pub struct MassCurrent {
    pub components: Vec<Vec<f64>>,
    pub t: f64,
}

fn current_from_gradient(field: &Field, grad: &[Field]) -> MassCurrent {
    let u = field.values();
    let components = grad
        .iter()
        .map(|g| {
            u.par_iter()
                .zip(g.values())
                .map(|(a, b)| (a.conj() * b).im)
                .collect()
        })
        .collect();
    MassCurrent {
        components,
        t: field.t(),
    }
}

pub fn mass_current(field: &Field) -> MassCurrent {
    current_from_gradient(field, &gradient(field))
}

/// Checks `∂_t|u|² = −2α∇·p` between two nearby states of the same trajectory:
/// the density difference quotient is compared with the divergence of the
/// averaged current. Returns `max|lhs − rhs| / max|lhs|`.
pub fn continuity_residual(earlier: &Field, later: &Field, alpha: f64) -> Result<f64> {
    earlier.same_grid(later)?;
    let dt = later.t() - earlier.t();
    if dt == 0.0 {
        return Err(Error::param("later", "fields must be at different times"));
    }
    let grid = earlier.grid();
    let p0 = mass_current(earlier);
    let p1 = mass_current(later);
    let mut divergence = vec![0.0; grid.len()];
    for axis in 0..grid.dim() {
        let avg: Vec<Complex64> = p0.components[axis]
            .iter()
            .zip(&p1.components[axis])
            .map(|(a, b)| Complex64::new(0.5 * (a + b), 0.0))
            .collect();
        let avg = Field::from_parts(grid.clone(), avg, earlier.t());
        let d = crate::spectral::derivative_spectrum(grid, &avg.spectrum(), axis);
        let d = Field::from_spectrum(grid, d, earlier.t());
        for (acc, v) in divergence.iter_mut().zip(d.values()) {
            *acc += v.re;
        }
    }
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for i in 0..grid.len() {
        let lhs = (later.values()[i].norm_sqr() - earlier.values()[i].norm_sqr()) / dt;
        let rhs = -2.0 * alpha * divergence[i];
        worst = worst.max((lhs - rhs).abs());
        scale = scale.max(lhs.abs());
    }
    Ok(if scale == 0.0 { worst } else { worst / scale })
}

fn check_center(grid: &Grid, y: [f64; 3]) -> Result<()> {
    if !grid.contains(y) {
        return Err(Error::param("y", format!("centre {y:?} lies outside the box")));
    }
    Ok(())
}

/// `(x − y)/|x − y|` at node `i`, zero at the node that coincides with `y`.
fn unit_vector(grid: &Grid, i: usize, y: [f64; 3]) -> ([f64; 3], f64) {
    let x = grid.point(i);
    let d = [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
    let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    if r <= 1e-9 * grid.dx() {
        ([0.0; 3], 0.0)
    } else {
        ([d[0] / r, d[1] / r, d[2] / r], r)
    }
}

fn angular_from_gradient(grid: &Grid, grad: &[Field], y: [f64; 3]) -> Vec<Vec<Complex64>> {
    let dim = grid.dim();
    let rows: Vec<[Complex64; 3]> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let (e, _) = unit_vector(grid, i, y);
            let mut g = [Complex64::default(); 3];
            for a in 0..dim {
                g[a] = grad[a].values()[i];
            }
            let radial: Complex64 = (0..dim).map(|a| g[a] * e[a]).sum();
            let mut out = [Complex64::default(); 3];
            for a in 0..dim {
                out[a] = g[a] - radial * e[a];
            }
            out
        })
        .collect();
    (0..dim).map(|a| rows.iter().map(|r| r[a]).collect()).collect()
}

/// `∇u − ê(ê·∇u)` with `ê = (x−y)/|x−y|`; at the node `x = y` the full gradient is kept.
pub fn angular_gradient(field: &Field, y: [f64; 3]) -> Result<Vec<Vec<Complex64>>> {
    check_center(field.grid(), y)?;
    Ok(angular_from_gradient(field.grid(), &gradient(field), y))
}

fn action_from_current(grid: &Grid, current: &MassCurrent, y: [f64; 3]) -> f64 {
    let dim = grid.dim();
    par_sum_indexed(grid.len(), |i| {
        let (e, _) = unit_vector(grid, i, y);
        (0..dim).map(|a| current.components[a][i] * e[a]).sum::<f64>()
    }) * grid.cell_volume()
}

/// `M_y = ∫ Im[ū∇u]·(x−y)/|x−y| dx`.
pub fn morawetz_action(field: &Field, y: [f64; 3]) -> Result<f64> {
    check_center(field.grid(), y)?;
    Ok(action_from_current(field.grid(), &mass_current(field), y))
}

/// FFT of the vector kernel `K(z) = z/|z|` on the doubled grid, ready for linear
/// (non-wrapping) convolution against densities living on the original grid.
pub struct InteractionKernel {
    grid: Grid,
    padded: FftNd,
    /// Transform of `K₀ + iK₁`.
    pair: Vec<Complex64>,
    /// Transform of `K₂` (3D only).
    third: Option<Vec<Complex64>>,
}

impl InteractionKernel {
    pub fn new(grid: &Grid) -> Self {
        let dim = grid.dim();
        let m = 2 * grid.n();
        let padded = FftNd::new(dim, m);
        let len = padded.len();
        let offsets = |i: usize| {
            let mut d = [0.0; 3];
            let mut rest = i;
            for a in (0..dim).rev() {
                d[a] = frequency_index(rest % m, m) as f64;
                rest /= m;
            }
            let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            if r == 0.0 {
                [0.0; 3]
            } else {
                [d[0] / r, d[1] / r, d[2] / r]
            }
        };
        let mut pair: Vec<Complex64> = (0..len)
            .into_par_iter()
            .map(|i| {
                let k = offsets(i);
                Complex64::new(k[0], if dim > 1 { k[1] } else { 0.0 })
            })
            .collect();
        padded.forward(&mut pair);
        let third = (dim == 3).then(|| {
            let mut v: Vec<Complex64> = (0..len)
                .into_par_iter()
                .map(|i| Complex64::new(offsets(i)[2], 0.0))
                .collect();
            padded.forward(&mut v);
            v
        });
        InteractionKernel {
            grid: grid.clone(),
            padded,
            pair,
            third,
        }
    }

    fn embed(&self, values: impl Fn(usize) -> f64 + Sync) -> Vec<Complex64> {
        let n = self.grid.n();
        let m = 2 * n;
        let dim = self.grid.dim();
        (0..self.padded.len())
            .into_par_iter()
            .map(|i| {
                let mut rest = i;
                let mut idx = [0usize; 3];
                for a in (0..dim).rev() {
                    idx[a] = rest % m;
                    rest /= m;
                }
                if idx[..dim].iter().all(|&j| j < n) {
                    Complex64::new(values(self.grid.flat_index(idx)), 0.0)
                } else {
                    Complex64::default()
                }
            })
            .collect()
    }

    /// `(K ⋆ ρ)` restricted to the original grid, one array per axis.
    pub fn convolve(&self, density: &[f64]) -> Vec<Vec<f64>> {
        let dim = self.grid.dim();
        let n = self.grid.n();
        let m = 2 * n;
        let mut rho_hat = self.embed(|i| density[i]);
        self.padded.forward(&mut rho_hat);
        let restrict = |buf: &[Complex64], pick: fn(&Complex64) -> f64| -> Vec<f64> {
            (0..self.grid.len())
                .map(|i| {
                    let idx = self.grid.multi_index(i);
                    let flat = idx[..dim].iter().fold(0, |acc, &j| acc * m + j);
                    pick(&buf[flat])
                })
                .collect()
        };
        let mut out = Vec::with_capacity(dim);
        let mut conv: Vec<Complex64> = rho_hat.par_iter().zip(&self.pair).map(|(a, b)| a * b).collect();
        self.padded.inverse(&mut conv);
        out.push(restrict(&conv, |c| c.re));
        if dim > 1 {
            out.push(restrict(&conv, |c| c.im));
        }
        if let Some(third) = &self.third {
            let mut conv: Vec<Complex64> = rho_hat.par_iter().zip(third).map(|(a, b)| a * b).collect();
            self.padded.inverse(&mut conv);
            out.push(restrict(&conv, |c| c.re));
        }
        out
    }

    fn potential_from_current(&self, field: &Field, current: &MassCurrent) -> f64 {
        let density: Vec<f64> = field.values().iter().map(|v| v.norm_sqr()).collect();
        let conv = self.convolve(&density);
        let dim = self.grid.dim();
        let cell = self.grid.cell_volume();
        par_sum_indexed(self.grid.len(), |i| {
            (0..dim).map(|a| current.components[a][i] * conv[a][i]).sum::<f64>()
        }) * cell
            * cell
    }

    /// `M(t) = ∫∫ |u(y)|² p(x)·(x−y)/|x−y| dx dy`.
    pub fn potential(&self, field: &Field) -> Result<f64> {
        if field.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(self.potential_from_current(field, &mass_current(field)))
    }
}

/// Interaction potential through zero-padded FFT convolution.
pub fn interaction_potential(field: &Field) -> f64 {
    InteractionKernel::new(field.grid())
        .potential(field)
        .expect("kernel built on the field's own grid")
}

/// Interaction potential by direct double summation over node pairs.
/// Cost is quadratic in the number of nodes; intended for small grids.
pub fn interaction_potential_direct(field: &Field) -> f64 {
    let grid = field.grid();
    let dim = grid.dim();
    let current = mass_current(field);
    let density: Vec<f64> = field.values().iter().map(|v| v.norm_sqr()).collect();
    let cell = grid.cell_volume();
    let total: f64 = (0..grid.len())
        .into_par_iter()
        .map(|x| {
            let px = grid.point(x);
            let mut acc = 0.0;
            for (y, rho) in density.iter().enumerate() {
                let (e, _) = unit_vector(grid, y, px);
                // unit_vector gives (y - x)/|y - x|; the kernel is (x - y)/|x - y|
                for a in 0..dim {
                    acc -= rho * current.components[a][x] * e[a];
                }
            }
            acc
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    total * cell * cell
}

/// Right-hand side of the Morawetz identity about a grid node `y` (3D).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityTerms {
    /// `4πα|u(t,y)|²`.
    pub point: f64,
    /// `∫ (2α/|x−y|) |∇̸_y u|² dx`.
    pub angular: f64,
    /// `μ∫ (2/|x−y|){|u|²f(|u|²) − F(|u|²)} dx`.
    pub nonlinear: f64,
}

impl IdentityTerms {
    pub fn sum(&self) -> f64 {
        self.point + self.angular + self.nonlinear
    }

    pub fn dominant(&self) -> f64 {
        self.point.abs().max(self.angular.abs()).max(self.nonlinear.abs())
    }
}

fn terms_from_gradient(field: &Field, grad: &[Field], params: &NlsParams, y: [f64; 3], node: usize) -> IdentityTerms {
    let grid = field.grid();
    let angular_grad = angular_from_gradient(grid, grad, y);
    let cell = grid.cell_volume();
    let u = field.values();
    let angular = par_sum_indexed(grid.len(), |i| {
        let (_, r) = unit_vector(grid, i, y);
        if r == 0.0 {
            return 0.0;
        }
        let sq: f64 = angular_grad.iter().map(|c| c[i].norm_sqr()).sum();
        sq / r
    }) * 2.0
        * params.alpha
        * cell;
    let nonlinear = if params.mu == 0.0 {
        0.0
    } else {
        par_sum_indexed(grid.len(), |i| {
            let (_, r) = unit_vector(grid, i, y);
            if r == 0.0 {
                return 0.0;
            }
            let z = u[i].norm_sqr();
            (z * params.f(z) - params.big_f(z)) / r
        }) * 2.0
            * params.mu
            * cell
    };
    IdentityTerms {
        point: 4.0 * PI * params.alpha * u[node].norm_sqr(),
        angular,
        nonlinear,
    }
}

fn require_node(grid: &Grid, y: [f64; 3]) -> Result<usize> {
    if grid.dim() != 3 {
        return Err(Error::UnsupportedDimension {
            dim: grid.dim(),
            what: "the Morawetz identity",
        });
    }
    grid.node_at(y)
        .ok_or_else(|| Error::param("centers", format!("{y:?} is not a grid node")))
}

/// Evaluates the identity's right-hand side at one instant.
pub fn identity_terms(field: &Field, params: &NlsParams, y: [f64; 3]) -> Result<IdentityTerms> {
    let node = require_node(field.grid(), y)?;
    Ok(terms_from_gradient(field, &gradient(field), params, y, node))
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentitySample {
    pub center: usize,
    pub t: f64,
    pub action: f64,
    pub fd_derivative: f64,
    pub terms: IdentityTerms,
    pub residual: f64,
    /// Residual divided by the dominant right-hand-side term.
    pub relative_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MorawetzReport {
    pub centers: Vec<[f64; 3]>,
    pub t_samples: Vec<f64>,
    /// `M_y` at every snapshot, one row per centre.
    pub actions: Vec<Vec<f64>>,
    pub samples: Vec<IdentitySample>,
    pub max_relative_residual: f64,
    /// Smallest right-hand-side term seen (sign audit).
    pub min_term: f64,
}

/// Compares the centred time difference of `M_y` against the identity's
/// right-hand side at every interior snapshot, for every centre.
pub fn identity_check(traj: &Trajectory, params: &NlsParams, centers: &[[f64; 3]]) -> Result<MorawetzReport> {
    let snaps = &traj.snapshots;
    if snaps.len() < 3 {
        return Err(Error::InsufficientSnapshots {
            needed: 3,
            got: snaps.len(),
        });
    }
    let dt0 = snaps[1].t() - snaps[0].t();
    for w in snaps.windows(2) {
        let d = w[1].t() - w[0].t();
        if (d - dt0).abs() > 1e-9 * dt0.abs().max(1e-300) {
            return Err(Error::param("trajectory", "snapshot cadence is not uniform"));
        }
    }
    let grid = snaps[0].grid();
    let nodes: Vec<usize> = centers.iter().map(|&y| require_node(grid, y)).collect::<Result<_>>()?;

    let grads: Vec<Vec<Field>> = snaps
        .iter()
        .map(|s| gradient_from_spectrum(s.grid(), &s.spectrum(), s.t()))
        .collect();
    let currents: Vec<MassCurrent> = snaps.iter().zip(&grads).map(|(s, g)| current_from_gradient(s, g)).collect();
    let actions: Vec<Vec<f64>> = centers
        .iter()
        .map(|&y| currents.iter().map(|c| action_from_current(grid, c, y)).collect())
        .collect();

    let mut samples = Vec::new();
    let mut max_rel = 0.0f64;
    let mut min_term = f64::INFINITY;
    for (ci, (&y, &node)) in centers.iter().zip(&nodes).enumerate() {
        for i in 1..snaps.len() - 1 {
            let fd = (actions[ci][i + 1] - actions[ci][i - 1]) / (snaps[i + 1].t() - snaps[i - 1].t());
            let terms = terms_from_gradient(&snaps[i], &grads[i], params, y, node);
            let residual = (fd - terms.sum()).abs();
            let dom = terms.dominant();
            let rel = if dom == 0.0 { residual } else { residual / dom };
            max_rel = max_rel.max(rel);
            min_term = min_term.min(terms.point).min(terms.angular).min(terms.nonlinear);
            samples.push(IdentitySample {
                center: ci,
                t: snaps[i].t(),
                action: actions[ci][i],
                fd_derivative: fd,
                terms,
                residual,
                relative_residual: rel,
            });
        }
    }
    Ok(MorawetzReport {
        centers: centers.to_vec(),
        t_samples: snaps.iter().map(|s| s.t()).collect(),
        actions,
        samples,
        max_relative_residual: max_rel,
        min_term,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Violation {
    pub t: f64,
    pub decrease: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub violations: Vec<Violation>,
    /// Largest decrease between consecutive samples (zero if nondecreasing).
    pub max_decrease: f64,
    pub tolerance: f64,
    pub samples_checked: usize,
}

/// Scans the interaction potential column over the valid part of the trajectory.
/// A violation is a drop larger than `1e-6·(max|M| + 1)`.
pub fn monotonicity_report(traj: &Trajectory) -> Result<MonotonicityReport> {
    let m = traj.column(columns::M_INTERACTION)?;
    let times = traj.times();
    let k = traj.valid_prefix_len();
    let m = &m[..k];
    let tolerance = 1e-6 * (m.iter().fold(0.0f64, |a, v| a.max(v.abs())) + 1.0);
    let mut violations = Vec::new();
    let mut max_decrease = 0.0f64;
    for i in 1..m.len() {
        let drop = m[i - 1] - m[i];
        max_decrease = max_decrease.max(drop);
        if drop > tolerance {
            violations.push(Violation {
                t: times[i],
                decrease: drop,
            });
        }
    }
    Ok(MonotonicityReport {
        violations,
        max_decrease,
        tolerance,
        samples_checked: m.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InequalityReport {
    /// `∫₀^T ∫|u|⁴ dx dt`.
    pub lhs: f64,
    /// `‖u₀‖²_{L²}·sup_t ‖u(t)‖²_{Ḣ^{1/2}}`.
    pub rhs: f64,
    pub ratio: f64,
}

/// Spacetime L⁴ bound over the valid part of the trajectory.
pub fn interaction_inequality_report(traj: &Trajectory) -> Result<InequalityReport> {
    let k = traj.valid_prefix_len();
    if traj.records.is_empty() || k == 0 {
        return Err(Error::EmptyTrajectory);
    }
    let l4 = traj.column(columns::L4X_FOURTH)?;
    let hdot = traj.column(columns::HDOT_HALF)?;
    let mass = traj.column(columns::MASS)?;
    let times = traj.times();
    let mut lhs = 0.0;
    for i in 1..k {
        lhs += 0.5 * (times[i] - times[i - 1]) * (l4[i] + l4[i - 1]);
    }
    let sup_hdot = hdot[..k].iter().fold(0.0f64, |a, v| a.max(v * v));
    let rhs = mass[0] * sup_hdot;
    let ratio = if rhs == 0.0 { 0.0 } else { lhs / rhs };
    Ok(InequalityReport { lhs, rhs, ratio })
}

/// Records `M_y` for each centre and the interaction potential.
pub struct MorawetzDiagnostic {
    centers: Vec<[f64; 3]>,
    kernel: InteractionKernel,
}

impl MorawetzDiagnostic {
    pub fn new(grid: &Grid, centers: Vec<[f64; 3]>) -> Result<Self> {
        for &y in &centers {
            check_center(grid, y)?;
        }
        Ok(MorawetzDiagnostic {
            centers,
            kernel: InteractionKernel::new(grid),
        })
    }
}

impl Diagnostic for MorawetzDiagnostic {
    fn columns(&self) -> Vec<String> {
        let mut names: Vec<String> = (0..self.centers.len()).map(columns::morawetz_action).collect();
        names.push(columns::M_INTERACTION.to_string());
        names
    }

    fn evaluate(&self, field: &Field) -> Vec<f64> {
        let current = mass_current(field);
        let mut out: Vec<f64> = self
            .centers
            .iter()
            .map(|&y| action_from_current(field.grid(), &current, y))
            .collect();
        out.push(self.kernel.potential_from_current(field, &current));
        out
    }
}
