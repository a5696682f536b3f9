//! Built-in initial data: Gaussians (optionally chirped or boosted), two-bump
//! configurations, lattice plane waves and seeded random band-limited fields.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid;

/// `u(x) = A·exp(−|x−c|²/w²)·exp(iβ|x−c|²)·exp(ik₀·x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaussianSpec {
    pub amplitude: f64,
    pub width: f64,
    pub center: [f64; 3],
    /// Quadratic phase coefficient β; positive values are outgoing.
    pub chirp: f64,
    pub wavevector: [f64; 3],
}

impl Default for GaussianSpec {
    fn default() -> Self {
        GaussianSpec {
            amplitude: 1.0,
            width: 1.0,
            center: [0.0; 3],
            chirp: 0.0,
            wavevector: [0.0; 3],
        }
    }
}

impl GaussianSpec {
    pub fn new(amplitude: f64, width: f64) -> Self {
        GaussianSpec {
            amplitude,
            width,
            ..Default::default()
        }
    }

    pub fn with_chirp(mut self, chirp: f64) -> Self {
        self.chirp = chirp;
        self
    }

    pub fn with_center(mut self, center: [f64; 3]) -> Self {
        self.center = center;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width > 0.0 && self.width.is_finite()) {
            return Err(Error::param("width", "must be positive"));
        }
        if !self.amplitude.is_finite() || !self.chirp.is_finite() {
            return Err(Error::param("amplitude", "must be finite"));
        }
        Ok(())
    }

    /// Value at `x` on ℝ^d (no periodization).
    pub fn eval(&self, x: [f64; 3]) -> Complex64 {
        self.evolved(x, 0.0, 0.0)
    }

    /// Closed-form free evolution under `i u_t + αΔu = 0` on ℝ^dim, evaluated at `x`
    /// (unused components of `x` must be zero).
    pub fn evolved_in(&self, dim: usize, x: [f64; 3], t: f64, alpha: f64) -> Complex64 {
        // u0 = A exp(-|x-c|²/(4a0)) e^{ik0·x}, 4a0 = 1/(1/w² − iβ)
        let k0 = self.wavevector;
        let k0sq: f64 = k0[..dim].iter().map(|k| k * k).sum();
        let mut shifted_sq = 0.0;
        let mut phase_lin = 0.0;
        for a in 0..dim {
            let drift = 2.0 * alpha * k0[a] * t;
            let y = x[a] - self.center[a] - drift;
            shifted_sq += y * y;
            phase_lin += k0[a] * x[a];
        }
        let four_a0 = Complex64::new(1.0, 0.0) / Complex64::new(1.0 / (self.width * self.width), -self.chirp);
        let four_a = four_a0 + Complex64::new(0.0, 4.0 * alpha * t);
        let ratio = four_a0 / four_a;
        let prefactor = ratio.powf(0.5 * dim as f64);
        let envelope = (-shifted_sq / four_a).exp();
        let plane = Complex64::from_polar(1.0, phase_lin - alpha * k0sq * t);
        self.amplitude * prefactor * envelope * plane
    }

    fn evolved(&self, x: [f64; 3], t: f64, alpha: f64) -> Complex64 {
        self.evolved_in(3, x, t, alpha)
    }
}

/// Sums `f(x + L·m)` over image offsets `m ∈ {−images..=images}^dim`.
pub fn periodize(grid: &Grid, images: i32, x: [f64; 3], f: impl Fn([f64; 3]) -> Complex64) -> Complex64 {
    let l = grid.length();
    let dim = grid.dim();
    let range = |a: usize| if a < dim { -images..=images } else { 0..=0 };
    let mut acc = Complex64::default();
    for i in range(0) {
        for j in range(1) {
            for k in range(2) {
                acc += f([x[0] + i as f64 * l, x[1] + j as f64 * l, x[2] + k as f64 * l]);
            }
        }
    }
    acc
}

/// Periodized Gaussian sampled on the grid.
pub fn gaussian(grid: &Grid, spec: &GaussianSpec, images: i32) -> Field {
    free_gaussian(grid, spec, images, 0.0, 0.0)
}

/// Periodized closed-form free evolution of a Gaussian at time `t`.
pub fn free_gaussian(grid: &Grid, spec: &GaussianSpec, images: i32, t: f64, alpha: f64) -> Field {
    let dim = grid.dim();
    Field::from_fn(grid, t, |x| {
        periodize(grid, images, x, |y| spec.evolved_in(dim, y, t, alpha))
    })
}

/// Two identical Gaussians displaced by `±separation/2` along the first axis.
pub fn two_bump(grid: &Grid, spec: &GaussianSpec, separation: f64, images: i32) -> Field {
    let mut left = *spec;
    let mut right = *spec;
    left.center[0] -= 0.5 * separation;
    right.center[0] += 0.5 * separation;
    let dim = grid.dim();
    Field::from_fn(grid, 0.0, |x| {
        periodize(grid, images, x, |y| {
            left.evolved_in(dim, y, 0.0, 0.0) + right.evolved_in(dim, y, 0.0, 0.0)
        })
    })
}

/// `A·e^{ik·x}` with `k = 2π m / L` on the lattice.
pub fn plane_wave(grid: &Grid, amplitude: Complex64, modes: [i64; 3]) -> Field {
    let l = grid.length();
    let dim = grid.dim();
    let k: Vec<f64> = (0..dim).map(|a| std::f64::consts::TAU * modes[a] as f64 / l).collect();
    Field::from_fn(grid, 0.0, |x| {
        let phase: f64 = (0..dim).map(|a| k[a] * x[a]).sum();
        amplitude * Complex64::from_polar(1.0, phase)
    })
}

/// Random field whose spectrum is supported on `|k| ≤ kmax` (Nyquist excluded),
/// with independent standard complex Gaussian coefficients, scaled to unit L² norm.
pub fn random_band_limited(grid: &Grid, kmax: f64, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k2max = kmax * kmax;
    let spectrum: Vec<Complex64> = (0..grid.len())
        .map(|i| {
            let re: f64 = rng.gen_range(-1.0..1.0);
            let im: f64 = rng.gen_range(-1.0..1.0);
            if grid.k_squared()[i] <= k2max && !grid.is_nyquist(i) {
                Complex64::new(re, im)
            } else {
                Complex64::default()
            }
        })
        .collect();
    let f = Field::from_spectrum(grid, spectrum, 0.0);
    let norm = f.l2_norm();
    if norm == 0.0 {
        return f;
    }
    let values = f.values().iter().map(|v| v / norm).collect();
    Field::from_parts(grid.clone(), values, 0.0)
}

/// Random band-limited field multiplied by a Gaussian envelope of the given width
/// centred at the origin, so it decays well inside the box.
pub fn localized_random(grid: &Grid, kmax: f64, envelope_width: f64, seed: u64) -> Field {
    let base = random_band_limited(grid, kmax, seed);
    let w2 = envelope_width * envelope_width;
    let values = base
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let p = grid.point(i);
            v * (-(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) / w2).exp()
        })
        .collect();
    Field::from_parts(grid.clone(), values, 0.0)
}
