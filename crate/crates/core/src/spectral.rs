//! Fourier-side operations on periodic fields: derivatives, Sobolev and Lebesgue
//! norms, sharp frequency projections and the free Schrödinger propagator.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::field::Field;
use crate::grid::Grid;
use crate::numeric::{par_sum, par_sum_indexed};

/// Relative spectral change below which a multiplier is treated as acting trivially
/// and the input samples are returned untouched.
pub const NEGLIGIBLE_CHANGE: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SobolevSpec {
    pub s: f64,
    pub homogeneous: bool,
}

impl SobolevSpec {
    pub fn homogeneous(s: f64) -> Self {
        SobolevSpec { s, homogeneous: true }
    }

    pub fn inhomogeneous(s: f64) -> Self {
        SobolevSpec {
            s,
            homogeneous: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    Low,
    High,
}

/// Spectrum of `∂_axis u` given `û`. The unpaired Nyquist index along `axis` is zeroed.
pub(crate) fn derivative_spectrum(grid: &Grid, spectrum: &[Complex64], axis: usize) -> Vec<Complex64> {
    let n = grid.n();
    let stride = n.pow((grid.dim() - 1 - axis) as u32);
    let ks = grid.axis_wavenumbers();
    spectrum
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let j = (i / stride) % n;
            if j == n / 2 {
                Complex64::default()
            } else {
                c * Complex64::new(0.0, ks[j])
            }
        })
        .collect()
}

/// Gradient from a precomputed spectrum; one field per spatial axis.
pub(crate) fn gradient_from_spectrum(grid: &Grid, spectrum: &[Complex64], t: f64) -> Vec<Field> {
    (0..grid.dim())
        .map(|axis| Field::from_spectrum(grid, derivative_spectrum(grid, spectrum, axis), t))
        .collect()
}

/// Spectral gradient, one component per axis.
pub fn gradient(field: &Field) -> Vec<Field> {
    gradient_from_spectrum(field.grid(), &field.spectrum(), field.t())
}

/// `(Σ_k w(k)^{2s} |û(k)|² · V/n^{2d})^{1/2}` for a precomputed spectrum.
pub(crate) fn sobolev_norm_of_spectrum(grid: &Grid, spectrum: &[Complex64], spec: SobolevSpec) -> f64 {
    let k2 = grid.k_squared();
    let sum = par_sum_indexed(spectrum.len(), |i| {
        let power = spectrum[i].norm_sqr();
        if power == 0.0 {
            return 0.0;
        }
        if spec.homogeneous {
            if k2[i] == 0.0 {
                0.0
            } else {
                k2[i].powf(spec.s) * power
            }
        } else {
            (1.0 + k2[i]).powf(spec.s) * power
        }
    });
    (sum * grid.parseval_factor()).sqrt()
}

/// `‖u‖_{H^s}` (weight `⟨k⟩`) or `‖u‖_{Ḣ^s}` (weight `|k|`, zero mode dropped).
pub fn sobolev_norm(field: &Field, spec: SobolevSpec) -> f64 {
    sobolev_norm_of_spectrum(field.grid(), &field.spectrum(), spec)
}

/// `(Σ|u|^p dx^d)^{1/p}`; `p = ∞` gives the maximum modulus.
///
/// Panics unless `p ≥ 1`.
pub fn lebesgue_norm(field: &Field, p: f64) -> f64 {
    assert!(p >= 1.0, "Lebesgue exponent must be at least 1, got {p}");
    if p.is_infinite() {
        return field.max_modulus();
    }
    let cell = field.grid().cell_volume();
    let sum = if p == 2.0 {
        par_sum(field.values(), |v| v.norm_sqr())
    } else if p == 4.0 {
        par_sum(field.values(), |v| v.norm_sqr().powi(2))
    } else {
        par_sum(field.values(), |v| v.norm().powf(p))
    };
    (sum * cell).powf(1.0 / p)
}

/// Multiplies `û` by a real radial symbol `m(|k|²)`.
///
/// When the change `Σ|(m−1)û|²` is below `NEGLIGIBLE_CHANGE²·Σ|û|²` the field is
/// returned unchanged, so trivially-acting multipliers are bit-exact identities.
pub fn apply_radial_multiplier(field: &Field, symbol: impl Fn(f64) -> f64 + Sync) -> Field {
    let grid = field.grid();
    let k2 = grid.k_squared();
    let mults: Vec<f64> = k2.par_iter().map(|&k| symbol(k)).collect();
    if mults.iter().all(|&m| m == 1.0) {
        return field.clone();
    }
    let mut spectrum = field.spectrum();
    let total = par_sum(&spectrum, |c| c.norm_sqr());
    let change = par_sum_indexed(spectrum.len(), |i| (mults[i] - 1.0).powi(2) * spectrum[i].norm_sqr());
    if change <= NEGLIGIBLE_CHANGE * NEGLIGIBLE_CHANGE * total {
        return field.clone();
    }
    spectrum
        .par_iter_mut()
        .zip(&mults)
        .for_each(|(c, &m)| *c *= m);
    Field::from_spectrum(grid, spectrum, field.t())
}

/// Sharp Fourier cutoff. Modes with `|k| ≤ cutoff` belong to the low band, all
/// others to the high band, so the two bands partition the lattice.
pub fn frequency_project(field: &Field, cutoff: f64, band: Band) -> Field {
    assert!(cutoff >= 0.0, "cutoff must be nonnegative");
    let c2 = cutoff * cutoff;
    apply_radial_multiplier(field, |k2| {
        let low = k2 <= c2;
        if low == (band == Band::Low) {
            1.0
        } else {
            0.0
        }
    })
}

/// Free flow `e^{iαtΔ}`: multiplies mode `k` by `e^{−iα|k|²dt}` and advances the clock.
pub fn linear_propagate(field: &Field, dt: f64, alpha: f64) -> Field {
    let grid = field.grid();
    let mut spectrum = field.spectrum();
    spectrum
        .par_iter_mut()
        .zip(grid.k_squared())
        .for_each(|(c, &k2)| *c *= Complex64::from_polar(1.0, -alpha * k2 * dt));
    Field::from_spectrum(grid, spectrum, field.t() + dt)
}

/// Applies `⟨∇⟩^s` (symbol `(1+|k|²)^{s/2}`).
pub fn bessel_potential(field: &Field, s: f64) -> Field {
    if s == 0.0 {
        return field.clone();
    }
    apply_radial_multiplier(field, |k2| (1.0 + k2).powf(0.5 * s))
}
