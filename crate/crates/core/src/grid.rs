//! Periodic box geometry and its wavenumber lattice.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::FftNd;

/// Box geometry: `n` points per axis on a cube of side `length` in `dim` dimensions.
///
/// Node `j` on each axis sits at `x_j = -length/2 + j·dx`, so the box centre is a node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dim: usize,
    pub n: usize,
    pub length: f64,
}

impl GridSpec {
    pub fn new(dim: usize, n: usize, length: f64) -> Self {
        GridSpec { dim, n, length }
    }

    pub fn cube(n: usize, length: f64) -> Self {
        GridSpec::new(3, n, length)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dim) {
            return Err(Error::InvalidGrid(format!("dim must be 1..=3, got {}", self.dim)));
        }
        if self.n < 4 || self.n % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "n must be even and at least 4, got {}",
                self.n
            )));
        }
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "length must be positive, got {}",
                self.length
            )));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Integer frequency of FFT index `j` on an axis of `n` points, in `[-n/2, n/2)`.
pub fn frequency_index(j: usize, n: usize) -> i64 {
    if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

#[derive(Debug)]
struct GridData {
    spec: GridSpec,
    dx: f64,
    coords: Vec<f64>,
    wavenumbers: Vec<f64>,
    k_squared: Vec<f64>,
    fft: FftNd,
}

/// A validated grid with precomputed coordinates, wavenumbers and transform plans.
///
/// Cloning is cheap; clones share the same plans.
#[derive(Debug, Clone)]
pub struct Grid(Arc<GridData>);

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.spec == other.0.spec
    }
}

impl Grid {
    pub fn new(spec: GridSpec) -> Result<Self> {
        spec.validate()?;
        let n = spec.n;
        let dx = spec.dx();
        let coords = (0..n).map(|j| -0.5 * spec.length + j as f64 * dx).collect();
        let wavenumbers: Vec<f64> = (0..n)
            .map(|j| TAU * frequency_index(j, n) as f64 / spec.length)
            .collect();
        let mut k_squared = vec![0.0; spec.len()];
        for (flat, k2) in k_squared.iter_mut().enumerate() {
            let mut rest = flat;
            for _ in 0..spec.dim {
                let k = wavenumbers[rest % n];
                *k2 += k * k;
                rest /= n;
            }
        }
        Ok(Grid(Arc::new(GridData {
            spec,
            dx,
            coords,
            wavenumbers,
            k_squared,
            fft: FftNd::new(spec.dim, n),
        })))
    }

    pub fn cube(n: usize, length: f64) -> Result<Self> {
        Grid::new(GridSpec::cube(n, length))
    }

    pub fn spec(&self) -> GridSpec {
        self.0.spec
    }

    pub fn dim(&self) -> usize {
        self.0.spec.dim
    }

    pub fn n(&self) -> usize {
        self.0.spec.n
    }

    pub fn length(&self) -> f64 {
        self.0.spec.length
    }

    pub fn dx(&self) -> f64 {
        self.0.dx
    }

    /// Quadrature weight `dx^dim`.
    pub fn cell_volume(&self) -> f64 {
        self.0.dx.powi(self.dim() as i32)
    }

    pub fn volume(&self) -> f64 {
        self.length().powi(self.dim() as i32)
    }

    pub fn len(&self) -> usize {
        self.0.k_squared.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Node coordinates along one axis.
    pub fn axis_coords(&self) -> &[f64] {
        &self.0.coords
    }

    /// Wavenumbers along one axis in FFT order.
    pub fn axis_wavenumbers(&self) -> &[f64] {
        &self.0.wavenumbers
    }

    /// `|k|²` for every mode in FFT order.
    pub fn k_squared(&self) -> &[f64] {
        &self.0.k_squared
    }

    /// Largest `|k|` on the lattice (the Nyquist corner).
    pub fn max_wavenumber(&self) -> f64 {
        (self.dim() as f64).sqrt() * PI * self.n() as f64 / self.length()
    }

    /// Largest single-axis wavenumber magnitude.
    pub fn nyquist(&self) -> f64 {
        PI * self.n() as f64 / self.length()
    }

    pub fn multi_index(&self, flat: usize) -> [usize; 3] {
        let n = self.n();
        let mut out = [0usize; 3];
        let mut rest = flat;
        for a in (0..self.dim()).rev() {
            out[a] = rest % n;
            rest /= n;
        }
        out
    }

    pub fn flat_index(&self, idx: [usize; 3]) -> usize {
        idx[..self.dim()].iter().fold(0, |acc, &i| acc * self.n() + i)
    }

    /// Physical position of node `flat`; unused trailing components are zero.
    pub fn point(&self, flat: usize) -> [f64; 3] {
        let idx = self.multi_index(flat);
        let mut p = [0.0; 3];
        for a in 0..self.dim() {
            p[a] = self.0.coords[idx[a]];
        }
        p
    }

    pub fn wavevector(&self, flat: usize) -> [f64; 3] {
        let idx = self.multi_index(flat);
        let mut k = [0.0; 3];
        for a in 0..self.dim() {
            k[a] = self.0.wavenumbers[idx[a]];
        }
        k
    }

    /// True when some axis index of `flat` is the unpaired Nyquist index `n/2`.
    pub fn is_nyquist(&self, flat: usize) -> bool {
        let idx = self.multi_index(flat);
        idx[..self.dim()].iter().any(|&i| i == self.n() / 2)
    }

    /// Index of the grid node at `point`, if `point` coincides with a node to within `1e-9·dx`.
    pub fn node_at(&self, point: [f64; 3]) -> Option<usize> {
        let mut idx = [0usize; 3];
        for a in 0..self.dim() {
            let j = (point[a] + 0.5 * self.length()) / self.dx();
            let r = j.round();
            if (j - r).abs() > 1e-9 || r < 0.0 || r >= self.n() as f64 {
                return None;
            }
            idx[a] = r as usize;
        }
        if point[self.dim()..].iter().any(|&c| c != 0.0) {
            return None;
        }
        Some(self.flat_index(idx))
    }

    pub fn contains(&self, point: [f64; 3]) -> bool {
        let half = 0.5 * self.length();
        (0..self.dim()).all(|a| point[a] >= -half && point[a] < half)
    }

    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        self.0.fft.forward(data);
    }

    pub(crate) fn inverse(&self, data: &mut [Complex64]) {
        self.0.fft.inverse(data);
    }

    /// Factor turning `Σ|û|²` into `∫|u|² dx`: `V / n^{2·dim}`.
    pub(crate) fn parseval_factor(&self) -> f64 {
        self.volume() / (self.len() as f64 * self.len() as f64)
    }
}
