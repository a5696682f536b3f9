use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::numeric::par_sum;

/// A complex field sampled on a grid at time `t`.
#[derive(Debug, Clone)]
pub struct Field {
    grid: Grid,
    values: Vec<Complex64>,
    t: f64,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<Complex64>, t: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::param(
                "values",
                format!("expected {} samples, got {}", grid.len(), values.len()),
            ));
        }
        let field = Field { grid, values, t };
        if !field.is_finite() {
            return Err(Error::NonFinite {
                t,
                last_good_t: f64::NAN,
            });
        }
        Ok(field)
    }

    /// Builds a field without the finiteness scan; length must match.
    pub(crate) fn from_parts(grid: Grid, values: Vec<Complex64>, t: f64) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Field { grid, values, t }
    }

    pub fn zeros(grid: &Grid, t: f64) -> Self {
        Field::from_parts(grid.clone(), vec![Complex64::default(); grid.len()], t)
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: &Grid, t: f64, f: impl Fn([f64; 3]) -> Complex64 + Sync) -> Self {
        let values = (0..grid.len())
            .into_par_iter()
            .map(|i| f(grid.point(i)))
            .collect();
        Field::from_parts(grid.clone(), values, t)
    }

    /// Inverse of [`Field::spectrum`].
    pub fn from_spectrum(grid: &Grid, mut spectrum: Vec<Complex64>, t: f64) -> Self {
        assert_eq!(spectrum.len(), grid.len());
        grid.inverse(&mut spectrum);
        Field::from_parts(grid.clone(), spectrum, t)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    /// Unnormalized forward transform of the samples.
    pub fn spectrum(&self) -> Vec<Complex64> {
        let mut out = self.values.clone();
        self.grid.forward(&mut out);
        out
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// `∫|u|² dx`.
    pub fn mass(&self) -> f64 {
        par_sum(&self.values, |v| v.norm_sqr()) * self.grid.cell_volume()
    }

    pub fn l2_norm(&self) -> f64 {
        self.mass().sqrt()
    }

    pub fn max_modulus(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.re == 0.0 && v.im == 0.0)
    }

    pub fn same_grid(&self, other: &Field) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// `self - other` sample-wise, keeping `self`'s timestamp.
    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.same_grid(other)?;
        let values = self
            .values
            .par_iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Field::from_parts(self.grid.clone(), values, self.t))
    }

    /// `‖self − other‖_{L²}`.
    pub fn l2_distance(&self, other: &Field) -> Result<f64> {
        Ok(self.sub(other)?.l2_norm())
    }

    pub fn conj(&self) -> Field {
        let values = self.values.par_iter().map(|v| v.conj()).collect();
        Field::from_parts(self.grid.clone(), values, self.t)
    }

    /// Same samples relabelled onto `grid` (which must have the same point count).
    pub fn relabel(&self, grid: &Grid) -> Result<Field> {
        if grid.len() != self.grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(Field::from_parts(grid.clone(), self.values.clone(), self.t))
    }

    /// Fraction of the mass held by nodes on the outermost layer of the box
    /// (index 0 or n−1 along any axis).
    pub fn boundary_mass_fraction(&self) -> f64 {
        let total = self.mass();
        if total == 0.0 {
            return 0.0;
        }
        let n = self.grid.n();
        let dim = self.grid.dim();
        let grid = &self.grid;
        let edge = crate::numeric::par_sum_indexed(self.values.len(), |i| {
            let idx = grid.multi_index(i);
            if idx[..dim].iter().any(|&j| j == 0 || j == n - 1) {
                self.values[i].norm_sqr()
            } else {
                0.0
            }
        });
        edge * grid.cell_volume() / total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_samples() {
        let g = Grid::cube(4, 1.0).unwrap();
        let mut v = vec![Complex64::new(1.0, 0.0); 64];
        v[3] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(Field::new(g.clone(), v, 0.0), Err(Error::NonFinite { .. })));
        assert!(Field::new(g, vec![Complex64::default(); 10], 0.0).is_err());
    }

    #[test]
    fn parseval_holds() {
        let g = Grid::cube(8, 3.0).unwrap();
        let u = Field::from_fn(&g, 0.0, |p| {
            Complex64::new((p[0] + 2.0 * p[1]).sin(), (p[2] * p[0]).cos())
        });
        let spec = u.spectrum();
        let fourier: f64 = spec.iter().map(|c| c.norm_sqr()).sum::<f64>() * g.parseval_factor();
        assert!((fourier - u.mass()).abs() <= 1e-12 * u.mass());
    }
}
