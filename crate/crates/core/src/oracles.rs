//! Brute-force references for the test suite. Nothing in here calls into
//! the analytic derivative code it is meant to check.

use nalgebra::DMatrix;
use thiserror::Error;

/// Central differences with the relative step `h·(1 + |x|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdScheme {
    pub h: f64,
}

impl FdScheme {
    pub fn gradient() -> Self {
        FdScheme { h: 1e-6 }
    }

    pub fn jacobian() -> Self {
        FdScheme { h: 1e-7 }
    }

    pub fn step(&self, x: f64) -> f64 {
        self.h * (1.0 + x.abs())
    }
}

pub fn fd_gradient<E>(
    mut f: impl FnMut(&[f64]) -> Result<f64, E>,
    x: &[f64],
    scheme: FdScheme,
) -> Result<Vec<f64>, E> {
    let mut work = x.to_vec();
    let mut g = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let h = scheme.step(x[i]);
        work[i] = x[i] + h;
        let fp = f(&work)?;
        work[i] = x[i] - h;
        let fm = f(&work)?;
        work[i] = x[i];
        g.push((fp - fm) / (2.0 * h));
    }
    Ok(g)
}

/// Column `j` holds the central difference with respect to `x[j]`.
pub fn fd_jacobian<E>(
    mut f: impl FnMut(&[f64]) -> Result<Vec<f64>, E>,
    x: &[f64],
    scheme: FdScheme,
) -> Result<DMatrix<f64>, E> {
    let mut work = x.to_vec();
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(x.len());
    for j in 0..x.len() {
        let h = scheme.step(x[j]);
        work[j] = x[j] + h;
        let fp = f(&work)?;
        work[j] = x[j] - h;
        let fm = f(&work)?;
        work[j] = x[j];
        cols.push(fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * h)).collect());
    }
    let rows = cols.first().map_or(0, Vec::len);
    Ok(DMatrix::from_fn(rows, x.len(), |i, j| cols[j][i]))
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("layer {0}: thickness and conductivity must be positive")]
    BadLayer(usize),
    #[error("no layers")]
    Empty,
}

/// Steady one-dimensional conduction through layers stacked bottom to top.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesProfile {
    /// `(height, temperature)` at the bottom, every interface, and the top
    pub knots: Vec<(f64, f64)>,
    /// heat flux per unit area, positive upwards
    pub flux: f64,
}

impl SeriesProfile {
    /// Temperature at `height` measured from the bottom; clamped to the ends.
    pub fn at(&self, height: f64) -> f64 {
        let first = self.knots[0];
        if height <= first.0 {
            return first.1;
        }
        for w in self.knots.windows(2) {
            let ((z0, t0), (z1, t1)) = (w[0], w[1]);
            if height <= z1 {
                return t0 + (t1 - t0) * (height - z0) / (z1 - z0);
            }
        }
        self.knots.last().expect("non-empty").1
    }

    /// Flux through each layer recomputed from its own temperature drop.
    pub fn layer_fluxes(&self, conductivities: &[f64]) -> Vec<f64> {
        self.knots
            .windows(2)
            .zip(conductivities)
            .map(|(w, k)| -k * (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
            .collect()
    }
}

/// `layers` holds `(thickness, conductivity)` pairs, bottom first.
pub fn series_resistance_profile(layers: &[(f64, f64)], t_bottom: f64, t_top: f64) -> Result<SeriesProfile, OracleError> {
    if layers.is_empty() {
        return Err(OracleError::Empty);
    }
    if let Some(i) = layers.iter().position(|&(t, k)| !(t > 0.0 && k > 0.0)) {
        return Err(OracleError::BadLayer(i));
    }
    let resistance: f64 = layers.iter().map(|(t, k)| t / k).sum();
    let flux = -(t_top - t_bottom) / resistance;
    let mut knots = vec![(0.0, t_bottom)];
    let (mut z, mut temp) = (0.0, t_bottom);
    for &(t, k) in layers {
        z += t;
        temp -= flux * t / k;
        knots.push((z, temp));
    }
    // pin the far end exactly
    knots.last_mut().expect("non-empty").1 = t_top;
    Ok(SeriesProfile { knots, flux })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    #[test]
    fn quadratic_gradient_is_exact() {
        let x = [0.3, -1.7, 2.5];
        let g = fd_gradient(|v| Ok::<_, Infallible>(0.5 * v.iter().map(|a| a * a).sum::<f64>()), &x, FdScheme::gradient())
            .unwrap();
        for (a, b) in g.iter().zip(&x) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn linear_map_jacobian() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, -2.0, 0.5, 3.0, 0.0, -1.0]);
        // at the origin the stencil points carry no rounding from x itself
        let x = [0.0; 3];
        let j = fd_jacobian(
            |v| Ok::<_, Infallible>((&a * nalgebra::DVector::from_column_slice(v)).as_slice().to_vec()),
            &x,
            FdScheme::jacobian(),
        )
        .unwrap();
        assert!((j - &a).abs().max() < 1e-10);
    }

    #[test]
    fn gas_gap_takes_most_of_the_drop() {
        let p = series_resistance_profile(&[(0.25, 1.0), (2.0, 100.0)], 20.0, 100.0).unwrap();
        let drop = p.knots[1].1 - p.knots[0].1;
        assert!((drop - 80.0 * 0.25 / (0.25 + 0.02)).abs() < 1e-12);
        assert!((drop - 74.07).abs() < 0.01);
        let fl = p.layer_fluxes(&[1.0, 100.0]);
        assert!((fl[0] - fl[1]).abs() <= 1e-14 * fl[0].abs());
        assert!((fl[0] - p.flux).abs() <= 1e-14 * fl[0].abs());
    }

    #[test]
    fn single_and_symmetric_layers() {
        let p = series_resistance_profile(&[(2.0, 3.0)], 10.0, 30.0).unwrap();
        assert_eq!(p.at(1.0), 20.0);
        let p = series_resistance_profile(&[(1.0, 5.0), (1.0, 5.0)], 0.0, 8.0).unwrap();
        assert_eq!(p.knots[1].1, 4.0);
        assert_eq!(series_resistance_profile(&[(1.0, 0.0)], 0.0, 1.0), Err(OracleError::BadLayer(0)));
    }
}
