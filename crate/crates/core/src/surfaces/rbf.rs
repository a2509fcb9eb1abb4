//! Thin-plate radial basis function interpolation with a linear polynomial
//! tail and optional smoothing-spline regularisation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::Surface;
use crate::error::{Error, Result};
use crate::geometry::{distance, Point};

/// `phi(r) = r^2 ln r`, with `phi(0) = 0`.
pub fn thin_plate_kernel(r: f64) -> f64 {
    if r <= 0.0 {
        0.0
    } else {
        r * r * r.ln()
    }
}

/// `phi'(r) / r = 2 ln r + 1`, taken as 0 at the origin (the gradient
/// contribution `phi'(r) * (x - c) / r` vanishes there).
fn kernel_slope_over_r(r: f64) -> f64 {
    if r <= 0.0 {
        0.0
    } else {
        2.0 * r.ln() + 1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RbfSurface {
    pub dimension: usize,
    pub centers: Vec<Point>,
    pub weights: Vec<f64>,
    /// `[constant, linear_0, ..., linear_{D-1}]`
    pub poly_coeffs: Vec<f64>,
    pub smoothing: f64,
}

impl RbfSurface {
    /// Solves the augmented thin-plate system
    ///
    /// ```text
    /// [ K + s I   P ] [w]   [f]
    /// [ P^T       0 ] [c] = [0]
    /// ```
    ///
    /// where `K_ij = phi(|x_i - x_j|)` and `P_i = [1, x_i]`.
    pub fn fit(points: &[Point], values: &[f64], smoothing: f64) -> Result<Self> {
        if points.len() != values.len() {
            return Err(Error::invalid(format!(
                "{} points but {} values",
                points.len(),
                values.len()
            )));
        }
        if !(smoothing >= 0.0 && smoothing.is_finite()) {
            return Err(Error::invalid(format!("smoothing must be >= 0, got {smoothing}")));
        }
        let n = points.len();
        let d = points.first().map(|p| p.dimension()).unwrap_or(0);
        if d == 0 || n < d + 2 {
            return Err(Error::invalid(format!(
                "thin-plate fit in {d} dimensions needs at least {} points, got {n}",
                d + 2
            )));
        }
        if let Some(p) = points.iter().find(|p| p.dimension() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: p.dimension(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("value {i} is not finite")));
        }

        let m = n + d + 1;
        let mut a = DMatrix::<f64>::zeros(m, m);
        for i in 0..n {
            for j in 0..i {
                let k = thin_plate_kernel(distance(&points[i], &points[j]));
                a[(i, j)] = k;
                a[(j, i)] = k;
            }
            a[(i, i)] = smoothing;
            a[(i, n)] = 1.0;
            a[(n, i)] = 1.0;
            for (k, x) in points[i].iter().enumerate() {
                a[(i, n + 1 + k)] = *x;
                a[(n + 1 + k, i)] = *x;
            }
        }
        let mut rhs = DVector::<f64>::zeros(m);
        rhs.rows_mut(0, n).copy_from_slice(values);

        let system = a.clone();
        let lu = a.lu();
        let condition = || {
            let u = lu.u();
            let diag = u.diagonal();
            let max = diag.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
            let min = diag.iter().fold(f64::INFINITY, |acc, x| acc.min(x.abs()));
            if min == 0.0 {
                f64::INFINITY
            } else {
                max / min
            }
        };
        let sol = match lu.solve(&rhs) {
            Some(s) if s.iter().all(|x| x.is_finite()) => s,
            _ => {
                return Err(Error::FitFailure {
                    condition: condition(),
                    reason: "singular thin-plate system (degenerate point set?)".into(),
                })
            }
        };
        let residual = (&system * &sol - &rhs).norm();
        let scale = rhs.norm().max(1.0);
        if !(residual <= 1e-6 * scale) {
            return Err(Error::FitFailure {
                condition: condition(),
                reason: format!("ill-conditioned thin-plate system (residual {residual:.3e})"),
            });
        }

        Ok(RbfSurface {
            dimension: d,
            centers: points.to_vec(),
            weights: sol.rows(0, n).iter().copied().collect(),
            poly_coeffs: sol.rows(n, d + 1).iter().copied().collect(),
            smoothing,
        })
    }

    pub fn eval(&self, p: &[f64]) -> Result<f64> {
        super::check_dimension(self, p)?;
        Ok(self.value(p))
    }

    fn tail(&self, p: &[f64]) -> f64 {
        self.poly_coeffs[0]
            + self.poly_coeffs[1..]
                .iter()
                .zip(p)
                .map(|(c, x)| c * x)
                .sum::<f64>()
    }
}

impl Surface for RbfSurface {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn value(&self, p: &[f64]) -> f64 {
        let radial: f64 = self
            .centers
            .iter()
            .zip(&self.weights)
            .map(|(c, w)| w * thin_plate_kernel(distance(p, c)))
            .sum();
        radial + self.tail(p)
    }

    fn gradient(&self, p: &[f64]) -> Vec<f64> {
        self.value_and_gradient(p).1
    }

    fn value_and_gradient(&self, p: &[f64]) -> (f64, Vec<f64>) {
        let mut g: Vec<f64> = self.poly_coeffs[1..].to_vec();
        let mut v = self.tail(p);
        for (c, w) in self.centers.iter().zip(&self.weights) {
            let r = distance(p, c);
            v += w * thin_plate_kernel(r);
            let s = w * kernel_slope_over_r(r);
            if s != 0.0 {
                for ((gi, x), ci) in g.iter_mut().zip(p).zip(c.iter()) {
                    *gi += s * (x - ci);
                }
            }
        }
        (v, g)
    }
}
