use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Surface;
use crate::error::{Error, Result};
use crate::geometry::{Point, RandomSource};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: Point,
    pub width: f64,
}

impl MixtureComponent {
    pub fn new(weight: f64, mean: Point, width: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) || !weight.is_finite() {
            return Err(Error::invalid(format!(
                "mixture component needs finite weight and positive width (got {weight}, {width})"
            )));
        }
        Ok(MixtureComponent { weight, mean, width })
    }
}

/// `value(p) = sum_i weight_i * exp(-|p - mean_i|^2 / (2 width_i^2))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyticMixtureSurface {
    pub dimension: usize,
    pub components: Vec<MixtureComponent>,
}

impl AnalyticMixtureSurface {
    pub fn new(dimension: usize, components: Vec<MixtureComponent>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::invalid("mixture dimension must be >= 1"));
        }
        for c in &components {
            if c.mean.dimension() != dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    got: c.mean.dimension(),
                });
            }
            MixtureComponent::new(c.weight, c.mean.clone(), c.width)?;
        }
        Ok(AnalyticMixtureSurface {
            dimension,
            components,
        })
    }

    /// Checked evaluation.
    pub fn eval(&self, p: &[f64]) -> Result<f64> {
        super::check_dimension(self, p)?;
        Ok(self.value(p))
    }
}

impl Surface for AnalyticMixtureSurface {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn value(&self, p: &[f64]) -> f64 {
        self.components
            .iter()
            .map(|c| {
                let r2: f64 = c.mean.iter().zip(p).map(|(m, x)| (x - m) * (x - m)).sum();
                c.weight * (-r2 / (2.0 * c.width * c.width)).exp()
            })
            .sum()
    }

    fn gradient(&self, p: &[f64]) -> Vec<f64> {
        self.value_and_gradient(p).1
    }

    fn value_and_gradient(&self, p: &[f64]) -> (f64, Vec<f64>) {
        let mut g = vec![0.0; p.len()];
        let mut v = 0.0;
        for c in &self.components {
            let w2 = c.width * c.width;
            let r2: f64 = c.mean.iter().zip(p).map(|(m, x)| (x - m) * (x - m)).sum();
            let term = c.weight * (-r2 / (2.0 * w2)).exp();
            v += term;
            for ((gi, x), m) in g.iter_mut().zip(p).zip(c.mean.iter()) {
                *gi -= term * (x - m) / w2;
            }
        }
        (v, g)
    }
}

/// Seeded two-dimensional landscape: one broad confining well plus four
/// narrower wells of varying depth, meant to be explored on `[-3, 3]^2`.
pub fn demo_surface(seed: u64) -> AnalyticMixtureSurface {
    let mut rng = RandomSource::new(seed).child("demo-surface").rng();
    let mut components = vec![MixtureComponent {
        weight: -1.0,
        mean: Point::from_vec_unchecked(vec![0.0, 0.0]),
        width: 2.5,
    }];
    let mut means: Vec<[f64; 2]> = Vec::new();
    while means.len() < 4 {
        let m = [rng.random_range(-1.8..1.8), rng.random_range(-1.8..1.8)];
        if means
            .iter()
            .all(|q| ((q[0] - m[0]).powi(2) + (q[1] - m[1]).powi(2)).sqrt() > 1.3)
        {
            means.push(m);
        }
    }
    for m in means {
        components.push(MixtureComponent {
            weight: -rng.random_range(0.8..1.6),
            mean: Point::from_vec_unchecked(m.to_vec()),
            width: rng.random_range(0.45..0.7),
        });
    }
    AnalyticMixtureSurface {
        dimension: 2,
        components,
    }
}
