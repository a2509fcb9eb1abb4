//! Points, box bounds, seeded random streams, and the two samplers used
//! throughout the pipeline: fixed-radius sphere-shell perturbations and
//! Latin-hypercube designs.

use std::ops::Deref;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// A coordinate vector in the latent space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::invalid("point must have at least one coordinate"));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::invalid(format!(
                "point coordinate {i} is not finite ({})",
                coords[i]
            )));
        }
        Ok(Point(coords))
    }

    pub fn zeros(dimension: usize) -> Self {
        Point(vec![0.0; dimension.max(1)])
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Wraps coordinates produced internally (already known to be finite).
    pub(crate) fn from_vec_unchecked(coords: Vec<f64>) -> Self {
        debug_assert!(!coords.is_empty());
        Point(coords)
    }
}

impl Deref for Point {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Point::new(v)
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Vec<f64> {
        p.0
    }
}

/// Axis-aligned search box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBounds", into = "RawBounds")]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl TryFrom<RawBounds> for Bounds {
    type Error = Error;

    fn try_from(raw: RawBounds) -> Result<Self> {
        Bounds::new(raw.lower, raw.upper)
    }
}

impl From<Bounds> for RawBounds {
    fn from(b: Bounds) -> Self {
        RawBounds {
            lower: b.lower,
            upper: b.upper,
        }
    }
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::invalid(format!(
                "bounds need matching non-empty lower/upper (got {} and {})",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::invalid(format!(
                    "bounds dimension {i}: need finite lower < upper, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(Bounds { lower, upper })
    }

    /// The same interval `[lo, hi]` in every one of `dimension` axes.
    pub fn cube(dimension: usize, lo: f64, hi: f64) -> Result<Self> {
        Bounds::new(vec![lo; dimension], vec![hi; dimension])
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    pub fn min_width(&self) -> f64 {
        (0..self.dimension())
            .map(|i| self.width(i))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn diagonal(&self) -> f64 {
        (0..self.dimension())
            .map(|i| self.width(i).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dimension()
            && p
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (lo, hi))| *x >= *lo && *x <= *hi)
    }

    pub fn clip(&self, p: &mut [f64]) {
        for ((x, lo), hi) in p.iter_mut().zip(&self.lower).zip(&self.upper) {
            *x = x.clamp(*lo, *hi);
        }
    }

    pub(crate) fn check_dimension(&self, d: usize) -> Result<()> {
        if d != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                got: d,
            });
        }
        Ok(())
    }

    /// Uniform draw inside the box.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let coords = self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
            .collect();
        Point::from_vec_unchecked(coords)
    }
}

/// Seed plus a labelled stream-splitting rule: a child stream's seed is the
/// first eight bytes of SHA-256(parent seed || label).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RandomSource {
    pub seed: u64,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        RandomSource { seed }
    }

    pub fn child(&self, label: &str) -> RandomSource {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update(label.as_bytes());
        let digest = hasher.finalize();
        let mut bytes = [0u8; 8];
        bytes.copy_from_slice(&digest[..8]);
        RandomSource {
            seed: u64::from_le_bytes(bytes),
        }
    }

    pub fn indexed(&self, label: &str, index: usize) -> RandomSource {
        self.child(&format!("{label}/{index}"))
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

pub fn euclidean_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(distance(a, b))
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Points at exactly `radius` from `center`, with directions drawn uniformly
/// on the unit sphere (normalised standard-normal vectors).
pub fn sample_sphere_shell(
    center: &[f64],
    radius: f64,
    n: usize,
    rng: &RandomSource,
) -> Result<Vec<Point>> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::invalid(format!(
            "sphere-shell radius must be positive, got {radius}"
        )));
    }
    let mut r = rng.rng();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let dir: Vec<f64> = (0..center.len())
            .map(|_| r.sample::<f64, _>(StandardNormal))
            .collect();
        let len = norm(&dir);
        if len < 1e-300 {
            continue;
        }
        let coords = center
            .iter()
            .zip(&dir)
            .map(|(c, d)| c + radius * d / len)
            .collect();
        out.push(Point::from_vec_unchecked(coords));
    }
    Ok(out)
}

/// Latin-hypercube design: in every dimension each of the `n` equal strata
/// holds exactly one sample.
pub fn latin_hypercube(bounds: &Bounds, n: usize, rng: &RandomSource) -> Result<Vec<Point>> {
    if n == 0 {
        return Err(Error::invalid("latin hypercube needs n >= 1"));
    }
    let d = bounds.dimension();
    let mut r = rng.rng();
    let mut coords = vec![vec![0.0; d]; n];
    let mut strata: Vec<usize> = (0..n).collect();
    for dim in 0..d {
        strata.shuffle(&mut r);
        let lo = bounds.lower[dim];
        let width = bounds.width(dim);
        for (row, &stratum) in coords.iter_mut().zip(&strata) {
            let u: f64 = r.random();
            let mut x = lo + width * (stratum as f64 + u) / n as f64;
            // rounding can push a draw next to the upper edge into the next stratum
            if ((x - lo) / width * n as f64).floor() as usize != stratum {
                x = lo + width * (stratum as f64 + 0.5) / n as f64;
            }
            row[dim] = x;
        }
    }
    Ok(coords.into_iter().map(Point::from_vec_unchecked).collect())
}
