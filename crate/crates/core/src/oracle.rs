//! Decoder/similarity oracles standing in for a generative model, and the
//! sampled neighbourhood-similarity field that the RBF surface is fitted to.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{latin_hypercube, sample_sphere_shell, Bounds, Point, RandomSource};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenSequence {
    pub tokens: Vec<u32>,
    pub valid: bool,
}

impl TokenSequence {
    pub fn valid(tokens: Vec<u32>) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::invalid("a valid token sequence must be non-empty"));
        }
        Ok(TokenSequence { tokens, valid: true })
    }

    pub fn invalid() -> Self {
        TokenSequence {
            tokens: Vec::new(),
            valid: false,
        }
    }
}

/// `|A ∩ B| / |A ∪ B|`; two empty sets are identical and score 1.
pub fn tanimoto<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// Contiguous length-`n` windows. A valid sequence shorter than `n` yields
/// itself as the only element; an invalid one yields nothing.
pub fn ngram_set(seq: &TokenSequence, n: usize) -> Result<BTreeSet<Vec<u32>>> {
    if n == 0 {
        return Err(Error::invalid("n-gram length must be >= 1"));
    }
    if !seq.valid {
        return Ok(BTreeSet::new());
    }
    if seq.tokens.len() < n {
        return Ok(BTreeSet::from([seq.tokens.clone()]));
    }
    Ok(seq.tokens.windows(n).map(<[u32]>::to_vec).collect())
}

/// Maps latent points to discrete objects and compares them.
pub trait LatentOracle: Send + Sync {
    fn dimension(&self) -> usize;

    fn decode(&self, p: &[f64]) -> Result<TokenSequence>;

    /// Tanimoto over bigram sets; 0 if either side is invalid.
    fn similarity(&self, a: &TokenSequence, b: &TokenSequence) -> f64 {
        if !a.valid || !b.valid {
            return 0.0;
        }
        let (Ok(x), Ok(y)) = (ngram_set(a, 2), ngram_set(b, 2)) else {
            return 0.0;
        };
        tanimoto(&x, &y)
    }
}

/// One token per coordinate: the symbol of the equal-width bin holding it.
/// Bins are half-open `[lo, hi)` except the top one; out-of-range
/// coordinates clamp to the edge bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizedDecoder {
    bounds: Bounds,
    symbols: Vec<u32>,
}

impl QuantizedDecoder {
    /// Symbols are `0..bins`.
    pub fn new(bounds: Bounds, bins: usize) -> Result<Self> {
        Self::with_symbols(bounds, (0..bins as u32).collect())
    }

    pub fn with_symbols(bounds: Bounds, symbols: Vec<u32>) -> Result<Self> {
        if symbols.len() < 2 {
            return Err(Error::invalid("quantized decoder needs at least 2 bins"));
        }
        if symbols.iter().collect::<BTreeSet<_>>().len() != symbols.len() {
            return Err(Error::invalid("quantized decoder symbols must be distinct"));
        }
        Ok(QuantizedDecoder { bounds, symbols })
    }

    pub fn bins(&self) -> usize {
        self.symbols.len()
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    pub fn bin_index(&self, dim: usize, x: f64) -> usize {
        let v = self.bins();
        let t = (x - self.bounds.lower()[dim]) / self.bounds.width(dim) * v as f64;
        if t.is_nan() || t < 0.0 {
            0
        } else {
            (t.floor() as usize).min(v - 1)
        }
    }
}

impl LatentOracle for QuantizedDecoder {
    fn dimension(&self) -> usize {
        self.bounds.dimension()
    }

    fn decode(&self, p: &[f64]) -> Result<TokenSequence> {
        self.bounds.check_dimension(p.len())?;
        TokenSequence::valid(
            p.iter()
                .enumerate()
                .map(|(i, &x)| self.symbols[self.bin_index(i, x)])
                .collect(),
        )
    }
}

/// Decodes every point to the same sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantOracle {
    pub dimension: usize,
    pub sequence: TokenSequence,
}

impl LatentOracle for ConstantOracle {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn decode(&self, p: &[f64]) -> Result<TokenSequence> {
        if p.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: p.len(),
            });
        }
        Ok(self.sequence.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldConfig {
    pub n_samples: usize,
    pub n_neighbors: usize,
    pub perturbation_radius: f64,
    pub ngram_n: usize,
}

impl Default for FieldConfig {
    fn default() -> Self {
        FieldConfig {
            n_samples: 5000,
            n_neighbors: 10,
            perturbation_radius: 0.05,
            ngram_n: 2,
        }
    }
}

/// Mean n-gram Tanimoto similarity between the decode of `p` and the
/// decodes of `n_neighbors` points at distance `radius` from it.
///
/// Invalid neighbours are left out of the mean; an invalid target or no
/// valid neighbour gives 0.
pub fn neighborhood_similarity(
    oracle: &(impl LatentOracle + ?Sized),
    p: &[f64],
    n_neighbors: usize,
    radius: f64,
    ngram_n: usize,
    rng: &RandomSource,
) -> Result<f64> {
    if n_neighbors == 0 {
        return Err(Error::invalid("n_neighbors must be >= 1"));
    }
    let neighbors = sample_sphere_shell(p, radius, n_neighbors, rng)?;
    let target = oracle.decode(p)?;
    if !target.valid {
        return Ok(0.0);
    }
    let target_set = ngram_set(&target, ngram_n)?;
    let mut sum = 0.0;
    let mut count = 0usize;
    for q in &neighbors {
        let seq = oracle.decode(q)?;
        if seq.valid {
            sum += tanimoto(&target_set, &ngram_set(&seq, ngram_n)?);
            count += 1;
        }
    }
    Ok(if count == 0 { 0.0 } else { sum / count as f64 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityField {
    pub points: Vec<Point>,
    pub values: Vec<f64>,
}

/// Latin-hypercube samples over `bounds` with their neighbourhood
/// similarity. Samples are evaluated in parallel, each with its own
/// random stream, and returned in sample order.
pub fn build_similarity_field(
    oracle: &(impl LatentOracle + ?Sized),
    bounds: &Bounds,
    cfg: &FieldConfig,
    rng: &RandomSource,
) -> Result<SimilarityField> {
    let d = bounds.dimension();
    if oracle.dimension() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: oracle.dimension(),
        });
    }
    if cfg.n_samples < d + 2 {
        return Err(Error::invalid(format!("n_samples must be >= D + 2 = {}", d + 2)));
    }
    let points = latin_hypercube(bounds, cfg.n_samples, &rng.child("field/lhs"))?;
    let values = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            neighborhood_similarity(
                oracle,
                p,
                cfg.n_neighbors,
                cfg.perturbation_radius,
                cfg.ngram_n,
                &rng.indexed("field/neighbors", i),
            )
            .map_err(|e| e.context(format!("sample {i}")))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(SimilarityField { points, values })
}

impl SimilarityField {
    pub fn dimension(&self) -> usize {
        self.points.first().map_or(0, Point::dimension)
    }

    /// Header `x0,...,x{D-1},similarity`; 17 significant digits.
    pub fn to_csv(&self) -> String {
        let d = self.dimension();
        let mut out = String::new();
        for i in 0..d {
            let _ = write!(out, "x{i},");
        }
        out.push_str("similarity\n");
        for (p, v) in self.points.iter().zip(&self.values) {
            for x in p.iter() {
                let _ = write!(out, "{x:.16e},");
            }
            let _ = writeln!(out, "{v:.16e}");
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let parse_err = |line: usize, message: String| Error::Parse {
            path: format!("line {line}"),
            message,
        };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty field file".into()))?;
        let columns: Vec<&str> = header.split(',').collect();
        let d = columns.len().saturating_sub(1);
        let expected: Vec<String> = (0..d).map(|i| format!("x{i}")).chain(["similarity".to_string()]).collect();
        if d == 0 || columns != expected {
            return Err(parse_err(1, format!("header must be x0,...,x{{D-1}},similarity, got {header:?}")));
        }
        let mut points = Vec::new();
        let mut values = Vec::new();
        for (i, line) in lines {
            if line.is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| parse_err(i + 1, e.to_string()))?;
            if row.len() != d + 1 {
                return Err(parse_err(i + 1, format!("expected {} columns, got {}", d + 1, row.len())));
            }
            values.push(row[d]);
            points.push(Point::new(row[..d].to_vec()).map_err(|e| parse_err(i + 1, e.to_string()))?);
        }
        Ok(SimilarityField { points, values })
    }
}
