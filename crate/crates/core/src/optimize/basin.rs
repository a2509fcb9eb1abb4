use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{local_minimize, LocalMinimum, MinimizerConfig};
use crate::error::{Error, Result};
use crate::geometry::{distance, Bounds, RandomSource};
use crate::surfaces::Surface;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BasinHoppingConfig {
    pub n_steps: usize,
    /// Per-coordinate perturbation half-width; `None` means 10% of the
    /// smallest bound width.
    pub step_size: Option<f64>,
    pub temperature: f64,
    /// Independent chains, merged in chain order.
    pub n_chains: usize,
    pub dedup_position_tol: f64,
    pub dedup_value_tol: f64,
}

impl Default for BasinHoppingConfig {
    fn default() -> Self {
        BasinHoppingConfig {
            n_steps: 200,
            step_size: None,
            temperature: 1.0,
            n_chains: 1,
            dedup_position_tol: 1e-3,
            dedup_value_tol: 1e-6,
        }
    }
}

impl BasinHoppingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0)
            || self.n_chains == 0
            || !(self.dedup_position_tol >= 0.0)
            || !(self.dedup_value_tol >= 0.0)
            || self.step_size.is_some_and(|s| !(s > 0.0))
        {
            return Err(Error::invalid(
                "basin hopping needs temperature > 0, n_chains >= 1, positive step_size, non-negative tolerances",
            ));
        }
        Ok(())
    }
}

fn is_duplicate(a: &LocalMinimum, b: &LocalMinimum, cfg: &BasinHoppingConfig) -> bool {
    distance(&a.position, &b.position) < cfg.dedup_position_tol
        && (a.value - b.value).abs() < cfg.dedup_value_tol
}

/// Keeps the first occurrence of every minimum, then sorts ascending by value.
pub fn dedup_minima(found: Vec<LocalMinimum>, cfg: &BasinHoppingConfig) -> Vec<LocalMinimum> {
    let mut kept: Vec<LocalMinimum> = Vec::new();
    for m in found {
        if !kept.iter().any(|k| is_duplicate(k, &m, cfg)) {
            kept.push(m);
        }
    }
    kept.sort_by(|a, b| {
        a.value.total_cmp(&b.value).then_with(|| {
            a.position
                .iter()
                .zip(b.position.iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    kept
}

fn run_chain(
    surface: &(impl Surface + ?Sized),
    bounds: &Bounds,
    start: &[f64],
    cfg: &BasinHoppingConfig,
    rng: &RandomSource,
    min_cfg: &MinimizerConfig,
) -> Result<Vec<LocalMinimum>> {
    let step = cfg.step_size.unwrap_or(0.1 * bounds.min_width());
    let mut r = rng.rng();
    let mut current = local_minimize(surface, start, Some(bounds), min_cfg)?;
    let mut record = vec![current.clone()];
    for _ in 0..cfg.n_steps {
        let mut trial: Vec<f64> = current
            .position
            .iter()
            .map(|x| x + r.random_range(-step..=step))
            .collect();
        bounds.clip(&mut trial);
        let candidate = local_minimize(surface, &trial, Some(bounds), min_cfg)?;
        let delta = candidate.value - current.value;
        let u: f64 = r.random();
        let accept = delta <= 0.0 || u < (-delta / cfg.temperature).exp();
        record.push(candidate.clone());
        if accept {
            current = candidate;
        }
    }
    Ok(record)
}

/// Classic basin-hopping: perturb, minimise, Metropolis-accept on the
/// minimised values. Every visited minimum is recorded; the result is
/// de-duplicated and sorted ascending by value.
///
/// Chain 0 starts at `start` when given; every other start is uniform in
/// `bounds`.
pub fn basin_hopping(
    surface: &(impl Surface + ?Sized),
    bounds: &Bounds,
    start: Option<&[f64]>,
    cfg: &BasinHoppingConfig,
    rng: &RandomSource,
    min_cfg: &MinimizerConfig,
) -> Result<Vec<LocalMinimum>> {
    cfg.validate()?;
    bounds.check_dimension(surface.dimension())?;
    let chains: Vec<Result<Vec<LocalMinimum>>> = (0..cfg.n_chains)
        .into_par_iter()
        .map(|c| {
            let chain_rng = rng.indexed("chain", c);
            let start = match (c, start) {
                (0, Some(s)) => s.to_vec(),
                _ => bounds.sample_uniform(&mut chain_rng.child("start").rng()).into_vec(),
            };
            run_chain(surface, bounds, &start, cfg, &chain_rng, min_cfg)
        })
        .collect();
    let mut all = Vec::new();
    for chain in chains {
        all.extend(chain?);
    }
    Ok(dedup_minima(all, cfg))
}
