//! Kinetic transition networks: minima as nodes, transition states as
//! (multi)edges, and the exploration driver that builds one from a surface.

use std::collections::BTreeSet;

use log::{debug, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{distance, latin_hypercube, Bounds, Point, RandomSource};
use crate::optimize::{local_minimize, LocalMinimum, MinimizerConfig};
use crate::surfaces::Surface;
use crate::transition::{
    connect_transition_state, neb_candidates, refine_with_guess, NebConfig, TransitionConfig, TransitionState,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DedupTolerances {
    pub position: f64,
    pub value: f64,
}

impl Default for DedupTolerances {
    fn default() -> Self {
        DedupTolerances {
            position: 1e-3,
            value: 1e-6,
        }
    }
}

impl DedupTolerances {
    fn same(&self, pa: &[f64], va: f64, pb: &[f64], vb: f64) -> bool {
        distance(pa, pb) < self.position && (va - vb).abs() < self.value
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinimumRecord {
    pub id: usize,
    pub position: Point,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRecord {
    pub id: usize,
    pub ts_position: Point,
    pub ts_value: f64,
    pub min_a: usize,
    pub min_b: usize,
    pub eigenvector: Vec<f64>,
}

impl EdgeRecord {
    /// Both sides of the saddle drain into the same minimum.
    pub fn is_self_loop(&self) -> bool {
        self.min_a == self.min_b
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KineticTransitionNetwork {
    pub dimension: usize,
    minima: Vec<MinimumRecord>,
    edges: Vec<EdgeRecord>,
    #[serde(skip)]
    tolerances: DedupTolerances,
}

impl KineticTransitionNetwork {
    pub fn new(dimension: usize, tolerances: DedupTolerances) -> Self {
        KineticTransitionNetwork {
            dimension,
            minima: Vec::new(),
            edges: Vec::new(),
            tolerances,
        }
    }

    pub fn minima(&self) -> &[MinimumRecord] {
        &self.minima
    }

    pub fn edges(&self) -> &[EdgeRecord] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> Option<&EdgeRecord> {
        self.edges.get(id)
    }

    pub fn minimum(&self, id: usize) -> Option<&MinimumRecord> {
        self.minima.get(id)
    }

    pub fn tolerances(&self) -> DedupTolerances {
        self.tolerances
    }

    pub fn set_tolerances(&mut self, tolerances: DedupTolerances) {
        self.tolerances = tolerances;
    }

    /// Returns the id of a stored minimum matching `candidate` within the
    /// dedup tolerances, inserting it first if none does.
    pub fn add_minimum_dedup(&mut self, candidate: &LocalMinimum) -> Result<usize> {
        if !candidate.converged {
            return Err(Error::invalid("cannot add an unconverged minimum to the network"));
        }
        self.insert_minimum(&candidate.position, candidate.value)
    }

    fn insert_minimum(&mut self, position: &Point, value: f64) -> Result<usize> {
        if position.dimension() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: position.dimension(),
            });
        }
        if let Some(m) = self
            .minima
            .iter()
            .find(|m| self.tolerances.same(&m.position, m.value, position, value))
        {
            return Ok(m.id);
        }
        let id = self.minima.len();
        self.minima.push(MinimumRecord {
            id,
            position: position.clone(),
            value,
        });
        Ok(id)
    }

    /// Inserts the transition state as an edge between `id_a` and `id_b`
    /// unless an edge with the same saddle is already stored.
    pub fn add_edge(&mut self, ts: &TransitionState, id_a: usize, id_b: usize) -> Result<usize> {
        for id in [id_a, id_b] {
            if id >= self.minima.len() {
                return Err(Error::invalid(format!("unknown minimum id {id}")));
            }
        }
        if ts.position.dimension() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: ts.position.dimension(),
            });
        }
        if let Some(e) = self
            .edges
            .iter()
            .find(|e| self.tolerances.same(&e.ts_position, e.ts_value, &ts.position, ts.value))
        {
            return Ok(e.id);
        }
        let id = self.edges.len();
        self.edges.push(EdgeRecord {
            id,
            ts_position: ts.position.clone(),
            ts_value: ts.value,
            min_a: id_a,
            min_b: id_b,
            eigenvector: ts.downhill_eigenvector.clone(),
        });
        Ok(id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("network serialisation cannot fail")
    }

    /// Parses the JSON form, checking ids and edge references.
    pub fn from_json(text: &str) -> Result<Self> {
        let net: KineticTransitionNetwork = Error::parse_json(text)?;
        net.check_consistency()?;
        Ok(net)
    }

    fn check_consistency(&self) -> Result<()> {
        let bad = |path: String, message: &str| Error::Parse {
            path,
            message: message.to_string(),
        };
        for (i, m) in self.minima.iter().enumerate() {
            if m.id != i {
                return Err(bad(format!("minima[{i}].id"), "ids must be 0..n in order"));
            }
            if m.position.dimension() != self.dimension {
                return Err(bad(format!("minima[{i}].position"), "dimension mismatch"));
            }
        }
        for (i, e) in self.edges.iter().enumerate() {
            if e.id != i {
                return Err(bad(format!("edges[{i}].id"), "ids must be 0..n in order"));
            }
            if e.min_a >= self.minima.len() || e.min_b >= self.minima.len() {
                return Err(bad(format!("edges[{i}]"), "edge references an unknown minimum"));
            }
            if e.ts_position.dimension() != self.dimension || e.eigenvector.len() != self.dimension {
                return Err(bad(format!("edges[{i}].ts_position"), "dimension mismatch"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairStrategy {
    AllPairs,
    KNearest(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExploreConfig {
    pub n_starts: usize,
    pub pair_strategy: PairStrategy,
    pub dedup: DedupTolerances,
    /// Further pairing rounds run for minima discovered while connecting
    /// transition states.
    pub max_rounds: usize,
    pub minimizer: MinimizerConfig,
    pub neb: NebConfig,
    pub transition: TransitionConfig,
}

impl Default for ExploreConfig {
    fn default() -> Self {
        ExploreConfig {
            n_starts: 200,
            pair_strategy: PairStrategy::KNearest(5),
            dedup: DedupTolerances::default(),
            max_rounds: 3,
            minimizer: MinimizerConfig::default(),
            neb: NebConfig::default(),
            transition: TransitionConfig::default(),
        }
    }
}

impl ExploreConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_starts == 0 {
            return Err(Error::invalid("explore needs n_starts >= 1"));
        }
        if self.pair_strategy == PairStrategy::KNearest(0) {
            return Err(Error::invalid("k-nearest pairing needs k >= 1"));
        }
        self.minimizer.validate()
    }
}

fn select_pairs(minima: &[MinimumRecord], strategy: PairStrategy) -> BTreeSet<(usize, usize)> {
    let n = minima.len();
    let mut pairs = BTreeSet::new();
    match strategy {
        PairStrategy::AllPairs => {
            for i in 0..n {
                for j in (i + 1)..n {
                    pairs.insert((i, j));
                }
            }
        }
        PairStrategy::KNearest(k) => {
            for i in 0..n {
                let mut others: Vec<(f64, usize)> = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| (distance(&minima[i].position, &minima[j].position), j))
                    .collect();
                others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                for &(_, j) in others.iter().take(k) {
                    pairs.insert((i.min(j), i.max(j)));
                }
            }
        }
    }
    pairs
}

type Connection = (TransitionState, LocalMinimum, LocalMinimum);

fn connect_pair(
    surface: &(impl Surface + ?Sized),
    bounds: &Bounds,
    a: &Point,
    b: &Point,
    cfg: &ExploreConfig,
) -> Result<Vec<Connection>> {
    let candidates = neb_candidates(surface, a, b, &cfg.neb)?;
    let guess: Vec<f64> = b.iter().zip(a.iter()).map(|(x, y)| x - y).collect();
    let mut found = Vec::new();
    for c in candidates {
        let ts = match refine_with_guess(surface, &c, Some(&guess), &cfg.minimizer, &cfg.transition) {
            Ok(ts) if bounds.contains(&ts.position) => ts,
            Ok(ts) => {
                debug!("saddle at {:?} lies outside the bounds; discarded", ts.position.as_slice());
                continue;
            }
            Err(e) => {
                warn!("candidate {:?} failed refinement: {e}", c.as_slice());
                continue;
            }
        };
        match connect_transition_state(
            surface,
            &ts,
            cfg.transition.connect_displacement,
            cfg.transition.descent_step,
            Some(bounds),
            &cfg.minimizer,
        ) {
            Ok((ma, mb)) if ma.is_stationary() && mb.is_stationary() => found.push((ts, ma, mb)),
            Ok(_) => debug!("saddle at {:?} drains onto the bounds; discarded", ts.position.as_slice()),
            Err(e) => warn!("saddle at {:?} failed to connect: {e}", ts.position.as_slice()),
        }
    }
    Ok(found)
}

/// Builds a network from `surface`: Latin-hypercube-seeded local
/// minimisations, then saddle searches between the selected minima pairs.
///
/// Pairs are processed concurrently but merged in pair order, so the result
/// depends only on the inputs and `rng`.
pub fn explore_landscape(
    surface: &(impl Surface + ?Sized),
    bounds: &Bounds,
    cfg: &ExploreConfig,
    rng: &RandomSource,
) -> Result<KineticTransitionNetwork> {
    cfg.validate()?;
    bounds.check_dimension(surface.dimension())?;
    let mut net = KineticTransitionNetwork::new(surface.dimension(), cfg.dedup);

    let starts = latin_hypercube(bounds, cfg.n_starts, &rng.child("explore/starts"))?;
    let minima: Vec<Result<LocalMinimum>> = starts
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            local_minimize(surface, s, Some(bounds), &cfg.minimizer)
                .map_err(|e| e.context(format!("local minimisation from start {i}")))
        })
        .collect();
    for m in minima {
        let m = m?;
        if m.is_stationary() {
            net.add_minimum_dedup(&m)?;
        }
    }
    debug!("{} distinct minima from {} starts", net.minima.len(), cfg.n_starts);

    let mut attempted: BTreeSet<(usize, usize)> = BTreeSet::new();
    for round in 0..cfg.max_rounds.max(1) {
        let pairs: Vec<(usize, usize)> = select_pairs(&net.minima, cfg.pair_strategy)
            .into_iter()
            .filter(|p| !attempted.contains(p))
            .collect();
        if pairs.is_empty() {
            break;
        }
        attempted.extend(pairs.iter().copied());
        let results: Vec<Vec<Connection>> = pairs
            .par_iter()
            .map(|&(i, j)| {
                connect_pair(surface, bounds, &net.minima[i].position, &net.minima[j].position, cfg).unwrap_or_else(|e| {
                    warn!("pair ({i}, {j}) skipped: {e}");
                    Vec::new()
                })
            })
            .collect();
        let before = net.minima.len();
        for (ts, ma, mb) in results.into_iter().flatten() {
            let ia = net.add_minimum_dedup(&ma)?;
            let ib = net.add_minimum_dedup(&mb)?;
            net.add_edge(&ts, ia, ib)?;
        }
        debug!(
            "round {round}: {} pairs, {} minima (+{}), {} edges",
            pairs.len(),
            net.minima.len(),
            net.minima.len() - before,
            net.edges.len()
        );
    }
    Ok(net)
}
