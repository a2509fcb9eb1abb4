use std::collections::VecDeque;

use super::{LocalMinimum, MinimizerConfig};
use crate::error::{Error, Result};
use crate::geometry::{dot, norm, Bounds, Point};
use crate::surfaces::{check_dimension, eval_checked, Surface};

const ARMIJO_C1: f64 = 1e-4;
const APPROX_WOLFE_EPS: f64 = 1e-10;
const MAX_BACKTRACKS: usize = 60;

/// Correction-pair history for the two-loop recursion.
#[derive(Debug, Clone)]
pub(crate) struct LbfgsMemory {
    capacity: usize,
    pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)>,
}

impl LbfgsMemory {
    pub(crate) fn new(capacity: usize) -> Self {
        LbfgsMemory {
            capacity: capacity.max(1),
            pairs: VecDeque::new(),
        }
    }

    pub(crate) fn clear(&mut self) {
        self.pairs.clear();
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Stores `(s, y)` when the curvature condition holds.
    pub(crate) fn push(&mut self, s: Vec<f64>, y: Vec<f64>) {
        let sy = dot(&s, &y);
        if sy <= 1e-12 * norm(&s) * norm(&y) || sy <= 0.0 {
            return;
        }
        if self.pairs.len() == self.capacity {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y, 1.0 / sy));
    }

    /// `-H g` using the implicit inverse-Hessian approximation.
    pub(crate) fn direction(&self, g: &[f64]) -> Vec<f64> {
        let mut q = g.to_vec();
        let mut alphas = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        if let Some((s, y, _)) = self.pairs.back() {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|x| *x *= gamma);
        }
        for ((s, y, rho), a) in self.pairs.iter().zip(alphas.into_iter().rev()) {
            let b = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        q.iter_mut().for_each(|x| *x = -*x);
        q
    }
}

/// Gradient with components removed where a bound blocks descent.
pub(crate) fn projected_gradient(x: &[f64], g: &[f64], bounds: Option<&Bounds>) -> Vec<f64> {
    let Some(b) = bounds else { return g.to_vec() };
    x.iter()
        .zip(g)
        .enumerate()
        .map(|(i, (xi, gi))| {
            let at_lower = *xi <= b.lower()[i] && *gi > 0.0;
            let at_upper = *xi >= b.upper()[i] && *gi < 0.0;
            if at_lower || at_upper {
                0.0
            } else {
                *gi
            }
        })
        .collect()
}

/// Near a minimum the Armijo test can fail on round-off alone. Accept a
/// step whose value rises by no more than a relative `APPROX_WOLFE_EPS` if
/// the directional derivative shows the step made real progress.
fn approximate_wolfe(f: f64, ft: f64, slope0: f64, gt: &[f64], trial: &[f64], x: &[f64]) -> bool {
    let slope_t: f64 = gt.iter().zip(trial.iter().zip(x)).map(|(gi, (ti, xi))| gi * (ti - xi)).sum();
    ft <= f + APPROX_WOLFE_EPS * f.abs() && slope_t >= 0.9 * slope0 && slope_t <= -0.8 * slope0
}

/// Limited-memory quasi-Newton descent with Armijo backtracking (initial
/// step 1, shrink 0.5). Iterates are clipped to `bounds` when given.
pub fn local_minimize(
    surface: &(impl Surface + ?Sized),
    start: &[f64],
    bounds: Option<&Bounds>,
    cfg: &MinimizerConfig,
) -> Result<LocalMinimum> {
    cfg.validate()?;
    check_dimension(surface, start)?;
    if let Some(b) = bounds {
        b.check_dimension(start.len())?;
    }
    let mut x = start.to_vec();
    if let Some(b) = bounds {
        b.clip(&mut x);
    }
    let (mut f, mut g) = eval_checked(surface, &x)?;
    let mut memory = LbfgsMemory::new(cfg.history_size);
    let mut iterations = 0;
    let mut pg = projected_gradient(&x, &g, bounds);

    while iterations < cfg.max_iterations {
        if norm(&pg) < cfg.gradient_tolerance {
            break;
        }
        iterations += 1;
        let mut d = memory.direction(&pg);
        if dot(&d, &pg) >= 0.0 {
            memory.clear();
            d = pg.iter().map(|v| -v).collect();
        }
        if bounds.is_some() {
            // active coordinates stay on their face
            for i in 0..d.len() {
                if pg[i] == 0.0 && g[i] != 0.0 {
                    d[i] = 0.0;
                }
            }
        }

        let mut accepted = None;
        for _attempt in 0..2 {
            let mut t = 1.0;
            for _ in 0..MAX_BACKTRACKS {
                let mut trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + t * di).collect();
                if let Some(b) = bounds {
                    b.clip(&mut trial);
                }
                let decrease: f64 = g.iter().zip(trial.iter().zip(&x)).map(|(gi, (ti, xi))| gi * (ti - xi)).sum();
                if decrease >= 0.0 {
                    t *= 0.5;
                    continue;
                }
                let (ft, gt) = eval_checked(surface, &trial)?;
                if ft <= f + ARMIJO_C1 * decrease || approximate_wolfe(f, ft, decrease, &gt, &trial, &x) {
                    accepted = Some((trial, ft, gt));
                    break;
                }
                t *= 0.5;
            }
            if accepted.is_some() || memory.is_empty() {
                break;
            }
            memory.clear();
            d = pg.iter().map(|v| -v).collect();
        }

        let Some((xn, fnew, gn)) = accepted else { break };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        memory.push(s, y);
        x = xn;
        f = fnew;
        g = gn;
        pg = projected_gradient(&x, &g, bounds);
    }

    let gradient_norm = norm(&pg);
    let converged = gradient_norm < cfg.gradient_tolerance;
    Ok(LocalMinimum {
        pinned_to_bounds: converged && norm(&g) >= cfg.gradient_tolerance,
        position: Point::new(x).map_err(|e| Error::Evaluation {
            point: start.to_vec(),
            reason: e.to_string(),
        })?,
        value: f,
        gradient_norm,
        converged,
        iterations,
    })
}
