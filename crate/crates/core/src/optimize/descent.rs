use super::lbfgs::projected_gradient;
use super::{local_minimize, LocalMinimum, MinimizerConfig};
use crate::error::{Error, Result};
use crate::geometry::{norm, Bounds};
use crate::surfaces::{check_dimension, eval_checked, Surface};

const MAX_PATH_STEPS: usize = 1_000_000;

/// Traces the steepest-descent path from `start` with steps of at most
/// `step` (halved whenever a step would increase the value), then polishes
/// the end point with [`local_minimize`].
pub fn steepest_descent_path(
    surface: &(impl Surface + ?Sized),
    start: &[f64],
    step: f64,
    bounds: Option<&Bounds>,
    cfg: &MinimizerConfig,
) -> Result<LocalMinimum> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::invalid(format!("descent step must be positive, got {step}")));
    }
    cfg.validate()?;
    check_dimension(surface, start)?;
    let mut x = start.to_vec();
    if let Some(b) = bounds {
        b.clip(&mut x);
    }
    let (mut f, g) = eval_checked(surface, &x)?;
    let mut pg = projected_gradient(&x, &g, bounds);
    let mut alpha = step;
    let min_alpha = step * 1e-4;

    for _ in 0..MAX_PATH_STEPS {
        let gn = norm(&pg);
        if gn < cfg.gradient_tolerance || alpha < min_alpha {
            break;
        }
        let mut trial: Vec<f64> = x.iter().zip(&pg).map(|(xi, gi)| xi - alpha * gi / gn).collect();
        if let Some(b) = bounds {
            b.clip(&mut trial);
        }
        let (ft, gt) = eval_checked(surface, &trial)?;
        if ft < f {
            x = trial;
            f = ft;
            pg = projected_gradient(&x, &gt, bounds);
            alpha = (alpha * 2.0).min(step);
        } else {
            alpha *= 0.5;
        }
    }
    local_minimize(surface, &x, bounds, cfg)
}
