//! Index-1 saddle search: nudged elastic band candidates, hybrid
//! eigenvector-following refinement, and steepest-descent connection of a
//! transition state to the two minima on either side.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{distance, dot, norm, Bounds, Point};
use crate::optimize::{steepest_descent_path, LbfgsMemory, LocalMinimum, MinimizerConfig};
use crate::surfaces::{check_dimension, eval_checked, fd_hessian, gradient_checked, symmetric_spectrum, Surface};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionState {
    pub position: Point,
    pub value: f64,
    pub smallest_eigenvalue: f64,
    /// Unit eigenvector of the negative-curvature direction, signed so its
    /// largest-magnitude component is positive.
    pub downhill_eigenvector: Vec<f64>,
    pub gradient_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NebConfig {
    pub n_images: usize,
    pub spring_constant: f64,
    pub max_force_calls: usize,
    pub force_tolerance: f64,
    pub climbing_image: bool,
    /// Initial gradient-descent step on the images (adapted during the run).
    pub step_size: f64,
}

impl Default for NebConfig {
    fn default() -> Self {
        NebConfig {
            n_images: 11,
            spring_constant: 10.0,
            max_force_calls: 5000,
            force_tolerance: 1e-3,
            climbing_image: true,
            step_size: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransitionConfig {
    /// Trust radius for uphill and orthogonal steps during refinement.
    pub max_step: f64,
    /// L-BFGS steps in the subspace orthogonal to the uphill mode per cycle.
    pub orthogonal_steps: usize,
    /// Finite-difference step for Hessian-vector products.
    pub hvp_step: f64,
    /// Finite-difference step for the validating Hessian.
    pub hessian_step: f64,
    /// Displacement off the saddle along the downhill eigenvector.
    pub connect_displacement: f64,
    /// Maximum step length of the steepest-descent path tracer.
    pub descent_step: f64,
}

impl Default for TransitionConfig {
    fn default() -> Self {
        TransitionConfig {
            max_step: 0.1,
            orthogonal_steps: 10,
            hvp_step: 1e-5,
            hessian_step: 1e-4,
            connect_displacement: 1e-2,
            descent_step: 1e-3,
        }
    }
}

/// Improved-tangent estimate at interior image `i`.
fn tangent(images: &[Vec<f64>], values: &[f64], i: usize) -> Vec<f64> {
    let plus: Vec<f64> = images[i + 1].iter().zip(&images[i]).map(|(a, b)| a - b).collect();
    let minus: Vec<f64> = images[i].iter().zip(&images[i - 1]).map(|(a, b)| a - b).collect();
    let (vp, v0, vm) = (values[i + 1], values[i], values[i - 1]);
    let mut t: Vec<f64> = if vp > v0 && v0 > vm {
        plus
    } else if vp < v0 && v0 < vm {
        minus
    } else {
        let dmax = (vp - v0).abs().max((vm - v0).abs());
        let dmin = (vp - v0).abs().min((vm - v0).abs());
        let (wp, wm) = if vp > vm { (dmax, dmin) } else { (dmin, dmax) };
        plus.iter().zip(&minus).map(|(p, m)| wp * p + wm * m).collect()
    };
    let n = norm(&t);
    if n > 0.0 {
        t.iter_mut().for_each(|x| *x /= n);
    }
    t
}

/// Relaxes a band between `a` and `b` and returns the interior images that
/// are local maxima of the value along the band, highest first.
pub fn neb_candidates(surface: &(impl Surface + ?Sized), a: &[f64], b: &[f64], cfg: &NebConfig) -> Result<Vec<Point>> {
    check_dimension(surface, a)?;
    check_dimension(surface, b)?;
    if cfg.n_images < 3 || !(cfg.spring_constant > 0.0) || !(cfg.step_size > 0.0) || !(cfg.force_tolerance > 0.0) {
        return Err(Error::invalid("neb needs n_images >= 3 and positive spring constant, step and tolerance"));
    }
    let span = distance(a, b);
    if span == 0.0 {
        return Err(Error::invalid("neb endpoints coincide"));
    }
    let n = cfg.n_images;
    let mut images: Vec<Vec<f64>> = (0..n)
        .map(|k| {
            let t = k as f64 / (n - 1) as f64;
            a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
        })
        .collect();
    let mut values = vec![0.0; n];
    let mut grads = vec![vec![0.0; a.len()]; n];
    values[0] = eval_checked(surface, a)?.0;
    values[n - 1] = eval_checked(surface, b)?.0;

    let max_disp = 0.1 * span / (n - 1) as f64;
    let mut alpha = cfg.step_size;
    let mut previous_force = f64::INFINITY;
    let mut calls = 0usize;
    let mut climbing = false;

    loop {
        for i in 1..n - 1 {
            let (v, g) = eval_checked(surface, &images[i])?;
            values[i] = v;
            grads[i] = g;
        }
        calls += n - 2;

        let top = (1..n - 1).max_by(|&x, &y| values[x].total_cmp(&values[y])).unwrap_or(1);
        let mut forces = vec![vec![0.0; a.len()]; n];
        let mut max_force = 0.0f64;
        for i in 1..n - 1 {
            let tau = tangent(&images, &values, i);
            let g = &grads[i];
            let g_par = dot(g, &tau);
            let f: Vec<f64> = if climbing && i == top {
                g.iter().zip(&tau).map(|(gi, ti)| -gi + 2.0 * g_par * ti).collect()
            } else {
                let spring = cfg.spring_constant * (distance(&images[i + 1], &images[i]) - distance(&images[i], &images[i - 1]));
                g.iter().zip(&tau).map(|(gi, ti)| -(gi - g_par * ti) + spring * ti).collect()
            };
            max_force = max_force.max(norm(&f));
            forces[i] = f;
        }

        if max_force < cfg.force_tolerance && (climbing || !cfg.climbing_image) {
            break;
        }
        if calls + (n - 2) > cfg.max_force_calls {
            break;
        }
        if cfg.climbing_image && !climbing && (max_force < 20.0 * cfg.force_tolerance || calls * 5 > cfg.max_force_calls) {
            climbing = true;
            previous_force = f64::INFINITY;
            continue;
        }

        if max_force > previous_force {
            alpha = (alpha * 0.5).max(cfg.step_size * 1e-4);
        } else {
            alpha = (alpha * 1.1).min(cfg.step_size * 10.0);
        }
        previous_force = max_force;
        for i in 1..n - 1 {
            let f = &forces[i];
            let fnorm = norm(f);
            let scale = if alpha * fnorm > max_disp { max_disp / fnorm } else { alpha };
            for (x, fi) in images[i].iter_mut().zip(f) {
                *x += scale * fi;
            }
        }
    }

    let mut maxima: Vec<usize> = (1..n - 1).filter(|&i| values[i] > values[i - 1] && values[i] > values[i + 1]).collect();
    maxima.sort_by(|&x, &y| values[y].total_cmp(&values[x]));
    maxima
        .into_iter()
        .map(|i| {
            Point::new(images[i].clone()).map_err(|e| Error::Evaluation {
                point: images[i].clone(),
                reason: e.to_string(),
            })
        })
        .collect()
}

struct ModeSolver<'a, S: ?Sized> {
    surface: &'a S,
    eps: f64,
}

impl<'a, S: Surface + ?Sized> ModeSolver<'a, S> {
    /// `H v` by central differences of the gradient (`v` unit length).
    fn hvp(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let xp: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + self.eps * b).collect();
        let xm: Vec<f64> = x.iter().zip(v).map(|(a, b)| a - self.eps * b).collect();
        let gp = gradient_checked(self.surface, &xp)?;
        let gm = gradient_checked(self.surface, &xm)?;
        Ok(gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * self.eps)).collect())
    }

    /// Smallest Hessian eigenpair by Rayleigh-quotient minimisation over a
    /// locally optimal three-vector subspace `{v, residual, previous step}`.
    fn smallest_mode(&self, x: &[f64], guess: &[f64]) -> Result<(f64, Vec<f64>)> {
        let d = x.len();
        let mut v = guess.to_vec();
        normalize(&mut v);
        let mut hv = self.hvp(x, &v)?;
        let mut lambda = dot(&v, &hv);
        let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
        for _ in 0..(4 * d).clamp(10, 200) {
            let r: Vec<f64> = hv.iter().zip(&v).map(|(h, vi)| h - lambda * vi).collect();
            if norm(&r) < 1e-8 * lambda.abs().max(1.0) {
                break;
            }
            let mut basis = vec![v.clone()];
            let mut images = vec![hv.clone()];
            let mut candidates = vec![r];
            if let Some((p, _)) = &prev {
                candidates.push(p.clone());
            }
            for mut c in candidates {
                for q in &basis {
                    let proj = dot(&c, q);
                    c.iter_mut().zip(q).for_each(|(ci, qi)| *ci -= proj * qi);
                }
                let cn = norm(&c);
                if cn > 1e-10 {
                    c.iter_mut().for_each(|x| *x /= cn);
                    images.push(self.hvp(x, &c)?);
                    basis.push(c);
                }
            }
            let k = basis.len();
            if k == 1 {
                break;
            }
            let mut small = DMatrix::zeros(k, k);
            for i in 0..k {
                for j in 0..k {
                    small[(i, j)] = 0.5 * (dot(&basis[i], &images[j]) + dot(&basis[j], &images[i]));
                }
            }
            let eig = SymmetricEigen::new(small);
            let idx = (0..k).min_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b])).unwrap();
            let y = eig.eigenvectors.column(idx);
            let mut nv = vec![0.0; d];
            let mut nhv = vec![0.0; d];
            let mut p = vec![0.0; d];
            let mut hp = vec![0.0; d];
            for i in 0..k {
                for t in 0..d {
                    nv[t] += y[i] * basis[i][t];
                    nhv[t] += y[i] * images[i][t];
                    if i > 0 {
                        p[t] += y[i] * basis[i][t];
                        hp[t] += y[i] * images[i][t];
                    }
                }
            }
            let nn = norm(&nv);
            nv.iter_mut().for_each(|x| *x /= nn);
            nhv.iter_mut().for_each(|x| *x /= nn);
            v = nv;
            hv = nhv;
            lambda = dot(&v, &hv);
            prev = Some((p, hp));
        }
        let hv = self.hvp(x, &v)?;
        Ok((dot(&v, &hv), v))
    }
}

fn normalize(v: &mut [f64]) {
    let n = norm(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

fn canonical_sign(v: &mut [f64]) {
    let lead = v.iter().copied().fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
    if lead < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Checks the index-1 condition with the finite-difference Hessian spectrum
/// and packages the result.
pub fn validate_transition_state(
    surface: &(impl Surface + ?Sized),
    position: &[f64],
    hessian_step: f64,
) -> Result<TransitionState> {
    let (value, g) = eval_checked(surface, position)?;
    let hess = fd_hessian(surface, position, hessian_step)?;
    let (eigenvalues, vectors) = symmetric_spectrum(&hess);
    let negative = eigenvalues.iter().filter(|l| **l < 0.0).count();
    if negative == 0 || eigenvalues.get(1).is_some_and(|l| *l == 0.0) {
        return Err(Error::NotASaddle {
            point: position.to_vec(),
            smallest_eigenvalue: eigenvalues[0],
        });
    }
    if negative > 1 {
        return Err(Error::HigherIndexSaddle {
            point: position.to_vec(),
            negative,
        });
    }
    let mut v = vectors[0].clone();
    normalize(&mut v);
    canonical_sign(&mut v);
    Ok(TransitionState {
        position: Point::new(position.to_vec())?,
        value,
        smallest_eigenvalue: eigenvalues[0],
        downhill_eigenvector: v,
        gradient_norm: norm(&g),
    })
}

/// Hybrid eigenvector following from `start`: step uphill along the softest
/// Hessian mode, minimise in the orthogonal complement, repeat until the
/// gradient vanishes; then validate the index-1 condition.
pub fn eigenvector_following_refine(
    surface: &(impl Surface + ?Sized),
    start: &[f64],
    cfg: &MinimizerConfig,
    ts_cfg: &TransitionConfig,
) -> Result<TransitionState> {
    refine_with_guess(surface, start, None, cfg, ts_cfg)
}

pub(crate) fn refine_with_guess(
    surface: &(impl Surface + ?Sized),
    start: &[f64],
    guess: Option<&[f64]>,
    cfg: &MinimizerConfig,
    ts_cfg: &TransitionConfig,
) -> Result<TransitionState> {
    cfg.validate()?;
    check_dimension(surface, start)?;
    if !(ts_cfg.max_step > 0.0 && ts_cfg.hvp_step > 0.0) {
        return Err(Error::invalid("transition search needs positive max_step and hvp_step"));
    }
    let d = start.len();
    let solver = ModeSolver { surface, eps: ts_cfg.hvp_step };
    let mut x = start.to_vec();
    let mut mode: Vec<f64> = match guess {
        Some(g) if norm(g) > 0.0 => g.to_vec(),
        _ => (0..d).map(|i| 1.0 + 0.137 * i as f64).collect(),
    };
    normalize(&mut mode);
    let mut trust = ts_cfg.max_step;
    let (_, mut g) = eval_checked(surface, &x)?;
    let mut gnorm = norm(&g);

    let mut iterations = 0;
    while gnorm >= cfg.gradient_tolerance {
        if iterations == cfg.max_iterations {
            return Err(Error::NonConvergence {
                iterations,
                gradient_norm: gnorm,
            });
        }
        iterations += 1;
        let (lambda, v) = solver.smallest_mode(&x, &mode)?;
        mode = v;

        // uphill along the softest mode
        let gv = dot(&g, &mode);
        let t = if lambda < 0.0 {
            let h = 2.0 * gv / (lambda.abs() * (1.0 + (1.0 + 4.0 * gv * gv / (lambda * lambda)).sqrt()));
            h.clamp(-trust, trust)
        } else if gv >= 0.0 {
            trust
        } else {
            -trust
        };
        for (xi, vi) in x.iter_mut().zip(&mode) {
            *xi += t * vi;
        }

        // downhill in the complement
        let mut memory = LbfgsMemory::new(cfg.history_size);
        let (mut f, mut gx) = eval_checked(surface, &x)?;
        for _ in 0..ts_cfg.orthogonal_steps {
            let gp = project_out(&gx, &mode);
            if norm(&gp) < 0.1 * cfg.gradient_tolerance {
                break;
            }
            let mut dir = project_out(&memory.direction(&gp), &mode);
            if dot(&dir, &gp) >= 0.0 {
                memory.clear();
                dir = gp.iter().map(|x| -x).collect();
            }
            let dn = norm(&dir);
            if dn > trust {
                dir.iter_mut().for_each(|x| *x *= trust / dn);
            }
            let slope = dot(&dir, &gp);
            let mut step = 1.0;
            let mut moved = None;
            for _ in 0..40 {
                let trial: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a + step * b).collect();
                let (ft, gt) = eval_checked(surface, &trial)?;
                if ft <= f + 1e-4 * step * slope {
                    moved = Some((trial, ft, gt));
                    break;
                }
                step *= 0.5;
            }
            let Some((xn, fnew, gn)) = moved else { break };
            let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
            let y = project_out(&gn.iter().zip(&gx).map(|(a, b)| a - b).collect::<Vec<_>>(), &mode);
            memory.push(s, y);
            x = xn;
            f = fnew;
            gx = gn;
        }

        g = gx;
        let new_norm = norm(&g);
        trust = if new_norm > gnorm {
            (trust * 0.5).max(1e-10)
        } else {
            (trust * 1.5).min(ts_cfg.max_step)
        };
        gnorm = new_norm;
    }
    validate_transition_state(surface, &x, ts_cfg.hessian_step)
}

fn project_out(g: &[f64], v: &[f64]) -> Vec<f64> {
    let c = dot(g, v);
    g.iter().zip(v).map(|(a, b)| a - c * b).collect()
}

/// Displaces the saddle by `±displacement` along its downhill eigenvector
/// and follows steepest descent from each side. The two minima may coincide.
pub fn connect_transition_state(
    surface: &(impl Surface + ?Sized),
    ts: &TransitionState,
    displacement: f64,
    descent_step: f64,
    bounds: Option<&Bounds>,
    cfg: &MinimizerConfig,
) -> Result<(LocalMinimum, LocalMinimum)> {
    if !(displacement > 0.0) {
        return Err(Error::invalid(format!("connection displacement must be positive, got {displacement}")));
    }
    let side = |sign: f64| -> Result<LocalMinimum> {
        let x: Vec<f64> = ts
            .position
            .iter()
            .zip(&ts.downhill_eigenvector)
            .map(|(p, v)| p + sign * displacement * v)
            .collect();
        let m = steepest_descent_path(surface, &x, descent_step, bounds, cfg)?;
        if !m.converged {
            return Err(Error::NonConvergence {
                iterations: m.iterations,
                gradient_norm: m.gradient_norm,
            });
        }
        Ok(m)
    };
    Ok((side(1.0)?, side(-1.0)?))
}
