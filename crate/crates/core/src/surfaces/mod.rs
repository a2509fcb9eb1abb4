//! Scalar surfaces over the latent space.

mod fd;
mod mixture;
mod rbf;

pub use fd::{fd_gradient, fd_hessian, symmetric_spectrum};
pub use mixture::{demo_surface, AnalyticMixtureSurface, MixtureComponent};
pub use rbf::{thin_plate_kernel, RbfSurface};

use crate::error::{Error, Result};

/// Anything that can be evaluated to a scalar value and gradient.
pub trait Surface: Send + Sync {
    fn dimension(&self) -> usize;

    fn value(&self, p: &[f64]) -> f64;

    fn gradient(&self, p: &[f64]) -> Vec<f64>;

    fn value_and_gradient(&self, p: &[f64]) -> (f64, Vec<f64>) {
        (self.value(p), self.gradient(p))
    }
}

impl<S: Surface + ?Sized> Surface for &S {
    fn dimension(&self) -> usize {
        (**self).dimension()
    }
    fn value(&self, p: &[f64]) -> f64 {
        (**self).value(p)
    }
    fn gradient(&self, p: &[f64]) -> Vec<f64> {
        (**self).gradient(p)
    }
    fn value_and_gradient(&self, p: &[f64]) -> (f64, Vec<f64>) {
        (**self).value_and_gradient(p)
    }
}

impl<S: Surface + ?Sized> Surface for Box<S> {
    fn dimension(&self) -> usize {
        (**self).dimension()
    }
    fn value(&self, p: &[f64]) -> f64 {
        (**self).value(p)
    }
    fn gradient(&self, p: &[f64]) -> Vec<f64> {
        (**self).gradient(p)
    }
    fn value_and_gradient(&self, p: &[f64]) -> (f64, Vec<f64>) {
        (**self).value_and_gradient(p)
    }
}

/// `scale * inner(p)`; a negative scale turns maxima into minima.
pub struct Scaled<S> {
    pub inner: S,
    pub scale: f64,
}

impl<S: Surface> Surface for Scaled<S> {
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }
    fn value(&self, p: &[f64]) -> f64 {
        self.scale * self.inner.value(p)
    }
    fn gradient(&self, p: &[f64]) -> Vec<f64> {
        let mut g = self.inner.gradient(p);
        g.iter_mut().for_each(|x| *x *= self.scale);
        g
    }
    fn value_and_gradient(&self, p: &[f64]) -> (f64, Vec<f64>) {
        let (v, mut g) = self.inner.value_and_gradient(p);
        g.iter_mut().for_each(|x| *x *= self.scale);
        (self.scale * v, g)
    }
}

/// Surface assembled from closures; handy for analytic test landscapes.
pub struct FnSurface<V, G> {
    dimension: usize,
    value: V,
    gradient: G,
}

impl<V, G> FnSurface<V, G>
where
    V: Fn(&[f64]) -> f64 + Send + Sync,
    G: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    pub fn new(dimension: usize, value: V, gradient: G) -> Self {
        FnSurface {
            dimension,
            value,
            gradient,
        }
    }
}

impl<V, G> Surface for FnSurface<V, G>
where
    V: Fn(&[f64]) -> f64 + Send + Sync,
    G: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    fn dimension(&self) -> usize {
        self.dimension
    }
    fn value(&self, p: &[f64]) -> f64 {
        (self.value)(p)
    }
    fn gradient(&self, p: &[f64]) -> Vec<f64> {
        (self.gradient)(p)
    }
}

pub(crate) fn check_dimension(surface: &(impl Surface + ?Sized), p: &[f64]) -> Result<()> {
    if p.len() != surface.dimension() {
        return Err(Error::DimensionMismatch {
            expected: surface.dimension(),
            got: p.len(),
        });
    }
    Ok(())
}

/// Value and gradient with a finiteness check.
pub(crate) fn eval_checked(surface: &(impl Surface + ?Sized), p: &[f64]) -> Result<(f64, Vec<f64>)> {
    let (v, g) = surface.value_and_gradient(p);
    if !v.is_finite() || g.iter().any(|x| !x.is_finite()) {
        return Err(Error::Evaluation {
            point: p.to_vec(),
            reason: format!("non-finite value or gradient (value {v})"),
        });
    }
    Ok((v, g))
}

pub(crate) fn gradient_checked(surface: &(impl Surface + ?Sized), p: &[f64]) -> Result<Vec<f64>> {
    let g = surface.gradient(p);
    if g.iter().any(|x| !x.is_finite()) {
        return Err(Error::Evaluation {
            point: p.to_vec(),
            reason: "non-finite gradient".into(),
        });
    }
    Ok(g)
}

pub(crate) fn value_checked(surface: &(impl Surface + ?Sized), p: &[f64]) -> Result<f64> {
    let v = surface.value(p);
    if !v.is_finite() {
        return Err(Error::Evaluation {
            point: p.to_vec(),
            reason: format!("non-finite value {v}"),
        });
    }
    Ok(v)
}
