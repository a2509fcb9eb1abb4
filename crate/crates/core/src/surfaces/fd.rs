use nalgebra::{DMatrix, SymmetricEigen};

use super::{check_dimension, value_checked, Surface};
use crate::error::{Error, Result};

fn check_step(h: f64) -> Result<()> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid(format!("finite-difference step must be positive, got {h}")));
    }
    Ok(())
}

/// Central-difference gradient.
pub fn fd_gradient(surface: &(impl Surface + ?Sized), p: &[f64], h: f64) -> Result<Vec<f64>> {
    check_step(h)?;
    check_dimension(surface, p)?;
    let mut x = p.to_vec();
    let mut g = Vec::with_capacity(p.len());
    for i in 0..p.len() {
        x[i] = p[i] + h;
        let fp = value_checked(surface, &x)?;
        x[i] = p[i] - h;
        let fm = value_checked(surface, &x)?;
        x[i] = p[i];
        g.push((fp - fm) / (2.0 * h));
    }
    Ok(g)
}

/// Second-order central-stencil Hessian from function values, symmetrised.
pub fn fd_hessian(surface: &(impl Surface + ?Sized), p: &[f64], h: f64) -> Result<DMatrix<f64>> {
    check_step(h)?;
    check_dimension(surface, p)?;
    let d = p.len();
    let f0 = value_checked(surface, p)?;
    let mut x = p.to_vec();
    let mut hess = DMatrix::zeros(d, d);
    for i in 0..d {
        x[i] = p[i] + h;
        let fp = value_checked(surface, &x)?;
        x[i] = p[i] - h;
        let fm = value_checked(surface, &x)?;
        x[i] = p[i];
        hess[(i, i)] = (fp - 2.0 * f0 + fm) / (h * h);
    }
    for i in 0..d {
        for j in (i + 1)..d {
            let mut corner = |si: f64, sj: f64| -> Result<f64> {
                x[i] = p[i] + si * h;
                x[j] = p[j] + sj * h;
                let v = value_checked(surface, &x);
                x[i] = p[i];
                x[j] = p[j];
                v
            };
            let fpp = corner(1.0, 1.0)?;
            let fpm = corner(1.0, -1.0)?;
            let fmp = corner(-1.0, 1.0)?;
            let fmm = corner(-1.0, -1.0)?;
            let hij = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
            hess[(i, j)] = hij;
            hess[(j, i)] = hij;
        }
    }
    Ok((&hess + hess.transpose()) * 0.5)
}

/// Eigenvalues in ascending order with matching unit eigenvectors (columns).
pub fn symmetric_spectrum(m: &DMatrix<f64>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect();
    (values, vectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surfaces::{AnalyticMixtureSurface, FnSurface, MixtureComponent};
    use crate::geometry::Point;

    #[test]
    fn gradient_exact_on_affine() {
        let a = [1.5, -2.0, 0.25];
        let s = FnSurface::new(3, move |p: &[f64]| a.iter().zip(p).map(|(x, y)| x * y).sum::<f64>() + 3.0, move |_| a.to_vec());
        for h in [1e-3, 1e-1, 1.0] {
            let g = fd_gradient(&s, &[0.3, 0.1, -0.7], h).unwrap();
            for i in 0..3 {
                assert!((g[i] - a[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_surface_derivatives_vanish() {
        let s = FnSurface::new(2, |_: &[f64]| 4.0, |_| vec![0.0, 0.0]);
        assert_eq!(fd_gradient(&s, &[0.1, 0.2], 1e-4).unwrap(), vec![0.0, 0.0]);
        assert_eq!(fd_hessian(&s, &[0.1, 0.2], 1e-4).unwrap(), DMatrix::zeros(2, 2));
    }

    #[test]
    fn gradient_matches_mixture_analytic() {
        let s = AnalyticMixtureSurface::new(
            2,
            vec![
                MixtureComponent::new(1.3, Point::new(vec![0.2, -0.1]).unwrap(), 0.4).unwrap(),
                MixtureComponent::new(-0.7, Point::new(vec![-0.5, 0.6]).unwrap(), 0.8).unwrap(),
            ],
        )
        .unwrap();
        let p = [0.1, 0.3];
        let fd = fd_gradient(&s, &p, 1e-5).unwrap();
        let g = s.gradient(&p);
        for i in 0..2 {
            assert!((fd[i] - g[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn hessian_of_quadratic() {
        let a = [0.5, 2.0, -1.0];
        let s = FnSurface::new(
            3,
            move |p: &[f64]| a.iter().zip(p).map(|(c, x)| c * x * x).sum(),
            move |p: &[f64]| a.iter().zip(p).map(|(c, x)| 2.0 * c * x).collect(),
        );
        let h = fd_hessian(&s, &[0.4, -0.3, 1.2], 1e-4).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 2.0 * a[i] } else { 0.0 };
                assert!((h[(i, j)] - expected).abs() < 1e-6, "{i},{j}: {}", h[(i, j)]);
            }
        }
    }

    #[test]
    fn hessian_of_gaussian_bump_at_mean() {
        let (w, width) = (1.7, 0.6);
        let s = AnalyticMixtureSurface::new(
            2,
            vec![MixtureComponent::new(w, Point::new(vec![0.3, 0.3]).unwrap(), width).unwrap()],
        )
        .unwrap();
        let h = fd_hessian(&s, &[0.3, 0.3], 1e-4).unwrap();
        let expected = -w / (width * width);
        assert!((h[(0, 0)] - expected).abs() < 1e-5);
        assert!((h[(1, 1)] - expected).abs() < 1e-5);
        assert!(h[(0, 1)].abs() < 1e-5);
    }

    #[test]
    fn non_finite_value_reports_point() {
        let s = FnSurface::new(1, |p: &[f64]| if p[0] > 0.5 { f64::NAN } else { 0.0 }, |_| vec![0.0]);
        match fd_gradient(&s, &[0.5], 0.1) {
            Err(Error::Evaluation { point, .. }) => assert!((point[0] - 0.6).abs() < 1e-12),
            other => panic!("expected evaluation error, got {other:?}"),
        }
        assert!(fd_gradient(&s, &[0.0], 0.0).is_err());
    }
}
