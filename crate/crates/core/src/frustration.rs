//! Frustration of minimum-to-transition-state directions, the averaged
//! network metric, the rotated-Gaussian roughness surface built from them,
//! and selection of the roughest points.

use log::warn;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{distance, norm, Bounds, Point, RandomSource};
use crate::ktn::KineticTransitionNetwork;
use crate::optimize::{basin_hopping, BasinHoppingConfig, MinimizerConfig};
use crate::surfaces::{check_dimension, fd_hessian, symmetric_spectrum, Scaled, Surface};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrustrationVector {
    pub min_position: Point,
    pub ts_position: Point,
    pub f_min: f64,
    pub f_ts: f64,
    pub lengthscale: f64,
    pub frustration: f64,
}

impl FrustrationVector {
    pub fn new(min_position: Point, f_min: f64, ts_position: Point, f_ts: f64, lengthscale: f64) -> Self {
        let d = distance(&min_position, &ts_position);
        let frustration = (-d * d / (2.0 * lengthscale * lengthscale)).exp() * (f_ts - f_min);
        FrustrationVector {
            min_position,
            ts_position,
            f_min,
            f_ts,
            lengthscale,
            frustration,
        }
    }
}

fn check_lengthscale(l: f64) -> Result<()> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::invalid(format!("lengthscale must be positive, got {l}")));
    }
    Ok(())
}

/// One frustration vector per distinct minimum attached to the edge.
pub fn edge_frustration(net: &KineticTransitionNetwork, edge_id: usize, lengthscale: f64) -> Result<Vec<FrustrationVector>> {
    check_lengthscale(lengthscale)?;
    let edge = net
        .edge(edge_id)
        .ok_or_else(|| Error::invalid(format!("unknown edge id {edge_id}")))?;
    let mut ids = vec![edge.min_a];
    if edge.min_b != edge.min_a {
        ids.push(edge.min_b);
    }
    ids.into_iter()
        .map(|id| {
            let m = net
                .minimum(id)
                .ok_or_else(|| Error::invalid(format!("edge {edge_id} references unknown minimum {id}")))?;
            Ok(FrustrationVector::new(
                m.position.clone(),
                m.value,
                edge.ts_position.clone(),
                edge.ts_value,
                lengthscale,
            ))
        })
        .collect()
}

pub fn all_frustration_vectors(net: &KineticTransitionNetwork, lengthscale: f64) -> Result<Vec<FrustrationVector>> {
    let mut out = Vec::new();
    for e in net.edges() {
        out.extend(edge_frustration(net, e.id, lengthscale)?);
    }
    Ok(out)
}

/// Mean frustration over every direction of every edge.
pub fn overall_frustration(net: &KineticTransitionNetwork, lengthscale: f64) -> Result<f64> {
    if net.edges().is_empty() {
        return Err(Error::EmptyNetwork);
    }
    let vectors = all_frustration_vectors(net, lengthscale)?;
    Ok(vectors.iter().map(|v| v.frustration).sum::<f64>() / vectors.len() as f64)
}

/// Orthogonal matrix whose first column is `v / |v|`.
///
/// Built as `(I - 2 u u^T) F`, with `u = (e1 + v̂) / |e1 + v̂|` and `F` the
/// flip of the first coordinate; falls back to `F` itself when `v̂ = -e1`.
pub fn rotation_to_axis(v: &[f64]) -> Result<DMatrix<f64>> {
    let n = norm(v);
    if v.is_empty() || !(n > 0.0) || !n.is_finite() {
        return Err(Error::invalid("rotation axis must be a non-zero finite vector"));
    }
    let d = v.len();
    let mut u: Vec<f64> = v.iter().map(|x| x / n).collect();
    u[0] += 1.0;
    let un = norm(&u);
    let mut r = DMatrix::<f64>::identity(d, d);
    if un > 1e-8 {
        u.iter_mut().for_each(|x| *x /= un);
        for i in 0..d {
            for j in 0..d {
                r[(i, j)] -= 2.0 * u[i] * u[j];
            }
        }
    }
    for i in 0..d {
        r[(i, 0)] = -r[(i, 0)];
    }
    Ok(r)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoughnessComponent {
    pub weight: f64,
    pub mean: Point,
    pub axis: Vec<f64>,
    pub rotation: DMatrix<f64>,
    pub axial_variance: f64,
    pub orthogonal_variance: f64,
}

impl RoughnessComponent {
    pub fn new(weight: f64, mean: Point, axis: &[f64], axial_variance: f64, orthogonal_variance: f64) -> Result<Self> {
        if mean.dimension() != axis.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.dimension(),
                got: axis.len(),
            });
        }
        if !(axial_variance > 0.0 && orthogonal_variance > 0.0) {
            return Err(Error::invalid("roughness variances must be positive"));
        }
        let rotation = rotation_to_axis(axis)?;
        let axis = rotation.column(0).iter().copied().collect();
        Ok(RoughnessComponent {
            weight,
            mean,
            axis,
            rotation,
            axial_variance,
            orthogonal_variance,
        })
    }

    /// Unnormalised kernel value and the rotated-frame offset scaled by the
    /// inverse variances (`diag(1/var) R^T (p - mean)`).
    fn kernel(&self, p: &[f64]) -> (f64, Vec<f64>) {
        let offset: Vec<f64> = p.iter().zip(self.mean.iter()).map(|(x, m)| x - m).collect();
        let mut scaled = self.rotation.tr_mul(&nalgebra::DVector::from_column_slice(&offset));
        let mut q = 0.0;
        for (k, y) in scaled.iter_mut().enumerate() {
            let var = if k == 0 { self.axial_variance } else { self.orthogonal_variance };
            q += *y * *y / var;
            *y /= var;
        }
        (self.weight * (-0.5 * q).exp(), scaled.iter().copied().collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoughnessParams {
    pub lengthscale: f64,
    /// Variance along the minimum-to-saddle axis.
    pub sigma: f64,
    /// Variance along every orthogonal axis.
    pub delta: f64,
    /// Components with frustration at or below this are dropped.
    pub weight_floor: f64,
    /// Multiply `sigma` by the squared minimum-to-saddle distance per edge.
    pub scale_sigma_with_edge_length: bool,
}

impl Default for RoughnessParams {
    fn default() -> Self {
        RoughnessParams {
            lengthscale: 80.0,
            sigma: 0.99,
            delta: 0.25,
            weight_floor: 0.0,
            scale_sigma_with_edge_length: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoughnessSurface {
    pub dimension: usize,
    pub lengthscale: f64,
    pub sigma: f64,
    pub delta: f64,
    pub components: Vec<RoughnessComponent>,
}

impl RoughnessSurface {
    pub fn new(dimension: usize, lengthscale: f64, sigma: f64, delta: f64, components: Vec<RoughnessComponent>) -> Result<Self> {
        if let Some(c) = components.iter().find(|c| c.mean.dimension() != dimension) {
            return Err(Error::DimensionMismatch {
                expected: dimension,
                got: c.mean.dimension(),
            });
        }
        Ok(RoughnessSurface {
            dimension,
            lengthscale,
            sigma,
            delta,
            components,
        })
    }

    pub fn eval(&self, p: &[f64]) -> Result<f64> {
        check_dimension(self, p)?;
        Ok(self.value(p))
    }

    /// Same surface with every weight multiplied by `factor`.
    pub fn rescaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.components.iter_mut().for_each(|c| c.weight *= factor);
        out
    }

    pub fn max_weight(&self) -> f64 {
        self.components.iter().map(|c| c.weight.abs()).fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> String {
        let doc = RoughnessDocument {
            dimension: self.dimension,
            lengthscale: self.lengthscale,
            sigma: self.sigma,
            delta: self.delta,
            components: self
                .components
                .iter()
                .map(|c| ComponentDocument {
                    weight: c.weight,
                    mean: c.mean.clone(),
                    axis_unit_vector: c.axis.clone(),
                    axial_variance: (c.axial_variance != self.sigma).then_some(c.axial_variance),
                })
                .collect(),
        };
        serde_json::to_string(&doc).expect("roughness serialisation cannot fail")
    }

    /// Rebuilds rotations from the stored unit axes.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: RoughnessDocument = Error::parse_json(text)?;
        let components = doc
            .components
            .into_iter()
            .enumerate()
            .map(|(i, c)| {
                RoughnessComponent::new(c.weight, c.mean, &c.axis_unit_vector, c.axial_variance.unwrap_or(doc.sigma), doc.delta)
                    .map_err(|e| Error::Parse {
                        path: format!("components[{i}]"),
                        message: e.to_string(),
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        RoughnessSurface::new(doc.dimension, doc.lengthscale, doc.sigma, doc.delta, components)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RoughnessDocument {
    dimension: usize,
    lengthscale: f64,
    sigma: f64,
    delta: f64,
    components: Vec<ComponentDocument>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComponentDocument {
    weight: f64,
    mean: Point,
    axis_unit_vector: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    axial_variance: Option<f64>,
}

impl Surface for RoughnessSurface {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn value(&self, p: &[f64]) -> f64 {
        self.components.iter().map(|c| c.kernel(p).0).sum()
    }

    fn gradient(&self, p: &[f64]) -> Vec<f64> {
        self.value_and_gradient(p).1
    }

    fn value_and_gradient(&self, p: &[f64]) -> (f64, Vec<f64>) {
        let mut v = 0.0;
        let mut g = vec![0.0; p.len()];
        for c in &self.components {
            let (k, scaled) = c.kernel(p);
            v += k;
            // grad = -k R diag(1/var) R^T (p - mean)
            let back = &c.rotation * nalgebra::DVector::from_vec(scaled);
            for (gi, bi) in g.iter_mut().zip(back.iter()) {
                *gi -= k * bi;
            }
        }
        (v, g)
    }
}

/// One rotated Gaussian per frustration direction, centred three quarters
/// of the way from the minimum to the transition state.
pub fn build_roughness_surface(net: &KineticTransitionNetwork, params: &RoughnessParams) -> Result<RoughnessSurface> {
    check_lengthscale(params.lengthscale)?;
    if !(params.sigma > 0.0 && params.delta > 0.0) {
        return Err(Error::invalid("roughness variances must be positive"));
    }
    let mut components = Vec::new();
    for v in all_frustration_vectors(net, params.lengthscale)? {
        if v.frustration <= params.weight_floor {
            continue;
        }
        let axis: Vec<f64> = v.ts_position.iter().zip(v.min_position.iter()).map(|(t, m)| t - m).collect();
        let len = norm(&axis);
        if len == 0.0 {
            warn!("minimum and transition state coincide at {:?}; component skipped", v.min_position.as_slice());
            continue;
        }
        let mean = Point::new(v.min_position.iter().zip(&axis).map(|(m, a)| m + 0.75 * a).collect())?;
        let axial = if params.scale_sigma_with_edge_length {
            params.sigma * len * len
        } else {
            params.sigma
        };
        components.push(RoughnessComponent::new(v.frustration, mean, &axis, axial, params.delta)?);
    }
    RoughnessSurface::new(net.dimension, params.lengthscale, params.sigma, params.delta, components)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FillSelection {
    /// Highest roughness first.
    pub points: Vec<(Point, f64)>,
    /// How many fewer maxima were found than requested.
    pub shortfall: usize,
}

/// Basin-hopping on the negated roughness surface; returns the `k` highest
/// distinct interior maxima.
///
/// The search runs on the surface divided by its largest weight so that a
/// global rescaling of the weights cannot change which maxima are found.
pub fn select_fill_points(
    surface: &RoughnessSurface,
    bounds: &Bounds,
    k: usize,
    rng: &RandomSource,
    bh: &BasinHoppingConfig,
    min_cfg: &MinimizerConfig,
) -> Result<FillSelection> {
    if k == 0 {
        return Err(Error::invalid("k must be >= 1"));
    }
    if surface.components.is_empty() {
        return Err(Error::EmptySurface);
    }
    bounds.check_dimension(surface.dimension)?;
    let scale = surface.max_weight();
    if !(scale > 0.0) {
        return Err(Error::EmptySurface);
    }
    let negated = Scaled {
        inner: surface,
        scale: -1.0 / scale,
    };
    let found = basin_hopping(&negated, bounds, None, bh, &rng.child("select"), min_cfg)?;
    let mut maxima: Vec<(Point, f64)> = Vec::new();
    for m in found.into_iter().filter(|m| m.is_stationary()) {
        // ascending in -F/scale, i.e. descending roughness
        if maxima.iter().any(|(p, _)| distance(p, &m.position) <= bh.dedup_position_tol) {
            continue;
        }
        // far-field plateaus pass the gradient test but are not maxima
        let hessian = fd_hessian(&negated, &m.position, 1e-4)?;
        if symmetric_spectrum(&hessian).0[0] <= 0.0 {
            continue;
        }
        let value = surface.value(&m.position);
        maxima.push((m.position, value));
    }
    let shortfall = k.saturating_sub(maxima.len());
    maxima.truncate(k);
    Ok(FillSelection { points: maxima, shortfall })
}
