//! Radial and polar sample grids, and functions sampled on them.
//!
//! Radial grids describe rotationally symmetric graphs over ℝⁿ by their
//! profile on `[r_min, r_max]`. Polar grids (n = 2 only) are tensor grids in
//! `(r, θ)` with θ uniform and periodic; their first ring must sit strictly
//! off the origin, and the stencil across the origin uses the node at
//! `θ + π` of the same ring.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};

pub const MIN_NODES: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    n: usize,
    radial: Vec<f64>,
    angular: Option<usize>,
}

impl GridSpec {
    pub fn from_nodes(n: usize, radial: Vec<f64>) -> Result<Self> {
        let spec = GridSpec {
            n,
            radial,
            angular: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn uniform(n: usize, r_min: f64, r_max: f64, count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::InvalidGrid(format!("{count} nodes")));
        }
        let h = (r_max - r_min) / (count - 1) as f64;
        let mut nodes: Vec<f64> = (0..count).map(|i| r_min + h * i as f64).collect();
        nodes[count - 1] = r_max;
        Self::from_nodes(n, nodes)
    }

    /// Log-spaced nodes, `r_min > 0`.
    pub fn geometric(n: usize, r_min: f64, r_max: f64, count: usize) -> Result<Self> {
        if !(r_min > 0.0) || count < 2 {
            return Err(Error::InvalidGrid(
                "geometric grid needs r_min > 0 and two nodes".into(),
            ));
        }
        let q = (r_max / r_min).ln() / (count - 1) as f64;
        let mut nodes: Vec<f64> = (0..count).map(|i| r_min * (q * i as f64).exp()).collect();
        nodes[0] = r_min;
        nodes[count - 1] = r_max;
        Self::from_nodes(n, nodes)
    }

    /// Nodes `r_max · sinh(s·i/(N−1)) / sinh(s)`: fine near the origin, coarse far out.
    /// `stretch` → 0 recovers the uniform grid.
    pub fn stretched(n: usize, r_max: f64, count: usize, stretch: f64) -> Result<Self> {
        if stretch <= 1e-8 {
            return Self::uniform(n, 0.0, r_max, count);
        }
        let mut nodes: Vec<f64> = (0..count)
            .map(|i| r_max * (stretch * i as f64 / (count - 1) as f64).sinh() / stretch.sinh())
            .collect();
        nodes[count - 1] = r_max;
        Self::from_nodes(n, nodes)
    }

    /// Polar tensor grid in the plane (n = 2).
    pub fn polar(radial: Vec<f64>, n_theta: usize) -> Result<Self> {
        let spec = GridSpec {
            n: 2,
            radial,
            angular: Some(n_theta),
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidGrid("dimension must be at least 1".into()));
        }
        if self.radial.len() < MIN_NODES {
            return Err(Error::InvalidGrid(format!(
                "{} radial nodes, need at least {MIN_NODES}",
                self.radial.len()
            )));
        }
        if self.radial.iter().any(|r| !r.is_finite()) {
            return Err(Error::InvalidGrid("non-finite node".into()));
        }
        if self.radial[0] < 0.0 {
            return Err(Error::InvalidGrid("r_min must be non-negative".into()));
        }
        if let Some(w) = self.radial.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(format!(
                "nodes not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
        if let Some(nt) = self.angular {
            if self.n != 2 {
                return Err(Error::InvalidGrid("polar mode requires n = 2".into()));
            }
            if nt < MIN_NODES || nt % 2 != 0 {
                return Err(Error::InvalidGrid(format!(
                    "{nt} angular nodes, need an even count >= {MIN_NODES}"
                )));
            }
            if self.radial[0] <= 0.0 {
                return Err(Error::InvalidGrid(
                    "polar grids keep the first ring off the origin".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn radial_nodes(&self) -> &[f64] {
        &self.radial
    }

    pub fn n_radial(&self) -> usize {
        self.radial.len()
    }

    pub fn r_min(&self) -> f64 {
        self.radial[0]
    }

    pub fn r_max(&self) -> f64 {
        *self.radial.last().unwrap()
    }

    pub fn is_polar(&self) -> bool {
        self.angular.is_some()
    }

    pub fn n_theta(&self) -> usize {
        self.angular.unwrap_or(1)
    }

    pub fn d_theta(&self) -> f64 {
        2.0 * PI / self.n_theta() as f64
    }

    pub fn theta(&self, j: usize) -> f64 {
        self.d_theta() * j as f64
    }

    pub fn len(&self) -> usize {
        self.radial.len() * self.n_theta()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn has_origin(&self) -> bool {
        !self.is_polar() && self.radial[0] == 0.0
    }

    /// Largest spacing between neighbouring radial nodes.
    pub fn max_spacing(&self) -> f64 {
        self.radial
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n_theta() + j
    }

    /// Same grid scaled by `lambda` (nodes multiplied).
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        let spec = GridSpec {
            n: self.n,
            radial: self.radial.iter().map(|r| r * lambda).collect(),
            angular: self.angular,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Radial grid of dimension `n` with the same nodes.
    pub fn with_dimension(&self, n: usize) -> Result<Self> {
        let spec = GridSpec {
            n,
            radial: self.radial.clone(),
            angular: self.angular,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Index of the node closest to `r`.
    pub fn nearest(&self, r: f64) -> usize {
        match self
            .radial
            .binary_search_by(|x| x.partial_cmp(&r).unwrap_or(std::cmp::Ordering::Less))
        {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) if i >= self.radial.len() => self.radial.len() - 1,
            Err(i) => {
                if r - self.radial[i - 1] < self.radial[i] - r {
                    i - 1
                } else {
                    i
                }
            }
        }
    }

    /// Trapezoidal radial weights for `∫ f r^{n−1} dr` (the angular factor is left out).
    pub fn radial_volume_weights(&self) -> Vec<f64> {
        let r = &self.radial;
        let mut w = vec![0.0; r.len()];
        for k in 0..r.len() - 1 {
            let h = r[k + 1] - r[k];
            w[k] += 0.5 * h * r[k].powi(self.n as i32 - 1);
            w[k + 1] += 0.5 * h * r[k + 1].powi(self.n as i32 - 1);
        }
        w
    }
}

/// A real function sampled on a [`GridSpec`]. Polar layout is ring-major:
/// value `(i, j)` lives at `i * n_theta + j`.
#[derive(Debug, Clone)]
pub struct GridFunction {
    spec: Arc<GridSpec>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(spec: Arc<GridSpec>, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::InvalidInput(format!(
                "{} values for {} nodes",
                values.len(),
                spec.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite value at node {k}")));
        }
        Ok(GridFunction { spec, values })
    }

    pub fn from_radial_fn(spec: Arc<GridSpec>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = if spec.is_polar() {
            let nt = spec.n_theta();
            spec.radial_nodes()
                .iter()
                .flat_map(|&r| std::iter::repeat(f(r)).take(nt))
                .collect()
        } else {
            spec.radial_nodes().iter().map(|&r| f(r)).collect()
        };
        Self::new(spec, values)
    }

    pub fn from_polar_fn(spec: Arc<GridSpec>, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let nt = spec.n_theta();
        let mut values = Vec::with_capacity(spec.len());
        for &r in spec.radial_nodes() {
            for j in 0..nt {
                values.push(f(r, spec.theta(j)));
            }
        }
        Self::new(spec, values)
    }

    pub fn constant(spec: Arc<GridSpec>, c: f64) -> Result<Self> {
        let len = spec.len();
        Self::new(spec, vec![c; len])
    }

    pub fn spec(&self) -> &Arc<GridSpec> {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn same_grid(&self, other: &GridFunction) -> bool {
        Arc::ptr_eq(&self.spec, &other.spec) || *self.spec == *other.spec
    }

    pub fn max_abs_diff(&self, other: &GridFunction) -> Result<f64> {
        if !self.same_grid(other) {
            return Err(Error::InvalidInput("grid mismatch".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.spec.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if !self.same_grid(other) {
            return Err(Error::InvalidInput("grid mismatch".into()));
        }
        Self::new(
            self.spec.clone(),
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Cubic (four-point Lagrange) interpolation of a radial profile at `r`.
    /// Values outside `[r_min, r_max]` are rejected; `r < r_min` with a node at the
    /// origin cannot happen, so the even extension is not needed here.
    pub fn interpolate(&self, r: f64) -> Result<f64> {
        if self.spec.is_polar() {
            return Err(Error::InvalidInput("radial interpolation on a polar grid".into()));
        }
        let nodes = self.spec.radial_nodes();
        let (lo, hi) = (nodes[0], nodes[nodes.len() - 1]);
        let slack = 1e-12 * (1.0 + hi.abs());
        if r < lo - slack || r > hi + slack {
            return Err(Error::Domain(format!("r = {r} outside [{lo}, {hi}]")));
        }
        Ok(lagrange4(nodes, &self.values, r.clamp(lo, hi)))
    }
}

/// Four-point Lagrange interpolation on increasing `xs`.
pub(crate) fn lagrange4(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let m = xs.len();
    let k = match xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
        Ok(i) => return ys[i],
        Err(i) => i,
    };
    let start = k.saturating_sub(2).min(m.saturating_sub(4));
    let end = (start + 4).min(m);
    let mut acc = 0.0;
    for a in start..end {
        let mut w = 1.0;
        for b in start..end {
            if a != b {
                w *= (x - xs[b]) / (xs[a] - xs[b]);
            }
        }
        acc += w * ys[a];
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_short_and_unsorted_grids() {
        assert!(GridSpec::uniform(2, 0.0, 1.0, 5).is_err());
        assert!(GridSpec::from_nodes(2, vec![0.0, 1.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).is_err());
        assert!(GridSpec::from_nodes(2, vec![-1.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]).is_err());
        assert!(GridSpec::polar(vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0], 16).is_err());
        assert!(GridSpec::polar(vec![0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0], 15).is_err());
    }

    #[test]
    fn stretched_grid_is_fine_near_origin() {
        let g = GridSpec::stretched(2, 10.0, 101, 3.0).unwrap();
        let r = g.radial_nodes();
        assert_eq!(r[0], 0.0);
        assert_eq!(r[100], 10.0);
        assert!(r[1] - r[0] < r[100] - r[99]);
    }

    #[test]
    fn cubic_interpolation_is_exact_for_cubics() {
        let g = Arc::new(GridSpec::geometric(2, 0.5, 8.0, 20).unwrap());
        let f = GridFunction::from_radial_fn(g, |r| r * r * r - 2.0 * r + 1.0).unwrap();
        for &x in &[0.5, 0.77, 3.3, 7.99, 8.0] {
            let y = x * x * x - 2.0 * x + 1.0;
            assert!((f.interpolate(x).unwrap() - y).abs() < 1e-10);
        }
        assert!(f.interpolate(8.5).is_err());
    }

    #[test]
    fn nonfinite_values_rejected() {
        let g = Arc::new(GridSpec::uniform(1, 0.0, 1.0, 8).unwrap());
        assert!(GridFunction::from_radial_fn(g, |r| 1.0 / (r - 0.0)).is_err());
    }
}
