//! Radial operator `u ↦ u_rr/(1+u_r²) + (n−1)u_r/r` with its tridiagonal Jacobian.

use crate::error::Result;
use crate::grid::GridSpec;
use crate::linalg::solve_tridiagonal;
use crate::stencil::Weights3;

use super::SpatialOperator;

pub(crate) struct RadialOperator {
    n: f64,
    r: Vec<f64>,
    weights: Vec<Weights3>,
    origin: bool,
    inner_dirichlet: bool,
    drift: bool,
}

impl RadialOperator {
    pub fn new(spec: &GridSpec, drift: bool) -> Self {
        let r = spec.radial_nodes().to_vec();
        let m = r.len();
        let weights = (0..m)
            .map(|i| {
                if i == 0 || i == m - 1 {
                    Weights3 { d1: [0.0; 3], d2: [0.0; 3] }
                } else {
                    Weights3::at(r[i], [r[i - 1], r[i], r[i + 1]])
                }
            })
            .collect();
        RadialOperator {
            n: spec.n() as f64,
            origin: r[0] == 0.0,
            inner_dirichlet: r[0] > 0.0,
            r,
            weights,
            drift,
        }
    }

    #[inline]
    fn jet(&self, v: &[f64], i: usize) -> (f64, f64) {
        let w = &self.weights[i];
        let s = [v[i - 1], v[i], v[i + 1]];
        (w.apply_d1(s), w.apply_d2(s))
    }
}

impl SpatialOperator for RadialOperator {
    fn len(&self) -> usize {
        self.r.len()
    }

    fn is_dirichlet(&self, k: usize) -> bool {
        k == self.r.len() - 1 || (k == 0 && self.inner_dirichlet)
    }

    fn speed(&self, v: &[f64], out: &mut [f64]) {
        let m = self.r.len();
        out[0] = 0.0;
        out[m - 1] = 0.0;
        if self.origin {
            out[0] = 2.0 * self.n * (v[1] - v[0]) / (self.r[1] * self.r[1]);
            if self.drift {
                out[0] -= 0.5 * v[0];
            }
        }
        for i in 1..m - 1 {
            let (d1, d2) = self.jet(v, i);
            out[i] = d2 / (1.0 + d1 * d1) + (self.n - 1.0) * d1 / self.r[i];
            if self.drift {
                out[i] -= 0.5 * (v[i] - self.r[i] * d1);
            }
        }
    }

    fn solve_newton(&self, v: &[f64], c: f64, rhs: &mut [f64]) -> Result<()> {
        let m = self.r.len();
        let mut sub = vec![0.0; m];
        let mut diag = vec![1.0; m];
        let mut sup = vec![0.0; m];
        if self.origin {
            let q = 2.0 * self.n / (self.r[1] * self.r[1]);
            let drift0 = if self.drift { -0.5 } else { 0.0 };
            diag[0] = 1.0 - c * (-q + drift0);
            sup[0] = -c * q;
        }
        for i in 1..m - 1 {
            let w = &self.weights[i];
            let (d1, d2) = self.jet(v, i);
            let a = 1.0 / (1.0 + d1 * d1);
            let da = -2.0 * d1 * a * a;
            let first = d2 * da + (self.n - 1.0) / self.r[i] + if self.drift { 0.5 * self.r[i] } else { 0.0 };
            let mut col = [0.0; 3];
            for k in 0..3 {
                col[k] = a * w.d2[k] + first * w.d1[k];
            }
            if self.drift {
                col[1] -= 0.5;
            }
            sub[i] = -c * col[0];
            diag[i] = 1.0 - c * col[1];
            sup[i] = -c * col[2];
        }
        solve_tridiagonal(&sub, &diag, &sup, rhs)
    }
}
