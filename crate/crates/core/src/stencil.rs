//! Three-point finite-difference weights on non-uniform nodes.

/// Weights of the quadratic through `(x0, x1, x2)`, differentiated at `x`.
#[derive(Debug, Clone, Copy)]
pub struct Weights3 {
    pub d1: [f64; 3],
    pub d2: [f64; 3],
}

impl Weights3 {
    pub fn at(x: f64, xs: [f64; 3]) -> Self {
        let [x0, x1, x2] = xs;
        let q0 = (x0 - x1) * (x0 - x2);
        let q1 = (x1 - x0) * (x1 - x2);
        let q2 = (x2 - x0) * (x2 - x1);
        Weights3 {
            d1: [
                (2.0 * x - x1 - x2) / q0,
                (2.0 * x - x0 - x2) / q1,
                (2.0 * x - x0 - x1) / q2,
            ],
            d2: [2.0 / q0, 2.0 / q1, 2.0 / q2],
        }
    }

    pub fn apply_d1(&self, u: [f64; 3]) -> f64 {
        self.d1[0] * u[0] + self.d1[1] * u[1] + self.d1[2] * u[2]
    }

    pub fn apply_d2(&self, u: [f64; 3]) -> f64 {
        self.d2[0] * u[0] + self.d2[1] * u[1] + self.d2[2] * u[2]
    }
}

/// Where a radial derivative estimate at node `i` draws its samples from.
#[derive(Debug, Clone, Copy)]
pub struct RadialStencil {
    pub nodes: [usize; 3],
    pub weights: Weights3,
    /// One-sided boundary estimate (second derivative is only first order).
    pub reduced: bool,
}

/// Stencil for radial node `i` of increasing `r`. At a node on the origin the
/// caller must use the even extension instead; this function treats it as an
/// ordinary boundary node.
pub fn radial_stencil(r: &[f64], i: usize) -> RadialStencil {
    let m = r.len();
    let (nodes, reduced) = if i == 0 {
        ([0, 1, 2], true)
    } else if i == m - 1 {
        ([m - 3, m - 2, m - 1], true)
    } else {
        ([i - 1, i, i + 1], false)
    };
    RadialStencil {
        nodes,
        weights: Weights3::at(r[i], [r[nodes[0]], r[nodes[1]], r[nodes[2]]]),
        reduced,
    }
}

/// First and second radial derivatives of `u` at every node. A node at r = 0
/// uses the even extension `u(−r) = u(r)`: `u_r = 0`, `u_rr = 2(u₁ − u₀)/r₁²`.
pub fn radial_derivatives(r: &[f64], u: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<bool>) {
    let m = r.len();
    let mut d1 = vec![0.0; m];
    let mut d2 = vec![0.0; m];
    let mut reduced = vec![false; m];
    for i in 0..m {
        if i == 0 && r[0] == 0.0 {
            d2[0] = 2.0 * (u[1] - u[0]) / (r[1] * r[1]);
            continue;
        }
        let s = radial_stencil(r, i);
        let v = [u[s.nodes[0]], u[s.nodes[1]], u[s.nodes[2]]];
        d1[i] = s.weights.apply_d1(v);
        d2[i] = s.weights.apply_d2(v);
        reduced[i] = s.reduced;
    }
    (d1, d2, reduced)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_on_quadratics_for_nonuniform_nodes() {
        let xs = [0.3, 0.7, 1.6];
        let f = |x: f64| 2.0 * x * x - 3.0 * x + 0.5;
        let v = [f(xs[0]), f(xs[1]), f(xs[2])];
        for &x in &[0.3, 0.7, 1.6, 1.0] {
            let w = Weights3::at(x, xs);
            assert!((w.apply_d1(v) - (4.0 * x - 3.0)).abs() < 1e-12);
            assert!((w.apply_d2(v) - 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn even_extension_at_origin() {
        let r: Vec<f64> = (0..10).map(|i| 0.1 * i as f64).collect();
        let u: Vec<f64> = r.iter().map(|x| 1.0 + 3.0 * x * x).collect();
        let (d1, d2, red) = radial_derivatives(&r, &u);
        assert_eq!(d1[0], 0.0);
        assert!((d2[0] - 6.0).abs() < 1e-12);
        assert!(!red[0] && red[9]);
    }
}
