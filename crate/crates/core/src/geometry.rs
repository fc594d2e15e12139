//! Differential geometry of graphs sampled on radial or polar grids.
//!
//! Sign convention: the unit normal `ν = (Du, −1)/√(1+|Du|²)` points downward and
//! the second fundamental form is `h_ij = −⟨∂ᵢ∂ⱼX, ν⟩`, so the graph of a cone
//! `u = β|x|` with `β > 0` has positive mean curvature
//! `H = (n−1)β / (r√(1+β²))`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec};
use crate::stencil::{radial_derivatives, radial_stencil, Weights3};

/// Mean curvature samples plus the nodes whose estimate used one-sided stencils.
#[derive(Debug, Clone)]
pub struct CurvatureField {
    pub values: GridFunction,
    pub reduced_accuracy: Vec<bool>,
}

/// Radial-mode mean curvature from first and second derivatives.
#[inline]
pub fn radial_mean_curvature(n: usize, r: f64, ur: f64, urr: f64) -> f64 {
    let w2 = 1.0 + ur * ur;
    let w = w2.sqrt();
    if r == 0.0 {
        n as f64 * urr
    } else {
        urr / (w2 * w) + (n as f64 - 1.0) * ur / (r * w)
    }
}

/// `√(1+u_r²)·H` for a radial graph, i.e. the speed `u_t` under the flow.
#[inline]
pub fn radial_speed(n: usize, r: f64, ur: f64, urr: f64) -> f64 {
    if r == 0.0 {
        n as f64 * urr
    } else {
        urr / (1.0 + ur * ur) + (n as f64 - 1.0) * ur / r
    }
}

/// Partial derivatives of a polar graph at one node.
#[derive(Debug, Clone, Copy, Default)]
pub struct PolarJet {
    pub r: f64,
    pub ur: f64,
    pub urr: f64,
    pub ut: f64,
    pub utt: f64,
    pub urt: f64,
}

impl PolarJet {
    /// `√(1+|Du|²)·H = Δu − D²u(Du,Du)/(1+|Du|²)` in an orthonormal polar frame.
    pub fn speed(&self) -> f64 {
        let r = self.r;
        let p = self.ur;
        let q = self.ut / r;
        let hrr = self.urr;
        let hrt = self.urt / r - self.ut / (r * r);
        let htt = self.utt / (r * r) + self.ur / r;
        let w2 = 1.0 + p * p + q * q;
        hrr + htt - (p * p * hrr + 2.0 * p * q * hrt + q * q * htt) / w2
    }

    pub fn gradient_sq(&self) -> f64 {
        self.ur * self.ur + (self.ut / self.r).powi(2)
    }

    pub fn mean_curvature(&self) -> f64 {
        self.speed() / (1.0 + self.gradient_sq()).sqrt()
    }
}

/// Neighbouring ring indices and positions for the polar stencil at ring `i`.
/// Ring 0 reaches across the origin: its inner neighbour is ring 0 itself,
/// rotated by π, at the mirrored position `−r₀`.
pub(crate) struct PolarRing {
    pub rings: [usize; 3],
    pub mirrored: [bool; 3],
    pub weights: Weights3,
    pub reduced: bool,
}

pub(crate) fn polar_ring(r: &[f64], i: usize) -> PolarRing {
    if i == 0 {
        PolarRing {
            rings: [0, 0, 1],
            mirrored: [true, false, false],
            weights: Weights3::at(r[0], [-r[0], r[0], r[1]]),
            reduced: false,
        }
    } else {
        let s = radial_stencil(r, i);
        PolarRing {
            rings: s.nodes,
            mirrored: [false; 3],
            weights: s.weights,
            reduced: s.reduced,
        }
    }
}

/// Derivative jets at every node of a polar grid function.
pub(crate) fn polar_jets(u: &GridFunction) -> (Vec<PolarJet>, Vec<bool>) {
    let spec = u.spec();
    let nt = spec.n_theta();
    let dt = spec.d_theta();
    let r = spec.radial_nodes();
    let v = u.values();
    let at = |ring: usize, mirrored: bool, j: isize| -> f64 {
        let shift = if mirrored { nt as isize / 2 } else { 0 };
        let jj = (j + shift).rem_euclid(nt as isize) as usize;
        v[ring * nt + jj]
    };
    let mut jets = Vec::with_capacity(spec.len());
    let mut reduced = Vec::with_capacity(spec.len());
    for i in 0..r.len() {
        let ring = polar_ring(r, i);
        for j in 0..nt as isize {
            let mut center = [0.0; 3];
            let mut dtheta = [0.0; 3];
            for k in 0..3 {
                center[k] = at(ring.rings[k], ring.mirrored[k], j);
                dtheta[k] = (at(ring.rings[k], ring.mirrored[k], j + 1)
                    - at(ring.rings[k], ring.mirrored[k], j - 1))
                    / (2.0 * dt);
            }
            let u0 = at(i, false, j);
            let utt = (at(i, false, j + 1) - 2.0 * u0 + at(i, false, j - 1)) / (dt * dt);
            jets.push(PolarJet {
                r: r[i],
                ur: ring.weights.apply_d1(center),
                urr: ring.weights.apply_d2(center),
                ut: dtheta[1],
                utt,
                urt: ring.weights.apply_d1(dtheta),
            });
            reduced.push(ring.reduced);
        }
    }
    (jets, reduced)
}

/// Mean curvature `H[u] = div(Du/√(1+|Du|²))` at every node.
///
/// Radial mode evaluates the reduced form `u_rr/W³ + (n−1)u_r/(rW)` with
/// three-point non-uniform derivatives (the same derivatives as
/// [`geometric_state`]); a node at the origin uses `n·u_rr(0)`.
pub fn mean_curvature(u: &GridFunction) -> Result<CurvatureField> {
    let spec = u.spec().clone();
    if spec.is_polar() {
        let (jets, reduced) = polar_jets(u);
        let values = jets.iter().map(PolarJet::mean_curvature).collect();
        return Ok(CurvatureField {
            values: GridFunction::new(spec, values)?,
            reduced_accuracy: reduced,
        });
    }
    let r = spec.radial_nodes();
    let (d1, d2, reduced) = radial_derivatives(r, u.values());
    let values: Vec<f64> = (0..r.len())
        .map(|i| radial_mean_curvature(spec.n(), r[i], d1[i], d2[i]))
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidGrid("non-finite derivative".into()));
    }
    Ok(CurvatureField {
        values: GridFunction::new(spec, values)?,
        reduced_accuracy: reduced,
    })
}

/// Slope at the origin from the one-sided three-point formula; zero for data
/// that is smooth across the origin (exactly so for even quadratics).
pub fn origin_slope(spec: &GridSpec, u: &[f64]) -> Option<f64> {
    if !spec.has_origin() {
        return None;
    }
    let r = spec.radial_nodes();
    let w = Weights3::at(0.0, [r[0], r[1], r[2]]);
    Some(w.apply_d1([u[0], u[1], u[2]]))
}

/// `u̇ = √(1+|Du|²)·H[u]` for radial data, in the reduced form
/// `u_rr/(1+u_r²) + (n−1)u_r/r` (and `n·u_rr(0)` at the origin).
///
/// Data with a kink at the origin (e.g. a cone sampled on a grid that contains
/// r = 0) is rejected: such data is only evaluated away from the origin.
pub fn radial_rhs(u: &GridFunction) -> Result<GridFunction> {
    let spec = u.spec().clone();
    if spec.is_polar() {
        return Err(Error::InvalidInput("radial_rhs needs a radial grid".into()));
    }
    let v = u.values();
    if let Some(s) = origin_slope(&spec, v) {
        let r = spec.radial_nodes();
        let scale = v.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
        let next_slope = ((v[2] - v[1]) / (r[2] - r[1])).abs();
        if s.abs() > 1e-9 * (1.0 + scale) + 0.75 * next_slope {
            return Err(Error::Precondition(format!(
                "slope {s:.3e} at the origin: data is not smooth across r = 0"
            )));
        }
    }
    Ok(radial_rhs_unchecked(u))
}

pub(crate) fn radial_rhs_unchecked(u: &GridFunction) -> GridFunction {
    let spec = u.spec().clone();
    let r = spec.radial_nodes();
    let (d1, d2, _) = radial_derivatives(r, u.values());
    let values = (0..r.len())
        .map(|i| radial_speed(spec.n(), r[i], d1[i], d2[i]))
        .collect();
    GridFunction::new(spec, values).expect("finite speeds")
}

/// `√(1+|Du|²)·div(Du/√(1+|Du|²))` discretised in conservation form:
/// fluxes `r^{n−1} u_r/W` at cell midpoints, differenced across each node.
/// Boundary nodes fall back to the reduced formula.
pub fn divergence_form_rhs(u: &GridFunction) -> Result<GridFunction> {
    let spec = u.spec().clone();
    if spec.is_polar() {
        return Err(Error::InvalidInput("divergence form needs a radial grid".into()));
    }
    let n = spec.n() as i32;
    let r = spec.radial_nodes();
    let v = u.values();
    let m = r.len();
    let (d1, d2, _) = radial_derivatives(r, v);
    let flux = |k: usize| -> (f64, f64) {
        let rm = 0.5 * (r[k] + r[k + 1]);
        let s = (v[k + 1] - v[k]) / (r[k + 1] - r[k]);
        (rm, rm.powi(n - 1) * s / (1.0 + s * s).sqrt())
    };
    let mut out = vec![0.0; m];
    for i in 0..m {
        let w = (1.0 + d1[i] * d1[i]).sqrt();
        out[i] = if i == 0 && r[0] == 0.0 {
            let (rm, f) = flux(0);
            w * n as f64 * f / rm.powi(n)
        } else if i == 0 || i == m - 1 {
            radial_speed(spec.n(), r[i], d1[i], d2[i])
        } else {
            let (rp, fp) = flux(i);
            let (rm, fm) = flux(i - 1);
            // cell volume (r₊ⁿ − r₋ⁿ)/n keeps the first ring consistent
            w * n as f64 * (fp - fm) / (rp.powi(n) - rm.powi(n))
        };
    }
    GridFunction::new(spec, out)
}

/// Geometry of one sampled point of the hypersurface.
///
/// Radial mode works in the meridian through `e₁`: the point is
/// `X = (r, 0, …, 0, u)` and the coordinates are `r` followed by `n−1`
/// angular directions normalised so that `g = diag(1+u_r², r², …, r²)`.
/// Polar mode uses the coordinates `(r, θ)`.
#[derive(Debug, Clone)]
pub struct NodeGeometry {
    pub position: Vec<f64>,
    pub normal: Vec<f64>,
    /// Row-major `n × n` induced metric.
    pub metric: Vec<f64>,
    /// Row-major `n × n` second fundamental form.
    pub second_form: Vec<f64>,
    pub mean_curvature: f64,
    pub norm_a2: f64,
}

#[derive(Debug, Clone)]
pub struct GeometricState {
    pub n: usize,
    pub spec: Arc<GridSpec>,
    pub nodes: Vec<NodeGeometry>,
    pub reduced_accuracy: Vec<bool>,
}

impl GeometricState {
    /// Largest violation of the pointwise self-consistency relations
    /// (`|ν| = 1`, `H = tr(g⁻¹h)`, `|A|² ≥ H²/n`, `|A|² ≥ 0`), each as a
    /// separate entry so tests can apply the right tolerance.
    pub fn invariant_defects(&self) -> InvariantDefects {
        let mut d = InvariantDefects::default();
        for node in &self.nodes {
            let nn: f64 = node.normal.iter().map(|x| x * x).sum::<f64>().sqrt();
            d.normal = d.normal.max((nn - 1.0).abs());
            let w = weingarten(self.n, &node.metric, &node.second_form);
            let tr: f64 = (0..self.n).map(|i| w[i * self.n + i]).sum();
            let rel = (tr - node.mean_curvature).abs() / (1.0 + node.mean_curvature.abs());
            d.trace = d.trace.max(rel);
            d.cauchy_schwarz = d
                .cauchy_schwarz
                .max(node.mean_curvature.powi(2) / self.n as f64 - node.norm_a2);
            d.negative_a2 = d.negative_a2.max(-node.norm_a2);
        }
        d
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct InvariantDefects {
    pub normal: f64,
    pub trace: f64,
    pub cauchy_schwarz: f64,
    pub negative_a2: f64,
}

/// Shape operator `g⁻¹h` (row-major) for `n ≤ 3`, by cofactors.
pub(crate) fn weingarten(n: usize, g: &[f64], h: &[f64]) -> Vec<f64> {
    let gi = invert_small(n, g);
    let mut w = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            w[i * n + j] = (0..n).map(|k| gi[i * n + k] * h[k * n + j]).sum();
        }
    }
    w
}

pub(crate) fn invert_small(n: usize, a: &[f64]) -> Vec<f64> {
    // Gauss-Jordan; the metrics here are symmetric positive definite.
    let mut m = a.to_vec();
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    for c in 0..n {
        let p = (c..n)
            .max_by(|&x, &y| m[x * n + c].abs().partial_cmp(&m[y * n + c].abs()).unwrap())
            .unwrap();
        if p != c {
            for k in 0..n {
                m.swap(p * n + k, c * n + k);
                inv.swap(p * n + k, c * n + k);
            }
        }
        let d = m[c * n + c];
        for k in 0..n {
            m[c * n + k] /= d;
            inv[c * n + k] /= d;
        }
        for rrow in 0..n {
            if rrow != c {
                let f = m[rrow * n + c];
                for k in 0..n {
                    m[rrow * n + k] -= f * m[c * n + k];
                    inv[rrow * n + k] -= f * inv[c * n + k];
                }
            }
        }
    }
    inv
}

fn node_from_forms(n: usize, position: Vec<f64>, normal: Vec<f64>, g: Vec<f64>, h: Vec<f64>) -> NodeGeometry {
    let w = weingarten(n, &g, &h);
    let mean_curvature = (0..n).map(|i| w[i * n + i]).sum();
    let mut a2 = 0.0;
    for i in 0..n {
        for j in 0..n {
            a2 += w[i * n + j] * w[j * n + i];
        }
    }
    NodeGeometry {
        position,
        normal,
        metric: g,
        second_form: h,
        mean_curvature,
        norm_a2: a2,
    }
}

pub(crate) fn radial_node(n: usize, r: f64, u: f64, ur: f64, urr: f64) -> NodeGeometry {
    let w = (1.0 + ur * ur).sqrt();
    let mut position = vec![0.0; n + 1];
    position[0] = r;
    position[n] = u;
    let mut normal = vec![0.0; n + 1];
    normal[0] = ur / w;
    normal[n] = -1.0 / w;
    let mut g = vec![0.0; n * n];
    let mut h = vec![0.0; n * n];
    if r == 0.0 {
        for i in 0..n {
            g[i * n + i] = 1.0;
            h[i * n + i] = urr;
        }
    } else {
        g[0] = w * w;
        h[0] = urr / w;
        for i in 1..n {
            g[i * n + i] = r * r;
            h[i * n + i] = r * ur / w;
        }
    }
    node_from_forms(n, position, normal, g, h)
}

pub(crate) fn polar_node(jet: &PolarJet, theta: f64, u: f64) -> NodeGeometry {
    let (s, c) = theta.sin_cos();
    let r = jet.r;
    let p = jet.ur;
    let q = jet.ut / r;
    let w = (1.0 + p * p + q * q).sqrt();
    let position = vec![r * c, r * s, u];
    let normal = vec![(p * c - q * s) / w, (p * s + q * c) / w, -1.0 / w];
    let g = vec![
        1.0 + jet.ur * jet.ur,
        jet.ur * jet.ut,
        jet.ur * jet.ut,
        r * r + jet.ut * jet.ut,
    ];
    let hrt = (jet.urt - q) / w;
    let h = vec![jet.urr / w, hrt, hrt, (r * p + jet.utt) / w];
    node_from_forms(2, position, normal, g, h)
}

/// Full per-node geometry: position, downward normal, metric, second
/// fundamental form, mean curvature and `|A|²`.
pub fn geometric_state(u: &GridFunction) -> Result<GeometricState> {
    let spec = u.spec().clone();
    let n = spec.n();
    if spec.is_polar() {
        let (jets, reduced) = polar_jets(u);
        let nt = spec.n_theta();
        let nodes = jets
            .iter()
            .enumerate()
            .map(|(k, jet)| polar_node(jet, spec.theta(k % nt), u.values()[k]))
            .collect();
        return Ok(GeometricState {
            n,
            spec,
            nodes,
            reduced_accuracy: reduced,
        });
    }
    let r = spec.radial_nodes();
    let (d1, d2, reduced) = radial_derivatives(r, u.values());
    if d1.iter().chain(&d2).any(|v| !v.is_finite()) {
        return Err(Error::InvalidGrid("non-finite derivative".into()));
    }
    let nodes = (0..r.len())
        .map(|i| radial_node(n, r[i], u.values()[i], d1[i], d2[i]))
        .collect();
    Ok(GeometricState {
        n,
        spec,
        nodes,
        reduced_accuracy: reduced,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn radial(n: usize, r0: f64, r1: f64, m: usize, f: impl Fn(f64) -> f64) -> GridFunction {
        let g = Arc::new(GridSpec::uniform(n, r0, r1, m).unwrap());
        GridFunction::from_radial_fn(g, f).unwrap()
    }

    #[test]
    fn plane_is_flat() {
        for n in 1..4 {
            let u = radial(n, 0.0, 3.0, 31, |_| 0.0);
            let h = mean_curvature(&u).unwrap();
            assert!(h.values.values().iter().all(|&x| x == 0.0));
            let st = geometric_state(&radial(n, 0.0, 3.0, 31, |_| 2.5)).unwrap();
            for node in &st.nodes {
                // Constant data only picks up round-off from the stencil weights.
                assert!(node.norm_a2 < 1e-20);
                assert!((node.normal[n] + 1.0).abs() < 1e-15);
                assert!(node.second_form.iter().all(|&x| x.abs() < 1e-12));
            }
        }
    }

    #[test]
    fn cone_mean_curvature_closed_form() {
        // n = 2, β = 1, r = 1: H = (n−1)β/(r√(1+β²)) = 1/√2. Linear data is
        // differentiated exactly by the three-point stencil.
        let u = radial(2, 0.5, 1.5, 11, |r| r);
        let h = mean_curvature(&u).unwrap();
        let i = u.spec().nearest(1.0);
        assert_relative_eq!(h.values.values()[i], std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);
    }

    #[test]
    fn cone_a2_for_n3() {
        // Principal curvatures of a rotational cone: 0 along the profile and
        // β/(r√(1+β²)) in the n−1 rotational directions.
        let beta = 1.0;
        let u = radial(3, 0.5, 1.5, 11, |r| beta * r);
        let st = geometric_state(&u).unwrap();
        let i = u.spec().nearest(1.0);
        let expected = 2.0 * beta * beta / (1.0 + beta * beta);
        assert_relative_eq!(st.nodes[i].norm_a2, expected, epsilon = 1e-12);
        assert_relative_eq!(expected, 1.0);
    }

    #[test]
    fn lower_hemisphere_is_umbilic() {
        let big_r: f64 = 2.0;
        for &(m, tol) in &[(401usize, 1e-4), (1601, 1e-5)] {
            let u = radial(2, 0.0, 1.5, m, |r| -(big_r * big_r - r * r).sqrt());
            let h = mean_curvature(&u).unwrap();
            let st = geometric_state(&u).unwrap();
            let i = u.spec().nearest(1.0);
            assert!((h.values.values()[i] - 2.0 / big_r).abs() < tol);
            assert!((st.nodes[i].norm_a2 - 2.0 / (big_r * big_r)).abs() < tol);
        }
    }

    #[test]
    fn speed_of_paraboloid() {
        // u = r²/2, n = 2, r = 1: 1/(1+1) + 1·1/1 = 1.5
        let u = radial(2, 0.0, 2.0, 21, |r| 0.5 * r * r);
        let rhs = radial_rhs(&u).unwrap();
        let i = u.spec().nearest(1.0);
        assert_relative_eq!(rhs.values()[i], 1.5, epsilon = 1e-12);
        assert_relative_eq!(rhs.values()[0], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn speed_of_cone_away_from_origin() {
        let u = radial(3, 1.0, 4.0, 31, |r| 0.7 * r);
        let rhs = radial_rhs(&u).unwrap();
        for (k, &r) in u.spec().radial_nodes().iter().enumerate() {
            assert_relative_eq!(rhs.values()[k], 2.0 * 0.7 / r, epsilon = 1e-12);
        }
    }

    #[test]
    fn kink_at_origin_rejected() {
        let u = radial(2, 0.0, 2.0, 21, |r| r);
        assert!(matches!(radial_rhs(&u), Err(Error::Precondition(_))));
        let smooth = radial(2, 0.0, 2.0, 21, |r| (r * r).cos());
        assert!(radial_rhs(&smooth).is_ok());
    }

    #[test]
    fn geometric_state_matches_mean_curvature() {
        let u = radial(3, 0.0, 3.0, 61, |r| (1.0 + r * r).sqrt() + 0.2 * (r).sin().powi(2));
        let h = mean_curvature(&u).unwrap();
        let st = geometric_state(&u).unwrap();
        for (k, node) in st.nodes.iter().enumerate() {
            let a = h.values.values()[k];
            assert!((node.mean_curvature - a).abs() <= 1e-8 * (1.0 + a.abs()));
        }
        let d = st.invariant_defects();
        assert!(d.normal < 1e-12 && d.trace < 1e-10);
        assert!(d.cauchy_schwarz < 1e-10 && d.negative_a2 <= 0.0);
    }

    fn polar_grid(m: usize, nt: usize, r_max: f64) -> Arc<GridSpec> {
        let h = r_max / (m as f64 - 0.5);
        let nodes = (0..m).map(|i| (i as f64 + 0.5) * h).collect();
        Arc::new(GridSpec::polar(nodes, nt).unwrap())
    }

    #[test]
    fn polar_radial_data_matches_radial_mode() {
        let f = |r: f64| 0.3 * (1.0 + r * r).sqrt();
        let pg = polar_grid(40, 16, 4.0);
        let up = GridFunction::from_radial_fn(pg.clone(), f).unwrap();
        let hp = mean_curvature(&up).unwrap();
        let rg = Arc::new(GridSpec::from_nodes(2, pg.radial_nodes().to_vec()).unwrap());
        let ur = GridFunction::from_radial_fn(rg, f).unwrap();
        let hr = mean_curvature(&ur).unwrap();
        for i in 1..39 {
            for j in 0..16 {
                let a = hp.values.values()[i * 16 + j];
                assert!((a - hr.values.values()[i]).abs() < 1e-10, "{i} {j}");
            }
        }
    }

    #[test]
    fn polar_geometry_consistent_for_anisotropic_data() {
        let pg = polar_grid(30, 32, 3.0);
        let u = GridFunction::from_polar_fn(pg, |r, t| {
            let x = r * t.cos();
            let y = r * t.sin();
            0.3 * x * x + 0.1 * x * y + 0.05 * y * y * y
        })
        .unwrap();
        let h = mean_curvature(&u).unwrap();
        let st = geometric_state(&u).unwrap();
        for (k, node) in st.nodes.iter().enumerate() {
            let a = h.values.values()[k];
            assert!((node.mean_curvature - a).abs() <= 1e-8 * (1.0 + a.abs()));
        }
        let d = st.invariant_defects();
        assert!(d.normal < 1e-12 && d.trace < 1e-10 && d.cauchy_schwarz < 1e-10);
    }

    #[test]
    fn polar_speed_against_cartesian_formula() {
        // u(x, y) = x² + xy: Du = (2x + y, x), D²u = [[2, 1], [1, 0]].
        let pg = polar_grid(200, 256, 2.0);
        let u = GridFunction::from_polar_fn(pg.clone(), |r, t| {
            let (x, y) = (r * t.cos(), r * t.sin());
            x * x + x * y
        })
        .unwrap();
        let (jets, _) = polar_jets(&u);
        let nt = pg.n_theta();
        for &(i, j) in &[(50usize, 3usize), (120, 77), (10, 200)] {
            let (r, t) = (pg.radial_nodes()[i], pg.theta(j));
            let (x, y) = (r * t.cos(), r * t.sin());
            let (p, q) = (2.0 * x + y, x);
            let exact = 2.0 - (p * p * 2.0 + 2.0 * p * q) / (1.0 + p * p + q * q);
            assert!((jets[i * nt + j].speed() - exact).abs() < 2e-3, "{i} {j}");
        }
    }
}
