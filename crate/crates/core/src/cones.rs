//! Positively 1-homogeneous cones `k(x) = |x|·γ(x/|x|)` and the class-𝒦 checks.
//!
//! Radial cones `k = β|x|` work in any dimension. Angular cones live in the
//! plane; their profile `γ` is given by equally spaced samples on the circle
//! and evaluated through its trigonometric interpolant, so `γ'` and `γ''`
//! are exact for the interpolant.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{polar_node, radial_node, PolarJet};
use crate::grid::{GridFunction, GridSpec};

pub const MIN_ANGULAR_SAMPLES: usize = 16;

/// On-disk description of a cone.
///
/// ```toml
/// n = 2
/// kind = "radial"
/// beta = 1.0
/// ```
/// or `kind = "angular"` with `angular_samples = [γ(0), γ(2π/N), …]` (n = 2).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ConeSpec {
    Radial { n: usize, beta: f64 },
    Angular { n: usize, angular_samples: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Radial { beta: f64 },
    Angular { samples: Vec<f64>, cos: Vec<f64>, sin: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConeSpec", into = "ConeSpec")]
pub struct ConeProfile {
    n: usize,
    kind: Kind,
}

impl TryFrom<ConeSpec> for ConeProfile {
    type Error = Error;
    fn try_from(spec: ConeSpec) -> Result<Self> {
        match spec {
            ConeSpec::Radial { n, beta } => ConeProfile::radial(n, beta),
            ConeSpec::Angular { n, angular_samples } => {
                if n != 2 {
                    return Err(Error::InvalidInput("angular cones need n = 2".into()));
                }
                ConeProfile::angular(angular_samples)
            }
        }
    }
}

impl From<ConeProfile> for ConeSpec {
    fn from(k: ConeProfile) -> Self {
        match k.kind {
            Kind::Radial { beta } => ConeSpec::Radial { n: k.n, beta },
            Kind::Angular { samples, .. } => ConeSpec::Angular {
                n: k.n,
                angular_samples: samples,
            },
        }
    }
}

impl ConeProfile {
    pub fn radial(n: usize, beta: f64) -> Result<Self> {
        if n == 0 || !beta.is_finite() {
            return Err(Error::InvalidInput(format!("radial cone n = {n}, beta = {beta}")));
        }
        Ok(ConeProfile {
            n,
            kind: Kind::Radial { beta },
        })
    }

    /// Planar cone from samples `γ(2πj/N)`, `j = 0..N`.
    pub fn angular(samples: Vec<f64>) -> Result<Self> {
        let m = samples.len();
        if m < MIN_ANGULAR_SAMPLES {
            return Err(Error::Resolution(format!(
                "{m} angular samples, need at least {MIN_ANGULAR_SAMPLES}"
            )));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite angular sample".into()));
        }
        let half = m / 2;
        let mut cos = vec![0.0; half + 1];
        let mut sin = vec![0.0; half + 1];
        for k in 0..=half {
            let (mut a, mut b) = (0.0, 0.0);
            for (j, g) in samples.iter().enumerate() {
                let th = 2.0 * PI * ((k * j) % m) as f64 / m as f64;
                a += g * th.cos();
                b += g * th.sin();
            }
            let scale = if k == 0 || (m % 2 == 0 && k == half) { 1.0 } else { 2.0 };
            cos[k] = scale * a / m as f64;
            sin[k] = if m % 2 == 0 && k == half { 0.0 } else { scale * b / m as f64 };
        }
        Ok(ConeProfile {
            n: 2,
            kind: Kind::Angular { samples, cos, sin },
        })
    }

    /// Angular cone sampled from a closure on `count` equally spaced angles.
    pub fn angular_from_fn(count: usize, gamma: impl Fn(f64) -> f64) -> Result<Self> {
        Self::angular((0..count).map(|j| gamma(2.0 * PI * j as f64 / count as f64)).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Slope of a radial cone.
    pub fn beta(&self) -> Option<f64> {
        match self.kind {
            Kind::Radial { beta } => Some(beta),
            Kind::Angular { .. } => None,
        }
    }

    pub fn is_radial(&self) -> bool {
        matches!(self.kind, Kind::Radial { .. })
    }

    pub fn angular_samples(&self) -> Option<&[f64]> {
        match &self.kind {
            Kind::Angular { samples, .. } => Some(samples),
            Kind::Radial { .. } => None,
        }
    }

    /// `(γ, γ', γ'')` at angle `theta`.
    pub fn gamma_jet(&self, theta: f64) -> (f64, f64, f64) {
        match &self.kind {
            Kind::Radial { beta } => (*beta, 0.0, 0.0),
            Kind::Angular { cos, sin, .. } => {
                let (mut g, mut g1, mut g2) = (0.0, 0.0, 0.0);
                for k in 0..cos.len() {
                    let kf = k as f64;
                    let (s, c) = (kf * theta).sin_cos();
                    g += cos[k] * c + sin[k] * s;
                    g1 += kf * (sin[k] * c - cos[k] * s);
                    g2 -= kf * kf * (cos[k] * c + sin[k] * s);
                }
                (g, g1, g2)
            }
        }
    }

    pub fn gamma(&self, theta: f64) -> f64 {
        self.gamma_jet(theta).0
    }

    /// `k(r, θ)` for n = 2, or `k(r)` for radial cones (θ ignored).
    pub fn eval_polar(&self, r: f64, theta: f64) -> f64 {
        if r == 0.0 {
            return 0.0;
        }
        r * self.gamma(theta)
    }

    /// Radial cones only: `β r`.
    pub fn eval_radial(&self, r: f64) -> f64 {
        match self.kind {
            Kind::Radial { beta } => beta * r,
            Kind::Angular { .. } => panic!("eval_radial on an angular cone"),
        }
    }

    /// Samples the cone on a grid (radial or polar).
    pub fn sample(&self, spec: Arc<GridSpec>) -> Result<GridFunction> {
        if spec.is_polar() {
            GridFunction::from_polar_fn(spec, |r, t| self.eval_polar(r, t))
        } else {
            let beta = self.beta().ok_or_else(|| {
                Error::InvalidInput("angular cone on a radial grid".into())
            })?;
            GridFunction::from_radial_fn(spec, |r| beta * r)
        }
    }

    /// `|x|·H[k](x)` along the ray through angle `theta` (1-homogeneity makes
    /// it independent of `|x|`), together with `|A|²|x|²`.
    pub fn scaled_curvatures(&self, theta: f64) -> (f64, f64) {
        match self.kind {
            Kind::Radial { beta } => {
                let node = radial_node(self.n, 1.0, beta, beta, 0.0);
                (node.mean_curvature, node.norm_a2)
            }
            Kind::Angular { .. } => {
                let (g, g1, g2) = self.gamma_jet(theta);
                let jet = PolarJet {
                    r: 1.0,
                    ur: g,
                    urr: 0.0,
                    ut: g1,
                    utt: g2,
                    urt: g1,
                };
                let node = polar_node(&jet, theta, g);
                (node.mean_curvature, node.norm_a2)
            }
        }
    }
}

/// `k(x)` for a point of ℝⁿ. `k(0) = 0`.
pub fn eval_cone(k: &ConeProfile, x: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), k.n);
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if r == 0.0 {
        return 0.0;
    }
    match &k.kind {
        Kind::Radial { beta } => beta * r,
        Kind::Angular { .. } => r * k.gamma(x[1].atan2(x[0])),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

impl Verdict {
    pub fn ok(self) -> bool {
        self != Verdict::Fail
    }
}

/// A linear function `l(x) = ⟨c, x⟩` with its sampled certificate
/// `min_{|ω|=1} (k − l)(ω)` and the direction where the minimum occurs.
#[derive(Debug, Clone, Serialize)]
pub struct SupportingPlane {
    pub coefficients: Vec<f64>,
    pub margin: f64,
    pub worst_direction: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityVerdict {
    pub verdict: Verdict,
    /// `min (((n−2)/2)²/|p|² − |A|²)` over the near-minimal samples, if any.
    pub min_margin: Option<f64>,
    pub checked: usize,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct StabilitySample {
    pub p_norm: f64,
    pub h: f64,
    pub a2: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ClassKTolerances {
    /// Samples with `|p|·|H| < h_tol` count as minimal points.
    pub h_tol: f64,
    /// Allowed negative slack in the mean convexity and supporting-plane checks.
    pub tol: f64,
    /// Rays sampled on the unit circle (or meridian).
    pub rays: usize,
}

impl Default for ClassKTolerances {
    fn default() -> Self {
        ClassKTolerances {
            h_tol: 1e-3,
            tol: 1e-10,
            rays: 720,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassKReport {
    pub homogeneous: Verdict,
    pub smooth: Verdict,
    pub mean_convex: Verdict,
    pub supporting_plane: Verdict,
    pub stability: Verdict,
    pub min_scaled_h: f64,
    pub plane: Option<SupportingPlane>,
    pub stability_margin: Option<f64>,
}

impl ClassKReport {
    pub fn all_pass(&self) -> bool {
        [
            self.homogeneous,
            self.smooth,
            self.mean_convex,
            self.supporting_plane,
            self.stability,
        ]
        .iter()
        .all(|v| v.ok())
    }
}

/// Checks `A2 < ((n−2)/2)²/|p|²` at every sample with `|p|·|H| < h_tol`.
pub fn check_stability_condition(samples: &[StabilitySample], n: usize, h_tol: f64) -> Result<StabilityVerdict> {
    if n < 3 {
        return Ok(StabilityVerdict {
            verdict: Verdict::NotApplicable,
            min_margin: None,
            checked: 0,
        });
    }
    let c = ((n as f64 - 2.0) / 2.0).powi(2);
    let mut min_margin: Option<f64> = None;
    let mut checked = 0;
    for s in samples {
        if !(s.p_norm > 0.0) {
            return Err(Error::InvalidInput("stability sample at the origin".into()));
        }
        if s.p_norm * s.h.abs() < h_tol {
            checked += 1;
            let m = c / (s.p_norm * s.p_norm) - s.a2;
            min_margin = Some(min_margin.map_or(m, |x: f64| x.min(m)));
        }
    }
    let verdict = match min_margin {
        Some(m) if m <= 0.0 => Verdict::Fail,
        _ => Verdict::Pass,
    };
    Ok(StabilityVerdict {
        verdict,
        min_margin,
        checked,
    })
}

fn unit(theta: f64) -> [f64; 2] {
    [theta.cos(), theta.sin()]
}

/// Minimum of `k − l` on the unit sphere, sampled at `count` points.
/// Radial cones are rotationally symmetric about the axis of `c`, so a
/// meridian through `c` suffices.
fn certify(k: &ConeProfile, c: &[f64], count: usize) -> (f64, Vec<f64>) {
    let mut best = (f64::INFINITY, vec![]);
    match k.kind {
        Kind::Radial { beta } => {
            let cn = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            for j in 0..=count {
                let a = PI * j as f64 / count as f64;
                let v = beta - cn * a.cos();
                if v < best.0 {
                    let mut dir = vec![0.0; k.n];
                    if cn > 0.0 {
                        for (d, ci) in dir.iter_mut().zip(c) {
                            *d = a.cos() * ci / cn;
                        }
                        if k.n > 1 {
                            // any unit vector orthogonal to c completes the meridian
                            let mut e = vec![0.0; k.n];
                            let idx = if (c[0] / cn).abs() < 0.9 { 0 } else { 1 };
                            e[idx] = 1.0;
                            let dot: f64 = e.iter().zip(c).map(|(x, y)| x * y).sum::<f64>() / cn;
                            for (ei, ci) in e.iter_mut().zip(c) {
                                *ei -= dot * ci / cn;
                            }
                            let en = e.iter().map(|x| x * x).sum::<f64>().sqrt();
                            for (d, ei) in dir.iter_mut().zip(&e) {
                                *d += a.sin() * ei / en;
                            }
                        }
                    } else {
                        dir[0] = 1.0;
                    }
                    best = (v, dir);
                }
            }
        }
        Kind::Angular { .. } => {
            for j in 0..count {
                let th = 2.0 * PI * j as f64 / count as f64;
                let [x, y] = unit(th);
                let v = k.gamma(th) - (c[0] * x + c[1] * y);
                if v < best.0 {
                    best = (v, vec![x, y]);
                }
            }
        }
    }
    best
}

fn certification_samples(k: &ConeProfile, tol: &ClassKTolerances) -> usize {
    let base = k.angular_samples().map_or(0, |s| s.len());
    (10 * base).max(tol.rays).max(64)
}

/// Tangent plane of `graph k` along the ray through `direction`, certified
/// by sampling `k − l` on the unit sphere.
pub fn supporting_hyperplane(k: &ConeProfile, direction: &[f64], tol: &ClassKTolerances) -> Result<SupportingPlane> {
    if direction.len() != k.n {
        return Err(Error::InvalidInput("direction has the wrong dimension".into()));
    }
    let dn = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(dn > 0.0) {
        return Err(Error::InvalidInput("zero direction".into()));
    }
    let e: Vec<f64> = direction.iter().map(|v| v / dn).collect();
    let coefficients = match k.kind {
        Kind::Radial { beta } => e.iter().map(|v| beta * v).collect::<Vec<_>>(),
        Kind::Angular { .. } => {
            if k.n != 2 {
                return Err(Error::InvalidInput("angular cones are planar".into()));
            }
            let th = e[1].atan2(e[0]);
            let (g, g1, _) = k.gamma_jet(th);
            let [c, s] = unit(th);
            vec![g * c - g1 * s, g * s + g1 * c]
        }
    };
    let (margin, worst_direction) = certify(k, &coefficients, certification_samples(k, tol));
    if margin < -tol.tol {
        return Err(Error::Certification {
            direction: worst_direction,
            margin,
        });
    }
    Ok(SupportingPlane {
        coefficients,
        margin,
        worst_direction,
    })
}

/// Checks conditions (i)–(v) of class 𝒦 by sampling rays.
pub fn validate_class_k(k: &ConeProfile, tol: &ClassKTolerances) -> Result<ClassKReport> {
    if let Some(s) = k.angular_samples() {
        if s.len() < MIN_ANGULAR_SAMPLES {
            return Err(Error::Resolution(format!("{} angular samples", s.len())));
        }
    }
    let rays = tol.rays.max(MIN_ANGULAR_SAMPLES);
    let thetas: Vec<f64> = (0..rays).map(|j| 2.0 * PI * j as f64 / rays as f64).collect();

    // (i): exact up to the rounding of |λx|
    let mut homogeneous = Verdict::Pass;
    for &th in thetas.iter().step_by((rays / 16).max(1)) {
        let mut x = vec![0.0; k.n];
        x[0] = th.cos();
        if k.n > 1 {
            x[1] = th.sin();
        }
        for &lambda in &[0.125, 3.0, 1024.0] {
            let lx: Vec<f64> = x.iter().map(|v| lambda * v).collect();
            let a = eval_cone(k, &lx);
            let b = lambda * eval_cone(k, &x);
            if (a - b).abs() > 4.0 * f64::EPSILON * b.abs().max(lambda) {
                homogeneous = Verdict::Fail;
            }
        }
    }

    // (ii) and (iii)
    let mut smooth = Verdict::Pass;
    let mut min_scaled_h = f64::INFINITY;
    let mut stability_samples = Vec::new();
    for &th in &thetas {
        let (h, a2) = k.scaled_curvatures(th);
        if !h.is_finite() || !a2.is_finite() {
            smooth = Verdict::Fail;
            continue;
        }
        min_scaled_h = min_scaled_h.min(h);
        let g = k.gamma(th);
        let p_norm = (1.0 + g * g).sqrt();
        stability_samples.push(StabilitySample {
            p_norm,
            h,
            a2,
        });
        if k.is_radial() {
            break;
        }
    }
    let mean_convex = if min_scaled_h >= -tol.tol { Verdict::Pass } else { Verdict::Fail };

    // (iv): best certified tangent plane, with l = 0 as a fallback candidate
    let mut plane: Option<SupportingPlane> = None;
    let count = certification_samples(k, tol);
    let candidates: Vec<Vec<f64>> = if k.is_radial() {
        let mut e = vec![0.0; k.n];
        e[0] = 1.0;
        vec![e]
    } else {
        thetas.iter().step_by((rays / 90).max(1)).map(|&t| unit(t).to_vec()).collect()
    };
    for dir in candidates {
        let c = match supporting_hyperplane(k, &dir, tol) {
            Ok(p) => p,
            Err(Error::Certification { direction, margin }) => SupportingPlane {
                coefficients: vec![],
                margin,
                worst_direction: direction,
            },
            Err(e) => return Err(e),
        };
        if plane.as_ref().map_or(true, |p| c.margin > p.margin) {
            plane = Some(c);
        }
    }
    let zero = vec![0.0; k.n];
    let (m0, w0) = certify(k, &zero, count);
    if plane.as_ref().map_or(true, |p| m0 > p.margin && p.margin < -tol.tol) {
        plane = Some(SupportingPlane {
            coefficients: zero,
            margin: m0,
            worst_direction: w0,
        });
    }
    let supporting_plane = match &plane {
        Some(p) if p.margin >= -tol.tol => Verdict::Pass,
        _ => Verdict::Fail,
    };
    // the tangent-plane search leaves the coefficients empty when it failed
    if let Some(p) = &mut plane {
        if p.coefficients.is_empty() {
            p.coefficients = vec![f64::NAN; k.n];
        }
    }

    // (v): samples sit at |x| = 1, i.e. at p = (ω, γ(ω)) on the graph
    let st = check_stability_condition(&stability_samples, k.n, tol.h_tol)?;

    Ok(ClassKReport {
        homogeneous,
        smooth,
        mean_convex,
        supporting_plane,
        stability: st.verdict,
        min_scaled_h,
        plane,
        stability_margin: st.min_margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sample(p: f64, h: f64, a2: f64) -> StabilitySample {
        StabilitySample { p_norm: p, h, a2 }
    }

    #[test]
    fn evaluation_examples() {
        let k = ConeProfile::radial(3, 1.0).unwrap();
        assert_eq!(eval_cone(&k, &[2.0, 0.0, 0.0]), 2.0);
        assert_eq!(eval_cone(&k, &[0.0, 0.0, 0.0]), 0.0);
        let a = ConeProfile::angular_from_fn(64, |t| 1.0 + 0.3 * (2.0 * t).cos()).unwrap();
        assert_relative_eq!(eval_cone(&a, &[2.0, 0.0]), 2.6, epsilon = 1e-13);
        assert_eq!(eval_cone(&a, &[0.0, 0.0]), 0.0);
    }

    #[test]
    fn interpolant_reproduces_trig_polynomials() {
        let a = ConeProfile::angular_from_fn(32, |t| 1.0 + 0.3 * (2.0 * t).cos() - 0.1 * (3.0 * t).sin()).unwrap();
        for &t in &[0.1, 1.3, 4.0] {
            let (g, g1, g2) = a.gamma_jet(t);
            assert_relative_eq!(g, 1.0 + 0.3 * (2.0 * t).cos() - 0.1 * (3.0 * t).sin(), epsilon = 1e-13);
            assert_relative_eq!(g1, -0.6 * (2.0 * t).sin() - 0.3 * (3.0 * t).cos(), epsilon = 1e-12);
            assert_relative_eq!(g2, -1.2 * (2.0 * t).cos() + 0.9 * (3.0 * t).sin(), epsilon = 1e-12);
        }
    }

    #[test]
    fn too_few_samples_is_a_resolution_error() {
        assert!(matches!(
            ConeProfile::angular(vec![1.0; 8]),
            Err(Error::Resolution(_))
        ));
    }

    #[test]
    fn stability_bound_arithmetic() {
        let pass = check_stability_condition(&[sample(2.0, 0.0, 0.0624)], 3, 1e-3).unwrap();
        assert_eq!(pass.verdict, Verdict::Pass);
        let fail = check_stability_condition(&[sample(2.0, 0.0, 0.0626)], 3, 1e-3).unwrap();
        assert_eq!(fail.verdict, Verdict::Fail);
        let vacuous = check_stability_condition(&[sample(2.0, 1.0, 5.0)], 3, 1e-3).unwrap();
        assert_eq!(vacuous.verdict, Verdict::Pass);
        assert_eq!(vacuous.checked, 0);
        let na = check_stability_condition(&[sample(2.0, 0.0, 5.0)], 2, 1e-3).unwrap();
        assert_eq!(na.verdict, Verdict::NotApplicable);
    }

    #[test]
    fn radial_cone_is_in_class_k() {
        for &(n, beta) in &[(2usize, 1.0), (3, 1.0), (3, 0.5), (4, 2.0)] {
            let k = ConeProfile::radial(n, beta).unwrap();
            let rep = validate_class_k(&k, &ClassKTolerances::default()).unwrap();
            assert!(rep.all_pass(), "{rep:?}");
            let expected = (n as f64 - 1.0) * beta / (1.0 + beta * beta).sqrt();
            assert_relative_eq!(rep.min_scaled_h, expected, epsilon = 1e-12);
            if n == 2 {
                assert_eq!(rep.stability, Verdict::NotApplicable);
            }
        }
    }

    #[test]
    fn flat_cone_passes_with_zero_curvature() {
        let k = ConeProfile::radial(3, 0.0).unwrap();
        let rep = validate_class_k(&k, &ClassKTolerances::default()).unwrap();
        assert!(rep.all_pass());
        assert_eq!(rep.min_scaled_h, 0.0);
        assert!(rep.stability_margin.unwrap() > 0.0);
    }

    #[test]
    fn tangent_plane_of_radial_cone() {
        let k = ConeProfile::radial(2, 1.0).unwrap();
        let p = supporting_hyperplane(&k, &[1.0, 0.0], &ClassKTolerances::default()).unwrap();
        assert_eq!(p.coefficients, vec![1.0, 0.0]);
        assert!(p.margin.abs() < 1e-15);
    }

    #[test]
    fn linear_angular_cone_is_its_own_plane() {
        let k = ConeProfile::angular_from_fn(32, |t| 0.4 * t.cos() - 0.7 * t.sin()).unwrap();
        let p = supporting_hyperplane(&k, &[0.3, 0.8], &ClassKTolerances::default()).unwrap();
        assert_relative_eq!(p.coefficients[0], 0.4, epsilon = 1e-12);
        assert_relative_eq!(p.coefficients[1], -0.7, epsilon = 1e-12);
        assert!(p.margin.abs() < 1e-12);
    }

    #[test]
    fn convex_angular_cone_certifies() {
        // γ + γ'' = 1 − 0.9 cos 2θ > 0, so k is convex and every tangent plane supports it.
        let k = ConeProfile::angular_from_fn(64, |t| 1.0 + 0.3 * (2.0 * t).cos()).unwrap();
        let tol = ClassKTolerances::default();
        for j in 0..12 {
            let t = j as f64 * 0.5;
            let p = supporting_hyperplane(&k, &[t.cos(), t.sin()], &tol).unwrap();
            assert!(p.margin >= -1e-12);
        }
        let rep = validate_class_k(&k, &tol).unwrap();
        assert!(rep.all_pass());
        assert_relative_eq!(rep.min_scaled_h, mean_convexity_oracle(), epsilon = 1e-3);
    }

    // Dense brute-force minimum of (γ+γ'')(1+γ²)/W³ for γ = 1 + 0.3 cos 2θ.
    fn mean_convexity_oracle() -> f64 {
        (0..100_000)
            .map(|j| {
                let t = 2.0 * PI * j as f64 / 100_000.0;
                let g = 1.0 + 0.3 * (2.0 * t).cos();
                let g1 = -0.6 * (2.0 * t).sin();
                let g2 = -1.2 * (2.0 * t).cos();
                (g + g2) * (1.0 + g * g) / (1.0 + g * g + g1 * g1).powf(1.5)
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn nonconvex_cone_fails_tangent_certification() {
        // γ + γ'' = 1 − 8·0.4 cos 3θ changes sign: the tangent plane at θ = 0 cuts the cone.
        let k = ConeProfile::angular_from_fn(64, |t| 1.0 + 0.4 * (3.0 * t).cos()).unwrap();
        let err = supporting_hyperplane(&k, &[1.0, 0.0], &ClassKTolerances::default()).unwrap_err();
        assert!(matches!(err, Error::Certification { margin, .. } if margin < 0.0));
        let rep = validate_class_k(&k, &ClassKTolerances::default()).unwrap();
        assert_eq!(rep.mean_convex, Verdict::Fail);
        // γ > 0, so l = 0 still lies below k
        assert_eq!(rep.supporting_plane, Verdict::Pass);
    }

    #[test]
    fn cone_file_round_trip() {
        let text = "n = 3\nkind = \"radial\"\nbeta = 1.5\n";
        let k: ConeProfile = toml::from_str(text).unwrap();
        assert_eq!(k.beta(), Some(1.5));
        let back = toml::to_string(&k).unwrap();
        let again: ConeProfile = toml::from_str(&back).unwrap();
        assert_eq!(k, again);
        let bad = "n = 3\nkind = \"angular\"\nangular_samples = [1.0]\n";
        assert!(toml::from_str::<ConeProfile>(bad).is_err());
    }
}
