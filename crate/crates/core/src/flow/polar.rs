//! Polar (n = 2) operator on a ring-major tensor grid. The outer ring is
//! Dirichlet; ring 0 reaches across the origin to the node at `θ + π`.

use crate::error::Result;
use crate::geometry::{polar_ring, PolarJet, PolarRing};
use crate::grid::GridSpec;
use crate::linalg::BandMatrix;

use super::SpatialOperator;

pub(crate) struct PolarOperator {
    nr: usize,
    nt: usize,
    dt: f64,
    r: Vec<f64>,
    rings: Vec<PolarRing>,
    drift: bool,
}

/// Position of stencil entry `(a, b)`: radial slot `a ∈ 0..3`, angular offset `b − 1`.
type Patch = [[usize; 3]; 3];

impl PolarOperator {
    pub fn new(spec: &GridSpec, drift: bool) -> Self {
        let r = spec.radial_nodes().to_vec();
        let rings = (0..r.len()).map(|i| polar_ring(&r, i)).collect();
        PolarOperator {
            nr: r.len(),
            nt: spec.n_theta(),
            dt: spec.d_theta(),
            r,
            rings,
            drift,
        }
    }

    fn patch(&self, i: usize, j: usize) -> Patch {
        let nt = self.nt as isize;
        let ring = &self.rings[i];
        let mut p = [[0usize; 3]; 3];
        for a in 0..3 {
            let shift = if ring.mirrored[a] { nt / 2 } else { 0 };
            for b in 0..3 {
                let jj = (j as isize + b as isize - 1 + shift).rem_euclid(nt) as usize;
                p[a][b] = ring.rings[a] * self.nt + jj;
            }
        }
        p
    }

    fn jet(&self, i: usize, vals: &[[f64; 3]; 3]) -> PolarJet {
        let w = &self.rings[i].weights;
        let center = [vals[0][1], vals[1][1], vals[2][1]];
        let dth = [
            (vals[0][2] - vals[0][0]) / (2.0 * self.dt),
            (vals[1][2] - vals[1][0]) / (2.0 * self.dt),
            (vals[2][2] - vals[2][0]) / (2.0 * self.dt),
        ];
        PolarJet {
            r: self.r[i],
            ur: w.apply_d1(center),
            urr: w.apply_d2(center),
            ut: dth[1],
            utt: (vals[1][2] - 2.0 * vals[1][1] + vals[1][0]) / (self.dt * self.dt),
            urt: w.apply_d1(dth),
        }
    }

    fn local_speed(&self, jet: &PolarJet, u: f64) -> f64 {
        let mut s = jet.speed();
        if self.drift {
            s -= 0.5 * (u - jet.r * jet.ur);
        }
        s
    }

    fn gather(v: &[f64], p: &Patch) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                out[a][b] = v[p[a][b]];
            }
        }
        out
    }

    pub fn bandwidth(&self) -> usize {
        2 * self.nt
    }
}

impl SpatialOperator for PolarOperator {
    fn len(&self) -> usize {
        self.nr * self.nt
    }

    fn is_dirichlet(&self, k: usize) -> bool {
        k / self.nt == self.nr - 1
    }

    fn speed(&self, v: &[f64], out: &mut [f64]) {
        for i in 0..self.nr {
            for j in 0..self.nt {
                let k = i * self.nt + j;
                if i == self.nr - 1 {
                    out[k] = 0.0;
                    continue;
                }
                let p = self.patch(i, j);
                let vals = Self::gather(v, &p);
                out[k] = self.local_speed(&self.jet(i, &vals), v[k]);
            }
        }
    }

    fn solve_newton(&self, v: &[f64], c: f64, rhs: &mut [f64]) -> Result<()> {
        let m = self.len();
        let mut a = BandMatrix::zeros(m, self.bandwidth());
        for i in 0..self.nr {
            for j in 0..self.nt {
                let k = i * self.nt + j;
                a.add(k, k, 1.0);
                if i == self.nr - 1 {
                    continue;
                }
                let p = self.patch(i, j);
                let base = Self::gather(v, &p);
                for aa in 0..3 {
                    for bb in 0..3 {
                        let col = p[aa][bb];
                        // a node can appear twice in the patch (ring 0); perturb it once
                        let first = (0..3)
                            .flat_map(|x| (0..3).map(move |y| (x, y)))
                            .find(|&(x, y)| p[x][y] == col)
                            .unwrap();
                        if first != (aa, bb) {
                            continue;
                        }
                        let h = 1e-7 * (1.0 + base[aa][bb].abs());
                        let mut plus = base;
                        let mut minus = base;
                        for x in 0..3 {
                            for y in 0..3 {
                                if p[x][y] == col {
                                    plus[x][y] += h;
                                    minus[x][y] -= h;
                                }
                            }
                        }
                        let up = if col == k { v[k] + h } else { v[k] };
                        let um = if col == k { v[k] - h } else { v[k] };
                        let d = (self.local_speed(&self.jet(i, &plus), up)
                            - self.local_speed(&self.jet(i, &minus), um))
                            / (2.0 * h);
                        a.add(k, col, -c * d);
                    }
                }
            }
        }
        a.solve(rhs)
    }
}
