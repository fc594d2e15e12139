//! Tridiagonal and banded direct solvers for the Newton systems.

use crate::error::{Error, Result};

/// Solves `sub[i] x[i-1] + diag[i] x[i] + sup[i] x[i+1] = rhs[i]` in place
/// (Thomas algorithm, no pivoting). `sub[0]` and `sup[m-1]` are ignored.
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &mut [f64]) -> Result<()> {
    let m = diag.len();
    let mut c = vec![0.0; m];
    let mut beta = diag[0];
    if beta == 0.0 || !beta.is_finite() {
        return Err(Error::InvalidInput("singular tridiagonal system".into()));
    }
    rhs[0] /= beta;
    for i in 1..m {
        c[i - 1] = sup[i - 1] / beta;
        beta = diag[i] - sub[i] * c[i - 1];
        if beta == 0.0 || !beta.is_finite() {
            return Err(Error::InvalidInput("singular tridiagonal system".into()));
        }
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / beta;
    }
    for i in (0..m - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
    Ok(())
}

/// Square band matrix with `bw` sub- and super-diagonals, stored row-wise.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    m: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(m: usize, bw: usize) -> Self {
        BandMatrix {
            m,
            bw,
            data: vec![0.0; m * (2 * bw + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.bw >= i && j <= i + self.bw, "({i},{j}) outside band");
        i * (2 * self.bw + 1) + (j + self.bw - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.bw < i || j > i + self.bw {
            0.0
        } else {
            self.data[self.slot(i, j)]
        }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.slot(i, j);
        self.data[k] += v;
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.slot(i, j);
        self.data[k] = v;
    }

    /// In-place LU without pivoting followed by the solve. The Newton matrices
    /// are `I − Δt·J` with `J` elliptic, which keeps the pivots away from zero.
    pub fn solve(mut self, rhs: &mut [f64]) -> Result<()> {
        let (m, bw) = (self.m, self.bw);
        for k in 0..m {
            let pivot = self.data[self.slot(k, k)];
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(Error::InvalidInput(format!("zero pivot in row {k}")));
            }
            let last = (k + bw).min(m - 1);
            for i in k + 1..=last {
                let s = self.slot(i, k);
                let f = self.data[s] / pivot;
                if f == 0.0 {
                    continue;
                }
                self.data[s] = f;
                for j in k + 1..=last {
                    let v = self.data[self.slot(k, j)];
                    let t = self.slot(i, j);
                    self.data[t] -= f * v;
                }
                rhs[i] -= f * rhs[k];
            }
        }
        for k in (0..m).rev() {
            let last = (k + bw).min(m - 1);
            let mut acc = rhs[k];
            for j in k + 1..=last {
                acc -= self.data[self.slot(k, j)] * rhs[j];
            }
            rhs[k] = acc / self.data[self.slot(k, k)];
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_matches_hand_solution() {
        let sub = [0.0, -1.0, -1.0];
        let diag = [2.0, 2.0, 2.0];
        let sup = [-1.0, -1.0, 0.0];
        let mut b = [1.0, 0.0, 1.0];
        solve_tridiagonal(&sub, &diag, &sup, &mut b).unwrap();
        for x in b {
            assert!((x - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn band_solver_matches_dense_product() {
        let m = 12;
        let bw = 3;
        let mut a = BandMatrix::zeros(m, bw);
        for i in 0..m {
            for j in i.saturating_sub(bw)..(i + bw + 1).min(m) {
                let v = if i == j { 10.0 } else { 1.0 / (1.0 + (i + 2 * j) as f64) };
                a.set(i, j, v);
            }
        }
        let x: Vec<f64> = (0..m).map(|i| (i as f64).sin()).collect();
        let mut b: Vec<f64> = (0..m)
            .map(|i| (0..m).map(|j| a.get(i, j) * x[j]).sum())
            .collect();
        a.solve(&mut b).unwrap();
        for (u, v) in b.iter().zip(&x) {
            assert!((u - v).abs() < 1e-12);
        }
    }
}
