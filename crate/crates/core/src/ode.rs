//! Adaptive Dormand–Prince 5(4) integrator for small first-order systems.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeTolerances {
    pub rtol: f64,
    pub atol: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for OdeTolerances {
    fn default() -> Self {
        OdeTolerances {
            rtol: 1e-12,
            atol: 1e-13,
            h_min: 1e-14,
            max_steps: 1_000_000,
        }
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth-order weights are the last row of A; these are fifth minus fourth order
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Adaptive integrator state carried across successive calls so the step
/// size is reused between output nodes.
#[derive(Debug, Clone)]
pub struct DormandPrince<const D: usize> {
    pub tol: OdeTolerances,
    h: f64,
    pub steps: usize,
}

impl<const D: usize> DormandPrince<D> {
    pub fn new(tol: OdeTolerances, h0: f64) -> Self {
        DormandPrince { tol, h: h0, steps: 0 }
    }

    /// Advances `y` from `x0` to `x1 > x0`.
    pub fn integrate(
        &mut self,
        f: &impl Fn(f64, &[f64; D]) -> [f64; D],
        x0: f64,
        x1: f64,
        y: &mut [f64; D],
    ) -> Result<()> {
        let mut x = x0;
        let mut k = [[0.0; D]; 7];
        while x < x1 {
            if self.steps >= self.tol.max_steps {
                return Err(Error::Shooting(format!("step budget exhausted at {x}")));
            }
            let last = x + self.h >= x1;
            let h = if last { x1 - x } else { self.h };
            k[0] = f(x, y);
            for s in 1..7 {
                let mut ys = *y;
                for (i, yi) in ys.iter_mut().enumerate() {
                    for j in 0..s {
                        *yi += h * A[s][j] * k[j][i];
                    }
                }
                k[s] = f(x + C[s] * h, &ys);
            }
            let mut y5 = *y;
            let mut err = 0.0_f64;
            for i in 0..D {
                for j in 0..6 {
                    y5[i] += h * A[6][j] * k[j][i];
                }
                let e: f64 = (0..7).map(|j| h * E[j] * k[j][i]).sum();
                let sc = self.tol.atol + self.tol.rtol * y[i].abs().max(y5[i].abs());
                err = err.max((e / sc).abs());
            }
            self.steps += 1;
            if !err.is_finite() || y5.iter().any(|v| !v.is_finite()) {
                if h <= self.tol.h_min {
                    return Err(Error::Shooting(format!("blow-up near {x}")));
                }
                self.h = h * 0.2;
                continue;
            }
            if err <= 1.0 {
                x = if last { x1 } else { x + h };
                *y = y5;
                let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !last || grow < 1.0 {
                    self.h = h * grow;
                }
            } else {
                let shrink = (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
                self.h = h * shrink;
                if self.h < self.tol.h_min {
                    return Err(Error::Shooting(format!("step size underflow at {x}")));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator() {
        let f = |_x: f64, y: &[f64; 2]| [y[1], -y[0]];
        let mut y = [1.0, 0.0];
        let mut dp = DormandPrince::new(OdeTolerances::default(), 0.1);
        dp.integrate(&f, 0.0, 10.0, &mut y).unwrap();
        assert!((y[0] - 10f64.cos()).abs() < 1e-10);
        assert!((y[1] + 10f64.sin()).abs() < 1e-10);
    }

    #[test]
    fn output_nodes_do_not_disturb_accuracy() {
        let f = |x: f64, y: &[f64; 1]| [y[0] * x.cos()];
        let mut y = [1.0];
        let mut dp = DormandPrince::new(OdeTolerances::default(), 0.01);
        for j in 0..100 {
            dp.integrate(&f, 0.05 * j as f64, 0.05 * (j + 1) as f64, &mut y).unwrap();
        }
        assert!((y[0] - 5f64.sin().exp()).abs() < 1e-10);
    }

    #[test]
    fn blow_up_reported() {
        let f = |_x: f64, y: &[f64; 1]| [y[0] * y[0]];
        let mut y = [1.0];
        let mut dp = DormandPrince::new(OdeTolerances::default(), 0.1);
        assert!(dp.integrate(&f, 0.0, 2.0, &mut y).is_err());
    }
}
