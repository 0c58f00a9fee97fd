//! Dormand–Prince 5(4) with FSAL, step-size control and Hairer's dense
//! output of order 4.

use crate::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Local error tolerances.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rtol: 1e-11,
            atol: 1e-12,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0 && self.rtol.is_finite() && self.atol.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "integrator tolerances must be positive (rtol {}, atol {})",
                self.rtol, self.atol
            )));
        }
        Ok(())
    }
}

/// Step statistics.
#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// One accepted step with its dense-output polynomial.
#[derive(Clone, Debug)]
pub struct DenseStep<const N: usize> {
    pub t0: f64,
    pub h: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    r: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    /// State at `t0 + θh`, `θ ∈ [0, 1]`.
    pub fn at(&self, theta: f64) -> [f64; N] {
        let s = 1.0 - theta;
        let [r1, r2, r3, r4, r5] = &self.r;
        std::array::from_fn(|i| r1[i] + theta * (r2[i] + s * (r3[i] + theta * (r4[i] + s * r5[i]))))
    }

    pub fn at_time(&self, t: f64) -> [f64; N] {
        self.at(((t - self.t0) / self.h).clamp(0.0, 1.0))
    }
}

/// Adaptive stepper for `y' = f(t, y)`.
pub struct Dopri5<F, const N: usize>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    rhs: F,
    tol: Tolerances,
    t: f64,
    y: [f64; N],
    k1: [f64; N],
    h: f64,
    h_max: f64,
    rejected_last: bool,
    pub stats: StepStats,
}

fn comb<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + h * terms.iter().map(|(c, k)| c * k[i]).sum::<f64>())
}

impl<F, const N: usize> Dopri5<F, N>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    pub fn new(mut rhs: F, t0: f64, y0: [f64; N], tol: Tolerances) -> Self {
        let k1 = rhs(t0, &y0);
        let scale = |v: &[f64; N]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let (ny, nf) = (scale(&y0), scale(&k1));
        let h = if nf > 1e-12 { 0.01 * (ny.max(1e-3) / nf).min(1.0) } else { 1e-3 };
        Dopri5 {
            rhs,
            tol,
            t: t0,
            y: y0,
            k1,
            h,
            h_max: f64::INFINITY,
            rejected_last: false,
            stats: StepStats {
                evaluations: 1,
                ..StepStats::default()
            },
        }
    }

    pub fn with_max_step(mut self, h_max: f64) -> Self {
        self.h_max = h_max;
        self.h = self.h.min(h_max);
        self
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[f64; N] {
        &self.y
    }

    /// Takes one accepted step, not going beyond `t_stop`.
    pub fn step(&mut self, t_stop: f64) -> Result<DenseStep<N>> {
        loop {
            let remaining = t_stop - self.t;
            let mut h = self.h.min(self.h_max);
            let last = h >= remaining;
            if last {
                h = remaining;
            }
            if h <= 1e-14 * self.t.abs().max(1.0) {
                return Err(Error::StepUnderflow {
                    t: self.t,
                    state: self.y.to_vec(),
                });
            }
            let (t, y, k1) = (self.t, self.y, self.k1);
            let f = &mut self.rhs;
            let k2 = f(t + C2 * h, &comb(&y, h, &[(A21, &k1)]));
            let k3 = f(t + C3 * h, &comb(&y, h, &[(A31, &k1), (A32, &k2)]));
            let k4 = f(t + C4 * h, &comb(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = f(t + C5 * h, &comb(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
            let k6 = f(t + h, &comb(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
            let y1 = comb(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
            let k7 = f(t + h, &y1);
            self.stats.evaluations += 6;

            let mut err = 0.0;
            for i in 0..N {
                let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = self.tol.atol + self.tol.rtol * y[i].abs().max(y1[i].abs());
                err += (e / sc).powi(2);
            }
            let err = (err / N as f64).sqrt();
            if !err.is_finite() {
                self.stats.rejected += 1;
                self.h = 0.1 * h;
                self.rejected_last = true;
                continue;
            }
            let mut fac = 0.9 * err.powf(-0.2);
            fac = fac.clamp(0.2, if self.rejected_last { 1.0 } else { 10.0 });
            if err > 1.0 {
                self.stats.rejected += 1;
                self.h = h * fac.min(1.0);
                self.rejected_last = true;
                continue;
            }
            self.stats.accepted += 1;
            let r2: [f64; N] = std::array::from_fn(|i| y1[i] - y[i]);
            let r3: [f64; N] = std::array::from_fn(|i| h * k1[i] - r2[i]);
            let r4: [f64; N] = std::array::from_fn(|i| r2[i] - h * k7[i] - r3[i]);
            let r5: [f64; N] = std::array::from_fn(|i| {
                h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i])
            });
            let dense = DenseStep {
                t0: t,
                h,
                y0: y,
                y1,
                r: [y, r2, r3, r4, r5],
            };
            self.t = if last { t_stop } else { t + h };
            self.y = y1;
            self.k1 = k7;
            if !last || fac < 1.0 {
                self.h = h * fac;
            }
            self.rejected_last = false;
            return Ok(dense);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_to_tolerance() {
        let tol = Tolerances {
            rtol: 1e-10,
            atol: 1e-12,
        };
        let mut s = Dopri5::new(|_, y: &[f64; 1]| [-y[0]], 0.0, [1.0], tol);
        while s.t() < 5.0 {
            s.step(5.0).unwrap();
        }
        assert!((s.y()[0] - (-5.0f64).exp()).abs() < 1e-10);
        assert_eq!(s.t(), 5.0);
    }

    #[test]
    fn dense_output_tracks_rotation() {
        let tol = Tolerances {
            rtol: 1e-10,
            atol: 1e-12,
        };
        let mut s = Dopri5::new(|_, y: &[f64; 2]| [-y[1], y[0]], 0.0, [1.0, 0.0], tol);
        let mut worst = 0.0f64;
        while s.t() < 6.0 {
            let step = s.step(6.0).unwrap();
            for j in 1..10 {
                let theta = j as f64 / 10.0;
                let t = step.t0 + theta * step.h;
                let y = step.at(theta);
                worst = worst.max((y[0] - t.cos()).abs()).max((y[1] - t.sin()).abs());
            }
        }
        assert!(worst < 1e-8, "{worst}");
    }

    #[test]
    fn fifth_order_convergence() {
        // Global error at fixed step count scales like h⁵: compare via loose
        // and tight tolerances on y' = y cos t.
        let exact = 1.0f64.sin().exp();
        let run = |rtol: f64| {
            let tol = Tolerances { rtol, atol: rtol };
            let mut s = Dopri5::new(|t, y: &[f64; 1]| [y[0] * t.cos()], 0.0, [1.0], tol);
            while s.t() < 1.0 {
                s.step(1.0).unwrap();
            }
            ((s.y()[0] - exact).abs(), s.stats.accepted)
        };
        let (e1, n1) = run(1e-6);
        let (e2, n2) = run(1e-11);
        assert!(e2 < e1 && e2 < 1e-10);
        assert!(n2 > n1);
    }

    #[test]
    fn underflow_is_reported() {
        // Finite-time blow-up at t = 1.
        let tol = Tolerances {
            rtol: 1e-10,
            atol: 1e-10,
        };
        let mut s = Dopri5::new(|_, y: &[f64; 1]| [y[0] * y[0]], 0.0, [1.0], tol);
        let mut result = Ok(());
        for _ in 0..100_000 {
            match s.step(2.0) {
                Ok(_) if s.t() >= 2.0 => break,
                Ok(_) => {}
                Err(e) => {
                    result = Err(e);
                    break;
                }
            }
        }
        assert!(matches!(result, Err(Error::StepUnderflow { .. })));
    }
}
