//! Arc-length reparametrization of trigonometric curves.
//!
//! The speed `|c'(t)|` is expanded in a Fourier series (spectrally accurate for
//! analytic curves), integrated term by term, and inverted by Newton's method
//! using the exact speed.

use crate::trig::{TrigCurve, TrigSeries};
use crate::Vec3;
use rustfft::{num_complex::Complex64, FftPlanner};
use std::f64::consts::TAU;

/// Position and arc-length derivatives of the unit-speed curve at one point.
#[derive(Clone, Copy, Debug)]
pub struct ArcJet {
    /// Original parameter `t(s)`.
    pub param: f64,
    pub point: Vec3,
    /// Unit tangent `dc/ds`.
    pub tangent: Vec3,
    /// Curvature vector `dT/ds`.
    pub curvature: Vec3,
    /// `d²T/ds²`.
    pub curvature_rate: Vec3,
}

/// A closed trigonometric curve together with its arc-length map.
#[derive(Clone, Debug)]
pub struct ArcCurve {
    curve: TrigCurve,
    mean_speed: f64,
    /// Periodic part of `S(t) − mean_speed·t`.
    periodic: TrigSeries,
    length: f64,
    /// `S(t)` on a uniform `t` grid, used to seed the inversion.
    table: Vec<f64>,
}

impl ArcCurve {
    pub fn new(curve: TrigCurve) -> Self {
        let degree = curve.degree().max(1);
        let mut n = (64 * (degree + 1)).next_power_of_two();
        let (mean, cos, sin) = loop {
            let speeds: Vec<f64> = (0..n)
                .map(|j| curve.jet(TAU * j as f64 / n as f64)[1].norm())
                .collect();
            let (mean, cos, sin) = real_fourier(&speeds);
            let tail_start = cos.len() * 3 / 4;
            let tail = cos[tail_start..]
                .iter()
                .chain(sin[tail_start..].iter())
                .fold(0.0f64, |m, v| m.max(v.abs()));
            if tail <= 1e-15 * mean || n >= 1 << 16 {
                break (mean, cos, sin);
            }
            n *= 2;
        };
        // Integrate: ∫ (a cos kt + b sin kt) = (a sin kt − b cos kt)/k, anchored so S(0) = 0.
        let keep = cos
            .iter()
            .zip(sin.iter())
            .rposition(|(a, b)| a.abs().max(b.abs()) > 1e-17 * mean)
            .map_or(0, |i| i + 1);
        let mut int_cos = vec![0.0; keep + 1];
        let mut int_sin = vec![0.0; keep];
        for k in 1..=keep {
            let (a, b) = (cos[k - 1], sin[k - 1]);
            int_cos[k] = -b / k as f64;
            int_sin[k - 1] = a / k as f64;
            int_cos[0] += b / k as f64;
        }
        let periodic = TrigSeries::new(int_cos, int_sin);
        let length = TAU * mean;
        let mut arc = ArcCurve {
            curve,
            mean_speed: mean,
            periodic,
            length,
            table: Vec::new(),
        };
        let m = 512;
        arc.table = (0..=m).map(|j| arc.arclength_at(TAU * j as f64 / m as f64)).collect();
        arc
    }

    pub fn curve(&self) -> &TrigCurve {
        &self.curve
    }

    /// Total length `|L|`.
    pub fn length(&self) -> f64 {
        self.length
    }

    /// Arc length from `t = 0` to `t ∈ [0, 2π]`.
    pub fn arclength_at(&self, t: f64) -> f64 {
        self.mean_speed * t + self.periodic.eval(t)
    }

    pub fn speed(&self, t: f64) -> f64 {
        self.curve.jet(t)[1].norm()
    }

    /// Inverse of the arc-length map; `s` is taken modulo the length.
    pub fn param_at(&self, s: f64) -> f64 {
        let s = s.rem_euclid(self.length);
        let m = self.table.len() - 1;
        let idx = self.table.partition_point(|v| *v <= s).clamp(1, m);
        let (s0, s1) = (self.table[idx - 1], self.table[idx]);
        let h = TAU / m as f64;
        let (mut lo, mut hi) = (h * (idx - 1) as f64, h * idx as f64);
        let mut t = lo + h * (s - s0) / (s1 - s0);
        for _ in 0..50 {
            let f = self.arclength_at(t) - s;
            if f > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let step = f / self.speed(t);
            let mut next = t - step;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - t).abs() <= 1e-16 * (1.0 + t.abs()) {
                return next;
            }
            t = next;
        }
        t
    }

    pub fn point_at(&self, s: f64) -> Vec3 {
        self.curve.point(self.param_at(s))
    }

    /// Unit-speed jet at arc length `s`.
    pub fn jet_at(&self, s: f64) -> ArcJet {
        let t = self.param_at(s);
        let [c, d1, d2, d3] = self.curve.jet(t);
        let speed = d1.norm();
        let tangent = d1 / speed;
        let speed_rate = tangent.dot(&d2);
        // P = c'' − (T·c'')T is the normal part of c''; dT/ds = P/σ².
        let p = d2 - tangent * speed_rate;
        let curvature = p / (speed * speed);
        let dtangent_dt = curvature * speed;
        let dp_dt = d3 - tangent * (dtangent_dt.dot(&d2) + tangent.dot(&d3)) - dtangent_dt * speed_rate;
        let dcurv_dt = dp_dt / (speed * speed) - p * (2.0 * speed_rate / speed.powi(3));
        ArcJet {
            param: t,
            point: c,
            tangent,
            curvature,
            curvature_rate: dcurv_dt / speed,
        }
    }

    /// `n` points at uniform arc-length spacing, starting at `s = 0`.
    pub fn uniform_points(&self, n: usize) -> Vec<Vec3> {
        (0..n)
            .map(|i| self.point_at(self.length * i as f64 / n as f64))
            .collect()
    }
}

/// Real Fourier coefficients of uniform periodic samples:
/// mean, cosine `a_1..`, sine `b_1..` (up to the Nyquist limit exclusive).
fn real_fourier(samples: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
    let n = samples.len();
    let mut buf: Vec<Complex64> = samples.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    let scale = 2.0 / n as f64;
    let cos = (1..half).map(|k| buf[k].re * scale).collect();
    let sin = (1..half).map(|k| -buf[k].im * scale).collect();
    (buf[0].re / n as f64, cos, sin)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn circle(r: f64) -> TrigCurve {
        TrigCurve::new(
            TrigSeries::new(vec![0.0, r], vec![]),
            TrigSeries::new(vec![0.0], vec![r]),
            TrigSeries::constant(0.0),
        )
    }

    #[test]
    fn unit_circle_length_and_identity_map() {
        let arc = ArcCurve::new(circle(1.0));
        assert_relative_eq!(arc.length(), TAU, epsilon = 1e-14);
        for i in 0..17 {
            let s = 0.37 * i as f64;
            assert_relative_eq!(arc.param_at(s), s.rem_euclid(TAU), epsilon = 1e-13);
        }
    }

    #[test]
    fn ellipse_inversion_is_consistent() {
        let ellipse = TrigCurve::new(
            TrigSeries::new(vec![0.0, 2.0], vec![]),
            TrigSeries::new(vec![0.0], vec![1.0]),
            TrigSeries::constant(0.0),
        );
        let arc = ArcCurve::new(ellipse);
        // Complete elliptic integral: perimeter of the (2, 1) ellipse.
        assert_relative_eq!(arc.length(), 9.688448220547675, epsilon = 1e-12);
        for i in 0..40 {
            let s = arc.length() * i as f64 / 40.0 + 0.01;
            let t = arc.param_at(s);
            assert!((arc.arclength_at(t) - s).abs() < 1e-12);
        }
    }

    #[test]
    fn jet_derivatives_match_differences() {
        let curve = TrigCurve::interpolate(6, |t| {
            Vec3::new(
                (2.0 + (3.0 * t).cos()) * (2.0 * t).cos(),
                (2.0 + (3.0 * t).cos()) * (2.0 * t).sin(),
                (3.0 * t).sin(),
            )
        });
        let arc = ArcCurve::new(curve);
        let h = 1e-4;
        for i in 0..10 {
            let s = 1.3 * i as f64;
            let j = arc.jet_at(s);
            let tangent_fd = (arc.point_at(s + h) - arc.point_at(s - h)) / (2.0 * h);
            assert!((tangent_fd - j.tangent).norm() < 1e-7);
            let curv_fd = (arc.jet_at(s + h).tangent - arc.jet_at(s - h).tangent) / (2.0 * h);
            assert!((curv_fd - j.curvature).norm() < 1e-6);
            let rate_fd = (arc.jet_at(s + h).curvature - arc.jet_at(s - h).curvature) / (2.0 * h);
            assert!((rate_fd - j.curvature_rate).norm() < 1e-5 * (1.0 + j.curvature_rate.norm()));
        }
    }
}
