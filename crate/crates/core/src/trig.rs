//! Real trigonometric polynomials on [0, 2π) and closed curves built from them.

use crate::Vec3;
use std::f64::consts::TAU;

/// `f(t) = a₀ + Σ_{k≥1} (a_k cos kt + b_k sin kt)`.
///
/// `cos[0]` holds the constant term; `sin[0]` is unused and kept at zero so
/// both vectors share an index.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigSeries {
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl TrigSeries {
    /// Builds a series from cosine coefficients `a₀, a₁, …` and sine
    /// coefficients `b₁, b₂, …`.
    pub fn new(cos: Vec<f64>, sin_from_one: Vec<f64>) -> Self {
        let degree = cos.len().saturating_sub(1).max(sin_from_one.len());
        let mut c = cos;
        c.resize(degree + 1, 0.0);
        let mut s = Vec::with_capacity(degree + 1);
        s.push(0.0);
        s.extend(sin_from_one);
        s.resize(degree + 1, 0.0);
        TrigSeries { cos: c, sin: s }
    }

    pub fn constant(value: f64) -> Self {
        TrigSeries::new(vec![value], vec![])
    }

    /// Interpolates `f` by a trigonometric polynomial of the given degree from
    /// `n` uniform samples. Exact when `f` itself is a trigonometric polynomial
    /// of that degree and `n > 2·degree`.
    pub fn interpolate(degree: usize, f: impl Fn(f64) -> f64) -> Self {
        let n = 2 * degree + 2;
        let samples: Vec<f64> = (0..n).map(|j| f(TAU * j as f64 / n as f64)).collect();
        let mut cos = vec![0.0; degree + 1];
        let mut sin = vec![0.0; degree + 1];
        for (j, v) in samples.iter().enumerate() {
            let t = TAU * j as f64 / n as f64;
            for k in 0..=degree {
                let (s, c) = (k as f64 * t).sin_cos();
                cos[k] += v * c;
                sin[k] += v * s;
            }
        }
        cos[0] /= n as f64;
        sin[0] = 0.0;
        for k in 1..=degree {
            cos[k] *= 2.0 / n as f64;
            sin[k] *= 2.0 / n as f64;
        }
        // Clean interpolation noise so exact polynomials stay sparse.
        let scale = cos.iter().chain(sin.iter()).fold(0.0f64, |m, v| m.max(v.abs()));
        for v in cos.iter_mut().chain(sin.iter_mut()) {
            if v.abs() < 1e-15 * scale {
                *v = 0.0;
            }
        }
        TrigSeries { cos, sin }
    }

    pub fn degree(&self) -> usize {
        self.cos.len() - 1
    }

    pub fn cos_coefficients(&self) -> &[f64] {
        &self.cos
    }

    /// Sine coefficients starting at `k = 1`.
    pub fn sin_coefficients(&self) -> &[f64] {
        &self.sin[1..]
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.jet(t)[0]
    }

    /// Value and first three derivatives at `t`.
    pub fn jet(&self, t: f64) -> [f64; 4] {
        let mut out = [self.cos[0], 0.0, 0.0, 0.0];
        let (s1, c1) = t.sin_cos();
        let (mut sk, mut ck) = (0.0f64, 1.0f64);
        for k in 1..=self.degree() {
            // Rotate (cos kt, sin kt) by t; re-anchor periodically to bound drift.
            let (ns, nc) = if k % 16 == 0 {
                (k as f64 * t).sin_cos()
            } else {
                (sk * c1 + ck * s1, ck * c1 - sk * s1)
            };
            sk = ns;
            ck = nc;
            let (a, b) = (self.cos[k], self.sin[k]);
            if a == 0.0 && b == 0.0 {
                continue;
            }
            let kf = k as f64;
            let even = a * ck + b * sk;
            let odd = -a * sk + b * ck;
            out[0] += even;
            out[1] += kf * odd;
            out[2] -= kf * kf * even;
            out[3] -= kf * kf * kf * odd;
        }
        out
    }
}

/// A closed curve `c: [0, 2π) → R³` with trigonometric-polynomial coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigCurve {
    pub x: TrigSeries,
    pub y: TrigSeries,
    pub z: TrigSeries,
}

impl TrigCurve {
    pub fn new(x: TrigSeries, y: TrigSeries, z: TrigSeries) -> Self {
        TrigCurve { x, y, z }
    }

    /// Interpolates a closed curve given in closed form.
    pub fn interpolate(degree: usize, f: impl Fn(f64) -> Vec3) -> Self {
        TrigCurve {
            x: TrigSeries::interpolate(degree, |t| f(t).x),
            y: TrigSeries::interpolate(degree, |t| f(t).y),
            z: TrigSeries::interpolate(degree, |t| f(t).z),
        }
    }

    pub fn degree(&self) -> usize {
        self.x.degree().max(self.y.degree()).max(self.z.degree())
    }

    pub fn point(&self, t: f64) -> Vec3 {
        Vec3::new(self.x.eval(t), self.y.eval(t), self.z.eval(t))
    }

    /// `[c, c', c'', c''']` at parameter `t`.
    pub fn jet(&self, t: f64) -> [Vec3; 4] {
        let (jx, jy, jz) = (self.x.jet(t), self.y.jet(t), self.z.jet(t));
        std::array::from_fn(|i| Vec3::new(jx[i], jy[i], jz[i]))
    }

    pub fn translated(&self, offset: Vec3) -> Self {
        let shift = |s: &TrigSeries, d: f64| {
            let mut c = s.clone();
            c.cos[0] += d;
            c
        };
        TrigCurve {
            x: shift(&self.x, offset.x),
            y: shift(&self.y, offset.y),
            z: shift(&self.z, offset.z),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let scale = |s: &TrigSeries| TrigSeries {
            cos: s.cos.iter().map(|v| v * factor).collect(),
            sin: s.sin.iter().map(|v| v * factor).collect(),
        };
        TrigCurve {
            x: scale(&self.x),
            y: scale(&self.y),
            z: scale(&self.z),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn interpolation_recovers_polynomial() {
        let f = |t: f64| 0.5 + 2.0 * (3.0 * t).cos() - 0.25 * t.sin();
        let s = TrigSeries::interpolate(4, f);
        assert_relative_eq!(s.cos_coefficients()[0], 0.5, epsilon = 1e-14);
        assert_relative_eq!(s.cos_coefficients()[3], 2.0, epsilon = 1e-14);
        assert_relative_eq!(s.sin_coefficients()[0], -0.25, epsilon = 1e-14);
        assert_eq!(s.cos_coefficients()[2], 0.0);
        for i in 0..20 {
            let t = 0.31 * i as f64;
            assert_relative_eq!(s.eval(t), f(t), epsilon = 1e-13);
        }
    }

    #[test]
    fn jet_matches_closed_form_derivatives() {
        let s = TrigSeries::new(vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 0.0, 0.0, 0.5]);
        // f = cos 2t + 0.5 sin 5t
        let t = 0.7;
        let j = s.jet(t);
        assert_relative_eq!(j[0], (2.0 * t).cos() + 0.5 * (5.0 * t).sin(), epsilon = 1e-14);
        assert_relative_eq!(j[1], -2.0 * (2.0 * t).sin() + 2.5 * (5.0 * t).cos(), epsilon = 1e-13);
        assert_relative_eq!(j[2], -4.0 * (2.0 * t).cos() - 12.5 * (5.0 * t).sin(), epsilon = 1e-12);
        assert_relative_eq!(j[3], 8.0 * (2.0 * t).sin() - 62.5 * (5.0 * t).cos(), epsilon = 1e-12);
    }

    #[test]
    fn high_degree_recurrence_stays_accurate() {
        let mut cos = vec![0.0; 61];
        cos[60] = 1.0;
        let s = TrigSeries::new(cos, vec![]);
        for i in 0..50 {
            let t = 0.123 * i as f64;
            assert!((s.eval(t) - (60.0 * t).cos()).abs() < 1e-12);
        }
    }
}
