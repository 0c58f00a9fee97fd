//! Filtered spectral march of `⋆dβ = λβ` off a strip.
//!
//! In coordinates `(ρ, ξ¹, ξ²) = (ρ, z, θ)` with metric `dρ² + h_ij dξ^i dξ^j`
//! and `β = χ dρ + a_z dz + a_θ dθ`, the `dρ` component of the equation is a
//! constraint and the tangential ones are evolution equations:
//!
//! ```text
//! χ      = (∂_z a_θ − ∂_θ a_z) / (λ |h|^{1/2})
//! ∂_ρ a  = ∂_ξ χ − h (−λ a_θ, λ a_z)ᵀ / |h|^{1/2}
//! ```
//!
//! `θ` is periodic and differentiated spectrally; `z` uses fourth-order
//! differences. The march is a Cauchy problem for an elliptic system, so
//! high `θ`-modes grow like `e^{|m|ρ}`: every step applies a hard cutoff at
//! `M_max` and an exponential filter.

use crate::dynamics::VectorField;
use crate::geometry::{TubeChart, TubeCoords};
use crate::{Error, Exec, Result, Vec3};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;
use std::f64::consts::TAU;
use std::sync::Arc;

/// `h_ij` on a level, in `(z, θ)` order, with `|h|^{1/2}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelMetric {
    pub h: [[f64; 2]; 2],
    pub sqrt_det: f64,
}

impl LevelMetric {
    pub fn new(h: [[f64; 2]; 2]) -> Self {
        LevelMetric {
            h,
            sqrt_det: (h[0][0] * h[1][1] - h[0][1] * h[1][0]).sqrt(),
        }
    }

    /// `h^{ij} a_j`.
    pub fn raise(&self, a: [f64; 2]) -> [f64; 2] {
        let [[p, q], [_, r]] = self.h;
        let det = self.sqrt_det * self.sqrt_det;
        [(r * a[0] - q * a[1]) / det, (p * a[1] - q * a[0]) / det]
    }
}

/// Geometry seen by the marcher.
pub trait MarchGeometry: Sync {
    /// Period of `θ`.
    fn period(&self) -> f64;
    fn half_width(&self) -> f64;
    fn metric(&self, rho: f64, z: f64, theta: f64) -> LevelMetric;
}

/// Euclidean half-space `ρ > 0` over a periodic `(z, θ)` strip.
#[derive(Clone, Copy, Debug)]
pub struct FlatGeometry {
    pub period: f64,
    pub half_width: f64,
}

impl MarchGeometry for FlatGeometry {
    fn period(&self) -> f64 {
        self.period
    }

    fn half_width(&self) -> f64 {
        self.half_width
    }

    fn metric(&self, _: f64, _: f64, _: f64) -> LevelMetric {
        LevelMetric::new([[1.0, 0.0], [0.0, 1.0]])
    }
}

/// The metric of a tube chart, `h_ij = ⟨∂_i X, ∂_j X⟩`.
pub struct TubeGeometry<'a> {
    pub chart: &'a TubeChart,
}

impl MarchGeometry for TubeGeometry<'_> {
    fn period(&self) -> f64 {
        self.chart.length()
    }

    fn half_width(&self) -> f64 {
        self.chart.half_width()
    }

    fn metric(&self, rho: f64, z: f64, theta: f64) -> LevelMetric {
        let [_, xz, xt] = self.chart.coordinate_basis(TubeCoords::new(rho, z, theta));
        LevelMetric::new([[xz.dot(&xz), xz.dot(&xt)], [xz.dot(&xt), xt.dot(&xt)]])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MarchConfig {
    pub theta_nodes: usize,
    pub z_nodes: usize,
    /// Highest retained `θ`-mode.
    pub m_max: usize,
    /// Filter `exp(−strength (m/M_max)^order)`.
    pub filter_strength: f64,
    pub filter_order: i32,
    /// Largest allowed ratio of level max-norms across one step.
    pub growth_cap: f64,
    /// `ρ_max` as a fraction of the tube radius.
    pub rho_max_fraction: f64,
    pub steps: usize,
}

impl Default for MarchConfig {
    fn default() -> Self {
        MarchConfig {
            theta_nodes: 128,
            z_nodes: 33,
            m_max: 32,
            filter_strength: 36.0,
            filter_order: 36,
            growth_cap: 10.0,
            rho_max_fraction: 0.1,
            steps: 50,
        }
    }
}

/// Form components on one `ρ`-level, stored row-major as `[z][θ]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FormLevel {
    pub rho: f64,
    pub a_z: Vec<f64>,
    pub a_theta: Vec<f64>,
    pub chi: Vec<f64>,
}

impl FormLevel {
    pub fn max_norm(&self) -> f64 {
        self.a_z
            .iter()
            .chain(&self.a_theta)
            .chain(&self.chi)
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

pub struct Marcher<'g, G: MarchGeometry + ?Sized> {
    geometry: &'g G,
    lambda: f64,
    config: MarchConfig,
    z: Vec<f64>,
    theta: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    exec: Exec,
}

/// Fourth-order first derivative on a uniform grid, one-sided at the ends.
fn d_fourth(f: &[f64], h: f64, out: &mut [f64]) {
    let n = f.len();
    let c = 1.0 / (12.0 * h);
    for j in 0..n {
        out[j] = c * match j {
            0 => -25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4],
            1 => -3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4],
            _ if j == n - 2 => 3.0 * f[n - 1] + 10.0 * f[n - 2] - 18.0 * f[n - 3] + 6.0 * f[n - 4] - f[n - 5],
            _ if j == n - 1 => {
                25.0 * f[n - 1] - 48.0 * f[n - 2] + 36.0 * f[n - 3] - 16.0 * f[n - 4] + 3.0 * f[n - 5]
            }
            _ => -f[j + 2] + 8.0 * f[j + 1] - 8.0 * f[j - 1] + f[j - 2],
        };
    }
}

impl<'g, G: MarchGeometry + ?Sized> Marcher<'g, G> {
    pub fn new(geometry: &'g G, lambda: f64, config: MarchConfig, exec: Exec) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidLambda(lambda));
        }
        if config.z_nodes < 5 {
            return Err(Error::InvalidParameter(format!("marcher needs at least 5 z nodes (got {})", config.z_nodes)));
        }
        if config.theta_nodes < 2 * config.m_max + 1 {
            return Err(Error::InvalidParameter(format!(
                "{} theta nodes cannot carry {} modes",
                config.theta_nodes, config.m_max
            )));
        }
        let (nz, nt) = (config.z_nodes, config.theta_nodes);
        let w = geometry.half_width();
        let z = (0..nz).map(|j| -w + 2.0 * w * j as f64 / (nz - 1) as f64).collect();
        let theta = (0..nt).map(|k| geometry.period() * k as f64 / nt as f64).collect();
        let mut planner = FftPlanner::new();
        Ok(Marcher {
            geometry,
            lambda,
            config,
            z,
            theta,
            forward: planner.plan_fft_forward(nt),
            inverse: planner.plan_fft_inverse(nt),
            exec,
        })
    }

    pub fn z_nodes(&self) -> &[f64] {
        &self.z
    }

    pub fn theta_nodes(&self) -> &[f64] {
        &self.theta
    }

    pub fn config(&self) -> &MarchConfig {
        &self.config
    }

    pub fn rho_max(&self, tube_radius: f64) -> f64 {
        self.config.rho_max_fraction * tube_radius
    }

    fn index(&self, j: usize, k: usize) -> usize {
        j * self.config.theta_nodes + k
    }

    pub fn metric_level(&self, rho: f64) -> Vec<LevelMetric> {
        let nt = self.config.theta_nodes;
        self.exec
            .map(self.z.len() * nt, |i| self.geometry.metric(rho, self.z[i / nt], self.theta[i % nt]))
    }

    /// Level with `a(z, θ)` given pointwise and `χ` from the constraint.
    pub fn level_from(&self, rho: f64, f: impl Fn(f64, f64) -> (f64, f64)) -> FormLevel {
        let n = self.z.len() * self.theta.len();
        let (mut a_z, mut a_theta) = (vec![0.0; n], vec![0.0; n]);
        for (j, &z) in self.z.iter().enumerate() {
            for (k, &t) in self.theta.iter().enumerate() {
                let (u, v) = f(z, t);
                a_z[self.index(j, k)] = u;
                a_theta[self.index(j, k)] = v;
            }
        }
        let chi = self.chi(&a_z, &a_theta, &self.metric_level(rho));
        FormLevel { rho, a_z, a_theta, chi }
    }

    /// The Cauchy data `a_z = −z`, `a_θ = 1` on the strip.
    pub fn cauchy_level(&self) -> FormLevel {
        self.level_from(0.0, |z, _| (-z, 1.0))
    }

    /// Spectral `θ`-derivative, truncated at `M_max`.
    fn d_theta(&self, f: &[f64]) -> Vec<f64> {
        self.spectral(f, |m| {
            let k = TAU * m as f64 / self.geometry.period();
            Complex64::new(0.0, k)
        })
    }

    /// Applies a mode multiplier row by row; modes above `M_max` are dropped.
    fn spectral(&self, f: &[f64], mult: impl Fn(i64) -> Complex64) -> Vec<f64> {
        let nt = self.config.theta_nodes;
        let mut out = vec![0.0; f.len()];
        let mut buf = vec![Complex64::new(0.0, 0.0); nt];
        let scale = 1.0 / nt as f64;
        for (row, dst) in f.chunks(nt).zip(out.chunks_mut(nt)) {
            for (b, v) in buf.iter_mut().zip(row) {
                *b = Complex64::new(*v, 0.0);
            }
            self.forward.process(&mut buf);
            for (i, b) in buf.iter_mut().enumerate() {
                let m = if i <= nt / 2 { i as i64 } else { i as i64 - nt as i64 };
                let keep = m.unsigned_abs() as usize <= self.config.m_max && !(nt.is_multiple_of(2) && i == nt / 2);
                *b = if keep { *b * mult(m) * scale } else { Complex64::new(0.0, 0.0) };
            }
            self.inverse.process(&mut buf);
            for (d, b) in dst.iter_mut().zip(&buf) {
                *d = b.re;
            }
        }
        out
    }

    fn filter(&self, f: &[f64]) -> Vec<f64> {
        let (s, p, m_max) = (self.config.filter_strength, self.config.filter_order, self.config.m_max as f64);
        self.spectral(f, |m| Complex64::new((-s * (m.abs() as f64 / m_max).powi(p)).exp(), 0.0))
    }

    fn d_z(&self, f: &[f64]) -> Vec<f64> {
        let (nz, nt) = (self.z.len(), self.config.theta_nodes);
        let h = self.z[1] - self.z[0];
        let mut out = vec![0.0; f.len()];
        let mut col = vec![0.0; nz];
        let mut d = vec![0.0; nz];
        for k in 0..nt {
            for j in 0..nz {
                col[j] = f[j * nt + k];
            }
            d_fourth(&col, h, &mut d);
            for j in 0..nz {
                out[j * nt + k] = d[j];
            }
        }
        out
    }

    /// `χ = (∂_z a_θ − ∂_θ a_z) / (λ |h|^{1/2})`.
    pub fn chi(&self, a_z: &[f64], a_theta: &[f64], metric: &[LevelMetric]) -> Vec<f64> {
        let curl = self.d_z(a_theta);
        let dt = self.d_theta(a_z);
        (0..a_z.len())
            .map(|i| (curl[i] - dt[i]) / (self.lambda * metric[i].sqrt_det))
            .collect()
    }

    /// `∂_ρ (a_z, a_θ)`.
    fn rhs(&self, a_z: &[f64], a_theta: &[f64], metric: &[LevelMetric]) -> (Vec<f64>, Vec<f64>) {
        let chi = self.chi(a_z, a_theta, metric);
        let (dz_chi, dt_chi) = (self.d_z(&chi), self.d_theta(&chi));
        let l = self.lambda;
        let n = a_z.len();
        let (mut fz, mut ft) = (vec![0.0; n], vec![0.0; n]);
        for i in 0..n {
            let m = &metric[i];
            let (p, q) = (-l * a_theta[i], l * a_z[i]);
            fz[i] = dz_chi[i] - (m.h[0][0] * p + m.h[0][1] * q) / m.sqrt_det;
            ft[i] = dt_chi[i] - (m.h[1][0] * p + m.h[1][1] * q) / m.sqrt_det;
        }
        (fz, ft)
    }

    /// One classical Runge–Kutta step of size `dρ`, then filtering.
    pub fn rho_step(&self, level: &FormLevel, d_rho: f64, rho_max: f64) -> Result<FormLevel> {
        let rho = level.rho;
        if (rho + d_rho).abs() > rho_max * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "march to rho = {} exceeds rho_max = {rho_max}",
                rho + d_rho
            )));
        }
        if d_rho == 0.0 {
            return Ok(level.clone());
        }
        let m0 = self.metric_level(rho);
        let mh = self.metric_level(rho + 0.5 * d_rho);
        let m1 = self.metric_level(rho + d_rho);
        let axpy = |y: &[f64], k: &[f64], c: f64| -> Vec<f64> { y.iter().zip(k).map(|(a, b)| a + c * b).collect() };
        let (y_z, y_t) = (&level.a_z, &level.a_theta);
        let (k1z, k1t) = self.rhs(y_z, y_t, &m0);
        let (k2z, k2t) = self.rhs(&axpy(y_z, &k1z, 0.5 * d_rho), &axpy(y_t, &k1t, 0.5 * d_rho), &mh);
        let (k3z, k3t) = self.rhs(&axpy(y_z, &k2z, 0.5 * d_rho), &axpy(y_t, &k2t, 0.5 * d_rho), &mh);
        let (k4z, k4t) = self.rhs(&axpy(y_z, &k3z, d_rho), &axpy(y_t, &k3t, d_rho), &m1);
        let combine = |y: &[f64], a: &[f64], b: &[f64], c: &[f64], d: &[f64]| -> Vec<f64> {
            (0..y.len())
                .map(|i| y[i] + d_rho / 6.0 * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]))
                .collect()
        };
        let a_z = self.filter(&combine(y_z, &k1z, &k2z, &k3z, &k4z));
        let a_theta = self.filter(&combine(y_t, &k1t, &k2t, &k3t, &k4t));
        let chi = self.chi(&a_z, &a_theta, &m1);
        let next = FormLevel {
            rho: rho + d_rho,
            a_z,
            a_theta,
            chi,
        };
        let growth = next.max_norm() / level.max_norm().max(f64::MIN_POSITIVE);
        if !(growth <= self.config.growth_cap) {
            return Err(Error::MarchGrowth { rho: next.rho, growth });
        }
        Ok(next)
    }

    /// Marches `steps` equal steps from `start` to `rho_end`, returning every
    /// level including the first.
    pub fn march(&self, start: FormLevel, rho_end: f64, steps: usize, rho_max: f64) -> Result<Vec<FormLevel>> {
        let d = (rho_end - start.rho) / steps.max(1) as f64;
        let mut levels = vec![start];
        for i in 0..steps {
            let mut next = self.rho_step(levels.last().expect("non-empty"), d, rho_max)?;
            // Land exactly on the requested end point.
            if i + 1 == steps {
                next.rho = rho_end;
            }
            levels.push(next);
        }
        Ok(levels)
    }

    /// Range of `z` indices in the trusted inner 80%.
    pub fn trusted_z(&self) -> std::ops::Range<usize> {
        let nz = self.z.len();
        let cut = ((nz - 1) as f64 * 0.1).ceil() as usize;
        cut..nz - cut
    }

    /// `max |div v|` over the trusted region, for every level that has both
    /// neighbours, computed as `|h|^{-1/2} ∂_μ(|h|^{1/2} v^μ)` with
    /// `v^ρ = χ`, `v^i = h^{ij} a_j`.
    pub fn divergence_residual(&self, levels: &[FormLevel]) -> Vec<(f64, f64)> {
        if levels.len() < 3 {
            return Vec::new();
        }
        let metrics: Vec<Vec<LevelMetric>> = levels.iter().map(|l| self.metric_level(l.rho)).collect();
        let flux_rho: Vec<Vec<f64>> = levels
            .iter()
            .zip(&metrics)
            .map(|(l, m)| l.chi.iter().zip(m).map(|(c, g)| c * g.sqrt_det).collect())
            .collect();
        let nt = self.config.theta_nodes;
        (1..levels.len() - 1)
            .map(|s| {
                let (l, m) = (&levels[s], &metrics[s]);
                let n = l.a_z.len();
                let (mut fz, mut ft) = (vec![0.0; n], vec![0.0; n]);
                for i in 0..n {
                    let v = m[i].raise([l.a_z[i], l.a_theta[i]]);
                    fz[i] = m[i].sqrt_det * v[0];
                    ft[i] = m[i].sqrt_det * v[1];
                }
                let (dz, dt) = (self.d_z(&fz), self.d_theta(&ft));
                let h = levels[s + 1].rho - levels[s - 1].rho;
                let mut worst = 0.0f64;
                for j in self.trusted_z() {
                    for k in 0..nt {
                        let i = j * nt + k;
                        let d_rho = (flux_rho[s + 1][i] - flux_rho[s - 1][i]) / h;
                        worst = worst.max(((d_rho + dz[i] + dt[i]) / m[i].sqrt_det).abs());
                    }
                }
                (l.rho, worst)
            })
            .collect()
    }

    /// Residual of the two tangential components of `⋆dβ − λβ` at the
    /// midpoint of each step, from central differences in `ρ`.
    pub fn equation_residual(&self, levels: &[FormLevel]) -> f64 {
        let nt = self.config.theta_nodes;
        let mut worst = 0.0f64;
        for w in levels.windows(2) {
            let h = w[1].rho - w[0].rho;
            if h == 0.0 {
                continue;
            }
            let mid = 0.5 * (w[0].rho + w[1].rho);
            let metric = self.metric_level(mid);
            let avg = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect() };
            let a_z = avg(&w[0].a_z, &w[1].a_z);
            let a_t = avg(&w[0].a_theta, &w[1].a_theta);
            let (fz, ft) = self.rhs(&a_z, &a_t, &metric);
            for j in self.trusted_z() {
                for k in 0..nt {
                    let i = j * nt + k;
                    let dz = (w[1].a_z[i] - w[0].a_z[i]) / h;
                    let dt = (w[1].a_theta[i] - w[0].a_theta[i]) / h;
                    worst = worst.max((dz - fz[i]).abs()).max((dt - ft[i]).abs());
                }
            }
        }
        worst
    }
}

/// Marched field in Cartesian form on one level: points and vectors
/// `v = χ ∂_ρX + h^{ij} a_j ∂_iX`, row-major `[z][θ]`.
pub fn to_cartesian(chart: &TubeChart, marcher: &Marcher<'_, TubeGeometry<'_>>, level: &FormLevel) -> Vec<(Vec3, Vec3)> {
    let nt = marcher.theta_nodes().len();
    marcher.exec.map(level.a_z.len(), |i| {
        let q = TubeCoords::new(level.rho, marcher.z[i / nt], marcher.theta[i % nt]);
        let [xr, xz, xt] = chart.coordinate_basis(q);
        let g = marcher.geometry.metric(q.rho, q.z, q.theta);
        let b = g.raise([level.a_z[i], level.a_theta[i]]);
        (chart.from_tube_coords(q), xr * level.chi[i] + xz * b[0] + xt * b[1])
    })
}

/// C⁰ and C¹ distances between the marched field and another field over the
/// marched levels, restricted to the trusted `z`-range.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Closeness {
    pub rho_max: f64,
    pub c0: f64,
    /// Largest coordinate derivative of the difference in `z`, `θ` or `ρ`.
    pub c1: f64,
}

pub fn compare_with_field<F: VectorField + ?Sized>(
    chart: &TubeChart,
    marcher: &Marcher<'_, TubeGeometry<'_>>,
    levels: &[FormLevel],
    field: &F,
) -> Closeness {
    let nt = marcher.theta_nodes().len();
    let diffs: Vec<Vec<Vec3>> = levels
        .iter()
        .map(|l| {
            to_cartesian(chart, marcher, l)
                .into_iter()
                .map(|(x, v)| v - field.eval(&x))
                .collect()
        })
        .collect();
    let hz = marcher.z[1] - marcher.z[0];
    let ht = marcher.theta[1] - marcher.theta[0];
    let mut out = Closeness {
        rho_max: levels.iter().fold(0.0f64, |m, l| m.max(l.rho.abs())),
        c0: 0.0,
        c1: 0.0,
    };
    let nz = marcher.z.len();
    for (s, d) in diffs.iter().enumerate() {
        for j in marcher.trusted_z() {
            for k in 0..nt {
                let i = j * nt + k;
                out.c0 = out.c0.max(d[i].norm());
                let at = |jj: usize, kk: usize| d[jj * nt + (kk % nt)];
                let dz = if j > 0 && j + 1 < nz {
                    (at(j + 1, k) - at(j - 1, k)) / (2.0 * hz)
                } else {
                    Vec3::zeros()
                };
                let dt = (at(j, k + 1) - at(j, k + nt - 1)) / (2.0 * ht);
                let dr = if s > 0 && s + 1 < diffs.len() {
                    (diffs[s + 1][i] - diffs[s - 1][i]) / (levels[s + 1].rho - levels[s - 1].rho)
                } else {
                    Vec3::zeros()
                };
                out.c1 = out.c1.max(dz.norm()).max(dt.norm()).max(dr.norm());
            }
        }
    }
    out
}

/// Writes `(ρ, z, θ, a_z, a_θ, χ)` for every node of every level.
pub fn write_levels<W: std::io::Write, G: MarchGeometry + ?Sized>(
    out: W,
    marcher: &Marcher<'_, G>,
    levels: &[FormLevel],
) -> std::io::Result<()> {
    let nt = marcher.theta_nodes().len();
    let rows = levels.iter().flat_map(|l| {
        (0..l.a_z.len()).map(move |i| {
            vec![l.rho, marcher.z[i / nt], marcher.theta[i % nt], l.a_z[i], l.a_theta[i], l.chi[i]]
        })
    });
    crate::io::write_table(out, &["rho", "z", "theta", "a_z", "a_theta", "chi"], rows)
}
