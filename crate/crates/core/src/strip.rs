//! Cauchy data `w = ∇θ − z∇z` on the ruled strip through a link component.
//!
//! On the strip `S(s, t) = c(s) + t·e1(s)` the induced metric is diagonal,
//! `h_ss = |∂_s S|²`, `h_st = 0`, `h_tt = 1`, so with `g = 1/h_ss`
//!
//! ```text
//! w = ∂_s S / h_ss − t·e1,          j*(w) = g ∂_θ − z ∂_z.
//! ```
//!
//! The pulled-back form `dθ − z dz` is closed, the core `t = 0` is an orbit
//! with unit speed, and `z²` is a Lyapunov function, so the core is a stable
//! limit cycle of `j*(w)` with multiplier `e^{−|L|}`.

use crate::exec::Exec;
use crate::geometry::{FrameJet, TubeChart};
use crate::{Error, Result, Vec3};

/// Induced strip metric at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StripMetric {
    pub h_ss: f64,
    pub h_st: f64,
    pub h_tt: f64,
}

impl StripMetric {
    /// `g = h(∇̄θ, ∇̄θ) = 1/h_ss`.
    pub fn g(&self) -> f64 {
        1.0 / self.h_ss
    }

    pub fn det(&self) -> f64 {
        self.h_ss * self.h_tt - self.h_st * self.h_st
    }
}

/// Metric of the strip at arc length `s` and ruling offset `t`.
pub fn strip_metric(chart: &TubeChart, s: f64, t: f64) -> StripMetric {
    metric_from_jet(&chart.core_jet(s), t)
}

fn metric_from_jet(j: &FrameJet, t: f64) -> StripMetric {
    let a = 1.0 - t * j.k1;
    let b = t * j.twist;
    StripMetric {
        h_ss: a * a + b * b,
        h_st: 0.0,
        h_tt: 1.0,
    }
}

/// The Cauchy field `w(s, t)` as an ambient vector.
pub fn cauchy_field(chart: &TubeChart, s: f64, t: f64) -> Vec3 {
    let j = chart.core_jet(s);
    let d_s = j.tangent + j.de1 * t;
    let h_ss = d_s.norm_squared();
    d_s / h_ss - j.e1 * t
}

/// Grid spacing policy for Cauchy data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StripGrid {
    /// Nodes along `s` per `2π` of arc length.
    pub nodes_per_2pi: usize,
    /// Nodes across the strip, including both edges.
    pub t_nodes: usize,
}

impl Default for StripGrid {
    fn default() -> Self {
        StripGrid {
            nodes_per_2pi: 256,
            t_nodes: 33,
        }
    }
}

impl StripGrid {
    pub fn s_nodes(&self, length: f64) -> usize {
        ((self.nodes_per_2pi as f64 * length / std::f64::consts::TAU).ceil() as usize).max(8)
    }
}

/// One node of the Cauchy data grid.
#[derive(Clone, Copy, Debug)]
pub struct CauchyNode {
    pub s: f64,
    pub t: f64,
    pub point: Vec3,
    pub w: Vec3,
    /// Unit strip normal.
    pub normal: Vec3,
    /// `∂S/∂s`.
    pub d_s: Vec3,
    /// `∂S/∂t = e1`.
    pub d_t: Vec3,
    /// `∂w/∂s` and `∂w/∂t` by central differences.
    pub dw_ds: Vec3,
    pub dw_dt: Vec3,
    pub metric: StripMetric,
}

/// Samples of `w` on a strip, row-major in `s` then `t`.
#[derive(Clone, Debug)]
pub struct CauchyData {
    pub component: usize,
    pub length: f64,
    pub half_width: f64,
    pub s_nodes: usize,
    pub t_nodes: usize,
    pub nodes: Vec<CauchyNode>,
}

impl CauchyData {
    pub fn build(chart: &TubeChart, grid: StripGrid, exec: Exec) -> Result<Self> {
        if grid.t_nodes < 3 {
            return Err(Error::InvalidParameter(format!(
                "strip grid needs at least 3 nodes across (got {})",
                grid.t_nodes
            )));
        }
        let length = chart.length();
        let w = chart.half_width();
        let ns = grid.s_nodes(length);
        let nt = grid.t_nodes;
        let nodes = exec.map(ns * nt, |idx| {
            let (i, k) = (idx / nt, idx % nt);
            let s = length * i as f64 / ns as f64;
            let t = -w + 2.0 * w * k as f64 / (nt - 1) as f64;
            let (d_s, d_t) = chart.strip_tangents(s, t);
            let h = 1e-5;
            let dw_ds = (cauchy_field(chart, s + h, t) - cauchy_field(chart, s - h, t)) / (2.0 * h);
            let dw_dt = (cauchy_field(chart, s, t + h) - cauchy_field(chart, s, t - h)) / (2.0 * h);
            CauchyNode {
                s,
                t,
                point: chart.strip_point(s, t),
                w: cauchy_field(chart, s, t),
                normal: chart.strip_normal(s, t),
                d_s,
                d_t,
                dw_ds,
                dw_dt,
                metric: strip_metric(chart, s, t),
            }
        });
        Ok(CauchyData {
            component: chart.component(),
            length,
            half_width: w,
            s_nodes: ns,
            t_nodes: nt,
            nodes,
        })
    }

    pub fn node(&self, i: usize, k: usize) -> &CauchyNode {
        &self.nodes[i * self.t_nodes + k]
    }

    /// Largest `|⟨w, n_Σ⟩|` over the grid.
    pub fn max_normal_component(&self) -> f64 {
        self.nodes
            .iter()
            .map(|n| n.w.dot(&n.normal).abs())
            .fold(0.0, f64::max)
    }

    /// Pulled-back components `(γ_s, γ_t) = (⟨w, ∂_s S⟩, ⟨w, ∂_t S⟩)` per node.
    pub fn pulled_back_form(&self) -> Vec<(f64, f64)> {
        self.nodes
            .iter()
            .map(|n| (n.w.dot(&n.d_s), n.w.dot(&n.d_t)))
            .collect()
    }

    /// Delimited text dump `s,t,x,y,z,wx,wy,wz` for plotting.
    pub fn write_table<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "s,t,x,y,z,wx,wy,wz")?;
        for n in &self.nodes {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                n.s, n.t, n.point.x, n.point.y, n.point.z, n.w.x, n.w.y, n.w.z
            )?;
        }
        Ok(())
    }
}

/// Lyapunov rate `⟨w, ∇̄(z²)⟩ = 2t·⟨w, e1⟩` on the strip.
pub fn lyapunov_rate(chart: &TubeChart, s: f64, t: f64) -> f64 {
    let (_, e1) = chart.strip_tangents(s, t);
    2.0 * t * cauchy_field(chart, s, t).dot(&e1)
}

/// Largest `|∂_s γ_t − ∂_t γ_s|` of a 1-form sampled on a periodic-in-`s`
/// grid, using second-order differences (one-sided at the strip edges).
pub fn closedness_residual(
    s_nodes: usize,
    t_nodes: usize,
    ds: f64,
    dt: f64,
    form: &[(f64, f64)],
) -> f64 {
    let at = |i: usize, k: usize| form[(i % s_nodes) * t_nodes + k];
    let mut worst = 0.0f64;
    for i in 0..s_nodes {
        for k in 0..t_nodes {
            let d_s_gt = (at(i + 1, k).1 - at(i + s_nodes - 1, k).1) / (2.0 * ds);
            let d_t_gs = if k == 0 {
                (-3.0 * at(i, 0).0 + 4.0 * at(i, 1).0 - at(i, 2).0) / (2.0 * dt)
            } else if k == t_nodes - 1 {
                (3.0 * at(i, k).0 - 4.0 * at(i, k - 1).0 + at(i, k - 2).0) / (2.0 * dt)
            } else {
                (at(i, k + 1).0 - at(i, k - 1).0) / (2.0 * dt)
            };
            worst = worst.max((d_s_gt - d_t_gs).abs());
        }
    }
    worst
}

/// Verifies that the Cauchy data pull back to a closed form on the strip.
pub fn closedness_check(data: &CauchyData) -> Result<f64> {
    const TOLERANCE: f64 = 1e-8;
    let ds = data.length / data.s_nodes as f64;
    let dt = 2.0 * data.half_width / (data.t_nodes - 1) as f64;
    let residual = closedness_residual(
        data.s_nodes,
        data.t_nodes,
        ds,
        dt,
        &data.pulled_back_form(),
    );
    if residual > TOLERANCE {
        return Err(Error::NotClosed {
            residual,
            tolerance: TOLERANCE,
        });
    }
    Ok(residual)
}

/// Result of the on-strip linearization around the core.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StripMonodromy {
    /// Nontrivial multiplier of the core cycle of `j*(w)`.
    pub multiplier: f64,
    /// Eigenvalue along the flow (should be 1).
    pub flow_multiplier: f64,
    /// `exp ∫ (∂_θ g − 1)` along the core (Liouville).
    pub liouville: f64,
    /// Period of the core orbit.
    pub period: f64,
    /// Richardson estimate of the integration error in `multiplier`.
    pub error_estimate: f64,
}

/// Integrates the variational equation of `j*(w) = g ∂_θ − z ∂_z` along the
/// core `(θ, z) = (τ, 0)` over one period and returns its multipliers.
pub fn strip_monodromy(chart: &TubeChart) -> Result<StripMonodromy> {
    let length = chart.length();
    // Fine RK4 steps need the Jacobian at half steps; the coarse pass reuses
    // every other node.
    let steps = ((length / std::f64::consts::TAU) * 400.0).ceil() as usize;
    let nodes = 4 * steps;
    let spacing = length / nodes as f64;
    let h = 1e-5;
    let jets: Vec<_> = (0..nodes).map(|i| chart.core_jet(spacing * i as f64)).collect();
    let g = |j: &FrameJet, z: f64| metric_from_jet(j, z).g();
    let table: Vec<[[f64; 2]; 2]> = (0..=nodes)
        .map(|i| {
            let (prev, here, next) = (&jets[(i + nodes - 1) % nodes], &jets[i % nodes], &jets[(i + 1) % nodes]);
            let g_theta = (g(next, 0.0) - g(prev, 0.0)) / (2.0 * spacing);
            let g_z = (g(here, h) - g(here, -h)) / (2.0 * h);
            [[g_theta, g_z], [0.0, -1.0]]
        })
        .collect();
    let coarse = integrate_variational(&table, length, 2);
    let fine = integrate_variational(&table, length, 1);
    let eig = |m: [[f64; 2]; 2]| {
        let tr = m[0][0] + m[1][1];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
        let (a, b) = (0.5 * tr + disc, 0.5 * tr - disc);
        // Flow direction carries the eigenvalue nearest 1.
        if (a - 1.0).abs() <= (b - 1.0).abs() {
            (a, b)
        } else {
            (b, a)
        }
    };
    let (flow, mu) = eig(fine.0);
    let (_, mu_coarse) = eig(coarse.0);
    // RK4: error of the fine solution ≈ (coarse − fine)/15.
    let error_estimate = (mu - mu_coarse).abs() / 15.0;
    if error_estimate > 1e-9 {
        return Err(Error::MonodromyTolerance {
            estimate: error_estimate,
        });
    }
    Ok(StripMonodromy {
        multiplier: mu,
        flow_multiplier: flow,
        liouville: fine.1.exp(),
        period: length,
        error_estimate,
    })
}

/// RK4 for `Y' = J(τ)Y`, `Y(0) = I`, alongside `∫ tr J`.
fn integrate_variational(table: &[[[f64; 2]; 2]], period: f64, stride: usize) -> ([[f64; 2]; 2], f64) {
    let steps = (table.len() - 1) / (2 * stride);
    let dt = period / steps as f64;
    let mul = |j: [[f64; 2]; 2], y: [[f64; 2]; 2]| {
        let mut r = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                r[a][b] = j[a][0] * y[0][b] + j[a][1] * y[1][b];
            }
        }
        r
    };
    let axpy = |y: [[f64; 2]; 2], k: [[f64; 2]; 2], c: f64| {
        let mut r = y;
        for a in 0..2 {
            for b in 0..2 {
                r[a][b] += c * k[a][b];
            }
        }
        r
    };
    let mut y = [[1.0, 0.0], [0.0, 1.0]];
    let mut trace_integral = 0.0;
    for n in 0..steps {
        let at = |k: usize| table[(2 * n + k) * stride];
        let (j0, jm, j1) = (at(0), at(1), at(2));
        let k1 = mul(j0, y);
        let k2 = mul(jm, axpy(y, k1, 0.5 * dt));
        let k3 = mul(jm, axpy(y, k2, 0.5 * dt));
        let k4 = mul(j1, axpy(y, k3, dt));
        for a in 0..2 {
            for b in 0..2 {
                y[a][b] += dt / 6.0 * (k1[a][b] + 2.0 * k2[a][b] + 2.0 * k3[a][b] + k4[a][b]);
            }
        }
        let tr = |j: [[f64; 2]; 2]| j[0][0] + j[1][1];
        trace_integral += dt / 6.0 * (tr(j0) + 4.0 * tr(jm) + tr(j1));
    }
    (y, trace_integral)
}
