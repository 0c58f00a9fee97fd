//! Rotation-minimizing normal framing of a closed curve.
//!
//! A normal vector is transported along the curve by double reflection, then
//! rotated at a uniform rate so that the accumulated holonomy is cancelled and
//! the frame closes up. Between transport nodes the frame is evaluated by
//! cubic Hermite interpolation using the transport equation `u' = −(T'·u)T`
//! for the node derivatives.

use super::arclength::{ArcCurve, ArcJet};
use crate::{Error, Result, Vec3};

/// Frame and its arc-length derivatives at one point of the core.
#[derive(Clone, Copy, Debug)]
pub struct FrameJet {
    pub s: f64,
    pub point: Vec3,
    pub tangent: Vec3,
    /// `dT/ds`.
    pub curvature: Vec3,
    /// `d²T/ds²`.
    pub curvature_rate: Vec3,
    pub e1: Vec3,
    pub e2: Vec3,
    /// `de1/ds = −k1·T + twist·e2`.
    pub de1: Vec3,
    /// `k1 = T'·e1`, the normal curvature in the `e1` direction.
    pub k1: f64,
    /// Uniform rotation rate applied to close the frame.
    pub twist: f64,
}

/// One sample of the framing.
#[derive(Clone, Copy, Debug)]
pub struct FrameSample {
    pub s: f64,
    pub tangent: Vec3,
    pub e1: Vec3,
    pub e2: Vec3,
}

/// Periodic rotation-minimizing frame along a closed arc-length curve.
#[derive(Clone, Debug)]
pub struct Frame {
    arc: ArcCurve,
    spacing: f64,
    /// Transported normal at `s_i = i·spacing`, `i = 0..=n` (last one at `s = L`).
    transported: Vec<Vec3>,
    /// `du/ds` at the nodes from the transport equation.
    transported_rate: Vec<Vec3>,
    holonomy: f64,
}

impl Frame {
    pub fn arc(&self) -> &ArcCurve {
        &self.arc
    }

    pub fn length(&self) -> f64 {
        self.arc.length()
    }

    /// Rotation angle of the transported frame after one circuit, in
    /// `(−π, π]`, measured about the tangent at `s = 0`.
    pub fn holonomy(&self) -> f64 {
        self.holonomy
    }

    pub fn node_count(&self) -> usize {
        self.transported.len() - 1
    }

    fn twist(&self) -> f64 {
        -self.holonomy / self.length()
    }

    /// Frame at arc length `s` (taken modulo the length).
    pub fn jet_at(&self, s: f64) -> FrameJet {
        let s = s.rem_euclid(self.length());
        let arc = self.arc.jet_at(s);
        let u = self.interpolated_normal(s, &arc);
        let v = arc.tangent.cross(&u);
        let twist = self.twist();
        let (sin, cos) = (twist * s).sin_cos();
        let e1 = u * cos + v * sin;
        let e2 = arc.tangent.cross(&e1);
        let k1 = arc.curvature.dot(&e1);
        FrameJet {
            s,
            point: arc.point,
            tangent: arc.tangent,
            curvature: arc.curvature,
            curvature_rate: arc.curvature_rate,
            e1,
            e2,
            de1: -arc.tangent * k1 + e2 * twist,
            k1,
            twist,
        }
    }

    fn interpolated_normal(&self, s: f64, arc: &ArcJet) -> Vec3 {
        let n = self.node_count();
        let x = s / self.spacing;
        let i = (x.floor() as usize).min(n - 1);
        let tau = x - i as f64;
        let h = self.spacing;
        let (t2, t3) = (tau * tau, tau * tau * tau);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + tau;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let u = self.transported[i] * h00
            + self.transported_rate[i] * (h10 * h)
            + self.transported[i + 1] * h01
            + self.transported_rate[i + 1] * (h11 * h);
        let u = u - arc.tangent * arc.tangent.dot(&u);
        u.normalize()
    }

    /// `n` samples at uniform arc-length spacing.
    pub fn samples(&self, n: usize) -> Vec<FrameSample> {
        (0..n)
            .map(|i| {
                let j = self.jet_at(self.length() * i as f64 / n as f64);
                FrameSample {
                    s: j.s,
                    tangent: j.tangent,
                    e1: j.e1,
                    e2: j.e2,
                }
            })
            .collect()
    }
}

/// Builds the closed rotation-minimizing frame of an arc-length curve.
pub fn frame_transport(arc: &ArcCurve) -> Result<Frame> {
    let length = arc.length();
    let kappa_max = (0..256)
        .map(|i| arc.jet_at(length * i as f64 / 256.0).curvature.norm())
        .fold(0.0f64, f64::max);
    let per_unit = 512.0 / std::f64::consts::TAU * kappa_max.max(1.0);
    let n = ((per_unit * length).ceil() as usize).clamp(2048, 1 << 17);
    let spacing = length / n as f64;

    let jets: Vec<ArcJet> = (0..=n).map(|i| arc.jet_at(spacing * i as f64)).collect();
    for (i, j) in jets.iter().enumerate() {
        let speed = arc.speed(j.param);
        if speed < 1e-8 {
            return Err(Error::DegenerateTangent { index: i, speed });
        }
    }
    let points: Vec<Vec3> = jets.iter().map(|j| j.point).collect();
    let tangents: Vec<Vec3> = jets.iter().map(|j| j.tangent).collect();
    let u0 = initial_normal(&jets[0]);
    let transported = transport_polyline(&points, &tangents, u0);
    let transported_rate = transported
        .iter()
        .zip(&jets)
        .map(|(u, j)| -j.tangent * j.curvature.dot(u))
        .collect();

    let t0 = tangents[0];
    let u_end = transported[n];
    let holonomy = t0.dot(&u0.cross(&u_end)).atan2(u0.dot(&u_end));

    Ok(Frame {
        arc: arc.clone(),
        spacing,
        transported,
        transported_rate,
        holonomy,
    })
}

/// Outward principal normal where the curve bends, else any unit normal.
fn initial_normal(jet: &ArcJet) -> Vec3 {
    let k = jet.curvature.norm();
    if k > 1e-6 {
        return -jet.curvature / k;
    }
    let t = jet.tangent;
    let axis = if t.x.abs() <= t.y.abs() && t.x.abs() <= t.z.abs() {
        Vec3::x()
    } else if t.y.abs() <= t.z.abs() {
        Vec3::y()
    } else {
        Vec3::z()
    };
    (axis - t * t.dot(&axis)).normalize()
}

/// Double-reflection transport of `u0` along sampled points with unit
/// tangents; works for open polylines as well.
pub(crate) fn transport_polyline(points: &[Vec3], tangents: &[Vec3], u0: Vec3) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(points.len());
    let mut r = u0;
    out.push(r);
    for i in 0..points.len() - 1 {
        let v1 = points[i + 1] - points[i];
        let c1 = v1.dot(&v1);
        if c1 == 0.0 {
            out.push(r);
            continue;
        }
        let r_l = r - v1 * (2.0 / c1 * v1.dot(&r));
        let t_l = tangents[i] - v1 * (2.0 / c1 * v1.dot(&tangents[i]));
        let v2 = tangents[i + 1] - t_l;
        let c2 = v2.dot(&v2);
        r = if c2 > 0.0 {
            r_l - v2 * (2.0 / c2 * v2.dot(&r_l))
        } else {
            r_l
        };
        out.push(r);
    }
    out
}
