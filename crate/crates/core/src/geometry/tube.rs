//! Tube charts with adapted coordinates `(ρ, z, θ)`.
//!
//! The strip through a component is the ruled surface
//! `S(θ, z) = c(θ) + z·e1(θ)` swept by the rotation-minimizing normal. Its
//! rulings are straight unit-speed lines orthogonal to the core, so `z` is the
//! in-strip distance to the core and `θ` the arc length along it. The chart
//! extends these along strip normals: `X(ρ, z, θ) = S(θ, z) + ρ·n(θ, z)`.

use super::frame::{Frame, FrameJet};
use super::{component_distance, LinkComponent, LinkSpec};
use crate::{Error, Result, Vec3};

/// Adapted coordinates of a point near a link component.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TubeCoords {
    /// Signed distance to the strip.
    pub rho: f64,
    /// Signed in-strip distance to the core.
    pub z: f64,
    /// Arc length along the core, in `[0, |L|)`.
    pub theta: f64,
}

impl TubeCoords {
    pub fn new(rho: f64, z: f64, theta: f64) -> Self {
        TubeCoords { rho, z, theta }
    }
}

/// Tube-size policy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TubeConfig {
    /// Fraction of the admissible radius actually used, in `(0, 1)`.
    pub safety: f64,
    /// Strip half-width as a fraction of the tube radius, in `(0, 1]`.
    pub half_width_fraction: f64,
}

impl Default for TubeConfig {
    fn default() -> Self {
        TubeConfig {
            safety: 0.5,
            half_width_fraction: 0.5,
        }
    }
}

/// Radius chosen for one component's tube.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TubeSizing {
    /// Tube radius `r_a` (bound on `|ρ|`).
    pub radius: f64,
    /// Strip half-width (bound on `|z|`).
    pub half_width: f64,
    /// Radius below which nearest-point projection onto the core is unique
    /// and no other component is within reach: `min(reach, ½·gap)`.
    pub admissible: f64,
}

/// Chooses tube radii for every component so that each tube stays below the
/// component's reach and tubes of distinct components have disjoint closures.
pub fn tube_radius(link: &LinkSpec, config: TubeConfig) -> Result<Vec<TubeSizing>> {
    if !(config.safety > 0.0 && config.safety < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "tube safety factor must lie in (0, 1) (got {})",
            config.safety
        )));
    }
    if !(config.half_width_fraction > 0.0 && config.half_width_fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "strip half-width fraction must lie in (0, 1] (got {})",
            config.half_width_fraction
        )));
    }
    let comps = link.components();
    let m = comps.len();
    let mut gaps = vec![vec![f64::INFINITY; m]; m];
    for a in 0..m {
        for b in a + 1..m {
            let gap = component_distance(&comps[a], &comps[b]).2;
            let resolution = spacing(&comps[a]).max(spacing(&comps[b]));
            if gap < 2.0 * resolution {
                return Err(Error::ComponentsTooClose {
                    a,
                    b,
                    gap,
                    resolution,
                });
            }
            gaps[a][b] = gap;
            gaps[b][a] = gap;
        }
    }
    // Corner of the (ρ, z) rectangle, relative to the radius.
    let corner = (1.0 + config.half_width_fraction.powi(2)).sqrt();
    let mut sizing: Vec<TubeSizing> = comps
        .iter()
        .enumerate()
        .map(|(a, c)| {
            let nearest = gaps[a].iter().cloned().fold(f64::INFINITY, f64::min);
            let admissible = c.reach().min(0.5 * nearest);
            let mut radius = config.safety * admissible;
            if radius * corner >= admissible {
                radius = 0.95 * admissible / corner;
            }
            TubeSizing {
                radius,
                half_width: config.half_width_fraction * radius,
                admissible,
            }
        })
        .collect();
    // Disjoint closures: the farthest chart point from the core is at the
    // corner distance, so two tubes are disjoint when their corner
    // distances add up to less than the core gap.
    for a in 0..m {
        for b in a + 1..m {
            let reach_sum = corner * (sizing[a].radius + sizing[b].radius);
            if reach_sum >= gaps[a][b] {
                let shrink = 0.9 * gaps[a][b] / reach_sum;
                for i in [a, b] {
                    sizing[i].radius *= shrink;
                    sizing[i].half_width *= shrink;
                }
            }
        }
    }
    Ok(sizing)
}

fn spacing(c: &LinkComponent) -> f64 {
    c.length() / c.sample_count() as f64
}

/// Adapted coordinate chart on the tube around one component.
#[derive(Clone, Debug)]
pub struct TubeChart {
    component: usize,
    radius: f64,
    half_width: f64,
    admissible: f64,
    frame: Frame,
    coarse_spacing: f64,
    coarse: Vec<Vec3>,
}

/// Strip quantities at `(θ, z)` needed by the chart and its derivatives.
struct StripPoint {
    jet: FrameJet,
    point: Vec3,
    /// `∂S/∂θ`.
    d_theta: Vec3,
    /// Unnormalized normal `N = S_z × S_θ` and its norm.
    normal_raw: Vec3,
    normal_len: f64,
}

impl TubeChart {
    pub fn new(component: usize, frame: Frame, sizing: TubeSizing) -> Self {
        let length = frame.length();
        let n = ((length / (0.25 * sizing.radius)).ceil() as usize).clamp(64, 1 << 14);
        let coarse_spacing = length / n as f64;
        let coarse = (0..n)
            .map(|i| frame.arc().point_at(coarse_spacing * i as f64))
            .collect();
        TubeChart {
            component,
            radius: sizing.radius,
            half_width: sizing.half_width,
            admissible: sizing.admissible,
            frame,
            coarse_spacing,
            coarse,
        }
    }

    /// Builds charts for every component of a link.
    pub fn for_link(link: &LinkSpec, config: TubeConfig) -> Result<Vec<TubeChart>> {
        let sizing = tube_radius(link, config)?;
        link.components()
            .iter()
            .zip(sizing)
            .enumerate()
            .map(|(a, (c, size))| Ok(TubeChart::new(a, super::frame_transport(c.arc())?, size)))
            .collect()
    }

    /// Same chart with different declared limits.
    pub fn with_limits(&self, radius: f64, half_width: f64) -> Self {
        TubeChart {
            radius,
            half_width,
            ..self.clone()
        }
    }

    pub fn component(&self) -> usize {
        self.component
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn length(&self) -> f64 {
        self.frame.length()
    }

    fn strip(&self, theta: f64, z: f64) -> StripPoint {
        let jet = self.frame.jet_at(theta);
        let point = jet.point + jet.e1 * z;
        let d_theta = jet.tangent + jet.de1 * z;
        // e1 × ((1 − z k1) T + z τ e2) = z τ T − (1 − z k1) e2
        let a = 1.0 - z * jet.k1;
        let b = z * jet.twist;
        let normal_raw = jet.tangent * b - jet.e2 * a;
        StripPoint {
            jet,
            point,
            d_theta,
            normal_len: (a * a + b * b).sqrt(),
            normal_raw,
        }
    }

    /// Point `S(θ, z)` on the strip.
    pub fn strip_point(&self, theta: f64, z: f64) -> Vec3 {
        self.strip(theta, z).point
    }

    /// Unit strip normal `n(θ, z)`, oriented so `(ρ, z, θ)` is right-handed.
    pub fn strip_normal(&self, theta: f64, z: f64) -> Vec3 {
        let sp = self.strip(theta, z);
        sp.normal_raw / sp.normal_len
    }

    /// `∂S/∂θ` and `∂S/∂z = e1`.
    pub fn strip_tangents(&self, theta: f64, z: f64) -> (Vec3, Vec3) {
        let sp = self.strip(theta, z);
        (sp.d_theta, sp.jet.e1)
    }

    /// Frame jet of the core at arc length `θ`.
    pub fn core_jet(&self, theta: f64) -> FrameJet {
        self.frame.jet_at(theta)
    }

    /// `X(ρ, z, θ)`.
    pub fn from_tube_coords(&self, q: TubeCoords) -> Vec3 {
        let sp = self.strip(q.theta, q.z);
        sp.point + sp.normal_raw * (q.rho / sp.normal_len)
    }

    /// Coordinate basis `[∂X/∂ρ, ∂X/∂z, ∂X/∂θ]` at `q`.
    pub fn coordinate_basis(&self, q: TubeCoords) -> [Vec3; 3] {
        let sp = self.strip(q.theta, q.z);
        let j = &sp.jet;
        let (n_raw, d) = (sp.normal_raw, sp.normal_len);
        let normal = n_raw / d;
        let a = 1.0 - q.z * j.k1;
        let b = q.z * j.twist;

        // z-derivative of N = bT − a·e2.
        let n_raw_z = j.tangent * j.twist + j.e2 * j.k1;
        let d_z = (a * (-j.k1) + b * j.twist) / d;
        let normal_z = n_raw_z / d - n_raw * (d_z / (d * d));

        // θ-derivative, using T' and T'' of the core.
        let k1_rate = j.curvature_rate.dot(&j.e1) + j.curvature.dot(&j.de1);
        let de2 = j.curvature.cross(&j.e1) - j.e1 * j.twist;
        let a_t = -q.z * k1_rate;
        let n_raw_t = j.curvature * b - de2 * a - j.e2 * a_t;
        let d_t = a * a_t / d;
        let normal_t = n_raw_t / d - n_raw * (d_t / (d * d));

        [
            normal,
            j.e1 + normal_z * q.rho,
            sp.d_theta + normal_t * q.rho,
        ]
    }

    /// Inverts the chart without checking the declared limits. Returns `None`
    /// when the nearest-point projection is not unique or Newton fails.
    pub fn locate(&self, x: &Vec3) -> Option<TubeCoords> {
        let n = self.coarse.len();
        let dist: Vec<f64> = self.coarse.iter().map(|p| (x - p).norm()).collect();
        let (best, best_d) = dist
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, d)| if *d < acc.1 { (i, *d) } else { acc });
        if best_d > self.admissible + self.coarse_spacing {
            return None;
        }
        // Reject ties between separated local minima.
        let window = 3;
        for i in 0..n {
            let sep = (i as isize - best as isize).rem_euclid(n as isize) as usize;
            let sep = sep.min(n - sep);
            if sep <= window {
                continue;
            }
            let prev = dist[(i + n - 1) % n];
            let next = dist[(i + 1) % n];
            if dist[i] <= prev && dist[i] <= next && dist[i] <= best_d * (1.0 + 1e-9) + 1e-15 {
                return None;
            }
        }

        let theta0 = self.coarse_spacing * best as f64;
        let j = self.frame.jet_at(theta0);
        let d = x - j.point;
        let mut q = TubeCoords::new(d.dot(&self.strip_normal(theta0, 0.0)), d.dot(&j.e1), theta0);
        let length = self.length();
        let scale = 1.0 + x.norm();
        for _ in 0..60 {
            let r = self.from_tube_coords(q) - x;
            let [xr, xz, xt] = self.coordinate_basis(q);
            let jac = nalgebra::Matrix3::from_columns(&[xr, xz, xt]);
            let step = jac.lu().solve(&r)?;
            q.rho -= step.x;
            q.z -= step.y;
            q.theta -= step.z;
            if step.norm() <= 1e-15 * scale && r.norm() <= 1e-13 * scale {
                break;
            }
            if step.norm() <= 1e-14 * scale {
                break;
            }
        }
        let residual = (self.from_tube_coords(q) - x).norm();
        if !(residual <= 1e-11 * scale) {
            return None;
        }
        // Must have converged on the branch picked by the coarse search.
        let drift = (q.theta - theta0).rem_euclid(length);
        if drift.min(length - drift) > 4.0 * self.coarse_spacing + q.z.abs() + q.rho.abs() {
            return None;
        }
        q.theta = q.theta.rem_euclid(length);
        Some(q)
    }

    /// Whether `q` lies in the open chart domain `|ρ| < r`, `|z| < w`.
    pub fn contains(&self, q: &TubeCoords) -> bool {
        q.rho.abs() < self.radius && q.z.abs() < self.half_width
    }

    /// Adapted coordinates of `x`, or `None` when `x` is outside the tube.
    pub fn to_tube_coords(&self, x: &Vec3) -> Option<TubeCoords> {
        self.locate(x).filter(|q| self.contains(q))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trig::{TrigCurve, TrigSeries};
    use approx::assert_relative_eq;
    use std::f64::consts::TAU;

    fn circle(r: f64, center: Vec3) -> LinkComponent {
        LinkComponent::new(TrigCurve::new(
            TrigSeries::new(vec![center.x, r], vec![]),
            TrigSeries::new(vec![center.y], vec![r]),
            TrigSeries::constant(center.z),
        ))
        .unwrap()
    }

    fn unit_chart() -> TubeChart {
        let link = LinkSpec::new(1.0, vec![circle(1.0, Vec3::zeros())]).unwrap();
        TubeChart::for_link(&link, TubeConfig::default()).unwrap().remove(0)
    }

    #[test]
    fn single_circle_radius() {
        let link = LinkSpec::new(1.0, vec![circle(1.0, Vec3::zeros())]).unwrap();
        let sizing = tube_radius(&link, TubeConfig::default()).unwrap();
        assert_relative_eq!(sizing[0].radius, 0.5, epsilon = 1e-9);
        assert_relative_eq!(sizing[0].half_width, 0.25, epsilon = 1e-9);
    }

    #[test]
    fn stacked_circles_radius() {
        let link = LinkSpec::new(
            1.0,
            vec![circle(1.0, Vec3::zeros()), circle(1.0, Vec3::new(0.0, 0.0, 1.0))],
        )
        .unwrap();
        let sizing = tube_radius(&link, TubeConfig::default()).unwrap();
        for s in &sizing {
            assert!(s.radius <= 0.25 + 1e-12);
            assert!(s.radius > 0.2);
        }
    }

    #[test]
    fn invalid_safety() {
        let link = LinkSpec::new(1.0, vec![circle(1.0, Vec3::zeros())]).unwrap();
        let bad = TubeConfig {
            safety: 1.5,
            ..TubeConfig::default()
        };
        assert!(tube_radius(&link, bad).is_err());
    }

    #[test]
    fn core_points_have_zero_offsets() {
        let chart = unit_chart();
        for i in 0..10 {
            let s = 0.6 * i as f64 + 0.05;
            let q = chart.to_tube_coords(&Vec3::new(s.cos(), s.sin(), 0.0)).unwrap();
            assert!(q.rho.abs() < 1e-12 && q.z.abs() < 1e-12);
            assert_relative_eq!(q.theta, s, epsilon = 1e-10);
        }
    }

    #[test]
    fn ruling_and_normal_offsets() {
        let chart = unit_chart();
        let s0 = 1.1;
        let j = chart.core_jet(s0);
        let q = chart.to_tube_coords(&(j.point + j.e1 * 0.1)).unwrap();
        assert!(q.rho.abs() < 1e-12);
        assert_relative_eq!(q.z, 0.1, epsilon = 1e-10);
        assert_relative_eq!(q.theta, s0, epsilon = 1e-10);

        let base = chart.strip_point(s0, 0.1);
        let n = chart.strip_normal(s0, 0.1);
        let q = chart.to_tube_coords(&(base + n * 0.05)).unwrap();
        assert_relative_eq!(q.rho, 0.05, epsilon = 1e-10);
        assert_relative_eq!(q.z, 0.1, epsilon = 1e-10);
        assert_relative_eq!(q.theta, s0, epsilon = 1e-10);
    }

    #[test]
    fn orientation_is_right_handed() {
        let chart = unit_chart();
        let [r, z, t] = chart.coordinate_basis(TubeCoords::new(0.02, 0.05, 2.0));
        assert!(r.dot(&z.cross(&t)) > 0.0);
    }

    #[test]
    fn basis_matches_finite_differences() {
        let curve = TrigCurve::interpolate(5, |t| {
            Vec3::new(
                (2.0 + (3.0 * t).cos()) * (2.0 * t).cos(),
                (2.0 + (3.0 * t).cos()) * (2.0 * t).sin(),
                (3.0 * t).sin(),
            )
        });
        let link = LinkSpec::new(1.0, vec![LinkComponent::new(curve).unwrap()]).unwrap();
        let chart = TubeChart::for_link(&link, TubeConfig::default()).unwrap().remove(0);
        let h = 1e-5;
        let (r, w) = (chart.radius(), chart.half_width());
        for i in 0..12 {
            let q = TubeCoords::new(0.5 * r * ((i as f64).sin()), 0.7 * w * ((i as f64) * 0.7).cos(), 1.37 * i as f64);
            let basis = chart.coordinate_basis(q);
            let shifts = [(h, 0.0, 0.0), (0.0, h, 0.0), (0.0, 0.0, h)];
            for (k, (dr, dz, dt)) in shifts.iter().enumerate() {
                let plus = chart.from_tube_coords(TubeCoords::new(q.rho + dr, q.z + dz, q.theta + dt));
                let minus = chart.from_tube_coords(TubeCoords::new(q.rho - dr, q.z - dz, q.theta - dt));
                let fd = (plus - minus) / (2.0 * h);
                assert!((fd - basis[k]).norm() < 1e-7, "column {k}: {}", (fd - basis[k]).norm());
            }
            // Block-diagonal metric: ∂ρ ⟂ ∂z, ∂θ.
            assert!(basis[0].dot(&basis[1]).abs() < 1e-8);
            assert!(basis[0].dot(&basis[2]).abs() < 1e-8);
        }
    }

    #[test]
    fn far_points_are_out_of_chart() {
        let chart = unit_chart();
        assert!(chart.to_tube_coords(&Vec3::zeros()).is_none());
        assert!(chart.to_tube_coords(&Vec3::new(3.0, 0.0, 0.0)).is_none());
        assert!(chart.to_tube_coords(&Vec3::new(1.0, 0.0, 0.55)).is_none());
        assert!(chart.locate(&Vec3::new(1.0, 0.0, 0.55)).is_some());
        let _ = TAU;
    }
}
