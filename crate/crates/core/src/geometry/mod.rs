//! Analytic links, their framing, and adapted tube coordinates.

mod arclength;
pub mod distance;
mod frame;
mod tube;

pub use arclength::{ArcCurve, ArcJet};
pub use frame::{frame_transport, Frame, FrameJet, FrameSample};
pub use tube::{tube_radius, TubeChart, TubeConfig, TubeCoords, TubeSizing};

use crate::trig::TrigCurve;
use crate::{Error, Result, Vec3};
use distance::segment_segment;

/// One closed component of a link.
#[derive(Clone, Debug)]
pub struct LinkComponent {
    arc: ArcCurve,
    kappa_max: f64,
}

impl LinkComponent {
    /// Validates that the curve is a smooth embedding and caches its
    /// arc-length map.
    pub fn new(curve: TrigCurve) -> Result<Self> {
        let n = (64 * (curve.degree() + 1)).max(512);
        for i in 0..n {
            let t = std::f64::consts::TAU * i as f64 / n as f64;
            let speed = curve.jet(t)[1].norm();
            if !(speed > 1e-8) {
                return Err(Error::DegenerateTangent { index: i, speed });
            }
        }
        let arc = ArcCurve::new(curve);
        let length = arc.length();
        let kappa_max = (0..n)
            .map(|i| arc.jet_at(length * i as f64 / n as f64).curvature.norm())
            .fold(0.0f64, f64::max);
        let component = LinkComponent { arc, kappa_max };
        let (s1, s2, d) = component.min_self_distance();
        if d < 1e-9 * length {
            return Err(Error::NotEmbedded {
                t1: component.arc.param_at(s1),
                t2: component.arc.param_at(s2),
                distance: d,
            });
        }
        Ok(component)
    }

    pub fn curve(&self) -> &TrigCurve {
        self.arc.curve()
    }

    pub fn arc(&self) -> &ArcCurve {
        &self.arc
    }

    pub fn length(&self) -> f64 {
        self.arc.length()
    }

    pub fn max_curvature(&self) -> f64 {
        self.kappa_max
    }

    fn sample_count(&self) -> usize {
        let per_length = 64.0 * self.kappa_max.max(1.0);
        ((per_length * self.length()).ceil() as usize).clamp(256, 4096)
    }

    /// Smallest distance between points at least `π/κ_max` apart along the
    /// curve, as `(s1, s2, distance)`. Nearer pairs cannot bring the chord
    /// below `2/κ_max` by comparison with the osculating circle.
    pub fn min_self_distance(&self) -> (f64, f64, f64) {
        let length = self.length();
        let separation = (std::f64::consts::PI / self.kappa_max.max(1e-12)).min(0.5 * length);
        let n = self.sample_count();
        let h = length / n as f64;
        let pts = self.arc.uniform_points(n);
        let mut best = (0.0, 0.0, f64::INFINITY);
        for i in 0..n {
            for j in i + 1..n {
                let gap = (j - i) as f64 * h;
                if gap.min(length - gap) + h < separation {
                    continue;
                }
                let (u, v, d) =
                    segment_segment(&pts[i], &pts[(i + 1) % n], &pts[j], &pts[(j + 1) % n]);
                if d < best.2 {
                    best = ((i as f64 + u) * h, (j as f64 + v) * h, d);
                }
            }
        }
        if !best.2.is_finite() {
            return (0.0, 0.5 * length, f64::INFINITY);
        }
        refine_pair(&self.arc, &self.arc, best)
    }

    /// Reach estimate `min(1/κ_max, ½·min self-distance)`.
    ///
    /// A minimum on the separation boundary has chord at least `2/κ_max`, so
    /// self-distances within sampling error of that bound defer to the
    /// curvature bound.
    pub fn reach(&self) -> f64 {
        let curvature_bound = 1.0 / self.kappa_max.max(1e-12);
        let half = 0.5 * self.min_self_distance().2;
        if half < curvature_bound * (1.0 - 1e-3) {
            half
        } else {
            curvature_bound
        }
    }

    /// Arc-length samples of the curve: `n` points at spacing `|L|/n` with
    /// unit tangents, and the total length.
    pub fn resample_arclength(&self, n: usize) -> Result<ArcSamples> {
        if n < 16 {
            return Err(Error::InvalidParameter(format!(
                "arc-length resampling needs at least 16 samples (got {n})"
            )));
        }
        let length = self.length();
        let (points, tangents) = (0..n)
            .map(|i| {
                let j = self.arc.jet_at(length * i as f64 / n as f64);
                (j.point, j.tangent)
            })
            .unzip();
        Ok(ArcSamples {
            length,
            points,
            tangents,
        })
    }
}

/// Uniform arc-length samples of a component.
#[derive(Clone, Debug)]
pub struct ArcSamples {
    pub length: f64,
    pub points: Vec<Vec3>,
    pub tangents: Vec<Vec3>,
}

/// Minimum distance between two components, as `(s_a, s_b, distance)`.
pub fn component_distance(a: &LinkComponent, b: &LinkComponent) -> (f64, f64, f64) {
    let (na, nb) = (a.sample_count(), b.sample_count());
    let (ha, hb) = (a.length() / na as f64, b.length() / nb as f64);
    let pa = a.arc.uniform_points(na);
    let pb = b.arc.uniform_points(nb);
    let mut best = (0.0, 0.0, f64::INFINITY);
    for i in 0..na {
        for j in 0..nb {
            let (u, v, d) = segment_segment(&pa[i], &pa[(i + 1) % na], &pb[j], &pb[(j + 1) % nb]);
            if d < best.2 {
                best = ((i as f64 + u) * ha, (j as f64 + v) * hb, d);
            }
        }
    }
    refine_pair(&a.arc, &b.arc, best)
}

/// Newton polish of a near-closest pair on the squared distance.
fn refine_pair(a: &ArcCurve, b: &ArcCurve, start: (f64, f64, f64)) -> (f64, f64, f64) {
    let (mut s, mut t, mut best) = start;
    for _ in 0..20 {
        let ja = a.jet_at(s);
        let jb = b.jet_at(t);
        let d = ja.point - jb.point;
        let g = [d.dot(&ja.tangent), -d.dot(&jb.tangent)];
        let h11 = 1.0 + d.dot(&ja.curvature);
        let h22 = 1.0 - d.dot(&jb.curvature);
        let h12 = -ja.tangent.dot(&jb.tangent);
        let det = h11 * h22 - h12 * h12;
        if det <= 0.0 {
            break;
        }
        let ds = (h22 * g[0] - h12 * g[1]) / det;
        let dt = (h11 * g[1] - h12 * g[0]) / det;
        let (ns, nt) = (s - ds, t - dt);
        let nd = (a.point_at(ns) - b.point_at(nt)).norm();
        if nd > best {
            break;
        }
        s = ns.rem_euclid(a.length());
        t = nt.rem_euclid(b.length());
        best = nd;
        if ds.abs().max(dt.abs()) < 1e-14 {
            break;
        }
    }
    (s, t, best)
}

/// A finite analytic link together with the Beltrami eigenvalue.
#[derive(Clone, Debug)]
pub struct LinkSpec {
    lambda: f64,
    components: Vec<LinkComponent>,
}

impl LinkSpec {
    pub fn new(lambda: f64, components: Vec<LinkComponent>) -> Result<Self> {
        if !lambda.is_finite() || lambda == 0.0 {
            return Err(Error::InvalidLambda(lambda));
        }
        if lambda < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "lambda must be positive (got {lambda}); mirror the link through the origin for negative values"
            )));
        }
        if components.is_empty() {
            return Err(Error::InvalidParameter("link has no components".into()));
        }
        for a in 0..components.len() {
            for b in a + 1..components.len() {
                let (_, _, gap) = component_distance(&components[a], &components[b]);
                if gap < 1e-9 {
                    return Err(Error::ComponentsTooClose {
                        a,
                        b,
                        gap,
                        resolution: 1e-9,
                    });
                }
            }
        }
        Ok(LinkSpec { lambda, components })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn components(&self) -> &[LinkComponent] {
        &self.components
    }

    /// Same link with a different eigenvalue.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        LinkSpec::new(lambda, self.components.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trig::TrigSeries;
    use approx::assert_relative_eq;

    fn circle(r: f64, center: Vec3) -> TrigCurve {
        TrigCurve::new(
            TrigSeries::new(vec![center.x, r], vec![]),
            TrigSeries::new(vec![center.y], vec![r]),
            TrigSeries::constant(center.z),
        )
    }

    #[test]
    fn unit_circle_resamples_to_circumference() {
        let c = LinkComponent::new(circle(1.0, Vec3::zeros())).unwrap();
        let samples = c.resample_arclength(64).unwrap();
        assert_relative_eq!(samples.length, std::f64::consts::TAU, epsilon = 1e-12);
        assert_relative_eq!(c.reach(), 1.0, epsilon = 1e-9);
        assert!(c.resample_arclength(8).is_err());
    }

    #[test]
    fn figure_of_eight_projection_is_rejected() {
        // (sin 2t, sin t, 0) crosses itself at the origin.
        let curve = TrigCurve::new(
            TrigSeries::new(vec![0.0], vec![0.0, 1.0]),
            TrigSeries::new(vec![0.0], vec![1.0]),
            TrigSeries::constant(0.0),
        );
        match LinkComponent::new(curve) {
            Err(Error::NotEmbedded { t1, t2, distance }) => {
                assert!(distance < 1e-8);
                let pi = std::f64::consts::PI;
                let hit = |t: f64| t.abs() < 1e-4 || (t - pi).abs() < 1e-4 || (t - 2.0 * pi).abs() < 1e-4;
                assert!(hit(t1) && hit(t2), "{t1} {t2}");
            }
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn stalled_curve_is_rejected() {
        let curve = TrigCurve::new(
            TrigSeries::constant(1.0),
            TrigSeries::constant(0.0),
            TrigSeries::constant(0.0),
        );
        assert!(matches!(
            LinkComponent::new(curve),
            Err(Error::DegenerateTangent { .. })
        ));
    }

    #[test]
    fn parallel_circles_distance() {
        let a = LinkComponent::new(circle(1.0, Vec3::zeros())).unwrap();
        let b = LinkComponent::new(circle(1.0, Vec3::new(0.0, 0.0, 1.0))).unwrap();
        assert_relative_eq!(component_distance(&a, &b).2, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn link_rejects_bad_lambda() {
        let a = LinkComponent::new(circle(1.0, Vec3::zeros())).unwrap();
        assert!(matches!(
            LinkSpec::new(0.0, vec![a.clone()]),
            Err(Error::InvalidLambda(_))
        ));
        assert!(LinkSpec::new(-1.0, vec![a.clone()]).is_err());
        assert!(LinkSpec::new(1.0, vec![]).is_err());
        assert!(LinkSpec::new(1.0, vec![a.clone(), a]).is_err());
    }
}
