//! Poincaré return maps, periodic orbit refinement and monodromy.

use super::integrator::{Dopri5, StepStats, Tolerances};
use super::{from_array, integrate_sampled, to_array, VectorField};
use crate::geometry::TubeChart;
use crate::{Error, Mat3, Result, Vec3};
use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use serde::{Deserialize, Serialize};

/// A disk through `anchor` with unit `normal`, crossed in the `+normal`
/// direction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Section {
    pub anchor: Vec3,
    pub normal: Vec3,
    pub radius: f64,
    /// Stream lines farther than this from the anchor count as escaped.
    pub reach: f64,
    basis: [Vec3; 2],
}

impl Section {
    pub fn new(anchor: Vec3, direction: Vec3, radius: f64) -> Result<Self> {
        let len = direction.norm();
        if !(len > 0.0 && len.is_finite()) {
            return Err(Error::NotTransverse);
        }
        let normal = direction / len;
        let p = crate::field::polarization(&normal);
        Ok(Section {
            anchor,
            normal,
            radius,
            reach: f64::INFINITY,
            basis: [p, normal.cross(&p)],
        })
    }

    pub fn with_reach(mut self, reach: f64) -> Self {
        self.reach = reach;
        self
    }

    /// Section normal to the field at the core point of largest `|v|`
    /// (ties go to the smallest `θ`), with the tube radius.
    pub fn at_core<F: VectorField + ?Sized>(field: &F, chart: &TubeChart) -> Result<Self> {
        let n = 512;
        let mut best = (f64::NEG_INFINITY, Vec3::zeros(), Vec3::zeros());
        for i in 0..n {
            let p = chart.core_jet(chart.length() * i as f64 / n as f64).point;
            let v = field.eval(&p);
            if v.norm() > best.0 {
                best = (v.norm(), p, v);
            }
        }
        Section::new(best.1, best.2, chart.radius())
    }

    pub fn signed(&self, x: &Vec3) -> f64 {
        (x - self.anchor).dot(&self.normal)
    }

    pub fn contains(&self, x: &Vec3) -> bool {
        let d = x - self.anchor;
        (d - self.normal * d.dot(&self.normal)).norm() < self.radius
    }

    /// In-plane coordinates of `x`.
    pub fn to_plane(&self, x: &Vec3) -> Vector2<f64> {
        let d = x - self.anchor;
        Vector2::new(d.dot(&self.basis[0]), d.dot(&self.basis[1]))
    }

    pub fn from_plane(&self, y: &Vector2<f64>) -> Vec3 {
        self.anchor + self.basis[0] * y.x + self.basis[1] * y.y
    }
}

/// First return to a section.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Return {
    pub point: Vec3,
    pub time: f64,
    pub stats: StepStats,
}

/// Follows the stream line from `x` (on the section) to its next upward
/// crossing inside the disk.
pub fn poincare_return<F: VectorField + ?Sized>(
    field: &F,
    section: &Section,
    x: &Vec3,
    tol: Tolerances,
    t_max: f64,
) -> Result<Return> {
    let v = field.eval(x);
    if !(v.dot(&section.normal) > 1e-3 * v.norm()) {
        return Err(Error::NotTransverse);
    }
    // Crossings count only once the stream line has left the start.
    next_crossing(field, section, x, tol, t_max, 0.5 * section.radius)
}

/// First upward crossing of `target` inside its disk after the stream line
/// from `x` has moved `arm` away from `x`.
fn next_crossing<F: VectorField + ?Sized>(
    field: &F,
    target: &Section,
    x: &Vec3,
    tol: Tolerances,
    t_max: f64,
    arm: f64,
) -> Result<Return> {
    tol.validate()?;
    let mut stepper = Dopri5::new(|_, y: &[f64; 3]| to_array(&field.eval(&from_array(y))), 0.0, to_array(x), tol)
        .with_max_step(t_max / 64.0);
    let g = |y: &[f64; 3]| target.signed(&from_array(y));
    let mut armed = arm <= 0.0;
    while stepper.t() < t_max {
        let step = stepper.step(t_max)?;
        if (from_array(&step.y1) - target.anchor).norm() > target.reach {
            return Err(Error::Escape { t_max: step.t1() });
        }
        if !armed {
            armed = (from_array(&step.y1) - x).norm() > arm;
            continue;
        }
        let (g0, g1) = (g(&step.y0), g(&step.y1));
        if !(g0 < 0.0 && g1 >= 0.0) {
            continue;
        }
        // Illinois iteration on the dense output.
        let (mut a, mut b, mut fa, mut fb) = (0.0, 1.0, g0, g1);
        let mut side = 0;
        let mut theta = 1.0;
        for _ in 0..100 {
            theta = (a * fb - b * fa) / (fb - fa);
            let f = g(&step.at(theta));
            if f == 0.0 || (b - a) < 1e-15 {
                break;
            }
            if f < 0.0 {
                a = theta;
                fa = f;
                if side == -1 {
                    fb *= 0.5;
                }
                side = -1;
            } else {
                b = theta;
                fb = f;
                if side == 1 {
                    fa *= 0.5;
                }
                side = 1;
            }
            if f.abs() < 1e-16 * (1.0 + target.anchor.norm()) {
                break;
            }
        }
        let point = from_array(&step.at(theta));
        if target.contains(&point) {
            return Ok(Return {
                point,
                time: step.t0 + theta * step.h,
                stats: stepper.stats,
            });
        }
    }
    Err(Error::Escape { t_max })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitOptions {
    pub tol: Tolerances,
    /// Required `|P(x) − x|`.
    pub closure: f64,
    pub max_newton: usize,
    /// Return-time limit in units of `|L| / |v(seed)|`.
    pub t_max_factor: f64,
    /// Number of segments of the exported polyline.
    pub samples: usize,
    /// Shooting segments along the core; 0 picks `max(16, ⌈2|L|⌉)`.
    pub segments: usize,
}

impl Default for OrbitOptions {
    fn default() -> Self {
        OrbitOptions {
            tol: Tolerances::default(),
            closure: 1e-9,
            max_newton: 40,
            t_max_factor: 4.0,
            samples: 4096,
            segments: 0,
        }
    }
}

/// A closed stream line near one link component.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicOrbit {
    pub component: usize,
    /// Point of the orbit on the first section.
    pub start: Vec3,
    pub period: f64,
    /// Largest mismatch between the end of one shooting segment and the
    /// start of the next.
    pub closure: f64,
    /// Samples over one period, uniform in time within each segment; the
    /// last point closes the loop.
    pub points: Vec<Vec3>,
    pub section: Section,
    /// Start point and duration of every shooting segment.
    pub segments: Vec<(Vec3, f64)>,
    pub newton_iterations: usize,
}

/// Refines the periodic orbit near the core of `chart` by multiple shooting
/// between sections spread evenly along the core, seeded at the core.
///
/// The return map of a strongly hyperbolic orbit amplifies errors by its
/// unstable multiplier, so a single return from a point near the core leaves
/// the tube long before it closes. Short segments keep every transit inside.
pub fn refine_orbit<F: VectorField + ?Sized>(field: &F, chart: &TubeChart, options: OrbitOptions) -> Result<PeriodicOrbit> {
    let length = chart.length();
    let k = if options.segments == 0 {
        ((2.0 * length).ceil() as usize).max(16)
    } else {
        options.segments.max(1)
    };
    let anchors: Vec<Vec3> = (0..k).map(|i| chart.core_jet(length * i as f64 / k as f64).point).collect();
    let mut sections = Vec::with_capacity(k);
    for (i, a) in anchors.iter().enumerate() {
        let chord = (anchors[(i + k - 1) % k] - a).norm();
        sections.push(Section::new(*a, field.eval(a), chart.radius())?.with_reach(1.5 * chord + 2.0 * chart.radius()));
    }
    let t_max: Vec<f64> = anchors
        .iter()
        .map(|a| options.t_max_factor * length / k as f64 / field.eval(a).norm().max(1e-12))
        .collect();
    // Transit from section i (plane coordinates y) to section i + 1.
    let transit = |i: usize, y: &Vector2<f64>| -> Result<(Vector2<f64>, Return)> {
        let next = &sections[(i + 1) % k];
        let arm = if k == 1 { 0.5 * chart.radius() } else { 0.0 };
        let r = next_crossing(field, next, &sections[i].from_plane(y), options.tol, t_max[i], arm)?;
        Ok((next.to_plane(&r.point), r))
    };
    let residual = |ys: &[Vector2<f64>]| -> Result<(DVector<f64>, Vec<Return>)> {
        let mut f = DVector::zeros(2 * k);
        let mut returns = Vec::with_capacity(k);
        for i in 0..k {
            let (p, r) = transit(i, &ys[i])?;
            let d = p - ys[(i + 1) % k];
            f[2 * i] = d.x;
            f[2 * i + 1] = d.y;
            returns.push(r);
        }
        Ok((f, returns))
    };
    let mut ys = vec![Vector2::zeros(); k];
    let (mut f, mut returns) = residual(&ys)?;
    let mut iterations = 0;
    let delta = 1e-7 * chart.radius();
    while f.amax() >= options.closure {
        if iterations == options.max_newton {
            return Err(Error::NewtonDiverged {
                iterations,
                residual: f.amax(),
            });
        }
        iterations += 1;
        let mut jac = DMatrix::zeros(2 * k, 2 * k);
        for i in 0..k {
            let base = Vector2::new(f[2 * i], f[2 * i + 1]) + ys[(i + 1) % k];
            for j in 0..2 {
                let mut yj = ys[i];
                yj[j] += delta;
                let (p, _) = transit(i, &yj)?;
                let col = (p - base) / delta;
                jac[(2 * i, 2 * i + j)] += col.x;
                jac[(2 * i + 1, 2 * i + j)] += col.y;
            }
            let n = (i + 1) % k;
            jac[(2 * i, 2 * n)] -= 1.0;
            jac[(2 * i + 1, 2 * n + 1)] -= 1.0;
        }
        let step = jac.lu().solve(&(-&f)).ok_or(Error::NewtonDiverged {
            iterations,
            residual: f.amax(),
        })?;
        let mut damping = 1.0;
        loop {
            let trial: Vec<Vector2<f64>> = (0..k)
                .map(|i| ys[i] + Vector2::new(step[2 * i], step[2 * i + 1]) * damping)
                .collect();
            if let Ok((ft, rt)) = residual(&trial) {
                if ft.amax() < f.amax() {
                    ys = trial;
                    f = ft;
                    returns = rt;
                    break;
                }
            }
            damping *= 0.5;
            if damping < 1e-4 {
                return Err(Error::NewtonDiverged {
                    iterations,
                    residual: f.amax(),
                });
            }
        }
    }
    let segments: Vec<(Vec3, f64)> = (0..k).map(|i| (sections[i].from_plane(&ys[i]), returns[i].time)).collect();
    let period: f64 = segments.iter().map(|s| s.1).sum();
    let closure = (0..k)
        .map(|i| (returns[i].point - segments[(i + 1) % k].0).norm())
        .fold(0.0, f64::max);
    let mut points = Vec::with_capacity(options.samples + 1);
    for (x, t) in &segments {
        let n = ((options.samples as f64 * t / period).round() as usize).max(1);
        let tr = integrate_sampled(field, *x, *t, options.tol, Some(n))?;
        points.extend_from_slice(&tr.points[..tr.points.len() - 1]);
    }
    points.push(segments[0].0);
    for p in &points {
        if chart.to_tube_coords(p).is_none() {
            return Err(Error::LeftTube {
                component: chart.component(),
                witness: *p,
            });
        }
    }
    Ok(PeriodicOrbit {
        component: chart.component(),
        start: segments[0].0,
        period,
        closure,
        points,
        section: sections[0],
        segments,
        newton_iterations: iterations,
    })
}

/// Like [`refine_orbit`] with an explicit seed point inside the tube.
pub fn refine_orbit_from<F: VectorField + ?Sized>(
    field: &F,
    chart: &TubeChart,
    seed: Vec3,
    options: OrbitOptions,
) -> Result<PeriodicOrbit> {
    if chart.to_tube_coords(&seed).is_none() {
        return Err(Error::SeedOutsideTube {
            component: chart.component(),
        });
    }
    let section = Section::new(seed, field.eval(&seed), chart.radius())?;
    refine_on_section(field, chart, section, options)
}

fn refine_on_section<F: VectorField + ?Sized>(
    field: &F,
    chart: &TubeChart,
    section: Section,
    options: OrbitOptions,
) -> Result<PeriodicOrbit> {
    let speed = field.eval(&section.anchor).norm().max(1e-12);
    // A return orbit stays within the tube of the component.
    let extent = (0..256)
        .map(|i| (chart.core_jet(chart.length() * i as f64 / 256.0).point - section.anchor).norm())
        .fold(0.0, f64::max);
    let section = section.with_reach(extent + 2.0 * chart.radius());
    let t_max = options.t_max_factor * chart.length() / speed;
    let residual = |y: &Vector2<f64>| -> Result<(Vector2<f64>, Return)> {
        let r = poincare_return(field, &section, &section.from_plane(y), options.tol, t_max)?;
        Ok((section.to_plane(&r.point) - y, r))
    };
    let mut y = Vector2::zeros();
    let (mut f, mut ret) = residual(&y)?;
    let mut iterations = 0;
    while f.norm() >= options.closure {
        if iterations == options.max_newton {
            return Err(Error::NewtonDiverged {
                iterations,
                residual: f.norm(),
            });
        }
        iterations += 1;
        let delta = 1e-7 * chart.radius();
        let mut jac = Matrix2::zeros();
        for j in 0..2 {
            let mut yj = y;
            yj[j] += delta;
            let (fj, _) = residual(&yj)?;
            jac.set_column(j, &((fj - f) / delta));
        }
        let step = jac.lu().solve(&(-f)).ok_or(Error::NewtonDiverged {
            iterations,
            residual: f.norm(),
        })?;
        let mut damping = 1.0;
        loop {
            let trial = y + step * damping;
            if let Ok((ft, rt)) = residual(&trial) {
                if ft.norm() < f.norm() {
                    y = trial;
                    f = ft;
                    ret = rt;
                    break;
                }
            }
            damping *= 0.5;
            if damping < 1e-4 {
                return Err(Error::NewtonDiverged {
                    iterations,
                    residual: f.norm(),
                });
            }
        }
    }
    let start = section.from_plane(&y);
    let trajectory = integrate_sampled(field, start, ret.time, options.tol, Some(options.samples))?;
    let mut points = trajectory.points;
    for p in &points {
        if chart.to_tube_coords(p).is_none() {
            return Err(Error::LeftTube {
                component: chart.component(),
                witness: *p,
            });
        }
    }
    let closure = (ret.point - start).norm();
    *points.last_mut().expect("orbit has samples") = start;
    Ok(PeriodicOrbit {
        component: chart.component(),
        start,
        period: ret.time,
        closure,
        points,
        section,
        segments: vec![(start, ret.time)],
        newton_iterations: iterations,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    HyperbolicSaddle,
    Elliptic,
    Indeterminate,
}

/// Monodromy matrix of a periodic orbit and its Floquet multipliers.
#[derive(Clone, Debug, PartialEq)]
pub struct Monodromy {
    pub matrix: Mat3,
    /// All three eigenvalues as `(re, im)`.
    pub eigenvalues: [(f64, f64); 3],
    /// Eigenvalue attributed to the flow direction.
    pub flow_multiplier: (f64, f64),
    /// Nontrivial multipliers ordered by modulus: `μ1` the smaller.
    pub mu1: (f64, f64),
    pub mu2: (f64, f64),
    pub determinant: f64,
    /// `exp ∫ div v` along the orbit.
    pub liouville: f64,
    pub classification: Classification,
    /// `min(|μ2| − 1, 1 − |μ1|)` for saddles, else 0.
    pub margin: f64,
}

/// Integrates `Y' = Dv(x(t))·Y` along every shooting segment of `orbit`
/// and multiplies the segment matrices. The determinant is the product of
/// the segment determinants, which stays accurate when the product itself
/// has entries of order `e^{|L|}`.
pub fn monodromy<F: VectorField + ?Sized>(field: &F, orbit: &PeriodicOrbit, tol: Tolerances) -> Result<Monodromy> {
    tol.validate()?;
    let rhs = |_, y: &[f64; 13]| {
        let x = from_array(y);
        let v = field.eval(&x);
        let dv = field.jacobian(&x);
        let big_y = Mat3::from_column_slice(&y[3..12]);
        let dy = dv * big_y;
        let mut out = [0.0; 13];
        out[..3].copy_from_slice(v.as_slice());
        out[3..12].copy_from_slice(dy.as_slice());
        out[12] = dv.trace();
        out
    };
    let mut matrix = Mat3::identity();
    let mut determinant = 1.0;
    let mut log_liouville = 0.0;
    for (x, t) in &orbit.segments {
        let mut y0 = [0.0; 13];
        y0[..3].copy_from_slice(x.as_slice());
        for i in 0..3 {
            y0[3 + 4 * i] = 1.0;
        }
        let mut stepper = Dopri5::new(rhs, 0.0, y0, tol);
        while stepper.t() < *t {
            stepper.step(*t)?;
        }
        let y = stepper.y();
        let m = Mat3::from_column_slice(&y[3..12]);
        matrix = m * matrix;
        determinant *= m.determinant();
        log_liouville += y[12];
    }
    let liouville = log_liouville.exp();
    let eig = matrix.complex_eigenvalues();
    let eigenvalues = [0, 1, 2].map(|i| (eig[i].re, eig[i].im));
    let dist1 = |e: &(f64, f64)| ((e.0 - 1.0).powi(2) + e.1.powi(2)).sqrt();
    let mut order = [0usize, 1, 2];
    order.sort_by(|a, b| dist1(&eigenvalues[*a]).total_cmp(&dist1(&eigenvalues[*b])));
    let flow_multiplier = eigenvalues[order[0]];
    let modulus = |e: &(f64, f64)| (e.0 * e.0 + e.1 * e.1).sqrt();
    let (mut mu1, mut mu2) = (eigenvalues[order[1]], eigenvalues[order[2]]);
    if modulus(&mu1) > modulus(&mu2) {
        std::mem::swap(&mut mu1, &mut mu2);
    }
    // The small multiplier of a strongly unstable product is lost to
    // rounding; recover it from the determinant and the flow direction,
    // which M maps to v(x(T)) = v(x(0)).
    let v0 = field.eval(&orbit.start);
    let flow = (matrix * v0).dot(&v0) / v0.norm_squared();
    if mu1.1 == 0.0 && mu2.1 == 0.0 && modulus(&mu2) > 1e6 {
        mu1 = (determinant / (flow * mu2.0), 0.0);
    }
    let ambiguous = dist1(&eigenvalues[order[1]]) < 1e-6;
    let real = mu1.1 == 0.0 && mu2.1 == 0.0;
    let (m1, m2) = (modulus(&mu1), modulus(&mu2));
    let margin_raw = (m2 - 1.0).min(1.0 - m1);
    let (classification, margin) = if ambiguous {
        (Classification::Indeterminate, 0.0)
    } else if real && margin_raw > 1e-6 {
        (Classification::HyperbolicSaddle, margin_raw)
    } else if (m1 - 1.0).abs() < 1e-3 && (m2 - 1.0).abs() < 1e-3 {
        (Classification::Elliptic, 0.0)
    } else {
        (Classification::Indeterminate, 0.0)
    };
    Ok(Monodromy {
        matrix,
        eigenvalues,
        flow_multiplier,
        mu1,
        mu2,
        determinant,
        liouville,
        classification,
        margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{Scaled, TubeModelField};
    use crate::geometry::{LinkComponent, LinkSpec, TubeConfig};
    use crate::trig::{TrigCurve, TrigSeries};
    use std::f64::consts::TAU;

    fn circle_chart() -> TubeChart {
        let c = LinkComponent::new(TrigCurve::new(
            TrigSeries::new(vec![0.0, 1.0], vec![]),
            TrigSeries::new(vec![0.0], vec![1.0]),
            TrigSeries::constant(0.0),
        ))
        .unwrap();
        let link = LinkSpec::new(1.0, vec![c]).unwrap();
        TubeChart::for_link(&link, TubeConfig::default()).unwrap().remove(0)
    }

    #[test]
    fn model_return_contracts_in_the_strip() {
        let chart = circle_chart();
        let field = TubeModelField { chart: &chart };
        let section = Section::new(Vec3::x(), Vec3::y(), 0.5).unwrap();
        // On the core the return is the point itself after |L| = 2π.
        let r = poincare_return(&field, &section, &Vec3::x(), Tolerances::default(), 30.0).unwrap();
        assert!((r.point - Vec3::x()).norm() < 1e-9);
        assert!((r.time - TAU).abs() < 1e-8);
        // z = 1e-3 along e1 (radial): contracted by e^{−2π}.
        let start = chart.from_tube_coords(crate::geometry::TubeCoords::new(0.0, 1e-3, 0.0));
        let r = poincare_return(&field, &section, &start, Tolerances::default(), 30.0).unwrap();
        let q = chart.locate(&r.point).unwrap();
        assert!((q.z - 1e-3 * (-TAU).exp()).abs() < 1e-11, "{}", q.z);
        assert!(q.rho.abs() < 1e-12);
    }

    #[test]
    fn tangent_start_is_not_transverse() {
        let chart = circle_chart();
        let field = TubeModelField { chart: &chart };
        let section = Section::new(Vec3::x(), Vec3::z(), 0.5).unwrap();
        assert!(matches!(
            poincare_return(&field, &section, &Vec3::x(), Tolerances::default(), 30.0),
            Err(Error::NotTransverse)
        ));
    }

    #[test]
    fn model_orbit_is_the_core_with_known_multipliers() {
        let chart = circle_chart();
        let field = TubeModelField { chart: &chart };
        let orbit = refine_orbit(&field, &chart, OrbitOptions::default()).unwrap();
        assert!(orbit.closure < 1e-9);
        assert!((orbit.period - TAU).abs() < 1e-8);
        for p in orbit.points.iter().step_by(64) {
            assert!((p.norm() - 1.0).abs() < 1e-9 && p.z.abs() < 1e-9);
        }
        let m = monodromy(&field, &orbit, Tolerances::default()).unwrap();
        assert_eq!(m.classification, Classification::HyperbolicSaddle);
        assert!((m.mu1.0 / (-TAU).exp() - 1.0).abs() < 1e-4, "{:?}", m.mu1);
        assert!((m.mu2.0 / TAU.exp() - 1.0).abs() < 1e-4, "{:?}", m.mu2);
        assert!((m.mu1.0 * m.mu2.0 - 1.0).abs() < 1e-4);
        assert!((m.determinant - 1.0).abs() < 1e-4);
    }

    #[test]
    fn rescaled_field_keeps_multipliers() {
        let chart = circle_chart();
        let field = TubeModelField { chart: &chart };
        let fast = Scaled(&field, 2.0);
        let a = refine_orbit(&field, &chart, OrbitOptions::default()).unwrap();
        let b = refine_orbit(&fast, &chart, OrbitOptions::default()).unwrap();
        assert!((b.period - 0.5 * a.period).abs() < 1e-8);
        let (ma, mb) = (
            monodromy(&field, &a, Tolerances::default()).unwrap(),
            monodromy(&fast, &b, Tolerances::default()).unwrap(),
        );
        assert!((ma.mu1.0 - mb.mu1.0).abs() < 1e-6 * ma.mu1.0.abs().max(1.0));
        assert!((ma.mu2.0 / mb.mu2.0 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn seed_outside_tube_is_rejected() {
        let chart = circle_chart();
        let field = TubeModelField { chart: &chart };
        assert!(matches!(
            refine_orbit_from(&field, &chart, Vec3::new(3.0, 0.0, 0.0), OrbitOptions::default()),
            Err(Error::SeedOutsideTube { component: 0 })
        ));
    }
}
