//! Linking numbers, tube confinement and curve distances.

use crate::geometry::distance::{point_segment, segment_segment};
use crate::geometry::TubeChart;
use crate::{Error, Exec, Result, Vec3};
use serde::Serialize;
use std::f64::consts::PI;

/// Closed polyline. Stored without the repeated endpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct ClosedCurve {
    points: Vec<Vec3>,
}

impl ClosedCurve {
    /// Accepts a polyline whose last point repeats the first (within
    /// `1e-9` relative to the curve size). Consecutive duplicates are dropped.
    pub fn new(points: Vec<Vec3>) -> Result<Self> {
        if points.len() < 4 {
            return Err(Error::InvalidParameter(format!(
                "closed curve needs at least 4 points (got {})",
                points.len()
            )));
        }
        let scale = points.iter().fold(1.0f64, |m, p| m.max(p.amax()));
        let gap = (points[0] - points[points.len() - 1]).norm();
        if !(gap <= 1e-9 * scale) {
            return Err(Error::NotClosedCurve { gap });
        }
        let mut out: Vec<Vec3> = Vec::with_capacity(points.len());
        for p in &points[..points.len() - 1] {
            if out.last().is_some_and(|q| (p - q).norm() <= 1e-14 * scale) {
                continue;
            }
            out.push(*p);
        }
        Self::from_loop(out)
    }

    /// Treats `points` as a cycle: the segment back to the first point is
    /// implied.
    pub fn from_loop(points: Vec<Vec3>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::InvalidParameter("closed curve needs at least 3 distinct points".into()));
        }
        Ok(ClosedCurve { points })
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Segment `i`, from point `i` to point `i + 1` (cyclically).
    pub fn segment(&self, i: usize) -> (Vec3, Vec3) {
        (self.points[i], self.points[(i + 1) % self.points.len()])
    }

    pub fn length(&self) -> f64 {
        (0..self.len()).map(|i| {
            let (a, b) = self.segment(i);
            (b - a).norm()
        }).sum()
    }

    pub fn max_segment(&self) -> f64 {
        (0..self.len()).map(|i| {
            let (a, b) = self.segment(i);
            (b - a).norm()
        }).fold(0.0, f64::max)
    }

    pub fn map(&self, f: impl Fn(&Vec3) -> Vec3) -> Self {
        ClosedCurve {
            points: self.points.iter().map(f).collect(),
        }
    }
}

/// Minimum distance between two closed polylines.
pub fn curve_gap(a: &ClosedCurve, b: &ClosedCurve, exec: Exec) -> f64 {
    exec.map(a.len(), |i| {
        let (p0, p1) = a.segment(i);
        (0..b.len()).map(|j| {
            let (q0, q1) = b.segment(j);
            segment_segment(&p0, &p1, &q0, &q1).2
        }).fold(f64::INFINITY, f64::min)
    })
    .into_iter()
    .fold(f64::INFINITY, f64::min)
}

/// Gauss linking number with its quadrature diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Linking {
    pub value: i64,
    /// Gauss integral before rounding.
    pub raw: f64,
    /// `|raw − value|`.
    pub defect: f64,
    pub gap: f64,
    /// Sub-intervals per segment of the final quadrature.
    pub subdivision: usize,
}

/// Midpoint rule for `(1/4π) ∮∮ (a − b)·(da × db) / |a − b|³` with every
/// segment split into `m` pieces.
fn gauss_sum(a: &ClosedCurve, b: &ClosedCurve, m: usize, exec: Exec) -> f64 {
    let pieces = |c: &ClosedCurve| -> Vec<(Vec3, Vec3)> {
        (0..c.len())
            .flat_map(|i| {
                let (p0, p1) = c.segment(i);
                let d = (p1 - p0) / m as f64;
                (0..m).map(move |k| (p0 + d * (k as f64 + 0.5), d))
            })
            .collect()
    };
    let (pa, pb) = (pieces(a), pieces(b));
    let rows = exec.map(pa.len(), |i| {
        let (x, dx) = pa[i];
        pb.iter()
            .map(|(y, dy)| {
                let r = x - y;
                r.dot(&dx.cross(dy)) / r.norm().powi(3)
            })
            .sum::<f64>()
    });
    rows.iter().sum::<f64>() / (4.0 * PI)
}

/// Gauss linking number of two disjoint closed curves.
///
/// Segments are subdivided until every piece is at most a tenth of the gap
/// between the curves, then once more; the finer value is rounded and must
/// lie within `0.1` of an integer.
pub fn linking_number(a: &ClosedCurve, b: &ClosedCurve, exec: Exec) -> Result<Linking> {
    let gap = curve_gap(a, b, exec);
    let scale = a.length().max(b.length());
    if !(gap > 1e-9 * scale) {
        return Err(Error::CurvesTooClose { gap });
    }
    let seg = a.max_segment().max(b.max_segment());
    let m = ((10.0 * seg / gap).ceil() as usize).max(1);
    if m > 64 {
        return Err(Error::CurvesTooClose { gap });
    }
    let raw = gauss_sum(a, b, 2 * m, exec);
    let value = raw.round();
    let defect = (raw - value).abs();
    if defect >= 0.1 {
        return Err(Error::LinkingDefect { raw, defect });
    }
    Ok(Linking {
        value: value as i64,
        raw,
        defect,
        gap,
        subdivision: 2 * m,
    })
}

/// Whether a closed curve lies in a tube and how often it winds around it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Confinement {
    pub confined: bool,
    /// Net number of turns in `θ`.
    pub winding: i64,
    pub raw_winding: f64,
    pub max_rho: f64,
    pub max_z: f64,
    /// First point found outside the chart.
    pub witness: Option<[f64; 3]>,
}

impl Confinement {
    /// Confined and winding once: isotopic to the core inside the tube.
    pub fn certified(&self) -> bool {
        self.confined && self.winding.abs() == 1
    }
}

pub fn tube_confinement(curve: &ClosedCurve, chart: &TubeChart, exec: Exec) -> Confinement {
    let coords = exec.map_slice(curve.points(), |p| chart.locate(p));
    let length = chart.length();
    let mut out = Confinement {
        confined: true,
        winding: 0,
        raw_winding: 0.0,
        max_rho: 0.0,
        max_z: 0.0,
        witness: None,
    };
    for (p, q) in curve.points().iter().zip(&coords) {
        match q {
            Some(q) if chart.contains(q) => {
                out.max_rho = out.max_rho.max(q.rho.abs());
                out.max_z = out.max_z.max(q.z.abs());
            }
            _ => {
                out.confined = false;
                out.witness = Some([p.x, p.y, p.z]);
                break;
            }
        }
    }
    if !out.confined {
        return out;
    }
    let n = coords.len();
    let mut turns = 0.0;
    for i in 0..n {
        let (a, b) = (coords[i].unwrap().theta, coords[(i + 1) % n].unwrap().theta);
        turns += (b - a + 0.5 * length).rem_euclid(length) - 0.5 * length;
    }
    out.raw_winding = turns / length;
    out.winding = out.raw_winding.round() as i64;
    out
}

fn directed_hausdorff(a: &ClosedCurve, b: &ClosedCurve, exec: Exec) -> f64 {
    exec.map_slice(a.points(), |p| {
        (0..b.len()).map(|j| {
            let (q0, q1) = b.segment(j);
            point_segment(p, &q0, &q1)
        }).fold(f64::INFINITY, f64::min)
    })
    .into_iter()
    .fold(0.0, f64::max)
}

/// Symmetric Hausdorff distance between the vertex sets and the polylines.
pub fn hausdorff_distance(a: &ClosedCurve, b: &ClosedCurve, exec: Exec) -> f64 {
    directed_hausdorff(a, b, exec).max(directed_hausdorff(b, a, exec))
}

/// Samples a link component as a closed curve with `n` points.
pub fn sample_component(chart: &TubeChart, n: usize) -> Result<ClosedCurve> {
    let l = chart.length();
    ClosedCurve::from_loop((0..n).map(|i| chart.core_jet(l * i as f64 / n as f64).point).collect())
}
