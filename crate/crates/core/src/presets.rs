//! Built-in analytic links.

use crate::geometry::{LinkComponent, LinkSpec};
use crate::trig::{TrigCurve, TrigSeries};
use crate::{Error, Result, Vec3};
use serde::{Deserialize, Serialize};

/// A named link generator with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum Preset {
    Circle {
        #[serde(default = "one")]
        radius: f64,
        #[serde(default)]
        center: [f64; 3],
    },
    /// `((R + r cos qt) cos pt, (R + r cos qt) sin pt, r sin qt)`.
    TorusKnot {
        p: u32,
        q: u32,
        #[serde(default = "two")]
        major: f64,
        #[serde(default = "one")]
        minor: f64,
    },
    Hopf {},
    Borromean {},
    /// `((2 + cos 2t) cos 3t, (2 + cos 2t) sin 3t, sin 4t)` scaled so the
    /// largest coordinate magnitude equals `half_extent`.
    FigureEight {
        #[serde(default = "three")]
        half_extent: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

fn three() -> f64 {
    3.0
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::InvalidParameter(format!("{name} must be positive (got {v})")));
    }
    Ok(())
}

/// Circle of radius `r` about `center` in the plane spanned by `u`, `v`.
fn planar_circle(center: Vec3, u: Vec3, v: Vec3, r: f64) -> TrigCurve {
    let series = |i: usize| TrigSeries::new(vec![center[i], r * u[i]], vec![r * v[i]]);
    TrigCurve::new(series(0), series(1), series(2))
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::Circle { .. } => "circle",
            Preset::TorusKnot { .. } => "torus_knot",
            Preset::Hopf {} => "hopf",
            Preset::Borromean {} => "borromean",
            Preset::FigureEight { .. } => "figure_eight",
        }
    }

    /// Trigonometric curves of the components.
    pub fn curves(&self) -> Result<Vec<TrigCurve>> {
        match *self {
            Preset::Circle { radius, center } => {
                positive("radius", radius)?;
                Ok(vec![planar_circle(Vec3::from(center), Vec3::x(), Vec3::y(), radius)])
            }
            Preset::TorusKnot { p, q, major, minor } => {
                if p == 0 || q == 0 {
                    return Err(Error::InvalidParameter(format!("torus knot needs p, q >= 1 (got {p}, {q})")));
                }
                if gcd(p, q) != 1 {
                    return Err(Error::InvalidParameter(format!(
                        "torus knot ({p}, {q}) is not coprime: it is a {}-component link",
                        gcd(p, q)
                    )));
                }
                positive("minor", minor)?;
                if !(major > minor && major.is_finite()) {
                    return Err(Error::InvalidParameter(format!("torus knot needs major > minor (got {major}, {minor})")));
                }
                let (p, q) = (p as f64, q as f64);
                let degree = (p + q) as usize;
                Ok(vec![TrigCurve::interpolate(degree, |t| {
                    let w = major + minor * (q * t).cos();
                    Vec3::new(w * (p * t).cos(), w * (p * t).sin(), minor * (q * t).sin())
                })])
            }
            Preset::Hopf {} => Ok(vec![
                planar_circle(Vec3::zeros(), Vec3::x(), Vec3::y(), 1.0),
                planar_circle(Vec3::x(), Vec3::x(), Vec3::z(), 1.0),
            ]),
            Preset::Borromean {} => {
                let ellipse = |a: Vec3, b: Vec3| planar_circle(Vec3::zeros(), a * 2.0, b, 1.0);
                Ok(vec![
                    ellipse(Vec3::x(), Vec3::y()),
                    ellipse(Vec3::y(), Vec3::z()),
                    ellipse(Vec3::z(), Vec3::x()),
                ])
            }
            Preset::FigureEight { half_extent } => {
                positive("half_extent", half_extent)?;
                let f = half_extent / 3.0;
                Ok(vec![TrigCurve::interpolate(5, |t| {
                    let w = 2.0 + (2.0 * t).cos();
                    Vec3::new(w * (3.0 * t).cos(), w * (3.0 * t).sin(), (4.0 * t).sin()) * f
                })])
            }
        }
    }

    pub fn components(&self) -> Result<Vec<LinkComponent>> {
        self.curves()?.into_iter().map(LinkComponent::new).collect()
    }

    pub fn link(&self, lambda: f64) -> Result<LinkSpec> {
        LinkSpec::new(lambda, self.components()?)
    }
}

pub fn circle(radius: f64) -> Preset {
    Preset::Circle {
        radius,
        center: [0.0; 3],
    }
}

pub fn torus_knot(p: u32, q: u32, major: f64, minor: f64) -> Preset {
    Preset::TorusKnot { p, q, major, minor }
}

/// The `(2, 3)` torus knot on the standard torus.
pub fn trefoil() -> Preset {
    torus_knot(2, 3, 2.0, 1.0)
}

pub fn hopf() -> Preset {
    Preset::Hopf {}
}

pub fn borromean() -> Preset {
    Preset::Borromean {}
}

pub fn figure_eight() -> Preset {
    Preset::FigureEight { half_extent: 3.0 }
}
