//! Stream lines, periodic orbits and their Floquet multipliers.

mod integrator;
mod orbit;

pub use integrator::{DenseStep, Dopri5, StepStats, Tolerances};
pub use orbit::{
    monodromy, poincare_return, refine_orbit, refine_orbit_from, Classification, Monodromy, OrbitOptions,
    PeriodicOrbit, Return, Section,
};

use crate::field::BeltramiExpansion;
use crate::geometry::{TubeChart, TubeCoords};
use crate::{Error, Mat3, Result, Vec3};

/// An autonomous vector field on R³.
pub trait VectorField: Sync {
    fn eval(&self, x: &Vec3) -> Vec3;

    /// `Dv(x)` with rows indexed by component. Central differences unless
    /// overridden.
    fn jacobian(&self, x: &Vec3) -> Mat3 {
        let h = 1e-5 * (1.0 + x.norm());
        let mut m = Mat3::zeros();
        for j in 0..3 {
            let mut e = Vec3::zeros();
            e[j] = h;
            m.set_column(j, &((self.eval(&(x + e)) - self.eval(&(x - e))) / (2.0 * h)));
        }
        m
    }
}

impl VectorField for BeltramiExpansion {
    fn eval(&self, x: &Vec3) -> Vec3 {
        BeltramiExpansion::eval(self, x)
    }

    fn jacobian(&self, x: &Vec3) -> Mat3 {
        BeltramiExpansion::jacobian(self, x)
    }
}

/// Constant field.
#[derive(Clone, Copy, Debug)]
pub struct ConstantField(pub Vec3);

impl VectorField for ConstantField {
    fn eval(&self, _: &Vec3) -> Vec3 {
        self.0
    }

    fn jacobian(&self, _: &Vec3) -> Mat3 {
        Mat3::zeros()
    }
}

/// `factor·v`.
pub struct Scaled<'a, F: ?Sized>(pub &'a F, pub f64);

impl<F: VectorField + ?Sized> VectorField for Scaled<'_, F> {
    fn eval(&self, x: &Vec3) -> Vec3 {
        self.0.eval(x) * self.1
    }

    fn jacobian(&self, x: &Vec3) -> Mat3 {
        self.0.jacobian(x) * self.1
    }
}

/// Pushforward of `∂_θ − z∂_z + ρ∂_ρ` through a tube chart: the core is a
/// hyperbolic cycle of period `|L|` with multipliers `e^{∓|L|}`. Zero where
/// the chart cannot be inverted.
pub struct TubeModelField<'a> {
    pub chart: &'a TubeChart,
}

impl VectorField for TubeModelField<'_> {
    fn eval(&self, x: &Vec3) -> Vec3 {
        match self.chart.locate(x) {
            Some(q) => {
                let [x_rho, x_z, x_theta] = self.chart.coordinate_basis(q);
                x_theta - x_z * q.z + x_rho * q.rho
            }
            None => Vec3::zeros(),
        }
    }
}

impl TubeModelField<'_> {
    /// Coordinates of `x` in the model chart.
    pub fn coords(&self, x: &Vec3) -> Option<TubeCoords> {
        self.chart.locate(x)
    }
}

/// Time-ordered samples of a stream line.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<Vec3>,
    pub stats: StepStats,
}

impl Trajectory {
    pub fn end(&self) -> Vec3 {
        *self.points.last().expect("trajectory has a start point")
    }
}

pub(crate) fn to_array(x: &Vec3) -> [f64; 3] {
    [x.x, x.y, x.z]
}

pub(crate) fn from_array(y: &[f64]) -> Vec3 {
    Vec3::new(y[0], y[1], y[2])
}

/// Integrates `x' = v(x)` from `x0` over `[0, t_end]`, recording every
/// accepted step.
pub fn integrate<F: VectorField + ?Sized>(field: &F, x0: Vec3, t_end: f64, tol: Tolerances) -> Result<Trajectory> {
    integrate_sampled(field, x0, t_end, tol, None)
}

/// Like [`integrate`], but when `samples = Some(n)` returns `n + 1` points
/// at uniform times from the dense output instead of the step points.
pub fn integrate_sampled<F: VectorField + ?Sized>(
    field: &F,
    x0: Vec3,
    t_end: f64,
    tol: Tolerances,
    samples: Option<usize>,
) -> Result<Trajectory> {
    tol.validate()?;
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidParameter(format!("t_end must be finite and non-negative (got {t_end})")));
    }
    let mut times = vec![0.0];
    let mut points = vec![x0];
    if t_end == 0.0 {
        return Ok(Trajectory {
            times,
            points,
            stats: StepStats::default(),
        });
    }
    let mut stepper = Dopri5::new(|_, y: &[f64; 3]| to_array(&field.eval(&from_array(y))), 0.0, to_array(&x0), tol);
    let mut next = 1;
    while stepper.t() < t_end {
        let step = stepper.step(t_end)?;
        match samples {
            None => {
                times.push(step.t1());
                points.push(from_array(&step.y1));
            }
            Some(n) => {
                while next <= n {
                    let t = t_end * next as f64 / n as f64;
                    if next == n {
                        if stepper.t() >= t_end {
                            times.push(t_end);
                            points.push(from_array(&step.y1));
                            next += 1;
                        }
                        break;
                    }
                    if t > step.t1() {
                        break;
                    }
                    times.push(t);
                    points.push(from_array(&step.at_time(t)));
                    next += 1;
                }
            }
        }
    }
    Ok(Trajectory {
        times,
        points,
        stats: stepper.stats,
    })
}
