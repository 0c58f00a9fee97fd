//! Global Beltrami fields as finite sums of helical plane waves.
//!
//! Each member is `N(x) = (e + i k×e)·exp(iλ k·x)` with `|k| = |e| = 1` and
//! `e ⊥ k`. Since `i k×N = N`, every member satisfies `curl N = λN` exactly,
//! and so does any real combination `u = Σ α·Re N + β·Im N`.

mod budget;
mod fit;
mod helmholtz;

pub use budget::{make_error_budget, multi_index_count, BudgetCheck, ErrorBudget};
pub use fit::{fit_global, tube_residual, Fit, FitError, FitOptions, FitReport, TubeResidual};
pub use helmholtz::{beltramize, HelmholtzExpansion, HelmholtzTerm};

use crate::{Error, Mat3, Result, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Real and imaginary parts of `N = (e + i k×e)·exp(iλ k·x)`.
pub fn basis_eval(k: &Vec3, e: &Vec3, lambda: f64, x: &Vec3) -> (Vec3, Vec3) {
    let ke = k.cross(e);
    let (sin, cos) = (lambda * k.dot(x)).sin_cos();
    (e * cos - ke * sin, e * sin + ke * cos)
}

/// Canonical unit polarization orthogonal to `k`.
pub fn polarization(k: &Vec3) -> Vec3 {
    let axis = if k.x.abs() <= k.y.abs() && k.x.abs() <= k.z.abs() {
        Vec3::x()
    } else if k.y.abs() <= k.z.abs() {
        Vec3::y()
    } else {
        Vec3::z()
    };
    (axis - k * k.dot(&axis)).normalize()
}

/// One plane-wave member of an expansion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Member {
    pub k: Vec3,
    pub e: Vec3,
    pub alpha: f64,
    pub beta: f64,
}

/// Exact Beltrami field `u = Σ α_j·Re N_j + β_j·Im N_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct BeltramiExpansion {
    lambda: f64,
    members: Vec<Member>,
}

impl BeltramiExpansion {
    /// Checks `λ > 0`, unit `k` and `e`, and `k·e = 0` to `1e-12`.
    pub fn new(lambda: f64, members: Vec<Member>) -> Result<Self> {
        if !lambda.is_finite() || lambda == 0.0 {
            return Err(Error::InvalidLambda(lambda));
        }
        if lambda < 0.0 {
            return Err(Error::InvalidParameter(format!("lambda must be positive (got {lambda})")));
        }
        for (i, m) in members.iter().enumerate() {
            let bad = |message: String| Err(Error::CorruptField { member: i, message });
            if ![m.alpha, m.beta].iter().chain(m.k.iter()).chain(m.e.iter()).all(|v| v.is_finite()) {
                return bad("non-finite value".into());
            }
            if (m.k.norm() - 1.0).abs() > 1e-12 {
                return bad(format!("|k| = {:.17} is not 1", m.k.norm()));
            }
            if (m.e.norm() - 1.0).abs() > 1e-12 {
                return bad(format!("|e| = {:.17} is not 1", m.e.norm()));
            }
            if m.k.dot(&m.e).abs() > 1e-12 {
                return bad(format!("k·e = {:.3e} is not 0", m.k.dot(&m.e)));
            }
        }
        Ok(BeltramiExpansion { lambda, members })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// `u(x)`.
    pub fn eval(&self, x: &Vec3) -> Vec3 {
        self.members.iter().fold(Vec3::zeros(), |acc, m| {
            let (re, im) = basis_eval(&m.k, &m.e, self.lambda, x);
            acc + re * m.alpha + im * m.beta
        })
    }

    /// `Du(x)`, rows indexed by field component.
    pub fn jacobian(&self, x: &Vec3) -> Mat3 {
        self.eval_with_jacobian(x).1
    }

    pub fn eval_with_jacobian(&self, x: &Vec3) -> (Vec3, Mat3) {
        let mut u = Vec3::zeros();
        let mut du = Mat3::zeros();
        for m in &self.members {
            let (re, im) = basis_eval(&m.k, &m.e, self.lambda, x);
            u += re * m.alpha + im * m.beta;
            // ∂_j Re N = −λ k_j Im N, ∂_j Im N = λ k_j Re N.
            let col = (re * m.beta - im * m.alpha) * self.lambda;
            du += col * m.k.transpose();
        }
        (u, du)
    }

    /// Same field multiplied by a constant.
    pub fn scaled(&self, factor: f64) -> Self {
        BeltramiExpansion {
            lambda: self.lambda,
            members: self
                .members
                .iter()
                .map(|m| Member {
                    alpha: m.alpha * factor,
                    beta: m.beta * factor,
                    ..*m
                })
                .collect(),
        }
    }
}

/// Curl from a Jacobian with rows indexed by component.
pub fn curl_of(du: &Mat3) -> Vec3 {
    Vec3::new(
        du[(2, 1)] - du[(1, 2)],
        du[(0, 2)] - du[(2, 0)],
        du[(1, 0)] - du[(0, 1)],
    )
}

/// A unit direction with two orthonormal polarizations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Direction {
    pub k: Vec3,
    pub e1: Vec3,
    pub e2: Vec3,
}

impl Direction {
    pub fn new(k: Vec3) -> Self {
        let k = k.normalize();
        let e1 = polarization(&k);
        Direction { k, e1, e2: k.cross(&e1) }
    }
}

/// `n` Fibonacci-sphere directions.
///
/// The second polarization `e2 = k×e1` spans the same helical member up to a
/// factor `−i`, so the fit uses `e1` only: two real fields per direction.
pub fn direction_set(n: usize) -> Result<Vec<Direction>> {
    if n == 0 {
        return Err(Error::EmptyBasis);
    }
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    Ok((0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * (i as f64 + 0.5);
            Direction::new(Vec3::new(r * phi.cos(), r * phi.sin(), z))
        })
        .collect())
}

/// [`direction_set`] under a uniformly random rotation drawn from `seed`.
pub fn direction_set_rotated(n: usize, seed: u64) -> Result<Vec<Direction>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Shoemake's uniform unit quaternion.
    let (u1, u2, u3): (f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen());
    let tau = std::f64::consts::TAU;
    let q = nalgebra::Quaternion::new(
        (1.0 - u1).sqrt() * (tau * u2).sin(),
        (1.0 - u1).sqrt() * (tau * u2).cos(),
        u1.sqrt() * (tau * u3).sin(),
        u1.sqrt() * (tau * u3).cos(),
    );
    let rot = nalgebra::UnitQuaternion::from_quaternion(q);
    Ok(direction_set(n)?
        .into_iter()
        .map(|d| Direction::new(rot * d.k))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fd_curl(f: &impl Fn(&Vec3) -> Vec3, x: &Vec3, h: f64) -> Vec3 {
        let d = |i: usize| {
            let mut e = Vec3::zeros();
            e[i] = h;
            (f(&(x + e)) - f(&(x - e))) / (2.0 * h)
        };
        let (dx, dy, dz) = (d(0), d(1), d(2));
        Vec3::new(dy.z - dz.y, dz.x - dx.z, dx.y - dy.x)
    }

    fn sample_expansion() -> BeltramiExpansion {
        let members = direction_set(7)
            .unwrap()
            .iter()
            .enumerate()
            .map(|(i, d)| Member {
                k: d.k,
                e: d.e1,
                alpha: 0.3 + 0.1 * i as f64,
                beta: -0.2 + 0.07 * i as f64,
            })
            .collect();
        BeltramiExpansion::new(1.7, members).unwrap()
    }

    #[test]
    fn vertical_member_is_helical() {
        let k = Vec3::z();
        let e = Vec3::x();
        for &z in &[0.0, 0.4, 2.1] {
            let (re, _) = basis_eval(&k, &e, 1.0, &Vec3::new(0.0, 0.0, z));
            assert!((re - Vec3::new(z.cos(), -z.sin(), 0.0)).norm() < 1e-15);
        }
        let f = |x: &Vec3| basis_eval(&k, &e, 1.0, x).0;
        let x = Vec3::new(0.1, 0.2, 0.7);
        assert!((fd_curl(&f, &x, 1e-5) - f(&x)).norm() < 1e-9);
        let (re, im) = basis_eval(&k, &e, 1.0, &Vec3::zeros());
        assert_eq!(re, e);
        assert_eq!(im, k.cross(&e));
    }

    #[test]
    fn members_are_eigenfields() {
        let exp = sample_expansion();
        let f = |x: &Vec3| exp.eval(x);
        for i in 0..20 {
            let x = Vec3::new((i as f64 * 0.7).sin(), (i as f64 * 1.3).cos(), 0.1 * i as f64);
            let u = exp.eval(&x);
            let curl = fd_curl(&f, &x, 1e-5);
            assert!((curl - u * exp.lambda()).norm() < 1e-6 * (1.0 + u.norm()));
        }
    }

    #[test]
    fn jacobian_is_traceless_and_matches_differences() {
        let exp = sample_expansion();
        let h = 1e-6;
        for i in 0..10 {
            let x = Vec3::new(0.3 * i as f64, -0.2 * i as f64, 1.0 - 0.15 * i as f64);
            let (u, du) = exp.eval_with_jacobian(&x);
            assert!(du.trace().abs() < 1e-12);
            assert!((curl_of(&du) - u * exp.lambda()).norm() < 1e-10 * (1.0 + u.norm()));
            for j in 0..3 {
                let mut e = Vec3::zeros();
                e[j] = h;
                let col = (exp.eval(&(x + e)) - exp.eval(&(x - e))) / (2.0 * h);
                assert!((col - du.column(j)).norm() < 1e-6);
            }
        }
    }

    #[test]
    fn single_member_at_origin() {
        let d = Direction::new(Vec3::new(1.0, 2.0, -0.5));
        let exp = BeltramiExpansion::new(
            2.0,
            vec![Member {
                k: d.k,
                e: d.e1,
                alpha: 0.6,
                beta: -1.1,
            }],
        )
        .unwrap();
        let expected = d.e1 * 0.6 + d.k.cross(&d.e1) * -1.1;
        assert!((exp.eval(&Vec3::zeros()) - expected).norm() < 1e-15);
    }

    #[test]
    fn invalid_members_are_rejected() {
        let good = Member {
            k: Vec3::z(),
            e: Vec3::x(),
            alpha: 1.0,
            beta: 0.0,
        };
        assert!(BeltramiExpansion::new(1.0, vec![good]).is_ok());
        let long_k = Member {
            k: Vec3::new(0.0, 0.0, 1.0 + 1e-9),
            ..good
        };
        assert!(matches!(
            BeltramiExpansion::new(1.0, vec![good, long_k]),
            Err(Error::CorruptField { member: 1, .. })
        ));
        let skew = Member {
            e: Vec3::new(1.0, 0.0, 1e-6).normalize(),
            ..good
        };
        assert!(BeltramiExpansion::new(1.0, vec![skew]).is_err());
        assert!(matches!(BeltramiExpansion::new(0.0, vec![good]), Err(Error::InvalidLambda(_))));
    }

    #[test]
    fn fibonacci_directions_spread() {
        let dirs = direction_set(6).unwrap();
        let mut min_angle = f64::INFINITY;
        for a in 0..6 {
            for b in a + 1..6 {
                min_angle = min_angle.min(dirs[a].k.dot(&dirs[b].k).clamp(-1.0, 1.0).acos());
            }
        }
        assert!(min_angle.to_degrees() > 40.0, "{}", min_angle.to_degrees());
        for n in [1, 13, 200] {
            for d in direction_set(n).unwrap() {
                assert_relative_eq!(d.k.norm(), 1.0, epsilon = 1e-15);
                assert!(d.k.dot(&d.e1).abs() < 1e-15);
                assert!(d.e1.dot(&d.e2).abs() < 1e-15);
            }
        }
        assert_eq!(direction_set(1).unwrap().len(), 1);
        assert!(direction_set(0).is_err());
    }

    #[test]
    fn rotated_directions_are_deterministic() {
        let a = direction_set_rotated(50, 7).unwrap();
        let b = direction_set_rotated(50, 7).unwrap();
        let c = direction_set_rotated(50, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        for d in &a {
            assert!((d.k.norm() - 1.0).abs() < 1e-14);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn unit() -> impl Strategy<Value = Vec3> {
            (-1.0..1.0f64, 0.0..std::f64::consts::TAU).prop_map(|(c, phi)| {
                let r = (1.0 - c * c).sqrt();
                Vec3::new(r * phi.cos(), r * phi.sin(), c)
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn every_member_is_an_exact_eigenfield(
                k in unit(),
                alpha in -2.0..2.0f64,
                beta in -2.0..2.0f64,
                lambda in 0.2..5.0f64,
                x in prop::array::uniform3(-3.0..3.0f64),
            ) {
                let helper = if k.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
                let e = (helper - k * k.dot(&helper)).normalize();
                let f = BeltramiExpansion::new(lambda, vec![Member { k, e, alpha, beta }]).unwrap();
                let x = Vec3::from(x);
                let (u, du) = f.eval_with_jacobian(&x);
                prop_assert!((curl_of(&du) - u * lambda).norm() < 1e-12 * (1.0 + lambda * u.norm()));
                prop_assert!(du.trace().abs() < 1e-12 * (1.0 + lambda * u.norm()));
                let fd = fd_curl(&|p: &Vec3| f.eval(p), &x, 1e-4);
                prop_assert!((fd - u * lambda).norm() < 1e-6 * (1.0 + lambda * u.norm()));
            }
        }
    }
}
