//! Lifting of vector Helmholtz solutions to Beltrami fields.
//!
//! A real field `w = Re Σ A_j exp(iλ k_j·x)` with `|k_j| = 1` solves
//! `(Δ + λ²)w = 0` componentwise. On each term `curl` acts as `iλ k×`, so
//!
//! ```text
//! ṽ = (curl + λ)(curl w)/(2λ²)  ⇒  B_j = (A_⊥ + i k×A)/2,
//! ```
//!
//! the projection onto the `+1` eigenspace of `i k×`, which is spanned by
//! `e + i k×e`.

use super::{polarization, BeltramiExpansion, Member};
use crate::{Result, Vec3};
use num_complex::Complex64;

type CVec = [Complex64; 3];

fn cross(k: &Vec3, a: &CVec) -> CVec {
    [
        a[2] * k.y - a[1] * k.z,
        a[0] * k.z - a[2] * k.x,
        a[1] * k.x - a[0] * k.y,
    ]
}

/// One term `A·exp(iλ k·x)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HelmholtzTerm {
    pub k: Vec3,
    pub amplitude: CVec,
}

/// Real vector field whose components are scalar plane-wave expansions.
#[derive(Clone, Debug, PartialEq)]
pub struct HelmholtzExpansion {
    pub lambda: f64,
    pub terms: Vec<HelmholtzTerm>,
}

impl HelmholtzExpansion {
    pub fn eval(&self, x: &Vec3) -> Vec3 {
        self.terms.iter().fold(Vec3::zeros(), |acc, t| {
            let phase = Complex64::from_polar(1.0, self.lambda * t.k.dot(x));
            acc + Vec3::new(
                (t.amplitude[0] * phase).re,
                (t.amplitude[1] * phase).re,
                (t.amplitude[2] * phase).re,
            )
        })
    }

    /// The same field written as Helmholtz terms: `α Re N + β Im N` is
    /// `Re((α − iβ) N)`.
    pub fn from_beltrami(field: &BeltramiExpansion) -> Self {
        let terms = field
            .members()
            .iter()
            .map(|m| {
                let c = Complex64::new(m.alpha, -m.beta);
                let ke = m.k.cross(&m.e);
                HelmholtzTerm {
                    k: m.k,
                    amplitude: [0, 1, 2].map(|i| c * Complex64::new(m.e[i], ke[i])),
                }
            })
            .collect();
        HelmholtzExpansion {
            lambda: field.lambda(),
            terms,
        }
    }
}

/// `ṽ = (curl + λ)(curl w)/(2λ²)` term by term.
pub fn beltramize(w: &HelmholtzExpansion) -> Result<BeltramiExpansion> {
    let members = w
        .terms
        .iter()
        .map(|t| {
            let k = t.k.normalize();
            let a = t.amplitude;
            let ka: Complex64 = (0..3).map(|i| a[i] * k[i]).sum();
            let kxa = cross(&k, &a);
            let i = Complex64::i();
            let b: CVec = [0, 1, 2].map(|j| (a[j] - ka * k[j] + i * kxa[j]) * 0.5);
            // B = c (e + i k×e) and B·e = c for the canonical e.
            let e = polarization(&k);
            let c: Complex64 = (0..3).map(|j| b[j] * e[j]).sum();
            Member {
                k,
                e,
                alpha: c.re,
                beta: -c.im,
            }
        })
        .collect();
    BeltramiExpansion::new(w.lambda, members)
}
