//! Weighted ridge least-squares fit of an expansion to strip Cauchy data.

use super::{basis_eval, BeltramiExpansion, Direction, ErrorBudget, Member};
use crate::exec::Exec;
use crate::strip::CauchyData;
use crate::{Error, Vec3};
use faer::linalg::solvers::SolveLstsq;
use faer::Mat;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitOptions {
    /// Tikhonov parameter on the coefficient vector.
    pub ridge: f64,
    /// Also match `∂_s w` and `∂_t w` along the strip.
    pub derivative_rows: bool,
    /// Weight of derivative rows relative to value rows, in units of the
    /// strip half-width.
    pub derivative_weight: f64,
    pub exec: Exec,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            ridge: 1e-10,
            derivative_rows: false,
            derivative_weight: 1.0,
            exec: Exec::default(),
        }
    }
}

/// Residuals of the fitted field on one strip.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TubeResidual {
    pub component: usize,
    pub samples: usize,
    /// `ε̃_a`.
    pub tolerance: f64,
    /// `max |u − w|` over the strip samples.
    pub max_residual: f64,
    pub rms_residual: f64,
    /// `max |∂u − ∂w|` along the strip directions `s` and `t`.
    pub max_derivative_residual: f64,
    pub within_budget: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub tubes: Vec<TubeResidual>,
    pub directions: usize,
    /// Real basis fields (two per direction).
    pub basis_size: usize,
    pub rows: usize,
    pub ridge: f64,
    pub derivative_rows: bool,
    /// `max |R_ii| / min |R_ii|` of the QR factor, a conditioning proxy.
    pub r_diagonal_ratio: f64,
    /// Weighted residual sum of squares plus the ridge term at the optimum.
    pub objective: f64,
    pub coefficient_norm: f64,
    pub success: bool,
}

#[derive(Clone, Debug)]
pub struct Fit {
    pub expansion: BeltramiExpansion,
    pub report: FitReport,
}

#[derive(Debug, thiserror::Error)]
pub enum FitError {
    #[error(transparent)]
    Invalid(#[from] Error),
    /// The solve finished but some tube exceeds its tolerance; the fit is
    /// kept for diagnosis.
    #[error("fit over budget: {}", worst_message(.0))]
    OverBudget(Box<Fit>),
}

fn worst_message(fit: &Fit) -> String {
    Error::from(FitError::OverBudget(Box::new(fit.clone()))).to_string()
}

impl From<FitError> for Error {
    fn from(e: FitError) -> Self {
        match e {
            FitError::Invalid(e) => e,
            FitError::OverBudget(fit) => {
                let worst = fit
                    .report
                    .tubes
                    .iter()
                    .max_by(|a, b| (a.max_residual / a.tolerance).total_cmp(&(b.max_residual / b.tolerance)))
                    .expect("report lists every tube");
                Error::BudgetExceeded {
                    tube: worst.component,
                    residual: worst.max_residual,
                    tolerance: worst.tolerance,
                }
            }
        }
    }
}

/// Fits `u = Σ α Re N + β Im N` over the given directions to the Cauchy data
/// of every strip, minimizing `Σ ω_i |u(x_i) − w(x_i)|² + ridge·|c|²` with
/// `ω` from the budget. Solved by Householder QR of the augmented system.
pub fn fit_global(
    data: &[CauchyData],
    budget: &ErrorBudget,
    basis: &[Direction],
    lambda: f64,
    options: FitOptions,
) -> Result<Fit, FitError> {
    if basis.is_empty() {
        return Err(Error::EmptyBasis.into());
    }
    if data.is_empty() {
        return Err(Error::InvalidParameter("fit needs Cauchy data for at least one tube".into()).into());
    }
    if !(options.ridge >= 0.0 && options.ridge.is_finite()) {
        return Err(Error::InvalidParameter(format!("ridge must be non-negative (got {})", options.ridge)).into());
    }
    for d in data {
        if d.component >= budget.tolerances().len() {
            return Err(Error::InvalidParameter(format!("no budget entry for tube {}", d.component)).into());
        }
    }
    // Validates λ before any heavy work.
    BeltramiExpansion::new(lambda, Vec::new())?;

    let per_node = if options.derivative_rows { 9 } else { 3 };
    // (point, weight, derivative scale, s-tangent, t-tangent) for every row block.
    struct Sample {
        x: Vec3,
        sqrt_w: f64,
        d_scale: f64,
        d_s: Vec3,
        d_t: Vec3,
        target: [f64; 9],
    }
    let mut samples = Vec::new();
    for d in data {
        let sqrt_w = budget.weight(d.component).sqrt();
        let d_scale = options.derivative_weight * d.half_width;
        for n in &d.nodes {
            let mut target = [0.0; 9];
            target[..3].copy_from_slice(n.w.as_slice());
            target[3..6].copy_from_slice((n.dw_ds / n.d_s.norm()).as_slice());
            target[6..].copy_from_slice(n.dw_dt.as_slice());
            samples.push(Sample {
                x: n.point,
                sqrt_w,
                d_scale,
                d_s: n.d_s / n.d_s.norm(),
                d_t: n.d_t,
                target,
            });
        }
    }
    let ncols = 2 * basis.len();
    let nrows = samples.len() * per_node + ncols;
    let mut a = Mat::<f64>::zeros(nrows, ncols);
    let batch = 32;
    for start in (0..basis.len()).step_by(batch) {
        let end = (start + batch).min(basis.len());
        let columns = options.exec.map(end - start, |j| {
            let dir = &basis[start + j];
            let mut re_col = vec![0.0; samples.len() * per_node];
            let mut im_col = vec![0.0; samples.len() * per_node];
            for (i, s) in samples.iter().enumerate() {
                let (re, im) = basis_eval(&dir.k, &dir.e1, lambda, &s.x);
                let r = i * per_node;
                for c in 0..3 {
                    re_col[r + c] = s.sqrt_w * re[c];
                    im_col[r + c] = s.sqrt_w * im[c];
                }
                if options.derivative_rows {
                    // Directional derivative along v: λ(k·v)·(−Im N, Re N).
                    for (o, v) in [(3, s.d_s), (6, s.d_t)] {
                        let f = lambda * dir.k.dot(&v) * s.sqrt_w * s.d_scale;
                        for c in 0..3 {
                            re_col[r + o + c] = -f * im[c];
                            im_col[r + o + c] = f * re[c];
                        }
                    }
                }
            }
            (re_col, im_col)
        });
        for (j, (re_col, im_col)) in columns.into_iter().enumerate() {
            let c = 2 * (start + j);
            for (i, (re, im)) in re_col.into_iter().zip(im_col).enumerate() {
                a[(i, c)] = re;
                a[(i, c + 1)] = im;
            }
        }
    }
    let sqrt_ridge = options.ridge.sqrt();
    let base = samples.len() * per_node;
    for j in 0..ncols {
        a[(base + j, j)] = sqrt_ridge;
    }
    let mut b = Mat::<f64>::zeros(nrows, 1);
    for (i, s) in samples.iter().enumerate() {
        for c in 0..per_node {
            let scale = if c < 3 { s.sqrt_w } else { s.sqrt_w * s.d_scale };
            b[(i * per_node + c, 0)] = scale * s.target[c];
        }
    }

    let qr = a.qr();
    let coeffs = qr.solve_lstsq(&b);
    let r = qr.thin_R();
    let diag: Vec<f64> = (0..ncols).map(|i| r[(i, i)].abs()).collect();
    let r_diagonal_ratio = diag.iter().cloned().fold(0.0, f64::max) / diag.iter().cloned().fold(f64::INFINITY, f64::min);
    let residual = &a * &coeffs - &b;
    let objective = (0..nrows).map(|i| residual[(i, 0)].powi(2)).sum::<f64>();
    let coefficient_norm = (0..ncols).map(|i| coeffs[(i, 0)].powi(2)).sum::<f64>().sqrt();
    drop(a);

    let members = basis
        .iter()
        .enumerate()
        .map(|(j, d)| Member {
            k: d.k,
            e: d.e1,
            alpha: coeffs[(2 * j, 0)],
            beta: coeffs[(2 * j + 1, 0)],
        })
        .collect();
    let expansion = BeltramiExpansion::new(lambda, members)?;

    let tubes: Vec<TubeResidual> = data
        .iter()
        .map(|d| tube_residual(&expansion, d, budget.tolerance(d.component), options.exec))
        .collect();
    let success = tubes.iter().all(|t| t.within_budget);
    let report = FitReport {
        tubes,
        directions: basis.len(),
        basis_size: ncols,
        rows: nrows,
        ridge: options.ridge,
        derivative_rows: options.derivative_rows,
        r_diagonal_ratio,
        objective,
        coefficient_norm,
        success,
    };
    let fit = Fit { expansion, report };
    if success {
        Ok(fit)
    } else {
        Err(FitError::OverBudget(Box::new(fit)))
    }
}

/// Residuals of `expansion` against the Cauchy data of one strip.
pub fn tube_residual(expansion: &BeltramiExpansion, data: &CauchyData, tolerance: f64, exec: Exec) -> TubeResidual {
    let errs = exec.map_slice(&data.nodes, |n| {
        let (u, du) = expansion.eval_with_jacobian(&n.point);
        let value = (u - n.w).norm();
        let along_s = (du * n.d_s - n.dw_ds).norm() / n.d_s.norm();
        let along_t = (du * n.d_t - n.dw_dt).norm();
        (value, along_s.max(along_t))
    });
    let max_residual = errs.iter().map(|e| e.0).fold(0.0, f64::max);
    let rms_residual = (errs.iter().map(|e| e.0 * e.0).sum::<f64>() / errs.len() as f64).sqrt();
    TubeResidual {
        component: data.component,
        samples: errs.len(),
        tolerance,
        max_residual,
        rms_residual,
        max_derivative_residual: errs.iter().map(|e| e.1).fold(0.0, f64::max),
        within_budget: max_residual < tolerance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::direction_set;
    use crate::geometry::{LinkComponent, LinkSpec, TubeChart, TubeConfig};
    use crate::strip::{CauchyNode, StripGrid, StripMetric};
    use crate::trig::{TrigCurve, TrigSeries};

    fn circle_data(radius: f64, grid: StripGrid) -> CauchyData {
        let c = LinkComponent::new(TrigCurve::new(
            TrigSeries::new(vec![0.0, radius], vec![]),
            TrigSeries::new(vec![0.0], vec![radius]),
            TrigSeries::constant(0.0),
        ))
        .unwrap();
        let link = LinkSpec::new(1.0, vec![c]).unwrap();
        let chart = TubeChart::for_link(&link, TubeConfig::default()).unwrap().remove(0);
        CauchyData::build(&chart, grid, Exec::default()).unwrap()
    }

    /// Replaces the targets of `data` by a known expansion's values.
    fn retarget(data: &CauchyData, target: &BeltramiExpansion) -> CauchyData {
        let nodes = data
            .nodes
            .iter()
            .map(|n| {
                let (u, du) = target.eval_with_jacobian(&n.point);
                CauchyNode {
                    w: u,
                    dw_ds: du * n.d_s,
                    dw_dt: du * n.d_t,
                    metric: StripMetric { ..n.metric },
                    ..*n
                }
            })
            .collect();
        CauchyData { nodes, ..data.clone() }
    }

    #[test]
    fn member_of_the_span_is_recovered() {
        let dirs = direction_set(12).unwrap();
        let target = BeltramiExpansion::new(
            2.0,
            vec![Member {
                k: dirs[5].k,
                e: dirs[5].e1,
                alpha: 1.0,
                beta: 0.0,
            }],
        )
        .unwrap();
        let grid = StripGrid {
            nodes_per_2pi: 64,
            t_nodes: 9,
        };
        let data = retarget(&circle_data(1.0, grid), &target);
        let budget = ErrorBudget::uniform(&[1e-6], 0).unwrap();
        let options = FitOptions {
            ridge: 0.0,
            ..FitOptions::default()
        };
        let fit = fit_global(&[data], &budget, &dirs, 2.0, options).unwrap();
        for (j, m) in fit.expansion.members().iter().enumerate() {
            let expected = if j == 5 { 1.0 } else { 0.0 };
            assert!((m.alpha - expected).abs() < 1e-8, "{j}: {}", m.alpha);
            assert!(m.beta.abs() < 1e-8);
        }
        assert!(fit.report.tubes[0].max_residual < 1e-10);
        assert!(fit.report.success);
    }

    #[test]
    fn superset_never_raises_objective() {
        let grid = StripGrid {
            nodes_per_2pi: 48,
            t_nodes: 5,
        };
        let data = circle_data(1.0, grid);
        let budget = ErrorBudget::uniform(&[1.0], 0).unwrap();
        let all = direction_set(40).unwrap();
        let objective = |dirs: &[Direction]| match fit_global(std::slice::from_ref(&data), &budget, dirs, 4.0, FitOptions::default()) {
            Ok(f) => f.report.objective,
            Err(FitError::OverBudget(f)) => f.report.objective,
            Err(e) => panic!("{e}"),
        };
        let small = objective(&all[..20]);
        let large = objective(&all);
        assert!(large <= small + 1e-12, "{large} > {small}");
    }

    #[test]
    fn over_budget_keeps_the_fit() {
        let grid = StripGrid {
            nodes_per_2pi: 32,
            t_nodes: 5,
        };
        let data = circle_data(1.0, grid);
        let budget = ErrorBudget::uniform(&[1e-9], 0).unwrap();
        let dirs = direction_set(6).unwrap();
        match fit_global(&[data], &budget, &dirs, 1.0, FitOptions::default()) {
            Err(FitError::OverBudget(fit)) => {
                assert!(!fit.report.success);
                assert_eq!(fit.report.tubes.len(), 1);
                assert!(matches!(Error::from(FitError::OverBudget(fit)), Error::BudgetExceeded { tube: 0, .. }));
            }
            other => panic!("expected over-budget, got {other:?}"),
        }
    }

    #[test]
    fn empty_basis_is_rejected() {
        let data = circle_data(
            1.0,
            StripGrid {
                nodes_per_2pi: 16,
                t_nodes: 3,
            },
        );
        let budget = ErrorBudget::uniform(&[1.0], 0).unwrap();
        assert!(matches!(
            fit_global(&[data], &budget, &[], 1.0, FitOptions::default()),
            Err(FitError::Invalid(Error::EmptyBasis))
        ));
    }

    #[test]
    fn derivative_rows_reduce_derivative_residual() {
        let grid = StripGrid {
            nodes_per_2pi: 64,
            t_nodes: 9,
        };
        let data = circle_data(1.0, grid);
        let budget = ErrorBudget::uniform(&[1.0], 0).unwrap();
        let dirs = direction_set(120).unwrap();
        let run = |derivative_rows| {
            let options = FitOptions {
                derivative_rows,
                ..FitOptions::default()
            };
            match fit_global(std::slice::from_ref(&data), &budget, &dirs, 6.0, options) {
                Ok(f) => f.report.tubes[0].clone(),
                Err(FitError::OverBudget(f)) => f.report.tubes[0].clone(),
                Err(e) => panic!("{e}"),
            }
        };
        let (plain, with) = (run(false), run(true));
        assert!(with.max_derivative_residual <= plain.max_derivative_residual * 1.01);
    }
}
