//! The four commands of the `beltrami` binary as library calls.

use crate::dynamics::{integrate_sampled, monodromy, refine_orbit, Classification, OrbitOptions, Trajectory};
use crate::field::{
    direction_set, direction_set_rotated, fit_global, tube_residual, BeltramiExpansion, ErrorBudget, FitError,
    FitOptions, FitReport, TubeResidual,
};
use crate::geometry::{LinkSpec, TubeChart};
use crate::io::{RunConfig, SCHEMA_VERSION};
use crate::marcher::{compare_with_field, MarchConfig, Marcher, TubeGeometry};
use crate::strip::{strip_monodromy, CauchyData};
use crate::topology::{hausdorff_distance, linking_number, sample_component, tube_confinement, ClosedCurve, Confinement, Linking};
use crate::{Error, Exec, Result, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::time::Instant;

/// Process exit codes.
pub mod exit {
    pub const PASS: i32 = 0;
    /// Unparseable input, invalid parameters, corrupt field file or bad
    /// command-line usage.
    pub const PARSE: i32 = 2;
    pub const BUDGET: i32 = 3;
    /// Orbit search, integration or monodromy failure.
    pub const DYNAMICS: i32 = 4;
    /// Linking or confinement certificate failure.
    pub const TOPOLOGY: i32 = 5;
    /// The link itself is unusable: not embedded, components too close,
    /// strip data not closed.
    pub const GEOMETRY: i32 = 6;
    /// File system errors.
    pub const IO: i32 = 7;
}

/// Exit code for an error that aborts a command.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. } | Error::CorruptField { .. } | Error::InvalidParameter(_) | Error::InvalidLambda(_) => {
            exit::PARSE
        }
        Error::BudgetExceeded { .. } | Error::EmptyBasis => exit::BUDGET,
        Error::StepUnderflow { .. }
        | Error::NotTransverse
        | Error::Escape { .. }
        | Error::SeedOutsideTube { .. }
        | Error::NewtonDiverged { .. }
        | Error::MonodromyTolerance { .. }
        | Error::MarchGrowth { .. } => exit::DYNAMICS,
        Error::LeftTube { .. } | Error::CurvesTooClose { .. } | Error::LinkingDefect { .. } | Error::NotClosedCurve { .. } => {
            exit::TOPOLOGY
        }
        Error::NotEmbedded { .. }
        | Error::DegenerateTangent { .. }
        | Error::ComponentsTooClose { .. }
        | Error::NotClosed { .. } => exit::GEOMETRY,
        Error::Io(_) => exit::IO,
    }
}

/// Link with the configured eigenvalue and its tube charts.
pub fn prepare(link: &LinkSpec, config: &RunConfig) -> Result<(LinkSpec, Vec<TubeChart>)> {
    config.validate()?;
    let link = match config.lambda {
        Some(l) => link.with_lambda(l)?,
        None => link.clone(),
    };
    if link.lambda() < 0.0 {
        return Err(Error::InvalidParameter(format!("lambda must be positive (got {})", link.lambda())));
    }
    let charts = TubeChart::for_link(&link, config.tube())?;
    Ok((link, charts))
}

fn cauchy_data(charts: &[TubeChart], config: &RunConfig, exec: Exec) -> Result<Vec<CauchyData>> {
    charts.iter().map(|c| CauchyData::build(c, config.grid(), exec)).collect()
}

fn budget(charts: &[TubeChart], config: &RunConfig) -> Result<ErrorBudget> {
    ErrorBudget::uniform(&vec![config.tolerance; charts.len()], config.order)
}

#[derive(Clone, Debug)]
pub struct Synthesis {
    pub link: LinkSpec,
    pub charts: Vec<TubeChart>,
    pub field: BeltramiExpansion,
    pub report: SynthesisReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct SynthesisReport {
    pub schema_version: u32,
    pub config: RunConfig,
    pub lambda: f64,
    pub tube_radii: Vec<f64>,
    pub fit: FitReport,
    pub seconds: f64,
}

impl SynthesisReport {
    pub fn within_budget(&self) -> bool {
        self.fit.success
    }
}

/// Fits a global field to the strips of every component. An over-budget
/// fit is returned as well; check [`SynthesisReport::within_budget`].
pub fn synthesize(link: &LinkSpec, config: &RunConfig, exec: Exec) -> Result<Synthesis> {
    let start = Instant::now();
    let (link, charts) = prepare(link, config)?;
    let data = cauchy_data(&charts, config, exec)?;
    let dirs = match config.seed {
        Some(seed) => direction_set_rotated(config.directions, seed)?,
        None => direction_set(config.directions)?,
    };
    let options = FitOptions {
        ridge: config.ridge,
        derivative_rows: config.derivative_rows,
        exec,
        ..FitOptions::default()
    };
    let fit = match fit_global(&data, &budget(&charts, config)?, &dirs, link.lambda(), options) {
        Ok(f) => f,
        Err(FitError::OverBudget(f)) => *f,
        Err(FitError::Invalid(e)) => return Err(e),
    };
    let report = SynthesisReport {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        lambda: link.lambda(),
        tube_radii: charts.iter().map(|c| c.radius()).collect(),
        fit: fit.report,
        seconds: start.elapsed().as_secs_f64(),
    };
    Ok(Synthesis {
        link,
        charts,
        field: fit.expansion,
        report,
    })
}

/// Finite-difference curl and analytic divergence at random points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EigenCheck {
    pub points: usize,
    /// `max |curl_h u − λu| / (λ|u|)`.
    pub max_curl_relative: f64,
    pub max_divergence: f64,
}

/// Fourth-order central-difference curl.
pub fn fd_curl(field: &BeltramiExpansion, x: &Vec3, h: f64) -> Vec3 {
    let mut d = [[0.0; 3]; 3];
    for (j, dj) in d.iter_mut().enumerate() {
        let mut e = Vec3::zeros();
        e[j] = h;
        let f = |c: f64| field.eval(&(x + e * c));
        let g = (f(-2.0) - f(2.0) + (f(1.0) - f(-1.0)) * 8.0) / (12.0 * h);
        *dj = [g[0], g[1], g[2]];
    }
    // d[j][i] = ∂_j u_i
    Vec3::new(d[1][2] - d[2][1], d[2][0] - d[0][2], d[0][1] - d[1][0])
}

/// Checks `curl u = λu` and `div u = 0` at `n` points drawn uniformly from
/// the tubes.
pub fn eigen_check(field: &BeltramiExpansion, charts: &[TubeChart], n: usize, seed: u64) -> EigenCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lambda = field.lambda();
    let h = 1e-3 / lambda.abs().max(1.0);
    let mut out = EigenCheck {
        points: n,
        max_curl_relative: 0.0,
        max_divergence: 0.0,
    };
    for _ in 0..n {
        let c = &charts[rng.gen_range(0..charts.len())];
        let q = crate::geometry::TubeCoords::new(
            rng.gen_range(-1.0..1.0) * c.radius() * 0.5,
            rng.gen_range(-1.0..1.0) * c.half_width(),
            rng.gen_range(0.0..c.length()),
        );
        let x = c.from_tube_coords(q);
        let u = field.eval(&x);
        let rel = (fd_curl(field, &x, h) - u * lambda).norm() / (lambda.abs() * u.norm().max(1e-3));
        out.max_curl_relative = out.max_curl_relative.max(rel);
        out.max_divergence = out.max_divergence.max(field.jacobian(&x).trace().abs());
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct OrbitReport {
    pub period: f64,
    pub closure: f64,
    pub newton_iterations: usize,
    pub start: [f64; 3],
    pub mu1: (f64, f64),
    pub mu2: (f64, f64),
    pub flow_multiplier: (f64, f64),
    pub determinant: f64,
    pub liouville: f64,
    pub classification: Classification,
    pub margin: f64,
    pub hausdorff: f64,
    pub confinement: Confinement,
}

#[derive(Clone, Debug, Serialize)]
pub struct MarchReport {
    pub rho_max: f64,
    pub steps: usize,
    /// `sup |v_march − u|` on the trusted region.
    pub c0: f64,
    /// Largest first coordinate derivative of `v_march − u`.
    pub c1: f64,
    pub max_divergence: f64,
    pub equation_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ComponentReport {
    pub component: usize,
    pub length: f64,
    pub tube_radius: f64,
    pub strip: TubeResidual,
    /// Nontrivial multiplier of the core cycle of the strip field.
    pub strip_multiplier: f64,
    pub orbit: Option<OrbitReport>,
    pub orbit_error: Option<String>,
    pub march: Option<MarchReport>,
    pub march_error: Option<String>,
    pub certified: bool,
    /// Orbit polyline, for export.
    #[serde(skip)]
    pub orbit_points: Option<Vec<Vec3>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PairReport {
    pub a: usize,
    pub b: usize,
    /// Linking number of the target components.
    pub target: Option<i64>,
    pub orbits: Option<Linking>,
    pub error: Option<String>,
    pub certified: bool,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Timings {
    pub strips: f64,
    pub orbits: f64,
    pub linking: f64,
    pub march: f64,
    pub total: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Criterion {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub config: RunConfig,
    pub lambda: f64,
    /// Real basis fields, two per plane-wave direction.
    pub basis_size: usize,
    pub eigen: EigenCheck,
    pub components: Vec<ComponentReport>,
    pub pairs: Vec<PairReport>,
    pub criteria: Vec<Criterion>,
    pub pass: bool,
    pub timings: Timings,
}

impl VerificationReport {
    /// Exit code summarizing the failed criteria, in the order budget,
    /// dynamics, topology.
    pub fn exit_code(&self) -> i32 {
        let failed = |prefix: &str| self.criteria.iter().any(|c| !c.pass && c.name.starts_with(prefix));
        if self.pass {
            exit::PASS
        } else if failed("budget") {
            exit::BUDGET
        } else if failed("eigen") || failed("orbit") || failed("hyperbolic") || failed("determinant") {
            exit::DYNAMICS
        } else {
            exit::TOPOLOGY
        }
    }

    /// The report with every timing zeroed, for determinism comparisons.
    pub fn without_timings(&self) -> Self {
        VerificationReport {
            timings: Timings::default(),
            ..self.clone()
        }
    }
}

/// Thresholds for the certificates of a verification run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VerifyLimits {
    pub eigen_points: usize,
    pub curl_relative: f64,
    pub divergence: f64,
    pub determinant: f64,
    pub linking_defect: f64,
}

impl Default for VerifyLimits {
    fn default() -> Self {
        VerifyLimits {
            eigen_points: 100,
            curl_relative: 1e-6,
            divergence: 1e-8,
            determinant: 1e-4,
            linking_defect: 0.1,
        }
    }
}

fn march_component(field: &BeltramiExpansion, chart: &TubeChart, exec: Exec) -> Result<MarchReport> {
    let geometry = TubeGeometry { chart };
    let config = MarchConfig::default();
    let marcher = Marcher::new(&geometry, field.lambda(), config, exec)?;
    let rho_max = marcher.rho_max(chart.radius());
    let mut report = MarchReport {
        rho_max,
        steps: config.steps,
        c0: 0.0,
        c1: 0.0,
        max_divergence: 0.0,
        equation_residual: 0.0,
    };
    for end in [rho_max, -rho_max] {
        let levels = marcher.march(marcher.cauchy_level(), end, config.steps, rho_max)?;
        let close = compare_with_field(chart, &marcher, &levels, field);
        report.c0 = report.c0.max(close.c0);
        report.c1 = report.c1.max(close.c1);
        report.equation_residual = report.equation_residual.max(marcher.equation_residual(&levels));
        for (_, d) in marcher.divergence_residual(&levels) {
            report.max_divergence = report.max_divergence.max(d);
        }
    }
    Ok(report)
}

fn orbit_component(
    field: &BeltramiExpansion,
    chart: &TubeChart,
    config: &RunConfig,
    exec: Exec,
) -> Result<(OrbitReport, ClosedCurve)> {
    let options = OrbitOptions {
        tol: config.tolerances(),
        closure: config.closure,
        samples: config.orbit_samples,
        ..OrbitOptions::default()
    };
    let orbit = refine_orbit(field, chart, options)?;
    let m = monodromy(field, &orbit, config.tolerances())?;
    let curve = ClosedCurve::new(orbit.points.clone())?;
    let target = sample_component(chart, config.orbit_samples)?;
    let report = OrbitReport {
        period: orbit.period,
        closure: orbit.closure,
        newton_iterations: orbit.newton_iterations,
        start: [orbit.start.x, orbit.start.y, orbit.start.z],
        mu1: m.mu1,
        mu2: m.mu2,
        flow_multiplier: m.flow_multiplier,
        determinant: m.determinant,
        liouville: m.liouville,
        classification: m.classification,
        margin: m.margin,
        hausdorff: hausdorff_distance(&curve, &target, exec),
        confinement: tube_confinement(&curve, chart, exec),
    };
    Ok((report, curve))
}

/// Runs every certificate on `field` against the link: strip residuals,
/// eigen-relation, orbit refinement and monodromy per component, marched
/// local field comparison, and pairwise linking. Failures of one component
/// are recorded and the others still run.
pub fn verify(
    field: &BeltramiExpansion,
    link: &LinkSpec,
    config: &RunConfig,
    limits: VerifyLimits,
    exec: Exec,
) -> Result<VerificationReport> {
    let start = Instant::now();
    let (link, charts) = prepare(link, config)?;
    if (link.lambda() - field.lambda()).abs() > 1e-12 * link.lambda().abs() {
        return Err(Error::InvalidParameter(format!(
            "field has lambda = {} but the link asks for lambda = {}",
            field.lambda(),
            link.lambda()
        )));
    }
    let mut timings = Timings::default();

    let t = Instant::now();
    let data = cauchy_data(&charts, config, exec)?;
    let strips: Vec<TubeResidual> = data
        .iter()
        .map(|d| tube_residual(field, d, config.tolerance, exec))
        .collect();
    let strip_multipliers = charts
        .iter()
        .map(|c| strip_monodromy(c).map(|m| m.multiplier))
        .collect::<Result<Vec<_>>>()?;
    timings.strips = t.elapsed().as_secs_f64();

    let eigen = eigen_check(field, &charts, limits.eigen_points, config.seed.unwrap_or(0));

    let t = Instant::now();
    let mut curves = Vec::new();
    let mut components = Vec::new();
    for (i, chart) in charts.iter().enumerate() {
        let (orbit, orbit_error, orbit_points) = match orbit_component(field, chart, config, exec) {
            Ok((r, c)) => {
                let points = c.points().to_vec();
                curves.push(Some(c));
                (Some(r), None, Some(points))
            }
            Err(e) => {
                curves.push(None);
                (None, Some(e.to_string()), None)
            }
        };
        let certified = orbit.as_ref().is_some_and(|o| {
            o.confinement.certified()
                && o.classification == Classification::HyperbolicSaddle
                && (o.determinant - 1.0).abs() < limits.determinant
        });
        components.push(ComponentReport {
            component: i,
            length: chart.length(),
            tube_radius: chart.radius(),
            strip: strips[i].clone(),
            strip_multiplier: strip_multipliers[i],
            orbit,
            orbit_error,
            march: None,
            march_error: None,
            certified,
            orbit_points,
        });
    }
    timings.orbits = t.elapsed().as_secs_f64();

    if config.march {
        let t = Instant::now();
        for (c, chart) in components.iter_mut().zip(&charts) {
            match march_component(field, chart, exec) {
                Ok(m) => c.march = Some(m),
                Err(e) => c.march_error = Some(e.to_string()),
            }
        }
        timings.march = t.elapsed().as_secs_f64();
    }

    let t = Instant::now();
    let mut pairs = Vec::new();
    for a in 0..charts.len() {
        for b in a + 1..charts.len() {
            let target = sample_component(&charts[a], 1024)
                .and_then(|ca| linking_number(&ca, &sample_component(&charts[b], 1024)?, exec))
                .ok()
                .map(|l| l.value);
            let (orbits, error) = match (&curves[a], &curves[b]) {
                (Some(ca), Some(cb)) => match linking_number(ca, cb, exec) {
                    Ok(l) => (Some(l), None),
                    Err(e) => (None, Some(e.to_string())),
                },
                _ => (None, Some("orbit missing".to_string())),
            };
            let certified = match (target, orbits) {
                (Some(t), Some(l)) => t == l.value && l.defect < limits.linking_defect,
                _ => false,
            };
            pairs.push(PairReport {
                a,
                b,
                target,
                orbits,
                error,
                certified,
            });
        }
    }
    timings.linking = t.elapsed().as_secs_f64();

    let mut criteria = Vec::new();
    let mut push = |name: &str, pass: bool, detail: String| {
        criteria.push(Criterion {
            name: name.to_string(),
            pass,
            detail,
        })
    };
    for c in &components {
        let i = c.component;
        push(
            &format!("budget[{i}]"),
            c.strip.within_budget,
            format!("residual {:.3e} vs tolerance {:.1e}", c.strip.max_residual, c.strip.tolerance),
        );
    }
    push(
        "eigen",
        eigen.max_curl_relative < limits.curl_relative && eigen.max_divergence < limits.divergence,
        format!("curl {:.2e}, div {:.2e}", eigen.max_curl_relative, eigen.max_divergence),
    );
    for c in &components {
        let i = c.component;
        match &c.orbit {
            None => push(&format!("orbit[{i}]"), false, c.orbit_error.clone().unwrap_or_default()),
            Some(o) => {
                push(&format!("orbit[{i}]"), true, format!("period {:.6}, closure {:.1e}", o.period, o.closure));
                push(
                    &format!("hyperbolic[{i}]"),
                    o.classification == Classification::HyperbolicSaddle,
                    format!("|mu1| {:.4e}, |mu2| {:.4e}, margin {:.3e}", modulus(o.mu1), modulus(o.mu2), o.margin),
                );
                push(
                    &format!("determinant[{i}]"),
                    (o.determinant - 1.0).abs() < limits.determinant,
                    format!("det - 1 = {:.2e}", o.determinant - 1.0),
                );
                push(
                    &format!("confinement[{i}]"),
                    o.confinement.certified(),
                    format!(
                        "confined {}, winding {}, hausdorff {:.3e}",
                        o.confinement.confined, o.confinement.winding, o.hausdorff
                    ),
                );
            }
        }
    }
    for p in &pairs {
        push(
            &format!("linking[{},{}]", p.a, p.b),
            p.certified,
            match (&p.orbits, p.target) {
                (Some(l), t) => format!("orbits {} (defect {:.1e}), target {t:?}", l.value, l.defect),
                (None, _) => p.error.clone().unwrap_or_default(),
            },
        );
    }
    let pass = criteria.iter().all(|c| c.pass);
    timings.total = start.elapsed().as_secs_f64();
    Ok(VerificationReport {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        lambda: field.lambda(),
        basis_size: 2 * field.len(),
        eigen,
        components,
        pairs,
        criteria,
        pass,
        timings,
    })
}

pub fn modulus(z: (f64, f64)) -> f64 {
    z.0.hypot(z.1)
}

/// Integrates the stream line of every seed up to `t_end`, sampled at
/// `samples + 1` uniform times. Failures are returned per seed.
pub fn trace(
    field: &BeltramiExpansion,
    seeds: &[Vec3],
    t_end: f64,
    samples: usize,
    config: &RunConfig,
    exec: Exec,
) -> Vec<Result<Trajectory>> {
    exec.map_slice(seeds, |x| {
        integrate_sampled(field, *x, t_end, config.tolerances(), Some(samples.max(1)))
    })
}

/// Field values at the grid points, in grid order.
pub fn sample(field: &BeltramiExpansion, points: &[Vec3], exec: Exec) -> Vec<Vec3> {
    exec.map_slice(points, |x| field.eval(x))
}
