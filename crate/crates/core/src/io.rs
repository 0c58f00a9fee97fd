//! File formats: link specs, field files, run configuration, seeds, sample
//! grids and delimited tables.
//!
//! Floats written by this module use 17 significant digits, so every value
//! reads back bitwise.

use crate::dynamics::Tolerances;
use crate::field::{BeltramiExpansion, Member};
use crate::geometry::{LinkComponent, LinkSpec, TubeConfig};
use crate::presets::Preset;
use crate::strip::StripGrid;
use crate::trig::{TrigCurve, TrigSeries};
use crate::{Error, Result, Vec3};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;
use toml::Spanned;

pub const SCHEMA_VERSION: u32 = 1;

const FIELD_MAGIC: &str = "beltrami-field";

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// The name between the first pair of backticks in a serde message.
fn quoted_field(message: &str) -> String {
    message.split('`').nth(1).unwrap_or("").to_string()
}

fn toml_error(text: &str, e: toml::de::Error) -> Error {
    let line = e.span().map_or(1, |s| line_of(text, s.start));
    let message = e.message().to_string();
    Error::parse(line, quoted_field(&message), message)
}

fn read_text(path: &Path) -> Result<String> {
    Ok(std::fs::read_to_string(path)?)
}

// ---------------------------------------------------------------- link files

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLink {
    schema: Option<u32>,
    lambda: Spanned<f64>,
    components: Vec<Spanned<toml::Table>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierAxis {
    /// `a₀, a₁, …`.
    pub cos: Vec<f64>,
    /// `b₁, b₂, …`.
    #[serde(default)]
    pub sin: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fourier {
    pub x: FourierAxis,
    pub y: FourierAxis,
    pub z: FourierAxis,
}

impl Fourier {
    pub fn curve(&self) -> TrigCurve {
        let s = |a: &FourierAxis| TrigSeries::new(a.cos.clone(), a.sin.clone());
        TrigCurve::new(s(&self.x), s(&self.y), s(&self.z))
    }

    pub fn from_curve(c: &TrigCurve) -> Self {
        let a = |s: &TrigSeries| FourierAxis {
            cos: s.cos_coefficients().to_vec(),
            sin: s.sin_coefficients()[1..].to_vec(),
        };
        Fourier {
            x: a(&c.x),
            y: a(&c.y),
            z: a(&c.z),
        }
    }
}

/// One `[[components]]` entry: a preset (possibly several components) or
/// explicit coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComponentEntry {
    Preset(Preset),
    Fourier { fourier: Fourier },
}

/// A parsed link file.
#[derive(Clone, Debug)]
pub struct LinkFile {
    pub lambda: f64,
    pub entries: Vec<ComponentEntry>,
}

impl LinkFile {
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawLink = toml::from_str(text).map_err(|e| toml_error(text, e))?;
        if let Some(v) = raw.schema {
            if v != SCHEMA_VERSION {
                return Err(Error::parse(1, "schema", format!("unsupported schema version {v}")));
            }
        }
        let lambda_line = line_of(text, raw.lambda.span().start);
        let lambda = raw.lambda.into_inner();
        if !lambda.is_finite() || lambda == 0.0 {
            return Err(Error::InvalidLambda(lambda));
        }
        if lambda < 0.0 {
            return Err(Error::parse(lambda_line, "lambda", format!("lambda must be positive (got {lambda})")));
        }
        if raw.components.is_empty() {
            return Err(Error::parse(1, "components", "link has no components"));
        }
        let entries = raw
            .components
            .into_iter()
            .enumerate()
            .map(|(i, c)| {
                let line = line_of(text, c.span().start);
                let table = c.into_inner();
                let field = format!("components[{i}]");
                let entry = if table.contains_key("preset") {
                    table.try_into::<Preset>().map(ComponentEntry::Preset)
                } else if table.contains_key("fourier") {
                    #[derive(Deserialize)]
                    #[serde(deny_unknown_fields)]
                    struct F {
                        fourier: Fourier,
                    }
                    table.try_into::<F>().map(|f| ComponentEntry::Fourier { fourier: f.fourier })
                } else {
                    return Err(Error::parse(line, field, "expected `preset` or `fourier`"));
                };
                entry.map_err(|e| {
                    let message = e.message().to_string();
                    let inner = quoted_field(&message);
                    let name = if inner.is_empty() { field.clone() } else { format!("{field}.{inner}") };
                    Error::parse(line, name, message)
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LinkFile { lambda, entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_text(path)?)
    }

    pub fn components(&self) -> Result<Vec<LinkComponent>> {
        let mut out = Vec::new();
        for e in &self.entries {
            match e {
                ComponentEntry::Preset(p) => out.extend(p.components()?),
                ComponentEntry::Fourier { fourier } => out.push(LinkComponent::new(fourier.curve())?),
            }
        }
        Ok(out)
    }

    /// The link, with `lambda` overriding the file's value when given.
    pub fn link(&self, lambda: Option<f64>) -> Result<LinkSpec> {
        LinkSpec::new(lambda.unwrap_or(self.lambda), self.components()?)
    }

    pub fn to_toml(&self) -> String {
        #[derive(Serialize)]
        struct Out<'a> {
            schema: u32,
            lambda: f64,
            components: &'a [ComponentEntry],
        }
        toml::to_string(&Out {
            schema: SCHEMA_VERSION,
            lambda: self.lambda,
            components: &self.entries,
        })
        .expect("link files serialize")
    }
}

// --------------------------------------------------------------- field files

/// Writes `λ` and every member `(k, e, α, β)`, one per line.
pub fn write_field<W: Write>(field: &BeltramiExpansion, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{FIELD_MAGIC} {SCHEMA_VERSION}")?;
    writeln!(out, "lambda {:.16e}", field.lambda())?;
    writeln!(out, "members {}", field.len())?;
    writeln!(out, "# kx ky kz ex ey ez alpha beta")?;
    let mut line = String::new();
    for m in field.members() {
        line.clear();
        for v in m.k.iter().chain(m.e.iter()).chain([m.alpha, m.beta].iter()) {
            if !line.is_empty() {
                line.push(' ');
            }
            write!(line, "{v:.16e}").expect("write to string");
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn save_field(field: &BeltramiExpansion, path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_field(field, &mut f)?;
    f.flush()?;
    Ok(())
}

fn parse_f64(line: usize, field: &str, token: &str) -> Result<f64> {
    token
        .parse::<f64>()
        .map_err(|e| Error::parse(line, field, format!("`{token}`: {e}")))
}

/// Reads a field file and re-validates every member invariant.
pub fn parse_field(text: &str) -> Result<BeltramiExpansion> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let mut header = |key: &str| -> Result<(usize, String)> {
        let (n, l) = lines.next().ok_or_else(|| Error::parse(0, key, "unexpected end of file"))?;
        let rest = l
            .strip_prefix(key)
            .ok_or_else(|| Error::parse(n, key, format!("expected `{key}`, found `{l}`")))?;
        Ok((n, rest.trim().to_string()))
    };
    let (n, version) = header(FIELD_MAGIC)?;
    if version != SCHEMA_VERSION.to_string() {
        return Err(Error::parse(n, "schema", format!("unsupported schema version `{version}`")));
    }
    let (n, lambda) = header("lambda")?;
    let lambda = parse_f64(n, "lambda", &lambda)?;
    let (n, count) = header("members")?;
    let count: usize = count
        .parse()
        .map_err(|e| Error::parse(n, "members", format!("`{count}`: {e}")))?;
    let mut members = Vec::with_capacity(count);
    for (n, l) in lines {
        let v = l
            .split_whitespace()
            .map(|t| parse_f64(n, "member", t))
            .collect::<Result<Vec<_>>>()?;
        if v.len() != 8 {
            return Err(Error::parse(n, "member", format!("expected 8 values, found {}", v.len())));
        }
        members.push(Member {
            k: Vec3::new(v[0], v[1], v[2]),
            e: Vec3::new(v[3], v[4], v[5]),
            alpha: v[6],
            beta: v[7],
        });
    }
    if members.len() != count {
        return Err(Error::parse(
            0,
            "members",
            format!("header declares {count} members, file has {}", members.len()),
        ));
    }
    BeltramiExpansion::new(lambda, members)
}

pub fn load_field(path: &Path) -> Result<BeltramiExpansion> {
    parse_field(&read_text(path)?)
}

// ------------------------------------------------------------- configuration

/// Every tunable of a run. Missing keys take the defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Overrides the link file's eigenvalue.
    pub lambda: Option<f64>,
    pub safety: f64,
    /// Strip half-width as a fraction of the tube radius.
    pub half_width_fraction: f64,
    pub nodes_per_2pi: usize,
    pub t_nodes: usize,
    pub directions: usize,
    pub ridge: f64,
    /// Per-tube tolerance `ε̃` on the strip residual.
    pub tolerance: f64,
    /// Derivative order `s` of the budget.
    pub order: usize,
    pub derivative_rows: bool,
    pub rtol: f64,
    pub atol: f64,
    pub closure: f64,
    pub orbit_samples: usize,
    /// Rotates the direction set; `None` keeps the plain Fibonacci set.
    pub seed: Option<u64>,
    /// Cross-validate against the marched local field.
    pub march: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let tube = TubeConfig::default();
        let grid = StripGrid::default();
        let tol = Tolerances::default();
        RunConfig {
            lambda: None,
            safety: tube.safety,
            half_width_fraction: tube.half_width_fraction,
            nodes_per_2pi: grid.nodes_per_2pi,
            t_nodes: grid.t_nodes,
            directions: 200,
            ridge: 1e-10,
            tolerance: 1e-3,
            order: 0,
            derivative_rows: false,
            rtol: tol.rtol,
            atol: tol.atol,
            closure: 1e-9,
            orbit_samples: 4096,
            seed: None,
            march: true,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let c: RunConfig = toml::from_str(text).map_err(|e| toml_error(text, e))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_text(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("safety", self.safety),
            ("half_width_fraction", self.half_width_fraction),
            ("tolerance", self.tolerance),
            ("rtol", self.rtol),
            ("atol", self.atol),
            ("closure", self.closure),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive (got {v})")));
            }
        }
        if !(self.safety < 1.0 && self.half_width_fraction <= 1.0) {
            return Err(Error::InvalidParameter(
                "safety must be below 1 and half_width_fraction at most 1".into(),
            ));
        }
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return Err(Error::InvalidParameter(format!("ridge must be non-negative (got {})", self.ridge)));
        }
        if let Some(l) = self.lambda {
            if !l.is_finite() || l == 0.0 {
                return Err(Error::InvalidLambda(l));
            }
            if l < 0.0 {
                return Err(Error::InvalidParameter(format!("lambda must be positive (got {l})")));
            }
        }
        let counts = [
            ("nodes_per_2pi", self.nodes_per_2pi, 16),
            ("t_nodes", self.t_nodes, 3),
            ("directions", self.directions, 1),
            ("orbit_samples", self.orbit_samples, 16),
        ];
        for (name, v, min) in counts {
            if v < min {
                return Err(Error::InvalidParameter(format!("{name} must be at least {min} (got {v})")));
            }
        }
        Ok(())
    }

    pub fn tube(&self) -> TubeConfig {
        TubeConfig {
            safety: self.safety,
            half_width_fraction: self.half_width_fraction,
        }
    }

    pub fn grid(&self) -> StripGrid {
        StripGrid {
            nodes_per_2pi: self.nodes_per_2pi,
            t_nodes: self.t_nodes,
        }
    }

    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            rtol: self.rtol,
            atol: self.atol,
        }
    }
}

// ------------------------------------------------------------ seeds and grids

/// One point per line, coordinates separated by whitespace or commas. Blank
/// lines and `#` comments are skipped.
pub fn parse_points(text: &str) -> Result<Vec<Vec3>> {
    text.lines()
        .enumerate()
        .filter_map(|(i, l)| {
            let l = l.split('#').next().unwrap_or("").trim();
            (!l.is_empty()).then_some((i + 1, l))
        })
        .map(|(n, l)| {
            let v = l
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| parse_f64(n, "seed", t))
                .collect::<Result<Vec<_>>>()?;
            if v.len() != 3 {
                return Err(Error::parse(n, "seed", format!("expected 3 coordinates, found {}", v.len())));
            }
            Ok(Vec3::new(v[0], v[1], v[2]))
        })
        .collect()
}

pub fn load_points(path: &Path) -> Result<Vec<Vec3>> {
    parse_points(&read_text(path)?)
}

/// Axis-aligned sample grid, `min:max:count` per axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridSpec {
    pub min: [f64; 3],
    pub max: [f64; 3],
    pub counts: [usize; 3],
}

impl GridSpec {
    /// Parses `x0:x1:nx,y0:y1:ny,z0:z1:nz`.
    pub fn parse(text: &str) -> Result<Self> {
        let axes: Vec<&str> = text.trim().split(',').collect();
        if axes.len() != 3 {
            return Err(Error::parse(1, "grid", format!("expected 3 axes, found {}", axes.len())));
        }
        let mut g = GridSpec {
            min: [0.0; 3],
            max: [0.0; 3],
            counts: [0; 3],
        };
        for (i, axis) in axes.iter().enumerate() {
            let name = ["x", "y", "z"][i];
            let parts: Vec<&str> = axis.trim().split(':').collect();
            if parts.len() != 3 {
                return Err(Error::parse(1, name, format!("expected min:max:count, found `{axis}`")));
            }
            let (a, b) = (parse_f64(1, name, parts[0])?, parse_f64(1, name, parts[1])?);
            let n: usize = parts[2]
                .parse()
                .map_err(|e| Error::parse(1, name, format!("`{}`: {e}", parts[2])))?;
            if !(a.is_finite() && b.is_finite() && b > a) {
                return Err(Error::parse(1, name, format!("bounds must be finite with min < max (got {a}, {b})")));
            }
            if n < 2 {
                return Err(Error::parse(1, name, format!("count must be at least 2 (got {n})")));
            }
            g.min[i] = a;
            g.max[i] = b;
            g.counts[i] = n;
        }
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid points with `x` varying slowest.
    pub fn points(&self) -> Vec<Vec3> {
        let coord = |i: usize, j: usize| self.min[i] + (self.max[i] - self.min[i]) * j as f64 / (self.counts[i] - 1) as f64;
        let mut out = Vec::with_capacity(self.len());
        for a in 0..self.counts[0] {
            for b in 0..self.counts[1] {
                for c in 0..self.counts[2] {
                    out.push(Vec3::new(coord(0, a), coord(1, b), coord(2, c)));
                }
            }
        }
        out
    }
}

// ---------------------------------------------------------- delimited tables

/// Comma-separated table with a header line.
pub fn write_table<W: Write>(mut out: W, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> std::io::Result<()> {
    writeln!(out, "{}", header.join(","))?;
    let mut line = String::new();
    for row in rows {
        line.clear();
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            write!(line, "{v:.16e}").expect("write to string");
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Reads a table written by [`write_table`], returning header and rows.
pub fn parse_table(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines().enumerate();
    let (_, head) = lines.next().ok_or_else(|| Error::parse(1, "header", "empty table"))?;
    let header: Vec<String> = head.split(',').map(|s| s.trim().to_string()).collect();
    let rows = lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let row = l
                .split(',')
                .map(|t| parse_f64(i + 1, "row", t.trim()))
                .collect::<Result<Vec<_>>>()?;
            if row.len() != header.len() {
                return Err(Error::parse(i + 1, "row", format!("expected {} columns, found {}", header.len(), row.len())));
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((header, rows))
}

/// Field values on grid points, header `x,y,z,ux,uy,uz`.
pub fn write_samples<W: Write>(out: W, points: &[Vec3], values: &[Vec3]) -> std::io::Result<()> {
    write_table(
        out,
        &["x", "y", "z", "ux", "uy", "uz"],
        points.iter().zip(values).map(|(p, u)| vec![p.x, p.y, p.z, u.x, u.y, u.z]),
    )
}

/// Stream line samples, header `t,x,y,z`.
pub fn write_polyline<W: Write>(out: W, times: &[f64], points: &[Vec3]) -> std::io::Result<()> {
    write_table(
        out,
        &["t", "x", "y", "z"],
        times.iter().zip(points).map(|(t, p)| vec![*t, p.x, p.y, p.z]),
    )
}

/// Pretty-printed JSON.
pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::direction_set;
    use crate::presets;
    use proptest::prelude::*;

    fn sample_field() -> BeltramiExpansion {
        let members = direction_set(7)
            .unwrap()
            .iter()
            .enumerate()
            .map(|(j, d)| Member {
                k: d.k,
                e: d.e1,
                alpha: (j as f64 * 1.7).sin() / 3.0,
                beta: 1e-300 * j as f64 - 0.1,
            })
            .collect();
        BeltramiExpansion::new(std::f64::consts::PI, members).unwrap()
    }

    #[test]
    fn field_round_trips_bitwise() {
        let f = sample_field();
        let mut buf = Vec::new();
        write_field(&f, &mut buf).unwrap();
        let g = parse_field(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn corrupted_direction_is_rejected_at_load() {
        let mut buf = Vec::new();
        write_field(&sample_field(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
        let mut v: Vec<String> = lines[5].split(' ').map(str::to_string).collect();
        v[0] = "1.5".into();
        lines[5] = v.join(" ");
        let err = parse_field(&lines.join("\n")).unwrap_err();
        assert!(matches!(err, Error::CorruptField { member: 1, .. }), "{err}");
    }

    #[test]
    fn truncated_field_file_is_a_parse_error() {
        let mut buf = Vec::new();
        write_field(&sample_field(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let cut: String = text.lines().take(6).collect::<Vec<_>>().join("\n");
        assert!(matches!(parse_field(&cut), Err(Error::Parse { .. })));
        assert!(matches!(parse_field("lambda 1\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn link_file_with_presets_and_fourier() {
        let text = r#"
lambda = 2.5

[[components]]
preset = "hopf"

[[components]]
fourier.x = { cos = [10.0, 1.0] }
fourier.y = { cos = [0.0], sin = [1.0] }
fourier.z = { cos = [0.0] }
"#;
        let f = LinkFile::parse(text).unwrap();
        assert_eq!(f.lambda, 2.5);
        let link = f.link(None).unwrap();
        assert_eq!(link.components().len(), 3);
        assert!((link.components()[2].length() - std::f64::consts::TAU).abs() < 1e-12);
        let again = LinkFile::parse(&f.to_toml()).unwrap();
        assert_eq!(again.entries, f.entries);
        assert_eq!(f.link(Some(4.0)).unwrap().lambda(), 4.0);
    }

    #[test]
    fn missing_lambda_names_the_field() {
        let err = LinkFile::parse("[[components]]\npreset = \"circle\"\n").unwrap_err();
        match err {
            Error::Parse { field, .. } => assert_eq!(field, "lambda"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn zero_lambda_is_rejected() {
        let err = LinkFile::parse("lambda = 0.0\n[[components]]\npreset = \"circle\"\n").unwrap_err();
        assert!(matches!(err, Error::InvalidLambda(_)));
    }

    #[test]
    fn bad_component_reports_line_and_field() {
        let text = "lambda = 1.0\n\n[[components]]\npreset = \"torus_knot\"\np = 2\n";
        match LinkFile::parse(text).unwrap_err() {
            Error::Parse { line, field, .. } => {
                assert_eq!(field, "components[0].q");
                assert!(line >= 3);
            }
            e => panic!("{e}"),
        }
        let text = "lambda = 1.0\n[[components]]\nradius = 2.0\n";
        assert!(matches!(LinkFile::parse(text), Err(Error::Parse { .. })));
    }

    #[test]
    fn preset_link_file_matches_generator() {
        let f = LinkFile::parse("lambda = 1\n[[components]]\npreset = \"borromean\"\n").unwrap();
        assert_eq!(f.entries, vec![ComponentEntry::Preset(presets::borromean())]);
    }

    #[test]
    fn config_defaults_and_validation() {
        let c = RunConfig::parse("").unwrap();
        assert_eq!(c, RunConfig::default());
        let c = RunConfig::parse("directions = 50\nseed = 7\n").unwrap();
        assert_eq!((c.directions, c.seed), (50, Some(7)));
        assert!(RunConfig::parse("ridge = -1.0").is_err());
        assert!(matches!(RunConfig::parse("lambda = 0.0"), Err(Error::InvalidLambda(_))));
        match RunConfig::parse("\n\nbogus = 1\n").unwrap_err() {
            Error::Parse { line, field, .. } => assert_eq!((line, field.as_str()), (3, "bogus")),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn seeds_parse_with_comments() {
        let pts = parse_points("# seeds\n1 0 0\n0.5, 0.25, -1e-3 # tail\n\n").unwrap();
        assert_eq!(pts, vec![Vec3::x(), Vec3::new(0.5, 0.25, -1e-3)]);
        assert!(parse_points("").unwrap().is_empty());
        assert!(matches!(parse_points("1 2\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn grid_spec_parsing() {
        let g = GridSpec::parse("-1:1:2,-1:1:2,0:2:3").unwrap();
        assert_eq!(g.len(), 12);
        assert_eq!(g.points()[0], Vec3::new(-1.0, -1.0, 0.0));
        assert_eq!(g.points()[11], Vec3::new(1.0, 1.0, 2.0));
        assert!(GridSpec::parse("0:1:1,0:1:2,0:1:2").is_err());
        assert!(GridSpec::parse("0:1:2,0:1:2").is_err());
        assert!(GridSpec::parse("1:0:2,0:1:2,0:1:2").is_err());
    }

    proptest! {
        #[test]
        fn tables_round_trip_bitwise(rows in prop::collection::vec(prop::collection::vec(-1e300f64..1e300, 4), 0..20)) {
            let mut buf = Vec::new();
            write_table(&mut buf, &["a", "b", "c", "d"], rows.clone()).unwrap();
            let (h, back) = parse_table(std::str::from_utf8(&buf).unwrap()).unwrap();
            prop_assert_eq!(h.len(), 4);
            prop_assert_eq!(back, rows);
        }
    }
}
