use beltrami_core::io::{self, GridSpec, LinkFile, RunConfig};
use beltrami_core::pipeline::{self, exit, VerifyLimits};
use beltrami_core::{Error, Exec, Vec3};
use clap::{Args, Parser, Subcommand};
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Beltrami fields whose stream lines realize a prescribed link.
///
/// Exit codes: 0 pass, 2 parse or usage error, 3 fit over budget, 4 orbit or
/// integration failure, 5 linking or confinement failure, 6 unusable link
/// geometry, 7 file system error.
#[derive(Parser)]
#[command(name = "beltrami", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a global field to the strips of every link component.
    Synthesize {
        #[arg(long)]
        link: PathBuf,
        /// Field file to write.
        #[arg(long)]
        out: PathBuf,
        /// JSON fit report.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Find the periodic orbits of a field and certify them against the link.
    Verify {
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        link: PathBuf,
        /// JSON verification report.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Directory for orbit polylines.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Integrate stream lines from seed points.
    Trace {
        #[arg(long)]
        field: PathBuf,
        /// One seed per line, three coordinates.
        #[arg(long)]
        seeds: PathBuf,
        #[arg(long)]
        t_end: f64,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Directory for one polyline per seed.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Evaluate a field on a regular grid.
    Sample {
        #[arg(long)]
        field: PathBuf,
        /// `x0:x1:nx,y0:y1:ny,z0:z1:nz`.
        #[arg(long)]
        grid: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
    #[arg(long)]
    directions: Option<usize>,
    #[arg(long)]
    ridge: Option<f64>,
    #[arg(long)]
    rtol: Option<f64>,
    #[arg(long)]
    atol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Run single-threaded.
    #[arg(long)]
    sequential: bool,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig, Error> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if self.lambda.is_some() {
            c.lambda = self.lambda;
        }
        if let Some(d) = self.directions {
            c.directions = d;
        }
        if let Some(r) = self.ridge {
            c.ridge = r;
        }
        if let Some(r) = self.rtol {
            c.rtol = r;
        }
        if let Some(a) = self.atol {
            c.atol = a;
        }
        if self.seed.is_some() {
            c.seed = self.seed;
        }
        c.validate()?;
        Ok(c)
    }

    fn exec(&self) -> Exec {
        if self.sequential {
            Exec::Sequential
        } else {
            Exec::Parallel
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Error> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_polyline(path: &Path, times: &[f64], points: &[Vec3]) -> Result<(), Error> {
    io::write_polyline(create(path)?, times, points)?;
    Ok(())
}

fn run(cli: Cli) -> Result<i32, Error> {
    match cli.command {
        Command::Synthesize { link, out, report, run } => {
            let config = run.config()?;
            let link = LinkFile::load(&link)?.link(None)?;
            let s = pipeline::synthesize(&link, &config, run.exec())?;
            io::save_field(&s.field, &out)?;
            if let Some(p) = report {
                io::write_json(&s.report, &p)?;
            }
            for t in &s.report.fit.tubes {
                println!(
                    "tube {}: residual {:.3e} (tolerance {:.1e}) {}",
                    t.component,
                    t.max_residual,
                    t.tolerance,
                    if t.within_budget { "ok" } else { "OVER BUDGET" }
                );
            }
            Ok(if s.report.within_budget() { exit::PASS } else { exit::BUDGET })
        }
        Command::Verify {
            field,
            link,
            report,
            out,
            run,
        } => {
            let config = run.config()?;
            let field = io::load_field(&field)?;
            let link = LinkFile::load(&link)?.link(None)?;
            let r = pipeline::verify(&field, &link, &config, VerifyLimits::default(), run.exec())?;
            if let Some(p) = report {
                io::write_json(&r, &p)?;
            }
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                for c in &r.components {
                    if let (Some(points), Some(o)) = (&c.orbit_points, &c.orbit) {
                        let mut points = points.clone();
                        points.push(points[0]);
                        let n = points.len() - 1;
                        let times: Vec<f64> = (0..=n).map(|i| o.period * i as f64 / n as f64).collect();
                        write_polyline(&dir.join(format!("orbit_{}.csv", c.component)), &times, &points)?;
                    }
                }
            }
            for c in &r.criteria {
                println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            Ok(r.exit_code())
        }
        Command::Trace {
            field,
            seeds,
            t_end,
            samples,
            out,
            run,
        } => {
            let config = run.config()?;
            let field = io::load_field(&field)?;
            let seeds = io::load_points(&seeds)?;
            std::fs::create_dir_all(&out)?;
            let mut code = exit::PASS;
            for (i, r) in pipeline::trace(&field, &seeds, t_end, samples, &config, run.exec())
                .into_iter()
                .enumerate()
            {
                match r {
                    Ok(t) => write_polyline(&out.join(format!("trace_{i}.csv")), &t.times, &t.points)?,
                    Err(e) => {
                        eprintln!("seed {i}: {e}");
                        code = exit::DYNAMICS;
                    }
                }
            }
            Ok(code)
        }
        Command::Sample { field, grid, out } => {
            let field = io::load_field(&field)?;
            let points = GridSpec::parse(&grid)?.points();
            let values = pipeline::sample(&field, &points, Exec::Parallel);
            io::write_samples(create(&out)?, &points, &values)?;
            Ok(exit::PASS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::PARSE as u8 } else { 0 });
        }
    };
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            pipeline::exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
