use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use tricorr_core::analytic::{predict_external, predict_intracavity};
use tricorr_core::estimators::write_moment_csv;
use tricorr_core::{
    external_moment_estimate, run_intracavity_experiment, validate_params, EnsembleResult, Error, MomentEstimate, Theory,
};

use crate::config::{Resolved, ScenarioConfig};
use crate::CliError;

/// Simulated and analytic values of one theory at one time.
#[derive(Debug, Clone, Copy)]
pub struct Point {
    pub tau: f64,
    pub estimate: MomentEstimate,
    pub analytic: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TheoryRun {
    pub theory: Theory,
    pub intracavity: Vec<Point>,
    pub external: Vec<Point>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub runs: Vec<TheoryRun>,
}

#[derive(Serialize)]
struct Failure {
    theory: String,
    path: u64,
    step: usize,
    seed: u64,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    status: &'static str,
    started_unix_s: u64,
    wall_time_s: f64,
    threads: usize,
    warnings: Vec<String>,
    degenerate_projection: bool,
    files: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    failure: Option<Failure>,
    scenario: &'a ScenarioConfig,
}

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

pub fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Other(anyhow::anyhow!("creating {}: {e}", dir.display())))
}

pub fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Other(anyhow::anyhow!("writing {}: {e}", path.display()))
}

pub fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), CliError> {
    let f = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(f);
    body(&mut w).and_then(|_| w.flush()).map_err(io_err(path))
}

fn points(taus: &[f64], estimates: &[MomentEstimate], analytic: impl Fn(f64) -> Option<f64>) -> Vec<Point> {
    taus.iter()
        .zip(estimates)
        .map(|(&tau, &estimate)| Point {
            tau,
            estimate,
            analytic: analytic(tau),
        })
        .collect()
}

fn simulate(r: &Resolved, theory: Theory) -> Result<TheoryRun, Error> {
    let cfg = &r.config;
    let mut run = TheoryRun {
        theory,
        intracavity: Vec::new(),
        external: Vec::new(),
    };
    if cfg.outputs.intracavity() {
        let res: EnsembleResult = run_intracavity_experiment(theory, &r.params, &r.angles, &r.grid, &r.nodes, &r.ensemble)?;
        run.intracavity = points(&res.taus(), &res.estimates, |t| {
            predict_intracavity(theory, t, &r.params, &r.angles).ok().map(|p| p.value)
        });
    }
    if let (Some(ext), Some(h)) = (&cfg.external, &r.homodyne) {
        if cfg.outputs.external() {
            let est = external_moment_estimate(theory, &r.params, &r.angles, h, &ext.tau_f, r.grid.dt(), &r.ensemble)?;
            run.external = points(&ext.tau_f, &est, |t| predict_external(theory, t, &r.params, h).ok().map(|p| p.value));
        }
    }
    Ok(run)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), |x| format!("{x:e}"))
}

/// Gnuplot data: one row per time, three columns per theory.
fn write_dat(path: &Path, runs: &[TheoryRun], pick: fn(&TheoryRun) -> &[Point], x_name: &str) -> Result<(), CliError> {
    write_file(path, |w| {
        write!(w, "# {x_name}")?;
        for run in runs {
            let t = run.theory;
            write!(w, " {t}_mean {t}_se {t}_analytic")?;
        }
        writeln!(w)?;
        let n = pick(&runs[0]).len();
        for i in 0..n {
            write!(w, "{:e}", pick(&runs[0])[i].tau)?;
            for run in runs {
                let p = &pick(run)[i];
                write!(w, " {:e} {:e} {}", p.estimate.mean.re, p.estimate.std_error, fmt_opt(p.analytic))?;
            }
            writeln!(w)?;
        }
        Ok(())
    })
}

fn write_gnuplot(path: &Path, plots: &[(&str, &str, usize)]) -> Result<(), CliError> {
    write_file(path, |w| {
        writeln!(w, "set terminal pngcairo size 900,600")?;
        writeln!(w, "set key outside")?;
        for (stem, xlabel, n_theories) in plots {
            writeln!(w, "set output '{stem}.png'")?;
            writeln!(w, "set xlabel '{xlabel}'")?;
            writeln!(w, "set ylabel 'third-order moment'")?;
            let mut parts = Vec::new();
            for k in 0..*n_theories {
                let c = 2 + 3 * k;
                parts.push(format!("'{stem}.dat' using 1:{}:{} with yerrorbars title columnhead({})", c, c + 1, c));
                parts.push(format!("'' using 1:{} with lines title columnhead({})", c + 2, c + 2));
            }
            writeln!(w, "plot {}", parts.join(", \\\n     "))?;
        }
        Ok(())
    })
}

/// Runs every theory of the scenario and writes CSVs, gnuplot data, a
/// plot script and `manifest.toml` into `dir`.
pub fn run_scenario(r: &Resolved, dir: &Path) -> Result<RunOutcome, CliError> {
    create_dir(dir)?;
    let started = unix_now();
    let clock = Instant::now();
    let cfg = &r.config;
    let report = validate_params(&r.params, &r.grid).map_err(|e| CliError::Config(e.to_string()))?;
    let warnings: Vec<String> = report.warnings.iter().map(|w| w.to_string()).collect();
    for w in &warnings {
        eprintln!("warning: {w}");
    }

    let mut runs = Vec::new();
    let mut failure = None;
    for theory in cfg.theory.theories() {
        match simulate(r, theory) {
            Ok(run) => runs.push(run),
            Err(Error::NonFinite { step, path, seed }) => {
                failure = Some(Failure {
                    theory: theory.to_string(),
                    path,
                    step,
                    seed,
                });
                break;
            }
            Err(e) => return Err(CliError::Other(e.into())),
        }
    }

    let mut files = Vec::new();
    if failure.is_none() {
        for run in &runs {
            for (scope, pts) in [("intracavity", &run.intracavity), ("external", &run.external)] {
                if pts.is_empty() {
                    continue;
                }
                let name = format!("{scope}_{}.csv", run.theory);
                write_file(&dir.join(&name), |w| {
                    write_moment_csv(w, pts.iter().map(|p| (p.tau, &p.estimate)), run.theory, &r.params, cfg.seed)
                })?;
                files.push(name);
            }
        }
        let mut plots = Vec::new();
        if cfg.outputs.intracavity() {
            write_dat(&dir.join("intracavity.dat"), &runs, |t| &t.intracavity, "tau")?;
            files.push("intracavity.dat".into());
            plots.push(("intracavity", "tau", runs.len()));
        }
        if !runs[0].external.is_empty() {
            write_dat(&dir.join("external.dat"), &runs, |t| &t.external, "tau_f")?;
            files.push("external.dat".into());
            plots.push(("external", "tau_f", runs.len()));
        }
        write_gnuplot(&dir.join("plot.gp"), &plots)?;
        files.push("plot.gp".into());
    }

    let degenerate_projection = cfg.theory.theories().iter().any(|&t| {
        let phase = match t {
            Theory::Qm => r.angles.big_theta(),
            Theory::Sed => r.angles.big_phi(),
        };
        phase.cos().abs() < tricorr_core::analytic::DEGENERATE_PROJECTION
    });
    let status = if failure.is_some() { "non-finite" } else { "ok" };
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        status,
        started_unix_s: started,
        wall_time_s: clock.elapsed().as_secs_f64(),
        threads: worker_threads(),
        warnings,
        degenerate_projection,
        files,
        failure,
        scenario: cfg,
    };
    let text = toml::to_string(&manifest).map_err(|e| CliError::Other(e.into()))?;
    let manifest_path = dir.join("manifest.toml");
    fs::write(&manifest_path, text).map_err(io_err(&manifest_path))?;

    if let Some(f) = manifest.failure {
        return Err(CliError::NonFinite(format!(
            "{} path {} (seed {}) overflowed at step {}; see {}",
            f.theory,
            f.path,
            f.seed,
            f.step,
            manifest_path.display()
        )));
    }
    Ok(RunOutcome {
        dir: dir.to_path_buf(),
        runs,
    })
}

fn worker_threads() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}
