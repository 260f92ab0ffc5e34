use std::path::Path;

use clap::ValueEnum;
use serde::Serialize;
use tricorr_core::analytic::{predict_external, predict_intracavity, signal_to_noise};
use tricorr_core::estimators::gamma_field;

use crate::config::{Damping, Outputs, Overrides, ScenarioConfig};
use crate::run::{run_scenario, write_file, Point};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    #[value(name = "g")]
    G,
    #[value(name = "gamma")]
    Gamma,
    #[value(name = "N")]
    N,
    #[value(name = "tau_f")]
    TauF,
    #[value(name = "n_paths")]
    NPaths,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::G => "g",
            Axis::Gamma => "gamma",
            Axis::N => "N",
            Axis::TauF => "tau_f",
            Axis::NPaths => "n_paths",
        }
    }

    fn apply(self, cfg: &mut ScenarioConfig, v: f64) -> Result<(), CliError> {
        match self {
            Axis::G => cfg.system.g = v,
            Axis::Gamma => cfg.system.gamma = Damping::Equal(v),
            Axis::N => {
                cfg.system.n_photons = Some(v);
                cfg.system.epsilon = None;
            }
            Axis::TauF => {
                let ext = cfg
                    .external
                    .as_mut()
                    .ok_or_else(|| CliError::Config("sweeping tau_f needs an [external] section".into()))?;
                ext.tau_f = vec![v];
                if !cfg.outputs.external() {
                    cfg.outputs = Outputs::Both;
                }
            }
            Axis::NPaths => {
                if v < 1.0 || v.fract() != 0.0 {
                    return Err(CliError::Config(format!("n_paths values must be whole numbers, got {v}")));
                }
                cfg.n_paths = v as usize;
            }
        }
        Ok(())
    }
}

/// One row of the combined sweep table. Simulation columns are empty for
/// analytic-only sweeps.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub axis: &'static str,
    pub value: f64,
    pub scope: &'static str,
    pub theory: String,
    pub tau: f64,
    pub mean_re: Option<f64>,
    pub mean_im: Option<f64>,
    pub std_error: Option<f64>,
    pub analytic: Option<f64>,
    pub n_paths: usize,
    pub g: f64,
    #[serde(rename = "N")]
    pub n_photons: f64,
    pub gamma: String,
    pub seed: u64,
}

pub fn sweep(
    base: &ScenarioConfig,
    axis: Axis,
    values: &[f64],
    overrides: &Overrides,
    out: &Path,
    analytic_only: bool,
) -> Result<Vec<SweepRow>, CliError> {
    if values.is_empty() {
        return Err(CliError::Config("sweep needs at least one value".into()));
    }
    crate::run::create_dir(out)?;
    let mut rows = Vec::new();
    for &v in values {
        let mut cfg = base.clone();
        cfg.apply(overrides);
        axis.apply(&mut cfg, v)?;
        let r = cfg.resolve()?;
        let row = |scope, theory: String, p: &Point, simulated: bool| SweepRow {
            axis: axis.name(),
            value: v,
            scope,
            theory,
            tau: p.tau,
            mean_re: simulated.then_some(p.estimate.mean.re),
            mean_im: simulated.then_some(p.estimate.mean.im),
            std_error: simulated.then_some(p.estimate.std_error),
            analytic: p.analytic,
            n_paths: r.ensemble.n_paths,
            g: r.params.g,
            n_photons: r.params.photon_number(),
            gamma: gamma_field(&r.params),
            seed: r.ensemble.seed,
        };
        if analytic_only {
            if axis == Axis::NPaths {
                let ext = cfg
                    .external
                    .as_ref()
                    .ok_or_else(|| CliError::Config("an n_paths sweep needs an [external] section".into()))?;
                for &tau_f in &ext.tau_f {
                    let s = signal_to_noise(v, ext.eta, r.params.g, tau_f).map_err(|e| CliError::Config(e.to_string()))?;
                    rows.push(row("snr", "qm-sed".into(), &analytic_point(tau_f, Some(s)), false));
                }
                continue;
            }
            let theories = cfg.theory.theories();
            if cfg.outputs.intracavity() {
                for &k in &r.nodes {
                    let tau = r.grid.time(k);
                    let values: Vec<Option<f64>> = theories
                        .iter()
                        .map(|&t| predict_intracavity(t, tau, &r.params, &r.angles).ok().map(|p| p.value))
                        .collect();
                    for (t, a) in theories.iter().zip(&values) {
                        rows.push(row("intracavity", t.to_string(), &analytic_point(tau, *a), false));
                    }
                    if let [Some(qm), Some(sed)] = values[..] {
                        rows.push(row("intracavity", "qm-sed".into(), &analytic_point(tau, Some(qm - sed)), false));
                    }
                }
            }
            if let (Some(ext), Some(h)) = (&cfg.external, &r.homodyne) {
                if cfg.outputs.external() {
                    for &tau_f in &ext.tau_f {
                        for &t in &theories {
                            let a = predict_external(t, tau_f, &r.params, h).ok().map(|p| p.value);
                            rows.push(row("external", t.to_string(), &analytic_point(tau_f, a), false));
                        }
                    }
                }
            }
        } else {
            let dir = out.join(format!("{}={v}", axis.name()));
            let outcome = run_scenario(&r, &dir)?;
            for run in &outcome.runs {
                for p in &run.intracavity {
                    rows.push(row("intracavity", run.theory.to_string(), p, true));
                }
                for p in &run.external {
                    rows.push(row("external", run.theory.to_string(), p, true));
                }
            }
        }
    }
    let path = out.join(format!("sweep_{}.csv", axis.name()));
    write_file(&path, |w| {
        let mut c = csv::Writer::from_writer(w);
        for r in &rows {
            c.serialize(r)?;
        }
        c.flush()
    })?;
    Ok(rows)
}

fn analytic_point(tau: f64, analytic: Option<f64>) -> Point {
    Point {
        tau,
        estimate: tricorr_core::MomentEstimate {
            mean: num_complex::Complex64::new(0.0, 0.0),
            std_error: 0.0,
            std_error_im: 0.0,
            n_paths: 0,
            n_batches: 0,
            imag_diagnostic: 0.0,
        },
        analytic,
    }
}
