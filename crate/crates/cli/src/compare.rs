//! Side-by-side comparison of two moment series on a common time grid.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::run::{write_file, Point};
use crate::CliError;

/// Short-time bound below which the two theories may still differ in sign
/// at large pump photon number.
pub const SHORT_TIME: f64 = 0.07;

/// One row of the estimator CSV schema.
#[derive(Debug, Clone, Deserialize)]
pub struct CsvRow {
    pub tau: f64,
    pub mean_re: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub theory: String,
    pub g: f64,
    #[serde(rename = "N")]
    pub n_photons: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub taus: Vec<f64>,
    pub means: Vec<f64>,
    pub std_errors: Vec<f64>,
}

impl Series {
    pub fn from_points(label: impl Into<String>, pts: &[Point]) -> Self {
        Series {
            label: label.into(),
            taus: pts.iter().map(|p| p.tau).collect(),
            means: pts.iter().map(|p| p.estimate.mean.re).collect(),
            std_errors: pts.iter().map(|p| p.estimate.std_error).collect(),
        }
    }

    pub fn read_csv(path: &Path) -> Result<Self, CliError> {
        let mut rdr = csv::Reader::from_path(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let rows = rdr
            .deserialize::<CsvRow>()
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let label = rows
            .first()
            .map(|r| format!("{} g={} N={} ({} paths, seed {})", r.theory, r.g, r.n_photons, r.n_paths, r.seed))
            .unwrap_or_else(|| path.display().to_string());
        Ok(Series {
            label,
            taus: rows.iter().map(|r| r.tau).collect(),
            means: rows.iter().map(|r| r.mean_re).collect(),
            std_errors: rows.iter().map(|r| r.std_error).collect(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompareRow {
    pub tau: f64,
    pub a: f64,
    pub se_a: f64,
    pub b: f64,
    pub se_b: f64,
    pub diff: f64,
    pub combined_se: f64,
    pub signs_differ: bool,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub label_a: String,
    pub label_b: String,
    pub rows: Vec<CompareRow>,
}

fn signs_differ(a: f64, b: f64) -> bool {
    a != 0.0 && b != 0.0 && a.signum() != b.signum()
}

pub fn compare(a: &Series, b: &Series) -> Result<Report, CliError> {
    let same_grid = a.taus.len() == b.taus.len()
        && a.taus.iter().zip(&b.taus).all(|(x, y)| (x - y).abs() <= 1e-9 * x.abs().max(1.0));
    if !same_grid {
        return Err(CliError::Config(
            tricorr_core::Error::GridMismatch(format!(
                "{} has {} times, {} has {}",
                a.label,
                a.taus.len(),
                b.label,
                b.taus.len()
            ))
            .to_string(),
        ));
    }
    let rows = (0..a.taus.len())
        .map(|i| {
            let (ma, mb) = (a.means[i], b.means[i]);
            CompareRow {
                tau: a.taus[i],
                a: ma,
                se_a: a.std_errors[i],
                b: mb,
                se_b: b.std_errors[i],
                diff: ma - mb,
                combined_se: a.std_errors[i].hypot(b.std_errors[i]),
                signs_differ: signs_differ(ma, mb),
            }
        })
        .collect();
    Ok(Report {
        label_a: a.label.clone(),
        label_b: b.label.clone(),
        rows,
    })
}

impl Report {
    fn positive_times(&self) -> impl Iterator<Item = &CompareRow> {
        self.rows.iter().filter(|r| r.tau > 0.0)
    }

    pub fn signs_differ_everywhere(&self) -> bool {
        let mut any = false;
        for r in self.positive_times() {
            any = true;
            if !r.signs_differ {
                return false;
            }
        }
        any
    }

    pub fn same_sign_after(&self, t: f64) -> bool {
        let mut any = false;
        for r in self.rows.iter().filter(|r| r.tau > t) {
            any = true;
            if r.signs_differ {
                return false;
            }
        }
        any
    }

    pub fn summary(&self) -> Vec<String> {
        let n = self.positive_times().count();
        let k = self.positive_times().filter(|r| r.signs_differ).count();
        let yes_no = |b: bool| if b { "yes" } else { "no" };
        vec![
            format!("compared: {} vs {}", self.label_a, self.label_b),
            format!("signs differ at {k} of {n} times tau > 0"),
            format!("signs differ at every tau > 0: {}", yes_no(self.signs_differ_everywhere())),
            format!("signs agree at every tau > {SHORT_TIME}: {}", yes_no(self.same_sign_after(SHORT_TIME))),
        ]
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let path = dir.join("compare.csv");
        write_file(&path, |w| {
            let mut c = csv::Writer::from_writer(w);
            for r in &self.rows {
                c.serialize(r)?;
            }
            c.flush()
        })?;
        write_file(&dir.join("compare.txt"), |w| {
            for line in self.summary() {
                writeln!(w, "{line}")?;
            }
            Ok(())
        })
    }
}
