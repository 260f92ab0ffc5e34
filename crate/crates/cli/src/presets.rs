//! Named reproductions: analytic curves, crystal tables and the desk-scale
//! simulations behind each comparison figure.

use std::io::Write;
use std::path::Path;

use clap::ValueEnum;
use tricorr_core::analytic::{
    crystal_presets, crystal_to_coupling, qm_external, qm_moment_m, sample_size_for_snr, sed_external, sed_moment_m,
    signal_to_noise,
};
use tricorr_core::{HomodyneParams, PhaseAngles, SystemParams};

use crate::compare::{compare, Series};
use crate::config::{Overrides, ScenarioConfig};
use crate::run::{create_dir, run_scenario, write_file};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PresetName {
    Fig3,
    Fig4ab,
    Fig5,
    Fig6,
    Fig7,
    Table1,
    Table2,
    Snr,
}

const SCENARIOS: [(&str, &str); 6] = [
    ("fig5_g0.1", include_str!("../presets/fig5_g0.1.toml")),
    ("fig5_g1", include_str!("../presets/fig5_g1.toml")),
    ("fig6_g0.1", include_str!("../presets/fig6_g0.1.toml")),
    ("fig6_g1", include_str!("../presets/fig6_g1.toml")),
    ("fig7_g0.1", include_str!("../presets/fig7_g0.1.toml")),
    ("fig7_g1", include_str!("../presets/fig7_g1.toml")),
];

pub fn scenario(name: &str) -> Option<ScenarioConfig> {
    SCENARIOS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(n, text)| ScenarioConfig::parse(text, Path::new(n)).expect("bundled preset parses"))
}

pub fn run_preset(name: PresetName, overrides: &Overrides, out: &Path) -> Result<Vec<String>, CliError> {
    create_dir(out)?;
    match name {
        PresetName::Fig3 => fig3(out),
        PresetName::Fig4ab => fig4ab(out),
        PresetName::Fig5 => simulated("fig5", overrides, out),
        PresetName::Fig6 => simulated("fig6", overrides, out),
        PresetName::Fig7 => simulated("fig7", overrides, out),
        PresetName::Table1 => table1(out),
        PresetName::Table2 => table2(out),
        PresetName::Snr => snr(out),
    }
}

fn unit_params(g: f64, gamma: f64) -> SystemParams {
    SystemParams::equal_damping(g, gamma, 1.0).expect("preset parameters are valid")
}

fn fig3(out: &Path) -> Result<Vec<String>, CliError> {
    let p = unit_params(1.0, 1.0);
    let angles = PhaseAngles::zero();
    write_file(&out.join("fig3.dat"), |w| {
        writeln!(w, "# tau qm_analytic sed_analytic")?;
        for k in 0..=400 {
            let tau = k as f64 * 0.01;
            let qm = qm_moment_m(tau, &p, &angles).expect("equal damping");
            let sed = sed_moment_m(tau, &p, &angles).expect("equal damping");
            writeln!(w, "{tau:e} {qm:e} {sed:e}")?;
        }
        Ok(())
    })?;
    write_file(&out.join("plot.gp"), |w| {
        writeln!(w, "set terminal pngcairo size 900,600")?;
        writeln!(w, "set output 'fig3.png'")?;
        writeln!(w, "set xlabel 'tau'")?;
        writeln!(w, "plot 'fig3.dat' using 1:2 with lines title 'QM', '' using 1:3 with lines dt 2 title 'SED'")
    })?;
    Ok(vec!["wrote fig3.dat (N = 1, g = 1, gamma = 1, tau in [0, 4])".into()])
}

fn fig4ab(out: &Path) -> Result<Vec<String>, CliError> {
    let angles = PhaseAngles::zero();
    let mut notes = Vec::new();
    for (panel, tau) in [("a", 1.0), ("b", 0.1)] {
        let name = format!("fig4{panel}.dat");
        let mut diffs = Vec::new();
        write_file(&out.join(&name), |w| {
            writeln!(w, "# gamma qm_analytic sed_analytic difference")?;
            for k in 1..=100 {
                let gamma = k as f64 * 0.05;
                let p = unit_params(0.1, gamma);
                let qm = qm_moment_m(tau, &p, &angles).expect("equal damping");
                let sed = sed_moment_m(tau, &p, &angles).expect("equal damping");
                diffs.push((sed - qm).abs());
                writeln!(w, "{gamma:e} {qm:e} {sed:e} {:e}", sed - qm)?;
            }
            Ok(())
        })?;
        let monotone = diffs.windows(2).all(|d| d[1] <= d[0]);
        notes.push(format!(
            "wrote {name} (g = 0.1, N = 1, tau = {tau}); |QM - SED| decreasing in gamma: {monotone}"
        ));
    }
    write_file(&out.join("plot.gp"), |w| {
        writeln!(w, "set terminal pngcairo size 900,600")?;
        writeln!(w, "set xlabel 'gamma'")?;
        for panel in ["a", "b"] {
            writeln!(w, "set output 'fig4{panel}.png'")?;
            writeln!(
                w,
                "plot 'fig4{panel}.dat' using 1:2 with lines dt 2 title 'QM', '' using 1:3 with lines title 'SED'"
            )?;
        }
        Ok(())
    })?;
    Ok(notes)
}

fn simulated(figure: &str, overrides: &Overrides, out: &Path) -> Result<Vec<String>, CliError> {
    let mut notes = Vec::new();
    for (name, _) in SCENARIOS.iter().filter(|(n, _)| n.starts_with(figure)) {
        let mut cfg = scenario(name).expect("listed scenario");
        cfg.apply(overrides);
        let resolved = cfg.resolve()?;
        let dir = out.join(name);
        let outcome = run_scenario(&resolved, &dir)?;
        let qm = Series::from_points("qm", &outcome.runs[0].intracavity);
        let sed = Series::from_points("sed", &outcome.runs[1].intracavity);
        let report = compare(&qm, &sed)?;
        report.write(&dir)?;
        notes.push(format!("{name}: {} paths -> {}", resolved.ensemble.n_paths, dir.display()));
        notes.extend(report.summary().into_iter().skip(1).map(|l| format!("  {l}")));
    }
    Ok(notes)
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn table1(out: &Path) -> Result<Vec<String>, CliError> {
    let mut notes = Vec::new();
    write_file(&out.join("table1.csv"), |w| {
        writeln!(w, "crystal,quantity,computed,reference,rel_diff,within_5pct")?;
        for p in crystal_presets() {
            let c = crystal_to_coupling(&p.spec()).map_err(std::io::Error::other)?;
            for (q, got, want) in [
                ("G", c.big_g, p.reference.big_g),
                ("Gamma", c.big_gamma, p.reference.big_gamma),
                ("g", c.g, p.reference.g),
            ] {
                let d = rel(got, want);
                writeln!(w, "{},{q},{got:e},{want:e},{d:e},{}", p.name, d <= 0.05)?;
                notes.push(format!("{} {q} = {got:.3e} (published {want:.1e}, {:.1}%)", p.name, 100.0 * d));
            }
        }
        Ok(())
    })?;
    Ok(notes)
}

fn table2(out: &Path) -> Result<Vec<String>, CliError> {
    let h = HomodyneParams::realistic();
    let mut notes = Vec::new();
    write_file(&out.join("table2.csv"), |w| {
        writeln!(w, "crystal,theory,computed,reference,rel_diff,within_3pct")?;
        for p in crystal_presets() {
            let sp = p.reference_params().map_err(std::io::Error::other)?;
            let qm = qm_external(0.1, &sp, &h).map_err(std::io::Error::other)?;
            let sed = sed_external(0.1, &sp, &h).map_err(std::io::Error::other)?;
            for (t, got, want) in [("qm", qm, p.reference_external.qm), ("sed", sed, p.reference_external.sed)] {
                let d = rel(got, want);
                writeln!(w, "{},{t},{got:e},{want:e},{d:e},{}", p.name, d <= 0.03)?;
                notes.push(format!("{} {t} = {got:.3e} (published {want:.1e}, {:.1}%)", p.name, 100.0 * d));
            }
        }
        Ok(())
    })?;
    Ok(notes)
}

fn snr(out: &Path) -> Result<Vec<String>, CliError> {
    let (eta, tau_f) = (1.0, 0.1);
    let crystals = crystal_presets();
    write_file(&out.join("snr.csv"), |w| {
        write!(w, "n")?;
        for p in &crystals {
            write!(w, ",S_{}", p.name)?;
        }
        writeln!(w)?;
        for k in 0..=120 {
            let n = 10f64.powf(9.0 + k as f64 * 0.05);
            write!(w, "{n:e}")?;
            for p in &crystals {
                let s = signal_to_noise(n, eta, p.reference.g, tau_f).map_err(std::io::Error::other)?;
                write!(w, ",{s:e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    })?;
    let mut notes = Vec::new();
    write_file(&out.join("snr_crossings.csv"), |w| {
        writeln!(w, "crystal,g,n_crossing,reference,rel_diff")?;
        for p in &crystals {
            let n = sample_size_for_snr(1.0, eta, p.reference.g, tau_f).map_err(std::io::Error::other)?;
            let d = rel(n, p.reference_sample_size);
            writeln!(w, "{},{:e},{n:e},{:e},{d:e}", p.name, p.reference.g, p.reference_sample_size)?;
            notes.push(format!(
                "{}: S = 1 at n = {n:.3e} (published {:.1e}, {:.1}%)",
                p.name,
                p.reference_sample_size,
                100.0 * d
            ));
        }
        Ok(())
    })?;
    Ok(notes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_scenarios_resolve() {
        for (name, _) in SCENARIOS {
            let c = scenario(name).unwrap();
            assert_eq!(c.name, name);
            assert!(c.resolve().is_ok(), "{name}");
        }
    }

    #[test]
    fn figure_scenarios_match_captions() {
        for (fig, n) in [("fig5", 1.0), ("fig6", 10.0), ("fig7", 100.0)] {
            for g in ["0.1", "1"] {
                let c = scenario(&format!("{fig}_g{g}")).unwrap();
                assert_eq!(c.system.n_photons, Some(n));
                assert_eq!(c.system.g, g.parse::<f64>().unwrap());
                assert_eq!(c.angles.theta, [0.0; 3]);
                assert_eq!(c.grid.t_end, 4.0);
            }
        }
    }
}
