use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::constants::{EPSILON_0, HBAR, SPEED_OF_LIGHT};
use crate::error::{Error, Result};
use crate::params::SystemParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeVolume {
    /// Cubic metres.
    Volume(f64),
    /// Spot size in metres; the volume is pi * spot^2 * cavity_length.
    SpotSize(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrystalSpec {
    /// pm/V.
    pub d_eff: f64,
    /// Pump wavelength in metres; signal and idler sit at twice it.
    pub lambda_pump: f64,
    pub cavity_length: f64,
    pub crystal_length: f64,
    pub mode_volume: ModeVolume,
    /// Output-mirror transmission.
    pub transmission: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Coupling {
    /// Nonlinear interaction strength G, s^-1.
    pub big_g: f64,
    /// Cavity damping constant Gamma, s^-1.
    pub big_gamma: f64,
    /// G / Gamma.
    pub g: f64,
}

impl CrystalSpec {
    pub fn volume(&self) -> f64 {
        match self.mode_volume {
            ModeVolume::Volume(v) => v,
            ModeVolume::SpotSize(w) => PI * w * w * self.cavity_length,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("d_eff", self.d_eff),
            ("lambda_pump", self.lambda_pump),
            ("cavity_length", self.cavity_length),
            ("crystal_length", self.crystal_length),
            ("mode_volume", self.volume()),
            ("transmission", self.transmission),
        ];
        for (field, v) in positive {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::invalid(field, format!("must be finite and > 0, got {v}")));
            }
        }
        if self.crystal_length > self.cavity_length {
            return Err(Error::invalid("crystal_length", "crystal longer than cavity"));
        }
        Ok(())
    }
}

/// G = d_eff sqrt(2 hbar w1 w2 w3 / (eps0 V)) l / L and Gamma = T c / (2 L).
pub fn crystal_to_coupling(c: &CrystalSpec) -> Result<Coupling> {
    c.validate()?;
    let omega = |lambda: f64| 2.0 * PI * SPEED_OF_LIGHT / lambda;
    let w3 = omega(c.lambda_pump);
    let w1 = omega(2.0 * c.lambda_pump);
    let w2 = w1;
    let d_eff = c.d_eff * 1e-12;
    let big_g = d_eff * (2.0 * HBAR * w1 * w2 * w3 / (EPSILON_0 * c.volume())).sqrt()
        * c.crystal_length
        / c.cavity_length;
    let big_gamma = c.transmission * SPEED_OF_LIGHT / (2.0 * c.cavity_length);
    Ok(Coupling {
        big_g,
        big_gamma,
        g: big_g / big_gamma,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize)]
pub struct ReferenceCoupling {
    pub big_g: f64,
    pub big_gamma: f64,
    pub g: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize)]
pub struct ReferenceExternal {
    pub qm: f64,
    pub sed: f64,
}

/// A shipped crystal with its published reference values.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
pub struct CrystalPreset {
    pub name: String,
    pub d_eff_pm_per_v: f64,
    pub lambda_pump_m: f64,
    pub mode_volume_m3: f64,
    pub cavity_length_m: f64,
    pub crystal_length_m: f64,
    pub transmission: f64,
    pub reference: ReferenceCoupling,
    /// Pump amplitude epsilon behind the reference external moments.
    pub pump_amplitude: f64,
    pub reference_external: ReferenceExternal,
    pub reference_sample_size: f64,
}

impl CrystalPreset {
    pub fn spec(&self) -> CrystalSpec {
        CrystalSpec {
            d_eff: self.d_eff_pm_per_v,
            lambda_pump: self.lambda_pump_m,
            cavity_length: self.cavity_length_m,
            crystal_length: self.crystal_length_m,
            mode_volume: ModeVolume::Volume(self.mode_volume_m3),
            transmission: self.transmission,
        }
    }

    /// System parameters at the published rounded coupling and damping,
    /// gamma = 1, with the reference pump amplitude.
    pub fn reference_params(&self) -> Result<SystemParams> {
        SystemParams::equal_damping(self.reference.g, 1.0, self.pump_amplitude)?
            .with_big_gamma(self.reference.big_gamma)
    }
}

#[derive(Deserialize)]
struct PresetFile {
    crystal: Vec<CrystalPreset>,
}

const CRYSTALS_TOML: &str = include_str!("../../data/crystals.toml");

pub fn crystal_presets() -> Vec<CrystalPreset> {
    toml::from_str::<PresetFile>(CRYSTALS_TOML)
        .expect("bundled crystals.toml is valid")
        .crystal
}

#[cfg(test)]
mod tests {
    use super::*;

    fn within(actual: f64, reference: f64, tol: f64) -> bool {
        ((actual - reference) / reference).abs() <= tol
    }

    #[test]
    fn presets_reproduce_reference_couplings() {
        let presets = crystal_presets();
        assert_eq!(presets.len(), 2);
        for p in presets {
            let c = crystal_to_coupling(&p.spec()).unwrap();
            assert!(within(c.big_g, p.reference.big_g, 0.05), "{}: G = {}", p.name, c.big_g);
            assert!(within(c.big_gamma, p.reference.big_gamma, 0.05));
            assert!(within(c.g, p.reference.g, 0.05), "{}: g = {}", p.name, c.g);
        }
    }

    #[test]
    fn presets_reproduce_reference_external_moments() {
        let h = crate::params::HomodyneParams::realistic();
        for p in crystal_presets() {
            let sp = p.reference_params().unwrap();
            let qm = super::super::qm_external(0.1, &sp, &h).unwrap();
            let sed = super::super::sed_external(0.1, &sp, &h).unwrap();
            assert!(within(qm, p.reference_external.qm, 0.03), "{}: {qm}", p.name);
            assert!(within(sed, p.reference_external.sed, 0.03), "{}: {sed}", p.name);
        }
    }

    #[test]
    fn doubling_cavity_halves_damping() {
        let mut spec = crystal_presets()[0].spec();
        let a = crystal_to_coupling(&spec).unwrap().big_gamma;
        spec.cavity_length *= 2.0;
        let b = crystal_to_coupling(&spec).unwrap().big_gamma;
        assert!((a / b - 2.0).abs() < 1e-12);
    }

    #[test]
    fn spot_size_volume() {
        let mut spec = crystal_presets()[0].spec();
        spec.mode_volume = ModeVolume::SpotSize(1e-4);
        assert!((spec.volume() - PI * 1e-8 * 0.1).abs() < 1e-20);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut spec = crystal_presets()[0].spec();
        spec.crystal_length = 0.2;
        assert!(crystal_to_coupling(&spec).is_err());
        spec.crystal_length = 0.1;
        spec.transmission = 0.0;
        assert!(crystal_to_coupling(&spec).is_err());
    }
}
