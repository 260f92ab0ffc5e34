//! Closed-form leading-order predictions of both theories.
//!
//! Quantum moments are cubic in `g`, SED moments linear. The intracavity
//! formulas require equal damping on all modes; the external formulas are
//! the lowest order in both `g` and the detection window `tau_f`, with the
//! local-oscillator phases at zero and detection starting at `tau = 0`.

pub mod constants;
mod crystal;

pub use crystal::{
    crystal_presets, crystal_to_coupling, Coupling, CrystalPreset, CrystalSpec, ModeVolume, ReferenceCoupling,
    ReferenceExternal,
};

use std::f64::consts::SQRT_2;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::Theory;
use crate::params::{HomodyneParams, PhaseAngles, SystemParams};

/// Below this value of gamma * tau the quantum triple moment is evaluated
/// from its five-term Taylor series.
pub const SERIES_SWITCHOVER: f64 = 1e-3;

/// Projections with |cos| below this are flagged: there the dominant-term
/// approximation is not guaranteed.
pub const DEGENERATE_PROJECTION: f64 = 1e-6;

/// sinh(x) - x for small x, five terms.
fn sinh_minus_x_series(x: f64) -> f64 {
    let x2 = x * x;
    x * x2
        * (1.0 / 6.0
            + x2 * (1.0 / 120.0 + x2 * (1.0 / 5040.0 + x2 * (1.0 / 362_880.0 + x2 / 39_916_800.0))))
}

/// sinh(x) - x without the cancellation of the direct difference: a
/// Taylor sum below 0.5, where it converges to full precision in nine
/// terms, and the direct difference above.
fn sinh_minus_x(x: f64) -> f64 {
    if x.abs() >= 0.5 {
        return x.sinh() - x;
    }
    let x2 = x * x;
    let mut term = x * x2 / 6.0;
    let mut sum = term;
    for k in 2..=9 {
        let n = (2 * k + 1) as f64;
        term *= x2 / ((n - 1.0) * n);
        sum += term;
    }
    sum
}

/// Closed form of `<a1 a2 da3>`. The bracket
/// exp(gt)/g - 2t - exp(-gt)/g equals 2 (sinh gt - gt) / g and is evaluated
/// in that form so it keeps full precision at small gamma * tau.
pub fn qm_triple_closed_form(tau: f64, gamma: f64, g: f64, epsilon: Complex64) -> Complex64 {
    let gt = gamma * tau;
    let bracket = 2.0 * sinh_minus_x(gt) / gamma;
    -epsilon * epsilon * (g.powi(3) * (-3.0 * gt).exp() / (gamma * gamma) * bracket)
}

/// Series form of the same moment, `-2 eps^2 g^3 e^{-3gt} (sinh gt - gt) / gamma^3`.
pub fn qm_triple_series(tau: f64, gamma: f64, g: f64, epsilon: Complex64) -> Complex64 {
    let gt = gamma * tau;
    let s = sinh_minus_x_series(gt);
    -epsilon * epsilon * (2.0 * g.powi(3) * (-3.0 * gt).exp() * s / gamma.powi(3))
}

/// Leading `O(g^3)` intracavity moment `<a1 a2 da3>` of the positive-P
/// variables at time `tau`.
pub fn qm_triple_intracavity(tau: f64, p: &SystemParams) -> Result<Complex64> {
    let gamma = p.common_gamma()?;
    check_time("tau", tau)?;
    Ok(if gamma * tau < SERIES_SWITCHOVER {
        qm_triple_series(tau, gamma, p.g, p.epsilon)
    } else {
        qm_triple_closed_form(tau, gamma, p.g, p.epsilon)
    })
}

/// `<dX1 dX2 dX3>` in quantum mechanics, from the two dominant moments:
/// `Re(<a1 a2 da3> e^{-i Theta}) / 4`. For real pump amplitude this is
/// `cos(Theta) <a1 a2 da3> / 4`.
pub fn qm_moment_m(tau: f64, p: &SystemParams, angles: &PhaseAngles) -> Result<f64> {
    let t = qm_triple_intracavity(tau, p)?;
    Ok(0.25 * (t * Complex64::from_polar(1.0, -angles.big_theta())).re)
}

/// Leading `O(g)` SED moment `<db1 db2 db3*> = g (1 - e^{-3 gamma tau}) / (12 gamma)`.
pub fn sed_triple_intracavity(tau: f64, p: &SystemParams) -> Result<Complex64> {
    let gamma = p.common_gamma()?;
    check_time("tau", tau)?;
    Ok(Complex64::new(
        -p.g * (-3.0 * gamma * tau).exp_m1() / (12.0 * gamma),
        0.0,
    ))
}

/// `<dX1 dX2 dX3>` in SED: `cos(Phi) <db1 db2 db3*> / 4`.
pub fn sed_moment_m(tau: f64, p: &SystemParams, angles: &PhaseAngles) -> Result<f64> {
    let t = sed_triple_intracavity(tau, p)?;
    Ok(0.25 * (t * Complex64::from_polar(1.0, -angles.big_phi())).re)
}

/// External quantum moment for detection over `[0, tau_f]`:
/// `-(sqrt2/48) g^3 eps^2 (e A eta E)^3 Gamma^{-3/2} tau_f^6`.
pub fn qm_external(tau_f: f64, p: &SystemParams, h: &HomodyneParams) -> Result<f64> {
    check_time("tau_f", tau_f)?;
    let eps2 = (p.epsilon * p.epsilon).re;
    Ok(-SQRT_2 / 48.0 * p.g.powi(3) * eps2 * external_scale(p, h) * tau_f.powi(6))
}

/// External SED moment: `(sqrt2/16) g tau_f^4 (e A eta E)^3 Gamma^{-3/2}`.
pub fn sed_external(tau_f: f64, p: &SystemParams, h: &HomodyneParams) -> Result<f64> {
    check_time("tau_f", tau_f)?;
    Ok(SQRT_2 / 16.0 * p.g * external_scale(p, h) * tau_f.powi(4))
}

/// `(e A eta E)^3 Gamma^{-3/2}`.
pub fn external_scale(p: &SystemParams, h: &HomodyneParams) -> f64 {
    h.chain_factor().powi(3) * p.big_gamma.powf(-1.5)
}

/// Signal-to-noise ratio of the difference between the two theories'
/// external sample moments for `n` observations:
/// `sqrt(n-1) eta^{3/2} g tau_f^{5/2} / 16`.
pub fn signal_to_noise(n: f64, eta: f64, g: f64, tau_f: f64) -> Result<f64> {
    if !(n >= 2.0) {
        return Err(Error::invalid("n", format!("sample size must be >= 2, got {n}")));
    }
    Ok((n - 1.0).sqrt() * eta.powf(1.5) * g * tau_f.powf(2.5) / 16.0)
}

/// Smallest sample size with `signal_to_noise >= target`.
pub fn sample_size_for_snr(target: f64, eta: f64, g: f64, tau_f: f64) -> Result<f64> {
    if !(target > 0.0) {
        return Err(Error::invalid("target", "must be > 0"));
    }
    let per_root = eta.powf(1.5) * g * tau_f.powf(2.5) / 16.0;
    if !(per_root > 0.0) || !per_root.is_finite() {
        return Err(Error::invalid("g", "signal-to-noise slope must be positive"));
    }
    Ok((1.0 + (target / per_root).powi(2)).max(2.0))
}

fn check_time(field: &'static str, t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("must be finite and >= 0, got {t}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Intracavity,
    External,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticPrediction {
    pub value: f64,
    pub theory: Theory,
    pub scope: Scope,
    pub leading_order_in_g: u32,
    /// Set when the phase projection |cos| is below [`DEGENERATE_PROJECTION`].
    pub degenerate_projection: bool,
}

impl Theory {
    pub fn leading_order_in_g(&self) -> u32 {
        match self {
            Theory::Qm => 3,
            Theory::Sed => 1,
        }
    }
}

pub fn predict_intracavity(
    theory: Theory,
    tau: f64,
    p: &SystemParams,
    angles: &PhaseAngles,
) -> Result<AnalyticPrediction> {
    let (value, phase) = match theory {
        Theory::Qm => (qm_moment_m(tau, p, angles)?, angles.big_theta()),
        Theory::Sed => (sed_moment_m(tau, p, angles)?, angles.big_phi()),
    };
    Ok(AnalyticPrediction {
        value,
        theory,
        scope: Scope::Intracavity,
        leading_order_in_g: theory.leading_order_in_g(),
        degenerate_projection: phase.cos().abs() < DEGENERATE_PROJECTION,
    })
}

pub fn predict_external(
    theory: Theory,
    tau_f: f64,
    p: &SystemParams,
    h: &HomodyneParams,
) -> Result<AnalyticPrediction> {
    let value = match theory {
        Theory::Qm => qm_external(tau_f, p, h)?,
        Theory::Sed => sed_external(tau_f, p, h)?,
    };
    Ok(AnalyticPrediction {
        value,
        theory,
        scope: Scope::External,
        leading_order_in_g: theory.leading_order_in_g(),
        degenerate_projection: false,
    })
}
