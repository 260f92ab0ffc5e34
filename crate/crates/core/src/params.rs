//! Shared domain types: physical configuration, phase angles, the time grid
//! and phase-space points.
//!
//! Everything is dimensionless: time is scaled by the reference damping
//! constant `Gamma` (tau = Gamma * t), couplings and dampings are ratios to
//! `Gamma`. Only the external-moment formulas re-dimensionalize, through
//! [`SystemParams::big_gamma`] and [`HomodyneParams`].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Step size used by every shipped experiment.
pub const DEFAULT_DT: f64 = 0.0025;

/// Configuration of the damped nondegenerate parametric oscillator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Dimensionless nonlinear coupling G / Gamma.
    pub g: f64,
    /// Damping ratios Gamma_i / Gamma for signal, idler and pump.
    pub gamma: [f64; 3],
    /// Initial coherent pump amplitude; N = |epsilon|^2 pump photons.
    pub epsilon: Complex64,
    /// Reference damping constant in s^-1.
    pub big_gamma: f64,
}

impl SystemParams {
    pub fn new(g: f64, gamma: [f64; 3], epsilon: Complex64) -> Result<Self> {
        let p = SystemParams {
            g,
            gamma,
            epsilon,
            big_gamma: 1.0,
        };
        p.check()?;
        Ok(p)
    }

    /// Equal damping on all three modes, real pump amplitude.
    pub fn equal_damping(g: f64, gamma: f64, epsilon: f64) -> Result<Self> {
        Self::new(g, [gamma; 3], Complex64::new(epsilon, 0.0))
    }

    pub fn with_big_gamma(mut self, big_gamma: f64) -> Result<Self> {
        self.big_gamma = big_gamma;
        self.check()?;
        Ok(self)
    }

    pub fn with_g(mut self, g: f64) -> Result<Self> {
        self.g = g;
        self.check()?;
        Ok(self)
    }

    /// Mean initial pump photon number.
    pub fn photon_number(&self) -> f64 {
        self.epsilon.norm_sqr()
    }

    pub fn gamma_min(&self) -> f64 {
        self.gamma.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// The common damping ratio, if all three modes share it exactly.
    pub fn common_gamma(&self) -> Result<f64> {
        let [a, b, c] = self.gamma;
        if a == b && b == c {
            Ok(a)
        } else {
            Err(Error::UnequalDamping(self.gamma))
        }
    }

    pub(crate) fn check(&self) -> Result<()> {
        // g = 0 is the decoupled limit and is allowed; negative is not.
        if !self.g.is_finite() || self.g < 0.0 {
            return Err(Error::invalid("g", format!("must be finite and >= 0, got {}", self.g)));
        }
        for (i, &gi) in self.gamma.iter().enumerate() {
            if !gi.is_finite() || gi <= 0.0 {
                let field = ["gamma1", "gamma2", "gamma3"][i];
                return Err(Error::invalid(field, format!("must be finite and > 0, got {gi}")));
            }
        }
        if !self.epsilon.re.is_finite() || !self.epsilon.im.is_finite() {
            return Err(Error::invalid("epsilon", "must be finite"));
        }
        if !self.big_gamma.is_finite() || self.big_gamma <= 0.0 {
            return Err(Error::invalid(
                "Gamma",
                format!("must be finite and > 0, got {}", self.big_gamma),
            ));
        }
        Ok(())
    }
}

/// Intracavity quadrature phases and external local-oscillator phases, radians.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhaseAngles {
    pub theta: [f64; 3],
    pub theta_bar: [f64; 3],
}

impl PhaseAngles {
    pub fn new(theta: [f64; 3], theta_bar: [f64; 3]) -> Result<Self> {
        if theta.iter().chain(theta_bar.iter()).any(|t| !t.is_finite()) {
            return Err(Error::invalid("theta", "phase angles must be finite"));
        }
        Ok(PhaseAngles { theta, theta_bar })
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// Theta = theta1 + theta2 + theta3, the phase the quantum moment projects on.
    pub fn big_theta(&self) -> f64 {
        self.theta[0] + self.theta[1] + self.theta[2]
    }

    /// Phi = theta1 + theta2 - theta3, the phase the SED moment projects on.
    pub fn big_phi(&self) -> f64 {
        self.theta[0] + self.theta[1] - self.theta[2]
    }
}

/// Uniform grid `t_start + k * dt`, `k = 0..=n_steps`, in scaled time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_start: f64,
    t_end: f64,
    dt: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, dt: f64) -> Result<Self> {
        if !dt.is_finite() || dt <= 0.0 {
            return Err(Error::invalid("dt", format!("must be finite and > 0, got {dt}")));
        }
        if !t_start.is_finite() || t_start < 0.0 {
            return Err(Error::invalid("t_start", format!("must be >= 0, got {t_start}")));
        }
        if !t_end.is_finite() || t_end <= t_start {
            return Err(Error::invalid(
                "t_end",
                format!("must exceed t_start = {t_start}, got {t_end}"),
            ));
        }
        let ratio = (t_end - t_start) / dt;
        let n = ratio.round();
        if n < 1.0 || (ratio - n).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::invalid(
                "dt",
                format!("(t_end - t_start) / dt = {ratio} is not a positive integer"),
            ));
        }
        Ok(TimeGrid {
            t_start,
            t_end,
            dt,
            n_steps: n as usize,
        })
    }

    /// Grid from 0 to `t_end` with the default step.
    pub fn from_zero(t_end: f64) -> Result<Self> {
        Self::new(0.0, t_end, DEFAULT_DT)
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_nodes(&self) -> usize {
        self.n_steps + 1
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.n_steps {
            self.t_end
        } else {
            self.t_start + k as f64 * self.dt
        }
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_nodes()).map(|k| self.time(k))
    }

    /// Index of the node at time `tau`, if `tau` lies on the grid.
    pub fn node_index(&self, tau: f64) -> Option<usize> {
        let r = (tau - self.t_start) / self.dt;
        let k = r.round();
        if k < 0.0 || k > self.n_steps as f64 || (r - k).abs() > 1e-6 {
            return None;
        }
        Some(k as usize)
    }

    /// Every `stride`-th node plus the last one.
    pub fn strided_nodes(&self, stride: usize) -> Vec<usize> {
        let stride = stride.max(1);
        let mut nodes: Vec<usize> = (0..self.n_nodes()).step_by(stride).collect();
        if *nodes.last().unwrap() != self.n_steps {
            nodes.push(self.n_steps);
        }
        nodes
    }
}

/// Balanced-homodyne detection chain: electron charge, amplifier gain,
/// detector efficiency and local-oscillator amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomodyneParams {
    /// Coulombs.
    pub e_charge: f64,
    pub amp: f64,
    pub eta: f64,
    /// Local-oscillator amplitude in s^-1/2.
    pub e_lo: f64,
}

impl HomodyneParams {
    pub fn new(e_charge: f64, amp: f64, eta: f64, e_lo: f64) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::invalid("eta", format!("must lie in (0, 1], got {eta}")));
        }
        if !e_lo.is_finite() || e_lo <= 0.0 {
            return Err(Error::invalid("e_lo", format!("must be > 0, got {e_lo}")));
        }
        if !e_charge.is_finite() || !amp.is_finite() {
            return Err(Error::invalid("e_charge", "charge and gain must be finite"));
        }
        Ok(HomodyneParams {
            e_charge,
            amp,
            eta,
            e_lo,
        })
    }

    /// All factors one: external moments in units of the intracavity ones.
    pub fn unit() -> Self {
        HomodyneParams {
            e_charge: 1.0,
            amp: 1.0,
            eta: 1.0,
            e_lo: 1.0,
        }
    }

    /// Amplification `A = 1/e`, perfect detectors, `E = 1e9 s^-1/2`.
    pub fn realistic() -> Self {
        let e = crate::analytic::constants::ELEMENTARY_CHARGE;
        HomodyneParams {
            e_charge: e,
            amp: 1.0 / e,
            eta: 1.0,
            e_lo: 1e9,
        }
    }

    /// The product e * A * eta * E.
    pub fn chain_factor(&self) -> f64 {
        self.e_charge * self.amp * self.eta * self.e_lo
    }
}

/// State of one stochastic trajectory at one instant.
///
/// For the positive-P variant `a_ip` is *not* the conjugate of `a_i`; the two
/// are independent variables that only agree in ensemble mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhasePoint {
    PositiveP {
        a1: Complex64,
        a1p: Complex64,
        a2: Complex64,
        a2p: Complex64,
        a3: Complex64,
        a3p: Complex64,
    },
    Sed {
        b1: Complex64,
        b2: Complex64,
        b3: Complex64,
    },
}

impl PhasePoint {
    /// Packs `[a1, a1p, a2, a2p, a3, a3p]`.
    pub fn positive_p(x: &[Complex64; 6]) -> Self {
        PhasePoint::PositiveP {
            a1: x[0],
            a1p: x[1],
            a2: x[2],
            a2p: x[3],
            a3: x[4],
            a3p: x[5],
        }
    }

    pub fn sed(x: &[Complex64; 3]) -> Self {
        PhasePoint::Sed {
            b1: x[0],
            b2: x[1],
            b3: x[2],
        }
    }

    /// Amplitude and "conjugate" amplitude of `mode` (1-based). For SED the
    /// second is the true complex conjugate.
    pub fn mode_pair(&self, mode: usize) -> Result<(Complex64, Complex64)> {
        let pair = match (self, mode) {
            (PhasePoint::PositiveP { a1, a1p, .. }, 1) => (*a1, *a1p),
            (PhasePoint::PositiveP { a2, a2p, .. }, 2) => (*a2, *a2p),
            (PhasePoint::PositiveP { a3, a3p, .. }, 3) => (*a3, *a3p),
            (PhasePoint::Sed { b1, .. }, 1) => (*b1, b1.conj()),
            (PhasePoint::Sed { b2, .. }, 2) => (*b2, b2.conj()),
            (PhasePoint::Sed { b3, .. }, 3) => (*b3, b3.conj()),
            _ => return Err(Error::invalid("mode", format!("must be 1, 2 or 3, got {mode}"))),
        };
        Ok(pair)
    }

    pub fn is_finite(&self) -> bool {
        let finite = |z: &Complex64| z.re.is_finite() && z.im.is_finite();
        match self {
            PhasePoint::PositiveP {
                a1,
                a1p,
                a2,
                a2p,
                a3,
                a3p,
            } => [a1, a1p, a2, a2p, a3, a3p].into_iter().all(finite),
            PhasePoint::Sed { b1, b2, b3 } => [b1, b2, b3].into_iter().all(finite),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// g >= 1: far outside the perturbative regime of the analytic formulas.
    StrongCoupling { g: f64 },
    /// g |epsilon| tau_f / gamma_min >= 1: positive-P boundary terms may bias
    /// the quantum simulation.
    BoundaryTerms { indicator: f64 },
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Warning::StrongCoupling { g } => {
                write!(f, "g = {g} >= 1: leading-order analytic results are not expected to hold")
            }
            Warning::BoundaryTerms { indicator } => write!(
                f,
                "g|eps|tau_f/gamma_min = {indicator:.3} >= 1: positive-P boundary terms may not be negligible"
            ),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub warnings: Vec<Warning>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.warnings.is_empty()
    }
}

/// Checks every invariant and collects non-fatal cautions for the run.
pub fn validate_params(p: &SystemParams, grid: &TimeGrid) -> Result<ValidationReport> {
    p.check()?;
    // Grids are validated at construction; re-check in case of a
    // deserialized value.
    TimeGrid::new(grid.t_start, grid.t_end, grid.dt)?;

    let mut report = ValidationReport::default();
    if p.g >= 1.0 {
        report.warnings.push(Warning::StrongCoupling { g: p.g });
    }
    let indicator = p.g * p.epsilon.norm() * grid.t_end / p.gamma_min();
    if indicator >= 1.0 {
        report.warnings.push(Warning::BoundaryTerms { indicator });
    }
    Ok(report)
}
