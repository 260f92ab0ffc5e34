//! Drift, diffusion and initial conditions of the two theories.
//!
//! Positive-P state layout: `[a1, a1+, a2, a2+, a3, a3+]`, noise columns
//! `[xi1, xi1+, xi2, xi2+]`. SED state layout: `[b1, b2, b3]`, noise columns
//! `[xi1, xi2, xi3]`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::params::{PhasePoint, SystemParams};
use crate::sde::{gen_pp_noise, gen_sed_noise, NoiseBlock, SdeModel, State};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Theory {
    /// Quantum mechanics through the positive-P representation.
    Qm,
    /// Stochastic electrodynamics.
    Sed,
}

impl Theory {
    pub fn as_str(&self) -> &'static str {
        match self {
            Theory::Qm => "qm",
            Theory::Sed => "sed",
        }
    }
}

impl fmt::Display for Theory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Theory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "qm" | "quantum" | "positive-p" => Ok(Theory::Qm),
            "sed" => Ok(Theory::Sed),
            other => Err(format!("unknown theory `{other}` (expected qm or sed)")),
        }
    }
}

/// A model whose states can be viewed as [`PhasePoint`]s.
pub trait PhaseSpaceModel<const D: usize, const M: usize>: SdeModel<D, M> {
    const THEORY: Theory;

    fn params(&self) -> &SystemParams;

    fn phase_point(&self, x: &State<D>) -> PhasePoint;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositivePModel {
    pub params: SystemParams,
}

impl PositivePModel {
    pub fn new(params: SystemParams) -> Self {
        PositivePModel { params }
    }

    /// Noise amplitudes `(sqrt(g a3), sqrt(g a3+))`, principal branch.
    #[inline]
    fn noise_amplitudes(&self, x: &State<6>) -> (Complex64, Complex64) {
        let g = self.params.g;
        ((x[4] * g).sqrt(), (x[5] * g).sqrt())
    }
}

impl SdeModel<6, 4> for PositivePModel {
    fn drift(&self, x: &State<6>) -> State<6> {
        let SystemParams { g, gamma, .. } = self.params;
        let [a1, a1p, a2, a2p, a3, a3p] = *x;
        [
            -gamma[0] * a1 + g * a2p * a3,
            -gamma[0] * a1p + g * a2 * a3p,
            -gamma[1] * a2 + g * a1p * a3,
            -gamma[1] * a2p + g * a1 * a3p,
            -gamma[2] * a3 - g * a1 * a2,
            -gamma[2] * a3p - g * a1p * a2p,
        ]
    }

    fn diffusion(&self, x: &State<6>) -> [[Complex64; 4]; 6] {
        let (s, sp) = self.noise_amplitudes(x);
        [
            [s, ZERO, ZERO, ZERO],
            [ZERO, sp, ZERO, ZERO],
            [ZERO, ZERO, s, ZERO],
            [ZERO, ZERO, ZERO, sp],
            [ZERO; 4],
            [ZERO; 4],
        ]
    }

    #[inline]
    fn diffuse(&self, x: &State<6>, dw: &[Complex64; 4]) -> State<6> {
        let (s, sp) = self.noise_amplitudes(x);
        [s * dw[0], sp * dw[1], s * dw[2], sp * dw[3], ZERO, ZERO]
    }

    fn initial_state<R: Rng + ?Sized>(&self, _rng: &mut R) -> State<6> {
        let eps = self.params.epsilon;
        [ZERO, ZERO, ZERO, ZERO, eps, eps.conj()]
    }

    fn noise<R: Rng + ?Sized>(&self, rng: &mut R, dt: f64) -> NoiseBlock<4> {
        gen_pp_noise(rng, dt)
    }
}

impl PhaseSpaceModel<6, 4> for PositivePModel {
    const THEORY: Theory = Theory::Qm;

    fn params(&self) -> &SystemParams {
        &self.params
    }

    fn phase_point(&self, x: &State<6>) -> PhasePoint {
        PhasePoint::positive_p(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SedModel {
    pub params: SystemParams,
}

impl SedModel {
    pub fn new(params: SystemParams) -> Self {
        SedModel { params }
    }

    /// Vacuum-fluctuation initial condition: each amplitude is its mean plus
    /// independent N(0, 1/4) real and imaginary parts.
    pub fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> State<3> {
        let means = [ZERO, ZERO, self.params.epsilon];
        means.map(|m| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            m + Complex64::new(0.5 * re, 0.5 * im)
        })
    }
}

impl SdeModel<3, 3> for SedModel {
    fn drift(&self, x: &State<3>) -> State<3> {
        let SystemParams { g, gamma, .. } = self.params;
        let [b1, b2, b3] = *x;
        [
            -gamma[0] * b1 + g * b2.conj() * b3,
            -gamma[1] * b2 + g * b1.conj() * b3,
            -gamma[2] * b3 - g * b1 * b2,
        ]
    }

    fn diffusion(&self, _x: &State<3>) -> [[Complex64; 3]; 3] {
        let s = self.params.gamma.map(|gi| Complex64::new(gi.sqrt(), 0.0));
        [[s[0], ZERO, ZERO], [ZERO, s[1], ZERO], [ZERO, ZERO, s[2]]]
    }

    #[inline]
    fn diffuse(&self, _x: &State<3>, dw: &[Complex64; 3]) -> State<3> {
        let gamma = self.params.gamma;
        [dw[0] * gamma[0].sqrt(), dw[1] * gamma[1].sqrt(), dw[2] * gamma[2].sqrt()]
    }

    fn initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> State<3> {
        self.sample_initial(rng)
    }

    fn noise<R: Rng + ?Sized>(&self, rng: &mut R, dt: f64) -> NoiseBlock<3> {
        gen_sed_noise(rng, dt)
    }
}

impl PhaseSpaceModel<3, 3> for SedModel {
    const THEORY: Theory = Theory::Sed;

    fn params(&self) -> &SystemParams {
        &self.params
    }

    fn phase_point(&self, x: &State<3>) -> PhasePoint {
        PhasePoint::sed(x)
    }
}
