//! Generic SDE machinery: correlated complex Wiener increments, the
//! semi-implicit midpoint integrator, and seeded path integration.
//!
//! A model is written as
//!
//! ```text
//! dx_i = A_i(x) dtau + sum_j B_ij(x) dW_j
//! ```
//!
//! with `D` complex state components and `M` complex noise channels. The
//! midpoint scheme iterates
//!
//! ```text
//! xbar[p] = x + (A(xbar[p-1]) dtau + B(xbar[p-1]) dW) / 2,   xbar[0] = x
//! ```
//!
//! a fixed number of times, then steps `x + A(xbar) dtau + B(xbar) dW`. It
//! converges to the Stratonovich solution.

mod noise;
mod trajectory;

pub use noise::{gen_pp_noise, gen_sed_noise, path_rng, NoiseBlock};
pub use trajectory::{read_trajectory_dump, write_trajectory_dump, Trajectory};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::TimeGrid;

pub type State<const D: usize> = [Complex64; D];

pub trait SdeModel<const D: usize, const M: usize>: Sync {
    fn drift(&self, x: &State<D>) -> State<D>;

    /// Row `i`, column `j` multiplies noise channel `j` in equation `i`.
    fn diffusion(&self, x: &State<D>) -> [[Complex64; M]; D];

    /// `B(x) dW`. Override when the matrix is sparse.
    fn diffuse(&self, x: &State<D>, dw: &[Complex64; M]) -> State<D> {
        let b = self.diffusion(x);
        let mut out = [Complex64::new(0.0, 0.0); D];
        for (o, row) in out.iter_mut().zip(b.iter()) {
            *o = row.iter().zip(dw.iter()).map(|(bij, w)| bij * w).sum();
        }
        out
    }

    fn initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> State<D>;

    fn noise<R: Rng + ?Sized>(&self, rng: &mut R, dt: f64) -> NoiseBlock<M>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    #[default]
    SemiImplicitMidpoint,
    /// Cross-check only.
    EulerMaruyama,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub midpoint_iterations: u32,
    pub scheme: Scheme,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            midpoint_iterations: 3,
            scheme: Scheme::SemiImplicitMidpoint,
        }
    }
}

impl IntegratorConfig {
    pub fn new(midpoint_iterations: u32, scheme: Scheme) -> Result<Self> {
        if midpoint_iterations == 0 {
            return Err(Error::invalid("midpoint_iterations", "must be >= 1"));
        }
        Ok(IntegratorConfig {
            midpoint_iterations,
            scheme,
        })
    }

    pub fn euler() -> Self {
        IntegratorConfig {
            midpoint_iterations: 1,
            scheme: Scheme::EulerMaruyama,
        }
    }
}

#[inline]
fn is_finite<const D: usize>(x: &State<D>) -> bool {
    x.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

#[inline]
fn increment<const D: usize, const M: usize, Mo: SdeModel<D, M> + ?Sized>(
    model: &Mo,
    at: &State<D>,
    noise: &NoiseBlock<M>,
) -> State<D> {
    let a = model.drift(at);
    let b = model.diffuse(at, &noise.increments);
    let mut out = [Complex64::new(0.0, 0.0); D];
    for i in 0..D {
        out[i] = a[i] * noise.dt + b[i];
    }
    out
}

fn nonfinite() -> Error {
    Error::NonFinite {
        step: 0,
        path: 0,
        seed: 0,
    }
}

/// One semi-implicit midpoint step. A `NonFinite` error carries zeroed
/// step/path/seed fields; [`integrate_path`] fills them in.
pub fn step_semi_implicit<const D: usize, const M: usize, Mo: SdeModel<D, M> + ?Sized>(
    model: &Mo,
    x: &State<D>,
    noise: &NoiseBlock<M>,
    cfg: &IntegratorConfig,
) -> Result<State<D>> {
    let mut mid = *x;
    for _ in 0..cfg.midpoint_iterations {
        let dx = increment(model, &mid, noise);
        for i in 0..D {
            mid[i] = x[i] + 0.5 * dx[i];
        }
        if !is_finite(&mid) {
            return Err(nonfinite());
        }
    }
    let dx = increment(model, &mid, noise);
    let mut out = *x;
    for i in 0..D {
        out[i] += dx[i];
    }
    if is_finite(&out) {
        Ok(out)
    } else {
        Err(nonfinite())
    }
}

pub fn step_euler<const D: usize, const M: usize, Mo: SdeModel<D, M> + ?Sized>(
    model: &Mo,
    x: &State<D>,
    noise: &NoiseBlock<M>,
) -> Result<State<D>> {
    let dx = increment(model, x, noise);
    let mut out = *x;
    for i in 0..D {
        out[i] += dx[i];
    }
    if is_finite(&out) {
        Ok(out)
    } else {
        Err(nonfinite())
    }
}

pub fn step<const D: usize, const M: usize, Mo: SdeModel<D, M> + ?Sized>(
    model: &Mo,
    x: &State<D>,
    noise: &NoiseBlock<M>,
    cfg: &IntegratorConfig,
) -> Result<State<D>> {
    match cfg.scheme {
        Scheme::SemiImplicitMidpoint => step_semi_implicit(model, x, noise, cfg),
        Scheme::EulerMaruyama => step_euler(model, x, noise),
    }
}

/// Integrates one path from the model's initial sampler through grid node
/// `last_node`, handing every node's state to `observe`.
///
/// On overflow returns the index of the step that produced it.
pub fn integrate_observed<const D: usize, const M: usize, Mo, R, F>(
    model: &Mo,
    grid: &TimeGrid,
    cfg: &IntegratorConfig,
    rng: &mut R,
    last_node: usize,
    mut observe: F,
) -> std::result::Result<(), usize>
where
    Mo: SdeModel<D, M> + ?Sized,
    R: Rng + ?Sized,
    F: FnMut(usize, &State<D>),
{
    let dt = grid.dt();
    let mut x = model.initial_state(rng);
    observe(0, &x);
    for k in 1..=last_node.min(grid.n_steps()) {
        let noise = model.noise(rng, dt);
        x = step(model, &x, &noise, cfg).map_err(|_| k)?;
        observe(k, &x);
    }
    Ok(())
}

/// Full time-gridded path number `path` of the ensemble seeded by `seed`.
pub fn integrate_path<const D: usize, const M: usize, Mo: SdeModel<D, M> + ?Sized>(
    model: &Mo,
    grid: &TimeGrid,
    cfg: &IntegratorConfig,
    seed: u64,
    path: u64,
) -> Result<Trajectory<D>> {
    let mut rng = path_rng(seed, path);
    let mut states = Vec::with_capacity(grid.n_nodes());
    integrate_observed(model, grid, cfg, &mut rng, grid.n_steps(), |_, x| states.push(*x))
        .map_err(|step| Error::NonFinite { step, path, seed })?;
    Ok(Trajectory::new(*grid, states, seed, path))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Decay;

    impl SdeModel<1, 1> for Decay {
        fn drift(&self, x: &State<1>) -> State<1> {
            [-x[0]]
        }
        fn diffusion(&self, _x: &State<1>) -> [[Complex64; 1]; 1] {
            [[Complex64::new(0.0, 0.0)]]
        }
        fn initial_state<R: Rng + ?Sized>(&self, _rng: &mut R) -> State<1> {
            [Complex64::new(1.0, 0.0)]
        }
        fn noise<R: Rng + ?Sized>(&self, _rng: &mut R, dt: f64) -> NoiseBlock<1> {
            NoiseBlock::zero(dt)
        }
    }

    struct Frozen;

    impl SdeModel<2, 2> for Frozen {
        fn drift(&self, _x: &State<2>) -> State<2> {
            [Complex64::new(0.0, 0.0); 2]
        }
        fn diffusion(&self, _x: &State<2>) -> [[Complex64; 2]; 2] {
            [[Complex64::new(0.0, 0.0); 2]; 2]
        }
        fn initial_state<R: Rng + ?Sized>(&self, _rng: &mut R) -> State<2> {
            [Complex64::new(0.3, -1.7), Complex64::new(1e-300, 5e300)]
        }
        fn noise<R: Rng + ?Sized>(&self, rng: &mut R, dt: f64) -> NoiseBlock<2> {
            let n = gen_sed_noise(rng, dt);
            NoiseBlock {
                increments: [n.increments[0], n.increments[1]],
                dt,
            }
        }
    }

    struct Blowup;

    impl SdeModel<1, 1> for Blowup {
        fn drift(&self, x: &State<1>) -> State<1> {
            [x[0] * x[0] * 1e200]
        }
        fn diffusion(&self, _x: &State<1>) -> [[Complex64; 1]; 1] {
            [[Complex64::new(0.0, 0.0)]]
        }
        fn initial_state<R: Rng + ?Sized>(&self, _rng: &mut R) -> State<1> {
            [Complex64::new(1e100, 0.0)]
        }
        fn noise<R: Rng + ?Sized>(&self, _rng: &mut R, dt: f64) -> NoiseBlock<1> {
            NoiseBlock::zero(dt)
        }
    }

    fn decay_error(dt: f64) -> f64 {
        let grid = TimeGrid::new(0.0, 1.0, dt).unwrap();
        let traj = integrate_path(&Decay, &grid, &IntegratorConfig::default(), 0, 0).unwrap();
        (traj.states().last().unwrap()[0].re - (-1.0f64).exp()).abs()
    }

    #[test]
    fn deterministic_decay_reaches_inverse_e() {
        assert!(decay_error(0.0025) < 1e-5);
    }

    #[test]
    fn deterministic_limit_is_second_order() {
        let ratio = decay_error(0.01) / decay_error(0.005);
        assert!(ratio >= 3.5, "error ratio {ratio}");
    }

    #[test]
    fn identity_model_leaves_state_bit_exact() {
        let grid = TimeGrid::new(0.0, 0.5, 0.0025).unwrap();
        let traj = integrate_path(&Frozen, &grid, &IntegratorConfig::default(), 3, 1).unwrap();
        let x0 = traj.states()[0];
        assert!(traj.states().iter().all(|x| *x == x0));
    }

    #[test]
    fn overflow_reports_step_path_and_seed() {
        let grid = TimeGrid::new(0.0, 1.0, 0.01).unwrap();
        let err = integrate_path(&Blowup, &grid, &IntegratorConfig::default(), 42, 7).unwrap_err();
        assert_eq!(err, Error::NonFinite { step: 1, path: 7, seed: 42 });
    }

    #[test]
    fn zero_iterations_rejected() {
        assert!(IntegratorConfig::new(0, Scheme::SemiImplicitMidpoint).is_err());
    }
}
