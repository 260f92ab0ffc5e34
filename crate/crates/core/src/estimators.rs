//! Ensemble statistics over simulated trajectories.
//!
//! Third-order central moments are centred on the grand means of the whole
//! ensemble; the batch structure is used only for the standard error
//! (batch means). Paths are grouped into batches of consecutive path
//! indices, each batch is integrated by one worker in index order, and
//! batches are merged in batch order, so every result is bit-reproducible
//! at any thread count.

use std::io::{self, Write};
use std::sync::atomic::{AtomicBool, Ordering};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{PhaseSpaceModel, PositivePModel, SedModel, Theory};
use crate::params::{HomodyneParams, PhaseAngles, PhasePoint, SystemParams, TimeGrid};
use crate::sde::{integrate_observed, path_rng, IntegratorConfig, SdeModel, State, Trajectory};

pub const DEFAULT_PATHS: usize = 100_000;
pub const DEFAULT_BATCHES: usize = 100;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Quadrature `(a e^{-i theta} + a+ e^{i theta}) / 2` of `mode` (1-based).
/// Real for SED points, generally complex for positive-P points.
pub fn quadrature(x: &PhasePoint, mode: usize, theta: f64) -> Result<Complex64> {
    let (a, ap) = x.mode_pair(mode)?;
    let rot = Complex64::from_polar(1.0, -theta);
    Ok(0.5 * (a * rot + ap * rot.conj()))
}

fn quadrature_triple(x: &PhasePoint, rot: &[Complex64; 3]) -> [Complex64; 3] {
    let mut out = [ZERO; 3];
    for (i, o) in out.iter_mut().enumerate() {
        let (a, ap) = x.mode_pair(i + 1).expect("modes 1..=3");
        *o = 0.5 * (a * rot[i] + ap * rot[i].conj());
    }
    out
}

fn rotations(theta: &[f64; 3]) -> [Complex64; 3] {
    theta.map(|t| Complex64::from_polar(1.0, -t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub mean: Complex64,
    /// Batch-means standard error of the real part.
    pub std_error: f64,
    /// Batch-means standard error of the imaginary part.
    pub std_error_im: f64,
    pub n_paths: usize,
    pub n_batches: usize,
    /// |Im(mean)| / std_error_im; zero when both vanish.
    pub imag_diagnostic: f64,
}

impl MomentEstimate {
    fn from_batches(mean: Complex64, batch_values: &[Complex64], n_paths: usize) -> Self {
        let nb = batch_values.len();
        let (se_re, se_im) = batch_standard_errors(batch_values);
        MomentEstimate {
            mean,
            std_error: se_re,
            std_error_im: se_im,
            n_paths,
            n_batches: nb,
            imag_diagnostic: ratio_or_zero(mean.im.abs(), se_im),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        MomentEstimate {
            mean: self.mean * factor,
            std_error: self.std_error * factor.abs(),
            std_error_im: self.std_error_im * factor.abs(),
            ..*self
        }
    }

    /// Real part in units of its standard error.
    pub fn significance(&self) -> f64 {
        ratio_or_zero(self.mean.re.abs(), self.std_error)
    }
}

fn ratio_or_zero(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

fn batch_standard_errors(values: &[Complex64]) -> (f64, f64) {
    let nb = values.len() as f64;
    let mean: Complex64 = values.iter().sum::<Complex64>() / nb;
    let (mut vr, mut vi) = (0.0, 0.0);
    for v in values {
        vr += (v.re - mean.re).powi(2);
        vi += (v.im - mean.im).powi(2);
    }
    let denom = (nb - 1.0) * nb;
    ((vr / denom).sqrt(), (vi / denom).sqrt())
}

fn check_batching(n_paths: usize, n_batches: usize) -> Result<usize> {
    if n_batches < 2 {
        return Err(Error::DegenerateEnsemble(format!("need >= 2 batches, got {n_batches}")));
    }
    if n_paths % n_batches != 0 {
        return Err(Error::DegenerateEnsemble(format!(
            "{n_paths} paths do not split evenly into {n_batches} batches"
        )));
    }
    let size = n_paths / n_batches;
    if size < 2 {
        return Err(Error::DegenerateEnsemble(format!(
            "batches of {size} path(s); need at least 2 per batch"
        )));
    }
    Ok(size)
}

/// `<dv1 dv2 dv3>` from per-path values, centred on the grand means.
///
/// The estimate is accumulated over all paths in index order, so it does
/// not depend on `n_batches`; only the standard error does.
pub fn triple_central_moment(values: &[[Complex64; 3]], n_batches: usize) -> Result<MomentEstimate> {
    let size = check_batching(values.len(), n_batches)?;
    let n = values.len() as f64;
    let mut means = [ZERO; 3];
    for v in values {
        for i in 0..3 {
            means[i] += v[i];
        }
    }
    let means = means.map(|s| s / n);
    let centred = |v: &[Complex64; 3]| (v[0] - means[0]) * (v[1] - means[1]) * (v[2] - means[2]);

    let total: Complex64 = values.iter().map(centred).sum();
    let batch_values: Vec<Complex64> = values
        .chunks_exact(size)
        .map(|batch| batch.iter().map(centred).sum::<Complex64>() / size as f64)
        .collect();
    Ok(MomentEstimate::from_batches(total / n, &batch_values, values.len()))
}

/// Shifted power sums of one batch at one node. Values are shifted by the
/// first value seen, which keeps the raw sums well conditioned when a mode
/// carries a large mean (the pump).
#[derive(Debug, Clone, Copy, Default)]
struct TripleSums {
    n: usize,
    shift: [Complex64; 3],
    s1: [Complex64; 3],
    s12: Complex64,
    s13: Complex64,
    s23: Complex64,
    s123: Complex64,
}

impl TripleSums {
    fn push(&mut self, v: [Complex64; 3]) {
        if self.n == 0 {
            self.shift = v;
        }
        let u = [v[0] - self.shift[0], v[1] - self.shift[1], v[2] - self.shift[2]];
        self.n += 1;
        for i in 0..3 {
            self.s1[i] += u[i];
        }
        self.s12 += u[0] * u[1];
        self.s13 += u[0] * u[2];
        self.s23 += u[1] * u[2];
        self.s123 += u[0] * u[1] * u[2];
    }

    /// Mean of prod(v_i - centre_i) over this batch.
    fn central_about(&self, centre: &[Complex64; 3]) -> Complex64 {
        let n = self.n as f64;
        let d = [centre[0] - self.shift[0], centre[1] - self.shift[1], centre[2] - self.shift[2]];
        (self.s123 - d[0] * self.s23 - d[1] * self.s13 - d[2] * self.s12
            + d[0] * d[1] * self.s1[2]
            + d[0] * d[2] * self.s1[1]
            + d[1] * d[2] * self.s1[0])
            / n
            - d[0] * d[1] * d[2]
    }
}

fn reduce_triples(batches: &[TripleSums]) -> MomentEstimate {
    let n: usize = batches.iter().map(|b| b.n).sum();
    let mut means = [ZERO; 3];
    for b in batches {
        for i in 0..3 {
            means[i] += b.shift[i] * b.n as f64 + b.s1[i];
        }
    }
    let means = means.map(|s| s / n as f64);
    let values: Vec<Complex64> = batches.iter().map(|b| b.central_about(&means)).collect();
    let mean = values.iter().sum::<Complex64>() / values.len() as f64;
    MomentEstimate::from_batches(mean, &values, n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean: Complex64,
    pub std_error_re: f64,
    pub std_error_im: f64,
}

impl MeanEstimate {
    fn from_batch_means(values: &[Complex64]) -> Self {
        let mean = values.iter().sum::<Complex64>() / values.len() as f64;
        let (se_re, se_im) = batch_standard_errors(values);
        MeanEstimate {
            mean,
            std_error_re: se_re,
            std_error_im: se_im,
        }
    }

    /// Largest of the real and imaginary deviations from `target`, each in
    /// units of its own standard error.
    pub fn deviation_from(&self, target: Complex64) -> f64 {
        let d = self.mean - target;
        ratio_or_zero(d.re.abs(), self.std_error_re).max(ratio_or_zero(d.im.abs(), self.std_error_im))
    }
}

/// Size and seeding of a Monte Carlo ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnsembleConfig {
    pub n_paths: usize,
    pub n_batches: usize,
    pub seed: u64,
    pub integrator: IntegratorConfig,
}

impl EnsembleConfig {
    pub fn new(n_paths: usize, n_batches: usize, seed: u64) -> Result<Self> {
        check_batching(n_paths, n_batches)?;
        Ok(EnsembleConfig {
            n_paths,
            n_batches,
            seed,
            integrator: IntegratorConfig::default(),
        })
    }

    pub fn with_integrator(mut self, integrator: IntegratorConfig) -> Self {
        self.integrator = integrator;
        self
    }
}

/// Per-batch state fed with every path of the batch in index order.
pub trait PathAccumulator<const D: usize>: Send {
    fn observe(&mut self, node: usize, x: &State<D>);

    fn end_path(&mut self) {}
}

/// Integrates every path of the ensemble through `last_node`, one worker
/// per batch, and returns the batch accumulators in batch order.
pub fn run_batches<const D: usize, const M: usize, Mo, A, F>(
    model: &Mo,
    grid: &TimeGrid,
    last_node: usize,
    ens: &EnsembleConfig,
    make: F,
) -> Result<Vec<A>>
where
    Mo: SdeModel<D, M>,
    A: PathAccumulator<D>,
    F: Fn() -> A + Sync,
{
    let size = check_batching(ens.n_paths, ens.n_batches)?;
    let failed = AtomicBool::new(false);
    (0..ens.n_batches)
        .into_par_iter()
        .map(|b| {
            let mut acc = make();
            for j in 0..size {
                if failed.load(Ordering::Relaxed) {
                    // Another batch already failed; its error is reported.
                    break;
                }
                let path = (b * size + j) as u64;
                let mut rng = path_rng(ens.seed, path);
                integrate_observed(model, grid, &ens.integrator, &mut rng, last_node, |k, x| {
                    acc.observe(k, x)
                })
                .map_err(|step| {
                    failed.store(true, Ordering::Relaxed);
                    Error::NonFinite {
                        step,
                        path,
                        seed: ens.seed,
                    }
                })?;
                acc.end_path();
            }
            Ok(acc)
        })
        .collect::<Vec<Result<A>>>()
        .into_iter()
        .collect()
}

fn node_slots(grid: &TimeGrid, nodes: &[usize]) -> Result<(Vec<Option<usize>>, usize)> {
    let mut slots = vec![None; grid.n_nodes()];
    for (s, &k) in nodes.iter().enumerate() {
        if k >= grid.n_nodes() {
            return Err(Error::invalid("nodes", format!("node {k} beyond grid of {} nodes", grid.n_nodes())));
        }
        if slots[k].is_some() {
            return Err(Error::invalid("nodes", format!("node {k} requested twice")));
        }
        slots[k] = Some(s);
    }
    let last = nodes.iter().copied().max().ok_or_else(|| Error::invalid("nodes", "no nodes requested"))?;
    Ok((slots, last))
}

struct TripleAcc<'a, F> {
    slots: &'a [Option<usize>],
    sums: Vec<TripleSums>,
    observable: &'a F,
}

impl<const D: usize, F> PathAccumulator<D> for TripleAcc<'_, F>
where
    F: Fn(&State<D>) -> [Complex64; 3] + Sync,
{
    fn observe(&mut self, node: usize, x: &State<D>) {
        if let Some(s) = self.slots[node] {
            self.sums[s].push((self.observable)(x));
        }
    }
}

/// `<dv1 dv2 dv3>` of an arbitrary per-state observable at each requested node.
pub fn ensemble_triple<const D: usize, const M: usize, Mo, F>(
    model: &Mo,
    grid: &TimeGrid,
    nodes: &[usize],
    ens: &EnsembleConfig,
    observable: F,
) -> Result<Vec<MomentEstimate>>
where
    Mo: SdeModel<D, M>,
    F: Fn(&State<D>) -> [Complex64; 3] + Sync,
{
    let (slots, last) = node_slots(grid, nodes)?;
    let batches = run_batches(model, grid, last, ens, || TripleAcc {
        slots: &slots,
        sums: vec![TripleSums::default(); nodes.len()],
        observable: &observable,
    })?;
    Ok((0..nodes.len())
        .map(|s| {
            let per_batch: Vec<TripleSums> = batches.iter().map(|b| b.sums[s]).collect();
            reduce_triples(&per_batch)
        })
        .collect())
}

struct MeanAcc<'a, F, const K: usize> {
    slots: &'a [Option<usize>],
    sums: Vec<[Complex64; K]>,
    n: usize,
    observable: &'a F,
}

impl<const D: usize, const K: usize, F> PathAccumulator<D> for MeanAcc<'_, F, K>
where
    F: Fn(&State<D>) -> [Complex64; K] + Sync,
{
    fn observe(&mut self, node: usize, x: &State<D>) {
        if let Some(s) = self.slots[node] {
            let v = (self.observable)(x);
            for (acc, vi) in self.sums[s].iter_mut().zip(v) {
                *acc += vi;
            }
        }
    }

    fn end_path(&mut self) {
        self.n += 1;
    }
}

/// Ensemble means of `K` per-state observables at each requested node.
pub fn ensemble_means<const D: usize, const M: usize, const K: usize, Mo, F>(
    model: &Mo,
    grid: &TimeGrid,
    nodes: &[usize],
    ens: &EnsembleConfig,
    observable: F,
) -> Result<Vec<[MeanEstimate; K]>>
where
    Mo: SdeModel<D, M>,
    F: Fn(&State<D>) -> [Complex64; K] + Sync,
{
    let (slots, last) = node_slots(grid, nodes)?;
    let batches = run_batches(model, grid, last, ens, || MeanAcc {
        slots: &slots,
        sums: vec![[ZERO; K]; nodes.len()],
        n: 0,
        observable: &observable,
    })?;
    Ok((0..nodes.len())
        .map(|s| {
            std::array::from_fn(|i| {
                let means: Vec<Complex64> = batches.iter().map(|b| b.sums[s][i] / b.n as f64).collect();
                MeanEstimate::from_batch_means(&means)
            })
        })
        .collect())
}

/// Quadrature triple `(X1, X2, X3)` at the given phases for a model's states.
pub fn quadrature_observable<'a, const D: usize, const M: usize, Mo>(
    model: &'a Mo,
    theta: &[f64; 3],
) -> impl Fn(&State<D>) -> [Complex64; 3] + Sync + 'a
where
    Mo: PhaseSpaceModel<D, M>,
{
    let rot = rotations(theta);
    move |x| quadrature_triple(&model.phase_point(x), &rot)
}

/// Intracavity `<dX1 dX2 dX3>` of one theory at selected grid nodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleResult {
    pub theory: Theory,
    pub params: SystemParams,
    pub angles: PhaseAngles,
    pub grid: TimeGrid,
    pub nodes: Vec<usize>,
    pub estimates: Vec<MomentEstimate>,
    pub seed: u64,
}

impl EnsembleResult {
    pub fn taus(&self) -> Vec<f64> {
        self.nodes.iter().map(|&k| self.grid.time(k)).collect()
    }

    pub fn estimate_at(&self, tau: f64) -> Option<&MomentEstimate> {
        let k = self.grid.node_index(tau)?;
        self.nodes.iter().position(|&n| n == k).map(|i| &self.estimates[i])
    }

    /// Writes `tau,mean_re,mean_im,std_error,n_paths,theory,g,N,gamma,seed`.
    pub fn write_csv<W: Write>(&self, w: W) -> io::Result<()> {
        let taus = self.taus();
        write_moment_csv(w, taus.iter().copied().zip(&self.estimates), self.theory, &self.params, self.seed)
    }
}

/// One CSV row per `(tau, estimate)` in the [`CSV_HEADER`] schema. Floats
/// use the shortest representation that round-trips.
pub fn write_moment_csv<'a, W: Write>(
    mut w: W,
    rows: impl IntoIterator<Item = (f64, &'a MomentEstimate)>,
    theory: Theory,
    params: &SystemParams,
    seed: u64,
) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    let gamma = gamma_field(params);
    for (tau, est) in rows {
        writeln!(
            w,
            "{:e},{:e},{:e},{:e},{},{},{:e},{:e},{},{}",
            tau,
            est.mean.re,
            est.mean.im,
            est.std_error,
            est.n_paths,
            theory,
            params.g,
            params.photon_number(),
            gamma,
            seed
        )?;
    }
    Ok(())
}

pub const CSV_HEADER: &str = "tau,mean_re,mean_im,std_error,n_paths,theory,g,N,gamma,seed";

pub fn gamma_field(p: &SystemParams) -> String {
    match p.common_gamma() {
        Ok(g) => format!("{g:e}"),
        Err(_) => format!("{:e};{:e};{:e}", p.gamma[0], p.gamma[1], p.gamma[2]),
    }
}

fn intracavity<const D: usize, const M: usize, Mo: PhaseSpaceModel<D, M>>(
    model: &Mo,
    angles: &PhaseAngles,
    grid: &TimeGrid,
    nodes: &[usize],
    ens: &EnsembleConfig,
) -> Result<EnsembleResult> {
    let estimates = ensemble_triple(model, grid, nodes, ens, quadrature_observable(model, &angles.theta))?;
    Ok(EnsembleResult {
        theory: Mo::THEORY,
        params: *model.params(),
        angles: *angles,
        grid: *grid,
        nodes: nodes.to_vec(),
        estimates,
        seed: ens.seed,
    })
}

/// Simulates `ens.n_paths` trajectories of `theory` and estimates the
/// intracavity quadrature moment at each requested node. For the quantum
/// theory the moment is the real part; the imaginary part is kept as a
/// diagnostic.
pub fn run_intracavity_experiment(
    theory: Theory,
    p: &SystemParams,
    angles: &PhaseAngles,
    grid: &TimeGrid,
    nodes: &[usize],
    ens: &EnsembleConfig,
) -> Result<EnsembleResult> {
    crate::params::validate_params(p, grid)?;
    match theory {
        Theory::Qm => intracavity(&PositivePModel::new(*p), angles, grid, nodes, ens),
        Theory::Sed => intracavity(&SedModel::new(*p), angles, grid, nodes, ens),
    }
}

/// Trapezoid integral `int_0^{tau_f} X_i(tau) dtau` of one trajectory's
/// intracavity quadrature at local-oscillator phase `theta_bar`.
pub fn integrated_quadrature<const D: usize, const M: usize, Mo: PhaseSpaceModel<D, M>>(
    model: &Mo,
    traj: &Trajectory<D>,
    mode: usize,
    theta_bar: f64,
    tau_f: f64,
) -> Result<Complex64> {
    let grid = traj.grid();
    let last = window_end(grid, tau_f)?;
    let x = |k: usize| quadrature(&model.phase_point(&traj.states()[k]), mode, theta_bar);
    let mut sum = 0.5 * x(0)?;
    for k in 1..last {
        sum += x(k)?;
    }
    if last > 0 {
        sum += 0.5 * x(last)?;
    } else {
        sum = ZERO;
    }
    Ok(sum * grid.dt())
}

fn window_end(grid: &TimeGrid, tau_f: f64) -> Result<usize> {
    let out_of_range = || Error::WindowOutOfRange {
        tau_f,
        t_start: grid.t_start(),
        t_end: grid.t_end(),
    };
    if grid.t_start() != 0.0 || !(tau_f >= 0.0) {
        return Err(out_of_range());
    }
    grid.node_index(tau_f).ok_or_else(out_of_range)
}

struct ExternalAcc<'a, F> {
    window_slots: &'a [Option<usize>],
    observable: &'a F,
    dt: f64,
    prev: [Complex64; 3],
    running: [Complex64; 3],
    sums: Vec<TripleSums>,
}

impl<const D: usize, F> PathAccumulator<D> for ExternalAcc<'_, F>
where
    F: Fn(&State<D>) -> [Complex64; 3] + Sync,
{
    fn observe(&mut self, node: usize, x: &State<D>) {
        let v = (self.observable)(x);
        if node == 0 {
            self.running = [ZERO; 3];
        } else {
            for i in 0..3 {
                self.running[i] += 0.5 * self.dt * (self.prev[i] + v[i]);
            }
        }
        self.prev = v;
        if let Some(s) = self.window_slots[node] {
            self.sums[s].push(self.running);
        }
    }
}

/// External homodyne moment `<M^(E)(tau_f)>` for each detection window
/// `[0, tau_f]`, estimated from the same ensemble.
///
/// Per path the windowed integrals `K_i` of the intracavity quadratures at
/// the local-oscillator phases are formed; their triple central moment is
/// scaled by `2^{3/2} (e A eta E)^3 Gamma^{-3/2}`. The vacuum input fields
/// are independent and zero-mean, so they drop out of this cross moment.
pub fn external_moment_estimate(
    theory: Theory,
    p: &SystemParams,
    angles: &PhaseAngles,
    h: &HomodyneParams,
    tau_fs: &[f64],
    dt: f64,
    ens: &EnsembleConfig,
) -> Result<Vec<MomentEstimate>> {
    let t_max = tau_fs.iter().copied().fold(0.0, f64::max);
    let grid = TimeGrid::new(0.0, t_max, dt)?;
    crate::params::validate_params(p, &grid)?;
    let nodes = tau_fs
        .iter()
        .map(|&t| window_end(&grid, t))
        .collect::<Result<Vec<_>>>()?;
    let (slots, last) = node_slots(&grid, &nodes)?;
    let raw = match theory {
        Theory::Qm => external_raw(&PositivePModel::new(*p), &angles.theta_bar, &grid, &slots, last, nodes.len(), ens)?,
        Theory::Sed => external_raw(&SedModel::new(*p), &angles.theta_bar, &grid, &slots, last, nodes.len(), ens)?,
    };
    let scale = 2f64.powf(1.5) * crate::analytic::external_scale(p, h);
    Ok(raw.into_iter().map(|e| e.scaled(scale)).collect())
}

fn external_raw<const D: usize, const M: usize, Mo: PhaseSpaceModel<D, M>>(
    model: &Mo,
    theta_bar: &[f64; 3],
    grid: &TimeGrid,
    slots: &[Option<usize>],
    last: usize,
    n_windows: usize,
    ens: &EnsembleConfig,
) -> Result<Vec<MomentEstimate>> {
    let observable = quadrature_observable(model, theta_bar);
    let batches = run_batches(model, grid, last, ens, || ExternalAcc {
        window_slots: slots,
        observable: &observable,
        dt: grid.dt(),
        prev: [ZERO; 3],
        running: [ZERO; 3],
        sums: vec![TripleSums::default(); n_windows],
    })?;
    Ok((0..n_windows)
        .map(|s| {
            let per_batch: Vec<TripleSums> = batches.iter().map(|b| b.sums[s]).collect();
            reduce_triples(&per_batch)
        })
        .collect())
}
