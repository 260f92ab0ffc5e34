use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::f64::consts::FRAC_1_SQRT_2;

/// Complex Wiener increments for one integration step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseBlock<const M: usize> {
    pub increments: [Complex64; M],
    pub dt: f64,
}

impl<const M: usize> NoiseBlock<M> {
    pub fn zero(dt: f64) -> Self {
        NoiseBlock {
            increments: [Complex64::new(0.0, 0.0); M],
            dt,
        }
    }
}

#[inline]
fn normal<R: Rng + ?Sized>(rng: &mut R, sd: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    z * sd
}

/// Positive-P increments in the column order `(dxi1, dxi1+, dxi2, dxi2+)`.
///
/// Signal and idler noises are pairwise correlated, `<dxi1 dxi2> = dt` and
/// `<dxi1+ dxi2+> = dt`; every other second moment, including the
/// self-products `<dxi_i dxi_i>`, vanishes.
pub fn gen_pp_noise<R: Rng + ?Sized>(rng: &mut R, dt: f64) -> NoiseBlock<4> {
    let sd = dt.sqrt();
    let (x, y) = (normal(rng, sd), normal(rng, sd));
    let (u, v) = (normal(rng, sd), normal(rng, sd));
    let xi1 = Complex64::new(x, y) * FRAC_1_SQRT_2;
    let xi1p = Complex64::new(u, v) * FRAC_1_SQRT_2;
    NoiseBlock {
        increments: [xi1, xi1p, xi1.conj(), xi1p.conj()],
        dt,
    }
}

/// Three independent complex increments with `<dxi_i dxi_j*> = delta_ij dt`.
pub fn gen_sed_noise<R: Rng + ?Sized>(rng: &mut R, dt: f64) -> NoiseBlock<3> {
    let sd = dt.sqrt();
    let mut increments = [Complex64::new(0.0, 0.0); 3];
    for z in &mut increments {
        *z = Complex64::new(normal(rng, sd), normal(rng, sd)) * FRAC_1_SQRT_2;
    }
    NoiseBlock { increments, dt }
}

/// Independent stream for path `path` of an ensemble seeded with `master_seed`.
///
/// Streams depend only on `(master_seed, path)`, never on scheduling, so an
/// ensemble is reproducible at any thread count and any single path can be
/// regenerated in isolation.
pub fn path_rng(master_seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(path);
    rng
}
