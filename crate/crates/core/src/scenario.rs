//! Seeded signal scenarios for exercising the whitening front end.
//!
//! Each scenario builds an `n`-channel, `m`-sample block of observations
//! `X = H·S` from planted sources `S` and a mixing matrix `H`, then applies
//! one global scale chosen from the realized data so that every component
//! lands strictly inside the fixed-point range — quantization is therefore
//! saturation-free by construction, and a run is reproducible from its seed
//! alone.
//!
//! The mixing matrices are deliberately *non-unitary*: `H = U·diag(g)·Vᴴ`
//! with singular values spread over `[0.75, 1.0]`. A unitary mix would give
//! a covariance that is already (a multiple of) the identity, making the
//! whitening stage trivially self-satisfying; the spread keeps the
//! eigenvalue ratio near 1.8 while the condition number stays a mild 4/3.
//!
//! Scenarios are registered behind the [`ScenarioKind`] trait so the command
//! line can enumerate and select them by name, mirroring the issue-sequence
//! registry in [`crate::ordering`].

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::FloatMat;
use crate::oracle;

/// Largest singular value of every planted mixing matrix.
pub const SINGULAR_MAX: f64 = 1.0;
/// Smallest singular value of every planted mixing matrix.
pub const SINGULAR_MIN: f64 = 0.75;
/// Post-scale ceiling on |Re x| and |Im x| of any observation component,
/// leaving headroom below the format's ≈1.996 maximum.
pub const COMPONENT_CEILING: f64 = 1.75;
/// Bound on the normalized cross-correlation between planted sources, in
/// units of `1/√m`; random draws exceeding it are redrawn deterministically.
pub const CROSS_CORRELATION_BOUND: f64 = 3.0;

/// A generated test signal block and the ground truth behind it.
#[derive(Debug, Clone)]
pub struct BssScenario {
    /// Registry name of the generator that produced this block.
    pub kind: String,
    /// Seed the block was derived from.
    pub seed: u64,
    /// Planted sources, one row per source (`n × m`), unit average power.
    pub sources: FloatMat,
    /// Mixing matrix `H = U·diag(g)·Vᴴ` (`n × n`).
    pub mixing: FloatMat,
    /// Scaled observations `scale · H·S` (`n × m`), every component within
    /// [`COMPONENT_CEILING`].
    pub observations: FloatMat,
    /// The global scale that was applied to the mixed block.
    pub scale: f64,
}

/// A named, seeded observation-block generator.
pub trait ScenarioKind {
    /// Registry name, as accepted on the command line.
    fn name(&self) -> &'static str;
    /// One-line description for `--help`-style listings.
    fn description(&self) -> &'static str;
    /// Generates an `n`-channel, `m`-sample block from the seed.
    fn generate(&self, n: usize, m: usize, seed: u64) -> Result<BssScenario>;
}

fn validate_shape(n: usize, m: usize) -> Result<()> {
    if !(2..=64).contains(&n) {
        return Err(Error::Config(format!(
            "scenario needs 2..=64 channels, got {n}"
        )));
    }
    if m < 4 * n {
        return Err(Error::Config(format!(
            "scenario needs at least 4·n = {} samples for stable statistics, got {m}",
            4 * n
        )));
    }
    Ok(())
}

/// `H = U·diag(g)·Vᴴ` with `g` spread linearly over
/// [`SINGULAR_MIN`, `SINGULAR_MAX`].
fn planted_mixing(n: usize, rng: &mut ChaCha8Rng) -> FloatMat {
    let u = oracle::random_unitary(n, rng);
    let v = oracle::random_unitary(n, rng);
    let g = FloatMat::from_fn(n, n, |i, j| {
        if i == j {
            let t = if n == 1 {
                0.0
            } else {
                i as f64 / (n - 1) as f64
            };
            Complex64::new(SINGULAR_MIN + (SINGULAR_MAX - SINGULAR_MIN) * t, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    u.matmul(&g).matmul(&v.hermitian())
}

/// Largest |Re| or |Im| over all components of a matrix.
fn max_component(x: &FloatMat) -> f64 {
    let mut peak = 0.0f64;
    for i in 0..x.rows() {
        for j in 0..x.cols() {
            let z = x.get(i, j);
            peak = peak.max(z.re.abs()).max(z.im.abs());
        }
    }
    peak
}

/// Largest normalized cross-correlation `|⟨s_i, s_j⟩|/m` between distinct
/// rows (sources are unit power, so this is the correlation coefficient).
fn max_cross_correlation(s: &FloatMat) -> f64 {
    let m = s.cols() as f64;
    let mut worst = 0.0f64;
    for i in 0..s.rows() {
        for j in (i + 1)..s.rows() {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..s.cols() {
                acc += s.get(i, k) * s.get(j, k).conj();
            }
            worst = worst.max(acc.norm() / m);
        }
    }
    worst
}

/// Mixes, scales to the component ceiling, and packages the block.
fn assemble(
    kind: &'static str,
    seed: u64,
    sources: FloatMat,
    mixing: FloatMat,
) -> Result<BssScenario> {
    let mixed = mixing.matmul(&sources);
    let peak = max_component(&mixed);
    if peak <= 0.0 {
        return Err(Error::Config(format!(
            "scenario '{kind}' produced an all-zero block"
        )));
    }
    let scale = COMPONENT_CEILING / peak;
    let observations = mixed.scale(scale);
    Ok(BssScenario {
        kind: kind.to_string(),
        seed,
        sources,
        mixing,
        observations,
        scale,
    })
}

/// Unit-power QPSK sources `(±1 ± i)/√2`, redrawn (deterministically) until
/// every source pair is decorrelated within the bound.
struct QpskSources;

impl ScenarioKind for QpskSources {
    fn name(&self) -> &'static str {
        "qpsk_sources"
    }

    fn description(&self) -> &'static str {
        "independent QPSK symbol streams through a mildly conditioned mix (the operating point)"
    }

    fn generate(&self, n: usize, m: usize, seed: u64) -> Result<BssScenario> {
        validate_shape(n, m)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mixing = planted_mixing(n, &mut rng);
        let bound = CROSS_CORRELATION_BOUND / (m as f64).sqrt();
        let amp = std::f64::consts::FRAC_1_SQRT_2;
        for attempt in 0..64u64 {
            let mut source_rng =
                ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ attempt);
            let sources = FloatMat::from_fn(n, m, |_, _| {
                let re = if source_rng.gen::<bool>() { amp } else { -amp };
                let im = if source_rng.gen::<bool>() { amp } else { -amp };
                Complex64::new(re, im)
            });
            if max_cross_correlation(&sources) <= bound {
                return assemble(self.name(), seed, sources, mixing);
            }
        }
        Err(Error::Config(format!(
            "could not draw decorrelated QPSK sources for seed {seed} within 64 attempts"
        )))
    }
}

/// Circular complex Gaussian sources — a robustness probe with a realized
/// peak factor far above QPSK's, so the auto-scale leaves smaller signal
/// power (and correspondingly more relative quantization noise).
struct GaussianMix;

impl ScenarioKind for GaussianMix {
    fn name(&self) -> &'static str {
        "gaussian_mix_check"
    }

    fn description(&self) -> &'static str {
        "circular Gaussian sources; exercises the scale logic under a high peak factor"
    }

    fn generate(&self, n: usize, m: usize, seed: u64) -> Result<BssScenario> {
        validate_shape(n, m)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mixing = planted_mixing(n, &mut rng);
        let bound = CROSS_CORRELATION_BOUND / (m as f64).sqrt();
        for attempt in 0..64u64 {
            let mut source_rng =
                ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0xD134_2543_DE82_EF95) ^ attempt);
            let sources = FloatMat::from_fn(n, m, |_, _| {
                // Box–Muller; per-component variance 1/2 for unit power.
                let u1: f64 = source_rng.gen_range(f64::EPSILON..1.0);
                let u2: f64 = source_rng.gen_range(0.0..std::f64::consts::TAU);
                let r = (-u1.ln()).sqrt(); // √2 · √(1/2)
                Complex64::new(r * u2.cos(), r * u2.sin())
            });
            if max_cross_correlation(&sources) <= bound {
                return assemble(self.name(), seed, sources, mixing);
            }
        }
        Err(Error::Config(format!(
            "could not draw decorrelated Gaussian sources for seed {seed} within 64 attempts"
        )))
    }
}

/// Complex exponentials on the DFT grid — integer cycle counts make the
/// sources *exactly* orthogonal and zero-mean over the block, so the ideal
/// covariance is exactly `scale²·H·Hᴴ` and its eigenvalues are the planted
/// squared singular values.
struct TwoTone;

impl ScenarioKind for TwoTone {
    fn name(&self) -> &'static str {
        "two_tone"
    }

    fn description(&self) -> &'static str {
        "orthogonal on-grid tones with random phases; covariance spectrum equals the planted one"
    }

    fn generate(&self, n: usize, m: usize, seed: u64) -> Result<BssScenario> {
        validate_shape(n, m)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mixing = planted_mixing(n, &mut rng);
        let phases: Vec<f64> = (0..n)
            .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
            .collect();
        let sources = FloatMat::from_fn(n, m, |i, t| {
            // Source i carries i+1 whole cycles across the block.
            let w = std::f64::consts::TAU * (i as f64 + 1.0) * t as f64 / m as f64;
            Complex64::from_polar(1.0, w + phases[i])
        });
        assemble(self.name(), seed, sources, mixing)
    }
}

/// All registered scenario generators, in listing order.
pub fn scenario_kinds() -> Vec<Box<dyn ScenarioKind>> {
    vec![
        Box::new(QpskSources),
        Box::new(GaussianMix),
        Box::new(TwoTone),
    ]
}

/// Finds a generator by its registry name.
pub fn lookup_scenario(name: &str) -> Result<Box<dyn ScenarioKind>> {
    scenario_kinds()
        .into_iter()
        .find(|k| k.name() == name)
        .ok_or_else(|| {
            let known: Vec<&str> = scenario_kinds().iter().map(|k| k.name()).collect();
            Error::Config(format!(
                "unknown scenario '{name}'; available: {}",
                known.join(", ")
            ))
        })
}
