//! Seedable randomness: discretised space-time white noise, Brownian
//! increments and reflecting Brownian motion with a discrete local time.
//!
//! Every random quantity is keyed by a [`SeedSpec`]. The key of the ChaCha
//! generator is derived from `(master_seed, replicate_index)`, the ChaCha
//! stream id is the `stream_tag`, and white noise for time step `k` lives at a
//! fixed word offset inside that stream. A slice can therefore be regenerated
//! (or generated for a sub-range of cells) independently of thread count or
//! of how many other slices were drawn before it.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{positive, Error, Result};

/// Stream tags used inside one replicate. Two uses of randomness in the same
/// replicate must never share a tag.
pub mod streams {
    pub const SPDE_NOISE: u32 = 1;
    pub const PATH: u32 = 2;
    pub const BRIDGE: u32 = 3;
    pub const GENERATOR: u32 = 4;
    pub const SCALED_PATH: u32 = 5;
    /// Random parameters of a generated test case.
    pub const CLASS: u32 = 6;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub replicate_index: u64,
    pub stream_tag: u32,
}

impl SeedSpec {
    pub const fn new(master_seed: u64, replicate_index: u64, stream_tag: u32) -> Self {
        Self {
            master_seed,
            replicate_index,
            stream_tag,
        }
    }

    pub const fn replicate(self, replicate_index: u64) -> Self {
        Self {
            replicate_index,
            ..self
        }
    }

    pub const fn with_stream(self, stream_tag: u32) -> Self {
        Self { stream_tag, ..self }
    }

    fn key(&self) -> [u8; 32] {
        let mut state = self.master_seed ^ 0x6a09_e667_f3bc_c908;
        let _ = splitmix64(&mut state);
        state ^= self.replicate_index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        key
    }

    /// Sequential generator for this seed, positioned at the start of its stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key());
        rng.set_stream(u64::from(self.stream_tag));
        rng
    }

    pub fn normals(&self) -> Normals<ChaCha8Rng> {
        Normals::new(self.rng())
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform on (0, 1].
#[inline]
fn unit_open(bits: u64) -> f64 {
    ((bits >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform on [0, 1).
#[inline]
fn unit_closed(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[inline]
fn box_muller(a: u64, b: u64) -> (f64, f64) {
    let radius = (-2.0 * unit_open(a).ln()).sqrt();
    let (sin, cos) = (std::f64::consts::TAU * unit_closed(b)).sin_cos();
    (radius * cos, radius * sin)
}

/// Standard normal and uniform draws from any generator (Box–Muller).
#[derive(Debug, Clone)]
pub struct Normals<R> {
    rng: R,
    spare: Option<f64>,
}

impl<R: RngCore> Normals<R> {
    pub fn new(rng: R) -> Self {
        Self { rng, spare: None }
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let (z0, z1) = box_muller(self.rng.next_u64(), self.rng.next_u64());
        self.spare = Some(z1);
        z0
    }

    /// Uniform on [0, 1).
    pub fn uniform(&mut self) -> f64 {
        unit_closed(self.rng.next_u64())
    }
}

/// Standard normal draws for one time step, one per spatial cell, covering
/// cells `lo .. lo + values.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSlice {
    pub step: u64,
    pub lo: usize,
    pub values: Vec<f64>,
}

impl NoiseSlice {
    pub fn hi(&self) -> usize {
        self.lo + self.values.len()
    }

    pub fn covers(&self, lo: usize, hi: usize) -> bool {
        lo >= self.lo && hi <= self.hi()
    }

    #[inline]
    pub fn at(&self, cell: usize) -> f64 {
        self.values[cell - self.lo]
    }
}

/// Random-access source of white-noise slices for one seed.
#[derive(Debug, Clone)]
pub struct WhiteNoise {
    rng: ChaCha8Rng,
}

impl WhiteNoise {
    pub fn new(seed: SeedSpec) -> Self {
        Self { rng: seed.rng() }
    }

    /// Fills `out` with the draws of cells `lo .. lo + out.len()` at `step`.
    /// The draw for a given `(step, cell)` does not depend on `lo`.
    pub fn fill(&mut self, step: u64, lo: usize, out: &mut [f64]) {
        if out.is_empty() {
            return;
        }
        let first_pair = lo / 2;
        // 2 u64 = 4 words per Box–Muller pair; 2^36 words per step.
        let base = (u128::from(step) << 36) + 4 * first_pair as u128;
        self.rng.set_word_pos(base);
        let mut cell = first_pair * 2;
        let end = lo + out.len();
        while cell < end {
            let (z0, z1) = box_muller(self.rng.next_u64(), self.rng.next_u64());
            if cell >= lo {
                out[cell - lo] = z0;
            }
            if cell + 1 >= lo && cell + 1 < end {
                out[cell + 1 - lo] = z1;
            }
            cell += 2;
        }
    }

    pub fn slice(&mut self, step: u64, lo: usize, hi: usize) -> NoiseSlice {
        let mut values = vec![0.0; hi.saturating_sub(lo)];
        self.fill(step, lo, &mut values);
        NoiseSlice { step, lo, values }
    }
}

/// The full slice of `n_cells` i.i.d. standard normals for `step`.
pub fn white_noise_slice(seed: SeedSpec, step: u64, n_cells: usize) -> Result<NoiseSlice> {
    if n_cells == 0 {
        return Err(Error::param("n_cells", "must be at least 1"));
    }
    Ok(WhiteNoise::new(seed).slice(step, 0, n_cells))
}

/// Local-time increment per step spent in `[0, √dt)` is `LOCAL_TIME_GAIN · √dt`.
///
/// The walk `R ↦ |R + √dt ξ|` is scale invariant, so the gain is a pure
/// constant. Lebesgue measure is invariant for the folded walk, hence the
/// expected number of visits to `[0, h)` matches the occupation time
/// `2h L_t(0) / dt` of reflecting Brownian motion and the gain is 1/2.
pub const LOCAL_TIME_GAIN: f64 = 0.5;

/// Reflecting walk on a uniform time grid together with its discrete local time at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectedPath {
    pub dt: f64,
    pub values: Vec<f64>,
    pub local_time: Vec<f64>,
}

impl ReflectedPath {
    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Euler walk `R_{i+1} = |R_i + √dt ξ_i|` from `x0`, with local time
/// accumulated by [`LOCAL_TIME_GAIN`]` · √dt` whenever `R_i < √dt`.
pub fn reflecting_bm(seed: SeedSpec, dt: f64, n_steps: usize, x0: f64) -> Result<ReflectedPath> {
    positive("dt", dt)?;
    if !(x0 >= 0.0 && x0.is_finite()) {
        return Err(Error::param("x0", format!("{x0} must be nonnegative")));
    }
    let sqrt_dt = dt.sqrt();
    let mut normals = seed.normals();
    let mut values = Vec::with_capacity(n_steps + 1);
    let mut local_time = Vec::with_capacity(n_steps + 1);
    let (mut r, mut l) = (x0, 0.0);
    values.push(r);
    local_time.push(l);
    for _ in 0..n_steps {
        if r < sqrt_dt {
            l += LOCAL_TIME_GAIN * sqrt_dt;
        }
        r = (r + sqrt_dt * normals.normal()).abs();
        values.push(r);
        local_time.push(l);
    }
    Ok(ReflectedPath {
        dt,
        values,
        local_time,
    })
}
