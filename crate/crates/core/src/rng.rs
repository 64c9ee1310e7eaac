//! Counter-based random streams.
//!
//! Every random draw in the crate comes from a stream addressed by a key
//! `(seed, tag, index…)`. Streams are independent of evaluation order, so a
//! sample or lattice coefficient has the same value whether it is produced
//! serially, in parallel, or as part of a larger window.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream tags used by the samplers; keeping them distinct decorrelates
/// draws that share a seed and index.
pub mod tag {
    pub const OFFSET: u64 = 0x6f66_6673;
    pub const COEFFICIENT: u64 = 0x636f_6566;
    pub const TRANSLATION: u64 = 0x7472_616e;
    pub const PROBE: u64 = 0x7072_6f62;
    pub const SPANNING: u64 = 0x7370_616e;
    pub const TRIAL: u64 = 0x7472_6961;
}

#[inline]
fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Returns the generator addressed by `seed` and the key words.
pub fn stream(seed: u64, key: &[u64]) -> ChaCha8Rng {
    let mut state = splitmix(seed);
    let mut bytes = [0u8; 32];
    let mut lanes = [0u64; 4];
    for (i, k) in key.iter().enumerate() {
        state = splitmix(state ^ splitmix(k.wrapping_add(i as u64 + 1)));
        lanes[i % 4] ^= state;
    }
    for (i, lane) in lanes.iter_mut().enumerate() {
        state = splitmix(state.wrapping_add(i as u64));
        *lane ^= state;
    }
    for (chunk, lane) in bytes.chunks_mut(8).zip(lanes) {
        chunk.copy_from_slice(&lane.to_le_bytes());
    }
    ChaCha8Rng::from_seed(bytes)
}

/// Uniform point on the closed disk `|u − center| ≤ radius` by rejection
/// from the bounding square.
pub fn uniform_in_disk<R: Rng>(rng: &mut R, center: Complex64, radius: f64) -> Complex64 {
    loop {
        let x: f64 = rng.gen_range(-1.0..1.0);
        let y: f64 = rng.gen_range(-1.0..1.0);
        if x * x + y * y <= 1.0 {
            return center + Complex64::new(x, y) * radius;
        }
    }
}

/// Uniform point on the square `corner + [0, side]²`.
pub fn uniform_in_square<R: Rng>(rng: &mut R, corner: Complex64, side: f64) -> Complex64 {
    let x: f64 = rng.gen();
    let y: f64 = rng.gen();
    corner + Complex64::new(x * side, y * side)
}

/// Standard complex Gaussian (independent N(0,1) real and imaginary parts).
pub fn complex_gaussian<R: Rng>(rng: &mut R) -> Complex64 {
    // Box–Muller; both outputs used.
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    let r = (-2.0 * u1.ln()).sqrt();
    let t = std::f64::consts::TAU * u2;
    Complex64::new(r * t.cos(), r * t.sin())
}
