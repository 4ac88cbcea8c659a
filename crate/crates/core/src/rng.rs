//! Counter-based, splittable random streams.
//!
//! Every random object in the crate is drawn from a ChaCha8 stream keyed by
//! `(master seed, stream id)`. Stream ids are derived from what the draw is
//! for (a Monte-Carlo chunk, a gate at a given period and site), so results do
//! not depend on the order in which streams are consumed or on threading.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rand_distr::{Distribution, StandardNormal};

use crate::Complex64;

/// What a stream is used for. Occupies the top byte of the stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum StreamTag {
    MonteCarlo = 1,
    MidSingleSite = 2,
    MidTwoSite = 3,
    Brickwork = 4,
    User = 0xff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamId(u64);

impl StreamId {
    /// Layout: `tag:8 | period:24 | location:32`.
    pub const fn new(tag: StreamTag, period: u32, location: u32) -> Self {
        Self(((tag as u64) << 56) | (((period as u64) & 0x00ff_ffff) << 32) | location as u64)
    }

    pub const fn raw(self) -> u64 {
        self.0
    }
}

pub fn stream_rng(master_seed: u64, stream: StreamId) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream.raw());
    rng
}

/// Standard complex normal: real and imaginary parts i.i.d. N(0, 1/2).
pub fn complex_normal<R: RngCore + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * core::f64::consts::FRAC_1_SQRT_2
}
