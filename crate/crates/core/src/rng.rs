//! Counter-based random streams.
//!
//! A stream is keyed by `(seed, run)`; each evaluation `k` within a run gets
//! its own ChaCha8 generator positioned at a disjoint window of the keystream.
//! Any evaluation can therefore be replayed in isolation, and runs executed on
//! different threads never share state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// 2^40 words per evaluation window.
const WINDOW_SHIFT: u32 = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub run: u64,
    /// Separates independent consumers of the same (seed, run) pair, e.g. the
    /// measurement noise and the optimizer's own sampling.
    pub channel: u64,
}

impl RngStream {
    pub fn new(seed: u64, run: u64) -> Self {
        Self {
            seed,
            run,
            channel: 0,
        }
    }

    pub fn with_channel(self, channel: u64) -> Self {
        Self { channel, ..self }
    }

    /// Generator for evaluation `index` of this stream.
    pub fn at(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key());
        rng.set_stream(self.run);
        rng.set_word_pos((index as u128) << WINDOW_SHIFT);
        rng
    }

    fn key(&self) -> [u8; 32] {
        let mut key = [0u8; 32];
        let words = [
            splitmix(self.seed),
            splitmix(self.seed ^ 0x9e37_79b9_7f4a_7c15),
            splitmix(self.channel.wrapping_add(0x632b_e59b_d9b4_e019)),
            splitmix(self.channel ^ self.seed.rotate_left(17)),
        ];
        for (chunk, w) in key.chunks_exact_mut(8).zip(words) {
            chunk.copy_from_slice(&w.to_le_bytes());
        }
        key
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
