use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Exactly uniform base-p digits from a counter-based generator.
///
/// Each 64-bit word is accepted only below the largest multiple of `p^k`
/// that fits, then split into `k` digits. Streams for different worker ids
/// share the key derived from the seed and differ in the ChaCha stream id.
#[derive(Clone, Debug)]
pub struct DigitStream {
    rng: ChaCha20Rng,
    p: u64,
    chunk_digits: u32,
    chunk_bound: u64,
    zone: u64,
    current: u64,
    remaining: u32,
}

impl DigitStream {
    pub fn new(p: u64, seed: u64, worker_id: u32) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(worker_id as u64);
        let mut chunk_digits = 0;
        let mut chunk_bound: u64 = 1;
        while let Some(next) = chunk_bound.checked_mul(p) {
            chunk_bound = next;
            chunk_digits += 1;
        }
        let zone = (u64::MAX / chunk_bound) * chunk_bound;
        DigitStream {
            rng,
            p,
            chunk_digits,
            chunk_bound,
            zone,
            current: 0,
            remaining: 0,
        }
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn next_digit(&mut self) -> u64 {
        if self.remaining == 0 {
            let word = loop {
                let r = self.rng.next_u64();
                if r < self.zone {
                    break r % self.chunk_bound;
                }
            };
            self.current = word;
            self.remaining = self.chunk_digits;
        }
        let d = self.current % self.p;
        self.current /= self.p;
        self.remaining -= 1;
        d
    }

    /// Uniform real in `[0, 1)` with 53 random bits.
    pub fn next_unit_f64(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
}
