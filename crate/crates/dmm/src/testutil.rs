//! Deterministic RNG stubs for tests.

use rand::RngCore;

/// Replays a fixed sequence of `u64` words, counting how many are drawn.
pub(crate) struct CountingRng {
    pub calls: u64,
    sequence: Vec<u64>,
    index: usize,
}

impl CountingRng {
    pub fn new(sequence: Vec<u64>) -> Self {
        assert!(!sequence.is_empty());
        CountingRng {
            calls: 0,
            sequence,
            index: 0,
        }
    }

    /// A word that makes [`crate::stream::draw_unit`] return `unit`.
    pub fn word_for_unit(unit: f64) -> u64 {
        assert!((0.0..1.0).contains(&unit));
        ((unit * (1u64 << 53) as f64) as u64) << 11
    }
}

impl RngCore for CountingRng {
    fn next_u32(&mut self) -> u32 {
        self.next_u64() as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.calls += 1;
        let value = self.sequence[self.index % self.sequence.len()];
        self.index += 1;
        value
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        for chunk in dest.chunks_mut(8) {
            let word = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&word[..chunk.len()]);
        }
    }
}
