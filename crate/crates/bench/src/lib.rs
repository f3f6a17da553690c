//! Benchmark fixtures shared by the criterion targets.

use mbs_core::generators::{random_left_to_right, RandomParams};
use mbs_core::Instance;

/// Left-to-right laminar instance of `n` elements, fixed seed.
pub fn fixture(n: usize) -> Instance {
    random_left_to_right(RandomParams::new(n, 3, 3, 2), 42)
}
