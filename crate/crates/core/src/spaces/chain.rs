//! Block geometry of the chain spaces: e2's rectangles and e3's segments.
//!
//! Blocks are indexed from 0. Consecutive blocks `P_n`, `P_{n+1}` are at
//! distance `n + 1`, so the gap between `P_n` and `P_m` is the triangular
//! difference `(n+1) + ... + m`.

use serde::{Deserialize, Serialize};

/// Which family of blocks a chain space is built from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainBlocks {
    /// `P_{2m}` is a `1 x 2^m` rectangle and `P_{2m+1}` is `2^m x 1`;
    /// chart coordinates are offsets from the rectangle's center.
    Rectangles,
    /// Segments whose lengths follow the rule of the map `f`; coordinates
    /// are offsets from the left endpoint.
    SegmentsF,
    /// Segments whose lengths follow the rule of the map `g`.
    SegmentsG,
}

/// Gap between blocks `n` and `m`: `sum_{i=min+1}^{max} i`.
pub fn gap(n: usize, m: usize) -> f64 {
    let (lo, hi) = if n <= m { (n as u128, m as u128) } else { (m as u128, n as u128) };
    ((hi * (hi + 1) - lo * (lo + 1)) / 2) as f64
}

/// Half-width and half-height of rectangle `P_n`.
pub fn rect_half_extents(n: usize) -> (f64, f64) {
    let long = 2f64.powi((n / 2) as i32);
    if n % 2 == 0 {
        (0.5, 0.5 * long)
    } else {
        (0.5 * long, 0.5)
    }
}

/// Scale factors `(sx, sy)` of the block-linear map `P_n -> P_{n+1}`.
pub fn rect_step_scales(n: usize) -> (f64, f64) {
    let m = (n / 2) as i32;
    if n % 2 == 0 {
        (2f64.powi(m), 2f64.powi(-m))
    } else {
        (2f64.powi(-m), 2f64.powi(m + 1))
    }
}

/// The `k` with `2^{k^2} <= n < 2^{(k+1)^2}`; block 0 is assigned `k = 0`.
pub fn segment_level(n: usize) -> u32 {
    if n <= 1 {
        return 0;
    }
    let bits = usize::BITS - 1 - n.leading_zeros();
    let mut k = 0u32;
    while (k + 1) * (k + 1) <= bits {
        k += 1;
    }
    k
}

/// Whether the map of the given family doubles segment `n` onto `n+1`.
///
/// On levels with even `k` the `f`-segments keep their length and the
/// `g`-segments double; on odd levels the roles swap.
pub fn segment_doubles(blocks: ChainBlocks, n: usize) -> bool {
    let odd = segment_level(n) % 2 == 1;
    match blocks {
        ChainBlocks::SegmentsF => odd,
        ChainBlocks::SegmentsG => !odd,
        ChainBlocks::Rectangles => false,
    }
}

/// Exact base-2 exponent of the length of segment `n`.
pub fn segment_exponent(blocks: ChainBlocks, n: usize) -> u64 {
    // Count j < n whose level has the doubling parity, one level at a time.
    let mut total = 0u64;
    let mut start = 0usize;
    let mut k = 0u32;
    while start < n {
        let next = if k == 0 { 2 } else { level_start(k + 1).unwrap_or(usize::MAX) };
        let end = next.min(n);
        let doubles = segment_doubles(blocks, start);
        if doubles {
            total += (end - start) as u64;
        }
        start = end;
        k += 1;
    }
    total
}

fn level_start(k: u32) -> Option<usize> {
    let e = k.checked_mul(k)?;
    if e >= usize::BITS {
        None
    } else {
        Some(1usize << e)
    }
}

/// Length of segment `n` as a float (infinite past the f64 range).
pub fn segment_length(blocks: ChainBlocks, n: usize) -> f64 {
    2f64.powf(segment_exponent(blocks, n) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaps_are_triangular() {
        assert_eq!(gap(0, 1), 1.0);
        assert_eq!(gap(0, 2), 3.0);
        assert_eq!(gap(3, 1), 5.0);
        assert_eq!(gap(4, 4), 0.0);
    }

    #[test]
    fn rectangle_sizes() {
        assert_eq!(rect_half_extents(0), (0.5, 0.5));
        assert_eq!(rect_half_extents(1), (0.5, 0.5));
        assert_eq!(rect_half_extents(2), (0.5, 1.0));
        assert_eq!(rect_half_extents(3), (1.0, 0.5));
        assert_eq!(rect_half_extents(6), (0.5, 4.0));
    }

    #[test]
    fn rectangle_steps_map_blocks_onto_blocks() {
        for n in 0..40 {
            let (w, h) = rect_half_extents(n);
            let (w1, h1) = rect_half_extents(n + 1);
            let (sx, sy) = rect_step_scales(n);
            assert_eq!(w * sx, w1, "block {n}");
            assert_eq!(h * sy, h1, "block {n}");
        }
    }

    #[test]
    fn levels() {
        assert_eq!(segment_level(0), 0);
        assert_eq!(segment_level(1), 0);
        assert_eq!(segment_level(2), 1);
        assert_eq!(segment_level(15), 1);
        assert_eq!(segment_level(16), 2);
        assert_eq!(segment_level(511), 2);
        assert_eq!(segment_level(512), 3);
        assert_eq!(segment_level(65536), 4);
    }

    #[test]
    fn exponent_matches_direct_sum() {
        for blocks in [ChainBlocks::SegmentsF, ChainBlocks::SegmentsG] {
            let mut direct = 0u64;
            for n in 0..2000 {
                assert_eq!(segment_exponent(blocks, n), direct, "n={n}");
                if segment_doubles(blocks, n) {
                    direct += 1;
                }
            }
        }
    }

    #[test]
    fn lengths_multiply_to_power_of_two() {
        for n in 0..5000 {
            let sum = segment_exponent(ChainBlocks::SegmentsF, n)
                + segment_exponent(ChainBlocks::SegmentsG, n);
            assert_eq!(sum, n as u64);
        }
    }
}
