//! Geometric covering intervals and the learning-rate grid.
//!
//! Level `k` tiles the rounds `2^k, 2^k + 1, ...` with blocks of length `2^k`:
//! `[i 2^k, (i + 1) 2^k - 1]` for `i >= 1`. Everything is generated from the
//! round number alone, so no horizon is needed.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct IntervalKey {
    pub level: u32,
    pub index: u64,
}

impl IntervalKey {
    pub fn new(level: u32, index: u64) -> Result<Self> {
        if index == 0 {
            return Err(Error::InvalidArgument("interval index starts at 1".into()));
        }
        Ok(Self { level, index })
    }

    pub fn start(&self) -> u64 {
        self.index << self.level
    }

    pub fn end(&self) -> u64 {
        self.start() + self.len() - 1
    }

    pub fn len(&self) -> u64 {
        1 << self.level
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, t: u64) -> bool {
        self.start() <= t && t <= self.end()
    }
}

impl fmt::Display for IntervalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.start(), self.end())
    }
}

/// Intervals whose first round is `t`, by ascending level.
pub fn intervals_starting_at(t: u64) -> Vec<IntervalKey> {
    if t == 0 {
        return Vec::new();
    }
    (0..=t.trailing_zeros())
        .map(|level| IntervalKey { level, index: t >> level })
        .collect()
}

/// Every interval alive at round `t`: one per level `0..=floor(log2 t)`.
pub fn intervals_containing(t: u64) -> Vec<IntervalKey> {
    if t == 0 {
        return Vec::new();
    }
    (0..=t.ilog2())
        .map(|level| IntervalKey { level, index: t >> level })
        .collect()
}

/// `ceil(log2 n)` for `n >= 1`.
pub fn ceil_log2(n: u64) -> u32 {
    if n <= 1 {
        0
    } else {
        u64::BITS - (n - 1).leading_zeros()
    }
}

/// Number of learning rates for an interval of length `n`: `1 + ceil(log2(n) / 2)`.
pub fn grid_size(n: u64) -> usize {
    1 + ceil_log2(n.max(1)).div_ceil(2) as usize
}

/// Learning rates `2^-i / (5 D G)` for `i = 0..=ceil(log2(n)/2)`, largest first.
pub fn learning_rate_grid(n: u64, diameter: f64, gradient_bound: f64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("interval length must be at least 1".into()));
    }
    if !(diameter > 0.0 && gradient_bound > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "D and G must be positive, got D = {diameter}, G = {gradient_bound}"
        )));
    }
    let top = 1.0 / (5.0 * diameter * gradient_bound);
    let mut eta = top;
    Ok((0..grid_size(n))
        .map(|_| {
            let cur = eta;
            eta *= 0.5;
            cur
        })
        .collect())
}

/// Splits `[p, q]` into covering intervals `I_{-m}, ..., I_0` (lengths at least
/// doubling towards `I_0`) and `I_1, ..., I_n` (lengths at least halving after `I_1`).
///
/// Greedy: from the current round take the longest interval that starts there
/// and ends by `q`. The first of the longest pieces is the pivot `I_0`.
pub fn partition_interval(p: u64, q: u64) -> Result<(Vec<IntervalKey>, Vec<IntervalKey>)> {
    if p == 0 || p > q {
        return Err(Error::InvalidArgument(format!("need 1 <= p <= q, got p = {p}, q = {q}")));
    }
    let mut pieces = Vec::new();
    let mut x = p;
    while x <= q {
        let remaining = q - x + 1;
        let level = x.trailing_zeros().min(remaining.ilog2());
        let piece = IntervalKey { level, index: x >> level };
        x = piece.end() + 1;
        pieces.push(piece);
    }
    let top = pieces.iter().map(|k| k.level).max().unwrap_or(0);
    let pivot = pieces.iter().position(|k| k.level == top).unwrap_or(0);
    let tail = pieces.split_off(pivot + 1);
    Ok((pieces, tail))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spans(keys: &[IntervalKey]) -> Vec<(u64, u64)> {
        keys.iter().map(|k| (k.start(), k.end())).collect()
    }

    #[test]
    fn starting_at_examples() {
        assert_eq!(spans(&intervals_starting_at(1)), vec![(1, 1)]);
        assert_eq!(spans(&intervals_starting_at(4)), vec![(4, 4), (4, 5), (4, 7)]);
        assert_eq!(
            spans(&intervals_starting_at(16)),
            vec![(16, 16), (16, 17), (16, 19), (16, 23), (16, 31)]
        );
        assert!(intervals_starting_at(0).is_empty());
    }

    #[test]
    fn containing_examples() {
        assert_eq!(spans(&intervals_containing(1)), vec![(1, 1)]);
        assert_eq!(spans(&intervals_containing(4)), vec![(4, 4), (4, 5), (4, 7)]);
        assert_eq!(spans(&intervals_containing(6)), vec![(6, 6), (6, 7), (4, 7)]);
    }

    #[test]
    fn key_geometry() {
        let k = IntervalKey::new(3, 5).unwrap();
        assert_eq!((k.start(), k.end(), k.len()), (40, 47, 8));
        assert!(IntervalKey::new(0, 0).is_err());
        assert_eq!(k.to_string(), "[40,47]");
    }

    #[test]
    fn grid_examples() {
        assert_eq!(learning_rate_grid(1, 1.0, 1.0).unwrap(), vec![0.2]);
        assert_eq!(learning_rate_grid(4, 1.0, 1.0).unwrap(), vec![0.2, 0.1]);
        assert_eq!(learning_rate_grid(5, 1.0, 1.0).unwrap().len(), 3);
        assert!(learning_rate_grid(0, 1.0, 1.0).is_err());
        assert!(learning_rate_grid(4, 0.0, 1.0).is_err());
        assert!(learning_rate_grid(4, 1.0, -2.0).is_err());
    }

    #[test]
    fn grid_size_matches_real_formula() {
        for n in 1..5000u64 {
            let expected = 1 + (0.5 * (n as f64).log2()).ceil() as usize;
            assert_eq!(grid_size(n), expected, "n = {n}");
            let grid = learning_rate_grid(n, 2.0, 3.0).unwrap();
            assert_eq!(grid[0], 1.0 / 30.0);
            assert!(grid.windows(2).all(|w| w[1] == 0.5 * w[0]));
        }
    }

    #[test]
    fn partition_examples() {
        let (left, right) = partition_interval(5, 5).unwrap();
        assert_eq!(spans(&left), vec![(5, 5)]);
        assert!(right.is_empty());
        let (left, right) = partition_interval(2, 7).unwrap();
        let mut all = spans(&left);
        all.extend(spans(&right));
        assert_eq!(all, vec![(2, 3), (4, 7)]);
        assert!(partition_interval(3, 2).is_err());
        assert!(partition_interval(0, 2).is_err());
    }

    #[test]
    fn levels_tile_without_gaps() {
        for level in 0..12u32 {
            let mut next = 1u64 << level;
            for t in 1..=4096u64 {
                let alive: Vec<_> = intervals_containing(t).into_iter().filter(|k| k.level == level).collect();
                if t < (1 << level) {
                    assert!(alive.is_empty());
                    continue;
                }
                assert_eq!(alive.len(), 1);
                let k = alive[0];
                if k.start() == t {
                    assert_eq!(t, next);
                    next = k.end() + 1;
                }
            }
        }
    }

    #[test]
    fn starting_and_containing_agree() {
        for t in 1..=4096u64 {
            let alive = intervals_containing(t);
            assert_eq!(alive.len() as u32, t.ilog2() + 1);
            for k in &alive {
                assert!(k.contains(t));
                assert!(intervals_starting_at(k.start()).contains(k));
            }
            for k in intervals_starting_at(t) {
                assert!(alive.contains(&k));
            }
        }
    }
}
