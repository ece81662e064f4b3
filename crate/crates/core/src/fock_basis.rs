//! Level-truncated basis of unnormalized oscillator monomials
//! `α_{-n1}^{μ1} ... α_{-nk}^{μk} Ω₀`.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Oscillator label `(n, μ)`; orders by mode number first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeIndex {
    pub n: u32,
    pub mu: u32,
}

impl ModeIndex {
    pub fn new(n: u32, mu: u32) -> Self {
        debug_assert!(n >= 1);
        ModeIndex { n, mu }
    }
}

/// A monomial in creation operators acting on the vacuum. `modes` is sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FockBasisState {
    modes: Vec<ModeIndex>,
}

impl FockBasisState {
    pub fn vacuum() -> Self {
        FockBasisState { modes: Vec::new() }
    }

    pub fn from_modes(mut modes: Vec<ModeIndex>) -> Self {
        modes.sort_unstable();
        FockBasisState { modes }
    }

    pub fn modes(&self) -> &[ModeIndex] {
        &self.modes
    }

    pub fn level(&self) -> usize {
        self.modes.iter().map(|m| m.n as usize).sum()
    }

    pub fn is_vacuum(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn multiplicity(&self, mode: ModeIndex) -> usize {
        self.modes.iter().filter(|m| **m == mode).count()
    }

    pub fn with_mode(&self, mode: ModeIndex) -> Self {
        let pos = self.modes.partition_point(|m| *m <= mode);
        let mut modes = Vec::with_capacity(self.modes.len() + 1);
        modes.extend_from_slice(&self.modes[..pos]);
        modes.push(mode);
        modes.extend_from_slice(&self.modes[pos..]);
        FockBasisState { modes }
    }

    /// Removes one copy of `mode`; `None` if absent.
    pub fn without_mode(&self, mode: ModeIndex) -> Option<Self> {
        let pos = self.modes.iter().position(|m| *m == mode)?;
        let mut modes = self.modes.clone();
        modes.remove(pos);
        Some(FockBasisState { modes })
    }

    /// Distinct modes with their multiplicities, in sorted order.
    pub fn grouped(&self) -> Vec<(ModeIndex, usize)> {
        let mut out: Vec<(ModeIndex, usize)> = Vec::new();
        for m in &self.modes {
            match out.last_mut() {
                Some((last, k)) if last == m => *k += 1,
                _ => out.push((*m, 1)),
            }
        }
        out
    }
}

/// All monomials of level `<= cutoff`, ordered by (level, lexicographic modes).
#[derive(Debug, Clone)]
pub struct LevelBasis {
    directions: usize,
    cutoff: usize,
    states: Vec<FockBasisState>,
    index: HashMap<FockBasisState, usize>,
    /// `offsets[l]..offsets[l+1]` is the level-`l` slice.
    offsets: Vec<usize>,
}

impl LevelBasis {
    pub fn directions(&self) -> usize {
        self.directions
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[FockBasisState] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &FockBasisState {
        &self.states[i]
    }

    pub fn index_of(&self, state: &FockBasisState) -> Option<usize> {
        self.index.get(state).copied()
    }

    pub fn level_of(&self, i: usize) -> usize {
        self.offsets.partition_point(|&o| o <= i) - 1
    }

    pub fn level_range(&self, level: usize) -> std::ops::Range<usize> {
        if level > self.cutoff {
            return self.len()..self.len();
        }
        self.offsets[level]..self.offsets[level + 1]
    }

    /// Number of states with level `<= level` (they form a prefix of the ordering).
    pub fn prefix_len(&self, level: usize) -> usize {
        self.offsets[level.min(self.cutoff) + 1]
    }

    pub fn level_count(&self, level: usize) -> usize {
        self.level_range(level).len()
    }

    pub fn vacuum_index(&self) -> usize {
        0
    }

    pub fn check_direction(&self, mu: usize) -> Result<()> {
        if mu >= self.directions {
            return Err(Error::DirectionOutOfRange { mu, directions: self.directions });
        }
        Ok(())
    }
}

/// Enumerates every colored partition of level `<= cutoff` with `directions` colors.
pub fn enumerate_basis(directions: usize, cutoff: usize) -> LevelBasis {
    assert!(directions >= 1, "at least one oscillator direction required");
    let mut states = Vec::new();
    let mut offsets = vec![0];
    for level in 0..=cutoff {
        let mut slice = Vec::new();
        let mut current = Vec::new();
        colored_partitions(level, ModeIndex { n: 1, mu: 0 }, directions as u32, &mut current, &mut slice);
        slice.sort_unstable();
        states.extend(slice.into_iter().map(|modes| FockBasisState { modes }));
        offsets.push(states.len());
    }
    let index = states.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
    LevelBasis { directions, cutoff, states, index, offsets }
}

// Nondecreasing sequences of modes, each >= `min`, with mode numbers summing to `remaining`.
fn colored_partitions(
    remaining: usize,
    min: ModeIndex,
    colors: u32,
    current: &mut Vec<ModeIndex>,
    out: &mut Vec<Vec<ModeIndex>>,
) {
    if remaining == 0 {
        out.push(current.clone());
        return;
    }
    for n in min.n..=remaining as u32 {
        let mu_start = if n == min.n { min.mu } else { 0 };
        for mu in mu_start..colors {
            let mode = ModeIndex { n, mu };
            current.push(mode);
            colored_partitions(remaining - n as usize, mode, colors, current, out);
            current.pop();
        }
    }
}

/// Coefficient of `q^level` in `∏_{n>=1} (1 - q^n)^(-colors)`.
pub fn level_degeneracy(level: usize, colors: usize) -> BigUint {
    // series truncated at q^level, multiplied factor by factor
    let mut series = vec![BigUint::zero(); level + 1];
    series[0] = BigUint::one();
    for n in 1..=level {
        // (1 - q^n)^(-colors) = sum_k C(colors + k - 1, k) q^(n k)
        let mut next = vec![BigUint::zero(); level + 1];
        for (i, c) in series.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let mut k = 0usize;
            let mut binom = BigUint::one();
            while i + n * k <= level {
                next[i + n * k] += c * &binom;
                k += 1;
                binom = binom * BigUint::from(colors + k - 1) / BigUint::from(k);
            }
        }
        series = next;
    }
    series.swap_remove(level)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vacuum_only() {
        let b = enumerate_basis(24, 0);
        assert_eq!(b.len(), 1);
        assert!(b.state(0).is_vacuum());
    }

    #[test]
    fn level_one_has_one_state_per_direction() {
        let b = enumerate_basis(24, 1);
        assert_eq!(b.level_count(1), 24);
    }

    #[test]
    fn level_two_slice() {
        let b = enumerate_basis(24, 2);
        let slice = b.level_range(2);
        assert_eq!(slice.len(), 324);
        let singles = slice.clone().filter(|&i| b.state(i).modes().len() == 1).count();
        assert_eq!(singles, 24);
        assert_eq!(slice.len() - singles, 300);
    }

    #[test]
    fn ordering_is_level_then_lex() {
        let b = enumerate_basis(3, 3);
        for w in b.states().windows(2) {
            assert!((w[0].level(), &w[0]) < (w[1].level(), &w[1]));
        }
        for (i, s) in b.states().iter().enumerate() {
            assert_eq!(b.index_of(s), Some(i));
            assert_eq!(b.level_of(i), s.level());
        }
    }

    #[test]
    fn degeneracies() {
        assert_eq!(level_degeneracy(0, 24), BigUint::from(1u32));
        assert_eq!(level_degeneracy(1, 24), BigUint::from(24u32));
        assert_eq!(level_degeneracy(2, 24), BigUint::from(324u32));
        assert_eq!(level_degeneracy(3, 24), BigUint::from(3200u32));
        assert_eq!(level_degeneracy(2, 26), BigUint::from(377u32));
    }

    #[test]
    fn insert_and_remove_modes() {
        let s = FockBasisState::from_modes(vec![ModeIndex::new(2, 0), ModeIndex::new(1, 3)]);
        assert_eq!(s.modes()[0], ModeIndex::new(1, 3));
        let t = s.with_mode(ModeIndex::new(1, 3));
        assert_eq!(t.multiplicity(ModeIndex::new(1, 3)), 2);
        assert_eq!(t.level(), 4);
        assert_eq!(t.without_mode(ModeIndex::new(2, 0)).unwrap().level(), 2);
        assert!(s.without_mode(ModeIndex::new(3, 0)).is_none());
    }
}
