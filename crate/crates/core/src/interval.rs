//! Finite unions of closed intervals with exact sweep-line arithmetic.
//!
//! `IntervalSet` is the carrier for every measured set in the crate: the
//! exceptional sets `Phi(Q, delta)`, coverage unions of resonant balls,
//! per-form solution sets and dyadic stage unions. Endpoints are kept exactly
//! as produced by the callers; normalization only sorts and merges.

use serde::{Deserialize, Serialize};

/// Sorted disjoint union of closed intervals `[l, r]` with `l <= r`.
///
/// After normalization consecutive intervals satisfy `r_i < l_{i+1}` strictly;
/// touching intervals are merged.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IntervalSet {
    ivs: Vec<(f64, f64)>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        Self { ivs: Vec::new() }
    }

    /// Single interval `[lo, hi]`; empty if `hi < lo`.
    pub fn interval(lo: f64, hi: f64) -> Self {
        if hi < lo {
            Self::empty()
        } else {
            Self { ivs: vec![(lo, hi)] }
        }
    }

    /// Build from arbitrary (possibly overlapping, unsorted) intervals.
    /// Intervals with `hi < lo` or non-finite endpoints are dropped.
    pub fn from_intervals<I: IntoIterator<Item = (f64, f64)>>(ivs: I) -> Self {
        let mut v: Vec<(f64, f64)> = ivs
            .into_iter()
            .filter(|&(l, r)| l.is_finite() && r.is_finite() && r >= l)
            .collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(v.len());
        for (l, r) in v {
            match out.last_mut() {
                Some(last) if l <= last.1 => {
                    if r > last.1 {
                        last.1 = r;
                    }
                }
                _ => out.push((l, r)),
            }
        }
        Self { ivs: out }
    }

    /// Closed balls `B(c, r)` clipped to `[lo, hi]`, merged.
    pub fn from_balls<I: IntoIterator<Item = (f64, f64)>>(balls: I, lo: f64, hi: f64) -> Self {
        Self::from_intervals(
            balls
                .into_iter()
                .map(|(c, r)| ((c - r).max(lo), (c + r).min(hi))),
        )
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.ivs
    }

    pub fn is_empty(&self) -> bool {
        self.ivs.is_empty()
    }

    pub fn count(&self) -> usize {
        self.ivs.len()
    }

    /// Total Lebesgue measure.
    pub fn measure(&self) -> f64 {
        self.ivs.iter().map(|&(l, r)| r - l).sum()
    }

    pub fn contains(&self, x: f64) -> bool {
        // binary search on left endpoints
        let idx = self.ivs.partition_point(|&(l, _)| l <= x);
        idx > 0 && x <= self.ivs[idx - 1].1
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        IntervalSet::from_intervals(self.ivs.iter().chain(other.ivs.iter()).copied())
    }

    pub fn intersect(&self, other: &IntervalSet) -> IntervalSet {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.ivs.len() && j < other.ivs.len() {
            let (al, ar) = self.ivs[i];
            let (bl, br) = other.ivs[j];
            let l = al.max(bl);
            let r = ar.min(br);
            if r >= l {
                out.push((l, r));
            }
            if ar < br {
                i += 1;
            } else {
                j += 1;
            }
        }
        IntervalSet { ivs: out }
    }

    /// Clip to `[lo, hi]`.
    pub fn clip(&self, lo: f64, hi: f64) -> IntervalSet {
        self.intersect(&IntervalSet::interval(lo, hi))
    }

    /// Complement within `[lo, hi]`.
    pub fn complement_within(&self, lo: f64, hi: f64) -> IntervalSet {
        let mut out = Vec::new();
        let mut cursor = lo;
        for &(l, r) in &self.ivs {
            if r < lo {
                continue;
            }
            if l > hi {
                break;
            }
            if l > cursor {
                out.push((cursor, l));
            }
            cursor = cursor.max(r);
        }
        if cursor < hi {
            out.push((cursor, hi));
        }
        IntervalSet { ivs: out }
    }

    /// Number of half-open grid cells `[lo + k*eps, lo + (k+1)*eps)` meeting
    /// the set, for `k = 0..n_cells`. Cells are anchored at `lo`; exact given
    /// the stored endpoints.
    pub fn box_count(&self, lo: f64, eps: f64, n_cells: usize) -> usize {
        let mut occupied = 0usize;
        let mut next_free = 0usize; // first cell index not yet counted
        for &(l, r) in &self.ivs {
            let first = (((l - lo) / eps).floor().max(0.0)) as usize;
            let last = (((r - lo) / eps).floor().max(0.0)) as usize;
            let first = first.max(next_free);
            let last = last.min(n_cells.saturating_sub(1));
            if first <= last && first < n_cells {
                occupied += last - first + 1;
                next_free = last + 1;
            }
        }
        occupied
    }
}
