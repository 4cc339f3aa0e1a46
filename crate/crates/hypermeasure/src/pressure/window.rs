//! Exact Bowen-ball sums on shifts.
//!
//! On a shift `B_n(ω, r)` is the set of words agreeing with `ω` on a fixed
//! index window, so the supremum (infimum) over separated (spanning) sets is
//! a sum over window assignments of the max (min) over everything outside.
//! Both are evaluated by a transfer pass over blocks of `depth − 1` symbols,
//! in log space.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::ln_add;
use crate::systems::potential::ShiftWindow;
use crate::systems::System;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Slot {
    /// Optimized over.
    Free,
    /// Summed over: part of the ball's defining window.
    Class,
    Pinned(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Extreme {
    Max,
    Min,
}

impl Extreme {
    fn pick(self, a: f64, b: f64) -> f64 {
        match self {
            Extreme::Max => a.max(b),
            Extreme::Min => a.min(b),
        }
    }
}

// NaN marks an empty aggregate.
fn join(a: f64, b: f64, f: impl Fn(f64, f64) -> f64) -> f64 {
    if a.is_nan() {
        b
    } else if b.is_nan() {
        a
    } else {
        f(a, b)
    }
}

pub(crate) struct WindowSum<'a> {
    pub sys: &'a System,
    pub win: &'a ShiftWindow,
    /// Terms `φ(σ^k ·)` for `k in 0..n`.
    pub n: usize,
    pub lo: i64,
    pub slots: Vec<Slot>,
    pub extreme: Extreme,
    /// Weight every term by 0 (counts classes).
    pub count_only: bool,
}

impl WindowSum<'_> {
    fn p(&self) -> usize {
        self.win.p
    }

    fn block(&self) -> usize {
        self.win.depth.saturating_sub(1).max(1)
    }

    fn hi(&self) -> i64 {
        self.lo + self.slots.len() as i64
    }

    fn slot(&self, i: i64) -> Slot {
        self.slots[(i - self.lo) as usize]
    }

    fn admits(&self, i: i64, c: usize) -> bool {
        match self.slot(i) {
            Slot::Pinned(v) => v as usize == c,
            _ => true,
        }
    }

    /// Weight of the term completing at position `i` given the preceding
    /// block `s` and the new symbol `c`.
    fn term(&self, i: i64, s: usize, c: usize) -> f64 {
        let k = i - (self.win.start + self.win.depth as i64 - 1);
        if k < 0 || k >= self.n as i64 || self.count_only {
            return 0.0;
        }
        let idx = if self.win.depth == 1 { c } else { s * self.p() + c };
        self.win.values[idx]
    }

    fn digits(&self, mut b: usize) -> Vec<usize> {
        let k = self.block();
        let mut d = vec![0; k];
        for j in (0..k).rev() {
            d[j] = b % self.p();
            b /= self.p();
        }
        d
    }

    /// Forward pass over `[lo, end)`; returns values indexed by the final
    /// block. Dropped symbols are summed on class slots and optimized on free
    /// ones.
    fn forward(&self, end: i64) -> Vec<f64> {
        let (p, k) = (self.p(), self.block());
        let states = p.pow(k as u32);
        let mut v = vec![f64::NAN; states];
        for (b, slot) in v.iter_mut().enumerate() {
            let d = self.digits(b);
            let mut ok = true;
            let mut acc = 0.0;
            for j in 0..k {
                let i = self.lo + j as i64;
                if !self.admits(i, d[j]) || (j > 0 && !self.sys.allowed(d[j - 1] as u8, d[j] as u8)) {
                    ok = false;
                    break;
                }
                // only depth-1 terms can complete inside the first block
                if self.win.depth == 1 {
                    acc += self.term(i, 0, d[j]);
                }
            }
            if ok {
                *slot = acc;
            }
        }
        let top = p.pow(k as u32 - 1);
        for i in self.lo + k as i64..end {
            let agg_sum = self.slot(i - k as i64) != Slot::Free;
            let mut next = vec![f64::NAN; states];
            for (s2, out) in next.iter_mut().enumerate() {
                let c = s2 % p;
                if !self.admits(i, c) {
                    continue;
                }
                let tail = s2 / p;
                for o in 0..p {
                    let s = o * top + tail;
                    let prev = v[s];
                    if prev.is_nan() || !self.sys.allowed((s % p) as u8, c as u8) {
                        continue;
                    }
                    let val = prev + self.term(i, s, c);
                    *out = if agg_sum {
                        join(*out, val, ln_add)
                    } else {
                        join(*out, val, |a, b| self.extreme.pick(a, b))
                    };
                }
            }
            v = next;
        }
        v
    }

    /// Backward pass over `[start, hi)`: optimal continuation value indexed
    /// by the block ending at `start − 1`.
    fn backward(&self, start: i64) -> Vec<f64> {
        let (p, k) = (self.p(), self.block());
        let states = p.pow(k as u32);
        let mut b = vec![0.0; states];
        let low = p.pow(k as u32 - 1);
        for i in (start..self.hi()).rev() {
            let mut prev = vec![f64::NAN; states];
            for (s, out) in prev.iter_mut().enumerate() {
                for c in 0..p {
                    if !self.admits(i, c) || !self.sys.allowed((s % p) as u8, c as u8) {
                        continue;
                    }
                    let s2 = (s % low) * p + c;
                    if b[s2].is_nan() {
                        continue;
                    }
                    let val = self.term(i, s, c) + b[s2];
                    *out = join(*out, val, |a, b| self.extreme.pick(a, b));
                }
            }
            b = prev;
        }
        b
    }

    /// `ln Σ_class ext_free exp(S_n φ)`; `-inf` if nothing is admissible.
    pub fn evaluate(mut self) -> f64 {
        let k = self.block() as i64;
        if (self.slots.len() as i64) < k + 1 {
            let pad = (k + 1 - self.slots.len() as i64) as usize;
            let mut slots = vec![Slot::Free; pad];
            slots.extend_from_slice(&self.slots);
            self.slots = slots;
            self.lo -= pad as i64;
        }
        let classes: Vec<i64> = (self.lo..self.hi()).filter(|&i| self.slot(i) == Slot::Class).collect();
        let cut = classes.last().map_or(self.lo, |&i| i + 1);
        let tail_fixed = cut - self.lo >= k && (cut - k..cut).all(|i| self.slot(i) != Slot::Free);
        let tail_free = (cut..self.hi()).all(|i| self.slot(i) != Slot::Class);
        let total = if tail_fixed && tail_free {
            let f = self.forward(cut);
            let b = self.backward(cut);
            f.iter()
                .zip(&b)
                .map(|(x, y)| x + y)
                .fold(f64::NAN, |a, v| join(a, v, ln_add))
        } else {
            self.enumerate_classes(&classes)
        };
        if total.is_nan() {
            f64::NEG_INFINITY
        } else {
            total
        }
    }

    // Short windows: pin every class assignment in turn.
    fn enumerate_classes(&self, classes: &[i64]) -> f64 {
        let p = self.p();
        let combos = p.pow(classes.len() as u32);
        let mut total = f64::NAN;
        for mut code in 0..combos {
            let mut slots = self.slots.clone();
            for &i in classes.iter().rev() {
                slots[(i - self.lo) as usize] = Slot::Pinned((code % p) as u8);
                code /= p;
            }
            let pinned = WindowSum {
                sys: self.sys,
                win: self.win,
                n: self.n,
                lo: self.lo,
                slots,
                extreme: self.extreme,
                count_only: self.count_only,
            };
            let best = pinned
                .forward(pinned.hi())
                .into_iter()
                .fold(f64::NAN, |a, v| join(a, v, |x, y| self.extreme.pick(x, y)));
            total = join(total, best, ln_add);
        }
        total
    }
}
