//! Exact cover optimization on shift cylinder trees.
//!
//! A node is an admissible word `w` on positions `0..n + extra`; its cover
//! weight is `min e^{S_n φ}` over the points of the ball, `e^{-nκα}`. Once
//! `n` is past a short prefix the minimum splits as
//! `head(prefix) + body(w) + tail(last K symbols)`, and the value of the
//! subtree below `w` is `e^{head + body - nκα} g(state)` with `g` depending
//! only on the state and the distance to the depth cap. Both passes are
//! `O(depth · p^{K+1})`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::ln_add;
use crate::systems::potential::ShiftWindow;
use crate::systems::System;
use crate::{Error, Result};

const MAX_PREFIX: usize = 1 << 22;

pub(crate) struct ShiftTree<'a> {
    pub sys: &'a System,
    /// Window with `start` relative to word position 0.
    pub win: ShiftWindow,
    /// Symbols at positions `-past.len()..0`; `None` minimizes over pasts.
    pub past: Option<Vec<u8>>,
    pub extra: usize,
    pub kappa: f64,
}

/// Level sums of one target at one refinement level.
pub(crate) struct TreeValue {
    /// `ln m`.
    pub log_value: f64,
    /// Number of cover elements chosen by the optimum.
    pub size: f64,
    /// Words of the optimal cover with their orders, when small.
    pub elements: Option<Vec<(Vec<u8>, usize)>>,
}

impl ShiftTree<'_> {
    fn p(&self) -> usize {
        self.win.p
    }

    fn s(&self) -> i64 {
        self.win.start
    }

    fn d(&self) -> i64 {
        self.win.depth as i64
    }

    /// State length.
    fn k(&self) -> usize {
        (self.extra as i64 - self.s()).max(self.d() - 1).max(1) as usize
    }

    /// Offset (from the next position) of the term completed by a step.
    fn step_offset(&self) -> i64 {
        (self.s() - self.extra as i64).min(1 - self.d())
    }

    /// Symbols of unresolved terms read past the end of the word.
    fn reach(&self) -> usize {
        (self.s() + self.d() - 1 - self.extra as i64).max(0) as usize
    }

    /// First level at which the head/body/tail split is valid.
    pub fn min_level(&self) -> usize {
        let k = self.k() as i64;
        [1, -self.s(), self.s() + self.d() - 1 - self.extra as i64, k - self.extra as i64]
            .into_iter()
            .max()
            .unwrap_or(1)
            .max(1) as usize
    }

    fn states(&self) -> usize {
        self.p().pow(self.k() as u32)
    }

    fn state_digits(&self, st: usize) -> Vec<u8> {
        let (p, k) = (self.p(), self.k());
        let mut d = vec![0u8; k];
        let mut b = st;
        for j in (0..k).rev() {
            d[j] = (b % p) as u8;
            b /= p;
        }
        d
    }

    fn term_at(&self, digits: &[u8], c: u8) -> f64 {
        // digits[k - j] sits at offset -j, c at offset 0
        let k = self.k() as i64;
        let o = self.step_offset();
        let mut idx = 0usize;
        for off in o..o + self.d() {
            let sym = if off == 0 { c } else { digits[(k + off) as usize] };
            idx = idx * self.p() + sym as usize;
        }
        self.win.values[idx]
    }

    /// Minimal contribution of the unresolved terms, per state.
    fn tails(&self) -> Vec<f64> {
        let (p, k, f) = (self.p(), self.k() as i64, self.reach());
        let count = (self.s() + self.d() - 1 - self.extra as i64).max(0);
        (0..self.states())
            .map(|st| {
                let digits = self.state_digits(st);
                if f == 0 {
                    return 0.0;
                }
                let mut best = f64::INFINITY;
                let mut fut = vec![0u8; f];
                for code in 0..p.pow(f as u32) {
                    let mut c = code;
                    for j in (0..f).rev() {
                        fut[j] = (c % p) as u8;
                        c /= p;
                    }
                    let mut ok = self.sys.allowed(digits[k as usize - 1], fut[0]);
                    for j in 1..f {
                        ok &= self.sys.allowed(fut[j - 1], fut[j]);
                    }
                    if !ok {
                        continue;
                    }
                    let sym = |off: i64| if off < 0 { digits[(k + off) as usize] } else { fut[off as usize] };
                    let mut total = 0.0;
                    // unresolved term t reads offsets 1 - d + t ..= t
                    for t in 0..count {
                        let start = 1 - self.d() + t;
                        let mut idx = 0usize;
                        for off in start..start + self.d() {
                            idx = idx * p + sym(off) as usize;
                        }
                        total += self.win.values[idx];
                    }
                    best = best.min(total);
                }
                best
            })
            .collect()
    }
}

pub(crate) const WITNESS_CAP: f64 = 4096.0;

impl ShiftTree<'_> {
    fn past_symbol(&self, pos: i64, free: &[u8]) -> Result<u8> {
        match &self.past {
            Some(past) => {
                let j = past.len() as i64 + pos;
                if j < 0 {
                    return Err(Error::WindowExhausted { index: pos });
                }
                Ok(past[j as usize])
            }
            None => Ok(free[(free.len() as i64 + pos) as usize]),
        }
    }

    /// Sum of the terms of a level-`n` word that do not read past its end,
    /// minimized over free pasts; `None` if no past is admissible.
    fn resolved_sum(&self, w: &[u8], n: usize) -> Result<Option<f64>> {
        let p = self.p();
        let l = w.len() as i64;
        let hi = (n as i64).min(l - self.s() - self.d() + 1).max(0);
        let need = (-self.s()).max(0) as usize;
        let free_len = if self.past.is_none() { need } else { 0 };
        let mut best: Option<f64> = None;
        let mut free = vec![0u8; free_len];
        for code in 0..p.pow(free_len as u32) {
            let mut c = code;
            for j in (0..free_len).rev() {
                free[j] = (c % p) as u8;
                c /= p;
            }
            if free_len > 0 && (!self.sys.is_admissible(&free) || !self.sys.allowed(free[free_len - 1], w[0])) {
                continue;
            }
            let mut total = 0.0;
            for k in 0..hi {
                let mut idx = 0usize;
                for pos in k + self.s()..k + self.s() + self.d() {
                    let sym = if pos < 0 { self.past_symbol(pos, &free)? } else { w[pos as usize] };
                    idx = idx * p + sym as usize;
                }
                total += self.win.values[idx];
            }
            best = Some(best.map_or(total, |b: f64| b.min(total)));
        }
        Ok(best)
    }

    fn state_of(&self, w: &[u8]) -> usize {
        let k = self.k();
        w[w.len() - k..].iter().fold(0usize, |acc, &s| acc * self.p() + s as usize)
    }

    fn root_allows(&self, c: u8) -> bool {
        match self.past.as_ref().and_then(|p| p.last()) {
            Some(&a) => self.sys.allowed(a, c),
            None => true,
        }
    }

    /// Admissible words of length `len` matching `pins` on their first
    /// positions.
    fn words(&self, len: usize, pins: &[Option<u8>], cap: usize) -> Result<Vec<Vec<u8>>> {
        let p = self.p() as u8;
        let mut out: Vec<Vec<u8>> = Vec::new();
        let mut stack: Vec<Vec<u8>> = vec![Vec::new()];
        while let Some(w) = stack.pop() {
            if w.len() == len {
                out.push(w);
                if out.len() > cap {
                    return Err(Error::RefinementTooDeep { level: len, budget: cap });
                }
                continue;
            }
            let i = w.len();
            for c in (0..p).rev() {
                if i < pins.len() && pins[i].is_some_and(|v| v != c) {
                    continue;
                }
                let ok = match w.last() {
                    Some(&a) => self.sys.allowed(a, c),
                    None => self.root_allows(c),
                };
                if ok {
                    let mut nw = w.clone();
                    nw.push(c);
                    stack.push(nw);
                }
            }
        }
        out.reverse();
        Ok(out)
    }

    /// `ln` of the optimal cover weight of the cylinder `pins` (word
    /// coordinates) using orders `level..=level + delta`.
    pub fn cover(&self, pins: &[Option<u8>], level: usize, delta: usize, alpha: f64, witness: bool) -> Result<TreeValue> {
        let n0 = self.min_level();
        if level < n0 {
            return Err(Error::param("level", format!("cylinder trees of this potential start at level {n0}")));
        }
        let p = self.p();
        let states = self.states();
        let l0 = n0 + self.extra;
        let head_pins = &pins[..pins.len().min(l0)];
        let mut fwd = vec![f64::NAN; states];
        let mut cnt = vec![0.0f64; states];
        for w in self.words(l0, head_pins, MAX_PREFIX)? {
            let Some(v) = self.resolved_sum(&w, n0)? else { continue };
            let st = self.state_of(&w);
            fwd[st] = if fwd[st].is_nan() { v } else { ln_add(fwd[st], v) };
            cnt[st] += 1.0;
        }
        let top = p.pow(self.k() as u32 - 1);
        for n in n0..level {
            let pos = n + self.extra;
            let mut next = vec![f64::NAN; states];
            let mut ncnt = vec![0.0f64; states];
            for st in 0..states {
                if fwd[st].is_nan() {
                    continue;
                }
                let digits = self.state_digits(st);
                for c in 0..p as u8 {
                    if pos < pins.len() && pins[pos].is_some_and(|v| v != c) {
                        continue;
                    }
                    if !self.sys.allowed(digits[digits.len() - 1], c) {
                        continue;
                    }
                    let s2 = (st % top) * p + c as usize;
                    let v = fwd[st] + self.term_at(&digits, c);
                    next[s2] = if next[s2].is_nan() { v } else { ln_add(next[s2], v) };
                    ncnt[s2] += cnt[st];
                }
            }
            fwd = next;
            cnt = ncnt;
        }
        let (lg, own) = self.backward(delta, alpha);
        let g = &lg[delta];
        let mut sizes = vec![1.0f64; states];
        for j in 1..=delta {
            let mut next = vec![0.0f64; states];
            for st in 0..states {
                if own[j][st] {
                    next[st] = 1.0;
                    continue;
                }
                let digits = self.state_digits(st);
                for c in 0..p as u8 {
                    if self.sys.allowed(digits[digits.len() - 1], c) {
                        next[st] += sizes[(st % top) * p + c as usize];
                    }
                }
            }
            sizes = next;
        }
        let shift = -(level as f64) * self.kappa * alpha;
        let mut total = f64::NEG_INFINITY;
        let mut size = 0.0;
        for st in 0..states {
            if fwd[st].is_nan() {
                continue;
            }
            total = ln_add(total, fwd[st] + shift + g[st]);
            size += cnt[st] * sizes[st];
        }
        let elements = if witness && size <= WITNESS_CAP && size > 0.0 {
            let mut out = Vec::new();
            for w in self.words(level + self.extra, pins, WITNESS_CAP as usize)? {
                self.collect(w, level, delta, &own, &mut out);
            }
            Some(out)
        } else {
            None
        };
        Ok(TreeValue { log_value: total, size, elements })
    }

    /// `lg[j][state]`: log subtree value `j` levels above the cap, and
    /// whether the node itself is the optimal cover there.
    fn backward(&self, delta: usize, alpha: f64) -> (Vec<Vec<f64>>, Vec<Vec<bool>>) {
        let p = self.p();
        let states = self.states();
        let top = p.pow(self.k() as u32 - 1);
        let tails = self.tails();
        let mut lg = vec![tails.clone()];
        let mut own = vec![vec![true; states]];
        for j in 0..delta {
            let prev = &lg[j];
            let mut cur = vec![0.0; states];
            let mut pick = vec![true; states];
            for st in 0..states {
                let digits = self.state_digits(st);
                let mut kids = f64::NEG_INFINITY;
                for c in 0..p as u8 {
                    if self.sys.allowed(digits[digits.len() - 1], c) {
                        let s2 = (st % top) * p + c as usize;
                        kids = ln_add(kids, self.term_at(&digits, c) - self.kappa * alpha + prev[s2]);
                    }
                }
                if kids < tails[st] {
                    cur[st] = kids;
                    pick[st] = false;
                } else {
                    cur[st] = tails[st];
                }
            }
            lg.push(cur);
            own.push(pick);
        }
        (lg, own)
    }

    fn collect(&self, w: Vec<u8>, n: usize, j: usize, own: &[Vec<bool>], out: &mut Vec<(Vec<u8>, usize)>) {
        let st = self.state_of(&w);
        if own[j][st] {
            out.push((w, n));
            return;
        }
        let last = w[w.len() - 1];
        for c in 0..self.p() as u8 {
            if self.sys.allowed(last, c) {
                let mut nw = w.clone();
                nw.push(c);
                self.collect(nw, n + 1, j - 1, own, out);
            }
        }
    }
}
