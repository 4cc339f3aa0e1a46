//! Conditional measures of exact shift Gibbs measures on unstable leaves of
//! a cylinder rectangle, their comparison with reference measures, the
//! local product structure, and pushforwards of measures absolutely
//! continuous to a conditional.
//!
//! A rectangle is the cylinder `[rect]` at coordinates `0..`; its unstable
//! slice through `y` fixes `y`'s past, and the refining partitions `ξ_ℓ`
//! fix the last `ℓ` past symbols.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::{monotone, TestDictionary, TestFunction};
use crate::pressure::SftGibbs;
use crate::refmeasure::LeafMeasure;
use crate::systems::{admissible_words, System};
use crate::{Error, Result};

/// Deepest refining partition.
pub const MAX_PARTITION_DEPTH: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalLevel {
    pub depth: usize,
    /// Normalized mass of each word of the estimate.
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalEstimate {
    pub past: Vec<u8>,
    pub rectangle: Vec<u8>,
    /// Future words `rect …` of a common length.
    pub words: Vec<Vec<u8>>,
    pub levels: Vec<ConditionalLevel>,
    /// `max |ln(w_ℓ / w_{ℓ-1})|` between consecutive levels.
    pub stabilization: Vec<f64>,
}

fn rectangle_words(sys: &System, prev: Option<u8>, rectangle: &[u8], len: usize) -> Result<Vec<Vec<u8>>> {
    if rectangle.is_empty() || rectangle.len() > len {
        return Err(Error::param("rectangle", "need 1 <= rectangle length <= word length"));
    }
    let words: Vec<Vec<u8>> =
        admissible_words(sys, prev, len).into_iter().filter(|w| w[..rectangle.len()] == *rectangle).collect();
    if words.is_empty() {
        return Err(Error::Empty("rectangle holds no admissible words"));
    }
    Ok(words)
}

fn joined(a: &[u8], b: &[u8]) -> Vec<u8> {
    [a, b].concat()
}

/// Normalized `μ` restricted to `ξ_ℓ(y) ∩ [w]` for each future word `w` of
/// length `len` inside the rectangle and each `ℓ` in `depths`.
pub fn conditional_estimate(
    sys: &System,
    g: &SftGibbs,
    past: &[u8],
    rectangle: &[u8],
    len: usize,
    depths: &[usize],
) -> Result<ConditionalEstimate> {
    if depths.is_empty() || depths.iter().any(|&d| d > past.len() || d > MAX_PARTITION_DEPTH) {
        return Err(Error::param("depths", "partition depths must not exceed the past or 8"));
    }
    let words = rectangle_words(sys, past.last().copied(), rectangle, len)?;
    let mut levels = Vec::with_capacity(depths.len());
    for &depth in depths {
        let tail = &past[past.len() - depth..];
        let weights: Vec<f64> = words.iter().map(|w| g.cylinder_mass(&joined(tail, w))).collect();
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Empty("partition element has no mass"));
        }
        levels.push(ConditionalLevel { depth, weights: weights.into_iter().map(|w| w / total).collect() });
    }
    let stabilization = levels
        .windows(2)
        .map(|p| {
            p[0].weights
                .iter()
                .zip(&p[1].weights)
                .filter(|(a, b)| **a > 0.0 && **b > 0.0)
                .map(|(a, b)| (b / a).ln().abs())
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(ConditionalEstimate { past: past.to_vec(), rectangle: rectangle.to_vec(), words, levels, stabilization })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Q3Row {
    pub depth: usize,
    pub min: f64,
    pub max: f64,
    /// `max / min` of the density against the reference.
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Q3Report {
    pub rows: Vec<Q3Row>,
    /// Largest spread: the empirical `Q_3²`.
    pub spread: f64,
    /// Spread at the deepest level over the shallowest, minus one.
    pub spread_growth: f64,
}

/// Density of each conditional level against the reference measure of
/// the same leaf, both normalized on the rectangle.
pub fn conditional_vs_reference_check(est: &ConditionalEstimate, reference: &LeafMeasure) -> Result<Q3Report> {
    let past = reference.chart.past()?;
    let common = past.len().min(est.past.len());
    if past[past.len() - common..] != est.past[est.past.len() - common..] {
        return Err(Error::param("reference", "reference leaf differs from the conditional's leaf"));
    }
    let rect = reference.cylinder_mass(&est.rectangle)?;
    if !(rect > 0.0) {
        return Err(Error::Empty("reference gives the rectangle no mass"));
    }
    let m: Vec<f64> = est.words.iter().map(|w| Ok(reference.cylinder_mass(w)? / rect)).collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(est.levels.len());
    for level in &est.levels {
        let (mut min, mut max) = (f64::INFINITY, 0.0f64);
        for (c, r) in level.weights.iter().zip(&m) {
            if *r > 0.0 {
                min = min.min(c / r);
                max = max.max(c / r);
            }
        }
        rows.push(Q3Row { depth: level.depth, min, max, spread: max / min });
    }
    let spread = rows.iter().map(|r| r.spread).fold(0.0, f64::max);
    let spread_growth = rows[rows.len() - 1].spread / rows[0].spread - 1.0;
    Ok(Q3Report { rows, spread, spread_growth })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductReport {
    pub min: f64,
    pub max: f64,
    pub spread: f64,
    pub cells: usize,
}

/// `μ|_R` against `μ^u_p ⊗ μ̃_p` on cells `[u · w]`, `u` a past of length
/// `past_depth` and `w` a future of length `len` in the rectangle.
pub fn product_structure_check(
    sys: &System,
    g: &SftGibbs,
    rectangle: &[u8],
    p_past: &[u8],
    past_depth: usize,
    len: usize,
) -> Result<ProductReport> {
    if past_depth == 0 || past_depth > MAX_PARTITION_DEPTH {
        return Err(Error::param("past_depth", "must lie in 1..=8"));
    }
    let cond = conditional_estimate(sys, g, p_past, rectangle, len, &[p_past.len().min(MAX_PARTITION_DEPTH)])?;
    let pasts: Vec<Vec<u8>> = admissible_words(sys, None, past_depth)
        .into_iter()
        .filter(|u| sys.allowed(u[past_depth - 1], rectangle[0]))
        .collect();
    let (mut min, mut max, mut cells) = (f64::INFINITY, 0.0f64, 0);
    for u in &pasts {
        let slab = g.cylinder_mass(&joined(u, rectangle));
        if !(slab > 0.0) {
            continue;
        }
        for (w, c) in cond.words.iter().zip(&cond.levels[0].weights) {
            if !sys.allowed(u[past_depth - 1], w[0]) || !(*c > 0.0) {
                continue;
            }
            let ratio = g.cylinder_mass(&joined(u, w)) / (slab * c);
            min = min.min(ratio);
            max = max.max(ratio);
            cells += 1;
        }
    }
    if cells == 0 {
        return Err(Error::Empty("rectangle holds no cells"));
    }
    Ok(ProductReport { min, max, spread: max / min, cells })
}

/// Law of the symbols `0..len` of a measure that continues as the Gibbs
/// chain after them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialLaw {
    pub words: Vec<Vec<u8>>,
    pub probs: Vec<f64>,
    pub label: String,
}

impl InitialLaw {
    /// The conditional of `μ` on the rectangle slice through the leaf with
    /// the given past.
    pub fn conditional(sys: &System, g: &SftGibbs, past: &[u8], rectangle: &[u8], len: usize) -> Result<Self> {
        let depth = past.len().min(MAX_PARTITION_DEPTH);
        let est = conditional_estimate(sys, g, &past[past.len() - depth..], rectangle, len, &[depth])?;
        let probs = est.levels.into_iter().next().expect("one level").weights;
        Ok(InitialLaw { words: est.words, probs, label: "conditional".into() })
    }

    /// `μ` itself.
    pub fn stationary(sys: &System, g: &SftGibbs, len: usize) -> Self {
        let words = admissible_words(sys, None, len);
        let probs = words.iter().map(|w| g.cylinder_mass(w)).collect();
        InitialLaw { words, probs, label: "stationary".into() }
    }

    /// Density proportional to the indicator of `[prefix]`.
    pub fn reweighted(&self, prefix: &[u8]) -> Result<Self> {
        let mut words = Vec::new();
        let mut probs = Vec::new();
        for (w, &p) in self.words.iter().zip(&self.probs) {
            if w.starts_with(prefix) {
                words.push(w.clone());
                probs.push(p);
            }
        }
        let total: f64 = probs.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Empty("reweighting density vanishes"));
        }
        for p in probs.iter_mut() {
            *p /= total;
        }
        Ok(InitialLaw { words, probs, label: alloc::format!("{} reweighted on {:?}", self.label, prefix) })
    }

    fn len(&self) -> usize {
        self.words.first().map_or(0, |w| w.len())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PushforwardReport {
    pub dictionary: String,
    pub law: String,
    /// `(n, discrepancy of (1/n) Σ_{k<n} f^k_* ν from μ)`.
    pub rows: Vec<(usize, f64)>,
    pub decreasing: bool,
}

fn block_of(g: &SftGibbs, s: usize) -> Vec<u8> {
    (0..g.block).rev().map(|j| ((s / g.p.pow(j as u32)) % g.p) as u8).collect()
}

fn block_index(g: &SftGibbs, w: &[u8]) -> usize {
    w.iter().fold(0, |acc, &s| acc * g.p + s as usize)
}

/// Exact cylinder frequencies of `f^k_* ν` averaged along `schedule`.
pub fn pushforward_conditional_check(
    g: &SftGibbs,
    nu: &InitialLaw,
    schedule: &[usize],
    dict: &TestDictionary,
) -> Result<PushforwardReport> {
    let l0 = nu.len();
    if l0 < g.block {
        return Err(Error::param("nu", "initial law must cover a Gibbs block"));
    }
    if schedule.is_empty() || schedule[0] == 0 || schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("schedule", "must be positive and increasing"));
    }
    let targets: Vec<&[u8]> = dict
        .functions
        .iter()
        .map(|f| match f {
            TestFunction::Cylinder { word } if !word.is_empty() => Ok(word.as_slice()),
            _ => Err(Error::Unsupported("pushforward check needs cylinder test functions")),
        })
        .collect::<Result<_>>()?;
    let mu: Vec<f64> = targets.iter().map(|v| g.cylinder_mass(v)).collect();
    let top = *schedule.last().unwrap();
    let states = g.stationary.len();
    // block law at position j, valid from j = l0 - 1 on
    let mut law = vec![0.0; states];
    for (w, &p) in nu.words.iter().zip(&nu.probs) {
        law[block_index(g, &w[l0 - g.block..])] += p;
    }
    let blocks: Vec<Vec<u8>> = (0..states).map(|s| block_of(g, s)).collect();
    let mut sums = vec![0.0; targets.len()];
    let mut rows = Vec::with_capacity(schedule.len());
    let mut next = 0;
    for k in 0..top {
        if k >= l0 {
            let mut moved = vec![0.0; states];
            for (s, &p) in law.iter().enumerate() {
                for &(t, q) in &g.transitions[s] {
                    moved[t] += p * q;
                }
            }
            law = moved;
        }
        for (sum, v) in sums.iter_mut().zip(&targets) {
            let d = v.len();
            *sum += if k + d <= l0 {
                nu.words.iter().zip(&nu.probs).filter(|(w, _)| w[k..k + d] == **v).map(|(_, p)| p).sum::<f64>()
            } else if k < l0 {
                nu.words
                    .iter()
                    .zip(&nu.probs)
                    .filter(|(w, _)| w[k..] == v[..l0 - k])
                    .map(|(w, p)| p * g.conditional_mass(&w[l0 - g.block..], &v[l0 - k..]))
                    .sum::<f64>()
            } else {
                law.iter().zip(&blocks).map(|(p, b)| if *p > 0.0 { p * g.conditional_mass(b, v) } else { 0.0 }).sum::<f64>()
            };
        }
        if k + 1 == schedule[next] {
            let n = (k + 1) as f64;
            let gap = sums.iter().zip(&mu).map(|(s, m)| (s / n - m).abs()).fold(0.0, f64::max);
            rows.push((k + 1, gap));
            next += 1;
        }
    }
    let burn_in = rows.len() / 5;
    let values: Vec<f64> = rows[burn_in..].iter().map(|r| r.1).collect();
    Ok(PushforwardReport { dictionary: dict.label.clone(), law: nu.label.clone(), decreasing: monotone(&values), rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pressure::sft_exact_pressure;
    use crate::refmeasure::build_with_reference_pressure;
    use crate::systems::{Point, Potential, SymbolWord};

    fn bernoulli() -> (System, Potential, SftGibbs) {
        let sys = System::full_shift(2).unwrap();
        let phi = Potential::bernoulli(&[0.3, 0.7]);
        let g = sft_exact_pressure(&sys, &phi).unwrap();
        (sys, phi, g)
    }

    #[test]
    fn product_conditionals_match_reference() {
        let (sys, phi, g) = bernoulli();
        let past = [1, 0, 0, 1, 1, 0, 1, 1];
        let est = conditional_estimate(&sys, &g, &past, &[0], 6, &[1, 2, 4, 8]).unwrap();
        let chart = sys.leaf_chart(&Point::Word(SymbolWord::from_parts(2, &past, &[0]).unwrap()), sys.tau, 1).unwrap();
        let m = build_with_reference_pressure(&sys, &phi, &chart, 0.7, 6).unwrap();
        let rep = conditional_vs_reference_check(&est, &m).unwrap();
        assert!((rep.spread - 1.0).abs() < 1e-12, "{rep:?}");
        let prod = product_structure_check(&sys, &g, &[0], &past, 4, 5).unwrap();
        assert!((prod.spread - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pushforwards_of_conditionals_converge() {
        let (sys, _, g) = bernoulli();
        let dict = TestDictionary::cylinders_of_length(2, 4);
        let nu = InitialLaw::conditional(&sys, &g, &[1, 1, 0], &[0], 6).unwrap();
        let rep = pushforward_conditional_check(&g, &nu, &[10, 20, 30], &dict).unwrap();
        // only the iterates that still see the fixed symbol differ from μ
        assert!(rep.rows[2].1 < 0.02 && rep.decreasing, "{rep:?}");
        let same = InitialLaw::stationary(&sys, &g, 4);
        let rep = pushforward_conditional_check(&g, &same, &[1, 5], &dict).unwrap();
        assert!(rep.rows.iter().all(|r| r.1 < 1e-15));
    }
}
