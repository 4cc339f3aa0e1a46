//! Evolution and averaging of reference measures, and the checks run on the
//! resulting invariant measures.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::pressure::SftGibbs;
use crate::refmeasure::LeafMeasure;
use crate::rng::{seeded, SeededRng};
use crate::systems::{Family, Point, Potential, System};
use crate::{Error, Result};

pub mod conditional;
pub mod gibbs;

pub use conditional::{
    conditional_estimate, conditional_vs_reference_check, product_structure_check, pushforward_conditional_check,
    ConditionalEstimate, ConditionalLevel, InitialLaw, ProductReport, PushforwardReport, Q3Report,
};
pub use gibbs::{gibbs_check, variational_check, BallMass, ExactGibbs, GibbsReport, LebesgueTorus, VariationalReport};

/// Default number of atoms kept while evolving.
pub const DEFAULT_BUDGET: usize = 200_000;

/// Symbols carried beyond the averaging horizon by shift atoms.
const WORD_SLACK: usize = 32;

/// A weighted atomic measure on phase space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    pub atoms: Vec<(Point, f64)>,
    pub source: String,
    /// Number of averaged iterates.
    pub n: usize,
    /// Normalization constant divided out of the raw weights.
    pub normalization: f64,
}

impl EmpiricalMeasure {
    pub fn new(atoms: Vec<(Point, f64)>, source: impl Into<String>, n: usize, normalization: f64) -> Self {
        EmpiricalMeasure { atoms, source: source.into(), n, normalization }
    }

    pub fn total(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    X,
    Y,
}

/// A test function bounded by 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    /// `e^{2πi(kx + ly)}` on the torus.
    Fourier { k: i32, l: i32 },
    /// `e^{ikθ}` on the solenoid, times the indicator of the preimage
    /// branch when `branch` is set.
    SolenoidMode { k: i32, branch: Option<u8> },
    /// Indicator of `x_0 … x_{d-1} = word`.
    Cylinder { word: Vec<u8> },
    /// Indicator of `lo ≤ coordinate < hi` on the horseshoe square.
    Strip { axis: Axis, lo: f64, hi: f64 },
}

/// Which of the two images of the solid torus holds a solenoid point.
pub fn solenoid_branch(x: f64, y: f64, theta: f64) -> u8 {
    let half = 0.5 * theta;
    if x * half.cos() + y * half.sin() >= 0.0 {
        0
    } else {
        1
    }
}

impl TestFunction {
    pub fn eval(&self, p: &Point) -> Result<[f64; 2]> {
        match (self, p) {
            (TestFunction::Fourier { k, l }, Point::Torus { x, y }) => {
                let a = TAU * (*k as f64 * x + *l as f64 * y);
                Ok([a.cos(), a.sin()])
            }
            (TestFunction::SolenoidMode { k, branch }, Point::Solenoid { x, y, theta }) => {
                if branch.is_some_and(|b| b != solenoid_branch(*x, *y, *theta)) {
                    return Ok([0.0, 0.0]);
                }
                let a = *k as f64 * theta;
                Ok([a.cos(), a.sin()])
            }
            (TestFunction::Cylinder { word }, Point::Word(w)) => {
                for (i, &s) in word.iter().enumerate() {
                    if w.symbol(i as i64)? != s {
                        return Ok([0.0, 0.0]);
                    }
                }
                Ok([1.0, 0.0])
            }
            (TestFunction::Strip { axis, lo, hi }, Point::Horseshoe { x, y, .. }) => {
                let c = if *axis == Axis::X { *x } else { *y };
                Ok([if *lo <= c && c < *hi { 1.0 } else { 0.0 }, 0.0])
            }
            _ => Err(Error::FamilyMismatch),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestDictionary {
    pub label: String,
    pub functions: Vec<TestFunction>,
}

impl TestDictionary {
    /// Fourier modes with `|k|, |l| ≤ kmax`, one of each conjugate pair,
    /// without the constant.
    pub fn fourier(kmax: i32) -> Self {
        let mut functions = Vec::new();
        for k in 0..=kmax {
            for l in -kmax..=kmax {
                if k > 0 || l > 0 {
                    functions.push(TestFunction::Fourier { k, l });
                }
            }
        }
        TestDictionary { label: format!("fourier |k|,|l| <= {kmax}"), functions }
    }

    /// `e^{ikθ}` for `0 ≤ k ≤ kmax`, alone and on each branch.
    pub fn solenoid(kmax: i32) -> Self {
        let mut functions = Vec::new();
        for k in 0..=kmax {
            for branch in [None, Some(0), Some(1)] {
                if k > 0 || branch.is_some() {
                    functions.push(TestFunction::SolenoidMode { k, branch });
                }
            }
        }
        TestDictionary { label: format!("solenoid modes k <= {kmax} x branches"), functions }
    }

    /// Indicators of all cylinders of length `1..=depth`.
    pub fn cylinders(p: u8, depth: usize) -> Self {
        let mut functions = Vec::new();
        for d in 1..=depth {
            functions.extend(all_words(p, d).into_iter().map(|word| TestFunction::Cylinder { word }));
        }
        TestDictionary { label: format!("cylinders of depth <= {depth}"), functions }
    }

    /// Indicators of the cylinders of length exactly `len`.
    pub fn cylinders_of_length(p: u8, len: usize) -> Self {
        let functions = all_words(p, len).into_iter().map(|word| TestFunction::Cylinder { word }).collect();
        TestDictionary { label: format!("cylinders of depth {len}"), functions }
    }

    /// Indicators of the construction strips of depth `1..=depth` in both
    /// directions.
    pub fn strips(sys: &System, depth: usize) -> Result<Self> {
        let Family::Horseshoe { alpha, beta } = sys.family else { return Err(Error::FamilyMismatch) };
        let mut functions = Vec::new();
        for d in 1..=depth {
            let w = beta.powi(-(d as i32));
            for lo in crate::systems::cantor_points(beta, d, 0.0, 1.0) {
                functions.push(TestFunction::Strip { axis: Axis::X, lo, hi: lo + w });
            }
            for code in all_words(2, d) {
                let lo: f64 = code.iter().enumerate().map(|(i, &s)| s as f64 * (1.0 - alpha) * alpha.powi(i as i32)).sum();
                functions.push(TestFunction::Strip { axis: Axis::Y, lo, hi: lo + alpha.powi(d as i32) });
            }
        }
        Ok(TestDictionary { label: format!("horseshoe strips of depth <= {depth}"), functions })
    }

    pub fn default_for(sys: &System) -> Result<Self> {
        match sys.family {
            Family::CatMap => Ok(Self::fourier(8)),
            Family::Solenoid => Ok(Self::solenoid(8)),
            Family::Horseshoe { .. } => Self::strips(sys, 4),
            Family::FullShift { p } | Family::Sft { p, .. } => Ok(Self::cylinders(p, 6)),
        }
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn max_depth(&self) -> usize {
        self.functions
            .iter()
            .map(|f| if let TestFunction::Cylinder { word } = f { word.len() } else { 0 })
            .max()
            .unwrap_or(0)
    }
}

fn all_words(p: u8, len: usize) -> Vec<Vec<u8>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out.into_iter().flat_map(|w| (0..p).map(move |s| [w.as_slice(), &[s]].concat())).collect();
    }
    out
}

/// `∫ψ dμ` for every dictionary entry.
pub trait Moments {
    fn moments(&self, dict: &TestDictionary) -> Result<Vec<[f64; 2]>>;
}

impl Moments for EmpiricalMeasure {
    fn moments(&self, dict: &TestDictionary) -> Result<Vec<[f64; 2]>> {
        let mut out = atom_moments(&self.atoms, dict)?;
        let total = self.total();
        if !(total > 0.0) {
            return Err(Error::Empty("measure has no mass"));
        }
        for m in out.iter_mut() {
            m[0] /= total;
            m[1] /= total;
        }
        Ok(out)
    }
}

/// Lebesgue measure on the torus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lebesgue;

impl Moments for Lebesgue {
    fn moments(&self, dict: &TestDictionary) -> Result<Vec<[f64; 2]>> {
        dict.functions
            .iter()
            .map(|f| match f {
                TestFunction::Fourier { k, l } => Ok(if *k == 0 && *l == 0 { [1.0, 0.0] } else { [0.0, 0.0] }),
                _ => Err(Error::Unsupported("Lebesgue moments of a non-Fourier test function")),
            })
            .collect()
    }
}

impl Moments for SftGibbs {
    fn moments(&self, dict: &TestDictionary) -> Result<Vec<[f64; 2]>> {
        dict.functions
            .iter()
            .map(|f| match f {
                TestFunction::Cylinder { word } => Ok([self.cylinder_mass(word), 0.0]),
                _ => Err(Error::Unsupported("Gibbs moments of a non-cylinder test function")),
            })
            .collect()
    }
}

/// Unnormalized `Σ w_i ψ(x_i)`; Fourier dictionaries go through power
/// tables.
fn atom_moments(atoms: &[(Point, f64)], dict: &TestDictionary) -> Result<Vec<[f64; 2]>> {
    let mut out = vec![[0.0; 2]; dict.len()];
    let fourier: Option<Vec<(i32, i32)>> = dict
        .functions
        .iter()
        .map(|f| if let TestFunction::Fourier { k, l } = f { Some((*k, *l)) } else { None })
        .collect();
    if let Some(modes) = fourier {
        let kmax = modes.iter().map(|m| m.0.abs().max(m.1.abs())).max().unwrap_or(0) as usize;
        let mut ex = vec![[0.0; 2]; 2 * kmax + 1];
        let mut ey = vec![[0.0; 2]; 2 * kmax + 1];
        for (p, w) in atoms {
            let Point::Torus { x, y } = p else { return Err(Error::FamilyMismatch) };
            powers(*x, kmax, &mut ex);
            powers(*y, kmax, &mut ey);
            for (o, &(k, l)) in out.iter_mut().zip(&modes) {
                let a = ex[(k + kmax as i32) as usize];
                let b = ey[(l + kmax as i32) as usize];
                o[0] += w * (a[0] * b[0] - a[1] * b[1]);
                o[1] += w * (a[0] * b[1] + a[1] * b[0]);
            }
        }
        return Ok(out);
    }
    for (p, w) in atoms {
        for (o, f) in out.iter_mut().zip(&dict.functions) {
            let v = f.eval(p)?;
            o[0] += w * v[0];
            o[1] += w * v[1];
        }
    }
    Ok(out)
}

/// `e^{2πikx}` for `k = -kmax..=kmax`.
fn powers(x: f64, kmax: usize, out: &mut [[f64; 2]]) {
    let (s, c) = (TAU * x).sin_cos();
    out[kmax] = [1.0, 0.0];
    for k in 1..=kmax {
        let p = out[kmax + k - 1];
        let q = [p[0] * c - p[1] * s, p[0] * s + p[1] * c];
        out[kmax + k] = q;
        out[kmax - k] = [q[0], -q[1]];
    }
}

fn moment_gap(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x[0] - y[0]).hypot(x[1] - y[1])).fold(0.0, f64::max)
}

/// `max_ψ |∫ψ dμ − ∫ψ dν|` over the dictionary.
pub fn weakstar_discrepancy(mu: &dyn Moments, nu: &dyn Moments, dict: &TestDictionary) -> Result<f64> {
    Ok(moment_gap(&mu.moments(dict)?, &nu.moments(dict)?))
}

/// Stratified residual resampling to at most `budget` atoms: each atom
/// keeps `⌊budget·w/W⌋` copies and the residual copies are drawn by one
/// stratified sweep. Total mass is preserved.
pub fn residual_resample(atoms: Vec<(Point, f64)>, budget: usize, rng: &mut SeededRng) -> Vec<(Point, f64)> {
    if atoms.len() <= budget || budget == 0 {
        return atoms;
    }
    let total: f64 = atoms.iter().map(|a| a.1).sum();
    let unit = total / budget as f64;
    let mut counts: Vec<usize> = Vec::with_capacity(atoms.len());
    let mut residual: Vec<f64> = Vec::with_capacity(atoms.len());
    let mut fixed = 0;
    for (_, w) in &atoms {
        let e = w / unit;
        let c = e.floor() as usize;
        counts.push(c);
        residual.push(e - c as f64);
        fixed += c;
    }
    let left = budget.saturating_sub(fixed);
    if left > 0 {
        let sum: f64 = residual.iter().sum();
        let step = sum / left as f64;
        let mut target = step * rng.gen::<f64>();
        let mut acc = 0.0;
        let mut drawn = 0;
        for (i, r) in residual.iter().enumerate() {
            acc += r;
            while drawn < left && target < acc {
                counts[i] += 1;
                drawn += 1;
                target += step;
            }
        }
        // rounding can leave the last stratum short
        if drawn < left {
            let i = residual.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map_or(0, |x| x.0);
            counts[i] += left - drawn;
        }
    }
    let kept: usize = counts.iter().sum();
    let unit = total / kept as f64;
    atoms.into_iter().zip(counts).filter(|(_, c)| *c > 0).map(|((p, _), c)| (p, c as f64 * unit)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolveConfig {
    /// Atoms kept while evolving and in the averaged output.
    pub budget: usize,
    pub seed: u64,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig { budget: DEFAULT_BUDGET, seed: 0 }
    }
}

/// Normalized atoms of a leaf measure, resampled to the budget.
fn starting_atoms(sys: &System, m: &LeafMeasure, horizon: usize, cfg: &EvolveConfig, rng: &mut SeededRng) -> Result<Vec<(Point, f64)>> {
    if !(m.total_mass > 0.0) {
        return Err(Error::Empty("leaf measure has no mass"));
    }
    let mut atoms = m.atoms(sys, horizon + WORD_SLACK)?;
    for a in atoms.iter_mut() {
        a.1 /= m.total_mass;
    }
    Ok(residual_resample(atoms, cfg.budget, rng))
}

fn step_atoms(sys: &System, atoms: &mut [(Point, f64)]) -> Result<()> {
    for a in atoms.iter_mut() {
        a.0 = sys.apply(&a.0, 1)?;
    }
    Ok(())
}

/// `μ_n = (1/n) Σ_{k<n} f^k_* m` for the normalized leaf measure `m`.
pub fn evolve_average(sys: &System, phi: &Potential, m: &LeafMeasure, n: usize, cfg: &EvolveConfig) -> Result<EmpiricalMeasure> {
    if n == 0 {
        return Err(Error::param("n", "must be positive"));
    }
    if *phi != m.potential {
        return Err(Error::param("potential", "does not match the leaf measure"));
    }
    let mut rng = seeded(cfg.seed);
    let mut atoms = starting_atoms(sys, m, n, cfg, &mut rng)?;
    let thin = atoms.len() * n > cfg.budget;
    let per_step = cfg.budget.div_ceil(n);
    let mut out = Vec::with_capacity(if thin { per_step * n } else { atoms.len() * n });
    for k in 0..n {
        if k > 0 {
            step_atoms(sys, &mut atoms)?;
        }
        let snap: Vec<(Point, f64)> = atoms.iter().map(|(p, w)| (p.clone(), w / n as f64)).collect();
        if thin {
            out.extend(residual_resample(snap, per_step, &mut rng));
        } else {
            out.extend(snap);
        }
    }
    let source = format!("order-{} leaf measure at {:?}", m.order, m.chart.base);
    Ok(EmpiricalMeasure::new(out, source, n, m.total_mass))
}

/// `∫ψ d f^k_* m` for `k < n`, without storing the iterates.
pub fn moment_trace(sys: &System, m: &LeafMeasure, n: usize, dict: &TestDictionary, cfg: &EvolveConfig) -> Result<Vec<Vec<[f64; 2]>>> {
    let mut rng = seeded(cfg.seed);
    let mut atoms = starting_atoms(sys, m, n + dict.max_depth(), cfg, &mut rng)?;
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        if k > 0 {
            step_atoms(sys, &mut atoms)?;
        }
        out.push(atom_moments(&atoms, dict)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    /// Discrepancy to the previous `μ_n` of the schedule, per leaf (max).
    pub cauchy: Option<f64>,
    /// Largest discrepancy between `μ_n`'s of different leaves.
    pub independence: f64,
    /// Discrepancy to the reference measure, per leaf (max).
    pub reference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub dictionary: String,
    pub rows: Vec<ConvergenceRow>,
    /// Leading rows excluded from the monotonicity verdicts.
    pub burn_in: usize,
    pub cauchy_monotone: bool,
    pub independence_monotone: bool,
}

/// Relative slack allowed in the monotonicity verdicts.
const MONOTONE_SLACK: f64 = 0.1;

pub(crate) fn monotone(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] * (1.0 + MONOTONE_SLACK) + 1e-12)
}

/// Cauchy and leaf-independence diagnostics of `μ_n` along `schedule`,
/// plus the distance to `reference` when given.
pub fn convergence_report(
    sys: &System,
    leaves: &[LeafMeasure],
    schedule: &[usize],
    dict: &TestDictionary,
    cfg: &EvolveConfig,
    reference: Option<&dyn Moments>,
) -> Result<ConvergenceReport> {
    if leaves.len() < 2 {
        return Err(Error::param("leaves", "need at least two leaves"));
    }
    if schedule.is_empty() || schedule[0] == 0 || schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("schedule", "must be positive and increasing"));
    }
    let top = *schedule.last().unwrap();
    let target = reference.map(|r| r.moments(dict)).transpose()?;
    // averaged moments per leaf at each schedule point
    let mut averages: Vec<Vec<Vec<[f64; 2]>>> = Vec::with_capacity(leaves.len());
    for m in leaves {
        let trace = moment_trace(sys, m, top, dict, cfg)?;
        let mut sum = vec![[0.0; 2]; dict.len()];
        let mut at = Vec::with_capacity(schedule.len());
        let mut next = 0;
        for (k, mk) in trace.iter().enumerate() {
            for (s, v) in sum.iter_mut().zip(mk) {
                s[0] += v[0];
                s[1] += v[1];
            }
            if k + 1 == schedule[next] {
                let n = (k + 1) as f64;
                at.push(sum.iter().map(|s| [s[0] / n, s[1] / n]).collect());
                next += 1;
                if next == schedule.len() {
                    break;
                }
            }
        }
        averages.push(at);
    }
    let mut rows = Vec::with_capacity(schedule.len());
    for (i, &n) in schedule.iter().enumerate() {
        let cauchy = (i > 0).then(|| averages.iter().map(|a| moment_gap(&a[i], &a[i - 1])).fold(0.0, f64::max));
        let mut independence = 0.0f64;
        for a in 0..leaves.len() {
            for b in a + 1..leaves.len() {
                independence = independence.max(moment_gap(&averages[a][i], &averages[b][i]));
            }
        }
        let reference = target.as_ref().map(|t| averages.iter().map(|a| moment_gap(&a[i], t)).fold(0.0, f64::max));
        rows.push(ConvergenceRow { n, cauchy, independence, reference });
    }
    let burn_in = schedule.len() / 5;
    let cauchy: Vec<f64> = rows[burn_in..].iter().filter_map(|r| r.cauchy).collect();
    let indep: Vec<f64> = rows[burn_in..].iter().map(|r| r.independence).collect();
    Ok(ConvergenceReport {
        dictionary: dict.label.clone(),
        cauchy_monotone: monotone(&cauchy),
        independence_monotone: monotone(&indep),
        rows,
        burn_in,
    })
}

/// About eight equally spaced averaging lengths ending at `n`.
pub fn default_schedule(n: usize) -> Vec<usize> {
    let step = (n / 8).max(1);
    let mut s: Vec<usize> = (1..).map(|k| k * step).take_while(|&k| k <= n).collect();
    if s.last() != Some(&n) {
        s.push(n);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pressure::sft_exact_pressure;
    use crate::refmeasure::build_with_reference_pressure;
    use crate::systems::SymbolWord;

    #[test]
    fn discrepancy_examples() {
        let sys = System::full_shift(2).unwrap();
        let uni = sft_exact_pressure(&sys, &Potential::zero()).unwrap();
        let bern = sft_exact_pressure(&sys, &Potential::bernoulli(&[0.3, 0.7])).unwrap();
        let d1 = TestDictionary::cylinders(2, 1);
        assert!((weakstar_discrepancy(&uni, &bern, &d1).unwrap() - 0.2).abs() < 1e-12);
        assert_eq!(weakstar_discrepancy(&bern, &bern, &d1).unwrap(), 0.0);
        let delta = EmpiricalMeasure::new(vec![(Point::torus(0.0, 0.0), 1.0)], "delta", 1, 1.0);
        let f = TestDictionary { label: "(1,0)".into(), functions: vec![TestFunction::Fourier { k: 1, l: 0 }] };
        assert!((weakstar_discrepancy(&Lebesgue, &delta, &f).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn power_tables_match_direct_evaluation() {
        let atoms = vec![(Point::torus(0.123, 0.77), 0.4), (Point::torus(0.9, 0.05), 0.6)];
        let dict = TestDictionary::fourier(3);
        let fast = atom_moments(&atoms, &dict).unwrap();
        for (f, m) in dict.functions.iter().zip(&fast) {
            let mut d = [0.0; 2];
            for (p, w) in &atoms {
                let v = f.eval(p).unwrap();
                d[0] += w * v[0];
                d[1] += w * v[1];
            }
            assert!((d[0] - m[0]).abs() < 1e-12 && (d[1] - m[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn resampling_keeps_mass_and_budget() {
        let mut rng = seeded(7);
        let atoms: Vec<(Point, f64)> = (0..1000).map(|i| (Point::torus(i as f64 / 1000.0, 0.0), (i % 7 + 1) as f64)).collect();
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        let out = residual_resample(atoms, 100, &mut rng);
        assert!(out.len() <= 100);
        assert!((out.iter().map(|a| a.1).sum::<f64>() - total).abs() < 1e-9 * total);
    }

    #[test]
    fn bernoulli_is_a_fixed_point() {
        let sys = System::full_shift(2).unwrap();
        let phi = Potential::bernoulli(&[0.3, 0.7]);
        let g = sft_exact_pressure(&sys, &phi).unwrap();
        let n = 6;
        let dict = TestDictionary::cylinders(2, 4);
        let chart = sys.leaf_chart(&Point::Word(SymbolWord::from_parts(2, &[1, 0], &[0]).unwrap()), sys.tau, 1).unwrap();
        let m = build_with_reference_pressure(&sys, &phi, &chart, 0.7, n + 4).unwrap();
        let mu = evolve_average(&sys, &phi, &m, n, &EvolveConfig::default()).unwrap();
        assert!((mu.total() - 1.0).abs() < 1e-12);
        assert!(weakstar_discrepancy(&mu, &g, &dict).unwrap() < 1e-12);
        let other = sys.leaf_chart(&Point::Word(SymbolWord::from_parts(2, &[0, 1], &[1]).unwrap()), sys.tau, 1).unwrap();
        let m2 = build_with_reference_pressure(&sys, &phi, &other, 0.7, n + 4).unwrap();
        let rep = convergence_report(&sys, &[m, m2], &[1, 2, 4, 6], &dict, &EvolveConfig::default(), Some(&g)).unwrap();
        for r in &rep.rows {
            assert!(r.independence < 1e-12 && r.reference.unwrap() < 1e-12 && r.cauchy.unwrap_or(0.0) < 1e-12);
        }
    }
}
