//! The pressure function `t ↦ P(t φ^geo)`, the root of Bowen's equation,
//! conformal dimension identities on unstable leaves, and Carathéodory
//! dimensions of measures.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::caratheodory::{critical_value, hausdorff_structure, CStructure, CriticalValue, Space, StructureKind, Target};
use crate::equilibrium::EmpiricalMeasure;
use crate::linalg::ln_add;
use crate::pressure::{pressure_estimate_with, sft_exact_pressure, Domain, SftGibbs, Variant};
use crate::refmeasure::{Cells, LeafMeasure};
use crate::systems::{Family, LeafChart, Point, Potential, System};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PressureMethod {
    /// `h_top - t ln λ` with `λ` the unstable expansion.
    ClosedForm,
    Numerical,
}

/// Orders and radius of the numerical fallback.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericalSchedule {
    pub r: f64,
    pub ns: Vec<usize>,
}

impl Default for NumericalSchedule {
    fn default() -> Self {
        NumericalSchedule { r: 0.05, ns: (1..=12).collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PressurePoint {
    pub t: f64,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureFunction {
    pub sys: System,
    pub method: PressureMethod,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<NumericalSchedule>,
    /// `ln` of the unstable expansion per step.
    pub log_expansion: f64,
    pub entropy: f64,
}

/// `h_top` of a built-in system.
pub fn topological_entropy(sys: &System) -> Result<f64> {
    Ok(match sys.family {
        Family::CatMap => sys.expansion().ln(),
        Family::Solenoid | Family::Horseshoe { .. } => 2f64.ln(),
        Family::FullShift { p } => (p as f64).ln(),
        Family::Sft { .. } => sft_exact_pressure(sys, &Potential::zero())?.pressure,
    })
}

impl PressureFunction {
    pub fn closed_form(sys: &System) -> Result<Self> {
        Ok(PressureFunction {
            sys: sys.clone(),
            method: PressureMethod::ClosedForm,
            schedule: None,
            log_expansion: sys.expansion().ln(),
            entropy: topological_entropy(sys)?,
        })
    }

    /// Periodic-orbit sums on the whole space; separated sets on a leaf
    /// for the solenoid.
    pub fn numerical(sys: &System, schedule: NumericalSchedule) -> Result<Self> {
        if schedule.ns.len() < 4 {
            return Err(Error::param("ns", "need at least four orders"));
        }
        Ok(PressureFunction {
            sys: sys.clone(),
            method: PressureMethod::Numerical,
            schedule: Some(schedule),
            log_expansion: sys.expansion().ln(),
            entropy: topological_entropy(sys)?,
        })
    }

    pub fn eval(&self, t: f64) -> Result<PressurePoint> {
        if !t.is_finite() {
            return Err(Error::param("t", "must be finite"));
        }
        match &self.schedule {
            None => {
                let v = self.entropy - t * self.log_expansion;
                Ok(PressurePoint { t, value: v, lower: v, upper: v })
            }
            Some(s) => {
                let phi = Potential::geometric(t);
                let (variant, domain) = match self.sys.family {
                    Family::Solenoid => {
                        (Variant::Sep, Domain::Leaf { base: self.sys.attractor_point(0.0, 0)?, radius: self.sys.tau })
                    }
                    _ => (Variant::Per, Domain::Whole),
                };
                let est = pressure_estimate_with(&self.sys, &phi, &[s.r], &s.ns, &domain, variant)?;
                Ok(PressurePoint { t, value: est.value, lower: est.lower, upper: est.upper })
            }
        }
    }

    pub fn table(&self, ts: &[f64]) -> Result<Vec<PressurePoint>> {
        ts.iter().map(|&t| self.eval(t)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeCertificate {
    pub grid: Vec<PressurePoint>,
    pub decreasing: bool,
    /// Midpoint inequality on consecutive triples.
    pub convex: bool,
    /// Largest violation of either property.
    pub worst: f64,
}

/// Monotonicity and convexity of `P` on `points` equally spaced values of
/// `t` over `[lo, hi]`. Numerical values may violate them by their bracket.
pub fn shape_certificate(pf: &PressureFunction, lo: f64, hi: f64, points: usize) -> Result<ShapeCertificate> {
    if points < 3 || !(lo < hi) {
        return Err(Error::param("grid", "need at least three points on lo < hi"));
    }
    let ts: Vec<f64> = (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect();
    let grid = pf.table(&ts)?;
    let slack = |p: &PressurePoint| (p.upper - p.lower).max(0.0);
    let mut worst = 0.0f64;
    let mut decreasing = true;
    for w in grid.windows(2) {
        let gap = w[1].value - w[0].value;
        worst = worst.max(gap);
        decreasing &= gap < slack(&w[0]) + slack(&w[1]) || gap < 0.0;
    }
    let mut convex = true;
    for w in grid.windows(3) {
        let gap = w[1].value - 0.5 * (w[0].value + w[2].value);
        worst = worst.max(gap);
        convex &= gap <= 1e-12 * w[1].value.abs().max(1.0) + slack(&w[0]) + slack(&w[1]) + slack(&w[2]);
    }
    Ok(ShapeCertificate { grid, decreasing, convex, worst })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BowenRoot {
    pub t0: f64,
    pub method: PressureMethod,
    pub bracket: [f64; 2],
    pub residual: f64,
    /// Roots of the lower and upper pressure bounds.
    pub interval: [f64; 2],
    pub table: Vec<PressurePoint>,
}

const PROBE_STEP: f64 = 0.25;
const PROBE_MAX: f64 = 8.0;
const ROOT_ITERATIONS: usize = 200;

fn bisect(f: &dyn Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64, tolerance: f64) -> Result<(f64, [f64; 2], f64)> {
    let mut mid = 0.5 * (lo + hi);
    let mut v = f(mid)?;
    for _ in 0..ROOT_ITERATIONS {
        if v.abs() < tolerance && hi - lo < tolerance {
            break;
        }
        if v > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        mid = 0.5 * (lo + hi);
        v = f(mid)?;
    }
    Ok((mid, [lo, hi], v))
}

/// The zero of `P(t)` by bisection after a sign change on the probe grid
/// `0, 0.25, …, 8`.
pub fn bowen_root(pf: &PressureFunction, tolerance: f64) -> Result<BowenRoot> {
    if !(tolerance > 0.0) {
        return Err(Error::param("tolerance", "must be positive"));
    }
    let mut table = vec![pf.eval(0.0)?];
    if !(table[0].value > 0.0) {
        return Err(Error::NoBracket);
    }
    loop {
        let t = table.len() as f64 * PROBE_STEP;
        if t > PROBE_MAX {
            return Err(Error::NoBracket);
        }
        let p = pf.eval(t)?;
        table.push(p);
        if p.value < 0.0 {
            break;
        }
    }
    let hi = (table.len() - 1) as f64 * PROBE_STEP;
    let lo = hi - PROBE_STEP;
    let (t0, bracket, residual) = bisect(&|t| Ok(pf.eval(t)?.value), lo, hi, tolerance)?;
    let interval = if pf.method == PressureMethod::ClosedForm {
        [t0, t0]
    } else {
        let wide = [(lo - PROBE_STEP).max(0.0), hi + PROBE_STEP];
        let root = |g: &dyn Fn(f64) -> Result<f64>| -> Result<f64> {
            if g(wide[0])? <= 0.0 || g(wide[1])? >= 0.0 {
                return Err(Error::NoBracket);
            }
            Ok(bisect(g, wide[0], wide[1], tolerance)?.0)
        };
        [root(&|t| Ok(pf.eval(t)?.lower))?, root(&|t| Ok(pf.eval(t)?.upper))?]
    };
    Ok(BowenRoot { t0, method: pf.method, bracket, residual, interval, table })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformalReport {
    pub t0: f64,
    pub unstable_dim: usize,
    pub hausdorff: CriticalValue,
    /// `|t_0 · dim E^u - dim_H X|`.
    pub residual: f64,
}

/// Compares `t_0 dim E^u` with the Hausdorff dimension of
/// `V^u_loc(x) ∩ Λ` from the cover DP on the leaf set.
pub fn conformal_dim_check(sys: &System, chart: &LeafChart, t0: f64, level: usize) -> Result<ConformalReport> {
    let c = hausdorff_structure(Space::of_leaf(sys, chart)?)?;
    let d = sys.unstable_dim();
    let hausdorff = critical_value(&c, &Target::Whole, [0.0, d as f64 + 1.0], 1e-9, level)?;
    Ok(ConformalReport { t0, unstable_dim: d, residual: (t0 * d as f64 - hausdorff.value).abs(), hausdorff })
}

/// Masses of the level-`n` cells of a cylinder-shaped structure, grouped
/// as `(ln mass of one cell, ln number of cells)`.
pub trait CellMasses {
    fn cell_log_masses(&self, branching: usize, level: usize) -> Result<Vec<(f64, f64)>>;
}

/// The product measure with the given symbol probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bernoulli {
    pub probs: Vec<f64>,
}

impl CellMasses for Bernoulli {
    fn cell_log_masses(&self, branching: usize, level: usize) -> Result<Vec<(f64, f64)>> {
        if branching != self.probs.len() || self.probs.len() > 4 {
            return Err(Error::param("probs", "need one probability per branch, at most 4"));
        }
        // one class per composition of `level` into symbol counts
        let logs: Vec<f64> = self.probs.iter().map(|p| p.ln()).collect();
        let lnfact: Vec<f64> = {
            let mut v = vec![0.0; level + 1];
            for i in 1..=level {
                v[i] = v[i - 1] + (i as f64).ln();
            }
            v
        };
        let mut out = Vec::new();
        let mut counts = vec![0usize; logs.len()];
        compositions(level, 0, &mut counts, &mut |c| {
            if c.iter().zip(&logs).any(|(&k, l)| k > 0 && !l.is_finite()) {
                return;
            }
            let mass: f64 = c.iter().zip(&logs).filter(|(&k, _)| k > 0).map(|(&k, l)| k as f64 * l).sum();
            let mult = lnfact[level] - c.iter().map(|&k| lnfact[k]).sum::<f64>();
            out.push((mass, mult));
        });
        Ok(out)
    }
}

fn compositions(rest: usize, i: usize, counts: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
    if i + 1 == counts.len() {
        counts[i] = rest;
        f(counts);
        return;
    }
    for k in 0..=rest {
        counts[i] = k;
        compositions(rest - k, i + 1, counts, f);
    }
}

const MAX_ENUMERATED: usize = 1 << 22;

fn enumerated(branching: usize, level: usize, mass: impl Fn(&[u8]) -> f64) -> Result<Vec<(f64, f64)>> {
    let total = (branching as f64).powi(level as i32);
    if total > MAX_ENUMERATED as f64 {
        return Err(Error::RefinementTooDeep { level, budget: MAX_ENUMERATED });
    }
    let mut out = Vec::new();
    let mut w = vec![0u8; level];
    for code in 0..total as usize {
        let mut c = code;
        for s in w.iter_mut().rev() {
            *s = (c % branching) as u8;
            c /= branching;
        }
        let m = mass(&w);
        if m > 0.0 {
            out.push((m.ln(), 0.0));
        }
    }
    Ok(out)
}

impl CellMasses for SftGibbs {
    fn cell_log_masses(&self, branching: usize, level: usize) -> Result<Vec<(f64, f64)>> {
        if branching != self.p {
            return Err(Error::FamilyMismatch);
        }
        enumerated(branching, level, |w| self.cylinder_mass(w))
    }
}

fn grouped(branching: usize, level: usize, items: impl Iterator<Item = Result<(Vec<u8>, f64)>>) -> Result<Vec<(f64, f64)>> {
    let mut cells: Vec<(Vec<u8>, f64)> = Vec::new();
    for item in items {
        let (w, m) = item?;
        if w.len() < level || w[..level].iter().any(|&s| s as usize >= branching) {
            return Err(Error::param("level", "cells are coarser than the level"));
        }
        cells.push((w[..level].to_vec(), m));
    }
    cells.sort_by(|a, b| a.0.cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut i = 0;
    while i < cells.len() {
        let mut j = i;
        let mut m = 0.0;
        while j < cells.len() && cells[j].0 == cells[i].0 {
            m += cells[j].1;
            j += 1;
        }
        if m > 0.0 {
            out.push((m.ln(), 0.0));
        }
        i = j;
    }
    Ok(out)
}

impl CellMasses for EmpiricalMeasure {
    /// Shift atoms only, by their future symbols.
    fn cell_log_masses(&self, branching: usize, level: usize) -> Result<Vec<(f64, f64)>> {
        let total = self.total();
        grouped(
            branching,
            level,
            self.atoms.iter().map(|(p, w)| match p {
                Point::Word(word) => Ok((word.future().to_vec(), w / total)),
                _ => Err(Error::Unsupported("cell masses of geometric atoms")),
            }),
        )
    }
}

impl CellMasses for LeafMeasure {
    fn cell_log_masses(&self, branching: usize, level: usize) -> Result<Vec<(f64, f64)>> {
        match &self.cells {
            Cells::Cylinders { words, weights, .. } => {
                let total: f64 = weights.iter().sum();
                grouped(branching, level, words.iter().zip(weights).map(|(w, m)| Ok((w.clone(), m / total))))
            }
            Cells::Atoms { .. } => Err(Error::Unsupported("cell masses of geometric atoms")),
        }
    }
}

/// Branching and `-ln η` per level of structures whose covers are
/// cylinders.
fn cell_geometry(c: &CStructure) -> Result<(usize, f64)> {
    if c.eta_constant.is_some() {
        return Err(Error::Unsupported("measure dimension with a constant η"));
    }
    let shift = |sys: &System| sys.alphabet().map(|p| p as usize).ok_or(Error::Unsupported("geometric leaf cells"));
    match &c.kind {
        StructureKind::Hausdorff { space: Space::SelfSimilar { ratio, children, .. } } => {
            Ok((*children as usize, -ratio.ln()))
        }
        StructureKind::Hausdorff { space: Space::Interval { .. } | Space::Point { .. } } => Ok((2, 2f64.ln())),
        StructureKind::Hausdorff { space: Space::Torus } => Err(Error::Unsupported("torus cells")),
        StructureKind::Reparametrized { sys, .. } => Ok((shift(sys)?, sys.expansion().ln())),
        StructureKind::Leaf { sys, .. } | StructureKind::Pressure { sys, .. } => Ok((shift(sys)?, 1.0)),
    }
}

/// `ln` of the fewest level-`n` cells carrying mass at least `need`.
fn log_cells_needed(mut classes: Vec<(f64, f64)>, need: f64) -> f64 {
    classes.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut mass = 0.0;
    let mut log_count = f64::NEG_INFINITY;
    for (lm, lc) in classes {
        let class = (lm + lc).exp();
        if mass + class >= need {
            let lj = (need - mass).max(0.0).ln() - lm;
            let lj = if lj < 30.0 { lj.exp().ceil().max(1.0).ln() } else { lj };
            return ln_add(log_count, lj);
        }
        mass += class;
        log_count = ln_add(log_count, lc);
    }
    log_count
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureDimensionRow {
    pub delta: f64,
    /// `ln` of the cell counts of `Z` at the two levels.
    pub log_cells: [f64; 2],
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureDimension {
    pub levels: [usize; 2],
    pub rows: Vec<MeasureDimensionRow>,
    /// Row of the smallest `δ`.
    pub estimate: f64,
}

/// For each `δ`, `Z` at each level is the union of the fewest cells with
/// `μ(Z) ≥ 1 − δ`; its cover weight `K_n η_n^α` is stationary between the
/// two levels at `α = ln(K_2/K_1) / ((n_2 − n_1) κ)`.
pub fn measure_dimension(c: &CStructure, mu: &dyn CellMasses, deltas: &[f64], levels: [usize; 2]) -> Result<MeasureDimension> {
    if deltas.is_empty() || deltas.iter().any(|d| !(*d > 0.0 && *d < 1.0)) {
        return Err(Error::param("deltas", "need values in (0, 1)"));
    }
    if !(levels[0] < levels[1]) {
        return Err(Error::param("levels", "need two increasing levels"));
    }
    let (branching, kappa) = cell_geometry(c)?;
    let classes = [mu.cell_log_masses(branching, levels[0])?, mu.cell_log_masses(branching, levels[1])?];
    let mut rows = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let k = [log_cells_needed(classes[0].clone(), 1.0 - delta), log_cells_needed(classes[1].clone(), 1.0 - delta)];
        let value = (k[1] - k[0]) / ((levels[1] - levels[0]) as f64 * kappa);
        rows.push(MeasureDimensionRow { delta, log_cells: k, value });
    }
    let estimate = rows.iter().min_by(|a, b| a.delta.total_cmp(&b.delta)).expect("nonempty").value;
    Ok(MeasureDimension { levels, rows, estimate })
}
