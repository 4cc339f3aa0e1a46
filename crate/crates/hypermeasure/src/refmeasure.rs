//! Discretized reference measures on unstable leaves: one weight
//! `e^{-nP̂ + S_n φ(x_s)}` per order-`n` u-Bowen ball, with the scaling,
//! u-Gibbs, mass-window and holonomy checks.
//!
//! On shift leaves the order-`n` balls are exactly the cylinders of length
//! `n + m − 1` below the chart's past (`m` from [`shift_agreement`]), so the
//! measure is a weight per cylinder. Geometric leaves tile the chart by
//! balls and carry one atom per ball; horseshoe leaves carry one atom per
//! Cantor piece fine enough to sit in a single ball.

use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::caratheodory::{half_width, horseshoe_extra};
use crate::pressure::{
    bowen_distortion_constant, pressure_estimate_with, sft_exact_pressure, shift_agreement, Domain, Variant,
};
use crate::rng::seeded;
use crate::systems::{cantor_points, Family, LeafChart, Point, Potential, PotentialKind, System};
use crate::{Error, Result};

/// Most cells a single measure may hold.
pub const MAX_CELLS: usize = 1 << 22;

/// Symbols of least continuation appended to cylinder representatives.
const REP_EXT: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PressureSource {
    /// Transfer matrix of a symbolic potential.
    Exact,
    /// Closed form for constant and geometric potentials.
    Analytic,
    /// Slope of partition sums.
    Estimated,
    /// Given by the caller.
    Supplied,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Cells {
    /// Weight per admissible cylinder of length `len` below the chart past,
    /// lexicographically.
    Cylinders { len: usize, words: Vec<Vec<u8>>, weights: Vec<f64> },
    /// `(leaf coordinate, weight)`, sorted by coordinate.
    Atoms { coords: Vec<f64>, weights: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafMeasure {
    pub chart: LeafChart,
    pub r: f64,
    pub order: usize,
    pub pressure: f64,
    pub pressure_source: PressureSource,
    pub potential: Potential,
    pub cells: Cells,
    /// Raw mass; consumers normalize.
    pub total_mass: f64,
}

/// `P(φ)` from the most exact source available.
pub fn reference_pressure(sys: &System, phi: &Potential) -> Result<(f64, PressureSource)> {
    phi.validate(sys)?;
    if sys.is_shift() {
        return Ok((sft_exact_pressure(sys, phi)?.pressure, PressureSource::Exact));
    }
    let entropy = match sys.family {
        Family::CatMap => sys.expansion().ln(),
        _ => 2f64.ln(),
    };
    match phi.kind {
        PotentialKind::Zero => return Ok((entropy + phi.shift, PressureSource::Analytic)),
        PotentialKind::GeometricT { t } => {
            return Ok((entropy - t * sys.expansion().ln() + phi.shift, PressureSource::Analytic))
        }
        _ => {}
    }
    let (variant, domain) = match sys.family {
        Family::Solenoid => (Variant::Sep, Domain::Leaf { base: sys.attractor_point(0.0, 0)?, radius: sys.tau }),
        _ => (Variant::Per, Domain::Whole),
    };
    let ns: Vec<usize> = (1..=10).collect();
    let est = pressure_estimate_with(sys, phi, &[0.05], &ns, &domain, variant)?;
    Ok((est.value, PressureSource::Estimated))
}

/// Half-width of an order-`n` u-Bowen ball in chart units.
fn ball_half_width(sys: &System, chart: &LeafChart, r: f64, n: usize) -> Result<f64> {
    match sys.family {
        Family::Horseshoe { beta, .. } => Ok(r / beta.powi(n as i32 - 1)),
        _ => Ok(half_width(sys, chart, r, n)?.0),
    }
}

fn check_args(sys: &System, phi: &Potential, chart: &LeafChart, r: f64, n: usize) -> Result<()> {
    phi.validate(sys)?;
    if !(r > 0.0) || r >= sys.tau / 3.0 {
        return Err(Error::param("r", format!("need 0 < r < tau/3 = {}", sys.tau / 3.0)));
    }
    if n == 0 {
        return Err(Error::param("order", "must be >= 1"));
    }
    if chart.is_cylinder_tree() != sys.is_shift() {
        return Err(Error::FamilyMismatch);
    }
    Ok(())
}

/// The order-`n` reference measure on `chart` with pressure `p_hat`, which
/// is recorded as supplied.
pub fn build_reference_measure(
    sys: &System,
    phi: &Potential,
    chart: &LeafChart,
    r: f64,
    n: usize,
    p_hat: Option<f64>,
) -> Result<LeafMeasure> {
    let p_hat = p_hat.ok_or(Error::param("p_hat", "reference pressure missing"))?;
    build_with_source(sys, phi, chart, r, n, p_hat, PressureSource::Supplied)
}

/// [`build_reference_measure`] with `P̂` from [`reference_pressure`].
pub fn build_with_reference_pressure(
    sys: &System,
    phi: &Potential,
    chart: &LeafChart,
    r: f64,
    n: usize,
) -> Result<LeafMeasure> {
    check_args(sys, phi, chart, r, n)?;
    let (p, source) = reference_pressure(sys, phi)?;
    build_with_source(sys, phi, chart, r, n, p, source)
}

pub fn build_with_source(
    sys: &System,
    phi: &Potential,
    chart: &LeafChart,
    r: f64,
    n: usize,
    p_hat: f64,
    source: PressureSource,
) -> Result<LeafMeasure> {
    check_args(sys, phi, chart, r, n)?;
    if !p_hat.is_finite() {
        return Err(Error::param("p_hat", "must be finite"));
    }
    let scale = -(n as f64) * p_hat;
    let cells = match &sys.family {
        Family::FullShift { .. } | Family::Sft { .. } => {
            let len = n + shift_agreement(r) - 1;
            let past = chart.past()?;
            let count = (sys.alphabet().unwrap_or(2) as f64).powi(len as i32);
            if count > MAX_CELLS as f64 {
                return Err(Error::RefinementTooDeep { level: n, budget: MAX_CELLS });
            }
            let words = crate::systems::admissible_words(sys, past.last().copied(), len);
            let win = phi.shift_window(sys)?;
            let ext = REP_EXT + win.end().max(0) as usize;
            let mut weights = Vec::with_capacity(words.len());
            for w in &words {
                let x = chart.word(sys, w, ext)?;
                weights.push((scale + phi.word_birkhoff(sys, &x, 0, n)?).exp());
            }
            Cells::Cylinders { len, words, weights }
        }
        Family::Horseshoe { beta, .. } => {
            let Point::Horseshoe { x: x0, y: y0, .. } = chart.base else { return Err(Error::FamilyMismatch) };
            let depth = n + horseshoe_extra(r, *beta);
            if 2f64.powi(depth as i32) > MAX_CELLS as f64 {
                return Err(Error::RefinementTooDeep { level: n, budget: MAX_CELLS });
            }
            let xs = cantor_points(*beta, depth, x0 - chart.tau, x0 + chart.tau);
            let mut coords = Vec::with_capacity(xs.len());
            let mut weights = Vec::with_capacity(xs.len());
            for x in xs {
                let q = Point::horseshoe(x, y0);
                coords.push(x - x0);
                weights.push((scale + sys.birkhoff_sum(phi, &q, n)?).exp());
            }
            Cells::Atoms { coords, weights }
        }
        _ => {
            let ball = 2.0 * ball_half_width(sys, chart, r, n)?;
            let count = (2.0 * chart.tau / ball).ceil() as usize;
            if count > MAX_CELLS {
                return Err(Error::RefinementTooDeep { level: n, budget: MAX_CELLS });
            }
            let constant = match phi.kind {
                PotentialKind::Zero => Some(phi.shift),
                PotentialKind::GeometricT { t } => Some(phi.shift - t * sys.expansion().ln()),
                _ => None,
            };
            let lo = -0.5 * count as f64 * ball;
            let mut coords = Vec::with_capacity(count);
            let mut weights = Vec::with_capacity(count);
            for i in 0..count {
                let t = lo + (i as f64 + 0.5) * ball;
                let s = match constant {
                    Some(c) => c * n as f64,
                    None => sys.birkhoff_sum(phi, &chart.point(sys, t)?, n)?,
                };
                coords.push(t);
                weights.push((scale + s).exp());
            }
            Cells::Atoms { coords, weights }
        }
    };
    let total_mass = cells.weights().iter().sum();
    Ok(LeafMeasure {
        chart: chart.clone(),
        r,
        order: n,
        pressure: p_hat,
        pressure_source: source,
        potential: phi.clone(),
        cells,
        total_mass,
    })
}

impl Cells {
    pub fn weights(&self) -> &[f64] {
        match self {
            Cells::Cylinders { weights, .. } | Cells::Atoms { weights, .. } => weights,
        }
    }

    pub fn len(&self) -> usize {
        self.weights().len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights().is_empty()
    }
}

impl LeafMeasure {
    /// Mass of the cylinder `[w]` below the chart past.
    pub fn cylinder_mass(&self, w: &[u8]) -> Result<f64> {
        let Cells::Cylinders { len, words, weights } = &self.cells else {
            return Err(Error::Unsupported("cylinder mass of an atomic measure"));
        };
        if w.len() > *len {
            return Err(Error::param("word", "longer than the measure's cells"));
        }
        let start = words.partition_point(|c| c[..w.len()] < *w);
        let end = words.partition_point(|c| c[..w.len()] <= *w);
        Ok(weights[start..end].iter().sum())
    }

    /// Mass of atoms with coordinate in `[lo, hi)`.
    pub fn interval_mass(&self, lo: f64, hi: f64) -> Result<f64> {
        let Cells::Atoms { coords, weights } = &self.cells else {
            return Err(Error::Unsupported("interval mass of a cylinder measure"));
        };
        let a = coords.partition_point(|&t| t < lo);
        let b = coords.partition_point(|&t| t < hi);
        Ok(weights[a..b].iter().sum())
    }

    /// Representative point of every cell with its weight.
    pub fn atoms(&self, sys: &System, ext: usize) -> Result<Vec<(Point, f64)>> {
        match &self.cells {
            Cells::Cylinders { words, weights, .. } => words
                .iter()
                .zip(weights)
                .map(|(w, &m)| Ok((Point::Word(self.chart.word(sys, w, ext)?), m)))
                .collect(),
            Cells::Atoms { coords, weights } => coords
                .iter()
                .zip(weights)
                .map(|(&t, &m)| Ok((self.chart.point(sys, t)?, m)))
                .collect(),
        }
    }

    /// Representative point of cell `i`.
    fn representative(&self, sys: &System, i: usize) -> Result<Point> {
        match &self.cells {
            Cells::Cylinders { words, .. } => Ok(Point::Word(self.chart.word(sys, &words[i], REP_EXT + 16)?)),
            Cells::Atoms { coords, .. } => self.chart.point(sys, coords[i]),
        }
    }
}

/// `f_* m` on the chart at `f(base)`: cells leaving `V^u_loc(f(base))` are
/// dropped, the rest keep their weights.
pub fn pushforward(sys: &System, m: &LeafMeasure) -> Result<LeafMeasure> {
    Ok(pushforward_indexed(sys, m)?.0)
}

/// [`pushforward`] plus the source cell of every image cell.
fn pushforward_indexed(sys: &System, m: &LeafMeasure) -> Result<(LeafMeasure, Vec<usize>)> {
    let (chart, cells, sources) = match &m.cells {
        Cells::Cylinders { len, words, weights } => {
            let Point::Word(b) = &m.chart.base else { return Err(Error::FamilyMismatch) };
            if *len < 2 {
                return Err(Error::param("order", "pushforward needs cylinders of length >= 2"));
            }
            let a = b.symbol(0)?;
            let mut past = m.chart.past()?.to_vec();
            past.push(a);
            let mut future: Vec<u8> = b.future()[1..].to_vec();
            let pad = REP_EXT.saturating_sub(future.len());
            crate::systems::least_continuation(sys, &mut future, Some(a), pad);
            let base = Point::Word(crate::systems::SymbolWord::from_parts(b.p, &past, &future)?);
            let chart = sys.leaf_chart(&base, m.chart.tau, m.chart.resolution)?;
            let mut w2 = Vec::new();
            let mut m2 = Vec::new();
            let mut src = Vec::new();
            for (i, (w, &x)) in words.iter().zip(weights).enumerate() {
                if w[0] == a {
                    w2.push(w[1..].to_vec());
                    m2.push(x);
                    src.push(i);
                }
            }
            (chart, Cells::Cylinders { len: len - 1, words: w2, weights: m2 }, src)
        }
        Cells::Atoms { coords, weights } => {
            let chart = sys.leaf_chart(&sys.apply(&m.chart.base, 1)?, m.chart.tau, m.chart.resolution)?;
            // image coordinates are only trusted well inside one turn of the leaf
            let reach = 1.5 * chart.tau / sys.expansion();
            let mut kept = Vec::with_capacity(coords.len());
            for (i, &t) in coords.iter().enumerate() {
                if t.abs() > reach {
                    continue;
                }
                let q = sys.apply(&m.chart.point(sys, t)?, 1)?;
                if !chart.on_leaf(sys, &q)? {
                    continue;
                }
                let s = chart.coordinate(&q)?;
                if s.abs() <= chart.tau {
                    kept.push((s, weights[i], i));
                }
            }
            kept.sort_by(|a, b| a.0.total_cmp(&b.0));
            let coords = kept.iter().map(|k| k.0).collect();
            let weights = kept.iter().map(|k| k.1).collect();
            (chart, Cells::Atoms { coords, weights }, kept.iter().map(|k| k.2).collect())
        }
    };
    if cells.is_empty() {
        return Err(Error::Empty("pushforward left the image chart"));
    }
    let total_mass = cells.weights().iter().sum();
    let order = m.order.saturating_sub(1).max(1);
    Ok((LeafMeasure { chart, order, cells, total_mass, ..m.clone() }, sources))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub max_defect: f64,
    /// Defect explained by discretization and distortion.
    pub bound: f64,
    pub sets: usize,
}

/// Relative rounding allowance added to the scaling bound.
const ROUNDOFF: f64 = 1e-12;

/// Bins of the middle half of a chart used as test sets for atomic
/// measures.
const BINS: usize = 16;

/// `m_{f(x)}(A)` against `∫_{f^{-1}A} e^{P̂ − φ} dm_x` over cylinders one
/// shorter than `m`'s cells (shifts) or bins of the image chart.
pub fn scaling_check(sys: &System, m: &LeafMeasure) -> Result<ScalingReport> {
    let (mut pushed, sources) = pushforward_indexed(sys, m)?;
    let native = build_with_source(sys, &m.potential, &pushed.chart, m.r, m.order, m.pressure, m.pressure_source)?;
    match &mut pushed.cells {
        Cells::Cylinders { weights, .. } | Cells::Atoms { weights, .. } => {
            for (w, &i) in weights.iter_mut().zip(&sources) {
                *w *= (m.pressure - m.potential.eval(sys, &m.representative(sys, i)?)?).exp();
            }
        }
    }
    let mut max_defect = 0.0f64;
    let mut sets = 0;
    let bound;
    match &pushed.cells {
        Cells::Cylinders { words, weights, .. } => {
            for (w, &x) in words.iter().zip(weights) {
                let y = native.cylinder_mass(w)?;
                max_defect = max_defect.max((y - x).abs() / y.max(f64::MIN_POSITIVE));
                sets += 1;
            }
            bound = (2.0 * distortion(sys, &m.potential)?).exp() - 1.0;
        }
        Cells::Atoms { .. } => {
            let half = 0.5 * pushed.chart.tau;
            let width = 2.0 * half / BINS as f64;
            let mut least = f64::INFINITY;
            for b in 0..BINS {
                let lo = -half + b as f64 * width;
                let y = native.interval_mass(lo, lo + width)?;
                let x = pushed.interval_mass(lo, lo + width)?;
                max_defect = max_defect.max((y - x).abs() / y.max(f64::MIN_POSITIVE));
                least = least.min(y.min(x));
                sets += 1;
            }
            let top = |c: &Cells| c.weights().iter().cloned().fold(0.0, f64::max);
            let boundary = 2.0 * (top(&native.cells) + top(&pushed.cells)) / least;
            bound = (2.0 * distortion(sys, &m.potential)?).exp() * (1.0 + boundary) - 1.0;
        }
    }
    Ok(ScalingReport { max_defect, bound: bound + ROUNDOFF, sets })
}

/// Closed-form `Q_u` (zero for constant and locally constant future-only
/// potentials on their native cells).
fn distortion(sys: &System, phi: &Potential) -> Result<f64> {
    if sys.is_shift() {
        let win = phi.shift_window(sys)?;
        // cells pin the symbols the window reads except those beyond them
        return Ok(if win.start >= 0 && win.depth == 1 { 0.0 } else { win.oscillation() });
    }
    Ok(bowen_distortion_constant(sys, phi, 0, 1, 0)?.q_u)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UGibbsRow {
    pub n: usize,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UGibbsReport {
    pub min: f64,
    pub max: f64,
    /// `max(max, 1/min)`.
    pub q1: f64,
    pub rows: Vec<UGibbsRow>,
    pub samples: usize,
    /// Largest to smallest per-order spread ratio across the `n` range.
    pub spread_growth: f64,
}

/// `m(B^u_k(x, r)) / e^{-kP̂ + S_k φ(x)}` at `samples` random cell
/// representatives for each `k` in `ns`.
pub fn u_gibbs_check(sys: &System, m: &LeafMeasure, samples: usize, ns: &[usize], seed: u64) -> Result<UGibbsReport> {
    if ns.is_empty() || samples == 0 {
        return Err(Error::param("ns", "need orders and samples"));
    }
    if ns.iter().any(|&k| k == 0 || k > m.order) {
        return Err(Error::param("ns", "orders must lie in 1..=measure order"));
    }
    let mut rng = seeded(seed);
    let cells = m.cells.len();
    let mut rows = Vec::with_capacity(ns.len());
    let mut drawn = 0;
    let picks: Vec<usize> = (0..samples).map(|_| rng.gen_range(0..cells)).collect();
    for &k in ns {
        let mut row = UGibbsRow { n: k, min: f64::INFINITY, max: 0.0 };
        for &i in &picks {
            let x = m.representative(sys, i)?;
            let mass = match &m.cells {
                Cells::Cylinders { words, .. } => {
                    m.cylinder_mass(&words[i][..k + shift_agreement(m.r) - 1])?
                }
                Cells::Atoms { coords, .. } => {
                    let hw = ball_half_width(sys, &m.chart, m.r, k)?;
                    let t = coords[i];
                    if (t - hw).abs() > m.chart.tau || (t + hw).abs() > m.chart.tau {
                        continue;
                    }
                    m.interval_mass(t - hw, t + hw)?
                }
            };
            let ratio = mass / (-(k as f64) * m.pressure + sys.birkhoff_sum(&m.potential, &x, k)?).exp();
            row.min = row.min.min(ratio);
            row.max = row.max.max(ratio);
            drawn += 1;
        }
        rows.push(row);
    }
    let rows: Vec<UGibbsRow> = rows.into_iter().filter(|r| r.max > 0.0).collect();
    if rows.is_empty() {
        return Err(Error::Empty("no u-Bowen ball fits inside the chart"));
    }
    let min = rows.iter().map(|r| r.min).fold(f64::INFINITY, f64::min);
    let max = rows.iter().map(|r| r.max).fold(0.0, f64::max);
    let spreads: Vec<f64> = rows.iter().map(|r| r.max / r.min).collect();
    let spread_growth = spreads.iter().cloned().fold(0.0, f64::max) / spreads.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(UGibbsReport { min, max, q1: max.max(1.0 / min), rows, samples: drawn, spread_growth })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassRow {
    pub order: usize,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassBoundsReport {
    pub min: f64,
    pub max: f64,
    /// `max(max, 1/min)`: the empirical `K`.
    pub k_hat: f64,
    pub rows: Vec<MassRow>,
    /// `(max/min at the top order) / (max/min at the middle order) − 1`.
    pub window_growth: f64,
    pub bounded: bool,
}

/// Total-mass window across base points and orders.
pub fn mass_bounds_check(measures: &[LeafMeasure]) -> Result<MassBoundsReport> {
    let mut orders: Vec<usize> = measures.iter().map(|m| m.order).collect();
    orders.sort_unstable();
    orders.dedup();
    let mut bases: Vec<&Point> = Vec::new();
    for m in measures {
        if !bases.contains(&&m.chart.base) {
            bases.push(&m.chart.base);
        }
    }
    if orders.len() < 2 || bases.len() < 2 {
        return Err(Error::param("measures", "need at least two orders and two base points"));
    }
    let rows: Vec<MassRow> = orders
        .iter()
        .map(|&o| {
            let masses = measures.iter().filter(|m| m.order == o).map(|m| m.total_mass);
            let (min, max) = masses.fold((f64::INFINITY, 0.0f64), |(a, b), x| (a.min(x), b.max(x)));
            MassRow { order: o, min, max }
        })
        .collect();
    let min = rows.iter().map(|r| r.min).fold(f64::INFINITY, f64::min);
    let max = rows.iter().map(|r| r.max).fold(0.0, f64::max);
    let ratio = |r: &MassRow| r.max / r.min;
    let window_growth = ratio(&rows[rows.len() - 1]) / ratio(&rows[rows.len() / 2]) - 1.0;
    Ok(MassBoundsReport { min, max, k_hat: max.max(1.0 / min), rows, window_growth, bounded: window_growth < 0.1 })
}

/// Which slice of the source leaf the holonomy transports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Rectangle {
    /// Points whose symbols `0..word.len()` are `word`; the s-direction is
    /// every past.
    Cylinder { word: Vec<u8> },
    /// Source coordinates in `[-u_half, u_half]`.
    Slice { u_half: f64 },
}

/// `π(q) = [q, z]`: slide along stable leaves from the source leaf to the
/// target leaf.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Holonomy {
    pub source: LeafChart,
    pub target: LeafChart,
    pub rectangle: Rectangle,
}

impl Holonomy {
    pub fn new(sys: &System, source: LeafChart, target: LeafChart, rectangle: Rectangle) -> Result<Self> {
        if source.is_cylinder_tree() != sys.is_shift() || target.is_cylinder_tree() != sys.is_shift() {
            return Err(Error::FamilyMismatch);
        }
        match (&rectangle, sys.is_shift()) {
            (Rectangle::Cylinder { word }, true) => {
                let ok = |c: &LeafChart| -> Result<bool> {
                    let last = c.past()?.last().copied();
                    Ok(!word.is_empty()
                        && sys.is_admissible(word)
                        && last.is_none_or(|a| sys.allowed(a, word[0])))
                };
                if !ok(&source)? || !ok(&target)? {
                    return Err(Error::param("rectangle", "cylinder not admissible below both pasts"));
                }
            }
            (Rectangle::Slice { u_half }, false) if *u_half > 0.0 && *u_half <= source.tau => {}
            _ => return Err(Error::param("rectangle", "rectangle does not match the system")),
        }
        Ok(Holonomy { source, target, rectangle })
    }

    pub fn apply(&self, sys: &System, q: &Point) -> Result<Point> {
        sys.smale_bracket(q, &self.target.base)
    }
}

/// `π_* m`: the source slice of `m` moved onto the target chart.
pub fn holonomy_apply(sys: &System, h: &Holonomy, m: &LeafMeasure) -> Result<LeafMeasure> {
    if m.chart != h.source {
        return Err(Error::param("measure", "measure does not live on the holonomy source"));
    }
    let cells = match (&m.cells, &h.rectangle) {
        (Cells::Cylinders { len, words, weights }, Rectangle::Cylinder { word }) => {
            let k = word.len().min(*len);
            let (w2, m2) = words
                .iter()
                .zip(weights)
                .filter(|(w, _)| w[..k] == word[..k])
                .map(|(w, &x)| (w.clone(), x))
                .unzip();
            Cells::Cylinders { len: *len, words: w2, weights: m2 }
        }
        (Cells::Atoms { coords, weights }, Rectangle::Slice { u_half }) => {
            let mut pairs = Vec::new();
            for (&t, &x) in coords.iter().zip(weights) {
                if t.abs() > *u_half {
                    continue;
                }
                let q = h.apply(sys, &m.chart.point(sys, t)?)?;
                pairs.push((h.target.coordinate(&q)?, x));
            }
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            let (c, w) = pairs.into_iter().unzip();
            Cells::Atoms { coords: c, weights: w }
        }
        _ => return Err(Error::param("rectangle", "rectangle does not match the measure")),
    };
    if cells.is_empty() {
        return Err(Error::Empty("rectangle slice holds no cells"));
    }
    let total_mass = cells.weights().iter().sum();
    Ok(LeafMeasure { chart: h.target.clone(), cells, total_mass, ..m.clone() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolonomyReport {
    pub min: f64,
    pub max: f64,
    /// `max(max, 1/min)`: the empirical `Q_2`.
    pub q2: f64,
    pub cells: usize,
    /// Closed-form `[lower, upper]` window for the ratio, where one exists.
    pub window: Option<[f64; 2]>,
}

/// `e^{±2 var_1(φ)}`, where `var_1` is the largest change of `φ` between
/// points that agree at coordinate 0.
pub fn holonomy_window(sys: &System, phi: &Potential) -> Result<[f64; 2]> {
    let win = phi.shift_window(sys)?;
    let zero = -win.start;
    let var1 = if zero < 0 || zero >= win.depth as i64 {
        win.oscillation()
    } else {
        let stride = win.p.pow((win.depth as i64 - 1 - zero) as u32);
        let mut v = 0.0f64;
        for s in 0..win.p {
            let vals = win.values.iter().enumerate().filter(|(i, _)| (i / stride) % win.p == s).map(|(_, &x)| x);
            let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
            v = v.max(hi - lo);
        }
        v
    };
    Ok([(-2.0 * var1).exp(), (2.0 * var1).exp()])
}

/// Density of `π^* m_z` against `m_y`, cell by cell on shifts (at most
/// `samples` cells, drawn with `seed`), and on bins of the transported
/// slice otherwise.
pub fn holonomy_equivalence_check(
    sys: &System,
    h: &Holonomy,
    m_y: &LeafMeasure,
    m_z: &LeafMeasure,
    samples: usize,
    seed: u64,
) -> Result<HolonomyReport> {
    if m_z.chart != h.target {
        return Err(Error::param("m_z", "measure does not live on the holonomy target"));
    }
    let moved = holonomy_apply(sys, h, m_y)?;
    let mut ratios = Vec::new();
    match &moved.cells {
        Cells::Cylinders { words, weights, .. } => {
            let mut idx: Vec<usize> = (0..words.len()).collect();
            if idx.len() > samples {
                let mut rng = seeded(seed);
                for i in 0..samples {
                    let j = rng.gen_range(i..idx.len());
                    idx.swap(i, j);
                }
                idx.truncate(samples);
            }
            for i in idx {
                ratios.push(m_z.cylinder_mass(&words[i])? / weights[i]);
            }
        }
        Cells::Atoms { coords, .. } => {
            let (lo, hi) = (coords[0], coords[coords.len() - 1]);
            let width = (hi - lo) / BINS as f64;
            for b in 1..BINS - 1 {
                let a = lo + b as f64 * width;
                let x = moved.interval_mass(a, a + width)?;
                let y = m_z.interval_mass(a, a + width)?;
                if x > 0.0 {
                    ratios.push(y / x);
                }
            }
        }
    }
    if ratios.is_empty() {
        return Err(Error::Empty("no cells to compare"));
    }
    let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = ratios.iter().cloned().fold(0.0, f64::max);
    let window = if sys.is_shift() { Some(holonomy_window(sys, &m_y.potential)?) } else { None };
    Ok(HolonomyReport { min, max, q2: max.max(1.0 / min), cells: ratios.len(), window })
}

/// Cross-`r` mass ratios `m^{r_i}(X) / m^{r_0}(X)` at a fixed order.
pub fn radius_mass_ratios(
    sys: &System,
    phi: &Potential,
    chart: &LeafChart,
    rs: &[f64],
    n: usize,
) -> Result<Vec<(f64, f64)>> {
    let (p, source) = reference_pressure(sys, phi)?;
    let mut out = Vec::with_capacity(rs.len());
    let mut first = None;
    for &r in rs {
        let m = build_with_source(sys, phi, chart, r, n, p, source)?;
        let base = *first.get_or_insert(m.total_mass);
        out.push((r, m.total_mass / base));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use alloc::vec;
    use super::*;
    use crate::caratheodory::{leaf_structure, outer_measure, Target};
    use crate::systems::{SymbolWord, LAMBDA_U};

    fn word(past: &[u8], future: &[u8]) -> Point {
        Point::Word(SymbolWord::from_parts(2, past, future).unwrap())
    }

    fn shift_chart(sys: &System, past: &[u8], future: &[u8]) -> LeafChart {
        sys.leaf_chart(&word(past, future), sys.tau, 1).unwrap()
    }

    #[test]
    fn bernoulli_cylinder_weights() {
        let sys = System::full_shift(2).unwrap();
        let phi = Potential::bernoulli(&[0.3, 0.7]);
        let chart = shift_chart(&sys, &[1, 0], &[0, 1]);
        let m = build_reference_measure(&sys, &phi, &chart, 0.7, 2, Some(0.0)).unwrap();
        assert!((m.cylinder_mass(&[0, 1]).unwrap() - 0.21).abs() < 1e-15);
        assert!((m.total_mass - 1.0).abs() < 1e-14);
        assert!(build_reference_measure(&sys, &phi, &chart, 0.7, 2, None).is_err());
        assert!(build_reference_measure(&sys, &phi, &chart, 1.0, 2, Some(0.0)).is_err());
    }

    #[test]
    fn uniform_weights() {
        let sys = System::full_shift(2).unwrap();
        let chart = shift_chart(&sys, &[0], &[1]);
        let m = build_with_reference_pressure(&sys, &Potential::zero(), &chart, 0.7, 5).unwrap();
        assert_eq!(m.pressure_source, PressureSource::Exact);
        assert!(m.cells.weights().iter().all(|&w| (w - 1.0 / 32.0).abs() < 1e-15));
        assert!((m.total_mass - 1.0).abs() < 1e-14);
    }

    #[test]
    fn matches_transfer_operator_gibbs_weights() {
        let sys = System::full_shift(2).unwrap();
        let phi = Potential::bernoulli(&[0.3, 0.7]);
        let g = sft_exact_pressure(&sys, &phi).unwrap();
        let chart = shift_chart(&sys, &[0, 1, 1], &[1]);
        let m = build_with_reference_pressure(&sys, &phi, &chart, 0.7, 10).unwrap();
        let Cells::Cylinders { words, weights, .. } = &m.cells else { panic!() };
        for (w, &x) in words.iter().zip(weights) {
            assert!((x - g.cylinder_mass(w)).abs() < 1e-12);
        }
        let s = scaling_check(&sys, &m).unwrap();
        assert!(s.max_defect < 1e-12, "{s:?}");
        let u = u_gibbs_check(&sys, &m, 200, &[1, 3, 6, 10], 4).unwrap();
        assert!((u.q1 - 1.0).abs() < 1e-12, "{u:?}");
    }

    #[test]
    fn uniform_scaling_doubles_weights() {
        let sys = System::full_shift(2).unwrap();
        let chart = shift_chart(&sys, &[1], &[0]);
        let m = build_with_reference_pressure(&sys, &Potential::zero(), &chart, 0.7, 6).unwrap();
        let f = pushforward(&sys, &m).unwrap();
        assert_eq!(f.cells.len(), m.cells.len() / 2);
        assert_eq!(scaling_check(&sys, &m).unwrap().max_defect, 0.0);
    }

    #[test]
    fn cat_geometric_ball_weights() {
        let sys = System::cat_map();
        let chart = sys.leaf_chart(&Point::torus(0.2, 0.3), sys.tau, 1).unwrap();
        let r = 0.05;
        let n = 8;
        let m = build_with_reference_pressure(&sys, &Potential::geometric(1.0), &chart, r, n).unwrap();
        assert_eq!(m.pressure_source, PressureSource::Analytic);
        assert!(m.pressure.abs() < 1e-15);
        let w = LAMBDA_U.powi(-(n as i32));
        assert!(m.cells.weights().iter().all(|&x| (x / w - 1.0).abs() < 1e-12));
        // balls of length 2r/λ^{n-1} tile the chart of length 2τ
        let count = (2.0 * sys.tau * LAMBDA_U.powi(n as i32 - 1) / (2.0 * r)).ceil();
        assert!((m.total_mass - count * w).abs() < 1e-12);
        let s = scaling_check(&sys, &m).unwrap();
        assert!(s.max_defect <= s.bound, "{s:?}");
        let u = u_gibbs_check(&sys, &m, 100, &[2, 4, 6], 1).unwrap();
        assert!(u.max / u.min < 1.3, "{u:?}");
    }

    #[test]
    fn horseshoe_pieces() {
        let sys = System::horseshoe(0.2, 3.0).unwrap();
        let base = sys.horseshoe_coded(&[0; 40], &[0; 40]).unwrap();
        let chart = sys.leaf_chart(&base, sys.tau, 1).unwrap();
        let m = build_with_reference_pressure(&sys, &Potential::geometric(2f64.ln() / 3f64.ln()), &chart, 0.05, 6).unwrap();
        assert!(m.pressure.abs() < 1e-12);
        let u = u_gibbs_check(&sys, &m, 100, &[2, 4], 2).unwrap();
        assert!(u.q1 < 4.0, "{u:?}");
    }

    #[test]
    fn future_only_holonomy_is_trivial() {
        let sys = System::full_shift(2).unwrap();
        let phi = Potential::bernoulli(&[0.3, 0.7]);
        let (cy, cz) = (shift_chart(&sys, &[0, 0, 1], &[0]), shift_chart(&sys, &[1, 1, 0], &[0]));
        let my = build_with_reference_pressure(&sys, &phi, &cy, 0.7, 8).unwrap();
        let mz = build_with_reference_pressure(&sys, &phi, &cz, 0.7, 8).unwrap();
        let h = Holonomy::new(&sys, cy, cz, Rectangle::Cylinder { word: vec![0] }).unwrap();
        let rep = holonomy_equivalence_check(&sys, &h, &my, &mz, 1000, 3).unwrap();
        assert!((rep.q2 - 1.0).abs() < 1e-12, "{rep:?}");
    }

    #[test]
    fn two_sided_holonomy_stays_in_window() {
        let sys = System::full_shift(2).unwrap();
        let phi = Potential::tabulated(-1, 2, vec![0.1, -0.4, 0.3, 0.2]);
        let (cy, cz) = (shift_chart(&sys, &[1, 0], &[1]), shift_chart(&sys, &[0, 1], &[1]));
        let my = build_with_reference_pressure(&sys, &phi, &cy, 0.7, 12).unwrap();
        let mz = build_with_reference_pressure(&sys, &phi, &cz, 0.7, 12).unwrap();
        let h = Holonomy::new(&sys, cy, cz, Rectangle::Cylinder { word: vec![1] }).unwrap();
        let rep = holonomy_equivalence_check(&sys, &h, &my, &mz, 1000, 5).unwrap();
        let [lo, hi] = rep.window.unwrap();
        assert_eq!(rep.cells, 1000);
        assert!(rep.min >= lo && rep.max <= hi, "{rep:?}");
        assert!(rep.q2 > 1.0);
    }

    #[test]
    fn mass_windows() {
        let sys = System::full_shift(2).unwrap();
        let phi = Potential::bernoulli(&[0.3, 0.7]);
        let mut ms = Vec::new();
        for past in [[0u8, 1], [1, 1]] {
            for n in [4, 8] {
                let c = shift_chart(&sys, &past, &[0]);
                ms.push(build_with_reference_pressure(&sys, &phi, &c, 0.7, n).unwrap());
            }
        }
        let rep = mass_bounds_check(&ms).unwrap();
        assert!((rep.k_hat - 1.0).abs() < 1e-12 && rep.bounded);
        assert!(mass_bounds_check(&ms[..2]).is_err());
    }

    #[test]
    fn total_mass_bounds_the_cover_value() {
        let sys = System::full_shift(2).unwrap();
        for phi in [Potential::bernoulli(&[0.3, 0.7]), Potential::locally_constant(2, vec![0.2, -0.1, 0.4, 0.0])] {
            let chart = shift_chart(&sys, &[1, 0], &[0]);
            let m = build_with_reference_pressure(&sys, &phi, &chart, 0.7, 8).unwrap();
            let c = leaf_structure(&sys, &phi, 0.7, &chart).unwrap();
            let e = outer_measure(&c, &Target::Whole, m.pressure, 8).unwrap();
            let q = distortion(&sys, &phi).unwrap();
            assert!(m.total_mass >= e.lower * (1.0 - 1e-12), "{} {}", m.total_mass, e.lower);
            assert!(m.total_mass <= e.upper * (2.0 * q).exp() * (1.0 + 1e-12));
        }
    }
}
