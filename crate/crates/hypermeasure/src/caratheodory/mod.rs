//! Carathéodory structures: weighted covers `Σ ξ(s) η(s)^α`, their outer
//! measures and critical values.
//!
//! Exact values come from a dynamic program over cylinder trees (shifts,
//! horseshoe leaves with constant weight, self-similar Hausdorff sets).
//! Interval leaves are covered by an interval DP over a finite window of
//! orders, which only bounds the infimum from above; the paired lower bound
//! is mass distribution against leaf length.

mod arcs;
mod tree;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::pressure::shift_agreement;
use crate::rng::{seeded, uniform, SeededRng};
use crate::systems::{ChartGeometry, Family, LeafChart, Point, Potential, PotentialKind, SymbolWord, System};
use crate::{Error, Result};

use arcs::ArcProblem;
use tree::ShiftTree;

/// Default order window `[N, N + Δ]`.
pub const DELTA: usize = 6;
pub const MAX_BISECTIONS: usize = 40;

/// Ambient sets for the Hausdorff structure `ξ = 1, η = ψ = r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Space {
    Interval { lo: f64, hi: f64 },
    /// `children` equally spaced copies of `[lo, hi]` scaled by `ratio`,
    /// iterated; the outer two touch the ends.
    SelfSimilar { lo: f64, hi: f64, ratio: f64, children: u32 },
    Point { x: f64 },
    Torus,
}

impl Space {
    pub fn middle_thirds() -> Self {
        Space::SelfSimilar { lo: 0.0, hi: 1.0, ratio: 1.0 / 3.0, children: 2 }
    }

    /// The set `V^u_loc(x) ∩ Λ` in chart coordinates.
    pub fn of_leaf(sys: &System, chart: &LeafChart) -> Result<Self> {
        match &sys.family {
            Family::CatMap | Family::Solenoid => Ok(Space::Interval { lo: -chart.tau, hi: chart.tau }),
            // the horizontal slice of Λ is the whole leaf Cantor set
            Family::Horseshoe { beta, .. } => Ok(Space::SelfSimilar { lo: 0.0, hi: 1.0, ratio: 1.0 / beta, children: 2 }),
            Family::FullShift { p } => Ok(Space::SelfSimilar { lo: 0.0, hi: 1.0, ratio: 0.5, children: *p as u32 }),
            Family::Sft { .. } => Err(Error::Unsupported("Hausdorff leaf set of a general SFT")),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Space::Interval { lo, hi } if !(lo < hi) => Err(Error::param("space", "need lo < hi")),
            Space::SelfSimilar { lo, hi, ratio, children } => {
                if !(lo < hi) || children == 0 || !(ratio > 0.0 && ratio < 1.0) || children as f64 * ratio > 1.0 + 1e-12 {
                    return Err(Error::param("space", "need lo < hi, 0 < ratio < 1 and children · ratio <= 1"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StructureKind {
    Hausdorff { space: Space },
    /// `ξ = e^{S_n φ(x)}`, `η = e^{-n}`, `ψ = 1/n`, `U = B_n(x, r)`.
    Pressure { sys: System, phi: Potential, r: f64 },
    /// As `Pressure` with `U` the u-Bowen ball inside the chart's leaf.
    Leaf { sys: System, phi: Potential, r: f64, chart: LeafChart },
    /// `ξ = 1`, `η = Π det Df|E^u` to the power −1, on the leaf.
    Reparametrized { sys: System, r: f64, chart: LeafChart },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CStructure {
    pub kind: StructureKind,
    /// Replaces `η` by a constant; only for building counterexamples.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_constant: Option<f64>,
}

/// An element `s` of the index set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Index {
    Ball { center: Vec<f64>, radius: f64 },
    Orbit { center: Point, n: usize },
}

/// A point of `X` as the structure sees it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Probe {
    Coord(Vec<f64>),
    Point(Point),
}

pub fn hausdorff_structure(space: Space) -> Result<CStructure> {
    space.validate()?;
    Ok(CStructure { kind: StructureKind::Hausdorff { space }, eta_constant: None })
}

pub fn pressure_structure(sys: &System, phi: &Potential, r: f64) -> Result<CStructure> {
    phi.validate(sys)?;
    if !(r > 0.0 && r < sys.eps_bracket.max(1.0)) {
        return Err(Error::param("r", "must be positive and below the bracket scale"));
    }
    Ok(CStructure { kind: StructureKind::Pressure { sys: sys.clone(), phi: phi.clone(), r }, eta_constant: None })
}

fn check_leaf_r(sys: &System, r: f64) -> Result<()> {
    if !(r > 0.0 && r < sys.tau / 3.0) {
        return Err(Error::param("r", format!("leaf structures need 0 < r < tau/3 = {}", sys.tau / 3.0)));
    }
    Ok(())
}

pub fn leaf_structure(sys: &System, phi: &Potential, r: f64, chart: &LeafChart) -> Result<CStructure> {
    phi.validate(sys)?;
    check_leaf_r(sys, r)?;
    Ok(CStructure {
        kind: StructureKind::Leaf { sys: sys.clone(), phi: phi.clone(), r, chart: chart.clone() },
        eta_constant: None,
    })
}

pub fn reparametrized_structure(sys: &System, r: f64, chart: &LeafChart) -> Result<CStructure> {
    check_leaf_r(sys, r)?;
    Ok(CStructure { kind: StructureKind::Reparametrized { sys: sys.clone(), r, chart: chart.clone() }, eta_constant: None })
}

impl CStructure {
    pub fn with_constant_eta(mut self, eta: f64) -> Self {
        self.eta_constant = Some(eta);
        self
    }

    /// `-ln η` per order.
    fn kappa(&self) -> f64 {
        match &self.kind {
            StructureKind::Reparametrized { sys, .. } => sys.expansion().ln(),
            _ => 1.0,
        }
    }

    pub fn xi(&self, s: &Index) -> Result<f64> {
        match (&self.kind, s) {
            (StructureKind::Hausdorff { .. }, Index::Ball { .. }) => Ok(1.0),
            (StructureKind::Reparametrized { .. }, Index::Orbit { .. }) => Ok(1.0),
            (StructureKind::Pressure { sys, phi, .. } | StructureKind::Leaf { sys, phi, .. }, Index::Orbit { center, n }) => {
                Ok(sys.birkhoff_sum(phi, center, *n)?.exp())
            }
            _ => Err(Error::FamilyMismatch),
        }
    }

    pub fn eta(&self, s: &Index) -> f64 {
        if let Some(c) = self.eta_constant {
            return c;
        }
        match s {
            Index::Ball { radius, .. } => *radius,
            Index::Orbit { n, .. } => (-(*n as f64) * self.kappa()).exp(),
        }
    }

    pub fn psi(&self, s: &Index) -> f64 {
        match s {
            Index::Ball { radius, .. } => *radius,
            Index::Orbit { n, .. } => 1.0 / *n as f64,
        }
    }

    /// `q ∈ U_s` (closed balls for the Hausdorff structure).
    pub fn contains(&self, s: &Index, q: &Probe) -> Result<bool> {
        match (&self.kind, s, q) {
            (StructureKind::Hausdorff { space }, Index::Ball { center, radius }, Probe::Coord(x)) => {
                let d = match space {
                    Space::Torus => {
                        let dx = crate::systems::circle_delta(x[0], center[0]);
                        let dy = crate::systems::circle_delta(x[1], center[1]);
                        (dx * dx + dy * dy).sqrt()
                    }
                    _ => (x[0] - center[0]).abs(),
                };
                Ok(d <= *radius)
            }
            (StructureKind::Pressure { sys, r, .. }, Index::Orbit { center, n }, Probe::Point(p)) => {
                sys.bowen_ball_contains(center, *r, *n, p)
            }
            (
                StructureKind::Leaf { sys, r, chart, .. } | StructureKind::Reparametrized { sys, r, chart },
                Index::Orbit { center, n },
                Probe::Point(p),
            ) => sys.u_bowen_ball_contains(chart, center, *r, *n, p),
            _ => Err(Error::FamilyMismatch),
        }
    }

    /// Refinement scale of level `level`: `ε` for balls, `1/N` for orders.
    pub fn scale(&self, level: usize) -> f64 {
        match &self.kind {
            StructureKind::Hausdorff { space } => similar(space, 1.0).map_or(0.0, |s| s.radius(level)),
            _ => 1.0 / level.max(1) as f64,
        }
    }

    /// A random point of `X`; words carry `len` future symbols.
    pub fn random_probe(&self, rng: &mut SeededRng, len: usize) -> Result<Probe> {
        match &self.kind {
            StructureKind::Hausdorff { space } => Ok(Probe::Coord(match *space {
                Space::Interval { lo, hi } => vec![uniform(rng, lo, hi)],
                Space::Point { x } => vec![x],
                Space::Torus => vec![uniform(rng, 0.0, 1.0), uniform(rng, 0.0, 1.0)],
                Space::SelfSimilar { lo, hi, ratio, children } => {
                    let g = gap(ratio, children);
                    let (mut a, mut w) = (lo, hi - lo);
                    for _ in 0..60 {
                        let c = rng.gen_range(0..children) as f64;
                        a += c * w * (ratio + g);
                        w *= ratio;
                    }
                    vec![a]
                }
            })),
            StructureKind::Pressure { sys, .. } => Ok(Probe::Point(random_point(sys, rng, len)?)),
            StructureKind::Leaf { sys, chart, .. } | StructureKind::Reparametrized { sys, chart, .. } => {
                Ok(Probe::Point(random_leaf_point(sys, chart, rng, len)?))
            }
        }
    }

    /// An index of level `level` whose set contains `q`. Dynamical indices
    /// are centered at `q` itself (the index set is all of `X × N`).
    pub fn covering_index(&self, level: usize, q: &Probe) -> Result<Index> {
        match (&self.kind, q) {
            (StructureKind::Hausdorff { space }, Probe::Coord(x)) => {
                let s = similar(space, 1.0)?;
                let radius = s.radius(level);
                let center = match *space {
                    Space::Point { x: p } => vec![p],
                    Space::Torus => {
                        let side = 0.5f64.powi(level as i32);
                        x.iter().map(|v| ((v / side).floor() + 0.5) * side).collect()
                    }
                    Space::Interval { lo, .. } | Space::SelfSimilar { lo, .. } => {
                        let (a, w) = s.piece_of(lo, x[0], level);
                        vec![a + 0.5 * w]
                    }
                };
                Ok(Index::Ball { center, radius })
            }
            (_, Probe::Point(p)) => Ok(Index::Orbit { center: p.clone(), n: level.max(1) }),
            _ => Err(Error::FamilyMismatch),
        }
    }
}

fn random_point(sys: &System, rng: &mut SeededRng, len: usize) -> Result<Point> {
    match &sys.family {
        Family::CatMap => Ok(Point::torus(uniform(rng, 0.0, 1.0), uniform(rng, 0.0, 1.0))),
        Family::Solenoid => sys.attractor_point(uniform(rng, 0.0, core::f64::consts::TAU), rng.gen()),
        Family::Horseshoe { .. } => {
            let f: Vec<u8> = (0..64).map(|_| rng.gen_range(0..2)).collect();
            let b: Vec<u8> = (0..64).map(|_| rng.gen_range(0..2)).collect();
            sys.horseshoe_coded(&f, &b)
        }
        Family::FullShift { p } | Family::Sft { p, .. } => {
            let w = random_word(sys, rng, Vec::new(), 2 * len);
            Ok(Point::Word(SymbolWord::new(*p, w, len)?))
        }
    }
}

fn random_word(sys: &System, rng: &mut SeededRng, mut w: Vec<u8>, len: usize) -> Vec<u8> {
    let p = sys.alphabet().unwrap_or(2);
    while w.len() < len {
        let opts: Vec<u8> = (0..p).filter(|&s| w.last().is_none_or(|&a| sys.allowed(a, s))).collect();
        w.push(opts[rng.gen_range(0..opts.len())]);
    }
    w
}

fn random_leaf_point(sys: &System, chart: &LeafChart, rng: &mut SeededRng, len: usize) -> Result<Point> {
    match &chart.geometry {
        ChartGeometry::Cylinders { p, past } => {
            let mut w = past.clone();
            let k = w.len();
            w = random_word(sys, rng, w, k + len);
            Ok(Point::Word(SymbolWord::new(*p, w, k)?))
        }
        ChartGeometry::Segment { origin, .. } if matches!(sys.family, Family::Horseshoe { .. }) => {
            let Family::Horseshoe { beta, .. } = sys.family else { unreachable!() };
            let (mut a, mut w) = (0.0, 1.0);
            for _ in 0..60 {
                a += rng.gen_range(0..2) as f64 * w * (1.0 - 1.0 / beta);
                w /= beta;
            }
            Ok(Point::horseshoe(a, origin[1]))
        }
        _ => chart.point(sys, uniform(rng, -chart.tau, chart.tau)),
    }
}

// ---------------------------------------------------------------------------
// validation

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// `A1`, `A2` or `A3`.
    pub condition: String,
    pub level: usize,
    pub delta: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub violations: Vec<Violation>,
    /// For each probed `δ`, the largest probed `ε` with `ψ ≤ ε ⇒ η ≤ δ`.
    pub a2_witnesses: Vec<(f64, Option<f64>)>,
    pub levels: usize,
    pub samples_per_level: usize,
}

pub const VALIDATION_LEVELS: usize = 24;

/// Probe A1–A3 at levels `1..=levels` with random indices and points.
pub fn validate_cstructure(c: &CStructure, deltas: &[f64], levels: usize, seed: u64) -> Result<ValidationReport> {
    if deltas.is_empty() || levels == 0 {
        return Err(Error::param("deltas", "probe schedule must be nonempty"));
    }
    let per_level = 4;
    let mut rng = seeded(seed);
    let mut violations = Vec::new();
    let mut sampled: Vec<(f64, f64)> = Vec::new();
    for level in 1..=levels {
        for _ in 0..per_level {
            let q = c.random_probe(&mut rng, levels + 8)?;
            let s = c.covering_index(level, &q)?;
            // A1: U_s contains q, so it is nonempty
            let inside = c.contains(&s, &q)?;
            let (eta, psi) = (c.eta(&s), c.psi(&s));
            if inside && !(eta > 0.0 && psi > 0.0) {
                violations.push(Violation {
                    condition: "A1".into(),
                    level,
                    delta: None,
                    detail: format!("nonempty U_s with eta = {eta}, psi = {psi}"),
                });
            }
            // A3: every probed point is covered by an index of scale ≤ ε
            if !inside || psi > c.scale(level) * (1.0 + 1e-12) {
                violations.push(Violation {
                    condition: "A3".into(),
                    level,
                    delta: None,
                    detail: format!("point {q:?} not covered at scale {}", c.scale(level)),
                });
            }
            sampled.push((psi, eta));
        }
    }
    let mut psis: Vec<f64> = sampled.iter().map(|s| s.0).collect();
    psis.sort_by(|a, b| b.total_cmp(a));
    psis.dedup();
    let mut witnesses = Vec::new();
    for &delta in deltas {
        let eps = psis
            .iter()
            .copied()
            .find(|&eps| sampled.iter().filter(|s| s.0 <= eps).all(|s| s.1 <= delta));
        if eps.is_none() {
            violations.push(Violation {
                condition: "A2".into(),
                level: levels,
                delta: Some(delta),
                detail: format!("no probed eps forces eta <= {delta}"),
            });
        }
        witnesses.push((delta, eps));
    }
    Ok(ValidationReport {
        passed: violations.is_empty(),
        violations,
        a2_witnesses: witnesses,
        levels,
        samples_per_level: per_level,
    })
}

// ---------------------------------------------------------------------------
// targets and estimates

/// A target set `Z` at the discretization of the structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Target {
    Empty,
    /// All of `X` (the whole local leaf for leaf structures).
    Whole,
    /// Union of cylinders given by their symbols from position 0 (leaf
    /// futures, self-similar addresses).
    Cylinders { words: Vec<Vec<u8>> },
    /// Union of chart arcs `[a, b]`.
    Arcs { arcs: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoverElement {
    Cylinder { word: Vec<u8>, n: usize },
    Ball { center: Vec<f64>, radius: f64 },
    Arc { center: f64, n: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverCandidate {
    /// The cover, when it has at most 4096 elements.
    pub elements: Vec<CoverElement>,
    pub size: f64,
    /// `ln Σ ξ(s_i) η(s_i)^α`.
    pub log_weight: f64,
    pub max_psi: f64,
    pub certified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuterMeasureEstimate {
    pub alpha: f64,
    pub upper: f64,
    pub lower: f64,
    pub log_upper: f64,
    pub log_lower: f64,
    pub level: usize,
    pub delta: usize,
    /// The upper bound is the exact infimum over the enumerator.
    pub exact: bool,
    pub cover: CoverCandidate,
}

/// A self-similar cover tree: `children` nodes per node, diameters scaled by
/// `ratio`, covered by balls of radius `radius0 · ratio^k`.
struct Similar {
    lo: f64,
    children: f64,
    ratio: f64,
    radius0: f64,
    gap: f64,
    span: f64,
    dim: f64,
}

fn gap(ratio: f64, children: u32) -> f64 {
    if children > 1 {
        ((1.0 - children as f64 * ratio) / (children as f64 - 1.0)).max(0.0)
    } else {
        0.0
    }
}

fn similar(space: &Space, scale: f64) -> Result<Similar> {
    Ok(match *space {
        Space::Interval { lo, hi } => {
            Similar { lo, children: 2.0, ratio: 0.5, radius0: scale * (hi - lo) / 2.0, gap: 0.0, span: scale * (hi - lo), dim: 1.0 }
        }
        Space::SelfSimilar { lo, hi, ratio, children } => Similar {
            lo,
            children: children as f64,
            ratio,
            radius0: scale * (hi - lo) / 2.0,
            gap: gap(ratio, children),
            span: scale * (hi - lo),
            dim: (children as f64).ln() / (1.0 / ratio).ln(),
        },
        Space::Point { x } => Similar { lo: x - 0.5, children: 1.0, ratio: 0.5, radius0: 0.5, gap: 0.0, span: 1.0, dim: 0.0 },
        Space::Torus => Similar {
            lo: 0.0,
            children: 4.0,
            ratio: 0.5,
            radius0: core::f64::consts::FRAC_1_SQRT_2,
            gap: 0.0,
            span: 1.0,
            dim: 2.0,
        },
    })
}

impl Similar {
    fn radius(&self, k: usize) -> f64 {
        self.radius0 * self.ratio.powi(k as i32)
    }

    fn piece_of(&self, lo: f64, x: f64, k: usize) -> (f64, f64) {
        let (mut a, mut w) = (lo, self.span);
        let b = self.children as usize;
        for _ in 0..k {
            let step = w * (self.ratio + self.gap);
            let j = (((x - a) / step).floor().max(0.0) as usize).min(b - 1);
            a += j as f64 * step;
            w *= self.ratio;
        }
        (a, w)
    }

    /// `ln` of the optimal cover of one level-`level` node, and whether the
    /// node itself is optimal at each depth below.
    fn node_value(&self, level: usize, delta: usize, alpha: f64) -> (f64, Vec<bool>) {
        let lb = self.children.ln();
        let mut v = alpha * self.radius(level + delta).ln();
        let mut own = vec![true; delta + 1];
        for j in (0..delta).rev() {
            let mine = alpha * self.radius(level + j).ln();
            let kids = lb + v;
            if kids < mine {
                v = kids;
                own[j] = false;
            } else {
                v = mine;
            }
        }
        (v, own)
    }

    /// Mass-distribution bound `m ≥ μ(Z) / sup μ(B_ρ)/ρ^α` over
    /// `ρ ≤ ε`, for `μ` the natural measure.
    fn log_lower(&self, log_eps: f64, alpha: f64, log_mass: f64) -> f64 {
        if alpha > self.dim + 1e-12 {
            return f64::NEG_INFINITY;
        }
        // μ(B_ρ) ≤ K ρ^dim
        let log_k = if self.children == 1.0 {
            0.0
        } else if self.gap > 0.0 {
            self.dim * (2.0 / (self.gap * self.span)).ln()
        } else if self.dim == 2.0 {
            PI.ln()
        } else {
            (2.0 / self.span).ln()
        };
        log_mass - log_k + (alpha - self.dim) * log_eps
    }

    /// Centers of the depth-`k` pieces, in order.
    fn centers(&self, k: usize) -> Vec<f64> {
        let mut out = vec![(self.lo, self.span)];
        for _ in 0..k {
            out = out
                .into_iter()
                .flat_map(|(a, w)| {
                    let step = w * (self.ratio + self.gap);
                    (0..self.children as usize).map(move |j| (a + j as f64 * step, w * self.ratio))
                })
                .collect();
        }
        out.into_iter().map(|(a, w)| a + 0.5 * w).collect()
    }
}

/// Depth offset between order-`n` u-Bowen balls and horseshoe leaf pieces:
/// a depth-`j` piece lies in every order-`n` ball centred in it once
/// `β^{n-1-j} < r`.
pub(crate) fn horseshoe_extra(r: f64, beta: f64) -> usize {
    ((1.0 / r).ln() / beta.ln() + 1e-9).ceil().max(1.0) as usize - 1
}

pub(crate) use arcs::half_width;

fn ln_sum_into(acc: &mut f64, v: f64) {
    *acc = crate::linalg::ln_add(*acc, v);
}

/// Cover problems prepared for repeated evaluation over `α`.
enum Prepared<'a> {
    Empty,
    Similar { s: Similar, nodes: Vec<(f64, Vec<u8>)>, level: usize, delta: usize },
    Tree { tree: ShiftTree<'a>, pins: Vec<Vec<Option<u8>>>, level: usize, delta: usize },
    Arcs { prob: ArcProblem<'a>, level: usize, delta: usize },
}

struct Evaluated {
    log_upper: f64,
    log_lower: f64,
    exact: bool,
    size: f64,
    certified: bool,
    elements: Vec<CoverElement>,
}

fn shift_pins(words: &[Vec<u8>], off: usize) -> Vec<Vec<Option<u8>>> {
    words
        .iter()
        .map(|w| {
            let mut pins = vec![None; off];
            pins.extend(w.iter().map(|&c| Some(c)));
            pins
        })
        .collect()
}

fn prepare<'a>(c: &'a CStructure, z: &Target, level: usize, delta: usize, holder: &'a mut Option<System>) -> Result<Prepared<'a>> {
    if level == 0 {
        return Err(Error::param("level", "must be >= 1"));
    }
    if matches!(z, Target::Empty) {
        return Ok(Prepared::Empty);
    }
    let kappa = c.kappa();
    match &c.kind {
        StructureKind::Hausdorff { space } => {
            let (s, nodes) = match (space, z) {
                (_, Target::Whole) => (similar(space, 1.0)?, vec![(0.0, Vec::new())]),
                (Space::SelfSimilar { .. } | Space::Interval { .. }, Target::Cylinders { words }) => {
                    let b = match space {
                        Space::SelfSimilar { children, .. } => *children as u8,
                        _ => 2,
                    };
                    if words.iter().any(|w| w.len() > level || w.iter().any(|&d| d >= b)) {
                        return Err(Error::param("target", "addresses must be valid and no deeper than the level"));
                    }
                    (similar(space, 1.0)?, words.iter().map(|w| (0.0, w.clone())).collect())
                }
                (Space::Interval { lo, hi }, Target::Arcs { arcs }) => {
                    if let Some(a) = arcs.iter().find(|a| !(a[0] < a[1]) || a[0] < *lo || a[1] > *hi) {
                        return Err(Error::param("target", format!("arc {a:?} outside the interval")));
                    }
                    // one binary tree per arc, scaled to the arc
                    let base = similar(space, 1.0)?;
                    let nodes = arcs.iter().map(|a| (((a[1] - a[0]) * 0.5 / base.radius0).ln(), Vec::new())).collect();
                    (base, nodes)
                }
                _ => return Err(Error::Unsupported("target shape for this Hausdorff space")),
            };
            Ok(Prepared::Similar { s, nodes, level, delta })
        }
        StructureKind::Pressure { sys, phi, r } => {
            if !sys.is_shift() {
                return Err(Error::Unsupported("whole-space covers on geometric systems"));
            }
            let m = shift_agreement(*r);
            let off = m.saturating_sub(1);
            let mut win = phi.shift_window(sys)?;
            win.start += off as i64;
            let tree = ShiftTree { sys, win, past: None, extra: 2 * off, kappa };
            let pins = match z {
                Target::Whole => vec![Vec::new()],
                Target::Cylinders { words } => shift_pins(words, off),
                _ => return Err(Error::Unsupported("arc targets on a shift")),
            };
            Ok(Prepared::Tree { tree, pins, level, delta })
        }
        StructureKind::Leaf { sys, chart, r, .. } | StructureKind::Reparametrized { sys, chart, r } => {
            let zero = Potential::zero();
            let phi = match &c.kind {
                StructureKind::Leaf { phi, .. } => phi,
                _ => &zero,
            };
            match &chart.geometry {
                ChartGeometry::Cylinders { past, .. } => {
                    let m = shift_agreement(*r);
                    let tree = ShiftTree {
                        sys,
                        win: phi.shift_window(sys)?,
                        past: Some(past.clone()),
                        extra: m.saturating_sub(1),
                        kappa,
                    };
                    let pins = match z {
                        Target::Whole => vec![Vec::new()],
                        Target::Cylinders { words } => shift_pins(words, 0),
                        _ => return Err(Error::Unsupported("arc targets on a shift")),
                    };
                    Ok(Prepared::Tree { tree, pins, level, delta })
                }
                ChartGeometry::Segment { .. } if matches!(sys.family, Family::Horseshoe { .. }) => {
                    let Family::Horseshoe { beta, .. } = sys.family else { unreachable!() };
                    let value = match phi.kind {
                        PotentialKind::Zero => phi.shift,
                        PotentialKind::GeometricT { t } => -t * beta.ln() + phi.shift,
                        _ => return Err(Error::Unsupported("horseshoe leaf covers with a non-constant potential")),
                    };
                    let extra = horseshoe_extra(*r, beta);
                    *holder = Some(System::full_shift(2)?);
                    let two = holder.as_ref().expect("just set");
                    let win = Potential::constant(value).shift_window(two)?;
                    let tree = ShiftTree { sys: two, win, past: Some(vec![0]), extra, kappa };
                    let pins = match z {
                        Target::Whole => vec![Vec::new()],
                        Target::Cylinders { words } => shift_pins(words, 0),
                        _ => return Err(Error::Unsupported("arc targets on the horseshoe leaf")),
                    };
                    Ok(Prepared::Tree { tree, pins, level, delta })
                }
                _ => {
                    let arcs = match z {
                        Target::Whole => vec![[-chart.tau, chart.tau]],
                        Target::Arcs { arcs } => arcs.clone(),
                        _ => return Err(Error::Unsupported("cylinder targets on an interval leaf")),
                    };
                    let prob = ArcProblem::new(sys, chart, phi, *r, kappa, &arcs, level, delta)?;
                    Ok(Prepared::Arcs { prob, level, delta })
                }
            }
        }
    }
}

impl Prepared<'_> {
    fn evaluate(&self, alpha: f64, witness: bool) -> Result<Evaluated> {
        match self {
            Prepared::Empty => Ok(Evaluated {
                log_upper: f64::NEG_INFINITY,
                log_lower: f64::NEG_INFINITY,
                exact: true,
                size: 0.0,
                certified: true,
                elements: Vec::new(),
            }),
            Prepared::Similar { s, nodes, level, delta } => {
                // nodes are (ln scale, address): arcs reuse the unit tree
                // rescaled, so η^α picks up scale^α
                let (v, own) = s.node_value(*level, *delta, alpha);
                let lb = s.children.ln();
                let depth_own = own.iter().position(|&o| o).unwrap_or(*delta);
                let mut up = f64::NEG_INFINITY;
                let mut mass = f64::NEG_INFINITY;
                let mut eps = f64::NEG_INFINITY;
                let mut size = 0.0;
                for (scale, addr) in nodes {
                    let reps = (*level - addr.len()) as f64 * lb;
                    ln_sum_into(&mut up, reps + v + alpha * scale);
                    ln_sum_into(&mut mass, -(addr.len() as f64) * lb + s.dim * scale);
                    eps = eps.max(s.radius(*level).ln() + scale);
                    size += s.children.powi((*level - addr.len() + depth_own) as i32);
                }
                let lo = s.log_lower(eps, alpha, mass);
                let mut elements = Vec::new();
                let plain = nodes.len() == 1 && nodes[0] == (0.0, Vec::new()) && s.dim < 2.0;
                if witness && plain && size <= tree::WITNESS_CAP {
                    let k = *level + depth_own;
                    let radius = s.radius(k);
                    elements = s.centers(k).into_iter().map(|c| CoverElement::Ball { center: vec![c], radius }).collect();
                }
                Ok(Evaluated { log_upper: up, log_lower: lo.min(up), exact: true, size, certified: true, elements })
            }
            Prepared::Tree { tree, pins, level, delta } => {
                let mut up = f64::NEG_INFINITY;
                let mut size = 0.0;
                let mut elements = Vec::new();
                for p in pins {
                    let v = tree.cover(p, *level, *delta, alpha, witness)?;
                    ln_sum_into(&mut up, v.log_value);
                    size += v.size;
                    if let Some(els) = v.elements {
                        elements.extend(els.into_iter().map(|(word, n)| CoverElement::Cylinder { word, n }));
                    }
                }
                Ok(Evaluated { log_upper: up, log_lower: up, exact: true, size, certified: true, elements })
            }
            Prepared::Arcs { prob, .. } => {
                let v = prob.solve(alpha, witness)?;
                Ok(Evaluated {
                    log_upper: v.log_upper,
                    log_lower: v.log_lower,
                    exact: false,
                    size: v.size as f64,
                    certified: v.certified,
                    elements: v.elements.into_iter().map(|(center, n)| CoverElement::Arc { center, n }).collect(),
                })
            }
        }
    }

    fn level(&self) -> usize {
        match self {
            Prepared::Empty => 0,
            Prepared::Similar { level, .. } | Prepared::Tree { level, .. } | Prepared::Arcs { level, .. } => *level,
        }
    }

    fn delta(&self) -> usize {
        match self {
            Prepared::Empty => 0,
            Prepared::Similar { delta, .. } | Prepared::Tree { delta, .. } | Prepared::Arcs { delta, .. } => *delta,
        }
    }
}

pub fn outer_measure(c: &CStructure, z: &Target, alpha: f64, level: usize) -> Result<OuterMeasureEstimate> {
    outer_measure_with(c, z, alpha, level, DELTA)
}

/// `m_C(Z, α)` at refinement `level` with orders (depths) `level..=level + delta`.
pub fn outer_measure_with(c: &CStructure, z: &Target, alpha: f64, level: usize, delta: usize) -> Result<OuterMeasureEstimate> {
    if !alpha.is_finite() {
        return Err(Error::param("alpha", "must be finite"));
    }
    let mut holder = None;
    let prep = prepare(c, z, level, delta, &mut holder)?;
    let e = prep.evaluate(alpha, true)?;
    let max_psi = if matches!(prep, Prepared::Empty) { 0.0 } else { c.scale(level) };
    Ok(OuterMeasureEstimate {
        alpha,
        upper: e.log_upper.exp(),
        lower: e.log_lower.exp(),
        log_upper: e.log_upper,
        log_lower: e.log_lower,
        level: prep.level(),
        delta: prep.delta(),
        exact: e.exact,
        cover: CoverCandidate {
            elements: e.elements,
            size: e.size,
            log_weight: e.log_upper,
            max_psi,
            certified: e.certified,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalValue {
    pub value: f64,
    pub bracket: [f64; 2],
    pub iterations: usize,
    pub level: usize,
    /// Levels compared by the growth predicate.
    pub step: usize,
}

/// `dim_C Z` by bisection on `α`. `m_C(Z, α)` at a finite level is
/// positive on both sides of the critical value, so the predicate is its
/// growth from `level` to `level + DELTA` (threshold ratio 1): it grows
/// below the critical value and decays above it.
pub fn critical_value(c: &CStructure, z: &Target, bracket: [f64; 2], tolerance: f64, level: usize) -> Result<CriticalValue> {
    critical_value_with(c, z, bracket, tolerance, level, DELTA)
}

pub fn critical_value_with(
    c: &CStructure,
    z: &Target,
    bracket: [f64; 2],
    tolerance: f64,
    level: usize,
    delta: usize,
) -> Result<CriticalValue> {
    if !(bracket[0] < bracket[1]) || !(tolerance > 0.0) {
        return Err(Error::param("bracket", "need lo < hi and tolerance > 0"));
    }
    if matches!(z, Target::Empty) {
        return Err(Error::Empty("target"));
    }
    let step = delta.max(1);
    let (mut h1, mut h2) = (None, None);
    let near = prepare(c, z, level, delta, &mut h1)?;
    let far = prepare(c, z, level + step, delta, &mut h2)?;
    let grows = |alpha: f64| -> Result<bool> {
        let a = near.evaluate(alpha, false)?.log_upper;
        let b = far.evaluate(alpha, false)?.log_upper;
        Ok(b - a >= -1e-9 * a.abs().max(1.0))
    };
    let (mut lo, mut hi) = (bracket[0], bracket[1]);
    if !grows(lo)? || grows(hi)? {
        return Err(Error::NoBracket);
    }
    let mut iterations = 0;
    while hi - lo > tolerance && iterations < MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if grows(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    Ok(CriticalValue { value: 0.5 * (lo + hi), bracket: [lo, hi], iterations, level, step })
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::LN_2;

    #[test]
    fn interval_at_one_is_half() {
        let c = hausdorff_structure(Space::Interval { lo: 0.0, hi: 1.0 }).unwrap();
        for level in [1, 5, 12] {
            let e = outer_measure(&c, &Target::Whole, 1.0, level).unwrap();
            assert!((e.upper - 0.5).abs() < 1e-12 && (e.lower - 0.5).abs() < 1e-12, "{e:?}");
        }
        let e = outer_measure(&c, &Target::Arcs { arcs: vec![[0.25, 0.5]] }, 1.0, 4).unwrap();
        assert!((e.upper - 0.125).abs() < 1e-12);
    }

    #[test]
    fn empty_target_is_zero() {
        let c = hausdorff_structure(Space::Torus).unwrap();
        let e = outer_measure(&c, &Target::Empty, 0.7, 3).unwrap();
        assert_eq!((e.upper, e.lower), (0.0, 0.0));
    }

    #[test]
    fn critical_values_of_classic_sets() {
        let cantor = hausdorff_structure(Space::middle_thirds()).unwrap();
        let d = critical_value(&cantor, &Target::Whole, [0.0, 2.0], 1e-9, 4).unwrap();
        assert!((d.value - LN_2 / 3f64.ln()).abs() < 1e-8, "{d:?}");
        let point = hausdorff_structure(Space::Point { x: 0.3 }).unwrap();
        let d = critical_value(&point, &Target::Whole, [0.0, 1.0], 1e-9, 4).unwrap();
        assert!(d.value < 1e-8);
        let torus = hausdorff_structure(Space::Torus).unwrap();
        let d = critical_value(&torus, &Target::Whole, [0.0, 3.0], 1e-9, 2).unwrap();
        assert!((d.value - 2.0).abs() < 1e-8);
    }

    #[test]
    fn full_shift_pressure_structure() {
        let sys = System::full_shift(2).unwrap();
        let c = pressure_structure(&sys, &Potential::zero(), 0.7).unwrap();
        for level in [1, 10, 20] {
            let e = outer_measure(&c, &Target::Whole, LN_2, level).unwrap();
            assert!((e.upper - 1.0).abs() < 1e-12);
        }
        let d = critical_value(&c, &Target::Whole, [0.0, 2.0], 1e-10, 20).unwrap();
        assert!((d.value - LN_2).abs() < 1e-9);
    }

    #[test]
    fn leaf_structure_on_full_shift_uses_one_sided_cylinders() {
        let sys = System::full_shift(2).unwrap();
        let x = Point::Word(SymbolWord::from_parts(2, &[1, 0, 1], &[0, 0, 1, 1]).unwrap());
        let chart = sys.leaf_chart(&x, sys.tau, 1).unwrap();
        let c = leaf_structure(&sys, &Potential::zero(), 0.7, &chart).unwrap();
        let e = outer_measure(&c, &Target::Whole, LN_2 - 0.5, 3).unwrap();
        assert_eq!(e.cover.size, 8.0);
        for el in &e.cover.elements {
            let CoverElement::Cylinder { word, n } = el else { panic!() };
            assert_eq!(word.len(), *n);
        }
        assert!(leaf_structure(&sys, &Potential::zero(), 1.0, &chart).is_err());
    }

    #[test]
    fn validation_reports() {
        let torus = hausdorff_structure(Space::Torus).unwrap();
        assert!(validate_cstructure(&torus, &[0.1, 1e-3], 16, 1).unwrap().passed);
        let sys = System::full_shift(2).unwrap();
        let c = pressure_structure(&sys, &Potential::bernoulli(&[0.3, 0.7]), 0.7).unwrap();
        let rep = validate_cstructure(&c, &[0.5, 1e-3], VALIDATION_LEVELS, 2).unwrap();
        assert!(rep.passed, "{rep:?}");
        // ψ ≤ 1/⌈ln(1/δ)⌉ is the exact threshold
        let eps = rep.a2_witnesses[1].1.unwrap();
        assert!((eps - 1.0 / 7.0).abs() < 1e-12);
        let bad = c.with_constant_eta(1.0);
        let rep = validate_cstructure(&bad, &[0.5], 8, 3).unwrap();
        assert!(rep.violations.iter().any(|v| v.condition == "A2"));
    }

    #[test]
    fn cat_leaf_critical_value_is_entropy() {
        let sys = System::cat_map();
        let chart = sys.leaf_chart(&Point::torus(0.31, 0.17), sys.tau, 1).unwrap();
        let c = leaf_structure(&sys, &Potential::zero(), 0.05, &chart).unwrap();
        let z = Target::Arcs { arcs: vec![[-0.05, 0.05]] };
        let d = critical_value_with(&c, &z, [0.0, 3.0], 1e-6, 3, 3).unwrap();
        assert!((d.value - crate::systems::LAMBDA_U.ln()).abs() < 0.02, "{d:?}");
    }

    #[test]
    fn horseshoe_leaf_reparametrized_dimension() {
        let sys = System::horseshoe(0.2, 3.0).unwrap();
        let x = sys.horseshoe_coded(&[0, 1, 0, 0, 1, 1, 0, 1], &[1, 1, 0, 1, 0, 0, 1, 0]).unwrap();
        let chart = sys.leaf_chart(&x, sys.tau, 1).unwrap();
        let c = reparametrized_structure(&sys, 0.05, &chart).unwrap();
        let d = critical_value(&c, &Target::Whole, [0.0, 2.0], 1e-10, 10).unwrap();
        assert!((d.value - LN_2 / 3f64.ln()).abs() < 1e-8);
    }
}
