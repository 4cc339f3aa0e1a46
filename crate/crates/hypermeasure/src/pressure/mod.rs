//! Partition sums, pressure estimates and exact symbolic oracles.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::equilibrium::EmpiricalMeasure;
use crate::linalg::{fit_line, ln_sum, Dense, Perron};
use crate::rng::{seeded, uniform};
use crate::systems::{Family, LeafChart, Point, Potential, PotentialKind, SymbolWord, System};
use crate::{Error, Result};

mod periodic;
mod separated;
mod window;

pub use periodic::{periodic_count, periodic_points, periodic_word, periodic_words, MAX_PERIODIC};
pub(crate) use periodic::BlockGraph;
use window::{Extreme, Slot, WindowSum};

/// Largest leaf sample materialized for a geometric partition sum.
pub const MAX_LEAF_SAMPLES: usize = 4_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Span,
    Sep,
    Per,
}

/// Where a partition sum is taken.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Whole,
    /// `B^u_Λ(base, radius)`.
    Leaf { base: Point, radius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionSumRecord {
    pub n: usize,
    pub r: f64,
    pub variant: Variant,
    pub value: f64,
    pub log_value: f64,
    pub witness_size: u64,
    pub domain: Domain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RSensitivity {
    pub r: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureEstimate {
    pub value: f64,
    pub r: f64,
    pub n_range: (usize, usize),
    pub lower: f64,
    pub upper: f64,
    /// RMS residual of the `log Z_n` line fit.
    pub slope_residual: f64,
    pub log_c: f64,
    pub ill_conditioned: bool,
    pub warnings: Vec<String>,
    pub records: Vec<PartitionSumRecord>,
    pub r_sensitivity: Vec<RSensitivity>,
}

/// Least `m ≥ 0` with `2^{-m} < r`: shift points within `r` agree on `|i| < m`.
pub fn shift_agreement(r: f64) -> usize {
    let mut m = 0;
    while 0.5f64.powi(m as i32) >= r {
        m += 1;
    }
    m
}

fn check_r(sys: &System, r: f64, domain: &Domain) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::param("r", "must be positive"));
    }
    if let Domain::Leaf { radius, .. } = domain {
        if r >= sys.tau / 3.0 {
            return Err(Error::param("r", format!("leaf domains need r < tau/3 = {}", sys.tau / 3.0)));
        }
        if !(*radius > 0.0 && *radius <= sys.tau) {
            return Err(Error::param("radius", "leaf radius must lie in (0, tau]"));
        }
    }
    Ok(())
}

/// Greedy maximal `(n, r)`-separated subset of `sample`, in sample order.
pub fn separated_set(sys: &System, sample: &[Point], n: usize, r: f64) -> Result<Vec<Point>> {
    if n == 0 || !(r > 0.0) {
        return Err(Error::param("n", "need n >= 1 and r > 0"));
    }
    let idx = separated::greedy_separated(sys, sample, n, r)?;
    Ok(idx.into_iter().map(|i| sample[i].clone()).collect())
}

/// Leaf points in `B^u(base, radius)` with at least 32 samples per
/// `(n_max, r)` u-Bowen ball.
pub fn leaf_sample(sys: &System, base: &Point, radius: f64, r: f64, n_max: usize) -> Result<(LeafChart, Vec<(f64, Point)>)> {
    let ball = 2.0 * r / sys.expansion().powi(n_max as i32 - 1);
    let spacing = ball / 32.0;
    if 2.0 * radius / spacing > MAX_LEAF_SAMPLES as f64 {
        return Err(Error::param("n", "leaf sample would exceed the sample budget"));
    }
    let chart = sys.leaf_chart(base, sys.tau, 1)?;
    let pts = chart.samples(sys, -radius, radius, spacing)?;
    Ok((chart, pts))
}

fn is_constant(phi: &Potential) -> bool {
    matches!(phi.kind, PotentialKind::Zero | PotentialKind::GeometricT { .. })
}

fn record(n: usize, r: f64, variant: Variant, log_value: f64, witness_size: u64, domain: &Domain) -> PartitionSumRecord {
    PartitionSumRecord { n, r, variant, value: log_value.exp(), log_value, witness_size, domain: domain.clone() }
}

/// Slots of the Bowen-class window problem on a shift.
fn shift_problem<'a>(
    sys: &'a System,
    win: &'a crate::systems::potential::ShiftWindow,
    n: usize,
    r: f64,
    domain: &Domain,
    extreme: Extreme,
    count_only: bool,
) -> Result<WindowSum<'a>> {
    let m = shift_agreement(r) as i64;
    let (wlo, whi) = if m == 0 { (0, 0) } else { (-(m - 1), n as i64 + m - 1) };
    let mut pins: Vec<(i64, u8)> = Vec::new();
    if let Domain::Leaf { base, radius } = domain {
        let w = base.as_word().ok_or(Error::FamilyMismatch)?;
        for (j, &s) in w.past().iter().enumerate() {
            pins.push((j as i64 - w.origin as i64, s));
        }
        let m1 = shift_agreement(*radius) as i64;
        for i in 0..m1 {
            pins.push((i, w.symbol(i)?));
        }
    }
    let lo = [wlo, win.start, pins.first().map_or(0, |p| p.0)].into_iter().min().expect("nonempty");
    let hi = [whi, n as i64 - 1 + win.end(), pins.last().map_or(0, |p| p.0 + 1)]
        .into_iter()
        .max()
        .expect("nonempty");
    let mut slots = vec![Slot::Free; (hi - lo) as usize];
    for i in wlo..whi {
        slots[(i - lo) as usize] = Slot::Class;
    }
    for (i, s) in pins {
        slots[(i - lo) as usize] = Slot::Pinned(s);
    }
    Ok(WindowSum { sys, win, n, lo, slots, extreme, count_only })
}

fn shift_sum(sys: &System, phi: &Potential, n: usize, r: f64, variant: Variant, domain: &Domain) -> Result<PartitionSumRecord> {
    let win = phi.shift_window(sys)?;
    let extreme = if variant == Variant::Span { Extreme::Min } else { Extreme::Max };
    let value = shift_problem(sys, &win, n, r, domain, extreme, false)?.evaluate();
    let count = shift_problem(sys, &win, n, r, domain, extreme, true)?.evaluate();
    if value == f64::NEG_INFINITY {
        return Err(Error::Empty("no admissible word in the domain"));
    }
    Ok(record(n, r, variant, value, count.exp().round() as u64, domain))
}

fn periodic_sum(sys: &System, phi: &Potential, n: usize, domain: &Domain) -> Result<PartitionSumRecord> {
    if !matches!(domain, Domain::Whole) {
        return Err(Error::Unsupported("periodic sums are taken over the whole space"));
    }
    phi.validate(sys)?;
    let count = periodic_count(sys, n)?;
    let log_value = match &sys.family {
        Family::FullShift { .. } | Family::Sft { .. } => periodic::symbolic_trace(sys, phi, n)?,
        _ if is_constant(phi) => {
            let probe = match sys.family {
                Family::CatMap => Point::torus(0.0, 0.0),
                _ => Point::horseshoe(0.0, 0.0),
            };
            (count as f64).ln() + n as f64 * phi.eval(sys, &probe)?
        }
        _ => {
            let pts = periodic_points(sys, n)?;
            let mut logs = Vec::with_capacity(pts.len());
            for x in &pts {
                logs.push(periodic::periodic_birkhoff(sys, phi, x, n)?);
            }
            ln_sum(logs)
        }
    };
    Ok(record(n, 0.0, Variant::Per, log_value, count, domain))
}

fn leaf_sums(
    sys: &System,
    phi: &Potential,
    ns: &[usize],
    r: f64,
    variant: Variant,
    domain: &Domain,
) -> Result<Vec<PartitionSumRecord>> {
    let Domain::Leaf { base, radius } = domain else {
        return Err(Error::Unsupported("separated sets on geometric systems need a leaf domain"));
    };
    let n_max = *ns.iter().max().ok_or(Error::Empty("n range"))?;
    let (_, sample) = leaf_sample(sys, base, *radius, r, n_max)?;
    let ts: Vec<f64> = sample.iter().map(|(t, _)| *t).collect();
    let sample: Vec<Point> = sample.into_iter().map(|(_, p)| p).collect();
    if sample.is_empty() {
        return Err(Error::Empty("leaf sample"));
    }
    let mut out = Vec::with_capacity(ns.len());
    for &n in ns {
        let idx = separated::greedy_separated_leaf(sys, &ts, &sample, n, r)?;
        let mut logs = Vec::with_capacity(idx.len());
        for &i in &idx {
            logs.push(sys.birkhoff_sum(phi, &sample[i], n)?);
        }
        out.push(record(n, r, variant, ln_sum(logs), idx.len() as u64, domain));
    }
    Ok(out)
}

/// Partition sums for every `n` in `ns` (sharing one leaf sample on
/// geometric systems).
pub fn partition_sums(
    sys: &System,
    phi: &Potential,
    ns: &[usize],
    r: f64,
    variant: Variant,
    domain: &Domain,
) -> Result<Vec<PartitionSumRecord>> {
    phi.validate(sys)?;
    if ns.contains(&0) {
        return Err(Error::param("n", "n must be at least 1"));
    }
    if variant == Variant::Per {
        return ns.iter().map(|&n| periodic_sum(sys, phi, n, domain)).collect();
    }
    check_r(sys, r, domain)?;
    if sys.is_shift() {
        ns.iter().map(|&n| shift_sum(sys, phi, n, r, variant, domain)).collect()
    } else {
        leaf_sums(sys, phi, ns, r, variant, domain)
    }
}

pub fn partition_sum(
    sys: &System,
    phi: &Potential,
    n: usize,
    r: f64,
    variant: Variant,
    domain: &Domain,
) -> Result<PartitionSumRecord> {
    Ok(partition_sums(sys, phi, &[n], r, variant, domain)?.remove(0))
}

/// Fit + brackets from a set of records sharing everything but `n`.
pub fn estimate_from_records(records: Vec<PartitionSumRecord>) -> Result<PressureEstimate> {
    if records.len() < 4 {
        return Err(Error::param("n_range", "need at least four orders"));
    }
    let mut records = records;
    records.sort_by_key(|r| r.n);
    let top = &records[records.len() / 2..];
    let xs: Vec<f64> = top.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = top.iter().map(|r| r.log_value).collect();
    let (value, _, residual) = fit_line(&xs, &ys);
    let mult = multiplicativity_check(&records);
    let log_c = mult.log_c;
    let mut upper = f64::INFINITY;
    let mut lower = f64::NEG_INFINITY;
    for r in &records {
        upper = upper.min((r.log_value + log_c) / r.n as f64);
        lower = lower.max((r.log_value - log_c) / r.n as f64);
    }
    let mut warnings = Vec::new();
    let mut ill = false;
    if !(lower <= value + 1e-12 && value <= upper + 1e-12) {
        ill = true;
        warnings.push(format!("slope {value} outside the bracket [{lower}, {upper}]"));
        lower = lower.min(value);
        upper = upper.max(value);
    }
    if residual > 1e-2 * value.abs().max(1.0) {
        ill = true;
        warnings.push(format!("line fit residual {residual} is large"));
    }
    if mult.growing {
        warnings.push(String::from("multiplicative defect grows with n"));
    }
    let r = records[0].r;
    let n_range = (records[0].n, records[records.len() - 1].n);
    Ok(PressureEstimate {
        value,
        r,
        n_range,
        lower,
        upper,
        slope_residual: residual,
        log_c,
        ill_conditioned: ill,
        warnings,
        records,
        r_sensitivity: Vec::new(),
    })
}

/// Pressure from the growth of `Z_n^sep` at the first radius of the
/// schedule; the remaining radii are reported as sensitivity.
pub fn pressure_estimate(
    sys: &System,
    phi: &Potential,
    rs: &[f64],
    ns: &[usize],
    domain: &Domain,
) -> Result<PressureEstimate> {
    pressure_estimate_with(sys, phi, rs, ns, domain, Variant::Sep)
}

pub fn pressure_estimate_with(
    sys: &System,
    phi: &Potential,
    rs: &[f64],
    ns: &[usize],
    domain: &Domain,
    variant: Variant,
) -> Result<PressureEstimate> {
    if rs.is_empty() {
        return Err(Error::param("r", "radius schedule is empty"));
    }
    if ns.len() < 4 {
        return Err(Error::param("n_range", "need at least four orders"));
    }
    let mut out: Option<PressureEstimate> = None;
    let mut sens = Vec::with_capacity(rs.len());
    for &r in rs {
        let est = estimate_from_records(partition_sums(sys, phi, ns, r, variant, domain)?)?;
        sens.push(RSensitivity { r, value: est.value });
        if out.is_none() {
            out = Some(est);
        }
        if variant == Variant::Per {
            break;
        }
    }
    let mut est = out.expect("nonempty schedule");
    est.r_sensitivity = sens;
    Ok(est)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplicativityReport {
    /// Best `C` with `C^{-1} Z_n Z_m ≤ Z_{n+m} ≤ C Z_n Z_m` on tested pairs.
    pub c: f64,
    pub log_c: f64,
    pub pairs: usize,
    /// `(n + m, ln Z_{n+m} − ln Z_n − ln Z_m)` per tested pair.
    pub defects: Vec<(usize, usize, f64)>,
    pub growing: bool,
}

pub fn multiplicativity_check(records: &[PartitionSumRecord]) -> MultiplicativityReport {
    let find = |n: usize| records.iter().find(|r| r.n == n).map(|r| r.log_value);
    let mut defects = Vec::new();
    for a in records {
        for b in records {
            if a.n > b.n {
                continue;
            }
            if let Some(z) = find(a.n + b.n) {
                defects.push((a.n, b.n, z - a.log_value - b.log_value));
            }
        }
    }
    let log_c = defects.iter().map(|d| d.2.abs()).fold(0.0, f64::max);
    let growing = if defects.len() >= 4 {
        let mut sorted: Vec<_> = defects.clone();
        sorted.sort_by_key(|d| d.0 + d.1);
        let half = sorted.len() / 2;
        let early = sorted[..half].iter().map(|d| d.2.abs()).fold(0.0, f64::max);
        let late = sorted[half..].iter().map(|d| d.2.abs()).fold(0.0, f64::max);
        late > 1.1 * early + 1e-9
    } else {
        false
    };
    MultiplicativityReport { c: log_c.exp(), log_c, pairs: defects.len(), defects, growing }
}

/// Transfer-operator data of a symbolic potential on a shift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SftGibbs {
    pub pressure: f64,
    pub p: usize,
    pub depth: usize,
    /// Length of the state blocks.
    pub block: usize,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    /// Stationary distribution on blocks.
    pub stationary: Vec<f64>,
    /// Markov transitions `(target, probability)` per block.
    pub transitions: Vec<Vec<(usize, f64)>>,
    /// Gibbs constant: cylinder masses lie within `e^{-nP + S_n φ} Q^{±1}`.
    pub q: f64,
}

impl SftGibbs {
    fn index(&self, block: &[u8]) -> usize {
        block.iter().fold(0, |acc, &s| acc * self.p + s as usize)
    }

    /// `μ([w])` for the cylinder fixing indices `0..w.len()`.
    pub fn cylinder_mass(&self, w: &[u8]) -> f64 {
        if w.is_empty() {
            return 1.0;
        }
        if w.len() < self.block {
            let free = self.block - w.len();
            let base = self.index(w) * self.p.pow(free as u32);
            return (base..base + self.p.pow(free as u32)).map(|s| self.stationary[s]).sum();
        }
        let mut s = self.index(&w[..self.block]);
        let mut mass = self.stationary[s];
        for &c in &w[self.block..] {
            let t = (s % self.p.pow(self.block as u32 - 1)) * self.p + c as usize;
            match self.transitions[s].iter().find(|e| e.0 == t) {
                Some(&(_, pr)) => mass *= pr,
                None => return 0.0,
            }
            s = t;
        }
        mass
    }

    /// Mass of `[w]` conditioned on the block preceding it.
    pub fn conditional_mass(&self, prev_block: &[u8], w: &[u8]) -> f64 {
        let mut s = self.index(prev_block);
        let mut mass = 1.0;
        let low = self.p.pow(self.block as u32 - 1);
        for &c in w {
            let t = (s % low) * self.p + c as usize;
            match self.transitions[s].iter().find(|e| e.0 == t) {
                Some(&(_, pr)) => mass *= pr,
                None => return 0.0,
            }
            s = t;
        }
        mass
    }
}

fn sparse_perron(g: &BlockGraph) -> Perron {
    let n = g.states;
    let live: Vec<usize> = (0..n).filter(|&s| g.live[s]).collect();
    let run = |transpose: bool| {
        let mut v = vec![0.0; n];
        for &s in &live {
            v[s] = 1.0 / live.len() as f64;
        }
        for _ in 0..200_000 {
            let mut next = v.clone();
            for (s, es) in g.edges.iter().enumerate() {
                for &(t, w) in es {
                    if transpose {
                        next[t] += v[s] * w;
                    } else {
                        next[s] += w * v[t];
                    }
                }
            }
            let sum: f64 = next.iter().sum();
            let mut diff = 0.0f64;
            for (a, b) in next.iter_mut().zip(&v) {
                *a /= sum;
                diff = diff.max((*a - b).abs());
            }
            v = next;
            let top = v.iter().cloned().fold(0.0, f64::max);
            if diff <= 1e-15 * top {
                break;
            }
        }
        v
    };
    let right = run(false);
    let left = run(true);
    let mut bh = vec![0.0; n];
    for (s, es) in g.edges.iter().enumerate() {
        for &(t, w) in es {
            bh[s] += w * right[t];
        }
    }
    let root = bh.iter().sum::<f64>() / right.iter().sum::<f64>();
    let dot: f64 = left.iter().zip(&right).map(|(a, b)| a * b).sum();
    Perron { root, left: left.into_iter().map(|x| x / dot).collect(), right }
}

/// `log ρ` of the weighted block transition operator, with the Markov
/// description of the equilibrium state.
pub fn sft_exact_pressure(sys: &System, phi: &Potential) -> Result<SftGibbs> {
    if !sys.is_shift() {
        return Err(Error::Unsupported("exact pressure needs a shift"));
    }
    let win = phi.shift_window(sys)?;
    let p = win.p;
    let mut a = Dense::zeros(p);
    for i in 0..p {
        for j in 0..p {
            if sys.allowed(i as u8, j as u8) {
                a.set(i, j, 1.0);
            }
        }
    }
    if let Some(symbol) = a.stranded_vertex() {
        return Err(Error::Reducible { symbol });
    }
    let g = BlockGraph::new(sys, &win);
    let perron = sparse_perron(&g);
    let rho = perron.root;
    let stationary: Vec<f64> = perron.left.iter().zip(&perron.right).map(|(l, h)| l * h).collect();
    let transitions: Vec<Vec<(usize, f64)>> = g
        .edges
        .iter()
        .enumerate()
        .map(|(s, es)| {
            if perron.right[s] <= 0.0 {
                return Vec::new();
            }
            es.iter().map(|&(t, w)| (t, w * perron.right[t] / (rho * perron.right[s]))).collect()
        })
        .collect();
    let q = gibbs_constant(sys, &win, &g, &perron);
    Ok(SftGibbs {
        pressure: rho.ln(),
        p,
        depth: win.depth,
        block: g.block,
        left: perron.left,
        right: perron.right,
        stationary,
        transitions,
        q,
    })
}

/// Range of `μ([w]) / e^{-nP + S_n φ(ω)}` over words and continuations.
fn gibbs_constant(sys: &System, win: &crate::systems::potential::ShiftWindow, g: &BlockGraph, perron: &Perron) -> f64 {
    let rho = perron.root;
    let live: Vec<usize> = (0..g.states).filter(|&s| g.live[s] && perron.right[s] > 0.0).collect();
    let lmax = live.iter().map(|&s| perron.left[s]).fold(0.0, f64::max);
    let lmin = live.iter().map(|&s| perron.left[s]).fold(f64::INFINITY, f64::min);
    // tail factor h(s_last) ρ^E e^{-(terms past the last edge)}
    let (mut tmax, mut tmin) = (0.0f64, f64::INFINITY);
    if win.depth == 1 {
        for &s in &live {
            let t = perron.right[s] * rho * (-win.values[s]).exp();
            tmax = tmax.max(t);
            tmin = tmin.min(t);
        }
    } else {
        let e = g.block;
        let ext_count = g.p.pow(e as u32);
        if (live.len() * ext_count) as f64 > 4e6 {
            let osc = win.oscillation();
            let (vmax, vmin) = (
                win.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                win.values.iter().cloned().fold(f64::INFINITY, f64::min),
            );
            let _ = osc;
            let hmax = live.iter().map(|&s| perron.right[s]).fold(0.0, f64::max);
            let hmin = live.iter().map(|&s| perron.right[s]).fold(f64::INFINITY, f64::min);
            tmax = hmax * rho.powi(e as i32) * (-(e as f64) * vmin).exp();
            tmin = hmin * rho.powi(e as i32) * (-(e as f64) * vmax).exp();
        } else {
            for &s in &live {
                let blk = g.digits(s);
                for code in 0..ext_count {
                    let mut ext = g.digits(code);
                    let mut word = blk.clone();
                    word.append(&mut ext);
                    if !sys.is_admissible(&word) {
                        continue;
                    }
                    let mut sum = 0.0;
                    for j in 0..e {
                        sum += win.values[g.index(&word[j..j + win.depth])];
                    }
                    let t = perron.right[s] * rho.powi(e as i32) * (-sum).exp();
                    tmax = tmax.max(t);
                    tmin = tmin.min(t);
                }
            }
        }
    }
    let q = (lmax * tmax).max(1.0 / (lmin * tmin));
    // a shifted reading window changes S_n φ by at most 2|start| osc
    q * (2.0 * win.start.unsigned_abs() as f64 * win.oscillation()).exp()
}

/// `μ_n = Z_n^{-1} Σ_{Per_n} e^{S_n φ(x)} δ_x`.
pub fn periodic_orbit_measure(sys: &System, phi: &Potential, n: usize) -> Result<EmpiricalMeasure> {
    phi.validate(sys)?;
    let pts = periodic_points(sys, n)?;
    if pts.is_empty() {
        return Err(Error::Empty("Per_n"));
    }
    let mut logs = Vec::with_capacity(pts.len());
    for x in &pts {
        logs.push(periodic::periodic_birkhoff(sys, phi, x, n)?);
    }
    let z = ln_sum(logs.iter().cloned());
    let atoms = pts.into_iter().zip(logs).map(|(x, l)| (x, (l - z).exp())).collect();
    Ok(EmpiricalMeasure::new(atoms, format!("periodic orbits of period {n}"), n, z.exp()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    pub q_u: f64,
    pub q_s: f64,
    pub holder_exponent: f64,
    pub seminorm: f64,
    /// Largest observed `|S_n φ(x) − S_n φ(y)|` over sampled u-Bowen pairs.
    pub empirical: f64,
    pub pairs: usize,
}

/// Closed-form u/s distortion bounds `|φ|_β τ^β / (1 − λ^β)` and their
/// empirical counterpart on random u-Bowen pairs.
pub fn bowen_distortion_constant(
    sys: &System,
    phi: &Potential,
    pairs: usize,
    n_max: usize,
    seed: u64,
) -> Result<DistortionReport> {
    phi.validate(sys)?;
    if n_max == 0 {
        return Err(Error::param("n_max", "must be positive"));
    }
    let beta = phi.holder_exponent();
    let seminorm = phi.holder_seminorm(sys);
    let q = seminorm * sys.tau.powf(beta) / (1.0 - sys.lambda().powf(beta));
    let mut rng = seeded(seed);
    let mut empirical = 0.0f64;
    let mut done = 0;
    let mut attempts = 0;
    while done < pairs && attempts < 20 * pairs.max(1) {
        attempts += 1;
        let n = rng.gen_range(1..=n_max);
        let Some((x, y, radius)) = u_bowen_pair(sys, n, &mut rng)? else { continue };
        if sys.dyn_metric(&x, &y, n)? >= radius {
            continue;
        }
        let d = (sys.birkhoff_sum(phi, &x, n)? - sys.birkhoff_sum(phi, &y, n)?).abs();
        empirical = empirical.max(d);
        done += 1;
    }
    Ok(DistortionReport { q_u: q, q_s: q, holder_exponent: beta, seminorm, empirical, pairs: done })
}

fn random_bits(rng: &mut crate::rng::SeededRng, len: usize, p: u8) -> Vec<u8> {
    (0..len).map(|_| rng.gen_range(0..p)).collect()
}

/// Extend `w` by uniformly chosen admissible symbols up to `len`.
fn random_admissible(sys: &System, rng: &mut crate::rng::SeededRng, mut w: Vec<u8>, len: usize) -> Vec<u8> {
    let p = sys.alphabet().unwrap_or(2);
    while w.len() < len {
        let opts: Vec<u8> = (0..p).filter(|&s| w.last().is_none_or(|&a| sys.allowed(a, s))).collect();
        w.push(opts[rng.gen_range(0..opts.len())]);
    }
    w
}

/// A base point and a second point of its u-Bowen ball of order `n`.
fn u_bowen_pair(sys: &System, n: usize, rng: &mut crate::rng::SeededRng) -> Result<Option<(Point, Point, f64)>> {
    let tau = sys.tau;
    Ok(Some(match &sys.family {
        Family::CatMap | Family::Solenoid => {
            let x = match sys.family {
                Family::CatMap => Point::torus(uniform(rng, 0.0, 1.0), uniform(rng, 0.0, 1.0)),
                _ => sys.attractor_point(uniform(rng, 0.0, core::f64::consts::TAU), rng.gen())?,
            };
            let chart = sys.leaf_chart(&x, tau, 1)?;
            let reach = tau / sys.expansion().powi(n as i32 - 1);
            let y = chart.point(sys, uniform(rng, -reach, reach))?;
            (x, y, tau)
        }
        Family::Horseshoe { .. } => {
            let past = random_bits(rng, 60, 2);
            let fut = random_bits(rng, 60, 2);
            let mut fut2 = fut.clone();
            for s in fut2.iter_mut().skip(n + 1) {
                *s = rng.gen_range(0..2);
            }
            (sys.horseshoe_coded(&fut, &past)?, sys.horseshoe_coded(&fut2, &past)?, tau)
        }
        Family::FullShift { p } | Family::Sft { p, .. } => {
            // same past, same first n symbols: B^u_n(x, r) for r in (1/2, 1)
            let len = 48 + n;
            let w = random_admissible(sys, rng, Vec::new(), len);
            let v = random_admissible(sys, rng, w[..24 + n].to_vec(), len);
            let x = SymbolWord::new(*p, w, 24)?;
            let y = SymbolWord::new(*p, v, 24)?;
            (Point::Word(x), Point::Word(y), 0.7)
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bern() -> Potential {
        Potential::bernoulli(&[0.3, 0.7])
    }

    #[test]
    fn full_shift_sums_are_powers_of_two() {
        let sys = System::full_shift(2).unwrap();
        for v in [Variant::Span, Variant::Sep, Variant::Per] {
            let rec = partition_sum(&sys, &Potential::zero(), 3, 0.7, v, &Domain::Whole).unwrap();
            assert!((rec.value - 8.0).abs() < 1e-12, "{v:?}");
            assert_eq!(rec.witness_size, 8);
        }
    }

    #[test]
    fn bernoulli_sums_are_one() {
        let sys = System::full_shift(2).unwrap();
        for n in 1..10 {
            let rec = partition_sum(&sys, &bern(), n, 0.7, Variant::Sep, &Domain::Whole).unwrap();
            assert!(rec.log_value.abs() < 1e-12);
        }
    }

    #[test]
    fn cat_periodic_sums() {
        let sys = System::cat_map();
        let z1 = partition_sum(&sys, &Potential::zero(), 1, 0.0, Variant::Per, &Domain::Whole).unwrap();
        let z2 = partition_sum(&sys, &Potential::zero(), 2, 0.0, Variant::Per, &Domain::Whole).unwrap();
        assert!((z1.value - 1.0).abs() < 1e-12);
        assert!((z2.value - 5.0).abs() < 1e-12);
    }

    #[test]
    fn exact_pressure_oracles() {
        let two = System::full_shift(2).unwrap();
        let g = sft_exact_pressure(&two, &Potential::zero()).unwrap();
        assert!((g.pressure - 2f64.ln()).abs() < 1e-14);
        let g = sft_exact_pressure(&two, &Potential::constant(0.5)).unwrap();
        assert!((g.pressure - 2f64.ln() - 0.5).abs() < 1e-14);
        let g = sft_exact_pressure(&two, &bern()).unwrap();
        assert!(g.pressure.abs() < 1e-14);
        assert!((g.cylinder_mass(&[0, 1, 1]) - 0.3 * 0.7 * 0.7).abs() < 1e-15);
        assert!((g.q - 1.0).abs() < 1e-12);
        let golden = System::sft(vec![vec![1, 1], vec![1, 0]]).unwrap();
        let g = sft_exact_pressure(&golden, &Potential::zero()).unwrap();
        assert!((g.pressure - ((1.0 + 5f64.sqrt()) / 2.0).ln()).abs() < 1e-14);
    }

    #[test]
    fn reducible_matrix_names_a_symbol() {
        let sys = System::sft(vec![vec![1, 1, 0], vec![0, 1, 0], vec![0, 1, 1]]).unwrap();
        assert!(matches!(sft_exact_pressure(&sys, &Potential::zero()), Err(Error::Reducible { .. })));
    }

    #[test]
    fn periodic_measures() {
        let cat = System::cat_map();
        let m = periodic_orbit_measure(&cat, &Potential::zero(), 1).unwrap();
        assert_eq!(m.atoms.len(), 1);
        assert_eq!(m.atoms[0].0, Point::torus(0.0, 0.0));
        let two = System::full_shift(2).unwrap();
        let m = periodic_orbit_measure(&two, &Potential::zero(), 2).unwrap();
        assert!(m.atoms.iter().all(|a| (a.1 - 0.25).abs() < 1e-15));
        let m = periodic_orbit_measure(&two, &bern(), 1).unwrap();
        let w: Vec<f64> = m.atoms.iter().map(|a| a.1).collect();
        assert!((w[0] - 0.3).abs() < 1e-15 && (w[1] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn full_shift_estimate() {
        let sys = System::full_shift(2).unwrap();
        let ns: Vec<usize> = (1..=20).collect();
        let e = pressure_estimate(&sys, &Potential::zero(), &[0.7], &ns, &Domain::Whole).unwrap();
        assert!((e.value - 2f64.ln()).abs() < 1e-9);
        assert!(e.lower <= e.value && e.value <= e.upper);
        let e = pressure_estimate(&sys, &bern(), &[0.7], &ns, &Domain::Whole).unwrap();
        assert!(e.value.abs() < 1e-9);
    }

    #[test]
    fn distortion_closed_form() {
        let cat = System::cat_map();
        let phi = Potential::trig(1.0 / core::f64::consts::TAU, 1, 0);
        let rep = bowen_distortion_constant(&cat, &phi, 200, 8, 1).unwrap();
        assert!((rep.q_u - 0.3 / (1.0 - crate::systems::LAMBDA_S)).abs() < 1e-12);
        assert!(rep.empirical <= rep.q_u);
        let zero = bowen_distortion_constant(&cat, &Potential::zero(), 10, 4, 1).unwrap();
        assert_eq!((zero.q_u, zero.q_s, zero.empirical), (0.0, 0.0, 0.0));
        let two = System::full_shift(2).unwrap();
        let rep = bowen_distortion_constant(&two, &bern(), 500, 10, 2).unwrap();
        assert_eq!(rep.empirical, 0.0);
    }

    #[test]
    fn separated_full_shift_cylinders() {
        let sys = System::full_shift(2).unwrap();
        let reps: Vec<Point> = crate::systems::admissible_words(&sys, None, 3)
            .into_iter()
            .map(|w| Point::Word(SymbolWord::from_parts(2, &[0], &[&w[..], &[0, 0]].concat()).unwrap()))
            .collect();
        assert_eq!(separated_set(&sys, &reps, 3, 0.7).unwrap().len(), 8);
    }
}
