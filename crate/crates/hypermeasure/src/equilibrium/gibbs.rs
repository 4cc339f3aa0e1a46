//! Bowen-ball masses of invariant measures: the Gibbs comparison and the
//! entropy read off from it.

use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::EmpiricalMeasure;
use crate::pressure::{shift_agreement, SftGibbs};
use crate::rng::{seeded, uniform, SeededRng};
use crate::systems::{Point, Potential, SymbolWord, System, LAMBDA_U};
use crate::{Error, Result};

/// Fewest atoms an empirical Bowen ball must hold to count as resolved.
pub const MIN_BALL_ATOMS: usize = 50;

/// Measures whose Bowen balls can be weighed.
pub trait BallMass {
    /// `μ(B_n(x, r))`, or `None` when the measure cannot resolve the ball.
    fn ball_mass(&self, sys: &System, x: &Point, n: usize, r: f64) -> Result<Option<f64>>;
    /// A `μ`-distributed point valid for `n` forward steps.
    fn sample(&self, sys: &System, rng: &mut SeededRng, n: usize) -> Result<Point>;
}

impl BallMass for EmpiricalMeasure {
    fn ball_mass(&self, sys: &System, x: &Point, n: usize, r: f64) -> Result<Option<f64>> {
        let mut mass = 0.0;
        let mut count = 0;
        for (p, w) in &self.atoms {
            if sys.dyn_metric(x, p, n)? < r {
                mass += w;
                count += 1;
            }
        }
        Ok((count >= MIN_BALL_ATOMS).then(|| mass / self.total()))
    }

    fn sample(&self, _sys: &System, rng: &mut SeededRng, _n: usize) -> Result<Point> {
        if self.atoms.is_empty() {
            return Err(Error::Empty("measure has no atoms"));
        }
        let mut t = rng.gen::<f64>() * self.total();
        for (p, w) in &self.atoms {
            t -= w;
            if t < 0.0 {
                return Ok(p.clone());
            }
        }
        Ok(self.atoms[self.atoms.len() - 1].0.clone())
    }
}

/// The transfer-operator Gibbs measure of a shift potential.
#[derive(Debug, Clone, Copy)]
pub struct ExactGibbs<'a> {
    pub gibbs: &'a SftGibbs,
}

/// Past symbols carried by sampled Gibbs points.
const SAMPLE_PAST: usize = 16;

impl BallMass for ExactGibbs<'_> {
    fn ball_mass(&self, _sys: &System, x: &Point, n: usize, r: f64) -> Result<Option<f64>> {
        let Point::Word(w) = x else { return Err(Error::FamilyMismatch) };
        let m = shift_agreement(r) as i64;
        let word: Vec<u8> = (-(m - 1).max(0)..n as i64 + m - 1).map(|i| w.symbol(i)).collect::<Result<_>>()?;
        Ok(Some(self.gibbs.cylinder_mass(&word)))
    }

    fn sample(&self, _sys: &System, rng: &mut SeededRng, n: usize) -> Result<Point> {
        let g = self.gibbs;
        let len = SAMPLE_PAST + n + 32;
        let mut t = rng.gen::<f64>();
        let mut s = g.stationary.len() - 1;
        for (i, &p) in g.stationary.iter().enumerate() {
            t -= p;
            if t < 0.0 {
                s = i;
                break;
            }
        }
        let mut window: Vec<u8> = (0..g.block).rev().map(|j| ((s / g.p.pow(j as u32)) % g.p) as u8).collect();
        while window.len() < len {
            let mut t = rng.gen::<f64>();
            let edges = &g.transitions[s];
            let mut next = edges[edges.len() - 1].0;
            for &(to, p) in edges {
                t -= p;
                if t < 0.0 {
                    next = to;
                    break;
                }
            }
            window.push((next % g.p) as u8);
            s = next;
        }
        Ok(Point::Word(SymbolWord::new(g.p as u8, window, SAMPLE_PAST)?))
    }
}

/// Lebesgue measure on the cat-map torus, with exact Bowen-ball areas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LebesgueTorus;

/// Quadrature nodes for Bowen-ball areas.
const AREA_NODES: usize = 4096;

impl LebesgueTorus {
    /// Area of `{v : |L^j v| < r, j < n}`. In the orthonormal eigenbasis
    /// this is an intersection of ellipses; past `r(1 + λ) < 1` no other
    /// lattice translate can re-enter the ball.
    pub fn bowen_area(n: usize, r: f64) -> Result<f64> {
        if !(r > 0.0 && r * (1.0 + LAMBDA_U) < 1.0) {
            return Err(Error::param("r", "exact Bowen areas need r < 1/(1 + λ_u)"));
        }
        if n == 0 {
            return Ok(core::f64::consts::PI * r * r);
        }
        // u-extent at stable offset s = r sin θ, integrated in θ by Simpson
        let half_u = |s: f64| -> f64 {
            let mut best = f64::INFINITY;
            let mut lam = 1.0;
            for _ in 0..n {
                let v = (r * r - (s / lam) * (s / lam)).max(0.0).sqrt() / lam;
                best = best.min(v);
                lam *= LAMBDA_U;
            }
            best
        };
        let h = FRAC_PI_2 / AREA_NODES as f64;
        let mut sum = 0.0;
        for i in 0..=AREA_NODES {
            let th = i as f64 * h;
            let f = half_u(r * th.sin()) * r * th.cos();
            let c = if i == 0 || i == AREA_NODES { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            sum += c * f;
        }
        Ok(4.0 * sum * h / 3.0)
    }
}

impl BallMass for LebesgueTorus {
    fn ball_mass(&self, sys: &System, x: &Point, n: usize, r: f64) -> Result<Option<f64>> {
        if !matches!(x, Point::Torus { .. }) || sys.family != crate::systems::Family::CatMap {
            return Err(Error::FamilyMismatch);
        }
        Ok(Some(Self::bowen_area(n, r)?))
    }

    fn sample(&self, _sys: &System, rng: &mut SeededRng, _n: usize) -> Result<Point> {
        Ok(Point::torus(uniform(rng, 0.0, 1.0), uniform(rng, 0.0, 1.0)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbsRow {
    pub n: usize,
    pub min: f64,
    pub max: f64,
    /// `max(max, 1/min)`.
    pub q: f64,
    pub used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbsReport {
    pub rows: Vec<GibbsRow>,
    pub min: f64,
    pub max: f64,
    pub q: f64,
    /// Samples whose ball the measure could not resolve.
    pub skipped: usize,
    /// `q` at the largest `n` over `q` at the smallest, minus one.
    pub window_growth: f64,
}

/// `μ(B_n(x, r)) / e^{-nP̂ + S_n φ(x)}` over `samples` μ-random points for
/// every `n` in `ns`.
#[allow(clippy::too_many_arguments)]
pub fn gibbs_check(
    mu: &dyn BallMass,
    sys: &System,
    phi: &Potential,
    p_hat: f64,
    samples: usize,
    ns: &[usize],
    r: f64,
    seed: u64,
) -> Result<GibbsReport> {
    if ns.is_empty() || samples == 0 {
        return Err(Error::param("ns", "need orders and samples"));
    }
    let n_max = *ns.iter().max().unwrap();
    let mut rng = seeded(seed);
    let points: Vec<Point> = (0..samples).map(|_| mu.sample(sys, &mut rng, n_max)).collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(ns.len());
    let mut skipped = 0;
    for &n in ns {
        let mut row = GibbsRow { n, min: f64::INFINITY, max: 0.0, q: 0.0, used: 0 };
        for x in &points {
            let Some(mass) = mu.ball_mass(sys, x, n, r)? else {
                skipped += 1;
                continue;
            };
            let ratio = mass / (-(n as f64) * p_hat + sys.birkhoff_sum(phi, x, n)?).exp();
            row.min = row.min.min(ratio);
            row.max = row.max.max(ratio);
            row.used += 1;
        }
        if row.used > 0 {
            row.q = row.max.max(1.0 / row.min);
            rows.push(row);
        }
    }
    if rows.is_empty() {
        return Err(Error::Empty("no Bowen ball was resolved"));
    }
    let min = rows.iter().map(|r| r.min).fold(f64::INFINITY, f64::min);
    let max = rows.iter().map(|r| r.max).fold(0.0, f64::max);
    let window_growth = rows[rows.len() - 1].q / rows[0].q - 1.0;
    Ok(GibbsReport { q: max.max(1.0 / min), rows, min, max, skipped, window_growth })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationalReport {
    /// Mean of `-(1/n) log μ(B_n(x, r))`.
    pub entropy_term: f64,
    /// Mean of `(1/n) S_n φ(x)`.
    pub integral_term: f64,
    pub estimate: f64,
    /// `|estimate − P̂|`.
    pub residual: f64,
    pub used: usize,
    pub skipped: usize,
}

/// Entropy from Bowen-ball masses plus the Birkhoff average, against `P̂`.
#[allow(clippy::too_many_arguments)]
pub fn variational_check(
    mu: &dyn BallMass,
    sys: &System,
    phi: &Potential,
    p_hat: f64,
    samples: usize,
    n: usize,
    r: f64,
    seed: u64,
) -> Result<VariationalReport> {
    if n == 0 || samples == 0 {
        return Err(Error::param("n", "need a positive order and samples"));
    }
    let mut rng = seeded(seed);
    let (mut h, mut integral, mut used, mut skipped) = (0.0, 0.0, 0usize, 0usize);
    for _ in 0..samples {
        let x = mu.sample(sys, &mut rng, n)?;
        let Some(mass) = mu.ball_mass(sys, &x, n, r)? else {
            skipped += 1;
            continue;
        };
        h += -mass.ln() / n as f64;
        integral += sys.birkhoff_sum(phi, &x, n)? / n as f64;
        used += 1;
    }
    if used == 0 {
        return Err(Error::Empty("no Bowen ball was resolved"));
    }
    let (entropy_term, integral_term) = (h / used as f64, integral / used as f64);
    let estimate = entropy_term + integral_term;
    Ok(VariationalReport { entropy_term, integral_term, estimate, residual: (estimate - p_hat).abs(), used, skipped })
}
