use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::{
    admissible_words, angle_delta, cat_unstable, circle_delta, Family, Point, SymbolWord, System,
};
use crate::{Error, Result};

/// How a chart parametrizes its leaf.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChartGeometry {
    /// `origin + t·dir` (cat map along `e_u`, horseshoe horizontally).
    Segment { origin: [f64; 2], dir: [f64; 2] },
    /// `f^depth(anchor with angle shifted by t / 2^depth)`.
    SolenoidArc { anchor: [f64; 3], depth: usize },
    /// One-sided cylinders hanging below a fixed past.
    Cylinders { p: u8, past: Vec<u8> },
}

/// A parametrization of `V^u_loc(base)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafChart {
    pub base: Point,
    pub tau: f64,
    /// Sample count for geometric leaves, cylinder depth for shifts.
    pub resolution: usize,
    pub geometry: ChartGeometry,
}

impl System {
    pub fn leaf_chart(&self, x: &Point, tau: f64, resolution: usize) -> Result<LeafChart> {
        if resolution == 0 {
            return Err(Error::param("resolution", "must be positive"));
        }
        if !(tau > 0.0) {
            return Err(Error::param("tau", "must be positive"));
        }
        let geometry = match (&self.family, x) {
            (Family::CatMap, Point::Torus { x, y }) => {
                ChartGeometry::Segment { origin: [*x, *y], dir: cat_unstable() }
            }
            (Family::Horseshoe { .. }, Point::Horseshoe { x, y, escaped: false }) => {
                ChartGeometry::Segment { origin: [*x, *y], dir: [1.0, 0.0] }
            }
            (Family::Solenoid, Point::Solenoid { .. }) => {
                let depth = self.solenoid_depth;
                let Point::Solenoid { x, y, theta } = self.apply(x, -(depth as i64))? else {
                    unreachable!()
                };
                ChartGeometry::SolenoidArc { anchor: [x, y, theta], depth }
            }
            (Family::FullShift { p } | Family::Sft { p, .. }, Point::Word(w)) if w.p == *p => {
                if !self.is_admissible(&w.window) {
                    return Err(Error::param("base", "base word is not admissible"));
                }
                ChartGeometry::Cylinders { p: *p, past: w.past().to_vec() }
            }
            (Family::Horseshoe { .. }, Point::Horseshoe { escaped: true, .. }) => {
                return Err(Error::Escaped)
            }
            _ => return Err(Error::FamilyMismatch),
        };
        Ok(LeafChart { base: x.clone(), tau, resolution, geometry })
    }
}

impl LeafChart {
    pub fn is_cylinder_tree(&self) -> bool {
        matches!(self.geometry, ChartGeometry::Cylinders { .. })
    }

    /// The fixed past of a shift chart.
    pub fn past(&self) -> Result<&[u8]> {
        match &self.geometry {
            ChartGeometry::Cylinders { past, .. } => Ok(past),
            _ => Err(Error::Unsupported("past of a geometric chart")),
        }
    }

    /// Chart point at coordinate `t`.
    pub fn point(&self, sys: &System, t: f64) -> Result<Point> {
        match &self.geometry {
            ChartGeometry::Segment { origin, dir } => match sys.family {
                Family::CatMap => Ok(Point::torus(origin[0] + t * dir[0], origin[1] + t * dir[1])),
                _ => Ok(Point::horseshoe(origin[0] + t * dir[0], origin[1] + t * dir[1])),
            },
            ChartGeometry::SolenoidArc { anchor, depth } => {
                let start = Point::Solenoid {
                    x: anchor[0],
                    y: anchor[1],
                    theta: anchor[2] + t / 2f64.powi(*depth as i32),
                };
                sys.apply(&start, *depth as i64)
            }
            ChartGeometry::Cylinders { .. } => Err(Error::Unsupported("coordinate on a cylinder chart")),
        }
    }

    /// Leaf coordinate of a point on the chart.
    pub fn coordinate(&self, q: &Point) -> Result<f64> {
        match (&self.geometry, q) {
            (ChartGeometry::Segment { origin, dir }, Point::Torus { x, y }) => {
                Ok(circle_delta(*x, origin[0]) * dir[0] + circle_delta(*y, origin[1]) * dir[1])
            }
            (ChartGeometry::Segment { origin, .. }, Point::Horseshoe { x, .. }) => Ok(x - origin[0]),
            (ChartGeometry::SolenoidArc { .. }, Point::Solenoid { theta, .. }) => {
                let Point::Solenoid { theta: t0, .. } = self.base else { unreachable!() };
                Ok(angle_delta(*theta, t0))
            }
            _ => Err(Error::FamilyMismatch),
        }
    }

    /// Whether `q` lies on the charted leaf (to rounding).
    pub fn on_leaf(&self, sys: &System, q: &Point) -> Result<bool> {
        match (&self.geometry, q) {
            (ChartGeometry::Cylinders { past, .. }, Point::Word(w)) => {
                let common = past.len().min(w.origin);
                Ok(past[past.len() - common..] == w.past()[w.origin - common..])
            }
            (ChartGeometry::Segment { origin, .. }, Point::Horseshoe { y, .. }) => {
                Ok((y - origin[1]).abs() < 1e-12)
            }
            (ChartGeometry::Segment { .. }, Point::Torus { .. })
            | (ChartGeometry::SolenoidArc { .. }, Point::Solenoid { .. }) => {
                let t = self.coordinate(q)?;
                let on = self.point(sys, t)?;
                Ok(sys.metric(&on, q)? < 1e-9)
            }
            _ => Err(Error::FamilyMismatch),
        }
    }

    /// Sample points of `X = V^u_loc ∩ Λ` with coordinates in `[lo, hi]`,
    /// at most `spacing` apart, sorted by coordinate.
    pub fn samples(&self, sys: &System, lo: f64, hi: f64, spacing: f64) -> Result<Vec<(f64, Point)>> {
        if !(spacing > 0.0) || !(hi >= lo) {
            return Err(Error::param("spacing", "need spacing > 0 and lo <= hi"));
        }
        match (&self.geometry, &sys.family) {
            (ChartGeometry::Segment { origin, .. }, Family::Horseshoe { beta, .. }) => {
                let depth = ((1.0 / spacing).ln() / beta.ln()).ceil().max(0.0) as usize;
                let xs = cantor_points(*beta, depth, origin[0] + lo, origin[0] + hi);
                Ok(xs
                    .into_iter()
                    .map(|x| (x - origin[0], Point::horseshoe(x, origin[1])))
                    .collect())
            }
            (ChartGeometry::Cylinders { .. }, _) => Err(Error::Unsupported("samples of a cylinder chart")),
            _ => {
                let count = ((hi - lo) / spacing).ceil().max(1.0) as usize;
                let h = (hi - lo) / count as f64;
                (0..count)
                    .map(|i| {
                        let t = lo + (i as f64 + 0.5) * h;
                        Ok((t, self.point(sys, t)?))
                    })
                    .collect()
            }
        }
    }

    /// Admissible one-symbol extensions of a node of the cylinder tree.
    pub fn children(&self, sys: &System, node: &[u8]) -> Result<Vec<u8>> {
        let past = self.past()?;
        let last = node.last().or(past.last()).copied();
        let p = sys.alphabet().unwrap_or(0);
        Ok((0..p).filter(|&s| last.is_none_or(|a| sys.allowed(a, s))).collect())
    }

    /// All admissible depth-`n` cylinders of the tree, lexicographically.
    pub fn cylinders(&self, sys: &System, n: usize) -> Result<Vec<Vec<u8>>> {
        let past = self.past()?;
        Ok(admissible_words(sys, past.last().copied(), n))
    }

    /// Word of the leaf with the given future, padded by `ext` symbols of
    /// the least admissible continuation.
    pub fn word(&self, sys: &System, future: &[u8], ext: usize) -> Result<SymbolWord> {
        let ChartGeometry::Cylinders { p, past } = &self.geometry else {
            return Err(Error::Unsupported("word on a geometric chart"));
        };
        let mut fut = future.to_vec();
        least_continuation(sys, &mut fut, past.last().copied(), ext);
        SymbolWord::from_parts(*p, past, &fut)
    }
}

/// Append `ext` symbols, each the least successor of the previous one.
pub fn least_continuation(sys: &System, word: &mut Vec<u8>, prev: Option<u8>, ext: usize) {
    for _ in 0..ext {
        let next = match word.last().copied().or(prev) {
            Some(a) => sys.least_successor(a),
            None => 0,
        };
        word.push(next);
    }
}

/// Left endpoints of the depth-`depth` construction intervals of the
/// two-piece Cantor set with ratio `1/beta`, clipped to `[lo, hi]`.
pub fn cantor_points(beta: f64, depth: usize, lo: f64, hi: f64) -> Vec<f64> {
    let c = 1.0 - 1.0 / beta;
    let mut out = Vec::new();
    #[allow(clippy::too_many_arguments)]
    fn rec(c: f64, beta: f64, left: f64, width: f64, level: usize, depth: usize, lo: f64, hi: f64, out: &mut Vec<f64>) {
        if left > hi || left + width < lo {
            return;
        }
        if level == depth {
            if left >= lo {
                out.push(left);
            }
            return;
        }
        let w = width / beta;
        rec(c, beta, left, w, level + 1, depth, lo, hi, out);
        rec(c, beta, left + c * width, w, level + 1, depth, lo, hi, out);
    }
    rec(c, beta, 0.0, 1.0, 0, depth, lo, hi, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cat_chart_is_unstable_segment() {
        let sys = System::cat_map();
        let chart = sys.leaf_chart(&Point::torus(0.2, 0.3), 0.3, 100).unwrap();
        assert_eq!(chart.point(&sys, 0.0).unwrap(), Point::torus(0.2, 0.3));
        let q = chart.point(&sys, 0.1).unwrap();
        assert!((chart.coordinate(&q).unwrap() - 0.1).abs() < 1e-15);
        assert!(chart.on_leaf(&sys, &q).unwrap());
        assert!(!chart.on_leaf(&sys, &Point::torus(0.2, 0.35)).unwrap());
    }

    #[test]
    fn full_shift_depth_three_tree() {
        let sys = System::full_shift(2).unwrap();
        let base = Point::Word(SymbolWord::from_parts(2, &[1, 0], &[0, 1, 1]).unwrap());
        let chart = sys.leaf_chart(&base, 1.0, 3).unwrap();
        assert_eq!(chart.cylinders(&sys, 3).unwrap().len(), 8);
    }

    #[test]
    fn sft_children_are_admissible_extensions() {
        let sys = System::sft(alloc::vec![alloc::vec![1, 1], alloc::vec![1, 0]]).unwrap();
        let base = Point::Word(SymbolWord::from_parts(2, &[1], &[0]).unwrap());
        let chart = sys.leaf_chart(&base, 1.0, 4).unwrap();
        assert_eq!(chart.children(&sys, &[]).unwrap(), alloc::vec![0]);
        assert_eq!(chart.children(&sys, &[0]).unwrap(), alloc::vec![0, 1]);
        assert_eq!(chart.children(&sys, &[0, 1]).unwrap(), alloc::vec![0]);
    }

    #[test]
    fn solenoid_chart_passes_through_base() {
        let sys = System::solenoid();
        let base = sys.attractor_point(1.0, 0b1011_0110_0101).unwrap();
        let chart = sys.leaf_chart(&base, 0.3, 10).unwrap();
        let back = chart.point(&sys, 0.0).unwrap();
        assert!(sys.metric(&back, &base).unwrap() < 1e-6);
        let q = chart.point(&sys, 0.2).unwrap();
        assert!((chart.coordinate(&q).unwrap() - 0.2).abs() < 1e-9);
    }

    #[test]
    fn cantor_points_count() {
        assert_eq!(cantor_points(3.0, 5, 0.0, 1.0).len(), 32);
        assert_eq!(cantor_points(3.0, 5, 0.0, 1.0 / 3.0 + 1e-12).len(), 16);
    }
}
