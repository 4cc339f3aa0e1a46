//! Greedy maximal `(n, r)`-separated subsets of a sample.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::systems::{Family, Point, System};
use crate::Result;

const MAX_CELLS: usize = 48;

/// One axis of the bucket grid.
#[derive(Clone, Copy)]
struct Axis {
    lo: f64,
    extent: f64,
    cells: usize,
    wrap: bool,
}

impl Axis {
    fn new(lo: f64, extent: f64, wrap: bool, r: f64) -> Self {
        let cells = ((extent / r).floor() as usize).clamp(1, MAX_CELLS);
        Axis { lo, extent, cells, wrap }
    }

    fn cell(&self, v: f64) -> usize {
        let u = ((v - self.lo) / self.extent * self.cells as f64).floor();
        if self.wrap {
            (u as i64).rem_euclid(self.cells as i64) as usize
        } else {
            (u.max(0.0) as usize).min(self.cells - 1)
        }
    }

    fn neighbours(&self, c: usize) -> Vec<usize> {
        if self.cells <= 3 {
            return (0..self.cells).collect();
        }
        let c = c as i64;
        let n = self.cells as i64;
        let mut out = Vec::with_capacity(3);
        for d in -1..=1 {
            let j = c + d;
            if self.wrap {
                out.push(j.rem_euclid(n) as usize);
            } else if (0..n).contains(&j) {
                out.push(j as usize);
            }
        }
        out
    }
}

fn axes(sys: &System, r: f64) -> Option<[Axis; 2]> {
    match sys.family {
        Family::CatMap => Some([Axis::new(0.0, 1.0, true, r), Axis::new(0.0, 1.0, true, r)]),
        Family::Solenoid => Some([Axis::new(-1.0, 2.0, false, r), Axis::new(-1.0, 2.0, false, r)]),
        Family::Horseshoe { .. } => Some([Axis::new(0.0, 1.0, false, r), Axis::new(0.0, 1.0, false, r)]),
        _ => None,
    }
}

/// Indices of a greedy maximal `(n, r)`-separated subset, scanning the
/// sample in order. Samples whose orbit cannot be followed for `n` steps are
/// skipped.
pub fn greedy_separated(sys: &System, sample: &[Point], n: usize, r: f64) -> Result<Vec<usize>> {
    let Some(ax) = axes(sys, r) else {
        return naive(sys, sample, n, r);
    };
    // d_n < r forces coordinate gaps < r at time 0 and time n − 1
    let cells = [ax[0].cells, ax[1].cells, ax[0].cells, ax[1].cells];
    let total: usize = cells.iter().product();
    let mut head = vec![u32::MAX; total];
    let mut next: Vec<u32> = Vec::new();
    let mut chosen: Vec<usize> = Vec::new();
    for (idx, x) in sample.iter().enumerate() {
        let Ok(end) = sys.apply(x, n as i64 - 1) else { continue };
        if let Point::Horseshoe { escaped: true, .. } = end {
            continue;
        }
        let (a, b) = (x.plane().expect("geometric"), end.plane().expect("geometric"));
        let key = [ax[0].cell(a[0]), ax[1].cell(a[1]), ax[0].cell(b[0]), ax[1].cell(b[1])];
        let nb: [Vec<usize>; 4] = [
            ax[0].neighbours(key[0]),
            ax[1].neighbours(key[1]),
            ax[0].neighbours(key[2]),
            ax[1].neighbours(key[3]),
        ];
        let mut clash = false;
        'outer: for &i0 in &nb[0] {
            for &i1 in &nb[1] {
                for &i2 in &nb[2] {
                    for &i3 in &nb[3] {
                        let flat = ((i0 * cells[1] + i1) * cells[2] + i2) * cells[3] + i3;
                        let mut cur = head[flat];
                        while cur != u32::MAX {
                            let j = chosen[cur as usize];
                            if sys.dyn_metric(x, &sample[j], n)? < r {
                                clash = true;
                                break 'outer;
                            }
                            cur = next[cur as usize];
                        }
                    }
                }
            }
        }
        if !clash {
            let flat = ((key[0] * cells[1] + key[1]) * cells[2] + key[2]) * cells[3] + key[3];
            next.push(head[flat]);
            head[flat] = chosen.len() as u32;
            chosen.push(idx);
        }
    }
    Ok(chosen)
}

/// Greedy separated subset of a leaf sample sorted by chart coordinate `ts`.
/// Only points with chart gap below `2r / expansion^(n-1)` are compared: on
/// an expanding leaf larger gaps are already `r`-apart at some time `< n`.
pub fn greedy_separated_leaf(sys: &System, ts: &[f64], sample: &[Point], n: usize, r: f64) -> Result<Vec<usize>> {
    let w = 2.0 * r / sys.expansion().powi(n as i32 - 1);
    let mut chosen: Vec<usize> = Vec::new();
    for (idx, x) in sample.iter().enumerate() {
        if let Ok(Point::Horseshoe { escaped: true, .. }) = sys.apply(x, n as i64 - 1) {
            continue;
        }
        let from = chosen.partition_point(|&j| ts[j] <= ts[idx] - w);
        let mut clash = false;
        for &j in &chosen[from..] {
            if sys.dyn_metric(x, &sample[j], n)? < r {
                clash = true;
                break;
            }
        }
        if !clash {
            chosen.push(idx);
        }
    }
    Ok(chosen)
}

fn naive(sys: &System, sample: &[Point], n: usize, r: f64) -> Result<Vec<usize>> {
    let mut chosen: Vec<usize> = Vec::new();
    for (idx, x) in sample.iter().enumerate() {
        let mut clash = false;
        for &j in &chosen {
            if sys.dyn_metric(x, &sample[j], n)? < r {
                clash = true;
                break;
            }
        }
        if !clash {
            chosen.push(idx);
        }
    }
    Ok(chosen)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_matches_quadratic_scan() {
        let sys = System::cat_map();
        let mut rng = crate::rng::seeded(7);
        let sample: Vec<Point> = (0..600)
            .map(|_| Point::torus(crate::rng::uniform(&mut rng, 0.0, 1.0), crate::rng::uniform(&mut rng, 0.0, 1.0)))
            .collect();
        for n in [1, 2, 4] {
            let a = greedy_separated(&sys, &sample, n, 0.08).unwrap();
            let b = naive(&sys, &sample, n, 0.08).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn leaf_window_matches_quadratic_scan() {
        for sys in [System::cat_map(), System::solenoid(), System::horseshoe(0.2, 3.0).unwrap()] {
            let x = match sys.family {
                Family::Horseshoe { .. } => sys.horseshoe_coded(&[0, 1, 1, 0, 1, 0, 0, 1], &[1, 0, 1, 1, 0, 0, 1, 0]).unwrap(),
                Family::Solenoid => sys.apply(&Point::solenoid(0.1, 0.2, 0.3), 20).unwrap(),
                _ => Point::torus(0.3, 0.6),
            };
            let chart = sys.leaf_chart(&x, sys.tau, 1).unwrap();
            let s = chart.samples(&sys, -0.2, 0.2, 1e-3).unwrap();
            let ts: Vec<f64> = s.iter().map(|(t, _)| *t).collect();
            let pts: Vec<Point> = s.into_iter().map(|(_, p)| p).collect();
            for n in [1, 3, 5] {
                let a = greedy_separated_leaf(&sys, &ts, &pts, n, 0.05).unwrap();
                let b: Vec<usize> = naive(&sys, &pts, n, 0.05)
                    .unwrap()
                    .into_iter()
                    .filter(|&i| !matches!(sys.apply(&pts[i], n as i64 - 1), Ok(Point::Horseshoe { escaped: true, .. })))
                    .collect();
                assert_eq!(a.len(), b.len(), "{:?} n={n}", sys.family);
            }
        }
    }
}
