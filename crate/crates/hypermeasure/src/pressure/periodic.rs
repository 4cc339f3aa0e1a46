//! Exact enumeration of `Per_n`.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::ln_sum;
use crate::systems::potential::ShiftWindow;
use crate::systems::{Family, Point, Potential, SymbolWord, System};
use crate::{Error, Result};

/// Largest `Per_n` materialized as a point list.
pub const MAX_PERIODIC: u64 = 1 << 22;

/// Padding on each side of a periodic word's stored window.
const WORD_PAD: i64 = 64;

/// `L^n − I` for the cat map matrix.
fn cat_power_minus_identity(n: usize) -> [[i128; 2]; 2] {
    let mut m = [[1i128, 0], [0, 1]];
    for _ in 0..n {
        m = [[2 * m[0][0] + m[1][0], 2 * m[0][1] + m[1][1]], [m[0][0] + m[1][0], m[0][1] + m[1][1]]];
    }
    m[0][0] -= 1;
    m[1][1] -= 1;
    m
}

/// `#Per_n`.
pub fn periodic_count(sys: &System, n: usize) -> Result<u64> {
    if n == 0 {
        return Err(Error::param("n", "period must be positive"));
    }
    match &sys.family {
        Family::CatMap => {
            let m = cat_power_minus_identity(n);
            let det = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).unsigned_abs();
            u64::try_from(det).map_err(|_| Error::param("n", "period too large"))
        }
        Family::Horseshoe { .. } | Family::FullShift { .. } | Family::Sft { .. } => {
            let zero = Potential::zero();
            let ln = symbolic_trace(sys, &zero, n)?;
            Ok(ln.exp().round() as u64)
        }
        Family::Solenoid => Err(Error::Unsupported("periodic points of the solenoid")),
    }
}

fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    if b == 0 {
        (a.abs(), a.signum(), 0)
    } else {
        let (g, x, y) = ext_gcd(b, a % b);
        (g, y, x - (a / b) * y)
    }
}

/// All points of `Per_n` on the cat map: coset representatives of
/// `Z² / (L^n − I) Z²` from the column Hermite form, mapped back by the adjugate.
fn cat_periodic(n: usize) -> Result<Vec<Point>> {
    let m = cat_power_minus_identity(n);
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det.unsigned_abs() > MAX_PERIODIC as u128 {
        return Err(Error::param("n", "too many periodic points to enumerate"));
    }
    // columns u c1 + v c2 = (g, *) and (m01/g) c1 − (m00/g) c2 = (0, c)
    let (g, _, _) = ext_gcd(m[0][0], m[0][1]);
    let c = ((m[0][1] / g) * m[1][0] - (m[0][0] / g) * m[1][1]).abs();
    debug_assert_eq!(g * c, det.abs());
    let adj = [[m[1][1], -m[0][1]], [-m[1][0], m[0][0]]];
    let d = det;
    let mut out = Vec::with_capacity((g * c) as usize);
    for i in 0..g {
        for j in 0..c {
            let xn = (adj[0][0] * i + adj[0][1] * j).rem_euclid(d.abs());
            let yn = (adj[1][0] * i + adj[1][1] * j).rem_euclid(d.abs());
            let (xn, yn) = if d < 0 { ((d.abs() - xn) % d.abs(), (d.abs() - yn) % d.abs()) } else { (xn, yn) };
            out.push(Point::torus(xn as f64 / d.abs() as f64, yn as f64 / d.abs() as f64));
        }
    }
    Ok(out)
}

/// Cyclically admissible words of length `n`.
pub fn periodic_words(sys: &System, n: usize) -> Result<Vec<Vec<u8>>> {
    let p = match &sys.family {
        Family::Horseshoe { .. } => 2u8,
        _ => sys.alphabet().ok_or(Error::Unsupported("periodic words of a geometric system"))?,
    };
    if (p as f64).powi(n as i32) > MAX_PERIODIC as f64 {
        return Err(Error::param("n", "too many periodic points to enumerate"));
    }
    let words = if sys.is_shift() {
        crate::systems::admissible_words(sys, None, n)
    } else {
        (0..1usize << n).map(|c| (0..n).map(|j| ((c >> (n - 1 - j)) & 1) as u8).collect()).collect()
    };
    Ok(words
        .into_iter()
        .filter(|w| sys.allowed(w[n - 1], w[0]))
        .collect())
}

/// The periodic sequence `…w w . w w…` stored with generous padding.
pub fn periodic_word(p: u8, w: &[u8]) -> SymbolWord {
    let n = w.len() as i64;
    let reps = (WORD_PAD + n - 1) / n;
    let lo = -reps * n;
    let hi = n + reps * n;
    let window: Vec<u8> = (lo..hi).map(|i| w[i.rem_euclid(n) as usize]).collect();
    SymbolWord { p, window, origin: (-lo) as usize }
}

fn horseshoe_periodic(sys: &System, w: &[u8]) -> Result<Point> {
    let n = w.len();
    let future: Vec<u8> = (0..64).map(|i| w[i % n]).collect();
    let past: Vec<u8> = (1..=64).map(|i| w[(n * 64 - i) % n]).collect();
    sys.horseshoe_coded(&future, &past)
}

/// All points of `Per_n`, in a canonical order.
pub fn periodic_points(sys: &System, n: usize) -> Result<Vec<Point>> {
    if n == 0 {
        return Err(Error::param("n", "period must be positive"));
    }
    match &sys.family {
        Family::CatMap => cat_periodic(n),
        Family::Solenoid => Err(Error::Unsupported("periodic points of the solenoid")),
        Family::Horseshoe { .. } => periodic_words(sys, n)?.iter().map(|w| horseshoe_periodic(sys, w)).collect(),
        Family::FullShift { p } | Family::Sft { p, .. } => {
            Ok(periodic_words(sys, n)?.iter().map(|w| Point::Word(periodic_word(*p, w))).collect())
        }
    }
}

/// `S_n φ` along a periodic orbit, evaluating each orbit point exactly.
pub fn periodic_birkhoff(sys: &System, phi: &Potential, x: &Point, n: usize) -> Result<f64> {
    match (x, &sys.family) {
        (Point::Horseshoe { .. }, Family::Horseshoe { .. }) => {
            // orbit points from rotated codes, avoiding expansion of round-off
            let w = horseshoe_code(sys, x, n)?;
            let mut s = 0.0;
            for k in 0..n {
                let rot: Vec<u8> = (0..n).map(|j| w[(j + k) % n]).collect();
                s += phi.eval(sys, &horseshoe_periodic(sys, &rot)?)?;
            }
            Ok(s)
        }
        _ => sys.birkhoff_sum(phi, x, n),
    }
}

fn horseshoe_code(sys: &System, x: &Point, n: usize) -> Result<Vec<u8>> {
    let Family::Horseshoe { beta, .. } = sys.family else { return Err(Error::FamilyMismatch) };
    let Point::Horseshoe { x: mut u, .. } = *x else { return Err(Error::FamilyMismatch) };
    let mut w = Vec::with_capacity(n);
    for _ in 0..n {
        if u <= 1.0 / beta + 1e-12 {
            w.push(0);
            u *= beta;
        } else {
            w.push(1);
            u = beta * (u - (1.0 - 1.0 / beta));
        }
    }
    Ok(w)
}

/// `ln tr(B^n)` for the weighted block transition matrix of a symbolic
/// potential: the periodic partition sum of a shift.
pub(crate) fn symbolic_trace(sys: &System, phi: &Potential, n: usize) -> Result<f64> {
    if let Family::Horseshoe { .. } = sys.family {
        // two-symbol full shift with a constant potential
        let c = phi.eval(sys, &Point::horseshoe(0.0, 0.0))?;
        return Ok(n as f64 * (2f64.ln() + c));
    }
    let win = phi.shift_window(sys)?;
    let graph = BlockGraph::new(sys, &win);
    let mut diag = Vec::with_capacity(graph.states);
    for s in 0..graph.states {
        if !graph.live[s] {
            continue;
        }
        let mut v = vec![0.0; graph.states];
        v[s] = 1.0;
        let mut scale = 0.0;
        for _ in 0..n {
            v = graph.step(&v);
            let m = v.iter().cloned().fold(0.0, f64::max);
            if m == 0.0 {
                break;
            }
            for x in v.iter_mut() {
                *x /= m;
            }
            scale += m.ln();
        }
        if v[s] > 0.0 {
            diag.push(v[s].ln() + scale);
        }
    }
    Ok(ln_sum(diag))
}

/// Blocks of `max(depth − 1, 1)` symbols with edges weighted by `e^φ`.
pub(crate) struct BlockGraph {
    pub p: usize,
    pub block: usize,
    pub states: usize,
    pub live: Vec<bool>,
    /// `(target, weight)` per state.
    pub edges: Vec<Vec<(usize, f64)>>,
}

impl BlockGraph {
    pub fn new(sys: &System, win: &ShiftWindow) -> Self {
        let p = win.p;
        let block = win.depth.saturating_sub(1).max(1);
        let states = p.pow(block as u32);
        let low = p.pow(block as u32 - 1);
        let digits = |mut b: usize| {
            let mut d = vec![0u8; block];
            for j in (0..block).rev() {
                d[j] = (b % p) as u8;
                b /= p;
            }
            d
        };
        let live: Vec<bool> = (0..states).map(|s| sys.is_admissible(&digits(s))).collect();
        let mut edges = vec![Vec::new(); states];
        for s in 0..states {
            if !live[s] {
                continue;
            }
            let last = (s % p) as u8;
            for c in 0..p {
                if !sys.allowed(last, c as u8) {
                    continue;
                }
                let t = (s % low) * p + c;
                let w = if win.depth == 1 { win.values[s / low] } else { win.values[s * p + c] };
                edges[s].push((t, w.exp()));
            }
        }
        BlockGraph { p, block, states, live, edges }
    }

    /// `v B`.
    pub fn step(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.states];
        for (s, es) in self.edges.iter().enumerate() {
            if v[s] == 0.0 {
                continue;
            }
            for &(t, w) in es {
                out[t] += v[s] * w;
            }
        }
        out
    }

    pub fn digits(&self, mut b: usize) -> Vec<u8> {
        let mut d = vec![0u8; self.block];
        for j in (0..self.block).rev() {
            d[j] = (b % self.p) as u8;
            b /= self.p;
        }
        d
    }

    pub fn index(&self, block: &[u8]) -> usize {
        block.iter().fold(0, |acc, &s| acc * self.p + s as usize)
    }
}
