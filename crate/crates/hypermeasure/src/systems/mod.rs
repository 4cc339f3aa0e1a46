//! Model systems: phase spaces, maps, metrics and the Smale bracket.

use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

mod chart;
pub mod potential;

pub use chart::{cantor_points, least_continuation, ChartGeometry, LeafChart};
pub use potential::{Potential, PotentialKind};

/// Unstable eigenvalue `(3 + √5)/2` of the cat map matrix `[[2,1],[1,1]]`.
pub const LAMBDA_U: f64 = 2.618_033_988_749_895;
/// Stable eigenvalue `(3 − √5)/2`.
pub const LAMBDA_S: f64 = 0.381_966_011_250_105_1;

/// Unit unstable eigenvector of the cat map.
pub fn cat_unstable() -> [f64; 2] {
    let a = (5f64.sqrt() - 1.0) / 2.0;
    let norm = (1.0 + a * a).sqrt();
    [1.0 / norm, a / norm]
}

/// Unit stable eigenvector of the cat map, orthogonal to [`cat_unstable`].
pub fn cat_stable() -> [f64; 2] {
    let u = cat_unstable();
    [-u[1], u[0]]
}

/// A two-sided symbol sequence known on a finite window.
///
/// `window[origin]` is the symbol at index 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SymbolWord {
    pub p: u8,
    pub window: Vec<u8>,
    pub origin: usize,
}

impl SymbolWord {
    pub fn new(p: u8, window: Vec<u8>, origin: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::param("p", "alphabet must be nonempty"));
        }
        if window.is_empty() || origin >= window.len() {
            return Err(Error::param("window", "window must be nonempty and contain the origin"));
        }
        if window.iter().any(|&s| s >= p) {
            return Err(Error::param("window", "symbol outside the alphabet"));
        }
        Ok(SymbolWord { p, window, origin })
    }

    /// Word with the given past (indices `-past.len()..0`) and future
    /// (indices `0..future.len()`).
    pub fn from_parts(p: u8, past: &[u8], future: &[u8]) -> Result<Self> {
        let mut window = past.to_vec();
        window.extend_from_slice(future);
        SymbolWord::new(p, window, past.len())
    }

    /// Lowest stored index (inclusive).
    pub fn lo(&self) -> i64 {
        -(self.origin as i64)
    }

    /// One past the highest stored index.
    pub fn hi(&self) -> i64 {
        (self.window.len() - self.origin) as i64
    }

    pub fn get(&self, i: i64) -> Option<u8> {
        let j = self.origin as i64 + i;
        if j < 0 || j as usize >= self.window.len() {
            None
        } else {
            Some(self.window[j as usize])
        }
    }

    pub fn symbol(&self, i: i64) -> Result<u8> {
        self.get(i).ok_or(Error::WindowExhausted { index: i })
    }

    pub fn past(&self) -> &[u8] {
        &self.window[..self.origin]
    }

    pub fn future(&self) -> &[u8] {
        &self.window[self.origin..]
    }
}

/// A point in one of the built-in phase spaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Point {
    Torus { x: f64, y: f64 },
    Solenoid { x: f64, y: f64, theta: f64 },
    Horseshoe { x: f64, y: f64, escaped: bool },
    Word(SymbolWord),
}

impl Point {
    pub fn torus(x: f64, y: f64) -> Self {
        Point::Torus { x: wrap_unit(x), y: wrap_unit(y) }
    }

    pub fn solenoid(x: f64, y: f64, theta: f64) -> Self {
        Point::Solenoid { x, y, theta: wrap_angle(theta) }
    }

    pub fn horseshoe(x: f64, y: f64) -> Self {
        Point::Horseshoe { x, y, escaped: false }
    }

    pub fn as_word(&self) -> Option<&SymbolWord> {
        match self {
            Point::Word(w) => Some(w),
            _ => None,
        }
    }

    /// Planar coordinates used for spatial indexing; `None` for words.
    pub fn plane(&self) -> Option<[f64; 2]> {
        match *self {
            Point::Torus { x, y } | Point::Solenoid { x, y, .. } | Point::Horseshoe { x, y, .. } => {
                Some([x, y])
            }
            Point::Word(_) => None,
        }
    }
}

/// Reduce to `[0, 1)`.
pub fn wrap_unit(x: f64) -> f64 {
    let w = x - x.floor();
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

/// Reduce to `[0, 2π)`.
pub fn wrap_angle(t: f64) -> f64 {
    let w = t - TAU * (t / TAU).floor();
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Signed representative of `a − b` on the unit circle, in `[-1/2, 1/2)`.
pub fn circle_delta(a: f64, b: f64) -> f64 {
    let d = a - b;
    d - (d + 0.5).floor()
}

/// Signed representative of `a − b` on the angle circle, in `[-π, π)`.
pub fn angle_delta(a: f64, b: f64) -> f64 {
    let d = a - b;
    d - TAU * ((d + PI) / TAU).floor()
}

/// The family tag with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    CatMap,
    Solenoid,
    Horseshoe { alpha: f64, beta: f64 },
    FullShift { p: u8 },
    Sft { p: u8, matrix: Vec<Vec<u8>> },
}

/// A model system together with the discretization constants used on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct System {
    pub family: Family,
    /// Leaf size τ.
    pub tau: f64,
    /// Largest distance at which the bracket is evaluated.
    pub eps_bracket: f64,
    /// Depth of the backward refinement used for solenoid leaves.
    pub solenoid_depth: usize,
}

impl System {
    pub fn new(family: Family) -> Result<Self> {
        match &family {
            Family::Horseshoe { alpha, beta } => {
                if !(*alpha > 0.0 && *alpha < 0.5) {
                    return Err(Error::param("alpha", "horseshoe needs 0 < alpha < 1/2"));
                }
                if !(*beta > 2.0 && beta.is_finite()) {
                    return Err(Error::param("beta", "horseshoe needs beta > 2"));
                }
            }
            Family::FullShift { p } => {
                if *p < 2 {
                    return Err(Error::param("p", "full shift needs at least two symbols"));
                }
            }
            Family::Sft { p, matrix } => {
                let p = *p as usize;
                if p < 1 || matrix.len() != p || matrix.iter().any(|row| row.len() != p) {
                    return Err(Error::param("matrix", "transition matrix must be p x p"));
                }
                if matrix.iter().flatten().any(|&e| e > 1) {
                    return Err(Error::param("matrix", "entries must be 0 or 1"));
                }
                for a in 0..p {
                    if matrix[a].iter().all(|&e| e == 0) {
                        return Err(Error::param("matrix", alloc::format!("row {a} is all zero")));
                    }
                    if (0..p).all(|b| matrix[b][a] == 0) {
                        return Err(Error::param("matrix", alloc::format!("column {a} is all zero")));
                    }
                }
            }
            Family::CatMap | Family::Solenoid => {}
        }
        let (tau, eps_bracket) = match &family {
            Family::CatMap => (0.3, 0.2),
            Family::Solenoid => (0.3, 0.3),
            Family::Horseshoe { alpha, beta } => (0.3, alpha.min(1.0 / beta) / 2.0),
            Family::FullShift { .. } | Family::Sft { .. } => (3.0, 0.5),
        };
        Ok(System { family, tau, eps_bracket, solenoid_depth: 14 })
    }

    pub fn cat_map() -> Self {
        System::new(Family::CatMap).expect("valid")
    }

    pub fn solenoid() -> Self {
        System::new(Family::Solenoid).expect("valid")
    }

    pub fn horseshoe(alpha: f64, beta: f64) -> Result<Self> {
        System::new(Family::Horseshoe { alpha, beta })
    }

    pub fn full_shift(p: u8) -> Result<Self> {
        System::new(Family::FullShift { p })
    }

    pub fn sft(matrix: Vec<Vec<u8>>) -> Result<Self> {
        let p = u8::try_from(matrix.len()).map_err(|_| Error::param("matrix", "too many symbols"))?;
        System::new(Family::Sft { p, matrix })
    }

    pub fn with_tau(mut self, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::param("tau", "must be positive"));
        }
        self.tau = tau;
        Ok(self)
    }

    pub fn is_shift(&self) -> bool {
        matches!(self.family, Family::FullShift { .. } | Family::Sft { .. })
    }

    pub fn alphabet(&self) -> Option<u8> {
        match &self.family {
            Family::FullShift { p } | Family::Sft { p, .. } => Some(*p),
            _ => None,
        }
    }

    /// Whether `a → b` is an allowed transition (always true off shifts).
    #[inline]
    pub fn allowed(&self, a: u8, b: u8) -> bool {
        match &self.family {
            Family::Sft { matrix, .. } => matrix[a as usize][b as usize] == 1,
            _ => true,
        }
    }

    /// Whether every stored transition of the word is admissible.
    pub fn is_admissible(&self, w: &[u8]) -> bool {
        w.windows(2).all(|t| self.allowed(t[0], t[1]))
    }

    /// Smallest symbol that may follow `a`.
    pub fn least_successor(&self, a: u8) -> u8 {
        let p = self.alphabet().unwrap_or(1);
        (0..p).find(|&b| self.allowed(a, b)).unwrap_or(0)
    }

    /// Smallest symbol that may precede `b`.
    pub fn least_predecessor(&self, b: u8) -> u8 {
        let p = self.alphabet().unwrap_or(1);
        (0..p).find(|&a| self.allowed(a, b)).unwrap_or(0)
    }

    /// Symbol transition matrix (1 on allowed transitions).
    pub fn transition_matrix(&self) -> Vec<Vec<u8>> {
        let p = self.alphabet().unwrap_or(0) as usize;
        (0..p)
            .map(|a| (0..p).map(|b| self.allowed(a as u8, b as u8) as u8).collect())
            .collect()
    }

    /// Contraction rate λ of Prop 3.1(4) style bounds.
    pub fn lambda(&self) -> f64 {
        match &self.family {
            Family::CatMap => LAMBDA_S,
            Family::Solenoid => 0.25,
            Family::Horseshoe { alpha, beta } => alpha.max(1.0 / beta),
            Family::FullShift { .. } | Family::Sft { .. } => 0.5,
        }
    }

    /// Unstable expansion factor per step (the unstable Jacobian on the
    /// built-ins, which is constant). Shifts use the metric base 2.
    pub fn expansion(&self) -> f64 {
        match &self.family {
            Family::CatMap => LAMBDA_U,
            Family::Solenoid => 2.0,
            Family::Horseshoe { beta, .. } => *beta,
            Family::FullShift { .. } | Family::Sft { .. } => 2.0,
        }
    }

    pub fn unstable_dim(&self) -> usize {
        1
    }

    fn check_point(&self, p: &Point) -> Result<()> {
        let ok = match (&self.family, p) {
            (Family::CatMap, Point::Torus { .. }) => true,
            (Family::Solenoid, Point::Solenoid { .. }) => true,
            (Family::Horseshoe { .. }, Point::Horseshoe { .. }) => true,
            (Family::FullShift { p }, Point::Word(w)) | (Family::Sft { p, .. }, Point::Word(w)) => {
                w.p == *p
            }
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::FamilyMismatch)
        }
    }

    /// Ambient metric `d(x, y)`.
    pub fn metric(&self, a: &Point, b: &Point) -> Result<f64> {
        self.check_point(a)?;
        self.check_point(b)?;
        Ok(match (a, b) {
            (Point::Torus { x: x1, y: y1 }, Point::Torus { x: x2, y: y2 }) => {
                circle_delta(*x1, *x2).hypot(circle_delta(*y1, *y2))
            }
            (
                Point::Solenoid { x: x1, y: y1, theta: t1 },
                Point::Solenoid { x: x2, y: y2, theta: t2 },
            ) => {
                let dt = angle_delta(*t1, *t2);
                ((x1 - x2).powi(2) + (y1 - y2).powi(2) + dt * dt).sqrt()
            }
            (Point::Horseshoe { x: x1, y: y1, .. }, Point::Horseshoe { x: x2, y: y2, .. }) => {
                (x1 - x2).hypot(y1 - y2)
            }
            (Point::Word(u), Point::Word(v)) => word_distance(u, v),
            _ => unreachable!("checked above"),
        })
    }

    /// `f^steps(p)`.
    pub fn apply(&self, p: &Point, steps: i64) -> Result<Point> {
        self.check_point(p)?;
        if let Point::Word(w) = p {
            let origin = w.origin as i64 + steps;
            if origin < 0 || origin >= w.window.len() as i64 {
                return Err(Error::WindowExhausted { index: steps });
            }
            return Ok(Point::Word(SymbolWord { p: w.p, window: w.window.clone(), origin: origin as usize }));
        }
        let mut q = p.clone();
        if steps >= 0 {
            for _ in 0..steps {
                q = self.forward(&q)?;
            }
        } else {
            for _ in 0..(-steps) {
                q = self.backward(&q)?;
            }
        }
        Ok(q)
    }

    fn forward(&self, p: &Point) -> Result<Point> {
        Ok(match (&self.family, p) {
            (Family::CatMap, Point::Torus { x, y }) => Point::torus(2.0 * x + y, x + y),
            (Family::Solenoid, Point::Solenoid { x, y, theta }) => Point::Solenoid {
                x: 0.25 * x + 0.5 * theta.cos(),
                y: 0.25 * y + 0.5 * theta.sin(),
                theta: wrap_angle(2.0 * theta),
            },
            (Family::Horseshoe { alpha, beta }, Point::Horseshoe { x, y, escaped }) => {
                if *escaped {
                    return Err(Error::Escaped);
                }
                horseshoe_forward(*alpha, *beta, *x, *y)
            }
            _ => return Err(Error::FamilyMismatch),
        })
    }

    fn backward(&self, p: &Point) -> Result<Point> {
        match (&self.family, p) {
            (Family::CatMap, Point::Torus { x, y }) => Ok(Point::torus(x - y, 2.0 * y - x)),
            (Family::Solenoid, Point::Solenoid { x, y, theta }) => {
                for branch in [0.0, PI] {
                    let t = theta / 2.0 + branch;
                    let px = 4.0 * (x - 0.5 * t.cos());
                    let py = 4.0 * (y - 0.5 * t.sin());
                    if px * px + py * py < 1.0 {
                        return Ok(Point::Solenoid { x: px, y: py, theta: wrap_angle(t) });
                    }
                }
                Err(Error::InverseUndefined("solenoid point outside f(U)"))
            }
            (Family::Horseshoe { alpha, beta }, Point::Horseshoe { x, y, escaped }) => {
                if *escaped {
                    return Err(Error::Escaped);
                }
                horseshoe_backward(*alpha, *beta, *x, *y)
            }
            _ => Err(Error::FamilyMismatch),
        }
    }

    /// Dynamical metric `d_n(x, y) = max_{0≤k<n} d(f^k x, f^k y)`.
    pub fn dyn_metric(&self, x: &Point, y: &Point, n: usize) -> Result<f64> {
        if n == 0 {
            return Err(Error::param("n", "dynamical metric needs n >= 1"));
        }
        self.check_point(x)?;
        self.check_point(y)?;
        if let (Point::Word(u), Point::Word(v)) = (x, y) {
            return word_dyn_distance(u, v, n);
        }
        let (mut a, mut b) = (x.clone(), y.clone());
        let mut d = self.metric(&a, &b)?;
        for _ in 1..n {
            a = self.forward(&a)?;
            b = self.forward(&b)?;
            d = d.max(self.metric(&a, &b)?);
        }
        Ok(d)
    }

    /// `q ∈ B_n(center, r)`.
    pub fn bowen_ball_contains(&self, center: &Point, r: f64, n: usize, q: &Point) -> Result<bool> {
        Ok(self.dyn_metric(center, q, n)? < r)
    }

    /// `q ∈ B^u_n(center, r)` with `q` constrained to the chart's leaf.
    pub fn u_bowen_ball_contains(
        &self,
        chart: &LeafChart,
        center: &Point,
        r: f64,
        n: usize,
        q: &Point,
    ) -> Result<bool> {
        if !chart.on_leaf(self, q)? || !chart.on_leaf(self, center)? {
            return Ok(false);
        }
        self.bowen_ball_contains(center, r, n, q)
    }

    /// `S_n φ(p)`.
    pub fn birkhoff_sum(&self, phi: &Potential, p: &Point, n: usize) -> Result<f64> {
        self.check_point(p)?;
        if let Point::Word(w) = p {
            return phi.word_birkhoff(self, w, 0, n);
        }
        let mut q = p.clone();
        let mut s = 0.0;
        for k in 0..n {
            if k > 0 {
                q = self.forward(&q)?;
            }
            if let Point::Horseshoe { escaped: true, .. } = q {
                return Err(Error::Escaped);
            }
            s += phi.eval(self, &q)?;
        }
        Ok(s)
    }

    /// `[x, y] = V^s_loc(x) ∩ V^u_loc(y)`.
    pub fn smale_bracket(&self, x: &Point, y: &Point) -> Result<Point> {
        let d = self.metric(x, y)?;
        if d >= self.eps_bracket {
            return Err(Error::BracketTooFar { distance: d, limit: self.eps_bracket });
        }
        match (x, y) {
            (Point::Torus { x: x1, y: y1 }, Point::Torus { x: x2, y: y2 }) => {
                let delta = [circle_delta(*x2, *x1), circle_delta(*y2, *y1)];
                let es = cat_stable();
                let a = delta[0] * es[0] + delta[1] * es[1];
                Ok(Point::torus(x1 + a * es[0], y1 + a * es[1]))
            }
            (Point::Solenoid { theta, .. }, Point::Solenoid { theta: ty, .. }) => {
                let chart = self.leaf_chart(y, self.tau, 1)?;
                chart.point(self, angle_delta(*theta, *ty))
            }
            (Point::Horseshoe { x: x1, .. }, Point::Horseshoe { y: y2, .. }) => {
                Ok(Point::horseshoe(*x1, *y2))
            }
            (Point::Word(u), Point::Word(v)) => {
                Ok(Point::Word(SymbolWord::from_parts(u.p, v.past(), u.future())?))
            }
            _ => Err(Error::FamilyMismatch),
        }
    }

    /// Solenoid point within `4^{-D}` of the attractor: the angle `theta` is
    /// reached after `D` steps along the backward branch choices in
    /// `history` (bit `j` picks the `+π` preimage at depth `j + 1`).
    pub fn attractor_point(&self, theta: f64, history: u64) -> Result<Point> {
        if self.family != Family::Solenoid {
            return Err(Error::FamilyMismatch);
        }
        let depth = self.solenoid_depth;
        let mut t = wrap_angle(theta);
        for j in 0..depth {
            t = t / 2.0 + if (history >> j) & 1 == 1 { PI } else { 0.0 };
        }
        self.apply(&Point::Solenoid { x: 0.0, y: 0.0, theta: t }, depth as i64)
    }

    /// Horseshoe point of Λ coded by the given future (indices `0..`) and
    /// past (indices `-1, -2, …`, nearest first).
    pub fn horseshoe_coded(&self, future: &[u8], past: &[u8]) -> Result<Point> {
        let Family::Horseshoe { alpha, beta } = self.family else {
            return Err(Error::FamilyMismatch);
        };
        let c = 1.0 - 1.0 / beta;
        let mut x = 0.0;
        let mut scale = 1.0;
        for &s in future {
            x += s as f64 * c * scale;
            scale /= beta;
        }
        let mut y = 0.0;
        let mut scale = 1.0;
        for &s in past {
            y += s as f64 * (1.0 - alpha) * scale;
            scale *= alpha;
        }
        Ok(Point::horseshoe(x, y))
    }
}

const STRIP_SLACK: f64 = 1e-12;

fn horseshoe_forward(alpha: f64, beta: f64, x: f64, y: f64) -> Point {
    let right = 1.0 - 1.0 / beta;
    if !(-STRIP_SLACK..=1.0 + STRIP_SLACK).contains(&y) {
        return Point::Horseshoe { x, y, escaped: true };
    }
    if (-STRIP_SLACK..=1.0 / beta + STRIP_SLACK).contains(&x) {
        Point::Horseshoe { x: (beta * x).clamp(0.0, 1.0), y: alpha * y, escaped: false }
    } else if (right - STRIP_SLACK..=1.0 + STRIP_SLACK).contains(&x) {
        Point::Horseshoe {
            x: (beta * (x - right)).clamp(0.0, 1.0),
            y: alpha * y + (1.0 - alpha),
            escaped: false,
        }
    } else {
        Point::Horseshoe { x, y, escaped: true }
    }
}

fn horseshoe_backward(alpha: f64, beta: f64, x: f64, y: f64) -> Result<Point> {
    if !(-STRIP_SLACK..=1.0 + STRIP_SLACK).contains(&x) {
        return Err(Error::InverseUndefined("horseshoe point outside R"));
    }
    if (-STRIP_SLACK..=alpha + STRIP_SLACK).contains(&y) {
        Ok(Point::Horseshoe { x: x / beta, y: (y / alpha).clamp(0.0, 1.0), escaped: false })
    } else if (1.0 - alpha - STRIP_SLACK..=1.0 + STRIP_SLACK).contains(&y) {
        Ok(Point::Horseshoe {
            x: x / beta + 1.0 - 1.0 / beta,
            y: ((y - 1.0 + alpha) / alpha).clamp(0.0, 1.0),
            escaped: false,
        })
    } else {
        Err(Error::InverseUndefined("horseshoe point outside f(R)"))
    }
}

/// `2^{-m}` with `m` the least `|i|` where the words differ on their common
/// window; `0` when they agree everywhere they are both known.
fn word_distance(u: &SymbolWord, v: &SymbolWord) -> f64 {
    let lo = u.lo().max(v.lo());
    let hi = u.hi().min(v.hi());
    let reach = (-lo).max(hi - 1);
    for m in 0..=reach {
        for i in [m, -m] {
            if i >= lo && i < hi && u.get(i) != v.get(i) {
                return 0.5f64.powi(m as i32);
            }
        }
    }
    0.0
}

fn word_dyn_distance(u: &SymbolWord, v: &SymbolWord, n: usize) -> Result<f64> {
    let n = n as i64;
    if u.hi() < n || v.hi() < n {
        return Err(Error::WindowExhausted { index: n - 1 });
    }
    let lo = u.lo().max(v.lo());
    let hi = u.hi().min(v.hi());
    let mismatches: Vec<i64> = (lo..hi).filter(|&i| u.get(i) != v.get(i)).collect();
    let mut d = 0.0f64;
    for k in 0..n {
        if let Some(m) = mismatches.iter().map(|&i| (i - k).abs()).min() {
            d = d.max(0.5f64.powi(m as i32));
        }
    }
    Ok(d)
}

/// All admissible words of length `n` that may follow `prev` (or start
/// anywhere when `prev` is `None`), in lexicographic order.
pub fn admissible_words(sys: &System, prev: Option<u8>, n: usize) -> Vec<Vec<u8>> {
    let p = sys.alphabet().unwrap_or(0);
    let mut out = Vec::new();
    let mut stack: Vec<u8> = Vec::with_capacity(n);
    fn rec(sys: &System, p: u8, prev: Option<u8>, n: usize, stack: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if stack.len() == n {
            out.push(stack.clone());
            return;
        }
        let last = stack.last().copied().or(prev);
        for s in 0..p {
            if last.is_none_or(|a| sys.allowed(a, s)) {
                stack.push(s);
                rec(sys, p, prev, n, stack, out);
                stack.pop();
            }
        }
    }
    rec(sys, p, prev, n, &mut stack, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn cat_map_half_half() {
        let sys = System::cat_map();
        let q = sys.apply(&Point::torus(0.5, 0.5), 1).unwrap();
        assert_eq!(q, Point::torus(0.5, 0.0));
    }

    #[test]
    fn solenoid_origin_step() {
        let sys = System::solenoid();
        let q = sys.apply(&Point::solenoid(0.0, 0.0, 0.0), 1).unwrap();
        assert_eq!(q, Point::Solenoid { x: 0.5, y: 0.0, theta: 0.0 });
    }

    #[test]
    fn shift_moves_origin() {
        let sys = System::full_shift(2).unwrap();
        let w = SymbolWord::from_parts(2, &[1], &[0, 1, 1, 0]).unwrap();
        let q = sys.apply(&Point::Word(w), 1).unwrap();
        let q = q.as_word().unwrap();
        assert_eq!(q.future(), &[1, 1, 0]);
        assert_eq!(q.past(), &[1, 0]);
    }

    #[test]
    fn eigen_directions() {
        let (u, s) = (cat_unstable(), cat_stable());
        assert!((2.0 * u[0] + u[1] - LAMBDA_U * u[0]).abs() < 1e-15);
        assert!((2.0 * s[0] + s[1] - LAMBDA_S * s[0]).abs() < 1e-15);
        assert!((LAMBDA_U * LAMBDA_S - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unstable_expansion_of_dn() {
        let sys = System::cat_map();
        let u = cat_unstable();
        let eps = 1e-6;
        let x = Point::torus(0.0, 0.0);
        let y = Point::torus(eps * u[0], eps * u[1]);
        for n in 1..8 {
            let d = sys.dyn_metric(&x, &y, n).unwrap();
            let expect = eps * LAMBDA_U.powi(n as i32 - 1);
            assert!((d / expect - 1.0).abs() < 1e-8, "n={n}");
        }
    }

    #[test]
    fn shift_words_agreeing_on_prefix() {
        // Agreement on 0..n-1 with a mismatch at n and at -1: the last
        // shifted pair differs at index 1, so d_n = 1/2 and d_{n+1} = 1.
        let sys = System::full_shift(2).unwrap();
        let n = 4;
        let u = SymbolWord::from_parts(2, &[0], &[1, 0, 1, 1, 0, 0]).unwrap();
        let v = SymbolWord::from_parts(2, &[1], &[1, 0, 1, 1, 1, 0]).unwrap();
        let (u, v) = (Point::Word(u), Point::Word(v));
        assert_eq!(sys.dyn_metric(&u, &v, n).unwrap(), 0.5);
        assert_eq!(sys.dyn_metric(&u, &v, n + 1).unwrap(), 1.0);
        assert!(sys.bowen_ball_contains(&u, 0.7, n, &v).unwrap());
        assert!(!sys.bowen_ball_contains(&u, 0.7, n + 1, &v).unwrap());
    }

    #[test]
    fn shift_bracket_splices() {
        let sys = System::full_shift(2).unwrap();
        let x = SymbolWord::from_parts(2, &[0, 1, 1], &[0, 1, 0, 0]).unwrap();
        let y = SymbolWord::from_parts(2, &[1, 0, 1], &[0, 1, 1, 1]).unwrap();
        let z = sys.smale_bracket(&Point::Word(x.clone()), &Point::Word(y.clone())).unwrap();
        let z = z.as_word().unwrap();
        assert_eq!(z.past(), y.past());
        assert_eq!(z.future(), x.future());
    }

    #[test]
    fn cat_bracket_lies_on_both_lines() {
        let sys = System::cat_map();
        let x = Point::torus(0.0, 0.0);
        let y = Point::torus(0.05, 0.0);
        let z = sys.smale_bracket(&x, &y).unwrap();
        let Point::Torus { x: zx, y: zy } = z else { panic!() };
        let (u, s) = (cat_unstable(), cat_stable());
        let dz = [circle_delta(zx, 0.0), circle_delta(zy, 0.0)];
        // z − x is stable, z − y is unstable
        assert!((dz[0] * u[0] + dz[1] * u[1]).abs() < 1e-15);
        let dy = [dz[0] - 0.05, dz[1]];
        assert!((dy[0] * s[0] + dy[1] * s[1]).abs() < 1e-15);
    }

    #[test]
    fn bracket_refuses_distant_points() {
        let sys = System::cat_map();
        let e = sys.smale_bracket(&Point::torus(0.0, 0.0), &Point::torus(0.3, 0.0));
        assert!(matches!(e, Err(Error::BracketTooFar { .. })));
    }

    #[test]
    fn escaped_points_are_absorbing() {
        let sys = System::horseshoe(0.25, 3.0).unwrap();
        let p = sys.apply(&Point::horseshoe(0.5, 0.5), 1).unwrap();
        assert!(matches!(p, Point::Horseshoe { escaped: true, .. }));
        assert_eq!(sys.apply(&p, 1), Err(Error::Escaped));
    }

    #[test]
    fn solenoid_backward_outside_image() {
        let sys = System::solenoid();
        let e = sys.apply(&Point::solenoid(0.0, 0.0, 1.0), -1);
        assert!(matches!(e, Err(Error::InverseUndefined(_))));
    }

    #[test]
    fn invalid_families() {
        assert!(System::horseshoe(0.6, 3.0).is_err());
        assert!(System::horseshoe(0.2, 1.5).is_err());
        assert!(System::sft(vec![vec![1, 0], vec![0, 0]]).is_err());
    }

    #[test]
    fn words_listing() {
        let golden = System::sft(vec![vec![1, 1], vec![1, 0]]).unwrap();
        assert_eq!(admissible_words(&golden, None, 3).len(), 5);
        assert_eq!(admissible_words(&golden, Some(1), 2), vec![vec![0, 0], vec![0, 1]]);
    }
}
