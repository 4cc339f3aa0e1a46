//! Small dense linear algebra: Perron eigendata and least-squares fits.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

/// Square matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub n: usize,
    pub data: Vec<f64>,
}

impl Dense {
    pub fn zeros(n: usize) -> Self {
        Dense { n, data: vec![0.0; n * n] }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    pub fn vec_mul(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| v[i] * self.get(i, j)).sum())
            .collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn matmul(&self, other: &Dense) -> Dense {
        let n = self.n;
        let mut out = Dense::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    /// First vertex not reachable from vertex 0 along positive entries, in
    /// either direction. `None` means the pattern is strongly connected.
    pub fn stranded_vertex(&self) -> Option<usize> {
        let forward = self.reach(false);
        let backward = self.reach(true);
        (0..self.n).find(|&v| !forward[v] || !backward[v])
    }

    fn reach(&self, transpose: bool) -> Vec<bool> {
        let mut seen = vec![false; self.n];
        if self.n == 0 {
            return seen;
        }
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for w in 0..self.n {
                let e = if transpose { self.get(w, v) } else { self.get(v, w) };
                if e > 0.0 && !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen
    }
}

/// Perron root with left and right eigenvectors of a nonnegative irreducible
/// matrix. Normalized so that `sum(right) = 1` and `left . right = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Perron {
    pub root: f64,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

/// Power iteration on `M + I`, which is primitive whenever `M` is irreducible.
pub fn perron(m: &Dense) -> Perron {
    let right = power(m, false);
    let left = power(m, true);
    let mv = m.mul_vec(&right);
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..m.n {
        num += mv[i];
        den += right[i];
    }
    let root = num / den;
    let dot: f64 = left.iter().zip(&right).map(|(a, b)| a * b).sum();
    let left = left.into_iter().map(|x| x / dot).collect();
    Perron { root, left, right }
}

fn power(m: &Dense, transpose: bool) -> Vec<f64> {
    let n = m.n;
    let mut v = vec![1.0 / n as f64; n];
    for _ in 0..200_000 {
        let mv = if transpose { m.vec_mul(&v) } else { m.mul_vec(&v) };
        let mut next: Vec<f64> = mv.iter().zip(&v).map(|(a, b)| a + b).collect();
        let s: f64 = next.iter().sum();
        for x in next.iter_mut() {
            *x /= s;
        }
        let diff = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        v = next;
        if diff <= 1e-16 {
            break;
        }
    }
    v
}

/// `ln(e^a + e^b)`, treating `-inf` as an empty sum.
pub fn ln_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln Σ e^{x_i}`.
pub fn ln_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(f64::NEG_INFINITY, ln_add)
}

/// Ordinary least squares `y = a + b x`; returns `(b, a, rms residual)`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - intercept - slope * x;
            e * e
        })
        .sum();
    (slope, intercept, (rss / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fibonacci_perron_root() {
        let mut m = Dense::zeros(2);
        m.set(0, 0, 1.0);
        m.set(0, 1, 1.0);
        m.set(1, 0, 1.0);
        let p = perron(&m);
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((p.root - golden).abs() < 1e-14);
        assert!((p.right[0] / p.right[1] - golden).abs() < 1e-12);
    }

    #[test]
    fn periodic_pattern_still_converges() {
        let mut m = Dense::zeros(2);
        m.set(0, 1, 1.0);
        m.set(1, 0, 1.0);
        assert!((perron(&m).root - 1.0).abs() < 1e-14);
    }

    #[test]
    fn stranded_vertex_found() {
        let mut m = Dense::zeros(3);
        m.set(0, 1, 1.0);
        m.set(1, 0, 1.0);
        m.set(2, 0, 1.0);
        m.set(2, 2, 1.0);
        assert_eq!(m.stranded_vertex(), Some(2));
    }

    #[test]
    fn exact_line_fit() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 0.5 + 2.0 * x).collect();
        let (b, a, res) = fit_line(&xs, &ys);
        assert!((b - 2.0).abs() < 1e-14 && (a - 0.5).abs() < 1e-14 && res < 1e-14);
    }
}
