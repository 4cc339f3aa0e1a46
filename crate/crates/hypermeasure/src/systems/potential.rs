use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::{Family, Point, SymbolWord, System};
use crate::{Error, Result};

/// Shape of a potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "snake_case")]
pub enum PotentialKind {
    Zero,
    /// `t · φ^geo`, i.e. `−t log` of the unstable expansion.
    GeometricT { t: f64 },
    /// Shift potential reading symbols `0..depth`; `values` indexed by the
    /// word read base-p, most significant symbol first.
    LocallyConstant { depth: usize, values: Vec<f64> },
    /// Shift potential reading symbols `start..start + depth`.
    Tabulated { start: i64, depth: usize, values: Vec<f64> },
    /// `amplitude · cos 2π(kx + ly)` on the torus and the horseshoe square,
    /// `amplitude · cos(kθ + 2πlx)` on the solenoid.
    Trig { amplitude: f64, k: i32, l: i32 },
}

/// A potential `φ` plus an additive constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    pub kind: PotentialKind,
    #[serde(default)]
    pub shift: f64,
}

/// The lookup table of a shift potential, with constants folded in.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftWindow {
    pub p: usize,
    pub start: i64,
    pub depth: usize,
    pub values: Vec<f64>,
}

impl ShiftWindow {
    #[inline]
    pub fn index(&self, word: &[u8]) -> usize {
        word.iter().fold(0usize, |acc, &s| acc * self.p + s as usize)
    }

    /// Value on a word holding exactly the symbols of the window.
    #[inline]
    pub fn at(&self, word: &[u8]) -> f64 {
        self.values[self.index(word)]
    }

    /// Highest index read relative to the evaluation point.
    pub fn end(&self) -> i64 {
        self.start + self.depth as i64
    }

    pub fn oscillation(&self) -> f64 {
        let max = self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = self.values.iter().cloned().fold(f64::INFINITY, f64::min);
        max - min
    }
}

impl Potential {
    pub fn new(kind: PotentialKind) -> Self {
        Potential { kind, shift: 0.0 }
    }

    pub fn zero() -> Self {
        Potential::new(PotentialKind::Zero)
    }

    pub fn constant(c: f64) -> Self {
        Potential { kind: PotentialKind::Zero, shift: c }
    }

    pub fn geometric(t: f64) -> Self {
        Potential::new(PotentialKind::GeometricT { t })
    }

    pub fn locally_constant(depth: usize, values: Vec<f64>) -> Self {
        Potential::new(PotentialKind::LocallyConstant { depth, values })
    }

    /// Depth-1 potential `log p_a`, whose equilibrium state is the
    /// Bernoulli measure with weights `p`.
    pub fn bernoulli(weights: &[f64]) -> Self {
        Potential::locally_constant(1, weights.iter().map(|w| w.ln()).collect())
    }

    pub fn tabulated(start: i64, depth: usize, values: Vec<f64>) -> Self {
        Potential::new(PotentialKind::Tabulated { start, depth, values })
    }

    pub fn trig(amplitude: f64, k: i32, l: i32) -> Self {
        Potential::new(PotentialKind::Trig { amplitude, k, l })
    }

    /// `φ + c`.
    pub fn shifted(&self, c: f64) -> Self {
        Potential { kind: self.kind.clone(), shift: self.shift + c }
    }

    /// True unless the value depends on negative coordinates.
    pub fn is_future_only(&self) -> bool {
        !matches!(self.kind, PotentialKind::Tabulated { start, .. } if start < 0)
    }

    pub fn validate(&self, sys: &System) -> Result<()> {
        if !self.shift.is_finite() {
            return Err(Error::param("potential.shift", "must be finite"));
        }
        match &self.kind {
            PotentialKind::Zero => Ok(()),
            PotentialKind::GeometricT { t } if t.is_finite() => Ok(()),
            PotentialKind::GeometricT { .. } => Err(Error::param("potential.t", "must be finite")),
            PotentialKind::LocallyConstant { depth, values }
            | PotentialKind::Tabulated { depth, values, .. } => {
                let p = sys
                    .alphabet()
                    .ok_or(Error::Unsupported("symbolic potential on a geometric system"))?;
                if *depth == 0 || *depth > 12 {
                    return Err(Error::param("potential.depth", "depth must be in 1..=12"));
                }
                if values.len() != (p as usize).pow(*depth as u32) {
                    return Err(Error::param("potential.values", "table must have p^depth entries"));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::param("potential.values", "entries must be finite"));
                }
                Ok(())
            }
            PotentialKind::Trig { amplitude, .. } => {
                if sys.is_shift() {
                    return Err(Error::Unsupported("trigonometric potential on a shift"));
                }
                if !amplitude.is_finite() {
                    return Err(Error::param("potential.amplitude", "must be finite"));
                }
                Ok(())
            }
        }
    }

    /// Lookup table for shift systems.
    pub fn shift_window(&self, sys: &System) -> Result<ShiftWindow> {
        self.validate(sys)?;
        let p = sys.alphabet().ok_or(Error::Unsupported("shift window on a geometric system"))? as usize;
        let (start, depth, mut values) = match &self.kind {
            PotentialKind::Zero => (0, 1, vec![0.0; p]),
            PotentialKind::GeometricT { t } => (0, 1, vec![-t * sys.expansion().ln(); p]),
            PotentialKind::LocallyConstant { depth, values } => (0, *depth, values.clone()),
            PotentialKind::Tabulated { start, depth, values } => (*start, *depth, values.clone()),
            PotentialKind::Trig { .. } => unreachable!("rejected by validate"),
        };
        for v in values.iter_mut() {
            *v += self.shift;
        }
        Ok(ShiftWindow { p, start, depth, values })
    }

    /// `φ(p)`.
    pub fn eval(&self, sys: &System, p: &Point) -> Result<f64> {
        if let Point::Word(w) = p {
            let win = self.shift_window(sys)?;
            return word_value(&win, w, 0);
        }
        let base = match (&self.kind, p) {
            (PotentialKind::Zero, _) => 0.0,
            (PotentialKind::GeometricT { t }, _) => -t * sys.expansion().ln(),
            (PotentialKind::Trig { amplitude, k, l }, Point::Torus { x, y })
            | (PotentialKind::Trig { amplitude, k, l }, Point::Horseshoe { x, y, .. }) => {
                amplitude * (TAU * (*k as f64 * x + *l as f64 * y)).cos()
            }
            (PotentialKind::Trig { amplitude, k, l }, Point::Solenoid { x, theta, .. }) => {
                amplitude * (*k as f64 * theta + TAU * *l as f64 * x).cos()
            }
            _ => return Err(Error::Unsupported("symbolic potential on a geometric point")),
        };
        Ok(base + self.shift)
    }

    /// `Σ_{k=k0}^{k0+n-1} φ(σ^k w)`.
    pub fn word_birkhoff(&self, sys: &System, w: &SymbolWord, k0: i64, n: usize) -> Result<f64> {
        let win = self.shift_window(sys)?;
        let mut s = 0.0;
        for k in k0..k0 + n as i64 {
            s += word_value(&win, w, k)?;
        }
        Ok(s)
    }

    pub fn holder_exponent(&self) -> f64 {
        1.0
    }

    /// `|φ|_β`: a Lipschitz bound for the system's metric.
    pub fn holder_seminorm(&self, sys: &System) -> f64 {
        match &self.kind {
            PotentialKind::Zero | PotentialKind::GeometricT { .. } => 0.0,
            PotentialKind::LocallyConstant { .. } | PotentialKind::Tabulated { .. } => {
                let Ok(win) = self.shift_window(sys) else { return f64::INFINITY };
                let reach = win.start.abs().max((win.end() - 1).abs());
                win.oscillation() * 2f64.powi(reach as i32)
            }
            PotentialKind::Trig { amplitude, k, l } => {
                let (k, l) = (*k as f64, *l as f64);
                match sys.family {
                    Family::Solenoid => amplitude.abs() * (k * k + (TAU * l).powi(2)).sqrt(),
                    _ => amplitude.abs() * TAU * (k * k + l * l).sqrt(),
                }
            }
        }
    }
}

/// `φ(σ^k w)` read off the window.
pub fn word_value(win: &ShiftWindow, w: &SymbolWord, k: i64) -> Result<f64> {
    let mut idx = 0usize;
    for i in k + win.start..k + win.end() {
        idx = idx * win.p + w.symbol(i)? as usize;
    }
    Ok(win.values[idx])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bernoulli_birkhoff_by_hand() {
        let sys = System::full_shift(2).unwrap();
        let phi = Potential::bernoulli(&[0.3, 0.7]);
        let w = Point::Word(SymbolWord::from_parts(2, &[], &[0, 1, 1, 0]).unwrap());
        let s = sys.birkhoff_sum(&phi, &w, 3).unwrap();
        assert!((s - (0.3f64.ln() + 2.0 * 0.7f64.ln())).abs() < 1e-15);
        assert_eq!(sys.birkhoff_sum(&phi, &w, 0).unwrap(), 0.0);
    }

    #[test]
    fn constants_and_zero() {
        let sys = System::cat_map();
        let p = Point::torus(0.1, 0.7);
        assert_eq!(sys.birkhoff_sum(&Potential::zero(), &p, 9).unwrap(), 0.0);
        let s = sys.birkhoff_sum(&Potential::constant(0.25), &p, 8).unwrap();
        assert!((s - 2.0).abs() < 1e-15);
    }

    #[test]
    fn geometric_constants() {
        let one = Potential::geometric(1.0);
        let cat = System::cat_map();
        let p = Point::torus(0.2, 0.2);
        assert!((one.eval(&cat, &p).unwrap() + super::super::LAMBDA_U.ln()).abs() < 1e-15);
        let sol = System::solenoid();
        let q = Point::solenoid(0.1, 0.0, 1.0);
        assert!((one.eval(&sol, &q).unwrap() + 2f64.ln()).abs() < 1e-15);
        let hs = System::horseshoe(0.2, 3.0).unwrap();
        let h = Point::horseshoe(0.1, 0.1);
        let half = Potential::geometric(0.5);
        assert!((half.eval(&hs, &h).unwrap() + 0.5 * 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn table_size_checked() {
        let sys = System::full_shift(2).unwrap();
        assert!(Potential::locally_constant(2, vec![0.0; 3]).validate(&sys).is_err());
        assert!(Potential::trig(1.0, 1, 0).validate(&sys).is_err());
    }

    #[test]
    fn two_sided_window_reads_the_past() {
        let sys = System::full_shift(2).unwrap();
        let phi = Potential::tabulated(-1, 2, vec![0.0, 1.0, 2.0, 3.0]);
        let w = Point::Word(SymbolWord::from_parts(2, &[1], &[0, 1]).unwrap());
        assert_eq!(phi.eval(&sys, &w).unwrap(), 2.0);
        assert!(!phi.is_future_only());
    }
}
