//! The `pressure`, `refmeasure`, `evolve` and `dim` pipelines.

use hypermeasure::dimension::{bowen_root, conformal_dim_check, shape_certificate, NumericalSchedule, PressureFunction};
use hypermeasure::equilibrium::{convergence_report, evolve_average, weakstar_discrepancy, EvolveConfig, Lebesgue, Moments};
use hypermeasure::pressure::{pressure_estimate_with, sft_exact_pressure, SftGibbs};
use hypermeasure::refmeasure::{
    build_reference_measure, build_with_reference_pressure, holonomy_equivalence_check, scaling_check, u_gibbs_check, Cells,
    Holonomy, LeafMeasure, Rectangle,
};
use hypermeasure::systems::{Family, Point, PotentialKind};
use serde_json::json;

use crate::config::{MethodSpec, Resolved};
use crate::error::{CliError, Result};
use crate::output::{read_artifact, Cell, Outputs};

pub const LEAF_MEASURE: &str = "leaf_measure";
pub const EMPIRICAL_MEASURE: &str = "empirical_measure";

pub fn pressure(res: &Resolved, out: &mut Outputs) -> Result<()> {
    let c = &res.config;
    let est = pressure_estimate_with(&res.sys, &res.phi, &c.rs, &c.ns, &res.domain()?, res.variant())?;
    let exact = if res.sys.is_shift() { Some(sft_exact_pressure(&res.sys, &res.phi)?.pressure) } else { None };
    let rows = est
        .records
        .iter()
        .map(|r| vec![Cell::from(r.n), Cell::from(r.r), Cell::from(r.log_value), Cell::Int(r.witness_size as i64)])
        .collect();
    out.csv("pressure.csv", &["n", "r", "log_z", "witness_size"], rows)?;
    out.report("pressure.json", "pressure", c, &json!({ "value": est.value, "exact": exact, "estimate": est }))?;
    if est.ill_conditioned {
        return Err(CliError::Numerical(est.warnings.join("; ")));
    }
    Ok(())
}

fn build_leaf(res: &Resolved, base: &Point) -> Result<LeafMeasure> {
    let r = res.leaf_r()?;
    let chart = res.sys.leaf_chart(base, res.chart_tau(), 1)?;
    let order = res.order;
    Ok(match res.config.p_hat {
        Some(p) => build_reference_measure(&res.sys, &res.phi, &chart, r, order, Some(p))?,
        None => build_with_reference_pressure(&res.sys, &res.phi, &chart, r, order)?,
    })
}

pub fn refmeasure(res: &Resolved, out: &mut Outputs) -> Result<()> {
    let seed = res.seed()?;
    let m = build_leaf(res, &res.base()?)?;
    let scaling = scaling_check(&res.sys, &m)?;
    let orders: Vec<usize> = (1..=m.order).collect();
    let u_gibbs = u_gibbs_check(&res.sys, &m, res.config.samples, &orders, seed)?;
    // shift leaves through a common first symbol share a cylinder rectangle
    let holonomy = match (&m.chart.base, res.config.leaves.get(1)) {
        (Point::Word(a), Some(other)) => {
            let target = build_leaf(res, &other.point(&res.sys)?)?;
            let b = target.chart.base.as_word().expect("shift leaf");
            if a.future()[0] == b.future()[0] && a.past() != b.past() {
                let h = Holonomy::new(&res.sys, m.chart.clone(), target.chart.clone(), Rectangle::Cylinder { word: vec![a.future()[0]] })?;
                Some(holonomy_equivalence_check(&res.sys, &h, &m, &target, res.config.samples, seed)?)
            } else {
                None
            }
        }
        _ => None,
    };
    let rows = match &m.cells {
        Cells::Cylinders { words, weights, .. } => words
            .iter()
            .zip(weights)
            .map(|(w, &x)| vec![Cell::Text(w.iter().map(|s| s.to_string()).collect()), Cell::from(x)])
            .collect(),
        Cells::Atoms { coords, weights } => coords.iter().zip(weights).map(|(&t, &x)| vec![Cell::from(t), Cell::from(x)]).collect(),
    };
    let header = if m.chart.is_cylinder_tree() { ["word", "weight"] } else { ["coordinate", "weight"] };
    out.csv("refmeasure_cells.csv", &header, rows)?;
    out.artifact("leaf_measure.json", LEAF_MEASURE, &m)?;
    let result = json!({
        "pressure": m.pressure,
        "pressure_source": m.pressure_source,
        "order": m.order,
        "cells": m.cells.len(),
        "total_mass": m.total_mass,
        "scaling": scaling,
        "u_gibbs": u_gibbs,
        "holonomy": holonomy,
    });
    out.report("refmeasure.json", "refmeasure", &res.config, &result)?;
    if !(scaling.max_defect <= scaling.bound) {
        return Err(CliError::Assertion(format!("scaling defect {} exceeds the bound {}", scaling.max_defect, scaling.bound)));
    }
    if let Some(h) = holonomy {
        if let Some([lo, hi]) = h.window {
            if !(h.min >= lo && h.max <= hi) {
                return Err(CliError::Assertion(format!("holonomy ratios [{}, {}] leave [{lo}, {hi}]", h.min, h.max)));
            }
        }
    }
    Ok(())
}

/// The equilibrium state where one is known exactly.
fn reference(res: &Resolved) -> Result<Option<Box<dyn Moments>>> {
    if res.sys.is_shift() {
        let g: SftGibbs = sft_exact_pressure(&res.sys, &res.phi)?;
        return Ok(Some(Box::new(g)));
    }
    // for the cat map both φ = 0 and φ^geo have Lebesgue as equilibrium state
    let lebesgue = res.sys.family == Family::CatMap
        && match res.phi.kind {
            PotentialKind::Zero => true,
            PotentialKind::GeometricT { t } => t == 1.0,
            _ => false,
        };
    Ok(lebesgue.then(|| Box::new(Lebesgue) as Box<dyn Moments>))
}

pub fn evolve(res: &Resolved, out: &mut Outputs) -> Result<()> {
    let c = &res.config;
    let cfg = EvolveConfig { budget: c.budget, seed: res.seed()? };
    let leaves: Vec<LeafMeasure> = match &c.input_measure {
        Some(path) => vec![read_artifact(path, LEAF_MEASURE)?],
        None => c.leaves.iter().map(|p| build_leaf(res, &p.point(&res.sys)?)).collect::<Result<_>>()?,
    };
    let dict = res.dictionary()?;
    if res.sys.is_shift() {
        // pushforwards past the cell depth only see the filler continuation
        let horizon = res.n.max(*c.schedule.last().expect("resolved")) + dict.max_depth();
        if let Some(m) = leaves.iter().find(|m| m.order < horizon) {
            return Err(CliError::Config(format!(
                "`order`: shift leaf measures of order {} resolve fewer than n + dictionary depth = {horizon} symbols",
                m.order
            )));
        }
    }
    let mu = evolve_average(&res.sys, &res.phi, &leaves[0], res.n, &cfg)?;
    let target = reference(res)?;
    let to_reference = target.as_deref().map(|t| weakstar_discrepancy(&mu, t, &dict)).transpose()?;
    let convergence = if leaves.len() >= 2 {
        let rep = convergence_report(&res.sys, &leaves, &c.schedule, &dict, &cfg, target.as_deref())?;
        let mut rows = Vec::new();
        for row in &rep.rows {
            if let Some(v) = row.cauchy {
                rows.push(vec![Cell::from(row.n), Cell::from("cauchy"), Cell::from(v)]);
            }
            rows.push(vec![Cell::from(row.n), Cell::from("independence"), Cell::from(row.independence)]);
            if let Some(v) = row.reference {
                rows.push(vec![Cell::from(row.n), Cell::from("reference"), Cell::from(v)]);
            }
        }
        out.csv("convergence.csv", &["n", "diagnostic", "value"], rows)?;
        Some(rep)
    } else {
        None
    };
    out.artifact("evolve_measure.json", EMPIRICAL_MEASURE, &mu)?;
    let result = json!({
        "n": mu.n,
        "atoms": mu.atoms.len(),
        "total": mu.total(),
        "source": mu.source,
        "dictionary": dict.label,
        "reference_discrepancy": to_reference,
        "convergence": convergence,
    });
    out.report("evolve.json", "evolve", c, &result)?;
    if let Some(rep) = &convergence {
        if !(rep.cauchy_monotone && rep.independence_monotone) {
            return Err(CliError::Assertion("convergence diagnostics increase after burn-in".into()));
        }
    }
    Ok(())
}

pub fn dim(res: &Resolved, out: &mut Outputs) -> Result<()> {
    let c = &res.config;
    let pf = match c.method {
        MethodSpec::ClosedForm => PressureFunction::closed_form(&res.sys)?,
        MethodSpec::Numerical => PressureFunction::numerical(&res.sys, NumericalSchedule { r: res.r, ns: c.ns.clone() })?,
    };
    let root = bowen_root(&pf, c.tolerance)?;
    let shape = shape_certificate(&pf, c.t_grid[0], c.t_grid[1], c.t_points)?;
    let conformal = match res.sys.family {
        Family::Sft { .. } => None,
        _ => {
            let chart = res.sys.leaf_chart(&res.base()?, res.chart_tau(), 1)?;
            Some(conformal_dim_check(&res.sys, &chart, root.t0, c.level)?)
        }
    };
    let rows = shape
        .grid
        .iter()
        .map(|p| vec![Cell::from(p.t), Cell::from(p.value), Cell::from(p.lower), Cell::from(p.upper)])
        .collect();
    out.csv("pressure_curve.csv", &["t", "pressure", "lower", "upper"], rows)?;
    let result = json!({
        "t_0": root.t0,
        "method": root.method,
        "bracket": root.bracket,
        "interval": root.interval,
        "residual": root.residual,
        "table": root.table,
        "shape": shape,
        "conformal": conformal,
    });
    out.report("dim.json", "dim", c, &result)?;
    if !(shape.decreasing && shape.convex) {
        return Err(CliError::Assertion("pressure curve is not decreasing and convex on the grid".into()));
    }
    Ok(())
}
