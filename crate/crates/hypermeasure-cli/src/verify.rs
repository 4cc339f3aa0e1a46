//! Built-in checks against exact oracles.

use hypermeasure::dimension::{bowen_root, conformal_dim_check, PressureFunction};
use hypermeasure::equilibrium::{gibbs_check, variational_check, ExactGibbs};
use hypermeasure::pressure::{
    bowen_distortion_constant, multiplicativity_check, partition_sums, pressure_estimate_with, sft_exact_pressure, Domain, Variant,
};
use hypermeasure::refmeasure::{build_with_reference_pressure, scaling_check};
use hypermeasure::systems::{Point, Potential, SymbolWord, System, LAMBDA_U};
use serde::Serialize;
use serde_json::json;

use crate::config::{Resolved, Suite};
use crate::error::{CliError, Result};
use crate::output::{Cell, Outputs};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

fn below(name: &str, value: f64, threshold: f64) -> Check {
    Check { name: name.into(), value, threshold, passed: value <= threshold }
}

fn sft_checks(seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let full = System::full_shift(2)?;
    let golden = System::sft(vec![vec![1, 1], vec![1, 0]])?;
    let cases = [
        ("full_shift_bernoulli", &full, Potential::bernoulli(&[0.3, 0.7])),
        ("golden_locally_constant", &golden, Potential::locally_constant(2, vec![0.1, -0.2, 0.3, 0.0])),
    ];
    let ns: Vec<usize> = (1..=10).collect();
    for (label, sys, phi) in &cases {
        let g = sft_exact_pressure(sys, phi)?;
        let est = pressure_estimate_with(sys, phi, &[0.7], &ns, &Domain::Whole, Variant::Sep)?;
        out.push(below(&format!("{label}.pressure_error"), (est.value - g.pressure).abs(), 1e-3));
        let recs = partition_sums(sys, phi, &ns, 0.7, Variant::Per, &Domain::Whole)?;
        let mult = multiplicativity_check(&recs);
        out.push(below(&format!("{label}.log_multiplicativity"), mult.log_c, (g.q * g.q).ln() + 1e-9));
        let base = Point::Word(SymbolWord::from_parts(2, &[0, 1], &[0])?);
        let chart = sys.leaf_chart(&base, sys.tau, 1)?;
        let m = build_with_reference_pressure(sys, phi, &chart, 0.7, 8)?;
        let s = scaling_check(sys, &m)?;
        out.push(below(&format!("{label}.scaling_defect"), s.max_defect, s.bound));
        let mu = ExactGibbs { gibbs: &g };
        let gb = gibbs_check(&mu, sys, phi, g.pressure, 200, &[4, 8, 12], 0.7, seed)?;
        out.push(below(&format!("{label}.gibbs_constant"), gb.q, g.q * (1.0 + 1e-9)));
        let v = variational_check(&mu, sys, phi, g.pressure, 400, 12, 0.7, seed)?;
        out.push(below(&format!("{label}.variational_residual"), v.residual, 0.05));
    }
    Ok(out)
}

fn geometric_checks(seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let cat = System::cat_map();
    let ns: Vec<usize> = (4..=14).collect();
    let per = pressure_estimate_with(&cat, &Potential::zero(), &[0.05], &ns, &Domain::Whole, Variant::Per)?;
    out.push(below("cat.periodic_pressure_error", (per.value - LAMBDA_U.ln()).abs(), 1e-3));
    let d = bowen_distortion_constant(&cat, &Potential::trig(0.5, 1, 2), 2000, 10, seed)?;
    out.push(below("cat.distortion_excess", d.empirical - d.q_u, 0.0));
    let hs = System::horseshoe(0.25, 3.0)?;
    let root = bowen_root(&PressureFunction::closed_form(&hs)?, 1e-12)?;
    out.push(below("horseshoe.root_error", (root.t0 - 2f64.ln() / 3f64.ln()).abs(), 1e-9));
    let x = hs.horseshoe_coded(&[0, 1, 1, 0, 1, 0, 0, 1], &[1, 0, 1, 1])?;
    let chart = hs.leaf_chart(&x, hs.tau, 1)?;
    out.push(below("horseshoe.conformal_residual", conformal_dim_check(&hs, &chart, root.t0, 6)?.residual, 1e-6));
    let sol = System::solenoid();
    let root = bowen_root(&PressureFunction::closed_form(&sol)?, 1e-12)?;
    out.push(below("solenoid.root_error", (root.t0 - 1.0).abs(), 1e-9));
    let root = bowen_root(&PressureFunction::closed_form(&cat)?, 1e-12)?;
    out.push(below("cat.root_error", (root.t0 - 1.0).abs(), 1e-9));
    Ok(out)
}

pub fn verify(res: &Resolved, out: &mut Outputs) -> Result<()> {
    let seed = res.config.seed.unwrap_or(0);
    let suite = res.config.suite;
    let mut checks = Vec::new();
    if matches!(suite, Suite::Sft | Suite::All) {
        checks.extend(sft_checks(seed)?);
    }
    if matches!(suite, Suite::Geometric | Suite::All) {
        checks.extend(geometric_checks(seed)?);
    }
    let rows = checks
        .iter()
        .map(|c| {
            vec![Cell::Text(c.name.clone()), Cell::from(c.value), Cell::from(c.threshold), Cell::from(if c.passed { "pass" } else { "fail" })]
        })
        .collect();
    out.csv("verify.csv", &["check", "value", "threshold", "status"], rows)?;
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    out.report("verify.json", "verify", &res.config, &json!({ "checks": checks, "passed": failed.is_empty() }))?;
    if !failed.is_empty() {
        return Err(CliError::Assertion(format!("failed checks: {}", failed.join(", "))));
    }
    Ok(())
}
