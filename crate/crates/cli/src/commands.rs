//! One function per command. Each writes its artifacts and returns the
//! warnings that should turn the exit status into 2.

use std::path::PathBuf;

use anyhow::{bail, Result};
use serde::Serialize;

use multilattice::approx::{linf_estimate, mult_coeffs, rms_l2_over_shifts, ShiftConfig};
use multilattice::construction::{build_plan, verify_plan, MultiLatticePlan, PlanParams, PlanReport};
use multilattice::cross::{cardinality_bound, tail_bound, CrossMetadata, CrossOptions, HyperbolicCross};
use multilattice::lowerbound::{sweep, write_sweep_csv, SweepConfig};
use multilattice::testbed::{
    convergence_experiment, random_on_cross_poly, write_rows_csv, BernoulliProductFunction, ConvergenceConfig,
    TestFunction,
};
use multilattice::weights::{tractability_check, SmoothnessParams, TheoryParams};

use crate::config::{ApproximateCmd, ConvergeCmd, CrossCmd, CrossSpec, FunctionSpec, PlanCmd, TractCmd};
use crate::output::Emitter;

pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

fn build_cross(spec: &CrossSpec) -> Result<HyperbolicCross> {
    let params = SmoothnessParams::new(spec.alpha, spec.m_radius, spec.d)?;
    let mut opts = CrossOptions::default();
    if let Some(cap) = spec.cardinality_cap {
        opts.cardinality_cap = cap;
    }
    Ok(HyperbolicCross::enumerate_with(params, spec.weights.clone(), &opts)?)
}

fn plan_params(c: f64, delta: f64, seed: u64, retry_cap_factor: u64) -> Result<PlanParams> {
    let mut p = PlanParams::new(c, delta, seed)?;
    p.retry_cap_factor = retry_cap_factor;
    p.validate()?;
    Ok(p)
}

#[derive(Serialize)]
struct CrossSummary {
    metadata: CrossMetadata,
    lambda: f64,
    cardinality_bound: f64,
    tail_bound: Option<f64>,
}

pub fn cross(p: &CrossCmd, out: &Emitter) -> Result<Outcome> {
    let cross = build_cross(&p.cross)?;
    let lambda = p.lambda.expect("resolved");
    let theory = TheoryParams::new(lambda, 0.5, p.cross.alpha)?;
    let card = cardinality_bound(cross.params(), cross.spec(), &theory)?;
    let mut warnings = Vec::new();
    let tail = if cross.params().m_radius >= 1.0 {
        Some(tail_bound(cross.params(), cross.spec(), &theory)?)
    } else {
        warnings.push("tail bound requires M >= 1".to_string());
        None
    };
    let summary = CrossSummary {
        metadata: cross.metadata(),
        lambda,
        cardinality_bound: card,
        tail_bound: tail,
    };
    let files = vec![
        out.csv("cross.csv", |w| cross.write_csv(w))?,
        out.json("cross.json", &summary)?,
    ];
    Ok(Outcome { files, warnings })
}

fn plan_warnings(plan: &MultiLatticePlan, report: &PlanReport) -> Vec<String> {
    let mut w = plan.warnings.clone();
    if !plan.covered {
        w.push(format!(
            "{} frequencies are not covered by any lattice",
            report.uncovered.len()
        ));
    }
    if !report.guarantees_hold() && plan.covered {
        w.push("plan verification found a violated guarantee".to_string());
    }
    if !report.assumptions_hold() && plan.warnings.is_empty() {
        w.push("theoretical preconditions on eta or c are not met".to_string());
    }
    w
}

#[derive(Serialize)]
struct PlanSummary<'a> {
    plan: &'a MultiLatticePlan,
    report: &'a PlanReport,
}

pub fn plan(p: &PlanCmd, seed: u64, out: &Emitter) -> Result<Outcome> {
    let cross = build_cross(&p.cross)?;
    let plan = build_plan(&cross, &plan_params(p.c, p.delta, seed, p.retry_cap_factor)?)?;
    let report = verify_plan(&cross, &plan, p.check_radius.unwrap_or(cross.span()))?;
    let warnings = plan_warnings(&plan, &report);
    let files = vec![out.json(
        "plan.json",
        &PlanSummary {
            plan: &plan,
            report: &report,
        },
    )?];
    Ok(Outcome { files, warnings })
}

#[derive(Serialize)]
struct ApproxSummary {
    cardinality: usize,
    num_lattices: usize,
    total_points: u64,
    covered: bool,
    uncovered: Vec<usize>,
    l2_exact: f64,
    linf_estimate: f64,
    rms_l2: Option<f64>,
}

fn approximate_with<F: TestFunction>(
    f: &F,
    p: &ApproximateCmd,
    cross: &HyperbolicCross,
    plan: &MultiLatticePlan,
    seed: u64,
) -> Result<(ApproxSummary, multilattice::approx::TrigPolynomial)> {
    let rec = mult_coeffs(f, plan, cross)?;
    let approx = rec.to_polynomial(cross);
    let inside: f64 = cross
        .iter()
        .zip(&rec.coefficients)
        .map(|(k, c)| (f.coefficient(k) - c).norm_sqr())
        .sum();
    let l2_exact = (f.off_cross_energy(cross) + inside).sqrt();
    let linf = linf_estimate(|x| (f.eval(x) - approx.evaluate(x)).norm(), cross.dim(), p.grid_per_dim)?;
    let rms_l2 = if p.num_shifts > 0 {
        let cfg = ShiftConfig {
            num_shifts: p.num_shifts,
            seed,
        };
        Some(rms_l2_over_shifts(f, plan, cross, &cfg)?)
    } else {
        None
    };
    let summary = ApproxSummary {
        cardinality: cross.len(),
        num_lattices: plan.num_lattices(),
        total_points: plan.total_points,
        covered: plan.covered,
        uncovered: rec.uncovered,
        l2_exact,
        linf_estimate: linf,
        rms_l2,
    };
    Ok((summary, approx))
}

pub fn approximate(p: &ApproximateCmd, seed: u64, out: &Emitter) -> Result<Outcome> {
    let cross = build_cross(&p.cross)?;
    let plan = build_plan(&cross, &plan_params(p.c, p.delta, seed, p.retry_cap_factor)?)?;
    let report = verify_plan(&cross, &plan, cross.span())?;
    let (summary, approx) = match &p.function {
        FunctionSpec::Bernoulli { degree, gammas } => {
            if gammas.len() != p.cross.d {
                bail!(
                    "function has {} gammas but the cross has d = {}",
                    gammas.len(),
                    p.cross.d
                );
            }
            let f = BernoulliProductFunction::new(*degree, gammas.clone())?;
            approximate_with(&f, p, &cross, &plan, seed)?
        }
        FunctionSpec::RandomPoly { unit_norm } => {
            let f = random_on_cross_poly(&cross, seed, *unit_norm)?;
            approximate_with(&f, p, &cross, &plan, seed)?
        }
    };
    let warnings = plan_warnings(&plan, &report);
    let files = vec![
        out.csv("coefficients.csv", |w| approx.write_csv(w))?,
        out.json("approximate.json", &summary)?,
    ];
    Ok(Outcome { files, warnings })
}

pub fn converge(p: &ConvergeCmd, seed: u64, out: &Emitter) -> Result<Outcome> {
    let d = p.function.gammas.len();
    let f = BernoulliProductFunction::new(p.function.degree, p.function.gammas.clone())?;
    let cfg = ConvergenceConfig {
        alpha_eff: p.alpha_eff,
        weights: p.weights.clone(),
        m_grid: p.m_grid.clone(),
        plan: plan_params(p.c, p.delta, seed, p.retry_cap_factor)?,
        shifts: ShiftConfig {
            num_shifts: p.num_shifts,
            seed,
        },
        grid_per_dim: p.grid_per_dim,
        mode: p.mode,
        single_tries_per_prime: p.single_tries_per_prime,
    };
    let result = convergence_experiment(&f, d, &cfg)?;
    let warnings = result
        .rows
        .iter()
        .filter(|r| !r.covered)
        .map(|r| format!("plan at M = {} is not covered", r.m_radius))
        .collect();
    let files = vec![
        out.csv("converge.csv", |w| write_rows_csv(&result.rows, w))?,
        out.json("converge.json", &result)?,
    ];
    Ok(Outcome { files, warnings })
}

pub fn lowerbound(p: &SweepConfig, seed: u64, out: &Emitter) -> Result<Outcome> {
    let rows = sweep(p, seed)?;
    let warnings = rows
        .iter()
        .filter(|r| !r.vanishes_on_lattice)
        .map(|r| {
            format!(
                "fooling function for N = {}, g = ({}, {}) does not vanish",
                r.n, r.g1, r.g2
            )
        })
        .collect();
    let files = vec![out.csv("lowerbound.csv", |w| write_sweep_csv(&rows, w))?];
    Ok(Outcome { files, warnings })
}

pub fn tract_check(p: &TractCmd, out: &Emitter) -> Result<Outcome> {
    let report = tractability_check(&p.weights, p.alpha, p.lambda, p.d, p.pod_c)?;
    let warnings = if report.condition_holds {
        Vec::new()
    } else {
        vec!["summability condition for strong polynomial tractability does not hold".to_string()]
    };
    let files = vec![out.json("tract_check.json", &report)?];
    Ok(Outcome { files, warnings })
}
