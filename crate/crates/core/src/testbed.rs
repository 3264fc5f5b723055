//! Test functions with known Fourier data and convergence-rate experiments.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approx::{
    linf_estimate, mult_coeffs, rms_l2_over_shifts, KnownSpectrum, SampledFunction, ShiftConfig, TrigPolynomial,
};
use crate::construction::{build_plan, MultiLatticePlan, PlanParams};
use crate::cross::{io_err, HyperbolicCross};
use crate::error::{invalid, Error, Result};
use crate::lattice::{aliasing_indicators, Rank1Lattice};
use crate::primes::next_prime_above;
use crate::rng::{Domain, Stream};
use crate::weights::{riemann_zeta, SmoothnessParams, WeightSpec};

/// Complex Gaussian coefficients on every index of the cross. With
/// `unit_norm` the result is scaled to Korobov norm 1.
pub fn random_on_cross_poly(cross: &HyperbolicCross, seed: u64, unit_norm: bool) -> Result<TrigPolynomial> {
    if cross.is_empty() {
        return Err(invalid("cross", "must contain at least one index"));
    }
    let coeffs: Vec<Complex64> = (0..cross.len())
        .map(|i| {
            let mut s = Stream::new(seed, Domain::Polynomial, i as u64);
            Complex64::new(s.normal(), s.normal())
        })
        .collect();
    let p = TrigPolynomial::from_cross(cross, &coeffs);
    if !unit_norm {
        return Ok(p);
    }
    let norm = p.korobov_norm(cross.params(), cross.spec())?;
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(invalid(
            "cross",
            format!("cannot normalize a polynomial of norm {norm}"),
        ));
    }
    Ok(p.scaled(1.0 / norm))
}

/// `f(x) = ∏_j (1 + γ_j φ(x_j))` with `φ = 2π² B₂` (degree 1) or
/// `φ = −(2π⁴/3) B₄` (degree 2), so that `f̂(k) = ∏_{j∈supp k} γ_j |k_j|^{-2m}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BernoulliProductFunction {
    pub degree: u32,
    pub gammas: Vec<f64>,
}

impl BernoulliProductFunction {
    pub fn new(degree: u32, gammas: Vec<f64>) -> Result<Self> {
        if !(1..=2).contains(&degree) {
            return Err(invalid("degree", "must be 1 or 2"));
        }
        if gammas.is_empty() || gammas.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return Err(invalid("gammas", "need at least one finite non-negative value"));
        }
        Ok(Self { degree, gammas })
    }

    fn phi(&self, x: f64) -> f64 {
        use std::f64::consts::PI;
        let x = x.rem_euclid(1.0);
        match self.degree {
            1 => 2.0 * PI * PI * (x * x - x + 1.0 / 6.0),
            _ => {
                let b4 = x.powi(4) - 2.0 * x.powi(3) + x * x - 1.0 / 30.0;
                -(2.0 * PI.powi(4) / 3.0) * b4
            }
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.gammas
            .iter()
            .zip(x)
            .map(|(&g, &xj)| 1.0 + g * self.phi(xj))
            .product()
    }

    /// `Σ_{|k_j| ≤ cutoff} f̂(k) e^{2πi k·x}`.
    pub fn truncated_series(&self, x: &[f64], cutoff: i64) -> f64 {
        let p = 2 * self.degree as i32;
        self.gammas
            .iter()
            .zip(x)
            .map(|(&g, &xj)| {
                let s: f64 = (1..=cutoff)
                    .map(|k| 2.0 * (2.0 * std::f64::consts::PI * k as f64 * xj).cos() / (k as f64).powi(p))
                    .sum();
                1.0 + g * s
            })
            .product()
    }

    /// Bound on `|f − truncated_series(·, cutoff)|` everywhere.
    pub fn truncation_bound(&self, cutoff: i64) -> f64 {
        let p = 2.0 * self.degree as f64;
        // Σ_{|k| > K} |k|^{-p} ≤ 2 ∫_K^∞ x^{-p} dx.
        let tail = 2.0 * (cutoff as f64).powf(1.0 - p) / (p - 1.0);
        let full = 2.0 * riemann_zeta(p).unwrap_or(f64::INFINITY);
        let kept = full - tail;
        let with_tail: f64 = self.gammas.iter().map(|g| 1.0 + g * full).product();
        let without: f64 = self.gammas.iter().map(|g| 1.0 + g * kept.max(0.0)).product();
        with_tail - without
    }
}

impl SampledFunction for BernoulliProductFunction {
    fn dim(&self) -> usize {
        self.gammas.len()
    }

    fn eval(&self, x: &[f64]) -> Complex64 {
        Complex64::new(self.value(x), 0.0)
    }
}

impl KnownSpectrum for BernoulliProductFunction {
    fn coefficient(&self, k: &[i64]) -> Complex64 {
        let p = 2 * self.degree as i32;
        let v: f64 = k
            .iter()
            .zip(&self.gammas)
            .filter(|(&kj, _)| kj != 0)
            .map(|(&kj, &g)| g / (kj.unsigned_abs() as f64).powi(p))
            .product();
        Complex64::new(v, 0.0)
    }

    fn l2_norm_sq(&self) -> f64 {
        let z = riemann_zeta(4.0 * self.degree as f64).unwrap_or(1.0);
        self.gammas.iter().map(|g| 1.0 + 2.0 * g * g * z).product()
    }
}

/// A function usable in rate experiments.
pub trait TestFunction: SampledFunction + KnownSpectrum + Sync {}

impl<T: SampledFunction + KnownSpectrum + Sync> TestFunction for T {}

/// Which sampling scheme an experiment measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingMode {
    /// The greedy multiple-lattice construction.
    Multiple,
    /// One lattice on which the whole cross is aliasing-free.
    Single,
}

/// Smallest prime `n ≥ |A|` for which one of `tries_per_prime` seeded random
/// generating vectors makes every residue over the cross distinct.
pub fn reconstructing_lattice(cross: &HyperbolicCross, seed: u64, tries_per_prime: u64) -> Result<Rank1Lattice> {
    if cross.is_empty() {
        return Err(Error::CrossTooSmall(0));
    }
    let d = cross.dim();
    let mut n = next_prime_above(cross.len() as u64 - 1).ok_or_else(|| Error::ResourceCap("prime overflow".into()))?;
    let mut trial = 0u64;
    loop {
        for _ in 0..tries_per_prime {
            let mut s = Stream::new(seed, Domain::SingleLattice, trial);
            trial += 1;
            let g: Vec<u64> = (0..d).map(|_| s.uniform_inclusive(1, n)).collect();
            let lat = Rank1Lattice::new(n, g)?;
            if aliasing_indicators(cross, &lat, 0)?.singleton_count == cross.len() {
                return Ok(lat);
            }
        }
        n = next_prime_above(n).ok_or_else(|| Error::ResourceCap("prime overflow".into()))?;
    }
}

/// Configuration of a rate experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceConfig {
    pub alpha_eff: f64,
    pub weights: WeightSpec,
    pub m_grid: Vec<f64>,
    pub plan: PlanParams,
    pub shifts: ShiftConfig,
    pub grid_per_dim: usize,
    pub mode: SamplingMode,
    #[serde(default = "default_tries")]
    pub single_tries_per_prime: u64,
}

fn default_tries() -> u64 {
    64
}

/// One radius of a rate experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    #[serde(rename = "M")]
    pub m_radius: f64,
    pub cardinality: usize,
    #[serde(rename = "L")]
    pub num_lattices: usize,
    #[serde(rename = "N")]
    pub total_points: u64,
    pub err_linf: f64,
    pub err_l2_rms: f64,
    pub seed: u64,
    pub covered: bool,
}

/// Rows plus least-squares slopes of `log err` against `log N`.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceResult {
    pub mode: SamplingMode,
    pub rows: Vec<ConvergenceRow>,
    pub slope_l2: Option<f64>,
    pub slope_linf: Option<f64>,
    pub target_rate_l2: f64,
    pub target_rate_linf: f64,
    pub fit_rows: usize,
    pub diagnostics: Vec<String>,
}

/// Errors below this are treated as exact reconstruction.
const EXACT_FLOOR: f64 = 1e-12;

/// Runs the experiment for every radius of the grid.
pub fn convergence_experiment<F: TestFunction>(
    f: &F,
    dim: usize,
    cfg: &ConvergenceConfig,
) -> Result<ConvergenceResult> {
    if f.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: f.dim(),
        });
    }
    if cfg.m_grid.is_empty() || cfg.m_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("m_grid", "must be non-empty and strictly increasing"));
    }
    cfg.plan.validate()?;
    let rows: Vec<ConvergenceRow> = cfg
        .m_grid
        .par_iter()
        .map(|&m| convergence_row(f, dim, m, cfg))
        .collect::<Result<_>>()?;
    let (slope_l2, slope_linf, fit_rows, diagnostics) = fit_slopes(&rows);
    Ok(ConvergenceResult {
        mode: cfg.mode,
        rows,
        slope_l2,
        slope_linf,
        target_rate_l2: -cfg.alpha_eff,
        target_rate_linf: -cfg.alpha_eff + 0.5,
        fit_rows,
        diagnostics,
    })
}

fn convergence_row<F: TestFunction>(f: &F, dim: usize, m: f64, cfg: &ConvergenceConfig) -> Result<ConvergenceRow> {
    let params = SmoothnessParams::new(cfg.alpha_eff, m, dim)?;
    let cross = HyperbolicCross::enumerate(params, cfg.weights.clone())?;
    let plan: MultiLatticePlan = match cfg.mode {
        SamplingMode::Multiple => build_plan(&cross, &cfg.plan)?,
        SamplingMode::Single => {
            let lat = reconstructing_lattice(&cross, cfg.plan.seed, cfg.single_tries_per_prime)?;
            MultiLatticePlan::from_lattices(&cross, vec![lat], &cfg.plan)?
        }
    };
    let rec = mult_coeffs(f, &plan, &cross)?.to_polynomial(&cross);
    let err_linf = linf_estimate(|x| (f.eval(x) - rec.evaluate(x)).norm(), dim, cfg.grid_per_dim)?;
    let err_l2_rms = rms_l2_over_shifts(f, &plan, &cross, &cfg.shifts)?;
    Ok(ConvergenceRow {
        m_radius: m,
        cardinality: cross.len(),
        num_lattices: plan.num_lattices(),
        total_points: plan.total_points,
        err_linf,
        err_l2_rms,
        seed: cfg.plan.seed,
        covered: plan.covered,
    })
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn fit_slopes(rows: &[ConvergenceRow]) -> (Option<f64>, Option<f64>, usize, Vec<String>) {
    let mut diagnostics = Vec::new();
    let usable: Vec<&ConvergenceRow> = rows.iter().filter(|r| r.covered).collect();
    let flagged = rows.len() - usable.len();
    if flagged > 0 {
        diagnostics.push(format!("{flagged} uncovered rows excluded from the fit"));
    }
    if usable
        .iter()
        .all(|r| r.err_l2_rms < EXACT_FLOOR && r.err_linf < EXACT_FLOOR)
    {
        diagnostics.push("all errors vanish: the function is reproduced exactly, no fit".into());
        return (None, None, 0, diagnostics);
    }
    let tail = &usable[usable.len() / 2..];
    let xs: Vec<f64> = tail.iter().map(|r| (r.total_points as f64).ln()).collect();
    let l2: Vec<f64> = tail.iter().map(|r| r.err_l2_rms.ln()).collect();
    let linf: Vec<f64> = tail.iter().map(|r| r.err_linf.ln()).collect();
    let ok = |v: &[f64]| v.iter().all(|x| x.is_finite());
    let slope_l2 = if ok(&l2) { fit_slope(&xs, &l2) } else { None };
    let slope_linf = if ok(&linf) { fit_slope(&xs, &linf) } else { None };
    if slope_l2.is_none() || slope_linf.is_none() {
        diagnostics.push(format!(
            "fit needs at least two rows with positive errors and distinct N ({} usable)",
            tail.len()
        ));
    }
    (slope_l2, slope_linf, tail.len(), diagnostics)
}

/// CSV with columns `M,cardinality,L,N,err_linf,err_l2_rms,seed`.
pub fn write_rows_csv<W: Write>(rows: &[ConvergenceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["M", "cardinality", "L", "N", "err_linf", "err_l2_rms", "seed"])
        .map_err(io_err)?;
    for r in rows {
        w.write_record([
            r.m_radius.to_string(),
            r.cardinality.to_string(),
            r.num_lattices.to_string(),
            r.total_points.to_string(),
            r.err_linf.to_string(),
            r.err_l2_rms.to_string(),
            r.seed.to_string(),
        ])
        .map_err(io_err)?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit_cross(alpha: f64, m: f64, d: usize) -> HyperbolicCross {
        HyperbolicCross::enumerate(SmoothnessParams::new(alpha, m, d).unwrap(), WeightSpec::unit(d)).unwrap()
    }

    #[test]
    fn random_poly_examples() {
        let c = unit_cross(1.0, 4.0, 2);
        let p = random_on_cross_poly(&c, 3, true).unwrap();
        assert!((p.korobov_norm(c.params(), c.spec()).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(p, random_on_cross_poly(&c, 3, true).unwrap());
        assert_ne!(p, random_on_cross_poly(&c, 4, true).unwrap());
        let origin = HyperbolicCross::enumerate(
            SmoothnessParams::new(1.0, 2.0, 2).unwrap(),
            WeightSpec::product(vec![0.0, 0.0]),
        )
        .unwrap();
        let q = random_on_cross_poly(&origin, 1, true).unwrap();
        assert_eq!(q.len(), 1);
        assert!((q.get(&[0, 0]).norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bernoulli_examples() {
        let f = BernoulliProductFunction::new(1, vec![1.0]).unwrap();
        assert!((f.value(&[0.0]) - (1.0 + PI * PI / 3.0)).abs() < 1e-13);
        assert!((f.value(&[0.0]) - 4.289868).abs() < 1e-6);
        assert!((f.value(&[0.5]) - (1.0 - PI * PI / 6.0)).abs() < 1e-13);
        let alt: f64 = 1.0
            + 2.0
                * (1..200_000)
                    .map(|k| if k % 2 == 0 { 1.0 } else { -1.0 } / (k as f64).powi(2))
                    .sum::<f64>();
        assert!((f.value(&[0.5]) - alt).abs() < 1e-9);
        let flat = BernoulliProductFunction::new(2, vec![0.0, 0.0, 0.0]).unwrap();
        assert_eq!(flat.value(&[0.1, 0.2, 0.3]), 1.0);
        assert!(BernoulliProductFunction::new(3, vec![1.0]).is_err());
    }

    #[test]
    fn bernoulli_series_consistency() {
        let mut s = Stream::new(1, Domain::Sweep, 7);
        for degree in [1, 2] {
            let f = BernoulliProductFunction::new(degree, vec![0.8, 0.3]).unwrap();
            for cutoff in [10, 100] {
                let bound = f.truncation_bound(cutoff);
                for _ in 0..20 {
                    let x = [s.unit(), s.unit()];
                    assert!((f.value(&x) - f.truncated_series(&x, cutoff)).abs() <= bound);
                }
            }
        }
    }

    #[test]
    fn bernoulli_spectrum() {
        let f = BernoulliProductFunction::new(1, vec![0.5, 1.0]).unwrap();
        assert_eq!(f.coefficient(&[2, 0]).re, 0.125);
        assert_eq!(f.coefficient(&[0, 0]).re, 1.0);
        let z4 = PI.powi(4) / 90.0;
        assert!((f.l2_norm_sq() - (1.0 + 0.5 * z4) * (1.0 + 2.0 * z4)).abs() < 1e-12);
        let g = BernoulliProductFunction::new(2, vec![1.0]).unwrap();
        let brute: f64 = 1.0 + 2.0 * (1..10_000).map(|k| (k as f64).powi(-8)).sum::<f64>();
        assert!((g.l2_norm_sq() - brute).abs() < 1e-12);
    }

    #[test]
    fn reconstructing_lattice_is_aliasing_free() {
        let c = unit_cross(1.4, 16.0, 2);
        let lat = reconstructing_lattice(&c, 5, 64).unwrap();
        assert!(lat.n() >= c.len() as u64);
        assert_eq!(aliasing_indicators(&c, &lat, 0).unwrap().singleton_count, c.len());
    }

    fn small_config(mode: SamplingMode) -> ConvergenceConfig {
        ConvergenceConfig {
            alpha_eff: 1.4,
            weights: WeightSpec::unit(2),
            m_grid: vec![4.0, 8.0, 16.0],
            plan: PlanParams::new(122.0, 0.5, 1).unwrap(),
            shifts: ShiftConfig { num_shifts: 4, seed: 1 },
            grid_per_dim: 32,
            mode,
            single_tries_per_prime: 64,
        }
    }

    #[test]
    fn exact_function_skips_fit() {
        let cfg = small_config(SamplingMode::Multiple);
        let c = HyperbolicCross::enumerate(SmoothnessParams::new(1.4, 4.0, 2).unwrap(), WeightSpec::unit(2)).unwrap();
        let p = random_on_cross_poly(&c, 2, true).unwrap();
        let r = convergence_experiment(&p, 2, &cfg).unwrap();
        assert!(r.rows.iter().all(|row| row.err_l2_rms < 1e-9 && row.err_linf < 1e-9));
        assert!(r.slope_l2.is_none() && !r.diagnostics.is_empty());
    }

    #[test]
    fn experiment_is_reproducible_and_decreasing() {
        let f = BernoulliProductFunction::new(1, vec![1.0, 1.0]).unwrap();
        let cfg = small_config(SamplingMode::Multiple);
        let a = convergence_experiment(&f, 2, &cfg).unwrap();
        let b = convergence_experiment(&f, 2, &cfg).unwrap();
        let (mut x, mut y) = (Vec::new(), Vec::new());
        write_rows_csv(&a.rows, &mut x).unwrap();
        write_rows_csv(&b.rows, &mut y).unwrap();
        assert_eq!(x, y);
        assert_eq!(a.slope_l2.map(f64::to_bits), b.slope_l2.map(f64::to_bits));
        for w in a.rows.windows(2) {
            assert!(w[1].err_l2_rms <= w[0].err_l2_rms * 1.05);
        }
        let header = String::from_utf8(x).unwrap();
        assert!(header.starts_with("M,cardinality,L,N,err_linf,err_l2_rms,seed\n"));
    }

    #[test]
    fn rejects_bad_grids() {
        let f = BernoulliProductFunction::new(1, vec![1.0, 1.0]).unwrap();
        let mut cfg = small_config(SamplingMode::Single);
        cfg.m_grid = vec![8.0, 4.0];
        assert!(convergence_experiment(&f, 2, &cfg).is_err());
        assert!(convergence_experiment(&f, 3, &small_config(SamplingMode::Single)).is_err());
    }

    #[test]
    fn slope_fit() {
        let xs = [1.0, 2.0, 3.0];
        assert!((fit_slope(&xs, &[2.0, 0.5, -1.0]).unwrap() + 1.5).abs() < 1e-15);
        assert!(fit_slope(&[1.0], &[1.0]).is_none());
    }
}
