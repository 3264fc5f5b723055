//! Lattice-based Fourier coefficient recovery, evaluation and error reports.

use std::collections::BTreeMap;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::construction::MultiLatticePlan;
use crate::cross::{io_err, HyperbolicCross};
use crate::error::{invalid, Error, Result};
use crate::lattice::{turn_phase, PhaseTable, Rank1Lattice};
use crate::rng::{uniform_point, Domain};
use crate::weights::{rnorm_with_weight, support_of, SmoothnessParams, WeightSpec};

/// Largest number of grid points used for an L∞ estimate.
pub const GRID_CAP: u64 = 10_000_000;

/// A function that can be sampled anywhere in `[0,1)^d`.
pub trait SampledFunction: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64]) -> Complex64;
}

/// Exact Fourier data of a function.
pub trait KnownSpectrum {
    fn coefficient(&self, k: &[i64]) -> Complex64;

    /// `‖f‖²_{L2} = Σ_k |f̂(k)|²`.
    fn l2_norm_sq(&self) -> f64;

    /// `Σ_{k∉A} |f̂(k)|²`.
    fn off_cross_energy(&self, cross: &HyperbolicCross) -> f64 {
        let inside: f64 = cross.iter().map(|k| self.coefficient(k).norm_sqr()).sum();
        (self.l2_norm_sq() - inside).max(0.0)
    }
}

/// Adapts a closure to [`SampledFunction`].
pub struct ClosureFunction<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> Complex64 + Sync> ClosureFunction<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&[f64]) -> Complex64 + Sync> SampledFunction for ClosureFunction<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> Complex64 {
        (self.f)(x)
    }
}

/// A finite Fourier series `Σ_k c_k e^{2πi k·x}`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrigPolynomial {
    dim: usize,
    terms: BTreeMap<Vec<i64>, Complex64>,
}

#[derive(Default)]
struct Kahan {
    sum: Complex64,
    comp: Complex64,
}

impl Kahan {
    fn add(&mut self, v: Complex64) {
        let y = v - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }
}

/// `e^{2πi k·x}` with each product `k_j x_j` reduced modulo 1.
pub fn fourier_mode(k: &[i64], x: &[f64]) -> Complex64 {
    let theta: f64 = k.iter().zip(x).map(|(&kj, &xj)| (kj as f64 * xj).rem_euclid(1.0)).sum();
    turn_phase(theta)
}

impl TrigPolynomial {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (Vec<i64>, Complex64)>) -> Result<Self> {
        let mut p = Self::new(dim);
        for (k, c) in terms {
            p.insert(k, c)?;
        }
        Ok(p)
    }

    /// Coefficients given in cross-ordinal order.
    pub fn from_cross(cross: &HyperbolicCross, coefficients: &[Complex64]) -> Self {
        Self {
            dim: cross.dim(),
            terms: cross.iter().zip(coefficients).map(|(k, &c)| (k.to_vec(), c)).collect(),
        }
    }

    /// Sets the coefficient at `k`, replacing any previous value.
    pub fn insert(&mut self, k: Vec<i64>, c: Complex64) -> Result<()> {
        if k.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: k.len(),
            });
        }
        if !(c.re.is_finite() && c.im.is_finite()) {
            return Err(invalid("coefficient", format!("{c} is not finite")));
        }
        self.terms.insert(k, c);
        Ok(())
    }

    pub fn get(&self, k: &[i64]) -> Complex64 {
        self.terms.get(k).copied().unwrap_or_default()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<i64>, &Complex64)> {
        self.terms.iter()
    }

    /// `Σ_k c_k e^{2πi k·x}` with compensated summation.
    pub fn evaluate(&self, x: &[f64]) -> Complex64 {
        let mut acc = Kahan::default();
        for (k, &c) in &self.terms {
            acc.add(c * fourier_mode(k, x));
        }
        acc.sum
    }

    /// `self − other`, keeping the union of supports.
    pub fn difference(&self, other: &TrigPolynomial) -> Result<TrigPolynomial> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: other.dim,
            });
        }
        let mut terms = self.terms.clone();
        for (k, &c) in &other.terms {
            *terms.entry(k.clone()).or_default() -= c;
        }
        Ok(Self { dim: self.dim, terms })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            terms: self.terms.iter().map(|(k, &c)| (k.clone(), c * factor)).collect(),
        }
    }

    /// `‖f‖_{d,α,γ} = (Σ_k r(k)² |c_k|²)^{1/2}`; infinite when a nonzero
    /// coefficient sits on a zero-weight support.
    pub fn korobov_norm(&self, params: &SmoothnessParams, spec: &WeightSpec) -> Result<f64> {
        let mut total = 0.0;
        for (k, c) in &self.terms {
            if c.norm_sqr() == 0.0 {
                continue;
            }
            let g = spec.weight_of(&support_of(k))?;
            let r = rnorm_with_weight(k, params.alpha, g);
            total += r * r * c.norm_sqr();
        }
        Ok(total.sqrt())
    }

    /// CSV with header `k_1,...,k_d,re,im`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (1..=self.dim).map(|j| format!("k_{j}")).collect();
        header.push("re".into());
        header.push("im".into());
        w.write_record(&header).map_err(io_err)?;
        for (k, c) in &self.terms {
            let mut rec: Vec<String> = k.iter().map(|x| x.to_string()).collect();
            rec.push(c.re.to_string());
            rec.push(c.im.to_string());
            w.write_record(&rec).map_err(io_err)?;
        }
        w.flush().map_err(|e| Error::Io(e.to_string()))
    }
}

impl SampledFunction for TrigPolynomial {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> Complex64 {
        self.evaluate(x)
    }
}

impl KnownSpectrum for TrigPolynomial {
    fn coefficient(&self, k: &[i64]) -> Complex64 {
        self.get(k)
    }

    fn l2_norm_sq(&self) -> f64 {
        self.terms.values().map(|c| c.norm_sqr()).sum()
    }

    fn off_cross_energy(&self, cross: &HyperbolicCross) -> f64 {
        self.terms
            .iter()
            .filter(|(k, _)| !cross.contains(k))
            .map(|(_, c)| c.norm_sqr())
            .sum()
    }
}

/// `f(y_i + shift)` for every point of the lattice, in point order.
pub fn lattice_samples<F: SampledFunction + ?Sized>(
    f: &F,
    lat: &Rank1Lattice,
    shift: Option<&[f64]>,
) -> Vec<Complex64> {
    let n = lat.n() as f64;
    (0..lat.n())
        .into_par_iter()
        .map(|i| {
            let mut y: Vec<f64> = lat.point_numerators(i).iter().map(|&a| a as f64 / n).collect();
            if let Some(s) = shift {
                for (yj, sj) in y.iter_mut().zip(s) {
                    *yj = (*yj + sj).rem_euclid(1.0);
                }
            }
            f.eval(&y)
        })
        .collect()
}

/// `(1/n) Σ_i s_i e^{-2πi i h/n}`.
fn lattice_dft(samples: &[Complex64], phases: &PhaseTable, h: u64) -> Complex64 {
    let n = phases.modulus();
    let mut acc = Complex64::default();
    let mut idx = 0u64;
    for &s in samples {
        acc += s * phases.get(idx);
        idx += h;
        if idx >= n {
            idx -= n;
        }
    }
    acc / n as f64
}

fn check_dims<F: SampledFunction + ?Sized>(f: &F, cross: &HyperbolicCross) -> Result<()> {
    if f.dim() != cross.dim() {
        return Err(Error::DimensionMismatch {
            expected: cross.dim(),
            actual: f.dim(),
        });
    }
    Ok(())
}

/// Discrete coefficients of one lattice for every index of the cross.
pub fn single_lattice_coeffs<F: SampledFunction + ?Sized>(
    f: &F,
    lat: &Rank1Lattice,
    cross: &HyperbolicCross,
) -> Result<TrigPolynomial> {
    check_dims(f, cross)?;
    if lat.dim() != cross.dim() {
        return Err(Error::DimensionMismatch {
            expected: cross.dim(),
            actual: lat.dim(),
        });
    }
    let samples = lattice_samples(f, lat, None);
    let phases = PhaseTable::conjugate_roots(lat.n());
    let coeffs: Vec<Complex64> = (0..cross.len())
        .into_par_iter()
        .map(|i| lattice_dft(&samples, &phases, lat.residue_of(cross.index(i))))
        .collect();
    Ok(TrigPolynomial::from_cross(cross, &coeffs))
}

/// Coefficients recovered from a plan, in cross-ordinal order.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub coefficients: Vec<Complex64>,
    /// Ordinals with `ξ(k) = 0`; their coefficient is 0.
    pub uncovered: Vec<usize>,
}

impl Reconstruction {
    pub fn to_polynomial(&self, cross: &HyperbolicCross) -> TrigPolynomial {
        TrigPolynomial::from_cross(cross, &self.coefficients)
    }
}

/// Averages the aliasing-free discrete coefficients over all lattices.
pub fn mult_coeffs<F: SampledFunction + ?Sized>(
    f: &F,
    plan: &MultiLatticePlan,
    cross: &HyperbolicCross,
) -> Result<Reconstruction> {
    reconstruct(f, plan, cross, None)
}

/// Like [`mult_coeffs`], sampling at `{y + shift}` and removing the phase
/// `e^{2πi k·shift}` from each coefficient.
pub fn mult_coeffs_shifted<F: SampledFunction + ?Sized>(
    f: &F,
    plan: &MultiLatticePlan,
    cross: &HyperbolicCross,
    shift: &[f64],
) -> Result<Reconstruction> {
    if shift.len() != cross.dim() {
        return Err(Error::DimensionMismatch {
            expected: cross.dim(),
            actual: shift.len(),
        });
    }
    reconstruct(f, plan, cross, Some(shift))
}

fn reconstruct<F: SampledFunction + ?Sized>(
    f: &F,
    plan: &MultiLatticePlan,
    cross: &HyperbolicCross,
    shift: Option<&[f64]>,
) -> Result<Reconstruction> {
    check_dims(f, cross)?;
    plan.check_against(cross)?;
    let per_lattice: Vec<(Vec<Complex64>, PhaseTable)> = plan
        .lattices
        .iter()
        .map(|lat| (lattice_samples(f, lat, shift), PhaseTable::conjugate_roots(lat.n())))
        .collect();
    let coefficients: Vec<Complex64> = (0..cross.len())
        .into_par_iter()
        .map(|i| {
            let xi = plan.xi[i];
            if xi == 0 {
                return Complex64::default();
            }
            let k = cross.index(i);
            let mut acc = Complex64::default();
            for ((lat, table), (samples, phases)) in plan.lattices.iter().zip(&plan.tables).zip(&per_lattice) {
                if table.indicators[i] {
                    acc += lattice_dft(samples, phases, lat.residue_of(k));
                }
            }
            let mut c = acc / xi as f64;
            if let Some(s) = shift {
                c *= fourier_mode(k, s).conj();
            }
            c
        })
        .collect();
    Ok(Reconstruction {
        coefficients,
        uncovered: plan.uncovered(),
    })
}

/// Grid maximum of `g` over `[0,1)^d` refined by coordinate-wise
/// golden-section search around the best grid points.
pub fn linf_estimate<G: Fn(&[f64]) -> f64 + Sync>(g: G, dim: usize, grid_per_dim: usize) -> Result<f64> {
    if grid_per_dim == 0 {
        return Err(invalid("grid_per_dim", "must be >= 1"));
    }
    let total = (grid_per_dim as u64)
        .checked_pow(dim as u32)
        .filter(|&t| t <= GRID_CAP)
        .ok_or_else(|| Error::ResourceCap(format!("grid of {grid_per_dim}^{dim} points")))?;
    let h = 1.0 / grid_per_dim as f64;
    let point = |code: u64| -> Vec<f64> {
        let mut c = code;
        let mut x = vec![0.0; dim];
        for xj in x.iter_mut().rev() {
            *xj = (c % grid_per_dim as u64) as f64 * h;
            c /= grid_per_dim as u64;
        }
        x
    };
    let mut values: Vec<(f64, u64)> = (0..total).into_par_iter().map(|code| (g(&point(code)), code)).collect();
    values.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut best = values.first().map_or(0.0, |v| v.0);
    for &(_, code) in values.iter().take(4) {
        let mut x = point(code);
        let mut fx = g(&x);
        for _ in 0..3 {
            for j in 0..dim {
                let center = x[j];
                let (t, v) = golden_max(
                    |t| {
                        let mut y = x.clone();
                        y[j] = t.rem_euclid(1.0);
                        g(&y)
                    },
                    center - h,
                    center + h,
                );
                if v > fx {
                    fx = v;
                    x[j] = t.rem_euclid(1.0);
                }
            }
        }
        best = best.max(fx);
    }
    Ok(best)
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..40 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Error measures of an approximation against known coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorReport {
    pub l2_exact: f64,
    pub linf_estimate: f64,
    pub uncovered_count: usize,
}

/// Exact L2 error by Parseval over the union of supports, and a grid-based
/// lower estimate of the L∞ error.
pub fn error_report(
    truth: &TrigPolynomial,
    approx: &TrigPolynomial,
    cross: &HyperbolicCross,
    grid_per_dim: usize,
) -> Result<ErrorReport> {
    let diff = truth.difference(approx)?;
    let l2_exact = diff.l2_norm_sq().sqrt();
    let linf = linf_estimate(|x| diff.evaluate(x).norm(), truth.dim(), grid_per_dim)?;
    let uncovered_count = cross
        .iter()
        .filter(|k| truth.get(k) != Complex64::default() && approx.get(k) == Complex64::default())
        .count();
    Ok(ErrorReport {
        l2_exact,
        linf_estimate: linf,
        uncovered_count,
    })
}

/// Random shifts used by the randomized reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct ShiftConfig {
    pub num_shifts: usize,
    pub seed: u64,
}

impl ShiftConfig {
    pub fn shift(&self, r: usize, dim: usize) -> Vec<f64> {
        uniform_point(self.seed, Domain::Shift, r as u64, dim)
    }
}

/// `‖f − A_Δ(f)‖²_{L2}` for one shift, by Parseval.
pub fn shifted_l2_error_sq<F: SampledFunction + KnownSpectrum + ?Sized>(
    f: &F,
    plan: &MultiLatticePlan,
    cross: &HyperbolicCross,
    shift: &[f64],
    off_cross: f64,
) -> Result<f64> {
    let rec = mult_coeffs_shifted(f, plan, cross, shift)?;
    let inside: f64 = cross
        .iter()
        .zip(&rec.coefficients)
        .map(|(k, &c)| (f.coefficient(k) - c).norm_sqr())
        .sum();
    Ok(off_cross + inside)
}

/// `( (1/R) Σ_r ‖f − A_{Δ_r}(f)‖²_{L2} )^{1/2}`.
pub fn rms_l2_over_shifts<F: SampledFunction + KnownSpectrum + ?Sized>(
    f: &F,
    plan: &MultiLatticePlan,
    cross: &HyperbolicCross,
    cfg: &ShiftConfig,
) -> Result<f64> {
    if cfg.num_shifts == 0 {
        return Err(invalid("num_shifts", "must be >= 1"));
    }
    let off_cross = f.off_cross_energy(cross);
    let mut total = 0.0;
    for r in 0..cfg.num_shifts {
        let shift = cfg.shift(r, cross.dim());
        total += shifted_l2_error_sq(f, plan, cross, &shift, off_cross)?;
    }
    Ok((total / cfg.num_shifts as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::{build_plan, PlanParams};
    use crate::rng::Stream;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn unit_cross(m: f64, d: usize) -> HyperbolicCross {
        HyperbolicCross::enumerate(SmoothnessParams::new(1.0, m, d).unwrap(), WeightSpec::unit(d)).unwrap()
    }

    fn random_poly(support: &[Vec<i64>], dim: usize, seed: u64) -> TrigPolynomial {
        let mut s = Stream::new(seed, Domain::Polynomial, 99);
        TrigPolynomial::from_terms(
            dim,
            support
                .iter()
                .map(|k| (k.clone(), c(s.normal(), s.normal())))
                .collect::<Vec<_>>(),
        )
        .unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let one = TrigPolynomial::from_terms(2, [(vec![0, 0], c(1.0, 0.0))]).unwrap();
        assert_eq!(one.evaluate(&[0.3, 0.7]), c(1.0, 0.0));
        let cos = TrigPolynomial::from_terms(1, [(vec![1], c(1.0, 0.0)), (vec![-1], c(1.0, 0.0))]).unwrap();
        assert!(cos.evaluate(&[0.25]).norm() < 1e-15);
        let p = random_poly(&[vec![1, 2], vec![-3, 0], vec![5, 5]], 2, 1);
        let sum: Complex64 = p.iter().map(|(_, &v)| v).sum();
        assert!((p.evaluate(&[0.0, 0.0]) - sum).norm() < 1e-14);
        assert!(TrigPolynomial::new(2).insert(vec![1], c(1.0, 0.0)).is_err());
    }

    #[test]
    fn single_lattice_examples() {
        let cr = unit_cross(3.0, 2);
        let lat = Rank1Lattice::new(3907, vec![1, 1234]).unwrap();
        let mode = TrigPolynomial::from_terms(2, [(vec![1, -2], c(1.0, 0.0))]).unwrap();
        let got = single_lattice_coeffs(&mode, &lat, &cr).unwrap();
        for (k, v) in got.iter() {
            let expect = if k == &vec![1, -2] { 1.0 } else { 0.0 };
            assert!((v - expect).norm() < 1e-10, "{k:?}");
        }
        let small = unit_cross(1.0, 2);
        let lat = Rank1Lattice::new(5, vec![1, 2]).unwrap();
        let mode = TrigPolynomial::from_terms(2, [(vec![2, -1], c(1.0, 0.0))]).unwrap();
        let got = single_lattice_coeffs(&mode, &lat, &small).unwrap();
        assert!((got.get(&[0, 0]) - 1.0).norm() < 1e-12);
        let zero = TrigPolynomial::new(2);
        assert!(single_lattice_coeffs(&zero, &lat, &small)
            .unwrap()
            .iter()
            .all(|(_, v)| v.norm() == 0.0));
    }

    #[test]
    fn aliasing_identity() {
        let cr = unit_cross(4.0, 2);
        let support: Vec<Vec<i64>> = (-9..=9).flat_map(|a| (-9..=9).map(move |b| vec![a, b])).collect();
        let f = random_poly(&support, 2, 3);
        for (n, g) in [(31u64, [1u64, 7]), (41, [3, 17]), (13, [1, 5])] {
            let lat = Rank1Lattice::new(n, g.to_vec()).unwrap();
            let got = single_lattice_coeffs(&f, &lat, &cr).unwrap();
            for k in cr.iter() {
                let expect: Complex64 = f
                    .iter()
                    .filter(|(m, _)| {
                        let ell: Vec<i64> = m.iter().zip(k).map(|(a, b)| a - b).collect();
                        lat.dual_contains(&ell).unwrap()
                    })
                    .map(|(_, &v)| v)
                    .sum();
                assert!((got.get(k) - expect).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn exact_on_cross_with_and_without_shift() {
        let cr = unit_cross(6.0, 2);
        let plan = build_plan(&cr, &PlanParams::new(122.0, 0.5, 4).unwrap()).unwrap();
        assert!(plan.covered);
        let support: Vec<Vec<i64>> = cr.iter().map(|k| k.to_vec()).collect();
        let f = random_poly(&support, 2, 5);
        let det = mult_coeffs(&f, &plan, &cr).unwrap();
        assert!(det.uncovered.is_empty());
        for (k, &v) in cr.iter().zip(&det.coefficients) {
            assert!((v - f.get(k)).norm() < 1e-9);
        }
        let zero_shift = mult_coeffs_shifted(&f, &plan, &cr, &[0.0, 0.0]).unwrap();
        assert_eq!(zero_shift, det);
        let shifted = mult_coeffs_shifted(&f, &plan, &cr, &[0.31, 0.77]).unwrap();
        for (k, &v) in cr.iter().zip(&shifted.coefficients) {
            assert!((v - f.get(k)).norm() < 1e-9);
        }
        let cfg = ShiftConfig { num_shifts: 3, seed: 1 };
        assert!(rms_l2_over_shifts(&f, &plan, &cr, &cfg).unwrap() < 1e-9);
    }

    #[test]
    fn off_cross_mode_aliasing() {
        let cr = unit_cross(6.0, 2);
        let plan = build_plan(&cr, &PlanParams::new(122.0, 0.5, 8).unwrap()).unwrap();
        let m = vec![700i64, -3];
        assert!(!cr.contains(&m));
        let f = TrigPolynomial::from_terms(2, [(m.clone(), c(1.0, 0.0))]).unwrap();
        let rec = mult_coeffs(&f, &plan, &cr).unwrap();
        for (i, k) in cr.iter().enumerate() {
            let ell: Vec<i64> = m.iter().zip(k).map(|(a, b)| a - b).collect();
            let hits = plan
                .lattices
                .iter()
                .zip(&plan.tables)
                .filter(|(lat, t)| t.indicators[i] && lat.dual_contains(&ell).unwrap())
                .count();
            let expect = hits as f64 / plan.xi[i] as f64;
            assert!((rec.coefficients[i] - expect).norm() < 1e-10);
        }
        let cfg = ShiftConfig { num_shifts: 1, seed: 2 };
        let rms = rms_l2_over_shifts(&f, &plan, &cr, &cfg).unwrap();
        assert!(rms >= 1.0);
        let shift = cfg.shift(0, 2);
        let single = shifted_l2_error_sq(&f, &plan, &cr, &shift, 1.0).unwrap();
        assert!((rms - single.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn shifted_estimator_is_unbiased() {
        // Single lattice whose dual contains (5, 0) − (0, 0): the aliased
        // mode survives at the origin with a random phase.
        let cr = unit_cross(1.0, 2);
        let lat = Rank1Lattice::new(5, vec![1, 2]).unwrap();
        let plan = crate::construction::MultiLatticePlan::from_lattices(
            &cr,
            vec![lat],
            &PlanParams::new(122.0, 0.5, 0).unwrap(),
        )
        .unwrap();
        let origin = cr.ordinal(&[0, 0]).unwrap();
        assert_eq!(plan.xi[origin], 1);
        let f = TrigPolynomial::from_terms(2, [(vec![5, 0], c(1.0, 0.0))]).unwrap();
        for (r, seed) in [(100usize, 3u64), (10_000, 4)] {
            let mut mean = Complex64::default();
            for i in 0..r {
                let shift = uniform_point(seed, Domain::Shift, i as u64, 2);
                let rec = mult_coeffs_shifted(&f, &plan, &cr, &shift).unwrap();
                mean += rec.coefficients[origin];
            }
            mean /= r as f64;
            // Each draw is a unit phase: variance 1 split over re/im.
            let se = (0.5 / r as f64).sqrt();
            assert!(mean.re.abs() < 3.0 * se && mean.im.abs() < 3.0 * se);
        }
    }

    #[test]
    fn uncovered_frequencies_are_reported() {
        let cr = unit_cross(6.0, 2);
        let plan = build_plan(&cr, &PlanParams::new(122.0, 0.5, 4).unwrap()).unwrap();
        let cut = plan.truncated(0);
        let f = random_poly(&[vec![1, 1]], 2, 9);
        let rec = mult_coeffs(&f, &cut, &cr).unwrap();
        assert_eq!(rec.uncovered.len(), cr.len());
        assert!(rec.coefficients.iter().all(|v| v.norm() == 0.0));
        let other = unit_cross(5.0, 2);
        assert!(matches!(mult_coeffs(&f, &plan, &other), Err(Error::PlanMismatch(_))));
    }

    #[test]
    fn error_report_examples() {
        let cr = unit_cross(2.0, 1);
        let truth = TrigPolynomial::from_terms(1, [(vec![1], c(1.0, 0.0))]).unwrap();
        let r = error_report(&truth, &truth, &cr, 64).unwrap();
        assert_eq!((r.l2_exact, r.linf_estimate), (0.0, 0.0));
        let r = error_report(&truth, &TrigPolynomial::new(1), &cr, 64).unwrap();
        assert!((r.linf_estimate - 1.0).abs() < 1e-6);
        assert_eq!(r.uncovered_count, 1);
        let extra = TrigPolynomial::from_terms(1, [(vec![1], c(1.0, 0.0)), (vec![9], c(0.0, 0.25))]).unwrap();
        let r = error_report(&extra, &truth, &cr, 64).unwrap();
        assert!((r.l2_exact - 0.25).abs() < 1e-15);
        assert!(linf_estimate(|_| 1.0, 3, 1000).is_err());
    }

    #[test]
    fn polish_finds_off_grid_peaks() {
        // Peak at x = 0.123456, between grid points.
        let g = |x: &[f64]| 1.0 - 10.0 * (x[0] - 0.123456).powi(2) - (x[1] - 0.9).powi(2);
        let v = linf_estimate(g, 2, 16).unwrap();
        assert!((v - 1.0).abs() < 1e-9);
    }

    #[test]
    fn korobov_norm_and_csv() {
        let p = SmoothnessParams::new(1.0, 4.0, 2).unwrap();
        let spec = WeightSpec::product(vec![0.5, 1.0]);
        let f = TrigPolynomial::from_terms(2, [(vec![0, 0], c(1.0, 0.0)), (vec![2, 0], c(0.0, 0.5))]).unwrap();
        assert!((f.korobov_norm(&p, &spec).unwrap() - 5f64.sqrt()).abs() < 1e-14);
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "k_1,k_2,re,im\n0,0,1,0\n2,0,0,0.5\n");
    }
}
