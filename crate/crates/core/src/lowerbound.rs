//! Two-dimensional single-lattice lower bounds: short dual vectors found by
//! pigeonhole or by continued fractions, and the fooling functions built from
//! them that vanish on every lattice point.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approx::{fourier_mode, SampledFunction};
use crate::cross::io_err;
use crate::error::{invalid, Error, Result};
use crate::lattice::Rank1Lattice;
use crate::primes::{inv_mod_prime, is_prime};
use crate::rng::{Domain, Stream};

/// Tolerance for the pointwise vanishing check of a fooling function.
pub const VANISHING_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShortVectorMethod {
    Pigeonhole,
    ContinuedFraction,
}

impl ShortVectorMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            ShortVectorMethod::Pigeonhole => "pigeonhole",
            ShortVectorMethod::ContinuedFraction => "continued_fraction",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificates {
    pub max_abs: u64,
    /// Denominator of the convergent following the selected one.
    pub q_next: Option<u64>,
    pub bound_ok: bool,
}

/// Nonzero `h` with `h·g ≡ 0 (mod n)` together with its magnitude certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShortDualVector {
    pub n: u64,
    pub g: (u64, u64),
    pub h: (i64, i64),
    pub method: ShortVectorMethod,
    pub certificates: Certificates,
}

impl ShortDualVector {
    pub fn in_dual(&self) -> bool {
        let s = self.h.0 as i128 * self.g.0 as i128 + self.h.1 as i128 * self.g.1 as i128;
        self.h != (0, 0) && s.rem_euclid(self.n as i128) == 0
    }

    /// Recheck dual membership and the method's magnitude bound.
    pub fn validate(&self) -> Result<()> {
        if !self.in_dual() {
            return Err(invalid("h", format!("{:?} is not a nonzero dual vector", self.h)));
        }
        if !self.certificates.bound_ok {
            return Err(invalid("h", format!("{:?} fails its magnitude certificate", self.h)));
        }
        Ok(())
    }

    fn lattice(&self) -> Result<Rank1Lattice> {
        Rank1Lattice::new(self.n, vec![self.g.0, self.g.1])
    }
}

fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

fn check_input(n: u64, g: (u64, u64)) -> Result<()> {
    if !is_prime(n) {
        return Err(invalid("N", format!("{n} is not prime")));
    }
    if g.0.is_multiple_of(n) || g.1.is_multiple_of(n) {
        return Err(invalid(
            "g",
            format!("components of ({}, {}) must be nonzero mod {n}", g.0, g.1),
        ));
    }
    Ok(())
}

/// Shortest difference of two points of `{0,…,⌊√N⌋}²` whose residues
/// `k·g mod N` collide.
///
/// Every such difference has both components nonzero with magnitude at most
/// `⌊√N⌋`. Among all of them the result minimises `max(|h1|,|h2|)`, is
/// normalised to `h1 > 0`, and then takes the lexicographically smallest
/// `(h2, h1)`.
pub fn pigeonhole_short_vector(n: u64, g: (u64, u64)) -> Result<ShortDualVector> {
    check_input(n, g)?;
    let s = isqrt(n) as i64;
    // h2 ≡ -h1·g1·g2⁻¹ (mod N); the two representatives closest to zero are checked.
    let ratio = (g.0 % n) as u128 * inv_mod_prime(g.1, n).expect("g2 nonzero mod prime") as u128 % n as u128;
    let mut best: Option<(i64, i64, i64)> = None;
    for h1 in 1..=s {
        let r = (n as u128 - (h1 as u128 * ratio) % n as u128) % n as u128;
        for h2 in [r as i64, r as i64 - n as i64] {
            if h2 == 0 || h2.abs() > s {
                continue;
            }
            let key = (h1.max(h2.abs()), h2, h1);
            if best.is_none_or(|b| key < b) {
                best = Some(key);
            }
        }
    }
    let (max_abs, h2, h1) = best.ok_or_else(|| Error::InvalidParameter {
        name: "g",
        reason: format!("no collision found for N = {n}"),
    })?;
    Ok(ShortDualVector {
        n,
        g,
        h: (h1, h2),
        method: ShortVectorMethod::Pigeonhole,
        certificates: Certificates {
            max_abs: max_abs as u64,
            q_next: None,
            bound_ok: (max_abs as u64) * (max_abs as u64) <= n,
        },
    })
}

/// Dual vector `(u·q_t − N·p_t, −q_t)` from the last convergent `p_t/q_t` of
/// `u/N` with `q_t ≤ √N`, where `u = g1⁻¹ g2 mod N`.
pub fn cf_short_vector(n: u64, g: (u64, u64)) -> Result<ShortDualVector> {
    check_input(n, g)?;
    let u = (inv_mod_prime(g.0, n).expect("g1 nonzero mod prime") as u128 * (g.1 % n) as u128 % n as u128) as u64;

    // Convergents of u/N, starting from p_0/q_0 = 0/1.
    let (mut num, mut den) = (n, u);
    let (mut p_prev, mut q_prev) = (1i128, 0i128);
    let (mut p, mut q) = (0i128, 1i128);
    let n_i = n as i128;
    let q_next = loop {
        let a = (num / den) as i128;
        let (p_new, q_new) = (a * p + p_prev, a * q + q_prev);
        if q_new * q_new > n_i {
            break q_new;
        }
        (p_prev, q_prev, p, q) = (p, q, p_new, q_new);
        (num, den) = (den, num % den);
        if den == 0 {
            unreachable!("final convergent has q = N > √N");
        }
    };
    let k = u as i128 * q - n_i * p;
    let h = (k as i64, -(q as i64));
    Ok(ShortDualVector {
        n,
        g,
        h,
        method: ShortVectorMethod::ContinuedFraction,
        certificates: Certificates {
            max_abs: k.unsigned_abs().max(q as u128) as u64,
            q_next: Some(q_next as u64),
            bound_ok: k.unsigned_abs() * q_next as u128 <= n as u128 && q * q <= n_i,
        },
    })
}

/// Normalised two-mode function `(e^{2πi h1 x1} − e^{−2πi h2 x2}) / √(|h1|^{2α} + |h2|^{2α})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoolingFunction {
    pub h: (i64, i64),
    pub alpha: f64,
}

impl FoolingFunction {
    pub fn new(h: (i64, i64), alpha: f64) -> Result<Self> {
        if h.0 == 0 || h.1 == 0 {
            return Err(invalid("h", "both components must be nonzero"));
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(invalid("alpha", format!("{alpha} must be positive")));
        }
        Ok(Self { h, alpha })
    }

    fn norm_sq(&self) -> f64 {
        (self.h.0.unsigned_abs() as f64).powf(2.0 * self.alpha)
            + (self.h.1.unsigned_abs() as f64).powf(2.0 * self.alpha)
    }

    pub fn l2_norm(&self) -> f64 {
        (2.0 / self.norm_sq()).sqrt()
    }
}

impl SampledFunction for FoolingFunction {
    fn dim(&self) -> usize {
        2
    }

    fn eval(&self, x: &[f64]) -> Complex64 {
        let a = fourier_mode(&[self.h.0], &x[..1]);
        let b = fourier_mode(&[-self.h.1], &x[1..2]);
        (a - b) / self.norm_sq().sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoolingReport {
    pub error_value: f64,
    pub floor: f64,
    pub max_on_lattice: f64,
    pub vanishes_on_lattice: bool,
}

/// L2 error of the fooling function under the single-lattice operator, the
/// `N^{−α/2}` floor, and a pointwise check that it vanishes on the lattice.
pub fn fooling_error(alpha: f64, v: &ShortDualVector) -> Result<FoolingReport> {
    v.validate()?;
    let f = FoolingFunction::new(v.h, alpha)?;
    let lat = v.lattice()?;
    let max_on_lattice = (0..lat.n())
        .into_par_iter()
        .map(|i| f.eval(&lat.point(i)).norm())
        .reduce(|| 0.0, f64::max);
    let error_value = f.l2_norm();
    let floor = (v.n as f64).powf(-alpha / 2.0);
    if error_value < floor * (1.0 - 1e-12) {
        return Err(invalid(
            "h",
            format!("error {error_value} falls below the floor {floor}"),
        ));
    }
    Ok(FoolingReport {
        error_value,
        floor,
        max_on_lattice,
        vanishes_on_lattice: max_on_lattice <= VANISHING_TOL,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub primes: Vec<u64>,
    pub pairs_per_prime: usize,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "N")]
    pub n: u64,
    pub g1: u64,
    pub g2: u64,
    pub method: ShortVectorMethod,
    pub h1: i64,
    pub h2: i64,
    pub error_value: f64,
    pub floor: f64,
    #[serde(skip)]
    pub vanishes_on_lattice: bool,
}

/// Both constructions for `pairs_per_prime` random generators per prime.
///
/// Generator `j` of prime `i` is drawn from the sweep stream with index
/// `i·pairs_per_prime + j`, components uniform in `{1,…,N−1}`.
pub fn sweep(cfg: &SweepConfig, seed: u64) -> Result<Vec<SweepRow>> {
    if !(cfg.alpha.is_finite() && cfg.alpha > 0.0) {
        return Err(invalid("alpha", format!("{} must be positive", cfg.alpha)));
    }
    for &p in &cfg.primes {
        if p < 3 || !is_prime(p) {
            return Err(invalid("primes", format!("{p} is not an odd prime")));
        }
    }
    let jobs: Vec<(u64, u64)> = cfg
        .primes
        .iter()
        .enumerate()
        .flat_map(|(i, &p)| (0..cfg.pairs_per_prime).map(move |j| (p, (i * cfg.pairs_per_prime + j) as u64)))
        .collect();
    let rows: Result<Vec<Vec<SweepRow>>> = jobs
        .par_iter()
        .map(|&(p, idx)| {
            let mut s = Stream::new(seed, Domain::Sweep, idx);
            let g = (s.uniform_inclusive(1, p - 1), s.uniform_inclusive(1, p - 1));
            [pigeonhole_short_vector(p, g)?, cf_short_vector(p, g)?]
                .into_iter()
                .map(|v| {
                    let rep = fooling_error(cfg.alpha, &v)?;
                    Ok(SweepRow {
                        n: p,
                        g1: g.0,
                        g2: g.1,
                        method: v.method,
                        h1: v.h.0,
                        h2: v.h.1,
                        error_value: rep.error_value,
                        floor: rep.floor,
                        vanishes_on_lattice: rep.vanishes_on_lattice,
                    })
                })
                .collect()
        })
        .collect();
    Ok(rows?.into_iter().flatten().collect())
}

/// CSV with header `N,g1,g2,method,h1,h2,error_value,floor`.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(io_err)?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

/// Residue of `h·g` modulo `n`; zero exactly for dual vectors.
pub fn dual_residue(n: u64, g: (u64, u64), h: (i64, i64)) -> u64 {
    let s = h.0 as i128 * g.0 as i128 + h.1 as i128 * g.1 as i128;
    s.rem_euclid(n as i128) as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::single_lattice_coeffs;
    use crate::cross::HyperbolicCross;
    use crate::weights::{SmoothnessParams, WeightSpec};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    // Independent oracle: scan the full box and apply the same ordering.
    fn brute_pigeonhole(n: u64, g: (u64, u64)) -> (i64, i64) {
        let s = isqrt(n) as i64;
        let mut best: Option<(i64, i64, i64)> = None;
        for a in 0..=s {
            for b in 0..=s {
                for c in 0..=s {
                    for d in 0..=s {
                        let (h1, h2) = (a - c, b - d);
                        if (h1, h2) == (0, 0) || dual_residue(n, g, (h1, h2)) != 0 {
                            continue;
                        }
                        let (h1, h2) = if h1 < 0 { (-h1, -h2) } else { (h1, h2) };
                        let key = (h1.abs().max(h2.abs()), h2, h1);
                        if best.is_none_or(|x| key < x) {
                            best = Some(key);
                        }
                    }
                }
            }
        }
        let b = best.unwrap();
        (b.2, b.1)
    }

    #[test]
    fn pigeonhole_examples() {
        assert_eq!(pigeonhole_short_vector(13, (1, 5)).unwrap().h, (2, -3));
        assert_eq!(pigeonhole_short_vector(5, (1, 2)).unwrap().h, (2, -1));
        assert!(pigeonhole_short_vector(5, (5, 10)).is_err());
        assert!(pigeonhole_short_vector(12, (1, 5)).is_err());
    }

    #[test]
    fn pigeonhole_matches_box_scan() {
        for n in [2u64, 3, 5, 7, 11, 13, 17, 29, 31, 37] {
            for g1 in 1..n {
                for g2 in 1..n {
                    let v = pigeonhole_short_vector(n, (g1, g2)).unwrap();
                    assert_eq!(v.h, brute_pigeonhole(n, (g1, g2)), "n={n} g=({g1},{g2})");
                }
            }
        }
    }

    #[test]
    fn cf_examples() {
        let v = cf_short_vector(13, (1, 5)).unwrap();
        assert_eq!(v.h, (2, -3));
        assert_eq!(v.certificates.q_next, Some(5));
        assert!(v.certificates.bound_ok);

        let v = cf_short_vector(5, (1, 2)).unwrap();
        assert_eq!(v.h, (-1, -2));
        assert_eq!(v.certificates.q_next, Some(5));

        let v = cf_short_vector(101, (7, 7)).unwrap();
        assert_eq!(v.h, (1, -1));
        assert_eq!(v.certificates.q_next, Some(101));
        assert!(v.certificates.bound_ok);
    }

    #[test]
    fn fooling_examples() {
        let v = cf_short_vector(13, (1, 5)).unwrap();
        let r = fooling_error(1.0, &v).unwrap();
        assert_relative_eq!(r.error_value, (2.0f64 / 13.0).sqrt(), epsilon = 1e-15);
        assert_relative_eq!(r.floor, 13f64.powf(-0.5), epsilon = 1e-15);
        assert!(r.vanishes_on_lattice);

        let v = pigeonhole_short_vector(5, (1, 2)).unwrap();
        let r = fooling_error(2.0, &v).unwrap();
        assert_relative_eq!(r.error_value, (2.0f64 / 17.0).sqrt(), epsilon = 1e-15);
        assert_relative_eq!(r.floor, 0.2, epsilon = 1e-15);

        let f = FoolingFunction::new((3, -3), 1.5).unwrap();
        assert_relative_eq!(f.l2_norm(), 9f64.powf(-0.75), epsilon = 1e-14);
    }

    #[test]
    fn fooling_rejects_non_dual() {
        let mut v = cf_short_vector(13, (1, 5)).unwrap();
        v.h = (1, 1);
        assert!(fooling_error(1.0, &v).is_err());
    }

    #[test]
    fn fooling_coefficients_vanish_on_cross() {
        let params = SmoothnessParams::new(1.0, 16.0, 2).unwrap();
        let cross = HyperbolicCross::enumerate(params, WeightSpec::unit(2)).unwrap();
        for (n, g) in [(13u64, (1u64, 5u64)), (101, (3, 44)), (997, (17, 600))] {
            for v in [pigeonhole_short_vector(n, g).unwrap(), cf_short_vector(n, g).unwrap()] {
                let f = FoolingFunction::new(v.h, 1.0).unwrap();
                let lat = Rank1Lattice::new(n, vec![g.0, g.1]).unwrap();
                let coeffs = single_lattice_coeffs(&f, &lat, &cross).unwrap();
                for (_, c) in coeffs.iter() {
                    assert!(c.norm() <= 1e-10);
                }
            }
        }
    }

    #[test]
    fn sweep_csv_and_determinism() {
        let cfg = SweepConfig {
            primes: vec![101, 1009],
            pairs_per_prime: 3,
            alpha: 1.0,
        };
        let a = sweep(&cfg, 9).unwrap();
        let b = sweep(&cfg, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 12);
        assert!(a.iter().all(|r| r.vanishes_on_lattice && r.error_value >= r.floor));
        let mut buf = Vec::new();
        write_sweep_csv(&a, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("N,g1,g2,method,h1,h2,error_value,floor\n"));
        assert_eq!(text.lines().count(), 13);
    }

    fn prime_up_to(max: u64) -> impl Strategy<Value = u64> {
        (3u64..=max).prop_map(|x| {
            let mut p = x;
            while !is_prime(p) {
                p += 1;
            }
            p
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn both_methods_certified(
            (n, g1, g2) in prime_up_to(100_000)
                .prop_flat_map(|n| (Just(n), 1..n, 1..n)),
        ) {
            let s = isqrt(n);
            let p = pigeonhole_short_vector(n, (g1, g2)).unwrap();
            prop_assert!(p.in_dual() && p.certificates.bound_ok);
            prop_assert!(p.h.0 != 0 && p.h.1 != 0);
            prop_assert!(p.h.0.unsigned_abs() <= s && p.h.1.unsigned_abs() <= s);

            let c = cf_short_vector(n, (g1, g2)).unwrap();
            prop_assert!(c.in_dual() && c.certificates.bound_ok);
            let q = c.h.1.unsigned_abs();
            let q_next = c.certificates.q_next.unwrap();
            prop_assert!(q * q <= n && q_next * q_next > n);
            prop_assert!(c.h.0.unsigned_abs() * q_next <= n);

            for v in [&p, &c] {
                prop_assert!(fooling_error(1.0, v).unwrap().vanishes_on_lattice);
            }
            for alpha in [0.6, 1.0, 2.0] {
                for v in [&p, &c] {
                    let f = FoolingFunction::new(v.h, alpha).unwrap();
                    prop_assert!(f.l2_norm() >= (n as f64).powf(-alpha / 2.0) * (1.0 - 1e-12));
                }
            }
        }
    }
}
