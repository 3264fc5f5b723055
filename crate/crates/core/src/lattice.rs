//! Rank-1 lattices: points, dual membership, the character property and
//! aliasing-free indicators over a cross.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cross::HyperbolicCross;
use crate::error::{Error, Result};
use crate::primes::{is_prime, residue};

/// Largest box scanned by [`brute_force_dual_box`].
pub const DUAL_BOX_CAP: u64 = 10_000_000;

/// `e^{2πi num/den}` for `0 ≤ num < den`.
///
/// The angle is folded into `[0, 1/8]` of a turn before calling the
/// trigonometric functions, so equal rationals always give equal bits.
pub fn unit_phase(num: u64, den: u64) -> Complex64 {
    debug_assert!(num < den);
    // Work in eighths of a turn: 8·num = q·den + r.
    let scaled = 8 * num as u128;
    let q = (scaled / den as u128) as u8;
    let r = (scaled % den as u128) as u64;
    let octant = |r: u64| (std::f64::consts::FRAC_PI_4 * (r as f64 / den as f64)).sin_cos();
    let (re, im) = if q.is_multiple_of(2) {
        // θ = qπ/4 + φ
        let (s, c) = octant(r);
        match q {
            0 => (c, s),
            2 => (-s, c),
            4 => (-c, -s),
            _ => (s, -c),
        }
    } else {
        // θ = (q+1)π/4 − ψ
        let (s, c) = octant(den - r);
        match q {
            1 => (s, c),
            3 => (-c, s),
            5 => (-s, -c),
            _ => (c, -s),
        }
    };
    Complex64::new(re, im)
}

/// `e^{2πiθ}` for real `θ`, reduced modulo 1 first.
pub fn turn_phase(theta: f64) -> Complex64 {
    let t = theta.rem_euclid(1.0);
    let (s, c) = (2.0 * std::f64::consts::PI * t).sin_cos();
    Complex64::new(c, s)
}

/// `e^{-2πi r/n}` for every residue `r` in `0..n`.
#[derive(Debug, Clone)]
pub struct PhaseTable {
    n: u64,
    values: Vec<Complex64>,
}

impl PhaseTable {
    pub fn conjugate_roots(n: u64) -> Self {
        let values = (0..n).map(|r| unit_phase(r, n).conj()).collect();
        Self { n, values }
    }

    pub fn modulus(&self) -> u64 {
        self.n
    }

    #[inline]
    pub fn get(&self, r: u64) -> Complex64 {
        self.values[r as usize]
    }
}

/// Point set `{ i g / n mod 1 : i = 0..n-1 }` with `n` prime.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "LatticeJson")]
pub struct Rank1Lattice {
    n: u64,
    g: Vec<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LatticeJson {
    n: u64,
    g: Vec<u64>,
}

impl TryFrom<LatticeJson> for Rank1Lattice {
    type Error = Error;

    fn try_from(j: LatticeJson) -> Result<Self> {
        Rank1Lattice::new(j.n, j.g)
    }
}

impl Rank1Lattice {
    /// `n` must be prime and every `g_j` in `1..=n`.
    pub fn new(n: u64, g: Vec<u64>) -> Result<Self> {
        if !is_prime(n) {
            return Err(Error::InvalidLattice(format!("modulus {n} is not prime")));
        }
        if g.is_empty() {
            return Err(Error::InvalidLattice("empty generating vector".into()));
        }
        if let Some(&bad) = g.iter().find(|&&x| x == 0 || x > n) {
            return Err(Error::InvalidLattice(format!(
                "generator component {bad} outside 1..={n}"
            )));
        }
        Ok(Self { n, g })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn g(&self) -> &[u64] {
        &self.g
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }

    fn check_dim(&self, k: &[i64]) -> Result<()> {
        if k.len() != self.g.len() {
            return Err(Error::DimensionMismatch {
                expected: self.g.len(),
                actual: k.len(),
            });
        }
        Ok(())
    }

    /// Numerators `(i g_j) mod n` of point `i`.
    pub fn point_numerators(&self, i: u64) -> Vec<u64> {
        let n = self.n as u128;
        self.g
            .iter()
            .map(|&gj| ((i as u128 % n) * (gj as u128) % n) as u64)
            .collect()
    }

    pub fn point(&self, i: u64) -> Vec<f64> {
        let n = self.n as f64;
        self.point_numerators(i).into_iter().map(|a| a as f64 / n).collect()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.point(i)).collect()
    }

    /// `k·g mod n` in `0..n`.
    pub fn residue_of(&self, k: &[i64]) -> u64 {
        let n = self.n as u128;
        let mut acc: u128 = 0;
        for (&kj, &gj) in k.iter().zip(&self.g) {
            let r = residue(kj, self.n) as u128;
            acc = (acc + r * (gj as u128 % n)) % n;
        }
        acc as u64
    }

    pub fn dual_contains(&self, ell: &[i64]) -> Result<bool> {
        self.check_dim(ell)?;
        Ok(self.residue_of(ell) == 0)
    }

    /// `(1/n) Σ_i e^{2πi k·y_i}`, summed term by term.
    pub fn character_sum(&self, k: &[i64]) -> Result<Complex64> {
        self.check_dim(k)?;
        let h = self.residue_of(k);
        let n = self.n;
        let mut acc = Complex64::new(0.0, 0.0);
        let mut phase = 0u64;
        for _ in 0..n {
            acc += unit_phase(phase, n);
            phase = ((phase as u128 + h as u128) % n as u128) as u64;
        }
        Ok(acc / n as f64)
    }
}

/// Aliasing-free indicators `U_t(k)` of one lattice over a cross.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AliasingTable {
    pub lattice_index: usize,
    pub indicators: Vec<bool>,
    pub singleton_count: usize,
}

/// `k·g mod n` for every index of the cross, in ordinal order.
pub fn cross_residues(cross: &HyperbolicCross, lat: &Rank1Lattice) -> Result<Vec<u64>> {
    if cross.dim() != lat.dim() {
        return Err(Error::DimensionMismatch {
            expected: cross.dim(),
            actual: lat.dim(),
        });
    }
    let d = cross.dim();
    Ok(cross.as_flat().par_chunks(d).map(|k| lat.residue_of(k)).collect())
}

/// Marks `k` as aliasing-free when its residue occurs once over the cross.
pub fn aliasing_indicators(cross: &HyperbolicCross, lat: &Rank1Lattice, lattice_index: usize) -> Result<AliasingTable> {
    let res = cross_residues(cross, lat)?;
    let mut order: Vec<(u64, u32)> = res.iter().enumerate().map(|(i, &r)| (r, i as u32)).collect();
    order.par_sort_unstable();
    let mut indicators = vec![false; res.len()];
    let mut singleton_count = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && order[j].0 == order[i].0 {
            j += 1;
        }
        if j == i + 1 {
            indicators[order[i].1 as usize] = true;
            singleton_count += 1;
        }
        i = j;
    }
    Ok(AliasingTable {
        lattice_index,
        indicators,
        singleton_count,
    })
}

/// All nonzero `ell` with `‖ell‖_∞ ≤ radius` and `ell·g ≡ 0 (mod n)`, in
/// lexicographic order.
pub fn brute_force_dual_box(lat: &Rank1Lattice, radius: u64) -> Result<Vec<Vec<i64>>> {
    let d = lat.dim() as u32;
    let side = 2 * radius + 1;
    let total = side
        .checked_pow(d)
        .filter(|&t| t <= DUAL_BOX_CAP)
        .ok_or_else(|| Error::ResourceCap(format!("dual box of radius {radius} in dimension {d}")))?;
    let r = radius as i64;
    let hits: Vec<Vec<i64>> = (0..total)
        .into_par_iter()
        .filter_map(|code| {
            let mut c = code;
            let mut ell = vec![0i64; d as usize];
            for slot in ell.iter_mut().rev() {
                *slot = (c % side) as i64 - r;
                c /= side;
            }
            (ell.iter().any(|&x| x != 0) && lat.residue_of(&ell) == 0).then_some(ell)
        })
        .collect();
    Ok(hits)
}
