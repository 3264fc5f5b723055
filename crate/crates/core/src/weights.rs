//! Weight families `γ_u`, the norm weight `r_{α,γ}(k)`, the Riemann zeta
//! function and the weighted zeta sums that appear in every size, tail and
//! error bound.
//!
//! Coordinates are 0-based throughout the Rust API; subsets are sorted slices
//! of coordinate indices. The JSON form uses 1-based coordinates.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Largest dimension for which a full `2^d` subset sum is attempted.
pub const MAX_SUBSET_ENUMERATION_DIM: usize = 24;

/// A family of non-negative subset weights with `γ_∅ = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WeightSpecJson", into = "WeightSpecJson")]
pub enum WeightSpec {
    /// `γ_u = ∏_{j∈u} γ_j`.
    Product { gammas: Vec<f64> },
    /// `γ_u = Γ_{|u|} ∏_{j∈u} γ_j`, with `orders[ℓ] = Γ_ℓ`.
    Pod { gammas: Vec<f64>, orders: Vec<f64> },
    /// `γ_u = Σ_{m ∈ [1:σ]^{|u|}} Γ_{|m|_1} ∏_{j∈u} γ_{j,m_j}` with
    /// `table[j][m-1] = γ_{j,m}`. An optional `support` list declares the
    /// subsets that carry weight; everything else is treated as zero.
    Spod {
        sigma: usize,
        table: Vec<Vec<f64>>,
        orders: Vec<f64>,
        support: Option<Vec<Vec<usize>>>,
    },
    /// Looked-up weights; absent subsets weigh zero.
    Explicit { map: BTreeMap<Vec<usize>, f64> },
}

/// Smoothness `α > 1/2`, radius `M > 0` and dimension `d ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessParams {
    pub alpha: f64,
    #[serde(rename = "M")]
    pub m_radius: f64,
    #[serde(rename = "d")]
    pub dim: usize,
}

impl SmoothnessParams {
    pub fn new(alpha: f64, m_radius: f64, dim: usize) -> Result<Self> {
        let p = Self { alpha, m_radius, dim };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.5) || !self.alpha.is_finite() {
            return Err(invalid("alpha", format!("must be > 1/2, got {}", self.alpha)));
        }
        if !(self.m_radius > 0.0) || !self.m_radius.is_finite() {
            return Err(invalid("M", format!("must be > 0, got {}", self.m_radius)));
        }
        if self.dim == 0 {
            return Err(invalid("d", "must be >= 1"));
        }
        Ok(())
    }

    pub fn with_radius(&self, m_radius: f64) -> Self {
        Self { m_radius, ..*self }
    }
}

/// Auxiliary exponents of the bounds: `λ ∈ (1/α, 2)` and `β ∈ (0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryParams {
    pub lambda: f64,
    pub beta: f64,
}

impl TheoryParams {
    pub fn new(lambda: f64, beta: f64, alpha: f64) -> Result<Self> {
        let t = Self { lambda, beta };
        t.validate(alpha)?;
        Ok(t)
    }

    pub fn validate(&self, alpha: f64) -> Result<()> {
        check_lambda_window(self.lambda, alpha)?;
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(invalid("beta", format!("must lie in (0, 1), got {}", self.beta)));
        }
        Ok(())
    }
}

pub(crate) fn check_lambda_window(lambda: f64, alpha: f64) -> Result<()> {
    if !(lambda * alpha > 1.0 && lambda < 2.0) {
        return Err(invalid(
            "lambda",
            format!("must lie in (1/alpha, 2) = ({}, 2), got {lambda}", 1.0 / alpha),
        ));
    }
    Ok(())
}

fn check_subset(u: &[usize], dim: usize) -> Result<()> {
    for (i, &j) in u.iter().enumerate() {
        if j >= dim {
            return Err(Error::IndexOutOfRange { index: j, dim });
        }
        if i > 0 && u[i - 1] >= j {
            return Err(invalid("u", "subset must be strictly increasing"));
        }
    }
    Ok(())
}

fn order_at(orders: &[f64], l: usize) -> Result<f64> {
    orders
        .get(l)
        .copied()
        .ok_or_else(|| Error::InvalidWeights(format!("order weight Γ_{l} missing (only {} given)", orders.len())))
}

impl WeightSpec {
    pub fn product(gammas: Vec<f64>) -> Self {
        WeightSpec::Product { gammas }
    }

    pub fn pod(gammas: Vec<f64>, orders: Vec<f64>) -> Self {
        WeightSpec::Pod { gammas, orders }
    }

    /// All `γ_j = 1`: the unweighted space.
    pub fn unit(dim: usize) -> Self {
        WeightSpec::Product { gammas: vec![1.0; dim] }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            WeightSpec::Product { .. } => "product",
            WeightSpec::Pod { .. } => "pod",
            WeightSpec::Spod { .. } => "spod",
            WeightSpec::Explicit { .. } => "explicit",
        }
    }

    /// Checks that the weights are usable in dimension `dim`.
    pub fn validate(&self, dim: usize) -> Result<()> {
        let finite_nonneg = |v: &[f64], what: &str| -> Result<()> {
            match v.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
                Some(i) => Err(Error::InvalidWeights(format!(
                    "{what}[{i}] = {} is not a finite non-negative number",
                    v[i]
                ))),
                None => Ok(()),
            }
        };
        match self {
            WeightSpec::Product { gammas } => {
                finite_nonneg(gammas, "gammas")?;
                if gammas.len() < dim {
                    return Err(Error::InvalidWeights(format!(
                        "{} product weights for dimension {dim}",
                        gammas.len()
                    )));
                }
            }
            WeightSpec::Pod { gammas, orders } => {
                finite_nonneg(gammas, "gammas")?;
                finite_nonneg(orders, "orders")?;
                if gammas.len() < dim || orders.len() < dim + 1 {
                    return Err(Error::InvalidWeights(format!(
                        "POD weights need {dim} gammas and {} orders",
                        dim + 1
                    )));
                }
            }
            WeightSpec::Spod {
                sigma,
                table,
                orders,
                support,
            } => {
                if *sigma == 0 {
                    return Err(Error::InvalidWeights("SPOD sigma must be >= 1".into()));
                }
                if table.len() < dim {
                    return Err(Error::InvalidWeights(format!(
                        "SPOD table has {} rows for dimension {dim}",
                        table.len()
                    )));
                }
                for row in table {
                    if row.len() != *sigma {
                        return Err(Error::InvalidWeights(format!(
                            "SPOD table rows must have sigma = {sigma} entries"
                        )));
                    }
                    finite_nonneg(row, "table")?;
                }
                finite_nonneg(orders, "orders")?;
                if orders.len() < sigma * dim + 1 {
                    return Err(Error::InvalidWeights(format!(
                        "SPOD weights need {} orders",
                        sigma * dim + 1
                    )));
                }
                if let Some(list) = support {
                    for u in list {
                        check_subset(u, dim)?;
                    }
                }
            }
            WeightSpec::Explicit { map } => {
                for (u, &v) in map {
                    check_subset(u, dim)?;
                    if !(v.is_finite() && v >= 0.0) {
                        return Err(Error::InvalidWeights(format!(
                            "weight of {u:?} is {v}, not finite non-negative"
                        )));
                    }
                    if u.is_empty() && v != 1.0 {
                        return Err(Error::InvalidWeights("the empty set must keep weight 1".into()));
                    }
                }
            }
        }
        Ok(())
    }

    fn coordinate_bound(&self) -> usize {
        match self {
            WeightSpec::Product { gammas } | WeightSpec::Pod { gammas, .. } => gammas.len(),
            WeightSpec::Spod { table, .. } => table.len(),
            WeightSpec::Explicit { .. } => usize::MAX,
        }
    }

    /// `γ_u`. Returns 1 for the empty set in every family.
    pub fn weight_of(&self, u: &[usize]) -> Result<f64> {
        check_subset(u, self.coordinate_bound())?;
        if u.is_empty() {
            return Ok(1.0);
        }
        Ok(match self {
            WeightSpec::Product { gammas } => u.iter().map(|&j| gammas[j]).product(),
            WeightSpec::Pod { gammas, orders } => {
                order_at(orders, u.len())? * u.iter().map(|&j| gammas[j]).product::<f64>()
            }
            WeightSpec::Spod {
                sigma,
                table,
                orders,
                support,
            } => {
                if let Some(list) = support {
                    if !list.iter().any(|w| w.as_slice() == u) {
                        return Ok(0.0);
                    }
                }
                spod_weight(*sigma, table, orders, u)?
            }
            WeightSpec::Explicit { map } => map.get(u).copied().unwrap_or(0.0),
        })
    }

    /// An upper bound on `γ_w` over every `w ⊇ u` with `w ⊆ [0, dim)`.
    ///
    /// Product and POD weights compute the supremum exactly. For SPOD the
    /// bound sums the largest attainable terms per order; explicit weights
    /// take the maximum over stored supersets.
    pub fn superset_bound(&self, u: &[usize], dim: usize) -> f64 {
        match self {
            WeightSpec::Product { gammas } => {
                let base: f64 = u.iter().map(|&j| gammas[j]).product();
                let extra: f64 = (0..dim)
                    .filter(|j| !u.contains(j) && gammas[*j] > 1.0)
                    .map(|j| gammas[j])
                    .product();
                base * extra
            }
            WeightSpec::Pod { gammas, orders } => {
                let base_ln: f64 = u.iter().map(|&j| gammas[j].ln()).sum();
                if base_ln == f64::NEG_INFINITY {
                    return 0.0;
                }
                let mut rest: Vec<f64> = (0..dim).filter(|j| !u.contains(j)).map(|j| gammas[j]).collect();
                rest.sort_by(|a, b| b.total_cmp(a));
                let mut best = f64::NEG_INFINITY;
                let mut acc_ln = 0.0;
                for extra in 0..=rest.len() {
                    if extra > 0 {
                        acc_ln += rest[extra - 1].ln();
                    }
                    let l = u.len() + extra;
                    if let Some(&g) = orders.get(l) {
                        if g > 0.0 {
                            best = best.max(g.ln() + base_ln + acc_ln);
                        }
                    }
                }
                best.exp()
            }
            WeightSpec::Spod {
                sigma,
                table,
                orders,
                support,
            } => {
                if let Some(list) = support {
                    return list
                        .iter()
                        .filter(|w| u.iter().all(|j| w.contains(j)))
                        .map(|w| self.weight_of(w).unwrap_or(0.0))
                        .fold(0.0, f64::max);
                }
                // Each factor (Σ_m γ_{j,m}) for j outside u is replaced by
                // max(1, ·), so the bound dominates every superset.
                let max_order = orders.iter().copied().fold(0.0, f64::max);
                let inner: f64 = u.iter().map(|&j| table[j].iter().take(*sigma).sum::<f64>()).product();
                let outer: f64 = (0..dim)
                    .filter(|j| !u.contains(j))
                    .map(|j| table[j].iter().sum::<f64>().max(1.0))
                    .product();
                max_order * inner * outer
            }
            WeightSpec::Explicit { map } => map
                .iter()
                .filter(|(w, _)| u.iter().all(|j| w.contains(j)))
                .map(|(_, &v)| v)
                .fold(if u.is_empty() { 1.0 } else { 0.0 }, f64::max),
        }
    }

    /// The finite list of subsets that can carry weight, when the family
    /// declares one (explicit weights, SPOD with a support list).
    pub fn declared_supports(&self) -> Option<Vec<Vec<usize>>> {
        match self {
            WeightSpec::Explicit { map } => Some(map.keys().cloned().collect()),
            WeightSpec::Spod {
                support: Some(list), ..
            } => Some(list.clone()),
            _ => None,
        }
    }
}

fn spod_weight(sigma: usize, table: &[Vec<f64>], orders: &[f64], u: &[usize]) -> Result<f64> {
    // Polynomial in z: ∏_{j∈u} Σ_m γ_{j,m} z^m; the coefficient of z^s
    // collects all m_u with |m_u|_1 = s.
    let mut poly = vec![1.0];
    for &j in u {
        let mut next = vec![0.0; poly.len() + sigma];
        for (s, &c) in poly.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for m in 1..=sigma {
                next[s + m] += c * table[j][m - 1];
            }
        }
        poly = next;
    }
    let mut total = 0.0;
    for (s, &c) in poly.iter().enumerate() {
        if c != 0.0 {
            total += order_at(orders, s)? * c;
        }
    }
    Ok(total)
}

/// `supp(k)` as a sorted subset.
pub fn support_of(k: &[i64]) -> Vec<usize> {
    k.iter().enumerate().filter(|(_, &x)| x != 0).map(|(j, _)| j).collect()
}

/// `r_{α,γ}(k) = γ_u^{-1} ∏_{j∈u} |k_j|^α` with `u = supp(k)`.
///
/// Returns `f64::INFINITY` when `γ_u = 0` for a non-empty support, and 1 for
/// `k = 0`. The product is formed in the log domain when it would overflow.
pub fn rnorm(k: &[i64], params: &SmoothnessParams, spec: &WeightSpec) -> Result<f64> {
    if k.len() != params.dim {
        return Err(Error::DimensionMismatch {
            expected: params.dim,
            actual: k.len(),
        });
    }
    let u = support_of(k);
    let gamma = spec.weight_of(&u)?;
    Ok(rnorm_with_weight(k, params.alpha, gamma))
}

pub(crate) fn rnorm_with_weight(k: &[i64], alpha: f64, gamma: f64) -> f64 {
    if k.iter().all(|&x| x == 0) {
        return 1.0;
    }
    if gamma == 0.0 {
        return f64::INFINITY;
    }
    let prod: f64 = k
        .iter()
        .filter(|&&x| x != 0)
        .map(|&x| x.unsigned_abs() as f64)
        .product();
    let direct = prod.powf(alpha) / gamma;
    if direct.is_finite() && direct > 0.0 {
        direct
    } else {
        let ln: f64 = k
            .iter()
            .filter(|&&x| x != 0)
            .map(|&x| (x.unsigned_abs() as f64).ln())
            .sum::<f64>()
            * alpha
            - gamma.ln();
        ln.exp()
    }
}

const BERNOULLI_OVER_FACTORIAL: [f64; 9] = [
    1.0 / 12.0,                      // B2 / 2!
    -1.0 / 720.0,                    // B4 / 4!
    1.0 / 30240.0,                   // B6 / 6!
    -1.0 / 1209600.0,                // B8 / 8!
    1.0 / 47900160.0,                // B10 / 10!
    -691.0 / 1307674368000.0,        // B12 / 12!
    1.0 / 74724249600.0,             // B14 / 14!
    -3617.0 / 10670622842880000.0,   // B16 / 16!
    43867.0 / 5109094217170944000.0, // B18 / 18!
];

fn zeta_em(s: f64) -> f64 {
    const N: usize = 16;
    let n = N as f64;
    let mut head = 0.0;
    for k in (1..N).rev() {
        head += (k as f64).powf(-s);
    }
    let mut tail = n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s);
    // s(s+1)...(s+2j-2) N^{-s-2j+1}
    let mut rising = s;
    let mut power = n.powf(-s - 1.0);
    for (j, c) in BERNOULLI_OVER_FACTORIAL.iter().enumerate() {
        tail += c * rising * power;
        let a = s + (2 * j + 1) as f64;
        rising *= a * (a + 1.0);
        power /= n * n;
    }
    head + tail
}

/// The Riemann zeta function for real `s > 1`, accurate to ~1e-14 absolute
/// (Euler-Maclaurin with 16 direct terms and nine correction terms).
pub fn riemann_zeta(s: f64) -> Result<f64> {
    if !(s > 1.0) || !s.is_finite() {
        return Err(invalid("s", format!("zeta needs real s > 1, got {s}")));
    }
    static CACHE: OnceLock<Mutex<HashMap<u64, f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(&v) = cache.lock().expect("zeta cache poisoned").get(&s.to_bits()) {
        return Ok(v);
    }
    let v = zeta_em(s);
    cache.lock().expect("zeta cache poisoned").insert(s.to_bits(), v);
    Ok(v)
}

/// Elementary symmetric polynomials `e_0..e_n` of `xs`.
fn elementary_symmetric(xs: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; xs.len() + 1];
    e[0] = 1.0;
    for (i, &x) in xs.iter().enumerate() {
        for l in (1..=i + 1).rev() {
            e[l] += x * e[l - 1];
        }
    }
    e
}

/// Visits every subset of `[0, dim)` (in binary-counter order).
pub(crate) fn for_each_subset(dim: usize, mut f: impl FnMut(&[usize])) {
    let mut u = Vec::with_capacity(dim);
    for mask in 0u64..(1u64 << dim) {
        u.clear();
        u.extend((0..dim).filter(|j| mask >> j & 1 == 1));
        f(&u);
    }
}

/// `Σ_{u⊆[1:d]} γ_u^λ (2ζ(αλ))^{|u|}`.
pub fn weighted_zeta_sum(spec: &WeightSpec, params: &SmoothnessParams, theory: &TheoryParams) -> Result<f64> {
    weighted_zeta_sum_raw(spec, params.dim, params.alpha, theory.lambda)
}

/// The same sum for an arbitrary exponent pair with `αλ > 1`.
pub fn weighted_zeta_sum_raw(spec: &WeightSpec, dim: usize, alpha: f64, lambda: f64) -> Result<f64> {
    if !(alpha * lambda > 1.0) {
        return Err(invalid(
            "lambda",
            format!("alpha * lambda must exceed 1, got {}", alpha * lambda),
        ));
    }
    spec.validate(dim)?;
    let two_zeta = 2.0 * riemann_zeta(alpha * lambda)?;
    let pow = |g: f64| if g == 0.0 { 0.0 } else { g.powf(lambda) };
    Ok(match spec {
        WeightSpec::Product { gammas } => gammas[..dim].iter().map(|&g| 1.0 + two_zeta * pow(g)).product(),
        WeightSpec::Pod { gammas, orders } => {
            let xs: Vec<f64> = gammas[..dim].iter().map(|&g| two_zeta * pow(g)).collect();
            let e = elementary_symmetric(&xs);
            1.0 + (1..=dim).map(|l| pow(orders[l]) * e[l]).sum::<f64>()
        }
        WeightSpec::Explicit { .. } | WeightSpec::Spod { support: Some(_), .. } => {
            let list = spec.declared_supports().unwrap_or_default();
            let mut total = 1.0;
            for u in list.iter().filter(|u| !u.is_empty()) {
                total += pow(spec.weight_of(u)?) * two_zeta.powi(u.len() as i32);
            }
            total
        }
        WeightSpec::Spod { support: None, .. } => {
            if dim > MAX_SUBSET_ENUMERATION_DIM {
                return Err(Error::ResourceCap(format!(
                    "SPOD zeta sum without a support list needs 2^{dim} subsets"
                )));
            }
            let mut total = 0.0;
            let mut err = None;
            for_each_subset(dim, |u| match spec.weight_of(u) {
                Ok(g) => total += pow(g) * two_zeta.powi(u.len() as i32),
                Err(e) => err = Some(e),
            });
            if let Some(e) = err {
                return Err(e);
            }
            total
        }
    })
}

/// Outcome of the summability test for strong polynomial tractability.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TractabilityReport {
    pub kind: String,
    pub alpha: f64,
    pub lambda: f64,
    pub dim: usize,
    pub condition_holds: bool,
    /// `Σ_{j≤d} γ_j^λ`.
    pub partial_sum: f64,
    /// `γ_d^λ`.
    pub last_term: f64,
    /// Power-law exponent `p` fitted to `γ_j^λ ~ j^{-p}` over the last half
    /// of the terms; summability needs `p > 1`.
    pub decay_exponent: Option<f64>,
    /// POD only: `2ζ(αλ) Σ_j γ_j^λ`, which must stay below 1.
    pub pod_series_ratio: Option<f64>,
    /// POD only: whether `Γ_ℓ ≤ c (ℓ!)^{1/λ}` held for every stored ℓ.
    pub pod_orders_ok: Option<bool>,
    /// The error-bound sum `Σ_u γ_u^λ (2ζ(αλ))^{|u|}` for this `d`.
    pub weighted_zeta_sum: f64,
    pub notes: Vec<String>,
}

fn fitted_decay(terms: &[f64]) -> Option<f64> {
    let start = terms.len() / 2;
    let pts: Vec<(f64, f64)> = terms
        .iter()
        .enumerate()
        .skip(start)
        .filter(|(_, &t)| t > 0.0)
        .map(|(j, &t)| (((j + 1) as f64).ln(), t.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(-sxy / sxx)
}

fn ln_factorial(l: usize) -> f64 {
    (2..=l).map(|i| (i as f64).ln()).sum()
}

/// Summability diagnostics for product and POD weights over the first `dim`
/// coordinates. `pod_c` is the constant in `Γ_ℓ ≤ c (ℓ!)^{1/λ}`.
pub fn tractability_check(
    spec: &WeightSpec,
    alpha: f64,
    lambda: f64,
    dim: usize,
    pod_c: Option<f64>,
) -> Result<TractabilityReport> {
    check_lambda_window(lambda, alpha)?;
    spec.validate(dim)?;
    let gammas = match spec {
        WeightSpec::Product { gammas } | WeightSpec::Pod { gammas, .. } => &gammas[..dim],
        _ => {
            return Err(Error::InvalidWeights(format!(
                "tractability check is defined for product and POD weights, not {}",
                spec.kind()
            )))
        }
    };
    let terms: Vec<f64> = gammas
        .iter()
        .map(|&g| if g == 0.0 { 0.0 } else { g.powf(lambda) })
        .collect();
    let partial_sum: f64 = terms.iter().sum();
    let last_term = *terms.last().unwrap_or(&0.0);
    let all_zero_tail = terms[terms.len() / 2..].iter().all(|&t| t == 0.0);
    let decay_exponent = fitted_decay(&terms);
    let mut notes = Vec::new();
    let summable = if all_zero_tail {
        true
    } else {
        match decay_exponent {
            Some(p) => {
                if p <= 1.0 {
                    notes.push(format!("terms decay like j^-{p:.3}; not summable"));
                }
                p > 1.0
            }
            None => {
                notes.push("too few terms to estimate decay".into());
                partial_sum.is_finite()
            }
        }
    };
    let wzs = weighted_zeta_sum_raw(spec, dim, alpha, lambda)?;
    let two_zeta = 2.0 * riemann_zeta(alpha * lambda)?;

    let (condition_holds, pod_series_ratio, pod_orders_ok) = match spec {
        WeightSpec::Pod { orders, .. } => {
            let ratio = two_zeta * partial_sum;
            let c = pod_c.unwrap_or(1.0);
            if !(c > 0.0) {
                return Err(invalid("pod_c", "must be > 0"));
            }
            let orders_ok = orders
                .iter()
                .enumerate()
                .skip(1)
                .all(|(l, &g)| g == 0.0 || g.ln() <= c.ln() + ln_factorial(l) / lambda + 1e-12);
            if ratio >= 1.0 {
                notes.push(format!("2 zeta(alpha lambda) sum gamma_j^lambda = {ratio:.6} >= 1"));
            }
            if !orders_ok {
                notes.push(format!("some Gamma_l exceeds {c} (l!)^(1/lambda)"));
            }
            (ratio < 1.0 && orders_ok && summable, Some(ratio), Some(orders_ok))
        }
        _ => (summable, None, None),
    };

    Ok(TractabilityReport {
        kind: spec.kind().to_string(),
        alpha,
        lambda,
        dim,
        condition_holds,
        partial_sum,
        last_term,
        decay_exponent,
        pod_series_ratio,
        pod_orders_ok,
        weighted_zeta_sum: wzs,
        notes,
    })
}

// ---- JSON form ----

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightSpecJson {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gammas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    orders: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    spod: Option<SpodJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    explicit: Option<Vec<ExplicitEntry>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpodJson {
    sigma: usize,
    table: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    support: Option<Vec<Vec<usize>>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExplicitEntry {
    u: Vec<usize>,
    value: f64,
}

fn to_zero_based(u: &[usize]) -> std::result::Result<Vec<usize>, String> {
    let mut v = u
        .iter()
        .map(|&j| j.checked_sub(1).ok_or_else(|| "coordinates are 1-based".to_string()))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    v.sort_unstable();
    v.dedup();
    Ok(v)
}

impl TryFrom<WeightSpecJson> for WeightSpec {
    type Error = String;

    fn try_from(j: WeightSpecJson) -> std::result::Result<Self, String> {
        let need = |v: Option<Vec<f64>>, what: &str| v.ok_or_else(|| format!("missing `{what}`"));
        match j.kind.as_str() {
            "product" => Ok(WeightSpec::Product {
                gammas: need(j.gammas, "gammas")?,
            }),
            "pod" => Ok(WeightSpec::Pod {
                gammas: need(j.gammas, "gammas")?,
                orders: need(j.orders, "orders")?,
            }),
            "spod" => {
                let s = j.spod.ok_or("missing `spod`")?;
                let support = s
                    .support
                    .map(|list| list.iter().map(|u| to_zero_based(u)).collect())
                    .transpose()?;
                Ok(WeightSpec::Spod {
                    sigma: s.sigma,
                    table: s.table,
                    orders: need(j.orders, "orders")?,
                    support,
                })
            }
            "explicit" => {
                let mut map = BTreeMap::new();
                for e in j.explicit.ok_or("missing `explicit`")? {
                    let u = to_zero_based(&e.u)?;
                    if u.is_empty() && e.value != 1.0 {
                        return Err("the empty set must keep weight 1".into());
                    }
                    map.insert(u, e.value);
                }
                Ok(WeightSpec::Explicit { map })
            }
            other => Err(format!("unknown weight kind `{other}`")),
        }
    }
}

impl From<WeightSpec> for WeightSpecJson {
    fn from(w: WeightSpec) -> Self {
        let one_based = |u: &[usize]| u.iter().map(|j| j + 1).collect::<Vec<_>>();
        let mut j = WeightSpecJson {
            kind: w.kind().to_string(),
            gammas: None,
            orders: None,
            spod: None,
            explicit: None,
        };
        match w {
            WeightSpec::Product { gammas } => j.gammas = Some(gammas),
            WeightSpec::Pod { gammas, orders } => {
                j.gammas = Some(gammas);
                j.orders = Some(orders);
            }
            WeightSpec::Spod {
                sigma,
                table,
                orders,
                support,
            } => {
                j.orders = Some(orders);
                j.spod = Some(SpodJson {
                    sigma,
                    table,
                    support: support.map(|l| l.iter().map(|u| one_based(u)).collect()),
                });
            }
            WeightSpec::Explicit { map } => {
                j.explicit = Some(
                    map.into_iter()
                        .map(|(u, value)| ExplicitEntry {
                            u: one_based(&u),
                            value,
                        })
                        .collect(),
                );
            }
        }
        j
    }
}
