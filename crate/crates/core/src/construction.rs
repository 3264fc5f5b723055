//! Greedy randomized construction of multiple rank-1 lattices that together
//! cover a cross with aliasing-free frequencies.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::cross::HyperbolicCross;
use crate::error::{invalid, Error, Result};
use crate::lattice::{aliasing_indicators, brute_force_dual_box, AliasingTable, Rank1Lattice, DUAL_BOX_CAP};
use crate::primes::{is_prime, residue};
use crate::rng::{Domain, Stream};

/// How far above `η` the prime search may look.
pub const DEFAULT_PRIME_WINDOW: u64 = 1_000_000;

/// Inputs of the construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanParams {
    pub c: f64,
    pub delta: f64,
    pub seed: u64,
    #[serde(default = "default_retry_cap_factor")]
    pub retry_cap_factor: u64,
}

fn default_retry_cap_factor() -> u64 {
    10
}

impl PlanParams {
    pub fn new(c: f64, delta: f64, seed: u64) -> Result<Self> {
        let p = Self {
            c,
            delta,
            seed,
            retry_cap_factor: default_retry_cap_factor(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 1.0) || !self.c.is_finite() {
            return Err(invalid("c", format!("must be > 1, got {}", self.c)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid("delta", format!("must lie in (0, 1), got {}", self.delta)));
        }
        if self.retry_cap_factor == 0 {
            return Err(invalid("retry_cap_factor", "must be >= 1"));
        }
        Ok(())
    }
}

/// `⌈(c/(c−1))² (ln|A| − ln δ)/2⌉`.
pub fn l_max_of(cardinality: usize, c: f64, delta: f64) -> Result<usize> {
    if cardinality < 2 {
        return Err(Error::CrossTooSmall(cardinality));
    }
    let ratio = c / (c - 1.0);
    let v = ratio * ratio * ((cardinality as f64).ln() - delta.ln()) / 2.0;
    Ok(v.ceil() as usize)
}

/// Integer threshold with `p > eta ⇔ p > c(|A|−1)` for every integer `p`.
pub fn eta_of(cardinality: usize, c: f64) -> u64 {
    (c * (cardinality as f64 - 1.0)).floor() as u64
}

/// Whether reducing the cross modulo `p` componentwise is injective.
pub fn residues_injective(cross: &HyperbolicCross, p: u64) -> bool {
    if p > cross.span() {
        return true;
    }
    let mut tuples: Vec<Vec<u64>> = cross
        .iter()
        .map(|k| k.iter().map(|&x| residue(x, p)).collect())
        .collect();
    tuples.sort_unstable();
    tuples.windows(2).all(|w| w[0] != w[1])
}

/// The `count` smallest primes `p > eta` on which the cross stays injective.
pub fn candidate_primes(cross: &HyperbolicCross, eta: u64, count: usize) -> Result<Vec<u64>> {
    candidate_primes_within(cross, eta, count, DEFAULT_PRIME_WINDOW)
}

pub fn candidate_primes_within(cross: &HyperbolicCross, eta: u64, count: usize, window: u64) -> Result<Vec<u64>> {
    let end = eta.saturating_add(window);
    let mut out = Vec::with_capacity(count);
    let mut p = eta;
    while out.len() < count {
        p = p.checked_add(1).filter(|&p| p <= end).ok_or(Error::PrimeWindow {
            start: eta,
            end,
            needed: count,
        })?;
        if is_prime(p) && residues_injective(cross, p) {
            out.push(p);
        }
    }
    Ok(out)
}

/// The sufficient constant: `c ≥ 36 (c/(c−1))^{8/3} (1 + 1/ln 2)^{4/3}`.
pub fn c_condition_holds(c: f64) -> bool {
    c > 1.0 && c >= c_condition_rhs(c)
}

fn c_condition_rhs(c: f64) -> f64 {
    36.0 * (c / (c - 1.0)).powf(8.0 / 3.0) * (1.0 + 1.0 / std::f64::consts::LN_2).powf(4.0 / 3.0)
}

/// Smallest `c` satisfying [`c_condition_holds`], by bisection.
pub fn c_condition_threshold() -> f64 {
    let (mut lo, mut hi) = (2.0, 1e4);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if c_condition_holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Output of the construction.
#[derive(Debug, Clone, Serialize)]
pub struct MultiLatticePlan {
    pub seed: u64,
    pub c: f64,
    pub delta: f64,
    pub l_max: usize,
    pub eta: u64,
    pub lattices: Vec<Rank1Lattice>,
    #[serde(skip)]
    pub tables: Vec<AliasingTable>,
    pub xi: Vec<u32>,
    pub covered: bool,
    pub total_points: u64,
    pub draws_used: u64,
    pub retry_cap_hit: bool,
    pub warnings: Vec<String>,
}

impl MultiLatticePlan {
    pub fn num_lattices(&self) -> usize {
        self.lattices.len()
    }

    /// Ordinals with `ξ(k) = 0`.
    pub fn uncovered(&self) -> Vec<usize> {
        self.xi
            .iter()
            .enumerate()
            .filter(|(_, &x)| x == 0)
            .map(|(i, _)| i)
            .collect()
    }

    /// Rebuilds indicator tables and `ξ` for a given list of lattices.
    pub fn from_lattices(cross: &HyperbolicCross, lattices: Vec<Rank1Lattice>, params: &PlanParams) -> Result<Self> {
        let card = cross.len();
        let mut xi = vec![0u32; card];
        let mut tables = Vec::with_capacity(lattices.len());
        for (t, lat) in lattices.iter().enumerate() {
            let table = aliasing_indicators(cross, lat, t)?;
            for (x, &u) in xi.iter_mut().zip(&table.indicators) {
                *x += u as u32;
            }
            tables.push(table);
        }
        Ok(Self {
            seed: params.seed,
            c: params.c,
            delta: params.delta,
            l_max: l_max_of(card.max(2), params.c, params.delta)?,
            eta: eta_of(card, params.c),
            total_points: lattices.iter().map(|l| l.n()).sum(),
            covered: xi.iter().all(|&x| x > 0),
            lattices,
            tables,
            xi,
            draws_used: 0,
            retry_cap_hit: false,
            warnings: Vec::new(),
        })
    }

    /// Drops every lattice after the first `len`.
    pub fn truncated(&self, len: usize) -> Self {
        let mut out = self.clone();
        out.lattices.truncate(len);
        out.tables.truncate(len);
        out.xi = vec![0; self.xi.len()];
        for table in &out.tables {
            for (x, &u) in out.xi.iter_mut().zip(&table.indicators) {
                *x += u as u32;
            }
        }
        out.covered = out.xi.iter().all(|&x| x > 0);
        out.total_points = out.lattices.iter().map(|l| l.n()).sum();
        out
    }

    pub fn check_against(&self, cross: &HyperbolicCross) -> Result<()> {
        if self.xi.len() != cross.len() {
            return Err(Error::PlanMismatch(format!(
                "plan has {} frequencies, cross has {}",
                self.xi.len(),
                cross.len()
            )));
        }
        if let Some(l) = self.lattices.iter().find(|l| l.dim() != cross.dim()) {
            return Err(Error::PlanMismatch(format!(
                "lattice of dimension {} for a {}-dimensional cross",
                l.dim(),
                cross.dim()
            )));
        }
        if self.tables.len() != self.lattices.len() {
            return Err(Error::PlanMismatch("missing aliasing tables".into()));
        }
        Ok(())
    }
}

fn assumption_warnings(cross: &HyperbolicCross, c: f64, delta: f64, l_max: usize) -> Vec<String> {
    let eta = c * (cross.len() as f64 - 1.0);
    let llog = 4.0 * l_max as f64 * (l_max as f64).ln();
    let mut w = Vec::new();
    if eta < cross.span() as f64 {
        w.push(format!("eta = {eta} is below the span {}", cross.span()));
    }
    if eta < llog {
        w.push(format!("eta = {eta} is below 4 L_max ln L_max = {llog}"));
    }
    if delta == 0.5 && !c_condition_holds(c) {
        w.push(format!(
            "c = {c} is below the sufficient threshold {:.3} for delta = 1/2",
            c_condition_threshold()
        ));
    }
    w
}

/// Runs the greedy construction.
pub fn build_plan(cross: &HyperbolicCross, params: &PlanParams) -> Result<MultiLatticePlan> {
    params.validate()?;
    let card = cross.len();
    let l_max = l_max_of(card, params.c, params.delta)?;
    let eta = eta_of(card, params.c);
    let primes = candidate_primes(cross, eta, l_max)?;
    let d = cross.dim();
    let draw_cap = params.retry_cap_factor.saturating_mul(l_max as u64);

    let mut lattices = Vec::new();
    let mut tables: Vec<AliasingTable> = Vec::new();
    let mut xi = vec![0u32; card];
    let mut covered_count = 0usize;
    let mut draws = 0u64;
    let mut retry_cap_hit = false;

    while covered_count < card && lattices.len() < l_max {
        if draws >= draw_cap {
            retry_cap_hit = true;
            break;
        }
        let n = primes[lattices.len()];
        let mut stream = Stream::new(params.seed, Domain::PlanDraw, draws);
        draws += 1;
        let g: Vec<u64> = (0..d).map(|_| stream.uniform_inclusive(1, n)).collect();
        let lat = Rank1Lattice::new(n, g)?;
        let table = aliasing_indicators(cross, &lat, lattices.len())?;
        let adds_new = table.indicators.iter().zip(&xi).any(|(&u, &x)| u && x == 0);
        if !adds_new {
            continue;
        }
        for (x, &u) in xi.iter_mut().zip(&table.indicators) {
            if u {
                if *x == 0 {
                    covered_count += 1;
                }
                *x += 1;
            }
        }
        lattices.push(lat);
        tables.push(table);
    }

    let mut warnings = assumption_warnings(cross, params.c, params.delta, l_max);
    if retry_cap_hit {
        warnings.push(format!("retry cap of {draw_cap} draws reached before coverage"));
    }
    let covered = covered_count == card;
    if !covered {
        warnings.push(format!("{} frequencies remain uncovered", card - covered_count));
    }
    Ok(MultiLatticePlan {
        seed: params.seed,
        c: params.c,
        delta: params.delta,
        l_max,
        eta,
        total_points: lattices.iter().map(|l: &Rank1Lattice| l.n()).sum(),
        lattices,
        tables,
        xi,
        covered,
        draws_used: draws,
        retry_cap_hit,
        warnings,
    })
}

/// Diagnostics of [`verify_plan`].
#[derive(Debug, Clone, Serialize)]
pub struct PlanReport {
    pub covered: bool,
    pub uncovered: Vec<usize>,
    pub xi_consistent: bool,
    pub num_lattices: usize,
    pub l_max: usize,
    pub lattice_count_ok: bool,
    pub primes_increasing: bool,
    pub total_points: u64,
    /// `2 c L_max (|A| − 1)`.
    pub budget_limit: f64,
    pub budget_ok: bool,
    pub eta_real: f64,
    pub span: u64,
    pub eta_covers_span: bool,
    pub l_max_log_term: f64,
    pub eta_covers_l_max_log: bool,
    /// Present only for `delta = 1/2`.
    pub c_sufficient: Option<bool>,
    pub c_threshold: f64,
    pub check_radius: u64,
    pub dual_vectors_checked: usize,
    pub translate_violations: usize,
    pub translate_overlaps: usize,
    pub notes: Vec<String>,
}

impl PlanReport {
    /// Coverage, budget and the dual-lattice checks all passed.
    pub fn guarantees_hold(&self) -> bool {
        self.covered
            && self.xi_consistent
            && self.lattice_count_ok
            && self.primes_increasing
            && self.budget_ok
            && self.translate_violations == 0
            && self.translate_overlaps == 0
    }

    /// The theoretical preconditions on `η` and `c` hold.
    pub fn assumptions_hold(&self) -> bool {
        self.eta_covers_span && self.eta_covers_l_max_log && self.c_sufficient != Some(false)
    }
}

/// Checks coverage, budget, assumptions, and that no dual vector within
/// `check_radius` maps an aliasing-free frequency back into the cross.
pub fn verify_plan(cross: &HyperbolicCross, plan: &MultiLatticePlan, check_radius: u64) -> Result<PlanReport> {
    plan.check_against(cross)?;
    let card = cross.len();
    let mut notes = Vec::new();
    let mut xi = vec![0u32; card];
    for table in &plan.tables {
        for (x, &u) in xi.iter_mut().zip(&table.indicators) {
            *x += u as u32;
        }
    }
    let uncovered = plan.uncovered();
    let eta_real = plan.c * (card as f64 - 1.0);
    let l_max = plan.l_max;
    let llog = 4.0 * l_max as f64 * (l_max as f64).ln();
    let budget_limit = 2.0 * plan.c * l_max as f64 * (card as f64 - 1.0);

    let d = cross.dim() as u32;
    let mut radius = check_radius;
    while radius > 0 && (2 * radius + 1).checked_pow(d).is_none_or(|t| t > DUAL_BOX_CAP) {
        radius -= 1;
    }
    if radius < check_radius {
        notes.push(format!("check radius reduced from {check_radius} to {radius}"));
    }
    let mut checked = 0;
    let mut violations = 0;
    let mut overlaps = 0;
    for (lat, table) in plan.lattices.iter().zip(&plan.tables) {
        let dual = brute_force_dual_box(lat, radius)?;
        checked += dual.len();
        let mut seen: HashSet<Vec<i64>> = HashSet::new();
        for (i, k) in cross.iter().enumerate() {
            if !table.indicators[i] {
                continue;
            }
            for ell in &dual {
                let shifted: Vec<i64> = k.iter().zip(ell).map(|(a, b)| a + b).collect();
                if cross.contains(&shifted) {
                    violations += 1;
                }
                if !seen.insert(shifted) {
                    overlaps += 1;
                }
            }
        }
    }

    Ok(PlanReport {
        covered: uncovered.is_empty() && card > 0,
        uncovered,
        xi_consistent: xi == plan.xi,
        num_lattices: plan.lattices.len(),
        l_max,
        lattice_count_ok: plan.lattices.len() <= l_max,
        primes_increasing: plan.lattices.windows(2).all(|w| w[0].n() < w[1].n()),
        total_points: plan.total_points,
        budget_limit,
        budget_ok: plan.total_points as f64 <= budget_limit,
        eta_real,
        span: cross.span(),
        eta_covers_span: eta_real >= cross.span() as f64,
        l_max_log_term: llog,
        eta_covers_l_max_log: eta_real >= llog,
        c_sufficient: (plan.delta == 0.5).then(|| c_condition_holds(plan.c)),
        c_threshold: c_condition_threshold(),
        check_radius: radius,
        dual_vectors_checked: checked,
        translate_violations: violations,
        translate_overlaps: overlaps,
        notes,
    })
}
