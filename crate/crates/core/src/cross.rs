//! The weighted hyperbolic cross `A = {k ∈ Z^d : r_{α,γ}(k) ≤ M}`.

use std::collections::HashMap;
use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::weights::{
    check_lambda_window, rnorm_with_weight, support_of, weighted_zeta_sum_raw, SmoothnessParams, TheoryParams,
    WeightSpec,
};

/// Relative tolerance of every `r(k) ≤ M` comparison; boundary cases are
/// resolved toward inclusion.
pub const BOUNDARY_GUARD: f64 = 1e-12;

/// Default cap on the number of enumerated indices.
pub const DEFAULT_CARDINALITY_CAP: usize = 100_000_000;

pub(crate) fn within_radius(r: f64, m_radius: f64) -> bool {
    r <= m_radius * (1.0 + BOUNDARY_GUARD)
}

/// Caller-declared upper bound `sup_{w ⊇ u} γ_w`, used for support pruning.
pub type SupersetHook = Arc<dyn Fn(&[usize]) -> f64 + Send + Sync>;

/// Enumeration knobs.
#[derive(Clone)]
pub struct CrossOptions {
    pub cardinality_cap: usize,
    /// Replaces the family's own superset bound when set.
    pub superset_hook: Option<SupersetHook>,
}

impl Default for CrossOptions {
    fn default() -> Self {
        Self {
            cardinality_cap: DEFAULT_CARDINALITY_CAP,
            superset_hook: None,
        }
    }
}

impl std::fmt::Debug for CrossOptions {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CrossOptions")
            .field("cardinality_cap", &self.cardinality_cap)
            .field("superset_hook", &self.superset_hook.is_some())
            .finish()
    }
}

/// An enumerated cross, stored in lexicographic order.
#[derive(Debug, Clone)]
pub struct HyperbolicCross {
    params: SmoothnessParams,
    spec: WeightSpec,
    flat: Vec<i64>,
    lookup: HashMap<Box<[i64]>, usize>,
    span: u64,
    supports: Vec<Vec<usize>>,
}

/// Descriptive metadata written next to a cross export.
#[derive(Debug, Clone, Serialize)]
pub struct CrossMetadata {
    pub d: usize,
    pub alpha: f64,
    #[serde(rename = "M")]
    pub m_radius: f64,
    pub cardinality: usize,
    pub span: u64,
    pub weight_spec: WeightSpec,
}

impl HyperbolicCross {
    pub fn enumerate(params: SmoothnessParams, spec: WeightSpec) -> Result<Self> {
        Self::enumerate_with(params, spec, &CrossOptions::default())
    }

    pub fn enumerate_with(params: SmoothnessParams, spec: WeightSpec, options: &CrossOptions) -> Result<Self> {
        params.validate()?;
        spec.validate(params.dim)?;
        let supports = viable_supports(&params, &spec, options)?;
        let weights: Vec<f64> = supports.iter().map(|u| spec.weight_of(u)).collect::<Result<_>>()?;

        let count = AtomicUsize::new(0);
        let cap = options.cardinality_cap;
        let blocks: Vec<Vec<i64>> = supports
            .par_iter()
            .zip(weights.par_iter())
            .map(|(u, &g)| {
                let block = enumerate_support(&params, u, g, &count, cap)?;
                Ok(block)
            })
            .collect::<Result<_>>()?;

        let d = params.dim;
        let mut rows: Vec<&[i64]> = blocks.iter().flat_map(|b| b.chunks_exact(d)).collect();
        rows.par_sort_unstable();
        let flat: Vec<i64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        drop(rows);
        Ok(Self::from_sorted_flat(params, spec, flat, supports))
    }

    fn from_sorted_flat(params: SmoothnessParams, spec: WeightSpec, flat: Vec<i64>, supports: Vec<Vec<usize>>) -> Self {
        let d = params.dim;
        let lookup = flat
            .chunks_exact(d)
            .enumerate()
            .map(|(i, k)| (Box::<[i64]>::from(k), i))
            .collect();
        let mut span = 0u64;
        for j in 0..d {
            let col = flat.chunks_exact(d).map(|k| k[j]);
            if let (Some(lo), Some(hi)) = (col.clone().min(), col.max()) {
                span = span.max(hi.abs_diff(lo));
            }
        }
        Self {
            params,
            spec,
            flat,
            lookup,
            span,
            supports,
        }
    }

    pub fn params(&self) -> &SmoothnessParams {
        &self.params
    }

    pub fn spec(&self) -> &WeightSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.params.dim
    }

    pub fn len(&self) -> usize {
        self.flat.len() / self.params.dim
    }

    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }

    /// `N_A = max_j (max k_j − min k_j)`.
    pub fn span(&self) -> u64 {
        self.span
    }

    /// Index at ordinal `i`.
    pub fn index(&self, i: usize) -> &[i64] {
        let d = self.params.dim;
        &self.flat[i * d..(i + 1) * d]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[i64]> + '_ {
        self.flat.chunks_exact(self.params.dim)
    }

    /// Flat row-major storage of all indices.
    pub fn as_flat(&self) -> &[i64] {
        &self.flat
    }

    pub fn ordinal(&self, k: &[i64]) -> Option<usize> {
        self.lookup.get(k).copied()
    }

    pub fn contains(&self, k: &[i64]) -> bool {
        self.lookup.contains_key(k)
    }

    /// Subsets `u` whose weight admits at least one index with support `u`,
    /// in the order they were visited.
    pub fn supports(&self) -> &[Vec<usize>] {
        &self.supports
    }

    pub fn rnorm_at(&self, i: usize) -> f64 {
        let k = self.index(i);
        let g = self.spec.weight_of(&support_of(k)).unwrap_or(0.0);
        rnorm_with_weight(k, self.params.alpha, g)
    }

    /// Whether `k` satisfies the defining inequality, independent of storage.
    pub fn admits(&self, k: &[i64]) -> Result<bool> {
        let r = crate::weights::rnorm(k, &self.params, &self.spec)?;
        Ok(within_radius(r, self.params.m_radius))
    }

    pub fn metadata(&self) -> CrossMetadata {
        CrossMetadata {
            d: self.params.dim,
            alpha: self.params.alpha,
            m_radius: self.params.m_radius,
            cardinality: self.len(),
            span: self.span,
            weight_spec: self.spec.clone(),
        }
    }

    /// CSV with header `k_1,...,k_d,rnorm`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let d = self.params.dim;
        let mut header: Vec<String> = (1..=d).map(|j| format!("k_{j}")).collect();
        header.push("rnorm".into());
        w.write_record(&header).map_err(io_err)?;
        for i in 0..self.len() {
            let mut rec: Vec<String> = self.index(i).iter().map(|x| x.to_string()).collect();
            rec.push(self.rnorm_at(i).to_string());
            w.write_record(&rec).map_err(io_err)?;
        }
        w.flush().map_err(|e| Error::Io(e.to_string()))?;
        Ok(())
    }
}

pub(crate) fn io_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn viable_supports(params: &SmoothnessParams, spec: &WeightSpec, options: &CrossOptions) -> Result<Vec<Vec<usize>>> {
    let m = params.m_radius;
    let d = params.dim;
    let admits_support = |u: &[usize]| -> Result<bool> {
        if u.is_empty() {
            return Ok(within_radius(1.0, m));
        }
        let g = spec.weight_of(u)?;
        Ok(g > 0.0 && within_radius(1.0 / g, m))
    };

    if options.superset_hook.is_none() {
        if let Some(mut list) = spec.declared_supports() {
            if !list.iter().any(|u| u.is_empty()) {
                list.insert(0, Vec::new());
            }
            let mut keep = Vec::new();
            for u in list {
                if admits_support(&u)? {
                    keep.push(u);
                }
            }
            return Ok(keep);
        }
    }

    let bound = |u: &[usize]| -> f64 {
        match &options.superset_hook {
            Some(h) => h(u),
            None => spec.superset_bound(u, d),
        }
    };
    let mut out = Vec::new();
    let mut stack: Vec<Vec<usize>> = vec![Vec::new()];
    while let Some(u) = stack.pop() {
        if admits_support(&u)? {
            out.push(u.clone());
        }
        if out.len() > options.cardinality_cap {
            return Err(Error::CardinalityCap {
                cap: options.cardinality_cap,
                context: "viable supports".into(),
            });
        }
        let start = u.last().map_or(0, |&j| j + 1);
        for j in (start..d).rev() {
            let mut w = u.clone();
            w.push(j);
            let b = bound(&w);
            if b > 0.0 && within_radius(1.0 / b, m) {
                stack.push(w);
            }
        }
    }
    Ok(out)
}

fn enumerate_support(
    params: &SmoothnessParams,
    u: &[usize],
    gamma: f64,
    count: &AtomicUsize,
    cap: usize,
) -> Result<Vec<i64>> {
    let d = params.dim;
    let alpha = params.alpha;
    let m = params.m_radius;
    let overflow = || Error::CardinalityCap {
        cap,
        context: format!("support {u:?}"),
    };
    if u.is_empty() {
        if count.fetch_add(1, Ordering::Relaxed) >= cap {
            return Err(overflow());
        }
        return Ok(vec![0; d]);
    }
    // Every positive tuple in the cross has ∏ k_j ≤ (γ_u M)^{1/α}; the
    // integer ceiling plus one keeps the search superset safe under rounding.
    let budget = (gamma * m * (1.0 + BOUNDARY_GUARD)).powf(1.0 / alpha);
    if !budget.is_finite() || budget >= (1u64 << 62) as f64 {
        return Err(overflow());
    }
    let limit = budget.floor() as u64 + 1;

    let s = u.len();
    let signs = 1usize << s;
    let mut out = Vec::new();
    let mut tuple = vec![1u64; s];
    let mut k = vec![0i64; d];
    // Iterative DFS over positive tuples with prefix products ≤ limit.
    let mut prefix = vec![1u64; s + 1];
    let mut depth = 0usize;
    tuple[0] = 0;
    loop {
        tuple[depth] += 1;
        let p = prefix[depth].saturating_mul(tuple[depth]);
        if p > limit {
            if depth == 0 {
                break;
            }
            depth -= 1;
            continue;
        }
        prefix[depth + 1] = p;
        if depth + 1 < s {
            depth += 1;
            tuple[depth] = 0;
            continue;
        }
        for (idx, &j) in u.iter().enumerate() {
            k[j] = tuple[idx] as i64;
        }
        if within_radius(rnorm_with_weight(&k, alpha, gamma), m) {
            if count.fetch_add(signs, Ordering::Relaxed) + signs > cap {
                return Err(overflow());
            }
            for mask in 0..signs {
                for (idx, &j) in u.iter().enumerate() {
                    let v = tuple[idx] as i64;
                    k[j] = if mask >> idx & 1 == 1 { -v } else { v };
                }
                out.extend_from_slice(&k);
            }
        }
    }
    Ok(out)
}

/// `2 max_j max_{u∋j} ⌊(γ_u M)^{1/α}⌋` over the given supports.
pub fn span_closed_form(params: &SmoothnessParams, spec: &WeightSpec, supports: &[Vec<usize>]) -> Result<u64> {
    let mut best = 0u64;
    for u in supports.iter().filter(|u| !u.is_empty()) {
        let g = spec.weight_of(u)?;
        if g == 0.0 {
            continue;
        }
        let reach = (g * params.m_radius * (1.0 + BOUNDARY_GUARD))
            .powf(1.0 / params.alpha)
            .floor();
        best = best.max(reach as u64);
    }
    Ok(2 * best)
}

/// `M^λ Σ_u γ_u^λ (2ζ(αλ))^{|u|}`, an upper bound on `|A|`.
pub fn cardinality_bound(params: &SmoothnessParams, spec: &WeightSpec, theory: &TheoryParams) -> Result<f64> {
    if !(theory.lambda * params.alpha > 1.0) {
        return Err(invalid("lambda", "must exceed 1/alpha"));
    }
    let sum = weighted_zeta_sum_raw(spec, params.dim, params.alpha, theory.lambda)?;
    Ok(params.m_radius.powf(theory.lambda) * sum)
}

/// `M^{-(2-λ)} · 8(3-λ)/(2-λ) · Σ_u γ_u^λ (2ζ(αλ))^{|u|}`, an upper bound
/// on `Σ_{k∉A} r(k)^{-2}`.
pub fn tail_bound(params: &SmoothnessParams, spec: &WeightSpec, theory: &TheoryParams) -> Result<f64> {
    check_lambda_window(theory.lambda, params.alpha)?;
    if params.m_radius < 1.0 {
        return Err(invalid("M", "tail bound needs M >= 1"));
    }
    let lambda = theory.lambda;
    let sum = weighted_zeta_sum_raw(spec, params.dim, params.alpha, lambda)?;
    Ok(params.m_radius.powf(-(2.0 - lambda)) * 8.0 * (3.0 - lambda) / (2.0 - lambda) * sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::riemann_zeta;
    use approx::assert_relative_eq;
    use std::collections::BTreeMap;
    use std::f64::consts::PI;

    fn cross(alpha: f64, m: f64, spec: WeightSpec, d: usize) -> HyperbolicCross {
        HyperbolicCross::enumerate(SmoothnessParams::new(alpha, m, d).unwrap(), spec).unwrap()
    }

    fn brute(alpha: f64, m: f64, spec: &WeightSpec, d: usize, radius: i64) -> Vec<Vec<i64>> {
        let p = SmoothnessParams::new(alpha, m, d).unwrap();
        let mut out = Vec::new();
        let side = (2 * radius + 1) as usize;
        for code in 0..side.pow(d as u32) {
            let mut c = code;
            let k: Vec<i64> = (0..d)
                .map(|_| {
                    let v = (c % side) as i64 - radius;
                    c /= side;
                    v
                })
                .collect();
            let r = crate::weights::rnorm(&k, &p, spec).unwrap();
            if within_radius(r, m) {
                out.push(k);
            }
        }
        out.sort();
        out
    }

    #[test]
    fn one_dimensional_example() {
        let c = cross(1.0, 3.0, WeightSpec::unit(1), 1);
        let got: Vec<i64> = c.iter().map(|k| k[0]).collect();
        assert_eq!(got, vec![-3, -2, -1, 0, 1, 2, 3]);
        assert_eq!(got, brute(1.0, 3.0, &WeightSpec::unit(1), 1, 10).concat());
        assert_eq!(c.span(), 6);
    }

    #[test]
    fn empty_below_unit_radius() {
        let c = cross(1.0, 0.5, WeightSpec::unit(3), 3);
        assert!(c.is_empty());
        assert_eq!(c.span(), 0);
    }

    #[test]
    fn two_dimensional_example() {
        let c = cross(1.0, 3.0, WeightSpec::unit(2), 2);
        assert_eq!(c.len(), 33);
        let axis = c.iter().filter(|k| (k[0] == 0) ^ (k[1] == 0)).count();
        assert_eq!(axis, 12);
        assert_eq!(c.span(), 6);
        assert_eq!(span_closed_form(c.params(), c.spec(), c.supports()).unwrap(), 6);
    }

    #[test]
    fn span_examples() {
        let c = cross(1.0, 4.0, WeightSpec::product(vec![0.5]), 1);
        assert_eq!(c.iter().map(|k| k[0]).collect::<Vec<_>>(), vec![-2, -1, 0, 1, 2]);
        assert_eq!(span_closed_form(c.params(), c.spec(), c.supports()).unwrap(), 4);
        let origin = cross(1.0, 5.0, WeightSpec::product(vec![0.0, 0.0]), 2);
        assert_eq!(origin.len(), 1);
        assert_eq!(
            span_closed_form(origin.params(), origin.spec(), origin.supports()).unwrap(),
            0
        );
    }

    #[test]
    fn bound_examples() {
        let p = SmoothnessParams::new(1.0, 3.0, 1).unwrap();
        let t = TheoryParams { lambda: 2.0, beta: 0.5 };
        let b = cardinality_bound(&p, &WeightSpec::unit(1), &t).unwrap();
        assert_relative_eq!(b, 9.0 * (1.0 + PI * PI / 3.0), max_relative = 1e-12);

        let p = SmoothnessParams::new(2.0, 4.0, 2).unwrap();
        let t = TheoryParams { lambda: 1.0, beta: 0.5 };
        let b = cardinality_bound(&p, &WeightSpec::unit(2), &t).unwrap();
        assert_relative_eq!(b, 4.0 * (1.0 + PI * PI / 3.0).powi(2), max_relative = 1e-12);
        let c = cross(2.0, 4.0, WeightSpec::unit(2), 2);
        assert_eq!(c.len(), 21);
        assert!(c.contains(&[1, 2]));
        assert_eq!(c.len(), brute(2.0, 4.0, &WeightSpec::unit(2), 2, 4).len());

        let p = SmoothnessParams::new(2.0, 1.0, 1).unwrap();
        let tb = tail_bound(&p, &WeightSpec::unit(1), &t).unwrap();
        assert_relative_eq!(tb, 16.0 * (1.0 + PI * PI / 3.0), max_relative = 1e-12);
        let true_tail = 2.0 * (riemann_zeta(4.0).unwrap() - 1.0);
        assert!(true_tail <= tb);
        assert_relative_eq!(true_tail, 0.16465, epsilon = 1e-5);

        let p = SmoothnessParams::new(2.0, 2.0, 2).unwrap();
        let tb = tail_bound(&p, &WeightSpec::unit(2), &t).unwrap();
        assert_relative_eq!(tb, 8.0 * (1.0 + PI * PI / 3.0).powi(2), max_relative = 1e-12);

        let p = SmoothnessParams::new(2.0, 0.5, 1).unwrap();
        assert!(tail_bound(&p, &WeightSpec::unit(1), &t).is_err());
        let bad = TheoryParams { lambda: 0.4, beta: 0.5 };
        assert!(cardinality_bound(&p, &WeightSpec::unit(1), &bad).is_err());
    }

    #[test]
    fn explicit_weights_only_use_stored_subsets() {
        let mut map = BTreeMap::new();
        map.insert(vec![0, 2], 2.0);
        map.insert(vec![1], 1.0);
        let spec = WeightSpec::Explicit { map };
        let c = cross(1.0, 2.0, spec.clone(), 3);
        assert_eq!(
            c.iter().map(|k| k.to_vec()).collect::<Vec<_>>(),
            brute(1.0, 2.0, &spec, 3, 5)
        );
        assert!(c.iter().all(|k| k[1] == 0 || (k[0] == 0 && k[2] == 0)));
    }

    #[test]
    fn spod_with_hook() {
        let spec = WeightSpec::Spod {
            sigma: 2,
            table: vec![vec![0.8, 0.3], vec![0.5, 0.2], vec![0.1, 0.05]],
            orders: vec![1.0, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0],
            support: None,
        };
        let p = SmoothnessParams::new(1.0, 8.0, 3).unwrap();
        let hook_spec = spec.clone();
        let opts = CrossOptions {
            superset_hook: Some(Arc::new(move |_u: &[usize]| {
                // Crude but valid: the largest weight over all subsets.
                let mut best: f64 = 1.0;
                crate::weights::for_each_subset(3, |w| best = best.max(hook_spec.weight_of(w).unwrap()));
                best
            })),
            ..Default::default()
        };
        let with_hook = HyperbolicCross::enumerate_with(p, spec.clone(), &opts).unwrap();
        let native = HyperbolicCross::enumerate(p, spec.clone()).unwrap();
        let expect = brute(1.0, 8.0, &spec, 3, 40);
        assert_eq!(with_hook.iter().map(|k| k.to_vec()).collect::<Vec<_>>(), expect);
        assert_eq!(native.iter().map(|k| k.to_vec()).collect::<Vec<_>>(), expect);
    }

    #[test]
    fn cardinality_cap_aborts() {
        let p = SmoothnessParams::new(1.0, 50.0, 3).unwrap();
        let opts = CrossOptions {
            cardinality_cap: 100,
            ..Default::default()
        };
        let r = HyperbolicCross::enumerate_with(p, WeightSpec::unit(3), &opts);
        assert!(matches!(r, Err(Error::CardinalityCap { cap: 100, .. })));
    }

    #[test]
    fn boundary_points_are_included() {
        // r(k) = |k|^1.5 / 1 hits M = 8 exactly at k = 4.
        let c = cross(1.5, 8.0, WeightSpec::unit(1), 1);
        assert!(c.contains(&[4]) && c.contains(&[-4]));
        assert!(!c.contains(&[5]));
        // 0.1 * 30 = 3 is inexact in binary.
        let c = cross(1.0, 30.0, WeightSpec::product(vec![0.1]), 1);
        assert!(c.contains(&[3]));
    }

    #[test]
    fn csv_and_metadata() {
        let c = cross(1.0, 1.0, WeightSpec::unit(2), 2);
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("k_1,k_2,rnorm"));
        assert_eq!(lines.next(), Some("-1,-1,1"));
        assert_eq!(text.lines().count(), 10);
        let meta = serde_json::to_value(c.metadata()).unwrap();
        assert_eq!(meta["cardinality"], 9);
        assert_eq!(meta["M"], 1.0);
        assert_eq!(meta["weight_spec"]["kind"], "product");
    }

    fn random_spec(seed: u64, d: usize, pod: bool) -> WeightSpec {
        let mut s = crate::rng::Stream::new(seed, crate::rng::Domain::Sweep, 0);
        let gammas: Vec<f64> = (0..d).map(|_| 0.1 + 1.4 * s.unit()).collect();
        if pod {
            let orders: Vec<f64> = (0..=d).map(|_| 0.2 + 2.0 * s.unit()).collect();
            WeightSpec::pod(gammas, orders)
        } else {
            WeightSpec::product(gammas)
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]
        #[test]
        fn matches_brute_force(seed in 0u64..10_000, d in 1usize..=3, m in 1.0f64..20.0,
                               alpha in 0.6f64..2.5, pod: bool) {
            let spec = random_spec(seed, d, pod);
            let c = cross(alpha, m, spec.clone(), d);
            let mut sup: f64 = 1.0;
            crate::weights::for_each_subset(d, |u| sup = sup.max(spec.weight_of(u).unwrap()));
            let radius = (m * sup).powf(1.0 / alpha).ceil() as i64 + 1;
            let expect = brute(alpha, m, &spec, d, radius);
            let got: Vec<Vec<i64>> = c.iter().map(|k| k.to_vec()).collect();
            proptest::prop_assert_eq!(&got, &expect);

            for (i, k) in c.iter().enumerate() {
                proptest::prop_assert_eq!(c.ordinal(k), Some(i));
                let neg: Vec<i64> = k.iter().map(|x| -x).collect();
                proptest::prop_assert!(c.contains(&neg));
            }
            proptest::prop_assert_eq!(
                span_closed_form(c.params(), c.spec(), c.supports()).unwrap(),
                c.span()
            );
            if c.len() >= 2 {
                proptest::prop_assert!((c.span() as usize) < c.len());
            }
            let t = TheoryParams { lambda: (1.0 / alpha + 2.0) / 2.0, beta: 0.5 };
            proptest::prop_assert!(cardinality_bound(c.params(), &spec, &t).unwrap() >= c.len() as f64);
        }
    }
}
