//! Adaptive quadrature over boxes and implicitly defined regions in the
//! nonnegative orthant.
//!
//! Box integrals use a high/low pair of tensor Gauss-Legendre rules,
//! subdividing dyadically until the pair's discrepancy is below the budget
//! (or below the f64 resolution of the local value).
//! Region integrals classify cells against the indicator. For downward
//! closed (monotone) regions the bounding box is tested first (a region
//! that fills its box costs a single adaptive tensor rule) and boundary
//! cells are resolved exactly: the region under the graph of the boundary
//! height, found by bisection along the last axis, is integrated column by
//! column with the outer coordinates handled recursively. Non-monotone
//! indicator regions fall back to corner-and-center sampling with midpoint
//! closure on the straddling layer.

use std::sync::Arc;

use num_complex::Complex64;
use once_cell::sync::Lazy;

/// Scalar types the integrator can accumulate.
pub trait QuadValue:
    Copy + Send + Sync + std::ops::Add<Output = Self> + std::ops::Sub<Output = Self>
{
    fn zero() -> Self;
    fn scale(self, s: f64) -> Self;
    fn magnitude(self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

const MIN_BUDGET: f64 = 1e-300;
const SHRINK: f64 = 1.0 - 1e-12;
/// Straddling cells in the sampling fallback stop subdividing below this
/// side length (relative to the root box).
pub const MIN_STRADDLE_SIDE: f64 = 6.103515625e-5; // 2^-14

fn legendre_nodes(m: usize) -> (Vec<f64>, Vec<f64>) {
    // Newton iteration on P_m; nodes and weights mapped to [0,1]
    let mut xs = vec![0.0; m];
    let mut ws = vec![0.0; m];
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_eval(m, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_eval(m, x);
        xs[i] = (1.0 - x) / 2.0; // ascending in [0,1]
        ws[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    xs.reverse();
    ws.reverse();
    (xs, ws)
}

fn legendre_eval(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=m {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

static GL8: Lazy<(Vec<f64>, Vec<f64>)> = Lazy::new(|| legendre_nodes(8));
static GL12: Lazy<(Vec<f64>, Vec<f64>)> = Lazy::new(|| legendre_nodes(12));
static GL16: Lazy<(Vec<f64>, Vec<f64>)> = Lazy::new(|| legendre_nodes(16));

/// High/low tensor rule pair by dimension: the high rule carries the value,
/// the discrepancy against the low rule drives refinement.
fn rules_for_dim(dim: usize) -> (&'static (Vec<f64>, Vec<f64>), &'static (Vec<f64>, Vec<f64>)) {
    if dim <= 2 {
        (&GL16, &GL8)
    } else {
        (&GL12, &GL8)
    }
}

/// Plain tensor Gauss-Legendre evaluation on a box.
fn tensor_rule<V: QuadValue>(
    lo: &[f64],
    hi: &[f64],
    f: &dyn Fn(&[f64]) -> V,
    rule: &(Vec<f64>, Vec<f64>),
) -> V {
    let n = lo.len();
    let (xs, ws) = rule;
    let m = xs.len();
    let mut idx = vec![0usize; n];
    let mut pt = vec![0.0; n];
    let mut acc = V::zero();
    loop {
        let mut w = 1.0;
        for j in 0..n {
            let h = hi[j] - lo[j];
            pt[j] = lo[j] + xs[idx[j]] * h;
            w *= ws[idx[j]] * h;
        }
        acc = acc + f(&pt).scale(w);
        let mut j = 0;
        loop {
            if j == n {
                return acc;
            }
            idx[j] += 1;
            if idx[j] < m {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

/// Adaptive tensor integral over a box with an absolute error budget.
pub fn integrate_box<V: QuadValue>(
    lo: &[f64],
    hi: &[f64],
    f: &dyn Fn(&[f64]) -> V,
    abs_tol: f64,
    max_depth: usize,
) -> V {
    if lo.iter().zip(hi).any(|(a, b)| b <= a) {
        return V::zero();
    }
    adapt_box(lo, hi, f, abs_tol.max(MIN_BUDGET), max_depth)
}

fn adapt_box<V: QuadValue>(
    lo: &[f64],
    hi: &[f64],
    f: &dyn Fn(&[f64]) -> V,
    budget: f64,
    depth_left: usize,
) -> V {
    let n = lo.len();
    let (high, low) = rules_for_dim(n);
    let value = tensor_rule(lo, hi, f, high);
    let check = tensor_rule(lo, hi, f, low);
    let err = (value - check).magnitude();
    // refinement below the f64 resolution of the local value cannot help
    if err <= budget || err <= 1e-13 * value.magnitude() || depth_left == 0 {
        return value;
    }
    let parts = 1usize << n;
    let child_budget = budget / parts as f64;
    let mut acc = V::zero();
    for mask in 0..parts {
        let mut clo = lo.to_vec();
        let mut chi = hi.to_vec();
        for j in 0..n {
            let mid = 0.5 * (lo[j] + hi[j]);
            if mask & (1 << j) == 0 {
                chi[j] = mid;
            } else {
                clo[j] = mid;
            }
        }
        acc = acc + adapt_box(&clo, &chi, f, child_budget, depth_left - 1);
    }
    acc
}

pub type RegionIndicator = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

type HeightCache = std::sync::Mutex<std::collections::HashMap<Vec<u64>, f64>>;

/// An implicitly defined region inside the box `[0, upper)`.
#[derive(Clone)]
pub struct Region {
    pub indicator: RegionIndicator,
    pub upper: Vec<f64>,
    /// Downward closed; enables exact boundary resolution.
    pub monotone: bool,
    /// Boundary heights found by bisection, keyed by the base point; the
    /// region is fixed, so heights are shared across integrands.
    height_cache: Arc<HeightCache>,
}

impl Region {
    pub fn new(indicator: RegionIndicator, upper: Vec<f64>, monotone: bool) -> Self {
        assert!(upper.iter().all(|u| u.is_finite() && *u > 0.0));
        Self {
            indicator,
            upper,
            monotone,
            height_cache: Arc::new(std::sync::Mutex::new(std::collections::HashMap::new())),
        }
    }

    pub fn dim(&self) -> usize {
        self.upper.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        (self.indicator)(x)
    }
}

/// Integrate `f` over the region with absolute error budget `abs_tol`.
pub fn integrate_region<V: QuadValue>(
    region: &Region,
    f: &dyn Fn(&[f64]) -> V,
    abs_tol: f64,
    max_depth: usize,
) -> V {
    let budget = abs_tol.max(MIN_BUDGET);
    if region.monotone {
        monotone_integral(
            &*region.indicator,
            &region.upper,
            &|pt: &[f64]| f(pt),
            budget,
            max_depth,
            &region.height_cache,
        )
    } else {
        let lo = vec![0.0; region.dim()];
        let vol: f64 = region.upper.iter().product();
        sampled_dyadic(region, &lo, &region.upper.clone(), f, budget, vol, max_depth)
    }
}

/// Monotone path: box fast path, then column resolution along the last axis
/// with the outer coordinates handled by the same routine one dimension
/// down.
fn monotone_integral<V: QuadValue>(
    indicator: &(dyn Fn(&[f64]) -> bool + Sync),
    upper: &[f64],
    f: &dyn Fn(&[f64]) -> V,
    budget: f64,
    max_depth: usize,
    heights: &HeightCache,
) -> V {
    let n = upper.len();
    let lo = vec![0.0; n];
    let shrunk: Vec<f64> = upper.iter().map(|u| u * SHRINK).collect();
    if indicator(&shrunk) {
        return integrate_box(&lo, upper, f, budget, max_depth);
    }
    if n == 1 {
        let tau = cached_height(heights, &[], &|x| indicator(&[x]), upper[0]);
        if tau <= 0.0 {
            return V::zero();
        }
        return integrate_box(&[0.0], &[tau], f, budget, max_depth);
    }
    // outer region: base points whose column is nonempty
    let last = n - 1;
    let eps = upper[last] * 1e-9;
    let outer_upper = &upper[..last];
    let outer_ind = |base: &[f64]| -> bool {
        let mut pt = base.to_vec();
        pt.push(eps);
        indicator(&pt)
    };
    let outer_vol: f64 = outer_upper.iter().product();
    let inner_tol = 0.5 * budget / outer_vol.max(1e-12);
    let top = upper[last];
    let column = |base: &[f64]| -> V {
        let probe = std::cell::RefCell::new({
            let mut v = base.to_vec();
            v.push(0.0);
            v
        });
        let key: Vec<u64> = base.iter().map(|v| v.to_bits()).collect();
        let height = cached_height(
            heights,
            &key,
            &|x| {
                let mut pt = probe.borrow_mut();
                pt[last] = x;
                indicator(&pt)
            },
            top,
        );
        if height <= 0.0 {
            return V::zero();
        }
        let g = |x: &[f64]| -> V {
            let mut pt = probe.borrow_mut();
            pt[last] = x[0];
            f(&pt)
        };
        integrate_box(&[0.0], &[height], &g, inner_tol, max_depth)
    };
    monotone_integral(
        &outer_ind,
        outer_upper,
        &column,
        0.5 * budget,
        max_depth,
        heights,
    )
}

fn cached_height(
    heights: &HeightCache,
    base_key: &[u64],
    inside: &dyn Fn(f64) -> bool,
    top: f64,
) -> f64 {
    let mut key = Vec::with_capacity(base_key.len() + 1);
    key.extend_from_slice(base_key);
    key.push(top.to_bits());
    if let Some(hit) = heights.lock().unwrap().get(&key) {
        return *hit;
    }
    let value = bisect_height(inside, top);
    heights.lock().unwrap().insert(key, value);
    value
}

/// Largest `x` in `[0, top)` inside the column, by bisection; 0 when the
/// whole column is outside.
fn bisect_height(inside: &dyn Fn(f64) -> bool, top: f64) -> f64 {
    let eps = top * 1e-12;
    if !inside(eps) {
        return 0.0;
    }
    if inside(top * SHRINK) {
        return top;
    }
    let mut lo = eps;
    let mut hi = top;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if inside(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Sampling fallback for non-monotone indicators: corner + center
/// classification, recursive subdivision, midpoint closure on straddling
/// cells below the minimum side.
fn sampled_dyadic<V: QuadValue>(
    region: &Region,
    lo: &[f64],
    hi: &[f64],
    f: &dyn Fn(&[f64]) -> V,
    budget: f64,
    root_vol: f64,
    max_depth: usize,
) -> V {
    let n = lo.len();
    let mut inside_count = 0usize;
    let corners = 1usize << n;
    let mut pt = vec![0.0; n];
    for mask in 0..corners {
        for j in 0..n {
            pt[j] = if mask & (1 << j) == 0 { lo[j] } else { hi[j] * SHRINK };
        }
        if region.contains(&pt) {
            inside_count += 1;
        }
    }
    for j in 0..n {
        pt[j] = 0.5 * (lo[j] + hi[j]);
    }
    let center_in = region.contains(&pt);
    if center_in {
        inside_count += 1;
    }
    let total = corners + 1;
    let vol: f64 = lo.iter().zip(hi).map(|(a, b)| b - a).product();
    if inside_count == total {
        return integrate_box(lo, hi, f, budget * vol / root_vol, max_depth);
    }
    if inside_count == 0 {
        return V::zero();
    }
    let max_side = lo
        .iter()
        .zip(hi)
        .map(|(a, b)| (b - a) / region.upper.iter().cloned().fold(f64::MIN, f64::max))
        .fold(f64::MIN, f64::max);
    if max_side < MIN_STRADDLE_SIDE || max_depth == 0 {
        // midpoint * volume * indicator
        return if center_in { f(&pt).scale(vol) } else { V::zero() };
    }
    let mut acc = V::zero();
    for mask in 0..corners {
        let mut clo = lo.to_vec();
        let mut chi = hi.to_vec();
        for j in 0..n {
            let mid = 0.5 * (lo[j] + hi[j]);
            if mask & (1 << j) == 0 {
                chi[j] = mid;
            } else {
                clo[j] = mid;
            }
        }
        acc = acc + sampled_dyadic(region, &clo, &chi, f, budget, root_vol, max_depth - 1);
    }
    acc
}
