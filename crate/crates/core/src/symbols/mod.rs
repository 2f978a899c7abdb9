//! Quasi-homogeneous symbols, finite box-indexed sums, and Fourier slicing
//! of general bounded symbols.
//!
//! A quasi-homogeneous symbol is `phi(r e^{i theta}) = f(r) e^{i k.theta}`:
//! a bounded radial part and an integer twist. Sums collect such terms over
//! an index box (missing keys are zero terms). A general bounded symbol is
//! handled through its Fourier slices `f_p(r)`, computed by the trapezoid
//! rule on the torus, which is exact for band-limited symbols.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::domain::DomainProfile;
use crate::lattice::{IndexBox, LatticeError, MultiIndex};
use crate::moments::RadialIntegrand;

pub mod expr;
pub mod spec;

pub use spec::SymbolSpec;

#[derive(Debug, Error)]
pub enum SymbolError {
    #[error(transparent)]
    Expr(#[from] expr::ExprError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("unbounded profile: exponent {exponent} is negative along axis {axis} of an axis-touching domain; raise the starting index instead")]
    UnboundedProfile { axis: usize, exponent: f64 },
    #[error("sup bound violated: |f| = {value} > {bound} at r = {point:?}")]
    SupBoundViolated {
        point: Vec<f64>,
        value: f64,
        bound: f64,
    },
    #[error("term twist {twist} lies outside the sum's box")]
    TermOutsideBox { twist: MultiIndex },
    #[error("bad symbol spec: {0}")]
    Spec(String),
}

type RadialClosure = Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>;

/// A bounded radial function on the radial region (complex-valued).
#[derive(Clone)]
pub struct RadialFn {
    f: RadialClosure,
    desc: String,
}

impl RadialFn {
    pub fn new(f: impl Fn(&[f64]) -> Complex64 + Send + Sync + 'static, desc: impl Into<String>) -> Self {
        Self {
            f: Arc::new(f),
            desc: desc.into(),
        }
    }

    pub fn real(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static, desc: impl Into<String>) -> Self {
        Self::new(move |r| Complex64::new(f(r), 0.0), desc)
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(move |_| c, format!("{c}"))
    }

    pub fn zero() -> Self {
        Self::new(|_| Complex64::new(0.0, 0.0), "0")
    }

    /// Parse from the radial expression grammar (variables `r1..rn`).
    pub fn parse(src: &str, dim: usize) -> Result<Self, SymbolError> {
        let e = expr::Expr::parse(src, 'r', dim)?;
        let desc = src.to_string();
        Ok(Self::new(move |r| e.eval_real(r), desc))
    }

    pub fn eval(&self, r: &[f64]) -> Complex64 {
        (self.f)(r)
    }

    pub fn description(&self) -> &str {
        &self.desc
    }
}

impl std::fmt::Debug for RadialFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "RadialFn({})", self.desc)
    }
}

/// `phi(r e^{i theta}) = f(r) e^{i twist . theta}`.
#[derive(Clone, Debug)]
pub struct QhSymbol {
    radial: RadialFn,
    twist: MultiIndex,
    sup_bound: f64,
}

impl QhSymbol {
    pub fn new(radial: RadialFn, twist: MultiIndex, sup_bound: f64) -> Self {
        assert!(sup_bound >= 0.0);
        Self {
            radial,
            twist,
            sup_bound,
        }
    }

    /// Constructor that spot-checks `|f| <= sup_bound` on a deterministic
    /// sample of the radial region.
    pub fn checked(
        radial: RadialFn,
        twist: MultiIndex,
        sup_bound: f64,
        domain: &DomainProfile,
    ) -> Result<Self, SymbolError> {
        let s = Self::new(radial, twist, sup_bound);
        s.validate_on(domain)?;
        Ok(s)
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(RadialFn::zero(), MultiIndex::zeros(dim), 0.0)
    }

    pub fn dim(&self) -> usize {
        self.twist.dim()
    }

    pub fn radial(&self) -> &RadialFn {
        &self.radial
    }

    pub fn twist(&self) -> &MultiIndex {
        &self.twist
    }

    pub fn sup_bound(&self) -> f64 {
        self.sup_bound
    }

    pub fn eval(&self, r: &[f64], theta: &[f64]) -> Complex64 {
        let phase: f64 = self
            .twist
            .entries()
            .iter()
            .zip(theta)
            .map(|(k, th)| *k as f64 * th)
            .sum();
        self.radial.eval(r) * Complex64::from_polar(1.0, phase)
    }

    /// Spot-check the declared sup bound on a deterministic sample.
    pub fn validate_on(&self, domain: &DomainProfile) -> Result<(), SymbolError> {
        let tol = 1.0 + 1e-9;
        for r in sample_points(domain, 128) {
            let v = self.radial.eval(&r).norm();
            if v > self.sup_bound * tol + 1e-12 {
                return Err(SymbolError::SupBoundViolated {
                    point: r,
                    value: v,
                    bound: self.sup_bound,
                });
            }
        }
        Ok(())
    }

    /// The factored-form integrand profile for this symbol applied after
    /// the twists in `priors`.
    pub fn g_profile(
        &self,
        domain: &DomainProfile,
        priors: &[MultiIndex],
    ) -> Result<RadialIntegrand, SymbolError> {
        g_profile(domain, priors, &self.twist, &self.radial, self.sup_bound)
    }
}

/// `g_j(t) = f(sqrt t) t^(k_1 + ... + k_{j-1} + k_j / 2)`, carried as a
/// radial function plus a half-integer exponent vector.
///
/// Errors when the exponent has a negative component along an axis the
/// domain's closure touches (the integrand would be unbounded); product
/// composition avoids this by folding the lattice power into the exponent.
pub fn g_profile(
    domain: &DomainProfile,
    priors: &[MultiIndex],
    twist: &MultiIndex,
    radial: &RadialFn,
    sup_radial: f64,
) -> Result<RadialIntegrand, SymbolError> {
    let dim = twist.dim();
    let mut half_exponent = vec![0i64; dim];
    for p in priors {
        for (h, e) in half_exponent.iter_mut().zip(p.entries()) {
            *h += 2 * e;
        }
    }
    for (h, e) in half_exponent.iter_mut().zip(twist.entries()) {
        *h += e;
    }
    for (axis, (h, touching)) in half_exponent
        .iter()
        .zip(domain.axis_touching())
        .enumerate()
    {
        if *h < 0 && *touching {
            return Err(SymbolError::UnboundedProfile {
                axis,
                exponent: *h as f64 / 2.0,
            });
        }
    }
    Ok(RadialIntegrand::new(
        radial.clone(),
        half_exponent,
        sup_radial,
        domain,
    ))
}

/// A finite sum of quasi-homogeneous terms indexed by an `IndexBox`;
/// missing keys are zero terms and an empty sum is the zero symbol.
#[derive(Clone, Debug)]
pub struct SymbolSum {
    index_box: IndexBox,
    terms: BTreeMap<MultiIndex, QhSymbol>,
}

impl SymbolSum {
    pub fn new(index_box: IndexBox) -> Self {
        Self {
            index_box,
            terms: BTreeMap::new(),
        }
    }

    /// Singleton sum holding one quasi-homogeneous symbol.
    pub fn from_qh(symbol: QhSymbol) -> Self {
        let index_box = IndexBox::singleton(symbol.twist());
        let mut s = Self::new(index_box);
        s.insert(symbol).expect("twist in singleton box");
        s
    }

    pub fn insert(&mut self, symbol: QhSymbol) -> Result<(), SymbolError> {
        if !self.index_box.contains(symbol.twist()) {
            return Err(SymbolError::TermOutsideBox {
                twist: symbol.twist().clone(),
            });
        }
        self.terms.insert(symbol.twist().clone(), symbol);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.index_box.dim()
    }

    pub fn index_box(&self) -> &IndexBox {
        &self.index_box
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &QhSymbol)> {
        self.terms.iter()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero_symbol(&self) -> bool {
        self.terms.is_empty()
    }

    /// Triangle-inequality bound: sum of the term bounds.
    pub fn sup_bound(&self) -> f64 {
        self.terms.values().map(|s| s.sup_bound()).sum()
    }

    pub fn eval(&self, r: &[f64], theta: &[f64]) -> Complex64 {
        self.terms.values().map(|s| s.eval(r, theta)).sum()
    }

    /// The sub-sum over the box slice at `upper - 1 - level_from_top` along
    /// `axis`.
    pub fn top_slice(&self, axis: usize, level_from_top: i64) -> Result<SymbolSum, SymbolError> {
        let slice_box = self.index_box.top_slice(axis, level_from_top)?;
        let mut out = SymbolSum::new(slice_box.clone());
        for (k, s) in &self.terms {
            if slice_box.contains(k) {
                out.insert(s.clone())?;
            }
        }
        Ok(out)
    }

    /// The sum with the top slice removed (box shrinks by one along `axis`).
    pub fn without_top_slice(&self, axis: usize) -> SymbolSum {
        let reduced = self.index_box.without_top_slice(axis);
        let mut out = SymbolSum::new(reduced.clone());
        for (k, s) in &self.terms {
            if reduced.contains(k) {
                out.insert(s.clone()).expect("twist inside reduced box");
            }
        }
        out
    }

    pub fn validate_on(&self, domain: &DomainProfile) -> Result<(), SymbolError> {
        for s in self.terms.values() {
            s.validate_on(domain)?;
        }
        Ok(())
    }
}

type SourceClosure = Arc<dyn Fn(&[f64], &[f64]) -> Complex64 + Send + Sync>;

/// Torus Fourier coefficient of a bounded symbol at frequency `p`, at a
/// fixed radius: trapezoid rule with `theta_samples[j]` points per axis.
/// Exact for trigonometric polynomials of per-axis degree below
/// `theta_samples[j] - |p_j|`.
pub fn fourier_slice(
    phi: &dyn Fn(&[f64], &[f64]) -> Complex64,
    p: &MultiIndex,
    r: &[f64],
    theta_samples: &[usize],
) -> Complex64 {
    let n = r.len();
    assert_eq!(p.dim(), n);
    assert_eq!(theta_samples.len(), n);
    let mut idx = vec![0usize; n];
    let mut theta = vec![0.0; n];
    let total: usize = theta_samples.iter().product();
    let mut acc = Complex64::new(0.0, 0.0);
    let tau = 2.0 * std::f64::consts::PI;
    loop {
        let mut phase = 0.0;
        for j in 0..n {
            theta[j] = tau * idx[j] as f64 / theta_samples[j] as f64;
            phase -= p.entry(j) as f64 * theta[j];
        }
        acc += phi(r, &theta) * Complex64::from_polar(1.0, phase);
        let mut j = 0;
        loop {
            if j == n {
                return acc / total as f64;
            }
            idx[j] += 1;
            if idx[j] < theta_samples[j] {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

/// A bounded symbol handled through its Fourier slices up to a truncation
/// bound.
#[derive(Clone)]
pub struct SlicedSymbol {
    source: SourceClosure,
    sup_bound: f64,
    p_max: MultiIndex,
    theta_samples: Vec<usize>,
    desc: String,
}

impl SlicedSymbol {
    /// `p_max` bounds slice frequencies componentwise; the trapezoid grid
    /// defaults to `4 * (p_max_j + 4)` points per axis.
    pub fn new(
        source: impl Fn(&[f64], &[f64]) -> Complex64 + Send + Sync + 'static,
        sup_bound: f64,
        p_max: MultiIndex,
        desc: impl Into<String>,
    ) -> Self {
        assert!(p_max.is_nonnegative());
        let theta_samples = p_max
            .entries()
            .iter()
            .map(|p| 4 * (*p as usize + 4))
            .collect();
        Self {
            source: Arc::new(source),
            sup_bound,
            p_max,
            theta_samples,
            desc: desc.into(),
        }
    }

    pub fn with_theta_samples(mut self, per_axis: Vec<usize>) -> Self {
        assert_eq!(per_axis.len(), self.dim());
        assert!(per_axis
            .iter()
            .zip(self.p_max.entries())
            .all(|(n, p)| *n > 2 * (*p as usize)));
        self.theta_samples = per_axis;
        self
    }

    pub fn dim(&self) -> usize {
        self.p_max.dim()
    }

    pub fn sup_bound(&self) -> f64 {
        self.sup_bound
    }

    pub fn p_max(&self) -> &MultiIndex {
        &self.p_max
    }

    pub fn theta_samples(&self) -> &[usize] {
        &self.theta_samples
    }

    pub fn description(&self) -> &str {
        &self.desc
    }

    pub fn eval(&self, r: &[f64], theta: &[f64]) -> Complex64 {
        (self.source)(r, theta)
    }

    /// All slice frequencies `|p_j| <= p_max_j`, lexicographic.
    pub fn slice_indices(&self) -> Vec<MultiIndex> {
        let lower = MultiIndex::new(self.p_max.entries().iter().map(|p| -p).collect());
        let upper = MultiIndex::new(self.p_max.entries().iter().map(|p| p + 1).collect());
        IndexBox::new(lower, upper).iter().collect()
    }

    /// Slice value `f_p(r)`.
    pub fn slice_value(&self, p: &MultiIndex, r: &[f64]) -> Complex64 {
        fourier_slice(&*self.source, p, r, &self.theta_samples)
    }

    /// The slice as a radial function (bounded by `sup|phi|`).
    pub fn slice_radial(&self, p: &MultiIndex) -> RadialFn {
        let source = Arc::clone(&self.source);
        let desc = format!("slice[{p}]({})", self.desc);
        let p = p.clone();
        let samples = self.theta_samples.clone();
        RadialFn::new(
            move |r: &[f64]| fourier_slice(&*source, &p, r, &samples),
            desc,
        )
    }

    /// Reconstruction error `sup |phi - sum_p f_p e^{i p theta}|` over the
    /// given radii and a fixed angular grid; reports the truncation quality.
    pub fn truncation_residual(&self, radii: &[Vec<f64>]) -> f64 {
        let slices = self.slice_indices();
        let grid = 7usize;
        let tau = 2.0 * std::f64::consts::PI;
        let mut worst = 0.0f64;
        for r in radii {
            let coeffs: Vec<(MultiIndex, Complex64)> = slices
                .iter()
                .map(|p| (p.clone(), self.slice_value(p, r)))
                .collect();
            let n = self.dim();
            let mut idx = vec![0usize; n];
            loop {
                let theta: Vec<f64> =
                    idx.iter().map(|i| tau * (*i as f64 + 0.37) / grid as f64).collect();
                let mut rebuilt = Complex64::new(0.0, 0.0);
                for (p, c) in &coeffs {
                    let phase: f64 = p
                        .entries()
                        .iter()
                        .zip(&theta)
                        .map(|(pj, th)| *pj as f64 * th)
                        .sum();
                    rebuilt += c * Complex64::from_polar(1.0, phase);
                }
                let err = ((self.source)(r, &theta) - rebuilt).norm();
                worst = worst.max(err);
                let mut j = 0;
                loop {
                    if j == n {
                        break;
                    }
                    idx[j] += 1;
                    if idx[j] < grid {
                        break;
                    }
                    idx[j] = 0;
                    j += 1;
                }
                if idx.iter().all(|i| *i == 0) {
                    break;
                }
            }
        }
        worst
    }
}

impl std::fmt::Debug for SlicedSymbol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "SlicedSymbol({}, p_max={}, sup={})",
            self.desc, self.p_max, self.sup_bound
        )
    }
}

/// Shared evaluation of all Fourier slices of one symbol.
///
/// One torus grid sweep per radius yields every slice coefficient at once;
/// results are memoized on the radius bit pattern so quadrature nodes that
/// repeat across lattice indices pay for the sweep once.
pub struct SliceBank {
    source: SourceClosure,
    indices: Vec<MultiIndex>,
    theta_samples: Vec<usize>,
    cache: std::sync::Mutex<std::collections::HashMap<Vec<u64>, Arc<Vec<Complex64>>>>,
}

impl SliceBank {
    pub fn new(symbol: &SlicedSymbol) -> Arc<Self> {
        Arc::new(Self {
            source: Arc::clone(&symbol.source),
            indices: symbol.slice_indices(),
            theta_samples: symbol.theta_samples.clone(),
            cache: std::sync::Mutex::new(std::collections::HashMap::new()),
        })
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    /// Coefficients of every slice at radius `r`, in `indices()` order.
    pub fn values_at(&self, r: &[f64]) -> Arc<Vec<Complex64>> {
        let key: Vec<u64> = r.iter().map(|v| v.to_bits()).collect();
        if let Some(hit) = self.cache.lock().unwrap().get(&key) {
            return Arc::clone(hit);
        }
        let values = Arc::new(self.sweep(r));
        self.cache
            .lock()
            .unwrap()
            .insert(key, Arc::clone(&values));
        values
    }

    fn sweep(&self, r: &[f64]) -> Vec<Complex64> {
        let n = r.len();
        let total: usize = self.theta_samples.iter().product();
        let tau = 2.0 * std::f64::consts::PI;
        let mut acc = vec![Complex64::new(0.0, 0.0); self.indices.len()];
        let mut idx = vec![0usize; n];
        let mut theta = vec![0.0; n];
        loop {
            for j in 0..n {
                theta[j] = tau * idx[j] as f64 / self.theta_samples[j] as f64;
            }
            let value = (self.source)(r, &theta);
            for (p, slot) in self.indices.iter().zip(acc.iter_mut()) {
                let phase: f64 = p
                    .entries()
                    .iter()
                    .zip(&theta)
                    .map(|(pj, th)| -(*pj as f64) * th)
                    .sum();
                *slot += value * Complex64::from_polar(1.0, phase);
            }
            let mut j = 0;
            loop {
                if j == n {
                    for slot in &mut acc {
                        *slot /= total as f64;
                    }
                    return acc;
                }
                idx[j] += 1;
                if idx[j] < self.theta_samples[j] {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
        }
    }

    /// Radial function of the slice at position `pos` in `indices()`,
    /// backed by the shared cache.
    pub fn slice_radial(self: &Arc<Self>, pos: usize) -> RadialFn {
        let bank = Arc::clone(self);
        let desc = format!("slice[{}]", self.indices[pos]);
        RadialFn::new(move |r: &[f64]| bank.values_at(r)[pos], desc)
    }
}

/// Deterministic sample of the radial region (low-discrepancy points scaled
/// to the bounding box, filtered by the indicator).
pub fn sample_points(domain: &DomainProfile, count: usize) -> Vec<Vec<f64>> {
    let n = domain.dim();
    let primes = [2u64, 3, 5, 7, 11, 13, 17, 19];
    let mut out = Vec::new();
    let mut i = 1u64;
    while out.len() < count && i < 40 * count as u64 {
        let mut pt = vec![0.0; n];
        for j in 0..n {
            pt[j] = halton(i, primes[j % primes.len()]) * domain.bounding_radius()[j];
        }
        if domain.contains(&pt) {
            out.push(pt);
        }
        i += 1;
    }
    out
}

fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(v: &[i64]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    #[test]
    fn fourier_slice_examples() {
        // phi(z) = z1 on the polydisk: single slice f_(1,0) = r1
        let phi = |r: &[f64], th: &[f64]| Complex64::from_polar(r[0], th[0]);
        let v = fourier_slice(&phi, &mi(&[1, 0]), &[0.5, 0.3], &[16, 16]);
        assert!((v - Complex64::new(0.5, 0.0)).norm() < 1e-12, "got {v}");
        let off = fourier_slice(&phi, &mi(&[0, 0]), &[0.5, 0.3], &[16, 16]);
        assert!(off.norm() < 1e-12);

        // phi(z) = |z1|^2: radial, only the p = 0 slice
        let phi = |r: &[f64], _th: &[f64]| Complex64::new(r[0] * r[0], 0.0);
        let v = fourier_slice(&phi, &mi(&[0, 0]), &[0.5, 0.3], &[16, 16]);
        assert!((v - Complex64::new(0.25, 0.0)).norm() < 1e-12);

        // phi(z) = z1 + conj(z2) at p = (0,-1): coefficient r2
        let phi = |r: &[f64], th: &[f64]| {
            Complex64::from_polar(r[0], th[0]) + Complex64::from_polar(r[1], -th[1])
        };
        let v = fourier_slice(&phi, &mi(&[0, -1]), &[0.5, 0.3], &[16, 16]);
        assert!((v - Complex64::new(0.3, 0.0)).norm() < 1e-12, "got {v}");
    }

    #[test]
    fn slicing_qh_symbol_recovers_radial_part() {
        // slices of a pure quasi-homogeneous symbol: its own radial part at
        // p = twist, negligible elsewhere
        let sym = QhSymbol::new(
            RadialFn::real(|r: &[f64]| r[0] * r[0], "r1^2"),
            mi(&[2, -1]),
            1.0,
        );
        let s = sym.clone();
        let sliced = SlicedSymbol::new(
            move |r: &[f64], th: &[f64]| s.eval(r, th),
            1.0,
            mi(&[3, 3]),
            "qh",
        );
        let r = [0.7, 0.4];
        let at_twist = sliced.slice_value(&mi(&[2, -1]), &r);
        assert!((at_twist - Complex64::new(0.49, 0.0)).norm() < 1e-12);
        for p in sliced.slice_indices() {
            if p != mi(&[2, -1]) {
                assert!(
                    sliced.slice_value(&p, &r).norm() <= 1e-12,
                    "leak at {p}"
                );
            }
        }
    }

    #[test]
    fn reconstruction_of_band_limited_symbol() {
        // trig polynomial reconstructs to machine precision
        let phi = |r: &[f64], th: &[f64]| {
            Complex64::from_polar(r[0], th[0])
                + Complex64::from_polar(0.5 * r[0] * r[0], -2.0 * th[0])
                + Complex64::new(0.25, 0.0)
        };
        let sliced = SlicedSymbol::new(phi, 2.0, mi(&[2]), "band");
        let residual = sliced.truncation_residual(&[vec![0.3], vec![0.8]]);
        assert!(residual < 1e-10, "residual {residual}");
    }

    #[test]
    fn conjugate_symmetry_for_real_symbols() {
        let phi = |r: &[f64], th: &[f64]| {
            Complex64::new(r[0] * th[0].cos() + 0.3 * (2.0 * th[0]).sin(), 0.0)
        };
        let sliced = SlicedSymbol::new(phi, 2.0, mi(&[3]), "real");
        for p in 0..=3i64 {
            let plus = sliced.slice_value(&mi(&[p]), &[0.6]);
            let minus = sliced.slice_value(&mi(&[-p]), &[0.6]);
            assert!((plus.conj() - minus).norm() < 1e-12, "p = {p}");
        }
    }

    #[test]
    fn g_profile_examples() {
        let d = DomainProfile::polydisk(vec![1.0, 1.0]);
        // f = 1, no priors, twist (2,0): t -> t1
        let g = g_profile(&d, &[], &mi(&[2, 0]), &RadialFn::constant(Complex64::new(1.0, 0.0)), 1.0)
            .unwrap();
        assert_eq!(g.half_exponent(), &[2, 0]);
        let v = g.eval_t(&[0.3, 0.9]);
        assert!((v.re - 0.3).abs() < 1e-14);

        // f = 1, prior (1,0), twist (0,0): same exponent from the prefix
        let g = g_profile(&d, &[mi(&[1, 0])], &mi(&[0, 0]), &RadialFn::constant(Complex64::new(1.0, 0.0)), 1.0)
            .unwrap();
        assert_eq!(g.half_exponent(), &[2, 0]);

        // f(r) = r1, twist (1,0): sqrt(t1) * t1^(1/2) = t1
        let g = g_profile(
            &d,
            &[],
            &mi(&[1, 0]),
            &RadialFn::real(|r: &[f64]| r[0], "r1"),
            1.0,
        )
        .unwrap();
        let v = g.eval_t(&[0.49, 0.5]);
        assert!((v.re - 0.49).abs() < 1e-14, "got {v}");

        // negative exponent on an axis-touching domain errors
        let err = g_profile(&d, &[], &mi(&[-1, 0]), &RadialFn::constant(Complex64::new(1.0, 0.0)), 1.0)
            .unwrap_err();
        assert!(matches!(err, SymbolError::UnboundedProfile { axis: 0, .. }));
    }

    #[test]
    fn g_profile_linear_in_f() {
        let d = DomainProfile::polydisk(vec![1.0]);
        let f1 = RadialFn::real(|r: &[f64]| r[0], "r1");
        let f2 = RadialFn::constant(Complex64::new(1.0, 0.0));
        let combo = RadialFn::real(|r: &[f64]| 2.0 * r[0] + 3.0, "2r1+3");
        let twist = mi(&[2]);
        let g1 = g_profile(&d, &[], &twist, &f1, 1.0).unwrap();
        let g2 = g_profile(&d, &[], &twist, &f2, 1.0).unwrap();
        let gc = g_profile(&d, &[], &twist, &combo, 5.0).unwrap();
        for t in [[0.2], [0.5], [0.9]] {
            let lhs = gc.eval_t(&t);
            let rhs = g1.eval_t(&t) * 2.0 + g2.eval_t(&t) * 3.0;
            assert!((lhs - rhs).norm() < 1e-14);
        }
    }

    #[test]
    fn sup_bound_spot_check() {
        let d = DomainProfile::polydisk(vec![1.0]);
        let ok = QhSymbol::checked(
            RadialFn::real(|r: &[f64]| r[0], "r1"),
            mi(&[1]),
            1.0,
            &d,
        );
        assert!(ok.is_ok());
        let bad = QhSymbol::checked(
            RadialFn::real(|r: &[f64]| 10.0 * r[0], "10r1"),
            mi(&[1]),
            1.0,
            &d,
        );
        assert!(matches!(bad, Err(SymbolError::SupBoundViolated { .. })));
    }

    #[test]
    fn symbol_sum_slices() {
        let d2 = IndexBox::new(mi(&[0, 0]), mi(&[2, 2]));
        let mut sum = SymbolSum::new(d2);
        for (a, b) in [(0i64, 0i64), (1, 0), (1, 1)] {
            sum.insert(QhSymbol::new(
                RadialFn::constant(Complex64::new(1.0, 0.0)),
                mi(&[a, b]),
                1.0,
            ))
            .unwrap();
        }
        let top = sum.top_slice(0, 0).unwrap();
        let keys: Vec<_> = top.terms().map(|(k, _)| k.clone()).collect();
        assert_eq!(keys, vec![mi(&[1, 0]), mi(&[1, 1])]);
        let rest = sum.without_top_slice(0);
        let keys: Vec<_> = rest.terms().map(|(k, _)| k.clone()).collect();
        assert_eq!(keys, vec![mi(&[0, 0])]);
        // outside-box insertion is rejected
        let mut s2 = SymbolSum::new(IndexBox::new(mi(&[0, 0]), mi(&[1, 1])));
        assert!(matches!(
            s2.insert(QhSymbol::new(RadialFn::zero(), mi(&[3, 0]), 0.0)),
            Err(SymbolError::TermOutsideBox { .. })
        ));
    }
}
