//! Monomial norms, Bergman coefficients, weighted moments, and the moment
//! transform on the squared radial region.
//!
//! All quantities reduce to integrals over `Omega~+`, the coordinatewise
//! square of the radial profile. The table rescales that region into the
//! unit box once (`t = c * x`) and maps results back through the scale
//! factors. Weighted moments and the transform substitute `x = u^2` again
//! so the integrand `f(sqrt t) t^(k + e/2)` becomes `f`-smooth with integer
//! powers of `u`; monomial norms integrate `x^alpha` directly. Closed forms
//! replace quadrature for the polydisk and ball kinds (the quadrature route
//! stays available as the cross-check oracle).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::RwLock;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{DomainError, DomainKind, DomainProfile};
use crate::lattice::MultiIndex;
use crate::quad::{integrate_region, Region};
use crate::symbols::RadialFn;

#[derive(Debug, Error)]
pub enum MomentError {
    #[error("infinite norm: monomial z^{alpha} is not square integrable on this domain")]
    InfiniteNorm { alpha: MultiIndex },
    #[error("non-finite integrand sample at t = {point:?}")]
    NonFiniteSample { point: Vec<f64> },
    #[error("moment transform requires Re z_j > 0, got {z}")]
    LeftHalfPlane { z: Complex64 },
    #[error("moment transform requires the squared region inside [0,1)^n (bound {bound})")]
    NotInUnitBox { bound: f64 },
    #[error("boundedness violated: |h(z)| = {value} exceeds sup|g| * vol = {limit}")]
    BoundExceeded { value: f64, limit: f64 },
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("cache io: {0}")]
    CacheIo(#[from] std::io::Error),
    #[error("cache format: {0}")]
    CacheFormat(String),
    #[error("cache manifest mismatch: {0}")]
    CacheMismatch(String),
}

/// Radial integrand `t -> f(sqrt t) * t^(half_exponent / 2)` on the squared
/// region, with the convention that it vanishes on coordinate hyperplanes.
#[derive(Clone, Debug)]
pub struct RadialIntegrand {
    radial: RadialFn,
    half_exponent: Vec<i64>,
    sup_bound: f64,
}

impl RadialIntegrand {
    /// `sup_radial` bounds `|f|` on the radial region; the stored bound also
    /// accounts for `t^(e/2)` when the squared region extends past 1.
    pub fn new(radial: RadialFn, half_exponent: Vec<i64>, sup_radial: f64, domain: &DomainProfile) -> Self {
        let mut amp = 1.0f64;
        for (e, b) in half_exponent.iter().zip(domain.bounding_radius()) {
            let b2 = (b * b).max(1.0);
            amp *= b2.powf(*e as f64 / 2.0);
        }
        Self {
            radial,
            half_exponent,
            sup_bound: sup_radial * amp,
        }
    }

    pub fn constant_one(dim: usize) -> Self {
        Self {
            radial: RadialFn::constant(Complex64::new(1.0, 0.0)),
            half_exponent: vec![0; dim],
            sup_bound: 1.0,
        }
    }

    pub fn half_exponent(&self) -> &[i64] {
        &self.half_exponent
    }

    pub fn sup_bound(&self) -> f64 {
        self.sup_bound
    }

    pub fn radial(&self) -> &RadialFn {
        &self.radial
    }

    /// Evaluate at a point of the squared region.
    pub fn eval_t(&self, t: &[f64]) -> Complex64 {
        if t.iter().any(|v| *v <= 0.0) {
            return Complex64::new(0.0, 0.0);
        }
        let mut r = vec![0.0; t.len()];
        for (rj, tj) in r.iter_mut().zip(t) {
            *rj = tj.sqrt();
        }
        let mut power = 1.0f64;
        for (rj, e) in r.iter().zip(&self.half_exponent) {
            power *= rj.powi(*e as i32);
        }
        self.radial.eval(&r) * power
    }

}

const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CacheManifest {
    schema_version: u32,
    domain: String,
    quad_tolerance: f64,
}

/// Cached monomial norms and Bergman coefficients for one domain at one
/// tolerance; also the entry point for weighted moments and the moment
/// transform on that domain.
pub struct MomentTable {
    original: DomainProfile,
    squared: DomainProfile,
    scale: Vec<f64>,
    sqrt_scale: Vec<f64>,
    quad_tolerance: f64,
    /// Region of the rescaled squared variables (`x`-space).
    t_region: Region,
    /// Region of the rescaled radial variables (`u`-space, `x = u^2`).
    r_region: Region,
    /// `vol(Omega~+)` in original units.
    volume: f64,
    norms: RwLock<BTreeMap<MultiIndex, f64>>,
}

impl MomentTable {
    /// Default tolerance: `1e-10` for built-in kinds, `1e-7` for generic or
    /// tabulated indicators (boundary-cell error dominates there).
    pub fn with_default_tolerance(domain: &DomainProfile) -> Result<Self, MomentError> {
        let tol = match domain.kind() {
            DomainKind::Generic => 1e-7,
            _ => 1e-10,
        };
        Self::new(domain, tol)
    }

    pub fn new(domain: &DomainProfile, quad_tolerance: f64) -> Result<Self, MomentError> {
        assert!(quad_tolerance > 0.0);
        let squared_raw = domain.squared_region();
        let (squared, scale) = squared_raw.rescale_into_unit_box()?;
        let t_region = Region::new(
            squared.indicator(),
            squared.bounding_radius().to_vec(),
            squared.is_monotone(),
        );
        let sq_ind = squared.indicator();
        let r_upper: Vec<f64> = squared
            .bounding_radius()
            .iter()
            .map(|b| b.sqrt())
            .collect();
        let r_region = Region::new(
            std::sync::Arc::new(move |u: &[f64]| {
                let mut x = vec![0.0; u.len()];
                for (xj, uj) in x.iter_mut().zip(u) {
                    *xj = uj * uj;
                }
                sq_ind(&x)
            }),
            r_upper,
            squared.is_monotone(),
        );
        let sqrt_scale = scale.iter().map(|c| c.sqrt()).collect();
        let mut table = Self {
            original: domain.clone(),
            squared,
            scale,
            sqrt_scale,
            quad_tolerance,
            t_region,
            r_region,
            volume: 0.0,
            norms: RwLock::new(BTreeMap::new()),
        };
        table.volume = table.volume_by_quadrature();
        Ok(table)
    }

    pub fn domain(&self) -> &DomainProfile {
        &self.original
    }

    /// The squared, rescaled profile the integrals run on.
    pub fn squared_domain(&self) -> &DomainProfile {
        &self.squared
    }

    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    pub fn quad_tolerance(&self) -> f64 {
        self.quad_tolerance
    }

    /// `vol(Omega~+)` in original units.
    pub fn squared_volume(&self) -> f64 {
        self.volume
    }

    pub fn dim(&self) -> usize {
        self.original.dim()
    }

    fn max_depth(&self) -> usize {
        if self.dim() <= 2 {
            40
        } else {
            28
        }
    }

    fn volume_by_quadrature(&self) -> f64 {
        let c_pow: f64 = self.scale.iter().product();
        let raw: f64 = integrate_region(
            &self.t_region,
            &|_: &[f64]| 1.0,
            self.quad_tolerance,
            self.max_depth(),
        );
        c_pow * raw
    }

    /// Whether `alpha` can have a finite norm on this domain: negative
    /// entries are only admitted along coordinates whose axis hyperplane the
    /// region stays away from.
    pub fn admits(&self, alpha: &MultiIndex) -> bool {
        alpha
            .entries()
            .iter()
            .zip(self.original.axis_touching())
            .all(|(a, touching)| *a >= 0 || !touching)
    }

    /// `||z^alpha||^2 = pi^n int_{Omega~+} t^alpha dV(t)`, by closed form
    /// when available, quadrature otherwise.
    pub fn monomial_norm(&self, alpha: &MultiIndex) -> Result<f64, MomentError> {
        assert_eq!(alpha.dim(), self.dim());
        if let Some(v) = self.norms.read().unwrap().get(alpha) {
            return finite_or_signal(*v, alpha);
        }
        let value = self.compute_norm(alpha);
        let stored = match value {
            Ok(v) => v,
            Err(MomentError::InfiniteNorm { .. }) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        self.norms.write().unwrap().insert(alpha.clone(), stored);
        finite_or_signal(stored, alpha)
    }

    fn compute_norm(&self, alpha: &MultiIndex) -> Result<f64, MomentError> {
        if !self.admits(alpha) {
            return Err(MomentError::InfiniteNorm {
                alpha: alpha.clone(),
            });
        }
        if let Some(v) = self.monomial_norm_closed_form(alpha) {
            return Ok(v);
        }
        self.monomial_norm_quadrature(alpha)
    }

    /// Closed form for the polydisk and ball kinds.
    pub fn monomial_norm_closed_form(&self, alpha: &MultiIndex) -> Option<f64> {
        match self.original.kind() {
            DomainKind::Polydisk { radii } => {
                let mut acc = 1.0f64;
                for (a, r) in alpha.entries().iter().zip(radii) {
                    if *a < 0 {
                        return None;
                    }
                    acc *= std::f64::consts::PI * r.powi(2 * (*a as i32) + 2)
                        / (*a as f64 + 1.0);
                }
                Some(acc)
            }
            DomainKind::Ball { radius } => {
                if alpha.entries().iter().any(|a| *a < 0) {
                    return None;
                }
                let n = self.dim() as i64;
                let total: i64 = alpha.entries().iter().sum();
                // pi^n rho^(2(|alpha|+n)) alpha! / (|alpha|+n)! in log space
                let mut log = (self.dim() as f64) * std::f64::consts::PI.ln()
                    + (2 * (total + n)) as f64 * radius.ln();
                for a in alpha.entries() {
                    log += ln_factorial(*a);
                }
                log -= ln_factorial(total + n);
                Some(log.exp())
            }
            _ => None,
        }
    }

    /// Quadrature route for the norm; the cross-check oracle for the closed
    /// forms.
    pub fn monomial_norm_quadrature(&self, alpha: &MultiIndex) -> Result<f64, MomentError> {
        if !self.admits(alpha) {
            return Err(MomentError::InfiniteNorm {
                alpha: alpha.clone(),
            });
        }
        let n = self.dim();
        let mut prefactor = std::f64::consts::PI.powi(n as i32);
        for (c, a) in self.scale.iter().zip(alpha.entries()) {
            prefactor *= c.powi(*a as i32 + 1);
        }
        let exponents: Vec<i32> = alpha.entries().iter().map(|a| *a as i32).collect();
        let integrand = move |x: &[f64]| -> f64 {
            let mut acc = 1.0f64;
            for (xj, e) in x.iter().zip(&exponents) {
                if *xj <= 0.0 {
                    return if *e == 0 { acc } else { 0.0 };
                }
                acc *= xj.powi(*e);
            }
            acc
        };
        let box_vol: f64 = self.t_region.upper.iter().product();
        let first: f64 = integrate_region(
            &self.t_region,
            &integrand,
            self.quad_tolerance * box_vol,
            self.max_depth(),
        );
        // second pass sharpens the absolute budget to the observed magnitude
        let target = self.quad_tolerance * first.abs();
        let value = if first.abs() > 0.0 && target < self.quad_tolerance * box_vol {
            integrate_region(&self.t_region, &integrand, target, self.max_depth())
        } else {
            first
        };
        if !value.is_finite() {
            return Err(MomentError::InfiniteNorm {
                alpha: alpha.clone(),
            });
        }
        Ok(prefactor * value)
    }

    /// `c_alpha`: 0 on the infinite-norm signal, `1 / ||z^alpha||^2`
    /// otherwise.
    pub fn bergman_coefficient(&self, alpha: &MultiIndex) -> f64 {
        match self.monomial_norm(alpha) {
            Ok(norm) => 1.0 / norm,
            Err(_) => 0.0,
        }
    }

    /// Precompute norms for a batch of indices (parallel fill behind a
    /// single writer).
    pub fn ensure_norms<I: IntoIterator<Item = MultiIndex>>(&self, indices: I) {
        let mut missing: Vec<MultiIndex> = {
            let cache = self.norms.read().unwrap();
            indices
                .into_iter()
                .filter(|a| !cache.contains_key(a))
                .collect()
        };
        missing.sort();
        missing.dedup();
        let computed: Vec<(MultiIndex, f64)> = missing
            .into_par_iter()
            .map(|alpha| {
                let v = self.compute_norm(&alpha).unwrap_or(f64::INFINITY);
                (alpha, v)
            })
            .collect();
        let mut cache = self.norms.write().unwrap();
        for (alpha, v) in computed {
            cache.insert(alpha, v);
        }
    }

    /// `int_{Omega~+} g(t) t^k dV(t)` with absolute error below
    /// `quad_tolerance * sup|g| * vol(Omega~+)`.
    ///
    /// Computed in radial coordinates where the integrand is
    /// `2^n f(sqrt(c) u) u^(2k + e + 1)`, smooth whenever `f` is.
    pub fn weighted_moment(
        &self,
        g: &RadialIntegrand,
        k: &MultiIndex,
    ) -> Result<Complex64, MomentError> {
        assert_eq!(k.dim(), self.dim());
        assert!(k.is_nonnegative(), "weighted moments need k in N^n");
        let n = self.dim();
        let mut prefactor = (2.0f64).powi(n as i32);
        let mut exps = Vec::with_capacity(n);
        for j in 0..n {
            let e = 2 * k.entry(j) + g.half_exponent()[j];
            // c^(k + e/2 + 1) with half powers through sqrt(c)
            prefactor *= self.sqrt_scale[j].powi((e + 2) as i32);
            exps.push((e + 1) as i32);
        }
        let abs_target = self.quad_tolerance * g.sup_bound() * self.volume.max(1e-12);
        let budget = abs_target / prefactor.abs().max(1e-12);
        assert!(n <= 8, "moment engine supports dimension <= 8");
        let sqrt_scale = self.sqrt_scale.clone();
        let bad = std::sync::Mutex::new(None::<Vec<f64>>);
        let gg = g.clone();
        let integrand = |u: &[f64]| -> Complex64 {
            let mut power = 1.0f64;
            let mut r = [0.0f64; 8];
            for j in 0..u.len() {
                if u[j] <= 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                power *= u[j].powi(exps[j]);
                r[j] = sqrt_scale[j] * u[j];
            }
            let r = &r[..u.len()];
            let v = gg.radial().eval(r) * power;
            if !v.re.is_finite() || !v.im.is_finite() {
                *bad.lock().unwrap() = Some(r.to_vec());
                return Complex64::new(0.0, 0.0);
            }
            v
        };
        let raw: Complex64 =
            integrate_region(&self.r_region, &integrand, budget, self.max_depth());
        if let Some(point) = bad.lock().unwrap().take() {
            return Err(MomentError::NonFiniteSample { point });
        }
        Ok(raw * prefactor)
    }

    /// `h(z) = int_{Omega~+} g(t) t^z dV(t)` for `Re z_j > 0`; bounded by
    /// `sup|g| * vol(Omega~+)` when the squared region sits inside the unit
    /// box (checked, as is the bound itself).
    pub fn moment_transform(
        &self,
        g: &RadialIntegrand,
        z: &[Complex64],
    ) -> Result<Complex64, MomentError> {
        assert_eq!(z.len(), self.dim());
        for zj in z {
            if zj.re <= 0.0 {
                return Err(MomentError::LeftHalfPlane { z: *zj });
            }
        }
        let squared_bound = self
            .original
            .bounding_radius()
            .iter()
            .map(|b| b * b)
            .fold(f64::MIN, f64::max);
        if squared_bound > 1.0 + 1e-9 {
            return Err(MomentError::NotInUnitBox {
                bound: squared_bound,
            });
        }
        let n = self.dim();
        let mut prefactor = Complex64::new((2.0f64).powi(n as i32), 0.0);
        let mut exps: Vec<Complex64> = Vec::with_capacity(n);
        for j in 0..n {
            let e = Complex64::new(g.half_exponent()[j] as f64, 0.0) + 2.0 * z[j];
            // c^(z + e/2 + 1) = sqrt(c)^(2z + e + 2)
            prefactor *= Complex64::new(self.sqrt_scale[j].ln(), 0.0)
                .scale_exp(e + Complex64::new(2.0, 0.0));
            exps.push(e + Complex64::new(1.0, 0.0));
        }
        let abs_target = self.quad_tolerance * g.sup_bound() * self.volume.max(1e-12);
        let budget = abs_target / prefactor.norm().max(1e-12);
        assert!(n <= 8, "moment engine supports dimension <= 8");
        let sqrt_scale = self.sqrt_scale.clone();
        let gg = g.clone();
        let integrand = |u: &[f64]| -> Complex64 {
            let mut acc = Complex64::new(1.0, 0.0);
            let mut r = [0.0f64; 8];
            for j in 0..u.len() {
                if u[j] <= 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                acc *= (exps[j] * u[j].ln()).exp();
                r[j] = sqrt_scale[j] * u[j];
            }
            gg.radial().eval(&r[..u.len()]) * acc
        };
        let raw: Complex64 =
            integrate_region(&self.r_region, &integrand, budget, self.max_depth());
        let value = raw * prefactor;
        let limit = g.sup_bound() * self.volume * (1.0 + 1e-9) + 1e-12;
        if value.norm() > limit {
            return Err(MomentError::BoundExceeded {
                value: value.norm(),
                limit,
            });
        }
        Ok(value)
    }

    /// Persist cached norms as CSV plus a JSON manifest recording domain and
    /// tolerance.
    pub fn save_cache(&self, csv_path: &Path) -> Result<(), MomentError> {
        let manifest = CacheManifest {
            schema_version: SCHEMA_VERSION,
            domain: self.original.label().to_string(),
            quad_tolerance: self.quad_tolerance,
        };
        let manifest_path = manifest_path_for(csv_path);
        std::fs::write(
            &manifest_path,
            serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
        )?;
        let mut out = String::from("alpha,norm,coeff\n");
        for (alpha, norm) in self.norms.read().unwrap().iter() {
            let coeff = if norm.is_finite() { 1.0 / norm } else { 0.0 };
            let alpha_text = alpha
                .entries()
                .iter()
                .map(|e| e.to_string())
                .collect::<Vec<_>>()
                .join(" ");
            let _ = writeln!(out, "{alpha_text},{},{}", fmt17(*norm), fmt17(coeff));
        }
        std::fs::write(csv_path, out)?;
        Ok(())
    }

    /// Load cached norms; the manifest must match this table's domain label
    /// and tolerance.
    pub fn load_cache(&self, csv_path: &Path) -> Result<usize, MomentError> {
        let manifest_path = manifest_path_for(csv_path);
        let manifest: CacheManifest =
            serde_json::from_str(&std::fs::read_to_string(&manifest_path)?)
                .map_err(|e| MomentError::CacheFormat(e.to_string()))?;
        if manifest.schema_version != SCHEMA_VERSION {
            return Err(MomentError::CacheMismatch(format!(
                "schema {} != {}",
                manifest.schema_version, SCHEMA_VERSION
            )));
        }
        if manifest.domain != self.original.label() {
            return Err(MomentError::CacheMismatch(format!(
                "domain '{}' != '{}'",
                manifest.domain,
                self.original.label()
            )));
        }
        if manifest.quad_tolerance != self.quad_tolerance {
            return Err(MomentError::CacheMismatch(format!(
                "tolerance {} != {}",
                manifest.quad_tolerance, self.quad_tolerance
            )));
        }
        let text = std::fs::read_to_string(csv_path)?;
        let mut loaded = 0usize;
        let mut cache = self.norms.write().unwrap();
        for (i, line) in text.lines().enumerate() {
            if i == 0 || line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 3 {
                return Err(MomentError::CacheFormat(format!("bad row: '{line}'")));
            }
            let alpha: Vec<i64> = parts[0]
                .split_whitespace()
                .map(|t| {
                    t.parse::<i64>()
                        .map_err(|e| MomentError::CacheFormat(format!("bad alpha '{t}': {e}")))
                })
                .collect::<Result<_, _>>()?;
            let norm: f64 = parts[1]
                .parse()
                .map_err(|e| MomentError::CacheFormat(format!("bad norm: {e}")))?;
            cache.insert(MultiIndex::new(alpha), norm);
            loaded += 1;
        }
        Ok(loaded)
    }

    /// Rows `(alpha, norm, coeff)` for all cached entries, in lexicographic
    /// order.
    pub fn cached_rows(&self) -> Vec<(MultiIndex, f64, f64)> {
        self.norms
            .read()
            .unwrap()
            .iter()
            .map(|(a, n)| {
                let c = if n.is_finite() { 1.0 / n } else { 0.0 };
                (a.clone(), *n, c)
            })
            .collect()
    }

    /// 1D adaptive integral over a box in `t`-space of the original squared
    /// region, for callers that need raw integrals (tests, experiments).
    pub fn raw_region_integral(&self, f: &(dyn Fn(&[f64]) -> f64 + Sync)) -> f64 {
        let c_pow: f64 = self.scale.iter().product();
        let scale = self.scale.clone();
        let g = |x: &[f64]| -> f64 {
            let t: Vec<f64> = x.iter().zip(&scale).map(|(xj, c)| xj * c).collect();
            f(&t)
        };
        c_pow
            * integrate_region(
                &self.t_region,
                &g,
                self.quad_tolerance,
                self.max_depth(),
            )
    }
}

trait ScaleExp {
    fn scale_exp(self, e: Complex64) -> Complex64;
}

impl ScaleExp for Complex64 {
    /// `exp(self * e)` — used for `c^e` with `self = ln c`.
    fn scale_exp(self, e: Complex64) -> Complex64 {
        (self * e).exp()
    }
}

fn finite_or_signal(v: f64, alpha: &MultiIndex) -> Result<f64, MomentError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(MomentError::InfiniteNorm {
            alpha: alpha.clone(),
        })
    }
}

fn manifest_path_for(csv_path: &Path) -> std::path::PathBuf {
    let mut p = csv_path.as_os_str().to_owned();
    p.push(".manifest.json");
    std::path::PathBuf::from(p)
}

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "inf".to_string()
    }
}

fn ln_factorial(x: i64) -> f64 {
    (1..=x).map(|i| (i as f64).ln()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DomainProfile;

    const PI: f64 = std::f64::consts::PI;

    fn mi(v: &[i64]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    #[test]
    fn polydisk_norm_closed_form_and_quadrature() {
        // unit polydisk n=2, alpha=(1,2) -> pi^2/6
        let d = DomainProfile::polydisk(vec![1.0, 1.0]);
        let t = MomentTable::new(&d, 1e-10).unwrap();
        let a = mi(&[1, 2]);
        let closed = t.monomial_norm_closed_form(&a).unwrap();
        assert!((closed - PI * PI / 6.0).abs() < 1e-14);
        let quad = t.monomial_norm_quadrature(&a).unwrap();
        assert!(
            (quad - closed).abs() / closed < 1e-10,
            "closed {closed} vs quad {quad}"
        );
    }

    #[test]
    fn ball_norm_closed_form_and_quadrature() {
        // unit ball n=2, alpha=(0,0) -> volume pi^2/2
        let d = DomainProfile::ball(1.0, 2);
        let t = MomentTable::new(&d, 1e-10).unwrap();
        let a = mi(&[0, 0]);
        let closed = t.monomial_norm_closed_form(&a).unwrap();
        assert!((closed - PI * PI / 2.0).abs() < 1e-12);
        let quad = t.monomial_norm_quadrature(&a).unwrap();
        assert!(
            (quad - closed).abs() / closed < 1e-8,
            "closed {closed} vs quad {quad}"
        );
        // alpha=(1,2): pi^2 * 1!2!/5! = pi^2/60
        let a = mi(&[1, 2]);
        let closed = t.monomial_norm_closed_form(&a).unwrap();
        assert!((closed - PI * PI / 60.0).abs() < 1e-12);
        let quad = t.monomial_norm_quadrature(&a).unwrap();
        assert!((quad - closed).abs() / closed < 1e-8);
    }

    #[test]
    fn disk_norms_match_pi_over_kplus1() {
        let d = DomainProfile::polydisk(vec![1.0]);
        let t = MomentTable::new(&d, 1e-10).unwrap();
        for k in 0..=10i64 {
            let norm = t.monomial_norm(&mi(&[k])).unwrap();
            let expect = PI / (k as f64 + 1.0);
            assert!((norm - expect).abs() / expect < 1e-10, "k={k}");
            let quad = t.monomial_norm_quadrature(&mi(&[k])).unwrap();
            assert!((quad - expect).abs() / expect < 1e-10, "quad k={k}");
        }
    }

    #[test]
    fn bergman_coefficients() {
        // unit disk alpha=3 -> 4/pi
        let d = DomainProfile::polydisk(vec![1.0]);
        let t = MomentTable::new(&d, 1e-10).unwrap();
        let c = t.bergman_coefficient(&mi(&[3]));
        assert!((c - 4.0 / PI).abs() < 1e-12);

        // unit polydisk n=2 alpha=(0,0) -> 1/pi^2
        let d = DomainProfile::polydisk(vec![1.0, 1.0]);
        let t = MomentTable::new(&d, 1e-10).unwrap();
        let c = t.bergman_coefficient(&mi(&[0, 0]));
        assert!((c - 1.0 / (PI * PI)).abs() < 1e-12);

        // axis-touching domain, negative index -> 0 by convention
        let c = t.bergman_coefficient(&mi(&[-1, 0]));
        assert_eq!(c, 0.0);
    }

    #[test]
    fn weighted_moment_examples() {
        // g = 1 on unit polydisk squared region, k=(2,0) -> 1/3
        let d = DomainProfile::polydisk(vec![1.0, 1.0]);
        let t = MomentTable::new(&d, 1e-10).unwrap();
        let g = RadialIntegrand::constant_one(2);
        let v = t.weighted_moment(&g, &mi(&[2, 0])).unwrap();
        assert!((v.re - 1.0 / 3.0).abs() < 1e-10, "got {v}");
        assert!(v.im.abs() < 1e-14);

        // g(t) = t^(1/2) on the unit interval, k=1 -> 2/5
        let d1 = DomainProfile::polydisk(vec![1.0]);
        let t1 = MomentTable::new(&d1, 1e-10).unwrap();
        let g = RadialIntegrand::new(
            RadialFn::constant(Complex64::new(1.0, 0.0)),
            vec![1],
            1.0,
            &d1,
        );
        let v = t1.weighted_moment(&g, &mi(&[1])).unwrap();
        assert!((v.re - 0.4).abs() < 1e-10, "got {v}");

        // zero integrand -> exactly zero
        let g0 = RadialIntegrand::new(RadialFn::zero(), vec![0], 0.0, &d1);
        let v = t1.weighted_moment(&g0, &mi(&[5])).unwrap();
        assert_eq!(v, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn weighted_moment_linearity() {
        let d = DomainProfile::polydisk(vec![1.0]);
        let t = MomentTable::new(&d, 1e-10).unwrap();
        let g1 = RadialIntegrand::new(
            RadialFn::new(|r: &[f64]| Complex64::new(r[0], 0.0), "r1"),
            vec![0],
            1.0,
            &d,
        );
        let g2 = RadialIntegrand::constant_one(1);
        let combo = RadialIntegrand::new(
            RadialFn::new(
                |r: &[f64]| Complex64::new(2.0 * r[0] + 3.0, 0.0),
                "2*r1+3",
            ),
            vec![0],
            5.0,
            &d,
        );
        let k = mi(&[4]);
        let v1 = t.weighted_moment(&g1, &k).unwrap();
        let v2 = t.weighted_moment(&g2, &k).unwrap();
        let vc = t.weighted_moment(&combo, &k).unwrap();
        assert!((vc - (v1 * 2.0 + v2 * 3.0)).norm() < 1e-10);
    }

    #[test]
    fn non_finite_sample_names_the_point() {
        let d = DomainProfile::polydisk(vec![1.0]);
        let t = MomentTable::new(&d, 1e-10).unwrap();
        let g = RadialIntegrand::new(
            RadialFn::new(
                |r: &[f64]| Complex64::new(if r[0] < 0.5 { f64::NAN } else { 1.0 }, 0.0),
                "nan below 1/2",
            ),
            vec![0],
            1.0,
            &d,
        );
        match t.weighted_moment(&g, &mi(&[0])) {
            Err(MomentError::NonFiniteSample { point }) => {
                assert!(point[0] < 0.5, "reported point {point:?}")
            }
            other => panic!("expected NonFiniteSample, got {other:?}"),
        }
    }

    #[test]
    fn moment_transform_examples() {
        let d = DomainProfile::polydisk(vec![1.0]);
        let t = MomentTable::new(&d, 1e-10).unwrap();
        let g = RadialIntegrand::constant_one(1);

        // integer z agrees with the weighted moment
        let v = t
            .moment_transform(&g, &[Complex64::new(2.0, 0.0)])
            .unwrap();
        assert!((v.re - 1.0 / 3.0).abs() < 1e-10, "got {v}");
        let w = t.weighted_moment(&g, &mi(&[2])).unwrap();
        assert!((v - w).norm() < 1e-10);

        // z = 1 + i: 1/(2+i) = 0.4 - 0.2i
        let v = t
            .moment_transform(&g, &[Complex64::new(1.0, 1.0)])
            .unwrap();
        assert!((v - Complex64::new(0.4, -0.2)).norm() < 1e-8, "got {v}");

        // left half plane rejected
        assert!(t
            .moment_transform(&g, &[Complex64::new(-0.5, 0.0)])
            .is_err());
    }

    #[test]
    fn norm_monotonicity_on_unit_polydisk() {
        let d = DomainProfile::polydisk(vec![1.0, 1.0]);
        let t = MomentTable::new(&d, 1e-10).unwrap();
        let mut prev = t.monomial_norm(&mi(&[0, 3])).unwrap();
        for a in 1..=8i64 {
            let next = t.monomial_norm(&mi(&[a, 3])).unwrap();
            assert!(next < prev, "norms must strictly decrease along chains");
            prev = next;
        }
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("norms.csv");
        let d = DomainProfile::polydisk(vec![1.0, 1.0]);
        let t = MomentTable::new(&d, 1e-10).unwrap();
        t.ensure_norms((0..4i64).flat_map(|a| (0..4i64).map(move |b| mi(&[a, b]))));
        t.save_cache(&path).unwrap();

        let t2 = MomentTable::new(&d, 1e-10).unwrap();
        let loaded = t2.load_cache(&path).unwrap();
        assert_eq!(loaded, 16);
        // bit-identical values through the 17-digit round trip
        assert_eq!(
            t2.monomial_norm(&mi(&[2, 3])).unwrap(),
            t.monomial_norm(&mi(&[2, 3])).unwrap()
        );

        // manifest mismatch rejected
        let d3 = DomainProfile::polydisk(vec![2.0, 1.0]);
        let t3 = MomentTable::new(&d3, 1e-10).unwrap();
        assert!(matches!(
            t3.load_cache(&path),
            Err(MomentError::CacheMismatch(_))
        ));
    }

    #[test]
    fn deterministic_tables() {
        let d = DomainProfile::ball(1.0, 2);
        let t1 = MomentTable::new(&d, 1e-10).unwrap();
        let t2 = MomentTable::new(&d, 1e-10).unwrap();
        for a in 0..5i64 {
            for b in 0..5i64 {
                let x = t1.monomial_norm(&mi(&[a, b])).unwrap();
                let y = t2.monomial_norm(&mi(&[a, b])).unwrap();
                assert_eq!(x.to_bits(), y.to_bits(), "bitwise determinism");
            }
        }
    }
}
