//! Toeplitz operators on the truncated monomial lattice and their finite
//! products.
//!
//! A quasi-homogeneous symbol acts on monomials as a weighted shift:
//! `T_phi z^k = pi^n c_{k+kappa} z^{k+kappa} int f(sqrt t) t^(k+kappa/2) dV`.
//! Products of sums are composed in factored form: each twist tuple
//! contributes the product of its per-factor moments and Bergman
//! coefficients at the accumulated target, which is exact per monomial and
//! free of lattice-boundary truncation. Truncated matrix multiplication is
//! kept as a cross-check mode. Lattice powers are folded into the moment
//! exponents, so integrands stay bounded whenever every intermediate index
//! is admissible; tuples whose intermediates leave `N^n` or hit `c = 0`
//! contribute exactly zero.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::lattice::{MultiIndex, TruncationLattice};
use crate::moments::{MomentError, MomentTable, RadialIntegrand};
use crate::symbols::{QhSymbol, SlicedSymbol, SymbolError, SymbolSum};

#[derive(Debug, Error)]
pub enum ToeplitzError {
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error(transparent)]
    Moment(#[from] MomentError),
    #[error("lattice too small for twists: nothing at or above k0 = {k0}")]
    LatticeTooSmall { k0: MultiIndex },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Sparse action on the monomial lattice: each source index maps to a
/// finite list of `(target, weight)` pairs.
#[derive(Clone, Debug)]
pub struct LatticeOperator {
    input_lattice: TruncationLattice,
    output_lattice: TruncationLattice,
    action: BTreeMap<MultiIndex, Vec<(MultiIndex, Complex64)>>,
    k0: MultiIndex,
    skipped_tuples: usize,
    slice_residual: Option<f64>,
}

impl LatticeOperator {
    pub fn input_lattice(&self) -> &TruncationLattice {
        &self.input_lattice
    }

    pub fn output_lattice(&self) -> &TruncationLattice {
        &self.output_lattice
    }

    /// Smallest starting index with all intermediate targets in `N^n`.
    pub fn k0(&self) -> &MultiIndex {
        &self.k0
    }

    pub fn skipped_tuples(&self) -> usize {
        self.skipped_tuples
    }

    pub fn slice_residual(&self) -> Option<f64> {
        self.slice_residual
    }

    /// Targets of `z^k` with their weights (empty when annihilated).
    pub fn targets(&self, k: &MultiIndex) -> &[(MultiIndex, Complex64)] {
        self.action.get(k).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn weight(&self, k: &MultiIndex, target: &MultiIndex) -> Complex64 {
        self.targets(k)
            .iter()
            .find(|(t, _)| t == target)
            .map(|(_, w)| *w)
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn sources(&self) -> impl Iterator<Item = &MultiIndex> {
        self.action.keys()
    }

    /// Entry with the largest weight magnitude.
    pub fn max_weight_entry(&self) -> Option<(MultiIndex, MultiIndex, Complex64)> {
        let mut best: Option<(MultiIndex, MultiIndex, Complex64)> = None;
        for (k, targets) in &self.action {
            for (t, w) in targets {
                if best.as_ref().is_none_or(|(_, _, bw)| w.norm() > bw.norm()) {
                    best = Some((k.clone(), t.clone(), *w));
                }
            }
        }
        best
    }

    /// Sparse triplets `(source, target, weight)` in deterministic order.
    pub fn triplets(&self) -> Vec<(MultiIndex, MultiIndex, Complex64)> {
        let mut out = Vec::new();
        for (k, targets) in &self.action {
            for (t, w) in targets {
                out.push((k.clone(), t.clone(), *w));
            }
        }
        out
    }

    /// CSV export: `source,target,re,im` with tuples space-separated.
    pub fn to_matrix_csv(&self) -> String {
        let mut out = String::from("source,target,re,im\n");
        for (k, t, w) in self.triplets() {
            let ks = join_entries(&k);
            let ts = join_entries(&t);
            out.push_str(&format!(
                "{ks},{ts},{},{}\n",
                crate::moments::fmt17(w.re),
                crate::moments::fmt17(w.im)
            ));
        }
        out
    }

    fn insert(&mut self, k: MultiIndex, target: MultiIndex, w: Complex64) {
        let entry = self.action.entry(k).or_default();
        match entry.iter_mut().find(|(t, _)| *t == target) {
            Some((_, old)) => *old += w,
            None => {
                entry.push((target, w));
                entry.sort_by(|(a, _), (b, _)| a.cmp(b));
            }
        }
    }

    fn prune_zeros(&mut self) {
        for targets in self.action.values_mut() {
            targets.retain(|(_, w)| w.norm() != 0.0);
        }
        self.action.retain(|_, v| !v.is_empty());
    }
}

fn join_entries(k: &MultiIndex) -> String {
    k.entries()
        .iter()
        .map(|e| e.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Numerical verdict on a composed operator.
#[derive(Clone, Debug)]
pub struct ProductReport {
    /// `max_k ||op z^k|| / ||z^k||` over the verdict lattice.
    pub operator_norm_estimate: f64,
    pub max_abs_weight: f64,
    pub zero_flag: bool,
    /// `(source, target, weight)` of the largest weight.
    pub witness: Option<(MultiIndex, MultiIndex, Complex64)>,
    pub k0_used: MultiIndex,
    pub zero_tolerance: f64,
    pub skipped_tuples: usize,
    pub slice_residual: Option<f64>,
}

/// The default verdict tolerance: `1e-6` relative to the product of the
/// symbols' sup bounds.
pub fn default_zero_tolerance(sup_bounds: &[f64]) -> f64 {
    1e-6 * sup_bounds.iter().product::<f64>().max(f64::MIN_POSITIVE)
}

/// Apply one quasi-homogeneous symbol to one monomial.
///
/// Targets outside `N^n` (on domains admitting only `N^n`) or with
/// vanishing Bergman coefficient get weight exactly zero.
pub fn toeplitz_apply(
    table: &MomentTable,
    symbol: &QhSymbol,
    k: &MultiIndex,
) -> Result<(MultiIndex, Complex64), ToeplitzError> {
    if symbol.dim() != table.dim() || k.dim() != table.dim() {
        return Err(ToeplitzError::DimensionMismatch(format!(
            "symbol dim {} / index dim {} vs domain dim {}",
            symbol.dim(),
            k.dim(),
            table.dim()
        )));
    }
    assert!(k.is_nonnegative(), "source index must lie in N^n");
    let target = k.add(symbol.twist());
    if !table.admits(&target) {
        return Ok((target, Complex64::new(0.0, 0.0)));
    }
    let c = table.bergman_coefficient(&target);
    if c == 0.0 {
        return Ok((target, Complex64::new(0.0, 0.0)));
    }
    // fold the lattice power into the exponent: the combined exponent
    // (2k + twist)/2 is nonnegative whenever the target is admissible, so
    // the integrand stays bounded.
    let g = RadialIntegrand::new(
        symbol.radial().clone(),
        symbol.twist().entries().to_vec(),
        symbol.sup_bound(),
        table.domain(),
    );
    let moment = table.weighted_moment(&g, k)?;
    let pi_n = std::f64::consts::PI.powi(table.dim() as i32);
    Ok((target, moment * (pi_n * c)))
}

/// Moment cache key: factor position, twist, and folded exponent.
type MomentKey = (usize, MultiIndex, Vec<i64>);

struct TupleContribution {
    source: MultiIndex,
    target: MultiIndex,
    moment_keys: Vec<MomentKey>,
}

/// Compose `T_(phi_m) ... T_(phi_1)` on the lattice in factored form.
///
/// `symbols` is ordered with `phi_1` (applied first) at index 0. The output
/// lattice is padded so every admissible intermediate index is represented.
pub fn product_apply(
    table: &MomentTable,
    symbols: &[SymbolSum],
    lattice: &TruncationLattice,
) -> Result<LatticeOperator, ToeplitzError> {
    let dim = table.dim();
    for s in symbols {
        if s.dim() != dim {
            return Err(ToeplitzError::DimensionMismatch(format!(
                "symbol dim {} vs domain dim {dim}",
                s.dim()
            )));
        }
        s.validate_on(table.domain())?;
    }
    if lattice.dim() != dim {
        return Err(ToeplitzError::DimensionMismatch(format!(
            "lattice dim {} vs domain dim {dim}",
            lattice.dim()
        )));
    }

    let k0 = product_k0(symbols, dim);
    let output_lattice = lattice.shifted(&max_twist_steps(symbols, dim));

    // enumerate tuple contributions per source index
    let sources: Vec<MultiIndex> = lattice.iter().collect();
    let mut contributions: Vec<TupleContribution> = Vec::new();
    for k in &sources {
        let mut stack: Vec<(usize, MultiIndex, Vec<MomentKey>)> =
            vec![(0, k.clone(), Vec::new())];
        while let Some((j, at, keys)) = stack.pop() {
            if j == symbols.len() {
                contributions.push(TupleContribution {
                    source: k.clone(),
                    target: at.clone(),
                    moment_keys: keys,
                });
                continue;
            }
            for (twist, _) in symbols[j].terms() {
                let next = at.add(twist);
                if !table.admits(&next) {
                    continue;
                }
                // folded exponent: 2*at + twist (= at + next >= 0)
                let exponent: Vec<i64> = at
                    .entries()
                    .iter()
                    .zip(next.entries())
                    .map(|(a, b)| a + b)
                    .collect();
                let mut keys2 = keys.clone();
                keys2.push((j, twist.clone(), exponent));
                stack.push((j + 1, next, keys2));
            }
        }
    }

    // precompute norms for coefficients
    let mut needed_norms: BTreeSet<MultiIndex> = BTreeSet::new();
    for c in &contributions {
        let mut at = c.source.clone();
        for (_, twist, _) in &c.moment_keys {
            at = at.add(twist);
            needed_norms.insert(at.clone());
        }
    }
    table.ensure_norms(needed_norms);

    // precompute distinct moments in parallel, deterministic order
    let mut keys: BTreeSet<MomentKey> = BTreeSet::new();
    for c in &contributions {
        keys.extend(c.moment_keys.iter().cloned());
    }
    let keys: Vec<MomentKey> = keys.into_iter().collect();
    let moment_values: Vec<Complex64> = keys
        .par_iter()
        .map(|(j, twist, exponent)| {
            let symbol = symbols[*j]
                .terms()
                .find(|(k, _)| *k == twist)
                .map(|(_, s)| s)
                .expect("twist key enumerated from terms");
            let g = RadialIntegrand::new(
                symbol.radial().clone(),
                exponent.clone(),
                symbol.sup_bound(),
                table.domain(),
            );
            table
                .weighted_moment(&g, &MultiIndex::zeros(dim))
                .expect("folded product integrand is bounded")
        })
        .collect();
    let moment_map: BTreeMap<&MomentKey, Complex64> =
        keys.iter().zip(moment_values).collect();

    // assemble weights
    let pi_n = std::f64::consts::PI.powi(dim as i32);
    let mut op = LatticeOperator {
        input_lattice: lattice.clone(),
        output_lattice,
        action: sources
            .iter()
            .map(|k| (k.clone(), Vec::new()))
            .collect(),
        k0,
        skipped_tuples: 0,
        slice_residual: None,
    };
    'tuple: for c in &contributions {
        let mut weight = Complex64::new(1.0, 0.0);
        let mut at = c.source.clone();
        for key in &c.moment_keys {
            at = at.add(&key.1);
            let coeff = table.bergman_coefficient(&at);
            if coeff == 0.0 {
                continue 'tuple;
            }
            weight *= moment_map[key] * (pi_n * coeff);
        }
        op.insert(c.source.clone(), c.target.clone(), weight);
    }
    op.prune_zeros();
    Ok(op)
}

/// Cross-check mode: compose by truncated matrix multiplication on the
/// padded lattice. Agrees with the factored form away from genuine
/// truncation (the padding covers every admissible intermediate).
pub fn product_apply_matrix(
    table: &MomentTable,
    symbols: &[SymbolSum],
    lattice: &TruncationLattice,
) -> Result<LatticeOperator, ToeplitzError> {
    let dim = table.dim();
    let padded = lattice.shifted(&max_twist_steps(symbols, dim));
    // current: map source -> list of (index, amplitude)
    let mut current: BTreeMap<MultiIndex, Vec<(MultiIndex, Complex64)>> = lattice
        .iter()
        .map(|k| (k.clone(), vec![(k, Complex64::new(1.0, 0.0))]))
        .collect();
    for symbol in symbols {
        let mut next: BTreeMap<MultiIndex, Vec<(MultiIndex, Complex64)>> = BTreeMap::new();
        for (source, comps) in &current {
            let mut acc: BTreeMap<MultiIndex, Complex64> = BTreeMap::new();
            for (idx, amp) in comps {
                for (_, term) in symbol.terms() {
                    let (target, w) = toeplitz_apply(table, term, idx)?;
                    if w.norm() == 0.0 {
                        continue;
                    }
                    if !padded.contains(&target) {
                        // truncation: outside the padded lattice
                        continue;
                    }
                    *acc.entry(target).or_insert(Complex64::new(0.0, 0.0)) += amp * w;
                }
            }
            next.insert(
                source.clone(),
                acc.into_iter().collect::<Vec<_>>(),
            );
        }
        current = next;
    }
    let mut op = LatticeOperator {
        input_lattice: lattice.clone(),
        output_lattice: padded,
        action: current,
        k0: product_k0(symbols, dim),
        skipped_tuples: 0,
        slice_residual: None,
    };
    op.prune_zeros();
    Ok(op)
}

/// Compose `T_head T_(phi_(m-1)) ... T_(phi_1)` where the outermost factor
/// is a sliced bounded symbol and the tail is quasi-homogeneous.
pub fn product_apply_sliced(
    table: &MomentTable,
    head: &SlicedSymbol,
    tail: &[QhSymbol],
    lattice: &TruncationLattice,
) -> Result<LatticeOperator, ToeplitzError> {
    let dim = table.dim();
    if head.dim() != dim {
        return Err(ToeplitzError::DimensionMismatch(format!(
            "sliced symbol dim {} vs domain dim {dim}",
            head.dim()
        )));
    }
    for s in tail {
        if s.dim() != dim {
            return Err(ToeplitzError::DimensionMismatch(format!(
                "tail symbol dim {} vs domain dim {dim}",
                s.dim()
            )));
        }
        s.validate_on(table.domain())?;
    }

    // k0 over tail prefixes and the most negative slice
    let mut k0 = MultiIndex::zeros(dim);
    {
        let mut prefix = MultiIndex::zeros(dim);
        for s in tail {
            prefix = prefix.add(s.twist());
            k0 = k0.max_with(&prefix.clamp_deficit());
        }
        let lowest = prefix.sub(head.p_max());
        k0 = k0.max_with(&lowest.clamp_deficit());
    }

    let mut steps = max_twist_steps_qh(tail, dim);
    steps.push(head.p_max().clone());
    let output_lattice = lattice.shifted(&steps);

    let bank = crate::symbols::SliceBank::new(head);
    let slice_radials: Vec<(MultiIndex, crate::symbols::RadialFn)> = bank
        .indices()
        .iter()
        .enumerate()
        .map(|(pos, p)| (p.clone(), bank.slice_radial(pos)))
        .collect();

    let pi_n = std::f64::consts::PI.powi(dim as i32);
    let sources: Vec<MultiIndex> = lattice.iter().collect();
    let rows: Vec<(MultiIndex, Vec<(MultiIndex, Complex64)>)> = sources
        .par_iter()
        .map(|k| {
            let mut row: Vec<(MultiIndex, Complex64)> = Vec::new();
            // tail factor
            let mut tail_weight = Complex64::new(1.0, 0.0);
            let mut at = k.clone();
            let mut dead = false;
            for s in tail {
                let next = at.add(s.twist());
                if !table.admits(&next) {
                    dead = true;
                    break;
                }
                let c = table.bergman_coefficient(&next);
                if c == 0.0 {
                    dead = true;
                    break;
                }
                let exponent: Vec<i64> = at
                    .entries()
                    .iter()
                    .zip(next.entries())
                    .map(|(a, b)| a + b)
                    .collect();
                let g = RadialIntegrand::new(
                    s.radial().clone(),
                    exponent,
                    s.sup_bound(),
                    table.domain(),
                );
                let m = table
                    .weighted_moment(&g, &MultiIndex::zeros(dim))
                    .expect("folded tail integrand is bounded");
                tail_weight *= m * (pi_n * c);
                at = next;
            }
            if dead || tail_weight.norm() == 0.0 {
                return (k.clone(), row);
            }
            // head slices
            for (p, radial) in &slice_radials {
                let target = at.add(p);
                if !table.admits(&target) {
                    continue;
                }
                let c = table.bergman_coefficient(&target);
                if c == 0.0 {
                    continue;
                }
                let exponent: Vec<i64> = at
                    .entries()
                    .iter()
                    .zip(target.entries())
                    .map(|(a, b)| a + b)
                    .collect();
                let g = RadialIntegrand::new(
                    radial.clone(),
                    exponent,
                    head.sup_bound(),
                    table.domain(),
                );
                let m = table
                    .weighted_moment(&g, &MultiIndex::zeros(dim))
                    .expect("folded head integrand is bounded");
                let w = tail_weight * m * (pi_n * c);
                if w.norm() != 0.0 {
                    row.push((target, w));
                }
            }
            row.sort_by(|(a, _), (b, _)| a.cmp(b));
            (k.clone(), row)
        })
        .collect();

    let residual_radii = crate::symbols::sample_points(table.domain(), 8);
    let slice_residual = Some(head.truncation_residual(&residual_radii));
    Ok(LatticeOperator {
        input_lattice: lattice.clone(),
        output_lattice,
        action: rows.into_iter().collect(),
        k0,
        skipped_tuples: 0,
        slice_residual,
    })
}

/// Numerical zero-product verdict, restricted to `k >= k0` where all
/// intermediate coefficients are positive.
pub fn zero_product_verdict(
    op: &LatticeOperator,
    table: &MomentTable,
    zero_tolerance: f64,
) -> Result<ProductReport, ToeplitzError> {
    let verdict_sources: Vec<MultiIndex> = op
        .input_lattice
        .iter()
        .filter(|k| op.k0().le_all(k))
        .collect();
    if verdict_sources.is_empty() {
        return Err(ToeplitzError::LatticeTooSmall {
            k0: op.k0().clone(),
        });
    }
    let mut needed: BTreeSet<MultiIndex> = verdict_sources.iter().cloned().collect();
    for k in &verdict_sources {
        for (t, _) in op.targets(k) {
            needed.insert(t.clone());
        }
    }
    table.ensure_norms(needed);

    let mut norm_estimate = 0.0f64;
    let mut max_abs_weight = 0.0f64;
    let mut witness: Option<(MultiIndex, MultiIndex, Complex64)> = None;
    for k in &verdict_sources {
        let source_norm = table
            .monomial_norm(k)
            .expect("verdict sources lie in N^n")
            .sqrt();
        let mut out_sq = 0.0f64;
        for (t, w) in op.targets(k) {
            let t_norm = table.monomial_norm(t).expect("targets admissible");
            out_sq += w.norm_sqr() * t_norm;
            if w.norm() > max_abs_weight {
                max_abs_weight = w.norm();
                witness = Some((k.clone(), t.clone(), *w));
            }
        }
        norm_estimate = norm_estimate.max(out_sq.sqrt() / source_norm);
    }
    Ok(ProductReport {
        operator_norm_estimate: norm_estimate,
        max_abs_weight,
        zero_flag: norm_estimate < zero_tolerance,
        witness,
        k0_used: op.k0().clone(),
        zero_tolerance,
        skipped_tuples: op.skipped_tuples,
        slice_residual: op.slice_residual,
    })
}

/// Smallest `k0` with every prefix target in `N^n` for all twist tuples:
/// componentwise `max(0, -min_j prefix_j)` with the minimum taken over
/// twist choices (separable per coordinate).
fn product_k0(symbols: &[SymbolSum], dim: usize) -> MultiIndex {
    let mut k0 = vec![0i64; dim];
    let mut running_min = vec![0i64; dim];
    for s in symbols {
        let mut step_min = vec![i64::MAX; dim];
        for (twist, _) in s.terms() {
            for (m, e) in step_min.iter_mut().zip(twist.entries()) {
                *m = (*m).min(*e);
            }
        }
        if s.term_count() == 0 {
            return MultiIndex::zeros(dim);
        }
        for c in 0..dim {
            running_min[c] += step_min[c];
            k0[c] = k0[c].max(-running_min[c]).max(0);
        }
    }
    MultiIndex::new(k0)
}

/// Per-factor componentwise maximal twists, for lattice padding.
fn max_twist_steps(symbols: &[SymbolSum], dim: usize) -> Vec<MultiIndex> {
    symbols
        .iter()
        .filter(|s| s.term_count() > 0)
        .map(|s| {
            let mut mx = vec![i64::MIN; dim];
            for (twist, _) in s.terms() {
                for (m, e) in mx.iter_mut().zip(twist.entries()) {
                    *m = (*m).max(*e);
                }
            }
            MultiIndex::new(mx)
        })
        .collect()
}

fn max_twist_steps_qh(symbols: &[QhSymbol], dim: usize) -> Vec<MultiIndex> {
    let _ = dim;
    symbols.iter().map(|s| s.twist().clone()).collect()
}
