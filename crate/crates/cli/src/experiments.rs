//! Experiment runners reproducing the proof mechanics at desk scale.
//!
//! Each runner consumes an [`ExperimentSpec`], produces a serializable
//! report, and is deterministic given the spec and seed.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rtz_core::domain::DomainProfile;
use rtz_core::fibers::satisfies_condition_i;
use rtz_core::lattice::{MultiIndex, TruncationLattice};
use rtz_core::moments::{MomentError, MomentTable, RadialIntegrand};
use rtz_core::symbolic::parse::parse_index_set;
use rtz_core::symbols::{QhSymbol, SliceBank, SlicedSymbol, SymbolSum};
use rtz_core::toeplitz::{
    default_zero_tolerance, product_apply, product_apply_matrix, product_apply_sliced,
    zero_product_verdict,
};

use crate::config::{ExperimentKind, ExperimentSpec};
use crate::report::*;

/// Failure modes mapped to process exit codes: config errors exit 1,
/// numeric failures exit 2.
#[derive(Debug)]
pub enum RunError {
    Config(String),
    Numeric(String),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "config error: {m}"),
            RunError::Numeric(m) => write!(f, "numeric failure: {m}"),
        }
    }
}

impl std::error::Error for RunError {}

impl RunError {
    pub fn config(e: impl std::fmt::Display) -> Self {
        RunError::Config(e.to_string())
    }
    pub fn numeric(e: impl std::fmt::Display) -> Self {
        RunError::Numeric(e.to_string())
    }
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 1,
            RunError::Numeric(_) => 2,
        }
    }
}

pub struct RunContext {
    pub domain: DomainProfile,
    pub table: MomentTable,
    pub lattice: TruncationLattice,
}

pub fn build_context(spec: &ExperimentSpec) -> Result<RunContext, RunError> {
    let dim = spec.dim();
    let domain = spec
        .domain
        .build(dim, Some(&spec.base_dir))
        .map_err(RunError::config)?;
    let table = match spec.quad_tol {
        Some(tol) => MomentTable::new(&domain, tol),
        None => MomentTable::with_default_tolerance(&domain),
    }
    .map_err(RunError::numeric)?;
    let lattice = TruncationLattice::new(MultiIndex::new(spec.kmax.clone()));
    Ok(RunContext {
        domain,
        table,
        lattice,
    })
}

fn build_qh_symbols(
    spec: &ExperimentSpec,
    domain: &DomainProfile,
) -> Result<Vec<QhSymbol>, RunError> {
    let dim = spec.dim();
    let mut out = Vec::new();
    for (idx, s) in spec.symbols.iter().enumerate() {
        if s.is_linf() {
            return Err(RunError::Config(format!(
                "symbol {} is an linf spec; this experiment needs quasi-homogeneous symbols",
                idx + 1
            )));
        }
        let sum = s.build_sum(dim, domain).map_err(RunError::config)?;
        if sum.term_count() > 1 {
            return Err(RunError::Config(format!(
                "symbol {} is a box sum; this experiment needs single quasi-homogeneous symbols",
                idx + 1
            )));
        }
        let first = sum.terms().next().map(|(_, qh)| qh.clone());
        out.push(first.unwrap_or_else(|| QhSymbol::zero(dim)));
    }
    if out.is_empty() {
        return Err(RunError::Config("no symbols configured".into()));
    }
    Ok(out)
}

/// Per-factor moments over the lattice above `k0`, their zero sets `Z_j`,
/// and the vanishing verdict.
pub fn run_proposition1(spec: &ExperimentSpec) -> Result<Proposition1Report, RunError> {
    let ctx = build_context(spec)?;
    let symbols = build_qh_symbols(spec, &ctx.domain)?;
    let dim = spec.dim();
    for s in &symbols {
        s.validate_on(&ctx.domain).map_err(RunError::config)?;
    }

    // k0: componentwise max(0, -prefix minima)
    let mut k0 = vec![0i64; dim];
    {
        let mut prefix = vec![0i64; dim];
        for s in &symbols {
            for (c, e) in prefix.iter_mut().zip(s.twist().entries()) {
                *c += e;
            }
            for (k, p) in k0.iter_mut().zip(&prefix) {
                *k = (*k).max(-*p);
            }
        }
    }
    let k0 = MultiIndex::new(k0);
    let sources: Vec<MultiIndex> = ctx.lattice.iter().filter(|k| k0.le_all(k)).collect();
    if sources.is_empty() {
        return Err(RunError::Config(format!(
            "lattice too small after k0 = {k0} clipping"
        )));
    }

    let vol = ctx.table.squared_volume();
    let rel_tol = spec.zero_tol.unwrap_or(1e-6);
    let mut factors = Vec::new();
    let mut moments: Vec<Vec<Complex64>> = Vec::new();
    for (j, symbol) in symbols.iter().enumerate() {
        let tol_j = rel_tol * symbol.sup_bound().max(f64::MIN_POSITIVE) * vol;
        let mut values = Vec::with_capacity(sources.len());
        let mut zero_set = Vec::new();
        for k in &sources {
            // folded exponent 2k + 2 sigma_(j-1) + kappa_j
            let mut exponent: Vec<i64> = k.entries().iter().map(|e| 2 * e).collect();
            for prior in &symbols[..j] {
                for (x, e) in exponent.iter_mut().zip(prior.twist().entries()) {
                    *x += 2 * e;
                }
            }
            for (x, e) in exponent.iter_mut().zip(symbol.twist().entries()) {
                *x += e;
            }
            let g = RadialIntegrand::new(
                symbol.radial().clone(),
                exponent,
                symbol.sup_bound(),
                ctx.table.domain(),
            );
            let v = ctx
                .table
                .weighted_moment(&g, &MultiIndex::zeros(dim))
                .map_err(RunError::numeric)?;
            if v.norm() <= tol_j {
                zero_set.push(indices(k));
            }
            values.push(v);
        }
        let identically_small = zero_set.len() == sources.len();
        let (hull, hull_contains, hull_ci) = match spec.hulls.get(&(j + 1)) {
            Some(expr) => {
                let set = parse_index_set(expr).map_err(RunError::config)?;
                if set.dim() != dim {
                    return Err(RunError::Config(format!(
                        "hull for factor {} has dimension {}, wanted {dim}",
                        j + 1,
                        set.dim()
                    )));
                }
                let contains = zero_set
                    .iter()
                    .all(|k: &Vec<i64>| set.contains(k.as_slice()));
                let verdict = satisfies_condition_i(&set).map_err(RunError::numeric)?;
                (Some(expr.clone()), Some(contains), Some(verdict.holds))
            }
            None => (None, None, None),
        };
        factors.push(FactorReport {
            index: j + 1,
            sup_bound: symbols[j].sup_bound(),
            moment_tolerance: tol_j,
            zero_set,
            identically_small,
            hull,
            hull_contains_zero_set: hull_contains,
            hull_condition_i: hull_ci,
        });
        moments.push(values);
    }

    let product_tol = rel_tol
        * symbols
            .iter()
            .map(|s| s.sup_bound().max(f64::MIN_POSITIVE) * vol)
            .product::<f64>();
    let mut product_zero_set = Vec::new();
    for (i, k) in sources.iter().enumerate() {
        let prod: Complex64 = moments.iter().map(|vs| vs[i]).product();
        if prod.norm() <= product_tol {
            product_zero_set.push(indices(k));
        }
    }

    let verdict = match factors.iter().find(|f| f.identically_small) {
        Some(f) => format!("factor {} = 0 below tolerance", f.index),
        None => "no zero factor".to_string(),
    };

    Ok(Proposition1Report {
        schema_version: REPORT_SCHEMA_VERSION,
        engine_version: engine_version(),
        kind: ExperimentKind::Proposition1.name().to_string(),
        domain: spec.domain_text.clone(),
        kmax: spec.kmax.clone(),
        seed: spec.seed,
        k0: indices(&k0),
        factors,
        product_zero_set,
        verdict,
    })
}

/// Sliced outermost symbol: per-slice verdicts, recombined verdict, and the
/// dichotomy observation.
pub fn run_corollary1(spec: &ExperimentSpec) -> Result<Corollary1Report, RunError> {
    let ctx = build_context(spec)?;
    let dim = spec.dim();
    if spec.symbols.is_empty() {
        return Err(RunError::Config("no symbols configured".into()));
    }
    let (head_spec, tail_specs) = spec.symbols.split_last().unwrap();
    if !head_spec.is_linf() {
        return Err(RunError::Config(
            "the sliced (linf) symbol must be the outermost, i.e. listed last".into(),
        ));
    }
    if tail_specs.iter().any(|s| s.is_linf()) {
        return Err(RunError::Config(
            "only one linf symbol is supported and it must be outermost".into(),
        ));
    }
    let head: SlicedSymbol = head_spec
        .build_sliced(dim, &ctx.domain, 2)
        .map_err(RunError::config)?;
    let mut tail: Vec<QhSymbol> = Vec::new();
    for s in tail_specs {
        let sum = s.build_sum(dim, &ctx.domain).map_err(RunError::config)?;
        if sum.term_count() > 1 {
            return Err(RunError::Config(
                "corollary1 tail symbols must be single quasi-homogeneous terms".into(),
            ));
        }
        let first = sum.terms().next().map(|(_, qh)| qh.clone());
        tail.push(first.unwrap_or_else(|| QhSymbol::zero(dim)));
    }

    let op = product_apply_sliced(&ctx.table, &head, &tail, &ctx.lattice)
        .map_err(RunError::numeric)?;
    let mut sups: Vec<f64> = tail.iter().map(|s| s.sup_bound()).collect();
    sups.push(head.sup_bound());
    let tol = spec.zero_tol.map_or_else(
        || default_zero_tolerance(&sups),
        |rel| rel * sups.iter().product::<f64>().max(f64::MIN_POSITIVE),
    );
    let verdict = zero_product_verdict(&op, &ctx.table, tol).map_err(RunError::numeric)?;
    let product =
        ProductCheckReport::from_product(spec.domain_text.clone(), spec.kmax.clone(), &verdict);

    // per-slice verdicts: the slice as the outermost quasi-homogeneous factor
    let bank = SliceBank::new(&head);
    let tail_sums: Vec<SymbolSum> = tail.iter().cloned().map(SymbolSum::from_qh).collect();
    let mut slices = Vec::new();
    for (pos, p) in bank.indices().iter().enumerate() {
        let slice_sym = QhSymbol::new(bank.slice_radial(pos), p.clone(), head.sup_bound());
        let mut factors = tail_sums.clone();
        factors.push(SymbolSum::from_qh(slice_sym));
        let op_p = product_apply(&ctx.table, &factors, &ctx.lattice).map_err(RunError::numeric)?;
        match zero_product_verdict(&op_p, &ctx.table, tol) {
            Ok(v) => slices.push(SliceVerdict {
                p: indices(p),
                zero_flag: v.zero_flag,
                norm_estimate: v.operator_norm_estimate,
            }),
            Err(rtz_core::toeplitz::ToeplitzError::LatticeTooSmall { .. }) => {
                slices.push(SliceVerdict {
                    p: indices(p),
                    zero_flag: true,
                    norm_estimate: 0.0,
                })
            }
            Err(e) => return Err(RunError::numeric(e)),
        }
    }

    // per tail factor verdicts
    let mut tail_zero_flags = Vec::new();
    for s in &tail {
        let op_t = product_apply(
            &ctx.table,
            &[SymbolSum::from_qh(s.clone())],
            &ctx.lattice,
        )
        .map_err(RunError::numeric)?;
        let t_tol = spec.zero_tol.unwrap_or(1e-6) * s.sup_bound().max(f64::MIN_POSITIVE);
        let flag = match zero_product_verdict(&op_t, &ctx.table, t_tol) {
            Ok(v) => v.zero_flag,
            Err(_) => true,
        };
        tail_zero_flags.push(flag);
    }

    let dichotomy_holds = if product.zero_flag {
        Some(tail_zero_flags.iter().any(|f| *f) || slices.iter().all(|s| s.zero_flag))
    } else {
        None
    };

    Ok(Corollary1Report {
        schema_version: REPORT_SCHEMA_VERSION,
        engine_version: engine_version(),
        kind: ExperimentKind::Corollary1.name().to_string(),
        domain: spec.domain_text.clone(),
        kmax: spec.kmax.clone(),
        seed: spec.seed,
        product,
        slices,
        tail_zero_flags,
        dichotomy_holds,
    })
}

/// Top-slice extraction along an axis: verify the maximal-power coefficient
/// identity, then iterate the shrink-and-retry bookkeeping.
pub fn run_theorem1_box_reduction(spec: &ExperimentSpec) -> Result<BoxReductionReport, RunError> {
    let ctx = build_context(spec)?;
    let dim = spec.dim();
    let axis = spec.axis;
    let mut sums: Vec<SymbolSum> = Vec::new();
    for (idx, s) in spec.symbols.iter().enumerate() {
        if s.is_linf() {
            return Err(RunError::Config(format!(
                "symbol {} is not a box sum (linf specs are not boxes)",
                idx + 1
            )));
        }
        sums.push(s.build_sum(dim, &ctx.domain).map_err(RunError::config)?);
    }
    if sums.is_empty() {
        return Err(RunError::Config("no symbols configured".into()));
    }

    // full product by matrix composition (the independent route), top-slice
    // product in factored form
    let op_full =
        product_apply_matrix(&ctx.table, &sums, &ctx.lattice).map_err(RunError::numeric)?;
    let mut tops = Vec::new();
    for s in &sums {
        if s.index_box().dimensions()[axis] <= 0 {
            return Err(RunError::Config(format!(
                "a symbol box {} is empty along axis {}",
                s.index_box(),
                axis + 1
            )));
        }
        tops.push(s.top_slice(axis, 0).map_err(RunError::config)?);
    }
    let op_top = product_apply(&ctx.table, &tops, &ctx.lattice).map_err(RunError::numeric)?;

    let max_axis_shift: i64 = sums
        .iter()
        .map(|s| s.index_box().upper().entry(axis) - 1)
        .sum();

    let mut compared = 0usize;
    let mut max_mismatch = 0.0f64;
    let mut worst: Vec<SliceMatchEntry> = Vec::new();
    for k in ctx.lattice.iter() {
        let mut targets: Vec<MultiIndex> = op_full
            .targets(&k)
            .iter()
            .chain(op_top.targets(&k).iter())
            .filter(|(t, _)| t.entry(axis) - k.entry(axis) == max_axis_shift)
            .map(|(t, _)| t.clone())
            .collect();
        targets.sort();
        targets.dedup();
        for t in targets {
            let wf = op_full.weight(&k, &t);
            let wt = op_top.weight(&k, &t);
            let mismatch = (wf - wt).norm();
            compared += 1;
            if mismatch > max_mismatch {
                max_mismatch = mismatch;
            }
            if worst.len() < 5 || mismatch > worst.last().map_or(0.0, entry_gap) {
                worst.push(SliceMatchEntry {
                    source: indices(&k),
                    target: indices(&t),
                    full_re: wf.re,
                    full_im: wf.im,
                    sliced_re: wt.re,
                    sliced_im: wt.im,
                });
                worst.sort_by(|a, b| entry_gap(b).partial_cmp(&entry_gap(a)).unwrap());
                worst.truncate(5);
            }
        }
    }

    // iterated reduction: while the sliced product is zero, shrink the box
    // of a zero slice and retry
    let sups: Vec<f64> = sums.iter().map(|s| s.sup_bound().max(1e-12)).collect();
    let tol = spec.zero_tol.map_or_else(
        || default_zero_tolerance(&sups),
        |rel| rel * sups.iter().product::<f64>().max(f64::MIN_POSITIVE),
    );
    let mut current = sums;
    let mut log = Vec::new();
    let mut final_state = String::new();
    let max_steps: i64 = current
        .iter()
        .map(|s| s.index_box().dimensions()[axis].max(1))
        .sum::<i64>()
        + 1;
    'reduce: for step in 1..=max_steps as usize {
        // a box emptied along the axis means its symbol was zero
        if let Some(j) = current
            .iter()
            .position(|s| s.index_box().dimensions()[axis] <= 0 || s.is_zero_symbol())
        {
            final_state = format!(
                "factor {} reduced to the zero symbol; product vanishes trivially",
                j + 1
            );
            log.push(ReductionEvent {
                step,
                action: final_state.clone(),
                boxes: current.iter().map(|s| s.index_box().to_string()).collect(),
            });
            break 'reduce;
        }
        let mut tops = Vec::new();
        for s in &current {
            tops.push(s.top_slice(axis, 0).map_err(RunError::config)?);
        }
        let op = product_apply(&ctx.table, &tops, &ctx.lattice).map_err(RunError::numeric)?;
        let verdict = match zero_product_verdict(&op, &ctx.table, tol) {
            Ok(v) => v,
            Err(rtz_core::toeplitz::ToeplitzError::LatticeTooSmall { k0 }) => {
                final_state = format!("lattice too small above k0 = {k0}; reduction stops");
                log.push(ReductionEvent {
                    step,
                    action: final_state.clone(),
                    boxes: current.iter().map(|s| s.index_box().to_string()).collect(),
                });
                break 'reduce;
            }
            Err(e) => return Err(RunError::numeric(e)),
        };
        if !verdict.zero_flag {
            final_state = "top-slice product nonzero; reduction stops".to_string();
            log.push(ReductionEvent {
                step,
                action: final_state.clone(),
                boxes: current.iter().map(|s| s.index_box().to_string()).collect(),
            });
            break 'reduce;
        }
        // find a zero slice to delete
        let mut zero_j = tops.iter().position(|t| t.is_zero_symbol());
        if zero_j.is_none() {
            for (j, t) in tops.iter().enumerate() {
                let single =
                    product_apply(&ctx.table, std::slice::from_ref(t), &ctx.lattice)
                        .map_err(RunError::numeric)?;
                if let Ok(v) = zero_product_verdict(&single, &ctx.table, tol) {
                    if v.zero_flag {
                        zero_j = Some(j);
                        break;
                    }
                }
            }
        }
        let Some(j) = zero_j else {
            final_state =
                "top-slice product below tolerance but no single zero slice identified".to_string();
            log.push(ReductionEvent {
                step,
                action: final_state.clone(),
                boxes: current.iter().map(|s| s.index_box().to_string()).collect(),
            });
            break 'reduce;
        };
        current[j] = current[j].without_top_slice(axis);
        log.push(ReductionEvent {
            step,
            action: format!("top slice of factor {} is zero; box shrinks along axis {}", j + 1, axis + 1),
            boxes: current.iter().map(|s| s.index_box().to_string()).collect(),
        });
    }
    if final_state.is_empty() {
        final_state = "reduction budget exhausted".to_string();
    }

    Ok(BoxReductionReport {
        schema_version: REPORT_SCHEMA_VERSION,
        engine_version: engine_version(),
        kind: ExperimentKind::Theorem1BoxReduction.name().to_string(),
        domain: spec.domain_text.clone(),
        kmax: spec.kmax.clone(),
        seed: spec.seed,
        axis: axis + 1,
        max_axis_shift,
        compared_entries: compared,
        max_mismatch,
        slice_match_ok: max_mismatch < 1e-8,
        worst_entries: worst,
        reduction_log: log,
        final_state,
    })
}

fn entry_gap(e: &SliceMatchEntry) -> f64 {
    let dr = e.full_re - e.sliced_re;
    let di = e.full_im - e.sliced_im;
    (dr * dr + di * di).sqrt()
}

/// Evaluate the moment transform on the concrete points of an index set and
/// on a probe grid in the product of right half-planes.
pub fn run_moment_vanishing(spec: &ExperimentSpec) -> Result<MomentVanishingReport, RunError> {
    let ctx = build_context(spec)?;
    let dim = spec.dim();
    let symbols = build_qh_symbols(spec, &ctx.domain)?;
    let symbol = &symbols[0];
    let g = symbol
        .g_profile(&ctx.domain, &[])
        .map_err(RunError::config)?;
    let set_text = spec
        .index_set
        .clone()
        .ok_or_else(|| RunError::Config("moment_vanishing needs [experiment] set = \"...\"".into()))?;
    let set = parse_index_set(&set_text).map_err(RunError::config)?;
    if set.dim() != dim {
        return Err(RunError::Config(format!(
            "index set dimension {} does not match lattice dimension {dim}",
            set.dim()
        )));
    }

    let mut bound_violations = 0usize;
    let mut max_on_set = 0.0f64;
    let mut points_in_set = 0usize;
    for k in ctx.lattice.iter() {
        if !set.contains(k.entries()) || k.entries().iter().any(|e| *e < 1) {
            continue;
        }
        points_in_set += 1;
        let z: Vec<Complex64> = k
            .entries()
            .iter()
            .map(|e| Complex64::new(*e as f64, 0.0))
            .collect();
        match ctx.table.moment_transform(&g, &z) {
            Ok(v) => max_on_set = max_on_set.max(v.norm()),
            Err(MomentError::BoundExceeded { .. }) => bound_violations += 1,
            Err(e) => return Err(RunError::numeric(e)),
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut max_on_probes = 0.0f64;
    let mut min_on_probes = f64::INFINITY;
    for _ in 0..spec.probes {
        let z: Vec<Complex64> = (0..dim)
            .map(|_| Complex64::new(rng.gen_range(0.25..3.25), rng.gen_range(-2.0..2.0)))
            .collect();
        match ctx.table.moment_transform(&g, &z) {
            Ok(v) => {
                max_on_probes = max_on_probes.max(v.norm());
                min_on_probes = min_on_probes.min(v.norm());
            }
            Err(MomentError::BoundExceeded { .. }) => bound_violations += 1,
            Err(e) => return Err(RunError::numeric(e)),
        }
    }
    if !min_on_probes.is_finite() {
        min_on_probes = 0.0;
    }

    let tol = spec.zero_tol.unwrap_or(1e-6)
        * symbol.sup_bound().max(f64::MIN_POSITIVE)
        * ctx.table.squared_volume();
    Ok(MomentVanishingReport {
        schema_version: REPORT_SCHEMA_VERSION,
        engine_version: engine_version(),
        kind: ExperimentKind::MomentVanishing.name().to_string(),
        domain: spec.domain_text.clone(),
        kmax: spec.kmax.clone(),
        seed: spec.seed,
        index_set: set_text,
        lattice_points_in_set: points_in_set,
        max_abs_on_set: max_on_set,
        max_abs_on_probes: max_on_probes,
        min_abs_on_probes: min_on_probes,
        bound_violations,
        vanishing_observed: points_in_set > 0 && max_on_set <= tol,
    })
}

/// Dispatch by kind, serialize, and optionally write the report file.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<(String, String), RunError> {
    let (json, summary) = match spec.kind {
        ExperimentKind::Proposition1 => {
            let r = run_proposition1(spec)?;
            let summary = format!("proposition1: {}", r.verdict);
            (to_json_string(&r), summary)
        }
        ExperimentKind::Corollary1 => {
            let r = run_corollary1(spec)?;
            let summary = format!(
                "corollary1: product zero_flag = {}, {} slices",
                r.product.zero_flag,
                r.slices.len()
            );
            (to_json_string(&r), summary)
        }
        ExperimentKind::Theorem1BoxReduction => {
            let r = run_theorem1_box_reduction(spec)?;
            let summary = format!(
                "theorem1_box_reduction: max mismatch {:.3e} over {} entries; {}",
                r.max_mismatch, r.compared_entries, r.final_state
            );
            (to_json_string(&r), summary)
        }
        ExperimentKind::MomentVanishing => {
            let r = run_moment_vanishing(spec)?;
            let summary = format!(
                "moment_vanishing: max |h| on set {:.3e}, on probes {:.3e}",
                r.max_abs_on_set, r.max_abs_on_probes
            );
            (to_json_string(&r), summary)
        }
    };
    if let Some(path) = &spec.out {
        std::fs::write(path, &json)
            .map_err(|e| RunError::Numeric(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok((json, summary))
}
