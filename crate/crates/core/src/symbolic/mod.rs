//! Symbolic descriptions of subsets of `N_0^n`.
//!
//! Divergence of `sum 1/k` over a set is not decidable from any finite
//! enumeration, so index sets are kept symbolic: finite unions of product
//! terms whose per-coordinate factors come from a fixed alphabet of
//! generators with a declared divergence verdict each. The deletion process
//! needs intersections and differences of these factors, so a coordinate
//! factor is internally an intersection of generators minus a list of
//! generators ([`CoordSet`]); membership stays exactly decidable and the
//! divergence verdict is computed by residue arithmetic on the arithmetic
//! progressions involved.

use std::fmt;

use thiserror::Error;

pub mod parse;

/// Elements larger than this are not probed when certifying that a sparse
/// coordinate set is nonempty. Exact for everything the tests touch; sets
/// whose smallest element exceeds the cap are treated as empty.
pub const ENUM_CAP: u64 = 1_000_000_000;

/// Hard ceiling on moduli in residue arithmetic and on product-term counts.
pub const DEFAULT_TERM_BUDGET: usize = 4096;
const LCM_CAP: u128 = 1_000_000_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SymbolicError {
    #[error("decomposition exceeds symbolic budget ({terms} > {budget} product terms)")]
    BudgetExceeded { terms: usize, budget: usize },
    #[error("residue modulus overflow while intersecting arithmetic progressions")]
    ModulusOverflow,
}

/// One-dimensional generator classes.
///
/// The divergence column of the class table is an axiom of the module:
/// `FullN` and `ArithmeticProgression` have divergent harmonic sums, the
/// other three convergent ones.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Generator {
    /// Explicit finite set (sorted, deduplicated); may contain 0.
    FiniteSet(Vec<u64>),
    /// `{start, start+step, start+2*step, ...}` with `start >= 1`, `step >= 1`.
    ArithmeticProgression { start: u64, step: u64 },
    /// `{base^i : i >= 0}` with `base >= 2`.
    GeometricSet { base: u64 },
    /// `{i^e : i >= 1}` with `e >= 2`.
    PowerSet { exponent: u32 },
    /// All of `N = {1, 2, 3, ...}`.
    FullN,
}

impl Generator {
    pub fn finite(mut elems: Vec<u64>) -> Self {
        elems.sort_unstable();
        elems.dedup();
        Generator::FiniteSet(elems)
    }

    pub fn ap(start: u64, step: u64) -> Self {
        assert!(start >= 1 && step >= 1, "AP requires start >= 1, step >= 1");
        Generator::ArithmeticProgression { start, step }
    }

    pub fn geo(base: u64) -> Self {
        assert!(base >= 2, "GEO requires base >= 2");
        Generator::GeometricSet { base }
    }

    pub fn pow(exponent: u32) -> Self {
        assert!(exponent >= 2, "POW requires exponent >= 2");
        Generator::PowerSet { exponent }
    }

    pub fn contains(&self, v: i64) -> bool {
        if v < 0 {
            return false;
        }
        let v = v as u64;
        match self {
            Generator::FiniteSet(elems) => elems.binary_search(&v).is_ok(),
            Generator::ArithmeticProgression { start, step } => {
                v >= *start && (v - start).is_multiple_of(*step)
            }
            Generator::GeometricSet { base } => {
                if v == 0 {
                    return false;
                }
                let mut p = 1u64;
                loop {
                    if p == v {
                        return true;
                    }
                    if p > v / base {
                        return false;
                    }
                    p *= base;
                }
            }
            Generator::PowerSet { exponent } => {
                if v == 0 {
                    return false;
                }
                let r = (v as f64).powf(1.0 / f64::from(*exponent)).round() as u64;
                for c in r.saturating_sub(1)..=r + 1 {
                    if c >= 1 && checked_pow(c, *exponent) == Some(v) {
                        return true;
                    }
                }
                false
            }
            Generator::FullN => v >= 1,
        }
    }

    /// Whether `sum 1/k` over the positive elements diverges. Fixed per class.
    pub fn harmonic_divergent(&self) -> bool {
        matches!(
            self,
            Generator::FullN | Generator::ArithmeticProgression { .. }
        )
    }

    /// Elements of the generator in increasing order, capped at `cap`.
    fn enumerate_up_to(&self, cap: u64) -> Vec<u64> {
        match self {
            Generator::FiniteSet(elems) => elems.iter().copied().take_while(|v| *v <= cap).collect(),
            Generator::ArithmeticProgression { start, step } => {
                let mut out = Vec::new();
                let mut v = *start;
                while v <= cap {
                    out.push(v);
                    v += step;
                }
                out
            }
            Generator::GeometricSet { base } => {
                let mut out = Vec::new();
                let mut p = 1u64;
                while p <= cap {
                    out.push(p);
                    match p.checked_mul(*base) {
                        Some(next) => p = next,
                        None => break,
                    }
                }
                out
            }
            Generator::PowerSet { exponent } => {
                let mut out = Vec::new();
                let mut i = 1u64;
                loop {
                    match checked_pow(i, *exponent) {
                        Some(v) if v <= cap => out.push(v),
                        _ => break,
                    }
                    i += 1;
                }
                out
            }
            Generator::FullN => (1..=cap).collect(),
        }
    }

    /// How costly full enumeration up to `ENUM_CAP` would be; used to pick
    /// the sparsest generator when probing intersections.
    fn enumeration_weight(&self) -> u64 {
        match self {
            Generator::FiniteSet(elems) => elems.len() as u64,
            Generator::GeometricSet { .. } => 64,
            Generator::PowerSet { exponent } => {
                (ENUM_CAP as f64).powf(1.0 / f64::from(*exponent)) as u64 + 1
            }
            Generator::ArithmeticProgression { step, .. } => ENUM_CAP / step + 1,
            Generator::FullN => ENUM_CAP,
        }
    }

    /// Conservative subset test: `Some(true)` / `Some(false)` when cheaply
    /// decidable, `None` otherwise.
    pub fn subset_of(&self, other: &Generator) -> Option<bool> {
        if self == other {
            return Some(true);
        }
        match (self, other) {
            (_, Generator::FullN) => Some(match self {
                Generator::FiniteSet(elems) => elems.iter().all(|v| *v >= 1),
                _ => true,
            }),
            (Generator::FiniteSet(elems), _) => {
                Some(elems.iter().all(|v| other.contains(*v as i64)))
            }
            (
                Generator::ArithmeticProgression { start, step },
                Generator::ArithmeticProgression {
                    start: s2,
                    step: t2,
                },
            ) => Some(other.contains(*start as i64) && step % t2 == 0 && start >= s2),
            _ => None,
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::FiniteSet(elems) => {
                write!(f, "FIN(")?;
                for (i, e) in elems.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{e}")?;
                }
                write!(f, ")")
            }
            Generator::ArithmeticProgression { start, step } => {
                write!(f, "AP({start},{step})")
            }
            Generator::GeometricSet { base } => write!(f, "GEO({base})"),
            Generator::PowerSet { exponent } => write!(f, "POW({exponent})"),
            Generator::FullN => write!(f, "FULL"),
        }
    }
}

fn checked_pow(base: u64, exp: u32) -> Option<u64> {
    base.checked_pow(exp)
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// An arithmetic progression `{x >= start : x = start (mod step)}` used as
/// the normal form for intersections of divergent generators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct ApForm {
    start: u64,
    step: u64,
}

impl ApForm {
    fn full() -> Self {
        ApForm { start: 1, step: 1 }
    }

    fn of(g: &Generator) -> Option<Self> {
        match g {
            Generator::FullN => Some(ApForm::full()),
            Generator::ArithmeticProgression { start, step } => Some(ApForm {
                start: *start,
                step: *step,
            }),
            _ => None,
        }
    }

    /// CRT intersection; `Ok(None)` when provably empty.
    fn intersect(self, other: ApForm) -> Result<Option<ApForm>, SymbolicError> {
        let g = gcd(self.step, other.step);
        if (self.start % g) != (other.start % g) {
            return Ok(None);
        }
        let l = (self.step as u128 / g as u128) * other.step as u128;
        if l > LCM_CAP {
            return Err(SymbolicError::ModulusOverflow);
        }
        let l = l as u64;
        // smallest x >= max(starts) with x = self.start (mod self.step),
        // x = other.start (mod other.step): walk self's progression (bounded
        // by l / self.step steps).
        let lo = self.start.max(other.start);
        let mut x = if lo <= self.start {
            self.start
        } else {
            self.start + (lo - self.start).div_ceil(self.step) * self.step
        };
        let limit = x + l;
        while x <= limit {
            if x >= other.start && (x - other.start).is_multiple_of(other.step) {
                return Ok(Some(ApForm { start: x, step: l }));
            }
            x += self.step;
        }
        Ok(None)
    }
}

/// A one-dimensional coordinate set: the intersection of `include` minus the
/// union of `exclude`. Bare generators are `include = [g]`, `exclude = []`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CoordSet {
    include: Vec<Generator>,
    exclude: Vec<Generator>,
}

impl CoordSet {
    pub fn from_generator(g: Generator) -> Self {
        CoordSet {
            include: vec![g],
            exclude: Vec::new(),
        }
        .normalized()
    }

    pub fn singleton(v: u64) -> Self {
        Self::from_generator(Generator::finite(vec![v]))
    }

    pub fn include(&self) -> &[Generator] {
        &self.include
    }

    pub fn exclude(&self) -> &[Generator] {
        &self.exclude
    }

    pub fn contains(&self, v: i64) -> bool {
        self.include.iter().all(|g| g.contains(v)) && !self.exclude.iter().any(|g| g.contains(v))
    }

    pub fn intersect(&self, other: &CoordSet) -> CoordSet {
        let mut include = self.include.clone();
        include.extend(other.include.iter().cloned());
        let mut exclude = self.exclude.clone();
        exclude.extend(other.exclude.iter().cloned());
        CoordSet { include, exclude }.normalized()
    }

    pub fn minus_generator(&self, g: &Generator) -> CoordSet {
        let mut exclude = self.exclude.clone();
        exclude.push(g.clone());
        CoordSet {
            include: self.include.clone(),
            exclude,
        }
        .normalized()
    }

    pub fn with_extra_include(&self, g: &Generator) -> CoordSet {
        let mut include = self.include.clone();
        include.push(g.clone());
        CoordSet {
            include,
            exclude: self.exclude.clone(),
        }
        .normalized()
    }

    /// Drop 0 from the set (the "intersect with N" convention).
    pub fn restrict_positive(&self) -> CoordSet {
        if self.contains(0) {
            self.minus_generator(&Generator::finite(vec![0]))
        } else {
            self.clone()
        }
    }

    /// Canonical form: a finite include collapses the whole set to an
    /// explicit finite set; duplicates and redundant FULLs are dropped.
    fn normalized(mut self) -> CoordSet {
        self.include.sort();
        self.include.dedup();
        self.exclude.sort();
        self.exclude.dedup();
        if self.include.len() > 1 {
            self.include.retain(|g| *g != Generator::FullN);
            if self.include.is_empty() {
                self.include.push(Generator::FullN);
            }
        }
        if let Some(pos) = self
            .include
            .iter()
            .position(|g| matches!(g, Generator::FiniteSet(_)))
        {
            let Generator::FiniteSet(elems) = self.include[pos].clone() else {
                unreachable!()
            };
            let filtered: Vec<u64> = elems
                .into_iter()
                .filter(|v| {
                    self.include.iter().all(|g| g.contains(*v as i64))
                        && !self.exclude.iter().any(|g| g.contains(*v as i64))
                })
                .collect();
            return CoordSet {
                include: vec![Generator::FiniteSet(filtered)],
                exclude: Vec::new(),
            };
        }
        self
    }

    /// Exact divergence verdict for `sum 1/k` over the positive elements.
    pub fn harmonic_divergent(&self) -> Result<bool, SymbolicError> {
        // any convergent include dominates the intersection
        if self.include.iter().any(|g| !g.harmonic_divergent()) {
            return Ok(false);
        }
        // intersect the divergent includes into one progression
        let mut ap = ApForm::full();
        for g in &self.include {
            match ApForm::of(g).expect("divergent class is AP-formed").intersect(ap)? {
                Some(next) => ap = next,
                None => return Ok(false),
            }
        }
        // convergent excludes cannot destroy divergence
        let ap_excludes: Vec<ApForm> = self
            .exclude
            .iter()
            .filter(|g| g.harmonic_divergent())
            .map(|g| ApForm::of(g).expect("divergent class is AP-formed"))
            .collect();
        if ap_excludes.is_empty() {
            return Ok(true);
        }
        // residue analysis mod lcm: a residue class of `ap` survives iff no
        // excluding progression covers it; finitely many below-start
        // exceptions never change divergence.
        let mut modulus = ap.step as u128;
        for e in &ap_excludes {
            let g = gcd(modulus as u64, e.step) as u128;
            modulus = modulus / g * e.step as u128;
            if modulus > LCM_CAP {
                return Err(SymbolicError::ModulusOverflow);
            }
        }
        let modulus = modulus as u64;
        let mut r = ap.start % modulus;
        for _ in 0..(modulus / ap.step) {
            let covered = ap_excludes
                .iter()
                .any(|e| (r % e.step) == (e.start % e.step));
            if !covered {
                return Ok(true);
            }
            r = (r + ap.step) % modulus;
        }
        Ok(false)
    }

    /// Whether the set has any element at all (0 allowed), exact for
    /// elements up to [`ENUM_CAP`].
    pub fn nonempty(&self) -> Result<bool, SymbolicError> {
        self.probe_element(0)
    }

    /// Whether the set has an element `>= 1`, exact up to [`ENUM_CAP`].
    pub fn nonempty_positive(&self) -> Result<bool, SymbolicError> {
        self.probe_element(1)
    }

    fn probe_element(&self, min: u64) -> Result<bool, SymbolicError> {
        if let Some(conv) = self
            .include
            .iter()
            .filter(|g| !g.harmonic_divergent())
            .min_by_key(|g| g.enumeration_weight())
        {
            return Ok(conv
                .enumerate_up_to(ENUM_CAP)
                .into_iter()
                .any(|v| v >= min && self.contains(v as i64)));
        }
        if self.harmonic_divergent()? {
            return Ok(true);
        }
        // all includes divergent but every residue class excluded: only
        // elements below the exclude starts may survive.
        let mut ap = ApForm::full();
        for g in &self.include {
            match ApForm::of(g).expect("divergent class").intersect(ap)? {
                Some(next) => ap = next,
                None => return Ok(false),
            }
        }
        let horizon = self
            .exclude
            .iter()
            .filter_map(|g| match g {
                Generator::ArithmeticProgression { start, step } => Some(start + step),
                _ => None,
            })
            .max()
            .unwrap_or(0)
            .max(ap.start + ap.step)
            .min(ENUM_CAP);
        let mut v = ap.start.max(min);
        if v > ap.start {
            v = ap.start + (v - ap.start).div_ceil(ap.step) * ap.step;
        }
        while v <= horizon {
            if self.contains(v as i64) {
                return Ok(true);
            }
            v += ap.step;
        }
        Ok(false)
    }

    /// Conservative subset test (used in tests and simplification).
    pub fn subset_of(&self, other: &CoordSet) -> Option<bool> {
        if let [Generator::FiniteSet(elems)] = self.include.as_slice() {
            if self.exclude.is_empty() {
                return Some(elems.iter().all(|v| other.contains(*v as i64)));
            }
        }
        if other.exclude.is_empty()
            && other.include.iter().all(|og| {
                self.include
                    .iter()
                    .any(|sg| sg.subset_of(og) == Some(true))
            })
        {
            return Some(true);
        }
        None
    }
}

impl fmt::Display for CoordSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, g) in self.include.iter().enumerate() {
            if i > 0 {
                write!(f, "&")?;
            }
            write!(f, "{g}")?;
        }
        for g in &self.exclude {
            write!(f, "\\{g}")?;
        }
        Ok(())
    }
}

/// A product term `C_1 x ... x C_n`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProductTerm {
    coords: Vec<CoordSet>,
}

impl ProductTerm {
    pub fn new(coords: Vec<CoordSet>) -> Self {
        assert!(!coords.is_empty(), "product term dimension must be >= 1");
        Self { coords }
    }

    pub fn from_generators(gens: Vec<Generator>) -> Self {
        Self::new(gens.into_iter().map(CoordSet::from_generator).collect())
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coord(&self, axis: usize) -> &CoordSet {
        &self.coords[axis]
    }

    pub fn coords(&self) -> &[CoordSet] {
        &self.coords
    }

    pub fn contains(&self, point: &[i64]) -> bool {
        assert_eq!(point.len(), self.dim());
        self.coords
            .iter()
            .zip(point)
            .all(|(c, v)| c.contains(*v))
    }

    /// All coordinates nonempty, exact up to the enumeration cap.
    pub fn nonempty(&self) -> Result<bool, SymbolicError> {
        for c in &self.coords {
            if !c.nonempty()? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn restrict_positive(&self) -> ProductTerm {
        ProductTerm::new(self.coords.iter().map(|c| c.restrict_positive()).collect())
    }

    /// Conservative: true when every coordinate is provably contained.
    pub fn subset_of(&self, other: &ProductTerm) -> bool {
        self.dim() == other.dim()
            && self
                .coords
                .iter()
                .zip(&other.coords)
                .all(|(a, b)| a.subset_of(b) == Some(true))
    }
}

impl fmt::Display for ProductTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, " x ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// A finite union of product terms; the decidable class of index sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolicIndexSet {
    dim: usize,
    terms: Vec<ProductTerm>,
}

impl SymbolicIndexSet {
    pub fn new(dim: usize, terms: Vec<ProductTerm>) -> Self {
        assert!(dim >= 1);
        for t in &terms {
            assert_eq!(t.dim(), dim, "term dimension mismatch");
        }
        Self { dim, terms }
    }

    pub fn empty(dim: usize) -> Self {
        Self::new(dim, Vec::new())
    }

    /// `N^n` (all positive integers in every coordinate).
    pub fn full(dim: usize) -> Self {
        Self::new(
            dim,
            vec![ProductTerm::from_generators(vec![Generator::FullN; dim])],
        )
    }

    pub fn from_products(products: Vec<Vec<Generator>>) -> Self {
        let dim = products.first().map(|p| p.len()).unwrap_or(1);
        Self::new(
            dim,
            products
                .into_iter()
                .map(ProductTerm::from_generators)
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[ProductTerm] {
        &self.terms
    }

    pub fn contains(&self, point: &[i64]) -> bool {
        self.terms.iter().any(|t| t.contains(point))
    }

    pub fn union(&self, other: &SymbolicIndexSet) -> SymbolicIndexSet {
        assert_eq!(self.dim, other.dim);
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        SymbolicIndexSet::new(self.dim, terms).deduped()
    }

    /// Drop provably empty terms and duplicates.
    pub fn pruned(&self) -> Result<SymbolicIndexSet, SymbolicError> {
        let mut terms = Vec::new();
        for t in &self.terms {
            if t.nonempty()? {
                terms.push(t.clone());
            }
        }
        Ok(SymbolicIndexSet::new(self.dim, terms).deduped())
    }

    fn deduped(mut self) -> SymbolicIndexSet {
        self.terms.sort();
        self.terms.dedup();
        self
    }

    pub fn is_empty_set(&self) -> Result<bool, SymbolicError> {
        Ok(self.pruned()?.terms.is_empty())
    }

    /// Intersect with `N^n` by dropping 0 from every coordinate.
    pub fn restrict_positive(&self) -> SymbolicIndexSet {
        SymbolicIndexSet::new(
            self.dim,
            self.terms.iter().map(|t| t.restrict_positive()).collect(),
        )
    }

    /// The fiber `E(a_1,...,a_j)`: points of `E` whose first `j` coordinates
    /// equal the prefix. Product terms restrict coordinate-wise, so the
    /// fiber stays in the symbolic class.
    pub fn fiber(&self, prefix: &[i64]) -> SymbolicIndexSet {
        assert!(prefix.len() < self.dim, "prefix must be shorter than dim");
        let mut terms = Vec::new();
        for t in &self.terms {
            if prefix
                .iter()
                .enumerate()
                .all(|(l, a)| t.coord(l).contains(*a))
            {
                if prefix.iter().any(|a| *a < 0) {
                    continue;
                }
                let mut coords: Vec<CoordSet> = prefix
                    .iter()
                    .map(|a| CoordSet::singleton(*a as u64))
                    .collect();
                coords.extend(t.coords()[prefix.len()..].iter().cloned());
                terms.push(ProductTerm::new(coords));
            }
        }
        SymbolicIndexSet::new(self.dim, terms)
    }

    /// Coordinate sets contributing to `pi_{j+1}(E(prefix))`: the
    /// `(j+1)`-th factors of terms containing the prefix whose deeper
    /// coordinates are all nonempty.
    pub fn fiber_projection(&self, prefix: &[i64]) -> Result<Vec<CoordSet>, SymbolicError> {
        let j = prefix.len();
        assert!(j < self.dim);
        let mut out = Vec::new();
        for t in &self.terms {
            if !prefix
                .iter()
                .enumerate()
                .all(|(l, a)| t.coord(l).contains(*a))
            {
                continue;
            }
            let mut tail_ok = true;
            for c in &t.coords()[j + 1..] {
                if !c.nonempty()? {
                    tail_ok = false;
                    break;
                }
            }
            if tail_ok {
                out.push(t.coord(j).clone());
            }
        }
        Ok(out)
    }

    /// Conservative symbolic superset check (every term of `other` contained
    /// in some term of `self`).
    pub fn covers(&self, other: &SymbolicIndexSet) -> bool {
        other
            .terms
            .iter()
            .all(|ot| self.terms.iter().any(|st| ot.subset_of(st)))
    }
}

impl fmt::Display for SymbolicIndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "EMPTY({})", self.dim);
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " | ")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

/// Divergence of a finite union: divergent iff some part is.
pub fn union_harmonic_divergent(sets: &[CoordSet]) -> Result<bool, SymbolicError> {
    for s in sets {
        if s.harmonic_divergent()? {
            return Ok(true);
        }
    }
    Ok(false)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_membership_matches_enumeration() {
        // agreement with explicit enumeration on [1,1000]
        let cases = vec![
            Generator::finite(vec![3, 5, 900]),
            Generator::ap(1, 2),
            Generator::ap(7, 13),
            Generator::geo(2),
            Generator::geo(3),
            Generator::pow(2),
            Generator::pow(3),
            Generator::FullN,
        ];
        for g in cases {
            let listed = g.enumerate_up_to(1000);
            for v in 1..=1000u64 {
                assert_eq!(
                    g.contains(v as i64),
                    listed.contains(&v),
                    "{g} at {v}"
                );
            }
        }
    }

    #[test]
    fn divergence_table() {
        assert!(Generator::FullN.harmonic_divergent());
        assert!(Generator::ap(5, 17).harmonic_divergent());
        assert!(!Generator::finite(vec![1, 2, 3]).harmonic_divergent());
        assert!(!Generator::geo(2).harmonic_divergent());
        assert!(!Generator::pow(2).harmonic_divergent());
    }

    #[test]
    fn coordset_intersection_and_difference() {
        let odd = CoordSet::from_generator(Generator::ap(1, 2));
        let all = CoordSet::from_generator(Generator::FullN);
        let inter = odd.intersect(&all);
        assert!(inter.contains(3));
        assert!(!inter.contains(4));
        assert!(inter.harmonic_divergent().unwrap());

        // odds minus {x = 1 mod 4} leaves {x = 3 mod 4}: still divergent
        let rem = odd.minus_generator(&Generator::ap(1, 4));
        assert!(!rem.contains(1));
        assert!(!rem.contains(5));
        assert!(rem.contains(3));
        assert!(rem.contains(7));
        assert!(rem.harmonic_divergent().unwrap());

        // odds minus odds is empty
        let nothing = odd.minus_generator(&Generator::ap(1, 2));
        assert!(!nothing.harmonic_divergent().unwrap());
        assert!(!nothing.nonempty().unwrap());

        // AP(1,2) \ AP(3,2): the exclusion only bites from 3 on, {1} survives
        let head = odd.minus_generator(&Generator::ap(3, 2));
        assert!(!head.harmonic_divergent().unwrap());
        assert!(head.nonempty().unwrap());
        assert!(head.contains(1));
        assert!(!head.contains(3));
    }

    #[test]
    fn coordset_empty_crt_intersection() {
        let odd = CoordSet::from_generator(Generator::ap(1, 2));
        let even = CoordSet::from_generator(Generator::ap(2, 2));
        let never = odd.intersect(&even);
        assert!(!never.nonempty().unwrap());
        assert!(!never.harmonic_divergent().unwrap());
    }

    #[test]
    fn coordset_with_convergent_include_is_convergent() {
        let s = CoordSet::from_generator(Generator::FullN)
            .with_extra_include(&Generator::geo(2));
        assert!(!s.harmonic_divergent().unwrap());
        assert!(s.nonempty_positive().unwrap());
        assert!(s.contains(8));
        assert!(!s.contains(9));
    }

    #[test]
    fn finite_include_normalizes_away_excludes() {
        let s = CoordSet::from_generator(Generator::finite(vec![0, 2, 4, 8]))
            .minus_generator(&Generator::geo(2));
        // 2, 4, 8 are powers of two; only 0 survives
        assert!(s.contains(0));
        assert!(!s.contains(2));
        assert!(s.exclude().is_empty(), "finite sets absorb exclusions");
        let pos = s.restrict_positive();
        assert!(!pos.nonempty().unwrap());
    }

    #[test]
    fn membership_agrees_with_enumeration_products() {
        // SymbolicIndexSet membership vs explicit enumeration on [1,1000]^2
        let e = SymbolicIndexSet::from_products(vec![
            vec![Generator::ap(1, 2), Generator::FullN],
            vec![Generator::finite(vec![3, 5]), Generator::geo(2)],
        ]);
        for a in 1i64..=1000 {
            for b in 1i64..=1000 {
                let expected = (a % 2 == 1) || ((a == 3 || a == 5) && is_pow2(b));
                assert_eq!(e.contains(&[a, b]), expected, "at ({a},{b})");
            }
        }
    }

    fn is_pow2(v: i64) -> bool {
        v > 0 && (v & (v - 1)) == 0
    }

    #[test]
    fn membership_agrees_with_enumeration_dim3() {
        let e = SymbolicIndexSet::from_products(vec![vec![
            Generator::ap(2, 3),
            Generator::pow(2),
            Generator::FullN,
        ]]);
        for a in (1..=1000i64).step_by(9) {
            for b in (1..=1000i64).step_by(13) {
                for c in (1..=1000i64).step_by(17) {
                    let expected = (a - 2).rem_euclid(3) == 0
                        && a >= 2
                        && ((b as f64).sqrt().round() as i64).pow(2) == b
                        && c >= 1;
                    assert_eq!(e.contains(&[a, b, c]), expected, "at ({a},{b},{c})");
                }
            }
        }
    }

    #[test]
    fn fiber_restricts_coordinatewise() {
        let e = SymbolicIndexSet::from_products(vec![
            vec![Generator::ap(1, 2), Generator::FullN],
            vec![Generator::finite(vec![2]), Generator::geo(3)],
        ]);
        let f = e.fiber(&[3]);
        assert!(f.contains(&[3, 7]));
        assert!(!f.contains(&[5, 7]), "fiber pins the first coordinate");
        let f2 = e.fiber(&[2]);
        assert!(f2.contains(&[2, 9]));
        assert!(!f2.contains(&[2, 8]));
    }

    #[test]
    fn display_roundtrip_shapes() {
        let e = SymbolicIndexSet::from_products(vec![
            vec![Generator::ap(1, 2), Generator::FullN],
            vec![Generator::finite(vec![3, 5]), Generator::geo(2)],
        ]);
        assert_eq!(e.to_string(), "AP(1,2) x FULL | FIN(3,5) x GEO(2)");
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_generator() -> impl Strategy<Value = Generator> {
            prop_oneof![
                Just(Generator::FullN),
                (1u64..=8, 1u64..=6).prop_map(|(a, s)| Generator::ap(a, s)),
                (2u64..=4).prop_map(Generator::geo),
                (2u32..=3).prop_map(Generator::pow),
                proptest::collection::vec(0u64..=60, 1..5).prop_map(Generator::finite),
            ]
        }

        proptest! {
            // membership of intersections and differences is pointwise
            // boolean algebra on the generators
            #[test]
            fn coordset_ops_respect_membership(
                g1 in arb_generator(),
                g2 in arb_generator(),
                v in 0i64..200,
            ) {
                let a = CoordSet::from_generator(g1.clone());
                let inter = a.intersect(&CoordSet::from_generator(g2.clone()));
                prop_assert_eq!(inter.contains(v), g1.contains(v) && g2.contains(v));
                let diff = a.minus_generator(&g2);
                prop_assert_eq!(diff.contains(v), g1.contains(v) && !g2.contains(v));
            }

            // a divergent coordinate set is in particular infinite
            #[test]
            fn divergent_sets_keep_producing_elements(g in arb_generator()) {
                let c = CoordSet::from_generator(g);
                if c.harmonic_divergent().unwrap() {
                    let count = (1..=5000i64).filter(|v| c.contains(*v)).count();
                    prop_assert!(count >= 100);
                }
            }
        }
    }
}
