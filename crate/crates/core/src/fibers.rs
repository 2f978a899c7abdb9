//! Thick/thin fibers, condition (I), the deletion process, and the union
//! locator, all exact over symbolic index sets.
//!
//! A fiber `E(a_1,...,a_j)` is thick when the next-coordinate projection
//! meets `N` and has divergent harmonic sum. Condition (I) asks for a subset
//! of `E` inside `N^n` with divergent first projection all of whose nonempty
//! prefix fibers are thick. The deletion process strips thin fibers layer by
//! layer; the set that survives is empty exactly when condition (I) fails,
//! and otherwise is itself a valid witness.

use thiserror::Error;

use crate::symbolic::{
    union_harmonic_divergent, CoordSet, ProductTerm, SymbolicError, SymbolicIndexSet,
    DEFAULT_TERM_BUDGET,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FiberError {
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
    #[error("prefix length {len} must be shorter than dimension {dim}")]
    PrefixTooLong { len: usize, dim: usize },
    #[error("the union of the input sets does not satisfy condition (I)")]
    UnionFailsConditionI,
    #[error("locate_condition_i needs at least one input set")]
    EmptyInput,
}

/// A fiber query: a set together with a pinned coordinate prefix.
#[derive(Clone, Debug)]
pub struct FiberQuery {
    set: SymbolicIndexSet,
    prefix: Vec<i64>,
}

impl FiberQuery {
    pub fn new(set: SymbolicIndexSet, prefix: Vec<i64>) -> Result<Self, FiberError> {
        if prefix.len() >= set.dim() {
            return Err(FiberError::PrefixTooLong {
                len: prefix.len(),
                dim: set.dim(),
            });
        }
        Ok(Self { set, prefix })
    }

    pub fn prefix(&self) -> &[i64] {
        &self.prefix
    }

    /// The fiber as a symbolic set (first coordinates pinned).
    pub fn fiber(&self) -> SymbolicIndexSet {
        self.set.fiber(&self.prefix)
    }

    /// Exact thickness verdict for the fiber along the next coordinate.
    ///
    /// Divergence of the projection union implies it meets `N`, so the
    /// verdict reduces to the per-class divergence table.
    pub fn is_thick(&self) -> Result<bool, FiberError> {
        let proj = self.set.fiber_projection(&self.prefix)?;
        Ok(union_harmonic_divergent(&proj)?)
    }
}

/// The outcome of the deletion process `E_n >= E_{n-1} >= ... >= E_1, E_0`.
#[derive(Clone, Debug)]
pub struct Decomposition {
    /// `E_n, E_{n-1}, ..., E_1, E_0` (length `n + 1`; for `n = 1` it is
    /// `[E_1, E_0]`).
    pub layers: Vec<SymbolicIndexSet>,
    /// `F_n, F_{n-1}, ..., F_1` with `F_j = E_j \ E_{j-1}` (length `n`).
    pub deleted: Vec<SymbolicIndexSet>,
    /// Whether condition (I) holds (`E_0` nonempty).
    pub condition_i_holds: bool,
}

impl Decomposition {
    pub fn final_layer(&self) -> &SymbolicIndexSet {
        self.layers.last().expect("layers nonempty")
    }

    /// `F_j` for `1 <= j <= n`.
    pub fn deleted_at(&self, j: usize) -> &SymbolicIndexSet {
        let n = self.deleted.len();
        assert!(j >= 1 && j <= n, "F_j defined for 1 <= j <= n");
        &self.deleted[n - j]
    }
}

/// Condition (I) verdict with either a witness subset or the deletion
/// process as the absence certificate.
#[derive(Clone, Debug)]
pub struct ConditionIVerdict {
    pub holds: bool,
    /// A subset of `E` inside `N^n` with divergent first projection and all
    /// nonempty prefix fibers thick; present exactly when `holds`.
    pub witness: Option<SymbolicIndexSet>,
    pub certificate: Decomposition,
}

/// Run the deletion process on `E`.
///
/// Steps, for prefix length `j = n-1` down to `1`: `E_j` keeps the points of
/// `E_{j+1}` whose `j`-prefix fiber is thick. Finally `E_0 = E_1` if the
/// first projection of `E_1` has divergent harmonic sum, else the empty set.
pub fn deletion_process(e: &SymbolicIndexSet) -> Result<Decomposition, FiberError> {
    deletion_process_with_budget(e, DEFAULT_TERM_BUDGET)
}

pub fn deletion_process_with_budget(
    e: &SymbolicIndexSet,
    budget: usize,
) -> Result<Decomposition, FiberError> {
    let n = e.dim();
    let mut layers = vec![e.clone()];
    let mut deleted = Vec::new();
    let mut current = e.pruned()?;
    for j in (1..n).rev() {
        let (kept, removed) = delete_thin_prefix_fibers(&current, j, budget)?;
        layers.push(kept.clone());
        deleted.push(removed);
        current = kept;
    }
    // E_0 from E_1 via divergence of the first projection
    let pi1 = first_projection(&current)?;
    let divergent = union_harmonic_divergent(&pi1)?;
    let (e0, f1) = if divergent {
        (current.clone(), SymbolicIndexSet::empty(n))
    } else {
        (SymbolicIndexSet::empty(n), current.clone())
    };
    deleted.push(f1);
    let holds = !e0.is_empty_set()?;
    layers.push(e0);
    Ok(Decomposition {
        layers,
        deleted,
        condition_i_holds: holds,
    })
}

/// Coordinate sets contributing to `pi_1(E)` (terms with all deeper
/// coordinates nonempty).
fn first_projection(e: &SymbolicIndexSet) -> Result<Vec<CoordSet>, SymbolicError> {
    let mut out = Vec::new();
    for t in e.terms() {
        let mut tail_ok = true;
        for c in &t.coords()[1..] {
            if !c.nonempty()? {
                tail_ok = false;
                break;
            }
        }
        if tail_ok {
            out.push(t.coord(0).clone());
        }
    }
    Ok(out)
}

/// One deletion step: split `E` into the part whose `j`-prefix fiber is
/// thick and the deleted remainder, both as symbolic sets.
///
/// A prefix has a thick fiber exactly when some term whose `(j+1)`-th
/// coordinate set is divergent (and whose deeper coordinates are nonempty)
/// contains it, so the thick-prefix region is the union of those terms'
/// prefix products and both parts stay in the symbolic class.
fn delete_thin_prefix_fibers(
    e: &SymbolicIndexSet,
    j: usize,
    budget: usize,
) -> Result<(SymbolicIndexSet, SymbolicIndexSet), FiberError> {
    let n = e.dim();
    assert!(j >= 1 && j < n);
    // donors: terms whose presence makes a prefix fiber thick
    let mut donors: Vec<&ProductTerm> = Vec::new();
    for t in e.terms() {
        if !t.coord(j).harmonic_divergent()? {
            continue;
        }
        let mut tail_ok = true;
        for c in &t.coords()[j + 1..] {
            if !c.nonempty()? {
                tail_ok = false;
                break;
            }
        }
        let mut prefix_ok = true;
        for c in &t.coords()[..j] {
            if !c.nonempty()? {
                prefix_ok = false;
                break;
            }
        }
        if tail_ok && prefix_ok {
            donors.push(t);
        }
    }

    // kept part: for every term, intersect its prefix with each donor prefix
    let mut kept_terms: Vec<ProductTerm> = Vec::new();
    for t in e.terms() {
        for u in &donors {
            let mut coords: Vec<CoordSet> = Vec::with_capacity(n);
            for l in 0..j {
                coords.push(t.coord(l).intersect(u.coord(l)));
            }
            coords.extend(t.coords()[j..].iter().cloned());
            kept_terms.push(ProductTerm::new(coords));
        }
        check_budget(kept_terms.len(), budget)?;
    }
    let kept = simplify(SymbolicIndexSet::new(n, kept_terms))?;

    // deleted part: each term's prefix minus the union of donor prefixes
    let mut removed_terms: Vec<ProductTerm> = Vec::new();
    for t in e.terms() {
        let mut pieces: Vec<Vec<CoordSet>> = vec![t.coords()[..j].to_vec()];
        for u in &donors {
            let mut next: Vec<Vec<CoordSet>> = Vec::new();
            for piece in &pieces {
                subtract_prefix_product(piece, &u.coords()[..j], &mut next);
                check_budget(next.len(), budget)?;
            }
            pieces = next;
        }
        for piece in pieces {
            let mut coords = piece;
            coords.extend(t.coords()[j..].iter().cloned());
            removed_terms.push(ProductTerm::new(coords));
        }
        check_budget(removed_terms.len(), budget)?;
    }
    let removed = simplify(SymbolicIndexSet::new(n, removed_terms))?;
    Ok((kept, removed))
}

fn check_budget(terms: usize, budget: usize) -> Result<(), SymbolicError> {
    if terms > budget {
        Err(SymbolicError::BudgetExceeded { terms, budget })
    } else {
        Ok(())
    }
}

/// `piece \ q` for two products of equal length, expanded into products.
///
/// The split telescopes on the first coordinate where a point escapes `q`,
/// so the pieces written to `out` cover the difference exactly.
fn subtract_prefix_product(piece: &[CoordSet], q: &[CoordSet], out: &mut Vec<Vec<CoordSet>>) {
    debug_assert_eq!(piece.len(), q.len());
    for l0 in 0..piece.len() {
        // coordinates before l0 constrained into q, coordinate l0 outside
        let mut base: Vec<CoordSet> = Vec::with_capacity(piece.len());
        for l in 0..l0 {
            base.push(piece[l].intersect(&q[l]));
        }
        for escaped in coordset_difference(&piece[l0], &q[l0]) {
            let mut coords = base.clone();
            coords.push(escaped);
            coords.extend(piece[l0 + 1..].iter().cloned());
            out.push(coords);
        }
    }
}

/// `a \ b` as a finite (possibly overlapping) union of coordinate sets.
fn coordset_difference(a: &CoordSet, b: &CoordSet) -> Vec<CoordSet> {
    let mut out = Vec::new();
    for g in b.include() {
        out.push(a.minus_generator(g));
    }
    for g in b.exclude() {
        out.push(a.with_extra_include(g));
    }
    out
}

/// Prune empty terms, drop duplicates and terms covered by another term.
fn simplify(e: SymbolicIndexSet) -> Result<SymbolicIndexSet, SymbolicError> {
    let pruned = e.pruned()?;
    let terms = pruned.terms().to_vec();
    let mut keep: Vec<ProductTerm> = Vec::new();
    for (i, t) in terms.iter().enumerate() {
        let covered = terms
            .iter()
            .enumerate()
            .any(|(k, other)| k != i && t != other && t.subset_of(other))
            || keep.contains(t);
        if !covered {
            keep.push(t.clone());
        }
    }
    Ok(SymbolicIndexSet::new(pruned.dim(), keep))
}

/// Decide condition (I), returning a witness subset on success and the
/// deletion process as certificate either way.
pub fn satisfies_condition_i(e: &SymbolicIndexSet) -> Result<ConditionIVerdict, FiberError> {
    let certificate = deletion_process(e)?;
    if certificate.condition_i_holds {
        let witness = certificate.final_layer().restrict_positive().pruned()?;
        Ok(ConditionIVerdict {
            holds: true,
            witness: Some(witness),
            certificate,
        })
    } else {
        Ok(ConditionIVerdict {
            holds: false,
            witness: None,
            certificate,
        })
    }
}

/// Least index whose set satisfies condition (I), given that the union does.
///
/// Returns the 0-based index and the witness. Errors when the union itself
/// fails condition (I) (the hypothesis of the locator).
pub fn locate_condition_i(
    sets: &[SymbolicIndexSet],
) -> Result<(usize, SymbolicIndexSet), FiberError> {
    if sets.is_empty() {
        return Err(FiberError::EmptyInput);
    }
    let mut union = sets[0].clone();
    for s in &sets[1..] {
        union = union.union(s);
    }
    if !satisfies_condition_i(&union)?.holds {
        return Err(FiberError::UnionFailsConditionI);
    }
    for (i, s) in sets.iter().enumerate() {
        let verdict = satisfies_condition_i(s)?;
        if verdict.holds {
            return Ok((i, verdict.witness.expect("witness present when holds")));
        }
    }
    unreachable!("some set must satisfy condition (I) when the union does")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::Generator;

    fn set(products: Vec<Vec<Generator>>) -> SymbolicIndexSet {
        SymbolicIndexSet::from_products(products)
    }

    #[test]
    fn thickness_examples() {
        // FULL x FULL, prefix (5): thick
        let e = set(vec![vec![Generator::FullN, Generator::FullN]]);
        assert!(FiberQuery::new(e, vec![5]).unwrap().is_thick().unwrap());

        // FULL x GEO(2), prefix (5): thin
        let e = set(vec![vec![Generator::FullN, Generator::geo(2)]]);
        assert!(!FiberQuery::new(e, vec![5]).unwrap().is_thick().unwrap());

        // AP(1,2) x FIN(7), prefix (3): thin (finite fiber)
        let e = set(vec![vec![Generator::ap(1, 2), Generator::finite(vec![7])]]);
        assert!(!FiberQuery::new(e, vec![3]).unwrap().is_thick().unwrap());
    }

    #[test]
    fn thickness_sees_the_whole_union() {
        // first component alone has thin fibers, but the union's fiber at
        // odd prefixes is GEO(2) + evens: divergent, hence thick
        let e = set(vec![
            vec![Generator::ap(1, 2), Generator::geo(2)],
            vec![Generator::ap(1, 2), Generator::ap(2, 2)],
        ]);
        assert!(FiberQuery::new(e, vec![1]).unwrap().is_thick().unwrap());
    }

    #[test]
    fn deletion_full_square_is_identity() {
        let e = SymbolicIndexSet::full(2);
        let d = deletion_process(&e).unwrap();
        assert!(d.condition_i_holds);
        for pt in [[1i64, 1], [7, 300], [499, 2]] {
            assert!(d.final_layer().contains(&pt));
        }
        for f in &d.deleted {
            assert!(f.is_empty_set().unwrap());
        }
    }

    #[test]
    fn deletion_full_times_geo() {
        // every 1-prefix fiber is GEO(2): thin, so everything is deleted
        let e = set(vec![vec![Generator::FullN, Generator::geo(2)]]);
        let d = deletion_process(&e).unwrap();
        assert!(!d.condition_i_holds);
        assert!(d.final_layer().is_empty_set().unwrap());
        // F_2 = E, E_1 empty
        assert!(d.layers[1].is_empty_set().unwrap());
        let f2 = d.deleted_at(2);
        for pt in [[3i64, 4], [100, 1], [7, 256]] {
            assert_eq!(f2.contains(&pt), e.contains(&pt));
        }
    }

    #[test]
    fn deletion_respects_union_thickness() {
        // (AP(1,1) x FULL) | (FIN(1) x GEO(3)): every fiber joins FULL, so
        // nothing is thin; enumeration confirms F_2 is empty and E_0 = E.
        let e = set(vec![
            vec![Generator::ap(1, 1), Generator::FullN],
            vec![Generator::finite(vec![1]), Generator::geo(3)],
        ]);
        let d = deletion_process(&e).unwrap();
        assert!(d.condition_i_holds);
        assert!(d.deleted_at(2).is_empty_set().unwrap());
        for a in 1..=200i64 {
            for b in 1..=200i64 {
                assert_eq!(d.final_layer().contains(&[a, b]), e.contains(&[a, b]));
            }
        }
    }

    #[test]
    fn deletion_splits_overlapping_union() {
        // (AP(2,2) x FULL) | (FIN(1) x GEO(3)): the fiber at 1 is GEO(3)
        // alone (thin), so F_2 is exactly the {1} x GEO(3) part.
        let e = set(vec![
            vec![Generator::ap(2, 2), Generator::FullN],
            vec![Generator::finite(vec![1]), Generator::geo(3)],
        ]);
        let d = deletion_process(&e).unwrap();
        assert!(d.condition_i_holds);
        let f2 = d.deleted_at(2);
        assert!(f2.contains(&[1, 9]));
        assert!(!f2.contains(&[2, 9]));
        assert!(d.final_layer().contains(&[2, 9]));
        assert!(!d.final_layer().contains(&[1, 9]));
        // reconstruction on a grid
        for a in 0..=60i64 {
            for b in 0..=60i64 {
                let rebuilt = d.final_layer().contains(&[a, b])
                    || d.deleted.iter().any(|f| f.contains(&[a, b]));
                assert_eq!(rebuilt, e.contains(&[a, b]), "at ({a},{b})");
            }
        }
    }

    #[test]
    fn condition_i_fixture_verdicts() {
        // N^n satisfies condition (I)
        assert!(satisfies_condition_i(&SymbolicIndexSet::full(2))
            .unwrap()
            .holds);
        assert!(satisfies_condition_i(&SymbolicIndexSet::full(3))
            .unwrap()
            .holds);

        // AP(2,2) x FULL: true, witness is the set itself
        let e = set(vec![vec![Generator::ap(2, 2), Generator::FullN]]);
        let v = satisfies_condition_i(&e).unwrap();
        assert!(v.holds);
        let w = v.witness.unwrap();
        assert!(w.contains(&[2, 5]) && w.contains(&[4, 1]));

        // GEO(2) x FULL: false (first projection converges)
        let e = set(vec![vec![Generator::geo(2), Generator::FullN]]);
        assert!(!satisfies_condition_i(&e).unwrap().holds);

        // FULL x GEO(2): false (all fibers thin)
        let e = set(vec![vec![Generator::FullN, Generator::geo(2)]]);
        assert!(!satisfies_condition_i(&e).unwrap().holds);

        // FIN x anything: false
        let e = set(vec![vec![Generator::finite(vec![3, 5]), Generator::FullN]]);
        assert!(!satisfies_condition_i(&e).unwrap().holds);
    }

    #[test]
    fn witness_fibers_are_thick() {
        let e = set(vec![
            vec![Generator::ap(1, 2), Generator::FullN],
            vec![Generator::FullN, Generator::geo(2)],
        ]);
        let v = satisfies_condition_i(&e).unwrap();
        assert!(v.holds);
        let w = v.witness.unwrap();
        // witness inside E and inside N^n
        for a in 1..=60i64 {
            for b in 1..=60i64 {
                if w.contains(&[a, b]) {
                    assert!(e.contains(&[a, b]));
                }
            }
        }
        assert!(!w.contains(&[0, 1]));
        // nonempty prefix fibers of the witness are thick
        for a in 1..=60i64 {
            let has_point = (1..=2048i64).any(|b| w.contains(&[a, b]));
            if has_point {
                let q = FiberQuery::new(w.clone(), vec![a]).unwrap();
                assert!(q.is_thick().unwrap(), "thin witness fiber at {a}");
            }
        }
    }

    #[test]
    fn locate_examples() {
        // [GEO(2) x FULL, FULL x FULL] -> index 1 (spec's j = 2)
        let z1 = set(vec![vec![Generator::geo(2), Generator::FullN]]);
        let z2 = SymbolicIndexSet::full(2);
        let (j, _) = locate_condition_i(&[z1, z2]).unwrap();
        assert_eq!(j, 1);

        // [FULL^n] -> index 0
        let (j, _) = locate_condition_i(&[SymbolicIndexSet::full(3)]).unwrap();
        assert_eq!(j, 0);

        // both qualify -> least index
        let z1 = set(vec![vec![Generator::ap(2, 2), Generator::FullN]]);
        let z2 = set(vec![vec![Generator::ap(1, 2), Generator::FullN]]);
        let (j, _) = locate_condition_i(&[z1, z2]).unwrap();
        assert_eq!(j, 0);
    }

    #[test]
    fn locate_rejects_failing_union() {
        let z1 = set(vec![vec![Generator::geo(2), Generator::FullN]]);
        let z2 = set(vec![vec![Generator::FullN, Generator::geo(3)]]);
        assert_eq!(
            locate_condition_i(&[z1, z2]).unwrap_err(),
            FiberError::UnionFailsConditionI
        );
    }

    #[test]
    fn three_dimensional_deletion() {
        // FULL x GEO(2) x FULL: fibers over (a) project onto GEO(2) at the
        // second coordinate; deletion at prefix length 1 removes everything.
        let e = set(vec![vec![
            Generator::FullN,
            Generator::geo(2),
            Generator::FullN,
        ]]);
        let d = deletion_process(&e).unwrap();
        assert!(!d.condition_i_holds);
        // the length-2 prefixes are thick (third coordinate FULL), so the
        // first step deletes nothing
        assert!(d.deleted_at(3).is_empty_set().unwrap());
        assert!(!d.deleted_at(2).is_empty_set().unwrap());
    }

    #[test]
    fn four_dimensional_full_holds() {
        assert!(satisfies_condition_i(&SymbolicIndexSet::full(4))
            .unwrap()
            .holds);
    }

    #[test]
    fn budget_guards_term_blowup() {
        let e = set(vec![
            vec![Generator::ap(1, 2), Generator::geo(2)],
            vec![Generator::ap(1, 3), Generator::ap(2, 2)],
            vec![Generator::pow(2), Generator::FullN],
        ]);
        let err = deletion_process_with_budget(&e, 2).unwrap_err();
        assert!(matches!(
            err,
            FiberError::Symbolic(SymbolicError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn monotonicity_witness_transfer() {
        // E inside E' and E satisfies condition (I) => so does E'
        let e = set(vec![vec![Generator::ap(2, 2), Generator::FullN]]);
        let extra = set(vec![vec![Generator::geo(2), Generator::geo(3)]]);
        let e_prime = e.union(&extra);
        assert!(e_prime.covers(&e), "superset by construction must cover e");
        assert!(satisfies_condition_i(&e).unwrap().holds);
        assert!(satisfies_condition_i(&e_prime).unwrap().holds);
    }
}
