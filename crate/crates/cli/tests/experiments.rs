//! Experiment runners: spec examples, dichotomy bookkeeping, and
//! bit-for-bit reproducibility of reports.

use std::path::Path;

use rtz_cli::config::{Config, ExperimentSpec};
use rtz_cli::experiments::{
    run_corollary1, run_experiment, run_moment_vanishing, run_proposition1,
    run_theorem1_box_reduction,
};

fn spec_from(text: &str) -> ExperimentSpec {
    let config = Config::parse(text, Path::new(".")).unwrap();
    ExperimentSpec::from_config(&config, None).unwrap()
}

#[test]
fn proposition1_no_zero_factor_with_positive_radials() {
    // m = 2 on the disk, f1 = r^2 (positive a.e.), f2 = 1, twists 0
    let spec = spec_from(
        r#"
[domain]
domain = polydisk(1)
[symbols]
symbol = qh(twist=(0), radial="r1^2", sup=1)
symbol = qh(twist=(0), radial="1", sup=1)
[lattice]
kmax = (8)
[experiment]
kind = proposition1
seed = 1
"#,
    );
    let report = run_proposition1(&spec).unwrap();
    assert_eq!(report.verdict, "no zero factor");
    assert!(report.factors.iter().all(|f| f.zero_set.is_empty()));
    assert!(report.product_zero_set.is_empty());
}

#[test]
fn proposition1_flags_the_zero_factor() {
    let spec = spec_from(
        r#"
[domain]
domain = polydisk(1)
[symbols]
symbol = qh(twist=(0), radial="r1", sup=1)
symbol = qh(twist=(0), radial="0", sup=1)
[lattice]
kmax = (6)
[experiment]
kind = proposition1
seed = 1
"#,
    );
    let report = run_proposition1(&spec).unwrap();
    assert_eq!(report.verdict, "factor 2 = 0 below tolerance");
    assert!(report.factors[1].identically_small);
    assert_eq!(report.factors[1].zero_set.len(), 7, "Z_2 is the whole lattice");
    assert_eq!(report.product_zero_set.len(), 7);
}

#[test]
fn proposition1_sign_changing_radial_and_hull() {
    // g(t) = t - 2/3 vanishes against t^k exactly at k = 1; the declared
    // hull FIN(1) x nothing... (dimension 1) must contain Z_1 and fail
    // condition (I)
    let spec = spec_from(
        r#"
[domain]
domain = polydisk(1)
[symbols]
symbol = qh(twist=(0), radial="r1^2 - 0.666666666666666667", sup=1)
symbol = qh(twist=(0), radial="1", sup=1)
[lattice]
kmax = (10)
[experiment]
kind = proposition1
seed = 2
zhull_1 = FIN(1)
zhull_2 = GEO(2)
"#,
    );
    let report = run_proposition1(&spec).unwrap();
    assert_eq!(report.verdict, "no zero factor");
    assert_eq!(report.factors[0].zero_set, vec![vec![1]]);
    assert_eq!(report.factors[0].hull_contains_zero_set, Some(true));
    assert_eq!(report.factors[0].hull_condition_i, Some(false));
    assert_eq!(report.factors[1].hull_contains_zero_set, Some(true), "empty Z_2");
}

#[test]
fn corollary1_dichotomy_with_zero_tail() {
    let spec = spec_from(
        r#"
[domain]
domain = polydisk(1)
[symbols]
symbol = qh(twist=(1), radial="0", sup=1)
symbol = linf("z1 + conj(z1) + 0.5")
[lattice]
kmax = (8)
[experiment]
kind = corollary1
seed = 4
"#,
    );
    let report = run_corollary1(&spec).unwrap();
    assert!(report.product.zero_flag);
    assert_eq!(report.product.max_abs_weight, 0.0);
    assert_eq!(report.tail_zero_flags, vec![true]);
    assert_eq!(report.dichotomy_holds, Some(true));
}

#[test]
fn corollary1_requires_outermost_linf() {
    let text = r#"
[domain]
domain = polydisk(1)
[symbols]
symbol = linf("z1")
symbol = qh(twist=(1), radial="r1")
[lattice]
kmax = (6)
[experiment]
kind = corollary1
seed = 4
"#;
    let spec = spec_from(text);
    let err = run_corollary1(&spec).unwrap_err();
    assert_eq!(err.exit_code(), 1, "misplaced linf is a config error");
}

#[test]
fn box_reduction_log_shrinks_on_zero_top_slice() {
    // the top slice of factor 1 is the zero symbol (its box has a populated
    // bottom level only), so the first step must shrink R_1
    let spec = spec_from(
        r#"
[domain]
domain = polydisk(1)
[symbols]
symbol = sum(box=[(0),(2)), terms=((0): "1"))
symbol = sum(box=[(0),(1)), terms=((0): "0.5"))
[lattice]
kmax = (8)
[experiment]
kind = theorem1_box_reduction
seed = 9
axis = 1
"#,
    );
    let report = run_theorem1_box_reduction(&spec).unwrap();
    assert!(report.slice_match_ok, "max mismatch {}", report.max_mismatch);
    assert!(report
        .reduction_log
        .first()
        .unwrap()
        .action
        .contains("factor 1"));
    assert!(report.reduction_log[0].boxes[0].contains("[(0),(1))"));
    assert!(
        report.final_state.contains("nonzero"),
        "after the shrink the product of the populated slices is nonzero: {}",
        report.final_state
    );
}

#[test]
fn box_reduction_single_cells_defer_to_proposition1() {
    // all boxes 1 x ... x 1: the reduction is a no-op and the product of
    // plain quasi-homogeneous symbols is nonzero
    let spec = spec_from(
        r#"
[domain]
domain = polydisk(1,1)
[symbols]
symbol = sum(box=[(0,0),(1,1)), terms=((0,0): "1"))
symbol = sum(box=[(1,0),(2,1)), terms=((1,0): "r1"))
[lattice]
kmax = (4,4)
[experiment]
kind = theorem1_box_reduction
seed = 10
axis = 2
"#,
    );
    let report = run_theorem1_box_reduction(&spec).unwrap();
    assert!(report.slice_match_ok);
    assert_eq!(report.max_axis_shift, 0);
    assert!(report.final_state.contains("nonzero"));
}

#[test]
fn moment_vanishing_examples() {
    // g = t - 1/2 on the unit interval, E = {1}: h(1) = 1/12, reported
    // nonvanishing
    let spec = spec_from(
        r#"
[domain]
domain = polydisk(1)
[symbols]
symbol = qh(twist=(0), radial="r1^2 - 0.5", sup=1)
[lattice]
kmax = (10)
[experiment]
kind = moment_vanishing
seed = 3
set = FIN(1)
probes = 20
"#,
    );
    let report = run_moment_vanishing(&spec).unwrap();
    assert_eq!(report.lattice_points_in_set, 1);
    assert!((report.max_abs_on_set - 1.0 / 12.0).abs() < 1e-9);
    assert!(!report.vanishing_observed);
    assert_eq!(report.bound_violations, 0);

    // g = 0: everything vanishes
    let spec = spec_from(
        r#"
[domain]
domain = polydisk(1)
[symbols]
symbol = qh(twist=(0), radial="0", sup=1)
[lattice]
kmax = (6)
[experiment]
kind = moment_vanishing
seed = 3
set = AP(1,1)
"#,
    );
    let report = run_moment_vanishing(&spec).unwrap();
    assert_eq!(report.max_abs_on_set, 0.0);
    assert!(report.vanishing_observed);
}

#[test]
fn reports_reproduce_bit_for_bit() {
    for kind in [
        "proposition1",
        "theorem1_box_reduction",
        "moment_vanishing",
        "corollary1",
    ] {
        let text = format!(
            r#"
[domain]
domain = polydisk(1)
[symbols]
symbol = qh(twist=(1), radial="r1", sup=1)
{}
[lattice]
kmax = (6)
[experiment]
kind = {kind}
seed = 42
set = AP(1,2)
"#,
            if kind == "corollary1" {
                "symbol = linf(\"z1 + conj(z1)\", pmax=(1))"
            } else {
                "symbol = qh(twist=(0), radial=\"1\", sup=1)"
            }
        );
        let spec = spec_from(&text);
        let (a, _) = run_experiment(&spec).unwrap();
        let (b, _) = run_experiment(&spec).unwrap();
        assert_eq!(a, b, "{kind} report not byte-identical");
    }
}
