//! Domain families beyond the disk and polydisk: ellipsoid profiles through
//! the boundary-resolving quadrature, origin-avoiding rings with negative
//! indices, and tabulated indicators through the sampling fallback.
//!
//! Expected values were computed beforehand with mpmath (25 digits).

use num_complex::Complex64;

use rtz_core::domain::DomainProfile;
use rtz_core::lattice::MultiIndex;
use rtz_core::moments::{MomentError, MomentTable};
use rtz_core::symbols::{QhSymbol, RadialFn};
use rtz_core::toeplitz::toeplitz_apply;

fn mi(v: &[i64]) -> MultiIndex {
    MultiIndex::new(v.to_vec())
}

#[test]
fn ellipsoid_norms_match_fixtures() {
    // |z1|^2 + |z2|^4 < 1: squared region {t1 + t2^2 < 1}
    let d = DomainProfile::ellipsoid(vec![2.0, 4.0], 1.0);
    let t = MomentTable::new(&d, 1e-10).unwrap();
    let fixtures = [
        ([0i64, 0], 6.5797362673929057),
        ([1, 0], 2.6318945069571623),
        ([0, 1], 2.4674011002723397),
        ([2, 1], 0.41123351671205661),
    ];
    for (alpha, expect) in fixtures {
        let norm = t.monomial_norm(&mi(&alpha)).unwrap();
        let rel = ((norm - expect) / expect).abs();
        assert!(rel < 1e-8, "alpha {alpha:?}: {norm} vs {expect} (rel {rel:.2e})");
    }
    // identity weight survives the curved boundary
    let phi = QhSymbol::new(RadialFn::constant(Complex64::new(1.0, 0.0)), mi(&[0, 0]), 1.0);
    let (_, w) = toeplitz_apply(&t, &phi, &mi(&[2, 3])).unwrap();
    assert!((w - Complex64::new(1.0, 0.0)).norm() < 1e-7, "w = {w}");
}

#[test]
fn ring_domain_admits_negative_indices() {
    // 0.5 < |z| < 0.9: the closure avoids the axis, so z^k with k < 0 has
    // finite norm; the indicator is not downward closed, so this runs the
    // sampling fallback at its looser tolerance.
    let d = DomainProfile::generic(
        |x: &[f64]| x[0] > 0.5 && x[0] < 0.9,
        vec![0.9],
        false,
        "ring(0.5,0.9)",
    )
    .unwrap();
    assert!(!d.axis_touching()[0]);
    let t = MomentTable::new(&d, 1e-7).unwrap();
    let fixtures = [
        (-2i64, 8.687861165482885),
        (-1, 3.6931725366690853),
        (0, 1.7592918860102842),
        (1, 0.93242469958545063),
        (3, 0.33502019456105241),
    ];
    for (k, expect) in fixtures {
        let norm = t.monomial_norm(&mi(&[k])).unwrap();
        let rel = ((norm - expect) / expect).abs();
        assert!(rel < 1e-3, "k={k}: {norm} vs {expect} (rel {rel:.2e})");
        assert!(t.bergman_coefficient(&mi(&[k])) > 0.0);
    }

    // T_(conj z) z^0 lands on z^(-1) with a genuinely nonzero weight:
    // (pi * 0.56) / (2 pi ln 1.8)
    let phi = QhSymbol::new(RadialFn::real(|r: &[f64]| r[0], "r1"), mi(&[-1]), 1.0);
    let (target, w) = toeplitz_apply(&t, &phi, &mi(&[0])).unwrap();
    assert_eq!(target, mi(&[-1]));
    let expect = 0.4763633078450783;
    assert!(
        (w.re - expect).abs() < 1e-3 && w.im.abs() < 1e-12,
        "ring shift weight {w} vs {expect}"
    );
}

#[test]
fn axis_touching_domains_reject_negative_indices() {
    let t = MomentTable::new(&DomainProfile::polydisk(vec![1.0]), 1e-10).unwrap();
    assert!(matches!(
        t.monomial_norm(&mi(&[-1])),
        Err(MomentError::InfiniteNorm { .. })
    ));
    assert_eq!(t.bergman_coefficient(&mi(&[-1])), 0.0);
}

#[test]
fn table_domain_moments_through_sampling_fallback() {
    // fine grid tabulating the unit square region {t < (0.75, 0.5)}
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("grid.csv");
    let n = 64usize;
    let mut rows = String::new();
    for i in 0..n {
        for j in 0..n {
            let x = (i as f64 + 0.5) / n as f64;
            let y = (j as f64 + 0.5) / n as f64;
            let flag = if x < 0.75 && y < 0.5 { 1 } else { 0 };
            rows.push_str(&format!("{x},{y},{flag}\n"));
        }
    }
    std::fs::write(&path, rows).unwrap();
    let d = DomainProfile::from_table(&path, false).unwrap();
    let t = MomentTable::new(&d, 1e-7).unwrap();
    // tabulated geometry is only grid-accurate: expect percent-level error
    let norm = t.monomial_norm(&mi(&[0, 0])).unwrap();
    let expect = std::f64::consts::PI.powi(2) * (0.75f64.powi(2)) * (0.5f64.powi(2));
    let rel = ((norm - expect) / expect).abs();
    assert!(rel < 0.05, "table norm {norm} vs {expect} (rel {rel:.2e})");
}
