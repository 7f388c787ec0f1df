//! Moments at θ = 0 against unconstrained counts, and the full moment
//! against constrained counts, on the same samples.

use rmfkit::dcount::{count_system, CountOptions, SystemKind};
use rmfkit::rmf::RmfKind;
use rmfkit::stats::longtail_compare;

#[test]
fn both_sides_match_their_counts() {
    let opts = CountOptions::default();
    for kind in [RmfKind::Rademacher, RmfKind::Steinhaus] {
        let system = SystemKind::for_kind(kind);
        for (n, k) in [(6u64, 2u32), (10, 2), (7, 3)] {
            let rep = longtail_compare(kind, n, k, 20_000, 40 + n, 4.0).unwrap();
            assert!(rep.pass);
            let scale = (n as f64).powi(k as i32);
            let at_zero = count_system(system, k, k, n, false, &opts).unwrap().total as f64 / scale;
            let moment = count_system(system, k, k, n, true, &opts).unwrap().total as f64 / scale;
            let z0 = (rep.at_zero.mean.re - at_zero) / rep.at_zero.std_error;
            let z1 = (rep.moment.mean.re - moment) / rep.moment.std_error;
            assert!(z0.abs() < 4.0, "{kind} N={n} k={k}: P(0) side z={z0}");
            assert!(z1.abs() < 4.0, "{kind} N={n} k={k}: moment side z={z1}");
            assert!(moment <= at_zero);
        }
    }
}

#[test]
fn steinhaus_first_moment_is_one_on_both_sides() {
    let rep = longtail_compare(RmfKind::Steinhaus, 500, 1, 4000, 1, 4.0).unwrap();
    assert!((rep.moment.mean.re - 1.0).abs() < 1e-12);
    assert!((rep.at_zero.mean.re - 1.0).abs() < 4.0 * rep.at_zero.std_error);
}

#[test]
fn origin_dominates_in_the_long_tail() {
    let rep = longtail_compare(RmfKind::Rademacher, 1 << 10, 6, 400, 3, 4.0).unwrap();
    assert!(rep.pass);
    assert!(rep.ratio >= 1.0, "ratio {}", rep.ratio);
}
