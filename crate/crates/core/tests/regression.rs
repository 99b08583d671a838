//! Frozen regression constants for the seeded reference data. These pin the
//! exact behavior of the generator, the decay sums, and the Monte Carlo
//! sampler across refactors; any drift is a reproducibility break, not a
//! tolerance issue.

use spectra_core::classify::estimate_measure_ratio;
use spectra_core::geometry::BoxGeometry;
use spectra_core::lattice::Direction;
use spectra_core::params::AsymptoticParams;
use spectra_core::potential::MatrixFourierPotential;

const PI: f64 = std::f64::consts::PI;

fn square_pi() -> BoxGeometry {
    BoxGeometry::new(vec![PI, PI]).unwrap()
}

#[test]
fn measure_ratios_for_seed_1() {
    let e1 = Direction::new(0, 2).unwrap();
    let geom = square_pi();
    // (rho, ratio, accepted, excluded)
    let expected = [
        (10.0, 0.03948609616432168, 75_267, 72_295),
        (20.0, 0.1226083716969584, 75_158, 65_943),
        (40.0, 0.24502562054967725, 75_135, 56_725),
    ];
    for (rho, ratio, accepted, excluded) in expected {
        let params = AsymptoticParams::new(rho, 0.04, 17, 2).unwrap();
        let est = estimate_measure_ratio(e1, &params, &geom, 100_000, 1).unwrap();
        assert_eq!(est.accepted, accepted, "accept count drifted at rho={rho}");
        assert_eq!(
            est.excluded, excluded,
            "exclusion count drifted at rho={rho}"
        );
        assert!(
            (est.ratio - ratio).abs() < 1e-15,
            "ratio drifted at rho={rho}: {}",
            est.ratio
        );
    }
    // the single-resonance fraction grows along the grid
    assert!(expected[0].1 < expected[1].1 && expected[1].1 < expected[2].1);
}

#[test]
fn decay_sums_for_seed_7() {
    let v = MatrixFourierPotential::generate_random(square_pi(), 7, 2, 17, 2.5e5, 3.0).unwrap();
    let rep = v.validate_decay();
    let expected_s = [
        (0, 0, 226734.09436585256),
        (0, 1, 432221.2624601033),
        (1, 1, 224377.25935507813),
    ];
    for (i, j, want) in expected_s {
        let got = rep.weighted_sums.get(i, j);
        assert!(
            (got - want).abs() <= want * 1e-15,
            "S[{i}][{j}] drifted: {got}"
        );
        assert!(got.is_finite());
    }
    let expected_m = [
        (0, 0, 0.6149574182030035),
        (0, 1, 0.927227656875334),
        (1, 1, 1.027295611429193),
    ];
    for (i, j, want) in expected_m {
        let got = rep.mass.get(i, j);
        assert!(
            (got - want).abs() <= want * 1e-15,
            "M[{i}][{j}] drifted: {got}"
        );
    }
    assert_eq!(v.support_radius(), 3.0);
    assert!((v.sup_norm_bound() - 1.7434547096979278).abs() < 1e-14);
}
