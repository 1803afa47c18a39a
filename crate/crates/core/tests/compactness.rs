use mobius_energy_core::compactness::*;
use mobius_energy_core::moebius::{MoebiusMap, Primitive};
use mobius_energy_core::shapes::{ellipsoid, icosphere, pinch};
use mobius_energy_core::{Error, Points};
use std::f64::consts::{E, FRAC_1_SQRT_2, PI};

#[test]
fn holder_quotient_vanishes_on_a_flat_patch() {
    let ann = flat_annulus(1.0, 3.0, 8, 24).unwrap();
    assert!(holder_quotient_on(&ann.points, &ann.faces, 0.5, 0).unwrap() < 1e-12);
}

#[test]
fn holder_quotient_is_stable_under_refinement() {
    let coarse = gauss_holder_quotient(&icosphere(3, 3).unwrap(), 0.5, 0).unwrap();
    let fine = gauss_holder_quotient(&icosphere(4, 3).unwrap(), 0.5, 0).unwrap();
    assert!(coarse.is_finite() && fine.is_finite());
    assert!((coarse - fine).abs() <= 0.25 * fine, "{coarse} vs {fine}");
}

#[test]
fn holder_quotient_sees_a_pinch() {
    let round = gauss_holder_quotient(&icosphere(4, 3).unwrap(), 0.5, 0).unwrap();
    let pinched = gauss_holder_quotient(&pinch(0.1, 4, 3).unwrap(), 0.5, 0).unwrap();
    assert!(pinched >= 3.0 * round, "{pinched} vs {round}");
}

#[test]
fn holder_quotient_rejects_bad_exponent() {
    let m = icosphere(2, 3).unwrap();
    assert!(gauss_holder_quotient(&m, 0.0, 0).is_err());
    assert!(gauss_holder_quotient(&m, 1.0, 0).is_err());
}

#[test]
fn sheet_counts() {
    let sphere = icosphere(3, 3).unwrap();
    assert_eq!(sheet_count(&sphere, &[0.0, 0.0, 1.0], 0.3).unwrap(), 1);
    assert_eq!(sheet_count(&sphere, &[0.0, 0.0, 0.0], 5.0).unwrap(), 1);
    assert_eq!(sheet_count(&sphere, &[0.0, 0.0, 0.0], 0.5).unwrap(), 0);
    assert!(sheet_count(&sphere, &[0.0, 0.0, 0.0], 0.0).is_err());

    let disc = ellipsoid(1.0, 1.0, 0.05, 4, 3).unwrap();
    assert_eq!(sheet_count(&disc, &[0.0, 0.0, 0.0], 0.2).unwrap(), 2);

    let neck = pinch(0.05, 4, 3).unwrap();
    assert_eq!(sheet_count(&neck, &[0.0, 0.0, 0.0], 0.1).unwrap(), 2);
}

#[test]
fn cover_of_round_sphere_has_single_sheets() {
    let m = icosphere(4, 3).unwrap();
    let report = ball_cover(&m, 0.2).unwrap();
    assert_eq!(report.total_balls, report.balls.len());
    for ball in &report.balls {
        assert_eq!(ball.sheet_count, 1);
        assert!(
            ball.max_bilip >= 1.0 && ball.max_bilip <= 1.1,
            "{}",
            ball.max_bilip
        );
    }
    for p in m.image().iter() {
        assert!(report
            .balls
            .iter()
            .any(|b| mobius_energy_core::linalg::dist(p, &b.center.0) <= b.radius));
    }
}

#[test]
fn cover_size_tracks_geometry_and_delta() {
    let m4 = icosphere(4, 3).unwrap();
    let m5 = icosphere(5, 3).unwrap();
    let n4 = ball_cover(&m4, 0.2).unwrap().total_balls;
    let n5 = ball_cover(&m5, 0.2).unwrap().total_balls;
    assert!(n5 <= 2 * n4 && n4 <= 2 * n5, "{n4} vs {n5}");
    let mut last = 0;
    for delta in [0.8, 0.4, 0.2, 0.1] {
        let n = ball_cover(&m4, delta).unwrap().total_balls;
        assert!(n >= last, "delta {delta}: {n} < {last}");
        last = n;
    }
}

#[test]
fn cover_finds_two_sheets_at_the_neck() {
    let report = ball_cover(&pinch(0.05, 4, 3).unwrap(), 0.2).unwrap();
    assert!(report.balls.iter().any(|b| b.sheet_count == 2));
}

#[test]
fn cover_rejects_delta_out_of_range() {
    let m = icosphere(2, 3).unwrap();
    for delta in [0.0, 1.0, -0.5, f64::NAN] {
        assert!(matches!(
            ball_cover(&m, delta),
            Err(Error::InvalidParameter(_))
        ));
    }
}

#[test]
fn disk_pair_diverges_like_inverse_square() {
    let near = disk_pair_integral(1.0, 0.02, 64).unwrap();
    let far = disk_pair_integral(1.0, 0.04, 64).unwrap();
    assert!(near.converged && far.converged);
    let ratio = near.value / far.value;
    assert!((3.5..=4.5).contains(&ratio), "{ratio}");
}

#[test]
fn disk_pair_scales_with_area() {
    let small = disk_pair_integral(1.0, 0.02, 64).unwrap().value;
    let big = disk_pair_integral(2.0, 0.02, 64).unwrap().value;
    assert!((big / small - 4.0).abs() <= 0.6, "{}", big / small);
}

#[test]
fn disk_pair_far_field() {
    let v = disk_pair_integral(1.0, 10.0, 64).unwrap().value;
    let approx = PI * PI / 1e4;
    assert!((v / approx - 1.0).abs() <= 0.2, "{v} vs {approx}");
}

#[test]
fn disk_pair_rejects_bad_input() {
    assert!(disk_pair_integral(0.0, 0.1, 64).is_err());
    assert!(disk_pair_integral(1.0, -0.1, 64).is_err());
    assert!(disk_pair_integral(1.0, 0.1, 16).is_err());
}

#[test]
fn annulus_modulus_matches_closed_form() {
    for (ratio, expected) in [(E, 1.0 / (2.0 * PI)), (E * E, 1.0 / PI)] {
        let ann = flat_annulus(1.0, ratio, 50, 100).unwrap();
        assert!(ann.faces.len() >= 9000);
        let m = ann.modulus().unwrap();
        assert!((m - expected).abs() <= 0.02 * expected, "{m} vs {expected}");
        assert!((round_annulus_modulus(1.0, ratio) - expected).abs() < 1e-15);
    }
}

#[test]
fn annulus_modulus_is_conformally_invariant() {
    let ann = flat_annulus(1.0, E, 50, 100).unwrap();
    let before = ann.modulus().unwrap();
    let map = MoebiusMap::new(vec![Primitive::inversion(vec![0.5, 0.0, 2.0], 1.5)]).unwrap();
    let after = ann
        .map_points(map.apply_points(&ann.points).unwrap())
        .unwrap()
        .modulus()
        .unwrap();
    assert!(
        (after - before).abs() <= 0.03 * before,
        "{before} -> {after}"
    );
}

#[test]
fn annulus_modulus_rejects_a_disk() {
    let ann = flat_annulus(1.0, 2.0, 4, 12).unwrap();
    let err = annulus_modulus(&ann.points, &ann.faces, &ann.inner, &ann.inner);
    assert!(matches!(err, Err(Error::Topology(_))));
    let half: Vec<_> = ann.faces[..ann.faces.len() / 2].to_vec();
    assert!(annulus_modulus(&ann.points, &half, &ann.inner, &ann.outer).is_err());
}

#[test]
fn kuiper_on_round_sphere() {
    let v = kuiper_selfdistance(&icosphere(4, 3).unwrap(), PI / 2.0).unwrap();
    assert!((v - FRAC_1_SQRT_2).abs() <= 0.1 * FRAC_1_SQRT_2, "{v}");
    assert!(matches!(
        kuiper_selfdistance(&icosphere(2, 3).unwrap(), 10.0),
        Err(Error::Undefined(_))
    ));
}

#[test]
fn kuiper_is_rigid_invariant() {
    let m = pinch(0.2, 3, 3).unwrap();
    let map = MoebiusMap::new(vec![
        Primitive::Orthogonal {
            dim: 3,
            matrix: vec![0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0],
        },
        Primitive::translation(vec![3.0, -1.0, 0.5]),
    ])
    .unwrap();
    let moved = m.with_image(map.apply_points(m.image()).unwrap()).unwrap();
    let a = kuiper_selfdistance(&m, 1.0).unwrap();
    let b = kuiper_selfdistance(&moved, 1.0).unwrap();
    assert!((a - b).abs() <= 1e-10 * a);
}

#[test]
fn pinch_family_energy_and_kuiper_are_ranked() {
    use mobius_energy_core::surface_energy::surface_e0;
    let mut last: Option<(f64, f64)> = None;
    for gap in [0.4, 0.2, 0.1, 0.05] {
        let m = pinch(gap, 3, 3).unwrap();
        let e = surface_e0(&m).unwrap();
        let k = kuiper_selfdistance(&m, 1.0).unwrap();
        if let Some((e0, k0)) = last {
            assert!(
                e > e0 && k < k0,
                "gap {gap}: e {e0} -> {e}, kuiper {k0} -> {k}"
            );
        }
        last = Some((e, k));
    }
}

#[test]
fn empty_point_set_has_no_sheets() {
    let m = icosphere(1, 3).unwrap();
    let far = Points::from_rows(3, &[[10.0, 0.0, 0.0]]).unwrap();
    assert_eq!(sheet_count(&m, far.row(0), 1.0).unwrap(), 0);
}
