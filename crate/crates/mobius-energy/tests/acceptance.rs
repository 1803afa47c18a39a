//! Acceptance run: one line per criterion, non-zero exit if any fails.

use std::f64::consts::{E, PI, TAU};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use mobius_energy_core::compactness::{
    ball_cover, disk_pair_integral, flat_annulus, kuiper_selfdistance, sheet_count,
};
use mobius_energy_core::conformal::{conformalize, ConformalizeOptions};
use mobius_energy_core::curvature::total_angle_defect;
use mobius_energy_core::curve_energy::{curve_e0, curve_e_lambda};
use mobius_energy_core::moebius::{random_safe, MoebiusMap, Primitive};
use mobius_energy_core::optimize::{
    descend, fd_gradient, richardson_ratio, DescentOptions, EnergyKind, Objective, Shape,
};
use mobius_energy_core::reduce::tree_sum;
use mobius_energy_core::shapes::{
    ellipsoid, icosphere, make_curve, pinch, spun_knot, ArcKind, CurveKind,
};
use mobius_energy_core::surface_energy::{
    invariance_trials, relative_spread, schwarz_check, surface_e0, willmore_term, SurfaceOptions,
};
use mobius_energy_core::{linalg, Points, SphereMesh};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn e<T: std::fmt::Debug>(x: T) -> String {
    format!("{x:?}")
}

fn rotation(a: f64, b: f64, c: f64) -> Vec<f64> {
    let rz = |t: f64| {
        [
            [t.cos(), -t.sin(), 0.0],
            [t.sin(), t.cos(), 0.0],
            [0.0, 0.0, 1.0],
        ]
    };
    let rx = |t: f64| {
        [
            [1.0, 0.0, 0.0],
            [0.0, t.cos(), -t.sin()],
            [0.0, t.sin(), t.cos()],
        ]
    };
    let mul = |x: [[f64; 3]; 3], y: [[f64; 3]; 3]| {
        let mut z = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                z[i][j] = (0..3).map(|k| x[i][k] * y[k][j]).sum();
            }
        }
        z
    };
    mul(rz(a), mul(rx(b), rz(c)))
        .iter()
        .flatten()
        .copied()
        .collect()
}

fn rigid_copy(m: &SphereMesh, radius: f64, angles: [f64; 3], shift: [f64; 3]) -> SphereMesh {
    let map = MoebiusMap::new(vec![
        Primitive::Scaling(radius),
        Primitive::Orthogonal {
            dim: 3,
            matrix: rotation(angles[0], angles[1], angles[2]),
        },
        Primitive::translation(shift.to_vec()),
    ])
    .unwrap();
    m.with_image(map.apply_points(m.image()).unwrap()).unwrap()
}

fn conformal(m: SphereMesh) -> Result<SphereMesh, String> {
    Ok(conformalize(&m, ConformalizeOptions::default())
        .map_err(e)?
        .mesh)
}

fn c01() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for n in [8, 64, 512] {
        let c = make_curve(&CurveKind::Circle, n)
            .map_err(e)?
            .normalize()
            .map_err(e)?;
        worst = worst.max(curve_e0(&c).map_err(e)?.abs());
    }
    let t = start.elapsed();
    ensure(
        worst <= 1e-10 && t < Duration::from_secs(1),
        format!("max |E0| = {worst:.3e}, {:.2} s", t.as_secs_f64()),
    )
}

fn c02() -> Outcome {
    let c = make_curve(&CurveKind::Circle, 256)
        .map_err(e)?
        .normalize()
        .map_err(e)?;
    let total = curve_e_lambda(&c, 1.0).map_err(e)?.total;
    ensure(
        (total - TAU).abs() <= 1e-3,
        format!("total = {total:.9}, 2 pi = {TAU:.9}"),
    )
}

fn c03() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut s5 = Duration::ZERO;
    for subdiv in 3..=5 {
        let base = icosphere(subdiv, 3).map_err(e)?;
        for (k, r) in [1.0, 3.0].into_iter().enumerate() {
            let m = rigid_copy(
                &base,
                r,
                [0.3 + k as f64, 1.1, 2.0 - k as f64],
                [0.7, -1.9, 4.2],
            );
            let start = Instant::now();
            let area = tree_sum(&m.image_dual_areas().map_err(e)?);
            let v = surface_e0(&m).map_err(e)?;
            if subdiv == 5 {
                s5 = s5.max(start.elapsed());
            }
            worst = worst.max(v / (area * area));
        }
    }
    ensure(
        worst <= 1e-8 && s5 < Duration::from_secs(30),
        format!(
            "max E0 / area^2 = {worst:.3e}, subdiv 5 in {:.1} s",
            s5.as_secs_f64()
        ),
    )
}

fn c04() -> Outcome {
    let mut meshes: Vec<(String, SphereMesh)> = Vec::new();
    for s in 1..=5 {
        meshes.push((format!("icosphere {s}"), icosphere(s, 3).map_err(e)?));
    }
    for (a, b, c) in [
        (1.3, 1.0, 1.0),
        (2.0, 1.0, 1.0),
        (1.0, 1.0, 0.05),
        (3.0, 2.0, 0.5),
    ] {
        meshes.push((
            format!("ellipsoid {a},{b},{c}"),
            ellipsoid(a, b, c, 3, 3).map_err(e)?,
        ));
    }
    for gap in [0.4, 0.2, 0.1, 0.05] {
        meshes.push((format!("pinch {gap}"), pinch(gap, 4, 3).map_err(e)?));
    }
    meshes.push((
        "spun unknot".into(),
        spun_knot(ArcKind::Unknot, 3).map_err(e)?,
    ));
    meshes.push((
        "spun trefoil".into(),
        spun_knot(ArcKind::Trefoil, 3).map_err(e)?,
    ));
    let base = icosphere(3, 3).map_err(e)?;
    meshes.push((
        "inverted sphere".into(),
        random_safe(11, &base, 0.5)
            .map_err(e)?
            .apply_shape(&base)
            .map_err(e)?,
    ));
    let mut worst: f64 = 0.0;
    let mut which = String::new();
    for (name, m) in &meshes {
        let d = (total_angle_defect(m) - 4.0 * PI).abs();
        if d >= worst {
            worst = d;
            which = name.clone();
        }
    }
    ensure(
        worst <= 1e-9,
        format!(
            "{} meshes, max |sum - 4 pi| = {worst:.2e} ({which})",
            meshes.len()
        ),
    )
}

fn c05() -> Outcome {
    let base = icosphere(4, 3).map_err(e)?;
    let w1 = willmore_term(&rigid_copy(&base, 1.0, [0.0; 3], [0.0; 3])).map_err(e)?;
    let w3 =
        willmore_term(&rigid_copy(&base, 3.0, [0.4, 0.2, 0.9], [1.0, 2.0, -3.0])).map_err(e)?;
    let target = 8.0 * PI;
    let off = (w1 - target).abs() / target;
    let agree = (w1 - w3).abs() / w1;
    ensure(
        off <= 0.05 && agree <= 1e-10,
        format!(
            "W = {w1:.6} (8 pi {target:.6}, {:.2}%), radii differ by {agree:.1e}",
            100.0 * off
        ),
    )
}

fn c06() -> Outcome {
    let mut meshes = vec![
        icosphere(3, 3).map_err(e)?,
        ellipsoid(1.3, 1.0, 1.0, 3, 3).map_err(e)?,
        ellipsoid(3.0, 1.0, 0.4, 3, 3).map_err(e)?,
        pinch(0.05, 3, 3).map_err(e)?,
        spun_knot(ArcKind::Trefoil, 3).map_err(e)?,
    ];
    let base = icosphere(3, 3).map_err(e)?;
    meshes.push(
        random_safe(4, &base, 0.5)
            .map_err(e)?
            .apply_shape(&base)
            .map_err(e)?,
    );
    let mut checks = 0;
    for m in &meshes {
        for p in [1.1, 1.5, 2.0, 3.0, 6.0] {
            for lambda in [0.1, 1.0] {
                let s = schwarz_check(m, lambda, p).map_err(e)?;
                if !s.holds {
                    return Err(format!("fails: p {p}, lhs {} < rhs {}", s.lhs, s.rhs));
                }
                checks += 1;
            }
        }
    }
    let gap = |subdiv| -> Result<f64, String> {
        let s = schwarz_check(&icosphere(subdiv, 3).map_err(e)?, 1.0, 2.0).map_err(e)?;
        Ok((s.lhs - s.rhs).abs() / s.rhs)
    };
    let (g4, g6) = (gap(4)?, gap(6)?);
    ensure(
        g6 <= 1e-10,
        format!("{checks} inequality checks hold; round-sphere relative gap {g4:.1e} at subdiv 4, {g6:.1e} at subdiv 6"),
    )
}

fn c07() -> Outcome {
    let start = Instant::now();
    let spreads = |subdiv| -> Result<(f64, f64), String> {
        let m = conformal(ellipsoid(2.0, 1.0, 1.0, subdiv, 3).map_err(e)?)?;
        let t =
            invariance_trials(&m, 20, 2024, 0.5, 1.0, 2.0, SurfaceOptions::default()).map_err(e)?;
        let w: Vec<f64> = t.iter().map(|t| t.willmore).collect();
        let e0: Vec<f64> = t.iter().map(|t| t.e0).collect();
        Ok((relative_spread(&w), relative_spread(&e0)))
    };
    let (w4, e4) = spreads(4)?;
    let (w5, e5) = spreads(5)?;
    let t = start.elapsed();
    ensure(
        w4 <= 0.10 && e4 <= 0.15 && w5 < w4 && e5 < e4 && t < Duration::from_secs(300),
        format!(
            "willmore spread {w4:.2e} -> {w5:.2e}, E0 spread {e4:.3} -> {e5:.3}, {:.0} s",
            t.as_secs_f64()
        ),
    )
}

fn c08() -> Outcome {
    let start = Instant::now();
    let m = ellipsoid(1.3, 1.0, 1.0, 3, 3).map_err(e)?;
    let tr = descend(
        EnergyKind::SurfaceE0,
        &Shape::Sphere(m),
        DescentOptions {
            steps: 200,
            ..Default::default()
        },
    )
    .map_err(e)?;
    let (a, b) = (tr.initial(), tr.last());
    let drop = 1.0 - b.total / a.total;
    let t = start.elapsed();
    ensure(
        tr.is_monotone()
            && drop >= 0.30
            && b.sphericity < a.sphericity
            && t < Duration::from_secs(600),
        format!(
            "{} steps ({:?}), E0 {:.4} -> {:.4} ({:.0}% drop), sphericity {:.4} -> {:.4}, {:.0} s",
            tr.records.len() - 1,
            tr.status,
            a.total,
            b.total,
            100.0 * drop,
            a.sphericity,
            b.sphericity,
            t.as_secs_f64()
        ),
    )
}

fn c09() -> Outcome {
    let mut energy = Vec::new();
    let mut kuiper = Vec::new();
    for gap in [0.4, 0.2, 0.1, 0.05] {
        let m = pinch(gap, 4, 3).map_err(e)?;
        energy.push(surface_e0(&m).map_err(e)?);
        kuiper.push(kuiper_selfdistance(&m, 1.0).map_err(e)?);
    }
    let up = energy.windows(2).all(|w| w[1] > w[0]);
    let down = kuiper.windows(2).all(|w| w[1] < w[0]);
    let fmt = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x:.4}"))
            .collect::<Vec<_>>()
            .join(", ")
    };
    ensure(
        up && down,
        format!("E0 [{}], kuiper [{}]", fmt(&energy), fmt(&kuiper)),
    )
}

fn c10() -> Outcome {
    let near = disk_pair_integral(1.0, 0.02, 64).map_err(e)?;
    let far = disk_pair_integral(1.0, 0.04, 64).map_err(e)?;
    let ratio = near.value / far.value;
    ensure(
        near.converged && far.converged && (3.5..=4.5).contains(&ratio),
        format!(
            "I(0.02) / I(0.04) = {ratio:.4}, last changes {:.1e} and {:.1e}",
            near.change, far.change
        ),
    )
}

fn c11() -> Outcome {
    let ann = flat_annulus(1.0, E, 50, 100).map_err(e)?;
    let m = ann.modulus().map_err(e)?;
    let target = 1.0 / TAU;
    let map = MoebiusMap::new(vec![Primitive::inversion(vec![0.5, 0.0, 2.0], 1.5)]).map_err(e)?;
    let moved = ann
        .map_points(map.apply_points(&ann.points).map_err(e)?)
        .map_err(e)?
        .modulus()
        .map_err(e)?;
    let off = (m - target).abs() / target;
    let drift = (moved - m).abs() / m;
    ensure(
        off <= 0.02 && drift <= 0.03,
        format!(
            "modulus {m:.6} vs {target:.6} ({:.2}%), after inversion {moved:.6} ({:.2}%)",
            100.0 * off,
            100.0 * drift
        ),
    )
}

fn c12() -> Outcome {
    let round = ball_cover(&icosphere(4, 3).map_err(e)?, 0.2).map_err(e)?;
    let single = round.balls.iter().all(|b| b.sheet_count == 1);
    let neck = pinch(0.05, 4, 3).map_err(e)?;
    let at_neck = sheet_count(&neck, &[0.0, 0.0, 0.0], 0.1).map_err(e)?;
    let cover = ball_cover(&neck, 0.2).map_err(e)?;
    let max = cover.balls.iter().map(|b| b.sheet_count).max().unwrap_or(0);
    ensure(
        single && at_neck == 2 && max == 2,
        format!(
            "sphere: {} balls, all single sheet = {single}; pinch 0.05: {at_neck} sheets at the neck, cover max {max} over {} balls",
            round.total_balls, cover.total_balls
        ),
    )
}

fn c13() -> Outcome {
    let knot = conformal(spun_knot(ArcKind::Trefoil, 4).map_err(e)?)?;
    let e_knot = surface_e0(&knot).map_err(e)?;
    let round = icosphere(4, 4).map_err(e)?;
    let e_round = surface_e0(&round).map_err(e)?;
    let inverted = random_safe(7, &round, 0.5)
        .map_err(e)?
        .apply_shape(&round)
        .map_err(e)?;
    let e_inverted = surface_e0(&inverted).map_err(e)?;
    ensure(
        e_knot >= 10.0 * e_round && e_knot >= 10.0 * e_inverted,
        format!(
            "spun trefoil E0 = {e_knot:.2}, round {e_round:.2e}, inverted round {e_inverted:.2e}"
        ),
    )
}

fn c14() -> Outcome {
    let mut ratios = Vec::new();
    for seed in 0..4 {
        let c = make_curve(
            &CurveKind::PerturbedCircle {
                amp: 0.1,
                mode: 3 + seed as u32,
                seed,
            },
            48,
        )
        .map_err(e)?;
        let s = Shape::Curve(c.normalize().map_err(e)?);
        let obj = Objective::new(EnergyKind::CurveE0, &s).map_err(e)?;
        ratios.push(ratio(&obj, s.points(), 1e-2)?);
    }
    for (a, c) in [(1.2, 0.9), (1.4, 0.8)] {
        let s = Shape::Sphere(ellipsoid(a, 1.0, c, 2, 3).map_err(e)?);
        let obj = Objective::new(EnergyKind::SurfaceE0, &s).map_err(e)?;
        ratios.push(ratio(&obj, s.points(), 4e-3)?);
    }
    let worst_ratio = ratios.iter().copied().fold(0.0, f64::max);
    let s = Shape::Sphere(ellipsoid(1.3, 1.0, 0.9, 2, 3).map_err(e)?);
    let obj = Objective::new(
        EnergyKind::SurfaceELambda {
            lambda: 0.5,
            p: 2.0,
        },
        &s,
    )
    .map_err(e)?;
    let fast = obj.gradient(s.points(), 1e-4).map_err(e)?.grad;
    let full = fd_gradient(|p| obj.evaluate(p, false).total, s.points(), 1e-4)
        .map_err(e)?
        .grad;
    let diff: Vec<f64> = fast
        .as_flat()
        .iter()
        .zip(full.as_flat())
        .map(|(a, b)| a - b)
        .collect();
    let rel = linalg::norm(&diff) / linalg::norm(full.as_flat());
    ensure(
        worst_ratio <= 4.5 && rel <= 1e-4,
        format!("max Richardson ratio {worst_ratio:.3} over {} shapes; local vs full differences {rel:.1e}", ratios.len()),
    )
}

fn ratio(obj: &Objective, x: &Points, h: f64) -> Result<f64, String> {
    let g: Vec<Points> = [h, h / 2.0, h / 4.0]
        .iter()
        .map(|&h| obj.gradient(x, h).map(|g| g.grad))
        .collect::<Result<_, _>>()
        .map_err(e)?;
    Ok(richardson_ratio(&g[0], &g[1], &g[2]))
}

fn cli(dir: &Path, threads: &str, args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_mobius-energy"))
        .current_dir(dir)
        .env_remove("ENERGY_THREADS")
        .arg("--threads")
        .arg(threads)
        .args(args)
        .output()
        .map_err(e)?;
    if !out.status.success() {
        return Err(format!(
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr).trim()
        ));
    }
    Ok(out.stdout)
}

fn c15() -> Outcome {
    let root = tempfile::tempdir().map_err(e)?;
    let runs: &[&[&str]] = &[
        &[
            "generate",
            "ellipsoid",
            "--a",
            "2",
            "--subdiv",
            "3",
            "--conformalize",
            "--out",
            "e.json",
        ],
        &[
            "generate", "pinch", "--gap", "0.05", "--subdiv", "3", "--out", "p.json",
        ],
        &[
            "generate",
            "perturbed-circle",
            "--n",
            "64",
            "--amp",
            "0.1",
            "--out",
            "c.json",
        ],
        &["generate", "spun-knot", "--subdiv", "3", "--out", "k.json"],
        &["generate", "annulus", "--out", "a.json"],
        &[
            "energy",
            "surface",
            "--in",
            "e.json",
            "--report",
            "surface.json",
        ],
        &[
            "energy",
            "surface",
            "--in",
            "k.json",
            "--conformalize",
            "--report",
            "knot.json",
        ],
        &[
            "energy",
            "curve",
            "--in",
            "c.json",
            "--lambda",
            "1",
            "--report",
            "curve.json",
        ],
        &[
            "invariance",
            "--in",
            "e.json",
            "--trials",
            "6",
            "--report",
            "invariance.csv",
        ],
        &[
            "minimize",
            "--in",
            "c.json",
            "--energy",
            "curve-e0",
            "--steps",
            "10",
            "--log",
            "curve.csv",
            "--out",
            "cmin.json",
        ],
        &[
            "minimize",
            "--in",
            "e.json",
            "--energy",
            "surface-e0",
            "--steps",
            "4",
            "--log",
            "surf.csv",
            "--out",
            "smin.json",
        ],
        &[
            "cover",
            "--in",
            "p.json",
            "--delta",
            "0.2",
            "--report",
            "cover.json",
        ],
        &[
            "kuiper",
            "--in",
            "p.json",
            "--rho",
            "1",
            "--report",
            "kuiper.json",
        ],
        &["holder", "--in", "p.json", "--report", "holder.json"],
        &["modulus", "--in", "a.json", "--report", "modulus.json"],
        &["diskpair", "--eps", "0.02", "--report", "diskpair.json"],
        &[
            "transform",
            "--in",
            "e.json",
            "--out",
            "t.json",
            "--map-out",
            "map.json",
        ],
    ];
    let mut per_thread = Vec::new();
    for threads in ["1", "4"] {
        let dir = root.path().join(threads);
        std::fs::create_dir(&dir).map_err(e)?;
        let mut outputs = Vec::new();
        for args in runs {
            outputs.push(cli(&dir, threads, args)?);
        }
        let mut files: Vec<_> = std::fs::read_dir(&dir)
            .map_err(e)?
            .map(|f| f.unwrap().file_name())
            .collect();
        files.sort();
        for f in &files {
            outputs.push(std::fs::read(dir.join(f)).map_err(e)?);
        }
        per_thread.push((files, outputs));
    }
    let (one, four) = (&per_thread[0], &per_thread[1]);
    let bytes: usize = one.1.iter().map(Vec::len).sum();
    ensure(
        one == four,
        format!(
            "{} commands, {} files, {bytes} bytes compared",
            runs.len(),
            one.0.len()
        ),
    )
}

fn main() {
    let criteria: [Criterion; 15] = [
        ("round circle has zero energy", c01),
        ("regularized circle energy", c02),
        ("round sphere has zero energy", c03),
        ("angle defects sum to 4 pi", c04),
        ("Willmore term of the round sphere", c05),
        ("Schwarz inequality", c06),
        ("Moebius invariance", c07),
        ("descent towards the round sphere", c08),
        ("pinch family blow-up", c09),
        ("disk pair divergence", c10),
        ("annulus modulus", c11),
        ("sheet counts", c12),
        ("knotted sphere energy", c13),
        ("gradient consistency", c14),
        ("determinism across thread counts", c15),
    ];
    let only: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.contains(&(i + 1)) {
            continue;
        }
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "criterion {:>2} {tag}: {name}: {detail} [{secs:.1} s]",
            i + 1
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
