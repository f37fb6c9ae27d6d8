//! Acceptance suite. Prints one PASS/FAIL line per criterion, then fails if
//! any criterion failed. Run with `--nocapture` to see the lines.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use tale::config::{parse_config, Engine};
use tale::io::read_fixture;
use tale::sweep::run_sweep;
use tale_core::analysis::{collapse_tail_pose, one_way_anova, tip_metrics};
use tale_core::elements::{BarElement, FdConfig, SpringElement};
use tale_core::geometry::{build_tail, JointProfile, MorphologySpec, StandardTail, TailModel};
use tale_core::linalg::Matrix;
use tale_core::oracle::minimize_total_energy;
use tale_core::solver::{euler_solve, LoadCase};
use tale_core::tail::{
    calibrate_linear, calibrate_spring_stiffness, predict_pose_uniform, single_joint_travel,
    uniform_bend_angle, CalibrationSettings, FitMode,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/instron_joint.csv")
}

fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn frob(m: &Matrix) -> f64 {
    m.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `k n nᵀ` blocks of the textbook truss element.
fn truss(k: f64, n: [f64; 3]) -> Vec<f64> {
    let mut out = vec![0.0; 36];
    for a in 0..6 {
        for b in 0..6 {
            let sign = if (a < 3) == (b < 3) { 1.0 } else { -1.0 };
            out[a * 6 + b] = sign * k * n[a % 3] * n[b % 3];
        }
    }
    out
}

fn random_unit<R: Rng>(rng: &mut R) -> [f64; 3] {
    let n = Normal::new(0.0, 1.0).unwrap();
    loop {
        let v: [f64; 3] = [n.sample(rng), n.sample(rng), n.sample(rng)];
        let l = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if l > 1e-3 {
            return v.map(|x| x / l);
        }
    }
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let fd = FdConfig::default();
    let mut worst_bar: f64 = 0.0;
    for _ in 0..20 {
        let n = random_unit(&mut rng);
        let length = rng.gen_range(2.0..40.0);
        let k = rng.gen_range(0.5..50.0);
        let o = [rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0)];
        let pos = [o[0], o[1], o[2], o[0] + length * n[0], o[1] + length * n[1], o[2] + length * n[2]];
        let bar = BarElement::between([0, 1], k, &pos[..3], &pos[3..]).unwrap();
        let got = bar.local_stiffness(&pos, 3, &fd).unwrap().matrix;
        let want = truss(k, n);
        let diff: f64 = got.as_slice().iter().zip(&want).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = want.iter().map(|v| v * v).sum::<f64>().sqrt();
        worst_bar = worst_bar.max(diff / norm);
    }
    // the model's springs: straight at rest, evaluated bent
    let mut worst_spring: f64 = 0.0;
    for _ in 0..20 {
        let axis = random_unit(&mut rng);
        let side = random_unit(&mut rng);
        let arm = rng.gen_range(3.0..12.0);
        let bend = rng.gen_range(-0.8..0.8);
        let v = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
        let rest: Vec<f64> = [-arm, 0.0, arm].iter().flat_map(|s| (0..3).map(move |i| v[i] + s * axis[i])).collect();
        let spring = SpringElement::between([0, 1, 2], 48.484, &rest[..3], &rest[3..6], &rest[6..]).unwrap();
        let mut x = rest.clone();
        for i in 0..3 {
            x[6 + i] += arm * bend * side[i];
        }
        let delta = 1e-4 * spring.characteristic_length(&rest, 3);
        let k = spring.local_stiffness(&x, 3, delta).unwrap().matrix;
        let t = random_unit(&mut rng);
        let shift: Vec<f64> = (0..3).flat_map(|_| t).collect();
        let r: f64 = k.mul_vec(&shift).iter().map(|v| v * v).sum::<f64>().sqrt();
        worst_spring = worst_spring.max(r / frob(&k));
    }
    outcome(
        worst_bar < 1e-5 && worst_spring < 1e-6,
        format!("bar max rel err {worst_bar:.2e}, spring max |K t|/|K| {worst_spring:.2e}"),
    )
}

fn calibrated_sample() -> (MorphologySpec, f64, f64) {
    let fit = calibrate_linear(&read_fixture(&fixture()).unwrap(), FitMode::ThroughOrigin).unwrap();
    let k = calibrate_spring_stiffness(&fit, &JointProfile::standard()).unwrap();
    let spec = MorphologySpec::single_joint(JointProfile::standard().with_spring_stiffness(k));
    (spec, k, fit.r_squared)
}

fn r_squared_affine(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let (mx, my) = (
        pts.iter().map(|p| p.0).sum::<f64>() / n,
        pts.iter().map(|p| p.1).sum::<f64>() / n,
    );
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    sxy * sxy / (sxx * syy)
}

fn criterion_2() -> Outcome {
    let (spec, k, fixture_r2) = calibrated_sample();
    let settings = CalibrationSettings::default();
    let mut curve = vec![(0.0, 0.0)];
    for i in 1.. {
        let f = 0.05 * i as f64;
        let d = single_joint_travel(&spec, f, &settings).unwrap();
        if d > 9.0 {
            break;
        }
        curve.push((d, f));
    }
    let r2 = r_squared_affine(&curve);
    outcome(
        r2 >= 0.99,
        format!(
            "k_theta {k:.3} N*mm/rad, {} samples to {:.2} mm, R^2 {r2:.5} (fixture {fixture_r2:.4})",
            curve.len(),
            curve.last().unwrap().0
        ),
    )
}

fn criterion_3() -> Outcome {
    let (spec, _, _) = calibrated_sample();
    let d = single_joint_travel(&spec, 0.8143, &CalibrationSettings::default()).unwrap();
    let err = (d - 3.0).abs() / 3.0;
    outcome(err < 0.04, format!("travel {d:.4} mm at 0.8143 N, {:.2}% off", 100.0 * err))
}

fn joint_model() -> TailModel {
    build_tail(&MorphologySpec::single_joint(JointProfile::standard())).unwrap()
}

fn criterion_4() -> Outcome {
    let m = joint_model();
    let h = m.joints[0].profile.length;
    let mut worst: f64 = 0.0;
    for i in 0..10 {
        let force = 0.1 + 2.4 * i as f64 / 9.0;
        let tracts: &[usize] = if i % 2 == 0 { &[0] } else { &[1, 2] };
        let r = euler_solve(&m, &LoadCase::force(tracts, force)).unwrap();
        let eq = minimize_total_energy(&m, &r.final_load, 1e-6).unwrap();
        for (p, q) in r.final_pose.iter().zip(&eq.positions) {
            worst = worst.max(dist(p, q));
        }
    }
    outcome(
        worst < 0.01 * h,
        format!("max node distance {worst:.2e} mm over 10 cases (limit {:.2} mm)", 0.01 * h),
    )
}

fn criterion_5() -> Outcome {
    // single joint over the force range, then the full sweep design
    let m = joint_model();
    let mut worst: f64 = 0.0;
    for i in 0..6 {
        let force = 0.1 + 0.48 * i as f64;
        let a = euler_solve(&m, &LoadCase::force(&[0], force).with_steps(200)).unwrap();
        let b = euler_solve(&m, &LoadCase::force(&[0], force).with_steps(400)).unwrap();
        let rest = m.nodes.last().unwrap();
        worst = worst.max(dist(&a.tip(), &b.tip()) / dist(&a.tip(), rest).max(1e-12));
    }
    let mut config = parse_config(&root().join("configs/sweep.toml")).unwrap();
    config.engine = Engine::Euler;
    config.solver.steps = 200;
    let coarse = run_sweep(&config, 0).unwrap();
    config.solver.steps = 400;
    let fine = run_sweep(&config, 0).unwrap();
    let mut worst_tail: f64 = 0.0;
    let ok = coarse.failures.is_empty() && fine.failures.is_empty();
    for (a, b) in coarse.rows.iter().zip(&fine.rows).filter(|(a, _)| a.joint_id == 3) {
        let dz = a.tip_perp_mm - b.tip_perp_mm;
        let dr = a.tip_radial_mm - b.tip_radial_mm;
        let scale = a.tip_perp_mm.hypot(a.tip_radial_mm);
        worst_tail = worst_tail.max(dz.hypot(dr) / scale);
    }
    outcome(
        ok && worst < 0.005 && worst_tail < 0.005,
        format!(
            "single joint {:.3e}%, 48 tail cases {:.3e}% tip change",
            100.0 * worst,
            100.0 * worst_tail
        ),
    )
}

fn criterion_6() -> (Outcome, String) {
    let models: Vec<TailModel> = StandardTail::ALL.iter().map(|t| build_tail(&t.spec()).unwrap()).collect();
    let metrics = |tracts: &[usize], d: f64| -> Vec<(f64, f64)> {
        models
            .iter()
            .map(|m| {
                let theta = uniform_bend_angle(m, tracts, d).unwrap();
                let tm = tip_metrics(&collapse_tail_pose(&predict_pose_uniform(m, theta, tracts).unwrap())).unwrap();
                (tm.radial_displacement, tm.perpendicular_distance)
            })
            .collect()
    };
    let ordered = |v: &[(f64, f64)]| v[0].0 > v[1].0 && v[0].0 > v[2].0 && v[0].1 < v[1].1 && v[0].1 < v[2].1;
    let mut pass = true;
    let mut detail = Vec::new();
    for d in [12.0, 21.0] {
        for t in 0..4 {
            let v = metrics(&[t], d);
            pass &= ordered(&v);
            if t == 0 {
                detail.push(format!(
                    "{d} mm radial {:.1}/{:.1}/{:.1} perp {:.1}/{:.1}/{:.1}",
                    v[0].0, v[1].0, v[2].0, v[0].1, v[1].1, v[2].1
                ));
            }
        }
    }
    let mut info = Vec::new();
    for d in [12.0, 21.0] {
        let v = metrics(&[0, 1], d);
        info.push(format!(
            "{d} mm {} (radial {:.1}/{:.1}/{:.1} perp {:.1}/{:.1}/{:.1})",
            if ordered(&v) { "ordered" } else { "not ordered" },
            v[0].0,
            v[1].0,
            v[2].0,
            v[0].1,
            v[1].1,
            v[2].1
        ));
    }
    (
        outcome(pass, format!("single-tract pulls, SSL/SLS/LSS: {}", detail.join("; "))),
        format!("two-tract pulls: {}", info.join("; ")),
    )
}

fn criterion_7() -> Outcome {
    let mut mirror: f64 = 0.0;
    let mut bone: f64 = 0.0;
    let mut exact_zero = true;
    for tail in StandardTail::ALL {
        let m = build_tail(&tail.spec()).unwrap();
        for (a, b) in [(0, 2), (1, 3)] {
            for d in [12.0, 21.0] {
                let pa = predict_pose_uniform(&m, uniform_bend_angle(&m, &[a], d).unwrap(), &[a]).unwrap();
                let pb = predict_pose_uniform(&m, uniform_bend_angle(&m, &[b], d).unwrap(), &[b]).unwrap();
                for (p, q) in pa.bone_centroids.iter().chain([&pa.tip]).zip(pb.bone_centroids.iter().chain([&pb.tip])) {
                    let e = (p[0] + q[0]).abs().max((p[1] + q[1]).abs()).max((p[2] - q[2]).abs());
                    mirror = mirror.max(e / m.total_length);
                }
                for (j, b) in m.bones.iter().enumerate() {
                    let s = pa.transform_point(j + 1, &[0.0, 0.0, b.start_z]);
                    let e = pa.transform_point(j + 1, &[0.0, 0.0, b.end_z()]);
                    bone = bone.max((dist(&s, &e) - b.length).abs() / b.length);
                }
            }
        }
        let rest = predict_pose_uniform(&m, uniform_bend_angle(&m, &[0], 0.0).unwrap(), &[0]).unwrap();
        for (c, b) in rest.bone_centroids.iter().zip(&m.bones) {
            exact_zero &= *c == [0.0, 0.0, b.centroid_z()];
        }
    }
    let j = joint_model();
    let a = euler_solve(&j, &LoadCase::force(&[0], 1.2)).unwrap();
    let b = euler_solve(&j, &LoadCase::force(&[2], 1.2)).unwrap();
    for (p, q) in a.final_pose.iter().zip(&b.final_pose) {
        let e = (p[0] + q[0]).abs().max((p[1] + q[1]).abs()).max((p[2] - q[2]).abs());
        mirror = mirror.max(e / j.total_length);
    }
    let zero = euler_solve(&j, &LoadCase::force(&[0], 0.0)).unwrap();
    exact_zero &= zero.final_pose == j.nodes;
    let zl = vec![[0.0; 3]; j.nodes.len()];
    exact_zero &= minimize_total_energy(&j, &zl, 1e-6).unwrap().positions == j.nodes;
    outcome(
        mirror <= 1e-9 && exact_zero && bone <= 1e-12,
        format!("mirror rel {mirror:.1e}, zero load exact {exact_zero}, bone length rel {bone:.1e}"),
    )
}

fn direct_f(groups: &[Vec<f64>]) -> f64 {
    // raw-sum form: SST = Σy² − (Σy)²/N, SSB = Σ T_i²/n_i − (Σy)²/N
    let n: usize = groups.iter().map(Vec::len).sum();
    let total: f64 = groups.iter().flatten().sum();
    let sq: f64 = groups.iter().flatten().map(|v| v * v).sum();
    let c = total * total / n as f64;
    let ssb: f64 = groups.iter().map(|g| g.iter().sum::<f64>().powi(2) / g.len() as f64).sum::<f64>() - c;
    let ssw = sq - c - ssb;
    let k = groups.len();
    (ssb / (k - 1) as f64) / (ssw / (n - k) as f64)
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let k = rng.gen_range(2..=5);
        let groups: Vec<Vec<f64>> = (0..k)
            .map(|_| {
                let n = rng.gen_range(2..=8);
                (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
            })
            .collect();
        let f = one_way_anova(&groups).unwrap().f;
        worst = worst.max((f - direct_f(&groups)).abs() / f);
    }
    let same = vec![vec![1.0, 2.5, 4.0]; 3];
    let f_same = one_way_anova(&same).unwrap().f;
    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    let sep: Vec<Vec<f64>> = [0.0, 100.0, 200.0]
        .iter()
        .map(|m| (0..40).map(|_| m + noise.sample(&mut rng)).collect())
        .collect();
    let p = one_way_anova(&sep).unwrap().p;
    outcome(
        worst <= 1e-9 && f_same == 0.0 && p < 1e-30,
        format!("max rel F err {worst:.1e}, identical F {f_same}, separated p {p:.1e}"),
    )
}

fn criterion_9() -> Outcome {
    let cfg = root().join("configs/sweep.toml");
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    let mut times = Vec::new();
    for run in 0..2 {
        let out = dir.path().join(format!("run{run}"));
        let start = Instant::now();
        let status = Command::new(env!("CARGO_BIN_EXE_tale"))
            .args(["sweep", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        times.push(start.elapsed());
        if !status.success() {
            return outcome(false, format!("sweep exited with {status}"));
        }
        outputs.push(std::fs::read(out.join("sweep.csv")).unwrap());
    }
    let rows = outputs[0].iter().filter(|&&b| b == b'\n').count() - 1;
    let slowest = times.iter().max().copied().unwrap_or(Duration::ZERO);
    outcome(
        outputs[0] == outputs[1] && slowest < Duration::from_secs(10) && rows == 48 * 3,
        format!(
            "{rows} rows, identical {}, slowest run {:.3} s",
            outputs[0] == outputs[1],
            slowest.as_secs_f64()
        ),
    )
}

#[test]
fn acceptance() {
    let mut failed = Vec::new();
    let mut report = |n: usize, limit: Option<f64>, f: &dyn Fn() -> Outcome| {
        let start = Instant::now();
        let mut o = f();
        let secs = start.elapsed().as_secs_f64();
        if let Some(l) = limit {
            if secs >= l {
                o.pass = false;
                o.detail.push_str(&format!(", over the {l} s budget"));
            }
        }
        println!(
            "criterion {n}: {} ({:.2} s) {}",
            if o.pass { "PASS" } else { "FAIL" },
            secs,
            o.detail
        );
        if !o.pass {
            failed.push(n);
        }
    };
    report(1, Some(1.0), &criterion_1);
    report(2, Some(10.0), &criterion_2);
    report(3, Some(5.0), &criterion_3);
    report(4, Some(60.0), &criterion_4);
    report(5, None, &criterion_5);
    let info = std::cell::RefCell::new(String::new());
    report(6, Some(1.0), &|| {
        let (o, i) = criterion_6();
        *info.borrow_mut() = i;
        o
    });
    println!("criterion 6 (informational): {}", info.borrow());
    report(7, None, &criterion_7);
    report(8, None, &criterion_8);
    report(9, Some(10.0), &criterion_9);
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
