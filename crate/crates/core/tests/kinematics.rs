use proptest::prelude::*;
use tale_core::geometry::{build_tail, JointProfile, MorphologySpec, StandardTail, TailModel};
use tale_core::math::distance;
use tale_core::tail::{
    maximum_shortening, pose_from_angles, predict_pose_uniform, tendon_path_length,
    uniform_bend_angle,
};

fn standard(i: usize) -> TailModel {
    build_tail(&StandardTail::ALL[i].spec()).unwrap()
}

fn tip_radial(m: &TailModel, theta: f64) -> f64 {
    let tip = predict_pose_uniform(m, theta, &[0]).unwrap().tip;
    tip[0].hypot(tip[1])
}

proptest! {
    #[test]
    fn commanded_travel_round_trips(tail in 0..3usize, tract in 0..4usize, frac in 0.001..0.95f64) {
        let m = standard(tail);
        let (max, _) = maximum_shortening(&m, &[tract]).unwrap();
        let d = frac * max;
        let theta = uniform_bend_angle(&m, &[tract], d).unwrap();
        let pose = predict_pose_uniform(&m, theta, &[tract]).unwrap();
        let got = m.rest_tract_length(tract) - tendon_path_length(&m, &pose, tract).unwrap();
        prop_assert!((got - d).abs() < 1e-6);
    }

    #[test]
    fn two_tract_round_trip(tail in 0..3usize, first in 0..4usize, frac in 0.001..0.95f64) {
        let m = standard(tail);
        let pair = [first, (first + 1) % 4];
        let (max, _) = maximum_shortening(&m, &pair).unwrap();
        let theta = uniform_bend_angle(&m, &pair, frac * max).unwrap();
        let pose = predict_pose_uniform(&m, theta, &pair).unwrap();
        for t in pair {
            let got = m.rest_tract_length(t) - tendon_path_length(&m, &pose, t).unwrap();
            prop_assert!((got - frac * max).abs() < 1e-6);
        }
    }

    #[test]
    fn bones_stay_rigid(tail in 0..3usize, angles in prop::array::uniform3(-1.0..1.0f64), az in 0.0..6.3f64) {
        let m = standard(tail);
        let pose = pose_from_angles(&m, az, &angles).unwrap();
        for (j, bone) in m.bones.iter().enumerate() {
            let a = pose.transform_point(j + 1, &[0.0, 0.0, bone.start_z]);
            let b = pose.transform_point(j + 1, &[0.0, 0.0, bone.end_z()]);
            prop_assert!((distance(&a, &b) - bone.length).abs() < 1e-12 * bone.length);
            // loops on a bone keep their spacing
            let loops: Vec<_> = m.tracts[0].iter().filter(|l| l.segment == j + 1).collect();
            if loops.len() == 2 {
                let p = pose.transform_point(j + 1, &loops[0].position);
                let q = pose.transform_point(j + 1, &loops[1].position);
                let rest = distance(&loops[0].position, &loops[1].position);
                prop_assert!((distance(&p, &q) - rest).abs() < 1e-12 * bone.length);
            }
        }
    }

    #[test]
    fn opposite_tracts_mirror(tail in 0..3usize, tract in 0..2usize, d in 0.5..25.0f64) {
        let m = standard(tail);
        let opposite = tract + 2;
        let a = predict_pose_uniform(&m, uniform_bend_angle(&m, &[tract], d).unwrap(), &[tract]).unwrap();
        let b = predict_pose_uniform(&m, uniform_bend_angle(&m, &[opposite], d).unwrap(), &[opposite]).unwrap();
        let scale = m.total_length;
        for (p, q) in a.bone_centroids.iter().chain([&a.tip]).zip(b.bone_centroids.iter().chain([&b.tip])) {
            prop_assert!((p[0] + q[0]).abs() <= 1e-9 * scale);
            prop_assert!((p[1] + q[1]).abs() <= 1e-9 * scale);
            prop_assert!((p[2] - q[2]).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn shortening_increases_with_angle(tail in 0..3usize, t1 in 0.0..1.0f64, t2 in 0.0..1.0f64) {
        prop_assume!((t1 - t2).abs() > 1e-9);
        let m = standard(tail);
        let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
        let len = |th: f64| tendon_path_length(&m, &predict_pose_uniform(&m, th, &[1]).unwrap(), 1).unwrap();
        prop_assert!(len(hi) < len(lo));
    }

    #[test]
    fn longest_distal_bone_reaches_furthest(theta in 0.001..0.6f64) {
        let [ssl, sls, lss] = [0, 1, 2].map(|i| tip_radial(&standard(i), theta));
        prop_assert!(ssl > sls && ssl > lss);
    }
}

#[test]
fn small_travel_angle() {
    for i in 0..3 {
        let m = standard(i);
        let d = 0.01;
        let theta = uniform_bend_angle(&m, &[0], d).unwrap();
        let approx = d / (m.joint_count() as f64 * m.tract_radius);
        assert!((theta - approx).abs() < 1e-3 * approx, "{theta} vs {approx}");
    }
}

#[test]
fn single_joint_small_angle_shortening() {
    let m = build_tail(&MorphologySpec::single_joint(JointProfile::standard())).unwrap();
    let theta = 1e-4;
    let pose = predict_pose_uniform(&m, theta, &[3]).unwrap();
    let s = m.rest_tract_length(3) - tendon_path_length(&m, &pose, 3).unwrap();
    assert!((s - m.tract_radius * theta).abs() < 1e-3 * s);
}

#[test]
fn rest_tract_is_straight_polyline() {
    for i in 0..3 {
        let m = standard(i);
        for t in 0..4 {
            let pts = &m.tracts[t];
            let straight = pts.last().unwrap().position[2] - pts[0].position[2];
            assert!((m.rest_tract_length(t) - straight).abs() < 1e-12);
        }
    }
}
