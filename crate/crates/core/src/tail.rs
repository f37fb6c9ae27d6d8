//! Multi-joint kinematics and calibration.
//!
//! Joints bend by pure rotation about their neck point; bones stay rigid.
//! Poses live in the bending plane of the actuation and are embedded in 3D.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::elements::FdConfig;
use crate::error::{Error, Result};
use crate::geometry::{build_tail, JointProfile, MorphologySpec, TailModel, TAIL_AXIS};
use crate::math::{cos, cross, distance, dot, ln, exp, sin, Vec3, FRAC_PI_3};
use crate::roots::{bisect, brent};
use crate::solver::{euler_solve, Actuation, LoadCase, DEFAULT_STEPS};

/// Linear force/displacement relation of a tendon pull.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationFit {
    /// N/mm
    pub slope: f64,
    /// N
    pub intercept: f64,
    pub r_squared: f64,
}

impl CalibrationFit {
    pub fn new(slope: f64, intercept: f64, r_squared: f64) -> Result<Self> {
        if !(slope > 0.0 && slope.is_finite()) {
            return Err(Error::Calibration {
                reason: format!("fit slope must be positive, got {slope}"),
            });
        }
        if !(0.0..=1.0).contains(&r_squared) || !intercept.is_finite() {
            return Err(Error::Calibration {
                reason: format!("R² must lie in [0, 1], got {r_squared}"),
            });
        }
        Ok(Self {
            slope,
            intercept,
            r_squared,
        })
    }

    /// A through-origin line.
    pub fn proportional(slope: f64) -> Result<Self> {
        Self::new(slope, 0.0, 1.0)
    }

    pub fn force_from_displacement(&self, d: f64) -> Result<f64> {
        force_from_displacement(self, d)
    }
}

pub fn force_from_displacement(fit: &CalibrationFit, d: f64) -> Result<f64> {
    if !(d >= 0.0) {
        return Err(Error::Domain {
            what: "tendon displacement",
            value: d,
        });
    }
    Ok(fit.slope * d + fit.intercept)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FitMode {
    /// `F = s·d`; zero displacement gives zero force.
    #[default]
    ThroughOrigin,
    /// `F = s·d + c`.
    Affine,
}

/// Least-squares line through `(displacement, force)` samples. R² is the
/// usual centred coefficient of determination in both modes, floored at 0.
pub fn calibrate_linear(samples: &[(f64, f64)], mode: FitMode) -> Result<CalibrationFit> {
    let degenerate = |reason: &str| Error::Calibration {
        reason: reason.into(),
    };
    if samples.len() < 2 {
        return Err(degenerate("need at least two samples"));
    }
    if samples.iter().any(|(d, f)| !(d.is_finite() && f.is_finite())) {
        return Err(degenerate("non-finite sample"));
    }
    let n = samples.len() as f64;
    let mean_d = samples.iter().map(|s| s.0).sum::<f64>() / n;
    let mean_f = samples.iter().map(|s| s.1).sum::<f64>() / n;
    let sdd: f64 = samples.iter().map(|s| (s.0 - mean_d) * (s.0 - mean_d)).sum();
    let sff: f64 = samples.iter().map(|s| (s.1 - mean_f) * (s.1 - mean_f)).sum();
    if sdd == 0.0 {
        return Err(degenerate("all displacements are identical"));
    }
    if sff == 0.0 {
        return Err(degenerate("force does not vary with displacement"));
    }
    let (slope, intercept) = match mode {
        FitMode::Affine => {
            let sdf: f64 = samples
                .iter()
                .map(|s| (s.0 - mean_d) * (s.1 - mean_f))
                .sum();
            let slope = sdf / sdd;
            (slope, mean_f - slope * mean_d)
        }
        FitMode::ThroughOrigin => {
            let sdf: f64 = samples.iter().map(|s| s.0 * s.1).sum();
            let sdd0: f64 = samples.iter().map(|s| s.0 * s.0).sum();
            (sdf / sdd0, 0.0)
        }
    };
    let ss_res: f64 = samples
        .iter()
        .map(|s| {
            let r = s.1 - (slope * s.0 + intercept);
            r * r
        })
        .sum();
    let r_squared = (1.0 - ss_res / sff).clamp(0.0, 1.0);
    CalibrationFit::new(slope, intercept, r_squared)
}

/// Tendon travel at which the spring stiffness is matched to the fit.
pub const CALIBRATION_TRAVEL: f64 = 3.0;

/// Settings for the single-joint solves used during calibration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationSettings {
    pub steps: usize,
    pub fd: FdConfig,
    /// Relative tolerance on `k_θ`.
    pub rel_tol: f64,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        Self {
            steps: DEFAULT_STEPS,
            fd: FdConfig::default(),
            rel_tol: 1e-10,
        }
    }
}

/// Tendon-attachment travel of a single-joint sample under tension `force`.
pub fn single_joint_travel(sample: &MorphologySpec, force: f64, settings: &CalibrationSettings) -> Result<f64> {
    let model = build_tail(sample)?;
    let case = LoadCase {
        steps: settings.steps,
        fd: settings.fd,
        record_history: false,
        ..LoadCase::force(&[0], force)
    };
    Ok(euler_solve(&model, &case)?.final_travel())
}

/// Rotational stiffness of the standard joint such that the single-joint solver
/// reproduces `fit` at the calibration travel.
pub fn calibrate_spring_stiffness(fit: &CalibrationFit, profile: &JointProfile) -> Result<f64> {
    calibrate_spring_stiffness_with(
        fit,
        &MorphologySpec::single_joint(*profile),
        &CalibrationSettings::default(),
    )
}

/// As [`calibrate_spring_stiffness`] on an arbitrary single-joint sample.
/// Solves `travel(k_θ, F(d*)) = d*` by Brent's method in `ln k_θ`.
pub fn calibrate_spring_stiffness_with(
    fit: &CalibrationFit,
    sample: &MorphologySpec,
    settings: &CalibrationSettings,
) -> Result<f64> {
    if sample.joint_count() != 1 {
        return Err(Error::Calibration {
            reason: format!("sample must have one joint, has {}", sample.joint_count()),
        });
    }
    let target = CALIBRATION_TRAVEL;
    let force = fit.force_from_displacement(target)?;
    if !(force > 0.0) {
        return Err(Error::Calibration {
            reason: format!("fit predicts non-positive force {force} N at {target} mm"),
        });
    }
    let profile = sample.joints[0];
    let residual = |log_k: f64| -> Result<f64> {
        let mut s = sample.clone();
        s.joints[0] = profile.with_spring_stiffness(exp(log_k));
        match single_joint_travel(&s, force, settings) {
            Ok(t) => Ok(t - target),
            // a spring too soft for the load diverges: treat as overshoot
            Err(Error::Divergence { .. } | Error::Convergence { .. } | Error::Domain { .. }) => {
                Ok(f64::INFINITY)
            }
            Err(e) => Err(e),
        }
    };
    // moment balance at small angle: k ≈ F·l(0)·r / d
    let guess = force * profile.moment_arm(0.0)? * sample.tract_radius / target;
    let (mut lo, mut hi) = (ln(guess) - 0.5, ln(guess) + 0.5);
    let mut expansions = 0;
    while residual(lo)? <= 0.0 {
        lo -= 1.0;
        expansions += 1;
        if expansions > 40 {
            return Err(bracket_failure(lo, hi));
        }
    }
    while residual(hi)? >= 0.0 {
        hi += 1.0;
        expansions += 1;
        if expansions > 40 {
            return Err(bracket_failure(lo, hi));
        }
    }
    let log_k = brent(
        |lk| residual(lk).map(|r| if r.is_finite() { r } else { 1e6 }),
        lo,
        hi,
        settings.rel_tol,
        200,
    )
    .map_err(|e| match e {
        Error::Bracket { lo, hi } => bracket_failure(lo, hi),
        other => other,
    })?;
    Ok(exp(log_k))
}

fn bracket_failure(lo: f64, hi: f64) -> Error {
    Error::Calibration {
        reason: format!(
            "no k_theta bracket found in [{:.3e}, {:.3e}] N·mm/rad",
            exp(lo),
            exp(hi)
        ),
    }
}

/// Rigid in-plane motion `(u, z) ↦ R(angle)(u, z) + shift`, where a positive
/// angle turns the tail axis toward `+u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarTransform {
    pub angle: f64,
    pub shift: [f64; 2],
}

impl PlanarTransform {
    pub const IDENTITY: Self = Self {
        angle: 0.0,
        shift: [0.0, 0.0],
    };

    pub fn apply(&self, u: f64, z: f64) -> [f64; 2] {
        let (s, c) = (sin(self.angle), cos(self.angle));
        [u * c + z * s + self.shift[0], -u * s + z * c + self.shift[1]]
    }

    /// `self ∘ rotation(theta about (0, pivot_z))`.
    fn then_pivot(&self, theta: f64, pivot_z: f64) -> Self {
        let rotated = Self {
            angle: theta,
            shift: [0.0, 0.0],
        }
        .apply(0.0, pivot_z);
        let shift_local = [-rotated[0], pivot_z - rotated[1]];
        let moved = self.apply(shift_local[0], shift_local[1]);
        Self {
            angle: self.angle + theta,
            shift: moved,
        }
    }
}

/// Deformed configuration of a tail.
#[derive(Debug, Clone, PartialEq)]
pub struct TailPose {
    /// Azimuth of the bending plane.
    pub azimuth: f64,
    /// Bend angle of each joint, toward the pulled side.
    pub joint_angles: Vec<f64>,
    /// Rigid motion of each segment; index 0 is the immobile base.
    pub segments: Vec<PlanarTransform>,
    pub bone_centroids: Vec<Vec3>,
    /// Unit axis of each bone, pointing distally.
    pub bone_axes: Vec<Vec3>,
    /// Distal end of the last bone on the tail axis.
    pub tip: Vec3,
}

impl TailPose {
    fn frame(&self) -> (Vec3, Vec3) {
        let e = crate::geometry::radial_direction(self.azimuth);
        (e, cross(&TAIL_AXIS, &e))
    }

    /// Current position of a rest point carried by `segment`.
    pub fn transform_point(&self, segment: usize, p: &Vec3) -> Vec3 {
        let (e, w) = self.frame();
        let (u, v, z) = (dot(p, &e), dot(p, &w), p[2]);
        let [u2, z2] = self.segments[segment].apply(u, z);
        [
            u2 * e[0] + v * w[0],
            u2 * e[1] + v * w[1],
            z2,
        ]
    }

    fn transform_direction(&self, segment: usize, d: &Vec3) -> Vec3 {
        let (e, w) = self.frame();
        let (u, v, z) = (dot(d, &e), dot(d, &w), d[2]);
        let a = self.segments[segment].angle;
        let (s, c) = (sin(a), cos(a));
        let (u2, z2) = (u * c + z * s, -u * s + z * c);
        [u2 * e[0] + v * w[0], u2 * e[1] + v * w[1], z2]
    }
}

/// Planar forward kinematics for arbitrary joint angles.
pub fn pose_from_angles(model: &TailModel, azimuth: f64, angles: &[f64]) -> Result<TailPose> {
    if angles.len() != model.joint_count() {
        return Err(Error::Mismatch {
            expected: model.joint_count(),
            found: angles.len(),
        });
    }
    let mut segments = Vec::with_capacity(angles.len() + 1);
    segments.push(PlanarTransform::IDENTITY);
    for (joint, &theta) in model.joints.iter().zip(angles) {
        let prev = segments[segments.len() - 1];
        segments.push(prev.then_pivot(theta, joint.neck_z));
    }
    let mut pose = TailPose {
        azimuth,
        joint_angles: angles.to_vec(),
        segments,
        bone_centroids: Vec::new(),
        bone_axes: Vec::new(),
        tip: [0.0; 3],
    };
    for (j, bone) in model.bones.iter().enumerate() {
        let c = pose.transform_point(j + 1, &[0.0, 0.0, bone.centroid_z()]);
        let a = pose.transform_direction(j + 1, &TAIL_AXIS);
        pose.bone_centroids.push(c);
        pose.bone_axes.push(a);
    }
    let last = model.bones.len();
    pose.tip = pose.transform_point(last, &[0.0, 0.0, model.total_length]);
    Ok(pose)
}

/// Every joint bent by `theta` toward the pulled tract(s).
pub fn predict_pose_uniform(model: &TailModel, theta: f64, tracts: &[usize]) -> Result<TailPose> {
    if !(theta.abs() < FRAC_PI_3) {
        return Err(Error::Domain {
            what: "uniform joint angle (|theta| < pi/3)",
            value: theta,
        });
    }
    let act = Actuation::new(model, tracts)?;
    pose_from_angles(model, act.azimuth, &vec![theta; model.joint_count()])
}

/// Length of a tract's polyline through its loops in `pose`.
pub fn tendon_path_length(model: &TailModel, pose: &TailPose, tract: usize) -> Result<f64> {
    if tract >= 4 {
        return Err(Error::Domain {
            what: "tract id",
            value: tract as f64,
        });
    }
    let pts: Vec<Vec3> = model.tracts[tract]
        .iter()
        .map(|lp| pose.transform_point(lp.segment, &lp.position))
        .collect();
    Ok(pts.windows(2).map(|w| distance(&w[0], &w[1])).sum())
}

fn shortening(model: &TailModel, act: &Actuation, theta: f64) -> Result<f64> {
    let pose = pose_from_angles(model, act.azimuth, &vec![theta; model.joint_count()])?;
    let t = act.tracts[0];
    Ok(model.rest_tract_length(t) - tendon_path_length(model, &pose, t)?)
}

/// Largest tendon shortening reachable by equal joint angles below π/3,
/// with the angle that attains it.
pub fn maximum_shortening(model: &TailModel, tracts: &[usize]) -> Result<(f64, f64)> {
    let act = Actuation::new(model, tracts)?;
    // stop at the first loss of monotonicity (loops touching)
    const SAMPLES: usize = 256;
    let mut best = (0.0, 0.0);
    for i in 1..SAMPLES {
        let theta = FRAC_PI_3 * i as f64 / SAMPLES as f64;
        let s = shortening(model, &act, theta)?;
        if s <= best.0 {
            break;
        }
        best = (s, theta);
    }
    Ok(best)
}

/// Equal joint angle at which the pulled tract shortens by `d`.
pub fn uniform_bend_angle(model: &TailModel, tracts: &[usize], d: f64) -> Result<f64> {
    if !(d >= 0.0) {
        return Err(Error::Domain {
            what: "tendon displacement",
            value: d,
        });
    }
    if d == 0.0 {
        return Ok(0.0);
    }
    let act = Actuation::new(model, tracts)?;
    let (max, theta_max) = maximum_shortening(model, tracts)?;
    if d >= max {
        return Err(Error::Saturation {
            requested: d,
            maximum: max,
        });
    }
    bisect(
        |theta| Ok(shortening(model, &act, theta)? - d),
        0.0,
        theta_max,
        1e-15,
    )
}
