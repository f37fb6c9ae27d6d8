//! The morphology × direction × displacement experiment.

use std::f64::consts::TAU;

use rayon::prelude::*;
use tale_core::analysis::{collapse_tail_pose, tip_metrics};
use tale_core::geometry::{build_tail, MorphologySpec, TailModel};
use tale_core::roots::brent;
use tale_core::solver::{euler_solve, Actuation, LoadCase};
use tale_core::tail::{
    pose_from_angles, predict_pose_uniform, tendon_path_length, uniform_bend_angle, TailPose,
};

use crate::config::{Engine, ExperimentConfig, Morphology, SolverSettings};
use crate::error::AppError;
use crate::io::{CaseFailure, ResultRow};

/// Single tracts in id order, then azimuth-adjacent pairs walking once
/// around the circumference.
pub fn directions(azimuths: &[f64; 4], one_motor: bool, two_motor: bool) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if one_motor {
        out.extend((0..4).map(|t| vec![t]));
    }
    if two_motor {
        let mut order = [0usize, 1, 2, 3];
        order.sort_by(|&a, &b| azimuths[a].rem_euclid(TAU).total_cmp(&azimuths[b].rem_euclid(TAU)));
        out.extend((0..4).map(|i| vec![order[i], order[(i + 1) % 4]]));
    }
    out
}

pub fn tract_label(tracts: &[usize]) -> String {
    tracts
        .iter()
        .map(|t| t.to_string())
        .collect::<Vec<_>>()
        .join("+")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Case {
    pub id: usize,
    pub tail: usize,
    pub tracts: Vec<usize>,
    pub displacement: f64,
}

/// Tail-major, then direction, then displacement.
pub fn cases(config: &ExperimentConfig) -> Vec<Case> {
    let mut out = Vec::new();
    for (tail, m) in config.tails.iter().enumerate() {
        for tracts in directions(&m.spec.tract_azimuths, config.one_motor, config.two_motor) {
            for &displacement in &config.displacements {
                out.push(Case {
                    id: out.len(),
                    tail,
                    tracts: tracts.clone(),
                    displacement,
                });
            }
        }
    }
    out
}

/// Joint angle of a lone joint of `spec`'s `joint`-th profile under tension
/// `force` per tendon.
fn joint_angle(
    spec: &MorphologySpec,
    joint: usize,
    tracts: &[usize],
    force: f64,
    solver: &SolverSettings,
) -> Result<f64, tale_core::Error> {
    let sample = MorphologySpec {
        bone_lengths: vec![spec.endcap_length],
        joints: vec![spec.joints[joint]],
        base_offset: 0.0,
        ..spec.clone()
    };
    let model = build_tail(&sample)?;
    let case = LoadCase {
        steps: solver.steps,
        fd: solver.fd,
        record_history: false,
        ..LoadCase::force(tracts, force)
    };
    Ok(euler_solve(&model, &case)?.final_gamma())
}

/// Pose with every joint at its single-joint equilibrium under a common
/// tendon tension, the tension chosen so the pulled tract shortens by `d`.
pub fn euler_pose(
    spec: &MorphologySpec,
    model: &TailModel,
    tracts: &[usize],
    d: f64,
    solver: &SolverSettings,
) -> Result<TailPose, tale_core::Error> {
    let act = Actuation::new(model, tracts)?;
    if d.is_nan() || d < 0.0 {
        return Err(tale_core::Error::Domain {
            what: "tendon displacement",
            value: d,
        });
    }
    let pose_at = |force: f64| -> Result<TailPose, tale_core::Error> {
        let mut angles = Vec::with_capacity(spec.joint_count());
        for j in 0..spec.joint_count() {
            // identical profiles give identical angles
            match (0..j).find(|&i| spec.joints[i] == spec.joints[j]) {
                Some(i) => angles.push(angles[i]),
                None => angles.push(joint_angle(spec, j, tracts, force, solver)?),
            }
        }
        pose_from_angles(model, act.azimuth, &angles)
    };
    if d == 0.0 {
        return pose_at(0.0);
    }
    let t = act.tracts[0];
    let rest = model.rest_tract_length(t);
    let shortening = |force: f64| -> Result<f64, tale_core::Error> {
        Ok(rest - tendon_path_length(model, &pose_at(force)?, t)?)
    };
    let mut hi = 1.0;
    let mut reached = shortening(hi)?;
    while reached < d {
        if hi > 1e3 {
            return Err(tale_core::Error::Saturation {
                requested: d,
                maximum: reached,
            });
        }
        hi *= 2.0;
        reached = match shortening(hi) {
            Ok(s) => s,
            Err(tale_core::Error::Divergence { .. } | tale_core::Error::Convergence { .. }) => {
                return Err(tale_core::Error::Saturation {
                    requested: d,
                    maximum: reached,
                })
            }
            Err(e) => return Err(e),
        };
    }
    let force = brent(|f| Ok(shortening(f)? - d), 0.0, hi, 1e-10, 200)?;
    pose_at(force)
}

pub fn case_pose(
    morphology: &Morphology,
    tracts: &[usize],
    d: f64,
    engine: Engine,
    solver: &SolverSettings,
) -> Result<TailPose, tale_core::Error> {
    let model = build_tail(&morphology.spec)?;
    match engine {
        Engine::Uniform => {
            let theta = uniform_bend_angle(&model, tracts, d)?;
            predict_pose_uniform(&model, theta, tracts)
        }
        Engine::Euler => euler_pose(&morphology.spec, &model, tracts, d, solver),
    }
}

fn run_case(config: &ExperimentConfig, case: &Case) -> Result<Vec<ResultRow>, tale_core::Error> {
    let m = &config.tails[case.tail];
    let pose = case_pose(m, &case.tracts, case.displacement, config.engine, &config.solver)?;
    let planar = collapse_tail_pose(&pose);
    let tip = tip_metrics(&planar)?;
    let label = tract_label(&case.tracts);
    Ok(planar
        .points
        .iter()
        .enumerate()
        .map(|(j, p)| ResultRow {
            case_id: case.id,
            tail: m.name.clone(),
            tracts: label.clone(),
            displacement_mm: case.displacement,
            joint_id: j + 1,
            rho_mm: p.rho,
            z_mm: p.z,
            tip_perp_mm: tip.perpendicular_distance,
            tip_radial_mm: tip.radial_displacement,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepOutcome {
    pub rows: Vec<ResultRow>,
    pub failures: Vec<CaseFailure>,
    pub cases: usize,
}

/// Runs every case on `jobs` threads (0 picks the machine's parallelism).
/// Output order follows case order regardless of scheduling.
pub fn run_sweep(config: &ExperimentConfig, jobs: usize) -> Result<SweepOutcome, AppError> {
    let cases = cases(config);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| AppError::Usage(format!("cannot start {jobs} worker threads: {e}")))?;
    let results: Vec<_> = pool.install(|| cases.par_iter().map(|c| run_case(config, c)).collect());
    let mut out = SweepOutcome {
        cases: cases.len(),
        ..SweepOutcome::default()
    };
    for (case, result) in cases.iter().zip(results) {
        match result {
            Ok(rows) => out.rows.extend(rows),
            Err(e) => out.failures.push(CaseFailure {
                case_id: case.id,
                tail: config.tails[case.tail].name.clone(),
                tracts: tract_label(&case.tracts),
                displacement_mm: case.displacement,
                error_code: e.code().to_string(),
                message: e.to_string(),
            }),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tale_core::geometry::default_tract_azimuths;

    #[test]
    fn eight_directions() {
        let d = directions(&default_tract_azimuths(), true, true);
        assert_eq!(d.len(), 8);
        assert_eq!(d[4..], [vec![0, 1], vec![1, 2], vec![2, 3], vec![3, 0]]);
        assert_eq!(directions(&default_tract_azimuths(), false, true).len(), 4);
    }

    #[test]
    fn pairs_follow_azimuth_not_id() {
        let az = [0.0f64, 180.0, 90.0, 270.0].map(f64::to_radians);
        let d = directions(&az, false, true);
        assert_eq!(d, [vec![0, 2], vec![2, 1], vec![1, 3], vec![3, 0]]);
    }

    #[test]
    fn labels() {
        assert_eq!(tract_label(&[2]), "2");
        assert_eq!(tract_label(&[3, 0]), "3+0");
    }
}
