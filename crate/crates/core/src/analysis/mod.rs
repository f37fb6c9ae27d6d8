//! Pose metrics and group statistics.

pub mod special;

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::TAIL_AXIS;
use crate::math::{dot, norm, scale, sqrt, sub, Vec3};
use crate::tail::TailPose;

pub use special::{f_survival, regularized_incomplete_beta, studentized_range_survival, t_two_sided};

/// A point in the common plane: distance from the tail axis and depth along
/// it from the base.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlanarPoint {
    pub rho: f64,
    pub z: f64,
}

/// Bone centroids collapsed onto the common plane, with the tail tip when
/// it is known.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlanarPose {
    pub points: Vec<PlanarPoint>,
    pub tip: Option<PlanarPoint>,
}

/// Origin and direction of the undeformed tail axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseFrame {
    pub origin: Vec3,
    pub axis: Vec3,
}

impl Default for BaseFrame {
    fn default() -> Self {
        Self {
            origin: [0.0; 3],
            axis: TAIL_AXIS,
        }
    }
}

impl BaseFrame {
    pub fn project(&self, p: &Vec3) -> Result<PlanarPoint> {
        let n = norm(&self.axis);
        if !(n > 0.0) {
            return Err(Error::DegenerateGeometry {
                what: "base frame axis of zero length",
            });
        }
        let axis = scale(&self.axis, 1.0 / n);
        let d = sub(p, &self.origin);
        let z = dot(&d, &axis);
        let rho = norm(&sub(&d, &scale(&axis, z)));
        Ok(PlanarPoint { rho, z })
    }
}

pub fn collapse_to_plane(positions: &[Vec3], frame: &BaseFrame) -> Result<PlanarPose> {
    let points = positions
        .iter()
        .map(|p| frame.project(p))
        .collect::<Result<Vec<_>>>()?;
    Ok(PlanarPose { points, tip: None })
}

/// Bone centroids and tip of a kinematic pose in the common plane.
pub fn collapse_tail_pose(pose: &TailPose) -> PlanarPose {
    let frame = BaseFrame::default();
    let project = |p: &Vec3| frame.project(p).unwrap_or_default();
    PlanarPose {
        points: pose.bone_centroids.iter().map(project).collect(),
        tip: Some(project(&pose.tip)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TipMetrics {
    /// Depth of the distal bone centroid below the base plane.
    pub perpendicular_distance: f64,
    /// Distance of the tip from the tail axis.
    pub radial_displacement: f64,
}

/// Perpendicular distance is taken at the distal bone centroid; radial
/// displacement at the tip, falling back to the distal centroid.
pub fn tip_metrics(pose: &PlanarPose) -> Result<TipMetrics> {
    let last = pose.points.last().ok_or(Error::Statistics {
        reason: "tip metrics of an empty pose",
    })?;
    Ok(TipMetrics {
        perpendicular_distance: last.z,
        radial_displacement: pose.tip.unwrap_or(*last).rho,
    })
}

/// Per-point standard deviation of all ordered pairwise differences between
/// trials, in the common plane. Population normalisation: with differences
/// `δ_ab = p_a − p_b` over `a ≠ b` (mean zero by symmetry) the result is
/// `sqrt(Σ|δ_ab|² / (n(n−1)))`.
pub fn pairwise_std(trials: &[PlanarPose]) -> Result<Vec<f64>> {
    if trials.len() < 2 {
        return Err(Error::Statistics {
            reason: "pairwise std needs at least two trials",
        });
    }
    let joints = trials[0].points.len();
    if let Some(bad) = trials.iter().find(|t| t.points.len() != joints) {
        return Err(Error::Mismatch {
            expected: joints,
            found: bad.points.len(),
        });
    }
    let n = trials.len();
    Ok((0..joints)
        .map(|j| {
            let mut sum = 0.0;
            for a in 0..n {
                for b in 0..n {
                    if a != b {
                        let (pa, pb) = (trials[a].points[j], trials[b].points[j]);
                        let (dr, dz) = (pa.rho - pb.rho, pa.z - pb.z);
                        sum += dr * dr + dz * dz;
                    }
                }
            }
            sqrt(sum / (n * (n - 1)) as f64)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anova {
    pub f: f64,
    pub p: f64,
    pub df_between: usize,
    pub df_within: usize,
    pub ss_between: f64,
    pub ss_within: f64,
}

impl Anova {
    pub fn ms_within(&self) -> f64 {
        self.ss_within / self.df_within as f64
    }
}

fn check_groups(groups: &[Vec<f64>]) -> Result<()> {
    if groups.len() < 2 {
        return Err(Error::Statistics {
            reason: "need at least two groups",
        });
    }
    if groups.iter().any(|g| g.len() < 2) {
        return Err(Error::Statistics {
            reason: "every group needs at least two samples",
        });
    }
    if groups.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Statistics {
            reason: "non-finite sample",
        });
    }
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Classical one-way ANOVA.
pub fn one_way_anova(groups: &[Vec<f64>]) -> Result<Anova> {
    check_groups(groups)?;
    let total: usize = groups.iter().map(Vec::len).sum();
    let grand = groups.iter().flatten().sum::<f64>() / total as f64;
    let mut ss_between = 0.0;
    let mut ss_within = 0.0;
    for g in groups {
        let m = mean(g);
        ss_between += g.len() as f64 * (m - grand) * (m - grand);
        ss_within += g.iter().map(|v| (v - m) * (v - m)).sum::<f64>();
    }
    let df_between = groups.len() - 1;
    let df_within = total - groups.len();
    let ms_b = ss_between / df_between as f64;
    let ms_w = ss_within / df_within as f64;
    let (f, p) = if ss_between == 0.0 {
        (0.0, 1.0)
    } else if ss_within == 0.0 {
        (f64::INFINITY, 0.0)
    } else {
        let f = ms_b / ms_w;
        (f, f_survival(f, df_between as f64, df_within as f64)?)
    };
    Ok(Anova {
        f,
        p,
        df_between,
        df_within,
        ss_between,
        ss_within,
    })
}

/// Tukey–Kramer adjusted p values; `p[i][j] == p[j][i]`, diagonal 1.
pub fn tukey_hsd(groups: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let anova = one_way_anova(groups)?;
    let k = groups.len();
    let means: Vec<f64> = groups.iter().map(|g| mean(g)).collect();
    let ms_w = anova.ms_within();
    let mut p = vec![vec![1.0; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let diff = (means[i] - means[j]).abs();
            let pij = if diff == 0.0 {
                1.0
            } else if ms_w == 0.0 {
                0.0
            } else {
                let se = sqrt(0.5 * ms_w * (1.0 / groups[i].len() as f64 + 1.0 / groups[j].len() as f64));
                studentized_range_survival(diff / se, k, anova.df_within as f64)?
            };
            p[i][j] = pij;
            p[j][i] = pij;
        }
    }
    Ok(p)
}

/// ANOVA and Tukey comparison of labelled sample groups.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupStats {
    pub labels: Vec<alloc::string::String>,
    pub groups: Vec<Vec<f64>>,
    pub f: f64,
    pub p: f64,
    pub pairwise_p: Vec<Vec<f64>>,
}

pub fn group_stats(labels: &[&str], groups: Vec<Vec<f64>>) -> Result<GroupStats> {
    if labels.len() != groups.len() {
        return Err(Error::Mismatch {
            expected: groups.len(),
            found: labels.len(),
        });
    }
    let anova = one_way_anova(&groups)?;
    let pairwise_p = tukey_hsd(&groups)?;
    Ok(GroupStats {
        labels: labels.iter().map(|s| (*s).into()).collect(),
        groups,
        f: anova.f,
        p: anova.p,
        pairwise_p,
    })
}

/// RMS of per-point position errors over all poses, as a percentage of
/// `total_length`.
pub fn normalized_rms_error(predicted: &[PlanarPose], reference: &[PlanarPose], total_length: f64) -> Result<f64> {
    if predicted.len() != reference.len() {
        return Err(Error::Mismatch {
            expected: reference.len(),
            found: predicted.len(),
        });
    }
    if !(total_length > 0.0) {
        return Err(Error::Domain {
            what: "total tail length",
            value: total_length,
        });
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for (p, r) in predicted.iter().zip(reference) {
        if p.points.len() != r.points.len() {
            return Err(Error::Mismatch {
                expected: r.points.len(),
                found: p.points.len(),
            });
        }
        for (a, b) in p.points.iter().zip(&r.points) {
            let (dr, dz) = (a.rho - b.rho, a.z - b.z);
            sum += dr * dr + dz * dz;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::Statistics {
            reason: "no points to compare",
        });
    }
    Ok(100.0 * sqrt(sum / count as f64) / total_length)
}
