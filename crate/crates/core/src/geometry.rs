//! Joint and tail geometry.
//!
//! The tail axis is `+z` with the base face at `z = 0`. An immobile base
//! bone occupies `[0, base_offset]`; after it come alternating joints and
//! bones. Each joint is discretised as three collinear nodes (base face,
//! neck, tip face) joined by two bars along the centreline of each half and
//! one rotational spring at the neck.

use alloc::format;
use alloc::vec::Vec;

use crate::elements::{BarElement, SpringElement};
use crate::error::{invalid, Error, Result};
use crate::math::{cos, sin, sqrt, wrap_angle, Vec3, FRAC_PI_2, PI};

/// Hourglass joint: length `h`, end radius `r1`, neck radius `r2`, axial
/// modulus `E` (MPa) and rotational stiffness `k_θ` (N·mm/rad).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointProfile {
    pub length: f64,
    pub end_radius: f64,
    pub neck_radius: f64,
    pub axial_modulus: f64,
    pub spring_stiffness: f64,
}

/// Rotational stiffness recovered by calibrating the single-joint model
/// against the bundled force/displacement fixture (`fixtures/instron_joint.csv`
/// in the `tale` crate).
pub const CALIBRATED_SPRING_STIFFNESS: f64 = 48.484;

impl JointProfile {
    pub fn new(
        length: f64,
        end_radius: f64,
        neck_radius: f64,
        axial_modulus: f64,
        spring_stiffness: f64,
    ) -> Result<Self> {
        let p = Self {
            length,
            end_radius,
            neck_radius,
            axial_modulus,
            spring_stiffness,
        };
        p.validate()?;
        Ok(p)
    }

    /// The molded joint: h = 12 mm, r1 = 10.2 mm, r2 = 4.615 mm, with a
    /// silicone modulus of 1 MPa and the calibrated spring stiffness.
    pub fn standard() -> Self {
        Self {
            length: 12.0,
            end_radius: 10.2,
            neck_radius: 4.615,
            axial_modulus: 1.0,
            spring_stiffness: CALIBRATED_SPRING_STIFFNESS,
        }
    }

    pub fn with_spring_stiffness(self, spring_stiffness: f64) -> Self {
        Self {
            spring_stiffness,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite_pos = |v: f64| v.is_finite() && v > 0.0;
        if !finite_pos(self.length) {
            return Err(invalid("joint.h", format!("must be > 0, got {}", self.length)));
        }
        if !finite_pos(self.neck_radius) {
            return Err(invalid(
                "joint.r2",
                format!("must be > 0, got {}", self.neck_radius),
            ));
        }
        if !(self.end_radius.is_finite() && self.end_radius > self.neck_radius) {
            return Err(invalid(
                "joint.r1",
                format!(
                    "must exceed r2 = {}, got {}",
                    self.neck_radius, self.end_radius
                ),
            ));
        }
        if !finite_pos(self.axial_modulus) {
            return Err(invalid(
                "joint.E",
                format!("must be > 0, got {}", self.axial_modulus),
            ));
        }
        if !finite_pos(self.spring_stiffness) {
            return Err(invalid(
                "joint.k_theta",
                format!("must be > 0, got {}", self.spring_stiffness),
            ));
        }
        Ok(())
    }

    /// Radius at axial position `y ∈ [0, h]`: linear from `r1` at the faces
    /// to `r2` at the neck.
    pub fn radius_at(&self, y: f64) -> Result<f64> {
        let h = self.length;
        if !(0.0..=h).contains(&y) {
            return Err(Error::Domain {
                what: "joint axial position y",
                value: y,
            });
        }
        let half = h / 2.0;
        // t = 1 at the faces, 0 at the neck; the blend hits both radii exactly
        let t = ((y - half) / half).abs();
        Ok(self.end_radius * t + self.neck_radius * (1.0 - t))
    }

    pub fn cross_section_area(&self, y: f64) -> Result<f64> {
        let r = self.radius_at(y)?;
        Ok(PI * r * r)
    }

    /// Length of the hourglass flank from neck edge to face edge.
    pub fn slant_length(&self) -> f64 {
        let dr = self.end_radius - self.neck_radius;
        let half = self.length / 2.0;
        sqrt(dr * dr + half * half)
    }

    /// Moment arm `l = r2 + s·cos γ` where `s` is the flank length and `γ`
    /// the joint angle from its rest orientation, `γ ∈ [0, π/2]`.
    pub fn moment_arm(&self, gamma: f64) -> Result<f64> {
        if !(0.0..=FRAC_PI_2).contains(&gamma) {
            return Err(Error::Domain {
                what: "joint angle gamma",
                value: gamma,
            });
        }
        Ok(self.neck_radius + self.slant_length() * cos(gamma))
    }

    /// Axial stiffness of one half of the joint treated as a linear frustum:
    /// `E / ∫ dy / A(y) = E·π·r1·r2 / (h/2)`.
    pub fn effective_axial_stiffness(&self) -> f64 {
        self.axial_modulus * PI * self.end_radius * self.neck_radius / (self.length / 2.0)
    }
}

/// Morphology of one tail. `bone_lengths` lists the moving bones from base to
/// tip, endcaps included; each is preceded by one joint.
#[derive(Debug, Clone, PartialEq)]
pub struct MorphologySpec {
    pub bone_lengths: Vec<f64>,
    pub endcap_length: f64,
    pub joints: Vec<JointProfile>,
    /// Radial offset of the tendon loops from the centreline.
    pub tract_radius: f64,
    /// Azimuths of the four tendon tracts (rad).
    pub tract_azimuths: [f64; 4],
    /// Length of the immobile base bone ahead of the first joint.
    pub base_offset: f64,
}

pub const DEFAULT_ENDCAP_LENGTH: f64 = 6.0;
pub const DEFAULT_TRACT_RADIUS: f64 = 12.0;
pub const SHORT_BONE: f64 = 18.0;
pub const LONG_BONE: f64 = 60.0;
/// Base offset that brings the three-bone tails to 150 mm.
pub const STANDARD_BASE_OFFSET: f64 = 18.0;

pub fn default_tract_azimuths() -> [f64; 4] {
    let q = PI / 4.0;
    [q, 3.0 * q, 5.0 * q, 7.0 * q]
}

/// The three bone orders tested: short-short-long, short-long-short and
/// long-short-short.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StandardTail {
    ShortShortLong,
    ShortLongShort,
    LongShortShort,
}

impl StandardTail {
    pub const ALL: [StandardTail; 3] = [
        StandardTail::ShortShortLong,
        StandardTail::ShortLongShort,
        StandardTail::LongShortShort,
    ];

    pub fn label(self) -> &'static str {
        match self {
            StandardTail::ShortShortLong => "SSL",
            StandardTail::ShortLongShort => "SLS",
            StandardTail::LongShortShort => "LSS",
        }
    }

    pub fn bone_lengths(self) -> [f64; 3] {
        let (s, l) = (SHORT_BONE, LONG_BONE);
        match self {
            StandardTail::ShortShortLong => [s, s, l],
            StandardTail::ShortLongShort => [s, l, s],
            StandardTail::LongShortShort => [l, s, s],
        }
    }

    pub fn spec(self) -> MorphologySpec {
        MorphologySpec::uniform(
            &self.bone_lengths(),
            JointProfile::standard(),
            STANDARD_BASE_OFFSET,
        )
    }
}

impl MorphologySpec {
    /// Same joint profile at every joint, default endcaps and tract layout.
    pub fn uniform(bone_lengths: &[f64], joint: JointProfile, base_offset: f64) -> Self {
        Self {
            bone_lengths: bone_lengths.to_vec(),
            endcap_length: DEFAULT_ENDCAP_LENGTH,
            joints: alloc::vec![joint; bone_lengths.len()],
            tract_radius: DEFAULT_TRACT_RADIUS,
            tract_azimuths: default_tract_azimuths(),
            base_offset,
        }
    }

    /// The bench sample: a fixed bone, one joint and a single distal endcap
    /// carrying the tendon attachment.
    pub fn single_joint(joint: JointProfile) -> Self {
        Self::uniform(&[DEFAULT_ENDCAP_LENGTH], joint, 0.0)
    }

    pub fn joint_count(&self) -> usize {
        self.joints.len()
    }

    pub fn total_length(&self) -> f64 {
        self.base_offset
            + self.bone_lengths.iter().sum::<f64>()
            + self.joints.iter().map(|j| j.length).sum::<f64>()
    }

    pub fn validate(&self) -> Result<()> {
        if self.bone_lengths.is_empty() {
            return Err(invalid("bones", "at least one bone is required"));
        }
        for (i, &l) in self.bone_lengths.iter().enumerate() {
            if !(l.is_finite() && l > 0.0) {
                return Err(invalid(format!("bones[{i}]"), format!("must be > 0, got {l}")));
            }
        }
        if self.joints.len() != self.bone_lengths.len() {
            return Err(invalid(
                "joint",
                format!(
                    "{} joint profiles for {} bones",
                    self.joints.len(),
                    self.bone_lengths.len()
                ),
            ));
        }
        for (i, j) in self.joints.iter().enumerate() {
            j.validate().map_err(|e| match e {
                Error::InvalidSpec { field, reason } => Error::InvalidSpec {
                    field: format!("joints[{i}].{}", field.trim_start_matches("joint.")),
                    reason,
                },
                other => other,
            })?;
        }
        if !(self.endcap_length.is_finite() && self.endcap_length > 0.0) {
            return Err(invalid(
                "endcap_mm",
                format!("must be > 0, got {}", self.endcap_length),
            ));
        }
        if !(self.tract_radius.is_finite() && self.tract_radius > 0.0) {
            return Err(invalid(
                "tract_radius_mm",
                format!("must be > 0, got {}", self.tract_radius),
            ));
        }
        if !(self.base_offset.is_finite() && self.base_offset >= 0.0) {
            return Err(invalid(
                "base_offset_mm",
                format!("must be >= 0, got {}", self.base_offset),
            ));
        }
        let wrapped = self.tract_azimuths.map(wrap_angle);
        for i in 0..4 {
            if !self.tract_azimuths[i].is_finite() {
                return Err(invalid(format!("tract_azimuth_deg[{i}]"), "must be finite"));
            }
            for j in (i + 1)..4 {
                let d = (wrapped[i] - wrapped[j]).abs();
                if d < 1e-9 || (2.0 * PI - d) < 1e-9 {
                    return Err(invalid(
                        format!("tract_azimuth_deg[{j}]"),
                        format!("coincides with tract {i} modulo 360°"),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Axial layout of one joint and its three nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointFrame {
    pub profile: JointProfile,
    /// `z` of the proximal face, neck and distal face.
    pub base_z: f64,
    pub neck_z: f64,
    pub tip_z: f64,
    pub node_ids: [usize; 3],
}

/// A rigid bone between `start_z` and `start_z + length` at rest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoneSegment {
    pub start_z: f64,
    pub length: f64,
}

impl BoneSegment {
    pub fn centroid_z(&self) -> f64 {
        self.start_z + 0.5 * self.length
    }

    pub fn end_z(&self) -> f64 {
        self.start_z + self.length
    }
}

/// A tendon loop at rest, carried rigidly by `segment` (0 is the immobile
/// base, `j + 1` the segment distal to joint `j`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopPoint {
    pub position: Vec3,
    pub segment: usize,
}

/// Discretised tail.
#[derive(Debug, Clone, PartialEq)]
pub struct TailModel {
    pub nodes: Vec<Vec3>,
    pub bars: Vec<BarElement>,
    pub springs: Vec<SpringElement>,
    /// Loop points of each tract from base to tip; the last is the
    /// tendon attachment on the distal endcap.
    pub tracts: [Vec<LoopPoint>; 4],
    pub tract_azimuths: [f64; 4],
    pub tract_radius: f64,
    /// Nodes bonded to the immobile base bone.
    pub fixed_node_ids: Vec<usize>,
    /// Nodes that may only slide along the tail axis (the neck of the first
    /// joint, whose proximal half is bonded to the base bone).
    pub guided_node_ids: Vec<usize>,
    pub joints: Vec<JointFrame>,
    pub bones: Vec<BoneSegment>,
    pub base_offset: f64,
    pub endcap_length: f64,
    pub total_length: f64,
}

pub const TAIL_AXIS: Vec3 = [0.0, 0.0, 1.0];

/// Unit vector in the transverse plane at azimuth `psi`.
pub fn radial_direction(psi: f64) -> Vec3 {
    [cos(psi), sin(psi), 0.0]
}

pub fn build_tail(spec: &MorphologySpec) -> Result<TailModel> {
    spec.validate()?;
    let n = spec.joint_count();
    let mut nodes = Vec::with_capacity(3 * n);
    let mut bars = Vec::with_capacity(2 * n);
    let mut springs = Vec::with_capacity(n);
    let mut joints = Vec::with_capacity(n);
    let mut bones = Vec::with_capacity(n);

    let mut z = spec.base_offset;
    for (j, (profile, &bone)) in spec.joints.iter().zip(&spec.bone_lengths).enumerate() {
        let h = profile.length;
        let ids = [3 * j, 3 * j + 1, 3 * j + 2];
        let (zb, zn, zt) = (z, z + h / 2.0, z + h);
        nodes.push([0.0, 0.0, zb]);
        nodes.push([0.0, 0.0, zn]);
        nodes.push([0.0, 0.0, zt]);
        let k = profile.effective_axial_stiffness();
        bars.push(BarElement::between([ids[0], ids[1]], k, &nodes[ids[0]], &nodes[ids[1]])?);
        bars.push(BarElement::between([ids[1], ids[2]], k, &nodes[ids[1]], &nodes[ids[2]])?);
        springs.push(SpringElement::between(
            ids,
            profile.spring_stiffness,
            &nodes[ids[0]],
            &nodes[ids[1]],
            &nodes[ids[2]],
        )?);
        joints.push(JointFrame {
            profile: *profile,
            base_z: zb,
            neck_z: zn,
            tip_z: zt,
            node_ids: ids,
        });
        bones.push(BoneSegment {
            start_z: zt,
            length: bone,
        });
        z = zt + bone;
    }

    let e = spec.endcap_length;
    let tracts = core::array::from_fn(|t| {
        let dir = radial_direction(spec.tract_azimuths[t]);
        let at = |z: f64, segment: usize| LoopPoint {
            position: [spec.tract_radius * dir[0], spec.tract_radius * dir[1], z],
            segment,
        };
        let mut pts = Vec::with_capacity(2 * n + 1);
        pts.push(at(spec.base_offset - e / 2.0, 0));
        for (j, bone) in bones.iter().enumerate() {
            let prox = bone.start_z + (e / 2.0).min(bone.length / 2.0);
            let dist = bone.end_z() - (e / 2.0).min(bone.length / 2.0);
            pts.push(at(prox, j + 1));
            if dist > prox {
                pts.push(at(dist, j + 1));
            }
        }
        pts
    });

    Ok(TailModel {
        nodes,
        bars,
        springs,
        tracts,
        tract_azimuths: spec.tract_azimuths,
        tract_radius: spec.tract_radius,
        fixed_node_ids: alloc::vec![0],
        guided_node_ids: alloc::vec![1],
        joints,
        bones,
        base_offset: spec.base_offset,
        endcap_length: e,
        total_length: z,
    })
}

impl TailModel {
    pub fn joint_count(&self) -> usize {
        self.joints.len()
    }

    /// Rest length of a tract's polyline through its loops.
    pub fn rest_tract_length(&self, tract: usize) -> f64 {
        self.tracts[tract]
            .windows(2)
            .map(|w| crate::math::distance(&w[0].position, &w[1].position))
            .sum()
    }

    /// Flat `3N` vector of rest coordinates.
    pub fn flat_positions(&self) -> Vec<f64> {
        self.nodes.iter().flat_map(|p| p.iter().copied()).collect()
    }
}
