//! TOML morphology and experiment files.
//!
//! A morphology file:
//!
//! ```toml
//! name = "SSL"
//! bones = [18.0, 18.0, 60.0]      # moving bones, base to tip, endcaps included
//! endcap_mm = 6.0
//! base_offset_mm = 18.0
//! tract_radius_mm = 12.0
//! tract_azimuth_deg = [45.0, 135.0, 225.0, 315.0]
//!
//! [joint]                          # applied at every joint
//! h_mm = 12.0
//! r1_mm = 10.2
//! r2_mm = 4.615
//! E_mpa = 1.0
//! k_theta_nmm_per_rad = 48.484
//! ```
//!
//! Only `bones` is required; the rest default to the values above (with
//! `base_offset_mm = 0`). An experiment file lists morphology files
//! relative to itself:
//!
//! ```toml
//! tails = ["ssl.toml", "sls.toml", "lss.toml"]
//! displacements_mm = [12.0, 21.0]
//! one_motor = true
//! two_motor = true
//! engine = "uniform"               # or "euler"
//! output_dir = "results"
//!
//! [solver]
//! steps = 200
//! fd_relative_step = 1e-4
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tale_core::elements::FdConfig;
use tale_core::geometry::{
    default_tract_azimuths, JointProfile, MorphologySpec, DEFAULT_ENDCAP_LENGTH,
    DEFAULT_TRACT_RADIUS,
};
use tale_core::solver::DEFAULT_STEPS;

use crate::error::AppError;

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct JointTable {
    h_mm: Option<f64>,
    r1_mm: Option<f64>,
    r2_mm: Option<f64>,
    #[serde(rename = "E_mpa")]
    e_mpa: Option<f64>,
    k_theta_nmm_per_rad: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct MorphologyFile {
    name: Option<String>,
    bones: Vec<f64>,
    endcap_mm: Option<f64>,
    #[serde(default)]
    joint: JointTable,
    tract_radius_mm: Option<f64>,
    tract_azimuth_deg: Option<Vec<f64>>,
    base_offset_mm: Option<f64>,
}

/// A named, validated morphology.
#[derive(Debug, Clone, PartialEq)]
pub struct Morphology {
    pub name: String,
    pub spec: MorphologySpec,
}

fn schema<T: serde::de::DeserializeOwned>(text: &str, origin: &Path) -> Result<T, AppError> {
    let de = toml::Deserializer::new(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let key = e.path().to_string();
        let inner = e.into_inner();
        let message = inner.message().to_string();
        if key.is_empty() || key == "." {
            AppError::config(origin, message)
        } else {
            AppError::config(origin, format!("key `{key}`: {message}"))
        }
    })
}

/// Maps a core validation field name onto the file's key names.
fn config_key(field: &str) -> String {
    if let Some(rest) = field.strip_prefix("joints[") {
        let name = rest.split_once("].").map(|(_, n)| n).unwrap_or(rest);
        let key = match name {
            "h" => "h_mm",
            "r1" => "r1_mm",
            "r2" => "r2_mm",
            "E" => "E_mpa",
            "k_theta" => "k_theta_nmm_per_rad",
            other => other,
        };
        return format!("joint.{key}");
    }
    field.to_string()
}

fn invalid_spec(origin: &Path, err: tale_core::Error) -> AppError {
    match err {
        tale_core::Error::InvalidSpec { field, reason } => {
            AppError::config(origin, format!("key `{}`: {reason}", config_key(&field)))
        }
        other => AppError::config(origin, other.to_string()),
    }
}

pub fn parse_morphology(text: &str, origin: &Path) -> Result<Morphology, AppError> {
    let file: MorphologyFile = schema(text, origin)?;
    let standard = JointProfile::standard();
    let j = &file.joint;
    let joint = JointProfile {
        length: j.h_mm.unwrap_or(standard.length),
        end_radius: j.r1_mm.unwrap_or(standard.end_radius),
        neck_radius: j.r2_mm.unwrap_or(standard.neck_radius),
        axial_modulus: j.e_mpa.unwrap_or(standard.axial_modulus),
        spring_stiffness: j.k_theta_nmm_per_rad.unwrap_or(standard.spring_stiffness),
    };
    let tract_azimuths = match &file.tract_azimuth_deg {
        None => default_tract_azimuths(),
        Some(deg) => {
            let arr: [f64; 4] = deg.as_slice().try_into().map_err(|_| {
                AppError::config(
                    origin,
                    format!("key `tract_azimuth_deg`: expected 4 angles, got {}", deg.len()),
                )
            })?;
            arr.map(f64::to_radians)
        }
    };
    let spec = MorphologySpec {
        bone_lengths: file.bones.clone(),
        endcap_length: file.endcap_mm.unwrap_or(DEFAULT_ENDCAP_LENGTH),
        joints: vec![joint; file.bones.len()],
        tract_radius: file.tract_radius_mm.unwrap_or(DEFAULT_TRACT_RADIUS),
        tract_azimuths,
        base_offset: file.base_offset_mm.unwrap_or(0.0),
    };
    spec.validate().map_err(|e| invalid_spec(origin, e))?;
    let name = file.name.unwrap_or_else(|| {
        origin
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "tail".into())
    });
    Ok(Morphology { name, spec })
}

pub fn load_morphology(path: &Path) -> Result<Morphology, AppError> {
    let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    parse_morphology(&text, path)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    /// Equal joint angles from tendon geometry alone.
    #[default]
    Uniform,
    /// Per-joint incremental solves at a common tendon tension.
    Euler,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub steps: usize,
    pub fd: FdConfig,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            steps: DEFAULT_STEPS,
            fd: FdConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct SolverTable {
    steps: Option<usize>,
    fd_relative_step: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct ExperimentFile {
    tails: Vec<PathBuf>,
    displacements_mm: Option<Vec<f64>>,
    one_motor: Option<bool>,
    two_motor: Option<bool>,
    #[serde(default)]
    engine: Engine,
    output_dir: Option<PathBuf>,
    #[serde(default)]
    solver: SolverTable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub tails: Vec<Morphology>,
    pub displacements: Vec<f64>,
    pub one_motor: bool,
    pub two_motor: bool,
    pub engine: Engine,
    pub solver: SolverSettings,
    /// Resolved against the config file's directory.
    pub output_dir: PathBuf,
}

pub const DEFAULT_DISPLACEMENTS: [f64; 2] = [12.0, 21.0];

pub fn parse_config(path: &Path) -> Result<ExperimentConfig, AppError> {
    let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    let file: ExperimentFile = schema(&text, path)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    if file.tails.is_empty() {
        return Err(AppError::config(path, "key `tails`: at least one morphology file is required"));
    }
    let mut tails = Vec::with_capacity(file.tails.len());
    for (i, t) in file.tails.iter().enumerate() {
        let p = dir.join(t);
        if !p.is_file() {
            return Err(AppError::config(
                path,
                format!("key `tails[{i}]`: no such file {}", p.display()),
            ));
        }
        tails.push(load_morphology(&p)?);
    }
    let displacements = file
        .displacements_mm
        .unwrap_or_else(|| DEFAULT_DISPLACEMENTS.to_vec());
    for (i, &d) in displacements.iter().enumerate() {
        if !(d.is_finite() && d >= 0.0) {
            return Err(AppError::config(
                path,
                format!("key `displacements_mm[{i}]`: must be >= 0, got {d}"),
            ));
        }
    }
    let one_motor = file.one_motor.unwrap_or(true);
    let two_motor = file.two_motor.unwrap_or(true);
    if !one_motor && !two_motor {
        return Err(AppError::config(path, "one_motor and two_motor are both false"));
    }
    let mut solver = SolverSettings::default();
    if let Some(steps) = file.solver.steps {
        if steps == 0 {
            return Err(AppError::config(path, "key `solver.steps`: must be >= 1"));
        }
        solver.steps = steps;
    }
    if let Some(step) = file.solver.fd_relative_step {
        if !(step > 0.0 && step < 1.0) {
            return Err(AppError::config(
                path,
                format!("key `solver.fd_relative_step`: must lie in (0, 1), got {step}"),
            ));
        }
        solver.fd.relative_step = step;
    }
    Ok(ExperimentConfig {
        tails,
        displacements,
        one_motor,
        two_motor,
        engine: file.engine,
        solver,
        output_dir: dir.join(file.output_dir.unwrap_or_else(|| "results".into())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Morphology, AppError> {
        parse_morphology(text, Path::new("t.toml"))
    }

    #[test]
    fn minimal_morphology_takes_defaults() {
        let m = parse("bones = [6.0]").unwrap();
        assert_eq!(m.name, "t");
        assert_eq!(m.spec.tract_azimuths, default_tract_azimuths());
        assert_eq!(m.spec.joints[0], JointProfile::standard());
        assert_eq!(m.spec.endcap_length, 6.0);
    }

    #[test]
    fn negative_bone_names_the_key() {
        let err = parse("bones = [18.0, -2.0]").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("bones[1]"), "{err}");
    }

    #[test]
    fn wrong_type_names_key_and_type() {
        let err = parse("bones = [18.0]\n[joint]\nh_mm = \"twelve\"").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("joint.h_mm") && msg.contains("f64"), "{msg}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse("bones = [18.0]\ncolour = \"red\"").unwrap_err();
        assert!(err.to_string().contains("colour"), "{err}");
    }

    #[test]
    fn joint_validation_uses_file_keys() {
        let err = parse("bones = [18.0]\n[joint]\nr1_mm = 3.0").unwrap_err();
        assert!(err.to_string().contains("joint.r1_mm"), "{err}");
    }

    #[test]
    fn azimuths_in_degrees() {
        let m = parse("bones = [6.0]\ntract_azimuth_deg = [0.0, 90.0, 180.0, 270.0]").unwrap();
        assert!((m.spec.tract_azimuths[1] - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!(parse("bones = [6.0]\ntract_azimuth_deg = [0.0, 90.0]").is_err());
    }
}
