//! Global assembly, boundary conditions and the incremental Euler solver.
//!
//! Load cases are solved in the bending plane spanned by the tail axis and
//! the pull direction: every node carries two DoF `(u, z)`, `u` along the
//! in-plane radial direction and `z` along the tail axis. Results are
//! embedded back into 3D.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::elements::{gather, gradient_fd, BarElement, FdConfig, SpringElement};
use crate::error::{Error, Result};
use crate::geometry::{radial_direction, JointProfile, TailModel};
use crate::linalg::{Cholesky, Matrix};
use crate::math::{atan2, cos, dot, sin, sqrt, wrap_angle, Vec3, FRAC_PI_2};

/// Default number of load increments.
pub const DEFAULT_STEPS: usize = 200;

/// Relative pivot floor below which a reduced matrix counts as singular.
const PIVOT_TOL: f64 = 1e-10;

/// Assembled stiffness and load over all `dim·N` DoF.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalSystem {
    pub dim: usize,
    pub stiffness: Matrix,
    pub load: Vec<f64>,
}

/// Stiffness and load restricted to the free DoF.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSystem {
    pub dim: usize,
    pub stiffness: Matrix,
    pub load: Vec<f64>,
    /// Global index of each reduced row.
    pub free_dofs: Vec<usize>,
}

fn axis_name(dim: usize, axis: usize) -> &'static str {
    match (dim, axis) {
        (2, 0) => "radial",
        (2, _) => "axial",
        (_, 0) => "x",
        (_, 1) => "y",
        _ => "z",
    }
}

impl ReducedSystem {
    /// Cholesky factor; a failed pivot is reported as the unconstrained mode.
    pub fn factor(&self) -> Result<Cholesky> {
        Cholesky::new(&self.stiffness, PIVOT_TOL).map_err(|row| {
            let dof = self.free_dofs[row];
            Error::RankDeficient {
                mode: format!(
                    "no stiffness left for node {} {} motion",
                    dof / self.dim,
                    axis_name(self.dim, dof % self.dim)
                ),
            }
        })
    }

    pub fn solve(&self) -> Result<Vec<f64>> {
        Ok(self.factor()?.solve(&self.load))
    }
}

fn scatter(k: &mut Matrix, local: &Matrix, dofs: &[usize]) -> Result<()> {
    let size = k.rows();
    if let Some(&bad) = dofs.iter().find(|&&d| d >= size) {
        return Err(Error::Assembly { dof: bad, size });
    }
    for (a, &ga) in dofs.iter().enumerate() {
        for (b, &gb) in dofs.iter().enumerate() {
            k[(ga, gb)] += local[(a, b)];
        }
    }
    Ok(())
}

/// Sums element tangent stiffnesses at `positions` (`dim` coordinates per
/// node). `spring_steps` holds the finite-difference step of each spring.
pub fn assemble_stiffness(
    positions: &[f64],
    dim: usize,
    bars: &[BarElement],
    springs: &[SpringElement],
    spring_steps: &[f64],
    fd: &FdConfig,
) -> Result<Matrix> {
    let n = positions.len();
    let mut k = Matrix::zeros(n, n);
    for bar in bars {
        if bar.nodes.iter().any(|&i| (i + 1) * dim > n) {
            return Err(Error::Assembly {
                dof: bar.nodes[0].max(bar.nodes[1]) * dim,
                size: n,
            });
        }
        let local = bar.local_stiffness(positions, dim, fd)?;
        scatter(&mut k, &local.matrix, &local.dofs)?;
    }
    for (spring, &delta) in springs.iter().zip(spring_steps) {
        if spring.nodes.iter().any(|&i| (i + 1) * dim > n) {
            return Err(Error::Assembly {
                dof: spring.nodes.iter().copied().max().unwrap_or(0) * dim,
                size: n,
            });
        }
        let local = spring.local_stiffness(positions, dim, delta)?;
        scatter(&mut k, &local.matrix, &local.dofs)?;
    }
    Ok(k)
}

/// Internal force vector (gradient of the elastic energy) by central
/// differences element by element.
pub fn internal_forces(
    positions: &[f64],
    dim: usize,
    bars: &[BarElement],
    springs: &[SpringElement],
    spring_steps: &[f64],
    fd: &FdConfig,
) -> Result<Vec<f64>> {
    let mut f = vec![0.0; positions.len()];
    for bar in bars {
        let x = gather(positions, &bar.nodes, dim);
        let g = gradient_fd(|p| Ok(bar.energy(&p[..dim], &p[dim..])), &x, bar.fd_step(fd))?;
        for (a, &node) in bar.nodes.iter().enumerate() {
            for d in 0..dim {
                f[node * dim + d] += g[a * dim + d];
            }
        }
    }
    for (spring, &delta) in springs.iter().zip(spring_steps) {
        let x = gather(positions, &spring.nodes, dim);
        let g = gradient_fd(
            |p| spring.energy(&p[..dim], &p[dim..2 * dim], &p[2 * dim..]),
            &x,
            delta,
        )?;
        for (a, &node) in spring.nodes.iter().enumerate() {
            for d in 0..dim {
                f[node * dim + d] += g[a * dim + d];
            }
        }
    }
    Ok(f)
}

fn spring_steps(model: &TailModel, rest: &[f64], dim: usize, fd: &FdConfig) -> Vec<f64> {
    model
        .springs
        .iter()
        .map(|s| fd.relative_step * s.characteristic_length(rest, dim))
        .collect()
}

/// 3D stiffness of the undeformed model with zero load.
pub fn assemble_global(model: &TailModel, fd: &FdConfig) -> Result<GlobalSystem> {
    let rest = model.flat_positions();
    let steps = spring_steps(model, &rest, 3, fd);
    let stiffness = assemble_stiffness(&rest, 3, &model.bars, &model.springs, &steps, fd)?;
    Ok(GlobalSystem {
        dim: 3,
        load: vec![0.0; rest.len()],
        stiffness,
    })
}

/// Removes every DoF of the `fixed` nodes.
pub fn apply_constraints(system: &GlobalSystem, fixed: &[usize]) -> Result<ReducedSystem> {
    if fixed.is_empty() {
        return Err(Error::RankDeficient {
            mode: String::from("rigid-body translation (no node is fixed)"),
        });
    }
    let dim = system.dim;
    let dofs: Vec<usize> = fixed
        .iter()
        .flat_map(|&n| (0..dim).map(move |d| n * dim + d))
        .collect();
    apply_dof_constraints(system, &dofs)
}

/// Removes individual DoF.
pub fn apply_dof_constraints(system: &GlobalSystem, fixed_dofs: &[usize]) -> Result<ReducedSystem> {
    let n = system.stiffness.rows();
    if let Some(&bad) = fixed_dofs.iter().find(|&&d| d >= n) {
        return Err(Error::Assembly { dof: bad, size: n });
    }
    let free: Vec<usize> = (0..n).filter(|d| !fixed_dofs.contains(d)).collect();
    if free.is_empty() {
        return Err(Error::EmptySystem);
    }
    Ok(ReducedSystem {
        dim: system.dim,
        stiffness: system.stiffness.select(&free),
        load: free.iter().map(|&d| system.load[d]).collect(),
        free_dofs: free,
    })
}

/// DoF removed by the model's supports: all DoF of fixed nodes and the
/// transverse DoF of guided nodes. The axial DoF is the last coordinate.
pub fn support_dofs(model: &TailModel, dim: usize) -> Vec<usize> {
    let mut dofs: Vec<usize> = model
        .fixed_node_ids
        .iter()
        .flat_map(|&n| (0..dim).map(move |d| n * dim + d))
        .collect();
    for &n in &model.guided_node_ids {
        dofs.extend((0..dim - 1).map(|d| n * dim + d));
    }
    dofs.sort_unstable();
    dofs.dedup();
    dofs
}

/// Splits a tendon tension `F` into the force along the pull (`F∥ = F`) and
/// the transverse force `F⊥ = 2M/h` that reproduces the moment `M = F·l(γ)`
/// about the neck when applied at the distal node.
pub fn decompose_tendon_load(force: f64, profile: &JointProfile, gamma: f64) -> Result<(f64, f64)> {
    if !(force >= 0.0) {
        return Err(Error::Domain {
            what: "tendon force",
            value: force,
        });
    }
    let moment = force * profile.moment_arm(gamma)?;
    Ok((force, 2.0 * moment / profile.length))
}

/// One tract, or two tracts adjacent in azimuth, pulled together.
#[derive(Debug, Clone, PartialEq)]
pub struct Actuation {
    pub tracts: Vec<usize>,
    /// Azimuth of the bending plane: the tract itself or the bisector.
    pub azimuth: f64,
    /// Number of tendons in tension; scales the axial load.
    pub axial_factor: f64,
    /// `Σ cos(ψ_i − ψ)`: the tendons' combined moment relative to one
    /// tendon lying in the bending plane.
    pub moment_factor: f64,
}

impl Actuation {
    pub fn new(model: &TailModel, tracts: &[usize]) -> Result<Self> {
        let bad = |reason: &str| Error::InvalidSpec {
            field: String::from("tracts"),
            reason: String::from(reason),
        };
        match tracts {
            [t] if *t < 4 => Ok(Self {
                tracts: vec![*t],
                azimuth: model.tract_azimuths[*t],
                axial_factor: 1.0,
                moment_factor: 1.0,
            }),
            [a, b] if *a < 4 && *b < 4 && a != b => {
                if !adjacent(&model.tract_azimuths, *a, *b) {
                    return Err(bad("two-tract actuation requires azimuth-adjacent tracts"));
                }
                let (pa, pb) = (model.tract_azimuths[*a], model.tract_azimuths[*b]);
                let azimuth = atan2(sin(pa) + sin(pb), cos(pa) + cos(pb));
                let moment_factor = cos(pa - azimuth) + cos(pb - azimuth);
                Ok(Self {
                    tracts: vec![*a, *b],
                    azimuth,
                    axial_factor: 2.0,
                    moment_factor,
                })
            }
            _ => Err(bad("expected one tract id or two distinct ids in 0..4")),
        }
    }

    pub fn direction(&self) -> Vec3 {
        radial_direction(self.azimuth)
    }
}

/// Whether tracts `a` and `b` are neighbours around the circumference.
pub fn adjacent(azimuths: &[f64; 4], a: usize, b: usize) -> bool {
    let mut order = [0usize, 1, 2, 3];
    let w = azimuths.map(wrap_angle);
    order.sort_by(|&i, &j| w[i].partial_cmp(&w[j]).unwrap_or(core::cmp::Ordering::Equal));
    let pos = |t: usize| order.iter().position(|&o| o == t).unwrap_or(0);
    let d = (pos(a) + 4 - pos(b)) % 4;
    d == 1 || d == 3
}

/// What drives the tendon(s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TendonCommand {
    /// Tendon travel in mm; must be converted through a calibration first.
    Displacement(f64),
    /// Tension per tendon in N.
    Force(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadCase {
    pub tracts: Vec<usize>,
    pub command: TendonCommand,
    pub steps: usize,
    /// Keep node positions for every increment.
    pub record_history: bool,
    pub fd: FdConfig,
    /// Optional uniform axial body force per free node (N, `+z` distal).
    pub axial_body_force: f64,
}

impl LoadCase {
    pub fn force(tracts: &[usize], force: f64) -> Self {
        Self {
            tracts: tracts.to_vec(),
            command: TendonCommand::Force(force),
            steps: DEFAULT_STEPS,
            record_history: true,
            fd: FdConfig::default(),
            axial_body_force: 0.0,
        }
    }

    pub fn with_steps(mut self, steps: usize) -> Self {
        self.steps = steps;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    /// Node positions after each increment, starting with the rest pose.
    /// Empty when history recording is off.
    pub node_history: Vec<Vec<Vec3>>,
    pub final_pose: Vec<Vec3>,
    /// Tendon tension per increment, starting at 0.
    pub force_history: Vec<f64>,
    /// Bend angle of the distal joint half per increment.
    pub gamma_history: Vec<f64>,
    /// Travel of the tendon attachment along the pull direction.
    pub attachment_travel: Vec<f64>,
    /// Nodal forces applied in the last increment (3D).
    pub final_load: Vec<Vec3>,
    /// Reduced tangent stiffness at the rest configuration.
    pub rest_stiffness: Matrix,
}

impl SolveResult {
    pub fn final_travel(&self) -> f64 {
        *self.attachment_travel.last().unwrap_or(&0.0)
    }

    pub fn final_gamma(&self) -> f64 {
        *self.gamma_history.last().unwrap_or(&0.0)
    }

    pub fn tip(&self) -> Vec3 {
        *self.final_pose.last().unwrap_or(&[0.0; 3])
    }
}

/// In-plane layout shared by the solver entry points.
struct Plane {
    dir: Vec3,
    rest: Vec<f64>,
    fixed: Vec<usize>,
    free: Vec<usize>,
    spring_steps: Vec<f64>,
    /// Attachment offset from the distal node in the distal frame
    /// (`radial`, `axial`), at rest.
    attachment: (f64, f64),
    attachment_rest_z: f64,
}

impl Plane {
    fn new(model: &TailModel, act: &Actuation, fd: &FdConfig) -> Result<Self> {
        if model.joints.is_empty() {
            return Err(Error::EmptySystem);
        }
        let dir = act.direction();
        let rest: Vec<f64> = model
            .nodes
            .iter()
            .flat_map(|p| [dot(p, &dir), p[2]])
            .collect();
        let fixed = support_dofs(model, 2);
        let free: Vec<usize> = (0..rest.len()).filter(|d| !fixed.contains(d)).collect();
        if free.is_empty() {
            return Err(Error::EmptySystem);
        }
        let spring_steps = spring_steps(model, &rest, 2, fd);
        let tip_node = model.nodes.len() - 1;
        let att = model.tracts[act.tracts[0]]
            .last()
            .map(|lp| lp.position)
            .ok_or(Error::DegenerateGeometry {
                what: "tract without loops",
            })?;
        let att_u = dot(&att, &dir);
        let attachment = (att_u - rest[2 * tip_node], att[2] - rest[2 * tip_node + 1]);
        Ok(Self {
            dir,
            rest,
            fixed,
            free,
            spring_steps,
            attachment,
            attachment_rest_z: att[2],
        })
    }

    fn embed(&self, x: &[f64], model: &TailModel) -> Vec<Vec3> {
        model
            .nodes
            .iter()
            .enumerate()
            .map(|(i, p)| {
                // keep the out-of-plane component of the rest position
                let u0 = dot(p, &self.dir);
                let off = [p[0] - u0 * self.dir[0], p[1] - u0 * self.dir[1]];
                let u = x[2 * i];
                [off[0] + u * self.dir[0], off[1] + u * self.dir[1], x[2 * i + 1]]
            })
            .collect()
    }
}

/// Signed angle of the distal half of the last joint from the tail axis,
/// positive toward the pulled side.
fn distal_angle(x: &[f64], model: &TailModel) -> f64 {
    let ids = model.joints[model.joints.len() - 1].node_ids;
    let du = x[2 * ids[2]] - x[2 * ids[1]];
    let dz = x[2 * ids[2] + 1] - x[2 * ids[1] + 1];
    atan2(du, dz)
}

fn attachment_travel(x: &[f64], model: &TailModel, plane: &Plane) -> f64 {
    let ids = model.joints[model.joints.len() - 1].node_ids;
    let (n1, n2) = (ids[1], ids[2]);
    let tu = x[2 * n2] - x[2 * n1];
    let tz = x[2 * n2 + 1] - x[2 * n1 + 1];
    let len = sqrt(tu * tu + tz * tz);
    let (tu, tz) = (tu / len, tz / len);
    // in-plane normal toward the pulled side: (tz, -tu)
    let (a_r, a_z) = plane.attachment;
    let z = x[2 * n2 + 1] + a_r * (-tu) + a_z * tz;
    plane.attachment_rest_z - z
}

fn to_vec3(planar: &[f64], dir: &Vec3) -> Vec<Vec3> {
    planar
        .chunks(2)
        .map(|c| [c[0] * dir[0], c[0] * dir[1], c[1]])
        .collect()
}

/// Incremental Euler integration of a force-commanded tendon pull.
///
/// The tension is raised in `steps` equal increments. At each increment the
/// joint angle `γ` and moment arm are re-measured from the current geometry,
/// element tangent stiffnesses are re-evaluated at the current
/// configuration, and the linearised system is solved for the increment
/// that balances the new load against the current internal forces.
pub fn euler_solve(model: &TailModel, case: &LoadCase) -> Result<SolveResult> {
    let force = match case.command {
        TendonCommand::Force(f) if f >= 0.0 && f.is_finite() => f,
        TendonCommand::Force(f) => {
            return Err(Error::Domain {
                what: "tendon force",
                value: f,
            })
        }
        TendonCommand::Displacement(d) => {
            return Err(Error::Domain {
                what: "displacement command (convert through a calibration first)",
                value: d,
            })
        }
    };
    if case.steps == 0 {
        return Err(Error::Domain {
            what: "increment count",
            value: 0.0,
        });
    }
    let act = Actuation::new(model, &case.tracts)?;
    let plane = Plane::new(model, &act, &case.fd)?;
    let profile = model.joints[model.joints.len() - 1].profile;
    let tip_node = model.nodes.len() - 1;
    let fd = &case.fd;

    let rest_k = assemble_stiffness(
        &plane.rest,
        2,
        &model.bars,
        &model.springs,
        &plane.spring_steps,
        fd,
    )?;
    let rest_stiffness = rest_k.select(&plane.free);

    let mut x = plane.rest.clone();
    let mut node_history = Vec::new();
    if case.record_history {
        node_history.push(plane.embed(&x, model));
    }
    let mut force_history = vec![0.0];
    let mut gamma_history = vec![0.0];
    let mut travel = vec![0.0];
    let mut load = vec![0.0; x.len()];

    for inc in 1..=case.steps {
        let level = force * inc as f64 / case.steps as f64;
        let gamma = distal_angle(&x, model).abs().min(FRAC_PI_2);
        let (f_par, f_perp) = decompose_tendon_load(level, &profile, gamma)?;
        load.iter_mut().for_each(|v| *v = 0.0);
        load[2 * tip_node] += act.moment_factor * f_perp;
        load[2 * tip_node + 1] -= act.axial_factor * f_par;
        if case.axial_body_force != 0.0 {
            for node in 0..model.nodes.len() {
                load[2 * node + 1] += case.axial_body_force;
            }
        }

        let k = if inc == 1 {
            rest_k.clone()
        } else {
            assemble_stiffness(&x, 2, &model.bars, &model.springs, &plane.spring_steps, fd)?
        };
        let fint = internal_forces(&x, 2, &model.bars, &model.springs, &plane.spring_steps, fd)?;
        let reduced = ReducedSystem {
            dim: 2,
            stiffness: k.select(&plane.free),
            load: plane.free.iter().map(|&d| load[d] - fint[d]).collect(),
            free_dofs: plane.free.clone(),
        };
        let du = reduced.solve().map_err(|e| match e {
            Error::RankDeficient { mode } => Error::Convergence {
                increment: inc,
                mode,
            },
            other => other,
        })?;
        if du.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { increment: inc });
        }
        for (&d, v) in plane.free.iter().zip(&du) {
            x[d] += v;
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { increment: inc });
        }
        if case.record_history {
            node_history.push(plane.embed(&x, model));
        }
        force_history.push(level);
        gamma_history.push(distal_angle(&x, model).abs());
        travel.push(attachment_travel(&x, model, &plane));
    }
    debug_assert!(plane.fixed.iter().all(|&d| x[d] == plane.rest[d]));

    Ok(SolveResult {
        final_pose: plane.embed(&x, model),
        node_history,
        force_history,
        gamma_history,
        attachment_travel: travel,
        final_load: to_vec3(&load, &plane.dir),
        rest_stiffness,
    })
}

/// One linear solve at the rest configuration (a single Euler increment).
pub fn linear_solve(model: &TailModel, case: &LoadCase) -> Result<SolveResult> {
    euler_solve(model, &LoadCase { steps: 1, ..case.clone() })
}

/// Reduced planar stiffness at rest for the given actuation, as used by the
/// first solver increment.
pub fn planar_rest_system(model: &TailModel, tracts: &[usize], fd: &FdConfig) -> Result<ReducedSystem> {
    let act = Actuation::new(model, tracts)?;
    let plane = Plane::new(model, &act, fd)?;
    let k = assemble_stiffness(&plane.rest, 2, &model.bars, &model.springs, &plane.spring_steps, fd)?;
    let system = GlobalSystem {
        dim: 2,
        load: vec![0.0; plane.rest.len()],
        stiffness: k,
    };
    apply_dof_constraints(&system, &plane.fixed)
}
