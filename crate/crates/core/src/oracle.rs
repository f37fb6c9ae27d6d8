//! Equilibrium by direct minimisation of total potential energy.
//!
//! Element energies are evaluated here from the element parameters alone and
//! the gradient is taken by central differences, so nothing is shared with the
//! stiffness pathway of [`crate::solver`].

use alloc::vec;
use alloc::vec::Vec;
use core::cell::Cell;

use crate::error::{Error, Result};
use crate::geometry::TailModel;
use crate::math::{add, atan2, cross, norm, sqrt, sub, Vec3};
use crate::solver::support_dofs;

/// Gradient step of the oracle (mm).
pub const GRADIENT_STEP: f64 = 1e-6;

/// Total potential of a model under a dead load, with an evaluation counter.
#[derive(Debug)]
pub struct EnergyLandscape<'a> {
    pub model: &'a TailModel,
    pub load: Vec<Vec3>,
    evaluations: Cell<usize>,
}

impl<'a> EnergyLandscape<'a> {
    pub fn new(model: &'a TailModel, load: &[Vec3]) -> Result<Self> {
        if load.len() != model.nodes.len() {
            return Err(Error::Mismatch {
                expected: model.nodes.len(),
                found: load.len(),
            });
        }
        Ok(Self {
            model,
            load: load.to_vec(),
            evaluations: Cell::new(0),
        })
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations.get()
    }

    /// Energy at displacement field `u`.
    pub fn energy(&self, u: &[Vec3]) -> Result<f64> {
        self.evaluations.set(self.evaluations.get() + 1);
        total_potential(self.model, u, &self.load)
    }
}

fn bend_angle(a: &Vec3, b: &Vec3) -> Option<f64> {
    if norm(a) == 0.0 || norm(b) == 0.0 {
        return None;
    }
    Some(atan2(norm(&cross(a, b)), crate::math::dot(a, b)))
}

/// `Σ Π_bar + Σ Π_spring − load·u` at the configuration `nodes + u`.
pub fn total_potential(model: &TailModel, u: &[Vec3], load: &[Vec3]) -> Result<f64> {
    let n = model.nodes.len();
    if u.len() != n || load.len() != n {
        return Err(Error::Mismatch {
            expected: n,
            found: if u.len() != n { u.len() } else { load.len() },
        });
    }
    if u.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Domain {
            what: "displacement field",
            value: f64::NAN,
        });
    }
    let x: Vec<Vec3> = model.nodes.iter().zip(u).map(|(p, d)| add(p, d)).collect();
    let mut energy = 0.0;
    for bar in &model.bars {
        let d = sub(&x[bar.nodes[1]], &x[bar.nodes[0]]);
        let stretch = sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) - bar.rest_length;
        energy += 0.5 * bar.stiffness * stretch * stretch;
    }
    for spring in &model.springs {
        let [i, j, k] = spring.nodes;
        let theta = bend_angle(&sub(&x[i], &x[j]), &sub(&x[k], &x[j])).ok_or(
            Error::DegenerateGeometry {
                what: "rotational spring arm of zero length",
            },
        )?;
        let dt = theta - spring.rest_angle;
        energy += 0.5 * spring.stiffness * dt * dt;
    }
    let work: f64 = load
        .iter()
        .zip(u)
        .map(|(f, d)| f[0] * d[0] + f[1] * d[1] + f[2] * d[2])
        .sum();
    Ok(energy - work)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSettings {
    /// Stop once the free-DoF gradient norm falls below this (N).
    pub tol: f64,
    pub max_iterations: usize,
    /// Central-difference step (mm).
    pub gradient_step: f64,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iterations: 200_000,
            gradient_step: GRADIENT_STEP,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    pub positions: Vec<Vec3>,
    pub displacements: Vec<Vec3>,
    /// Energy at every accepted iterate, starting at the rest configuration.
    pub energy_history: Vec<f64>,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
}

/// Gradient over the free DoF by central differences.
pub fn numerical_gradient(land: &EnergyLandscape<'_>, u: &[Vec3], free: &[usize], step: f64) -> Result<Vec<f64>> {
    let mut probe = u.to_vec();
    let mut g = Vec::with_capacity(free.len());
    for &dof in free {
        let (node, axis) = (dof / 3, dof % 3);
        let base = probe[node][axis];
        probe[node][axis] = base + step;
        let plus = land.energy(&probe)?;
        probe[node][axis] = base - step;
        let minus = land.energy(&probe)?;
        probe[node][axis] = base;
        g.push((plus - minus) / (2.0 * step));
    }
    Ok(g)
}

fn displaced(u: &[Vec3], free: &[usize], dir: &[f64], t: f64) -> Vec<Vec3> {
    let mut out = u.to_vec();
    for (&dof, d) in free.iter().zip(dir) {
        out[dof / 3][dof % 3] += t * d;
    }
    out
}

fn dot_slices(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Equilibrium under `load` by steepest descent with a Barzilai–Borwein
/// trial step and Armijo backtracking. `tol` is the gradient-norm target.
pub fn minimize_total_energy(model: &TailModel, load: &[Vec3], tol: f64) -> Result<Equilibrium> {
    minimize_total_energy_with(
        model,
        load,
        &OracleSettings {
            tol,
            ..OracleSettings::default()
        },
    )
}

pub fn minimize_total_energy_with(
    model: &TailModel,
    load: &[Vec3],
    settings: &OracleSettings,
) -> Result<Equilibrium> {
    if !(settings.tol > 0.0) {
        return Err(Error::Domain {
            what: "gradient tolerance",
            value: settings.tol,
        });
    }
    if model.fixed_node_ids.is_empty() {
        return Err(Error::RankDeficient {
            mode: "rigid-body translation (no node is fixed)".into(),
        });
    }
    let land = EnergyLandscape::new(model, load)?;
    let supports = support_dofs(model, 3);
    let free: Vec<usize> = (0..3 * model.nodes.len())
        .filter(|d| !supports.contains(d))
        .collect();
    if free.is_empty() {
        return Err(Error::EmptySystem);
    }
    let h = settings.gradient_step;
    let mut u = vec![[0.0; 3]; model.nodes.len()];
    let mut energy = land.energy(&u)?;
    let mut g = numerical_gradient(&land, &u, &free, h)?;
    let mut history = vec![energy];
    let mut step = 1e-3;
    let mut iterations = 0;
    loop {
        let gnorm = sqrt(dot_slices(&g, &g));
        if gnorm < settings.tol {
            let positions = model.nodes.iter().zip(&u).map(|(p, d)| add(p, d)).collect();
            return Ok(Equilibrium {
                positions,
                displacements: u,
                energy_history: history,
                gradient_norm: gnorm,
                iterations,
                evaluations: land.evaluations(),
            });
        }
        if iterations >= settings.max_iterations {
            return Err(Error::NonConvergence {
                iterations,
                gradient_norm: gnorm,
            });
        }
        iterations += 1;
        let dir: Vec<f64> = g.iter().map(|v| -v).collect();
        let slope = -gnorm * gnorm;
        let mut t = step;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = displaced(&u, &free, &dir, t);
            let e = land.energy(&trial)?;
            if e <= energy + 1e-4 * t * slope {
                accepted = Some((trial, e));
                break;
            }
            t *= 0.5;
        }
        let Some((next, e_next)) = accepted else {
            // no decrease representable: gradient is at noise level
            return Err(Error::NonConvergence {
                iterations,
                gradient_norm: gnorm,
            });
        };
        let g_next = numerical_gradient(&land, &next, &free, h)?;
        // Barzilai–Borwein step for the next trial
        let s: Vec<f64> = dir.iter().map(|d| t * d).collect();
        let y: Vec<f64> = g_next.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot_slices(&s, &y);
        step = if sy > 0.0 { dot_slices(&s, &s) / sy } else { 2.0 * t };
        u = next;
        energy = e_next;
        g = g_next;
        history.push(energy);
    }
}
