//! Bar and rotational-spring potentials and their finite-difference
//! second variations.
//!
//! Both elements store their rest state (length or angle) and evaluate the
//! potential from nodal positions. Positions are passed as flat slices of
//! `n_nodes * dim` coordinates so the same element serves the planar solver
//! (`dim = 2`) and the 3D model (`dim = 3`).

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::math::{atan2, cross, distance, dot, norm, sqrt};

/// Two-node element that only resists stretch and compression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarElement {
    pub nodes: [usize; 2],
    /// `EA / L0` in N/mm.
    pub stiffness: f64,
    /// Rest length in mm.
    pub rest_length: f64,
}

impl BarElement {
    pub fn new(nodes: [usize; 2], stiffness: f64, rest_length: f64) -> Result<Self> {
        if !(rest_length > 0.0) || !rest_length.is_finite() {
            return Err(Error::DegenerateGeometry {
                what: "bar rest length must be positive",
            });
        }
        if !(stiffness > 0.0) || !stiffness.is_finite() {
            return Err(Error::Domain {
                what: "bar stiffness EA/L0",
                value: stiffness,
            });
        }
        Ok(Self {
            nodes,
            stiffness,
            rest_length,
        })
    }

    /// Builds a bar whose rest length is the distance between `xi` and `xj`.
    pub fn between(nodes: [usize; 2], stiffness: f64, xi: &[f64], xj: &[f64]) -> Result<Self> {
        Self::new(nodes, stiffness, distance(xi, xj))
    }

    /// Potential at deformed positions `xi`, `xj`.
    pub fn energy(&self, xi: &[f64], xj: &[f64]) -> f64 {
        let stretch = distance(xi, xj) - self.rest_length;
        0.5 * self.stiffness * stretch * stretch
    }
}

/// Three-node element penalising the change of the angle at the vertex node
/// (the middle entry of `nodes`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpringElement {
    pub nodes: [usize; 3],
    /// Rotational stiffness in N·mm/rad.
    pub stiffness: f64,
    /// Rest angle in rad, in `(0, π]`.
    pub rest_angle: f64,
}

impl SpringElement {
    pub fn new(nodes: [usize; 3], stiffness: f64, rest_angle: f64) -> Result<Self> {
        if !(stiffness > 0.0) || !stiffness.is_finite() {
            return Err(Error::Domain {
                what: "spring stiffness k_theta",
                value: stiffness,
            });
        }
        if !(rest_angle > 0.0 && rest_angle <= core::f64::consts::PI) {
            return Err(Error::Domain {
                what: "spring rest angle",
                value: rest_angle,
            });
        }
        Ok(Self {
            nodes,
            stiffness,
            rest_angle,
        })
    }

    /// Builds a spring whose rest angle is measured from the given positions.
    pub fn between(
        nodes: [usize; 3],
        stiffness: f64,
        xi: &[f64],
        xj: &[f64],
        xk: &[f64],
    ) -> Result<Self> {
        Self::new(nodes, stiffness, angle_at_vertex(xi, xj, xk)?)
    }

    pub fn energy(&self, xi: &[f64], xj: &[f64], xk: &[f64]) -> Result<f64> {
        let d = angle_at_vertex(xi, xj, xk)? - self.rest_angle;
        Ok(0.5 * self.stiffness * d * d)
    }
}

/// Angle `∠ i j k` at vertex `j`, as `atan2(|a×b|, a·b)` of the two arms.
/// Unlike the arccos of the normalised dot product this stays accurate for
/// nearly straight and nearly folded springs.
pub fn angle_at_vertex(xi: &[f64], xj: &[f64], xk: &[f64]) -> Result<f64> {
    let mut a = [0.0; 3];
    let mut b = [0.0; 3];
    for d in 0..xj.len() {
        a[d] = xi[d] - xj[d];
        b[d] = xk[d] - xj[d];
    }
    let na = sqrt(dot(&a, &a));
    let nb = sqrt(dot(&b, &b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::DegenerateGeometry {
            what: "rotational spring arm has zero length",
        });
    }
    Ok(atan2(norm(&cross(&a, &b)), dot(&a, &b)))
}

fn displaced(x: &[f64], u: &[f64]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for d in 0..x.len() {
        out[d] = x[d] + u[d];
    }
    out
}

/// Bar potential with rest positions `x` and displacements `u`. The rest
/// length is taken from `x`; the stiffness `EA/L0` from `bar`.
pub fn bar_potential(
    xi: &[f64],
    xj: &[f64],
    ui: &[f64],
    uj: &[f64],
    bar: &BarElement,
) -> Result<f64> {
    let rest = distance(xi, xj);
    if rest == 0.0 {
        return Err(Error::DegenerateGeometry {
            what: "bar rest nodes coincide",
        });
    }
    let n = xi.len();
    let current = distance(&displaced(xi, ui)[..n], &displaced(xj, uj)[..n]);
    let stretch = current - rest;
    Ok(0.5 * bar.stiffness * stretch * stretch)
}

/// Spring potential with rest positions `x` and displacements `u`. The rest
/// angle is measured from `x`.
#[allow(clippy::too_many_arguments)]
pub fn spring_potential(
    xi: &[f64],
    xj: &[f64],
    xk: &[f64],
    ui: &[f64],
    uj: &[f64],
    uk: &[f64],
    spring: &SpringElement,
) -> Result<f64> {
    let n = xj.len();
    let rest = angle_at_vertex(xi, xj, xk)?;
    let now = angle_at_vertex(
        &displaced(xi, ui)[..n],
        &displaced(xj, uj)[..n],
        &displaced(xk, uk)[..n],
    )?;
    let d = now - rest;
    Ok(0.5 * spring.stiffness * d * d)
}

/// Finite-difference step control. The step for an element is
/// `relative_step` times its characteristic length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdConfig {
    pub relative_step: f64,
}

impl Default for FdConfig {
    fn default() -> Self {
        Self {
            relative_step: 1e-4,
        }
    }
}

/// Element stiffness matrix with the global DoF index of each row.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalStiffness {
    pub matrix: Matrix,
    pub dofs: Vec<usize>,
}

/// Second variation of `potential` at `x` by central differences:
///
/// ```text
/// K[a][a] = (Π(x+Δe_a) - 2Π(x) + Π(x-Δe_a)) / Δ²
/// K[a][b] = (Π(++) - Π(+-) - Π(-+) + Π(--)) / 4Δ²
/// ```
///
/// The off-diagonal stencil is symmetric in `a`, `b`, so only the upper
/// triangle is evaluated and mirrored.
pub fn hessian_fd<F>(mut potential: F, x: &[f64], delta: f64) -> Result<Matrix>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if !(delta > 0.0) {
        return Err(Error::Domain {
            what: "finite-difference step",
            value: delta,
        });
    }
    let n = x.len();
    let mut probe = x.to_vec();
    let mut eval = |probe: &[f64], a: usize, b: usize, oa: f64, ob: f64| -> Result<f64> {
        let v = potential(probe)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite {
                dof_a: a,
                dof_b: b,
                offset_a: oa,
                offset_b: ob,
            })
        }
    };
    let center = eval(&probe, 0, 0, 0.0, 0.0)?;
    let mut k = Matrix::zeros(n, n);
    let d2 = delta * delta;
    for a in 0..n {
        probe[a] = x[a] + delta;
        let p = eval(&probe, a, a, delta, 0.0)?;
        probe[a] = x[a] - delta;
        let m = eval(&probe, a, a, -delta, 0.0)?;
        probe[a] = x[a];
        k[(a, a)] = (p - 2.0 * center + m) / d2;
        for b in (a + 1)..n {
            let mut corner = |sa: f64, sb: f64, probe: &mut [f64]| -> Result<f64> {
                probe[a] = x[a] + sa * delta;
                probe[b] = x[b] + sb * delta;
                let v = eval(probe, a, b, sa * delta, sb * delta);
                probe[a] = x[a];
                probe[b] = x[b];
                v
            };
            let pp = corner(1.0, 1.0, &mut probe)?;
            let pm = corner(1.0, -1.0, &mut probe)?;
            let mp = corner(-1.0, 1.0, &mut probe)?;
            let mm = corner(-1.0, -1.0, &mut probe)?;
            let v = (pp - pm - mp + mm) / (4.0 * d2);
            k[(a, b)] = v;
            k[(b, a)] = v;
        }
    }
    Ok(k)
}

/// Gradient of `potential` at `x` by central differences with step `delta`.
pub fn gradient_fd<F>(mut potential: F, x: &[f64], delta: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let mut probe = x.to_vec();
    let mut g = Vec::with_capacity(x.len());
    for a in 0..x.len() {
        probe[a] = x[a] + delta;
        let p = potential(&probe)?;
        probe[a] = x[a] - delta;
        let m = potential(&probe)?;
        probe[a] = x[a];
        if !(p.is_finite() && m.is_finite()) {
            return Err(Error::NonFinite {
                dof_a: a,
                dof_b: a,
                offset_a: delta,
                offset_b: -delta,
            });
        }
        g.push((p - m) / (2.0 * delta));
    }
    Ok(g)
}

/// Gathers the coordinates of `nodes` from a flat global position vector.
pub(crate) fn gather(positions: &[f64], nodes: &[usize], dim: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(nodes.len() * dim);
    for &n in nodes {
        out.extend_from_slice(&positions[n * dim..(n + 1) * dim]);
    }
    out
}

fn dof_map(nodes: &[usize], dim: usize) -> Vec<usize> {
    nodes
        .iter()
        .flat_map(|&n| (0..dim).map(move |d| n * dim + d))
        .collect()
}

impl BarElement {
    /// Step used for this bar's finite differences.
    pub fn fd_step(&self, fd: &FdConfig) -> f64 {
        fd.relative_step * self.rest_length
    }

    /// Tangent stiffness (`2·dim` square) at the given global positions.
    pub fn local_stiffness(
        &self,
        positions: &[f64],
        dim: usize,
        fd: &FdConfig,
    ) -> Result<LocalStiffness> {
        let x = gather(positions, &self.nodes, dim);
        let matrix = hessian_fd(
            |p| Ok(self.energy(&p[..dim], &p[dim..])),
            &x,
            self.fd_step(fd),
        )?;
        Ok(LocalStiffness {
            matrix,
            dofs: dof_map(&self.nodes, dim),
        })
    }
}

impl SpringElement {
    /// Mean rest arm length, used to scale the finite-difference step.
    pub fn characteristic_length(&self, rest_positions: &[f64], dim: usize) -> f64 {
        let x = gather(rest_positions, &self.nodes, dim);
        0.5 * (distance(&x[..dim], &x[dim..2 * dim]) + distance(&x[2 * dim..], &x[dim..2 * dim]))
    }

    /// Tangent stiffness (`3·dim` square) at the given global positions.
    pub fn local_stiffness(
        &self,
        positions: &[f64],
        dim: usize,
        delta: f64,
    ) -> Result<LocalStiffness> {
        let x = gather(positions, &self.nodes, dim);
        let matrix = hessian_fd(
            |p| self.energy(&p[..dim], &p[dim..2 * dim], &p[2 * dim..]),
            &x,
            delta,
        )?;
        Ok(LocalStiffness {
            matrix,
            dofs: dof_map(&self.nodes, dim),
        })
    }
}
