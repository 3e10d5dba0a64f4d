//! Element loops for the discrete energy
//! `J(u) = sum_gp w (1/p) (|grad u|^2 + eps^2)^(p/2) - b.u + sum_i m_i G_i(u_i)`.
//!
//! P1 elements with the midpoint rule in 1D, Q1 elements with 2x2 Gauss
//! points in 2D; `p` is interpolated to the points.

use alloc::vec;
use alloc::vec::Vec;

use super::{Penalty, PlapProblem};
use crate::grid::{lumped_mass, Field, Grid};
use crate::linalg::BandMatrix;
use crate::math;

const GAUSS2: [f64; 2] = [0.211_324_865_405_187_1, 0.788_675_134_594_812_9];

#[derive(Debug, Clone)]
pub(crate) struct GaussPoint {
    pub nodes: [usize; 4],
    pub count: usize,
    pub weight: f64,
    pub p: f64,
    pub dn: [[f64; 2]; 4],
}

impl GaussPoint {
    #[inline]
    pub fn grad(&self, u: &[f64]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for k in 0..self.count {
            let v = u[self.nodes[k]];
            g[0] += self.dn[k][0] * v;
            g[1] += self.dn[k][1] * v;
        }
        g
    }
}

/// Gauss points for a grid and nodal exponent field.
pub(crate) fn gauss_points(grid: &Grid, p: &[f64]) -> Vec<GaussPoint> {
    let mut out = Vec::new();
    let (hx, hy) = (grid.hx(), grid.hy());
    for c in grid.cells() {
        if c.count == 2 {
            let [a, b, ..] = c.nodes;
            out.push(GaussPoint {
                nodes: c.nodes,
                count: 2,
                weight: hx,
                p: 0.5 * (p[a] + p[b]),
                dn: [[-1.0 / hx, 0.0], [1.0 / hx, 0.0], [0.0; 2], [0.0; 2]],
            });
            continue;
        }
        for &s in &GAUSS2 {
            for &t in &GAUSS2 {
                let shape = [(1.0 - s) * (1.0 - t), s * (1.0 - t), (1.0 - s) * t, s * t];
                let pp = (0..4).map(|k| shape[k] * p[c.nodes[k]]).sum();
                out.push(GaussPoint {
                    nodes: c.nodes,
                    count: 4,
                    weight: 0.25 * hx * hy,
                    p: pp,
                    dn: [
                        [-(1.0 - t) / hx, -(1.0 - s) / hy],
                        [(1.0 - t) / hx, -s / hy],
                        [-t / hx, (1.0 - s) / hy],
                        [t / hx, s / hy],
                    ],
                });
            }
        }
    }
    out
}

/// Nodal reaction `c_i (|u|^(p-2) u - M_i)^+` with its convex potential.
#[derive(Debug, Clone)]
pub(crate) struct NodalPenalty {
    weight: Vec<f64>,
    threshold: Vec<f64>,
}

impl NodalPenalty {
    fn new(penalty: &Penalty, mass: &[f64]) -> Self {
        NodalPenalty {
            weight: penalty
                .coeff
                .values()
                .iter()
                .zip(mass)
                .map(|(c, m)| c * m)
                .collect(),
            threshold: penalty.threshold.values().to_vec(),
        }
    }

    /// `(G, G', G'')` at node `i`, zero below the activation point.
    #[inline]
    fn eval(&self, i: usize, u: f64, p: f64) -> (f64, f64, f64) {
        let c = self.weight[i];
        if c == 0.0 {
            return (0.0, 0.0, 0.0);
        }
        let m = self.threshold[i];
        let force = math::signed_pow(u, p) - m;
        if force <= 0.0 {
            return (0.0, 0.0, 0.0);
        }
        // activation point s with s^(p-1) = m
        let s = if m > 0.0 {
            math::powf(m, 1.0 / (p - 1.0))
        } else {
            -math::powf(-m, 1.0 / (p - 1.0))
        };
        let prim = |z: f64| math::powf(z.abs(), p) / p - m * z;
        let g = prim(u) - prim(s);
        (
            c * g,
            c * force,
            c * (p - 1.0) * math::powf(u.abs(), p - 2.0),
        )
    }
}

/// Everything the Newton iteration needs, assembled once per problem.
#[derive(Debug, Clone)]
pub(crate) struct Discrete {
    pub points: Vec<GaussPoint>,
    pub load: Vec<f64>,
    pub boundary: Vec<bool>,
    p_nodes: Vec<f64>,
    penalty: Option<NodalPenalty>,
    bandwidth: usize,
}

impl Discrete {
    pub fn new(prob: &PlapProblem) -> crate::Result<Self> {
        let grid = &prob.grid;
        let mass = lumped_mass(grid);
        Ok(Discrete {
            points: gauss_points(grid, prob.p.values()),
            load: prob.rhs.load_vector(grid)?,
            boundary: grid.boundary_mask().to_vec(),
            p_nodes: prob.p.values().to_vec(),
            penalty: prob
                .penalty
                .as_ref()
                .map(|pen| NodalPenalty::new(pen, &mass)),
            bandwidth: grid.bandwidth(),
        })
    }

    /// Only the flux part; the load is zero.
    pub fn operator_only(grid: &Grid, p: &[f64]) -> Self {
        Discrete {
            points: gauss_points(grid, p),
            load: vec![0.0; grid.node_count()],
            boundary: grid.boundary_mask().to_vec(),
            p_nodes: p.to_vec(),
            penalty: None,
            bandwidth: grid.bandwidth(),
        }
    }

    pub fn energy(&self, u: &[f64], eps: f64) -> f64 {
        let mut j = 0.0;
        for gp in &self.points {
            let g = gp.grad(u);
            let s = g[0] * g[0] + g[1] * g[1] + eps * eps;
            if s > 0.0 {
                j += gp.weight * math::powf(s, 0.5 * gp.p) / gp.p;
            }
        }
        for (i, (&b, &ui)) in self.load.iter().zip(u).enumerate() {
            if !self.boundary[i] {
                j -= b * ui;
            }
        }
        if let Some(pen) = &self.penalty {
            for i in 0..u.len() {
                if !self.boundary[i] {
                    j += pen.eval(i, u[i], self.p_nodes[i]).0;
                }
            }
        }
        j
    }

    /// `integral |grad u|_eps^(p-2) grad u . grad phi_i` for every node.
    pub fn flux_action(&self, u: &[f64], eps: f64) -> Vec<f64> {
        let mut r = vec![0.0; u.len()];
        for gp in &self.points {
            let g = gp.grad(u);
            let s = g[0] * g[0] + g[1] * g[1] + eps * eps;
            if s == 0.0 {
                continue;
            }
            let a = gp.weight * math::powf(s, 0.5 * (gp.p - 2.0));
            for k in 0..gp.count {
                r[gp.nodes[k]] += a * (g[0] * gp.dn[k][0] + g[1] * gp.dn[k][1]);
            }
        }
        r
    }

    /// Energy gradient; zero on boundary nodes.
    pub fn gradient(&self, u: &[f64], eps: f64) -> Vec<f64> {
        let mut r = self.flux_action(u, eps);
        for i in 0..u.len() {
            if self.boundary[i] {
                r[i] = 0.0;
                continue;
            }
            r[i] -= self.load[i];
            if let Some(pen) = &self.penalty {
                r[i] += pen.eval(i, u[i], self.p_nodes[i]).1;
            }
        }
        r
    }

    /// Hessian with boundary rows replaced by identity rows.
    pub fn hessian(&self, u: &[f64], eps: f64) -> BandMatrix {
        let mut h = BandMatrix::zeros(u.len(), self.bandwidth);
        for gp in &self.points {
            let g = gp.grad(u);
            let s = g[0] * g[0] + g[1] * g[1] + eps * eps;
            if s == 0.0 {
                continue;
            }
            let a = gp.weight * math::powf(s, 0.5 * (gp.p - 2.0));
            let b = gp.weight * (gp.p - 2.0) * math::powf(s, 0.5 * (gp.p - 4.0));
            let mut gn = [0.0; 4];
            for k in 0..gp.count {
                gn[k] = g[0] * gp.dn[k][0] + g[1] * gp.dn[k][1];
            }
            for k in 0..gp.count {
                for l in 0..=k {
                    let dot = gp.dn[k][0] * gp.dn[l][0] + gp.dn[k][1] * gp.dn[l][1];
                    let (i, j) = (gp.nodes[k], gp.nodes[l]);
                    let v = a * dot + b * gn[k] * gn[l];
                    h.add(i, j, v);
                }
            }
        }
        if let Some(pen) = &self.penalty {
            for i in 0..u.len() {
                if !self.boundary[i] {
                    h.add(i, i, pen.eval(i, u[i], self.p_nodes[i]).2);
                }
            }
        }
        for i in 0..u.len() {
            if self.boundary[i] {
                h.pin(i);
            }
        }
        h
    }

    /// Stiffness matrix of the Laplacian (all coefficients one).
    pub fn laplacian(&self, n: usize) -> BandMatrix {
        let mut h = BandMatrix::zeros(n, self.bandwidth);
        for gp in &self.points {
            for k in 0..gp.count {
                for l in 0..=k {
                    let dot = gp.dn[k][0] * gp.dn[l][0] + gp.dn[k][1] * gp.dn[l][1];
                    h.add(gp.nodes[k], gp.nodes[l], gp.weight * dot);
                }
            }
        }
        for i in 0..n {
            if self.boundary[i] {
                h.pin(i);
            }
        }
        h
    }
}

/// Largest gradient magnitude of a field over the Gauss points.
pub(crate) fn max_gradient(points: &[GaussPoint], u: &Field) -> f64 {
    points.iter().fold(0.0, |m, gp| {
        let g = gp.grad(u.values());
        m.max(math::hypot(g[0], g[1]))
    })
}
