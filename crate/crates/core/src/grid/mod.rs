//! Tensor grids, nodal fields and boundary-singular quadrature.
//!
//! Every grid carries the exact distance to the boundary at each node. Disk
//! domains are embedded in their bounding square; nodes on or outside the
//! circle are flagged as boundary and carry distance zero.

mod quadrature;

use alloc::sync::Arc;
use alloc::vec::Vec;
use alloc::{format, string::String};

use crate::error::{Error, Result};
use crate::math;

pub use quadrature::{integrate, lumped_mass, Region, Source, SourcePart};

/// The spatial domain.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "lowercase"))]
pub enum Domain {
    Interval { a: f64, b: f64 },
    Rectangle { x0: f64, x1: f64, y0: f64, y1: f64 },
    Disk { cx: f64, cy: f64, r: f64 },
}

impl Domain {
    pub fn validate(&self) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match *self {
            Domain::Interval { a, b } => {
                if !finite(&[a, b]) || b <= a {
                    return Err(Error::DegenerateDomain(format!(
                        "interval [{a}, {b}] must be finite with positive length"
                    )));
                }
            }
            Domain::Rectangle { x0, x1, y0, y1 } => {
                if !finite(&[x0, x1, y0, y1]) || x1 <= x0 || y1 <= y0 {
                    return Err(Error::DegenerateDomain(format!(
                        "rectangle [{x0}, {x1}] x [{y0}, {y1}] must be finite with positive area"
                    )));
                }
            }
            Domain::Disk { cx, cy, r } => {
                if !finite(&[cx, cy, r]) || r <= 0.0 {
                    return Err(Error::DegenerateDomain(format!(
                        "disk with center ({cx}, {cy}) needs a finite positive radius, got {r}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Interval { .. } => 1,
            _ => 2,
        }
    }

    /// Distance to the boundary, clamped to zero outside the domain.
    pub fn distance(&self, x: f64, y: f64) -> f64 {
        let d = match *self {
            Domain::Interval { a, b } => (x - a).min(b - x),
            Domain::Rectangle { x0, x1, y0, y1 } => (x - x0).min(x1 - x).min(y - y0).min(y1 - y),
            Domain::Disk { cx, cy, r } => r - math::hypot(x - cx, y - cy),
        };
        d.max(0.0)
    }

    pub fn diameter(&self) -> f64 {
        match *self {
            Domain::Interval { a, b } => b - a,
            Domain::Rectangle { x0, x1, y0, y1 } => math::hypot(x1 - x0, y1 - y0),
            Domain::Disk { r, .. } => 2.0 * r,
        }
    }

    /// Largest distance to the boundary attained in the domain.
    pub fn inradius(&self) -> f64 {
        match *self {
            Domain::Interval { a, b } => 0.5 * (b - a),
            Domain::Rectangle { x0, x1, y0, y1 } => 0.5 * (x1 - x0).min(y1 - y0),
            Domain::Disk { r, .. } => r,
        }
    }

    fn grown(&self, by_x: f64, by_y: f64) -> Domain {
        match *self {
            Domain::Interval { a, b } => Domain::Interval {
                a: a - by_x,
                b: b + by_x,
            },
            Domain::Rectangle { x0, x1, y0, y1 } => Domain::Rectangle {
                x0: x0 - by_x,
                x1: x1 + by_x,
                y0: y0 - by_y,
                y1: y1 + by_y,
            },
            Domain::Disk { cx, cy, r } => Domain::Disk {
                cx,
                cy,
                r: r + by_x,
            },
        }
    }
}

/// A uniform tensor grid with boundary flags and the distance field.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    domain: Domain,
    n: usize,
    xs: Vec<f64>,
    ys: Vec<f64>,
    hx: f64,
    hy: f64,
    boundary: Vec<bool>,
    dist: Vec<f64>,
}

/// One grid cell: its corner nodes (2 in 1D, 4 in 2D in
/// tensor order `(i,j), (i+1,j), (i,j+1), (i+1,j+1)`).
#[derive(Debug, Clone, Copy)]
pub(crate) struct Cell {
    pub nodes: [usize; 4],
    pub count: usize,
}

/// Build a uniform grid with `n` nodes per axis.
pub fn build_grid(domain: Domain, n: usize) -> Result<Arc<Grid>> {
    domain.validate()?;
    if n < 3 {
        return Err(Error::TooFewNodes(n));
    }
    let linspace = |lo: f64, hi: f64| -> Vec<f64> {
        let step = (hi - lo) / (n - 1) as f64;
        (0..n)
            .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
            .collect()
    };
    let (xs, ys) = match domain {
        Domain::Interval { a, b } => (linspace(a, b), Vec::new()),
        Domain::Rectangle { x0, x1, y0, y1 } => (linspace(x0, x1), linspace(y0, y1)),
        Domain::Disk { cx, cy, r } => (linspace(cx - r, cx + r), linspace(cy - r, cy + r)),
    };
    let hx = xs[1] - xs[0];
    let hy = if ys.is_empty() { hx } else { ys[1] - ys[0] };
    let mut grid = Grid {
        domain,
        n,
        xs,
        ys,
        hx,
        hy,
        boundary: Vec::new(),
        dist: Vec::new(),
    };
    let count = grid.node_count();
    grid.boundary.reserve(count);
    grid.dist.reserve(count);
    for i in 0..count {
        let (x, y) = grid.coords(i);
        let on_edge = match domain {
            Domain::Interval { .. } => i == 0 || i == n - 1,
            Domain::Rectangle { .. } => {
                let (ix, iy) = (i % n, i / n);
                ix == 0 || iy == 0 || ix == n - 1 || iy == n - 1
            }
            Domain::Disk { .. } => domain.distance(x, y) <= 0.0,
        };
        let d = if on_edge {
            0.0
        } else {
            grid.index_distance(i)
                .unwrap_or_else(|| domain.distance(x, y))
        };
        grid.boundary.push(on_edge);
        grid.dist.push(d);
    }
    Ok(Arc::new(grid))
}

impl Grid {
    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// Nodes per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn node_count(&self) -> usize {
        if self.dim() == 1 {
            self.n
        } else {
            self.n * self.n
        }
    }

    /// Mesh spacing; the larger of the two axis spacings in 2D.
    pub fn h(&self) -> f64 {
        self.hx.max(self.hy)
    }

    pub fn hx(&self) -> f64 {
        self.hx
    }

    pub fn hy(&self) -> f64 {
        self.hy
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn coords(&self, node: usize) -> (f64, f64) {
        if self.dim() == 1 {
            (self.xs[node], 0.0)
        } else {
            (self.xs[node % self.n], self.ys[node / self.n])
        }
    }

    /// Distance on interval and rectangle grids from node indices, so that
    /// mirrored nodes get bitwise identical distances.
    fn index_distance(&self, node: usize) -> Option<f64> {
        let n = self.n;
        let side = |k: usize, h: f64| k.min(n - 1 - k) as f64 * h;
        match self.domain {
            Domain::Interval { .. } => Some(side(node, self.hx)),
            Domain::Rectangle { .. } => Some(side(node % n, self.hx).min(side(node / n, self.hy))),
            Domain::Disk { .. } => None,
        }
    }

    /// Whether the nearest boundary point of a node lies on the middle half
    /// of a rectangle side, where the distance behaves as on a smooth
    /// boundary. Always true for intervals and disks.
    pub fn away_from_corners(&self, node: usize) -> bool {
        match self.domain {
            Domain::Rectangle { x0, x1, y0, y1 } => {
                let (x, y) = self.coords(node);
                let (dx, dy) = ((x - x0).min(x1 - x), (y - y0).min(y1 - y));
                if dx <= dy {
                    dy >= 0.25 * (y1 - y0)
                } else {
                    dx >= 0.25 * (x1 - x0)
                }
            }
            _ => true,
        }
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.boundary[node]
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary
    }

    pub fn dist(&self) -> &[f64] {
        &self.dist
    }

    pub fn dist_field(self: &Arc<Self>) -> Field {
        Field {
            grid: Arc::clone(self),
            values: self.dist.clone(),
        }
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.node_count()).filter(move |&i| !self.boundary[i])
    }

    pub fn max_dist(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }

    /// Axis neighbours (2 in 1D, up to 4 in 2D).
    pub fn neighbors(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        let n = self.n;
        let mut out = [usize::MAX; 4];
        if self.dim() == 1 {
            if node > 0 {
                out[0] = node - 1;
            }
            if node + 1 < n {
                out[1] = node + 1;
            }
        } else {
            let (ix, iy) = (node % n, node / n);
            if ix > 0 {
                out[0] = node - 1;
            }
            if ix + 1 < n {
                out[1] = node + 1;
            }
            if iy > 0 {
                out[2] = node - n;
            }
            if iy + 1 < n {
                out[3] = node + n;
            }
        }
        out.into_iter().filter(|&j| j != usize::MAX)
    }

    pub(crate) fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        let n = self.n;
        let one_d = self.dim() == 1;
        let count = if one_d { n - 1 } else { (n - 1) * (n - 1) };
        (0..count).map(move |c| {
            if one_d {
                Cell {
                    nodes: [c, c + 1, 0, 0],
                    count: 2,
                }
            } else {
                let (ix, iy) = (c % (n - 1), c / (n - 1));
                let base = iy * n + ix;
                Cell {
                    nodes: [base, base + 1, base + n, base + n + 1],
                    count: 4,
                }
            }
        })
    }

    /// Half-bandwidth of the nodal stiffness pattern.
    pub(crate) fn bandwidth(&self) -> usize {
        if self.dim() == 1 {
            1
        } else {
            self.n + 1
        }
    }

    /// Grid over the domain grown by about `fraction * diam` on every side,
    /// with the same spacing so that the original nodes are a subset.
    pub fn padded(self: &Arc<Self>, fraction: f64) -> Result<Embedding> {
        if !(fraction > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "padding fraction must be positive, got {fraction}"
            )));
        }
        let margin = fraction * self.domain.diameter();
        let reference = match self.domain {
            Domain::Disk { .. } => self.hx,
            _ => self.h(),
        };
        let cells = (math::round(margin / reference) as usize).max(1);
        let big_domain = match self.domain {
            Domain::Interval { .. } | Domain::Disk { .. } => {
                self.domain.grown(cells as f64 * self.hx, 0.0)
            }
            Domain::Rectangle { .. } => self
                .domain
                .grown(cells as f64 * self.hx, cells as f64 * self.hy),
        };
        let big = build_grid(big_domain, self.n + 2 * cells)?;
        Ok(Embedding {
            inner: Arc::clone(self),
            outer: big,
            offset: cells,
        })
    }
}

/// A grid embedded in a larger grid with the same spacing.
#[derive(Debug, Clone)]
pub struct Embedding {
    pub inner: Arc<Grid>,
    pub outer: Arc<Grid>,
    /// Number of padding cells on each side.
    pub offset: usize,
}

impl Embedding {
    /// Index in the outer grid of an inner-grid node.
    pub fn outer_index(&self, inner_node: usize) -> usize {
        let n = self.inner.n;
        let m = self.outer.n;
        if self.inner.dim() == 1 {
            inner_node + self.offset
        } else {
            let (ix, iy) = (inner_node % n, inner_node / n);
            (iy + self.offset) * m + ix + self.offset
        }
    }

    pub fn restrict(&self, field: &Field) -> Result<Field> {
        field.check_grid(&self.outer)?;
        let values = (0..self.inner.node_count())
            .map(|i| field.values[self.outer_index(i)])
            .collect();
        Field::new(Arc::clone(&self.inner), values)
    }
}

/// Nodes of the boundary strip `{0 < d < delta}`.
///
/// A strip covering every interior node is returned as is, with a warning,
/// since constructions that switch behaviour across the strip become vacuous.
pub fn boundary_strip(grid: &Grid, delta: f64) -> Vec<usize> {
    if delta >= grid.max_dist() {
        log::warn!(
            "strip width {delta} reaches the largest boundary distance {}; strip covers the whole interior",
            grid.max_dist()
        );
    }
    grid.interior_nodes()
        .filter(|&i| grid.dist[i] < delta)
        .collect()
}

/// Nodal values on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::ShapeMismatch {
                expected: grid.node_count(),
                found: values.len(),
            });
        }
        Ok(Field { grid, values })
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &Arc<Grid>, value: f64) -> Self {
        Field {
            grid: Arc::clone(grid),
            values: alloc::vec![value; grid.node_count()],
        }
    }

    /// Build from `f(node, x, y, d)`.
    pub fn from_fn(grid: &Arc<Grid>, mut f: impl FnMut(usize, f64, f64, f64) -> f64) -> Self {
        let values = (0..grid.node_count())
            .map(|i| {
                let (x, y) = grid.coords(i);
                f(i, x, y, grid.dist[i])
            })
            .collect();
        Field {
            grid: Arc::clone(grid),
            values,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, node: usize) -> f64 {
        self.values[node]
    }

    pub(crate) fn check_grid(&self, grid: &Arc<Grid>) -> Result<()> {
        if Arc::ptr_eq(&self.grid, grid) || *self.grid == **grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn same_grid(&self, other: &Field) -> Result<()> {
        other.check_grid(&self.grid)
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Field {
        Field {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Field, mut f: impl FnMut(f64, f64) -> f64) -> Result<Field> {
        self.same_grid(other)?;
        Ok(Field {
            grid: Arc::clone(&self.grid),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn scaled(&self, factor: f64) -> Field {
        self.map(|v| v * factor)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Sup-norm distance to another field on the same grid.
    pub fn sup_diff(&self, other: &Field) -> Result<f64> {
        self.same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// `(min, argmin)` over interior nodes.
    pub fn interior_min(&self) -> (f64, usize) {
        self.grid
            .interior_nodes()
            .map(|i| (self.values[i], i))
            .fold(
                (f64::INFINITY, usize::MAX),
                |a, b| if b.0 < a.0 { b } else { a },
            )
    }

    /// Value of the piecewise linear (1D) or bilinear (2D) interpolant.
    pub fn interpolate(&self, x: f64, y: f64) -> f64 {
        let g = &self.grid;
        let locate = |coords: &[f64], h: f64, t: f64| -> (usize, f64) {
            let last = coords.len() - 2;
            let k = math::floor((t - coords[0]) / h).clamp(0.0, last as f64) as usize;
            (k, ((t - coords[k]) / h).clamp(0.0, 1.0))
        };
        let (ix, sx) = locate(&g.xs, g.hx, x);
        if g.dim() == 1 {
            return self.values[ix] * (1.0 - sx) + self.values[ix + 1] * sx;
        }
        let (iy, sy) = locate(&g.ys, g.hy, y);
        let base = iy * g.n + ix;
        let v = &self.values;
        v[base] * (1.0 - sx) * (1.0 - sy)
            + v[base + 1] * sx * (1.0 - sy)
            + v[base + g.n] * (1.0 - sx) * sy
            + v[base + g.n + 1] * sx * sy
    }

    /// Values with every boundary node set to zero.
    pub fn with_zero_boundary(mut self) -> Field {
        for (v, &b) in self.values.iter_mut().zip(&self.grid.boundary) {
            if b {
                *v = 0.0;
            }
        }
        self
    }

    /// Ratio `self / d` at interior nodes; at boundary nodes the mean ratio of
    /// the interior neighbours (the one-sided limit for fields vanishing
    /// linearly at the boundary).
    pub fn distance_ratio(&self) -> Field {
        let g = &self.grid;
        let mut out = alloc::vec![0.0; g.node_count()];
        for i in 0..g.node_count() {
            if !g.boundary[i] {
                out[i] = self.values[i] / g.dist[i];
            }
        }
        for i in 0..g.node_count() {
            if g.boundary[i] {
                let mut sum = 0.0;
                let mut k = 0usize;
                for j in g.neighbors(i) {
                    if !g.boundary[j] {
                        sum += out[j];
                        k += 1;
                    }
                }
                if k == 0 {
                    // corner nodes: use the diagonal neighbour
                    for j in g.neighbors(i).flat_map(|j| g.neighbors(j)) {
                        if !g.boundary[j] {
                            sum += out[j];
                            k += 1;
                        }
                    }
                }
                out[i] = if k == 0 { 1.0 } else { sum / k as f64 };
            }
        }
        Field {
            grid: Arc::clone(g),
            values: out,
        }
    }
}

pub(crate) fn describe_node(grid: &Grid, node: usize) -> String {
    let (x, y) = grid.coords(node);
    if grid.dim() == 1 {
        format!("node {node} (x = {x})")
    } else {
        format!("node {node} (x = {x}, y = {y})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit_interval(n: usize) -> Arc<Grid> {
        build_grid(Domain::Interval { a: 0.0, b: 1.0 }, n).unwrap()
    }

    #[test]
    fn interval_nodes_and_distance() {
        let g = unit_interval(5);
        assert_eq!(g.xs(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(g.dist(), &[0.0, 0.25, 0.5, 0.25, 0.0]);
        assert_eq!(g.boundary_mask(), &[true, false, false, false, true]);
    }

    #[test]
    fn disk_center_distance() {
        let g = build_grid(
            Domain::Disk {
                cx: 0.0,
                cy: 0.0,
                r: 1.0,
            },
            9,
        )
        .unwrap();
        let center = 4 * 9 + 4;
        assert_eq!(g.coords(center), (0.0, 0.0));
        assert_abs_diff_eq!(g.dist()[center], 1.0, epsilon = 1e-15);
        // corners of the bounding square are outside the disk
        assert!(g.is_boundary(0));
        assert_eq!(g.dist()[0], 0.0);
    }

    #[test]
    fn rectangle_distance_to_nearest_side() {
        let g = build_grid(
            Domain::Rectangle {
                x0: 0.0,
                x1: 1.0,
                y0: 0.0,
                y1: 2.0,
            },
            5,
        )
        .unwrap();
        let node = 2 * 5 + 2;
        assert_eq!(g.coords(node), (0.5, 1.0));
        assert_abs_diff_eq!(g.dist()[node], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn degenerate_domains_rejected() {
        assert!(matches!(
            build_grid(Domain::Interval { a: 1.0, b: 1.0 }, 5),
            Err(Error::DegenerateDomain(_))
        ));
        assert!(matches!(
            build_grid(
                Domain::Disk {
                    cx: 0.0,
                    cy: 0.0,
                    r: -1.0
                },
                5
            ),
            Err(Error::DegenerateDomain(_))
        ));
        assert!(matches!(
            build_grid(
                Domain::Interval {
                    a: 0.0,
                    b: f64::INFINITY
                },
                5
            ),
            Err(Error::DegenerateDomain(_))
        ));
        assert_eq!(
            build_grid(Domain::Interval { a: 0.0, b: 1.0 }, 2),
            Err(Error::TooFewNodes(2))
        );
    }

    #[test]
    fn distance_invariants_hold_on_all_domains() {
        let domains = [
            Domain::Interval { a: -1.0, b: 2.0 },
            Domain::Rectangle {
                x0: 0.0,
                x1: 1.0,
                y0: 0.0,
                y1: 2.0,
            },
            Domain::Disk {
                cx: 0.5,
                cy: -0.5,
                r: 1.5,
            },
        ];
        for domain in domains {
            let g = build_grid(domain, 17).unwrap();
            for i in 0..g.node_count() {
                if g.is_boundary(i) {
                    assert_eq!(g.dist()[i], 0.0);
                } else {
                    assert!(g.dist()[i] > 0.0);
                }
                for j in g.neighbors(i) {
                    assert!((g.dist()[i] - g.dist()[j]).abs() <= g.h() * (1.0 + 1e-12));
                }
            }
        }
    }

    #[test]
    fn strip_examples() {
        let g = unit_interval(11);
        let strip = boundary_strip(&g, 0.15);
        let xs: Vec<f64> = strip.iter().map(|&i| g.xs()[i]).collect();
        assert_eq!(strip.len(), 2);
        assert_abs_diff_eq!(xs[0], 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(xs[1], 0.9, epsilon = 1e-12);
        assert!(boundary_strip(&g, 0.0).is_empty());
        // whole interior once delta exceeds the inradius
        assert_eq!(boundary_strip(&g, 0.6).len(), 9);
    }

    #[test]
    fn strip_eight_nodes_at_n101() {
        let g = unit_interval(101);
        let strip = boundary_strip(&g, 0.05);
        // brute force: nodes k/100 with min(k, 100-k)/100 < 0.05, k interior
        let expected: Vec<usize> = (1..100).filter(|&k: &usize| k.min(100 - k) < 5).collect();
        assert_eq!(strip, expected);
        assert_eq!(strip.len(), 8);
    }

    #[test]
    fn padding_keeps_nodes_aligned() {
        let g = unit_interval(9);
        let emb = g.padded(0.25).unwrap();
        assert_eq!(emb.offset, 2);
        for i in 0..g.node_count() {
            let j = emb.outer_index(i);
            assert_abs_diff_eq!(emb.outer.coords(j).0, g.coords(i).0, epsilon = 1e-14);
        }
        let rect = build_grid(
            Domain::Rectangle {
                x0: 0.0,
                x1: 1.0,
                y0: 0.0,
                y1: 1.0,
            },
            9,
        )
        .unwrap();
        let emb = rect.padded(0.25).unwrap();
        for i in 0..rect.node_count() {
            let (x, y) = rect.coords(i);
            let (bx, by) = emb.outer.coords(emb.outer_index(i));
            assert_abs_diff_eq!(x, bx, epsilon = 1e-14);
            assert_abs_diff_eq!(y, by, epsilon = 1e-14);
        }
    }

    #[test]
    fn distance_ratio_extrapolates_to_boundary() {
        let g = unit_interval(11);
        let u = Field::from_fn(&g, |_, x, _, _| 3.0 * x * (1.0 - x));
        let r = u.distance_ratio();
        assert_abs_diff_eq!(r.get(0), r.get(1), epsilon = 1e-15);
        assert_abs_diff_eq!(r.get(1), 3.0 * 0.9, epsilon = 1e-12);
    }

    #[test]
    fn interpolation_reproduces_bilinear_functions() {
        let g = build_grid(
            Domain::Rectangle {
                x0: 0.0,
                x1: 2.0,
                y0: -1.0,
                y1: 1.0,
            },
            7,
        )
        .unwrap();
        let f = Field::from_fn(&g, |_, x, y, _| 1.0 + 2.0 * x - y + 0.5 * x * y);
        for &(x, y) in &[(0.1, 0.2), (1.7, -0.9), (2.0, 1.0)] {
            assert_abs_diff_eq!(
                f.interpolate(x, y),
                1.0 + 2.0 * x - y + 0.5 * x * y,
                epsilon = 1e-12
            );
        }
    }
}
