//! Load vectors and integrals of sources that may blow up like a power of the
//! boundary distance.
//!
//! In 1D every cell is split at the kink of `d` and at the strip edge; pieces
//! touching the boundary use a product rule exact for `t^a * quadratic`,
//! the rest use 4-point Gauss. In 2D cells are split at the strip lines and
//! integrated with 6x6 Gauss after a graded substitution `x = x_b + L*tau^m`
//! towards any side of the domain the piece touches.

use alloc::vec;
use alloc::vec::Vec;

use super::{Cell, Domain, Field, Grid};
use crate::error::{Error, Result};
use crate::expr::ExprField;
use crate::math;

const GL4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_8),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_8),
];

const GL6: [(f64, f64); 6] = [
    (-0.932_469_514_203_152, 0.171_324_492_379_170_4),
    (-0.661_209_386_466_264_5, 0.360_761_573_048_138_6),
    (-0.238_619_186_083_196_9, 0.467_913_934_572_691),
    (0.238_619_186_083_196_9, 0.467_913_934_572_691),
    (0.661_209_386_466_264_5, 0.360_761_573_048_138_6),
    (0.932_469_514_203_152, 0.171_324_492_379_170_4),
];

/// Where a source part is active.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    Everywhere,
    /// `d < delta`
    Strip(f64),
    /// `d >= delta`
    OffStrip(f64),
}

impl Region {
    fn contains(&self, d: f64) -> bool {
        match *self {
            Region::Everywhere => true,
            Region::Strip(delta) => d < delta,
            Region::OffStrip(delta) => d >= delta,
        }
    }

    fn delta(&self) -> Option<f64> {
        match *self {
            Region::Everywhere => None,
            Region::Strip(delta) | Region::OffStrip(delta) => Some(delta),
        }
    }
}

/// `factor * d^exponent` restricted to a region; both fields are
/// interpolated between nodes.
#[derive(Debug, Clone)]
pub struct SourcePart {
    pub region: Region,
    pub factor: Field,
    pub exponent: Option<Field>,
}

impl SourcePart {
    pub fn smooth(factor: Field) -> Self {
        SourcePart {
            region: Region::Everywhere,
            factor,
            exponent: None,
        }
    }

    pub fn power(factor: Field, exponent: Field) -> Self {
        SourcePart {
            region: Region::Everywhere,
            factor,
            exponent: Some(exponent),
        }
    }

    pub fn within(mut self, region: Region) -> Self {
        self.region = region;
        self
    }

    /// Pointwise value at a node; infinite at the boundary when singular.
    pub fn value_at(&self, node: usize) -> f64 {
        let grid = self.factor.grid();
        if !self.region.contains(grid.dist()[node]) {
            return 0.0;
        }
        let f = self.factor.get(node);
        match &self.exponent {
            None => f,
            Some(e) => f * math::pow_or_one(grid.dist()[node], e.get(node)),
        }
    }
}

/// A sum of source parts, such as a right-hand side of the scalar problem.
#[derive(Debug, Clone, Default)]
pub struct Source {
    pub parts: Vec<SourcePart>,
}

struct Point {
    nodes: [usize; 4],
    shape: [f64; 4],
    count: usize,
    weight: f64,
    d: f64,
    /// Power of `d` already carried by `weight`.
    carried: f64,
}

impl Point {
    fn interp(&self, values: &[f64]) -> f64 {
        (0..self.count)
            .map(|k| self.shape[k] * values[self.nodes[k]])
            .sum()
    }
}

impl Source {
    pub fn new() -> Self {
        Source { parts: Vec::new() }
    }

    pub fn single(part: SourcePart) -> Self {
        Source { parts: vec![part] }
    }

    pub fn with(mut self, part: SourcePart) -> Self {
        self.parts.push(part);
        self
    }

    pub fn scaled(&self, c: f64) -> Self {
        Source {
            parts: self
                .parts
                .iter()
                .map(|p| SourcePart {
                    region: p.region,
                    factor: p.factor.scaled(c),
                    exponent: p.exponent.clone(),
                })
                .collect(),
        }
    }

    /// Pointwise value at a node (sum over parts).
    pub fn value_at(&self, node: usize) -> f64 {
        self.parts.iter().map(|p| p.value_at(node)).sum()
    }

    fn validate(&self, grid: &alloc::sync::Arc<Grid>) -> Result<()> {
        for part in &self.parts {
            part.factor.check_grid(grid)?;
            if let Some(e) = &part.exponent {
                e.check_grid(grid)?;
                let lowest = e.min();
                if !(lowest > -1.0) {
                    return Err(Error::NonIntegrable(lowest));
                }
            }
        }
        Ok(())
    }

    /// `b_i = integral of source * phi_i` for every nodal basis function.
    pub fn load_vector(&self, grid: &alloc::sync::Arc<Grid>) -> Result<Vec<f64>> {
        self.validate(grid)?;
        let mut b = vec![0.0; grid.node_count()];
        for part in &self.parts {
            visit_part(grid, part, |q, value| {
                for k in 0..q.count {
                    b[q.nodes[k]] += q.weight * value * q.shape[k];
                }
            });
        }
        Ok(b)
    }

    /// Integral of the source over the domain.
    pub fn integral(&self, grid: &alloc::sync::Arc<Grid>) -> Result<f64> {
        self.validate(grid)?;
        let mut total = 0.0;
        for part in &self.parts {
            visit_part(grid, part, |q, value| total += q.weight * value);
        }
        Ok(total)
    }
}

fn visit_part(grid: &Grid, part: &SourcePart, mut sink: impl FnMut(&Point, f64)) {
    let factor = part.factor.values();
    let exponent = part.exponent.as_ref().map(|e| e.values());
    let lowest = exponent.map_or(0.0, |e| e.iter().copied().fold(0.0, f64::min));
    let mut eval = |q: &Point| {
        let f = q.interp(factor);
        if f == 0.0 {
            return;
        }
        let value = match exponent {
            None => f,
            Some(e) => {
                let rel = q.interp(e) - q.carried;
                if q.d <= 0.0 {
                    f
                } else {
                    f * math::powf(q.d, rel)
                }
            }
        };
        sink(q, value);
    };
    match grid.domain() {
        Domain::Interval { .. } => visit_1d(grid, part.region, exponent, &mut eval),
        _ => visit_2d(grid, part.region, lowest, &mut eval),
    }
}

fn visit_1d(grid: &Grid, region: Region, exponent: Option<&[f64]>, f: &mut impl FnMut(&Point)) {
    let Domain::Interval { a, b } = *grid.domain() else {
        unreachable!()
    };
    let xs = grid.xs();
    let n = xs.len();
    let mid = 0.5 * (a + b);
    let mut breaks = vec![mid];
    if let Some(delta) = region.delta() {
        breaks.push(a + delta);
        breaks.push(b - delta);
    }
    for c in grid.cells() {
        let (xl, xr) = (xs[c.nodes[0]], xs[c.nodes[1]]);
        let h = xr - xl;
        let mut cuts = vec![xl];
        for &t in &breaks {
            if t > xl && t < xr {
                cuts.push(t);
            }
        }
        cuts.push(xr);
        cuts.sort_by(f64::total_cmp);
        for w in cuts.windows(2) {
            let (pa, pb) = (w[0], w[1]);
            if pb <= pa {
                continue;
            }
            let centre = 0.5 * (pa + pb);
            if !region.contains(grid.domain().distance(centre, 0.0)) {
                continue;
            }
            let point = |x: f64, weight: f64, carried: f64| {
                let s = ((x - xl) / h).clamp(0.0, 1.0);
                Point {
                    nodes: [c.nodes[0], c.nodes[1], 0, 0],
                    shape: [1.0 - s, s, 0.0, 0.0],
                    count: 2,
                    weight,
                    d: grid.domain().distance(x, 0.0),
                    carried,
                }
            };
            let touches_left = c.nodes[0] == 0 && pa == xl;
            let touches_right = c.nodes[1] == n - 1 && pb == xr;
            if touches_left || touches_right {
                let edge_node = if touches_left { 0 } else { n - 1 };
                let a0 = exponent.map_or(0.0, |e| e[edge_node]);
                let len = pb - pa;
                let weights = product_weights(len, a0);
                for (k, &wk) in weights.iter().enumerate() {
                    let t = 0.5 * len * k as f64;
                    let x = if touches_left { pa + t } else { pb - t };
                    f(&point(x, wk, a0));
                }
            } else {
                let half = 0.5 * (pb - pa);
                for &(z, w) in &GL4 {
                    f(&point(centre + half * z, half * w, 0.0));
                }
            }
        }
    }
}

/// Weights at `t = 0, T/2, T` of the rule exact for `t^a * quadratic` on `[0, T]`.
fn product_weights(len: f64, a: f64) -> [f64; 3] {
    let scale = math::powf(len, a + 1.0);
    let m = [scale / (a + 1.0), scale / (a + 2.0), scale / (a + 3.0)];
    [
        2.0 * m[2] - 3.0 * m[1] + m[0],
        4.0 * (m[1] - m[2]),
        2.0 * m[2] - m[1],
    ]
}

/// Gauss points on `[lo, hi]`, graded towards `lo` or `hi` with power `m`.
fn axis_rule(lo: f64, hi: f64, towards_lo: bool, towards_hi: bool, m: f64) -> Vec<(f64, f64)> {
    let len = hi - lo;
    if !(towards_lo || towards_hi) || m == 1.0 {
        let half = 0.5 * len;
        let centre = 0.5 * (lo + hi);
        return GL6
            .iter()
            .map(|&(z, w)| (centre + half * z, half * w))
            .collect();
    }
    GL6.iter()
        .map(|&(z, w)| {
            let tau = 0.5 * (z + 1.0);
            let jac = len * m * math::powf(tau, m - 1.0) * 0.5 * w;
            let off = len * math::powf(tau, m);
            if towards_lo {
                (lo + off, jac)
            } else {
                (hi - off, jac)
            }
        })
        .collect()
}

fn visit_2d(grid: &Grid, region: Region, lowest: f64, f: &mut impl FnMut(&Point)) {
    let domain = *grid.domain();
    let (xs, ys) = (grid.xs(), grid.ys());
    let n = grid.n();
    let m = if lowest < 0.0 {
        1.0 / (1.0 + lowest)
    } else {
        1.0
    };
    let rect = matches!(domain, Domain::Rectangle { .. });
    let (xbreaks, ybreaks) = match (domain, region.delta()) {
        (Domain::Rectangle { x0, x1, y0, y1 }, Some(delta)) => {
            (vec![x0 + delta, x1 - delta], vec![y0 + delta, y1 - delta])
        }
        _ => (Vec::new(), Vec::new()),
    };
    let split = |lo: f64, hi: f64, breaks: &[f64]| -> Vec<f64> {
        let mut cuts = vec![lo];
        cuts.extend(breaks.iter().copied().filter(|&t| t > lo && t < hi));
        cuts.push(hi);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        cuts
    };
    for c in grid.cells() {
        let Cell { nodes, .. } = c;
        let (ix, iy) = (nodes[0] % n, nodes[0] / n);
        let (cx0, cx1, cy0, cy1) = (xs[ix], xs[ix + 1], ys[iy], ys[iy + 1]);
        let (hx, hy) = (cx1 - cx0, cy1 - cy0);
        let xc = split(cx0, cx1, &xbreaks);
        let yc = split(cy0, cy1, &ybreaks);
        for wx in xc.windows(2) {
            let gx = rect && ((ix == 0 && wx[0] == cx0) || (ix + 2 == n && wx[1] == cx1));
            let xrule = axis_rule(wx[0], wx[1], gx && ix == 0, gx && ix != 0, m);
            for wy in yc.windows(2) {
                let centre_d = domain.distance(0.5 * (wx[0] + wx[1]), 0.5 * (wy[0] + wy[1]));
                if rect && !region.contains(centre_d) {
                    continue;
                }
                let gy = rect && ((iy == 0 && wy[0] == cy0) || (iy + 2 == n && wy[1] == cy1));
                let yrule = axis_rule(wy[0], wy[1], gy && iy == 0, gy && iy != 0, m);
                for &(x, wxk) in &xrule {
                    let sx = (x - cx0) / hx;
                    for &(y, wyk) in &yrule {
                        let d = domain.distance(x, y);
                        if !rect && (d <= 0.0 || !region.contains(d)) {
                            continue;
                        }
                        let sy = (y - cy0) / hy;
                        f(&Point {
                            nodes,
                            shape: [
                                (1.0 - sx) * (1.0 - sy),
                                sx * (1.0 - sy),
                                (1.0 - sx) * sy,
                                sx * sy,
                            ],
                            count: 4,
                            weight: wxk * wyk,
                            d,
                            carried: 0.0,
                        });
                    }
                }
            }
        }
    }
}

/// `integral of phi_i` for every nodal basis function.
pub fn lumped_mass(grid: &Grid) -> Vec<f64> {
    let mut mass = vec![0.0; grid.node_count()];
    for c in grid.cells() {
        let share = if c.count == 2 {
            0.5 * grid.hx()
        } else {
            0.25 * grid.hx() * grid.hy()
        };
        for &node in &c.nodes[..c.count] {
            mass[node] += share;
        }
    }
    mass
}

/// `integral of field * d^weight` over the domain.
pub fn integrate(field: &Field, weight_exponent: Option<&ExprField>) -> Result<f64> {
    let grid = field.grid();
    let part = match weight_exponent {
        None => SourcePart::smooth(field.clone()),
        Some(e) => SourcePart::power(field.clone(), e.eval_on_grid(grid)?),
    };
    Source::single(part).integral(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::grid::build_grid;
    use approx::assert_abs_diff_eq;

    fn unit(n: usize) -> alloc::sync::Arc<Grid> {
        build_grid(Domain::Interval { a: 0.0, b: 1.0 }, n).unwrap()
    }

    #[test]
    fn product_rule_reduces_to_simpson() {
        let w = product_weights(1.0, 0.0);
        assert_abs_diff_eq!(w[0], 1.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w[1], 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w[2], 1.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn measure_of_interval() {
        let g = unit(11);
        assert_abs_diff_eq!(
            integrate(&Field::constant(&g, 1.0), None).unwrap(),
            1.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn inverse_square_root_of_distance() {
        for n in [5, 11, 64] {
            let g = unit(n);
            let w = parse("-1/2").unwrap();
            let v = integrate(&Field::constant(&g, 1.0), Some(&w)).unwrap();
            assert_abs_diff_eq!(v, 2.0 * core::f64::consts::SQRT_2, epsilon = 1e-6);
        }
    }

    #[test]
    fn integrability_threshold() {
        let g = unit(11);
        let one = Field::constant(&g, 1.0);
        let v = integrate(&one, Some(&parse("-0.999").unwrap())).unwrap();
        // 2 * (1/2)^0.001 / 0.001
        assert_abs_diff_eq!(v, 2.0 * math::powf(0.5, 0.001) / 0.001, epsilon = 1e-5);
        assert_eq!(
            integrate(&one, Some(&parse("-1.0").unwrap())),
            Err(Error::NonIntegrable(-1.0))
        );
    }

    #[test]
    fn affine_fields_exact_on_rectangle() {
        let g = build_grid(
            Domain::Rectangle {
                x0: 0.0,
                x1: 2.0,
                y0: -1.0,
                y1: 1.0,
            },
            9,
        )
        .unwrap();
        let f = Field::from_fn(&g, |_, x, y, _| 1.0 + 3.0 * x - 2.0 * y);
        // integral over [0,2]x[-1,1] of 1 + 3x - 2y = 4 + 3*2*2 - 0
        assert_abs_diff_eq!(integrate(&f, None).unwrap(), 16.0, epsilon = 1e-12);
    }

    #[test]
    fn lumped_mass_sums_to_measure() {
        let g = unit(11);
        assert_abs_diff_eq!(lumped_mass(&g).iter().sum::<f64>(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn load_vector_of_constant_is_lumped_mass() {
        let g = unit(9);
        let b = Source::single(SourcePart::smooth(Field::constant(&g, 2.0)))
            .load_vector(&g)
            .unwrap();
        for (bi, mi) in b.iter().zip(lumped_mass(&g)) {
            assert_abs_diff_eq!(*bi, 2.0 * mi, epsilon = 1e-14);
        }
    }

    #[test]
    fn strip_and_complement_partition_the_integral() {
        let g = unit(21);
        let e = Field::constant(&g, -0.5);
        let f = Field::constant(&g, 1.0);
        let whole = Source::single(SourcePart::power(f.clone(), e.clone()))
            .integral(&g)
            .unwrap();
        let strip =
            Source::single(SourcePart::power(f.clone(), e.clone()).within(Region::Strip(0.13)))
                .integral(&g)
                .unwrap();
        let rest = Source::single(SourcePart::power(f, e).within(Region::OffStrip(0.13)))
            .integral(&g)
            .unwrap();
        assert_abs_diff_eq!(strip + rest, whole, epsilon = 1e-8);
        // 2 * integral_0^0.13 t^-1/2
        assert_abs_diff_eq!(strip, 4.0 * math::sqrt(0.13), epsilon = 1e-6);
    }

    #[test]
    fn rectangle_singular_weight_converges() {
        // integral over the unit square of d^-1/2, d = min distance to the sides:
        // 4 * integral over the triangle below the diagonal = 4 * int_0^1/2 t^-1/2 (1 - 2t) dt
        let exact = 4.0 * (2.0 * math::sqrt(0.5) - 2.0 * (2.0 / 3.0) * math::powf(0.5, 1.5));
        let mut last = f64::INFINITY;
        for n in [9, 17, 33] {
            let g = build_grid(
                Domain::Rectangle {
                    x0: 0.0,
                    x1: 1.0,
                    y0: 0.0,
                    y1: 1.0,
                },
                n,
            )
            .unwrap();
            let v = integrate(&Field::constant(&g, 1.0), Some(&parse("-0.5").unwrap())).unwrap();
            let err = (v - exact).abs();
            assert!(err < last, "n = {n}: error {err} after {last}");
            last = err;
        }
        assert!(last < 1e-3, "{last}");
    }
}
