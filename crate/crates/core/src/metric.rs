//! Carnot-Carathéodory distances.
//!
//! On `ℍ¹` the distance from the origin is computed by geodesic shooting. A unit
//! speed geodesic projects to a circular arc in the horizontal plane; if the arc
//! turns through the phase `θ` and subtends the chord `r`, the vertical
//! coordinate is the area between arc and chord, so with `m = |z|/r²`
//!
//! ```text
//! m = (θ − sin θ) / (8 sin²(θ/2)),    d = r θ / (2 sin(θ/2)).
//! ```
//!
//! The left side increases from 0 to ∞ on `θ ∈ [0, 2π)`, so the minimizing phase
//! is unique. Near the centre axis (`θ → 2π`) the phase is solved in the
//! reflected variable `τ = 2π − θ`, where the equation stays well conditioned.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::calculus::{gradient_norm, sub_laplacian};
use crate::error::{invalid, Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::group::{CarnotGroup, StratifiedPoint};
use crate::potential::Potential;

const MAX_ITER: usize = 200;

/// `θ − sin θ` without cancellation for small `θ`.
fn theta_minus_sin(theta: f64) -> f64 {
    if theta < 0.5 {
        // Alternating series θ³/3! − θ⁵/5! + …
        let t2 = theta * theta;
        let mut term = theta * t2 / 6.0;
        let mut sum = term;
        let mut k = 3.0;
        while term.abs() > 1e-18 * sum {
            term *= -t2 / ((k + 1.0) * (k + 2.0));
            sum += term;
            k += 2.0;
        }
        sum
    } else {
        theta - theta.sin()
    }
}

/// Safeguarded Newton for a monotone `g` with a sign change on `[lo, hi]`.
/// `g` returns `(value, derivative)`.
fn bracketed_newton(
    mut lo: f64,
    mut hi: f64,
    mut x: f64,
    increasing: bool,
    what: &'static str,
    g: impl Fn(f64) -> (f64, f64),
) -> Result<f64> {
    let mut last = f64::INFINITY;
    for _ in 0..MAX_ITER {
        let (v, dv) = g(x);
        last = v;
        if v == 0.0 {
            return Ok(x);
        }
        if (v < 0.0) == increasing {
            lo = x;
        } else {
            hi = x;
        }
        let mut next = x - v / dv;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(1e-300) || hi - lo <= 1e-300 {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::NonConvergence {
        what,
        residual: last,
    })
}

/// CC distance from the origin on `ℍ¹` to `(x, y, z)`.
pub fn heisenberg_distance(x: f64, y: f64, z: f64) -> Result<f64> {
    let r = x.hypot(y);
    let az = z.abs();
    if !(r.is_finite() && az.is_finite()) {
        return invalid("non-finite coordinates");
    }
    if az == 0.0 {
        return Ok(r);
    }
    if r == 0.0 {
        return Ok(2.0 * (PI * az).sqrt());
    }
    let m = az / (r * r);
    shoot(r, az, m, heisenberg_table().phase_guess(m)).map(|(d, _)| d)
}

/// Solves for the geodesic phase and returns `(d, phase)`; the phase is `θ`
/// when `m ≤ π/8` and `τ` otherwise.
fn shoot(r: f64, az: f64, m: f64, guess: Option<f64>) -> Result<(f64, f64)> {
    let lm = m.ln();
    if m <= PI / 8.0 {
        // log μ(θ) − log m on θ ∈ (0, π].
        let g = |th: f64| {
            let a = theta_minus_sin(th);
            let (s, c) = (0.5 * th).sin_cos();
            let val = (a / (8.0 * s * s)).ln() - lm;
            let der = 2.0 * s * s / a - c / s;
            (val, der)
        };
        let guess = guess.unwrap_or(12.0 * m).clamp(1e-300, PI);
        let th = bracketed_newton(0.0, PI, guess, true, "geodesic phase", g)?;
        if th == 0.0 {
            return Ok((r, th));
        }
        Ok((r * 0.5 * th / (0.5 * th).sin(), th))
    } else {
        // Reflected phase τ = 2π − θ on (0, π].
        let g = |tau: f64| {
            let (s, c) = (0.5 * tau).sin_cos();
            let a = 2.0 * PI - tau + 2.0 * s * c;
            let val = (a / (8.0 * s * s)).ln() - lm;
            let der = -(2.0 * s * s) / a - c / s;
            (val, der)
        };
        let guess = guess.unwrap_or((PI / m).sqrt()).clamp(1e-300, PI);
        let tau = bracketed_newton(0.0, PI, guess, false, "geodesic phase", g)?;
        let a = 2.0 * PI - tau + tau.sin();
        Ok(((2.0 * PI - tau) * (2.0 * az / a).sqrt(), tau))
    }
}

/// Lebesgue volume of the unit ball `{d(0, ·) ≤ 1}`.
///
/// For `ℍ¹` the upper boundary is traced by unit-length geodesics of phase
/// `θ ∈ [0, 2π]`, which end at `r = 2 sin(θ/2)/θ`, `z = (θ − sin θ)/(2θ²)`;
/// the volume is `2π ∫ r² dz` along that curve. (The height is not monotone
/// in `θ`: it peaks at `θ = π`, so the ball reaches `|z| = 1/(2π)`.)
pub fn unit_ball_volume(group: &CarnotGroup) -> f64 {
    match group {
        CarnotGroup::Abelian { dim } => {
            // π^{n/2} / Γ(n/2 + 1) by the two-step recursion V_n = 2π V_{n−2} / n.
            let mut v = if dim % 2 == 0 { 1.0 } else { 2.0 };
            let mut k = if dim % 2 == 0 { 2 } else { 3 };
            while k <= *dim {
                v *= 2.0 * PI / k as f64;
                k += 2;
            }
            v
        }
        CarnotGroup::Heisenberg => {
            let n = 20_000;
            let h = 2.0 * PI / n as f64;
            let terms = (0..n).map(|k| {
                let th = (k as f64 + 0.5) * h;
                let s = (0.5 * th).sin();
                let r = 2.0 * s / th;
                // dz/dθ = ((1 − cos θ) θ − 2(θ − sin θ)) / (2θ³)
                let dz = (2.0 * s * s * th - 2.0 * theta_minus_sin(th)) / (2.0 * th.powi(3));
                r * r * dz
            });
            2.0 * PI * h * crate::sum::fsum(terms)
        }
    }
}

/// Distance from the origin on raw coordinates.
pub fn distance_origin_raw(group: &CarnotGroup, v: &[f64]) -> Result<f64> {
    match group {
        CarnotGroup::Abelian { .. } => Ok(v.iter().map(|x| x * x).sum::<f64>().sqrt()),
        CarnotGroup::Heisenberg => heisenberg_distance(v[0], v[1], v[2]),
    }
}

/// CC distance `d(0, x)`.
pub fn cc_distance_origin(group: &CarnotGroup, x: &StratifiedPoint) -> Result<f64> {
    let id = group.identity();
    cc_distance(group, &id, x)
}

/// CC distance `d(a, b) = d(0, a⁻¹ ∘ b)`.
pub fn cc_distance(group: &CarnotGroup, a: &StratifiedPoint, b: &StratifiedPoint) -> Result<f64> {
    let rel = group.compose(&group.inverse(a)?, b)?;
    distance_origin_raw(group, rel.coords())
}

/// Korányi gauge `((x² + y²)² + 16 z²)^{1/4}` on `ℍ¹`, Euclidean norm on `ℝⁿ`.
pub fn koranyi_gauge_raw(group: &CarnotGroup, v: &[f64]) -> f64 {
    match group {
        CarnotGroup::Abelian { .. } => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
        CarnotGroup::Heisenberg => {
            let r2 = v[0] * v[0] + v[1] * v[1];
            (r2 * r2 + 16.0 * v[2] * v[2]).sqrt().sqrt()
        }
    }
}

pub fn koranyi_gauge(group: &CarnotGroup, x: &StratifiedPoint) -> Result<f64> {
    group.point(x.coords().to_vec())?;
    Ok(koranyi_gauge_raw(group, x.coords()))
}

/// Observed range of `d(0, x) / gauge(x)` over the given non-zero points.
pub fn gauge_ratio_interval(group: &CarnotGroup, points: &[Vec<f64>]) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0_f64;
    for p in points {
        let g = koranyi_gauge_raw(group, p);
        if g == 0.0 {
            continue;
        }
        let ratio = distance_origin_raw(group, p)? / g;
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    if lo > hi {
        return invalid("no non-zero points");
    }
    Ok((lo, hi))
}

/// How a distance field was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMethod {
    Shooting,
    Eikonal,
}

/// `d(0, ·)` sampled on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceField {
    pub field: GridFunction,
    pub method: DistanceMethod,
}

impl DistanceField {
    /// Samples the shooting distance at every node.
    pub fn shooting(group: &CarnotGroup, grid: &Grid) -> Result<Self> {
        use rayon::prelude::*;
        if grid.dim() != group.dim() {
            return Err(Error::DimensionMismatch {
                expected: group.dim(),
                got: grid.dim(),
            });
        }
        let values = (0..grid.len())
            .into_par_iter()
            .map(|i| distance_origin_raw(group, &grid.node_vec(i)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            field: GridFunction::new(grid.clone(), values)?,
            method: DistanceMethod::Shooting,
        })
    }

    pub fn grid(&self) -> &Grid {
        self.field.grid()
    }

    pub fn values(&self) -> &[f64] {
        self.field.values()
    }
}

/// Source of pair distances for the Hopf-Lax operator and transport costs.
pub trait Metric: Sync {
    fn group(&self) -> &CarnotGroup;

    /// `d(a, b)`; `∞` when the source cannot evaluate the pair.
    fn distance(&self, a: &[f64], b: &[f64]) -> Result<f64>;

    /// Whether `d(a, b) ≥ |horizontal part of a⁻¹ ∘ b|` and the vertical
    /// window bounds of the group hold for this source. Windowed searches
    /// fall back to a full scan otherwise.
    fn windowed(&self) -> bool {
        false
    }

    /// A lower bound for `d(a, b)` given `a⁻¹ ∘ b`.
    fn lower_bound(&self, _rel: &[f64]) -> f64 {
        0.0
    }

    /// On step-two groups, the largest `|vertical part of a⁻¹ ∘ b|` with
    /// `d(a, b) ≤ radius` once the horizontal displacement is `r`. Only
    /// consulted when [`Self::windowed`] holds.
    fn vertical_reach(&self, radius: f64, r: f64) -> f64 {
        self.group()
            .vertical_halfwidth(radius, r)
            .unwrap_or(f64::INFINITY)
    }
}

/// Table of `D(m) = d(r, m r²) / r` on a geometric grid in `m`; `D` is
/// increasing, so the value at the left table node bounds `d` from below.
struct HeisenbergTable {
    log_m0: f64,
    inv_step: f64,
    values: Vec<f64>,
    /// Phase at each node, used to start the root solve.
    phases: Vec<f64>,
}

impl HeisenbergTable {
    fn phase_guess(&self, m: f64) -> Option<f64> {
        let pos = (m.ln() - self.log_m0) * self.inv_step;
        if !(pos >= 0.0 && pos < (TABLE_LEN - 1) as f64) {
            return None;
        }
        let k = pos as usize;
        // Do not interpolate across the switch between the two phase variables.
        if (self.values_m(k) <= PI / 8.0) != (self.values_m(k + 1) <= PI / 8.0) {
            return None;
        }
        let w = pos - k as f64;
        Some((1.0 - w) * self.phases[k] + w * self.phases[k + 1])
    }

    fn values_m(&self, k: usize) -> f64 {
        (self.log_m0 + k as f64 / self.inv_step).exp()
    }
}

const TABLE_M0: f64 = 1e-4;
const TABLE_M1: f64 = 1e4;
const TABLE_LEN: usize = 1024;

fn heisenberg_table() -> &'static HeisenbergTable {
    static TABLE: std::sync::OnceLock<HeisenbergTable> = std::sync::OnceLock::new();
    TABLE.get_or_init(|| {
        let step = (TABLE_M1 / TABLE_M0).ln() / (TABLE_LEN - 1) as f64;
        let (values, phases) = (0..TABLE_LEN)
            .map(|k| {
                let m = TABLE_M0 * (step * k as f64).exp();
                let (d, phase) = shoot(1.0, m, m, None).expect("table node");
                // Shave a few ulps so rounding in the solver cannot break the bound.
                (d * (1.0 - 1e-12), phase)
            })
            .unzip();
        HeisenbergTable {
            log_m0: TABLE_M0.ln(),
            inv_step: 1.0 / step,
            values,
            phases,
        }
    })
}

/// Largest `|z|` with `d(r, z) ≤ radius` allowed by the table and the
/// isoperimetric bound.
pub fn heisenberg_vertical_reach(radius: f64, r: f64) -> f64 {
    let iso = (radius + r).powi(2) / (4.0 * PI);
    if r == 0.0 {
        return iso;
    }
    let table = heisenberg_table();
    // Slack covers rounding between `d` and `r` on the horizontal plane.
    let ratio = radius / r * (1.0 + 1e-12);
    if ratio < 1.0 {
        return 0.0;
    }
    // First table node whose bound already exceeds the ratio caps `m` there.
    let k = table.values.partition_point(|&v| v <= ratio);
    if k == TABLE_LEN {
        return iso;
    }
    let m_cap = (table.log_m0 + k as f64 / table.inv_step).exp();
    iso.min(r * r * m_cap * (1.0 + 1e-12))
}

/// Lower bound for the `ℍ¹` distance from the origin, within about 1% of
/// the exact value away from the extreme ratios `|z|/r²`.
pub fn heisenberg_lower_bound(v: &[f64]) -> f64 {
    let r = (v[0] * v[0] + v[1] * v[1]).sqrt();
    let az = v[2].abs();
    let iso = 2.0 * (PI * az).sqrt() - r;
    if r == 0.0 || az == 0.0 {
        return r.max(iso) * (1.0 - 1e-12);
    }
    let m = az / (r * r);
    let table = heisenberg_table();
    let pos = (m.ln() - table.log_m0) * table.inv_step;
    let tab = if pos < 0.0 {
        1.0
    } else {
        table.values[(pos as usize).min(TABLE_LEN - 1)]
    };
    // Shaved so that rounding in `hypot` versus `sqrt` cannot cross the exact value.
    (r * tab).max(iso) * (1.0 - 1e-12)
}

/// Exact distance of the group (Euclidean or shooting).
#[derive(Debug, Clone)]
pub struct GroupMetric {
    pub group: CarnotGroup,
}

impl GroupMetric {
    pub fn new(group: CarnotGroup) -> Self {
        Self { group }
    }
}

impl Metric for GroupMetric {
    fn group(&self) -> &CarnotGroup {
        &self.group
    }

    fn windowed(&self) -> bool {
        true
    }

    fn lower_bound(&self, rel: &[f64]) -> f64 {
        match self.group {
            CarnotGroup::Heisenberg => heisenberg_lower_bound(rel),
            CarnotGroup::Abelian { .. } => self.group.distance_lower_bound(rel),
        }
    }

    fn vertical_reach(&self, radius: f64, r: f64) -> f64 {
        match self.group {
            CarnotGroup::Heisenberg => heisenberg_vertical_reach(radius, r),
            CarnotGroup::Abelian { .. } => f64::INFINITY,
        }
    }

    fn distance(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        let mut rel = [0.0; 3];
        let n = self.group.dim();
        if n > 3 {
            let mut v = vec![0.0; n];
            self.group.relative_raw(a, b, &mut v);
            return distance_origin_raw(&self.group, &v);
        }
        self.group.relative_raw(a, b, &mut rel[..n]);
        distance_origin_raw(&self.group, &rel[..n])
    }
}

/// Distance read from a sampled field by interpolating `d(0, a⁻¹ ∘ b)`.
#[derive(Debug, Clone)]
pub struct FieldMetric {
    pub group: CarnotGroup,
    pub field: DistanceField,
}

impl Metric for FieldMetric {
    fn group(&self) -> &CarnotGroup {
        &self.group
    }

    fn distance(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        let mut rel = vec![0.0; self.group.dim()];
        self.group.relative_raw(a, b, &mut rel);
        Ok(self.field.field.interpolate(&rel).unwrap_or(f64::INFINITY))
    }
}

/// Measured geometry of a distance field outside the unit ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryConditionReport {
    pub nodes_tested: usize,
    pub grad_sup: f64,
    pub grad_inf: f64,
    /// Smallest `K_geom` with `Δd ≤ K_geom + U′(d)(|∇d|² − c₀)` on the tested nodes.
    pub k_geom: f64,
    pub c0: f64,
    pub tube_radius: f64,
    pub grad_sup_pass: bool,
    pub k_geom_finite: bool,
}

/// Checks `|∇d| ≤ 1` and fits the sub-Laplacian comparison constant on interior
/// nodes with `d > 1`, away from the centre axis. `grad_slack` is the
/// discretization allowance on `sup |∇d| ≤ 1`.
pub fn check_metric_assumptions(
    group: &CarnotGroup,
    field: &DistanceField,
    potential: &Potential,
    c0: f64,
    grad_slack: f64,
) -> Result<GeometryConditionReport> {
    let grid = field.grid();
    let grad = gradient_norm(&field.field, group)?;
    let lap = sub_laplacian(&field.field, group)?;
    let tube = if group.step() > 1 {
        2.0 * grid.spacing()[..group.horizontal_dim()]
            .iter()
            .copied()
            .fold(0.0, f64::max)
    } else {
        0.0
    };
    let mut tested = 0;
    let (mut sup, mut inf, mut k) = (0.0_f64, f64::INFINITY, f64::NEG_INFINITY);
    let mut x = vec![0.0; grid.dim()];
    for i in 0..grid.len() {
        let d = field.values()[i];
        if d <= 1.0 || grid.face_depth(i) < 2 {
            continue;
        }
        grid.node(i, &mut x);
        if group.step() > 1 && x[0].hypot(x[1]) <= tube {
            continue;
        }
        tested += 1;
        sup = sup.max(grad[i]);
        inf = inf.min(grad[i]);
        let bound = lap.values()[i] - potential.derivative(d) * (grad[i] * grad[i] - c0);
        k = k.max(bound);
    }
    if tested == 0 {
        return invalid("no interior nodes outside the unit ball and the axis tube");
    }
    Ok(GeometryConditionReport {
        nodes_tested: tested,
        grad_sup: sup,
        grad_inf: inf,
        k_geom: k,
        c0,
        tube_radius: tube,
        grad_sup_pass: sup <= 1.0 + grad_slack,
        k_geom_finite: k.is_finite(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lower_bound_table_is_valid_and_tight() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..2000 {
            let v = [
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0_f64).powi(3),
            ];
            let d = heisenberg_distance(v[0], v[1], v[2]).unwrap();
            let lb = heisenberg_lower_bound(&v);
            assert!(lb <= d, "{v:?}: {lb} > {d}");
            assert!(lb >= 0.97 * d, "{v:?}: {lb} vs {d}");
            let r = v[0].hypot(v[1]);
            // Every point at distance d is inside the reach for radius d.
            assert!(
                v[2].abs() <= heisenberg_vertical_reach(d, r),
                "{v:?} {d} {r} {}",
                heisenberg_vertical_reach(d, r)
            );
        }
    }

    /// Oracle: count grid cells inside the ball.
    #[test]
    fn heisenberg_ball_volume_by_counting() {
        let n = 120;
        // The ball is tallest at phase π, where z = 1/(2π).
        let (hx, hz) = (2.0 / n as f64, 0.34 / n as f64);
        let mut inside = 0usize;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let x = -1.0 + (i as f64 + 0.5) * hx;
                    let y = -1.0 + (j as f64 + 0.5) * hx;
                    let z = -0.17 + (k as f64 + 0.5) * hz;
                    if x.hypot(y) <= 1.0 && heisenberg_distance(x, y, z).unwrap() <= 1.0 {
                        inside += 1;
                    }
                }
            }
        }
        let counted = inside as f64 * hx * hx * hz;
        let v = unit_ball_volume(&CarnotGroup::Heisenberg);
        assert!((counted - v).abs() < 0.01 * v, "{counted} vs {v}");
        assert!(
            (unit_ball_volume(&CarnotGroup::abelian(3).unwrap()) - 4.0 * PI / 3.0).abs() < 1e-14
        );
        assert!((unit_ball_volume(&CarnotGroup::abelian(2).unwrap()) - PI).abs() < 1e-14);
        assert_eq!(unit_ball_volume(&CarnotGroup::abelian(1).unwrap()), 2.0);
    }

    #[test]
    fn special_values() {
        assert_eq!(heisenberg_distance(0.0, 0.0, 0.0).unwrap(), 0.0);
        for r in [0.5, 1.0, 2.0] {
            assert!((heisenberg_distance(r, 0.0, 0.0).unwrap() - r).abs() < 1e-15);
        }
        let axis = heisenberg_distance(0.0, 0.0, 1.0).unwrap();
        assert!((axis - 2.0 * PI.sqrt()).abs() < 1e-14);
    }

    /// Independent check: integrate a unit-speed circular horizontal curve that
    /// turns through `θ`, then recover its length from the endpoint.
    #[test]
    fn matches_explicit_geodesic_endpoints() {
        for &(theta, len) in &[(0.3, 1.0), (1.7, 0.8), (3.0, 2.0), (5.5, 1.3), (6.2, 0.7)] {
            let k = theta / len;
            let steps = 20000;
            let (mut x, mut y, mut z) = (0.0, 0.0, 0.0);
            let dt = len / steps as f64;
            for s in 0..steps {
                let t0 = s as f64 * dt;
                // Midpoint rule on the velocity (cos kt, sin kt).
                let tm = t0 + 0.5 * dt;
                let (vx, vy) = ((k * tm).cos(), (k * tm).sin());
                let (xm, ym) = (x + 0.5 * dt * vx, y + 0.5 * dt * vy);
                z += 0.5 * (xm * vy - ym * vx) * dt;
                x += dt * vx;
                y += dt * vy;
            }
            let d = heisenberg_distance(x, y, z).unwrap();
            assert!((d - len).abs() < 1e-6, "theta {theta}: {d} vs {len}");
        }
    }

    #[test]
    fn near_axis_is_continuous() {
        let on = heisenberg_distance(0.0, 0.0, 0.7).unwrap();
        let near = heisenberg_distance(1e-9, 0.0, 0.7).unwrap();
        assert!((on - near).abs() < 1e-8);
        let mid = heisenberg_distance(1.0, 0.0, PI / 8.0).unwrap();
        let left = heisenberg_distance(1.0, 0.0, PI / 8.0 - 1e-12).unwrap();
        let right = heisenberg_distance(1.0, 0.0, PI / 8.0 + 1e-12).unwrap();
        assert!((mid - left).abs() < 1e-10 && (mid - right).abs() < 1e-10);
        assert!((mid - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn gauge_values() {
        let h = CarnotGroup::Heisenberg;
        assert_eq!(koranyi_gauge_raw(&h, &[0.0, 0.0, 0.0]), 0.0);
        assert_eq!(koranyi_gauge_raw(&h, &[1.0, 0.0, 0.0]), 1.0);
        assert!((koranyi_gauge_raw(&h, &[0.0, 0.0, 1.0]) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn abelian_distance_is_euclidean() {
        let g = CarnotGroup::abelian(2).unwrap();
        let a = g.point(vec![1.0, 2.0]).unwrap();
        let b = g.point(vec![4.0, 6.0]).unwrap();
        assert!((cc_distance(&g, &a, &b).unwrap() - 5.0).abs() < 1e-15);
    }
}
