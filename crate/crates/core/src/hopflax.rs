//! Hopf-Lax semigroup on grids.
//!
//! `Q_t f(x) = min_y cost_t(d(x, y)) + f(y)` is evaluated exactly over the grid
//! nodes. Candidates are restricted to the window where the cost fits in the
//! budget `f(x) − min f` (anything outside cannot beat `y = x`), and pruned
//! further with a cheap lower bound on `d` before the exact distance is used.
//! Pruning never changes the result: a candidate is skipped only when its
//! value is strictly worse than the incumbent, and ties go to the smallest
//! flat index.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::gradient_norm;
use crate::error::{invalid, Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::group::CarnotGroup;
use crate::metric::Metric;
use crate::report::InequalityReport;
use crate::sum::fsum;

/// Cost convention of the Hopf-Lax infimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// `d^p / (p t^{p−1})`, the Legendre transform of `s^q/q`.
    #[default]
    Legendre,
    /// `d^p / t^{p−1}`.
    Paper,
}

impl Normalization {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Legendre => "legendre",
            Self::Paper => "paper",
        }
    }
}

/// A conjugate pair `1/p + 1/q = 1` with `1 < q ≤ 2 ≤ p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    pub p: f64,
    pub q: f64,
}

impl Exponents {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        if !((1.0 / p + 1.0 / q - 1.0).abs() <= 1e-12) {
            return invalid(format!("exponents p = {p}, q = {q} are not conjugate"));
        }
        if !(q > 1.0 && q <= 2.0 && p >= 2.0 && p.is_finite()) {
            return invalid(format!("need 1 < q <= 2 <= p, got p = {p}, q = {q}"));
        }
        Ok(Self { p, q })
    }

    pub fn from_p(p: f64) -> Result<Self> {
        Self::new(p, p / (p - 1.0))
    }

    pub fn from_q(q: f64) -> Result<Self> {
        Self::new(q / (q - 1.0), q)
    }
}

/// `Q_t` with its exponents and cost convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopfLaxOperator {
    pub t: f64,
    pub exponents: Exponents,
    pub normalization: Normalization,
}

impl HopfLaxOperator {
    pub fn new(t: f64, exponents: Exponents, normalization: Normalization) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return invalid(format!("Hopf-Lax time must be positive, got {t}"));
        }
        Ok(Self {
            t,
            exponents,
            normalization,
        })
    }

    pub fn at(&self, t: f64) -> Result<Self> {
        Self::new(t, self.exponents, self.normalization)
    }

    fn scale(&self) -> f64 {
        let p = self.exponents.p;
        let base = self.t.powf(p - 1.0);
        match self.normalization {
            Normalization::Legendre => p * base,
            Normalization::Paper => base,
        }
    }

    pub fn cost(&self, d: f64) -> f64 {
        let p = self.exponents.p;
        let dp = if p == 2.0 { d * d } else { d.powf(p) };
        dp / self.scale()
    }

    /// Largest distance whose cost does not exceed `budget`.
    pub fn radius(&self, budget: f64) -> f64 {
        if budget <= 0.0 {
            return 0.0;
        }
        (budget * self.scale()).powf(1.0 / self.exponents.p)
    }

    /// Time at which the Legendre-normalized operator has this operator's cost.
    pub fn legendre_time(&self) -> f64 {
        let p = self.exponents.p;
        match self.normalization {
            Normalization::Legendre => self.t,
            Normalization::Paper => self.t * p.powf(-1.0 / (p - 1.0)),
        }
    }
}

/// `Q_t f` with the minimizer of every node.
#[derive(Debug, Clone, PartialEq)]
pub struct HopfLaxResult {
    pub values: GridFunction,
    /// Flat index of the minimizing node.
    pub argmin: Vec<usize>,
    /// True where the candidate window was clipped by the box, so the
    /// infimum over the whole group might lie outside the grid.
    pub truncated: Vec<bool>,
}

impl HopfLaxResult {
    pub fn argmin_interior(&self, i: usize) -> bool {
        !self.values.grid().on_boundary(self.argmin[i])
    }

    /// Nodes whose minimizer is interior and whose window was not clipped.
    pub fn clean(&self, i: usize) -> bool {
        self.argmin_interior(i) && !self.truncated[i]
    }
}

/// Candidate search for one target node.
struct Search<'a> {
    grid: &'a Grid,
    group: &'a CarnotGroup,
    metric: &'a dyn Metric,
    op: &'a HopfLaxOperator,
    f: &'a [f64],
    fmin: f64,
    coords: Vec<Vec<f64>>,
    /// `min_z f` per horizontal column and `min f` per first-axis slab
    /// (step-two groups only).
    column_min: Vec<f64>,
    row_min: Vec<f64>,
}

impl Search<'_> {
    fn node(&self, idx: &[usize], out: &mut [f64]) {
        for (a, &i) in idx.iter().enumerate() {
            out[a] = self.coords[a][i];
        }
    }

    /// Offers node `yi` at coordinates `y` as a minimizer for `x`.
    fn consider(
        &self,
        x: &[f64],
        yi: &[usize],
        y: &[f64],
        rel: &mut [f64],
        best: &mut (f64, usize),
    ) -> Result<()> {
        let iy = self.grid.flat_index(yi);
        let fy = self.f[iy];
        if fy > best.0 {
            return Ok(());
        }
        self.group.relative_raw(x, y, rel);
        // Cheap group bound first, then the metric's own.
        if self.metric.windowed()
            && self.op.cost(self.group.distance_lower_bound(rel)) + fy > best.0
        {
            return Ok(());
        }
        if self.op.cost(self.metric.lower_bound(rel)) + fy > best.0 {
            return Ok(());
        }
        let v = self.op.cost(self.metric.distance(x, y)?) + fy;
        if v < best.0 || (v == best.0 && iy < best.1) {
            *best = (v, iy);
        }
        Ok(())
    }

    /// Improves the incumbent from the nodes at most two cells away, which
    /// shrinks the search radius before the window is laid out.
    fn local_start(&self, xi: &[usize], x: &[f64], best: &mut (f64, usize)) -> Result<()> {
        let dim = xi.len();
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        for a in 0..dim {
            lo[a] = xi[a].saturating_sub(2);
            hi[a] = (xi[a] + 2).min(self.grid.shape()[a] - 1);
        }
        let mut yi = lo;
        let mut y = [0.0; 3];
        let mut rel = [0.0; 3];
        loop {
            self.node(&yi[..dim], &mut y[..dim]);
            self.consider(x, &yi[..dim], &y[..dim], &mut rel[..dim], best)?;
            let mut a = dim;
            loop {
                if a == 0 {
                    return Ok(());
                }
                a -= 1;
                if yi[a] < hi[a] {
                    yi[a] += 1;
                    break;
                }
                yi[a] = lo[a];
            }
        }
    }

    /// `(value, argmin, truncated)` at node `ix`.
    fn run(&self, ix: usize) -> Result<(f64, usize, bool)> {
        let dim = self.grid.dim();
        let mut xi = [0usize; 3];
        self.grid.multi_index(ix, &mut xi[..dim]);
        let mut x = [0.0; 3];
        self.node(&xi[..dim], &mut x[..dim]);
        let mut best = (self.f[ix], ix);
        self.local_start(&xi[..dim], &x[..dim], &mut best)?;
        let budget = best.0 - self.fmin;
        let radius = self.op.radius(budget) * (1.0 + 1e-12);
        let windowed = self.metric.windowed();
        let scan = if windowed { radius } else { f64::INFINITY };
        let n1 = self.group.horizontal_dim();
        let mut truncated = false;

        // Horizontal window, clipped to the box.
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        for a in 0..n1 {
            let (a_lo, a_hi) = (x[a] - radius, x[a] + radius);
            if a_lo < self.grid.lo()[a] || a_hi > self.grid.hi()[a] {
                truncated = true;
            }
            let (l, h) = self
                .grid
                .index_range(a, x[a] - scan, x[a] + scan)
                .expect("window contains x itself");
            lo[a] = l;
            hi[a] = h;
        }

        let mut y = [0.0; 3];
        let mut yi = [0usize; 3];
        let mut rel = [0.0; 3];
        let mut consider = |yi: &[usize], y: &[f64], best: &mut (f64, usize)| {
            self.consider(&x[..dim], yi, y, &mut rel[..dim], best)
        };

        match self.group {
            CarnotGroup::Abelian { .. } => {
                // Odometer over the box window.
                yi[..dim].copy_from_slice(&lo[..dim]);
                loop {
                    self.node(&yi[..dim], &mut y[..dim]);
                    consider(&yi[..dim], &y[..dim], &mut best)?;
                    let mut a = dim;
                    loop {
                        if a == 0 {
                            return Ok((best.0, best.1, truncated));
                        }
                        a -= 1;
                        if yi[a] < hi[a] {
                            yi[a] += 1;
                            break;
                        }
                        yi[a] = lo[a];
                    }
                }
            }
            CarnotGroup::Heisenberg => {
                // Conservative vertical clip test: over the horizontal disc the
                // window centre moves by at most |x_h| R / 2 and the reach is
                // at most R² / π.
                let spread = 0.5 * x[0].hypot(x[1]) * radius + radius * radius / PI;
                if x[2] - spread < self.grid.lo()[2] || x[2] + spread > self.grid.hi()[2] {
                    truncated = true;
                }
                let n1 = self.grid.shape()[1];
                for i0 in lo[0]..=hi[0] {
                    let y0 = self.coords[0][i0];
                    let dx = y0 - x[0];
                    let (mut l1, mut h1) = (lo[1], hi[1]);
                    if windowed {
                        // Columns of this slab that fit the slab's own budget.
                        let reach = self.op.radius(best.0 - self.row_min[i0]) * (1.0 + 1e-12);
                        if dx.abs() > reach {
                            continue;
                        }
                        let w = (reach * reach - dx * dx).sqrt();
                        match self.grid.index_range(1, x[1] - w, x[1] + w) {
                            Some((a, b)) => {
                                l1 = l1.max(a);
                                h1 = h1.min(b);
                            }
                            None => continue,
                        }
                    }
                    for i1 in l1..=h1 {
                        let y1 = self.coords[1][i1];
                        let dy = y1 - x[1];
                        let r = (dx * dx + dy * dy).sqrt();
                        let column_min = self.column_min[i0 * n1 + i1];
                        if windowed && self.op.cost(r) + column_min > best.0 {
                            continue;
                        }
                        let c = self.group.vertical_center(&x, &[y0, y1]);
                        let hw = if windowed {
                            let reach = self.op.radius(best.0 - column_min) * (1.0 + 1e-12);
                            self.metric.vertical_reach(reach, r)
                        } else {
                            f64::INFINITY
                        };
                        let Some((l2, h2)) = self.grid.index_range(2, c - hw, c + hw) else {
                            continue;
                        };
                        for i2 in l2..=h2 {
                            yi[0] = i0;
                            yi[1] = i1;
                            yi[2] = i2;
                            y[0] = y0;
                            y[1] = y1;
                            y[2] = self.coords[2][i2];
                            consider(&yi, &y, &mut best)?;
                        }
                    }
                }
                Ok((best.0, best.1, truncated))
            }
        }
    }
}

/// Applies `Q_t` to `f` by exact minimization over the grid nodes.
pub fn hopf_lax_apply(
    f: &GridFunction,
    op: &HopfLaxOperator,
    metric: &dyn Metric,
) -> Result<HopfLaxResult> {
    let grid = f.grid();
    let group = metric.group();
    if grid.dim() != group.dim() {
        return Err(Error::DimensionMismatch {
            expected: group.dim(),
            got: grid.dim(),
        });
    }
    if group.dim() > 3 {
        return invalid("Hopf-Lax grids support at most three coordinates");
    }
    let column_min = match group {
        CarnotGroup::Heisenberg => {
            let nz = grid.shape()[2];
            f.values()
                .chunks(nz)
                .map(|c| c.iter().copied().fold(f64::INFINITY, f64::min))
                .collect()
        }
        CarnotGroup::Abelian { .. } => Vec::new(),
    };
    let row_min = match group {
        CarnotGroup::Heisenberg => column_min
            .chunks(grid.shape()[1])
            .map(|c| c.iter().copied().fold(f64::INFINITY, f64::min))
            .collect(),
        CarnotGroup::Abelian { .. } => Vec::new(),
    };
    let search = Search {
        column_min,
        row_min,
        grid,
        group,
        metric,
        op,
        f: f.values(),
        fmin: f.min(),
        coords: (0..grid.dim())
            .map(|a| (0..grid.shape()[a]).map(|i| grid.coord(a, i)).collect())
            .collect(),
    };
    let out = (0..grid.len())
        .into_par_iter()
        .map(|ix| search.run(ix))
        .collect::<Result<Vec<_>>>()?;
    let mut values = Vec::with_capacity(out.len());
    let mut argmin = Vec::with_capacity(out.len());
    let mut truncated = Vec::with_capacity(out.len());
    for (v, a, t) in out {
        values.push(v);
        argmin.push(a);
        truncated.push(t);
    }
    Ok(HopfLaxResult {
        values: GridFunction::new(grid.clone(), values)?,
        argmin,
        truncated,
    })
}

/// Smallest box margin that keeps every minimizer inside: `radius(osc f)`.
pub fn required_margin(f: &GridFunction, op: &HopfLaxOperator) -> f64 {
    op.radius(f.oscillation())
}

/// `sup |Q_{t+s} f − Q_t Q_s f|` over nodes whose minimizers are interior in
/// both evaluations. Returns the defect and the number of nodes used.
pub fn semigroup_defect(
    f: &GridFunction,
    op: &HopfLaxOperator,
    metric: &dyn Metric,
    t: f64,
    s: f64,
) -> Result<(f64, usize)> {
    let direct = hopf_lax_apply(f, &op.at(t + s)?, metric)?;
    let inner = hopf_lax_apply(f, &op.at(s)?, metric)?;
    let outer = hopf_lax_apply(&inner.values, &op.at(t)?, metric)?;
    let mut defect = 0.0_f64;
    let mut used = 0;
    for i in 0..f.grid().len() {
        if direct.argmin_interior(i)
            && outer.argmin_interior(i)
            && inner.argmin_interior(outer.argmin[i])
        {
            used += 1;
            defect = defect.max((direct.values.values()[i] - outer.values.values()[i]).abs());
        }
    }
    Ok((defect, used))
}

/// `Q_{t_k} f` on an increasing time grid, with minimizer flags.
#[derive(Debug, Clone)]
pub struct SemigroupTrace {
    pub times: Vec<f64>,
    pub steps: Vec<HopfLaxResult>,
    pub q: f64,
}

/// Geometric time grid with `n` points on `[t0, t1]`.
pub fn geometric_times(t0: f64, t1: f64, n: usize) -> Result<Vec<f64>> {
    if !(t0 > 0.0 && t1 > t0 && n >= 2) {
        return invalid("geometric time grid needs 0 < t0 < t1 and at least two points");
    }
    let ratio = (t1 / t0).ln() / (n - 1) as f64;
    Ok((0..n)
        .map(|k| {
            if k + 1 == n {
                t1
            } else {
                t0 * (ratio * k as f64).exp()
            }
        })
        .collect())
}

impl SemigroupTrace {
    pub fn compute(
        f: &GridFunction,
        op: &HopfLaxOperator,
        metric: &dyn Metric,
        times: &[f64],
    ) -> Result<Self> {
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return invalid("trace times must be strictly increasing");
        }
        let steps = times
            .iter()
            .map(|&t| hopf_lax_apply(f, &op.at(t)?, metric))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            times: times.to_vec(),
            steps,
            q: op.exponents.q,
        })
    }
}

/// Residual statistics at one interior time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualStats {
    pub t: f64,
    pub max: f64,
    pub mean: f64,
    pub nodes: usize,
}

/// Nodes where the residual is meaningful: one cell from the faces, clean
/// minimizers at all three times, and (on step-two groups) outside the tube of
/// radius `2h` around the centre axis.
fn residual_mask(trace: &SemigroupTrace, group: &CarnotGroup, k: usize) -> Vec<bool> {
    let grid = trace.steps[k].values.grid();
    let tube = if group.step() > 1 {
        2.0 * grid.spacing()[0].max(grid.spacing()[1])
    } else {
        0.0
    };
    let mut x = vec![0.0; grid.dim()];
    (0..grid.len())
        .map(|i| {
            if grid.face_depth(i) < 1 {
                return false;
            }
            if group.step() > 1 {
                grid.node(i, &mut x);
                if x[0].hypot(x[1]) <= tube {
                    return false;
                }
            }
            (k - 1..=k + 1).all(|j| trace.steps[j].clean(i))
        })
        .collect()
}

/// Nodewise `∂_t u` (nonuniform centred difference) and `|∇_H u|^q/q` at the
/// interior time `k`, with the validity mask.
fn time_and_space_terms(
    trace: &SemigroupTrace,
    group: &CarnotGroup,
    k: usize,
) -> Result<(Vec<f64>, Vec<f64>, Vec<bool>)> {
    let (t0, t1, t2) = (trace.times[k - 1], trace.times[k], trace.times[k + 1]);
    let (a, b) = (t1 - t0, t2 - t1);
    let (u0, u1, u2) = (
        trace.steps[k - 1].values.values(),
        trace.steps[k].values.values(),
        trace.steps[k + 1].values.values(),
    );
    // Second-order three-point derivative at t1 on a nonuniform grid.
    let ut: Vec<f64> = (0..u1.len())
        .map(|i| -b / (a * (a + b)) * u0[i] + (b - a) / (a * b) * u1[i] + a / (b * (a + b)) * u2[i])
        .collect();
    let q = trace.q;
    let grad = gradient_norm(&trace.steps[k].values, group)?;
    let hq: Vec<f64> = grad.iter().map(|g| g.powf(q) / q).collect();
    Ok((ut, hq, residual_mask(trace, group, k)))
}

fn check_trace(trace: &SemigroupTrace) -> Result<()> {
    if trace.times.len() < 3 {
        return invalid("residuals need at least three trace times");
    }
    Ok(())
}

/// `r = ∂_t u + |∇_H u|^q/q` at every interior time, as max and mean of `|r|`.
pub fn pde_residual(trace: &SemigroupTrace, group: &CarnotGroup) -> Result<Vec<ResidualStats>> {
    check_trace(trace)?;
    (1..trace.times.len() - 1)
        .map(|k| {
            let (ut, hq, mask) = time_and_space_terms(trace, group, k)?;
            let r: Vec<f64> = (0..ut.len())
                .filter(|&i| mask[i])
                .map(|i| (ut[i] + hq[i]).abs())
                .collect();
            Ok(ResidualStats {
                t: trace.times[k],
                max: r.iter().copied().fold(0.0, f64::max),
                mean: if r.is_empty() {
                    0.0
                } else {
                    fsum(r.iter().copied()) / r.len() as f64
                },
                nodes: r.len(),
            })
        })
        .collect()
}

/// Compares `∂_t Q_t f` with `−|∇_H Q_t f|^q/q` nodewise; the constant is the
/// largest deviation, and the check passes when it is below `tolerance`.
pub fn time_derivative_check(
    trace: &SemigroupTrace,
    group: &CarnotGroup,
    tolerance: f64,
) -> Result<InequalityReport> {
    check_trace(trace)?;
    let mut report = InequalityReport::new("hamilton-jacobi-time-derivative", "grid")
        .param("q", trace.q)
        .param("tolerance", tolerance)
        .param("times", &trace.times);
    let mut worst = 0.0_f64;
    for k in 1..trace.times.len() - 1 {
        let (ut, hq, mask) = time_and_space_terms(trace, group, k)?;
        let devs: Vec<f64> = (0..ut.len())
            .filter(|&i| mask[i])
            .map(|i| (ut[i] + hq[i]).abs())
            .collect();
        let max = devs.iter().copied().fold(0.0, f64::max);
        let mean = if devs.is_empty() {
            0.0
        } else {
            fsum(devs.iter().copied()) / devs.len() as f64
        };
        worst = worst.max(max);
        report.member(serde_json::json!({
            "t": trace.times[k],
            "max_deviation": max,
            "mean_deviation": mean,
            "nodes": devs.len(),
        }));
    }
    Ok(report.with_summary(worst, tolerance - worst, worst <= tolerance))
}
