//! Grid eikonal oracle for `|∇_H u| = 1`, `u(0) = 0`.
//!
//! The solver is a semi-Lagrangian fast-sweeping scheme. Every update applies
//! the dynamic-programming step
//!
//! ```text
//! u(x) = min_w  u(x − h·w) + h,    w a unit horizontal vector at x,
//! ```
//!
//! with `u` read off the grid by multilinear interpolation. For the groups here
//! a constant-control horizontal curve is a straight coordinate line, so the
//! foot point is exact; the scheme is monotone because interpolation weights
//! are non-negative. When the foot's cell contains `x` itself the update is
//! solved for `u(x)` instead of using the stale value.
//!
//! Near the source the distance varies like `√|z|` and a uniform grid cannot
//! resolve it, which caps plain sweeping at half an order of accuracy. The
//! solver therefore also offers the candidate `½·u(δ₂x)` wherever the dilate
//! `δ₂x` is a node: the distance is 1-homogeneous, so this is an exact identity
//! that carries the well-resolved outer solution back to the source, and the
//! candidate is monotone in `u` like the others.

use crate::error::{invalid, Error, Result};
use crate::grid::{Grid, GridFunction, MAX_DIM};
use crate::group::CarnotGroup;
use crate::metric::{DistanceField, DistanceMethod};

const BIG: f64 = 1e30;

/// Tuning of [`eikonal_distance_field`].
#[derive(Debug, Clone, PartialEq)]
pub struct EikonalOptions {
    /// Step length as a multiple of the smallest horizontal spacing.
    pub step_factor: f64,
    /// Stop once a full round of sweeps changes no node by more than this.
    pub tolerance: f64,
    pub max_rounds: usize,
    /// Number of directions in the coarse angle scan (two horizontal dims).
    pub coarse_angles: usize,
    /// Golden-section iterations refining the best coarse angle.
    pub refine_iterations: usize,
    /// Rounds with a full angle scan; later rounds take compass steps around
    /// the angle found last time.
    pub full_scan_rounds: usize,
    /// Also offer `½·u(δ₂x)` as a candidate wherever `δ₂x` is a node.
    pub dilation_candidates: bool,
}

impl Default for EikonalOptions {
    fn default() -> Self {
        Self {
            step_factor: 1.0,
            tolerance: 1e-8,
            max_rounds: 100,
            coarse_angles: 24,
            refine_iterations: 10,
            full_scan_rounds: 2,
            dilation_candidates: true,
        }
    }
}

/// Candidate directions in the horizontal coordinates of the control.
fn direction_set(n1: usize) -> Vec<Vec<f64>> {
    match n1 {
        1 => vec![vec![1.0], vec![-1.0]],
        3 => {
            // Fibonacci sphere.
            let n = 96;
            let golden = std::f64::consts::PI * (3.0 - 5.0_f64.sqrt());
            (0..n)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
                    let rad = (1.0 - z * z).sqrt();
                    let phi = golden * k as f64;
                    vec![rad * phi.cos(), rad * phi.sin(), z]
                })
                .collect()
        }
        _ => Vec::new(),
    }
}

struct Solver<'a> {
    group: &'a CarnotGroup,
    grid: &'a Grid,
    step: f64,
    opts: &'a EikonalOptions,
    dirs: Vec<Vec<f64>>,
    inv_h: [f64; MAX_DIM],
}

impl Solver<'_> {
    /// [`Self::candidate`] for three coordinates and two controls, with the
    /// trilinear stencil inlined.
    #[inline]
    fn candidate3(&self, u: &[f64], i: usize, x: &[f64], c: (f64, f64), coef: &[f64]) -> f64 {
        let lo = self.grid.lo();
        let shape = self.grid.shape();
        let strides = self.grid.strides();
        let mut base = 0;
        let mut frac = [0.0; 3];
        for a in 0..3 {
            let v = c.0 * coef[a] + c.1 * coef[3 + a];
            let s = (x[a] - self.step * v - lo[a]) * self.inv_h[a];
            let top = (shape[a] - 1) as f64;
            if !(s >= -1e-12 && s <= top + 1e-12) {
                return BIG;
            }
            let k = s.floor().clamp(0.0, top - 1.0);
            frac[a] = (s - k).clamp(0.0, 1.0);
            base += k as usize * strides[a];
        }
        let mut acc = 0.0;
        let mut self_w = 0.0;
        for corner in 0..8 {
            let mut w = 1.0;
            let mut off = base;
            for a in 0..3 {
                if corner >> a & 1 == 1 {
                    w *= frac[a];
                    off += strides[a];
                } else {
                    w *= 1.0 - frac[a];
                }
            }
            if w == 0.0 {
                continue;
            }
            if off == i {
                self_w += w;
            } else {
                acc += w * u[off];
            }
        }
        if self_w >= 1.0 - 1e-12 {
            return BIG;
        }
        (acc + self.step) / (1.0 - self_w)
    }

    /// Value proposed for node `i` at `x` by the ray with horizontal control `c`.
    fn candidate(&self, u: &[f64], i: usize, x: &[f64], c: &[f64], coef: &[f64]) -> f64 {
        let n = self.grid.dim();
        let n1 = c.len();
        let mut foot = [0.0; MAX_DIM];
        for a in 0..n {
            let v: f64 = (0..n1).map(|k| c[k] * coef[k * n + a]).sum();
            foot[a] = x[a] - self.step * v;
        }
        let mut idx = [0usize; 1 << MAX_DIM];
        let mut w = [0.0; 1 << MAX_DIM];
        let Some(corners) = self.grid.stencil(&foot[..n], &mut idx, &mut w) else {
            return BIG;
        };
        let mut acc = 0.0;
        let mut self_w = 0.0;
        for k in 0..corners {
            if w[k] == 0.0 {
                continue;
            }
            if idx[k] == i {
                self_w += w[k];
            } else {
                acc += w[k] * u[idx[k]];
            }
        }
        if self_w >= 1.0 - 1e-12 {
            return BIG;
        }
        (acc + self.step) / (1.0 - self_w)
    }

    /// Best candidate value at node `i`. A cold update scans the coarse angles
    /// and refines by golden section; a warm update takes one compass step
    /// around the node's previous best angle. The search state is written back.
    fn update(
        &self,
        u: &[f64],
        i: usize,
        x: &mut [f64],
        coef: &mut [f64],
        state: &mut AngleState,
        warm: bool,
    ) -> f64 {
        self.grid.node(i, x);
        self.group.frame_raw(x, coef);
        let n1 = self.group.horizontal_dim();
        if n1 != 2 {
            return self
                .dirs
                .iter()
                .map(|c| self.candidate(u, i, x, c, coef))
                .fold(BIG, f64::min);
        }
        let fast = self.grid.dim() == 3;
        let eval = |alpha: f64| {
            let (sn, cs) = alpha.sin_cos();
            if fast {
                self.candidate3(u, i, x, (cs, sn), coef)
            } else {
                self.candidate(u, i, x, &[cs, sn], coef)
            }
        };
        let m = self.opts.coarse_angles;
        let dtheta = std::f64::consts::TAU / m as f64;
        if warm {
            let (a, e) = (state.angle, state.step);
            let (f0, fp, fm) = (eval(a), eval(a + e), eval(a - e));
            if fp < f0 && fp <= fm {
                *state = AngleState {
                    angle: a + e,
                    step: (2.0 * e).min(dtheta),
                };
                return fp;
            }
            if fm < f0 {
                *state = AngleState {
                    angle: a - e,
                    step: (2.0 * e).min(dtheta),
                };
                return fm;
            }
            state.step = (0.5 * e).max(1e-7);
            return f0;
        }
        let mut best = BIG;
        let mut best_k = 0;
        for k in 0..m {
            let v = eval(k as f64 * dtheta);
            if v < best {
                best = v;
                best_k = k;
            }
        }
        if best >= BIG {
            return BIG;
        }
        // Golden-section search on the bracket around the best coarse angle.
        let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
        let centre = best_k as f64 * dtheta;
        let mut best_angle = centre;
        let (mut a, mut b) = (centre - dtheta, centre + dtheta);
        let mut c1 = b - inv_phi * (b - a);
        let mut c2 = a + inv_phi * (b - a);
        let mut f1 = eval(c1);
        let mut f2 = eval(c2);
        for _ in 0..self.opts.refine_iterations {
            if f1 < f2 {
                b = c2;
                c2 = c1;
                f2 = f1;
                c1 = b - inv_phi * (b - a);
                f1 = eval(c1);
            } else {
                a = c1;
                c1 = c2;
                f1 = f2;
                c2 = a + inv_phi * (b - a);
                f2 = eval(c2);
            }
        }
        if f1 < best {
            best = f1;
            best_angle = c1;
        }
        if f2 < best {
            best = f2;
            best_angle = c2;
        }
        *state = AngleState {
            angle: best_angle,
            step: b - a,
        };
        best
    }
}

/// Per-node angle search state carried between sweeps.
#[derive(Debug, Clone, Copy)]
struct AngleState {
    angle: f64,
    step: f64,
}

/// Solves `|∇_H u| = 1` with `u(0) = 0` on the grid; the origin must be a node.
pub fn eikonal_distance_field(
    group: &CarnotGroup,
    grid: &Grid,
    opts: &EikonalOptions,
) -> Result<DistanceField> {
    if grid.dim() != group.dim() {
        return Err(Error::DimensionMismatch {
            expected: group.dim(),
            got: grid.dim(),
        });
    }
    let origin = vec![0.0; grid.dim()];
    if !grid.contains(&origin) {
        return invalid("eikonal box must contain the origin");
    }
    let Some(source) = grid.node_at(&origin) else {
        return invalid("the origin must be a grid node");
    };
    let n1 = group.horizontal_dim();
    let step = opts.step_factor
        * grid.spacing()[..n1]
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
    let solver = Solver {
        group,
        grid,
        step,
        opts,
        dirs: direction_set(n1),
        inv_h: {
            let mut inv = [0.0; MAX_DIM];
            for (a, h) in grid.spacing().iter().enumerate() {
                inv[a] = 1.0 / h;
            }
            inv
        },
    };

    let dim = grid.dim();
    let shape = grid.shape().to_vec();
    let mut u = vec![BIG; grid.len()];
    u[source] = 0.0;
    let mut x = vec![0.0; dim];
    let mut coef = vec![0.0; n1 * dim];
    let mut idx = vec![0usize; dim];
    // Node index of δ₂x for nodes whose dilate stays on the grid.
    let weights = group.weights();
    let centre: Vec<usize> = {
        let mut c = vec![0; dim];
        grid.multi_index(source, &mut c);
        c
    };
    let dilated: Vec<Option<usize>> = (0..grid.len())
        .map(|i| {
            if !opts.dilation_candidates {
                return None;
            }
            let mut m = vec![0; dim];
            grid.multi_index(i, &mut m);
            for a in 0..dim {
                let off = (m[a] as i64 - centre[a] as i64) << weights[a];
                let j = centre[a] as i64 + off;
                if j < 0 || j >= shape[a] as i64 {
                    return None;
                }
                m[a] = j as usize;
            }
            Some(grid.flat_index(&m))
        })
        .collect();
    // Activity tracking: an update only reads nodes within its stencil reach and
    // its dilate, so it is skipped when none of those changed since the node
    // was last evaluated.
    const BLOCK: usize = 4;
    let nblocks: Vec<usize> = shape.iter().map(|n| n.div_ceil(BLOCK)).collect();
    let mut block_strides = vec![1; dim];
    for a in (0..dim.saturating_sub(1)).rev() {
        block_strides[a] = block_strides[a + 1] * nblocks[a + 1];
    }
    let reach: Vec<[usize; MAX_DIM]> = (0..grid.len())
        .map(|i| {
            grid.node(i, &mut x);
            group.frame_raw(&x, &mut coef);
            let mut r = [0usize; MAX_DIM];
            for a in 0..dim {
                let norm = (0..n1)
                    .map(|k| coef[k * dim + a].powi(2))
                    .sum::<f64>()
                    .sqrt();
                r[a] = (step * norm / grid.spacing()[a] - 1e-9).ceil().max(0.0) as usize + 1;
            }
            r
        })
        .collect();
    let mut block_changed = vec![1u64; nblocks.iter().product()];
    let mut node_changed = vec![1u64; grid.len()];
    let mut evaluated = vec![0u64; grid.len()];
    let mut tick = 1u64;
    let stale =
        |i: usize, idx: &[usize], block_changed: &[u64], node_changed: &[u64], since: u64| {
            if let Some(j) = dilated[i] {
                if node_changed[j] > since {
                    return true;
                }
            }
            let mut lo = [0usize; MAX_DIM];
            let mut hi = [0usize; MAX_DIM];
            for a in 0..dim {
                lo[a] = idx[a].saturating_sub(reach[i][a]) / BLOCK;
                hi[a] = (idx[a] + reach[i][a]).min(shape[a] - 1) / BLOCK;
            }
            let mut b = lo;
            loop {
                let flat: usize = (0..dim).map(|a| b[a] * block_strides[a]).sum();
                if block_changed[flat] > since {
                    return true;
                }
                let mut a = dim;
                loop {
                    if a == 0 {
                        return false;
                    }
                    a -= 1;
                    if b[a] < hi[a] {
                        b[a] += 1;
                        break;
                    }
                    b[a] = lo[a];
                }
            }
        };
    let mut converged = false;
    let mut last_change = f64::INFINITY;
    let mut angles = vec![
        AngleState {
            angle: 0.0,
            step: 0.0
        };
        grid.len()
    ];
    for round in 0..opts.max_rounds {
        let warm = round >= opts.full_scan_rounds;
        let mut change = 0.0_f64;
        for order in 0..(1usize << dim) {
            for lin in 0..grid.len() {
                // Decode `lin` in the axis directions selected by `order`.
                let mut rem = lin;
                for a in (0..dim).rev() {
                    let k = rem % shape[a];
                    rem /= shape[a];
                    idx[a] = if order >> a & 1 == 1 {
                        shape[a] - 1 - k
                    } else {
                        k
                    };
                }
                let i = grid.flat_index(&idx);
                if i == source || !stale(i, &idx, &block_changed, &node_changed, evaluated[i]) {
                    continue;
                }
                evaluated[i] = tick;
                let mut v = solver.update(&u, i, &mut x, &mut coef, &mut angles[i], warm);
                if let Some(j) = dilated[i] {
                    v = v.min(0.5 * u[j]);
                }
                if v < u[i] {
                    let delta = u[i] - v;
                    change = change.max(delta);
                    u[i] = v;
                    // Decrements far below the tolerance update the value
                    // without waking dependants.
                    if delta < 0.01 * opts.tolerance {
                        continue;
                    }
                    tick += 1;
                    node_changed[i] = tick;
                    let b: usize = (0..dim).map(|a| idx[a] / BLOCK * block_strides[a]).sum();
                    block_changed[b] = tick;
                }
            }
        }
        last_change = change;
        if change < opts.tolerance {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence {
            what: "eikonal sweeps",
            residual: last_change,
        });
    }
    if let Some(i) = u.iter().position(|v| *v >= BIG) {
        return invalid(format!(
            "node {i} is unreachable from the origin by horizontal steps"
        ));
    }
    Ok(DistanceField {
        field: GridFunction::new(grid.clone(), u)?,
        method: DistanceMethod::Eikonal,
    })
}
