//! Discrete optimal transport between weighted clouds.
//!
//! The exact solver is a primal network simplex on the complete bipartite
//! graph. Its final potentials are a dual certificate, and the reported
//! duality gap bounds the distance to the optimum. The entropic solver is a
//! log-domain Sinkhorn iteration with ε scaling, followed by rounding onto
//! the exact marginals.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::mcmc::SampleCloud;
use crate::metric::Metric;
use crate::sum::fsum;

/// Largest cloud the solvers accept on either side.
pub const MAX_ATOMS: usize = 4096;

/// Which solver to use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Solver {
    ExactLp,
    Sinkhorn {
        /// Final ε relative to the median cost.
        #[serde(default = "default_eps_final")]
        eps_final: f64,
        #[serde(default = "default_iterations")]
        iterations_per_level: usize,
    },
}

fn default_eps_final() -> f64 {
    1e-3
}

fn default_iterations() -> usize {
    200
}

impl Solver {
    pub fn sinkhorn() -> Self {
        Self::Sinkhorn {
            eps_final: default_eps_final(),
            iterations_per_level: default_iterations(),
        }
    }
}

/// Optimal coupling and the induced `W_p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WassersteinResult {
    pub p: f64,
    /// `W_p = (Σ π_ij d_ij^p)^{1/p}`.
    pub value: f64,
    /// `Σ π_ij d_ij^p`.
    pub cost: f64,
    /// Non-zero plan entries `(i, j, π_ij)`.
    pub plan: Vec<(usize, usize, f64)>,
    pub solver: Solver,
    /// Largest absolute marginal error of the plan.
    pub marginal_error: f64,
    /// Primal minus dual objective for the exact solver, zero for Sinkhorn.
    pub duality_gap: f64,
}

/// Pairwise `d(a_i, b_j)^p`, row-major.
pub fn cost_matrix(
    a: &SampleCloud,
    b: &SampleCloud,
    p: f64,
    metric: &dyn Metric,
) -> Result<Vec<f64>> {
    if a.dim() != b.dim() || a.dim() != metric.group().dim() {
        return Err(Error::DimensionMismatch {
            expected: metric.group().dim(),
            got: a.dim().max(b.dim()),
        });
    }
    let m = b.len();
    let rows = a
        .points
        .par_iter()
        .map(|x| {
            b.points
                .iter()
                .map(|y| metric.distance(x, y).map(|d| d.powf(p)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let cost: Vec<f64> = rows.into_iter().flatten().collect();
    debug_assert_eq!(cost.len(), a.len() * m);
    if cost.iter().any(|c| !c.is_finite()) {
        return invalid(
            "cost matrix has non-finite entries; a distance source could not evaluate a pair",
        );
    }
    Ok(cost)
}

/// `W_p` between two clouds.
pub fn wasserstein_p(
    a: &SampleCloud,
    b: &SampleCloud,
    p: f64,
    metric: &dyn Metric,
    solver: Solver,
) -> Result<WassersteinResult> {
    if !(p >= 1.0 && p.is_finite()) {
        return invalid(format!("Wasserstein exponent must be >= 1, got {p}"));
    }
    if a.len() > MAX_ATOMS || b.len() > MAX_ATOMS {
        return invalid(format!("clouds are limited to {MAX_ATOMS} atoms per side"));
    }
    let cost = cost_matrix(a, b, p, metric)?;
    let (plan, gap) = match solver {
        Solver::ExactLp => exact_plan(&a.weights, &b.weights, &cost)?,
        Solver::Sinkhorn {
            eps_final,
            iterations_per_level,
        } => (
            sinkhorn_plan(
                &a.weights,
                &b.weights,
                &cost,
                eps_final,
                iterations_per_level,
            )?,
            0.0,
        ),
    };
    let m = b.len();
    let total = fsum(plan.iter().map(|&(i, j, w)| w * cost[i * m + j]));
    let marginal_error = marginal_error(&plan, &a.weights, &b.weights);
    Ok(WassersteinResult {
        p,
        value: total.max(0.0).powf(1.0 / p),
        cost: total,
        plan,
        solver,
        marginal_error,
        duality_gap: gap,
    })
}

pub fn marginal_error(plan: &[(usize, usize, f64)], a: &[f64], b: &[f64]) -> f64 {
    let mut ra = vec![Vec::new(); a.len()];
    let mut rb = vec![Vec::new(); b.len()];
    for &(i, j, w) in plan {
        ra[i].push(w);
        rb[j].push(w);
    }
    let ea = ra
        .iter()
        .zip(a)
        .map(|(r, x)| (fsum(r.iter().copied()) - x).abs());
    let eb = rb
        .iter()
        .zip(b)
        .map(|(r, x)| (fsum(r.iter().copied()) - x).abs());
    ea.chain(eb).fold(0.0, f64::max)
}

/// Network simplex. Returns the plan and the duality gap of its potentials.
fn exact_plan(a: &[f64], b: &[f64], cost: &[f64]) -> Result<(Vec<(usize, usize, f64)>, f64)> {
    let (n, m) = (a.len(), b.len());
    let scale = cost.iter().copied().fold(0.0, f64::max).max(1e-300);
    let budget = 200 * (n + m) * (n + m) + 10_000;
    let Some(sol) = crate::simplex::solve(a, b, cost, budget) else {
        return Err(Error::NonConvergence {
            what: "exact transport pivots",
            residual: f64::NAN,
        });
    };
    // Dual objective with the column potentials tightened to feasibility.
    let v_feas: Vec<f64> = (0..m)
        .map(|j| {
            (0..n)
                .map(|i| cost[i * m + j] - sol.u[i])
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let dual = fsum(
        a.iter()
            .zip(&sol.u)
            .map(|(x, y)| x * y)
            .chain(b.iter().zip(&v_feas).map(|(x, y)| x * y)),
    );
    let primal = fsum(sol.flows.iter().map(|&(i, j, w)| w * cost[i * m + j]));
    let gap = primal - dual;
    if gap > 1e-9 * scale || sol.artificial > 1e-12 {
        return Err(Error::NonConvergence {
            what: "exact transport duality gap",
            residual: gap.max(sol.artificial),
        });
    }
    Ok((sol.flows, gap))
}

fn log_sum_exp_row(vals: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = vals.collect();
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + fsum(v.iter().map(|x| (x - max).exp())).ln()
}

fn median(values: &[f64]) -> f64 {
    let mut s: Vec<f64> = values.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    s[s.len() / 2]
}

/// Log-domain Sinkhorn, ε halving from the median cost down to
/// `eps_final · median`, then rounding onto the exact marginals.
fn sinkhorn_plan(
    a: &[f64],
    b: &[f64],
    cost: &[f64],
    eps_final: f64,
    iterations: usize,
) -> Result<Vec<(usize, usize, f64)>> {
    if !(eps_final > 0.0 && eps_final <= 1.0) || iterations == 0 {
        return invalid("Sinkhorn needs 0 < eps_final <= 1 and positive iterations");
    }
    let (n, m) = (a.len(), b.len());
    let med = median(cost);
    let base = if med > 0.0 {
        med
    } else {
        cost.iter().copied().fold(0.0, f64::max).max(1.0)
    };
    let la: Vec<f64> = a.iter().map(|x| x.ln()).collect();
    let lb: Vec<f64> = b.iter().map(|x| x.ln()).collect();
    let mut f = vec![0.0; n];
    let mut g = vec![0.0; m];
    let mut eps = base;
    let eps_end = eps_final * base;
    loop {
        for _ in 0..iterations {
            for i in 0..n {
                if a[i] == 0.0 {
                    continue;
                }
                let lse = log_sum_exp_row((0..m).map(|j| {
                    if b[j] == 0.0 {
                        f64::NEG_INFINITY
                    } else {
                        (g[j] - cost[i * m + j]) / eps + lb[j]
                    }
                }));
                f[i] = -eps * lse;
            }
            for j in 0..m {
                if b[j] == 0.0 {
                    continue;
                }
                let lse = log_sum_exp_row((0..n).map(|i| {
                    if a[i] == 0.0 {
                        f64::NEG_INFINITY
                    } else {
                        (f[i] - cost[i * m + j]) / eps + la[i]
                    }
                }));
                g[j] = -eps * lse;
            }
        }
        if eps <= eps_end * (1.0 + 1e-12) {
            break;
        }
        eps = (0.5 * eps).max(eps_end);
    }
    let mut plan: Vec<f64> = (0..n * m)
        .map(|k| {
            let (i, j) = (k / m, k % m);
            if a[i] == 0.0 || b[j] == 0.0 {
                0.0
            } else {
                ((f[i] + g[j] - cost[k]) / eps + la[i] + lb[j]).exp()
            }
        })
        .collect();
    if plan.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonConvergence {
            what: "Sinkhorn",
            residual: f64::NAN,
        });
    }
    round_to_marginals(&mut plan, a, b);
    Ok((0..n * m)
        .filter(|&k| plan[k] > 0.0)
        .map(|k| (k / m, k % m, plan[k]))
        .collect())
}

/// Altschuler-Weed-Rigollet rounding: scale rows and columns down to their
/// targets, then add the rank-one correction for the missing mass.
fn round_to_marginals(plan: &mut [f64], a: &[f64], b: &[f64]) {
    let (n, m) = (a.len(), b.len());
    for i in 0..n {
        let r = fsum(plan[i * m..(i + 1) * m].iter().copied());
        if r > a[i] {
            let s = a[i] / r;
            plan[i * m..(i + 1) * m].iter_mut().for_each(|x| *x *= s);
        }
    }
    for j in 0..m {
        let c = fsum((0..n).map(|i| plan[i * m + j]));
        if c > b[j] {
            let s = b[j] / c;
            (0..n).for_each(|i| plan[i * m + j] *= s);
        }
    }
    let ea: Vec<f64> = (0..n)
        .map(|i| a[i] - fsum(plan[i * m..(i + 1) * m].iter().copied()))
        .collect();
    let eb: Vec<f64> = (0..m)
        .map(|j| b[j] - fsum((0..n).map(|i| plan[i * m + j])))
        .collect();
    let mass = fsum(ea.iter().copied());
    if mass > 0.0 {
        for i in 0..n {
            for j in 0..m {
                plan[i * m + j] += ea[i].max(0.0) * eb[j].max(0.0) / mass;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::CarnotGroup;
    use crate::metric::GroupMetric;

    fn line() -> GroupMetric {
        GroupMetric::new(CarnotGroup::abelian(1).unwrap())
    }

    #[test]
    fn point_masses() {
        let a = SampleCloud::uniform(vec![vec![0.0]]).unwrap();
        let b = SampleCloud::uniform(vec![vec![1.5]]).unwrap();
        let r = wasserstein_p(&a, &b, 2.0, &line(), Solver::ExactLp).unwrap();
        assert!((r.value - 1.5).abs() < 1e-15);
        assert_eq!(r.plan, vec![(0, 0, 1.0)]);
    }

    /// Oracle: in one dimension the optimal plan is the monotone rearrangement.
    #[test]
    fn exact_matches_quantile_coupling() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let n = 60;
        let mut xa: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let mut xb: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..3.0)).collect();
        let a = SampleCloud::uniform(xa.iter().map(|x| vec![*x]).collect()).unwrap();
        let b = SampleCloud::uniform(xb.iter().map(|x| vec![*x]).collect()).unwrap();
        let r = wasserstein_p(&a, &b, 2.0, &line(), Solver::ExactLp).unwrap();
        xa.sort_by(f64::total_cmp);
        xb.sort_by(f64::total_cmp);
        let oracle: f64 = xa
            .iter()
            .zip(&xb)
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            / n as f64;
        assert!((r.cost - oracle).abs() < 1e-12, "{} vs {oracle}", r.cost);
        assert!(r.marginal_error < 1e-14);
        let s = wasserstein_p(&a, &b, 2.0, &line(), Solver::sinkhorn()).unwrap();
        assert!((s.cost - oracle).abs() < 0.01 * oracle);
        assert!(s.marginal_error < 1e-12);
    }

    #[test]
    fn identical_clouds_cost_nothing() {
        let pts: Vec<Vec<f64>> = (0..20).map(|k| vec![k as f64 * 0.1]).collect();
        let a = SampleCloud::uniform(pts).unwrap();
        let r = wasserstein_p(&a, &a, 2.0, &line(), Solver::ExactLp).unwrap();
        assert!(r.value <= 1e-12);
    }
}
