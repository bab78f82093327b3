//! Transport inequalities and the monotone quantities along `Q_t`.
//!
//! Every exponential integral is evaluated relative to `max f`, so for
//! bounded `f` nothing overflows and constants give exactly zero slack.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::calculus::gradient_norm;
use crate::error::{invalid, Error, Result};
use crate::functional::entropy_weighted;
use crate::grid::GridFunction;
use crate::hopflax::{hopf_lax_apply, HopfLaxOperator, HopfLaxResult, Normalization};
use crate::mcmc::SampleCloud;
use crate::measure::RadialMeasure;
use crate::metric::Metric;
use crate::report::InequalityReport;
use crate::sum::fsum;
use crate::transport::{wasserstein_p, Solver};

/// `log(∫ e^{s(u − c)} dμ) / s + c` for the probability weights `w`, with the
/// weights renormalized so that constants are reproduced exactly.
fn log_mean_exp(w: &[f64], u: &[f64], s: f64, c: f64) -> f64 {
    let total = fsum(w.iter().copied());
    let e = fsum(w.iter().zip(u).map(|(wi, ui)| wi * (s * (ui - c)).exp()));
    (e / total).ln() / s + c
}

/// `∫ (u − c) dμ + c`, exact for constants.
fn centred_mean(w: &[f64], u: &[f64], c: f64) -> f64 {
    let total = fsum(w.iter().copied());
    fsum(w.iter().zip(u).map(|(wi, ui)| wi * (ui - c))) / total + c
}

fn check_member(measure: &RadialMeasure, f: &GridFunction) -> Result<()> {
    if f.grid() != measure.grid() {
        return invalid("test function and measure live on different grids");
    }
    if f.values().iter().any(|v| !v.is_finite()) {
        return invalid("test functions must be finite");
    }
    Ok(())
}

/// Fraction of nodes whose minimizer search was cut by the box.
fn truncated_fraction(q: &HopfLaxResult) -> f64 {
    q.truncated.iter().filter(|&&t| t).count() as f64 / q.truncated.len() as f64
}

/// `max_f [log ∫ e^{K Q₁f} dμ − K ∫ f dμ]`, which is non-positive when the
/// dual transport inequality holds. Passes when the maximum is at most
/// `tolerance`.
pub fn dual_talagrand_check(
    measure: &RadialMeasure,
    family: &[GridFunction],
    k: f64,
    op: &HopfLaxOperator,
    metric: &dyn Metric,
    tolerance: f64,
) -> Result<InequalityReport> {
    if !(k > 0.0 && k.is_finite()) {
        return invalid(format!("dual transport needs K > 0, got {k}"));
    }
    if family.is_empty() {
        return invalid("dual transport check needs a non-empty family");
    }
    let q1 = op.at(1.0)?;
    let mut report = InequalityReport::new("dual-talagrand", op.normalization.as_str())
        .param("K", k)
        .param("p", op.exponents.p)
        .param("tolerance", tolerance);
    let mut worst = f64::NEG_INFINITY;
    for (i, f) in family.iter().enumerate() {
        check_member(measure, f)?;
        let qf = hopf_lax_apply(f, &q1, metric)?;
        let c = f.max();
        let lhs = k * log_mean_exp(&measure.weights, qf.values.values(), k, c);
        let rhs = k * centred_mean(&measure.weights, f.values(), c);
        let slack = lhs - rhs;
        worst = worst.max(slack);
        report.member(json!({
            "index": i,
            "log_integral": lhs,
            "k_mean": rhs,
            "slack": slack,
            "truncated_fraction": truncated_fraction(&qf),
        }));
    }
    Ok(report.with_summary(worst, tolerance - worst, worst <= tolerance))
}

/// Quadrature cloud of a grid measure: its nodes with their probabilities.
pub fn quadrature_cloud(measure: &RadialMeasure) -> Result<SampleCloud> {
    SampleCloud::from_grid(measure.grid(), &measure.weights)
}

/// Primal transport inequality for `dν = h dμ` on the atoms of `mu`:
/// slack `(1/K) Ent_μ(h) − cost(μ, ν)` with cost `W_p^p/p` under the Legendre
/// convention and `W_p^p` under the paper convention. Passes when the slack
/// is at least `−tolerance`.
pub fn primal_talagrand_check(
    mu: &SampleCloud,
    h: &[f64],
    k: f64,
    op: &HopfLaxOperator,
    metric: &dyn Metric,
    solver: Solver,
    tolerance: f64,
) -> Result<InequalityReport> {
    if h.len() != mu.len() {
        return Err(Error::DimensionMismatch {
            expected: mu.len(),
            got: h.len(),
        });
    }
    if !(k > 0.0 && k.is_finite()) {
        return invalid(format!("primal transport needs K > 0, got {k}"));
    }
    let ent = entropy_weighted(&mu.weights, h)?;
    if (ent.mass - 1.0).abs() > 1e-6 {
        return invalid(format!("h is not a density: ∫h dμ = {}", ent.mass));
    }
    let nu_weights: Vec<f64> = mu.weights.iter().zip(h).map(|(w, v)| w * v).collect();
    let nu = SampleCloud::new(mu.points.clone(), nu_weights)?;
    let p = op.exponents.p;
    let w = wasserstein_p(mu, &nu, p, metric, solver)?;
    let cost = match op.normalization {
        Normalization::Legendre => w.cost / p,
        Normalization::Paper => w.cost,
    };
    let rhs = ent.value / k;
    let slack = rhs - cost;
    let mut report = InequalityReport::new("primal-talagrand", op.normalization.as_str())
        .param("K", k)
        .param("p", p)
        .param("atoms", mu.len())
        .param("solver", solver)
        .param("tolerance", tolerance);
    report.member(json!({
        "wasserstein": w.value,
        "transport_cost": cost,
        "entropy": ent.value,
        "entropy_over_k": rhs,
        "marginal_error": w.marginal_error,
        "duality_gap": w.duality_gap,
        "slack": slack,
    }));
    Ok(report.with_summary(cost, slack, slack >= -tolerance))
}

/// Which monotone quantity a trace follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceKind {
    Phi,
    Hyper,
}

/// Values of a quantity expected to be non-increasing in `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityTrace {
    pub kind: TraceKind,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub parameters: BTreeMap<String, Value>,
    /// `max_k (v_{k+1} − v_k)⁺`.
    pub max_jump: f64,
    /// `φ(t₀) − ∫ f dμ` for `φ` traces.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit_gap: Option<f64>,
}

/// Largest increase between consecutive values, zero for monotone traces.
pub fn max_upward_jump(values: &[f64]) -> f64 {
    values
        .windows(2)
        .map(|w| (w[1] - w[0]).max(0.0))
        .fold(0.0, f64::max)
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.len() < 2 || times[0] <= 0.0 || times.windows(2).any(|w| !(w[1] > w[0])) {
        return invalid("trace times must be positive and strictly increasing, at least two");
    }
    Ok(())
}

/// `φ(t) = (1/(K tⁿ)) log ∫ e^{K tⁿ Q_t f} dμ` with `n = 1/(q − 1)`.
pub fn phi_trace(
    measure: &RadialMeasure,
    f: &GridFunction,
    k: f64,
    op: &HopfLaxOperator,
    metric: &dyn Metric,
    times: &[f64],
) -> Result<MonotonicityTrace> {
    check_member(measure, f)?;
    check_times(times)?;
    if !(k > 0.0 && k.is_finite()) {
        return invalid(format!("φ trace needs K > 0, got {k}"));
    }
    let q = op.exponents.q;
    let n = 1.0 / (q - 1.0);
    let c = f.max();
    let values = times
        .iter()
        .map(|&t| {
            let qf = hopf_lax_apply(f, &op.at(t)?, metric)?;
            Ok(log_mean_exp(
                &measure.weights,
                qf.values.values(),
                k * t.powf(n),
                c,
            ))
        })
        .collect::<Result<Vec<f64>>>()?;
    let mean = centred_mean(&measure.weights, f.values(), c);
    let mut parameters = BTreeMap::new();
    parameters.insert("K".into(), json!(k));
    parameters.insert("q".into(), json!(q));
    parameters.insert("n".into(), json!(n));
    parameters.insert("normalization".into(), json!(op.normalization));
    Ok(MonotonicityTrace {
        kind: TraceKind::Phi,
        max_jump: max_upward_jump(&values),
        limit_gap: Some(values[0] - mean),
        times: times.to_vec(),
        values,
        parameters,
    })
}

/// `λ(t) = a + ρt` at every time; errors if it reaches zero without the
/// log-norm convention.
fn exponents_along(times: &[f64], rho: f64, a: f64, log_norm_at_zero: bool) -> Result<Vec<f64>> {
    let lambda: Vec<f64> = times.iter().map(|t| a + rho * t).collect();
    let (lo, hi) = (
        lambda[0].min(lambda[lambda.len() - 1]),
        lambda[0].max(lambda[lambda.len() - 1]),
    );
    if lo <= 0.0 && hi >= 0.0 && !log_norm_at_zero {
        return invalid(
            "λ(t) = a + ρt reaches 0 on the time range; enable the log-norm convention",
        );
    }
    Ok(lambda)
}

/// `log ‖e^u‖_λ`, with `‖g‖₀ = e^{∫ log g}` at `λ = 0`.
fn log_norm_exp(w: &[f64], u: &[f64], lambda: f64, c: f64) -> f64 {
    if lambda == 0.0 {
        centred_mean(w, u, c)
    } else {
        log_mean_exp(w, u, lambda, c)
    }
}

/// `F(t) = ‖e^{Q_t f}‖_{a + ρt}` for the quadratic operator.
#[allow(clippy::too_many_arguments)]
pub fn hypercontractivity_trace(
    measure: &RadialMeasure,
    f: &GridFunction,
    rho: f64,
    a: f64,
    op: &HopfLaxOperator,
    metric: &dyn Metric,
    times: &[f64],
    log_norm_at_zero: bool,
) -> Result<MonotonicityTrace> {
    check_member(measure, f)?;
    check_times(times)?;
    if op.exponents.q != 2.0 {
        return invalid("the hypercontractivity trace uses the quadratic operator (q = 2)");
    }
    if !(rho > 0.0 && rho.is_finite() && a.is_finite()) {
        return invalid("hypercontractivity trace needs ρ > 0 and finite a");
    }
    let lambda = exponents_along(times, rho, a, log_norm_at_zero)?;
    let c = f.max();
    let values = times
        .iter()
        .zip(&lambda)
        .map(|(&t, &l)| {
            let qf = hopf_lax_apply(f, &op.at(t)?, metric)?;
            Ok(log_norm_exp(&measure.weights, qf.values.values(), l, c).exp())
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut parameters = BTreeMap::new();
    parameters.insert("rho".into(), json!(rho));
    parameters.insert("a".into(), json!(a));
    parameters.insert("lambda".into(), json!(lambda));
    parameters.insert("normalization".into(), json!(op.normalization));
    Ok(MonotonicityTrace {
        kind: TraceKind::Hyper,
        max_jump: max_upward_jump(&values),
        limit_gap: None,
        times: times.to_vec(),
        values,
        parameters,
    })
}

/// Chain rule for `G(t) = ∫ e^{λ(t) Q_t f} dμ`: compares the three-point time
/// difference of `G` with `∫ (ρ Q_t f − λ |∇_H Q_t f|^q/q) e^{λ Q_t f} dμ`,
/// where the Hamilton-Jacobi equation replaces `∂_t Q_t f`. Passes when the
/// largest deviation is at most `tolerance`.
#[allow(clippy::too_many_arguments)]
pub fn chain_rule_check(
    measure: &RadialMeasure,
    f: &GridFunction,
    rho: f64,
    a: f64,
    op: &HopfLaxOperator,
    metric: &dyn Metric,
    times: &[f64],
    tolerance: f64,
) -> Result<InequalityReport> {
    check_member(measure, f)?;
    check_times(times)?;
    if times.len() < 3 {
        return invalid("the chain rule check needs at least three times");
    }
    let lambda = exponents_along(times, rho, a, false)?;
    let q = op.exponents.q;
    let group = metric.group();
    let w = &measure.weights;
    let steps = times
        .iter()
        .map(|&t| hopf_lax_apply(f, &op.at(t)?, metric))
        .collect::<Result<Vec<_>>>()?;
    let g: Vec<f64> = steps
        .iter()
        .zip(&lambda)
        .map(|(s, l)| {
            fsum(
                w.iter()
                    .zip(s.values.values())
                    .map(|(wi, u)| wi * (l * u).exp()),
            )
        })
        .collect();
    let mut report = InequalityReport::new("chain-rule", op.normalization.as_str())
        .param("rho", rho)
        .param("a", a)
        .param("times", times)
        .param("tolerance", tolerance);
    let mut worst = 0.0_f64;
    for k in 1..times.len() - 1 {
        let (h0, h1) = (times[k] - times[k - 1], times[k + 1] - times[k]);
        let direct = -h1 / (h0 * (h0 + h1)) * g[k - 1]
            + (h1 - h0) / (h0 * h1) * g[k]
            + h0 / (h1 * (h0 + h1)) * g[k + 1];
        let u = steps[k].values.values();
        let grad = gradient_norm(&steps[k].values, group)?;
        let l = lambda[k];
        let integrand = fsum(
            w.iter()
                .zip(u)
                .zip(&grad)
                .map(|((wi, ui), gi)| wi * (rho * ui - l * gi.powf(q) / q) * (l * ui).exp()),
        );
        let dev = (direct - integrand).abs();
        worst = worst.max(dev);
        report.member(
            json!({"t": times[k], "difference": direct, "integrand": integrand, "deviation": dev}),
        );
    }
    Ok(report.with_summary(worst, tolerance - worst, worst <= tolerance))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::group::CarnotGroup;
    use crate::hopflax::Exponents;
    use crate::measure::{build_measure, MeasureOptions};
    use crate::metric::{DistanceField, GroupMetric};
    use crate::potential::Potential;

    fn gaussian(n: usize) -> (RadialMeasure, GroupMetric) {
        let g = CarnotGroup::abelian(1).unwrap();
        let grid = Grid::cube(&[-8.0], &[8.0], n).unwrap();
        let d = DistanceField::shooting(&g, &grid).unwrap();
        let m = build_measure(&g, &d, &Potential::gaussian(), &MeasureOptions::default()).unwrap();
        (m, GroupMetric::new(g))
    }

    fn op() -> HopfLaxOperator {
        HopfLaxOperator::new(
            1.0,
            Exponents::from_p(2.0).unwrap(),
            Normalization::Legendre,
        )
        .unwrap()
    }

    #[test]
    fn constants_have_zero_slack_and_flat_traces() {
        let (m, metric) = gaussian(161);
        let f = GridFunction::constant(m.grid(), 0.37).unwrap();
        for k in [0.5, 1.0, 3.0] {
            let r = dual_talagrand_check(&m, &[f.clone()], k, &op(), &metric, 0.0).unwrap();
            assert_eq!(r.summary.constant, 0.0);
        }
        let times = [0.1, 0.5, 1.0];
        let phi = phi_trace(&m, &f, 1.0, &op(), &metric, &times).unwrap();
        assert!(phi.values.iter().all(|v| *v == 0.37));
        let hyper =
            hypercontractivity_trace(&m, &f, 1.0, 1.0, &op(), &metric, &times, false).unwrap();
        assert!(hyper
            .values
            .iter()
            .all(|v| (v - 0.37f64.exp()).abs() < 1e-15));
    }

    #[test]
    fn lambda_crossing_zero_needs_convention() {
        let (m, metric) = gaussian(81);
        let f = GridFunction::constant(m.grid(), 1.0).unwrap();
        let times = [0.5, 1.0, 1.5];
        assert!(
            hypercontractivity_trace(&m, &f, 1.0, -1.0, &op(), &metric, &times, false).is_err()
        );
        let t = hypercontractivity_trace(&m, &f, 1.0, -1.0, &op(), &metric, &times, true).unwrap();
        assert!(t.values.iter().all(|v| (v - 1f64.exp()).abs() < 1e-14));
    }

    #[test]
    fn upward_jump() {
        assert_eq!(max_upward_jump(&[3.0, 2.0, 2.5, 1.0, 1.1]), 0.5);
        assert_eq!(max_upward_jump(&[1.0]), 0.0);
    }

    #[test]
    fn trivial_density_has_no_transport() {
        let (m, metric) = gaussian(81);
        let cloud = quadrature_cloud(&m).unwrap();
        let h = vec![1.0; cloud.len()];
        let r = primal_talagrand_check(&cloud, &h, 1.0, &op(), &metric, Solver::ExactLp, 1e-12)
            .unwrap();
        assert!(r.summary.slack.abs() < 1e-12);
        let bad = vec![2.0; cloud.len()];
        assert!(
            primal_talagrand_check(&cloud, &bad, 1.0, &op(), &metric, Solver::ExactLp, 0.0)
                .is_err()
        );
    }
}
