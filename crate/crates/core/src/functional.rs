//! Entropy, energies and the Poincaré, U-bound and log-Sobolev checks.

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::calculus::gradient_norm;
use crate::error::{invalid, Error, Result};
use crate::grid::GridFunction;
use crate::group::CarnotGroup;
use crate::measure::RadialMeasure;
use crate::report::InequalityReport;
use crate::sum::{dot, fsum};

/// `Ent_μ(g)` for non-negative nodal values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub value: f64,
    /// `∫ g dμ`.
    pub mass: f64,
}

/// `Ent(g) = ∫ g log g − (∫ g) log ∫ g` with `0 log 0 = 0`, for probability
/// weights `w`. Evaluated as `m Σ w φ(g/m)` with `φ(u) = u log u − u + 1 ≥ 0`,
/// so the result is never negative.
pub fn entropy_weighted(weights: &[f64], g: &[f64]) -> Result<EntropyReport> {
    if weights.len() != g.len() {
        return Err(Error::DimensionMismatch {
            expected: weights.len(),
            got: g.len(),
        });
    }
    if let Some(i) = g.iter().position(|v| !(*v >= 0.0 && v.is_finite())) {
        return invalid(format!(
            "entropy needs finite g >= 0, node {i} has {}",
            g[i]
        ));
    }
    let mass = dot(weights, g);
    if !(mass > 0.0) {
        return invalid("entropy needs a positive integral");
    }
    let phi = |u: f64| if u > 0.0 { u * u.ln() - u + 1.0 } else { 1.0 };
    let value = mass * fsum(weights.iter().zip(g).map(|(w, v)| w * phi(v / mass)));
    Ok(EntropyReport { value, mass })
}

pub fn entropy(measure: &RadialMeasure, g: &[f64]) -> Result<EntropyReport> {
    entropy_weighted(&measure.weights, g)
}

/// `∫ |∇_H f|^q dμ`.
pub fn q_energy(
    measure: &RadialMeasure,
    f: &GridFunction,
    q: f64,
    group: &CarnotGroup,
) -> Result<f64> {
    let g = gradient_norm(f, group)?;
    let gq: Vec<f64> = g.iter().map(|v| v.powf(q)).collect();
    measure.expectation(&gq)
}

fn check_q(q: f64) -> Result<()> {
    if !(q > 1.0 && q.is_finite()) {
        return invalid(format!("exponent q must exceed 1, got {q}"));
    }
    Ok(())
}

/// Relative size below which an energy counts as zero (a constant member).
const ZERO_ENERGY: f64 = 1e-24;

/// Empirical `q`-Poincaré constant `max μ|f − μf|^q / μ|∇f|^q`. With a
/// `reference`, the check passes when the constant does not exceed it;
/// otherwise it passes when the constant is finite.
pub fn poincare_check(
    measure: &RadialMeasure,
    family: &[GridFunction],
    q: f64,
    group: &CarnotGroup,
    reference: Option<f64>,
) -> Result<InequalityReport> {
    check_q(q)?;
    let mut report = InequalityReport::new("poincare", "grid")
        .param("q", q)
        .param("reference", reference);
    let mut best = f64::NEG_INFINITY;
    let mut used = 0;
    for (i, f) in family.iter().enumerate() {
        let mean = measure.mean(f)?;
        let dev: Vec<f64> = f
            .values()
            .iter()
            .map(|v| (v - mean).abs().powf(q))
            .collect();
        let var = measure.expectation(&dev)?;
        let energy = q_energy(measure, f, q, group)?;
        if energy <= ZERO_ENERGY * (1.0 + var) {
            report.member(json!({"index": i, "skipped": "zero energy"}));
            continue;
        }
        let ratio = var / energy;
        used += 1;
        best = best.max(ratio);
        report.member(json!({"index": i, "variance": var, "energy": energy, "ratio": ratio}));
    }
    if used == 0 {
        return invalid("Poincaré check needs at least one non-constant member");
    }
    let (slack, pass) = match reference {
        Some(r) => (r - best, best <= r),
        None => (f64::INFINITY, best.is_finite()),
    };
    Ok(report.with_summary(best, slack, pass))
}

/// Weight `η` of a U-bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UBoundMode {
    /// `η = U′(d)^q`.
    DerivativePower,
    /// `η = U(d)`.
    Potential,
    /// `η = |∇_H U(d)|^q + U(d)`.
    GradientPlusPotential,
}

impl UBoundMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::DerivativePower => "derivative-power",
            Self::Potential => "potential",
            Self::GradientPlusPotential => "gradient-plus-potential",
        }
    }
}

/// Per-member integrals of a U-bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UBoundTerms {
    /// `∫ |f|^q η dμ`.
    pub lhs: f64,
    /// `∫ |∇f|^q dμ`.
    pub energy: f64,
    /// `∫ |f|^q dμ`.
    pub mass: f64,
}

/// Smallest `C + D` with `lhs_i ≤ C e_i + D m_i` for all members.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UBoundFit {
    pub mode: UBoundMode,
    pub q: f64,
    pub c: f64,
    pub d: f64,
    /// `max_i lhs_i − C e_i − D m_i`; at most rounding above zero.
    pub max_residual: f64,
    pub terms: Vec<UBoundTerms>,
}

impl UBoundFit {
    pub fn to_report(&self) -> InequalityReport {
        let mut r = InequalityReport::new("u-bound", self.mode.as_str())
            .param("q", self.q)
            .param("C", self.c)
            .param("D", self.d);
        for t in &self.terms {
            r.member(t);
        }
        let pass = self.c.is_finite()
            && self.d.is_finite()
            && self.max_residual <= 1e-9 * (1.0 + self.c + self.d);
        r.with_summary(self.c + self.d, -self.max_residual, pass)
    }
}

/// Nodal `η` for a U-bound mode.
pub fn ubound_weight(
    measure: &RadialMeasure,
    q: f64,
    mode: UBoundMode,
    group: &CarnotGroup,
) -> Result<Vec<f64>> {
    let d = measure.distance.values();
    let p = &measure.potential;
    Ok(match mode {
        UBoundMode::DerivativePower => d.iter().map(|&s| p.derivative(s).powf(q)).collect(),
        UBoundMode::Potential => d.iter().map(|&s| p.value(s)).collect(),
        UBoundMode::GradientPlusPotential => {
            let grad = gradient_norm(&measure.distance, group)?;
            d.iter()
                .zip(&grad)
                .map(|(&s, g)| (p.derivative(s) * g).powf(q) + p.value(s))
                .collect()
        }
    })
}

/// Solves `min C + D` over `C, D ≥ 0` with `lhs_i ≤ C e_i + D m_i` by
/// enumerating the vertices of the feasible region.
pub fn fit_two_constants(terms: &[UBoundTerms]) -> Result<(f64, f64)> {
    if terms.is_empty() {
        return invalid("U-bound fit needs at least one member");
    }
    for (i, t) in terms.iter().enumerate() {
        if t.lhs > 0.0 && t.energy <= 0.0 && t.mass <= 0.0 {
            return Err(Error::Infeasible { index: i });
        }
    }
    let scale = terms
        .iter()
        .map(|t| t.lhs.abs())
        .fold(0.0, f64::max)
        .max(1e-300);
    let feasible = |c: f64, d: f64| {
        c >= 0.0
            && d >= 0.0
            && terms
                .iter()
                .all(|t| t.lhs - c * t.energy - d * t.mass <= 1e-12 * scale)
    };
    let mut candidates = Vec::new();
    // Axis vertices.
    let d_only = terms
        .iter()
        .map(|t| {
            if t.lhs <= 0.0 {
                0.0
            } else if t.mass > 0.0 {
                t.lhs / t.mass
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max);
    candidates.push((0.0, d_only));
    let c_only = terms
        .iter()
        .map(|t| {
            if t.lhs <= 0.0 {
                0.0
            } else if t.energy > 0.0 {
                t.lhs / t.energy
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max);
    candidates.push((c_only, 0.0));
    // Pairwise intersections of constraint lines.
    for (i, a) in terms.iter().enumerate() {
        for b in &terms[i + 1..] {
            let det = a.energy * b.mass - a.mass * b.energy;
            if det.abs() <= 1e-15 * (a.energy * b.mass).abs().max((a.mass * b.energy).abs()) {
                continue;
            }
            let c = (a.lhs * b.mass - a.mass * b.lhs) / det;
            let d = (a.energy * b.lhs - a.lhs * b.energy) / det;
            candidates.push((c, d));
        }
    }
    let mut best: Option<(f64, f64)> = None;
    for (c, d) in candidates {
        if !(c.is_finite() && d.is_finite()) || !feasible(c, d) {
            continue;
        }
        let better = match best {
            None => true,
            Some((bc, bd)) => c + d < bc + bd || (c + d == bc + bd && c < bc),
        };
        if better {
            best = Some((c, d));
        }
    }
    best.ok_or_else(|| {
        let index = terms.iter().position(|t| t.lhs > 0.0).unwrap_or(0);
        Error::Infeasible { index }
    })
}

/// Fits the U-bound constants over `family`.
pub fn ubound_check(
    measure: &RadialMeasure,
    family: &[GridFunction],
    q: f64,
    mode: UBoundMode,
    group: &CarnotGroup,
) -> Result<UBoundFit> {
    check_q(q)?;
    let eta = ubound_weight(measure, q, mode, group)?;
    let terms = family
        .iter()
        .map(|f| {
            let fq: Vec<f64> = f.values().iter().map(|v| v.abs().powf(q)).collect();
            let weighted: Vec<f64> = fq.iter().zip(&eta).map(|(a, b)| a * b).collect();
            Ok(UBoundTerms {
                lhs: measure.expectation(&weighted)?,
                energy: q_energy(measure, f, q, group)?,
                mass: measure.expectation(&fq)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (c, d) = fit_two_constants(&terms)?;
    let max_residual = terms
        .iter()
        .map(|t| t.lhs - c * t.energy - d * t.mass)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(UBoundFit {
        mode,
        q,
        c,
        d,
        max_residual,
        terms,
    })
}

/// `K = q ((q − 1)/c)^{1/(q−1)}`, the inverse of `c = (q − 1)(q/K)^{q−1}`.
pub fn k_from_c(c: f64, q: f64) -> f64 {
    q * ((q - 1.0) / c).powf(1.0 / (q - 1.0))
}

pub fn c_from_k(k: f64, q: f64) -> f64 {
    (q - 1.0) * (q / k).powf(q - 1.0)
}

/// Log-Sobolev ratios and the derived constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsiEstimate {
    pub q: f64,
    /// `Ent(|f|^q) / ∫|∇f|^q`, `None` for zero-energy members.
    pub ratios: Vec<Option<f64>>,
    pub c_hat: f64,
    pub k: f64,
    pub skipped: Vec<usize>,
}

impl LsiEstimate {
    /// Verdict against an upper `reference` for every ratio, or finiteness.
    pub fn to_report(&self, reference: Option<f64>) -> InequalityReport {
        let mut r = InequalityReport::new("log-sobolev", "grid")
            .param("q", self.q)
            .param("K", self.k)
            .param("reference", reference)
            .param("skipped", &self.skipped);
        for (i, ratio) in self.ratios.iter().enumerate() {
            r.member(json!({"index": i, "ratio": ratio}));
        }
        let (slack, pass) = match reference {
            Some(b) => (b - self.c_hat, self.c_hat <= b),
            None => (f64::INFINITY, self.c_hat.is_finite()),
        };
        r.with_summary(self.c_hat, slack, pass)
    }
}

/// `c_hat = max_f Ent(|f|^q) / ∫|∇f|^q` over the family.
pub fn estimate_lsi_constant(
    measure: &RadialMeasure,
    family: &[GridFunction],
    q: f64,
    group: &CarnotGroup,
) -> Result<LsiEstimate> {
    check_q(q)?;
    if q > 2.0 {
        return invalid(format!("log-Sobolev estimate needs q <= 2, got {q}"));
    }
    let mut ratios = Vec::with_capacity(family.len());
    let mut skipped = Vec::new();
    for (i, f) in family.iter().enumerate() {
        let fq: Vec<f64> = f.values().iter().map(|v| v.abs().powf(q)).collect();
        let ent = entropy(measure, &fq)?.value;
        let energy = q_energy(measure, f, q, group)?;
        let mass = measure.expectation(&fq)?;
        if energy <= ZERO_ENERGY * (1.0 + mass) {
            skipped.push(i);
            ratios.push(None);
        } else {
            ratios.push(Some(ent / energy));
        }
    }
    let c_hat = ratios
        .iter()
        .flatten()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if !(c_hat > 0.0) {
        return invalid("log-Sobolev estimate needs a non-constant member with positive entropy");
    }
    Ok(LsiEstimate {
        q,
        ratios,
        c_hat,
        k: k_from_c(c_hat, q),
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_basics() {
        let w = vec![0.25; 4];
        assert_eq!(entropy_weighted(&w, &[2.0; 4]).unwrap().value, 0.0);
        let g = [0.0, 1.0, 2.0, 5.0];
        let e = entropy_weighted(&w, &g).unwrap().value;
        // Direct formula.
        let m = 2.0_f64;
        let direct = 0.25 * (2.0 * 2f64.ln() + 5.0 * 5f64.ln()) - m * m.ln();
        assert!((e - direct).abs() < 1e-14);
        let scaled: Vec<f64> = g.iter().map(|v| 3.7 * v).collect();
        assert!((entropy_weighted(&w, &scaled).unwrap().value - 3.7 * e).abs() < 1e-12 * e);
        assert!(entropy_weighted(&w, &[-1.0, 1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn c_k_round_trip() {
        for &(k, q) in &[(1.0, 2.0), (0.3, 1.5), (7.0, 1.2)] {
            let back = k_from_c(c_from_k(k, q), q);
            assert!((back - k).abs() <= 1e-12 * k);
        }
        assert!((k_from_c(2.0, 2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lp_vertices() {
        let t = |lhs, energy, mass| UBoundTerms { lhs, energy, mass };
        // Constants: energies vanish.
        let (c, d) = fit_two_constants(&[t(2.0, 0.0, 1.0), t(3.0, 0.0, 2.0)]).unwrap();
        assert_eq!((c, d), (0.0, 2.0));
        // Two binding constraints meeting at (1, 1).
        let (c, d) = fit_two_constants(&[t(3.0, 2.0, 1.0), t(3.0, 1.0, 2.0)]).unwrap();
        assert!((c - 1.0).abs() < 1e-14 && (d - 1.0).abs() < 1e-14);
        assert!(matches!(
            fit_two_constants(&[t(1.0, 0.0, 0.0)]),
            Err(Error::Infeasible { index: 0 })
        ));
    }
}
