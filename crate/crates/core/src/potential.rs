//! Radial potentials `U(s)` and their growth conditions.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Configuration form of a potential, tagged by `name`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialSpec {
    /// `U = s^p`.
    Power { p: f64 },
    /// `U = (s + 1)^p ln(s + 1)`.
    Powerlog { p: f64 },
    /// `U = sinh s`.
    Sinh,
    /// `U = s²/2`.
    GaussianEuclid,
    /// Natural cubic spline through the samples `(s_i, u_i)`.
    Custom { s: Vec<f64>, u: Vec<f64> },
}

/// Natural cubic spline with its second-derivative table.
#[derive(Debug, Clone, PartialEq)]
struct Spline {
    s: Vec<f64>,
    u: Vec<f64>,
    m: Vec<f64>,
}

impl Spline {
    fn new(s: Vec<f64>, u: Vec<f64>) -> Result<Self> {
        let n = s.len();
        if n < 2 || u.len() != n {
            return invalid("custom potential needs at least two (s, u) samples of equal length");
        }
        if s.windows(2).any(|w| !(w[1] > w[0])) || s.iter().chain(&u).any(|v| !v.is_finite()) {
            return invalid("custom potential abscissae must be finite and strictly increasing");
        }
        // Tridiagonal system for interior second derivatives, m₀ = m_{n−1} = 0.
        let mut m = vec![0.0; n];
        if n > 2 {
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut upper = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            for j in 0..k {
                let i = j + 1;
                let h0 = s[i] - s[i - 1];
                let h1 = s[i + 1] - s[i];
                diag[j] = 2.0 * (h0 + h1);
                upper[j] = h1;
                rhs[j] = 6.0 * ((u[i + 1] - u[i]) / h1 - (u[i] - u[i - 1]) / h0);
            }
            for j in 1..k {
                let lower = s[j + 1] - s[j];
                let w = lower / diag[j - 1];
                diag[j] -= w * upper[j - 1];
                rhs[j] -= w * rhs[j - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for j in (0..k - 1).rev() {
                m[j + 1] = (rhs[j] - upper[j] * m[j + 2]) / diag[j];
            }
        }
        Ok(Self { s, u, m })
    }

    /// `(U, U′, U″)` at `x`; NaN outside the table.
    fn eval(&self, x: f64) -> [f64; 3] {
        let n = self.s.len();
        if !(x >= self.s[0] && x <= self.s[n - 1]) {
            return [f64::NAN; 3];
        }
        let i = match self.s.partition_point(|v| *v <= x) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        };
        let h = self.s[i + 1] - self.s[i];
        let a = (self.s[i + 1] - x) / h;
        let b = (x - self.s[i]) / h;
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let (u0, u1) = (self.u[i], self.u[i + 1]);
        let val = a * u0 + b * u1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let der = (u1 - u0) / h + ((1.0 - 3.0 * a * a) * m0 + (3.0 * b * b - 1.0) * m1) * h / 6.0;
        let sec = a * m0 + b * m1;
        [val, der, sec]
    }
}

/// A validated potential with evaluators for `U`, `U′`, `U″` on `s ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PotentialSpec", into = "PotentialSpec")]
pub struct Potential {
    spec: PotentialSpec,
    spline: Option<Spline>,
}

impl TryFrom<PotentialSpec> for Potential {
    type Error = Error;

    fn try_from(spec: PotentialSpec) -> Result<Self> {
        Potential::new(spec)
    }
}

impl From<Potential> for PotentialSpec {
    fn from(p: Potential) -> Self {
        p.spec
    }
}

impl Potential {
    pub fn new(spec: PotentialSpec) -> Result<Self> {
        let spline = match &spec {
            PotentialSpec::Power { p } | PotentialSpec::Powerlog { p } => {
                if !(p.is_finite() && *p >= 1.0) {
                    return invalid(format!("potential exponent must be >= 1, got {p}"));
                }
                None
            }
            PotentialSpec::Custom { s, u } => {
                if s[0] > 0.0 {
                    return invalid("custom potential table must start at s <= 0");
                }
                Some(Spline::new(s.clone(), u.clone())?)
            }
            _ => None,
        };
        Ok(Self { spec, spline })
    }

    pub fn power(p: f64) -> Result<Self> {
        Self::new(PotentialSpec::Power { p })
    }

    pub fn powerlog(p: f64) -> Result<Self> {
        Self::new(PotentialSpec::Powerlog { p })
    }

    pub fn sinh() -> Self {
        Self::new(PotentialSpec::Sinh).expect("parameter-free")
    }

    pub fn gaussian() -> Self {
        Self::new(PotentialSpec::GaussianEuclid).expect("parameter-free")
    }

    /// `U ≡ 0` on `[0, s_max]`.
    pub fn zero(s_max: f64) -> Result<Self> {
        Self::new(PotentialSpec::Custom {
            s: vec![0.0, s_max],
            u: vec![0.0, 0.0],
        })
    }

    pub fn spec(&self) -> &PotentialSpec {
        &self.spec
    }

    /// `(U(s), U′(s), U″(s))`. Custom tables yield NaN outside their range.
    pub fn eval(&self, s: f64) -> [f64; 3] {
        match &self.spec {
            PotentialSpec::Power { p } => {
                let p = *p;
                [
                    s.powf(p),
                    p * s.powf(p - 1.0),
                    p * (p - 1.0) * s.powf(p - 2.0),
                ]
            }
            PotentialSpec::Powerlog { p } => {
                let p = *p;
                let t = s + 1.0;
                let l = t.ln();
                [
                    t.powf(p) * l,
                    t.powf(p - 1.0) * (p * l + 1.0),
                    t.powf(p - 2.0) * (p * (p - 1.0) * l + 2.0 * p - 1.0),
                ]
            }
            PotentialSpec::Sinh => [s.sinh(), s.cosh(), s.sinh()],
            PotentialSpec::GaussianEuclid => [0.5 * s * s, s, 1.0],
            PotentialSpec::Custom { .. } => self.spline.as_ref().expect("built with table").eval(s),
        }
    }

    pub fn value(&self, s: f64) -> f64 {
        self.eval(s)[0]
    }

    pub fn derivative(&self, s: f64) -> f64 {
        self.eval(s)[1]
    }

    pub fn second_derivative(&self, s: f64) -> f64 {
        self.eval(s)[2]
    }

    /// `U″/U′` in a form that keeps closed-form bounds exact in floating point
    /// (`tanh s` rather than `sinh s / cosh s`).
    pub fn curvature_ratio(&self, s: f64) -> f64 {
        match &self.spec {
            PotentialSpec::Power { p } => (p - 1.0) / s,
            PotentialSpec::Powerlog { p } => {
                let l = (s + 1.0).ln();
                (p * (p - 1.0) * l + 2.0 * p - 1.0) / ((s + 1.0) * (p * l + 1.0))
            }
            PotentialSpec::Sinh => s.tanh(),
            PotentialSpec::GaussianEuclid => 1.0 / s,
            PotentialSpec::Custom { .. } => {
                let [_, du, ddu] = self.eval(s);
                ddu / du
            }
        }
    }

    /// Samples `[0, s_max]` and checks that `U ≥ 0`, `U′ ≥ 0` and `U″` is finite.
    pub fn validate(&self, s_max: f64) -> Result<()> {
        let n = 1000;
        for k in 0..=n {
            let s = s_max * k as f64 / n as f64;
            let [u, du, ddu] = self.eval(s);
            if !(u.is_finite() && du.is_finite()) || (s > 0.0 && !ddu.is_finite()) {
                return invalid(format!("potential undefined at s = {s}"));
            }
            if u < -1e-12 || du < -1e-12 {
                return invalid(format!("potential negative or decreasing at s = {s}"));
            }
        }
        Ok(())
    }

    /// Exponent conjugate to the potential's `p`, when it has one.
    fn conjugate_index(&self) -> Option<f64> {
        match self.spec {
            PotentialSpec::Power { p } | PotentialSpec::Powerlog { p } if p > 1.0 => {
                Some(p / (p - 1.0))
            }
            _ => None,
        }
    }
}

/// Growth-condition suprema over `d ∈ (1, d_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub d_min: f64,
    pub d_max: f64,
    pub nodes: usize,
    pub q: f64,
    /// `sup U″/U′`.
    pub beta_hat: f64,
    /// `sup U/U′^q`.
    pub gamma_hat: f64,
    /// `sup (|∇U|^q + U)/U′^q` with `|∇d| = 1`, bounded by `1 + gamma_hat`.
    pub u2_ratio_sup: f64,
    pub beta_finite: bool,
    pub gamma_finite: bool,
    /// False when `q` is below the range in which the potential is known to work.
    pub q_in_asserted_range: bool,
    pub pass: bool,
}

/// Number of logarithmic radial nodes used by [`check_growth_conditions`].
pub const GROWTH_NODES: usize = 2048;

/// Evaluates `sup U″/U′` and `sup U/U′^q` on a logarithmic grid of `(1, d_max]`.
pub fn check_growth_conditions(
    potential: &Potential,
    q: f64,
    d_max: f64,
) -> Result<ConditionReport> {
    if !(q > 1.0 && q.is_finite()) {
        return invalid(format!("q must exceed 1, got {q}"));
    }
    if !(d_max > 1.0 && d_max.is_finite()) {
        return invalid(format!("d_max must exceed 1, got {d_max}"));
    }
    let mut beta = f64::NEG_INFINITY;
    let mut gamma = f64::NEG_INFINITY;
    let mut u2 = f64::NEG_INFINITY;
    let log_max = d_max.ln();
    for k in 1..=GROWTH_NODES {
        let d = (log_max * k as f64 / GROWTH_NODES as f64).exp();
        let [u, du, ddu] = potential.eval(d);
        if !(u.is_finite() && du.is_finite() && ddu.is_finite()) {
            return invalid(format!("potential undefined at d = {d}"));
        }
        let duq = du.powf(q);
        beta = beta.max(potential.curvature_ratio(d));
        gamma = gamma.max(u / duq);
        u2 = u2.max((duq + u) / duq);
    }
    let in_range = potential
        .conjugate_index()
        .is_none_or(|b| match potential.spec {
            PotentialSpec::Powerlog { .. } => q >= b - 1e-12,
            _ => true,
        });
    let (bf, gf) = (beta.is_finite(), gamma.is_finite());
    Ok(ConditionReport {
        d_min: 1.0,
        d_max,
        nodes: GROWTH_NODES,
        q,
        beta_hat: beta,
        gamma_hat: gamma,
        u2_ratio_sup: u2,
        beta_finite: bf,
        gamma_finite: gf,
        q_in_asserted_range: in_range,
        pass: bf && gf,
    })
}
