//! Weighted point clouds and random-walk Metropolis sampling of `e^{−U(d)}`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::Grid;
use crate::metric::Metric;
use crate::potential::Potential;
use crate::sum::fsum;

/// Where a cloud came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub chains: usize,
    /// Steps per chain, burn-in included.
    pub chain_length: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub acceptance_rate: f64,
    pub proposal_scale: Vec<f64>,
    /// Smallest per-coordinate effective sample size over the pooled chains.
    pub ess: f64,
    pub warnings: Vec<String>,
}

/// Atoms `x_i` with probabilities `w_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleCloud {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl SampleCloud {
    /// Normalizes non-negative `weights` to sum to one.
    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != weights.len() {
            return invalid("a cloud needs one weight per point and at least one point");
        }
        let dim = points[0].len();
        if points
            .iter()
            .any(|p| p.len() != dim || p.iter().any(|v| !v.is_finite()))
        {
            return invalid("cloud points must share a dimension and be finite");
        }
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return invalid("cloud weights must be finite and non-negative");
        }
        let total = fsum(weights.iter().copied());
        if !(total > 0.0) {
            return invalid("cloud weights sum to zero");
        }
        Ok(Self {
            points,
            weights: weights.iter().map(|w| w / total).collect(),
            provenance: None,
        })
    }

    pub fn uniform(points: Vec<Vec<f64>>) -> Result<Self> {
        let n = points.len();
        Self::new(points, vec![1.0; n])
    }

    /// Grid nodes as atoms with the given node masses; zero masses are dropped.
    pub fn from_grid(grid: &Grid, masses: &[f64]) -> Result<Self> {
        if masses.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: masses.len(),
            });
        }
        let (points, weights) = (0..grid.len())
            .filter(|&i| masses[i] > 0.0)
            .map(|i| (grid.node_vec(i), masses[i]))
            .unzip();
        Self::new(points, weights)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    /// `Σ w_i f(x_i)`.
    pub fn expectation(&self, f: impl Fn(&[f64]) -> f64) -> Result<f64> {
        let vals: Vec<f64> = self.points.iter().map(|p| f(p)).collect();
        if let Some(i) = vals.iter().position(|v| !v.is_finite()) {
            return invalid(format!("non-finite integrand at atom {i}"));
        }
        Ok(fsum(self.weights.iter().zip(&vals).map(|(w, v)| w * v)))
    }
}

fn default_step() -> f64 {
    1.0
}

fn default_thin() -> usize {
    10
}

fn default_chains() -> usize {
    4
}

/// Sampler settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McmcOptions {
    /// Proposal standard deviation `s` on the first stratum; stratum `i` uses
    /// `s^i / 4^{i−1}`, following the scaling of the dilations.
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_thin")]
    pub thin: usize,
    #[serde(default = "default_chains")]
    pub chains: usize,
}

impl Default for McmcOptions {
    fn default() -> Self {
        Self {
            step: default_step(),
            thin: default_thin(),
            chains: default_chains(),
        }
    }
}

/// Fraction of every chain discarded as burn-in.
pub const BURN_FRACTION: f64 = 0.2;

/// Effective sample size from Geyer's initial positive sequence.
pub fn effective_sample_size(series: &[f64]) -> f64 {
    let n = series.len();
    if n < 4 {
        return n as f64;
    }
    let mean = fsum(series.iter().copied()) / n as f64;
    let c: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let var = fsum(c.iter().map(|x| x * x)) / n as f64;
    if !(var > 0.0) {
        return n as f64;
    }
    let rho = |k: usize| fsum((0..n - k).map(|i| c[i] * c[i + k])) / (n as f64 * var);
    let mut tau = -1.0;
    let mut k = 0;
    while k + 1 < n {
        let pair = rho(k) + rho(k + 1);
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        k += 2;
    }
    (n as f64 / tau.max(1.0 / n as f64)).min(n as f64)
}

/// Draws `n` points from `e^{−U(d(0, x))}` with random-walk Metropolis.
pub fn mcmc_sample(
    potential: &Potential,
    metric: &dyn Metric,
    n: usize,
    seed: u64,
    options: &McmcOptions,
) -> Result<SampleCloud> {
    if n < 1000 {
        return invalid(format!("MCMC needs at least 1000 samples, got {n}"));
    }
    if !(options.step > 0.0) || options.thin == 0 || options.chains == 0 {
        return invalid("MCMC step, thinning and chain count must be positive");
    }
    let group = metric.group().clone();
    let dim = group.dim();
    let scale: Vec<f64> = group
        .weights()
        .iter()
        .map(|&w| options.step.powi(w as i32) / 4f64.powi(w as i32 - 1))
        .collect();
    let per_chain = n.div_ceil(options.chains);
    let kept_steps = per_chain * options.thin;
    let burn_in = (kept_steps as f64 * BURN_FRACTION / (1.0 - BURN_FRACTION)).ceil() as usize;
    let chain_length = burn_in + kept_steps;
    let origin = vec![0.0; dim];
    let log_target = |x: &[f64]| -> Result<f64> {
        let d = metric.distance(&origin, x)?;
        Ok(if d.is_finite() {
            -potential.value(d)
        } else {
            f64::NEG_INFINITY
        })
    };

    let chains = (0..options.chains)
        .into_par_iter()
        .map(|c| -> Result<(Vec<Vec<f64>>, usize)> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64 + 1);
            let mut x = origin.clone();
            let mut lp = log_target(&x)?;
            let mut accepted = 0;
            let mut kept = Vec::with_capacity(per_chain);
            let mut y = vec![0.0; dim];
            for step in 0..chain_length {
                for a in 0..dim {
                    let g: f64 = StandardNormal.sample(&mut rng);
                    y[a] = x[a] + scale[a] * g;
                }
                let lq = log_target(&y)?;
                let u: f64 = rand::Rng::random(&mut rng);
                if lq - lp >= 0.0 || u.ln() < lq - lp {
                    x.copy_from_slice(&y);
                    lp = lq;
                    accepted += 1;
                }
                if step >= burn_in && (step - burn_in + 1) % options.thin == 0 {
                    kept.push(x.clone());
                }
            }
            Ok((kept, accepted))
        })
        .collect::<Result<Vec<_>>>()?;

    let total_accepted: usize = chains.iter().map(|(_, a)| a).sum();
    let acceptance_rate = total_accepted as f64 / (chain_length * options.chains) as f64;
    if total_accepted == 0 {
        return Err(Error::DegenerateChain(format!(
            "no proposal accepted in {} steps; reduce the step",
            chain_length * options.chains
        )));
    }
    let mut warnings = Vec::new();
    if !(0.1..=0.7).contains(&acceptance_rate) {
        warnings.push(format!(
            "acceptance rate {acceptance_rate:.3} outside [0.1, 0.7]; retune the step"
        ));
    }
    let mut points: Vec<Vec<f64>> = chains.into_iter().flat_map(|(k, _)| k).collect();
    points.truncate(n);
    let ess = (0..dim)
        .map(|a| {
            let s: Vec<f64> = points.iter().map(|p| p[a]).collect();
            effective_sample_size(&s)
        })
        .fold(f64::INFINITY, f64::min);
    let mut cloud = SampleCloud::uniform(points)?;
    cloud.provenance = Some(Provenance {
        seed,
        chains: options.chains,
        chain_length,
        burn_in,
        thin: options.thin,
        acceptance_rate,
        proposal_scale: scale,
        ess,
        warnings,
    });
    Ok(cloud)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::CarnotGroup;
    use crate::metric::GroupMetric;

    #[test]
    fn cloud_normalizes_and_validates() {
        let c = SampleCloud::new(vec![vec![0.0], vec![1.0]], vec![1.0, 3.0]).unwrap();
        assert_eq!(c.weights, vec![0.25, 0.75]);
        assert!(SampleCloud::new(vec![vec![0.0]], vec![-1.0]).is_err());
        assert!(SampleCloud::new(vec![], vec![]).is_err());
        assert!((c.expectation(|x| x[0]).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn ess_of_iid_and_correlated() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let iid: Vec<f64> = (0..4000).map(|_| StandardNormal.sample(&mut rng)).collect();
        assert!(effective_sample_size(&iid) > 3000.0);
        // AR(1) with coefficient 0.9 has ESS ≈ n (1 − 0.9)/(1 + 0.9).
        let mut x = 0.0;
        let ar: Vec<f64> = (0..20000)
            .map(|_| {
                let g: f64 = StandardNormal.sample(&mut rng);
                x = 0.9 * x + g;
                x
            })
            .collect();
        let ess = effective_sample_size(&ar);
        assert!((ess / 20000.0 - 0.1 / 1.9).abs() < 0.02, "{ess}");
    }

    #[test]
    fn rejects_short_chains_and_is_deterministic() {
        let m = GroupMetric::new(CarnotGroup::abelian(1).unwrap());
        let p = Potential::gaussian();
        assert!(mcmc_sample(&p, &m, 10, 0, &McmcOptions::default()).is_err());
        let a = mcmc_sample(&p, &m, 1000, 9, &McmcOptions::default()).unwrap();
        let b = mcmc_sample(&p, &m, 1000, 9, &McmcOptions::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 1000);
    }

    #[test]
    fn huge_step_is_flagged() {
        let m = GroupMetric::new(CarnotGroup::abelian(1).unwrap());
        let opts = McmcOptions {
            step: 50.0,
            ..Default::default()
        };
        let c = mcmc_sample(&Potential::gaussian(), &m, 1000, 2, &opts).unwrap();
        assert!(!c.provenance.unwrap().warnings.is_empty());
    }
}
