//! Seeded families of bounded test functions.
//!
//! Each class draws its members from its own random stream, so doubling the
//! count keeps the first half of every class unchanged.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::{Grid, GridFunction};
use crate::group::CarnotGroup;
use crate::metric::distance_origin_raw;

/// Generator classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyClass {
    /// `A·exp(−((d − c)/w)²)` in the distance to the origin.
    RadialBump,
    /// `min(exp(⟨a, x_h⟩), cap)` for a random horizontal covector `a`.
    HorizontalExp,
    /// A short sum of cosines with homogeneously scaled frequencies.
    RandomField,
    /// `min(exp(a x₁ / 2), cap)` with `a ∈ [0.1, 1]`.
    GaussianExp,
}

impl FamilyClass {
    fn stream(&self) -> u64 {
        match self {
            Self::RadialBump => 1,
            Self::HorizontalExp => 2,
            Self::RandomField => 3,
            Self::GaussianExp => 4,
        }
    }
}

fn default_amplitude() -> f64 {
    1.0
}

fn default_cap() -> f64 {
    20.0
}

fn default_scale() -> f64 {
    1.0
}

fn default_terms() -> usize {
    6
}

/// How to generate a family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub seed: u64,
    /// Members per class.
    pub count: usize,
    pub classes: Vec<FamilyClass>,
    /// Sup bound of bumps and random fields.
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    /// Clip level of the exponential classes.
    #[serde(default = "default_cap")]
    pub cap: f64,
    /// Length scale; frequencies on stratum `i` scale as `scale^{-i}`.
    #[serde(default = "default_scale")]
    pub scale: f64,
    /// Cosine terms per random field.
    #[serde(default = "default_terms")]
    pub terms: usize,
}

impl FamilySpec {
    pub fn new(seed: u64, count: usize, classes: Vec<FamilyClass>) -> Self {
        Self {
            seed,
            count,
            classes,
            amplitude: default_amplitude(),
            cap: default_cap(),
            scale: default_scale(),
            terms: default_terms(),
        }
    }

    /// Same spec with twice as many members per class.
    pub fn doubled(&self) -> Self {
        Self {
            count: 2 * self.count,
            ..self.clone()
        }
    }
}

/// One member of a family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "kebab-case")]
pub enum TestFunction {
    RadialBump {
        amplitude: f64,
        center: f64,
        width: f64,
    },
    HorizontalExp {
        covector: Vec<f64>,
        cap: f64,
    },
    RandomField {
        amplitudes: Vec<f64>,
        frequencies: Vec<Vec<f64>>,
        phases: Vec<f64>,
    },
    GaussianExp {
        a: f64,
        cap: f64,
    },
    /// `⟨a, x_h⟩` clipped to `[−cap, cap]`; not drawn by any class. Linear
    /// forms are the equality cases of the Gaussian traces.
    ClippedLinear {
        covector: Vec<f64>,
        cap: f64,
    },
    Constant {
        value: f64,
    },
}

impl TestFunction {
    pub fn class_name(&self) -> &'static str {
        match self {
            Self::RadialBump { .. } => "radial-bump",
            Self::HorizontalExp { .. } => "horizontal-exp",
            Self::RandomField { .. } => "random-field",
            Self::GaussianExp { .. } => "gaussian-exp",
            Self::ClippedLinear { .. } => "clipped-linear",
            Self::Constant { .. } => "constant",
        }
    }

    pub fn eval(&self, group: &CarnotGroup, x: &[f64]) -> Result<f64> {
        Ok(match self {
            Self::RadialBump {
                amplitude,
                center,
                width,
            } => {
                let d = distance_origin_raw(group, x)?;
                amplitude * (-((d - center) / width).powi(2)).exp()
            }
            Self::HorizontalExp { covector, cap } => {
                let s: f64 = covector.iter().zip(x).map(|(a, v)| a * v).sum();
                s.exp().min(*cap)
            }
            Self::RandomField {
                amplitudes,
                frequencies,
                phases,
            } => amplitudes
                .iter()
                .zip(frequencies)
                .zip(phases)
                .map(|((a, w), ph)| {
                    let arg: f64 = w.iter().zip(x).map(|(wi, xi)| wi * xi).sum();
                    a * (arg + ph).cos()
                })
                .sum(),
            Self::GaussianExp { a, cap } => (0.5 * a * x[0]).exp().min(*cap),
            Self::ClippedLinear { covector, cap } => {
                let s: f64 = covector.iter().zip(x).map(|(a, v)| a * v).sum();
                s.clamp(-cap, *cap)
            }
            Self::Constant { value } => *value,
        })
    }

    /// Nodal values on `grid`.
    pub fn on_grid(&self, group: &CarnotGroup, grid: &Grid) -> Result<GridFunction> {
        let values = (0..grid.len())
            .into_par_iter()
            .map(|i| self.eval(group, &grid.node_vec(i)))
            .collect::<Result<Vec<_>>>()?;
        GridFunction::new(grid.clone(), values)
    }
}

/// A generated family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunctionFamily {
    pub spec: FamilySpec,
    pub members: Vec<TestFunction>,
}

impl TestFunctionFamily {
    pub fn generate(spec: &FamilySpec, group: &CarnotGroup) -> Result<Self> {
        if spec.count == 0 || spec.classes.is_empty() {
            return invalid("family needs at least one class and one member per class");
        }
        if !(spec.amplitude > 0.0 && spec.cap > 1.0 && spec.scale > 0.0 && spec.terms > 0) {
            return invalid("family amplitude, scale and terms must be positive and cap above 1");
        }
        let mut classes = spec.classes.clone();
        classes.sort();
        classes.dedup();
        let mut members = Vec::with_capacity(classes.len() * spec.count);
        for class in classes {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(class.stream());
            for _ in 0..spec.count {
                members.push(draw(class, spec, group, &mut rng));
            }
        }
        Ok(Self {
            spec: spec.clone(),
            members,
        })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// All members sampled on `grid`.
    pub fn on_grid(&self, group: &CarnotGroup, grid: &Grid) -> Result<Vec<GridFunction>> {
        self.members
            .iter()
            .map(|m| m.on_grid(group, grid))
            .collect()
    }

    /// `max |f|` over members and nodes.
    pub fn bound_on(&self, values: &[GridFunction]) -> f64 {
        values
            .iter()
            .map(|f| f.max().abs().max(f.min().abs()))
            .fold(0.0, f64::max)
    }
}

fn draw(
    class: FamilyClass,
    spec: &FamilySpec,
    group: &CarnotGroup,
    rng: &mut ChaCha8Rng,
) -> TestFunction {
    let l = spec.scale;
    match class {
        FamilyClass::RadialBump => {
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            TestFunction::RadialBump {
                amplitude: sign * spec.amplitude * rng.random_range(0.5..=1.0),
                center: l * rng.random_range(0.0..=2.0),
                width: l * rng.random_range(0.5..=1.5),
            }
        }
        FamilyClass::HorizontalExp => {
            let n1 = group.horizontal_dim();
            let mut dir: Vec<f64> = (0..n1).map(|_| StandardNormal.sample(rng)).collect();
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
            let size = rng.random_range(0.1..=1.0) / l;
            for v in &mut dir {
                *v *= size / norm;
            }
            dir.resize(group.dim(), 0.0);
            TestFunction::HorizontalExp {
                covector: dir,
                cap: spec.cap,
            }
        }
        FamilyClass::RandomField => {
            let weights = group.weights();
            let raw: Vec<f64> = (0..spec.terms)
                .map(|_| StandardNormal.sample(rng))
                .collect();
            let total: f64 = raw.iter().map(|a| a.abs()).sum::<f64>().max(1e-300);
            let amplitudes = raw.iter().map(|a| spec.amplitude * a / total).collect();
            let frequencies = (0..spec.terms)
                .map(|_| {
                    weights
                        .iter()
                        .map(|&w| {
                            let g: f64 = StandardNormal.sample(rng);
                            g / l.powi(w as i32)
                        })
                        .collect()
                })
                .collect();
            let phases = (0..spec.terms)
                .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
                .collect();
            TestFunction::RandomField {
                amplitudes,
                frequencies,
                phases,
            }
        }
        FamilyClass::GaussianExp => TestFunction::GaussianExp {
            a: rng.random_range(0.1..=1.0),
            cap: spec.cap,
        },
    }
}
