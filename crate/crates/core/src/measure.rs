//! Gibbs measures `e^{−U(d)}/Z` on grids.
//!
//! Node weights are `e^{−U(d(0, x))}` times the dual-cell volume of the node,
//! which is always positive. Mass outside the box is bounded by the mass
//! outside the largest ball `B(0, R)` inside the box,
//!
//! ```text
//! ∫_{d > R} e^{−U(d)} dλ = ∫_R^∞ e^{−U(s)} V Q s^{Q−1} ds,
//! ```
//!
//! with `V` the volume of the unit ball and `Q` the homogeneous dimension.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{invalid, Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::group::CarnotGroup;
use crate::metric::{unit_ball_volume, DistanceField};
use crate::potential::Potential;
use crate::sum::{dot, fsum};

/// Largest height of the unit `ℍ¹` ball, reached by geodesics of phase `π`.
const HEISENBERG_BALL_HEIGHT: f64 = 1.0 / (2.0 * std::f64::consts::PI);

fn default_threshold() -> f64 {
    1e-6
}

/// Construction options.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureOptions {
    /// Largest accepted bound on the relative mass outside the box.
    #[serde(default = "default_threshold")]
    pub truncation_threshold: f64,
    /// Treat the box as the whole space (no tail bound). Needed for
    /// potentials that do not confine, such as `U ≡ 0`.
    #[serde(default)]
    pub restrict_to_box: bool,
}

impl Default for MeasureOptions {
    fn default() -> Self {
        Self {
            truncation_threshold: default_threshold(),
            restrict_to_box: false,
        }
    }
}

/// A normalized grid measure with density `e^{−U(d)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialMeasure {
    pub group: CarnotGroup,
    pub potential: Potential,
    /// `d(0, x)` at every node.
    pub distance: GridFunction,
    /// Probability of every node; sums to one.
    pub weights: Vec<f64>,
    /// `Σ e^{−U(d)} · cell volume` before normalization.
    pub z: f64,
    /// Radius of the largest ball centred at the origin inside the box.
    pub inscribed_radius: f64,
    /// Bound on the mass outside the box relative to `z`; zero when the box
    /// is the whole space.
    pub truncation_bound: f64,
}

/// Radius of the largest ball `B(0, R)` contained in the grid box.
pub fn inscribed_radius(group: &CarnotGroup, grid: &Grid) -> Result<f64> {
    if grid.dim() != group.dim() {
        return Err(Error::DimensionMismatch {
            expected: group.dim(),
            got: grid.dim(),
        });
    }
    let reach = |a: usize| (-grid.lo()[a]).min(grid.hi()[a]);
    if (0..grid.dim()).any(|a| reach(a) <= 0.0) {
        return invalid("the box must contain the origin in its interior");
    }
    let n1 = group.horizontal_dim();
    let mut r = (0..n1).map(reach).fold(f64::INFINITY, f64::min);
    if let CarnotGroup::Heisenberg = group {
        r = r.min((reach(2) / HEISENBERG_BALL_HEIGHT).sqrt());
    }
    Ok(r)
}

/// `∫_R^∞ e^{−U(s)} V Q s^{Q−1} ds` by composite Simpson panels, stopped
/// once the integrand is negligible. `None` if it does not settle.
fn tail_mass(potential: &Potential, group: &CarnotGroup, radius: f64) -> Result<Option<f64>> {
    let q = group.homogeneous_dim() as f64;
    let v = unit_ball_volume(group);
    let u0 = potential.value(radius);
    // Work relative to e^{−U(R)} to stay in range.
    let g = |s: f64| -> Result<f64> {
        let u = potential.value(s);
        if !u.is_finite() {
            return invalid(format!(
                "potential undefined at s = {s}; a bounded table needs restrict_to_box"
            ));
        }
        Ok((u0 - u).exp() * v * q * s.powf(q - 1.0))
    };
    let width = 0.01 * radius.max(1.0);
    let mut total = Vec::new();
    let mut a = radius;
    let mut ga = g(a)?;
    for _ in 0..1_000_000 {
        let (m, b) = (a + 0.5 * width, a + width);
        let (gm, gb) = (g(m)?, g(b)?);
        total.push(width / 6.0 * (ga + 4.0 * gm + gb));
        let sum = fsum(total.iter().copied());
        if gb < ga && gb * radius.max(1.0) < 1e-18 * sum {
            return Ok(Some(sum * (-u0).exp()));
        }
        a = b;
        ga = gb;
    }
    Ok(None)
}

/// Builds `μ_U` on the grid of `distance`.
pub fn build_measure(
    group: &CarnotGroup,
    distance: &DistanceField,
    potential: &Potential,
    options: &MeasureOptions,
) -> Result<RadialMeasure> {
    let grid = distance.grid();
    let inscribed = inscribed_radius(group, grid)?;
    let d = distance.values();
    let d_max = d.iter().copied().fold(0.0, f64::max);
    potential.validate(d_max)?;
    let dens: Vec<f64> = d
        .par_iter()
        .enumerate()
        .map(|(i, &s)| (-potential.value(s)).exp() * grid.cell_volume(i))
        .collect();
    let z = fsum(dens.iter().copied());
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::NonConvergence {
            what: "partition function",
            residual: z,
        });
    }
    let truncation_bound = if options.restrict_to_box {
        0.0
    } else {
        match tail_mass(potential, group, inscribed)? {
            Some(t) => t / z,
            None => f64::INFINITY,
        }
    };
    if truncation_bound > options.truncation_threshold {
        let hint = match group {
            CarnotGroup::Heisenberg => format!(
                "enlarge the box beyond the inscribed radius {inscribed:.3} (horizontal half-width R \
                 needs vertical half-width at least R²/(2π))"
            ),
            CarnotGroup::Abelian { .. } => {
                format!("enlarge the box beyond the inscribed radius {inscribed:.3}")
            }
        };
        return Err(Error::Truncation {
            bound: truncation_bound,
            threshold: options.truncation_threshold,
            hint,
        });
    }
    let weights = dens.iter().map(|w| w / z).collect();
    Ok(RadialMeasure {
        group: group.clone(),
        potential: potential.clone(),
        distance: distance.field.clone(),
        weights,
        z,
        inscribed_radius: inscribed,
        truncation_bound,
    })
}

impl RadialMeasure {
    pub fn grid(&self) -> &Grid {
        self.distance.grid()
    }

    /// `∫ f dμ` for nodal values `f`.
    pub fn expectation(&self, f: &[f64]) -> Result<f64> {
        if f.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                got: f.len(),
            });
        }
        if let Some(i) = f.iter().position(|v| !v.is_finite()) {
            return invalid(format!("non-finite integrand at node {i}"));
        }
        Ok(dot(&self.weights, f))
    }

    pub fn mean(&self, f: &GridFunction) -> Result<f64> {
        self.expectation(f.values())
    }

    /// Export body `{box, shape, weights, Z}`.
    pub fn to_json(&self) -> serde_json::Value {
        let grid = self.grid();
        let bounds: Vec<[f64; 2]> = grid
            .lo()
            .iter()
            .zip(grid.hi())
            .map(|(a, b)| [*a, *b])
            .collect();
        json!({
            "box": bounds,
            "shape": grid.shape(),
            "weights": self.weights,
            "Z": self.z,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::DistanceField;

    fn line(half: f64, n: usize) -> DistanceField {
        let g = CarnotGroup::abelian(1).unwrap();
        DistanceField::shooting(&g, &Grid::cube(&[-half], &[half], n).unwrap()).unwrap()
    }

    #[test]
    fn gaussian_normalization() {
        let g = CarnotGroup::abelian(1).unwrap();
        let m = build_measure(
            &g,
            &line(8.0, 1601),
            &Potential::gaussian(),
            &MeasureOptions::default(),
        )
        .unwrap();
        let sqrt_2pi = (2.0 * std::f64::consts::PI).sqrt();
        assert!((m.z - sqrt_2pi).abs() < 1e-4 * sqrt_2pi);
        assert!((fsum(m.weights.iter().copied()) - 1.0).abs() < 1e-12);
        assert!(m.truncation_bound < 1e-12);
    }

    #[test]
    fn refuses_small_box_with_hint() {
        let g = CarnotGroup::abelian(1).unwrap();
        let err = build_measure(
            &g,
            &line(3.0, 301),
            &Potential::gaussian(),
            &MeasureOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Truncation { .. }));
    }

    #[test]
    fn zero_potential_is_uniform_on_box() {
        let g = CarnotGroup::abelian(1).unwrap();
        let opts = MeasureOptions {
            restrict_to_box: true,
            ..Default::default()
        };
        let m = build_measure(&g, &line(1.0, 21), &Potential::zero(2.0).unwrap(), &opts).unwrap();
        assert!((m.z - 2.0).abs() < 1e-12);
        assert!(build_measure(
            &g,
            &line(1.0, 21),
            &Potential::zero(2.0).unwrap(),
            &MeasureOptions::default()
        )
        .is_err());
    }

    #[test]
    fn tail_of_gaussian_matches_erfc() {
        // ∫_{|x| > R} e^{−x²/2} dx = √(2π) erfc(R/√2); at R = 3 that is 0.0067674.
        let g = CarnotGroup::abelian(1).unwrap();
        let t = tail_mass(&Potential::gaussian(), &g, 3.0).unwrap().unwrap();
        assert!((t - 0.006_767_4).abs() < 1e-6, "{t}");
    }

    #[test]
    fn inscribed_radius_uses_ball_height() {
        let g = CarnotGroup::Heisenberg;
        let grid = Grid::new(vec![-4.0, -4.0, -1.0], vec![4.0, 4.0, 1.0], vec![5, 5, 5]).unwrap();
        let r = inscribed_radius(&g, &grid).unwrap();
        assert!((r - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12);
    }
}
