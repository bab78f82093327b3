//! Carnot groups in exponential coordinates.
//!
//! A point carries its graded coordinates together with the dilation weight of
//! every coordinate (the index of the stratum it belongs to). Two concrete
//! groups are provided: the abelian group `ℝⁿ` (step 1) and the first
//! Heisenberg group `ℍ¹` (step 2, `N = 3`) with the law
//!
//! ```text
//! (x₁, y₁, z₁) ∘ (x₂, y₂, z₂) = (x₁ + x₂, y₁ + y₂, z₁ + z₂ + ½(x₁y₂ − y₁x₂))
//! ```
//!
//! and left-invariant horizontal frame `X₁ = ∂x − (y/2)∂z`, `X₂ = ∂y + (x/2)∂z`,
//! so that `[X₁, X₂] = ∂z`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A point of a Carnot group with per-coordinate dilation weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratifiedPoint {
    coords: Vec<f64>,
    weights: Vec<u32>,
}

impl StratifiedPoint {
    /// Builds a point, checking that the weights describe a valid grading.
    pub fn new(coords: Vec<f64>, weights: Vec<u32>) -> Result<Self> {
        if coords.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: weights.len(),
                got: coords.len(),
            });
        }
        if weights.first().is_some_and(|&w| w != 1) {
            return invalid("the first stratum must have weight 1");
        }
        for pair in weights.windows(2) {
            if pair[1] < pair[0] || pair[1] > pair[0] + 1 {
                return invalid("weights must be non-decreasing stratum indices");
            }
        }
        Ok(Self { coords, weights })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn weights(&self) -> &[u32] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// The groups this crate knows how to compute with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CarnotGroup {
    /// `ℝⁿ` with vector addition.
    Abelian { dim: usize },
    /// The first Heisenberg group with coordinates `(x, y, z)`.
    Heisenberg,
}

impl CarnotGroup {
    pub fn abelian(dim: usize) -> Result<Self> {
        if dim == 0 {
            return invalid("abelian group needs dimension ≥ 1");
        }
        Ok(Self::Abelian { dim })
    }

    /// Total topological dimension `N`.
    pub fn dim(&self) -> usize {
        match self {
            Self::Abelian { dim } => *dim,
            Self::Heisenberg => 3,
        }
    }

    /// Stratum dimensions `(N₁, …, N_r)`.
    pub fn strata(&self) -> Vec<usize> {
        match self {
            Self::Abelian { dim } => vec![*dim],
            Self::Heisenberg => vec![2, 1],
        }
    }

    pub fn step(&self) -> usize {
        self.strata().len()
    }

    /// Number of horizontal generators `N₁`.
    pub fn horizontal_dim(&self) -> usize {
        self.strata()[0]
    }

    /// Homogeneous dimension `Σ i·N_i`.
    pub fn homogeneous_dim(&self) -> usize {
        self.strata()
            .iter()
            .enumerate()
            .map(|(i, n)| (i + 1) * n)
            .sum()
    }

    /// Dilation weight of each coordinate.
    pub fn weights(&self) -> Vec<u32> {
        self.strata()
            .iter()
            .enumerate()
            .flat_map(|(i, &n)| std::iter::repeat_n(i as u32 + 1, n))
            .collect()
    }

    pub fn identity(&self) -> StratifiedPoint {
        StratifiedPoint {
            coords: vec![0.0; self.dim()],
            weights: self.weights(),
        }
    }

    pub fn point(&self, coords: Vec<f64>) -> Result<StratifiedPoint> {
        self.check_len(coords.len())?;
        StratifiedPoint::new(coords, self.weights())
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: len,
            });
        }
        Ok(())
    }

    fn check_point(&self, a: &StratifiedPoint) -> Result<()> {
        self.check_len(a.dim())?;
        if a.weights != self.weights() {
            return invalid("point weights do not match the group grading");
        }
        Ok(())
    }

    /// Group law `a ∘ b`.
    pub fn compose(&self, a: &StratifiedPoint, b: &StratifiedPoint) -> Result<StratifiedPoint> {
        self.check_point(a)?;
        self.check_point(b)?;
        let mut out = vec![0.0; self.dim()];
        self.compose_raw(&a.coords, &b.coords, &mut out);
        Ok(StratifiedPoint {
            coords: out,
            weights: a.weights.clone(),
        })
    }

    pub fn inverse(&self, a: &StratifiedPoint) -> Result<StratifiedPoint> {
        self.check_point(a)?;
        let mut out = vec![0.0; self.dim()];
        self.inverse_raw(&a.coords, &mut out);
        Ok(StratifiedPoint {
            coords: out,
            weights: a.weights.clone(),
        })
    }

    /// Dilation `δ_λ`, scaling coordinate `j` by `λ^{weight(j)}`.
    pub fn dilate(&self, lambda: f64, a: &StratifiedPoint) -> Result<StratifiedPoint> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return invalid(format!("dilation factor must be positive, got {lambda}"));
        }
        self.check_point(a)?;
        let coords = a
            .coords
            .iter()
            .zip(&a.weights)
            .map(|(x, &w)| x * lambda.powi(w as i32))
            .collect();
        Ok(StratifiedPoint {
            coords,
            weights: a.weights.clone(),
        })
    }

    /// `out = a ∘ b` on raw coordinate slices.
    pub fn compose_raw(&self, a: &[f64], b: &[f64], out: &mut [f64]) {
        match self {
            Self::Abelian { .. } => {
                for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
                    *o = x + y;
                }
            }
            Self::Heisenberg => {
                out[0] = a[0] + b[0];
                out[1] = a[1] + b[1];
                out[2] = a[2] + b[2] + 0.5 * (a[0] * b[1] - a[1] * b[0]);
            }
        }
    }

    /// `out = a⁻¹`. Both groups use exponential coordinates, so this is negation.
    pub fn inverse_raw(&self, a: &[f64], out: &mut [f64]) {
        for (o, x) in out.iter_mut().zip(a) {
            *o = -x;
        }
    }

    /// `out = a⁻¹ ∘ b`, the displacement used by every left-invariant quantity.
    pub fn relative_raw(&self, a: &[f64], b: &[f64], out: &mut [f64]) {
        match self {
            Self::Abelian { .. } => {
                for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
                    *o = y - x;
                }
            }
            Self::Heisenberg => {
                out[0] = b[0] - a[0];
                out[1] = b[1] - a[1];
                out[2] = b[2] - a[2] - 0.5 * (a[0] * b[1] - a[1] * b[0]);
            }
        }
    }

    /// Coefficients of the horizontal frame at `x`, row-major `N₁ × N`:
    /// `Z_i = Σ_a out[i·N + a] ∂_a`.
    pub fn frame_raw(&self, x: &[f64], out: &mut [f64]) {
        let n = self.dim();
        out.iter_mut().for_each(|c| *c = 0.0);
        match self {
            Self::Abelian { dim } => {
                for i in 0..*dim {
                    out[i * n + i] = 1.0;
                }
            }
            Self::Heisenberg => {
                out[0] = 1.0;
                out[2] = -0.5 * x[1];
                out[n + 1] = 1.0;
                out[n + 2] = 0.5 * x[0];
            }
        }
    }

    /// Horizontal frame `Z₁, …, Z_{N₁}` at `x`, one coefficient vector per field.
    pub fn frame(&self, x: &StratifiedPoint) -> Result<Vec<Vec<f64>>> {
        self.check_point(x)?;
        let n = self.dim();
        let mut flat = vec![0.0; self.horizontal_dim() * n];
        self.frame_raw(&x.coords, &mut flat);
        Ok(flat.chunks(n).map(|c| c.to_vec()).collect())
    }

    /// A lower bound for the distance from the origin to `v`, cheap enough to
    /// prune candidate lists.
    ///
    /// For `ℍ¹` closing a horizontal curve of length `L` from the origin to
    /// `(x, y, z)` with the chord of length `r` bounds the enclosed area `|z|`
    /// by `(L + r)² / 4π`, hence `d ≥ max(r, 2√(π|z|) − r)`.
    pub fn distance_lower_bound(&self, v: &[f64]) -> f64 {
        match self {
            Self::Abelian { .. } => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            Self::Heisenberg => {
                let r = v[0].hypot(v[1]);
                let iso = 2.0 * (std::f64::consts::PI * v[2].abs()).sqrt() - r;
                r.max(iso)
            }
        }
    }

    /// Half-width of the vertical window that can hold points within distance
    /// `radius` once the horizontal displacement `r` is fixed (see
    /// [`Self::distance_lower_bound`]). `None` for step-one groups.
    pub fn vertical_halfwidth(&self, radius: f64, r: f64) -> Option<f64> {
        match self {
            Self::Abelian { .. } => None,
            Self::Heisenberg => Some((radius + r).powi(2) / (4.0 * std::f64::consts::PI)),
        }
    }

    /// Vertical coordinate a point `b` with horizontal part `b_horizontal` must
    /// have for `a⁻¹ ∘ b` to be horizontal; the centre of the candidate window.
    pub fn vertical_center(&self, a: &[f64], b_horizontal: &[f64]) -> f64 {
        match self {
            Self::Abelian { .. } => 0.0,
            Self::Heisenberg => a[2] + 0.5 * (a[0] * b_horizontal[1] - a[1] * b_horizontal[0]),
        }
    }
}

impl fmt::Display for CarnotGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Abelian { dim } => write!(f, "abelian:{dim}"),
            Self::Heisenberg => write!(f, "heisenberg1"),
        }
    }
}

impl FromStr for CarnotGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "heisenberg1" {
            return Ok(Self::Heisenberg);
        }
        if let Some(n) = s.strip_prefix("abelian:") {
            let dim = n
                .parse::<usize>()
                .map_err(|_| Error::InvalidInput(format!("bad abelian dimension in {s:?}")))?;
            return Self::abelian(dim);
        }
        invalid(format!(
            "unknown group {s:?} (expected \"abelian:n\" or \"heisenberg1\")"
        ))
    }
}

impl Serialize for CarnotGroup {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for CarnotGroup {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn h(c: [f64; 3]) -> StratifiedPoint {
        CarnotGroup::Heisenberg.point(c.to_vec()).unwrap()
    }

    #[test]
    fn heisenberg_law_on_unit_vectors() {
        let g = CarnotGroup::Heisenberg;
        let c = g.compose(&h([1.0, 0.0, 0.0]), &h([0.0, 1.0, 0.0])).unwrap();
        assert_eq!(c.coords(), &[1.0, 1.0, 0.5]);
    }

    #[test]
    fn identity_and_inverse() {
        let g = CarnotGroup::Heisenberg;
        let a = h([0.3, -1.2, 2.5]);
        let e = g.identity();
        assert_eq!(g.compose(&e, &a).unwrap(), a);
        assert_eq!(g.compose(&a, &e).unwrap(), a);
        let inv = g.inverse(&a).unwrap();
        assert_eq!(g.compose(&a, &inv).unwrap().coords(), e.coords());
    }

    #[test]
    fn dilation_follows_weights() {
        let g = CarnotGroup::Heisenberg;
        assert_eq!(
            g.dilate(2.0, &h([1.0, 1.0, 1.0])).unwrap().coords(),
            &[2.0, 2.0, 4.0]
        );
        let a = h([0.7, 0.1, -0.4]);
        assert_eq!(g.dilate(1.0, &a).unwrap(), a);
        assert!(g.dilate(0.0, &a).is_err());
        assert!(g.dilate(-1.0, &a).is_err());
    }

    #[test]
    fn frame_at_origin_is_coordinate_basis() {
        for g in [CarnotGroup::Heisenberg, CarnotGroup::abelian(3).unwrap()] {
            let frame = g.frame(&g.identity()).unwrap();
            for (j, field) in frame.iter().enumerate() {
                for (a, c) in field.iter().enumerate() {
                    assert_eq!(*c, if a == j { 1.0 } else { 0.0 });
                }
            }
        }
    }

    #[test]
    fn parse_and_display_round_trip() {
        for s in ["heisenberg1", "abelian:1", "abelian:4"] {
            assert_eq!(s.parse::<CarnotGroup>().unwrap().to_string(), s);
        }
        assert!("abelian:0".parse::<CarnotGroup>().is_err());
        assert!("heisenberg2".parse::<CarnotGroup>().is_err());
    }

    #[test]
    fn mismatched_dimensions_are_rejected() {
        let g = CarnotGroup::Heisenberg;
        let a2 = CarnotGroup::abelian(2)
            .unwrap()
            .point(vec![1.0, 2.0])
            .unwrap();
        assert!(matches!(
            g.compose(&a2, &h([0.0; 3])),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(StratifiedPoint::new(vec![1.0, 2.0], vec![1, 3]).is_err());
    }

    #[test]
    fn heisenberg_frame_is_left_invariant() {
        // d/ds (g ∘ s e_j)|_{s=0} must equal Z_j(g).
        let g = CarnotGroup::Heisenberg;
        let p = [0.8, -1.3, 0.25];
        let mut frame = [0.0; 6];
        g.frame_raw(&p, &mut frame);
        for j in 0..2 {
            let mut e = [0.0; 3];
            e[j] = 1.0;
            let mut out = [0.0; 3];
            g.compose_raw(&p, &e, &mut out);
            for a in 0..3 {
                // The law is affine in its second argument, so the quotient is exact.
                assert!((out[a] - p[a] - frame[j * 3 + a]).abs() < 1e-15);
            }
        }
    }

    proptest! {
        #[test]
        fn dilation_is_a_homomorphism(
            a in prop::array::uniform3(-5.0..5.0f64),
            b in prop::array::uniform3(-5.0..5.0f64),
            lambda in 0.1..4.0f64,
        ) {
            let g = CarnotGroup::Heisenberg;
            let (a, b) = (h(a), h(b));
            let lhs = g.dilate(lambda, &g.compose(&a, &b).unwrap()).unwrap();
            let rhs = g.compose(&g.dilate(lambda, &a).unwrap(), &g.dilate(lambda, &b).unwrap()).unwrap();
            for (x, y) in lhs.coords().iter().zip(rhs.coords()) {
                prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
            }
        }

        #[test]
        fn dilations_compose_multiplicatively(
            a in prop::array::uniform3(-5.0..5.0f64),
            l in 0.1..4.0f64,
            m in 0.1..4.0f64,
        ) {
            let g = CarnotGroup::Heisenberg;
            let a = h(a);
            let twice = g.dilate(l, &g.dilate(m, &a).unwrap()).unwrap();
            let once = g.dilate(l * m, &a).unwrap();
            for (x, y) in twice.coords().iter().zip(once.coords()) {
                prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
            }
        }

        #[test]
        fn relative_matches_inverse_then_compose(
            a in prop::array::uniform3(-5.0..5.0f64),
            b in prop::array::uniform3(-5.0..5.0f64),
        ) {
            let g = CarnotGroup::Heisenberg;
            let direct = g.compose(&g.inverse(&h(a)).unwrap(), &h(b)).unwrap();
            let mut raw = [0.0; 3];
            g.relative_raw(&a, &b, &mut raw);
            for (x, y) in direct.coords().iter().zip(raw.iter()) {
                prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
            }
        }
    }
}
