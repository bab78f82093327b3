//! Rectangular grids and scalar fields sampled on them.
//!
//! Nodes include both faces of every axis, so an axis with `n` samples on
//! `[lo, hi]` has spacing `(hi − lo)/(n − 1)`. Values are stored row-major with
//! the last axis varying fastest.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Largest grid dimension supported by the interpolation kernels.
pub const MAX_DIM: usize = 3;

/// Axis-aligned sampling geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct Grid {
    lo: Vec<f64>,
    hi: Vec<f64>,
    shape: Vec<usize>,
    spacing: Vec<f64>,
    strides: Vec<usize>,
}

/// Serialized form `{box: [[lo, hi], …], shape: […]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(rename = "box")]
    pub bounds: Vec<[f64; 2]>,
    pub shape: Vec<usize>,
}

impl TryFrom<GridSpec> for Grid {
    type Error = Error;

    fn try_from(spec: GridSpec) -> Result<Self> {
        let (lo, hi) = spec.bounds.iter().map(|b| (b[0], b[1])).unzip();
        Grid::new(lo, hi, spec.shape)
    }
}

impl From<Grid> for GridSpec {
    fn from(g: Grid) -> Self {
        GridSpec {
            bounds: g.lo.iter().zip(&g.hi).map(|(a, b)| [*a, *b]).collect(),
            shape: g.shape,
        }
    }
}

impl Grid {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, shape: Vec<usize>) -> Result<Self> {
        let dim = shape.len();
        if dim == 0 || dim > MAX_DIM {
            return invalid(format!(
                "grid dimension must be in 1..={MAX_DIM}, got {dim}"
            ));
        }
        if lo.len() != dim || hi.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: lo.len().min(hi.len()),
            });
        }
        for a in 0..dim {
            if !(lo[a].is_finite() && hi[a].is_finite() && lo[a] < hi[a]) {
                return invalid(format!(
                    "axis {a}: need finite lo < hi, got [{}, {}]",
                    lo[a], hi[a]
                ));
            }
            if shape[a] < 2 {
                return invalid(format!("axis {a}: need at least 2 nodes"));
            }
        }
        let spacing = (0..dim)
            .map(|a| (hi[a] - lo[a]) / (shape[a] - 1) as f64)
            .collect();
        let mut strides = vec![1; dim];
        for a in (0..dim - 1).rev() {
            strides[a] = strides[a + 1] * shape[a + 1];
        }
        Ok(Self {
            lo,
            hi,
            shape,
            spacing,
            strides,
        })
    }

    /// A grid with the same number of nodes `n` on every axis of the box.
    pub fn cube(lo: &[f64], hi: &[f64], n: usize) -> Result<Self> {
        Self::new(lo.to_vec(), hi.to_vec(), vec![n; lo.len()])
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    /// Same box with every axis refined so the spacing halves.
    pub fn refined(&self) -> Self {
        let shape = self.shape.iter().map(|n| 2 * n - 1).collect();
        Self::new(self.lo.clone(), self.hi.clone(), shape).expect("refinement of a valid grid")
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        if i + 1 == self.shape[axis] {
            self.hi[axis]
        } else {
            self.lo[axis] + i as f64 * self.spacing[axis]
        }
    }

    pub fn multi_index(&self, flat: usize, out: &mut [usize]) {
        let mut rem = flat;
        for a in 0..self.dim() {
            out[a] = rem / self.strides[a];
            rem %= self.strides[a];
        }
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    /// Coordinates of node `flat`.
    pub fn node(&self, flat: usize, out: &mut [f64]) {
        let mut rem = flat;
        for a in 0..self.dim() {
            let i = rem / self.strides[a];
            rem %= self.strides[a];
            out[a] = self.coord(a, i);
        }
    }

    pub fn node_vec(&self, flat: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.node(flat, &mut out);
        out
    }

    /// Iterator over all node coordinates in storage order.
    pub fn nodes(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(|i| self.node_vec(i))
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    /// True when the node lies on a face of the box.
    pub fn on_boundary(&self, flat: usize) -> bool {
        let mut rem = flat;
        for a in 0..self.dim() {
            let i = rem / self.strides[a];
            rem %= self.strides[a];
            if i == 0 || i + 1 == self.shape[a] {
                return true;
            }
        }
        false
    }

    /// Number of index steps from the node to the nearest face.
    pub fn face_depth(&self, flat: usize) -> usize {
        let mut rem = flat;
        let mut depth = usize::MAX;
        for a in 0..self.dim() {
            let i = rem / self.strides[a];
            rem %= self.strides[a];
            depth = depth.min(i).min(self.shape[a] - 1 - i);
        }
        depth
    }

    /// Index of the node at `x` when `x` is (within rounding) a grid node.
    pub fn node_at(&self, x: &[f64]) -> Option<usize> {
        let mut flat = 0;
        for a in 0..self.dim() {
            let s = (x[a] - self.lo[a]) / self.spacing[a];
            let i = s.round();
            if (s - i).abs() > 1e-9 || i < 0.0 || i as usize >= self.shape[a] {
                return None;
            }
            flat += i as usize * self.strides[a];
        }
        Some(flat)
    }

    /// Dual-cell volume of a node: the product of per-axis widths, halved on faces.
    /// These weights are positive and sum to the box volume.
    pub fn cell_volume(&self, flat: usize) -> f64 {
        let mut rem = flat;
        let mut vol = 1.0;
        for a in 0..self.dim() {
            let i = rem / self.strides[a];
            rem %= self.strides[a];
            let w = if i == 0 || i + 1 == self.shape[a] {
                0.5
            } else {
                1.0
            };
            vol *= w * self.spacing[a];
        }
        vol
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    /// Index range `[first, last]` of nodes on `axis` inside `[a, b]`, or `None`.
    pub fn index_range(&self, axis: usize, a: f64, b: f64) -> Option<(usize, usize)> {
        let h = self.spacing[axis];
        let n = self.shape[axis];
        let first = ((a - self.lo[axis]) / h - 1e-12).ceil().max(0.0);
        let last = ((b - self.lo[axis]) / h + 1e-12)
            .floor()
            .min((n - 1) as f64);
        if first > last {
            None
        } else {
            Some((first as usize, last as usize))
        }
    }

    /// Multilinear interpolation stencil at `x`: writes corner indices and
    /// weights and returns how many corners were used. `None` outside the box.
    pub fn stencil(
        &self,
        x: &[f64],
        idx: &mut [usize; 1 << MAX_DIM],
        w: &mut [f64; 1 << MAX_DIM],
    ) -> Option<usize> {
        let dim = self.dim();
        let mut base = 0;
        let mut frac = [0.0; MAX_DIM];
        for a in 0..dim {
            let s = (x[a] - self.lo[a]) / self.spacing[a];
            let n = self.shape[a];
            if !(s >= -1e-12 && s <= (n - 1) as f64 + 1e-12) {
                return None;
            }
            let mut i = s.floor();
            if i >= (n - 1) as f64 {
                i = (n - 2) as f64;
            }
            let i = i.max(0.0) as usize;
            frac[a] = (s - i as f64).clamp(0.0, 1.0);
            base += i * self.strides[a];
        }
        let corners = 1usize << dim;
        for c in 0..corners {
            let mut off = 0;
            let mut weight = 1.0;
            for a in 0..dim {
                if c >> a & 1 == 1 {
                    off += self.strides[a];
                    weight *= frac[a];
                } else {
                    weight *= 1.0 - frac[a];
                }
            }
            idx[c] = base + off;
            w[c] = weight;
        }
        Some(corners)
    }
}

/// A scalar field sampled on a [`Grid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridFunctionRepr", into = "GridFunctionRepr")]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridFunctionRepr {
    #[serde(rename = "box")]
    bounds: Vec<[f64; 2]>,
    shape: Vec<usize>,
    values: Vec<f64>,
}

impl TryFrom<GridFunctionRepr> for GridFunction {
    type Error = Error;

    fn try_from(r: GridFunctionRepr) -> Result<Self> {
        let grid = Grid::try_from(GridSpec {
            bounds: r.bounds,
            shape: r.shape,
        })?;
        GridFunction::new(grid, r.values)
    }
}

impl From<GridFunction> for GridFunctionRepr {
    fn from(f: GridFunction) -> Self {
        let spec = GridSpec::from(f.grid);
        GridFunctionRepr {
            bounds: spec.bounds,
            shape: spec.shape,
            values: f.values,
        }
    }
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return invalid(format!("non-finite value {} at node {i}", values[i]));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: &Grid, mut f: impl FnMut(&[f64]) -> f64) -> Result<Self> {
        let mut x = vec![0.0; grid.dim()];
        let values = (0..grid.len())
            .map(|i| {
                grid.node(i, &mut x);
                f(&x)
            })
            .collect();
        Self::new(grid.clone(), values)
    }

    pub fn constant(grid: &Grid, c: f64) -> Result<Self> {
        Self::new(grid.clone(), vec![c; grid.len()])
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Applies `f` nodewise.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.grid.clone(),
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn oscillation(&self) -> f64 {
        self.max() - self.min()
    }

    /// Multilinear interpolation; `None` outside the box.
    pub fn interpolate(&self, x: &[f64]) -> Option<f64> {
        let mut idx = [0usize; 1 << MAX_DIM];
        let mut w = [0.0; 1 << MAX_DIM];
        let n = self.grid.stencil(x, &mut idx, &mut w)?;
        Some((0..n).map(|c| w[c] * self.values[idx[c]]).sum())
    }

    pub fn sup_distance(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_round_trips() {
        let g = Grid::new(vec![-1.0, 0.0, 2.0], vec![1.0, 3.0, 4.0], vec![3, 4, 5]).unwrap();
        let mut idx = [0; 3];
        for flat in 0..g.len() {
            g.multi_index(flat, &mut idx);
            assert_eq!(g.flat_index(&idx), flat);
            let x = g.node_vec(flat);
            assert_eq!(g.node_at(&x), Some(flat));
        }
        assert_eq!(g.coord(2, 4), 4.0);
    }

    #[test]
    fn cell_volumes_sum_to_box_volume() {
        let g = Grid::new(vec![-2.0, -1.0], vec![2.0, 3.0], vec![9, 17]).unwrap();
        let total: f64 = (0..g.len()).map(|i| g.cell_volume(i)).sum();
        assert!((total - g.volume()).abs() < 1e-12);
    }

    #[test]
    fn interpolation_is_exact_for_multilinear_fields() {
        let g = Grid::cube(&[-1.0, -1.0, -1.0], &[1.0, 1.0, 1.0], 5).unwrap();
        let f = |x: &[f64]| 1.0 + 2.0 * x[0] - x[1] + 0.5 * x[0] * x[2] + x[0] * x[1] * x[2];
        let gf = GridFunction::from_fn(&g, f).unwrap();
        for p in [[0.13, -0.77, 0.5], [1.0, 1.0, 1.0], [-1.0, 0.0, 0.99]] {
            assert!((gf.interpolate(&p).unwrap() - f(&p)).abs() < 1e-12);
        }
        assert!(gf.interpolate(&[1.5, 0.0, 0.0]).is_none());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(Grid::new(vec![0.0], vec![0.0], vec![3]).is_err());
        assert!(Grid::new(vec![0.0], vec![1.0], vec![1]).is_err());
        let g = Grid::cube(&[0.0], &[1.0], 3).unwrap();
        assert!(GridFunction::new(g.clone(), vec![0.0, f64::NAN, 1.0]).is_err());
        assert!(GridFunction::new(g, vec![0.0; 2]).is_err());
    }

    #[test]
    fn json_shape_matches_schema() {
        let g = Grid::cube(&[-1.0, -1.0], &[1.0, 1.0], 2).unwrap();
        let f = GridFunction::constant(&g, 0.5).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(
            s,
            r#"{"box":[[-1.0,1.0],[-1.0,1.0]],"shape":[2,2],"values":[0.5,0.5,0.5,0.5]}"#
        );
        let back: GridFunction = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
        assert!(serde_json::from_str::<GridFunction>(
            r#"{"box":[[0,1]],"shape":[2],"values":[1]}"#
        )
        .is_err());
    }

    #[test]
    fn index_range_clips_to_box() {
        let g = Grid::cube(&[0.0], &[1.0], 11).unwrap();
        assert_eq!(g.index_range(0, 0.25, 0.55), Some((3, 5)));
        assert_eq!(g.index_range(0, -3.0, 0.0), Some((0, 0)));
        assert_eq!(g.index_range(0, 0.31, 0.39), None);
        assert_eq!(g.index_range(0, 0.8, 9.0), Some((8, 10)));
    }
}
