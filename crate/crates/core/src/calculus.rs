//! Finite-difference horizontal calculus on grids.
//!
//! Coordinate derivatives are centred in the interior and first-order one-sided
//! on faces; the frame coefficients are then applied pointwise.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::group::CarnotGroup;

fn check_grid(grid: &Grid, group: &CarnotGroup) -> Result<()> {
    if grid.dim() != group.dim() {
        return Err(Error::DimensionMismatch {
            expected: group.dim(),
            got: grid.dim(),
        });
    }
    if let Some(a) = grid.shape().iter().position(|&n| n < 3) {
        return invalid(format!("axis {a} has fewer than 3 nodes"));
    }
    Ok(())
}

/// Coordinate derivative `∂_axis` of the nodal values.
pub fn partial(grid: &Grid, values: &[f64], axis: usize) -> Vec<f64> {
    let stride = grid.strides()[axis];
    let n = grid.shape()[axis];
    let h = grid.spacing()[axis];
    (0..grid.len())
        .into_par_iter()
        .map(|flat| {
            let i = (flat / stride) % n;
            if i == 0 {
                (values[flat + stride] - values[flat]) / h
            } else if i + 1 == n {
                (values[flat] - values[flat - stride]) / h
            } else {
                (values[flat + stride] - values[flat - stride]) / (2.0 * h)
            }
        })
        .collect()
}

fn frame_apply(grid: &Grid, group: &CarnotGroup, partials: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = group.dim();
    let n1 = group.horizontal_dim();
    let mut comps = vec![vec![0.0; grid.len()]; n1];
    let rows: Vec<Vec<f64>> = (0..grid.len())
        .into_par_iter()
        .map(|flat| {
            let mut x = [0.0; 3];
            grid.node(flat, &mut x[..n]);
            let mut coef = [0.0; 9];
            group.frame_raw(&x[..n], &mut coef[..n1 * n]);
            (0..n1)
                .map(|i| (0..n).map(|a| coef[i * n + a] * partials[a][flat]).sum())
                .collect()
        })
        .collect();
    for (flat, row) in rows.into_iter().enumerate() {
        for (i, v) in row.into_iter().enumerate() {
            comps[i][flat] = v;
        }
    }
    comps
}

fn horizontal_components(grid: &Grid, group: &CarnotGroup, values: &[f64]) -> Vec<Vec<f64>> {
    let partials: Vec<Vec<f64>> = (0..grid.dim()).map(|a| partial(grid, values, a)).collect();
    frame_apply(grid, group, &partials)
}

/// Sub-gradient `(Z₁f, …, Z_{N₁}f)`, one field per horizontal direction.
pub fn horizontal_gradient(f: &GridFunction, group: &CarnotGroup) -> Result<Vec<GridFunction>> {
    check_grid(f.grid(), group)?;
    horizontal_components(f.grid(), group, f.values())
        .into_iter()
        .map(|c| GridFunction::new(f.grid().clone(), c))
        .collect()
}

/// Nodal `|∇_H f|`.
pub fn gradient_norm(f: &GridFunction, group: &CarnotGroup) -> Result<Vec<f64>> {
    let grad = horizontal_gradient(f, group)?;
    Ok((0..f.grid().len())
        .map(|i| {
            grad.iter()
                .map(|g| g.values()[i].powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect())
}

/// Sub-Laplacian `Σ Z_i² f`, applying each frame stencil twice.
pub fn sub_laplacian(f: &GridFunction, group: &CarnotGroup) -> Result<GridFunction> {
    check_grid(f.grid(), group)?;
    let grid = f.grid();
    let first = horizontal_components(grid, group, f.values());
    let mut out = vec![0.0; grid.len()];
    for (i, zi) in first.iter().enumerate() {
        let second = horizontal_components(grid, group, zi);
        out.iter_mut().zip(&second[i]).for_each(|(o, v)| *o += v);
    }
    GridFunction::new(grid.clone(), out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube3(n: usize) -> Grid {
        Grid::cube(&[-1.0; 3], &[1.0; 3], n).unwrap()
    }

    #[test]
    fn constant_has_zero_derivatives() {
        let g = cube3(7);
        let f = GridFunction::constant(&g, 3.5).unwrap();
        let grad = horizontal_gradient(&f, &CarnotGroup::Heisenberg).unwrap();
        assert!(grad.iter().all(|c| c.values().iter().all(|v| *v == 0.0)));
        let lap = sub_laplacian(&f, &CarnotGroup::Heisenberg).unwrap();
        assert!(lap.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn gradient_of_vertical_coordinate() {
        let g = cube3(9);
        let f = GridFunction::from_fn(&g, |x| x[2]).unwrap();
        let grad = horizontal_gradient(&f, &CarnotGroup::Heisenberg).unwrap();
        for i in 0..g.len() {
            let x = g.node_vec(i);
            assert!((grad[0].values()[i] + x[1] / 2.0).abs() < 1e-12);
            assert!((grad[1].values()[i] - x[0] / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn abelian_gradient_and_laplacian() {
        let group = CarnotGroup::abelian(2).unwrap();
        let g = Grid::cube(&[-1.0; 2], &[1.0; 2], 11).unwrap();
        let f = GridFunction::from_fn(&g, |x| x[0]).unwrap();
        let grad = horizontal_gradient(&f, &group).unwrap();
        assert!(grad[0].values().iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!(grad[1].values().iter().all(|v| v.abs() < 1e-12));

        let g1 = Grid::cube(&[-1.0], &[1.0], 21).unwrap();
        let sq = GridFunction::from_fn(&g1, |x| x[0] * x[0]).unwrap();
        let lap = sub_laplacian(&sq, &CarnotGroup::abelian(1).unwrap()).unwrap();
        // The doubled central stencil is exact for quadratics two nodes in.
        for i in 2..19 {
            assert!((lap.values()[i] - 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn heisenberg_laplacian_of_radial_square() {
        let g = cube3(17);
        let f = GridFunction::from_fn(&g, |x| x[0] * x[0] + x[1] * x[1]).unwrap();
        let lap = sub_laplacian(&f, &CarnotGroup::Heisenberg).unwrap();
        for i in 0..g.len() {
            if g.face_depth(i) >= 2 {
                assert!((lap.values()[i] - 4.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let g = Grid::new(vec![-1.0; 3], vec![1.0; 3], vec![5, 2, 5]).unwrap();
        let f = GridFunction::constant(&g, 0.0).unwrap();
        assert!(horizontal_gradient(&f, &CarnotGroup::Heisenberg).is_err());
    }
}
