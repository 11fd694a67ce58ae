//! Quadratic B-spline interpolation over the 3x3x3 node stencil.

use nalgebra::Vector3;

use super::grid::GridState;
use crate::error::{Error, Result};

/// Particles must stay this many cells away from the outermost nodes.
pub const SAFE_MARGIN_CELLS: f64 = 1.5;

/// `N(x) = 3/4 - x^2` on `|x| <= 1/2`, `(3/2 - |x|)^2 / 2` on `1/2 < |x| <= 3/2`, else 0.
pub fn quadratic_bspline(x: f64) -> f64 {
    let a = x.abs();
    if a <= 0.5 {
        0.75 - a * a
    } else if a <= 1.5 {
        0.5 * (1.5 - a) * (1.5 - a)
    } else {
        0.0
    }
}

/// Tensor-product weights of one particle over its 27 nodes.
#[derive(Debug, Clone, Copy)]
pub struct Stencil {
    /// Lowest node index of the stencil along each axis.
    pub base: [usize; 3],
    /// `weights[axis][i]` for node `base[axis] + i`.
    pub weights: [[f64; 3]; 3],
    /// `offsets[axis][i]` = node coordinate minus particle coordinate (world units).
    pub offsets: [[f64; 3]; 3],
}

impl Stencil {
    /// `None` if the particle is closer than the safe margin to the grid boundary.
    pub fn new(x: &Vector3<f64>, grid: &GridState) -> Option<Self> {
        let mut base = [0usize; 3];
        let mut weights = [[0.0; 3]; 3];
        let mut offsets = [[0.0; 3]; 3];
        for a in 0..3 {
            let fx = (x[a] - grid.origin[a]) / grid.dx;
            let hi = (grid.resolution[a] - 1) as f64 - SAFE_MARGIN_CELLS;
            if !(fx >= SAFE_MARGIN_CELLS && fx <= hi) {
                return None;
            }
            let b = (fx - 0.5).floor();
            let d = fx - b;
            weights[a] = [
                0.5 * (1.5 - d) * (1.5 - d),
                0.75 - (d - 1.0) * (d - 1.0),
                0.5 * (d - 0.5) * (d - 0.5),
            ];
            offsets[a] = [-d * grid.dx, (1.0 - d) * grid.dx, (2.0 - d) * grid.dx];
            base[a] = b as usize;
        }
        Some(Self {
            base,
            weights,
            offsets,
        })
    }

    /// Visits `(node [i, j, k], weight, node_position - particle_position)` for all 27 nodes.
    #[inline]
    pub fn for_each(&self, mut f: impl FnMut([usize; 3], f64, Vector3<f64>)) {
        for k in 0..3 {
            for j in 0..3 {
                let wjk = self.weights[1][j] * self.weights[2][k];
                for i in 0..3 {
                    f(
                        [self.base[0] + i, self.base[1] + j, self.base[2] + k],
                        self.weights[0][i] * wjk,
                        Vector3::new(self.offsets[0][i], self.offsets[1][j], self.offsets[2][k]),
                    );
                }
            }
        }
    }
}

/// The 27 `(linear node index, weight)` pairs of a particle at `x`.
pub fn bspline_weights(x: &Vector3<f64>, grid: &GridState) -> Result<Vec<(usize, f64)>> {
    let stencil = Stencil::new(x, grid).ok_or(Error::OutOfGrid {
        index: 0,
        position: (*x).into(),
    })?;
    let mut out = Vec::with_capacity(27);
    stencil.for_each(|node, w, _| out.push((grid.linear(node), w)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid() -> GridState {
        GridState::new([16, 16, 16], 1.0 / 16.0, Vector3::zeros()).unwrap()
    }

    #[test]
    fn on_node_weights() {
        let g = grid();
        let x = Vector3::new(5.0, 7.0, 9.0) / 16.0;
        let s = Stencil::new(&x, &g).unwrap();
        for a in 0..3 {
            assert_eq!(s.weights[a], [0.125, 0.75, 0.125]);
        }
        let w = bspline_weights(&x, &g).unwrap();
        let centre = g.linear([5, 7, 9]);
        let wc = w.iter().find(|(n, _)| *n == centre).unwrap().1;
        assert_eq!(wc, 0.421875);
    }

    #[test]
    fn stencil_matches_direct_kernel_evaluation() {
        let g = grid();
        let x = Vector3::new(0.31, 0.47, 0.52);
        let s = Stencil::new(&x, &g).unwrap();
        s.for_each(|node, w, off| {
            let pos = g.node_position(node);
            assert!((pos - x - off).norm() < 1e-15);
            let direct: f64 = (0..3)
                .map(|a| quadratic_bspline((pos[a] - x[a]) / g.dx))
                .product();
            assert!((w - direct).abs() < 1e-15);
        });
    }

    #[test]
    fn margin_is_enforced() {
        let g = grid();
        assert!(bspline_weights(&Vector3::new(0.05, 0.5, 0.5), &g).is_err());
        assert!(bspline_weights(&Vector3::new(0.5, 0.5, 0.99), &g).is_err());
        assert!(bspline_weights(&Vector3::new(1.5 / 16.0, 0.5, 0.5), &g).is_ok());
    }

    #[test]
    fn partition_of_unity_and_linear_reproduction() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let x = Vector3::from_fn(|_, _| rng.random_range(0.1..0.84));
            let s = Stencil::new(&x, &g).unwrap();
            // Brute-force summation over the stencil.
            let mut sum = 0.0;
            let mut first = Vector3::zeros();
            s.for_each(|node, w, _| {
                sum += w;
                first += w * (g.node_position(node) - x);
            });
            assert!((sum - 1.0).abs() < 1e-12);
            assert!(first.norm() < 1e-10 * g.dx);
        }
    }
}
