//! Translation-free chamfer distance between the deformed and rest contact layer.

use std::collections::HashMap;

use nalgebra::Vector3;

use crate::error::{Error, Result};

/// Point sets at least this large use the spatial hash; smaller ones use brute force.
pub const HASH_THRESHOLD: usize = 512;

/// Sum of squared nearest-neighbour distances in both directions after
/// subtracting each set's mean.
pub fn chamfer_translation_free(current: &[Vector3<f64>], rest: &[Vector3<f64>]) -> Result<f64> {
    if current.is_empty() || rest.is_empty() {
        return Err(Error::InvalidParameter(
            "chamfer distance needs two nonempty point sets".into(),
        ));
    }
    let a = centred(current);
    let b = centred(rest);
    Ok(directed(&a, &b) + directed(&b, &a))
}

fn centred(points: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
    let mean = points.iter().sum::<Vector3<f64>>() / points.len() as f64;
    points.iter().map(|p| p - mean).collect()
}

/// `sum_{p in from} min_{q in to} |p - q|^2`
fn directed(from: &[Vector3<f64>], to: &[Vector3<f64>]) -> f64 {
    if from.len().max(to.len()) < HASH_THRESHOLD {
        from.iter()
            .map(|p| {
                to.iter()
                    .map(|q| (p - q).norm_squared())
                    .fold(f64::INFINITY, f64::min)
            })
            .sum()
    } else {
        let hash = SpatialHash::new(to);
        from.iter().map(|p| hash.nearest_squared(p)).sum()
    }
}

/// Uniform-cell hash for exact nearest-neighbour queries.
pub struct SpatialHash<'a> {
    points: &'a [Vector3<f64>],
    cell: f64,
    cells: HashMap<[i64; 3], Vec<usize>>,
    lo: [i64; 3],
    hi: [i64; 3],
}

impl<'a> SpatialHash<'a> {
    pub fn new(points: &'a [Vector3<f64>]) -> Self {
        let mut min = Vector3::repeat(f64::INFINITY);
        let mut max = Vector3::repeat(f64::NEG_INFINITY);
        for p in points {
            min = min.inf(p);
            max = max.sup(p);
        }
        let extent = (max - min).max();
        let cell = if extent > 0.0 {
            extent / (points.len() as f64).cbrt().max(1.0)
        } else {
            1.0
        };
        let mut cells: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        let mut lo = [i64::MAX; 3];
        let mut hi = [i64::MIN; 3];
        for (i, p) in points.iter().enumerate() {
            let k = key(p, cell);
            for a in 0..3 {
                lo[a] = lo[a].min(k[a]);
                hi[a] = hi[a].max(k[a]);
            }
            cells.entry(k).or_default().push(i);
        }
        Self {
            points,
            cell,
            cells,
            lo,
            hi,
        }
    }

    /// Squared distance from `q` to the closest stored point.
    pub fn nearest_squared(&self, q: &Vector3<f64>) -> f64 {
        let c = key(q, self.cell);
        // Ring radius beyond which no stored cell exists.
        let max_ring = (0..3)
            .map(|a| (c[a] - self.lo[a]).abs().max((self.hi[a] - c[a]).abs()))
            .max()
            .unwrap_or(0);
        let mut best = f64::INFINITY;
        let mut ring = 0i64;
        loop {
            self.scan_ring(c, ring, q, &mut best);
            // Every unscanned point is farther than `ring * cell` along some axis.
            let reach = ring as f64 * self.cell;
            if best <= reach * reach || ring >= max_ring {
                return best;
            }
            ring += 1;
        }
    }

    fn scan_ring(&self, c: [i64; 3], r: i64, q: &Vector3<f64>, best: &mut f64) {
        let mut visit = |k: [i64; 3]| {
            if let Some(ids) = self.cells.get(&k) {
                for &i in ids {
                    let d = (self.points[i] - q).norm_squared();
                    if d < *best {
                        *best = d;
                    }
                }
            }
        };
        if r == 0 {
            visit(c);
            return;
        }
        for dz in -r..=r {
            for dy in -r..=r {
                if dz.abs() == r || dy.abs() == r {
                    for dx in -r..=r {
                        visit([c[0] + dx, c[1] + dy, c[2] + dz]);
                    }
                } else {
                    visit([c[0] - r, c[1] + dy, c[2] + dz]);
                    visit([c[0] + r, c[1] + dy, c[2] + dz]);
                }
            }
        }
    }
}

fn key(p: &Vector3<f64>, cell: f64) -> [i64; 3] {
    [0, 1, 2].map(|a| (p[a] / cell).floor() as i64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// All-pairs oracle with its own centring.
    fn oracle(a: &[Vector3<f64>], b: &[Vector3<f64>]) -> f64 {
        let ma = a.iter().fold(Vector3::zeros(), |s, p| s + p) / a.len() as f64;
        let mb = b.iter().fold(Vector3::zeros(), |s, p| s + p) / b.len() as f64;
        let mut total = 0.0;
        for p in a {
            let mut m = f64::INFINITY;
            for q in b {
                m = m.min(((p - ma) - (q - mb)).norm_squared());
            }
            total += m;
        }
        for q in b {
            let mut m = f64::INFINITY;
            for p in a {
                m = m.min(((p - ma) - (q - mb)).norm_squared());
            }
            total += m;
        }
        total
    }

    fn cloud(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vector3<f64>> {
        (0..n)
            .map(|_| Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0)))
            .collect()
    }

    #[test]
    fn identical_and_translated_sets_are_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = cloud(&mut rng, 50);
        assert_eq!(chamfer_translation_free(&a, &a).unwrap(), 0.0);
        let shifted: Vec<_> = a.iter().map(|p| p + Vector3::new(3.0, -2.0, 0.5)).collect();
        assert!(chamfer_translation_free(&shifted, &a).unwrap() < 1e-24);
    }

    #[test]
    fn two_point_example() {
        let rest = [Vector3::zeros(), Vector3::new(1.0, 0.0, 0.0)];
        let deformed = [Vector3::zeros(), Vector3::new(1.0, 0.0, 1.0)];
        let l = chamfer_translation_free(&deformed, &rest).unwrap();
        assert!((l - 1.0).abs() < 1e-15);
        assert!((oracle(&deformed, &rest) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn empty_set_rejected() {
        assert!(chamfer_translation_free(&[], &[Vector3::zeros()]).is_err());
    }

    #[test]
    fn hash_matches_brute_force_on_large_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in [512, 700, 2000] {
            let a = cloud(&mut rng, n);
            let b: Vec<_> = cloud(&mut rng, n).iter().map(|p| p * 0.3).collect();
            let l = chamfer_translation_free(&a, &b).unwrap();
            let o = oracle(&a, &b);
            assert!((l - o).abs() <= 1e-12 * o, "{l} vs {o}");
        }
    }

    #[test]
    fn hash_handles_flat_layers() {
        let mut rest = Vec::new();
        for i in 0..32 {
            for j in 0..32 {
                rest.push(Vector3::new(i as f64 * 0.01, j as f64 * 0.01, 0.0));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cur: Vec<_> = rest
            .iter()
            .map(|p| p + Vector3::from_fn(|_, _| rng.random_range(-0.004..0.004)))
            .collect();
        let l = chamfer_translation_free(&cur, &rest).unwrap();
        let o = oracle(&cur, &rest);
        assert!((l - o).abs() <= 1e-12 * o);
    }

    proptest::proptest! {
        #[test]
        fn symmetric_and_translation_invariant(seed in 0u64..1000, n in 1usize..40, t in proptest::array::uniform3(-5.0f64..5.0)) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = cloud(&mut rng, n);
            let b = cloud(&mut rng, n);
            let ab = chamfer_translation_free(&a, &b).unwrap();
            let ba = chamfer_translation_free(&b, &a).unwrap();
            proptest::prop_assert!((ab - ba).abs() <= 1e-12 * ab.max(1e-300));
            let moved: Vec<_> = a.iter().map(|p| p + Vector3::from(t)).collect();
            let m = chamfer_translation_free(&moved, &b).unwrap();
            proptest::prop_assert!((m - ab).abs() <= 1e-9 * (1.0 + ab));
        }
    }
}
