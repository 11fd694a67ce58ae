//! Solid voxelization by parity raycasting.
//!
//! Voxels live on a global lattice: voxel `k` along an axis spans
//! `[k * spacing, (k + 1) * spacing)`, so lattice-aligned translations of the
//! mesh translate the result exactly. Each axis casts one ray per lattice
//! column and counts crossings; the three per-axis answers are combined by
//! majority vote.

use nalgebra::{Point3, Vector3};
use rayon::prelude::*;

use super::mesh::TriangleMesh;
use super::ParticleCloud;
use crate::error::{Error, Result};
use crate::solver::particle::{Particle, Role};

/// Largest tolerated fraction of voxels on which the three axes disagree.
pub const MAX_DISAGREEMENT: f64 = 0.01;

const MAX_JITTER_ATTEMPTS: u32 = 8;

/// Integer voxel box `[lo, lo + dims)` covering every voxel centre inside the mesh bounds.
#[derive(Debug, Clone, Copy)]
struct LatticeBox {
    lo: [i64; 3],
    dims: [usize; 3],
}

impl LatticeBox {
    fn linear(&self, i: [usize; 3]) -> usize {
        (i[2] * self.dims[1] + i[1]) * self.dims[0] + i[0]
    }

    fn len(&self) -> usize {
        self.dims.iter().product()
    }
}

/// Fills the interior of a watertight mesh with one particle per voxel centre.
///
/// Particles get unit density: `mass = rest_volume = spacing^3`.
pub fn voxelize(mesh: &TriangleMesh, spacing: f64) -> Result<ParticleCloud> {
    let inside = interior_voxels(mesh, spacing)?;
    let volume = spacing.powi(3);
    let particles = inside
        .into_iter()
        .map(|k| {
            let centre = Vector3::new(
                (k[0] as f64 + 0.5) * spacing,
                (k[1] as f64 + 0.5) * spacing,
                (k[2] as f64 + 0.5) * spacing,
            );
            Particle::at_rest(centre, volume, volume, Role::Object)
        })
        .collect();
    ParticleCloud::new(particles, spacing, Role::Object)
}

/// Global lattice indices of the interior voxels, in z-major then y then x order.
pub fn interior_voxels(mesh: &TriangleMesh, spacing: f64) -> Result<Vec<[i64; 3]>> {
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "voxel spacing must be positive, got {spacing}"
        )));
    }
    if mesh.faces.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let (bb_lo, bb_hi) = mesh.bounding_box();
    let extent = bb_hi - bb_lo;
    if spacing >= extent.min() {
        return Err(Error::EmptyInterior { spacing });
    }
    let mut lo = [0i64; 3];
    let mut dims = [0usize; 3];
    for a in 0..3 {
        let first = (bb_lo[a] / spacing - 0.5).ceil() as i64;
        let last = (bb_hi[a] / spacing - 0.5).floor() as i64;
        lo[a] = first;
        dims[a] = (last - first + 1).max(0) as usize;
    }
    let lattice = LatticeBox { lo, dims };
    if lattice.len() == 0 {
        return Err(Error::EmptyInterior { spacing });
    }

    let votes: Vec<Vec<bool>> = (0..3)
        .map(|axis| axis_parity(mesh, spacing, &lattice, axis))
        .collect();

    let mut inside = Vec::new();
    let mut any = 0usize;
    let mut disagree = 0usize;
    for k in 0..dims[2] {
        for j in 0..dims[1] {
            for i in 0..dims[0] {
                let l = lattice.linear([i, j, k]);
                let count = votes.iter().filter(|v| v[l]).count();
                if count > 0 {
                    any += 1;
                    if count < 3 {
                        disagree += 1;
                    }
                }
                if count >= 2 {
                    inside.push([lo[0] + i as i64, lo[1] + j as i64, lo[2] + k as i64]);
                }
            }
        }
    }
    if any > 0 && disagree as f64 > MAX_DISAGREEMENT * any as f64 {
        return Err(Error::NotWatertight {
            disagreeing: disagree,
            total: any,
        });
    }
    if inside.is_empty() {
        return Err(Error::EmptyInterior { spacing });
    }
    Ok(inside)
}

/// Per-voxel inside flags from rays cast along `axis`.
fn axis_parity(mesh: &TriangleMesh, spacing: f64, lattice: &LatticeBox, axis: usize) -> Vec<bool> {
    let b = (axis + 1) % 3;
    let c = (axis + 2) % 3;
    let (nb, nc) = (lattice.dims[b], lattice.dims[c]);
    let centre = |ax: usize, i: usize| (lattice.lo[ax] as f64 + i as f64 + 0.5) * spacing;

    // Bin triangles by the columns their projected bounding box covers.
    let mut bins: Vec<Vec<usize>> = vec![Vec::new(); nb * nc];
    for f in 0..mesh.faces.len() {
        let tri = mesh.triangle(f);
        let (mut lo_b, mut hi_b, mut lo_c, mut hi_c) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for p in &tri {
            lo_b = lo_b.min(p[b]);
            hi_b = hi_b.max(p[b]);
            lo_c = lo_c.min(p[c]);
            hi_c = hi_c.max(p[c]);
        }
        // Widen by a hair so jittered rays still see their triangles.
        let pad = 1e-3 * spacing;
        let col = |v: f64, ax: usize| v / spacing - 0.5 - lattice.lo[ax] as f64;
        let ib0 = col(lo_b - pad, b).ceil().max(0.0) as usize;
        let ib1 = col(hi_b + pad, b).floor();
        let ic0 = col(lo_c - pad, c).ceil().max(0.0) as usize;
        let ic1 = col(hi_c + pad, c).floor();
        if ib1 < 0.0 || ic1 < 0.0 {
            continue;
        }
        let ib1 = (ib1 as usize).min(nb.saturating_sub(1));
        let ic1 = (ic1 as usize).min(nc.saturating_sub(1));
        for jc in ic0..=ic1 {
            for jb in ib0..=ib1 {
                bins[jc * nb + jb].push(f);
            }
        }
    }

    let columns: Vec<Vec<bool>> = (0..nb * nc)
        .into_par_iter()
        .map(|col| {
            let jb = col % nb;
            let jc = col / nb;
            let crossings = column_crossings(
                mesh,
                &bins[col],
                (centre(b, jb), centre(c, jc)),
                [axis, b, c],
                spacing,
            );
            (0..lattice.dims[axis])
                .map(|i| {
                    let x = centre(axis, i);
                    crossings.iter().filter(|&&t| t < x).count() % 2 == 1
                })
                .collect()
        })
        .collect();

    let mut flags = vec![false; lattice.len()];
    for (col, column) in columns.into_iter().enumerate() {
        let jb = col % nb;
        let jc = col / nb;
        for (i, inside) in column.into_iter().enumerate() {
            let mut idx = [0usize; 3];
            idx[axis] = i;
            idx[b] = jb;
            idx[c] = jc;
            flags[lattice.linear(idx)] = inside;
        }
    }
    flags
}

/// Sorted crossing coordinates along `axes[0]` of the ray through `(pb, pc)`.
/// Rays grazing an edge or vertex are re-cast with a small deterministic jitter.
fn column_crossings(
    mesh: &TriangleMesh,
    candidates: &[usize],
    (pb, pc): (f64, f64),
    [a, b, c]: [usize; 3],
    spacing: f64,
) -> Vec<f64> {
    // R2 low-discrepancy offsets.
    const G1: f64 = 0.754_877_666_246_692_7;
    const G2: f64 = 0.569_840_290_998_053_3;
    let mut attempt = 0;
    loop {
        let jitter = 1e-6 * spacing * attempt as f64;
        let (qb, qc) = (pb + jitter * G1, pc + jitter * G2);
        let mut hits = Vec::new();
        let mut grazing = false;
        for &f in candidates {
            match crossing(&mesh.triangle(f), qb, qc, [a, b, c]) {
                Crossing::Hit(t) => hits.push(t),
                Crossing::Grazing => {
                    grazing = true;
                    break;
                }
                Crossing::Miss => {}
            }
        }
        if !grazing || attempt >= MAX_JITTER_ATTEMPTS {
            hits.sort_by(f64::total_cmp);
            return hits;
        }
        attempt += 1;
    }
}

enum Crossing {
    Hit(f64),
    Miss,
    Grazing,
}

fn crossing(tri: &[Point3<f64>; 3], pb: f64, pc: f64, [a, b, c]: [usize; 3]) -> Crossing {
    let p = |i: usize| (tri[i][b], tri[i][c]);
    let (p0, p1, p2) = (p(0), p(1), p(2));
    let edge = |u: (f64, f64), v: (f64, f64)| (v.0 - u.0) * (pc - u.1) - (v.1 - u.1) * (pb - u.0);
    let area = (p1.0 - p0.0) * (p2.1 - p0.1) - (p1.1 - p0.1) * (p2.0 - p0.0);
    if area == 0.0 {
        return Crossing::Miss;
    }
    let e0 = edge(p1, p2);
    let e1 = edge(p2, p0);
    let e2 = edge(p0, p1);
    let sign = area.signum();
    let scale = area.abs() * 1e-12;
    let (s0, s1, s2) = (e0 * sign, e1 * sign, e2 * sign);
    if s0 < -scale || s1 < -scale || s2 < -scale {
        return Crossing::Miss;
    }
    if s0 <= scale || s1 <= scale || s2 <= scale {
        return Crossing::Grazing;
    }
    let (w0, w1, w2) = (e0 / area, e1 / area, e2 / area);
    Crossing::Hit(w0 * tri[0][a] + w1 * tri[1][a] + w2 * tri[2][a])
}
