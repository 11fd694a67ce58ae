use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Isometry3, Point3, Vector3};

use crate::error::{Error, Result};

/// Indexed triangle mesh in world units.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Point3<f64>>,
    pub faces: Vec<[usize; 3]>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Point3<f64>>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if faces.is_empty() {
            return Err(Error::EmptyMesh);
        }
        let n = vertices.len();
        if let Some(bad) = faces.iter().flatten().find(|&&i| i >= n) {
            return Err(Error::InvalidParameter(format!(
                "face index {bad} out of range for {n} vertices"
            )));
        }
        Ok(Self { vertices, faces })
    }

    /// Axis-aligned box with outward-facing triangles.
    pub fn cuboid(min: Point3<f64>, max: Point3<f64>) -> Self {
        let v = |x: f64, y: f64, z: f64| Point3::new(x, y, z);
        let vertices = vec![
            v(min.x, min.y, min.z),
            v(max.x, min.y, min.z),
            v(max.x, max.y, min.z),
            v(min.x, max.y, min.z),
            v(min.x, min.y, max.z),
            v(max.x, min.y, max.z),
            v(max.x, max.y, max.z),
            v(min.x, max.y, max.z),
        ];
        let faces = vec![
            [0, 2, 1],
            [0, 3, 2],
            [4, 5, 6],
            [4, 6, 7],
            [0, 1, 5],
            [0, 5, 4],
            [2, 3, 7],
            [2, 7, 6],
            [1, 2, 6],
            [1, 6, 5],
            [0, 4, 7],
            [0, 7, 3],
        ];
        Self { vertices, faces }
    }

    /// Geodesic sphere from a subdivided icosahedron. Vertices lie exactly on the sphere.
    pub fn icosphere(center: Point3<f64>, radius: f64, subdivisions: u32) -> Self {
        let t = (1.0 + 5f64.sqrt()) / 2.0;
        let mut dirs: Vec<Vector3<f64>> = [
            [-1.0, t, 0.0],
            [1.0, t, 0.0],
            [-1.0, -t, 0.0],
            [1.0, -t, 0.0],
            [0.0, -1.0, t],
            [0.0, 1.0, t],
            [0.0, -1.0, -t],
            [0.0, 1.0, -t],
            [t, 0.0, -1.0],
            [t, 0.0, 1.0],
            [-t, 0.0, -1.0],
            [-t, 0.0, 1.0],
        ]
        .iter()
        .map(|a| Vector3::from(*a).normalize())
        .collect();
        let mut faces: Vec<[usize; 3]> = vec![
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ];
        for _ in 0..subdivisions {
            let mut midpoints = std::collections::HashMap::new();
            let mut midpoint = |a: usize, b: usize, dirs: &mut Vec<Vector3<f64>>| {
                let key = (a.min(b), a.max(b));
                *midpoints.entry(key).or_insert_with(|| {
                    dirs.push(((dirs[a] + dirs[b]) * 0.5).normalize());
                    dirs.len() - 1
                })
            };
            let mut next = Vec::with_capacity(faces.len() * 4);
            for &[a, b, c] in &faces {
                let ab = midpoint(a, b, &mut dirs);
                let bc = midpoint(b, c, &mut dirs);
                let ca = midpoint(c, a, &mut dirs);
                next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
            }
            faces = next;
        }
        let vertices = dirs.iter().map(|d| center + d * radius).collect();
        Self { vertices, faces }
    }

    pub fn bounding_box(&self) -> (Point3<f64>, Point3<f64>) {
        let mut lo = Point3::from(Vector3::repeat(f64::INFINITY));
        let mut hi = Point3::from(Vector3::repeat(f64::NEG_INFINITY));
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }

    pub fn transformed(&self, iso: &Isometry3<f64>) -> Self {
        Self {
            vertices: self.vertices.iter().map(|p| iso * p).collect(),
            faces: self.faces.clone(),
        }
    }

    pub fn triangle(&self, f: usize) -> [Point3<f64>; 3] {
        let [a, b, c] = self.faces[f];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Enclosed volume by the divergence theorem (positive for outward winding).
    pub fn signed_volume(&self) -> f64 {
        (0..self.faces.len())
            .map(|f| {
                let [a, b, c] = self.triangle(f);
                a.coords.dot(&b.coords.cross(&c.coords)) / 6.0
            })
            .sum()
    }

    /// Ray parameters `t >= 0` of every triangle hit along `origin + t * dir`
    /// (Möller-Trumbore), unsorted.
    pub fn ray_hits(&self, origin: &Point3<f64>, dir: &Vector3<f64>) -> Vec<f64> {
        const EPS: f64 = 1e-14;
        let mut hits = Vec::new();
        for f in 0..self.faces.len() {
            let [a, b, c] = self.triangle(f);
            let e1 = b - a;
            let e2 = c - a;
            let p = dir.cross(&e2);
            let det = e1.dot(&p);
            if det.abs() < EPS {
                continue;
            }
            let inv = 1.0 / det;
            let s = origin - a;
            let u = s.dot(&p) * inv;
            if !(0.0..=1.0).contains(&u) {
                continue;
            }
            let q = s.cross(&e1);
            let v = dir.dot(&q) * inv;
            if v < 0.0 || u + v > 1.0 {
                continue;
            }
            let t = e2.dot(&q) * inv;
            if t >= 0.0 {
                hits.push(t);
            }
        }
        hits
    }

    pub fn to_obj_string(&self) -> String {
        let mut s = String::new();
        for v in &self.vertices {
            let _ = writeln!(s, "v {} {} {}", v.x, v.y, v.z);
        }
        for [a, b, c] in &self.faces {
            let _ = writeln!(s, "f {} {} {}", a + 1, b + 1, c + 1);
        }
        s
    }
}

/// Reads a Wavefront OBJ file. Polygons are fan-triangulated.
pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_obj(&text)
}

pub fn parse_obj(text: &str) -> Result<TriangleMesh> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        let mut tokens = content.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let coords: Vec<f64> = tokens
                    .take(3)
                    .map(|t| t.parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| Error::MeshParse {
                        line,
                        message: format!("bad vertex coordinate: {e}"),
                    })?;
                if coords.len() != 3 {
                    return Err(Error::MeshParse {
                        line,
                        message: "vertex needs three coordinates".into(),
                    });
                }
                vertices.push(Point3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let mut poly = Vec::new();
                for tok in tokens {
                    let idx = tok.split('/').next().unwrap_or("");
                    let i: i64 = idx.parse().map_err(|_| Error::MeshParse {
                        line,
                        message: format!("bad face index `{tok}`"),
                    })?;
                    // OBJ indices are 1-based; negative ones count back from the last vertex.
                    let resolved = if i > 0 {
                        i - 1
                    } else if i < 0 {
                        vertices.len() as i64 + i
                    } else {
                        -1
                    };
                    if resolved < 0 || resolved as usize >= vertices.len() {
                        return Err(Error::MeshParse {
                            line,
                            message: format!("face index {i} out of range"),
                        });
                    }
                    poly.push(resolved as usize);
                }
                if poly.len() < 3 {
                    return Err(Error::MeshParse {
                        line,
                        message: format!("face has {} vertices, cannot triangulate", poly.len()),
                    });
                }
                for k in 1..poly.len() - 1 {
                    faces.push([poly[0], poly[k], poly[k + 1]]);
                }
            }
            _ => {}
        }
    }
    TriangleMesh::new(vertices, faces)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TETRA: &str = "\
# tetrahedron
v 0 0 0
v 1 0 0
v 0 1 0
v 0 0 1
f 1 3 2
f 1 2 4
f 1 4 3
f 2 3 4
";

    #[test]
    fn tetrahedron_parses() {
        let m = parse_obj(TETRA).unwrap();
        assert_eq!(m.vertices.len(), 4);
        assert_eq!(m.faces.len(), 4);
        assert!((m.signed_volume() - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn quads_are_fan_triangulated() {
        let src = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1/1/1 2/2/2 3/3/3 4/4/4\n";
        let m = parse_obj(src).unwrap();
        assert_eq!(m.faces, vec![[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn negative_indices_resolve() {
        let src = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n";
        assert_eq!(parse_obj(src).unwrap().faces, vec![[0, 1, 2]]);
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_mesh("/definitely/not/here.obj").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn empty_and_degenerate_inputs() {
        assert!(matches!(parse_obj("v 0 0 0\n"), Err(Error::EmptyMesh)));
        assert!(matches!(
            parse_obj("v 0 0 0\nv 1 0 0\nf 1 2\n"),
            Err(Error::MeshParse { line: 3, .. })
        ));
        assert!(matches!(
            parse_obj("v 0 0 0\nf 1 2 3\n"),
            Err(Error::MeshParse { .. })
        ));
    }

    #[test]
    fn primitives_are_closed_and_outward() {
        let cube = TriangleMesh::cuboid(Point3::origin(), Point3::new(1.0, 2.0, 3.0));
        assert!((cube.signed_volume() - 6.0).abs() < 1e-12);
        let s = TriangleMesh::icosphere(Point3::new(0.5, 0.5, 0.5), 0.5, 3);
        assert_eq!(s.faces.len(), 20 * 64);
        let v = s.signed_volume();
        let exact = 4.0 / 3.0 * std::f64::consts::PI * 0.125;
        assert!(v > 0.97 * exact && v < exact);
    }

    #[test]
    fn obj_round_trip() {
        let s = TriangleMesh::icosphere(Point3::origin(), 1.0, 1);
        let back = parse_obj(&s.to_obj_string()).unwrap();
        assert_eq!(back.faces, s.faces);
        for (a, b) in back.vertices.iter().zip(&s.vertices) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn ray_hits_through_cube() {
        let cube = TriangleMesh::cuboid(Point3::origin(), Point3::new(1.0, 1.0, 1.0));
        let mut hits = cube.ray_hits(&Point3::new(0.3, 0.4, -1.0), &Vector3::z());
        hits.sort_by(f64::total_cmp);
        assert_eq!(hits.len(), 2);
        assert!((hits[0] - 1.0).abs() < 1e-12 && (hits[1] - 2.0).abs() < 1e-12);
    }
}
