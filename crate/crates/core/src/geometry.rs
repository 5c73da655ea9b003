//! Polygons, rasterization and inside/outside oracles for occupancy and
//! silhouette evaluation.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::domain::Domain;
use crate::io::mesh::TriangleMesh;
use crate::{Error, Result};

/// Even-odd crossing test. Points exactly on an edge may land on either side.
pub fn point_in_polygon(p: [f64; 2], poly: &[[f64; 2]]) -> bool {
    let mut inside = false;
    let n = poly.len();
    let mut j = n.wrapping_sub(1);
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Boolean raster; cell `(i, j)` covers column `i`, row `j`, with row 0 at the
/// low end of the y axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub cells: Vec<bool>,
}

impl Raster {
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.cells[j * self.width + i]
    }

    pub fn filled_fraction(&self) -> f64 {
        self.cells.iter().filter(|&&c| c).count() as f64 / self.cells.len() as f64
    }

    pub fn pixel_center(domain: &Domain, width: usize, height: usize, i: usize, j: usize) -> [f64; 2] {
        [
            domain.lo[0] + (i as f64 + 0.5) * (domain.hi[0] - domain.lo[0]) / width as f64,
            domain.lo[1] + (j as f64 + 0.5) * (domain.hi[1] - domain.lo[1]) / height as f64,
        ]
    }
}

/// Even-odd fill sampled at pixel centers of a `resolution × resolution`
/// raster spanning `domain`. Scanline equivalent of [`point_in_polygon`].
pub fn rasterize_polygon(vertices: &[[f64; 2]], resolution: usize, domain: &Domain) -> Result<Raster> {
    if vertices.len() < 3 {
        return Err(Error::invalid(format!(
            "polygon needs at least 3 vertices, got {}",
            vertices.len()
        )));
    }
    if domain.dim() != 2 || resolution == 0 {
        return Err(Error::invalid("rasterization needs a 2D domain and resolution >= 1"));
    }
    let n = vertices.len();
    let mut cells = vec![false; resolution * resolution];
    let mut xs: Vec<f64> = Vec::with_capacity(16);
    for j in 0..resolution {
        let py = Raster::pixel_center(domain, resolution, resolution, 0, j)[1];
        xs.clear();
        let mut k = n - 1;
        for i in 0..n {
            let (a, b) = (vertices[i], vertices[k]);
            if (a[1] > py) != (b[1] > py) {
                xs.push(a[0] + (py - a[1]) / (b[1] - a[1]) * (b[0] - a[0]));
            }
            k = i;
        }
        xs.sort_by(f64::total_cmp);
        let mut passed = 0;
        for i in 0..resolution {
            let px = Raster::pixel_center(domain, resolution, resolution, i, j)[0];
            while passed < xs.len() && xs[passed] <= px {
                passed += 1;
            }
            // crossings strictly to the right of px
            cells[j * resolution + i] = (xs.len() - passed) % 2 == 1;
        }
    }
    Ok(Raster {
        width: resolution,
        height: resolution,
        cells,
    })
}

pub fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    let twice: f64 = (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum();
    0.5 * twice.abs()
}

fn edge_lengths(poly: &[[f64; 2]]) -> Vec<f64> {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt()
        })
        .collect()
}

fn point_at_arclength(poly: &[[f64; 2]], lengths: &[f64], mut s: f64) -> [f64; 2] {
    let n = poly.len();
    for i in 0..n {
        if s <= lengths[i] || i == n - 1 {
            let t = if lengths[i] > 0.0 {
                (s / lengths[i]).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            return [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
        }
        s -= lengths[i];
    }
    poly[0]
}

/// `count` points evenly spaced by arc length along the closed boundary.
pub fn sample_boundary_uniform(poly: &[[f64; 2]], count: usize) -> Vec<[f64; 2]> {
    let lengths = edge_lengths(poly);
    let total: f64 = lengths.iter().sum();
    (0..count)
        .map(|k| point_at_arclength(poly, &lengths, total * k as f64 / count as f64))
        .collect()
}

/// Regular polygon approximating a circle, counter-clockwise from angle 0.
pub fn circle_polygon(center: [f64; 2], radius: f64, vertices: usize) -> Vec<[f64; 2]> {
    (0..vertices)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / vertices as f64;
            [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
        })
        .collect()
}

/// A closed shape with an inside/outside oracle and a surface sampler.
pub trait Shape: Send + Sync {
    fn dim(&self) -> usize;
    fn contains(&self, p: &[f64]) -> bool;
    fn sample_surface<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<Vec<f64>>
    where
        Self: Sized;
}

/// Closed simple polygon (even-odd interior).
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    pub vertices: Vec<[f64; 2]>,
    lengths: Vec<f64>,
    perimeter: f64,
}

impl Polygon {
    pub fn new(vertices: Vec<[f64; 2]>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::Oracle(format!(
                "polygon needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if polygon_area(&vertices) <= 0.0 {
            return Err(Error::Oracle("polygon has zero area".into()));
        }
        let lengths = edge_lengths(&vertices);
        let perimeter = lengths.iter().sum();
        Ok(Self {
            vertices,
            lengths,
            perimeter,
        })
    }

    /// True when two non-adjacent edges cross. Quadratic; meant for fixtures
    /// and input validation.
    pub fn self_intersects(&self) -> bool {
        let v = &self.vertices;
        let n = v.len();
        let orient =
            |a: [f64; 2], b: [f64; 2], c: [f64; 2]| (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
        for i in 0..n {
            for j in i + 1..n {
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let (a, b) = (v[i], v[(i + 1) % n]);
                let (c, d) = (v[j], v[(j + 1) % n]);
                let d1 = orient(a, b, c);
                let d2 = orient(a, b, d);
                let d3 = orient(c, d, a);
                let d4 = orient(c, d, b);
                if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
                    return true;
                }
            }
        }
        false
    }
}

impl Shape for Polygon {
    fn dim(&self) -> usize {
        2
    }

    fn contains(&self, p: &[f64]) -> bool {
        point_in_polygon([p[0], p[1]], &self.vertices)
    }

    fn sample_surface<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<Vec<f64>> {
        (0..count)
            .map(|_| {
                let s = rng.gen::<f64>() * self.perimeter;
                point_at_arclength(&self.vertices, &self.lengths, s).to_vec()
            })
            .collect()
    }
}

/// Watertight triangle mesh with a ray-parity inside test.
#[derive(Debug, Clone)]
pub struct MeshShape {
    mesh: TriangleMesh,
    cumulative_area: Vec<f64>,
}

impl MeshShape {
    /// Fails unless every undirected edge is shared by exactly two triangles.
    pub fn new(mesh: TriangleMesh) -> Result<Self> {
        if mesh.triangles.is_empty() {
            return Err(Error::Oracle("mesh has no faces".into()));
        }
        let mut edges: Vec<(usize, usize)> = mesh
            .triangles
            .iter()
            .flat_map(|t| [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])])
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        edges.sort_unstable();
        let mut i = 0;
        while i < edges.len() {
            let mut j = i;
            while j < edges.len() && edges[j] == edges[i] {
                j += 1;
            }
            if j - i != 2 {
                return Err(Error::Oracle(format!(
                    "mesh is not watertight: edge {:?} is used by {} faces",
                    edges[i],
                    j - i
                )));
            }
            i = j;
        }
        let mut total = 0.0;
        let cumulative_area = mesh
            .triangles
            .iter()
            .map(|t| {
                total += triangle_area(&mesh, t);
                total
            })
            .collect();
        Ok(Self { mesh, cumulative_area })
    }

    pub fn mesh(&self) -> &TriangleMesh {
        &self.mesh
    }
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn triangle_area(mesh: &TriangleMesh, t: &[usize; 3]) -> f64 {
    let [a, b, c] = t.map(|i| mesh.vertices[i]);
    let n = cross(sub(b, a), sub(c, a));
    0.5 * dot(n, n).sqrt()
}

// Direction with no special alignment to axis-aligned geometry.
const RAY_DIR: [f64; 3] = [0.573_462_3, 0.608_119_1, 0.548_838_3];

impl Shape for MeshShape {
    fn dim(&self) -> usize {
        3
    }

    fn contains(&self, p: &[f64]) -> bool {
        let origin = [p[0], p[1], p[2]];
        let mut crossings = 0;
        for t in &self.mesh.triangles {
            let [a, b, c] = t.map(|i| self.mesh.vertices[i]);
            // Möller–Trumbore
            let e1 = sub(b, a);
            let e2 = sub(c, a);
            let h = cross(RAY_DIR, e2);
            let det = dot(e1, h);
            if det.abs() < 1e-14 {
                continue;
            }
            let inv = 1.0 / det;
            let s = sub(origin, a);
            let u = inv * dot(s, h);
            if !(0.0..=1.0).contains(&u) {
                continue;
            }
            let q = cross(s, e1);
            let v = inv * dot(RAY_DIR, q);
            if v < 0.0 || u + v > 1.0 {
                continue;
            }
            if inv * dot(e2, q) > 0.0 {
                crossings += 1;
            }
        }
        crossings % 2 == 1
    }

    fn sample_surface<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<Vec<f64>> {
        let total = *self.cumulative_area.last().expect("non-empty mesh");
        (0..count)
            .map(|_| {
                let target = rng.gen::<f64>() * total;
                let k = self
                    .cumulative_area
                    .partition_point(|&c| c < target)
                    .min(self.mesh.triangles.len() - 1);
                let [a, b, c] = self.mesh.triangles[k].map(|i| self.mesh.vertices[i]);
                let (mut r1, mut r2) = (rng.gen::<f64>(), rng.gen::<f64>());
                if r1 + r2 > 1.0 {
                    r1 = 1.0 - r1;
                    r2 = 1.0 - r2;
                }
                (0..3).map(|i| a[i] + r1 * (b[i] - a[i]) + r2 * (c[i] - a[i])).collect()
            })
            .collect()
    }
}

/// Adds isotropic Gaussian noise of standard deviation `sigma` to each point.
pub fn jitter<R: Rng + ?Sized>(points: &mut [Vec<f64>], sigma: f64, rng: &mut R) {
    for p in points {
        for v in p.iter_mut() {
            let z: f64 = StandardNormal.sample(rng);
            *v += sigma * z;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn full_domain_square_fills_everything() {
        let dom = Domain::symmetric(2);
        let sq = [[-2.0, -2.0], [2.0, -2.0], [2.0, 2.0], [-2.0, 2.0]];
        let r = rasterize_polygon(&sq, 16, &dom).unwrap();
        assert!(r.cells.iter().all(|&c| c));
    }

    #[test]
    fn circle_area_fraction() {
        let dom = Domain::symmetric(2);
        let r = rasterize_polygon(&circle_polygon([0.0, 0.0], 1.0, 256), 512, &dom).unwrap();
        let expected = std::f64::consts::PI / 4.0;
        assert!((r.filled_fraction() - expected).abs() / expected < 0.01);
    }

    #[test]
    fn triangle_matches_hand_marked_raster() {
        // Domain [0,8]², pixel centers at k + 0.5. Triangle (0,0), (8,0), (0,8):
        // center (i+.5, j+.5) is inside iff i + j + 1 < 8, i.e. i + j <= 6.
        let dom = Domain::new(vec![0.0, 0.0], vec![8.0, 8.0]).unwrap();
        let tri = [[0.0, 0.0], [8.0, 0.0], [0.0, 8.0]];
        let r = rasterize_polygon(&tri, 8, &dom).unwrap();
        let marked = [
            "#######.", // j = 0
            "######..", "#####...", "####....", "###.....", "##......", "#.......", "........",
        ];
        for (j, row) in marked.iter().enumerate() {
            for (i, ch) in row.chars().enumerate() {
                assert_eq!(r.get(i, j), ch == '#', "pixel ({i},{j})");
            }
        }
    }

    #[test]
    fn scanline_agrees_with_pointwise_test() {
        let dom = Domain::symmetric(2);
        let star: Vec<[f64; 2]> = (0..10)
            .map(|k| {
                let r = if k % 2 == 0 { 0.9 } else { 0.35 };
                let t = std::f64::consts::TAU * k as f64 / 10.0 + 0.1;
                [r * t.cos(), r * t.sin()]
            })
            .collect();
        let r = rasterize_polygon(&star, 64, &dom).unwrap();
        for j in 0..64 {
            for i in 0..64 {
                let c = Raster::pixel_center(&dom, 64, 64, i, j);
                assert_eq!(r.get(i, j), point_in_polygon(c, &star));
            }
        }
    }

    #[test]
    fn degenerate_polygons_rejected() {
        let dom = Domain::symmetric(2);
        assert!(rasterize_polygon(&[[0.0, 0.0], [1.0, 1.0]], 8, &dom).is_err());
        assert!(Polygon::new(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]).is_err());
    }

    #[test]
    fn self_intersection_detection() {
        let bowtie = Polygon::new(vec![[0.0, 0.0], [2.0, 2.0], [2.0, 0.0], [0.0, 1.0]]).unwrap();
        assert!(bowtie.self_intersects());
        let square = Polygon::new(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap();
        assert!(!square.self_intersects());
    }

    fn cube() -> TriangleMesh {
        let v = |x: f64, y: f64, z: f64| [x, y, z];
        let vertices = vec![
            v(-0.5, -0.5, -0.5),
            v(0.5, -0.5, -0.5),
            v(0.5, 0.5, -0.5),
            v(-0.5, 0.5, -0.5),
            v(-0.5, -0.5, 0.5),
            v(0.5, -0.5, 0.5),
            v(0.5, 0.5, 0.5),
            v(-0.5, 0.5, 0.5),
        ];
        let quads = [
            [0, 3, 2, 1],
            [4, 5, 6, 7],
            [0, 1, 5, 4],
            [2, 3, 7, 6],
            [1, 2, 6, 5],
            [0, 4, 7, 3],
        ];
        let triangles = quads
            .iter()
            .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
            .collect();
        TriangleMesh { vertices, triangles }
    }

    #[test]
    fn cube_inside_outside() {
        let shape = MeshShape::new(cube()).unwrap();
        assert!(shape.contains(&[0.0, 0.0, 0.0]));
        assert!(shape.contains(&[0.4, -0.3, 0.2]));
        assert!(!shape.contains(&[0.6, 0.0, 0.0]));
        assert!(!shape.contains(&[0.0, 0.0, -0.9]));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for p in shape.sample_surface(200, &mut rng) {
            let on_face = p.iter().any(|v| (v.abs() - 0.5).abs() < 1e-12);
            assert!(on_face && p.iter().all(|v| v.abs() <= 0.5 + 1e-12));
        }
    }

    #[test]
    fn open_mesh_is_rejected() {
        let mut m = cube();
        m.triangles.pop();
        assert!(matches!(MeshShape::new(m), Err(Error::Oracle(_))));
    }

    #[test]
    fn boundary_sampling_lies_on_edges() {
        let sq = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let pts = sample_boundary_uniform(&sq, 8);
        assert_eq!(pts[0], [0.0, 0.0]);
        assert_eq!(pts[1], [0.5, 0.0]);
        assert_eq!(pts[2], [1.0, 0.0]);
        assert_eq!(pts[4], [1.0, 1.0]);
    }
}
