//! Closed oriented piecewise-linear hypersurfaces and their volume forms.
//!
//! Curves (`n = 1`) are polygonal loops in the plane; the edges join
//! consecutive vertices and the last vertex back to the first. Surfaces
//! (`n = 2`) are triangle meshes in space with an explicit face list. Points
//! are always stored as `[f64; 3]`; curve points have `z == 0`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;


use crate::vec3::{self, Vec3};
use crate::{Error, Result};

pub type Point = Vec3;

/// Simplices whose measure falls below this fraction of the mean measure are
/// treated as degenerate.
pub const DEGENERATE_RELATIVE: f64 = 1e-12;

/// Intrinsic dimension of a discrete manifold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Dim {
    /// Closed polyline in the plane.
    Curve,
    /// Closed triangle mesh in space.
    Surface,
}

impl Dim {
    /// The intrinsic dimension `n`.
    pub fn n(self) -> usize {
        match self {
            Dim::Curve => 1,
            Dim::Surface => 2,
        }
    }

    /// Dimension of the ambient space, `n + 1`.
    pub fn ambient(self) -> usize {
        self.n() + 1
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Topology {
    Loop,
    Triangles(Arc<[[usize; 3]]>),
}

/// A closed oriented piecewise-linear hypersurface.
///
/// Construction only checks that indices are in range; [`validate`] reports
/// the closedness, orientation, non-degeneracy and connectivity invariants.
/// Cloning is cheap for the face list, which is shared.
///
/// [`validate`]: DiscreteManifold::validate
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteManifold {
    vertices: Vec<Point>,
    topology: Topology,
}

impl DiscreteManifold {
    /// Polygonal loop through `points`, closed implicitly.
    pub fn curve<I>(points: I) -> Result<Self>
    where
        I: IntoIterator<Item = [f64; 2]>,
    {
        let vertices: Vec<Point> = points.into_iter().map(|[x, y]| [x, y, 0.0]).collect();
        if vertices.len() < 2 {
            return Err(Error::Invalid(format!(
                "a loop needs at least 2 vertices, got {}",
                vertices.len()
            )));
        }
        Ok(Self { vertices, topology: Topology::Loop })
    }

    /// Triangle mesh with the given vertex positions and faces.
    pub fn surface(vertices: Vec<Point>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if faces.is_empty() {
            return Err(Error::Invalid("a surface needs at least one face".into()));
        }
        let len = vertices.len();
        for face in &faces {
            for &v in face {
                if v >= len {
                    return Err(Error::InvalidIndex { index: v, len });
                }
            }
        }
        Ok(Self { vertices, topology: Topology::Triangles(faces.into()) })
    }

    /// Same combinatorics, new vertex positions.
    pub fn with_vertices(&self, vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::Incompatible("vertex count differs from the combinatorics"));
        }
        if self.dim() == Dim::Curve && vertices.iter().any(|p| p[2] != 0.0) {
            return Err(Error::Domain("curve vertices must lie in the plane z = 0"));
        }
        Ok(Self { vertices, topology: self.topology.clone() })
    }

    pub fn dim(&self) -> Dim {
        match self.topology {
            Topology::Loop => Dim::Curve,
            Topology::Triangles(_) => Dim::Surface,
        }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// Face list for surfaces, `None` for curves.
    pub fn faces(&self) -> Option<&[[usize; 3]]> {
        match &self.topology {
            Topology::Loop => None,
            Topology::Triangles(f) => Some(f),
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_simplices(&self) -> usize {
        match &self.topology {
            Topology::Loop => self.vertices.len(),
            Topology::Triangles(f) => f.len(),
        }
    }

    /// True when both manifolds have the same dimension and simplices.
    pub fn same_combinatorics(&self, other: &Self) -> bool {
        if self.vertices.len() != other.vertices.len() {
            return false;
        }
        match (&self.topology, &other.topology) {
            (Topology::Loop, Topology::Loop) => true,
            (Topology::Triangles(a), Topology::Triangles(b)) => Arc::ptr_eq(a, b) || a == b,
            _ => false,
        }
    }

    /// Vertex ids of simplex `i`: the two endpoints of an edge, or the three
    /// corners of a triangle.
    pub fn simplex_vertices(&self, i: usize) -> SimplexVertices {
        match &self.topology {
            Topology::Loop => SimplexVertices::Edge([i, (i + 1) % self.vertices.len()]),
            Topology::Triangles(f) => SimplexVertices::Triangle(f[i]),
        }
    }

    fn raw_measure(&self, i: usize) -> f64 {
        match self.simplex_vertices(i) {
            SimplexVertices::Edge([a, b]) => vec3::dist(self.vertices[a], self.vertices[b]),
            SimplexVertices::Triangle([a, b, c]) => {
                vec3::triangle_area(self.vertices[a], self.vertices[b], self.vertices[c])
            }
        }
    }

    /// Edge length (curves) or triangle area (surfaces) of every simplex,
    /// without degeneracy checks.
    pub fn measures(&self) -> Vec<f64> {
        (0..self.num_simplices()).map(|i| self.raw_measure(i)).collect()
    }

    /// Simplex measures, failing on the first degenerate simplex.
    pub fn checked_measures(&self) -> Result<Vec<f64>> {
        let m = self.measures();
        match degenerate_simplices(&m).first() {
            Some(&simplex) => Err(Error::DegenerateSimplex { simplex }),
            None => Ok(m),
        }
    }

    /// Measure of one simplex.
    pub fn simplex_measure(&self, index: usize) -> Result<f64> {
        let len = self.num_simplices();
        if index >= len {
            return Err(Error::InvalidIndex { index, len });
        }
        let m = self.raw_measure(index);
        let mean = self.total_volume() / len as f64;
        if is_degenerate(m, mean) {
            return Err(Error::DegenerateSimplex { simplex: index });
        }
        Ok(m)
    }

    /// Total volume: perimeter of a loop, area of a mesh.
    pub fn total_volume(&self) -> f64 {
        self.measures().iter().sum()
    }

    /// Signed enclosed measure: shoelace area for loops, divergence-theorem
    /// volume for meshes. Positive for counter-clockwise loops and outward
    /// oriented meshes.
    pub fn signed_volume(&self) -> f64 {
        let v = &self.vertices;
        match &self.topology {
            Topology::Loop => {
                let n = v.len();
                0.5 * (0..n)
                    .map(|i| {
                        let (p, q) = (v[i], v[(i + 1) % n]);
                        p[0] * q[1] - q[0] * p[1]
                    })
                    .sum::<f64>()
            }
            Topology::Triangles(faces) => {
                faces
                    .iter()
                    .map(|&[a, b, c]| vec3::dot(v[a], vec3::cross(v[b], v[c])))
                    .sum::<f64>()
                    / 6.0
            }
        }
    }

    /// Diagonal length of the axis-aligned bounding box.
    pub fn bounding_box_diagonal(&self) -> f64 {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in &self.vertices {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        vec3::dist(hi, lo)
    }

    /// Mean simplex measure.
    pub fn mean_measure(&self) -> f64 {
        self.total_volume() / self.num_simplices() as f64
    }

    /// Unnormalized area vector (twice the area times the unit normal) of
    /// every face; empty for curves.
    pub fn face_area_vectors(&self) -> Vec<Vec3> {
        let v = &self.vertices;
        match &self.topology {
            Topology::Loop => Vec::new(),
            Topology::Triangles(faces) => faces
                .iter()
                .map(|&[a, b, c]| vec3::triangle_area_vector(v[a], v[b], v[c]))
                .collect(),
        }
    }

    /// Area-weighted vertex normals for surfaces, length-weighted vertex
    /// tangents for curves. Not normalized.
    pub fn vertex_directions(&self) -> Vec<Vec3> {
        let v = &self.vertices;
        let mut out = vec![[0.0; 3]; v.len()];
        match &self.topology {
            Topology::Loop => {
                let n = v.len();
                for i in 0..n {
                    let j = (i + 1) % n;
                    let e = vec3::sub(v[j], v[i]);
                    out[i] = vec3::add(out[i], e);
                    out[j] = vec3::add(out[j], e);
                }
            }
            Topology::Triangles(faces) => {
                for (f, n) in faces.iter().zip(self.face_area_vectors()) {
                    for &i in f {
                        out[i] = vec3::add(out[i], n);
                    }
                }
            }
        }
        out
    }

    /// Simplices whose direction disagrees with the surrounding vertex
    /// directions: a triangle whose normal points against the sum of its
    /// corner normals, or an edge running against the tangents at its ends.
    pub fn folded_simplices(&self) -> Vec<usize> {
        let dirs = self.vertex_directions();
        let v = &self.vertices;
        let mut out = Vec::new();
        match &self.topology {
            Topology::Loop => {
                let n = v.len();
                for i in 0..n {
                    let j = (i + 1) % n;
                    let e = vec3::sub(v[j], v[i]);
                    if vec3::dot(e, vec3::add(dirs[i], dirs[j])) <= 0.0 {
                        out.push(i);
                    }
                }
            }
            Topology::Triangles(faces) => {
                for (f, (tri, n)) in faces.iter().zip(self.face_area_vectors()).enumerate() {
                    let corner = tri.iter().fold([0.0; 3], |acc, &i| vec3::add(acc, dirs[i]));
                    if vec3::dot(n, corner) <= 0.0 {
                        out.push(f);
                    }
                }
            }
        }
        out
    }

    /// Applies `f` to every vertex.
    pub fn map_vertices(&self, f: impl Fn(Point) -> Point) -> Result<Self> {
        self.with_vertices(self.vertices.iter().map(|&p| f(p)).collect())
    }

    /// Uniform scaling by `alpha` about `center`.
    pub fn scaled_about(&self, center: Point, alpha: f64) -> Self {
        let vertices = self
            .vertices
            .iter()
            .map(|&p| vec3::add(center, vec3::scale(vec3::sub(p, center), alpha)))
            .collect();
        Self { vertices, topology: self.topology.clone() }
    }

    /// Checks every structural invariant and reports offenders.
    pub fn validate(&self) -> Diagnostics {
        let measures = self.measures();
        let degenerate = degenerate_simplices(&measures);
        let mut checks = Vec::with_capacity(4);
        match &self.topology {
            Topology::Loop => {
                let closed = self.vertices.len() >= 3;
                checks.push(Check {
                    invariant: Invariant::Closed,
                    passed: closed,
                    simplices: Vec::new(),
                    edges: Vec::new(),
                    vertices: Vec::new(),
                });
                checks.push(Check::pass(Invariant::Oriented));
                checks.push(Check::with_simplices(Invariant::NonDegenerate, degenerate));
                checks.push(Check::pass(Invariant::Connected));
            }
            Topology::Triangles(faces) => {
                let mut edges: BTreeMap<[usize; 2], EdgeUse> = BTreeMap::new();
                let mut repeated = Vec::new();
                for (f, &[a, b, c]) in faces.iter().enumerate() {
                    if a == b || b == c || a == c {
                        repeated.push(f);
                        continue;
                    }
                    for (p, q) in [(a, b), (b, c), (c, a)] {
                        let key = [p.min(q), p.max(q)];
                        let e = edges.entry(key).or_default();
                        e.faces.push(f);
                        if p < q {
                            e.forward += 1;
                        } else {
                            e.backward += 1;
                        }
                    }
                }
                let boundary: Vec<[usize; 2]> =
                    edges.iter().filter(|(_, e)| e.faces.len() != 2).map(|(k, _)| *k).collect();
                let misoriented: Vec<[usize; 2]> = edges
                    .iter()
                    .filter(|(_, e)| e.faces.len() == 2 && (e.forward != 1 || e.backward != 1))
                    .map(|(k, _)| *k)
                    .collect();
                let mut nondeg = degenerate;
                nondeg.extend(repeated);
                nondeg.sort_unstable();
                nondeg.dedup();

                checks.push(Check {
                    invariant: Invariant::Closed,
                    passed: boundary.is_empty(),
                    simplices: Vec::new(),
                    edges: boundary,
                    vertices: Vec::new(),
                });
                checks.push(Check {
                    invariant: Invariant::Oriented,
                    passed: misoriented.is_empty(),
                    simplices: Vec::new(),
                    edges: misoriented,
                    vertices: Vec::new(),
                });
                checks.push(Check::with_simplices(Invariant::NonDegenerate, nondeg));
                checks.push(connectivity(self.vertices.len(), faces, &edges));
            }
        }
        Diagnostics { checks }
    }

    /// Returns `self` when every invariant holds.
    pub fn checked(self) -> Result<Self> {
        let d = self.validate();
        if d.is_valid() {
            Ok(self)
        } else {
            Err(Error::Invalid(format!("{d}")))
        }
    }
}

/// Vertex ids of one simplex.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SimplexVertices {
    Edge([usize; 2]),
    Triangle([usize; 3]),
}

impl SimplexVertices {
    pub fn as_slice(&self) -> &[usize] {
        match self {
            SimplexVertices::Edge(e) => e,
            SimplexVertices::Triangle(t) => t,
        }
    }
}

#[derive(Default)]
struct EdgeUse {
    faces: Vec<usize>,
    forward: usize,
    backward: usize,
}

fn is_degenerate(measure: f64, mean: f64) -> bool {
    !(measure > 0.0) || measure < DEGENERATE_RELATIVE * mean
}

pub(crate) fn degenerate_simplices(measures: &[f64]) -> Vec<usize> {
    let mean = measures.iter().sum::<f64>() / measures.len().max(1) as f64;
    measures
        .iter()
        .enumerate()
        .filter(|(_, &m)| is_degenerate(m, mean))
        .map(|(i, _)| i)
        .collect()
}

fn connectivity(
    num_vertices: usize,
    faces: &[[usize; 3]],
    edges: &BTreeMap<[usize; 2], EdgeUse>,
) -> Check {
    let mut parent: Vec<usize> = (0..faces.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for e in edges.values() {
        for w in e.faces.windows(2) {
            let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
            if a != b {
                parent[a] = b;
            }
        }
    }
    let root = find(&mut parent, 0);
    let detached: Vec<usize> =
        (0..faces.len()).filter(|&f| find(&mut parent, f) != root).collect();
    let mut used = vec![false; num_vertices];
    for f in faces {
        for &v in f {
            used[v] = true;
        }
    }
    let isolated: Vec<usize> = (0..num_vertices).filter(|&v| !used[v]).collect();
    Check {
        invariant: Invariant::Connected,
        passed: detached.is_empty() && isolated.is_empty(),
        simplices: detached,
        edges: Vec::new(),
        vertices: isolated,
    }
}

/// The structural invariants of a [`DiscreteManifold`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Invariant {
    Closed,
    Oriented,
    NonDegenerate,
    Connected,
}

impl fmt::Display for Invariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Invariant::Closed => "closed",
            Invariant::Oriented => "consistently oriented",
            Invariant::NonDegenerate => "non-degenerate",
            Invariant::Connected => "connected",
        })
    }
}

/// Outcome of one invariant check with the offending ids.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub invariant: Invariant,
    pub passed: bool,
    pub simplices: Vec<usize>,
    pub edges: Vec<[usize; 2]>,
    pub vertices: Vec<usize>,
}

impl Check {
    fn pass(invariant: Invariant) -> Self {
        Self { invariant, passed: true, simplices: Vec::new(), edges: Vec::new(), vertices: Vec::new() }
    }

    fn with_simplices(invariant: Invariant, simplices: Vec<usize>) -> Self {
        Self {
            invariant,
            passed: simplices.is_empty(),
            simplices,
            edges: Vec::new(),
            vertices: Vec::new(),
        }
    }
}

/// Result of [`DiscreteManifold::validate`].
#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostics {
    pub checks: Vec<Check>,
}

impl Diagnostics {
    pub fn is_valid(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, invariant: Invariant) -> Option<&Check> {
        self.checks.iter().find(|c| c.invariant == invariant)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for Diagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for c in &self.checks {
            if !first {
                f.write_str("; ")?;
            }
            first = false;
            if c.passed {
                write!(f, "{}: ok", c.invariant)?;
                continue;
            }
            match c.invariant {
                Invariant::Closed if c.edges.is_empty() => write!(f, "not closed")?,
                Invariant::Closed => write!(f, "not closed, boundary edges {:?}", c.edges)?,
                Invariant::Oriented => write!(f, "not consistently oriented, edges {:?}", c.edges)?,
                Invariant::NonDegenerate => write!(f, "degenerate simplex {:?}", c.simplices)?,
                Invariant::Connected => write!(
                    f,
                    "not connected, detached simplices {:?}, isolated vertices {:?}",
                    c.simplices, c.vertices
                )?,
            }
        }
        Ok(())
    }
}
