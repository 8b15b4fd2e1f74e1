use alloc::collections::VecDeque;

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;


use super::MoserSolveOptions;
use crate::geometry::{Dim, DiscreteManifold, Point, DEGENERATE_RELATIVE};
use crate::maps::CorrespondenceMap;
use crate::vec3::{self, Vec3};
use crate::{Error, Result};

/// Armijo sufficient-decrease constant.
const ARMIJO: f64 = 1e-4;
/// Steps below this fraction of the mean edge length count as underflow.
const MIN_STEP: f64 = 1e-12;

/// Result of [`relax_surface`].
#[derive(Clone, Debug, PartialEq)]
pub struct RelaxOutcome {
    pub map: CorrespondenceMap,
    /// Final maximum relative deviation of the Jacobian from its mean.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Total distortion before the first and after every accepted step.
    pub phi_history: Vec<f64>,
}

/// Equalizes the Jacobian of a surface map by moving image vertices along
/// the image surface.
///
/// The descent objective is the excess `Φ − phi_min(Vol(M), Vol(image))`,
/// which vanishes exactly when the Jacobian is constant and, unlike `Φ`,
/// does not reward shrinking the image by cutting corners of the surface.
/// Accepted steps must also not increase `Φ`.
///
/// Each iteration takes the gradient of the excess with respect to the image
/// vertex positions and restricts it at every vertex to the plane of the
/// reference face the vertex lies on. The search direction is that gradient
/// preconditioned by a limited-memory BFGS estimate built from previous
/// steps, restricted the same way. If no step along it is accepted, the plain
/// negative gradient is tried, then the common descent direction of the
/// excess and `Φ`. Steps are capped so no vertex moves more than
/// `opts.step_scale` mean edge lengths, halved until accepted, and the moved
/// vertices are snapped back to the closest point of the original image
/// surface. Steps that fold or collapse a triangle are halved as well. Stops
/// once the residual reaches `opts.rel_tol` or after `opts.max_iters`
/// accepted steps.
///
/// Vertices start on corners of the image surface, and any move off a convex
/// corner shrinks the image. When the image is markedly smaller than the
/// source that raises `Φ` at first order, so such maps usually end in
/// [`Error::Stagnation`] before the first step.
pub fn relax_surface(map: &CorrespondenceMap, opts: &MoserSolveOptions) -> Result<RelaxOutcome> {
    opts.check()?;
    if map.source().dim() != Dim::Surface {
        return Err(Error::Domain("relax_surface needs a surface map"));
    }
    // Validates the input: degenerate or folded images are rejected here.
    map.jacobian_field()?;

    let source = map.source();
    let faces = source.faces().expect("surface");
    let weights = source.checked_measures()?;
    let surface = ReferenceSurface::new(map.image());
    let h = surface.mean_edge;

    let mut x: Vec<Point> = map.targets().to_vec();
    let mut home = surface.initial_homes(faces, x.len());
    let mut state = evaluate(faces, &weights, &x, &home, &surface)
        .ok_or(Error::Invalid("input image is folded against itself".into()))?;
    let mut history = vec![state.phi];
    let mut memory = Memory::default();
    let mut grad = tangential_gradient(faces, &weights, &x, None, &surface.planes(&home));
    let mut iterations = 0;

    while state.residual > opts.rel_tol && iterations < opts.max_iters {
        // Each vertex moves in the plane of the reference face it lies on,
        // so first-order predictions match the re-projected step.
        let normals = surface.planes(&home);
        let mut candidates = Vec::with_capacity(3);
        if !memory.is_empty() {
            candidates.push(memory.direction(&grad, &normals));
        }
        candidates.push(grad.iter().map(|g| vec3::scale(*g, -1.0)).collect());
        candidates.push(common_descent(&grad, &tangential_gradient(faces, &weights, &x, Some(1.0), &normals)));
        let mut step = None;
        for (i, dir) in candidates.iter().enumerate() {
            let slope = dot_all(&grad, dir);
            if !(slope < 0.0) {
                continue;
            }
            step = line_search(dir, slope, &state, opts.step_scale * h, |alpha| {
                let (y, y_home) = surface.project_all(
                    x.iter().zip(dir).map(|(p, d)| vec3::add(*p, vec3::scale(*d, alpha))),
                    &home,
                );
                let next = evaluate(faces, &weights, &y, &y_home, &surface)?;
                Some((y, y_home, next))
            });
            if step.is_some() {
                if i > 0 {
                    // A stale curvature model pointed the wrong way.
                    memory.clear();
                }
                break;
            }
        }
        let Some((y, y_home, next)) = step else {
            return Err(Error::Stagnation { residual: state.residual, iterations });
        };
        let next_grad = tangential_gradient(faces, &weights, &y, None, &surface.planes(&y_home));
        memory.push(
            y.iter().zip(&x).map(|(a, b)| vec3::sub(*a, *b)).collect(),
            next_grad.iter().zip(&grad).map(|(a, b)| vec3::sub(*a, *b)).collect(),
        );
        x = y;
        home = y_home;
        grad = next_grad;
        state = next;
        iterations += 1;
        debug_assert!(state.phi <= *history.last().unwrap());
        history.push(state.phi);
    }

    Ok(RelaxOutcome {
        map: CorrespondenceMap::new(source.clone(), x)?,
        residual: state.residual,
        iterations,
        converged: state.residual <= opts.rel_tol,
        phi_history: history,
    })
}

/// Backtracking from a step that moves no vertex more than `max_move`.
/// Accepts on Armijo decrease of the excess together with no increase of `Φ`.
/// `trial(alpha)` moves every vertex by `alpha·dir`, re-projects and
/// evaluates; `None` means a folded or collapsed triangle.
fn line_search<T>(
    dir: &[Vec3],
    slope: f64,
    state: &State,
    max_move: f64,
    trial: impl Fn(f64) -> Option<(T, Vec<usize>, State)>,
) -> Option<(T, Vec<usize>, State)> {
    let dmax = dir.iter().map(|d| vec3::norm(*d)).fold(0.0, f64::max);
    let mut alpha = (max_move / dmax).min(1.0);
    while alpha * dmax >= MIN_STEP * max_move {
        if let Some((y, y_home, next)) = trial(alpha) {
            if next.excess <= state.excess + ARMIJO * alpha * slope && next.phi <= state.phi {
                return Some((y, y_home, next));
            }
        }
        alpha *= 0.5;
    }
    None
}

/// Negated minimum-norm point of the segment between gradients `a` and `b`.
/// It has negative inner product with both unless they point in opposite
/// directions.
fn common_descent(a: &[Vec3], b: &[Vec3]) -> Vec<Vec3> {
    let (aa, ab, bb) = (dot_all(a, a), dot_all(a, b), dot_all(b, b));
    let denom = aa - 2.0 * ab + bb;
    // Weight on `a` minimizing |λa + (1 − λ)b|.
    let lambda = if denom > 0.0 { ((bb - ab) / denom).clamp(0.0, 1.0) } else { 0.5 };
    a.iter()
        .zip(b)
        .map(|(a, b)| vec3::scale(vec3::add(vec3::scale(*a, lambda), vec3::scale(*b, 1.0 - lambda)), -1.0))
        .collect()
}

const MEMORY: usize = 8;

/// Curvature pairs `(s, y, 1/⟨s, y⟩)` of the most recent steps.
#[derive(Default)]
struct Memory {
    pairs: VecDeque<(Vec<Vec3>, Vec<Vec3>, f64)>,
}

impl Memory {
    fn clear(&mut self) {
        self.pairs.clear();
    }

    fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    fn push(&mut self, s: Vec<Vec3>, y: Vec<Vec3>) {
        let sy = dot_all(&s, &y);
        if !(sy > 1e-12 * dot_all(&s, &s).sqrt() * dot_all(&y, &y).sqrt()) {
            return;
        }
        if self.pairs.len() == MEMORY {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y, 1.0 / sy));
    }

    /// Two-loop recursion for `−H g`, projected onto the planes with the
    /// given normals.
    fn direction(&self, grad: &[Vec3], normals: &[Vec3]) -> Vec<Vec3> {
        let mut q: Vec<Vec3> = grad.to_vec();
        let mut alphas = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let a = rho * dot_all(s, &q);
            axpy(&mut q, -a, y);
            alphas.push(a);
        }
        if let Some((s, y, _)) = self.pairs.back() {
            let gamma = dot_all(s, y) / dot_all(y, y);
            q.iter_mut().for_each(|v| *v = vec3::scale(*v, gamma));
        }
        for ((s, y, rho), a) in self.pairs.iter().zip(alphas.iter().rev()) {
            let b = rho * dot_all(y, &q);
            axpy(&mut q, a - b, s);
        }
        q.iter().zip(normals).map(|(v, n)| vec3::scale(vec3::project_tangent(*v, *n), -1.0)).collect()
    }
}

fn dot_all(a: &[Vec3], b: &[Vec3]) -> f64 {
    a.iter().zip(b).map(|(a, b)| vec3::dot(*a, *b)).sum()
}

fn axpy(out: &mut [Vec3], a: f64, x: &[Vec3]) {
    out.iter_mut().zip(x).for_each(|(o, x)| *o = vec3::add(*o, vec3::scale(*x, a)));
}

struct State {
    phi: f64,
    /// `Φ − phi_min(Vol(M), Vol(image))`, the part of `Φ` that a map with
    /// the same image volume could remove.
    excess: f64,
    residual: f64,
}

/// Total distortion and residual of image positions `x`, or `None` when a
/// triangle is degenerate or faces against the reference surface.
fn evaluate(
    faces: &[[usize; 3]],
    weights: &[f64],
    x: &[Point],
    home: &[usize],
    surface: &ReferenceSurface,
) -> Option<State> {
    let mut areas = Vec::with_capacity(faces.len());
    for &[a, b, c] in faces {
        let n = vec3::triangle_area_vector(x[a], x[b], x[c]);
        let reference = vec3::add(
            surface.normals[home[a]],
            vec3::add(surface.normals[home[b]], surface.normals[home[c]]),
        );
        if vec3::dot(n, reference) <= 0.0 {
            return None;
        }
        areas.push(0.5 * vec3::norm(n));
    }
    let total_area: f64 = areas.iter().sum();
    let mean_area = total_area / areas.len() as f64;
    if areas.iter().any(|&a| a < DEGENERATE_RELATIVE * mean_area) {
        return None;
    }
    let expected = total_area / weights.iter().sum::<f64>();
    let mut phi = 0.0;
    let mut excess = 0.0;
    let mut residual: f64 = 0.0;
    for (a, w) in areas.iter().zip(weights) {
        let j = a / w;
        phi += (j - 1.0) * (j - 1.0) * w;
        excess += (j - expected) * (j - expected) * w;
        residual = residual.max(((j - expected) / expected).abs());
    }
    Some(State { phi, excess, residual })
}

/// Gradient of `Σ (A_f/w_f − c)² w_f` with the component along `normals`
/// removed at each vertex. `c` is the given constant, or by default `ΣA_f / Σw_f` as a
/// function of the positions (the excess).
fn tangential_gradient(
    faces: &[[usize; 3]],
    weights: &[f64],
    x: &[Point],
    c: Option<f64>,
    normals: &[Vec3],
) -> Vec<Vec3> {
    let mut grad = vec![[0.0; 3]; x.len()];
    let mean = c.unwrap_or_else(|| {
        let total: f64 = faces.iter().map(|&[a, b, c]| vec3::triangle_area(x[a], x[b], x[c])).sum();
        total / weights.iter().sum::<f64>()
    });
    for (&[a, b, c], w) in faces.iter().zip(weights) {
        let (pa, pb, pc) = (x[a], x[b], x[c]);
        let n = vec3::triangle_area_vector(pa, pb, pc);
        let area = 0.5 * vec3::norm(n);
        let unit = vec3::scale(n, 0.5 / area);
        // For the excess, the terms from differentiating `c` sum to zero.
        let coeff = 2.0 * (area / w - mean);
        // ∂A/∂p_a = ½ n̂ × (p_c − p_b), cyclically.
        for (v, p, q) in [(a, pb, pc), (b, pc, pa), (c, pa, pb)] {
            let d = vec3::scale(vec3::cross(unit, vec3::sub(q, p)), coeff * 0.5);
            grad[v] = vec3::add(grad[v], d);
        }
    }
    grad.iter().zip(normals).map(|(g, n)| vec3::project_tangent(*g, *n)).collect()
}

/// The fixed image surface that vertices are constrained to.
struct ReferenceSurface {
    vertices: Vec<Point>,
    faces: Vec<[usize; 3]>,
    normals: Vec<Vec3>,
    centroids: Vec<Point>,
    radii: Vec<f64>,
    mean_edge: f64,
}

impl ReferenceSurface {
    fn new(image: &DiscreteManifold) -> Self {
        let vertices = image.vertices().to_vec();
        let faces = image.faces().expect("surface").to_vec();
        let normals = image.face_area_vectors().into_iter().map(vec3::normalize).collect();
        let mut centroids = Vec::with_capacity(faces.len());
        let mut radii = Vec::with_capacity(faces.len());
        let mut edge_sum = 0.0;
        for &[a, b, c] in &faces {
            let (pa, pb, pc) = (vertices[a], vertices[b], vertices[c]);
            let g = vec3::scale(vec3::add(pa, vec3::add(pb, pc)), 1.0 / 3.0);
            radii.push(vec3::dist(g, pa).max(vec3::dist(g, pb)).max(vec3::dist(g, pc)));
            centroids.push(g);
            edge_sum += vec3::dist(pa, pb) + vec3::dist(pb, pc) + vec3::dist(pc, pa);
        }
        let mean_edge = edge_sum / (3 * faces.len()) as f64;
        Self { vertices, faces, normals, centroids, radii, mean_edge }
    }

    /// Some face incident to each vertex.
    fn initial_homes(&self, faces: &[[usize; 3]], n: usize) -> Vec<usize> {
        let mut home = vec![0; n];
        for (f, tri) in faces.iter().enumerate() {
            for &v in tri {
                home[v] = f;
            }
        }
        home
    }

    /// Unit normal of each vertex's home face.
    fn planes(&self, home: &[usize]) -> Vec<Vec3> {
        home.iter().map(|&f| self.normals[f]).collect()
    }

    fn closest_on_face(&self, p: Point, f: usize) -> Point {
        let [a, b, c] = self.faces[f];
        vec3::closest_point_on_triangle(p, self.vertices[a], self.vertices[b], self.vertices[c])
    }

    /// Closest point over all faces, starting from the `hint` face to prune
    /// with bounding spheres.
    fn project(&self, p: Point, hint: usize) -> (Point, usize) {
        let mut best_q = self.closest_on_face(p, hint);
        let mut best_d = vec3::dist(p, best_q);
        let mut best_f = hint;
        for f in 0..self.faces.len() {
            if f == hint || vec3::dist(p, self.centroids[f]) - self.radii[f] > best_d {
                continue;
            }
            let q = self.closest_on_face(p, f);
            let d = vec3::dist(p, q);
            if d < best_d {
                best_d = d;
                best_q = q;
                best_f = f;
            }
        }
        (best_q, best_f)
    }

    fn project_all(
        &self,
        points: impl Iterator<Item = Point>,
        hints: &[usize],
    ) -> (Vec<Point>, Vec<usize>) {
        points.zip(hints).map(|(p, &h)| self.project(p, h)).unzip()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    #[test]
    fn constant_jacobian_is_returned_unchanged() {
        let src = shapes::icosphere(1, 1.0);
        let f = CorrespondenceMap::from_fn(src, |p| vec3::scale(p, 2.0)).unwrap();
        let out = relax_surface(&f, &MoserSolveOptions::default()).unwrap();
        assert!(out.converged);
        assert_eq!(out.iterations, 0);
        assert_eq!(out.map, f);
        assert!(out.residual < 1e-12);
    }

    #[test]
    fn rejects_curves() {
        let f = CorrespondenceMap::identity(shapes::unit_square(1));
        assert!(matches!(
            relax_surface(&f, &MoserSolveOptions::default()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let src = shapes::icosphere(1, 1.0);
        let mut t = src.vertices().to_vec();
        t[3] = vec3::add(t[3], [0.05, -0.02, 0.01]);
        t[17] = vec3::scale(t[17], 1.1);
        let faces = src.faces().unwrap();
        let w = src.measures();
        let phi = |x: &[Point]| -> f64 {
            let areas: Vec<f64> = faces.iter().map(|&[a, b, c]| vec3::triangle_area(x[a], x[b], x[c])).collect();
            let mean = areas.iter().sum::<f64>() / w.iter().sum::<f64>();
            areas.iter().zip(&w).map(|(a, w)| (a / w - mean) * (a / w - mean) * w).sum()
        };
        // Raw gradient: compare the tangential part with the tangential part
        // of a central-difference gradient.
        let normals = CorrespondenceMap::new(src.clone(), t.clone())
            .unwrap()
            .image()
            .vertex_directions();
        let g = tangential_gradient(faces, &w, &t, None, &normals);
        let eps = 1e-6;
        for v in [3usize, 17, 30] {
            let mut fd = [0.0; 3];
            for k in 0..3 {
                let mut plus = t.clone();
                let mut minus = t.clone();
                plus[v][k] += eps;
                minus[v][k] -= eps;
                fd[k] = (phi(&plus) - phi(&minus)) / (2.0 * eps);
            }
            let fd = vec3::project_tangent(fd, normals[v]);
            assert!(vec3::dist(fd, g[v]) < 1e-7 * (1.0 + vec3::norm(fd)), "vertex {v}");
        }
    }

    fn drift(a: &DiscreteManifold, b: &DiscreteManifold) -> f64 {
        let v = a.vertices();
        let centroids = a.faces().unwrap().iter().map(|&[i, j, k]| {
            vec3::scale(vec3::add(v[i], vec3::add(v[j], v[k])), 1.0 / 3.0)
        });
        v.iter()
            .copied()
            .chain(centroids)
            .map(|p| vec3::dist(p, crate::oracle::closest_point_on_surface(b, p).0))
            .fold(0.0, f64::max)
    }

    #[test]
    fn mild_swirl_relaxes_and_stays_on_the_image() {
        let f = crate::oracle::swirl_map(&shapes::icosphere(3, 1.0), 7, 2.0, 0.03).unwrap();
        let out = relax_surface(&f, &MoserSolveOptions::default()).unwrap();
        assert!(out.converged);
        assert!(out.map.is_minimal_map(1e-2).unwrap().minimal);
        assert!(out.phi_history.windows(2).all(|w| w[1] <= w[0]));
        let d = drift(out.map.image(), f.image()).max(drift(f.image(), out.map.image()));
        assert!(d < 1e-3 * f.image().bounding_box_diagonal(), "{d}");
    }

    #[test]
    fn one_displaced_vertex_moves_back() {
        let src = shapes::icosphere(2, 1.0);
        let mut t = src.vertices().to_vec();
        let n = vec3::normalize(t[5]);
        let along = vec3::normalize(vec3::project_tangent([1.0, 0.3, -0.2], n));
        t[5] = vec3::normalize(vec3::add(t[5], vec3::scale(along, 0.04)));
        let f = CorrespondenceMap::new(src, t).unwrap();
        let before = f.is_minimal_map(1.0).unwrap().max_deviation;
        let out = relax_surface(&f, &MoserSolveOptions::default()).unwrap();
        assert!(before > 0.1 && out.converged, "{before} {}", out.residual);
    }

    #[test]
    fn shrinking_swirl_stagnates() {
        let f = crate::oracle::swirl_map(&shapes::icosphere(2, 1.0), 7, 0.5, 0.1).unwrap();
        assert!(matches!(
            relax_surface(&f, &MoserSolveOptions::default()),
            Err(Error::Stagnation { iterations: 0, .. })
        ));
    }
}
