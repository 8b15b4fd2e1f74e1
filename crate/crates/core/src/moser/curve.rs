use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::geometry::{Dim, Point};
use crate::maps::CorrespondenceMap;
use crate::{vec3, Error, Result};

/// Exact Moser reparametrization of a loop map.
///
/// The walk starts at an image vertex. Walking forward along the image
/// polyline, each next vertex is placed at the first point whose chord
/// distance from the previous vertex is `c·ℓ_i`, with `ℓ_i` the source edge
/// length. The scale `c` is found by bisection so that the walk closes after
/// one lap. Every output vertex lies on a segment of the input image
/// polyline and every output edge has Jacobian exactly `c`.
///
/// On strongly non-convex images the first crossing can jump as `c` grows,
/// and the lap length then skips over the closing value. The walk is then
/// retried from the other image vertices, and after those from points
/// inside the image segments, until one closes without folding an edge back.
/// Source vertex 0 always maps to the walk's start.
pub fn reparametrize_curve(map: &CorrespondenceMap) -> Result<CorrespondenceMap> {
    if map.source().dim() != Dim::Curve {
        return Err(Error::Domain("reparametrize_curve needs a loop map"));
    }
    let lengths = map.source().checked_measures()?;
    let image = map.image();
    if let Some(&simplex) = crate::geometry::degenerate_simplices(&image.measures()).first() {
        return Err(Error::DegenerateImage { simplex });
    }
    let poly = Polyline::new(image.vertices());
    let m = poly.pts.len();
    let starts = (0..START_FRACTIONS).flat_map(|j| (0..m).map(move |k| (k, j as f64 / START_FRACTIONS as f64)));
    let mut smallest_gap = f64::INFINITY;
    let mut folded = None;
    for start in starts {
        match poly.close(&lengths, start) {
            Ok(points) => {
                let out = CorrespondenceMap::new(map.source().clone(), points)?;
                match out.jacobian_field() {
                    Ok(_) => return Ok(out),
                    Err(e) => {
                        folded.get_or_insert(e);
                    }
                }
            }
            Err(gap) => smallest_gap = smallest_gap.min(gap),
        }
    }
    Err(folded.unwrap_or(Error::ClosureFailed { gap: smallest_gap }))
}

const ROOT_SLACK: f64 = 1e-12;
/// Start positions tried per image segment.
const START_FRACTIONS: usize = 8;

struct Polyline<'a> {
    pts: &'a [Point],
    /// Arclength at the start of each segment.
    starts: Vec<f64>,
    length: f64,
}

struct Walk {
    points: Vec<Point>,
    /// Arclength travelled by the final step, which should land back on the
    /// first vertex after one lap.
    travelled: f64,
}

impl<'a> Polyline<'a> {
    fn new(pts: &'a [Point]) -> Self {
        let m = pts.len();
        let mut starts = Vec::with_capacity(m);
        let mut acc = 0.0;
        for i in 0..m {
            starts.push(acc);
            acc += vec3::dist(pts[i], pts[(i + 1) % m]);
        }
        Self { pts, starts, length: acc }
    }

    fn segment(&self, k: usize) -> (Point, Point) {
        let m = self.pts.len();
        (self.pts[k % m], self.pts[(k + 1) % m])
    }

    fn arclength(&self, k: usize, s: f64) -> f64 {
        let m = self.pts.len();
        let (a, b) = self.segment(k);
        (k / m) as f64 * self.length + self.starts[k % m] + s * vec3::dist(a, b)
    }

    /// First point after `(k, s)` at chord distance `r` from `center`.
    /// Gives up after two laps.
    fn advance(&self, mut k: usize, mut s: f64, center: Point, r: f64) -> Option<(usize, f64, Point)> {
        let limit = k + 2 * self.pts.len();
        while k < limit {
            let (a, b) = self.segment(k);
            let e = vec3::sub(b, a);
            let d = vec3::sub(a, center);
            let qa = vec3::dot(e, e);
            let qb = vec3::dot(d, e);
            let qc = vec3::dot(d, d) - r * r;
            let disc = qb * qb - qa * qc;
            if disc >= 0.0 {
                // Slack so a crossing exactly at a vertex is not lost to
                // rounding on both adjacent segments.
                let root = (-qb + disc.sqrt()) / qa;
                if root <= 1.0 + ROOT_SLACK && root >= s - ROOT_SLACK {
                    let root = root.clamp(s, 1.0);
                    let p = vec3::add(a, vec3::scale(e, root));
                    return Some((k, root, p));
                }
            }
            k += 1;
            s = 0.0;
        }
        None
    }

    /// Bisects for the scale at which the walk from `start` (segment,
    /// fraction) closes. On failure returns the closing gap.
    fn close(&self, lengths: &[f64], start: (usize, f64)) -> core::result::Result<Vec<Point>, f64> {
        let source_len: f64 = lengths.iter().sum();
        let lap = self.arclength(start.0, start.1) + self.length;
        let mut lo = 0.0;
        // Chords never exceed arcs, so `hi` already walks at least one lap.
        let mut hi = self.length / source_len;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            match self.walk(lengths, mid, start) {
                Some(w) if w.travelled < lap => lo = mid,
                _ => hi = mid,
            }
        }
        let walk = self.walk(lengths, hi, start).ok_or(f64::INFINITY)?;
        let gap = (walk.travelled - lap).abs();
        if gap > 1e-9 * self.length {
            return Err(gap);
        }
        Ok(walk.points)
    }

    fn walk(&self, lengths: &[f64], c: f64, start: (usize, f64)) -> Option<Walk> {
        let mut points = Vec::with_capacity(lengths.len());
        let (mut k, mut s) = start;
        let (a, b) = self.segment(k);
        let mut p = vec3::add(a, vec3::scale(vec3::sub(b, a), s));
        for &l in lengths {
            points.push(p);
            let (nk, ns, np) = self.advance(k, s, p, c * l)?;
            k = nk;
            s = ns;
            p = np;
        }
        Some(Walk { points, travelled: self.arclength(k, s) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DiscreteManifold;
    use crate::shapes;

    fn assert_constant_jacobian(map: &CorrespondenceMap, expected: f64, tol: f64) {
        let field = map.jacobian_field().unwrap();
        for (i, j) in field.values.iter().enumerate() {
            assert!(((j - expected) / expected).abs() < tol, "edge {i}: J = {j}, expected {expected}");
        }
    }

    /// Distance from `p` to the closed polyline `pts`.
    fn distance_to_polyline(p: Point, pts: &[Point]) -> f64 {
        (0..pts.len())
            .map(|i| {
                let (a, b) = (pts[i], pts[(i + 1) % pts.len()]);
                let e = vec3::sub(b, a);
                let t = (vec3::dot(vec3::sub(p, a), e) / vec3::dot(e, e)).clamp(0.0, 1.0);
                vec3::dist(p, vec3::add(a, vec3::scale(e, t)))
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn constant_jacobian_input_is_a_fixed_point() {
        let src = shapes::regular_polygon(32, 1.0);
        let f = CorrespondenceMap::from_fn(src, |p| vec3::scale(p, 3.0)).unwrap();
        let g = reparametrize_curve(&f).unwrap();
        for (a, b) in f.targets().iter().zip(g.targets()) {
            assert!(vec3::dist(*a, *b) < 1e-12);
        }
    }

    #[test]
    fn dragged_square_vertex_is_restored() {
        let src = shapes::unit_square(2);
        let mut t = src.vertices().to_vec();
        t[1] = [0.3, 0.0, 0.0];
        t[5] = [0.8, 1.0, 0.0];
        let f = CorrespondenceMap::new(src.clone(), t).unwrap();
        assert!(!f.is_minimal_map(1e-3).unwrap().minimal);
        let g = reparametrize_curve(&f).unwrap();
        assert_constant_jacobian(&g, 1.0, 1e-12);
        for (a, b) in g.targets().iter().zip(src.vertices()) {
            assert!(vec3::dist(*a, *b) < 1e-12);
        }
    }

    #[test]
    fn circle_to_clustered_ellipse() {
        let src = shapes::regular_polygon(64, 1.0);
        let img = shapes::ellipse_through(&shapes::clustered_angles(64, 0.6), 2.0, 1.0);
        let f = CorrespondenceMap::between(src, img.clone()).unwrap();
        let g = reparametrize_curve(&f).unwrap();
        let c = g.image().total_volume() / g.source().total_volume();
        assert_constant_jacobian(&g, c, 1e-12);
        for p in g.targets() {
            assert!(distance_to_polyline(*p, img.vertices()) < 1e-12);
        }
        // The chord walk can only shorten the loop, and only slightly.
        let ln = img.total_volume();
        assert!(g.image().total_volume() <= ln * (1.0 + 1e-14));
        assert!(g.image().total_volume() > ln * (1.0 - 1e-2));
        assert!(g.is_minimal_map(1e-12).unwrap().minimal);
    }

    #[test]
    fn rejects_surfaces() {
        let f = CorrespondenceMap::identity(shapes::icosahedron(1.0));
        assert!(matches!(reparametrize_curve(&f), Err(Error::Domain(_))));
    }

    #[test]
    fn degenerate_image_is_reported() {
        let src = shapes::unit_square(1);
        let img = DiscreteManifold::curve([[0.0, 0.0], [0.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap();
        let f = CorrespondenceMap::between(src, img).unwrap();
        assert_eq!(reparametrize_curve(&f), Err(Error::DegenerateImage { simplex: 0 }));
    }
}
