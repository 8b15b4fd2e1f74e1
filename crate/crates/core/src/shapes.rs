//! Standard fixtures: regular polygons, ellipses, squares, the regular
//! tetrahedron and icospheres.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::geometry::{DiscreteManifold, Point};
use crate::vec3;

/// Regular `n`-gon inscribed in the circle of radius `radius`, counter-clockwise,
/// first vertex on the positive x axis.
pub fn regular_polygon(n: usize, radius: f64) -> DiscreteManifold {
    let pts = (0..n).map(|i| {
        let a = 2.0 * PI * i as f64 / n as f64;
        [radius * a.cos(), radius * a.sin()]
    });
    DiscreteManifold::curve(pts).expect("n >= 2")
}

/// Polygon through the ellipse points `(a cos θ, b sin θ)` at the given
/// parameter angles.
pub fn ellipse_through(angles: &[f64], a: f64, b: f64) -> DiscreteManifold {
    DiscreteManifold::curve(angles.iter().map(|&t| [a * t.cos(), b * t.sin()]))
        .expect("at least 2 angles")
}

/// Ellipse polygon with `n` vertices at equally spaced parameter angles.
pub fn ellipse_polygon(n: usize, a: f64, b: f64) -> DiscreteManifold {
    let angles: Vec<f64> = (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect();
    ellipse_through(&angles, a, b)
}

/// Angles `θ_i = 2πi/n + c·sin(2πi/n)`, clustering vertices near `θ = π`.
/// `|c| < 1` keeps the angles increasing.
pub fn clustered_angles(n: usize, c: f64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let u = 2.0 * PI * i as f64 / n as f64;
            u + c * u.sin()
        })
        .collect()
}

/// Unit square `[0,1]²` as a counter-clockwise loop, each side split into
/// `per_side` equal edges.
pub fn unit_square(per_side: usize) -> DiscreteManifold {
    let k = per_side.max(1);
    let corners = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    let mut pts = Vec::with_capacity(4 * k);
    for s in 0..4 {
        let (p, q) = (corners[s], corners[(s + 1) % 4]);
        for j in 0..k {
            let t = j as f64 / k as f64;
            pts.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    DiscreteManifold::curve(pts).expect("square has 4 vertices")
}

/// Regular tetrahedron with unit edge length, centered at the origin,
/// outward oriented.
pub fn regular_tetrahedron() -> DiscreteManifold {
    let s = 1.0 / (2.0 * 2f64.sqrt());
    let v = vec![
        [s, s, s],
        [s, -s, -s],
        [-s, s, -s],
        [-s, -s, s],
    ];
    let faces = vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]];
    DiscreteManifold::surface(v, faces).expect("valid indices")
}

/// Regular icosahedron inscribed in the sphere of radius `radius`, outward
/// oriented.
pub fn icosahedron(radius: f64) -> DiscreteManifold {
    let (v, f) = icosahedron_raw();
    let v = v.into_iter().map(|p| vec3::scale(vec3::normalize(p), radius)).collect();
    DiscreteManifold::surface(v, f).expect("valid indices")
}

fn icosahedron_raw() -> (Vec<Point>, Vec<[usize; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let v = vec![
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
    ];
    let f = vec![
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
    (v, f)
}

/// Icosphere: the icosahedron with every face split into four `subdivisions`
/// times, vertices pushed onto the sphere of radius `radius`.
///
/// Vertex counts are `10·4^s + 2` (12, 42, 162, 642, ...).
pub fn icosphere(subdivisions: usize, radius: f64) -> DiscreteManifold {
    let (raw, mut faces) = icosahedron_raw();
    let mut v: Vec<Point> = raw.into_iter().map(vec3::normalize).collect();
    for _ in 0..subdivisions {
        let mut midpoint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut mid = |a: usize, b: usize, v: &mut Vec<Point>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoint.entry(key).or_insert_with(|| {
                v.push(vec3::normalize(vec3::add(v[a], v[b])));
                v.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = mid(a, b, &mut v);
            let bc = mid(b, c, &mut v);
            let ca = mid(c, a, &mut v);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    let v = v.into_iter().map(|p| vec3::scale(p, radius)).collect();
    DiscreteManifold::surface(v, faces).expect("valid indices")
}
