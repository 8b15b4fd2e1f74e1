use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use super::SplitMix64;
use crate::geometry::{Dim, DiscreteManifold, Point};
use crate::maps::CorrespondenceMap;
use crate::morph::{uniform_times, Morph};
use crate::vec3::{self, Vec3};
use crate::{Error, Result};

const ATTEMPTS: usize = 100;

/// Closest point of a triangle mesh to `p`, with the index of the face it
/// lies on. Brute force over all faces.
pub fn closest_point_on_surface(surface: &DiscreteManifold, p: Point) -> (Point, usize) {
    let v = surface.vertices();
    let faces = surface.faces().expect("closest_point_on_surface needs a surface");
    let mut best = (p, 0);
    let mut best_d = f64::INFINITY;
    for (f, &[a, b, c]) in faces.iter().enumerate() {
        let q = vec3::closest_point_on_triangle(p, v[a], v[b], v[c]);
        let d = vec3::dist(p, q);
        if d < best_d {
            best_d = d;
            best = (q, f);
        }
    }
    best
}

/// Length of the shortest edge at each vertex.
fn local_scale(m: &DiscreteManifold) -> Vec<f64> {
    let v = m.vertices();
    let mut out = alloc::vec![f64::INFINITY; v.len()];
    let mut visit = |a: usize, b: usize| {
        let d = vec3::dist(v[a], v[b]);
        out[a] = out[a].min(d);
        out[b] = out[b].min(d);
    };
    match m.faces() {
        None => (0..v.len()).for_each(|i| visit(i, (i + 1) % v.len())),
        Some(faces) => faces.iter().for_each(|&[a, b, c]| {
            visit(a, b);
            visit(b, c);
            visit(c, a);
        }),
    }
    out
}

/// Random unit tangent at a vertex with direction `n` (surface normal).
fn random_tangent(rng: &mut SplitMix64, n: Vec3) -> Vec3 {
    loop {
        let v = [rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)];
        let t = vec3::project_tangent(v, n);
        if vec3::norm(t) > 1e-3 {
            return vec3::normalize(t);
        }
    }
}

/// Seeded tangential perturbation of `manifold`, as a map from `manifold`
/// to the perturbed copy.
///
/// Loops: every vertex slides along one of its edges by up to
/// `magnitude/2` of the shorter adjacent edge. Meshes: every vertex moves in
/// its tangent plane by up to `magnitude/2` of its shortest edge and is
/// snapped back to the closest point of the mesh. Draws that collapse or
/// flip a simplex are redrawn, at most 100 times.
pub fn random_map(manifold: &DiscreteManifold, seed: u64, magnitude: f64) -> Result<CorrespondenceMap> {
    if !(magnitude >= 0.0) {
        return Err(Error::Domain("magnitude must be nonnegative"));
    }
    let mut rng = SplitMix64::new(seed);
    let v = manifold.vertices();
    let scale = local_scale(manifold);
    let normals = manifold.vertex_directions();
    for _ in 0..ATTEMPTS {
        let targets: Vec<Point> = match manifold.dim() {
            Dim::Curve => {
                let n = v.len();
                (0..n)
                    .map(|i| {
                        let u = rng.uniform(-1.0, 1.0);
                        let toward = if u >= 0.0 { v[(i + 1) % n] } else { v[(i + n - 1) % n] };
                        let e = vec3::sub(toward, v[i]);
                        let s = 0.5 * magnitude * u.abs() * scale[i] / vec3::norm(e);
                        vec3::add(v[i], vec3::scale(e, s.min(1.0)))
                    })
                    .collect()
            }
            Dim::Surface => (0..v.len())
                .map(|i| {
                    let t = random_tangent(&mut rng, normals[i]);
                    let r = 0.5 * magnitude * rng.next_f64() * scale[i];
                    let p = vec3::add(v[i], vec3::scale(t, r));
                    if magnitude == 0.0 {
                        v[i]
                    } else {
                        closest_point_on_surface(manifold, p).0
                    }
                })
                .collect(),
        };
        let map = CorrespondenceMap::new(manifold.clone(), targets)?;
        if map.jacobian_field().is_ok() && map.image().validate().is_valid() {
            return Ok(map);
        }
    }
    Err(Error::Generation { attempts: ATTEMPTS })
}

/// Seeded morph from `manifold` to `end_scale·manifold` (about the origin)
/// on `num_frames` uniform samples.
///
/// Frame `k` is `s(t)·(m + a_m(t)·r_m·τ_m)` with `s` the linear ramp from 1 to
/// `end_scale`, `τ_m` a unit tangent at `m`, `r_m` half the shortest edge at
/// `m` times `magnitude`, and
/// `a_m(t) = sin(πt)·(u_m cos 2πt + w_m sin 2πt)` for uniform `u_m, w_m` in
/// `[-1, 1]`. The offsets vanish at both ends and are smooth in `t`. Loop
/// tangents are the chords between neighbouring vertices.
pub fn random_morph(
    manifold: &DiscreteManifold,
    seed: u64,
    num_frames: usize,
    magnitude: f64,
    end_scale: f64,
) -> Result<Morph> {
    if !(magnitude >= 0.0 && end_scale > 0.0) {
        return Err(Error::Domain("magnitude must be nonnegative and end_scale positive"));
    }
    if num_frames < 2 {
        return Err(Error::Domain("a morph needs at least 2 frames"));
    }
    let mut rng = SplitMix64::new(seed);
    let v = manifold.vertices();
    let n = v.len();
    let scale = local_scale(manifold);
    let normals = manifold.vertex_directions();
    let times = uniform_times(num_frames);
    let last = num_frames - 1;
    for _ in 0..ATTEMPTS {
        let tangents: Vec<Vec3> = (0..n)
            .map(|i| match manifold.dim() {
                Dim::Curve => vec3::normalize(vec3::sub(v[(i + 1) % n], v[(i + n - 1) % n])),
                Dim::Surface => random_tangent(&mut rng, normals[i]),
            })
            .collect();
        let coeffs: Vec<(f64, f64)> =
            (0..n).map(|_| (rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0))).collect();
        let frames: Vec<Vec<Point>> = times
            .iter()
            .enumerate()
            .map(|(k, &t)| {
                if k == 0 {
                    return v.to_vec();
                }
                let s = if k == last { end_scale } else { 1.0 + (end_scale - 1.0) * t };
                let envelope = if k == last { 0.0 } else { (PI * t).sin() };
                let (c, sn) = ((2.0 * PI * t).cos(), (2.0 * PI * t).sin());
                (0..n)
                    .map(|i| {
                        let (u, w) = coeffs[i];
                        let a = envelope * (u * c + w * sn) * 0.5 * magnitude * scale[i];
                        vec3::scale(vec3::add(v[i], vec3::scale(tangents[i], a)), s)
                    })
                    .collect()
            })
            .collect();
        if let Ok(m) = Morph::new(manifold.clone(), times.clone(), frames) {
            if (1..num_frames).all(|k| m.frame(k).validate().is_valid()) {
                return Ok(m);
            }
        }
    }
    Err(Error::Generation { attempts: ATTEMPTS })
}

/// Radial map from a sphere mesh centred at the origin onto the sphere of
/// radius `radius`, followed by a seeded twist about a random axis `â`.
///
/// A point at height `z = p̂·â` is rotated about `â` by `amplitude·π·z` and
/// pulled towards `+â` by `amplitude·(1 − z²)/2` before being pushed back
/// onto the sphere, so the map both shears and compresses area towards one
/// pole.
pub fn swirl_map(sphere: &DiscreteManifold, seed: u64, radius: f64, amplitude: f64) -> Result<CorrespondenceMap> {
    if sphere.dim() != Dim::Surface {
        return Err(Error::Domain("swirl_map needs a surface"));
    }
    let mut rng = SplitMix64::new(seed);
    let axis = loop {
        let a = [rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)];
        let r = vec3::norm(a);
        if r > 0.1 && r <= 1.0 {
            break vec3::scale(a, 1.0 / r);
        }
    };
    let map = CorrespondenceMap::from_fn(sphere.clone(), |p| {
        let u = vec3::normalize(p);
        let z = vec3::dot(u, axis);
        let theta = amplitude * PI * z;
        // Rodrigues rotation about the axis.
        let (c, s) = (theta.cos(), theta.sin());
        let rotated = vec3::add(
            vec3::add(vec3::scale(u, c), vec3::scale(vec3::cross(axis, u), s)),
            vec3::scale(axis, z * (1.0 - c)),
        );
        let pulled = vec3::add(rotated, vec3::scale(axis, 0.5 * amplitude * (1.0 - z * z)));
        vec3::scale(vec3::normalize(pulled), radius)
    })?;
    map.jacobian_field()?;
    Ok(map)
}
