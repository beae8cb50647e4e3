//! Local Pompeiu–Hausdorff distances between polyhedra.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::Polyhedron;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HausdorffMode {
    /// `max(e(C1∩B, C2), e(C2∩B, C1))` with `e(A, C) = sup_{a∈A} d(a, C)`
    Local,
    /// `max(e(C1∩B, C2∩B), e(C2∩B, C1∩B))`
    Intersected,
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalHausdorff<T: Real> {
    #[serde(serialize_with = "crate::report::real")]
    pub theta: T,
    pub center: Vec<T>,
    pub radius: T,
    pub mode: HausdorffMode,
    /// boundary sampling count used per side
    pub samples: usize,
    /// bound on the under-estimation caused by boundary sampling
    pub resolution: T,
}

pub const DEFAULT_BOUNDARY_SAMPLES: usize = 1000;

/// Local Hausdorff distance of two polyhedra around a ball.
pub fn hausdorff_local<T: Real>(
    c1: &Polyhedron<T>,
    c2: &Polyhedron<T>,
    center: &DVector<T>,
    radius: T,
    mode: HausdorffMode,
) -> Result<LocalHausdorff<T>> {
    hausdorff_local_with(c1, c2, center, radius, mode, DEFAULT_BOUNDARY_SAMPLES, 0x5eed)
}

pub fn hausdorff_local_with<T: Real>(
    c1: &Polyhedron<T>,
    c2: &Polyhedron<T>,
    center: &DVector<T>,
    radius: T,
    mode: HausdorffMode,
    samples: usize,
    seed: u64,
) -> Result<LocalHausdorff<T>> {
    let n = c1.dim();
    let a = extreme_candidates(c1, center, radius, samples, seed)?;
    let b = extreme_candidates(c2, center, radius, samples, seed.wrapping_add(1))?;
    let dist = |y: &DVector<T>, c: &Polyhedron<T>| -> Result<T> {
        match mode {
            HausdorffMode::Local => Ok((c.project(y)? - y).norm()),
            HausdorffMode::Intersected => Ok((project_ball_intersection(c, center, radius, y)? - y).norm()),
        }
    };
    let mut theta = T::zero();
    for y in &a {
        theta = theta.max(dist(y, c2)?);
    }
    for y in &b {
        theta = theta.max(dist(y, c1)?);
    }
    let resolution = if n <= 1 {
        T::zero()
    } else {
        let per_dim = T::lit((samples.max(1) as f64).powf(1.0 / (n as f64 - 1.0)));
        T::lit(2.0 * std::f64::consts::PI) * radius / per_dim
    };
    Ok(LocalHausdorff { theta, center: center.iter().cloned().collect(), radius, mode, samples, resolution })
}

/// Candidate extreme points of `C ∩ B(center, radius)`: vertices inside the ball,
/// edge/sphere crossings, and radial boundary samples.
fn extreme_candidates<T: Real>(
    c: &Polyhedron<T>,
    center: &DVector<T>,
    radius: T,
    samples: usize,
    seed: u64,
) -> Result<Vec<DVector<T>>> {
    let n = c.dim();
    let inside = |x: &DVector<T>| (x - center).norm() <= radius * (T::one() + T::tol(1e-12));
    let anchor = c.project(center)?;
    if !inside(&anchor) {
        return Err(Error::Precondition("set does not meet the ball".into()));
    }
    let mut out = vec![anchor.clone()];
    if let Ok(boxed) = c.intersect_box(center, radius) {
        let verts = boxed.vertices();
        for v in &verts {
            if inside(v) {
                out.push(v.clone());
            }
        }
        for (i, j) in boxed.edges(&verts) {
            for t in segment_sphere(&verts[i], &verts[j], center, radius) {
                out.push(&verts[i] + (&verts[j] - &verts[i]) * t);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dirs: Vec<DVector<T>> = if n == 1 {
        vec![DVector::from_element(1, T::one()), DVector::from_element(1, -T::one())]
    } else {
        (0..samples)
            .map(|_| {
                let d = DVector::from_fn(n, |_, _| T::lit(StandardNormal.sample(&mut rng)));
                let nd = d.norm();
                d / nd
            })
            .collect()
    };
    for d in dirs {
        let t_poly = c.ray_exit(&anchor, &d);
        let t_ball = ray_sphere_exit(&anchor, &d, center, radius);
        let t = t_poly.min(t_ball);
        out.push(&anchor + d * t);
    }
    Ok(out)
}

/// Parameters `t ∈ [0, 1]` where the segment crosses the sphere.
fn segment_sphere<T: Real>(a: &DVector<T>, b: &DVector<T>, c: &DVector<T>, r: T) -> Vec<T> {
    let d = b - a;
    let f = a - c;
    let qa = d.dot(&d);
    if qa <= T::zero() {
        return Vec::new();
    }
    let qb = T::lit(2.0) * f.dot(&d);
    let qc = f.dot(&f) - r * r;
    let disc = qb * qb - T::lit(4.0) * qa * qc;
    if disc < T::zero() {
        return Vec::new();
    }
    let sq = disc.sqrt();
    [(-qb - sq) / (T::lit(2.0) * qa), (-qb + sq) / (T::lit(2.0) * qa)]
        .into_iter()
        .filter(|&t| t >= T::zero() && t <= T::one())
        .collect()
}

/// Positive exit parameter of the ray `p + t d` (unit `d`) from the ball; `p` inside.
fn ray_sphere_exit<T: Real>(p: &DVector<T>, d: &DVector<T>, c: &DVector<T>, r: T) -> T {
    let f = p - c;
    let b = f.dot(d);
    let cc = f.dot(&f) - r * r;
    let disc = (b * b - cc).max(T::zero());
    (-b + disc.sqrt()).max(T::zero())
}

/// Projection onto `C ∩ B(center, radius)` by bisection on the ball multiplier:
/// the minimizer is `proj_C((y + μc)/(1 + μ))` for the right `μ ≥ 0`.
pub fn project_ball_intersection<T: Real>(
    c: &Polyhedron<T>,
    center: &DVector<T>,
    radius: T,
    y: &DVector<T>,
) -> Result<DVector<T>> {
    let at = |mu: T| -> Result<DVector<T>> { c.project(&((y + center * mu) / (T::one() + mu))) };
    let x0 = at(T::zero())?;
    if (&x0 - center).norm() <= radius {
        return Ok(x0);
    }
    let mut hi = T::one();
    let mut xh = at(hi)?;
    let mut grow = 0;
    while (&xh - center).norm() > radius {
        hi *= T::lit(4.0);
        xh = at(hi)?;
        grow += 1;
        if grow > 60 {
            return Err(Error::Precondition("set does not meet the ball".into()));
        }
    }
    let mut lo = T::zero();
    for _ in 0..100 {
        let mid = (lo + hi) / T::lit(2.0);
        let xm = at(mid)?;
        if (&xm - center).norm() > radius {
            lo = mid;
        } else {
            hi = mid;
            xh = xm;
        }
        if hi - lo <= T::tol(1e-14) * (T::one() + hi) {
            break;
        }
    }
    Ok(xh)
}
