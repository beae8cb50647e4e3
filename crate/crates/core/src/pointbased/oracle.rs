//! Brute-force normal cones of graphs given as finite unions of convex pieces.
//!
//! Tangent directions are detected by probing `dist(z + t d, gph) ≈ 0` over a dense
//! direction set; regular normals are the vectors nonpositive on all detected tangents;
//! limiting normals are unions of regular normals over nearby graph points.

use nalgebra::DVector;

use super::coderivative::{CoderivativeKind, ZSet};
use crate::polyhedra::Polyhedron;

#[derive(Debug, Clone)]
pub enum Piece {
    Segment(DVector<f64>, DVector<f64>),
    Poly(Polyhedron<f64>),
}

impl Piece {
    fn dist(&self, z: &DVector<f64>) -> f64 {
        match self {
            Piece::Segment(a, b) => {
                let d = b - a;
                let dd = d.norm_squared();
                let t = if dd == 0.0 { 0.0 } else { ((z - a).dot(&d) / dd).clamp(0.0, 1.0) };
                (a + d * t - z).norm()
            }
            Piece::Poly(c) => c.project(z).map(|p| (p - z).norm()).unwrap_or(f64::INFINITY),
        }
    }
}

#[derive(Debug, Clone)]
pub struct UnionSet {
    pub pieces: Vec<Piece>,
}

impl UnionSet {
    pub fn dist(&self, z: &DVector<f64>) -> f64 {
        self.pieces.iter().map(|p| p.dist(z)).fold(f64::INFINITY, f64::min)
    }

    /// `gph N_[a,b]` truncated to the window `|·| ≤ window`.
    pub fn interval_normal_graph(a: f64, b: f64, window: f64) -> UnionSet {
        let p = |x: f64, u: f64| DVector::from_vec(vec![x, u]);
        let lo = if a.is_finite() { a } else { -window };
        let hi = if b.is_finite() { b } else { window };
        let mut pieces = vec![Piece::Segment(p(lo, 0.0), p(hi, 0.0))];
        if a.is_finite() {
            pieces.push(Piece::Segment(p(a, -window), p(a, 0.0)));
        }
        if b.is_finite() {
            pieces.push(Piece::Segment(p(b, 0.0), p(b, window)));
        }
        UnionSet { pieces }
    }
}

/// Dense probe directions: 1° steps in the plane; sign vectors plus a Fibonacci sphere otherwise.
pub fn probe_directions(dim: usize) -> Vec<DVector<f64>> {
    if dim == 2 {
        return (0..360)
            .map(|k| {
                let t = (k as f64).to_radians();
                DVector::from_vec(vec![t.cos(), t.sin()])
            })
            .collect();
    }
    let mut out = Vec::new();
    let total = 3usize.pow(dim as u32);
    for code in 0..total {
        let mut c = code;
        let v = DVector::from_fn(dim, |_, _| {
            let s = (c % 3) as f64 - 1.0;
            c /= 3;
            s
        });
        if v.norm() > 0.0 {
            out.push(v.normalize());
        }
    }
    if dim == 3 {
        let m = 2000;
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        for i in 0..m {
            let y = 1.0 - 2.0 * (i as f64 + 0.5) / m as f64;
            let r = (1.0 - y * y).sqrt();
            let th = golden * i as f64;
            out.push(DVector::from_vec(vec![r * th.cos(), y, r * th.sin()]));
        }
    }
    out
}

/// Directions `d` with `z + t d` (numerically) on the set.
pub fn tangent_probes(set: &UnionSet, z: &DVector<f64>, dirs: &[DVector<f64>], t: f64) -> Vec<DVector<f64>> {
    dirs.iter().filter(|d| set.dist(&(z + *d * t)) <= 1e-9 * t).cloned().collect()
}

pub fn regular_normal_contains(tangents: &[DVector<f64>], nu: &DVector<f64>) -> bool {
    let scale = nu.norm().max(1.0);
    tangents.iter().all(|d| nu.dot(d) <= 1e-9 * scale)
}

/// Oracle value of `Z(w)` for `N_[a,b]` at the graph point `(x, u)`, from membership of
/// `(z, −w)`, `z ∈ {−1, 0, 1}`, in the sampled normal cone.
pub fn interval_oracle(a: f64, b: f64, x: f64, u: f64, w: f64, kind: CoderivativeKind) -> ZSet {
    let set = UnionSet::interval_normal_graph(a, b, 10.0);
    let dirs = probe_directions(2);
    let t = 1e-4;
    let center = DVector::from_vec(vec![x, u]);
    let mut points = vec![center.clone()];
    if kind == CoderivativeKind::Limiting {
        // stay closer to (x, u) than to any vertex of the graph
        let to_vertex = [a, b]
            .into_iter()
            .filter(|e| e.is_finite())
            .map(|e| (x - e).hypot(u))
            .filter(|&d| d > 0.0)
            .fold(f64::INFINITY, f64::min);
        let reach = (0.25 * to_vertex).min(1e-2);
        for d in &dirs {
            for s in [0.1 * reach, reach] {
                let y = &center + d * s;
                if set.dist(&y) <= 1e-12 {
                    points.push(y);
                }
            }
        }
    }
    let tangent_sets: Vec<Vec<DVector<f64>>> = points.iter().map(|p| tangent_probes(&set, p, &dirs, t)).collect();
    let mut pattern = [false; 3];
    for (k, z) in [-1.0, 0.0, 1.0].into_iter().enumerate() {
        let nu = DVector::from_vec(vec![z, -w]);
        pattern[k] = tangent_sets.iter().any(|ts| regular_normal_contains(ts, &nu));
    }
    ZSet::from_pattern(pattern).unwrap_or(ZSet::Reals)
}

/// Graph points of `N_[a,b]` used for table validation: the vertices plus a 50×50 grid
/// pattern along each piece (50 offsets on each side of each vertex and in the interior).
pub fn interval_grid(a: f64, b: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let offs: Vec<f64> = (1..=50).map(|k| 0.5 * k as f64 / 50.0).collect();
    let lo = if a.is_finite() { a } else { -1.0 };
    let hi = if b.is_finite() { b } else { 1.0 };
    let mid = 0.5 * (lo + hi);
    for &s in &offs {
        out.push((lo + (mid - lo) * s * 2.0 * 0.9, 0.0));
        out.push((hi - (hi - mid) * s * 2.0 * 0.9, 0.0));
        if a.is_finite() {
            out.push((a, -s));
        }
        if b.is_finite() {
            out.push((b, s));
        }
    }
    if a.is_finite() {
        out.push((a, 0.0));
    }
    if b.is_finite() {
        out.push((b, 0.0));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointbased::coderivative::coderivative_interval;

    #[test]
    fn oracle_matches_corner_entries() {
        for kind in [CoderivativeKind::Regular, CoderivativeKind::Limiting] {
            for w in [-1.0, 0.0, 1.0] {
                let t = coderivative_interval(0.0, 1.0, 0.0, 0.0, w, kind).unwrap();
                assert_eq!(interval_oracle(0.0, 1.0, 0.0, 0.0, w, kind), t, "{kind:?} w={w}");
            }
        }
    }
}
