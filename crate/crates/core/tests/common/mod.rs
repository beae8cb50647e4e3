#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use pvstab::linalg;
use pvstab::model::{load_instance, BaseMap, BoxSet, Potential, PvsInstance, ReferencePoint, SmoothConstraint};
use pvstab::polyhedra::Polyhedron;
use pvstab::sampling::{gaussian, stream};

pub fn fixture(name: &str) -> PvsInstance<f64> {
    load_instance(format!("{}/../cli/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

pub fn dv(x: &[f64]) -> DVector<f64> {
    DVector::from_vec(x.to_vec())
}

fn gauss_mat(rng: &mut impl Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_iterator(r, c, (0..r * c).map(|_| gaussian::<f64>(rng, 1)[0]))
}

fn orthogonal(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    gauss_mat(rng, n, n).qr().q()
}

/// Symmetric matrix with eigenvalues drawn from `[lo, hi]`.
pub fn sym_with_spectrum(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    let u = orthogonal(rng, n);
    let d = DMatrix::from_diagonal(&DVector::from_iterator(n, (0..n).map(|_| rng.gen_range(lo..hi))));
    &u * d * u.transpose()
}

/// Random smooth-inequality instance in R³ satisfying LICQ at `x̄ = 0`: `1..=3` active
/// constraints with independent gradients, one inactive constraint, multipliers with some
/// zeros, and `Q` with a spectrum of mixed sign.
pub fn licq_pvc(seed: u64) -> PvsInstance<f64> {
    let mut rng = stream(seed, 0);
    let n = 3;
    loop {
        let k = rng.gen_range(1..=3);
        let grads = orthogonal(&mut rng, n);
        let mut cs = Vec::new();
        let mut lam = Vec::new();
        for i in 0..k {
            let b = grads.column(i) + gaussian::<f64>(&mut rng, n) * 0.3;
            let mut c = SmoothConstraint::affine(b, gaussian(&mut rng, 1), 0.0);
            if rng.gen_bool(0.5) {
                c.a = sym_with_spectrum(&mut rng, n, 0.0, 0.5);
            }
            cs.push(c);
            lam.push(if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.2..1.0) });
        }
        cs.push(SmoothConstraint::affine(gaussian(&mut rng, n), gaussian(&mut rng, 1), -1.0));
        lam.push(0.0);
        let q = sym_with_spectrum(&mut rng, n, -1.0, 2.0);
        let mut c = DVector::zeros(n);
        for (ci, &li) in cs.iter().zip(&lam) {
            c -= &ci.b * li;
        }
        let b = gauss_mat(&mut rng, n, 1);
        let Ok(base) = BaseMap::new(c, q.clone(), b, DMatrix::zeros(n, 0)) else { continue };
        let reference = ReferencePoint { x: DVector::zeros(n), p: DVector::zeros(1), q: DVector::zeros(0), v: DVector::zeros(n) };
        let Ok(inst) = PvsInstance::new(base, Potential::SmoothIneq(cs.clone()), reference) else { continue };
        // keep the verdict away from the tolerance band
        let mut h = q.clone();
        for (ci, &li) in cs.iter().zip(&lam) {
            h += &ci.a * li;
        }
        let strict: Vec<DVector<f64>> = (0..k).filter(|&i| lam[i] > 0.0).map(|i| cs[i].b.clone()).collect();
        let z = linalg::null_space(&linalg::rows(n, &strict), n, 1e-10);
        if z.ncols() > 0 {
            let (m, _) = linalg::min_eig(&(z.transpose() * &h * &z)).unwrap();
            if m.abs() < 0.05 {
                continue;
            }
        }
        return inst;
    }
}

/// Random polyhedron in R³ through `x̄ = 0` with `2..=4` active rows and two inactive rows.
pub fn polyhedron_through_origin(rng: &mut impl Rng) -> (Polyhedron<f64>, Vec<usize>) {
    let n = 3;
    let k = rng.gen_range(2..=4);
    let rows = k + 2;
    let g = gauss_mat(rng, rows, n);
    let mut h = DVector::zeros(rows);
    for i in k..rows {
        h[i] = rng.gen_range(0.5..1.5);
    }
    (Polyhedron::new(g, h).unwrap(), (0..k).collect())
}

/// Random normal vector at the origin: nonnegative combination with some zero weights.
pub fn normal_at(rng: &mut impl Rng, c: &Polyhedron<f64>, active: &[usize]) -> DVector<f64> {
    let mut v = DVector::zeros(c.dim());
    for &i in active {
        if rng.gen_bool(0.6) {
            v += c.g().row(i).transpose() * rng.gen_range(0.2..1.0);
        }
    }
    v
}

/// Polyhedral PVI in R³ with `Q` symmetric positive definite or indefinite (possibly nonsymmetric).
pub fn pvi_polyhedral(seed: u64) -> PvsInstance<f64> {
    let mut rng = stream(seed, 1);
    let n = 3;
    loop {
        let (c, active) = polyhedron_through_origin(&mut rng);
        let vhat = normal_at(&mut rng, &c, &active);
        let q = match seed % 3 {
            0 => sym_with_spectrum(&mut rng, n, 0.3, 2.0),
            1 => sym_with_spectrum(&mut rng, n, -1.0, 2.0),
            _ => sym_with_spectrum(&mut rng, n, -1.0, 2.0) + {
                let s = gauss_mat(&mut rng, n, n) * 0.3;
                &s - s.transpose()
            },
        };
        let b = gauss_mat(&mut rng, n, 1);
        let d = gauss_mat(&mut rng, n, 1);
        let Ok(base) = BaseMap::new(-vhat, q, b, d) else { continue };
        let reference = ReferencePoint { x: DVector::zeros(n), p: DVector::zeros(1), q: DVector::zeros(1), v: DVector::zeros(n) };
        if let Ok(inst) = PvsInstance::new(base, Potential::IndicatorPolyhedron(c), reference) {
            return inst;
        }
    }
}

/// `δ_{[0,1]²} + ½xᵀWx` at a random corner, edge or interior point with a consistent `v̂`.
pub fn quadratic_box(seed: u64) -> (Potential<f64>, DVector<f64>, DVector<f64>) {
    let mut rng = stream(seed, 2);
    let w = sym_with_spectrum(&mut rng, 2, -2.0, 1.0);
    let bx = BoxSet::fixed(dv(&[0.0, 0.0]), dv(&[1.0, 1.0]));
    let mut x = DVector::zeros(2);
    let mut nv = DVector::zeros(2);
    for j in 0..2 {
        match rng.gen_range(0..3) {
            0 => {
                x[j] = 0.0;
                nv[j] = -rng.gen_range(0.0..1.0);
            }
            1 => {
                x[j] = 1.0;
                nv[j] = rng.gen_range(0.0..1.0);
            }
            _ => x[j] = rng.gen_range(0.2..0.8),
        }
    }
    let vhat = &w * &x + nv;
    (Potential::QuadraticPlusIndicator { w, inner: Box::new(Potential::IndicatorBox(bx)) }, x, vhat)
}
