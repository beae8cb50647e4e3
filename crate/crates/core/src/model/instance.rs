use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::base::{BaseMap, LipschitzModuli};
use super::potential::{BoxSet, Potential, SmoothConstraint};
use super::schema::{self, InstanceConfig, InstanceFile, PotentialFile};
use crate::error::{Error, Result};
use crate::polyhedra::Polyhedron;
use crate::scalar::Real;

/// Tolerance of the reference residual check at load time.
pub const REFERENCE_TOL: f64 = 1e-9;

/// Reference quadruple `(x̄, p̄, q̄, v̄)`; `v̂ = v̄ − f(x̄, p̄, q̄)` is always recomputed.
#[derive(Debug, Clone)]
pub struct ReferencePoint<T: Real> {
    pub x: DVector<T>,
    pub p: DVector<T>,
    pub q: DVector<T>,
    pub v: DVector<T>,
}

/// A parametric variational system `v ∈ f(x, p, q) + ∂ₓg(x, p)` with its reference point.
#[derive(Debug, Clone)]
pub struct PvsInstance<T: Real> {
    pub name: Option<String>,
    pub base: BaseMap<T>,
    pub potential: Potential<T>,
    pub reference: ReferencePoint<T>,
    pub config: InstanceConfig,
}

impl<T: Real> PvsInstance<T> {
    /// Validate shapes and the reference residual.
    pub fn new(base: BaseMap<T>, potential: Potential<T>, reference: ReferencePoint<T>) -> Result<Self> {
        let inst = PvsInstance { name: None, base, potential, reference, config: InstanceConfig::default() };
        inst.validate()?;
        Ok(inst)
    }

    pub fn with_config(mut self, config: InstanceConfig) -> Self {
        self.config = config;
        self
    }

    pub fn n(&self) -> usize {
        self.base.n()
    }

    pub fn l(&self) -> usize {
        self.base.l()
    }

    pub fn m(&self) -> usize {
        self.base.m()
    }

    fn validate(&self) -> Result<()> {
        let (n, l, m) = (self.n(), self.l(), self.m());
        let r = &self.reference;
        if r.x.len() != n || r.v.len() != n || r.p.len() != l || r.q.len() != m {
            return Err(Error::Shape(format!(
                "reference lengths (x {}, p {}, q {}, v {}) do not match dims ({n}, {l}, {m})",
                r.x.len(),
                r.p.len(),
                r.q.len(),
                r.v.len()
            )));
        }
        check_potential_shapes(&self.potential, n, l)?;
        let res = self.reference_residual()?;
        if !(res <= T::tol(REFERENCE_TOL)) {
            return Err(Error::ReferenceResidual {
                residual: res.f64(),
                detail: "v̄ − f(x̄, p̄, q̄) is not a subgradient of g(·, p̄) at x̄".into(),
            });
        }
        Ok(())
    }

    pub fn evaluate_base(&self, x: &DVector<T>, p: &DVector<T>, q: &DVector<T>) -> Result<DVector<T>> {
        self.base.eval(x, p, q)
    }

    /// `v̂ = v̄ − f(x̄, p̄, q̄)`.
    pub fn v_hat(&self) -> DVector<T> {
        let r = &self.reference;
        &r.v - self.base.eval(&r.x, &r.p, &r.q).expect("validated shapes")
    }

    pub fn reference_residual(&self) -> Result<T> {
        let r = &self.reference;
        let vhat = &r.v - self.base.eval(&r.x, &r.p, &r.q)?;
        self.potential.subgradient_residual(&r.x, &r.p, &vhat)
    }

    /// Residual of `v ∈ f(x, p, q) + ∂ₓg(x, p)`.
    pub fn inclusion_residual(&self, x: &DVector<T>, v: &DVector<T>, p: &DVector<T>, q: &DVector<T>) -> Result<T> {
        let u = v - self.base.eval(x, p, q)?;
        self.potential.subgradient_residual(x, p, &u)
    }

    pub fn strong_monotonicity_modulus(&self) -> T {
        self.base.strong_monotonicity_modulus()
    }

    pub fn lipschitz_modulus(&self) -> LipschitzModuli<T> {
        self.base.lipschitz_moduli()
    }

    /// `C(p)` when it is polyhedral.
    pub fn set_at(&self, p: &DVector<T>) -> Result<Option<Polyhedron<T>>> {
        self.potential.set_at(p, self.n())
    }
}

fn check_potential_shapes<T: Real>(g: &Potential<T>, n: usize, l: usize) -> Result<()> {
    match g {
        Potential::IndicatorPolyhedron(c) => {
            if c.dim() != n {
                return Err(Error::Shape(format!("G has {} columns, expected {n}", c.dim())));
            }
        }
        Potential::IndicatorAffineQvi { a } => {
            if a.ncols() != n || a.nrows() != l {
                return Err(Error::Shape(format!("A is {:?}, expected {l}×{n}", a.shape())));
            }
        }
        Potential::IndicatorBox(b) => {
            if b.lower.len() != n || b.upper.len() != n {
                return Err(Error::Shape(format!("box bounds need length {n}")));
            }
            for s in [&b.lower_shift, &b.upper_shift].into_iter().flatten() {
                if s.shape() != (n, l) {
                    return Err(Error::Shape(format!("shift is {:?}, expected {n}×{l}", s.shape())));
                }
            }
            for i in 0..n {
                if b.lower[i] > b.upper[i] {
                    return Err(Error::Schema { field: "potential.a".into(), msg: format!("a[{i}] > b[{i}]") });
                }
            }
        }
        Potential::QuadraticPlusIndicator { w, inner } => {
            if w.shape() != (n, n) {
                return Err(Error::Shape(format!("W is {:?}, expected {n}×{n}", w.shape())));
            }
            if (w - w.transpose()).amax() > T::tol(1e-12) * (T::one() + w.amax()) {
                return Err(Error::Schema { field: "potential.W".into(), msg: "W must be symmetric".into() });
            }
            if !inner.is_indicator() {
                return Err(Error::Schema { field: "potential.inner".into(), msg: "inner must be an indicator".into() });
            }
            check_potential_shapes(inner, n, l)?;
        }
        Potential::SmoothIneq(cs) => {
            for (i, c) in cs.iter().enumerate() {
                if c.a.shape() != (n, n) || c.b.len() != n || c.g.len() != l {
                    return Err(Error::Shape(format!("constraint {i} has inconsistent shapes")));
                }
                if (&c.a - c.a.transpose()).amax() > T::tol(1e-12) * (T::one() + c.a.amax()) {
                    return Err(Error::Schema {
                        field: format!("potential.constraints[{i}].A"),
                        msg: "A must be symmetric".into(),
                    });
                }
            }
        }
    }
    Ok(())
}

fn schema_err(field: &str, msg: impl Into<String>) -> Error {
    Error::Schema { field: field.into(), msg: msg.into() }
}

fn vec_of<T: Real>(v: &[f64], len: usize, field: &str) -> Result<DVector<T>> {
    if v.len() != len {
        return Err(Error::Shape(format!("`{field}` has length {}, expected {len}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(schema_err(field, "non-finite entry"));
    }
    Ok(DVector::from_iterator(len, v.iter().map(|&x| T::lit(x))))
}

fn mat_of<T: Real>(m: &schema::Matrix, rows: usize, cols: usize, field: &str) -> Result<DMatrix<T>> {
    if m.len() != rows || m.iter().any(|r| r.len() != cols) {
        let got_cols = m.first().map_or(0, |r| r.len());
        return Err(Error::Shape(format!("`{field}` is {}×{got_cols}, expected {rows}×{cols}", m.len())));
    }
    if m.iter().flatten().any(|x| !x.is_finite()) {
        return Err(schema_err(field, "non-finite entry"));
    }
    Ok(DMatrix::from_fn(rows, cols, |i, j| T::lit(m[i][j])))
}

fn opt_mat_of<T: Real>(m: &Option<schema::Matrix>, rows: usize, cols: usize, field: &str) -> Result<DMatrix<T>> {
    match m {
        Some(m) if cols > 0 || !m.iter().all(|r| r.is_empty()) => mat_of(m, rows, cols, field),
        _ => Ok(DMatrix::zeros(rows, cols)),
    }
}

fn potential_from_file<T: Real>(f: &PotentialFile, n: usize, l: usize, path: &str) -> Result<Potential<T>> {
    Ok(match f {
        PotentialFile::IndicatorPolyhedron { g, h } => {
            let s = h.len();
            let gm = mat_of(g, s, n, &format!("{path}.G"))?;
            Potential::IndicatorPolyhedron(Polyhedron::new(gm, vec_of(h, s, &format!("{path}.h"))?)?)
        }
        PotentialFile::IndicatorAffineQvi { a } => Potential::IndicatorAffineQvi { a: mat_of(a, l, n, &format!("{path}.A"))? },
        PotentialFile::IndicatorBox { a, b, shift, lower_shift, upper_shift } => {
            if a.len() != n || b.len() != n {
                return Err(Error::Shape(format!("`{path}.a`/`{path}.b` need length {n}")));
            }
            let lower = DVector::from_iterator(n, a.iter().map(|x| x.map_or(-T::INF, T::lit)));
            let upper = DVector::from_iterator(n, b.iter().map(|x| x.map_or(T::INF, T::lit)));
            let sm = |m: &Option<schema::Matrix>, name: &str| -> Result<Option<DMatrix<T>>> {
                m.as_ref().map(|m| mat_of(m, n, l, &format!("{path}.{name}"))).transpose()
            };
            let s = sm(shift, "shift")?;
            let ls = sm(lower_shift, "lower_shift")?;
            let us = sm(upper_shift, "upper_shift")?;
            if s.is_some() && (ls.is_some() || us.is_some()) {
                return Err(schema_err(path, "`shift` excludes `lower_shift`/`upper_shift`"));
            }
            let (ls, us) = if s.is_some() { (s.clone(), s) } else { (ls, us) };
            Potential::IndicatorBox(BoxSet { lower, upper, lower_shift: ls, upper_shift: us })
        }
        PotentialFile::QuadraticPlusIndicator { w, inner } => Potential::QuadraticPlusIndicator {
            w: mat_of(w, n, n, &format!("{path}.W"))?,
            inner: Box::new(potential_from_file(inner, n, l, &format!("{path}.inner"))?),
        },
        PotentialFile::SmoothIneq { constraints } => {
            let mut cs = Vec::with_capacity(constraints.len());
            for (i, c) in constraints.iter().enumerate() {
                let p = format!("{path}.constraints[{i}]");
                cs.push(SmoothConstraint {
                    a: opt_mat_of(&c.a, n, n, &format!("{p}.A"))?,
                    b: vec_of(&c.b, n, &format!("{p}.b"))?,
                    g: match &c.g {
                        Some(g) => vec_of(g, l, &format!("{p}.g"))?,
                        None => DVector::zeros(l),
                    },
                    d: T::lit(c.d),
                });
            }
            Potential::SmoothIneq(cs)
        }
    })
}

impl<T: Real> TryFrom<&InstanceFile> for PvsInstance<T> {
    type Error = Error;

    fn try_from(f: &InstanceFile) -> Result<Self> {
        if f.version != schema::SCHEMA_VERSION {
            return Err(schema_err("version", format!("unsupported version {}", f.version)));
        }
        let schema::Dims { n, l, m } = f.dims;
        let c = match &f.base.c {
            Some(c) => vec_of(c, n, "base.c")?,
            None => DVector::zeros(n),
        };
        let base = BaseMap::new(
            c,
            mat_of(&f.base.q, n, n, "base.Q")?,
            opt_mat_of(&f.base.b, n, l, "base.B")?,
            opt_mat_of(&f.base.d, n, m, "base.D")?,
        )?;
        let potential = potential_from_file(&f.potential, n, l, "potential")?;
        let reference = ReferencePoint {
            x: vec_of(&f.reference.x, n, "reference.x")?,
            p: vec_of(&f.reference.p, l, "reference.p")?,
            q: vec_of(&f.reference.q, m, "reference.q")?,
            v: vec_of(&f.reference.v, n, "reference.v")?,
        };
        let mut inst = PvsInstance::new(base, potential, reference)?.with_config(f.config);
        inst.name = f.name.clone();
        Ok(inst)
    }
}

/// Parse an instance document.
pub fn parse_instance<T: Real>(text: &str) -> Result<PvsInstance<T>> {
    let file: InstanceFile = serde_json::from_str(text).map_err(|e| {
        let msg = e.to_string();
        let field = msg.split('`').nth(1).unwrap_or("document").to_string();
        Error::Schema { field, msg }
    })?;
    PvsInstance::try_from(&file)
}

/// Read, parse and validate an instance file.
pub fn load_instance<T: Real>(path: impl AsRef<Path>) -> Result<PvsInstance<T>> {
    let text = std::fs::read_to_string(path)?;
    parse_instance(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    pub(crate) const EX94: &str = r#"{
      "version": 1,
      "dims": {"n": 3, "l": 2, "m": 0},
      "base": {"c": [0.25, 0, 1], "Q": [[0,-1,0],[-1,0,0],[0,0,2]], "B": [[0,1],[1,0],[0,0]]},
      "potential": {"kind": "smooth_ineq", "constraints": [
        {"b": [1,0,-1], "g": [-1,0]},
        {"b": [-1,0,-1], "g": [1,0]},
        {"b": [0,1,-1], "g": [0,-1]},
        {"b": [0,-1,-1], "g": [0,1]}
      ]},
      "reference": {"x": [0,0,0], "p": [0,0], "v": [0,0,0]}
    }"#;

    #[test]
    fn loads_curvature_example() {
        let inst: PvsInstance<f64> = parse_instance(EX94).unwrap();
        assert!(inst.reference_residual().unwrap() <= 1e-12);
        assert_relative_eq!(inst.v_hat(), DVector::from_vec(vec![-0.25, 0.0, -1.0]));
        let y = inst.evaluate_base(&DVector::zeros(3), &DVector::zeros(2), &DVector::zeros(0)).unwrap();
        assert_relative_eq!(y, DVector::from_vec(vec![0.25, 0.0, 1.0]));
    }

    #[test]
    fn orthant_identity_loads() {
        let t = r#"{"version":1,"dims":{"n":2},"base":{"Q":[[1,0],[0,1]]},
          "potential":{"kind":"indicator_box","a":[0,0],"b":[null,null]},
          "reference":{"x":[0,0],"v":[0,0]}}"#;
        let inst: PvsInstance<f64> = parse_instance(t).unwrap();
        assert_eq!(inst.strong_monotonicity_modulus(), 1.0);
    }

    #[test]
    fn residual_violation_is_reported() {
        let t = r#"{"version":1,"dims":{"n":1},"base":{"Q":[[1]]},
          "potential":{"kind":"indicator_box","a":[0],"b":[null]},
          "reference":{"x":[0],"v":[0.5]}}"#;
        match parse_instance::<f64>(t) {
            Err(Error::ReferenceResidual { residual, .. }) => assert_relative_eq!(residual, 0.5, epsilon = 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn schema_errors_name_the_field() {
        let t = r#"{"version":1,"dims":{"n":1},"base":{"Q":[[1]]},
          "potential":{"kind":"indicator_box","a":[0],"b":[null]},
          "reference":{"v":[0]}}"#;
        match parse_instance::<f64>(t) {
            Err(Error::Schema { field, .. }) => assert_eq!(field, "x"),
            other => panic!("unexpected {other:?}"),
        }
        let t2 = r#"{"version":1,"dims":{"n":2},"base":{"Q":[[1]]},
          "potential":{"kind":"indicator_box","a":[0,0],"b":[null,null]},
          "reference":{"x":[0,0],"v":[0,0]}}"#;
        assert!(matches!(parse_instance::<f64>(t2), Err(Error::Shape(_))));
    }
}
