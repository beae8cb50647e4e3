//! Serialization helpers for reports: non-finite numbers become `"inf"`, `"-inf"`, `"nan"`,
//! vectors become plain arrays and matrices arrays of rows.

use nalgebra::{DMatrix, DVector};
use serde::ser::{SerializeSeq, Serializer};

use crate::scalar::Real;

pub fn real<T: Real, S: Serializer>(x: &T, s: S) -> Result<S::Ok, S::Error> {
    let v = x.f64();
    if v.is_finite() {
        s.serialize_f64(v)
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else if v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

struct R<'a, T: Real>(&'a T);

impl<T: Real> serde::Serialize for R<'_, T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        real(self.0, s)
    }
}

struct V<'a, T: Real>(&'a [T]);

impl<T: Real> serde::Serialize for V<'_, T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        reals(self.0, s)
    }
}

pub fn opt_real<T: Real, S: Serializer>(x: &Option<T>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => real(v, s),
        None => s.serialize_none(),
    }
}

pub fn reals<T: Real, S: Serializer>(v: &[T], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        seq.serialize_element(&R(x))?;
    }
    seq.end()
}

pub fn vec<T: Real, S: Serializer>(v: &DVector<T>, s: S) -> Result<S::Ok, S::Error> {
    reals(v.as_slice(), s)
}

pub fn opt_vec<T: Real, S: Serializer>(v: &Option<DVector<T>>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(v) => vec(v, s),
        None => s.serialize_none(),
    }
}

pub fn opt_reals<T: Real, S: Serializer>(v: &Option<Vec<T>>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(v) => reals(v, s),
        None => s.serialize_none(),
    }
}

pub fn vecs<T: Real, S: Serializer>(v: &[DVector<T>], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        seq.serialize_element(&V(x.as_slice()))?;
    }
    seq.end()
}

pub fn mat<T: Real, S: Serializer>(m: &DMatrix<T>, s: S) -> Result<S::Ok, S::Error> {
    let rows: Vec<Vec<T>> = (0..m.nrows()).map(|i| m.row(i).iter().cloned().collect()).collect();
    let mut seq = s.serialize_seq(Some(rows.len()))?;
    for r in &rows {
        seq.serialize_element(&V(r))?;
    }
    seq.end()
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Serialize;

    #[derive(Serialize)]
    struct Probe {
        #[serde(serialize_with = "real")]
        a: f64,
        #[serde(serialize_with = "vec")]
        b: DVector<f64>,
        #[serde(serialize_with = "mat")]
        c: DMatrix<f32>,
    }

    #[test]
    fn non_finite_numbers_are_strings() {
        let p = Probe { a: f64::INFINITY, b: DVector::from_vec(vec![1.0, f64::NEG_INFINITY]), c: DMatrix::identity(1, 2) };
        assert_eq!(serde_json::to_string(&p).unwrap(), r#"{"a":"inf","b":[1.0,"-inf"],"c":[[1.0,0.0]]}"#);
    }
}
