//! Scalar abstraction shared by every numerical routine.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point scalar usable by the library (implemented for `f32` and `f64`).
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Serialize + DeserializeOwned + Send + Sync
{
    const EPS: Self;
    const INF: Self;

    /// Convert an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal out of range")
    }

    /// Lossy conversion for reporting.
    fn f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// A tolerance that is never below a few ulps of the scalar.
    fn tol(x: f64) -> Self {
        let t = Self::lit(x);
        let floor = Self::EPS * Self::lit(64.0);
        if t > floor {
            t
        } else {
            floor
        }
    }

    fn is_finite_val(self) -> bool {
        self.f64().is_finite()
    }
}

impl Real for f64 {
    const EPS: Self = f64::EPSILON;
    const INF: Self = f64::INFINITY;
}

impl Real for f32 {
    const EPS: Self = f32::EPSILON;
    const INF: Self = f32::INFINITY;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_floor_depends_on_precision() {
        assert_eq!(<f64 as Real>::tol(1e-9), 1e-9);
        assert!(<f32 as Real>::tol(1e-9) > 1e-6);
    }
}
