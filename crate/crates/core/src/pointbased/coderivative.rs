//! Regular and limiting coderivatives of the interval normal-cone map `N_[a,b]`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Closed cones in `R` (the only possible values of `Z(w)` here).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ZSet {
    Empty,
    Zero,
    NonPos,
    NonNeg,
    Reals,
}

impl ZSet {
    /// Membership pattern of `(-1, 0, 1)`.
    pub fn pattern(self) -> [bool; 3] {
        match self {
            ZSet::Empty => [false, false, false],
            ZSet::Zero => [false, true, false],
            ZSet::NonPos => [true, true, false],
            ZSet::NonNeg => [false, true, true],
            ZSet::Reals => [true, true, true],
        }
    }

    pub fn from_pattern(p: [bool; 3]) -> Option<ZSet> {
        [ZSet::Empty, ZSet::Zero, ZSet::NonPos, ZSet::NonNeg, ZSet::Reals].into_iter().find(|z| z.pattern() == p)
    }

    pub fn contains<T: Real>(self, z: T) -> bool {
        match self {
            ZSet::Empty => false,
            ZSet::Zero => z == T::zero(),
            ZSet::NonPos => z <= T::zero(),
            ZSet::NonNeg => z >= T::zero(),
            ZSet::Reals => true,
        }
    }

    pub fn is_subset(self, other: ZSet) -> bool {
        let (a, b) = (self.pattern(), other.pattern());
        (0..3).all(|i| !a[i] || b[i])
    }

    /// `inf { z·w : z ∈ Z }` (`None` when `Z` is empty).
    pub fn inf_product<T: Real>(self, w: T) -> Option<T> {
        let zero = T::zero();
        match self {
            ZSet::Empty => None,
            ZSet::Zero => Some(zero),
            ZSet::Reals => Some(if w == zero { zero } else { -T::INF }),
            ZSet::NonPos => Some(if w <= zero { zero } else { -T::INF }),
            ZSet::NonNeg => Some(if w >= zero { zero } else { -T::INF }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoderivativeKind {
    Regular,
    Limiting,
}

/// Pieces of `gph N_[a,b]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntervalPiece {
    Interior,
    LowerCorner,
    UpperCorner,
    LowerRay,
    UpperRay,
    /// `a = b`: the graph is the vertical line `{a} × R`
    Degenerate,
}

/// Locate `(x, u)` on `gph N_[a,b]`.
pub fn classify<T: Real>(a: T, b: T, x: T, u: T, tol: T) -> Result<IntervalPiece> {
    let off = |why: &str| Err(Error::OffGraph(format!("(x, u) = ({}, {}) on [{}, {}]: {why}", x.f64(), u.f64(), a.f64(), b.f64())));
    if a > b {
        return Err(Error::Precondition("empty interval".into()));
    }
    let at_a = a.is_finite_val() && (x - a).abs() <= tol;
    let at_b = b.is_finite_val() && (x - b).abs() <= tol;
    if at_a && at_b {
        return Ok(IntervalPiece::Degenerate);
    }
    if (a.is_finite_val() && x < a - tol) || (b.is_finite_val() && x > b + tol) {
        return off("x outside the interval");
    }
    if at_a {
        return if u < -tol {
            Ok(IntervalPiece::LowerRay)
        } else if u <= tol {
            Ok(IntervalPiece::LowerCorner)
        } else {
            off("positive normal at the lower bound")
        };
    }
    if at_b {
        return if u > tol {
            Ok(IntervalPiece::UpperRay)
        } else if u >= -tol {
            Ok(IntervalPiece::UpperCorner)
        } else {
            off("negative normal at the upper bound")
        };
    }
    if u.abs() <= tol {
        Ok(IntervalPiece::Interior)
    } else {
        off("nonzero normal in the interior")
    }
}

/// `Z(w) = {z : (z, −w) ∈ N_gph(x, u)}` on a given piece.
pub fn piece_table<T: Real>(piece: IntervalPiece, w: T, kind: CoderivativeKind) -> ZSet {
    use CoderivativeKind::*;
    use IntervalPiece::*;
    let zero = T::zero();
    let vertical = if w == zero { ZSet::Reals } else { ZSet::Empty };
    match (piece, kind) {
        (Interior, _) => ZSet::Zero,
        (LowerRay | UpperRay | Degenerate, _) => vertical,
        (LowerCorner, Regular) => {
            if w <= zero {
                ZSet::NonPos
            } else {
                ZSet::Empty
            }
        }
        (LowerCorner, Limiting) => {
            if w < zero {
                ZSet::NonPos
            } else if w == zero {
                ZSet::Reals
            } else {
                ZSet::Zero
            }
        }
        (UpperCorner, Regular) => {
            if w >= zero {
                ZSet::NonNeg
            } else {
                ZSet::Empty
            }
        }
        (UpperCorner, Limiting) => {
            if w > zero {
                ZSet::NonNeg
            } else if w == zero {
                ZSet::Reals
            } else {
                ZSet::Zero
            }
        }
    }
}

/// Coderivative of `N_[a,b]` at `(x, u)` applied to `w`.
pub fn coderivative_interval<T: Real>(a: T, b: T, x: T, u: T, w: T, kind: CoderivativeKind) -> Result<ZSet> {
    Ok(piece_table(classify(a, b, x, u, T::tol(1e-9))?, w, kind))
}

/// Coordinatewise coderivative of `N_box` at `(x, u)` applied to `w`.
pub fn coderivative_box_normal<T: Real>(
    a: &[T],
    b: &[T],
    x: &[T],
    u: &[T],
    w: &[T],
    kind: CoderivativeKind,
) -> Result<Vec<ZSet>> {
    let n = a.len();
    if [b.len(), x.len(), u.len(), w.len()].iter().any(|&k| k != n) {
        return Err(Error::Shape("box coderivative arguments differ in length".into()));
    }
    (0..n).map(|i| coderivative_interval(a[i], b[i], x[i], u[i], w[i], kind)).collect()
}

/// Constraint on one coordinate of `w` for which `Z(w_i)` is nonempty, together with
/// whether `inf z·w` over that domain stays bounded below.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Free,
    Zero,
    NonPos,
    NonNeg,
}

/// Domain of `w_i` and whether some admissible `w_i ≠ 0` gives `inf z·w_i = −∞`.
pub fn piece_domain(piece: IntervalPiece, kind: CoderivativeKind) -> (Domain, bool) {
    let signs = [-1.0f64, 0.0, 1.0];
    let mut ok = [false; 3];
    let mut unbounded = false;
    for (k, &w) in signs.iter().enumerate() {
        let z = piece_table(piece, w, kind);
        if let Some(v) = z.inf_product(w) {
            ok[k] = true;
            if v == f64::NEG_INFINITY {
                unbounded = true;
            }
        }
    }
    let dom = match ok {
        [true, _, true] => Domain::Free,
        [true, _, false] => Domain::NonPos,
        [false, _, true] => Domain::NonNeg,
        _ => Domain::Zero,
    };
    (dom, unbounded)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_entries() {
        use CoderivativeKind::*;
        assert_eq!(coderivative_interval(0.0, 1.0, 0.5, 0.0, 3.0, Limiting).unwrap(), ZSet::Zero);
        assert_eq!(coderivative_interval(0.0, f64::INFINITY, 0.0, -1.0, 0.0, Limiting).unwrap(), ZSet::Reals);
        assert_eq!(coderivative_interval(0.0, f64::INFINITY, 0.0, -1.0, 1.0, Limiting).unwrap(), ZSet::Empty);
        assert_eq!(coderivative_interval(0.0, 1.0, 0.0, 0.0, 1.0, Limiting).unwrap(), ZSet::Zero);
        assert_eq!(coderivative_interval(0.0, 1.0, 0.0, 0.0, 1.0, Regular).unwrap(), ZSet::Empty);
        assert_eq!(coderivative_interval(0.0, 1.0, 0.0, 0.0, -1.0, Regular).unwrap(), ZSet::NonPos);
        assert!(coderivative_interval(0.0, 1.0, 0.5, 1.0, 0.0, Limiting).is_err());
    }

    #[test]
    fn regular_inside_limiting() {
        use IntervalPiece::*;
        for piece in [Interior, LowerCorner, UpperCorner, LowerRay, UpperRay, Degenerate] {
            for w in [-2.0, 0.0, 0.5] {
                let r = piece_table(piece, w, CoderivativeKind::Regular);
                let l = piece_table(piece, w, CoderivativeKind::Limiting);
                assert!(r.is_subset(l), "{piece:?} {w}");
            }
        }
    }

    #[test]
    fn domains() {
        assert_eq!(piece_domain(IntervalPiece::LowerCorner, CoderivativeKind::Limiting), (Domain::Free, false));
        assert_eq!(piece_domain(IntervalPiece::LowerRay, CoderivativeKind::Limiting), (Domain::Zero, false));
        assert_eq!(piece_domain(IntervalPiece::LowerCorner, CoderivativeKind::Regular), (Domain::NonPos, false));
    }
}
