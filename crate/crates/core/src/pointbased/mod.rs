//! Pointbased second-order machinery for box and polyhedral potentials.

pub mod coderivative;
pub mod conditions;
pub mod oracle;
pub mod pvi;

pub use coderivative::{coderivative_box_normal, coderivative_interval, CoderivativeKind, IntervalPiece, ZSet};
pub use conditions::{check_mor_condition, check_pointbased_lipschitz, tau0_box, BoxCurvature, MorReport, PointbasedReport};
pub use pvi::{cone_limit_box, cone_limit_polyhedral, pvi_positive_definiteness, ConeLimit, LimitMode, PviReport, PviVariant};
