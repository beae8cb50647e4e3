//! On-disk instance format (JSON).

use serde::{Deserialize, Serialize};

pub type Matrix = Vec<Vec<f64>>;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub dims: Dims,
    pub base: BaseFile,
    pub potential: PotentialFile,
    pub reference: ReferenceFile,
    #[serde(default)]
    pub config: InstanceConfig,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dims {
    pub n: usize,
    #[serde(default)]
    pub l: usize,
    #[serde(default)]
    pub m: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<f64>>,
    #[serde(rename = "Q")]
    pub q: Matrix,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Matrix>,
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
    pub d: Option<Matrix>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialFile {
    IndicatorPolyhedron {
        #[serde(rename = "G")]
        g: Matrix,
        h: Vec<f64>,
    },
    #[serde(alias = "indicator_affine_QVI")]
    IndicatorAffineQvi {
        #[serde(rename = "A")]
        a: Matrix,
    },
    /// `null` bounds stand for `∓∞`.
    IndicatorBox {
        a: Vec<Option<f64>>,
        b: Vec<Option<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        shift: Option<Matrix>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lower_shift: Option<Matrix>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        upper_shift: Option<Matrix>,
    },
    QuadraticPlusIndicator {
        #[serde(rename = "W")]
        w: Matrix,
        inner: Box<PotentialFile>,
    },
    SmoothIneq { constraints: Vec<ConstraintFile> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintFile {
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Matrix>,
    pub b: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<Vec<f64>>,
    #[serde(default)]
    pub d: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceFile {
    pub x: Vec<f64>,
    #[serde(default)]
    pub p: Vec<f64>,
    #[serde(default)]
    pub q: Vec<f64>,
    pub v: Vec<f64>,
}

/// Optional per-instance overrides of defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceConfig {
    /// prox-parameter `r`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// radius `ρ` of the ball `U` around `x̄`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    /// Lipschitz modulus of the prox map in `p`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prox_p_modulus: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
}
