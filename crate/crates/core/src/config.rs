//! Grothendieck constants and solver-wide options.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Best known lower bound on the real Grothendieck constant.
pub const KG_REAL_LOWER: f64 = 1.67696;
/// Best known upper bound on the real Grothendieck constant.
pub const KG_REAL_UPPER: f64 = 1.782;
pub const KG_COMPLEX_LOWER: f64 = 1.33807;
pub const KG_COMPLEX_UPPER: f64 = 1.40491;

/// Known bounds on the Grothendieck constant plus the value used for
/// every "≤ K_G" test. Only the real constants are used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub kg_real_lower: f64,
    pub kg_real_upper: f64,
    pub kg_complex_lower: f64,
    pub kg_complex_upper: f64,
    kg_effective: f64,
}

impl Constants {
    /// Rejects an effective constant below the known lower bound, since
    /// no valid value of K_G can lie there.
    pub fn new(kg_effective: f64) -> Result<Self> {
        if !kg_effective.is_finite() || kg_effective < KG_REAL_LOWER {
            return Err(Error::InvalidConfig(format!(
                "kg_effective {kg_effective} is below the known lower bound {KG_REAL_LOWER}"
            )));
        }
        Ok(Self {
            kg_real_lower: KG_REAL_LOWER,
            kg_real_upper: KG_REAL_UPPER,
            kg_complex_lower: KG_COMPLEX_LOWER,
            kg_complex_upper: KG_COMPLEX_UPPER,
            kg_effective,
        })
    }

    pub fn kg_effective(&self) -> f64 {
        self.kg_effective
    }
}

impl Default for Constants {
    fn default() -> Self {
        Self::new(KG_REAL_UPPER).expect("default constant is valid")
    }
}

/// Options shared by the norm routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormOptions {
    /// Maximum number of sign coordinates enumerated exhaustively.
    pub enum_limit: usize,
    /// Random extreme points / dual forms sampled for interval answers.
    pub samples: usize,
    pub seed: u64,
    /// Relative comparison tolerance for exact paths.
    pub tol: f64,
}

impl Default for NormOptions {
    fn default() -> Self {
        Self {
            enum_limit: 22,
            samples: 64,
            seed: 0,
            tol: 1e-10,
        }
    }
}

impl NormOptions {
    pub fn with_enum_limit(mut self, limit: usize) -> Self {
        self.enum_limit = limit;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}
