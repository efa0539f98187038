use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row/column dimensions (m, n) of the matrix under approximation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims {
    pub m: usize,
    pub n: usize,
}

impl Dims {
    pub fn new(m: usize, n: usize) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::domain(format!(
                "dimensions must satisfy m >= 1 and n >= 1, got m={m}, n={n}"
            )));
        }
        Ok(Dims { m, n })
    }

    /// Total dimension m + n of the ambient lattice.
    pub fn d(&self) -> usize {
        self.m + self.n
    }

    pub fn max_mn(&self) -> usize {
        self.m.max(self.n)
    }

    /// Experiments around the dichotomy need max{m,n} > 1; (1,1) collapses
    /// the multiplicative and additive set-ups.
    pub fn require_max_gt_one(&self) -> Result<()> {
        if self.max_mn() <= 1 {
            return Err(Error::domain(
                "this experiment requires max{m, n} > 1; m = n = 1 is rejected",
            ));
        }
        Ok(())
    }
}

impl std::fmt::Display for Dims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.m, self.n)
    }
}
