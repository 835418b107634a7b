use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on generated pseudoorbits.
pub const DEFAULT_ORBITS: u64 = 10_000_000;
/// Default cap on visited lattice points.
pub const DEFAULT_POINTS: u64 = 50_000_000;

/// Work limits for the exponential parts of the library.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    /// Maximum number of pseudoorbits any single enumeration may generate.
    pub orbits: u64,
    /// Maximum number of lattice points any single discretization may visit.
    pub points: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { orbits: DEFAULT_ORBITS, points: DEFAULT_POINTS }
    }
}

impl Budget {
    pub fn new(orbits: u64, points: u64) -> Self {
        Budget { orbits, points }
    }

    pub(crate) fn check_orbits(&self, used: u64) -> Result<()> {
        if used > self.orbits {
            return Err(Error::BudgetExceeded { what: "pseudoorbits", limit: self.orbits });
        }
        Ok(())
    }

    pub(crate) fn check_points(&self, used: u64) -> Result<()> {
        if used > self.points {
            return Err(Error::BudgetExceeded { what: "lattice points", limit: self.points });
        }
        Ok(())
    }
}
