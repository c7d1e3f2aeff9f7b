//! Access to finalized databases one retrograde level down.

use crate::deal::CanonicalDeal;
use crate::rules::Value;
use crate::Result;

/// Read-only view of the solved `d-1` databases used while building depth
/// `d`. Implementations must be safe to share across build workers.
pub trait PriorDb: Sync {
    /// Exact value of a solved deal one level down. Fails with
    /// `Error::MissingPartition` when the deal's partition was never built,
    /// or `Error::IncompletePrior` when a built partition has no entry
    /// covering the deal.
    fn lookup(&self, deal: &CanonicalDeal) -> Result<Value>;
}

/// The prior for depth-1 builds: every successor is an empty deal worth 0.
pub struct ZeroPrior;

impl PriorDb for ZeroPrior {
    fn lookup(&self, deal: &CanonicalDeal) -> Result<Value> {
        debug_assert_eq!(deal.tricks(), 0);
        Ok(0)
    }
}

/// A prior that can also bound whole sets: the minimum and maximum value
/// over stored entries overlapping a probe. Available when the prior is a
/// set database.
pub trait SetPrior: PriorDb {
    fn overlap_bounds(&self, probe: &crate::sets::SetEntry) -> Result<(Value, Value)>;
}

impl SetPrior for ZeroPrior {
    fn overlap_bounds(&self, probe: &crate::sets::SetEntry) -> Result<(Value, Value)> {
        debug_assert_eq!(probe.partition().tricks(), 0);
        Ok((0, 0))
    }
}
