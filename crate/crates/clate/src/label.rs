//! Opaque labels for instrument values, covariate cells, and outcomes.
//!
//! Labels are compared as exact strings; positions inside a support list are
//! the working identity everywhere else in the crate.

use serde::{Deserialize, Serialize};
use std::fmt;

macro_rules! label_type {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(label: impl Into<String>) -> Self {
                Self(label.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_string())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }
    };
}

label_type!(
    /// A point of the instrument support.
    InstrumentValue
);
label_type!(
    /// A covariate cell (one value of the conditioning covariate).
    CovariateCell
);
label_type!(
    /// One value of the outcome support.
    OutcomeValue
);

/// Find the index of a label inside a support list.
pub(crate) fn index_of<L: PartialEq>(support: &[L], label: &L) -> Option<usize> {
    support.iter().position(|l| l == label)
}

/// True when every label in the slice is distinct.
pub(crate) fn all_distinct<L: Ord>(support: &[L]) -> bool {
    let mut seen = std::collections::BTreeSet::new();
    support.iter().all(|l| seen.insert(l))
}
