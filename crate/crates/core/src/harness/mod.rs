//! Exhaustive enumeration and brute-force verification at desk scale.

pub mod enumerate;
pub mod expansion;
pub mod ramsey;

use thiserror::Error;

use crate::eqlift::K0Structure;
use crate::kstruct::KStructure;
use crate::space::UltrametricSpace;
use crate::sqo::OrderedSpace;
use crate::structure::{Fact, Structure, Symbol};

pub use enumerate::{enumerate_structures, random_k0, random_space};
pub use expansion::{expansion_check, expansion_search, forbidden_square_embeds, gadget_pi, lex_grid, order_reversal};
pub use ramsey::{ramsey_check, ramsey_search, RamseyVerdict};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HarnessError {
    #[error("budget of {0} exceeded")]
    BudgetExceeded(u64),
    #[error("{0} is not meet-irreducible")]
    NotMeetIrreducible(String),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Space,
    OrderedSpace,
    K0,
    KStruct,
}

impl std::str::FromStr for Family {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "space" => Ok(Family::Space),
            "ordered_space" | "ordered-space" => Ok(Family::OrderedSpace),
            "k0" => Ok(Family::K0),
            "kstruct" => Ok(Family::KStruct),
            _ => Err(HarnessError::Invalid(format!("unknown family {s}"))),
        }
    }
}

/// One enumerated structure.
#[derive(Clone, Debug)]
pub enum Item {
    Space(UltrametricSpace),
    Ordered(OrderedSpace),
    K0(K0Structure),
    K(KStructure),
}

impl Item {
    pub fn to_structure(&self) -> Structure {
        match self {
            Item::Space(s) => space_structure(s),
            Item::Ordered(x) => x.to_structure(),
            Item::K0(k) => k.to_structure(),
            Item::K(k) => k.structure().clone(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Item::Space(s) => s.len(),
            Item::Ordered(x) => x.len(),
            Item::K0(k) => k.len(),
            Item::K(k) => k.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Distances as `Dist` facts between distinct points.
pub fn space_structure(s: &UltrametricSpace) -> Structure {
    let mut out = Structure::new(s.len());
    for x in s.points() {
        for y in s.points().filter(|&y| y != x) {
            out.insert(Fact::binary(Symbol::Dist(s.dist(x, y)), x, y));
        }
    }
    out
}

/// Counts work units and fails once the limit is passed.
#[derive(Debug)]
pub(crate) struct Budget {
    limit: u64,
    used: u64,
}

impl Budget {
    pub(crate) fn new(limit: u64) -> Self {
        Budget { limit, used: 0 }
    }

    pub(crate) fn spend(&mut self, k: u64) -> Result<(), HarnessError> {
        self.used = self.used.saturating_add(k);
        if self.used > self.limit {
            Err(HarnessError::BudgetExceeded(self.limit))
        } else {
            Ok(())
        }
    }
}
