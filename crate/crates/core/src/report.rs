//! Validation reports shared by every checker.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Rule {
    InconsistentOrientation,
    OrthogonalityNotSymmetric,
    OrthogonalityReflexive,
    NestingNotTransitive,
    OrthogonalityInheritance,
    MaximalNotTop,
    ContainerMissing,
    ContainerMismatch,
    WedgeNotUnique,
    Wedge1,
    Wedge2,
    Wedge3,
    Wedge4,
    Wedge5,
    ContainerNotClean,
    ContainerFormula,
    JoinOrthogonality,
    NotInjective,
    RelationChanged,
    MissingPreimage,
    WedgeNotPreserved,
    JoinNotPreserved,
    DomainMismatch,
    SupportDisconnected,
    SupportOrder,
    SupportJoin,
    DistinctSupports,
    ComplexityBound,
    LargeLinksSupport,
    CombinedWedge,
    CombinedContainer,
    RhoDisjointSupport,
    ConeDiameter,
    HypMapNotIsometric,
    InclusionNotHqc,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Violation {
    pub rule: Rule,
    pub witness: Vec<String>,
    #[serde(skip_serializing_if = "String::is_empty", default)]
    pub note: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn push(&mut self, rule: Rule, witness: Vec<String>, note: String) {
        self.violations.push(Violation { rule, witness, note });
    }

    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn extend(&mut self, other: ValidationReport) {
        self.violations.extend(other.violations);
    }

    pub fn has(&self, rule: Rule) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }

    /// Sorted, deduplicated copy for stable output.
    pub fn sorted(mut self) -> Self {
        self.violations.sort();
        self.violations.dedup();
        self
    }
}
