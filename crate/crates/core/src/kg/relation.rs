use std::collections::BTreeSet;
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::KgError;

macro_rules! relations {
    ($($variant:ident),+ $(,)?) => {
        /// ConceptNet relation labels, plus the synthetic `Random` class used for
        /// unrelated concept pairs.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum Relation {
            $($variant),+
        }

        impl Relation {
            pub const ALL: &'static [Relation] = &[$(Relation::$variant),+];

            pub fn name(self) -> &'static str {
                match self {
                    $(Relation::$variant => stringify!($variant)),+
                }
            }
        }
    };
}

relations! {
    AtLocation,
    Causes,
    CapableOf,
    IsA,
    HasPrerequisite,
    HasProperty,
    HasSubevent,
    UsedFor,
    CausesDesire,
    Desires,
    HasA,
    MotivatedByGoal,
    ReceivesAction,
    Random,
    RelatedTo,
    HasContext,
    // Remaining ConceptNet / CN-100k labels. Only reachable through a custom inventory.
    PartOf,
    MadeOf,
    FormOf,
    HasFirstSubevent,
    HasLastSubevent,
    ObstructedBy,
    CreatedBy,
    Synonym,
    Antonym,
    DistinctFrom,
    DerivedFrom,
    SymbolOf,
    DefinedAs,
    MannerOf,
    LocatedNear,
    SimilarTo,
    InstanceOf,
    Entails,
    DesireOf,
    InheritsFrom,
    LocationOfAction,
    NotDesires,
    NotUsedFor,
    NotCapableOf,
    NotHasProperty,
    NotIsA,
    NotMadeOf,
    NotHasA,
    HasPainCharacter,
    HasPainIntensity,
}

/// The 13 most frequent ConceptNet relations that the relation models are trained on.
pub const CN13: [Relation; 13] = [
    Relation::AtLocation,
    Relation::Causes,
    Relation::CapableOf,
    Relation::IsA,
    Relation::HasPrerequisite,
    Relation::HasProperty,
    Relation::HasSubevent,
    Relation::UsedFor,
    Relation::CausesDesire,
    Relation::Desires,
    Relation::HasA,
    Relation::MotivatedByGoal,
    Relation::ReceivesAction,
];

impl Relation {
    pub fn is_cn13(self) -> bool {
        CN13.contains(&self)
    }

    /// `RelatedTo` and `HasContext` carry almost no semantics.
    pub fn is_vague(self) -> bool {
        matches!(self, Relation::RelatedTo | Relation::HasContext)
    }

    /// Classifier label set: CN-13 followed by `Random`.
    pub fn classifier_labels() -> impl Iterator<Item = Relation> {
        CN13.into_iter().chain(std::iter::once(Relation::Random))
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Relation {
    type Err = KgError;

    /// Accepts `UsedFor`, `/r/UsedFor` and case variants such as `usedfor`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bare = s.trim();
        let bare = bare.strip_prefix("/r/").unwrap_or(bare);
        Relation::ALL
            .iter()
            .copied()
            .find(|r| r.name().eq_ignore_ascii_case(bare))
            .ok_or_else(|| KgError::UnknownRelation(s.trim().to_string()))
    }
}

/// A relation together with its direction. `inverted` marks r⁻¹, i.e. the
/// triple (h, r, t) read as (t, r⁻¹, h).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RelationType {
    pub relation: Relation,
    pub inverted: bool,
}

impl RelationType {
    pub const fn base(relation: Relation) -> Self {
        RelationType { relation, inverted: false }
    }

    /// Fails for `Random`, which has no inverse.
    pub fn inverse_of(relation: Relation) -> Result<Self, KgError> {
        if relation == Relation::Random {
            return Err(KgError::InvertedRandom);
        }
        Ok(RelationType { relation, inverted: true })
    }

    pub fn toggled(self) -> Result<Self, KgError> {
        if self.inverted {
            Ok(RelationType::base(self.relation))
        } else {
            RelationType::inverse_of(self.relation)
        }
    }
}

impl From<Relation> for RelationType {
    fn from(relation: Relation) -> Self {
        RelationType::base(relation)
    }
}

impl fmt::Display for RelationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.inverted {
            write!(f, "{}^-1", self.relation)
        } else {
            write!(f, "{}", self.relation)
        }
    }
}

impl FromStr for RelationType {
    type Err = KgError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        for suffix in ["^-1", "⁻¹", "-1"] {
            if let Some(stripped) = s.strip_suffix(suffix) {
                return RelationType::inverse_of(stripped.parse()?);
            }
        }
        Ok(RelationType::base(s.parse()?))
    }
}

/// Whether an inventory is meant for the trained relation models or for the
/// static ConceptNet baseline. Only the latter admits vague relations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InventoryKind {
    Model,
    Baseline,
}

/// The set of relation labels a graph may contain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationInventory {
    kind: InventoryKind,
    relations: BTreeSet<Relation>,
}

impl RelationInventory {
    /// CN-13 plus `Random`.
    pub fn cn13() -> Self {
        RelationInventory { kind: InventoryKind::Model, relations: Relation::classifier_labels().collect() }
    }

    /// CN-13 plus `Random`, `RelatedTo` and `HasContext`.
    pub fn baseline() -> Self {
        let mut relations: BTreeSet<_> = Relation::classifier_labels().collect();
        relations.insert(Relation::RelatedTo);
        relations.insert(Relation::HasContext);
        RelationInventory { kind: InventoryKind::Baseline, relations }
    }

    pub fn from_relations(kind: InventoryKind, relations: impl IntoIterator<Item = Relation>) -> Result<Self, KgError> {
        let relations: BTreeSet<_> = relations.into_iter().collect();
        if kind == InventoryKind::Model {
            if let Some(r) = relations.iter().find(|r| r.is_vague()) {
                return Err(KgError::VagueRelationNotAllowed(r.name().to_string()));
            }
        }
        Ok(RelationInventory { kind, relations })
    }

    /// One relation name per line; blank lines and `#` comments are ignored.
    pub fn from_reader<R: BufRead>(reader: R, kind: InventoryKind) -> Result<Self, KgError> {
        let mut relations = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(|source| KgError::Io { line: idx + 1, source })?;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            relations.push(line.parse::<Relation>()?);
        }
        Self::from_relations(kind, relations)
    }

    /// `cn13`, `baseline`, or a path to an inventory file.
    pub fn resolve(spec: &str, kind: InventoryKind) -> Result<Self, KgError> {
        match spec {
            "cn13" => Ok(Self::cn13()),
            "baseline" => Ok(Self::baseline()),
            path => {
                let file = std::fs::File::open(path).map_err(|source| KgError::Io { line: 0, source })?;
                Self::from_reader(std::io::BufReader::new(file), kind)
            }
        }
    }

    pub fn kind(&self) -> InventoryKind {
        self.kind
    }

    pub fn contains(&self, relation: Relation) -> bool {
        self.relations.contains(&relation)
    }

    pub fn relations(&self) -> impl Iterator<Item = Relation> + '_ {
        self.relations.iter().copied()
    }

    /// Relations a target generator fans out over: everything except `Random`
    /// and the vague labels.
    pub fn generator_relations(&self) -> Vec<Relation> {
        // Keep CN-13 order first so fan-out order is stable across inventories.
        let mut out: Vec<Relation> = CN13.iter().copied().filter(|r| self.contains(*r)).collect();
        out.extend(self.relations.iter().copied().filter(|r| !r.is_cn13() && !r.is_vague() && *r != Relation::Random));
        out
    }
}

impl Default for RelationInventory {
    fn default() -> Self {
        Self::cn13()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_names_case_insensitively() {
        assert_eq!("UsedFor".parse::<Relation>().unwrap(), Relation::UsedFor);
        assert_eq!("/r/IsA".parse::<Relation>().unwrap(), Relation::IsA);
        assert_eq!("hasa".parse::<Relation>().unwrap(), Relation::HasA);
        assert!(matches!("Foo".parse::<Relation>(), Err(KgError::UnknownRelation(n)) if n == "Foo"));
    }

    #[test]
    fn random_never_inverted() {
        assert!(RelationType::inverse_of(Relation::Random).is_err());
        assert!("Random^-1".parse::<RelationType>().is_err());
        let inv: RelationType = "UsedFor^-1".parse().unwrap();
        assert!(inv.inverted);
        assert_eq!(inv.toggled().unwrap(), RelationType::base(Relation::UsedFor));
    }

    #[test]
    fn model_inventory_rejects_vague() {
        let src = "IsA\nRelatedTo\n";
        assert!(RelationInventory::from_reader(src.as_bytes(), InventoryKind::Model).is_err());
        let inv = RelationInventory::from_reader(src.as_bytes(), InventoryKind::Baseline).unwrap();
        assert!(inv.contains(Relation::RelatedTo));
    }

    #[test]
    fn generator_relations_exclude_random_and_vague() {
        let rels = RelationInventory::baseline().generator_relations();
        assert_eq!(rels.len(), 13);
        assert_eq!(rels, CN13.to_vec());

        let mut extended: Vec<_> = Relation::classifier_labels().collect();
        extended.push(Relation::PartOf);
        let inv = RelationInventory::from_relations(InventoryKind::Model, extended).unwrap();
        let rels = inv.generator_relations();
        assert_eq!(rels.len(), 14);
        assert_eq!(*rels.last().unwrap(), Relation::PartOf);
    }
}
