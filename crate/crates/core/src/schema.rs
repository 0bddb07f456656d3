//! Node labels and edge kinds of the legal reasoning graph.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The four node classes. Serialized names are part of the file formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NodeLabel {
    Fact,
    Provision,
    LegalNorm,
    LegalApplication,
}

impl NodeLabel {
    pub const ALL: [NodeLabel; 4] = [
        NodeLabel::Provision,
        NodeLabel::LegalNorm,
        NodeLabel::LegalApplication,
        NodeLabel::Fact,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NodeLabel::Fact => "Fact",
            NodeLabel::Provision => "Provision",
            NodeLabel::LegalNorm => "LegalNorm",
            NodeLabel::LegalApplication => "LegalApplication",
        }
    }

    /// Short row name used in statistics tables.
    pub fn short_name(self) -> &'static str {
        match self {
            NodeLabel::Fact => "Fact",
            NodeLabel::Provision => "Provision",
            NodeLabel::LegalNorm => "Norm",
            NodeLabel::LegalApplication => "Application",
        }
    }

    pub(crate) fn id_tag(self) -> char {
        match self {
            NodeLabel::Fact => 'F',
            NodeLabel::Provision => 'P',
            NodeLabel::LegalNorm => 'N',
            NodeLabel::LegalApplication => 'A',
        }
    }
}

impl fmt::Display for NodeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NodeLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Fact" => Ok(NodeLabel::Fact),
            "Provision" => Ok(NodeLabel::Provision),
            "LegalNorm" => Ok(NodeLabel::LegalNorm),
            "LegalApplication" => Ok(NodeLabel::LegalApplication),
            other => Err(format!("unknown node label `{other}`")),
        }
    }
}

/// Directed edge kinds, stored in reasoning direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EdgeKind {
    /// Provision → LegalNorm
    DerivesNorm,
    /// LegalNorm → LegalApplication
    AppliesNorm,
    /// Fact → LegalApplication
    ToFact,
    /// Fact → Fact (layered facts)
    #[cfg(feature = "extended-edges")]
    SupportsFact,
    /// LegalNorm → LegalNorm (layered norms)
    #[cfg(feature = "extended-edges")]
    RefinesNorm,
}

impl EdgeKind {
    pub const CANONICAL: [EdgeKind; 3] =
        [EdgeKind::DerivesNorm, EdgeKind::AppliesNorm, EdgeKind::ToFact];

    /// Required (source, target) labels.
    pub fn signature(self) -> (NodeLabel, NodeLabel) {
        match self {
            EdgeKind::DerivesNorm => (NodeLabel::Provision, NodeLabel::LegalNorm),
            EdgeKind::AppliesNorm => (NodeLabel::LegalNorm, NodeLabel::LegalApplication),
            EdgeKind::ToFact => (NodeLabel::Fact, NodeLabel::LegalApplication),
            #[cfg(feature = "extended-edges")]
            EdgeKind::SupportsFact => (NodeLabel::Fact, NodeLabel::Fact),
            #[cfg(feature = "extended-edges")]
            EdgeKind::RefinesNorm => (NodeLabel::LegalNorm, NodeLabel::LegalNorm),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeKind::DerivesNorm => "DerivesNorm",
            EdgeKind::AppliesNorm => "AppliesNorm",
            EdgeKind::ToFact => "ToFact",
            #[cfg(feature = "extended-edges")]
            EdgeKind::SupportsFact => "SupportsFact",
            #[cfg(feature = "extended-edges")]
            EdgeKind::RefinesNorm => "RefinesNorm",
        }
    }

    /// Table row name in `Source → Target` form.
    pub fn arrow_name(self) -> &'static str {
        match self {
            EdgeKind::DerivesNorm => "Provision → Norm",
            EdgeKind::AppliesNorm => "Norm → Application",
            EdgeKind::ToFact => "Fact → Application",
            #[cfg(feature = "extended-edges")]
            EdgeKind::SupportsFact => "Fact → Fact",
            #[cfg(feature = "extended-edges")]
            EdgeKind::RefinesNorm => "Norm → Norm",
        }
    }

    pub fn all() -> Vec<EdgeKind> {
        #[allow(unused_mut)]
        let mut v = EdgeKind::CANONICAL.to_vec();
        #[cfg(feature = "extended-edges")]
        v.extend([EdgeKind::SupportsFact, EdgeKind::RefinesNorm]);
        v
    }
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EdgeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EdgeKind::all()
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown edge kind `{s}`"))
    }
}

/// Where a node or edge came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Oracle,
    Mock,
    Remote,
    Imported,
}
