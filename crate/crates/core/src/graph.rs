//! AMR graph data model: nodes, relations, attributes and the triple view.
//!
//! Graphs are immutable values once built. Mutating constructors return
//! `Result` so that invariants (declared endpoints, unique variables, edge
//! set semantics) hold for every live `AmrGraph`.

use std::collections::BTreeSet;

use indexmap::IndexMap;
use thiserror::Error;

/// Variable identifier of a graph node. Opaque; uniqueness is what matters.
pub type VarId = String;

/// A labeled relation between two declared nodes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub source: VarId,
    /// Role label without the leading `:`.
    pub role: String,
    pub target: VarId,
}

/// A constant-valued property of a node, e.g. `:polarity -` or `:wiki "Q76"`.
///
/// Values are stored verbatim as they appear on the surface, including
/// string quotes, so serialization round-trips exactly.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Attribute {
    pub source: VarId,
    pub role: String,
    pub value: String,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("variable `{0}` is already declared")]
    DuplicateVariable(VarId),
    #[error("variable `{0}` is not declared")]
    UndeclaredVariable(VarId),
    #[error("graph has no nodes")]
    Empty,
}

/// Rooted, labeled, directed graph of concepts, relations and attributes.
///
/// Node insertion order is preserved; it drives deterministic serialization
/// and the machine's default-root rule. Equality ignores ordering: two
/// graphs are equal when they have the same variable→concept map, edge set,
/// attribute set and root.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AmrGraph {
    nodes: IndexMap<VarId, String>,
    edges: BTreeSet<Edge>,
    attributes: BTreeSet<Attribute>,
    root: Option<VarId>,
}

impl AmrGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares a new node. Errors if the variable is already taken.
    pub fn add_node(&mut self, var: impl Into<VarId>, concept: impl Into<String>) -> Result<(), GraphError> {
        let var = var.into();
        if self.nodes.contains_key(&var) {
            return Err(GraphError::DuplicateVariable(var));
        }
        self.nodes.insert(var, concept.into());
        Ok(())
    }

    /// Adds an edge between two declared nodes. Returns `false` when the
    /// identical (source, role, target) edge is already present.
    ///
    /// Inverse roles are normalized: `(a, R-of, b)` is stored as `(b, R, a)`.
    /// No stored edge role ever ends in `-of`, which keeps the triple view
    /// and Smatch insensitive to which surface direction produced the edge.
    pub fn add_edge(
        &mut self,
        source: impl Into<VarId>,
        role: impl Into<String>,
        target: impl Into<VarId>,
    ) -> Result<bool, GraphError> {
        let source = source.into();
        let role = role.into();
        let target = target.into();
        let edge = match role.strip_suffix("-of") {
            Some(base) if !base.is_empty() => Edge {
                source: target,
                role: base.to_string(),
                target: source,
            },
            _ => Edge { source, role, target },
        };
        if !self.nodes.contains_key(&edge.source) {
            return Err(GraphError::UndeclaredVariable(edge.source));
        }
        if !self.nodes.contains_key(&edge.target) {
            return Err(GraphError::UndeclaredVariable(edge.target));
        }
        Ok(self.edges.insert(edge))
    }

    /// Adds a constant attribute to a declared node. Set semantics.
    pub fn add_attribute(
        &mut self,
        source: impl Into<VarId>,
        role: impl Into<String>,
        value: impl Into<String>,
    ) -> Result<bool, GraphError> {
        let attr = Attribute {
            source: source.into(),
            role: role.into(),
            value: value.into(),
        };
        if !self.nodes.contains_key(&attr.source) {
            return Err(GraphError::UndeclaredVariable(attr.source));
        }
        Ok(self.attributes.insert(attr))
    }

    pub fn set_root(&mut self, var: impl Into<VarId>) -> Result<(), GraphError> {
        let var = var.into();
        if !self.nodes.contains_key(&var) {
            return Err(GraphError::UndeclaredVariable(var));
        }
        self.root = Some(var);
        Ok(())
    }

    pub fn root(&self) -> Option<&VarId> {
        self.root.as_ref()
    }

    pub fn concept(&self, var: &str) -> Option<&str> {
        self.nodes.get(var).map(String::as_str)
    }

    pub fn has_node(&self, var: &str) -> bool {
        self.nodes.contains_key(var)
    }

    /// Variables in declaration order.
    pub fn variables(&self) -> impl Iterator<Item = &VarId> {
        self.nodes.keys()
    }

    /// (variable, concept) pairs in declaration order.
    pub fn nodes(&self) -> impl Iterator<Item = (&VarId, &str)> {
        self.nodes.iter().map(|(v, c)| (v, c.as_str()))
    }

    /// First-declared variable, used as the lenient default root.
    pub fn first_variable(&self) -> Option<&VarId> {
        self.nodes.keys().next()
    }

    /// Position of a variable in declaration order.
    pub fn declaration_index(&self, var: &str) -> Option<usize> {
        self.nodes.get_index_of(var)
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter()
    }

    pub fn attributes(&self) -> impl Iterator<Item = &Attribute> {
        self.attributes.iter()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn attribute_count(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn has_edge(&self, source: &str, role: &str, target: &str) -> bool {
        self.edges.contains(&Edge {
            source: source.to_string(),
            role: role.to_string(),
            target: target.to_string(),
        })
    }

    pub fn remove_edge(&mut self, edge: &Edge) -> bool {
        self.edges.remove(edge)
    }

    pub fn remove_attribute(&mut self, attr: &Attribute) -> bool {
        self.attributes.remove(attr)
    }

    /// A graph is valid when non-empty graphs carry a declared root.
    /// Endpoint declaration and set semantics hold by construction.
    pub fn is_valid(&self) -> bool {
        match &self.root {
            Some(r) => self.nodes.contains_key(r),
            None => self.nodes.is_empty(),
        }
    }

    /// True iff every node is reachable from the root treating edges as
    /// undirected. Empty graphs count as connected.
    pub fn is_connected(&self) -> bool {
        if self.nodes.is_empty() {
            return true;
        }
        let Some(root) = &self.root else { return false };
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        let mut frontier: Vec<&str> = vec![root.as_str()];
        seen.insert(root.as_str());
        while let Some(v) = frontier.pop() {
            for e in &self.edges {
                if e.source == v && seen.insert(e.target.as_str()) {
                    frontier.push(e.target.as_str());
                }
                if e.target == v && seen.insert(e.source.as_str()) {
                    frontier.push(e.source.as_str());
                }
            }
        }
        seen.len() == self.nodes.len()
    }

    /// Variables not reachable from the root (undirected), declaration order.
    pub fn unreachable_variables(&self) -> Vec<VarId> {
        if self.nodes.is_empty() {
            return Vec::new();
        }
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        if let Some(root) = &self.root {
            let mut frontier: Vec<&str> = vec![root.as_str()];
            seen.insert(root.as_str());
            while let Some(v) = frontier.pop() {
                for e in &self.edges {
                    if e.source == v && seen.insert(e.target.as_str()) {
                        frontier.push(e.target.as_str());
                    }
                    if e.target == v && seen.insert(e.source.as_str()) {
                        frontier.push(e.source.as_str());
                    }
                }
            }
        }
        self.nodes
            .keys()
            .filter(|v| !seen.contains(v.as_str()))
            .cloned()
            .collect()
    }

    /// The triple view used by Smatch: one `instance` triple per node, one
    /// `TOP` triple for the root, one triple per relation and attribute.
    pub fn to_triples(&self) -> BTreeSet<Triple> {
        let mut out = BTreeSet::new();
        for (var, concept) in &self.nodes {
            out.insert(Triple::Instance {
                var: var.clone(),
                concept: concept.clone(),
            });
        }
        if let Some(root) = &self.root {
            out.insert(Triple::Top { var: root.clone() });
        }
        for e in &self.edges {
            out.insert(Triple::Relation {
                role: e.role.clone(),
                source: e.source.clone(),
                target: e.target.clone(),
            });
        }
        for a in &self.attributes {
            out.insert(Triple::Attribute {
                role: a.role.clone(),
                source: a.source.clone(),
                value: a.value.clone(),
            });
        }
        out
    }
}

/// One element of the triple view.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Triple {
    Instance { var: VarId, concept: String },
    Top { var: VarId },
    Relation { role: String, source: VarId, target: VarId },
    Attribute { role: String, source: VarId, value: String },
}

impl std::fmt::Display for Triple {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Triple::Instance { var, concept } => write!(f, "instance({var}, {concept})"),
            Triple::Top { var } => write!(f, "TOP({var})"),
            Triple::Relation { role, source, target } => write!(f, "{role}({source}, {target})"),
            Triple::Attribute { role, source, value } => write!(f, "{role}({source}, {value})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn boy() -> AmrGraph {
        let mut g = AmrGraph::new();
        g.add_node("b", "boy").unwrap();
        g.set_root("b").unwrap();
        g
    }

    #[test]
    fn single_node_triples() {
        let g = boy();
        let triples = g.to_triples();
        assert_eq!(triples.len(), 2);
        assert!(triples.contains(&Triple::Instance { var: "b".into(), concept: "boy".into() }));
        assert!(triples.contains(&Triple::Top { var: "b".into() }));
    }

    #[test]
    fn want_boy_triple_count() {
        let mut g = AmrGraph::new();
        g.add_node("w", "want-01").unwrap();
        g.add_node("b", "boy").unwrap();
        g.add_edge("w", "ARG0", "b").unwrap();
        g.set_root("w").unwrap();
        let triples = g.to_triples();
        assert_eq!(triples.len(), 4);
        assert!(triples.contains(&Triple::Relation {
            role: "ARG0".into(),
            source: "w".into(),
            target: "b".into()
        }));
    }

    #[test]
    fn attribute_triple() {
        let mut g = AmrGraph::new();
        g.add_node("n", "negate-01").unwrap();
        g.add_attribute("n", "polarity", "-").unwrap();
        g.set_root("n").unwrap();
        let triples = g.to_triples();
        assert_eq!(triples.len(), 3);
        assert!(triples.contains(&Triple::Attribute {
            role: "polarity".into(),
            source: "n".into(),
            value: "-".into()
        }));
    }

    #[test]
    fn triple_count_identity() {
        let mut g = AmrGraph::new();
        g.add_node("a", "alpha").unwrap();
        g.add_node("b", "beta").unwrap();
        g.add_node("c", "gamma").unwrap();
        g.add_edge("a", "ARG0", "b").unwrap();
        g.add_edge("a", "ARG1", "c").unwrap();
        g.add_attribute("b", "quant", "3").unwrap();
        g.set_root("a").unwrap();
        assert_eq!(
            g.to_triples().len(),
            g.node_count() + g.edge_count() + g.attribute_count() + 1
        );
    }

    #[test]
    fn duplicate_edge_not_stored() {
        let mut g = AmrGraph::new();
        g.add_node("a", "alpha").unwrap();
        g.add_node("b", "beta").unwrap();
        assert!(g.add_edge("a", "ARG0", "b").unwrap());
        assert!(!g.add_edge("a", "ARG0", "b").unwrap());
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn duplicate_variable_rejected() {
        let mut g = AmrGraph::new();
        g.add_node("a", "alpha").unwrap();
        assert_eq!(g.add_node("a", "beta"), Err(GraphError::DuplicateVariable("a".into())));
    }

    #[test]
    fn undeclared_endpoint_rejected() {
        let mut g = AmrGraph::new();
        g.add_node("a", "alpha").unwrap();
        assert!(g.add_edge("a", "ARG0", "zz").is_err());
        assert!(g.add_edge("zz", "ARG0", "a").is_err());
        assert!(g.add_attribute("zz", "polarity", "-").is_err());
        assert!(g.set_root("zz").is_err());
    }

    #[test]
    fn connectivity() {
        let g = boy();
        assert!(g.is_connected());

        let mut two = AmrGraph::new();
        two.add_node("a", "alpha").unwrap();
        two.add_node("b", "beta").unwrap();
        two.set_root("a").unwrap();
        assert!(!two.is_connected());
        assert_eq!(two.unreachable_variables(), vec!["b".to_string()]);

        let mut chain = AmrGraph::new();
        chain.add_node("a", "alpha").unwrap();
        chain.add_node("b", "beta").unwrap();
        chain.add_node("c", "gamma").unwrap();
        chain.add_edge("a", "ARG0", "b").unwrap();
        chain.add_edge("b", "ARG0", "c").unwrap();
        chain.set_root("a").unwrap();
        assert!(chain.is_connected());

        // Reachability must ignore direction: parent of the root counts.
        let mut inv = AmrGraph::new();
        inv.add_node("r", "rho").unwrap();
        inv.add_node("p", "pi").unwrap();
        inv.add_edge("p", "ARG0", "r").unwrap();
        inv.set_root("r").unwrap();
        assert!(inv.is_connected());
    }

    #[test]
    fn empty_graph_is_connected_and_valid() {
        let g = AmrGraph::new();
        assert!(g.is_connected());
        assert!(g.is_valid());
        assert!(g.to_triples().is_empty());
    }
}
