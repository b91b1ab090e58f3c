//! PENMAN notation reader and writer.
//!
//! Parsing normalizes inverse roles: a relation `:R-of x` under node `n`
//! becomes the edge `(x, R, n)`. `AmrGraph::add_edge` applies the same
//! normalization, so no stored edge role ever ends in `-of` and the writer
//! is free to use `-of` for relations it must emit against edge direction.
//! Attribute roles are kept verbatim (a constant cannot be an edge source).
//!
//! Serialization is deterministic: nodes are introduced depth-first from the
//! root, a node's relations are ordered by the declaration index of the
//! other endpoint and then by role label, attributes follow relations.

use std::fmt::Write as _;

use thiserror::Error;

use crate::graph::{AmrGraph, VarId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    /// References to variables never declared anywhere are errors.
    #[default]
    Strict,
    /// Undeclared references are auto-declared with concept `amr-unknown`.
    Lenient,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PenmanError {
    #[error("{line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: duplicate declaration of variable `{var}`")]
    DuplicateDeclaration { var: String, line: usize, col: usize },
    #[error("{line}:{col}: reference to undeclared variable `{var}`")]
    UndeclaredReference { var: String, line: usize, col: usize },
    #[error("cannot serialize: empty graph")]
    EmptyGraph,
    #[error("cannot serialize: graph has no root")]
    MissingRoot,
    #[error("cannot serialize: unreachable variables {0:?}")]
    Disconnected(Vec<VarId>),
    #[error("cannot serialize: {0}")]
    Unwritable(String),
}

/// True for tokens that read back as a variable reference: a letter
/// followed by letters, digits, `_` or `-`.
pub fn is_variable_like(token: &str) -> bool {
    let mut chars = token.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

fn is_token_safe(s: &str) -> bool {
    !s.is_empty()
        && !s.chars().any(|c| {
            c.is_whitespace() || matches!(c, '(' | ')' | '"' | '/' | ':')
        })
}

// ---------------------------------------------------------------------------
// Tokenizer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    LParen,
    RParen,
    Slash,
    /// Role label without the leading `:`.
    Role(String),
    /// Quoted string, stored verbatim including the quotes.
    Str(String),
    Symbol(String),
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn tokenize(text: &str) -> Result<Vec<Spanned>, PenmanError> {
    let mut out = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = text.chars().peekable();

    while let Some(&c) = chars.peek() {
        let (tline, tcol) = (line, col);
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            _ if c.is_whitespace() => {
                chars.next();
                col += 1;
            }
            '(' => {
                chars.next();
                col += 1;
                out.push(Spanned { tok: Tok::LParen, line: tline, col: tcol });
            }
            ')' => {
                chars.next();
                col += 1;
                out.push(Spanned { tok: Tok::RParen, line: tline, col: tcol });
            }
            '/' => {
                chars.next();
                col += 1;
                out.push(Spanned { tok: Tok::Slash, line: tline, col: tcol });
            }
            '"' => {
                let mut raw = String::from('"');
                chars.next();
                col += 1;
                let mut closed = false;
                while let Some(c) = chars.next() {
                    if c == '\n' {
                        line += 1;
                        col = 1;
                    } else {
                        col += 1;
                    }
                    raw.push(c);
                    if c == '\\' {
                        if let Some(esc) = chars.next() {
                            raw.push(esc);
                            col += 1;
                        }
                        continue;
                    }
                    if c == '"' {
                        closed = true;
                        break;
                    }
                }
                if !closed {
                    return Err(PenmanError::Syntax {
                        line: tline,
                        col: tcol,
                        msg: "unterminated string literal".into(),
                    });
                }
                out.push(Spanned { tok: Tok::Str(raw), line: tline, col: tcol });
            }
            _ => {
                let mut word = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || matches!(c, '(' | ')' | '/' | '"') {
                        break;
                    }
                    word.push(c);
                    chars.next();
                    col += 1;
                }
                if let Some(rest) = word.strip_prefix(':') {
                    if rest.is_empty() {
                        return Err(PenmanError::Syntax {
                            line: tline,
                            col: tcol,
                            msg: "empty role label".into(),
                        });
                    }
                    out.push(Spanned { tok: Tok::Role(rest.to_string()), line: tline, col: tcol });
                } else {
                    out.push(Spanned { tok: Tok::Symbol(word), line: tline, col: tcol });
                }
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct AstNode {
    var: String,
    concept: String,
    line: usize,
    col: usize,
    relations: Vec<(String, AstTarget)>,
}

enum AstTarget {
    Child(AstNode),
    /// A bare token: quoted string, constant, or variable reference.
    Leaf { raw: String, quoted: bool, line: usize, col: usize },
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Spanned> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Spanned> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn eof_err(&self, msg: &str) -> PenmanError {
        let (line, col) = self
            .toks
            .last()
            .map(|t| (t.line, t.col))
            .unwrap_or((1, 1));
        PenmanError::Syntax { line, col, msg: msg.to_string() }
    }

    fn node(&mut self) -> Result<AstNode, PenmanError> {
        let open = self.next().ok_or_else(|| self.eof_err("expected `(`"))?;
        if open.tok != Tok::LParen {
            return Err(PenmanError::Syntax {
                line: open.line,
                col: open.col,
                msg: "expected `(`".into(),
            });
        }
        let var_tok = self.next().ok_or_else(|| self.eof_err("expected variable"))?;
        let var = match var_tok.tok {
            Tok::Symbol(s) if is_variable_like(&s) => s,
            _ => {
                return Err(PenmanError::Syntax {
                    line: var_tok.line,
                    col: var_tok.col,
                    msg: "expected variable name".into(),
                })
            }
        };
        let slash = self.next().ok_or_else(|| self.eof_err("expected `/`"))?;
        if slash.tok != Tok::Slash {
            return Err(PenmanError::Syntax {
                line: slash.line,
                col: slash.col,
                msg: "expected `/` after variable".into(),
            });
        }
        let concept_tok = self.next().ok_or_else(|| self.eof_err("expected concept"))?;
        let concept = match concept_tok.tok {
            Tok::Symbol(s) => s,
            _ => {
                return Err(PenmanError::Syntax {
                    line: concept_tok.line,
                    col: concept_tok.col,
                    msg: "expected concept label".into(),
                })
            }
        };
        let mut relations = Vec::new();
        loop {
            match self.peek() {
                Some(t) if t.tok == Tok::RParen => {
                    self.next();
                    break;
                }
                Some(t) => {
                    let (rline, rcol) = (t.line, t.col);
                    let role = match self.next().unwrap().tok {
                        Tok::Role(r) => r,
                        _ => {
                            return Err(PenmanError::Syntax {
                                line: rline,
                                col: rcol,
                                msg: "expected `:role` or `)`".into(),
                            })
                        }
                    };
                    let target = match self.peek() {
                        Some(t) if t.tok == Tok::LParen => AstTarget::Child(self.node()?),
                        Some(t) => {
                            let (lline, lcol) = (t.line, t.col);
                            match self.next().unwrap().tok {
                                Tok::Symbol(s) => {
                                    AstTarget::Leaf { raw: s, quoted: false, line: lline, col: lcol }
                                }
                                Tok::Str(s) => {
                                    AstTarget::Leaf { raw: s, quoted: true, line: lline, col: lcol }
                                }
                                _ => {
                                    return Err(PenmanError::Syntax {
                                        line: lline,
                                        col: lcol,
                                        msg: format!("expected value after `:{role}`"),
                                    })
                                }
                            }
                        }
                        None => return Err(self.eof_err("unclosed `(`")),
                    };
                    relations.push((role, target));
                }
                None => return Err(self.eof_err("unclosed `(`")),
            }
        }
        Ok(AstNode { var, concept, line: var_tok.line, col: var_tok.col, relations })
    }
}

fn collect_declarations(
    node: &AstNode,
    graph: &mut AmrGraph,
) -> Result<(), PenmanError> {
    if graph.has_node(&node.var) {
        return Err(PenmanError::DuplicateDeclaration {
            var: node.var.clone(),
            line: node.line,
            col: node.col,
        });
    }
    graph
        .add_node(node.var.clone(), node.concept.clone())
        .expect("declaration checked above");
    for (_, target) in &node.relations {
        if let AstTarget::Child(child) = target {
            collect_declarations(child, graph)?;
        }
    }
    Ok(())
}

fn build_relations(
    node: &AstNode,
    graph: &mut AmrGraph,
    mode: ParseMode,
) -> Result<(), PenmanError> {
    for (role, target) in &node.relations {
        match target {
            AstTarget::Child(child) => {
                add_normalized_edge(graph, &node.var, role, &child.var);
                build_relations(child, graph, mode)?;
            }
            AstTarget::Leaf { raw, quoted, line, col } => {
                if !quoted && is_variable_like(raw) {
                    if !graph.has_node(raw) {
                        match mode {
                            ParseMode::Strict => {
                                return Err(PenmanError::UndeclaredReference {
                                    var: raw.clone(),
                                    line: *line,
                                    col: *col,
                                });
                            }
                            ParseMode::Lenient => {
                                graph
                                    .add_node(raw.clone(), "amr-unknown")
                                    .expect("absence checked above");
                            }
                        }
                    }
                    add_normalized_edge(graph, &node.var, role, raw);
                } else {
                    graph
                        .add_attribute(node.var.clone(), role.clone(), raw.clone())
                        .expect("source declared in first pass");
                }
            }
        }
    }
    Ok(())
}

fn add_normalized_edge(graph: &mut AmrGraph, source: &str, role: &str, target: &str) {
    // `AmrGraph::add_edge` normalizes `-of` roles.
    graph
        .add_edge(source, role, target)
        .expect("endpoints declared before relations are added");
}

/// Parses one well-formed PENMAN expression into a graph.
pub fn parse_penman(text: &str, mode: ParseMode) -> Result<AmrGraph, PenmanError> {
    let toks = tokenize(text)?;
    if toks.is_empty() {
        return Err(PenmanError::Syntax { line: 1, col: 1, msg: "empty input".into() });
    }
    let mut parser = Parser { toks, pos: 0 };
    let ast = parser.node()?;
    if let Some(extra) = parser.peek() {
        return Err(PenmanError::Syntax {
            line: extra.line,
            col: extra.col,
            msg: "trailing input after graph".into(),
        });
    }
    let mut graph = AmrGraph::new();
    collect_declarations(&ast, &mut graph)?;
    build_relations(&ast, &mut graph, mode)?;
    graph.set_root(ast.var).expect("root declared in first pass");
    Ok(graph)
}

// ---------------------------------------------------------------------------
// Serializer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PenmanStyle {
    /// One relation per line, indented by depth.
    #[default]
    Pretty,
    /// Whole graph on a single line, for wire protocols.
    SingleLine,
}

struct PendingRelation {
    role: String,
    /// Role to print (base or `-of` form).
    other: VarId,
    decl_index: usize,
    inverse: bool,
}

/// Serializes a rooted connected graph to PENMAN text.
pub fn serialize_penman(graph: &AmrGraph, style: PenmanStyle) -> Result<String, PenmanError> {
    if graph.is_empty() {
        return Err(PenmanError::EmptyGraph);
    }
    let Some(root) = graph.root() else {
        return Err(PenmanError::MissingRoot);
    };
    let unreachable = graph.unreachable_variables();
    if !unreachable.is_empty() {
        return Err(PenmanError::Disconnected(unreachable));
    }
    for (var, concept) in graph.nodes() {
        if !is_variable_like(var) {
            return Err(PenmanError::Unwritable(format!("variable `{var}` is not serializable")));
        }
        if !is_token_safe(concept) {
            return Err(PenmanError::Unwritable(format!("concept `{concept}` is not serializable")));
        }
    }
    for e in graph.edges() {
        if !is_token_safe(&e.role) {
            return Err(PenmanError::Unwritable(format!("role `{}` is not serializable", e.role)));
        }
    }
    for a in graph.attributes() {
        if !is_token_safe(&a.role) {
            return Err(PenmanError::Unwritable(format!("role `{}` is not serializable", a.role)));
        }
        let quoted = a.value.len() >= 2 && a.value.starts_with('"') && a.value.ends_with('"');
        if !quoted {
            if !is_token_safe(&a.value) {
                return Err(PenmanError::Unwritable(format!(
                    "attribute value `{}` is not serializable",
                    a.value
                )));
            }
            if is_variable_like(&a.value) && graph.has_node(&a.value) {
                return Err(PenmanError::Unwritable(format!(
                    "attribute value `{}` collides with a variable",
                    a.value
                )));
            }
        }
    }

    let tree = spanning_tree(graph, root);
    let mut emitted: std::collections::BTreeSet<(VarId, String, VarId)> = Default::default();
    let mut visited: std::collections::BTreeSet<VarId> = Default::default();
    let mut out = String::new();
    visited.insert(root.clone());
    emit_node(graph, root, 0, style, &tree, &mut visited, &mut emitted, &mut out);
    Ok(out)
}

/// Chooses one introducing edge per non-root node, preferring forward
/// edges; an inverse (`-of`) introduction happens only when a node is not
/// reachable by forward edges alone. Keyed by the introduced node; the
/// flag marks inverse introduction.
fn spanning_tree(
    graph: &AmrGraph,
    root: &VarId,
) -> std::collections::BTreeMap<VarId, (crate::graph::Edge, bool)> {
    let mut tree = std::collections::BTreeMap::new();
    let mut reached: std::collections::BTreeSet<VarId> = std::collections::BTreeSet::new();
    reached.insert(root.clone());
    loop {
        // Forward closure.
        let mut grew = true;
        while grew {
            grew = false;
            for e in graph.edges() {
                if reached.contains(&e.source) && !reached.contains(&e.target) {
                    tree.insert(e.target.clone(), (e.clone(), false));
                    reached.insert(e.target.clone());
                    grew = true;
                }
            }
        }
        if reached.len() == graph.node_count() {
            return tree;
        }
        // One inverse step across the boundary, then back to forward growth.
        let mut candidates: Vec<&crate::graph::Edge> = graph
            .edges()
            .filter(|e| reached.contains(&e.target) && !reached.contains(&e.source))
            .collect();
        candidates.sort_by_key(|e| {
            (graph.declaration_index(&e.source).unwrap_or(usize::MAX), &e.role, &e.target)
        });
        match candidates.first() {
            Some(e) => {
                tree.insert(e.source.clone(), ((*e).clone(), true));
                reached.insert(e.source.clone());
            }
            // Unreachable nodes were rejected before serialization starts.
            None => return tree,
        }
    }
}

fn pending_relations(
    graph: &AmrGraph,
    var: &str,
    tree: &std::collections::BTreeMap<VarId, (crate::graph::Edge, bool)>,
    visited: &std::collections::BTreeSet<VarId>,
    emitted: &std::collections::BTreeSet<(VarId, String, VarId)>,
) -> Vec<PendingRelation> {
    let mut rels = Vec::new();
    for e in graph.edges() {
        if emitted.contains(&(e.source.clone(), e.role.clone(), e.target.clone())) {
            continue;
        }
        let (other, inverse) = if e.source == var {
            (&e.target, false)
        } else if e.target == var {
            (&e.source, true)
        } else {
            continue;
        };
        // A tree edge is claimed at its attachment side; every other edge
        // is claimed as a bare reference at the later-visited endpoint.
        let claimable = match tree.get(other) {
            Some((te, _)) if te == e => true,
            _ => visited.contains(other),
        };
        if !claimable || (e.source == e.target && inverse) {
            continue;
        }
        rels.push(PendingRelation {
            role: e.role.clone(),
            other: other.clone(),
            decl_index: graph.declaration_index(other).unwrap_or(usize::MAX),
            inverse,
        });
    }
    rels.sort_by(|a, b| {
        (a.decl_index, &a.role, a.inverse, &a.other).cmp(&(b.decl_index, &b.role, b.inverse, &b.other))
    });
    rels
}

#[allow(clippy::too_many_arguments)]
fn emit_node(
    graph: &AmrGraph,
    var: &str,
    depth: usize,
    style: PenmanStyle,
    tree: &std::collections::BTreeMap<VarId, (crate::graph::Edge, bool)>,
    visited: &mut std::collections::BTreeSet<VarId>,
    emitted: &mut std::collections::BTreeSet<(VarId, String, VarId)>,
    out: &mut String,
) {
    let concept = graph.concept(var).expect("node exists");
    write!(out, "({var} / {concept}").unwrap();

    // Relations become claimable during recursion, so re-scan after each.
    loop {
        let rels = pending_relations(graph, var, tree, visited, emitted);
        let Some(rel) = rels.into_iter().next() else { break };
        let key = if rel.inverse {
            (rel.other.clone(), rel.role.clone(), var.to_string())
        } else {
            (var.to_string(), rel.role.clone(), rel.other.clone())
        };
        emitted.insert(key);
        let printed_role = if rel.inverse {
            format!("{}-of", rel.role)
        } else {
            rel.role.clone()
        };
        match style {
            PenmanStyle::Pretty => {
                out.push('\n');
                out.push_str(&"    ".repeat(depth + 1));
            }
            PenmanStyle::SingleLine => out.push(' '),
        }
        write!(out, ":{printed_role} ").unwrap();
        if visited.insert(rel.other.clone()) {
            emit_node(graph, &rel.other, depth + 1, style, tree, visited, emitted, out);
        } else {
            out.push_str(&rel.other);
        }
    }

    let mut attrs: Vec<_> = graph.attributes().filter(|a| a.source == var).collect();
    attrs.sort_by(|a, b| (&a.role, &a.value).cmp(&(&b.role, &b.value)));
    for a in attrs {
        match style {
            PenmanStyle::Pretty => {
                out.push('\n');
                out.push_str(&"    ".repeat(depth + 1));
            }
            PenmanStyle::SingleLine => out.push(' '),
        }
        write!(out, ":{} {}", a.role, a.value).unwrap();
    }
    out.push(')');
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> AmrGraph {
        parse_penman(text, ParseMode::Strict).unwrap()
    }

    #[test]
    fn single_node() {
        let g = parse("(b / boy)");
        assert_eq!(g.node_count(), 1);
        assert_eq!(g.concept("b"), Some("boy"));
        assert_eq!(g.root(), Some(&"b".to_string()));
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.attribute_count(), 0);
    }

    #[test]
    fn reentrancy_creates_single_node() {
        let g = parse("(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-02 :ARG0 b))");
        assert_eq!(g.node_count(), 3);
        assert!(g.has_edge("w", "ARG0", "b"));
        assert!(g.has_edge("w", "ARG1", "g"));
        assert!(g.has_edge("g", "ARG0", "b"));
        assert_eq!(g.edge_count(), 3);
    }

    #[test]
    fn dash_is_constant() {
        let g = parse("(n / negate-01 :polarity -)");
        assert_eq!(g.node_count(), 1);
        assert_eq!(g.attribute_count(), 1);
        let a = g.attributes().next().unwrap();
        assert_eq!((a.source.as_str(), a.role.as_str(), a.value.as_str()), ("n", "polarity", "-"));
    }

    #[test]
    fn quoted_and_numeric_constants() {
        let g = parse(r#"(p / person :wiki "Q76" :quant 5 :value 3.14)"#);
        assert_eq!(g.node_count(), 1);
        assert_eq!(g.attribute_count(), 3);
        let values: Vec<_> = g.attributes().map(|a| a.value.as_str()).collect();
        assert!(values.contains(&"\"Q76\""));
        assert!(values.contains(&"5"));
        assert!(values.contains(&"3.14"));
    }

    #[test]
    fn inverse_role_normalized() {
        let g = parse("(b / boy :ARG0-of (w / want-01))");
        assert!(g.has_edge("w", "ARG0", "b"));
        assert_eq!(g.root(), Some(&"b".to_string()));
    }

    #[test]
    fn malformed_paren_reports_position() {
        let err = parse_penman("(b / boy", ParseMode::Strict).unwrap_err();
        assert!(matches!(err, PenmanError::Syntax { .. }));
        let err = parse_penman("(b / boy))", ParseMode::Strict).unwrap_err();
        match err {
            PenmanError::Syntax { line, col, .. } => {
                assert_eq!(line, 1);
                assert_eq!(col, 10);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn duplicate_declaration_rejected() {
        let err = parse_penman("(b / boy :ARG0 (b / boat))", ParseMode::Strict).unwrap_err();
        assert!(matches!(err, PenmanError::DuplicateDeclaration { ref var, .. } if var == "b"));
    }

    #[test]
    fn undeclared_reference_strict_vs_lenient() {
        let text = "(w / want-01 :ARG0 b)";
        let err = parse_penman(text, ParseMode::Strict).unwrap_err();
        assert!(matches!(err, PenmanError::UndeclaredReference { ref var, .. } if var == "b"));

        let g = parse_penman(text, ParseMode::Lenient).unwrap();
        assert_eq!(g.concept("b"), Some("amr-unknown"));
        assert!(g.has_edge("w", "ARG0", "b"));
    }

    #[test]
    fn forward_reference_allowed() {
        let g = parse("(w / want-01 :ARG0 b :ARG1 (b / boy))");
        assert_eq!(g.node_count(), 2);
        assert!(g.has_edge("w", "ARG0", "b"));
        assert!(g.has_edge("w", "ARG1", "b"));
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn serialize_single_node() {
        let mut g = AmrGraph::new();
        g.add_node("b", "boy").unwrap();
        g.set_root("b").unwrap();
        assert_eq!(serialize_penman(&g, PenmanStyle::Pretty).unwrap(), "(b / boy)");
    }

    #[test]
    fn serialize_reentrancy_as_bare_reference() {
        let g = parse("(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-02 :ARG0 b))");
        let text = serialize_penman(&g, PenmanStyle::SingleLine).unwrap();
        assert_eq!(text.matches("(b / boy)").count(), 1);
        assert!(text.contains(":ARG0 b"));
        let back = parse(&text);
        assert_eq!(back, g);
    }

    #[test]
    fn serialize_uses_inverse_for_root_parent() {
        let mut g = AmrGraph::new();
        g.add_node("r", "rest-01").unwrap();
        g.add_node("p", "person").unwrap();
        g.add_edge("p", "ARG0", "r").unwrap();
        g.set_root("r").unwrap();
        let text = serialize_penman(&g, PenmanStyle::SingleLine).unwrap();
        assert_eq!(text, "(r / rest-01 :ARG0-of (p / person))");
        assert_eq!(parse(&text), g);
    }

    #[test]
    fn serialize_disconnected_names_unreachable() {
        let mut g = AmrGraph::new();
        g.add_node("a", "alpha").unwrap();
        g.add_node("b", "beta").unwrap();
        g.set_root("a").unwrap();
        match serialize_penman(&g, PenmanStyle::Pretty).unwrap_err() {
            PenmanError::Disconnected(vars) => assert_eq!(vars, vec!["b".to_string()]),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn add_edge_normalizes_inverse_roles() {
        let mut g = AmrGraph::new();
        g.add_node("a", "alpha").unwrap();
        g.add_node("b", "beta").unwrap();
        g.add_edge("a", "ARG0-of", "b").unwrap();
        assert!(g.has_edge("b", "ARG0", "a"));
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn round_trip_fixtures() {
        let fixtures = [
            "(b / boy)",
            "(w / want-01 :ARG0 (b / boy))",
            "(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-02 :ARG0 b))",
            "(n / negate-01 :polarity -)",
            r#"(p / person :name (n / name :op1 "Barack" :op2 "Obama") :wiki "Q76")"#,
            "(a / and :op1 (r / run-02 :ARG0 (d / dog)) :op2 (b / bark-01 :ARG0 d))",
            "(s / see-01 :ARG0 (i / i) :ARG1 (c / cat :quant 2) :time (n / now))",
        ];
        for text in fixtures {
            let g = parse(text);
            for style in [PenmanStyle::Pretty, PenmanStyle::SingleLine] {
                let emitted = serialize_penman(&g, style).unwrap();
                let back = parse(&emitted);
                assert_eq!(back, g, "round trip failed for {text} via {emitted}");
            }
        }
    }

    #[test]
    fn pretty_output_shape() {
        let g = parse("(w / want-01 :ARG0 (b / boy))");
        let text = serialize_penman(&g, PenmanStyle::Pretty).unwrap();
        assert_eq!(text, "(w / want-01\n    :ARG0 (b / boy))");
    }

    #[test]
    fn deterministic_child_order() {
        // g declared before b, so :ARG1 g precedes :ARG0 b regardless of
        // role names; attributes come last in role order.
        let g = parse("(w / want-01 :ARG1 (g / go-02) :ARG0 (b / boy) :polarity -)");
        let text = serialize_penman(&g, PenmanStyle::SingleLine).unwrap();
        assert_eq!(
            text,
            "(w / want-01 :ARG1 (g / go-02) :ARG0 (b / boy) :polarity -)"
        );
    }
}
