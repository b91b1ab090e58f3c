//! Fine-grained scoring: Smatch over category-specific transformations and
//! restrictions of the graph pair.
//!
//! Category definitions are fixed by this crate and are not bit-compatible
//! with external tools:
//! - `unlabeled`: every edge role replaced by one label before scoring.
//! - `no_wsd`: trailing `-dd` sense suffixes stripped from concepts.
//! - `concepts`: F1 over instance-concept multisets.
//! - `named_entities`: F1 over entity strings derived from `:name`
//!   subgraphs (`parent-concept|op values in order`).
//! - `negation`: F1 over concepts of nodes carrying `:polarity -`.
//! - `wikification`: F1 over `:wiki` attribute values.
//! - `reentrancy`: Smatch restricted to re-entrant nodes, their incoming
//!   edges and the sources of those edges.
//! - `srl`: Smatch over `:ARG*` relation triples.
//!
//! A category empty on both sides scores 1.0; empty on exactly one side
//! scores 0.0.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use serde::Serialize;

use crate::graph::{AmrGraph, Triple};
use crate::smatch::smatch_triples;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CategoryScore {
    pub matched: usize,
    pub total_a: usize,
    pub total_b: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl CategoryScore {
    pub fn from_counts(matched: usize, total_a: usize, total_b: usize) -> Self {
        if total_a == 0 && total_b == 0 {
            return CategoryScore { matched, total_a, total_b, precision: 1.0, recall: 1.0, f1: 1.0 };
        }
        let precision = if total_a == 0 { 0.0 } else { matched as f64 / total_a as f64 };
        let recall = if total_b == 0 { 0.0 } else { matched as f64 / total_b as f64 };
        let f1 = 2.0 * matched as f64 / (total_a + total_b) as f64;
        CategoryScore { matched, total_a, total_b, precision, recall, f1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FineGrainedReport {
    pub smatch: CategoryScore,
    pub unlabeled: CategoryScore,
    pub no_wsd: CategoryScore,
    pub concepts: CategoryScore,
    pub named_entities: CategoryScore,
    pub negation: CategoryScore,
    pub wikification: CategoryScore,
    pub reentrancy: CategoryScore,
    pub srl: CategoryScore,
}

impl FineGrainedReport {
    pub fn categories(&self) -> [(&'static str, &CategoryScore); 9] {
        [
            ("smatch", &self.smatch),
            ("unlabeled", &self.unlabeled),
            ("no_wsd", &self.no_wsd),
            ("concepts", &self.concepts),
            ("named_entities", &self.named_entities),
            ("negation", &self.negation),
            ("wikification", &self.wikification),
            ("reentrancy", &self.reentrancy),
            ("srl", &self.srl),
        ]
    }
}

/// Micro-average: counts summed per category, ratios recomputed.
pub fn aggregate(reports: &[FineGrainedReport]) -> Option<FineGrainedReport> {
    let first = reports.first()?;
    let mut sums: Vec<(usize, usize, usize)> =
        first.categories().iter().map(|_| (0, 0, 0)).collect();
    for report in reports {
        for (i, (_, score)) in report.categories().iter().enumerate() {
            sums[i].0 += score.matched;
            sums[i].1 += score.total_a;
            sums[i].2 += score.total_b;
        }
    }
    let s = |i: usize| CategoryScore::from_counts(sums[i].0, sums[i].1, sums[i].2);
    Some(FineGrainedReport {
        smatch: s(0),
        unlabeled: s(1),
        no_wsd: s(2),
        concepts: s(3),
        named_entities: s(4),
        negation: s(5),
        wikification: s(6),
        reentrancy: s(7),
        srl: s(8),
    })
}

fn smatch_category(a: &BTreeSet<Triple>, b: &BTreeSet<Triple>, restarts: usize, seed: u64) -> CategoryScore {
    if a.is_empty() || b.is_empty() {
        return CategoryScore::from_counts(0, a.len(), b.len());
    }
    let r = smatch_triples(a, b, restarts, seed);
    CategoryScore::from_counts(r.matched, r.triples_a, r.triples_b)
}

fn multiset_f1(a: &[String], b: &[String]) -> CategoryScore {
    fn count(items: &[String]) -> BTreeMap<&String, usize> {
        let mut m = BTreeMap::new();
        for item in items {
            *m.entry(item).or_insert(0) += 1;
        }
        m
    }
    let ca = count(a);
    let cb = count(b);
    let matched: usize = ca
        .iter()
        .map(|(item, n)| (*n).min(cb.get(*item).copied().unwrap_or(0)))
        .sum();
    CategoryScore::from_counts(matched, a.len(), b.len())
}

fn relabel_edges(graph: &AmrGraph) -> AmrGraph {
    let mut out = AmrGraph::new();
    for (var, concept) in graph.nodes() {
        out.add_node(var.clone(), concept).expect("copy");
    }
    for e in graph.edges() {
        let _ = out.add_edge(e.source.clone(), "rel", e.target.clone());
    }
    for a in graph.attributes() {
        let _ = out.add_attribute(a.source.clone(), a.role.clone(), a.value.clone());
    }
    if let Some(root) = graph.root() {
        out.set_root(root.clone()).expect("copy");
    }
    out
}

/// Removes a trailing `-dd` sense suffix (hyphen plus exactly two digits).
fn strip_sense(concept: &str) -> &str {
    let bytes = concept.as_bytes();
    let n = bytes.len();
    if n > 3
        && bytes[n - 3] == b'-'
        && bytes[n - 2].is_ascii_digit()
        && bytes[n - 1].is_ascii_digit()
    {
        &concept[..n - 3]
    } else {
        concept
    }
}

fn strip_senses(graph: &AmrGraph) -> AmrGraph {
    let mut out = AmrGraph::new();
    for (var, concept) in graph.nodes() {
        out.add_node(var.clone(), strip_sense(concept)).expect("copy");
    }
    for e in graph.edges() {
        let _ = out.add_edge(e.source.clone(), e.role.clone(), e.target.clone());
    }
    for a in graph.attributes() {
        let _ = out.add_attribute(a.source.clone(), a.role.clone(), a.value.clone());
    }
    if let Some(root) = graph.root() {
        out.set_root(root.clone()).expect("copy");
    }
    out
}

fn concept_multiset(graph: &AmrGraph) -> Vec<String> {
    graph.nodes().map(|(_, c)| c.to_string()).collect()
}

fn strip_quotes(value: &str) -> &str {
    value
        .strip_prefix('"')
        .and_then(|v| v.strip_suffix('"'))
        .unwrap_or(value)
}

fn named_entity_strings(graph: &AmrGraph) -> Vec<String> {
    let mut out = Vec::new();
    for e in graph.edges() {
        if e.role != "name" {
            continue;
        }
        let parent_concept = graph.concept(&e.source).unwrap_or("");
        let mut ops: Vec<(usize, String)> = graph
            .attributes()
            .filter(|a| a.source == e.target)
            .filter_map(|a| {
                a.role
                    .strip_prefix("op")
                    .and_then(|n| n.parse::<usize>().ok())
                    .map(|n| (n, strip_quotes(&a.value).to_string()))
            })
            .collect();
        ops.sort();
        let words: Vec<String> = ops.into_iter().map(|(_, w)| w).collect();
        out.push(format!("{parent_concept}|{}", words.join(" ")));
    }
    out.sort();
    out
}

fn negated_concepts(graph: &AmrGraph) -> Vec<String> {
    let mut out: Vec<String> = graph
        .attributes()
        .filter(|a| a.role == "polarity" && a.value == "-")
        .filter_map(|a| graph.concept(&a.source).map(str::to_string))
        .collect();
    out.sort();
    out
}

fn wiki_values(graph: &AmrGraph) -> Vec<String> {
    let mut out: Vec<String> = graph
        .attributes()
        .filter(|a| a.role == "wiki")
        .map(|a| a.value.clone())
        .collect();
    out.sort();
    out
}

fn reentrancy_triples(graph: &AmrGraph) -> BTreeSet<Triple> {
    let mut incoming: BTreeMap<&str, usize> = BTreeMap::new();
    for e in graph.edges() {
        *incoming.entry(e.target.as_str()).or_insert(0) += 1;
    }
    let reentrant: BTreeSet<&str> = incoming
        .iter()
        .filter(|(_, n)| **n >= 2)
        .map(|(v, _)| *v)
        .collect();
    let mut out = BTreeSet::new();
    for e in graph.edges() {
        if reentrant.contains(e.target.as_str()) {
            out.insert(Triple::Relation {
                role: e.role.clone(),
                source: e.source.clone(),
                target: e.target.clone(),
            });
            for var in [&e.source, &e.target] {
                if let Some(concept) = graph.concept(var) {
                    out.insert(Triple::Instance { var: var.clone(), concept: concept.to_string() });
                }
            }
        }
    }
    out
}

fn srl_triples(graph: &AmrGraph) -> BTreeSet<Triple> {
    graph
        .edges()
        .filter(|e| e.role.starts_with("ARG"))
        .map(|e| Triple::Relation {
            role: e.role.clone(),
            source: e.source.clone(),
            target: e.target.clone(),
        })
        .collect()
}

/// Scores every category between two graphs. Smatch-backed categories use
/// hill climbing with the given restarts and seed.
pub fn fine_grained(a: &AmrGraph, b: &AmrGraph, restarts: usize, seed: u64) -> FineGrainedReport {
    FineGrainedReport {
        smatch: smatch_category(&a.to_triples(), &b.to_triples(), restarts, seed),
        unlabeled: smatch_category(
            &relabel_edges(a).to_triples(),
            &relabel_edges(b).to_triples(),
            restarts,
            seed,
        ),
        no_wsd: smatch_category(
            &strip_senses(a).to_triples(),
            &strip_senses(b).to_triples(),
            restarts,
            seed,
        ),
        concepts: multiset_f1(&concept_multiset(a), &concept_multiset(b)),
        named_entities: multiset_f1(&named_entity_strings(a), &named_entity_strings(b)),
        negation: multiset_f1(&negated_concepts(a), &negated_concepts(b)),
        wikification: multiset_f1(&wiki_values(a), &wiki_values(b)),
        reentrancy: smatch_category(&reentrancy_triples(a), &reentrancy_triples(b), restarts, seed),
        srl: smatch_category(&srl_triples(a), &srl_triples(b), restarts, seed),
    }
}
