//! Synthetic corpora and graphs for property tests and pipeline demos.
//!
//! `gen_tree_corpus` produces tree-shaped graphs with injective contiguous
//! alignments that lie inside the machine-expressible class, so the oracle
//! round trip reaches Smatch 1.0 on them by construction. The class is:
//! subtree token blocks nest without crossing, and every node touches at
//! most one tree arc towards earlier tokens (one left child, or an earlier
//! parent, never both).
//!
//! `gen_random_graph` produces small rooted connected graphs (re-entrancies
//! and attributes allowed) for metric tests. `corrupt_actions` plants a
//! machine-legal but strictly worse variant of an action sequence for
//! mining experiments.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Alignment, Corpus, CorpusRecord, Sentence, Span};
use crate::graph::AmrGraph;
use crate::machine::{run, Action, ActionSequence, RunMode};

const CONCEPTS: &[&str] = &[
    "want-01", "go-02", "see-01", "run-02", "give-01", "plan-01", "sleep-01", "bark-01",
    "boy", "girl", "dog", "cat", "city", "house", "person", "tree", "book", "car",
];

const ROLES: &[&str] = &[
    "ARG0", "ARG1", "ARG2", "ARG3", "mod", "time", "poss", "manner", "location",
];

const FILLERS: &[&str] = &["the", "a", "to", "of", "very", "and"];

#[derive(Debug, Clone)]
pub struct TreeCorpusConfig {
    pub records: usize,
    pub max_nodes: usize,
    pub seed: u64,
    /// Allow two-token spans; their oracle actions contain MERGE and are
    /// shortenable at equal Smatch, which mining exploits.
    pub multi_token_spans: bool,
    /// Sprinkle unaligned filler tokens between node spans.
    pub filler_tokens: bool,
}

impl Default for TreeCorpusConfig {
    fn default() -> Self {
        TreeCorpusConfig {
            records: 100,
            max_nodes: 10,
            seed: 0,
            multi_token_spans: true,
            filler_tokens: true,
        }
    }
}

struct TreeNode {
    concept: String,
    span_len: usize,
    left: Option<Box<TreeNode>>,
    rights: Vec<TreeNode>,
}

fn gen_subtree(rng: &mut ChaCha8Rng, nodes: usize, may_take_left: bool, cfg: &TreeCorpusConfig) -> TreeNode {
    let concept = CONCEPTS[rng.gen_range(0..CONCEPTS.len())].to_string();
    let span_len = if cfg.multi_token_spans && rng.gen_bool(0.25) { 2 } else { 1 };
    let mut node = TreeNode { concept, span_len, left: None, rights: Vec::new() };
    let mut budget = nodes - 1;
    if may_take_left && budget > 0 && rng.gen_bool(0.4) {
        let size = rng.gen_range(1..=budget);
        // A left child's parent lies to its right, so the child may itself
        // take a left child.
        node.left = Some(Box::new(gen_subtree(rng, size, true, cfg)));
        budget -= size;
    }
    while budget > 0 {
        let size = rng.gen_range(1..=budget);
        // A right child's earlier-arc slot is spent on its parent.
        node.rights.push(gen_subtree(rng, size, false, cfg));
        budget -= size;
    }
    node
}

struct TreeLayout {
    tokens: Vec<String>,
    graph: AmrGraph,
    alignment: Alignment,
}

fn word_for(concept: &str, position: usize) -> String {
    let base = concept.split('-').next().unwrap_or(concept);
    if position == 0 {
        base.to_string()
    } else {
        format!("{base}{position}")
    }
}

fn layout(tree: &TreeNode, rng: &mut ChaCha8Rng, cfg: &TreeCorpusConfig, out: &mut TreeLayout) -> String {
    maybe_filler(rng, cfg, &mut out.tokens);
    if let Some(left) = &tree.left {
        let child_var = layout(left, rng, cfg, out);
        let var = place_node(tree, rng, cfg, out);
        let role = ROLES[rng.gen_range(0..ROLES.len())];
        out.graph.add_edge(var.clone(), role, child_var).expect("declared");
        place_rights(tree, &var, rng, cfg, out);
        var
    } else {
        let var = place_node(tree, rng, cfg, out);
        place_rights(tree, &var, rng, cfg, out);
        var
    }
}

fn place_node(tree: &TreeNode, rng: &mut ChaCha8Rng, cfg: &TreeCorpusConfig, out: &mut TreeLayout) -> String {
    let _ = rng;
    let _ = cfg;
    let start = out.tokens.len();
    for i in 0..tree.span_len {
        out.tokens.push(word_for(&tree.concept, i));
    }
    let end = out.tokens.len() - 1;
    let var = fresh_var(&out.graph, &tree.concept);
    out.graph.add_node(var.clone(), tree.concept.clone()).expect("fresh");
    out.alignment.insert(var.clone(), Span::new(start, end));
    var
}

fn place_rights(tree: &TreeNode, var: &str, rng: &mut ChaCha8Rng, cfg: &TreeCorpusConfig, out: &mut TreeLayout) {
    for right in &tree.rights {
        let child_var = layout(right, rng, cfg, out);
        let role = ROLES[rng.gen_range(0..ROLES.len())];
        out.graph.add_edge(var.to_string(), role, child_var).expect("declared");
    }
    maybe_filler(rng, cfg, &mut out.tokens);
}

fn maybe_filler(rng: &mut ChaCha8Rng, cfg: &TreeCorpusConfig, tokens: &mut Vec<String>) {
    if cfg.filler_tokens && rng.gen_bool(0.2) {
        tokens.push(FILLERS[rng.gen_range(0..FILLERS.len())].to_string());
    }
}

fn fresh_var(graph: &AmrGraph, concept: &str) -> String {
    let base: char = concept
        .chars()
        .find(|c| c.is_ascii_alphabetic())
        .map(|c| c.to_ascii_lowercase())
        .unwrap_or('x');
    let candidate = base.to_string();
    if !graph.has_node(&candidate) {
        return candidate;
    }
    let mut n = 2usize;
    loop {
        let candidate = format!("{base}{n}");
        if !graph.has_node(&candidate) {
            return candidate;
        }
        n += 1;
    }
}

/// One machine-expressible tree record with injective contiguous alignment.
pub fn gen_tree_record(rng: &mut ChaCha8Rng, id: &str, cfg: &TreeCorpusConfig) -> CorpusRecord {
    let nodes = rng.gen_range(1..=cfg.max_nodes.max(1));
    let tree = gen_subtree(rng, nodes, true, cfg);
    let mut out = TreeLayout {
        tokens: Vec::new(),
        graph: AmrGraph::new(),
        alignment: Alignment::new(),
    };
    let root_var = layout(&tree, rng, cfg, &mut out);
    out.graph.set_root(root_var).expect("declared");
    let TreeLayout { tokens, graph, alignment } = out;
    let sentence = Sentence::with_tokens(id, tokens.join(" "), tokens);
    CorpusRecord { sentence, graph, alignment: Some(alignment) }
}

/// A corpus of machine-expressible tree records.
pub fn gen_tree_corpus(cfg: &TreeCorpusConfig) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut corpus = Corpus::new();
    for i in 0..cfg.records {
        let record = gen_tree_record(&mut rng, &format!("gen-{i:05}"), cfg);
        corpus.push(record).expect("generated ids are unique");
    }
    corpus
}

/// Random rooted connected graph with up to `max_vars` nodes; re-entrant
/// edges and attributes allowed. Concepts come from a small pool so that
/// independent graphs still share material to match on.
pub fn gen_random_graph(rng: &mut ChaCha8Rng, max_vars: usize) -> AmrGraph {
    let pool = &CONCEPTS[..6.min(CONCEPTS.len())];
    let n = rng.gen_range(1..=max_vars.max(1));
    let mut graph = AmrGraph::new();
    for i in 0..n {
        let concept = pool[rng.gen_range(0..pool.len())];
        graph.add_node(format!("v{i}"), concept).expect("fresh");
    }
    // Spanning structure keeps the graph connected.
    for i in 1..n {
        let j = rng.gen_range(0..i);
        let role = ROLES[rng.gen_range(0..ROLES.len())];
        if rng.gen_bool(0.8) {
            graph.add_edge(format!("v{j}"), role, format!("v{i}")).expect("declared");
        } else {
            graph.add_edge(format!("v{i}"), role, format!("v{j}")).expect("declared");
        }
    }
    // Extra edges introduce re-entrancies.
    for _ in 0..rng.gen_range(0..=2) {
        if n < 2 {
            break;
        }
        let s = rng.gen_range(0..n);
        let t = rng.gen_range(0..n);
        if s == t {
            continue;
        }
        let role = ROLES[rng.gen_range(0..ROLES.len())];
        let _ = graph.add_edge(format!("v{s}"), role, format!("v{t}"));
    }
    for _ in 0..rng.gen_range(0..=2) {
        let s = rng.gen_range(0..n);
        let (role, value) = match rng.gen_range(0..3) {
            0 => ("polarity", "-".to_string()),
            1 => ("quant", rng.gen_range(1..10).to_string()),
            _ => ("wiki", format!("\"Q{}\"", rng.gen_range(1..100))),
        };
        let _ = graph.add_attribute(format!("v{s}"), role, value);
    }
    graph.set_root(format!("v{}", rng.gen_range(0..n))).expect("declared");
    graph
}

/// Derives a machine-legal corruption of `actions` whose replay differs
/// from the original graph (a wrong concept or a junk arc). Returns `None`
/// when no legal corruption is found.
pub fn corrupt_actions(
    sentence: &Sentence,
    actions: &ActionSequence,
    rng: &mut ChaCha8Rng,
) -> Option<ActionSequence> {
    let original = run(sentence, actions, RunMode::Lenient).ok()?;
    for _ in 0..30 {
        let mut candidate = actions.clone();
        match rng.gen_range(0..2) {
            0 => {
                // Swap one predicted concept for a different one.
                let pred_positions: Vec<usize> = candidate
                    .iter()
                    .enumerate()
                    .filter(|(_, a)| matches!(a, Action::Pred(_)))
                    .map(|(i, _)| i)
                    .collect();
                if pred_positions.is_empty() {
                    continue;
                }
                let pos = pred_positions[rng.gen_range(0..pred_positions.len())];
                let Action::Pred(current) = &candidate[pos] else { unreachable!() };
                let replacement = CONCEPTS[rng.gen_range(0..CONCEPTS.len())];
                if replacement == current {
                    continue;
                }
                candidate[pos] = Action::Pred(replacement.to_string());
            }
            _ => {
                // Insert a junk arc at a random position.
                let pos = rng.gen_range(0..candidate.len());
                let role = format!("junk{}", rng.gen_range(0..100));
                let action = if rng.gen_bool(0.5) { Action::La(role) } else { Action::Ra(role) };
                candidate.insert(pos, action);
            }
        }
        if let Ok(replay) = run(sentence, &candidate, RunMode::Lenient) {
            let concepts_differ = {
                let mut a: Vec<&str> = original.nodes().map(|(_, c)| c).collect();
                let mut b: Vec<&str> = replay.nodes().map(|(_, c)| c).collect();
                a.sort();
                b.sort();
                a != b
            };
            if concepts_differ || replay.edge_count() != original.edge_count() {
                return Some(candidate);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{force_align, oracle_actions};
    use crate::smatch::{smatch, smatch_exact, DEFAULT_RESTARTS};

    #[test]
    fn tree_corpus_is_deterministic() {
        let cfg = TreeCorpusConfig { records: 10, ..Default::default() };
        let a = gen_tree_corpus(&cfg);
        let b = gen_tree_corpus(&cfg);
        assert_eq!(a, b);
        assert_eq!(a.len(), 10);
    }

    #[test]
    fn tree_records_are_valid() {
        let cfg = TreeCorpusConfig { records: 50, ..Default::default() };
        let corpus = gen_tree_corpus(&cfg);
        for r in corpus.iter() {
            assert!(r.graph.is_valid());
            assert!(r.graph.is_connected());
            assert!(!r.sentence.tokens.is_empty());
            let al = r.alignment.as_ref().unwrap();
            al.validate(&r.graph, &r.sentence).unwrap();
            assert_eq!(al.len(), r.graph.node_count());
            // Injective, non-overlapping spans.
            let mut seen = vec![false; r.sentence.tokens.len()];
            for (_, span) in al.iter() {
                for t in span.start..=span.end {
                    assert!(!seen[t], "overlapping alignment in {}", r.sentence.id);
                    seen[t] = true;
                }
            }
        }
    }

    /// The generator's whole point: every generated tree round-trips
    /// through the oracle and machine at Smatch 1.0.
    #[test]
    fn tree_records_round_trip_through_oracle() {
        let cfg = TreeCorpusConfig { records: 200, max_nodes: 10, seed: 7, ..Default::default() };
        let corpus = gen_tree_corpus(&cfg);
        for r in corpus.iter() {
            let al = force_align(&r.graph, &r.sentence, r.alignment.as_ref().unwrap());
            let actions = oracle_actions(&r.graph, &r.sentence, &al).unwrap();
            let replay = run(&r.sentence, &actions, RunMode::Lenient).unwrap();
            let score = smatch(&replay, &r.graph, DEFAULT_RESTARTS, 0);
            assert_eq!(score.f1, 1.0, "record {} did not round trip", r.sentence.id);
        }
    }

    #[test]
    fn random_graphs_are_connected_and_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let g = gen_random_graph(&mut rng, 6);
            assert!(g.is_valid());
            assert!(g.is_connected());
            assert!(g.node_count() <= 6);
            assert!(smatch_exact(&g, &g).unwrap().f1 == 1.0);
        }
    }

    #[test]
    fn corruption_strictly_damages_replay() {
        let cfg = TreeCorpusConfig { records: 30, seed: 11, ..Default::default() };
        let corpus = gen_tree_corpus(&cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut corrupted_count = 0;
        for r in corpus.iter() {
            let al = force_align(&r.graph, &r.sentence, r.alignment.as_ref().unwrap());
            let actions = oracle_actions(&r.graph, &r.sentence, &al).unwrap();
            if let Some(bad) = corrupt_actions(&r.sentence, &actions, &mut rng) {
                corrupted_count += 1;
                let replay = run(&r.sentence, &bad, RunMode::Lenient).unwrap();
                let score = smatch(&replay, &r.graph, DEFAULT_RESTARTS, 0);
                assert!(score.f1 < 1.0, "corruption of {} kept f1 = 1", r.sentence.id);
            }
        }
        assert!(corrupted_count >= 25, "only {corrupted_count} corruptions succeeded");
    }
}
