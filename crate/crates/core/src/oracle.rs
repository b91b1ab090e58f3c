//! Rule-based oracle: derives the action sequence that rebuilds a gold
//! graph from a sentence and node-to-token alignments.
//!
//! The oracle sweeps tokens left to right, predicts a node when the token
//! span of some aligned node is consumed, greedily emits every gold arc
//! available between the top two stack nodes, and reduces the top node once
//! all of its realizable gold edges are built. The gold root's reduce is
//! deferred so ROOT can be issued at the end.
//!
//! Only one node can be predicted per distinct token span; when alignments
//! collide (force-alignment duplicates spans) the node closest to the root
//! wins and the rest are dropped, which the coverage report quantifies.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::corpus::{Alignment, Corpus, Sentence, Span};
use crate::graph::{AmrGraph, Edge, VarId};
use crate::machine::{run, Action, ActionSequence, MachineError, RunMode};
use crate::smatch::{smatch, SmatchResult};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("node `{0}` has no alignment; run force_align first")]
    IncompleteAlignment(VarId),
    #[error("alignment for `{var}` is invalid: {msg}")]
    InvalidAlignment { var: VarId, msg: String },
    #[error("sentence has no tokens")]
    EmptyTokens,
}

/// Completes a partial alignment: every unaligned node inherits the span of
/// its nearest aligned neighbor (undirected BFS distance), parents winning
/// ties over children and leftmost spans winning after that. Nodes with no
/// aligned node in reach fall back to token 0.
pub fn force_align(graph: &AmrGraph, _sentence: &Sentence, alignment: &Alignment) -> Alignment {
    let mut out = Alignment::new();
    for (var, span) in alignment.iter() {
        if graph.has_node(var) {
            out.insert(var.clone(), span);
        }
    }
    loop {
        let snapshot = out.clone();
        let mut changed = false;
        for var in graph.variables() {
            if snapshot.contains(var) {
                continue;
            }
            // (child_flag, span.start, span.end, declaration index): parents
            // first, then leftmost span, then declaration order.
            let mut best: Option<(bool, usize, usize, usize)> = None;
            for e in graph.edges() {
                let (neighbor, is_child) = if e.target == *var {
                    (&e.source, false)
                } else if e.source == *var {
                    (&e.target, true)
                } else {
                    continue;
                };
                if let Some(span) = snapshot.get(neighbor) {
                    let key = (
                        is_child,
                        span.start,
                        span.end,
                        graph.declaration_index(neighbor).unwrap_or(usize::MAX),
                    );
                    if best.map_or(true, |b| key < b) {
                        best = Some(key);
                    }
                }
            }
            if let Some((_, start, end, _)) = best {
                out.insert(var.clone(), Span::new(start, end));
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    for var in graph.variables() {
        if !out.contains(var) {
            out.insert(var.clone(), Span::single(0));
        }
    }
    out
}

/// Node depth from the root over undirected edges; unreachable nodes sink
/// below everything else.
fn depths(graph: &AmrGraph) -> std::collections::BTreeMap<VarId, usize> {
    let mut depth = std::collections::BTreeMap::new();
    let Some(root) = graph.root() else { return depth };
    depth.insert(root.clone(), 0usize);
    let mut frontier = vec![root.clone()];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for v in frontier {
            let d = depth[&v];
            for e in graph.edges() {
                for other in [&e.source, &e.target] {
                    if (e.source == v || e.target == v) && !depth.contains_key(other.as_str()) {
                        depth.insert(other.clone(), d + 1);
                        next.push(other.clone());
                    }
                }
            }
        }
        frontier = next;
    }
    depth
}

enum Entry {
    Group,
    Node(VarId),
}

/// Derives actions rebuilding `graph` for `sentence`. The alignment must
/// cover every node. `run(sentence, result)` equals the gold graph whenever
/// the graph is machine-expressible under this alignment; otherwise the
/// sequence is best-effort and `oracle_coverage` quantifies the loss.
pub fn oracle_actions(
    graph: &AmrGraph,
    sentence: &Sentence,
    alignment: &Alignment,
) -> Result<ActionSequence, OracleError> {
    if sentence.tokens.is_empty() {
        return Err(OracleError::EmptyTokens);
    }
    let n_tokens = sentence.tokens.len();
    for var in graph.variables() {
        let Some(span) = alignment.get(var) else {
            return Err(OracleError::IncompleteAlignment(var.clone()));
        };
        if span.start > span.end {
            return Err(OracleError::InvalidAlignment { var: var.clone(), msg: "start > end".into() });
        }
        if span.end >= n_tokens {
            return Err(OracleError::InvalidAlignment {
                var: var.clone(),
                msg: format!("span end {} out of bounds for {} tokens", span.end, n_tokens),
            });
        }
    }

    // One predictable node per distinct span: closest to the root wins,
    // then declaration order.
    let depth = depths(graph);
    let mut chosen: std::collections::BTreeMap<Span, VarId> = Default::default();
    for var in graph.variables() {
        let span = alignment.get(var).expect("checked above");
        let key = |v: &VarId| {
            (
                depth.get(v).copied().unwrap_or(usize::MAX),
                graph.declaration_index(v).unwrap_or(usize::MAX),
            )
        };
        match chosen.get(&span) {
            Some(current) if key(current) <= key(var) => {}
            _ => {
                chosen.insert(span, var.clone());
            }
        }
    }
    let predictable: std::collections::BTreeSet<&VarId> = chosen.values().collect();

    // Gold edges with both endpoints predictable are realizable.
    let realizable: Vec<&Edge> = graph
        .edges()
        .filter(|e| predictable.contains(&e.source) && predictable.contains(&e.target))
        .collect();
    let mut emitted: std::collections::BTreeSet<&Edge> = Default::default();
    let pending = |var: &VarId, emitted: &std::collections::BTreeSet<&Edge>| {
        realizable
            .iter()
            .any(|e| (e.source == *var || e.target == *var) && !emitted.contains(*e))
    };

    let mut span_at_start: std::collections::BTreeMap<usize, Vec<(Span, VarId)>> = Default::default();
    for (span, var) in &chosen {
        span_at_start.entry(span.start).or_default().push((*span, var.clone()));
    }
    for entries in span_at_start.values_mut() {
        entries.sort_by_key(|(span, var)| {
            (
                depth.get(var).copied().unwrap_or(usize::MAX),
                graph.declaration_index(var).unwrap_or(usize::MAX),
                span.end,
            )
        });
    }

    let gold_root = graph.root();
    let mut actions: ActionSequence = Vec::new();
    let mut stack: Vec<Entry> = Vec::new();
    let mut predicted: std::collections::BTreeSet<VarId> = Default::default();
    let mut cursor = 0usize;

    loop {
        // Arc phase: one gold edge between the top two nodes.
        if stack.len() >= 2 {
            if let (Entry::Node(top), Entry::Node(second)) =
                (&stack[stack.len() - 1], &stack[stack.len() - 2])
            {
                let mut between: Vec<&Edge> = realizable
                    .iter()
                    .filter(|e| {
                        !emitted.contains(*e)
                            && ((e.source == *top && e.target == *second)
                                || (e.source == *second && e.target == *top))
                    })
                    .copied()
                    .collect();
                between.sort();
                if let Some(e) = between.first() {
                    if e.source == *top {
                        actions.push(Action::La(e.role.clone()));
                    } else {
                        actions.push(Action::Ra(e.role.clone()));
                    }
                    emitted.insert(e);
                    continue;
                }
            }
        }
        // Reduce phase: pop a finished node, keeping the gold root for ROOT.
        if let Some(Entry::Node(top)) = stack.last() {
            if Some(top) != gold_root && !pending(top, &emitted) {
                actions.push(Action::Reduce);
                stack.pop();
                continue;
            }
        }
        // Shift phase.
        if cursor < n_tokens {
            let span = span_at_start
                .get(&cursor)
                .and_then(|entries| {
                    entries.iter().find(|(_, var)| !predicted.contains(var))
                })
                .cloned();
            match span {
                Some((span, var)) => {
                    actions.push(Action::Shift);
                    for _ in span.start..span.end {
                        actions.push(Action::Shift);
                        actions.push(Action::Merge);
                    }
                    let concept = graph.concept(&var).expect("chosen nodes exist");
                    actions.push(Action::Pred(concept.to_string()));
                    predicted.insert(var.clone());
                    stack.push(Entry::Node(var));
                    cursor = span.end + 1;
                }
                None => {
                    actions.push(Action::Shift);
                    actions.push(Action::Reduce);
                    stack.push(Entry::Group);
                    stack.pop();
                    cursor += 1;
                }
            }
            continue;
        }
        break;
    }

    if let (Some(root), Some(Entry::Node(top))) = (gold_root, stack.last()) {
        if top == root {
            actions.push(Action::Root);
        }
    }
    actions.push(Action::Close);
    Ok(actions)
}

/// Per-record coverage of one oracle round trip.
#[derive(Debug, Clone, Serialize)]
pub struct RecordCoverage {
    pub id: String,
    pub f1: f64,
    pub matched: usize,
    pub triples_predicted: usize,
    pub triples_gold: usize,
    pub action_count: usize,
}

/// Corpus-level oracle round-trip report with micro-averaged Smatch.
#[derive(Debug, Clone, Serialize)]
pub struct CoverageReport {
    pub records: Vec<RecordCoverage>,
    pub matched: usize,
    pub triples_predicted: usize,
    pub triples_gold: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub failed_records: usize,
}

impl CoverageReport {
    fn from_records(records: Vec<RecordCoverage>) -> Self {
        let matched: usize = records.iter().map(|r| r.matched).sum();
        let triples_predicted: usize = records.iter().map(|r| r.triples_predicted).sum();
        let triples_gold: usize = records.iter().map(|r| r.triples_gold).sum();
        let precision = if triples_predicted == 0 { 0.0 } else { matched as f64 / triples_predicted as f64 };
        let recall = if triples_gold == 0 { 0.0 } else { matched as f64 / triples_gold as f64 };
        let f1 = if triples_predicted + triples_gold == 0 {
            0.0
        } else {
            2.0 * matched as f64 / (triples_predicted + triples_gold) as f64
        };
        let failed_records = records.iter().filter(|r| r.f1 < 1.0).count();
        CoverageReport {
            records,
            matched,
            triples_predicted,
            triples_gold,
            precision,
            recall,
            f1,
            failed_records,
        }
    }
}

/// Runs the oracle on every record, replays the actions through the machine
/// and scores the result against gold.
pub fn oracle_coverage(
    corpus: &Corpus,
    restarts: usize,
    seed: u64,
) -> Result<CoverageReport, OracleError> {
    let records: Result<Vec<RecordCoverage>, OracleError> = corpus
        .records()
        .par_iter()
        .map(|record| {
            let (actions, replayed, score) = oracle_record(record, restarts, seed)?;
            Ok(RecordCoverage {
                id: record.sentence.id.clone(),
                f1: score.f1,
                matched: score.matched,
                triples_predicted: replayed.to_triples().len(),
                triples_gold: record.graph.to_triples().len(),
                action_count: actions.len(),
            })
        })
        .collect();
    Ok(CoverageReport::from_records(records?))
}

/// One record's oracle pass: derived actions, replayed graph and score.
pub fn oracle_record(
    record: &crate::corpus::CorpusRecord,
    restarts: usize,
    seed: u64,
) -> Result<(ActionSequence, AmrGraph, SmatchResult), OracleError> {
    let empty = Alignment::new();
    let base = record.alignment.as_ref().unwrap_or(&empty);
    let al = force_align(&record.graph, &record.sentence, base);
    let actions = oracle_actions(&record.graph, &record.sentence, &al)?;
    let replayed = match run(&record.sentence, &actions, RunMode::Lenient) {
        Ok(g) => g,
        // By construction the oracle never emits illegal sequences; an
        // empty graph scores zero if this is ever reached.
        Err(MachineError::EmptyTokens) => return Err(OracleError::EmptyTokens),
        Err(_) => AmrGraph::new(),
    };
    let score = smatch(&replayed, &record.graph, restarts, seed);
    Ok((actions, replayed, score))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::CorpusRecord;
    use crate::machine::format_actions;
    use crate::penman::{parse_penman, ParseMode};
    use crate::smatch::DEFAULT_RESTARTS;

    fn g(text: &str) -> AmrGraph {
        parse_penman(text, ParseMode::Strict).unwrap()
    }

    fn sentence(tokens: &[&str]) -> Sentence {
        Sentence::with_tokens(
            "t",
            tokens.join(" "),
            tokens.iter().map(|t| t.to_string()).collect(),
        )
    }

    fn align(pairs: &[(&str, usize, usize)]) -> Alignment {
        pairs
            .iter()
            .map(|(v, s, e)| (v.to_string(), Span::new(*s, *e)))
            .collect()
    }

    #[test]
    fn force_align_fixed_point_when_complete() {
        let graph = g("(w / want-01 :ARG0 (b / boy))");
        let s = sentence(&["boy", "wants"]);
        let al = align(&[("b", 0, 0), ("w", 1, 1)]);
        assert_eq!(force_align(&graph, &s, &al), al);
    }

    #[test]
    fn force_align_inherits_from_neighbor() {
        let graph = g("(w / want-01 :ARG0 (b / boy))");
        let s = sentence(&["the", "boy"]);
        let al = align(&[("b", 1, 1)]);
        let full = force_align(&graph, &s, &al);
        assert_eq!(full.get("w"), Some(Span::new(1, 1)));
        assert_eq!(full.get("b"), Some(Span::new(1, 1)));
    }

    #[test]
    fn force_align_empty_falls_back_to_token_zero() {
        let graph = g("(w / want-01 :ARG0 (b / boy))");
        let s = sentence(&["boy"]);
        let full = force_align(&graph, &s, &Alignment::new());
        assert_eq!(full.get("w"), Some(Span::single(0)));
        assert_eq!(full.get("b"), Some(Span::single(0)));
    }

    #[test]
    fn force_align_parent_beats_child() {
        // m is unaligned; its parent r and child c are both aligned, the
        // parent's span wins even though the child's is further left.
        let graph = g("(r / rho :ARG0 (m / mu :ARG1 (c / chi)))");
        let s = sentence(&["c", "m", "r"]);
        let al = align(&[("r", 2, 2), ("c", 0, 0)]);
        let full = force_align(&graph, &s, &al);
        assert_eq!(full.get("m"), Some(Span::new(2, 2)));
    }

    #[test]
    fn force_align_idempotent() {
        let graph = g("(w / want-01 :ARG0 (b / boy) :ARG1 (go / go-02 :ARG0 b))");
        let s = sentence(&["boy", "wants", "go"]);
        let al = align(&[("b", 0, 0)]);
        let once = force_align(&graph, &s, &al);
        let twice = force_align(&graph, &s, &once);
        assert_eq!(once, twice);
    }

    #[test]
    fn single_node_sequence() {
        let graph = g("(b / boy)");
        let s = sentence(&["boy"]);
        let actions = oracle_actions(&graph, &s, &align(&[("b", 0, 0)])).unwrap();
        assert_eq!(format_actions(&actions), "SHIFT PRED(boy) ROOT CLOSE");
    }

    #[test]
    fn want_boy_round_trip() {
        let graph = g("(w / want-01 :ARG0 (b / boy))");
        let s = sentence(&["boy", "wants"]);
        let al = align(&[("b", 0, 0), ("w", 1, 1)]);
        let actions = oracle_actions(&graph, &s, &al).unwrap();
        assert_eq!(
            format_actions(&actions),
            "SHIFT PRED(boy) SHIFT PRED(want-01) LA(ARG0) ROOT CLOSE"
        );
        let replay = run(&s, &actions, RunMode::Lenient).unwrap();
        let score = smatch(&replay, &graph, DEFAULT_RESTARTS, 0);
        assert_eq!(score.f1, 1.0);
    }

    #[test]
    fn unaligned_tokens_are_shift_reduced() {
        let graph = g("(w / want-01 :ARG0 (b / boy))");
        let s = sentence(&["the", "boy", "really", "wants"]);
        let al = align(&[("b", 1, 1), ("w", 3, 3)]);
        let actions = oracle_actions(&graph, &s, &al).unwrap();
        assert_eq!(
            format_actions(&actions),
            "SHIFT REDUCE SHIFT PRED(boy) SHIFT REDUCE SHIFT PRED(want-01) LA(ARG0) ROOT CLOSE"
        );
        let replay = run(&s, &actions, RunMode::Lenient).unwrap();
        assert_eq!(smatch(&replay, &graph, DEFAULT_RESTARTS, 0).f1, 1.0);
    }

    #[test]
    fn multi_token_span_uses_merge() {
        let graph = g("(c / city :mod (y / york))");
        let s = sentence(&["New", "York", "city"]);
        let al = align(&[("c", 2, 2), ("y", 0, 1)]);
        let actions = oracle_actions(&graph, &s, &al).unwrap();
        assert_eq!(
            format_actions(&actions),
            "SHIFT SHIFT MERGE PRED(york) SHIFT PRED(city) LA(mod) ROOT CLOSE"
        );
        let replay = run(&s, &actions, RunMode::Lenient).unwrap();
        assert_eq!(smatch(&replay, &graph, DEFAULT_RESTARTS, 0).f1, 1.0);
    }

    #[test]
    fn reentrancy_round_trip() {
        // d is shared between bark-01 and sleep-01; it stays on the stack
        // until both parents have attached.
        let graph = g("(s / sleep-01 :ARG0 (d / dog :ARG0-of (b / bark-01)))");
        let s = sentence(&["dog", "barks", "sleeps"]);
        let al = align(&[("d", 0, 0), ("b", 1, 1), ("s", 2, 2)]);
        let actions = oracle_actions(&graph, &s, &al).unwrap();
        let replay = run(&s, &actions, RunMode::Lenient).unwrap();
        assert_eq!(smatch(&replay, &graph, DEFAULT_RESTARTS, 0).f1, 1.0, "{}", format_actions(&actions));
    }

    #[test]
    fn triangle_reentrancy_is_out_of_class() {
        // Three pairwise-connected nodes cannot all become stack-adjacent;
        // one arc is always lost.
        let graph = g("(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-02 :ARG0 b))");
        let s = sentence(&["boy", "wants", "go"]);
        let al = align(&[("b", 0, 0), ("w", 1, 1), ("g", 2, 2)]);
        let actions = oracle_actions(&graph, &s, &al).unwrap();
        let replay = run(&s, &actions, RunMode::Lenient).unwrap();
        assert!(smatch(&replay, &graph, DEFAULT_RESTARTS, 0).f1 < 1.0);
    }

    #[test]
    fn incomplete_alignment_is_error() {
        let graph = g("(w / want-01 :ARG0 (b / boy))");
        let s = sentence(&["boy", "wants"]);
        let err = oracle_actions(&graph, &s, &align(&[("b", 0, 0)])).unwrap_err();
        assert_eq!(err, OracleError::IncompleteAlignment("w".into()));
    }

    #[test]
    fn oracle_output_is_machine_legal() {
        let graph = g("(s / see-01 :ARG0 (i / i) :ARG1 (c / cat) :time (n / now))");
        let s = sentence(&["i", "saw", "cat", "now"]);
        let al = align(&[("i", 0, 0), ("s", 1, 1), ("c", 2, 2), ("n", 3, 3)]);
        let actions = oracle_actions(&graph, &s, &al).unwrap();
        assert!(run(&s, &actions, RunMode::Lenient).is_ok());
    }

    #[test]
    fn stack_adjacency_failure_is_detected() {
        // c needs arcs both to its left child d and to its earlier parent
        // r; only one node below is reachable at push time, so the replay
        // cannot reach Smatch 1.0.
        let graph = g("(r / rho :ARG0 (c / gamma :ARG1 (d / delta)) :ARG2 (x / chi))");
        let s = sentence(&["r", "d", "c", "x"]);
        let al = align(&[("r", 0, 0), ("d", 1, 1), ("c", 2, 2), ("x", 3, 3)]);
        let actions = oracle_actions(&graph, &s, &al).unwrap();
        let replay = run(&s, &actions, RunMode::Lenient).unwrap();
        let score = smatch(&replay, &graph, DEFAULT_RESTARTS, 0);
        assert!(score.f1 < 1.0);

        let corpus = Corpus::from_records(vec![CorpusRecord {
            sentence: s,
            graph,
            alignment: Some(al),
        }])
        .unwrap();
        let report = oracle_coverage(&corpus, DEFAULT_RESTARTS, 0).unwrap();
        assert!(report.f1 < 1.0);
        assert_eq!(report.failed_records, 1);
    }

    #[test]
    fn coverage_is_one_on_expressible_corpus() {
        let mut records = Vec::new();
        let graph = g("(w / want-01 :ARG0 (b / boy))");
        let s = Sentence::with_tokens("r1", "boy wants", vec!["boy".into(), "wants".into()]);
        records.push(CorpusRecord {
            sentence: s,
            graph,
            alignment: Some(align(&[("b", 0, 0), ("w", 1, 1)])),
        });
        let corpus = Corpus::from_records(records).unwrap();
        let report = oracle_coverage(&corpus, DEFAULT_RESTARTS, 0).unwrap();
        assert_eq!(report.f1, 1.0);
        assert_eq!(report.failed_records, 0);
        assert_eq!(report.records.len(), 1);
        assert!(report.records[0].action_count > 0);
    }
}
