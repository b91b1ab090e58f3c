//! Smatch: F1 over matched triples, maximized over injective variable
//! mappings between two graphs.
//!
//! `smatch` runs restarted hill-climbing (one restart seeded by greedy
//! concept agreement, the rest random). `smatch_exact` enumerates all
//! injective mappings of the smaller variable set with branch-and-bound
//! pruning and is the test oracle for the hill climber; it refuses inputs
//! with more than [`EXACT_VAR_LIMIT`] variables on the smaller side.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{AmrGraph, Triple, VarId};

/// Largest smaller-side variable count accepted by [`smatch_exact`].
pub const EXACT_VAR_LIMIT: usize = 8;

/// Default number of hill-climbing restarts.
pub const DEFAULT_RESTARTS: usize = 4;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SmatchError {
    #[error("exact matching refused: {0} variables on the smaller side exceed the limit of {EXACT_VAR_LIMIT}")]
    TooLarge(usize),
}

/// Result of one Smatch comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmatchResult {
    pub matched: usize,
    pub triples_a: usize,
    pub triples_b: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Injective partial map from variables of `a` to variables of `b`.
    pub mapping: BTreeMap<VarId, VarId>,
}

impl SmatchResult {
    pub fn from_counts(matched: usize, triples_a: usize, triples_b: usize, mapping: BTreeMap<VarId, VarId>) -> Self {
        let precision = if triples_a == 0 { 0.0 } else { matched as f64 / triples_a as f64 };
        let recall = if triples_b == 0 { 0.0 } else { matched as f64 / triples_b as f64 };
        let f1 = if triples_a + triples_b == 0 {
            0.0
        } else {
            2.0 * matched as f64 / (triples_a + triples_b) as f64
        };
        SmatchResult { matched, triples_a, triples_b, precision, recall, f1, mapping }
    }

    /// Exact f1 comparison via integer cross-multiplication; avoids float
    /// equality pitfalls when two scores must be compared for the mining
    /// replacement rule.
    pub fn f1_cmp(&self, other: &SmatchResult) -> std::cmp::Ordering {
        let lhs = self.matched as u128 * (other.triples_a + other.triples_b).max(1) as u128;
        let rhs = other.matched as u128 * (self.triples_a + self.triples_b).max(1) as u128;
        lhs.cmp(&rhs)
    }
}

// ---------------------------------------------------------------------------
// Encoded matching problem
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
enum ETriple {
    Inst(usize, u32),
    Top(usize),
    Rel(u32, usize, usize),
    Attr(usize, u32, u32),
}

#[derive(Debug, Default)]
struct Side {
    vars: Vec<VarId>,
    triples: Vec<ETriple>,
    instances: HashSet<(usize, u32)>,
    tops: HashSet<usize>,
    relations: HashSet<(u32, usize, usize)>,
    attributes: HashSet<(usize, u32, u32)>,
    concept_of: Vec<Option<u32>>,
}

#[derive(Default)]
struct Interner {
    ids: HashMap<String, u32>,
}

impl Interner {
    fn intern(&mut self, s: &str) -> u32 {
        let next = self.ids.len() as u32;
        *self.ids.entry(s.to_string()).or_insert(next)
    }
}

fn build_side(triples: &BTreeSet<Triple>, interner: &mut Interner) -> Side {
    let mut side = Side::default();
    let mut var_index: HashMap<VarId, usize> = HashMap::new();
    fn var_of(name: &VarId, vars: &mut Vec<VarId>, var_index: &mut HashMap<VarId, usize>) -> usize {
        if let Some(&i) = var_index.get(name) {
            return i;
        }
        let i = vars.len();
        vars.push(name.clone());
        var_index.insert(name.clone(), i);
        i
    }

    for t in triples {
        match t {
            Triple::Instance { var, concept } => {
                let v = var_of(var, &mut side.vars, &mut var_index);
                let c = interner.intern(concept);
                side.triples.push(ETriple::Inst(v, c));
                side.instances.insert((v, c));
                if side.concept_of.len() <= v {
                    side.concept_of.resize(v + 1, None);
                }
                if side.concept_of[v].is_none() {
                    side.concept_of[v] = Some(c);
                }
            }
            Triple::Top { var } => {
                let v = var_of(var, &mut side.vars, &mut var_index);
                side.triples.push(ETriple::Top(v));
                side.tops.insert(v);
            }
            Triple::Relation { role, source, target } => {
                let s = var_of(source, &mut side.vars, &mut var_index);
                let t = var_of(target, &mut side.vars, &mut var_index);
                let r = interner.intern(role);
                side.triples.push(ETriple::Rel(r, s, t));
                side.relations.insert((r, s, t));
            }
            Triple::Attribute { role, source, value } => {
                let s = var_of(source, &mut side.vars, &mut var_index);
                let r = interner.intern(role);
                let v = interner.intern(value);
                side.triples.push(ETriple::Attr(s, r, v));
                side.attributes.insert((s, r, v));
            }
        }
    }
    side.concept_of.resize(side.vars.len(), None);
    side
}

/// Count of `from`-triples present in `to` under the variable assignment.
fn matched_count(from: &Side, to: &Side, assign: &[Option<usize>]) -> usize {
    from.triples
        .iter()
        .filter(|t| match **t {
            ETriple::Inst(v, c) => assign[v].is_some_and(|w| to.instances.contains(&(w, c))),
            ETriple::Top(v) => assign[v].is_some_and(|w| to.tops.contains(&w)),
            ETriple::Rel(r, s, t) => match (assign[s], assign[t]) {
                (Some(ms), Some(mt)) => to.relations.contains(&(r, ms, mt)),
                _ => false,
            },
            ETriple::Attr(s, r, v) => assign[s].is_some_and(|w| to.attributes.contains(&(w, r, v))),
        })
        .count()
}

struct Problem {
    a: Side,
    b: Side,
    /// When set, the search mapped `b`'s variables into `a`'s because `b`
    /// had fewer; the public mapping is inverted back to a→b.
    flipped: bool,
}

impl Problem {
    fn from_triples(a: &BTreeSet<Triple>, b: &BTreeSet<Triple>) -> Self {
        let mut interner = Interner::default();
        let a = build_side(a, &mut interner);
        let b = build_side(b, &mut interner);
        let flipped = a.vars.len() > b.vars.len();
        if flipped {
            Problem { a: b, b: a, flipped }
        } else {
            Problem { a, b, flipped }
        }
    }

    fn small(&self) -> &Side {
        &self.a
    }

    fn large(&self) -> &Side {
        &self.b
    }

    /// Translates an assignment over the (possibly flipped) search sides
    /// back into an a→b variable mapping.
    fn mapping(&self, assign: &[Option<usize>]) -> BTreeMap<VarId, VarId> {
        let mut out = BTreeMap::new();
        for (v, w) in assign.iter().enumerate() {
            if let Some(w) = w {
                let (from, to) = (&self.small().vars[v], &self.large().vars[*w]);
                if self.flipped {
                    out.insert(to.clone(), from.clone());
                } else {
                    out.insert(from.clone(), to.clone());
                }
            }
        }
        out
    }

    fn concept_greedy_init(&self) -> Vec<Option<usize>> {
        let (small, large) = (self.small(), self.large());
        let mut used = vec![false; large.vars.len()];
        let mut assign = vec![None; small.vars.len()];
        for v in 0..small.vars.len() {
            if let Some(c) = small.concept_of[v] {
                for w in 0..large.vars.len() {
                    if !used[w] && large.concept_of[w] == Some(c) {
                        assign[v] = Some(w);
                        used[w] = true;
                        break;
                    }
                }
            }
        }
        let free: Vec<usize> = (0..large.vars.len()).filter(|&w| !used[w]).collect();
        let mut free = free.into_iter();
        for slot in assign.iter_mut() {
            if slot.is_none() {
                *slot = free.next();
            }
        }
        assign
    }

    fn random_init(&self, rng: &mut ChaCha8Rng) -> Vec<Option<usize>> {
        let (small, large) = (self.small(), self.large());
        let mut targets: Vec<usize> = (0..large.vars.len()).collect();
        targets.shuffle(rng);
        (0..small.vars.len()).map(|v| targets.get(v).copied()).collect()
    }

    /// Greedy local search: best-improvement over single-variable moves to
    /// unused targets and pairwise swaps; deterministic scan order.
    fn climb(&self, assign: &mut Vec<Option<usize>>) -> usize {
        let (small, large) = (self.small(), self.large());
        let n = small.vars.len();
        let mut used = vec![false; large.vars.len()];
        for w in assign.iter().flatten() {
            used[*w] = true;
        }
        let mut score = matched_count(small, large, assign);
        loop {
            let mut best_gain = 0usize;
            let mut best: Option<Vec<Option<usize>>> = None;
            for v in 0..n {
                let original = assign[v];
                for w in 0..large.vars.len() {
                    if used[w] {
                        continue;
                    }
                    assign[v] = Some(w);
                    let s = matched_count(small, large, assign);
                    if s > score + best_gain {
                        best_gain = s - score;
                        best = Some(assign.clone());
                    }
                }
                assign[v] = original;
            }
            for v1 in 0..n {
                for v2 in (v1 + 1)..n {
                    assign.swap(v1, v2);
                    let s = matched_count(small, large, assign);
                    if s > score + best_gain {
                        best_gain = s - score;
                        best = Some(assign.clone());
                    }
                    assign.swap(v1, v2);
                }
            }
            match best {
                Some(next) => {
                    *assign = next;
                    used.iter_mut().for_each(|u| *u = false);
                    for w in assign.iter().flatten() {
                        used[*w] = true;
                    }
                    score += best_gain;
                }
                None => return score,
            }
        }
    }

    fn hill_climb(&self, restarts: usize, seed: u64) -> (usize, Vec<Option<usize>>) {
        let restarts = restarts.max(1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut best_score = 0usize;
        let mut best_assign: Vec<Option<usize>> = vec![None; self.small().vars.len()];
        for restart in 0..restarts {
            let mut assign = if restart == 0 {
                self.concept_greedy_init()
            } else {
                self.random_init(&mut rng)
            };
            let score = self.climb(&mut assign);
            if restart == 0 || score > best_score {
                best_score = score;
                best_assign = assign;
            }
        }
        (best_score, best_assign)
    }

    /// Branch-and-bound over all injective assignments of the smaller side.
    fn exact(&self) -> (usize, Vec<Option<usize>>) {
        let (small, large) = (self.small(), self.large());
        let n = small.vars.len();
        if n == 0 {
            return (0, Vec::new());
        }
        // A triple becomes decidable once its highest variable is assigned.
        let level_of = |t: &ETriple| match *t {
            ETriple::Inst(v, _) | ETriple::Top(v) | ETriple::Attr(v, _, _) => v,
            ETriple::Rel(_, s, t) => s.max(t),
        };
        let mut by_level: Vec<Vec<ETriple>> = vec![Vec::new(); n];
        for t in &small.triples {
            by_level[level_of(t)].push(*t);
        }
        // remaining[l] = triples decided at level >= l, the upper bound on
        // what deeper assignments can still match.
        let mut remaining = vec![0usize; n + 1];
        for l in (0..n).rev() {
            remaining[l] = remaining[l + 1] + by_level[l].len();
        }

        struct Search<'p> {
            large: &'p Side,
            n: usize,
            n_large: usize,
            by_level: Vec<Vec<ETriple>>,
            remaining: Vec<usize>,
            best: usize,
            best_assign: Vec<Option<usize>>,
            assign: Vec<Option<usize>>,
            used: Vec<bool>,
            have_solution: bool,
        }

        impl Search<'_> {
            fn decided_delta(&self, level: usize) -> usize {
                self.by_level[level]
                    .iter()
                    .filter(|t| match **t {
                        ETriple::Inst(v, c) => self.assign[v]
                            .is_some_and(|w| self.large.instances.contains(&(w, c))),
                        ETriple::Top(v) => self.assign[v].is_some_and(|w| self.large.tops.contains(&w)),
                        ETriple::Rel(r, s, t) => match (self.assign[s], self.assign[t]) {
                            (Some(ms), Some(mt)) => self.large.relations.contains(&(r, ms, mt)),
                            _ => false,
                        },
                        ETriple::Attr(s, r, v) => self.assign[s]
                            .is_some_and(|w| self.large.attributes.contains(&(w, r, v))),
                    })
                    .count()
            }

            fn recurse(&mut self, level: usize, matched: usize) {
                if self.have_solution && matched + self.remaining[level] <= self.best {
                    return;
                }
                if level == self.n {
                    if !self.have_solution || matched > self.best {
                        self.best = matched;
                        self.best_assign = self.assign.clone();
                        self.have_solution = true;
                    }
                    return;
                }
                for w in 0..self.n_large {
                    if self.used[w] {
                        continue;
                    }
                    self.assign[level] = Some(w);
                    self.used[w] = true;
                    let delta = self.decided_delta(level);
                    self.recurse(level + 1, matched + delta);
                    self.used[w] = false;
                    self.assign[level] = None;
                }
            }
        }

        let mut search = Search {
            large,
            n,
            n_large: large.vars.len(),
            by_level,
            remaining,
            best: 0,
            best_assign: vec![None; n],
            assign: vec![None; n],
            used: vec![false; large.vars.len()],
            have_solution: false,
        };
        search.recurse(0, 0);
        (search.best, search.best_assign)
    }
}

// ---------------------------------------------------------------------------
// Public API
// ---------------------------------------------------------------------------

/// Restarted hill-climbing Smatch between two graphs. Deterministic for a
/// fixed `(a, b, restarts, seed)`.
pub fn smatch(a: &AmrGraph, b: &AmrGraph, restarts: usize, seed: u64) -> SmatchResult {
    smatch_triples(&a.to_triples(), &b.to_triples(), restarts, seed)
}

/// Hill-climbing Smatch over explicit triple sets (used by the fine-grained
/// category scorers).
pub fn smatch_triples(
    a: &BTreeSet<Triple>,
    b: &BTreeSet<Triple>,
    restarts: usize,
    seed: u64,
) -> SmatchResult {
    let problem = Problem::from_triples(a, b);
    let (matched, assign) = problem.hill_climb(restarts, seed);
    SmatchResult::from_counts(matched, a.len(), b.len(), problem.mapping(&assign))
}

/// Exhaustive optimal Smatch. Errors when the smaller variable set exceeds
/// [`EXACT_VAR_LIMIT`].
pub fn smatch_exact(a: &AmrGraph, b: &AmrGraph) -> Result<SmatchResult, SmatchError> {
    smatch_exact_triples(&a.to_triples(), &b.to_triples())
}

pub fn smatch_exact_triples(
    a: &BTreeSet<Triple>,
    b: &BTreeSet<Triple>,
) -> Result<SmatchResult, SmatchError> {
    let problem = Problem::from_triples(a, b);
    let small_vars = problem.small().vars.len();
    if small_vars > EXACT_VAR_LIMIT {
        return Err(SmatchError::TooLarge(small_vars));
    }
    let (matched, assign) = problem.exact();
    Ok(SmatchResult::from_counts(matched, a.len(), b.len(), problem.mapping(&assign)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penman::{parse_penman, ParseMode};

    fn g(text: &str) -> AmrGraph {
        parse_penman(text, ParseMode::Strict).unwrap()
    }

    #[test]
    fn identity_scores_one() {
        for text in [
            "(b / boy)",
            "(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-02 :ARG0 b))",
            "(n / negate-01 :polarity -)",
        ] {
            let a = g(text);
            let r = smatch(&a, &a, DEFAULT_RESTARTS, 0);
            assert_eq!(r.f1, 1.0, "{text}");
            assert_eq!(r.matched, r.triples_a);
            let e = smatch_exact(&a, &a).unwrap();
            assert_eq!(e.f1, 1.0);
        }
    }

    #[test]
    fn alpha_renaming_invariance() {
        let a = g("(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-02 :ARG0 b))");
        let b = g("(x1 / want-01 :ARG0 (x2 / boy) :ARG1 (x3 / go-02 :ARG0 x2))");
        let r = smatch(&a, &b, DEFAULT_RESTARTS, 0);
        assert_eq!(r.f1, 1.0);
        assert_eq!(r.mapping.get("w"), Some(&"x1".to_string()));
        assert_eq!(r.mapping.get("b"), Some(&"x2".to_string()));
    }

    #[test]
    fn want_boy_vs_want_girl() {
        let a = g("(a / want-01 :ARG0 (b / boy))");
        let b = g("(x / want-01 :ARG0 (y / girl))");
        let e = smatch_exact(&a, &b).unwrap();
        assert_eq!(e.triples_a, 4);
        assert_eq!(e.triples_b, 4);
        assert_eq!(e.matched, 3);
        assert_eq!(e.f1, 0.75);
        assert_eq!(e.precision, 0.75);
        assert_eq!(e.recall, 0.75);
        assert_eq!(e.mapping.get("a"), Some(&"x".to_string()));
        assert_eq!(e.mapping.get("b"), Some(&"y".to_string()));

        let h = smatch(&a, &b, DEFAULT_RESTARTS, 0);
        assert_eq!(h.matched, 3);
        assert_eq!(h.f1, 0.75);
    }

    #[test]
    fn exact_guard() {
        let mut text = String::from("(v0 / c0");
        for i in 1..=9 {
            text.push_str(&format!(" :op{i} (v{i} / c{i})"));
        }
        text.push(')');
        let a = g(&text);
        assert_eq!(smatch_exact(&a, &a), Err(SmatchError::TooLarge(10)));
    }

    #[test]
    fn empty_graph_scores_zero() {
        let empty = AmrGraph::new();
        let a = g("(b / boy)");
        let r = smatch(&empty, &a, DEFAULT_RESTARTS, 0);
        assert_eq!(r.f1, 0.0);
        assert_eq!(r.precision, 0.0);
        assert_eq!(r.recall, 0.0);
        let r = smatch(&empty, &empty, DEFAULT_RESTARTS, 0);
        assert_eq!(r.f1, 0.0);
    }

    #[test]
    fn determinism() {
        let a = g("(s / see-01 :ARG0 (i / i) :ARG1 (c / cat :quant 2))");
        let b = g("(s / see-01 :ARG0 (d / dog) :ARG1 (c / cat) :time (n / now))");
        let r1 = smatch(&a, &b, 6, 1234);
        let r2 = smatch(&a, &b, 6, 1234);
        assert_eq!(r1, r2);
    }

    #[test]
    fn exact_symmetry() {
        let a = g("(s / see-01 :ARG0 (i / i) :ARG1 (c / cat :quant 2))");
        let b = g("(s / see-01 :ARG0 (d / dog) :ARG1 (c / cat) :time (n / now))");
        let ab = smatch_exact(&a, &b).unwrap();
        let ba = smatch_exact(&b, &a).unwrap();
        assert_eq!(ab.matched, ba.matched);
        assert_eq!(ab.f1, ba.f1);
        assert_eq!(ab.precision, ba.recall);
    }

    #[test]
    fn top_triple_penalizes_wrong_root() {
        let a = g("(w / want-01 :ARG0 (b / boy))");
        let b = g("(b / boy :ARG0-of (w / want-01))");
        // Same nodes and edge, different root.
        let e = smatch_exact(&a, &b).unwrap();
        assert_eq!(e.triples_a, 4);
        assert_eq!(e.matched, 3);
    }

    #[test]
    fn f1_cmp_is_exact() {
        let a = SmatchResult::from_counts(3, 4, 4, BTreeMap::new());
        let b = SmatchResult::from_counts(6, 8, 8, BTreeMap::new());
        assert_eq!(a.f1_cmp(&b), std::cmp::Ordering::Equal);
        let c = SmatchResult::from_counts(7, 8, 8, BTreeMap::new());
        assert_eq!(a.f1_cmp(&c), std::cmp::Ordering::Less);
        assert_eq!(c.f1_cmp(&a), std::cmp::Ordering::Greater);
    }

    #[test]
    fn monotone_damage_from_matching_copy() {
        let source = g("(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-02 :ARG0 b) :polarity - :time (n / now))");
        let mut damaged = source.clone();
        let mut prev = smatch_exact(&source, &damaged).unwrap().f1;
        assert_eq!(prev, 1.0);
        let edges: Vec<_> = damaged.edges().cloned().collect();
        for e in edges {
            damaged.remove_edge(&e);
            let f1 = smatch_exact(&source, &damaged).unwrap().f1;
            assert!(f1 <= prev, "deleting {e:?} raised f1 from {prev} to {f1}");
            prev = f1;
        }
        let attrs: Vec<_> = damaged.attributes().cloned().collect();
        for a in attrs {
            damaged.remove_attribute(&a);
            let f1 = smatch_exact(&source, &damaged).unwrap().f1;
            assert!(f1 <= prev);
            prev = f1;
        }
    }
}
