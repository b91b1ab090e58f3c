//! Oracle self-training: sample candidate action sequences from a proposer
//! and replace the stored actions under the Smatch/length rule.
//!
//! A candidate replaces the current best when its replayed graph scores
//! strictly higher Smatch against gold, or ties on Smatch with a strictly
//! shorter sequence. Both sides of every comparison are scored with the
//! same restarts and seed, and f1 ties are decided by exact integer
//! arithmetic, so a decision can never flip on metric noise. Every decision
//! therefore moves (f1, −length) lexicographically upward, which makes the
//! corpus-level score non-decreasing across epochs.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::corpus::Sentence;
use crate::graph::AmrGraph;
use crate::machine::{run, Action, ActionSequence, MachineError, RunMode};
use crate::smatch::{smatch, smatch_exact, SmatchResult};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Provenance {
    RuleOracle,
    Mined { round: usize },
}

/// One mining unit: sentence, gold graph and the current best actions.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    pub sentence: Sentence,
    pub gold: AmrGraph,
    pub actions: ActionSequence,
    pub provenance: Provenance,
}

impl TrainingExample {
    /// Validates that the stored actions replay successfully.
    pub fn new(
        sentence: Sentence,
        gold: AmrGraph,
        actions: ActionSequence,
    ) -> Result<Self, MiningError> {
        if let Err(source) = run(&sentence, &actions, RunMode::Lenient) {
            return Err(MiningError::BadExample { id: sentence.id.clone(), source });
        }
        Ok(TrainingExample { sentence, gold, actions, provenance: Provenance::RuleOracle })
    }
}

#[derive(Debug, Clone)]
pub struct MiningConfig {
    /// Candidates drawn per example per epoch.
    pub samples_per_sentence: usize,
    /// Stop a round once an epoch yields fewer replacements than this.
    pub stop_threshold: usize,
    pub max_epochs: usize,
    pub max_rounds: usize,
    pub seed: u64,
    /// Restarts for the Smatch comparisons inside `consider`.
    pub smatch_restarts: usize,
    /// Prefer exact matching when both graphs fit the exact-search guard.
    pub exact_smatch: bool,
}

impl Default for MiningConfig {
    fn default() -> Self {
        MiningConfig {
            samples_per_sentence: 1,
            stop_threshold: 20,
            max_epochs: 10,
            max_rounds: 2,
            seed: 0,
            smatch_restarts: 4,
            exact_smatch: false,
        }
    }
}

impl MiningConfig {
    pub fn validate(&self) -> Result<(), MiningError> {
        for (name, value) in [
            ("samples_per_sentence", self.samples_per_sentence),
            ("stop_threshold", self.stop_threshold),
            ("max_epochs", self.max_epochs),
            ("smatch_restarts", self.smatch_restarts),
        ] {
            if value == 0 {
                return Err(MiningError::Config(format!("{name} must be at least 1")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum MiningError {
    #[error("invalid mining config: {0}")]
    Config(String),
    #[error("example `{id}`: stored actions do not replay: {source}")]
    BadExample {
        id: String,
        #[source]
        source: MachineError,
    },
    #[error("proposer failed on {failed} example(s), first: `{first_id}`: {first_msg}")]
    EpochAborted {
        failed: usize,
        first_id: String,
        first_msg: String,
        /// Deterministic partial progress: every example the proposer did
        /// serve was still considered and updated.
        checkpoint: Vec<TrainingExample>,
    },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{0}")]
pub struct ProposerError(pub String);

/// Source of candidate action sequences, modeling a trained parser sampled
/// on the training sentences.
pub trait ActionProposer: Send + Sync {
    fn propose(
        &self,
        example: &TrainingExample,
        n_samples: usize,
        seed: u64,
    ) -> Result<Vec<ActionSequence>, ProposerError>;
}

// ---------------------------------------------------------------------------
// The replacement rule
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ConsiderDecision {
    Replace,
    Keep,
    /// Candidate failed machine replay and was discarded.
    InvalidCandidate,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConsiderOutcome {
    pub decision: ConsiderDecision,
    pub f1_current: f64,
    pub f1_candidate: Option<f64>,
    pub len_current: usize,
    pub len_candidate: usize,
}

fn score(graph: &AmrGraph, gold: &AmrGraph, restarts: usize, seed: u64, exact: bool) -> SmatchResult {
    if exact {
        if let Ok(result) = smatch_exact(graph, gold) {
            return result;
        }
    }
    smatch(graph, gold, restarts, seed)
}

/// Applies the replacement rule to one candidate. Smatch comparisons use
/// identical (restarts, seed) on both sides; equal-f1 ties fall to the
/// strictly shorter sequence.
pub fn consider(
    example: &TrainingExample,
    candidate: &ActionSequence,
    restarts: usize,
    seed: u64,
    exact: bool,
) -> ConsiderOutcome {
    let current_graph = run(&example.sentence, &example.actions, RunMode::Lenient)
        .expect("TrainingExample invariant: stored actions replay");
    let current = score(&current_graph, &example.gold, restarts, seed, exact);
    let len_current = example.actions.len();
    let len_candidate = candidate.len();

    let Ok(candidate_graph) = run(&example.sentence, candidate, RunMode::Lenient) else {
        return ConsiderOutcome {
            decision: ConsiderDecision::InvalidCandidate,
            f1_current: current.f1,
            f1_candidate: None,
            len_current,
            len_candidate,
        };
    };
    let proposed = score(&candidate_graph, &example.gold, restarts, seed, exact);

    let decision = match proposed.f1_cmp(&current) {
        std::cmp::Ordering::Greater => ConsiderDecision::Replace,
        std::cmp::Ordering::Equal if len_candidate < len_current => ConsiderDecision::Replace,
        _ => ConsiderDecision::Keep,
    };
    ConsiderOutcome {
        decision,
        f1_current: current.f1,
        f1_candidate: Some(proposed.f1),
        len_current,
        len_candidate,
    }
}

// ---------------------------------------------------------------------------
// Epochs and rounds
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub replacements: usize,
    pub invalid_candidates: usize,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-example seed: epoch-mixed config seed xor example index.
fn example_seed(cfg_seed: u64, epoch: u64, index: usize) -> u64 {
    splitmix64(cfg_seed ^ epoch.wrapping_mul(0x9E37_79B9_7F4A_7C15)) ^ index as u64
}

struct ExampleOutcome {
    example: TrainingExample,
    replacements: usize,
    invalid: usize,
    error: Option<ProposerError>,
}

fn mine_one(
    mut example: TrainingExample,
    proposer: &dyn ActionProposer,
    cfg: &MiningConfig,
    seed: u64,
    round: usize,
) -> ExampleOutcome {
    let candidates = match proposer.propose(&example, cfg.samples_per_sentence, seed) {
        Ok(c) => c,
        Err(e) => {
            return ExampleOutcome { example, replacements: 0, invalid: 0, error: Some(e) };
        }
    };
    let mut replacements = 0usize;
    let mut invalid = 0usize;
    for candidate in candidates {
        // Later candidates compete against the updated current best.
        let outcome = consider(&example, &candidate, cfg.smatch_restarts, cfg.seed, cfg.exact_smatch);
        match outcome.decision {
            ConsiderDecision::Replace => {
                example.actions = candidate;
                example.provenance = Provenance::Mined { round };
                replacements += 1;
            }
            ConsiderDecision::InvalidCandidate => invalid += 1,
            ConsiderDecision::Keep => {}
        }
    }
    ExampleOutcome { example, replacements, invalid, error: None }
}

/// One pass over the corpus. Examples are independent and processed in
/// parallel with per-example seeds; output order matches input order.
pub fn mine_epoch(
    corpus: Vec<TrainingExample>,
    proposer: &dyn ActionProposer,
    cfg: &MiningConfig,
    epoch: usize,
    round: usize,
) -> Result<(Vec<TrainingExample>, EpochStats), MiningError> {
    cfg.validate()?;
    let outcomes: Vec<ExampleOutcome> = corpus
        .into_par_iter()
        .enumerate()
        .map(|(index, example)| {
            let seed = example_seed(cfg.seed, epoch as u64, index);
            mine_one(example, proposer, cfg, seed, round)
        })
        .collect();

    let failed = outcomes.iter().filter(|o| o.error.is_some()).count();
    if failed > 0 {
        let first = outcomes.iter().find(|o| o.error.is_some()).expect("counted above");
        let first_id = first.example.sentence.id.clone();
        let first_msg = first.error.as_ref().expect("checked").0.clone();
        return Err(MiningError::EpochAborted {
            failed,
            first_id,
            first_msg,
            checkpoint: outcomes.into_iter().map(|o| o.example).collect(),
        });
    }

    let replacements = outcomes.iter().map(|o| o.replacements).sum();
    let invalid_candidates = outcomes.iter().map(|o| o.invalid).sum();
    let corpus = outcomes.into_iter().map(|o| o.example).collect();
    Ok((corpus, EpochStats { epoch, replacements, invalid_candidates }))
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundReport {
    pub round: usize,
    pub epochs: Vec<EpochStats>,
    pub replacements: usize,
    pub invalid_candidates: usize,
    /// Share of examples whose Smatch-to-gold improved this round, percent.
    pub improved_smatch_pct: f64,
    /// Share of examples with strictly shorter actions this round, percent.
    pub shorter_actions_pct: f64,
    pub oracle_f1_before: f64,
    pub oracle_f1_after: f64,
}

#[derive(Debug, Clone, Serialize, Default)]
pub struct MiningReport {
    pub rounds: Vec<RoundReport>,
}

/// Micro-averaged Smatch of replayed actions against gold across a corpus.
pub fn corpus_oracle_f1(corpus: &[TrainingExample], cfg: &MiningConfig) -> f64 {
    let (matched, ta, tb) = corpus
        .par_iter()
        .map(|ex| {
            let replay = run(&ex.sentence, &ex.actions, RunMode::Lenient)
                .expect("TrainingExample invariant: stored actions replay");
            let s = score(&replay, &ex.gold, cfg.smatch_restarts, cfg.seed, cfg.exact_smatch);
            (s.matched, s.triples_a, s.triples_b)
        })
        .reduce(|| (0, 0, 0), |x, y| (x.0 + y.0, x.1 + y.1, x.2 + y.2));
    if ta + tb == 0 {
        0.0
    } else {
        2.0 * matched as f64 / (ta + tb) as f64
    }
}

/// Runs up to `max_rounds` of epoch loops. A fresh proposer is built per
/// round (the hook where a caller would retrain an external model); each
/// round stops on the first epoch with fewer than `stop_threshold`
/// replacements, or after `max_epochs`.
pub fn mine_rounds<F>(
    mut corpus: Vec<TrainingExample>,
    mut proposer_factory: F,
    cfg: &MiningConfig,
) -> Result<(Vec<TrainingExample>, MiningReport), MiningError>
where
    F: FnMut(usize) -> Result<Box<dyn ActionProposer>, ProposerError>,
{
    cfg.validate()?;
    let mut report = MiningReport::default();
    let mut global_epoch = 0usize;
    for round in 0..cfg.max_rounds {
        let proposer = proposer_factory(round).map_err(|e| MiningError::EpochAborted {
            failed: 0,
            first_id: String::new(),
            first_msg: e.0,
            checkpoint: corpus.clone(),
        })?;
        let before: Vec<(f64, usize)> = snapshot(&corpus, cfg);
        let oracle_f1_before = corpus_oracle_f1(&corpus, cfg);
        let mut epochs = Vec::new();
        for _ in 0..cfg.max_epochs {
            let (next, stats) = mine_epoch(corpus, proposer.as_ref(), cfg, global_epoch, round)?;
            corpus = next;
            global_epoch += 1;
            let done = stats.replacements < cfg.stop_threshold;
            epochs.push(stats);
            if done {
                break;
            }
        }
        let after: Vec<(f64, usize)> = snapshot(&corpus, cfg);
        let total = corpus.len().max(1);
        let improved = before
            .iter()
            .zip(&after)
            .filter(|((f_before, _), (f_after, _))| f_after > f_before)
            .count();
        let shortened = before
            .iter()
            .zip(&after)
            .filter(|((_, l_before), (_, l_after))| l_after < l_before)
            .count();
        report.rounds.push(RoundReport {
            round,
            replacements: epochs.iter().map(|e| e.replacements).sum(),
            invalid_candidates: epochs.iter().map(|e| e.invalid_candidates).sum(),
            epochs,
            improved_smatch_pct: 100.0 * improved as f64 / total as f64,
            shorter_actions_pct: 100.0 * shortened as f64 / total as f64,
            oracle_f1_before,
            oracle_f1_after: corpus_oracle_f1(&corpus, cfg),
        });
    }
    Ok((corpus, report))
}

fn snapshot(corpus: &[TrainingExample], cfg: &MiningConfig) -> Vec<(f64, usize)> {
    corpus
        .par_iter()
        .map(|ex| {
            let replay = run(&ex.sentence, &ex.actions, RunMode::Lenient)
                .expect("TrainingExample invariant: stored actions replay");
            let s = score(&replay, &ex.gold, cfg.smatch_restarts, cfg.seed, cfg.exact_smatch);
            (s.f1, ex.actions.len())
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Built-in proposers
// ---------------------------------------------------------------------------

/// Yields the current actions unchanged; a no-op baseline.
pub struct IdentityProposer;

impl ActionProposer for IdentityProposer {
    fn propose(
        &self,
        example: &TrainingExample,
        n_samples: usize,
        _seed: u64,
    ) -> Result<Vec<ActionSequence>, ProposerError> {
        Ok(vec![example.actions.clone(); n_samples])
    }
}

/// Stochastic local edits of the current best sequence: delete one action,
/// swap a PRED or arc label for one from the example's own gold graph, or
/// insert an arc. Candidates that fail machine replay are discarded and
/// counted.
pub struct PerturbationProposer {
    pub attempts_per_sample: usize,
    discarded: AtomicUsize,
}

impl Default for PerturbationProposer {
    fn default() -> Self {
        PerturbationProposer { attempts_per_sample: 10, discarded: AtomicUsize::new(0) }
    }
}

impl PerturbationProposer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of machine-illegal edits discarded so far.
    pub fn discarded(&self) -> usize {
        self.discarded.load(Ordering::Relaxed)
    }

    fn edit(&self, example: &TrainingExample, rng: &mut ChaCha8Rng) -> ActionSequence {
        let mut candidate = example.actions.clone();
        let concepts: Vec<&str> = example.gold.nodes().map(|(_, c)| c).collect();
        let roles: Vec<&str> = example.gold.edges().map(|e| e.role.as_str()).collect();
        match rng.gen_range(0..4) {
            0 => {
                // Delete one action.
                if candidate.len() > 1 {
                    let pos = rng.gen_range(0..candidate.len());
                    candidate.remove(pos);
                }
            }
            1 => {
                // Replace a predicted concept with one from gold.
                let preds: Vec<usize> = candidate
                    .iter()
                    .enumerate()
                    .filter(|(_, a)| matches!(a, Action::Pred(_)))
                    .map(|(i, _)| i)
                    .collect();
                if !preds.is_empty() && !concepts.is_empty() {
                    let pos = preds[rng.gen_range(0..preds.len())];
                    let concept = concepts[rng.gen_range(0..concepts.len())].to_string();
                    candidate[pos] = Action::Pred(concept);
                }
            }
            2 => {
                // Replace an arc label with one from gold.
                let arcs: Vec<usize> = candidate
                    .iter()
                    .enumerate()
                    .filter(|(_, a)| matches!(a, Action::La(_) | Action::Ra(_)))
                    .map(|(i, _)| i)
                    .collect();
                if !arcs.is_empty() && !roles.is_empty() {
                    let pos = arcs[rng.gen_range(0..arcs.len())];
                    let role = roles[rng.gen_range(0..roles.len())].to_string();
                    candidate[pos] = match candidate[pos] {
                        Action::La(_) => Action::La(role),
                        _ => Action::Ra(role),
                    };
                }
            }
            _ => {
                // Insert an arc.
                if !roles.is_empty() {
                    let pos = rng.gen_range(0..=candidate.len().saturating_sub(1));
                    let role = roles[rng.gen_range(0..roles.len())].to_string();
                    let arc = if rng.gen_bool(0.5) { Action::La(role) } else { Action::Ra(role) };
                    candidate.insert(pos, arc);
                }
            }
        }
        candidate
    }
}

impl ActionProposer for PerturbationProposer {
    fn propose(
        &self,
        example: &TrainingExample,
        n_samples: usize,
        seed: u64,
    ) -> Result<Vec<ActionSequence>, ProposerError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        for _ in 0..n_samples {
            for _ in 0..self.attempts_per_sample {
                let candidate = self.edit(example, &mut rng);
                if run(&example.sentence, &candidate, RunMode::Lenient).is_ok() {
                    out.push(candidate);
                    break;
                }
                self.discarded.fetch_add(1, Ordering::Relaxed);
            }
        }
        Ok(out)
    }
}

/// Test proposer with a fixed schedule: for example id X at its N-th
/// `propose` call, yield the scripted sequence. Drives the stopping-rule
/// checks with known replacement counts per epoch.
pub struct ScriptedProposer {
    schedule: HashMap<String, (usize, ActionSequence)>,
    calls: Mutex<HashMap<String, usize>>,
}

impl ScriptedProposer {
    pub fn new(schedule: HashMap<String, (usize, ActionSequence)>) -> Self {
        ScriptedProposer { schedule, calls: Mutex::new(HashMap::new()) }
    }
}

impl ActionProposer for ScriptedProposer {
    fn propose(
        &self,
        example: &TrainingExample,
        _n_samples: usize,
        _seed: u64,
    ) -> Result<Vec<ActionSequence>, ProposerError> {
        let call = {
            let mut calls = self.calls.lock().expect("no poisoned lock");
            let counter = calls.entry(example.sentence.id.clone()).or_insert(0);
            let current = *counter;
            *counter += 1;
            current
        };
        match self.schedule.get(&example.sentence.id) {
            Some((epoch, actions)) if *epoch == call => Ok(vec![actions.clone()]),
            _ => Ok(Vec::new()),
        }
    }
}
