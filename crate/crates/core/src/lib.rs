//! Non-neural machinery for self-learning AMR parsing: graph and corpus
//! handling, Smatch scoring, a transition state machine with a rule-based
//! oracle, Smatch-guarded action mining, and the cycle-consistency filters
//! for synthetic text and synthetic AMR. Neural parser, generator and
//! proposer roles are abstracted behind external-process adapters.

pub mod adapter;
pub mod bleu;
pub mod corpus;
pub mod finegrained;
pub mod fixtures;
pub mod graph;
pub mod machine;
pub mod mining;
pub mod oracle;
pub mod penman;
pub mod smatch;
pub mod synamr;
pub mod syntext;

pub use corpus::{read_corpus, write_corpus, Alignment, Corpus, CorpusRecord, Sentence, Span};
pub use graph::{AmrGraph, Attribute, Edge, Triple, VarId};
pub use machine::{run, Action, ActionSequence, MachineState};
pub use penman::{parse_penman, serialize_penman, ParseMode, PenmanStyle};
pub use smatch::{smatch, smatch_exact, SmatchResult};
