//! The transition state machine: applies an action sequence to a sentence
//! and builds an AMR graph.
//!
//! Stack items are either token groups (pre-node material) or node handles.
//! Arcs connect the top two node handles; REDUCE pops the top item; CLOSE
//! requires an empty buffer and freezes the state. An edge budget of
//! `|nodes|²` bounds LA/RA so that every legal action sequence terminates.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::corpus::{Alignment, Sentence, Span};
use crate::graph::{AmrGraph, VarId};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Action {
    Shift,
    Reduce,
    Merge,
    Pred(String),
    La(String),
    Ra(String),
    Root,
    Close,
}

impl Action {
    pub fn kind(&self) -> ActionKind {
        match self {
            Action::Shift => ActionKind::Shift,
            Action::Reduce => ActionKind::Reduce,
            Action::Merge => ActionKind::Merge,
            Action::Pred(_) => ActionKind::Pred,
            Action::La(_) => ActionKind::La,
            Action::Ra(_) => ActionKind::Ra,
            Action::Root => ActionKind::Root,
            Action::Close => ActionKind::Close,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Shift => write!(f, "SHIFT"),
            Action::Reduce => write!(f, "REDUCE"),
            Action::Merge => write!(f, "MERGE"),
            Action::Pred(c) => write!(f, "PRED({c})"),
            Action::La(r) => write!(f, "LA({r})"),
            Action::Ra(r) => write!(f, "RA({r})"),
            Action::Root => write!(f, "ROOT"),
            Action::Close => write!(f, "CLOSE"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ActionKind {
    Shift,
    Reduce,
    Merge,
    Pred,
    La,
    Ra,
    Root,
    Close,
}

pub type ActionSequence = Vec<Action>;

/// Renders actions in the wire format: `SHIFT PRED(want-01) LA(ARG0) ROOT CLOSE`.
pub fn format_actions(actions: &[Action]) -> String {
    actions.iter().map(Action::to_string).collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("bad action token `{0}`")]
pub struct ActionParseError(pub String);

pub fn parse_actions(line: &str) -> Result<ActionSequence, ActionParseError> {
    line.split_whitespace().map(parse_action).collect()
}

fn parse_action(token: &str) -> Result<Action, ActionParseError> {
    match token {
        "SHIFT" => return Ok(Action::Shift),
        "REDUCE" => return Ok(Action::Reduce),
        "MERGE" => return Ok(Action::Merge),
        "ROOT" => return Ok(Action::Root),
        "CLOSE" => return Ok(Action::Close),
        _ => {}
    }
    for (prefix, build) in [
        ("PRED(", Action::Pred as fn(String) -> Action),
        ("LA(", Action::La as fn(String) -> Action),
        ("RA(", Action::Ra as fn(String) -> Action),
    ] {
        if let Some(rest) = token.strip_prefix(prefix) {
            if let Some(label) = rest.strip_suffix(')') {
                if !label.is_empty() {
                    return Ok(build(label.to_string()));
                }
            }
        }
    }
    Err(ActionParseError(token.to_string()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StackItem {
    /// Shifted tokens not yet turned into a node.
    TokenGroup(BTreeSet<usize>),
    /// Handle of a node in the partial graph.
    Node(VarId),
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("`{action}` is illegal here: {reason}")]
pub struct StepError {
    pub action: String,
    pub reason: String,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MachineError {
    #[error("sentence has no tokens")]
    EmptyTokens,
    #[error("action {index}: {source}")]
    Step {
        index: usize,
        #[source]
        source: StepError,
    },
    #[error("action sequence did not CLOSE the machine")]
    MissingClose,
    #[error("no ROOT action was issued and strict mode forbids a default root")]
    MissingRoot,
}

/// Immutable machine state; `step` returns a new state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MachineState {
    buffer: VecDeque<usize>,
    stack: Vec<StackItem>,
    partial: AmrGraph,
    alignment: Alignment,
    root_set: bool,
    closed: bool,
}

impl MachineState {
    pub fn buffer(&self) -> &VecDeque<usize> {
        &self.buffer
    }

    pub fn stack(&self) -> &[StackItem] {
        &self.stack
    }

    pub fn partial(&self) -> &AmrGraph {
        &self.partial
    }

    pub fn alignment(&self) -> &Alignment {
        &self.alignment
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn root_set(&self) -> bool {
        self.root_set
    }

    fn top2(&self) -> (Option<&StackItem>, Option<&StackItem>) {
        let n = self.stack.len();
        let top = self.stack.last();
        let second = if n >= 2 { self.stack.get(n - 2) } else { None };
        (top, second)
    }

    fn edge_budget_left(&self) -> bool {
        let n = self.partial.node_count();
        self.partial.edge_count() < n * n
    }

    fn fresh_var(&self, concept: &str) -> VarId {
        let base: char = concept
            .chars()
            .find(|c| c.is_ascii_alphabetic())
            .map(|c| c.to_ascii_lowercase())
            .unwrap_or('x');
        let candidate = base.to_string();
        if !self.partial.has_node(&candidate) {
            return candidate;
        }
        let mut n = 2usize;
        loop {
            let candidate = format!("{base}{n}");
            if !self.partial.has_node(&candidate) {
                return candidate;
            }
            n += 1;
        }
    }
}

/// Fresh state: buffer holds every token index in order, stack empty.
pub fn initial_state(sentence: &Sentence) -> Result<MachineState, MachineError> {
    if sentence.tokens.is_empty() {
        return Err(MachineError::EmptyTokens);
    }
    Ok(MachineState {
        buffer: (0..sentence.tokens.len()).collect(),
        stack: Vec::new(),
        partial: AmrGraph::new(),
        alignment: Alignment::new(),
        root_set: false,
        closed: false,
    })
}

fn illegal(action: &Action, reason: impl Into<String>) -> StepError {
    StepError { action: action.to_string(), reason: reason.into() }
}

/// Applies one action, returning the successor state.
pub fn step(state: &MachineState, action: &Action) -> Result<MachineState, StepError> {
    if state.closed {
        return Err(illegal(action, "machine is closed"));
    }
    let mut next = state.clone();
    match action {
        Action::Shift => {
            let Some(index) = next.buffer.pop_front() else {
                return Err(illegal(action, "buffer is empty"));
            };
            next.stack.push(StackItem::TokenGroup(BTreeSet::from([index])));
        }
        Action::Reduce => {
            if next.stack.pop().is_none() {
                return Err(illegal(action, "stack is empty"));
            }
        }
        Action::Merge => {
            let (top, second) = state.top2();
            match (top, second) {
                (Some(StackItem::TokenGroup(_)), Some(StackItem::TokenGroup(_))) => {}
                _ => return Err(illegal(action, "top two stack items must be token groups")),
            }
            let Some(StackItem::TokenGroup(top)) = next.stack.pop() else { unreachable!() };
            let Some(StackItem::TokenGroup(mut second)) = next.stack.pop() else { unreachable!() };
            second.extend(top);
            next.stack.push(StackItem::TokenGroup(second));
        }
        Action::Pred(concept) => {
            if concept.is_empty() {
                return Err(illegal(action, "empty concept label"));
            }
            match state.stack.last() {
                Some(StackItem::TokenGroup(_)) => {}
                _ => return Err(illegal(action, "top of stack must be a token group")),
            }
            let Some(StackItem::TokenGroup(group)) = next.stack.pop() else { unreachable!() };
            let var = next.fresh_var(concept);
            next.partial
                .add_node(var.clone(), concept.clone())
                .expect("fresh variable cannot clash");
            let start = *group.first().expect("token groups are non-empty");
            let end = *group.last().expect("token groups are non-empty");
            next.alignment.insert(var.clone(), Span::new(start, end));
            next.stack.push(StackItem::Node(var));
        }
        Action::La(role) | Action::Ra(role) => {
            if role.is_empty() {
                return Err(illegal(action, "empty role label"));
            }
            let (top, second) = state.top2();
            let (top, second) = match (top, second) {
                (Some(StackItem::Node(t)), Some(StackItem::Node(s))) => (t.clone(), s.clone()),
                _ => return Err(illegal(action, "top two stack items must be node handles")),
            };
            if !state.edge_budget_left() {
                return Err(illegal(action, "edge budget |nodes|^2 exhausted"));
            }
            let (src, tgt) = match action {
                Action::La(_) => (top, second),
                _ => (second, top),
            };
            let inserted = next
                .partial
                .add_edge(src.clone(), role.clone(), tgt.clone())
                .expect("stack handles refer to declared nodes");
            if !inserted {
                return Err(illegal(action, format!("edge ({src}, {role}, {tgt}) already exists")));
            }
        }
        Action::Root => {
            if state.root_set {
                return Err(illegal(action, "root already set"));
            }
            let var = match state.stack.last() {
                Some(StackItem::Node(v)) => v.clone(),
                _ => return Err(illegal(action, "top of stack must be a node handle")),
            };
            next.partial.set_root(var).expect("handle refers to a declared node");
            next.root_set = true;
        }
        Action::Close => {
            if !state.buffer.is_empty() {
                return Err(illegal(action, "buffer must be empty"));
            }
            next.stack.clear();
            next.closed = true;
        }
    }
    Ok(next)
}

/// Action kinds for which `step` would succeed with a suitable label.
///
/// Labels are unconstrained: LA/RA are reported legal whenever the stack
/// shape and edge budget allow some label, even though a specific duplicate
/// label would still fail.
pub fn legal_actions(state: &MachineState) -> BTreeSet<ActionKind> {
    let mut out = BTreeSet::new();
    if state.closed {
        return out;
    }
    if !state.buffer.is_empty() {
        out.insert(ActionKind::Shift);
    }
    if !state.stack.is_empty() {
        out.insert(ActionKind::Reduce);
    }
    let (top, second) = state.top2();
    if matches!(
        (top, second),
        (Some(StackItem::TokenGroup(_)), Some(StackItem::TokenGroup(_)))
    ) {
        out.insert(ActionKind::Merge);
    }
    if matches!(top, Some(StackItem::TokenGroup(_))) {
        out.insert(ActionKind::Pred);
    }
    if matches!((top, second), (Some(StackItem::Node(_)), Some(StackItem::Node(_))))
        && state.edge_budget_left()
    {
        out.insert(ActionKind::La);
        out.insert(ActionKind::Ra);
    }
    if matches!(top, Some(StackItem::Node(_))) && !state.root_set {
        out.insert(ActionKind::Root);
    }
    if state.buffer.is_empty() {
        out.insert(ActionKind::Close);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RunMode {
    /// A missing ROOT defaults the root to the first-created node.
    #[default]
    Lenient,
    /// A missing ROOT is an error.
    Strict,
}

/// Runs a full action sequence, returning the produced graph.
pub fn run(sentence: &Sentence, actions: &[Action], mode: RunMode) -> Result<AmrGraph, MachineError> {
    run_full(sentence, actions, mode).map(|(g, _)| g)
}

/// Like [`run`] but also returns the machine-recorded node alignment.
pub fn run_full(
    sentence: &Sentence,
    actions: &[Action],
    mode: RunMode,
) -> Result<(AmrGraph, Alignment), MachineError> {
    let mut state = initial_state(sentence)?;
    for (index, action) in actions.iter().enumerate() {
        state = step(&state, action).map_err(|source| MachineError::Step { index, source })?;
    }
    if !state.closed {
        return Err(MachineError::MissingClose);
    }
    let mut graph = state.partial;
    if !state.root_set {
        match mode {
            RunMode::Strict => return Err(MachineError::MissingRoot),
            RunMode::Lenient => {
                if let Some(first) = graph.first_variable().cloned() {
                    graph.set_root(first).expect("first variable is declared");
                }
            }
        }
    }
    Ok((graph, state.alignment))
}
