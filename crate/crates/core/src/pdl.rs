//! Translation of the star-free fragment into PDL, plus a reference PDL
//! evaluator used for differential testing.
//!
//! The one non-homomorphic case is a boxed common-knowledge sentence
//! `[alpha] C_G psi`. Its dual asks for a path through the reachable
//! fragment of the canonical action model whose visited actions all pass
//! their precondition tests; those paths form a regular language, extracted
//! here by state elimination and emitted as a PDL program of agent steps
//! interleaved with tests.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::canon::{CanonError, OmegaOracle};
use crate::kripke::{StateModel, StateSet};
use crate::rewrite::{normalize, RewriteConfig, RewriteError};
use crate::syntax::{render_action, Agent, Sentence, Signature, SimpleAction};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PdlError {
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
    #[error(transparent)]
    Canon(#[from] CanonError),
    #[error("unknown agent program {0:?}")]
    UnknownAgent(String),
    #[error("translation applies to the star-free fragment only")]
    Star,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PdlSentence {
    True,
    False,
    Atom(String),
    Not(Box<PdlSentence>),
    And(Box<PdlSentence>, Box<PdlSentence>),
    Or(Box<PdlSentence>, Box<PdlSentence>),
    Box(PdlProgram, Box<PdlSentence>),
    Diamond(PdlProgram, Box<PdlSentence>),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PdlProgram {
    Agent(Agent),
    Test(Box<PdlSentence>),
    Seq(Box<PdlProgram>, Box<PdlProgram>),
    Choice(Box<PdlProgram>, Box<PdlProgram>),
    Star(Box<PdlProgram>),
}

impl PdlSentence {
    pub fn not(s: PdlSentence) -> PdlSentence {
        PdlSentence::Not(Box::new(s))
    }
    pub fn and(a: PdlSentence, b: PdlSentence) -> PdlSentence {
        PdlSentence::And(Box::new(a), Box::new(b))
    }
    pub fn or(a: PdlSentence, b: PdlSentence) -> PdlSentence {
        PdlSentence::Or(Box::new(a), Box::new(b))
    }
    pub fn boxed(p: PdlProgram, s: PdlSentence) -> PdlSentence {
        PdlSentence::Box(p, Box::new(s))
    }
    pub fn diamond(p: PdlProgram, s: PdlSentence) -> PdlSentence {
        PdlSentence::Diamond(p, Box::new(s))
    }
}

impl PdlProgram {
    pub fn test(s: PdlSentence) -> PdlProgram {
        PdlProgram::Test(Box::new(s))
    }
}

/// Concrete PDL syntax: programs `a`, `?phi`, `;`, `+`, `*`.
pub fn render_pdl(s: &PdlSentence) -> String {
    match s {
        PdlSentence::True => "true".into(),
        PdlSentence::False => "false".into(),
        PdlSentence::Atom(p) => p.clone(),
        PdlSentence::Not(x) => format!("~{}", render_pdl(x)),
        PdlSentence::And(a, b) => format!("({} & {})", render_pdl(a), render_pdl(b)),
        PdlSentence::Or(a, b) => format!("({} | {})", render_pdl(a), render_pdl(b)),
        PdlSentence::Box(p, x) => format!("[{}]{}", render_pdl_program(p), render_pdl(x)),
        PdlSentence::Diamond(p, x) => format!("<{}>{}", render_pdl_program(p), render_pdl(x)),
    }
}

pub fn render_pdl_program(p: &PdlProgram) -> String {
    match p {
        PdlProgram::Agent(a) => a.clone(),
        PdlProgram::Test(s) => format!("?{}", render_pdl(s)),
        PdlProgram::Seq(a, b) => format!("({} ; {})", render_pdl_program(a), render_pdl_program(b)),
        PdlProgram::Choice(a, b) => {
            format!("({} + {})", render_pdl_program(a), render_pdl_program(b))
        }
        PdlProgram::Star(a) => format!("{}*", render_pdl_program(a)),
    }
}

// ---------------------------------------------------------------------------
// Kleene-algebra state elimination, shared by regexes and PDL programs.

pub trait Kleene: Clone {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn plus(a: Self, b: Self) -> Self;
    fn seq(a: Self, b: Self) -> Self;
    fn star(a: Self) -> Self;
}

/// Generalized-NFA state elimination over states `0..n` with a virtual
/// initial source and final sink. `init[q]` enters at `q`, `edges[q][r]`
/// steps, `accept[q]` exits. States are eliminated in the given order; the
/// result is the total source-to-sink weight.
pub fn eliminate_states<K: Kleene>(
    n: usize,
    init: Vec<K>,
    edges: Vec<Vec<K>>,
    accept: Vec<K>,
    order: &[usize],
) -> K {
    assert_eq!(init.len(), n);
    assert_eq!(accept.len(), n);
    assert_eq!(order.len(), n);
    // Matrix over n real states plus source (n) and sink (n+1).
    let m = n + 2;
    let mut w: Vec<Vec<K>> = vec![vec![K::zero(); m]; m];
    for q in 0..n {
        w[n][q] = init[q].clone();
        w[q][n + 1] = accept[q].clone();
        for r in 0..n {
            w[q][r] = edges[q][r].clone();
        }
    }
    let mut alive = vec![true; m];
    for &q in order {
        assert!(q < n);
        alive[q] = false;
        let loop_star = K::star(w[q][q].clone());
        let sources: Vec<usize> = (0..m).filter(|&s| alive[s] && !w[s][q].is_zero()).collect();
        let targets: Vec<usize> = (0..m).filter(|&r| alive[r] && !w[q][r].is_zero()).collect();
        for &s in &sources {
            let through = K::seq(w[s][q].clone(), loop_star.clone());
            for &r in &targets {
                let add = K::seq(through.clone(), w[q][r].clone());
                w[s][r] = K::plus(w[s][r].clone(), add);
            }
        }
    }
    w[n][n + 1].clone()
}

// ---------------------------------------------------------------------------
// Regular expressions over an arbitrary letter type.

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Regex<L> {
    Empty,
    Epsilon,
    Letter(L),
    Seq(Box<Regex<L>>, Box<Regex<L>>),
    Alt(Box<Regex<L>>, Box<Regex<L>>),
    Star(Box<Regex<L>>),
}

impl<L: Clone + Ord> Kleene for Regex<L> {
    fn zero() -> Self {
        Regex::Empty
    }
    fn one() -> Self {
        Regex::Epsilon
    }
    fn is_zero(&self) -> bool {
        matches!(self, Regex::Empty)
    }
    fn plus(a: Self, b: Self) -> Self {
        match (a, b) {
            (Regex::Empty, b) => b,
            (a, Regex::Empty) => a,
            (a, b) => {
                if a == b {
                    a
                } else {
                    Regex::Alt(Box::new(a), Box::new(b))
                }
            }
        }
    }
    fn seq(a: Self, b: Self) -> Self {
        match (a, b) {
            (Regex::Empty, _) | (_, Regex::Empty) => Regex::Empty,
            (Regex::Epsilon, b) => b,
            (a, Regex::Epsilon) => a,
            (a, b) => Regex::Seq(Box::new(a), Box::new(b)),
        }
    }
    fn star(a: Self) -> Self {
        match a {
            Regex::Empty | Regex::Epsilon => Regex::Epsilon,
            Regex::Star(inner) => Regex::Star(inner),
            a => Regex::Star(Box::new(a)),
        }
    }
}

impl<L: Clone + Ord> Regex<L> {
    pub fn letters(&self) -> BTreeSet<L> {
        let mut out = BTreeSet::new();
        self.collect_letters(&mut out);
        out
    }

    fn collect_letters(&self, out: &mut BTreeSet<L>) {
        match self {
            Regex::Empty | Regex::Epsilon => {}
            Regex::Letter(l) => {
                out.insert(l.clone());
            }
            Regex::Seq(a, b) | Regex::Alt(a, b) => {
                a.collect_letters(out);
                b.collect_letters(out);
            }
            Regex::Star(a) => a.collect_letters(out),
        }
    }

    /// Thompson construction: NFA with epsilon moves.
    fn to_nfa(&self) -> Nfa<L> {
        let mut nfa = Nfa {
            eps: Vec::new(),
            steps: Vec::new(),
            start: 0,
            accept: 0,
        };
        let (start, end) = nfa.build(self);
        nfa.start = start;
        nfa.accept = end;
        nfa
    }

    /// All words of length at most `max_len` in the language, by BFS over
    /// the determinized automaton.
    pub fn words_up_to(&self, max_len: usize) -> BTreeSet<Vec<L>> {
        let dfa = Dfa::from_regex(self, &self.letters().into_iter().collect::<Vec<_>>());
        let mut out = BTreeSet::new();
        let mut layer: Vec<(usize, Vec<L>)> = vec![(dfa.start, Vec::new())];
        for _ in 0..=max_len {
            let mut next = Vec::new();
            for (q, word) in &layer {
                if dfa.accepting[*q] {
                    out.insert(word.clone());
                }
                if word.len() == max_len {
                    continue;
                }
                for (li, l) in dfa.alphabet.iter().enumerate() {
                    let r = dfa.next[*q][li];
                    let mut w = word.clone();
                    w.push(l.clone());
                    next.push((r, w));
                }
            }
            if next.is_empty() {
                break;
            }
            layer = next;
        }
        out
    }
}

struct Nfa<L> {
    eps: Vec<Vec<usize>>,
    steps: Vec<Vec<(L, usize)>>,
    start: usize,
    accept: usize,
}

impl<L: Clone + Ord> Nfa<L> {
    fn fresh(&mut self) -> usize {
        self.eps.push(Vec::new());
        self.steps.push(Vec::new());
        self.eps.len() - 1
    }

    fn build(&mut self, r: &Regex<L>) -> (usize, usize) {
        match r {
            Regex::Empty => {
                let a = self.fresh();
                let b = self.fresh();
                (a, b)
            }
            Regex::Epsilon => {
                let a = self.fresh();
                let b = self.fresh();
                self.eps[a].push(b);
                (a, b)
            }
            Regex::Letter(l) => {
                let a = self.fresh();
                let b = self.fresh();
                self.steps[a].push((l.clone(), b));
                (a, b)
            }
            Regex::Seq(x, y) => {
                let (xa, xb) = self.build(x);
                let (ya, yb) = self.build(y);
                self.eps[xb].push(ya);
                (xa, yb)
            }
            Regex::Alt(x, y) => {
                let a = self.fresh();
                let b = self.fresh();
                let (xa, xb) = self.build(x);
                let (ya, yb) = self.build(y);
                self.eps[a].push(xa);
                self.eps[a].push(ya);
                self.eps[xb].push(b);
                self.eps[yb].push(b);
                (a, b)
            }
            Regex::Star(x) => {
                let a = self.fresh();
                let b = self.fresh();
                let (xa, xb) = self.build(x);
                self.eps[a].push(xa);
                self.eps[a].push(b);
                self.eps[xb].push(xa);
                self.eps[xb].push(b);
                (a, b)
            }
        }
    }

    fn closure(&self, set: &BTreeSet<usize>) -> BTreeSet<usize> {
        let mut out = set.clone();
        let mut stack: Vec<usize> = set.iter().copied().collect();
        while let Some(q) = stack.pop() {
            for &r in &self.eps[q] {
                if out.insert(r) {
                    stack.push(r);
                }
            }
        }
        out
    }
}

struct Dfa<L> {
    alphabet: Vec<L>,
    start: usize,
    accepting: Vec<bool>,
    next: Vec<Vec<usize>>,
}

impl<L: Clone + Ord> Dfa<L> {
    fn from_regex(r: &Regex<L>, alphabet: &[L]) -> Dfa<L> {
        let nfa = r.to_nfa();
        let start_set = nfa.closure(&std::iter::once(nfa.start).collect());
        let mut ids: BTreeMap<BTreeSet<usize>, usize> = BTreeMap::new();
        let mut sets: Vec<BTreeSet<usize>> = Vec::new();
        let mut next: Vec<Vec<usize>> = Vec::new();
        ids.insert(start_set.clone(), 0);
        sets.push(start_set);
        let mut frontier = vec![0usize];
        while let Some(q) = frontier.pop() {
            if next.len() <= q {
                next.resize(q + 1, Vec::new());
            }
            let mut row = Vec::with_capacity(alphabet.len());
            for l in alphabet {
                let mut moved = BTreeSet::new();
                for &s in &sets[q] {
                    for (letter, t) in &nfa.steps[s] {
                        if letter == l {
                            moved.insert(*t);
                        }
                    }
                }
                let closed = nfa.closure(&moved);
                let id = match ids.get(&closed) {
                    Some(&id) => id,
                    None => {
                        let id = sets.len();
                        ids.insert(closed.clone(), id);
                        sets.push(closed);
                        frontier.push(id);
                        id
                    }
                };
                row.push(id);
            }
            next[q] = row;
        }
        // Pad rows for any state discovered late.
        for q in 0..sets.len() {
            if next.len() <= q {
                next.resize(q + 1, Vec::new());
            }
            if next[q].is_empty() && !alphabet.is_empty() {
                // Unreached here: every discovered state gets a row when
                // popped. Kept for safety with empty alphabets.
                next[q] = vec![q; alphabet.len()];
            }
        }
        let accepting = sets.iter().map(|s| s.contains(&nfa.accept)).collect();
        Dfa {
            alphabet: alphabet.to_vec(),
            start: 0,
            accepting,
            next,
        }
    }
}

/// Language equality of two regexes over the union of their alphabets, by
/// product-DFA search for a distinguishing word.
pub fn regex_language_equal<L: Clone + Ord>(a: &Regex<L>, b: &Regex<L>) -> bool {
    let mut alphabet: BTreeSet<L> = a.letters();
    alphabet.extend(b.letters());
    let alphabet: Vec<L> = alphabet.into_iter().collect();
    let da = Dfa::from_regex(a, &alphabet);
    let db = Dfa::from_regex(b, &alphabet);
    let mut seen: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut queue: VecDeque<(usize, usize)> = VecDeque::new();
    seen.insert((da.start, db.start));
    queue.push_back((da.start, db.start));
    while let Some((qa, qb)) = queue.pop_front() {
        if da.accepting[qa] != db.accepting[qb] {
            return false;
        }
        for li in 0..alphabet.len() {
            let pair = (da.next[qa][li], db.next[qb][li]);
            if seen.insert(pair) {
                queue.push_back(pair);
            }
        }
    }
    true
}

// ---------------------------------------------------------------------------
// The action automaton and its regular languages.

/// The reachable fragment of the canonical action model around an action,
/// restricted to arrows labeled by a fixed agent group.
#[derive(Debug, Clone)]
pub struct ActionAutomaton {
    pub states: Vec<SimpleAction>,
    pub agents: BTreeSet<Agent>,
    /// (from, agent, to)
    pub transitions: BTreeSet<(usize, Agent, usize)>,
    pub initial: usize,
}

impl ActionAutomaton {
    pub fn reachable_fragment(
        sig: &Signature,
        action: &SimpleAction,
        group: &BTreeSet<Agent>,
    ) -> Result<ActionAutomaton, CanonError> {
        let oracle = OmegaOracle::new(sig);
        // Deterministic state order: canonical rendering.
        let mut states: Vec<SimpleAction> = oracle.reachable(action, group)?.into_iter().collect();
        states.sort_by_key(render_action);
        let initial = states.iter().position(|a| a == action).expect("reachable");
        let mut transitions = BTreeSet::new();
        for (i, a) in states.iter().enumerate() {
            for agent in group {
                for b in oracle.successors(a, agent)? {
                    if let Some(j) = states.iter().position(|x| *x == b) {
                        transitions.insert((i, agent.clone(), j));
                    }
                }
            }
        }
        Ok(ActionAutomaton {
            states,
            agents: group.clone(),
            transitions,
            initial,
        })
    }

    fn edge_matrix<K: Kleene>(&self, mut label: impl FnMut(&Agent, usize) -> K) -> Vec<Vec<K>> {
        let n = self.states.len();
        let mut edges = vec![vec![K::zero(); n]; n];
        for (from, agent, to) in &self.transitions {
            let step = label(agent, *to);
            edges[*from][*to] = K::plus(edges[*from][*to].clone(), step);
        }
        edges
    }

    /// Elimination order: reverse canonical id order.
    fn elimination_order(&self) -> Vec<usize> {
        (0..self.states.len()).rev().collect()
    }

    /// Label-sequence language of paths from the initial state into
    /// `accept`, as a regex over agents.
    pub fn label_regex(&self, accept: &BTreeSet<usize>) -> Regex<Agent> {
        let n = self.states.len();
        let mut init = vec![Regex::Empty; n];
        init[self.initial] = Regex::Epsilon;
        let edges = self.edge_matrix(|agent, _| Regex::Letter(agent.clone()));
        let acceptv = (0..n)
            .map(|q| {
                if accept.contains(&q) {
                    Regex::Epsilon
                } else {
                    Regex::Empty
                }
            })
            .collect();
        eliminate_states(n, init, edges, acceptv, &self.elimination_order())
    }

    /// Mixed visited-state language: words alternate action and agent
    /// letters, starting and ending with an action, recording every state a
    /// path visits. All states accept.
    pub fn visit_regex(&self) -> Regex<MixedLetter> {
        let n = self.states.len();
        let mut init = vec![Regex::Empty; n];
        init[self.initial] = Regex::Letter(MixedLetter::Act(self.states[self.initial].clone()));
        let edges = self.edge_matrix(|agent, to| {
            Regex::Seq(
                Box::new(Regex::Letter(MixedLetter::Step(agent.clone()))),
                Box::new(Regex::Letter(MixedLetter::Act(self.states[to].clone()))),
            )
        });
        let acceptv = vec![Regex::Epsilon; n];
        eliminate_states(n, init, edges, acceptv, &self.elimination_order())
    }

    /// Words of label sequences of paths from the initial state into
    /// `accept`, enumerated directly; the oracle for `label_regex`.
    pub fn label_words_up_to(&self, accept: &BTreeSet<usize>, max_len: usize) -> BTreeSet<Vec<Agent>> {
        let mut out = BTreeSet::new();
        let mut layer: Vec<(usize, Vec<Agent>)> = vec![(self.initial, Vec::new())];
        for _ in 0..=max_len {
            let mut next = Vec::new();
            for (q, word) in &layer {
                if accept.contains(q) {
                    out.insert(word.clone());
                }
                if word.len() == max_len {
                    continue;
                }
                for (from, agent, to) in &self.transitions {
                    if from == q {
                        let mut w = word.clone();
                        w.push(agent.clone());
                        next.push((*to, w));
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            layer = next;
        }
        out
    }
}

/// Letters of the mixed path language: a visited action or an agent step.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum MixedLetter {
    Act(SimpleAction),
    Step(Agent),
}

impl Kleene for PdlProgram {
    fn zero() -> Self {
        PdlProgram::test(PdlSentence::False)
    }
    fn one() -> Self {
        PdlProgram::test(PdlSentence::True)
    }
    fn is_zero(&self) -> bool {
        matches!(self, PdlProgram::Test(s) if **s == PdlSentence::False)
    }
    fn plus(a: Self, b: Self) -> Self {
        if a.is_zero() {
            return b;
        }
        if b.is_zero() {
            return a;
        }
        if a == b {
            return a;
        }
        PdlProgram::Choice(Box::new(a), Box::new(b))
    }
    fn seq(a: Self, b: Self) -> Self {
        if a.is_zero() || b.is_zero() {
            return PdlProgram::zero();
        }
        if matches!(&a, PdlProgram::Test(s) if **s == PdlSentence::True) {
            return b;
        }
        if matches!(&b, PdlProgram::Test(s) if **s == PdlSentence::True) {
            return a;
        }
        PdlProgram::Seq(Box::new(a), Box::new(b))
    }
    fn star(a: Self) -> Self {
        if a.is_zero() || matches!(&a, PdlProgram::Test(s) if **s == PdlSentence::True) {
            return PdlProgram::one();
        }
        if let PdlProgram::Star(_) = a {
            return a;
        }
        PdlProgram::Star(Box::new(a))
    }
}

// ---------------------------------------------------------------------------
// The translation.

/// Translates a star-free sentence into PDL: desugar, rewrite to normal
/// form, then map the normal form homomorphically, turning
/// `K_A` into `[a]`, `C_B` into `[(a1 + ... + ak)*]`, and each boxed
/// common-knowledge sentence into the negated path-program disjunction.
pub fn translate(phi: &Sentence, sig: &Signature, rw: &RewriteConfig) -> Result<PdlSentence, PdlError> {
    if !phi.is_star_free() {
        return Err(PdlError::Star);
    }
    let nf = normalize(phi, sig, rw)?;
    translate_nf(&nf, sig, rw)
}

fn translate_nf(
    phi: &Sentence,
    sig: &Signature,
    rw: &RewriteConfig,
) -> Result<PdlSentence, PdlError> {
    Ok(match phi {
        Sentence::True => PdlSentence::True,
        Sentence::False => PdlSentence::False,
        Sentence::Atom(p) => PdlSentence::Atom(p.clone()),
        Sentence::Not(x) => PdlSentence::not(translate_nf(x, sig, rw)?),
        Sentence::And(a, b) => {
            PdlSentence::and(translate_nf(a, sig, rw)?, translate_nf(b, sig, rw)?)
        }
        Sentence::Box(agent, x) => PdlSentence::boxed(
            PdlProgram::Agent(agent.clone()),
            translate_nf(x, sig, rw)?,
        ),
        Sentence::CBox(group, x) => {
            let union = group
                .iter()
                .map(|a| PdlProgram::Agent(a.clone()))
                .reduce(|a, b| PdlProgram::Choice(Box::new(a), Box::new(b)))
                .expect("agent group is nonempty");
            PdlSentence::boxed(PdlProgram::Star(Box::new(union)), translate_nf(x, sig, rw)?)
        }
        Sentence::DynBox(p, body) => {
            let Sentence::CBox(group, inner) = &**body else {
                return Err(RewriteError::NotRewriteTerm(format!(
                    "{phi} is not a normal form"
                ))
                .into());
            };
            let alpha = SimpleAction::from_program(p)
                .map_err(|e| RewriteError::NotRewriteTerm(e.to_string()))?;
            let automaton = ActionAutomaton::reachable_fragment(sig, &alpha, group)?;
            // Pre' tests for every visited action.
            let mut pre_tests = Vec::with_capacity(automaton.states.len());
            for beta in &automaton.states {
                let pre_nf = normalize(&Sentence::Pre(beta.clone()), sig, rw)?;
                pre_tests.push(PdlProgram::test(translate_nf(&pre_nf, sig, rw)?));
            }
            // For each endpoint: the path program, then the translated
            // endpoint condition <beta>~inner = Pre(beta) & ~[beta]inner.
            let n = automaton.states.len();
            let mut disjuncts = Vec::new();
            for end in 0..n {
                let mut init = vec![PdlProgram::zero(); n];
                init[automaton.initial] = pre_tests[automaton.initial].clone();
                let edges = automaton.edge_matrix(|agent, to| {
                    PdlProgram::Seq(
                        Box::new(PdlProgram::Agent(agent.clone())),
                        Box::new(pre_tests[to].clone()),
                    )
                });
                let mut accept = vec![PdlProgram::zero(); n];
                accept[end] = PdlProgram::one();
                let program = eliminate_states(
                    n,
                    init,
                    edges,
                    accept,
                    &automaton.elimination_order(),
                );
                if program.is_zero() {
                    continue;
                }
                let beta = &automaton.states[end];
                let pre_nf = normalize(&Sentence::Pre(beta.clone()), sig, rw)?;
                let unfold_nf = normalize(
                    &Sentence::dyn_box(beta.to_program(), (**inner).clone()),
                    sig,
                    rw,
                )?;
                let endpoint = PdlSentence::and(
                    translate_nf(&pre_nf, sig, rw)?,
                    PdlSentence::not(translate_nf(&unfold_nf, sig, rw)?),
                );
                disjuncts.push(PdlSentence::diamond(program, endpoint));
            }
            let some_path = disjuncts
                .into_iter()
                .reduce(PdlSentence::or)
                .unwrap_or(PdlSentence::False);
            PdlSentence::not(some_path)
        }
        other => {
            return Err(RewriteError::NotRewriteTerm(format!(
                "{other} is not a normal form"
            ))
            .into())
        }
    })
}

// ---------------------------------------------------------------------------
// Reference PDL semantics.

/// Truth set of a PDL sentence, with agent programs resolved against the
/// model's relations.
pub fn pdl_eval(model: &StateModel, s: &PdlSentence) -> Result<StateSet, PdlError> {
    Ok(match s {
        PdlSentence::True => model.all_states(),
        PdlSentence::False => StateSet::new(),
        PdlSentence::Atom(p) => model.atom_set(p),
        PdlSentence::Not(x) => {
            let inner = pdl_eval(model, x)?;
            model.all_states().difference(&inner).copied().collect()
        }
        PdlSentence::And(a, b) => {
            let sa = pdl_eval(model, a)?;
            let sb = pdl_eval(model, b)?;
            sa.intersection(&sb).copied().collect()
        }
        PdlSentence::Or(a, b) => {
            let sa = pdl_eval(model, a)?;
            let sb = pdl_eval(model, b)?;
            sa.union(&sb).copied().collect()
        }
        PdlSentence::Box(p, x) => {
            let rel = pdl_program_relation(model, p)?;
            let inner = pdl_eval(model, x)?;
            (0..model.state_count())
                .filter(|&s| {
                    rel.iter()
                        .filter(|(a, _)| *a == s)
                        .all(|(_, b)| inner.contains(b))
                })
                .collect()
        }
        PdlSentence::Diamond(p, x) => {
            let rel = pdl_program_relation(model, p)?;
            let inner = pdl_eval(model, x)?;
            rel.iter()
                .filter(|(_, b)| inner.contains(b))
                .map(|&(a, _)| a)
                .collect()
        }
    })
}

/// The binary relation a PDL program denotes on a model.
pub fn pdl_program_relation(
    model: &StateModel,
    p: &PdlProgram,
) -> Result<BTreeSet<(usize, usize)>, PdlError> {
    Ok(match p {
        PdlProgram::Agent(a) => {
            if !model.agents().contains(a) {
                return Err(PdlError::UnknownAgent(a.clone()));
            }
            model.edges(a).collect()
        }
        PdlProgram::Test(s) => {
            let set = pdl_eval(model, s)?;
            set.iter().map(|&i| (i, i)).collect()
        }
        PdlProgram::Seq(a, b) => {
            let ra = pdl_program_relation(model, a)?;
            let rb = pdl_program_relation(model, b)?;
            let mut out = BTreeSet::new();
            for &(x, y) in &ra {
                for &(y2, z) in &rb {
                    if y == y2 {
                        out.insert((x, z));
                    }
                }
            }
            out
        }
        PdlProgram::Choice(a, b) => {
            let mut out = pdl_program_relation(model, a)?;
            out.extend(pdl_program_relation(model, b)?);
            out
        }
        PdlProgram::Star(a) => {
            let step = pdl_program_relation(model, a)?;
            let mut out: BTreeSet<(usize, usize)> =
                (0..model.state_count()).map(|i| (i, i)).collect();
            loop {
                let mut grew = false;
                let additions: Vec<(usize, usize)> = out
                    .iter()
                    .flat_map(|&(x, y)| {
                        step.iter()
                            .filter(move |(a2, _)| *a2 == y)
                            .map(move |&(_, z)| (x, z))
                    })
                    .collect();
                for pair in additions {
                    grew |= out.insert(pair);
                }
                if !grew {
                    break;
                }
            }
            out
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{
        gen_cn, pri_signature, pub_signature, random_model, random_sentence, Lang, ModelCfg,
        SentenceCfg,
    };
    use crate::semantics::eval_sentence;
    use crate::syntax::parse_sentence;
    use rand::{Rng, SeedableRng};

    #[test]
    fn boxes_translate_to_atomic_programs() {
        let sig = pub_signature(&["A", "B"]);
        let s = parse_sentence("K_A p", &sig).unwrap();
        let t = translate(&s, &sig, &RewriteConfig::default()).unwrap();
        assert_eq!(
            t,
            PdlSentence::boxed(PdlProgram::Agent("A".into()), PdlSentence::Atom("p".into()))
        );
    }

    #[test]
    fn common_knowledge_translates_to_a_star() {
        let sig = pub_signature(&["A", "B"]);
        let s = parse_sentence("C_{A,B} p", &sig).unwrap();
        let t = translate(&s, &sig, &RewriteConfig::default()).unwrap();
        let union = PdlProgram::Choice(
            Box::new(PdlProgram::Agent("A".into())),
            Box::new(PdlProgram::Agent("B".into())),
        );
        assert_eq!(
            t,
            PdlSentence::boxed(
                PdlProgram::Star(Box::new(union)),
                PdlSentence::Atom("p".into())
            )
        );
    }

    /// The two-action frame: alpha loops on A, moves to beta on B, and
    /// beta returns on A.
    fn two_action_sig() -> Signature {
        Signature::new(
            "two",
            vec!["A".into(), "B".into()],
            vec!["t0".into(), "t1".into()],
            [
                (
                    "A".to_string(),
                    vec![("t0".into(), "t0".into()), ("t1".into(), "t0".into())],
                ),
                ("B".to_string(), vec![("t0".into(), "t1".into())]),
            ]
            .into_iter()
            .collect(),
        )
        .unwrap()
    }

    #[test]
    fn two_action_path_language_matches_the_documented_expression() {
        let sig = two_action_sig();
        let args = vec![Sentence::atom("p"), Sentence::atom("q")];
        let alpha = SimpleAction::basic("t0", args.clone());
        let beta = SimpleAction::basic("t1", args);
        let group: std::collections::BTreeSet<Agent> =
            ["A", "B"].iter().map(|s| s.to_string()).collect();
        let automaton = ActionAutomaton::reachable_fragment(&sig, &alpha, &group).unwrap();
        assert_eq!(automaton.states.len(), 2);
        let got = automaton.visit_regex();

        // alpha (A alpha | B beta A alpha)* (eps | B beta)
        let a = || Regex::Letter(MixedLetter::Act(alpha.clone()));
        let b = || Regex::Letter(MixedLetter::Act(beta.clone()));
        let step = |ag: &str| Regex::Letter(MixedLetter::Step(ag.to_string()));
        let seq = |xs: Vec<Regex<MixedLetter>>| {
            xs.into_iter().reduce(|x, y| Regex::Seq(Box::new(x), Box::new(y))).unwrap()
        };
        let loop_a = seq(vec![step("A"), a()]);
        let excursion = seq(vec![step("B"), b(), step("A"), a()]);
        let expected = seq(vec![
            a(),
            Regex::Star(Box::new(Regex::Alt(Box::new(loop_a), Box::new(excursion)))),
            Regex::Alt(
                Box::new(Regex::Epsilon),
                Box::new(seq(vec![step("B"), b()])),
            ),
        ]);
        assert!(regex_language_equal(&got, &expected));
    }

    #[test]
    fn two_action_translation_is_semantically_faithful() {
        let sig = two_action_sig();
        let s = parse_sentence("[t0(p, q)] C_{A,B} r", &sig).unwrap();
        let t = translate(&s, &sig, &RewriteConfig::default()).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(97);
        let cfg = ModelCfg {
            max_states: 5,
            atoms: vec!["p".into(), "q".into(), "r".into()],
            ..ModelCfg::default()
        };
        for _ in 0..60 {
            let model = random_model(&mut rng, &sig, &cfg);
            let direct = eval_sentence(&model, &s, &sig, 0).unwrap().set;
            let via_pdl = pdl_eval(&model, &t).unwrap();
            assert_eq!(direct, via_pdl);
        }
    }

    #[test]
    fn translation_agrees_with_direct_evaluation() {
        let sigs = [pub_signature(&["A", "B"]), pri_signature(&["A"], &["A", "B"])];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(101);
        let mcfg = ModelCfg { max_states: 6, ..ModelCfg::default() };
        let scfg = SentenceCfg { depth: 2, lang: Lang::L1, ..SentenceCfg::default() };
        let rw = RewriteConfig::default();
        for sig in &sigs {
            let mut done = 0;
            while done < 30 {
                let s = random_sentence(&mut rng, sig, &scfg);
                let t = match translate(&s, sig, &rw) {
                    Ok(t) => t,
                    Err(PdlError::Rewrite(RewriteError::ClosureTooLarge { .. })) => continue,
                    Err(e) => panic!("{e}"),
                };
                done += 1;
                let model = random_model(&mut rng, sig, &mcfg);
                let direct = eval_sentence(&model, &s, sig, 0).unwrap().set;
                let via_pdl = pdl_eval(&model, &t).unwrap();
                assert_eq!(direct, via_pdl, "{s}");
            }
        }
    }

    #[test]
    fn self_loop_regex_denotes_all_repetitions() {
        let sig = pub_signature(&["A", "B"]);
        let alpha = SimpleAction::basic("Pub", vec![Sentence::atom("p")]);
        let group: std::collections::BTreeSet<Agent> =
            std::iter::once("A".to_string()).collect();
        let automaton = ActionAutomaton::reachable_fragment(&sig, &alpha, &group).unwrap();
        assert_eq!(automaton.states.len(), 1);
        let accept: std::collections::BTreeSet<usize> = std::iter::once(0).collect();
        let regex = automaton.label_regex(&accept);
        let words = regex.words_up_to(6);
        let expect: std::collections::BTreeSet<Vec<Agent>> =
            (0..=6).map(|k| vec!["A".to_string(); k]).collect();
        assert_eq!(words, expect);
    }

    #[test]
    fn empty_acceptance_gives_the_empty_language() {
        let sig = pri_signature(&["A"], &["A", "B"]);
        let pri = SimpleAction::basic("Pri", vec![Sentence::atom("p"), Sentence::True]);
        let group: std::collections::BTreeSet<Agent> =
            std::iter::once("A".to_string()).collect();
        // Restricted to A, skp is unreachable from Pri.
        let automaton = ActionAutomaton::reachable_fragment(&sig, &pri, &group).unwrap();
        assert_eq!(automaton.states.len(), 1);
        let regex = automaton.label_regex(&std::collections::BTreeSet::new());
        assert!(regex.words_up_to(4).is_empty());
    }

    #[test]
    fn random_automata_regexes_match_path_enumeration() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(103);
        let agents = ["A".to_string(), "B".to_string()];
        for _ in 0..100 {
            let n = 3;
            let mut transitions = std::collections::BTreeSet::new();
            for from in 0..n {
                for to in 0..n {
                    for agent in &agents {
                        if rng.gen_bool(0.3) {
                            transitions.insert((from, agent.clone(), to));
                        }
                    }
                }
            }
            let automaton = ActionAutomaton {
                states: (0..n)
                    .map(|i| SimpleAction::basic(format!("t{i}"), vec![Sentence::True]))
                    .collect(),
                agents: agents.iter().cloned().collect(),
                transitions: transitions.clone(),
                initial: 0,
            };
            let accept: std::collections::BTreeSet<usize> =
                (0..n).filter(|_| rng.gen_bool(0.5)).collect();
            let regex = automaton.label_regex(&accept);
            assert_eq!(
                regex.words_up_to(6),
                automaton.label_words_up_to(&accept, 6)
            );
        }
    }

    #[test]
    fn pdl_eval_matches_the_box_clause() {
        let sig = pub_signature(&["A", "B"]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(107);
        for _ in 0..30 {
            let model = random_model(&mut rng, &sig, &ModelCfg::default());
            let s = parse_sentence("K_A p", &sig).unwrap();
            let direct = eval_sentence(&model, &s, &sig, 0).unwrap().set;
            let pdl = PdlSentence::boxed(
                PdlProgram::Agent("A".into()),
                PdlSentence::Atom("p".into()),
            );
            assert_eq!(direct, pdl_eval(&model, &pdl).unwrap());
        }
    }

    #[test]
    fn reachability_diamond_on_the_cycle() {
        let model = gen_cn(2).unwrap();
        let union = PdlProgram::Choice(
            Box::new(PdlProgram::Agent("A".into())),
            Box::new(PdlProgram::Agent("B".into())),
        );
        let diamond = PdlSentence::diamond(
            PdlProgram::Star(Box::new(union)),
            PdlSentence::Atom("q".into()),
        );
        let got = pdl_eval(&model, &diamond).unwrap();
        // BFS oracle: states with a path to a_9 (where q holds).
        let target = model.state_index("a_9").unwrap();
        let mut reach: StateSet = std::iter::once(target).collect();
        loop {
            let mut grew = false;
            for s in 0..model.state_count() {
                if reach.contains(&s) {
                    continue;
                }
                for agent in ["A", "B"] {
                    if model.successors(agent, s).iter().any(|t| reach.contains(t)) {
                        reach.insert(s);
                        grew = true;
                    }
                }
            }
            if !grew {
                break;
            }
        }
        assert_eq!(got, reach);
    }

    #[test]
    fn test_sequencing_is_conjunction() {
        let sig = pub_signature(&["A", "B"]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(109);
        let model = random_model(&mut rng, &sig, &ModelCfg::default());
        let prog = PdlProgram::Seq(
            Box::new(PdlProgram::test(PdlSentence::Atom("p".into()))),
            Box::new(PdlProgram::test(PdlSentence::Atom("q".into()))),
        );
        let rel = pdl_program_relation(&model, &prog).unwrap();
        let both: StateSet = model
            .atom_set("p")
            .intersection(&model.atom_set("q"))
            .copied()
            .collect();
        let expect: std::collections::BTreeSet<(usize, usize)> =
            both.iter().map(|&i| (i, i)).collect();
        assert_eq!(rel, expect);
    }

    #[test]
    fn unknown_agent_programs_error() {
        let sig = pub_signature(&["A"]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(113);
        let model = random_model(&mut rng, &sig, &ModelCfg::default());
        let s = PdlSentence::boxed(PdlProgram::Agent("Z".into()), PdlSentence::True);
        assert_eq!(
            pdl_eval(&model, &s).unwrap_err(),
            PdlError::UnknownAgent("Z".into())
        );
    }
}

#[cfg(test)]
mod star_tests {
    use super::*;
    use crate::corpus::pub_signature;
    use crate::syntax::parse_sentence;

    #[test]
    fn iteration_is_out_of_scope() {
        let sig = pub_signature(&["A", "B"]);
        let s = parse_sentence("[Pub(p)*]q", &sig).unwrap();
        assert_eq!(
            translate(&s, &sig, &RewriteConfig::default()).unwrap_err(),
            PdlError::Star
        );
    }
}
