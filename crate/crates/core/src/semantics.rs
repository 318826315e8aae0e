//! Exact model checking for sentences and programs over finite state
//! models.
//!
//! Star-free sentences evaluate exactly. `[pi*]psi` is unfolded as the
//! intersection of `[pi^k]psi` for `k` up to a fuel bound; after each step
//! the iterated update is minimized and compared (up to isomorphism over
//! the anchored quotient) against its predecessors, and the loop stops
//! early when the sequence provably cycles. If fuel runs out first the
//! result is flagged as inexact rather than silently returned.

use std::collections::{BTreeMap, BTreeSet};

use crate::bisim::quotient;
use crate::canon::{pre_of, CanonError, OmegaOracle};
use crate::kripke::{
    signature_program, update_product, ModelError, Precondition, StateModel, StateSet,
    UpdateResult,
};
use crate::syntax::{Agent, Program, Sentence, Signature, SimpleAction};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("common-knowledge operator with an empty agent set")]
    EmptyAgentSet,
    #[error("program iteration is only supported inside sentence evaluation")]
    StarProgram,
    #[error(transparent)]
    Canon(#[from] CanonError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("unknown state id {0:?}")]
    UnknownState(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalOutcome {
    pub set: StateSet,
    /// False when some star was cut off by fuel without detected
    /// convergence; the set is then only the bounded approximation.
    pub exact: bool,
}

pub const DEFAULT_STAR_FUEL: usize = 32;

/// Truth set of `sentence` in `model`.
pub fn eval_sentence(
    model: &StateModel,
    sentence: &Sentence,
    sig: &Signature,
    star_fuel: usize,
) -> Result<EvalOutcome, EvalError> {
    let ev = Evaluator { sig, star_fuel };
    let mut exact = true;
    let set = ev.set(model, sentence, &mut exact)?;
    Ok(EvalOutcome { set, exact })
}

/// Truth set of a star-free sentence; panics if a star sneaks in (use
/// [`eval_sentence`] for those).
pub fn eval_set(
    model: &StateModel,
    sentence: &Sentence,
    sig: &Signature,
) -> Result<StateSet, EvalError> {
    let out = eval_sentence(model, sentence, sig, DEFAULT_STAR_FUEL)?;
    debug_assert!(out.exact);
    Ok(out.set)
}

/// Truth at a named state.
pub fn check_at(
    model: &StateModel,
    state: &str,
    sentence: &Sentence,
    sig: &Signature,
    star_fuel: usize,
) -> Result<(bool, bool), EvalError> {
    let i = model
        .state_index(state)
        .ok_or_else(|| EvalError::UnknownState(state.to_string()))?;
    let out = eval_sentence(model, sentence, sig, star_fuel)?;
    Ok((out.set.contains(&i), out.exact))
}

/// The update denoted by a star-free program.
pub fn eval_program(
    model: &StateModel,
    program: &Program,
    sig: &Signature,
) -> Result<UpdateResult, EvalError> {
    let ev = Evaluator {
        sig,
        star_fuel: DEFAULT_STAR_FUEL,
    };
    let mut exact = true;
    ev.update(model, program, &mut exact)
}

/// Evaluates a (possibly structured) program-model precondition.
pub fn eval_precondition(
    model: &StateModel,
    pre: &Precondition,
    sig: &Signature,
    star_fuel: usize,
) -> Result<EvalOutcome, EvalError> {
    let ev = Evaluator { sig, star_fuel };
    let mut exact = true;
    let set = ev.pre_set(model, pre, &mut exact)?;
    Ok(EvalOutcome { set, exact })
}

struct Evaluator<'a> {
    sig: &'a Signature,
    star_fuel: usize,
}

impl<'a> Evaluator<'a> {
    fn set(
        &self,
        model: &StateModel,
        s: &Sentence,
        exact: &mut bool,
    ) -> Result<StateSet, EvalError> {
        Ok(match s {
            Sentence::True => model.all_states(),
            Sentence::False => StateSet::new(),
            Sentence::Atom(p) => model.atom_set(p),
            Sentence::Not(x) => {
                let inner = self.set(model, x, exact)?;
                model.all_states().difference(&inner).copied().collect()
            }
            Sentence::And(a, b) => {
                let sa = self.set(model, a, exact)?;
                let sb = self.set(model, b, exact)?;
                sa.intersection(&sb).copied().collect()
            }
            Sentence::Or(a, b) => {
                let sa = self.set(model, a, exact)?;
                let sb = self.set(model, b, exact)?;
                sa.union(&sb).copied().collect()
            }
            Sentence::Implies(a, b) => {
                let sa = self.set(model, a, exact)?;
                let sb = self.set(model, b, exact)?;
                (0..model.state_count())
                    .filter(|i| !sa.contains(i) || sb.contains(i))
                    .collect()
            }
            Sentence::Box(agent, x) => {
                let inner = self.set(model, x, exact)?;
                (0..model.state_count())
                    .filter(|&i| {
                        model
                            .successors(agent, i)
                            .iter()
                            .all(|t| inner.contains(t))
                    })
                    .collect()
            }
            Sentence::Diamond(agent, x) => {
                let inner = self.set(model, x, exact)?;
                (0..model.state_count())
                    .filter(|&i| {
                        model
                            .successors(agent, i)
                            .iter()
                            .any(|t| inner.contains(t))
                    })
                    .collect()
            }
            Sentence::CBox(group, x) => {
                if group.is_empty() {
                    return Err(EvalError::EmptyAgentSet);
                }
                let inner = self.set(model, x, exact)?;
                let bad: StateSet = model.all_states().difference(&inner).copied().collect();
                let can_reach_bad = backward_closure(model, group, &bad);
                model
                    .all_states()
                    .difference(&can_reach_bad)
                    .copied()
                    .collect()
            }
            Sentence::CDiamond(group, x) => {
                if group.is_empty() {
                    return Err(EvalError::EmptyAgentSet);
                }
                let inner = self.set(model, x, exact)?;
                backward_closure(model, group, &inner)
            }
            Sentence::DynBox(p, x) => self.dyn_box(model, p, x, exact)?,
            Sentence::DynDiamond(p, x) => self.dyn_diamond(model, p, x, exact)?,
            Sentence::Pre(action) => {
                let pre = pre_of(self.sig, action)?;
                self.set(model, &pre, exact)?
            }
        })
    }

    fn dyn_box(
        &self,
        model: &StateModel,
        p: &Program,
        body: &Sentence,
        exact: &mut bool,
    ) -> Result<StateSet, EvalError> {
        if p.is_star_free() {
            let u = self.update(model, p, exact)?;
            let inner = self.set(&u.target, body, exact)?;
            return Ok(u.pull_back_all(&inner, model.state_count()));
        }
        match p {
            Program::Star(inner) => self.star_box(model, inner, body, exact),
            Program::Seq(a, b) => {
                let pushed = Sentence::dyn_box((**b).clone(), body.clone());
                self.dyn_box(model, a, &pushed, exact)
            }
            Program::Union(a, b) => {
                let sa = self.dyn_box(model, a, body, exact)?;
                let sb = self.dyn_box(model, b, body, exact)?;
                Ok(sa.intersection(&sb).copied().collect())
            }
            // A star hides inside a basic action's arguments; those are
            // evaluated as preconditions, which the update path handles.
            Program::Basic(_, _) | Program::Skip | Program::Crash => {
                let u = self.update(model, p, exact)?;
                let inner = self.set(&u.target, body, exact)?;
                Ok(u.pull_back_all(&inner, model.state_count()))
            }
        }
    }

    fn dyn_diamond(
        &self,
        model: &StateModel,
        p: &Program,
        body: &Sentence,
        exact: &mut bool,
    ) -> Result<StateSet, EvalError> {
        if p.is_star_free() {
            let u = self.update(model, p, exact)?;
            let inner = self.set(&u.target, body, exact)?;
            return Ok(u.pull_back_some(&inner));
        }
        match p {
            Program::Star(inner) => {
                let boxed = self.star_box(model, inner, &Sentence::not(body.clone()), exact)?;
                Ok(model.all_states().difference(&boxed).copied().collect())
            }
            Program::Seq(a, b) => {
                let pushed = Sentence::dyn_diamond((**b).clone(), body.clone());
                self.dyn_diamond(model, a, &pushed, exact)
            }
            Program::Union(a, b) => {
                let sa = self.dyn_diamond(model, a, body, exact)?;
                let sb = self.dyn_diamond(model, b, body, exact)?;
                Ok(sa.union(&sb).copied().collect())
            }
            Program::Basic(_, _) | Program::Skip | Program::Crash => {
                let u = self.update(model, p, exact)?;
                let inner = self.set(&u.target, body, exact)?;
                Ok(u.pull_back_some(&inner))
            }
        }
    }

    /// `[pi*]body` by bounded unfolding with cycle detection on the
    /// bisimulation-minimized iterated updates.
    fn star_box(
        &self,
        model: &StateModel,
        pi: &Program,
        body: &Sentence,
        exact: &mut bool,
    ) -> Result<StateSet, EvalError> {
        let mut acc = model.all_states();
        let mut u = UpdateResult::identity(model);
        let mut seen: Vec<UpdateSignature> = Vec::new();
        for _ in 0..=self.star_fuel {
            let inner = self.set(&u.target, body, exact)?;
            let boxed = u.pull_back_all(&inner, model.state_count());
            acc = acc.intersection(&boxed).copied().collect();
            let sig = UpdateSignature::of(&u);
            if seen.iter().any(|old| old.isomorphic(&sig)) {
                return Ok(acc);
            }
            seen.push(sig);
            let step = self.update(&u.target, pi, exact)?;
            u = u.then(&step);
        }
        *exact = false;
        Ok(acc)
    }

    fn update(
        &self,
        model: &StateModel,
        p: &Program,
        exact: &mut bool,
    ) -> Result<UpdateResult, EvalError> {
        Ok(match p {
            Program::Skip => UpdateResult::identity(model),
            Program::Crash => UpdateResult::crash(model.agents()),
            Program::Basic(name, args) => {
                let index = self
                    .sig
                    .type_index(name)
                    .ok_or_else(|| CanonError::UnknownType(name.clone()))?;
                let pm = signature_program(self.sig, index, args)?;
                update_product(model, &pm, &mut |m, pre| self.pre_set(m, pre, exact))?
            }
            Program::Seq(a, b) => {
                let first = self.update(model, a, exact)?;
                let second = self.update(&first.target, b, exact)?;
                first.then(&second)
            }
            Program::Union(a, b) => {
                let ua = self.update(model, a, exact)?;
                let ub = self.update(model, b, exact)?;
                let (target, maps) = crate::kripke::disjoint_union(&[&ua.target, &ub.target]);
                let mut relation = BTreeSet::new();
                let mut pairing = BTreeMap::new();
                for (tag, part) in [&ua, &ub].into_iter().enumerate() {
                    for &(s, t) in &part.relation {
                        relation.insert((s, maps[tag][t]));
                    }
                    for (&t, (s, a)) in &part.pairing {
                        pairing.insert(maps[tag][t], (*s, format!("({a},{tag})")));
                    }
                }
                let result = UpdateResult {
                    target,
                    relation,
                    pairing,
                };
                debug_assert!(result.is_standard());
                result
            }
            Program::Star(_) => return Err(EvalError::StarProgram),
        })
    }

    fn pre_set(
        &self,
        model: &StateModel,
        pre: &Precondition,
        exact: &mut bool,
    ) -> Result<StateSet, EvalError> {
        match pre {
            Precondition::Formula(s) => self.set(model, s, exact),
            Precondition::Diamond(pair, inner) => {
                let (pm, action) = &**pair;
                let designated = pm.with_designated(std::iter::once(*action).collect());
                let u = update_product(model, &designated, &mut |m, pre| {
                    self.pre_set(m, pre, exact)
                })?;
                let inner_set = self.pre_set(&u.target, inner, exact)?;
                Ok(u.pull_back_some(&inner_set))
            }
        }
    }
}

/// States with a path (possibly empty) along `group` arrows into `targets`.
fn backward_closure(model: &StateModel, group: &BTreeSet<Agent>, targets: &StateSet) -> StateSet {
    let mut seen = targets.clone();
    let mut frontier: Vec<usize> = targets.iter().copied().collect();
    while let Some(t) = frontier.pop() {
        for agent in group {
            for s in 0..model.state_count() {
                if !seen.contains(&s) && model.successors(agent, s).contains(&t) {
                    seen.insert(s);
                    frontier.push(s);
                }
            }
        }
    }
    seen
}

/// Isomorphism-comparable form of an iterated update: the target is
/// restricted to states reachable from the image of the update relation,
/// minimized by bisimilarity, and each surviving class is anchored by the
/// set of source states mapping into it.
struct UpdateSignature {
    model: StateModel,
    anchors: Vec<BTreeSet<usize>>,
}

impl UpdateSignature {
    fn of(u: &UpdateResult) -> UpdateSignature {
        let image: StateSet = u.relation.iter().map(|&(_, t)| t).collect();
        let (restricted, index_map) = u.target.reachable_restriction(&image);
        let (quotiented, projection) = quotient(&restricted);
        let mut anchors = vec![BTreeSet::new(); quotiented.state_count()];
        for &(s, t) in &u.relation {
            let class = projection[index_map[&t]];
            anchors[class].insert(s);
        }
        UpdateSignature {
            model: quotiented,
            anchors,
        }
    }

    fn isomorphic(&self, other: &UpdateSignature) -> bool {
        let n = self.model.state_count();
        if n != other.model.state_count() {
            return false;
        }
        if self.anchor_multiset() != other.anchor_multiset() {
            return false;
        }
        // Backtracking search with per-state candidate pruning.
        let mut candidates: Vec<Vec<usize>> = Vec::with_capacity(n);
        for i in 0..n {
            let mut cs = Vec::new();
            for j in 0..other.model.state_count() {
                if self.anchors[i] == other.anchors[j]
                    && self.model.atom_profile(i) == other.model.atom_profile(j)
                    && self.degree_profile(i) == other.degree_profile_of(&other.model, j)
                {
                    cs.push(j);
                }
            }
            if cs.is_empty() {
                return false;
            }
            candidates.push(cs);
        }
        let mut assignment: Vec<Option<usize>> = vec![None; n];
        let mut used = vec![false; n];
        self.extend(other, 0, &mut assignment, &mut used, &candidates)
    }

    fn anchor_multiset(&self) -> BTreeMap<&BTreeSet<usize>, usize> {
        let mut out = BTreeMap::new();
        for a in &self.anchors {
            *out.entry(a).or_insert(0) += 1;
        }
        out
    }

    fn degree_profile(&self, i: usize) -> BTreeMap<(Agent, bool), usize> {
        self.degree_profile_of(&self.model, i)
    }

    fn degree_profile_of(
        &self,
        model: &StateModel,
        i: usize,
    ) -> BTreeMap<(Agent, bool), usize> {
        let mut out = BTreeMap::new();
        for agent in model.agents() {
            let outdeg = model.successors(agent, i).len();
            let indeg = (0..model.state_count())
                .filter(|&s| model.successors(agent, s).contains(&i))
                .count();
            out.insert((agent.clone(), true), outdeg);
            out.insert((agent.clone(), false), indeg);
        }
        out
    }

    fn extend(
        &self,
        other: &UpdateSignature,
        i: usize,
        assignment: &mut Vec<Option<usize>>,
        used: &mut Vec<bool>,
        candidates: &Vec<Vec<usize>>,
    ) -> bool {
        let n = self.model.state_count();
        if i == n {
            return true;
        }
        'next: for &j in &candidates[i] {
            if used[j] {
                continue;
            }
            // Edge consistency against already-assigned states.
            for agent in self.model.agents() {
                for k in 0..i {
                    let km = assignment[k].unwrap();
                    if self.model.has_edge(agent, i, k) != other.model.has_edge(agent, j, km)
                        || self.model.has_edge(agent, k, i) != other.model.has_edge(agent, km, j)
                    {
                        continue 'next;
                    }
                }
                if self.model.has_edge(agent, i, i) != other.model.has_edge(agent, j, j) {
                    continue 'next;
                }
            }
            assignment[i] = Some(j);
            used[j] = true;
            if self.extend(other, i + 1, assignment, used, candidates) {
                return true;
            }
            assignment[i] = None;
            used[j] = false;
        }
        false
    }
}

/// A witness for `<alpha> E_C phi` at a state: matched state and action
/// sequences with agent labels from `C`, every intermediate state
/// satisfying the corresponding action's precondition, and the final state
/// satisfying `<alpha_k> phi`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessPath {
    pub states: Vec<usize>,
    pub actions: Vec<SimpleAction>,
    pub agents: Vec<Agent>,
}

/// Searches for a witness path realizing `<alpha> E_C phi` at `state`. The
/// search runs over pairs of model states and actions reachable from
/// `alpha`; a witness exists iff the sentence holds at `state`.
pub fn diamond_star_paths(
    model: &StateModel,
    state: usize,
    alpha: &SimpleAction,
    group: &BTreeSet<Agent>,
    phi: &Sentence,
    sig: &Signature,
) -> Result<Option<WitnessPath>, EvalError> {
    if group.is_empty() {
        return Err(EvalError::EmptyAgentSet);
    }
    let oracle = OmegaOracle::new(sig);
    let actions: Vec<SimpleAction> = oracle.reachable(alpha, group)?.into_iter().collect();
    let index: BTreeMap<SimpleAction, usize> = actions
        .iter()
        .enumerate()
        .map(|(i, a)| (a.clone(), i))
        .collect();

    let mut pre_sets = Vec::with_capacity(actions.len());
    let mut witness_sets = Vec::with_capacity(actions.len());
    for a in &actions {
        let pre = eval_sentence(model, &pre_of(sig, a)?, sig, DEFAULT_STAR_FUEL)?;
        pre_sets.push(pre.set);
        let diamond = Sentence::dyn_diamond(a.to_program(), phi.clone());
        witness_sets.push(eval_sentence(model, &diamond, sig, DEFAULT_STAR_FUEL)?.set);
    }

    let start = (state, index[alpha]);
    let mut parent: BTreeMap<(usize, usize), ((usize, usize), Agent)> = BTreeMap::new();
    let mut queue = std::collections::VecDeque::new();
    let mut visited = BTreeSet::new();
    visited.insert(start);
    queue.push_back(start);
    while let Some((s, a)) = queue.pop_front() {
        if witness_sets[a].contains(&s) {
            // Reconstruct the path back to the start.
            let mut states = vec![s];
            let mut acts = vec![actions[a].clone()];
            let mut agents = Vec::new();
            let mut cur = (s, a);
            while let Some((prev, agent)) = parent.get(&cur) {
                states.push(prev.0);
                acts.push(actions[prev.1].clone());
                agents.push(agent.clone());
                cur = *prev;
            }
            states.reverse();
            acts.reverse();
            agents.reverse();
            return Ok(Some(WitnessPath {
                states,
                actions: acts,
                agents,
            }));
        }
        if !pre_sets[a].contains(&s) {
            continue;
        }
        for agent in group {
            for &t in &model.successors(agent, s) {
                for b in oracle.successors(&actions[a], agent)? {
                    let next = (t, index[&b]);
                    if visited.insert(next) {
                        parent.insert(next, ((s, a), agent.clone()));
                        queue.push_back(next);
                    }
                }
            }
        }
    }
    Ok(None)
}
