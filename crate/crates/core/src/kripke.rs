//! Finite state models, program models, and the update product.
//!
//! Preconditions inside a program model are evaluated through a
//! caller-supplied evaluator so that this module does not depend on the
//! sentence semantics. Composite program models produced by
//! [`compose_program_models`] carry structured preconditions
//! ([`Precondition::Diamond`]) that the evaluator interprets by running the
//! left factor first.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::syntax::{Agent, Sentence, Signature};

pub type StateSet = BTreeSet<usize>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("duplicate state id {0:?}")]
    DuplicateState(String),
    #[error("unknown state id {0:?}")]
    UnknownState(String),
    #[error("unknown agent {0:?}")]
    UnknownAgent(String),
    #[error("unknown action id {0:?}")]
    UnknownAction(String),
    #[error("precondition map must cover every action; missing {0:?}")]
    MissingPre(String),
    #[error("arity mismatch: expected {expected} argument(s), got {got}")]
    Arity { expected: usize, got: usize },
    #[error("model JSON: {0}")]
    Json(String),
    #[error("program model has a structured precondition; cannot serialize")]
    StructuredPre,
}

/// A finite multi-agent Kripke model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateModel {
    states: Vec<String>,
    index: BTreeMap<String, usize>,
    agents: BTreeSet<Agent>,
    rel: BTreeMap<Agent, BTreeSet<(usize, usize)>>,
    val: BTreeMap<String, StateSet>,
}

impl StateModel {
    pub fn new<I, S>(states: I, agents: &BTreeSet<Agent>) -> Result<StateModel, ModelError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut list = Vec::new();
        let mut index = BTreeMap::new();
        for s in states {
            let s = s.into();
            if index.insert(s.clone(), list.len()).is_some() {
                return Err(ModelError::DuplicateState(s));
            }
            list.push(s);
        }
        Ok(StateModel {
            states: list,
            index,
            agents: agents.clone(),
            rel: BTreeMap::new(),
            val: BTreeMap::new(),
        })
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn state_name(&self, i: usize) -> &str {
        &self.states[i]
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn agents(&self) -> &BTreeSet<Agent> {
        &self.agents
    }

    pub fn atoms(&self) -> impl Iterator<Item = &str> {
        self.val.keys().map(|s| s.as_str())
    }

    pub fn add_edge(&mut self, agent: &str, from: usize, to: usize) -> Result<(), ModelError> {
        if !self.agents.contains(agent) {
            return Err(ModelError::UnknownAgent(agent.to_string()));
        }
        assert!(from < self.states.len() && to < self.states.len());
        self.rel.entry(agent.to_string()).or_default().insert((from, to));
        Ok(())
    }

    pub fn add_edge_by_name(&mut self, agent: &str, from: &str, to: &str) -> Result<(), ModelError> {
        let f = self
            .state_index(from)
            .ok_or_else(|| ModelError::UnknownState(from.to_string()))?;
        let t = self
            .state_index(to)
            .ok_or_else(|| ModelError::UnknownState(to.to_string()))?;
        self.add_edge(agent, f, t)
    }

    /// Adds both directions.
    pub fn add_symmetric_edge(&mut self, agent: &str, a: usize, b: usize) -> Result<(), ModelError> {
        self.add_edge(agent, a, b)?;
        self.add_edge(agent, b, a)
    }

    pub fn set_atom(&mut self, atom: &str, state: usize) {
        assert!(state < self.states.len());
        self.val.entry(atom.to_string()).or_default().insert(state);
    }

    pub fn set_atom_by_name(&mut self, atom: &str, state: &str) -> Result<(), ModelError> {
        let i = self
            .state_index(state)
            .ok_or_else(|| ModelError::UnknownState(state.to_string()))?;
        self.set_atom(atom, i);
        Ok(())
    }

    pub fn has_edge(&self, agent: &str, from: usize, to: usize) -> bool {
        self.rel.get(agent).map_or(false, |s| s.contains(&(from, to)))
    }

    pub fn successors(&self, agent: &str, from: usize) -> Vec<usize> {
        match self.rel.get(agent) {
            Some(set) => set
                .range((from, 0)..=(from, usize::MAX))
                .map(|(_, t)| *t)
                .collect(),
            None => Vec::new(),
        }
    }

    pub fn edges(&self, agent: &str) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rel.get(agent).into_iter().flatten().copied()
    }

    pub fn atom_set(&self, atom: &str) -> StateSet {
        self.val.get(atom).cloned().unwrap_or_default()
    }

    pub fn holds(&self, atom: &str, state: usize) -> bool {
        self.val.get(atom).map_or(false, |s| s.contains(&state))
    }

    pub fn all_states(&self) -> StateSet {
        (0..self.states.len()).collect()
    }

    /// Atoms true at a state, as a set of names.
    pub fn atom_profile(&self, state: usize) -> BTreeSet<&str> {
        self.val
            .iter()
            .filter(|(_, set)| set.contains(&state))
            .map(|(a, _)| a.as_str())
            .collect()
    }

    /// The submodel of states reachable from `seeds` by any agent's arrows
    /// (including the seeds), together with the old-to-new index map.
    pub fn reachable_restriction(&self, seeds: &StateSet) -> (StateModel, BTreeMap<usize, usize>) {
        let mut seen: BTreeSet<usize> = seeds.clone();
        let mut frontier: Vec<usize> = seeds.iter().copied().collect();
        while let Some(s) = frontier.pop() {
            for agent in self.agents.clone() {
                for t in self.successors(&agent, s) {
                    if seen.insert(t) {
                        frontier.push(t);
                    }
                }
            }
        }
        let kept: Vec<usize> = seen.iter().copied().collect();
        let mut map = BTreeMap::new();
        let mut out = StateModel::new(
            kept.iter().map(|&i| self.states[i].clone()),
            &self.agents,
        )
        .expect("restriction keeps ids unique");
        for (new, &old) in kept.iter().enumerate() {
            map.insert(old, new);
        }
        for (agent, set) in &self.rel {
            for &(a, b) in set {
                if let (Some(&na), Some(&nb)) = (map.get(&a), map.get(&b)) {
                    out.add_edge(agent, na, nb).unwrap();
                }
            }
        }
        for (atom, set) in &self.val {
            for &s in set {
                if let Some(&ns) = map.get(&s) {
                    out.set_atom(atom, ns);
                }
            }
        }
        (out, map)
    }

    pub fn from_json(text: &str, agents_hint: Option<&BTreeSet<Agent>>) -> Result<StateModel, ModelError> {
        let raw: ModelJson = serde_json::from_str(text).map_err(|e| ModelError::Json(e.to_string()))?;
        let mut agents: BTreeSet<Agent> = raw.agents.keys().cloned().collect();
        if let Some(hint) = agents_hint {
            agents.extend(hint.iter().cloned());
        }
        let mut model = StateModel::new(raw.states, &agents)?;
        for (agent, pairs) in raw.agents {
            for [a, b] in pairs {
                model.add_edge_by_name(&agent, &a, &b)?;
            }
        }
        for (atom, states) in raw.valuation {
            for s in states {
                model.set_atom_by_name(&atom, &s)?;
            }
        }
        Ok(model)
    }

    pub fn to_json(&self) -> String {
        let raw = ModelJson {
            states: self.states.clone(),
            agents: self
                .rel
                .iter()
                .map(|(agent, set)| {
                    (
                        agent.clone(),
                        set.iter()
                            .map(|(a, b)| [self.states[*a].clone(), self.states[*b].clone()])
                            .collect(),
                    )
                })
                .collect(),
            valuation: self
                .val
                .iter()
                .map(|(atom, set)| {
                    (
                        atom.clone(),
                        set.iter().map(|s| self.states[*s].clone()).collect(),
                    )
                })
                .collect(),
        };
        serde_json::to_string_pretty(&raw).expect("model serializes")
    }
}

#[derive(Serialize, Deserialize)]
struct ModelJson {
    states: Vec<String>,
    #[serde(default)]
    agents: BTreeMap<String, Vec<[String; 2]>>,
    #[serde(default)]
    valuation: BTreeMap<String, Vec<String>>,
}

/// Precondition of a simple action in a program model.
///
/// `Diamond((m, a), inner)` is satisfied at `s` when running `m` with
/// designated action `a` from `s` can reach a state satisfying `inner`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Precondition {
    Formula(Sentence),
    Diamond(Box<(ProgramModel, usize)>, Box<Precondition>),
}

impl Precondition {
    pub fn render(&self) -> String {
        match self {
            Precondition::Formula(s) => crate::syntax::render(s),
            Precondition::Diamond(pair, inner) => {
                let (model, action) = &**pair;
                format!(
                    "<({},{{{}}})>{}",
                    model.name,
                    model.action_name(*action),
                    inner.render()
                )
            }
        }
    }
}

/// A program model: simple actions with accessibility arrows, a
/// precondition per action, and a designated subset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgramModel {
    name: String,
    actions: Vec<String>,
    agents: BTreeSet<Agent>,
    rel: BTreeMap<Agent, BTreeSet<(usize, usize)>>,
    pre: Vec<Precondition>,
    designated: BTreeSet<usize>,
}

impl ProgramModel {
    pub fn new(
        name: impl Into<String>,
        actions: Vec<String>,
        agents: &BTreeSet<Agent>,
        pre: Vec<Precondition>,
        designated: BTreeSet<usize>,
    ) -> Result<ProgramModel, ModelError> {
        if pre.len() != actions.len() {
            return Err(ModelError::MissingPre(format!(
                "{} preconditions for {} actions",
                pre.len(),
                actions.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for a in &actions {
            if !seen.insert(a.clone()) {
                return Err(ModelError::DuplicateState(a.clone()));
            }
        }
        assert!(designated.iter().all(|&d| d < actions.len()));
        Ok(ProgramModel {
            name: name.into(),
            actions,
            agents: agents.clone(),
            rel: BTreeMap::new(),
            pre,
            designated,
        })
    }

    /// The empty program model; its induced update is Crash.
    pub fn empty(agents: &BTreeSet<Agent>) -> ProgramModel {
        ProgramModel {
            name: "crash".into(),
            actions: Vec::new(),
            agents: agents.clone(),
            rel: BTreeMap::new(),
            pre: Vec::new(),
            designated: BTreeSet::new(),
        }
    }

    /// One action with all reflexive arrows and precondition true; its
    /// induced update is Skip.
    pub fn skip(agents: &BTreeSet<Agent>) -> ProgramModel {
        let mut m = ProgramModel {
            name: "skip".into(),
            actions: vec!["skip".to_string()],
            agents: agents.clone(),
            rel: BTreeMap::new(),
            pre: vec![Precondition::Formula(Sentence::True)],
            designated: std::iter::once(0).collect(),
        };
        for agent in agents.clone() {
            m.add_arrow(&agent, 0, 0).unwrap();
        }
        m
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn action_count(&self) -> usize {
        self.actions.len()
    }

    pub fn action_name(&self, i: usize) -> &str {
        &self.actions[i]
    }

    pub fn action_index(&self, name: &str) -> Option<usize> {
        self.actions.iter().position(|a| a == name)
    }

    pub fn agents(&self) -> &BTreeSet<Agent> {
        &self.agents
    }

    pub fn pre(&self, i: usize) -> &Precondition {
        &self.pre[i]
    }

    pub fn designated(&self) -> &BTreeSet<usize> {
        &self.designated
    }

    pub fn with_designated(&self, designated: BTreeSet<usize>) -> ProgramModel {
        assert!(designated.iter().all(|&d| d < self.actions.len()));
        ProgramModel {
            designated,
            ..self.clone()
        }
    }

    pub fn add_arrow(&mut self, agent: &str, from: usize, to: usize) -> Result<(), ModelError> {
        if !self.agents.contains(agent) {
            return Err(ModelError::UnknownAgent(agent.to_string()));
        }
        assert!(from < self.actions.len() && to < self.actions.len());
        self.rel.entry(agent.to_string()).or_default().insert((from, to));
        Ok(())
    }

    pub fn has_arrow(&self, agent: &str, from: usize, to: usize) -> bool {
        self.rel.get(agent).map_or(false, |s| s.contains(&(from, to)))
    }

    pub fn arrow_successors(&self, agent: &str, from: usize) -> Vec<usize> {
        match self.rel.get(agent) {
            Some(set) => set
                .range((from, 0)..=(from, usize::MAX))
                .map(|(_, t)| *t)
                .collect(),
            None => Vec::new(),
        }
    }

    pub fn from_json(text: &str, sig: &Signature) -> Result<ProgramModel, ModelError> {
        let raw: ProgramModelJson =
            serde_json::from_str(text).map_err(|e| ModelError::Json(e.to_string()))?;
        let mut pre = Vec::new();
        for action in &raw.actions {
            let formula = raw
                .pre
                .get(action)
                .ok_or_else(|| ModelError::MissingPre(action.clone()))?;
            let parsed = crate::syntax::parse_sentence(formula, sig)
                .map_err(|e| ModelError::Json(e.to_string()))?;
            pre.push(Precondition::Formula(parsed));
        }
        let mut designated = BTreeSet::new();
        for d in &raw.designated {
            let i = raw
                .actions
                .iter()
                .position(|a| a == d)
                .ok_or_else(|| ModelError::UnknownAction(d.clone()))?;
            designated.insert(i);
        }
        let agents: BTreeSet<Agent> = sig.agents().clone();
        let mut model = ProgramModel::new(raw.name, raw.actions.clone(), &agents, pre, designated)?;
        for (agent, pairs) in raw.agents {
            for [a, b] in pairs {
                let i = raw
                    .actions
                    .iter()
                    .position(|x| *x == a)
                    .ok_or_else(|| ModelError::UnknownAction(a.clone()))?;
                let j = raw
                    .actions
                    .iter()
                    .position(|x| *x == b)
                    .ok_or_else(|| ModelError::UnknownAction(b.clone()))?;
                model.add_arrow(&agent, i, j)?;
            }
        }
        Ok(model)
    }

    pub fn to_json(&self) -> Result<String, ModelError> {
        let mut pre = BTreeMap::new();
        for (i, p) in self.pre.iter().enumerate() {
            match p {
                Precondition::Formula(s) => {
                    pre.insert(self.actions[i].clone(), crate::syntax::render(s));
                }
                Precondition::Diamond(_, _) => return Err(ModelError::StructuredPre),
            }
        }
        let raw = ProgramModelJson {
            name: self.name.clone(),
            actions: self.actions.clone(),
            agents: self
                .rel
                .iter()
                .map(|(agent, set)| {
                    (
                        agent.clone(),
                        set.iter()
                            .map(|(a, b)| [self.actions[*a].clone(), self.actions[*b].clone()])
                            .collect(),
                    )
                })
                .collect(),
            pre,
            designated: self
                .designated
                .iter()
                .map(|&i| self.actions[i].clone())
                .collect(),
        };
        serde_json::to_string_pretty(&raw).map_err(|e| ModelError::Json(e.to_string()))
    }
}

#[derive(Serialize, Deserialize)]
struct ProgramModelJson {
    #[serde(default = "default_program_model_name")]
    name: String,
    actions: Vec<String>,
    #[serde(default)]
    agents: BTreeMap<String, Vec<[String; 2]>>,
    pre: BTreeMap<String, String>,
    designated: Vec<String>,
}

fn default_program_model_name() -> String {
    "program".into()
}

/// The result of applying an update to a state model: the new model, the
/// update relation from old states to new states, and the decomposition of
/// each new state into its parent state and the action that produced it.
#[derive(Debug, Clone)]
pub struct UpdateResult {
    pub target: StateModel,
    /// Pairs (source index, target index).
    pub relation: BTreeSet<(usize, usize)>,
    /// target index -> (source index, action id)
    pub pairing: BTreeMap<usize, (usize, String)>,
}

impl UpdateResult {
    /// Standardness: the inverse of the update relation is a partial
    /// function, i.e. no target state has two sources.
    pub fn is_standard(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.relation.iter().all(|&(_, t)| seen.insert(t))
    }

    pub fn relation_by_name(&self, source: &StateModel) -> BTreeSet<(String, String)> {
        self.relation
            .iter()
            .map(|&(s, t)| {
                (
                    source.state_name(s).to_string(),
                    self.target.state_name(t).to_string(),
                )
            })
            .collect()
    }

    /// Images of `set` under the update relation.
    pub fn push_forward(&self, set: &StateSet) -> StateSet {
        self.relation
            .iter()
            .filter(|(s, _)| set.contains(s))
            .map(|&(_, t)| t)
            .collect()
    }

    /// Sources whose every image lies in `set` (box direction).
    pub fn pull_back_all(&self, set: &StateSet, source_count: usize) -> StateSet {
        (0..source_count)
            .filter(|s| {
                self.relation
                    .iter()
                    .filter(|(a, _)| a == s)
                    .all(|(_, t)| set.contains(t))
            })
            .collect()
    }

    /// Sources with at least one image in `set` (diamond direction).
    pub fn pull_back_some(&self, set: &StateSet) -> StateSet {
        self.relation
            .iter()
            .filter(|(_, t)| set.contains(t))
            .map(|&(s, _)| s)
            .collect()
    }

    /// Sequential composition with an update of this result's target.
    pub fn then(&self, next: &UpdateResult) -> UpdateResult {
        let mut relation = BTreeSet::new();
        for &(s, m) in &self.relation {
            for &(m2, t) in &next.relation {
                if m == m2 {
                    relation.insert((s, t));
                }
            }
        }
        let result = UpdateResult {
            target: next.target.clone(),
            relation,
            pairing: next.pairing.clone(),
        };
        debug_assert!(result.is_standard());
        result
    }

    /// Identity update on `model`.
    pub fn identity(model: &StateModel) -> UpdateResult {
        let relation = (0..model.state_count()).map(|i| (i, i)).collect();
        let pairing = (0..model.state_count())
            .map(|i| (i, (i, "skip".to_string())))
            .collect();
        UpdateResult {
            target: model.clone(),
            relation,
            pairing,
        }
    }

    /// The empty update.
    pub fn crash(agents: &BTreeSet<Agent>) -> UpdateResult {
        UpdateResult {
            target: StateModel::new(Vec::<String>::new(), agents).unwrap(),
            relation: BTreeSet::new(),
            pairing: BTreeMap::new(),
        }
    }
}

/// Evaluator for preconditions over a state model; supplied by the
/// semantics layer.
pub type PreEvaluator<'a, E> = dyn FnMut(&StateModel, &Precondition) -> Result<StateSet, E> + 'a;

/// The update product of a state model with a program model. New states are
/// the pairs `(s,a)` where the precondition of `a` holds at `s`; arrows are
/// componentwise; the valuation is inherited from the old state; the update
/// relation pairs each surviving state with its designated-action images.
pub fn update_product<E>(
    model: &StateModel,
    program: &ProgramModel,
    eval: &mut PreEvaluator<'_, E>,
) -> Result<UpdateResult, E> {
    let mut pre_sets = Vec::with_capacity(program.action_count());
    for i in 0..program.action_count() {
        pre_sets.push(eval(model, program.pre(i))?);
    }

    let mut names = Vec::new();
    let mut origin = Vec::new();
    for s in 0..model.state_count() {
        for a in 0..program.action_count() {
            if pre_sets[a].contains(&s) {
                names.push(format!(
                    "({},{})",
                    model.state_name(s),
                    program.action_name(a)
                ));
                origin.push((s, a));
            }
        }
    }

    let mut target = StateModel::new(names, model.agents()).expect("product ids are unique");
    for (i, &(s, a)) in origin.iter().enumerate() {
        for (j, &(t, b)) in origin.iter().enumerate() {
            for agent in model.agents().clone() {
                if model.has_edge(&agent, s, t) && program.has_arrow(&agent, a, b) {
                    target.add_edge(&agent, i, j).unwrap();
                }
            }
        }
    }
    let atoms: Vec<String> = model.atoms().map(|a| a.to_string()).collect();
    for atom in &atoms {
        for (i, &(s, _)) in origin.iter().enumerate() {
            if model.holds(atom, s) {
                target.set_atom(atom, i);
            }
        }
    }

    let mut relation = BTreeSet::new();
    let mut pairing = BTreeMap::new();
    for (i, &(s, a)) in origin.iter().enumerate() {
        pairing.insert(i, (s, program.action_name(a).to_string()));
        if program.designated().contains(&a) {
            relation.insert((s, i));
        }
    }

    let result = UpdateResult {
        target,
        relation,
        pairing,
    };
    debug_assert!(result.is_standard());
    Ok(result)
}

/// The signature-based program model `(Sigma, sigma_index, args)`: carrier
/// and arrows from the signature, the j-th precondition is `args[j]`, and
/// the designated set is the singleton `{sigma_index}`.
pub fn signature_program(
    sig: &Signature,
    index: usize,
    args: &[Sentence],
) -> Result<ProgramModel, ModelError> {
    if args.len() != sig.arity() {
        return Err(ModelError::Arity {
            expected: sig.arity(),
            got: args.len(),
        });
    }
    assert!(index < sig.arity());
    let mut m = ProgramModel::new(
        sig.name().to_string(),
        sig.types().to_vec(),
        sig.agents(),
        args.iter()
            .cloned()
            .map(Precondition::Formula)
            .collect(),
        std::iter::once(index).collect(),
    )?;
    for (agent, pairs) in sig.arrows() {
        for &(i, j) in pairs {
            m.add_arrow(agent, i, j)?;
        }
    }
    Ok(m)
}

/// Composition of program models: carrier is the cartesian product, arrows
/// are componentwise, the precondition of `(a,b)` is reaching a state
/// satisfying `pre(b)` by running the left model with designated `{a}`, and
/// the designated set is the product of the designated sets.
pub fn compose_program_models(p: &ProgramModel, q: &ProgramModel) -> ProgramModel {
    let mut actions = Vec::new();
    let mut pre = Vec::new();
    let mut designated = BTreeSet::new();
    let mut agents = p.agents().clone();
    agents.extend(q.agents().iter().cloned());
    for a in 0..p.action_count() {
        for b in 0..q.action_count() {
            let idx = actions.len();
            actions.push(format!("({},{})", p.action_name(a), q.action_name(b)));
            pre.push(Precondition::Diamond(
                Box::new((p.clone(), a)),
                Box::new(q.pre(b).clone()),
            ));
            if p.designated().contains(&a) && q.designated().contains(&b) {
                designated.insert(idx);
            }
        }
    }
    let mut m = ProgramModel::new(
        format!("({};{})", p.name(), q.name()),
        actions,
        &agents,
        pre,
        designated,
    )
    .expect("composite ids are unique");
    for agent in agents.clone() {
        for a in 0..p.action_count() {
            for a2 in p.arrow_successors(&agent, a) {
                for b in 0..q.action_count() {
                    for b2 in q.arrow_successors(&agent, b) {
                        let from = a * q.action_count() + b;
                        let to = a2 * q.action_count() + b2;
                        m.add_arrow(&agent, from, to).unwrap();
                    }
                }
            }
        }
    }
    m
}

/// Disjoint union of program models; elements are tagged with their source
/// index. The union of zero models is the empty model (Crash).
pub fn union_program_models(models: &[ProgramModel]) -> ProgramModel {
    let mut agents = BTreeSet::new();
    for m in models {
        agents.extend(m.agents().iter().cloned());
    }
    let mut actions = Vec::new();
    let mut pre = Vec::new();
    let mut designated = BTreeSet::new();
    let mut offsets = Vec::new();
    for (tag, m) in models.iter().enumerate() {
        offsets.push(actions.len());
        for a in 0..m.action_count() {
            if m.designated().contains(&a) {
                designated.insert(actions.len());
            }
            actions.push(format!("({},{})", m.action_name(a), tag));
            pre.push(m.pre(a).clone());
        }
    }
    let mut out = ProgramModel::new("union", actions, &agents, pre, designated)
        .expect("tagged ids are unique");
    for (tag, m) in models.iter().enumerate() {
        for agent in m.agents().clone() {
            for a in 0..m.action_count() {
                for b in m.arrow_successors(&agent, a) {
                    out.add_arrow(&agent, offsets[tag] + a, offsets[tag] + b).unwrap();
                }
            }
        }
    }
    out
}

/// Disjoint union of state models; state ids are tagged with their source
/// index. Returns the union and the per-model index maps.
pub fn disjoint_union(models: &[&StateModel]) -> (StateModel, Vec<Vec<usize>>) {
    let mut agents = BTreeSet::new();
    for m in models {
        agents.extend(m.agents().iter().cloned());
    }
    let mut names = Vec::new();
    let mut maps = Vec::new();
    for (tag, m) in models.iter().enumerate() {
        let mut map = Vec::with_capacity(m.state_count());
        for s in 0..m.state_count() {
            map.push(names.len());
            names.push(format!("({},{})", m.state_name(s), tag));
        }
        maps.push(map);
    }
    let mut out = StateModel::new(names, &agents).expect("tagged ids are unique");
    for (tag, m) in models.iter().enumerate() {
        for agent in m.agents().clone() {
            for (a, b) in m.edges(&agent) {
                out.add_edge(&agent, maps[tag][a], maps[tag][b]).unwrap();
            }
        }
        let atoms: Vec<String> = m.atoms().map(|s| s.to_string()).collect();
        for atom in atoms {
            for s in 0..m.state_count() {
                if m.holds(&atom, s) {
                    out.set_atom(&atom, maps[tag][s]);
                }
            }
        }
    }
    (out, maps)
}
