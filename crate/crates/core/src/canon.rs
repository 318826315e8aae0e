//! The canonical action model: simple actions with syntactically generated
//! agent arrows and the recursive precondition map.
//!
//! The full model is infinite; only the fragment reachable from a given
//! action is ever materialized, and that fragment is finite (bounded by
//! n^len where n is the number of action types).

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};

use crate::syntax::{Agent, Sentence, Signature, SimpleAction};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CanonError {
    #[error("unknown action type {0:?}")]
    UnknownType(String),
    #[error("basic action {name:?} takes {expected} argument(s), got {got}")]
    Arity {
        name: String,
        expected: usize,
        got: usize,
    },
}

/// `Pre(skip) = true`, `Pre(crash) = false`, `Pre(sigma_i args) = args[i]`,
/// `Pre(a ; b) = <a> Pre(b)`.
pub fn pre_of(sig: &Signature, action: &SimpleAction) -> Result<Sentence, CanonError> {
    match action {
        SimpleAction::Skip => Ok(Sentence::True),
        SimpleAction::Crash => Ok(Sentence::False),
        SimpleAction::Basic(name, args) => {
            let i = sig
                .type_index(name)
                .ok_or_else(|| CanonError::UnknownType(name.clone()))?;
            if args.len() != sig.arity() {
                return Err(CanonError::Arity {
                    name: name.clone(),
                    expected: sig.arity(),
                    got: args.len(),
                });
            }
            Ok(args[i].clone())
        }
        SimpleAction::Seq(a, b) => Ok(Sentence::dyn_diamond(a.to_program(), pre_of(sig, b)?)),
    }
}

/// Arrow oracle for the canonical action model, with a per-instance memo
/// cache (interior mutability keeps the query methods shared-reference).
pub struct OmegaOracle<'a> {
    sig: &'a Signature,
    memo: RefCell<BTreeMap<(SimpleAction, Agent), BTreeSet<SimpleAction>>>,
}

impl<'a> OmegaOracle<'a> {
    pub fn new(sig: &'a Signature) -> Self {
        OmegaOracle {
            sig,
            memo: RefCell::new(BTreeMap::new()),
        }
    }

    pub fn signature(&self) -> &Signature {
        self.sig
    }

    /// One-step successors of `action` under `agent`:
    /// `skip -> skip`, no arrows from `crash`,
    /// `sigma_i args -> sigma_j args` when `i ->_A j` in the signature, and
    /// componentwise arrows on compositions.
    pub fn successors(
        &self,
        action: &SimpleAction,
        agent: &str,
    ) -> Result<BTreeSet<SimpleAction>, CanonError> {
        let key = (action.clone(), agent.to_string());
        if let Some(hit) = self.memo.borrow().get(&key) {
            return Ok(hit.clone());
        }
        let out = match action {
            SimpleAction::Skip => std::iter::once(SimpleAction::Skip).collect(),
            SimpleAction::Crash => BTreeSet::new(),
            SimpleAction::Basic(name, args) => {
                let i = self
                    .sig
                    .type_index(name)
                    .ok_or_else(|| CanonError::UnknownType(name.clone()))?;
                self.sig
                    .type_successors(agent, i)
                    .into_iter()
                    .map(|j| SimpleAction::Basic(self.sig.type_name(j).to_string(), args.clone()))
                    .collect()
            }
            SimpleAction::Seq(a, b) => {
                let la = self.successors(a, agent)?;
                let lb = self.successors(b, agent)?;
                let mut out = BTreeSet::new();
                for x in &la {
                    for y in &lb {
                        out.insert(SimpleAction::seq(x.clone(), y.clone()));
                    }
                }
                out
            }
        };
        self.memo.borrow_mut().insert(key, out.clone());
        Ok(out)
    }

    /// The closure of `action` under arrows labeled by agents in `group`,
    /// including `action` itself. Always finite.
    pub fn reachable(
        &self,
        action: &SimpleAction,
        group: &BTreeSet<Agent>,
    ) -> Result<BTreeSet<SimpleAction>, CanonError> {
        let mut seen: BTreeSet<SimpleAction> = std::iter::once(action.clone()).collect();
        let mut frontier = vec![action.clone()];
        while let Some(a) = frontier.pop() {
            for agent in group {
                for b in self.successors(&a, agent)? {
                    if seen.insert(b.clone()) {
                        frontier.push(b);
                    }
                }
            }
        }
        Ok(seen)
    }
}

/// The reachable fragment of the canonical action model around `action`,
/// as a program model with designated set `{action}`. Action ids are
/// canonical renderings; preconditions come from [`pre_of`].
pub fn omega_fragment(
    sig: &Signature,
    action: &SimpleAction,
) -> Result<crate::kripke::ProgramModel, CanonError> {
    let oracle = OmegaOracle::new(sig);
    let acts: Vec<SimpleAction> = oracle
        .reachable(action, sig.agents())?
        .into_iter()
        .collect();
    let ids: Vec<String> = acts.iter().map(crate::syntax::render_action).collect();
    let mut pre = Vec::new();
    for a in &acts {
        pre.push(crate::kripke::Precondition::Formula(pre_of(sig, a)?));
    }
    let designated = acts
        .iter()
        .position(|a| a == action)
        .into_iter()
        .collect();
    let mut model = crate::kripke::ProgramModel::new("omega", ids, sig.agents(), pre, designated)
        .expect("distinct actions render distinctly");
    for (i, a) in acts.iter().enumerate() {
        for agent in sig.agents() {
            for b in oracle.successors(a, agent)? {
                if let Some(j) = acts.iter().position(|x| *x == b) {
                    model.add_arrow(agent, i, j).unwrap();
                }
            }
        }
    }
    Ok(model)
}
