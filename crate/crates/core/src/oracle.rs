//! Reference implementations kept deliberately naive; test suites check
//! the production algorithms against these on small inputs.

use std::collections::BTreeSet;

use crate::kripke::{StateModel, StateSet, UpdateResult};
use crate::syntax::Agent;

/// Greatest-fixpoint bisimulation: start from all atomically harmonious
/// pairs and strip violators until stable.
pub fn naive_largest_bisimulation(
    s: &StateModel,
    t: &StateModel,
) -> BTreeSet<(usize, usize)> {
    let mut atoms: BTreeSet<String> = s.atoms().map(|a| a.to_string()).collect();
    atoms.extend(t.atoms().map(|a| a.to_string()));
    let mut agents: BTreeSet<Agent> = s.agents().clone();
    agents.extend(t.agents().iter().cloned());
    let mut rel: BTreeSet<(usize, usize)> = BTreeSet::new();
    for i in 0..s.state_count() {
        for j in 0..t.state_count() {
            if atoms.iter().all(|a| s.holds(a, i) == t.holds(a, j)) {
                rel.insert((i, j));
            }
        }
    }
    loop {
        let next: BTreeSet<(usize, usize)> = rel
            .iter()
            .copied()
            .filter(|&(i, j)| {
                agents.iter().all(|agent| {
                    s.successors(agent, i).iter().all(|&i2| {
                        t.successors(agent, j)
                            .iter()
                            .any(|&j2| rel.contains(&(i2, j2)))
                    }) && t.successors(agent, j).iter().all(|&j2| {
                        s.successors(agent, i)
                            .iter()
                            .any(|&i2| rel.contains(&(i2, j2)))
                    })
                })
            })
            .collect();
        if next == rel {
            return rel;
        }
        rel = next;
    }
}

/// Two updates of the same source model agree up to bisimulation: their
/// image-reachable target parts are covered by the largest bisimulation,
/// matched image-by-image through the shared sources.
pub fn updates_equivalent(source: &StateModel, u1: &UpdateResult, u2: &UpdateResult) -> bool {
    let image1: StateSet = u1.relation.iter().map(|&(_, t)| t).collect();
    let image2: StateSet = u2.relation.iter().map(|&(_, t)| t).collect();
    let (t1, map1) = u1.target.reachable_restriction(&image1);
    let (t2, map2) = u2.target.reachable_restriction(&image2);
    let bisim = match crate::bisim::largest_bisimulation(&t1, &t2) {
        Ok(b) => b,
        Err(_) => return false,
    };
    for s in 0..source.state_count() {
        let im1: Vec<usize> = u1
            .relation
            .iter()
            .filter(|&&(a, _)| a == s)
            .map(|&(_, t)| map1[&t])
            .collect();
        let im2: Vec<usize> = u2
            .relation
            .iter()
            .filter(|&&(a, _)| a == s)
            .map(|&(_, t)| map2[&t])
            .collect();
        let forward = im1
            .iter()
            .all(|&x| im2.iter().any(|&y| bisim.contains(&(x, y))));
        let backward = im2
            .iter()
            .all(|&y| im1.iter().any(|&x| bisim.contains(&(x, y))));
        if !forward || !backward {
            return false;
        }
    }
    true
}

/// All paths of length at most `max_len` in an explicit graph, as label
/// sequences; used against regex extraction.
pub fn graph_label_words(
    n: usize,
    edges: &BTreeSet<(usize, Agent, usize)>,
    start: usize,
    accept: &BTreeSet<usize>,
    max_len: usize,
) -> BTreeSet<Vec<Agent>> {
    let mut out = BTreeSet::new();
    let mut layer: Vec<(usize, Vec<Agent>)> = vec![(start, Vec::new())];
    let _ = n;
    for _ in 0..=max_len {
        let mut next = Vec::new();
        for (q, word) in &layer {
            if accept.contains(q) {
                out.insert(word.clone());
            }
            if word.len() == max_len {
                continue;
            }
            for (from, label, to) in edges {
                if from == q {
                    let mut w = word.clone();
                    w.push(label.clone());
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

/// Brute-force PDL validity over all models with at most `max_states`
/// states on the given atoms: true when no state of any such model
/// refutes the sentence.
pub fn pdl_valid_small(
    s: &crate::pdl::PdlSentence,
    agents: &[Agent],
    atoms: &[&str],
    max_states: usize,
) -> Result<bool, crate::pdl::PdlError> {
    for n in 1..=max_states {
        let edge_slots = n * n;
        let agent_rel_count = 1u64 << edge_slots;
        let val_count = 1u64 << (n * atoms.len());
        let mut rels = vec![0u64; agents.len()];
        'models: loop {
            for val in 0..val_count {
                let mut model = StateModel::new(
                    (0..n).map(|i| format!("s{i}")),
                    &agents.iter().cloned().collect(),
                )
                .unwrap();
                for (ai, agent) in agents.iter().enumerate() {
                    for slot in 0..edge_slots {
                        if rels[ai] >> slot & 1 == 1 {
                            model.add_edge(agent, slot / n, slot % n).unwrap();
                        }
                    }
                }
                for (pi, p) in atoms.iter().enumerate() {
                    for st in 0..n {
                        if val >> (pi * n + st) & 1 == 1 {
                            model.set_atom(p, st);
                        }
                    }
                }
                let truth = crate::pdl::pdl_eval(&model, s)?;
                if truth.len() != n {
                    return Ok(false);
                }
            }
            let mut i = 0;
            while i < agents.len() {
                rels[i] += 1;
                if rels[i] < agent_rel_count {
                    break;
                }
                rels[i] = 0;
                i += 1;
            }
            if i == agents.len() {
                break 'models;
            }
        }
    }
    Ok(true)
}
