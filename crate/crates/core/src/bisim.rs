//! Largest bisimulations via partition refinement, bisimilarity queries,
//! quotient models, and total-bisimulation checks.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::kripke::{disjoint_union, ProgramModel, StateModel};
use crate::syntax::Agent;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BisimError {
    #[error("models have different agent sets")]
    AgentMismatch,
    #[error("unknown state id {0:?}")]
    UnknownState(String),
}

/// Stable partition of a model's states under bisimilarity, as a block id
/// per state. Splitter-based refinement: start from the atomic-valuation
/// partition and split against (agent, block) predecessor sets until no
/// block changes. Blocks are numbered in order of their smallest state, so
/// the output is deterministic.
pub fn partition_refine(model: &StateModel) -> Vec<usize> {
    let n = model.state_count();
    if n == 0 {
        return Vec::new();
    }
    // Initial partition by atomic profile.
    let mut block_of: Vec<usize> = vec![0; n];
    let mut profiles: BTreeMap<BTreeSet<&str>, usize> = BTreeMap::new();
    let mut blocks: Vec<BTreeSet<usize>> = Vec::new();
    for s in 0..n {
        let profile = model.atom_profile(s);
        let id = *profiles.entry(profile).or_insert_with(|| {
            blocks.push(BTreeSet::new());
            blocks.len() - 1
        });
        block_of[s] = id;
        blocks[id].insert(s);
    }

    let agents: Vec<Agent> = model.agents().iter().cloned().collect();
    let mut worklist: VecDeque<usize> = (0..blocks.len()).collect();
    while let Some(splitter) = worklist.pop_front() {
        let splitter_states = blocks[splitter].clone();
        if splitter_states.is_empty() {
            continue;
        }
        for agent in &agents {
            // Predecessors of the splitter block under this agent.
            let mut pred: BTreeSet<usize> = BTreeSet::new();
            for s in 0..n {
                if model
                    .successors(agent, s)
                    .iter()
                    .any(|t| splitter_states.contains(t))
                {
                    pred.insert(s);
                }
            }
            // Split every block against pred.
            for b in 0..blocks.len() {
                if blocks[b].len() < 2 {
                    continue;
                }
                let inside: BTreeSet<usize> = blocks[b].intersection(&pred).copied().collect();
                if inside.is_empty() || inside.len() == blocks[b].len() {
                    continue;
                }
                let outside: BTreeSet<usize> =
                    blocks[b].difference(&inside).copied().collect();
                blocks[b] = inside;
                let new_id = blocks.len();
                for &s in &outside {
                    block_of[s] = new_id;
                }
                blocks.push(outside);
                worklist.push_back(b);
                worklist.push_back(new_id);
            }
        }
    }

    // Renumber blocks by smallest member for a stable output.
    let mut order: Vec<usize> = (0..blocks.len()).filter(|b| !blocks[*b].is_empty()).collect();
    order.sort_by_key(|&b| *blocks[b].iter().next().unwrap());
    let renumber: BTreeMap<usize, usize> =
        order.iter().enumerate().map(|(i, &b)| (b, i)).collect();
    block_of.iter().map(|b| renumber[b]).collect()
}

/// The largest bisimulation between two models over the same agent set, as
/// pairs of state indices.
pub fn largest_bisimulation(
    s: &StateModel,
    t: &StateModel,
) -> Result<BTreeSet<(usize, usize)>, BisimError> {
    if s.agents() != t.agents() {
        return Err(BisimError::AgentMismatch);
    }
    let (combined, maps) = disjoint_union(&[s, t]);
    let blocks = partition_refine(&combined);
    let mut out = BTreeSet::new();
    for i in 0..s.state_count() {
        for j in 0..t.state_count() {
            if blocks[maps[0][i]] == blocks[maps[1][j]] {
                out.insert((i, j));
            }
        }
    }
    Ok(out)
}

/// Whether `(s, si)` and `(t, ti)` are bisimilar states.
pub fn bisimilar(
    s: &StateModel,
    si: &str,
    t: &StateModel,
    ti: &str,
) -> Result<bool, BisimError> {
    let i = s
        .state_index(si)
        .ok_or_else(|| BisimError::UnknownState(si.to_string()))?;
    let j = t
        .state_index(ti)
        .ok_or_else(|| BisimError::UnknownState(ti.to_string()))?;
    Ok(largest_bisimulation(s, t)?.contains(&(i, j)))
}

/// Quotient of a model by bisimilarity. Returns the quotient and the
/// projection from state index to quotient state index; the projection is a
/// total bisimulation.
pub fn quotient(model: &StateModel) -> (StateModel, Vec<usize>) {
    let blocks = partition_refine(model);
    let class_count = blocks.iter().copied().max().map_or(0, |m| m + 1);
    // Name each class after its smallest member.
    let mut representative: Vec<Option<usize>> = vec![None; class_count];
    for s in 0..model.state_count() {
        let b = blocks[s];
        if representative[b].map_or(true, |r| s < r) {
            representative[b] = Some(s);
        }
    }
    let names: Vec<String> = (0..class_count)
        .map(|b| format!("[{}]", model.state_name(representative[b].unwrap())))
        .collect();
    let mut out = StateModel::new(names, model.agents()).expect("class names are unique");
    for agent in model.agents().clone() {
        for (a, b) in model.edges(&agent).collect::<Vec<_>>() {
            out.add_edge(&agent, blocks[a], blocks[b]).unwrap();
        }
    }
    let atoms: Vec<String> = model.atoms().map(|s| s.to_string()).collect();
    for atom in atoms {
        for s in 0..model.state_count() {
            if model.holds(&atom, s) {
                out.set_atom(&atom, blocks[s]);
            }
        }
    }
    (out, blocks)
}

/// Checks the bisimulation clauses plus totality in both directions for an
/// explicit relation between two models.
pub fn is_total_bisimulation(
    s: &StateModel,
    t: &StateModel,
    relation: &BTreeSet<(usize, usize)>,
) -> bool {
    is_bisimulation(s, t, relation)
        && (0..s.state_count()).all(|i| relation.iter().any(|(a, _)| *a == i))
        && (0..t.state_count()).all(|j| relation.iter().any(|(_, b)| *b == j))
}

/// Checks atomic harmony and both zig-zag clauses.
pub fn is_bisimulation(
    s: &StateModel,
    t: &StateModel,
    relation: &BTreeSet<(usize, usize)>,
) -> bool {
    let mut atoms: BTreeSet<String> = s.atoms().map(|a| a.to_string()).collect();
    atoms.extend(t.atoms().map(|a| a.to_string()));
    let mut agents: BTreeSet<Agent> = s.agents().clone();
    agents.extend(t.agents().iter().cloned());
    for &(i, j) in relation {
        for atom in &atoms {
            if s.holds(atom, i) != t.holds(atom, j) {
                return false;
            }
        }
        for agent in &agents {
            for i2 in s.successors(agent, i) {
                if !t
                    .successors(agent, j)
                    .iter()
                    .any(|&j2| relation.contains(&(i2, j2)))
                {
                    return false;
                }
            }
            for j2 in t.successors(agent, j) {
                if !s
                    .successors(agent, i)
                    .iter()
                    .any(|&i2| relation.contains(&(i2, j2)))
                {
                    return false;
                }
            }
        }
    }
    true
}

/// Largest bisimulation between two program models. The atomic-harmony
/// clause compares preconditions, which is a semantic question; the caller
/// supplies the equivalence test (typically validity of the biconditional).
pub fn largest_program_bisimulation(
    p: &ProgramModel,
    q: &ProgramModel,
    pre_equivalent: &mut dyn FnMut(usize, usize) -> bool,
) -> BTreeSet<(usize, usize)> {
    let mut rel: BTreeSet<(usize, usize)> = BTreeSet::new();
    for a in 0..p.action_count() {
        for b in 0..q.action_count() {
            if pre_equivalent(a, b) {
                rel.insert((a, b));
            }
        }
    }
    let mut agents: BTreeSet<Agent> = p.agents().clone();
    agents.extend(q.agents().iter().cloned());
    loop {
        let mut next = BTreeSet::new();
        for &(a, b) in &rel {
            let ok = agents.iter().all(|agent| {
                p.arrow_successors(agent, a).iter().all(|&a2| {
                    q.arrow_successors(agent, b)
                        .iter()
                        .any(|&b2| rel.contains(&(a2, b2)))
                }) && q.arrow_successors(agent, b).iter().all(|&b2| {
                    p.arrow_successors(agent, a)
                        .iter()
                        .any(|&a2| rel.contains(&(a2, b2)))
                })
            });
            if ok {
                next.insert((a, b));
            }
        }
        if next == rel {
            return rel;
        }
        rel = next;
    }
}

/// Program-model equivalence: a bisimulation whose restriction to the
/// designated sets is total and closed (designated actions relate only to
/// designated actions).
pub fn program_models_equivalent(
    p: &ProgramModel,
    q: &ProgramModel,
    pre_equivalent: &mut dyn FnMut(usize, usize) -> bool,
) -> bool {
    let rel = largest_program_bisimulation(p, q, pre_equivalent);
    let desig_ok = p.designated().iter().all(|&a| {
        q.designated().iter().any(|&b| rel.contains(&(a, b)))
    }) && q.designated().iter().all(|&b| {
        p.designated().iter().any(|&a| rel.contains(&(a, b)))
    });
    // Designated actions must not be identified with non-designated ones.
    let closed = rel.iter().all(|&(a, b)| {
        p.designated().contains(&a) == q.designated().contains(&b)
    });
    desig_ok && closed
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{
        gen_private_pair, pri_signature, pub_signature, random_model, random_sentence, gen_cn,
        Lang, ModelCfg, SentenceCfg,
    };
    use crate::kripke::{signature_program, update_product, Precondition};
    use crate::oracle::{naive_largest_bisimulation, updates_equivalent};
    use crate::semantics::{eval_precondition, eval_sentence, DEFAULT_STAR_FUEL};
    use crate::syntax::Sentence;
    use rand::{Rng, SeedableRng};

    #[test]
    fn identity_is_always_included() {
        let sig = pri_signature(&["A"], &["A", "B"]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let m = random_model(&mut rng, &sig, &ModelCfg::default());
            let rel = largest_bisimulation(&m, &m).unwrap();
            for s in 0..m.state_count() {
                assert!(rel.contains(&(s, s)));
            }
        }
    }

    #[test]
    fn chain_models_relate_everything_but_the_root() {
        let lengths: std::collections::BTreeMap<u32, u32> = [(1, 2), (2, 3)].into_iter().collect();
        let (s, t) = gen_private_pair(&lengths, 1).unwrap();
        let rel = largest_bisimulation(&s, &t).unwrap();
        for x in 0..s.state_count() {
            let name = s.state_name(x);
            if name == "a" {
                continue;
            }
            let tx = t.state_index(name).unwrap();
            assert!(rel.contains(&(x, tx)), "{name} should match itself");
        }
        assert!(!bisimilar(&s, "a", &t, "a").unwrap());
    }

    #[test]
    fn duplicated_states_are_identified() {
        let agents: std::collections::BTreeSet<String> =
            std::iter::once("A".to_string()).collect();
        let mut m = crate::kripke::StateModel::new(["x", "y", "y2"], &agents).unwrap();
        m.add_edge_by_name("A", "x", "y").unwrap();
        m.add_edge_by_name("A", "x", "y2").unwrap();
        m.set_atom_by_name("p", "y").unwrap();
        m.set_atom_by_name("p", "y2").unwrap();
        let rel = largest_bisimulation(&m, &m).unwrap();
        let y = m.state_index("y").unwrap();
        let y2 = m.state_index("y2").unwrap();
        assert!(rel.contains(&(y, y2)));
        assert_eq!(rel, naive_largest_bisimulation(&m, &m));
    }

    #[test]
    fn refinement_agrees_with_the_naive_fixpoint() {
        let sig = pri_signature(&["A"], &["A", "B"]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let cfg = ModelCfg {
            max_states: 6,
            ..ModelCfg::default()
        };
        for _ in 0..60 {
            let a = random_model(&mut rng, &sig, &cfg);
            let b = random_model(&mut rng, &sig, &cfg);
            assert_eq!(
                largest_bisimulation(&a, &b).unwrap(),
                naive_largest_bisimulation(&a, &b)
            );
        }
    }

    #[test]
    fn agent_mismatch_is_rejected() {
        let a = random_model(
            &mut rand_chacha::ChaCha8Rng::seed_from_u64(1),
            &pub_signature(&["A"]),
            &ModelCfg::default(),
        );
        let b = random_model(
            &mut rand_chacha::ChaCha8Rng::seed_from_u64(1),
            &pub_signature(&["A", "B"]),
            &ModelCfg::default(),
        );
        assert_eq!(
            largest_bisimulation(&a, &b).unwrap_err(),
            BisimError::AgentMismatch
        );
    }

    #[test]
    fn quotients_never_grow_and_preserve_truth() {
        let sig = pri_signature(&["A"], &["A", "B"]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(29);
        let scfg = SentenceCfg {
            depth: 2,
            lang: Lang::L1,
            ..SentenceCfg::default()
        };
        for _ in 0..40 {
            let m = random_model(&mut rng, &sig, &ModelCfg::default());
            let (q, projection) = quotient(&m);
            assert!(q.state_count() <= m.state_count());
            // The projection graph is a total bisimulation.
            let rel: BTreeSet<(usize, usize)> = (0..m.state_count())
                .map(|s| (s, projection[s]))
                .collect();
            assert!(is_total_bisimulation(&m, &q, &rel));
            // Quotienting twice is idempotent up to size.
            let (qq, _) = quotient(&q);
            assert_eq!(qq.state_count(), q.state_count());
            let phi = random_sentence(&mut rng, &sig, &scfg);
            let in_m = eval_sentence(&m, &phi, &sig, 0).unwrap().set;
            let in_q = eval_sentence(&q, &phi, &sig, 0).unwrap().set;
            for s in 0..m.state_count() {
                assert_eq!(in_m.contains(&s), in_q.contains(&projection[s]));
            }
        }
    }

    #[test]
    fn quotient_classes_track_bisimilarity() {
        let sig = pri_signature(&["A"], &["A", "B"]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(59);
        for _ in 0..30 {
            let m = random_model(&mut rng, &sig, &ModelCfg::default());
            let (_, projection) = quotient(&m);
            let rel = largest_bisimulation(&m, &m).unwrap();
            for a in 0..m.state_count() {
                for b in 0..m.state_count() {
                    assert_eq!(projection[a] == projection[b], rel.contains(&(a, b)));
                }
            }
        }
    }

    #[test]
    fn totality_checks() {
        let sig = pub_signature(&["A", "B"]);
        let m = gen_cn(2).unwrap();
        let identity: BTreeSet<(usize, usize)> =
            (0..m.state_count()).map(|s| (s, s)).collect();
        assert!(is_total_bisimulation(&m, &m, &identity));
        assert!(!is_total_bisimulation(&m, &m, &BTreeSet::new()));
        // For a fully designated program model, relating update images of
        // the same source is a total bisimulation on the target.
        let pm = signature_program(&sig, 0, &[Sentence::atom("p")]).unwrap();
        let mut eval = |model: &crate::kripke::StateModel, pre: &Precondition| {
            Ok::<_, crate::semantics::EvalError>(
                eval_precondition(model, pre, &sig, DEFAULT_STAR_FUEL)?.set,
            )
        };
        let u = update_product(&m, &pm, &mut eval).unwrap();
        let mut through_source = BTreeSet::new();
        for &(s, t) in &u.relation {
            for &(s2, t2) in &u.relation {
                if s == s2 {
                    through_source.insert((t, t2));
                }
            }
        }
        assert!(is_total_bisimulation(&u.target, &u.target, &through_source));
    }

    #[test]
    fn equivalent_program_models_induce_equivalent_updates() {
        let sig = pri_signature(&["A"], &["A", "B"]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(61);
        for _ in 0..20 {
            // A fully designated random program model and a duplicate-state
            // variant; they are bisimilar by construction.
            let args = [
                Sentence::atom("p"),
                if rng.gen_bool(0.5) {
                    Sentence::True
                } else {
                    Sentence::atom("q")
                },
            ];
            let p = signature_program(&sig, 0, &args)
                .unwrap()
                .with_designated([0usize, 1].into_iter().collect());
            // Duplicate: two copies of every action via a disjoint union
            // with itself, designated everywhere.
            let q = crate::kripke::union_program_models(&[p.clone(), p.clone()]);
            let model = random_model(&mut rng, &sig, &ModelCfg::default());
            let mut eval = |m: &crate::kripke::StateModel, pre: &Precondition| {
                Ok::<_, crate::semantics::EvalError>(
                    eval_precondition(m, pre, &sig, DEFAULT_STAR_FUEL)?.set,
                )
            };
            let u1 = update_product(&model, &p, &mut eval).unwrap();
            let mut eval2 = |m: &crate::kripke::StateModel, pre: &Precondition| {
                Ok::<_, crate::semantics::EvalError>(
                    eval_precondition(m, pre, &sig, DEFAULT_STAR_FUEL)?.set,
                )
            };
            let u2 = update_product(&model, &q, &mut eval2).unwrap();
            assert!(updates_equivalent(&model, &u1, &u2));
        }
    }

    #[test]
    fn program_bisimulation_uses_the_injected_equivalence() {
        let sig = pri_signature(&["A"], &["A", "B"]);
        // Same frame, syntactically different but equivalent preconditions.
        let p = signature_program(&sig, 0, &[Sentence::atom("p"), Sentence::True]).unwrap();
        let q = signature_program(
            &sig,
            0,
            &[
                Sentence::not(Sentence::not(Sentence::atom("p"))),
                Sentence::implies(Sentence::atom("q"), Sentence::atom("q")),
            ],
        )
        .unwrap();
        // Syntactic equality refuses to relate them...
        let mut strict = |a: usize, b: usize| p.pre(a) == q.pre(b);
        assert!(!largest_program_bisimulation(&p, &q, &mut strict).contains(&(0, 0)));
        // ...while semantic equivalence (here: validity of the
        // biconditional, decided by the decide module) relates the whole
        // frame.
        let cfg = crate::decide::DecideConfig::default();
        let mut semantic = |a: usize, b: usize| {
            let (Precondition::Formula(x), Precondition::Formula(y)) = (p.pre(a), q.pre(b))
            else {
                return false;
            };
            crate::decide::valid(&Sentence::iff(x.clone(), y.clone()), &sig, &cfg)
                .unwrap_or(false)
        };
        let rel = largest_program_bisimulation(&p, &q, &mut semantic);
        assert!(rel.contains(&(0, 0)) && rel.contains(&(1, 1)));
        let mut semantic2 = semantic;
        assert!(program_models_equivalent(&p, &q, &mut semantic2));
    }
}
