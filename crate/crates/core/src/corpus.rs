//! Deterministic generators for the example models and signatures, and
//! seeded random generators used by the test corpora.

use std::collections::{BTreeMap, BTreeSet};

use rand::prelude::*;

use crate::kripke::{ModelError, StateModel};
use crate::syntax::{Agent, Program, Sentence, Signature, SimpleAction};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CorpusError {
    #[error("cycle size parameter must be even and positive, got {0}")]
    BadCycle(usize),
    #[error("chain index {0} is not in the domain")]
    BadIndex(u32),
    #[error("chain lengths must be positive")]
    BadLength,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// The public-announcement signature: one action type with reflexive
/// arrows for every agent.
pub fn pub_signature(agents: &[&str]) -> Signature {
    let arrows: BTreeMap<Agent, Vec<(String, String)>> = agents
        .iter()
        .map(|a| (a.to_string(), vec![("Pub".to_string(), "Pub".to_string())]))
        .collect();
    Signature::new(
        "pub",
        agents.iter().map(|a| a.to_string()).collect(),
        vec!["Pub".to_string()],
        arrows,
    )
    .expect("builtin signature is well-formed")
}

/// Completely private announcements to `observers`: insiders keep seeing
/// `Pri`, outsiders see `skp`, and `skp` loops for everyone.
pub fn pri_signature(observers: &[&str], agents: &[&str]) -> Signature {
    let inside: BTreeSet<&str> = observers.iter().copied().collect();
    let mut arrows: BTreeMap<Agent, Vec<(String, String)>> = BTreeMap::new();
    for agent in agents {
        let mut list = vec![("skp".to_string(), "skp".to_string())];
        if inside.contains(agent) {
            list.push(("Pri".to_string(), "Pri".to_string()));
        } else {
            list.push(("Pri".to_string(), "skp".to_string()));
        }
        arrows.insert(agent.to_string(), list);
    }
    Signature::new(
        "pri",
        agents.iter().map(|a| a.to_string()).collect(),
        vec!["Pri".to_string(), "skp".to_string()],
        arrows,
    )
    .expect("builtin signature is well-formed")
}

/// The cycle model of `5n` points with alternating symmetric edges:
/// `a_1 -A- a_2 -B- a_3 -A- ...` around to `a_5n -B- a_1`. The atom `p`
/// fails exactly at `a_1` and `a_{2n+1}`; `q` holds exactly at `a_{4n+1}`.
pub fn gen_cn(n: usize) -> Result<StateModel, CorpusError> {
    if n == 0 || n % 2 != 0 {
        return Err(CorpusError::BadCycle(n));
    }
    let count = 5 * n;
    let agents: BTreeSet<Agent> = ["A", "B"].iter().map(|s| s.to_string()).collect();
    let mut model = StateModel::new((1..=count).map(|i| format!("a_{i}")), &agents)?;
    for i in 1..=count {
        let j = if i == count { 1 } else { i + 1 };
        let agent = if i % 2 == 1 { "A" } else { "B" };
        model.add_symmetric_edge(agent, i - 1, j - 1)?;
    }
    for i in 1..=count {
        if i != 1 && i != 2 * n + 1 {
            model.set_atom("p", i - 1);
        }
    }
    model.set_atom("q", 4 * n);
    Ok(model)
}

/// The private-announcement pair: the chain model and its variant with one
/// extra arrow.
///
/// States are `a`, `b`, and `c{i}_{k}` for `i` in the domain of `lengths`
/// and `1 <= k <= lengths[i]`. Arrows: every state has a reflexive `A`
/// loop; `a ->_A b`; `b ->_A c{i}_1`; each chain steps `c{i}_k ->_A
/// c{i}_{k+1}`; and the chain ends return `c{i}_{len} ->_B b`. The atom `p`
/// holds everywhere except `b`. The second model additionally has
/// `a ->_A c{extra}_1`, and nothing else differs.
pub fn gen_private_pair(
    lengths: &BTreeMap<u32, u32>,
    extra: u32,
) -> Result<(StateModel, StateModel), CorpusError> {
    if !lengths.contains_key(&extra) {
        return Err(CorpusError::BadIndex(extra));
    }
    if lengths.values().any(|&l| l == 0) {
        return Err(CorpusError::BadLength);
    }
    let agents: BTreeSet<Agent> = ["A", "B"].iter().map(|s| s.to_string()).collect();
    let mut names = vec!["a".to_string(), "b".to_string()];
    for (&i, &len) in lengths {
        for k in 1..=len {
            names.push(format!("c{i}_{k}"));
        }
    }
    let mut base = StateModel::new(names.clone(), &agents)?;
    for s in 0..base.state_count() {
        base.add_edge("A", s, s)?;
    }
    base.add_edge_by_name("A", "a", "b")?;
    for (&i, &len) in lengths {
        base.add_edge_by_name("A", "b", &format!("c{i}_1"))?;
        for k in 1..len {
            base.add_edge_by_name("A", &format!("c{i}_{k}"), &format!("c{i}_{}", k + 1))?;
        }
        base.add_edge_by_name("B", &format!("c{i}_{len}"), "b")?;
    }
    for name in &names {
        if name != "b" {
            base.set_atom_by_name("p", name)?;
        }
    }
    let mut extended = base.clone();
    extended.add_edge_by_name("A", "a", &format!("c{extra}_1"))?;
    Ok((base, extended))
}

/// Strictly decreasing sequences over `0..=bound` under one-point
/// extension, for the iterated-announcement demonstration: announcing
/// "some successor exists" deletes exactly the sequences ending in the
/// current minimum, so no finite stage is ever stable until the model
/// empties out.
pub fn gen_nofmp(bound: u32) -> StateModel {
    let agents: BTreeSet<Agent> = std::iter::once("A".to_string()).collect();
    let mut seqs: Vec<Vec<u32>> = vec![Vec::new()];
    let mut frontier: Vec<Vec<u32>> = vec![Vec::new()];
    while let Some(s) = frontier.pop() {
        let ceiling = s.last().copied().unwrap_or(bound + 1);
        for x in 0..ceiling.min(bound + 1) {
            let mut t = s.clone();
            t.push(x);
            seqs.push(t.clone());
            frontier.push(t);
        }
    }
    seqs.sort();
    let name = |s: &[u32]| {
        if s.is_empty() {
            "e".to_string()
        } else {
            s.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(".")
        }
    };
    let mut model =
        StateModel::new(seqs.iter().map(|s| name(s)), &agents).expect("sequences are distinct");
    for (i, s) in seqs.iter().enumerate() {
        let ceiling = s.last().copied().unwrap_or(bound + 1);
        for x in 0..ceiling.min(bound + 1) {
            let mut t = s.clone();
            t.push(x);
            let j = model.state_index(&name(&t)).unwrap();
            model.add_edge("A", i, j).unwrap();
        }
    }
    model
}

// ---------------------------------------------------------------------------
// Random corpora.

#[derive(Debug, Clone)]
pub struct ModelCfg {
    pub max_states: usize,
    pub atoms: Vec<String>,
    pub edge_density: f64,
}

impl Default for ModelCfg {
    fn default() -> Self {
        ModelCfg {
            max_states: 5,
            atoms: vec!["p".to_string(), "q".to_string()],
            edge_density: 0.35,
        }
    }
}

/// A random model over the signature's agents.
pub fn random_model(rng: &mut impl Rng, sig: &Signature, cfg: &ModelCfg) -> StateModel {
    let n = rng.gen_range(1..=cfg.max_states);
    let mut model =
        StateModel::new((0..n).map(|i| format!("s{i}")), sig.agents()).expect("fresh ids");
    for agent in sig.agents().clone() {
        for a in 0..n {
            for b in 0..n {
                if rng.gen_bool(cfg.edge_density) {
                    model.add_edge(&agent, a, b).unwrap();
                }
            }
        }
    }
    for atom in &cfg.atoms {
        for s in 0..n {
            if rng.gen_bool(0.5) {
                model.set_atom(atom, s);
            }
        }
    }
    model
}

/// Which fragment a random sentence may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lang {
    /// Boxes and dynamic modalities only.
    L0,
    /// Adds common knowledge.
    L1,
    /// Adds program iteration.
    Full,
}

#[derive(Debug, Clone)]
pub struct SentenceCfg {
    pub depth: usize,
    pub lang: Lang,
    pub atoms: Vec<String>,
}

impl Default for SentenceCfg {
    fn default() -> Self {
        SentenceCfg {
            depth: 3,
            lang: Lang::L1,
            atoms: vec!["p".to_string(), "q".to_string()],
        }
    }
}

pub fn random_sentence(rng: &mut impl Rng, sig: &Signature, cfg: &SentenceCfg) -> Sentence {
    random_sentence_depth(rng, sig, cfg, cfg.depth)
}

fn random_agent(rng: &mut impl Rng, sig: &Signature) -> Agent {
    let agents: Vec<&Agent> = sig.agents().iter().collect();
    agents[rng.gen_range(0..agents.len())].clone()
}

fn random_group(rng: &mut impl Rng, sig: &Signature) -> BTreeSet<Agent> {
    let agents: Vec<&Agent> = sig.agents().iter().collect();
    let mut group = BTreeSet::new();
    group.insert(agents[rng.gen_range(0..agents.len())].clone());
    for a in agents {
        if rng.gen_bool(0.4) {
            group.insert(a.clone());
        }
    }
    group
}

fn random_sentence_depth(
    rng: &mut impl Rng,
    sig: &Signature,
    cfg: &SentenceCfg,
    depth: usize,
) -> Sentence {
    if depth == 0 {
        return match rng.gen_range(0..6) {
            0 => Sentence::True,
            1 => Sentence::False,
            _ => Sentence::Atom(cfg.atoms[rng.gen_range(0..cfg.atoms.len())].clone()),
        };
    }
    let with_common = cfg.lang != Lang::L0;
    let pick = rng.gen_range(0..if with_common { 12 } else { 10 });
    match pick {
        0 | 1 => random_sentence_depth(rng, sig, cfg, 0),
        2 => Sentence::not(random_sentence_depth(rng, sig, cfg, depth - 1)),
        3 => Sentence::and(
            random_sentence_depth(rng, sig, cfg, depth - 1),
            random_sentence_depth(rng, sig, cfg, depth - 1),
        ),
        4 => Sentence::or(
            random_sentence_depth(rng, sig, cfg, depth - 1),
            random_sentence_depth(rng, sig, cfg, depth - 1),
        ),
        5 => Sentence::implies(
            random_sentence_depth(rng, sig, cfg, depth - 1),
            random_sentence_depth(rng, sig, cfg, depth - 1),
        ),
        6 => Sentence::Box(
            random_agent(rng, sig),
            Box::new(random_sentence_depth(rng, sig, cfg, depth - 1)),
        ),
        7 => Sentence::Diamond(
            random_agent(rng, sig),
            Box::new(random_sentence_depth(rng, sig, cfg, depth - 1)),
        ),
        8 => Sentence::DynBox(
            random_program(rng, sig, cfg, depth - 1),
            Box::new(random_sentence_depth(rng, sig, cfg, depth - 1)),
        ),
        9 => Sentence::DynDiamond(
            random_program(rng, sig, cfg, depth - 1),
            Box::new(random_sentence_depth(rng, sig, cfg, depth - 1)),
        ),
        10 => Sentence::CBox(
            random_group(rng, sig),
            Box::new(random_sentence_depth(rng, sig, cfg, depth - 1)),
        ),
        _ => Sentence::CDiamond(
            random_group(rng, sig),
            Box::new(random_sentence_depth(rng, sig, cfg, depth - 1)),
        ),
    }
}

pub fn random_program(
    rng: &mut impl Rng,
    sig: &Signature,
    cfg: &SentenceCfg,
    depth: usize,
) -> Program {
    let with_star = cfg.lang == Lang::Full;
    if depth == 0 {
        return random_basic(rng, sig, cfg, 0);
    }
    let pick = rng.gen_range(0..if with_star { 8 } else { 7 });
    match pick {
        0 => Program::Skip,
        1 => Program::Crash,
        2 | 3 => random_basic(rng, sig, cfg, depth - 1),
        4 => Program::seq(
            random_program(rng, sig, cfg, depth - 1),
            random_program(rng, sig, cfg, depth - 1),
        ),
        5 | 6 => Program::union(
            random_program(rng, sig, cfg, depth - 1),
            random_program(rng, sig, cfg, depth - 1),
        ),
        _ => Program::star(random_program(rng, sig, cfg, depth - 1)),
    }
}

fn random_basic(rng: &mut impl Rng, sig: &Signature, cfg: &SentenceCfg, depth: usize) -> Program {
    let index = rng.gen_range(0..sig.arity());
    let args = (0..sig.arity())
        .map(|_| random_sentence_depth(rng, sig, cfg, depth))
        .collect();
    Program::Basic(sig.type_name(index).to_string(), args)
}

#[derive(Debug, Clone)]
pub struct ActionCfg {
    pub max_len: usize,
    pub arg_depth: usize,
}

impl Default for ActionCfg {
    fn default() -> Self {
        ActionCfg {
            max_len: 2,
            arg_depth: 1,
        }
    }
}

/// A random simple action: a left-leaning sequence of basic actions.
pub fn random_simple_action(
    rng: &mut impl Rng,
    sig: &Signature,
    cfg: &ActionCfg,
) -> SimpleAction {
    let scfg = SentenceCfg {
        depth: cfg.arg_depth,
        lang: Lang::L1,
        ..SentenceCfg::default()
    };
    let len = rng.gen_range(1..=cfg.max_len.max(1));
    let mut action = random_basic_action(rng, sig, &scfg);
    for _ in 1..len {
        let next = random_basic_action(rng, sig, &scfg);
        action = if rng.gen_bool(0.8) {
            SimpleAction::seq(action, next)
        } else {
            SimpleAction::seq(next, action)
        };
    }
    action
}

fn random_basic_action(rng: &mut impl Rng, sig: &Signature, cfg: &SentenceCfg) -> SimpleAction {
    let index = rng.gen_range(0..sig.arity());
    let args = (0..sig.arity())
        .map(|_| random_sentence_depth(rng, sig, cfg, cfg.depth))
        .collect();
    SimpleAction::Basic(sig.type_name(index).to_string(), args)
}

// ---------------------------------------------------------------------------
// Random instances of the axiom schemes.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    AtomicPermanence,
    PartialFunctionality,
    ActionKnowledge,
    Skip,
    Crash,
    Composition,
    Choice,
    EpistemicMix,
    CommonNormality,
}

pub const ALL_SCHEMES: [Scheme; 9] = [
    Scheme::AtomicPermanence,
    Scheme::PartialFunctionality,
    Scheme::ActionKnowledge,
    Scheme::Skip,
    Scheme::Crash,
    Scheme::Composition,
    Scheme::Choice,
    Scheme::EpistemicMix,
    Scheme::CommonNormality,
];

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::AtomicPermanence => "atomic permanence",
            Scheme::PartialFunctionality => "partial functionality",
            Scheme::ActionKnowledge => "action-knowledge",
            Scheme::Skip => "skip",
            Scheme::Crash => "crash",
            Scheme::Composition => "composition",
            Scheme::Choice => "choice",
            Scheme::EpistemicMix => "epistemic mix",
            Scheme::CommonNormality => "common-knowledge normality",
        }
    }
}

/// A random instance of an axiom scheme over the signature; every instance
/// is valid.
pub fn scheme_instance<R: Rng>(
    rng: &mut R,
    sig: &Signature,
    scheme: Scheme,
    cfg: &SentenceCfg,
) -> Sentence {
    fn sub<R: Rng>(rng: &mut R, sig: &Signature, cfg: &SentenceCfg, depth: usize) -> Sentence {
        random_sentence_depth(rng, sig, cfg, depth)
    }
    match scheme {
        Scheme::AtomicPermanence => {
            let index = rng.gen_range(0..sig.arity());
            let args: Vec<Sentence> = (0..sig.arity()).map(|_| sub(rng, sig, cfg, cfg.depth)).collect();
            let p = Sentence::Atom(cfg.atoms[rng.gen_range(0..cfg.atoms.len())].clone());
            let action = Program::Basic(sig.type_name(index).to_string(), args.clone());
            Sentence::iff(
                Sentence::dyn_box(action, p.clone()),
                Sentence::implies(args[index].clone(), p),
            )
        }
        Scheme::PartialFunctionality => {
            let index = rng.gen_range(0..sig.arity());
            let args: Vec<Sentence> = (0..sig.arity()).map(|_| sub(rng, sig, cfg, cfg.depth)).collect();
            let chi = sub(rng, sig, cfg, cfg.depth);
            let action = Program::Basic(sig.type_name(index).to_string(), args.clone());
            Sentence::iff(
                Sentence::dyn_box(action.clone(), Sentence::not(chi.clone())),
                Sentence::implies(
                    args[index].clone(),
                    Sentence::not(Sentence::dyn_box(action, chi)),
                ),
            )
        }
        Scheme::ActionKnowledge => {
            let index = rng.gen_range(0..sig.arity());
            let args: Vec<Sentence> = (0..sig.arity()).map(|_| sub(rng, sig, cfg, cfg.depth)).collect();
            let phi = sub(rng, sig, cfg, cfg.depth);
            let agent = random_agent(rng, sig);
            let action = Program::Basic(sig.type_name(index).to_string(), args.clone());
            let conj = sig
                .type_successors(&agent, index)
                .into_iter()
                .map(|j| {
                    Sentence::Box(
                        agent.clone(),
                        Box::new(Sentence::dyn_box(
                            Program::Basic(sig.type_name(j).to_string(), args.clone()),
                            phi.clone(),
                        )),
                    )
                })
                .rev()
                .reduce(|rest, item| Sentence::and(item, rest))
                .unwrap_or(Sentence::True);
            Sentence::iff(
                Sentence::dyn_box(action, Sentence::Box(agent, Box::new(phi))),
                Sentence::implies(args[index].clone(), conj),
            )
        }
        Scheme::Skip => {
            let phi = sub(rng, sig, cfg, cfg.depth);
            Sentence::iff(Sentence::dyn_box(Program::Skip, phi.clone()), phi)
        }
        Scheme::Crash => Sentence::dyn_box(Program::Crash, Sentence::False),
        Scheme::Composition => {
            let pi = random_program(rng, sig, cfg, 1);
            let rho = random_program(rng, sig, cfg, 1);
            let phi = sub(rng, sig, cfg, cfg.depth);
            Sentence::iff(
                Sentence::dyn_box(pi.clone(), Sentence::dyn_box(rho.clone(), phi.clone())),
                Sentence::dyn_box(Program::seq(pi, rho), phi),
            )
        }
        Scheme::Choice => {
            let pi = random_program(rng, sig, cfg, 1);
            let rho = random_program(rng, sig, cfg, 1);
            let phi = sub(rng, sig, cfg, cfg.depth);
            Sentence::iff(
                Sentence::dyn_box(Program::union(pi.clone(), rho.clone()), phi.clone()),
                Sentence::and(
                    Sentence::dyn_box(pi, phi.clone()),
                    Sentence::dyn_box(rho, phi),
                ),
            )
        }
        Scheme::EpistemicMix => {
            let group = random_group(rng, sig);
            let phi = sub(rng, sig, cfg, cfg.depth);
            let ck = Sentence::CBox(group.clone(), Box::new(phi.clone()));
            let conj = group
                .iter()
                .map(|a| Sentence::Box(a.clone(), Box::new(ck.clone())))
                .rev()
                .reduce(|rest, item| Sentence::and(item, rest))
                .expect("group nonempty");
            Sentence::implies(ck, Sentence::and(phi, conj))
        }
        Scheme::CommonNormality => {
            let group = random_group(rng, sig);
            let phi = sub(rng, sig, cfg, cfg.depth);
            let psi = sub(rng, sig, cfg, cfg.depth);
            Sentence::implies(
                Sentence::CBox(
                    group.clone(),
                    Box::new(Sentence::implies(phi.clone(), psi.clone())),
                ),
                Sentence::implies(
                    Sentence::CBox(group.clone(), Box::new(phi)),
                    Sentence::CBox(group, Box::new(psi)),
                ),
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cn_has_the_documented_shape() {
        let m = gen_cn(2).unwrap();
        assert_eq!(m.state_count(), 10);
        // p fails exactly at a_1 and a_5.
        let p = m.atom_set("p");
        let expect: BTreeSet<usize> = (0..10)
            .filter(|&i| i != 0 && i != 4)
            .collect();
        assert_eq!(p, expect);
        // q holds exactly at a_9.
        assert_eq!(m.atom_set("q"), std::iter::once(8).collect());
        // Edges alternate and are symmetric: a_1 -A- a_2 -B- a_3.
        assert!(m.has_edge("A", 0, 1) && m.has_edge("A", 1, 0));
        assert!(m.has_edge("B", 1, 2) && m.has_edge("B", 2, 1));
        assert!(m.has_edge("B", 9, 0) && m.has_edge("B", 0, 9));
        // The documented pattern a_{in-1} -A- a_{in} -B- a_{in+1}
        // (state a_k lives at index k-1; indices wrap mod 10).
        let n = 2;
        for i in 1..=5usize {
            let lo = (i * n + 8) % 10;
            let mid = (i * n + 9) % 10;
            let hi = (i * n) % 10;
            assert!(m.has_edge("A", lo, mid), "A edge at i={i}");
            assert!(m.has_edge("B", mid, hi), "B edge at i={i}");
        }
    }

    #[test]
    fn gen_cn_rejects_odd_sizes() {
        assert!(gen_cn(0).is_err());
        assert!(gen_cn(3).is_err());
    }

    #[test]
    fn private_pair_matches_the_construction() {
        let lengths: BTreeMap<u32, u32> = std::iter::once((1, 1)).collect();
        let (s, t) = gen_private_pair(&lengths, 1).unwrap();
        assert_eq!(
            s.states().to_vec(),
            vec!["a".to_string(), "b".to_string(), "c1_1".to_string()]
        );
        // The variant has exactly one extra edge: a ->_A c1_1.
        assert!(!s.has_edge("A", 0, 2));
        assert!(t.has_edge("A", 0, 2));
        let s_edges: usize = ["A", "B"].iter().map(|a| s.edges(a).count()).sum();
        let t_edges: usize = ["A", "B"].iter().map(|a| t.edges(a).count()).sum();
        assert_eq!(t_edges, s_edges + 1);
        // p fails only at b.
        assert_eq!(
            s.atom_set("p"),
            [0usize, 2].into_iter().collect::<BTreeSet<_>>()
        );
    }

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(gen_cn(4).unwrap().to_json(), gen_cn(4).unwrap().to_json());
        let lengths: BTreeMap<u32, u32> = [(1, 2), (2, 3)].into_iter().collect();
        let (s1, t1) = gen_private_pair(&lengths, 1).unwrap();
        let (s2, t2) = gen_private_pair(&lengths, 1).unwrap();
        assert_eq!(s1.to_json(), s2.to_json());
        assert_eq!(t1.to_json(), t2.to_json());
        assert_eq!(gen_nofmp(3).to_json(), gen_nofmp(3).to_json());
    }
}
