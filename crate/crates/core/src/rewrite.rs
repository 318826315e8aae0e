//! Rewriting to normal form: the nine-rule system, its decreasing
//! exponential measure, the normal-form grammar, and the closure set that
//! the decision procedure builds its atoms from.
//!
//! Terms here are desugared ground sentences over negation, conjunction,
//! implication, the modal operators, dynamic boxes over sequence trees of
//! basic actions, and first-class `Pre`. `true`/`false` are treated as
//! distinguished atom-like leaves, so the atomic box rule applies to them
//! and both count as normal forms.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;

use crate::canon::{CanonError, OmegaOracle};
use crate::syntax::{desugar, render_action, DesugarError, Program, Sentence, Signature, SimpleAction};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RewriteError {
    #[error("not a ground rewrite term: {0}")]
    NotRewriteTerm(String),
    #[error(transparent)]
    Canon(#[from] CanonError),
    #[error(transparent)]
    Desugar(#[from] DesugarError),
    #[error("rewriting did not finish within {fuel} steps")]
    FuelExhausted { fuel: usize },
    #[error("measure failed to decrease on rule {rule}")]
    MeasureIncreased { rule: &'static str },
    #[error("closure exceeded the size guard ({size} > {cap})")]
    ClosureTooLarge { size: usize, cap: usize },
    #[error("closure input must be a normal form")]
    NotNormalForm,
}

#[derive(Debug, Clone)]
pub struct RewriteConfig {
    /// Maximum number of rewrite steps before giving up; the system is
    /// terminating, so hitting this signals a bug.
    pub fuel: usize,
    /// Bit-length cap above which measures become overflow markers.
    pub measure_cap_bits: u64,
    /// Assert strict measure decrease on every step whose before/after
    /// measures are both concrete.
    pub check_measure: bool,
    /// Size guard for closure sets.
    pub closure_cap: usize,
}

impl Default for RewriteConfig {
    fn default() -> Self {
        RewriteConfig {
            fuel: 1_000_000,
            measure_cap_bits: 1 << 20,
            check_measure: true,
            closure_cap: 64,
        }
    }
}

/// Value of the decreasing interpretation, or an overflow marker once the
/// configured bit cap is exceeded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Measure {
    Value(BigUint),
    Overflow,
}

impl Measure {
    fn val(n: u64) -> Measure {
        Measure::Value(BigUint::from(n))
    }

    fn add(&self, other: &Measure, cap_bits: u64) -> Measure {
        match (self, other) {
            (Measure::Value(a), Measure::Value(b)) => {
                let sum = a + b;
                if sum.bits() > cap_bits {
                    Measure::Overflow
                } else {
                    Measure::Value(sum)
                }
            }
            _ => Measure::Overflow,
        }
    }

    fn add_const(&self, k: u64, cap_bits: u64) -> Measure {
        self.add(&Measure::val(k), cap_bits)
    }

    fn pow(&self, exp: &Measure, cap_bits: u64) -> Measure {
        match (self, exp) {
            (Measure::Value(base), Measure::Value(exp)) => {
                let exp_u64 = match u64::try_from(exp) {
                    Ok(e) => e,
                    Err(_) => return Measure::Overflow,
                };
                if base.bits().saturating_mul(exp_u64) > cap_bits {
                    return Measure::Overflow;
                }
                Measure::Value(base.pow(exp_u64 as u32))
            }
            _ => Measure::Overflow,
        }
    }

    pub fn lt(&self, other: &Measure) -> Option<bool> {
        match (self, other) {
            (Measure::Value(a), Measure::Value(b)) => Some(a < b),
            _ => None,
        }
    }
}

/// The interpretation: leaves are 3, negation and common knowledge add 1,
/// boxes add 2, implication adds 3, conjunction sums, a dynamic box is
/// base-to-the-power-body, `Pre` is transparent, a basic action is the sum
/// of its arguments plus one, and composition is `a^(b+1)`.
pub fn measure(t: &Sentence, cap_bits: u64) -> Result<Measure, RewriteError> {
    Ok(match t {
        Sentence::True | Sentence::False | Sentence::Atom(_) => Measure::val(3),
        Sentence::Not(x) => measure(x, cap_bits)?.add_const(1, cap_bits),
        Sentence::And(a, b) => measure(a, cap_bits)?.add(&measure(b, cap_bits)?, cap_bits),
        Sentence::Implies(a, b) => measure(a, cap_bits)?
            .add(&measure(b, cap_bits)?, cap_bits)
            .add_const(3, cap_bits),
        Sentence::Box(_, x) => measure(x, cap_bits)?.add_const(2, cap_bits),
        Sentence::CBox(_, x) => measure(x, cap_bits)?.add_const(1, cap_bits),
        Sentence::DynBox(p, x) => {
            let action = as_rewrite_action(p)?;
            measure_action(&action, cap_bits)?.pow(&measure(x, cap_bits)?, cap_bits)
        }
        Sentence::Pre(a) => measure_action(a, cap_bits)?,
        other => {
            return Err(RewriteError::NotRewriteTerm(format!(
                "{other} contains an abbreviation; expand first"
            )))
        }
    })
}

pub fn measure_action(a: &SimpleAction, cap_bits: u64) -> Result<Measure, RewriteError> {
    Ok(match a {
        SimpleAction::Skip | SimpleAction::Crash => {
            return Err(RewriteError::NotRewriteTerm(
                "skip/crash must be desugared away before rewriting".into(),
            ))
        }
        SimpleAction::Basic(_, args) => {
            let mut m = Measure::val(1);
            for arg in args {
                m = m.add(&measure(arg, cap_bits)?, cap_bits);
            }
            m
        }
        SimpleAction::Seq(x, y) => {
            let base = measure_action(x, cap_bits)?;
            let exp = measure_action(y, cap_bits)?.add_const(1, cap_bits);
            base.pow(&exp, cap_bits)
        }
    })
}

fn as_rewrite_action(p: &Program) -> Result<SimpleAction, RewriteError> {
    let a = SimpleAction::from_program(p)
        .map_err(|e| RewriteError::NotRewriteTerm(format!("{p}: {e}")))?;
    if matches!(a, SimpleAction::Skip | SimpleAction::Crash) {
        return Err(RewriteError::NotRewriteTerm(
            "skip/crash must be desugared away before rewriting".into(),
        ));
    }
    Ok(a)
}

/// Replaces the defined connectives (`|`, `M_A`, `E_B`, `<pi>`) by their
/// primitive forms; implication stays (the rewriter eliminates it).
pub fn expand_abbreviations(s: &Sentence) -> Sentence {
    match s {
        Sentence::True | Sentence::False | Sentence::Atom(_) => s.clone(),
        Sentence::Not(x) => Sentence::not(expand_abbreviations(x)),
        Sentence::And(a, b) => Sentence::and(expand_abbreviations(a), expand_abbreviations(b)),
        Sentence::Or(a, b) => Sentence::not(Sentence::and(
            Sentence::not(expand_abbreviations(a)),
            Sentence::not(expand_abbreviations(b)),
        )),
        Sentence::Implies(a, b) => {
            Sentence::implies(expand_abbreviations(a), expand_abbreviations(b))
        }
        Sentence::Box(agent, x) => Sentence::Box(agent.clone(), Box::new(expand_abbreviations(x))),
        Sentence::Diamond(agent, x) => Sentence::not(Sentence::Box(
            agent.clone(),
            Box::new(Sentence::not(expand_abbreviations(x))),
        )),
        Sentence::CBox(c, x) => Sentence::CBox(c.clone(), Box::new(expand_abbreviations(x))),
        Sentence::CDiamond(c, x) => Sentence::not(Sentence::CBox(
            c.clone(),
            Box::new(Sentence::not(expand_abbreviations(x))),
        )),
        Sentence::DynBox(p, x) => {
            Sentence::dyn_box(expand_program(p), expand_abbreviations(x))
        }
        Sentence::DynDiamond(p, x) => Sentence::not(Sentence::dyn_box(
            expand_program(p),
            Sentence::not(expand_abbreviations(x)),
        )),
        Sentence::Pre(a) => Sentence::Pre(expand_action(a)),
    }
}

fn expand_program(p: &Program) -> Program {
    match p {
        Program::Skip => Program::Skip,
        Program::Crash => Program::Crash,
        Program::Basic(name, args) => Program::Basic(
            name.clone(),
            args.iter().map(expand_abbreviations).collect(),
        ),
        Program::Seq(a, b) => Program::seq(expand_program(a), expand_program(b)),
        Program::Union(a, b) => Program::union(expand_program(a), expand_program(b)),
        Program::Star(a) => Program::star(expand_program(a)),
    }
}

fn expand_action(a: &SimpleAction) -> SimpleAction {
    match a {
        SimpleAction::Skip => SimpleAction::Skip,
        SimpleAction::Crash => SimpleAction::Crash,
        SimpleAction::Basic(name, args) => SimpleAction::Basic(
            name.clone(),
            args.iter().map(expand_abbreviations).collect(),
        ),
        SimpleAction::Seq(x, y) => SimpleAction::seq(expand_action(x), expand_action(y)),
    }
}

/// One leftmost-outermost rewrite step, or `None` on a normal form.
/// Reassociation is applied eagerly inside an action before the knowledge
/// and composition rules fire on its box.
pub fn rewrite_step(
    t: &Sentence,
    sig: &Signature,
) -> Result<Option<(Sentence, &'static str)>, RewriteError> {
    Ok(step_sentence(t, sig, true)?.map(|s| (s.term, s.rule)))
}

/// A step together with the rewritten redex pair. The interpretation is
/// strictly monotone in every argument, so a strict decrease on the redex
/// is a strict decrease on the whole term; the decrease check runs on the
/// (much smaller) redex.
struct Step {
    term: Sentence,
    rule: &'static str,
    redex_before: Sentence,
    redex_after: Sentence,
}

impl Step {
    fn at_root(track: bool, rule: &'static str, before: impl FnOnce() -> Sentence, after: Sentence) -> Step {
        Step {
            term: after.clone(),
            rule,
            redex_before: if track { before() } else { Sentence::True },
            redex_after: if track { after } else { Sentence::True },
        }
    }

    fn wrap(self, rebuild: impl FnOnce(Sentence) -> Sentence) -> Step {
        Step {
            term: rebuild(self.term),
            ..self
        }
    }
}

fn step_sentence(
    t: &Sentence,
    sig: &Signature,
    track: bool,
) -> Result<Option<Step>, RewriteError> {
    match t {
        Sentence::True | Sentence::False | Sentence::Atom(_) => Ok(None),
        Sentence::Implies(a, b) => Ok(Some(Step::at_root(
            track,
            "r1",
            || t.clone(),
            Sentence::not(Sentence::and((**a).clone(), Sentence::not((**b).clone()))),
        ))),
        Sentence::Not(x) => Ok(step_sentence(x, sig, track)?.map(|s| s.wrap(Sentence::not))),
        Sentence::And(a, b) => {
            if let Some(s) = step_sentence(a, sig, track)? {
                let b = (**b).clone();
                return Ok(Some(s.wrap(|a2| Sentence::and(a2, b))));
            }
            let a = (**a).clone();
            Ok(step_sentence(b, sig, track)?.map(|s| s.wrap(|b2| Sentence::and(a, b2))))
        }
        Sentence::Box(agent, x) => {
            let agent = agent.clone();
            Ok(step_sentence(x, sig, track)?
                .map(|s| s.wrap(|x2| Sentence::Box(agent, Box::new(x2)))))
        }
        Sentence::CBox(c, x) => {
            let c = c.clone();
            Ok(step_sentence(x, sig, track)?
                .map(|s| s.wrap(|x2| Sentence::CBox(c, Box::new(x2)))))
        }
        Sentence::Pre(action) => step_pre(action, sig, track),
        Sentence::DynBox(p, body) => step_dyn_box(p, body, sig, track),
        other => Err(RewriteError::NotRewriteTerm(format!(
            "{other} is not in the rewrite language"
        ))),
    }
}

fn step_pre(
    action: &SimpleAction,
    sig: &Signature,
    track: bool,
) -> Result<Option<Step>, RewriteError> {
    let before = || Sentence::Pre(action.clone());
    match action {
        SimpleAction::Basic(name, args) => {
            let i = sig
                .type_index(name)
                .ok_or_else(|| CanonError::UnknownType(name.clone()))?;
            Ok(Some(Step::at_root(track, "r2", before, args[i].clone())))
        }
        SimpleAction::Seq(x, y) => Ok(Some(Step::at_root(
            track,
            "r3",
            before,
            Sentence::and(
                Sentence::Pre((**x).clone()),
                Sentence::dyn_box(x.to_program(), Sentence::Pre((**y).clone())),
            ),
        ))),
        SimpleAction::Skip | SimpleAction::Crash => Err(RewriteError::NotRewriteTerm(
            "skip/crash must be desugared away before rewriting".into(),
        )),
    }
}

fn step_dyn_box(
    p: &Program,
    body: &Sentence,
    sig: &Signature,
    track: bool,
) -> Result<Option<Step>, RewriteError> {
    let action = as_rewrite_action(p)?;
    let whole = || Sentence::dyn_box(p.clone(), body.clone());
    match body {
        Sentence::True | Sentence::False | Sentence::Atom(_) => Ok(Some(Step::at_root(
            track,
            "r4",
            whole,
            Sentence::implies(Sentence::Pre(action), body.clone()),
        ))),
        Sentence::Not(y) => Ok(Some(Step::at_root(
            track,
            "r5",
            whole,
            Sentence::implies(
                Sentence::Pre(action),
                Sentence::not(Sentence::dyn_box(p.clone(), (**y).clone())),
            ),
        ))),
        Sentence::And(y, z) => Ok(Some(Step::at_root(
            track,
            "r6",
            whole,
            Sentence::and(
                Sentence::dyn_box(p.clone(), (**y).clone()),
                Sentence::dyn_box(p.clone(), (**z).clone()),
            ),
        ))),
        Sentence::Box(agent, y) => {
            if let Some(step) = reassociate_step(&action, track)? {
                let body = body.clone();
                return Ok(Some(
                    step.rebuild_action(move |a2| Sentence::dyn_box(a2.to_program(), body)),
                ));
            }
            let oracle = OmegaOracle::new(sig);
            let mut successors: Vec<SimpleAction> =
                oracle.successors(&action, agent)?.into_iter().collect();
            successors.sort_by_key(render_action);
            let conj = successors
                .into_iter()
                .map(|beta| {
                    Sentence::Box(
                        agent.clone(),
                        Box::new(Sentence::dyn_box(beta.to_program(), (**y).clone())),
                    )
                })
                .rev()
                .fold(None, |acc, item| match acc {
                    None => Some(item),
                    Some(rest) => Some(Sentence::and(item, rest)),
                })
                .unwrap_or(Sentence::True);
            Ok(Some(Step::at_root(
                track,
                "r7",
                whole,
                Sentence::implies(Sentence::Pre(action), conj),
            )))
        }
        Sentence::DynBox(q, z) => {
            if let Some(step) = reassociate_step(&action, track)? {
                let body = body.clone();
                return Ok(Some(
                    step.rebuild_action(move |a2| Sentence::dyn_box(a2.to_program(), body)),
                ));
            }
            Ok(Some(Step::at_root(
                track,
                "r8",
                whole,
                Sentence::dyn_box(Program::seq(p.clone(), q.clone()), (**z).clone()),
            )))
        }
        Sentence::CBox(_, _) => {
            // `[alpha] C_B psi` has no root rule: it is the normal shape.
            // Redexes may remain inside the action or the body.
            if let Some(step) = step_action(&action, sig, track)? {
                let body = body.clone();
                return Ok(Some(
                    step.rebuild_action(move |a2| Sentence::dyn_box(a2.to_program(), body)),
                ));
            }
            let p = p.clone();
            Ok(step_sentence(body, sig, track)?
                .map(|s| s.wrap(|b2| Sentence::dyn_box(p, b2))))
        }
        // Implication or a nested `Pre` in the body: reduce inside.
        Sentence::Implies(_, _) | Sentence::Pre(_) => {
            let p = p.clone();
            Ok(step_sentence(body, sig, track)?
                .map(|s| s.wrap(|b2| Sentence::dyn_box(p, b2))))
        }
        other => Err(RewriteError::NotRewriteTerm(format!(
            "{other} is not in the rewrite language"
        ))),
    }
}

/// A step inside an action: carries the rebuilt action alongside the
/// sentence-level redex information.
struct ActionStep {
    action: SimpleAction,
    rule: &'static str,
    redex_before: Sentence,
    redex_after: Sentence,
}

impl ActionStep {
    fn rebuild_action(self, f: impl FnOnce(SimpleAction) -> Sentence) -> Step {
        Step {
            term: f(self.action),
            rule: self.rule,
            redex_before: self.redex_before,
            redex_after: self.redex_after,
        }
    }

    fn wrap_action(self, f: impl FnOnce(SimpleAction) -> SimpleAction) -> ActionStep {
        ActionStep {
            action: f(self.action),
            ..self
        }
    }
}

/// Leftmost-outermost right-nested composition, rotated once. The redex
/// pair is reported through `Pre`, whose interpretation is transparent.
fn reassociate_step(a: &SimpleAction, track: bool) -> Result<Option<ActionStep>, RewriteError> {
    Ok(match a {
        SimpleAction::Seq(x, y) => {
            if let SimpleAction::Seq(y1, y2) = &**y {
                let rotated = SimpleAction::seq(
                    SimpleAction::seq((**x).clone(), (**y1).clone()),
                    (**y2).clone(),
                );
                return Ok(Some(ActionStep {
                    rule: "r9",
                    redex_before: if track {
                        Sentence::Pre(a.clone())
                    } else {
                        Sentence::True
                    },
                    redex_after: if track {
                        Sentence::Pre(rotated.clone())
                    } else {
                        Sentence::True
                    },
                    action: rotated,
                }));
            }
            if let Some(step) = reassociate_step(x, track)? {
                let y = (**y).clone();
                return Ok(Some(step.wrap_action(|x2| SimpleAction::seq(x2, y))));
            }
            let x = (**x).clone();
            reassociate_step(y, track)?.map(|step| step.wrap_action(|y2| SimpleAction::seq(x, y2)))
        }
        _ => None,
    })
}

/// Leftmost-outermost redex inside an action: reassociation first at each
/// node, then argument sentences.
fn step_action(
    a: &SimpleAction,
    sig: &Signature,
    track: bool,
) -> Result<Option<ActionStep>, RewriteError> {
    match a {
        SimpleAction::Skip | SimpleAction::Crash => Ok(None),
        SimpleAction::Basic(name, args) => {
            for (i, arg) in args.iter().enumerate() {
                if let Some(s) = step_sentence(arg, sig, track)? {
                    let mut args2 = args.clone();
                    args2[i] = s.term;
                    return Ok(Some(ActionStep {
                        action: SimpleAction::Basic(name.clone(), args2),
                        rule: s.rule,
                        redex_before: s.redex_before,
                        redex_after: s.redex_after,
                    }));
                }
            }
            Ok(None)
        }
        SimpleAction::Seq(x, y) => {
            if let SimpleAction::Seq(y1, y2) = &**y {
                let rotated = SimpleAction::seq(
                    SimpleAction::seq((**x).clone(), (**y1).clone()),
                    (**y2).clone(),
                );
                return Ok(Some(ActionStep {
                    rule: "r9",
                    redex_before: if track {
                        Sentence::Pre(a.clone())
                    } else {
                        Sentence::True
                    },
                    redex_after: if track {
                        Sentence::Pre(rotated.clone())
                    } else {
                        Sentence::True
                    },
                    action: rotated,
                }));
            }
            if let Some(step) = step_action(x, sig, track)? {
                let y = (**y).clone();
                return Ok(Some(step.wrap_action(|x2| SimpleAction::seq(x2, y))));
            }
            let x = (**x).clone();
            Ok(step_action(y, sig, track)?.map(|step| step.wrap_action(|y2| SimpleAction::seq(x, y2))))
        }
    }
}

/// Fully rewrites `phi`: desugars, expands abbreviations, then applies
/// rewrite steps to a fixpoint, checking strict measure decrease along the
/// way when configured.
pub fn normalize(
    phi: &Sentence,
    sig: &Signature,
    cfg: &RewriteConfig,
) -> Result<Sentence, RewriteError> {
    Ok(normalize_with_trace(phi, sig, cfg)?.0)
}

pub fn normalize_with_trace(
    phi: &Sentence,
    sig: &Signature,
    cfg: &RewriteConfig,
) -> Result<(Sentence, Vec<(&'static str, Sentence)>), RewriteError> {
    let mut current = expand_abbreviations(&desugar(phi)?);
    let mut trace = Vec::new();
    let mut fuel = cfg.fuel;
    while let Some(step) = step_sentence(&current, sig, cfg.check_measure)? {
        if fuel == 0 {
            return Err(RewriteError::FuelExhausted { fuel: cfg.fuel });
        }
        fuel -= 1;
        if cfg.check_measure {
            // Strict monotonicity lifts a redex-level decrease to the whole
            // term, so only the redex pair is measured.
            let before = measure(&step.redex_before, cfg.measure_cap_bits)?;
            let after = measure(&step.redex_after, cfg.measure_cap_bits)?;
            match after.lt(&before) {
                Some(true) => {}
                Some(false) => {
                    return Err(RewriteError::MeasureIncreased { rule: step.rule })
                }
                None => {
                    log::debug!(
                        "measure overflow; skipping decrease check for {}",
                        step.rule
                    );
                }
            }
        }
        trace.push((step.rule, step.term.clone()));
        current = step.term;
    }
    Ok((current, trace))
}

/// Grammar recognizer for normal forms, independent of the step function:
/// boolean and modal combinations of atoms (with `true`/`false` admitted as
/// leaves), plus dynamic boxes whose body is a common-knowledge sentence
/// and whose action is a left-nested composition of basic actions with
/// normal-form arguments.
pub fn is_normal_form(t: &Sentence) -> bool {
    match t {
        Sentence::True | Sentence::False | Sentence::Atom(_) => true,
        Sentence::Not(x) => is_normal_form(x),
        Sentence::And(a, b) => is_normal_form(a) && is_normal_form(b),
        Sentence::Box(_, x) => is_normal_form(x),
        Sentence::CBox(_, x) => is_normal_form(x),
        Sentence::DynBox(p, body) => {
            matches!(**body, Sentence::CBox(_, _)) && is_normal_form(body) && nf_action(p)
        }
        _ => false,
    }
}

fn nf_action(p: &Program) -> bool {
    match p {
        Program::Basic(_, args) => args.iter().all(is_normal_form),
        Program::Seq(a, b) => {
            nf_action(a) && matches!(**b, Program::Basic(_, _)) && nf_action(b)
        }
        _ => false,
    }
}

/// Whether no rewrite rule applies; agrees with [`is_normal_form`] on
/// ground rewrite terms.
pub fn is_irreducible(t: &Sentence, sig: &Signature) -> Result<bool, RewriteError> {
    Ok(step_sentence(t, sig, false)?.is_none())
}

/// All subsentences of `s` including itself, and the sentences inside any
/// actions occurring in it.
pub fn subsentences(s: &Sentence) -> BTreeSet<Sentence> {
    let mut out = BTreeSet::new();
    collect_subsentences(s, &mut out);
    out
}

fn collect_subsentences(s: &Sentence, out: &mut BTreeSet<Sentence>) {
    if !out.insert(s.clone()) {
        return;
    }
    match s {
        Sentence::True | Sentence::False | Sentence::Atom(_) => {}
        Sentence::Not(x) => collect_subsentences(x, out),
        Sentence::And(a, b) | Sentence::Or(a, b) | Sentence::Implies(a, b) => {
            collect_subsentences(a, out);
            collect_subsentences(b, out);
        }
        Sentence::Box(_, x) | Sentence::Diamond(_, x) => collect_subsentences(x, out),
        Sentence::CBox(_, x) | Sentence::CDiamond(_, x) => collect_subsentences(x, out),
        Sentence::DynBox(p, x) | Sentence::DynDiamond(p, x) => {
            collect_program_sentences(p, out);
            collect_subsentences(x, out);
        }
        Sentence::Pre(a) => collect_program_sentences(&a.to_program(), out),
    }
}

fn collect_program_sentences(p: &Program, out: &mut BTreeSet<Sentence>) {
    match p {
        Program::Skip | Program::Crash => {}
        Program::Basic(_, args) => {
            for a in args {
                collect_subsentences(a, out);
            }
        }
        Program::Seq(a, b) | Program::Union(a, b) => {
            collect_program_sentences(a, out);
            collect_program_sentences(b, out);
        }
        Program::Star(a) => collect_program_sentences(a, out),
    }
}

/// Sentences occurring in an action (its arguments and their
/// subsentences).
pub fn action_sentences(a: &SimpleAction) -> BTreeSet<Sentence> {
    let mut out = BTreeSet::new();
    collect_program_sentences(&a.to_program(), &mut out);
    out
}

/// The closure of a normal-form sentence: a finite, subsentence-closed set
/// of normal forms containing it, closed so that every boxed
/// common-knowledge member brings in the boxed forms at all reachable
/// actions, their preconditions, and their one-step unfoldings.
pub fn closure(
    phi: &Sentence,
    sig: &Signature,
    cfg: &RewriteConfig,
) -> Result<BTreeSet<Sentence>, RewriteError> {
    if !is_normal_form(phi) {
        return Err(RewriteError::NotNormalForm);
    }
    let mut memo: BTreeMap<Sentence, BTreeSet<Sentence>> = BTreeMap::new();
    let out = closure_rec(phi, sig, cfg, &mut memo)?;
    Ok(out)
}

fn closure_rec(
    phi: &Sentence,
    sig: &Signature,
    cfg: &RewriteConfig,
    memo: &mut BTreeMap<Sentence, BTreeSet<Sentence>>,
) -> Result<BTreeSet<Sentence>, RewriteError> {
    if let Some(hit) = memo.get(phi) {
        return Ok(hit.clone());
    }
    let mut out: BTreeSet<Sentence> = BTreeSet::new();
    match phi {
        Sentence::True | Sentence::False | Sentence::Atom(_) => {
            out.insert(phi.clone());
        }
        Sentence::Not(x) => {
            out.extend(closure_rec(x, sig, cfg, memo)?);
            out.insert(phi.clone());
        }
        Sentence::And(a, b) => {
            out.extend(closure_rec(a, sig, cfg, memo)?);
            out.extend(closure_rec(b, sig, cfg, memo)?);
            out.insert(phi.clone());
        }
        Sentence::Box(_, x) => {
            out.extend(closure_rec(x, sig, cfg, memo)?);
            out.insert(phi.clone());
        }
        Sentence::CBox(group, x) => {
            out.extend(closure_rec(x, sig, cfg, memo)?);
            out.insert(phi.clone());
            for agent in group {
                out.insert(Sentence::Box(agent.clone(), Box::new(phi.clone())));
            }
        }
        Sentence::DynBox(p, body) => {
            let Sentence::CBox(group, inner) = &**body else {
                return Err(RewriteError::NotNormalForm);
            };
            let alpha = as_rewrite_action(p)?;
            let oracle = OmegaOracle::new(sig);
            let reachable = oracle.reachable(&alpha, group)?;
            for beta in &reachable {
                let boxed_ck =
                    Sentence::dyn_box(beta.to_program(), (**body).clone());
                for agent in group {
                    let guarded = Sentence::Box(agent.clone(), Box::new(boxed_ck.clone()));
                    out.extend(subsentences(&guarded));
                }
                for psi in action_sentences(beta) {
                    out.extend(closure_rec(&psi, sig, cfg, memo)?);
                }
                let pre_nf = normalize(&Sentence::Pre(beta.clone()), sig, cfg)?;
                out.extend(closure_rec(&pre_nf, sig, cfg, memo)?);
                let unfold_nf = normalize(
                    &Sentence::dyn_box(beta.to_program(), (**inner).clone()),
                    sig,
                    cfg,
                )?;
                out.extend(closure_rec(&unfold_nf, sig, cfg, memo)?);
            }
            out.extend(closure_rec(body, sig, cfg, memo)?);
        }
        _ => return Err(RewriteError::NotNormalForm),
    }
    if out.len() > cfg.closure_cap {
        return Err(RewriteError::ClosureTooLarge {
            size: out.len(),
            cap: cfg.closure_cap,
        });
    }
    memo.insert(phi.clone(), out.clone());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{
        pri_signature, pub_signature, random_model, random_sentence, Lang, ModelCfg, SentenceCfg,
    };
    use crate::semantics::eval_sentence;
    use crate::syntax::{parse_sentence, render};
    use num_bigint::BigUint;
    use rand::{Rng, SeedableRng};

    fn val(m: &Measure) -> &BigUint {
        match m {
            Measure::Value(v) => v,
            Measure::Overflow => panic!("unexpected overflow"),
        }
    }

    #[test]
    fn measure_of_leaves_and_negation() {
        let cap = 1 << 20;
        assert_eq!(val(&measure(&Sentence::atom("p"), cap).unwrap()), &BigUint::from(3u32));
        assert_eq!(
            val(&measure(&Sentence::not(Sentence::atom("p")), cap).unwrap()),
            &BigUint::from(4u32)
        );
        assert_eq!(val(&measure(&Sentence::True, cap).unwrap()), &BigUint::from(3u32));
    }

    #[test]
    fn measure_of_a_boxed_atom() {
        // One action type: the action measures 3 + 1 = 4, and the box is
        // 4^3 = 64.
        let sig = pub_signature(&["A", "B"]);
        let s = parse_sentence("[Pub(p)]q", &sig).unwrap();
        assert_eq!(val(&measure(&s, 1 << 20).unwrap()), &BigUint::from(64u32));
    }

    #[test]
    fn measure_overflows_to_a_marker() {
        let sig = pub_signature(&["A", "B"]);
        let mut s = parse_sentence("[Pub(p)]q", &sig).unwrap();
        for _ in 0..8 {
            s = Sentence::dyn_box(
                crate::syntax::Program::Basic("Pub".into(), vec![s.clone()]),
                s,
            );
        }
        assert_eq!(measure(&s, 256).unwrap(), Measure::Overflow);
    }

    #[test]
    fn boxed_atom_rewrites_through_the_expected_trace() {
        let sig = pub_signature(&["A", "B"]);
        let s = parse_sentence("[Pub(p)]q", &sig).unwrap();
        let (nf, trace) = normalize_with_trace(&s, &sig, &RewriteConfig::default()).unwrap();
        let rules: Vec<&str> = trace.iter().map(|(r, _)| *r).collect();
        assert_eq!(rules, vec!["r4", "r1", "r2"]);
        assert_eq!(render(&nf), "~(p & ~q)");
    }

    #[test]
    fn composition_rule_associates_to_the_left() {
        let sig = pub_signature(&["A", "B"]);
        let s = parse_sentence("[Pub(p)][Pub(q)][Pub(r)] C_{A,B} t", &sig).unwrap();
        let nf = normalize(&s, &sig, &RewriteConfig::default()).unwrap();
        assert!(is_normal_form(&nf));
        assert_eq!(render(&nf), "[Pub(p) ; Pub(q) ; Pub(r)]C_{A,B} t");
    }

    #[test]
    fn modal_sentences_are_already_normal() {
        let sig = pub_signature(&["A", "B"]);
        let s = parse_sentence("K_A p", &sig).unwrap();
        assert_eq!(normalize(&s, &sig, &RewriteConfig::default()).unwrap(), s);
        assert!(is_normal_form(&s));
    }

    #[test]
    fn star_free_basic_sentences_lose_their_modalities() {
        // Without common knowledge in scope, no dynamic modality survives.
        let sig = pri_signature(&["A"], &["A", "B"]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let cfg = SentenceCfg { depth: 3, lang: Lang::L0, ..SentenceCfg::default() };
        for _ in 0..300 {
            let s = random_sentence(&mut rng, &sig, &cfg);
            let nf = normalize(&s, &sig, &RewriteConfig::default()).unwrap();
            assert!(is_normal_form(&nf), "{s} -> {nf}");
            let mut has_dynamic = false;
            let mut stack = vec![nf.clone()];
            while let Some(t) = stack.pop() {
                match t {
                    Sentence::DynBox(_, _) | Sentence::DynDiamond(_, _) => has_dynamic = true,
                    Sentence::Not(x) | Sentence::Box(_, x) | Sentence::CBox(_, x) => {
                        stack.push(*x)
                    }
                    Sentence::And(a, b) => {
                        stack.push(*a);
                        stack.push(*b);
                    }
                    _ => {}
                }
            }
            assert!(!has_dynamic, "{s} -> {nf}");
        }
    }

    /// Random ground terms of the rewrite language itself (with Pre and
    /// implication), not filtered through desugaring.
    fn random_term(rng: &mut impl Rng, sig: &crate::syntax::Signature, depth: usize) -> Sentence {
        if depth == 0 {
            return match rng.gen_range(0..4) {
                0 => Sentence::True,
                1 => Sentence::False,
                _ => Sentence::atom(if rng.gen_bool(0.5) { "p" } else { "q" }),
            };
        }
        match rng.gen_range(0..9) {
            0 => Sentence::not(random_term(rng, sig, depth - 1)),
            1 => Sentence::and(
                random_term(rng, sig, depth - 1),
                random_term(rng, sig, depth - 1),
            ),
            2 => Sentence::implies(
                random_term(rng, sig, depth - 1),
                random_term(rng, sig, depth - 1),
            ),
            3 => Sentence::Box("A".to_string(), Box::new(random_term(rng, sig, depth - 1))),
            4 => Sentence::CBox(
                ["A".to_string(), "B".to_string()].into_iter().collect(),
                Box::new(random_term(rng, sig, depth - 1)),
            ),
            5 | 6 => Sentence::dyn_box(
                random_action(rng, sig, depth - 1).to_program(),
                random_term(rng, sig, depth - 1),
            ),
            _ => Sentence::Pre(random_action(rng, sig, depth - 1)),
        }
    }

    fn random_action(
        rng: &mut impl Rng,
        sig: &crate::syntax::Signature,
        depth: usize,
    ) -> SimpleAction {
        if depth == 0 || rng.gen_bool(0.6) {
            let index = rng.gen_range(0..sig.arity());
            let args = (0..sig.arity())
                .map(|_| random_term(rng, sig, depth.saturating_sub(1)))
                .collect();
            SimpleAction::Basic(sig.type_name(index).to_string(), args)
        } else {
            SimpleAction::seq(
                random_action(rng, sig, depth - 1),
                random_action(rng, sig, depth - 1),
            )
        }
    }

    #[test]
    fn irreducibility_agrees_with_the_grammar() {
        let sig = pri_signature(&["A"], &["A", "B"]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(71);
        for _ in 0..10_000 {
            let t = random_term(&mut rng, &sig, 3);
            assert_eq!(
                is_irreducible(&t, &sig).unwrap(),
                is_normal_form(&t),
                "term {t}"
            );
        }
    }

    #[test]
    fn normalization_preserves_truth_sets() {
        let sig = pri_signature(&["A"], &["A", "B"]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(73);
        let scfg = SentenceCfg { depth: 3, lang: Lang::L1, ..SentenceCfg::default() };
        let mcfg = ModelCfg::default();
        for _ in 0..100 {
            let s = random_sentence(&mut rng, &sig, &scfg);
            let nf = normalize(&s, &sig, &RewriteConfig::default()).unwrap();
            let model = random_model(&mut rng, &sig, &mcfg);
            let before = eval_sentence(&model, &s, &sig, 0).unwrap().set;
            let after = eval_sentence(&model, &nf, &sig, 0).unwrap().set;
            assert_eq!(before, after, "{s} vs {nf}");
        }
    }

    #[test]
    fn closure_of_an_atom_is_a_singleton() {
        let sig = pub_signature(&["A", "B"]);
        let p = Sentence::atom("p");
        let delta = closure(&p, &sig, &RewriteConfig::default()).unwrap();
        assert_eq!(delta, std::iter::once(p).collect());
    }

    #[test]
    fn closure_of_common_knowledge_unfolds_one_level() {
        let sig = pub_signature(&["A", "B"]);
        let phi = parse_sentence("C_{A} p", &sig).unwrap();
        let delta = closure(&phi, &sig, &RewriteConfig::default()).unwrap();
        assert!(delta.contains(&phi));
        assert!(delta.contains(&Sentence::atom("p")));
        assert!(delta.contains(&Sentence::Box("A".into(), Box::new(phi.clone()))));
    }

    #[test]
    fn closure_laws_hold_on_samples() {
        let sig = pri_signature(&["A"], &["A", "B"]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(79);
        let scfg = SentenceCfg { depth: 3, lang: Lang::L1, ..SentenceCfg::default() };
        let cfg = RewriteConfig::default();
        let mut sampled = 0;
        while sampled < 60 {
            let raw = random_sentence(&mut rng, &sig, &scfg);
            let nf = normalize(&raw, &sig, &cfg).unwrap();
            let delta = match closure(&nf, &sig, &cfg) {
                Ok(d) => d,
                Err(RewriteError::ClosureTooLarge { .. }) => continue,
                Err(e) => panic!("{e}"),
            };
            sampled += 1;
            assert!(delta.contains(&nf), "{nf}");
            for member in &delta {
                assert!(is_normal_form(member), "{member} in closure of {nf}");
                // Subsentence closure.
                for sub in subsentences(member) {
                    assert!(delta.contains(&sub), "{sub} missing from closure of {nf}");
                }
                // Monotonicity: members' closures stay inside.
                for inner in closure(member, &sig, &cfg).unwrap() {
                    assert!(delta.contains(&inner), "{inner} missing from closure of {nf}");
                }
                // The boxed-common-knowledge condition.
                if let Sentence::DynBox(p, body) = member {
                    let Sentence::CBox(group, inner) = &**body else {
                        panic!("boxed member must carry common knowledge")
                    };
                    let alpha = SimpleAction::from_program(p).unwrap();
                    let oracle = OmegaOracle::new(&sig);
                    for beta in oracle.reachable(&alpha, group).unwrap() {
                        let boxed = Sentence::dyn_box(beta.to_program(), (**body).clone());
                        assert!(delta.contains(&boxed));
                        for agent in group {
                            assert!(delta.contains(&Sentence::Box(
                                agent.clone(),
                                Box::new(boxed.clone())
                            )));
                        }
                        let pre_nf = normalize(&Sentence::Pre(beta.clone()), &sig, &cfg).unwrap();
                        assert!(delta.contains(&pre_nf));
                        let unfold = normalize(
                            &Sentence::dyn_box(beta.to_program(), (**inner).clone()),
                            &sig,
                            &cfg,
                        )
                        .unwrap();
                        assert!(delta.contains(&unfold));
                    }
                }
            }
        }
    }

    #[test]
    fn closure_rejects_non_normal_input() {
        let sig = pub_signature(&["A", "B"]);
        let s = parse_sentence("[Pub(p)]q", &sig).unwrap();
        assert_eq!(
            closure(&s, &sig, &RewriteConfig::default()).unwrap_err(),
            RewriteError::NotNormalForm
        );
    }

    #[test]
    fn closure_size_guard_is_explicit() {
        let sig = pri_signature(&["A"], &["A", "B"]);
        let phi = parse_sentence(
            "[Pri(p & K_A q, M_B p)] C_{A,B} (K_A p & K_B q)",
            &sig,
        )
        .unwrap();
        let nf = normalize(&phi, &sig, &RewriteConfig::default()).unwrap();
        let tight = RewriteConfig { closure_cap: 4, ..RewriteConfig::default() };
        assert!(matches!(
            closure(&nf, &sig, &tight),
            Err(RewriteError::ClosureTooLarge { .. })
        ));
    }
}
