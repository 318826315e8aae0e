//! Abstract syntax for sentences and programs.
//!
//! Sentences cover the full language (common knowledge `C_B`, dynamic
//! modalities over programs) plus the two extensions used internally by the
//! rewriter: first-class `Pre` applied to a simple action, and implication.
//! `Pre` never appears in user-facing input; the parser has no syntax for it.

use std::collections::BTreeSet;

/// Agents are plain identifiers drawn from the active signature.
pub type Agent = String;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sentence {
    True,
    False,
    Atom(String),
    Not(Box<Sentence>),
    And(Box<Sentence>, Box<Sentence>),
    Or(Box<Sentence>, Box<Sentence>),
    Implies(Box<Sentence>, Box<Sentence>),
    /// `K_A phi`
    Box(Agent, Box<Sentence>),
    /// `M_A phi`
    Diamond(Agent, Box<Sentence>),
    /// `C_{A,B} phi` — common knowledge; the agent set must be nonempty.
    CBox(BTreeSet<Agent>, Box<Sentence>),
    /// `E_{A,B} phi` — dual of `CBox`.
    CDiamond(BTreeSet<Agent>, Box<Sentence>),
    /// `[pi] phi`
    DynBox(Program, Box<Sentence>),
    /// `<pi> phi`
    DynDiamond(Program, Box<Sentence>),
    /// Precondition of a simple action; internal to rewriting.
    Pre(SimpleAction),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Program {
    Skip,
    Crash,
    /// A basic action `name(psi_1, ..., psi_n)`; carries one argument
    /// sentence per action type of the signature.
    Basic(String, Vec<Sentence>),
    Seq(Box<Program>, Box<Program>),
    Union(Box<Program>, Box<Program>),
    Star(Box<Program>),
}

/// A union- and star-free program: a binary `Seq` tree whose leaves are
/// basic actions. `Skip` and `Crash` are allowed only as standalone actions,
/// never under `Seq`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SimpleAction {
    Skip,
    Crash,
    Basic(String, Vec<Sentence>),
    Seq(Box<SimpleAction>, Box<SimpleAction>),
}

impl Sentence {
    pub fn not(s: Sentence) -> Sentence {
        Sentence::Not(Box::new(s))
    }
    pub fn and(a: Sentence, b: Sentence) -> Sentence {
        Sentence::And(Box::new(a), Box::new(b))
    }
    pub fn or(a: Sentence, b: Sentence) -> Sentence {
        Sentence::Or(Box::new(a), Box::new(b))
    }
    pub fn implies(a: Sentence, b: Sentence) -> Sentence {
        Sentence::Implies(Box::new(a), Box::new(b))
    }
    /// `(a -> b) & (b -> a)`
    pub fn iff(a: Sentence, b: Sentence) -> Sentence {
        Sentence::and(
            Sentence::implies(a.clone(), b.clone()),
            Sentence::implies(b, a),
        )
    }
    pub fn atom(name: impl Into<String>) -> Sentence {
        Sentence::Atom(name.into())
    }
    pub fn knows(agent: impl Into<Agent>, s: Sentence) -> Sentence {
        Sentence::Box(agent.into(), Box::new(s))
    }
    pub fn poss(agent: impl Into<Agent>, s: Sentence) -> Sentence {
        Sentence::Diamond(agent.into(), Box::new(s))
    }
    pub fn common<I: IntoIterator<Item = S>, S: Into<Agent>>(agents: I, s: Sentence) -> Sentence {
        Sentence::CBox(agents.into_iter().map(Into::into).collect(), Box::new(s))
    }
    pub fn common_poss<I: IntoIterator<Item = S>, S: Into<Agent>>(
        agents: I,
        s: Sentence,
    ) -> Sentence {
        Sentence::CDiamond(agents.into_iter().map(Into::into).collect(), Box::new(s))
    }
    pub fn dyn_box(p: Program, s: Sentence) -> Sentence {
        Sentence::DynBox(p, Box::new(s))
    }
    pub fn dyn_diamond(p: Program, s: Sentence) -> Sentence {
        Sentence::DynDiamond(p, Box::new(s))
    }

    /// True when no `Star` occurs anywhere (the common-knowledge fragment).
    pub fn is_star_free(&self) -> bool {
        self.programs().iter().all(|p| p.is_star_free())
    }

    /// Direct program children together with the programs inside `Pre`.
    fn programs(&self) -> Vec<Program> {
        let mut out = Vec::new();
        self.walk_programs(&mut |p| out.push(p.clone()));
        out
    }

    fn walk_programs(&self, f: &mut impl FnMut(&Program)) {
        match self {
            Sentence::True | Sentence::False | Sentence::Atom(_) => {}
            Sentence::Not(s) => s.walk_programs(f),
            Sentence::And(a, b) | Sentence::Or(a, b) | Sentence::Implies(a, b) => {
                a.walk_programs(f);
                b.walk_programs(f);
            }
            Sentence::Box(_, s) | Sentence::Diamond(_, s) => s.walk_programs(f),
            Sentence::CBox(_, s) | Sentence::CDiamond(_, s) => s.walk_programs(f),
            Sentence::DynBox(p, s) | Sentence::DynDiamond(p, s) => {
                f(p);
                p.walk_arg_programs(f);
                s.walk_programs(f);
            }
            Sentence::Pre(a) => {
                let p = a.to_program();
                f(&p);
                p.walk_arg_programs(f);
            }
        }
    }
}

impl Program {
    pub fn seq(a: Program, b: Program) -> Program {
        Program::Seq(Box::new(a), Box::new(b))
    }
    pub fn union(a: Program, b: Program) -> Program {
        Program::Union(Box::new(a), Box::new(b))
    }
    pub fn star(a: Program) -> Program {
        Program::Star(Box::new(a))
    }

    pub fn is_star_free(&self) -> bool {
        match self {
            Program::Skip | Program::Crash => true,
            Program::Basic(_, args) => args.iter().all(|s| s.is_star_free()),
            Program::Seq(a, b) | Program::Union(a, b) => a.is_star_free() && b.is_star_free(),
            Program::Star(_) => false,
        }
    }

    fn walk_arg_programs(&self, f: &mut impl FnMut(&Program)) {
        match self {
            Program::Skip | Program::Crash => {}
            Program::Basic(_, args) => {
                for a in args {
                    a.walk_programs(f);
                }
            }
            Program::Seq(a, b) | Program::Union(a, b) => {
                a.walk_arg_programs(f);
                b.walk_arg_programs(f);
            }
            Program::Star(a) => a.walk_arg_programs(f),
        }
    }
}

impl SimpleAction {
    pub fn basic(name: impl Into<String>, args: Vec<Sentence>) -> SimpleAction {
        SimpleAction::Basic(name.into(), args)
    }
    pub fn seq(a: SimpleAction, b: SimpleAction) -> SimpleAction {
        SimpleAction::Seq(Box::new(a), Box::new(b))
    }

    /// The number of basic-action leaves.
    pub fn len(&self) -> usize {
        match self {
            SimpleAction::Skip | SimpleAction::Crash => 0,
            SimpleAction::Basic(_, _) => 1,
            SimpleAction::Seq(a, b) => a.len() + b.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_program(&self) -> Program {
        match self {
            SimpleAction::Skip => Program::Skip,
            SimpleAction::Crash => Program::Crash,
            SimpleAction::Basic(name, args) => Program::Basic(name.clone(), args.clone()),
            SimpleAction::Seq(a, b) => Program::seq(a.to_program(), b.to_program()),
        }
    }

    /// Converts a program to a simple action. Fails on `Union` or `Star`
    /// anywhere, and on `Skip`/`Crash` under a `Seq`.
    pub fn from_program(p: &Program) -> Result<SimpleAction, NotSimple> {
        match p {
            Program::Skip => Ok(SimpleAction::Skip),
            Program::Crash => Ok(SimpleAction::Crash),
            _ => Self::from_seq_tree(p),
        }
    }

    fn from_seq_tree(p: &Program) -> Result<SimpleAction, NotSimple> {
        match p {
            Program::Basic(name, args) => Ok(SimpleAction::Basic(name.clone(), args.clone())),
            Program::Seq(a, b) => Ok(SimpleAction::seq(
                Self::from_seq_tree(a)?,
                Self::from_seq_tree(b)?,
            )),
            Program::Skip | Program::Crash => Err(NotSimple::NestedSkipOrCrash),
            Program::Union(_, _) => Err(NotSimple::Union),
            Program::Star(_) => Err(NotSimple::Star),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NotSimple {
    #[error("program contains a union and is not a simple action")]
    Union,
    #[error("program contains an iteration and is not a simple action")]
    Star,
    #[error("skip/crash may only stand alone in a simple action")]
    NestedSkipOrCrash,
}
