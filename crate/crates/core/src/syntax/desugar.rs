//! Elimination of `skip`, `crash`, and program union under the dynamic
//! modalities, leaving only sequence trees of basic actions there.
//!
//! The transformation recurses on the number of `;` symbols and then on
//! size: `[pi ; rho]phi` is reduced to `[pi][rho]phi` first, which strictly
//! lowers the composition count, and every other clause shrinks the term.
//! Iteration has no finite expansion and is rejected.

use super::ast::{Program, Sentence};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DesugarError {
    #[error("program iteration cannot be desugared away")]
    Star,
}

/// Rewrites `s` to an equivalent sentence in which every program under a
/// dynamic modality is a sequence tree of basic actions (or a standalone
/// modality-free residue of `skip`/`crash`).
pub fn desugar(s: &Sentence) -> Result<Sentence, DesugarError> {
    Ok(match s {
        Sentence::True => Sentence::True,
        Sentence::False => Sentence::False,
        Sentence::Atom(p) => Sentence::Atom(p.clone()),
        Sentence::Not(x) => Sentence::not(desugar(x)?),
        Sentence::And(a, b) => Sentence::and(desugar(a)?, desugar(b)?),
        Sentence::Or(a, b) => Sentence::or(desugar(a)?, desugar(b)?),
        Sentence::Implies(a, b) => Sentence::implies(desugar(a)?, desugar(b)?),
        Sentence::Box(a, x) => Sentence::knows(a.clone(), desugar(x)?),
        Sentence::Diamond(a, x) => Sentence::poss(a.clone(), desugar(x)?),
        Sentence::CBox(c, x) => Sentence::CBox(c.clone(), Box::new(desugar(x)?)),
        Sentence::CDiamond(c, x) => Sentence::CDiamond(c.clone(), Box::new(desugar(x)?)),
        Sentence::DynBox(p, x) => desugar_box(p, x)?,
        Sentence::DynDiamond(p, x) => desugar_diamond(p, x)?,
        Sentence::Pre(_) => s.clone(),
    })
}

fn desugar_box(p: &Program, body: &Sentence) -> Result<Sentence, DesugarError> {
    Ok(match p {
        Program::Skip => desugar(body)?,
        Program::Crash => Sentence::True,
        Program::Basic(name, args) => {
            let args = args.iter().map(desugar).collect::<Result<Vec<_>, _>>()?;
            Sentence::dyn_box(Program::Basic(name.clone(), args), desugar(body)?)
        }
        Program::Union(a, b) => Sentence::and(
            desugar_box(a, body)?,
            desugar_box(b, body)?,
        ),
        Program::Seq(a, b) => {
            let inner = Sentence::dyn_box((**b).clone(), body.clone());
            desugar_box(a, &inner)?
        }
        Program::Star(_) => return Err(DesugarError::Star),
    })
}

fn desugar_diamond(p: &Program, body: &Sentence) -> Result<Sentence, DesugarError> {
    Ok(match p {
        Program::Skip => desugar(body)?,
        Program::Crash => Sentence::False,
        Program::Basic(name, args) => {
            let args = args.iter().map(desugar).collect::<Result<Vec<_>, _>>()?;
            Sentence::dyn_diamond(Program::Basic(name.clone(), args), desugar(body)?)
        }
        Program::Union(a, b) => Sentence::or(
            desugar_diamond(a, body)?,
            desugar_diamond(b, body)?,
        ),
        Program::Seq(a, b) => {
            let inner = Sentence::dyn_diamond((**b).clone(), body.clone());
            desugar_diamond(a, &inner)?
        }
        Program::Star(_) => return Err(DesugarError::Star),
    })
}

/// True when every program under a dynamic modality is a `Seq` tree of
/// basic actions, i.e. convertible to a `SimpleAction` without standalone
/// `skip`/`crash` extras.
pub fn is_desugared(s: &Sentence) -> bool {
    match s {
        Sentence::True | Sentence::False | Sentence::Atom(_) => true,
        Sentence::Not(x) => is_desugared(x),
        Sentence::And(a, b) | Sentence::Or(a, b) | Sentence::Implies(a, b) => {
            is_desugared(a) && is_desugared(b)
        }
        Sentence::Box(_, x) | Sentence::Diamond(_, x) => is_desugared(x),
        Sentence::CBox(_, x) | Sentence::CDiamond(_, x) => is_desugared(x),
        Sentence::DynBox(p, x) | Sentence::DynDiamond(p, x) => {
            program_is_basic_seq(p) && is_desugared(x)
        }
        Sentence::Pre(a) => program_is_basic_seq(&a.to_program()),
    }
}

fn program_is_basic_seq(p: &Program) -> bool {
    match p {
        Program::Basic(_, args) => args.iter().all(is_desugared),
        Program::Seq(a, b) => program_is_basic_seq(a) && program_is_basic_seq(b),
        _ => false,
    }
}
