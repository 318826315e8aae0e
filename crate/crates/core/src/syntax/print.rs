//! Pretty printer. `render` emits minimal parentheses and re-parses to the
//! same tree; `render_full` parenthesizes every composite node.
//!
//! `Pre(..)` terms are printed for traces and diagnostics but have no
//! concrete input syntax.

use std::fmt::Write;

use super::ast::{Program, Sentence, SimpleAction};

// Sentence precedence: -> is 1 (right-assoc), | is 2, & is 3, unary 4,
// leaves 5. Program precedence: + is 1, ; is 2, * is 3, leaves 4.

pub fn render(s: &Sentence) -> String {
    let mut out = String::new();
    sentence(&mut out, s, 0, false);
    out
}

pub fn render_full(s: &Sentence) -> String {
    let mut out = String::new();
    sentence(&mut out, s, 0, true);
    out
}

pub fn render_program(p: &Program) -> String {
    let mut out = String::new();
    program(&mut out, p, 0, false);
    out
}

pub fn render_program_full(p: &Program) -> String {
    let mut out = String::new();
    program(&mut out, p, 0, true);
    out
}

pub fn render_action(a: &SimpleAction) -> String {
    render_program(&a.to_program())
}

fn agent_set(out: &mut String, agents: &std::collections::BTreeSet<String>) {
    out.push('{');
    for (i, a) in agents.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(a);
    }
    out.push('}');
}

fn sentence(out: &mut String, s: &Sentence, prec: u8, full: bool) {
    let own = match s {
        Sentence::Implies(_, _) => 1,
        Sentence::Or(_, _) => 2,
        Sentence::And(_, _) => 3,
        Sentence::Not(_)
        | Sentence::Box(_, _)
        | Sentence::Diamond(_, _)
        | Sentence::CBox(_, _)
        | Sentence::CDiamond(_, _)
        | Sentence::DynBox(_, _)
        | Sentence::DynDiamond(_, _) => 4,
        _ => 5,
    };
    let parens = if full { own < 5 } else { own < prec };
    if parens {
        out.push('(');
    }
    match s {
        Sentence::True => out.push_str("true"),
        Sentence::False => out.push_str("false"),
        Sentence::Atom(p) => out.push_str(p),
        Sentence::Not(x) => {
            out.push('~');
            sentence(out, x, 4, full);
        }
        Sentence::And(a, b) => {
            sentence(out, a, 3, full);
            out.push_str(" & ");
            sentence(out, b, 4, full);
        }
        Sentence::Or(a, b) => {
            sentence(out, a, 2, full);
            out.push_str(" | ");
            sentence(out, b, 3, full);
        }
        Sentence::Implies(a, b) => {
            sentence(out, a, 2, full);
            out.push_str(" -> ");
            sentence(out, b, 1, full);
        }
        Sentence::Box(a, x) => {
            let _ = write!(out, "K_{a} ");
            sentence(out, x, 4, full);
        }
        Sentence::Diamond(a, x) => {
            let _ = write!(out, "M_{a} ");
            sentence(out, x, 4, full);
        }
        Sentence::CBox(agents, x) => {
            out.push_str("C_");
            agent_set(out, agents);
            out.push(' ');
            sentence(out, x, 4, full);
        }
        Sentence::CDiamond(agents, x) => {
            out.push_str("E_");
            agent_set(out, agents);
            out.push(' ');
            sentence(out, x, 4, full);
        }
        Sentence::DynBox(p, x) => {
            out.push('[');
            program(out, p, 0, full);
            out.push(']');
            sentence(out, x, 4, full);
        }
        Sentence::DynDiamond(p, x) => {
            out.push('<');
            program(out, p, 0, full);
            out.push('>');
            sentence(out, x, 4, full);
        }
        Sentence::Pre(a) => {
            out.push_str("Pre(");
            program(out, &a.to_program(), 0, false);
            out.push(')');
        }
    }
    if parens {
        out.push(')');
    }
}

fn program(out: &mut String, p: &Program, prec: u8, full: bool) {
    let own = match p {
        Program::Union(_, _) => 1,
        Program::Seq(_, _) => 2,
        Program::Star(_) => 3,
        _ => 4,
    };
    let parens = if full { own < 4 } else { own < prec };
    if parens {
        out.push('(');
    }
    match p {
        Program::Skip => out.push_str("skip"),
        Program::Crash => out.push_str("crash"),
        Program::Basic(name, args) => {
            out.push_str(name);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                sentence(out, a, 0, full);
            }
            out.push(')');
        }
        Program::Seq(a, b) => {
            program(out, a, 2, full);
            out.push_str(" ; ");
            program(out, b, 3, full);
        }
        Program::Union(a, b) => {
            program(out, a, 1, full);
            out.push_str(" + ");
            program(out, b, 2, full);
        }
        Program::Star(a) => {
            program(out, a, 3, full);
            out.push('*');
        }
    }
    if parens {
        out.push(')');
    }
}

impl std::fmt::Display for Sentence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&render(self))
    }
}

impl std::fmt::Display for Program {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&render_program(self))
    }
}

impl std::fmt::Display for SimpleAction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&render_action(self))
    }
}
