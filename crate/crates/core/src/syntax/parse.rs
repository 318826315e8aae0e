//! Recursive-descent parser for the concrete formula and program syntax.
//!
//! ```text
//! sentence := implies
//! implies  := or ("->" implies)?                   right-associative
//! or       := and ("|" and)*                       left-associative
//! and      := unary ("&" unary)*                   left-associative
//! unary    := "~" unary
//!           | "K_<agent>" unary | "M_<agent>" unary
//!           | "C_<agents>" unary | "E_<agents>" unary
//!           | "[" program "]" unary | "<" program ">" unary
//!           | "true" | "false" | atom | "(" sentence ")"
//! agents   := agent | "{" agent ("," agent)* "}"
//! program  := union
//! union    := seq ("+" seq)*
//! seq      := star (";" star)*
//! star     := primary "*"*
//! primary  := "skip" | "crash" | type "(" sentence ("," sentence)* ")"
//!           | "(" program ")"
//! ```
//!
//! Modal prefixes bind a single following unary, so `K_A K_B p` nests and
//! `K_A p & q` parses as `(K_A p) & q`. Identifiers match
//! `[A-Za-z][A-Za-z0-9_]*`; whether `K_A` is a modality or an atom is
//! decided against the signature's agent list.

use std::fmt;

use super::ast::{Program, Sentence};
use super::signature::Signature;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at byte {}: {}", self.pos, self.msg)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Lt,
    Gt,
    Comma,
    Amp,
    Pipe,
    Arrow,
    Tilde,
    Semi,
    Plus,
    Star,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '(' => {
                toks.push((i, Tok::LParen));
                i += 1;
            }
            ')' => {
                toks.push((i, Tok::RParen));
                i += 1;
            }
            '{' => {
                toks.push((i, Tok::LBrace));
                i += 1;
            }
            '}' => {
                toks.push((i, Tok::RBrace));
                i += 1;
            }
            '[' => {
                toks.push((i, Tok::LBracket));
                i += 1;
            }
            ']' => {
                toks.push((i, Tok::RBracket));
                i += 1;
            }
            '<' => {
                toks.push((i, Tok::Lt));
                i += 1;
            }
            '>' => {
                toks.push((i, Tok::Gt));
                i += 1;
            }
            ',' => {
                toks.push((i, Tok::Comma));
                i += 1;
            }
            '&' => {
                toks.push((i, Tok::Amp));
                i += 1;
            }
            '|' => {
                toks.push((i, Tok::Pipe));
                i += 1;
            }
            '~' => {
                toks.push((i, Tok::Tilde));
                i += 1;
            }
            ';' => {
                toks.push((i, Tok::Semi));
                i += 1;
            }
            '+' => {
                toks.push((i, Tok::Plus));
                i += 1;
            }
            '*' => {
                toks.push((i, Tok::Star));
                i += 1;
            }
            '-' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'>' {
                    toks.push((i, Tok::Arrow));
                    i += 2;
                } else {
                    return Err(ParseError {
                        pos: i,
                        msg: "expected '->'".into(),
                    });
                }
            }
            c if c.is_ascii_alphabetic() => {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                toks.push((start, Tok::Ident(text[start..i].to_string())));
            }
            other => {
                return Err(ParseError {
                    pos: i,
                    msg: format!("unexpected character {other:?}"),
                })
            }
        }
    }
    Ok(toks)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    sig: &'a Signature,
    end: usize,
}

pub fn parse_sentence(text: &str, sig: &Signature) -> Result<Sentence, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        sig,
        end: text.len(),
    };
    let s = p.sentence()?;
    p.expect_eof()?;
    Ok(s)
}

pub fn parse_program(text: &str, sig: &Signature) -> Result<Program, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        sig,
        end: text.len(),
    };
    let prog = p.program()?;
    p.expect_eof()?;
    Ok(prog)
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), ParseError> {
        if self.eat(&t) {
            Ok(())
        } else {
            Err(self.err(format!("expected {what}")))
        }
    }

    fn expect_eof(&mut self) -> Result<(), ParseError> {
        if self.pos == self.toks.len() {
            Ok(())
        } else {
            Err(self.err("trailing input".into()))
        }
    }

    fn err(&self, msg: String) -> ParseError {
        ParseError {
            pos: self.here(),
            msg,
        }
    }

    fn sentence(&mut self) -> Result<Sentence, ParseError> {
        self.implies()
    }

    fn implies(&mut self) -> Result<Sentence, ParseError> {
        let lhs = self.or()?;
        if self.eat(&Tok::Arrow) {
            let rhs = self.implies()?;
            Ok(Sentence::implies(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn or(&mut self) -> Result<Sentence, ParseError> {
        let mut lhs = self.and()?;
        while self.eat(&Tok::Pipe) {
            let rhs = self.and()?;
            lhs = Sentence::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Sentence, ParseError> {
        let mut lhs = self.unary()?;
        while self.eat(&Tok::Amp) {
            let rhs = self.unary()?;
            lhs = Sentence::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Sentence, ParseError> {
        match self.peek() {
            Some(Tok::Tilde) => {
                self.bump();
                Ok(Sentence::not(self.unary()?))
            }
            Some(Tok::LBracket) => {
                self.bump();
                let prog = self.program()?;
                self.expect(Tok::RBracket, "']'")?;
                Ok(Sentence::dyn_box(prog, self.unary()?))
            }
            Some(Tok::Lt) => {
                self.bump();
                let prog = self.program()?;
                self.expect(Tok::Gt, "'>'")?;
                Ok(Sentence::dyn_diamond(prog, self.unary()?))
            }
            Some(Tok::LParen) => {
                self.bump();
                let s = self.sentence()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(s)
            }
            Some(Tok::Ident(_)) => {
                let pos = self.here();
                let name = match self.bump() {
                    Some(Tok::Ident(n)) => n,
                    _ => unreachable!(),
                };
                self.ident_sentence(pos, name)
            }
            _ => Err(self.err("expected a sentence".into())),
        }
    }

    fn ident_sentence(&mut self, pos: usize, name: String) -> Result<Sentence, ParseError> {
        match name.as_str() {
            "true" => return Ok(Sentence::True),
            "false" => return Ok(Sentence::False),
            _ => {}
        }
        for (prefix, common) in [("K_", false), ("M_", false), ("C_", true), ("E_", true)] {
            if let Some(rest) = name.strip_prefix(prefix) {
                if rest.is_empty() {
                    // Braced agent set: C_{A,B}.
                    if !common {
                        return Err(ParseError {
                            pos,
                            msg: format!("{prefix} requires a single agent"),
                        });
                    }
                    let agents = self.agent_set()?;
                    let body = self.unary()?;
                    return Ok(if prefix == "C_" {
                        Sentence::CBox(agents, Box::new(body))
                    } else {
                        Sentence::CDiamond(agents, Box::new(body))
                    });
                }
                if self.sig.has_agent(rest) {
                    let body = self.unary()?;
                    return Ok(match prefix {
                        "K_" => Sentence::knows(rest, body),
                        "M_" => Sentence::poss(rest, body),
                        "C_" => Sentence::common([rest], body),
                        _ => Sentence::common_poss([rest], body),
                    });
                }
                return Err(ParseError {
                    pos,
                    msg: format!("unknown agent {rest:?}"),
                });
            }
        }
        // A plain atom. Reject names colliding with program keywords.
        if name == "skip" || name == "crash" {
            return Err(ParseError {
                pos,
                msg: format!("{name:?} is a program, not a sentence"),
            });
        }
        Ok(Sentence::Atom(name))
    }

    fn agent_set(&mut self) -> Result<std::collections::BTreeSet<String>, ParseError> {
        self.expect(Tok::LBrace, "'{'")?;
        let mut agents = std::collections::BTreeSet::new();
        loop {
            let pos = self.here();
            match self.bump() {
                Some(Tok::Ident(a)) => {
                    if !self.sig.has_agent(&a) {
                        return Err(ParseError {
                            pos,
                            msg: format!("unknown agent {a:?}"),
                        });
                    }
                    agents.insert(a);
                }
                _ => {
                    return Err(ParseError {
                        pos,
                        msg: "expected an agent name".into(),
                    })
                }
            }
            if self.eat(&Tok::Comma) {
                continue;
            }
            self.expect(Tok::RBrace, "'}'")?;
            break;
        }
        if agents.is_empty() {
            return Err(self.err("agent set must be nonempty".into()));
        }
        Ok(agents)
    }

    fn program(&mut self) -> Result<Program, ParseError> {
        let mut lhs = self.prog_seq()?;
        while self.eat(&Tok::Plus) {
            let rhs = self.prog_seq()?;
            lhs = Program::union(lhs, rhs);
        }
        Ok(lhs)
    }

    fn prog_seq(&mut self) -> Result<Program, ParseError> {
        let mut lhs = self.prog_star()?;
        while self.eat(&Tok::Semi) {
            let rhs = self.prog_star()?;
            lhs = Program::seq(lhs, rhs);
        }
        Ok(lhs)
    }

    fn prog_star(&mut self) -> Result<Program, ParseError> {
        let mut p = self.prog_primary()?;
        while self.eat(&Tok::Star) {
            p = Program::star(p);
        }
        Ok(p)
    }

    fn prog_primary(&mut self) -> Result<Program, ParseError> {
        match self.peek() {
            Some(Tok::LParen) => {
                self.bump();
                let p = self.program()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(p)
            }
            Some(Tok::Ident(_)) => {
                let pos = self.here();
                let name = match self.bump() {
                    Some(Tok::Ident(n)) => n,
                    _ => unreachable!(),
                };
                match name.as_str() {
                    "skip" => Ok(Program::Skip),
                    "crash" => Ok(Program::Crash),
                    _ => {
                        if self.sig.type_index(&name).is_none() {
                            return Err(ParseError {
                                pos,
                                msg: format!("unknown action type {name:?}"),
                            });
                        }
                        self.expect(Tok::LParen, "'(' after action type")?;
                        let mut args = vec![self.sentence()?];
                        while self.eat(&Tok::Comma) {
                            args.push(self.sentence()?);
                        }
                        self.expect(Tok::RParen, "')'")?;
                        if args.len() != self.sig.arity() {
                            return Err(ParseError {
                                pos,
                                msg: format!(
                                    "basic action {name:?} takes {} argument(s), got {}",
                                    self.sig.arity(),
                                    args.len()
                                ),
                            });
                        }
                        Ok(Program::Basic(name, args))
                    }
                }
            }
            _ => Err(self.err("expected a program".into())),
        }
    }
}
