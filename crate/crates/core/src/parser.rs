//! Surface syntax.
//!
//! ```text
//! fmix(X) :- msw(m, M), msw(w(M), X).
//!
//! values(m, [a, b]).
//! values(w(M), real).
//! :- set_sw(m, [0.3, 0.7]),
//!    set_sw(w(a), norm(2.0, 1.0)),
//!    set_sw(w(b), norm(3.0, 1.0)).
//! ```
//!
//! Clause bodies may also contain linear equalities (`S = Sp + E`,
//! `Y = 2*X + 1`); both sides may be any linear expression in `+`,
//! `-`, `*`-by-constant and parentheses, and are normalized by moving
//! terms so that one variable is isolated on the left. `%` starts a
//! line comment.

use std::collections::HashMap;

use crate::error::{ParseError, Pos};
use crate::linear::{LinearConstraint, LinearForm, COEFF_EPS};
use crate::program::{BodyItem, Clause, DomainKind, Program, SwitchDecl, SwitchParams};
use crate::term::{Term, VarId};
use crate::value::Value;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Name(String),
    Var(String),
    Num(f64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Dot,
    If, // ":-"
    Eq,
    Plus,
    Minus,
    Star,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    pos: Pos,
}

fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let mut chars = src.chars().peekable();
    let mut line = 1usize;
    let mut col = 1usize;
    macro_rules! bump {
        () => {{
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                col = 1;
            } else if c.is_some() {
                col += 1;
            }
            c
        }};
    }
    loop {
        let pos = Pos { line, col };
        let c = match chars.peek() {
            None => break,
            Some(c) => *c,
        };
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                bump!();
            }
            '%' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    bump!();
                }
            }
            '(' => {
                bump!();
                out.push(Token { tok: Tok::LParen, pos });
            }
            ')' => {
                bump!();
                out.push(Token { tok: Tok::RParen, pos });
            }
            '[' => {
                bump!();
                out.push(Token { tok: Tok::LBracket, pos });
            }
            ']' => {
                bump!();
                out.push(Token { tok: Tok::RBracket, pos });
            }
            ',' => {
                bump!();
                out.push(Token { tok: Tok::Comma, pos });
            }
            '=' => {
                bump!();
                out.push(Token { tok: Tok::Eq, pos });
            }
            '+' => {
                bump!();
                out.push(Token { tok: Tok::Plus, pos });
            }
            '-' => {
                bump!();
                out.push(Token { tok: Tok::Minus, pos });
            }
            '*' => {
                bump!();
                out.push(Token { tok: Tok::Star, pos });
            }
            ':' => {
                bump!();
                if chars.peek() == Some(&'-') {
                    bump!();
                    out.push(Token { tok: Tok::If, pos });
                } else {
                    return Err(ParseError::Syntax {
                        pos,
                        msg: "expected `:-`".to_string(),
                    });
                }
            }
            '.' => {
                bump!();
                out.push(Token { tok: Tok::Dot, pos });
            }
            '0'..='9' => {
                let mut s = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_digit() {
                        s.push(d);
                        bump!();
                    } else {
                        break;
                    }
                }
                // a '.' joins the number only when followed by a digit
                let mut cl = chars.clone();
                if cl.next() == Some('.') && cl.peek().is_some_and(|d| d.is_ascii_digit()) {
                    s.push('.');
                    bump!();
                    while let Some(&d) = chars.peek() {
                        if d.is_ascii_digit() {
                            s.push(d);
                            bump!();
                        } else {
                            break;
                        }
                    }
                }
                if matches!(chars.peek(), Some('e') | Some('E')) {
                    let mut cl = chars.clone();
                    cl.next();
                    let sign = matches!(cl.peek(), Some('+') | Some('-'));
                    if sign {
                        cl.next();
                    }
                    if cl.peek().is_some_and(|d| d.is_ascii_digit()) {
                        s.push('e');
                        bump!();
                        if sign {
                            if let Some(&sc) = chars.peek() {
                                s.push(sc);
                                bump!();
                            }
                        }
                        while let Some(&d) = chars.peek() {
                            if d.is_ascii_digit() {
                                s.push(d);
                                bump!();
                            } else {
                                break;
                            }
                        }
                    }
                }
                let x: f64 = s.parse().map_err(|_| ParseError::Syntax {
                    pos,
                    msg: format!("bad numeric literal `{s}`"),
                })?;
                out.push(Token { tok: Tok::Num(x), pos });
            }
            c if c.is_ascii_lowercase() => {
                let mut s = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_alphanumeric() || d == '_' {
                        s.push(d);
                        bump!();
                    } else {
                        break;
                    }
                }
                out.push(Token { tok: Tok::Name(s), pos });
            }
            c if c.is_ascii_uppercase() || c == '_' => {
                let mut s = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_alphanumeric() || d == '_' {
                        s.push(d);
                        bump!();
                    } else {
                        break;
                    }
                }
                out.push(Token { tok: Tok::Var(s), pos });
            }
            other => {
                return Err(ParseError::Syntax {
                    pos,
                    msg: format!("unexpected character `{other}`"),
                });
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        pos: Pos { line, col },
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    i: usize,
    prog: Program,
    /// per-clause variable scope: source name -> id
    scope: HashMap<String, VarId>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].pos
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.i].tok.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ParseError> {
        let pos = self.pos();
        let got = self.next();
        if got == want {
            Ok(())
        } else {
            Err(ParseError::Syntax {
                pos,
                msg: format!("expected {what}"),
            })
        }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            pos: self.pos(),
            msg: msg.into(),
        })
    }

    fn var(&mut self, name: &str) -> VarId {
        if name == "_" {
            let id = self.prog.fresh_var();
            self.prog.var_names.insert(id, format!("_{id}"));
            return id;
        }
        if let Some(&id) = self.scope.get(name) {
            return id;
        }
        let id = self.prog.fresh_var();
        self.scope.insert(name.to_string(), id);
        self.prog.var_names.insert(id, name.to_string());
        id
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        let pos = self.pos();
        match self.next() {
            Tok::Var(v) => Ok(Term::Var(self.var(&v))),
            Tok::Num(x) => Ok(Term::Num(x)),
            Tok::Minus => match self.next() {
                Tok::Num(x) => Ok(Term::Num(-x)),
                _ => Err(ParseError::Syntax {
                    pos,
                    msg: "expected a number after `-`".to_string(),
                }),
            },
            Tok::Name(f) => {
                if *self.peek() == Tok::LParen {
                    self.next();
                    let mut args = vec![self.term()?];
                    while *self.peek() == Tok::Comma {
                        self.next();
                        args.push(self.term()?);
                    }
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(Term::Compound(f, args))
                } else {
                    Ok(Term::Atom(f))
                }
            }
            other => Err(ParseError::Syntax {
                pos,
                msg: format!("expected a term, found {other:?}"),
            }),
        }
    }

    // ---- linear expressions ------------------------------------------

    fn lin_expr(&mut self) -> Result<LinearForm, ParseError> {
        let mut acc = self.lin_term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.next();
                    acc = acc.add(&self.lin_term()?);
                }
                Tok::Minus => {
                    self.next();
                    acc = acc.sub(&self.lin_term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn lin_term(&mut self) -> Result<LinearForm, ParseError> {
        let mut acc = self.lin_factor()?;
        while *self.peek() == Tok::Star {
            let pos = self.pos();
            self.next();
            let rhs = self.lin_factor()?;
            acc = if acc.is_constant() {
                rhs.scale(acc.intercept)
            } else if rhs.is_constant() {
                acc.scale(rhs.intercept)
            } else {
                return Err(ParseError::NonlinearConstraint {
                    pos,
                    msg: "product of two non-constant expressions".to_string(),
                });
            };
        }
        Ok(acc)
    }

    fn lin_factor(&mut self) -> Result<LinearForm, ParseError> {
        let pos = self.pos();
        match self.next() {
            Tok::Num(x) => Ok(LinearForm::constant(x)),
            Tok::Var(v) => Ok(LinearForm::var(self.var(&v))),
            Tok::Minus => Ok(self.lin_factor()?.scale(-1.0)),
            Tok::LParen => {
                let e = self.lin_expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Name(n) => Err(ParseError::NonlinearConstraint {
                pos,
                msg: format!("`{n}` is not a linear term (atoms cannot appear in constraints)"),
            }),
            other => Err(ParseError::Syntax {
                pos,
                msg: format!("expected a linear expression, found {other:?}"),
            }),
        }
    }

    /// Normalize `lhs = rhs` by moving every term left and isolating a
    /// variable; prefers the variable when the original left side was a
    /// bare variable. With no variable left it degenerates to a ground
    /// check.
    fn normalize_eq(
        &self,
        lhs: LinearForm,
        rhs: LinearForm,
        bare_lhs: Option<VarId>,
    ) -> LinearConstraint {
        let form = lhs.sub(&rhs);
        let pivot = bare_lhs
            .filter(|v| form.coeff(*v).abs() > COEFF_EPS)
            .or_else(|| form.vars().next());
        match pivot {
            Some(v) => {
                let c = form.coeff(v);
                let mut rest = form.clone();
                rest.set_coeff(v, 0.0);
                LinearConstraint {
                    lhs: Some(v),
                    rhs: rest.scale(-1.0 / c),
                }
            }
            None => LinearConstraint { lhs: None, rhs: form },
        }
    }

    fn constraint(&mut self) -> Result<LinearConstraint, ParseError> {
        let start = self.i;
        let lhs = self.lin_expr()?;
        let bare = if self.i == start + 1 {
            lhs.vars().next()
        } else {
            None
        };
        self.expect(Tok::Eq, "`=` in constraint")?;
        let rhs = self.lin_expr()?;
        Ok(self.normalize_eq(lhs, rhs, bare))
    }

    // ---- clause bodies -----------------------------------------------

    fn body_item(&mut self) -> Result<BodyItem, ParseError> {
        match self.peek().clone() {
            Tok::Name(n) if n == "true" => {
                self.next();
                Ok(BodyItem::True)
            }
            Tok::Name(n) if n == "msw" => {
                self.next();
                self.expect(Tok::LParen, "`(` after msw")?;
                let switch = self.term()?;
                self.expect(Tok::Comma, "`,`")?;
                let second = self.term()?;
                if *self.peek() == Tok::Comma {
                    self.next();
                    let outcome = self.term()?;
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(BodyItem::Msw {
                        switch,
                        instance: Some(second),
                        outcome,
                    })
                } else {
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(BodyItem::Msw {
                        switch,
                        instance: None,
                        outcome: second,
                    })
                }
            }
            Tok::Name(_) => {
                let save = self.i;
                let t = self.term()?;
                if *self.peek() == Tok::Eq {
                    // something call-shaped on the left of `=`:
                    // reparse as a linear expression for the error
                    self.i = save;
                    let c = self.constraint()?;
                    Ok(BodyItem::Constraint(c))
                } else {
                    Ok(BodyItem::Call(t))
                }
            }
            Tok::Var(_) | Tok::Num(_) | Tok::LParen | Tok::Minus => {
                Ok(BodyItem::Constraint(self.constraint()?))
            }
            other => self.err(format!("expected a body goal, found {other:?}")),
        }
    }

    // ---- declarations ------------------------------------------------

    fn ground_value(&mut self) -> Result<Value, ParseError> {
        let pos = self.pos();
        match self.next() {
            Tok::Name(a) => Ok(Value::Atom(a)),
            Tok::Num(x) => Ok(Value::Num(x)),
            Tok::Minus => match self.next() {
                Tok::Num(x) => Ok(Value::Num(-x)),
                _ => Err(ParseError::Syntax {
                    pos,
                    msg: "expected a number after `-`".to_string(),
                }),
            },
            other => Err(ParseError::Syntax {
                pos,
                msg: format!("domain values must be ground atoms or numbers, found {other:?}"),
            }),
        }
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        let pos = self.pos();
        match self.next() {
            Tok::Num(x) => Ok(x),
            Tok::Minus => match self.next() {
                Tok::Num(x) => Ok(-x),
                _ => Err(ParseError::Syntax {
                    pos,
                    msg: "expected a number".to_string(),
                }),
            },
            other => Err(ParseError::Syntax {
                pos,
                msg: format!("expected a numeric literal, found {other:?}"),
            }),
        }
    }

    fn values_decl(&mut self) -> Result<(), ParseError> {
        self.expect(Tok::LParen, "`(` after values")?;
        let pattern = self.term()?;
        self.expect(Tok::Comma, "`,`")?;
        let kind = match self.peek().clone() {
            Tok::Name(n) if n == "real" => {
                self.next();
                DomainKind::Real
            }
            Tok::LBracket => {
                self.next();
                let mut dom = vec![self.ground_value()?];
                while *self.peek() == Tok::Comma {
                    self.next();
                    dom.push(self.ground_value()?);
                }
                self.expect(Tok::RBracket, "`]`")?;
                DomainKind::Finite(dom)
            }
            _ => return self.err("expected `real` or a `[...]` domain"),
        };
        self.expect(Tok::RParen, "`)`")?;
        self.expect(Tok::Dot, "`.`")?;
        self.prog
            .add_decl(SwitchDecl { pattern, kind })
            .map_err(ParseError::DuplicateDecl)
    }

    fn set_sw(&mut self) -> Result<(), ParseError> {
        self.expect(Tok::LParen, "`(` after set_sw")?;
        let switch = self.term()?;
        self.expect(Tok::Comma, "`,`")?;
        let params = match self.peek().clone() {
            Tok::LBracket => {
                self.next();
                let mut ps = vec![self.number()?];
                while *self.peek() == Tok::Comma {
                    self.next();
                    ps.push(self.number()?);
                }
                self.expect(Tok::RBracket, "`]`")?;
                SwitchParams::Probs(ps)
            }
            Tok::Name(n) if n == "norm" => {
                self.next();
                self.expect(Tok::LParen, "`(`")?;
                let mean = self.number()?;
                self.expect(Tok::Comma, "`,`")?;
                let var = self.number()?;
                self.expect(Tok::RParen, "`)`")?;
                SwitchParams::Gaussian { mean, var }
            }
            _ => {
                return Err(ParseError::BadSwitchParams {
                    switch: switch.to_string(),
                    msg: "parameters must be a probability list or norm(Mean, Var) with numeric \
                          literals"
                        .to_string(),
                })
            }
        };
        self.prog.params.set(switch, params);
        Ok(())
    }

    fn directive(&mut self) -> Result<(), ParseError> {
        loop {
            match self.next() {
                Tok::Name(n) if n == "set_sw" => self.set_sw()?,
                _ => return self.err("only set_sw/2 directives are supported"),
            }
            match self.next() {
                Tok::Comma => continue,
                Tok::Dot => return Ok(()),
                _ => return self.err("expected `,` or `.`"),
            }
        }
    }

    fn clause(&mut self) -> Result<(), ParseError> {
        let head = self.term()?;
        if head.functor().is_none() {
            return self.err("clause head must be an atom or compound term");
        }
        let mut body = Vec::new();
        match self.next() {
            Tok::Dot => {}
            Tok::If => loop {
                body.push(self.body_item()?);
                match self.next() {
                    Tok::Comma => continue,
                    Tok::Dot => break,
                    _ => return self.err("expected `,` or `.` in clause body"),
                }
            },
            _ => return self.err("expected `.` or `:-` after clause head"),
        }
        self.prog.add_clause(Clause { head, body });
        Ok(())
    }

    fn item(&mut self) -> Result<(), ParseError> {
        self.scope.clear(); // standardize clauses apart
        match self.peek().clone() {
            Tok::If => {
                self.next();
                self.directive()
            }
            Tok::Name(n) if n == "values" => {
                self.next();
                self.values_decl()
            }
            _ => self.clause(),
        }
    }
}

fn check_program(prog: &Program) -> Result<(), ParseError> {
    for clause in &prog.clauses {
        for item in &clause.body {
            if let BodyItem::Msw { switch, .. } = item {
                if switch.functor().is_none() || prog.decl_for(switch).is_none() {
                    return Err(ParseError::UndeclaredSwitch(switch.to_string()));
                }
            }
        }
    }
    let entries: Vec<(Term, SwitchParams)> = prog
        .params
        .instances()
        .map(|(t, p)| (t.clone(), p.clone()))
        .chain(prog.params.defaults().iter().cloned())
        .collect();
    for (switch, params) in entries {
        let decl = prog
            .decl_for(&switch)
            .ok_or_else(|| ParseError::UndeclaredSwitch(switch.to_string()))?;
        match (&decl.kind, &params) {
            (DomainKind::Finite(dom), SwitchParams::Probs(ps)) => {
                if ps.len() != dom.len() {
                    return Err(ParseError::BadSwitchParams {
                        switch: switch.to_string(),
                        msg: format!(
                            "{} probabilities for a {}-value domain",
                            ps.len(),
                            dom.len()
                        ),
                    });
                }
            }
            (DomainKind::Real, SwitchParams::Gaussian { .. }) => {}
            (DomainKind::Finite(_), SwitchParams::Gaussian { .. }) => {
                return Err(ParseError::BadSwitchParams {
                    switch: switch.to_string(),
                    msg: "Gaussian parameters on a finite domain".to_string(),
                });
            }
            (DomainKind::Real, SwitchParams::Probs(_)) => {
                return Err(ParseError::BadSwitchParams {
                    switch: switch.to_string(),
                    msg: "probability vector on a real domain".to_string(),
                });
            }
        }
    }
    Ok(())
}

/// Parse a program from source text.
pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let toks = tokenize(src)?;
    let mut p = Parser {
        toks,
        i: 0,
        prog: Program::new(),
        scope: HashMap::new(),
    };
    while *p.peek() != Tok::Eof {
        p.item()?;
    }
    check_program(&p.prog)?;
    Ok(p.prog)
}

/// Parse a query goal. Variable ids are allocated from `start` so they
/// do not collide with the program's clause variables; the returned
/// pairs name the query variables for rendering.
pub fn parse_query(src: &str, start: VarId) -> Result<(Term, Vec<(VarId, String)>), ParseError> {
    let toks = tokenize(src)?;
    let mut prog = Program::new();
    prog.next_var = start;
    let mut p = Parser {
        toks,
        i: 0,
        prog,
        scope: HashMap::new(),
    };
    let t = p.term()?;
    if *p.peek() == Tok::Dot {
        p.next();
    }
    if *p.peek() != Tok::Eof {
        return p.err("trailing input after query");
    }
    if t.functor().is_none() {
        return p.err("query must be a predicate goal");
    }
    let names = p
        .scope
        .iter()
        .map(|(name, &id)| (id, name.clone()))
        .collect();
    Ok((t, names))
}

/// Parse a training-data file: one ground goal per line, `%` comments
/// and blank lines allowed. Returns `(line_number, goal)` pairs.
pub fn parse_training_data(src: &str) -> Result<Vec<(usize, Term)>, ParseError> {
    let mut out = Vec::new();
    for (lineno, line) in src.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let toks = tokenize(trimmed).map_err(|e| at_line(e, lineno + 1))?;
        let mut p = Parser {
            toks,
            i: 0,
            prog: Program::new(),
            scope: HashMap::new(),
        };
        let t = p.term().map_err(|e| at_line(e, lineno + 1))?;
        p.expect(Tok::Dot, "`.` after goal")
            .map_err(|e| at_line(e, lineno + 1))?;
        if !t.is_ground() {
            return Err(ParseError::Syntax {
                pos: Pos { line: lineno + 1, col: 1 },
                msg: "training goals must be ground".to_string(),
            });
        }
        out.push((lineno + 1, t));
    }
    Ok(out)
}

fn at_line(e: ParseError, line: usize) -> ParseError {
    match e {
        ParseError::Syntax { pos, msg } => ParseError::Syntax {
            pos: Pos { line, col: pos.col },
            msg,
        },
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::DomainKind;

    pub(crate) const FMIX: &str = "\
fmix(X) :- msw(m, M),
           msw(w(M), X).

values(m, [a,b]).
values(w(M), real).
:- set_sw(m, [0.3, 0.7]),
   set_sw(w(a), norm(2.0, 1.0)),
   set_sw(w(b), norm(3.0, 1.0)).
";

    #[test]
    fn parses_mixture_program() {
        let prog = parse_program(FMIX).unwrap();
        assert_eq!(prog.clauses.len(), 1);
        assert_eq!(prog.clauses[0].body.len(), 2);
        let m = prog.decl_for(&Term::atom("m")).unwrap();
        match &m.kind {
            DomainKind::Finite(dom) => assert_eq!(dom.len(), 2),
            _ => panic!("m should be finite"),
        }
        let w = prog
            .decl_for(&Term::compound("w", vec![Term::atom("a")]))
            .unwrap();
        assert_eq!(w.kind, DomainKind::Real);
        let wa = Term::compound("w", vec![Term::atom("a")]);
        match prog.params.lookup(&wa).unwrap() {
            SwitchParams::Gaussian { mean, var } => {
                assert_eq!(*mean, 2.0);
                assert_eq!(*var, 1.0);
            }
            _ => panic!("w(a) should be Gaussian"),
        }
    }

    #[test]
    fn empty_clause_section_is_fine() {
        let prog = parse_program("values(c, [h,t]).\n:- set_sw(c, [0.5, 0.5]).\n").unwrap();
        assert_eq!(prog.clauses.len(), 0);
    }

    #[test]
    fn constraint_normalizes_to_lhs_form() {
        let prog = parse_program(
            "p(X) :- X = 2*Y + 1, q(Y).\nq(Y) :- msw(s, Y).\nvalues(s, real).\n:- set_sw(s, norm(0.0, 1.0)).\n",
        )
        .unwrap();
        match &prog.clauses[0].body[0] {
            BodyItem::Constraint(c) => {
                let v = c.lhs.expect("lhs variable");
                assert_eq!(prog.var_names.get(v), "X");
                assert_eq!(c.rhs.intercept, 1.0);
                let y = c.rhs.vars().next().unwrap();
                assert_eq!(c.rhs.coeff(y), 2.0);
            }
            other => panic!("expected constraint, got {other:?}"),
        }
        match &prog.clauses[0].body[1] {
            BodyItem::Call(t) => assert_eq!(t.functor(), Some(("q", 1))),
            other => panic!("expected call, got {other:?}"),
        }
    }

    #[test]
    fn ground_equality_becomes_ground_check() {
        let prog = parse_program("p :- 3 = 3.\n").unwrap();
        match &prog.clauses[0].body[0] {
            BodyItem::Constraint(c) => {
                assert!(c.lhs.is_none());
                assert!(c.rhs.is_constant());
            }
            other => panic!("expected constraint, got {other:?}"),
        }
    }

    #[test]
    fn rejects_nonlinear_products() {
        let err = parse_program("p :- X = Y * Z.\n").unwrap_err();
        assert!(matches!(err, ParseError::NonlinearConstraint { .. }));
    }

    #[test]
    fn rejects_undeclared_switch() {
        let err = parse_program("p :- msw(nope, X).\n").unwrap_err();
        assert!(matches!(err, ParseError::UndeclaredSwitch(_)));
    }

    #[test]
    fn rejects_gaussian_on_finite_domain() {
        let err =
            parse_program("values(m, [a,b]).\n:- set_sw(m, norm(0.0, 1.0)).\n").unwrap_err();
        assert!(matches!(err, ParseError::BadSwitchParams { .. }));
    }

    #[test]
    fn clauses_standardized_apart() {
        let prog = parse_program(
            "p(X) :- q(X).\nr(X) :- q(X).\nq(X) :- msw(s, X).\nvalues(s, [a]).\n",
        )
        .unwrap();
        let mut seen = Vec::new();
        for c in &prog.clauses {
            for v in c.vars() {
                assert!(!seen.contains(&v), "variable id shared across clauses");
                seen.push(v);
            }
        }
    }

    #[test]
    fn pretty_print_reparses_identically(){
        let prog = parse_program(FMIX).unwrap();
        let printed = prog.to_string();
        let reparsed = parse_program(&printed).unwrap();
        let keys1: Vec<String> = prog.clauses.iter().map(|c| c.head.canonical_key()).collect();
        let keys2: Vec<String> = reparsed.clauses.iter().map(|c| c.head.canonical_key()).collect();
        assert_eq!(keys1, keys2);
        assert_eq!(printed, reparsed.to_string());
    }

    #[test]
    fn query_parsing_allocates_from_start() {
        let (t, names) = parse_query("fmix(X)", 100).unwrap();
        assert_eq!(t.functor(), Some(("fmix", 1)));
        assert_eq!(names.len(), 1);
        assert!(names[0].0 >= 100);
    }

    #[test]
    fn training_data_requires_ground_goals() {
        let data = parse_training_data("fmix(2.31).\n% comment\nfmix(-0.5).\n").unwrap();
        assert_eq!(data.len(), 2);
        assert!(parse_training_data("fmix(X).\n").is_err());
    }
}
