//! Programs as de-Bruijn-indexed lambda terms over named primitives.
//!
//! Surface syntax is S-expressions: `(lambda BODY)`, `$i` for indices,
//! `(f x y)` for (left-nested) application, bare identifiers for primitives,
//! and `#(...)` for invented productions with their definition inlined.

use std::fmt;

use thiserror::Error;

use crate::primitives::PrimitiveSet;
use crate::types::{PolyType, Type, TypeContext, TypeError};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Program {
    Index(usize),
    Abstraction(Box<Program>),
    Application(Box<Program>, Box<Program>),
    Primitive(String),
    Invented(Box<Program>),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("syntax error at offset {0}: {1}")]
    Syntax(usize, String),
    #[error("unknown identifier {1:?} at offset {0}")]
    UnknownIdentifier(usize, String),
}

impl Program {
    pub fn abstraction(body: Program) -> Program {
        Program::Abstraction(Box::new(body))
    }

    pub fn application(func: Program, arg: Program) -> Program {
        Program::Application(Box::new(func), Box::new(arg))
    }

    pub fn primitive(name: &str) -> Program {
        Program::Primitive(name.to_owned())
    }

    pub fn invented(definition: Program) -> Program {
        Program::Invented(Box::new(definition))
    }

    /// Left-folds `head` onto `args`.
    pub fn apply_all(head: Program, args: Vec<Program>) -> Program {
        args.into_iter().fold(head, Program::application)
    }

    /// Number of non-application symbols: each primitive, invented reference,
    /// index and abstraction counts one.
    pub fn size(&self) -> usize {
        match self {
            Program::Application(f, x) => f.size() + x.size(),
            Program::Abstraction(b) => 1 + b.size(),
            _ => 1,
        }
    }

    /// Decomposes nested applications into a head and its arguments.
    pub fn spine(&self) -> (&Program, Vec<&Program>) {
        let mut args = Vec::new();
        let mut cur = self;
        while let Program::Application(f, x) = cur {
            args.push(x.as_ref());
            cur = f;
        }
        args.reverse();
        (cur, args)
    }

    /// Smallest number of enclosing lambdas under which the term is closed.
    pub fn free_index_bound(&self) -> usize {
        fn walk(p: &Program, depth: usize, bound: &mut usize) {
            match p {
                Program::Index(i) => {
                    if *i >= depth {
                        *bound = (*bound).max(i - depth + 1);
                    }
                }
                Program::Abstraction(b) => walk(b, depth + 1, bound),
                Program::Application(f, x) => {
                    walk(f, depth, bound);
                    walk(x, depth, bound);
                }
                _ => {}
            }
        }
        let mut bound = 0;
        walk(self, 0, &mut bound);
        bound
    }

    pub fn is_closed(&self) -> bool {
        self.free_index_bound() == 0
    }

    /// Shifts free indices (those >= `cutoff`) by `delta`. Returns `None` when
    /// a shift would make an index negative or cross the cutoff.
    pub fn shift_from(&self, delta: isize, cutoff: usize) -> Option<Program> {
        match self {
            Program::Index(i) => {
                if *i < cutoff {
                    Some(Program::Index(*i))
                } else {
                    let j = *i as isize + delta;
                    if j < cutoff as isize {
                        None
                    } else {
                        Some(Program::Index(j as usize))
                    }
                }
            }
            Program::Abstraction(b) => Some(Program::abstraction(b.shift_from(delta, cutoff + 1)?)),
            Program::Application(f, x) => Some(Program::application(
                f.shift_from(delta, cutoff)?,
                x.shift_from(delta, cutoff)?,
            )),
            other => Some(other.clone()),
        }
    }

    pub fn shift(&self, delta: isize) -> Option<Program> {
        self.shift_from(delta, 0)
    }

    /// Capture-avoiding substitution of `value` for index `depth`, decrementing
    /// indices above it (used to contract a beta redex).
    fn substitute(&self, depth: usize, value: &Program) -> Program {
        match self {
            Program::Index(i) => {
                if *i == depth {
                    value.shift(depth as isize).expect("shift up cannot fail")
                } else if *i > depth {
                    Program::Index(i - 1)
                } else {
                    Program::Index(*i)
                }
            }
            Program::Abstraction(b) => Program::abstraction(b.substitute(depth + 1, value)),
            Program::Application(f, x) => {
                Program::application(f.substitute(depth, value), x.substitute(depth, value))
            }
            other => other.clone(),
        }
    }

    /// Contracts the leftmost-outermost beta redex, if any.
    pub fn beta_reduce_once(&self) -> Option<Program> {
        match self {
            Program::Application(f, x) => {
                if let Program::Abstraction(body) = f.as_ref() {
                    return Some(body.substitute(0, x));
                }
                if let Some(f2) = f.beta_reduce_once() {
                    return Some(Program::application(f2, x.as_ref().clone()));
                }
                x.beta_reduce_once()
                    .map(|x2| Program::application(f.as_ref().clone(), x2))
            }
            Program::Abstraction(b) => b.beta_reduce_once().map(Program::abstraction),
            _ => None,
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        self.render_into(&mut out);
        out
    }

    fn render_into(&self, out: &mut String) {
        match self {
            Program::Index(i) => {
                out.push('$');
                out.push_str(&i.to_string());
            }
            Program::Primitive(name) => out.push_str(name),
            Program::Invented(d) => {
                out.push('#');
                d.render_into(out);
            }
            Program::Abstraction(b) => {
                out.push_str("(lambda ");
                b.render_into(out);
                out.push(')');
            }
            Program::Application(..) => {
                let (head, args) = self.spine();
                out.push('(');
                head.render_into(out);
                for a in args {
                    out.push(' ');
                    a.render_into(out);
                }
                out.push(')');
            }
        }
    }

    pub fn parse(src: &str, prims: &PrimitiveSet) -> Result<Program, ParseError> {
        let tokens = tokenize(src)?;
        let mut pos = 0;
        let prog = parse_expr(&tokens, &mut pos, src.len(), prims)?;
        if pos != tokens.len() {
            let off = tokens[pos].offset();
            return Err(ParseError::Syntax(off, "trailing input".to_owned()));
        }
        Ok(prog)
    }

    /// Most general type by Hindley-Milner inference. The program must be
    /// closed and all primitives must carry declared polytypes.
    pub fn infer_type(&self, prims: &PrimitiveSet) -> Result<PolyType, TypeError> {
        let mut ctx = TypeContext::new();
        let mut env = Vec::new();
        let t = self.infer(prims, &mut ctx, &mut env)?;
        Ok(PolyType::new(ctx.apply(&t)))
    }

    pub(crate) fn infer(
        &self,
        prims: &PrimitiveSet,
        ctx: &mut TypeContext,
        env: &mut Vec<Type>,
    ) -> Result<Type, TypeError> {
        match self {
            Program::Index(i) => {
                if *i >= env.len() {
                    return Err(TypeError::UnboundIndex(*i));
                }
                Ok(env[env.len() - 1 - i].clone())
            }
            Program::Abstraction(b) => {
                let a = ctx.fresh();
                env.push(a.clone());
                let r = b.infer(prims, ctx, env);
                env.pop();
                Ok(Type::arrow(a, r?))
            }
            Program::Application(f, x) => {
                let tf = f.infer(prims, ctx, env)?;
                let tx = x.infer(prims, ctx, env)?;
                let r = ctx.fresh();
                ctx.unify(&tf, &Type::arrow(tx, r.clone()))?;
                Ok(r)
            }
            Program::Primitive(name) => {
                let poly = prims
                    .polytype(name)
                    .ok_or_else(|| TypeError::UnknownPrimitive(name.clone()))?;
                Ok(ctx.instantiate(poly))
            }
            Program::Invented(d) => {
                let poly = d.infer_type(prims)?;
                Ok(ctx.instantiate(&poly))
            }
        }
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

#[derive(Debug)]
enum Token {
    LParen(usize),
    RParen(usize),
    Hash(usize),
    Atom(usize, String),
}

impl Token {
    fn offset(&self) -> usize {
        match self {
            Token::LParen(o) | Token::RParen(o) | Token::Hash(o) | Token::Atom(o, _) => *o,
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let mut chars = src.char_indices().peekable();
    while let Some((off, c)) = chars.peek().copied() {
        if c.is_whitespace() {
            chars.next();
        } else if c == '(' {
            chars.next();
            tokens.push(Token::LParen(off));
        } else if c == ')' {
            chars.next();
            tokens.push(Token::RParen(off));
        } else if c == '#' {
            chars.next();
            tokens.push(Token::Hash(off));
        } else {
            let mut atom = String::new();
            while matches!(chars.peek(), Some((_, c)) if !c.is_whitespace() && *c != '(' && *c != ')')
            {
                atom.push(chars.next().unwrap().1);
            }
            tokens.push(Token::Atom(off, atom));
        }
    }
    Ok(tokens)
}

fn parse_expr(
    tokens: &[Token],
    pos: &mut usize,
    end: usize,
    prims: &PrimitiveSet,
) -> Result<Program, ParseError> {
    match tokens.get(*pos) {
        None => Err(ParseError::Syntax(end, "unexpected end of input".to_owned())),
        Some(Token::RParen(off)) => Err(ParseError::Syntax(*off, "unexpected ')'".to_owned())),
        Some(Token::Hash(off)) => {
            *pos += 1;
            if tokens.get(*pos).is_none() {
                return Err(ParseError::Syntax(
                    *off + 1,
                    "expected expression after '#'".to_owned(),
                ));
            }
            let definition = parse_expr(tokens, pos, end, prims)?;
            Ok(Program::invented(definition))
        }
        Some(Token::Atom(off, atom)) => {
            *pos += 1;
            parse_atom(*off, atom, prims)
        }
        Some(Token::LParen(off)) => {
            let lparen = *off;
            *pos += 1;
            if let Some(Token::Atom(_, a)) = tokens.get(*pos) {
                if a == "lambda" {
                    *pos += 1;
                    let body = parse_expr(tokens, pos, end, prims)?;
                    return match tokens.get(*pos) {
                        Some(Token::RParen(_)) => {
                            *pos += 1;
                            Ok(Program::abstraction(body))
                        }
                        Some(t) => Err(ParseError::Syntax(t.offset(), "expected ')'".to_owned())),
                        None => Err(ParseError::Syntax(end, "expected ')'".to_owned())),
                    };
                }
            }
            let mut elems = Vec::new();
            loop {
                match tokens.get(*pos) {
                    Some(Token::RParen(off)) => {
                        let off = *off;
                        *pos += 1;
                        return match elems.len() {
                            0 => Err(ParseError::Syntax(off, "empty application".to_owned())),
                            _ => {
                                let mut it = elems.into_iter();
                                let head = it.next().unwrap();
                                Ok(Program::apply_all(head, it.collect()))
                            }
                        };
                    }
                    Some(_) => elems.push(parse_expr(tokens, pos, end, prims)?),
                    None => {
                        let _ = lparen;
                        return Err(ParseError::Syntax(end, "expected ')'".to_owned()));
                    }
                }
            }
        }
    }
}

fn parse_atom(off: usize, atom: &str, prims: &PrimitiveSet) -> Result<Program, ParseError> {
    if let Some(digits) = atom.strip_prefix('$') {
        return digits
            .parse::<usize>()
            .map(Program::Index)
            .map_err(|_| ParseError::Syntax(off, format!("invalid index {:?}", atom)));
    }
    if atom == "lambda" {
        return Err(ParseError::Syntax(off, "lambda outside parentheses".to_owned()));
    }
    if prims.contains(atom) {
        Ok(Program::primitive(atom))
    } else {
        Err(ParseError::UnknownIdentifier(off, atom.to_owned()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::PrimitiveSet;

    fn prims() -> PrimitiveSet {
        PrimitiveSet::builtin()
    }

    #[test]
    fn parses_identity() {
        let p = Program::parse("(lambda $0)", &prims()).unwrap();
        assert_eq!(p, Program::abstraction(Program::Index(0)));
    }

    #[test]
    fn parses_doubling_body() {
        let p = Program::parse("(lambda (+ $0 $0))", &prims()).unwrap();
        let expected = Program::abstraction(Program::apply_all(
            Program::primitive("+"),
            vec![Program::Index(0), Program::Index(0)],
        ));
        assert_eq!(p, expected);
    }

    #[test]
    fn unbalanced_paren_offset() {
        let err = Program::parse("(lambda ($1)", &prims()).unwrap_err();
        assert_eq!(err, ParseError::Syntax(12, "expected ')'".to_owned()));
    }

    #[test]
    fn unknown_identifier_reported() {
        let err = Program::parse("(lambda (frobnicate $0))", &prims()).unwrap_err();
        assert!(matches!(err, ParseError::UnknownIdentifier(9, name) if name == "frobnicate"));
    }

    #[test]
    fn render_examples() {
        assert_eq!(Program::abstraction(Program::Index(0)).render(), "(lambda $0)");
        assert_eq!(Program::primitive("map").render(), "map");
        let inv = Program::invented(Program::parse("(lambda (+ $0 1))", &prims()).unwrap());
        assert_eq!(inv.render(), "#(lambda (+ $0 1))");
        assert_eq!(Program::parse(&inv.render(), &prims()).unwrap(), inv);
    }

    #[test]
    fn parenthesized_single_expression_collapses() {
        let p = Program::parse("(lambda ($0))", &prims()).unwrap();
        assert_eq!(p, Program::abstraction(Program::Index(0)));
    }

    #[test]
    fn size_counts_non_application_symbols() {
        let prims = prims();
        assert_eq!(Program::parse("(lambda $0)", &prims).unwrap().size(), 2);
        assert_eq!(Program::parse("(lambda (+ $0 $0))", &prims).unwrap().size(), 4);
        assert_eq!(Program::primitive("map").size(), 1);
        let inv = Program::invented(Program::parse("(lambda (+ $0 1))", &prims).unwrap());
        assert_eq!(inv.size(), 1);
    }

    #[test]
    fn infer_identity_type() {
        let p = Program::parse("(lambda $0)", &prims()).unwrap();
        assert_eq!(p.infer_type(&prims()).unwrap().to_string(), "t0 \u{2192} t0");
    }

    #[test]
    fn infer_increment_type() {
        let p = Program::parse("(lambda (+ $0 1))", &prims()).unwrap();
        assert_eq!(p.infer_type(&prims()).unwrap().to_string(), "int \u{2192} int");
    }

    #[test]
    fn infer_type_mismatch() {
        let prims = prims();
        let p = Program::parse("(+ true 1)", &prims).unwrap();
        assert!(matches!(p.infer_type(&prims), Err(TypeError::Mismatch(..))));
    }

    #[test]
    fn beta_reduce_redex() {
        let prims = prims();
        let p = Program::parse("((lambda (+ $0 $0)) 1)", &prims).unwrap();
        let reduced = p.beta_reduce_once().unwrap();
        assert_eq!(reduced, Program::parse("(+ 1 1)", &prims).unwrap());
    }

    #[test]
    fn shift_round_trip() {
        let p = Program::parse("(lambda (+ $0 $1))", &prims()).unwrap();
        let up = p.shift(2).unwrap();
        assert_eq!(up.shift(-2).unwrap(), p);
        assert_eq!(p.free_index_bound(), 1);
    }
}
