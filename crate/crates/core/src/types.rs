//! Polymorphic types and Hindley-Milner unification.
//!
//! Types are either variables or constructor applications; arrows are the
//! constructor `"->"` with two arguments. A [`PolyType`] is a type whose free
//! variables are implicitly universally quantified at the outermost level.

use std::fmt;

use thiserror::Error;

pub const ARROW: &str = "->";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Type {
    Var(usize),
    Con(String, Vec<Type>),
}

impl Type {
    pub fn con(name: &str, args: Vec<Type>) -> Type {
        Type::Con(name.to_owned(), args)
    }

    pub fn int() -> Type {
        Type::con("int", vec![])
    }

    pub fn bool() -> Type {
        Type::con("bool", vec![])
    }

    pub fn char() -> Type {
        Type::con("char", vec![])
    }

    pub fn real() -> Type {
        Type::con("real", vec![])
    }

    pub fn list(elem: Type) -> Type {
        Type::con("list", vec![elem])
    }

    pub fn arrow(from: Type, to: Type) -> Type {
        Type::con(ARROW, vec![from, to])
    }

    pub fn as_arrow(&self) -> Option<(&Type, &Type)> {
        match self {
            Type::Con(name, args) if name == ARROW && args.len() == 2 => {
                Some((&args[0], &args[1]))
            }
            _ => None,
        }
    }

    /// Splits `a -> b -> ... -> r` into (`[a, b, ...]`, `r`) where `r` is not
    /// syntactically an arrow.
    pub fn arg_spine(&self) -> (Vec<&Type>, &Type) {
        let mut args = Vec::new();
        let mut cur = self;
        while let Some((a, b)) = cur.as_arrow() {
            args.push(a);
            cur = b;
        }
        (args, cur)
    }

    pub fn free_vars(&self, out: &mut Vec<usize>) {
        match self {
            Type::Var(v) => {
                if !out.contains(v) {
                    out.push(*v);
                }
            }
            Type::Con(_, args) => {
                for a in args {
                    a.free_vars(out);
                }
            }
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, arrow_left: bool) -> fmt::Result {
        match self {
            Type::Var(v) => write!(f, "t{}", v),
            Type::Con(name, args) if name == ARROW && args.len() == 2 => {
                if arrow_left {
                    write!(f, "(")?;
                }
                args[0].fmt_prec(f, true)?;
                write!(f, " \u{2192} ")?;
                args[1].fmt_prec(f, false)?;
                if arrow_left {
                    write!(f, ")")?;
                }
                Ok(())
            }
            Type::Con(name, args) if name == "list" && args.len() == 1 => match &args[0] {
                Type::Con(e, a) if e == "int" && a.is_empty() => write!(f, "ilist"),
                Type::Con(e, a) if e == "char" && a.is_empty() => write!(f, "str"),
                other => {
                    write!(f, "list(")?;
                    other.fmt_prec(f, false)?;
                    write!(f, ")")
                }
            },
            Type::Con(name, args) => {
                write!(f, "{}", name)?;
                if !args.is_empty() {
                    write!(f, "(")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            write!(f, ", ")?;
                        }
                        a.fmt_prec(f, false)?;
                    }
                    write!(f, ")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, false)
    }
}

/// A type whose free variables are universally quantified.
///
/// Stored in canonical form: variables are numbered 0.. in order of first
/// appearance, so structural equality coincides with alpha-equivalence.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PolyType(Type);

impl PolyType {
    pub fn new(t: Type) -> PolyType {
        let mut mapping: Vec<usize> = Vec::new();
        PolyType(canonicalize(&t, &mut mapping))
    }

    pub fn body(&self) -> &Type {
        &self.0
    }

    pub fn parse(src: &str) -> Result<PolyType, TypeError> {
        parse_type(src).map(PolyType::new)
    }
}

impl fmt::Display for PolyType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

fn canonicalize(t: &Type, mapping: &mut Vec<usize>) -> Type {
    match t {
        Type::Var(v) => {
            if let Some(pos) = mapping.iter().position(|m| m == v) {
                Type::Var(pos)
            } else {
                mapping.push(*v);
                Type::Var(mapping.len() - 1)
            }
        }
        Type::Con(name, args) => Type::Con(
            name.clone(),
            args.iter().map(|a| canonicalize(a, mapping)).collect(),
        ),
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TypeError {
    #[error("cannot unify {0} with {1}")]
    Mismatch(String, String),
    #[error("occurs check failed: t{0} in {1}")]
    Occurs(usize, String),
    #[error("unknown primitive {0}")]
    UnknownPrimitive(String),
    #[error("unbound index ${0}")]
    UnboundIndex(usize),
    #[error("invalid type syntax at offset {0}: {1}")]
    Syntax(usize, String),
}

/// Unification state: a growable substitution with a trail for rollback.
#[derive(Debug, Clone, Default)]
pub struct TypeContext {
    subst: Vec<Option<Type>>,
    trail: Vec<usize>,
}

impl TypeContext {
    pub fn new() -> TypeContext {
        TypeContext::default()
    }

    pub fn fresh(&mut self) -> Type {
        self.subst.push(None);
        Type::Var(self.subst.len() - 1)
    }

    /// Instantiates a polytype with fresh variables.
    pub fn instantiate(&mut self, poly: &PolyType) -> Type {
        let mut vars = Vec::new();
        poly.body().free_vars(&mut vars);
        let fresh: Vec<Type> = vars.iter().map(|_| self.fresh()).collect();
        fn walk(t: &Type, vars: &[usize], fresh: &[Type]) -> Type {
            match t {
                Type::Var(v) => {
                    let pos = vars.iter().position(|m| m == v).unwrap();
                    fresh[pos].clone()
                }
                Type::Con(name, args) => Type::Con(
                    name.clone(),
                    args.iter().map(|a| walk(a, vars, fresh)).collect(),
                ),
            }
        }
        walk(poly.body(), &vars, &fresh)
    }

    fn resolve(&self, t: &Type) -> Type {
        let mut cur = t.clone();
        while let Type::Var(v) = cur {
            match self.subst.get(v).and_then(|s| s.clone()) {
                Some(next) => cur = next,
                None => return Type::Var(v),
            }
        }
        cur
    }

    /// Applies the substitution deeply.
    pub fn apply(&self, t: &Type) -> Type {
        let head = self.resolve(t);
        match head {
            Type::Var(v) => Type::Var(v),
            Type::Con(name, args) => {
                Type::Con(name, args.iter().map(|a| self.apply(a)).collect())
            }
        }
    }

    pub fn mark(&self) -> usize {
        self.trail.len()
    }

    pub fn rollback(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let v = self.trail.pop().unwrap();
            self.subst[v] = None;
        }
    }

    fn occurs(&self, v: usize, t: &Type) -> bool {
        match self.resolve(t) {
            Type::Var(w) => w == v,
            Type::Con(_, args) => args.iter().any(|a| self.occurs(v, a)),
        }
    }

    fn bind(&mut self, v: usize, t: Type) -> Result<(), TypeError> {
        if let Type::Var(w) = t {
            if w == v {
                return Ok(());
            }
        }
        if self.occurs(v, &t) {
            return Err(TypeError::Occurs(v, self.apply(&t).to_string()));
        }
        self.subst[v] = Some(t);
        self.trail.push(v);
        Ok(())
    }

    pub fn unify(&mut self, a: &Type, b: &Type) -> Result<(), TypeError> {
        let ra = self.resolve(a);
        let rb = self.resolve(b);
        match (ra, rb) {
            (Type::Var(v), t) => self.bind(v, t),
            (t, Type::Var(v)) => self.bind(v, t),
            (Type::Con(na, aa), Type::Con(nb, ab)) => {
                if na != nb || aa.len() != ab.len() {
                    return Err(TypeError::Mismatch(
                        self.apply(&Type::Con(na, aa)).to_string(),
                        self.apply(&Type::Con(nb, ab)).to_string(),
                    ));
                }
                for (x, y) in aa.iter().zip(&ab) {
                    self.unify(x, y)?;
                }
                Ok(())
            }
        }
    }

    /// Trial unification: succeeds or leaves the context untouched.
    pub fn unifies(&mut self, a: &Type, b: &Type) -> bool {
        let mark = self.mark();
        match self.unify(a, b) {
            Ok(()) => {
                self.rollback(mark);
                true
            }
            Err(_) => {
                self.rollback(mark);
                false
            }
        }
    }
}

/// Parses the textual type syntax used by manifests and task files.
///
/// Grammar: base types `int`, `bool`, `char`, `real`; sugar `ilist` and
/// `str`; variables `t0`, `t1`, ...; `list(T)`; right-associative arrows
/// written `->` or the arrow character.
pub fn parse_type(src: &str) -> Result<Type, TypeError> {
    let mut p = TypeParser {
        src,
        chars: src.char_indices().peekable(),
    };
    let t = p.parse_arrow()?;
    p.skip_ws();
    if let Some((off, c)) = p.chars.peek().copied() {
        return Err(TypeError::Syntax(off, format!("unexpected character {:?}", c)));
    }
    Ok(t)
}

struct TypeParser<'a> {
    src: &'a str,
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
}

impl<'a> TypeParser<'a> {
    fn skip_ws(&mut self) {
        while matches!(self.chars.peek(), Some((_, c)) if c.is_whitespace()) {
            self.chars.next();
        }
    }

    fn parse_arrow(&mut self) -> Result<Type, TypeError> {
        let lhs = self.parse_atom()?;
        self.skip_ws();
        match self.chars.peek().copied() {
            Some((_, '\u{2192}')) => {
                self.chars.next();
                let rhs = self.parse_arrow()?;
                Ok(Type::arrow(lhs, rhs))
            }
            Some((_, '-')) => {
                self.chars.next();
                match self.chars.next() {
                    Some((_, '>')) => {
                        let rhs = self.parse_arrow()?;
                        Ok(Type::arrow(lhs, rhs))
                    }
                    other => Err(TypeError::Syntax(
                        other.map_or(self.src.len(), |(o, _)| o),
                        "expected '>' after '-'".to_owned(),
                    )),
                }
            }
            _ => Ok(lhs),
        }
    }

    fn parse_atom(&mut self) -> Result<Type, TypeError> {
        self.skip_ws();
        match self.chars.peek().copied() {
            Some((_, '(')) => {
                self.chars.next();
                let inner = self.parse_arrow()?;
                self.skip_ws();
                match self.chars.next() {
                    Some((_, ')')) => Ok(inner),
                    other => Err(TypeError::Syntax(
                        other.map_or(self.src.len(), |(o, _)| o),
                        "expected ')'".to_owned(),
                    )),
                }
            }
            Some((off, c)) if c.is_alphanumeric() || c == '_' => {
                let mut name = String::new();
                while matches!(self.chars.peek(), Some((_, c)) if c.is_alphanumeric() || *c == '_')
                {
                    name.push(self.chars.next().unwrap().1);
                }
                if let Some(digits) = name.strip_prefix('t') {
                    if !digits.is_empty() && digits.chars().all(|c| c.is_ascii_digit()) {
                        return Ok(Type::Var(digits.parse().unwrap()));
                    }
                }
                match name.as_str() {
                    "int" => Ok(Type::int()),
                    "bool" => Ok(Type::bool()),
                    "char" => Ok(Type::char()),
                    "real" => Ok(Type::real()),
                    "ilist" => Ok(Type::list(Type::int())),
                    "str" => Ok(Type::list(Type::char())),
                    "list" => {
                        self.skip_ws();
                        match self.chars.next() {
                            Some((_, '(')) => {
                                let elem = self.parse_arrow()?;
                                self.skip_ws();
                                match self.chars.next() {
                                    Some((_, ')')) => Ok(Type::list(elem)),
                                    other => Err(TypeError::Syntax(
                                        other.map_or(self.src.len(), |(o, _)| o),
                                        "expected ')'".to_owned(),
                                    )),
                                }
                            }
                            other => Err(TypeError::Syntax(
                                other.map_or(self.src.len(), |(o, _)| o),
                                "expected '(' after list".to_owned(),
                            )),
                        }
                    }
                    _ => Err(TypeError::Syntax(off, format!("unknown type {}", name))),
                }
            }
            Some((off, c)) => Err(TypeError::Syntax(off, format!("unexpected character {:?}", c))),
            None => Err(TypeError::Syntax(self.src.len(), "unexpected end of type".to_owned())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display_round_trip() {
        for src in [
            "int",
            "ilist",
            "str",
            "int \u{2192} int",
            "(int \u{2192} int) \u{2192} ilist \u{2192} ilist",
            "list(t0)",
            "(t0 \u{2192} t1) \u{2192} list(t0) \u{2192} list(t1)",
        ] {
            let t = parse_type(src).unwrap();
            assert_eq!(t.to_string(), src);
        }
    }

    #[test]
    fn ascii_arrows_accepted() {
        assert_eq!(
            parse_type("int -> int").unwrap(),
            Type::arrow(Type::int(), Type::int())
        );
    }

    #[test]
    fn unify_mgu_symmetric() {
        let mut ctx = TypeContext::new();
        let a = ctx.fresh();
        let b = ctx.fresh();
        let t1 = Type::arrow(a.clone(), Type::int());
        let t2 = Type::arrow(Type::list(b.clone()), b.clone());
        ctx.unify(&t1, &t2).unwrap();
        assert_eq!(ctx.apply(&a), Type::list(Type::int()));
        assert_eq!(ctx.apply(&b), Type::int());

        let mut ctx2 = TypeContext::new();
        let a2 = ctx2.fresh();
        let b2 = ctx2.fresh();
        let s1 = Type::arrow(a2.clone(), Type::int());
        let s2 = Type::arrow(Type::list(b2.clone()), b2.clone());
        ctx2.unify(&s2, &s1).unwrap();
        assert_eq!(ctx2.apply(&a2), ctx.apply(&a));
    }

    #[test]
    fn occurs_check() {
        let mut ctx = TypeContext::new();
        let a = ctx.fresh();
        let arrow = Type::arrow(a.clone(), Type::int());
        assert!(matches!(ctx.unify(&a, &arrow), Err(TypeError::Occurs(..))));
    }

    #[test]
    fn rollback_restores_state() {
        let mut ctx = TypeContext::new();
        let a = ctx.fresh();
        let mark = ctx.mark();
        ctx.unify(&a, &Type::int()).unwrap();
        assert_eq!(ctx.apply(&a), Type::int());
        ctx.rollback(mark);
        assert_eq!(ctx.apply(&a), a);
    }

    #[test]
    fn polytype_canonical_alpha_equivalence() {
        let p1 = PolyType::new(Type::arrow(Type::Var(7), Type::Var(7)));
        let p2 = PolyType::new(Type::arrow(Type::Var(3), Type::Var(3)));
        assert_eq!(p1, p2);
        assert_eq!(p1.to_string(), "t0 \u{2192} t0");
    }
}
