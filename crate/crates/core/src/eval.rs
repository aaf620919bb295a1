//! Call-by-value evaluation with an explicit step budget.
//!
//! The budget counts beta reductions and primitive applications, making
//! nontermination detection machine-independent. `if` is evaluated lazily in
//! its branches when fully applied; recursion enters only through the
//! fixed-point primitive, whose unfoldings are charged against the budget.

use std::sync::Arc;

use thiserror::Error;

use crate::primitives::PrimitiveSet;
use crate::program::Program;

pub const DEFAULT_STEP_BUDGET: u64 = 10_000;

/// Bound on nested applications. Recursion this deep on the supported task
/// scales signals a loop, and the evaluator's own stack frames track
/// application depth, so the bound also keeps native stack usage fixed.
pub const MAX_APPLY_DEPTH: u32 = 300;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Bool(bool),
    Char(char),
    Real(f64),
    List(Vec<Value>),
    Closure { env: Vec<Value>, body: Arc<Program> },
    Partial { prim: usize, args: Vec<Value> },
    Fix { func: Box<Value> },
}

impl Value {
    pub fn as_int(&self) -> Result<i64, EvalError> {
        match self {
            Value::Int(n) => Ok(*n),
            other => Err(EvalError::Runtime(format!("expected int, got {:?}", other.kind()))),
        }
    }

    pub fn as_bool(&self) -> Result<bool, EvalError> {
        match self {
            Value::Bool(b) => Ok(*b),
            other => Err(EvalError::Runtime(format!("expected bool, got {:?}", other.kind()))),
        }
    }

    pub fn as_char(&self) -> Result<char, EvalError> {
        match self {
            Value::Char(c) => Ok(*c),
            other => Err(EvalError::Runtime(format!("expected char, got {:?}", other.kind()))),
        }
    }

    pub fn as_real(&self) -> Result<f64, EvalError> {
        match self {
            Value::Real(x) => Ok(*x),
            other => Err(EvalError::Runtime(format!("expected real, got {:?}", other.kind()))),
        }
    }

    pub fn as_list(&self) -> Result<&[Value], EvalError> {
        match self {
            Value::List(items) => Ok(items),
            other => Err(EvalError::Runtime(format!("expected list, got {:?}", other.kind()))),
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Value::Int(_) => "int",
            Value::Bool(_) => "bool",
            Value::Char(_) => "char",
            Value::Real(_) => "real",
            Value::List(_) => "list",
            Value::Closure { .. } => "closure",
            Value::Partial { .. } => "partial",
            Value::Fix { .. } => "fixpoint",
        }
    }

    /// True when the value contains no function values.
    pub fn is_first_order(&self) -> bool {
        match self {
            Value::List(items) => items.iter().all(Value::is_first_order),
            Value::Closure { .. } | Value::Partial { .. } | Value::Fix { .. } => false,
            _ => true,
        }
    }

    pub fn string(s: &str) -> Value {
        Value::List(s.chars().map(Value::Char).collect())
    }

    pub fn int_list(xs: &[i64]) -> Value {
        Value::List(xs.iter().map(|&x| Value::Int(x)).collect())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("step budget exhausted")]
    BudgetExhausted,
    #[error("runtime error: {0}")]
    Runtime(String),
}

pub struct Evaluator<'a> {
    prims: &'a PrimitiveSet,
    steps_left: u64,
    budget: u64,
    depth: u32,
    params: &'a [f64],
}

impl<'a> Evaluator<'a> {
    pub fn new(prims: &'a PrimitiveSet, budget: u64) -> Evaluator<'a> {
        Evaluator {
            prims,
            steps_left: budget,
            budget,
            depth: 0,
            params: &[],
        }
    }

    pub fn with_params(prims: &'a PrimitiveSet, budget: u64, params: &'a [f64]) -> Evaluator<'a> {
        Evaluator {
            prims,
            steps_left: budget,
            budget,
            depth: 0,
            params,
        }
    }

    pub fn steps_used(&self) -> u64 {
        self.budget - self.steps_left
    }

    pub fn param(&mut self, idx: usize) -> Result<Value, EvalError> {
        self.params
            .get(idx)
            .map(|&x| Value::Real(x))
            .ok_or_else(|| EvalError::Runtime(format!("parameter {} not bound", idx)))
    }

    fn charge(&mut self) -> Result<(), EvalError> {
        if self.steps_left == 0 {
            return Err(EvalError::BudgetExhausted);
        }
        self.steps_left -= 1;
        Ok(())
    }

    pub fn eval(&mut self, p: &Program, env: &[Value]) -> Result<Value, EvalError> {
        match p {
            Program::Index(i) => env
                .get(env.len().wrapping_sub(1 + i))
                .cloned()
                .ok_or_else(|| EvalError::Runtime(format!("unbound index ${}", i))),
            Program::Abstraction(body) => Ok(Value::Closure {
                env: env.to_vec(),
                body: Arc::new(body.as_ref().clone()),
            }),
            Program::Primitive(name) => {
                let idx = self
                    .prims
                    .index_of(name)
                    .ok_or_else(|| EvalError::Runtime(format!("unknown primitive {}", name)))?;
                if self.prims.arity(idx) == 0 {
                    self.charge()?;
                    (self.prims.implementation(idx))(self, &[])
                } else {
                    Ok(Value::Partial { prim: idx, args: vec![] })
                }
            }
            Program::Invented(definition) => self.eval(definition, &[]),
            Program::Application(func, arg) => {
                let (head, spine_args) = p.spine();
                if let Program::Primitive(name) = head {
                    if name == "if" && spine_args.len() == 3 {
                        self.charge()?;
                        return match self.eval(spine_args[0], env)? {
                            Value::Bool(true) => self.eval(spine_args[1], env),
                            Value::Bool(false) => self.eval(spine_args[2], env),
                            _ => Err(EvalError::Runtime("if condition must be boolean".to_owned())),
                        };
                    }
                }
                let vf = self.eval(func, env)?;
                let vx = self.eval(arg, env)?;
                self.apply_value(vf, vx)
            }
        }
    }

    pub fn apply_value(&mut self, func: Value, arg: Value) -> Result<Value, EvalError> {
        self.depth += 1;
        if self.depth > MAX_APPLY_DEPTH {
            self.depth -= 1;
            return Err(EvalError::BudgetExhausted);
        }
        let result = self.apply_inner(func, arg);
        self.depth -= 1;
        result
    }

    fn apply_inner(&mut self, func: Value, arg: Value) -> Result<Value, EvalError> {
        self.charge()?;
        match func {
            Value::Closure { mut env, body } => {
                env.push(arg);
                self.eval(&body, &env)
            }
            Value::Partial { prim, mut args } => {
                args.push(arg);
                if args.len() == self.prims.arity(prim) {
                    (self.prims.implementation(prim))(self, &args)
                } else {
                    Ok(Value::Partial { prim, args })
                }
            }
            Value::Fix { func } => {
                let unrolled = self.apply_value(
                    (*func).clone(),
                    Value::Fix { func: func.clone() },
                )?;
                self.apply_value(unrolled, arg)
            }
            other => Err(EvalError::Runtime(format!(
                "cannot apply non-function {:?}",
                other.kind()
            ))),
        }
    }
}

/// Applies a closed program to arguments under a step budget. Returns the
/// result value and the number of steps consumed.
pub fn evaluate(
    p: &Program,
    args: &[Value],
    budget: u64,
    prims: &PrimitiveSet,
) -> Result<(Value, u64), (EvalError, u64)> {
    evaluate_with_params(p, args, budget, prims, &[])
}

pub fn evaluate_with_params(
    p: &Program,
    args: &[Value],
    budget: u64,
    prims: &PrimitiveSet,
    params: &[f64],
) -> Result<(Value, u64), (EvalError, u64)> {
    let mut ev = Evaluator::with_params(prims, budget, params);
    let result = eval_applied(&mut ev, p, args);
    let used = ev.steps_used();
    result.map(|v| (v, used)).map_err(|e| (e, used))
}

fn eval_applied(ev: &mut Evaluator, p: &Program, args: &[Value]) -> Result<Value, EvalError> {
    let mut v = ev.eval(p, &[])?;
    for a in args {
        v = ev.apply_value(v, a.clone())?;
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::Program;

    fn prims() -> PrimitiveSet {
        PrimitiveSet::builtin()
    }

    fn run(src: &str, args: &[Value]) -> Result<Value, EvalError> {
        let prims = prims();
        let p = Program::parse(src, &prims).unwrap();
        evaluate(&p, args, DEFAULT_STEP_BUDGET, &prims)
            .map(|(v, _)| v)
            .map_err(|(e, _)| e)
    }

    #[test]
    fn identity_applied() {
        assert_eq!(run("(lambda $0)", &[Value::Int(7)]).unwrap(), Value::Int(7));
    }

    #[test]
    fn doubles_each_list_element() {
        let result = run(
            "(lambda (map (lambda (+ $0 $0)) $0))",
            &[Value::int_list(&[1, 2, 3])],
        )
        .unwrap();
        assert_eq!(result, Value::int_list(&[2, 4, 6]));
    }

    #[test]
    fn recursive_double_via_fixpoint() {
        let src = "(lambda ((Y (lambda (lambda (if (empty? $0) nil \
                   (cons (+ (car $0) (car $0)) ($1 (cdr $0))))))) $0))";
        let result = run(src, &[Value::int_list(&[1, 2, 3])]).unwrap();
        assert_eq!(result, Value::int_list(&[2, 4, 6]));
    }

    #[test]
    fn fixpoint_self_loop_exhausts_budget() {
        let err = run("(lambda ((Y (lambda (lambda ($1 $0)))) $0))", &[Value::Int(0)]).unwrap_err();
        assert_eq!(err, EvalError::BudgetExhausted);
    }

    #[test]
    fn car_of_empty_list_is_runtime_error() {
        let err = run("(car nil)", &[]).unwrap_err();
        assert!(matches!(err, EvalError::Runtime(_)));
    }

    #[test]
    fn evaluation_is_deterministic() {
        let prims = prims();
        let p = Program::parse("(lambda (fold (lambda (lambda (+ $0 $1))) 0 $0))", &prims).unwrap();
        let args = [Value::int_list(&[3, 1, 4, 1, 5])];
        let a = evaluate(&p, &args, DEFAULT_STEP_BUDGET, &prims).unwrap();
        let b = evaluate(&p, &args, DEFAULT_STEP_BUDGET, &prims).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.0, Value::Int(14));
    }

    #[test]
    fn branch_not_taken_is_not_evaluated() {
        // The untaken branch would crash on (car nil).
        let result = run("(if true 1 (car nil))", &[]).unwrap();
        assert_eq!(result, Value::Int(1));
    }

    #[test]
    fn filter_keeps_matching_elements() {
        let result = run("(lambda (filter even? $0))", &[Value::int_list(&[1, 2, 3, 4])]).unwrap();
        assert_eq!(result, Value::int_list(&[2, 4]));
    }
}
