//! Tasks: observable data plus a likelihood over programs.
//!
//! List and text tasks are specified by input/output examples and score 0 or
//! negative infinity (exact match on every example). Regression tasks carry
//! sampled (x, y) points and score with a Gaussian likelihood after
//! constant fitting, penalized per continuous parameter (see
//! [`crate::regression`]).

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{evaluate, EvalError, Value};
use crate::primitives::PrimitiveSet;
use crate::program::Program;
use crate::regression;
use crate::types::{parse_type, PolyType, Type};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskDomain {
    List,
    Text,
    Regression,
}

impl fmt::Display for TaskDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TaskDomain::List => write!(f, "list"),
            TaskDomain::Text => write!(f, "text"),
            TaskDomain::Regression => write!(f, "regression"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IoExample {
    pub inputs: Vec<Value>,
    pub output: Value,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Observations {
    Examples(Vec<IoExample>),
    Points(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub id: String,
    pub name: String,
    pub domain: TaskDomain,
    pub request_type: PolyType,
    pub observations: Observations,
}

#[derive(Debug, Error)]
pub enum TaskError {
    #[error("{0}")]
    Schema(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Task {
    pub fn examples(&self) -> &[IoExample] {
        match &self.observations {
            Observations::Examples(ex) => ex,
            Observations::Points(_) => &[],
        }
    }

    pub fn points(&self) -> &[(f64, f64)] {
        match &self.observations {
            Observations::Points(p) => p,
            Observations::Examples(_) => &[],
        }
    }

    pub fn validate(&self, path: &str) -> Result<(), TaskError> {
        match &self.observations {
            Observations::Examples(examples) => {
                if examples.is_empty() {
                    return Err(TaskError::Schema(format!("{}: no examples", path)));
                }
                let (arg_types, _) = self.request_type.body().arg_spine();
                for (i, ex) in examples.iter().enumerate() {
                    if ex.inputs.len() != arg_types.len() {
                        return Err(TaskError::Schema(format!(
                            "{}.examples[{}]: expected {} inputs, found {}",
                            path,
                            i,
                            arg_types.len(),
                            ex.inputs.len()
                        )));
                    }
                    for (j, (v, t)) in ex.inputs.iter().zip(&arg_types).enumerate() {
                        if !value_matches_type(v, t) {
                            return Err(TaskError::Schema(format!(
                                "{}.examples[{}].inputs[{}]: value does not match type {}",
                                path, i, j, t
                            )));
                        }
                    }
                }
            }
            Observations::Points(points) => {
                if points.len() < 20 {
                    return Err(TaskError::Schema(format!(
                        "{}: regression tasks need at least 20 points, found {}",
                        path,
                        points.len()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Log likelihood of the task data given a program; exact-match 0/-inf
    /// for IO domains, Gaussian with a BIC parameter penalty for regression.
    /// Also returns the evaluation steps spent (for search budgeting).
    pub fn log_likelihood(&self, p: &Program, prims: &PrimitiveSet, eval_budget: u64) -> (f64, u64) {
        match self.domain {
            TaskDomain::List | TaskDomain::Text => io_likelihood(self, p, prims, eval_budget),
            TaskDomain::Regression => regression::regression_likelihood(self, p, prims),
        }
    }

    pub fn log_likelihood_cached(
        &self,
        p: &Program,
        prims: &PrimitiveSet,
        eval_budget: u64,
        cache: &mut EvalCache,
    ) -> (f64, u64) {
        match self.domain {
            TaskDomain::List | TaskDomain::Text => {
                io_likelihood_cached(self, p, prims, eval_budget, cache)
            }
            TaskDomain::Regression => regression::regression_likelihood(self, p, prims),
        }
    }
}

/// Structural check that a first-order runtime value inhabits a type.
pub fn value_matches_type(v: &Value, t: &Type) -> bool {
    match (v, t) {
        (Value::Int(_), Type::Con(n, _)) => n == "int",
        (Value::Bool(_), Type::Con(n, _)) => n == "bool",
        (Value::Char(_), Type::Con(n, _)) => n == "char",
        (Value::Real(_), Type::Con(n, _)) => n == "real",
        (Value::List(items), Type::Con(n, args)) if n == "list" && args.len() == 1 => {
            items.iter().all(|i| value_matches_type(i, &args[0]))
        }
        (_, Type::Var(_)) => true,
        _ => false,
    }
}

/// Exact-match likelihood: zero when the program reproduces every stored
/// output, negative infinity otherwise (evaluation errors included).
pub fn io_likelihood(task: &Task, p: &Program, prims: &PrimitiveSet, eval_budget: u64) -> (f64, u64) {
    let mut work = 0;
    for ex in task.examples() {
        match evaluate(p, &ex.inputs, eval_budget, prims) {
            Ok((v, steps)) => {
                work += steps;
                if v != ex.output {
                    return (f64::NEG_INFINITY, work);
                }
            }
            Err((_, steps)) => {
                work += steps;
                return (f64::NEG_INFINITY, work);
            }
        }
    }
    (0.0, work)
}

/// Cache of per-(program, example) evaluation results shared across repeated
/// likelihood calls within one search.
#[derive(Default)]
pub struct EvalCache {
    entries: HashMap<(Program, usize), Result<Value, EvalError>>,
}

const EVAL_CACHE_CAPACITY: usize = 100_000;

impl EvalCache {
    pub fn new() -> EvalCache {
        EvalCache::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn io_likelihood_cached(
    task: &Task,
    p: &Program,
    prims: &PrimitiveSet,
    eval_budget: u64,
    cache: &mut EvalCache,
) -> (f64, u64) {
    let mut work = 0;
    for (i, ex) in task.examples().iter().enumerate() {
        let key = (p.clone(), i);
        let result = match cache.entries.get(&key) {
            Some(r) => r.clone(),
            None => {
                let r = match evaluate(p, &ex.inputs, eval_budget, prims) {
                    Ok((v, steps)) => {
                        work += steps;
                        Ok(v)
                    }
                    Err((e, steps)) => {
                        work += steps;
                        Err(e)
                    }
                };
                if cache.entries.len() >= EVAL_CACHE_CAPACITY {
                    cache.entries.clear();
                }
                cache.entries.insert(key, r.clone());
                r
            }
        };
        match result {
            Ok(v) if v == ex.output => {}
            _ => return (f64::NEG_INFINITY, work),
        }
    }
    (0.0, work)
}

// --- JSON encoding -------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskJson {
    pub id: String,
    pub name: String,
    pub domain: TaskDomain,
    #[serde(rename = "type")]
    pub type_string: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub examples: Option<Vec<ExampleJson>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExampleJson {
    pub inputs: Vec<serde_json::Value>,
    pub output: serde_json::Value,
}

/// Type-directed JSON encoding: strings for `str` values, one-character
/// strings for chars, arrays for other lists.
pub fn encode_value(v: &Value) -> serde_json::Value {
    match v {
        Value::Int(n) => serde_json::json!(n),
        Value::Bool(b) => serde_json::json!(b),
        Value::Real(x) => serde_json::json!(x),
        Value::Char(c) => serde_json::json!(c.to_string()),
        Value::List(items) => {
            if !items.is_empty() && items.iter().all(|i| matches!(i, Value::Char(_))) {
                let s: String = items
                    .iter()
                    .map(|i| match i {
                        Value::Char(c) => *c,
                        _ => unreachable!(),
                    })
                    .collect();
                serde_json::json!(s)
            } else {
                serde_json::Value::Array(items.iter().map(encode_value).collect())
            }
        }
        other => serde_json::json!(format!("<{:?}>", other)),
    }
}

pub fn decode_value(json: &serde_json::Value, t: &Type, path: &str) -> Result<Value, TaskError> {
    let fail = |msg: &str| TaskError::Schema(format!("{}: {}", path, msg));
    match t {
        Type::Con(n, _) if n == "int" => json
            .as_i64()
            .map(Value::Int)
            .ok_or_else(|| fail("expected int")),
        Type::Con(n, _) if n == "bool" => json
            .as_bool()
            .map(Value::Bool)
            .ok_or_else(|| fail("expected bool")),
        Type::Con(n, _) if n == "real" => json
            .as_f64()
            .map(Value::Real)
            .ok_or_else(|| fail("expected real")),
        Type::Con(n, _) if n == "char" => {
            let s = json.as_str().ok_or_else(|| fail("expected char"))?;
            let mut chars = s.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => Ok(Value::Char(c)),
                _ => Err(fail("expected single-character string")),
            }
        }
        Type::Con(n, args) if n == "list" && args.len() == 1 => {
            if let Some(s) = json.as_str() {
                if matches!(&args[0], Type::Con(e, _) if e == "char") {
                    return Ok(Value::string(s));
                }
            }
            let arr = json.as_array().ok_or_else(|| fail("expected list"))?;
            let mut items = Vec::with_capacity(arr.len());
            for (i, elem) in arr.iter().enumerate() {
                items.push(decode_value(elem, &args[0], &format!("{}[{}]", path, i))?);
            }
            Ok(Value::List(items))
        }
        other => Err(fail(&format!("unsupported value type {}", other))),
    }
}

impl Task {
    pub fn to_json(&self) -> TaskJson {
        let (examples, points) = match &self.observations {
            Observations::Examples(ex) => (
                Some(
                    ex.iter()
                        .map(|e| ExampleJson {
                            inputs: e.inputs.iter().map(encode_value).collect(),
                            output: encode_value(&e.output),
                        })
                        .collect(),
                ),
                None,
            ),
            Observations::Points(pts) => {
                (None, Some(pts.iter().map(|&(x, y)| [x, y]).collect()))
            }
        };
        TaskJson {
            id: self.id.clone(),
            name: self.name.clone(),
            domain: self.domain,
            type_string: self.request_type.to_string(),
            examples,
            points,
        }
    }

    pub fn from_json(json: &TaskJson, path: &str) -> Result<Task, TaskError> {
        let t = parse_type(&json.type_string)
            .map_err(|e| TaskError::Schema(format!("{}.type: {}", path, e)))?;
        let request_type = PolyType::new(t);
        let observations = match json.domain {
            TaskDomain::Regression => {
                let points = json
                    .points
                    .as_ref()
                    .ok_or_else(|| TaskError::Schema(format!("{}: missing points", path)))?;
                Observations::Points(points.iter().map(|p| (p[0], p[1])).collect())
            }
            _ => {
                let examples = json
                    .examples
                    .as_ref()
                    .ok_or_else(|| TaskError::Schema(format!("{}: missing examples", path)))?;
                let (arg_types, ret) = request_type.body().arg_spine();
                let mut decoded = Vec::with_capacity(examples.len());
                for (i, ex) in examples.iter().enumerate() {
                    if ex.inputs.len() != arg_types.len() {
                        return Err(TaskError::Schema(format!(
                            "{}.examples[{}]: expected {} inputs, found {}",
                            path,
                            i,
                            arg_types.len(),
                            ex.inputs.len()
                        )));
                    }
                    let mut inputs = Vec::with_capacity(ex.inputs.len());
                    for (j, (v, at)) in ex.inputs.iter().zip(&arg_types).enumerate() {
                        inputs.push(decode_value(
                            v,
                            at,
                            &format!("{}.examples[{}].inputs[{}]", path, i, j),
                        )?);
                    }
                    let output =
                        decode_value(&ex.output, ret, &format!("{}.examples[{}].output", path, i))?;
                    decoded.push(IoExample { inputs, output });
                }
                Observations::Examples(decoded)
            }
        };
        let task = Task {
            id: json.id.clone(),
            name: json.name.clone(),
            domain: json.domain,
            request_type,
            observations,
        };
        task.validate(path)?;
        Ok(task)
    }
}

pub fn load_tasks(path: &Path) -> Result<Vec<Task>, TaskError> {
    let text = fs::read_to_string(path)?;
    tasks_from_str(&text)
}

pub fn tasks_from_str(text: &str) -> Result<Vec<Task>, TaskError> {
    let raw: Vec<TaskJson> = serde_json::from_str(text)?;
    raw.iter()
        .enumerate()
        .map(|(i, tj)| Task::from_json(tj, &format!("task[{}]", i)))
        .collect()
}

pub fn save_tasks(tasks: &[Task], path: &Path) -> Result<(), TaskError> {
    fs::write(path, tasks_to_string(tasks))?;
    Ok(())
}

pub fn tasks_to_string(tasks: &[Task]) -> String {
    let raw: Vec<TaskJson> = tasks.iter().map(Task::to_json).collect();
    let mut s = serde_json::to_string_pretty(&raw).expect("task serialization");
    s.push('\n');
    s
}
