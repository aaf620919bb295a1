//! The primitive registry: named, typed productions with built-in
//! implementations, loadable from a JSON manifest.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{EvalError, Evaluator, Value};
use crate::types::{parse_type, PolyType, TypeError};

pub type PrimImpl = fn(&mut Evaluator, &[Value]) -> Result<Value, EvalError>;

#[derive(Debug, Clone)]
pub struct PrimitiveDef {
    pub name: String,
    pub ptype: PolyType,
    pub impl_key: String,
}

/// Registry of primitives available to the parser, type checker and
/// evaluator. Implementations are resolved from `impl_key` at load time.
pub struct PrimitiveSet {
    defs: Vec<PrimitiveDef>,
    impls: Vec<PrimImpl>,
    arities: Vec<usize>,
    by_name: HashMap<String, usize>,
}

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("invalid type for primitive {0}: {1}")]
    BadType(String, TypeError),
    #[error("unknown implementation key {1:?} for primitive {0}")]
    UnknownImpl(String, String),
    #[error("duplicate primitive name {0}")]
    Duplicate(String),
}

#[derive(Serialize, Deserialize)]
struct ManifestEntry {
    name: String,
    #[serde(rename = "type")]
    type_string: String,
    #[serde(rename = "impl")]
    impl_key: String,
}

impl PrimitiveSet {
    pub fn from_defs(defs: Vec<PrimitiveDef>) -> Result<PrimitiveSet, RegistryError> {
        let mut set = PrimitiveSet {
            defs: Vec::new(),
            impls: Vec::new(),
            arities: Vec::new(),
            by_name: HashMap::new(),
        };
        for def in defs {
            if set.by_name.contains_key(&def.name) {
                return Err(RegistryError::Duplicate(def.name));
            }
            let imp = impl_for_key(&def.impl_key)
                .ok_or_else(|| RegistryError::UnknownImpl(def.name.clone(), def.impl_key.clone()))?;
            let arity = def.ptype.body().arg_spine().0.len();
            set.by_name.insert(def.name.clone(), set.defs.len());
            set.impls.push(imp);
            set.arities.push(arity);
            set.defs.push(def);
        }
        Ok(set)
    }

    /// Every primitive known to this build.
    pub fn builtin() -> PrimitiveSet {
        let specs: &[(&str, &str, &str)] = &[
            ("0", "int", "zero"),
            ("1", "int", "one"),
            ("+", "int -> int -> int", "add-int"),
            ("-", "int -> int -> int", "sub-int"),
            (">", "int -> int -> bool", "gt-int"),
            ("eq?", "int -> int -> bool", "eq-int"),
            ("even?", "int -> bool", "even-int"),
            ("true", "bool", "true"),
            ("false", "bool", "false"),
            ("if", "bool -> t0 -> t0 -> t0", "if"),
            ("Y", "((t0 -> t1) -> t0 -> t1) -> t0 -> t1", "fix"),
            ("nil", "list(t0)", "nil"),
            ("cons", "t0 -> list(t0) -> list(t0)", "cons"),
            ("car", "list(t0) -> t0", "car"),
            ("cdr", "list(t0) -> list(t0)", "cdr"),
            ("empty?", "list(t0) -> bool", "is-empty"),
            ("map", "(t0 -> t1) -> list(t0) -> list(t1)", "map"),
            ("fold", "(t1 -> t0 -> t1) -> t1 -> list(t0) -> t1", "fold"),
            ("filter", "(t0 -> bool) -> list(t0) -> list(t0)", "filter"),
            ("space", "char", "char-space"),
            ("dot", "char", "char-dot"),
            ("dash", "char", "char-dash"),
            ("char=?", "char -> char -> bool", "eq-char"),
            ("+.", "real -> real -> real", "add-real"),
            ("-.", "real -> real -> real", "sub-real"),
            ("*.", "real -> real -> real", "mul-real"),
            ("/.", "real -> real -> real", "div-real"),
            ("param0", "real", "param-0"),
            ("param1", "real", "param-1"),
            ("param2", "real", "param-2"),
            ("param3", "real", "param-3"),
        ];
        let defs = specs
            .iter()
            .map(|(name, tp, key)| PrimitiveDef {
                name: (*name).to_owned(),
                ptype: PolyType::parse(tp).expect("builtin type"),
                impl_key: (*key).to_owned(),
            })
            .collect();
        PrimitiveSet::from_defs(defs).expect("builtin registry")
    }

    pub fn from_manifest(json: &str) -> Result<PrimitiveSet, Box<dyn std::error::Error>> {
        let entries: Vec<ManifestEntry> = serde_json::from_str(json)?;
        let mut defs = Vec::new();
        for e in entries {
            let t = parse_type(&e.type_string)
                .map_err(|err| RegistryError::BadType(e.name.clone(), err))?;
            defs.push(PrimitiveDef {
                name: e.name,
                ptype: PolyType::new(t),
                impl_key: e.impl_key,
            });
        }
        Ok(PrimitiveSet::from_defs(defs)?)
    }

    pub fn to_manifest(&self) -> String {
        let entries: Vec<ManifestEntry> = self
            .defs
            .iter()
            .map(|d| ManifestEntry {
                name: d.name.clone(),
                type_string: d.ptype.to_string(),
                impl_key: d.impl_key.clone(),
            })
            .collect();
        serde_json::to_string_pretty(&entries).expect("manifest serialization")
    }

    pub fn contains(&self, name: &str) -> bool {
        self.by_name.contains_key(name)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn polytype(&self, name: &str) -> Option<&PolyType> {
        self.index_of(name).map(|i| &self.defs[i].ptype)
    }

    pub fn def(&self, idx: usize) -> &PrimitiveDef {
        &self.defs[idx]
    }

    pub fn arity(&self, idx: usize) -> usize {
        self.arities[idx]
    }

    pub fn implementation(&self, idx: usize) -> PrimImpl {
        self.impls[idx]
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.defs.iter().map(|d| d.name.as_str())
    }
}

fn impl_for_key(key: &str) -> Option<PrimImpl> {
    Some(match key {
        "zero" => |_: &mut Evaluator, _: &[Value]| Ok(Value::Int(0)),
        "one" => |_: &mut Evaluator, _: &[Value]| Ok(Value::Int(1)),
        "add-int" => |_: &mut Evaluator, args: &[Value]| {
            Ok(Value::Int(args[0].as_int()?.wrapping_add(args[1].as_int()?)))
        },
        "sub-int" => |_: &mut Evaluator, args: &[Value]| {
            Ok(Value::Int(args[0].as_int()?.wrapping_sub(args[1].as_int()?)))
        },
        "gt-int" => {
            |_: &mut Evaluator, args: &[Value]| Ok(Value::Bool(args[0].as_int()? > args[1].as_int()?))
        }
        "eq-int" => {
            |_: &mut Evaluator, args: &[Value]| Ok(Value::Bool(args[0].as_int()? == args[1].as_int()?))
        }
        "even-int" => {
            |_: &mut Evaluator, args: &[Value]| Ok(Value::Bool(args[0].as_int()?.rem_euclid(2) == 0))
        }
        "true" => |_: &mut Evaluator, _: &[Value]| Ok(Value::Bool(true)),
        "false" => |_: &mut Evaluator, _: &[Value]| Ok(Value::Bool(false)),
        "if" => |_: &mut Evaluator, args: &[Value]| match args[0] {
            Value::Bool(true) => Ok(args[1].clone()),
            Value::Bool(false) => Ok(args[2].clone()),
            _ => Err(EvalError::Runtime("if condition must be boolean".to_owned())),
        },
        // Y is used fully applied: (Y f x). The fixpoint value re-enters
        // apply_value on each unfolding, so self-loops exhaust the budget.
        "fix" => |ev: &mut Evaluator, args: &[Value]| {
            let fixpoint = Value::Fix {
                func: Box::new(args[0].clone()),
            };
            ev.apply_value(fixpoint, args[1].clone())
        },
        "nil" => |_: &mut Evaluator, _: &[Value]| Ok(Value::List(vec![])),
        "cons" => |_: &mut Evaluator, args: &[Value]| {
            let mut items = vec![args[0].clone()];
            items.extend(args[1].as_list()?.iter().cloned());
            Ok(Value::List(items))
        },
        "car" => |_: &mut Evaluator, args: &[Value]| {
            args[0]
                .as_list()?
                .first()
                .cloned()
                .ok_or_else(|| EvalError::Runtime("car of empty list".to_owned()))
        },
        "cdr" => |_: &mut Evaluator, args: &[Value]| {
            let items = args[0].as_list()?;
            if items.is_empty() {
                Err(EvalError::Runtime("cdr of empty list".to_owned()))
            } else {
                Ok(Value::List(items[1..].to_vec()))
            }
        },
        "is-empty" => {
            |_: &mut Evaluator, args: &[Value]| Ok(Value::Bool(args[0].as_list()?.is_empty()))
        }
        "map" => |ev: &mut Evaluator, args: &[Value]| {
            let items = args[1].as_list()?.to_vec();
            let mut out = Vec::with_capacity(items.len());
            for item in items {
                out.push(ev.apply_value(args[0].clone(), item)?);
            }
            Ok(Value::List(out))
        },
        "fold" => |ev: &mut Evaluator, args: &[Value]| {
            let items = args[2].as_list()?.to_vec();
            let mut acc = args[1].clone();
            for item in items {
                let step = ev.apply_value(args[0].clone(), acc)?;
                acc = ev.apply_value(step, item)?;
            }
            Ok(acc)
        },
        "filter" => |ev: &mut Evaluator, args: &[Value]| {
            let items = args[1].as_list()?.to_vec();
            let mut out = Vec::new();
            for item in items {
                match ev.apply_value(args[0].clone(), item.clone())? {
                    Value::Bool(true) => out.push(item),
                    Value::Bool(false) => {}
                    _ => return Err(EvalError::Runtime("filter predicate must be boolean".to_owned())),
                }
            }
            Ok(Value::List(out))
        },
        "char-space" => |_: &mut Evaluator, _: &[Value]| Ok(Value::Char(' ')),
        "char-dot" => |_: &mut Evaluator, _: &[Value]| Ok(Value::Char('.')),
        "char-dash" => |_: &mut Evaluator, _: &[Value]| Ok(Value::Char('-')),
        "eq-char" => {
            |_: &mut Evaluator, args: &[Value]| Ok(Value::Bool(args[0].as_char()? == args[1].as_char()?))
        }
        "add-real" => {
            |_: &mut Evaluator, args: &[Value]| Ok(Value::Real(args[0].as_real()? + args[1].as_real()?))
        }
        "sub-real" => {
            |_: &mut Evaluator, args: &[Value]| Ok(Value::Real(args[0].as_real()? - args[1].as_real()?))
        }
        "mul-real" => {
            |_: &mut Evaluator, args: &[Value]| Ok(Value::Real(args[0].as_real()? * args[1].as_real()?))
        }
        "div-real" => {
            |_: &mut Evaluator, args: &[Value]| Ok(Value::Real(args[0].as_real()? / args[1].as_real()?))
        }
        "param-0" => |ev: &mut Evaluator, _: &[Value]| ev.param(0),
        "param-1" => |ev: &mut Evaluator, _: &[Value]| ev.param(1),
        "param-2" => |ev: &mut Evaluator, _: &[Value]| ev.param(2),
        "param-3" => |ev: &mut Evaluator, _: &[Value]| ev.param(3),
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_registry_loads() {
        let prims = PrimitiveSet::builtin();
        assert!(prims.contains("map"));
        assert_eq!(prims.arity(prims.index_of("map").unwrap()), 2);
        assert_eq!(prims.arity(prims.index_of("0").unwrap()), 0);
    }

    #[test]
    fn manifest_round_trip() {
        let prims = PrimitiveSet::builtin();
        let manifest = prims.to_manifest();
        let reloaded = PrimitiveSet::from_manifest(&manifest).unwrap();
        assert_eq!(reloaded.to_manifest(), manifest);
    }

    #[test]
    fn unknown_impl_key_rejected() {
        let defs = vec![PrimitiveDef {
            name: "mystery".to_owned(),
            ptype: PolyType::parse("int").unwrap(),
            impl_key: "no-such-impl".to_owned(),
        }];
        assert!(matches!(
            PrimitiveSet::from_defs(defs),
            Err(RegistryError::UnknownImpl(..))
        ));
    }
}
