//! The generative model over programs: a weighted library of typed
//! productions.
//!
//! Generation is top-down. At a hole with requested type `tau` and
//! environment `env`, the candidates are every production whose (fully
//! instantiated and argument-peeled) return type unifies with `tau`, plus
//! every environment variable that unifies the same way; variables share a
//! single weight. Candidate probabilities renormalize per hole. Holes of
//! arrow type introduce abstractions deterministically, so generated
//! programs are in eta-long form.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::primitives::PrimitiveSet;
use crate::program::Program;
use crate::types::{parse_type, PolyType, Type, TypeContext};

pub const DEFAULT_STRUCTURE_PENALTY: f64 = 1.5;
pub const WEIGHT_PSEUDOCOUNT: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct Production {
    pub program: Program,
    pub ptype: PolyType,
    pub log_weight: f64,
}

#[derive(Debug, Clone)]
pub struct Library {
    pub productions: Vec<Production>,
    pub variable_log_weight: f64,
}

#[derive(Debug, Error)]
pub enum LibraryError {
    #[error("duplicate production {0}")]
    Duplicate(String),
    #[error("production {0} is not closed")]
    NotClosed(String),
    #[error("production {0} has non-finite weight")]
    BadWeight(String),
    #[error("invalid production {0}: {1}")]
    Invalid(String, String),
}

impl Library {
    /// A uniform-weight library over the named primitives.
    pub fn uniform(names: &[&str], prims: &PrimitiveSet) -> Library {
        let productions = names
            .iter()
            .map(|name| {
                let idx = prims
                    .index_of(name)
                    .unwrap_or_else(|| panic!("unknown primitive {}", name));
                Production {
                    program: Program::primitive(name),
                    ptype: prims.def(idx).ptype.clone(),
                    log_weight: 0.0,
                }
            })
            .collect();
        Library {
            productions,
            variable_log_weight: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), LibraryError> {
        for (i, p) in self.productions.iter().enumerate() {
            if !p.program.is_closed() {
                return Err(LibraryError::NotClosed(p.program.render()));
            }
            if !p.log_weight.is_finite() {
                return Err(LibraryError::BadWeight(p.program.render()));
            }
            for q in &self.productions[..i] {
                if q.program == p.program {
                    return Err(LibraryError::Duplicate(p.program.render()));
                }
            }
        }
        if !self.variable_log_weight.is_finite() {
            return Err(LibraryError::BadWeight("$".to_owned()));
        }
        Ok(())
    }

    pub fn production_index(&self, program: &Program) -> Option<usize> {
        self.productions.iter().position(|p| &p.program == program)
    }

    pub fn contains_production(&self, program: &Program) -> bool {
        self.production_index(program).is_some()
    }

    /// Adds an invention; the polytype is inferred from the definition.
    pub fn with_invention(
        &self,
        definition: Program,
        prims: &PrimitiveSet,
        log_weight: f64,
    ) -> Result<Library, LibraryError> {
        let invented = Program::invented(definition);
        if self.contains_production(&invented) {
            return Err(LibraryError::Duplicate(invented.render()));
        }
        let ptype = invented
            .infer_type(prims)
            .map_err(|e| LibraryError::Invalid(invented.render(), e.to_string()))?;
        let mut lib = self.clone();
        lib.productions.push(Production {
            program: invented,
            ptype,
            log_weight,
        });
        Ok(lib)
    }

    /// The weight table carried by the library itself.
    pub fn own_weights(&self) -> WeightTable {
        WeightTable::Unigram {
            productions: self.productions.iter().map(|p| p.log_weight).collect(),
            variable: self.variable_log_weight,
        }
    }

    pub fn with_weights(&self, table: &WeightTable) -> Library {
        match table {
            WeightTable::Unigram { productions, variable } => {
                let mut lib = self.clone();
                for (p, w) in lib.productions.iter_mut().zip(productions) {
                    p.log_weight = *w;
                }
                lib.variable_log_weight = *variable;
                lib
            }
            WeightTable::Bigram { root, .. } => {
                let mut lib = self.clone();
                for (p, w) in lib.productions.iter_mut().zip(&root.productions) {
                    p.log_weight = *w;
                }
                lib.variable_log_weight = root.variable;
                lib
            }
        }
    }

    /// Maximum invention-call-chain length: primitives have depth 0, an
    /// invention is one deeper than the deepest invention it references.
    pub fn depth(&self) -> usize {
        fn program_depth(p: &Program) -> usize {
            match p {
                Program::Invented(d) => 1 + program_depth(d),
                Program::Abstraction(b) => program_depth(b),
                Program::Application(f, x) => program_depth(f).max(program_depth(x)),
                _ => 0,
            }
        }
        self.productions
            .iter()
            .map(|p| program_depth(&p.program))
            .max()
            .unwrap_or(0)
    }

    pub fn invention_count(&self) -> usize {
        self.productions
            .iter()
            .filter(|p| matches!(p.program, Program::Invented(_)))
            .count()
    }

    pub fn to_json(&self) -> LibraryJson {
        LibraryJson {
            productions: self
                .productions
                .iter()
                .map(|p| ProductionJson {
                    source: p.program.render(),
                    type_string: p.ptype.to_string(),
                    log_weight: p.log_weight,
                })
                .collect(),
            variable_log_weight: self.variable_log_weight,
        }
    }

    pub fn from_json(json: &LibraryJson, prims: &PrimitiveSet) -> Result<Library, LibraryError> {
        let mut productions = Vec::new();
        for pj in &json.productions {
            let program = Program::parse(&pj.source, prims)
                .map_err(|e| LibraryError::Invalid(pj.source.clone(), e.to_string()))?;
            let declared = parse_type(&pj.type_string)
                .map_err(|e| LibraryError::Invalid(pj.source.clone(), e.to_string()))?;
            let inferred = program
                .infer_type(prims)
                .map_err(|e| LibraryError::Invalid(pj.source.clone(), e.to_string()))?;
            if PolyType::new(declared.clone()) != inferred {
                return Err(LibraryError::Invalid(
                    pj.source.clone(),
                    format!("declared type {} does not match inferred {}", declared, inferred),
                ));
            }
            productions.push(Production {
                program,
                ptype: inferred,
                log_weight: pj.log_weight,
            });
        }
        let lib = Library {
            productions,
            variable_log_weight: json.variable_log_weight,
        };
        lib.validate()?;
        Ok(lib)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LibraryJson {
    pub productions: Vec<ProductionJson>,
    #[serde(rename = "variableLogWeight")]
    pub variable_log_weight: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ProductionJson {
    pub source: String,
    #[serde(rename = "type")]
    pub type_string: String,
    #[serde(rename = "logWeight")]
    pub log_weight: f64,
}

/// Per-hole weights consumed by the scorer, sampler and enumerator. The
/// unigram table mirrors the library; the bigram table additionally
/// conditions on (parent production, argument index).
#[derive(Debug, Clone, PartialEq)]
pub enum WeightTable {
    Unigram {
        productions: Vec<f64>,
        variable: f64,
    },
    Bigram {
        root: WeightRow,
        contexts: Vec<WeightRow>,
        /// `context_base[p]` is the first context row for parent production
        /// `p`; its rows cover argument indices `0..arity(p)`.
        context_base: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightRow {
    pub productions: Vec<f64>,
    pub variable: f64,
}

/// Identifies which hole-context row applies: the root row, or the row for
/// argument `arg` of production `parent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HoleContext {
    Root,
    Arg { parent: usize, arg: usize },
}

impl WeightTable {
    pub fn production_count(&self) -> usize {
        match self {
            WeightTable::Unigram { productions, .. } => productions.len(),
            WeightTable::Bigram { root, .. } => root.productions.len(),
        }
    }

    fn weight(&self, ctx: HoleContext, choice: &ChoiceId) -> f64 {
        let row = |r: &WeightRow| match choice {
            ChoiceId::Production(i) => r.productions[*i],
            ChoiceId::Variable(_) => r.variable,
        };
        match self {
            WeightTable::Unigram { productions, variable } => match choice {
                ChoiceId::Production(i) => productions[*i],
                ChoiceId::Variable(_) => *variable,
            },
            WeightTable::Bigram { root, contexts, context_base } => match ctx {
                HoleContext::Root => row(root),
                HoleContext::Arg { parent, arg } => {
                    let base = context_base[parent];
                    row(contexts.get(base + arg).unwrap_or(root))
                }
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChoiceId {
    Production(usize),
    Variable(usize),
}

#[derive(Debug, Clone)]
pub struct Candidate {
    pub choice: ChoiceId,
    pub log_weight: f64,
    /// Argument types after peeling the instantiated arrow spine; not yet
    /// resolved against the requested type (unification happens on commit).
    pub instantiated: Type,
}

/// Enumerates the candidates for a hole. Each candidate's `instantiated`
/// type is fresh; committing to a candidate means unifying its peeled return
/// with the requested type in the shared context.
pub fn hole_candidates(
    lib: &Library,
    table: &WeightTable,
    hole_ctx: HoleContext,
    requested: &Type,
    env: &[Type],
    ctx: &mut TypeContext,
) -> Vec<Candidate> {
    debug_assert!(ctx.apply(requested).as_arrow().is_none());
    let mut out = Vec::new();
    for (i, prod) in lib.productions.iter().enumerate() {
        let inst = ctx.instantiate(&prod.ptype);
        if unifiable_return(&inst, requested, ctx) {
            out.push(Candidate {
                choice: ChoiceId::Production(i),
                log_weight: table.weight(hole_ctx, &ChoiceId::Production(i)),
                instantiated: inst,
            });
        }
    }
    for (i, vt) in env.iter().rev().enumerate() {
        // env is innermost-last; index i is de Bruijn $i.
        let inst = ctx.apply(vt);
        if unifiable_return(&inst, requested, ctx) {
            out.push(Candidate {
                choice: ChoiceId::Variable(i),
                log_weight: table.weight(hole_ctx, &ChoiceId::Variable(i)),
                instantiated: inst,
            });
        }
    }
    out
}

fn unifiable_return(inst: &Type, requested: &Type, ctx: &mut TypeContext) -> bool {
    let applied = ctx.apply(inst);
    let (_, ret) = applied.arg_spine();
    ctx.unifies(ret, requested)
}

pub fn log_sum_exp(values: impl Iterator<Item = f64>) -> f64 {
    let vals: Vec<f64> = values.filter(|v| *v > f64::NEG_INFINITY).collect();
    if vals.is_empty() {
        return f64::NEG_INFINITY;
    }
    let m = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + vals.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Tally of generation choices, used for weight fitting and for gradients of
/// the recognition objective.
#[derive(Debug, Clone, Default)]
pub struct UseTally {
    /// chosen[i]: how often production i was the committed choice.
    pub chosen: Vec<f64>,
    /// how often any variable was the committed choice.
    pub chosen_variable: f64,
    /// Per-hole candidate softmax mass, accumulated per production.
    pub candidate_mass: Vec<f64>,
    pub candidate_mass_variable: f64,
    /// Per-hole records for bigram-aware consumers: (context, chosen,
    /// candidates with normalized probabilities).
    pub holes: Vec<HoleRecord>,
}

#[derive(Debug, Clone)]
pub struct HoleRecord {
    pub context: HoleContext,
    pub chosen: ChoiceId,
    pub candidates: Vec<(ChoiceId, f64)>,
}

impl UseTally {
    fn new(n: usize) -> UseTally {
        UseTally {
            chosen: vec![0.0; n],
            chosen_variable: 0.0,
            candidate_mass: vec![0.0; n],
            candidate_mass_variable: 0.0,
            holes: Vec::new(),
        }
    }
}

/// Log probability of `p` under top-down generation at the requested type.
/// Unreachable programs (unknown productions, arity mismatches, or non
/// eta-long shapes) score negative infinity.
pub fn log_prior(lib: &Library, table: &WeightTable, p: &Program, requested: &PolyType) -> f64 {
    score_program(lib, table, p, requested, None)
}

/// As [`log_prior`], recording the per-hole choices made.
pub fn log_prior_with_uses(
    lib: &Library,
    table: &WeightTable,
    p: &Program,
    requested: &PolyType,
) -> (f64, UseTally) {
    let mut tally = UseTally::new(lib.productions.len());
    let lp = score_program(lib, table, p, requested, Some(&mut tally));
    (lp, tally)
}

fn score_program(
    lib: &Library,
    table: &WeightTable,
    p: &Program,
    requested: &PolyType,
    mut tally: Option<&mut UseTally>,
) -> f64 {
    let mut ctx = TypeContext::new();
    let tau = ctx.instantiate(requested);
    let mut env = Vec::new();
    score_expr(lib, table, p, &tau, &mut env, &mut ctx, HoleContext::Root, &mut tally)
}

#[allow(clippy::too_many_arguments)]
fn score_expr(
    lib: &Library,
    table: &WeightTable,
    p: &Program,
    requested: &Type,
    env: &mut Vec<Type>,
    ctx: &mut TypeContext,
    hole_ctx: HoleContext,
    tally: &mut Option<&mut UseTally>,
) -> f64 {
    let tau = ctx.apply(requested);
    if let Some((a, b)) = tau.as_arrow() {
        // Arrow-typed holes introduce abstractions with probability 1.
        return match p {
            Program::Abstraction(body) => {
                let (a, b) = (a.clone(), b.clone());
                env.push(a);
                let lp = score_expr(lib, table, body, &b, env, ctx, hole_ctx, tally);
                env.pop();
                lp
            }
            _ => f64::NEG_INFINITY,
        };
    }

    let candidates = hole_candidates(lib, table, hole_ctx, &tau, env, ctx);
    if candidates.is_empty() {
        return f64::NEG_INFINITY;
    }
    let z = log_sum_exp(candidates.iter().map(|c| c.log_weight));

    let (head, args) = p.spine();
    let chosen_id = match head {
        Program::Index(i) => ChoiceId::Variable(*i),
        Program::Primitive(_) | Program::Invented(_) => {
            match lib.production_index(head) {
                Some(i) => ChoiceId::Production(i),
                None => return f64::NEG_INFINITY,
            }
        }
        _ => return f64::NEG_INFINITY, // redex or bare lambda at a non-arrow hole
    };
    let Some(cand) = candidates.iter().find(|c| c.choice == chosen_id) else {
        return f64::NEG_INFINITY;
    };

    let applied = ctx.apply(&cand.instantiated);
    let (arg_types, ret) = applied.arg_spine();
    if arg_types.len() != args.len() {
        return f64::NEG_INFINITY;
    }
    if ctx.unify(ret, &tau).is_err() {
        return f64::NEG_INFINITY;
    }

    if let Some(t) = tally.as_deref_mut() {
        let probs: Vec<(ChoiceId, f64)> = candidates
            .iter()
            .map(|c| (c.choice, (c.log_weight - z).exp()))
            .collect();
        match chosen_id {
            ChoiceId::Production(i) => t.chosen[i] += 1.0,
            ChoiceId::Variable(_) => t.chosen_variable += 1.0,
        }
        for (choice, pr) in &probs {
            match choice {
                ChoiceId::Production(i) => t.candidate_mass[*i] += pr,
                ChoiceId::Variable(_) => t.candidate_mass_variable += pr,
            }
        }
        t.holes.push(HoleRecord {
            context: hole_ctx,
            chosen: chosen_id,
            candidates: probs,
        });
    }

    let mut lp = cand.log_weight - z;
    let arg_types: Vec<Type> = arg_types.into_iter().cloned().collect();
    for (j, (arg, at)) in args.iter().zip(&arg_types).enumerate() {
        let child_ctx = match chosen_id {
            ChoiceId::Production(parent) => HoleContext::Arg { parent, arg: j },
            ChoiceId::Variable(_) => HoleContext::Root,
        };
        lp += score_expr(lib, table, arg, at, env, ctx, child_ctx, tally);
        if lp == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
    }
    lp
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SampleError {
    #[error("derivation depth exhausted")]
    DepthExhausted,
    #[error("no candidates for hole of type {0}")]
    NoCandidates(String),
}

/// Samples a program distributed according to the generative process scored
/// by [`log_prior`]. Fails (for the caller to retry) when `max_depth`
/// candidate expansions are exceeded along a path.
pub fn sample_program<R: rand::Rng>(
    lib: &Library,
    table: &WeightTable,
    requested: &PolyType,
    rng: &mut R,
    max_depth: usize,
) -> Result<Program, SampleError> {
    let mut ctx = TypeContext::new();
    let tau = ctx.instantiate(requested);
    let mut env = Vec::new();
    sample_expr(lib, table, &tau, &mut env, &mut ctx, HoleContext::Root, rng, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn sample_expr<R: rand::Rng>(
    lib: &Library,
    table: &WeightTable,
    requested: &Type,
    env: &mut Vec<Type>,
    ctx: &mut TypeContext,
    hole_ctx: HoleContext,
    rng: &mut R,
    depth: usize,
) -> Result<Program, SampleError> {
    let tau = ctx.apply(requested);
    if let Some((a, b)) = tau.as_arrow() {
        let (a, b) = (a.clone(), b.clone());
        env.push(a);
        let body = sample_expr(lib, table, &b, env, ctx, hole_ctx, rng, depth);
        env.pop();
        return Ok(Program::abstraction(body?));
    }
    if depth == 0 {
        return Err(SampleError::DepthExhausted);
    }
    let candidates = hole_candidates(lib, table, hole_ctx, &tau, env, ctx);
    if candidates.is_empty() {
        return Err(SampleError::NoCandidates(tau.to_string()));
    }
    let z = log_sum_exp(candidates.iter().map(|c| c.log_weight));
    let mut pick = rng.random::<f64>();
    let mut chosen = candidates.len() - 1;
    for (i, c) in candidates.iter().enumerate() {
        let pr = (c.log_weight - z).exp();
        if pick < pr {
            chosen = i;
            break;
        }
        pick -= pr;
    }
    let cand = &candidates[chosen];

    let applied = ctx.apply(&cand.instantiated);
    let (arg_types, ret) = applied.arg_spine();
    let arg_types: Vec<Type> = arg_types.into_iter().cloned().collect();
    ctx.unify(ret, &tau).expect("candidate was checked unifiable");

    let head = match cand.choice {
        ChoiceId::Production(i) => lib.productions[i].program.clone(),
        ChoiceId::Variable(i) => Program::Index(i),
    };
    let mut args = Vec::with_capacity(arg_types.len());
    for (j, at) in arg_types.iter().enumerate() {
        let child_ctx = match cand.choice {
            ChoiceId::Production(parent) => HoleContext::Arg { parent, arg: j },
            ChoiceId::Variable(_) => HoleContext::Root,
        };
        args.push(sample_expr(lib, table, at, env, ctx, child_ctx, rng, depth - 1)?);
    }
    Ok(Program::apply_all(head, args))
}

/// Counts production and variable choices in an eta-long program, not
/// descending into invented definitions.
pub fn count_uses(lib: &Library, p: &Program, counts: &mut [f64], var_count: &mut f64, weight: f64) {
    match p {
        Program::Abstraction(body) => count_uses(lib, body, counts, var_count, weight),
        _ => {
            let (head, args) = p.spine();
            match head {
                Program::Index(_) => *var_count += weight,
                _ => {
                    if let Some(i) = lib.production_index(head) {
                        counts[i] += weight;
                    }
                }
            }
            for a in args {
                count_uses(lib, a, counts, var_count, weight);
            }
        }
    }
}

/// Re-estimates production weights from posterior-weighted use counts over
/// the frontiers, with a pseudo-count keeping every production reachable.
/// Responsibilities use the stored entry scores, so refitting with the same
/// frontiers is idempotent.
pub fn fit_weights(lib: &Library, frontiers: &[Frontier]) -> Library {
    let n = lib.productions.len();
    let mut counts = vec![0.0; n];
    let mut var_count = 0.0;
    for frontier in frontiers {
        if frontier.entries.is_empty() {
            continue;
        }
        let z = log_sum_exp(frontier.entries.iter().map(|e| e.log_prior + e.log_likelihood));
        for entry in &frontier.entries {
            let resp = (entry.log_prior + entry.log_likelihood - z).exp();
            count_uses(lib, &entry.program, &mut counts, &mut var_count, resp);
        }
    }
    let mut out = lib.clone();
    for (p, c) in out.productions.iter_mut().zip(&counts) {
        p.log_weight = (WEIGHT_PSEUDOCOUNT + c).ln();
    }
    out.variable_log_weight = (WEIGHT_PSEUDOCOUNT + var_count).ln();
    out
}

/// Description-length prior over libraries: `penalty` nats per symbol of
/// invented definitions; primitives cost nothing.
pub fn library_description_length(lib: &Library, penalty: f64) -> f64 {
    penalty
        * lib
            .productions
            .iter()
            .filter_map(|p| match &p.program {
                Program::Invented(d) => Some(d.size() as f64),
                _ => None,
            })
            .sum::<f64>()
}

/// Per-task beam of scored solutions, sorted by posterior descending with
/// deterministic tie-breaking (smaller size, then render order).
#[derive(Debug, Clone, PartialEq)]
pub struct Frontier {
    pub task_id: String,
    pub entries: Vec<FrontierEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontierEntry {
    pub program: Program,
    pub log_prior: f64,
    pub log_likelihood: f64,
}

impl FrontierEntry {
    pub fn posterior(&self) -> f64 {
        self.log_prior + self.log_likelihood
    }
}

impl Frontier {
    pub fn empty(task_id: &str) -> Frontier {
        Frontier {
            task_id: task_id.to_owned(),
            entries: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Inserts an entry keeping at most `k` best by posterior; ties prefer
    /// smaller programs, then lexicographic render order. Duplicate programs
    /// keep a single copy.
    pub fn insert(&mut self, entry: FrontierEntry, k: usize) {
        if entry.log_likelihood == f64::NEG_INFINITY {
            return;
        }
        if let Some(existing) = self.entries.iter_mut().find(|e| e.program == entry.program) {
            if entry.posterior() > existing.posterior() {
                *existing = entry;
            }
        } else {
            self.entries.push(entry);
        }
        self.entries.sort_by(|a, b| {
            b.posterior()
                .partial_cmp(&a.posterior())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.program.size().cmp(&b.program.size()))
                .then_with(|| a.program.render().cmp(&b.program.render()))
        });
        self.entries.truncate(k);
    }

    /// Merges another frontier into this one, keeping the best `k`.
    pub fn merge(&mut self, other: &Frontier, k: usize) {
        for e in &other.entries {
            self.insert(e.clone(), k);
        }
    }

    pub fn best(&self) -> Option<&FrontierEntry> {
        self.entries.first()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrontierJson {
    #[serde(rename = "taskId")]
    pub task_id: String,
    pub entries: Vec<FrontierEntryJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrontierEntryJson {
    pub source: String,
    #[serde(rename = "logPrior")]
    pub log_prior: f64,
    #[serde(rename = "logLikelihood")]
    pub log_likelihood: f64,
}

impl Frontier {
    pub fn to_json(&self) -> FrontierJson {
        FrontierJson {
            task_id: self.task_id.clone(),
            entries: self
                .entries
                .iter()
                .map(|e| FrontierEntryJson {
                    source: e.program.render(),
                    log_prior: e.log_prior,
                    log_likelihood: e.log_likelihood,
                })
                .collect(),
        }
    }

    pub fn from_json(json: &FrontierJson, prims: &PrimitiveSet) -> Result<Frontier, String> {
        let mut entries = Vec::new();
        for ej in &json.entries {
            let program = Program::parse(&ej.source, prims).map_err(|e| e.to_string())?;
            entries.push(FrontierEntry {
                program,
                log_prior: ej.log_prior,
                log_likelihood: ej.log_likelihood,
            });
        }
        Ok(Frontier {
            task_id: json.task_id.clone(),
            entries,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::PrimitiveSet;
    use crate::types::PolyType;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn prims() -> PrimitiveSet {
        PrimitiveSet::builtin()
    }

    fn int_lib(prims: &PrimitiveSet, names: &[&str]) -> Library {
        Library::uniform(names, prims)
    }

    fn int_type() -> PolyType {
        PolyType::parse("int").unwrap()
    }

    /// Independent oracle: exhaustively expands the generation tree to a
    /// depth bound, threading a cloned unification context through every
    /// branch, and returns each complete program with its exact log
    /// probability.
    fn brute_force_generation(
        lib: &Library,
        requested: &Type,
        env: &[Type],
        ctx: &TypeContext,
        depth: usize,
    ) -> Vec<(Program, f64, TypeContext)> {
        let table = lib.own_weights();
        let tau = ctx.apply(requested);
        if let Some((a, b)) = tau.as_arrow() {
            let mut env2 = env.to_vec();
            env2.push(a.clone());
            return brute_force_generation(lib, &b.clone(), &env2, ctx, depth)
                .into_iter()
                .map(|(p, lp, c)| (Program::abstraction(p), lp, c))
                .collect();
        }
        if depth == 0 {
            return Vec::new();
        }
        let mut scratch = ctx.clone();
        let candidates = hole_candidates(lib, &table, HoleContext::Root, &tau, env, &mut scratch);
        let z = log_sum_exp(candidates.iter().map(|c| c.log_weight));
        let mut out = Vec::new();
        for cand in candidates {
            let mut cctx = scratch.clone();
            let applied = cctx.apply(&cand.instantiated);
            let (arg_types, ret) = applied.arg_spine();
            let arg_types: Vec<Type> = arg_types.into_iter().cloned().collect();
            if cctx.unify(ret, &tau).is_err() {
                continue;
            }
            let head = match cand.choice {
                ChoiceId::Production(i) => lib.productions[i].program.clone(),
                ChoiceId::Variable(i) => Program::Index(i),
            };
            let mut partials: Vec<(Vec<Program>, f64, TypeContext)> =
                vec![(vec![], cand.log_weight - z, cctx)];
            for at in &arg_types {
                let mut next = Vec::new();
                for (args_so_far, lp, pctx) in &partials {
                    for (ap, alp, actx) in brute_force_generation(lib, at, env, pctx, depth - 1) {
                        let mut args2 = args_so_far.clone();
                        args2.push(ap);
                        next.push((args2, lp + alp, actx));
                    }
                }
                partials = next;
            }
            for (args, lp, c) in partials {
                out.push((Program::apply_all(head.clone(), args), lp, c));
            }
        }
        out
    }

    fn brute_force_program_probability(
        lib: &Library,
        requested: &PolyType,
        target: &Program,
        max_depth: usize,
    ) -> f64 {
        let mut ctx = TypeContext::new();
        let tau = ctx.instantiate(requested);
        let mut total = f64::NEG_INFINITY;
        for (p, lp, _) in brute_force_generation(lib, &tau, &[], &ctx, max_depth) {
            if &p == target {
                total = log_sum_exp([total, lp].into_iter());
            }
        }
        total
    }

    #[test]
    fn single_candidate_scores_zero() {
        let prims = prims();
        let lib = int_lib(&prims, &["0"]);
        let p = Program::primitive("0");
        let lp = log_prior(&lib, &lib.own_weights(), &p, &int_type());
        assert_eq!(lp, 0.0);
    }

    #[test]
    fn uniform_three_production_prior() {
        let prims = prims();
        let lib = int_lib(&prims, &["0", "1", "+"]);
        let table = lib.own_weights();
        let one = Program::primitive("1");
        let lp = log_prior(&lib, &table, &one, &int_type());
        let expected = -(3.0f64).ln();
        assert!((lp - expected).abs() < 1e-12, "{} vs {}", lp, expected);
        // Cross-check against the brute-force generation-tree oracle.
        let oracle = brute_force_program_probability(&lib, &int_type(), &one, 3);
        assert!((lp - oracle).abs() < 1e-9);

        let sum = Program::parse("(+ 0 1)", &prims).unwrap();
        let lp_sum = log_prior(&lib, &table, &sum, &int_type());
        let expected_sum = -3.0 * (3.0f64).ln();
        assert!((lp_sum - expected_sum).abs() < 1e-12);
        let oracle_sum = brute_force_program_probability(&lib, &int_type(), &sum, 3);
        assert!((lp_sum - oracle_sum).abs() < 1e-9);
    }

    #[test]
    fn unreachable_program_scores_negative_infinity() {
        let prims = prims();
        let lib = int_lib(&prims, &["0", "1"]);
        let p = Program::parse("(+ 0 1)", &prims).unwrap();
        assert_eq!(log_prior(&lib, &lib.own_weights(), &p, &int_type()), f64::NEG_INFINITY);
    }

    #[test]
    fn normalization_per_hole() {
        let prims = prims();
        let lib = int_lib(&prims, &["0", "1", "+", "-", "even?", "if"]);
        let table = lib.own_weights();
        let mut ctx = TypeContext::new();
        let tau = Type::int();
        let candidates = hole_candidates(&lib, &table, HoleContext::Root, &tau, &[], &mut ctx);
        let z = log_sum_exp(candidates.iter().map(|c| c.log_weight));
        let total: f64 = candidates.iter().map(|c| (c.log_weight - z).exp()).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn sampling_matches_scoring_frequencies() {
        let prims = prims();
        let lib = int_lib(&prims, &["0", "1", "+"]);
        let table = lib.own_weights();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = 10_000;
        let mut count_one = 0usize;
        for _ in 0..n {
            let p = loop {
                match sample_program(&lib, &table, &int_type(), &mut rng, 20) {
                    Ok(p) => break p,
                    Err(_) => continue,
                }
            };
            if p == Program::primitive("1") {
                count_one += 1;
            }
        }
        let expected = (log_prior(&lib, &table, &Program::primitive("1"), &int_type())).exp();
        let se = (expected * (1.0 - expected) / n as f64).sqrt();
        let observed = count_one as f64 / n as f64;
        assert!(
            (observed - expected).abs() < 3.0 * se,
            "observed {} expected {} se {}",
            observed,
            expected,
            se
        );
    }

    #[test]
    fn sample_depth_exhaustion_fails() {
        let prims = prims();
        // Only a compound production for int: (+ _ _) forces infinite depth.
        let lib = int_lib(&prims, &["+"]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = sample_program(&lib, &lib.own_weights(), &int_type(), &mut rng, 4);
        assert!(r.is_err());
    }

    #[test]
    fn fit_weights_counts_uses() {
        let prims = prims();
        let lib = int_lib(&prims, &["0", "1", "+"]);
        // Uses + twice and 1 twice, 0 never; the bound variable once.
        let p = Program::parse("(lambda (+ 1 (+ 1 $0)))", &prims).unwrap();
        let frontier = Frontier {
            task_id: "t".to_owned(),
            entries: vec![FrontierEntry {
                program: p,
                log_prior: -1.0,
                log_likelihood: 0.0,
            }],
        };
        let fitted = fit_weights(&lib, &[frontier]);
        let w = |name: &str| {
            fitted.productions[fitted
                .production_index(&Program::primitive(name))
                .unwrap()]
            .log_weight
        };
        assert!((w("+") - (2.5f64).ln()).abs() < 1e-12);
        assert!((w("1") - (2.5f64).ln()).abs() < 1e-12);
        assert!((w("0") - (0.5f64).ln()).abs() < 1e-12);
        assert!((fitted.variable_log_weight - (1.5f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn fit_weights_no_frontiers_uniform() {
        let prims = prims();
        let lib = int_lib(&prims, &["0", "1", "+"]);
        let fitted = fit_weights(&lib, &[]);
        for p in &fitted.productions {
            assert!((p.log_weight - (0.5f64).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn fit_weights_idempotent_and_duplication_invariant() {
        let prims = prims();
        let lib = int_lib(&prims, &["0", "1", "+"]);
        let entry = FrontierEntry {
            program: Program::parse("(+ 1 1)", &prims).unwrap(),
            log_prior: -3.0,
            log_likelihood: 0.0,
        };
        let f1 = Frontier {
            task_id: "a".to_owned(),
            entries: vec![entry.clone()],
        };
        let once = fit_weights(&lib, &[f1.clone()]);
        let twice = fit_weights(&once, &[f1.clone()]);
        for (a, b) in once.productions.iter().zip(&twice.productions) {
            assert_eq!(a.log_weight, b.log_weight);
        }
        // Relative responsibilities are scale-invariant under duplication: the
        // counts double, which shifts all weights by the same direction but
        // preserves per-hole normalized probabilities used downstream.
        let dup = fit_weights(&lib, &[f1.clone(), f1.clone()]);
        let p = Program::parse("(+ 1 1)", &prims).unwrap();
        let lp_once = log_prior(&once, &once.own_weights(), &p, &int_type());
        let lp_dup = log_prior(&dup, &dup.own_weights(), &p, &int_type());
        assert!((lp_once - lp_dup).abs() < 0.2, "{} vs {}", lp_once, lp_dup);
    }

    #[test]
    fn description_length_examples() {
        let prims = prims();
        let mut lib = int_lib(&prims, &["0", "1", "+"]);
        assert_eq!(library_description_length(&lib, 1.5), 0.0);
        let inv = Program::parse("(+ 1 (+ 1 1))", &prims).unwrap();
        assert_eq!(inv.size(), 5);
        lib = lib.with_invention(inv, &prims, 0.0).unwrap();
        assert!((library_description_length(&lib, 1.5) - 7.5).abs() < 1e-12);
    }

    #[test]
    fn library_json_round_trip_bit_exact() {
        let prims = prims();
        let mut lib = int_lib(&prims, &["0", "1", "+"]);
        lib.productions[0].log_weight = -0.123456789012345;
        lib.variable_log_weight = -2.5;
        let lib = lib
            .with_invention(Program::parse("(lambda (+ $0 $0))", &prims).unwrap(), &prims, -1.25)
            .unwrap();
        let json = serde_json::to_string_pretty(&lib.to_json()).unwrap();
        let parsed: LibraryJson = serde_json::from_str(&json).unwrap();
        let lib2 = Library::from_json(&parsed, &prims).unwrap();
        let json2 = serde_json::to_string_pretty(&lib2.to_json()).unwrap();
        assert_eq!(json, json2);
    }

    #[test]
    fn frontier_keeps_top_k_sorted() {
        let prims = prims();
        let mut f = Frontier::empty("t");
        for (src, lp) in [("0", -1.0), ("1", -2.0), ("(+ 0 0)", -3.0)] {
            f.insert(
                FrontierEntry {
                    program: Program::parse(src, &prims).unwrap(),
                    log_prior: lp,
                    log_likelihood: 0.0,
                },
                2,
            );
        }
        assert_eq!(f.entries.len(), 2);
        assert_eq!(f.entries[0].program.render(), "0");
        assert!(f.entries[0].posterior() >= f.entries[1].posterior());
    }

    #[test]
    fn library_depth_chain() {
        let prims = prims();
        let f1 = Program::invented(Program::parse("(lambda (+ $0 $0))", &prims).unwrap());
        let f2 = Program::invented(Program::abstraction(Program::application(
            f1.clone(),
            Program::Index(0),
        )));
        let f3 = Program::invented(Program::abstraction(Program::application(
            f2.clone(),
            Program::Index(0),
        )));
        let lib = Library {
            productions: vec![Production {
                program: f3,
                ptype: PolyType::parse("int \u{2192} int").unwrap(),
                log_weight: 0.0,
            }],
            variable_log_weight: 0.0,
        };
        assert_eq!(lib.depth(), 3);
    }
}
