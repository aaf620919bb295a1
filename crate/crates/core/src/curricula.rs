//! Built-in task curricula with fixed seeds, plus the starting library for
//! each.
//!
//! Generators are deterministic: calling a curriculum twice yields
//! byte-identical tasks.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::eval::Value;
use crate::grammar::Library;
use crate::primitives::PrimitiveSet;
use crate::task::{IoExample, Observations, Task, TaskDomain};
use crate::types::PolyType;

#[derive(Debug, Error)]
#[error("unknown curriculum {0:?} (expected list-basic-40, text-basic-20, regression-16 or fig3-pair)")]
pub struct UnknownCurriculum(pub String);

pub const CURRICULA: &[&str] = &["list-basic-40", "text-basic-20", "regression-16", "fig3-pair"];

pub fn builtin_curricula(name: &str) -> Result<Vec<Task>, UnknownCurriculum> {
    match name {
        "list-basic-40" => Ok(list_basic_40()),
        "text-basic-20" => Ok(text_basic_20()),
        "regression-16" => Ok(regression_16()),
        "fig3-pair" => Ok(fig3_pair()),
        other => Err(UnknownCurriculum(other.to_owned())),
    }
}

/// The starting library paired with a built-in curriculum.
pub fn curriculum_basis(name: &str, prims: &PrimitiveSet) -> Result<Library, UnknownCurriculum> {
    let names: &[&str] = match name {
        // Minimal recursion basis: the map-rediscovery setting.
        "fig3-pair" => &[
            "Y", "cons", "car", "cdr", "if", "empty?", "+", "-", "0", "1", "nil",
        ],
        // Generic functional basis with higher-order routines.
        "list-basic-40" => &[
            "0", "1", "+", "-", ">", "eq?", "even?", "if", "Y", "nil", "cons", "car", "cdr",
            "empty?", "map", "fold", "filter",
        ],
        "text-basic-20" => &[
            "nil", "cons", "car", "cdr", "empty?", "if", "Y", "map", "fold", "filter", "space",
            "dot", "dash", "char=?",
        ],
        "regression-16" => &[
            "+.", "-.", "*.", "/.", "param0", "param1", "param2", "param3",
        ],
        other => return Err(UnknownCurriculum(other.to_owned())),
    };
    Ok(Library::uniform(names, prims))
}

fn task_rng(curriculum_seed: u64, task_index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(curriculum_seed ^ task_index.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

fn random_int_list(rng: &mut ChaCha8Rng, min_len: usize) -> Vec<i64> {
    let len = rng.random_range(min_len..=6);
    (0..len).map(|_| rng.random_range(0..=9)).collect()
}

fn io_task(
    id: &str,
    name: &str,
    domain: TaskDomain,
    type_string: &str,
    examples: Vec<IoExample>,
) -> Task {
    Task {
        id: id.to_owned(),
        name: name.to_owned(),
        domain,
        request_type: PolyType::parse(type_string).expect("curriculum type"),
        observations: Observations::Examples(examples),
    }
}

fn list_to_list_task(
    id: &str,
    name: &str,
    seed: u64,
    index: u64,
    min_len: usize,
    f: impl Fn(&[i64]) -> Vec<i64>,
) -> Task {
    let mut rng = task_rng(seed, index);
    let examples = (0..15)
        .map(|_| {
            let xs = random_int_list(&mut rng, min_len);
            IoExample {
                inputs: vec![Value::int_list(&xs)],
                output: Value::int_list(&f(&xs)),
            }
        })
        .collect();
    io_task(id, name, TaskDomain::List, "ilist -> ilist", examples)
}

fn list_to_int_task(
    id: &str,
    name: &str,
    seed: u64,
    index: u64,
    min_len: usize,
    f: impl Fn(&[i64]) -> i64,
) -> Task {
    let mut rng = task_rng(seed, index);
    let examples = (0..15)
        .map(|_| {
            let xs = random_int_list(&mut rng, min_len);
            IoExample {
                inputs: vec![Value::int_list(&xs)],
                output: Value::Int(f(&xs)),
            }
        })
        .collect();
    io_task(id, name, TaskDomain::List, "ilist -> int", examples)
}

const LIST_SEED: u64 = 0x11_57_ba_51c;

/// 40 list tasks across seven families: scaling, incrementing, reverse,
/// length, sum, filter-even and nth-largest.
pub fn list_basic_40() -> Vec<Task> {
    let mut tasks: Vec<Task> = Vec::with_capacity(40);
    let mut idx = 0u64;
    let mut push_ll = |id: String, name: String, min_len: usize, f: Box<dyn Fn(&[i64]) -> Vec<i64>>| {
        idx += 1;
        tasks.push(list_to_list_task(&id, &name, LIST_SEED, idx, min_len, f));
    };

    // Scaling family.
    for k in 2..=5i64 {
        push_ll(
            format!("scale-{}", k),
            format!("multiply each element by {}", k),
            0,
            Box::new(move |xs| xs.iter().map(|x| k * x).collect()),
        );
    }
    for k in 1..=4i64 {
        push_ll(
            format!("double-plus-{}", k),
            format!("double each element then add {}", k),
            0,
            Box::new(move |xs| xs.iter().map(|x| 2 * x + k).collect()),
        );
    }
    // Increment family.
    for k in 1..=8i64 {
        push_ll(
            format!("add-{}", k),
            format!("add {} to each element", k),
            0,
            Box::new(move |xs| xs.iter().map(|x| x + k).collect()),
        );
    }
    // Reverse family.
    push_ll(
        "reverse".into(),
        "reverse the list".into(),
        0,
        Box::new(|xs| xs.iter().rev().copied().collect()),
    );
    push_ll(
        "reverse-add-1".into(),
        "reverse then add 1 to each element".into(),
        0,
        Box::new(|xs| xs.iter().rev().map(|x| x + 1).collect()),
    );
    push_ll(
        "reverse-double".into(),
        "reverse then double each element".into(),
        0,
        Box::new(|xs| xs.iter().rev().map(|x| 2 * x).collect()),
    );
    push_ll(
        "reverse-evens".into(),
        "keep even elements then reverse".into(),
        0,
        Box::new(|xs| xs.iter().filter(|x| *x % 2 == 0).rev().copied().collect()),
    );
    // Filter family (list-valued members).
    push_ll(
        "keep-evens".into(),
        "keep the even elements".into(),
        0,
        Box::new(|xs| xs.iter().filter(|x| *x % 2 == 0).copied().collect()),
    );
    push_ll(
        "keep-odds".into(),
        "keep the odd elements".into(),
        0,
        Box::new(|xs| xs.iter().filter(|x| *x % 2 != 0).copied().collect()),
    );
    push_ll(
        "double-evens".into(),
        "keep even elements then double them".into(),
        0,
        Box::new(|xs| xs.iter().filter(|x| *x % 2 == 0).map(|x| 2 * x).collect()),
    );
    push_ll(
        "add1-odds".into(),
        "keep odd elements then add 1".into(),
        0,
        Box::new(|xs| xs.iter().filter(|x| *x % 2 != 0).map(|x| x + 1).collect()),
    );

    let mut push_li = |id: String, name: String, min_len: usize, f: Box<dyn Fn(&[i64]) -> i64>| {
        idx += 1;
        tasks.push(list_to_int_task(&id, &name, LIST_SEED, idx, min_len, f));
    };
    // Length family.
    push_li("length".into(), "length of the list".into(), 0, Box::new(|xs| xs.len() as i64));
    push_li(
        "length-plus-1".into(),
        "length of the list plus 1".into(),
        0,
        Box::new(|xs| xs.len() as i64 + 1),
    );
    push_li(
        "length-plus-2".into(),
        "length of the list plus 2".into(),
        0,
        Box::new(|xs| xs.len() as i64 + 2),
    );
    push_li(
        "double-length".into(),
        "twice the length of the list".into(),
        0,
        Box::new(|xs| 2 * xs.len() as i64),
    );
    // Sum family.
    push_li("sum".into(), "sum of the elements".into(), 0, Box::new(|xs| xs.iter().sum()));
    push_li(
        "sum-plus-1".into(),
        "sum of the elements plus 1".into(),
        0,
        Box::new(|xs| xs.iter().sum::<i64>() + 1),
    );
    push_li(
        "double-sum".into(),
        "twice the sum of the elements".into(),
        0,
        Box::new(|xs| 2 * xs.iter().sum::<i64>()),
    );
    push_li(
        "sum-plus-2".into(),
        "sum of the elements plus 2".into(),
        0,
        Box::new(|xs| xs.iter().sum::<i64>() + 2),
    );
    // Filter family (count/sum members).
    push_li(
        "count-evens".into(),
        "how many elements are even".into(),
        0,
        Box::new(|xs| xs.iter().filter(|x| *x % 2 == 0).count() as i64),
    );
    push_li(
        "sum-evens".into(),
        "sum of the even elements".into(),
        0,
        Box::new(|xs| xs.iter().filter(|x| *x % 2 == 0).sum()),
    );
    // Largest family.
    push_li(
        "maximum".into(),
        "largest element".into(),
        1,
        Box::new(|xs| *xs.iter().max().unwrap()),
    );
    push_li(
        "minimum".into(),
        "smallest element".into(),
        1,
        Box::new(|xs| *xs.iter().min().unwrap()),
    );
    push_li(
        "max-plus-1".into(),
        "largest element plus 1".into(),
        1,
        Box::new(|xs| xs.iter().max().unwrap() + 1),
    );
    push_li(
        "double-max".into(),
        "twice the largest element".into(),
        1,
        Box::new(|xs| 2 * xs.iter().max().unwrap()),
    );
    push_li(
        "second-largest".into(),
        "second largest element".into(),
        2,
        Box::new(|xs| {
            let mut v = xs.to_vec();
            v.sort_unstable_by(|a, b| b.cmp(a));
            v[1]
        }),
    );
    push_li(
        "max-of-doubled".into(),
        "twice the largest element of the doubled list".into(),
        1,
        Box::new(|xs| 2 * xs.iter().max().unwrap()),
    );

    assert_eq!(tasks.len(), 40);
    tasks
}

const TEXT_SEED: u64 = 0x7e_c7_5eed;

const FIRST_NAMES: &[&str] = &[
    "alan", "grace", "ada", "kurt", "emmy", "noam", "barbara", "john", "mary", "claude",
];
const LAST_NAMES: &[&str] = &[
    "turing", "hopper", "lovelace", "godel", "noether", "shannon", "liskov", "mccarthy",
    "church", "curry",
];

fn random_word(rng: &mut ChaCha8Rng, min_len: usize, max_len: usize) -> String {
    let len = rng.random_range(min_len..=max_len);
    (0..len)
        .map(|_| char::from(b'a' + rng.random_range(0..26u8)))
        .collect()
}

fn str_task(
    id: &str,
    name: &str,
    seed_index: u64,
    type_string: &str,
    gen_input: impl Fn(&mut ChaCha8Rng) -> String,
    f: impl Fn(&str) -> Value,
) -> Task {
    let mut rng = task_rng(TEXT_SEED, seed_index);
    let examples = (0..15)
        .map(|_| {
            let s = gen_input(&mut rng);
            IoExample {
                inputs: vec![Value::string(&s)],
                output: f(&s),
            }
        })
        .collect();
    io_task(id, name, TaskDomain::Text, type_string, examples)
}

/// 20 text-editing tasks in the initials, substring and affix families.
pub fn text_basic_20() -> Vec<Task> {
    let mut tasks = Vec::with_capacity(20);
    let word = |min: usize| move |rng: &mut ChaCha8Rng| random_word(rng, min, 8);
    let full_name = |rng: &mut ChaCha8Rng| {
        let f = FIRST_NAMES[rng.random_range(0..FIRST_NAMES.len())];
        let l = LAST_NAMES[rng.random_range(0..LAST_NAMES.len())];
        format!("{} {}", f, l)
    };

    for k in 1..=3usize {
        tasks.push(str_task(
            &format!("take-{}", k),
            &format!("first {} characters", k),
            k as u64,
            "str -> str",
            word(k.max(3)),
            move |s| Value::string(&s.chars().take(k).collect::<String>()),
        ));
    }
    for k in 1..=3usize {
        tasks.push(str_task(
            &format!("drop-{}", k),
            &format!("drop the first {} characters", k),
            10 + k as u64,
            "str -> str",
            word(k.max(3)),
            move |s| Value::string(&s.chars().skip(k).collect::<String>()),
        ));
    }
    tasks.push(str_task(
        "first-char",
        "first character",
        20,
        "str -> char",
        word(1),
        |s| Value::Char(s.chars().next().unwrap()),
    ));
    tasks.push(str_task(
        "second-char",
        "second character",
        21,
        "str -> char",
        word(2),
        |s| Value::Char(s.chars().nth(1).unwrap()),
    ));
    tasks.push(str_task(
        "identity-string",
        "the string unchanged",
        22,
        "str -> str",
        word(1),
        |s| Value::string(s),
    ));
    tasks.push(str_task(
        "duplicate-first",
        "repeat the first character",
        23,
        "str -> str",
        word(1),
        |s| {
            let c = s.chars().next().unwrap();
            Value::string(&format!("{}{}", c, s))
        },
    ));
    tasks.push(str_task(
        "prepend-dash",
        "prepend a dash",
        24,
        "str -> str",
        word(1),
        |s| Value::string(&format!("-{}", s)),
    ));
    tasks.push(str_task(
        "prepend-dot",
        "prepend a dot",
        25,
        "str -> str",
        word(1),
        |s| Value::string(&format!(".{}", s)),
    ));
    tasks.push(str_task(
        "append-dot",
        "append a dot",
        26,
        "str -> str",
        word(1),
        |s| Value::string(&format!("{}.", s)),
    ));
    tasks.push(str_task(
        "abbreviate-first",
        "first character followed by a dot",
        27,
        "str -> str",
        word(1),
        |s| Value::string(&format!("{}.", s.chars().next().unwrap())),
    ));
    tasks.push(str_task(
        "first-word",
        "characters before the first space",
        28,
        "str -> str",
        full_name,
        |s| Value::string(s.split(' ').next().unwrap()),
    ));
    tasks.push(str_task(
        "after-space",
        "characters after the first space",
        29,
        "str -> str",
        full_name,
        |s| Value::string(s.split_once(' ').map(|x| x.1).unwrap_or("")),
    ));
    tasks.push(str_task(
        "initials",
        "abbreviate both names with dots",
        30,
        "str -> str",
        full_name,
        |s| {
            let mut parts = s.split(' ');
            let a = parts.next().unwrap().chars().next().unwrap();
            let b = parts.next().unwrap().chars().next().unwrap();
            Value::string(&format!("{}.{}.", a, b))
        },
    ));
    tasks.push(str_task(
        "second-word-initial",
        "first character of the second word",
        31,
        "str -> char",
        full_name,
        |s| Value::Char(s.split(' ').nth(1).unwrap().chars().next().unwrap()),
    ));
    tasks.push(str_task(
        "dash-join-initials",
        "initials separated by a dash",
        32,
        "str -> str",
        full_name,
        |s| {
            let mut parts = s.split(' ');
            let a = parts.next().unwrap().chars().next().unwrap();
            let b = parts.next().unwrap().chars().next().unwrap();
            Value::string(&format!("{}-{}", a, b))
        },
    ));
    tasks.push(str_task(
        "is-single-word",
        "whether the string has no space",
        33,
        "str -> bool",
        |rng| {
            if rng.random_range(0..2) == 0 {
                random_word(rng, 1, 8)
            } else {
                let f = FIRST_NAMES[rng.random_range(0..FIRST_NAMES.len())];
                let l = LAST_NAMES[rng.random_range(0..LAST_NAMES.len())];
                format!("{} {}", f, l)
            }
        },
        |s| Value::Bool(!s.contains(' ')),
    ));

    assert_eq!(tasks.len(), 20);
    tasks
}

const REGRESSION_SEED: u64 = 0x4e9_1e55_10;
const REGRESSION_POINTS: usize = 50;

fn regression_task(id: &str, name: &str, seed_index: u64, lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> Task {
    let mut rng = task_rng(REGRESSION_SEED, seed_index);
    let points = (0..REGRESSION_POINTS)
        .map(|_| {
            let x = rng.random_range(lo..hi);
            (x, f(x))
        })
        .collect();
    Task {
        id: id.to_owned(),
        name: name.to_owned(),
        domain: TaskDomain::Regression,
        request_type: PolyType::parse("real -> real").unwrap(),
        observations: Observations::Points(points),
    }
}

/// Polynomial coefficients and rational parameters for the generated tasks;
/// returned alongside the curriculum so tests can use the generating values
/// as an oracle.
pub struct RegressionSpec {
    pub id: String,
    /// Polynomial coefficients lowest-degree-first, or (scale, pole) for
    /// rationals.
    pub coefficients: Vec<f64>,
    pub rational: bool,
    pub x_range: (f64, f64),
}

pub fn regression_16_specs() -> Vec<RegressionSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(REGRESSION_SEED);
    let mut coeff = |lo: f64, hi: f64| {
        let magnitude = rng.random_range(lo..hi);
        if rng.random_range(0..2) == 0 {
            magnitude
        } else {
            -magnitude
        }
    };
    let mut specs = Vec::new();
    // Paper-anchored pair.
    specs.push(RegressionSpec {
        id: "quadratic-paper".into(),
        coefficients: vec![1.8, -2.1, 1.7],
        rational: false,
        x_range: (-3.0, 3.0),
    });
    specs.push(RegressionSpec {
        id: "rational-paper".into(),
        coefficients: vec![2.3, 2.8],
        rational: true,
        x_range: (-3.0, 2.0),
    });
    // Polynomials of each degree up to 4. Sampling on a symmetric interval
    // slightly wider than [-1, 1] keeps the monomial design well enough
    // conditioned for the fixed-step inner-loop fitter.
    for deg in 0..=4usize {
        for copy in 0..2usize {
            if deg == 2 && copy == 1 {
                continue; // the paper quadratic already covers one slot
            }
            let coefficients: Vec<f64> = (0..=deg).map(|_| coeff(0.5, 3.0)).collect();
            specs.push(RegressionSpec {
                id: format!("poly-{}-{}", deg, copy),
                coefficients,
                rational: false,
                x_range: (-1.732, 1.732),
            });
        }
    }
    // Rationals with the pole held outside the sampled interval.
    for copy in 0..5usize {
        let scale = coeff(0.5, 3.0);
        let pole_mag = rng.random_range(2.5..4.0);
        let pole = if rng.random_range(0..2) == 0 { pole_mag } else { -pole_mag };
        specs.push(RegressionSpec {
            id: format!("rational-{}", copy),
            coefficients: vec![scale, pole],
            rational: true,
            x_range: (-1.8, 1.8),
        });
    }
    assert_eq!(specs.len(), 16);
    specs
}

/// 16 regression tasks: polynomials up to degree 4 and rational functions.
pub fn regression_16() -> Vec<Task> {
    regression_16_specs()
        .into_iter()
        .enumerate()
        .map(|(i, spec)| {
            let name = if spec.rational {
                format!("rational curve {}", spec.id)
            } else {
                format!("degree-{} polynomial {}", spec.coefficients.len() - 1, spec.id)
            };
            let coef = spec.coefficients.clone();
            let rational = spec.rational;
            regression_task(
                &spec.id,
                &name,
                100 + i as u64,
                spec.x_range.0,
                spec.x_range.1,
                move |x| {
                    if rational {
                        coef[0] / (x - coef[1])
                    } else {
                        coef.iter().rev().fold(0.0, |acc, c| acc * x + c)
                    }
                },
            )
        })
        .collect()
}

const FIG3_SEED: u64 = 0xf19_3;

/// The two map-rediscovery tasks.
pub fn fig3_pair() -> Vec<Task> {
    vec![
        list_to_list_task(
            "fig3-double",
            "double each list element",
            FIG3_SEED,
            1,
            0,
            |xs| xs.iter().map(|x| 2 * x).collect(),
        ),
        list_to_list_task(
            "fig3-sub1",
            "subtract one from each list element",
            FIG3_SEED,
            2,
            0,
            |xs| xs.iter().map(|x| x - 1).collect(),
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::task::tasks_to_string;

    #[test]
    fn fig3_pair_names_match() {
        let tasks = fig3_pair();
        assert_eq!(tasks.len(), 2);
        assert_eq!(tasks[0].name, "double each list element");
        assert_eq!(tasks[1].name, "subtract one from each list element");
    }

    #[test]
    fn curricula_are_deterministic() {
        for name in CURRICULA {
            let a = builtin_curricula(name).unwrap();
            let b = builtin_curricula(name).unwrap();
            assert_eq!(tasks_to_string(&a), tasks_to_string(&b), "{}", name);
        }
    }

    #[test]
    fn list_basic_40_has_40_valid_tasks() {
        let tasks = list_basic_40();
        assert_eq!(tasks.len(), 40);
        for t in &tasks {
            t.validate(&t.id).unwrap();
            assert_eq!(t.examples().len(), 15);
        }
        let ids: std::collections::BTreeSet<_> = tasks.iter().map(|t| t.id.clone()).collect();
        assert_eq!(ids.len(), 40, "duplicate task ids");
    }

    #[test]
    fn regression_16_has_degree4_and_rational() {
        let specs = regression_16_specs();
        assert!(specs.iter().any(|s| !s.rational && s.coefficients.len() == 5));
        assert!(specs.iter().any(|s| s.rational));
        let tasks = regression_16();
        assert_eq!(tasks.len(), 16);
        for t in &tasks {
            t.validate(&t.id).unwrap();
            assert!(t.points().len() >= 20);
            assert!(t.points().iter().all(|(x, y)| x.is_finite() && y.is_finite()));
        }
    }

    #[test]
    fn text_basic_20_valid() {
        let tasks = text_basic_20();
        assert_eq!(tasks.len(), 20);
        for t in &tasks {
            t.validate(&t.id).unwrap();
        }
    }

    #[test]
    fn unknown_curriculum_rejected() {
        assert!(builtin_curricula("list-advanced").is_err());
    }

    #[test]
    fn bases_resolve_against_builtin_registry() {
        let prims = PrimitiveSet::builtin();
        for name in CURRICULA {
            let lib = curriculum_basis(name, &prims).unwrap();
            lib.validate().unwrap();
            assert!(!lib.productions.is_empty());
        }
    }
}
