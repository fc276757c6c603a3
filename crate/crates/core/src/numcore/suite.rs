//! Randomized finite-difference checks over every tape primitive.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use super::{finite_diff_check, Tape, Tensor, Var};
use crate::error::Result;
use crate::rng::{stream, Rng};

type Builder = Box<dyn Fn(&mut Tape<'_>, &[Var]) -> Result<Var>>;

struct Case {
    shapes: Vec<Vec<usize>>,
    build: Builder,
}

/// Worst relative error observed for one primitive.
#[derive(Clone, Debug, PartialEq)]
pub struct PrimitiveCheck {
    pub op: &'static str,
    pub instances: usize,
    pub max_rel_error: f64,
}

pub const PRIMITIVES: [&str; 19] = [
    "matmul",
    "matvec",
    "vecmat",
    "add",
    "mul",
    "scale",
    "sum",
    "tanh",
    "sigmoid",
    "concat",
    "slice",
    "stack",
    "gather_row",
    "masked_softmax",
    "log_softmax",
    "pick",
    "lstm_cell",
    "mean",
    "max",
];

fn dim(rng: &mut Rng) -> usize {
    rng.random_range(1..=5)
}

fn case(op: &str, rng: &mut Rng) -> Case {
    let (a, b, c) = (dim(rng), dim(rng), dim(rng));
    match op {
        "matmul" => Case {
            shapes: vec![vec![a, b], vec![b, c]],
            build: Box::new(|t, v| t.matmul(v[0], v[1])),
        },
        "matvec" => Case {
            shapes: vec![vec![a, b], vec![b]],
            build: Box::new(|t, v| t.matvec(v[0], v[1])),
        },
        "vecmat" => Case {
            shapes: vec![vec![a], vec![a, b]],
            build: Box::new(|t, v| t.vecmat(v[0], v[1])),
        },
        "add" => Case {
            shapes: vec![vec![a], vec![a]],
            build: Box::new(|t, v| t.add(v[0], v[1])),
        },
        "mul" => Case {
            shapes: vec![vec![a], vec![a]],
            build: Box::new(|t, v| t.mul(v[0], v[1])),
        },
        "scale" => {
            let s = rng.random_range(-2.0..2.0);
            Case {
                shapes: vec![vec![a]],
                build: Box::new(move |t, v| Ok(t.scale(v[0], s))),
            }
        }
        "sum" => Case {
            shapes: vec![vec![a, b]],
            build: Box::new(|t, v| Ok(t.sum(v[0]))),
        },
        "tanh" => Case {
            shapes: vec![vec![a]],
            build: Box::new(|t, v| Ok(t.tanh(v[0]))),
        },
        "sigmoid" => Case {
            shapes: vec![vec![a]],
            build: Box::new(|t, v| Ok(t.sigmoid(v[0]))),
        },
        "concat" => Case {
            shapes: vec![vec![a], vec![b], vec![c]],
            build: Box::new(|t, v| t.concat(v)),
        },
        "slice" => {
            let n = a + b;
            let start = rng.random_range(0..n);
            let len = rng.random_range(1..=n - start);
            Case {
                shapes: vec![vec![n]],
                build: Box::new(move |t, v| t.slice(v[0], start, len)),
            }
        }
        "stack" => Case {
            shapes: vec![vec![b]; a],
            build: Box::new(|t, v| t.stack(v)),
        },
        "gather_row" => {
            let row = rng.random_range(0..a);
            Case {
                shapes: vec![vec![a, b]],
                build: Box::new(move |t, v| t.gather_row(v[0], row)),
            }
        }
        "masked_softmax" => {
            let n = a + 1;
            let keep = rng.random_range(0..n);
            let mask: Vec<bool> = (0..n).map(|i| i != keep && rng.random_bool(0.3)).collect();
            Case {
                shapes: vec![vec![n]],
                build: Box::new(move |t, v| t.masked_softmax(v[0], &mask)),
            }
        }
        "log_softmax" => Case {
            shapes: vec![vec![a + 1]],
            build: Box::new(|t, v| t.log_softmax(v[0])),
        },
        "pick" => {
            let idx = rng.random_range(0..a);
            Case {
                shapes: vec![vec![a]],
                build: Box::new(move |t, v| t.pick(v[0], idx)),
            }
        }
        "lstm_cell" => {
            let (x, h) = (a, b);
            Case {
                shapes: vec![vec![x], vec![h], vec![h], vec![4 * h, x + h], vec![4 * h]],
                build: Box::new(|t, v| {
                    let (h, c) = t.lstm_cell(v[0], v[1], v[2], v[3], v[4])?;
                    t.concat(&[h, c])
                }),
            }
        }
        "mean" => Case {
            shapes: vec![vec![b]; a],
            build: Box::new(|t, v| t.mean(v)),
        },
        "max" => Case {
            shapes: vec![vec![b]; a],
            build: Box::new(|t, v| t.max(v)),
        },
        other => panic!("unknown primitive {other}"),
    }
}

/// Builds `sum(out ⊙ r)` for a fixed random `r`, so every output coordinate
/// contributes to the checked gradient.
fn weighted_loss(tape: &mut Tape<'_>, out: Var, weights: &[f64]) -> Result<Var> {
    let n = tape.value(out).len();
    let r = tape.constant(Tensor::new(tape.shape(out).to_vec(), weights[..n].to_vec())?);
    let prod = tape.mul(out, r)?;
    Ok(tape.sum(prod))
}

fn run_case(c: &Case, rng: &mut Rng, eps: f64) -> Result<f64> {
    let sizes: Vec<usize> = c.shapes.iter().map(|s| s.iter().product()).collect();
    let params: Vec<f64> = (0..sizes.iter().sum::<usize>())
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let weights: Vec<f64> = (0..256).map(|_| rng.random_range(-1.0..1.0)).collect();

    let eval = |p: &[f64], grad: bool| -> Result<(f64, Vec<f64>)> {
        let mut tape = if grad { Tape::new() } else { Tape::no_grad() };
        let mut vars = Vec::with_capacity(sizes.len());
        let mut off = 0;
        for (shape, &n) in c.shapes.iter().zip(&sizes) {
            let t = Tensor::new(shape.clone(), p[off..off + n].to_vec())?;
            vars.push(tape.input(t, true));
            off += n;
        }
        let out = (c.build)(&mut tape, &vars)?;
        let loss = weighted_loss(&mut tape, out, &weights)?;
        let mut g = Vec::new();
        if grad {
            tape.backward(loss)?;
            for &v in &vars {
                g.extend(tape.grad(v));
            }
        }
        Ok((tape.scalar(loss), g))
    };
    let (_, analytic) = eval(&params, true)?;
    let report = finite_diff_check(|p| Ok(eval(p, false)?.0), &params, &analytic, eps)?;
    Ok(report.max_rel_error)
}

/// Runs `instances` random cases per primitive and reports the worst error
/// for each.
pub fn check_primitives(seed: u64, instances: usize, eps: f64) -> Result<Vec<PrimitiveCheck>> {
    PRIMITIVES
        .iter()
        .enumerate()
        .map(|(k, &op)| {
            let mut rng = stream(seed, &[0x6772_6164, k as u64]);
            let mut worst: f64 = 0.0;
            for _ in 0..instances {
                let c = case(op, &mut rng);
                worst = worst.max(run_case(&c, &mut rng, eps)?);
            }
            Ok(PrimitiveCheck {
                op,
                instances,
                max_rel_error: worst,
            })
        })
        .collect()
}
