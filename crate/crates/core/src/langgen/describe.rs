use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use rand::Rng as _;

use super::vocab::{TokenId, Vocabulary, BOS, EOS};
use crate::error::{Error, Result};
use crate::navsim::{NavGraph, Trajectory};
use crate::rng::stream;

/// Longest instruction, including BOS and EOS.
pub const MAX_INSTRUCTION_TOKENS: usize = 60;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Turn {
    Left,
    Right,
    Straight,
    Around,
}

/// Turn implied by moving from heading `from` to heading `to`.
///
/// Headings grow clockwise, so a positive change is a right turn. A change
/// within 1e-9 of zero reads as straight and one within 1e-9 of π as around.
pub fn turn_between(from: f64, to: f64) -> Turn {
    let mut d = libm::fmod(to - from, TAU);
    if d > PI {
        d -= TAU;
    } else if d <= -PI {
        d += TAU;
    }
    if d.abs() < 1e-9 {
        Turn::Straight
    } else if (d.abs() - PI).abs() < 1e-9 {
        Turn::Around
    } else if d > 0.0 {
        Turn::Right
    } else {
        Turn::Left
    }
}

struct Bank {
    turn: [&'static str; 4],
    joiner: &'static str,
    pass: &'static str,
    reach: &'static str,
    wait: &'static str,
}

/// Paraphrase banks; `style` selects one.
const BANKS: [Bank; 4] = [
    Bank {
        turn: ["turn left", "turn right", "go straight", "turn around"],
        joiner: "and",
        pass: "walk past the",
        reach: "go to the",
        wait: "wait at the",
    },
    Bank {
        turn: ["bear left", "bear right", "continue forward", "double back"],
        joiner: "then",
        pass: "pass by the",
        reach: "head into the",
        wait: "stop at the",
    },
    Bank {
        turn: ["head left", "head right", "keep straight", "spin around"],
        joiner: ",",
        pass: "move past the",
        reach: "enter the",
        wait: "wait by the",
    },
    Bank {
        turn: ["go left", "go right", "walk forward", "turn back"],
        joiner: "and",
        pass: "walk by the",
        reach: "walk toward the",
        wait: "stop near the",
    },
];

pub const N_STYLES: usize = BANKS.len();

/// A synthesized instruction and which hops it describes.
#[derive(Clone, Debug, PartialEq)]
pub struct Description {
    /// `BOS`, content ids, `EOS`.
    pub tokens: Vec<TokenId>,
    /// Content words joined by single spaces.
    pub text: String,
    /// One flag per hop: whether its clause survived elision.
    pub mentioned: Vec<bool>,
}

/// Walks `traj` and emits one clause per hop plus a terminal clause. Each hop
/// clause is dropped independently with probability `elide_p`.
pub fn describe_trajectory(
    graph: &NavGraph,
    traj: &Trajectory,
    start_heading: f64,
    seed: u64,
    elide_p: f64,
    style: usize,
    vocab: &Vocabulary,
) -> Result<Description> {
    if !(0.0..1.0).contains(&elide_p) {
        return Err(Error::Domain(format!("elision probability {elide_p} outside [0, 1)")));
    }
    let bank = &BANKS[style % N_STYLES];
    let mut rng = stream(seed, &[0x7465_7874, style as u64]);
    let mut words: Vec<&str> = Vec::new();
    let mut mentioned = Vec::with_capacity(traj.hops());
    let mut heading = start_heading;
    let hops = traj.hops();
    for (h, w) in traj.nodes.windows(2).enumerate() {
        let view = graph
            .view_towards(w[0], w[1])
            .ok_or_else(|| Error::Contract(format!("nodes {} and {} are not adjacent", w[0], w[1])))?;
        let new_heading = graph.views[w[0]][view].heading;
        let turn = turn_between(heading, new_heading);
        heading = new_heading;
        let keep = !rng.random_bool(elide_p);
        mentioned.push(keep);
        if !keep {
            continue;
        }
        let landmark = super::vocab::LANDMARK_NAMES[graph.node(w[1])?.landmark];
        words.extend(bank.turn[turn as usize].split(' '));
        words.push(bank.joiner);
        let phrase = if h + 1 == hops { bank.reach } else { bank.pass };
        words.extend(phrase.split(' '));
        words.push(landmark);
        words.push(".");
    }
    let goal = super::vocab::LANDMARK_NAMES[graph.node(traj.end())?.landmark];
    words.extend(bank.wait.split(' '));
    words.push(goal);
    words.push(".");

    words.truncate(MAX_INSTRUCTION_TOKENS - 2);
    let text = words.join(" ");
    let mut tokens = Vec::with_capacity(words.len() + 2);
    tokens.push(BOS);
    tokens.extend(vocab.tokenize(&text));
    tokens.push(EOS);
    Ok(Description {
        tokens,
        text,
        mentioned,
    })
}
