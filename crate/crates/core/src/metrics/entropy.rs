//! Exact information quantities on small, fully enumerated joints of a
//! trajectory τ and instructions x_1 … x_M.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::stream;

/// Tolerance on Σp = 1 and on the inequality / identity checks.
pub const TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Atom<'a> {
    pub tau: usize,
    pub xs: &'a [usize],
    pub p: f64,
}

/// A joint distribution given as a list of atoms `(τ, x_1 … x_M, p)`.
/// Repeated atoms are allowed and add up.
#[derive(Clone, Debug, PartialEq)]
pub struct Process {
    m: usize,
    taus: Vec<usize>,
    xs: Vec<usize>,
    ps: Vec<f64>,
}

impl Process {
    pub fn new(m: usize) -> Self {
        Process {
            m,
            taus: Vec::new(),
            xs: Vec::new(),
            ps: Vec::new(),
        }
    }

    pub fn push(&mut self, tau: usize, xs: &[usize], p: f64) -> Result<()> {
        if xs.len() != self.m {
            return Err(Error::Arity {
                expected: self.m,
                got: xs.len(),
            });
        }
        if !(p >= 0.0) || !p.is_finite() {
            return Err(Error::Domain(format!("atom probability {p} is not a finite non-negative number")));
        }
        self.taus.push(tau);
        self.xs.extend_from_slice(xs);
        self.ps.push(p);
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.ps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ps.is_empty()
    }

    pub fn atoms(&self) -> impl Iterator<Item = Atom<'_>> + '_ {
        (0..self.len()).map(move |i| Atom {
            tau: self.taus[i],
            xs: &self.xs[i * self.m..(i + 1) * self.m],
            p: self.ps[i],
        })
    }

    pub fn check_normalized(&self) -> Result<()> {
        let total: f64 = self.ps.iter().sum();
        if (total - 1.0).abs() > TOL {
            return Err(Error::Domain(format!("probabilities sum to {total}, not 1")));
        }
        Ok(())
    }

    fn check_indices(&self, idx: &[usize]) -> Result<()> {
        match idx.iter().find(|&&i| i >= self.m) {
            Some(&i) => Err(Error::Domain(format!("instruction index {i} out of range for M={}", self.m))),
            None => Ok(()),
        }
    }

    /// Marginal over `(τ?, x_idx)`, keyed by the projected values.
    fn marginal(&self, with_tau: bool, idx: &[usize]) -> BTreeMap<Vec<usize>, f64> {
        let mut out = BTreeMap::new();
        for a in self.atoms() {
            let mut key = Vec::with_capacity(idx.len() + 1);
            if with_tau {
                key.push(a.tau);
            }
            key.extend(idx.iter().map(|&i| a.xs[i]));
            *out.entry(key).or_insert(0.0) += a.p;
        }
        out
    }

    /// One line per atom: `tau;x1,x2,..;p` with `p` in shortest round-trip form.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = write!(s, "M={}", self.m);
        for a in self.atoms() {
            let xs: Vec<String> = a.xs.iter().map(|x| format!("{x}")).collect();
            let _ = write!(s, " | {};{};{:e}", a.tau, xs.join(","), a.p);
        }
        s
    }
}

fn sorted_unique(idx: &[usize]) -> Vec<usize> {
    let mut v = idx.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

/// H(τ | x_S) in bits, by summing −p(τ, x_S) log₂ p(τ | x_S) over every atom
/// of the joint marginal. `condition` may be empty (plain H(τ)).
pub fn exact_conditional_entropy(process: &Process, condition: &[usize]) -> Result<f64> {
    process.check_normalized()?;
    process.check_indices(condition)?;
    let s = sorted_unique(condition);
    let joint = process.marginal(true, &s);
    let cond = process.marginal(false, &s);
    let mut h = 0.0;
    for (key, &p) in &joint {
        if p > 0.0 {
            let pc = cond[&key[1..]];
            h -= p * libm::log2(p / pc);
        }
    }
    // plug-in sums of non-negative terms can round to -0.0 or a hair below
    Ok(h.max(0.0))
}

/// I(τ; x_B | x_A) in bits, from its own definition
/// Σ p(τ,a,b) log₂ [p(τ,a,b) p(a) / (p(τ,a) p(a,b))] — independent of
/// [`exact_conditional_entropy`], so the two can cross-check.
pub fn conditional_mutual_information(process: &Process, b: &[usize], given: &[usize]) -> Result<f64> {
    process.check_normalized()?;
    process.check_indices(b)?;
    process.check_indices(given)?;
    let a = sorted_unique(given);
    let bb: Vec<usize> = sorted_unique(b).into_iter().filter(|i| !a.contains(i)).collect();
    let mut ab = a.clone();
    ab.extend(&bb);
    let p_tab = process.marginal(true, &ab);
    let p_ta = process.marginal(true, &a);
    let p_ab = process.marginal(false, &ab);
    let p_a = process.marginal(false, &a);
    let na = a.len();
    let mut i = 0.0;
    for (key, &p) in &p_tab {
        if p > 0.0 {
            let pa = p_a[&key[1..1 + na]];
            let pta = p_ta[&key[..1 + na]];
            let pab = p_ab[&key[1..]];
            i += p * libm::log2(p * pa / (pta * pab));
        }
    }
    Ok(i)
}

/// Everything the entropy-reduction argument talks about for one process.
#[derive(Clone, Debug, PartialEq)]
pub struct EntropyReport {
    /// H(τ | x_i) for each i.
    pub h_single: Vec<f64>,
    /// H(τ | x_1 … x_M).
    pub h_all: f64,
    /// I(τ; x_2 … x_M | x_1), computed from its definition.
    pub mi: f64,
    /// min_i H(τ | x_i) − H(τ | X); non-negative by the theorem.
    pub margin: f64,
    /// |(H(τ|x_1) − H(τ|X)) − I|.
    pub identity_gap: f64,
}

pub fn analyze(process: &Process) -> Result<EntropyReport> {
    if process.m() == 0 {
        return Err(Error::Domain("a process needs at least one instruction".into()));
    }
    let h_single = (0..process.m())
        .map(|i| exact_conditional_entropy(process, &[i]))
        .collect::<Result<Vec<_>>>()?;
    let all: Vec<usize> = (0..process.m()).collect();
    let h_all = exact_conditional_entropy(process, &all)?;
    let mi = conditional_mutual_information(process, &all[1..], &[0])?;
    let min_single = h_single.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(EntropyReport {
        margin: min_single - h_all,
        identity_gap: ((h_single[0] - h_all) - mi).abs(),
        h_single,
        h_all,
        mi,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub index: usize,
    pub reason: String,
    pub process: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EntropyCheckReport {
    pub seed: u64,
    pub n_processes: usize,
    pub violations: Vec<Violation>,
    /// Smallest min_i H(τ|x_i) − H(τ|X) seen.
    pub worst_margin: f64,
    pub worst_identity_gap: f64,
    /// Mutual information of [`disambiguation_process`], in bits.
    pub disambiguation_mi: f64,
    /// Mutual information of [`independence_process`], in bits.
    pub independence_mi: f64,
}

impl EntropyCheckReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
            && (self.disambiguation_mi - 1.0).abs() <= TOL
            && self.independence_mi.abs() <= TOL
    }
}

/// A random joint with 1–6 trajectories and 1–3 instructions of 1–4 values
/// each. About half the grid gets zero mass, so deterministic and
/// disconnected structure shows up often.
pub fn random_process<R: Rng>(rng: &mut R) -> Process {
    let n_tau = rng.random_range(1..=6usize);
    let m = rng.random_range(1..=3usize);
    let cards: Vec<usize> = (0..m).map(|_| rng.random_range(1..=4usize)).collect();
    let cells: usize = n_tau * cards.iter().product::<usize>();
    let mut w: Vec<f64> = (0..cells)
        .map(|_| if rng.random_bool(0.5) { rng.random::<f64>() } else { 0.0 })
        .collect();
    if w.iter().all(|&x| x == 0.0) {
        let k = rng.random_range(0..cells);
        w[k] = 1.0;
    }
    let total: f64 = w.iter().sum();
    let mut proc = Process::new(m);
    let mut xs = alloc::vec![0usize; m];
    for (cell, &wi) in w.iter().enumerate() {
        if wi == 0.0 {
            continue;
        }
        let mut rest = cell;
        let tau = rest % n_tau;
        rest /= n_tau;
        for (x, &c) in xs.iter_mut().zip(&cards) {
            *x = rest % c;
            rest /= c;
        }
        proc.push(tau, &xs, wi / total).expect("arity and weights are valid by construction");
    }
    proc
}

/// Two equiprobable trajectories; x_1 says nothing, x_2 names the trajectory.
pub fn disambiguation_process() -> Process {
    let mut p = Process::new(2);
    for tau in 0..2 {
        for x1 in 0..2 {
            p.push(tau, &[x1, tau], 0.25).expect("valid atom");
        }
    }
    p
}

/// τ uniform on three values, independent of two uniform binary instructions.
pub fn independence_process() -> Process {
    let mut p = Process::new(2);
    for tau in 0..3 {
        for x1 in 0..2 {
            for x2 in 0..2 {
                p.push(tau, &[x1, x2], 1.0 / 12.0).expect("valid atom");
            }
        }
    }
    p
}

/// Samples `n_processes` random joints from `seed` and checks, on each, that
/// conditioning on every instruction never beats conditioning on all of them
/// (within [`TOL`]) and that H(τ|x_1) − H(τ|X) equals I(τ; x_2… | x_1).
pub fn entropy_check(seed: u64, n_processes: usize) -> Result<EntropyCheckReport> {
    if n_processes == 0 {
        return Err(Error::Contract("entropy_check needs at least one process".into()));
    }
    let mut rng = stream(seed, &[0x656e_7472]);
    let mut violations = Vec::new();
    let mut worst_margin = f64::INFINITY;
    let mut worst_identity_gap: f64 = 0.0;
    for index in 0..n_processes {
        let proc = random_process(&mut rng);
        let r = analyze(&proc)?;
        worst_margin = worst_margin.min(r.margin);
        worst_identity_gap = worst_identity_gap.max(r.identity_gap);
        let mut reason = String::new();
        if r.margin < -TOL {
            let _ = write!(reason, "H(tau|X)={} exceeds min_i H(tau|x_i) by {}", r.h_all, -r.margin);
        }
        if r.identity_gap > TOL {
            if !reason.is_empty() {
                reason.push_str("; ");
            }
            let _ = write!(reason, "decomposition identity off by {}", r.identity_gap);
        }
        if !reason.is_empty() {
            violations.push(Violation {
                index,
                reason,
                process: proc.to_text(),
            });
        }
    }
    Ok(EntropyCheckReport {
        seed,
        n_processes,
        violations,
        worst_margin,
        worst_identity_gap,
        disambiguation_mi: analyze(&disambiguation_process())?.mi,
        independence_mi: analyze(&independence_process())?.mi,
    })
}
