//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion.
//!
//! Criteria 1–4 and 8–10 are correctness properties and fail the target.
//! Criteria 5–7 compare trained models on the desk configuration; they are
//! reported, and only fail the target with `LEO_ACCEPT_STRICT=1`.
//! `LEO_ACCEPT_SKIP_DESK=1` skips the desk runs (about an hour on one core).

use std::fs;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use leo::commands::{entropy_check_cmd, eval_cmd, gradcheck_cmd, read_checkpoint, train_cmd, EvalArgs};
use leo::config::RunConfig;
use leo::corpus::Corpus;
use leo::experiment::{eval_split, run_grid, train_model, Variant, VariantRun};
use leo::run::read_manifest;
use leo_core::agent::{rollout, teacher_forced_logprob, teacher_forced_traced, AgentParams, EncoderMode, ModelConfig, Route, Scheme};
use leo_core::langgen::{generate_dataset, DatasetConfig, InstructionSet, Split, Vocabulary};
use leo_core::metrics::{evaluate, score_episode, summarize, MetricsSummary, Setting};
use leo_core::navsim::{generate_world, DistanceTable, NavGraph, Node, Trajectory, View, WorldConfig};
use leo_core::trainer::{compute_loss, prepare, Checkpoint, NoHooks, Paradigm};

/// Frozen after the first verified smoke run (final/initial loss 0.002,
/// train SR 1.0).
const SMOKE_LOSS_RATIO: f64 = 0.3;
const SMOKE_MIN_SR: f64 = 0.9;
const DESK_BUDGET: Duration = Duration::from_secs(30 * 60);

type Outcome = (bool, String);

struct Report {
    lines: Vec<(usize, bool, bool, String)>,
}

impl Report {
    fn record(&mut self, n: usize, fatal: bool, (pass, detail): Outcome) {
        println!("criterion {n:2}: {} — {detail}", if pass { "PASS" } else { "FAIL" });
        self.lines.push((n, fatal, pass, detail));
    }
}

fn repo_file(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn cfg(text: &str) -> RunConfig {
    RunConfig::from_text(text, &[]).unwrap()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12
}

fn summaries_close(a: &MetricsSummary, b: &MetricsSummary) -> bool {
    a.n == b.n && close(a.tl, b.tl) && close(a.ne, b.ne) && close(a.sr, b.sr) && close(a.spl, b.spl)
}

fn gradients() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let t = Instant::now();
    let (_, o) = gradcheck_cmd(dir.path(), 1, 8, 1e-5, 1e-4, 100).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let worst = o
        .primitives
        .iter()
        .max_by(|a, b| a.max_rel_error.total_cmp(&b.max_rel_error))
        .unwrap();
    (
        o.passed() && secs < 60.0 && o.primitives.len() >= 10,
        format!(
            "{} primitives (worst {} {:.2e}), end-to-end {:.2e}, {secs:.1}s",
            o.primitives.len(),
            worst.op,
            worst.max_rel_error,
            o.end_to_end.max_rel_error
        ),
    )
}

fn entropy() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let t = Instant::now();
    let (_, r) = entropy_check_cmd(dir.path(), 3, 1000).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let pass = r.passed() && r.n_processes == 1000 && (r.disambiguation_mi - 1.0).abs() <= 1e-9 && secs < 60.0;
    (
        pass,
        format!(
            "{} processes, {} violations, identity gap {:.1e}, disambiguation I = {} bit, {secs:.1}s",
            r.n_processes,
            r.violations.len(),
            r.worst_identity_gap,
            r.disambiguation_mi
        ),
    )
}

fn single_instruction_reduction() -> Outcome {
    let base = "seen_graphs=2\nunseen_graphs=1\nn_nodes=20\nn_train_per_world=16\nn_val_seen_per_world=8\n\
                n_val_unseen_per_world=16\nm=1\nhidden=16\nembed=8\nepochs=3\nseed=5\n";
    let leo_cfg = cfg(base);
    let corpus = Corpus::generate(&leo_cfg).unwrap();
    let base_cfg = cfg(&format!("{base}paradigm=baseline_iid\n"));
    let mut notes = Vec::new();

    let items = prepare(&corpus.split_vec(Split::Train), &corpus.graphs).unwrap();
    let p0 = leo::experiment::init_params(&leo_cfg.train, &corpus).unwrap();
    let l_leo = compute_loss(&p0, &corpus.graphs, &items, Paradigm::LeoJoint).unwrap();
    let l_base = compute_loss(&p0, &corpus.graphs, &items, Paradigm::BaselineIid).unwrap();
    let mut ok = close(l_leo, l_base);
    notes.push(format!("init loss Δ {:.1e}", (l_leo - l_base).abs()));

    let a = train_model(&leo_cfg.train, &corpus, &mut NoHooks).unwrap();
    let b = train_model(&base_cfg.train, &corpus, &mut NoHooks).unwrap();
    let loss_gap = a.losses.iter().zip(&b.losses).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    ok &= loss_gap <= 1e-12;
    notes.push(format!("training loss Δ {loss_gap:.1e}"));

    let t_max = leo_cfg.train.t_max;
    for split in [Split::ValSeen, Split::ValUnseen] {
        let recs = corpus.split_vec(split);
        let base_a = evaluate(&b.params, &corpus.graphs, &recs, Setting::A, Route::Seq2Seq, t_max, false).unwrap();
        for setting in [Setting::A, Setting::B] {
            let leo = evaluate(&a.params, &corpus.graphs, &recs, setting, Route::Joint(Scheme::Mean), t_max, false).unwrap();
            ok &= summaries_close(&leo.summary, &base_a.summary);
        }
        // the CLI's default routing agrees as well
        let cli_b = eval_split(&b.params, &corpus, split, Setting::B, None, t_max, false).unwrap();
        ok &= summaries_close(&cli_b.summary, &base_a.summary);
    }

    let mut logit_gap: f64 = 0.0;
    for r in corpus.split(Split::ValUnseen) {
        let g = graph_of(&corpus.graphs, r);
        let expert = r.trajectory(g).unwrap();
        let (la, ta) = teacher_forced_traced(&a.params, g, &expert, r, Route::Joint(Scheme::Mean)).unwrap();
        let (lb, tb) = teacher_forced_traced(&b.params, g, &expert, r, Route::Seq2Seq).unwrap();
        logit_gap = logit_gap.max((la - lb).abs());
        let (_, ra) = rollout(&a.params, g, r, Route::Joint(Scheme::Mean), t_max).unwrap();
        let (_, rb) = rollout(&b.params, g, r, Route::Seq2Seq, t_max).unwrap();
        ok &= ta.len() == tb.len() && ra.len() == rb.len();
        for (x, y) in ta.iter().zip(&tb).chain(ra.iter().zip(&rb)) {
            for (u, v) in x.logits.iter().zip(&y.logits) {
                logit_gap = logit_gap.max((u - v).abs());
            }
        }
    }
    ok &= logit_gap <= 1e-12;
    notes.push(format!("per-step logits Δ {logit_gap:.1e}"));
    notes.push("Settings A/B metrics match on both validation splits".into());
    (ok, notes.join(", "))
}

fn graph_of<'a>(graphs: &'a [NavGraph], r: &InstructionSet) -> &'a NavGraph {
    graphs.iter().find(|g| g.graph_id == r.graph_id).unwrap()
}

fn permutations3() -> [[usize; 3]; 6] {
    [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]]
}

fn aggregation_algebra() -> Outcome {
    let c = cfg("seen_graphs=2\nunseen_graphs=1\nn_nodes=20\nn_train_per_world=10\nn_val_seen_per_world=0\n\
                 n_val_unseen_per_world=10\nm=3\nhidden=16\nembed=8\nepochs=1\n");
    let corpus = Corpus::generate(&c).unwrap();
    let mut ok = true;
    let mut checked = 0;
    let model = |scheme, mode, arity| {
        let mc = ModelConfig {
            vocab_size: corpus.vocab.len(),
            embed_dim: 8,
            hidden: 16,
            feat_dim: corpus.feat_dim(),
            scheme,
            encoder_mode: mode,
            arity,
        };
        AgentParams::init(mc, 9).unwrap()
    };
    for scheme in [Scheme::Mean, Scheme::Max] {
        let p = model(scheme, EncoderMode::Shared, 3);
        for r in &corpus.records {
            let g = graph_of(&corpus.graphs, r);
            let expert = r.trajectory(g).unwrap();
            let (l0, t0) = teacher_forced_traced(&p, g, &expert, r, Route::Joint(scheme)).unwrap();
            let (roll0, _) = rollout(&p, g, r, Route::Joint(scheme), c.train.t_max).unwrap();
            for perm in permutations3() {
                let mut q = r.clone();
                q.instructions = perm.iter().map(|&i| r.instructions[i].clone()).collect();
                let (l1, t1) = teacher_forced_traced(&p, g, &expert, &q, Route::Joint(scheme)).unwrap();
                ok &= l0.to_bits() == l1.to_bits();
                ok &= t0.iter().zip(&t1).all(|(x, y)| x.logits == y.logits && x.z == y.z);
                ok &= rollout(&p, g, &q, Route::Joint(scheme), c.train.t_max).unwrap().0 == roll0;
                checked += 1;
            }
        }
    }

    let mean = model(Scheme::Mean, EncoderMode::Shared, 3);
    let mut dup_gap: f64 = 0.0;
    for r in &corpus.records {
        let g = graph_of(&corpus.graphs, r);
        let expert = r.trajectory(g).unwrap();
        let mut twice = r.clone();
        twice.instructions = r.instructions.iter().chain(&r.instructions).cloned().collect();
        let one = r.single(0);
        let mut triple = one.clone();
        triple.instructions = vec![one.instructions[0].clone(); 3];
        for (x, y) in [(r.clone(), twice), (one, triple)] {
            let (_, tx) = teacher_forced_traced(&mean, g, &expert, &x, Route::Joint(Scheme::Mean)).unwrap();
            let (_, ty) = teacher_forced_traced(&mean, g, &expert, &y, Route::Joint(Scheme::Mean)).unwrap();
            for (a, b) in tx.iter().zip(&ty) {
                for (u, v) in a.logits.iter().zip(&b.logits) {
                    dup_gap = dup_gap.max((u - v).abs());
                }
            }
        }
    }
    ok &= dup_gap <= 1e-12;

    // concat is tied to its arity
    let concat = model(Scheme::Concat, EncoderMode::Shared, 3);
    let r = &corpus.records[0];
    let g = graph_of(&corpus.graphs, r);
    let expert = r.trajectory(g).unwrap();
    let mut two = r.clone();
    two.instructions.truncate(2);
    let arity = |res: leo_core::Result<f64>| matches!(res, Err(leo_core::Error::Arity { expected: 3, got: 2 }));
    let mut arity_ok = teacher_forced_logprob(&concat, g, &expert, r, Route::Joint(Scheme::Concat)).is_ok();
    arity_ok &= arity(teacher_forced_logprob(&concat, g, &expert, &two, Route::Joint(Scheme::Concat)));
    arity_ok &= matches!(
        evaluate(&concat, &corpus.graphs, &corpus.records, Setting::A, Route::Joint(Scheme::Concat), 12, false),
        Err(leo_core::Error::Arity { expected: 3, got: 1 })
    );
    arity_ok &= RunConfig::from_text("scheme=concat\nm=1\n", &[]).is_err();
    let arms = model(Scheme::Mean, EncoderMode::MultiArm, 2);
    arity_ok &= matches!(
        teacher_forced_logprob(&arms, g, &expert, r, Route::Joint(Scheme::Mean)),
        Err(leo_core::Error::Arity { expected: 2, got: 3 })
    );
    ok &= arity_ok;
    (
        ok,
        format!(
            "{checked} permuted episodes bit-identical, duplication Δ {dup_gap:.1e}, arity errors {}",
            if arity_ok { "fire" } else { "MISSING" }
        ),
    )
}

/// 0 at the origin; 1 five meters east, 2 2.5 m north, 3 four meters south.
fn star() -> NavGraph {
    let pos = [[0.0, 0.0, 0.0], [5.0, 0.0, 0.0], [0.0, 2.5, 0.0], [0.0, -4.0, 0.0]];
    let nbrs: [&[usize]; 4] = [&[1, 2, 3], &[0], &[0], &[0]];
    NavGraph {
        graph_id: "star".into(),
        nodes: pos
            .iter()
            .enumerate()
            .map(|(id, &pos)| Node { id, pos, landmark: 0 })
            .collect(),
        edges: vec![(0, 1), (0, 2), (0, 3)],
        views: nbrs
            .iter()
            .map(|ns| {
                (0..3)
                    .map(|k| View {
                        heading: k as f64,
                        elevation: 0.0,
                        neighbor: ns.get(k).copied(),
                        feature: vec![k as f64, 1.0],
                    })
                    .collect()
            })
            .collect(),
    }
}

fn enumerate(g: &NavGraph, nodes: &mut Vec<usize>, t_max: usize, out: &mut Vec<Trajectory>) {
    if nodes.len() - 1 == t_max {
        out.push(Trajectory::from_path(g, nodes.clone(), false).unwrap());
        return;
    }
    out.push(Trajectory::from_path(g, nodes.clone(), true).unwrap());
    let here = *nodes.last().unwrap();
    for b in g.neighbors(here).collect::<Vec<_>>() {
        nodes.push(b);
        enumerate(g, nodes, t_max, out);
        nodes.pop();
    }
}

fn metric_correctness(summaries: &[MetricsSummary]) -> Outcome {
    let g = star();
    let t = DistanceTable::new(&g);
    let walk = |nodes: &[usize]| Trajectory::from_path(&g, nodes.to_vec(), true).unwrap();
    let exact = score_episode(&t, "exact", &walk(&[0, 1]), 1).unwrap();
    let fail = score_episode(&t, "fail", &walk(&[0, 2, 0]), 3).unwrap();
    let detour = score_episode(&t, "detour", &walk(&[0, 2, 0, 1]), 1).unwrap();
    let mut examples = exact.nav_error == 0.0 && exact.success && exact.spl_term == 1.0;
    examples &= !fail.success && fail.spl_term == 0.0 && fail.taken == 5.0;
    examples &= detour.success && detour.shortest == 5.0 && detour.taken == 10.0 && detour.spl_term == 0.5;
    let s = summarize(&[exact, fail, detour]).unwrap();
    examples &= s.spl == 0.5 && s.sr == 2.0 / 3.0;

    let ordered = summaries.iter().all(|s| s.spl <= s.sr);

    let wc = WorldConfig {
        n_nodes: 4,
        ..WorldConfig::default()
    };
    let tiny = generate_world("tiny", 4, &wc).unwrap();
    let dc = DatasetConfig {
        n_train_per_world: 1,
        n_val_seen_per_world: 0,
        n_val_unseen_per_world: 0,
        m: 3,
        min_hops: 1,
        max_hops: 2,
        ..DatasetConfig::default()
    };
    let vocab = Vocabulary::standard();
    let ds = generate_dataset(&dc, std::slice::from_ref(&tiny), &[], &vocab).unwrap();
    let set = &ds.records[0];
    let start = set.path[0];
    let mut all = Vec::new();
    enumerate(&tiny, &mut vec![start], 4, &mut all);
    let mut worst: f64 = 0.0;
    for (scheme, mode) in [
        (Scheme::Mean, EncoderMode::Shared),
        (Scheme::Max, EncoderMode::Shared),
        (Scheme::Concat, EncoderMode::Shared),
        (Scheme::Mean, EncoderMode::MultiArm),
    ] {
        let mc = ModelConfig {
            vocab_size: vocab.len(),
            embed_dim: 6,
            hidden: 8,
            feat_dim: tiny.feat_dim(),
            scheme,
            encoder_mode: mode,
            arity: 3,
        };
        let p = AgentParams::init(mc, 21).unwrap();
        let total: f64 = all
            .iter()
            .map(|tr| teacher_forced_logprob(&p, &tiny, tr, set, Route::Joint(scheme)).unwrap().exp())
            .sum();
        worst = worst.max((total - 1.0).abs());
    }
    let normalized = worst <= 1e-9;
    (
        examples && ordered && normalized,
        format!(
            "examples {}, SPL ≤ SR on {} summaries {}, {} trajectories on a 4-node world sum to 1 ± {worst:.1e}",
            if examples { "exact" } else { "WRONG" },
            summaries.len(),
            if ordered { "holds" } else { "VIOLATED" },
            all.len()
        ),
    )
}

fn small_train_config() -> RunConfig {
    cfg("seen_graphs=2\nunseen_graphs=1\nn_nodes=20\nn_train_per_world=16\nn_val_seen_per_world=4\n\
         n_val_unseen_per_world=12\nm=3\nhidden=16\nembed=8\nepochs=3\nseed=7\ncheckpoint_every=1\n")
}

fn reproducibility() -> Outcome {
    let c = small_train_config();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut ckpts = Vec::new();
    let mut metric_files = Vec::new();
    let mut manifests = Vec::new();
    for d in &dirs {
        let (_, rep) = train_cmd(&c, d.path(), None).unwrap();
        let bytes = fs::read(&rep.checkpoint).unwrap();
        let args = EvalArgs {
            checkpoint: &rep.checkpoint,
            split: Split::ValUnseen,
            setting: Setting::B,
            scheme: None,
            data: None,
            config: None,
            sets: &[],
            attention: true,
        };
        let (run, _) = eval_cmd(d.path(), &args).unwrap();
        let mut files = Vec::new();
        for f in ["summary.json", "episodes.csv"] {
            files.push(fs::read(run.join(f)).unwrap());
        }
        manifests.push(read_manifest(&run).unwrap());
        metric_files.push(files);
        ckpts.push(bytes);
    }
    let same_ckpt = ckpts[0] == ckpts[1];
    let same_metrics = metric_files[0] == metric_files[1];
    let det = |m: &leo::run::RunManifest| -> Vec<(String, String)> {
        m.artifacts
            .iter()
            .filter(|(_, a)| a.deterministic)
            .map(|(k, a)| (k.clone(), a.sha256.clone()))
            .collect()
    };
    let same_artifacts = det(&manifests[0]) == det(&manifests[1]) && manifests[0].artifacts.len() > 3;

    let ck = Checkpoint::decode(&ckpts[0]).unwrap();
    let mut round = ck.encode() == ckpts[0];
    let params = ck.to_params().unwrap();
    round &= Checkpoint::from_params(&params, &c.to_text(), ck.epoch, ck.running_loss).encode() == ckpts[0];
    let from_disk = read_checkpoint(&dirs[0].path().join("x.leo"));
    round &= from_disk.is_err();
    (
        same_ckpt && same_metrics && same_artifacts && round,
        format!(
            "checkpoints {}, metric files {}, {} deterministic artifacts {}, round trip {}",
            if same_ckpt { "identical" } else { "DIFFER" },
            if same_metrics { "identical" } else { "DIFFER" },
            det(&manifests[0]).len(),
            if same_artifacts { "match" } else { "DIFFER" },
            if round { "bit-exact" } else { "BROKEN" }
        ),
    )
}

fn smoke() -> (Outcome, MetricsSummary) {
    let text = fs::read_to_string(repo_file("configs/smoke.conf")).unwrap();
    let c = cfg(&text);
    let dir = tempfile::tempdir().unwrap();
    let (_, rep) = train_cmd(&c, dir.path(), None).unwrap();
    let args = EvalArgs {
        checkpoint: &rep.checkpoint,
        split: Split::Train,
        setting: Setting::B,
        scheme: None,
        data: None,
        config: None,
        sets: &[],
        attention: false,
    };
    let (_, s) = eval_cmd(dir.path(), &args).unwrap();
    let ratio = rep.losses[rep.losses.len() - 1] / rep.losses[0];
    (
        (
            ratio < SMOKE_LOSS_RATIO && s.sr >= SMOKE_MIN_SR,
            format!(
                "loss {:.4} -> {:.4} (ratio {ratio:.4} < {SMOKE_LOSS_RATIO}), train Setting B SR {:.3} ≥ {SMOKE_MIN_SR}",
                rep.losses[0],
                rep.losses[rep.losses.len() - 1],
                s.sr
            ),
        ),
        s,
    )
}

fn unseen(r: &VariantRun, setting: Setting) -> &MetricsSummary {
    r.get(Split::ValUnseen, setting)
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.collect();
    v.iter().sum::<f64>() / v.len() as f64
}

struct Desk {
    baseline: Vec<VariantRun>,
    leo: Vec<VariantRun>,
    max: Vec<VariantRun>,
    concat: Vec<VariantRun>,
    multi_arm: Vec<VariantRun>,
    comparison_time: Duration,
}

impl Desk {
    fn run() -> Self {
        let text = fs::read_to_string(repo_file("configs/desk.conf")).unwrap();
        let c = cfg(&text);
        let t = Instant::now();
        let corpus = Corpus::generate(&c).unwrap();
        let baseline = run_grid(&c, &corpus, &[Variant::BASELINE], &c.seeds, &[Setting::A]).unwrap();
        let leo = run_grid(&c, &corpus, &[Variant::leo(Scheme::Mean, EncoderMode::Shared)], &c.seeds, &[Setting::B]).unwrap();
        let comparison_time = t.elapsed();
        eprintln!("desk: baseline and LEO done in {:.0}s", comparison_time.as_secs_f64());
        let grid = |v| run_grid(&c, &corpus, &[v], &c.seeds, &[Setting::B]).unwrap();
        let max = grid(Variant::leo(Scheme::Max, EncoderMode::Shared));
        let concat = grid(Variant::leo(Scheme::Concat, EncoderMode::Shared));
        let multi_arm = grid(Variant::leo(Scheme::Mean, EncoderMode::MultiArm));
        eprintln!("desk: all variants done in {:.0}s", t.elapsed().as_secs_f64());
        for (name, runs) in [
            ("baseline", &baseline),
            ("mean", &leo),
            ("max", &max),
            ("concat", &concat),
            ("multi_arm", &multi_arm),
        ] {
            for r in runs.iter() {
                for ((split, setting), s) in &r.metrics {
                    eprintln!(
                        "desk: {name:9} seed {} {:10} {} SR {:.3} SPL {:.3} NE {:.2} TL {:.2}",
                        r.seed,
                        split.as_str(),
                        setting.as_str(),
                        s.sr,
                        s.spl,
                        s.ne,
                        s.tl
                    );
                }
            }
        }
        Desk {
            baseline,
            leo,
            max,
            concat,
            multi_arm,
            comparison_time,
        }
    }

    fn summaries(&self) -> Vec<MetricsSummary> {
        [&self.baseline, &self.leo, &self.max, &self.concat, &self.multi_arm]
            .into_iter()
            .flatten()
            .flat_map(|r| r.metrics.values().cloned())
            .collect()
    }

    fn paradigm(&self) -> Outcome {
        let mut wins = 0;
        let mut gaps = Vec::new();
        for (b, l) in self.baseline.iter().zip(&self.leo) {
            let (b, l) = (unseen(b, Setting::A), unseen(l, Setting::B));
            if l.sr > b.sr && l.spl > b.spl {
                wins += 1;
            }
            gaps.push(l.sr - b.sr);
        }
        let gain = mean(gaps.iter().copied());
        let within = self.comparison_time < DESK_BUDGET;
        (
            wins >= 4 && gain >= 0.05 && within,
            format!(
                "LEO (B) beats baseline (A) on unseen SR and SPL in {wins}/{} seeds, mean SR gain {:+.1} points \
                 (per seed {}), SR {:.3} vs {:.3}, SPL {:.3} vs {:.3}, {:.0}s",
                gaps.len(),
                100.0 * gain,
                gaps.iter().map(|g| format!("{:+.1}", 100.0 * g)).collect::<Vec<_>>().join(" "),
                mean(self.leo.iter().map(|r| unseen(r, Setting::B).sr)),
                mean(self.baseline.iter().map(|r| unseen(r, Setting::A).sr)),
                mean(self.leo.iter().map(|r| unseen(r, Setting::B).spl)),
                mean(self.baseline.iter().map(|r| unseen(r, Setting::A).spl)),
                self.comparison_time.as_secs_f64()
            ),
        )
    }

    fn aggregation(&self) -> Outcome {
        let spl = |r: &VariantRun| unseen(r, Setting::B).spl;
        let mut best = 0;
        for ((m, x), c) in self.leo.iter().zip(&self.max).zip(&self.concat) {
            if spl(m) >= spl(x) && spl(m) >= spl(c) {
                best += 1;
            }
        }
        let avg = |runs: &[VariantRun]| mean(runs.iter().map(spl));
        let (m, x, c) = (avg(&self.leo), avg(&self.max), avg(&self.concat));
        (
            best >= 3 && m > x && m > c,
            format!("mean best in {best}/{} seeds; unseen SPL mean {m:.3}, max {x:.3}, concat {c:.3}", self.leo.len()),
        )
    }

    fn encoder(&self) -> Outcome {
        let avg = |runs: &[VariantRun], split| mean(runs.iter().map(|r| r.get(split, Setting::B).spl));
        let unseen_gap = avg(&self.leo, Split::ValUnseen) - avg(&self.multi_arm, Split::ValUnseen);
        let seen_gap = avg(&self.leo, Split::ValSeen) - avg(&self.multi_arm, Split::ValSeen);
        (
            unseen_gap > 0.0 && seen_gap < unseen_gap,
            format!(
                "shared − multi-arm SPL: unseen {:+.3} ({:.3} vs {:.3}), seen {:+.3}",
                unseen_gap,
                avg(&self.leo, Split::ValUnseen),
                avg(&self.multi_arm, Split::ValUnseen),
                seen_gap
            ),
        )
    }
}

fn main() {
    let strict = std::env::var_os("LEO_ACCEPT_STRICT").is_some_and(|v| v == "1");
    let skip_desk = std::env::var_os("LEO_ACCEPT_SKIP_DESK").is_some_and(|v| v == "1");
    let mut report = Report { lines: Vec::new() };
    report.record(1, true, gradients());
    report.record(2, true, entropy());
    report.record(3, true, single_instruction_reduction());
    report.record(4, true, aggregation_algebra());
    report.record(9, true, reproducibility());
    let (smoke_outcome, smoke_summary) = smoke();
    report.record(10, true, smoke_outcome);

    let mut summaries = vec![smoke_summary];
    if skip_desk {
        for n in 5..=7 {
            println!("criterion {n:2}: SKIP — desk runs disabled");
        }
    } else {
        let desk = Desk::run();
        report.record(5, strict, desk.paradigm());
        report.record(6, strict, desk.aggregation());
        report.record(7, strict, desk.encoder());
        summaries.extend(desk.summaries());
    }
    report.record(8, true, metric_correctness(&summaries));

    report.lines.sort_by_key(|l| l.0);
    println!();
    println!("acceptance summary");
    for (n, fatal, pass, _) in &report.lines {
        let note = if !pass && !fatal { " (reported, not fatal)" } else { "" };
        println!("  {n:2} {}{note}", if *pass { "PASS" } else { "FAIL" });
    }
    let failed: Vec<usize> = report.lines.iter().filter(|l| l.1 && !l.2).map(|l| l.0).collect();
    if !failed.is_empty() {
        eprintln!("acceptance failed: {failed:?}");
        std::process::exit(1);
    }
}
