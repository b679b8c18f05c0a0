#![allow(dead_code)]

use propdetect::corpus::EmbeddingSequence;
use propdetect::span_heads::SpanTarget;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Central-difference gradient, written independently of the crate's own
/// checker.
pub fn numeric_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let mut up = x.to_vec();
        let mut down = x.to_vec();
        up[i] += h;
        down[i] -= h;
        out.push((f(&up) - f(&down)) / (2.0 * h));
    }
    out
}

pub fn rel_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = na.max(nb);
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// Contexts whose start token carries `+3·e0`, end token `+3·e1` and whose
/// row 0 carries `+3·e2`; every fourth context has no span.
pub fn planted_contexts(n_contexts: usize, dim: usize, seed: u64) -> Vec<(EmbeddingSequence, SpanTarget)> {
    assert!(dim >= 4);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_contexts)
        .map(|c| {
            let n_tokens = rng.gen_range(4..9);
            let mut rows: Vec<Vec<f64>> = (0..=n_tokens)
                .map(|_| (0..dim).map(|_| rng.gen_range(-0.3..0.3)).collect())
                .collect();
            rows[0][2] += 3.0;
            let target = if c % 4 == 3 {
                SpanTarget::none()
            } else {
                let s = rng.gen_range(1..=n_tokens);
                let e = rng.gen_range(s..=n_tokens);
                rows[s][0] += 3.0;
                rows[e][1] += 3.0;
                rows[0][3] += 3.0;
                SpanTarget::span(s, e)
            };
            (EmbeddingSequence::new(format!("ctx{c}"), dim, rows).unwrap(), target)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Softmax objective oracle

/// `(1/N) Σ w_i · CE_i + ‖W‖² / (2CN)` evaluated directly from the
/// parameter layout `[W row-major | b]`.
pub fn softmax_objective_oracle(
    params: &[f64],
    inputs: &[Vec<f64>],
    targets: &[usize],
    k: usize,
    class_weights: Option<&[f64]>,
    c: Option<f64>,
) -> f64 {
    let d = inputs[0].len();
    let n = inputs.len() as f64;
    let mut total = 0.0;
    for (x, &t) in inputs.iter().zip(targets) {
        let z: Vec<f64> = (0..k)
            .map(|j| params[k * d + j] + (0..d).map(|i| params[j * d + i] * x[i]).sum::<f64>())
            .collect();
        let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        let w = class_weights.map_or(1.0, |cw| cw[t]);
        total += w * (lse - z[t]);
    }
    let mut value = total / n;
    if let Some(c) = c {
        value += params[..k * d].iter().map(|w| w * w).sum::<f64>() / (2.0 * c * n);
    }
    value
}

// ---------------------------------------------------------------------------
// Scorer oracle

use propdetect::corpus::SpanAnnotation;

/// Partial-match precision and recall computed by walking characters.
pub fn char_overlap_oracle(gold: &[SpanAnnotation], pred: &[SpanAnnotation]) -> (f64, f64) {
    let best = |from: &SpanAnnotation, against: &[SpanAnnotation]| -> f64 {
        let mut best = 0.0f64;
        for t in against.iter().filter(|t| t.article_id == from.article_id) {
            let shared = (from.start..from.end).filter(|i| t.start <= *i && *i < t.end).count();
            best = best.max(shared as f64 / (from.end - from.start) as f64);
        }
        best
    };
    let side = |from: &[SpanAnnotation], against: &[SpanAnnotation]| -> f64 {
        if from.is_empty() {
            if against.is_empty() {
                1.0
            } else {
                0.0
            }
        } else {
            from.iter().map(|s| best(s, against)).sum::<f64>() / from.len() as f64
        }
    };
    (side(pred, gold), side(gold, pred))
}

/// Random spans over a few articles; `disjoint` spans never overlap within an
/// article.
pub fn random_spans(rng: &mut ChaCha8Rng, n_articles: usize, max_len: usize, disjoint: bool) -> Vec<SpanAnnotation> {
    let mut out = Vec::new();
    for a in 0..n_articles {
        let id = format!("a{a}");
        let count = rng.gen_range(0..6);
        if disjoint {
            let mut cursor = 0;
            for _ in 0..count {
                let gap = rng.gen_range(0..8);
                let len = rng.gen_range(1..=max_len);
                out.push(SpanAnnotation::new(id.clone(), cursor + gap, cursor + gap + len));
                cursor += gap + len;
            }
        } else {
            for _ in 0..count {
                let s = rng.gen_range(0..60);
                out.push(SpanAnnotation::new(id.clone(), s, s + rng.gen_range(1..=max_len)));
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Routing oracle

use propdetect::corpus::Technique;

/// Resolution written out from the documented rule: take lr if it says
/// Repetition; else take cost_weighted if it says one of the three minority
/// techniques; else take base.
pub fn routing_oracle(base: Technique, cost: Technique, lr: Technique) -> Technique {
    let minority = [
        Technique::WhataboutismStrawMenRedHerring,
        Technique::ThoughtTerminatingCliches,
        Technique::BandwagonReductioAdHitlerum,
    ];
    if lr == Technique::Repetition {
        lr
    } else if minority.contains(&cost) {
        cost
    } else {
        base
    }
}

// ---------------------------------------------------------------------------
// Segmentation oracle

use propdetect::corpus::Article;
use propdetect::segmentation::{split_sentences, Context};

const WORDS: [&str; 12] = [
    "the", "war", "is", "Lies", "people", "we", "never", "forget", "evil", "x1", "don't", "U.S",
];

/// Random article text (sentences, newlines, stray spaces) with random gold
/// spans, some overlapping, touching or crossing sentence boundaries.
pub fn random_article(rng: &mut ChaCha8Rng, id: &str) -> (Article, Vec<SpanAnnotation>) {
    let mut text = String::new();
    for s in 0..rng.gen_range(1..6) {
        if s > 0 {
            text.push_str(if rng.gen_bool(0.2) { "\n" } else { " " });
        }
        if rng.gen_bool(0.1) {
            text.push_str("  ");
        }
        for w in 0..rng.gen_range(1..9) {
            if w > 0 {
                text.push(' ');
            }
            let word = WORDS[rng.gen_range(0..WORDS.len())];
            if w == 0 {
                let mut cs = word.chars();
                let first = cs.next().unwrap().to_uppercase().collect::<String>();
                text.push_str(&first);
                text.push_str(cs.as_str());
            } else {
                text.push_str(word);
            }
            if rng.gen_bool(0.1) {
                text.push(',');
            }
        }
        text.push(['.', '!', '?'][rng.gen_range(0..3)]);
    }
    let article = Article::new(id, text).unwrap();
    let n = article.len();
    let mut spans = Vec::new();
    for _ in 0..rng.gen_range(0..7) {
        let s = rng.gen_range(0..n);
        let e = rng.gen_range(s + 1..=n.min(s + 30));
        spans.push(SpanAnnotation::new(id, s, e));
    }
    if rng.gen_bool(0.3) && !spans.is_empty() {
        // A span touching an existing one.
        let t = spans[0].clone();
        if t.end < n {
            spans.push(SpanAnnotation::new(id, t.end, (t.end + 3).min(n)));
        }
    }
    (article, spans)
}

/// Expected span set: strict-overlap union (transitive closure), then cut at
/// sentence boundaries, dropping pieces that fall between sentences.
pub fn expected_spans(article: &Article, gold: &[SpanAnnotation]) -> Vec<(usize, usize)> {
    let mut groups: Vec<(usize, usize)> = gold.iter().map(|s| (s.start, s.end)).collect();
    loop {
        let mut changed = false;
        'outer: for i in 0..groups.len() {
            for j in i + 1..groups.len() {
                let (a, b) = (groups[i], groups[j]);
                if a.0 < b.1 && b.0 < a.1 {
                    groups[i] = (a.0.min(b.0), a.1.max(b.1));
                    groups.remove(j);
                    changed = true;
                    break 'outer;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut out = Vec::new();
    for (s, e) in groups {
        for sent in split_sentences(article) {
            let (a, b) = (s.max(sent.start), e.min(sent.end));
            if a < b {
                out.push((a, b));
            }
        }
    }
    out.sort_unstable();
    out
}

/// Checks the mini-context invariants. Returns a description of the first
/// violation.
pub fn check_mini(article: &Article, gold: &[SpanAnnotation], contexts: &[Context]) -> Result<(), String> {
    let expected = expected_spans(article, gold);
    for sent in split_sentences(article) {
        let mut inside: Vec<&Context> = contexts
            .iter()
            .filter(|c| sent.start <= c.start && c.end <= sent.end)
            .collect();
        inside.sort_by_key(|c| c.start);
        let mut cursor = sent.start;
        for c in &inside {
            if c.start != cursor || c.end <= c.start {
                return Err(format!(
                    "sentence {:?} not partitioned at {cursor}",
                    (sent.start, sent.end)
                ));
            }
            cursor = c.end;
        }
        if cursor != sent.end {
            return Err(format!("sentence {:?} not covered", (sent.start, sent.end)));
        }
    }
    let n_sentence_contexts: usize = split_sentences(article)
        .iter()
        .map(|s| contexts.iter().filter(|c| s.start <= c.start && c.end <= s.end).count())
        .sum();
    if n_sentence_contexts != contexts.len() {
        return Err("context outside every sentence".into());
    }
    let mut found: Vec<(usize, usize)> = contexts
        .iter()
        .filter_map(|c| c.gold_span.map(|(s, e)| (c.start + s, c.start + e)))
        .collect();
    found.sort_unstable();
    if found != expected {
        return Err(format!("gold spans {found:?} != expected {expected:?}"));
    }
    for c in contexts {
        if let Some((s, e)) = c.gold_span {
            if s >= e || e > c.end - c.start {
                return Err(format!("gold span outside context {}", c.context_id));
            }
        }
    }
    Ok(())
}

pub fn retained(contexts: &[Context]) -> usize {
    contexts.iter().filter(|c| c.gold_span.is_some()).count()
}

// ---------------------------------------------------------------------------
// Imbalanced data

use propdetect::classifiers::{predict, train, LossMode, TrainConfig};

/// Box-Muller standard normal.
pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// 95/5 two-cluster data in 2-D; class 1 is the minority.
pub fn two_clusters(rng: &mut ChaCha8Rng, n: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let n_min = n / 20;
    (0..n)
        .map(|i| {
            let y = usize::from(i < n_min);
            let c = if y == 1 { 1.5 } else { 0.0 };
            (vec![c + gaussian(rng), c + gaussian(rng)], y)
        })
        .unzip()
}

/// Minority recall on a fresh sample after training with `mode`.
pub fn minority_recall(mode: LossMode, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (xs, ys) = two_clusters(&mut rng, 400);
    let (tx, ty) = two_clusters(&mut rng, 2000);
    let config = TrainConfig {
        loss_mode: mode,
        max_iters: 300,
        seed,
        ..TrainConfig::default()
    };
    let model = train(&xs, &ys, 2, &config).unwrap().model;
    let minority: Vec<&Vec<f64>> = tx.iter().zip(&ty).filter(|(_, &y)| y == 1).map(|(x, _)| x).collect();
    let hits = minority.iter().filter(|x| predict(&model, x).unwrap().0 == 1).count();
    hits as f64 / minority.len() as f64
}

// ---------------------------------------------------------------------------
// End-to-end pipeline

use std::path::{Path, PathBuf};

pub fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

fn cli(args: &[&str]) {
    let mut argv = vec!["propdetect"];
    argv.extend_from_slice(args);
    let code = propdetect::cli::run(argv.iter().copied());
    assert_eq!(code, 0, "propdetect {}", args.join(" "));
}

/// Runs every subcommand on the fixture corpus, writing into `dir`. Returns
/// the output files, sorted by name.
pub fn run_pipeline(dir: &Path, seed: u64) -> Vec<(String, Vec<u8>)> {
    let corpus = fixture("corpus");
    let c = corpus.to_str().unwrap();
    let p = |name: &str| dir.join(name).to_str().unwrap().to_string();
    std::fs::write(
        dir.join("config.txt"),
        "max_seq_len=48\ndeep_dim=6\nsent_dim=6\nsi_max_iters=25\ntc_max_iters=60\nembed_dim=8\n",
    )
    .unwrap();
    let config = p("config.txt");
    let seed = seed.to_string();
    let si_gold = format!("{c}/si_labels.tsv");
    let tc_gold = format!("{c}/tc_labels.tsv");
    let lexicon = fixture("lexicon.tsv");
    let lexicon = lexicon.to_str().unwrap();

    cli(&[
        "ingest",
        "--articles",
        c,
        "--si-labels",
        &si_gold,
        "--tc-labels",
        &tc_gold,
        "--out",
        &p("ingest.tsv"),
    ]);
    for strategy in ["mini", "sentential"] {
        let ctx = p(&format!("{strategy}_contexts.tsv"));
        let emb = p(&format!("{strategy}_emb.txt"));
        let al = p(&format!("{strategy}_align.tsv"));
        let model = p(&format!("{strategy}_si.ckpt"));
        let pred = p(&format!("{strategy}_si_pred.tsv"));
        cli(&[
            "segment",
            "--articles",
            c,
            "--si-labels",
            &si_gold,
            "--strategy",
            strategy,
            "--out",
            &ctx,
        ]);
        cli(&[
            "fake-embed",
            "--articles",
            c,
            "--contexts",
            &ctx,
            "--config",
            &config,
            "--seed",
            &seed,
            "--out",
            &emb,
            "--alignments",
            &al,
        ]);
        cli(&[
            "train-si",
            "--articles",
            c,
            "--contexts",
            &ctx,
            "--embeddings",
            &emb,
            "--alignments",
            &al,
            "--config",
            &config,
            "--seed",
            &seed,
            "--variant",
            "deep_sep",
            "--si-weight",
            "2",
            "--alphas",
            "0.25,0.5,0.5",
            "--out",
            &model,
            "--log",
            &p(&format!("{strategy}_si_log.csv")),
        ]);
        let mut args = vec![
            "predict-si",
            "--articles",
            c,
            "--contexts",
            &ctx,
            "--embeddings",
            &emb,
            "--alignments",
            &al,
            "--config",
            &config,
            "--model",
            &model,
            "--out",
            &pred,
        ];
        let mini_pred = p("mini_si_pred.tsv");
        if strategy == "sentential" {
            args.extend_from_slice(&["--union", &mini_pred]);
        }
        cli(&args);
        cli(&[
            "score-si",
            "--gold",
            &si_gold,
            "--pred",
            &pred,
            "--out",
            &p(&format!("{strategy}_si_score.txt")),
        ]);
    }
    cli(&[
        "segment",
        "--articles",
        c,
        "--strategy",
        "fragment",
        "--fragments",
        &tc_gold,
        "--out",
        &p("fragments.tsv"),
    ]);
    cli(&[
        "fake-embed",
        "--articles",
        c,
        "--contexts",
        &p("fragments.tsv"),
        "--config",
        &config,
        "--seed",
        &seed,
        "--out",
        &p("fragment_emb.txt"),
        "--alignments",
        &p("fragment_align.tsv"),
    ]);
    cli(&[
        "train-tc",
        "--articles",
        c,
        "--tc-labels",
        &tc_gold,
        "--embeddings",
        &p("fragment_emb.txt"),
        "--lexicon",
        lexicon,
        "--loss",
        "cost_weighted",
        "--config",
        &config,
        "--seed",
        &seed,
        "--out",
        &p("tc_model"),
        "--dump-features",
        &p("features.tsv"),
    ]);
    let fragments = format!("{c}/fragments.tsv");
    cli(&[
        "predict-tc",
        "--articles",
        c,
        "--fragments",
        &fragments,
        "--embeddings",
        &p("fragment_emb.txt"),
        "--model-dir",
        &p("tc_model"),
        "--lexicon",
        lexicon,
        "--route",
        "default",
        "--submodel-out",
        &p("submodels"),
        "--out",
        &p("tc_pred.tsv"),
    ]);
    cli(&[
        "score-tc",
        "--gold",
        &tc_gold,
        "--pred",
        &p("tc_pred.tsv"),
        "--out",
        &p("tc_score.txt"),
    ]);
    cli(&[
        "score-tc",
        "--gold",
        &tc_gold,
        "--pred",
        &p("tc_pred.tsv"),
        "--format",
        "jsonl",
        "--out",
        &p("tc_score.jsonl"),
    ]);

    let mut files = Vec::new();
    collect(dir, dir, &mut files);
    files.sort();
    files
}

fn collect(root: &Path, dir: &Path, out: &mut Vec<(String, Vec<u8>)>) {
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            collect(root, &path, out);
        } else {
            let name = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
            out.push((name, std::fs::read(&path).unwrap()));
        }
    }
}

// ---------------------------------------------------------------------------
// Gradient suites

use propdetect::classifiers::{balanced_class_weights, ClassWeights, SoftmaxObjective};
use propdetect::optim::Objective;
use propdetect::span_heads::{HeadConfig, SpanObjective, Variant};

pub struct SoftmaxInstance {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<usize>,
    pub k: usize,
    pub params: Vec<f64>,
}

pub fn softmax_instance(rng: &mut ChaCha8Rng, sparse: bool) -> SoftmaxInstance {
    let k = rng.gen_range(2..6);
    let d = rng.gen_range(1..7);
    let n = rng.gen_range(1..8);
    let inputs = (0..n)
        .map(|_| {
            (0..d)
                .map(|_| {
                    if sparse && rng.gen_bool(0.5) {
                        0.0
                    } else {
                        rng.gen_range(-2.0..2.0)
                    }
                })
                .collect()
        })
        .collect();
    let targets = (0..n).map(|_| rng.gen_range(0..k)).collect();
    let params = (0..k * (d + 1)).map(|_| rng.gen_range(-1.0..1.0)).collect();
    SoftmaxInstance {
        inputs,
        targets,
        k,
        params,
    }
}

fn class_counts(targets: &[usize], k: usize) -> Vec<u64> {
    let mut c = vec![0u64; k];
    for &t in targets {
        c[t] += 1;
    }
    c
}

/// Worst relative gradient error of the regularised, balanced LR objective
/// over `n` random instances. Also checks the objective value against the
/// oracle.
pub fn lr_gradient_worst(n: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let inst = softmax_instance(&mut rng, true);
        let weights = balanced_class_weights(&class_counts(&inst.targets, inst.k));
        let c = rng.gen_range(0.1..10.0);
        let obj = SoftmaxObjective::new(&inst.inputs, &inst.targets, inst.k, Some(&weights), Some(c)).unwrap();
        let (value, analytic) = obj.value_and_gradient(&inst.params);
        let oracle =
            |p: &[f64]| softmax_objective_oracle(p, &inst.inputs, &inst.targets, inst.k, Some(&weights.0), Some(c));
        assert!((value - oracle(&inst.params)).abs() < 1e-10, "objective value");
        worst = worst.max(rel_error(&analytic, &numeric_gradient(oracle, &inst.params, 1e-5)));
    }
    worst
}

/// Same for the pooled-embedding classifier, alternating plain and
/// cost-weighted losses.
pub fn pooled_gradient_worst(n: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let inst = softmax_instance(&mut rng, false);
        let weights = (i % 2 == 1).then(|| ClassWeights::from_observed_counts(&class_counts(&inst.targets, inst.k)));
        let obj = SoftmaxObjective::new(&inst.inputs, &inst.targets, inst.k, weights.as_ref(), None).unwrap();
        let (value, analytic) = obj.value_and_gradient(&inst.params);
        let w = weights.as_ref().map(|w| w.0.as_slice());
        let oracle = |p: &[f64]| softmax_objective_oracle(p, &inst.inputs, &inst.targets, inst.k, w, None);
        assert!((value - oracle(&inst.params)).abs() < 1e-10, "objective value");
        worst = worst.max(rel_error(&analytic, &numeric_gradient(oracle, &inst.params, 1e-5)));
    }
    worst
}

pub fn small_head_config(variant: Variant) -> HeadConfig {
    HeadConfig {
        variant,
        embed_dim: 4,
        deep_dim: 3,
        sent_dim: 2,
        class_weight: 2.0,
        ..HeadConfig::default()
    }
}

/// Worst relative gradient error of the span-head loss for one variant over
/// `n` random single-context instances.
pub fn span_gradient_worst(variant: Variant, n: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let config = small_head_config(variant);
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let len = rng.gen_range(1..5);
        let rows = (0..=len)
            .map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let seq = EmbeddingSequence::new("c", 4, rows).unwrap();
        let target = if rng.gen_bool(0.3) {
            SpanTarget::none()
        } else {
            let s = rng.gen_range(1..=len);
            SpanTarget::span(s, rng.gen_range(s..=len))
        };
        let data = vec![(seq, target)];
        let objective = SpanObjective::new(&config, &data).unwrap();
        let params: Vec<f64> = (0..objective.dim()).map(|_| rng.gen_range(-0.8..0.8)).collect();
        let (_, analytic) = objective.value_and_gradient(&params);
        let numeric = numeric_gradient(|p| objective.value_and_gradient(p).0, &params, 1e-5);
        worst = worst.max(rel_error(&analytic, &numeric));
    }
    worst
}
