//! Command-line pipeline: ingest, segment, embed (fake encoder), train,
//! predict and score.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::checkpoint::Checkpoint;
use crate::classifiers::{
    balanced_class_weights, pool_embedding, predict, train, ClassWeights, LinearClassifier, LossMode, TrainConfig,
};
use crate::corpus::{
    fragment_id, index_articles, load_articles_from, load_embeddings, load_emotion_lexicon, load_fragment_list,
    load_si_labels, load_tc_labels, load_tc_records, write_si_labels, write_tc_labels, Articles, EmbeddingSequence,
    EmotionLexicon, SpanAnnotation, Technique, TechniqueLabeledFragment,
};
use crate::embed::FakeEncoder;
use crate::error::{Error, Result};
use crate::eval::{align_tc, score_si, score_tc, si_json_lines, si_report, tc_json_lines, tc_report};
use crate::features::{build_feature_vector, dump_tsv, fit_tfidf, FragmentInput, TfidfModel, WordLists};
use crate::hybrid::{correct, route, union_si_predictions, PosSidecar, RoutingTable, Submodel, SubmodelPredictions};
use crate::segmentation::{
    merge_by_article, parse_alignments, parse_contexts, segment_article, write_alignments, write_contexts, Context,
    Strategy, TokenAlignment,
};
use crate::span_heads::{decode_span, token_span_to_char, train_heads, HeadConfig, SpanHeadModel, SpanTarget, Variant};

/// Hyperparameters readable from a `key=value` config file. Command-line
/// flags take precedence.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    /// Encoder rows per context, including row 0.
    pub max_seq_len: usize,
    pub learning_rate: f64,
    /// Accepted for compatibility with encoder fine-tuning configs; training
    /// here is full-batch.
    pub batch_size: usize,
    pub si_max_iters: usize,
    pub tc_max_iters: usize,
    pub tolerance: f64,
    pub deep_dim: usize,
    pub sent_dim: usize,
    pub si_weight: f64,
    pub alphas: [f64; 3],
    pub lr_c: f64,
    pub seed: u64,
    pub variant: Variant,
    pub strategy: Strategy,
    pub loss: LossMode,
    pub embed_dim: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            max_seq_len: 128,
            learning_rate: 1e-5,
            batch_size: 4,
            si_max_iters: 200,
            tc_max_iters: 500,
            tolerance: 1e-6,
            deep_dim: 64,
            sent_dim: 64,
            si_weight: 2.0,
            alphas: [0.25, 0.5, 0.5],
            lr_c: 1.0,
            seed: 0,
            variant: Variant::DeepSep,
            strategy: Strategy::Mini,
            loss: LossMode::CostWeighted,
            embed_dim: 768,
        }
    }
}

fn parse_alphas(s: &str) -> Result<[f64; 3]> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Config(format!("alphas {s:?} must be three comma-separated numbers")))?;
    <[f64; 3]>::try_from(parts)
        .map_err(|_| Error::Config(format!("alphas {s:?} must be three comma-separated numbers")))
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value {value:?} for {key}")))
}

impl Settings {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "max_seq_len" => self.max_seq_len = parse_value(key, v)?,
            "learning_rate" => self.learning_rate = parse_value(key, v)?,
            "batch_size" => self.batch_size = parse_value(key, v)?,
            "si_max_iters" => self.si_max_iters = parse_value(key, v)?,
            "tc_max_iters" => self.tc_max_iters = parse_value(key, v)?,
            "tolerance" => self.tolerance = parse_value(key, v)?,
            "deep_dim" => self.deep_dim = parse_value(key, v)?,
            "sent_dim" => self.sent_dim = parse_value(key, v)?,
            "si_weight" => self.si_weight = parse_value(key, v)?,
            "alphas" => self.alphas = parse_alphas(v)?,
            "lr_c" => self.lr_c = parse_value(key, v)?,
            "seed" => self.seed = parse_value(key, v)?,
            "variant" => self.variant = v.parse()?,
            "strategy" => self.strategy = v.parse()?,
            "loss" => self.loss = v.parse()?,
            "embed_dim" => self.embed_dim = parse_value(key, v)?,
            other => return Err(Error::Config(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    pub fn parse(content: &str, origin: &str) -> Result<Self> {
        let mut s = Settings::default();
        for (i, line) in content.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("{origin}:{}: expected key=value", i + 1)))?;
            s.set(k, v)
                .map_err(|e| Error::Config(format!("{origin}:{}: {e}", i + 1)))?;
        }
        if s.max_seq_len < 2 {
            return Err(Error::Config("max_seq_len must be at least 2".into()));
        }
        Ok(s)
    }

    /// Token rows per context after dropping row 0.
    pub fn max_tokens(&self) -> usize {
        self.max_seq_len - 1
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "propdetect",
    version,
    about = "Propaganda span identification and technique classification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// key=value hyperparameter file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug, Clone)]
struct Corpus {
    /// Directory of article{id}.txt files; repeatable.
    #[arg(long = "articles", required = true)]
    articles: Vec<PathBuf>,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum CliStrategy {
    Mini,
    Sentential,
    Fragment,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
#[value(rename_all = "snake_case")]
enum CliVariant {
    Base,
    Sent,
    DeepSep,
    DeepCombine,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
#[value(rename_all = "snake_case")]
enum CliLoss {
    Plain,
    CostWeighted,
}

#[derive(Copy, Clone, Debug, Default, ValueEnum)]
enum Format {
    #[default]
    Text,
    Jsonl,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate a corpus and print a summary with technique counts and weights.
    Ingest {
        #[command(flatten)]
        corpus: Corpus,
        #[arg(long)]
        si_labels: Option<PathBuf>,
        #[arg(long)]
        tc_labels: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the contexts file.
    Segment {
        #[command(flatten)]
        corpus: Corpus,
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        strategy: Option<CliStrategy>,
        /// Gold SI spans (mini and sentential strategies).
        #[arg(long)]
        si_labels: Option<PathBuf>,
        /// Fragments for the fragment strategy (TC labels or a 3-column list).
        #[arg(long)]
        fragments: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Embed a contexts file with the deterministic hash encoder.
    FakeEmbed {
        #[command(flatten)]
        corpus: Corpus,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        contexts: PathBuf,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        alignments: PathBuf,
    },
    /// Train span heads on embedded contexts.
    TrainSi {
        #[command(flatten)]
        corpus: Corpus,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        contexts: PathBuf,
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        alignments: PathBuf,
        #[arg(long, value_enum)]
        variant: Option<CliVariant>,
        #[arg(long)]
        si_weight: Option<f64>,
        /// Sentence, start and end loss weights.
        #[arg(long)]
        alphas: Option<String>,
        #[arg(long)]
        out: PathBuf,
        /// Training log CSV.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Predict spans with a trained span-head model.
    PredictSi {
        #[command(flatten)]
        corpus: Corpus,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        contexts: PathBuf,
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        alignments: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Other prediction files to union with this model's output; repeatable.
        #[arg(long)]
        union: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the feature-based LR and the two pooled-embedding classifiers.
    TrainTc {
        #[command(flatten)]
        corpus: Corpus,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        tc_labels: PathBuf,
        /// Embeddings of fragment contexts.
        #[arg(long)]
        embeddings: PathBuf,
        /// Emotion lexicon (word, score, dimension); emotion features are zero without it.
        #[arg(long)]
        lexicon: Option<PathBuf>,
        #[arg(long)]
        wordlists: Option<PathBuf>,
        /// Loss of the specialist pooled classifier.
        #[arg(long, value_enum)]
        loss: Option<CliLoss>,
        #[arg(long)]
        dump_features: Option<PathBuf>,
        /// Output model directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Classify fragments with the routed hybrid.
    PredictTc {
        #[command(flatten)]
        corpus: Corpus,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        fragments: PathBuf,
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        model_dir: PathBuf,
        #[arg(long)]
        lexicon: Option<PathBuf>,
        #[arg(long)]
        wordlists: Option<PathBuf>,
        /// default, base, cost_weighted, lr, or a technique=submodel file.
        #[arg(long, default_value = "default")]
        route: String,
        #[arg(long)]
        no_correction: bool,
        /// fragment_id<TAB>tags file from an external tagger.
        #[arg(long)]
        pos_sidecar: Option<PathBuf>,
        /// Directory for each submodel's raw predictions.
        #[arg(long)]
        submodel_out: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Partial-match span scoring.
    ScoreSi {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Micro-F1 and per-technique F1.
    ScoreTc {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `argv` (program name first) and runs the subcommand. Returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn settings(common: &Common) -> Result<Settings> {
    let mut s = match &common.config {
        Some(path) => {
            let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            Settings::parse(&content, &path.display().to_string())?
        }
        None => Settings::default(),
    };
    if let Some(seed) = common.seed {
        s.seed = seed;
    }
    Ok(s)
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, content).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn emit(out: Option<&Path>, content: &str) -> Result<()> {
    match out {
        Some(path) => write_file(path, content),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn load_corpus(corpus: &Corpus) -> Result<Articles> {
    Ok(index_articles(load_articles_from(&corpus.articles)?))
}

fn load_contexts(path: &Path, articles: &Articles) -> Result<Vec<Context>> {
    parse_contexts(&read_file(path)?, &path.display().to_string(), articles)
}

fn load_lexicon(path: Option<&Path>) -> Result<EmotionLexicon> {
    match path {
        Some(p) => load_emotion_lexicon(p),
        None => {
            log::warn!("no emotion lexicon given; emotion features are zero");
            Ok(EmotionLexicon::default())
        }
    }
}

fn load_wordlists(path: Option<&Path>) -> Result<WordLists> {
    match path {
        Some(p) => WordLists::parse(&read_file(p)?),
        None => Ok(WordLists::default()),
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Ingest {
            corpus,
            si_labels,
            tc_labels,
            out,
        } => cmd_ingest(&corpus, si_labels.as_deref(), tc_labels.as_deref(), out.as_deref()),
        Command::Segment {
            corpus,
            common,
            strategy,
            si_labels,
            fragments,
            out,
        } => {
            let mut s = settings(&common)?;
            if let Some(st) = strategy {
                s.strategy = match st {
                    CliStrategy::Mini => Strategy::Mini,
                    CliStrategy::Sentential => Strategy::Sentential,
                    CliStrategy::Fragment => Strategy::Fragment,
                };
            }
            cmd_segment(&corpus, &s, si_labels.as_deref(), fragments.as_deref(), &out)
        }
        Command::FakeEmbed {
            corpus,
            common,
            contexts,
            dim,
            out,
            alignments,
        } => {
            let mut s = settings(&common)?;
            if let Some(d) = dim {
                s.embed_dim = d;
            }
            cmd_fake_embed(&corpus, &s, &contexts, &out, &alignments)
        }
        Command::TrainSi {
            corpus,
            common,
            contexts,
            embeddings,
            alignments,
            variant,
            si_weight,
            alphas,
            out,
            log,
        } => {
            let mut s = settings(&common)?;
            if let Some(v) = variant {
                s.variant = match v {
                    CliVariant::Base => Variant::Base,
                    CliVariant::Sent => Variant::Sent,
                    CliVariant::DeepSep => Variant::DeepSep,
                    CliVariant::DeepCombine => Variant::DeepCombine,
                };
            }
            if let Some(w) = si_weight {
                s.si_weight = w;
            }
            if let Some(a) = alphas {
                s.alphas = parse_alphas(&a)?;
            }
            cmd_train_si(&corpus, &s, &contexts, &embeddings, &alignments, &out, log.as_deref())
        }
        Command::PredictSi {
            corpus,
            common,
            contexts,
            embeddings,
            alignments,
            model,
            union,
            out,
        } => {
            let s = settings(&common)?;
            cmd_predict_si(&corpus, &s, &contexts, &embeddings, &alignments, &model, &union, &out)
        }
        Command::TrainTc {
            corpus,
            common,
            tc_labels,
            embeddings,
            lexicon,
            wordlists,
            loss,
            dump_features,
            out,
        } => {
            let mut s = settings(&common)?;
            if let Some(l) = loss {
                s.loss = match l {
                    CliLoss::Plain => LossMode::Plain,
                    CliLoss::CostWeighted => LossMode::CostWeighted,
                };
            }
            cmd_train_tc(TrainTcArgs {
                corpus: &corpus,
                settings: &s,
                tc_labels: &tc_labels,
                embeddings: &embeddings,
                lexicon: lexicon.as_deref(),
                wordlists: wordlists.as_deref(),
                dump_features: dump_features.as_deref(),
                out: &out,
            })
        }
        Command::PredictTc {
            corpus,
            common,
            fragments,
            embeddings,
            model_dir,
            lexicon,
            wordlists,
            route,
            no_correction,
            pos_sidecar,
            submodel_out,
            out,
        } => {
            settings(&common)?;
            cmd_predict_tc(PredictTcArgs {
                corpus: &corpus,
                fragments: &fragments,
                embeddings: &embeddings,
                model_dir: &model_dir,
                lexicon: lexicon.as_deref(),
                wordlists: wordlists.as_deref(),
                route: &route,
                correction: !no_correction,
                pos_sidecar: pos_sidecar.as_deref(),
                submodel_out: submodel_out.as_deref(),
                out: &out,
            })
        }
        Command::ScoreSi {
            gold,
            pred,
            format,
            out,
        } => {
            let g = load_si_labels(&gold, None)?;
            let p = load_si_labels(&pred, None)?;
            let score = score_si(&g, &p)?;
            let text = match format {
                Format::Text => si_report(&score),
                Format::Jsonl => si_json_lines(&score),
            };
            emit(out.as_deref(), &text)
        }
        Command::ScoreTc {
            gold,
            pred,
            format,
            out,
        } => {
            let g = load_tc_records(&gold)?;
            let p = load_tc_records(&pred)?;
            let (gl, pl) = align_tc(&g, &p)?;
            let score = score_tc(&gl, &pl)?;
            let text = match format {
                Format::Text => tc_report(&score),
                Format::Jsonl => tc_json_lines(&score),
            };
            emit(out.as_deref(), &text)
        }
    }
}

fn cmd_ingest(corpus: &Corpus, si: Option<&Path>, tc: Option<&Path>, out: Option<&Path>) -> Result<()> {
    let articles = load_corpus(corpus)?;
    let chars: usize = articles.values().map(|a| a.len()).sum();
    let mut text = format!("articles\t{}\nchars\t{chars}\n", articles.len());
    if let Some(path) = si {
        let spans = load_si_labels(path, Some(&articles))?;
        text.push_str(&format!(
            "si_spans\t{}\nsi_spans_merged\t{}\n",
            spans.len(),
            merge_by_article(&spans).len()
        ));
    }
    if let Some(path) = tc {
        let fragments = load_tc_labels(path, &articles)?;
        let mut counts = [0u64; Technique::COUNT];
        for f in &fragments {
            counts[f.technique.index()] += 1;
        }
        let weights = ClassWeights::from_observed_counts(&counts);
        text.push_str(&format!("tc_fragments\t{}\n", fragments.len()));
        for t in Technique::ALL {
            text.push_str(&format!(
                "technique\t{t}\t{}\t{:?}\n",
                counts[t.index()],
                weights.get(t.index())
            ));
        }
    }
    emit(out, &text)
}

fn cmd_segment(
    corpus: &Corpus,
    settings: &Settings,
    si: Option<&Path>,
    fragments: Option<&Path>,
    out: &Path,
) -> Result<()> {
    let articles = load_corpus(corpus)?;
    let mut contexts = Vec::new();
    if settings.strategy == Strategy::Fragment {
        let path = fragments.ok_or_else(|| Error::Invalid("the fragment strategy needs --fragments".into()))?;
        let mut seen = std::collections::BTreeSet::new();
        for span in load_fragment_list(path, &articles)? {
            let id = fragment_id(&span.article_id, span.start, span.end);
            if seen.insert(id) {
                let article = &articles[&span.article_id];
                contexts.push(Context::new(article, span.start, span.end, None, Strategy::Fragment));
            }
        }
    } else {
        let gold = match si {
            Some(p) => load_si_labels(p, Some(&articles))?,
            None => Vec::new(),
        };
        let mut by_article: BTreeMap<&str, Vec<SpanAnnotation>> = BTreeMap::new();
        for g in &gold {
            by_article.entry(g.article_id.as_str()).or_default().push(g.clone());
        }
        for (id, article) in &articles {
            let spans = by_article.get(id.as_str()).map(Vec::as_slice).unwrap_or(&[]);
            contexts.extend(segment_article(article, spans, settings.strategy)?);
        }
    }
    log::info!("{} contexts", contexts.len());
    write_file(out, &write_contexts(&contexts))
}

fn cmd_fake_embed(corpus: &Corpus, settings: &Settings, contexts: &Path, out: &Path, aligns: &Path) -> Result<()> {
    let articles = load_corpus(corpus)?;
    let contexts = load_contexts(contexts, &articles)?;
    let mut encoder = FakeEncoder::new(settings.embed_dim, settings.seed)?;
    encoder.max_rows = settings.max_seq_len;
    let (seqs, alignments) = encoder.encode_all(&contexts)?;
    write_file(out, &crate::corpus::write_embeddings(settings.embed_dim, &seqs))?;
    write_file(aligns, &write_alignments(&alignments))
}

/// Embedding and alignment of one context, cut to the configured length.
fn context_inputs(
    context: &Context,
    embeddings: &BTreeMap<String, EmbeddingSequence>,
    alignments: &BTreeMap<String, TokenAlignment>,
    max_tokens: usize,
) -> Result<(EmbeddingSequence, TokenAlignment)> {
    let seq = embeddings
        .get(&context.context_id)
        .ok_or_else(|| Error::Invalid(format!("no embedding for context {}", context.context_id)))?;
    let alignment = alignments
        .get(&context.context_id)
        .cloned()
        .unwrap_or_else(|| TokenAlignment {
            context_id: context.context_id.clone(),
            token_spans: Vec::new(),
        });
    if alignment.n_tokens() != seq.n_tokens() {
        return Err(Error::DimMismatch {
            expected: seq.n_tokens(),
            actual: alignment.n_tokens(),
            context: format!("alignment tokens for {}", context.context_id),
        });
    }
    if seq.n_tokens() > max_tokens {
        log::warn!(
            "{}: {} tokens truncated to {max_tokens}",
            context.context_id,
            seq.n_tokens()
        );
    }
    Ok((seq.truncated(max_tokens), alignment.truncated(max_tokens)))
}

fn load_alignment_file(path: &Path) -> Result<BTreeMap<String, TokenAlignment>> {
    parse_alignments(&read_file(path)?, &path.display().to_string())
}

fn cmd_train_si(
    corpus: &Corpus,
    settings: &Settings,
    contexts: &Path,
    embeddings: &Path,
    alignments: &Path,
    out: &Path,
    log_path: Option<&Path>,
) -> Result<()> {
    let articles = load_corpus(corpus)?;
    let contexts = load_contexts(contexts, &articles)?;
    let embeddings = load_embeddings(embeddings)?;
    let alignments = load_alignment_file(alignments)?;
    let max_tokens = settings.max_tokens();
    let mut data = Vec::with_capacity(contexts.len());
    for c in &contexts {
        let (seq, al) = context_inputs(c, &embeddings, &alignments, max_tokens)?;
        let target = match SpanTarget::from_gold(&al, c.gold_span, max_tokens) {
            Ok(t) => t,
            Err(e) => {
                log::warn!("{}: gold span dropped ({e})", c.context_id);
                SpanTarget::none()
            }
        };
        data.push((seq, target));
    }
    let embed_dim = data
        .first()
        .map(|(s, _)| s.dim())
        .ok_or_else(|| Error::Invalid("no training contexts".into()))?;
    let config = HeadConfig {
        variant: settings.variant,
        embed_dim,
        deep_dim: settings.deep_dim,
        sent_dim: settings.sent_dim,
        class_weight: settings.si_weight,
        alphas: settings.alphas,
        seed: settings.seed,
        learning_rate: settings.learning_rate,
        max_iters: settings.si_max_iters,
        tolerance: settings.tolerance,
    };
    let trained = train_heads(&data, &config)?;
    log::info!(
        "span heads: {} iterations, final loss {:.6}",
        trained.report.history.len(),
        trained.report.final_loss()
    );
    let mut ckpt = trained.model.to_checkpoint();
    ckpt.set_meta("max_seq_len", settings.max_seq_len);
    ckpt.set_meta("si_weight", format!("{:?}", settings.si_weight));
    ckpt.set_meta(
        "alphas",
        settings
            .alphas
            .iter()
            .map(|a| format!("{a:?}"))
            .collect::<Vec<_>>()
            .join(","),
    );
    ckpt.save(out)?;
    if let Some(p) = log_path {
        write_file(p, &trained.report.log_csv())?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_predict_si(
    corpus: &Corpus,
    settings: &Settings,
    contexts: &Path,
    embeddings: &Path,
    alignments: &Path,
    model: &Path,
    union: &[PathBuf],
    out: &Path,
) -> Result<()> {
    let articles = load_corpus(corpus)?;
    let contexts = load_contexts(contexts, &articles)?;
    let embeddings = load_embeddings(embeddings)?;
    let alignments = load_alignment_file(alignments)?;
    let model = SpanHeadModel::from_checkpoint(&Checkpoint::load(model)?)?;
    let mut spans = Vec::new();
    for c in &contexts {
        let (seq, al) = context_inputs(c, &embeddings, &alignments, settings.max_tokens())?;
        let decoded = decode_span(&model.forward(&seq)?);
        spans.extend(decoded.spans.iter().map(|&(s, e)| token_span_to_char(&al, c, s, e)));
    }
    let mut sets = vec![merge_by_article(&spans)];
    for path in union {
        sets.push(load_si_labels(path, Some(&articles))?);
    }
    write_file(out, &write_si_labels(&union_si_predictions(&sets)))
}

struct TrainTcArgs<'a> {
    corpus: &'a Corpus,
    settings: &'a Settings,
    tc_labels: &'a Path,
    embeddings: &'a Path,
    lexicon: Option<&'a Path>,
    wordlists: Option<&'a Path>,
    dump_features: Option<&'a Path>,
    out: &'a Path,
}

const LR_FILE: &str = "lr.ckpt";
const BASE_FILE: &str = "base.ckpt";
const COST_FILE: &str = "cost_weighted.ckpt";
const TFIDF_FILE: &str = "tfidf.txt";

fn pooled_inputs<'a>(
    ids: impl Iterator<Item = &'a str>,
    embeddings: &BTreeMap<String, EmbeddingSequence>,
) -> Result<Vec<Vec<f64>>> {
    ids.map(|id| {
        embeddings
            .get(id)
            .map(pool_embedding)
            .ok_or_else(|| Error::Invalid(format!("no embedding for fragment {id}")))
    })
    .collect()
}

fn lr_inputs(
    spans: &[(&str, usize, usize)],
    articles: &Articles,
    tfidf: &TfidfModel,
    lexicon: &EmotionLexicon,
    words: &WordLists,
) -> Vec<crate::features::FeatureVector> {
    spans
        .iter()
        .map(|&(article_id, start, end)| {
            let article = &articles[article_id];
            let input = FragmentInput {
                fragment: article.slice(start, end),
                article_text: article.text(),
                start,
                end,
            };
            build_feature_vector(&input, tfidf, lexicon, words)
        })
        .collect()
}

fn cmd_train_tc(args: TrainTcArgs<'_>) -> Result<()> {
    let s = args.settings;
    let articles = load_corpus(args.corpus)?;
    let fragments: Vec<TechniqueLabeledFragment> = load_tc_labels(args.tc_labels, &articles)?;
    if fragments.is_empty() {
        return Err(Error::Invalid("no training fragments".into()));
    }
    let embeddings = load_embeddings(args.embeddings)?;
    let lexicon = load_lexicon(args.lexicon)?;
    let words = load_wordlists(args.wordlists)?;
    let targets: Vec<usize> = fragments.iter().map(|f| f.technique.index()).collect();
    let mut counts = [0u64; Technique::COUNT];
    for &t in &targets {
        counts[t] += 1;
    }

    let texts: Vec<&str> = fragments.iter().map(|f| f.fragment_text.as_str()).collect();
    let tfidf = fit_tfidf(&texts)?;
    let spans: Vec<(&str, usize, usize)> = fragments
        .iter()
        .map(|f| (f.article_id.as_str(), f.start, f.end))
        .collect();
    let features = lr_inputs(&spans, &articles, &tfidf, &lexicon, &words);
    let ids: Vec<String> = fragments.iter().map(|f| f.fragment_id()).collect();
    if let Some(path) = args.dump_features {
        write_file(path, &dump_tsv(&ids, &features, &tfidf))?;
    }
    let dense: Vec<Vec<f64>> = features.iter().map(|v| v.to_dense(tfidf.len())).collect();

    let base_config = TrainConfig {
        learning_rate: s.learning_rate,
        max_iters: s.tc_max_iters,
        tolerance: s.tolerance,
        seed: s.seed,
        ..TrainConfig::default()
    };
    let lr = train(
        &dense,
        &targets,
        Technique::COUNT,
        &TrainConfig {
            l2_c: Some(s.lr_c),
            loss_mode: LossMode::CostWeighted,
            class_weights: Some(balanced_class_weights(&counts)),
            standardize: vec![0],
            ..base_config.clone()
        },
    )?;

    let pooled = pooled_inputs(ids.iter().map(String::as_str), &embeddings)?;
    let base = train(&pooled, &targets, Technique::COUNT, &base_config)?;
    let specialist = train(
        &pooled,
        &targets,
        Technique::COUNT,
        &TrainConfig {
            loss_mode: s.loss,
            ..base_config.clone()
        },
    )?;

    let out = args.out;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    for (file, trained, name) in [
        (LR_FILE, &lr, "lr"),
        (BASE_FILE, &base, "base"),
        (COST_FILE, &specialist, "cost_weighted"),
    ] {
        log::info!(
            "{name}: {} iterations, final loss {:.6}",
            trained.report.history.len(),
            trained.report.final_loss()
        );
        let mut ckpt = trained.model.to_checkpoint();
        ckpt.set_meta("submodel", name);
        if name == "cost_weighted" {
            ckpt.set_meta("loss", s.loss);
        }
        ckpt.save(&out.join(file))?;
        write_file(&out.join(format!("{name}_log.csv")), &trained.report.log_csv())?;
    }
    write_file(&out.join(TFIDF_FILE), &tfidf.to_text())
}

struct PredictTcArgs<'a> {
    corpus: &'a Corpus,
    fragments: &'a Path,
    embeddings: &'a Path,
    model_dir: &'a Path,
    lexicon: Option<&'a Path>,
    wordlists: Option<&'a Path>,
    route: &'a str,
    correction: bool,
    pos_sidecar: Option<&'a Path>,
    submodel_out: Option<&'a Path>,
    out: &'a Path,
}

fn routing_table(spec: &str) -> Result<RoutingTable> {
    Ok(match spec {
        "default" => RoutingTable::default(),
        "base" => RoutingTable::uniform(Submodel::Base),
        "cost_weighted" => RoutingTable::uniform(Submodel::CostWeighted),
        "lr" => RoutingTable::uniform(Submodel::Lr),
        path => RoutingTable::load(Path::new(path))?,
    })
}

fn load_linear(path: &Path) -> Result<LinearClassifier> {
    LinearClassifier::from_checkpoint(&Checkpoint::load(path)?)
}

fn classify(model: &LinearClassifier, inputs: &[Vec<f64>]) -> Result<Vec<Technique>> {
    inputs
        .iter()
        .map(|x| {
            let (k, _) = predict(model, x)?;
            Technique::from_index(k).ok_or_else(|| Error::Invalid(format!("class index {k} out of range")))
        })
        .collect()
}

fn labelled(spans: &[SpanAnnotation], labels: &[Technique], articles: &Articles) -> Vec<TechniqueLabeledFragment> {
    spans
        .iter()
        .zip(labels)
        .map(|(s, &t)| TechniqueLabeledFragment {
            article_id: s.article_id.clone(),
            technique: t,
            start: s.start,
            end: s.end,
            fragment_text: articles[&s.article_id].slice(s.start, s.end).to_string(),
        })
        .collect()
}

fn cmd_predict_tc(args: PredictTcArgs<'_>) -> Result<()> {
    let articles = load_corpus(args.corpus)?;
    let spans = load_fragment_list(args.fragments, &articles)?;
    let embeddings = load_embeddings(args.embeddings)?;
    let lexicon = load_lexicon(args.lexicon)?;
    let words = load_wordlists(args.wordlists)?;
    let table = routing_table(args.route)?;
    let dir = args.model_dir;
    let lr = load_linear(&dir.join(LR_FILE))?;
    let base = load_linear(&dir.join(BASE_FILE))?;
    let cost = load_linear(&dir.join(COST_FILE))?;
    let tfidf = TfidfModel::from_text(&read_file(&dir.join(TFIDF_FILE))?)?;

    let triples: Vec<(&str, usize, usize)> = spans.iter().map(|s| (s.article_id.as_str(), s.start, s.end)).collect();
    let dense: Vec<Vec<f64>> = lr_inputs(&triples, &articles, &tfidf, &lexicon, &words)
        .iter()
        .map(|v| v.to_dense(tfidf.len()))
        .collect();
    let ids: Vec<String> = spans
        .iter()
        .map(|s| fragment_id(&s.article_id, s.start, s.end))
        .collect();
    let pooled = pooled_inputs(ids.iter().map(String::as_str), &embeddings)?;
    let predictions = SubmodelPredictions {
        base: classify(&base, &pooled)?,
        cost_weighted: classify(&cost, &pooled)?,
        lr: classify(&lr, &dense)?,
    };
    if let Some(sub) = args.submodel_out {
        for (name, labels) in [
            ("base", &predictions.base),
            ("cost_weighted", &predictions.cost_weighted),
            ("lr", &predictions.lr),
        ] {
            write_file(
                &sub.join(format!("{name}.tsv")),
                &write_tc_labels(&labelled(&spans, labels, &articles)),
            )?;
        }
    }
    let mut routed = route(&predictions, &table)?;
    if args.correction {
        let sidecar = match args.pos_sidecar {
            Some(p) => PosSidecar::load(p)?,
            None => PosSidecar::default(),
        };
        for ((label, span), id) in routed.iter_mut().zip(&spans).zip(&ids) {
            let article = &articles[&span.article_id];
            let fragment = article.slice(span.start, span.end);
            let tags = sidecar.tag(id, fragment);
            *label = correct(fragment, *label, article.text(), &tags);
        }
    }
    write_file(args.out, &write_tc_labels(&labelled(&spans, &routed, &articles)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn settings_parse_and_reject() {
        let s = Settings::parse("# c\nmax_seq_len = 64\nalphas=1,2,3\nvariant=sent\n", "c").unwrap();
        assert_eq!(s.max_seq_len, 64);
        assert_eq!(s.alphas, [1.0, 2.0, 3.0]);
        assert_eq!(s.variant, Variant::Sent);
        assert_eq!(s.max_tokens(), 63);
        assert!(Settings::parse("bogus=1\n", "c").is_err());
        assert!(Settings::parse("alphas=1,2\n", "c").is_err());
        assert!(Settings::parse("max_seq_len\n", "c").is_err());
        assert_eq!(Settings::default().max_seq_len, 128);
        assert_eq!(Settings::default().learning_rate, 1e-5);
        assert_eq!(Settings::default().batch_size, 4);
    }

    #[test]
    fn bad_invocations_fail() {
        assert_eq!(run(["propdetect", "nope"]), 2);
        assert_eq!(
            run([
                "propdetect",
                "score-si",
                "--gold",
                "/nonexistent",
                "--pred",
                "/nonexistent"
            ]),
            1
        );
        assert_eq!(run(["propdetect", "--help"]), 0);
    }
}
