use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use super::args::*;
use crate::apps::mining::{self, ComparablePair, MiningConfig};
use crate::apps::plagiarism::{self, DEFAULT_STRIDE, DEFAULT_WINDOW};
use crate::embed::{EmbeddingFormat, EmbeddingSpace};
use crate::error::{Error, Result};
use crate::evalkit::{self, StsDataset};
use crate::mapper::{
    self, BilingualSpace, MappingMethod, TrainOptions, TranslationMatrix, TranslationPairSet,
};
use crate::scorer::{self, SimilarityMethod};

const DEFAULT_MAPPING: MappingMethod = MappingMethod::Adam;
const DEFAULT_SIMILARITY: SimilarityMethod = SimilarityMethod::OptimalAlignment;
const DEFAULT_RANKS: [usize; 2] = [1, 5];
const DEFAULT_SIZES: [usize; 4] = [1000, 2000, 3000, 4000];
const DEFAULT_RECALL_KS: [usize; 4] = [1, 5, 10, 20];
const MINING_PRECISIONS: [(f64, &str); 2] = [(0.9, "R@90"), (0.8, "R@80")];

struct Globals {
    seed: u64,
    jobs: usize,
}

pub(super) fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let config = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let g = Globals {
        seed: cli.seed.or(config.seed).unwrap_or(DEFAULT_SEED),
        jobs: cli.jobs.or(config.jobs).unwrap_or(1),
    };
    if g.jobs == 0 {
        return Err(Error::Domain("--jobs must be at least 1".into()));
    }
    match cli.command {
        Command::TrainMapping(a) => {
            train_mapping(a.merge(config.train_mapping.unwrap_or_default()), &g, out)
        }
        Command::EvalMapping(a) => {
            eval_mapping(a.merge(config.eval_mapping.unwrap_or_default()), out, err)
        }
        Command::Score(a) => score(a.merge(config.score.unwrap_or_default()), &g, out, err),
        Command::EvalSts(a) => eval_sts(a.merge(config.eval_sts.unwrap_or_default()), &g, out, err),
        Command::Mine(a) => mine(a.merge(config.mine.unwrap_or_default()), &g, out),
        Command::Plagiarism(a) => {
            plagiarism(a.merge(config.plagiarism.unwrap_or_default()), &g, out)
        }
        Command::AblatePairs(a) => ablate(
            a.merge(config.ablate_pairs.unwrap_or_default()),
            &g,
            out,
            err,
        ),
    }
    .and_then(|()| out.flush().map_err(stdout_err))
}

fn stdout_err(e: std::io::Error) -> Error {
    Error::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    }
}

/// Prefixes errors from reading `path` with the file name.
fn in_file(path: &Path) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        Error::NotFound(_) | Error::Io { .. } => e,
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{message} (in {})", path.display()),
        },
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        other => other,
    }
}

fn ensure_exists<'a>(paths: impl IntoIterator<Item = &'a PathBuf>) -> Result<()> {
    match paths.into_iter().find(|p| !p.exists()) {
        Some(p) => Err(Error::NotFound(p.clone())),
        None => Ok(()),
    }
}

fn load_embeddings(path: &Path, args: &SpaceArgs, lang: Option<&str>) -> Result<EmbeddingSpace> {
    let format = args.format.unwrap_or(EmbeddingFormat::Auto);
    let space = EmbeddingSpace::load(path, format, args.max_vocab).map_err(in_file(path))?;
    log::info!(
        "{}: {} words, dimension {}",
        path.display(),
        space.len(),
        space.dim()
    );
    Ok(space.with_lang(lang.unwrap_or_default()))
}

/// Loads both spaces. Without `--target-emb` the source space is used on
/// both sides.
fn load_spaces(args: &SpaceArgs) -> Result<(Arc<EmbeddingSpace>, Arc<EmbeddingSpace>)> {
    let source_path = required(args.source_emb.clone(), "source-emb")?;
    ensure_exists([&source_path].into_iter().chain(args.target_emb.as_ref()))?;
    let source = Arc::new(load_embeddings(
        &source_path,
        args,
        args.source_lang.as_deref(),
    )?);
    let target = match &args.target_emb {
        Some(p) => Arc::new(load_embeddings(p, args, args.target_lang.as_deref())?),
        None => Arc::clone(&source),
    };
    Ok((source, target))
}

/// Spaces plus the matrix from `--matrix`, or the identity map when none is
/// given and the dimensions agree.
fn load_bilingual(args: &SpaceArgs, matrix: Option<&PathBuf>) -> Result<BilingualSpace> {
    ensure_exists(matrix)?;
    let (source, target) = load_spaces(args)?;
    let matrix = match matrix {
        Some(p) => TranslationMatrix::load(p).map_err(in_file(p))?,
        None if Arc::ptr_eq(&source, &target) => return Ok(BilingualSpace::monolingual(source)),
        None if source.dim() == target.dim() => {
            log::warn!("no --matrix given; using the identity map");
            TranslationMatrix::identity(source.dim()).with_langs(source.lang(), target.lang())
        }
        None => {
            return Err(Error::Domain(format!(
                "no --matrix given and the spaces differ in dimension ({} vs {})",
                source.dim(),
                target.dim()
            )))
        }
    };
    BilingualSpace::new(source, target, matrix)
}

fn load_pair_set(
    path: &Path,
    source: &EmbeddingSpace,
    target: &EmbeddingSpace,
) -> Result<TranslationPairSet> {
    let raw = mapper::load_pairs(path).map_err(in_file(path))?;
    let set = TranslationPairSet::resolve(raw, source, target);
    if set.dropped() > 0 {
        log::warn!(
            "{}: {} pairs dropped (out of vocabulary)",
            path.display(),
            set.dropped()
        );
    }
    Ok(set)
}

fn train_options(opt: &OptimizerArgs, seed: u64) -> Result<(MappingMethod, TrainOptions)> {
    let mut opts = TrainOptions::default();
    opts.adam.seed = seed;
    if let Some(lr) = opt.learning_rate {
        if lr.is_nan() || lr <= 0.0 {
            return Err(Error::Domain(format!(
                "learning rate must be positive, got {lr}"
            )));
        }
        opts.adam.learning_rate = lr;
    }
    if let Some(b) = opt.batch_size {
        if b == 0 {
            return Err(Error::Domain("batch size must be at least 1".into()));
        }
        opts.adam.batch_size = b;
    }
    if let Some(e) = opt.epochs {
        opts.adam.epochs = e;
    }
    if let Some(r) = opt.ridge {
        if r.is_nan() || r < 0.0 {
            return Err(Error::Domain(format!(
                "ridge must be non-negative, got {r}"
            )));
        }
        opts.ridge = r;
    }
    Ok((opt.method.unwrap_or(DEFAULT_MAPPING), opts))
}

fn check_ranks(ranks: &[usize]) -> Result<()> {
    if ranks.is_empty() || ranks.contains(&0) {
        return Err(Error::Domain("ranks must be positive integers".into()));
    }
    Ok(())
}

fn train_mapping(a: TrainArgs, g: &Globals, out: &mut dyn Write) -> Result<()> {
    let pairs_path = required(a.pairs, "pairs")?;
    let out_path = required(a.out, "out")?;
    required(a.space.target_emb.as_ref(), "target-emb")?;
    ensure_exists([&pairs_path])?;
    let (method, opts) = train_options(&a.optimizer, g.seed)?;
    let (source, target) = load_spaces(&a.space)?;
    let pairs = load_pair_set(&pairs_path, &source, &target)?;
    let matrix = mapper::train_matrix(&source, &target, &pairs, method, &opts)?;
    matrix.save(&out_path)?;

    let loss = matrix.train_loss.unwrap_or(f64::NAN);
    writeln!(out, "pairs {}", pairs.len()).map_err(stdout_err)?;
    writeln!(out, "dropped {}", pairs.dropped()).map_err(stdout_err)?;
    writeln!(out, "duplicates {}", pairs.duplicates()).map_err(stdout_err)?;
    writeln!(out, "train_loss {loss:.6e}").map_err(stdout_err)?;
    Ok(())
}

fn eval_mapping(a: EvalMappingArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let pairs_path = required(a.pairs, "pairs")?;
    let ranks = a.ranks.unwrap_or_else(|| DEFAULT_RANKS.to_vec());
    check_ranks(&ranks)?;
    ensure_exists([&pairs_path])?;
    let bi = load_bilingual(&a.space, a.matrix.as_ref())?;
    let test = load_pair_set(&pairs_path, bi.source(), bi.target())?;
    let _ = writeln!(
        err,
        "test pairs {} (dropped {})",
        test.len(),
        test.dropped()
    );
    let precision = mapper::evaluate_matrix(&bi, &test, &ranks)?;
    for k in ranks {
        writeln!(out, "P@{k} {:.4}", precision[&k]).map_err(stdout_err)?;
    }
    Ok(())
}

/// Sentence pairs from a TSV file; fields past the second are ignored.
fn read_sentence_pairs(path: &Path) -> Result<Vec<(String, String)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut pairs = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::parse(n + 1, e.to_string()))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        match (fields.next(), fields.next()) {
            (Some(s), Some(t)) => pairs.push((s.to_string(), t.to_string())),
            _ => {
                return Err(Error::parse(n + 1, "expected 'source<TAB>target'"))
                    .map_err(in_file(path))
            }
        }
    }
    Ok(pairs)
}

fn score(a: ScoreArgs, g: &Globals, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let pairs = match (a.source_text, a.target_text, &a.input) {
        (Some(s), Some(t), None) => vec![(s, t)],
        (None, None, Some(p)) => {
            ensure_exists([p])?;
            read_sentence_pairs(p)?
        }
        _ => {
            return Err(Error::Domain(
                "give either --source-text and --target-text, or --input".into(),
            ))
        }
    };
    let method = a.method.unwrap_or(DEFAULT_SIMILARITY);
    let bi = load_bilingual(&a.space, a.matrix.as_ref())?;
    for (i, result) in scorer::score_batch(&bi, &pairs, method, g.jobs)
        .into_iter()
        .enumerate()
    {
        match result {
            Ok(s) => {
                writeln!(out, "{}\t{:.6}", method.tag(), s.value).map_err(stdout_err)?;
                if s.oov_source + s.oov_target > 0 {
                    let _ = writeln!(
                        err,
                        "pair {}: oov source {}, oov target {}",
                        i + 1,
                        s.oov_source,
                        s.oov_target
                    );
                }
            }
            Err(e @ (Error::EmptyInput { .. } | Error::Domain(_))) => {
                writeln!(out, "{}\tNA", method.tag()).map_err(stdout_err)?;
                let _ = writeln!(err, "pair {}: NA: {e}", i + 1);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(())
}

fn eval_sts(a: EvalStsArgs, g: &Globals, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let path = required(a.dataset, "dataset")?;
    ensure_exists([&path])?;
    let method = a.method.unwrap_or(DEFAULT_SIMILARITY);
    let bi = load_bilingual(&a.space, a.matrix.as_ref())?;
    let ds = StsDataset::load(&path).map_err(in_file(&path))?;
    let report = evalkit::sts_report(&bi, &ds, method, g.jobs)?;
    let _ = writeln!(
        err,
        "pairs {} (unscoreable {})",
        ds.len(),
        report.unscoreable()
    );
    writeln!(out, "pearson {} {:.4}", method.tag(), report.rho).map_err(stdout_err)?;
    Ok(())
}

fn mine(a: MineArgs, g: &Globals, out: &mut dyn Write) -> Result<()> {
    let doc_s = required(a.doc_s, "doc-s")?;
    let doc_t = required(a.doc_t, "doc-t")?;
    ensure_exists([&doc_s, &doc_t].into_iter().chain(a.gold.as_ref()))?;
    let cfg = MiningConfig::new(a.tau, a.method.unwrap_or(DEFAULT_SIMILARITY))?.with_jobs(g.jobs);
    let bi = load_bilingual(&a.space, a.matrix.as_ref())?;
    let cp = ComparablePair::load(&doc_s, &doc_t, a.gold.as_deref())?;
    let result = mining::mine_parallel(&bi, &cp, &cfg)?;
    let selected = if cfg.tau().is_some() {
        &result.emitted[..]
    } else {
        result.ranked.items()
    };

    if let Some(path) = &a.output {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        mining::write_candidates(&mut w, selected)
            .and_then(|()| w.flush())
            .map_err(|e| Error::io(path, e))?;
    }
    if cp.gold().is_some() {
        writeln!(out, "AP {:.4}", evalkit::average_precision(&result.ranked)?)
            .map_err(stdout_err)?;
        for (p, label) in MINING_PRECISIONS {
            let r = evalkit::recall_at_precision(&result.ranked, p)?;
            writeln!(out, "{label} {r:.4}").map_err(stdout_err)?;
        }
        if cfg.tau().is_some() {
            writeln!(out, "emitted {}", result.emitted.len()).map_err(stdout_err)?;
        }
    } else if a.output.is_none() {
        mining::write_candidates(out, selected).map_err(stdout_err)?;
    }
    Ok(())
}

fn doc_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn plagiarism(a: PlagiarismArgs, g: &Globals, out: &mut dyn Write) -> Result<()> {
    let susp_path = required(a.suspicious, "suspicious")?;
    let source_paths = required(a.source_docs, "source-doc")?;
    let gold_path = required(a.gold, "gold")?;
    let ks = a.ks.unwrap_or_else(|| DEFAULT_RECALL_KS.to_vec());
    check_ranks(&ks)?;
    let window = a.window.unwrap_or(DEFAULT_WINDOW);
    let stride = a.stride.unwrap_or(DEFAULT_STRIDE);
    ensure_exists([&susp_path, &gold_path].into_iter().chain(&source_paths))?;

    let bi = load_bilingual(&a.space, a.matrix.as_ref())?;
    let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| Error::io(p, e));
    let suspicious =
        plagiarism::segment_document(doc_id(&susp_path), &read(&susp_path)?, window, stride)
            .map_err(|e| Error::Domain(format!("{}: {e}", susp_path.display())))?;
    let mut sources = Vec::with_capacity(source_paths.len());
    for p in &source_paths {
        let doc = plagiarism::segment_document(doc_id(p), &read(p)?, window, stride)
            .map_err(|e| Error::Domain(format!("{}: {e}", p.display())))?;
        sources.push(doc);
    }
    let gold_file = File::open(&gold_path).map_err(|e| Error::io(&gold_path, e))?;
    let gold =
        plagiarism::read_plagiarism_gold(BufReader::new(gold_file)).map_err(in_file(&gold_path))?;

    let method = a.method.unwrap_or(DEFAULT_SIMILARITY);
    let depth = *ks.iter().max().expect("checked nonempty");
    let ranking = plagiarism::rank_fragments(&bi, &suspicious, &sources, method, depth, g.jobs)?;
    for k in ks {
        let r = plagiarism::char_recall_at_k(&suspicious, &ranking, &gold, k)?;
        writeln!(out, "R@{k} {r:.4}").map_err(stdout_err)?;
    }
    Ok(())
}

fn ablate(a: AblateArgs, g: &Globals, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let train_path = required(a.train_pairs, "train-pairs")?;
    let test_path = required(a.test_pairs, "test-pairs")?;
    required(a.space.target_emb.as_ref(), "target-emb")?;
    let sizes = a.sizes.unwrap_or_else(|| DEFAULT_SIZES.to_vec());
    let ranks = a.ranks.unwrap_or_else(|| DEFAULT_RANKS.to_vec());
    check_ranks(&ranks)?;
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(Error::Domain("sizes must be positive integers".into()));
    }
    ensure_exists([&train_path, &test_path])?;
    let (method, opts) = train_options(&a.optimizer, g.seed)?;
    let (source, target) = load_spaces(&a.space)?;
    let train = load_pair_set(&train_path, &source, &target)?;
    let test = load_pair_set(&test_path, &source, &target)?;

    let header: Vec<String> = ranks.iter().map(|k| format!("P@{k}")).collect();
    writeln!(out, "size\tpairs\t{}", header.join("\t")).map_err(stdout_err)?;
    for size in sizes {
        if size > train.len() {
            let _ = writeln!(
                err,
                "size {size}: only {} training pairs available",
                train.len()
            );
        }
        let subset = train.take(size);
        let matrix = mapper::train_matrix(&source, &target, &subset, method, &opts)?;
        let bi = BilingualSpace::new(Arc::clone(&source), Arc::clone(&target), matrix)?;
        let precision = mapper::evaluate_matrix(&bi, &test, &ranks)?;
        let cells: Vec<String> = ranks
            .iter()
            .map(|k| format!("{:.4}", precision[k]))
            .collect();
        writeln!(out, "{size}\t{}\t{}", subset.len(), cells.join("\t")).map_err(stdout_err)?;
    }
    Ok(())
}
