//! Linear translation matrices between two embedding spaces.
//!
//! A matrix `M` of shape `d_t × d_s` is fitted on word translation pairs so
//! that `M·s ≈ t` for each source vector `s` and target vector `t`. Both the
//! closed-form and the Adam fit minimize the sum of squared residuals
//! `Σ‖M·s_i − t_i‖²`.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::embed::EmbeddingSpace;
use crate::error::{Error, Result};

pub const DEFAULT_RIDGE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, clap::ValueEnum)]
pub enum MappingMethod {
    #[value(name = "least-squares")]
    LeastSquares,
    Adam,
    /// Not trained: the identity map used for monolingual scoring.
    Identity,
}

impl MappingMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            MappingMethod::LeastSquares => "least-squares",
            MappingMethod::Adam => "adam",
            MappingMethod::Identity => "identity",
        }
    }
}

impl fmt::Display for MappingMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MappingMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "least-squares" => Ok(MappingMethod::LeastSquares),
            "adam" => Ok(MappingMethod::Adam),
            "identity" => Ok(MappingMethod::Identity),
            other => Err(Error::Domain(format!("unknown mapping method '{other}'"))),
        }
    }
}

impl<'de> serde::Deserialize<'de> for MappingMethod {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdamOptions {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Seeds the per-epoch shuffle.
    pub seed: u64,
}

impl Default for AdamOptions {
    fn default() -> Self {
        AdamOptions {
            learning_rate: 0.02,
            batch_size: 64,
            epochs: 200,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 42,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOptions {
    /// Tikhonov term added to the normal equations.
    pub ridge: f64,
    pub adam: AdamOptions,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            ridge: DEFAULT_RIDGE,
            adam: AdamOptions::default(),
        }
    }
}

/// Reads a translation-pair file: one `source<TAB>target` per line, `#`
/// comments and blank lines skipped.
pub fn load_pairs(path: impl AsRef<Path>) -> Result<Vec<(String, String)>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_pairs(BufReader::new(file))
}

pub fn read_pairs<R: BufRead>(reader: R) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line_no = n + 1;
        let line = line.map_err(|e| Error::parse(line_no, e.to_string()))?;
        let line = line.trim_end_matches('\r');
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 {
            return Err(Error::parse(
                line_no,
                format!(
                    "expected 'source<TAB>target', found {} fields",
                    fields.len()
                ),
            ));
        }
        let (s, t) = (fields[0].trim(), fields[1].trim());
        if s.is_empty() || t.is_empty() {
            return Err(Error::parse(line_no, "empty word in translation pair"));
        }
        pairs.push((s.to_string(), t.to_string()));
    }
    Ok(pairs)
}

/// Translation pairs whose words both resolve in their spaces.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TranslationPairSet {
    pairs: Vec<(String, String)>,
    rows: Vec<(usize, usize)>,
    dropped: usize,
    duplicates: usize,
}

impl TranslationPairSet {
    /// Resolves raw pairs against the two spaces. Pairs with an
    /// out-of-vocabulary side are dropped and counted; repeated pairs are
    /// kept once.
    pub fn resolve<I>(raw: I, source: &EmbeddingSpace, target: &EmbeddingSpace) -> Self
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut set = TranslationPairSet::default();
        let mut seen = HashSet::new();
        for (s, t) in raw {
            let (Some(si), Some(ti)) = (source.index_of(&s), target.index_of(&t)) else {
                set.dropped += 1;
                continue;
            };
            if !seen.insert((s.clone(), t.clone())) {
                set.duplicates += 1;
                continue;
            }
            set.pairs.push((s, t));
            set.rows.push((si, ti));
        }
        set
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    /// `(source row, target row)` for each pair.
    pub fn rows(&self) -> &[(usize, usize)] {
        &self.rows
    }

    /// Pairs lost to out-of-vocabulary words.
    pub fn dropped(&self) -> usize {
        self.dropped
    }

    pub fn duplicates(&self) -> usize {
        self.duplicates
    }

    /// The first `n` pairs (all of them if fewer).
    pub fn take(&self, n: usize) -> Self {
        let n = n.min(self.len());
        TranslationPairSet {
            pairs: self.pairs[..n].to_vec(),
            rows: self.rows[..n].to_vec(),
            dropped: self.dropped,
            duplicates: self.duplicates,
        }
    }
}

/// A row-major `d_t × d_s` linear map from a source space into a target space.
#[derive(Clone, Debug, PartialEq)]
pub struct TranslationMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    pub source_lang: String,
    pub target_lang: String,
    pub method: MappingMethod,
    /// Mean squared residual per training pair; `None` for matrices that
    /// were not trained in this process.
    pub train_loss: Option<f64>,
}

impl TranslationMatrix {
    pub fn from_row_major(
        rows: usize,
        cols: usize,
        data: Vec<f64>,
        method: MappingMethod,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Domain("matrix dimensions must be positive".into()));
        }
        if data.len() != rows * cols {
            return Err(Error::Domain(format!(
                "{} entries do not fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("matrix has non-finite entries".into()));
        }
        Ok(TranslationMatrix {
            rows,
            cols,
            data,
            source_lang: String::new(),
            target_lang: String::new(),
            method,
            train_loss: None,
        })
    }

    pub fn identity(dim: usize) -> Self {
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1.0;
        }
        TranslationMatrix::from_row_major(dim, dim, data, MappingMethod::Identity)
            .expect("identity is well-formed")
    }

    pub fn with_langs(mut self, source: impl Into<String>, target: impl Into<String>) -> Self {
        self.source_lang = source.into();
        self.target_lang = target.into();
        self
    }

    /// Target dimension `d_t`.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Source dimension `d_s`.
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `M·v`.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::Domain(format!(
                "vector has {} entries, matrix expects {}",
                v.len(),
                self.cols
            )));
        }
        Ok(self.apply_unchecked(v.iter().copied()))
    }

    pub(crate) fn apply_f32(&self, v: &[f32]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.cols);
        self.apply_unchecked(v.iter().map(|&x| f64::from(x)))
    }

    fn apply_unchecked(&self, v: impl Iterator<Item = f64> + Clone) -> Vec<f64> {
        self.data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(v.clone()).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Mean of `‖M·s − t‖²` over the pair set.
    pub fn mean_squared_residual(
        &self,
        source: &EmbeddingSpace,
        target: &EmbeddingSpace,
        pairs: &TranslationPairSet,
    ) -> f64 {
        if pairs.is_empty() {
            return 0.0;
        }
        let total: f64 = pairs
            .rows()
            .iter()
            .map(|&(si, ti)| {
                self.apply_f32(source.row(si))
                    .iter()
                    .zip(target.row(ti))
                    .map(|(p, &t)| (p - f64::from(t)).powi(2))
                    .sum::<f64>()
            })
            .sum();
        total / pairs.len() as f64
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    /// Header `d_t d_s source_lang target_lang method`, then one line per row.
    /// Entries use the shortest decimal that parses back to the same `f64`.
    pub fn write<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(
            w,
            "{} {} {} {} {}",
            self.rows,
            self.cols,
            lang_tag(&self.source_lang),
            lang_tag(&self.target_lang),
            self.method
        )?;
        for row in self.data.chunks_exact(self.cols) {
            let line: Vec<String> = row.iter().map(|x| x.to_string()).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(BufReader::new(file))
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let header = match lines.next() {
            Some(l) => l.map_err(|e| Error::parse(1, e.to_string()))?,
            None => return Err(Error::Format("empty matrix file".into())),
        };
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(Error::Format(
                "matrix header must be 'd_t d_s source_lang target_lang method'".into(),
            ));
        }
        let parse_dim = |s: &str| -> Result<usize> {
            s.parse()
                .ok()
                .filter(|&d: &usize| d > 0)
                .ok_or_else(|| Error::Format(format!("bad matrix dimension {s:?}")))
        };
        let rows = parse_dim(fields[0])?;
        let cols = parse_dim(fields[1])?;
        let method: MappingMethod = fields[4]
            .parse()
            .map_err(|_| Error::Format(format!("unknown method {:?}", fields[4])))?;

        let mut data = Vec::with_capacity(rows * cols);
        let mut seen_rows = 0usize;
        for (n, line) in lines.enumerate() {
            let line_no = n + 2;
            let line = line.map_err(|e| Error::parse(line_no, e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            seen_rows += 1;
            if seen_rows > rows {
                return Err(Error::Format(format!(
                    "header declares {rows} rows, found more"
                )));
            }
            let before = data.len();
            for field in line.split_whitespace() {
                let x: f64 = field
                    .parse()
                    .map_err(|_| Error::parse(line_no, format!("non-numeric entry {field:?}")))?;
                if !x.is_finite() {
                    return Err(Error::parse(line_no, format!("non-finite entry {field:?}")));
                }
                data.push(x);
            }
            if data.len() - before != cols {
                return Err(Error::Format(format!(
                    "line {line_no}: expected {cols} entries, found {}",
                    data.len() - before
                )));
            }
        }
        if seen_rows != rows {
            return Err(Error::Format(format!(
                "header declares {rows} rows, found {seen_rows}"
            )));
        }
        Ok(TranslationMatrix::from_row_major(rows, cols, data, method)?
            .with_langs(untag(fields[2]), untag(fields[3])))
    }
}

fn lang_tag(lang: &str) -> &str {
    if lang.is_empty() {
        "und"
    } else {
        lang
    }
}

fn untag(tag: &str) -> &str {
    if tag == "und" {
        ""
    } else {
        tag
    }
}

/// Fits `M` on the pair set.
pub fn train_matrix(
    source: &EmbeddingSpace,
    target: &EmbeddingSpace,
    pairs: &TranslationPairSet,
    method: MappingMethod,
    opts: &TrainOptions,
) -> Result<TranslationMatrix> {
    if source.is_empty() || target.is_empty() {
        return Err(Error::Precondition(
            "embedding spaces must be nonempty".into(),
        ));
    }
    if pairs.is_empty() {
        return Err(Error::Precondition(
            "no usable translation pairs after vocabulary lookup (n = 0)".into(),
        ));
    }
    let (ds, dt) = (source.dim(), target.dim());
    let n = pairs.len();
    let x = DMatrix::from_fn(n, ds, |i, j| f64::from(source.row(pairs.rows()[i].0)[j]));
    let y = DMatrix::from_fn(n, dt, |i, j| f64::from(target.row(pairs.rows()[i].1)[j]));

    let m = match method {
        MappingMethod::LeastSquares => {
            if n < ds {
                log::warn!(
                    "{n} translation pairs for source dimension {ds}: the system is underdetermined, ridge term resolves it"
                );
            }
            least_squares(&x, &y, opts.ridge)?
        }
        MappingMethod::Adam => adam(&x, &y, &opts.adam)?,
        MappingMethod::Identity => {
            return Err(Error::Domain("identity is not a training method".into()))
        }
    };

    // nalgebra is column-major; store row-major.
    let data: Vec<f64> = (0..dt)
        .flat_map(|r| (0..ds).map(move |c| (r, c)))
        .map(|(r, c)| m[(r, c)])
        .collect();
    let mut tm = TranslationMatrix::from_row_major(dt, ds, data, method)
        .map_err(|_| Error::Diverged { epoch: 0 })?
        .with_langs(source.lang(), target.lang());
    let loss = tm.mean_squared_residual(source, target, pairs);
    if !loss.is_finite() {
        return Err(Error::Diverged {
            epoch: opts.adam.epochs,
        });
    }
    tm.train_loss = Some(loss);
    Ok(tm)
}

/// Solves `(XᵀX + λI)·Mᵀ = XᵀY`.
fn least_squares(x: &DMatrix<f64>, y: &DMatrix<f64>, ridge: f64) -> Result<DMatrix<f64>> {
    let ds = x.ncols();
    let xt = x.transpose();
    let gram = &xt * x + DMatrix::identity(ds, ds) * ridge;
    let rhs = &xt * y;
    let mt = match gram.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => gram
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Domain("normal equations are singular".into()))?,
    };
    Ok(mt.transpose())
}

fn adam(x: &DMatrix<f64>, y: &DMatrix<f64>, opts: &AdamOptions) -> Result<DMatrix<f64>> {
    if opts.batch_size == 0
        || opts.epochs == 0
        || opts.learning_rate.is_nan()
        || opts.learning_rate <= 0.0
    {
        return Err(Error::Domain(
            "adam needs positive batch size, epoch count and learning rate".into(),
        ));
    }
    let (n, ds, dt) = (x.nrows(), x.ncols(), y.ncols());
    let mut m = DMatrix::<f64>::zeros(dt, ds);
    let mut first = DMatrix::<f64>::zeros(dt, ds);
    let mut second = DMatrix::<f64>::zeros(dt, ds);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut step = 0i32;

    for epoch in 0..opts.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(opts.batch_size) {
            let xb = x.select_rows(batch);
            let yb = y.select_rows(batch);
            let residual = &xb * m.transpose() - yb;
            let loss = residual.norm_squared() / batch.len() as f64;
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch: epoch + 1 });
            }
            let grad = residual.transpose() * &xb * (2.0 / batch.len() as f64);

            step += 1;
            let bc1 = 1.0 - opts.beta1.powi(step);
            let bc2 = 1.0 - opts.beta2.powi(step);
            first.zip_apply(&grad, |f, g| *f = opts.beta1 * *f + (1.0 - opts.beta1) * g);
            second.zip_apply(&grad, |s, g| {
                *s = opts.beta2 * *s + (1.0 - opts.beta2) * g * g
            });
            for ((w, f), s) in m.iter_mut().zip(first.iter()).zip(second.iter()) {
                *w -= opts.learning_rate * (f / bc1) / ((s / bc2).sqrt() + opts.epsilon);
            }
        }
        if log::log_enabled!(log::Level::Debug) {
            let full = (x * m.transpose() - y).norm_squared() / n as f64;
            log::debug!("adam epoch {}: mean squared residual {full:.6e}", epoch + 1);
        }
    }
    if m.iter().any(|w| !w.is_finite()) {
        return Err(Error::Diverged { epoch: opts.epochs });
    }
    Ok(m)
}

/// A source space, a target space and the map between them.
#[derive(Clone, Debug)]
pub struct BilingualSpace {
    source: Arc<EmbeddingSpace>,
    target: Arc<EmbeddingSpace>,
    matrix: TranslationMatrix,
}

impl BilingualSpace {
    pub fn new(
        source: Arc<EmbeddingSpace>,
        target: Arc<EmbeddingSpace>,
        matrix: TranslationMatrix,
    ) -> Result<Self> {
        if matrix.cols() != source.dim() || matrix.rows() != target.dim() {
            return Err(Error::Domain(format!(
                "matrix is {}x{}, spaces need {}x{}",
                matrix.rows(),
                matrix.cols(),
                target.dim(),
                source.dim()
            )));
        }
        Ok(BilingualSpace {
            source,
            target,
            matrix,
        })
    }

    /// One space on both sides with the identity map (monolingual scoring).
    pub fn monolingual(space: Arc<EmbeddingSpace>) -> Self {
        let matrix =
            TranslationMatrix::identity(space.dim()).with_langs(space.lang(), space.lang());
        BilingualSpace {
            source: Arc::clone(&space),
            target: space,
            matrix,
        }
    }

    pub fn source(&self) -> &EmbeddingSpace {
        &self.source
    }

    pub fn target(&self) -> &EmbeddingSpace {
        &self.target
    }

    pub fn matrix(&self) -> &TranslationMatrix {
        &self.matrix
    }

    /// Projects a source-space vector into the target space.
    pub fn map_vector(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.matrix.apply(v)
    }

    /// Projects a row of the source space.
    pub fn map_row(&self, row: usize) -> Vec<f64> {
        self.matrix.apply_f32(self.source.row(row))
    }
}

/// Precision at each rank in `ranks`: the fraction of test pairs whose gold
/// target word is among the `k` target-vocabulary words closest to the
/// mapped source word. The whole target vocabulary is ranked.
pub fn evaluate_matrix(
    bi: &BilingualSpace,
    test_pairs: &TranslationPairSet,
    ranks: &[usize],
) -> Result<BTreeMap<usize, f64>> {
    if test_pairs.is_empty() {
        return Err(Error::Domain("empty test pair set".into()));
    }
    if ranks.is_empty() || ranks.contains(&0) {
        return Err(Error::Domain(
            "ranks must be a nonempty list of positive integers".into(),
        ));
    }
    let max_k = *ranks.iter().max().expect("nonempty");
    let positions: Vec<Option<usize>> = test_pairs
        .rows()
        .par_iter()
        .map(|&(si, ti)| {
            let mapped = bi.map_row(si);
            match bi.target().nearest_neighbors(&mapped, max_k) {
                Ok(hits) => hits.iter().position(|h| h.row == ti),
                Err(e) => {
                    log::warn!(
                        "source word '{}' cannot be ranked: {e}",
                        bi.source().word(si)
                    );
                    None
                }
            }
        })
        .collect();
    let total = test_pairs.len() as f64;
    Ok(ranks
        .iter()
        .map(|&k| {
            let hits = positions
                .iter()
                .filter(|p| matches!(p, Some(i) if *i < k))
                .count();
            (k, hits as f64 / total)
        })
        .collect())
}
