//! Monolingual word-embedding tables.
//!
//! An [`EmbeddingSpace`] maps words to dense vectors of a fixed
//! dimensionality. Tables are read from the two common text layouts:
//!
//! * word2vec text: a `<count> <dim>` header followed by `<word> <v1> ... <vdim>` rows;
//! * GloVe text: the same rows without a header.
//!
//! Components are held as `f32`, which is what both layouts carry in
//! practice; arithmetic on them is done in `f64`. Saving always writes
//! word2vec text with the shortest decimal that reads back to the same
//! `f32`, so a save/load round trip is bit-exact.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::vecops;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, clap::ValueEnum)]
pub enum EmbeddingFormat {
    /// Detect from the first line.
    #[default]
    Auto,
    #[value(name = "word2vec-text")]
    Word2VecText,
    #[value(name = "glove-text")]
    GloveText,
}

impl FromStr for EmbeddingFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(EmbeddingFormat::Auto),
            "word2vec-text" => Ok(EmbeddingFormat::Word2VecText),
            "glove-text" => Ok(EmbeddingFormat::GloveText),
            other => Err(Error::Domain(format!("unknown embedding format '{other}'"))),
        }
    }
}

impl<'de> serde::Deserialize<'de> for EmbeddingFormat {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// An immutable vocabulary-to-vector table for one language.
#[derive(Clone, Debug)]
pub struct EmbeddingSpace {
    lang: String,
    dim: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    vectors: Vec<f32>,
    norms: Vec<f64>,
}

/// One hit of a nearest-neighbour query.
#[derive(Clone, Debug, PartialEq)]
pub struct Neighbor<'a> {
    pub word: &'a str,
    pub row: usize,
    pub cosine: f64,
}

impl EmbeddingSpace {
    /// Builds a space from `(word, vector)` rows. The first occurrence of a
    /// duplicated word wins; later ones are ignored.
    pub fn from_rows<I, S>(lang: impl Into<String>, dim: usize, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f32>)>,
        S: Into<String>,
    {
        let mut builder = Builder::new(dim);
        for (n, (word, vector)) in rows.into_iter().enumerate() {
            let word = word.into();
            if word.is_empty() || word.chars().any(char::is_whitespace) {
                return Err(Error::Format(format!(
                    "row {}: word {word:?} is empty or contains whitespace",
                    n + 1
                )));
            }
            if vector.len() != dim {
                return Err(Error::Format(format!(
                    "row {}: expected {dim} components, found {}",
                    n + 1,
                    vector.len()
                )));
            }
            if let Some(bad) = vector.iter().find(|x| !x.is_finite()) {
                return Err(Error::Format(format!(
                    "row {}: non-finite component {bad}",
                    n + 1
                )));
            }
            builder.push(word, &vector);
        }
        Ok(builder.finish(lang.into()))
    }

    /// Reads an embedding file. `max_vocab` keeps only the first entries in
    /// file order.
    pub fn load(
        path: impl AsRef<Path>,
        format: EmbeddingFormat,
        max_vocab: Option<usize>,
    ) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(BufReader::new(file), format, max_vocab)
    }

    pub fn read<R: BufRead>(
        reader: R,
        format: EmbeddingFormat,
        max_vocab: Option<usize>,
    ) -> Result<Self> {
        if max_vocab == Some(0) {
            return Err(Error::Domain("max_vocab must be positive".into()));
        }
        let mut lines = reader.lines().enumerate();

        let (first_no, first) = match lines.next() {
            Some((n, line)) => (n + 1, line.map_err(|e| Error::parse(n + 1, e.to_string()))?),
            None => return Err(Error::Format("empty embedding file".into())),
        };
        let header = parse_header(&first);
        let format = match format {
            EmbeddingFormat::Auto if header.is_some() => EmbeddingFormat::Word2VecText,
            EmbeddingFormat::Auto => EmbeddingFormat::GloveText,
            f => f,
        };

        let mut declared_count = None;
        let mut dim = None;
        let mut pending = None;
        match format {
            EmbeddingFormat::Word2VecText => {
                let (count, d) = header.ok_or_else(|| {
                    Error::parse(first_no, "expected '<count> <dim>' word2vec header")
                })?;
                if d == 0 {
                    return Err(Error::Format("header declares zero dimensions".into()));
                }
                declared_count = Some(count);
                dim = Some(d);
            }
            _ => pending = Some((first_no, first)),
        }

        let mut builder: Option<Builder> = dim.map(Builder::new);
        let mut rows_read = 0usize;
        let mut truncated = false;
        let rest = lines.map(|(n, line)| (n + 1, line));
        let all = pending.map(|(n, l)| (n, Ok(l))).into_iter().chain(rest);
        let mut buf = Vec::new();
        for (line_no, line) in all {
            let line = line.map_err(|e| Error::parse(line_no, e.to_string()))?;
            let line = line.trim_end_matches(['\r', '\n']);
            if line.trim().is_empty() {
                continue;
            }
            if let (Some(b), Some(max)) = (&builder, max_vocab) {
                if b.len() >= max {
                    truncated = true;
                    break;
                }
            }
            let mut fields = line.split([' ', '\t']).filter(|f| !f.is_empty());
            let word = fields.next().expect("non-blank line has a field");
            buf.clear();
            for field in fields {
                let x: f32 = field
                    .parse()
                    .map_err(|_| Error::parse(line_no, format!("non-numeric value {field:?}")))?;
                if !x.is_finite() {
                    return Err(Error::parse(line_no, format!("non-finite value {field:?}")));
                }
                buf.push(x);
            }
            if buf.is_empty() {
                return Err(Error::parse(
                    line_no,
                    "row has a word but no vector components",
                ));
            }
            let b = builder.get_or_insert_with(|| Builder::new(buf.len()));
            if buf.len() != b.dim {
                return Err(Error::Format(format!(
                    "line {line_no}: expected {} components, found {}",
                    b.dim,
                    buf.len()
                )));
            }
            b.push(word.to_string(), &buf);
            rows_read += 1;
        }

        let builder = builder.ok_or_else(|| Error::Format("embedding file has no rows".into()))?;
        if let Some(count) = declared_count {
            if !truncated && rows_read != count {
                return Err(Error::Format(format!(
                    "header declares {count} rows, file contains {rows_read}"
                )));
            }
        }
        if builder.len() == 0 {
            return Err(Error::Format("embedding file has no rows".into()));
        }
        Ok(builder.finish(String::new()))
    }

    /// Writes the table as word2vec text.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn write<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.len(), self.dim)?;
        for (i, word) in self.words.iter().enumerate() {
            write!(w, "{word}")?;
            for x in self.row(i) {
                write!(w, " {x}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn with_lang(mut self, lang: impl Into<String>) -> Self {
        self.lang = lang.into();
        self
    }

    pub fn lang(&self) -> &str {
        &self.lang
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, row: usize) -> &str {
        &self.words[row]
    }

    pub fn row(&self, row: usize) -> &[f32] {
        &self.vectors[row * self.dim..(row + 1) * self.dim]
    }

    pub fn row_f64(&self, row: usize) -> Vec<f64> {
        vecops::to_f64(self.row(row))
    }

    /// Euclidean norm of a row, computed once at construction.
    pub fn norm(&self, row: usize) -> f64 {
        self.norms[row]
    }

    /// Row index of `word`, falling back to its lowercase form.
    pub fn index_of(&self, word: &str) -> Option<usize> {
        if let Some(&i) = self.index.get(word) {
            return Some(i);
        }
        let lower = word.to_lowercase();
        if lower != word {
            self.index.get(&lower).copied()
        } else {
            None
        }
    }

    pub fn lookup(&self, word: &str) -> Option<&[f32]> {
        self.index_of(word).map(|i| self.row(i))
    }

    /// The `k` rows most cosine-similar to `query`, best first. Ties go to
    /// the lower row index. Zero-norm rows score 0.
    pub fn nearest_neighbors(&self, query: &[f64], k: usize) -> Result<Vec<Neighbor<'_>>> {
        if query.len() != self.dim {
            return Err(Error::Domain(format!(
                "query has {} entries, space has dimension {}",
                query.len(),
                self.dim
            )));
        }
        if k == 0 {
            return Err(Error::Domain("k must be positive".into()));
        }
        let qn = vecops::norm(query);
        if qn == 0.0 || !qn.is_finite() {
            return Err(Error::Domain("zero-norm query vector".into()));
        }
        let mut scored: Vec<(f64, usize)> = (0..self.len())
            .map(|i| {
                let rn = self.norms[i];
                let cos = if rn == 0.0 {
                    0.0
                } else {
                    let d: f64 = self
                        .row(i)
                        .iter()
                        .zip(query)
                        .map(|(&a, b)| f64::from(a) * b)
                        .sum();
                    (d / (rn * qn)).clamp(-1.0, 1.0)
                };
                (cos, i)
            })
            .collect();
        let by_rank = |a: &(f64, usize), b: &(f64, usize)| -> Ordering {
            b.0.total_cmp(&a.0).then(a.1.cmp(&b.1))
        };
        let k = k.min(scored.len());
        if k < scored.len() {
            scored.select_nth_unstable_by(k - 1, by_rank);
            scored.truncate(k);
        }
        scored.sort_unstable_by(by_rank);
        Ok(scored
            .into_iter()
            .map(|(cosine, row)| Neighbor {
                word: &self.words[row],
                row,
                cosine,
            })
            .collect())
    }
}

struct Builder {
    dim: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    vectors: Vec<f32>,
}

impl Builder {
    fn new(dim: usize) -> Self {
        Builder {
            dim,
            words: Vec::new(),
            index: HashMap::new(),
            vectors: Vec::new(),
        }
    }

    fn len(&self) -> usize {
        self.words.len()
    }

    fn push(&mut self, word: String, vector: &[f32]) {
        if self.index.contains_key(&word) {
            return;
        }
        self.index.insert(word.clone(), self.words.len());
        self.words.push(word);
        self.vectors.extend_from_slice(vector);
    }

    fn finish(self, lang: String) -> EmbeddingSpace {
        let norms = self
            .vectors
            .chunks_exact(self.dim.max(1))
            .map(|row| {
                row.iter()
                    .map(|&x| f64::from(x) * f64::from(x))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        EmbeddingSpace {
            lang,
            dim: self.dim,
            words: self.words,
            index: self.index,
            vectors: self.vectors,
            norms,
        }
    }
}

fn parse_header(line: &str) -> Option<(usize, usize)> {
    let mut fields = line.split_whitespace();
    let count = fields.next()?.parse().ok()?;
    let dim = fields.next()?.parse().ok()?;
    fields.next().is_none().then_some((count, dim))
}
