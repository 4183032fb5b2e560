//! Text model format.
//!
//! `<path>` holds the word vectors in the common text layout: a `V dim`
//! header followed by `word v1 … vdim` lines. Two optional sidecars complete
//! the model: `<path>.meta` (configuration, corpus size and word counts) and
//! `<path>.ctx` (output vectors, same layout as `<path>`). A bare vector file
//! without sidecars loads as a query-only model.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{EmbeddingConfig, EmbeddingModel, Matrix, Vocab};
use crate::error::{Error, Result};

/// `<path>.<suffix>`, keeping any extension `path` already has.
pub fn sidecar_path(path: &Path, suffix: &str) -> PathBuf {
    let mut s: OsString = path.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn write_vectors(path: &Path, vocab: &Vocab, matrix: &Matrix) -> Result<()> {
    let mut out = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(out, "{} {}", vocab.len(), matrix.cols()).map_err(io)?;
    for i in 0..vocab.len() {
        out.write_all(vocab.word(i).as_bytes()).map_err(io)?;
        for v in matrix.row(i) {
            // 9 significant digits: exact round trip for f32
            write!(out, " {v:.8e}").map_err(io)?;
        }
        out.write_all(b"\n").map_err(io)?;
    }
    out.flush().map_err(io)
}

fn write_meta(path: &Path, model: &EmbeddingModel) -> Result<()> {
    let mut out = create(path)?;
    let io = |e| Error::io(path, e);
    let c = model.config();
    let vocab = model.vocab();
    writeln!(out, "dim = {}", c.dim).map_err(io)?;
    writeln!(out, "negatives = {}", c.negatives).map_err(io)?;
    writeln!(out, "rho = {}", c.rho).map_err(io)?;
    writeln!(out, "window = {}", c.window).map_err(io)?;
    writeln!(out, "epochs = {}", c.epochs).map_err(io)?;
    writeln!(out, "min_count = {}", c.min_count).map_err(io)?;
    writeln!(out, "initial_lr = {}", c.initial_lr).map_err(io)?;
    writeln!(out, "seed = {}", c.seed).map_err(io)?;
    writeln!(out, "workers = {}", c.workers).map_err(io)?;
    writeln!(out, "total_tokens = {}", vocab.total_tokens()).map_err(io)?;
    writeln!(out, "vocab = {}", vocab.len()).map_err(io)?;
    for (w, n) in vocab.words().iter().zip(vocab.counts()) {
        writeln!(out, "{w} {n}").map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Writes `path`, `path.meta` and `path.ctx`.
pub fn save_model(model: &EmbeddingModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    write_vectors(path, model.vocab(), model.input_vectors())?;
    write_meta(&sidecar_path(path, "meta"), model)?;
    write_vectors(&sidecar_path(path, "ctx"), model.vocab(), model.output_vectors())
}

struct Lines {
    path: PathBuf,
    inner: std::io::Lines<BufReader<File>>,
    number: usize,
}

impl Lines {
    fn open(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(Lines {
            path: path.to_owned(),
            inner: BufReader::new(file).lines(),
            number: 0,
        })
    }

    fn next_line(&mut self) -> Result<Option<String>> {
        match self.inner.next() {
            None => Ok(None),
            Some(Ok(line)) => {
                self.number += 1;
                Ok(Some(line))
            }
            Some(Err(e)) => Err(Error::format(&self.path, self.number + 1, e.to_string())),
        }
    }

    fn expect_line(&mut self, what: &str) -> Result<String> {
        self.next_line()?
            .ok_or_else(|| self.error(format!("unexpected end of file, expected {what}")))
    }

    fn error(&self, message: impl Into<String>) -> Error {
        Error::format(&self.path, self.number.max(1), message)
    }
}

fn parse_num<T: std::str::FromStr>(lines: &Lines, text: &str, what: &str) -> Result<T> {
    text.trim()
        .parse()
        .map_err(|_| lines.error(format!("invalid {what}: {text:?}")))
}

fn read_vectors(path: &Path) -> Result<(Vec<String>, Matrix)> {
    let mut lines = Lines::open(path)?;
    let header = lines.expect_line("`V dim` header")?;
    let mut parts = header.split_whitespace();
    let (Some(v), Some(d), None) = (parts.next(), parts.next(), parts.next()) else {
        return Err(lines.error("header must be `V dim`"));
    };
    let v: usize = parse_num(&lines, v, "vocabulary size")?;
    let dim: usize = parse_num(&lines, d, "dimension")?;
    if dim == 0 {
        return Err(lines.error("dimension must be positive"));
    }

    let mut words = Vec::with_capacity(v);
    let mut data = Vec::with_capacity(v * dim);
    for _ in 0..v {
        let line = lines.expect_line("a vector line")?;
        let mut fields = line.split_whitespace();
        let word = fields.next().ok_or_else(|| lines.error("empty vector line"))?;
        let before = data.len();
        for f in fields {
            data.push(parse_num::<f32>(&lines, f, "vector component")?);
        }
        if data.len() - before != dim {
            return Err(lines.error(format!(
                "expected {dim} components for {word:?}, found {}",
                data.len() - before
            )));
        }
        words.push(word.to_owned());
    }
    while let Some(extra) = lines.next_line()? {
        if !extra.trim().is_empty() {
            return Err(lines.error(format!("header declares {v} vectors but more lines follow")));
        }
    }
    Ok((words, Matrix::from_vec(v, dim, data)?))
}

struct Meta {
    config: EmbeddingConfig,
    total_tokens: u64,
    counts: Vec<(String, u64)>,
}

fn read_meta(path: &Path) -> Result<Meta> {
    let mut lines = Lines::open(path)?;
    let mut config = EmbeddingConfig::default();
    let mut total_tokens = None;
    let vocab_len: usize;
    loop {
        let line = lines.expect_line("`vocab = N`")?;
        let Some((key, value)) = line.split_once('=') else {
            return Err(lines.error("expected `key = value`"));
        };
        let value = value.trim();
        match key.trim() {
            "dim" => config.dim = parse_num(&lines, value, "dim")?,
            "negatives" => config.negatives = parse_num(&lines, value, "negatives")?,
            "rho" => config.rho = parse_num(&lines, value, "rho")?,
            "window" => config.window = parse_num(&lines, value, "window")?,
            "epochs" => config.epochs = parse_num(&lines, value, "epochs")?,
            "min_count" => config.min_count = parse_num(&lines, value, "min_count")?,
            "initial_lr" => config.initial_lr = parse_num(&lines, value, "initial_lr")?,
            "seed" => config.seed = parse_num(&lines, value, "seed")?,
            "workers" => config.workers = parse_num(&lines, value, "workers")?,
            "total_tokens" => total_tokens = Some(parse_num(&lines, value, "total_tokens")?),
            "vocab" => {
                vocab_len = parse_num(&lines, value, "vocab")?;
                break;
            }
            other => return Err(lines.error(format!("unknown key {other:?}"))),
        }
    }
    let total_tokens = total_tokens.ok_or_else(|| lines.error("missing total_tokens"))?;
    let mut counts = Vec::with_capacity(vocab_len);
    for _ in 0..vocab_len {
        let line = lines.expect_line("a `word count` line")?;
        let (word, count) = line
            .split_once(' ')
            .ok_or_else(|| lines.error("expected `word count`"))?;
        counts.push((word.to_owned(), parse_num(&lines, count, "count")?));
    }
    Ok(Meta {
        config,
        total_tokens,
        counts,
    })
}

/// Loads a model written by [`save_model`], or a bare text vector file.
pub fn load_model(path: impl AsRef<Path>) -> Result<EmbeddingModel> {
    let path = path.as_ref();
    let (words, input) = read_vectors(path)?;
    let n = words.len();
    let dim = input.cols();

    let meta_path = sidecar_path(path, "meta");
    let (config, vocab) = if meta_path.exists() {
        let meta = read_meta(&meta_path)?;
        if meta.counts.len() != n
            || meta.counts.iter().zip(&words).any(|((w, _), v)| w != v)
        {
            return Err(Error::format(&meta_path, 1, "vocabulary does not match the vector file"));
        }
        if meta.config.dim != dim {
            return Err(Error::format(&meta_path, 1, "dim does not match the vector file"));
        }
        let counts = meta.counts.into_iter().map(|(_, c)| c).collect();
        (meta.config, Vocab::from_parts(words, counts, meta.total_tokens)?)
    } else {
        let config = EmbeddingConfig {
            dim,
            min_count: 1,
            ..EmbeddingConfig::default()
        };
        (config, Vocab::from_parts(words, vec![1; n], n as u64)?)
    };

    let ctx_path = sidecar_path(path, "ctx");
    let output = if ctx_path.exists() {
        let (ctx_words, output) = read_vectors(&ctx_path)?;
        if ctx_words != vocab.words() || output.cols() != dim {
            return Err(Error::format(&ctx_path, 1, "output vectors do not match the vector file"));
        }
        output
    } else {
        Matrix::zeros(n, dim)
    };
    EmbeddingModel::new(vocab, input, output, config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sidecar_keeps_extension() {
        assert_eq!(
            sidecar_path(Path::new("out/model.vec"), "meta"),
            PathBuf::from("out/model.vec.meta")
        );
    }

    #[test]
    fn wrong_header_count_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.txt");
        std::fs::write(&path, "3 2\na 1 0\nb 0 1\n").unwrap();
        match load_model(&path) {
            Err(Error::Format { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected format error, got {other:?}"),
        }
        std::fs::write(&path, "1 2\na 1 0\nb 0 1\n").unwrap();
        assert!(matches!(load_model(&path), Err(Error::Format { line: 3, .. })));
        std::fs::write(&path, "2 2\na 1 0\nb 0 x\n").unwrap();
        assert!(matches!(load_model(&path), Err(Error::Format { line: 3, .. })));
        std::fs::write(&path, "2\n").unwrap();
        assert!(matches!(load_model(&path), Err(Error::Format { line: 1, .. })));
    }

    #[test]
    fn bare_vector_file_is_queryable() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pretrained.txt");
        std::fs::write(
            &path,
            "5 3\nunited_states_of_america 1 0 0\namerican 1 1 0\ncanada 0 0 1\ncanadian 0 1 1\nfrance 0.5 0 -1\n",
        )
        .unwrap();
        let m = load_model(&path).unwrap();
        assert_eq!(m.vocab().len(), 5);
        assert_eq!(
            m.analogy("american", "united_states_of_america", "canada").unwrap().word,
            "canadian"
        );
    }
}
