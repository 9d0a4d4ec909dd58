//! Python bindings: the tokenizer model plus the template, sharding, and
//! benchmark operations, exposed with plain str/bytes/JSON-string signatures.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;

use tokkit::bench;
use tokkit::codec;
use tokkit::corpus;
use tokkit::pretokenize;
use tokkit::template;
use tokkit::trainer::{self, TrainerConfig};
use tokkit::Error;

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::Io(io) => PyIOError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// Immutable trained tokenizer.
#[pyclass(name = "TokenizerModel", frozen)]
struct PyTokenizerModel {
    inner: tokkit::TokenizerModel,
}

#[pymethods]
impl PyTokenizerModel {
    /// Train from in-memory documents (uniform weight 1.0 each).
    #[staticmethod]
    #[pyo3(signature = (documents, target_vocab, specials=None, min_pair_frequency=2))]
    fn train(
        documents: Vec<String>,
        target_vocab: u32,
        specials: Option<Vec<String>>,
        min_pair_frequency: u64,
    ) -> PyResult<Self> {
        let config = TrainerConfig {
            target_vocab,
            specials: specials
                .unwrap_or_else(|| template::SPECIAL_TOKENS.iter().map(|s| s.to_string()).collect()),
            min_pair_frequency,
            ..TrainerConfig::default()
        };
        let inner = trainer::train(documents.iter().map(|d| (d.as_bytes(), 1.0)), &config)
            .map_err(to_py_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: tokkit::TokenizerModel::load(&path).map_err(to_py_err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(to_py_err)
    }

    #[pyo3(signature = (text, parse_specials=false))]
    fn encode(&self, text: &str, parse_specials: bool) -> Vec<u32> {
        codec::encode(text.as_bytes(), &self.inner, parse_specials)
    }

    /// Encode raw bytes (any byte sequence is encodable).
    #[pyo3(signature = (data, parse_specials=false))]
    fn encode_bytes(&self, data: Vec<u8>, parse_specials: bool) -> Vec<u32> {
        codec::encode(&data, &self.inner, parse_specials)
    }

    /// Decode ids to the exact original bytes.
    fn decode<'py>(&self, py: Python<'py>, ids: Vec<u32>) -> PyResult<Bound<'py, PyBytes>> {
        let bytes = codec::decode(&ids, &self.inner).map_err(to_py_err)?;
        Ok(PyBytes::new(py, &bytes))
    }

    /// Decode ids to text; fails if the bytes are not valid UTF-8.
    fn decode_text(&self, ids: Vec<u32>) -> PyResult<String> {
        let bytes = codec::decode(&ids, &self.inner).map_err(to_py_err)?;
        String::from_utf8(bytes).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    /// Token byte-strings after running the merge fixpoint on one pre-token.
    fn apply_merges<'py>(&self, py: Python<'py>, pretoken: &str) -> Vec<Bound<'py, PyBytes>> {
        codec::apply_merges(pretoken.as_bytes(), &self.inner)
            .iter()
            .map(|t| PyBytes::new(py, t))
            .collect()
    }

    fn token_bytes<'py>(&self, py: Python<'py>, id: u32) -> PyResult<Bound<'py, PyBytes>> {
        Ok(PyBytes::new(py, self.inner.token_bytes(id).map_err(to_py_err)?))
    }

    fn special_id(&self, text: &str) -> Option<u32> {
        self.inner.special_id(text)
    }

    fn bytes_per_token(&self, text: &str) -> PyResult<f64> {
        bench::bytes_per_token(text.as_bytes(), &self.inner).map_err(to_py_err)
    }

    #[getter]
    fn vocab_size(&self) -> u32 {
        self.inner.vocab_size()
    }

    #[getter]
    fn merge_count(&self) -> usize {
        self.inner.merges().len()
    }

    #[getter]
    fn specials(&self) -> Vec<String> {
        self.inner.specials().to_vec()
    }

    #[getter]
    fn unicode_version(&self) -> String {
        self.inner.unicode_version().to_string()
    }

    fn __repr__(&self) -> String {
        format!(
            "TokenizerModel(vocab_size={}, merges={}, specials={})",
            self.inner.vocab_size(),
            self.inner.merges().len(),
            self.inner.specials().len()
        )
    }
}

/// Split text into (bytes, category, offset) pre-token triples.
#[pyfunction]
fn pretokenize_text<'py>(py: Python<'py>, text: &str) -> Vec<(Bound<'py, PyBytes>, String, usize)> {
    pretokenize::split(text.as_bytes())
        .iter()
        .map(|t| {
            (
                PyBytes::new(py, t.bytes),
                format!("{:?}", t.category),
                t.offset,
            )
        })
        .collect()
}

/// Render a conversation (JSON, `{"messages": [...]}`) to template text.
#[pyfunction]
#[pyo3(signature = (conversation_json, add_generation_prompt=false))]
fn render_conversation(conversation_json: &str, add_generation_prompt: bool) -> PyResult<String> {
    let conv: template::Conversation =
        serde_json::from_str(conversation_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    template::render(&conv, add_generation_prompt).map_err(to_py_err)
}

/// Parse template text back to conversation JSON.
#[pyfunction]
fn parse_conversation(text: &str) -> PyResult<String> {
    let conv = template::parse(text.as_bytes()).map_err(to_py_err)?;
    serde_json::to_string(&conv).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Remove think segments from all but the last `keep_last_n` assistant turns.
#[pyfunction]
fn strip_reasoning(conversation_json: &str, keep_last_n: usize) -> PyResult<String> {
    let conv: template::Conversation =
        serde_json::from_str(conversation_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let stripped = template::strip_reasoning(&conv, keep_last_n);
    serde_json::to_string(&stripped).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pyfunction]
fn relative_gain(a: f64, b: f64) -> PyResult<f64> {
    bench::relative_gain(a, b).map_err(to_py_err)
}

#[pyfunction]
fn format_percent(gain: f64) -> String {
    bench::format_percent(gain)
}

/// File subset for one worker under byte-balanced sharding.
#[pyfunction]
fn shard_files(paths: Vec<PathBuf>, worker_index: usize, world_size: usize) -> PyResult<Vec<PathBuf>> {
    corpus::shard_files(&paths, worker_index, world_size).map_err(to_py_err)
}

/// A sampled document: (text, weight, source name).
type SampledDoc = (String, f64, String);

/// Sample a weighted mixture. Returns (documents, stats_json) where each
/// document is a (text, weight, source) triple.
#[pyfunction]
fn sample_mixture(spec_path: PathBuf) -> PyResult<(Vec<SampledDoc>, String)> {
    let spec = corpus::MixtureSpec::load(&spec_path).map_err(to_py_err)?;
    let (docs, stats) = corpus::sample_mixture(&spec).map_err(to_py_err)?;
    let docs = docs.into_iter().map(|d| (d.text, d.weight, d.source)).collect();
    let stats = serde_json::to_string(&stats).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok((docs, stats))
}

#[pymodule]
fn tokkit_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTokenizerModel>()?;
    m.add_function(wrap_pyfunction!(pretokenize_text, m)?)?;
    m.add_function(wrap_pyfunction!(render_conversation, m)?)?;
    m.add_function(wrap_pyfunction!(parse_conversation, m)?)?;
    m.add_function(wrap_pyfunction!(strip_reasoning, m)?)?;
    m.add_function(wrap_pyfunction!(relative_gain, m)?)?;
    m.add_function(wrap_pyfunction!(format_percent, m)?)?;
    m.add_function(wrap_pyfunction!(shard_files, m)?)?;
    m.add_function(wrap_pyfunction!(sample_mixture, m)?)?;
    m.add("SPECIAL_TOKENS", template::SPECIAL_TOKENS.to_vec())?;
    Ok(())
}
