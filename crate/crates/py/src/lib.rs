//! Python bindings: `quadgit.Store` wraps a store directory.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use quadgit_core::config::StoreConfig;
use quadgit_core::history::partition_diff;
use quadgit_core::merge::Resolution;
use quadgit_core::provenance::{iso_time, KEY_UPDATE};
use quadgit_core::query::{self, eval_construct, eval_select};
use quadgit_core::rdf::{write_quad_line, Dataset};
use quadgit_core::store::FsStore;
use quadgit_core::{CommitMeta, CommitOutcome, MergeOutcome, MergeStrategy, Repository};

pyo3::create_exception!(quadgit, QuadgitError, PyRuntimeError);

fn err(e: impl std::fmt::Display) -> PyErr {
    QuadgitError::new_err(e.to_string())
}

#[pyclass(module = "quadgit")]
struct Store {
    repo: Repository<FsStore>,
    config: StoreConfig,
    dir: PathBuf,
}

impl Store {
    fn from_fs(fs: FsStore) -> PyResult<Self> {
        let dir = fs.root().to_path_buf();
        let config = StoreConfig::load(&dir).map_err(err)?;
        Ok(Store {
            repo: Repository::new(fs),
            config,
            dir,
        })
    }

    fn meta(&self, message: String) -> CommitMeta {
        CommitMeta::now(&self.config.user.name, &self.config.user.email, message)
    }

    fn branch_or_default(&self, branch: Option<String>) -> String {
        branch.unwrap_or_else(|| self.config.default_branch.clone())
    }

    fn finish_merge(outcome: MergeOutcome) -> (&'static str, String) {
        match outcome {
            MergeOutcome::Committed(id) => ("merged", id.to_hex()),
            MergeOutcome::UpToDate(id) => ("up-to-date", id.to_hex()),
            MergeOutcome::Conflict(c) => ("conflict", c.to_text()),
        }
    }
}

fn strategy(name: &str) -> PyResult<MergeStrategy> {
    name.parse().map_err(|e| PyValueError::new_err(format!("{e}")))
}

fn resolution(text: Option<&str>) -> PyResult<Option<Resolution>> {
    text.map(|t| Resolution::from_text(t).map_err(err)).transpose()
}

fn nquads(dataset: &Dataset) -> String {
    let mut text = String::new();
    for quad in dataset.quads() {
        write_quad_line(&mut text, &quad.triple(), quad.graph.as_deref());
    }
    text
}

#[pymethods]
impl Store {
    /// Creates a store in `path` (or reopens an existing one).
    #[staticmethod]
    #[pyo3(signature = (path, branch = "master"))]
    fn init(path: PathBuf, branch: &str) -> PyResult<Self> {
        let fs = FsStore::init(&path, branch).map_err(err)?;
        let root = fs.root().to_path_buf();
        if !root.join(quadgit_core::config::CONFIG_FILE).exists() {
            let mut config = StoreConfig::load(&root).map_err(err)?;
            config.default_branch = branch.to_owned();
            config.save(&root).map_err(err)?;
        }
        Store::from_fs(fs)
    }

    #[staticmethod]
    fn open(path: PathBuf) -> PyResult<Self> {
        Store::from_fs(FsStore::open(&path).map_err(err)?)
    }

    #[getter]
    fn path(&self) -> PathBuf {
        self.dir.clone()
    }

    #[getter]
    fn default_branch(&self) -> String {
        self.config.default_branch.clone()
    }

    /// Applies a SPARQL update. Returns the new commit id, or None when the
    /// update changed nothing.
    #[pyo3(signature = (update, branch = None))]
    fn update(&self, py: Python<'_>, update: &str, branch: Option<String>) -> PyResult<Option<String>> {
        let request = query::parse_update(update).map_err(|e| PyValueError::new_err(e.to_string()))?;
        let branch = self.branch_or_default(branch);
        let meta = self
            .meta("SPARQL update".into())
            .with_metadata(KEY_UPDATE, update.trim());
        let outcome = py
            .detach(|| self.repo.update(&branch, &request, &meta))
            .map_err(err)?;
        Ok(match outcome {
            CommitOutcome::Committed(id) => Some(id.to_hex()),
            CommitOutcome::NoEffect(_) => None,
        })
    }

    /// Runs a SELECT (list of dicts of N-Triples terms) or CONSTRUCT
    /// (N-Triples text) query against a branch or commit.
    #[pyo3(signature = (query, rev = None))]
    fn query<'py>(&self, py: Python<'py>, query: &str, rev: Option<String>) -> PyResult<Bound<'py, PyAny>> {
        let parsed = query::parse_query(query).map_err(|e| PyValueError::new_err(e.to_string()))?;
        let dataset = self.dataset(rev)?.with_union_default();
        match parsed {
            query::Query::Select(q) => {
                let solutions = eval_select(&dataset, &q);
                let rows = PyList::empty(py);
                for row in &solutions.rows {
                    let dict = PyDict::new(py);
                    for (var, term) in row {
                        dict.set_item(var, term.to_string())?;
                    }
                    rows.append(dict)?;
                }
                Ok(rows.into_any())
            }
            query::Query::Construct(q) => Ok(eval_construct(&dataset, &q)
                .to_ntriples()
                .into_pyobject(py)?
                .into_any()),
        }
    }

    /// The dataset at a branch or commit as N-Quads.
    #[pyo3(signature = (rev = None))]
    fn nquads(&self, rev: Option<String>) -> PyResult<String> {
        Ok(nquads(&self.dataset(rev)?))
    }

    fn resolve(&self, rev: &str) -> PyResult<String> {
        Ok(self.repo.resolve(rev).map_err(err)?.to_hex())
    }

    fn branches(&self) -> PyResult<Vec<(String, String)>> {
        Ok(self
            .repo
            .branches()
            .map_err(err)?
            .into_iter()
            .map(|(name, id)| (name, id.to_hex()))
            .collect())
    }

    /// Creates `name` at `start` (default branch if omitted).
    #[pyo3(signature = (name, start = None))]
    fn branch(&self, name: &str, start: Option<String>) -> PyResult<String> {
        let start = self.branch_or_default(start);
        Ok(self.repo.create_branch(&start, name).map_err(err)?.to_hex())
    }

    /// Commits reachable from `rev`, newest first, as dicts.
    #[pyo3(signature = (rev = None))]
    fn log<'py>(&self, py: Python<'py>, rev: Option<String>) -> PyResult<Bound<'py, PyList>> {
        let out = PyList::empty(py);
        let head = match rev {
            Some(r) => self.repo.resolve(&r).map_err(err)?,
            None => match self.repo.branch_head(&self.config.default_branch).map_err(err)? {
                Some(id) => id,
                None => return Ok(out),
            },
        };
        for (id, record) in self.repo.log(&head).map_err(err)? {
            let entry = PyDict::new(py);
            entry.set_item("id", id.to_hex())?;
            entry.set_item(
                "parents",
                record.parents.iter().map(|p| p.to_hex()).collect::<Vec<_>>(),
            )?;
            entry.set_item("author", &record.author.name)?;
            entry.set_item("email", &record.author.email)?;
            entry.set_item("time", iso_time(&record.committer))?;
            entry.set_item("message", &record.message)?;
            out.append(entry)?;
        }
        Ok(out)
    }

    /// Atomic-graph changes between two revisions in the delta text format.
    fn diff(&self, from: &str, to: &str) -> PyResult<String> {
        let a = self.repo.resolve(from).map_err(err)?;
        let b = self.repo.resolve(to).map_err(err)?;
        let a = self.repo.partitions_at(&a).map_err(err)?;
        let b = self.repo.partitions_at(&b).map_err(err)?;
        Ok(partition_diff(&a, &b).to_text())
    }

    /// Merges `source` into `into`. Returns `(status, value)` where status
    /// is "merged" or "up-to-date" with a commit id, or "conflict" with the
    /// conflict document.
    #[pyo3(signature = (source, into = None, strategy = "three-way", resolution = None))]
    fn merge(
        &self,
        py: Python<'_>,
        source: &str,
        into: Option<String>,
        strategy: &str,
        resolution: Option<&str>,
    ) -> PyResult<(&'static str, String)> {
        let into = self.branch_or_default(into);
        let strategy = self::strategy(strategy)?;
        let resolution = self::resolution(resolution)?;
        let meta = self.meta(format!("Merge {source} into {into}"));
        let options = self.config.context_options();
        let outcome = py
            .detach(|| {
                self.repo
                    .merge(&into, source, strategy, &meta, resolution.as_ref(), options)
            })
            .map_err(err)?;
        Ok(Store::finish_merge(outcome))
    }

    /// Undoes `commit` on `branch`; same return shape as `merge`.
    #[pyo3(signature = (commit, branch = None, strategy = "three-way", resolution = None))]
    fn revert(
        &self,
        commit: &str,
        branch: Option<String>,
        strategy: &str,
        resolution: Option<&str>,
    ) -> PyResult<(&'static str, String)> {
        let branch = self.branch_or_default(branch);
        let id = self.repo.resolve(commit).map_err(err)?;
        let strategy = self::strategy(strategy)?;
        let resolution = self::resolution(resolution)?;
        let meta = self.meta(format!("Revert {id}"));
        let outcome = self
            .repo
            .revert(&branch, &id, strategy, &meta, resolution.as_ref(), self.config.context_options())
            .map_err(err)?;
        Ok(Store::finish_merge(outcome))
    }

    fn __repr__(&self) -> String {
        format!("Store({:?})", self.dir.display().to_string())
    }
}

impl Store {
    fn dataset(&self, rev: Option<String>) -> PyResult<Dataset> {
        let id = match rev {
            Some(r) => Some(self.repo.resolve(&r).map_err(err)?),
            None => self
                .repo
                .branch_head(&self.config.default_branch)
                .map_err(err)?,
        };
        match id {
            Some(id) => self.repo.dataset_at(&id).map_err(err),
            None => Ok(Dataset::new()),
        }
    }
}

/// Resolution document that keeps one side of every conflict.
#[pyfunction]
#[pyo3(signature = (conflict, side = "ours"))]
fn resolve_all(conflict: &str, side: &str) -> PyResult<String> {
    let conflict = quadgit_core::merge::DatasetConflict::from_text(conflict).map_err(err)?;
    let resolution = match side {
        "ours" => Resolution::keep_ours(&conflict),
        "theirs" => Resolution::keep_theirs(&conflict),
        "all" => Resolution::keep_all(&conflict),
        other => return Err(PyValueError::new_err(format!("unknown side {other:?}"))),
    };
    Ok(resolution.to_text())
}

#[pymodule]
fn quadgit(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Store>()?;
    m.add_function(wrap_pyfunction!(resolve_all, m)?)?;
    m.add("QuadgitError", m.py().get_type::<QuadgitError>())?;
    Ok(())
}
