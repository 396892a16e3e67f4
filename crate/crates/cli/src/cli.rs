//! The `quadgit` command line.
//!
//! Exit status: 0 on success, 1 on any user or repository error, 2 when a
//! merge, revert or pull stops on conflicts (the conflict document is
//! written to `--conflict-out`).

use std::ffi::OsString;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use quadgit_core::config::RemoteConfig;
use quadgit_core::history::{partition_dataset, partition_diff};
use quadgit_core::merge::Resolution;
use quadgit_core::provenance::{blame, blame_lines, build_provenance, iso_time, parse_metadata};
use quadgit_core::query::{self, eval_construct, eval_select, solutions_to_json};
use quadgit_core::rdf::{parse_nquads, write_quad_line, Dataset, Quad};
use quadgit_core::sync::{self, PullOutcome};
use quadgit_core::{CommitOutcome, MergeOutcome, MergeStrategy, PartitionedDataset};
use thiserror::Error;

use crate::{OpenError, Store};

#[derive(Debug, Parser)]
#[command(name = "quadgit", version, about = "Versioned RDF quad store on a Git object store")]
pub struct Cli {
    /// Store directory.
    #[arg(long, global = true, env = "QUADGIT_STORE", default_value = ".")]
    pub store: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create an empty store.
    Init {
        #[arg(long, default_value = "master")]
        branch: String,
    },
    /// Replace the graphs found in an N-Quads file.
    Import {
        file: PathBuf,
        /// Graph for statements without one.
        #[arg(long)]
        graph: Option<String>,
        /// Recorded as the `Source` of the import.
        #[arg(long)]
        source: Option<String>,
        #[arg(long)]
        branch: Option<String>,
        #[arg(short, long)]
        message: Option<String>,
    },
    /// Apply a SPARQL update and commit the effective change.
    Commit {
        /// Update text, or a file containing it.
        #[arg(long)]
        update: String,
        #[arg(long)]
        branch: Option<String>,
    },
    /// Evaluate a SELECT or CONSTRUCT query.
    Query {
        query: String,
        /// Branch or commit; defaults to the default branch.
        #[arg(long)]
        rev: Option<String>,
    },
    /// List branches, or create one.
    Branch {
        name: Option<String>,
        /// Start point; defaults to the default branch.
        from: Option<String>,
    },
    /// Merge a revision into a branch.
    Merge {
        source: String,
        #[arg(long)]
        into: Option<String>,
        #[command(flatten)]
        merge: MergeArgs,
    },
    /// Undo a commit on a branch.
    Revert {
        commit: String,
        #[arg(long)]
        branch: Option<String>,
        #[command(flatten)]
        merge: MergeArgs,
    },
    /// Commits reachable from a revision, newest first.
    Log { rev: Option<String> },
    /// Atomic-graph changes between two revisions.
    Diff { from: String, to: String },
    /// The commits that introduced each statement.
    Blame { commit: Option<String> },
    /// Print the provenance graph as N-Quads.
    Provenance,
    /// Run the HTTP service.
    Serve {
        /// Overrides the configured bind address.
        #[arg(long)]
        bind: Option<SocketAddr>,
    },
    /// Fast-forward a remote branch to a local one.
    Push {
        remote: String,
        /// `<local>[:<remote branch>]`; defaults to the default branch.
        spec: Option<String>,
    },
    /// Copy a remote branch into its tracking ref.
    Fetch { remote: String, branch: String },
    /// Fetch, then fast-forward or merge into a local branch.
    Pull {
        remote: String,
        branch: String,
        #[arg(long)]
        into: Option<String>,
        #[command(flatten)]
        merge: MergeArgs,
    },
    /// Manage remotes.
    Remote {
        #[command(subcommand)]
        action: RemoteAction,
    },
}

#[derive(Debug, Args)]
pub struct MergeArgs {
    #[arg(long, default_value = "three-way")]
    strategy: MergeStrategy,
    /// Resolution document for a previously reported conflict.
    #[arg(long)]
    resolution: Option<PathBuf>,
    /// Where the conflict document is written.
    #[arg(long, default_value = "quadgit-conflict.txt")]
    conflict_out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum RemoteAction {
    Add { name: String, url: String },
    Remove { name: String },
    List,
}

#[derive(Debug, Error)]
pub enum Failure {
    #[error(transparent)]
    Open(#[from] OpenError),
    #[error(transparent)]
    Repo(#[from] quadgit_core::Error),
    #[error(transparent)]
    Query(#[from] query::QueryError),
    #[error(transparent)]
    Config(#[from] quadgit_core::config::ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("merge stopped on conflicts; see {}", .0.display())]
    Conflict(PathBuf),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Conflict(_) => 2,
            _ => 1,
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|source| Failure::Io {
        path: path.to_owned(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|source| Failure::Io {
        path: path.to_owned(),
        source,
    })
}

/// Parses `argv` and runs the command, writing results to stdout.
pub fn main_with<I, T>(argv: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let stdout = std::io::stdout();
    match run(cli, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), Failure> {
    if let Command::Init { branch } = &cli.command {
        let store = Store::init(&cli.store, branch)?;
        let _ = writeln!(out, "initialized store in {}", store.dir.display());
        return Ok(());
    }
    let store = Store::open(&cli.store)?;
    let default = store.config.default_branch.clone();
    let or_default = |b: &Option<String>| b.clone().unwrap_or_else(|| default.clone());
    match cli.command {
        Command::Init { .. } => unreachable!(),
        Command::Import {
            file,
            graph,
            source,
            branch,
            message,
        } => {
            let text = std::fs::read(&file).map_err(|source| Failure::Io {
                path: file.clone(),
                source,
            })?;
            let parsed = parse_nquads(&text).map_err(|e| Failure::Usage(format!("{}: {e}", file.display())))?;
            let dataset = into_graph(parsed, graph.as_deref())?;
            let message = message.unwrap_or_else(|| format!("Import {}", file.display()));
            let meta = store.import_meta(&message, source.as_deref());
            let outcome = import(&store, &or_default(&branch), &dataset, &meta)?;
            report_commit(out, outcome);
        }
        Command::Commit { update, branch } => {
            let text = if Path::new(&update).is_file() {
                read(Path::new(&update))?
            } else {
                update
            };
            let request = query::parse_update(&text)?;
            let outcome = store
                .repo
                .update(&or_default(&branch), &request, &store.update_meta(&text))?;
            report_commit(out, outcome);
        }
        Command::Query { query: text, rev } => {
            let id = match rev {
                Some(r) => Some(store.repo.resolve(&r)?),
                None => store.repo.branch_head(&default)?,
            };
            let dataset = match id {
                Some(id) => store.repo.dataset_at(&id)?,
                None => Dataset::new(),
            }
            .with_union_default();
            match query::parse_query(&text)? {
                query::Query::Select(q) => {
                    let _ = writeln!(out, "{:#}", solutions_to_json(&eval_select(&dataset, &q)));
                }
                query::Query::Construct(q) => {
                    let _ = write!(out, "{}", eval_construct(&dataset, &q).to_ntriples());
                }
            }
        }
        Command::Branch { name: None, .. } => {
            for (name, id) in store.repo.branches()? {
                let mark = if name == default { '*' } else { ' ' };
                let _ = writeln!(out, "{mark} {name} {id}");
            }
        }
        Command::Branch {
            name: Some(name),
            from,
        } => {
            let id = store.repo.create_branch(&or_default(&from), &name)?;
            let _ = writeln!(out, "{name} {id}");
        }
        Command::Merge {
            source,
            into,
            merge,
        } => {
            let into = or_default(&into);
            let resolution = load_resolution(&merge)?;
            let meta = store.meta(format!("Merge {source} into {into}"));
            let outcome = store.repo.merge(
                &into,
                &source,
                merge.strategy,
                &meta,
                resolution.as_ref(),
                store.config.context_options(),
            )?;
            report_merge(out, outcome, &merge)?;
        }
        Command::Revert {
            commit,
            branch,
            merge,
        } => {
            let id = store.repo.resolve(&commit)?;
            let resolution = load_resolution(&merge)?;
            let meta = store.meta(format!("Revert {id}"));
            let outcome = store.repo.revert(
                &or_default(&branch),
                &id,
                merge.strategy,
                &meta,
                resolution.as_ref(),
                store.config.context_options(),
            )?;
            report_merge(out, outcome, &merge)?;
        }
        Command::Log { rev } => {
            let head = match rev {
                Some(r) => store.repo.resolve(&r)?,
                None => match store.repo.branch_head(&default)? {
                    Some(id) => id,
                    None => return Ok(()),
                },
            };
            for (id, record) in store.repo.log(&head)? {
                let (_, prose) = parse_metadata(&record.message);
                let subject = prose
                    .lines()
                    .chain(record.message.lines())
                    .find(|l| !l.trim().is_empty())
                    .unwrap_or("");
                let _ = writeln!(
                    out,
                    "{id} {} {} <{}> {subject}",
                    iso_time(&record.committer),
                    record.author.name,
                    record.author.email
                );
            }
        }
        Command::Diff { from, to } => {
            let a = store.repo.partitions_at(&store.repo.resolve(&from)?)?;
            let b = store.repo.partitions_at(&store.repo.resolve(&to)?)?;
            let _ = write!(out, "{}", partition_diff(&a, &b).to_text());
        }
        Command::Blame { commit } => {
            let at = store.repo.resolve(commit.as_deref().unwrap_or("HEAD"))?;
            for line in blame_lines(&blame(&store.repo, &at)?) {
                let _ = writeln!(out, "{line}");
            }
        }
        Command::Provenance => {
            let dataset = build_provenance(&store.repo, &store.config.provenance_options())?;
            let mut text = String::new();
            for quad in dataset.quads() {
                write_quad_line(&mut text, &quad.triple(), quad.graph.as_deref());
            }
            let _ = write!(out, "{text}");
        }
        Command::Serve { bind } => {
            let addr: SocketAddr = match bind {
                Some(a) => a,
                None => store.config.bind.parse().map_err(|_| {
                    Failure::Usage(format!("invalid bind address {:?}", store.config.bind))
                })?,
            };
            serve(store, addr)?;
        }
        Command::Push { remote, spec } => {
            let spec = spec.unwrap_or_else(|| default.clone());
            let (local, remote_branch) = spec.split_once(':').unwrap_or((&spec, &spec));
            let target = store.remote(&remote)?;
            let id = sync::push(&store.repo, &remote, &target, local, remote_branch)?;
            let _ = writeln!(out, "{remote}/{remote_branch} {id}");
        }
        Command::Fetch { remote, branch } => {
            let source = store.remote(&remote)?;
            let fetched = sync::fetch(&store.repo, &remote, &source, &branch)?;
            let _ = writeln!(
                out,
                "{remote}/{branch} {} ({} objects copied)",
                fetched.head, fetched.copied
            );
        }
        Command::Pull {
            remote,
            branch,
            into,
            merge,
        } => {
            let into = or_default(&into);
            let source = store.remote(&remote)?;
            let resolution = load_resolution(&merge)?;
            let meta = store.meta(format!("Merge {remote}/{branch} into {into}"));
            let outcome = sync::pull(
                &store.repo,
                &remote,
                &source,
                &branch,
                &into,
                merge.strategy,
                &meta,
                resolution.as_ref(),
                store.config.context_options(),
            )?;
            match outcome {
                PullOutcome::FastForward(id) => {
                    let _ = writeln!(out, "fast-forward {id}");
                }
                PullOutcome::Merged(m) => report_merge(out, m, &merge)?,
            }
        }
        Command::Remote { action } => {
            let mut config = store.config.clone();
            match action {
                RemoteAction::Add { name, url } => {
                    if config.remotes.contains_key(&name) {
                        return Err(Failure::Usage(format!("remote {name:?} already exists")));
                    }
                    config.remotes.insert(name, RemoteConfig { url });
                    config.save(&store.dir)?;
                }
                RemoteAction::Remove { name } => {
                    if config.remotes.remove(&name).is_none() {
                        return Err(quadgit_core::Error::UnknownRemote(name).into());
                    }
                    config.save(&store.dir)?;
                }
                RemoteAction::List => {
                    for (name, remote) in &config.remotes {
                        let _ = writeln!(out, "{name} {}", remote.url);
                    }
                }
            }
        }
    }
    Ok(())
}

/// Statements without a graph go to `graph`; without one they are rejected.
fn into_graph(parsed: Dataset, graph: Option<&str>) -> Result<Dataset, Failure> {
    let mut out = Dataset::new();
    for quad in parsed.quads() {
        let name = match (&quad.graph, graph) {
            (Some(g), _) => g.clone(),
            (None, Some(g)) => g.to_owned(),
            (None, None) => {
                return Err(Failure::Usage(
                    "statements without a graph need --graph <iri>".into(),
                ))
            }
        };
        out.insert(Quad::new(quad.triple(), Some(name)));
    }
    Ok(out)
}

/// Replaces every graph present in `dataset`; other graphs stay as they are.
fn import(
    store: &Store,
    branch: &str,
    dataset: &Dataset,
    meta: &quadgit_core::CommitMeta,
) -> Result<CommitOutcome, Failure> {
    let head = store.repo.branch_head(branch)?;
    let current = store.repo.partitions_of(head.as_ref())?;
    let incoming = partition_dataset(dataset)?;
    let before: PartitionedDataset = incoming
        .keys()
        .filter_map(|g| current.get(g).map(|p| (g.clone(), p.clone())))
        .collect();
    let delta = partition_diff(&before, &incoming);
    Ok(store.repo.commit_change_on(branch, head, &delta, meta)?)
}

fn load_resolution(args: &MergeArgs) -> Result<Option<Resolution>, Failure> {
    match &args.resolution {
        Some(path) => Ok(Some(Resolution::from_text(&read(path)?)?)),
        None => Ok(None),
    }
}

fn report_commit(out: &mut dyn Write, outcome: CommitOutcome) {
    let _ = match outcome {
        CommitOutcome::Committed(id) => writeln!(out, "{id}"),
        CommitOutcome::NoEffect(Some(id)) => writeln!(out, "no effect; head stays at {id}"),
        CommitOutcome::NoEffect(None) => writeln!(out, "no effect"),
    };
}

fn report_merge(out: &mut dyn Write, outcome: MergeOutcome, args: &MergeArgs) -> Result<(), Failure> {
    match outcome {
        MergeOutcome::Committed(id) => {
            let _ = writeln!(out, "{id}");
            Ok(())
        }
        MergeOutcome::UpToDate(id) => {
            let _ = writeln!(out, "already up to date at {id}");
            Ok(())
        }
        MergeOutcome::Conflict(c) => {
            write(&args.conflict_out, &c.to_text())?;
            Err(Failure::Conflict(args.conflict_out.clone()))
        }
    }
}

fn serve(store: Store, addr: SocketAddr) -> Result<(), Failure> {
    let _ = tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| "info".into()),
        )
        .try_init();
    let runtime = tokio::runtime::Runtime::new().map_err(|source| Failure::Io {
        path: PathBuf::from(addr.to_string()),
        source,
    })?;
    runtime
        .block_on(crate::service::serve(Arc::new(store), addr))
        .map_err(|source| Failure::Io {
            path: PathBuf::from(addr.to_string()),
            source,
        })
}
