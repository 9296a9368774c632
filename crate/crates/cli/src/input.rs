use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::Args;
use synthkit::dsl::{compile, ModelSource};
use synthkit::ir::{bind_examples, lower, validate_ssa, Graph, IOExamples, InstanceGraph, IoFile};
use synthkit::zoo::{find_task, Task};

/// Where the model and its examples come from.
#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// Model source file.
    #[arg(long, conflicts_with = "task", required_unless_present = "task")]
    pub model: Option<PathBuf>,
    /// Bundled benchmark task (see `synthkit tasks`).
    #[arg(long)]
    pub task: Option<String>,
    /// IO examples as JSON. Tasks generate their own when omitted.
    #[arg(long)]
    pub io: Option<PathBuf>,
    /// Override a model constant, e.g. `--const K=8`.
    #[arg(long = "const", value_name = "NAME=INT", value_parser = parse_const)]
    pub consts: Vec<(String, i64)>,
    /// Seed for example generation and randomized backends.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn parse_const(s: &str) -> Result<(String, i64), String> {
    let (name, value) = s.split_once('=').ok_or_else(|| format!("expected NAME=INT, got `{s}`"))?;
    let value = value.trim().parse().map_err(|_| format!("`{value}` is not an integer"))?;
    Ok((name.trim().to_string(), value))
}

pub struct Loaded {
    /// Task name, or the model file stem.
    pub name: String,
    pub graph: Arc<Graph>,
    task: Option<Task>,
}

impl Loaded {
    pub fn load(args: &ModelArgs) -> Result<Loaded> {
        if let Some(name) = &args.task {
            let task = find_task(name)?.load(&args.consts)?;
            return Ok(Loaded { name: name.clone(), graph: task.graph.clone(), task: Some(task) });
        }
        let path = args.model.as_deref().expect("clap requires --model or --task");
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let name = path.file_stem().map_or_else(|| "model".to_string(), |s| s.to_string_lossy().into_owned());
        let mut src = ModelSource::new(name.clone(), text);
        for (k, v) in &args.consts {
            src = src.with_override(k.clone(), *v);
        }
        let typed = compile(&src).map_err(|d| anyhow::anyhow!("{} does not compile:\n{d}", path.display()))?;
        let graph = lower(&typed)?;
        validate_ssa(&graph).map_err(|d| anyhow::anyhow!("{}:\n{d}", path.display()))?;
        Ok(Loaded { name, graph: Arc::new(graph), task: None })
    }

    pub fn examples(&self, args: &ModelArgs) -> Result<IOExamples> {
        match (&args.io, &self.task) {
            (Some(path), _) => read_io(path, &self.graph),
            (None, Some(task)) => Ok(task.generate_examples(args.seed)?),
            (None, None) => bail!("--model needs --io with examples"),
        }
    }

    pub fn instance(&self, args: &ModelArgs) -> Result<InstanceGraph> {
        let io = self.examples(args)?;
        Ok(bind_examples(self.graph.clone(), &io)?)
    }
}

fn read_io(path: &Path, g: &Graph) -> Result<IOExamples> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let file = IoFile::from_json(&text).with_context(|| format!("{} is not a valid examples file", path.display()))?;
    // Examples generated for other sizes would fail in confusing ways later.
    for (name, &value) in &file.constants {
        if let Some((_, actual)) = g.constants.iter().find(|(n, _)| n == name) {
            if *actual != value {
                bail!("{} was written for {name} = {value}, but the model has {name} = {actual}", path.display());
            }
        }
    }
    Ok(file.to_examples(g)?)
}
