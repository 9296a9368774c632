//! Bundled benchmark models, their task registry and example generators.

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

use serde::Deserialize;

use crate::dsl::{compile, ModelSource};
use crate::ir::{bind_examples, lower, validate_ssa, Example, Graph, IOExamples, InstanceGraph, IrError};

mod generators;

pub use generators::GENERATORS;

const TASKS_JSON: &str = include_str!("../../zoo/tasks.json");

const MODELS: &[(&str, &str)] = &[
    ("automaton.tpt", include_str!("../../zoo/models/automaton.tpt")),
    ("parity_chain.tpt", include_str!("../../zoo/models/parity_chain.tpt")),
    ("turing.tpt", include_str!("../../zoo/models/turing.tpt")),
    ("circuit.tpt", include_str!("../../zoo/models/circuit.tpt")),
    ("basic_block.tpt", include_str!("../../zoo/models/basic_block.tpt")),
    ("assembly.tpt", include_str!("../../zoo/models/assembly.tpt")),
];

#[derive(Debug, thiserror::Error)]
pub enum ZooError {
    #[error("unknown task `{0}`")]
    UnknownTask(String),
    #[error("unknown model file `{0}`")]
    UnknownModel(String),
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("model {model} does not compile:\n{message}")]
    Compile { model: String, message: String },
    #[error("generator {generator}: {message}")]
    Generator { generator: String, message: String },
    #[error(transparent)]
    Ir(#[from] IrError),
}

/// One registry entry.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub name: String,
    pub family: String,
    /// File name under `zoo/models`.
    pub model: String,
    #[serde(default)]
    pub overrides: BTreeMap<String, i64>,
    pub generator: String,
    /// Extra generator parameters (e.g. the longest array to draw).
    #[serde(default)]
    pub args: BTreeMap<String, i64>,
    /// Number of IO examples.
    pub examples: usize,
    /// Unrolled execution steps, for models that have them.
    #[serde(default)]
    pub timesteps: Option<u32>,
    /// Expected size of the program space; the shipped model should land
    /// within half an order of magnitude.
    pub log10_d: f64,
    /// Too large to solve in a routine run.
    #[serde(default)]
    pub stretch: bool,
}

/// All tasks, in registry order.
pub fn list_tasks() -> &'static [TaskSpec] {
    static TASKS: OnceLock<Vec<TaskSpec>> = OnceLock::new();
    TASKS.get_or_init(|| {
        let tasks: Vec<TaskSpec> = serde_json::from_str(TASKS_JSON).expect("bundled task registry is valid JSON");
        for t in &tasks {
            assert!(t.examples >= 1, "task {} has no examples", t.name);
        }
        tasks
    })
}

pub fn find_task(name: &str) -> Result<&'static TaskSpec, ZooError> {
    list_tasks().iter().find(|t| t.name == name).ok_or_else(|| ZooError::UnknownTask(name.to_string()))
}

/// Source text of a bundled model file.
pub fn model_text(file: &str) -> Result<&'static str, ZooError> {
    MODELS
        .iter()
        .find(|(name, _)| *name == file)
        .map(|(_, text)| *text)
        .ok_or_else(|| ZooError::UnknownModel(file.to_string()))
}

/// Names of the bundled model files.
pub fn model_files() -> impl Iterator<Item = &'static str> {
    MODELS.iter().map(|(name, _)| *name)
}

impl TaskSpec {
    /// The model source with the registry overrides, then `extra` on top.
    pub fn source(&self, extra: &[(String, i64)]) -> Result<ModelSource, ZooError> {
        let mut src = ModelSource::new(self.name.clone(), model_text(&self.model)?);
        for (k, v) in self.overrides.iter().map(|(k, v)| (k.clone(), *v)).chain(extra.iter().cloned()) {
            src = src.with_override(k, v);
        }
        Ok(src)
    }

    /// Compile, lower and SSA-check the task's model.
    pub fn load(&self, extra: &[(String, i64)]) -> Result<Task, ZooError> {
        let src = self.source(extra)?;
        let compile_err = |message: String| ZooError::Compile { model: self.model.clone(), message };
        let typed = compile(&src).map_err(|d| compile_err(d.to_string()))?;
        let graph = lower(&typed)?;
        validate_ssa(&graph).map_err(|d| compile_err(d.to_string()))?;
        Ok(Task { spec: self.clone(), graph: Arc::new(graph) })
    }
}

/// A task whose model has been compiled with concrete constants.
#[derive(Clone, Debug)]
pub struct Task {
    pub spec: TaskSpec,
    pub graph: Arc<Graph>,
}

impl Task {
    pub fn constant(&self, name: &str) -> Option<i64> {
        self.graph.constants.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    /// `spec.examples` examples drawn deterministically from `seed`.
    pub fn generate_examples(&self, seed: u64) -> Result<IOExamples, ZooError> {
        let named = generators::run(self, seed)?;
        let mut out = Vec::with_capacity(named.len());
        for ex in named {
            let mut e = Example::default();
            for (name, values) in &ex.inputs {
                self.place(name, values, &mut e.inputs)?;
            }
            for (name, values) in &ex.outputs {
                self.place(name, values, &mut e.outputs)?;
            }
            out.push(e);
        }
        Ok(IOExamples::new(out))
    }

    /// Generated examples bound to the graph.
    pub fn instance(&self, seed: u64) -> Result<InstanceGraph, ZooError> {
        let io = self.generate_examples(seed)?;
        Ok(bind_examples(self.graph.clone(), &io)?)
    }

    fn place(&self, name: &str, values: &[u32], into: &mut BTreeMap<usize, u32>) -> Result<(), ZooError> {
        let err = |message: String| ZooError::Generator { generator: self.spec.generator.clone(), message };
        let decl = self.graph.decl(name).ok_or_else(|| err(format!("model has no declaration `{name}`")))?;
        if decl.num_cells() != values.len() {
            return Err(err(format!("`{name}` has {} cells, generator produced {}", decl.num_cells(), values.len())));
        }
        for (v, &x) in decl.vars().zip(values) {
            into.insert(v, x);
        }
        Ok(())
    }
}

/// Generate examples for a registry task with its default constants.
pub fn generate_examples(task: &TaskSpec, seed: u64) -> Result<IOExamples, ZooError> {
    task.load(&[])?.generate_examples(seed)
}
