use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ctbn::{CtbnModel, CtbnNode, InitialSpec};
use crate::error::{Error, Result};
use crate::process::{Generator, InitialDistribution, Layout};

/// On-disk layout name.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayoutName {
    #[default]
    Dense,
    Sparse,
}

impl From<LayoutName> for Layout {
    fn from(l: LayoutName) -> Self {
        match l {
            LayoutName::Dense => Layout::Dense,
            LayoutName::Sparse => Layout::Sparse,
        }
    }
}

impl From<Layout> for LayoutName {
    fn from(l: Layout) -> Self {
        match l {
            Layout::Dense => LayoutName::Dense,
            Layout::Sparse => LayoutName::Sparse,
        }
    }
}

/// MJP model file: `{"n": 3, "rates": [[0, 1, 0.5], ...], "pi": [...]}`.
/// Rates are `[from, to, rate]` triples; `layout` is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MjpModelFile {
    pub n: usize,
    pub rates: Vec<(usize, usize, f64)>,
    pub pi: Vec<f64>,
    #[serde(default)]
    pub layout: LayoutName,
}

impl MjpModelFile {
    pub fn from_model(generator: &Generator<f64>, initial: &InitialDistribution<f64>) -> Self {
        Self {
            n: generator.n(),
            rates: generator.triplets(),
            pi: initial.weights().to_vec(),
            layout: generator.layout().into(),
        }
    }

    pub fn build(&self) -> Result<(Generator<f64>, InitialDistribution<f64>)> {
        let generator = Generator::from_rates(self.n, self.rates.iter().copied(), self.layout.into())?;
        if self.pi.len() != self.n {
            return Err(Error::Config(format!(
                "pi has {} entries for {} states",
                self.pi.len(),
                self.n
            )));
        }
        let initial = InitialDistribution::new(self.pi.clone())?;
        Ok((generator, initial))
    }
}

pub fn read_mjp_model(path: &Path) -> Result<(Generator<f64>, InitialDistribution<f64>)> {
    let file: MjpModelFile = serde_json::from_str(&fs::read_to_string(path)?)?;
    file.build()
}

pub fn write_mjp_model(
    path: &Path,
    generator: &Generator<f64>,
    initial: &InitialDistribution<f64>,
) -> Result<()> {
    let file = MjpModelFile::from_model(generator, initial);
    fs::write(path, serde_json::to_string_pretty(&file)?)?;
    Ok(())
}

/// One node of a CTBN model file. `rates[u]` holds the `[from, to, rate]`
/// triples of the generator for parent configuration `u`, where `u` is the
/// mixed-radix index of the parents' states in `parents` order, first parent
/// least significant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CtbnNodeFile {
    pub name: String,
    pub states: usize,
    #[serde(default)]
    pub parents: Vec<usize>,
    pub rates: Vec<Vec<(usize, usize, f64)>>,
}

/// Initial distribution of a CTBN model file: per-node marginals, or a joint
/// table indexed mixed-radix with node 0 least significant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CtbnInitialFile {
    Product(Vec<Vec<f64>>),
    Joint(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CtbnModelFile {
    pub nodes: Vec<CtbnNodeFile>,
    pub initial: CtbnInitialFile,
    #[serde(default)]
    pub layout: LayoutName,
}

impl CtbnModelFile {
    pub fn from_model(model: &CtbnModel<f64>) -> Self {
        let nodes = model
            .nodes()
            .iter()
            .map(|node| CtbnNodeFile {
                name: node.name.clone(),
                states: node.states,
                parents: node.parents.clone(),
                rates: node.generators.iter().map(|g| g.triplets()).collect(),
            })
            .collect();
        let initial = match model.initial() {
            InitialSpec::Product(m) => {
                CtbnInitialFile::Product(m.iter().map(|d| d.weights().to_vec()).collect())
            }
            InitialSpec::Joint(t) => CtbnInitialFile::Joint(t.clone()),
        };
        let layout = model.node(0).generators[0].layout().into();
        Self {
            nodes,
            initial,
            layout,
        }
    }

    pub fn build(&self) -> Result<CtbnModel<f64>> {
        let layout: Layout = self.layout.into();
        let nodes = self
            .nodes
            .iter()
            .map(|n| {
                let generators = n
                    .rates
                    .iter()
                    .map(|r| Generator::from_rates(n.states, r.iter().copied(), layout))
                    .collect::<Result<Vec<_>>>()?;
                Ok(CtbnNode::new(n.name.clone(), n.states, n.parents.clone(), generators))
            })
            .collect::<Result<Vec<_>>>()?;
        let initial = match &self.initial {
            CtbnInitialFile::Product(m) => InitialSpec::Product(
                m.iter()
                    .map(|w| InitialDistribution::new(w.clone()))
                    .collect::<Result<_>>()?,
            ),
            CtbnInitialFile::Joint(t) => InitialSpec::Joint(t.clone()),
        };
        CtbnModel::new(nodes, initial)
    }
}

pub fn read_ctbn_model(path: &Path) -> Result<CtbnModel<f64>> {
    let file: CtbnModelFile = serde_json::from_str(&fs::read_to_string(path)?)?;
    file.build()
}

pub fn write_ctbn_model(path: &Path, model: &CtbnModel<f64>) -> Result<()> {
    fs::write(path, ctbn_model_json(model)?)?;
    Ok(())
}

/// Pretty JSON text of a CTBN model file.
pub fn ctbn_model_json(model: &CtbnModel<f64>) -> Result<String> {
    Ok(serde_json::to_string_pretty(&CtbnModelFile::from_model(model))?)
}
