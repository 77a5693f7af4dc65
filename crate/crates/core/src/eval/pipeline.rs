//! Learning strategies and the fitted preprocessing chain each one uses:
//! impute, quantize, then either a global design matrix or rule features.

use serde::{Deserialize, Serialize};

use crate::altminers::{default_min_support, mine_assoc_rules, mine_tree_rules, tree_min_leaf, AssocConfig};
use crate::data::{code_matrix, global_design, BinMap, BinnedDataset, Dataset, Imputer};
use crate::error::Result;
use crate::features::{Encoding, LocalFeatureMap, WeightScope};
use crate::learn::{train, ClassifierKind, CodeLayout, HyperParams, Model};
use crate::matrix::Matrix;
use crate::rulemine::{mine, MiningConfig, RuleSet, SizeThreshold, ZVariant};

/// Classifiers trained on top of a representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Classifier {
    L1Lr,
    L2Lr,
    SvmLin,
    SvmRbf,
}

impl Classifier {
    pub const ALL: [Classifier; 4] = [Classifier::L1Lr, Classifier::L2Lr, Classifier::SvmLin, Classifier::SvmRbf];

    pub fn name(self) -> &'static str {
        self.kind().name()
    }

    pub fn kind(self) -> ClassifierKind {
        match self {
            Classifier::L1Lr => ClassifierKind::L1Logistic,
            Classifier::L2Lr => ClassifierKind::L2Logistic,
            Classifier::SvmLin => ClassifierKind::LinearSvm,
            Classifier::SvmRbf => ClassifierKind::RbfSvm,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Classifier::ALL.into_iter().find(|c| c.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    /// Classifier on the quantized original features.
    Global(Classifier),
    /// Classifier on rules of at most `dim` features from the exhaustive miner.
    Rm { dim: usize, clf: Classifier },
    /// Random forest on the bin codes.
    Rf,
    /// Classifier on decision-tree path rules.
    Rmdt(Classifier),
    /// Classifier on association rules.
    Rmar(Classifier),
}

impl Strategy {
    /// Global, RM1D, RMDT and RMAR for every classifier, plus RF.
    pub fn standard_set() -> Vec<Strategy> {
        let mut v = Vec::new();
        for c in Classifier::ALL {
            v.push(Strategy::Global(c));
            v.push(Strategy::Rm { dim: 1, clf: c });
        }
        v.push(Strategy::Rf);
        for c in Classifier::ALL {
            v.push(Strategy::Rmdt(c));
            v.push(Strategy::Rmar(c));
        }
        v
    }

    pub fn name(&self) -> String {
        match self {
            Strategy::Global(c) => format!("global-{}", c.name()),
            Strategy::Rm { dim, clf } => format!("rm{dim}d-{}", clf.name()),
            Strategy::Rf => "rf".into(),
            Strategy::Rmdt(c) => format!("rmdt-{}", c.name()),
            Strategy::Rmar(c) => format!("rmar-{}", c.name()),
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        if s == "rf" {
            return Some(Strategy::Rf);
        }
        let (prefix, clf) = s.split_once('-')?;
        let clf = Classifier::parse(clf)?;
        Some(match prefix {
            "global" => Strategy::Global(clf),
            "rm1d" => Strategy::Rm { dim: 1, clf },
            "rm2d" => Strategy::Rm { dim: 2, clf },
            "rmdt" => Strategy::Rmdt(clf),
            "rmar" => Strategy::Rmar(clf),
            _ => return None,
        })
    }

    pub fn classifier(&self) -> Option<Classifier> {
        match *self {
            Strategy::Global(c) | Strategy::Rm { clf: c, .. } | Strategy::Rmdt(c) | Strategy::Rmar(c) => Some(c),
            Strategy::Rf => None,
        }
    }

    pub fn uses_rules(&self) -> bool {
        matches!(self, Strategy::Rm { .. } | Strategy::Rmdt(_) | Strategy::Rmar(_))
    }

    /// Comparison levels the strategy appears in: 1 is global versus local,
    /// 2 is the forest against local models, 3 is the rule extractors.
    pub fn levels(&self) -> &'static [u8] {
        match self {
            Strategy::Global(_) => &[1],
            Strategy::Rm { dim: 1, .. } => &[1, 2, 3],
            Strategy::Rm { .. } => &[3],
            Strategy::Rf => &[2],
            Strategy::Rmdt(_) | Strategy::Rmar(_) => &[3],
        }
    }
}

/// Settings shared by every pipeline of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineSettings {
    pub bins: usize,
    pub z_min: f64,
    pub z_variant: ZVariant,
    pub weight_scope: WeightScope,
    pub assoc_max_len: usize,
    pub gamma: Option<f64>,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        PipelineSettings {
            bins: 10,
            z_min: 1.96,
            z_variant: ZVariant::AsPrinted,
            weight_scope: WeightScope::PerClass,
            assoc_max_len: 3,
            gamma: None,
        }
    }
}

/// Representation fitted on a training set.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub strategy: Strategy,
    pub imputer: Imputer,
    pub bins: BinMap,
    pub rules: Option<RuleSet>,
    fmap: Option<LocalFeatureMap>,
    pub layout: Option<CodeLayout>,
}

impl Prepared {
    pub fn fit(strategy: Strategy, train: &Dataset, settings: &PipelineSettings) -> Result<Self> {
        let imputer = Imputer::fit(train)?;
        let filled = imputer.apply(train)?;
        let bins = BinMap::fit(&filled, settings.bins)?;
        let binned = bins.apply(&filled)?;
        let mining = MiningConfig {
            max_dimension: 1,
            z_min: settings.z_min,
            n_bins: settings.bins,
            size_threshold: SizeThreshold::PerClass,
            z_variant: settings.z_variant,
        };
        let (rules, encoding) = match strategy {
            Strategy::Global(_) | Strategy::Rf => (None, Encoding::Binary),
            Strategy::Rm { dim, .. } => (
                Some(mine(&binned, &MiningConfig {
                    max_dimension: dim,
                    ..mining
                })?),
                Encoding::Default,
            ),
            Strategy::Rmdt(_) => (
                Some(mine_tree_rules(&binned, tree_min_leaf(&binned, settings.bins), settings.z_variant)?),
                Encoding::Binary,
            ),
            Strategy::Rmar(_) => {
                let config = AssocConfig {
                    min_support: default_min_support(&binned, settings.bins),
                    max_len: settings.assoc_max_len,
                    z_min: settings.z_min,
                    z_variant: settings.z_variant,
                };
                (Some(mine_assoc_rules(&binned, &config, &mining.class_thresholds(&binned))?), Encoding::Binary)
            }
        };
        let fmap = match &rules {
            Some(r) => Some(LocalFeatureMap::fit(r, &bins, encoding, settings.weight_scope)?),
            None => None,
        };
        let layout = matches!(strategy, Strategy::Rf).then(|| CodeLayout::from_binned(&binned));
        Ok(Prepared {
            strategy,
            imputer,
            bins,
            rules,
            fmap,
            layout,
        })
    }

    pub fn binned(&self, ds: &Dataset) -> Result<(Dataset, BinnedDataset)> {
        let filled = self.imputer.apply(ds)?;
        let binned = self.bins.apply(&filled)?;
        Ok((filled, binned))
    }

    /// Model input for any sample set with the training schema.
    pub fn features(&self, ds: &Dataset) -> Result<Matrix> {
        let (filled, binned) = self.binned(ds)?;
        Ok(match (&self.fmap, self.strategy) {
            (Some(map), _) => map.transform(&filled, &binned)?.matrix,
            (None, Strategy::Rf) => code_matrix(&binned),
            (None, _) => global_design(&binned),
        })
    }
}

/// Hyperparameter searched by the grid: C, or the tree count for RF.
pub fn hyper_params(strategy: Strategy, value: f64, settings: &PipelineSettings, seed: u64) -> HyperParams {
    let mut hp = HyperParams {
        gamma: settings.gamma,
        seed,
        ..HyperParams::default()
    };
    match strategy {
        Strategy::Rf => hp.n_trees = value as usize,
        _ => hp.c = value,
    }
    hp
}

pub fn train_on(prepared: &Prepared, x: &Matrix, y: &[usize], n_classes: usize, hp: &HyperParams) -> Result<Model> {
    let kind = match prepared.strategy.classifier() {
        Some(c) => c.kind(),
        None => ClassifierKind::RandomForest,
    };
    train(kind, x, y, n_classes, hp, prepared.layout.as_ref())
}

/// A representation plus the classifier trained on it.
#[derive(Debug, Clone)]
pub struct FittedPipeline {
    pub prepared: Prepared,
    pub model: Model,
}

impl FittedPipeline {
    pub fn fit(strategy: Strategy, train: &Dataset, settings: &PipelineSettings, hp: &HyperParams) -> Result<Self> {
        let prepared = Prepared::fit(strategy, train, settings)?;
        let x = prepared.features(train)?;
        let model = train_on(&prepared, &x, train.labels(), train.n_classes(), hp)?;
        Ok(FittedPipeline { prepared, model })
    }

    pub fn predict(&self, ds: &Dataset) -> Result<Vec<usize>> {
        self.model.predict(&self.prepared.features(ds)?)
    }
}
