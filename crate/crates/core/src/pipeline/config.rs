use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize};

use crate::activations::SelectionPolicy;
use crate::error::{Error, Result};
use crate::induction::InductionConfig;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    /// `child<TAB>parent` hierarchy file.
    pub hierarchy: PathBuf,
    /// `instance_id<TAB>object_label` annotation file.
    pub annotations: PathBuf,
    /// Activations of the probe set used for hypothesis generation.
    pub activations: PathBuf,
    /// Activations of the retrieved target images (confirmation stage).
    #[serde(default)]
    pub target_activations: Option<PathBuf>,
    /// `label_key<TAB>instance_id` manifests of retrieved target images.
    #[serde(default)]
    pub manifests: Vec<PathBuf>,
    /// Activations for the held-out images; defaults to `target_activations`.
    #[serde(default)]
    pub holdout_activations: Option<PathBuf>,
    pub output_dir: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfirmParams {
    /// Activation cut-off as a fraction of the neuron's maximum.
    pub pos_frac: f64,
    /// Fraction of target images that must activate for confirmation.
    pub theta: f64,
}

impl Default for ConfirmParams {
    fn default() -> Self {
        ConfirmParams {
            pos_frac: 0.8,
            theta: 0.8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HoldoutParams {
    pub seed: u64,
    pub train_frac: f64,
}

impl Default for HoldoutParams {
    fn default() -> Self {
        HoldoutParams {
            seed: 0,
            train_frac: 0.8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateParams {
    pub alpha: f64,
    /// Evaluate every neuron with a confirmation result, not only confirmed ones.
    pub include_unconfirmed: bool,
}

impl Default for EvaluateParams {
    fn default() -> Self {
        EvaluateParams {
            alpha: 0.05,
            include_unconfirmed: false,
        }
    }
}

fn default_rank() -> usize {
    1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    #[serde(default, deserialize_with = "policy_from_name_or_table")]
    pub policy: SelectionPolicy,
    #[serde(default)]
    pub induction: InductionConfig,
    #[serde(default)]
    pub confirm: ConfirmParams,
    /// Which ranked hypothesis becomes the neuron's label (1 = best).
    #[serde(default = "default_rank")]
    pub response_rank: usize,
    /// When set, the label is the word list of the top `k` hypotheses.
    #[serde(default)]
    pub label_list: Option<usize>,
    #[serde(default)]
    pub holdout: HoldoutParams,
    #[serde(default)]
    pub evaluate: EvaluateParams,
    /// Edit distance allowed when mapping annotation labels onto classes.
    #[serde(default)]
    pub max_distance: usize,
    /// Worker threads for per-neuron work; defaults to the rayon global pool.
    #[serde(default)]
    pub threads: Option<usize>,
    /// Let the oracle run past the exhaustive-search atom limit.
    #[serde(default)]
    pub force_oracle: bool,
}

fn policy_from_name_or_table<'de, D: Deserializer<'de>>(
    d: D,
) -> std::result::Result<SelectionPolicy, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Name(String),
        Full(SelectionPolicy),
    }
    match Repr::deserialize(d)? {
        Repr::Name(name) => name.parse().map_err(serde::de::Error::custom),
        Repr::Full(p) => Ok(p),
    }
}

/// Command-line overrides applied on top of the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub policy: Option<SelectionPolicy>,
    pub rank: Option<usize>,
    pub top_k: Option<usize>,
    pub seed: Option<u64>,
    pub label_list: Option<usize>,
}

impl RunConfig {
    /// Reads TOML, or JSON when the extension is `.json`. Relative paths are
    /// resolved against the config file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: RunConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        };
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.paths.resolve(base);
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(p) = o.policy {
            self.policy = p;
        }
        if let Some(r) = o.rank {
            self.response_rank = r;
        }
        if let Some(k) = o.top_k {
            self.induction.top_k = k;
        }
        if let Some(s) = o.seed {
            self.holdout.seed = s;
        }
        if let Some(k) = o.label_list {
            self.label_list = Some(k);
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.policy.validate()?;
        self.induction.validate()?;
        let frac = |name: &str, f: f64| {
            if f > 0.0 && f <= 1.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must lie in (0, 1], got {f}")))
            }
        };
        frac("confirm.pos_frac", self.confirm.pos_frac)?;
        frac("confirm.theta", self.confirm.theta)?;
        frac("evaluate.alpha", self.evaluate.alpha)?;
        if !(self.holdout.train_frac > 0.0 && self.holdout.train_frac < 1.0) {
            return Err(Error::Config(format!(
                "holdout.train_frac must lie in (0, 1), got {}",
                self.holdout.train_frac
            )));
        }
        if self.response_rank == 0 {
            return Err(Error::Config("response_rank must be at least 1".into()));
        }
        if self.label_list == Some(0) {
            return Err(Error::Config("label_list must be at least 1".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        Ok(())
    }

    pub(crate) fn require_file(&self, what: &str, path: &Path) -> Result<()> {
        if path.is_file() {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "{what} `{}` does not exist",
                path.display()
            )))
        }
    }

    pub(crate) fn target_activations(&self) -> Result<&Path> {
        self.paths
            .target_activations
            .as_deref()
            .ok_or_else(|| Error::Config("paths.target_activations is required".into()))
    }

    pub(crate) fn holdout_activations(&self) -> Result<&Path> {
        match self.paths.holdout_activations.as_deref() {
            Some(p) => Ok(p),
            None => self.target_activations(),
        }
    }
}

impl Paths {
    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.hierarchy);
        fix(&mut self.annotations);
        fix(&mut self.activations);
        fix(&mut self.output_dir);
        self.target_activations.iter_mut().for_each(fix);
        self.holdout_activations.iter_mut().for_each(fix);
        self.manifests.iter_mut().for_each(fix);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_with_named_policy() {
        let cfg: RunConfig = toml::from_str(
            r#"
            policy = "case2"
            response_rank = 2
            [paths]
            hierarchy = "h.tsv"
            annotations = "a.tsv"
            activations = "act.csv"
            output_dir = "out"
            [induction]
            beam_width = "unbounded"
            "#,
        )
        .unwrap();
        assert_eq!(cfg.policy, SelectionPolicy::case(2).unwrap());
        assert_eq!(cfg.response_rank, 2);
        assert_eq!(cfg.confirm, ConfirmParams::default());
        cfg.validate().unwrap();
    }

    #[test]
    fn table_policy_and_validation() {
        let mut cfg: RunConfig = serde_json::from_str(
            r#"{"paths": {"hierarchy": "h", "annotations": "a", "activations": "c", "output_dir": "o"},
                "policy": {"kind": "fraction_bands", "pos_frac": 0.9, "neg_frac": 0.1}}"#,
        )
        .unwrap();
        assert_eq!(
            cfg.policy,
            SelectionPolicy::FractionBands {
                pos_frac: 0.9,
                neg_frac: 0.1
            }
        );
        cfg.response_rank = 0;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        cfg.apply(&Overrides {
            rank: Some(3),
            ..Default::default()
        });
        cfg.validate().unwrap();
        cfg.holdout.train_frac = 1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        let r: std::result::Result<RunConfig, _> = toml::from_str(
            "bogus = 1\n[paths]\nhierarchy='h'\nannotations='a'\nactivations='c'\noutput_dir='o'\n",
        );
        assert!(r.is_err());
    }
}
