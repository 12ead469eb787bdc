//! hypothesize → confirm → evaluate, plus the heuristic-vs-exhaustive oracle.
//!
//! Every stage reads its inputs from files and writes its outputs into
//! `paths.output_dir`:
//!
//! | stage        | reads                                   | writes                                  |
//! |--------------|-----------------------------------------|-----------------------------------------|
//! | hypothesize  | hierarchy, annotations, activations     | `hypotheses.json`, `hypotheses.csv`     |
//! | confirm      | `hypotheses.json`, manifests, target activations | `confirmation.json`, `confirmation.md` |
//! | evaluate     | `confirmation.json`, holdout activations | `evaluation.json`, `evaluation.md`     |
//! | oracle       | hierarchy, annotations, activations     | `oracle.json`                           |

mod config;
mod report;

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use log::{info, warn};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

pub use config::{ConfirmParams, EvaluateParams, HoldoutParams, Overrides, Paths, RunConfig};
pub use report::*;

use crate::activations::{
    confirm_values, profile_neuron, split_holdout, ActivationMatrix, NeuronStatus,
};
use crate::error::{Error, Result};
use crate::hierarchy::{load_annotation_pairs, map_annotations, AnnotationStore, ClassHierarchy};
use crate::induction::{induce, induce_exhaustive, ScoredHypothesis};
use crate::stats::mann_whitney;

pub const HYPOTHESES_JSON: &str = "hypotheses.json";
pub const HYPOTHESES_CSV: &str = "hypotheses.csv";
pub const CONFIRMATION_JSON: &str = "confirmation.json";
pub const CONFIRMATION_MD: &str = "confirmation.md";
pub const EVALUATION_JSON: &str = "evaluation.json";
pub const EVALUATION_MD: &str = "evaluation.md";
pub const ORACLE_JSON: &str = "oracle.json";

/// Canonical manifest key for a label: names sorted, deduplicated, joined by `", "`.
pub fn label_key<S: AsRef<str>>(names: impl IntoIterator<Item = S>) -> String {
    let mut v: Vec<String> = names
        .into_iter()
        .map(|s| s.as_ref().trim().to_owned())
        .filter(|s| !s.is_empty())
        .collect();
    v.sort();
    v.dedup();
    v.join(", ")
}

/// Normalizes a label written as `a, b`, `a,b` or `a ⊓ b`.
pub fn parse_label_key(raw: &str) -> String {
    label_key(raw.split([',', '⊓']))
}

/// Reads `label_key<TAB>instance_id` lines.
pub fn read_manifest<R: BufRead>(reader: R) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Malformed {
            line: i + 1,
            reason: e.to_string(),
        })?;
        let record = line.trim_end_matches('\r');
        if record.trim().is_empty() || record.starts_with('#') {
            continue;
        }
        match record.split_once('\t') {
            Some((key, id)) if !key.trim().is_empty() && !id.trim().is_empty() => {
                out.push((parse_label_key(key), id.trim().to_owned()));
            }
            _ => {
                return Err(Error::Malformed {
                    line: i + 1,
                    reason: "expected `label_key<TAB>instance_id`".into(),
                })
            }
        }
    }
    Ok(out)
}

/// Merges manifests into label key → instances (first-seen order, no repeats).
pub fn load_manifests(paths: &[impl AsRef<Path>]) -> Result<BTreeMap<String, Vec<String>>> {
    let mut pools: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut seen: HashSet<(String, String)> = HashSet::new();
    for path in paths {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        for (key, id) in read_manifest(BufReader::new(file))? {
            if seen.insert((key.clone(), id.clone())) {
                pools.entry(key).or_default().push(id);
            }
        }
    }
    Ok(pools)
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(dir, name, &text)
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn thread_pool(cfg: &RunConfig) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.threads {
        b = b.num_threads(n);
    }
    b.build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Hierarchy, mapped annotations and the probe activations. Activation rows
/// without annotations get an empty class set.
pub struct Knowledge {
    pub hierarchy: ClassHierarchy,
    pub store: AnnotationStore,
    pub activations: ActivationMatrix,
    pub unannotated: usize,
}

pub fn load_knowledge(cfg: &RunConfig) -> Result<Knowledge> {
    cfg.require_file("hierarchy", &cfg.paths.hierarchy)?;
    cfg.require_file("annotations", &cfg.paths.annotations)?;
    cfg.require_file("activations", &cfg.paths.activations)?;
    let hierarchy = ClassHierarchy::load(&cfg.paths.hierarchy)?;
    info!(
        "hierarchy: {} classes, {} edges",
        hierarchy.len(),
        hierarchy.edge_count()
    );
    let pairs = load_annotation_pairs(&cfg.paths.annotations)?;
    let mut store = map_annotations(pairs, &hierarchy, cfg.max_distance);
    if !store.unmapped().is_empty() {
        warn!(
            "{} distinct annotation labels matched no class",
            store.unmapped().len()
        );
    }
    let activations = ActivationMatrix::load(&cfg.paths.activations)?;
    let mut unannotated = 0;
    for id in activations.instances() {
        if !store.contains(id) {
            store.insert_instance(id);
            unannotated += 1;
        }
    }
    if unannotated > 0 {
        warn!("{unannotated} activation rows have no annotations; treated as empty class sets");
    }
    Ok(Knowledge {
        hierarchy,
        store,
        activations,
        unannotated,
    })
}

fn records(
    h: &ClassHierarchy,
    neuron: usize,
    ranked: &[ScoredHypothesis],
) -> Vec<HypothesisRecord> {
    ranked
        .iter()
        .map(|s| HypothesisRecord {
            neuron,
            rank: s.rank,
            atoms: s
                .expression
                .names(h)
                .into_iter()
                .map(str::to_owned)
                .collect(),
            z1: s.z1,
            z2: s.z2,
            coverage: s.coverage,
        })
        .collect()
}

/// Picks the label carried into confirmation: the hypothesis at
/// `response_rank`, or the word list of the top `label_list` hypotheses.
pub fn choose_label(
    hypotheses: &[HypothesisRecord],
    response_rank: usize,
    label_list: Option<usize>,
) -> Option<ChosenLabel> {
    match label_list {
        Some(k) => {
            let top = hypotheses.iter().take(k);
            let mut words: Vec<String> = Vec::new();
            for h in top {
                for a in &h.atoms {
                    if !words.contains(a) {
                        words.push(a.clone());
                    }
                }
            }
            let first = hypotheses.first()?;
            Some(ChosenLabel {
                rank: None,
                label: words.join(", "),
                label_key: label_key(&words),
                atoms: words,
                coverage: first.coverage,
            })
        }
        None => {
            let h = hypotheses.get(response_rank.checked_sub(1)?)?;
            Some(ChosenLabel {
                rank: Some(h.rank),
                label: h.atoms.join(", "),
                label_key: label_key(&h.atoms),
                atoms: h.atoms.clone(),
                coverage: h.coverage,
            })
        }
    }
}

enum NeuronOutcome {
    Ranked(NeuronHypotheses),
    Skipped(SkippedNeuron),
}

/// Profiles every neuron and induces ranked hypotheses for the active ones.
pub fn hypothesize(cfg: &RunConfig, k: &Knowledge) -> Result<HypothesisReport> {
    cfg.validate()?;
    let pool = thread_pool(cfg)?;
    let outcomes: Vec<Result<NeuronOutcome>> = pool.install(|| {
        (0..k.activations.n_neurons())
            .into_par_iter()
            .map(|j| {
                let profile = profile_neuron(&k.activations, j, &cfg.policy)?;
                if profile.status == NeuronStatus::Dead {
                    return Ok(NeuronOutcome::Skipped(SkippedNeuron {
                        neuron: j,
                        reason: "dead: maximum activation is 0".into(),
                    }));
                }
                let split = match profile.example_split() {
                    Ok(s) => s,
                    Err(e) => {
                        return Ok(NeuronOutcome::Skipped(SkippedNeuron {
                            neuron: j,
                            reason: e.to_string(),
                        }))
                    }
                };
                let ranked = match induce(&k.hierarchy, &k.store, &split, &cfg.induction) {
                    Ok(r) => r,
                    Err(Error::NoHypothesis) => {
                        return Ok(NeuronOutcome::Skipped(SkippedNeuron {
                            neuron: j,
                            reason: "no hypothesis: positives carry no annotated class".into(),
                        }))
                    }
                    Err(e) => return Err(e),
                };
                let hypotheses = records(&k.hierarchy, j, &ranked);
                let chosen = choose_label(&hypotheses, cfg.response_rank, cfg.label_list);
                let note = chosen.is_none().then(|| {
                    format!(
                        "only {} hypotheses; none at rank {}",
                        hypotheses.len(),
                        cfg.response_rank
                    )
                });
                Ok(NeuronOutcome::Ranked(NeuronHypotheses {
                    neuron: j,
                    max_activation: profile.max_activation,
                    positives: split.positives().len(),
                    negatives: split.negatives().len(),
                    hypotheses,
                    chosen,
                    note,
                }))
            })
            .collect()
    });

    let mut neurons = Vec::new();
    let mut skipped = Vec::new();
    for outcome in outcomes {
        match outcome? {
            NeuronOutcome::Ranked(n) => neurons.push(n),
            NeuronOutcome::Skipped(s) => skipped.push(s),
        }
    }

    Ok(HypothesisReport {
        sources: Sources {
            hierarchy: cfg.paths.hierarchy.display().to_string(),
            annotations: cfg.paths.annotations.display().to_string(),
            activations: cfg.paths.activations.display().to_string(),
        },
        policy: cfg.policy,
        induction: cfg.induction.clone(),
        response_rank: cfg.response_rank,
        label_list: cfg.label_list,
        classes: k.hierarchy.len(),
        unmapped_labels: k.store.unmapped().values().sum(),
        unannotated_instances: k.unannotated,
        neurons,
        skipped,
    })
}

/// Runs [`hypothesize`] and writes `hypotheses.json` / `hypotheses.csv`.
/// The report is written even when no neuron is active; that case then
/// returns a data error.
pub fn cmd_hypothesize(cfg: &RunConfig) -> Result<HypothesisReport> {
    cfg.validate()?;
    let k = load_knowledge(cfg)?;
    let report = hypothesize(cfg, &k)?;
    write_json(&cfg.paths.output_dir, HYPOTHESES_JSON, &report)?;
    write_text(
        &cfg.paths.output_dir,
        HYPOTHESES_CSV,
        &hypotheses_csv(&report),
    )?;
    if report.neurons.is_empty() && report.skipped.iter().all(|s| s.reason.starts_with("dead")) {
        return Err(Error::Data("no active neurons".into()));
    }
    Ok(report)
}

/// Deduplicated union of `pools`, minus anything in `exclude`.
fn union_excluding<'a>(
    pools: impl IntoIterator<Item = &'a Vec<String>>,
    exclude: &[String],
) -> Vec<String> {
    let excluded: HashSet<&str> = exclude.iter().map(String::as_str).collect();
    let mut seen: HashSet<&str> = HashSet::new();
    let mut out = Vec::new();
    for pool in pools {
        for id in pool {
            if !excluded.contains(id.as_str()) && seen.insert(id.as_str()) {
                out.push(id.clone());
            }
        }
    }
    out
}

fn column_values(m: &ActivationMatrix, ids: &[String], neuron: usize) -> Result<Vec<f64>> {
    if neuron >= m.n_neurons() {
        return Err(Error::NeuronOutOfRange(neuron));
    }
    let sub = m.select(ids)?;
    Ok((0..sub.n_instances()).map(|i| sub.get(i, neuron)).collect())
}

/// Splits every manifest pool into confirmation/evaluation parts and checks
/// each labelled neuron against its confirmation part.
///
/// The non-target pool of a neuron is the union of the confirmation parts of
/// every other chosen label, excluding the neuron's own label key and its
/// own target images.
pub fn confirm_stage(
    cfg: &RunConfig,
    hyp: &HypothesisReport,
    manifests: &BTreeMap<String, Vec<String>>,
    targets: &ActivationMatrix,
) -> Result<ConfirmationReport> {
    cfg.validate()?;
    let mut labels: BTreeMap<String, LabelPools> = BTreeMap::new();
    let mut skipped = Vec::new();
    let mut too_small: BTreeMap<&str, usize> = BTreeMap::new();
    for (key, pool) in manifests {
        match split_holdout(pool, cfg.holdout.train_frac, cfg.holdout.seed) {
            Ok((confirmation, evaluation)) => {
                labels.insert(
                    key.clone(),
                    LabelPools {
                        confirmation,
                        evaluation,
                    },
                );
            }
            Err(Error::TooFewInstances(n)) => {
                too_small.insert(key, n);
            }
            Err(e) => return Err(e),
        }
    }

    let mut work = Vec::new();
    for n in &hyp.neurons {
        let Some(chosen) = &n.chosen else {
            skipped.push(SkippedNeuron {
                neuron: n.neuron,
                reason: n.note.clone().unwrap_or_else(|| "no chosen label".into()),
            });
            continue;
        };
        if let Some(&count) = too_small.get(chosen.label_key.as_str()) {
            skipped.push(SkippedNeuron {
                neuron: n.neuron,
                reason: format!(
                    "manifest for `{}` has {count} image(s); at least 2 needed",
                    chosen.label_key
                ),
            });
        } else if !labels.contains_key(&chosen.label_key) {
            skipped.push(SkippedNeuron {
                neuron: n.neuron,
                reason: format!("no manifest for label `{}`", chosen.label_key),
            });
        } else {
            work.push((n, chosen));
        }
    }

    let chosen_keys: Vec<&str> = {
        let mut v: Vec<&str> = work.iter().map(|(_, c)| c.label_key.as_str()).collect();
        v.sort();
        v.dedup();
        v
    };

    let pool = thread_pool(cfg)?;
    let entries: Vec<Result<ConfirmationEntry>> = pool.install(|| {
        work.par_iter()
            .map(|(n, chosen)| {
                let own = &labels[&chosen.label_key].confirmation;
                let others = chosen_keys
                    .iter()
                    .filter(|&&k| k != chosen.label_key)
                    .map(|&k| &labels[k].confirmation);
                let non_target_ids = union_excluding(others, own);
                let t = column_values(targets, own, n.neuron)?;
                let nt = column_values(targets, &non_target_ids, n.neuron)?;
                let result = confirm_values(
                    n.neuron,
                    &t,
                    &nt,
                    n.max_activation,
                    cfg.confirm.pos_frac,
                    cfg.confirm.theta,
                )?;
                Ok(ConfirmationEntry {
                    neuron: n.neuron,
                    label: chosen.label.clone(),
                    label_key: chosen.label_key.clone(),
                    coverage: chosen.coverage,
                    max_activation: n.max_activation,
                    hypotheses: n.hypotheses.clone(),
                    result,
                })
            })
            .collect()
    });
    let neurons = entries.into_iter().collect::<Result<Vec<_>>>()?;
    let confirmed = neurons
        .iter()
        .filter(|e| e.result.confirmed)
        .map(|e| e.neuron)
        .collect();
    skipped.sort_by_key(|s| s.neuron);

    Ok(ConfirmationReport {
        seed: cfg.holdout.seed,
        train_frac: cfg.holdout.train_frac,
        pos_frac: cfg.confirm.pos_frac,
        theta: cfg.confirm.theta,
        labels,
        neurons,
        skipped,
        confirmed,
    })
}

pub fn cmd_confirm(cfg: &RunConfig) -> Result<ConfirmationReport> {
    cfg.validate()?;
    let hyp_path = cfg.paths.output_dir.join(HYPOTHESES_JSON);
    cfg.require_file("hypotheses (run `hypothesize` first)", &hyp_path)?;
    let hyp: HypothesisReport = read_json(&hyp_path)?;
    if cfg.paths.manifests.is_empty() {
        return Err(Error::Config("paths.manifests is empty".into()));
    }
    for m in &cfg.paths.manifests {
        cfg.require_file("manifest", m)?;
    }
    let targets_path = cfg.target_activations()?;
    cfg.require_file("target activations", targets_path)?;
    let manifests = load_manifests(&cfg.paths.manifests)?;
    let targets = ActivationMatrix::load(targets_path)?;
    let report = confirm_stage(cfg, &hyp, &manifests, &targets)?;
    write_json(&cfg.paths.output_dir, CONFIRMATION_JSON, &report)?;
    write_text(
        &cfg.paths.output_dir,
        CONFIRMATION_MD,
        &render_confirmation(&report),
    )?;
    Ok(report)
}

/// Rank test of each (confirmed) neuron's held-out target images against the
/// held-out images of every other evaluated label.
pub fn evaluate_stage(
    cfg: &RunConfig,
    conf: &ConfirmationReport,
    holdout: &ActivationMatrix,
) -> Result<EvaluationReport> {
    cfg.validate()?;
    let include_all = cfg.evaluate.include_unconfirmed;
    let evaluated: Vec<&ConfirmationEntry> = conf
        .neurons
        .iter()
        .filter(|e| include_all || e.result.confirmed)
        .collect();
    let keys: Vec<&str> = {
        let mut v: Vec<&str> = evaluated.iter().map(|e| e.label_key.as_str()).collect();
        v.sort();
        v.dedup();
        v
    };
    let pools = |key: &str| -> Result<&LabelPools> {
        conf.labels
            .get(key)
            .ok_or_else(|| Error::Data(format!("confirmation output lacks pools for `{key}`")))
    };

    let mut rows = Vec::new();
    let mut omitted = Vec::new();
    for e in &evaluated {
        let own = &pools(&e.label_key)?.evaluation;
        if own.is_empty() {
            omitted.push(SkippedNeuron {
                neuron: e.neuron,
                reason: "empty holdout".into(),
            });
            continue;
        }
        let mut others = Vec::new();
        for &k in keys.iter().filter(|&&k| k != e.label_key) {
            others.push(&pools(k)?.evaluation);
        }
        let non_target_ids = union_excluding(others, own);
        if non_target_ids.is_empty() {
            omitted.push(SkippedNeuron {
                neuron: e.neuron,
                reason: "no non-target holdout images".into(),
            });
            continue;
        }
        let t = column_values(holdout, own, e.neuron)?;
        let nt = column_values(holdout, &non_target_ids, e.neuron)?;
        let pct = confirm_values(
            e.neuron,
            &t,
            &nt,
            e.max_activation,
            conf.pos_frac,
            conf.theta,
        )?;
        let test = mann_whitney(&t, &nt)?;
        rows.push(EvaluationRow {
            neuron: e.neuron,
            label: e.label.clone(),
            images: t.len(),
            non_target_images: nt.len(),
            target_pct: pct.target_pct,
            non_target_pct: pct.non_target_pct,
            rejected: test.p_one_tailed < cfg.evaluate.alpha,
            test,
        });
    }

    let neurons = conf
        .neurons
        .iter()
        .map(|e| NeuronReport {
            neuron: e.neuron,
            hypotheses: e.hypotheses.clone(),
            chosen_label: e.label.clone(),
            images_used: e.result.target_count,
            coverage: e.coverage,
            target_pct: e.result.target_pct,
            non_target_pct: e.result.non_target_pct,
            confirmed: e.result.confirmed,
            evaluation: rows.iter().find(|r| r.neuron == e.neuron).cloned(),
        })
        .collect();

    let summary = EvaluationSummary {
        evaluated: rows.len(),
        rejected: rows.iter().filter(|r| r.rejected).count(),
    };
    Ok(EvaluationReport {
        alpha: cfg.evaluate.alpha,
        pos_frac: conf.pos_frac,
        include_unconfirmed: include_all,
        rows,
        omitted,
        neurons,
        summary,
    })
}

pub fn cmd_evaluate(cfg: &RunConfig) -> Result<EvaluationReport> {
    cfg.validate()?;
    let conf_path = cfg.paths.output_dir.join(CONFIRMATION_JSON);
    cfg.require_file("confirmation output (run `confirm` first)", &conf_path)?;
    let conf: ConfirmationReport = read_json(&conf_path)?;
    let holdout_path = cfg.holdout_activations()?;
    cfg.require_file("holdout activations", holdout_path)?;
    let holdout = ActivationMatrix::load(holdout_path)?;
    let report = evaluate_stage(cfg, &conf, &holdout)?;
    write_json(&cfg.paths.output_dir, EVALUATION_JSON, &report)?;
    write_text(
        &cfg.paths.output_dir,
        EVALUATION_MD,
        &render_evaluation(&report),
    )?;
    Ok(report)
}

fn diff(a: &[HypothesisRecord], b: &[HypothesisRecord]) -> Vec<RankDiff> {
    (0..a.len().max(b.len()))
        .filter(|&i| a.get(i) != b.get(i))
        .map(|i| RankDiff {
            position: i + 1,
            heuristic: a.get(i).cloned(),
            exhaustive: b.get(i).cloned(),
        })
        .collect()
}

/// Runs beam search and exhaustive enumeration side by side for every active
/// neuron.
pub fn oracle(cfg: &RunConfig, k: &Knowledge) -> Result<OracleReport> {
    cfg.validate()?;
    let pool = thread_pool(cfg)?;
    let outcomes: Vec<Result<std::result::Result<OracleNeuron, SkippedNeuron>>> =
        pool.install(|| {
            (0..k.activations.n_neurons())
                .into_par_iter()
                .map(|j| {
                    let profile = profile_neuron(&k.activations, j, &cfg.policy)?;
                    if profile.status == NeuronStatus::Dead {
                        return Ok(Err(SkippedNeuron {
                            neuron: j,
                            reason: "dead: maximum activation is 0".into(),
                        }));
                    }
                    let split = profile.example_split()?;
                    let heuristic = match induce(&k.hierarchy, &k.store, &split, &cfg.induction) {
                        Err(Error::NoHypothesis) => {
                            return Ok(Err(SkippedNeuron {
                                neuron: j,
                                reason: "no hypothesis".into(),
                            }))
                        }
                        other => other?,
                    };
                    let exhaustive = induce_exhaustive(
                        &k.hierarchy,
                        &k.store,
                        &split,
                        &cfg.induction,
                        cfg.force_oracle,
                    )?;
                    let candidate_atoms = crate::induction::candidate_atoms(
                        &k.hierarchy,
                        &k.store,
                        &split,
                        cfg.induction.min_pos_support,
                    )?
                    .len();
                    let heuristic = records(&k.hierarchy, j, &heuristic);
                    let exhaustive = records(&k.hierarchy, j, &exhaustive);
                    Ok(Ok(OracleNeuron {
                        neuron: j,
                        candidate_atoms,
                        exhaustive_equivalent: cfg.induction.beam_width.limit() >= candidate_atoms,
                        mismatches: diff(&heuristic, &exhaustive),
                        heuristic,
                        exhaustive,
                    }))
                })
                .collect()
        });
    let mut neurons = Vec::new();
    let mut skipped = Vec::new();
    for o in outcomes {
        match o? {
            Ok(n) => neurons.push(n),
            Err(s) => skipped.push(s),
        }
    }
    let mismatched_neurons = neurons.iter().filter(|n| !n.mismatches.is_empty()).count();
    let hard_mismatches = neurons
        .iter()
        .filter(|n| n.exhaustive_equivalent && !n.mismatches.is_empty())
        .count();
    Ok(OracleReport {
        neurons,
        skipped,
        mismatched_neurons,
        hard_mismatches,
    })
}

pub fn cmd_oracle(cfg: &RunConfig) -> Result<OracleReport> {
    cfg.validate()?;
    let k = load_knowledge(cfg)?;
    let report = oracle(cfg, &k)?;
    write_json(&cfg.paths.output_dir, ORACLE_JSON, &report)?;
    Ok(report)
}
