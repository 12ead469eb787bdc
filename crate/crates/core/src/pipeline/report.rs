//! Inter-stage file formats and their table renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::activations::{ConfirmationResult, SelectionPolicy};
use crate::induction::InductionConfig;
use crate::stats::{format_p, MannWhitneyResult};

/// One ranked hypothesis, as written to JSON and CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisRecord {
    pub neuron: usize,
    pub rank: usize,
    pub atoms: Vec<String>,
    pub z1: usize,
    pub z2: usize,
    pub coverage: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChosenLabel {
    /// Rank of the hypothesis used, or `None` in word-list mode.
    pub rank: Option<usize>,
    pub label: String,
    pub label_key: String,
    pub atoms: Vec<String>,
    pub coverage: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeuronHypotheses {
    pub neuron: usize,
    pub max_activation: f64,
    pub positives: usize,
    pub negatives: usize,
    pub hypotheses: Vec<HypothesisRecord>,
    pub chosen: Option<ChosenLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedNeuron {
    pub neuron: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sources {
    pub hierarchy: String,
    pub annotations: String,
    pub activations: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub sources: Sources,
    pub policy: SelectionPolicy,
    pub induction: InductionConfig,
    pub response_rank: usize,
    pub label_list: Option<usize>,
    pub classes: usize,
    pub unmapped_labels: usize,
    pub unannotated_instances: usize,
    pub neurons: Vec<NeuronHypotheses>,
    pub skipped: Vec<SkippedNeuron>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelPools {
    pub confirmation: Vec<String>,
    pub evaluation: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfirmationEntry {
    pub neuron: usize,
    pub label: String,
    pub label_key: String,
    pub coverage: f64,
    pub max_activation: f64,
    pub hypotheses: Vec<HypothesisRecord>,
    pub result: ConfirmationResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfirmationReport {
    pub seed: u64,
    pub train_frac: f64,
    pub pos_frac: f64,
    pub theta: f64,
    /// Holdout bookkeeping per label key.
    pub labels: BTreeMap<String, LabelPools>,
    pub neurons: Vec<ConfirmationEntry>,
    pub skipped: Vec<SkippedNeuron>,
    pub confirmed: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRow {
    pub neuron: usize,
    pub label: String,
    pub images: usize,
    pub non_target_images: usize,
    pub target_pct: f64,
    pub non_target_pct: f64,
    pub test: MannWhitneyResult,
    pub rejected: bool,
}

/// Everything known about one neuron after all three stages.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeuronReport {
    pub neuron: usize,
    pub hypotheses: Vec<HypothesisRecord>,
    pub chosen_label: String,
    pub images_used: usize,
    pub coverage: f64,
    pub target_pct: f64,
    pub non_target_pct: f64,
    pub confirmed: bool,
    pub evaluation: Option<EvaluationRow>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvaluationSummary {
    pub evaluated: usize,
    pub rejected: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub alpha: f64,
    pub pos_frac: f64,
    pub include_unconfirmed: bool,
    pub rows: Vec<EvaluationRow>,
    pub omitted: Vec<SkippedNeuron>,
    pub neurons: Vec<NeuronReport>,
    pub summary: EvaluationSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankDiff {
    pub position: usize,
    pub heuristic: Option<HypothesisRecord>,
    pub exhaustive: Option<HypothesisRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleNeuron {
    pub neuron: usize,
    pub candidate_atoms: usize,
    /// The beam holds every candidate atom, so the lists must agree.
    pub exhaustive_equivalent: bool,
    pub heuristic: Vec<HypothesisRecord>,
    pub exhaustive: Vec<HypothesisRecord>,
    pub mismatches: Vec<RankDiff>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub neurons: Vec<OracleNeuron>,
    pub skipped: Vec<SkippedNeuron>,
    pub mismatched_neurons: usize,
    /// Mismatches on neurons where the beam was exhaustive-equivalent.
    pub hard_mismatches: usize,
}

pub fn hypotheses_csv(report: &HypothesisReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["neuron", "rank", "atoms", "z1", "z2", "coverage"])
        .expect("in-memory write");
    for n in &report.neurons {
        for h in &n.hypotheses {
            w.write_record([
                h.neuron.to_string(),
                h.rank.to_string(),
                h.atoms.join(" ⊓ "),
                h.z1.to_string(),
                h.z2.to_string(),
                h.coverage.to_string(),
            ])
            .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

/// Neuron | Label(s) | Images | Coverage | Target % | Non-Target % table.
pub fn render_confirmation(report: &ConfirmationReport) -> String {
    let mut s = String::new();
    s.push_str("| Neuron | Label(s) | Images | Coverage | Target % | Non-Target % | Confirmed |\n");
    s.push_str("|---:|:---|---:|---:|---:|---:|:---:|\n");
    for e in &report.neurons {
        let r = &e.result;
        let _ = writeln!(
            s,
            "| {} | {} | {} | {:.3} | {:.3} | {:.3} | {} |",
            e.neuron,
            e.label,
            r.target_count,
            e.coverage,
            r.target_pct,
            r.non_target_pct,
            if r.confirmed { "yes" } else { "no" }
        );
    }
    for k in &report.skipped {
        let _ = writeln!(s, "\nskipped neuron {}: {}", k.neuron, k.reason);
    }
    let _ = writeln!(
        s,
        "\n{} of {} labels confirmed.",
        report.confirmed.len(),
        report.neurons.len()
    );
    s
}

/// Table with activation %, mean, median for target / non-target, z and p.
pub fn render_evaluation(report: &EvaluationReport) -> String {
    let mut s = String::new();
    s.push_str(
        "| Neuron | Label(s) | Images | Act. % targ | Act. % non-t | Mean targ | Mean non-t | Median targ | Median non-t | z-score | p-value |\n",
    );
    s.push_str("|---:|:---|---:|---:|---:|---:|---:|---:|---:|---:|---:|\n");
    for r in &report.rows {
        let t = &r.test;
        let _ = writeln!(
            s,
            "| {} | {} | {} | {:.2} | {:.2} | {:.2} | {:.2} | {:.2} | {:.2} | {:.2} | {} |",
            r.neuron,
            r.label,
            r.images,
            r.target_pct,
            r.non_target_pct,
            t.mean_target,
            t.mean_nontarget,
            t.median_target,
            t.median_nontarget,
            t.z,
            format_p(t.p_one_tailed)
        );
    }
    for k in &report.omitted {
        let _ = writeln!(s, "\nomitted neuron {}: {}", k.neuron, k.reason);
    }
    let _ = writeln!(
        s,
        "\nOf the {} null hypotheses, {} are rejected (p < {}).",
        report.summary.evaluated, report.summary.rejected, report.alpha
    );
    s
}
