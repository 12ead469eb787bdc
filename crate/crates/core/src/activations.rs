//! Activation matrices, example selection and label confirmation.

use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::induction::ExampleSplit;

/// Relative slack on threshold comparisons so that a decimal activation equal
/// to `frac * max` is not lost to rounding in the product.
const THRESHOLD_EPS: f64 = 1e-12;

/// Instance × neuron activations, row-major, all values finite and `>= 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct ActivationMatrix {
    instances: Vec<String>,
    neurons: Vec<String>,
    values: Vec<f64>,
}

impl ActivationMatrix {
    pub fn new(instances: Vec<String>, neurons: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if values.len() != instances.len() * neurons.len() {
            return Err(Error::Data(format!(
                "{} values for {} instances x {} neurons",
                values.len(),
                instances.len(),
                neurons.len()
            )));
        }
        let mut seen = HashSet::new();
        for (row, id) in instances.iter().enumerate() {
            if !seen.insert(id.as_str()) {
                return Err(Error::Activation {
                    row: row + 1,
                    column: 0,
                    reason: format!("duplicate instance id `{id}`"),
                });
            }
        }
        for (k, &v) in values.iter().enumerate() {
            check_cell(v, k / neurons.len() + 1, k % neurons.len() + 1)?;
        }
        Ok(ActivationMatrix {
            instances,
            neurons,
            values,
        })
    }

    /// Reads `instance_id,n0,n1,...` CSV. Rows and columns in errors are
    /// 1-based data coordinates (header excluded, id column is column 0).
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.len() < 2 {
            return Err(Error::Activation {
                row: 0,
                column: 0,
                reason: "header needs `instance_id` and at least one neuron column".into(),
            });
        }
        let neurons: Vec<String> = header.iter().skip(1).map(|s| s.trim().to_owned()).collect();
        let width = header.len();
        let mut instances = Vec::new();
        let mut values = Vec::new();
        let mut seen = HashSet::new();
        for (i, record) in rdr.records().enumerate() {
            let row = i + 1;
            let record = record?;
            if record.len() != width {
                return Err(Error::Activation {
                    row,
                    column: record.len().min(width),
                    reason: format!("expected {width} fields, found {}", record.len()),
                });
            }
            let id = record[0].trim().to_owned();
            if id.is_empty() {
                return Err(Error::Activation {
                    row,
                    column: 0,
                    reason: "empty instance id".into(),
                });
            }
            if !seen.insert(id.clone()) {
                return Err(Error::Activation {
                    row,
                    column: 0,
                    reason: format!("duplicate instance id `{id}`"),
                });
            }
            for column in 1..width {
                let cell = record[column].trim();
                let v: f64 = cell.parse().map_err(|_| Error::Activation {
                    row,
                    column,
                    reason: format!("not a number: `{cell}`"),
                })?;
                check_cell(v, row, column)?;
                values.push(v);
            }
            instances.push(id);
        }
        if instances.is_empty() {
            return Err(Error::Activation {
                row: 1,
                column: 0,
                reason: "no data rows".into(),
            });
        }
        Ok(ActivationMatrix {
            instances,
            neurons,
            values,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(file)
    }

    /// Writes the CSV form; values use the shortest round-trip representation.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["instance_id".to_owned()];
        header.extend(self.neurons.iter().cloned());
        w.write_record(&header)?;
        for (i, id) in self.instances.iter().enumerate() {
            let mut rec = vec![id.clone()];
            rec.extend(self.row(i).iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn instances(&self) -> &[String] {
        &self.instances
    }

    pub fn neuron_names(&self) -> &[String] {
        &self.neurons
    }

    pub fn n_instances(&self) -> usize {
        self.instances.len()
    }

    pub fn n_neurons(&self) -> usize {
        self.neurons.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.neurons.len();
        &self.values[i * w..(i + 1) * w]
    }

    pub fn get(&self, instance: usize, neuron: usize) -> f64 {
        self.values[instance * self.neurons.len() + neuron]
    }

    pub fn column(&self, neuron: usize) -> Result<Vec<f64>> {
        if neuron >= self.neurons.len() {
            return Err(Error::NeuronOutOfRange(neuron));
        }
        Ok((0..self.instances.len())
            .map(|i| self.get(i, neuron))
            .collect())
    }

    pub fn position(&self, instance: &str) -> Option<usize> {
        self.instances.iter().position(|x| x == instance)
    }

    /// Sub-matrix with the given rows, in the given order.
    pub fn select(&self, ids: &[String]) -> Result<ActivationMatrix> {
        let lookup: std::collections::HashMap<&str, usize> = self
            .instances
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        let mut values = Vec::with_capacity(ids.len() * self.neurons.len());
        let mut seen = HashSet::new();
        let mut instances = Vec::with_capacity(ids.len());
        for id in ids {
            if !seen.insert(id.as_str()) {
                continue;
            }
            let i = *lookup
                .get(id.as_str())
                .ok_or_else(|| Error::UnknownInstance(id.clone()))?;
            values.extend_from_slice(self.row(i));
            instances.push(id.clone());
        }
        Ok(ActivationMatrix {
            instances,
            neurons: self.neurons.clone(),
            values,
        })
    }
}

fn check_cell(v: f64, row: usize, column: usize) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::Activation {
            row,
            column,
            reason: format!("non-finite value {v}"),
        });
    }
    if v < 0.0 {
        return Err(Error::Activation {
            row,
            column,
            reason: format!("negative value {v}"),
        });
    }
    Ok(())
}

#[inline]
fn at_least(a: f64, threshold: f64) -> bool {
    a >= threshold - THRESHOLD_EPS * threshold.abs()
}

#[inline]
fn at_most(a: f64, threshold: f64) -> bool {
    a <= threshold + THRESHOLD_EPS * threshold.abs()
}

/// How positives and negatives are cut from one activation column of max `M`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SelectionPolicy {
    /// `P = {a >= pos_frac·M}`, `N = {a <= neg_frac·M}`.
    FractionBands { pos_frac: f64, neg_frac: f64 },
    /// `P = {a >= pos_frac·M}`, `N = {a < pos_frac·M}`.
    PosFracNegBelowFrac { pos_frac: f64 },
    /// `P = {a >= pos_frac·M}`, `N = {a = 0}`.
    PosFracNegZero { pos_frac: f64 },
    /// `P = {a > 0}`, `N = {a = 0}`.
    PosNonzeroNegZero,
}

impl Default for SelectionPolicy {
    fn default() -> Self {
        SelectionPolicy::FractionBands {
            pos_frac: 0.8,
            neg_frac: 0.2,
        }
    }
}

impl SelectionPolicy {
    /// The exploratory cut-off cases 1–4.
    pub fn case(n: u8) -> Option<Self> {
        match n {
            1 => Some(SelectionPolicy::PosFracNegBelowFrac { pos_frac: 0.5 }),
            2 => Some(SelectionPolicy::PosFracNegZero { pos_frac: 0.5 }),
            3 => Some(SelectionPolicy::PosNonzeroNegZero),
            4 => Some(SelectionPolicy::PosFracNegBelowFrac { pos_frac: 0.8 }),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let in_range = |f: f64| f > 0.0 && f <= 1.0;
        match *self {
            SelectionPolicy::FractionBands { pos_frac, neg_frac } => {
                if !in_range(pos_frac) || !in_range(neg_frac) {
                    return Err(Error::Config("policy fractions must lie in (0, 1]".into()));
                }
                if pos_frac <= neg_frac {
                    return Err(Error::Config(format!(
                        "pos_frac {pos_frac} must exceed neg_frac {neg_frac}"
                    )));
                }
            }
            SelectionPolicy::PosFracNegBelowFrac { pos_frac }
            | SelectionPolicy::PosFracNegZero { pos_frac } => {
                if !in_range(pos_frac) {
                    return Err(Error::Config("policy fractions must lie in (0, 1]".into()));
                }
            }
            SelectionPolicy::PosNonzeroNegZero => {}
        }
        Ok(())
    }

    fn is_positive(&self, a: f64, max: f64) -> bool {
        match *self {
            SelectionPolicy::FractionBands { pos_frac, .. }
            | SelectionPolicy::PosFracNegBelowFrac { pos_frac }
            | SelectionPolicy::PosFracNegZero { pos_frac } => at_least(a, pos_frac * max),
            SelectionPolicy::PosNonzeroNegZero => a > 0.0,
        }
    }

    fn is_negative(&self, a: f64, max: f64) -> bool {
        match *self {
            SelectionPolicy::FractionBands { neg_frac, .. } => at_most(a, neg_frac * max),
            SelectionPolicy::PosFracNegBelowFrac { pos_frac } => !at_least(a, pos_frac * max),
            SelectionPolicy::PosFracNegZero { .. } | SelectionPolicy::PosNonzeroNegZero => a == 0.0,
        }
    }
}

impl FromStr for SelectionPolicy {
    type Err = Error;

    /// `main`, `case1` .. `case4`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "main" | "default" => Ok(SelectionPolicy::default()),
            other => other
                .strip_prefix("case")
                .and_then(|n| n.parse::<u8>().ok())
                .and_then(SelectionPolicy::case)
                .ok_or_else(|| Error::Config(format!("unknown policy `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeuronStatus {
    Active,
    Dead,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeuronProfile {
    pub neuron: usize,
    pub max_activation: f64,
    pub positives: Vec<String>,
    pub negatives: Vec<String>,
    pub status: NeuronStatus,
}

impl NeuronProfile {
    pub fn example_split(&self) -> Result<ExampleSplit> {
        ExampleSplit::new(self.positives.clone(), self.negatives.clone())
    }
}

pub fn profile_neuron(
    m: &ActivationMatrix,
    neuron: usize,
    policy: &SelectionPolicy,
) -> Result<NeuronProfile> {
    let column = m.column(neuron)?;
    let max = column.iter().copied().fold(0.0_f64, f64::max);
    if max == 0.0 {
        return Ok(NeuronProfile {
            neuron,
            max_activation: 0.0,
            positives: Vec::new(),
            negatives: Vec::new(),
            status: NeuronStatus::Dead,
        });
    }
    let mut positives = Vec::new();
    let mut negatives = Vec::new();
    for (id, &a) in m.instances().iter().zip(&column) {
        if policy.is_positive(a, max) {
            positives.push(id.clone());
        } else if policy.is_negative(a, max) {
            negatives.push(id.clone());
        }
    }
    Ok(NeuronProfile {
        neuron,
        max_activation: max,
        positives,
        negatives,
        status: NeuronStatus::Active,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfirmationResult {
    pub neuron: usize,
    pub target_count: usize,
    pub target_activating: usize,
    pub target_pct: f64,
    pub non_target_count: usize,
    pub non_target_activating: usize,
    pub non_target_pct: f64,
    pub confirmed: bool,
    pub confirm_threshold: f64,
}

fn check_fraction(name: &str, f: f64) -> Result<()> {
    if f > 0.0 && f <= 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must lie in (0, 1], got {f}")))
    }
}

/// Counts activations `>= pos_frac·max` in the target and non-target samples.
/// `max` is the neuron's maximum from the hypothesis pass.
pub fn confirm_values(
    neuron: usize,
    targets: &[f64],
    non_targets: &[f64],
    max: f64,
    pos_frac: f64,
    theta: f64,
) -> Result<ConfirmationResult> {
    check_fraction("pos_frac", pos_frac)?;
    check_fraction("confirm threshold", theta)?;
    if targets.is_empty() {
        return Err(Error::EmptyTargets);
    }
    let threshold = pos_frac * max;
    let hits = |xs: &[f64]| xs.iter().filter(|&&a| at_least(a, threshold)).count();
    let pct = |k: usize, n: usize| {
        if n == 0 {
            0.0
        } else {
            100.0 * k as f64 / n as f64
        }
    };
    let target_activating = hits(targets);
    let non_target_activating = hits(non_targets);
    let target_pct = pct(target_activating, targets.len());
    Ok(ConfirmationResult {
        neuron,
        target_count: targets.len(),
        target_activating,
        target_pct,
        non_target_count: non_targets.len(),
        non_target_activating,
        non_target_pct: pct(non_target_activating, non_targets.len()),
        confirmed: target_pct >= 100.0 * theta - 1e-9,
        confirm_threshold: theta,
    })
}

pub fn confirm(
    targets: &ActivationMatrix,
    non_targets: &ActivationMatrix,
    neuron: usize,
    max: f64,
    pos_frac: f64,
    theta: f64,
) -> Result<ConfirmationResult> {
    let t = targets.column(neuron)?;
    let nt = if non_targets.n_instances() == 0 {
        Vec::new()
    } else {
        non_targets.column(neuron)?
    };
    confirm_values(neuron, &t, &nt, max, pos_frac, theta)
}

/// Seeded split into a confirmation part (`round(n·train_frac)`, at least one
/// element on each side) and an evaluation part. Both parts keep input order.
pub fn split_holdout(
    instances: &[String],
    train_frac: f64,
    seed: u64,
) -> Result<(Vec<String>, Vec<String>)> {
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(Error::Config(format!(
            "holdout train fraction must lie in (0, 1), got {train_frac}"
        )));
    }
    let n = instances.len();
    if n < 2 {
        return Err(Error::TooFewInstances(n));
    }
    let k = ((n as f64 * train_frac).round() as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut keep = vec![false; n];
    for &i in &order[..k] {
        keep[i] = true;
    }
    let (mut confirm, mut eval) = (Vec::with_capacity(k), Vec::with_capacity(n - k));
    for (i, id) in instances.iter().enumerate() {
        if keep[i] {
            confirm.push(id.clone());
        } else {
            eval.push(id.clone());
        }
    }
    Ok((confirm, eval))
}
