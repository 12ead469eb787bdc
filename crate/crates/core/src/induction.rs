//! Concept induction: rank conjunctive class expressions by coverage over a
//! positive/negative example split.
//!
//! [`induce`] is a two-stage beam search over precomputed extension bitsets.
//! [`induce_exhaustive`] enumerates the same hypothesis language by brute
//! force through [`entails`] and serves as its reference.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, HashMap, HashSet};
use std::hash::Hash;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::hierarchy::{entails, AnnotationStore, ClassHierarchy, ClassId};

/// Candidate-atom limit for [`induce_exhaustive`] unless forced.
pub const EXHAUSTIVE_ATOM_LIMIT: usize = 5000;

/// Conjunction of atomic classes, atoms kept in class-name order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ConceptExpression {
    atoms: Vec<ClassId>,
}

impl ConceptExpression {
    /// Builds a canonical expression: duplicate atoms and atoms subsumed by a
    /// co-atom (`A ⊓ B` with `B ⊑ A` is just `B`) are dropped.
    pub fn new(h: &ClassHierarchy, atoms: impl IntoIterator<Item = ClassId>) -> Result<Self> {
        let mut atoms: Vec<ClassId> = atoms.into_iter().collect();
        if let Some(bad) = atoms.iter().find(|a| !h.contains(**a)) {
            return Err(Error::UnknownClass(format!("#{}", bad.0)));
        }
        atoms.sort_unstable();
        atoms.dedup();
        let kept: Vec<ClassId> = atoms
            .iter()
            .copied()
            .filter(|&a| !atoms.iter().any(|&b| b != a && h.is_ancestor(a, b)))
            .collect();
        if kept.is_empty() {
            return Err(Error::Data("empty concept expression".into()));
        }
        Ok(Self::canonical(h, kept))
    }

    /// Parses `a ⊓ b`, `a, b` or `a,b` by class name.
    pub fn parse(h: &ClassHierarchy, text: &str) -> Result<Self> {
        let ids = text
            .split(['⊓', ','])
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|name| h.require(name))
            .collect::<Result<Vec<_>>>()?;
        Self::new(h, ids)
    }

    fn canonical(h: &ClassHierarchy, mut atoms: Vec<ClassId>) -> Self {
        atoms.sort_by(|a, b| h.name(*a).cmp(h.name(*b)));
        ConceptExpression { atoms }
    }

    pub fn atoms(&self) -> &[ClassId] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn names<'h>(&self, h: &'h ClassHierarchy) -> Vec<&'h str> {
        self.atoms.iter().map(|&a| h.name(a)).collect()
    }

    pub fn display(&self, h: &ClassHierarchy) -> String {
        self.names(h).join(" ⊓ ")
    }
}

/// Positive and negative example instances.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExampleSplit {
    positives: Vec<String>,
    negatives: Vec<String>,
}

impl ExampleSplit {
    pub fn new(positives: Vec<String>, negatives: Vec<String>) -> Result<Self> {
        let mut seen = HashSet::new();
        let positives: Vec<String> = positives
            .into_iter()
            .filter(|p| seen.insert(p.clone()))
            .collect();
        if positives.is_empty() {
            return Err(Error::InvalidSplit("no positive examples".into()));
        }
        let pos: HashSet<&str> = positives.iter().map(String::as_str).collect();
        if let Some(both) = negatives.iter().find(|n| pos.contains(n.as_str())) {
            return Err(Error::InvalidSplit(format!(
                "`{both}` is both positive and negative"
            )));
        }
        let mut seen = HashSet::new();
        let negatives = negatives
            .into_iter()
            .filter(|n| seen.insert(n.clone()))
            .collect();
        Ok(ExampleSplit {
            positives,
            negatives,
        })
    }

    pub fn positives(&self) -> &[String] {
        &self.positives
    }

    pub fn negatives(&self) -> &[String] {
        &self.negatives
    }

    /// `|P ∪ N|`, which is `|P| + |N|` because the sets are disjoint.
    pub fn total(&self) -> usize {
        self.positives.len() + self.negatives.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoredHypothesis {
    pub expression: ConceptExpression,
    /// Positives entailed.
    pub z1: usize,
    /// Negatives not entailed.
    pub z2: usize,
    pub coverage: f64,
    /// 1-based; 0 until ranked.
    pub rank: usize,
}

impl ScoredHypothesis {
    fn unranked(expression: ConceptExpression, z1: usize, z2: usize, total: usize) -> Self {
        ScoredHypothesis {
            expression,
            z1,
            z2,
            coverage: (z1 + z2) as f64 / total as f64,
            rank: 0,
        }
    }
}

/// Beam width of the conjunction stage.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BeamWidth {
    Bounded(usize),
    Unbounded,
}

impl BeamWidth {
    pub fn limit(self) -> usize {
        match self {
            BeamWidth::Bounded(n) => n,
            BeamWidth::Unbounded => usize::MAX,
        }
    }
}

impl Serialize for BeamWidth {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            BeamWidth::Bounded(n) => s.serialize_u64(*n as u64),
            BeamWidth::Unbounded => s.serialize_str("unbounded"),
        }
    }
}

impl<'de> Deserialize<'de> for BeamWidth {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Number(usize),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Number(n) => Ok(BeamWidth::Bounded(n)),
            Repr::Text(t) if t == "unbounded" || t == "inf" => Ok(BeamWidth::Unbounded),
            Repr::Text(t) => Err(serde::de::Error::custom(format!(
                "beam_width must be an integer or \"unbounded\", got `{t}`"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InductionConfig {
    pub max_conjuncts: usize,
    pub beam_width: BeamWidth,
    pub top_k: usize,
    pub min_pos_support: usize,
}

impl Default for InductionConfig {
    fn default() -> Self {
        InductionConfig {
            max_conjuncts: 2,
            beam_width: BeamWidth::Bounded(64),
            top_k: 10,
            min_pos_support: 1,
        }
    }
}

impl InductionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_conjuncts == 0 {
            return Err(Error::Config("max_conjuncts must be at least 1".into()));
        }
        if self.top_k == 0 {
            return Err(Error::Config("top_k must be at least 1".into()));
        }
        if self.beam_width.limit() < self.top_k {
            return Err(Error::Config(format!(
                "beam_width {} is smaller than top_k {}",
                self.beam_width.limit(),
                self.top_k
            )));
        }
        if self.min_pos_support == 0 {
            return Err(Error::Config("min_pos_support must be at least 1".into()));
        }
        Ok(())
    }
}

/// Scores `e` by checking entailment instance by instance.
pub fn coverage(
    h: &ClassHierarchy,
    store: &AnnotationStore,
    e: &ConceptExpression,
    split: &ExampleSplit,
) -> Result<ScoredHypothesis> {
    let mut z1 = 0;
    for p in split.positives() {
        z1 += usize::from(entails(h, store, e, p)?);
    }
    let mut z2 = 0;
    for n in split.negatives() {
        z2 += usize::from(!entails(h, store, e, n)?);
    }
    Ok(ScoredHypothesis::unranked(e.clone(), z1, z2, split.total()))
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Bits(Vec<u64>);

impl Bits {
    fn zeros(len: usize) -> Self {
        Bits(vec![0; len.div_ceil(64)])
    }

    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn is_empty(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }

    fn and(&self, other: &Bits) -> Bits {
        Bits(self.0.iter().zip(&other.0).map(|(a, b)| a & b).collect())
    }
}

#[derive(Clone, Debug)]
struct Extension {
    pos: Bits,
    neg: Bits,
}

/// Per-instance class closures for one split.
struct SplitIndex<'a> {
    h: &'a ClassHierarchy,
    pos: Vec<Vec<ClassId>>,
    neg: Vec<Vec<ClassId>>,
}

impl<'a> SplitIndex<'a> {
    fn new(h: &'a ClassHierarchy, store: &AnnotationStore, split: &ExampleSplit) -> Result<Self> {
        let closures = |ids: &[String]| -> Result<Vec<Vec<ClassId>>> {
            ids.iter()
                .map(|id| {
                    store
                        .index_of(id)
                        .map(|i| store.closure(h, i))
                        .ok_or_else(|| Error::UnknownInstance(id.clone()))
                })
                .collect()
        };
        Ok(SplitIndex {
            h,
            pos: closures(split.positives())?,
            neg: closures(split.negatives())?,
        })
    }

    fn total(&self) -> usize {
        self.pos.len() + self.neg.len()
    }

    /// Classes entailing at least `min_support` positives, by id.
    fn candidates(&self, min_support: usize) -> Vec<ClassId> {
        let mut support: HashMap<ClassId, usize> = HashMap::new();
        for closure in &self.pos {
            for &c in closure {
                *support.entry(c).or_insert(0) += 1;
            }
        }
        let mut out: Vec<ClassId> = support
            .into_iter()
            .filter(|&(_, n)| n >= min_support)
            .map(|(c, _)| c)
            .collect();
        out.sort_unstable();
        out
    }

    fn extensions(&self, atoms: &[ClassId]) -> Vec<Extension> {
        let slot: HashMap<ClassId, usize> =
            atoms.iter().enumerate().map(|(i, &a)| (a, i)).collect();
        let mut out = vec![
            Extension {
                pos: Bits::zeros(self.pos.len()),
                neg: Bits::zeros(self.neg.len()),
            };
            atoms.len()
        ];
        for (i, closure) in self.pos.iter().enumerate() {
            for c in closure {
                if let Some(&s) = slot.get(c) {
                    out[s].pos.set(i);
                }
            }
        }
        for (i, closure) in self.neg.iter().enumerate() {
            for c in closure {
                if let Some(&s) = slot.get(c) {
                    out[s].neg.set(i);
                }
            }
        }
        out
    }

    fn score(&self, atoms: Vec<ClassId>, ext: &Extension) -> ScoredHypothesis {
        let z1 = ext.pos.count();
        let z2 = self.neg.len() - ext.neg.count();
        ScoredHypothesis::unranked(
            ConceptExpression::canonical(self.h, atoms),
            z1,
            z2,
            self.total(),
        )
    }
}

/// Classes entailing at least `min_support` positives of the split, by id.
pub fn candidate_atoms(
    h: &ClassHierarchy,
    store: &AnnotationStore,
    split: &ExampleSplit,
    min_support: usize,
) -> Result<Vec<ClassId>> {
    Ok(SplitIndex::new(h, store, split)?.candidates(min_support))
}

/// Scores each atom of `atoms` over the split in one pass over instance closures.
pub fn score_atoms(
    h: &ClassHierarchy,
    store: &AnnotationStore,
    split: &ExampleSplit,
    atoms: &[ClassId],
) -> Result<Vec<ScoredHypothesis>> {
    if let Some(bad) = atoms.iter().find(|a| !h.contains(**a)) {
        return Err(Error::UnknownClass(format!("#{}", bad.0)));
    }
    let index = SplitIndex::new(h, store, split)?;
    let exts = index.extensions(atoms);
    Ok(atoms
        .iter()
        .zip(&exts)
        .map(|(&a, ext)| index.score(vec![a], ext))
        .collect())
}

/// Ordering of hypotheses: coverage descending, then fewer atoms, then
/// class names. Both sides must come from the same split.
pub fn rank_order(h: &ClassHierarchy, a: &ScoredHypothesis, b: &ScoredHypothesis) -> Ordering {
    Reverse(a.z1 + a.z2)
        .cmp(&Reverse(b.z1 + b.z2))
        .then(a.expression.len().cmp(&b.expression.len()))
        .then_with(|| a.expression.names(h).cmp(&b.expression.names(h)))
}

/// Sorts, keeps the best-ranked expression per extension, truncates and
/// numbers the survivors.
fn finish<K: Hash + Eq>(
    h: &ClassHierarchy,
    mut scored: Vec<(ScoredHypothesis, K)>,
    top_k: usize,
) -> Vec<ScoredHypothesis> {
    scored.sort_by(|a, b| rank_order(h, &a.0, &b.0));
    let mut seen: HashSet<K> = HashSet::new();
    let mut out = Vec::with_capacity(top_k.min(scored.len()));
    for (hyp, key) in scored {
        if out.len() == top_k {
            break;
        }
        if seen.insert(key) {
            out.push(hyp);
        }
    }
    for (i, hyp) in out.iter_mut().enumerate() {
        hyp.rank = i + 1;
    }
    out
}

/// Two-stage beam search.
///
/// Stage one scores every class that entails at least `min_pos_support`
/// positives. Stage two forms conjunctions of up to `max_conjuncts` atoms
/// drawn from the `beam_width` best atoms, skipping conjunctions that cover no
/// positive or that contain an atom subsumed by a co-atom. Expressions with
/// identical extensions on the split collapse to the best-ranked one.
pub fn induce(
    h: &ClassHierarchy,
    store: &AnnotationStore,
    split: &ExampleSplit,
    cfg: &InductionConfig,
) -> Result<Vec<ScoredHypothesis>> {
    cfg.validate()?;
    let index = SplitIndex::new(h, store, split)?;
    let candidates = index.candidates(cfg.min_pos_support);
    if candidates.is_empty() {
        return Err(Error::NoHypothesis);
    }
    let exts = index.extensions(&candidates);

    let mut atoms: Vec<(ScoredHypothesis, usize)> = candidates
        .iter()
        .zip(&exts)
        .enumerate()
        .map(|(i, (&a, ext))| (index.score(vec![a], ext), i))
        .collect();
    atoms.sort_by(|a, b| rank_order(h, &a.0, &b.0));

    let beam: Vec<usize> = atoms
        .iter()
        .take(cfg.beam_width.limit())
        .map(|&(_, i)| i)
        .collect();

    let mut pool: Vec<(ScoredHypothesis, (Bits, Bits))> = atoms
        .into_iter()
        .map(|(hyp, i)| (hyp, (exts[i].pos.clone(), exts[i].neg.clone())))
        .collect();

    if cfg.max_conjuncts > 1 {
        let mut chosen = Vec::with_capacity(cfg.max_conjuncts);
        for (start, &first) in beam.iter().enumerate() {
            chosen.push(candidates[first]);
            expand(
                &index,
                &candidates,
                &exts,
                &beam,
                start + 1,
                &mut chosen,
                exts[first].clone(),
                cfg.max_conjuncts,
                &mut pool,
            );
            chosen.pop();
        }
    }

    Ok(finish(h, pool, cfg.top_k))
}

#[allow(clippy::too_many_arguments)]
fn expand(
    index: &SplitIndex<'_>,
    candidates: &[ClassId],
    exts: &[Extension],
    beam: &[usize],
    from: usize,
    chosen: &mut Vec<ClassId>,
    current: Extension,
    max_conjuncts: usize,
    pool: &mut Vec<(ScoredHypothesis, (Bits, Bits))>,
) {
    if chosen.len() == max_conjuncts {
        return;
    }
    let h = index.h;
    for (offset, &slot) in beam[from..].iter().enumerate() {
        let atom = candidates[slot];
        if chosen
            .iter()
            .any(|&c| h.is_ancestor(c, atom) || h.is_ancestor(atom, c))
        {
            continue;
        }
        let pos = current.pos.and(&exts[slot].pos);
        // z1 can only shrink as conjuncts are added
        if pos.is_empty() {
            continue;
        }
        let ext = Extension {
            pos,
            neg: current.neg.and(&exts[slot].neg),
        };
        chosen.push(atom);
        pool.push((
            index.score(chosen.clone(), &ext),
            (ext.pos.clone(), ext.neg.clone()),
        ));
        expand(
            index,
            candidates,
            exts,
            beam,
            from + offset + 1,
            chosen,
            ext,
            max_conjuncts,
            pool,
        );
        chosen.pop();
    }
}

/// Brute-force reference for [`induce`]: every expression of at most
/// `max_conjuncts` candidate atoms, scored through [`entails`]. Refuses more
/// than [`EXHAUSTIVE_ATOM_LIMIT`] candidate atoms unless `force` is set.
pub fn induce_exhaustive(
    h: &ClassHierarchy,
    store: &AnnotationStore,
    split: &ExampleSplit,
    cfg: &InductionConfig,
    force: bool,
) -> Result<Vec<ScoredHypothesis>> {
    if cfg.max_conjuncts == 0 || cfg.top_k == 0 || cfg.min_pos_support == 0 {
        return Err(Error::Config(
            "max_conjuncts, top_k and min_pos_support must be at least 1".into(),
        ));
    }
    let mut reachable: BTreeSet<ClassId> = BTreeSet::new();
    for p in split.positives() {
        for &c in store.classes_of(p)? {
            reachable.extend(h.ancestors(c).iter().copied());
        }
    }
    for n in split.negatives() {
        store.classes_of(n)?;
    }
    if reachable.len() > EXHAUSTIVE_ATOM_LIMIT && !force {
        return Err(Error::GuardExceeded {
            atoms: reachable.len(),
            limit: EXHAUSTIVE_ATOM_LIMIT,
        });
    }

    let mut atoms: Vec<ClassId> = Vec::new();
    for &a in &reachable {
        let e = ConceptExpression::canonical(h, vec![a]);
        if coverage(h, store, &e, split)?.z1 >= cfg.min_pos_support {
            atoms.push(a);
        }
    }
    if atoms.is_empty() {
        return Err(Error::NoHypothesis);
    }
    atoms.sort_by(|a, b| h.name(*a).cmp(h.name(*b)));

    let mut scored = Vec::new();
    let mut combo = Vec::with_capacity(cfg.max_conjuncts);
    enumerate(
        h,
        store,
        split,
        &atoms,
        0,
        &mut combo,
        cfg.max_conjuncts,
        &mut scored,
    )?;
    Ok(finish(h, scored, cfg.top_k))
}

#[allow(clippy::too_many_arguments)]
fn enumerate(
    h: &ClassHierarchy,
    store: &AnnotationStore,
    split: &ExampleSplit,
    atoms: &[ClassId],
    from: usize,
    combo: &mut Vec<ClassId>,
    max_conjuncts: usize,
    out: &mut Vec<(ScoredHypothesis, Vec<bool>)>,
) -> Result<()> {
    for i in from..atoms.len() {
        combo.push(atoms[i]);
        let redundant = combo.iter().enumerate().any(|(x, &a)| {
            combo
                .iter()
                .enumerate()
                .any(|(y, &b)| x != y && h.is_ancestor(a, b))
        });
        if !redundant {
            let e = ConceptExpression::canonical(h, combo.clone());
            let mut extension = Vec::with_capacity(split.total());
            for x in split.positives().iter().chain(split.negatives()) {
                extension.push(entails(h, store, &e, x)?);
            }
            let hyp = coverage(h, store, &e, split)?;
            if hyp.z1 > 0 {
                out.push((hyp, extension));
            }
        }
        if combo.len() < max_conjuncts {
            enumerate(h, store, split, atoms, i + 1, combo, max_conjuncts, out)?;
        }
        combo.pop();
    }
    Ok(())
}
