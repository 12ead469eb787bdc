//! Background class hierarchy, instance annotations and entailment.
//!
//! The hierarchy is a subclass DAG over interned class names. After
//! construction every class carries its reflexive-transitive ancestor set,
//! stored as a sorted id array (and, for small hierarchies, as a bit row as
//! well), so that `A ⊑* B` is a binary search or a single bit test.
//!
//! Instances are linked to the hierarchy only through the classes they are
//! annotated with. An instance `x` belongs to atomic class `A` iff one of its
//! annotated classes has `A` among its ancestors.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::induction::ConceptExpression;

/// Dense class identifier, assigned in first-seen order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ClassId(pub u32);

impl ClassId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Hierarchies with at most this many classes also get a bit-matrix index.
pub const DEFAULT_BITSET_BUDGET: usize = 4096;

struct BitMatrix {
    words_per_row: usize,
    words: Vec<u64>,
}

impl BitMatrix {
    fn new(rows: usize, cols: usize) -> Self {
        let words_per_row = cols.div_ceil(64);
        BitMatrix {
            words_per_row,
            words: vec![0; rows * words_per_row],
        }
    }

    #[inline]
    fn set(&mut self, row: usize, col: usize) {
        self.words[row * self.words_per_row + col / 64] |= 1 << (col % 64);
    }

    #[inline]
    fn get(&self, row: usize, col: usize) -> bool {
        self.words[row * self.words_per_row + col / 64] & (1 << (col % 64)) != 0
    }
}

/// Per-class ancestors-or-self, flattened.
struct AncestorIndex {
    spans: Vec<(usize, u32)>,
    ids: Vec<ClassId>,
    bits: Option<BitMatrix>,
}

pub struct ClassHierarchy {
    names: Vec<String>,
    lookup: HashMap<String, ClassId>,
    parent_offsets: Vec<usize>,
    parents: Vec<ClassId>,
    ancestors: AncestorIndex,
}

impl std::fmt::Debug for ClassHierarchy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ClassHierarchy")
            .field("classes", &self.names.len())
            .field("edges", &self.parents.len())
            .field("bitset", &self.ancestors.bits.is_some())
            .finish()
    }
}

/// Collects classes and subclass edges, then builds a [`ClassHierarchy`].
pub struct HierarchyBuilder {
    names: Vec<String>,
    lookup: HashMap<String, ClassId>,
    edges: Vec<(ClassId, ClassId)>,
    bitset_budget: usize,
}

impl Default for HierarchyBuilder {
    fn default() -> Self {
        HierarchyBuilder {
            names: Vec::new(),
            lookup: HashMap::new(),
            edges: Vec::new(),
            bitset_budget: DEFAULT_BITSET_BUDGET,
        }
    }
}

impl HierarchyBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Build the bit-matrix index only when the class count is at most `budget`.
    /// A budget of 0 disables it.
    pub fn bitset_budget(mut self, budget: usize) -> Self {
        self.bitset_budget = budget;
        self
    }

    pub fn add_class(&mut self, name: &str) -> ClassId {
        if let Some(&id) = self.lookup.get(name) {
            return id;
        }
        let id = ClassId(self.names.len() as u32);
        self.names.push(name.to_owned());
        self.lookup.insert(name.to_owned(), id);
        id
    }

    pub fn add_edge(&mut self, child: &str, parent: &str) {
        let c = self.add_class(child);
        let p = self.add_class(parent);
        self.edges.push((c, p));
    }

    pub fn build(self) -> Result<ClassHierarchy> {
        let HierarchyBuilder {
            names,
            lookup,
            mut edges,
            bitset_budget,
        } = self;
        let n = names.len();
        edges.sort_unstable();
        edges.dedup();

        if let Some(&(c, _)) = edges.iter().find(|(c, p)| c == p) {
            let name = names[c.index()].clone();
            return Err(Error::Cycle(vec![name.clone(), name]));
        }

        let mut parent_offsets = vec![0usize; n + 1];
        for &(c, _) in &edges {
            parent_offsets[c.index() + 1] += 1;
        }
        for i in 0..n {
            parent_offsets[i + 1] += parent_offsets[i];
        }
        let parents: Vec<ClassId> = edges.iter().map(|&(_, p)| p).collect();

        let mut child_offsets = vec![0usize; n + 1];
        for &(_, p) in &edges {
            child_offsets[p.index() + 1] += 1;
        }
        for i in 0..n {
            child_offsets[i + 1] += child_offsets[i];
        }
        let mut fill = child_offsets.clone();
        let mut children = vec![ClassId(0); edges.len()];
        for &(c, p) in &edges {
            children[fill[p.index()]] = c;
            fill[p.index()] += 1;
        }
        drop(edges);

        let mut pending: Vec<u32> = (0..n)
            .map(|i| (parent_offsets[i + 1] - parent_offsets[i]) as u32)
            .collect();
        let mut queue: VecDeque<usize> = (0..n).filter(|&i| pending[i] == 0).collect();
        let mut spans = vec![(0usize, 0u32); n];
        let mut ids: Vec<ClassId> = Vec::with_capacity(n * 4);
        let mut done = vec![false; n];
        let mut processed = 0usize;
        let mut scratch: Vec<ClassId> = Vec::new();

        while let Some(c) = queue.pop_front() {
            scratch.clear();
            scratch.push(ClassId(c as u32));
            for p in &parents[parent_offsets[c]..parent_offsets[c + 1]] {
                let (start, len) = spans[p.index()];
                scratch.extend_from_slice(&ids[start..start + len as usize]);
            }
            scratch.sort_unstable();
            scratch.dedup();
            spans[c] = (ids.len(), scratch.len() as u32);
            ids.extend_from_slice(&scratch);
            done[c] = true;
            processed += 1;

            for child in &children[child_offsets[c]..child_offsets[c + 1]] {
                let k = child.index();
                pending[k] -= 1;
                if pending[k] == 0 {
                    queue.push_back(k);
                }
            }
        }

        if processed < n {
            let start = (0..n).find(|&i| !done[i]).expect("unprocessed class");
            let mut path = vec![start];
            let mut seen_at: HashMap<usize, usize> = HashMap::from([(start, 0)]);
            let mut cur = start;
            loop {
                let next = parents[parent_offsets[cur]..parent_offsets[cur + 1]]
                    .iter()
                    .map(|p| p.index())
                    .find(|&p| !done[p])
                    .expect("unprocessed class has an unprocessed parent");
                if let Some(&at) = seen_at.get(&next) {
                    let mut cycle: Vec<String> =
                        path[at..].iter().map(|&i| names[i].clone()).collect();
                    cycle.push(names[next].clone());
                    return Err(Error::Cycle(cycle));
                }
                seen_at.insert(next, path.len());
                path.push(next);
                cur = next;
            }
        }

        ids.shrink_to_fit();
        let bits = (n > 0 && n <= bitset_budget).then(|| {
            let mut m = BitMatrix::new(n, n);
            for (c, &(start, len)) in spans.iter().enumerate() {
                for a in &ids[start..start + len as usize] {
                    m.set(c, a.index());
                }
            }
            m
        });

        Ok(ClassHierarchy {
            names,
            lookup,
            parent_offsets,
            parents,
            ancestors: AncestorIndex { spans, ids, bits },
        })
    }
}

impl ClassHierarchy {
    /// Parse `child<TAB>parent` lines. A line with a single field declares a
    /// class with no parent. Blank lines and `#` comments are skipped.
    pub fn from_tsv<R: BufRead>(reader: R) -> Result<Self> {
        Self::from_tsv_with(reader, HierarchyBuilder::new())
    }

    pub fn from_tsv_with<R: BufRead>(mut reader: R, mut builder: HierarchyBuilder) -> Result<Self> {
        let mut line = String::new();
        let mut lineno = 0usize;
        loop {
            line.clear();
            let read = reader.read_line(&mut line).map_err(|e| Error::Malformed {
                line: lineno + 1,
                reason: e.to_string(),
            })?;
            if read == 0 {
                break;
            }
            lineno += 1;
            let record = line.trim_end_matches(['\n', '\r']);
            if record.trim().is_empty() || record.starts_with('#') {
                continue;
            }
            let mut fields = record.split('\t');
            let child = fields.next().unwrap_or_default();
            let parent = fields.next();
            if fields.next().is_some() {
                return Err(Error::Malformed {
                    line: lineno,
                    reason: "expected `child<TAB>parent`, found extra fields".into(),
                });
            }
            if child.is_empty() || parent.is_some_and(str::is_empty) {
                return Err(Error::Malformed {
                    line: lineno,
                    reason: "empty class name".into(),
                });
            }
            match parent {
                Some(parent) => builder.add_edge(child, parent),
                None => {
                    builder.add_class(child);
                }
            }
        }
        builder.build()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_tsv(BufReader::with_capacity(1 << 20, file))
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.parents.len()
    }

    pub fn has_bitset(&self) -> bool {
        self.ancestors.bits.is_some()
    }

    pub fn id(&self, name: &str) -> Option<ClassId> {
        self.lookup.get(name).copied()
    }

    pub fn require(&self, name: &str) -> Result<ClassId> {
        self.id(name)
            .ok_or_else(|| Error::UnknownClass(name.to_owned()))
    }

    pub fn name(&self, id: ClassId) -> &str {
        &self.names[id.index()]
    }

    pub fn contains(&self, id: ClassId) -> bool {
        id.index() < self.names.len()
    }

    pub fn class_ids(&self) -> impl Iterator<Item = ClassId> + '_ {
        (0..self.names.len() as u32).map(ClassId)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Direct superclasses.
    pub fn parents(&self, id: ClassId) -> &[ClassId] {
        &self.parents[self.parent_offsets[id.index()]..self.parent_offsets[id.index() + 1]]
    }

    /// Ancestors-or-self of `id`, sorted by id.
    pub fn ancestors(&self, id: ClassId) -> &[ClassId] {
        let (start, len) = self.ancestors.spans[id.index()];
        &self.ancestors.ids[start..start + len as usize]
    }

    /// `true` iff `descendant ⊑* ancestor` (reflexive).
    #[inline]
    pub fn is_ancestor(&self, ancestor: ClassId, descendant: ClassId) -> bool {
        match &self.ancestors.bits {
            Some(bits) => bits.get(descendant.index(), ancestor.index()),
            None => self.ancestors(descendant).binary_search(&ancestor).is_ok(),
        }
    }

    /// Total number of stored ancestor entries.
    pub fn index_size(&self) -> usize {
        self.ancestors.ids.len()
    }
}

/// Instance → annotated classes.
#[derive(Debug, Clone, Default)]
pub struct AnnotationStore {
    instances: Vec<String>,
    lookup: HashMap<String, usize>,
    classes: Vec<Vec<ClassId>>,
    unmapped: BTreeMap<String, usize>,
}

impl AnnotationStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers an instance (with an empty class set if it is new).
    pub fn insert_instance(&mut self, instance: &str) -> usize {
        if let Some(&i) = self.lookup.get(instance) {
            return i;
        }
        let i = self.instances.len();
        self.instances.push(instance.to_owned());
        self.lookup.insert(instance.to_owned(), i);
        self.classes.push(Vec::new());
        i
    }

    pub fn annotate(&mut self, instance: &str, class: ClassId) {
        let i = self.insert_instance(instance);
        if let Err(pos) = self.classes[i].binary_search(&class) {
            self.classes[i].insert(pos, class);
        }
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn index_of(&self, instance: &str) -> Option<usize> {
        self.lookup.get(instance).copied()
    }

    pub fn contains(&self, instance: &str) -> bool {
        self.lookup.contains_key(instance)
    }

    pub fn instances(&self) -> &[String] {
        &self.instances
    }

    pub fn classes_at(&self, index: usize) -> &[ClassId] {
        &self.classes[index]
    }

    pub fn classes_of(&self, instance: &str) -> Result<&[ClassId]> {
        self.index_of(instance)
            .map(|i| self.classes[i].as_slice())
            .ok_or_else(|| Error::UnknownInstance(instance.to_owned()))
    }

    /// Raw (normalized) labels that matched no class, with occurrence counts.
    pub fn unmapped(&self) -> &BTreeMap<String, usize> {
        &self.unmapped
    }

    /// Every class the instance belongs to: the union of the ancestor sets
    /// of its annotated classes, sorted by id.
    pub fn closure(&self, h: &ClassHierarchy, index: usize) -> Vec<ClassId> {
        let mut out: Vec<ClassId> = self.classes[index]
            .iter()
            .flat_map(|&c| h.ancestors(c).iter().copied())
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Unicode-scalar edit distance with unit insert/delete/substitute costs.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Lowercase, trim, and join whitespace-separated words with `_`.
pub fn normalize_label(raw: &str) -> String {
    raw.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join("_")
}

/// Closest class name within `max_distance`; ties go to the lexicographically
/// smallest name.
pub fn nearest_class(h: &ClassHierarchy, label: &str, max_distance: usize) -> Option<ClassId> {
    if let Some(id) = h.id(label) {
        return Some(id);
    }
    if max_distance == 0 {
        return None;
    }
    let len = label.chars().count();
    let mut best: Option<(usize, &str, ClassId)> = None;
    for (i, name) in h.names().iter().enumerate() {
        if name.chars().count().abs_diff(len) > max_distance {
            continue;
        }
        let d = levenshtein(label, name);
        if d > max_distance {
            continue;
        }
        let better = match best {
            None => true,
            Some((bd, bn, _)) => (d, name.as_str()) < (bd, bn),
        };
        if better {
            best = Some((d, name, ClassId(i as u32)));
        }
    }
    best.map(|(_, _, id)| id)
}

/// Parse `instance_id<TAB>object_label` lines.
pub fn read_annotation_pairs<R: BufRead>(reader: R) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::Malformed {
            line: lineno,
            reason: e.to_string(),
        })?;
        let record = line.trim_end_matches('\r');
        if record.trim().is_empty() || record.starts_with('#') {
            continue;
        }
        match record.split_once('\t') {
            Some((inst, label)) if !inst.is_empty() && !label.contains('\t') => {
                out.push((inst.to_owned(), label.to_owned()));
            }
            _ => {
                return Err(Error::Malformed {
                    line: lineno,
                    reason: "expected `instance_id<TAB>object_label`".into(),
                })
            }
        }
    }
    Ok(out)
}

pub fn load_annotation_pairs(path: impl AsRef<Path>) -> Result<Vec<(String, String)>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_annotation_pairs(BufReader::new(file))
}

/// Map raw object labels onto hierarchy classes.
pub fn map_annotations<I, S, T>(raw: I, h: &ClassHierarchy, max_distance: usize) -> AnnotationStore
where
    I: IntoIterator<Item = (S, T)>,
    S: AsRef<str>,
    T: AsRef<str>,
{
    let mut store = AnnotationStore::new();
    let mut cache: HashMap<String, Option<ClassId>> = HashMap::new();
    let mut seen: HashSet<(String, String)> = HashSet::new();
    for (instance, label) in raw {
        let instance = instance.as_ref();
        let label = normalize_label(label.as_ref());
        if !seen.insert((instance.to_owned(), label.clone())) {
            continue;
        }
        store.insert_instance(instance);
        let hit = *cache
            .entry(label.clone())
            .or_insert_with(|| nearest_class(h, &label, max_distance));
        match hit {
            Some(class) => store.annotate(instance, class),
            None => *store.unmapped.entry(label).or_insert(0) += 1,
        }
    }
    store
}

/// `K ⊨ E(x)`: every conjunct of `e` is an ancestor-or-self of some class
/// annotated on `x`.
pub fn entails(
    h: &ClassHierarchy,
    store: &AnnotationStore,
    e: &ConceptExpression,
    instance: &str,
) -> Result<bool> {
    let classes = store.classes_of(instance)?;
    for &atom in e.atoms() {
        if !h.contains(atom) {
            return Err(Error::UnknownClass(format!("#{}", atom.0)));
        }
    }
    Ok(e.atoms()
        .iter()
        .all(|&a| classes.iter().any(|&b| h.is_ancestor(a, b))))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn build(edges: &[(&str, &str)]) -> ClassHierarchy {
        let mut b = HierarchyBuilder::new();
        for (c, p) in edges {
            b.add_edge(c, p);
        }
        b.build().unwrap()
    }

    fn names(h: &ClassHierarchy, ids: &[ClassId]) -> Vec<String> {
        let mut v: Vec<String> = ids.iter().map(|&i| h.name(i).to_owned()).collect();
        v.sort();
        v
    }

    #[test]
    fn chain_closure() {
        let h = build(&[("door", "fixture"), ("fixture", "artifact")]);
        let door = h.id("door").unwrap();
        assert_eq!(
            names(&h, h.ancestors(door)),
            ["artifact", "door", "fixture"]
        );
    }

    #[test]
    fn lone_class_is_its_own_ancestor() {
        let h = ClassHierarchy::from_tsv("# classes\na\n".as_bytes()).unwrap();
        let a = h.id("a").unwrap();
        assert_eq!(h.ancestors(a), &[a]);
    }

    #[test]
    fn ids_follow_first_seen_order_and_duplicates_collapse() {
        let h = ClassHierarchy::from_tsv("x\ty\nx\ty\nz\tx\n".as_bytes()).unwrap();
        assert_eq!(h.names(), ["x", "y", "z"]);
        assert_eq!(h.edge_count(), 2);
    }

    #[test]
    fn cycle_reports_witness() {
        let err = ClassHierarchy::from_tsv("a\tb\nb\tc\nc\ta\nd\ta\n".as_bytes()).unwrap_err();
        match err {
            Error::Cycle(path) => {
                assert_eq!(path.first(), path.last());
                assert_eq!(path.len(), 4);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            ClassHierarchy::from_tsv("a\ta\n".as_bytes()),
            Err(Error::Cycle(_))
        ));
    }

    #[test]
    fn malformed_line_number() {
        let err = ClassHierarchy::from_tsv("a\tb\n\nb\tc\td\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 3, .. }), "{err}");
        let err = ClassHierarchy::from_tsv("a\t\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 1, .. }));
    }

    #[test]
    fn sorted_and_bitset_modes_agree() {
        let text = "a\tb\nb\tc\na\td\ne\tc\n";
        let with = ClassHierarchy::from_tsv(text.as_bytes()).unwrap();
        let without = ClassHierarchy::from_tsv_with(
            text.as_bytes(),
            HierarchyBuilder::new().bitset_budget(0),
        )
        .unwrap();
        assert!(with.has_bitset());
        assert!(!without.has_bitset());
        for x in with.class_ids() {
            for y in with.class_ids() {
                assert_eq!(with.is_ancestor(x, y), without.is_ancestor(x, y));
            }
        }
    }

    #[test]
    fn levenshtein_cases() {
        assert_eq!(levenshtein("door", "door"), 0);
        assert_eq!(levenshtein("kitten", "sitting"), 3);
        assert_eq!(levenshtein("", "abc"), 3);
        assert_eq!(levenshtein("abc", ""), 3);
        assert_eq!(levenshtein("café", "cafe"), 1);
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize_label("  Cross  Walk "), "cross_walk");
        assert_eq!(normalize_label("door"), "door");
    }

    #[test]
    fn exact_mapping() {
        let h = build(&[("door", "fixture"), ("dot", "mark")]);
        let store = map_annotations([("img1", "door"), ("img1", "Door")], &h, 0);
        assert_eq!(store.classes_of("img1").unwrap(), &[h.id("door").unwrap()]);
        assert!(store.unmapped().is_empty());

        let store = map_annotations([("img1", "doorx")], &h, 0);
        assert!(store.classes_of("img1").unwrap().is_empty());
        assert_eq!(store.unmapped().get("doorx"), Some(&1));
    }

    #[test]
    fn tie_break_on_equal_distance() {
        let h = build(&[("door", "fixture"), ("dot", "mark")]);
        assert_eq!(levenshtein("dor", "door"), 1);
        assert_eq!(levenshtein("dor", "dot"), 1);
        let store = map_annotations([("img1", "dor")], &h, 1);
        assert_eq!(store.classes_of("img1").unwrap(), &[h.id("door").unwrap()]);
    }

    #[test]
    fn repeated_lines_are_idempotent() {
        let h = build(&[("door", "fixture")]);
        let store = map_annotations([("a", "zzz"), ("a", "zzz"), ("b", "zzz")], &h, 0);
        assert_eq!(store.unmapped().get("zzz"), Some(&2));
    }

    #[test]
    fn annotation_tsv() {
        let pairs =
            read_annotation_pairs("# c\nimg1\tdoor\nimg1\tcross walk\n".as_bytes()).unwrap();
        assert_eq!(pairs.len(), 2);
        assert!(matches!(
            read_annotation_pairs("img1door\n".as_bytes()),
            Err(Error::Malformed { line: 1, .. })
        ));
    }

    #[test]
    fn entailment_basics() {
        let h = build(&[
            ("door", "fixture"),
            ("fixture", "artifact"),
            ("window", "fixture"),
        ]);
        let store = map_annotations([("x", "door")], &h, 0);
        let artifact = ConceptExpression::new(&h, [h.id("artifact").unwrap()]).unwrap();
        assert!(entails(&h, &store, &artifact, "x").unwrap());
        let both =
            ConceptExpression::new(&h, [h.id("door").unwrap(), h.id("window").unwrap()]).unwrap();
        assert!(!entails(&h, &store, &both, "x").unwrap());
        assert!(matches!(
            entails(&h, &store, &artifact, "nope"),
            Err(Error::UnknownInstance(_))
        ));
    }
}
