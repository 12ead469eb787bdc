#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use neurolabel::{map_annotations, AnnotationStore, ClassHierarchy, HierarchyBuilder};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random DAG over `c0..c{n-1}`; every edge points from a higher to a lower index.
pub fn random_dag(n: usize, max_parents: usize, seed: u64) -> Vec<(String, String)> {
    let mut r = rng(seed);
    let mut edges = Vec::new();
    for i in 1..n {
        let k = r.random_range(0..=max_parents.min(i));
        let mut ps: Vec<usize> = (0..i).collect();
        ps.shuffle(&mut r);
        for &p in &ps[..k] {
            edges.push((format!("c{i}"), format!("c{p}")));
        }
    }
    edges
}

pub fn build(n: usize, edges: &[(String, String)]) -> ClassHierarchy {
    let mut b = HierarchyBuilder::new();
    for i in 0..n {
        b.add_class(&format!("c{i}"));
    }
    for (c, p) in edges {
        b.add_edge(c, p);
    }
    b.build().unwrap()
}

pub fn parents_map(edges: &[(String, String)]) -> BTreeMap<String, Vec<String>> {
    let mut m: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (c, p) in edges {
        m.entry(c.clone()).or_default().push(p.clone());
    }
    m
}

/// Reflexive-transitive ancestors by plain DFS over the edge list.
pub fn dfs_ancestors(edges: &[(String, String)], start: &str) -> BTreeSet<String> {
    let parents = parents_map(edges);
    let mut seen = BTreeSet::new();
    let mut stack = vec![start.to_string()];
    while let Some(c) = stack.pop() {
        if seen.insert(c.clone()) {
            if let Some(ps) = parents.get(&c) {
                stack.extend(ps.iter().cloned());
            }
        }
    }
    seen
}

/// Reflexive-transitive descendants by DFS over reversed edges.
pub fn dfs_descendants(edges: &[(String, String)], start: &str) -> BTreeSet<String> {
    let mut children: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (c, p) in edges {
        children.entry(p.as_str()).or_default().push(c.as_str());
    }
    let mut seen = BTreeSet::new();
    let mut stack = vec![start.to_string()];
    while let Some(c) = stack.pop() {
        if seen.insert(c.clone()) {
            if let Some(cs) = children.get(c.as_str()) {
                stack.extend(cs.iter().map(|s| s.to_string()));
            }
        }
    }
    seen
}

/// Instances `i0..` each annotated with 1..=`max_labels` random classes.
pub fn random_annotations(
    n_classes: usize,
    n_instances: usize,
    max_labels: usize,
    seed: u64,
) -> Vec<(String, String)> {
    let mut r = rng(seed);
    let mut pairs = Vec::new();
    for i in 0..n_instances {
        let k = r.random_range(1..=max_labels);
        for _ in 0..k {
            pairs.push((
                format!("i{i}"),
                format!("c{}", r.random_range(0..n_classes)),
            ));
        }
    }
    pairs
}

pub fn store(h: &ClassHierarchy, pairs: &[(String, String)]) -> AnnotationStore {
    map_annotations(pairs.iter().cloned(), h, 0)
}

/// Synthetic run: a three-level hierarchy with one planted concept per
/// active neuron, a probe set whose activations follow the planted concepts,
/// and retrieved target images per concept.
pub struct Planted {
    pub hierarchy_tsv: String,
    pub annotations_tsv: String,
    pub activations_csv: String,
    pub targets_csv: String,
    pub manifest_tsv: String,
    /// Planted class per neuron; `None` for dead neurons.
    pub concepts: Vec<Option<String>>,
}

pub struct PlantedSpec {
    pub neurons: usize,
    pub dead: usize,
    pub probe_images: usize,
    pub images_per_label: usize,
    /// Neurons (by index) whose retrieved targets activate strongly.
    pub strong: BTreeSet<usize>,
    pub seed: u64,
}

pub fn planted(spec: &PlantedSpec) -> Planted {
    let mut r = rng(spec.seed);
    let n_concepts = spec.neurons;
    let leaves_per = 3;
    let mut h = String::new();
    let mut leaves: Vec<(String, usize)> = Vec::new();
    for d in 0..8 {
        let _ = writeln!(h, "domain_{d}\tentity");
    }
    for j in 0..n_concepts {
        let _ = writeln!(h, "concept_{j}\tdomain_{}", j % 8);
        for k in 0..leaves_per {
            let leaf = format!("obj_{j}_{k}");
            let _ = writeln!(h, "{leaf}\tconcept_{j}");
            leaves.push((leaf, j));
        }
    }
    for d in 0..4 {
        let _ = writeln!(h, "distractor_{d}\tentity");
    }

    let active = spec.neurons - spec.dead;
    let concepts: Vec<Option<String>> = (0..spec.neurons)
        .map(|j| (j < active).then(|| format!("concept_{j}")))
        .collect();

    let mut ann = String::new();
    let mut holds: Vec<BTreeSet<usize>> = Vec::new();
    for i in 0..spec.probe_images {
        let mut has = BTreeSet::new();
        let k = r.random_range(2..=4);
        for _ in 0..k {
            let (leaf, j) = &leaves[r.random_range(0..leaves.len())];
            let _ = writeln!(ann, "p{i}\t{leaf}");
            has.insert(*j);
        }
        if r.random_bool(0.3) {
            let _ = writeln!(ann, "p{i}\tdistractor_{}", r.random_range(0..4));
        }
        holds.push(has);
    }

    let header = |s: &mut String| {
        s.push_str("instance_id");
        for j in 0..spec.neurons {
            let _ = write!(s, ",n{j}");
        }
        s.push('\n');
    };
    let mut act = String::new();
    header(&mut act);
    for (i, has) in holds.iter().enumerate() {
        let _ = write!(act, "p{i}");
        for j in 0..spec.neurons {
            let v = if j >= active {
                0.0
            } else if has.contains(&j) {
                r.random_range(8.5..10.0)
            } else {
                r.random_range(0.0..1.5)
            };
            let _ = write!(act, ",{v}");
        }
        act.push('\n');
    }

    let mut targets = String::new();
    let mut manifest = String::new();
    header(&mut targets);
    for j in 0..active {
        for t in 0..spec.images_per_label {
            let id = format!("t{j}_{t}");
            let _ = writeln!(manifest, "concept_{j}\t{id}");
            let _ = write!(targets, "{id}");
            for n in 0..spec.neurons {
                let v = if n >= active {
                    0.0
                } else if n == j && (spec.strong.contains(&j) || t % 5 < 2) {
                    r.random_range(9.0..12.0)
                } else {
                    r.random_range(0.0..3.0)
                };
                let _ = write!(targets, ",{v}");
            }
            targets.push('\n');
        }
    }

    Planted {
        hierarchy_tsv: h,
        annotations_tsv: ann,
        activations_csv: act,
        targets_csv: targets,
        manifest_tsv: manifest,
        concepts,
    }
}

/// Writes the fixture and a TOML config into `dir`; returns the config path.
pub fn write_run(dir: &Path, p: &Planted, extra: &str) -> PathBuf {
    fs::write(dir.join("hierarchy.tsv"), &p.hierarchy_tsv).unwrap();
    fs::write(dir.join("annotations.tsv"), &p.annotations_tsv).unwrap();
    fs::write(dir.join("activations.csv"), &p.activations_csv).unwrap();
    fs::write(dir.join("targets.csv"), &p.targets_csv).unwrap();
    fs::write(dir.join("manifest.tsv"), &p.manifest_tsv).unwrap();
    let cfg = format!(
        r#"{extra}

[paths]
hierarchy = "hierarchy.tsv"
annotations = "annotations.tsv"
activations = "activations.csv"
target_activations = "targets.csv"
manifests = ["manifest.tsv"]
output_dir = "out"
"#
    );
    let path = dir.join("run.toml");
    fs::write(&path, cfg).unwrap();
    path
}
