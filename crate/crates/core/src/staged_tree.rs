//! Staged trees: construction from multipartition matrices, the stratified
//! and balanced predicates, interpolating polynomials, the reverse
//! tree-to-matrix conversion, DOT export, and a seeded generator of
//! balanced stratified trees for property suites.
//!
//! The tree of a matrix has one vertex per distinct column of each prefix
//! stack; repeated columns map to one path, with the lost multiplicity
//! recorded as a leaf annotation on the side.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::fraction::Fraction;
use crate::matrix::MultipartitionMatrix;

/// An edge label `s^{level+1}_{index+1}`: one symbol per block row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label {
    /// 0-based level of the block the label belongs to.
    pub level: usize,
    /// 0-based row index within the block.
    pub index: usize,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s^{}_{}", self.level + 1, self.index + 1)
    }
}

#[derive(Clone, Debug)]
struct Vertex {
    level: usize,
    parent: Option<usize>,
    /// Outgoing edges, sorted by label.
    children: Vec<(Label, usize)>,
}

/// A rooted, directed, edge-labelled tree. Vertex 0 is the root. The type
/// holds arbitrary labelled trees; stagedness and stratification are
/// predicates ([`StagedTree::staged_witness`], [`is_stratified`]).
#[derive(Clone, Debug)]
pub struct StagedTree {
    vertices: Vec<Vertex>,
    /// Column multiplicities for leaves, when built from a matrix with
    /// repeated columns. Not part of the formal tree.
    leaf_multiplicity: HashMap<usize, u64>,
}

/// Incremental construction of a labelled tree.
pub struct TreeBuilder {
    vertices: Vec<Vertex>,
}

impl TreeBuilder {
    pub fn new() -> Self {
        TreeBuilder {
            vertices: vec![Vertex {
                level: 0,
                parent: None,
                children: Vec::new(),
            }],
        }
    }

    /// Adds a child under `parent` with the given edge label; returns the
    /// new vertex id. Panics on a duplicate label at the same vertex.
    pub fn add_child(&mut self, parent: usize, label: Label) -> usize {
        assert!(
            !self.vertices[parent]
                .children
                .iter()
                .any(|(l, _)| *l == label),
            "duplicate label {label} at vertex {parent}"
        );
        let id = self.vertices.len();
        let level = self.vertices[parent].level + 1;
        self.vertices.push(Vertex {
            level,
            parent: Some(parent),
            children: Vec::new(),
        });
        self.vertices[parent].children.push((label, id));
        id
    }

    pub fn finish(mut self) -> StagedTree {
        for v in self.vertices.iter_mut() {
            v.children.sort_by_key(|(l, _)| *l);
        }
        StagedTree {
            vertices: self.vertices,
            leaf_multiplicity: HashMap::new(),
        }
    }
}

impl Default for TreeBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl StagedTree {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn level(&self, v: usize) -> usize {
        self.vertices[v].level
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.vertices[v].parent
    }

    pub fn children(&self, v: usize) -> &[(Label, usize)] {
        &self.vertices[v].children
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        self.vertices[v].children.is_empty()
    }

    pub fn leaves(&self) -> Vec<usize> {
        (0..self.n_vertices())
            .filter(|&v| self.is_leaf(v))
            .collect()
    }

    /// The floret of `v`: the label set of its outgoing edges.
    pub fn floret(&self, v: usize) -> BTreeSet<Label> {
        self.vertices[v].children.iter().map(|(l, _)| *l).collect()
    }

    /// Column multiplicity annotation of a leaf (1 when absent).
    pub fn leaf_multiplicity(&self, v: usize) -> u64 {
        self.leaf_multiplicity.get(&v).copied().unwrap_or(1)
    }

    /// Edge labels along the root-to-v path.
    pub fn path_labels(&self, v: usize) -> Vec<Label> {
        let mut labels = Vec::new();
        let mut cur = v;
        while let Some(p) = self.vertices[cur].parent {
            let label = self.vertices[p]
                .children
                .iter()
                .find(|(_, c)| *c == cur)
                .map(|(l, _)| *l)
                .expect("child link");
            labels.push(label);
            cur = p;
        }
        labels.reverse();
        labels
    }

    /// Stable vertex name: the path-of-labels string.
    pub fn vertex_name(&self, v: usize) -> String {
        let labels = self.path_labels(v);
        if labels.is_empty() {
            "v".to_string()
        } else {
            let parts: Vec<String> = labels.iter().map(|l| l.to_string()).collect();
            format!("v_{{{}}}", parts.join(" "))
        }
    }

    /// Non-leaf vertices grouped by floret (the stages), ordered by their
    /// smallest vertex.
    pub fn stages(&self) -> Vec<Vec<usize>> {
        let mut by_floret: BTreeMap<Vec<Label>, Vec<usize>> = BTreeMap::new();
        for v in 0..self.n_vertices() {
            if !self.is_leaf(v) {
                let key: Vec<Label> = self.floret(v).into_iter().collect();
                by_floret.entry(key).or_default().push(v);
            }
        }
        let mut stages: Vec<Vec<usize>> = by_floret.into_values().collect();
        stages.sort_by_key(|s| s[0]);
        stages
    }

    /// First pair of vertices whose florets overlap without being equal,
    /// if any. `None` means the tree is staged. (Duplicate labels at one
    /// vertex are impossible by construction.)
    pub fn staged_witness(&self) -> Option<(usize, usize)> {
        let florets: Vec<BTreeSet<Label>> =
            (0..self.n_vertices()).map(|v| self.floret(v)).collect();
        for v in 0..self.n_vertices() {
            if florets[v].is_empty() {
                continue;
            }
            for w in (v + 1)..self.n_vertices() {
                if florets[w].is_empty() || florets[v] == florets[w] {
                    continue;
                }
                if !florets[v].is_disjoint(&florets[w]) {
                    return Some((v, w));
                }
            }
        }
        None
    }

    pub fn is_staged(&self) -> bool {
        self.staged_witness().is_none()
    }

    /// Canonical string form: children sorted by (label, subtree string),
    /// label indices rank-normalized per level. Two trees related by an
    /// order-preserving relabelling compare equal.
    pub fn canonical_form(&self) -> String {
        let mut used: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
        for v in 0..self.n_vertices() {
            for (l, _) in self.children(v) {
                used.entry(l.level).or_default().insert(l.index);
            }
        }
        let rank: HashMap<Label, usize> = used
            .iter()
            .flat_map(|(&level, idxs)| {
                idxs.iter()
                    .enumerate()
                    .map(move |(r, &index)| (Label { level, index }, r))
            })
            .collect();
        self.canon_vertex(self.root(), &rank)
    }

    fn canon_vertex(&self, v: usize, rank: &HashMap<Label, usize>) -> String {
        let mut parts: Vec<String> = self
            .children(v)
            .iter()
            .map(|(l, c)| format!("{}.{}:{}", l.level, rank[l], self.canon_vertex(*c, rank)))
            .collect();
        parts.sort();
        format!("({})", parts.join(","))
    }
}

/// Builds the labelled tree of a multipartition matrix: level-l vertices
/// are the distinct columns of the first l blocks, and repeated columns map
/// to one path (their count becomes the leaf annotation). Fails with
/// [`Error::NotStaged`] when two florets overlap without being equal.
pub fn tree_from_matrix(mat: &MultipartitionMatrix) -> Result<StagedTree, Error> {
    let mut builder = TreeBuilder::new();
    let mut vertex_of_key: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut counts: HashMap<usize, u64> = HashMap::new();
    for j in 0..mat.n_cols() {
        let mut current = 0usize;
        for l in 0..mat.k() {
            let key = mat.column_key(j, l + 1).to_vec();
            current = match vertex_of_key.get(&key) {
                Some(&v) => v,
                None => {
                    let label = Label {
                        level: l,
                        index: mat.selector(l, j),
                    };
                    let v = builder.add_child(current, label);
                    vertex_of_key.insert(key, v);
                    v
                }
            };
        }
        *counts.entry(current).or_insert(0) += 1;
    }
    let mut tree = builder.finish();
    tree.leaf_multiplicity = counts.into_iter().filter(|&(_, c)| c > 1).collect();
    if let Some((v, w)) = tree.staged_witness() {
        return Err(Error::NotStaged {
            vertex_a: tree.vertex_name(v),
            vertex_b: tree.vertex_name(w),
        });
    }
    Ok(tree)
}

/// A stratified tree has all leaves at one level, and equal florets only at
/// equal levels.
pub fn is_stratified(tree: &StagedTree) -> bool {
    let leaves = tree.leaves();
    let Some(&first) = leaves.first() else {
        return false;
    };
    let leaf_level = tree.level(first);
    if leaves.iter().any(|&v| tree.level(v) != leaf_level) {
        return false;
    }
    for stage in tree.stages() {
        let level = tree.level(stage[0]);
        if stage.iter().any(|&v| tree.level(v) != level) {
            return false;
        }
    }
    true
}

/// A polynomial in the edge labels with nonnegative integer coefficients;
/// monomials are kept sorted, so equality is canonical.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelPolynomial {
    terms: BTreeMap<Vec<Label>, u64>,
}

impl LabelPolynomial {
    pub fn one() -> Self {
        LabelPolynomial {
            terms: BTreeMap::from([(Vec::new(), 1)]),
        }
    }

    pub fn zero() -> Self {
        LabelPolynomial {
            terms: BTreeMap::new(),
        }
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    /// Sum of the coefficients.
    pub fn coefficient_sum(&self) -> u64 {
        self.terms.values().sum()
    }

    pub fn add_assign(&mut self, other: &LabelPolynomial) {
        for (m, c) in &other.terms {
            *self.terms.entry(m.clone()).or_insert(0) += c;
        }
    }

    /// Multiplies by a single label.
    pub fn scale_by_label(&self, label: Label) -> LabelPolynomial {
        let mut terms = BTreeMap::new();
        for (m, c) in &self.terms {
            let mut monomial = m.clone();
            let pos = monomial.partition_point(|l| *l <= label);
            monomial.insert(pos, label);
            *terms.entry(monomial).or_insert(0) += c;
        }
        LabelPolynomial { terms }
    }

    pub fn mul(&self, other: &LabelPolynomial) -> LabelPolynomial {
        let mut terms: BTreeMap<Vec<Label>, u64> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let mut monomial = ma.clone();
                monomial.extend(mb.iter().copied());
                monomial.sort();
                *terms.entry(monomial).or_insert(0) += ca * cb;
            }
        }
        LabelPolynomial { terms }
    }

    /// Exact evaluation under a full label assignment.
    pub fn eval(&self, values: &HashMap<Label, Fraction>) -> Fraction {
        let mut total = Fraction::zero();
        for (m, c) in &self.terms {
            let mut term = Fraction::from(*c);
            for l in m {
                term *= &values[l];
            }
            total += &term;
        }
        total
    }
}

/// Interpolating polynomials of every vertex: `t(v)` sums the label
/// products over the v-to-leaf paths, computed bottom-up.
pub fn interpolating_polynomials(tree: &StagedTree) -> Vec<LabelPolynomial> {
    let mut memo: Vec<Option<LabelPolynomial>> = vec![None; tree.n_vertices()];
    // Vertices are created parent-before-child, so a reverse sweep is a
    // valid topological order.
    for v in (0..tree.n_vertices()).rev() {
        let poly = if tree.is_leaf(v) {
            LabelPolynomial::one()
        } else {
            let mut acc = LabelPolynomial::zero();
            for (label, child) in tree.children(v) {
                let sub = memo[*child].as_ref().expect("children computed first");
                acc.add_assign(&sub.scale_by_label(*label));
            }
            acc
        };
        memo[v] = Some(poly);
    }
    memo.into_iter().map(|p| p.expect("all computed")).collect()
}

/// `t(v)` for a single vertex.
pub fn interpolating_polynomial(tree: &StagedTree, v: usize) -> LabelPolynomial {
    interpolating_polynomials(tree)[v].clone()
}

/// Witness for an unbalanced pair: same-stage vertices `v, w` and the
/// label-matched children whose cross products differ.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BalanceCounterexample {
    pub v: usize,
    pub w: usize,
    pub v_child_a: usize,
    pub v_child_b: usize,
    pub w_child_a: usize,
    pub w_child_b: usize,
}

/// Outcome of the balanced test.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BalanceOutcome {
    Balanced,
    Unbalanced(BalanceCounterexample),
    /// Stages are undefined: the tree is not staged.
    NotStaged {
        vertex_a: usize,
        vertex_b: usize,
    },
}

/// Checks the interpolating-polynomial cross products over all same-stage
/// vertex pairs: `t(v')t(w'') = t(w')t(v'')` for label-matched children.
pub fn balance_check(tree: &StagedTree) -> BalanceOutcome {
    if let Some((v, w)) = tree.staged_witness() {
        return BalanceOutcome::NotStaged {
            vertex_a: v,
            vertex_b: w,
        };
    }
    let polys = interpolating_polynomials(tree);
    for stage in tree.stages() {
        if stage.len() < 2 {
            continue;
        }
        let labels: Vec<Label> = tree.floret(stage[0]).into_iter().collect();
        for (pos, &v) in stage.iter().enumerate() {
            for &w in &stage[pos + 1..] {
                let child = |x: usize, l: Label| {
                    tree.children(x)
                        .iter()
                        .find(|(cl, _)| *cl == l)
                        .map(|(_, c)| *c)
                        .expect("same floret")
                };
                for a in 0..labels.len() {
                    for b in (a + 1)..labels.len() {
                        let va = child(v, labels[a]);
                        let vb = child(v, labels[b]);
                        let wa = child(w, labels[a]);
                        let wb = child(w, labels[b]);
                        if polys[va].mul(&polys[wb]) != polys[wa].mul(&polys[vb]) {
                            return BalanceOutcome::Unbalanced(BalanceCounterexample {
                                v,
                                w,
                                v_child_a: va,
                                v_child_b: vb,
                                w_child_a: wa,
                                w_child_b: wb,
                            });
                        }
                    }
                }
            }
        }
    }
    BalanceOutcome::Balanced
}

pub fn is_balanced(tree: &StagedTree) -> bool {
    balance_check(tree) == BalanceOutcome::Balanced
}

/// Converts a stratified tree to its multipartition matrix: one column per
/// root-to-leaf path (depth-first, children in label order), one block per
/// level, one row per label used at that level (rank order).
pub fn matrix_from_tree(tree: &StagedTree) -> Result<MultipartitionMatrix, Error> {
    let leaves = tree.leaves();
    let Some(&first) = leaves.first() else {
        return Err(Error::NotStratified("tree has no leaves".into()));
    };
    let k = tree.level(first);
    if k == 0 {
        return Err(Error::NotStratified("root is a leaf".into()));
    }
    if leaves.iter().any(|&v| tree.level(v) != k) {
        return Err(Error::NotStratified("leaves at different levels".into()));
    }
    // Rank the labels used at each level.
    let mut used: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); k];
    for v in 0..tree.n_vertices() {
        for (l, _) in tree.children(v) {
            used[l.level].insert(l.index);
        }
    }
    let rank: Vec<HashMap<usize, usize>> = used
        .iter()
        .map(|idxs| idxs.iter().enumerate().map(|(r, &i)| (i, r)).collect())
        .collect();
    // Depth-first paths with children in label order.
    let mut paths: Vec<Vec<Label>> = Vec::new();
    let mut stack: Vec<(usize, Vec<Label>)> = vec![(tree.root(), Vec::new())];
    while let Some((v, path)) = stack.pop() {
        if tree.is_leaf(v) {
            paths.push(path);
            continue;
        }
        for (label, child) in tree.children(v).iter().rev() {
            let mut next = path.clone();
            next.push(*label);
            stack.push((*child, next));
        }
    }
    let m = paths.len();
    let mut blocks: Vec<Vec<Vec<u8>>> = (0..k).map(|l| vec![vec![0u8; m]; used[l].len()]).collect();
    for (j, path) in paths.iter().enumerate() {
        for label in path {
            blocks[label.level][rank[label.level][&label.index]][j] = 1;
        }
    }
    MultipartitionMatrix::new(blocks)
}

/// Generator configuration: tree depth, per-vertex branching bound, and the
/// probability of reusing an existing stage when creating a vertex type.
#[derive(Clone, Copy, Debug)]
pub struct GeneratorConfig {
    pub levels: usize,
    pub max_branching: usize,
    pub stage_merge_prob: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            levels: 3,
            max_branching: 3,
            stage_merge_prob: 0.5,
        }
    }
}

#[derive(Clone)]
struct VertexType {
    floret: Vec<Label>,
    child_types: Vec<usize>,
}

/// Generates a balanced stratified staged tree. Same-stage vertices receive
/// isomorphic subtrees (equal interpolating polynomials), which forces the
/// balanced condition; fresh label sets per stage keep florets equal or
/// disjoint. Deterministic in (seed, config).
pub fn generate_balanced_stratified(seed: u64, config: &GeneratorConfig) -> StagedTree {
    assert!(config.levels >= 1, "at least one level");
    assert!(config.max_branching >= 1, "at least one branch");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut types: Vec<Vec<VertexType>> = vec![Vec::new(); config.levels];
    let mut label_counter: Vec<usize> = vec![0; config.levels];
    let root_type = make_type(&mut rng, config, &mut types, &mut label_counter, 0);
    let mut builder = TreeBuilder::new();
    expand(&mut builder, &types, 0, root_type, 0, config.levels);
    builder.finish()
}

fn make_type(
    rng: &mut ChaCha8Rng,
    config: &GeneratorConfig,
    types: &mut Vec<Vec<VertexType>>,
    label_counter: &mut [usize],
    level: usize,
) -> usize {
    if !types[level].is_empty() && rng.gen::<f64>() < config.stage_merge_prob {
        return rng.gen_range(0..types[level].len());
    }
    let branching = rng.gen_range(1..=config.max_branching);
    let floret: Vec<Label> = (0..branching)
        .map(|_| {
            let index = label_counter[level];
            label_counter[level] += 1;
            Label { level, index }
        })
        .collect();
    let child_types: Vec<usize> = (0..branching)
        .map(|_| {
            if level + 1 < config.levels {
                make_type(rng, config, types, label_counter, level + 1)
            } else {
                usize::MAX
            }
        })
        .collect();
    types[level].push(VertexType {
        floret,
        child_types,
    });
    types[level].len() - 1
}

fn expand(
    builder: &mut TreeBuilder,
    types: &[Vec<VertexType>],
    level: usize,
    type_id: usize,
    vertex: usize,
    levels: usize,
) {
    let ty = types[level][type_id].clone();
    for (label, &child_type) in ty.floret.iter().zip(&ty.child_types) {
        let child = builder.add_child(vertex, *label);
        if level + 1 < levels {
            expand(builder, types, level + 1, child_type, child, levels);
        }
    }
}

/// DOT export: vertices colored by stage, edges labelled by their symbol,
/// repeated-column multiplicities annotated `xN` on leaves. Vertex names
/// are the stable path-of-labels strings.
pub fn to_dot(tree: &StagedTree) -> String {
    const PALETTE: [&str; 8] = [
        "#c9b8e8", "#9ecbff", "#ffb3b3", "#b8e8c9", "#ffe0a3", "#e8b8d9", "#a3e0e8", "#d9d9d9",
    ];
    let mut stage_of: HashMap<usize, usize> = HashMap::new();
    for (s, stage) in tree.stages().iter().enumerate() {
        for &v in stage {
            stage_of.insert(v, s);
        }
    }
    let mut out = String::from("digraph staged_tree {\n  rankdir=LR;\n");
    for v in 0..tree.n_vertices() {
        let name = tree.vertex_name(v);
        let mut attrs = Vec::new();
        if let Some(&s) = stage_of.get(&v) {
            attrs.push(format!(
                "style=filled, fillcolor=\"{}\"",
                PALETTE[s % PALETTE.len()]
            ));
        }
        let label = if tree.is_leaf(v) && tree.leaf_multiplicity(v) > 1 {
            format!("x{}", tree.leaf_multiplicity(v))
        } else {
            String::new()
        };
        attrs.push(format!("label=\"{label}\""));
        out.push_str(&format!("  \"{}\" [{}];\n", name, attrs.join(", ")));
    }
    for v in 0..tree.n_vertices() {
        for (label, child) in tree.children(v) {
            out.push_str(&format!(
                "  \"{}\" -> \"{}\" [label=\"{}\"];\n",
                tree.vertex_name(v),
                tree.vertex_name(*child),
                label
            ));
        }
    }
    out.push_str("}\n");
    out
}
