//! Rectangular switching systems on a labeled graph.
//!
//! Edge labels are canonicalized to `1..=|E|` when a system is built; the
//! edge with canonical label `σ` is stored at index `σ - 1` and the label it
//! was given on input is kept as [`EdgeSpec::original_label`].

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};
use crate::Mat;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub name: String,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSpec {
    pub from: usize,
    pub to: usize,
    /// Canonical label in `1..=|E|`.
    pub label: usize,
    pub original_label: u64,
    pub a: Mat,
    pub b: Mat,
    pub c: Mat,
    pub d: Mat,
}

/// One shared `(A, B, C, D)` tuple of a square switching system.
#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    pub a: Mat,
    pub b: Mat,
    pub c: Mat,
    pub d: Mat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    EmptyGraph,
    DuplicateNodeName {
        name: String,
    },
    UnknownEndpoint {
        edge: u64,
        node: usize,
    },
    ZeroLabel {
        edge_index: usize,
    },
    DuplicateLabel {
        label: u64,
    },
    ShapeMismatch {
        edge: u64,
        matrix: String,
        expected: (usize, usize),
        found: (usize, usize),
    },
    NonFinite {
        edge: u64,
        matrix: String,
    },
    NoOutgoing {
        node: String,
    },
    NoIncoming {
        node: String,
    },
    NotStronglyConnected {
        unreachable: Vec<String>,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyGraph => write!(f, "graph has no nodes"),
            Violation::DuplicateNodeName { name } => write!(f, "duplicate node name {name:?}"),
            Violation::UnknownEndpoint { edge, node } => {
                write!(f, "edge {edge} references unknown node index {node}")
            }
            Violation::ZeroLabel { edge_index } => {
                write!(f, "edge #{edge_index} has label 0 (labels are positive)")
            }
            Violation::DuplicateLabel { label } => write!(f, "label {label} used by several edges"),
            Violation::ShapeMismatch {
                edge,
                matrix,
                expected,
                found,
            } => write!(
                f,
                "edge {edge}: {matrix} is {}x{}, expected {}x{}",
                found.0, found.1, expected.0, expected.1
            ),
            Violation::NonFinite { edge, matrix } => {
                write!(f, "edge {edge}: {matrix} has non-finite entries")
            }
            Violation::NoOutgoing { node } => write!(f, "node {node:?} has no outgoing edge"),
            Violation::NoIncoming { node } => write!(f, "node {node:?} has no incoming edge"),
            Violation::NotStronglyConnected { unreachable } => {
                write!(f, "graph is not strongly connected (cut off: {unreachable:?})")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "ok");
        }
        let msgs: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", msgs.join("; "))
    }
}

/// A graph-constrained switching system in rectangular form.
///
/// Immutable once built. Instances obtained from [`SwitchingSystem::new`]
/// are well formed; [`SwitchingSystem::from_parts`] skips validation so that
/// malformed inputs can still be reported on.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchingSystem {
    nodes: Vec<NodeSpec>,
    edges: Vec<EdgeSpec>,
    input_dim: usize,
    output_dim: usize,
    out_edges: Vec<Vec<usize>>,
}

impl SwitchingSystem {
    /// Build without validation. Edges keep the given order; canonical
    /// labels are not assigned.
    pub fn from_parts(nodes: Vec<NodeSpec>, edges: Vec<EdgeSpec>, input_dim: usize, output_dim: usize) -> Self {
        let mut out_edges = vec![Vec::new(); nodes.len()];
        for (i, e) in edges.iter().enumerate() {
            if e.from < nodes.len() {
                out_edges[e.from].push(i);
            }
        }
        for list in &mut out_edges {
            list.sort_by_key(|&i| edges[i].label);
        }
        SwitchingSystem {
            nodes,
            edges,
            input_dim,
            output_dim,
            out_edges,
        }
    }

    /// Validate and canonicalize labels. `EdgeSpec::label` on input is
    /// ignored; `original_label` determines the canonical order.
    pub fn new(nodes: Vec<NodeSpec>, mut edges: Vec<EdgeSpec>, input_dim: usize, output_dim: usize) -> Result<Self> {
        for e in &mut edges {
            e.label = e.original_label as usize;
        }
        let raw = SwitchingSystem::from_parts(nodes, edges, input_dim, output_dim);
        let report = raw.validate();
        if !report.is_ok() {
            return Err(Error::Invalid(report));
        }
        let SwitchingSystem { nodes, mut edges, .. } = raw;
        edges.sort_by_key(|e| e.original_label);
        for (i, e) in edges.iter_mut().enumerate() {
            e.label = i + 1;
        }
        Ok(SwitchingSystem::from_parts(nodes, edges, input_dim, output_dim))
    }

    pub fn nodes(&self) -> &[NodeSpec] {
        &self.nodes
    }

    pub fn edges(&self) -> &[EdgeSpec] {
        &self.edges
    }

    pub fn edge(&self, index: usize) -> &EdgeSpec {
        &self.edges[index]
    }

    /// Edge with canonical label `label` (1-based).
    pub fn edge_by_label(&self, label: usize) -> Result<usize> {
        if label == 0 || label > self.edges.len() {
            return Err(Error::UnknownLabel(label));
        }
        Ok(label - 1)
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn dim(&self, node: usize) -> usize {
        self.nodes[node].dim
    }

    pub fn dims(&self) -> Vec<usize> {
        self.nodes.iter().map(|n| n.dim).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.nodes.iter().map(|n| n.dim).sum()
    }

    pub fn node_index(&self, name: &str) -> Result<usize> {
        self.nodes
            .iter()
            .position(|n| n.name == name)
            .ok_or_else(|| Error::UnknownNode(name.to_string()))
    }

    /// Outgoing edge indices of `node`, sorted by label.
    pub fn out_edges(&self, node: usize) -> &[usize] {
        &self.out_edges[node]
    }

    /// All nodes share one dimension.
    pub fn uniform_dim(&self) -> Option<usize> {
        let n = self.nodes.first()?.dim;
        self.nodes.iter().all(|v| v.dim == n).then_some(n)
    }

    /// Collect every violation of the rectangular-system rules.
    pub fn validate(&self) -> ValidationReport {
        let mut v = Vec::new();
        if self.nodes.is_empty() {
            v.push(Violation::EmptyGraph);
            return ValidationReport { violations: v };
        }
        let mut names = BTreeSet::new();
        for n in &self.nodes {
            if !names.insert(n.name.as_str()) {
                v.push(Violation::DuplicateNodeName { name: n.name.clone() });
            }
        }
        let mut labels = BTreeSet::new();
        let mut dup = BTreeSet::new();
        let (d, m) = (self.input_dim, self.output_dim);
        for (i, e) in self.edges.iter().enumerate() {
            let id = e.original_label;
            if id == 0 {
                v.push(Violation::ZeroLabel { edge_index: i });
            } else if !labels.insert(id) && dup.insert(id) {
                v.push(Violation::DuplicateLabel { label: id });
            }
            let mut endpoints_ok = true;
            for node in [e.from, e.to] {
                if node >= self.nodes.len() {
                    v.push(Violation::UnknownEndpoint { edge: id, node });
                    endpoints_ok = false;
                }
            }
            if !endpoints_ok {
                continue;
            }
            let (nu, nv) = (self.nodes[e.from].dim, self.nodes[e.to].dim);
            for (name, mat, expected) in [
                ("A", &e.a, (nv, nu)),
                ("B", &e.b, (nv, d)),
                ("C", &e.c, (m, nu)),
                ("D", &e.d, (m, d)),
            ] {
                if mat.shape() != expected {
                    v.push(Violation::ShapeMismatch {
                        edge: id,
                        matrix: name.to_string(),
                        expected,
                        found: mat.shape(),
                    });
                } else if mat.iter().any(|x| !x.is_finite()) {
                    v.push(Violation::NonFinite {
                        edge: id,
                        matrix: name.to_string(),
                    });
                }
            }
        }
        let n = self.nodes.len();
        let valid_edges: Vec<&EdgeSpec> = self.edges.iter().filter(|e| e.from < n && e.to < n).collect();
        let mut has_out = vec![false; n];
        let mut has_in = vec![false; n];
        for e in &valid_edges {
            has_out[e.from] = true;
            has_in[e.to] = true;
        }
        for i in 0..n {
            if !has_out[i] {
                v.push(Violation::NoOutgoing {
                    node: self.nodes[i].name.clone(),
                });
            }
            if !has_in[i] {
                v.push(Violation::NoIncoming {
                    node: self.nodes[i].name.clone(),
                });
            }
        }
        let fwd = reach(n, &valid_edges, false);
        let bwd = reach(n, &valid_edges, true);
        let cut: Vec<String> = (0..n)
            .filter(|&i| !fwd[i] || !bwd[i])
            .map(|i| self.nodes[i].name.clone())
            .collect();
        if !cut.is_empty() {
            v.push(Violation::NotStronglyConnected { unreachable: cut });
        }
        ValidationReport { violations: v }
    }

    /// Build a validated path from edge indices.
    pub fn path(&self, edges: Vec<usize>) -> Result<Path> {
        Path::new(self, edges)
    }

    /// Build a validated path from canonical labels.
    pub fn path_from_labels(&self, labels: &[usize]) -> Result<Path> {
        let edges = labels
            .iter()
            .map(|&l| self.edge_by_label(l))
            .collect::<Result<Vec<_>>>()?;
        Path::new(self, edges)
    }

    /// Lazily enumerate all paths of length `k`, optionally constrained at
    /// either end, in lexicographic order of their label words.
    pub fn paths(&self, k: usize, start: Option<usize>, end: Option<usize>) -> PathIter<'_> {
        let first: Vec<usize> = (0..self.edges.len())
            .filter(|&i| start.is_none_or(|s| self.edges[i].from == s))
            .collect();
        PathIter::new(self, k, first, end)
    }

    /// Paths of length `k` whose first edge is `edge`.
    pub fn paths_from_edge(&self, edge: usize, k: usize, end: Option<usize>) -> PathIter<'_> {
        PathIter::new(self, k, vec![edge], end)
    }

    /// Map every path of length `k` and reduce, partitioning the stream by
    /// first edge when running in parallel.
    #[allow(clippy::too_many_arguments)]
    pub fn fold_paths<T, F, R>(
        &self,
        k: usize,
        start: Option<usize>,
        end: Option<usize>,
        mode: ExecMode,
        identity: T,
        map: F,
        reduce: R,
    ) -> T
    where
        T: Send + Sync + Clone,
        F: Fn(&Path) -> T + Sync + Send,
        R: Fn(T, T) -> T + Sync + Send,
    {
        let first: Vec<usize> = (0..self.edges.len())
            .filter(|&i| start.is_none_or(|s| self.edges[i].from == s))
            .collect();
        exec::map_reduce(
            mode,
            &first,
            identity.clone(),
            |&e| {
                self.paths_from_edge(e, k, end)
                    .fold(identity.clone(), |acc, p| reduce(acc, map(&p)))
            },
            &reduce,
        )
    }

    /// Lifted operators of a path.
    pub fn path_matrices(&self, pi: &Path) -> PathMatrices {
        PathMatrices::compute(self, pi)
    }

    /// Edge-reversed system with `(A, B, C, D) -> (Aᵀ, Cᵀ, Bᵀ, Dᵀ)`.
    pub fn dual(&self) -> SwitchingSystem {
        let edges = self
            .edges
            .iter()
            .map(|e| EdgeSpec {
                from: e.to,
                to: e.from,
                label: e.label,
                original_label: e.original_label,
                a: e.a.transpose(),
                b: e.c.transpose(),
                c: e.b.transpose(),
                d: e.d.transpose(),
            })
            .collect();
        SwitchingSystem::from_parts(self.nodes.clone(), edges, self.output_dim, self.input_dim)
    }

    /// Replace every edge's matrices, keeping graph and labels.
    pub(crate) fn with_matrices<F>(&self, dims: Vec<usize>, f: F) -> SwitchingSystem
    where
        F: Fn(&EdgeSpec) -> (Mat, Mat, Mat, Mat),
    {
        let nodes = self
            .nodes
            .iter()
            .zip(dims)
            .map(|(n, dim)| NodeSpec {
                name: n.name.clone(),
                dim,
            })
            .collect();
        let edges = self
            .edges
            .iter()
            .map(|e| {
                let (a, b, c, d) = f(e);
                EdgeSpec {
                    a,
                    b,
                    c,
                    d,
                    ..e.clone()
                }
            })
            .collect();
        SwitchingSystem::from_parts(nodes, edges, self.input_dim, self.output_dim)
    }
}

fn reach(n: usize, edges: &[&EdgeSpec], reverse: bool) -> Vec<bool> {
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for e in edges {
            let (a, b) = if reverse { (e.to, e.from) } else { (e.from, e.to) };
            if a == u && !seen[b] {
                seen[b] = true;
                stack.push(b);
            }
        }
    }
    seen
}

/// Cast a square switching system on a graph into rectangular form: every
/// edge `(u, v, mode)` gets a fresh label (its position in `edge_list`,
/// 1-based) and the matrices of its mode.
///
/// The result is not validated; an empty edge list, for instance, is
/// returned as is and rejected by [`SwitchingSystem::validate`].
pub fn lift_to_rectangular(
    node_names: &[String],
    modes: &[Mode],
    edge_list: &[(usize, usize, usize)],
) -> Result<SwitchingSystem> {
    let first = modes.first().ok_or(Error::ModeOutOfRange { index: 0, count: 0 })?;
    let n = first.a.nrows();
    let d = first.b.ncols();
    let m = first.c.nrows();
    for (i, md) in modes.iter().enumerate() {
        let ok = md.a.shape() == (n, n) && md.b.shape() == (n, d) && md.c.shape() == (m, n) && md.d.shape() == (m, d);
        if !ok {
            return Err(Error::ModeShape {
                index: i + 1,
                reason: format!("expected A {n}x{n}, B {n}x{d}, C {m}x{n}, D {m}x{d}"),
            });
        }
    }
    let nodes = node_names
        .iter()
        .map(|name| NodeSpec {
            name: name.clone(),
            dim: n,
        })
        .collect();
    let mut edges = Vec::with_capacity(edge_list.len());
    for (i, &(u, v, mode)) in edge_list.iter().enumerate() {
        if mode == 0 || mode > modes.len() {
            return Err(Error::ModeOutOfRange {
                index: mode,
                count: modes.len(),
            });
        }
        let md = &modes[mode - 1];
        edges.push(EdgeSpec {
            from: u,
            to: v,
            label: i + 1,
            original_label: (i + 1) as u64,
            a: md.a.clone(),
            b: md.b.clone(),
            c: md.c.clone(),
            d: md.d.clone(),
        });
    }
    Ok(SwitchingSystem::from_parts(nodes, edges, d, m))
}

/// A finite walk in the graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Path {
    edges: Vec<usize>,
    nodes: Vec<usize>,
}

impl Path {
    pub fn new(sys: &SwitchingSystem, edges: Vec<usize>) -> Result<Path> {
        for &e in &edges {
            if e >= sys.edges.len() {
                return Err(Error::UnknownLabel(e + 1));
            }
        }
        for w in edges.windows(2) {
            if sys.edges[w[0]].to != sys.edges[w[1]].from {
                return Err(Error::BrokenPath {
                    prev: sys.edges[w[0]].label,
                    at: sys.edges[w[1]].label,
                });
            }
        }
        let mut nodes = Vec::with_capacity(edges.len() + 1);
        if let Some(&e0) = edges.first() {
            nodes.push(sys.edges[e0].from);
        }
        nodes.extend(edges.iter().map(|&e| sys.edges[e].to));
        Ok(Path { edges, nodes })
    }

    /// Number of edges `|π|`.
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Edge indices in order.
    pub fn edges(&self) -> &[usize] {
        &self.edges
    }

    /// Canonical labels `σ_π(0), …, σ_π(|π|-1)`.
    pub fn labels(&self) -> Vec<usize> {
        self.edges.iter().map(|e| e + 1).collect()
    }

    /// Node sequence `v_π(0), …, v_π(|π|)`.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn start(&self) -> usize {
        self.nodes[0]
    }

    pub fn end(&self) -> usize {
        *self.nodes.last().expect("non-empty path")
    }

    /// `π(i:j)`: edges `i` through `j`, 1-based and inclusive.
    pub fn subpath(&self, i: usize, j: usize) -> Result<Path> {
        if i < 1 || i > j || j > self.len() {
            return Err(Error::SubpathRange { i, j, len: self.len() });
        }
        Ok(Path {
            edges: self.edges[i - 1..j].to_vec(),
            nodes: self.nodes[i - 1..=j].to_vec(),
        })
    }

    /// Path in the dual system traversing the same edges backwards.
    pub fn reversed(&self) -> Path {
        let mut edges = self.edges.clone();
        edges.reverse();
        let mut nodes = self.nodes.clone();
        nodes.reverse();
        Path { edges, nodes }
    }
}

/// Depth-first, label-ordered enumeration of paths of a fixed length.
pub struct PathIter<'a> {
    sys: &'a SwitchingSystem,
    k: usize,
    end: Option<usize>,
    first: Vec<usize>,
    // cursor[depth] indexes the candidate list at that depth
    cursor: Vec<usize>,
    edges: Vec<usize>,
    started: bool,
    done: bool,
}

impl<'a> PathIter<'a> {
    fn new(sys: &'a SwitchingSystem, k: usize, mut first: Vec<usize>, end: Option<usize>) -> Self {
        first.sort_by_key(|&i| sys.edges[i].label);
        PathIter {
            sys,
            k,
            end,
            first,
            cursor: Vec::new(),
            edges: Vec::new(),
            started: false,
            done: k == 0,
        }
    }

    fn candidates(&self, depth: usize) -> &[usize] {
        if depth == 0 {
            &self.first
        } else {
            self.sys.out_edges(self.sys.edges[self.edges[depth - 1]].to)
        }
    }

    // Advance the odometer to the next edge sequence of full length.
    fn advance(&mut self) -> bool {
        loop {
            if self.started {
                loop {
                    let Some(depth) = self.cursor.len().checked_sub(1) else {
                        return false;
                    };
                    self.edges.pop();
                    self.cursor[depth] += 1;
                    if let Some(&e) = self.candidates(depth).get(self.cursor[depth]) {
                        self.edges.push(e);
                        break;
                    }
                    self.cursor.pop();
                }
            }
            self.started = true;
            while self.edges.len() < self.k {
                let Some(&e) = self.candidates(self.edges.len()).first() else {
                    break;
                };
                self.cursor.push(0);
                self.edges.push(e);
            }
            if self.edges.len() == self.k {
                return true;
            }
        }
    }
}

impl Iterator for PathIter<'_> {
    type Item = Path;

    fn next(&mut self) -> Option<Path> {
        while !self.done {
            if !self.advance() {
                self.done = true;
                break;
            }
            let last = *self.edges.last().expect("k >= 1");
            if self.end.is_none_or(|v| self.sys.edges[last].to == v) {
                return Path::new(self.sys, self.edges.clone()).ok();
            }
        }
        None
    }
}

/// The lifted operators `A_π` (n_end × n_start), `B_π` (n_end × |π|d),
/// `C_π` (|π|m × n_start) and the causal block matrix `D_π` (|π|m × |π|d).
#[derive(Debug, Clone, PartialEq)]
pub struct PathMatrices {
    pub a: Mat,
    pub b: Mat,
    pub c: Mat,
    pub d: Mat,
}

impl PathMatrices {
    fn compute(sys: &SwitchingSystem, pi: &Path) -> PathMatrices {
        let k = pi.len();
        let (din, dout) = (sys.input_dim, sys.output_dim);
        let n0 = sys.dim(pi.start());
        let mut c = Mat::zeros(k * dout, n0);
        let mut d = Mat::zeros(k * dout, k * din);
        let mut b = Mat::zeros(sys.dim(pi.end()), k * din);
        // transition from the start to time t
        let mut phi = Mat::identity(n0, n0);
        // responses[j] = A_{t-1} ... A_{j+1} B_j, advanced in time with t
        let mut responses: Vec<Mat> = Vec::with_capacity(k);
        for (t, &ei) in pi.edges().iter().enumerate() {
            let e = &sys.edges[ei];
            c.view_mut((t * dout, 0), (dout, n0)).copy_from(&(&e.c * &phi));
            for (j, r) in responses.iter().enumerate() {
                d.view_mut((t * dout, j * din), (dout, din)).copy_from(&(&e.c * r));
            }
            d.view_mut((t * dout, t * din), (dout, din)).copy_from(&e.d);
            phi = &e.a * phi;
            for r in responses.iter_mut() {
                *r = &e.a * &*r;
            }
            responses.push(e.b.clone());
        }
        for (j, r) in responses.iter().enumerate() {
            b.view_mut((0, j * din), (r.nrows(), din)).copy_from(r);
        }
        PathMatrices { a: phi, b, c, d }
    }
}
