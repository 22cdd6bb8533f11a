//! JSON system files.
//!
//! ```json
//! { "input_dim": 1, "output_dim": 1,
//!   "nodes": [{"name": "a", "dim": 1}],
//!   "edges": [{"from": "a", "to": "a", "label": 1,
//!              "A": [[0.5]], "B": [[1.0]], "C": [[1.0]], "D": [[0.0]]}] }
//! ```
//!
//! Matrices are lists of rows. A file may instead carry a top-level
//! `"modes"` list of shared `{A, B, C, D}` tuples and give every edge a
//! 1-based `"mode"`; it is then expanded into rectangular form with one
//! label per edge. Numbers are written in shortest round-trip form, so
//! save-then-load is bit-exact.

use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::system::{self, EdgeSpec, Mode, NodeSpec, SwitchingSystem};
use crate::Mat;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeFile {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeFile {
    pub from: String,
    pub to: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<usize>,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<Vec<f64>>>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<Vec<f64>>>,
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<Vec<f64>>>,
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
    pub d: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeFile {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    #[serde(rename = "D")]
    pub d: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub input_dim: usize,
    pub output_dim: usize,
    pub nodes: Vec<NodeFile>,
    pub edges: Vec<EdgeFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<Vec<ModeFile>>,
}

pub fn rows_of(m: &Mat) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Rows to a matrix; `expected_cols` is used when there are no rows.
pub fn mat_from_rows(rows: &[Vec<f64>], expected_cols: usize, context: &str) -> Result<Mat> {
    let r = rows.len();
    let c = rows.first().map_or(expected_cols, |row| row.len());
    if rows.iter().any(|row| row.len() != c) {
        return Err(Error::Parse {
            context: context.to_string(),
            message: "rows have different lengths".into(),
        });
    }
    Ok(Mat::from_fn(r, c, |i, j| rows[i][j]))
}

fn parse_err(context: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse {
        context: context.into(),
        message: message.into(),
    }
}

impl SystemFile {
    pub fn from_system(sys: &SwitchingSystem) -> SystemFile {
        let names: Vec<&str> = sys.nodes().iter().map(|n| n.name.as_str()).collect();
        SystemFile {
            input_dim: sys.input_dim(),
            output_dim: sys.output_dim(),
            nodes: sys
                .nodes()
                .iter()
                .map(|n| NodeFile {
                    name: n.name.clone(),
                    dim: Some(n.dim),
                })
                .collect(),
            edges: sys
                .edges()
                .iter()
                .map(|e| EdgeFile {
                    from: names[e.from].to_string(),
                    to: names[e.to].to_string(),
                    label: Some(e.original_label),
                    mode: None,
                    a: Some(rows_of(&e.a)),
                    b: Some(rows_of(&e.b)),
                    c: Some(rows_of(&e.c)),
                    d: Some(rows_of(&e.d)),
                })
                .collect(),
            modes: None,
        }
    }

    /// Build and validate the system described by the file.
    pub fn into_system(self) -> Result<SwitchingSystem> {
        let names: Vec<String> = self.nodes.iter().map(|n| n.name.clone()).collect();
        let index = |name: &str, ctx: &str| -> Result<usize> {
            names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| parse_err(ctx, format!("unknown node {name:?}")))
        };
        let (d, m) = (self.input_dim, self.output_dim);
        if let Some(mode_files) = &self.modes {
            let mut modes = Vec::with_capacity(mode_files.len());
            for (i, mf) in mode_files.iter().enumerate() {
                let ctx = format!("modes[{i}]");
                let a = mat_from_rows(&mf.a, 0, &format!("{ctx}.A"))?;
                let n = a.nrows();
                modes.push(Mode {
                    b: mat_from_rows(&mf.b, d, &format!("{ctx}.B"))?,
                    c: mat_from_rows(&mf.c, n, &format!("{ctx}.C"))?,
                    d: mat_from_rows(&mf.d, d, &format!("{ctx}.D"))?,
                    a,
                });
            }
            let mut triples = Vec::with_capacity(self.edges.len());
            for (i, e) in self.edges.iter().enumerate() {
                let ctx = format!("edges[{i}]");
                let mode = e
                    .mode
                    .ok_or_else(|| parse_err(&ctx, "missing field `mode` (file uses a modes table)"))?;
                if e.a.is_some() || e.b.is_some() || e.c.is_some() || e.d.is_some() {
                    return Err(parse_err(&ctx, "inline matrices cannot be combined with `mode`"));
                }
                triples.push((index(&e.from, &ctx)?, index(&e.to, &ctx)?, mode));
            }
            let lifted = system::lift_to_rectangular(&names, &modes, &triples)?;
            let n = modes.first().map_or(0, |md| md.a.nrows());
            for (i, nf) in self.nodes.iter().enumerate() {
                if let Some(dim) = nf.dim {
                    if dim != n {
                        return Err(parse_err(
                            format!("nodes[{i}].dim"),
                            format!("{dim} differs from the mode dimension {n}"),
                        ));
                    }
                }
            }
            let mut edges = lifted.edges().to_vec();
            for (e, ef) in edges.iter_mut().zip(&self.edges) {
                if let Some(l) = ef.label {
                    e.original_label = l;
                }
            }
            if (lifted.input_dim(), lifted.output_dim()) != (d, m) && !modes.is_empty() {
                return Err(parse_err(
                    "modes",
                    format!(
                        "mode matrices imply input_dim {} / output_dim {}, file says {d} / {m}",
                        lifted.input_dim(),
                        lifted.output_dim()
                    ),
                ));
            }
            return SwitchingSystem::new(lifted.nodes().to_vec(), edges, d, m);
        }

        let mut nodes = Vec::with_capacity(self.nodes.len());
        for (i, nf) in self.nodes.iter().enumerate() {
            let dim = nf
                .dim
                .ok_or_else(|| parse_err(format!("nodes[{i}]"), "missing field `dim`"))?;
            nodes.push(NodeSpec {
                name: nf.name.clone(),
                dim,
            });
        }
        let mut edges = Vec::with_capacity(self.edges.len());
        for (i, e) in self.edges.iter().enumerate() {
            let ctx = format!("edges[{i}]");
            if e.mode.is_some() {
                return Err(parse_err(&ctx, "`mode` given but the file has no modes table"));
            }
            let from = index(&e.from, &ctx)?;
            let to = index(&e.to, &ctx)?;
            let get = |field: &Option<Vec<Vec<f64>>>, name: &str, cols: usize| -> Result<Mat> {
                let rows = field
                    .as_ref()
                    .ok_or_else(|| parse_err(&ctx, format!("missing field `{name}`")))?;
                mat_from_rows(rows, cols, &format!("{ctx}.{name}"))
            };
            let label = e.label.ok_or_else(|| parse_err(&ctx, "missing field `label`"))?;
            edges.push(EdgeSpec {
                from,
                to,
                label: 0,
                original_label: label,
                a: get(&e.a, "A", nodes[from].dim)?,
                b: get(&e.b, "B", d)?,
                c: get(&e.c, "C", nodes[from].dim)?,
                d: get(&e.d, "D", d)?,
            });
        }
        SwitchingSystem::new(nodes, edges, d, m)
    }
}

pub fn parse_system(json: &str) -> Result<SwitchingSystem> {
    let file: SystemFile = serde_json::from_str(json).map_err(|e| parse_err("system file", e.to_string()))?;
    file.into_system()
}

pub fn system_to_json(sys: &SwitchingSystem) -> String {
    serde_json::to_string_pretty(&SystemFile::from_system(sys)).expect("system serializes")
}

pub fn load_system(path: impl AsRef<FsPath>) -> Result<SwitchingSystem> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    parse_system(&text).map_err(|e| match e {
        Error::Parse { context, message } => Error::Parse {
            context: format!("{}: {context}", path.display()),
            message,
        },
        other => other,
    })
}

pub fn save_system(sys: &SwitchingSystem, path: impl AsRef<FsPath>) -> Result<()> {
    std::fs::write(path, system_to_json(sys))?;
    Ok(())
}

/// Serde adapter: a matrix as a list of rows.
pub mod mat {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::Mat;

    pub fn serialize<S: Serializer>(m: &Mat, s: S) -> Result<S::Ok, S::Error> {
        super::rows_of(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Mat, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        super::mat_from_rows(&rows, 0, "matrix").map_err(serde::de::Error::custom)
    }
}

/// Serde adapter: a list of matrices.
pub mod mat_list {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::Mat;

    pub fn serialize<S: Serializer>(ms: &[Mat], s: S) -> Result<S::Ok, S::Error> {
        ms.iter().map(super::rows_of).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Mat>, D::Error> {
        let all = Vec::<Vec<Vec<f64>>>::deserialize(d)?;
        all.iter()
            .map(|rows| super::mat_from_rows(rows, 0, "matrix").map_err(serde::de::Error::custom))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::*;

    #[test]
    fn round_trip_is_bit_exact() {
        for seed in 0..5 {
            let sys = two_node_system(seed);
            let back = parse_system(&system_to_json(&sys)).unwrap();
            assert_eq!(back, sys);
        }
    }

    #[test]
    fn file_round_trip() {
        let sys = two_node_system(9);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sys.json");
        save_system(&sys, &p).unwrap();
        assert_eq!(load_system(&p).unwrap(), sys);
    }

    #[test]
    fn modes_sugar_expands() {
        let json = r#"{
            "input_dim": 1, "output_dim": 1,
            "nodes": [{"name": "a"}, {"name": "b"}],
            "modes": [
                {"A": [[0.5]], "B": [[1.0]], "C": [[1.0]], "D": [[0.0]]},
                {"A": [[0.2]], "B": [[0.0]], "C": [[2.0]], "D": [[0.1]]}
            ],
            "edges": [
                {"from": "a", "to": "b", "mode": 2},
                {"from": "b", "to": "a", "mode": 1},
                {"from": "a", "to": "a", "mode": 1}
            ]
        }"#;
        let sys = parse_system(json).unwrap();
        assert_eq!(sys.edges().len(), 3);
        assert_eq!(sys.dims(), vec![1, 1]);
        assert_eq!(sys.edge(0).a[(0, 0)], 0.2);
        assert_eq!(sys.edge(2).c[(0, 0)], 1.0);
        // the expanded form is an ordinary inline file
        let inline = system_to_json(&sys);
        assert!(!inline.contains("\"mode\""));
        assert_eq!(parse_system(&inline).unwrap(), sys);
    }

    #[test]
    fn missing_input_dim_names_the_field() {
        let json = r#"{"output_dim": 1, "nodes": [], "edges": []}"#;
        let err = parse_system(json).unwrap_err().to_string();
        assert!(err.contains("input_dim"), "{err}");
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn shape_errors_surface_as_validation() {
        let json = r#"{"input_dim": 1, "output_dim": 1,
            "nodes": [{"name": "a", "dim": 1}],
            "edges": [{"from": "a", "to": "a", "label": 4,
                "A": [[0.5], [0.1]], "B": [[1.0]], "C": [[1.0]], "D": [[0.0]]}]}"#;
        match parse_system(json) {
            Err(Error::Invalid(r)) => assert_eq!(r.violations.len(), 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn labels_are_canonicalized_but_preserved() {
        let json = r#"{"input_dim": 1, "output_dim": 1,
            "nodes": [{"name": "a", "dim": 1}],
            "edges": [
              {"from": "a", "to": "a", "label": 40, "A": [[0.1]], "B": [[1.0]], "C": [[1.0]], "D": [[0.0]]},
              {"from": "a", "to": "a", "label": 7, "A": [[0.2]], "B": [[1.0]], "C": [[1.0]], "D": [[0.0]]}
            ]}"#;
        let sys = parse_system(json).unwrap();
        assert_eq!(sys.edge(0).original_label, 7);
        assert_eq!(sys.edge(0).label, 1);
        assert_eq!(sys.edge(1).original_label, 40);
        assert!(system_to_json(&sys).contains("40"));
    }

    #[test]
    fn zero_dimensional_nodes_survive() {
        let sys = scalar_lti(0.5, 0.0, 0.0, 0.0);
        let (min, _) = crate::realization::minimize(&sys, None);
        assert_eq!(min.dims(), vec![0]);
        let back = parse_system(&system_to_json(&min)).unwrap();
        assert_eq!(back.dims(), vec![0]);
        assert_eq!(back.edge(0).b.shape(), (0, 1));
        assert_eq!(back.edge(0).c.shape(), (1, 0));
    }
}
