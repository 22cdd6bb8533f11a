//! Unit level sets `{x : F̌_v(x) = 1}` of a max-of-quadratics storage.
//!
//! Each sampled unit direction `u` is scaled to `u / F̌_v(u)^{1/2}`, which
//! lies exactly on the level set by homogeneity. Nodes of dimension 3 are
//! cut by the three coordinate planes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gain::QuadraticStorage;
use crate::Vector;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Section {
    /// Coordinates spanning the plane.
    pub plane: (usize, usize),
    /// Closed polyline (first point repeated last), full-dimensional
    /// coordinates.
    pub points: Vec<Vec<f64>>,
}

impl Section {
    /// The polyline in plane coordinates.
    pub fn planar(&self) -> Vec<[f64; 2]> {
        self.points.iter().map(|p| [p[self.plane.0], p[self.plane.1]]).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelSetData {
    pub node: String,
    pub dim: usize,
    pub sections: Vec<Section>,
}

/// Sample `resolution` directions per section.
pub fn emit_level_sets(storage: &QuadraticStorage, node: usize, resolution: usize) -> Result<LevelSetData> {
    let ns = &storage.nodes[node];
    let planes: Vec<(usize, usize)> = match ns.dim {
        2 => vec![(0, 1)],
        3 => vec![(0, 1), (0, 2), (1, 2)],
        n => return Err(Error::LevelSetDim(n)),
    };
    let resolution = resolution.max(3);
    // values this far below the storage scale count as zero
    let floor = 1e-12 * ns.matrices.iter().map(crate::linalg::spectral_norm).fold(0.0, f64::max);
    let mut sections = Vec::with_capacity(planes.len());
    for plane in planes {
        let mut points: Vec<Vec<f64>> = Vec::with_capacity(resolution + 1);
        for k in 0..resolution {
            let t = 2.0 * std::f64::consts::PI * k as f64 / resolution as f64;
            let mut u = Vector::zeros(ns.dim);
            u[plane.0] = t.cos();
            u[plane.1] = t.sin();
            let f = ns.evaluate(&u);
            if !(f > floor && f.is_finite()) {
                return Err(Error::NotDefinite(u.iter().copied().collect()));
            }
            points.push((u / f.sqrt()).iter().copied().collect());
        }
        points.push(points[0].clone());
        sections.push(Section { plane, points });
    }
    Ok(LevelSetData {
        node: ns.node.clone(),
        dim: ns.dim,
        sections,
    })
}

impl LevelSetData {
    /// CSV with columns `section, i, j, index, x1, …, x_n`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["section".to_string(), "i".into(), "j".into(), "index".into()];
        header.extend((1..=self.dim).map(|k| format!("x{k}")));
        let csv_err = |e: csv::Error| Error::Parse {
            context: "csv".into(),
            message: e.to_string(),
        };
        w.write_record(&header).map_err(csv_err)?;
        for (s, sec) in self.sections.iter().enumerate() {
            for (idx, p) in sec.points.iter().enumerate() {
                let mut rec = vec![
                    s.to_string(),
                    sec.plane.0.to_string(),
                    sec.plane.1.to_string(),
                    idx.to_string(),
                ];
                rec.extend(p.iter().map(|x| x.to_string()));
                w.write_record(&rec).map_err(csv_err)?;
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Parse {
            context: "csv".into(),
            message: e.to_string(),
        })?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Every turn of the closed polygon has the same orientation.
pub fn is_convex_polygon(points: &[[f64; 2]], tol: f64) -> bool {
    let pts = if points.len() > 1 && points.first() == points.last() {
        &points[..points.len() - 1]
    } else {
        points
    };
    let n = pts.len();
    if n < 3 {
        return false;
    }
    let (mut pos, mut neg) = (false, false);
    for i in 0..n {
        let (a, b, c) = (pts[i], pts[(i + 1) % n], pts[(i + 2) % n]);
        let cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
        if cross > tol {
            pos = true;
        } else if cross < -tol {
            neg = true;
        }
    }
    !(pos && neg)
}
