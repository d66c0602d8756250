//! Indicatrix export: OBJ meshes, CSV polylines and per-direction invariant tables.

use std::collections::HashMap;
use std::fmt::Write as _;

use finsler_core::indicatrix::{best_fit_q, centroaffine_data, indicatrix_point, tensor_norm_sq, vector_norm_sq};
use finsler_core::minkowski::MinkowskiNorm;

use crate::error::CliError;

/// Unit-sphere icosahedron refined `level` times by edge midpoints.
pub fn icosphere(level: usize) -> (Vec<[f64; 3]>, Vec<[usize; 3]>) {
    let t = 0.5 * (1.0 + 5f64.sqrt());
    let mut vertices: Vec<[f64; 3]> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|&v| unit(v))
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<[f64; 3]>| -> usize {
            *midpoints.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let (p, q) = (vertices[a], vertices[b]);
                vertices.push(unit([p[0] + q[0], p[1] + q[1], p[2] + q[2]]));
                vertices.len() - 1
            })
        };
        let mut next = Vec::with_capacity(4 * faces.len());
        for [a, b, c] in faces {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    (vertices, faces)
}

fn unit(v: [f64; 3]) -> [f64; 3] {
    let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / r, v[1] / r, v[2] / r]
}

/// `count` directions evenly spaced on the unit circle.
pub fn circle(count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|k| {
            let a = std::f64::consts::TAU * k as f64 / count as f64;
            vec![a.cos(), a.sin()]
        })
        .collect()
}

/// Radial projection `u ↦ u / F(u)` of each direction onto the indicatrix.
pub fn project(f: &MinkowskiNorm, directions: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, CliError> {
    directions
        .iter()
        .map(|u| {
            let fu = f.eval(u).map_err(|e| CliError::Input(e.to_string()))?;
            Ok(u.iter().map(|c| c / fu).collect())
        })
        .collect()
}

pub fn obj(vertices: &[Vec<f64>], faces: &[[usize; 3]]) -> String {
    let mut s = String::new();
    for v in vertices {
        let _ = writeln!(s, "v {:.17e} {:.17e} {:.17e}", v[0], v[1], v[2]);
    }
    for [a, b, c] in faces {
        let _ = writeln!(s, "f {} {} {}", a + 1, b + 1, c + 1);
    }
    s
}

pub fn polyline_csv(vertices: &[Vec<f64>]) -> String {
    let mut s = String::from("index,v1,v2\n");
    for (k, v) in vertices.iter().chain(vertices.first()).enumerate() {
        let _ = writeln!(s, "{k},{:.17e},{:.17e}", v[0], v[1]);
    }
    s
}

/// Per-direction invariants of the indicatrix: `‖Ĉ‖_h`, `‖T̂‖_h`, the
/// best-fit `q` and `‖M^q‖_h` at that `q`.
pub fn invariant_table(f: &MinkowskiNorm, directions: &[Vec<f64>]) -> Result<String, CliError> {
    let n = f.dimension();
    let mut s = String::from("index");
    for i in 1..=n {
        let _ = write!(s, ",v{i}");
    }
    s.push_str(",cubic_norm,tchebychev_norm,best_q,semi_c_residual\n");
    for (k, u) in directions.iter().enumerate() {
        let p = indicatrix_point(f, u).map_err(|e| CliError::Input(e.to_string()))?;
        let data = centroaffine_data(&p);
        let fit = best_fit_q(&data);
        let _ = write!(s, "{k}");
        for c in &p.v {
            let _ = write!(s, ",{c:.17e}");
        }
        let _ = writeln!(
            s,
            ",{:.17e},{:.17e},{:.17e},{:.17e}",
            tensor_norm_sq(&data.c, &data.h).max(0.0).sqrt(),
            vector_norm_sq(&data.t, &data.h).max(0.0).sqrt(),
            fit.q,
            fit.residual
        );
    }
    Ok(s)
}
