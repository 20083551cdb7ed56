//! Pointwise fields `h`, `f`, `φ`, `σ±` and the Bogomol'nyi decomposition.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::reconstruct::{reconstruct_face, FaceGradient};
use super::{f_field, h_field};
use crate::bundle::Configuration;
use crate::numeric::pairwise_sum_by;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    /// `(1 − |u|²)/2ε²` per vertex.
    pub h: Vec<f64>,
    /// Curvature density per face.
    pub f: Vec<f64>,
    /// `f − h` per face, `h` averaged to faces.
    pub phi: Vec<f64>,
    pub sigma_norm_sq_plus: Vec<f64>,
    pub sigma_norm_sq_minus: Vec<f64>,
    pub max_f_minus_h: f64,
    pub max_negf_minus_h: f64,
    /// Area-weighted mean of `f`.
    pub mean_f: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BogomolnySplit {
    pub defect_plus: f64,
    pub defect_minus: f64,
    pub topological: f64,
}

impl BogomolnySplit {
    /// Defect of the branch selected by the sign of the degree.
    pub fn matching_defect(&self, degree: i64) -> f64 {
        if degree < 0 {
            self.defect_minus
        } else {
            self.defect_plus
        }
    }
}

pub(crate) fn face_gradients(config: &Configuration, curv: &[f64]) -> Vec<FaceGradient> {
    (0..config.mesh().num_faces())
        .map(|f| reconstruct_face(config, f, curv[f]))
        .collect()
}

pub fn diagnostics(config: &Configuration) -> DiagnosticsReport {
    let mesh = config.mesh();
    let curv = config.connection.curvature();
    let h = h_field(config);
    let f = f_field(config);
    let h_face = mesh.vertex_to_face(&h);
    let phi: Vec<f64> = f.iter().zip(&h_face).map(|(a, b)| a - b).collect();
    let grads = face_gradients(config, &curv);
    let (max_f_minus_h, max_negf_minus_h) = signed_maxima(&f, &h_face);
    let total = pairwise_sum_by(mesh.num_faces(), |i| mesh.faces[i].area);
    DiagnosticsReport {
        sigma_norm_sq_plus: grads.iter().map(FaceGradient::sigma_plus_sq).collect(),
        sigma_norm_sq_minus: grads.iter().map(FaceGradient::sigma_minus_sq).collect(),
        mean_f: pairwise_sum_by(f.len(), |i| curv[i]) / total,
        h,
        f,
        phi,
        max_f_minus_h,
        max_negf_minus_h,
    }
}

fn signed_maxima(f: &[f64], h_face: &[f64]) -> (f64, f64) {
    let mut plus = f64::NEG_INFINITY;
    let mut minus = f64::NEG_INFINITY;
    for (a, b) in f.iter().zip(h_face) {
        plus = plus.max(a - b);
        minus = minus.max(-a - b);
    }
    (plus, minus)
}

/// Signed maxima of `f − h` and `−f − h` over faces.
pub fn pointwise_bound_check(config: &Configuration) -> (f64, f64) {
    let mesh = config.mesh();
    let h_face = mesh.vertex_to_face(&h_field(config));
    signed_maxima(&f_field(config), &h_face)
}

/// The two nonnegative defect integrals and the topological term `2πd`.
pub fn bogomolny_split(config: &Configuration) -> BogomolnySplit {
    let mesh = config.mesh();
    let eps = config.epsilon;
    let curv = config.connection.curvature();
    let grads = face_gradients(config, &curv);
    let one_minus: Vec<f64> = config.u().iter().map(|z| 1.0 - z.norm_sqr()).collect();
    let s_face = mesh.vertex_to_face(&one_minus);
    let term = |i: usize, sign: f64| {
        let area = mesh.faces[i].area;
        let f = curv[i] / area;
        let pot = eps * f - sign * s_face[i] / (2.0 * eps);
        let sig = if sign > 0.0 {
            grads[i].sigma_plus_sq()
        } else {
            grads[i].sigma_minus_sq()
        };
        (0.5 * sig + pot * pot) * area
    };
    BogomolnySplit {
        defect_plus: pairwise_sum_by(mesh.num_faces(), |i| term(i, 1.0)),
        defect_minus: pairwise_sum_by(mesh.num_faces(), |i| term(i, -1.0)),
        topological: 2.0 * PI * config.degree() as f64,
    }
}
