//! Location of zeros of the section by transport-corrected phase winding.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bundle::Configuration;

/// Magnitude below which a vertex value is treated as an exact zero.
pub const DEGENERATE_ZERO: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Winding {
    pub face: usize,
    pub winding: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VortexCensus {
    pub windings: Vec<Winding>,
    pub total_winding: i64,
    /// Faces touching a vertex where `|u| < 1e-12`.
    pub degenerate_faces: Vec<usize>,
}

/// Principal value in `(−π, π]`.
fn wrap(x: f64) -> f64 {
    let y = x - 2.0 * PI * (x / (2.0 * PI)).round();
    if y <= -PI {
        y + 2.0 * PI
    } else {
        y
    }
}

pub fn vortex_census(config: &Configuration) -> VortexCensus {
    let mesh = config.mesh();
    let u = config.u();
    let curv = config.connection.curvature();
    let mut windings = Vec::new();
    let mut degenerate_faces = Vec::new();
    let mut total = 0i64;
    for (f, face) in mesh.faces.iter().enumerate() {
        if face.vertices.iter().any(|&v| u[v].norm() < DEGENERATE_ZERO) {
            degenerate_faces.push(f);
        }
        let m = face.len();
        let mut turn = 0.0;
        for k in 0..m {
            let a = u[face.vertices[k]];
            let b = u[face.vertices[(k + 1) % m]];
            let t = config.connection.oriented_transport(face.edges[k], face.signs[k]);
            let rel: Complex64 = b * (t * a).conj();
            turn += wrap(rel.arg());
        }
        let n = ((turn + curv[f]) / (2.0 * PI)).round() as i64;
        if n != 0 {
            windings.push(Winding { face: f, winding: n });
            total += n;
        }
    }
    VortexCensus {
        windings,
        total_winding: total,
        degenerate_faces,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::{apply_gauge, background_connection, Section};
    use crate::energy::testing::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    #[test]
    fn vacuum_has_no_vortices() {
        let c = vacuum(torus(6), 1.0);
        let census = vortex_census(&c);
        assert!(census.windings.is_empty());
        assert_eq!(census.total_winding, 0);
    }

    #[test]
    fn planted_zeros_are_found_with_their_signs() {
        // sin(x − x0) + i sin(y − y0) has +1 zeros at (x0, y0), (x0+π, y0+π)
        // and −1 zeros at (x0+π, y0), (x0, y0+π)
        let mesh = torus(16);
        let (x0, y0) = (0.51, 0.93);
        let values = mesh
            .positions
            .iter()
            .map(|p| Complex64::new((p[0] - x0).sin(), (p[1] - y0).sin()))
            .collect();
        let conn = background_connection(mesh.clone(), 0);
        let c = Configuration::new(Section { mesh: mesh.clone(), values }, conn, 1.0).unwrap();
        let census = vortex_census(&c);
        assert_eq!(census.total_winding, 0);
        let mut found: Vec<(i64, [f64; 3])> = census
            .windings
            .iter()
            .map(|w| (w.winding, mesh.face_center(w.face)))
            .collect();
        found.sort_by(|a, b| a.1[0].partial_cmp(&b.1[0]).unwrap().then(a.1[1].partial_cmp(&b.1[1]).unwrap()));
        let h = 2.0 * PI / 16.0;
        let expect = [
            (1, [x0, y0]),
            (-1, [x0, y0 + PI]),
            (-1, [x0 + PI, y0]),
            (1, [x0 + PI, y0 + PI]),
        ];
        assert_eq!(found.len(), 4);
        for ((w, c), (ew, ec)) in found.iter().zip(expect) {
            assert_eq!(*w, ew);
            assert!((c[0] - ec[0]).abs() < h && (c[1] - ec[1]).abs() < h);
        }
    }

    #[test]
    fn degenerate_vertices_are_flagged() {
        let mesh = Arc::new(crate::mesh::build_torus_mesh(4, 4, 1.0, 1.0).unwrap());
        let mut c = vacuum(mesh, 1.0);
        c.section.values[5] = Complex64::new(0.0, 0.0);
        let census = vortex_census(&c);
        assert_eq!(census.degenerate_faces.len(), 4);
    }

    #[test]
    fn total_winding_equals_degree_for_any_nonvanishing_section() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for d in [-2i64, 1, 3] {
            for mesh in [torus(8), sphere(2)] {
                let c = random_config(mesh, d, 1.0, rng.random());
                assert_eq!(vortex_census(&c).total_winding, d);
                let theta: Vec<f64> = (0..c.mesh().num_vertices()).map(|_| rng.random_range(-PI..PI)).collect();
                let g = apply_gauge(&c, &theta);
                assert_eq!(vortex_census(&g).windings, vortex_census(&c).windings);
            }
        }
    }
}
