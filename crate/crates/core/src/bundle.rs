//! Hermitian line bundles of fixed degree over a mesh.
//!
//! The degree lives in fixed background edge transports; the dynamical
//! connection adds a real 1-form `A` on edges. The transport along an edge
//! from tail to head is `background · exp(iA)`, so a section is parallel when
//! `u_head = U_e u_tail`, the holonomy around a face is `exp(iF)` and gauge
//! transformations act as `u ↦ e^{iθ}u`, `A ↦ A + d0 θ`.

use std::collections::VecDeque;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mesh::{build_torus_mesh, Geometry, Mesh};
use crate::numeric::{conjugate_gradient, pairwise_sum};

/// Relative tolerance of the Poisson solves.
pub const POISSON_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct Connection {
    pub mesh: Arc<Mesh>,
    /// Unit transport per edge, tail to head.
    pub background_transport: Vec<Complex64>,
    /// Real background flux per face; sums to `2πd`.
    pub background_curvature: Vec<f64>,
    /// Fluctuation 1-form per edge.
    pub a: Vec<f64>,
    pub degree: i64,
}

#[derive(Clone, Debug)]
pub struct Section {
    pub mesh: Arc<Mesh>,
    pub values: Vec<Complex64>,
}

#[derive(Clone, Debug)]
pub struct Configuration {
    pub section: Section,
    pub connection: Connection,
    pub epsilon: f64,
}

impl Section {
    pub fn constant(mesh: Arc<Mesh>, value: Complex64) -> Self {
        let values = vec![value; mesh.num_vertices()];
        Section { mesh, values }
    }

    pub fn zero(mesh: Arc<Mesh>) -> Self {
        Self::constant(mesh, Complex64::new(0.0, 0.0))
    }

    pub fn norms(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm()).collect()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, z| m.max(z.norm()))
    }
}

impl Configuration {
    pub fn new(section: Section, connection: Connection, epsilon: f64) -> Result<Self> {
        if !Arc::ptr_eq(&section.mesh, &connection.mesh) && section.mesh.checksum() != connection.mesh.checksum() {
            return Err(Error::MeshMismatch);
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Invalid(format!("epsilon must be positive, got {epsilon}")));
        }
        if section.values.len() != section.mesh.num_vertices()
            || connection.a.len() != connection.mesh.num_edges()
        {
            return Err(Error::MeshMismatch);
        }
        if section.values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Invalid("section has non-finite entries".into()));
        }
        Ok(Configuration {
            section,
            connection,
            epsilon,
        })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.connection.mesh
    }

    pub fn u(&self) -> &[Complex64] {
        &self.section.values
    }

    pub fn a(&self) -> &[f64] {
        &self.connection.a
    }

    pub fn degree(&self) -> i64 {
        self.connection.degree
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Configuration {
        let mut c = self.clone();
        c.epsilon = epsilon;
        c
    }

    /// The zero section with the harmonic background connection.
    pub fn zero_section(mesh: Arc<Mesh>, d: i64, epsilon: f64) -> Result<Self> {
        let conn = background_connection(mesh.clone(), d);
        Configuration::new(Section::zero(mesh), conn, epsilon)
    }
}

/// Background connection of degree `d` with constant curvature density.
pub fn background_connection(mesh: Arc<Mesh>, d: i64) -> Connection {
    let ne = mesh.num_edges();
    let nf = mesh.num_faces();
    let (phases, curv) = if d == 0 {
        (vec![0.0; ne], vec![0.0; nf])
    } else {
        match mesh.geometry {
            Geometry::Torus { nx, ny, .. } => torus_background(&mesh, nx, ny, d),
            Geometry::Sphere { .. } => tree_background(&mesh, d),
        }
    };
    Connection {
        background_transport: phases.iter().map(|&t| Complex64::from_polar(1.0, t)).collect(),
        background_curvature: curv,
        a: vec![0.0; ne],
        degree: d,
        mesh,
    }
}

/// Landau-gauge constant flux on the periodic lattice.
fn torus_background(mesh: &Mesh, nx: usize, ny: usize, d: i64) -> (Vec<f64>, Vec<f64>) {
    let flux = 2.0 * PI * d as f64 / (nx * ny) as f64;
    let mut phases = vec![0.0; mesh.num_edges()];
    for j in 0..ny {
        for i in 0..nx {
            let v = j * nx + i;
            let along_x = if i == nx - 1 { -flux * (nx * j) as f64 } else { 0.0 };
            let along_y = flux * i as f64;
            for (e, phase) in [(2 * v, along_x), (2 * v + 1, along_y)] {
                // stored orientation is tail < head; a flipped edge carries the reversed phase
                phases[e] = if mesh.edges[e].tail == v { phase } else { -phase };
            }
        }
    }
    (phases, vec![flux; mesh.num_faces()])
}

/// Spanning-tree gauge: tree edges carry no phase, co-tree phases are fixed
/// by peeling leaf faces of the dual tree.
fn tree_background(mesh: &Mesh, d: i64) -> (Vec<f64>, Vec<f64>) {
    let nv = mesh.num_vertices();
    let ne = mesh.num_edges();
    let total = pairwise_sum(&mesh.faces.iter().map(|f| f.area).collect::<Vec<_>>());
    let curv: Vec<f64> = mesh
        .faces
        .iter()
        .map(|f| 2.0 * PI * d as f64 * f.area / total)
        .collect();

    let mut in_tree = vec![false; ne];
    let mut seen = vec![false; nv];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(v) = queue.pop_front() {
        for &e in &mesh.vertex_edges[v] {
            let w = mesh.edges[e].tail + mesh.edges[e].head - v;
            if !seen[w] {
                seen[w] = true;
                in_tree[e] = true;
                queue.push_back(w);
            }
        }
    }

    let mut phases = vec![0.0; ne];
    let mut known = in_tree.clone();
    let mut unknown: Vec<usize> = mesh
        .faces
        .iter()
        .map(|f| f.edges.iter().filter(|&&e| !known[e]).count())
        .collect();
    let mut ready: VecDeque<usize> = (0..mesh.num_faces()).filter(|&f| unknown[f] == 1).collect();
    while let Some(f) = ready.pop_front() {
        if unknown[f] != 1 {
            continue;
        }
        let face = &mesh.faces[f];
        let mut k_free = 0;
        let mut acc = 0.0;
        for (k, &e) in face.edges.iter().enumerate() {
            if known[e] {
                acc += face.signs[k] as f64 * phases[e];
            } else {
                k_free = k;
            }
        }
        let e = face.edges[k_free];
        phases[e] = face.signs[k_free] as f64 * (curv[f] - acc);
        known[e] = true;
        unknown[f] = 0;
        for &g in &mesh.edge_faces[e] {
            if g != f {
                unknown[g] -= 1;
                if unknown[g] == 1 {
                    ready.push_back(g);
                }
            }
        }
    }
    debug_assert!(known.iter().all(|&k| k));
    (phases, curv)
}

impl Connection {
    /// Parallel transport along edge `e` from tail to head.
    pub fn transport(&self, e: usize) -> Complex64 {
        self.background_transport[e] * Complex64::from_polar(1.0, self.a[e])
    }

    /// Transport along `e` traversed with orientation `sign`.
    pub fn oriented_transport(&self, e: usize, sign: i8) -> Complex64 {
        let t = self.transport(e);
        if sign > 0 {
            t
        } else {
            t.conj()
        }
    }

    /// Integrated curvature per face, `F_f = background_f + (d1 A)_f`, unwrapped.
    pub fn curvature(&self) -> Vec<f64> {
        self.mesh
            .faces
            .iter()
            .zip(&self.background_curvature)
            .map(|(face, &bg)| {
                let da: f64 = face
                    .edges
                    .iter()
                    .zip(&face.signs)
                    .map(|(&e, &s)| s as f64 * self.a[e])
                    .sum();
                bg + da
            })
            .collect()
    }

    /// Total flux over `2π`, checked against the nearest integer.
    pub fn degree_checked(&self) -> Result<i64> {
        let flux = pairwise_sum(&self.curvature()) / (2.0 * PI);
        let d = flux.round();
        if (flux - d).abs() > 1e-8 {
            return Err(Error::CorruptedConnection { flux_over_2pi: flux });
        }
        Ok(d as i64)
    }
}

/// Integrated curvature per face.
pub fn curvature(conn: &Connection) -> Vec<f64> {
    conn.curvature()
}

/// Degree of the bundle from the total flux.
pub fn degree(conn: &Connection) -> Result<i64> {
    conn.degree_checked()
}

/// Gauge transformation `u ↦ e^{iθ}u`, `A ↦ A + d0θ`.
pub fn apply_gauge(config: &Configuration, theta: &[f64]) -> Configuration {
    let mut out = config.clone();
    for (z, &t) in out.section.values.iter_mut().zip(theta) {
        *z *= Complex64::from_polar(1.0, t);
    }
    for (e, edge) in config.mesh().edges.iter().enumerate() {
        out.connection.a[e] += theta[edge.head] - theta[edge.tail];
    }
    out
}

/// Weighted codifferential `d0ᵀ star1 A`.
pub fn divergence(mesh: &Mesh, a: &[f64]) -> Vec<f64> {
    let mut div = vec![0.0; mesh.num_vertices()];
    for (e, edge) in mesh.edges.iter().enumerate() {
        let flow = edge.weight() * a[e];
        div[edge.head] += flow;
        div[edge.tail] -= flow;
    }
    div
}

/// Applies `d0ᵀ star1 d0` to a vertex function.
pub fn weighted_laplacian(mesh: &Mesh, x: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for edge in &mesh.edges {
        let flow = edge.weight() * (x[edge.head] - x[edge.tail]);
        out[edge.head] += flow;
        out[edge.tail] -= flow;
    }
}

/// Solves `d0ᵀ star1 d0 θ = rhs` with zero dual-area-weighted mean.
pub fn solve_poisson(mesh: &Mesh, rhs: &[f64]) -> Result<Vec<f64>> {
    let mut theta = vec![0.0; mesh.num_vertices()];
    let mut apply = |x: &[f64], y: &mut [f64]| weighted_laplacian(mesh, x, y);
    let max_iter = 20 * mesh.num_vertices() + 100;
    conjugate_gradient(
        &mut apply,
        rhs,
        &mut theta,
        POISSON_TOLERANCE,
        max_iter,
        Some(&mesh.dual_areas),
    )?;
    Ok(theta)
}

/// Coulomb gauge: returns θ and the configuration gauged by `−θ`, whose
/// fluctuation satisfies `d0ᵀ star1 A = 0`.
pub fn coulomb_gauge_fix(config: &Configuration) -> Result<(Vec<f64>, Configuration)> {
    let mesh = config.mesh();
    let rhs = divergence(mesh, config.a());
    let theta = solve_poisson(mesh, &rhs)?;
    let neg: Vec<f64> = theta.iter().map(|t| -t).collect();
    Ok((theta, apply_gauge(config, &neg)))
}

/// Prolongs a lattice-torus configuration to the lattice with twice as many
/// cells per direction. New vertex values average their neighbors after
/// parallel transport; each coarse edge splits `A` evenly between its halves.
pub fn refine_torus(config: &Configuration) -> Result<Configuration> {
    let Geometry::Torus { nx, ny, lx, ly } = config.mesh().geometry else {
        return Err(Error::Invalid("refinement is only defined on the lattice torus".into()));
    };
    let fine = Arc::new(build_torus_mesh(2 * nx, 2 * ny, lx, ly)?);
    let (fx, fy) = (2 * nx, 2 * ny);
    let orient = |mesh: &Mesh, e: usize| if mesh.edges[e].tail == e / 2 { 1.0 } else { -1.0 };
    let coarse = config.mesh();
    // lattice-oriented fluctuation along +x (k = 0) and +y (k = 1)
    let coarse_a = |i: usize, j: usize, k: usize| {
        let e = 2 * ((j % ny) * nx + (i % nx)) + k;
        config.connection.a[e] * orient(coarse, e)
    };
    let mut conn = background_connection(fine.clone(), config.degree());
    for jj in 0..fy {
        for ii in 0..fx {
            let (i, j) = (ii / 2, jj / 2);
            let ax = if jj % 2 == 0 {
                coarse_a(i, j, 0)
            } else {
                0.5 * (coarse_a(i, j, 0) + coarse_a(i, j + 1, 0))
            };
            let ay = if ii % 2 == 0 {
                coarse_a(i, j, 1)
            } else {
                0.5 * (coarse_a(i, j, 1) + coarse_a(i + 1, j, 1))
            };
            let v = jj * fx + ii;
            conn.a[2 * v] = 0.5 * ax * orient(&fine, 2 * v);
            conn.a[2 * v + 1] = 0.5 * ay * orient(&fine, 2 * v + 1);
        }
    }
    let fid = |i: usize, j: usize| (j % fy) * fx + (i % fx);
    // transport along the lattice edge leaving (i, j) in direction k
    let step = |i: usize, j: usize, k: usize| {
        let e = 2 * fid(i, j) + k;
        conn.oriented_transport(e, orient(&fine, e) as i8)
    };
    let mut values = vec![Complex64::new(0.0, 0.0); fx * fy];
    for j in 0..ny {
        for i in 0..nx {
            values[fid(2 * i, 2 * j)] = config.u()[j * nx + i];
        }
    }
    for jj in (0..fy).step_by(2) {
        for ii in (1..fx).step_by(2) {
            let left = step(ii - 1, jj, 0) * values[fid(ii - 1, jj)];
            let right = step(ii, jj, 0).conj() * values[fid(ii + 1, jj)];
            values[fid(ii, jj)] = 0.5 * (left + right);
        }
    }
    for jj in (1..fy).step_by(2) {
        for ii in 0..fx {
            let below = step(ii, jj - 1, 1) * values[fid(ii, jj - 1)];
            let above = step(ii, jj, 1).conj() * values[fid(ii, jj + 1)];
            values[fid(ii, jj)] = 0.5 * (below + above);
        }
    }
    Configuration::new(Section { mesh: fine, values }, conn, config.epsilon)
}
