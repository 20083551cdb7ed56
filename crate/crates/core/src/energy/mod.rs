//! The discrete Yang–Mills–Higgs energy and everything derived from it.
//!
//! ```text
//! E = Σ_f ε² F_f² / area_f  +  Σ_e w_e |u_head − U_e u_tail|²  +  Σ_v dualarea_v (1 − |u_v|²)² / 4ε²
//! ```
//!
//! Gradients and Hessian actions are exact derivatives of this sum with
//! respect to `(Re u, Im u, A)`.

mod census;
mod diagnostics;
mod identities;
mod reconstruct;

pub use census::{vortex_census, VortexCensus, Winding};
pub use diagnostics::{
    bogomolny_split, diagnostics, pointwise_bound_check, BogomolnySplit, DiagnosticsReport,
};
pub use identities::{identity_residuals, IdentityResiduals};
pub use reconstruct::{reconstruct_face, reconstruct_face_from, FaceGradient};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bundle::Configuration;
use crate::mesh::Mesh;
use crate::numeric::{pairwise_sum, pairwise_sum_by};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub curvature_term: f64,
    pub kinetic_term: f64,
    pub potential_term: f64,
    pub total: f64,
}

/// A tangent vector (or covector) to configuration space.
#[derive(Clone, Debug, PartialEq)]
pub struct Variation {
    pub u: Vec<Complex64>,
    pub a: Vec<f64>,
}

impl Variation {
    pub fn zeros(mesh: &Mesh) -> Self {
        Variation {
            u: vec![Complex64::new(0.0, 0.0); mesh.num_vertices()],
            a: vec![0.0; mesh.num_edges()],
        }
    }

    pub fn len(&self) -> usize {
        2 * self.u.len() + self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Real coordinates `[Re u0, Im u0, …, A0, …]`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for z in &self.u {
            out.push(z.re);
            out.push(z.im);
        }
        out.extend_from_slice(&self.a);
        out
    }

    pub fn from_flat(nv: usize, x: &[f64]) -> Self {
        Variation {
            u: (0..nv).map(|v| Complex64::new(x[2 * v], x[2 * v + 1])).collect(),
            a: x[2 * nv..].to_vec(),
        }
    }

    /// Euclidean pairing `Re Σ conj(u)·u' + Σ a·a'`.
    pub fn dot(&self, other: &Variation) -> f64 {
        pairwise_sum_by(self.u.len(), |v| (self.u[v].conj() * other.u[v]).re)
            + pairwise_sum_by(self.a.len(), |e| self.a[e] * other.a[e])
    }

    pub fn axpy(&mut self, alpha: f64, x: &Variation) {
        for (y, x) in self.u.iter_mut().zip(&x.u) {
            *y += alpha * x;
        }
        for (y, x) in self.a.iter_mut().zip(&x.a) {
            *y += alpha * x;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        self.u.iter_mut().for_each(|z| *z *= alpha);
        self.a.iter_mut().for_each(|x| *x *= alpha);
    }

    /// Gauge direction `(iθu, d0θ)`.
    pub fn gauge_direction(config: &Configuration, theta: &[f64]) -> Self {
        let mesh = config.mesh();
        Variation {
            u: config.u().iter().zip(theta).map(|(z, t)| I * t * z).collect(),
            a: mesh.edges.iter().map(|e| theta[e.head] - theta[e.tail]).collect(),
        }
    }
}

/// Diagonal mass metric: dual areas on both components of `u`, DEC weights on `A`.
#[derive(Clone, Debug)]
pub struct MassMetric {
    pub vertex: Vec<f64>,
    pub edge: Vec<f64>,
}

impl MassMetric {
    pub fn new(mesh: &Mesh) -> Self {
        MassMetric {
            vertex: mesh.dual_areas.clone(),
            edge: mesh.edges.iter().map(|e| e.weight()).collect(),
        }
    }

    /// Flat diagonal matching [`Variation::to_flat`].
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.vertex.len() + self.edge.len());
        for &m in &self.vertex {
            out.push(m);
            out.push(m);
        }
        out.extend_from_slice(&self.edge);
        out
    }

    /// Applies `M⁻¹` to a covector.
    pub fn raise(&self, g: &Variation) -> Variation {
        Variation {
            u: g.u.iter().zip(&self.vertex).map(|(z, m)| z / m).collect(),
            a: g.a.iter().zip(&self.edge).map(|(x, m)| x / m).collect(),
        }
    }

    /// `M⁻¹`-norms of the two blocks of a covector.
    pub fn dual_norms(&self, g: &Variation) -> (f64, f64) {
        let nu = pairwise_sum_by(g.u.len(), |v| g.u[v].norm_sqr() / self.vertex[v]);
        let na = pairwise_sum_by(g.a.len(), |e| g.a[e] * g.a[e] / self.edge[e]);
        (nu.sqrt(), na.sqrt())
    }
}

fn covariant_differences(config: &Configuration) -> Vec<Complex64> {
    let u = config.u();
    config
        .mesh()
        .edges
        .iter()
        .enumerate()
        .map(|(e, edge)| u[edge.head] - config.connection.transport(e) * u[edge.tail])
        .collect()
}

/// The three terms of the energy.
pub fn energy(config: &Configuration) -> EnergyBreakdown {
    let mesh = config.mesh();
    let eps = config.epsilon;
    let curv = config.connection.curvature();
    let diffs = covariant_differences(config);
    let curvature_term = eps * eps * pairwise_sum_by(curv.len(), |f| curv[f] * curv[f] / mesh.faces[f].area);
    let kinetic_term = pairwise_sum_by(diffs.len(), |e| mesh.edges[e].weight() * diffs[e].norm_sqr());
    let u = config.u();
    let potential_term = pairwise_sum_by(u.len(), |v| {
        let s = 1.0 - u[v].norm_sqr();
        mesh.dual_areas[v] * s * s
    }) / (4.0 * eps * eps);
    EnergyBreakdown {
        curvature_term,
        kinetic_term,
        potential_term,
        total: curvature_term + kinetic_term + potential_term,
    }
}

/// Euclidean gradient of the energy.
pub fn gradient(config: &Configuration) -> Variation {
    let mesh = config.mesh();
    let eps = config.epsilon;
    let u = config.u();
    let mut g = Variation::zeros(mesh);
    for (e, edge) in mesh.edges.iter().enumerate() {
        let w = edge.weight();
        let t = config.connection.transport(e);
        let ut = t * u[edge.tail];
        let d = u[edge.head] - ut;
        g.u[edge.head] += 2.0 * w * d;
        g.u[edge.tail] -= 2.0 * w * t.conj() * d;
        g.a[e] += 2.0 * w * (d.conj() * ut).im;
    }
    for (v, z) in u.iter().enumerate() {
        let c = mesh.dual_areas[v] / (eps * eps);
        g.u[v] -= c * (1.0 - z.norm_sqr()) * z;
    }
    let curv = config.connection.curvature();
    for (f, face) in mesh.faces.iter().enumerate() {
        let c = 2.0 * eps * eps * curv[f] / face.area;
        for (&e, &s) in face.edges.iter().zip(&face.signs) {
            g.a[e] += s as f64 * c;
        }
    }
    g
}

/// Action of the Euclidean Hessian on `x`.
pub fn hessian_apply(config: &Configuration, x: &Variation) -> Variation {
    let mesh = config.mesh();
    let eps = config.epsilon;
    let u = config.u();
    let mut out = Variation::zeros(mesh);
    for (e, edge) in mesh.edges.iter().enumerate() {
        let w = edge.weight();
        let t = config.connection.transport(e);
        let ut = t * u[edge.tail];
        let d = u[edge.head] - ut;
        let a = x.a[e];
        let vt = t * x.u[edge.tail];
        let dd = x.u[edge.head] - vt - I * a * ut;
        out.u[edge.head] += 2.0 * w * dd;
        out.u[edge.tail] += 2.0 * w * t.conj() * (I * a * d - dd);
        out.a[e] += 2.0 * w * (dd.conj() * ut + I * a * d.conj() * ut + d.conj() * vt).im;
    }
    for (v, z) in u.iter().enumerate() {
        let c = mesh.dual_areas[v] / (eps * eps);
        let xv = x.u[v];
        out.u[v] -= c * ((1.0 - z.norm_sqr()) * xv - 2.0 * (z.conj() * xv).re * z);
    }
    for face in mesh.faces.iter() {
        let da: f64 = face
            .edges
            .iter()
            .zip(&face.signs)
            .map(|(&e, &s)| s as f64 * x.a[e])
            .sum();
        let c = 2.0 * eps * eps * da / face.area;
        for (&e, &s) in face.edges.iter().zip(&face.signs) {
            out.a[e] += s as f64 * c;
        }
    }
    out
}

/// Moves `config` by `alpha · p`.
pub fn displaced(config: &Configuration, p: &Variation, alpha: f64) -> Configuration {
    let mut out = config.clone();
    for (z, dz) in out.section.values.iter_mut().zip(&p.u) {
        *z += alpha * dz;
    }
    for (a, da) in out.connection.a.iter_mut().zip(&p.a) {
        *a += alpha * da;
    }
    out
}

/// `E(config + alpha·p) − E(config)`, evaluated term by term without
/// subtracting two totals.
pub fn energy_change(config: &Configuration, p: &Variation, alpha: f64) -> f64 {
    let mesh = config.mesh();
    let eps = config.epsilon;
    let u = config.u();
    let curv = config.connection.curvature();
    let d_curv = pairwise_sum_by(mesh.num_faces(), |f| {
        let face = &mesh.faces[f];
        let df: f64 = alpha
            * face
                .edges
                .iter()
                .zip(&face.signs)
                .map(|(&e, &s)| s as f64 * p.a[e])
                .sum::<f64>();
        df * (2.0 * curv[f] + df) / face.area
    }) * eps
        * eps;
    let d_kin = pairwise_sum_by(mesh.num_edges(), |e| {
        let edge = &mesh.edges[e];
        let t = config.connection.transport(e);
        let d = u[edge.head] - t * u[edge.tail];
        let half = 0.5 * alpha * p.a[e];
        // e^{iφ} − 1 without cancellation
        let rot = Complex64::new(-2.0 * half.sin().powi(2), (2.0 * half).sin());
        let moved_tail = u[edge.tail] + alpha * p.u[edge.tail];
        let dd = alpha * p.u[edge.head] - t * (rot * moved_tail + alpha * p.u[edge.tail]);
        edge.weight() * (2.0 * (d.conj() * dd).re + dd.norm_sqr())
    });
    let d_pot = pairwise_sum_by(u.len(), |v| {
        let z = u[v];
        let dz = p.u[v];
        let s = 1.0 - z.norm_sqr();
        let ds = 2.0 * alpha * (z.conj() * dz).re + alpha * alpha * dz.norm_sqr();
        mesh.dual_areas[v] * ds * (ds - 2.0 * s)
    }) / (4.0 * eps * eps);
    d_curv + d_kin + d_pot
}

/// `M⁻¹`-norms of the gradient blocks (the two Euler–Lagrange residuals).
pub fn el_residual(config: &Configuration) -> (f64, f64) {
    let metric = MassMetric::new(config.mesh());
    metric.dual_norms(&gradient(config))
}

/// Combined `M⁻¹` gradient norm.
pub fn gradient_norm(config: &Configuration) -> f64 {
    let (ru, ra) = el_residual(config);
    ru.hypot(ra)
}

/// Values of `h = (1 − |u|²)/2ε²` at vertices.
pub fn h_field(config: &Configuration) -> Vec<f64> {
    let eps2 = config.epsilon * config.epsilon;
    config.u().iter().map(|z| (1.0 - z.norm_sqr()) / (2.0 * eps2)).collect()
}

/// Face densities `f = F_f / area_f`.
pub fn f_field(config: &Configuration) -> Vec<f64> {
    let mesh = config.mesh();
    config
        .connection
        .curvature()
        .iter()
        .zip(&mesh.faces)
        .map(|(c, face)| c / face.area)
        .collect()
}

/// Area-weighted mean of a face field.
pub fn face_mean(mesh: &Mesh, values: &[f64]) -> f64 {
    pairwise_sum_by(values.len(), |f| values[f] * mesh.faces[f].area)
        / pairwise_sum(&mesh.faces.iter().map(|f| f.area).collect::<Vec<_>>())
}

#[cfg(test)]
pub(crate) mod testing {
    use std::f64::consts::PI;
    use std::sync::Arc;

    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use crate::bundle::{background_connection, Configuration, Section};
    use crate::mesh::{build_sphere_mesh, build_torus_mesh, Mesh};

    use super::Variation;

    pub fn torus(n: usize) -> Arc<Mesh> {
        Arc::new(build_torus_mesh(n, n, 2.0 * PI, 2.0 * PI).unwrap())
    }

    pub fn sphere(n: usize) -> Arc<Mesh> {
        Arc::new(build_sphere_mesh(n, 1.0).unwrap())
    }

    pub fn random_config(mesh: Arc<Mesh>, d: i64, eps: f64, seed: u64) -> Configuration {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut conn = background_connection(mesh.clone(), d);
        for a in conn.a.iter_mut() {
            *a = rng.random_range(-0.3..0.3);
        }
        let values = (0..mesh.num_vertices())
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        Configuration::new(Section { mesh, values }, conn, eps).unwrap()
    }

    pub fn random_variation(mesh: &Mesh, rng: &mut ChaCha8Rng) -> Variation {
        Variation {
            u: (0..mesh.num_vertices())
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect(),
            a: (0..mesh.num_edges()).map(|_| rng.random_range(-1.0..1.0)).collect(),
        }
    }

    /// Smooth section of the degree-`d` bundle on the 2π torus with a smooth
    /// fluctuation, sampled on an `n × n` lattice.
    pub fn smooth_torus_config(n: usize, d: i64, seed: u64) -> Configuration {
        let l = 2.0 * PI;
        let mesh = Arc::new(build_torus_mesh(n, n, l, l).unwrap());
        let h = l / n as f64;
        let b = 2.0 * PI * d.abs() as f64 / (l * l);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c: Vec<f64> = (0..8).map(|_| rng.random_range(-0.3..0.3)).collect();
        // quasi-periodic Landau-gauge factor ψ(x + L, y) = e^{iBLy} ψ(x, y)
        let landau = |x: f64, y: f64| -> Complex64 {
            if d == 0 {
                return Complex64::new(1.0, 0.0);
            }
            let s: Complex64 = (-6..=6)
                .map(|k| {
                    let xs = x + k as f64 * l;
                    Complex64::from_polar((-0.5 * b * xs * xs).exp(), -b * k as f64 * l * y)
                })
                .sum();
            if d > 0 { s } else { s.conj() }
        };
        let periodic = |x: f64, y: f64| {
            Complex64::new(1.0 + c[0] * x.cos() + c[1] * (y + c[2]).sin(), c[3] * (x + y).sin())
        };
        let values = mesh
            .positions
            .iter()
            .map(|p| landau(p[0], p[1]) * periodic(p[0], p[1]))
            .collect();
        let mut conn = background_connection(mesh.clone(), d);
        let fluct = |x: f64, y: f64| [c[4] * y.sin() + c[5], c[6] * (x + c[7]).cos()];
        for (e, edge) in mesh.edges.iter().enumerate() {
            let (t, hd) = (edge.tail, edge.head);
            let horizontal = t / n == hd / n;
            let forward = if horizontal { (t + 1) % n == hd % n } else { (t + n) % (n * n) == hd };
            let start = mesh.positions[if forward { t } else { hd }];
            let val = if horizontal {
                fluct(start[0] + 0.5 * h, start[1])[0] * h
            } else {
                fluct(start[0], start[1] + 0.5 * h)[1] * h
            };
            conn.a[e] = if forward { val } else { -val };
        }
        Configuration::new(Section { mesh, values }, conn, 0.7).unwrap()
    }

    pub fn vacuum(mesh: Arc<Mesh>, eps: f64) -> Configuration {
        let conn = background_connection(mesh.clone(), 0);
        Configuration::new(Section::constant(mesh, Complex64::new(1.0, 0.0)), conn, eps).unwrap()
    }
}
