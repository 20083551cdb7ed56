//! Per-face reconstruction of the covariant derivative `d_A u`.
//!
//! Vertex values are pulled back to one base vertex along the face boundary,
//! corrected by the enclosed flux so that they sit in the radial gauge of the
//! base vertex, and fitted by an affine function in the face frame. The
//! covariant gradient at the centroid is the fitted gradient minus `iA ũ`
//! with the radial-gauge potential `A = (Φ/2)(−y, x)`.

use num_complex::Complex64;

use crate::bundle::Configuration;
use crate::mesh::polygon_area;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Covariant gradient on one face, expressed in the fiber of its base vertex.
#[derive(Clone, Copy, Debug)]
pub struct FaceGradient {
    /// Components along the two axes of the face frame.
    pub g: [Complex64; 2],
    /// Fitted value of the section at the centroid.
    pub value: Complex64,
    /// Centroid relative to the base vertex.
    pub centroid: [f64; 2],
    /// Flux density used for the radial gauge.
    pub density: f64,
}

impl FaceGradient {
    pub fn norm_sq(&self) -> f64 {
        self.g[0].norm_sqr() + self.g[1].norm_sqr()
    }

    /// `|d_A u − i∗d_A u|²`.
    pub fn sigma_plus_sq(&self) -> f64 {
        2.0 * (self.g[0] + I * self.g[1]).norm_sqr()
    }

    /// `|d_A u + i∗d_A u|²`.
    pub fn sigma_minus_sq(&self) -> f64 {
        2.0 * (self.g[0] - I * self.g[1]).norm_sqr()
    }

    /// `∗(d_A u × d_A u)`.
    pub fn cross(&self) -> f64 {
        2.0 * (self.g[0].conj() * self.g[1]).im
    }

    /// Frame components of `σ = d_A u − i∗d_A u`.
    pub fn sigma(&self) -> [Complex64; 2] {
        // (∗α)(e1) = −α(e2), (∗α)(e2) = α(e1)
        [self.g[0] + I * self.g[1], self.g[1] - I * self.g[0]]
    }

    /// Radial-gauge potential at a point given relative to the base vertex.
    pub fn potential_at(&self, x: [f64; 2]) -> [f64; 2] {
        [-0.5 * self.density * x[1], 0.5 * self.density * x[0]]
    }
}

/// Reconstruction based at position `start` of face `f`, given its integrated curvature.
pub fn reconstruct_face_from(config: &Configuration, f: usize, start: usize, flux: f64) -> FaceGradient {
    let mesh = config.mesh();
    let face = &mesh.faces[f];
    let m = face.len();
    let u = config.u();
    let origin = face.local_coords[start];
    let pts: Vec<[f64; 2]> = (0..m)
        .map(|k| {
            let p = face.local_coords[(start + k) % m];
            [p[0] - origin[0], p[1] - origin[1]]
        })
        .collect();
    let density = flux / face.flat_area;

    let mut vals = Vec::with_capacity(m);
    vals.push(u[face.vertices[start]]);
    let mut back = Complex64::new(1.0, 0.0);
    for k in 1..m {
        let idx = (start + k - 1) % m;
        back *= config.connection.oriented_transport(face.edges[idx], face.signs[idx]).conj();
        let enclosed = polygon_area(&pts[..=k]);
        vals.push(Complex64::from_polar(1.0, density * enclosed) * back * u[face.vertices[(start + k) % m]]);
    }

    let n = m as f64;
    let c = [
        pts.iter().map(|p| p[0]).sum::<f64>() / n,
        pts.iter().map(|p| p[1]).sum::<f64>() / n,
    ];
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    let mut bx = Complex64::new(0.0, 0.0);
    let mut by = Complex64::new(0.0, 0.0);
    let mut mean = Complex64::new(0.0, 0.0);
    for (p, &z) in pts.iter().zip(&vals) {
        let dx = p[0] - c[0];
        let dy = p[1] - c[1];
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
        bx += dx * z;
        by += dy * z;
        mean += z;
    }
    mean /= n;
    let det = sxx * syy - sxy * sxy;
    let gx = (syy * bx - sxy * by) / det;
    let gy = (sxx * by - sxy * bx) / det;
    let pot = [-0.5 * density * c[1], 0.5 * density * c[0]];
    FaceGradient {
        g: [gx - I * pot[0] * mean, gy - I * pot[1] * mean],
        value: mean,
        centroid: c,
        density,
    }
}

/// Reconstruction based at the first vertex of face `f`.
pub fn reconstruct_face(config: &Configuration, f: usize, flux: f64) -> FaceGradient {
    reconstruct_face_from(config, f, 0, flux)
}
