//! Second-variation spectra modulo gauge, magnetic Laplacian spectra, and the
//! stability / vortex verdict for critical points.

mod eigen;
mod gauge;

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bundle::{Configuration, Connection};
use crate::energy::{bogomolny_split, energy, gradient_norm, hessian_apply, MassMetric, Variation};
use crate::error::{Error, Result};
use crate::mesh::{Mesh, Topology};
use crate::solver::precond::Preconditioner;
use crate::solver::MinimizeResult;

use eigen::{dense_smallest, lobpcg, norm_estimate, random_block, Eigenpairs, Problem};
use gauge::GaugeProjector;
pub use gauge::VANISHING_SECTION;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EigenMethod {
    /// Dense below `dense_threshold` unknowns, iterative above.
    Auto,
    Dense,
    Iterative,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumOptions {
    pub k: usize,
    /// Residual bound relative to the operator norm estimate.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Vectors iterated beyond the `k` requested.
    pub guard_vectors: usize,
    pub method: EigenMethod,
    pub dense_threshold: usize,
    pub seed: u64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions {
            k: 4,
            tolerance: 1e-8,
            max_iterations: 2000,
            guard_vectors: 4,
            method: EigenMethod::Auto,
            dense_threshold: 1500,
            seed: 7,
        }
    }
}

impl SpectrumOptions {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.k == 0 {
            out.push("spectrum k must be at least 1".into());
        }
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            out.push(format!("spectrum tolerance must lie in (0, 1), got {}", self.tolerance));
        }
        if self.max_iterations == 0 {
            out.push("spectrum max_iterations must be at least 1".into());
        }
        out
    }

    fn use_dense(&self, unknowns: usize) -> bool {
        match self.method {
            EigenMethod::Dense => true,
            EigenMethod::Iterative => false,
            EigenMethod::Auto => unknowns < self.dense_threshold,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub gauge_mode_count: usize,
    pub iterations: usize,
    pub matvecs: usize,
    pub converged: bool,
    pub method: String,
    pub norm_estimate: f64,
    pub notes: Vec<String>,
}

impl SpectrumResult {
    fn from_pairs(pairs: Eigenpairs, gauge_mode_count: usize, method: &str) -> Self {
        SpectrumResult {
            eigenvalues: pairs.values,
            residuals: pairs.residuals,
            gauge_mode_count,
            iterations: pairs.iterations,
            matvecs: pairs.matvecs,
            converged: pairs.converged,
            method: method.into(),
            norm_estimate: pairs.norm_estimate,
            notes: Vec::new(),
        }
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(f64::NAN)
    }
}

/// Smallest eigenvalues of the second variation with respect to the mass
/// metric, on the `M`-orthogonal complement of the gauge directions.
pub fn smallest_hessian_eigs(config: &Configuration, k: usize, tol: f64) -> Result<SpectrumResult> {
    smallest_hessian_eigs_with(
        config,
        &SpectrumOptions {
            k,
            tolerance: tol,
            ..SpectrumOptions::default()
        },
    )
}

pub fn smallest_hessian_eigs_with(config: &Configuration, opts: &SpectrumOptions) -> Result<SpectrumResult> {
    let v = opts.violations();
    if !v.is_empty() {
        return Err(Error::Config(v));
    }
    let mesh = config.mesh();
    let nv = mesh.num_vertices();
    let mass = MassMetric::new(mesh).flat();
    let n = mass.len();
    let projector = GaugeProjector::new(config, mass.clone());
    let precond = Preconditioner::new(mesh, config.epsilon);
    let apply = |x: &[f64]| Ok(hessian_apply(config, &Variation::from_flat(nv, x)).to_flat());
    let precondition = |r: &[f64]| Ok(precond.apply(&Variation::from_flat(nv, r))?.to_flat());
    let project = |x: &[f64]| projector.project(x);
    let problem = Problem {
        mass: &mass,
        apply: &apply,
        precondition: &precondition,
        project: &project,
    };
    let mut result = if opts.use_dense(n) {
        let gauge: Vec<Vec<f64>> = (0..nv)
            .map(|b| {
                let mut theta = vec![0.0; nv];
                theta[b] = 1.0;
                projector.direction(&theta)
            })
            .collect();
        let (pairs, rank) = dense_smallest(&problem, opts.k, &gauge)?;
        SpectrumResult::from_pairs(pairs, rank, "dense")
    } else {
        let (hint, steps) = norm_estimate(&problem, opts.seed ^ 0x5eed, 30)?;
        let block = random_block(n, opts.k + opts.guard_vectors, opts.seed);
        let mut pairs = lobpcg(&problem, opts.k, block, opts.tolerance, opts.max_iterations, hint)?;
        pairs.matvecs += steps;
        SpectrumResult::from_pairs(pairs, projector.rank(), "lobpcg")
    };
    if projector.is_degenerate() {
        result
            .notes
            .push("section vanishes; only connection gauge modes deflated".into());
    }
    result.notes.push(
        "stability is tested on the finite-dimensional lattice variation space, not on all W^{1,2} variations"
            .into(),
    );
    Ok(result)
}

/// Applies `d_Aᵀ star1 d_A` to a section.
fn magnetic_apply(conn: &Connection, u: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); u.len()];
    for (e, edge) in conn.mesh.edges.iter().enumerate() {
        let t = conn.transport(e);
        let d = u[edge.head] - t * u[edge.tail];
        let w = edge.weight();
        out[edge.head] += w * d;
        out[edge.tail] -= w * t.conj() * d;
    }
    out
}

fn to_complex(x: &[f64]) -> Vec<Complex64> {
    x.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect()
}

fn to_real(z: &[Complex64]) -> Vec<f64> {
    z.iter().flat_map(|c| [c.re, c.im]).collect()
}

/// Lowest eigenvalues of `star0⁻¹ d_Aᵀ star1 d_A` on sections.
pub fn magnetic_laplacian_eigs(conn: &Connection, k: usize) -> Result<SpectrumResult> {
    magnetic_laplacian_eigs_with(
        conn,
        &SpectrumOptions {
            k,
            ..SpectrumOptions::default()
        },
    )
}

pub fn magnetic_laplacian_eigs_with(conn: &Connection, opts: &SpectrumOptions) -> Result<SpectrumResult> {
    let v = opts.violations();
    if !v.is_empty() {
        return Err(Error::Config(v));
    }
    let mesh: &Arc<Mesh> = &conn.mesh;
    let mass: Vec<f64> = mesh.dual_areas.iter().flat_map(|&m| [m, m]).collect();
    let n = mass.len();
    let precond = Preconditioner::new(mesh, 1.0);
    let apply = |x: &[f64]| Ok(to_real(&magnetic_apply(conn, &to_complex(x))));
    let precondition = |r: &[f64]| Ok(to_real(&precond.apply_section(&to_complex(r))?));
    let project = |x: &[f64]| Ok(x.to_vec());
    let problem = Problem {
        mass: &mass,
        apply: &apply,
        precondition: &precondition,
        project: &project,
    };
    // the real form doubles every eigenvalue; iterate J-paired vectors
    let real_k = 2 * opts.k;
    let pairs = if opts.use_dense(n) {
        dense_smallest(&problem, real_k, &[])?.0
    } else {
        let (hint, _) = norm_estimate(&problem, opts.seed ^ 0x5eed, 30)?;
        let half = random_block(n, opts.k + opts.guard_vectors.div_ceil(2), opts.seed);
        let mut block = Vec::with_capacity(2 * half.len());
        for x in half {
            let jx: Vec<f64> = x.chunks_exact(2).flat_map(|c| [-c[1], c[0]]).collect();
            block.push(x);
            block.push(jx);
        }
        lobpcg(&problem, real_k, block, opts.tolerance, opts.max_iterations, hint)?
    };
    let method = if opts.use_dense(n) { "dense" } else { "lobpcg" };
    let mut result = SpectrumResult::from_pairs(pairs, 0, method);
    result.residuals = result
        .residuals
        .chunks(2)
        .map(|c| c.iter().fold(0.0_f64, |m, &r| m.max(r)))
        .collect();
    result.eigenvalues = result.eigenvalues.iter().step_by(2).copied().collect();
    Ok(result)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerdictTolerances {
    /// Stable when `λ₁ ≥ −stability·max(1, E)`.
    pub stability: f64,
    /// Vortex equations hold when the smaller defect is `≤ vortex·max(1, E)`.
    pub vortex: f64,
    /// `sup|u|` below this counts as the zero section.
    pub vanishing_section: f64,
    pub spectrum: SpectrumOptions,
}

impl Default for VerdictTolerances {
    fn default() -> Self {
        VerdictTolerances {
            stability: 1e-6,
            vortex: 0.02,
            vanishing_section: 1e-3,
            spectrum: SpectrumOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub is_stable: bool,
    pub lambda_min: f64,
    pub stability_threshold: f64,
    /// Defect of the branch selected by the sign of the degree.
    pub vortex_residual: f64,
    pub defect_plus: f64,
    pub defect_minus: f64,
    pub satisfies_vortex: bool,
    /// The section does not vanish identically.
    pub hypothesis_h: bool,
    /// Round sphere with `|d| ≤ ε⁻²|Σ|/4π`.
    pub hypothesis_h_prime: bool,
    /// Set when neither hypothesis holds, so the theorem makes no claim.
    pub edge_case: Option<String>,
    pub theorem_consistent: bool,
    pub energy: f64,
    pub degree: i64,
    pub epsilon: f64,
    pub sup_norm: f64,
    pub spectrum: SpectrumResult,
}

fn verdict_for(config: &Configuration, tol: &VerdictTolerances) -> Result<StabilityVerdict> {
    let e = energy(config).total;
    let scale = e.max(1.0);
    let spectrum = smallest_hessian_eigs_with(config, &tol.spectrum)?;
    let lambda_min = spectrum.lambda_min();
    let threshold = -tol.stability * scale;
    let is_stable = lambda_min >= threshold;
    let split = bogomolny_split(config);
    let d = config.degree();
    let satisfies_vortex = split.defect_plus.min(split.defect_minus) <= tol.vortex * scale;
    let sup_norm = config.section.sup_norm();
    let mesh = config.mesh();
    let hypothesis_h = sup_norm > tol.vanishing_section;
    let eps2 = config.epsilon * config.epsilon;
    let hypothesis_h_prime =
        mesh.topology == Topology::Sphere && (d.abs() as f64) <= mesh.total_area / (4.0 * PI * eps2) * (1.0 + 1e-12);
    let edge_case = (!hypothesis_h && !hypothesis_h_prime)
        .then(|| "vanishing section outside the sphere threshold; the theorem makes no claim".to_string());
    Ok(StabilityVerdict {
        is_stable,
        lambda_min,
        stability_threshold: threshold,
        vortex_residual: split.matching_defect(d),
        defect_plus: split.defect_plus,
        defect_minus: split.defect_minus,
        satisfies_vortex,
        hypothesis_h,
        hypothesis_h_prime,
        theorem_consistent: !is_stable || satisfies_vortex || edge_case.is_some(),
        edge_case,
        energy: e,
        degree: d,
        epsilon: config.epsilon,
        sup_norm,
        spectrum,
    })
}

/// Verdict for a minimizer; unconverged runs are rejected.
pub fn theorem_verdict(result: &MinimizeResult, tol: &VerdictTolerances) -> Result<StabilityVerdict> {
    if !result.converged {
        return Err(Error::Unconverged {
            grad_norm: result.grad_norm,
            tolerance: result.tolerance,
        });
    }
    verdict_for(&result.config, tol)
}

/// Verdict for a stored configuration, first checking that it is critical
/// to within `10·grad_tolerance·max(1, E)`.
pub fn configuration_verdict(
    config: &Configuration,
    grad_tolerance: f64,
    tol: &VerdictTolerances,
) -> Result<StabilityVerdict> {
    let g = gradient_norm(config);
    let limit = 10.0 * grad_tolerance * energy(config).total.max(1.0);
    if !(g <= limit) {
        return Err(Error::Unconverged {
            grad_norm: g,
            tolerance: limit,
        });
    }
    verdict_for(config, tol)
}

/// Stability of the zero section with the background connection.
pub fn zero_section_report(mesh: Arc<Mesh>, d: i64, epsilon: f64) -> Result<StabilityVerdict> {
    zero_section_report_with(mesh, d, epsilon, &VerdictTolerances::default())
}

pub fn zero_section_report_with(
    mesh: Arc<Mesh>,
    d: i64,
    epsilon: f64,
    tol: &VerdictTolerances,
) -> Result<StabilityVerdict> {
    let config = Configuration::zero_section(mesh, d, epsilon)?;
    verdict_for(&config, tol)
}
