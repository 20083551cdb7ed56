//! Energy minimization by preconditioned Polak–Ribière nonlinear conjugate
//! gradients with an Armijo backtracking line search.

use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub(crate) mod precond;

use precond::Preconditioner;

use crate::bundle::{background_connection, coulomb_gauge_fix, Configuration, Section};
use crate::energy::{
    bogomolny_split, displaced, energy, energy_change, gradient, hessian_apply, EnergyBreakdown, MassMetric,
    Variation,
};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveOptions {
    /// `None` selects `50·√unknowns`, capped at 200000.
    pub max_iterations: Option<usize>,
    pub grad_tolerance: f64,
    pub shrink: f64,
    pub sufficient_decrease: f64,
    /// Iterations between Coulomb re-fixes.
    pub restart_period: usize,
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_iterations: None,
            grad_tolerance: 1e-8,
            shrink: 0.5,
            sufficient_decrease: 1e-4,
            restart_period: 50,
            seed: 1,
        }
    }
}

impl SolveOptions {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.grad_tolerance > 0.0 && self.grad_tolerance.is_finite()) {
            out.push(format!("grad_tolerance must be positive, got {}", self.grad_tolerance));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            out.push(format!("shrink must lie in (0, 1), got {}", self.shrink));
        }
        if !(self.sufficient_decrease > 0.0 && self.sufficient_decrease <= 0.5) {
            out.push(format!(
                "sufficient_decrease must lie in (0, 0.5], got {}",
                self.sufficient_decrease
            ));
        }
        if self.restart_period == 0 {
            out.push("restart_period must be at least 1".into());
        }
        if self.max_iterations == Some(0) {
            out.push("max_iterations must be at least 1".into());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }

    pub fn iteration_cap(&self, mesh: &Mesh) -> usize {
        self.max_iterations.unwrap_or_else(|| {
            let unknowns = (2 * mesh.num_vertices() + mesh.num_edges()) as f64;
            ((50.0 * unknowns.sqrt()) as usize).min(200_000)
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Converged,
    IterationCap,
    LineSearchStalled,
}

#[derive(Clone, Debug)]
pub struct MinimizeResult {
    pub config: Configuration,
    pub iterations: usize,
    /// Energy after every accepted step, starting with the initial value.
    pub energy_history: Vec<f64>,
    pub grad_norm: f64,
    /// Absolute gradient threshold `grad_tolerance · max(1, E)`.
    pub tolerance: f64,
    pub converged: bool,
    pub stop_reason: StopReason,
    pub energy: EnergyBreakdown,
    /// Largest energy change caused by a periodic Coulomb re-fix.
    pub max_gauge_fix_drift: f64,
}

/// Random section with complex-normal entries (`E|u|² = 1`) and a small
/// uniform fluctuation on top of the degree-`d` background.
pub fn random_configuration(mesh: Arc<Mesh>, d: i64, epsilon: f64, seed: u64) -> Result<Configuration> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let values: Vec<Complex64> = (0..mesh.num_vertices())
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(scale * re, scale * im)
        })
        .collect();
    let mut conn = background_connection(mesh.clone(), d);
    for a in conn.a.iter_mut() {
        *a = rng.random_range(-0.1..=0.1);
    }
    Configuration::new(Section { mesh, values }, conn, epsilon)
}

pub fn minimize(initial: &Configuration, opts: &SolveOptions) -> Result<MinimizeResult> {
    minimize_logged(initial, opts, None)
}

/// [`minimize`] streaming `iter,energy,grad_norm,defect_plus` rows to `log`.
pub fn minimize_logged(
    initial: &Configuration,
    opts: &SolveOptions,
    mut log: Option<&mut dyn Write>,
) -> Result<MinimizeResult> {
    opts.validate()?;
    let mesh = initial.mesh().clone();
    let metric = MassMetric::new(&mesh);
    let precond = Preconditioner::new(&mesh, initial.epsilon);
    let cap = opts.iteration_cap(&mesh);

    let (_, mut x) = coulomb_gauge_fix(initial)?;
    let mut e = energy(&x).total;
    let mut history = vec![e];
    let mut g = gradient(&x);
    let mut z = precond.apply(&g)?;
    let mut gz = g.dot(&z);
    let mut gm = g.dot(&metric.raise(&g));
    let mut p = z.clone();
    p.scale(-1.0);
    let mut drift: f64 = 0.0;
    let mut alpha_prev = 1.0;
    let mut stop = StopReason::IterationCap;
    let mut iterations = 0;

    if let Some(w) = log.as_deref_mut() {
        writeln!(w, "iter,energy,grad_norm,defect_plus")?;
    }

    for it in 0..cap {
        let gnorm = gm.max(0.0).sqrt();
        if let Some(w) = log.as_deref_mut() {
            writeln!(w, "{it},{e:.17e},{gnorm:.17e},{:.17e}", bogomolny_split(&x).defect_plus)?;
        }
        if gnorm <= opts.grad_tolerance * e.max(1.0) {
            stop = StopReason::Converged;
            break;
        }
        let mut slope = g.dot(&p);
        if slope >= 0.0 {
            p = z.clone();
            p.scale(-1.0);
            slope = -gz;
        }
        let hp = hessian_apply(&x, &p);
        let curv = hp.dot(&p);
        let mut alpha = if curv > 0.0 { -slope / curv } else { 2.0 * alpha_prev };
        let mut accepted = None;
        for _ in 0..80 {
            let de = energy_change(&x, &p, alpha);
            if de <= opts.sufficient_decrease * alpha * slope {
                accepted = Some(de);
                break;
            }
            alpha *= opts.shrink;
        }
        let Some(de) = accepted else {
            stop = StopReason::LineSearchStalled;
            break;
        };
        x = displaced(&x, &p, alpha);
        e += de;
        history.push(e);
        alpha_prev = alpha;
        iterations = it + 1;

        if iterations % opts.restart_period == 0 {
            let before = energy(&x).total;
            let (theta, fixed) = coulomb_gauge_fix(&x)?;
            drift = drift.max((energy(&fixed).total - before).abs());
            x = fixed;
            rotate_phases(&mut p, &theta);
            rotate_phases(&mut g, &theta);
            z = precond.apply(&g)?;
            gz = g.dot(&z);
        }
        let g_new = gradient(&x);
        let z_new = precond.apply(&g_new)?;
        let gz_new = g_new.dot(&z_new);
        let beta = ((gz_new - z_new.dot(&g)) / gz).max(0.0);
        p.scale(beta);
        p.axpy(-1.0, &z_new);
        g = g_new;
        z = z_new;
        gz = gz_new;
        gm = g.dot(&metric.raise(&g));
    }
    if stop == StopReason::IterationCap && iterations < cap {
        iterations = cap;
    }

    let breakdown = energy(&x);
    let grad_norm = gm.max(0.0).sqrt();
    let tolerance = opts.grad_tolerance * breakdown.total.max(1.0);
    let converged = grad_norm <= tolerance;
    if converged {
        stop = StopReason::Converged;
    }
    Ok(MinimizeResult {
        config: x,
        iterations,
        energy_history: history,
        grad_norm,
        tolerance,
        converged,
        stop_reason: stop,
        energy: breakdown,
        max_gauge_fix_drift: drift,
    })
}

/// Carries a tangent vector along the gauge transformation by `−θ`.
fn rotate_phases(v: &mut Variation, theta: &[f64]) {
    for (z, &t) in v.u.iter_mut().zip(theta) {
        *z *= Complex64::from_polar(1.0, -t);
    }
}

/// Minimizes along an ε schedule, warm-starting each stage from the previous one.
pub fn continue_in_epsilon(
    config: &Configuration,
    epsilon_schedule: &[f64],
    opts: &SolveOptions,
) -> Result<Vec<MinimizeResult>> {
    if epsilon_schedule.is_empty() {
        return Err(Error::Invalid("epsilon schedule is empty".into()));
    }
    let mut out: Vec<MinimizeResult> = Vec::with_capacity(epsilon_schedule.len());
    let mut current = config.clone();
    for &eps in epsilon_schedule {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::Invalid(format!("epsilon must be positive, got {eps}")));
        }
        let start = current.with_epsilon(eps);
        let res = minimize(&start, opts)?;
        current = res.config.clone();
        out.push(res);
    }
    Ok(out)
}
