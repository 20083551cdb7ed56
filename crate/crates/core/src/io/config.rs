//! Experiment configuration documents (TOML) with strict validation.

use std::f64::consts::PI;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Geometry;
use crate::solver::SolveOptions;
use crate::stability::{SpectrumOptions, VerdictTolerances};

pub const DEFAULT_TORUS_SIZE: usize = 64;
pub const DEFAULT_SUBDIVISIONS: usize = 4;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorusBlock {
    pub nx: Option<usize>,
    pub ny: Option<usize>,
    pub lx: Option<f64>,
    pub ly: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphereBlock {
    pub subdivisions: Option<usize>,
    pub radius: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fields_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerdictBlock {
    pub stability: f64,
    pub vortex: f64,
    pub vanishing_section: f64,
}

impl Default for VerdictBlock {
    fn default() -> Self {
        let t = VerdictTolerances::default();
        VerdictBlock {
            stability: t.stability,
            vortex: t.vortex,
            vanishing_section: t.vanishing_section,
        }
    }
}

/// A configuration document as written; every field optional.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub degree: Option<i64>,
    pub epsilon: Option<f64>,
    pub seed: Option<u64>,
    pub torus: Option<TorusBlock>,
    pub sphere: Option<SphereBlock>,
    pub solve: Option<SolveOptions>,
    pub spectrum: Option<SpectrumOptions>,
    pub verdict: Option<VerdictBlock>,
    pub output: Option<OutputPaths>,
}

/// Fully resolved experiment; serializes to a document `parse_config` accepts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub degree: i64,
    pub epsilon: f64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub torus: Option<TorusBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sphere: Option<SphereBlock>,
    pub solve: SolveOptions,
    pub spectrum: SpectrumOptions,
    pub verdict: VerdictBlock,
    #[serde(default)]
    pub output: OutputPaths,
}

fn positive(name: &str, x: f64, out: &mut Vec<String>) {
    if !(x > 0.0 && x.is_finite()) {
        out.push(format!("{name} must be a positive finite number, got {x}"));
    }
}

impl RawConfig {
    pub fn resolve(self) -> Result<ExperimentConfig> {
        let mut v = Vec::new();
        let epsilon = self.epsilon.unwrap_or(0.5);
        positive("epsilon", epsilon, &mut v);
        let mut solve = self.solve.unwrap_or_default();
        let seed = match self.seed {
            Some(s) => {
                if solve.seed != SolveOptions::default().seed && solve.seed != s {
                    v.push(format!("seed = {s} disagrees with solve.seed = {}", solve.seed));
                }
                s
            }
            None => solve.seed,
        };
        solve.seed = seed;
        v.extend(solve.violations());
        let spectrum = self.spectrum.unwrap_or_default();
        v.extend(spectrum.violations());
        let verdict = self.verdict.unwrap_or_default();
        positive("verdict.stability", verdict.stability, &mut v);
        positive("verdict.vortex", verdict.vortex, &mut v);
        positive("verdict.vanishing_section", verdict.vanishing_section, &mut v);
        let (torus, sphere) = match (self.torus, self.sphere) {
            (Some(_), Some(_)) => {
                v.push("geometry is ambiguous: both [torus] and [sphere] blocks are present".into());
                (None, None)
            }
            (None, None) => {
                v.push("geometry missing: give exactly one [torus] or [sphere] block".into());
                (None, None)
            }
            (Some(t), None) => {
                let t = TorusBlock {
                    nx: Some(t.nx.unwrap_or(DEFAULT_TORUS_SIZE)),
                    ny: Some(t.ny.unwrap_or(DEFAULT_TORUS_SIZE)),
                    lx: Some(t.lx.unwrap_or(2.0 * PI)),
                    ly: Some(t.ly.unwrap_or(2.0 * PI)),
                };
                for (name, n) in [("torus.nx", t.nx), ("torus.ny", t.ny)] {
                    if n.unwrap() < 3 {
                        v.push(format!("{name} must be at least 3, got {}", n.unwrap()));
                    }
                }
                positive("torus.lx", t.lx.unwrap(), &mut v);
                positive("torus.ly", t.ly.unwrap(), &mut v);
                (Some(t), None)
            }
            (None, Some(s)) => {
                let s = SphereBlock {
                    subdivisions: Some(s.subdivisions.unwrap_or(DEFAULT_SUBDIVISIONS)),
                    radius: Some(s.radius.unwrap_or(1.0)),
                };
                if s.subdivisions.unwrap() > 7 {
                    v.push(format!("sphere.subdivisions must be at most 7, got {}", s.subdivisions.unwrap()));
                }
                positive("sphere.radius", s.radius.unwrap(), &mut v);
                (None, Some(s))
            }
        };
        if !v.is_empty() {
            return Err(Error::Config(v));
        }
        Ok(ExperimentConfig {
            degree: self.degree.unwrap_or(1),
            epsilon,
            seed,
            torus,
            sphere,
            solve,
            spectrum,
            verdict,
            output: self.output.unwrap_or_default(),
        })
    }
}

/// Parses and validates a TOML configuration document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    parse_raw(text)?.resolve()
}

pub fn parse_raw(text: &str) -> Result<RawConfig> {
    toml::from_str(text).map_err(|e| Error::Config(vec![e.message().to_string()]))
}

impl ExperimentConfig {
    pub fn geometry(&self) -> Geometry {
        match (&self.torus, &self.sphere) {
            (Some(t), _) => Geometry::Torus {
                nx: t.nx.unwrap_or(DEFAULT_TORUS_SIZE),
                ny: t.ny.unwrap_or(DEFAULT_TORUS_SIZE),
                lx: t.lx.unwrap_or(2.0 * PI),
                ly: t.ly.unwrap_or(2.0 * PI),
            },
            (None, Some(s)) => Geometry::Sphere {
                subdivisions: s.subdivisions.unwrap_or(DEFAULT_SUBDIVISIONS),
                radius: s.radius.unwrap_or(1.0),
            },
            (None, None) => Geometry::Torus {
                nx: DEFAULT_TORUS_SIZE,
                ny: DEFAULT_TORUS_SIZE,
                lx: 2.0 * PI,
                ly: 2.0 * PI,
            },
        }
    }

    pub fn verdict_tolerances(&self) -> VerdictTolerances {
        VerdictTolerances {
            stability: self.verdict.stability,
            vortex: self.verdict.vortex,
            vanishing_section: self.verdict.vanishing_section,
            spectrum: self.spectrum.clone(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn to_raw(&self) -> RawConfig {
        RawConfig {
            degree: Some(self.degree),
            epsilon: Some(self.epsilon),
            seed: Some(self.seed),
            torus: self.torus.clone(),
            sphere: self.sphere.clone(),
            solve: Some(self.solve.clone()),
            spectrum: Some(self.spectrum.clone()),
            verdict: Some(self.verdict.clone()),
            output: Some(self.output.clone()),
        }
    }
}
