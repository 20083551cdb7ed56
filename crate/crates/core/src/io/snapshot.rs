//! Versioned JSON snapshots of configurations.
//!
//! Floats are written with 17 significant digits so every value re-reads
//! bit-identically.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::bundle::{background_connection, Configuration, Section};
use crate::error::{Error, Result};
use crate::mesh::{Geometry, Mesh};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub command: String,
    pub seed: u64,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

impl Provenance {
    pub fn now(command: &str, seed: u64) -> Self {
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Provenance {
            command: command.into(),
            seed,
            timestamp,
        }
    }
}

#[derive(Serialize)]
struct SnapshotOut<'a> {
    format_version: u32,
    mesh: &'a Geometry,
    checksum: String,
    degree: i64,
    epsilon: Box<RawValue>,
    provenance: &'a Provenance,
    a: Box<RawValue>,
    u: Box<RawValue>,
}

#[derive(Deserialize)]
struct Version {
    format_version: u32,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SnapshotIn {
    #[allow(dead_code)]
    format_version: u32,
    mesh: Geometry,
    checksum: String,
    degree: i64,
    epsilon: f64,
    provenance: Provenance,
    a: Vec<f64>,
    u: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub config: Configuration,
    pub provenance: Provenance,
}

fn number(x: f64) -> Result<String> {
    if !x.is_finite() {
        return Err(Error::Invalid(format!("cannot store non-finite value {x}")));
    }
    Ok(format!("{x:.16e}"))
}

fn raw_array(values: impl Iterator<Item = f64>) -> Result<Box<RawValue>> {
    let mut s = String::from("[");
    for (i, x) in values.enumerate() {
        if i > 0 {
            s.push(',');
        }
        write!(s, "{}", number(x)?).expect("write to string");
    }
    s.push(']');
    Ok(RawValue::from_string(s)?)
}

/// Serializes a configuration; see [`read_snapshot`] for the inverse.
pub fn write_snapshot(config: &Configuration, provenance: &Provenance) -> Result<String> {
    let mesh = config.mesh();
    let out = SnapshotOut {
        format_version: FORMAT_VERSION,
        mesh: &mesh.geometry,
        checksum: mesh.checksum(),
        degree: config.degree(),
        epsilon: RawValue::from_string(number(config.epsilon)?)?,
        provenance,
        a: raw_array(config.a().iter().copied())?,
        u: raw_array(config.u().iter().flat_map(|z| [z.re, z.im]))?,
    };
    let mut text = serde_json::to_string_pretty(&out)?;
    text.push('\n');
    Ok(text)
}

pub fn read_snapshot(text: &str) -> Result<Snapshot> {
    read_snapshot_with_mesh(text, None)
}

/// Like [`read_snapshot`], reusing `mesh` when its checksum matches.
pub fn read_snapshot_with_mesh(text: &str, mesh: Option<Arc<Mesh>>) -> Result<Snapshot> {
    let version: Version = serde_json::from_str(text).map_err(|e| malformed(text, e))?;
    if version.format_version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: version.format_version,
            expected: FORMAT_VERSION,
        });
    }
    let s: SnapshotIn = serde_json::from_str(text).map_err(|e| malformed(text, e))?;
    let mesh = match mesh {
        Some(m) if m.geometry == s.mesh => m,
        _ => Arc::new(s.mesh.build()?),
    };
    let computed = mesh.checksum();
    if computed != s.checksum {
        return Err(Error::ChecksumMismatch {
            stored: s.checksum,
            computed,
        });
    }
    if s.a.len() != mesh.num_edges() || s.u.len() != 2 * mesh.num_vertices() {
        return Err(Error::Truncated(format!(
            "expected {} edge and {} section values, found {} and {}",
            mesh.num_edges(),
            2 * mesh.num_vertices(),
            s.a.len(),
            s.u.len()
        )));
    }
    let mut conn = background_connection(mesh.clone(), s.degree);
    conn.a = s.a;
    let values = s.u.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
    let config = Configuration::new(Section { mesh, values }, conn, s.epsilon)?;
    Ok(Snapshot {
        config,
        provenance: s.provenance,
    })
}

fn malformed(text: &str, e: serde_json::Error) -> Error {
    if e.is_eof() || text.trim().is_empty() {
        Error::Truncated(e.to_string())
    } else {
        Error::Truncated(format!("malformed snapshot: {e}"))
    }
}

pub fn save_snapshot(config: &Configuration, provenance: &Provenance, path: &Path) -> Result<()> {
    std::fs::write(path, write_snapshot(config, provenance)?)?;
    Ok(())
}

pub fn load_snapshot(path: &Path) -> Result<Snapshot> {
    read_snapshot(&std::fs::read_to_string(path)?)
}
