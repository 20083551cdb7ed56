//! Whitespace-separated column files (gnuplot style) for fields, spectra and
//! scans. Field dumps can be read back into a configuration.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bundle::{background_connection, Configuration, Section};
use crate::energy::{f_field, h_field, diagnostics};
use crate::error::{Error, Result};
use crate::mesh::Geometry;

pub const MANIFEST: &str = "manifest.json";
pub const VERTICES: &str = "vertices.csv";
pub const EDGES: &str = "edges.csv";
pub const FACES: &str = "faces.csv";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldManifest {
    pub mesh: Geometry,
    pub checksum: String,
    pub degree: i64,
    pub epsilon: f64,
}

fn cell(out: &mut String, x: f64) {
    write!(out, " {x:.16e}").expect("write to string");
}

/// Formats rows under a `#`-prefixed header line.
pub fn table(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut s = format!("# {}\n", header.join(" "));
    for row in rows {
        let mut line = String::new();
        for &x in &row {
            cell(&mut line, x);
        }
        s.push_str(line.trim_start());
        s.push('\n');
    }
    s
}

pub fn write_table(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    std::fs::write(path, table(header, rows))?;
    Ok(())
}

/// Parses a table written by [`table`], checking the header.
pub fn read_table(path: &Path, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let expected = format!("# {}", header.join(" "));
    if lines.next() != Some(expected.as_str()) {
        return Err(Error::Invalid(format!("{}: expected header `{expected}`", path.display())));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            let row = l
                .split_whitespace()
                .map(str::parse::<f64>)
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Invalid(format!("{} row {}: {e}", path.display(), i + 1)))?;
            if row.len() != header.len() {
                return Err(Error::Invalid(format!(
                    "{} row {}: expected {} columns, found {}",
                    path.display(),
                    i + 1,
                    header.len(),
                    row.len()
                )));
            }
            Ok(row)
        })
        .collect()
}

const VERTEX_COLUMNS: [&str; 8] = ["vertex", "x", "y", "z", "re_u", "im_u", "abs_u", "h"];
const EDGE_COLUMNS: [&str; 4] = ["edge", "tail", "head", "a"];
const FACE_COLUMNS: [&str; 7] = ["face", "x", "y", "z", "f", "phi", "sigma_sq_plus"];

/// Writes vertex, edge and face tables plus a manifest into `dir`.
pub fn dump_fields(config: &Configuration, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mesh = config.mesh();
    let manifest = FieldManifest {
        mesh: mesh.geometry,
        checksum: mesh.checksum(),
        degree: config.degree(),
        epsilon: config.epsilon,
    };
    std::fs::write(dir.join(MANIFEST), serde_json::to_string_pretty(&manifest)? + "\n")?;
    let h = h_field(config);
    write_table(
        &dir.join(VERTICES),
        &VERTEX_COLUMNS,
        config.u().iter().enumerate().map(|(v, z)| {
            let p = mesh.positions[v];
            vec![v as f64, p[0], p[1], p[2], z.re, z.im, z.norm(), h[v]]
        }),
    )?;
    write_table(
        &dir.join(EDGES),
        &EDGE_COLUMNS,
        mesh.edges
            .iter()
            .zip(config.a())
            .enumerate()
            .map(|(e, (edge, &a))| vec![e as f64, edge.tail as f64, edge.head as f64, a]),
    )?;
    let f = f_field(config);
    let diag = diagnostics(config);
    write_table(
        &dir.join(FACES),
        &FACE_COLUMNS,
        (0..mesh.num_faces()).map(|k| {
            let c = mesh.face_center(k);
            vec![k as f64, c[0], c[1], c[2], f[k], diag.phi[k], diag.sigma_norm_sq_plus[k]]
        }),
    )?;
    Ok(())
}

/// Rebuilds the configuration stored by [`dump_fields`].
pub fn load_fields(dir: &Path) -> Result<Configuration> {
    let manifest: FieldManifest = serde_json::from_str(&std::fs::read_to_string(dir.join(MANIFEST))?)?;
    let mesh = Arc::new(manifest.mesh.build()?);
    let computed = mesh.checksum();
    if computed != manifest.checksum {
        return Err(Error::ChecksumMismatch {
            stored: manifest.checksum,
            computed,
        });
    }
    let vertices = read_table(&dir.join(VERTICES), &VERTEX_COLUMNS)?;
    let edges = read_table(&dir.join(EDGES), &EDGE_COLUMNS)?;
    if vertices.len() != mesh.num_vertices() || edges.len() != mesh.num_edges() {
        return Err(Error::Truncated(format!(
            "field tables hold {} vertices and {} edges, mesh has {} and {}",
            vertices.len(),
            edges.len(),
            mesh.num_vertices(),
            mesh.num_edges()
        )));
    }
    let mut conn = background_connection(mesh.clone(), manifest.degree);
    conn.a = edges.iter().map(|r| r[3]).collect();
    let values = vertices.iter().map(|r| Complex64::new(r[4], r[5])).collect();
    Configuration::new(Section { mesh, values }, conn, manifest.epsilon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::energy;
    use crate::energy::testing::*;

    #[test]
    fn dumps_reload_exactly() {
        let c = random_config(torus(5), 1, 0.6, 2);
        let dir = tempfile::tempdir().unwrap();
        dump_fields(&c, dir.path()).unwrap();
        let back = load_fields(dir.path()).unwrap();
        assert_eq!(energy(&back).total.to_bits(), energy(&c).total.to_bits());
        assert_eq!(back.degree(), 1);
    }

    #[test]
    fn tables_check_headers_and_widths() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        write_table(&p, &["a", "b"], [vec![1.0, 2.5], vec![-3.0, 1e-300]]).unwrap();
        assert_eq!(read_table(&p, &["a", "b"]).unwrap(), vec![vec![1.0, 2.5], vec![-3.0, 1e-300]]);
        assert!(read_table(&p, &["a", "c"]).is_err());
        std::fs::write(&p, "# a b\n1.0\n").unwrap();
        assert!(read_table(&p, &["a", "b"]).is_err());
    }
}
