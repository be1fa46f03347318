use std::fmt::Write as _;
use std::path::Path;

use super::DriverError;
use crate::constitutive::{self, TransportParams};
use crate::mesh::Mesh;

pub const PROBE_HEADER: [&str; 7] = ["time_h", "node", "theta_C", "phi", "p_p_Pa", "d_w", "u_mag_m"];

/// Values at one probe node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeValue {
    pub node: usize,
    pub theta: f64,
    pub phi: f64,
    /// Area-weighted average of the adjacent element pore pressures [Pa].
    pub p_p: f64,
    /// Area-weighted average of the adjacent element damage.
    pub d_w: f64,
    pub u_mag: f64,
}

/// All probes at one output time.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRecord {
    pub time_h: f64,
    pub probes: Vec<ProbeValue>,
}

fn io_error(path: &Path, source: std::io::Error) -> DriverError {
    DriverError::Io { path: path.to_path_buf(), source }
}

fn csv_error(path: &Path, e: csv::Error) -> DriverError {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => io_error(path, source),
        other => DriverError::Io { path: path.to_path_buf(), source: std::io::Error::other(format!("{other:?}")) },
    }
}

/// Probe table, time-major and node-minor. Floats use the shortest
/// representation that reads back to the same value.
pub fn write_probe_csv(records: &[ProbeRecord], path: &Path) -> Result<(), DriverError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(PROBE_HEADER).map_err(|e| csv_error(path, e))?;
    for r in records {
        for p in &r.probes {
            let row = [
                r.time_h.to_string(),
                p.node.to_string(),
                p.theta.to_string(),
                p.phi.to_string(),
                p.p_p.to_string(),
                p.d_w.to_string(),
                p.u_mag.to_string(),
            ];
            w.write_record(&row).map_err(|e| csv_error(path, e))?;
        }
    }
    w.flush().map_err(|e| io_error(path, e))
}

/// Reads a file written by [`write_probe_csv`], grouping consecutive rows
/// with equal time.
pub fn read_probe_csv(path: &Path) -> Result<Vec<ProbeRecord>, DriverError> {
    let bad = |m: String| DriverError::Io { path: path.to_path_buf(), source: std::io::Error::other(m) };
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.iter().ne(PROBE_HEADER) {
        return Err(bad(format!("unexpected header {header:?}")));
    }
    let mut out: Vec<ProbeRecord> = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| csv_error(path, e))?;
        let num = |k: usize| -> Result<f64, DriverError> {
            row[k].parse().map_err(|_| bad(format!("row {}: bad value {:?}", i + 2, &row[k])))
        };
        let node = row[1].parse().map_err(|_| bad(format!("row {}: bad node {:?}", i + 2, &row[1])))?;
        let time_h = num(0)?;
        let value = ProbeValue { node, theta: num(2)?, phi: num(3)?, p_p: num(4)?, d_w: num(5)?, u_mag: num(6)? };
        match out.last_mut() {
            Some(last) if last.time_h == time_h => last.probes.push(value),
            _ => out.push(ProbeRecord { time_h, probes: vec![value] }),
        }
    }
    Ok(out)
}

/// Fields of one snapshot: nodal θ, φ and interleaved u; per-element p_p, d_w, κ.
#[derive(Debug, Clone, Copy)]
pub struct SnapshotFields<'a> {
    pub time_h: f64,
    pub theta: &'a [f64],
    pub phi: &'a [f64],
    pub u: &'a [f64],
    pub p_p: &'a [f64],
    pub d_w: &'a [f64],
    pub kappa: &'a [f64],
}

/// Legacy ASCII VTK unstructured grid.
pub fn render_vtk(mesh: &Mesh, f: &SnapshotFields) -> Result<String, DriverError> {
    let (n, m) = (mesh.node_count(), mesh.element_count());
    for (name, len, expected) in [
        ("theta", f.theta.len(), n),
        ("phi", f.phi.len(), n),
        ("u", f.u.len(), 2 * n),
        ("p_p", f.p_p.len(), m),
        ("d_w", f.d_w.len(), m),
        ("kappa", f.kappa.len(), m),
    ] {
        if len != expected {
            return Err(DriverError::Solver(format!("snapshot field {name} has {len} values, expected {expected}")));
        }
    }
    let mut s = String::new();
    // Writing to a String cannot fail.
    let _ = writeln!(s, "# vtk DataFile Version 3.0\nfrostsim t = {} h\nASCII\nDATASET UNSTRUCTURED_GRID", f.time_h);
    let _ = writeln!(s, "POINTS {n} double");
    for p in mesh.nodes() {
        let _ = writeln!(s, "{} {} 0", p.x, p.y);
    }
    let _ = writeln!(s, "CELLS {m} {}", 4 * m);
    for [a, b, c] in mesh.elements() {
        let _ = writeln!(s, "3 {a} {b} {c}");
    }
    let _ = writeln!(s, "CELL_TYPES {m}");
    for _ in 0..m {
        s.push_str("5\n");
    }
    let scalars = |s: &mut String, name: &str, values: &[f64]| {
        let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for v in values {
            let _ = writeln!(s, "{v}");
        }
    };
    let _ = writeln!(s, "POINT_DATA {n}");
    scalars(&mut s, "theta_C", f.theta);
    scalars(&mut s, "phi", f.phi);
    let _ = writeln!(s, "VECTORS u_m double");
    for u in f.u.chunks_exact(2) {
        let _ = writeln!(s, "{} {} 0", u[0], u[1]);
    }
    let _ = writeln!(s, "CELL_DATA {m}");
    scalars(&mut s, "p_p_Pa", f.p_p);
    scalars(&mut s, "d_w", f.d_w);
    scalars(&mut s, "kappa", f.kappa);
    Ok(s)
}

pub fn write_field_snapshot(mesh: &Mesh, fields: &SnapshotFields, path: &Path) -> Result<(), DriverError> {
    let text = render_vtk(mesh, fields)?;
    std::fs::write(path, text).map_err(|e| io_error(path, e))
}

/// Tabulated material functions for plotting, one CSV per curve family.
pub fn write_material_curves(params: &TransportParams, dir: &Path) -> Result<Vec<std::path::PathBuf>, DriverError> {
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let solver = |e: constitutive::ConstitutiveError| DriverError::Solver(e.to_string());
    let mut written = Vec::new();

    let mut moisture = String::from("phi,w_kg_m3,dw_dphi_kg_m3,D_phi_kg_m_s,lambda_W_mK\n");
    for i in 0..=100 {
        let phi = i as f64 / 100.0;
        let w = constitutive::water_content(phi, params).map_err(solver)?;
        let _ = writeln!(
            moisture,
            "{phi},{w},{},{},{}",
            constitutive::moisture_capacity(phi, params).map_err(solver)?,
            constitutive::liquid_conductivity(phi, params).map_err(solver)?,
            constitutive::thermal_conductivity(w, params).map_err(solver)?,
        );
    }
    let mut thermal = String::from("theta_C,p_sat_Pa,dp_sat_dtheta_Pa_K,delta_v_kg_msPa,h_v_J_kg\n");
    for t in -30..=40 {
        let theta = t as f64;
        let _ = writeln!(
            thermal,
            "{theta},{},{},{},{}",
            constitutive::saturation_pressure(theta).map_err(solver)?,
            constitutive::saturation_pressure_slope(theta).map_err(solver)?,
            constitutive::vapor_permeability(theta, params).map_err(solver)?,
            constitutive::latent_heat_vapor(theta).map_err(solver)?,
        );
    }
    for (name, text) in [("moisture_curves.csv", moisture), ("temperature_curves.csv", thermal)] {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| io_error(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{BoundaryEdge, BoundaryTag, Node};

    fn records(times: usize, probes: usize) -> Vec<ProbeRecord> {
        (0..times)
            .map(|k| ProbeRecord {
                time_h: k as f64 + 1.0,
                probes: (0..probes)
                    .map(|j| ProbeValue {
                        node: 10 * j,
                        theta: -1.0 / 3.0 + k as f64,
                        phi: 0.1 + 0.2 * j as f64,
                        p_p: 1.234567890123e6,
                        d_w: 1e-17,
                        u_mag: std::f64::consts::PI * 1e-6,
                    })
                    .collect(),
            })
            .collect()
    }

    #[test]
    fn empty_probe_file_has_only_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        write_probe_csv(&[], &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "time_h,node,theta_C,phi,p_p_Pa,d_w,u_mag_m\n");
        assert!(read_probe_csv(&path).unwrap().is_empty());
    }

    #[test]
    fn probe_rows_are_time_major() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        let recs = records(2, 2);
        write_probe_csv(&recs, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("1,0,") && lines[2].starts_with("1,10,"));
        assert!(lines[3].starts_with("2,0,") && lines[4].starts_with("2,10,"));
        assert_eq!(read_probe_csv(&path).unwrap(), recs);
    }

    #[test]
    fn unit_triangle_vtk_layout() {
        let mesh = Mesh::new(
            vec![Node { x: 0.0, y: 0.0 }, Node { x: 1.0, y: 0.0 }, Node { x: 0.0, y: 1.0 }],
            vec![[0, 1, 2]],
            vec![
                BoundaryEdge { element: 0, local_edge: 0, tag: BoundaryTag::Ext },
                BoundaryEdge { element: 0, local_edge: 1, tag: BoundaryTag::Int },
                BoundaryEdge { element: 0, local_edge: 2, tag: BoundaryTag::A },
            ],
        )
        .unwrap();
        let f = SnapshotFields {
            time_h: 1.0,
            theta: &[1.0, 2.0, 3.0],
            phi: &[0.5; 3],
            u: &[0.0, 0.0, 1e-6, 0.0, 0.0, -1e-6],
            p_p: &[0.0],
            d_w: &[0.25],
            kappa: &[1e-3],
        };
        let s = render_vtk(&mesh, &f).unwrap();
        assert!(s.starts_with("# vtk DataFile Version 3.0\n"));
        assert!(s.contains("POINTS 3 double\n") && s.contains("CELLS 1 4\n3 0 1 2\n") && s.contains("CELL_TYPES 1\n5\n"));
        assert!(s.contains("POINT_DATA 3\n") && s.contains("CELL_DATA 1\n"));
        let short = SnapshotFields { d_w: &[], ..f };
        assert!(render_vtk(&mesh, &short).is_err());
    }

    #[test]
    fn material_curves_are_written() {
        let dir = tempfile::tempdir().unwrap();
        let files = write_material_curves(&TransportParams::default(), dir.path()).unwrap();
        assert_eq!(files.len(), 2);
        let text = std::fs::read_to_string(&files[0]).unwrap();
        assert_eq!(text.lines().count(), 102);
    }
}
