//! Time-series CSV and legacy ASCII VTK field output.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{FsiError, Result};
use crate::fem::DofMap;
use crate::mesh::{Mesh, Subdomain};
use crate::stepper::State;

#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeriesRecord {
    pub t: f64,
    pub ux_a: f64,
    pub uy_a: f64,
    pub solid_volume: f64,
    pub stage_iterations: Vec<usize>,
    pub extension_iterations: usize,
}

pub fn csv_header(stages: usize) -> Vec<String> {
    let mut h: Vec<String> = ["t", "ux_A", "uy_A", "solid_volume"].iter().map(|s| s.to_string()).collect();
    h.extend((1..=stages).map(|s| format!("it_stage{s}")));
    h.push("it_ext".into());
    h
}

/// Writes one row per step and flushes it, so an aborted run leaves a valid
/// prefix behind.
pub struct SeriesWriter {
    inner: csv::Writer<File>,
}

fn csv_err(e: csv::Error) -> FsiError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => FsiError::Io(io),
        other => FsiError::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

impl SeriesWriter {
    pub fn create(path: &Path, stages: usize) -> Result<SeriesWriter> {
        let mut inner = csv::Writer::from_path(path).map_err(csv_err)?;
        inner.write_record(csv_header(stages)).map_err(csv_err)?;
        inner.flush()?;
        Ok(SeriesWriter { inner })
    }

    pub fn push(&mut self, r: &TimeSeriesRecord) -> Result<()> {
        let mut row = vec![r.t.to_string(), r.ux_a.to_string(), r.uy_a.to_string(), r.solid_volume.to_string()];
        row.extend(r.stage_iterations.iter().map(|i| i.to_string()));
        row.push(r.extension_iterations.to_string());
        self.inner.write_record(&row).map_err(csv_err)?;
        self.inner.flush()?;
        Ok(())
    }
}

pub fn read_series(path: &Path) -> Result<Vec<TimeSeriesRecord>> {
    let mut rd = csv::Reader::from_path(path).map_err(csv_err)?;
    let stages = rd.headers().map_err(csv_err)?.len().saturating_sub(5);
    let mut out = Vec::new();
    for (i, row) in rd.records().enumerate() {
        let row = row.map_err(csv_err)?;
        let bad = |_: std::num::ParseFloatError| FsiError::Parse { line: i + 2, msg: "malformed time-series row".into() };
        let f = |k: usize| row[k].parse::<f64>().map_err(bad);
        let n = |k: usize| row[k].parse::<usize>().map_err(|_| FsiError::Parse { line: i + 2, msg: "malformed iteration count".into() });
        out.push(TimeSeriesRecord {
            t: f(0)?,
            ux_a: f(1)?,
            uy_a: f(2)?,
            solid_volume: f(3)?,
            stage_iterations: (0..stages).map(|s| n(4 + s)).collect::<Result<_>>()?,
            extension_iterations: n(4 + stages)?,
        });
    }
    Ok(out)
}

/// Vertex data of a VTK file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VtkFields {
    pub points: Vec<[f64; 2]>,
    pub cells: Vec<[usize; 4]>,
    pub velocity: Vec<[f64; 2]>,
    pub pressure: Vec<f64>,
    pub displacement: Vec<[f64; 2]>,
    pub subdomain: Vec<i32>,
}

/// Vertex values of the state on the deformed mesh. The pressure is the
/// physical one, the negative of the solver's multiplier.
pub fn vertex_fields(mesh: &Mesh, dofs: &DofMap, state: &State) -> VtkFields {
    let n2 = dofs.n_q2;
    let nv = mesh.num_vertices();
    let pair = |f: &[f64], k: usize| [f[k], f[n2 + k]];
    let displacement: Vec<[f64; 2]> = (0..nv).map(|k| pair(&state.u, k)).collect();
    VtkFields {
        points: (0..nv).map(|k| [mesh.vertices[k][0] + displacement[k][0], mesh.vertices[k][1] + displacement[k][1]]).collect(),
        cells: mesh.cells.clone(),
        velocity: (0..nv).map(|k| pair(&state.v, k)).collect(),
        pressure: state.p.iter().map(|p| -p).collect(),
        displacement,
        subdomain: mesh.subdomain.iter().map(|s| (*s == Subdomain::Solid) as i32).collect(),
    }
}

pub fn write_fields(mesh: &Mesh, dofs: &DofMap, state: &State, path: &Path) -> Result<()> {
    write_vtk(&vertex_fields(mesh, dofs, state), &format!("step {} t {}", state.step, state.t), path)
}

pub fn write_vtk(f: &VtkFields, title: &str, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let n = f.points.len();
    let nc = f.cells.len();
    writeln!(w, "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {n} double")?;
    for p in &f.points {
        writeln!(w, "{:e} {:e} 0", p[0], p[1])?;
    }
    writeln!(w, "CELLS {nc} {}", 5 * nc)?;
    for c in &f.cells {
        writeln!(w, "4 {} {} {} {}", c[0], c[1], c[2], c[3])?;
    }
    writeln!(w, "CELL_TYPES {nc}")?;
    for _ in 0..nc {
        writeln!(w, "9")?;
    }
    writeln!(w, "POINT_DATA {n}")?;
    writeln!(w, "VECTORS velocity double")?;
    for v in &f.velocity {
        writeln!(w, "{:e} {:e} 0", v[0], v[1])?;
    }
    writeln!(w, "SCALARS pressure double 1\nLOOKUP_TABLE default")?;
    for p in &f.pressure {
        writeln!(w, "{p:e}")?;
    }
    writeln!(w, "VECTORS displacement double")?;
    for v in &f.displacement {
        writeln!(w, "{:e} {:e} 0", v[0], v[1])?;
    }
    writeln!(w, "CELL_DATA {nc}\nSCALARS subdomain int 1\nLOOKUP_TABLE default")?;
    for s in &f.subdomain {
        writeln!(w, "{s}")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads files produced by [`write_vtk`].
pub fn read_vtk(path: &Path) -> Result<VtkFields> {
    let text: Vec<String> = BufReader::new(File::open(path)?).lines().collect::<std::io::Result<_>>()?;
    let bad = |line: usize, m: &str| FsiError::Parse { line: line + 1, msg: m.to_string() };
    let mut out = VtkFields::default();
    let mut i = 0;
    let nums = |line: usize| -> Result<Vec<f64>> {
        text[line].split_whitespace().map(|t| t.parse::<f64>().map_err(|_| bad(line, "expected numbers"))).collect()
    };
    let count = |line: usize| -> Result<usize> {
        text[line].split_whitespace().nth(1).and_then(|t| t.parse().ok()).ok_or_else(|| bad(line, "expected a count"))
    };
    let mut section = "";
    while i < text.len() {
        let head = text[i].split_whitespace().next().unwrap_or("");
        match head {
            "POINTS" => {
                let n = count(i)?;
                for k in 0..n {
                    let v = nums(i + 1 + k)?;
                    out.points.push([v[0], v[1]]);
                }
                i += n;
            }
            "CELLS" => {
                let n = count(i)?;
                for k in 0..n {
                    let v = nums(i + 1 + k)?;
                    out.cells.push([v[1] as usize, v[2] as usize, v[3] as usize, v[4] as usize]);
                }
                i += n;
            }
            "POINT_DATA" | "CELL_DATA" => section = head,
            "VECTORS" => {
                let name = text[i].split_whitespace().nth(1).unwrap_or("");
                let mut data = Vec::with_capacity(out.points.len());
                for k in 0..out.points.len() {
                    let v = nums(i + 1 + k)?;
                    data.push([v[0], v[1]]);
                }
                i += out.points.len();
                match name {
                    "velocity" => out.velocity = data,
                    "displacement" => out.displacement = data,
                    _ => return Err(bad(i, "unknown vector array")),
                }
            }
            "SCALARS" => {
                let name = text[i].split_whitespace().nth(1).unwrap_or("").to_string();
                let n = if section == "CELL_DATA" { out.cells.len() } else { out.points.len() };
                let vals: Vec<f64> = (0..n).map(|k| nums(i + 2 + k).map(|v| v[0])).collect::<Result<_>>()?;
                i += n + 1;
                match name.as_str() {
                    "pressure" => out.pressure = vals,
                    "subdomain" => out.subdomain = vals.iter().map(|&v| v as i32).collect(),
                    _ => return Err(bad(i, "unknown scalar array")),
                }
            }
            _ => {}
        }
        i += 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_turek_coarse, GeometryParams};

    #[test]
    fn vtk_round_trip_and_deformed_points() {
        let mesh = build_turek_coarse(&GeometryParams::turek()).unwrap();
        let d = DofMap::new(&mesh);
        let mut s = State::zero(d.n_velocity(), d.n_q1);
        s.v = d.interpolate_vector(|x| [x[0].sin() / 3.0, x[1].exp() * 1e-7]);
        s.u = d.interpolate_vector(|x| [1e-3 * x[1], -2e-3 * x[0] * x[0]]);
        s.p = d.interpolate_q1(&mesh, |x| x[0] * 1234.5678 - x[1]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.vtk");
        write_fields(&mesh, &d, &s, &path).unwrap();
        let r = read_vtk(&path).unwrap();
        assert_eq!(r.cells, mesh.cells);
        assert_eq!(r.subdomain.iter().filter(|&&s| s == 1).count(), mesh.subdomain.iter().filter(|&&s| s == Subdomain::Solid).count());
        for k in 0..mesh.num_vertices() {
            assert_eq!(r.velocity[k], [s.v[k], s.v[d.n_q2 + k]]);
            assert_eq!(r.displacement[k], [s.u[k], s.u[d.n_q2 + k]]);
            assert_eq!(r.pressure[k], -s.p[k]);
            assert_eq!(r.points[k], [mesh.vertices[k][0] + s.u[k], mesh.vertices[k][1] + s.u[d.n_q2 + k]]);
        }
    }

    #[test]
    fn zero_state_gives_zero_arrays() {
        let mesh = Mesh::unit_square(2).unwrap();
        let d = DofMap::new(&mesh);
        let s = State::zero(d.n_velocity(), d.n_q1);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("z.vtk");
        write_fields(&mesh, &d, &s, &path).unwrap();
        let r = read_vtk(&path).unwrap();
        assert!(r.velocity.iter().chain(&r.displacement).all(|v| *v == [0.0, 0.0]));
        assert!(r.pressure.iter().all(|&p| p == 0.0));
        assert_eq!(r.points, mesh.vertices);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# vtk DataFile Version 3.0\n"));
    }

    #[test]
    fn series_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let mut w = SeriesWriter::create(&path, 2).unwrap();
        let recs: Vec<TimeSeriesRecord> = (1..4)
            .map(|i| TimeSeriesRecord {
                t: i as f64 * 0.01,
                ux_a: -1e-5 * i as f64,
                uy_a: 0.1 / 3.0,
                solid_volume: 0.0070000000001,
                stage_iterations: vec![i, 2 * i],
                extension_iterations: 7,
            })
            .collect();
        for r in &recs {
            w.push(r).unwrap();
        }
        drop(w);
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), "t,ux_A,uy_A,solid_volume,it_stage1,it_stage2,it_ext");
        assert_eq!(read_series(&path).unwrap(), recs);
    }
}
