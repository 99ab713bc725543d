mod common;

use std::fs;

use common::{config, norm, run};
use fsi_gcsi::bench::{read_series, read_vtk};
use fsi_gcsi::mesh::{build_turek_coarse, GeometryParams, MeshHierarchy};

#[test]
fn fsi2i_smoke_run() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(dir.path(), "benchmark = fsi2i\nmesh.refinements = 2\ntime.tau = 0.01\ntime.end = 0.1");
    let s = run(&c);
    let text = fs::read_to_string(&s.csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,ux_A,uy_A,solid_volume,it_stage1,it_stage2,it_ext");
    assert_eq!(lines.count(), 10);
    let rows = read_series(&s.csv).unwrap();
    assert_eq!(rows, s.records);
    for (n, r) in rows.iter().enumerate() {
        assert!((r.t - (n + 1) as f64 * 0.01).abs() <= 1e-15);
        assert!(r.ux_a.is_finite() && r.uy_a.is_finite() && r.solid_volume > 0.0);
        assert!(r.stage_iterations[0] <= 20 && r.stage_iterations[1] <= 30, "{r:?}");
        assert!(r.extension_iterations > 0);
        assert!((r.solid_volume / s.reference_volume - 1.0).abs() < 1e-2);
    }
    // the impulsive start pushes the tip downstream first
    assert!(rows[0].ux_a > 0.0);
}

#[test]
fn zero_inflow_stays_at_rest() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(dir.path(), "benchmark = fsi2i\nmesh.refinements = 1\ntime.tau = 0.01\ntime.end = 0.05\ninflow.mean = 0");
    let s = run(&c);
    assert_eq!(s.records.len(), 5);
    for r in &s.records {
        assert!(r.ux_a.abs() <= 1e-10 && r.uy_a.abs() <= 1e-10, "{r:?}");
        assert_eq!(r.solid_volume, s.reference_volume);
    }
}

#[test]
fn restart_continues_bitwise() {
    let body = "benchmark = fsi3i\nmesh.refinements = 1\ntime.tau = 0.01\noutput.checkpoint_every = 3";
    let full = tempfile::tempdir().unwrap();
    let reference = run(&config(full.path(), &format!("{body}\ntime.end = 0.06")));

    let part = tempfile::tempdir().unwrap();
    run(&config(part.path(), &format!("{body}\ntime.end = 0.03")));
    let cont = tempfile::tempdir().unwrap();
    let ckpt = part.path().join("checkpoint.bin");
    let resumed = run(&config(cont.path(), &format!("{body}\ntime.end = 0.06\nrestart.from = {}", ckpt.display())));

    assert_eq!(resumed.records.len(), 3);
    assert_eq!(&reference.records[3..], &resumed.records[..]);
    let full_csv = fs::read_to_string(&reference.csv).unwrap();
    let resumed_csv = fs::read_to_string(&resumed.csv).unwrap();
    assert_eq!(full_csv.lines().skip(4).collect::<Vec<_>>(), resumed_csv.lines().skip(1).collect::<Vec<_>>());
}

#[test]
fn restart_rejects_foreign_checkpoint() {
    let a = tempfile::tempdir().unwrap();
    run(&config(a.path(), "benchmark = fsi2i\nmesh.refinements = 1\ntime.tau = 0.01\ntime.end = 0.01\noutput.checkpoint_every = 1"));
    let b = tempfile::tempdir().unwrap();
    let c = config(
        b.path(),
        &format!("benchmark = fsi2i\nmesh.refinements = 1\ntime.tau = 0.02\ntime.end = 0.04\nrestart.from = {}", a.path().join("checkpoint.bin").display()),
    );
    let e = fsi_gcsi::bench::run_benchmark(&c, &mut Vec::new()).unwrap_err();
    assert_eq!(e.exit_code(), 1, "{e}");
}

#[test]
fn identical_runs_write_identical_csv() {
    let body = "benchmark = fsi2i\nmesh.refinements = 1\ntime.tau = 0.01\ntime.end = 0.04";
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let sa = run(&config(a.path(), body));
    let sb = run(&config(b.path(), body));
    assert_eq!(fs::read(&sa.csv).unwrap(), fs::read(&sb.csv).unwrap());
}

#[test]
fn snapshots_hold_deformed_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let s = run(&config(dir.path(), "benchmark = fsi3i\nmesh.refinements = 1\ntime.tau = 0.01\ntime.end = 0.04\noutput.vtk_every = 2"));
    let names: Vec<String> = {
        let mut v: Vec<String> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).filter(|n| n.ends_with(".vtk")).collect();
        v.sort();
        v
    };
    assert_eq!(names, ["fields_000000.vtk", "fields_000002.vtk", "fields_000004.vtk"]);
    let mesh = MeshHierarchy::new(build_turek_coarse(&GeometryParams::turek()).unwrap(), 1).unwrap().finest().clone();

    let f0 = read_vtk(&dir.path().join("fields_000000.vtk")).unwrap();
    assert_eq!(f0.points.len(), mesh.num_vertices());
    assert_eq!(f0.cells.len(), mesh.num_cells());
    assert!(f0.velocity.iter().chain(&f0.displacement).all(|v| v[0] == 0.0 && v[1] == 0.0));
    assert!(f0.pressure.iter().all(|&p| p == 0.0));

    let f4 = read_vtk(&dir.path().join("fields_000004.vtk")).unwrap();
    for (k, p) in f4.points.iter().enumerate() {
        let want = [mesh.vertices[k][0] + f4.displacement[k][0], mesh.vertices[k][1] + f4.displacement[k][1]];
        assert!((p[0] - want[0]).abs() <= 1e-15 && (p[1] - want[1]).abs() <= 1e-15);
    }
    let disp: Vec<f64> = f4.displacement.iter().flat_map(|d| [d[0], d[1]]).collect();
    assert!(norm(&disp) > 0.0);
    assert!(s.records.len() == 4);

    // legacy layout checked line by line
    let text = fs::read_to_string(dir.path().join("fields_000004.vtk")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# vtk DataFile Version"));
    assert_eq!(lines[2], "ASCII");
    assert_eq!(lines[3], "DATASET UNSTRUCTURED_GRID");
    assert_eq!(lines[4], format!("POINTS {} double", mesh.num_vertices()));
    for key in ["VECTORS velocity double", "SCALARS pressure double 1", "VECTORS displacement double", "SCALARS subdomain int 1"] {
        assert!(lines.contains(&key), "{key}");
    }
    let types = lines.iter().position(|l| l.starts_with("CELL_TYPES")).unwrap();
    assert!(lines[types + 1..types + 1 + mesh.num_cells()].iter().all(|l| *l == "9"));
}

#[test]
fn manufactured_preset_reports_orders() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(dir.path(), "benchmark = stokes_manufactured\nmesh.refinements = 3");
    let mut log = Vec::new();
    let s = fsi_gcsi::bench::run_benchmark(&c, &mut log).unwrap();
    let text = String::from_utf8(log).unwrap();
    assert_eq!(s.manufactured.len(), 3);
    assert_eq!(text.matches("order ").count(), 2, "{text}");
    assert_eq!(fs::read_to_string(&s.csv).unwrap().lines().count(), 4);
}
