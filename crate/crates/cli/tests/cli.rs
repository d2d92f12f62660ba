use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mgd_core::diagnostics::LEDGER_COLUMNS;
use mgd_core::mesh::{generate_rect_union, write_mesh_file, Axis, Rect, TagRule};

fn mgd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mgd")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("case.cfg");
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut rd = csv::Reader::from_path(path).unwrap();
    let header = rd.headers().unwrap().iter().map(String::from).collect();
    let rows = rd
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn summary_value(dir: &Path, key: &str) -> String {
    let (_, rows) = read_csv(&dir.join("summary.csv"));
    rows.into_iter().find(|r| r[0] == key).unwrap_or_else(|| panic!("no {key}"))[1].clone()
}

const TG16: &str = "[problem]\nkind = taylor_green\nm = 16\n";

#[test]
fn taylor_green_run_writes_ledger_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), TG16);
    let out = tmp.path().join("out");
    let o = mgd(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let (header, rows) = read_csv(&out.join("ledger.csv"));
    assert_eq!(header, LEDGER_COLUMNS);
    assert_eq!(rows.len(), 16);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r[0], (i + 1).to_string());
        // Level 1 is the exact interpolant, so it has no Step-1 solve.
        assert_eq!(r[8], if i == 0 { "" } else { "true" });
    }
    let t_last: f64 = rows[15][1].parse().unwrap();
    assert!((t_last - 1.0).abs() < 1e-12);

    assert_eq!(summary_value(&out, "problem"), "taylor_green");
    assert_eq!(summary_value(&out, "failed"), "false");
    let gamma: f64 = summary_value(&out, "gamma").parse().unwrap();
    assert_eq!(gamma, 1.0);
    let dt: f64 = summary_value(&out, "dt").parse().unwrap();
    assert_eq!(dt, 1.0 / 16.0);
    let e: f64 = summary_value(&out, "energy_residual_max").parse().unwrap();
    assert!(e <= 1e-9, "{e}");
    let u: f64 = summary_value(&out, "u_linf_l2").parse().unwrap();
    assert!(u > 0.0 && u < 1e-3, "{u}");
}

#[test]
fn output_is_deterministic_and_snapshots_follow_stride() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "kind = taylor_green\nm = 4\nt_final = 1\n[output]\nsnapshot_stride = 2\n");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for d in [&a, &b] {
        assert_eq!(code(&mgd(&["run", "--config", &cfg, "--out", d.to_str().unwrap()])), 0);
    }
    let mut names: Vec<String> = fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        ["fields_0000.vtk", "fields_0002.vtk", "fields_0004.vtk", "ledger.csv", "summary.csv"]
    );
    for n in &names {
        assert_eq!(fs::read(a.join(n)).unwrap(), fs::read(b.join(n)).unwrap(), "{n}");
    }
    let vtk = fs::read_to_string(a.join("fields_0004.vtk")).unwrap();
    assert!(vtk.starts_with("# vtk DataFile Version 2.0\n"));
    assert!(vtk.contains("POINTS 25 double"));
    assert!(vtk.contains("CELL_TYPES 32"));
}

#[test]
fn overrides_and_output_dir_from_config() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("from_cfg");
    let cfg = write_config(
        tmp.path(),
        &format!("kind = taylor_green\nm = 4\n[output]\ndir = {}\n", out.display()),
    );
    let o = mgd(&["run", "--config", &cfg, "--set", "scheme=plain", "--set", "t_final=0.5"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(summary_value(&out, "scheme"), "plain");
    assert_eq!(read_csv(&out.join("ledger.csv")).1.len(), 2);
}

#[test]
fn setup_errors_exit_1_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    for (text, needle) in [
        ("kind = taylor_green\nm = 16\ndt = -0.1\n", "problem.dt"),
        ("kind = taylor_green\nm = 16\nmesh = x.msh\n", "ambiguous"),
        ("kind = taylor_green\nm = 16\nspeed = 3\n", "unknown key"),
        ("kind = taylor_green\nm = 4\nt_final = 0.2\n", "setup"),
        ("kind = custom\nm = 4\nnu = 1\nt_final = 1\n[boundary]\nlid = 1, 0\n", "no such tag"),
        ("kind = taylor_green\nmesh = missing.msh\ndt = 0.1\n", "mesh"),
    ] {
        let cfg = write_config(tmp.path(), text);
        let out = tmp.path().join("never");
        let o = mgd(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
        let err = String::from_utf8_lossy(&o.stderr);
        assert_eq!(code(&o), 1, "{text}: {err}");
        assert!(err.contains(needle), "{text}: {err}");
        assert!(!out.exists(), "{text}");
    }
    assert_eq!(code(&mgd(&["frobnicate"])), 1);
    assert_eq!(code(&mgd(&["run", "--config", "/nonexistent/cfg"])), 1);
    assert_eq!(code(&mgd(&["--help"])), 0);
}

#[test]
fn solver_failure_exits_2_with_ledger() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "kind = taylor_green\nm = 4\n[solver]\ntol = 1e-14\nrestart = 2\nmax_iters = 2\npreconditioner = none\n",
    );
    let out = tmp.path().join("out");
    let o = mgd(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let (_, rows) = read_csv(&out.join("ledger.csv"));
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().skip(1).all(|r| r[8] == "false"));
    assert_eq!(summary_value(&out, "failed"), "true");
    assert_eq!(summary_value(&out, "first_failure"), "2");
}

#[test]
fn convergence_table_structure() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "kind = taylor_green\nt_final = 0.5\n[convergence]\nm_list = 4, 6, 8\n");
    let out = tmp.path().join("out");
    let o = mgd(&["convergence", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_csv(&out.join("rates.csv"));
    assert_eq!(header.len(), 2 + 2 * 4 + 1);
    assert_eq!(rows.len(), 3);
    for norm in ["u_linf_l2", "div_linf_l2", "div_l2_l2", "p_l2_l2"] {
        let k = header.iter().position(|h| *h == format!("{norm}_rate")).unwrap();
        let rates: Vec<&String> = rows.iter().map(|r| &r[k]).filter(|s| !s.is_empty()).collect();
        assert_eq!(rates.len(), 2, "{norm}");
    }
    let k = header.iter().position(|h| h == "u_linf_l2_rate").unwrap();
    let r: f64 = rows[2][k].parse().unwrap();
    assert!(r > 1.5, "{r}");

    let cfg = write_config(tmp.path(), "kind = step_channel\n");
    assert_eq!(code(&mgd(&["convergence", "--config", &cfg, "--out", out.to_str().unwrap()])), 1);
}

#[test]
fn modular_sweep_never_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "kind = taylor_green\nm = 8\nt_final = 0.5\n[sweep]\nschemes = modular\ngammas = 0, 2, 200, 20000\nbetas = 0, 8000\n",
    );
    let out = tmp.path().join("out");
    let o = mgd(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_csv(&out.join("sweep.csv"));
    assert_eq!(header[0], "scheme");
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r[0] == "modular" && r[3] == "false"));
}

#[test]
fn check_passes_on_default_parameters() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = mgd(&[
        "check",
        "--set",
        "kind=taylor_green",
        "--set",
        "m=8",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let (_, rows) = read_csv(&out.join("check.csv"));
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r[3] == "true"));
}

#[test]
fn custom_lid_driven_cavity_from_mesh_file() {
    let tmp = tempfile::tempdir().unwrap();
    let mesh = generate_rect_union(
        &[Rect::new(0.0, 1.0, 0.0, 1.0)],
        0.25,
        &[TagRule::new(Axis::Y, 1.0, "lid")],
        "wall",
    )
    .unwrap();
    let mesh_path = tmp.path().join("cavity.msh");
    write_mesh_file(&mesh, &mesh_path).unwrap();
    let cfg = write_config(
        tmp.path(),
        &format!(
            "kind = custom\nmesh = {}\nnu = 0.1\ndt = 0.05\nt_final = 0.2\n[boundary]\nlid = 1, 0\n",
            mesh_path.display()
        ),
    );
    let out = tmp.path().join("out");
    let o = mgd(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let norm: f64 = summary_value(&out, "norm_u_final").parse().unwrap();
    assert!(norm > 0.0 && norm < 1.0, "{norm}");
}
