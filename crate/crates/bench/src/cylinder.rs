//! Flow past a cylinder in the channel `[0,2.2]×[0,0.41]`, cylinder of
//! diameter 0.1 centred at `(0.2, 0.2)`, `ν = 10⁻³`, `f = 0`, inflow and
//! outflow `u = (6y(0.41 − y)/0.41² · sin(πt/8), 0)`, no-slip elsewhere.
//!
//! The built-in mesh is block-structured: a graded O-grid around the
//! cylinder inside `[0,0.41]²`, followed by a stretched tensor grid down to
//! the outlet.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::PathBuf;

use mgd_core::diagnostics::{aggregate_norms, drag_lift, pressure_drop, ForceCoefficients, ForceScaling, Quantity};
use mgd_core::mesh::{read_mesh_file, BoundaryEdge, Mesh, Point};
use mgd_core::stepper::{run_with, ProblemSetup, RunOutput, Scheme, SolverSettings, StabilizationParams};
use mgd_core::Discretization;

use crate::BenchError;

pub const LENGTH: f64 = 2.2;
pub const HEIGHT: f64 = 0.41;
pub const CENTRE: Point = [0.2, 0.2];
pub const RADIUS: f64 = 0.05;
pub const DIAMETER: f64 = 0.1;
pub const FRONT: Point = [0.15, 0.2];
pub const BACK: Point = [0.25, 0.2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylinderMeshOptions {
    /// Segments per side of the block around the cylinder.
    pub n_side: usize,
    pub n_radial: usize,
    /// Ratio of consecutive radial layer widths.
    pub radial_growth: f64,
    /// Cells between the block and the outlet.
    pub n_downstream: usize,
}

impl Default for CylinderMeshOptions {
    fn default() -> Self {
        Self {
            n_side: 32,
            n_radial: 16,
            radial_growth: 1.12,
            n_downstream: 90,
        }
    }
}

/// Ratio `q` with `h0 (qⁿ − 1)/(q − 1) = total`.
fn geometric_ratio(h0: f64, n: usize, total: f64) -> f64 {
    let sum = |q: f64| {
        if (q - 1.0).abs() < 1e-12 {
            h0 * n as f64
        } else {
            h0 * (q.powi(n as i32) - 1.0) / (q - 1.0)
        }
    };
    let (mut lo, mut hi) = (0.5, 2.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sum(mid) < total {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}

/// Splits quad `q` (any orientation) into two counterclockwise triangles.
fn push_quad(tris: &mut Vec<[usize; 3]>, v: &[Point], q: [usize; 4]) {
    let d1 = (v[q[0]][0] - v[q[2]][0]).hypot(v[q[0]][1] - v[q[2]][1]);
    let d2 = (v[q[1]][0] - v[q[3]][0]).hypot(v[q[1]][1] - v[q[3]][1]);
    let pair = if d1 <= d2 {
        [[q[0], q[1], q[2]], [q[0], q[2], q[3]]]
    } else {
        [[q[0], q[1], q[3]], [q[1], q[2], q[3]]]
    };
    for mut t in pair {
        if signed_area(v[t[0]], v[t[1]], v[t[2]]) < 0.0 {
            t.swap(1, 2);
        }
        tris.push(t);
    }
}

/// Tags: 1 `"inlet"`, 2 `"outlet"`, 3 `"wall"`, 4 `"cylinder"`.
pub fn cylinder_mesh(opts: &CylinderMeshOptions) -> Result<Mesh, BenchError> {
    let n = opts.n_side;
    let nr = opts.n_radial;
    if n < 2 || nr < 1 || opts.n_downstream < 1 || !(opts.radial_growth > 0.0) {
        return Err(BenchError::InvalidInput(format!("bad cylinder mesh options {opts:?}")));
    }
    let side = HEIGHT;
    let ring = 4 * n;
    // Block boundary, counterclockwise from (0, 0).
    let outer: Vec<Point> = (0..ring)
        .map(|j| {
            let (s, k) = (j / n, (j % n) as f64 * side / n as f64);
            match s {
                0 => [k, 0.0],
                1 => [side, k],
                2 => [side - k, side],
                _ => [0.0, side - k],
            }
        })
        .collect();
    let q = opts.radial_growth;
    let s_of = |k: usize| {
        if (q - 1.0).abs() < 1e-12 {
            k as f64 / nr as f64
        } else {
            (q.powi(k as i32) - 1.0) / (q.powi(nr as i32) - 1.0)
        }
    };
    let mut v: Vec<Point> = Vec::new();
    let id = |j: usize, k: usize| k * ring + (j % ring);
    for k in 0..=nr {
        let s = s_of(k);
        for p in &outer {
            let d = [p[0] - CENTRE[0], p[1] - CENTRE[1]];
            let len = d[0].hypot(d[1]);
            let c = [CENTRE[0] + RADIUS * d[0] / len, CENTRE[1] + RADIUS * d[1] / len];
            v.push([c[0] + s * (p[0] - c[0]), c[1] + s * (p[1] - c[1])]);
        }
    }
    let mut tris = Vec::new();
    for k in 0..nr {
        for j in 0..ring {
            push_quad(&mut tris, &v, [id(j, k), id(j + 1, k), id(j + 1, k + 1), id(j, k + 1)]);
        }
    }

    // Downstream grid: column 0 is the block's right side.
    let h0 = side / n as f64;
    let ratio = geometric_ratio(h0, opts.n_downstream, LENGTH - side);
    let mut xs = vec![side];
    let mut h = h0;
    for _ in 0..opts.n_downstream {
        xs.push(xs.last().unwrap() + h);
        h *= ratio;
    }
    *xs.last_mut().unwrap() = LENGTH;
    let mut col: Vec<Vec<usize>> = vec![(0..=n).map(|i| id(n + i, nr)).collect()];
    for &x in &xs[1..] {
        col.push(
            (0..=n)
                .map(|i| {
                    v.push([x, i as f64 * side / n as f64]);
                    v.len() - 1
                })
                .collect(),
        );
    }
    for c in 0..opts.n_downstream {
        for i in 0..n {
            push_quad(&mut tris, &v, [col[c][i], col[c + 1][i], col[c + 1][i + 1], col[c][i + 1]]);
        }
    }

    let mut edges = Vec::new();
    let mut tag = |a: usize, b: usize, t: u32| edges.push(BoundaryEdge { vertices: [a, b], tag: t });
    for j in 0..ring {
        tag(id(j, 0), id(j + 1, 0), 4);
        let side_of = j / n;
        match side_of {
            0 | 2 => tag(id(j, nr), id(j + 1, nr), 3),
            3 => tag(id(j, nr), id(j + 1, nr), 1),
            _ => {}
        }
    }
    for c in 0..opts.n_downstream {
        tag(col[c][0], col[c + 1][0], 3);
        tag(col[c][n], col[c + 1][n], 3);
    }
    let last = &col[opts.n_downstream];
    for i in 0..n {
        tag(last[i], last[i + 1], 2);
    }
    let tags: BTreeMap<u32, String> = [(1, "inlet"), (2, "outlet"), (3, "wall"), (4, "cylinder")]
        .into_iter()
        .map(|(k, s)| (k, s.to_string()))
        .collect();
    Ok(Mesh::new(v, tris, edges, tags)?)
}

pub fn inflow(y: f64, t: f64) -> f64 {
    6.0 * y * (HEIGHT - y) / (HEIGHT * HEIGHT) * (PI * t / 8.0).sin()
}

#[derive(Debug, Clone)]
pub struct CylinderOptions {
    /// External mesh; the built-in mesh is used when `None`.
    pub mesh_path: Option<PathBuf>,
    pub mesh: CylinderMeshOptions,
    pub nu: f64,
    pub dt: f64,
    pub t_final: f64,
    pub settings: SolverSettings,
}

impl Default for CylinderOptions {
    fn default() -> Self {
        Self {
            mesh_path: None,
            mesh: CylinderMeshOptions::default(),
            nu: 1e-3,
            dt: 1e-3,
            t_final: 8.0,
            settings: SolverSettings::default(),
        }
    }
}

impl CylinderOptions {
    pub fn build_mesh(&self) -> Result<Mesh, BenchError> {
        match &self.mesh_path {
            Some(p) => Ok(read_mesh_file(p)?),
            None => cylinder_mesh(&self.mesh),
        }
    }
}

pub fn cylinder_setup(opts: &CylinderOptions, scheme: Scheme, params: StabilizationParams) -> ProblemSetup {
    let profile = |x: Point, t: f64| [inflow(x[1], t), 0.0];
    ProblemSetup::new(opts.nu, opts.dt, opts.t_final, scheme, params)
        .with_dirichlet("inlet", profile)
        .with_dirichlet("outlet", profile)
        .with_dirichlet_default(|_, _| [0.0, 0.0])
        .with_initial(|_| [0.0, 0.0])
}

#[derive(Debug, Clone)]
pub struct CylinderResult {
    pub run: RunOutput,
    pub forces: ForceCoefficients,
    /// `|‖∇·u_h‖|_{2,0}`.
    pub div_l2: f64,
    /// `‖∇·u_h^N‖`.
    pub div_final: f64,
}

/// Full run recording `c_d`, `c_l` and `Δp` after every step.
pub fn cylinder_run(
    disc: &Discretization,
    opts: &CylinderOptions,
    scheme: Scheme,
    params: StabilizationParams,
) -> Result<CylinderResult, BenchError> {
    let setup = cylinder_setup(opts, scheme, params);
    let mut forces = ForceCoefficients::default();
    let mut err = None;
    let scaling = ForceScaling {
        rho: 1.0,
        u_ref: 1.0,
        diameter: DIAMETER,
    };
    let run = run_with(disc, &setup, opts.settings, |s| {
        if s.state().n == 0 || err.is_some() {
            return;
        }
        let r = drag_lift(s, "cylinder", scaling)
            .and_then(|(cd, cl)| Ok((cd, cl, pressure_drop(s.disc(), &s.state().p_curr, FRONT, BACK)?)));
        match r {
            Ok((cd, cl, dp)) => forces.push(s.state().t, cd, cl, dp),
            Err(e) => err = Some(e),
        }
    })?;
    if let Some(e) = err {
        return Err(e.into());
    }
    let div_l2 = aggregate_norms(&run.ledger, Quantity::DivU)?.l2;
    let div_final = run.ledger.steps.last().map_or(0.0, |r| r.div_u);
    Ok(CylinderResult {
        run,
        forces,
        div_l2,
        div_final,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_mesh_is_large_enough() {
        let mesh = cylinder_mesh(&CylinderMeshOptions::default()).unwrap();
        let area = LENGTH * HEIGHT - PI * RADIUS * RADIUS;
        let m = mesh.metrics();
        // The polygonal cylinder is slightly smaller than the circle.
        assert!((m.area_total - area).abs() < 1e-4, "{} vs {area}", m.area_total);
        let d = Discretization::new(mesh);
        assert!(d.n_velocity() + d.n_pressure() >= 40_000);
    }

    #[test]
    fn coarse_mesh_tags_and_geometry() {
        let o = CylinderMeshOptions {
            n_side: 8,
            n_radial: 4,
            radial_growth: 1.2,
            n_downstream: 12,
        };
        let mesh = cylinder_mesh(&o).unwrap();
        assert_eq!(mesh.euler_characteristic(), 0);
        let cyl = mesh.tag_id("cylinder").unwrap();
        for e in mesh.boundary_edges().iter().filter(|e| e.tag == cyl) {
            for &v in &e.vertices {
                let p = mesh.vertices()[v];
                assert!(((p[0] - CENTRE[0]).hypot(p[1] - CENTRE[1]) - RADIUS).abs() < 1e-14);
            }
        }
        let inlet = mesh.tag_id("inlet").unwrap();
        let outlet = mesh.tag_id("outlet").unwrap();
        for e in mesh.boundary_edges() {
            let [a, b] = e.vertices.map(|v| mesh.vertices()[v]);
            if e.tag == inlet {
                assert!(a[0] == 0.0 && b[0] == 0.0);
            }
            if e.tag == outlet {
                assert!(a[0] == LENGTH && b[0] == LENGTH);
            }
        }
        assert!(mesh.locate(FRONT).is_some() && mesh.locate(BACK).is_some());
        assert!(mesh.locate(CENTRE).is_none());
    }

    #[test]
    fn inflow_profile_at_peak() {
        let v = inflow(0.205, 4.0);
        assert!((v - 1.5).abs() < 1e-12, "{v}");
        assert_eq!(inflow(0.0, 4.0), 0.0);
        assert!(inflow(0.2, 0.0).abs() < 1e-15);
    }

    #[test]
    fn short_run_produces_force_series() {
        let opts = CylinderOptions {
            mesh: CylinderMeshOptions {
                n_side: 8,
                n_radial: 4,
                radial_growth: 1.2,
                n_downstream: 12,
            },
            dt: 0.01,
            t_final: 0.03,
            ..Default::default()
        };
        let disc = Discretization::new(opts.build_mesh().unwrap());
        let r = cylinder_run(&disc, &opts, Scheme::Modular, StabilizationParams::new(5e-3, 0.0).unwrap()).unwrap();
        assert_eq!(r.forces.t.len(), 3);
        assert!(r.forces.drag.iter().all(|v| v.is_finite()));
        assert!(r.forces.drag_max() > 0.0);
    }
}
