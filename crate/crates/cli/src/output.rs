//! CSV tables and legacy VTK snapshots.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use mgd_core::diagnostics::{fmt_f64, RunLedger, LEDGER_COLUMNS};
use mgd_core::fem::cell_divergence;
use mgd_core::{DofMap, Mesh};

/// Header plus rows of already formatted fields.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Two-column `quantity,value` table.
#[derive(Debug, Clone, Default)]
pub struct Summary {
    rows: Vec<(String, String)>,
}

impl Summary {
    pub fn text(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.rows.push((key.into(), value.to_string()));
        self
    }

    pub fn num(&mut self, key: &str, value: f64) -> &mut Self {
        self.text(key, fmt_f64(value))
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(["quantity", "value"]);
        for (k, v) in &self.rows {
            t.push(vec![k.clone(), v.clone()]);
        }
        t
    }
}

pub fn write_csv_to(table: &Table, w: impl Write) -> Result<(), csv::Error> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(&table.header)?;
    for r in &table.rows {
        wr.write_record(r)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_csv(table: &Table, path: &Path) -> Result<(), csv::Error> {
    write_csv_to(table, BufWriter::new(File::create(path)?))
}

/// One row per step `n = 1..N`.
pub fn ledger_table(ledger: &RunLedger) -> Table {
    let mut t = Table::new(LEDGER_COLUMNS);
    for r in &ledger.steps {
        t.push(r.ledger_fields());
    }
    t
}

/// Nodal fields of one time level.
#[derive(Debug, Clone, Copy)]
pub struct VtkFields<'a> {
    pub title: &'a str,
    /// P2 velocity, component-major.
    pub velocity: &'a [f64],
    /// P1 pressure.
    pub pressure: &'a [f64],
}

/// Legacy VTK 2.0 ASCII unstructured grid: vertex velocity, vertex pressure
/// and `∇·u_h` at cell centroids.
pub fn write_vtk_to(mesh: &Mesh, dofmap: &DofMap, fields: &VtkFields, mut w: impl Write) -> io::Result<()> {
    let nv = mesh.n_vertices();
    let ns = dofmap.n_scalar();
    let nt = mesh.n_triangles();
    if fields.velocity.len() != 2 * ns || fields.pressure.len() != nv {
        return Err(io::Error::new(
            io::ErrorKind::InvalidInput,
            format!(
                "field sizes {} and {} do not match {} velocity and {nv} pressure dofs",
                fields.velocity.len(),
                fields.pressure.len(),
                2 * ns
            ),
        ));
    }
    let title = fields.title.replace('\n', " ");
    writeln!(w, "# vtk DataFile Version 2.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {nv} double")?;
    for p in mesh.vertices() {
        writeln!(w, "{} {} 0", fmt_f64(p[0]), fmt_f64(p[1]))?;
    }
    writeln!(w, "CELLS {nt} {}", 4 * nt)?;
    for t in mesh.triangles() {
        writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(w, "CELL_TYPES {nt}")?;
    for _ in 0..nt {
        writeln!(w, "5")?;
    }
    writeln!(w, "POINT_DATA {nv}\nVECTORS velocity double")?;
    for i in 0..nv {
        writeln!(w, "{} {} 0", fmt_f64(fields.velocity[i]), fmt_f64(fields.velocity[ns + i]))?;
    }
    writeln!(w, "SCALARS pressure double 1\nLOOKUP_TABLE default")?;
    for p in fields.pressure {
        writeln!(w, "{}", fmt_f64(*p))?;
    }
    writeln!(w, "CELL_DATA {nt}\nSCALARS divergence double 1\nLOOKUP_TABLE default")?;
    for d in cell_divergence(mesh, dofmap, fields.velocity) {
        writeln!(w, "{}", fmt_f64(d))?;
    }
    w.flush()
}

pub fn write_vtk(mesh: &Mesh, dofmap: &DofMap, fields: &VtkFields, path: &Path) -> io::Result<()> {
    write_vtk_to(mesh, dofmap, fields, BufWriter::new(File::create(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    use mgd_core::mesh::{generate_unit_square, BoundaryEdge};
    use mgd_core::Discretization;

    fn triangle() -> Mesh {
        let edges = [[0, 1], [1, 2], [2, 0]].map(|vertices| BoundaryEdge { vertices, tag: 1 });
        Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            edges.to_vec(),
            BTreeMap::from([(1, "wall".to_string())]),
        )
        .unwrap()
    }

    #[test]
    fn one_triangle_vtk() {
        let disc = Discretization::new(triangle());
        let u = disc.interpolate_velocity(|x| [x[0], -x[1]]).into_values();
        let p = vec![1.0, 2.0, 3.0];
        let mut buf = Vec::new();
        let f = VtkFields {
            title: "t",
            velocity: &u,
            pressure: &p,
        };
        write_vtk_to(disc.mesh(), disc.dofmap(), &f, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# vtk DataFile Version 2.0");
        assert_eq!(lines[2], "ASCII");
        assert!(lines.contains(&"POINTS 3 double"));
        assert!(lines.contains(&"CELLS 1 4"));
        assert!(lines.contains(&"3 0 1 2"));
        let k = lines.iter().position(|l| *l == "CELL_TYPES 1").unwrap();
        assert_eq!(lines[k + 1], "5");
        let k = lines.iter().position(|l| l.starts_with("SCALARS divergence")).unwrap();
        let div: f64 = lines[k + 2].parse().unwrap();
        assert!(div.abs() < 1e-14);
        let k = lines.iter().position(|l| l.starts_with("VECTORS")).unwrap();
        assert_eq!(lines[k + 2], format!("{} {} 0", fmt_f64(1.0), fmt_f64(-0.0)));
    }

    #[test]
    fn vtk_rejects_wrong_sizes() {
        let disc = Discretization::new(generate_unit_square(2));
        let u = vec![0.0; disc.n_velocity()];
        let f = VtkFields {
            title: "x",
            velocity: &u,
            pressure: &[0.0; 3],
        };
        assert!(write_vtk_to(disc.mesh(), disc.dofmap(), &f, Vec::new()).is_err());
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let values = [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE, 1e-14 + 1.0];
        let mut t = Table::new(["name", "value"]);
        for (i, v) in values.iter().enumerate() {
            t.push(vec![format!("v,{i} \"q\""), fmt_f64(*v)]);
        }
        let mut buf = Vec::new();
        write_csv_to(&t, &mut buf).unwrap();
        let mut rd = csv::Reader::from_reader(buf.as_slice());
        assert_eq!(rd.headers().unwrap(), vec!["name", "value"]);
        for (i, rec) in rd.records().enumerate() {
            let rec = rec.unwrap();
            assert_eq!(&rec[0], format!("v,{i} \"q\""));
            assert_eq!(rec[1].parse::<f64>().unwrap().to_bits(), values[i].to_bits());
        }
    }

    #[test]
    fn ledger_schema() {
        let setup = mgd_core::stepper::ProblemSetup::new(
            1.0,
            0.1,
            1.0,
            mgd_core::stepper::Scheme::Plain,
            mgd_core::stepper::StabilizationParams::none(),
        );
        let t = ledger_table(&RunLedger::new(&setup));
        let cols: Vec<&str> = t.header.iter().map(String::as_str).collect();
        assert_eq!(
            cols,
            [
                "n",
                "t",
                "norm_u",
                "div_u",
                "div_uhat",
                "grad_uhat",
                "energy_residual",
                "s1_iters",
                "s1_converged",
                "s2_residual"
            ]
        );
        assert!(t.rows.is_empty());
    }
}
