//! CSV snapshots, run logs, result tables and checkpoints.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::dg::{DgField, DgSpace};
use crate::solver::{Problem, StepRecord};
use crate::state::Layout;
use crate::study::{ConvergenceTable, SweepRow};
use crate::{Error, Result};

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    Ok(BufWriter::new(file))
}

/// Column names of a snapshot with `species` species.
pub fn snapshot_header(species: usize) -> Vec<String> {
    let mut cols: Vec<String> = ["x", "y", "rho", "u", "v", "p", "T"].iter().map(|s| s.to_string()).collect();
    cols.extend((1..=species).map(|i| format!("z_{i}")));
    cols
}

/// One row per Gauss node of every fluid cell.
pub fn write_snapshot(path: &Path, problem: &Problem, field: &DgField) -> Result<()> {
    let space = &problem.space;
    let layout = space.layout;
    let mut w = create(path)?;
    writeln!(w, "{}", snapshot_header(layout.species).join(","))?;
    for c in space.mesh.fluid_cells() {
        for q in 0..field.nodes {
            let u = field.node(c, q);
            let (x, y) = space.node_position(c, q);
            let rho = u[Layout::DENSITY];
            let th = problem.eos.flow_state(&layout, u).map_err(|e| e.at(format!("snapshot cell {c} node {q}")))?;
            let v = if layout.dim == 2 { layout.velocity(u, 1) } else { 0.0 };
            write!(w, "{x},{y},{rho},{},{v},{},{}", layout.velocity(u, 0), th.pressure, th.temperature)?;
            for ci in layout.species(u) {
                write!(w, ",{}", ci / rho)?;
            }
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub const LOG_HEADER: &str = "step,t,dt,alpha,min_rho,min_p,min_partial_density,min_fraction,max_fraction,\
fraction_defect,gauss_cells_limited,point_cells_limited,min_theta,scheme,restarted";

/// Streams [`StepRecord`]s as CSV rows.
pub struct RunLog {
    out: BufWriter<File>,
}

impl RunLog {
    pub fn create(path: &Path) -> Result<Self> {
        let mut out = create(path)?;
        writeln!(out, "{LOG_HEADER}")?;
        Ok(RunLog { out })
    }

    pub fn record(&mut self, r: &StepRecord) -> Result<()> {
        let b = &r.bounds;
        writeln!(
            self.out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.step,
            r.time,
            r.dt,
            r.alpha,
            b.min_density,
            b.min_pressure,
            b.min_partial_density,
            b.min_fraction,
            b.max_fraction,
            r.fraction_defect,
            r.gauss_cells_limited,
            r.point_cells_limited,
            r.min_theta,
            r.scheme,
            r.restarted
        )?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

/// `t,c_1..c_M,sum` per stored level.
pub fn write_trajectory(path: &Path, times: &[f64], states: &[Vec<f64>]) -> Result<()> {
    let mut w = create(path)?;
    let m = states.first().map_or(0, Vec::len);
    let cols: Vec<String> = (1..=m).map(|i| format!("c_{i}")).collect();
    writeln!(w, "t,{},sum", cols.join(","))?;
    for (t, c) in times.iter().zip(states) {
        let vals: Vec<String> = c.iter().map(f64::to_string).collect();
        writeln!(w, "{t},{},{}", vals.join(","), c.iter().sum::<f64>())?;
    }
    w.flush()?;
    Ok(())
}

/// `table,step,error,order,monotone` for every row of every table.
pub fn write_convergence(path: &Path, tables: &[ConvergenceTable]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "table,step,error,order,monotone")?;
    for t in tables {
        let mono = t.is_monotone();
        for r in &t.rows {
            let order = r.order.map(|p| p.to_string()).unwrap_or_default();
            writeln!(w, "{},{},{},{order},{mono}", t.label, r.step, r.error)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "scheme,s,error,min_component,conservation_defect")?;
    for r in rows {
        writeln!(w, "{},{},{},{},{}", r.scheme, r.s, r.error, r.min_component, r.conservation_defect)?;
    }
    w.flush()?;
    Ok(())
}

/// Final state with a self-describing header.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub dim: usize,
    pub degree: usize,
    pub time: f64,
    pub variables: Vec<String>,
    pub field: DgField,
}

impl Checkpoint {
    pub fn new(space: &DgSpace, time: f64, field: &DgField) -> Self {
        Checkpoint {
            dim: space.layout.dim,
            degree: space.basis.degree,
            time,
            variables: space.layout.names(),
            field: field.clone(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = create(path)?;
        let f = &self.field;
        writeln!(w, "# mpdg checkpoint")?;
        writeln!(w, "dim {}", self.dim)?;
        writeln!(w, "degree {}", self.degree)?;
        writeln!(w, "time {}", self.time)?;
        writeln!(w, "cells {}", f.cells)?;
        writeln!(w, "nodes {}", f.nodes)?;
        writeln!(w, "variables {}", self.variables.join(" "))?;
        writeln!(w, "data")?;
        for c in 0..f.cells {
            for q in 0..f.nodes {
                let vals: Vec<String> = f.node(c, q).iter().map(f64::to_string).collect();
                writeln!(w, "{c} {q} {}", vals.join(" "))?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bad = |line: usize, what: &str| Error::Config(format!("{}:{line}: {what}", path.display()));
        let file = File::open(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut lines = BufReader::new(file).lines().enumerate();
        let mut header = std::collections::HashMap::new();
        for (n, line) in lines.by_ref() {
            let line = line?;
            if line.starts_with('#') {
                continue;
            }
            if line == "data" {
                break;
            }
            let (k, v) = line.split_once(' ').ok_or_else(|| bad(n + 1, "expected `key value`"))?;
            header.insert(k.to_string(), v.to_string());
        }
        let get = |k: &str| header.get(k).ok_or_else(|| bad(0, &format!("missing `{k}`")));
        let num = |k: &str| -> Result<usize> { get(k)?.parse().map_err(|_| bad(0, &format!("bad `{k}`"))) };
        let time: f64 = get("time")?.parse().map_err(|_| bad(0, "bad `time`"))?;
        let variables: Vec<String> = get("variables")?.split_whitespace().map(str::to_string).collect();
        let mut field = DgField::zeros(num("cells")?, num("nodes")?, variables.len());
        let mut seen = 0;
        for (n, line) in lines {
            let line = line?;
            let mut parts = line.split_whitespace();
            let mut index = || -> Result<usize> {
                parts.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad(n + 1, "bad node index"))
            };
            let (c, q) = (index()?, index()?);
            if c >= field.cells || q >= field.nodes {
                return Err(bad(n + 1, "node index out of range"));
            }
            let vals = parts.map(str::parse).collect::<std::result::Result<Vec<f64>, _>>().map_err(|_| bad(n + 1, "bad value"))?;
            if vals.len() != field.vars {
                return Err(bad(n + 1, "wrong number of values"));
            }
            field.node_mut(c, q).copy_from_slice(&vals);
            seen += 1;
        }
        if seen != field.cells * field.nodes {
            return Err(bad(0, &format!("{seen} nodes, expected {}", field.cells * field.nodes)));
        }
        Ok(Checkpoint { dim: num("dim")?, degree: num("degree")?, time, variables, field })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases::euler::ShockTube;

    #[test]
    fn checkpoint_round_trip() {
        let setup = ShockTube { cells: 4, ..Default::default() }.build().unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("final.chk");
        let ck = Checkpoint::new(&setup.problem.space, 0.25, &setup.initial);
        ck.write(&path).unwrap();
        assert_eq!(Checkpoint::read(&path).unwrap(), ck);
    }

    #[test]
    fn snapshot_columns() {
        let setup = ShockTube { cells: 3, ..Default::default() }.build().unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        write_snapshot(&path, &setup.problem, &setup.initial).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "x,y,rho,u,v,p,T,z_1,z_2,z_3");
        let rows: Vec<&str> = lines.collect();
        assert_eq!(rows.len(), 3 * 2);
        let first: Vec<f64> = rows[0].split(',').map(|s| s.parse().unwrap()).collect();
        assert!((first[5] - 1000.0).abs() < 1e-9);
        assert!((first[7..].iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }
}
