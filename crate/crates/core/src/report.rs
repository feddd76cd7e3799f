//! Output serialization: `energy.csv`, `events.csv`, `report.txt` and field
//! dumps. All CSV output uses 17-significant-digit floats, fixed column
//! order, and `\n` line endings, so byte-identical configurations produce
//! byte-identical files.

use crate::config::RunConfig;
use crate::error::Result;
use crate::fields::{DirectorField, PressureField, VectorField};
use crate::geometry::Grid;
use crate::singularity::ConcentrationEvent;
use crate::solver::RunReport;
use std::io::Write;
use std::path::Path;

/// `events.csv` with columns `t,x1,x2,r,value`.
pub fn write_events_csv<W: Write>(out: &mut W, events: &[ConcentrationEvent]) -> Result<()> {
    out.write_all(b"t,x1,x2,r,value\n")?;
    for e in events {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            e.t, e.x[0], e.x[1], e.r, e.value
        )?;
    }
    Ok(())
}

/// Plain-text field dump: a header with name, time and resolution, then one
/// node per line `i j x y v1 [v2 [v3]]`.
pub fn dump_scalar<W: Write>(
    out: &mut W,
    grid: &Grid,
    name: &str,
    t: f64,
    f: &PressureField,
) -> Result<()> {
    writeln!(out, "# field={name} t={t:.16e} n1={} n2={}", grid.n1, grid.n2)?;
    for i in 0..grid.n1 {
        for j in 0..grid.n2 {
            let p = grid.pidx(i as isize, j as isize);
            writeln!(out, "{} {} {:.16e} {:.16e} {:.16e}", i, j, grid.x[p], grid.y[p], f.a[p])?;
        }
    }
    Ok(())
}

pub fn dump_vector<W: Write>(
    out: &mut W,
    grid: &Grid,
    name: &str,
    t: f64,
    u: &VectorField,
) -> Result<()> {
    writeln!(out, "# field={name} t={t:.16e} n1={} n2={}", grid.n1, grid.n2)?;
    for i in 0..grid.n1 {
        for j in 0..grid.n2 {
            let p = grid.pidx(i as isize, j as isize);
            writeln!(
                out,
                "{} {} {:.16e} {:.16e} {:.16e} {:.16e}",
                i, j, grid.x[p], grid.y[p], u.c[0][p], u.c[1][p]
            )?;
        }
    }
    Ok(())
}

pub fn dump_director<W: Write>(
    out: &mut W,
    grid: &Grid,
    name: &str,
    t: f64,
    d: &DirectorField,
) -> Result<()> {
    writeln!(out, "# field={name} t={t:.16e} n1={} n2={}", grid.n1, grid.n2)?;
    for i in 0..grid.n1 {
        for j in 0..grid.n2 {
            let p = grid.pidx(i as isize, j as isize);
            writeln!(
                out,
                "{} {} {:.16e} {:.16e} {:.16e} {:.16e} {:.16e}",
                i, j, grid.x[p], grid.y[p], d.c[0][p], d.c[1][p], d.c[2][p]
            )?;
        }
    }
    Ok(())
}

/// Machine-readable run summary, `key = value` per line.
pub fn write_report_txt<W: Write>(
    out: &mut W,
    cfg: &RunConfig,
    report: &RunReport,
    threads: usize,
) -> Result<()> {
    let l = &report.ledger;
    let last = l.rows.last();
    writeln!(out, "domain = {:?}", cfg.domain)?;
    writeln!(out, "resolution = {}x{}", cfg.resolution.0, cfg.resolution.1)?;
    writeln!(out, "dt = {:.16e}", report.dt)?;
    writeln!(out, "steps = {}", report.steps)?;
    writeln!(out, "t_final = {:.16e}", report.final_state.t)?;
    writeln!(out, "threads = {threads}")?;
    writeln!(out, "init = {:?}", cfg.init)?;
    writeln!(out, "E0 = {:.16e}", l.e0())?;
    if let Some(r) = last {
        writeln!(out, "E_final = {:.16e}", r.e)?;
        writeln!(out, "visc_cum = {:.16e}", r.visc_cum)?;
        writeln!(out, "dir_cum = {:.16e}", r.dir_cum)?;
        writeln!(out, "identity_residual = {:.16e}", r.residual)?;
    }
    writeln!(out, "identity_residual_max = {:.16e}", l.max_residual())?;
    writeln!(out, "smallness_integral = {:.16e}", report.smallness_final)?;
    writeln!(out, "events = {}", report.events.len())?;
    writeln!(out, "aborted_by_monitor = {}", report.aborted_by_monitor)?;
    writeln!(out, "pressure_iterations = {}", report.pressure_iters)?;
    writeln!(out, "viscous_iterations = {}", report.viscous_iters)?;
    writeln!(out, "director_iterations = {}", report.director_iters)?;
    if let Some((eps1, c0, r0)) = cfg.life_span {
        let t0 = crate::energy::life_span_estimate(eps1, c0, l.e0(), r0);
        writeln!(out, "life_span_bound = {:.16e}", t0)?;
    }
    Ok(())
}

/// Writes the standard output set of a run into `dir`.
pub fn save_run(dir: &Path, cfg: &RunConfig, report: &RunReport, threads: usize) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut energy = Vec::new();
    report.ledger.write_csv(&mut energy)?;
    std::fs::write(dir.join("energy.csv"), energy)?;

    let mut events = Vec::new();
    write_events_csv(&mut events, &report.events)?;
    std::fs::write(dir.join("events.csv"), events)?;

    let mut txt = Vec::new();
    write_report_txt(&mut txt, cfg, report, threads)?;
    std::fs::write(dir.join("report.txt"), txt)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn events_csv_format() {
        let events = vec![ConcentrationEvent { t: 0.5, x: [0.1, -0.2], r: 0.4, value: 13.0 }];
        let mut buf = Vec::new();
        write_events_csv(&mut buf, &events).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let mut lines = s.lines();
        assert_eq!(lines.next().unwrap(), "t,x1,x2,r,value");
        let row = lines.next().unwrap();
        assert!(row.starts_with("5.0000000000000000e-1,"));
        assert!(!s.contains('\r'));
    }
}
