//! File formats: time series, snapshots and the JSON report.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use wdch::lagrangian::LagrangianState;
use wdch::{Field, TrajectoryRecord};

/// Fixed leading columns of every time series, with units.
pub const BASE_COLUMNS: [(&str, &str); 7] = [
    ("t", "time"),
    ("H1", "H^1 norm"),
    ("min_ux", "min_x u_x, 1/time"),
    ("I_Linf", "running int ||u_x||_inf dt"),
    ("I_B0inf", "running int ||u_x||_B0inf dt (blank when not monitored)"),
    ("f_n", "int u_x^(2n+1) dx"),
    ("B_norm", "critical Besov norm B^(1+1/p)_(p,r)"),
];

/// An experiment-specific column appended after the fixed ones.
pub struct ExtraColumn {
    pub name: String,
    pub unit: String,
    pub values: Vec<f64>,
}

fn csv_err(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

fn fmt(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v:e}")
    }
}

pub fn write_timeseries(path: &Path, record: &TrajectoryRecord, b_norm: &[f64], extra: &[ExtraColumn]) -> io::Result<()> {
    let mut text = String::from("# units:");
    for (name, unit) in BASE_COLUMNS {
        text.push_str(&format!(" {name} [{unit}];"));
    }
    for c in extra {
        text.push_str(&format!(" {} [{}];", c.name, c.unit));
    }
    text.push_str(&format!(" n = {}\n", record.moment_n));
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = BASE_COLUMNS.iter().map(|c| c.0).collect();
    header.extend(extra.iter().map(|c| c.name.as_str()));
    w.write_record(&header).map_err(csv_err)?;
    let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(f64::NAN);
    for i in 0..record.times.len() {
        let mut row = vec![
            fmt(record.times[i]),
            fmt(record.h1_norms[i]),
            fmt(record.min_slope[i]),
            fmt(record.integral_linf[i]),
            fmt(at(&record.integral_b0, i)),
            fmt(record.moments_f_n[i]),
            fmt(at(b_norm, i)),
        ];
        row.extend(extra.iter().map(|c| fmt(at(&c.values, i))));
        w.write_record(&row).map_err(csv_err)?;
    }
    text.push_str(&String::from_utf8(w.into_inner().map_err(|e| io::Error::other(e.to_string()))?).expect("utf8"));
    fs::write(path, text)
}

pub fn snapshot_path(dir: &Path, index: usize) -> PathBuf {
    dir.join("snapshots").join(format!("snap_{index:05}.csv"))
}

/// `x,u` on the grid; particle columns `xi,y,U,V` are appended for the
/// Lagrangian solver.
pub fn write_snapshot(dir: &Path, index: usize, field: &Field, particles: Option<&LagrangianState>) -> io::Result<PathBuf> {
    let path = snapshot_path(dir, index);
    fs::create_dir_all(path.parent().expect("snapshot dir"))?;
    let mut text = format!("# t = {:e}; x [length], u [velocity]", field.time);
    if particles.is_some() {
        text.push_str("; xi [label], y [position], U [velocity], V [U_xi]");
    }
    text.push('\n');
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["x", "u"];
    if particles.is_some() {
        header.extend(["xi", "y", "U", "V"]);
    }
    w.write_record(&header).map_err(csv_err)?;
    let xs = field.grid.nodes();
    for (i, (x, u)) in xs.iter().zip(&field.values).enumerate() {
        let mut row = vec![fmt(*x), fmt(*u)];
        if let Some(p) = particles {
            row.extend([p.xi[i], p.y[i], p.u[i], p.v[i]].map(fmt));
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    text.push_str(&String::from_utf8(w.into_inner().map_err(|e| io::Error::other(e.to_string()))?).expect("utf8"));
    fs::write(&path, text)?;
    Ok(path)
}

/// Samples of `u` from a CSV with an `x,u` header or a single column.
pub fn read_samples(path: &Path) -> io::Result<Vec<f64>> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(true)
        .from_path(path)
        .map_err(csv_err)?;
    let headers = r.headers().map_err(csv_err)?.clone();
    let col = headers.iter().position(|h| h.trim() == "u").unwrap_or(headers.len() - 1);
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let v = rec
            .get(col)
            .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidData, "short row"))?
            .trim()
            .parse::<f64>()
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
        out.push(v);
    }
    Ok(out)
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    fs::write(path, text + "\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use wdch::PeriodicGrid;

    #[test]
    fn snapshot_reads_back() {
        let dir = tempfile::tempdir().unwrap();
        let g = PeriodicGrid::new(4.0, 16).unwrap();
        let f = Field::from_fn(g, |x| x.sin() / 3.0);
        let p = write_snapshot(dir.path(), 7, &f, None).unwrap();
        assert!(p.ends_with("snapshots/snap_00007.csv"));
        assert_eq!(read_samples(&p).unwrap(), f.values);
    }

    #[test]
    fn timeseries_has_units_and_header() {
        let dir = tempfile::tempdir().unwrap();
        let mut rec = TrajectoryRecord::new(1);
        rec.push(0.0, 1.0, -0.5, 0.5, None, 0.1);
        rec.push(0.1, 0.9, -0.6, 0.6, None, 0.2);
        let path = dir.path().join("ts.csv");
        let extra = ExtraColumn {
            name: "H".into(),
            unit: "small-data functional".into(),
            values: vec![2.0, 2.5],
        };
        write_timeseries(&path, &rec, &[3.0, 4.0], &[extra]).unwrap();
        let text = fs::read_to_string(path).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# units: t [time];"));
        assert_eq!(lines.next().unwrap(), "t,H1,min_ux,I_Linf,I_B0inf,f_n,B_norm,H");
        let row: Vec<&str> = lines.nth(1).unwrap().split(',').collect();
        assert_eq!(row[0].parse::<f64>().unwrap(), 0.1);
        assert_eq!(row[4], "");
        assert_eq!(row[7].parse::<f64>().unwrap(), 2.5);
    }
}
