//! Result persistence: DOF vectors and summaries as JSON, iterate traces as
//! CSV, fields as VTU. All floating-point output uses shortest
//! round-trip formatting, so parsing the files back reproduces the doubles
//! bit for bit.

pub mod vtu;

use crate::optimizer::TraceRow;
use crate::C64;
use std::io::Write;
use std::path::Path;

/// Serialize a complex DOF vector as `{"len": n, "values": [[re, im], ...]}`.
pub fn write_dof_json(path: &Path, name: &str, dofs: &[C64]) -> std::io::Result<()> {
    let values: Vec<[f64; 2]> = dofs.iter().map(|c| [c.re, c.im]).collect();
    let doc = serde_json::json!({
        "name": name,
        "len": dofs.len(),
        "values": values,
    });
    write_json(path, &doc)
}

pub fn read_dof_json(path: &Path) -> std::io::Result<Vec<C64>> {
    let text = std::fs::read_to_string(path)?;
    let doc: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
    let values = doc["values"]
        .as_array()
        .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::InvalidData, "missing values"))?;
    Ok(values
        .iter()
        .map(|v| C64::new(v[0].as_f64().unwrap_or(f64::NAN), v[1].as_f64().unwrap_or(f64::NAN)))
        .collect())
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)
}

/// Iterate trace: one row per optimizer iteration.
pub fn write_trace_csv(path: &Path, rows: &[TraceRow]) -> std::io::Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "iter,f,grad_norm,stationarity,p1,p2,p3,step")?;
    for r in rows {
        writeln!(
            f,
            "{},{},{},{},{},{},{},{}",
            r.iter, r.f, r.grad_norm, r.stationarity, r.p[0], r.p[1], r.p[2], r.step
        )?;
    }
    Ok(())
}
