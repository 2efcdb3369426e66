//! CSV ingestion. Errors name the offending line.

use std::path::Path;

use fabci::fixtures::FixedTruth;
use fabci::GroupedData;

use crate::error::CliError;

fn reader(path: &Path, expected: &[&str]) -> Result<csv::Reader<std::fs::File>, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let headers = rdr
        .headers()
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let got: Vec<String> = headers.iter().map(|h| h.to_ascii_lowercase()).collect();
    if got != expected {
        return Err(CliError::Usage(format!(
            "{}: expected header '{}', found '{}'",
            path.display(),
            expected.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    Ok(rdr)
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, name: &str, line: u64, path: &Path) -> Result<T, CliError> {
    let raw = rec.get(i).unwrap_or("");
    raw.parse()
        .map_err(|_| CliError::Usage(format!("{}:{line}: invalid {name} '{raw}'", path.display())))
}

fn finite(x: f64, name: &str, line: u64, path: &Path) -> Result<f64, CliError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(CliError::Usage(format!("{}:{line}: {name} must be finite", path.display())))
    }
}

/// Reads a `group,value` file. Rows with missing or non-numeric values are rejected.
pub fn read_dataset(path: &Path) -> Result<GroupedData, CliError> {
    let mut rdr = reader(path, &["group", "value"])?;
    let mut data = GroupedData::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let line = rec.position().map_or(0, |p| p.line());
        let group = rec.get(0).unwrap_or("");
        if group.is_empty() {
            return Err(CliError::Usage(format!("{}:{line}: empty group identifier", path.display())));
        }
        let value = finite(field(&rec, 1, "value", line, path)?, "value", line, path)?;
        data.push(group, value)?;
    }
    if data.is_empty() {
        return Err(CliError::Usage(format!("{}: no data rows", path.display())));
    }
    Ok(data)
}

/// Reads a `group,n,theta,sigma2` truth file for simulation.
pub fn read_truth(path: &Path) -> Result<FixedTruth, CliError> {
    let mut rdr = reader(path, &["group", "n", "theta", "sigma2"])?;
    let (mut ids, mut n, mut theta, mut sigma2) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let line = rec.position().map_or(0, |p| p.line());
        ids.push(rec.get(0).unwrap_or("").to_string());
        n.push(field::<usize>(&rec, 1, "n", line, path)?);
        theta.push(finite(field(&rec, 2, "theta", line, path)?, "theta", line, path)?);
        sigma2.push(finite(field(&rec, 3, "sigma2", line, path)?, "sigma2", line, path)?);
    }
    if ids.is_empty() {
        return Err(CliError::Usage(format!("{}: no data rows", path.display())));
    }
    Ok(FixedTruth::new(ids, n, theta, sigma2)?)
}
