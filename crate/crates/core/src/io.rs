//! CSV tables, JSON reports and atomic file output.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::Result;

/// Numeric table written as comma-separated text with a `name[unit]` header.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        CsvTable {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, w: &mut dyn Write) -> io::Result<()> {
        writeln!(w, "{}", self.header.join(","))?;
        for row in &self.rows {
            let mut first = true;
            for v in row {
                if !first {
                    w.write_all(b",")?;
                }
                first = false;
                write!(w, "{v}")?;
            }
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self
            .header
            .iter()
            .position(|h| h == name || h.split('[').next() == Some(name))?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

/// Writes through a temporary sibling file and renames it into place.
pub fn write_atomic(path: &Path, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    let result = (|| -> io::Result<()> {
        let file = fs::File::create(&tmp)?;
        let mut w = BufWriter::new(file);
        f(&mut w)?;
        w.flush()?;
        w.get_ref().sync_all()?;
        Ok(())
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(e.into());
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_json_atomic<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| crate::Error::InvalidInput(format!("serialisation: {e}")))?;
    write_atomic(path, |w| {
        w.write_all(text.as_bytes())?;
        w.write_all(b"\n")
    })
}

pub fn write_csv_atomic(path: &Path, table: &CsvTable) -> Result<()> {
    write_atomic(path, |w| table.write(w))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
}

impl From<bool> for Outcome {
    fn from(ok: bool) -> Self {
        if ok {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }
}

/// One experiment's record: which claim it tests, what was measured, and the verdict.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub experiment: String,
    #[serde(rename = "paper_ref")]
    pub claim: String,
    pub metrics: BTreeMap<String, serde_json::Value>,
    pub verdict: Outcome,
}

impl Report {
    pub fn new(experiment: &str, claim: &str) -> Self {
        Report {
            experiment: experiment.into(),
            claim: claim.into(),
            metrics: BTreeMap::new(),
            verdict: Outcome::Pass,
        }
    }

    pub fn metric(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.metrics.insert(
            key.into(),
            serde_json::to_value(value).unwrap_or(serde_json::Value::Null),
        );
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Outcome::Pass
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_header_and_lf_rows() {
        let mut t = CsvTable::new(&["r[length]", "u[length]"]);
        t.push(vec![0.5, -1.25]);
        t.push(vec![1.0, 3.0]);
        assert_eq!(t.to_csv_string(), "r[length],u[length]\n0.5,-1.25\n1,3\n");
        assert_eq!(t.column("u").unwrap(), vec![-1.25, 3.0]);
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub").join("a.json");
        write_json_atomic(&p, &vec![1, 2]).unwrap();
        write_json_atomic(&p, &vec![3]).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert_eq!(serde_json::from_str::<Vec<i32>>(&text).unwrap(), vec![3]);
        assert_eq!(fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
