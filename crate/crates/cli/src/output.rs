use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use crate::Global;

/// Writes artifacts under the output directory, each stamped with the run header.
pub struct Output {
    dir: PathBuf,
    header: Value,
}

impl Output {
    pub fn new(global: &Global, command: &str) -> Result<Self> {
        fs::create_dir_all(&global.out_dir).with_context(|| format!("creating {}", global.out_dir.display()))?;
        let header = json!({
            "tool": "tspec",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "map": global.map,
            "weight": global.weight,
            "seed": global.seed,
            "bits": global.bits,
        });
        Ok(Output { dir: global.out_dir.clone(), header })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn json<T: Serialize>(&self, name: &str, result: &T) -> Result<PathBuf> {
        let doc = json!({ "header": self.header, "result": result });
        let text = serde_json::to_string_pretty(&doc)? + "\n";
        self.write(name, &text)
    }

    /// CSV with a leading `#` comment line carrying the header.
    pub fn csv(&self, name: &str, body: &str) -> Result<PathBuf> {
        let text = format!("# {}\n{body}", serde_json::to_string(&self.header)?);
        self.write(name, &text)
    }

    pub fn raw(&self, name: &str, text: &str) -> Result<PathBuf> {
        self.write(name, text)
    }

    fn write(&self, name: &str, text: &str) -> Result<PathBuf> {
        let p = self.path(name);
        fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?;
        Ok(p)
    }
}

/// Left-aligned plain-text table.
pub fn table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (i, c) in r.iter().enumerate() {
            widths[i] = widths[i].max(c.chars().count());
        }
    }
    let line = |cells: Vec<&str>| -> String {
        cells
            .iter()
            .enumerate()
            .map(|(i, c)| format!("{c:<w$}", w = widths[i]))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = line(headers.to_vec()) + "\n";
    out += &(widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  ") + "\n");
    for r in rows {
        out += &(line(r.iter().map(String::as_str).collect()) + "\n");
    }
    out
}

pub fn wrote(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", display(p));
    }
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_aligns_columns() {
        let t = table(&["a", "long"], &[vec!["xyz".into(), "1".into()]]);
        assert_eq!(t, "a    long\n---  ----\nxyz  1\n");
    }
}
