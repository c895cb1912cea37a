//! Report writers: a human-readable `report.txt`, a machine-readable
//! `summary.kv` of `key=value` lines, and CSV tables. No timestamps; a rerun
//! with the same inputs produces byte-identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

pub fn format_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.17e}")
    } else {
        format!("{v}")
    }
}

pub struct OutputWriter {
    out_dir: PathBuf,
    report: String,
    summary: Vec<(String, String)>,
}

impl OutputWriter {
    pub fn new(out_dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(out_dir)
            .with_context(|| format!("creating {}", out_dir.display()))?;
        Ok(OutputWriter { out_dir: out_dir.to_path_buf(), report: String::new(), summary: Vec::new() })
    }

    pub fn section(&mut self, title: &str) {
        if !self.report.is_empty() {
            self.report.push('\n');
        }
        let _ = writeln!(self.report, "== {title} ==");
    }

    pub fn line(&mut self, text: impl AsRef<str>) {
        let _ = writeln!(self.report, "{}", text.as_ref());
    }

    pub fn kv(&mut self, key: &str, value: impl AsRef<str>) {
        let value = value.as_ref().to_string();
        let _ = writeln!(self.report, "  {key} = {value}");
        self.summary.push((key.to_string(), value));
    }

    pub fn kv_f64(&mut self, key: &str, value: f64) {
        self.kv(key, format_f64(value));
    }

    pub fn kv_usize(&mut self, key: &str, value: usize) {
        self.kv(key, value.to_string());
    }

    pub fn write_csv(
        &self,
        name: &str,
        header: &str,
        rows: impl IntoIterator<Item = Vec<String>>,
    ) -> Result<()> {
        let mut text = String::new();
        let _ = writeln!(text, "{header}");
        for row in rows {
            let _ = writeln!(text, "{}", row.join(","));
        }
        let path = self.out_dir.join(name);
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }

    pub fn finish(self) -> Result<()> {
        let report_path = self.out_dir.join("report.txt");
        std::fs::write(&report_path, &self.report)
            .with_context(|| format!("writing {}", report_path.display()))?;
        let mut kv = String::new();
        for (k, v) in &self.summary {
            let _ = writeln!(kv, "{k}={v}");
        }
        let summary_path = self.out_dir.join("summary.kv");
        std::fs::write(&summary_path, kv)
            .with_context(|| format!("writing {}", summary_path.display()))?;
        Ok(())
    }
}
