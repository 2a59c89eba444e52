use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use spt_core::backtest::Ledger;

pub const OUT_ENV: &str = "SPT_LAB_OUT";
pub const PLOT_HEADER: &str = "series,date,value";

/// `--out`, then `SPT_LAB_OUT`, then the config's `out_dir`, then `out`.
pub fn resolve_out_dir(flag: Option<&Path>, config: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .or_else(|| config.map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from("out"))
}

/// First 12 hex digits of the SHA-256 of `command` and the effective config.
pub fn config_hash(command: &str, effective_toml: &str) -> String {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update([0u8]);
    h.update(effective_toml.as_bytes());
    h.finalize().iter().take(6).map(|b| format!("{b:02x}")).collect()
}

/// Output files of one command invocation: `<dir>/<command>-<hash>[-part].<ext>`.
pub struct Artifacts {
    pub dir: PathBuf,
    pub stem: String,
    pub written: Vec<PathBuf>,
}

impl Artifacts {
    pub fn new(dir: PathBuf, command: &str, effective_toml: &str) -> anyhow::Result<Self> {
        std::fs::create_dir_all(&dir)?;
        Ok(Artifacts { dir, stem: format!("{command}-{}", config_hash(command, effective_toml)), written: Vec::new() })
    }

    pub fn path(&self, part: &str, ext: &str) -> PathBuf {
        if part.is_empty() {
            self.dir.join(format!("{}.{ext}", self.stem))
        } else {
            self.dir.join(format!("{}-{part}.{ext}", self.stem))
        }
    }

    pub fn write(
        &mut self,
        part: &str,
        ext: &str,
        body: impl FnOnce(&mut dyn Write) -> anyhow::Result<()>,
    ) -> anyhow::Result<PathBuf> {
        let p = self.path(part, ext);
        let mut f = std::io::BufWriter::new(std::fs::File::create(&p)?);
        body(&mut f)?;
        f.flush()?;
        self.written.push(p.clone());
        Ok(p)
    }

    pub fn write_json<T: serde::Serialize>(&mut self, part: &str, value: &T) -> anyhow::Result<PathBuf> {
        self.write(part, "json", |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)?;
            Ok(())
        })
    }
}

/// Long-format wealth curves, one series per ledger, labelled as given.
pub fn emit_plot_data(w: &mut dyn Write, runs: &[(String, &Ledger)]) -> anyhow::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(PLOT_HEADER.split(','))?;
    for (label, ledger) in runs {
        for r in &ledger.records {
            out.write_record([label.as_str(), &r.date.format("%Y-%m-%d").to_string(), &r.wealth.to_string()])?;
        }
    }
    out.flush()?;
    Ok(())
}
