//! Output-directory handling: every emitted file is recorded in a manifest
//! with its sha256 content hash, and plot scripts reference only files the
//! same run wrote.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use chemomass::error::{Error, Result};

pub struct OutputDir {
    dir: PathBuf,
    entries: Vec<(String, String)>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)
            .map_err(|e| Error::invalid(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), entries: Vec::new() })
    }

    pub fn write(&mut self, name: &str, content: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, content)
            .map_err(|e| Error::invalid(format!("cannot write {}: {e}", path.display())))?;
        let hash = hex_digest(content.as_bytes());
        self.entries.push((name.to_string(), hash));
        Ok(())
    }

    /// Write the manifest listing every emitted file with its hash.
    pub fn finish(&mut self) -> Result<()> {
        let mut manifest = String::new();
        for (name, hash) in &self.entries {
            manifest.push_str(&format!("{hash}  {name}\n"));
        }
        let path = self.dir.join("MANIFEST.txt");
        fs::write(&path, manifest)
            .map_err(|e| Error::invalid(format!("cannot write {}: {e}", path.display())))?;
        Ok(())
    }
}

fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Self-contained gnuplot script for a trajectory CSV: sup-norm history on a
/// log axis plus the slope diagnostics.
pub fn trajectory_plot_script(csv: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set key autotitle columnhead\n\
         set terminal pngcairo size 1200,500\n\
         set output 'trajectory.png'\n\
         set multiplot layout 1,2\n\
         set logscale y\n\
         set xlabel 't'\n\
         set ylabel 'sup u'\n\
         plot '{csv}' using 1:2 with lines\n\
         set ylabel 'u(0,t)'\n\
         plot '{csv}' using 1:6 with lines\n\
         unset multiplot\n"
    )
}

/// Phase-table plot of a mass sweep; emits a placeholder when empty.
pub fn sweep_plot_script(csv: &str, rows: usize) -> String {
    if rows == 0 {
        return "# empty sweep table; nothing to plot\n".to_string();
    }
    format!(
        "set datafile separator ','\n\
         set key autotitle columnhead\n\
         set terminal pngcairo size 800,500\n\
         set output 'sweep.png'\n\
         set xlabel 'm / m_c'\n\
         set ylabel 'fitted growth rate'\n\
         plot '{csv}' using 2:4 with points pt 7 ps 1.5\n"
    )
}
