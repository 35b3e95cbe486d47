//! Run directories, manifests and density snapshots.

use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::config::{Experiment, RunConfig, SnapshotFormat};
use crate::error::{Error, Result};
use crate::fields::Vec2;
use crate::poisson::Grid2D;

const MAGIC: &[u8; 4] = b"RHO1";

/// A directory receiving the files of one run.
#[derive(Debug, Clone)]
pub struct RunDir {
    path: PathBuf,
}

impl RunDir {
    /// Creates the directory and writes `config.resolved` and `manifest.txt`.
    pub fn create(path: &Path, experiment: Experiment, cfg: &RunConfig) -> Result<Self> {
        fs::create_dir_all(path)?;
        fs::write(path.join("config.resolved"), cfg.to_text(Some(experiment)))?;
        let manifest = format!(
            "program = magpic\nversion = {}\nexperiment = {}\nseed = {}\nworkers = {}\nconfig = config.resolved\n",
            env!("CARGO_PKG_VERSION"),
            experiment,
            cfg.seed,
            cfg.workers,
        );
        fs::write(path.join("manifest.txt"), manifest)?;
        Ok(RunDir { path: path.to_path_buf() })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    pub fn writer(&self, name: &str) -> Result<BufWriter<File>> {
        Ok(BufWriter::new(File::create(self.file(name))?))
    }

    /// Writes the nodal density of `grid` at time `t` as `<stem>.txt` or
    /// `<stem>.bin` and returns the path.
    pub fn snapshot(&self, stem: &str, grid: &Grid2D, t: f64, format: SnapshotFormat) -> Result<PathBuf> {
        let path = match format {
            SnapshotFormat::Text => self.file(&format!("{stem}.txt")),
            SnapshotFormat::Binary => self.file(&format!("{stem}.bin")),
        };
        write_snapshot(&path, grid, t, format)?;
        Ok(path)
    }
}

/// Nodal density read back from a snapshot file.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub origin: Vec2,
    pub t: f64,
    /// Row-major, `rho[j * nx + i]`.
    pub rho: Vec<f64>,
}

pub fn write_snapshot(path: &Path, grid: &Grid2D, t: f64, format: SnapshotFormat) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    match format {
        SnapshotFormat::Text => {
            writeln!(out, "# nx ny h ox oy t")?;
            writeln!(out, "{} {} {:.16e} {:.16e} {:.16e} {:.16e}", grid.nx, grid.ny, grid.h, grid.origin.x, grid.origin.y, t)?;
            for row in grid.rho.chunks(grid.nx) {
                let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
                writeln!(out, "{}", line.join(" "))?;
            }
        }
        SnapshotFormat::Binary => {
            out.write_all(MAGIC)?;
            out.write_all(&(grid.nx as u64).to_le_bytes())?;
            out.write_all(&(grid.ny as u64).to_le_bytes())?;
            for v in [grid.h, grid.origin.x, grid.origin.y, t] {
                out.write_all(&v.to_le_bytes())?;
            }
            for v in &grid.rho {
                out.write_all(&v.to_le_bytes())?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn bad(path: &Path, what: &str) -> Error {
    Error::InvalidInput(format!("{}: {what}", path.display()))
}

/// Reads either snapshot format, detected from the magic bytes.
pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.starts_with(MAGIC) {
        let mut words = bytes[4..].chunks_exact(8).map(|c| <[u8; 8]>::try_from(c).unwrap());
        let mut next = || words.next().ok_or_else(|| bad(path, "truncated snapshot"));
        let nx = u64::from_le_bytes(next()?) as usize;
        let ny = u64::from_le_bytes(next()?) as usize;
        let h = f64::from_le_bytes(next()?);
        let origin = Vec2::new(f64::from_le_bytes(next()?), f64::from_le_bytes(next()?));
        let t = f64::from_le_bytes(next()?);
        let rho = (0..nx * ny).map(|_| next().map(f64::from_le_bytes)).collect::<Result<Vec<_>>>()?;
        return Ok(Snapshot { nx, ny, h, origin, t, rho });
    }
    let text = String::from_utf8(bytes).map_err(|_| bad(path, "not a snapshot"))?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().ok_or_else(|| bad(path, "empty snapshot"))?.split_whitespace().collect();
    if header.len() != 6 {
        return Err(bad(path, "malformed header"));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|_| bad(path, "malformed number"));
    let nx: usize = header[0].parse().map_err(|_| bad(path, "malformed header"))?;
    let ny: usize = header[1].parse().map_err(|_| bad(path, "malformed header"))?;
    let rho = lines.flat_map(|l| l.split_whitespace()).map(num).collect::<Result<Vec<_>>>()?;
    if rho.len() != nx * ny {
        return Err(bad(path, "wrong number of values"));
    }
    Ok(Snapshot {
        nx,
        ny,
        h: num(header[2])?,
        origin: Vec2::new(num(header[3])?, num(header[4])?),
        t: num(header[5])?,
        rho,
    })
}
