use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tevp_core::spectral::SweepEvent;

use crate::config::RunConfig;
use crate::error::Result;

/// One CSV column: a name and its unit.
#[derive(Clone, Debug)]
pub struct Column {
    pub name: &'static str,
    pub unit: &'static str,
}

pub const fn col(name: &'static str, unit: &'static str) -> Column {
    Column { name, unit }
}

/// Cell formatting shared by every table: shortest round-trip floats, empty
/// for missing values.
pub enum Cell {
    F(f64),
    U(u64),
    S(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(x) => format!("{x:e}"),
            Cell::U(n) => n.to_string(),
            Cell::S(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::U(n as u64)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::F)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::S(s.to_string())
    }
}

/// Two cells for a complex value.
pub fn complex(z: Complex64) -> [Cell; 2] {
    [Cell::F(z.re), Cell::F(z.im)]
}

pub struct Table {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<Column>) -> Self {
        Table {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// `# config_sha256=…` comment line, then `name [unit]` headers.
    pub fn to_bytes(&self, checksum: &str) -> Result<Vec<u8>> {
        let mut out = format!("# config_sha256={checksum}\n").into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(self.columns.iter().map(|c| format!("{} [{}]", c.name, c.unit)))?;
            for r in &self.rows {
                w.write_record(r.iter().map(Cell::render))?;
            }
            w.flush()?;
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub kappa: f64,
    pub kind: String,
    pub detail: String,
}

impl EventRecord {
    pub fn from_sweep(e: &SweepEvent) -> Self {
        match e {
            SweepEvent::Breakdown { kappa, cond } => EventRecord {
                kappa: *kappa,
                kind: "breakdown".into(),
                detail: format!("condition estimate {cond:.3e}; point skipped"),
            },
            SweepEvent::Perturbed { from, to, cond } => EventRecord {
                kappa: *from,
                kind: "perturbed".into(),
                detail: format!("condition estimate {cond:.3e}; rebuilt at {to}"),
            },
            SweepEvent::Calibration { kappa, residual } => EventRecord::calibration(*kappa, *residual),
        }
    }

    pub fn calibration(kappa: f64, residual: f64) -> Self {
        EventRecord {
            kappa,
            kind: "calibration".into(),
            detail: format!("residual {residual:.3e}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub config: RunConfig,
    pub config_sha256: String,
    /// Seconds since the Unix epoch.
    pub started: f64,
    pub finished: f64,
    pub status: String,
    pub error: Option<String>,
    pub events: Vec<EventRecord>,
    pub files: Vec<FileRecord>,
}

pub fn now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// Collects the files and events of one run; writing is serialized here.
pub struct Sink {
    pub dir: PathBuf,
    pub checksum: String,
    pub files: Vec<FileRecord>,
    pub events: Vec<EventRecord>,
}

impl Sink {
    pub fn new(dir: &Path, checksum: String) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Sink {
            dir: dir.to_path_buf(),
            checksum,
            files: Vec::new(),
            events: Vec::new(),
        })
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        fs::write(self.dir.join(name), bytes)?;
        self.files.push(FileRecord {
            path: name.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    pub fn csv(&mut self, name: &str, table: &Table) -> Result<()> {
        let bytes = table.to_bytes(&self.checksum)?;
        self.write_bytes(name, &bytes)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write_bytes(name, &bytes)
    }

    pub fn event(&mut self, e: EventRecord) {
        self.events.push(e);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_carries_checksum_and_units() {
        let mut t = Table::new(vec![col("kappa", "1/length"), col("re_u", "1"), col("im_u", "1")]);
        let [re, im] = complex(Complex64::new(0.5, -2.0));
        t.push(vec![3.0.into(), re, im]);
        t.push(vec![Cell::F(4.0), Cell::Empty, Cell::Empty]);
        let s = String::from_utf8(t.to_bytes("abc").unwrap()).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "# config_sha256=abc");
        assert_eq!(lines[1], "kappa [1/length],re_u [1],im_u [1]");
        assert_eq!(lines[2], "3e0,5e-1,-2e0");
        assert_eq!(lines[3], "4e0,,");
    }
}
