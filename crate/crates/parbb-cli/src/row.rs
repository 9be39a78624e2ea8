//! The one-line CSV schema every run appends, shared by `solve` and
//! `bench` (which adds a trailing speedup column).

use crate::exec::{Outcome, RunSpec};
use anyhow::{Context, Result};
use std::io::Write;
use std::path::Path;

pub const HEADER: &str = "instance,n,m,scheduler,encoding,workers,wall_seconds,mvc_size,\
tasks_sent,bestval_broadcasts,failed_requests,termination_attempts";

#[derive(Debug, Clone)]
pub struct CsvRow {
    pub instance: String,
    pub n: usize,
    pub m: usize,
    pub scheduler: String,
    pub encoding: String,
    pub workers: usize,
    pub wall_seconds: f64,
    /// `None` prints as TIMEOUT: the search did not finish, so no size is
    /// proven.
    pub mvc_size: Option<i64>,
    pub tasks_sent: u64,
    pub bestval_broadcasts: u64,
    pub failed_requests: u64,
    pub termination_attempts: u64,
    /// Only the bench table carries this column.
    pub speedup: Option<f64>,
}

impl CsvRow {
    pub fn from_outcome(spec: &RunSpec, out: &Outcome) -> CsvRow {
        let (tasks_sent, bestval, failed, attempts) = match &out.report {
            Some(r) => (
                r.workers.iter().map(|w| w.tasks_sent + w.tasks_pushed).sum(),
                r.center.bestval_broadcasts,
                r.center.misdirected_directives
                    + r.workers.iter().map(|w| w.dropped_directives).sum::<u64>(),
                r.center.termination_attempts,
            ),
            None => (0, 0, 0, 0),
        };
        CsvRow {
            instance: out.label.clone(),
            n: out.n,
            m: out.m,
            scheduler: spec.scheduler.name().to_string(),
            encoding: spec.encoding().name().to_string(),
            workers: spec.workers,
            wall_seconds: out.wall_seconds,
            mvc_size: out.mvc_size,
            tasks_sent,
            bestval_broadcasts: bestval,
            failed_requests: failed,
            termination_attempts: attempts,
            speedup: None,
        }
    }

    pub fn line(&self, with_speedup: bool) -> String {
        let size = match self.mvc_size {
            Some(k) => k.to_string(),
            None => "TIMEOUT".to_string(),
        };
        let mut line = format!(
            "{},{},{},{},{},{},{:.3},{},{},{},{},{}",
            self.instance,
            self.n,
            self.m,
            self.scheduler,
            self.encoding,
            self.workers,
            self.wall_seconds,
            size,
            self.tasks_sent,
            self.bestval_broadcasts,
            self.failed_requests,
            self.termination_attempts
        );
        if with_speedup {
            match self.speedup {
                Some(s) => line.push_str(&format!(",{s:.2}")),
                None => line.push(','),
            }
        }
        line
    }
}

/// Append one row, writing the header first when the file is new or empty.
pub fn append_row(path: &Path, row: &CsvRow, with_speedup: bool) -> Result<()> {
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .with_context(|| format!("opening {}", path.display()))?;
    if fresh {
        let header = if with_speedup { format!("{HEADER},speedup") } else { HEADER.to_string() };
        writeln!(file, "{header}")?;
    }
    writeln!(file, "{}", row.line(with_speedup))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row() -> CsvRow {
        CsvRow {
            instance: "c5".into(),
            n: 5,
            m: 5,
            scheduler: "semi".into(),
            encoding: "optimized".into(),
            workers: 4,
            wall_seconds: 0.25,
            mvc_size: Some(3),
            tasks_sent: 7,
            bestval_broadcasts: 2,
            failed_requests: 0,
            termination_attempts: 1,
            speedup: None,
        }
    }

    #[test]
    fn line_matches_the_header_shape() {
        let line = row().line(false);
        assert_eq!(line.split(',').count(), HEADER.split(',').count());
        assert_eq!(line, "c5,5,5,semi,optimized,4,0.250,3,7,2,0,1");
    }

    #[test]
    fn timeouts_replace_the_size_cell() {
        let mut r = row();
        r.mvc_size = None;
        assert!(r.line(false).contains(",TIMEOUT,"));
    }

    #[test]
    fn speedup_column_is_optional() {
        let mut r = row();
        r.speedup = Some(3.5);
        assert!(r.line(true).ends_with(",3.50"));
        assert_eq!(r.line(true).split(',').count(), HEADER.split(',').count() + 1);
    }
}
