use std::io::Write;

use crate::filter::FilterTermBreakdown;

/// Loss terms before the update of one iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogEntry {
    pub iteration: usize,
    pub breakdown: FilterTermBreakdown,
    /// Wall-clock seconds since training started, at the end of the step.
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub entries: Vec<LogEntry>,
}

pub const CSV_HEADER: &str = "iteration,l_dist,l_zero,l_field,l_cd,l_pull,l_eikonal,total";

impl TrainLog {
    pub fn push(&mut self, e: LogEntry) {
        self.entries.push(e);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn totals(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.breakdown.total).collect()
    }

    /// Mean total over the `window` entries ending at `end` (exclusive).
    pub fn smoothed_total(&self, end: usize, window: usize) -> Option<f64> {
        if end == 0 || end > self.entries.len() {
            return None;
        }
        let start = end.saturating_sub(window);
        let slice = &self.entries[start..end];
        Some(slice.iter().map(|e| e.breakdown.total).sum::<f64>() / slice.len() as f64)
    }

    /// Loss terms per iteration. Values use the shortest representation
    /// that round-trips, so identical runs give identical files.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for e in &self.entries {
            let b = &e.breakdown;
            writeln!(
                out,
                "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                e.iteration, b.l_dist, b.l_zero, b.l_field, b.l_cd, b.l_pull, b.l_eikonal, b.total
            )?;
        }
        Ok(())
    }

    /// Wall-clock seconds per iteration.
    pub fn write_timing_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "iteration,seconds")?;
        for e in &self.entries {
            writeln!(out, "{},{:.6}", e.iteration, e.seconds)?;
        }
        Ok(())
    }
}
