use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Writes `(trial, time)` rows under a `trial,time` header. Infinite times are
/// written as `inf`.
pub fn write_times_csv<W: Write>(mut w: W, times: &[f64]) -> Result<()> {
    writeln!(w, "trial,time")?;
    for (i, t) in times.iter().enumerate() {
        writeln!(w, "{i},{t}")?;
    }
    Ok(())
}

/// Reads what [`write_times_csv`] wrote, ignoring `#` comment lines.
pub fn read_times_csv<R: BufRead>(r: R) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    let mut header_seen = false;
    for line in r.lines() {
        let line = line?;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        if !header_seen {
            if line.trim() != "trial,time" {
                return Err(Error::Validation(format!("bad header {line:?}")));
            }
            header_seen = true;
            continue;
        }
        let (trial, t) = line
            .split_once(',')
            .ok_or_else(|| Error::Validation(format!("bad row {line:?}")))?;
        if trial.trim().parse::<usize>().ok() != Some(out.len()) {
            return Err(Error::Validation(format!("trial index out of sequence in {line:?}")));
        }
        out.push(t.trim().parse().map_err(|_| Error::Validation(format!("bad time in {line:?}")))?);
    }
    Ok(out)
}
