//! Text serialization shared by the CSV writers and the state-file format.

use std::io::{BufRead, Write};

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Result, SimError};
use crate::states::DensityMatrix;

/// Formats a float with 17 significant digits, enough to round-trip any f64.
pub fn format_g17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes a density matrix in the portable text form: a `dim=N` header, then
/// one `row col re im` line per entry in row-major order.
pub fn write_density_matrix<W: Write>(rho: &DensityMatrix, mut out: W) -> std::io::Result<()> {
    let dim = rho.dim();
    writeln!(out, "dim={dim}")?;
    for row in 0..dim {
        for col in 0..dim {
            let z = rho.entries()[[row, col]];
            writeln!(
                out,
                "{row} {col} {} {}",
                format_g17(z.re),
                format_g17(z.im)
            )?;
        }
    }
    Ok(())
}

/// Reads the text form produced by [`write_density_matrix`] and validates the
/// result as a density matrix.
pub fn read_density_matrix<R: BufRead>(input: R) -> Result<DensityMatrix> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| SimError::Domain("state file is empty".into()))?
        .map_err(|e| SimError::Domain(format!("state file read error: {e}")))?;
    let dim: usize = header
        .strip_prefix("dim=")
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| SimError::Domain(format!("bad state-file header {header:?}")))?;
    if dim < 2 {
        return Err(SimError::DimensionTooSmall(dim));
    }

    let mut entries: Array2<C64> = Array2::zeros((dim, dim));
    let mut seen = vec![false; dim * dim];
    let mut count = 0usize;
    for line in lines {
        let line = line.map_err(|e| SimError::Domain(format!("state file read error: {e}")))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut fields = trimmed.split_whitespace();
        let parse_err = || SimError::Domain(format!("bad state-file line {trimmed:?}"));
        let row: usize = fields.next().and_then(|f| f.parse().ok()).ok_or_else(parse_err)?;
        let col: usize = fields.next().and_then(|f| f.parse().ok()).ok_or_else(parse_err)?;
        let re: f64 = fields.next().and_then(|f| f.parse().ok()).ok_or_else(parse_err)?;
        let im: f64 = fields.next().and_then(|f| f.parse().ok()).ok_or_else(parse_err)?;
        if fields.next().is_some() {
            return Err(parse_err());
        }
        if row >= dim || col >= dim {
            return Err(SimError::Domain(format!(
                "state-file index ({row},{col}) outside dim {dim}"
            )));
        }
        if seen[row * dim + col] {
            return Err(SimError::Domain(format!(
                "duplicate state-file entry ({row},{col})"
            )));
        }
        seen[row * dim + col] = true;
        entries[[row, col]] = C64::new(re, im);
        count += 1;
    }
    if count != dim * dim {
        return Err(SimError::Domain(format!(
            "state file has {count} entries, expected {}",
            dim * dim
        )));
    }
    DensityMatrix::new(entries)
}
