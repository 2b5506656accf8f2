//! Plain-text exchange formats: CSV tables and the phase-mask file.
//!
//! Floats are written with `{:.16e}` (17 significant digits), which round-trips
//! every finite `f64`. Lines starting with `#` are comments, except for the
//! phase-mask header, which carries the mask geometry.

use std::io::{self, BufRead, Write};

use ndarray::Array2;
use thiserror::Error;

use crate::analysis::{FadingSampleSet, SweepPoint};
use crate::grid::PowerDensityMap;
use crate::opa::PhasedArray;
use crate::split::Partition;

#[derive(Error, Debug)]
pub enum FormatError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

fn parse_err(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Parse { line, msg: msg.into() }
}

/// `x_m,y_m,w_per_m2`, one row per cell, `y` outer and `x` inner.
pub fn write_map_csv<W: Write>(map: &PowerDensityMap, mut w: W) -> io::Result<()> {
    writeln!(w, "x_m,y_m,w_per_m2")?;
    for i in 0..map.ny() {
        let y = map.y(i);
        for j in 0..map.nx() {
            writeln!(w, "{:.16e},{:.16e},{:.16e}", map.x(j), y, map.values()[[i, j]])?;
        }
    }
    Ok(())
}

pub const PHASE_HEADER: &str = "# opa-phase v1";

/// Phase mask: header `# opa-phase v1 M N pitch_m d_m`, then `M` lines of `N`
/// comma-separated phases in radians.
pub fn write_phase_mask<W: Write>(array: &PhasedArray, mut w: W) -> io::Result<()> {
    writeln!(
        w,
        "{PHASE_HEADER} {} {} {:.16e} {:.16e}",
        array.rows(),
        array.cols(),
        array.pitch(),
        array.active()
    )?;
    for row in array.phase().rows() {
        let line: Vec<String> = row.iter().map(|p| format!("{p:.16e}")).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

/// Reads a mask written by [`write_phase_mask`]; other comment lines are skipped.
pub fn read_phase_mask<R: BufRead>(r: R) -> Result<PhasedArray, FormatError> {
    let mut header: Option<(usize, usize, f64, f64)> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (k, line) in r.lines().enumerate() {
        let line = line?;
        let lineno = k + 1;
        let t = line.trim();
        if let Some(rest) = t.strip_prefix(PHASE_HEADER) {
            let f: Vec<&str> = rest.split_whitespace().collect();
            if f.len() != 4 {
                return Err(parse_err(lineno, "phase header needs M N pitch_m d_m"));
            }
            let int = |s: &str| s.parse::<usize>().map_err(|e| parse_err(lineno, e.to_string()));
            let num = |s: &str| s.parse::<f64>().map_err(|e| parse_err(lineno, e.to_string()));
            header = Some((int(f[0])?, int(f[1])?, num(f[2])?, num(f[3])?));
            continue;
        }
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        if header.is_none() {
            return Err(parse_err(lineno, "data before the phase header"));
        }
        let row = t
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|e| parse_err(lineno, e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    let (m, n, pitch, d) = header.ok_or_else(|| parse_err(0, "missing phase header"))?;
    if rows.len() != m || rows.iter().any(|r| r.len() != n) {
        return Err(parse_err(0, format!("expected {m}x{n} phases")));
    }
    let phase = Array2::from_shape_vec((m, n), rows.into_iter().flatten().collect())
        .map_err(|e| parse_err(0, e.to_string()))?;
    PhasedArray::new(m, n, pitch, d)
        .and_then(|a| a.with_phase(phase))
        .map_err(|e| parse_err(0, e.to_string()))
}

/// `row,col,group` with group `0` for idle elements.
pub fn write_partition_csv<W: Write>(partition: &Partition, mut w: W) -> io::Result<()> {
    writeln!(w, "row,col,group")?;
    for i in 0..partition.rows() {
        for j in 0..partition.cols() {
            writeln!(w, "{i},{j},{}", partition.group(i, j))?;
        }
    }
    Ok(())
}

/// `dx_m,dy_m,power_w`; out-of-window offsets get an empty power field.
pub fn write_sweep_csv<W: Write>(points: &[SweepPoint], mut w: W) -> io::Result<()> {
    writeln!(w, "dx_m,dy_m,power_w")?;
    for p in points {
        match p.power {
            Ok(v) => writeln!(w, "{:.16e},{:.16e},{v:.16e}", p.dx, p.dy)?,
            Err(_) => writeln!(w, "{:.16e},{:.16e},", p.dx, p.dy)?,
        }
    }
    Ok(())
}

/// `sample_idx,power_w`.
pub fn write_samples_csv<W: Write>(samples: &FadingSampleSet, mut w: W) -> io::Result<()> {
    writeln!(w, "sample_idx,power_w")?;
    for (k, p) in samples.powers.iter().enumerate() {
        writeln!(w, "{k},{p:.16e}")?;
    }
    Ok(())
}
