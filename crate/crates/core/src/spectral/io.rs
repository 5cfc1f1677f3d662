//! Field snapshots and physical-space samples.
//!
//! Snapshot text format:
//!
//! ```text
//! cflab-field 1
//! n 32 dealiased true divfree true
//! k1 k2 re1 im1 re2 im2
//! ...
//! ```
//!
//! One line per nonzero band mode; floats use the shortest representation
//! that reads back to the same value.

use super::{Grid, SpectralField};
use crate::{Error, Real, Result};
use num_complex::Complex;
use std::io::{BufRead, Write};
use std::str::FromStr;

const MAGIC: &str = "cflab-field 1";

pub fn write_snapshot<W: Write>(f: &SpectralField<f64>, mut out: W) -> Result<()> {
    let g = f.grid();
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "n {} dealiased {} divfree {}", g.n(), g.is_dealiased(), f.is_divfree())?;
    for m in g.band() {
        let [a, b] = [f.coeffs()[0][m.index], f.coeffs()[1][m.index]];
        if a.norm_sqr() == 0.0 && b.norm_sqr() == 0.0 {
            continue;
        }
        writeln!(out, "{} {} {:?} {:?} {:?} {:?}", m.k1, m.k2, a.re, a.im, b.re, b.im)?;
    }
    Ok(())
}

fn bad(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column: 1,
        message: message.into(),
    }
}

fn field<T: FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    tok.and_then(|t| t.parse().ok())
        .ok_or_else(|| bad(line, format!("expected {what}")))
}

pub fn read_snapshot<R: BufRead>(input: R) -> Result<SpectralField<f64>> {
    let mut lines = input.lines();
    let magic = lines.next().transpose()?.unwrap_or_default();
    if magic.trim() != MAGIC {
        return Err(bad(1, format!("expected `{MAGIC}`")));
    }
    let header = lines.next().transpose()?.unwrap_or_default();
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 6 || toks[0] != "n" || toks[2] != "dealiased" || toks[4] != "divfree" {
        return Err(bad(2, "expected `n <n> dealiased <bool> divfree <bool>`"));
    }
    let n: usize = field(Some(toks[1]), 2, "grid size")?;
    let dealiased: bool = field(Some(toks[3]), 2, "dealiased flag")?;
    let divfree: bool = field(Some(toks[5]), 2, "divfree flag")?;
    let grid = if dealiased { Grid::new(n)? } else { Grid::without_dealiasing(n)? };
    let mut c1 = vec![Complex::new(0.0, 0.0); grid.len()];
    let mut c2 = c1.clone();
    for (idx, line) in lines.enumerate() {
        let line = line?;
        let lineno = idx + 3;
        if line.trim().is_empty() {
            continue;
        }
        let mut t = line.split_whitespace();
        let k1: i32 = field(t.next(), lineno, "k1")?;
        let k2: i32 = field(t.next(), lineno, "k2")?;
        if !grid.in_band(k1, k2) {
            return Err(bad(lineno, format!("mode ({k1}, {k2}) outside the band")));
        }
        let vals: Vec<f64> = (0..4)
            .map(|_| field(t.next(), lineno, "coefficient"))
            .collect::<Result<_>>()?;
        let i = grid.index_of(k1, k2);
        c1[i] = Complex::new(vals[0], vals[1]);
        c2[i] = Complex::new(vals[2], vals[3]);
    }
    let f = SpectralField::from_coeffs(&grid, c1, c2)?;
    Ok(if divfree { f.assume_divfree() } else { f })
}

/// CSV `x,y,u1,u2` on every `stride`-th grid point in each direction.
pub fn write_physical_csv<T: Real, W: Write>(f: &SpectralField<T>, stride: usize, mut out: W) -> Result<()> {
    let g = f.grid();
    let n = g.n();
    let stride = stride.max(1);
    let (u1, u2) = f.to_physical();
    writeln!(out, "x,y,u1,u2")?;
    for j in (0..n).step_by(stride) {
        for i in (0..n).step_by(stride) {
            let p = j * n + i;
            writeln!(out, "{},{},{:e},{:e}", g.coordinate(i), g.coordinate(j), u1[p], u2[p])?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn snapshot_round_trip_is_exact() {
        let g = Grid::new(16).unwrap();
        let f = SpectralField::random_divfree(&g, &mut ChaCha8Rng::seed_from_u64(1));
        let mut buf = Vec::new();
        write_snapshot(&f, &mut buf).unwrap();
        let back = read_snapshot(buf.as_slice()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn snapshot_errors() {
        assert!(read_snapshot("nope\n".as_bytes()).is_err());
        let text = "cflab-field 1\nn 16 dealiased true divfree true\n9 0 1 0 0 0\n";
        match read_snapshot(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn physical_csv_has_header_and_rows() {
        let g = Grid::new(16).unwrap();
        let f = SpectralField::taylor_green(&g, 1.0);
        let mut buf = Vec::new();
        write_physical_csv(&f, 4, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 16);
        assert!(text.starts_with("x,y,u1,u2\n0,0,"));
    }
}
