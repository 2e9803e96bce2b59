//! Volume-file format: one JSON header line followed by CSV data rows.
//!
//! The header line is `{"nx":…,"ny":…,"nz":…,"origin":[…],"spacing":[…],
//! "field":"…","units":"…"}` with keys in exactly that order; rows are
//! `ix,iy,iz,value` (or `ix,iy,iz,re,im` for complex samples) in the grid's
//! canonical order (iz fastest, then iy, then ix). Floats are written in
//! shortest round-trip form, so files are byte-stable across runs.

use crate::{Complex, Error, Point, Result};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

/// Regular grid: `counts[d]` points along axis d starting at `origin` with
/// step `spacing[d]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub counts: [usize; 3],
    pub origin: [f64; 3],
    pub spacing: [f64; 3],
}

impl GridSpec {
    pub fn new(counts: [usize; 3], origin: [f64; 3], spacing: [f64; 3]) -> Result<Self> {
        if counts.iter().any(|&n| n == 0) {
            return Err(Error::Validation("grid counts must be positive".into()));
        }
        if spacing.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::Validation("grid spacing must be positive".into()));
        }
        Ok(GridSpec {
            counts,
            origin,
            spacing,
        })
    }

    /// Cube of n³ points covering [centre - half, centre + half]³.
    pub fn cube(n: usize, centre: Point, half: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Validation("cube grid needs at least 2 points per axis".into()));
        }
        let step = 2.0 * half / (n - 1) as f64;
        GridSpec::new(
            [n, n, n],
            [centre[0] - half, centre[1] - half, centre[2] - half],
            [step, step, step],
        )
    }

    pub fn len(&self) -> usize {
        self.counts[0] * self.counts[1] * self.counts[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, idx: [usize; 3]) -> Point {
        Point::new(
            self.origin[0] + self.spacing[0] * idx[0] as f64,
            self.origin[1] + self.spacing[1] * idx[1] as f64,
            self.origin[2] + self.spacing[2] * idx[2] as f64,
        )
    }

    /// Position of `idx` in the canonical row order (iz fastest).
    pub fn linear_index(&self, idx: [usize; 3]) -> usize {
        (idx[0] * self.counts[1] + idx[1]) * self.counts[2] + idx[2]
    }

    /// Indices in canonical order.
    pub fn indices(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        let [nx, ny, nz] = self.counts;
        (0..nx).flat_map(move |ix| {
            (0..ny).flat_map(move |iy| (0..nz).map(move |iz| [ix, iy, iz]))
        })
    }

    /// Grid index nearest to `x` (clamped to the grid).
    pub fn nearest_index(&self, x: &Point) -> [usize; 3] {
        let mut idx = [0usize; 3];
        for d in 0..3 {
            let f = (x[d] - self.origin[d]) / self.spacing[d];
            idx[d] = (f.round().max(0.0) as usize).min(self.counts[d] - 1);
        }
        idx
    }
}

/// Header line of a volume file. Field order is part of the format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeHeader {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub origin: [f64; 3],
    pub spacing: [f64; 3],
    pub field: String,
    pub units: String,
}

impl VolumeHeader {
    pub fn for_grid(grid: &GridSpec, field: &str, units: &str) -> Self {
        VolumeHeader {
            nx: grid.counts[0],
            ny: grid.counts[1],
            nz: grid.counts[2],
            origin: grid.origin,
            spacing: grid.spacing,
            field: field.to_string(),
            units: units.to_string(),
        }
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new([self.nx, self.ny, self.nz], self.origin, self.spacing)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn check_len(header: &VolumeHeader, n: usize) -> Result<()> {
    if n != header.len() {
        return Err(Error::Validation(format!(
            "{} values for a {}×{}×{} volume",
            n, header.nx, header.ny, header.nz
        )));
    }
    Ok(())
}

/// Write a scalar volume: header line, then `ix,iy,iz,value` rows in
/// canonical order.
pub fn write_scalar_volume<W: Write>(
    mut w: W,
    header: &VolumeHeader,
    values: &[f64],
) -> Result<()> {
    check_len(header, values.len())?;
    let head = serde_json::to_string(header).map_err(|e| Error::Validation(e.to_string()))?;
    writeln!(w, "{head}")?;
    let grid = header.grid()?;
    for idx in grid.indices() {
        let v = values[grid.linear_index(idx)];
        writeln!(w, "{},{},{},{}", idx[0], idx[1], idx[2], v)?;
    }
    Ok(())
}

/// Complex variant: `ix,iy,iz,re,im` rows.
pub fn write_complex_volume<W: Write>(
    mut w: W,
    header: &VolumeHeader,
    values: &[Complex],
) -> Result<()> {
    check_len(header, values.len())?;
    let head = serde_json::to_string(header).map_err(|e| Error::Validation(e.to_string()))?;
    writeln!(w, "{head}")?;
    let grid = header.grid()?;
    for idx in grid.indices() {
        let v = values[grid.linear_index(idx)];
        writeln!(w, "{},{},{},{},{}", idx[0], idx[1], idx[2], v.re, v.im)?;
    }
    Ok(())
}

/// Read a scalar volume written by [`write_scalar_volume`]. Rows may come in
/// any order; every grid cell must appear exactly once.
pub fn read_scalar_volume<R: BufRead>(r: R) -> Result<(VolumeHeader, Vec<f64>)> {
    let mut lines = r.lines();
    let head_line = lines
        .next()
        .ok_or_else(|| Error::Validation("empty volume file".into()))??;
    let header: VolumeHeader =
        serde_json::from_str(&head_line).map_err(|e| Error::Validation(format!("bad header: {e}")))?;
    let grid = header.grid()?;
    let mut values = vec![f64::NAN; header.len()];
    let mut seen = vec![false; header.len()];
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let mut idx = [0usize; 3];
        for slot in &mut idx {
            *slot = parts
                .next()
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Validation(format!("bad index on row {}", lineno + 2)))?;
        }
        if idx.iter().zip(&grid.counts).any(|(&i, &n)| i >= n) {
            return Err(Error::Validation(format!(
                "index out of range on row {}",
                lineno + 2
            )));
        }
        let v: f64 = parts
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::Validation(format!("bad value on row {}", lineno + 2)))?;
        let li = grid.linear_index(idx);
        if seen[li] {
            return Err(Error::Validation(format!(
                "duplicate cell on row {}",
                lineno + 2
            )));
        }
        seen[li] = true;
        values[li] = v;
    }
    if !seen.iter().all(|&s| s) {
        return Err(Error::Validation("volume file is missing cells".into()));
    }
    Ok((header, values))
}
