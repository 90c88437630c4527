//! Flat snapshots: a little-endian binary layout and CSV for small grids.
//!
//! Binary layout: magic `TWLF`, `u32` version, origin `[f64; 3]`, extent `[f64; 3]`,
//! resolution `[u64; 3]`, frame rows `[f64; 9]`, periodic flags `[u8; 3]`, then the
//! row-major `f64` samples.

use std::io::{Read, Write};

use nalgebra::Matrix3;

use super::domain::BoxDomain;
use super::scalar::ScalarField;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"TWLF";
const VERSION: u32 = 1;

/// Grids larger than this are refused by [`write_csv`].
pub const CSV_MAX_CELLS: usize = 1 << 20;

pub fn write_binary<W: Write>(field: &ScalarField, mut w: W) -> Result<()> {
    let d = field.domain();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for v in d.origin().iter().chain(d.extent().iter()) {
        w.write_all(&v.to_le_bytes())?;
    }
    for n in d.resolution() {
        w.write_all(&(n as u64).to_le_bytes())?;
    }
    let frame = d.frame();
    for r in 0..3 {
        for c in 0..3 {
            w.write_all(&frame[(r, c)].to_le_bytes())?;
        }
    }
    w.write_all(&d.periodic().map(u8::from))?;
    for v in field.samples() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_binary<R: Read>(mut r: R) -> Result<ScalarField> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::InvalidArgument("not a field snapshot".into()));
    }
    let mut v = [0u8; 4];
    r.read_exact(&mut v)?;
    if u32::from_le_bytes(v) != VERSION {
        return Err(Error::InvalidArgument(format!(
            "unsupported snapshot version {}",
            u32::from_le_bytes(v)
        )));
    }
    let mut origin = [0.0; 3];
    let mut extent = [0.0; 3];
    for o in origin.iter_mut() {
        *o = read_f64(&mut r)?;
    }
    for e in extent.iter_mut() {
        *e = read_f64(&mut r)?;
    }
    let mut resolution = [0usize; 3];
    for n in resolution.iter_mut() {
        let mut b = [0u8; 8];
        r.read_exact(&mut b)?;
        *n = usize::try_from(u64::from_le_bytes(b))
            .map_err(|_| Error::InvalidDomain("resolution overflows usize".into()))?;
    }
    let mut frame = Matrix3::zeros();
    for row in 0..3 {
        for col in 0..3 {
            frame[(row, col)] = read_f64(&mut r)?;
        }
    }
    let mut p = [0u8; 3];
    r.read_exact(&mut p)?;
    let domain =
        BoxDomain::with_frame(origin, extent, resolution, frame)?.with_periodic(p.map(|b| b != 0));
    let mut samples = Vec::with_capacity(domain.len());
    for _ in 0..domain.len() {
        samples.push(read_f64(&mut r)?);
    }
    ScalarField::new(domain, samples)
}

/// One row per cell: lab-frame center and value.
pub fn write_csv<W: Write>(field: &ScalarField, mut w: W) -> Result<()> {
    let d = field.domain();
    if d.len() > CSV_MAX_CELLS {
        return Err(Error::InvalidArgument(format!(
            "{} cells is too many for CSV export (limit {CSV_MAX_CELLS})",
            d.len()
        )));
    }
    writeln!(w, "x,y,z,value")?;
    for (i, v) in field.samples().iter().enumerate() {
        let c = d.center(i);
        writeln!(w, "{:?},{:?},{:?},{:?}", c.x, c.y, c.z, v)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_round_trip() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let r = Matrix3::new(s, s, 0.0, -s, s, 0.0, 0.0, 0.0, 1.0);
        let d = BoxDomain::with_frame([0.1, -2.0, 0.0], [1.0, 2.0, 0.5], [3, 4, 2], r)
            .unwrap()
            .with_periodic([false, true, false]);
        let f = ScalarField::from_fn(d, |x| x.x.sin() * x.y);
        let mut buf = Vec::new();
        write_binary(&f, &mut buf).unwrap();
        assert_eq!(buf.len(), 4 + 4 + 48 + 24 + 72 + 3 + 8 * 24);
        assert_eq!(read_binary(buf.as_slice()).unwrap(), f);
    }

    #[test]
    fn csv_has_one_row_per_cell() {
        let f = ScalarField::constant(BoxDomain::unit_cube(2).unwrap(), 1.5);
        let mut buf = Vec::new();
        write_csv(&f, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 9);
        assert!(text.lines().nth(1).unwrap().ends_with(",1.5"));
    }
}
