use std::io::{Read, Write};

use super::{HeightField, Result};

/// 16-bit binary PGM, north up. Occupied cells scale linearly onto
/// `1..=65535` between the field's min and max; unoccupied cells are 0.
pub fn to_pgm(hf: &HeightField) -> Vec<u8> {
    let g = hf.grid;
    let (lo, hi) = hf
        .occupied_elevations()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), z| (lo.min(z), hi.max(z)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut out = format!("P5\n{} {}\n65535\n", g.nx, g.ny).into_bytes();
    out.reserve(g.len() * 2);
    for j in (0..g.ny).rev() {
        for i in 0..g.nx {
            let v: u16 = match hf.get(i, j) {
                Some(z) => 1 + ((z - lo) / span * 65534.0).round() as u16,
                None => 0,
            };
            out.extend_from_slice(&v.to_be_bytes());
        }
    }
    out
}

/// Lossless JSON dump (grid header, elevation, masks, epoch, rule).
pub fn write_height_field_json<W: Write>(hf: &HeightField, out: W) -> Result<()> {
    serde_json::to_writer(out, hf)?;
    Ok(())
}

pub fn read_height_field_json<R: Read>(input: R) -> Result<HeightField> {
    let hf: HeightField = serde_json::from_reader(input)?;
    hf.validate()?;
    Ok(hf)
}
