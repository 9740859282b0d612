//! Deterministic raster (PPM) and SVG drawings of a slice profile.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{Result, SliceError, SliceProfile};

/// Per-epoch line colors, assigned in stack order and cycled.
pub const EPOCH_PALETTE: [[u8; 3]; 8] = [
    [31, 119, 180],
    [255, 127, 14],
    [44, 160, 44],
    [214, 39, 40],
    [148, 103, 189],
    [140, 86, 75],
    [227, 119, 194],
    [127, 127, 127],
];

const BACKGROUND: [u8; 3] = [255, 255, 255];
const GRID: [u8; 3] = [225, 225, 225];
const AXIS: [u8; 3] = [90, 90, 90];
const MAX_SIDE: f64 = 4096.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderStyle {
    pub pixels_per_meter: f64,
    pub vertical_exaggeration: f64,
    pub margin: u32,
    /// Grid line spacing in meters, both axes.
    pub tick_spacing: f64,
}

impl Default for RenderStyle {
    fn default() -> Self {
        Self {
            pixels_per_meter: 8.0,
            vertical_exaggeration: 2.0,
            margin: 16,
            tick_spacing: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Raster {
    pub width: u32,
    pub height: u32,
    /// RGB, row-major from the top-left pixel.
    pub data: Vec<u8>,
}

impl Raster {
    fn new(width: u32, height: u32, fill: [u8; 3]) -> Self {
        let data = fill.iter().copied().cycle().take(width as usize * height as usize * 3).collect();
        Self { width, height, data }
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let k = (y as usize * self.width as usize + x as usize) * 3;
        [self.data[k], self.data[k + 1], self.data[k + 2]]
    }

    fn put(&mut self, x: i64, y: i64, c: [u8; 3]) {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            return;
        }
        let k = (y as usize * self.width as usize + x as usize) * 3;
        self.data[k..k + 3].copy_from_slice(&c);
    }

    fn line(&mut self, (mut x0, mut y0): (i64, i64), (x1, y1): (i64, i64), c: [u8; 3]) {
        let dx = (x1 - x0).abs();
        let dy = -(y1 - y0).abs();
        let sx = if x0 < x1 { 1 } else { -1 };
        let sy = if y0 < y1 { 1 } else { -1 };
        let mut err = dx + dy;
        loop {
            self.put(x0, y0, c);
            if x0 == x1 && y0 == y1 {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x0 += sx;
            }
            if e2 <= dx {
                err += dx;
                y0 += sy;
            }
        }
    }

    /// Binary PPM (P6).
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.data);
        out
    }
}

/// Maps profile coordinates (station, elevation) to pixel coordinates.
struct Frame {
    s0: f64,
    z_top: f64,
    sx: f64,
    sz: f64,
    margin: f64,
    width: u32,
    height: u32,
    s_span: f64,
    z_span: f64,
}

impl Frame {
    fn new(p: &SliceProfile, style: &RenderStyle) -> Result<Self> {
        let (Some(&s0), Some(&s1)) = (p.stations.first(), p.stations.last()) else {
            return Err(SliceError::EmptyProfile);
        };
        let (z_lo, z_hi) = p.elevation_range().unwrap_or((0.0, 1.0));
        let z_bottom = z_lo.floor() - 1.0;
        let z_top = z_hi.ceil() + 1.0;
        let s_span = (s1 - s0).max(style.tick_spacing.max(1e-6));
        let z_span = z_top - z_bottom;
        let exaggeration = if style.vertical_exaggeration > 0.0 { style.vertical_exaggeration } else { 1.0 };
        let mut ppm = if style.pixels_per_meter > 0.0 { style.pixels_per_meter } else { 8.0 };
        ppm = ppm.min(MAX_SIDE / s_span).min(MAX_SIDE / (z_span * exaggeration));
        let margin = style.margin as f64;
        let width = (2.0 * margin + (s_span * ppm).ceil() + 1.0) as u32;
        let height = (2.0 * margin + (z_span * ppm * exaggeration).ceil() + 1.0) as u32;
        Ok(Self {
            s0,
            z_top,
            sx: ppm,
            sz: ppm * exaggeration,
            margin,
            width,
            height,
            s_span,
            z_span,
        })
    }

    fn x(&self, s: f64) -> f64 {
        self.margin + (s - self.s0) * self.sx
    }

    fn y(&self, z: f64) -> f64 {
        self.margin + (self.z_top - z) * self.sz
    }

    fn ticks(start: f64, span: f64, step: f64) -> impl Iterator<Item = f64> {
        let first = (start / step).ceil();
        let last = ((start + span) / step).floor();
        (first as i64..=last as i64).map(move |k| k as f64 * step)
    }
}

/// Runs of consecutive occupied stations, as index ranges.
fn runs(occupied: &[bool]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (k, o) in occupied.iter().enumerate() {
        match (o, start) {
            (true, None) => start = Some(k),
            (false, Some(s)) => {
                out.push((s, k));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, occupied.len()));
    }
    out
}

/// Draws one polyline per epoch layer over a meter grid. Unoccupied stations
/// break the line.
pub fn render_profile(p: &SliceProfile, style: &RenderStyle) -> Result<Raster> {
    let f = Frame::new(p, style)?;
    let mut img = Raster::new(f.width, f.height, BACKGROUND);
    let step = if style.tick_spacing > 0.0 { style.tick_spacing } else { 1.0 };
    let (x0, x1) = (f.x(f.s0).round() as i64, f.x(f.s0 + f.s_span).round() as i64);
    let (y0, y1) = (f.y(f.z_top).round() as i64, f.y(f.z_top - f.z_span).round() as i64);
    for s in Frame::ticks(f.s0, f.s_span, step) {
        let x = f.x(s).round() as i64;
        img.line((x, y0), (x, y1), GRID);
    }
    for z in Frame::ticks(f.z_top - f.z_span, f.z_span, step) {
        let y = f.y(z).round() as i64;
        img.line((x0, y), (x1, y), GRID);
    }
    img.line((x0, y1), (x1, y1), AXIS);
    img.line((x0, y0), (x0, y1), AXIS);

    for (k, layer) in p.layers.iter().enumerate() {
        let color = EPOCH_PALETTE[k % EPOCH_PALETTE.len()];
        for (a, b) in runs(&layer.occupied) {
            let pts: Vec<(i64, i64)> = (a..b)
                .map(|i| (f.x(p.stations[i]).round() as i64, f.y(layer.elevation[i]).round() as i64))
                .collect();
            if pts.len() == 1 {
                img.put(pts[0].0, pts[0].1, color);
            }
            for w in pts.windows(2) {
                img.line(w[0], w[1], color);
            }
        }
    }
    Ok(img)
}

/// SVG counterpart of [`render_profile`] with the same geometry.
pub fn render_profile_svg(p: &SliceProfile, style: &RenderStyle) -> Result<String> {
    let f = Frame::new(p, style)?;
    let step = if style.tick_spacing > 0.0 { style.tick_spacing } else { 1.0 };
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = f.width,
        h = f.height
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (xa, xb) = (f.x(f.s0), f.x(f.s0 + f.s_span));
    let (ya, yb) = (f.y(f.z_top), f.y(f.z_top - f.z_span));
    let _ = writeln!(svg, r##"<g stroke="#e1e1e1" stroke-width="1">"##);
    for s in Frame::ticks(f.s0, f.s_span, step) {
        let x = f.x(s);
        let _ = writeln!(svg, r#"<line x1="{x:.2}" y1="{ya:.2}" x2="{x:.2}" y2="{yb:.2}"/>"#);
    }
    for z in Frame::ticks(f.z_top - f.z_span, f.z_span, step) {
        let y = f.y(z);
        let _ = writeln!(svg, r#"<line x1="{xa:.2}" y1="{y:.2}" x2="{xb:.2}" y2="{y:.2}"/>"#);
    }
    let _ = writeln!(svg, "</g>");
    for (k, layer) in p.layers.iter().enumerate() {
        let [r, g, b] = EPOCH_PALETTE[k % EPOCH_PALETTE.len()];
        let _ = writeln!(
            svg,
            r##"<g class="epoch" data-epoch="{}" stroke="#{r:02x}{g:02x}{b:02x}" fill="none" stroke-width="1.5">"##,
            layer.epoch.to_rfc3339()
        );
        for (a, bnd) in runs(&layer.occupied) {
            let pts: Vec<String> = (a..bnd)
                .map(|i| format!("{:.2},{:.2}", f.x(p.stations[i]), f.y(layer.elevation[i])))
                .collect();
            let _ = writeln!(svg, r#"<polyline points="{}"/>"#, pts.join(" "));
        }
        let _ = writeln!(svg, "</g>");
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
