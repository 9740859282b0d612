//! Geometric base types and point-cloud ingestion.
//!
//! All coordinates are meters in a site frame with Z pointing up, stored in
//! double precision so that large projected offsets keep centimeter detail.

mod index;
mod ply;
mod xyz;

use std::fs;
use std::io::Write;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use index::{build_index, GridIndex};

#[derive(Debug, Error)]
pub enum CloudError {
    #[error("point cloud contains no points")]
    EmptyCloud,
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("non-finite coordinate at record {record}")]
    NonFiniteValue { record: usize },
    #[error("invalid record {record}: {message}")]
    InvalidRecord { record: usize, message: String },
    #[error("cell size must be positive, got {0}")]
    NonPositiveCell(f64),
    #[error("invalid bounding box: {0}")]
    InvalidBox(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CloudError>;

/// A point in the site frame, optionally colored.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<[u8; 3]>,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z, color: None }
    }

    pub const fn with_color(mut self, rgb: [u8; 3]) -> Self {
        self.color = Some(rgb);
        self
    }

    pub fn from_array(p: [f64; 3]) -> Self {
        Self::new(p[0], p[1], p[2])
    }

    pub fn xyz(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn distance_squared(&self, other: &Point3) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        dx * dx + dy * dy + dz * dz
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        self.distance_squared(other).sqrt()
    }
}

/// One epoch's points together with the acquisition time of its flight.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Point3>,
    pub epoch: DateTime<Utc>,
    pub source_label: String,
}

impl PointCloud {
    /// Builds a cloud, rejecting non-finite coordinates.
    ///
    /// Emptiness is allowed here (crops may legitimately be empty); loaders
    /// reject empty inputs with [`CloudError::EmptyCloud`].
    pub fn new(points: Vec<Point3>, epoch: DateTime<Utc>, source_label: impl Into<String>) -> Result<Self> {
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(CloudError::NonFiniteValue { record: i + 1 });
        }
        Ok(Self {
            points,
            epoch,
            source_label: source_label.into(),
        })
    }

    /// Builds an undated cloud from raw coordinates.
    pub fn from_xyz(coords: impl IntoIterator<Item = [f64; 3]>) -> Result<Self> {
        let points = coords.into_iter().map(Point3::from_array).collect();
        Self::new(points, DateTime::<Utc>::UNIX_EPOCH, "")
    }

    pub fn with_epoch(mut self, epoch: DateTime<Utc>) -> Self {
        self.epoch = epoch;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.source_label = label.into();
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Axis-aligned box with closed bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Aabb {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Result<Self> {
        if min.iter().chain(max.iter()).any(|c| !c.is_finite()) {
            return Err(CloudError::InvalidBox("non-finite corner".into()));
        }
        if (0..3).any(|c| min[c] > max[c]) {
            return Err(CloudError::InvalidBox(format!("min {min:?} exceeds max {max:?}")));
        }
        Ok(Self { min, max })
    }

    /// Box spanning the given XY rectangle and every elevation.
    pub fn from_xy(min: [f64; 2], max: [f64; 2]) -> Result<Self> {
        Self::new([min[0], min[1], f64::MIN], [max[0], max[1], f64::MAX])
    }

    pub fn contains(&self, p: &Point3) -> bool {
        self.contains_xy(p.x, p.y) && p.z >= self.min[2] && p.z <= self.max[2]
    }

    pub fn contains_xy(&self, x: f64, y: f64) -> bool {
        x >= self.min[0] && x <= self.max[0] && y >= self.min[1] && y <= self.max[1]
    }

    pub fn extent(&self) -> [f64; 3] {
        [self.max[0] - self.min[0], self.max[1] - self.min[1], self.max[2] - self.min[2]]
    }

    pub fn center(&self) -> [f64; 3] {
        [
            0.5 * (self.min[0] + self.max[0]),
            0.5 * (self.min[1] + self.max[1]),
            0.5 * (self.min[2] + self.max[2]),
        ]
    }

    /// Overlap of two boxes, `None` when they are disjoint.
    pub fn intersection(&self, other: &Aabb) -> Option<Aabb> {
        let mut min = [0.0; 3];
        let mut max = [0.0; 3];
        for c in 0..3 {
            min[c] = self.min[c].max(other.min[c]);
            max[c] = self.max[c].min(other.max[c]);
            if min[c] > max[c] {
                return None;
            }
        }
        Some(Aabb { min, max })
    }
}

/// Rectangle in site XY. Membership is half-open, `[min, max)`, so that
/// rectangles aligned to a raster claim whole cells.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Rect {
    pub fn new(min: [f64; 2], max: [f64; 2]) -> Result<Self> {
        let r = Self { min, max };
        r.validate()?;
        Ok(r)
    }

    pub fn from_center(center: [f64; 2], size: [f64; 2]) -> Result<Self> {
        Self::new(
            [center[0] - 0.5 * size[0], center[1] - 0.5 * size[1]],
            [center[0] + 0.5 * size[0], center[1] + 0.5 * size[1]],
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.min.iter().chain(&self.max).any(|c| !c.is_finite()) {
            return Err(CloudError::InvalidBox("non-finite corner".into()));
        }
        if self.min[0] >= self.max[0] || self.min[1] >= self.max[1] {
            return Err(CloudError::InvalidBox(format!("empty rectangle {:?}..{:?}", self.min, self.max)));
        }
        Ok(())
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.min[0] && x < self.max[0] && y >= self.min[1] && y < self.max[1]
    }

    /// True when `other` lies inside this rectangle (edges may touch).
    pub fn encloses(&self, other: &Rect) -> bool {
        other.min[0] >= self.min[0] && other.min[1] >= self.min[1] && other.max[0] <= self.max[0] && other.max[1] <= self.max[1]
    }

    /// True when the interiors intersect; touching edges do not count.
    pub fn overlaps(&self, other: &Rect) -> bool {
        self.min[0] < other.max[0] && other.min[0] < self.max[0] && self.min[1] < other.max[1] && other.min[1] < self.max[1]
    }

    pub fn size(&self) -> [f64; 2] {
        [self.max[0] - self.min[0], self.max[1] - self.min[1]]
    }

    pub fn area(&self) -> f64 {
        let [w, h] = self.size();
        w * h
    }

    pub fn center(&self) -> [f64; 2] {
        [0.5 * (self.min[0] + self.max[0]), 0.5 * (self.min[1] + self.max[1])]
    }

    /// Shrinks every side by `d`; `None` if nothing is left.
    pub fn inset(&self, d: f64) -> Option<Rect> {
        let r = Rect {
            min: [self.min[0] + d, self.min[1] + d],
            max: [self.max[0] - d, self.max[1] - d],
        };
        (r.min[0] < r.max[0] && r.min[1] < r.max[1]).then_some(r)
    }

    /// Distance from (x, y) to the nearest side, negative outside.
    pub fn inner_distance(&self, x: f64, y: f64) -> f64 {
        (x - self.min[0]).min(self.max[0] - x).min(y - self.min[1]).min(self.max[1] - y)
    }

    pub fn to_aabb(&self) -> Aabb {
        Aabb::from_xy(self.min, self.max).expect("validated rectangle")
    }
}

pub fn bounding_box(cloud: &PointCloud) -> Result<Aabb> {
    let first = cloud.points.first().ok_or(CloudError::EmptyCloud)?;
    let mut min = first.xyz();
    let mut max = min;
    for p in &cloud.points[1..] {
        for (c, v) in p.xyz().into_iter().enumerate() {
            min[c] = min[c].min(v);
            max[c] = max[c].max(v);
        }
    }
    Ok(Aabb { min, max })
}

/// Result of [`crop`]; an empty crop is not an error but is flagged.
#[derive(Clone, Debug, PartialEq)]
pub struct Cropped {
    pub cloud: PointCloud,
    pub empty: bool,
}

/// Keeps exactly the points inside the closed box, in input order.
pub fn crop(cloud: &PointCloud, region: &Aabb) -> Cropped {
    let points: Vec<Point3> = cloud.points.iter().copied().filter(|p| region.contains(p)).collect();
    let empty = points.is_empty();
    Cropped {
        cloud: PointCloud {
            points,
            epoch: cloud.epoch,
            source_label: cloud.source_label.clone(),
        },
        empty,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CloudFormat {
    PlyAscii,
    PlyBinaryLe,
    XyzText,
}

impl CloudFormat {
    /// Sniffs the PLY magic and format line; anything else is XYZ text.
    pub fn detect(bytes: &[u8]) -> Result<CloudFormat> {
        if !(bytes.starts_with(b"ply\n") || bytes.starts_with(b"ply\r\n")) {
            return Ok(CloudFormat::XyzText);
        }
        let head = &bytes[..bytes.len().min(4096)];
        let text = String::from_utf8_lossy(head);
        for line in text.lines().skip(1) {
            let line = line.trim();
            if let Some(rest) = line.strip_prefix("format ") {
                return match rest.split_whitespace().next() {
                    Some("ascii") => Ok(CloudFormat::PlyAscii),
                    Some("binary_little_endian") => Ok(CloudFormat::PlyBinaryLe),
                    other => Err(CloudError::MalformedHeader(format!(
                        "unsupported PLY format {}",
                        other.unwrap_or("<missing>")
                    ))),
                };
            }
        }
        Err(CloudError::MalformedHeader("PLY header has no format line".into()))
    }

    /// Guesses from a file extension; PLY variants still need [`CloudFormat::detect`].
    pub fn from_extension(path: &Path) -> Option<CloudFormat> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "xyz" | "txt" => Some(CloudFormat::XyzText),
            _ => None,
        }
    }
}

/// Parses a cloud from bytes. When `format` is `None` it is detected.
pub fn parse_cloud(bytes: &[u8], format: Option<CloudFormat>) -> Result<PointCloud> {
    let format = match format {
        Some(f) => f,
        None => CloudFormat::detect(bytes)?,
    };
    let cloud = match format {
        CloudFormat::PlyAscii | CloudFormat::PlyBinaryLe => ply::parse(bytes, format)?,
        CloudFormat::XyzText => xyz::parse(bytes)?,
    };
    if cloud.is_empty() {
        return Err(CloudError::EmptyCloud);
    }
    Ok(cloud)
}

pub fn read_cloud(path: impl AsRef<Path>, format: Option<CloudFormat>) -> Result<PointCloud> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    let format = match format {
        Some(f) => Some(f),
        None if bytes.starts_with(b"ply") => None,
        None => CloudFormat::from_extension(path),
    };
    parse_cloud(&bytes, format)
}

/// Serializes a cloud. Epoch and label travel as header comments.
pub fn write_cloud<W: Write>(cloud: &PointCloud, format: CloudFormat, out: W) -> Result<()> {
    match format {
        CloudFormat::PlyAscii | CloudFormat::PlyBinaryLe => ply::write(cloud, format, out),
        CloudFormat::XyzText => xyz::write(cloud, out),
    }
}

pub fn serialize_cloud(cloud: &PointCloud, format: CloudFormat) -> Vec<u8> {
    let mut buf = Vec::new();
    write_cloud(cloud, format, &mut buf).expect("writing to a Vec cannot fail");
    buf
}

pub(crate) fn parse_epoch(text: &str) -> Option<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(text.trim()).ok().map(|t| t.with_timezone(&Utc))
}

pub(crate) fn format_epoch(epoch: &DateTime<Utc>) -> String {
    epoch.to_rfc3339_opts(chrono::SecondsFormat::AutoSi, true)
}
