//! Writes a small cloud in each supported format, reads it back, and runs
//! the box and index queries on it.
//!
//! ```text
//! cargo run --example read_clouds
//! ```

use voidstack::cloud::{bounding_box, build_index, crop, read_cloud, serialize_cloud};
use voidstack::{Aabb, CloudFormat, Point3, PointCloud};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile_dir();
    let cloud = PointCloud::from_xyz((0..400).map(|k| {
        let (x, y) = ((k % 20) as f64 * 0.5, (k / 20) as f64 * 0.5);
        [x, y, 0.2 * x + (y * 0.7).sin()]
    }))?;

    for (format, name) in [
        (CloudFormat::PlyAscii, "grid-ascii.ply"),
        (CloudFormat::PlyBinaryLe, "grid-binary.ply"),
        (CloudFormat::XyzText, "grid.xyz"),
    ] {
        let path = dir.join(name);
        std::fs::write(&path, serialize_cloud(&cloud, format))?;
        // the format is sniffed from the bytes
        let back = read_cloud(&path, None)?;
        println!("{name:16} {:6} bytes, {} points, identical: {}", std::fs::metadata(&path)?.len(), back.len(), back.points == cloud.points);
    }

    let b = bounding_box(&cloud)?;
    println!("bounding box {:?} .. {:?}", b.min, b.max);
    let window = crop(&cloud, &Aabb::from_xy([2.0, 2.0], [4.0, 4.0])?);
    println!("crop to [2,4]x[2,4]: {} points", window.cloud.len());

    let index = build_index(&cloud, 1.0)?;
    let q = Point3::new(3.1, 4.2, 0.0);
    if let Some((k, d)) = index.nearest(&q, 2.0) {
        println!("nearest to {:?}: #{k} at {:?}, {d:.3} m away", q.xyz(), cloud.points[k].xyz());
    }
    Ok(())
}

fn tempfile_dir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join("voidstack-read-clouds");
    std::fs::create_dir_all(&dir).expect("temp dir");
    dir
}
