//! Runs the pipeline on a small site, serves the report on a local port and
//! exercises the API: list voids, fetch a slice profile, post a label.
//!
//! ```text
//! cargo run --release --example serve_report
//! ```

use std::net::SocketAddr;

use tokio::io::{AsyncReadExt, AsyncWriteExt};
use voidstack::pipeline::serve::{router, AppState};
use voidstack::pipeline::{run, write_scene};
use voidstack::synthetic::SceneSpec;

/// Bare HTTP/1.1 exchange; returns the response body.
async fn call(addr: SocketAddr, method: &str, path: &str, body: &str) -> std::io::Result<String> {
    let mut s = tokio::net::TcpStream::connect(addr).await?;
    let req = format!(
        "{method} {path} HTTP/1.1\r\nhost: {addr}\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
        body.len()
    );
    s.write_all(req.as_bytes()).await?;
    let mut raw = String::new();
    s.read_to_string(&mut raw).await?;
    let (head, rest) = raw.split_once("\r\n\r\n").unwrap_or((&raw, ""));
    println!("{method} {path} -> {}", head.lines().next().unwrap_or(""));
    Ok(rest.to_string())
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("voidstack-serve");
    let mut spec = SceneSpec::collapse_site();
    spec.footprint = voidstack::Rect::new([0.0, 0.0], [30.0, 30.0])?;
    spec.voids.retain(|v| spec.footprint.encloses(&v.rect().unwrap()));
    spec.excavations.retain(|e| spec.footprint.encloses(&e.region));
    spec.point_density = 150.0;
    let (config, _) = write_scene(&spec, &dir)?;
    run(&config)?;

    let state = AppState::load(config.output_path())?;
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
    let addr = listener.local_addr()?;
    tokio::spawn(async move { axum::serve(listener, router(state)).await });

    let voids: serde_json::Value = serde_json::from_str(&call(addr, "GET", "/api/voids", "").await?)?;
    for v in voids.as_array().into_iter().flatten() {
        println!("  void {} {:.2} m3 {} ({})", v["id"], v["approx_volume"].as_f64().unwrap_or(0.0), v["cause"], v["cause_source"]);
    }
    let slices: serde_json::Value = serde_json::from_str(&call(addr, "GET", "/api/slices", "").await?)?;
    if let Some(id) = slices[0]["id"].as_str() {
        let profile = call(addr, "GET", &format!("/api/slices/{id}/profile"), "").await?;
        println!("  profile {id}: {} bytes", profile.len());
    }
    let updated = call(addr, "POST", "/api/voids/1/label", r#"{"cause":"NATURAL","note":"confirmed from oblique imagery"}"#).await?;
    println!("  {updated}");
    println!("report directory {}", dir.display());
    Ok(())
}
