//! Summarizes an externally measured void table and prints it back in the
//! export format.
//!
//! ```text
//! cargo run --example reference_table
//! ```

use voidstack::pipeline::{export_table, ReportBundle, VoidRecord};
use voidstack::{Cause, CauseSource, VoidMetrics};

fn main() {
    // the six voids reported for the Surfside pile
    let rows = [
        ("Yellow", 29.10, 2.28, 0.37, 4.23, 2.87, Cause::Excavation),
        ("Cyan", 34.53, 1.88, 0.33, 4.25, 6.25, Cause::Excavation),
        ("Orange", 41.71, 1.45, 0.15, 5.03, 6.91, Cause::Excavation),
        ("Purple", 28.71, 1.19, 0.20, 6.37, 5.06, Cause::Excavation),
        ("Pink", 10.94, 1.14, 0.26, 3.41, 5.73, Cause::Natural),
        ("Green", 10.33, 0.82, 0.23, 2.69, 5.91, Cause::Natural),
    ];
    let records = rows
        .iter()
        .enumerate()
        .map(|(k, &(name, v, hmax, hmin, xz, yz, cause))| {
            let m = VoidMetrics {
                approx_volume: v,
                max_height: hmax,
                min_height: hmin,
                xz_width: xz,
                yz_width: yz,
                surface_access: false,
                cause,
                cause_source: CauseSource::Human,
            };
            VoidRecord::from_metrics(k as u32 + 1, Some(name.into()), m)
        })
        .collect();
    let report = ReportBundle::from_records(records, 0.0);
    let s = &report.summary;
    println!(
        "{} voids: mean max height {:.2} m, mean min height {:.2} m, mean cross-section width {:.2} m",
        s.count,
        s.mean_max_height.unwrap_or(f64::NAN),
        s.mean_min_height.unwrap_or(f64::NAN),
        s.mean_cross_width.unwrap_or(f64::NAN)
    );
    print!("{}", export_table(&report));
}
