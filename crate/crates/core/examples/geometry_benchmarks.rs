//! Benchmark layouts, near-field region bounds and geometry validation.
//!
//! ```text
//! cargo run --example geometry_benchmarks
//! ```

use nma::geometry::{benchmark_geometry, fresnel_distance, rayleigh_distance, ApvLinear, Benchmark, Dim, Geometry};
use nma::Scenario;

fn main() -> nma::Result<()> {
    let sc = Scenario::reference_linear();
    println!(
        "line of {:.2} m at λ = {} m: near field from {:.3} m to {:.1} m",
        sc.aperture,
        sc.wavelength,
        fresnel_distance(sc.aperture, sc.wavelength, Dim::Linear)?,
        rayleigh_distance(sc.aperture, sc.wavelength, Dim::Linear)?
    );

    for kind in [Benchmark::Ula, Benchmark::SparseUla] {
        let g = benchmark_geometry(kind, &sc)?;
        let x = g.as_linear()?.positions();
        println!("{:>10}: {} antennas spanning [{:.3}, {:.3}] m", kind.name(), x.len(), x[0], x[x.len() - 1]);
    }

    let planar = Scenario::reference_planar();
    for kind in [Benchmark::Upa, Benchmark::SparseUpa] {
        let g = benchmark_geometry(kind, &planar)?;
        let span = g.points().iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
        println!("{:>10}: {} antennas, half-width {span:.3} m", kind.name(), g.len());
    }

    // two antennas closer than half a wavelength, one outside the line
    let mut bad = vec![0.0, 0.004, 0.5];
    bad.extend((3..sc.antenna_count).map(|i| i as f64 * 0.015));
    let g = Geometry::Linear(ApvLinear::new(bad));
    if let Err(violations) = g.validate(&sc) {
        let names: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        println!("rejected layout: {}", names.join(", "));
    }
    Ok(())
}
