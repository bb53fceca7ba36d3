//! Planar layout for joint (u, v, r) estimation, started from the sparse
//! uniform planar array.

use nma::crb::worst_case_crb;
use nma::geometry::{benchmark_geometry, Benchmark};
use nma::optimize::{optimize_sampling, SamplingOptions};
use nma::{Case, Scenario};

fn main() -> nma::Result<()> {
    let sc = Scenario::reference_planar();
    let trace = optimize_sampling(Case::C23, &sc, SamplingOptions::default())?;

    let h = sc.aperture / 2.0;
    let corners = trace
        .geometry
        .points()
        .iter()
        .filter(|p| (p[0].abs() - h).abs() < 1e-12 && (p[1].abs() - h).abs() < 1e-12)
        .count();
    println!("{} antennas, {corners} on the corners", trace.geometry.len());

    let p = worst_case_crb(Case::C23, &sc, &trace.geometry)?.total();
    for b in [Benchmark::Upa, Benchmark::SparseUpa] {
        let q = worst_case_crb(Case::C23, &sc, &benchmark_geometry(b, &sc)?)?.total();
        println!("{:>10}: {q:.4e}  (proposed {p:.4e}, {:.1}% lower)", b.name(), 100.0 * (1.0 - p / q));
    }
    Ok(())
}
