//! Joint angle and range: per-antenna grid search on a line.

use nma::crb::worst_case_crb;
use nma::geometry::{benchmark_geometry, Benchmark};
use nma::optimize::{optimize_sampling_1d, SamplingGrid1D, SamplingOptions};
use nma::{Case, Scenario};

fn main() -> nma::Result<()> {
    let mut sc = Scenario::reference_linear();
    sc.antenna_count = 16;
    sc.aperture = 10.0 * sc.wavelength;

    let init = benchmark_geometry(Benchmark::SparseUla, &sc)?;
    // a grid whose step divides the minimum spacing lets antennas pack tightly
    let grid = SamplingGrid1D::aligned(&sc, SamplingGrid1D::default_intervals(&sc))?;
    let trace = optimize_sampling_1d(Case::C13, &sc, init.as_linear()?, &grid, SamplingOptions::converge())?;

    println!(
        "{} sweeps over {} grid points, objective {:.4e} -> {:.4e} (monotone: {})",
        trace.sweeps,
        grid.len(),
        trace.initial_objective,
        trace.final_objective(),
        trace.is_monotone()
    );
    let moved = trace.steps.iter().filter(|s| s.moved).count();
    println!("{moved} of {} updates moved an antenna", trace.steps.len());

    let opt = worst_case_crb(Case::C13, &sc, &trace.geometry)?.total();
    let sparse = worst_case_crb(Case::C13, &sc, &init)?.total();
    println!("worst-case CRB sum {opt:.4e} vs {sparse:.4e} for the sparse ULA");
    Ok(())
}
