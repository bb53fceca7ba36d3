//! Endpoint-grouped layout for the angle-only and range-only linear cases,
//! and how much it lowers the worst-case bound against fixed arrays.

use nma::crb::{moments_linear, var_tilde_closed_form, worst_case_crb};
use nma::geometry::{benchmark_geometry, Benchmark, Geometry};
use nma::optimize::closed_form_apv;
use nma::{Case, Scenario};

fn main() -> nma::Result<()> {
    let mut sc = Scenario::reference_linear();
    sc.antenna_count = 16;
    sc.aperture = 10.0 * sc.wavelength;

    let x = closed_form_apv(&sc)?;
    let cm: Vec<String> = x.positions().iter().map(|p| format!("{:.0}", p * 100.0)).collect();
    println!("positions (cm): {}", cm.join(" "));
    println!(
        "var(x²): {:.6e} numeric, {:.6e} closed form",
        moments_linear(&x).var(1),
        var_tilde_closed_form(sc.aperture, sc.antenna_count, sc.min_spacing)?
    );

    let proposed = Geometry::Linear(x);
    for case in [Case::C11, Case::C12] {
        let p = worst_case_crb(case, &sc, &proposed)?.total();
        for b in [Benchmark::Ula, Benchmark::SparseUla] {
            let q = worst_case_crb(case, &sc, &benchmark_geometry(b, &sc)?)?.total();
            println!("{case}: {:5.1}% lower than {}", 100.0 * (1.0 - p / q), b.name());
        }
    }
    Ok(())
}
