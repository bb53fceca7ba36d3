//! The six bounds on one layout each, checked against a FIM built directly
//! from complex channel derivatives.

use nma::crb::{crb, fim_oracle, worst_case_params};
use nma::geometry::{benchmark_geometry, Benchmark};
use nma::{Case, Scenario};

fn main() -> nma::Result<()> {
    let lin = Scenario::reference_linear();
    let pla = Scenario::reference_planar();
    let sparse_ula = benchmark_geometry(Benchmark::SparseUla, &lin)?;
    let sparse_upa = benchmark_geometry(Benchmark::SparseUpa, &pla)?;

    println!("case  unknowns  closed form         oracle              rel. diff");
    for case in Case::ALL {
        let (sc, g) = match case.dim() {
            nma::Dim::Linear => (&lin, &sparse_ula),
            nma::Dim::Planar => (&pla, &sparse_upa),
        };
        let eta = worst_case_params(case, sc);
        let rep = crb(case, sc, g, &eta)?;
        let inv = fim_oracle(sc, g, &eta, case.unknowns())?;
        let oracle: f64 = (0..case.unknowns().len()).map(|i| inv[(i, i)]).sum();
        let names: String = case.unknowns().iter().map(|p| p.name()).collect();
        println!(
            "{case}   {names:<8}  {:<18.10e}  {oracle:<18.10e}  {:.1e}",
            rep.total(),
            (rep.total() - oracle).abs() / oracle
        );
    }
    Ok(())
}
