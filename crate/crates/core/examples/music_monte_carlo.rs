//! Seeded MUSIC Monte Carlo for the angle-only case, compared with the CRB.

use nma::music::{monte_carlo_mse, SearchSpec};
use nma::optimize::closed_form_apv;
use nma::{Case, Geometry, Scenario, TargetParams};

fn main() -> nma::Result<()> {
    let base = Scenario::reference_linear();
    let g = Geometry::Linear(closed_form_apv(&base)?);
    let eta = TargetParams::linear(base.target.u, base.target.r);
    let trials = 200;

    println!("snr   mse(u)        ±95%          crb(u)        ratio");
    for snr in [0.0, 10.0, 20.0, 30.0] {
        let sc = base.clone().with_snr_db(snr);
        let m = monte_carlo_mse(&sc, &g, &eta, Case::C11, trials, 2024, &SearchSpec::default())?;
        let (mse, ci, bound) = (m.mse.u.unwrap(), m.ci95.u.unwrap(), m.crb.u.unwrap());
        println!("{snr:>4}  {mse:.4e}  {ci:.4e}  {bound:.4e}  {:.2}", mse / bound);
    }
    Ok(())
}
