//! Exhaustive search for the worst AoA of an asymmetric planar layout.
//!
//! For symmetric layouts the angle-only worst case sits at broadside. The
//! layout in `fixtures/asymmetric_apm.csv` is skewed in y, which moves the
//! maximum a few degrees off broadside while barely changing its value.

use std::path::Path;

use nma::crb::worst_case_search;
use nma::{Case, Geometry, Scenario};

fn main() -> nma::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/asymmetric_apm.csv");
    let g = Geometry::from_csv(&std::fs::read_to_string(path)?)?;

    let mut sc = Scenario::reference_planar();
    sc.antenna_count = g.len();

    let w = worst_case_search(Case::C21, &sc, &g, 191)?;
    let (u, v, r) = w.params.uvr();
    let theta = v.acos().to_degrees();
    let phi = (u / theta.to_radians().sin()).acos().to_degrees();
    println!("worst case at u={u:.3}, v={v:.3} (θ={theta:.2}°, φ={phi:.2}°) for r = {r:.1} m");
    println!(
        "bound sum {:.6e} vs {:.6e} at broadside, relative gap {:.2e} over {} cells",
        w.value, w.analytic_value, w.gap, w.evaluated
    );
    Ok(())
}
