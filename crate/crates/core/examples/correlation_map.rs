//! Steering-vector correlation along u: the sparse ULA's grating lobe
//! against the endpoint-grouped layout.

use nma::correlation::{correlation_map, lobe_metrics, Projection};
use nma::geometry::{benchmark_geometry, Benchmark};
use nma::grid::{Axis, ParamGrid};
use nma::optimize::closed_form_apv;
use nma::{Geometry, Scenario, TargetParams};

fn main() -> nma::Result<()> {
    let sc = Scenario::reference_linear();
    let eta = TargetParams::linear(0.71, sc.target.r);
    let grid = ParamGrid::linear(Axis::range(-1.0, 1.0, 2001), Axis::Fixed(sc.target.r))?;

    let layouts = [
        ("sparse ULA", benchmark_geometry(Benchmark::SparseUla, &sc)?),
        ("proposed", Geometry::Linear(closed_form_apv(&sc)?)),
    ];
    for (name, g) in layouts {
        let map = correlation_map(&g, &eta, &grid, Projection::Parameter, sc.wavelength)?;
        let lm = lobe_metrics(&map)?;
        println!("{name}: main lobe -3 dB width {:.4} in u", lm.axes[0].width_3db);
        for s in lm.sidelobes.iter().take(3) {
            println!("    sidelobe R={:.3} at u'={:+.3}", s.value, s.params.u());
        }
    }
    Ok(())
}
