//! Config-driven sweep through the library API, the same path the `nma
//! sweep` command takes.

use nma::cli::{run_sweep, RunConfig};

const CONFIG: &str = r#"
case = "c12"

[scenario]
dim = "1d"
wavelength = 0.02
aperture = "20 lambda"
antenna_count = 20

[sweep]
axis = "snr"
values = [0, 10, 20, 30]
"#;

fn main() -> nma::Result<()> {
    let cfg = RunConfig::parse(CONFIG, None)?;
    for row in run_sweep(&cfg)? {
        match (row.sum, &row.error) {
            (Some(s), _) => println!("{:>4} dB  {:<11} {s:.4e}", row.value, row.scheme.name()),
            (None, Some(e)) => println!("{:>4} dB  {:<11} failed: {e}", row.value, row.scheme.name()),
            _ => unreachable!(),
        }
    }
    Ok(())
}
