//! Check the analytic policy-gradient against central finite differences on
//! random networks and random parties.
//!
//!     cargo run --release --example gradcheck [-- NETS INPUTS PER_BLOCK SEED]

use ntrl::content::ContentPack;
use ntrl::net::gradcheck;

fn main() -> ntrl::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let arg = |i: usize, d: usize| args.get(i).copied().unwrap_or(d);
    let pack = ContentPack::bundled()?;
    let report = gradcheck(&pack, arg(0, 5), arg(1, 5), arg(2, 20), arg(3, 0) as u64)?;
    println!(
        "{} cases, {} coordinates, max relative error {:.3e} (parameter {})",
        report.cases, report.coordinates, report.max_relative_error, report.worst_parameter
    );
    if report.max_relative_error >= 1e-4 {
        std::process::exit(1);
    }
    Ok(())
}
