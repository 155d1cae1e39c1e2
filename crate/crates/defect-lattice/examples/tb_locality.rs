//! Exponential locality of a tight-binding site energy.

use defect_lattice::lattice::BravaisLattice;
use defect_lattice::potentials::{locality_probe, SitePotential, TbParams};

fn main() -> defect_lattice::Result<()> {
    let pot = SitePotential::tb(TbParams { ball_radius: 5.0, ..TbParams::default() });
    let rep = locality_probe(&pot, &BravaisLattice::triangular(1.0), 1, 1.0, 4.5)?;
    // shells at the edge of the eigensolve ball carry truncation artifacts
    for (r, e) in rep.shells.iter().filter(|s| s.0 <= 4.5) {
        println!("  r = {r:.3}  max |dPhi/dy| = {e:.3e}");
    }
    let fit = rep.exponential_fit.expect("enough shells");
    println!("fitted rate gamma = {:.3}, R2 = {:.4}", -fit.slope, fit.r2);
    Ok(())
}
