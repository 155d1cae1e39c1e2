//! Fourier stability scan: Z^2 springs (c_min = 4/pi^2) and a negative-stiffness toy.

use defect_lattice::homogeneous::{force_constants, stability_scan};
use defect_lattice::lattice::BravaisLattice;
use defect_lattice::potentials::{PairForm, SitePotential};

fn main() -> defect_lattice::Result<()> {
    let lat = BravaisLattice::square(1.0);
    for k in [0.5, -0.5] {
        let pot = SitePotential::pair(PairForm::Harmonic { k, r0: 0.0 }, 1.2, 0.1);
        let fc = force_constants(&pot, &lat, &[0])?;
        let rep = stability_scan(&fc, 256)?;
        println!("k = {k:+}: c_min = {:.6} at k = ({:.3}, {:.3}), stable = {}", rep.c_min, rep.argmin_k[0], rep.argmin_k[1], rep.stable);
    }
    println!("4/pi^2 = {:.6}", 4.0 / std::f64::consts::PI.powi(2));
    Ok(())
}
