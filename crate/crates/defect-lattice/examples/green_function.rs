//! Lattice Green's function of the Z^2 Laplacian and its far-field decay.

use defect_lattice::homogeneous::{force_constants, green_decay_fit, green_function, green_residual};
use defect_lattice::lattice::BravaisLattice;
use defect_lattice::potentials::{PairForm, SitePotential};

fn main() -> defect_lattice::Result<()> {
    let pot = SitePotential::pair(PairForm::Harmonic { k: 0.5, r0: 0.0 }, 1.2, 0.1);
    let fc = force_constants(&pot, &BravaisLattice::square(1.0), &[0])?;
    let g = green_function(&fc, 64.0, 1e-6, 64, 8192)?;
    let v = |n: [i64; 3]| g.get(n).expect("inside the table")[0];
    println!("k-grid {}, error estimate {:.1e}", g.kgrid, g.error_estimate);
    println!("Gamma(0) - Gamma(e1) = {:.10}", v([0, 0, 0]) - v([1, 0, 0]));
    println!("sup |H Gamma - delta| on |l| <= 32: {:.2e}", green_residual(&fc, &g, 32.0));
    let d = green_decay_fit(&g, 8.0, 64.0)?;
    println!("first differences decay with exponent {:.3}, second with {:.3}", d.first.exponent, d.second.exponent);
    Ok(())
}
