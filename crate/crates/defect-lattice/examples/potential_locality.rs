//! Decay of site-energy derivatives for the built-in interatomic models.

use defect_lattice::lattice::BravaisLattice;
use defect_lattice::potentials::{locality_probe, point_symmetry_check, Density, EamParams, Embedding, PairForm, SitePotential};

fn main() -> defect_lattice::Result<()> {
    let lat = BravaisLattice::square(1.0);
    let models = [
        ("lennard-jones", SitePotential::pair(PairForm::LjClassic { eps: 1.0, sigma: 0.89 }, 8.0, 1.0)),
        ("morse", SitePotential::pair(PairForm::Morse { d: 1.0, a: 2.0, r0: 1.0 }, 8.0, 1.0)),
        ("eam", SitePotential::eam(EamParams { embedding: Embedding::MinusSqrt, density: Density::Algebraic { q: 6.0 } }, 8.0, 1.0)),
    ];
    for (name, pot) in models {
        let rep = locality_probe(&pot, &lat, 1, 1.0, 6.5)?;
        let sym = point_symmetry_check(&pot, &lat, 20, 0.05, 1)?;
        println!(
            "{name:14} power exponent {:+.2} (R2 {:.3})  exponential rate {:.2} (R2 {:.3})  symmetry residual {sym:.1e}",
            rep.power_fit.map_or(f64::NAN, |f| f.slope),
            rep.power_fit.map_or(f64::NAN, |f| f.r2),
            rep.exponential_fit.map_or(f64::NAN, |f| -f.slope),
            rep.exponential_fit.map_or(f64::NAN, |f| f.r2),
        );
    }
    Ok(())
}
