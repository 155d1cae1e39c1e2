//! Cell-size study for a vacancy: differences to the largest domain.

use defect_lattice::analysis::cell_convergence;
use defect_lattice::lattice::{BravaisLattice, ReferenceConfig};
use defect_lattice::potentials::{PairForm, SitePotential};
use defect_lattice::predictor::Predictor;
use defect_lattice::relax::{MinimizeOptions, ModelOptions, ModelSpec};

fn main() -> defect_lattice::Result<()> {
    let spec = ModelSpec {
        config: ReferenceConfig::vacancy(BravaisLattice::triangular(1.0), vec![[0, 0, 0]], 0.5)?,
        potential: SitePotential::pair(PairForm::LjClassic { eps: 1.0, sigma: 2f64.powf(-1.0 / 6.0) }, 2.0, 0.4),
        predictor: Predictor::PointDefect,
        options: ModelOptions::default(),
    };
    let study = cell_convergence(&spec, &[8.0, 12.0, 16.0, 24.0, 32.0], &MinimizeOptions { tol: 1e-9, ..Default::default() })?;
    println!("R_dom\tE\t||D(u_R - u_max)||");
    for r in &study.rows {
        println!("{}\t{:.10}\t{:.3e}", r.r_dom, r.energy, r.difference);
    }
    println!("monotone: {}", study.monotone);
    Ok(())
}
