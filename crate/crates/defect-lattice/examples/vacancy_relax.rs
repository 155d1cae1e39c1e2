//! Relaxation of a vacancy in a triangular Lennard-Jones crystal and the
//! decay of the corrector.

use defect_lattice::analysis::{decay_fit, DecayModel};
use defect_lattice::lattice::{BravaisLattice, ReferenceConfig};
use defect_lattice::potentials::{PairForm, SitePotential};
use defect_lattice::predictor::Predictor;
use defect_lattice::relax::{equilibrium_scale, EnergyModel, MinimizeOptions};
use defect_lattice::stencil::nn_norm;
use defect_lattice::vec3::norm;

fn main() -> defect_lattice::Result<()> {
    let r_dom: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(32.0);
    let pot = SitePotential::pair(PairForm::LjClassic { eps: 1.0, sigma: 2f64.powf(-1.0 / 6.0) }, 2.5, 0.5);
    let lat = BravaisLattice::triangular(1.0);
    let s = equilibrium_scale(&pot, &lat)?;
    let cfg = ReferenceConfig::vacancy(lat.scaled(s), vec![[0, 0, 0]], 0.5)?;
    let model = EnergyModel::new(cfg, pot, Predictor::PointDefect, r_dom)?;
    let res = model.minimize(&MinimizeOptions::default())?;
    println!("lattice scale {s:.6}; {} free sites; {} iterations; E = {:.8}; |grad| = {:.1e}", model.free_sites().len(), res.iterations, res.energy, res.grad_norm);
    let du = nn_norm(&model.config, &res.u)?;
    let radii: Vec<f64> = du.sites.iter().map(|s| norm(s.pos)).collect();
    let fit = decay_fit(&radii, &du.values, 4.0, model.r_dom - model.buffer - model.potential.range(), DecayModel::Power)?;
    println!("|Du|_N decays like r^{:.3} +- {:.3}", fit.exponent, fit.half_width);
    Ok(())
}
