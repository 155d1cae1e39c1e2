//! Anti-plane screw dislocation: residual forces of the predictor and the
//! relaxed corrector, both with decay fits.

use defect_lattice::analysis::{decay_fit, DecayModel};
use defect_lattice::lattice::{BravaisLattice, Column, DefectKind, ReferenceConfig};
use defect_lattice::potentials::{PairForm, SitePotential};
use defect_lattice::predictor::{Cle, DislocationPredictor, Predictor};
use defect_lattice::relax::{equilibrium_scale, EnergyModel, MinimizeOptions, ModelOptions};
use defect_lattice::stencil::nn_norm;
use defect_lattice::vec3::norm;

fn main() -> defect_lattice::Result<()> {
    let r_dom: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(56.0);
    let b = 3.0 / (2.0 * 2f64.sqrt());
    let lat = BravaisLattice::triangular(1.0).with_column(Column { period: b, offset: [b / 3.0, -b / 3.0] })?;
    let pot = SitePotential::pair(PairForm::LjClassic { eps: 1.0, sigma: b * 2f64.powf(-1.0 / 6.0) }, 2.0, 0.4);
    let s = equilibrium_scale(&pot, &lat)?;
    let lat = lat.scaled(s);
    let core = [0.5 * s, 0.5 * s / 3f64.sqrt()];
    let p = DislocationPredictor::new(&lat, [0.0, 0.0, b * s], Some(core), 4.0, 0.5, Cle::AntiPlane)?;
    let cfg = ReferenceConfig { lattice: lat, kind: DefectKind::Dislocation, r_def: 0.0 };
    let opts = ModelOptions { components: vec![2], skin: None };
    let model = EnergyModel::with_options(cfg, pot, Predictor::Dislocation(Box::new(p)), r_dom, &opts)?;
    let f = model.residual_force()?;
    let (r, v) = f.magnitudes();
    let ff = decay_fit(&r, &v, 8.0, (r_dom / 2.0).min(48.0), DecayModel::Power)?;
    println!("residual force decays like r^{:.3}", ff.exponent);
    let res = model.minimize(&MinimizeOptions::default())?;
    println!("{} iterations, E = {:.8}", res.iterations, res.energy);
    let du = nn_norm(&model.config, &res.u)?;
    let radii: Vec<f64> = du.sites.iter().map(|s| norm(s.pos)).collect();
    let rmax = model.r_dom - model.buffer - model.potential.range();
    for m in [DecayModel::Power, DecayModel::PowerLog] {
        let fit = decay_fit(&radii, &du.values, 8.0, rmax / 2.0, m)?;
        println!("{m:?}: exponent {:.3} +- {:.3}", fit.exponent, fit.half_width);
    }
    Ok(())
}
