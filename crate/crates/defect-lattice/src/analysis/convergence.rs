//! Cell-size studies: relax on a sequence of domains and compare with the largest.

use crate::error::{input, Result};
use crate::relax::{MinimizeOptions, ModelSpec, Termination};
use crate::stencil::{nn_norm, Displacement};
use crate::vec3::{norm, sub};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub r_dom: f64,
    pub r_free: f64,
    pub energy: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    /// ||D(u_R - u_Rmax)|| over the nearest-neighbour stencil, summed on
    /// sites inside the smallest free radius.
    pub difference: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceStudy {
    pub rows: Vec<ConvergenceRow>,
    pub common_radius: f64,
    /// differences are nonincreasing in R
    pub monotone: bool,
}

pub fn cell_convergence(spec: &ModelSpec, radii: &[f64], opts: &MinimizeOptions) -> Result<ConvergenceStudy> {
    if radii.len() < 2 || radii.windows(2).any(|w| !(w[1] > w[0])) {
        return input("convergence radii must be strictly ascending with at least two entries");
    }
    let mut results = Vec::with_capacity(radii.len());
    for &r in radii {
        let model = spec.build(r)?;
        let res = model.minimize(opts)?;
        if res.reason != Termination::Converged {
            return Err(crate::Error::Numeric(format!("relaxation at R_dom = {r} stopped after {} iterations with |grad| = {:e}", res.iterations, res.grad_norm)));
        }
        results.push((model.r_free(), res));
    }
    let common = results[0].0;
    let (_, last) = results.last().expect("nonempty");
    let mut rows = Vec::with_capacity(results.len());
    for (k, (r_free, res)) in results.iter().enumerate() {
        let sites = last.u.sites.clone();
        let values = sites.iter().map(|s| sub(res.u.at(s.pos), last.u.at(s.pos))).collect();
        let w = Displacement::new(&spec.config, sites, values, last.u.clamp_radius)?;
        let norms = nn_norm(&spec.config, &w)?;
        let sq: f64 = norms.sites.iter().zip(&norms.values).filter(|(s, _)| norm(s.pos) <= common).map(|(_, v)| v * v).sum();
        rows.push(ConvergenceRow { r_dom: radii[k], r_free: *r_free, energy: res.energy, iterations: res.iterations, grad_norm: res.grad_norm, difference: sq.sqrt() });
    }
    let monotone = rows.windows(2).all(|w| w[1].difference <= w[0].difference);
    Ok(ConvergenceStudy { rows, common_radius: common, monotone })
}
