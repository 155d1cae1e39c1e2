//! Decay-rate estimation on per-site fields and cell-size convergence studies.

mod convergence;

pub use convergence::{cell_convergence, ConvergenceRow, ConvergenceStudy};

use crate::error::{input, Result};
use crate::numerics::line_fit;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

pub const SHELL_RATIO: f64 = 1.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecayModel {
    Power,
    PowerLog,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shell {
    pub r_lo: f64,
    pub r_hi: f64,
    /// radius of the site attaining the maximum
    pub r_max_site: f64,
    pub max: f64,
    pub mean: f64,
    pub mean_radius: f64,
    pub count: usize,
}

#[derive(Debug, Clone)]
pub struct DecayFit {
    pub model: DecayModel,
    pub shells: Vec<Shell>,
    pub exponent: f64,
    pub intercept: f64,
    pub r2: f64,
    pub rms: f64,
    /// 95% confidence half-width of the exponent
    pub half_width: f64,
    /// exponent of the mean envelope, for reference
    pub mean_exponent: f64,
}

/// Multiplicative bins [rmin * 1.25^k, rmin * 1.25^(k+1)) covering [rmin, rmax].
pub fn shells(radii: &[f64], values: &[f64], rmin: f64, rmax: f64) -> Result<Vec<Shell>> {
    if radii.len() != values.len() {
        return input("radii and values differ in length");
    }
    if !(rmin > 0.0) || !(rmax > rmin) {
        return input(format!("invalid fit range [{rmin}, {rmax}]"));
    }
    let nb = ((rmax / rmin).ln() / SHELL_RATIO.ln()).ceil().max(1.0) as usize;
    let edge = |k: usize| if k == nb { rmax } else { rmin * SHELL_RATIO.powi(k as i32) };
    let mut out: Vec<Shell> = (0..nb)
        .map(|k| Shell { r_lo: edge(k), r_hi: edge(k + 1), r_max_site: f64::NAN, max: f64::NEG_INFINITY, mean: 0.0, mean_radius: 0.0, count: 0 })
        .collect();
    for (r, v) in radii.iter().zip(values) {
        if *r < rmin || *r > rmax {
            continue;
        }
        let mut k = (((r / rmin).ln() / SHELL_RATIO.ln()).floor() as usize).min(nb - 1);
        // guard against rounding at bin edges
        while k > 0 && *r < out[k].r_lo {
            k -= 1;
        }
        while k + 1 < nb && *r >= out[k].r_hi {
            k += 1;
        }
        let s = &mut out[k];
        if *v > s.max || (*v == s.max && *r < s.r_max_site) {
            s.max = *v;
            s.r_max_site = *r;
        }
        s.mean += v;
        s.mean_radius += r;
        s.count += 1;
    }
    for (k, s) in out.iter_mut().enumerate() {
        if s.count == 0 {
            return Err(crate::Error::Input(format!("shell {k} [{}, {}) is empty", s.r_lo, s.r_hi)));
        }
        s.mean /= s.count as f64;
        s.mean_radius /= s.count as f64;
    }
    Ok(out)
}

fn model_value(model: DecayModel, r: f64, v: f64) -> f64 {
    match model {
        DecayModel::Power => v,
        DecayModel::PowerLog => v / (2.0 + r).ln(),
    }
}

/// Least squares on log(max per shell) against log(radius).
pub fn decay_fit(radii: &[f64], values: &[f64], rmin: f64, rmax: f64, model: DecayModel) -> Result<DecayFit> {
    let sh = shells(radii, values, rmin, rmax)?;
    if sh.len() < 6 {
        return input(format!("decay fit needs at least 6 shells, range [{rmin}, {rmax}] gives {}", sh.len()));
    }
    if sh.iter().any(|s| !(s.max > 0.0)) {
        return input("decay fit needs positive envelope values in every shell");
    }
    let x: Vec<f64> = sh.iter().map(|s| s.r_max_site.ln()).collect();
    let y: Vec<f64> = sh.iter().map(|s| model_value(model, s.r_max_site, s.max).ln()).collect();
    let fit = line_fit(&x, &y).ok_or_else(|| crate::Error::Numeric("degenerate decay regression".into()))?;
    let xm: Vec<f64> = sh.iter().map(|s| s.mean_radius.ln()).collect();
    let ym: Vec<f64> = sh.iter().map(|s| model_value(model, s.mean_radius, s.mean).ln()).collect();
    let mean_fit = line_fit(&xm, &ym).ok_or_else(|| crate::Error::Numeric("degenerate decay regression".into()))?;
    let dof = (sh.len() - 2) as f64;
    let t = StudentsT::new(0.0, 1.0, dof).map(|d| d.inverse_cdf(0.975)).unwrap_or(f64::NAN);
    if !fit.slope.is_finite() {
        return Err(crate::Error::Numeric("decay exponent is not finite".into()));
    }
    Ok(DecayFit {
        model,
        exponent: fit.slope,
        intercept: fit.intercept,
        r2: fit.r2,
        rms: fit.rms,
        half_width: t * fit.slope_se,
        mean_exponent: mean_fit.slope,
        shells: sh,
    })
}
