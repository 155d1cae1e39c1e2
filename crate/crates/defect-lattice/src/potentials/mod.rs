//! Site strain potentials on stencils of relative positions, plus
//! locality, point symmetry and homogeneity probes.
//!
//! A stencil is the list `g` of vectors y(m) - y(l) for the neighbours
//! m of site l. Gradients are with respect to those vectors.

pub mod eam;
pub mod pair;
pub mod tb;

pub use eam::{Density, EamParams, Embedding};
pub use pair::{pair_phi, PairForm};
pub use tb::TbParams;

use crate::error::{input, Error, Result};
use crate::lattice::BravaisLattice;
use crate::numerics::{line_fit, packing_tail, LineFit};
use crate::stencil::WeightFunction;
use crate::vec3::{add, norm, norm2, outer, scale, sub, Mat3, Vec3, ZERO3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Smooth switch-off on [rc - width, rc]; C^4, exactly zero beyond rc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Taper {
    pub rc: f64,
    pub width: f64,
}

impl Taper {
    pub fn eval(&self, r: f64) -> [f64; 3] {
        let r0 = self.rc - self.width;
        if r <= r0 {
            return [1.0, 0.0, 0.0];
        }
        if r >= self.rc {
            return [0.0; 3];
        }
        let s = (r - r0) / self.width;
        let t = 1.0 - s;
        // 1 - P(s) = P(1 - s) for the smoothstep P
        let p = t.powi(5) * (126.0 - 420.0 * t + 540.0 * t * t - 315.0 * t.powi(3) + 70.0 * t.powi(4));
        let d1 = 630.0 * (s * t).powi(4);
        let d2 = 2520.0 * (s * t).powi(3) * (1.0 - 2.0 * s);
        [p, -d1 / self.width, -d2 / (self.width * self.width)]
    }

    /// f * tau and its first two derivatives, given f derivatives.
    fn apply(&self, r: f64, f: impl FnOnce(f64) -> Result<[f64; 3]>) -> Result<[f64; 3]> {
        if r >= self.rc {
            return Ok([0.0; 3]);
        }
        let v = f(r)?;
        let t = self.eval(r);
        Ok([v[0] * t[0], v[1] * t[0] + v[0] * t[1], v[2] * t[0] + 2.0 * v[1] * t[1] + v[0] * t[2]])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case")]
pub enum Cutoff {
    Hard { rc: f64, width: f64 },
    /// Radius grown until the tail bound drops below tol times the
    /// accumulated lattice sum, capped at r_max.
    Adaptive { tol: f64, width: f64, r_max: f64 },
}

impl Default for Cutoff {
    fn default() -> Self {
        Cutoff::Hard { rc: 2.5, width: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Model {
    Pair { form: PairForm },
    Eam(EamParams),
    Tb(TbParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SitePotential {
    #[serde(flatten)]
    pub model: Model,
    #[serde(default)]
    pub cutoff: Cutoff,
}

/// Outcome of resolving an adaptive cutoff against a lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffReport {
    pub rc: f64,
    pub tail_bound: f64,
    pub accumulated: f64,
    pub met: bool,
}

impl SitePotential {
    pub fn pair(form: PairForm, rc: f64, width: f64) -> Self {
        SitePotential { model: Model::Pair { form }, cutoff: Cutoff::Hard { rc, width } }
    }

    pub fn eam(params: EamParams, rc: f64, width: f64) -> Self {
        SitePotential { model: Model::Eam(params), cutoff: Cutoff::Hard { rc, width } }
    }

    pub fn tb(params: TbParams) -> Self {
        SitePotential { model: Model::Tb(params), cutoff: Cutoff::Hard { rc: params.rc, width: params.rc } }
    }

    /// Checks parameters and the decay requirements for the defect class.
    pub fn validate(&self, dislocation: bool) -> Result<()> {
        match &self.model {
            Model::Pair { form } => {
                form.validate()?;
                if let Some(q) = form.decay_exponent() {
                    let need = if dislocation { 5.0 } else { 3.0 };
                    if !(q > need) {
                        return input(format!("pair decay exponent q = {q} must exceed {need}"));
                    }
                }
                if matches!(form, PairForm::Harmonic { .. }) && !matches!(self.cutoff, Cutoff::Hard { .. }) {
                    return input("harmonic pair form needs a hard cutoff");
                }
            }
            Model::Eam(p) => {
                p.validate()?;
                if let Some(q) = p.density.decay_exponent() {
                    let need = if dislocation { 5.0 } else { 4.5 };
                    if !(q > need) {
                        return input(format!("eam density exponent q = {q} must exceed {need}"));
                    }
                }
            }
            Model::Tb(p) => {
                p.validate()?;
                if dislocation {
                    return input("tight binding is only supported for point defects");
                }
            }
        }
        match self.cutoff {
            Cutoff::Hard { rc, width } => {
                if !(rc > 0.0) || !(width > 0.0) || width > rc {
                    return input("cutoff: need 0 < width <= rc");
                }
            }
            Cutoff::Adaptive { tol, width, r_max } => {
                if !(tol > 0.0) || !(width > 0.0) || !(r_max > width) {
                    return input("adaptive cutoff: need tol > 0 and 0 < width < r_max");
                }
            }
        }
        Ok(())
    }

    /// Radius of the stencil the potential reads. Adaptive cutoffs must be resolved first.
    /// True when stencil membership is fixed by reference vectors (tight
    /// binding ball) rather than by deformed distances.
    pub fn reference_truncation(&self) -> bool {
        matches!(self.model, Model::Tb(_))
    }

    pub fn range(&self) -> f64 {
        match (&self.model, self.cutoff) {
            (Model::Tb(p), _) => p.ball_radius,
            (_, Cutoff::Hard { rc, .. }) => rc,
            (_, Cutoff::Adaptive { r_max, .. }) => r_max,
        }
    }

    fn taper(&self) -> Taper {
        match self.cutoff {
            Cutoff::Hard { rc, width } => Taper { rc, width },
            Cutoff::Adaptive { width, r_max, .. } => Taper { rc: r_max, width },
        }
    }

    /// Replaces an adaptive policy with the hard cutoff it resolves to on `lattice`.
    pub fn resolve(&self, lattice: &BravaisLattice) -> Result<(SitePotential, CutoffReport)> {
        let Cutoff::Adaptive { tol, width, r_max } = self.cutoff else {
            let rc = self.range();
            return Ok((self.clone(), CutoffReport { rc, tail_bound: 0.0, accumulated: f64::NAN, met: true }));
        };
        let majorant: Box<dyn Fn(f64) -> f64> = match &self.model {
            Model::Pair { form } => {
                let f = *form;
                Box::new(move |r: f64| f.majorant(r))
            }
            Model::Eam(p) => {
                let d = p.density;
                Box::new(move |r: f64| d.eval(r)[0])
            }
            Model::Tb(_) => return Ok((self.clone(), CutoffReport { rc: self.range(), tail_bound: 0.0, accumulated: f64::NAN, met: true })),
        };
        let value: Box<dyn Fn(f64) -> f64> = match &self.model {
            Model::Pair { form } => {
                let f = *form;
                Box::new(move |r: f64| f.eval(r).map(|v| v[0]).unwrap_or(0.0))
            }
            Model::Eam(p) => {
                let d = p.density;
                Box::new(move |r: f64| d.eval(r)[0])
            }
            Model::Tb(_) => unreachable!(),
        };
        let dim = lattice.d;
        let r0 = lattice.nn_distance();
        let pts = lattice.points_in_ball([0.0; 3], r_max);
        let mut radii: Vec<f64> = pts.iter().map(|n| norm(lattice.position(*n))).filter(|r| *r > 0.0).collect();
        radii.sort_by(|a, b| a.total_cmp(b));
        let mut rc = (2.0 * r0).max(width + r0);
        loop {
            let acc: f64 = radii.iter().take_while(|r| **r <= rc - width).map(|r| value(*r)).sum();
            let tail = packing_tail(&|r: f64| majorant(r.max(r0)), rc - width, dim, r0);
            let met = tail < tol * acc.abs();
            if met || rc >= r_max {
                let hard = SitePotential { model: self.model.clone(), cutoff: Cutoff::Hard { rc: rc.min(r_max), width } };
                return Ok((hard, CutoffReport { rc: rc.min(r_max), tail_bound: tail, accumulated: acc, met }));
            }
            rc = (rc * 1.25).min(r_max);
        }
    }

    /// Homogeneity exponent s for a lattice of dimension `d`.
    pub fn homogeneity_exponent(&self, d: usize) -> f64 {
        match &self.model {
            Model::Eam(p) => match p.density.decay_exponent() {
                Some(q) => q - d as f64,
                None => f64::INFINITY,
            },
            _ => f64::INFINITY,
        }
    }

    /// Order of continuous differentiability of the built-in models.
    pub fn smoothness(&self) -> usize {
        4
    }

    /// Declared locality weight for derivative order `j` in dimension `d`.
    pub fn locality_weight(&self, j: usize, d: usize) -> WeightFunction {
        let alg = |q: f64| WeightFunction::algebraic(j, d, q - d as f64);
        match &self.model {
            Model::Pair { form } => match *form {
                PairForm::Morse { a, .. } => WeightFunction::exponential(a, j),
                f => alg(f.decay_exponent().unwrap_or(d as f64 + 1.0)),
            },
            Model::Eam(p) => match p.density {
                Density::Algebraic { q } => alg(q),
                Density::Exponential { beta } => WeightFunction::exponential(beta, j),
            },
            Model::Tb(p) => WeightFunction::exponential(p.locality_rate, j),
        }
    }

    fn check_stencil(g: &[Vec3]) -> Result<()> {
        for (i, x) in g.iter().enumerate() {
            let r2 = norm2(*x);
            if !(r2 > 0.0) || !r2.is_finite() {
                return Err(Error::Evaluation(format!("stencil entry {i} collides with the centre site")));
            }
        }
        Ok(())
    }

    pub fn energy(&self, g: &[Vec3]) -> Result<f64> {
        Self::check_stencil(g)?;
        let taper = self.taper();
        match &self.model {
            Model::Pair { form } => {
                let mut e = 0.0;
                for x in g {
                    e += taper.apply(norm(*x), |r| form.eval(r))?[0];
                }
                Ok(0.5 * e)
            }
            Model::Eam(p) => {
                let mut s = 0.0;
                for x in g {
                    s += taper.apply(norm(*x), |r| Ok(p.density.eval(r)))?[0];
                }
                Ok(p.embedding.eval(s)?[0])
            }
            Model::Tb(p) => p.site_energy(g),
        }
    }

    pub fn energy_gradient(&self, g: &[Vec3]) -> Result<(f64, Vec<Vec3>)> {
        Self::check_stencil(g)?;
        let taper = self.taper();
        match &self.model {
            Model::Pair { form } => {
                let mut e = 0.0;
                let mut grad = Vec::with_capacity(g.len());
                for x in g {
                    let r = norm(*x);
                    let v = taper.apply(r, |r| form.eval(r))?;
                    e += v[0];
                    grad.push(scale(0.5 * v[1] / r, *x));
                }
                Ok((0.5 * e, grad))
            }
            Model::Eam(p) => {
                let mut s = 0.0;
                let mut dens = Vec::with_capacity(g.len());
                for x in g {
                    let r = norm(*x);
                    let v = taper.apply(r, |r| Ok(p.density.eval(r)))?;
                    s += v[0];
                    dens.push((r, v[1]));
                }
                let j = p.embedding.eval(s)?;
                let grad = g.iter().zip(&dens).map(|(x, (r, d1))| scale(j[1] * d1 / r, *x)).collect();
                Ok((j[0], grad))
            }
            Model::Tb(p) => Ok((p.site_energy(g)?, p.site_gradient(g, self.fd_step(g))?)),
        }
    }

    pub fn gradient(&self, g: &[Vec3]) -> Result<Vec<Vec3>> {
        Ok(self.energy_gradient(g)?.1)
    }

    fn fd_step(&self, g: &[Vec3]) -> f64 {
        let nn = g.iter().map(|x| norm(*x)).fold(f64::INFINITY, f64::min);
        1e-3 * if nn.is_finite() { nn } else { 1.0 }
    }

    /// Second partial block d^2 Phi / dg_i dg_j.
    pub fn hessian_block(&self, g: &[Vec3], i: usize, j: usize) -> Result<Mat3> {
        Self::check_stencil(g)?;
        if i >= g.len() || j >= g.len() {
            return input("hessian block index out of range");
        }
        let taper = self.taper();
        let radial = |x: Vec3, d1: f64, d2: f64| -> Mat3 {
            // d1 ghat ghat^T... in the form d2 ghat ghat^T + d1/r (I - ghat ghat^T)
            let r = norm(x);
            let u = scale(1.0 / r, x);
            let uu = outer(u, u);
            let mut m = ZERO3;
            for a in 0..3 {
                for b in 0..3 {
                    let id = if a == b { 1.0 } else { 0.0 };
                    m[a][b] = d2 * uu[a][b] + d1 / r * (id - uu[a][b]);
                }
            }
            m
        };
        match &self.model {
            Model::Pair { form } => {
                if i != j {
                    return Ok(ZERO3);
                }
                let v = taper.apply(norm(g[i]), |r| form.eval(r))?;
                let m = radial(g[i], v[1], v[2]);
                Ok(m.map(|row| row.map(|x| 0.5 * x)))
            }
            Model::Eam(p) => {
                let mut s = 0.0;
                for x in g {
                    s += taper.apply(norm(*x), |r| Ok(p.density.eval(r)))?[0];
                }
                let jv = p.embedding.eval(s)?;
                let di = taper.apply(norm(g[i]), |r| Ok(p.density.eval(r)))?;
                let dj = taper.apply(norm(g[j]), |r| Ok(p.density.eval(r)))?;
                let (ui, uj) = (scale(1.0 / norm(g[i]), g[i]), scale(1.0 / norm(g[j]), g[j]));
                let mut m = outer(ui, uj).map(|row| row.map(|x| x * jv[2] * di[1] * dj[1]));
                if i == j {
                    let d = radial(g[i], di[1], di[2]);
                    for a in 0..3 {
                        for b in 0..3 {
                            m[a][b] += jv[1] * d[a][b];
                        }
                    }
                }
                Ok(m)
            }
            Model::Tb(p) => {
                let h = 1e-4 * g.iter().map(|x| norm(*x)).fold(f64::INFINITY, f64::min);
                let step = self.fd_step(g);
                let mut m = ZERO3;
                let mut work = g.to_vec();
                for b in 0..3 {
                    work[j][b] = g[j][b] + h;
                    let gp = p.site_gradient(&work, step)?;
                    work[j][b] = g[j][b] - h;
                    let gm = p.site_gradient(&work, step)?;
                    work[j][b] = g[j][b];
                    for a in 0..3 {
                        m[a][b] = (gp[i][a] - gm[i][a]) / (2.0 * h);
                    }
                }
                Ok(m)
            }
        }
    }
}

impl SitePotential {
    /// All blocks d^2 Phi / dg_i dg_j, row-major (n x n).
    pub fn hessian(&self, g: &[Vec3]) -> Result<Vec<Mat3>> {
        let n = g.len();
        let mut out = vec![ZERO3; n * n];
        match &self.model {
            Model::Pair { .. } => {
                for i in 0..n {
                    out[i * n + i] = self.hessian_block(g, i, i)?;
                }
            }
            Model::Eam(_) => {
                for i in 0..n {
                    for j in 0..n {
                        out[i * n + j] = self.hessian_block(g, i, j)?;
                    }
                }
            }
            Model::Tb(p) => {
                let h = 1e-4 * g.iter().map(|x| norm(*x)).fold(f64::INFINITY, f64::min);
                let step = self.fd_step(g);
                let planar = g.iter().all(|x| x[2] == 0.0);
                let comps = if planar { 2 } else { 3 };
                let cols: Result<Vec<(usize, usize, Vec<Vec3>)>> = (0..n * comps)
                    .into_par_iter()
                    .map(|jb| {
                        let (j, b) = (jb / comps, jb % comps);
                        let mut work = g.to_vec();
                        work[j][b] = g[j][b] + h;
                        let gp = p.site_gradient(&work, step)?;
                        work[j][b] = g[j][b] - h;
                        let gm = p.site_gradient(&work, step)?;
                        Ok((j, b, gp.iter().zip(&gm).map(|(a, c)| scale(0.5 / h, sub(*a, *c))).collect()))
                    })
                    .collect();
                for (j, b, col) in cols? {
                    for i in 0..n {
                        for a in 0..3 {
                            out[i * n + j][a][b] = col[i][a];
                        }
                    }
                }
                // symmetrise the difference quotient
                for i in 0..n {
                    for j in 0..=i {
                        for a in 0..3 {
                            for b in 0..3 {
                                let v = 0.5 * (out[i * n + j][a][b] + out[j * n + i][b][a]);
                                out[i * n + j][a][b] = v;
                                out[j * n + i][b][a] = v;
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// One entry of a homogeneous lattice stencil: integer offset, periodic
/// image index along the column (zero without columns), and position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeVector {
    pub n: [i64; 3],
    pub image: i64,
    pub x: Vec3,
}

/// All nonzero lattice vectors (with column images) of length at most `radius`,
/// in a deterministic order.
pub fn lattice_stencil(lattice: &BravaisLattice, radius: f64) -> Vec<LatticeVector> {
    let mut out = Vec::new();
    for n in lattice.points_in_ball([0.0; 3], radius) {
        let base = lattice.position(n);
        match lattice.column {
            None => {
                if n != [0, 0, 0] {
                    out.push(LatticeVector { n, image: 0, x: base });
                }
            }
            Some(c) => {
                let z0 = c.height(n);
                let zr = (radius * radius - norm2(base)).max(0.0).sqrt();
                let lo = ((-zr - z0) / c.period).ceil() as i64;
                let hi = ((zr - z0) / c.period).floor() as i64;
                for m in lo..=hi {
                    let x = [base[0], base[1], z0 + m as f64 * c.period];
                    if norm2(x) > 0.0 && norm(x) <= radius {
                        out.push(LatticeVector { n, image: m, x });
                    }
                }
            }
        }
    }
    out
}

/// Stencil of the site `l` in an explicit finite configuration, within `radius`.
pub fn configuration_stencil(y: &[Vec3], l: usize, radius: f64) -> (Vec<usize>, Vec<Vec3>) {
    let mut idx = Vec::new();
    let mut g = Vec::new();
    for (m, ym) in y.iter().enumerate() {
        if m == l {
            continue;
        }
        let d = sub(*ym, y[l]);
        if norm(d) <= radius {
            idx.push(m);
            g.push(d);
        }
    }
    (idx, g)
}

/// Site energy of `l` in the configuration `y`.
pub fn site_energy(pot: &SitePotential, y: &[Vec3], l: usize) -> Result<f64> {
    let (_, g) = configuration_stencil(y, l, pot.range());
    pot.energy(&g)
}

/// Map m -> dPhi_l/dy(m) over the interaction window of `l` (m = l included).
pub fn site_gradient(pot: &SitePotential, y: &[Vec3], l: usize) -> Result<Vec<(usize, Vec3)>> {
    let (idx, g) = configuration_stencil(y, l, pot.range());
    let grad = pot.gradient(&g)?;
    let mut centre = [0.0; 3];
    let mut out = Vec::with_capacity(idx.len() + 1);
    for (m, d) in idx.iter().zip(&grad) {
        centre = sub(centre, *d);
        out.push((*m, *d));
    }
    out.push((l, centre));
    out.sort_by_key(|p| p.0);
    Ok(out)
}

/// Block d^2 Phi_l / dy(l + rho) dy(l + sigma) for neighbours given by index.
pub fn second_partials(pot: &SitePotential, y: &[Vec3], l: usize, rho: usize, sigma: usize) -> Result<Mat3> {
    let (idx, g) = configuration_stencil(y, l, pot.range());
    let find = |m: usize| idx.iter().position(|&k| k == m).ok_or_else(|| Error::Input(format!("site {m} is outside the interaction window of {l}")));
    pot.hessian_block(&g, find(rho)?, find(sigma)?)
}

#[derive(Debug, Clone)]
pub struct LocalityReport {
    pub order: usize,
    /// (shell radius, max |partial| over the shell)
    pub shells: Vec<(f64, f64)>,
    pub power_fit: Option<LineFit>,
    pub exponential_fit: Option<LineFit>,
    /// max over shells of envelope / declared weight
    pub dominance_constant: f64,
    /// envelope / weight does not grow from the inner to the outer shells
    pub dominated: bool,
    pub insufficient_range: bool,
}

/// Envelope of first (order 1) or diagonal second (order 2) partials of the
/// homogeneous site potential versus |rho|, fitted on [rmin, rmax].
pub fn locality_probe(pot: &SitePotential, lattice: &BravaisLattice, order: usize, rmin: f64, rmax: f64) -> Result<LocalityReport> {
    if !(order == 1 || order == 2) {
        return input("locality probe supports orders 1 and 2");
    }
    let stencil = lattice_stencil(lattice, pot.range());
    let g: Vec<Vec3> = stencil.iter().map(|v| v.x).collect();
    let mags: Vec<f64> = if order == 1 {
        let grad = pot.gradient(&g)?;
        grad.iter().map(|v| norm(*v)).collect()
    } else {
        let blocks: Result<Vec<Mat3>> = (0..g.len()).into_par_iter().map(|i| pot.hessian_block(&g, i, i)).collect();
        blocks?.iter().map(|m| m.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()).collect()
    };
    let mut pairs: Vec<(f64, f64)> = g.iter().map(|x| norm(*x)).zip(mags).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut shells: Vec<(f64, f64)> = Vec::new();
    for (r, v) in pairs {
        match shells.last_mut() {
            Some(last) if (r - last.0).abs() <= 1e-9 * r.max(1.0) => last.1 = last.1.max(v),
            _ => shells.push((r, v)),
        }
    }
    let w = pot.locality_weight(order, lattice.d);
    let fit_pts: Vec<(f64, f64)> = shells.iter().copied().filter(|(r, v)| *r >= rmin && *r <= rmax && *v > 0.0).collect();
    let lx: Vec<f64> = fit_pts.iter().map(|p| p.0.ln()).collect();
    let x: Vec<f64> = fit_pts.iter().map(|p| p.0).collect();
    let ly: Vec<f64> = fit_pts.iter().map(|p| p.1.ln()).collect();
    let ratios: Vec<f64> = shells.iter().map(|(r, v)| v / w.eval(*r)).collect();
    let dominance_constant = ratios.iter().copied().fold(0.0, f64::max);
    let half = ratios.len() / 2;
    let inner = ratios[..half].iter().copied().fold(0.0, f64::max);
    let outer_max = ratios[half..].iter().copied().fold(0.0, f64::max);
    Ok(LocalityReport {
        order,
        power_fit: line_fit(&lx, &ly),
        exponential_fit: line_fit(&x, &ly),
        dominance_constant,
        dominated: half == 0 || outer_max <= inner * (1.0 + 1e-9),
        insufficient_range: fit_pts.len() < 3,
        shells,
    })
}

/// Max |V(-g_{-rho}) - V(g)| over random perturbations of the homogeneous stencil.
pub fn point_symmetry_check(pot: &SitePotential, lattice: &BravaisLattice, samples: usize, amplitude: f64, seed: u64) -> Result<f64> {
    let stencil = lattice_stencil(lattice, pot.range());
    let key = |v: &LatticeVector| (v.n, v.image);
    let mut order: Vec<usize> = (0..stencil.len()).collect();
    order.sort_by_key(|&i| key(&stencil[i]));
    let partner: Vec<usize> = stencil
        .iter()
        .map(|v| {
            let target = ([-v.n[0], -v.n[1], -v.n[2]], -v.image);
            let k = order.binary_search_by(|&i| key(&stencil[i]).cmp(&target)).expect("lattice stencil is inversion symmetric");
            order[k]
        })
        .collect();
    let sites: Vec<[i64; 3]> = {
        let mut s: Vec<[i64; 3]> = stencil.iter().map(|v| v.n).collect();
        s.push([0, 0, 0]);
        s.sort();
        s.dedup();
        s
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let comps = lattice.ds;
    let mut worst: f64 = 0.0;
    for sample in 0..=samples {
        let u: Vec<Vec3> = sites
            .iter()
            .map(|_| {
                let mut v = [0.0; 3];
                for c in v.iter_mut().take(comps) {
                    *c = if sample == 0 { 0.0 } else { amplitude * rng.gen_range(-1.0..1.0) };
                }
                v
            })
            .collect();
        let at = |n: [i64; 3]| u[sites.binary_search(&n).unwrap()];
        let u0 = at([0, 0, 0]);
        let g: Vec<Vec3> = stencil.iter().map(|v| add(v.x, sub(at(v.n), u0))).collect();
        let gs: Vec<Vec3> = partner.iter().map(|&k| scale(-1.0, g[k])).collect();
        let diff = (pot.energy(&gs)? - pot.energy(&g)?).abs();
        worst = worst.max(diff);
    }
    Ok(worst)
}

#[derive(Debug, Clone)]
pub struct HomogeneityReport {
    pub matched: usize,
    pub max_discrepancy: f64,
    /// max over matched pairs of (1 + r)^-s w_1(|rho|)
    pub bound_scale: f64,
}

/// Compares first partials of site `l1` in `y_def` with site `l2` in `y_hom`
/// over neighbours within `r` whose relative positions agree.
pub fn homogeneity_check(pot: &SitePotential, y_def: &[Vec3], y_hom: &[Vec3], l1: usize, l2: usize, r: f64, d: usize) -> Result<HomogeneityReport> {
    let (i1, g1) = configuration_stencil(y_def, l1, r);
    let (_, g2) = configuration_stencil(y_hom, l2, r);
    let tol = 1e-9;
    let mut match2 = vec![usize::MAX; g1.len()];
    let mut used = vec![false; g2.len()];
    for (a, x) in g1.iter().enumerate() {
        match g2.iter().enumerate().find(|(b, z)| !used[*b] && norm(sub(*x, **z)) <= tol) {
            Some((b, _)) => {
                used[b] = true;
                match2[a] = b;
            }
            None => return input(format!("configurations do not match within radius {r}: neighbour {} of the defective site has no partner", i1[a])),
        }
    }
    if used.iter().any(|u| !u) {
        return input(format!("configurations do not match within radius {r}"));
    }
    let (f1, h1) = configuration_stencil(y_def, l1, pot.range());
    let (_, h2) = configuration_stencil(y_hom, l2, pot.range());
    let d1 = pot.gradient(&h1)?;
    let d2 = pot.gradient(&h2)?;
    let s = pot.homogeneity_exponent(d);
    let w = pot.locality_weight(1, d);
    let mut max_discrepancy: f64 = 0.0;
    let mut bound_scale: f64 = 0.0;
    for (a, x) in g1.iter().enumerate() {
        let z = g2[match2[a]];
        let p1 = f1.iter().position(|&m| m == i1[a]).map(|k| d1[k]).unwrap_or([0.0; 3]);
        let p2 = h2.iter().position(|v| norm(sub(*v, z)) <= tol).map(|k| d2[k]).unwrap_or([0.0; 3]);
        max_discrepancy = max_discrepancy.max(norm(sub(p1, p2)));
        let rho = norm(*x);
        bound_scale = bound_scale.max(if s.is_finite() { (1.0 + r).powf(-s) * w.eval(rho) } else { 0.0 });
    }
    Ok(HomogeneityReport { matched: g1.len(), max_discrepancy, bound_scale })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lj(rc: f64) -> SitePotential {
        SitePotential::pair(PairForm::LjClassic { eps: 1.0, sigma: 1.0 }, rc, 0.5)
    }

    fn eam() -> SitePotential {
        SitePotential::eam(EamParams { embedding: Embedding::MinusSqrt, density: Density::Algebraic { q: 6.0 } }, 3.0, 0.75)
    }

    fn random_stencil(n: usize, seed: u64) -> Vec<Vec3> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| loop {
                let x = [rng.gen_range(-2.5..2.5), rng.gen_range(-2.5..2.5), rng.gen_range(-2.5..2.5)];
                if norm(x) > 0.8 && norm(x) < 2.9 {
                    break x;
                }
            })
            .collect()
    }

    fn fd_gradient(pot: &SitePotential, g: &[Vec3], h: f64) -> Vec<Vec3> {
        let mut out = vec![[0.0; 3]; g.len()];
        let mut w = g.to_vec();
        for i in 0..g.len() {
            for c in 0..3 {
                w[i][c] = g[i][c] + h;
                let p = pot.energy(&w).unwrap();
                w[i][c] = g[i][c] - h;
                let m = pot.energy(&w).unwrap();
                w[i][c] = g[i][c];
                out[i][c] = (p - m) / (2.0 * h);
            }
        }
        out
    }

    #[test]
    fn taper_is_smooth_and_exact() {
        let t = Taper { rc: 2.0, width: 0.5 };
        assert_eq!(t.eval(1.5), [1.0, 0.0, 0.0]);
        assert_eq!(t.eval(2.0), [0.0; 3]);
        let h = 1e-6;
        for r in [1.6, 1.75, 1.9] {
            let v = t.eval(r);
            assert!(((t.eval(r + h)[0] - t.eval(r - h)[0]) / (2.0 * h) - v[1]).abs() < 1e-7);
            assert!(((t.eval(r + h)[1] - t.eval(r - h)[1]) / (2.0 * h) - v[2]).abs() < 1e-5);
        }
        assert!((t.eval(2.0 - 1e-4)[0]).abs() < 1e-15);
    }

    #[test]
    fn dimer_pair_energy_is_half_bond() {
        let pot = lj(3.0);
        let r = 1.1;
        let phi = pot.energy(&[[r, 0.0, 0.0]]).unwrap();
        assert!((phi - 0.5 * pair_phi(&PairForm::LjClassic { eps: 1.0, sigma: 1.0 }, r).unwrap()[0]).abs() < 1e-15);
        let g = pot.gradient(&[[r, 0.0, 0.0]]).unwrap();
        let d = 0.5 * pair_phi(&PairForm::LjClassic { eps: 1.0, sigma: 1.0 }, r).unwrap()[1];
        assert!((g[0][0] - d).abs() < 1e-15);
    }

    #[test]
    fn eam_dimer() {
        let pot = SitePotential::eam(EamParams { embedding: Embedding::MinusSqrt, density: Density::Exponential { beta: 1.0 } }, 5.0, 1.0);
        let r = 1.3;
        let phi = pot.energy(&[[0.0, r, 0.0]]).unwrap();
        assert!((phi + (-r / 2.0).exp()).abs() < 1e-15);
    }

    #[test]
    fn harmonic_block_is_rank_one() {
        let pot = SitePotential::pair(PairForm::Harmonic { k: 1.0, r0: 1.0 }, 2.0, 0.5);
        let b = pot.hessian_block(&[[0.0, 1.0, 0.0]], 0, 0).unwrap();
        for a in 0..3 {
            for c in 0..3 {
                let e = if a == 1 && c == 1 { 1.0 } else { 0.0 };
                assert!((b[a][c] - e).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn pair_off_diagonal_blocks_vanish() {
        let pot = lj(3.0);
        let g = random_stencil(5, 1);
        assert_eq!(pot.hessian_block(&g, 0, 3).unwrap(), ZERO3);
    }

    #[test]
    fn gradients_match_differences() {
        let morse = SitePotential::pair(PairForm::Morse { d: 1.0, a: 1.5, r0: 1.1 }, 3.0, 0.7);
        for pot in [lj(3.0), morse, eam()] {
            for seed in 0..4 {
                let g = random_stencil(12, seed);
                let an = pot.gradient(&g).unwrap();
                let fd = fd_gradient(&pot, &g, 1e-6);
                let scale_ = an.iter().map(|v| norm(*v)).fold(0.0, f64::max);
                for (a, b) in an.iter().zip(&fd) {
                    assert!(norm(sub(*a, *b)) <= 1e-6 * scale_, "{:?}", pot.model);
                }
            }
        }
    }

    #[test]
    fn eam_blocks_match_gradient_differences() {
        let pot = eam();
        let g = random_stencil(3, 7);
        let h = 1e-6;
        for i in 0..3 {
            for j in 0..3 {
                let b = pot.hessian_block(&g, i, j).unwrap();
                for c in 0..3 {
                    let mut p = g.clone();
                    p[j][c] += h;
                    let mut m = g.clone();
                    m[j][c] -= h;
                    let (gp, gm) = (pot.gradient(&p).unwrap(), pot.gradient(&m).unwrap());
                    for a in 0..3 {
                        let fd = (gp[i][a] - gm[i][a]) / (2.0 * h);
                        assert!((fd - b[a][c]).abs() < 1e-6 * (1.0 + b[a][c].abs()));
                    }
                }
            }
        }
    }

    #[test]
    fn exchange_symmetry() {
        let pot = eam();
        let g = random_stencil(6, 3);
        for i in 0..6 {
            for j in 0..6 {
                let (a, b) = (pot.hessian_block(&g, i, j).unwrap(), pot.hessian_block(&g, j, i).unwrap());
                for x in 0..3 {
                    for y in 0..3 {
                        assert!((a[x][y] - b[y][x]).abs() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn point_symmetry_identities() {
        let lat = BravaisLattice::triangular(1.1);
        assert_eq!(point_symmetry_check(&lj(2.5), &lat, 0, 0.05, 1).unwrap(), 0.0);
        assert!(point_symmetry_check(&lj(2.5), &lat, 20, 0.05, 1).unwrap() <= 1e-12);
        assert!(point_symmetry_check(&eam(), &lat, 20, 0.05, 2).unwrap() <= 1e-12);
    }

    #[test]
    fn lj_first_partials_decay_like_phi_prime() {
        let pot = lj(22.0);
        let lat = BravaisLattice::square(1.0);
        let rep = locality_probe(&pot, &lat, 1, 2.0, 20.0).unwrap();
        let fit = rep.power_fit.unwrap();
        assert!((fit.slope + 7.0).abs() < 0.1, "{}", fit.slope);
        assert!(!rep.insufficient_range);
        assert!(rep.dominated);
    }

    #[test]
    fn hard_cutoff_is_exact() {
        let pot = lj(2.5);
        let lat = BravaisLattice::square(1.0);
        let g: Vec<Vec3> = lattice_stencil(&lat, 4.0).iter().map(|v| v.x).collect();
        let grad = pot.gradient(&g).unwrap();
        for (x, d) in g.iter().zip(grad) {
            if norm(*x) >= 2.5 {
                assert_eq!(d, [0.0; 3]);
            }
        }
    }

    #[test]
    fn pair_homogeneity_is_exact() {
        let lat = BravaisLattice::square(1.1);
        let pts: Vec<Vec3> = lat.points_in_ball([0.0; 3], 8.0).iter().map(|n| lat.position(*n)).collect();
        let vac = pts.iter().position(|x| norm(*x) == 0.0).unwrap();
        let mut def = pts.clone();
        def.remove(vac);
        // site at (4,0) against its homogeneous counterpart, matched within radius 3
        let l1 = def.iter().position(|x| norm(sub(*x, [4.4, 0.0, 0.0])) < 1e-12).unwrap();
        let l2 = pts.iter().position(|x| norm(sub(*x, [4.4, 0.0, 0.0])) < 1e-12).unwrap();
        let rep = homogeneity_check(&lj(2.5), &def, &pts, l1, l2, 3.0, 2).unwrap();
        assert_eq!(rep.max_discrepancy, 0.0);
        assert!(rep.matched > 15);
        // radius large enough to see the vacancy breaks the matching condition
        assert!(homogeneity_check(&lj(2.5), &def, &pts, l1, l2, 5.0, 2).is_err());
    }

    #[test]
    fn adaptive_cutoff_reaches_tolerance() {
        let pot = SitePotential { model: Model::Pair { form: PairForm::LjClassic { eps: 1.0, sigma: 1.0 } }, cutoff: Cutoff::Adaptive { tol: 1e-4, width: 0.5, r_max: 40.0 } };
        let (hard, rep) = pot.resolve(&BravaisLattice::triangular(1.1)).unwrap();
        assert!(rep.met);
        assert!(rep.tail_bound < 1e-4 * rep.accumulated.abs());
        assert!(matches!(hard.cutoff, Cutoff::Hard { .. }));
    }

    #[test]
    fn decay_requirements() {
        let weak = SitePotential::pair(PairForm::Lj { p: 8.0, q: 4.0, c1: 1.0, c2: 1.0 }, 2.5, 0.5);
        assert!(weak.validate(false).is_ok());
        assert!(weak.validate(true).is_err());
        let e = SitePotential::eam(EamParams { embedding: Embedding::MinusSqrt, density: Density::Algebraic { q: 4.0 } }, 3.0, 0.5);
        assert!(e.validate(false).is_err());
    }
}
