//! Energy-difference functional on a clamped ball, its gradient, residual
//! forces and minimization.
//!
//! Displacements live on the free sites |l| <= R_dom - buffer, where the
//! buffer is the interaction radius plus a neighbour-list skin. Every site
//! whose stencil reaches a free site contributes V_l(g + Du) - V_l(g), with
//! `g` the reference stencil plus the predictor strain. For dislocations the
//! stencil uses e(l) and the permuted difference, so the jump of u0 across
//! the cut never enters.

pub mod optim;

pub use optim::{Evaluation, Method, MinimizeOptions, Minimum, Termination, TraceRow};

use crate::error::{input, Error, Result};
use crate::lattice::{Domain, ReferenceConfig, Site};
use crate::numerics::pairwise_sum;
use crate::potentials::{lattice_stencil, CutoffReport, SitePotential};
use crate::predictor::Predictor;
use crate::stencil::Displacement;
use crate::vec3::{add, norm, sub, Vec3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelOptions {
    /// Displacement components that may relax; empty means all of them.
    pub components: Vec<usize>,
    /// Neighbour-list skin; defaults to half the nearest-neighbour distance.
    pub skin: Option<f64>,
}

/// Everything that defines an energy model except the domain radius.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub config: ReferenceConfig,
    pub potential: SitePotential,
    pub predictor: Predictor,
    pub options: ModelOptions,
}

impl ModelSpec {
    pub fn build(&self, r_dom: f64) -> Result<EnergyModel> {
        EnergyModel::with_options(self.config.clone(), self.potential.clone(), self.predictor.clone(), r_dom, &self.options)
    }
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    base: Vec3,
    /// free index of the neighbour-side site
    a: Option<u32>,
    /// domain index of that site, for diagnostics
    site: u32,
}

#[derive(Debug, Clone)]
struct ActiveSite {
    site: u32,
    c: Option<u32>,
    entries: Vec<Entry>,
    v0: f64,
}

#[derive(Debug, Clone)]
pub struct EnergyModel {
    pub config: ReferenceConfig,
    /// Potential with its cutoff resolved to a hard radius.
    pub potential: SitePotential,
    pub cutoff: CutoffReport,
    pub predictor: Predictor,
    pub r_dom: f64,
    pub buffer: f64,
    pub skin: f64,
    pub components: Vec<usize>,
    /// Optional linear load: the functional becomes E(u) - <f, u>.
    pub load: Option<Vec<f64>>,
    free: Vec<Site>,
    domain: Domain,
    active: Vec<ActiveSite>,
    nn: f64,
}

/// One evaluation of the functional.
#[derive(Debug, Clone)]
pub struct ModelEval {
    pub energy: f64,
    pub gradient: Option<Vec<f64>>,
    /// Shortest interatomic distance in the deformed stencils.
    pub min_distance: f64,
}

#[derive(Debug, Clone)]
pub struct ForceTable {
    pub sites: Vec<Site>,
    pub forces: Vec<Vec3>,
}

impl ForceTable {
    pub fn magnitudes(&self) -> (Vec<f64>, Vec<f64>) {
        (self.sites.iter().map(|s| norm(s.pos)).collect(), self.forces.iter().map(|f| norm(*f)).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradientCheck {
    pub coordinates: usize,
    pub max_abs_error: f64,
    pub max_gradient: f64,
    /// max |fd - grad| / max |grad| over the checked coordinates
    pub relative_error: f64,
}

#[derive(Debug, Clone)]
pub struct RelaxResult {
    pub u: Displacement,
    /// Flat free-site coordinates of the minimizer.
    pub x: Vec<f64>,
    pub energy: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub trace: Vec<TraceRow>,
    pub reason: Termination,
}

impl EnergyModel {
    pub fn new(config: ReferenceConfig, potential: SitePotential, predictor: Predictor, r_dom: f64) -> Result<Self> {
        Self::with_options(config, potential, predictor, r_dom, &ModelOptions::default())
    }

    pub fn with_options(config: ReferenceConfig, potential: SitePotential, predictor: Predictor, r_dom: f64, opts: &ModelOptions) -> Result<Self> {
        config.validate()?;
        let dislocation = predictor.is_dislocation();
        if dislocation != matches!(config.kind, crate::lattice::DefectKind::Dislocation) {
            return input("dislocation predictors go with dislocation reference configurations and vice versa");
        }
        potential.validate(dislocation)?;
        let (potential, cutoff) = potential.resolve(&config.lattice)?;
        let lattice = &config.lattice;
        let nn = lattice.nn_distance();
        let skin = opts.skin.unwrap_or(0.5 * nn);
        if !(skin >= 0.0) || !skin.is_finite() {
            return input("skin must be finite and non-negative");
        }
        if !(r_dom.is_finite() && r_dom > 0.0) {
            return input(format!("R_dom must be positive and finite, got {r_dom}"));
        }
        let reach = potential.range() + skin;
        let buffer = reach;
        let r_free = r_dom - buffer;
        if !(r_free > config.r_def) {
            return input(format!("R_dom = {r_dom} must exceed R_def + buffer = {}", config.r_def + buffer));
        }
        let ds = lattice.ds;
        let components = if opts.components.is_empty() { (0..ds).collect() } else { opts.components.clone() };
        for (i, c) in components.iter().enumerate() {
            if *c >= ds || components[..i].contains(c) {
                return input(format!("invalid component list {components:?} for {ds} displacement components"));
            }
        }
        if lattice.column.is_some() && !config.core_sites().is_empty() {
            return input("explicit core atoms are not supported on column lattices");
        }
        let bmag = match &predictor {
            Predictor::Dislocation(p) => norm(p.burgers),
            Predictor::PointDefect => 0.0,
        };
        let r_active = r_dom + bmag;
        let domain = Domain::new(&config, r_active + reach + bmag + 1e-9)?;
        let tol = 1e-9 * lattice.max_vector_len();
        let mut free_of = vec![None; domain.len()];
        let mut free = Vec::new();
        for (i, s) in domain.sites.iter().enumerate() {
            if norm(s.pos) <= r_free + tol {
                free_of[i] = Some(free.len() as u32);
                free.push(*s);
            }
        }
        if free.is_empty() {
            return input("the free region contains no sites");
        }
        let centres: Vec<usize> = (0..domain.len()).filter(|&i| norm(domain.positions[i]) <= r_active + tol).collect();
        let column_images = |xr: Vec3, z0: f64, r: f64| -> Vec<f64> {
            match lattice.column {
                None => vec![0.0],
                Some(c) => {
                    let zr2 = r * r - xr[0] * xr[0] - xr[1] * xr[1];
                    if zr2 < 0.0 {
                        return Vec::new();
                    }
                    let zr = zr2.sqrt();
                    let lo = ((-zr - z0) / c.period).ceil() as i64;
                    let hi = ((zr - z0) / c.period).floor() as i64;
                    (lo..=hi).map(|k| z0 + k as f64 * c.period).collect()
                }
            }
        };
        let built: Vec<Result<Option<ActiveSite>>> = centres
            .par_iter()
            .map(|&i| {
                let si = domain.sites[i];
                let mut js = domain.within(si.pos, reach + bmag + tol);
                js.sort_unstable();
                let mut entries = Vec::new();
                for j in js {
                    let sj = domain.sites[j];
                    let xr = sub(sj.pos, si.pos);
                    let z0 = match (lattice.column, si.coord, sj.coord) {
                        (Some(c), Some(ni), Some(nj)) => c.height(nj) - c.height(ni),
                        _ => 0.0,
                    };
                    for z in column_images(xr, z0, reach + bmag + tol) {
                        let x = [xr[0], xr[1], xr[2] + z];
                        if j == i && norm(x) <= tol {
                            continue;
                        }
                        let (base, a, site) = match &predictor {
                            Predictor::PointDefect => (x, free_of[j], j),
                            Predictor::Dislocation(p) => {
                                let (ni, nj) = (si.coord.expect("lattice site"), sj.coord.expect("lattice site"));
                                let rho = [nj[0] - ni[0], nj[1] - ni[1], 0];
                                let e = p.elastic_strain(ni, rho)?;
                                let m = p.permuted_site(ni, rho);
                                let k = domain.index_of(m).ok_or_else(|| Error::Boundary(format!("permuted site {m:?} lies outside the generated domain")))?;
                                (add(x, e), free_of[k], k)
                            }
                        };
                        if norm(base) <= reach {
                            entries.push(Entry { base, a, site: site as u32 });
                        }
                    }
                }
                let c = free_of[i];
                if c.is_none() && entries.iter().all(|e| e.a.is_none()) {
                    return Ok(None);
                }
                let g: Vec<Vec3> = entries.iter().filter(|e| in_reference_ball(e.base, potential.range())).map(|e| e.base).collect();
                let v0 = potential.energy(&g)?;
                Ok(Some(ActiveSite { site: i as u32, c, entries, v0 }))
            })
            .collect();
        let mut active = Vec::new();
        for b in built {
            if let Some(a) = b? {
                active.push(a);
            }
        }
        let model = EnergyModel {
            config,
            potential,
            cutoff,
            predictor,
            r_dom,
            buffer,
            skin,
            components,
            load: None,
            free,
            domain,
            active,
            nn,
        };
        let m0 = model.eval(&vec![0.0; model.n_dof()], false)?.min_distance;
        if m0 < 0.1 * nn {
            return input(format!("predictor is not admissible on the domain: shortest distance {m0:e}"));
        }
        Ok(model)
    }

    pub fn r_free(&self) -> f64 {
        self.r_dom - self.buffer
    }

    pub fn free_sites(&self) -> &[Site] {
        &self.free
    }

    pub fn n_dof(&self) -> usize {
        self.free.len() * self.components.len()
    }

    pub fn n_active(&self) -> usize {
        self.active.len()
    }

    pub fn nn_distance(&self) -> f64 {
        self.nn
    }

    fn u_at(&self, x: &[f64], a: Option<u32>) -> Vec3 {
        let mut u = [0.0; 3];
        if let Some(a) = a {
            let nc = self.components.len();
            for (q, &c) in self.components.iter().enumerate() {
                u[c] = x[a as usize * nc + q];
            }
        }
        u
    }

    fn stencil(&self, s: &ActiveSite, x: &[f64]) -> Vec<Vec3> {
        let uc = self.u_at(x, s.c);
        s.entries.iter().map(|e| add(e.base, sub(self.u_at(x, e.a), uc))).collect()
    }

    fn within_range(&self, s: &ActiveSite, k: usize, g: Vec3, range: f64) -> bool {
        if self.potential.reference_truncation() {
            in_reference_ball(s.entries[k].base, range)
        } else {
            norm(g) <= range
        }
    }

    fn check_skin(&self, x: &[f64]) -> Result<()> {
        let umax = x.iter().fold(0.0f64, |m, v| m.max(v.abs())) * (self.components.len() as f64).sqrt();
        if !umax.is_finite() {
            return Err(Error::Evaluation("non-finite displacement".into()));
        }
        if 2.0 * umax > self.skin {
            return Err(Error::Evaluation(format!("displacement {umax:e} exceeds half the neighbour-list skin {}", self.skin)));
        }
        Ok(())
    }

    fn label(&self, i: u32) -> String {
        let s = self.domain.sites[i as usize];
        match s.coord {
            Some(n) => format!("{n:?}"),
            None => format!("core atom at {:?}", s.pos),
        }
    }

    /// Energy (and optionally gradient) at the flat coordinates `x`.
    pub fn eval(&self, x: &[f64], with_gradient: bool) -> Result<ModelEval> {
        if x.len() != self.n_dof() {
            return input(format!("expected {} coordinates, got {}", self.n_dof(), x.len()));
        }
        self.check_skin(x)?;
        let range = self.potential.range();
        let collide = 1e-8 * self.nn;
        type SiteOut = (f64, f64, Vec<(Option<u32>, Vec3)>);
        let per: Vec<Result<SiteOut>> = self
            .active
            .par_iter()
            .map(|s| {
                let g = self.stencil(s, x);
                let mut dmin = f64::INFINITY;
                for (k, gk) in g.iter().enumerate() {
                    let r = norm(*gk);
                    if r < collide {
                        return Err(Error::Evaluation(format!("sites {} and {} collide", self.label(s.site), self.label(s.entries[k].site))));
                    }
                    dmin = dmin.min(r);
                }
                let keep: Vec<usize> = (0..g.len()).filter(|&k| self.within_range(s, k, g[k], range)).collect();
                let gk: Vec<Vec3> = keep.iter().map(|&k| g[k]).collect();
                if with_gradient {
                    let (v, dv) = self.potential.energy_gradient(&gk)?;
                    let parts = keep.iter().zip(dv).map(|(&k, d)| (s.entries[k].a, d)).collect();
                    Ok((v - s.v0, dmin, parts))
                } else {
                    Ok((self.potential.energy(&gk)? - s.v0, dmin, Vec::new()))
                }
            })
            .collect();
        let nc = self.components.len();
        let mut values = Vec::with_capacity(per.len());
        let mut min_distance = f64::INFINITY;
        let mut grad = if with_gradient { Some(vec![0.0; x.len()]) } else { None };
        for (s, r) in self.active.iter().zip(per) {
            let (v, dmin, parts) = r?;
            values.push(v);
            min_distance = min_distance.min(dmin);
            if let Some(gr) = grad.as_mut() {
                let mut centre = [0.0; 3];
                for (a, d) in parts {
                    centre = sub(centre, d);
                    if let Some(a) = a {
                        for (q, &c) in self.components.iter().enumerate() {
                            gr[a as usize * nc + q] += d[c];
                        }
                    }
                }
                if let Some(c) = s.c {
                    for (q, &cc) in self.components.iter().enumerate() {
                        gr[c as usize * nc + q] += centre[cc];
                    }
                }
            }
        }
        let mut energy = pairwise_sum(&values);
        if let Some(f) = &self.load {
            energy -= pairwise_sum(&f.iter().zip(x).map(|(a, b)| a * b).collect::<Vec<_>>());
            if let Some(gr) = grad.as_mut() {
                for (g, fi) in gr.iter_mut().zip(f) {
                    *g -= fi;
                }
            }
        }
        Ok(ModelEval { energy, gradient: grad, min_distance })
    }

    pub fn energy(&self, x: &[f64]) -> Result<f64> {
        Ok(self.eval(x, false)?.energy)
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.eval(x, true)?.gradient.expect("requested"))
    }

    /// Per active site: the site and V_l at the deformed stencil (not the difference).
    pub fn site_energies(&self, x: &[f64]) -> Result<Vec<(Site, f64)>> {
        self.check_skin(x)?;
        let range = self.potential.range();
        self.active
            .par_iter()
            .map(|s| {
                let g: Vec<Vec3> = self.stencil(s, x).into_iter().enumerate().filter(|(k, g)| self.within_range(s, *k, *g, range)).map(|(_, g)| g).collect();
                Ok((self.domain.sites[s.site as usize], self.potential.energy(&g)?))
            })
            .collect()
    }

    /// Flat coordinates of a displacement; it must vanish outside the free region.
    pub fn flatten(&self, u: &Displacement) -> Result<Vec<f64>> {
        let tol = 1e-9 * self.config.lattice.max_vector_len();
        for (s, v) in u.sites.iter().zip(&u.values) {
            let outside = norm(s.pos) > self.r_free() + tol && norm(s.pos) <= u.clamp_radius + tol;
            if outside && norm(sub(*v, u.far)) > 0.0 {
                return input(format!("displacement is not supported inside the free radius {}", self.r_free()));
            }
        }
        if norm(u.far) > 0.0 {
            return input("displacement must vanish far away");
        }
        let nc = self.components.len();
        let mut x = vec![0.0; self.n_dof()];
        for (i, s) in self.free.iter().enumerate() {
            let v = u.at(s.pos);
            for (q, &c) in self.components.iter().enumerate() {
                x[i * nc + q] = v[c];
            }
        }
        Ok(x)
    }

    pub fn to_displacement(&self, x: &[f64]) -> Result<Displacement> {
        let values = (0..self.free.len()).map(|i| self.u_at(x, Some(i as u32))).collect();
        Displacement::new(&self.config, self.free.clone(), values, self.r_free())
    }

    pub fn energy_diff(&self, u: &Displacement) -> Result<f64> {
        self.energy(&self.flatten(u)?)
    }

    /// dE/du(l) on the free sites, as vectors (non-relaxing components are zero).
    pub fn gradient_field(&self, u: &Displacement) -> Result<Vec<Vec3>> {
        let g = self.gradient(&self.flatten(u)?)?;
        Ok((0..self.free.len()).map(|i| self.u_at(&g, Some(i as u32))).collect())
    }

    /// f(l) = -dE/du(l) at u = 0.
    pub fn residual_force(&self) -> Result<ForceTable> {
        let g = self.gradient(&vec![0.0; self.n_dof()])?;
        let forces = (0..self.free.len()).map(|i| crate::vec3::scale(-1.0, self.u_at(&g, Some(i as u32)))).collect();
        Ok(ForceTable { sites: self.free.clone(), forces })
    }

    /// Hessian-vector product by central differences of the gradient.
    pub fn hessian_vector(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let vmax = v.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        if vmax == 0.0 {
            return Ok(vec![0.0; v.len()]);
        }
        let h = 1e-5 * self.nn / vmax;
        let xp: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + h * b).collect();
        let xm: Vec<f64> = x.iter().zip(v).map(|(a, b)| a - h * b).collect();
        let (gp, gm) = (self.gradient(&xp)?, self.gradient(&xm)?);
        Ok(gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * h)).collect())
    }

    /// Compares the gradient at `x` with Richardson-extrapolated central
    /// differences (steps h and h/2) on `samples` randomly chosen coordinates.
    pub fn gradient_check(&self, x: &[f64], samples: usize, h: f64, seed: u64) -> Result<GradientCheck> {
        use rand::{Rng, SeedableRng};
        let g = self.gradient(x)?;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = self.n_dof();
        let mut idx: Vec<usize> = (0..samples.min(n)).map(|_| rng.gen_range(0..n)).collect();
        idx.sort_unstable();
        idx.dedup();
        let diff = |k: usize, h: f64| -> Result<f64> {
            let mut xp = x.to_vec();
            xp[k] += h;
            let mut xm = x.to_vec();
            xm[k] -= h;
            Ok((self.energy(&xp)? - self.energy(&xm)?) / (2.0 * h))
        };
        let fd: Vec<Result<f64>> = idx
            .par_iter()
            .map(|&k| {
                let (d1, d2) = (diff(k, h)?, diff(k, 0.5 * h)?);
                Ok((4.0 * d2 - d1) / 3.0)
            })
            .collect();
        let mut max_err = 0.0f64;
        let mut max_grad = 0.0f64;
        for (&k, f) in idx.iter().zip(fd) {
            max_err = max_err.max((f? - g[k]).abs());
            max_grad = max_grad.max(g[k].abs());
        }
        Ok(GradientCheck { coordinates: idx.len(), max_abs_error: max_err, max_gradient: max_grad, relative_error: if max_grad > 0.0 { max_err / max_grad } else { max_err } })
    }

    pub fn minimize(&self, opts: &MinimizeOptions) -> Result<RelaxResult> {
        self.minimize_from(vec![0.0; self.n_dof()], opts)
    }

    pub fn minimize_from(&self, x0: Vec<f64>, opts: &MinimizeOptions) -> Result<RelaxResult> {
        let guard = 0.1 * self.nn;
        let f = |x: &[f64]| -> Result<Evaluation> {
            let e = self.eval(x, true)?;
            Ok(Evaluation { value: e.energy, gradient: e.gradient.expect("requested"), admissible: e.min_distance >= guard })
        };
        // first trial step moves no coordinate by more than a tenth of the skin
        let m = optim::minimize(&f, x0, opts, 0.1 * self.skin.max(1e-3 * self.nn))?;
        Ok(RelaxResult {
            u: self.to_displacement(&m.x)?,
            energy: m.value,
            grad_norm: m.grad_norm,
            iterations: m.iterations,
            evaluations: m.evaluations,
            trace: m.trace,
            reason: m.reason,
            x: m.x,
        })
    }
}

/// Uniform scale s minimizing the site energy of `lattice.scaled(s)`.
pub fn equilibrium_scale(pot: &SitePotential, lattice: &crate::lattice::BravaisLattice) -> Result<f64> {
    let (pot, _) = pot.resolve(lattice)?;
    let e = |s: f64| -> Result<f64> {
        let l = lattice.scaled(s);
        let g: Vec<Vec3> = lattice_stencil(&l, pot.range()).into_iter().map(|v| v.x).collect();
        pot.energy(&g)
    };
    let (mut a, mut b) = (0.7, 1.5);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut c, mut d) = (b - phi * (b - a), a + phi * (b - a));
    let (mut fc, mut fd) = (e(c)?, e(d)?);
    while b - a > 1e-10 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = e(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = e(d)?;
        }
    }
    let s = 0.5 * (a + b);
    if s < 0.7 + 1e-6 || s > 1.5 - 1e-6 {
        return Err(Error::Numeric(format!("no interior equilibrium scale in [0.7, 1.5] (boundary at {s})")));
    }
    Ok(s)
}

/// Same tolerance as `BravaisLattice::points_in_ball`.
fn in_reference_ball(x: Vec3, r: f64) -> bool {
    crate::vec3::norm2(x) <= r * r * (1.0 + 1e-12) + 1e-24
}
