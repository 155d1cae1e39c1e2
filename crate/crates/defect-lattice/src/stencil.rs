//! Finite differences, nearest-neighbour and weighted stencil norms, and
//! the weight classes used to measure interaction range.

use crate::error::{input, Error, Result};
use crate::lattice::{neighbor_margin, neighbors, Domain, ReferenceConfig, Site};
use crate::numerics::{integrate_to_infinity, packing_tail, pairwise_sum};
use crate::vec3::{add, norm, sub, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::HashMap;

/// Displacement on finitely many sites. Beyond `clamp_radius`, and on any
/// site without a stored value, it equals the constant `far`.
#[derive(Debug, Clone)]
pub struct Displacement {
    pub sites: Vec<Site>,
    pub values: Vec<Vec3>,
    pub clamp_radius: f64,
    pub far: Vec3,
    index: HashMap<[i64; 3], usize>,
    core: Vec<(Vec3, usize)>,
    lattice_tol: f64,
    lattice: crate::lattice::BravaisLattice,
}

impl Displacement {
    pub fn new(config: &ReferenceConfig, sites: Vec<Site>, values: Vec<Vec3>, clamp_radius: f64) -> Result<Self> {
        if sites.len() != values.len() {
            return input("one value per site is required");
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return input("displacement values must be finite");
        }
        let mut index = HashMap::new();
        let mut core = Vec::new();
        for (i, s) in sites.iter().enumerate() {
            match s.coord {
                Some(c) => {
                    index.insert(c, i);
                }
                None => core.push((s.pos, i)),
            }
        }
        Ok(Displacement {
            sites,
            values,
            clamp_radius,
            far: [0.0; 3],
            index,
            core,
            lattice_tol: 1e-9 * config.lattice.max_vector_len(),
            lattice: config.lattice.clone(),
        })
    }

    pub fn zero(config: &ReferenceConfig) -> Self {
        Self::new(config, Vec::new(), Vec::new(), 0.0).expect("empty displacement")
    }

    /// Value at an arbitrary reference position.
    pub fn at(&self, x: Vec3) -> Vec3 {
        if norm(x) > self.clamp_radius + self.lattice_tol {
            return self.far;
        }
        if let Some(n) = self.lattice.coords_of(x) {
            if let Some(&i) = self.index.get(&n) {
                return self.values[i];
            }
        }
        for (p, i) in &self.core {
            if norm(sub(*p, x)) <= self.lattice_tol {
                return self.values[*i];
            }
        }
        self.far
    }

    /// Largest |u - far| over the stored sites.
    pub fn sup_deviation(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.sites)
            .filter(|(_, s)| norm(s.pos) <= self.clamp_radius + self.lattice_tol)
            .map(|(v, _)| norm(sub(*v, self.far)))
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut o = self.clone();
        for v in &mut o.values {
            *v = crate::vec3::scale(s, *v);
        }
        o.far = crate::vec3::scale(s, o.far);
        o
    }
}

/// D_rho u(l) = u(l + rho) - u(l).
pub fn finite_difference(u: &Displacement, l: Vec3, rho: Vec3) -> Vec3 {
    sub(u.at(add(l, rho)), u.at(l))
}

#[derive(Debug, Clone)]
pub struct SiteNorms {
    pub sites: Vec<Site>,
    pub values: Vec<f64>,
    pub global: f64,
}

/// Per-site |Du(l)|_N over Voronoi neighbours and the global l2 aggregate.
pub fn nn_norm(config: &ReferenceConfig, u: &Displacement) -> Result<SiteNorms> {
    let reach = 3.0 * config.lattice.max_vector_len();
    let r_eval = u.clamp_radius + reach;
    let domain = Domain::new(config, r_eval + neighbor_margin(config) + 1e-9)?;
    let idx: Vec<usize> = (0..domain.len()).filter(|&i| norm(domain.positions[i]) <= r_eval).collect();
    let vals: Vec<Result<f64>> = idx
        .par_iter()
        .map(|&i| {
            let nb = neighbors(config, &domain, i)?;
            let x = domain.positions[i];
            let ux = u.at(x);
            let s: f64 = nb.offsets.iter().map(|o| crate::vec3::norm2(sub(u.at(add(x, *o)), ux))).sum();
            Ok(s.sqrt())
        })
        .collect();
    let values = vals.into_iter().collect::<Result<Vec<f64>>>()?;
    let squares: Vec<f64> = values.iter().map(|v| v * v).collect();
    Ok(SiteNorms { sites: idx.iter().map(|&i| domain.sites[i]).collect(), values, global: pairwise_sum(&squares).sqrt() })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightKind {
    /// w(r) = (1 + r)^(-k-d-eps)
    Algebraic { k: f64, d: usize, eps: f64 },
    /// w(r) = exp(-alpha r)
    Exponential { alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightFunction {
    pub kind: WeightKind,
    /// Order index of the class the weight is claimed to belong to.
    pub k: usize,
    pub log_flag: bool,
}

impl WeightFunction {
    pub fn algebraic(k: usize, d: usize, eps: f64) -> Self {
        WeightFunction { kind: WeightKind::Algebraic { k: k as f64, d, eps }, k, log_flag: false }
    }

    pub fn exponential(alpha: f64, k: usize) -> Self {
        WeightFunction { kind: WeightKind::Exponential { alpha }, k, log_flag: false }
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self.kind {
            WeightKind::Algebraic { k, d, eps } => (1.0 + r).powf(-k - d as f64 - eps),
            WeightKind::Exponential { alpha } => (-alpha * r).exp(),
        }
    }

    fn exponent(&self) -> Option<f64> {
        match self.kind {
            WeightKind::Algebraic { k, d, eps } => Some(k + d as f64 + eps),
            WeightKind::Exponential { .. } => None,
        }
    }

    /// sup w + int_0^inf r^(k+d-1) w(r) dr, infinite when divergent.
    pub fn class_norm(&self, k: usize, d: usize) -> f64 {
        let n = (k + d) as f64;
        let integral = match self.kind {
            WeightKind::Algebraic { .. } => {
                let p = self.exponent().unwrap();
                if p <= n {
                    return f64::INFINITY;
                }
                // Beta(n, p - n)
                statrs::function::beta::beta(n, p - n)
            }
            WeightKind::Exponential { alpha } => {
                if alpha <= 0.0 {
                    return f64::INFINITY;
                }
                statrs::function::gamma::gamma(n) / alpha.powf(n)
            }
        };
        self.eval(0.0) + integral
    }

    /// Norm of the log-weighted class, infinite when divergent.
    pub fn log_class_norm(&self, k: usize, d: usize) -> f64 {
        if !self.class_norm(k, d).is_finite() {
            return f64::INFINITY;
        }
        let n = (k + d) as i32;
        let f = |r: f64| r.powi(n - 1) * (1.0 + r).ln().powi(2) * self.eval(r);
        self.eval(0.0) + integrate_to_infinity(&f, 0.0, 1e-13)
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        match self.kind {
            WeightKind::Algebraic { eps, .. } if !(eps > 0.0) => return input("algebraic weight needs eps > 0"),
            WeightKind::Exponential { alpha } if !(alpha > 0.0) => return input("exponential weight needs alpha > 0"),
            _ => {}
        }
        if !self.class_norm(self.k, d).is_finite() {
            return input(format!("weight is not summable at order k = {}", self.k));
        }
        if self.log_flag && !self.log_class_norm(self.k, d).is_finite() {
            return input("weight is not in the log-weighted class");
        }
        Ok(())
    }

    /// Bound on sum_{rho in P, |rho| > radius} w(|rho|) |rho|^j over a point
    /// set with minimum spacing r0 in dimension d.
    pub fn tail_sum(&self, j: i32, radius: f64, d: usize, r0: f64) -> f64 {
        // r^j w(r) rises until r*, so use its nonincreasing majorant
        let peak = match self.kind {
            WeightKind::Algebraic { .. } => j as f64 / (self.exponent().unwrap() - j as f64),
            WeightKind::Exponential { alpha } => j as f64 / alpha,
        };
        let f = |r: f64| {
            let s = r.max(peak);
            s.powi(j) * self.eval(s)
        };
        packing_tail(&f, radius, d, r0)
    }
}

#[derive(Debug, Clone)]
pub struct WeightedNorm {
    pub sites: Vec<Site>,
    /// Truncated per-site values |Du(l)|_{w,k}.
    pub values: Vec<f64>,
    /// Certified bound on the truncated part of |Du(l)|^k_{w,k}, per site.
    pub site_tail: f64,
    /// Global norm from the truncated per-site sums (a lower bound).
    pub global: f64,
    /// Upper bound on the global norm including every neglected term.
    pub global_upper: f64,
    pub tail_radius: f64,
}

/// Weighted stencil norm with rho-sums truncated at `tail_radius`.
/// Global aggregation uses exponent 2 for k = 1 and exponent k otherwise.
pub fn weighted_norm(config: &ReferenceConfig, u: &Displacement, w: &WeightFunction, k: usize, tail_radius: f64) -> Result<WeightedNorm> {
    if k == 0 {
        return input("k must be at least 1");
    }
    let d = config.lattice.d;
    w.validate(d)?;
    if !w.class_norm(k, d).is_finite() {
        return Err(Error::Input(format!("weight is not summable at order k = {k}")));
    }
    if !(tail_radius > 0.0) {
        return input("tail radius must be positive");
    }
    let r_eval = u.clamp_radius + tail_radius;
    let domain = Domain::new(config, r_eval + tail_radius + 1e-9)?;
    let idx: Vec<usize> = (0..domain.len()).filter(|&i| norm(domain.positions[i]) <= r_eval).collect();
    let kk = k as i32;
    let uval: Vec<Vec3> = domain.positions.iter().map(|&x| u.at(x)).collect();
    let support: Vec<usize> = (0..domain.len()).filter(|&j| uval[j] != u.far).collect();
    let values: Vec<f64> = idx
        .par_iter()
        .map(|&i| {
            let x = domain.positions[i];
            let ux = uval[i];
            let mut terms = Vec::new();
            let mut add_term = |j: usize| {
                let diff = norm(sub(uval[j], ux));
                if j != i && diff > 0.0 {
                    terms.push(w.eval(norm(sub(domain.positions[j], x))) * diff.powi(kk));
                }
            };
            if ux == u.far {
                // only differences against the support are nonzero
                for &j in &support {
                    if norm(sub(domain.positions[j], x)) <= tail_radius {
                        add_term(j);
                    }
                }
            } else {
                for j in domain.within(x, tail_radius) {
                    add_term(j);
                }
            }
            pairwise_sum(&terms).powf(1.0 / k as f64)
        })
        .collect();
    let p = if k == 1 { 2.0 } else { k as f64 };
    let powered: Vec<f64> = values.iter().map(|v| v.powf(p)).collect();
    let global = pairwise_sum(&powered).powf(1.0 / p);

    // tail bounds
    let r0 = min_spacing(config);
    let m = u.sup_deviation();
    let site_tail = (2.0 * m).powi(kk) * w.tail_sum(0, tail_radius, d, r0);
    // evaluated sites: truncated value v, true value at most (v^k + T)^(1/k)
    let upper_sites: Vec<f64> = values.iter().map(|v| (v.powi(kk) + site_tail).powf(p / k as f64)).collect();
    // sites beyond r_eval only see the support through rho with |rho| > tail_radius
    let n_support = domain
        .sites
        .iter()
        .filter(|s| norm(s.pos) <= u.clamp_radius + 1e-9)
        .count() as f64;
    let rc = u.clamp_radius;
    let far = |r: f64| -> f64 {
        let s = (r - rc).max(tail_radius);
        (n_support * m.powi(kk) * w.eval(s)).powf(p / k as f64)
    };
    let outer = packing_tail(&far, r_eval, d, r0);
    let global_upper = (pairwise_sum(&upper_sites) + outer).powf(1.0 / p);
    Ok(WeightedNorm { sites: idx.iter().map(|&i| domain.sites[i]).collect(), values, site_tail, global, global_upper, tail_radius })
}

/// Smallest radius (up to `r_max`) whose per-site tail bound for a unit
/// displacement jump is below `target`.
pub fn suggest_tail_radius(config: &ReferenceConfig, w: &WeightFunction, target: f64, r_max: f64) -> f64 {
    let r0 = min_spacing(config);
    let d = config.lattice.d;
    let mut r = 2.0 * config.lattice.max_vector_len();
    while r < r_max {
        if w.tail_sum(0, r, d, r0) < target {
            return r;
        }
        r *= 1.25;
    }
    r_max
}

/// Minimum distance between distinct sites near the core and in the bulk.
pub fn min_spacing(config: &ReferenceConfig) -> f64 {
    let mut r0 = config.lattice.nn_distance();
    let core = config.core_sites();
    if !core.is_empty() {
        if let Ok(sites) = crate::lattice::generate_sites(config, config.r_def + 2.0 * config.lattice.max_vector_len()) {
            for (i, a) in sites.iter().enumerate() {
                for b in &sites[i + 1..] {
                    r0 = r0.min(norm(sub(a.pos, b.pos)));
                }
            }
        }
    }
    r0
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormEquivalence {
    pub k: usize,
    /// max over the sample of ||Du||_w / ||Du||_N.
    pub upper_ratio: f64,
    /// max over the sample of ||Du||_N / ||Du||_w (None when k > 2).
    pub lower_ratio: Option<f64>,
    /// Derived bound for the upper ratio (homogeneous lattices only).
    pub upper_bound: Option<f64>,
    /// Derived bound c0^(-1/k) for the lower ratio.
    pub lower_bound: Option<f64>,
    pub ratios: Vec<(f64, f64)>,
}

/// Random compactly supported displacements: uniform values in [-1,1]^ds on
/// all sites inside a ball of random radius in [1, r_max].
pub fn random_displacements(config: &ReferenceConfig, count: usize, r_max: f64, seed: u64) -> Result<Vec<Displacement>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ds = config.lattice.ds;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let r = rng.gen_range(1.0..=r_max.max(1.0));
        let sites = crate::lattice::generate_sites(config, r)?;
        let values = sites
            .iter()
            .map(|_| {
                let mut v = [0.0; 3];
                for x in v.iter_mut().take(ds) {
                    *x = rng.gen_range(-1.0..=1.0);
                }
                v
            })
            .collect();
        out.push(Displacement::new(config, sites, values, r)?);
    }
    Ok(out)
}

/// Empirical ratios between the weighted and nearest-neighbour norms, with
/// explicit constants from straight axis paths on homogeneous lattices.
pub fn norm_equivalence_report(config: &ReferenceConfig, sample: &[Displacement], w: &WeightFunction, k: usize, tail_radius: f64) -> Result<NormEquivalence> {
    if sample.is_empty() {
        return input("empty displacement sample");
    }
    let mut ratios = Vec::with_capacity(sample.len());
    for u in sample {
        let nn = nn_norm(config, u)?.global;
        if nn == 0.0 {
            continue;
        }
        let wn = weighted_norm(config, u, w, k, tail_radius)?;
        // conservative: upper ratio from the upper bound, lower from the truncated value
        ratios.push((wn.global_upper / nn, nn / wn.global));
    }
    if ratios.is_empty() {
        return input("all sampled displacements are constant");
    }
    let upper_ratio = ratios.iter().map(|r| r.0).fold(0.0, f64::max);
    let lower_ratio = if k <= 2 { Some(ratios.iter().map(|r| r.1).fold(0.0, f64::max)) } else { None };
    let upper_bound = if config.is_homogeneous() { Some(path_constant(config, w, k)?) } else { None };
    let lower_bound = if k <= 2 {
        let c0 = nn_weight_floor(config, w)?;
        Some(c0.powf(-1.0 / k as f64))
    } else {
        None
    };
    Ok(NormEquivalence { k, upper_ratio, lower_ratio, upper_bound, lower_bound, ratios })
}

/// inf of w over nearest-neighbour distances (homogeneous bulk and core).
pub fn nn_weight_floor(config: &ReferenceConfig, w: &WeightFunction) -> Result<f64> {
    let r = config.r_def + 2.0 * config.lattice.max_vector_len();
    let domain = Domain::new(config, r + neighbor_margin(config) + 1e-9)?;
    let mut c0 = f64::INFINITY;
    for i in 0..domain.len() {
        if norm(domain.positions[i]) <= r {
            for o in neighbors(config, &domain, i)?.offsets {
                c0 = c0.min(w.eval(norm(o)));
            }
        }
    }
    Ok(c0)
}

/// Upper constant from axis paths with N_rho = |n|_1 steps:
/// C_k^k = sum w N^k for k >= 2 and C_1^2 = (sum w N^2)(sum w).
fn path_constant(config: &ReferenceConfig, w: &WeightFunction, k: usize) -> Result<f64> {
    let lat = &config.lattice;
    let d = lat.d;
    let r0 = lat.nn_distance();
    let radius = suggest_tail_radius(config, w, 1e-12, 200.0 * r0).max(20.0 * r0);
    let mut cmax: f64 = 0.0;
    let mut s_nk = Vec::new();
    let mut s_n2 = Vec::new();
    let mut s_w = Vec::new();
    for n in lat.points_in_ball([0.0; 3], radius) {
        if n == [0, 0, 0] {
            continue;
        }
        let rho = norm(lat.position(n));
        let steps = (n[0].abs() + n[1].abs() + n[2].abs()) as f64;
        cmax = cmax.max(steps / rho);
        let wr = w.eval(rho);
        s_nk.push(wr * steps.powi(k as i32));
        s_n2.push(wr * steps * steps);
        s_w.push(wr);
    }
    // tails via N <= cmax |rho|
    let t = |j: i32| cmax.powi(j) * w.tail_sum(j, radius, d, r0);
    let c = if k == 1 {
        ((pairwise_sum(&s_n2) + t(2)) * (pairwise_sum(&s_w) + w.tail_sum(0, radius, d, r0))).sqrt()
    } else {
        (pairwise_sum(&s_nk) + t(k as i32)).powf(1.0 / k as f64)
    };
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{generate_sites, BravaisLattice};

    fn z2() -> ReferenceConfig {
        ReferenceConfig::homogeneous(BravaisLattice::square(1.0))
    }

    fn bump(c: &ReferenceConfig, v: Vec3) -> Displacement {
        let s = generate_sites(c, 0.1).unwrap();
        Displacement::new(c, s, vec![v], 0.1).unwrap()
    }

    #[test]
    fn constant_and_linear_differences() {
        let c = z2();
        let sites = generate_sites(&c, 5.0).unwrap();
        let vals: Vec<Vec3> = sites.iter().map(|_| [2.0, -1.0, 0.0]).collect();
        let mut u = Displacement::new(&c, sites.clone(), vals, 5.0).unwrap();
        u.far = [2.0, -1.0, 0.0];
        assert_eq!(finite_difference(&u, [1.0, 1.0, 0.0], [3.0, 0.0, 0.0]), [0.0; 3]);
        let f = [[0.5, 0.25], [-1.0, 2.0]];
        let vals: Vec<Vec3> = sites
            .iter()
            .map(|s| [f[0][0] * s.pos[0] + f[0][1] * s.pos[1], f[1][0] * s.pos[0] + f[1][1] * s.pos[1], 0.0])
            .collect();
        let u = Displacement::new(&c, sites, vals, 5.0).unwrap();
        let d = finite_difference(&u, [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]);
        assert!((d[0] - 0.75).abs() < 1e-14 && (d[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn indicator_difference() {
        let c = z2();
        let u = bump(&c, [1.0, 0.0, 0.0]);
        assert_eq!(finite_difference(&u, [0.0; 3], [1.0, 0.0, 0.0]), [-1.0, 0.0, 0.0]);
    }

    #[test]
    fn nn_norm_of_bump() {
        let c = z2();
        let eps = 0.3;
        let u = bump(&c, [eps, 0.0, 0.0]);
        let n = nn_norm(&c, &u).unwrap();
        let i = n.sites.iter().position(|s| s.coord == Some([0, 0, 0])).unwrap();
        // eight Voronoi neighbours on Z^2
        assert!((n.values[i].powi(2) - 8.0 * eps * eps).abs() < 1e-14);
        // each neighbour sees the bump once
        assert!((n.global.powi(2) - 16.0 * eps * eps).abs() < 1e-12);
        assert_eq!(nn_norm(&c, &Displacement::zero(&c)).unwrap().global, 0.0);
    }

    #[test]
    fn global_nn_norm_is_root_sum_of_squares() {
        let c = z2();
        let sites: Vec<Site> = [[0, 0, 0], [3, 0, 0]].iter().map(|n| Site { coord: Some(*n), pos: c.lattice.position(*n) }).collect();
        let u = Displacement::new(&c, sites, vec![[1.0, 0.0, 0.0], [0.0, 2.0, 0.0]], 3.5).unwrap();
        let n = nn_norm(&c, &u).unwrap();
        let s: f64 = n.values.iter().map(|v| v * v).sum();
        assert!((n.global - s.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn class_norms_closed_form() {
        let w = WeightFunction::exponential(2.0, 1);
        // 1 + Gamma(3)/2^3
        assert!((w.class_norm(1, 2) - 1.25).abs() < 1e-12);
        let w = WeightFunction::algebraic(1, 2, 1.0);
        // 1 + B(3, 1) = 1 + 1/3
        assert!((w.class_norm(1, 2) - 4.0 / 3.0).abs() < 1e-12);
        assert!(w.log_class_norm(1, 2).is_finite());
        assert!(WeightFunction::algebraic(1, 2, 1.0).class_norm(3, 2).is_infinite());
    }

    #[test]
    fn non_summable_weight_rejected() {
        let c = z2();
        let u = bump(&c, [1.0, 0.0, 0.0]);
        let w = WeightFunction::algebraic(1, 2, 0.5);
        assert!(matches!(weighted_norm(&c, &u, &w, 3, 5.0), Err(Error::Input(_))));
    }

    #[test]
    fn exponential_weight_reduces_to_nearest_neighbours() {
        let c = z2();
        let u = bump(&c, [1.0, 0.0, 0.0]);
        let alpha = 40.0;
        let w = WeightFunction::exponential(alpha, 1);
        let wn = weighted_norm(&c, &u, &w, 2, 6.0).unwrap();
        let i = wn.sites.iter().position(|s| s.coord == Some([0, 0, 0])).unwrap();
        // direct evaluation at double radius
        let wide = weighted_norm(&c, &u, &w, 2, 12.0).unwrap();
        let j = wide.sites.iter().position(|s| s.coord == Some([0, 0, 0])).unwrap();
        assert!((wn.values[i] - wide.values[j]).abs() < 1e-12);
        // four axis neighbours dominate
        let approx = (4.0 * (-alpha).exp()).sqrt();
        assert!((wn.values[i] / approx - 1.0).abs() < 1e-6);
        assert!(wn.site_tail < 1e-12);
    }

    #[test]
    fn algebraic_norm_converges_for_decaying_field() {
        let c = z2();
        let sites = generate_sites(&c, 10.0).unwrap();
        // u with |Du| ~ (1+|l|)^-2
        let vals: Vec<Vec3> = sites.iter().map(|s| [1.0 / (1.0 + norm(s.pos)), 0.0, 0.0]).collect();
        let mut u = Displacement::new(&c, sites, vals, 10.0).unwrap();
        u.far = [1.0 / 11.0, 0.0, 0.0];
        let w = WeightFunction::algebraic(1, 2, 1.0);
        let a = weighted_norm(&c, &u, &w, 1, 6.0).unwrap();
        let b = weighted_norm(&c, &u, &w, 1, 12.0).unwrap();
        assert!(a.global.is_finite() && b.global >= a.global);
        assert!(b.global <= a.global_upper * (1.0 + 1e-12));
        assert!(b.global_upper <= a.global_upper * (1.0 + 1e-9));
    }

    #[test]
    fn lower_ratio_respects_weight_floor() {
        let c = z2();
        let w = WeightFunction::exponential(1.0, 1);
        let sample = random_displacements(&c, 5, 3.0, 7).unwrap();
        for k in [1, 2] {
            let rep = norm_equivalence_report(&c, &sample, &w, k, 8.0).unwrap();
            let c0 = nn_weight_floor(&c, &w).unwrap();
            assert!((c0 - (-(2f64).sqrt()).exp()).abs() < 1e-14);
            // lower ratio ||Du||_N / ||Du||_w <= c0^(-1/k)
            assert!(rep.lower_ratio.unwrap() <= rep.lower_bound.unwrap());
            assert!(rep.upper_ratio <= rep.upper_bound.unwrap());
        }
    }

    #[test]
    fn translation_invariance() {
        let c = z2();
        let sites = generate_sites(&c, 2.0).unwrap();
        let vals: Vec<Vec3> = sites.iter().enumerate().map(|(i, _)| [(i as f64).sin(), (i as f64).cos(), 0.0]).collect();
        let u = Displacement::new(&c, sites.clone(), vals.clone(), 2.0).unwrap();
        let a = nn_norm(&c, &u).unwrap().global;
        let w = WeightFunction::exponential(1.5, 1);
        let wa = weighted_norm(&c, &u, &w, 2, 8.0).unwrap().global;
        // shift by a lattice vector: values move with their sites
        let shift = [3i64, -2, 0];
        let moved: Vec<Site> = sites
            .iter()
            .map(|s| {
                let n = s.coord.unwrap();
                let m = [n[0] + shift[0], n[1] + shift[1], 0];
                Site { coord: Some(m), pos: c.lattice.position(m) }
            })
            .collect();
        let v = Displacement::new(&c, moved, vals, 2.0 + 13f64.sqrt()).unwrap();
        let b = nn_norm(&c, &v).unwrap().global;
        let wb = weighted_norm(&c, &v, &w, 2, 8.0).unwrap().global;
        assert!((a - b).abs() < 1e-12);
        assert!((wa - wb).abs() < 1e-12);
    }
}
