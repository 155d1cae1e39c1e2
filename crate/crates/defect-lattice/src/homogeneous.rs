//! Linearisation of the homogeneous crystal: force constants, the
//! Fourier symbol, stability scans and the lattice Green's function.

use crate::analysis::{decay_fit, DecayFit, DecayModel};
use crate::error::{input, Error, Result};
use crate::lattice::BravaisLattice;
use crate::numerics::{line_fit, LineFit};
use crate::potentials::{lattice_stencil, SitePotential};
use crate::vec3::{dot, norm, Mat3, Vec3, ZERO3};
use nalgebra::{Complex, DMatrix, SymmetricEigen};
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::f64::consts::PI;

type C64 = Complex<f64>;

#[derive(Debug, Clone)]
pub struct ForceConstants {
    pub lattice: BravaisLattice,
    /// Displacement components the operator acts on.
    pub components: Vec<usize>,
    /// h(rho) for every rho in the support, including rho = 0, sorted by rho.
    pub h: Vec<([i64; 3], Mat3)>,
    /// Bound on the neglected tail; zero for potentials with a finite cutoff.
    pub tail_bound: f64,
}

fn mat_add(a: &mut Mat3, s: f64, b: &Mat3) {
    for i in 0..3 {
        for j in 0..3 {
            a[i][j] += s * b[i][j];
        }
    }
}

fn neg(n: [i64; 3]) -> [i64; 3] {
    [-n[0], -n[1], -n[2]]
}

/// h(rho) = -1/2 sum_{xi - tau = rho} W_{xi tau}, where W is the Hessian of
/// the site energy with respect to the displacements of the stencil sites
/// including the centre.
pub fn force_constants(pot: &SitePotential, lattice: &BravaisLattice, components: &[usize]) -> Result<ForceConstants> {
    if components.is_empty() || components.iter().any(|&c| c >= lattice.ds) {
        return input(format!("components {components:?} invalid for physical dimension {}", lattice.ds));
    }
    let stencil = lattice_stencil(lattice, pot.range());
    if stencil.is_empty() {
        return input("potential range contains no lattice vectors");
    }
    let g: Vec<Vec3> = stencil.iter().map(|v| v.x).collect();
    let hess = pot.hessian(&g)?;
    let n = g.len();
    let origin = [0i64; 3];
    let mut w: BTreeMap<([i64; 3], [i64; 3]), Mat3> = BTreeMap::new();
    for e in 0..n {
        for f in 0..n {
            let v = &hess[e * n + f];
            if v.iter().flatten().all(|x| *x == 0.0) {
                continue;
            }
            let (a, b) = (stencil[e].n, stencil[f].n);
            for (x, y, s) in [(a, b, 1.0), (origin, b, -1.0), (a, origin, -1.0), (origin, origin, 1.0)] {
                mat_add(w.entry((x, y)).or_insert(ZERO3), s, v);
            }
        }
    }
    let mut h: BTreeMap<[i64; 3], Mat3> = BTreeMap::new();
    for ((xi, tau), v) in &w {
        let rho = [xi[0] - tau[0], xi[1] - tau[1], xi[2] - tau[2]];
        mat_add(h.entry(rho).or_insert(ZERO3), -0.5, v);
    }
    Ok(ForceConstants { lattice: lattice.clone(), components: components.to_vec(), h: h.into_iter().collect(), tail_bound: 0.0 })
}

impl ForceConstants {
    pub fn get(&self, rho: [i64; 3]) -> Mat3 {
        match self.h.binary_search_by(|p| p.0.cmp(&rho)) {
            Ok(k) => self.h[k].1,
            Err(_) => ZERO3,
        }
    }

    /// Kernel of (Hu)(l) = sum_rho K(rho) u(l + rho); K(rho) = -2 h(-rho)^T.
    pub fn kernel(&self, rho: [i64; 3]) -> Mat3 {
        let m = self.get(neg(rho));
        let mut k = ZERO3;
        for i in 0..3 {
            for j in 0..3 {
                k[i][j] = -2.0 * m[j][i];
            }
        }
        k
    }

    /// max |h(-rho) - h(rho)| and |sum_rho h(rho)|.
    pub fn symmetry_residuals(&self) -> (f64, f64) {
        let mut sym: f64 = 0.0;
        let mut sum = ZERO3;
        for (rho, m) in &self.h {
            let o = self.get(neg(*rho));
            for i in 0..3 {
                for j in 0..3 {
                    sym = sym.max((m[i][j] - o[i][j]).abs());
                    sum[i][j] += m[i][j];
                }
            }
        }
        (sym, sum.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs())))
    }

    pub fn support_radius(&self) -> f64 {
        self.h.iter().map(|(n, _)| norm(self.lattice.position(*n))).fold(0.0, f64::max)
    }

    fn nc(&self) -> usize {
        self.components.len()
    }

    /// Ĥ(k) = sum_rho K(rho) e^{i k.rho}, restricted to the active components.
    pub fn symbol(&self, k: Vec3) -> DMatrix<C64> {
        let nc = self.nc();
        let mut out = DMatrix::<C64>::zeros(nc, nc);
        for (rho, _) in &self.h {
            let kr = self.kernel(*rho);
            let ph = dot(k, self.lattice.position(*rho));
            let e = C64::new(ph.cos(), ph.sin());
            for (a, &ca) in self.components.iter().enumerate() {
                for (b, &cb) in self.components.iter().enumerate() {
                    out[(a, b)] += e * kr[ca][cb];
                }
            }
        }
        out
    }

    /// (Hu)(l) for u given by a lookup returning None outside its support.
    pub fn apply(&self, u: &dyn Fn([i64; 3]) -> Option<Vec<f64>>, l: [i64; 3]) -> Option<Vec<f64>> {
        let nc = self.nc();
        let mut out = vec![0.0; nc];
        for (rho, _) in &self.h {
            let kr = self.kernel(*rho);
            let v = u([l[0] + rho[0], l[1] + rho[1], l[2] + rho[2]])?;
            for (a, &ca) in self.components.iter().enumerate() {
                for (b, &cb) in self.components.iter().enumerate() {
                    out[a] += kr[ca][cb] * v[b];
                }
            }
        }
        Some(out)
    }
}

/// Dual basis columns 2 pi A^{-T}.
fn reciprocal(lat: &BravaisLattice) -> [Vec3; 3] {
    let mut b = [[0.0; 3]; 3];
    // b_i . a_j = 2 pi delta_ij, i.e. b_i is 2 pi times row i of A^{-1}
    for (i, bi) in b.iter_mut().enumerate().take(lat.d) {
        for (j, bij) in bi.iter_mut().enumerate().take(lat.d) {
            let mut x = [0.0; 3];
            x[j] = 1.0;
            *bij = 2.0 * PI * lat.fractional(x)[i];
        }
    }
    b
}

fn k_of(b: &[Vec3; 3], d: usize, t: &[f64]) -> Vec3 {
    let mut k = [0.0; 3];
    for i in 0..d {
        for j in 0..3 {
            k[j] += t[i] * b[i][j];
        }
    }
    k
}

/// Squared norm of the shortest representative of k modulo the reciprocal lattice.
fn folded_norm2(b: &[Vec3; 3], d: usize, k: Vec3) -> f64 {
    let mut best = f64::INFINITY;
    let range = |i: usize| if i < d { -1..=1 } else { 0..=0 };
    for m0 in range(0) {
        for m1 in range(1) {
            for m2 in range(2) {
                let m = [m0 as f64, m1 as f64, m2 as f64];
                let mut q = k;
                for i in 0..d {
                    for j in 0..3 {
                        q[j] += m[i] * b[i][j];
                    }
                }
                best = best.min(dot(q, q));
            }
        }
    }
    best
}

#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub grid_n: usize,
    pub c_min: f64,
    pub argmin_k: Vec3,
    pub stable: bool,
    /// Largest anti-Hermitian residual seen on the grid.
    pub hermiticity: f64,
}

/// min over grid points k != 0 of lambda_min(Ĥ(k)) / |k|^2 with k = 2 pi A^{-T} t,
/// t on the grid i/n - 1/2.
pub fn stability_scan(fc: &ForceConstants, grid_n: usize) -> Result<StabilityReport> {
    if grid_n < 8 {
        return input("stability scan needs grid_n >= 8");
    }
    let d = fc.lattice.d;
    let b = reciprocal(&fc.lattice);
    let total = grid_n.pow(d as u32);
    let results: Vec<(f64, Vec3, f64)> = (0..total)
        .into_par_iter()
        .filter_map(|idx| {
            let mut t = [0.0; 3];
            let mut r = idx;
            for ti in t.iter_mut().take(d) {
                *ti = (r % grid_n) as f64 / grid_n as f64 - 0.5;
                r /= grid_n;
            }
            if t.iter().all(|x| *x == 0.0) {
                return None;
            }
            let k = k_of(&b, d, &t);
            let m = fc.symbol(k);
            let herm = (&m - m.adjoint()).iter().fold(0.0f64, |a, z| a.max(z.norm()));
            let hm = (&m + m.adjoint()) * C64::new(0.5, 0.0);
            let lam = SymmetricEigen::new(hm).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
            Some((lam / folded_norm2(&b, d, k), k, herm))
        })
        .collect();
    let mut best = (f64::INFINITY, [0.0; 3]);
    let mut herm: f64 = 0.0;
    for (c, k, h) in results {
        herm = herm.max(h);
        if c < best.0 {
            best = (c, k);
        }
    }
    Ok(StabilityReport { grid_n, c_min: best.0, argmin_k: best.1, stable: best.0 > 0.0, hermiticity: herm })
}

#[derive(Debug, Clone)]
pub struct GreenTable {
    pub d: usize,
    pub nc: usize,
    /// Half-width of the integer box holding the table.
    pub half_width: i64,
    pub radius: f64,
    /// Grid resolution of the finer of the two grids combined by extrapolation.
    pub kgrid: usize,
    pub constant: Vec<f64>,
    pub error_estimate: f64,
    /// Row-major nc x nc blocks in box order.
    pub values: Vec<f64>,
    pub lattice: BravaisLattice,
}

impl GreenTable {
    fn width(&self) -> usize {
        (2 * self.half_width + 1) as usize
    }

    fn offset(&self, n: [i64; 3]) -> Option<usize> {
        let w = self.width() as i64;
        let mut idx = 0i64;
        for j in (0..self.d).rev() {
            if n[j].abs() > self.half_width {
                return None;
            }
            idx = idx * w + n[j] + self.half_width;
        }
        Some(idx as usize * self.nc * self.nc)
    }

    pub fn get(&self, n: [i64; 3]) -> Option<&[f64]> {
        self.offset(n).map(|o| &self.values[o..o + self.nc * self.nc])
    }

    /// Integer coordinates of every table entry.
    pub fn sites(&self) -> Vec<[i64; 3]> {
        let hw = self.half_width;
        let mut out = Vec::new();
        let zr = if self.d == 3 { -hw..=hw } else { 0..=0 };
        for k in zr {
            for j in -hw..=hw {
                for i in -hw..=hw {
                    out.push([i, j, k]);
                }
            }
        }
        out
    }
}

/// Raw sums (1/N^d) sum_t Ĥ(k_t)^{-1} e^{i k_t . l} on the half-shifted grid for
/// the table box, together with the value at l = 0.
fn green_raw(fc: &ForceConstants, n: usize, hw: i64) -> Result<Vec<f64>> {
    let d = fc.lattice.d;
    let nc = fc.nc();
    let nn = nc * nc;
    let b = reciprocal(&fc.lattice);
    let w = (2 * hw + 1) as usize;
    let t: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64 - 0.5).collect();
    // phase[i][m] = exp(2 pi i t_i (m - hw))
    let phase: Vec<Vec<C64>> = t
        .iter()
        .map(|ti| (0..w).map(|m| C64::from_polar(1.0, 2.0 * PI * ti * (m as i64 - hw) as f64)).collect())
        .collect();
    let inverse = |tt: &[f64]| -> Result<DMatrix<C64>> {
        let k = k_of(&b, d, tt);
        fc.symbol(k).try_inverse().ok_or_else(|| Error::Numeric(format!("symbol is singular at k = {k:?}")))
    };
    let scale = 1.0 / (n as f64).powi(d as i32);
    if d == 2 {
        // stage 1: G[j][m1] = sum_i F(i, j) phase[i][m1]
        let g: Result<Vec<Vec<C64>>> = (0..n)
            .into_par_iter()
            .map(|j| {
                let mut row = vec![C64::new(0.0, 0.0); w * nn];
                for i in 0..n {
                    let f = inverse(&[t[i], t[j]])?;
                    for m1 in 0..w {
                        let p = phase[i][m1];
                        for a in 0..nc {
                            for c in 0..nc {
                                row[m1 * nn + a * nc + c] += f[(a, c)] * p;
                            }
                        }
                    }
                }
                Ok(row)
            })
            .collect();
        let g = g?;
        let out: Vec<Vec<f64>> = (0..w)
            .into_par_iter()
            .map(|m2| {
                let mut row = vec![0.0; w * nn];
                for m1 in 0..w {
                    for e in 0..nn {
                        let mut s = C64::new(0.0, 0.0);
                        for j in 0..n {
                            s += g[j][m1 * nn + e] * phase[j][m2];
                        }
                        row[m1 * nn + e] = s.re * scale;
                    }
                }
                row
            })
            .collect();
        Ok(out.concat())
    } else {
        // stage 1 over i, stage 2 over j, stage 3 over l
        let g1: Result<Vec<Vec<C64>>> = (0..n * n)
            .into_par_iter()
            .map(|jl| {
                let (j, l) = (jl % n, jl / n);
                let mut row = vec![C64::new(0.0, 0.0); w * nn];
                for i in 0..n {
                    let f = inverse(&[t[i], t[j], t[l]])?;
                    for m1 in 0..w {
                        let p = phase[i][m1];
                        for a in 0..nc {
                            for c in 0..nc {
                                row[m1 * nn + a * nc + c] += f[(a, c)] * p;
                            }
                        }
                    }
                }
                Ok(row)
            })
            .collect();
        let g1 = g1?;
        let g2: Vec<Vec<C64>> = (0..n)
            .into_par_iter()
            .map(|l| {
                let mut row = vec![C64::new(0.0, 0.0); w * w * nn];
                for j in 0..n {
                    let src = &g1[l * n + j];
                    for m2 in 0..w {
                        let p = phase[j][m2];
                        for m1 in 0..w {
                            for e in 0..nn {
                                row[(m2 * w + m1) * nn + e] += src[m1 * nn + e] * p;
                            }
                        }
                    }
                }
                row
            })
            .collect();
        let out: Vec<Vec<f64>> = (0..w)
            .into_par_iter()
            .map(|m3| {
                let mut row = vec![0.0; w * w * nn];
                for (q, v) in row.iter_mut().enumerate() {
                    let mut s = C64::new(0.0, 0.0);
                    for l in 0..n {
                        s += g2[l][q] * phase[l][m3];
                    }
                    *v = s.re * scale;
                }
                row
            })
            .collect();
        Ok(out.concat())
    }
}

/// Lattice Green's function on the integer box covering the ball of radius
/// `radius`. The grid is doubled from `n0` until the extrapolated table
/// changes by less than `tol`, or `n_max` is exceeded (numeric error).
pub fn green_function(fc: &ForceConstants, radius: f64, tol: f64, n0: usize, n_max: usize) -> Result<GreenTable> {
    let lat = &fc.lattice;
    let d = lat.d;
    if !(radius >= 1.0) {
        return input("green radius must be at least 1");
    }
    let nc = fc.nc();
    let nn = nc * nc;
    // box half-width: |n_j| <= |row j of A^{-1}| * radius
    let mut hw = 0i64;
    for j in 0..d {
        let mut row = [0.0; 3];
        for i in 0..d {
            let mut x = [0.0; 3];
            x[i] = 1.0;
            row[i] = lat.fractional(x)[j];
        }
        hw = hw.max((norm(row) * radius).ceil() as i64);
    }
    let hw = hw + fc.h.iter().map(|(r, _)| r.iter().map(|x| x.abs()).max().unwrap_or(0)).max().unwrap_or(0);
    let p = if d == 2 { 2 } else { 1 };
    let fac = 1.0 / ((1u64 << p) as f64 - 1.0);
    let mut n = n0.max(2 * hw as usize + 2);
    let centre = |v: &[f64]| -> Vec<f64> {
        let w = (2 * hw + 1) as usize;
        let mut o = 0usize;
        for _ in 0..d {
            o = o * w + hw as usize;
        }
        v[o * nn..(o + 1) * nn].to_vec()
    };
    let normalise = |v: Vec<f64>| -> Vec<f64> {
        if d == 2 {
            // differences from l = 0 converge; the raw values do not
            let c0 = centre(&v);
            v.chunks(nn).flat_map(|blk| blk.iter().zip(&c0).map(|(a, b)| a - b).collect::<Vec<_>>()).collect()
        } else {
            v
        }
    };
    let mut coarse = normalise(green_raw(fc, n, hw)?);
    loop {
        let fine = normalise(green_raw(fc, 2 * n, hw)?);
        let est = fine.iter().zip(&coarse).fold(0.0f64, |a, (f, c)| a.max((f - c).abs())) * fac;
        if est <= tol {
            let mut values: Vec<f64> = fine.iter().zip(&coarse).map(|(f, c)| f + (f - c) * fac).collect();
            let mut table = GreenTable { d, nc, half_width: hw, radius, kgrid: 2 * n, constant: vec![0.0; nn], error_estimate: est, values: Vec::new(), lattice: lat.clone() };
            if d == 2 {
                // zero mean over the outermost shell inside the ball
                let sites = table.sites();
                let shell: Vec<usize> = sites
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| {
                        let r = norm(lat.position(**s));
                        r <= radius && r > radius - 1.0
                    })
                    .map(|(i, _)| i)
                    .collect();
                let mut c = vec![0.0; nn];
                for &i in &shell {
                    for e in 0..nn {
                        c[e] -= values[i * nn + e] / shell.len() as f64;
                    }
                }
                for blk in values.chunks_mut(nn) {
                    for e in 0..nn {
                        blk[e] += c[e];
                    }
                }
                table.constant = c;
            }
            table.values = values;
            return Ok(table);
        }
        if 2 * n >= n_max {
            return Err(Error::Numeric(format!("green function quadrature not converged at grid {}: change {est:e} > {tol:e}", 2 * n)));
        }
        coarse = fine;
        n *= 2;
    }
}

/// sup over |l| <= r of |H Gamma(l) - delta(l) I|.
pub fn green_residual(fc: &ForceConstants, table: &GreenTable, r: f64) -> f64 {
    let nc = table.nc;
    let mut worst: f64 = 0.0;
    for s in table.sites() {
        if norm(table.lattice.position(s)) > r {
            continue;
        }
        for col in 0..nc {
            let u = |n: [i64; 3]| table.get(n).map(|blk| (0..nc).map(|a| blk[a * nc + col]).collect::<Vec<f64>>());
            if let Some(hu) = fc.apply(&u, s) {
                for (a, v) in hu.iter().enumerate() {
                    let target = if s == [0, 0, 0] && a == col { 1.0 } else { 0.0 };
                    worst = worst.max((v - target).abs());
                }
            }
        }
    }
    worst
}

#[derive(Debug, Clone)]
pub struct GreenDecay {
    pub first: DecayFit,
    pub second: DecayFit,
    /// d = 3: decay of |Gamma| itself.
    pub value: Option<DecayFit>,
    /// d = 2: fit of |Gamma| against log(2 + r).
    pub log_growth: Option<LineFit>,
}

fn frob(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Decay of first and second differences along the first lattice vector.
pub fn green_decay_fit(table: &GreenTable, rmin: f64, rmax: f64) -> Result<GreenDecay> {
    if table.radius < 32.0 && table.d == 2 {
        eprintln!("warning: green table radius {} is below 32 spacings", table.radius);
    }
    let e = [1i64, 0, 0];
    let mut r1 = Vec::new();
    let mut v1 = Vec::new();
    let mut v2 = Vec::new();
    let mut v0 = Vec::new();
    for s in table.sites() {
        let r = norm(table.lattice.position(s));
        if r > table.radius {
            continue;
        }
        let at = |k: i64| table.get([s[0] + k * e[0], s[1], s[2]]);
        if let (Some(a), Some(b), Some(c)) = (at(-1), at(0), at(1)) {
            let d1: Vec<f64> = c.iter().zip(b).map(|(x, y)| x - y).collect();
            let d2: Vec<f64> = c.iter().zip(b).zip(a).map(|((x, y), z)| x - 2.0 * y + z).collect();
            r1.push(r);
            v1.push(frob(&d1));
            v2.push(frob(&d2));
            v0.push(frob(b));
        }
    }
    let first = decay_fit(&r1, &v1, rmin, rmax, DecayModel::Power)?;
    let second = decay_fit(&r1, &v2, rmin, rmax, DecayModel::Power)?;
    let (value, log_growth) = if table.d == 3 {
        (Some(decay_fit(&r1, &v0, rmin, rmax, DecayModel::Power)?), None)
    } else {
        let sel: Vec<usize> = (0..r1.len()).filter(|&i| r1[i] >= rmin && r1[i] <= rmax).collect();
        let x: Vec<f64> = sel.iter().map(|&i| (2.0 + r1[i]).ln()).collect();
        let y: Vec<f64> = sel.iter().map(|&i| v0[i]).collect();
        (None, line_fit(&x, &y))
    };
    Ok(GreenDecay { first, second, value, log_growth })
}
