//! Far-field predictors. Point defects use u0 = 0; straight dislocations use
//! u0 = u_lin(xi^{-1}(x)) + u_c with a branch cut along the ray
//! {x2 = core2, x1 >= core1}, arg taken in (0, 2 pi).

use crate::analysis::{decay_fit, DecayFit, DecayModel};
use crate::error::{input, Error, Result};
use crate::lattice::BravaisLattice;
use crate::potentials::{lattice_stencil, SitePotential};
use crate::vec3::{add, norm, sub, Vec3};
use nalgebra::{Complex, DMatrix, DVector};
use std::collections::HashMap;
use std::f64::consts::PI;

type C64 = Complex<f64>;

/// Coefficients of u_lin,i(core + x) = Re sum_n B[i][n] log(x1 + p_n x2).
#[derive(Debug, Clone, PartialEq)]
pub struct CleCoefficients {
    pub components: Vec<usize>,
    pub p: Vec<C64>,
    /// b[i][n] for active component i
    pub b: Vec<Vec<C64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cle {
    /// u_lin = (0, 0, b3 arg(x - core) / 2 pi)
    AntiPlane,
    Sextic(CleCoefficients),
}

#[derive(Debug, Clone)]
pub struct DislocationPredictor {
    pub lattice: BravaisLattice,
    pub burgers: Vec3,
    pub core: [f64; 2],
    pub r_hat: f64,
    /// eta(s) = 0 for s <= eta_onset, 1 for s >= 1, quintic smoothstep between.
    pub eta_onset: f64,
    pub cle: Cle,
    /// Compact correction u_c, keyed by integer site coordinates.
    pub correction: HashMap<[i64; 3], Vec3>,
    b12: [i64; 3],
}

#[derive(Debug, Clone)]
pub enum Predictor {
    PointDefect,
    Dislocation(Box<DislocationPredictor>),
}

/// Slip operators on displacements of the lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slip {
    S,
    S0,
    SStar,
}

fn smoothstep(t: f64) -> [f64; 2] {
    if t <= 0.0 {
        [0.0, 0.0]
    } else if t >= 1.0 {
        [1.0, 0.0]
    } else {
        [t * t * t * (10.0 - 15.0 * t + 6.0 * t * t), 30.0 * t * t * (1.0 - t) * (1.0 - t)]
    }
}

/// Default core: centre of the first lattice cell shifted by a quarter of the
/// smallest cell width in each direction.
pub fn default_core(lattice: &BravaisLattice) -> [f64; 2] {
    let (a1, a2) = (lattice.vectors[0], lattice.vectors[1]);
    let area = (a1[0] * a2[1] - a1[1] * a2[0]).abs();
    let w = area / norm(a1).max(norm(a2));
    [0.5 * (a1[0] + a2[0]) + 0.25 * w, 0.5 * (a1[1] + a2[1]) + 0.25 * w]
}

impl DislocationPredictor {
    pub fn new(lattice: &BravaisLattice, burgers: Vec3, core: Option<[f64; 2]>, r_hat: f64, eta_onset: f64, cle: Cle) -> Result<Self> {
        if lattice.d != 2 || lattice.ds != 3 {
            return input("dislocation predictors need a planar lattice with three displacement components");
        }
        if burgers[1] != 0.0 {
            return input("burgers vector must have the form (b1, 0, b3)");
        }
        if !(r_hat > 0.0) || !(0.0..1.0).contains(&eta_onset) {
            return input("need r_hat > 0 and 0 <= eta_onset < 1");
        }
        let b12 = if burgers[0] == 0.0 {
            [0, 0, 0]
        } else {
            lattice.coords_of([burgers[0], 0.0, 0.0]).ok_or_else(|| Error::Input("in-plane burgers component must be a lattice vector".into()))?
        };
        let core = core.unwrap_or_else(|| default_core(lattice));
        let p = DislocationPredictor { lattice: lattice.clone(), burgers, core, r_hat, eta_onset, cle, correction: HashMap::new(), b12 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        // branch cut must avoid lattice sites
        let reach = 100.0 * self.lattice.max_vector_len();
        for n in self.lattice.points_in_ball([self.core[0], self.core[1], 0.0], reach) {
            let x = self.lattice.position(n);
            if (x[1] - self.core[1]).abs() < 1e-9 && x[0] >= self.core[0] {
                return input(format!("branch cut passes through lattice site {n:?}; move the core"));
            }
        }
        if let Cle::Sextic(c) = &self.cle {
            if c.p.iter().any(|p| !(p.im > 0.0)) {
                return input("sextic roots must have positive imaginary part");
            }
        }
        // xi must be a bijection: d xi_1 / d x1 > 0 on a probe grid
        if self.burgers[0] != 0.0 {
            for i in 1..=200 {
                let r = 2.0 * self.r_hat * i as f64 / 200.0;
                for k in 0..360 {
                    let th = (k as f64 + 0.5) / 360.0 * 2.0 * PI;
                    let x = [self.core[0] + r * th.cos(), self.core[1] + r * th.sin()];
                    if self.xi_jacobian(x) <= 0.0 {
                        return input(format!("r_hat = {} too small: xi is not invertible near {x:?}", self.r_hat));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn on_cut(&self, x: [f64; 2]) -> bool {
        x[1] == self.core[1] && x[0] >= self.core[0]
    }

    /// Angle of x - core in (0, 2 pi).
    pub fn arg(&self, x: [f64; 2]) -> Result<f64> {
        if self.on_cut(x) {
            return Err(Error::Input(format!("point {x:?} lies on the branch cut")));
        }
        let a = (x[1] - self.core[1]).atan2(x[0] - self.core[0]);
        Ok(if a <= 0.0 { a + 2.0 * PI } else { a })
    }

    pub fn eta(&self, s: f64) -> [f64; 2] {
        let w = 1.0 - self.eta_onset;
        let v = smoothstep((s - self.eta_onset) / w);
        [v[0], v[1] / w]
    }

    pub fn cle_eval(&self, x: [f64; 2]) -> Result<Vec3> {
        let th = self.arg(x)?;
        match &self.cle {
            Cle::AntiPlane => Ok([0.0, 0.0, self.burgers[2] * th / (2.0 * PI)]),
            Cle::Sextic(c) => {
                let (dx, dy) = (x[0] - self.core[0], x[1] - self.core[1]);
                let mut u = [0.0; 3];
                for (n, p) in c.p.iter().enumerate() {
                    let z = C64::new(dx, 0.0) + p * dy;
                    // branch of log continuous off the cut: arg z in (0, 2 pi)
                    let mut a = z.arg();
                    if a <= 0.0 {
                        a += 2.0 * PI;
                    }
                    let lz = C64::new(z.norm().ln(), a);
                    for (i, &ci) in c.components.iter().enumerate() {
                        u[ci] += (c.b[i][n] * lz).re;
                    }
                }
                Ok(u)
            }
        }
    }

    pub fn xi(&self, x: [f64; 2]) -> Result<[f64; 2]> {
        if self.burgers[0] == 0.0 {
            return Ok(x);
        }
        let r = ((x[0] - self.core[0]).powi(2) + (x[1] - self.core[1]).powi(2)).sqrt();
        let e = self.eta(r / self.r_hat)[0];
        Ok([x[0] - self.burgers[0] * e * self.arg(x)? / (2.0 * PI), x[1]])
    }

    fn xi_jacobian(&self, x: [f64; 2]) -> f64 {
        let (dx, dy) = (x[0] - self.core[0], x[1] - self.core[1]);
        let r = (dx * dx + dy * dy).sqrt();
        if r == 0.0 {
            return 1.0;
        }
        let e = self.eta(r / self.r_hat);
        let th = self.arg(x).unwrap_or(0.0);
        1.0 - self.burgers[0] / (2.0 * PI) * (e[1] * dx / (r * self.r_hat) * th + e[0] * (-dy) / (r * r))
    }

    /// Inverse of xi by damped Newton on the first coordinate (xi preserves x2).
    pub fn xi_inverse(&self, z: [f64; 2]) -> Result<[f64; 2]> {
        if self.burgers[0] == 0.0 {
            return Ok(z);
        }
        if self.on_cut(z) {
            return Err(Error::Input(format!("point {z:?} lies on the branch cut")));
        }
        let mut x = z;
        let resid = |x: [f64; 2]| -> Result<f64> { Ok(self.xi(x)?[0] - z[0]) };
        let mut f = resid(x)?;
        for _ in 0..50 {
            if f.abs() <= 1e-12 * (1.0 + z[0].abs()) {
                return Ok(x);
            }
            let step = f / self.xi_jacobian(x);
            let mut t = 1.0;
            loop {
                let trial = [x[0] - t * step, x[1]];
                if !self.on_cut(trial) {
                    let ft = resid(trial)?;
                    if ft.abs() < f.abs() || t < 1e-6 {
                        x = trial;
                        f = ft;
                        break;
                    }
                }
                t *= 0.5;
            }
        }
        if f.abs() <= 1e-12 * (1.0 + z[0].abs()) {
            return Ok(x);
        }
        Err(Error::Numeric(format!("xi inverse did not converge at {z:?} (residual {f:e})")))
    }

    /// u0 at the lattice site with integer coordinates n.
    pub fn eval(&self, n: [i64; 3]) -> Result<Vec3> {
        let x = self.lattice.position(n);
        let u = self.cle_eval(self.xi_inverse([x[0], x[1]])?)?;
        Ok(match self.correction.get(&n) {
            Some(c) => add(u, *c),
            None => u,
        })
    }

    fn below(&self, n: [i64; 3]) -> bool {
        self.lattice.position(n)[1] < self.core[1]
    }

    fn shift(&self, n: [i64; 3], s: i64) -> [i64; 3] {
        [n[0] + s * self.b12[0], n[1] + s * self.b12[1], n[2]]
    }

    pub fn in_omega(&self, n: [i64; 3]) -> bool {
        self.lattice.position(n)[0] > self.core[0] + self.r_hat + self.burgers[0]
    }

    /// Applies a slip operator to u at site n.
    pub fn slip_apply(&self, which: Slip, u: &dyn Fn([i64; 3]) -> Result<Vec3>, n: [i64; 3]) -> Result<Vec3> {
        if !self.below(n) {
            return u(n);
        }
        match which {
            Slip::S => u(self.shift(n, -1)),
            Slip::SStar => u(self.shift(n, 1)),
            Slip::S0 => Ok(sub(u(self.shift(n, -1))?, self.burgers)),
        }
    }

    fn s0u0(&self, n: [i64; 3]) -> Result<Vec3> {
        self.slip_apply(Slip::S0, &|m| self.eval(m), n)
    }

    /// e_rho(l): S* D_rho S0 u0 (l) inside Omega_Gamma, D_rho u0 (l) elsewhere.
    pub fn elastic_strain(&self, l: [i64; 3], rho: [i64; 3]) -> Result<Vec3> {
        let lr = [l[0] + rho[0], l[1] + rho[1], l[2] + rho[2]];
        if !self.in_omega(l) {
            return Ok(sub(self.eval(lr)?, self.eval(l)?));
        }
        let base = if self.below(l) { self.shift(l, 1) } else { l };
        let top = [base[0] + rho[0], base[1] + rho[1], base[2] + rho[2]];
        Ok(sub(self.s0u0(top)?, self.s0u0(base)?))
    }

    /// Site m such that (D~_rho u)(l) = u(m) - u(l).
    pub fn permuted_site(&self, l: [i64; 3], rho: [i64; 3]) -> [i64; 3] {
        let lr = [l[0] + rho[0], l[1] + rho[1], l[2] + rho[2]];
        if !self.in_omega(l) {
            return lr;
        }
        let base = if self.below(l) { self.shift(l, 1) } else { l };
        let top = [base[0] + rho[0], base[1] + rho[1], base[2] + rho[2]];
        if self.below(top) {
            self.shift(top, -1)
        } else {
            top
        }
    }

    pub fn permuted_difference(&self, u: &dyn Fn([i64; 3]) -> Vec3, l: [i64; 3], rho: [i64; 3]) -> Vec3 {
        sub(u(self.permuted_site(l, rho)), u(l))
    }

    /// Decay of first (order 1) or second (order 2) differences of u0 along
    /// the first lattice vector over left half-plane sites.
    pub fn decay_fit(&self, window: f64, rmin: f64, rmax: f64, order: usize) -> Result<DecayFit> {
        if !(order == 1 || order == 2) {
            return input("predictor decay fit supports orders 1 and 2");
        }
        let c = [self.core[0], self.core[1], 0.0];
        let mut r = Vec::new();
        let mut v = Vec::new();
        for n in self.lattice.points_in_ball(c, window) {
            let x = self.lattice.position(n);
            if x[0] >= self.core[0] - 2.0 * self.lattice.max_vector_len() {
                continue;
            }
            let at = |k: i64| self.eval([n[0] + k, n[1], n[2]]);
            let val = if order == 1 { norm(sub(at(1)?, at(0)?)) } else { norm(add(sub(at(1)?, at(0)?), sub(at(-1)?, at(0)?))) };
            r.push(norm(sub(x, c)));
            v.push(val);
        }
        decay_fit(&r, &v, rmin, rmax, DecayModel::Power)
    }
}

/// Anisotropic coefficients from the second partials of the homogeneous site
/// potential, restricted to `components`, for Burgers vector `burgers`.
pub fn sextic_cle(pot: &SitePotential, lattice: &BravaisLattice, components: &[usize], burgers: Vec3) -> Result<CleCoefficients> {
    let nc = components.len();
    let stencil = lattice_stencil(lattice, pot.range());
    let g: Vec<Vec3> = stencil.iter().map(|v| v.x).collect();
    let hess = pot.hessian(&g)?;
    let n = g.len();
    let mut q = DMatrix::<f64>::zeros(nc, nc);
    let mut rm = DMatrix::<f64>::zeros(nc, nc);
    let mut t = DMatrix::<f64>::zeros(nc, nc);
    for e in 0..n {
        for f in 0..n {
            let blk = &hess[e * n + f];
            let (re, rf) = (g[e], g[f]);
            for (a, &ca) in components.iter().enumerate() {
                for (b, &cb) in components.iter().enumerate() {
                    let v = blk[ca][cb];
                    q[(a, b)] += v * re[0] * rf[0];
                    rm[(a, b)] += v * re[0] * rf[1];
                    t[(a, b)] += v * re[1] * rf[1];
                }
            }
        }
    }
    let t_inv = t.clone().try_inverse().ok_or_else(|| Error::Numeric("sextic: T matrix is singular".into()))?;
    // Stroh eigenproblem N (a, l) = p (a, l) with l = (R^T + p T) a
    let mut big = DMatrix::<f64>::zeros(2 * nc, 2 * nc);
    let n1 = -&t_inv * rm.transpose();
    let n3 = &rm * &t_inv * rm.transpose() - &q;
    let n4 = -&rm * &t_inv;
    big.view_mut((0, 0), (nc, nc)).copy_from(&n1);
    big.view_mut((0, nc), (nc, nc)).copy_from(&t_inv);
    big.view_mut((nc, 0), (nc, nc)).copy_from(&n3);
    big.view_mut((nc, nc), (nc, nc)).copy_from(&n4);
    let eig = big.complex_eigenvalues();
    let mut roots: Vec<C64> = eig.iter().copied().filter(|p| p.im > 1e-12).collect();
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    if roots.len() != nc {
        return Err(Error::Numeric(format!("sextic: expected {nc} roots in the upper half plane, found {}", roots.len())));
    }
    for i in 0..nc {
        for j in 0..i {
            if (roots[i] - roots[j]).norm() < 1e-8 {
                return Err(Error::Numeric("sextic: repeated roots are not supported".into()));
            }
        }
    }
    let cplx = |m: &DMatrix<f64>| m.map(|x| C64::new(x, 0.0));
    let (qc, rc, tc) = (cplx(&q), cplx(&rm), cplx(&t));
    let mut a_vecs = Vec::new();
    let mut l_vecs = Vec::new();
    for p in &roots {
        let m = &qc + (&rc + rc.transpose()) * *p + &tc * (*p * *p);
        let svd = m.svd(false, true);
        let vt = svd.v_t.ok_or_else(|| Error::Numeric("sextic: null vector failed".into()))?;
        let k = (0..nc).min_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j])).unwrap();
        let a: DVector<C64> = vt.row(k).transpose().map(|z| z.conj());
        let l = (rc.transpose() + &tc * *p) * &a;
        a_vecs.push(a);
        l_vecs.push(l);
    }
    // 2 Re sum_n a_n d_n = b, 2 Re sum_n l_n d_n = 0, with d_n = x_n + i y_n
    let mut sys = DMatrix::<f64>::zeros(2 * nc, 2 * nc);
    let mut rhs = DVector::<f64>::zeros(2 * nc);
    for (i, &ci) in components.iter().enumerate() {
        rhs[i] = burgers[ci];
        for nn in 0..nc {
            let (a, l) = (a_vecs[nn][i], l_vecs[nn][i]);
            sys[(i, nn)] = 2.0 * a.re;
            sys[(i, nc + nn)] = -2.0 * a.im;
            sys[(nc + i, nn)] = 2.0 * l.re;
            sys[(nc + i, nc + nn)] = -2.0 * l.im;
        }
    }
    let sol = sys.lu().solve(&rhs).ok_or_else(|| Error::Numeric("sextic: Burgers/traction system is singular".into()))?;
    let mut b = vec![vec![C64::new(0.0, 0.0); nc]; nc];
    for nn in 0..nc {
        let d = C64::new(sol[nn], sol[nc + nn]);
        // u = Im sum a d log z / pi = Re sum (-i/pi) a d log z
        let f = C64::new(0.0, -1.0 / PI) * d;
        for i in 0..nc {
            b[i][nn] = a_vecs[nn][i] * f;
        }
    }
    Ok(CleCoefficients { components: components.to_vec(), p: roots, b })
}

impl Predictor {
    pub fn eval(&self, n: [i64; 3]) -> Result<Vec3> {
        match self {
            Predictor::PointDefect => Ok([0.0; 3]),
            Predictor::Dislocation(p) => p.eval(n),
        }
    }

    pub fn is_dislocation(&self) -> bool {
        matches!(self, Predictor::Dislocation(_))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Column;
    use crate::potentials::PairForm;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn column_lattice() -> BravaisLattice {
        let b = 3.0 / (2.0 * 2f64.sqrt());
        BravaisLattice::triangular(1.0).with_column(Column { period: b, offset: [b / 3.0, -b / 3.0] }).unwrap()
    }

    fn screw() -> DislocationPredictor {
        let lat = column_lattice();
        let b = lat.column.unwrap().period;
        DislocationPredictor::new(&lat, [0.0, 0.0, b], None, 4.0, 0.5, Cle::AntiPlane).unwrap()
    }

    #[test]
    fn anti_plane_closed_form() {
        let p = screw();
        let c = p.core;
        let u = p.cle_eval([c[0] - 3.0, c[1]]).unwrap();
        assert!((u[2] - 0.5 * p.burgers[2]).abs() < 1e-15);
        let above = p.cle_eval([c[0] + 2.0, c[1] + 1e-9]).unwrap()[2];
        let below = p.cle_eval([c[0] + 2.0, c[1] - 1e-9]).unwrap()[2];
        assert!((below - above - p.burgers[2]).abs() < 1e-8);
        assert!(p.cle_eval([c[0] + 1.0, c[1]]).is_err());
    }

    #[test]
    fn zero_burgers_vector() {
        let lat = column_lattice();
        let p = DislocationPredictor::new(&lat, [0.0; 3], None, 4.0, 0.5, Cle::AntiPlane).unwrap();
        assert_eq!(p.eval([5, -3, 0]).unwrap(), [0.0; 3]);
        assert_eq!(p.elastic_strain([9, -1, 0], [1, 0, 0]).unwrap(), [0.0; 3]);
    }

    #[test]
    fn screw_xi_is_identity() {
        let p = screw();
        assert_eq!(p.xi([3.3, -1.2]).unwrap(), [3.3, -1.2]);
        assert_eq!(p.xi_inverse([3.3, -1.2]).unwrap(), [3.3, -1.2]);
    }

    fn edge() -> DislocationPredictor {
        let lat = column_lattice();
        DislocationPredictor::new(&lat, [1.0, 0.0, 0.0], None, 8.0, 0.5, Cle::AntiPlane).unwrap()
    }

    #[test]
    fn xi_round_trip() {
        let p = edge();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let x = [p.core[0] + rng.gen_range(-12.0..12.0), p.core[1] + rng.gen_range(-12.0..12.0)];
            if p.on_cut(x) {
                continue;
            }
            let back = p.xi_inverse(p.xi(x).unwrap()).unwrap();
            assert!((back[0] - x[0]).abs() < 1e-10 && back[1] == x[1]);
        }
        // below the eta onset xi is the identity
        let x = [p.core[0] - 3.0, p.core[1] + 0.3];
        assert_eq!(p.xi(x).unwrap(), x);
        assert!(DislocationPredictor::new(&column_lattice(), [1.0, 0.0, 0.0], None, 2.0, 0.5, Cle::AntiPlane).is_err());
    }

    #[test]
    fn slip_operators_are_inverse() {
        let p = edge();
        let u = |n: [i64; 3]| -> Result<Vec3> { Ok([(n[0] as f64 * 0.7).sin(), (n[1] as f64).cos(), (n[0] * n[1]) as f64]) };
        for i in -5..5 {
            for j in -5..5 {
                let n = [i, j, 0];
                let su = |m: [i64; 3]| p.slip_apply(Slip::S, &u, m);
                let back = p.slip_apply(Slip::SStar, &su, n).unwrap();
                assert_eq!(back, u(n).unwrap());
                if !p.below(n) {
                    assert_eq!(su(n).unwrap(), u(n).unwrap());
                }
            }
        }
    }

    #[test]
    fn strain_outside_omega_is_plain_difference() {
        let p = screw();
        let l = [-6, 3, 0];
        assert!(!p.in_omega(l));
        let e = p.elastic_strain(l, [1, 0, 0]).unwrap();
        let d = sub(p.eval([-5, 3, 0]).unwrap(), p.eval(l).unwrap());
        assert_eq!(e, d);
    }

    #[test]
    fn strain_is_continuous_across_the_cut() {
        let p = screw();
        // sites straddling the cut inside Omega_Gamma: e stays small
        for i in 8..30 {
            let l = [i, 0, 0];
            assert!(p.in_omega(l));
            for rho in [[0, 1, 0], [1, -1, 0], [0, -1, 0]] {
                let e = p.elastic_strain(l, rho).unwrap();
                assert!(norm(e) < 0.5 * p.burgers[2], "{l:?} {rho:?} {e:?}");
            }
        }
    }

    #[test]
    fn burgers_circuit() {
        let p = screw();
        // loop around the core: sum of elastic strains along the circuit equals b3
        let mut path = Vec::new();
        let r = 20;
        for i in -r..r {
            path.push([i, -r, 0]);
        }
        for j in -r..r {
            path.push([r, j, 0]);
        }
        for i in (-r + 1..=r).rev() {
            path.push([i, r, 0]);
        }
        for j in (-r + 1..=r).rev() {
            path.push([-r, j, 0]);
        }
        let mut total = 0.0;
        for k in 0..path.len() {
            let (a, b) = (path[k], path[(k + 1) % path.len()]);
            // plain differences of u0 jump across the cut; the lattice sum is zero
            total += sub(p.eval(b).unwrap(), p.eval(a).unwrap())[2];
        }
        assert!(total.abs() < 1e-10);
        let mut total = 0.0;
        for k in 0..path.len() {
            let (a, b) = (path[k], path[(k + 1) % path.len()]);
            let rho = [b[0] - a[0], b[1] - a[1], 0];
            total += p.elastic_strain(a, rho).unwrap()[2];
        }
        assert!((total.abs() - p.burgers[2]).abs() < 1e-8, "{total}");
    }

    #[test]
    fn first_differences_decay() {
        let p = screw();
        let f1 = p.decay_fit(70.0, 8.0, 64.0, 1).unwrap();
        assert!((f1.exponent + 1.0).abs() < 0.1, "{}", f1.exponent);
        let f2 = p.decay_fit(70.0, 8.0, 64.0, 2).unwrap();
        assert!((f2.exponent + 2.0).abs() < 0.15, "{}", f2.exponent);
    }

    #[test]
    fn sextic_reduces_to_closed_form() {
        let lat = column_lattice();
        let b = lat.column.unwrap().period;
        let pot = SitePotential::pair(PairForm::LjClassic { eps: 1.0, sigma: 0.9 }, 2.2, 0.4);
        let c = sextic_cle(&pot, &lat, &[2], [0.0, 0.0, b]).unwrap();
        let ps = DislocationPredictor::new(&lat, [0.0, 0.0, b], None, 4.0, 0.5, Cle::Sextic(c)).unwrap();
        let pa = screw();
        // the triangular column lattice is isotropic for the anti-plane operator
        for n in [[7, 2, 0], [-4, -6, 0], [3, 9, 0]] {
            let (a, s) = (pa.eval(n).unwrap()[2], ps.eval(n).unwrap()[2]);
            assert!((a - s).abs() < 1e-8, "{n:?} {a} {s}");
        }
    }
}
