//! Two-centre, one orbital per site tight binding with a grand-canonical
//! band energy distributed onto sites.

use crate::error::{input, Error, Result};
use crate::vec3::{norm, sub, Vec3};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

fn default_e0() -> f64 {
    0.0
}
fn default_t0() -> f64 {
    1.0
}
fn default_beta() -> f64 {
    1.0
}
fn default_rc() -> f64 {
    1.5
}
fn default_mu() -> f64 {
    0.0
}
fn default_kt() -> f64 {
    0.1
}
fn default_ball() -> f64 {
    4.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TbParams {
    /// h_ons(s) = e0 + ons_slope * s
    #[serde(default = "default_e0")]
    pub e0: f64,
    #[serde(default)]
    pub ons_slope: f64,
    /// on-site density exp(-ons_beta r) tau(r)
    #[serde(default = "default_beta")]
    pub ons_beta: f64,
    /// hopping -t0 exp(-hop_beta (r - 1)) tau(r)
    #[serde(default = "default_t0")]
    pub t0: f64,
    #[serde(default = "default_beta")]
    pub hop_beta: f64,
    /// tau(r) = (1 - (r/rc)^2)^5 for r < rc, zero beyond
    #[serde(default = "default_rc")]
    pub rc: f64,
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default = "default_kt")]
    pub kt: f64,
    /// Radius of the ball on which the Hamiltonian is assembled.
    #[serde(default = "default_ball")]
    pub ball_radius: f64,
    /// Decay rate of the declared locality weight exp(-rate r).
    #[serde(default = "default_rate")]
    pub locality_rate: f64,
}

fn default_rate() -> f64 {
    0.2
}

impl Default for TbParams {
    fn default() -> Self {
        TbParams {
            e0: default_e0(),
            ons_slope: 0.0,
            ons_beta: default_beta(),
            t0: default_t0(),
            hop_beta: default_beta(),
            rc: default_rc(),
            mu: default_mu(),
            kt: default_kt(),
            ball_radius: default_ball(),
            locality_rate: default_rate(),
        }
    }
}

fn tau(r: f64, rc: f64) -> f64 {
    if r >= rc {
        0.0
    } else {
        (1.0 - (r / rc).powi(2)).powi(5)
    }
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

impl TbParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.kt > 0.0) {
            return input("tb: temperature must be positive");
        }
        if !(self.rc > 0.0) || !(self.ball_radius >= self.rc) {
            return input("tb: need 0 < rc <= ball_radius");
        }
        if !(self.locality_rate > 0.0) {
            return input("tb: locality_rate must be positive");
        }
        for v in [self.e0, self.ons_slope, self.ons_beta, self.t0, self.hop_beta, self.mu] {
            if !v.is_finite() {
                return input("tb: parameters must be finite");
            }
        }
        Ok(())
    }

    pub fn hopping(&self, r: f64) -> f64 {
        -self.t0 * (-self.hop_beta * (r - 1.0)).exp() * tau(r, self.rc)
    }

    pub fn onsite_density(&self, r: f64) -> f64 {
        (-self.ons_beta * r).exp() * tau(r, self.rc)
    }

    /// Grand potential per orbital, 2 kT log(1 - f_FD(e)).
    pub fn grand_potential(&self, e: f64) -> f64 {
        -2.0 * self.kt * softplus(-(e - self.mu) / self.kt)
    }

    /// Hamiltonian on the given positions.
    pub fn hamiltonian(&self, pos: &[Vec3]) -> Result<DMatrix<f64>> {
        let n = pos.len();
        let mut h = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            let mut dens = 0.0;
            for j in 0..n {
                if i == j {
                    continue;
                }
                let r = norm(sub(pos[i], pos[j]));
                if !(r > 0.0) {
                    return Err(Error::Evaluation(format!("tb: sites {i} and {j} collide")));
                }
                dens += self.onsite_density(r);
                if j > i {
                    let t = self.hopping(r);
                    h[(i, j)] = t;
                    h[(j, i)] = t;
                }
            }
            h[(i, i)] = self.e0 + self.ons_slope * dens;
        }
        Ok(h)
    }

    /// Site energy of the atom at the origin surrounded by atoms at `g`.
    /// Every entry of `g` is part of the Hamiltonian; the ball is the stencil
    /// the caller built from reference vectors, so membership does not change
    /// under deformation.
    pub fn site_energy(&self, g: &[Vec3]) -> Result<f64> {
        let mut pos = Vec::with_capacity(g.len() + 1);
        pos.push([0.0; 3]);
        pos.extend_from_slice(g);
        let h = self.hamiltonian(&pos)?;
        let n = pos.len();
        let (vals, row0) = eigen_first_row(h)?;
        let mut terms: Vec<f64> = (0..n).map(|s| self.grand_potential(vals[s]) * row0[s].powi(2)).collect();
        terms.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
        Ok(terms.iter().sum())
    }

    /// Central differences of site_energy with one Richardson step.
    pub fn site_gradient(&self, g: &[Vec3], h: f64) -> Result<Vec<Vec3>> {
        let planar = g.iter().all(|x| x[2] == 0.0);
        let comps = if planar { 2 } else { 3 };
        let mut out = vec![[0.0; 3]; g.len()];
        let mut work = g.to_vec();
        for i in 0..g.len() {
            for c in 0..comps {
                let mut diff = |step: f64| -> Result<f64> {
                    work[i][c] = g[i][c] + step;
                    let p = self.site_energy(&work)?;
                    work[i][c] = g[i][c] - step;
                    let m = self.site_energy(&work)?;
                    work[i][c] = g[i][c];
                    Ok((p - m) / (2.0 * step))
                };
                let d1 = diff(h)?;
                let d2 = diff(0.5 * h)?;
                out[i][c] = (4.0 * d2 - d1) / 3.0;
            }
        }
        Ok(out)
    }
}

/// Eigenvalues of a symmetric matrix and the first component of each
/// eigenvector. Householder reflectors act on rows 1.. only, so e_0 is left
/// fixed and the first components come from the tridiagonal QL iteration.
fn eigen_first_row(h: DMatrix<f64>) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = h.nrows();
    let mut a: Vec<f64> = (0..n * n).map(|k| h[(k / n, k % n)]).collect();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut w = vec![0.0; n];
    for k in 0..n.saturating_sub(2) {
        let m = k + 1;
        let xnorm = (m..n).map(|i| a[i * n + k].powi(2)).sum::<f64>().sqrt();
        d[k] = a[k * n + k];
        if xnorm == 0.0 {
            e[k] = 0.0;
            continue;
        }
        let x0 = a[m * n + k];
        let alpha = if x0 > 0.0 { -xnorm } else { xnorm };
        for i in m..n {
            v[i] = a[i * n + k];
        }
        v[m] -= alpha;
        let vn = (m..n).map(|i| v[i] * v[i]).sum::<f64>().sqrt();
        if vn == 0.0 {
            e[k] = x0;
            continue;
        }
        for i in m..n {
            v[i] /= vn;
        }
        // A <- H A H on the trailing block, H = I - 2 v v^T
        let mut kk = 0.0;
        for i in m..n {
            let row = &a[i * n..(i + 1) * n];
            w[i] = (m..n).map(|j| row[j] * v[j]).sum::<f64>();
            kk += v[i] * w[i];
        }
        for i in m..n {
            w[i] -= kk * v[i];
        }
        for i in m..n {
            for j in m..n {
                a[i * n + j] -= 2.0 * (v[i] * w[j] + w[i] * v[j]);
            }
        }
        e[k] = alpha;
    }
    if n >= 2 {
        d[n - 2] = a[(n - 2) * n + n - 2];
        e[n - 2] = a[(n - 1) * n + n - 2];
    }
    if n >= 1 {
        d[n - 1] = a[n * n - 1];
    }
    let mut z = vec![0.0; n];
    if n > 0 {
        z[0] = 1.0;
    }
    tql_first_row(&mut d, &mut e, &mut z)?;
    Ok((d, z))
}

/// Implicit QL with Wilkinson shifts on the tridiagonal (d, e), e[i] coupling
/// i and i+1. Rotations are applied to the row vector z.
fn tql_first_row(d: &mut [f64], e: &mut [f64], z: &mut [f64]) -> Result<()> {
    let n = d.len();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::Numeric("tb: QL eigensolver did not converge".into()));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let zf = z[i + 1];
                z[i + 1] = s * z[i] + c * zf;
                z[i] = c * z[i] - s * zf;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_site_partition() {
        let p = TbParams { ons_slope: 0.0, e0: 0.3, ..TbParams::default() };
        let r = 1.1;
        let t = p.hopping(r);
        let phi = p.site_energy(&[[r, 0.0, 0.0]]).unwrap();
        let expect = 0.5 * (p.grand_potential(0.3 + t) + p.grand_potential(0.3 - t));
        assert!((phi - expect).abs() < 1e-14);
        let other = p.site_energy(&[[-r, 0.0, 0.0]]).unwrap();
        assert!((phi - other).abs() < 1e-14);
    }

    #[test]
    fn hopping_vanishes_at_cutoff() {
        let p = TbParams::default();
        assert_eq!(p.hopping(p.rc), 0.0);
        assert_eq!(p.hopping(p.rc + 0.3), 0.0);
        assert!(p.hopping(1.0) < 0.0);
    }

    #[test]
    fn grand_potential_limits() {
        let p = TbParams::default();
        assert!(p.grand_potential(5.0).abs() < 1e-20);
        assert!((p.grand_potential(-5.0) - 2.0 * -5.0).abs() < 1e-15);
    }

    #[test]
    fn three_site_chain_gradient() {
        let p = TbParams { ons_slope: 0.4, ..TbParams::default() };
        let g = [[1.02, 0.03, 0.0], [-0.97, 0.05, 0.0]];
        let step = 1e-5;
        let grad = p.site_gradient(&g, step).unwrap();
        // independent oracle: plain central differences at two coarser steps
        for i in 0..2 {
            for c in 0..2 {
                let fd = |h: f64| {
                    let mut a = g;
                    a[i][c] += h;
                    let mut b = g;
                    b[i][c] -= h;
                    (p.site_energy(&a).unwrap() - p.site_energy(&b).unwrap()) / (2.0 * h)
                };
                let (a, b) = (fd(1e-4), fd(2e-4));
                let rich = (4.0 * a - b) / 3.0;
                assert!((grad[i][c] - rich).abs() <= 1e-6 * rich.abs().max(1e-3), "{i} {c} {} {}", grad[i][c], rich);
            }
        }
    }

    #[test]
    fn eigen_first_row_matches_moments() {
        let n = 7;
        let a = DMatrix::from_fn(n, n, |i, j| ((i * 3 + j * 3 + i * j) % 11) as f64 * 0.1 + if i == j { i as f64 } else { 0.0 });
        let (vals, row0) = eigen_first_row(a.clone()).unwrap();
        // trace and (A)_00 = sum_s lambda_s v_0s^2
        let tr: f64 = vals.iter().sum();
        assert!((tr - a.trace()).abs() < 1e-12);
        let a00: f64 = vals.iter().zip(&row0).map(|(l, v)| l * v * v).sum();
        assert!((a00 - a[(0, 0)]).abs() < 1e-12);
        let a2_00: f64 = vals.iter().zip(&row0).map(|(l, v)| l * l * v * v).sum();
        assert!((a2_00 - (&a * &a)[(0, 0)]).abs() < 1e-11);
        assert!((row0.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-13);
    }
}
