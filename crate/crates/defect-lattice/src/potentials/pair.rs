//! Pair interactions phi(r).

use crate::error::{input, Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum PairForm {
    /// phi(r) = c1 r^-p - c2 r^-q
    Lj { p: f64, q: f64, c1: f64, c2: f64 },
    /// 4 eps ((sigma/r)^12 - (sigma/r)^6)
    LjClassic { eps: f64, sigma: f64 },
    /// d (exp(-2a(r - r0)) - 2 exp(-a(r - r0)))
    Morse { d: f64, a: f64, r0: f64 },
    /// k (r - r0)^2, only meaningful with a hard cutoff
    Harmonic { k: f64, r0: f64 },
}

impl PairForm {
    pub fn validate(&self) -> Result<()> {
        let ok = |c: bool, msg: &str| if c { Ok(()) } else { input(msg.to_string()) };
        match *self {
            PairForm::Lj { p, q, c1, c2 } => {
                ok(p > q && q > 0.0, "lj: need p > q > 0")?;
                ok(c1 > 0.0 && c2 > 0.0, "lj: need c1, c2 > 0")
            }
            PairForm::LjClassic { eps, sigma } => ok(eps > 0.0 && sigma > 0.0, "lj-classic: need eps, sigma > 0"),
            PairForm::Morse { d, a, r0 } => ok(d > 0.0 && a > 0.0 && r0 > 0.0, "morse: need d, a, r0 > 0"),
            PairForm::Harmonic { k, r0 } => ok(k.is_finite() && r0 >= 0.0, "harmonic: need finite k and r0 >= 0"),
        }
    }

    /// Algebraic decay exponent of phi, None for exponential or non-decaying forms.
    pub fn decay_exponent(&self) -> Option<f64> {
        match *self {
            PairForm::Lj { q, .. } => Some(q),
            PairForm::LjClassic { .. } => Some(6.0),
            _ => None,
        }
    }

    /// Nonincreasing majorant of |phi|, used for tail bounds.
    pub fn majorant(&self, r: f64) -> f64 {
        match *self {
            PairForm::Lj { p, q, c1, c2 } => c1 * r.powf(-p) + c2 * r.powf(-q),
            PairForm::LjClassic { eps, sigma } => 4.0 * eps * ((sigma / r).powi(12) + (sigma / r).powi(6)),
            PairForm::Morse { d, a, r0 } => d * ((-2.0 * a * (r - r0)).exp() + 2.0 * (-a * (r - r0)).exp()),
            PairForm::Harmonic { .. } => f64::INFINITY,
        }
    }

    /// Value and first two derivatives.
    pub fn eval(&self, r: f64) -> Result<[f64; 3]> {
        if !(r > 0.0) {
            return Err(Error::Evaluation(format!("pair distance must be positive, got {r}")));
        }
        Ok(match *self {
            PairForm::Lj { p, q, c1, c2 } => {
                let (a, b) = (c1 * r.powf(-p), c2 * r.powf(-q));
                [a - b, (-p * a + q * b) / r, (p * (p + 1.0) * a - q * (q + 1.0) * b) / (r * r)]
            }
            PairForm::LjClassic { eps, sigma } => {
                let s6 = (sigma / r).powi(6);
                let s12 = s6 * s6;
                [4.0 * eps * (s12 - s6), 4.0 * eps * (-12.0 * s12 + 6.0 * s6) / r, 4.0 * eps * (156.0 * s12 - 42.0 * s6) / (r * r)]
            }
            PairForm::Morse { d, a, r0 } => {
                let e = (-a * (r - r0)).exp();
                [d * (e * e - 2.0 * e), d * (-2.0 * a * e * e + 2.0 * a * e), d * (4.0 * a * a * e * e - 2.0 * a * a * e)]
            }
            PairForm::Harmonic { k, r0 } => [k * (r - r0) * (r - r0), 2.0 * k * (r - r0), 2.0 * k],
        })
    }
}

pub fn pair_phi(form: &PairForm, r: f64) -> Result<[f64; 3]> {
    form.eval(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lj_classic_zero_and_minimum() {
        let f = PairForm::LjClassic { eps: 1.0, sigma: 1.0 };
        assert_eq!(pair_phi(&f, 1.0).unwrap()[0], 0.0);
        let rm = 2f64.powf(1.0 / 6.0);
        let v = pair_phi(&f, rm).unwrap();
        assert!(v[1].abs() < 1e-12);
        assert!((v[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn morse_minimum() {
        let f = PairForm::Morse { d: 1.0, a: 1.0, r0: 1.0 };
        let v = pair_phi(&f, 1.0).unwrap();
        assert_eq!(v[0], -1.0);
        assert_eq!(v[1], 0.0);
    }

    #[test]
    fn nonpositive_distance_rejected() {
        let f = PairForm::LjClassic { eps: 1.0, sigma: 1.0 };
        assert!(pair_phi(&f, 0.0).is_err());
        assert!(pair_phi(&f, -1.0).is_err());
    }

    #[test]
    fn derivatives_match_differences() {
        let forms = [
            PairForm::Lj { p: 12.0, q: 6.0, c1: 1.0, c2: 2.0 },
            PairForm::LjClassic { eps: 0.7, sigma: 1.1 },
            PairForm::Morse { d: 1.3, a: 1.7, r0: 1.0 },
            PairForm::Harmonic { k: 0.5, r0: 1.0 },
        ];
        let h = 1e-5;
        for f in forms {
            for r in [0.9, 1.2, 1.9] {
                let v = f.eval(r).unwrap();
                let (p, m) = (f.eval(r + h).unwrap(), f.eval(r - h).unwrap());
                let d1 = (p[0] - m[0]) / (2.0 * h);
                let d2 = (p[1] - m[1]) / (2.0 * h);
                assert!((d1 - v[1]).abs() <= 1e-7 * (1.0 + v[1].abs()), "{f:?} {r}");
                assert!((d2 - v[2]).abs() <= 1e-6 * (1.0 + v[2].abs()), "{f:?} {r}");
            }
        }
    }

    #[test]
    fn generalized_lj_matches_classic() {
        let g = PairForm::Lj { p: 12.0, q: 6.0, c1: 4.0, c2: 4.0 };
        let c = PairForm::LjClassic { eps: 1.0, sigma: 1.0 };
        for r in [0.95, 1.3, 2.4] {
            let (a, b) = (g.eval(r).unwrap(), c.eval(r).unwrap());
            for i in 0..3 {
                assert!((a[i] - b[i]).abs() < 1e-12 * (1.0 + b[i].abs()));
            }
        }
    }
}
