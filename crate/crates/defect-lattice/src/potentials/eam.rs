//! Embedded-atom site energies J(sum rho(r)).

use crate::error::{input, Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Embedding {
    /// J(s) = -sqrt(s)
    MinusSqrt,
    /// J(s) = sum_k c[k] s^k
    Polynomial { coefficients: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Density {
    /// (1 + r)^-q
    Algebraic { q: f64 },
    /// exp(-beta r)
    Exponential { beta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EamParams {
    pub embedding: Embedding,
    pub density: Density,
}

impl Embedding {
    pub fn eval(&self, s: f64) -> Result<[f64; 3]> {
        match self {
            Embedding::MinusSqrt => {
                if !(s > 0.0) {
                    return Err(Error::Evaluation(format!("embedding density must be positive, got {s}")));
                }
                let r = s.sqrt();
                Ok([-r, -0.5 / r, 0.25 / (s * r)])
            }
            Embedding::Polynomial { coefficients } => {
                let (mut v, mut d1, mut d2) = (0.0, 0.0, 0.0);
                let mut pk = 1.0;
                let (mut pk1, mut pk2) = (0.0, 0.0);
                for (k, c) in coefficients.iter().enumerate() {
                    let k = k as f64;
                    v += c * pk;
                    d1 += c * k * pk1;
                    d2 += c * k * (k - 1.0) * pk2;
                    // advance s^k, s^(k-1), s^(k-2)
                    pk2 = pk1;
                    pk1 = pk;
                    pk *= s;
                }
                Ok([v, d1, d2])
            }
        }
    }
}

impl Density {
    pub fn eval(&self, r: f64) -> [f64; 3] {
        match *self {
            Density::Algebraic { q } => {
                let b = 1.0 + r;
                let v = b.powf(-q);
                [v, -q * v / b, q * (q + 1.0) * v / (b * b)]
            }
            Density::Exponential { beta } => {
                let v = (-beta * r).exp();
                [v, -beta * v, beta * beta * v]
            }
        }
    }

    pub fn decay_exponent(&self) -> Option<f64> {
        match *self {
            Density::Algebraic { q } => Some(q),
            Density::Exponential { .. } => None,
        }
    }
}

impl EamParams {
    pub fn validate(&self) -> Result<()> {
        match self.density {
            Density::Algebraic { q } if !(q > 0.0) => return input("eam density needs q > 0"),
            Density::Exponential { beta } if !(beta > 0.0) => return input("eam density needs beta > 0"),
            _ => {}
        }
        if let Embedding::Polynomial { coefficients } = &self.embedding {
            if coefficients.is_empty() || coefficients.iter().any(|c| !c.is_finite()) {
                return input("eam polynomial embedding needs finite coefficients");
            }
        }
        Ok(())
    }
}
