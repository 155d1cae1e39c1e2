//! Shell-maximum decay fits on synthetic fields, with and without a log factor.

use defect_lattice::analysis::{decay_fit, DecayModel};

fn main() -> defect_lattice::Result<()> {
    let mut r = Vec::new();
    for i in -200i64..=200 {
        for j in -200i64..=200 {
            r.push(((i * i + j * j) as f64).sqrt());
        }
    }
    let fields: [(&str, fn(f64) -> f64); 3] = [
        ("r^-2", |x| x.powi(-2)),
        ("r^-2 log r", |x| x.powi(-2) * (2.0 + x).ln()),
        ("r^-3", |x| x.powi(-3)),
    ];
    for (name, f) in fields {
        let v: Vec<f64> = r.iter().map(|x| if *x > 0.0 { f(*x) } else { 0.0 }).collect();
        for m in [DecayModel::Power, DecayModel::PowerLog] {
            let fit = decay_fit(&r, &v, 8.0, 190.0, m)?;
            println!("{name:12} {m:?}: exponent {:+.4} (R2 {:.6})", fit.exponent, fit.r2);
        }
    }
    Ok(())
}
