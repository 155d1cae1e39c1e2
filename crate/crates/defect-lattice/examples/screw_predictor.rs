//! Far-field predictor of an anti-plane screw dislocation, slip relabelling
//! and decay of its differences.

use defect_lattice::lattice::{BravaisLattice, Column};
use defect_lattice::predictor::{Cle, DislocationPredictor, Slip};

fn main() -> defect_lattice::Result<()> {
    let b = 3.0 / (2.0 * 2f64.sqrt());
    let lat = BravaisLattice::triangular(1.0).with_column(Column { period: b, offset: [b / 3.0, -b / 3.0] })?;
    let p = DislocationPredictor::new(&lat, [0.0, 0.0, b], Some([0.5, 0.5 / 3f64.sqrt()]), 4.0, 0.5, Cle::AntiPlane)?;
    // both sites sit at x1 = 5.5, one on each side of the cut
    let above = p.eval([5, 1, 0])?[2];
    let below = p.eval([6, -1, 0])?[2];
    println!("u3 below - above the cut = {:.6} (b = {b:.6})", below - above);
    let s0 = p.slip_apply(Slip::S0, &|n| p.eval(n), [6, -1, 0])?[2];
    println!("after S0 relabelling the difference is {:.6}", s0 - above);
    for order in [1, 2] {
        let fit = p.decay_fit(80.0, 8.0, 64.0, order)?;
        println!("order-{order} differences decay like r^{:.3}", fit.exponent);
    }
    Ok(())
}
