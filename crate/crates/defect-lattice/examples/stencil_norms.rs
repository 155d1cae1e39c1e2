//! Nearest-neighbour versus weighted stencil norms on random compact displacements.

use defect_lattice::lattice::{BravaisLattice, ReferenceConfig};
use defect_lattice::stencil::{norm_equivalence_report, random_displacements, suggest_tail_radius, WeightFunction};

fn main() -> defect_lattice::Result<()> {
    let cfg = ReferenceConfig::homogeneous(BravaisLattice::square(1.0));
    let sample = random_displacements(&cfg, 20, 4.0, 11)?;
    let w = WeightFunction::exponential(2.0, 1);
    let tail = suggest_tail_radius(&cfg, &w, 1e-10, 40.0);
    for k in [1, 2, 3] {
        let rep = norm_equivalence_report(&cfg, &sample, &w, k, tail)?;
        println!(
            "k = {k}: max ||Du||_w/||Du||_N = {:.4} (bound {:?}), max ||Du||_N/||Du||_w = {:?} (bound {:?})",
            rep.upper_ratio, rep.upper_bound, rep.lower_ratio, rep.lower_bound
        );
    }
    Ok(())
}
