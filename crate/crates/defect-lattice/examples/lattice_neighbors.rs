//! Voronoi neighbours around a vacancy and a lattice path that avoids the core.

use defect_lattice::lattice::{lattice_path, neighbors, BravaisLattice, Domain, ReferenceConfig, Site};

fn main() -> defect_lattice::Result<()> {
    let cfg = ReferenceConfig::vacancy(BravaisLattice::triangular(1.0), vec![[0, 0, 0]], 0.5)?;
    let domain = Domain::new(&cfg, 8.0)?;
    let l = domain.index_of([1, 0, 0]).expect("site next to the vacancy");
    let nb = neighbors(&cfg, &domain, l)?;
    println!("site [1,0,0] has {} Voronoi neighbours (6 in the perfect crystal):", nb.neighbors.len());
    for (m, o) in nb.neighbors.iter().zip(&nb.offsets) {
        println!("  {:?}  offset ({:+.3}, {:+.3})", domain.sites[*m].coord.unwrap(), o[0], o[1]);
    }
    let a = Site { coord: Some([-3, 0, 0]), pos: cfg.lattice.position([-3, 0, 0]) };
    let b = Site { coord: Some([3, 0, 0]), pos: cfg.lattice.position([3, 0, 0]) };
    let path = lattice_path(&cfg, a, b)?;
    println!("path [-3,0,0] -> [3,0,0]: {} steps, steps/|l-m| = {:.3}", path.steps(), path.ratio);
    Ok(())
}
