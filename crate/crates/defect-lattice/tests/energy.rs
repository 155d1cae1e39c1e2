//! Energy functional checked against direct summation over deformed point sets.

use defect_lattice::lattice::{generate_sites, BravaisLattice, Column, DefectKind, ReferenceConfig};
use defect_lattice::potentials::{site_energy, Density, EamParams, Embedding, PairForm, SitePotential};
use defect_lattice::predictor::{Cle, DislocationPredictor, Predictor};
use defect_lattice::relax::{equilibrium_scale, EnergyModel, MinimizeOptions, ModelOptions, Termination};
use defect_lattice::stencil::random_displacements;
use defect_lattice::vec3::{add, norm, sub, Vec3};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn lj_vacancy(rc: f64, width: f64) -> (ReferenceConfig, SitePotential) {
    let cfg = ReferenceConfig::vacancy(BravaisLattice::triangular(1.0), vec![[0, 0, 0]], 0.5).unwrap();
    (cfg, SitePotential::pair(PairForm::LjClassic { eps: 1.0, sigma: 2f64.powf(-1.0 / 6.0) }, rc, width))
}

#[test]
fn single_site_bump_matches_brute_force_sum() {
    let (cfg, pot) = lj_vacancy(2.2, 0.4);
    let model = EnergyModel::new(cfg.clone(), pot.clone(), Predictor::PointDefect, 12.0).unwrap();
    let target = model.free_sites().iter().position(|s| s.coord == Some([2, 1, 0])).unwrap();
    let bump = [0.04, -0.03, 0.0];
    let mut x = vec![0.0; model.n_dof()];
    x[2 * target] = bump[0];
    x[2 * target + 1] = bump[1];
    let e_model = model.energy(&x).unwrap();

    let x0 = model.free_sites()[target].pos;
    let range = pot.range();
    let sites = generate_sites(&cfg, norm(x0) + 2.0 * range + 2.0).unwrap();
    let refpos: Vec<Vec3> = sites.iter().map(|s| s.pos).collect();
    let deformed: Vec<Vec3> = sites.iter().map(|s| if s.coord == Some([2, 1, 0]) { add(s.pos, bump) } else { s.pos }).collect();
    let mut e_direct = 0.0;
    for (i, p) in refpos.iter().enumerate() {
        if norm(sub(*p, x0)) <= range + 1e-9 {
            e_direct += site_energy(&pot, &deformed, i).unwrap() - site_energy(&pot, &refpos, i).unwrap();
        }
    }
    assert!(e_direct.abs() > 1e-6);
    assert!((e_model - e_direct).abs() <= 1e-8 * e_direct.abs(), "model {e_model} direct {e_direct}");
}

#[test]
fn clamped_energy_does_not_depend_on_domain_size() {
    let (cfg, pot) = lj_vacancy(1.9, 0.4);
    let small = EnergyModel::new(cfg.clone(), pot.clone(), Predictor::PointDefect, 10.0).unwrap();
    let large = EnergyModel::new(cfg.clone(), pot, Predictor::PointDefect, 14.0).unwrap();
    for u in random_displacements(&cfg, 5, 3.0, 7).unwrap() {
        let u = u.scaled(0.03);
        let (a, b) = (small.energy_diff(&u).unwrap(), large.energy_diff(&u).unwrap());
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-3), "{a} vs {b}");
    }
}

#[test]
fn harmonic_model_with_load_matches_dense_solve() {
    let cfg = ReferenceConfig::homogeneous(BravaisLattice::square(1.0));
    let pot = SitePotential::pair(PairForm::Harmonic { k: 0.5, r0: 0.0 }, 1.2, 0.1);
    let mut model = EnergyModel::new(cfg, pot, Predictor::PointDefect, 8.0).unwrap();
    let n = model.n_dof();
    let zero = vec![0.0; n];
    let mut h = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        for (i, v) in model.hessian_vector(&zero, &e).unwrap().into_iter().enumerate() {
            h[(i, j)] = v;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let f: Vec<f64> = (0..n).map(|_| rng.gen_range(-1e-3..1e-3)).collect();
    let exact = h.clone().cholesky().expect("positive definite").solve(&DVector::from_vec(f.clone()));
    model.load = Some(f);
    let res = model.minimize(&MinimizeOptions { tol: 1e-12, ..Default::default() }).unwrap();
    assert_eq!(res.reason, Termination::Converged);
    let err = res.x.iter().zip(exact.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let scale = exact.iter().map(|v| v.abs()).fold(0.0, f64::max);
    assert!(err <= 1e-6 * scale, "err {err} scale {scale}");
}

#[test]
fn eam_vacancy_forces_vanish_beyond_twice_the_range() {
    let cfg = ReferenceConfig::vacancy(BravaisLattice::square(1.0), vec![[0, 0, 0]], 0.5).unwrap();
    let pot = SitePotential::eam(EamParams { embedding: Embedding::MinusSqrt, density: Density::Algebraic { q: 6.0 } }, 2.5, 0.5);
    let model = EnergyModel::new(cfg, pot, Predictor::PointDefect, 14.0).unwrap();
    let range = model.potential.range();
    let (r, f) = model.residual_force().unwrap().magnitudes();
    let near = r.iter().zip(&f).filter(|(r, _)| **r <= range).map(|(_, f)| *f).fold(0.0, f64::max);
    let far = r.iter().zip(&f).filter(|(r, _)| **r > 2.0 * range + 1e-9).map(|(_, f)| *f).fold(0.0, f64::max);
    assert!(near > 1e-4, "near {near}");
    assert!(far <= 1e-12, "far {far}");
}

/// The slip-corrected site energies of a screw dislocation agree with the
/// energies of the deformed three-dimensional point set. The Burgers vector
/// equals the column period, so the multivalued predictor defines a single
/// point set.
#[test]
fn screw_site_energies_match_deformed_point_set() {
    let b = 3.0 / (2.0 * 2f64.sqrt());
    let lat = BravaisLattice::triangular(1.0).with_column(Column { period: b, offset: [b / 3.0, -b / 3.0] }).unwrap();
    let pot = SitePotential::pair(PairForm::LjClassic { eps: 1.0, sigma: b * 2f64.powf(-1.0 / 6.0) }, 2.0, 0.4);
    let s = equilibrium_scale(&pot, &lat).unwrap();
    let lat = lat.scaled(s);
    let core = [0.5 * s, 0.5 * s / 3f64.sqrt()];
    let p = DislocationPredictor::new(&lat, [0.0, 0.0, b * s], Some(core), 4.0, 0.5, Cle::AntiPlane).unwrap();
    let cfg = ReferenceConfig { lattice: lat.clone(), kind: DefectKind::Dislocation, r_def: 0.0 };
    let predictor = Predictor::Dislocation(Box::new(p));
    let opts = ModelOptions { components: vec![2], skin: None };
    let model = EnergyModel::with_options(cfg.clone(), pot.clone(), predictor.clone(), 16.0, &opts).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x: Vec<f64> = (0..model.n_dof()).map(|_| rng.gen_range(-0.03..0.03)).collect();
    let u = model.to_displacement(&x).unwrap();
    let energies = model.site_energies(&x).unwrap();

    let range = pot.range();
    let probe = 7.0;
    let period = b * s;
    let k_max = (range / period).ceil() as i64 + 1;
    let col = lat.column.unwrap();
    let mut cloud = Vec::new();
    let mut centre = std::collections::HashMap::new();
    for site in generate_sites(&cfg, probe + range + 2.0).unwrap() {
        let n = site.coord.unwrap();
        let y = add(add(site.pos, predictor.eval(n).unwrap()), u.at(site.pos));
        for k in -k_max..=k_max {
            if k == 0 {
                centre.insert(n, cloud.len());
            }
            cloud.push([y[0], y[1], y[2] + col.height(n) + k as f64 * period]);
        }
    }
    let mut checked = 0;
    for (site, v) in energies.iter().filter(|(s, _)| norm(s.pos) <= probe) {
        let direct = site_energy(&pot, &cloud, centre[&site.coord.unwrap()]).unwrap();
        assert!((v - direct).abs() <= 1e-10 * direct.abs().max(1.0), "site {:?}: slip form {v}, direct {direct}", site.coord);
        checked += 1;
    }
    assert!(checked > 100);
}
