//! Acceptance suite: one PASS/FAIL line per criterion.

use defect_lattice::analysis::{decay_fit, DecayModel};
use defect_lattice::config::RunConfig;
use defect_lattice::homogeneous::{force_constants, green_decay_fit, green_function, green_residual, stability_scan};
use defect_lattice::lattice::{generate_sites, BravaisLattice, ReferenceConfig};
use defect_lattice::potentials::{lattice_stencil, locality_probe, point_symmetry_check, Density, EamParams, Embedding, PairForm, SitePotential, TbParams};
use defect_lattice::predictor::{DislocationPredictor, Predictor};
use defect_lattice::relax::{EnergyModel, MinimizeOptions, Termination};
use defect_lattice::stencil::{nn_norm, norm_equivalence_report, random_displacements, suggest_tail_radius, WeightFunction};
use defect_lattice::vec3::{add, norm, sub, Vec3};
use defect_lattice::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn config(name: &str, overrides: &[&str]) -> RunConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name);
    let ov: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    RunConfig::load(&path, &ov).expect("shipped config")
}

fn lj() -> SitePotential {
    SitePotential::pair(PairForm::LjClassic { eps: 1.0, sigma: 2f64.powf(-1.0 / 6.0) }, 2.5, 0.5)
}

fn morse() -> SitePotential {
    SitePotential::pair(PairForm::Morse { d: 1.0, a: 2.0, r0: 1.0 }, 2.5, 0.5)
}

fn eam() -> SitePotential {
    SitePotential::eam(EamParams { embedding: Embedding::MinusSqrt, density: Density::Algebraic { q: 6.0 } }, 2.5, 0.5)
}

fn tb() -> SitePotential {
    SitePotential::tb(TbParams::default())
}

fn gradient_consistency() -> Result<Outcome> {
    let cfg = ReferenceConfig::vacancy(BravaisLattice::triangular(1.0), vec![[0, 0, 0]], 0.5)?;
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, pot, tol) in [("lj", lj(), 1e-6), ("morse", morse(), 1e-6), ("eam", eam(), 1e-6), ("tb", tb(), 1e-4)] {
        let model = EnergyModel::new(cfg.clone(), pot, Predictor::PointDefect, 8.0)?;
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let x: Vec<f64> = (0..model.n_dof()).map(|_| rng.gen_range(-0.03..0.03)).collect();
        let chk = model.gradient_check(&x, 40, 1e-4, 23)?;
        pass &= chk.relative_error <= tol;
        parts.push(format!("{name} {:.1e} (tol {tol:.0e})", chk.relative_error));
    }
    outcome(pass, parts.join(", "))
}

fn zero_net_force() -> Result<Outcome> {
    let cfg = ReferenceConfig::homogeneous(BravaisLattice::triangular(1.0));
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (name, pot, r_dom) in [("lj", lj(), 14.0), ("morse", morse(), 14.0), ("eam", eam(), 14.0), ("tb", tb(), 10.0)] {
        let model = EnergyModel::new(cfg.clone(), pot, Predictor::PointDefect, r_dom)?;
        let g = model.gradient(&vec![0.0; model.n_dof()])?;
        let mut w: f64 = 0.0;
        for u in random_displacements(&cfg, 100, model.r_free() - 1.0, 29)? {
            let x = model.flatten(&u)?;
            let pairing: f64 = g.iter().zip(&x).map(|(a, b)| a * b).sum();
            w = w.max(pairing.abs() / nn_norm(&cfg, &u)?.global);
        }
        parts.push(format!("{name} {w:.1e}"));
        worst = worst.max(w);
    }
    outcome(worst <= 1e-10, format!("max |<dE(0), u>| / ||Du||: {} over 100 samples each (tol 1e-10)", parts.join(", ")))
}

/// Both sides of V(D(u0 + u)) = V(e + D~u) at one site.
fn slip_sides(p: &DislocationPredictor, pot: &SitePotential, stencil: &[defect_lattice::potentials::LatticeVector], u: &dyn Fn([i64; 3]) -> Vec3, l: [i64; 3]) -> Result<(f64, f64)> {
    let shift = |a: [i64; 3], b: [i64; 3]| [a[0] + b[0], a[1] + b[1], 0];
    let (u0l, ul) = (p.eval(l)?, u(l));
    let mut raw = Vec::with_capacity(stencil.len());
    let mut slip = Vec::with_capacity(stencil.len());
    for v in stencil {
        let m = shift(l, v.n);
        raw.push(add(v.x, sub(add(p.eval(m)?, u(m)), add(u0l, ul))));
        slip.push(add(v.x, add(p.elastic_strain(l, v.n)?, sub(u(p.permuted_site(l, v.n)), ul))));
    }
    Ok((pot.energy(&raw)?, pot.energy(&slip)?))
}

fn symmetry_identities() -> Result<Outcome> {
    let mut worst_sym: f64 = 0.0;
    for (lat, pot) in [
        (BravaisLattice::triangular(1.0), lj()),
        (BravaisLattice::square(1.0), morse()),
        (BravaisLattice::square(1.0), eam()),
        (BravaisLattice::triangular(1.0), tb()),
    ] {
        worst_sym = worst_sym.max(point_symmetry_check(&pot, &lat, 20, 0.05, 31)?);
    }

    let mut worst_slip: f64 = 0.0;
    let mut sites = 0;
    let screw = config("screw.toml", &[]);
    let edge = config("edge.toml", &[]);
    let (screw_spec, _) = screw.model_spec()?;
    let (edge_spec, _) = edge.model_spec()?;
    let nn = screw_spec.config.lattice.nn_distance();
    let cases = [
        (&screw_spec, screw_spec.potential.clone()),
        (&screw_spec, SitePotential::pair(PairForm::Morse { d: 1.0, a: 2.0, r0: nn }, 2.0, 0.4)),
        (&screw_spec, SitePotential::eam(EamParams { embedding: Embedding::MinusSqrt, density: Density::Algebraic { q: 6.0 } }, 2.0, 0.4)),
        (&edge_spec, edge_spec.potential.clone()),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    for (spec, pot) in cases {
        let Predictor::Dislocation(p) = &spec.predictor else { unreachable!() };
        let lat = &spec.config.lattice;
        let bmag = norm(p.burgers);
        let stencil = lattice_stencil(lat, pot.range() + 2.0 * bmag + 1.0);
        let mut field: HashMap<[i64; 3], Vec3> = HashMap::new();
        for s in generate_sites(&spec.config, 24.0)? {
            field.insert(s.coord.unwrap(), [rng.gen_range(-0.05..0.05), rng.gen_range(-0.05..0.05), rng.gen_range(-0.05..0.05)]);
        }
        let u = |n: [i64; 3]| field.get(&n).copied().unwrap_or([0.0; 3]);
        let all = generate_sites(&spec.config, 16.0)?;
        // half the sample straddles the cut inside the slip region
        let near_cut: Vec<[i64; 3]> = all
            .iter()
            .filter(|s| p.in_omega(s.coord.unwrap()) && (s.pos[1] - p.core[1]).abs() <= pot.range())
            .map(|s| s.coord.unwrap())
            .collect();
        for i in 0..100 {
            let l = if i % 2 == 0 { near_cut[rng.gen_range(0..near_cut.len())] } else { all[rng.gen_range(0..all.len())].coord.unwrap() };
            let (lhs, rhs) = slip_sides(p, &pot, &stencil, &u, l)?;
            worst_slip = worst_slip.max((lhs - rhs).abs() / lhs.abs().max(1.0));
            sites += 1;
        }
    }
    outcome(
        worst_sym <= 1e-10 && worst_slip <= 1e-10,
        format!("point symmetry {worst_sym:.1e}, slip invariance {worst_slip:.1e} over {sites} sites (tol 1e-10)"),
    )
}

fn laplacian() -> Result<defect_lattice::homogeneous::ForceConstants> {
    let pot = SitePotential::pair(PairForm::Harmonic { k: 0.5, r0: 0.0 }, 1.2, 0.1);
    force_constants(&pot, &BravaisLattice::square(1.0), &[0])
}

fn stability_oracle() -> Result<Outcome> {
    let rep = stability_scan(&laplacian()?, 256)?;
    let target = 4.0 / std::f64::consts::PI.powi(2);
    let err = (rep.c_min - target).abs();
    outcome(err <= 1e-3, format!("c_min = {:.6}, 4/pi^2 = {target:.6}, |diff| = {err:.1e} (tol 1e-3)", rep.c_min))
}

fn green() -> Result<Outcome> {
    let fc = laplacian()?;
    let g = green_function(&fc, 64.0, 1e-6, 64, 8192)?;
    let v = |n: [i64; 3]| g.get(n).expect("inside table")[0];
    let gap = v([0, 0, 0]) - v([1, 0, 0]);
    let res = green_residual(&fc, &g, 32.0);
    let slope = green_decay_fit(&g, 8.0, 64.0)?.first.exponent;
    outcome(
        (gap - 0.25).abs() <= 1e-6 && res <= 1e-6 && (slope + 1.0).abs() <= 0.15,
        format!("Gamma(0)-Gamma(e1) = {gap:.9} (1/4 +- 1e-6), residual {res:.1e} (<= 1e-6), first-difference slope {slope:.3} (-1 +- 0.15)"),
    )
}

struct Screw {
    model: EnergyModel,
    fit_rmin: f64,
}

fn screw_model() -> Result<Screw> {
    let cfg = config("screw.toml", &["model.r_dom=160.0"]);
    let (spec, _) = cfg.model_spec()?;
    Ok(Screw { model: spec.build(cfg.model.r_dom)?, fit_rmin: cfg.analysis.fit_rmin })
}

fn screw_residual(s: &Screw) -> Result<Outcome> {
    let (r, v) = s.model.residual_force()?.magnitudes();
    let fit = decay_fit(&r, &v, 8.0, 48.0, DecayModel::Power)?;
    outcome((fit.exponent + 3.0).abs() <= 0.4, format!("|f| slope {:.3} on [8, 48], R2 {:.4} (-3 +- 0.4)", fit.exponent, fit.r2))
}

fn vacancy_decay() -> Result<Outcome> {
    let cfg = config("vacancy.toml", &["model.r_dom=48.0"]);
    let (spec, _) = cfg.model_spec()?;
    let model = spec.build(48.0)?;
    let res = model.minimize(&cfg.solver)?;
    let monotone = res.trace.windows(2).all(|w| w[1].energy <= w[0].energy);
    let du = nn_norm(&model.config, &res.u)?;
    let radii: Vec<f64> = du.sites.iter().map(|s| norm(s.pos)).collect();
    let rmax = model.r_free() - model.potential.range();
    let fit = decay_fit(&radii, &du.values, cfg.analysis.fit_rmin, rmax, DecayModel::Power)?;
    // pinned from the first converged run
    let pinned = -0.006615;
    let pass = res.reason == Termination::Converged && monotone && res.energy < 0.0 && (res.energy - pinned).abs() <= 1e-5 && (fit.exponent + 2.0).abs() <= 0.3;
    outcome(
        pass,
        format!(
            "{:?} in {} iterations, monotone {monotone}, E = {:.6e} (pinned {pinned:.6e}), |Du|_N exponent {:.3} on [{}, {rmax:.1}] (-2 +- 0.3)",
            res.reason, res.iterations, res.energy, fit.exponent, cfg.analysis.fit_rmin
        ),
    )
}

fn screw_corrector(s: &Screw) -> Result<Outcome> {
    let res = s.model.minimize(&MinimizeOptions::default())?;
    let du = nn_norm(&s.model.config, &res.u)?;
    let radii: Vec<f64> = du.sites.iter().map(|s| norm(s.pos)).collect();
    let rmax = s.model.r_free() / 2.0;
    let log = decay_fit(&radii, &du.values, s.fit_rmin, rmax, DecayModel::PowerLog)?;
    let pow = decay_fit(&radii, &du.values, s.fit_rmin, rmax, DecayModel::Power)?;
    outcome(
        res.reason == Termination::Converged && (log.exponent + 2.0).abs() <= 0.35,
        format!(
            "R_dom {}, {} iterations, power x log exponent {:.3} on [{}, {rmax:.1}] (-2 +- 0.35); pure power {:.3}",
            s.model.r_dom, res.iterations, log.exponent, s.fit_rmin, pow.exponent
        ),
    )
}

fn norm_equivalence() -> Result<Outcome> {
    let cfg = ReferenceConfig::homogeneous(BravaisLattice::square(1.0));
    let sample = random_displacements(&cfg, 200, 4.0, 41)?;
    let mut pass = true;
    let mut parts = Vec::new();
    for k in [1, 2, 3] {
        let w = WeightFunction::exponential(2.0, k);
        let tail = suggest_tail_radius(&cfg, &w, 1e-10, 40.0);
        let rep = norm_equivalence_report(&cfg, &sample, &w, k, tail)?;
        let ub = rep.upper_bound.expect("homogeneous lattice");
        pass &= rep.upper_ratio <= ub;
        let mut s = format!("k={k}: upper {:.3} <= {ub:.3}", rep.upper_ratio);
        if k <= 2 {
            let (lr, lb) = (rep.lower_ratio.expect("k <= 2"), rep.lower_bound.expect("k <= 2"));
            pass &= lr <= lb;
            s += &format!(", lower {lr:.3} <= {lb:.3}");
        }
        parts.push(s);
    }
    outcome(pass, parts.join("; "))
}

fn tb_locality() -> Result<Outcome> {
    let pot = tb();
    let ball = match &pot.model {
        defect_lattice::potentials::Model::Tb(p) => p.ball_radius,
        _ => unreachable!(),
    };
    // stay clear of the eigensolve ball edge
    let rep = locality_probe(&pot, &BravaisLattice::triangular(1.0), 1, 1.0, ball - 0.5)?;
    let fit = rep.exponential_fit.expect("enough shells");
    outcome(-fit.slope > 0.0 && fit.r2 >= 0.95, format!("gamma = {:.3}, R2 = {:.4} on r in [1, {}] (gamma > 0, R2 >= 0.95)", -fit.slope, fit.r2, ball - 0.5))
}

fn determinism() -> Result<Outcome> {
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join("vacancy.toml");
    let dirs = [tempfile::tempdir()?, tempfile::tempdir()?];
    for d in &dirs {
        let st = Command::new(env!("CARGO_BIN_EXE_defect-lattice"))
            .args(["relax", "--config", cfg.to_str().unwrap(), "--out", d.path().to_str().unwrap(), "--set", "model.r_dom=20", "--seed", "4"])
            .output()?;
        if !st.status.success() {
            return outcome(false, format!("relax failed: {}", String::from_utf8_lossy(&st.stderr)));
        }
    }
    let mut same = true;
    for t in ["trace.tsv", "u.tsv", "decay.tsv"] {
        same &= std::fs::read(dirs[0].path().join(t))? == std::fs::read(dirs[1].path().join(t))?;
    }
    outcome(same, "trace.tsv, u.tsv, decay.tsv byte-identical across two runs".into())
}

fn main() {
    // ACCEPTANCE_ONLY=1,3 runs a subset
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY").ok().map(|v| v.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let want = |id: usize| only.as_ref().map_or(true, |o| o.contains(&id));
    let mut failed = 0;
    let mut ran = 0;
    let mut report = |id: usize, name: &str, f: &mut dyn FnMut() -> Result<Outcome>| {
        if !want(id) {
            return;
        }
        ran += 1;
        let t = Instant::now();
        let (pass, detail) = match f() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!("{} [{id:2}] {name}: {detail} ({:.1} s)", if pass { "PASS" } else { "FAIL" }, t.elapsed().as_secs_f64());
    };
    report(1, "gradient consistency", &mut gradient_consistency);
    report(2, "zero net force", &mut zero_net_force);
    report(3, "point symmetry and slip invariance", &mut symmetry_identities);
    report(4, "stability scan oracle", &mut stability_oracle);
    report(5, "lattice Green's function", &mut green);
    let screw = if want(6) || want(8) { screw_model() } else { Err(defect_lattice::Error::Input("screw model not requested".into())) };
    match &screw {
        Ok(s) => report(6, "screw residual force decay", &mut || screw_residual(s)),
        Err(e) => report(6, "screw residual force decay", &mut || outcome(false, format!("error: {e}"))),
    }
    report(7, "vacancy corrector decay", &mut vacancy_decay);
    match &screw {
        Ok(s) => report(8, "screw corrector decay", &mut || screw_corrector(s)),
        Err(e) => report(8, "screw corrector decay", &mut || outcome(false, format!("error: {e}"))),
    }
    report(9, "norm equivalence", &mut norm_equivalence);
    report(10, "tight-binding locality", &mut tb_locality);
    report(11, "determinism", &mut determinism);
    println!("{} of {ran} criteria passed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
