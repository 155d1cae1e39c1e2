//! Command line front end: one subcommand per job, a TOML manifest and
//! tab-separated tables in the output directory.
//!
//! Exit codes: 0 success, 2 invalid input, 3 numeric failure.

use crate::analysis::{cell_convergence, decay_fit, DecayFit, DecayModel};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::homogeneous::{force_constants, green_decay_fit, green_function, green_residual, stability_scan, StabilityReport};
use crate::potentials::{locality_probe, point_symmetry_check};
use crate::predictor::Predictor;
use crate::relax::{EnergyModel, Termination};
use crate::stencil::nn_norm;
use crate::vec3::norm;
use clap::{Parser, Subcommand};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Parser, Debug)]
#[command(name = "defect-lattice", version, about = "Relaxation and decay analysis of lattice defects")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Override a configuration key, e.g. --set model.r_dom=32 (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Output directory (default: config `out`, then ./out).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads for parallel loops.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    /// Seed for random test displacements.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Minimize the energy difference and fit the corrector decay.
    Relax,
    /// Residual forces of the predictor and their decay.
    Residual,
    /// Fourier stability scan of the homogeneous lattice.
    Stability,
    /// Lattice Green's function by Brillouin-zone quadrature.
    Green,
    /// Decay fit of a column of an existing table.
    DecayFit,
    /// Cell-size convergence over `analysis.radii`.
    Converge,
    /// Locality, point symmetry and gradient checks of the potential.
    Probe,
    /// Dislocation predictor field and its decay.
    Predictor,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Relax => "relax",
            Command::Residual => "residual",
            Command::Stability => "stability",
            Command::Green => "green",
            Command::DecayFit => "decay-fit",
            Command::Converge => "converge",
            Command::Probe => "probe",
            Command::Predictor => "predictor",
        }
    }
}

enum Cell {
    I(i64),
    F(f64),
    S(String),
}

/// Tab-separated table with a header line; floats carry 17 significant digits.
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Table { header: header.to_vec(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn write(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "{}", self.header.join("\t"))?;
        for r in &self.rows {
            let cells: Vec<String> = r
                .iter()
                .map(|c| match c {
                    Cell::I(i) => i.to_string(),
                    Cell::F(x) => format_float(*x),
                    Cell::S(s) => s.clone(),
                })
                .collect();
            writeln!(f, "{}", cells.join("\t"))?;
        }
        f.flush()?;
        Ok(())
    }
}

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

struct Manifest {
    resolved: toml::Table,
    result: toml::Table,
    warnings: Vec<String>,
    tables: Vec<String>,
}

impl Manifest {
    fn new() -> Self {
        Manifest { resolved: toml::Table::new(), result: toml::Table::new(), warnings: Vec::new(), tables: Vec::new() }
    }

    fn resolved(&mut self, k: &str, v: impl Into<toml::Value>) {
        self.resolved.insert(k.into(), v.into());
    }

    fn result(&mut self, k: &str, v: impl Into<toml::Value>) {
        self.result.insert(k.into(), v.into());
    }

    fn fit(&mut self, prefix: &str, fit: &DecayFit) {
        let mut t = toml::Table::new();
        t.insert("model".into(), model_name(fit.model).into());
        t.insert("rmin".into(), fit.shells[0].r_lo.into());
        t.insert("rmax".into(), fit.shells.last().expect("shells").r_hi.into());
        t.insert("shells".into(), (fit.shells.len() as i64).into());
        t.insert("exponent".into(), fit.exponent.into());
        t.insert("half_width".into(), fit.half_width.into());
        t.insert("r2".into(), fit.r2.into());
        t.insert("rms".into(), fit.rms.into());
        t.insert("mean_exponent".into(), fit.mean_exponent.into());
        self.result.insert(prefix.into(), toml::Value::Table(t));
    }
}

fn model_name(m: DecayModel) -> &'static str {
    match m {
        DecayModel::Power => "power",
        DecayModel::PowerLog => "power-log",
    }
}

fn f(x: f64) -> Cell {
    Cell::F(x)
}

fn site_cells(coord: Option<[i64; 3]>) -> Vec<Cell> {
    match coord {
        Some(n) => vec![Cell::I(n[0]), Cell::I(n[1]), Cell::I(n[2])],
        None => vec![Cell::S("core".into()), Cell::S("core".into()), Cell::S("core".into())],
    }
}

struct Ctx {
    cfg: RunConfig,
    out: PathBuf,
    manifest: Manifest,
}

impl Ctx {
    fn table(&mut self, name: &str, t: &Table) -> Result<()> {
        t.write(&self.out.join(name))?;
        self.manifest.tables.push(name.to_string());
        Ok(())
    }

    fn fit_models(&self) -> Vec<DecayModel> {
        match self.cfg.analysis.fit_model {
            Some(m) => vec![m],
            None => vec![DecayModel::Power, DecayModel::PowerLog],
        }
    }

    /// Fits `values` against `radii` with every requested model and records
    /// the shells in `name`; a failing fit becomes a warning.
    fn decay_tables(&mut self, name: &str, key: &str, radii: &[f64], values: &[f64], rmin: f64, rmax: f64) -> Result<Vec<DecayFit>> {
        let mut t = Table::new(&["model", "r_lo", "r_hi", "r_max_site", "max", "mean", "count"]);
        let mut fits = Vec::new();
        for m in self.fit_models() {
            match decay_fit(radii, values, rmin, rmax, m) {
                Ok(fit) => {
                    for s in &fit.shells {
                        t.push(vec![Cell::S(model_name(m).into()), f(s.r_lo), f(s.r_hi), f(s.r_max_site), f(s.max), f(s.mean), Cell::I(s.count as i64)]);
                    }
                    self.manifest.fit(&format!("{key}_{}", model_name(m).replace('-', "_")), &fit);
                    fits.push(fit);
                }
                Err(e) => self.manifest.warnings.push(format!("{key} fit ({}) on [{rmin}, {rmax}]: {e}", model_name(m))),
            }
        }
        self.table(name, &t)?;
        Ok(fits)
    }

    fn build_model(&mut self) -> Result<EnergyModel> {
        let (spec, s) = self.cfg.model_spec()?;
        self.manifest.resolved("lattice_scale", s);
        let m = spec.build(self.cfg.model.r_dom)?;
        self.manifest.resolved("cutoff_radius", m.cutoff.rc);
        self.manifest.resolved("cutoff_tail_bound", m.cutoff.tail_bound);
        self.manifest.resolved("cutoff_met", m.cutoff.met);
        self.manifest.resolved("interaction_radius", m.potential.range());
        self.manifest.resolved("skin", m.skin);
        self.manifest.resolved("buffer", m.buffer);
        self.manifest.resolved("r_free", m.r_free());
        self.manifest.resolved("free_sites", m.free_sites().len() as i64);
        self.manifest.resolved("active_sites", m.n_active() as i64);
        self.manifest.resolved("components", toml::Value::Array(m.components.iter().map(|c| toml::Value::Integer(*c as i64)).collect()));
        self.manifest.resolved("nn_distance", m.nn_distance());
        if let Predictor::Dislocation(p) = &m.predictor {
            self.manifest.resolved("core", toml::Value::Array(vec![p.core[0].into(), p.core[1].into()]));
            self.manifest.resolved("burgers", toml::Value::Array(p.burgers.iter().map(|x| (*x).into()).collect()));
        }
        Ok(m)
    }

    fn default_rmax(&self, m: &EnergyModel) -> f64 {
        self.cfg.analysis.fit_rmax.unwrap_or(m.r_dom - m.buffer - m.potential.range())
    }

    fn stability(&mut self, model_components: &[usize], grid: usize) -> Result<StabilityReport> {
        let (lattice, s) = self.cfg.lattice()?;
        self.manifest.resolved("lattice_scale", s);
        let (pot, rep) = self.cfg.potential.resolve(&lattice)?;
        self.manifest.resolved("cutoff_radius", rep.rc);
        let comps: Vec<usize> = if model_components.is_empty() { (0..lattice.ds).collect() } else { model_components.to_vec() };
        let fc = force_constants(&pot, &lattice, &comps)?;
        self.manifest.resolved("force_constant_support", fc.support_radius());
        self.manifest.resolved("force_constant_tail_bound", fc.tail_bound);
        let rep = stability_scan(&fc, grid)?;
        self.manifest.resolved("stability_grid", grid as i64);
        Ok(rep)
    }
}

fn relax(ctx: &mut Ctx) -> Result<()> {
    let comps = ctx.cfg.model.components.clone();
    let grid = ctx.cfg.analysis.stability_grid.min(64);
    match ctx.stability(&comps, grid) {
        Ok(r) if !r.stable => ctx.manifest.warnings.push(format!("host lattice failed the stability scan: c_min = {:e}", r.c_min)),
        Ok(r) => ctx.manifest.result("host_c_min", r.c_min),
        Err(e) => ctx.manifest.warnings.push(format!("stability scan skipped: {e}")),
    }
    let model = ctx.build_model()?;
    let res = model.minimize(&ctx.cfg.solver)?;
    ctx.manifest.result("energy", res.energy);
    ctx.manifest.result("grad_norm", res.grad_norm);
    ctx.manifest.result("iterations", res.iterations as i64);
    ctx.manifest.result("evaluations", res.evaluations as i64);
    ctx.manifest.result("termination", match res.reason {
        Termination::Converged => "converged",
        Termination::MaxIter => "max-iter",
    });
    let mut tr = Table::new(&["iteration", "energy", "grad_norm", "step", "halvings"]);
    for r in &res.trace {
        tr.push(vec![Cell::I(r.iteration as i64), f(r.energy), f(r.grad_norm), f(r.step), Cell::I(r.halvings as i64)]);
    }
    ctx.table("trace.tsv", &tr)?;
    let norms = nn_norm(&model.config, &res.u)?;
    let mut t = Table::new(&["n1", "n2", "n3", "x1", "x2", "x3", "r", "u1", "u2", "u3", "du_norm"]);
    for (s, v) in norms.sites.iter().zip(&norms.values) {
        let u = res.u.at(s.pos);
        let mut row = site_cells(s.coord);
        row.extend([f(s.pos[0]), f(s.pos[1]), f(s.pos[2]), f(norm(s.pos)), f(u[0]), f(u[1]), f(u[2]), f(*v)]);
        t.push(row);
    }
    ctx.table("u.tsv", &t)?;
    ctx.manifest.result("du_norm_global", norms.global);
    let radii: Vec<f64> = norms.sites.iter().map(|s| norm(s.pos)).collect();
    let rmax = ctx.default_rmax(&model);
    ctx.decay_tables("decay.tsv", "du_decay", &radii, &norms.values, ctx.cfg.analysis.fit_rmin, rmax)?;
    if res.reason != Termination::Converged {
        return Err(Error::Numeric(format!("relaxation stopped after {} iterations with |grad| = {:e} > tol", res.iterations, res.grad_norm)));
    }
    Ok(())
}

fn residual(ctx: &mut Ctx) -> Result<()> {
    let model = ctx.build_model()?;
    let ft = model.residual_force()?;
    let mut t = Table::new(&["n1", "n2", "n3", "x1", "x2", "x3", "r", "f1", "f2", "f3", "f_norm"]);
    for (s, v) in ft.sites.iter().zip(&ft.forces) {
        let mut row = site_cells(s.coord);
        row.extend([f(s.pos[0]), f(s.pos[1]), f(s.pos[2]), f(norm(s.pos)), f(v[0]), f(v[1]), f(v[2]), f(norm(*v))]);
        t.push(row);
    }
    ctx.table("force.tsv", &t)?;
    let (r, v) = ft.magnitudes();
    ctx.manifest.result("max_force", v.iter().cloned().fold(0.0, f64::max));
    let rmax = ctx.cfg.analysis.fit_rmax.unwrap_or(model.r_free());
    ctx.decay_tables("decay.tsv", "force_decay", &r, &v, ctx.cfg.analysis.fit_rmin, rmax)?;
    Ok(())
}

fn stability(ctx: &mut Ctx) -> Result<()> {
    let comps = ctx.cfg.model.components.clone();
    let rep = ctx.stability(&comps, ctx.cfg.analysis.stability_grid)?;
    ctx.manifest.result("stable", rep.stable);
    ctx.manifest.result("c_min", rep.c_min);
    ctx.manifest.result("argmin_k", toml::Value::Array(rep.argmin_k.iter().map(|x| (*x).into()).collect()));
    ctx.manifest.result("hermiticity_residual", rep.hermiticity);
    let mut t = Table::new(&["grid_n", "c_min", "k1", "k2", "k3", "stable"]);
    t.push(vec![Cell::I(rep.grid_n as i64), f(rep.c_min), f(rep.argmin_k[0]), f(rep.argmin_k[1]), f(rep.argmin_k[2]), Cell::S(rep.stable.to_string())]);
    ctx.table("stability.tsv", &t)?;
    Ok(())
}

fn green(ctx: &mut Ctx) -> Result<()> {
    let (lattice, s) = ctx.cfg.lattice()?;
    ctx.manifest.resolved("lattice_scale", s);
    let (pot, _) = ctx.cfg.potential.resolve(&lattice)?;
    let comps: Vec<usize> = if ctx.cfg.model.components.is_empty() { (0..lattice.ds).collect() } else { ctx.cfg.model.components.clone() };
    let fc = force_constants(&pot, &lattice, &comps)?;
    let a = ctx.cfg.analysis.clone();
    let table = green_function(&fc, a.green_radius, a.green_tol, a.green_n0, a.green_n_max)?;
    ctx.manifest.resolved("kgrid", table.kgrid as i64);
    ctx.manifest.resolved("half_width", table.half_width);
    ctx.manifest.resolved("constant", toml::Value::Array(table.constant.iter().map(|x| (*x).into()).collect()));
    ctx.manifest.result("error_estimate", table.error_estimate);
    let resid = green_residual(&fc, &table, a.green_radius);
    ctx.manifest.result("residual", resid);
    let g0 = table.get([0, 0, 0]).map(|v| v[0]).unwrap_or(f64::NAN);
    let g1 = table.get([1, 0, 0]).map(|v| v[0]).unwrap_or(f64::NAN);
    ctx.manifest.result("gap_e1", g0 - g1);
    let nc = comps.len();
    let mut t = Table::new(&["n1", "n2", "n3", "x1", "x2", "x3", "r", "component", "gamma"]);
    for n in table.sites() {
        let x = lattice.position(n);
        if let Some(v) = table.get(n) {
            for (k, g) in v.iter().enumerate() {
                let mut row = site_cells(Some(n));
                row.extend([f(x[0]), f(x[1]), f(x[2]), f(norm(x)), Cell::S(format!("{}{}", comps[k / nc], comps[k % nc])), f(*g)]);
                t.push(row);
            }
        }
    }
    ctx.table("green.tsv", &t)?;
    match green_decay_fit(&table, a.green_fit[0], a.green_fit[1]) {
        Ok(d) => {
            ctx.manifest.fit("first_difference", &d.first);
            ctx.manifest.fit("second_difference", &d.second);
            if let Some(v) = &d.value {
                ctx.manifest.fit("value", v);
            }
            if let Some(l) = d.log_growth {
                ctx.manifest.result("log_growth_slope", l.slope);
            }
        }
        Err(e) => ctx.manifest.warnings.push(format!("green decay fit: {e}")),
    }
    Ok(())
}

/// Reads a table written by this tool and returns (radii, values of `column`).
pub fn read_field(path: &Path, column: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Input(format!("analysis.input: cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().ok_or_else(|| Error::Input("analysis.input: empty table".into()))?.split('\t').collect();
    let col = |name: &str| header.iter().position(|h| *h == name);
    let vi = col(column).ok_or_else(|| Error::Input(format!("analysis.column: no column '{column}' in {}", path.display())))?;
    let ri = col("r");
    let xi = [col("x1"), col("x2"), col("x3")];
    if ri.is_none() && xi.iter().any(|c| c.is_none()) {
        return Err(Error::Input("analysis.input: table needs an 'r' column or x1, x2, x3".into()));
    }
    let mut radii = Vec::new();
    let mut values = Vec::new();
    for (k, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split('\t').collect();
        let num = |i: usize| -> Result<f64> { cells.get(i).and_then(|c| c.parse().ok()).ok_or_else(|| Error::Input(format!("analysis.input: bad number on data line {}", k + 1))) };
        let r = match ri {
            Some(i) => num(i)?,
            None => norm([num(xi[0].expect("checked"))?, num(xi[1].expect("checked"))?, num(xi[2].expect("checked"))?]),
        };
        radii.push(r);
        values.push(num(vi)?);
    }
    Ok((radii, values))
}

fn decay_fit_cmd(ctx: &mut Ctx) -> Result<()> {
    let input = ctx.cfg.analysis.input.clone().ok_or_else(|| Error::Input("analysis.input: required for decay-fit".into()))?;
    let (r, v) = read_field(Path::new(&input), &ctx.cfg.analysis.column)?;
    let rmax = match ctx.cfg.analysis.fit_rmax {
        Some(x) => x,
        // clamped rows carry zeros
        None => r.iter().zip(&v).filter(|(_, v)| **v > 0.0).map(|(r, _)| *r).fold(0.0, f64::max),
    };
    let fits = ctx.decay_tables("fit.tsv", "decay", &r, &v, ctx.cfg.analysis.fit_rmin, rmax)?;
    if fits.is_empty() {
        return Err(Error::Input("no decay model could be fitted; see warnings".into()));
    }
    Ok(())
}

fn converge(ctx: &mut Ctx) -> Result<()> {
    let (spec, s) = ctx.cfg.model_spec()?;
    ctx.manifest.resolved("lattice_scale", s);
    let study = cell_convergence(&spec, &ctx.cfg.analysis.radii, &ctx.cfg.solver)?;
    let mut t = Table::new(&["r_dom", "r_free", "energy", "iterations", "grad_norm", "difference"]);
    for r in &study.rows {
        t.push(vec![f(r.r_dom), f(r.r_free), f(r.energy), Cell::I(r.iterations as i64), f(r.grad_norm), f(r.difference)]);
    }
    ctx.table("converge.tsv", &t)?;
    ctx.manifest.result("common_radius", study.common_radius);
    ctx.manifest.result("monotone", study.monotone);
    Ok(())
}

fn probe(ctx: &mut Ctx) -> Result<()> {
    let (lattice, s) = ctx.cfg.lattice()?;
    ctx.manifest.resolved("lattice_scale", s);
    let (pot, _) = ctx.cfg.potential.resolve(&lattice)?;
    let a = ctx.cfg.analysis.clone();
    let rep = locality_probe(&pot, &lattice, a.probe_order, a.probe_rmin, a.probe_rmax)?;
    let mut t = Table::new(&["r", "envelope"]);
    for (r, e) in &rep.shells {
        t.push(vec![f(*r), f(*e)]);
    }
    ctx.table("locality.tsv", &t)?;
    if let Some(p) = rep.power_fit {
        ctx.manifest.result("power_exponent", p.slope);
        ctx.manifest.result("power_r2", p.r2);
    }
    if let Some(e) = rep.exponential_fit {
        ctx.manifest.result("exponential_rate", -e.slope);
        ctx.manifest.result("exponential_r2", e.r2);
    }
    ctx.manifest.result("dominance_constant", rep.dominance_constant);
    ctx.manifest.result("dominated", rep.dominated);
    ctx.manifest.result("insufficient_range", rep.insufficient_range);
    let seed = ctx.cfg.seed;
    let sym = point_symmetry_check(&pot, &lattice, a.probe_samples, 0.05 * lattice.nn_distance(), seed)?;
    ctx.manifest.result("point_symmetry_residual", sym);
    let model = ctx.build_model()?;
    let x = {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let amp = 0.02 * model.nn_distance();
        (0..model.n_dof()).map(|_| amp * (2.0 * rng.gen::<f64>() - 1.0)).collect::<Vec<f64>>()
    };
    let gc = model.gradient_check(&x, a.probe_samples, 1e-4 * model.nn_distance(), seed)?;
    ctx.manifest.result("gradient_check_coordinates", gc.coordinates as i64);
    ctx.manifest.result("gradient_check_relative_error", gc.relative_error);
    Ok(())
}

fn predictor(ctx: &mut Ctx) -> Result<()> {
    let (lattice, s) = ctx.cfg.lattice()?;
    ctx.manifest.resolved("lattice_scale", s);
    let Predictor::Dislocation(p) = ctx.cfg.predictor(&lattice, s)? else {
        return Err(Error::Input("predictor: the predictor subcommand needs a dislocation configuration".into()));
    };
    let mut t = Table::new(&["n1", "n2", "n3", "x1", "x2", "x3", "r", "u1", "u2", "u3", "in_omega"]);
    for n in lattice.points_in_ball([0.0; 3], ctx.cfg.model.r_dom) {
        let x = lattice.position(n);
        let u = p.eval(n)?;
        let mut row = site_cells(Some(n));
        row.extend([f(x[0]), f(x[1]), f(x[2]), f(norm(x)), f(u[0]), f(u[1]), f(u[2]), Cell::S(p.in_omega(n).to_string())]);
        t.push(row);
    }
    ctx.table("predictor.tsv", &t)?;
    let a = ctx.cfg.analysis.clone();
    for order in [1, 2] {
        match p.decay_fit(a.predictor_window, a.predictor_fit[0], a.predictor_fit[1], order) {
            Ok(fit) => ctx.manifest.fit(&format!("difference_order_{order}"), &fit),
            Err(e) => ctx.manifest.warnings.push(format!("predictor decay fit (order {order}): {e}")),
        }
    }
    Ok(())
}

fn write_manifest(ctx: &Ctx, cmd: Command, elapsed: f64, threads: usize, error: Option<&Error>) -> Result<()> {
    let mut root = toml::Table::new();
    let mut run = toml::Table::new();
    run.insert("subcommand".into(), cmd.name().into());
    run.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    run.insert("threads".into(), (threads as i64).into());
    run.insert("seed".into(), (ctx.cfg.seed as i64).into());
    run.insert("wall_clock_seconds".into(), elapsed.into());
    run.insert("status".into(), if error.is_some() { "failed" } else { "ok" }.into());
    if let Some(e) = error {
        run.insert("error".into(), e.to_string().into());
    }
    root.insert("run".into(), toml::Value::Table(run));
    let cfg: toml::Value = toml::Value::try_from(&ctx.cfg).map_err(|e| Error::Input(format!("config echo: {e}")))?;
    root.insert("config".into(), cfg);
    root.insert("resolved".into(), toml::Value::Table(ctx.manifest.resolved.clone()));
    root.insert("result".into(), toml::Value::Table(ctx.manifest.result.clone()));
    root.insert("warnings".into(), toml::Value::Array(ctx.manifest.warnings.iter().map(|w| w.clone().into()).collect()));
    root.insert("tables".into(), toml::Value::Array(ctx.manifest.tables.iter().map(|w| w.clone().into()).collect()));
    let text = toml::to_string(&root).map_err(|e| Error::Input(format!("manifest: {e}")))?;
    std::fs::write(ctx.out.join("manifest.toml"), text)?;
    Ok(())
}

/// Runs one subcommand; artifacts go to the output directory.
pub fn run(cli: &Cli) -> Result<PathBuf> {
    let path = cli.config.as_ref().ok_or_else(|| Error::Input("--config PATH is required".into()))?;
    let mut cfg = RunConfig::load(path, &cli.set)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let out = cli.out.clone().or_else(|| cfg.out.clone().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out)?;
    let threads = cli.threads.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| Error::Input(format!("--threads: {e}")))?;
    let workers = pool.current_num_threads();
    let mut ctx = Ctx { cfg, out: out.clone(), manifest: Manifest::new() };
    let start = Instant::now();
    let res = pool.install(|| match cli.command {
        Command::Relax => relax(&mut ctx),
        Command::Residual => residual(&mut ctx),
        Command::Stability => stability(&mut ctx),
        Command::Green => green(&mut ctx),
        Command::DecayFit => decay_fit_cmd(&mut ctx),
        Command::Converge => converge(&mut ctx),
        Command::Probe => probe(&mut ctx),
        Command::Predictor => predictor(&mut ctx),
    });
    write_manifest(&ctx, cli.command, start.elapsed().as_secs_f64(), workers, res.as_ref().err())?;
    for w in &ctx.manifest.warnings {
        eprintln!("warning: {w}");
    }
    res.map(|_| out)
}

/// Entry point for the binary; returns the process exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(out) => {
            println!("{} finished; artifacts in {}", cli.command.name(), out.display());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
