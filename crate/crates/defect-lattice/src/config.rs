//! Run configuration: a TOML document plus dotted `key=value` overrides.
//!
//! Lengths are given in the units of the lattice definition. With
//! `lattice.equilibrate = true` the lattice is rescaled to the minimum of
//! the homogeneous site energy and every length tied to the crystal (core
//! atom positions, R_def, Burgers vector, core position) is rescaled with it.

use crate::analysis::DecayModel;
use crate::error::{Error, Result};
use crate::lattice::{BravaisLattice, Column, DefectKind, ReferenceConfig};
use crate::potentials::SitePotential;
use crate::predictor::{sextic_cle, Cle, DislocationPredictor, Predictor};
use crate::relax::{equilibrium_scale, MinimizeOptions, ModelOptions, ModelSpec};
use crate::vec3::scale;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatticeKind {
    Square,
    Triangular,
    Cubic,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub kind: LatticeKind,
    #[serde(default = "one")]
    pub a: f64,
    /// Columns of A for `kind = "custom"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vectors: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column: Option<Column>,
    #[serde(default)]
    pub equilibrate: bool,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectSpec {
    #[serde(flatten)]
    pub kind: DefectKind,
    #[serde(default)]
    pub r_def: f64,
}

impl Default for DefectSpec {
    fn default() -> Self {
        DefectSpec { kind: DefectKind::None, r_def: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CleKind {
    AntiPlane,
    Sextic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictorSpec {
    pub burgers: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub core: Option<[f64; 2]>,
    #[serde(default = "default_r_hat")]
    pub r_hat: f64,
    #[serde(default = "default_onset")]
    pub eta_onset: f64,
    #[serde(default = "default_cle")]
    pub cle: CleKind,
}

fn default_r_hat() -> f64 {
    4.0
}

fn default_onset() -> f64 {
    0.5
}

fn default_cle() -> CleKind {
    CleKind::AntiPlane
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub r_dom: f64,
    pub components: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skin: Option<f64>,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection { r_dom: 24.0, components: Vec::new(), skin: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisOptions {
    pub fit_rmin: f64,
    /// Defaults to R_dom - buffer - interaction radius.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_rmax: Option<f64>,
    /// Both models are reported when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_model: Option<DecayModel>,
    pub radii: Vec<f64>,
    pub stability_grid: usize,
    pub green_radius: f64,
    pub green_tol: f64,
    pub green_n0: usize,
    pub green_n_max: usize,
    pub green_fit: [f64; 2],
    pub probe_order: usize,
    pub probe_rmin: f64,
    pub probe_rmax: f64,
    pub probe_samples: usize,
    /// Table read by `decay-fit`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    /// Column of `input` holding the field values.
    pub column: String,
    /// Predictor decay window and fit range.
    pub predictor_window: f64,
    pub predictor_fit: [f64; 2],
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            fit_rmin: 4.0,
            fit_rmax: None,
            fit_model: None,
            radii: vec![16.0, 24.0, 32.0, 48.0],
            stability_grid: 256,
            green_radius: 32.0,
            green_tol: 1e-6,
            green_n0: 64,
            green_n_max: 8192,
            green_fit: [8.0, 64.0],
            probe_order: 1,
            probe_rmin: 1.0,
            probe_rmax: 6.0,
            probe_samples: 100,
            input: None,
            column: "du_norm".into(),
            predictor_window: 80.0,
            predictor_fit: [8.0, 64.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub lattice: LatticeSpec,
    #[serde(default)]
    pub defect: DefectSpec,
    pub potential: SitePotential,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predictor: Option<PredictorSpec>,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub solver: MinimizeOptions,
    #[serde(default)]
    pub analysis: AnalysisOptions,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

fn field<T>(path: &str, msg: impl std::fmt::Display) -> Result<T> {
    Err(Error::Input(format!("{path}: {msg}")))
}

/// Sets `value` at a dotted path, creating tables on the way. The value is
/// parsed as a TOML value, falling back to a plain string.
pub fn apply_override(doc: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment.split_once('=').ok_or_else(|| Error::Input(format!("override '{assignment}' must have the form key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return field("--set", "empty key");
    }
    let raw = raw.trim();
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    let mut table = doc;
    for p in &parts[..parts.len() - 1] {
        let entry = table.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = match entry {
            toml::Value::Table(t) => t,
            _ => return field(key, format!("'{p}' is not a table")),
        };
    }
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

impl RunConfig {
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self> {
        let mut doc: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Input(format!("config: {}", e.message())))?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let cfg: RunConfig = toml::Value::Table(doc).try_into().map_err(|e: toml::de::Error| Error::Input(format!("config: {}", e.message().trim())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Input(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text, overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Field-level checks that do not need any computation.
    pub fn validate(&self) -> Result<()> {
        let l = &self.lattice;
        if !(l.a.is_finite() && l.a > 0.0) {
            return field("lattice.a", format!("must be positive (got {})", l.a));
        }
        if l.kind == LatticeKind::Custom && l.vectors.is_none() {
            return field("lattice.vectors", "required for a custom lattice");
        }
        let m = &self.model;
        if !(m.r_dom.is_finite() && m.r_dom > 0.0) {
            return field("model.r_dom", format!("must be positive (got {})", m.r_dom));
        }
        if let Some(s) = m.skin {
            if !(s.is_finite() && s >= 0.0) {
                return field("model.skin", format!("must be non-negative (got {s})"));
            }
        }
        if !(self.defect.r_def.is_finite() && self.defect.r_def >= 0.0) {
            return field("defect.r_def", format!("must be non-negative (got {})", self.defect.r_def));
        }
        let dislocation = matches!(self.defect.kind, DefectKind::Dislocation);
        if dislocation != self.predictor.is_some() {
            return field("predictor", "a [predictor] table is required exactly for dislocations");
        }
        if let Some(p) = &self.predictor {
            if !(p.r_hat > 0.0) {
                return field("predictor.r_hat", format!("must be positive (got {})", p.r_hat));
            }
            if !(0.0..1.0).contains(&p.eta_onset) {
                return field("predictor.eta_onset", format!("must lie in [0, 1) (got {})", p.eta_onset));
            }
        }
        self.solver.validate().map_err(|e| Error::Input(format!("solver: {}", strip(&e))))?;
        let a = &self.analysis;
        if !(a.fit_rmin > 0.0) {
            return field("analysis.fit_rmin", "must be positive");
        }
        if a.stability_grid < 4 {
            return field("analysis.stability_grid", "must be at least 4");
        }
        if !(a.green_tol > 0.0) || a.green_n0 < 4 || a.green_n_max < a.green_n0 {
            return field("analysis.green_*", "need green_tol > 0 and 4 <= green_n0 <= green_n_max");
        }
        if a.radii.windows(2).any(|w| !(w[1] > w[0])) {
            return field("analysis.radii", "must be strictly ascending");
        }
        Ok(())
    }

    fn base_lattice(&self) -> Result<BravaisLattice> {
        let a = self.lattice.a;
        let lat = match self.lattice.kind {
            LatticeKind::Square => BravaisLattice::square(a),
            LatticeKind::Triangular => BravaisLattice::triangular(a),
            LatticeKind::Cubic => BravaisLattice::cubic(a),
            LatticeKind::Custom => {
                let v = self.lattice.vectors.as_ref().expect("validated");
                let vs: Vec<Vec<f64>> = v.iter().map(|c| c.iter().map(|x| x * a).collect()).collect();
                BravaisLattice::new(vs.len(), vs.len(), &vs).map_err(|e| Error::Input(format!("lattice.vectors: {}", strip(&e))))?
            }
        };
        match self.lattice.column {
            Some(c) => lat.with_column(c).map_err(|e| Error::Input(format!("lattice.column: {}", strip(&e)))),
            None => Ok(lat),
        }
    }

    /// Lattice after optional equilibration, with the scale factor applied.
    pub fn lattice(&self) -> Result<(BravaisLattice, f64)> {
        let lat = self.base_lattice()?;
        if !self.lattice.equilibrate {
            return Ok((lat, 1.0));
        }
        let s = equilibrium_scale(&self.potential, &lat)?;
        Ok((lat.scaled(s), s))
    }

    pub fn reference_config(&self, lattice: &BravaisLattice, s: f64) -> Result<ReferenceConfig> {
        let kind = match &self.defect.kind {
            DefectKind::Interstitial { positions } => DefectKind::Interstitial { positions: positions.iter().map(|p| scale(s, *p)).collect() },
            DefectKind::Substitution { removed, positions } => DefectKind::Substitution { removed: removed.clone(), positions: positions.iter().map(|p| scale(s, *p)).collect() },
            k => k.clone(),
        };
        let c = ReferenceConfig { lattice: lattice.clone(), kind, r_def: s * self.defect.r_def };
        c.validate().map_err(|e| Error::Input(format!("defect: {}", strip(&e))))?;
        Ok(c)
    }

    pub fn predictor(&self, lattice: &BravaisLattice, s: f64) -> Result<Predictor> {
        let Some(p) = &self.predictor else {
            return Ok(Predictor::PointDefect);
        };
        let burgers = scale(s, p.burgers);
        let core = p.core.map(|c| [s * c[0], s * c[1]]);
        let cle = match p.cle {
            CleKind::AntiPlane => Cle::AntiPlane,
            CleKind::Sextic => {
                let comps: Vec<usize> = if self.model.components.is_empty() { (0..lattice.ds).collect() } else { self.model.components.clone() };
                let (pot, _) = self.potential.resolve(lattice)?;
                Cle::Sextic(sextic_cle(&pot, lattice, &comps, burgers)?)
            }
        };
        let d = DislocationPredictor::new(lattice, burgers, core, p.r_hat, p.eta_onset, cle).map_err(|e| Error::Input(format!("predictor: {}", strip(&e))))?;
        Ok(Predictor::Dislocation(Box::new(d)))
    }

    /// Model description with the resolved lattice; also returns the scale.
    pub fn model_spec(&self) -> Result<(ModelSpec, f64)> {
        let (lattice, s) = self.lattice()?;
        let config = self.reference_config(&lattice, s)?;
        let predictor = self.predictor(&lattice, s)?;
        self.potential.validate(predictor.is_dislocation()).map_err(|e| Error::Input(format!("potential: {}", strip(&e))))?;
        let options = ModelOptions { components: self.model.components.clone(), skin: self.model.skin };
        Ok((ModelSpec { config, potential: self.potential.clone(), predictor, options }, s))
    }
}

fn strip(e: &Error) -> String {
    match e {
        Error::Input(m) | Error::Boundary(m) | Error::Evaluation(m) | Error::Numeric(m) => m.clone(),
        Error::Io(e) => e.to_string(),
    }
}
