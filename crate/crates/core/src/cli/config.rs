//! JSON run configuration. Every section rejects unknown keys; numeric fields are
//! range-checked by [`RunConfig::validate`] before any work starts.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::blowup::{ModelParams, Nonlinearity, ReactionVariant, TabulatedG};
use crate::error::{Error, Result};
use crate::rpde::{DiffusionScheme, SchemeConfig};
use crate::spectral::{DomainKind, DomainSpec, EigenData, Grid};

/// Largest accepted number of cells per axis.
pub const MAX_CELLS: usize = 1 << 14;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainConfig,
    pub model: ModelConfig,
    pub initial: InitialConfig,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub blowup: BlowupConfig,
    #[serde(default)]
    pub simulate: SimulateConfig,
    #[serde(default)]
    pub certificate: CertificateConfig,
    #[serde(default)]
    pub heat_kernel: HeatKernelConfig,
    #[serde(default)]
    pub outputs: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub kind: DomainKind,
    pub lengths: Vec<f64>,
    /// Cells per axis.
    pub n: usize,
    /// Retained eigenpairs for projections and semigroup envelopes.
    #[serde(default = "default_modes")]
    pub modes: usize,
}

fn default_modes() -> usize {
    32
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub beta: f64,
    pub kappa: f64,
    /// Upper constant Λ.
    #[serde(rename = "Lambda")]
    pub lambda: f64,
    /// Lower constant C; defaults to Λ.
    #[serde(rename = "C", default)]
    pub c: Option<f64>,
    #[serde(rename = "Cstar", default)]
    pub c_star: Option<f64>,
    #[serde(rename = "G", default)]
    pub g: GSpec,
    #[serde(default)]
    pub variant: ReactionVariant,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GSpec {
    /// `Λ z^{1+β}`
    PowerLaw {},
    Tabulated { z: Vec<f64>, g: Vec<f64> },
}

impl Default for GSpec {
    fn default() -> Self {
        GSpec::PowerLaw {}
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialConfig {
    /// `f = a ψ` with `∫ψ = 1`.
    EigenMultiple { a: f64 },
    /// `f = c ψ` with `c` chosen so that `⟨f, ψ⟩ = mass`.
    EigenMass { mass: f64 },
    /// CSV file whose last column holds one value per interior node, in grid order
    /// (x fastest). Relative paths are resolved against the config file.
    TabulatedFile { file: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub dt: f64,
    pub horizon: f64,
    pub n_paths: usize,
    pub seed: u64,
    #[serde(rename = "M")]
    pub cutoff: f64,
    pub workers: Option<usize>,
    pub scheme: DiffusionScheme,
    pub max_halvings: u32,
    pub snapshot_limit: usize,
    pub reaction_control: Option<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        let s = SchemeConfig::default();
        Self {
            dt: s.dt,
            horizon: 10.0,
            n_paths: 1000,
            seed: 0,
            cutoff: s.cutoff,
            workers: None,
            scheme: s.scheme,
            max_halvings: s.max_halvings,
            snapshot_limit: s.snapshot_limit,
            reaction_control: s.reaction_control,
        }
    }
}

impl SimConfig {
    pub fn scheme(&self) -> SchemeConfig {
        SchemeConfig {
            dt: self.dt,
            cutoff: self.cutoff,
            max_halvings: self.max_halvings,
            scheme: self.scheme,
            snapshot_limit: self.snapshot_limit,
            reaction_control: self.reaction_control,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Lambda1Source {
    /// Closed-form eigenvalue of the continuum domain.
    #[default]
    Analytic,
    /// Principal eigenvalue of the discrete operator.
    Discrete,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BlowupConfig {
    /// Values of `⟨f, ψ⟩` to sweep.
    pub v0psi: Vec<f64>,
    pub lambda1: Lambda1Source,
}

impl Default for BlowupConfig {
    fn default() -> Self {
        Self { v0psi: vec![0.5], lambda1: Lambda1Source::Analytic }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    /// Number of noise paths pushed through the field integrator.
    pub paths: usize,
    /// Also run the direct scheme and compare with the reconstructed field.
    pub em_check: bool,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self { paths: 1, em_check: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateChoice {
    Cond1,
    Cond2,
    Cond3,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Cond3Choice {
    #[default]
    Path,
    Analytic,
}

/// `"fit"` or a number.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CSource {
    Value(f64),
    Keyword(String),
}

impl Default for CSource {
    fn default() -> Self {
        CSource::Keyword("fit".into())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CertificateConfig {
    pub kinds: Vec<CertificateChoice>,
    /// Evaluate on `W ≡ 0` instead of a sampled path.
    pub frozen_path: bool,
    pub cond3_mode: Cond3Choice,
    #[serde(rename = "K")]
    pub k: Option<f64>,
    pub eta: f64,
    pub c: CSource,
}

impl Default for CertificateConfig {
    fn default() -> Self {
        Self {
            kinds: vec![CertificateChoice::Cond1],
            frozen_path: false,
            cond3_mode: Cond3Choice::Path,
            k: None,
            eta: 1.0,
            c: CSource::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HeatKernelConfig {
    /// Capped at the number of unknowns.
    pub modes: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub count: usize,
    /// Extra evaluation times appended to the logarithmic grid.
    pub times: Vec<f64>,
}

impl Default for HeatKernelConfig {
    fn default() -> Self {
        Self { modes: 200, t_min: 1e-2, t_max: 10.0, count: 25, times: Vec::new() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: Option<PathBuf>,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: None, formats: vec![Format::Csv] }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.domain;
        if d.n > MAX_CELLS {
            return Err(Error::Config(format!("n must be at most {MAX_CELLS}, got {}", d.n)));
        }
        let grid = self.grid()?;
        if d.modes < 2 || d.modes > grid.len() {
            return Err(Error::Config(format!("modes must lie in [2, {}], got {}", grid.len(), d.modes)));
        }
        self.model_params()?;
        let s = &self.sim;
        positive("dt", s.dt)?;
        positive("horizon", s.horizon)?;
        if s.horizon < s.dt || s.horizon > 1e5 {
            return Err(Error::Config(format!("horizon must lie in [dt, 1e5], got {}", s.horizon)));
        }
        if s.n_paths == 0 {
            return Err(Error::Config("n_paths must be positive".into()));
        }
        if s.workers == Some(0) {
            return Err(Error::Config("workers must be positive".into()));
        }
        s.scheme().validate()?;
        if self.blowup.v0psi.is_empty() {
            return Err(Error::Config("blowup.v0psi must not be empty".into()));
        }
        for v in &self.blowup.v0psi {
            positive("v0psi", *v)?;
        }
        if self.simulate.paths == 0 {
            return Err(Error::Config("simulate.paths must be positive".into()));
        }
        let c = &self.certificate;
        if let Some(k) = c.k {
            positive("K", k)?;
        }
        positive("eta", c.eta)?;
        match &c.c {
            CSource::Value(v) if !(*v >= 0.0 && v.is_finite()) => {
                return Err(Error::Config(format!("c must be >= 0, got {v}")));
            }
            CSource::Keyword(w) if w != "fit" => {
                return Err(Error::Config(format!("c must be a number or \"fit\", got {w:?}")));
            }
            _ => {}
        }
        let h = &self.heat_kernel;
        positive("heat_kernel.t_min", h.t_min)?;
        positive("heat_kernel.t_max", h.t_max)?;
        if h.t_min > h.t_max || h.count == 0 || h.modes < 2 {
            return Err(Error::Config(
                "heat_kernel needs 0 < t_min <= t_max, count >= 1 and modes >= 2".into(),
            ));
        }
        for t in &h.times {
            positive("heat_kernel.times", *t)?;
        }
        if self.outputs.formats.is_empty() {
            return Err(Error::Config("outputs.formats must not be empty".into()));
        }
        match &self.initial {
            InitialConfig::EigenMultiple { a } => positive("initial.a", *a),
            InitialConfig::EigenMass { mass } => positive("initial.mass", *mass),
            InitialConfig::TabulatedFile { .. } => Ok(()),
        }
    }

    pub fn domain_spec(&self) -> Result<DomainSpec> {
        DomainSpec::new(self.domain.kind, self.domain.lengths.clone())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.domain_spec()?, self.domain.n)
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        let m = &self.model;
        let g = match &m.g {
            GSpec::PowerLaw {} => Nonlinearity::PowerLaw,
            GSpec::Tabulated { z, g } => Nonlinearity::Custom(TabulatedG::new(z.clone(), g.clone())?),
        };
        let p = ModelParams {
            beta: m.beta,
            kappa: m.kappa,
            c_lower: m.c.unwrap_or(m.lambda),
            lambda_upper: m.lambda,
            c_star: m.c_star,
            g,
            variant: m.variant,
        };
        p.validate()?;
        Ok(p)
    }

    /// Initial datum on the interior nodes.
    pub fn initial_datum(&self, eigen: &EigenData, base: &Path) -> Result<Vec<f64>> {
        let psi = eigen.psi();
        let f: Vec<f64> = match &self.initial {
            InitialConfig::EigenMultiple { a } => psi.iter().map(|p| a * p).collect(),
            InitialConfig::EigenMass { mass } => {
                let n2 = eigen.grid().inner(psi, psi);
                psi.iter().map(|p| mass * p / n2).collect()
            }
            InitialConfig::TabulatedFile { file } => read_tabulated(&base.join(file))?,
        };
        eigen.grid().check_len(&f)?;
        if let Some(i) = f.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Config(format!("initial datum must be finite and >= 0 (node {i})")));
        }
        Ok(f)
    }
}

fn read_tabulated(path: &Path) -> Result<Vec<f64>> {
    let mut rdr = csv::Reader::from_path(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let field = rec.iter().next_back().unwrap_or("");
        let v: f64 = field.trim().parse().map_err(|_| {
            Error::Config(format!("{}: row {} is not a number: {field:?}", path.display(), i + 1))
        })?;
        out.push(v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "domain": {"kind": "interval", "lengths": [3.141592653589793], "n": 64},
        "model": {"beta": 1, "kappa": 1, "Lambda": 1},
        "initial": {"mode": "eigen-mass", "mass": 0.5}
    }"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = RunConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.sim, SimConfig::default());
        assert_eq!(c.model.g, GSpec::PowerLaw {});
        assert_eq!(c.model_params().unwrap().c_lower, 1.0);
    }

    #[test]
    fn unknown_keys_are_rejected_everywhere() {
        let mut v: serde_json::Value = serde_json::from_str(MINIMAL).unwrap();
        v["model"]["lambda"] = 1.into();
        assert!(matches!(RunConfig::from_json(&v.to_string()), Err(Error::Config(_))));
        let mut v: serde_json::Value = serde_json::from_str(MINIMAL).unwrap();
        v["model"]["G"] = serde_json::json!({"kind": "power_law", "p": 2});
        assert!(RunConfig::from_json(&v.to_string()).is_err());
        let mut v: serde_json::Value = serde_json::from_str(MINIMAL).unwrap();
        v["sim"] = serde_json::json!({"dt": 1e-3, "paths": 3});
        assert!(RunConfig::from_json(&v.to_string()).is_err());
        let mut v: serde_json::Value = serde_json::from_str(MINIMAL).unwrap();
        v["extra"] = 1.into();
        assert!(RunConfig::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn bounds_are_checked() {
        for (path, value) in [
            ("/domain/n", serde_json::json!(4)),
            ("/model/beta", serde_json::json!(0)),
            ("/initial/mass", serde_json::json!(-1)),
        ] {
            let mut v: serde_json::Value = serde_json::from_str(MINIMAL).unwrap();
            *v.pointer_mut(path).unwrap() = value;
            assert!(matches!(RunConfig::from_json(&v.to_string()), Err(Error::Config(_))), "{path}");
        }
        let mut v: serde_json::Value = serde_json::from_str(MINIMAL).unwrap();
        v["certificate"] = serde_json::json!({"c": "guess"});
        assert!(RunConfig::from_json(&v.to_string()).is_err());
        v["certificate"] = serde_json::json!({"c": 0.5, "K": 2});
        assert!(RunConfig::from_json(&v.to_string()).is_ok());
    }
}
