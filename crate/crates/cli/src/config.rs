//! Run configuration: one TOML file, with a few command-line overrides.

use std::path::{Path, PathBuf};

use bipotential::covers::CoverSpec;
use bipotential::fancheck::{BicConfig, DeltaMode, FanCheckConfig, Probes};
use bipotential::synth::{AxiomTolerances, ConvexityTol};
use bipotential::{FnSpec, GraphTol, Grid1D};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid1D, CliError> {
        Grid1D::new(self.lo, self.hi, self.n).map_err(CliError::from_core)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub graph: GraphTol,
    /// Fixed convexity tolerance; the default is per-line and
    /// resolution-aware.
    pub convexity: Option<f64>,
    /// Fixed witness slack; the default is derived from the instance.
    pub fan_delta: Option<f64>,
    pub minimax: f64,
    /// Largest accepted `lhs - rhs` at a minimax probe.
    pub minimax_gap: f64,
    pub slack: usize,
    pub slope_slack: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            graph: GraphTol::default(),
            convexity: None,
            fan_delta: None,
            minimax: 1e-12,
            minimax_gap: 2e-3,
            slack: 1,
            slope_slack: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Sampling {
    pub seed: u64,
    pub pair_budget: usize,
    pub alphas: Vec<f64>,
    pub exhaustive: bool,
    /// Keep every `fan_thin`-th parameter for the Fan checks.
    pub fan_thin: usize,
    /// Minimax probe coordinates, snapped to the grids.
    pub probe_x: Vec<f64>,
    pub probe_y: Vec<f64>,
    pub off_graph_samples: usize,
}

impl Default for Sampling {
    fn default() -> Self {
        let fan = FanCheckConfig::default();
        Sampling {
            seed: 0,
            pair_budget: 256,
            alphas: fan.alphas,
            exhaustive: false,
            fan_thin: 1,
            probe_x: vec![-2.0, -1.0, 0.0, 1.0, 2.0],
            probe_y: vec![-2.0, -1.0, 0.0, 1.0, 2.0],
            off_graph_samples: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Output {
    pub dir: PathBuf,
}

impl Default for Output {
    fn default() -> Self {
        Output { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub xgrid: GridSpec,
    /// Defaults to the x-grid.
    pub ygrid: Option<GridSpec>,
    pub cover: Option<CoverSpec>,
    /// Function for the `conjugate` command.
    pub function: Option<FnSpec>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub sampling: Sampling,
    #[serde(default)]
    pub output: Output,
}

/// Command-line values that replace config keys.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub exhaustive: bool,
    pub tol_graph: Option<f64>,
    pub delta: Option<f64>,
    pub slack: Option<usize>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads a config file. Relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = RunConfig::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.rebase(base);
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(CoverSpec::Tabulated { path, .. }) = &mut self.cover {
            fix(path);
        }
        if let Some(CoverSpec::Singleton { function: FnSpec::Table { path } }) = &mut self.cover {
            fix(path);
        }
        if let Some(FnSpec::Table { path }) = &mut self.function {
            fix(path);
        }
        fix(&mut self.output.dir);
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(out) = &o.out {
            self.output.dir = out.clone();
        }
        if let Some(seed) = o.seed {
            self.sampling.seed = seed;
        }
        if o.exhaustive {
            self.sampling.exhaustive = true;
        }
        if let Some(t) = o.tol_graph {
            self.tolerances.graph = GraphTol::Absolute(t);
        }
        if let Some(d) = o.delta {
            self.tolerances.fan_delta = Some(d);
        }
        if let Some(s) = o.slack {
            self.tolerances.slack = s;
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let t = &self.tolerances;
        t.graph.validate().map_err(CliError::from_core)?;
        let nonneg = [
            ("convexity", t.convexity.unwrap_or(0.0)),
            ("fan_delta", t.fan_delta.unwrap_or(0.0)),
            ("minimax", t.minimax),
            ("minimax_gap", t.minimax_gap),
            ("slope_slack", t.slope_slack),
        ];
        for (name, v) in nonneg {
            if v.is_nan() || v < 0.0 {
                return Err(CliError::Config(format!("tolerance {name} must be >= 0, got {v}")));
            }
        }
        if self.sampling.fan_thin == 0 {
            return Err(CliError::Config("fan_thin must be >= 1".into()));
        }
        self.fan_config().validate().map_err(CliError::from_core)?;
        self.xgrid()?;
        self.ygrid()?;
        Ok(())
    }

    pub fn xgrid(&self) -> Result<Grid1D, CliError> {
        self.xgrid.build()
    }

    pub fn ygrid(&self) -> Result<Grid1D, CliError> {
        self.ygrid.unwrap_or(self.xgrid).build()
    }

    pub fn cover_spec(&self) -> Result<&CoverSpec, CliError> {
        self.cover
            .as_ref()
            .ok_or_else(|| CliError::Config("config has no [cover] section".into()))
    }

    pub fn function_spec(&self) -> Result<&FnSpec, CliError> {
        self.function
            .as_ref()
            .ok_or_else(|| CliError::Config("config has no [function] section".into()))
    }

    pub fn axiom_tolerances(&self) -> AxiomTolerances {
        AxiomTolerances {
            convexity: self.tolerances.convexity.map_or(ConvexityTol::Auto, ConvexityTol::Fixed),
            outer_graph: self.tolerances.graph,
            slope_slack: self.tolerances.slope_slack,
            off_graph_samples: self.sampling.off_graph_samples,
            seed: self.sampling.seed,
            exhaustive: self.sampling.exhaustive,
            ..AxiomTolerances::default()
        }
    }

    pub fn fan_config(&self) -> FanCheckConfig {
        FanCheckConfig {
            pair_budget: self.sampling.pair_budget,
            alphas: self.sampling.alphas.clone(),
            delta: self.tolerances.fan_delta.map_or(DeltaMode::Auto, DeltaMode::Fixed),
            seed: self.sampling.seed,
            exhaustive: self.sampling.exhaustive,
            ..FanCheckConfig::default()
        }
    }

    pub fn bic_config(&self) -> BicConfig {
        BicConfig {
            fan: self.fan_config(),
            x_probes: Probes::All,
            y_probes: Probes::All,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use bipotential::covers::{LambdaSet, Spacing, StarMode};

    const FAN: &str = r#"
        [xgrid]
        lo = -2.0
        hi = 2.0
        n = 161

        [cover]
        kind = "quadratic_fan"
        lambda_min = 0.25
        lambda_max = 4.0
        k = 65
    "#;

    #[test]
    fn defaults_fill_in() {
        let cfg = RunConfig::parse(FAN).unwrap();
        assert_eq!(
            cfg.cover,
            Some(CoverSpec::QuadraticFan {
                lambda_min: 0.25,
                lambda_max: 4.0,
                k: 65,
                spacing: Spacing::Geometric,
                stars: StarMode::ClosedForm,
                lambda_set: LambdaSet::Interval,
            })
        );
        assert_eq!(cfg.ygrid().unwrap(), cfg.xgrid().unwrap());
        assert_eq!(cfg.tolerances, Tolerances::default());
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn unknown_builtin_and_keys_are_rejected() {
        let bad = FAN.replace("quadratic_fan", "cubic_fan");
        assert!(matches!(RunConfig::parse(&bad), Err(CliError::Config(_))));
        let extra = format!("{FAN}\nfoo = 1\n");
        assert!(RunConfig::parse(&extra).is_err());
    }

    #[test]
    fn overrides_replace_keys() {
        let mut cfg = RunConfig::parse(FAN).unwrap();
        cfg.apply(&Overrides {
            seed: Some(9),
            exhaustive: true,
            tol_graph: Some(0.01),
            delta: Some(0.5),
            slack: Some(0),
            out: Some("x".into()),
        });
        assert_eq!(cfg.sampling.seed, 9);
        assert!(cfg.sampling.exhaustive);
        assert_eq!(cfg.tolerances.graph, GraphTol::Absolute(0.01));
        assert_eq!(cfg.fan_config().delta, DeltaMode::Fixed(0.5));
        assert_eq!(cfg.tolerances.slack, 0);
        assert_eq!(cfg.output.dir, PathBuf::from("x"));
    }

    #[test]
    fn negative_tolerances_are_config_errors() {
        let mut cfg = RunConfig::parse(FAN).unwrap();
        cfg.tolerances.minimax = -1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::parse(FAN).unwrap();
        cfg.apply(&Overrides {
            tol_graph: Some(-1.0),
            ..Overrides::default()
        });
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn graph_tolerance_forms() {
        let text = format!("{FAN}\n[tolerances]\ngraph = {{ absolute = 0.001 }}\n");
        let cfg = RunConfig::parse(&text).unwrap();
        assert_eq!(cfg.tolerances.graph, GraphTol::Absolute(0.001));
    }
}
