//! TOML experiment configuration.
//!
//! Every physical quantity carries its unit in the key name. A minimal file:
//!
//! ```toml
//! methods = ["coherent", "ame", "ptre"]
//!
//! [points]
//! count = 6
//!
//! [grid]
//! t_lz_min_ns = 2.0
//! t_lz_max_ns = 5000.0
//! count = 20
//!
//! [sweep]
//! span_Phi0 = 0.01
//! ```
//!
//! Omitted sections fall back to the nominal noise model, the default
//! solver settings, a single unscaled PTRE variant and `out/` as output
//! directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::device::{OperatingPoint, OperatingPointTable, SweepSchedule};
use crate::error::{Error, Result};
use crate::evolution::EvolveOptions;
use crate::noise::{NoiseModel, NoiseSection};
use crate::ode::SolverOptions;
use crate::ptre::PtreVariant;

/// Propagation methods a sweep can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Closed-form LZ probability.
    Coherent,
    Schrodinger,
    Ame,
    Ptre,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Coherent, Method::Schrodinger, Method::Ame, Method::Ptre];

    pub fn tag(&self) -> &'static str {
        match self {
            Method::Coherent => "coherent",
            Method::Schrodinger => "schrodinger",
            Method::Ame => "ame",
            Method::Ptre => "ptre",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.tag() == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}` (expected coherent, schrodinger, ame or ptre)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlinePoint {
    #[serde(rename = "phi_x_Phi0")]
    pub phi_x: f64,
    #[serde(rename = "delta_GHz")]
    pub delta: f64,
    #[serde(rename = "ip_uA")]
    pub i_p: f64,
}

/// Where operating points come from. `inline` wins over `table`; without
/// either the built-in synthetic table is used. `phi_x_Phi0` selects points
/// by interpolation, `count` picks that many evenly spaced Φx across the
/// table range.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PointsSection {
    pub table: Option<PathBuf>,
    pub inline: Vec<InlinePoint>,
    #[serde(rename = "phi_x_Phi0")]
    pub phi_x: Vec<f64>,
    pub count: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub t_lz_min_ns: f64,
    pub t_lz_max_ns: f64,
    pub count: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { t_lz_min_ns: 2.0, t_lz_max_ns: 5000.0, count: 20 }
    }
}

impl GridSection {
    /// Log-spaced sweep times, endpoints included.
    pub fn times(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.t_lz_min_ns];
        }
        let ratio = self.t_lz_max_ns / self.t_lz_min_ns;
        let last = (self.count - 1) as f64;
        let mut t: Vec<f64> =
            (0..self.count).map(|k| self.t_lz_min_ns * ratio.powf(k as f64 / last)).collect();
        t[self.count - 1] = self.t_lz_max_ns;
        t
    }
}

/// Sweep endpoints as flux offsets from the symmetry point: either a
/// symmetric `span_Phi0` or an explicit `phi_init_Phi0`/`phi_final_Phi0`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    #[serde(rename = "span_Phi0")]
    pub span: Option<f64>,
    #[serde(rename = "phi_init_Phi0")]
    pub phi_init: Option<f64>,
    #[serde(rename = "phi_final_Phi0")]
    pub phi_final: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PtreSection {
    pub w_scale: Vec<f64>,
    pub t_scale: Vec<f64>,
}

impl Default for PtreSection {
    fn default() -> Self {
        PtreSection { w_scale: vec![1.0], t_scale: vec![1.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    pub min_step_ns: f64,
    pub rate_equation_tail: bool,
    pub populations_only: bool,
}

impl Default for SolverSection {
    fn default() -> Self {
        let s = SolverOptions::default();
        SolverSection {
            rel_tol: s.rel_tol,
            abs_tol: s.abs_tol,
            max_steps: s.max_steps,
            min_step_ns: s.min_step,
            rate_equation_tail: false,
            populations_only: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Worker threads; 0 uses one per core.
    pub parallel: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: PathBuf::from("out"), parallel: 0 }
    }
}

/// The file as written. [`ExperimentConfig::resolve`] turns it into an
/// [`Experiment`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub methods: Vec<Method>,
    #[serde(default)]
    pub points: PointsSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub ptre: PtreSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// A validated configuration ready to run.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub methods: Vec<Method>,
    pub points: Vec<OperatingPoint>,
    /// One schedule per point at the first grid time; [`Experiment::schedule`]
    /// rescales it.
    pub schedules: Vec<SweepSchedule>,
    pub t_lz: Vec<f64>,
    pub phi_init: f64,
    pub phi_final: f64,
    pub noise: NoiseModel,
    pub variants: Vec<PtreVariant>,
    pub evolve: EvolveOptions,
    pub output_dir: PathBuf,
    pub parallel: usize,
}

fn config_err(key: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{key}: {msg}"))
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))
    }

    /// Reads and parses a file; relative table paths are taken relative to
    /// the file's directory.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let (Some(table), Some(dir)) = (&cfg.points.table, path.parent()) {
            if table.is_relative() {
                cfg.points.table = Some(dir.join(table));
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn resolve(&self) -> Result<Experiment> {
        if self.methods.is_empty() {
            return Err(config_err("methods", "at least one method must be selected"));
        }
        let mut methods = self.methods.clone();
        methods.sort();
        methods.dedup();

        let points = self.resolve_points()?;
        let t_lz = self.resolve_grid()?;
        let (phi_init, phi_final) = self.resolve_sweep()?;
        let schedules = points
            .iter()
            .map(|p| {
                SweepSchedule::new(*p, phi_init, phi_final, t_lz[0])
                    .map_err(|e| config_err("sweep", format!("phi_x={}: {e}", p.phi_x)))
            })
            .collect::<Result<Vec<_>>>()?;

        let noise = NoiseModel::try_from(self.noise)?;

        let mut variants = Vec::new();
        for (key, list) in [("ptre.w_scale", &self.ptre.w_scale), ("ptre.t_scale", &self.ptre.t_scale)] {
            if list.is_empty() || list.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
                return Err(config_err(key, "needs one or more positive factors"));
            }
        }
        for &w_scale in &self.ptre.w_scale {
            for &t_scale in &self.ptre.t_scale {
                let v = PtreVariant { w_scale, t_scale };
                if !variants.contains(&v) {
                    variants.push(v);
                }
            }
        }

        let s = &self.solver;
        let solver =
            SolverOptions { rel_tol: s.rel_tol, abs_tol: s.abs_tol, max_steps: s.max_steps, min_step: s.min_step_ns };
        solver.validate().map_err(|e| config_err("solver", e))?;
        let evolve = EvolveOptions {
            solver,
            rate_equation_tail: s.rate_equation_tail,
            populations_only: s.populations_only,
            ..EvolveOptions::default()
        };

        Ok(Experiment {
            methods,
            points,
            schedules,
            t_lz,
            phi_init,
            phi_final,
            noise,
            variants,
            evolve,
            output_dir: self.output.dir.clone(),
            parallel: self.output.parallel,
        })
    }

    fn resolve_points(&self) -> Result<Vec<OperatingPoint>> {
        let p = &self.points;
        if !p.inline.is_empty() {
            if p.table.is_some() || !p.phi_x.is_empty() || p.count.is_some() {
                return Err(config_err("points.inline", "cannot be combined with table, phi_x_Phi0 or count"));
            }
            return p
                .inline
                .iter()
                .enumerate()
                .map(|(i, q)| {
                    OperatingPoint::new(q.phi_x, q.delta, q.i_p)
                        .map_err(|e| config_err(&format!("points.inline[{i}]"), e))
                })
                .collect();
        }
        let table = match &p.table {
            Some(path) => OperatingPointTable::from_path(path).map_err(|e| config_err("points.table", e))?,
            None => OperatingPointTable::default_synthetic(),
        };
        match (p.phi_x.is_empty(), p.count) {
            (false, Some(_)) => Err(config_err("points", "phi_x_Phi0 and count are mutually exclusive")),
            (false, None) => p
                .phi_x
                .iter()
                .map(|&x| table.interpolate(x).map_err(|e| config_err("points.phi_x_Phi0", e)))
                .collect(),
            (true, Some(0)) => Err(config_err("points.count", "must be at least 1")),
            (true, Some(n)) => {
                let pts = table.points();
                let (lo, hi) = (pts[0].phi_x, pts[pts.len() - 1].phi_x);
                (0..n)
                    .map(|k| {
                        let x = if n == 1 { lo } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 };
                        table.interpolate(x.clamp(lo, hi)).map_err(|e| config_err("points.count", e))
                    })
                    .collect()
            }
            (true, None) => Ok(table.points().to_vec()),
        }
    }

    fn resolve_grid(&self) -> Result<Vec<f64>> {
        let g = &self.grid;
        if !(g.t_lz_min_ns >= 1.0 && g.t_lz_min_ns.is_finite()) {
            return Err(config_err("grid.t_lz_min_ns", format!("must be at least 1 ns, got {}", g.t_lz_min_ns)));
        }
        if g.count == 0 {
            return Err(config_err("grid.count", "must be at least 1"));
        }
        if g.count > 1 && !(g.t_lz_max_ns > g.t_lz_min_ns && g.t_lz_max_ns.is_finite()) {
            return Err(config_err("grid.t_lz_max_ns", "must exceed grid.t_lz_min_ns"));
        }
        Ok(g.times())
    }

    fn resolve_sweep(&self) -> Result<(f64, f64)> {
        let s = &self.sweep;
        let (init, fin) = match (s.span, s.phi_init, s.phi_final) {
            (Some(span), None, None) => {
                if !(span > 0.0 && span.is_finite()) {
                    return Err(config_err("sweep.span_Phi0", format!("must be positive, got {span}")));
                }
                (-0.5 * span, 0.5 * span)
            }
            (None, Some(a), Some(b)) => (a, b),
            (None, None, None) => (-0.005, 0.005),
            (Some(_), _, _) => {
                return Err(config_err("sweep", "span_Phi0 excludes phi_init_Phi0/phi_final_Phi0"))
            }
            _ => return Err(config_err("sweep", "phi_init_Phi0 and phi_final_Phi0 must be given together")),
        };
        if !(init < 0.0 && fin > 0.0) {
            return Err(config_err("sweep", format!("endpoints ({init}, {fin}) must bracket the symmetry point")));
        }
        Ok((init, fin))
    }
}

impl Experiment {
    /// Sweep of the `index`-th operating point lasting `t_lz` ns.
    pub fn schedule(&self, index: usize, t_lz: f64) -> Result<SweepSchedule> {
        self.schedules
            .get(index)
            .ok_or_else(|| Error::invalid(format!("no operating point with index {index}")))?
            .with_duration(t_lz)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_uses_defaults() {
        let cfg = ExperimentConfig::from_toml_str("methods = [\"ame\"]\n[points]\ncount = 6\n").unwrap();
        let exp = cfg.resolve().unwrap();
        assert_eq!(exp.points.len(), 6);
        assert_eq!(exp.t_lz.len(), 20);
        assert_eq!(exp.t_lz[0], 2.0);
        assert_eq!(exp.t_lz[19], 5000.0);
        assert_eq!((exp.phi_init, exp.phi_final), (-0.005, 0.005));
        assert_eq!(exp.noise, NoiseModel::nominal());
        assert_eq!(exp.variants, vec![PtreVariant::default()]);
    }

    #[test]
    fn errors_name_the_key() {
        let bad = "methods = [\"ame\"]\n[grid]\nt_lz_min_ns = 0.5\nt_lz_max_ns = 10.0\ncount = 3\n";
        let e = ExperimentConfig::from_toml_str(bad).unwrap().resolve().unwrap_err();
        assert!(e.to_string().contains("grid.t_lz_min_ns"), "{e}");

        let e = ExperimentConfig::from_toml_str("methods = [\"ame\"]\n[grid]\nt_lz_min = 2.0\n").unwrap_err();
        assert!(matches!(e, Error::Config(_)));
        assert!(e.to_string().contains("t_lz_min"), "{e}");

        let e = ExperimentConfig::from_toml_str("methods = [\"magic\"]\n").unwrap_err();
        assert!(e.to_string().contains("magic"), "{e}");

        let e = ExperimentConfig::from_toml_str("methods = []\n").unwrap().resolve().unwrap_err();
        assert!(e.to_string().starts_with("config error: methods"), "{e}");

        let e = ExperimentConfig::from_toml_str("methods = [\"ame\"]\n[noise]\ntemperature_K = -1.0\n")
            .unwrap()
            .resolve()
            .unwrap_err();
        assert!(e.to_string().contains("noise"), "{e}");
    }

    #[test]
    fn asymmetric_and_inline() {
        let text = r#"
methods = ["coherent", "ptre", "coherent"]
[[points.inline]]
phi_x_Phi0 = 0.5
delta_GHz = 0.05
ip_uA = 0.115
[sweep]
phi_init_Phi0 = -3.1e-3
phi_final_Phi0 = 6.9e-3
[ptre]
w_scale = [1.0, 4.0]
t_scale = [1.0, 0.25]
"#;
        let exp = ExperimentConfig::from_toml_str(text).unwrap().resolve().unwrap();
        assert_eq!(exp.methods, vec![Method::Coherent, Method::Ptre]);
        assert_eq!(exp.points[0].delta, 0.05);
        assert_eq!((exp.phi_init, exp.phi_final), (-3.1e-3, 6.9e-3));
        assert_eq!(exp.variants.len(), 4);
    }

    #[test]
    fn round_trip_through_toml() {
        let cfg = ExperimentConfig::from_toml_str("methods = [\"ame\", \"ptre\"]\n[points]\ncount = 3\n").unwrap();
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), cfg);
    }
}
