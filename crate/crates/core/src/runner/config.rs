//! Experiment configuration: one TOML table per run.
//!
//! A config starts from the defaults of its command; file values and then
//! command-line overrides are merged on top, and the result must
//! deserialize without unknown keys.

use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lyapunov::Region;
use crate::model::PotentialSpec;
use crate::spectral::TAU_RE;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Spectrum,
    Flow,
    Bands,
    Lyapunov,
    Curve,
    Theorem,
    StatsPoisson,
    StatsLdp,
    StatsRadius,
    StatsGaps,
    StatsVconv,
    Figure1,
    Figure2,
    VerifyAll,
}

impl Command {
    pub const ALL: [Command; 14] = [
        Command::Spectrum,
        Command::Flow,
        Command::Bands,
        Command::Lyapunov,
        Command::Curve,
        Command::Theorem,
        Command::StatsPoisson,
        Command::StatsLdp,
        Command::StatsRadius,
        Command::StatsGaps,
        Command::StatsVconv,
        Command::Figure1,
        Command::Figure2,
        Command::VerifyAll,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Flow => "flow",
            Command::Bands => "bands",
            Command::Lyapunov => "lyapunov",
            Command::Curve => "curve",
            Command::Theorem => "theorem",
            Command::StatsPoisson => "stats-poisson",
            Command::StatsLdp => "stats-ldp",
            Command::StatsRadius => "stats-radius",
            Command::StatsGaps => "stats-gaps",
            Command::StatsVconv => "stats-vconv",
            Command::Figure1 => "figure1",
            Command::Figure2 => "figure2",
            Command::VerifyAll => "verify-all",
        }
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config { key: "command".into(), message: format!("unknown command `{s}`") })
    }
}

/// Size of the acceptance battery run by `verify-all`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scale {
    /// The sizes stated by the acceptance criteria.
    Desk,
    /// A scaled-down battery for smoke tests and the determinism rerun.
    Quick,
}

/// `points` equally spaced energies on `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl EnergyGrid {
    pub fn values(&self) -> Vec<f64> {
        crate::lyapunov::linspace(self.lo, self.hi, self.points)
    }
}

/// Every finite-sample threshold used by the suites, in one place. Each
/// report echoes the block it was judged with.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    /// Reality tolerance `|Im λ| ≤ τ(1+|λ|)` used in flows.
    pub tau_re: f64,
    /// Dense spectrum vs characteristic function.
    pub oracle_tol: f64,
    pub circulant_tol: f64,
    pub free_gamma_mc_tol: f64,
    pub free_gamma_thouless_tol: f64,
    /// Monte Carlo vs Thouless for a random potential.
    pub estimator_tol: f64,
    /// Required fraction of seeds without violations.
    pub seed_pass_fraction: f64,
    pub band_edge_tol: f64,
    /// KS critical value is `ks_coefficient/√count` (1.63 is the 1% level).
    pub ks_coefficient: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            tau_re: TAU_RE,
            oracle_tol: 1e-6,
            circulant_tol: 1e-9,
            free_gamma_mc_tol: 1e-3,
            free_gamma_thouless_tol: 0.01,
            estimator_tol: 0.02,
            seed_pass_fraction: 0.95,
            band_edge_tol: 1e-8,
            ks_coefficient: 1.63,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    pub potential: PotentialSpec,
    pub n: usize,
    /// `N` sweep for fits.
    pub sizes: Vec<usize>,
    pub g: f64,
    /// Flow range and initial step.
    pub g_max: f64,
    pub g_step: f64,
    /// Reference energy; `NaN` is not allowed, so suites that pick it
    /// themselves (density peak) read `auto_energy`.
    pub energy: f64,
    pub auto_energy: bool,
    pub energies: EnergyGrid,
    pub region: Region,
    pub resolution: [usize; 2],
    pub epsilon: f64,
    pub c_edge: f64,
    pub window: f64,
    pub deltas: Vec<f64>,
    pub n_seeds: usize,
    /// Seeds per size in the `N` sweep of the theorem fit.
    pub fit_seeds: usize,
    /// Values of `g` for the gap capture check.
    pub capture_g: Vec<f64>,
    pub n_reps: usize,
    pub n_steps: usize,
    pub seed: u64,
    pub scale: Scale,
    /// Empty: `$HNLAB_OUT_DIR`, else `hnlab-out`.
    pub out_dir: PathBuf,
    pub thresholds: Thresholds,
}

/// Variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "HNLAB_OUT_DIR";

impl ExperimentConfig {
    /// Defaults of a command; these reproduce the desk-scale settings.
    pub fn defaults(command: Command) -> Self {
        let mut c = ExperimentConfig {
            command,
            potential: PotentialSpec::uniform(0.0, 4.0),
            n: 70,
            sizes: vec![40, 70, 100, 140],
            g: 0.1,
            g_max: 1.5,
            g_step: 0.01,
            energy: 2.0,
            auto_energy: false,
            energies: EnergyGrid { lo: -2.5, hi: 6.5, points: 91 },
            region: Region::new((-3.0, 7.0), (-1.0, 1.0)),
            resolution: [64, 32],
            epsilon: 0.1,
            c_edge: 0.05,
            window: 0.05,
            deltas: vec![0.0, 1e-3, 3e-3, 1e-2, 3e-2, 0.1, 0.3, 1.0],
            n_seeds: 20,
            fit_seeds: 4,
            capture_g: vec![0.1, 0.2, 0.4],
            n_reps: 1000,
            n_steps: 100_000,
            seed: 1,
            scale: Scale::Desk,
            out_dir: PathBuf::new(),
            thresholds: Thresholds::default(),
        };
        match command {
            Command::Spectrum => {
                c.potential = PotentialSpec::constant(0.0);
                c.n = 4;
            }
            Command::Flow => c.g_max = 1.0,
            Command::Bands => {}
            Command::Lyapunov => {
                c.n = 1000;
                c.n_seeds = 10;
                c.n_reps = 32;
            }
            Command::Curve | Command::Figure1 => {
                // weak disorder on the two-band background, so that γ dips
                // below g = 0.08 inside both bands
                c.potential = PotentialSpec::uniform(-0.5, 0.5).with_background(vec![0.0, 2.0]);
                c.g = 0.08;
                c.region = Region::new((-2.0, 4.0), (-0.25, 0.25));
                c.resolution = [96, 48];
                c.n_steps = 10_000;
                c.n_reps = 8;
            }
            Command::Theorem => c.n_reps = 32,
            Command::StatsPoisson => {
                c.n = 2000;
                c.n_seeds = 50;
                c.n_reps = 4;
                c.auto_energy = true;
                c.energies = EnergyGrid { lo: -1.0, hi: 5.0, points: 601 };
            }
            Command::StatsLdp => {
                c.sizes = vec![100, 1000, 10_000];
                c.epsilon = 0.05;
            }
            Command::StatsRadius => {
                c.n = 100;
                c.n_reps = 10_000;
            }
            Command::StatsGaps => {
                c.sizes = vec![200, 400, 800, 1600];
                c.n_reps = 32;
            }
            Command::StatsVconv => c.sizes = vec![20, 40, 80, 160],
            Command::Figure2 => {
                c.n_steps = 100_000;
                c.n_reps = 32;
            }
            Command::VerifyAll => {}
        }
        c
    }

    /// Parses a config file. `command` may come from the file or be given.
    pub fn from_toml_str(text: &str, command: Option<Command>) -> Result<Self> {
        let file: toml::Table =
            toml::from_str(text).map_err(|e| Error::Config { key: "<file>".into(), message: e.message().to_string() })?;
        Self::build(command, file, &[])
    }

    /// Defaults of `command` (or of the file's `command` key), then `file`,
    /// then `overrides` as `key=value` pairs with dotted keys and TOML values
    /// (bare words are read as strings).
    pub fn build(command: Option<Command>, file: toml::Table, overrides: &[(String, String)]) -> Result<Self> {
        let from_file = match file.get("command") {
            Some(toml::Value::String(s)) => Some(s.parse::<Command>()?),
            Some(_) => return Err(Error::Config { key: "command".into(), message: "expected a string".into() }),
            None => None,
        };
        let command = match (command, from_file) {
            (Some(a), Some(b)) if a != b => {
                return Err(Error::Config {
                    key: "command".into(),
                    message: format!("file is for `{}`, invoked as `{}`", b.name(), a.name()),
                })
            }
            (Some(a), _) | (None, Some(a)) => a,
            (None, None) => return Err(Error::Config { key: "command".into(), message: "missing".into() }),
        };
        let defaults = Self::defaults(command);
        let mut table = to_table(&defaults)?;
        let reference = table.clone();
        merge(&mut table, file, &reference, "")?;
        for (key, raw) in overrides {
            set_dotted(&mut table, &reference, key, parse_value(raw))?;
        }
        table.insert("command".into(), toml::Value::String(command.name().into()));
        let cfg: ExperimentConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config { key: guess_key(e.message()), message: e.message().to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config { key: "<serialize>".into(), message: e.to_string() })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, message: String| Err(Error::Config { key: key.into(), message });
        self.potential.validate().map_err(|e| Error::Config { key: "potential".into(), message: e.to_string() })?;
        if self.n < 3 {
            return bad("n", format!("need N >= 3, got {}", self.n));
        }
        if self.sizes.iter().any(|&n| n < 3) {
            return bad("sizes", "every size must be at least 3".into());
        }
        if !(self.g.is_finite() && self.g >= 0.0) {
            return bad("g", format!("need g >= 0, got {}", self.g));
        }
        if !(self.g_max > 0.0 && self.g_step > 0.0) {
            return bad("g_step", "g_max and g_step must be positive".into());
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon", format!("must be positive, got {}", self.epsilon));
        }
        if self.energies.points == 0 || !(self.energies.lo < self.energies.hi) {
            return bad("energies", "need lo < hi and at least one point".into());
        }
        if self.n_seeds == 0 || self.n_reps == 0 || self.n_steps == 0 || self.fit_seeds == 0 {
            return bad("n_seeds", "n_seeds, fit_seeds, n_reps and n_steps must be positive".into());
        }
        if !(self.thresholds.tau_re >= 0.0) {
            return bad("thresholds.tau_re", "must be non-negative".into());
        }
        Ok(())
    }

    /// Explicit `out_dir`, else `$HNLAB_OUT_DIR`, else `hnlab-out`.
    pub fn resolved_out_dir(&self) -> PathBuf {
        if !self.out_dir.as_os_str().is_empty() {
            return self.out_dir.clone();
        }
        match std::env::var_os(OUT_DIR_ENV) {
            Some(d) if !d.is_empty() => PathBuf::from(d),
            _ => PathBuf::from("hnlab-out"),
        }
    }
}

fn to_table(cfg: &ExperimentConfig) -> Result<toml::Table> {
    toml::Table::try_from(cfg).map_err(|e| Error::Config { key: "<serialize>".into(), message: e.to_string() })
}

/// Deep merge for plain sub-tables; `potential` is replaced whole since its
/// keys depend on the distribution kind.
fn merge(into: &mut toml::Table, from: toml::Table, reference: &toml::Table, prefix: &str) -> Result<()> {
    for (k, v) in from {
        let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        let Some(known) = reference.get(&k) else {
            return Err(Error::Config { key: path, message: "unknown key".into() });
        };
        match (known, v) {
            (toml::Value::Table(sub_ref), toml::Value::Table(sub)) if path != "potential" => {
                let mut target = match into.remove(&k) {
                    Some(toml::Value::Table(t)) => t,
                    _ => toml::Table::new(),
                };
                merge(&mut target, sub, sub_ref, &path)?;
                into.insert(k, toml::Value::Table(target));
            }
            (known, v) => {
                let v = match (known, v) {
                    (toml::Value::Float(_), toml::Value::Integer(i)) => toml::Value::Float(i as f64),
                    (known, v) if path != "potential" && known.type_str() != v.type_str() => {
                        return Err(Error::Config {
                            key: path,
                            message: format!("expected {}, got {}", known.type_str(), v.type_str()),
                        })
                    }
                    (_, v) => v,
                };
                into.insert(k, v);
            }
        }
    }
    Ok(())
}

fn set_dotted(table: &mut toml::Table, reference: &toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let mut nested = toml::Table::new();
    let parts: Vec<&str> = key.split('.').collect();
    let mut v = value;
    for p in parts.iter().skip(1).rev() {
        let mut t = toml::Table::new();
        t.insert((*p).to_string(), v);
        v = toml::Value::Table(t);
    }
    nested.insert(parts[0].to_string(), v);
    merge(table, nested, reference, "")
}

/// A TOML value, or the raw text as a string.
fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn guess_key(message: &str) -> String {
    // serde names the field in backticks, e.g. "unknown field `foo`"
    message.split('`').nth(1).unwrap_or("<config>").to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn every_command_round_trips() {
        for c in Command::ALL {
            let cfg = ExperimentConfig::defaults(c);
            let text = cfg.to_toml().unwrap();
            let back = ExperimentConfig::from_toml_str(&text, None).unwrap();
            assert_eq!(back, cfg, "{}", c.name());
            assert_eq!(c.name().parse::<Command>().unwrap(), c);
        }
    }

    #[test]
    fn file_and_flags_layer_over_defaults() {
        let text = "command = \"spectrum\"\nn = 10\n[thresholds]\ntau_re = 1e-20\n";
        let file: toml::Table = toml::from_str(text).unwrap();
        let cfg = ExperimentConfig::build(None, file, &[("n".into(), "12".into()), ("g".into(), "0.3".into())]).unwrap();
        assert_eq!(cfg.n, 12);
        assert_eq!(cfg.g, 0.3);
        assert_eq!(cfg.thresholds.tau_re, 1e-20);
        // untouched threshold keeps its default
        assert_eq!(cfg.thresholds.oracle_tol, 1e-6);
    }

    #[test]
    fn unknown_keys_name_the_offender() {
        let err = ExperimentConfig::from_toml_str("command = \"bands\"\nfrobnicate = 3\n", None).unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "frobnicate"), "{err}");
        let err = ExperimentConfig::from_toml_str("command = \"bands\"\n[thresholds]\nbogus = 1\n", None).unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "thresholds.bogus"), "{err}");
        let err =
            ExperimentConfig::from_toml_str("command = \"bands\"\n[potential.distribution]\nkind = \"uniform\"\nlo = 0\n", None)
                .unwrap_err();
        assert!(matches!(err, Error::Config { .. }), "{err}");
        let err = ExperimentConfig::from_toml_str("n = 5\n", None).unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "command"));
        let err = ExperimentConfig::from_toml_str("command = \"bands\"\nn = 2\n", None).unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "n"));
    }

    #[test]
    fn wrong_types_name_the_key() {
        let e = ExperimentConfig::build(Some(Command::Flow), toml::Table::new(), &[("thresholds.tau_re".into(), "abc".into())]);
        assert!(matches!(e, Err(Error::Config { key, .. }) if key == "thresholds.tau_re"));
        let c = ExperimentConfig::build(Some(Command::Flow), toml::Table::new(), &[("energy".into(), "3".into())]).unwrap();
        assert_eq!(c.energy, 3.0);
    }

    #[test]
    fn potential_is_replaced_whole() {
        let text = "command = \"flow\"\n[potential]\ndistribution = { kind = \"bernoulli\", w = 1.5 }\n";
        let cfg = ExperimentConfig::from_toml_str(text, None).unwrap();
        assert_eq!(cfg.potential, PotentialSpec::bernoulli(1.5));
    }

    #[test]
    fn out_dir_falls_back_to_env_then_default() {
        let mut cfg = ExperimentConfig::defaults(Command::Bands);
        cfg.out_dir = PathBuf::from("explicit");
        assert_eq!(cfg.resolved_out_dir(), PathBuf::from("explicit"));
    }

    proptest! {
        #[test]
        fn random_configs_round_trip(n in 3usize..5000, g in 0.0f64..3.0, eps in 1e-4f64..1.0, seed in 0u64..i64::MAX as u64, reps in 1usize..100_000) {
            let mut cfg = ExperimentConfig::defaults(Command::Theorem);
            cfg.n = n;
            cfg.g = g;
            cfg.epsilon = eps;
            cfg.seed = seed;
            cfg.n_reps = reps;
            let back = ExperimentConfig::from_toml_str(&cfg.to_toml().unwrap(), Some(Command::Theorem)).unwrap();
            prop_assert_eq!(back, cfg);
        }
    }
}
