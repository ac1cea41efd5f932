//! Run configuration: a JSON file, command-line flags on top of it, and the
//! resolved form embedded in every output.
//!
//! Precedence: a flag beats the same field in the config file, which beats
//! the built-in default. A spec source given on the command line (preset,
//! inline coefficients, inline main term or input file) replaces whatever
//! source the config file named.

use std::path::{Path, PathBuf};

use benrec::benford::{Thresholds, Verdict};
use benrec::montecarlo::Mode;
use benrec::presets::{find_preset, MainTermSpec, Model};
use benrec::recurrence::content_hash;
use benrec::{Expr, RecurrenceKind, RecurrenceSpec, SciNum};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Gen,
    Analyze,
    Decompose,
    Predict,
    Montecarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdOverrides {
    pub max_digit_dev: Option<f64>,
    pub star_discrepancy: Option<f64>,
    pub weyl: Option<f64>,
    pub weyl_m: Option<usize>,
    pub min_n: Option<usize>,
}

impl ThresholdOverrides {
    fn merge(&mut self, other: ThresholdOverrides) {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(max_digit_dev, star_discrepancy, weyl, weyl_m, min_n);
    }

    fn resolve(&self) -> Thresholds {
        let d = Thresholds::default();
        Thresholds {
            max_digit_dev: self.max_digit_dev.unwrap_or(d.max_digit_dev),
            star_discrepancy: self.star_discrepancy.unwrap_or(d.star_discrepancy),
            weyl: self.weyl.unwrap_or(d.weyl),
            weyl_m: self.weyl_m.unwrap_or(d.weyl_m),
            min_n: self.min_n.unwrap_or(d.min_n),
        }
    }
}

/// Everything a run can be told, from a file or from flags. Unset fields
/// fall through to the next layer.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub preset: Option<String>,
    pub model: Option<Model>,
    pub input: Option<PathBuf>,
    pub horizon: Option<usize>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
    pub plot: Option<PathBuf>,
    #[serde(default)]
    pub thresholds: ThresholdOverrides,
    pub weyl_terms: Option<usize>,
    pub c: Option<f64>,
    pub compare_c: Option<f64>,
    pub dominance_csv: Option<PathBuf>,
    pub trials: Option<usize>,
    pub mode: Option<Mode>,
    pub length: Option<usize>,
    pub expect: Option<Verdict>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }

    fn source_count(&self) -> usize {
        [self.preset.is_some(), self.model.is_some(), self.input.is_some()]
            .iter()
            .filter(|b| **b)
            .count()
    }

    /// `self` is the file layer, `flags` the command line.
    pub fn merge(mut self, flags: RunConfig) -> RunConfig {
        if flags.source_count() > 0 {
            self.preset = None;
            self.model = None;
            self.input = None;
        }
        macro_rules! take {
            ($($f:ident),*) => { $( if flags.$f.is_some() { self.$f = flags.$f; } )* };
        }
        take!(
            command,
            preset,
            model,
            input,
            horizon,
            seed,
            output,
            format,
            plot,
            weyl_terms,
            c,
            compare_c,
            dominance_csv,
            trials,
            mode,
            length,
            expect
        );
        self.thresholds.merge(flags.thresholds);
        self
    }
}

/// Inline spec flags, turned into a [`Model`].
#[derive(Debug, Clone, Default)]
pub struct InlineSpec {
    pub kind: Option<RecurrenceKind>,
    pub depth: Option<usize>,
    pub coeffs: Vec<String>,
    pub inits: Vec<f64>,
    pub mu: Option<String>,
    pub b1: Option<f64>,
}

const DEFAULT_HORIZON: usize = 1000;

impl InlineSpec {
    pub fn to_model(&self) -> Result<Option<Model>, CliError> {
        if let Some(mu) = &self.mu {
            if !self.coeffs.is_empty() || !self.inits.is_empty() || self.kind.is_some() {
                return Err(CliError::Usage("--mu cannot be combined with --coeff/--init/--kind".into()));
            }
            let spec = MainTermSpec::new(mu, self.b1.unwrap_or(1.0), DEFAULT_HORIZON)?;
            return Ok(Some(Model::MainTerm(spec)));
        }
        if self.coeffs.is_empty() && self.inits.is_empty() && self.kind.is_none() && self.depth.is_none() {
            return Ok(None);
        }
        if let Some(d) = self.depth {
            if d != self.coeffs.len() {
                return Err(CliError::Usage(format!(
                    "--depth {d} but {} --coeff values",
                    self.coeffs.len()
                )));
            }
        }
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| c.parse::<Expr>())
            .collect::<benrec::Result<Vec<_>>>()?;
        let initial = self
            .inits
            .iter()
            .map(|&v| SciNum::from_real(v))
            .collect::<benrec::Result<Vec<_>>>()?;
        let kind = self.kind.unwrap_or(RecurrenceKind::Linear);
        Ok(Some(Model::Recurrence(RecurrenceSpec::new(
            kind,
            coeffs,
            initial,
            DEFAULT_HORIZON,
            0,
        )?)))
    }
}

/// The fully resolved run, embedded in every output. Output paths are left
/// out so that the same run written to different files hashes the same.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub command: Command,
    pub source: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<Model>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_hash: Option<String>,
    pub horizon: usize,
    pub seed: u64,
    pub format: Format,
    pub thresholds: Thresholds,
    pub weyl_terms: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compare_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub length: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expect: Option<Verdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clamped_from: Option<usize>,
}

pub struct Run {
    pub resolved: Resolved,
    pub hash: String,
    pub input_text: Option<String>,
    pub output: Option<PathBuf>,
    pub plot: Option<PathBuf>,
    pub dominance_csv: Option<PathBuf>,
}

impl Run {
    pub fn model(&self) -> Option<&Model> {
        self.resolved.model.as_ref()
    }
}

pub fn resolve(command: Command, cfg: RunConfig) -> Result<Run, CliError> {
    if let Some(c) = cfg.command {
        if c != command {
            return Err(CliError::Usage(format!(
                "config is for '{}' but the command is '{}'",
                serde_json::to_string(&c).unwrap_or_default().trim_matches('"'),
                serde_json::to_string(&command).unwrap_or_default().trim_matches('"'),
            )));
        }
    }
    match cfg.source_count() {
        0 => {
            return Err(CliError::Usage(
                "no spec source: give --preset, --config, inline --coeff/--init or --mu flags, or --input".into(),
            ))
        }
        1 => {}
        _ => return Err(CliError::Usage("give exactly one spec source".into())),
    }
    if cfg.input.is_some() && command != Command::Analyze {
        return Err(CliError::Usage("--input is only accepted by analyze".into()));
    }
    let mut clamped_from = None;
    let (source, model, input_hash, input_text) = if let Some(name) = &cfg.preset {
        let preset = find_preset(name)?;
        let want = cfg.horizon.unwrap_or(preset.model.horizon());
        if preset.clamps(want) {
            clamped_from = Some(want);
        }
        (format!("preset:{name}"), Some(preset.model_at(want)), None, None)
    } else if let Some(model) = cfg.model.clone() {
        let model = match cfg.horizon {
            Some(n) => model.with_horizon(n),
            None => model,
        };
        ("spec".to_string(), Some(model), None, None)
    } else {
        let path = cfg.input.as_ref().expect("one source");
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        ("input".to_string(), None, Some(content_hash(&text)), Some(text))
    };
    let model = match (model, cfg.seed) {
        (Some(m), Some(s)) => Some(m.with_seed(s)),
        (m, _) => m,
    };
    let horizon = model.as_ref().map_or(0, Model::horizon);
    if model.is_some() && horizon < 2 {
        return Err(CliError::Usage("horizon N must be at least 2".into()));
    }
    let seed = model.as_ref().map_or(cfg.seed.unwrap_or(0), Model::seed);
    let montecarlo = command == Command::Montecarlo;
    let mode = cfg.mode.unwrap_or(Mode::ProductChain);
    let resolved = Resolved {
        command,
        source,
        model,
        input_hash,
        horizon,
        seed,
        format: cfg.format.unwrap_or(match command {
            Command::Gen => Format::Csv,
            _ => Format::Json,
        }),
        thresholds: cfg.thresholds.resolve(),
        weyl_terms: cfg.weyl_terms.unwrap_or(10),
        c: cfg.c,
        compare_c: cfg.compare_c,
        trials: montecarlo.then(|| cfg.trials.unwrap_or(1000)),
        mode: montecarlo.then_some(mode),
        length: montecarlo.then(|| {
            cfg.length.unwrap_or(match mode {
                Mode::ProductChain => 10,
                Mode::Sequence => horizon,
            })
        }),
        expect: cfg.expect,
        clamped_from,
    };
    if resolved.weyl_terms == 0 {
        return Err(CliError::Usage("--weyl-terms must be positive".into()));
    }
    let hash = content_hash(&serde_json::to_string(&resolved).unwrap_or_default());
    Ok(Run {
        resolved,
        hash,
        input_text,
        output: cfg.output,
        plot: cfg.plot,
        dominance_csv: cfg.dominance_csv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file = RunConfig {
            preset: Some("fibonacci".into()),
            horizon: Some(50),
            thresholds: ThresholdOverrides {
                weyl: Some(0.1),
                ..Default::default()
            },
            ..Default::default()
        };
        let flags = RunConfig {
            horizon: Some(70),
            thresholds: ThresholdOverrides {
                min_n: Some(10),
                ..Default::default()
            },
            ..Default::default()
        };
        let merged = file.merge(flags);
        assert_eq!(merged.horizon, Some(70));
        assert_eq!(merged.preset.as_deref(), Some("fibonacci"));
        let t = merged.thresholds.resolve();
        assert_eq!((t.weyl, t.min_n), (0.1, 10));
    }

    #[test]
    fn flag_source_replaces_file_source() {
        let file = RunConfig {
            preset: Some("fibonacci".into()),
            ..Default::default()
        };
        let flags = RunConfig {
            preset: Some("power100".into()),
            ..Default::default()
        };
        let run = resolve(Command::Analyze, file.merge(flags)).unwrap();
        assert_eq!(run.resolved.source, "preset:power100");
    }

    #[test]
    fn two_sources_are_rejected() {
        let cfg = RunConfig {
            preset: Some("fibonacci".into()),
            model: Some(find_preset("power100").unwrap().model),
            ..Default::default()
        };
        assert!(matches!(resolve(Command::Gen, cfg), Err(CliError::Usage(_))));
    }

    #[test]
    fn hash_ignores_output_path() {
        let a = RunConfig {
            preset: Some("fibonacci".into()),
            output: Some("a.csv".into()),
            ..Default::default()
        };
        let b = RunConfig {
            output: Some("b.csv".into()),
            ..a.clone()
        };
        assert_eq!(
            resolve(Command::Gen, a).unwrap().hash,
            resolve(Command::Gen, b).unwrap().hash
        );
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = RunConfig {
            model: Some(find_preset("linear_n").unwrap().model),
            seed: Some(3),
            mode: Some(Mode::Sequence),
            ..Default::default()
        };
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), cfg);
    }
}
