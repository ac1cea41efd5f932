//! Repeated trials of a random model with seeds `seed + t`.
//!
//! Trials run in parallel but results are collected by trial index, so the
//! aggregate is bit-identical whatever the worker count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::benford::{analyze, analyze_sample, chi2_p_value, BenfordReport, Thresholds, Verdict};
use crate::error::{Error, Result};
use crate::presets::Model;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Analyze the final term of each trial across trials.
    ProductChain,
    /// Analyze every trial's whole sequence and count verdicts.
    Sequence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    pub mode: Mode,
    pub trials: usize,
    pub seed: u64,
    /// Chain length in product-chain mode, sequence horizon otherwise.
    pub length: usize,
    pub max_m: usize,
    pub thresholds: Thresholds,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictCounts {
    pub consistent: usize,
    pub inconsistent: usize,
    pub insufficient_sample: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub config: MonteCarloConfig,
    /// Product-chain mode: analysis of the final significands, with the χ²
    /// upper-tail probability filled in. Sequence mode with one trial: that
    /// trial's report.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub report: Option<BenfordReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub final_significand_ks: Option<f64>,
    /// Trials whose final term was exactly zero.
    pub zero_finals: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub verdicts: Option<VerdictCounts>,
}

/// Results in trial order.
fn map_trials<T: Send>(trials: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    #[cfg(feature = "parallel")]
    return (0..trials).into_par_iter().map(f).collect();
    #[cfg(not(feature = "parallel"))]
    return (0..trials).map(f).collect();
}

pub fn run(model: &Model, cfg: &MonteCarloConfig) -> Result<MonteCarloReport> {
    if cfg.trials == 0 {
        return Err(Error::InvalidSpec("at least one trial is needed".into()));
    }
    if cfg.length == 0 {
        return Err(Error::InvalidSpec("length must be positive".into()));
    }
    if !model.has_random() {
        return Err(Error::InvalidSpec("Monte Carlo needs a model with a uniform(..) draw".into()));
    }
    let trial = |t: usize| model.clone().with_seed(cfg.seed.wrapping_add(t as u64)).with_horizon(cfg.length);
    match cfg.mode {
        Mode::ProductChain => {
            let finals: Vec<Option<f64>> = map_trials(cfg.trials, |t| {
                let s = trial(t).generate()?;
                Ok(s.log10_frac.last().copied().flatten())
            })?;
            let points: Vec<f64> = finals.iter().flatten().copied().collect();
            let zero_finals = finals.len() - points.len();
            let mut report = analyze(&points, cfg.max_m, &cfg.thresholds)?;
            report.digit_hist.excluded_zeros = zero_finals as u64;
            report.chi2_p_value = Some(chi2_p_value(report.chi2));
            Ok(MonteCarloReport {
                config: cfg.clone(),
                final_significand_ks: Some(report.ks_significand),
                report: Some(report),
                zero_finals,
                verdicts: None,
            })
        }
        Mode::Sequence => {
            let reports: Vec<BenfordReport> = map_trials(cfg.trials, |t| {
                analyze_sample(&trial(t).generate()?, cfg.max_m, &cfg.thresholds)
            })?;
            let mut counts = VerdictCounts::default();
            for r in &reports {
                match r.verdict {
                    Verdict::Consistent => counts.consistent += 1,
                    Verdict::Inconsistent => counts.inconsistent += 1,
                    Verdict::InsufficientSample => counts.insufficient_sample += 1,
                }
            }
            let single = if reports.len() == 1 { reports.into_iter().next() } else { None };
            Ok(MonteCarloReport {
                config: cfg.clone(),
                report: single,
                final_significand_ks: None,
                zero_finals: 0,
                verdicts: Some(counts),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::find_preset;

    fn cfg(mode: Mode, trials: usize, length: usize) -> MonteCarloConfig {
        MonteCarloConfig {
            mode,
            trials,
            seed: 7,
            length,
            max_m: 10,
            thresholds: Thresholds::default(),
        }
    }

    #[test]
    fn product_chain_is_close_to_benford() {
        let model = find_preset("uniform_chain").unwrap().model;
        let r = run(&model, &cfg(Mode::ProductChain, 4000, 10)).unwrap();
        assert!(r.final_significand_ks.unwrap() < 0.03);
        assert!(r.report.unwrap().chi2_p_value.is_some());
    }

    #[test]
    fn deterministic_across_runs() {
        let model = find_preset("uniform_chain").unwrap().model;
        let c = cfg(Mode::ProductChain, 500, 10);
        let a = serde_json::to_string(&run(&model, &c).unwrap()).unwrap();
        let b = serde_json::to_string(&run(&model, &c).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_sequence_trial_matches_analyze() {
        let model = find_preset("uniform_chain").unwrap().model;
        let c = cfg(Mode::Sequence, 1, 2000);
        let r = run(&model, &c).unwrap();
        let direct = analyze_sample(
            &model.with_seed(7).with_horizon(2000).generate().unwrap(),
            10,
            &Thresholds::default(),
        )
        .unwrap();
        assert_eq!(r.report.unwrap(), direct);
    }

    #[test]
    fn deterministic_model_is_rejected() {
        let model = find_preset("fibonacci").unwrap().model;
        assert!(run(&model, &cfg(Mode::Sequence, 3, 100)).is_err());
    }
}
