//! Named, ready-to-run models.
//!
//! Irrational constants are binary64 literals (√2 to 17 digits). Those are
//! technically rational, but their nearest small-denominator rationals are so
//! far away that nothing changes at the horizons used here.

use serde::{Deserialize, Serialize};

use crate::binet::VerdictStatus;
use crate::error::{Error, Result};
use crate::expr::{EvalContext, Expr};
use crate::recurrence::{content_hash, RecurrenceSpec, SampleMetadata, SequenceSample};
use crate::scinum::SciNum;

pub const SQRT2: &str = "1.4142135623730951";

/// `r(n) = b₁ ∏_{i=1}^{n} μ(i)` for `n = 1..=horizon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MainTermSpec {
    pub mu: Expr,
    pub b1: SciNum,
    pub horizon: usize,
    #[serde(default)]
    pub trial_seed: u64,
}

impl MainTermSpec {
    pub fn new(mu: &str, b1: f64, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidSpec("horizon must be positive".into()));
        }
        Ok(MainTermSpec {
            mu: mu.parse()?,
            b1: SciNum::from_real(b1)?,
            horizon,
            trial_seed: 0,
        })
    }

    pub fn hash(&self) -> String {
        content_hash(&serde_json::to_string(self).unwrap_or_default())
    }

    pub fn generate(&self) -> Result<SequenceSample> {
        let mut acc = self.b1;
        let mut values = Vec::with_capacity(self.horizon);
        for i in 1..=self.horizon {
            let mut ctx = EvalContext::new(i as u64, self.trial_seed);
            let mu = self.mu.eval_sci(&mut ctx).map_err(|e| e.at_step(i))?;
            acc = acc.mul(mu).map_err(|e| e.at_step(i))?;
            values.push(acc);
        }
        Ok(SequenceSample::from_values(
            values,
            SampleMetadata::plain(self.hash(), self.trial_seed),
        ))
    }
}

/// Anything that produces a sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Model {
    Recurrence(RecurrenceSpec),
    MainTerm(MainTermSpec),
}

impl Model {
    pub fn horizon(&self) -> usize {
        match self {
            Model::Recurrence(s) => s.horizon,
            Model::MainTerm(s) => s.horizon,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            Model::Recurrence(s) => s.trial_seed,
            Model::MainTerm(s) => s.trial_seed,
        }
    }

    pub fn with_horizon(mut self, horizon: usize) -> Self {
        match &mut self {
            Model::Recurrence(s) => s.horizon = horizon,
            Model::MainTerm(s) => s.horizon = horizon,
        }
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        match &mut self {
            Model::Recurrence(s) => s.trial_seed = seed,
            Model::MainTerm(s) => s.trial_seed = seed,
        }
        self
    }

    pub fn has_random(&self) -> bool {
        match self {
            Model::Recurrence(s) => s.has_random(),
            Model::MainTerm(s) => s.mu.has_random(),
        }
    }

    pub fn hash(&self) -> String {
        match self {
            Model::Recurrence(s) => s.hash(),
            Model::MainTerm(s) => s.hash(),
        }
    }

    pub fn generate(&self) -> Result<SequenceSample> {
        match self {
            Model::Recurrence(s) => {
                s.validate()?;
                s.generate()
            }
            Model::MainTerm(s) => s.generate(),
        }
    }

    pub fn as_recurrence(&self) -> Option<&RecurrenceSpec> {
        match self {
            Model::Recurrence(s) => Some(s),
            Model::MainTerm(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preset {
    pub name: String,
    pub description: String,
    pub model: Model,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub expected: Option<VerdictStatus>,
    /// Largest horizon the model can be run to before magnitudes leave the
    /// representable range or fractional parts lose all precision.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub max_horizon: Option<usize>,
}

impl Preset {
    /// The model at horizon `n`, clamped to `max_horizon`.
    pub fn model_at(&self, n: usize) -> Model {
        let n = self.max_horizon.map_or(n, |m| n.min(m));
        self.model.clone().with_horizon(n)
    }

    pub fn clamps(&self, n: usize) -> bool {
        self.max_horizon.is_some_and(|m| n > m)
    }
}

const DEFAULT_HORIZON: usize = 1000;

fn recurrence(coeffs: &[&str], initial: &[f64]) -> Model {
    Model::Recurrence(RecurrenceSpec::linear(coeffs, initial, DEFAULT_HORIZON).expect("preset spec"))
}

fn main_term(mu: &str) -> Model {
    Model::MainTerm(MainTermSpec::new(mu, 1.0, DEFAULT_HORIZON).expect("preset spec"))
}

fn preset(name: &str, description: &str, model: Model, expected: Option<VerdictStatus>) -> Preset {
    Preset {
        name: name.into(),
        description: description.into(),
        model,
        expected,
        max_horizon: None,
    }
}

pub fn list_presets() -> Vec<Preset> {
    use VerdictStatus::*;
    let mult = RecurrenceSpec::multiplicative(&["1", "1"], &[2.0, 3.0], 60).expect("preset spec");
    vec![
        preset("fibonacci", "a(n+1) = a(n) + a(n-1), a1 = a2 = 1", recurrence(&["1", "1"], &[1.0, 1.0]), Some(Benford)),
        preset("power100", "a(n+1) = 100 a(n), a1 = 1", recurrence(&["100"], &[1.0]), Some(NotBenford)),
        preset("doubling", "a(n+1) = 2 a(n), a1 = 1", recurrence(&["2"], &[1.0]), Some(Benford)),
        preset(
            "rotation",
            "a(n+1) = -4 a(n-1); characteristic roots ±2i",
            recurrence(&["0", "-4"], &[1.0, 1.0]),
            None,
        ),
        preset("factorial", "r(n) = prod k, the factorial", main_term("n"), Some(Benford)),
        preset(
            "factorial_pow",
            "r(n) = (n!)^α with α = √2",
            main_term(&format!("n^{SQRT2}")),
            Some(Benford),
        ),
        preset(
            "exp_poly",
            "r(n) = prod exp(α h(k)) with h(k) = k², α = √2",
            main_term(&format!("exp({SQRT2}*n^2)")),
            Some(Benford),
        ),
        preset(
            "uniform_chain",
            "r(n) = prod h(k) U_k with h = 1 and U_k uniform on [0, 1]",
            main_term("uniform(0, 1)"),
            Some(Benford),
        ),
        Preset {
            max_horizon: Some(60),
            ..preset(
                "mult_fib",
                "A(n+1) = A(n) A(n-1), A1 = 2, A2 = 3; exponents grow like φⁿ",
                Model::Recurrence(mult),
                None,
            )
        },
        preset(
            "linear_n",
            "a(n+1) = n a(n) + a(n-1), a1 = a2 = 1",
            recurrence(&["n", "1"], &[1.0, 1.0]),
            Some(Benford),
        ),
        preset(
            "depth3_smooth",
            "a(n+1) = n a(n) + a(n-1) + a(n-2), a1 = a2 = a3 = 1",
            recurrence(&["n", "1", "1"], &[1.0, 1.0, 1.0]),
            Some(Benford),
        ),
    ]
}

pub fn find_preset(name: &str) -> Result<Preset> {
    list_presets().into_iter().find(|p| p.name == name).ok_or_else(|| {
        let names: Vec<String> = list_presets().into_iter().map(|p| p.name).collect();
        Error::InvalidSpec(format!("unknown preset '{name}' (known: {})", names.join(", ")))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benford::{analyze_sample, Thresholds, Verdict};

    #[test]
    fn names_are_unique_and_required_ones_exist() {
        let names: Vec<String> = list_presets().into_iter().map(|p| p.name).collect();
        for required in [
            "fibonacci",
            "power100",
            "factorial",
            "factorial_pow",
            "exp_poly",
            "uniform_chain",
            "mult_fib",
            "depth3_smooth",
        ] {
            assert!(names.iter().any(|n| n == required), "{required}");
        }
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), names.len());
        assert_eq!(find_preset("fibonacci").unwrap().expected, Some(VerdictStatus::Benford));
        assert_eq!(find_preset("power100").unwrap().expected, Some(VerdictStatus::NotBenford));
        assert!(find_preset("nope").is_err());
    }

    #[test]
    fn every_preset_runs_at_one_thousand() {
        for p in list_presets() {
            let s = p.model_at(1000).generate().unwrap_or_else(|e| panic!("{}: {e}", p.name));
            assert_eq!(s.len(), p.max_horizon.unwrap_or(1000).min(1000), "{}", p.name);
        }
    }

    #[test]
    fn round_trip_keeps_hash() {
        for p in list_presets() {
            let text = serde_json::to_string(&p).unwrap();
            let back: Preset = serde_json::from_str(&text).unwrap();
            assert_eq!(back.model.hash(), p.model.hash(), "{}", p.name);
            assert_eq!(back, p);
        }
    }

    #[test]
    fn expected_tags_match_analysis() {
        for p in list_presets() {
            let Some(expected) = p.expected else { continue };
            let s = p.model_at(10_000).generate().unwrap();
            let r = analyze_sample(&s, 10, &Thresholds::default()).unwrap();
            let want = match expected {
                VerdictStatus::Benford => Verdict::Consistent,
                _ => Verdict::Inconsistent,
            };
            assert_eq!(r.verdict, want, "{}: {r:?}", p.name);
        }
    }

    #[test]
    fn factorial_main_term() {
        let s = find_preset("factorial").unwrap().model_at(10).generate().unwrap();
        assert_eq!(s.term(5).to_f64(), 120.0);
        assert!((s.term(10).to_f64() - 3_628_800.0).abs() < 1e-6);
    }

    #[test]
    fn constant_mu_gives_constant_sequence() {
        let s = MainTermSpec::new("1", 7.0, 20).unwrap().generate().unwrap();
        assert!(s.values.iter().all(|v| v.to_f64() == 7.0));
    }
}
