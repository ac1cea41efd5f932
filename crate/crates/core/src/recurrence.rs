//! Sequence generation for linear and multiplicative recurrences.
//!
//! Linear: `a_{n+1} = f_1(n) a_n + f_2(n) a_{n-1} + … + f_L(n) a_{n-L+1}`,
//! multiplicative: `A_{n+1} = A_n^{f_1(n)} ⋯ A_{n-L+1}^{f_L(n)}`, both for
//! `n ≥ L` from initial values `a_1 … a_L`.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::expr::{EvalContext, Expr};
use crate::rng::GENERATOR_ID;
use crate::scinum::SciNum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecurrenceKind {
    Linear,
    Multiplicative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceSpec {
    pub kind: RecurrenceKind,
    pub coeffs: Vec<Expr>,
    pub initial: Vec<SciNum>,
    pub horizon: usize,
    #[serde(default)]
    pub trial_seed: u64,
}

impl RecurrenceSpec {
    pub fn new(
        kind: RecurrenceKind,
        coeffs: Vec<Expr>,
        initial: Vec<SciNum>,
        horizon: usize,
        trial_seed: u64,
    ) -> Result<Self> {
        let spec = RecurrenceSpec {
            kind,
            coeffs,
            initial,
            horizon,
            trial_seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Convenience constructor from expression text and real initial values.
    pub fn linear(coeffs: &[&str], initial: &[f64], horizon: usize) -> Result<Self> {
        Self::from_text(RecurrenceKind::Linear, coeffs, initial, horizon)
    }

    pub fn multiplicative(coeffs: &[&str], initial: &[f64], horizon: usize) -> Result<Self> {
        Self::from_text(RecurrenceKind::Multiplicative, coeffs, initial, horizon)
    }

    fn from_text(kind: RecurrenceKind, coeffs: &[&str], initial: &[f64], horizon: usize) -> Result<Self> {
        let coeffs = coeffs.iter().map(|s| s.parse()).collect::<Result<Vec<Expr>>>()?;
        let initial = initial
            .iter()
            .map(|&v| SciNum::from_real(v))
            .collect::<Result<Vec<_>>>()?;
        Self::new(kind, coeffs, initial, horizon, 0)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.trial_seed = seed;
        self
    }

    pub fn with_horizon(mut self, horizon: usize) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn depth(&self) -> usize {
        self.coeffs.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.coeffs.is_empty() {
            return Err(Error::InvalidSpec("depth must be at least 1".into()));
        }
        if self.coeffs.len() != self.initial.len() {
            return Err(Error::InvalidSpec(format!(
                "{} coefficients but {} initial values",
                self.coeffs.len(),
                self.initial.len()
            )));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidSpec("horizon must be positive".into()));
        }
        if self.kind == RecurrenceKind::Multiplicative && self.initial.iter().any(|v| v.sign() != 1) {
            return Err(Error::InvalidSpec(
                "multiplicative recurrences need strictly positive initial values".into(),
            ));
        }
        Ok(())
    }

    pub fn has_random(&self) -> bool {
        self.coeffs.iter().any(Expr::has_random)
    }

    /// Short content hash of the canonical JSON form.
    pub fn hash(&self) -> String {
        content_hash(&serde_json::to_string(self).unwrap_or_default())
    }

    /// Coefficient values `f_i(n)` for `n` in `first..=last`.
    pub fn realize(&self, first: usize, last: usize) -> Result<CoefficientTable> {
        CoefficientTable::realize(&self.coeffs, self.trial_seed, first, last)
    }

    pub fn generate(&self) -> Result<SequenceSample> {
        match self.kind {
            RecurrenceKind::Linear => iterate_linear(self),
            RecurrenceKind::Multiplicative => iterate_multiplicative(self),
        }
    }
}

/// First 16 hex digits of the SHA-256 of `text`.
pub fn content_hash(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .take(8)
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Realized coefficient values, one row per step index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTable {
    pub first_step: usize,
    pub rows: Vec<Vec<f64>>,
}

impl CoefficientTable {
    /// Evaluates every coefficient at each step. Within one step the
    /// coefficients share a draw counter, so `f_1(n)` and `f_2(n)` never
    /// reuse a random draw.
    pub fn realize(coeffs: &[Expr], seed: u64, first: usize, last: usize) -> Result<Self> {
        let mut rows = Vec::with_capacity(last.saturating_sub(first) + 1);
        for n in first..=last {
            let mut ctx = EvalContext::new(n as u64, seed);
            let row = coeffs
                .iter()
                .map(|c| c.eval(&mut ctx))
                .collect::<Result<Vec<f64>>>()
                .map_err(|e| e.at_step(n))?;
            rows.push(row);
        }
        Ok(CoefficientTable {
            first_step: first,
            rows,
        })
    }

    pub fn from_columns(first_step: usize, columns: &[Vec<f64>]) -> Self {
        let len = columns.iter().map(Vec::len).min().unwrap_or(0);
        let rows = (0..len).map(|k| columns.iter().map(|c| c[k]).collect()).collect();
        CoefficientTable { first_step, rows }
    }

    pub fn last_step(&self) -> usize {
        self.first_step + self.rows.len() - 1
    }

    pub fn depth(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    /// `f_{i+1}(n)`.
    pub fn get(&self, n: usize, i: usize) -> f64 {
        self.rows[n - self.first_step][i]
    }

    pub fn covers(&self, n: usize) -> bool {
        n >= self.first_step && n - self.first_step < self.rows.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMetadata {
    pub spec_hash: String,
    pub seed: u64,
    pub generator: String,
    pub precision_loss: usize,
    pub truncations: usize,
    /// 1-based indices of terms that are exactly zero.
    pub zero_terms: Vec<usize>,
    /// Present when the coefficients contain random draws.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub realized_coefficients: Option<CoefficientTable>,
}

impl SampleMetadata {
    pub fn plain(spec_hash: String, seed: u64) -> Self {
        SampleMetadata {
            spec_hash,
            seed,
            generator: GENERATOR_ID.to_string(),
            precision_loss: 0,
            truncations: 0,
            zero_terms: Vec::new(),
            realized_coefficients: None,
        }
    }
}

/// `values[k]` is the term with index `k + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceSample {
    pub values: Vec<SciNum>,
    pub log10_frac: Vec<Option<f64>>,
    pub metadata: SampleMetadata,
}

impl SequenceSample {
    pub fn from_values(values: Vec<SciNum>, mut metadata: SampleMetadata) -> Self {
        let log10_frac = values.iter().map(|v| v.log10_frac().ok()).collect();
        metadata.zero_terms = values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_zero())
            .map(|(i, _)| i + 1)
            .collect();
        SequenceSample {
            values,
            log10_frac,
            metadata,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Term `a_n` (1-based).
    pub fn term(&self, n: usize) -> SciNum {
        self.values[n - 1]
    }

    /// `log10|a_n| mod 1` of the nonzero terms, in order.
    pub fn points(&self) -> Vec<f64> {
        self.log10_frac.iter().flatten().copied().collect()
    }

    pub fn zero_count(&self) -> usize {
        self.log10_frac.iter().filter(|x| x.is_none()).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,sign,mantissa,exponent,log10_frac\n");
        for (i, (v, f)) in self.values.iter().zip(&self.log10_frac).enumerate() {
            let frac = f.map(|x| format!("{x:?}")).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{:.16},{},{}\n",
                i + 1,
                v.sign(),
                v.mantissa(),
                v.exponent(),
                frac
            ));
        }
        out
    }

    /// Reads the `n,sign,mantissa,exponent,…` layout written by
    /// [`SequenceSample::to_csv`]. Lines starting with `#` are skipped.
    pub fn values_from_csv(text: &str) -> Result<Vec<SciNum>> {
        let mut values = Vec::new();
        let mut offset = 0;
        let mut header_seen = false;
        for line in text.split_inclusive('\n') {
            let start = offset;
            offset += line.len();
            let row = line.trim();
            if row.is_empty() || row.starts_with('#') {
                continue;
            }
            if !header_seen {
                header_seen = true;
                if row.starts_with('n') {
                    continue;
                }
            }
            let bad = |message: String| Error::Parse {
                offset: start,
                message,
            };
            let cols: Vec<&str> = row.split(',').collect();
            if cols.len() < 4 {
                return Err(bad(format!("expected at least 4 columns, got {}", cols.len())));
            }
            let sign: i8 = cols[1].trim().parse().map_err(|_| bad(format!("bad sign '{}'", cols[1])))?;
            let m: f64 = cols[2]
                .trim()
                .parse()
                .map_err(|_| bad(format!("bad mantissa '{}'", cols[2])))?;
            let e: i64 = cols[3]
                .trim()
                .parse()
                .map_err(|_| bad(format!("bad exponent '{}'", cols[3])))?;
            values.push(SciNum::from_parts(sign, m, e).map_err(|e| bad(e.to_string()))?);
        }
        Ok(values)
    }
}

/// Below 2^53 integer-valued terms are exact in binary64.
const PLAIN_LIMIT: f64 = 9_007_199_254_740_992.0;

pub fn iterate_linear(spec: &RecurrenceSpec) -> Result<SequenceSample> {
    spec.validate()?;
    if spec.kind != RecurrenceKind::Linear {
        return Err(Error::InvalidSpec("iterate_linear needs a linear spec".into()));
    }
    let depth = spec.depth();
    let horizon = spec.horizon;
    let mut meta = SampleMetadata::plain(spec.hash(), spec.trial_seed);
    let mut values: Vec<SciNum> = spec.initial.iter().take(horizon).copied().collect();
    if horizon > depth {
        let table = spec.realize(depth, horizon - 1)?;
        // Plain binary64 while every term is comfortably in range: exact for
        // integer sequences below 2^53 and cheaper than SciNum arithmetic.
        let mut plain: Option<Vec<f64>> = values
            .iter()
            .map(|v| {
                let x = v.to_f64();
                (x.abs() < PLAIN_LIMIT && SciNum::from_real(x).ok() == Some(*v)).then_some(x)
            })
            .collect();
        for n in depth..horizon {
            if let Some(p) = plain.as_mut() {
                let mut sum = 0.0;
                let mut biggest = 0.0f64;
                for i in 0..depth {
                    let term = table.get(n, i) * p[n - 1 - i];
                    biggest = biggest.max(term.abs());
                    sum += term;
                }
                if biggest < PLAIN_LIMIT && sum.is_finite() {
                    if sum != 0.0 && sum.abs() < crate::scinum::CANCELLATION_THRESHOLD * biggest {
                        meta.precision_loss += 1;
                    }
                    p.push(sum);
                    values.push(SciNum::from_real(sum).map_err(|e| e.at_step(n))?);
                    continue;
                }
                plain = None;
            }
            let mut acc = SciNum::ZERO;
            for i in 0..depth {
                // f_{i+1}(n) · a_{n-i}, with a_k stored at k - 1.
                let term = values[n - 1 - i]
                    .mul_real(table.get(n, i))
                    .map_err(|e| e.at_step(n))?;
                let out = acc.add_tracked(term).map_err(|e| e.at_step(n))?;
                meta.precision_loss += usize::from(out.precision_loss);
                meta.truncations += usize::from(out.truncated);
                acc = out.value;
            }
            values.push(acc);
        }
        if spec.has_random() {
            meta.realized_coefficients = Some(table);
        }
    }
    Ok(SequenceSample::from_values(values, meta))
}

/// Iterates in `log10` space and materializes each term as a [`SciNum`].
pub fn iterate_multiplicative(spec: &RecurrenceSpec) -> Result<SequenceSample> {
    spec.validate()?;
    if spec.kind != RecurrenceKind::Multiplicative {
        return Err(Error::InvalidSpec("iterate_multiplicative needs a multiplicative spec".into()));
    }
    let logs = multiplicative_logs(spec)?;
    let mut values = Vec::with_capacity(logs.len());
    for (k, &l) in logs.iter().enumerate() {
        values.push(SciNum::from_log10(1, l).map_err(|e| e.at_step(k.max(1)))?);
    }
    // Initial values are kept exactly as given.
    for (v, init) in values.iter_mut().zip(&spec.initial) {
        *v = *init;
    }
    let mut meta = SampleMetadata::plain(spec.hash(), spec.trial_seed);
    if spec.has_random() && spec.horizon > spec.depth() {
        meta.realized_coefficients = Some(spec.realize(spec.depth(), spec.horizon - 1)?);
    }
    Ok(SequenceSample::from_values(values, meta))
}

/// `log10 A_n` for `n = 1..=horizon`.
pub fn multiplicative_logs(spec: &RecurrenceSpec) -> Result<Vec<f64>> {
    let depth = spec.depth();
    let horizon = spec.horizon;
    let mut logs = spec
        .initial
        .iter()
        .take(horizon)
        .map(|v| {
            if v.sign() != 1 {
                return Err(Error::Domain("non-positive value in multiplicative recurrence".into()));
            }
            v.log10_abs()
        })
        .collect::<Result<Vec<f64>>>()?;
    if horizon > depth {
        let table = spec.realize(depth, horizon - 1)?;
        for n in depth..horizon {
            let l: f64 = (0..depth).map(|i| table.get(n, i) * logs[n - 1 - i]).sum();
            if !l.is_finite() || l.abs() >= 9.2e18 {
                return Err(Error::Overflow(format!("log10 A_{} = {l:e} out of range", n + 1)).at_step(n));
            }
            logs.push(l);
        }
    }
    Ok(logs)
}

/// Exponents with `A_n = A_2^{x_n} A_1^{y_n}` for a depth-2 multiplicative
/// recurrence: both follow the linear recurrence from `x = (0, 1)`,
/// `y = (1, 0)`.
pub fn exponent_sequences(spec: &RecurrenceSpec) -> Result<(Vec<f64>, Vec<f64>)> {
    spec.validate()?;
    if spec.kind != RecurrenceKind::Multiplicative || spec.depth() != 2 {
        return Err(Error::InvalidSpec(
            "exponent sequences need a depth-2 multiplicative spec".into(),
        ));
    }
    let horizon = spec.horizon;
    let mut x = vec![0.0, 1.0];
    let mut y = vec![1.0, 0.0];
    if horizon > 2 {
        let table = spec.realize(2, horizon - 1)?;
        for n in 2..horizon {
            let (f, g) = (table.get(n, 0), table.get(n, 1));
            let xn = f * x[n - 1] + g * x[n - 2];
            let yn = f * y[n - 1] + g * y[n - 2];
            if !xn.is_finite() || !yn.is_finite() {
                return Err(Error::Overflow(format!("exponent sequence at n={}", n + 1)).at_step(n));
            }
            x.push(xn);
            y.push(yn);
        }
    }
    x.truncate(horizon);
    y.truncate(horizon);
    Ok((x, y))
}
