//! Auxiliary λ/μ decompositions of variable-coefficient recurrences.
//!
//! For `a_{n+1} = f(n) a_n + g(n) a_{n-1}` we look for λ, μ with
//! `f(n) = λ(n) + μ(n)` and `g(n) = -λ(n-1) μ(n)`. Then
//! `b_n = a_{n+1} - λ(n) a_n` satisfies `b_n = μ(n) b_{n-1}`, so
//! `b_n = b_1 Π_{i=2}^{n} μ(i)` and
//! `a_{n+1} = Σ_{k=2}^{n} Π_{i=k+1}^{n} λ(i) · b_k + a_2 Π_{i=2}^{n} λ(i)`.
//! The product `r(n) = b_1 Π μ(i)` is the main term when `λ/μ → 0`.
//!
//! A depth-L recurrence reduces to depth L-1 the same way: with
//! `b_n = a_{n+1} - λ(n) a_n` and coefficients `g_j`,
//!
//! ```text
//! f_1(n) = λ(n) + g_1(n-1)
//! f_j(n) = -g_{j-1}(n-1) λ(n-j+1) + g_j(n-1)      1 < j < L
//! f_L(n) = -g_{L-1}(n-1) λ(n-L+1)
//! ```
//!
//! the sequence b satisfies `b_{m+1} = Σ_j g_j(m) b_{m-j+1}`. For `L = 2`,
//! `μ(n) = g_1(n-1)`.
//!
//! The free initial values of λ fix everything else. By default they are
//! chosen by running the reduction backwards from far beyond the horizon,
//! which converges to the ratio of the recessive (minimal) solution. That is
//! the choice for which `μ` carries the dominant growth; for any other
//! admissible choice λ follows the dominant solution instead.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::recurrence::{content_hash, CoefficientTable, RecurrenceKind, RecurrenceSpec, SampleMetadata, SequenceSample};
use crate::scinum::SciNum;

/// Relative size below which a denominator counts as degenerate.
pub const DEGENERACY_FLOOR: f64 = 1e-8;
/// `c` this close to `a_2/a_1` would make `b_1` vanish.
pub const C_REJECT: f64 = 1e-12;
pub const SCAN_SIZE: usize = 64;
pub const SCAN_NUDGE: f64 = 1.0 / 64.0;
/// Identity residual allowed by the construction's own self-check.
pub const IDENTITY_TOLERANCE: f64 = 1e-10;
const MIN_PAD: usize = 100;

fn pad(n: usize) -> usize {
    MIN_PAD.max(n / 2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CChoice {
    /// Backward construction, recessive-solution ratio.
    Minimal,
    /// Supplied by the caller.
    Given,
    /// First admissible entry of the scan list.
    Scanned,
}

/// One reduction step of a depth-L coefficient table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reduction {
    pub depth: usize,
    /// `λ(1..=top)`.
    pub lambda: Vec<f64>,
    /// `g_j(m)` for `m = depth-1 ..= top-1`.
    pub inner: CoefficientTable,
}

impl Reduction {
    pub fn lambda(&self, n: usize) -> f64 {
        self.lambda[n - 1]
    }

    pub fn top(&self) -> usize {
        self.lambda.len()
    }
}

fn check_nonvanishing(table: &CoefficientTable, upto: usize) -> Result<()> {
    let l = table.depth();
    for n in table.first_step..=upto.min(table.last_step()) {
        if table.get(n, l - 1) == 0.0 {
            return Err(Error::Construction(format!(
                "last coefficient vanishes at n={n}; no decomposition exists"
            )));
        }
    }
    Ok(())
}

/// Runs the reduction from `top` down to `n = L`, starting from λ ≡ 0 above
/// the table. Fails on a near-zero denominator anywhere.
pub fn reduce_backward(table: &CoefficientTable, top: usize) -> Result<Reduction> {
    let l = table.depth();
    if l < 2 || table.first_step != l || !table.covers(top) || top < l {
        return Err(Error::InvalidSpec("backward reduction needs a depth ≥ 2 table from n = L".into()));
    }
    check_nonvanishing(table, top)?;
    let mut lambda = vec![0.0; top];
    let mut rows = vec![vec![0.0; l - 1]; top - l + 1];
    for n in (l..=top).rev() {
        let row = &mut rows[n - l];
        row[0] = table.get(n, 0) - lambda[n - 1];
        let mut scale = table.get(n, 0).abs().max(lambda[n - 1].abs());
        for j in 2..l {
            let carried = row[j - 2] * lambda[n - j];
            row[j - 1] = table.get(n, j - 1) + carried;
            scale = table.get(n, j - 1).abs().max(carried.abs());
        }
        let last = row[l - 2];
        if !(last.abs() >= DEGENERACY_FLOOR * scale) || last == 0.0 {
            return Err(Error::Construction(format!("near-zero denominator at n={n}")));
        }
        lambda[n - l] = -table.get(n, l - 1) / last;
        if !lambda[n - l].is_finite() {
            return Err(Error::Construction(format!("λ not finite at n={}", n - l + 1)));
        }
    }
    Ok(Reduction {
        depth: l,
        lambda,
        inner: CoefficientTable {
            first_step: l - 1,
            rows,
        },
    })
}

/// Runs the reduction forward from `λ(1..L-1) = start`.
pub fn reduce_forward(table: &CoefficientTable, start: &[f64], top: usize) -> Result<Reduction> {
    let l = table.depth();
    if l < 2 || table.first_step != l || !table.covers(top) || start.len() != l - 1 {
        return Err(Error::InvalidSpec("forward reduction needs a depth ≥ 2 table and L-1 start values".into()));
    }
    check_nonvanishing(table, top)?;
    let mut lambda = vec![0.0; top];
    lambda[..l - 1].copy_from_slice(start);
    let mut rows = vec![vec![0.0; l - 1]; top - l + 1];
    for n in l..=top {
        let row = &mut rows[n - l];
        row[l - 2] = -table.get(n, l - 1) / lambda[n - l];
        for j in (2..l).rev() {
            row[j - 2] = (row[j - 1] - table.get(n, j - 1)) / lambda[n - j];
        }
        lambda[n - 1] = table.get(n, 0) - row[0];
        if !lambda[n - 1].is_finite() || row.iter().any(|v| !v.is_finite() || *v == 0.0) {
            return Err(Error::Construction(format!("degenerate step at n={n}")));
        }
    }
    Ok(Reduction {
        depth: l,
        lambda,
        inner: CoefficientTable {
            first_step: l - 1,
            rows,
        },
    })
}

/// Largest relative residual of each defining identity over `n = L..=upto`.
/// Each residual is scaled by the largest term in its identity.
pub fn identity_residuals(table: &CoefficientTable, red: &Reduction, upto: usize) -> Vec<f64> {
    let l = red.depth;
    let mut worst = vec![0.0f64; l];
    for n in l..=upto {
        let g = |j: usize| red.inner.get(n - 1, j - 1);
        let lam = |k: usize| red.lambda[k - 1];
        let f = |j: usize| table.get(n, j - 1);
        let mut push = |i: usize, terms: &[f64]| {
            let sum: f64 = terms.iter().sum();
            let scale = terms.iter().fold(0.0f64, |m, t| m.max(t.abs()));
            if scale > 0.0 {
                worst[i] = worst[i].max(sum.abs() / scale);
            }
        };
        push(0, &[f(1), -lam(n), -g(1)]);
        for j in 2..l {
            push(j - 1, &[f(j), g(j - 1) * lam(n - j + 1), -g(j)]);
        }
        push(l - 1, &[f(l), g(l - 1) * lam(n - l + 1)]);
    }
    worst
}

/// Seed sequences with unit initial values `e_i(k) = [k = i]` for
/// `k = 0..L-1`, continued by `s_k = Σ_j f_j(k) s_{k-j}`. A parameter vector
/// `s_0..s_{L-1}` gives `s = Σ_i s_i e_i` and `λ(k) = s_k / s_{k-1}`.
///
/// Values are stored with a per-index power of ten: the true value at `k` is
/// `basis[i][k] · 10^scale[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    pub basis: Vec<Vec<f64>>,
    pub scale: Vec<i64>,
}

impl Seeds {
    pub fn new(table: &CoefficientTable, upto: usize) -> Seeds {
        let l = table.depth();
        let mut basis: Vec<Vec<f64>> = (0..l)
            .map(|i| {
                let mut v = vec![0.0; upto + 1];
                if i <= upto {
                    v[i] = 1.0;
                }
                v
            })
            .collect();
        let mut scale = vec![0i64; upto + 1];
        for k in l..=upto {
            // Bring the previous L values to a common scale.
            let base = scale[k - 1];
            for seq in basis.iter_mut() {
                let mut next = 0.0;
                for j in 1..=l {
                    let shift = (scale[k - j] - base) as i32;
                    next += table.get(k, j - 1) * seq[k - j] * 10f64.powi(shift);
                }
                seq[k] = next;
            }
            scale[k] = base;
            let big = basis.iter().fold(0.0f64, |m, s| m.max(s[k].abs()));
            if big > 1e100 || (big < 1e-100 && big > 0.0) {
                let e = big.log10().floor() as i64;
                for seq in basis.iter_mut() {
                    seq[k] /= 10f64.powi(e as i32);
                }
                scale[k] += e;
            }
        }
        Seeds { basis, scale }
    }

    /// First index `k ≥ 1` where `|s_k|` falls below the degeneracy floor
    /// relative to its largest component.
    pub fn first_degenerate(&self, params: &[f64]) -> Option<usize> {
        let len = self.scale.len();
        (1..len).find(|&k| {
            let parts: Vec<f64> = self.basis.iter().zip(params).map(|(b, p)| b[k] * p).collect();
            let sum: f64 = parts.iter().sum();
            let big = parts.iter().fold(0.0f64, |m, p| m.max(p.abs()));
            !(sum.abs() >= DEGENERACY_FLOOR * big) || sum == 0.0
        })
    }
}

/// Paper-style view of the depth-2/3 seeds: `alpha` multiplies `c`, `beta`
/// multiplies `d` (depth 3) or 1 (depth 2), `gamma` multiplies 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxSeeds {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gamma: Option<Vec<f64>>,
    pub scale: Vec<i64>,
}

impl From<&Seeds> for AuxSeeds {
    fn from(s: &Seeds) -> Self {
        let l = s.basis.len();
        if l == 2 {
            AuxSeeds {
                alpha: s.basis[1].clone(),
                beta: s.basis[0].clone(),
                gamma: None,
                scale: s.scale.clone(),
            }
        } else {
            AuxSeeds {
                alpha: s.basis[2].clone(),
                beta: s.basis[1].clone(),
                gamma: Some(s.basis[0].clone()),
                scale: s.scale.clone(),
            }
        }
    }
}

/// Scan list: `a_2/a_1 + 1, 1, 2, 3, -1, 1/2`, then rationals by height.
pub fn scan_candidates(ratio: Option<f64>) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(SCAN_SIZE);
    if let Some(r) = ratio.filter(|r| r.is_finite()) {
        out.push(r + 1.0);
    }
    for v in [1.0, 2.0, 3.0, -1.0, 0.5] {
        if !out.contains(&v) {
            out.push(v);
        }
    }
    let mut h = 1i64;
    while out.len() < SCAN_SIZE {
        for q in 1..=h {
            for p in -h..=h {
                if p.abs().max(q) != h || gcd(p.abs(), q) != 1 || p == 0 {
                    continue;
                }
                let v = p as f64 / q as f64;
                if out.len() < SCAN_SIZE && !out.contains(&v) {
                    out.push(v);
                }
            }
        }
        h += 1;
    }
    out
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxiliaryDecomposition {
    pub c: f64,
    pub choice: CChoice,
    pub a1: f64,
    pub a2: f64,
    /// `λ(1..=N)`.
    pub lambda: Vec<f64>,
    /// `μ(2..=N)`.
    pub mu: Vec<f64>,
    /// `f(2..=N)` and `g(2..=N)` as realized.
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub b1: f64,
    pub forbidden_hits: usize,
    /// Candidate values of `c` that were rejected.
    pub rejected: Vec<f64>,
    /// Worst relative residual of `f = λ + μ` and `g = -λ(n-1)μ(n)`.
    pub residuals: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seeds: Option<AuxSeeds>,
    pub source_hash: String,
}

fn ratio_forbidden(c: f64, a1: f64, a2: f64) -> bool {
    if a1 == 0.0 {
        return false;
    }
    let r = a2 / a1;
    (c - r).abs() < C_REJECT * r.abs().max(1.0)
}

fn b1_vanishes(c: f64, a1: f64, a2: f64) -> bool {
    let b1 = a2 - c * a1;
    !(b1.abs() > C_REJECT * a2.abs().max((c * a1).abs()))
}

fn depth2_table(spec: &RecurrenceSpec) -> Result<(CoefficientTable, f64, f64)> {
    if spec.kind != RecurrenceKind::Linear || spec.depth() != 2 {
        return Err(Error::InvalidSpec("λ/μ construction needs a depth-2 linear spec".into()));
    }
    if spec.horizon < 2 {
        return Err(Error::InvalidSpec("horizon must be at least 2".into()));
    }
    let a1 = spec.initial[0].to_f64();
    let a2 = spec.initial[1].to_f64();
    let top = spec.horizon + pad(spec.horizon);
    Ok((spec.realize(2, top)?, a1, a2))
}

/// λ/μ decomposition of a depth-2 linear spec over its horizon.
pub fn build_lambda_mu(spec: &RecurrenceSpec, c_hint: Option<f64>) -> Result<AuxiliaryDecomposition> {
    let (table, a1, a2) = depth2_table(spec)?;
    let mut dec = build_from_table(&table, a1, a2, spec.horizon, c_hint)?;
    dec.source_hash = spec.hash();
    Ok(dec)
}

/// As [`build_lambda_mu`] for an already realized `f, g` table covering
/// `n = 2..` at least to `n_max` (further when the backward construction is
/// wanted).
pub fn build_from_table(
    table: &CoefficientTable,
    a1: f64,
    a2: f64,
    n_max: usize,
    c_hint: Option<f64>,
) -> Result<AuxiliaryDecomposition> {
    if table.depth() != 2 || table.first_step != 2 || !table.covers(n_max) || n_max < 2 {
        return Err(Error::InvalidSpec("table must hold f, g from n = 2 through the horizon".into()));
    }
    if !a1.is_finite() || !a2.is_finite() {
        return Err(Error::Domain("initial values must be representable as reals".into()));
    }
    if a1 == 0.0 && a2 == 0.0 {
        return Err(Error::InvalidSpec("a1 and a2 are both zero".into()));
    }
    check_nonvanishing(table, n_max)?;
    let ratio = (a1 != 0.0).then(|| a2 / a1);
    let mut rejected = Vec::new();

    let try_forward = |c: f64, rejected: &mut Vec<f64>| -> Option<(Reduction, Seeds)> {
        if c == 0.0 || ratio_forbidden(c, a1, a2) || b1_vanishes(c, a1, a2) {
            rejected.push(c);
            return None;
        }
        let seeds = Seeds::new(&table_prefix(table, n_max), n_max);
        if seeds.first_degenerate(&[1.0, c]).is_some() {
            rejected.push(c);
            return None;
        }
        match reduce_forward(&table_prefix(table, n_max), &[c], n_max) {
            Ok(red) => Some((red, seeds)),
            Err(_) => {
                rejected.push(c);
                None
            }
        }
    };

    let (red, choice, seeds) = match c_hint {
        Some(c) => match try_forward(c, &mut rejected) {
            Some((red, seeds)) => (red, CChoice::Given, Some(seeds)),
            None => {
                return Err(Error::Construction(format!(
                    "c = {c} is not admissible (a2/a1 = {ratio:?}, or a degenerate seed denominator)"
                )))
            }
        },
        None => {
            let minimal = reduce_backward(table, table.last_step())
                .ok()
                .filter(|red| !b1_vanishes(red.lambda[0], a1, a2));
            match minimal {
                Some(red) => (red, CChoice::Minimal, None),
                None => {
                    let mut found = None;
                    'scan: for cand in scan_candidates(ratio) {
                        for c in [cand, cand + SCAN_NUDGE] {
                            if let Some(hit) = try_forward(c, &mut rejected) {
                                found = Some(hit);
                                break 'scan;
                            }
                        }
                    }
                    match found {
                        Some((red, seeds)) => (red, CChoice::Scanned, Some(seeds)),
                        None => {
                            return Err(Error::Construction(format!(
                                "no admissible c in the scan list; rejected {rejected:?}"
                            )))
                        }
                    }
                }
            }
        }
    };
    assemble(table, red, choice, seeds, rejected, a1, a2, n_max)
}

/// Copy of `table` truncated at `n_max`.
fn table_prefix(table: &CoefficientTable, n_max: usize) -> CoefficientTable {
    CoefficientTable {
        first_step: table.first_step,
        rows: table.rows[..n_max + 1 - table.first_step].to_vec(),
    }
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    table: &CoefficientTable,
    red: Reduction,
    choice: CChoice,
    seeds: Option<Seeds>,
    rejected: Vec<f64>,
    a1: f64,
    a2: f64,
    n_max: usize,
) -> Result<AuxiliaryDecomposition> {
    let res = identity_residuals(table, &red, n_max);
    let lambda = red.lambda[..n_max].to_vec();
    let mu: Vec<f64> = (2..=n_max).map(|n| red.inner.get(n - 1, 0)).collect();
    if let Some(k) = mu.iter().position(|m| *m == 0.0 || !m.is_finite()) {
        return Err(Error::Construction(format!("μ vanishes at n={}", k + 2)));
    }
    let c = lambda[0];
    Ok(AuxiliaryDecomposition {
        c,
        choice,
        a1,
        a2,
        lambda,
        mu,
        f: (2..=n_max).map(|n| table.get(n, 0)).collect(),
        g: (2..=n_max).map(|n| table.get(n, 1)).collect(),
        b1: a2 - c * a1,
        forbidden_hits: rejected.len(),
        rejected,
        residuals: [res[0], res[1]],
        seeds: seeds.as_ref().map(AuxSeeds::from),
        source_hash: String::new(),
    })
}

impl AuxiliaryDecomposition {
    pub fn horizon(&self) -> usize {
        self.lambda.len()
    }

    pub fn lambda(&self, n: usize) -> f64 {
        self.lambda[n - 1]
    }

    pub fn mu(&self, n: usize) -> f64 {
        self.mu[n - 2]
    }

    pub fn f(&self, n: usize) -> f64 {
        self.f[n - 2]
    }

    pub fn g(&self, n: usize) -> f64 {
        self.g[n - 2]
    }

    pub fn identities_hold(&self) -> bool {
        self.residuals.iter().all(|r| *r < IDENTITY_TOLERANCE)
    }

    /// `a_1 ..= a_{N+1}` from the closed form, accumulated in one pass.
    pub fn closed_form_prefix(&self) -> Result<Vec<SciNum>> {
        let n_max = self.horizon();
        let mut out = Vec::with_capacity(n_max + 1);
        out.push(SciNum::from_real(self.a1)?);
        let mut a = SciNum::from_real(self.a2)?;
        out.push(a);
        let mut b = SciNum::from_real(self.b1)?;
        for n in 2..=n_max {
            b = b.mul_real(self.mu(n)).map_err(|e| e.at_step(n))?;
            a = a.mul_real(self.lambda(n)).and_then(|x| x.add(b)).map_err(|e| e.at_step(n))?;
            out.push(a);
        }
        Ok(out)
    }

    /// `a_{n+1}` from the closed form, `2 ≤ n ≤ N`.
    pub fn closed_form_eval(&self, n: usize) -> Result<SciNum> {
        if n < 2 || n > self.horizon() {
            return Err(Error::Domain(format!("closed form defined for 2 ≤ n ≤ {}", self.horizon())));
        }
        Ok(self.closed_form_prefix()?[n])
    }

    /// `r(n) = b_1 Π_{i=2}^{n} μ(i)` for `n = 1..=N`.
    pub fn main_term(&self) -> Result<Vec<SciNum>> {
        let mut r = SciNum::from_real(self.b1)?;
        let mut out = Vec::with_capacity(self.horizon());
        out.push(r);
        for n in 2..=self.horizon() {
            r = r.mul_real(self.mu(n)).map_err(|e| e.at_step(n))?;
            out.push(r);
        }
        Ok(out)
    }

    pub fn main_term_sequence(&self) -> Result<SequenceSample> {
        let meta = SampleMetadata::plain(
            content_hash(&format!("main-term:{}:{:?}", self.source_hash, self.c)),
            0,
        );
        Ok(SequenceSample::from_values(self.main_term()?, meta))
    }

    /// `p(n) = λ(n)/μ(n)` for `n = 2..=N`.
    pub fn p(&self) -> Vec<f64> {
        (2..=self.horizon()).map(|n| self.lambda(n) / self.mu(n)).collect()
    }
}

/// `q(2) = |p(2)|`, `q(n+1) = |p(n+1)| (1 + q(n))`.
pub fn q_recursion(p: &[f64]) -> Vec<f64> {
    let mut q = Vec::with_capacity(p.len());
    let mut prev = 0.0;
    for (k, pk) in p.iter().enumerate() {
        prev = if k == 0 { pk.abs() } else { pk.abs() * (1.0 + prev) };
        q.push(prev);
    }
    q
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    /// `p(n)`, `q(n)`, `g(n)/f(n)^2` for `n = 2..=N`.
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub gf2: Vec<f64>,
    pub f_nondecreasing: bool,
    /// `|a_{n+1} - r(n)| / |r(n)|` for `n = 2..=N-1`.
    pub rel_error: Vec<f64>,
    /// `log10|r(n)| mod 1` for `n = 1..=N`, zero terms omitted.
    pub main_term_benford_input: Vec<f64>,
    pub q_tail_max: f64,
    pub gf2_tail_max: f64,
    pub rel_error_tail_nonincreasing: bool,
    pub main_term_dominates: bool,
}

/// Last `ceil(len/5)` entries.
pub fn tail<T>(v: &[T]) -> &[T] {
    let k = v.len().div_ceil(5);
    &v[v.len() - k..]
}

impl DominanceReport {
    /// Smallest `n` from which `rel_error` decreases strictly to the end.
    pub fn strictly_decreasing_from(&self) -> Option<usize> {
        let e = &self.rel_error;
        if e.is_empty() {
            return None;
        }
        let mut start = e.len() - 1;
        while start > 0 && e[start] < e[start - 1] {
            start -= 1;
        }
        Some(start + 2)
    }
}

/// Compares the sequence with the main term over the shared horizon.
pub fn dominance_check(dec: &AuxiliaryDecomposition, seq: &SequenceSample) -> Result<DominanceReport> {
    let n_max = dec.horizon().min(seq.len());
    let p = dec.p();
    let q = q_recursion(&p);
    let gf2: Vec<f64> = (2..=dec.horizon()).map(|n| dec.g(n) / (dec.f(n) * dec.f(n))).collect();
    let f_nondecreasing = dec.f.windows(2).all(|w| w[1] >= w[0]);
    let r = dec.main_term()?;
    let rel_error: Vec<f64> = (2..n_max)
        .map(|n| {
            let rn = r[n - 1];
            match seq.term(n + 1).sub(rn).and_then(|d| d.div(rn.abs())) {
                Ok(x) => x.abs().to_f64(),
                Err(_) => f64::INFINITY,
            }
        })
        .collect();
    let main_term_benford_input = r.iter().filter_map(|x| x.log10_frac().ok()).collect();
    let q_tail_max = tail(&q).iter().fold(0.0f64, |m, x| m.max(*x));
    let gf2_tail_max = tail(&gf2).iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let rel_error_tail_nonincreasing = tail(&rel_error).windows(2).all(|w| w[1] <= w[0]);
    Ok(DominanceReport {
        main_term_dominates: q_tail_max < 1e-3 && rel_error_tail_nonincreasing,
        p,
        q,
        gf2,
        f_nondecreasing,
        rel_error,
        main_term_benford_input,
        q_tail_max,
        gf2_tail_max,
        rel_error_tail_nonincreasing,
    })
}

/// Which product range the approximate depth-3 closed form uses for `b_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProductRange {
    /// `Π_{j=2}^{k-1} μ_2(j)`
    ToKMinusOne,
    /// `Π_{j=2}^{k} μ_2(j)`
    ToK,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prefactor {
    /// `b_1 = a_2 - λ(1) a_1`
    B1,
    /// `b_2 - μ_1(1) b_1`, the first term of the inner b-sequence split.
    InnerB1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Depth3Reduction {
    pub c: f64,
    pub d: f64,
    pub choice: CChoice,
    pub a: [f64; 3],
    /// `λ(1..=N)`.
    pub lambda: Vec<f64>,
    /// `g_1(m)`, `g_2(m)` for `m = 2..=N-1`.
    pub g1: Vec<f64>,
    pub g2: Vec<f64>,
    /// `f_1, f_2, f_3` at `n = 3..=N`.
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    pub f3: Vec<f64>,
    /// `b_1, b_2`.
    pub b: [f64; 2],
    /// Decomposition of `b_{m+1} = g_1(m) b_m + g_2(m) b_{m-1}` into μ_1, μ_2.
    pub inner: AuxiliaryDecomposition,
    pub residuals: [f64; 3],
    pub f2_over_f1_sq: Vec<f64>,
    pub f3_over_f1_cube: Vec<f64>,
    pub forbidden_hits: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seeds: Option<AuxSeeds>,
}

fn depth3_from(
    table: &CoefficientTable,
    red: Reduction,
    choice: CChoice,
    seeds: Option<Seeds>,
    hits: usize,
    a: [f64; 3],
    n_max: usize,
) -> Result<Depth3Reduction> {
    let res = identity_residuals(table, &red, n_max);
    let lam = &red.lambda;
    let b1 = a[1] - lam[0] * a[0];
    let b2 = a[2] - lam[1] * a[1];
    let inner_top = red.inner.last_step();
    let inner = build_from_table(&red.inner, b1, b2, (n_max - 1).min(inner_top), None)?;
    let f = |n: usize, j: usize| table.get(n, j);
    Ok(Depth3Reduction {
        c: lam[0] * lam[1],
        d: lam[0],
        choice,
        a,
        lambda: lam[..n_max].to_vec(),
        g1: (2..n_max).map(|m| red.inner.get(m, 0)).collect(),
        g2: (2..n_max).map(|m| red.inner.get(m, 1)).collect(),
        f1: (3..=n_max).map(|n| f(n, 0)).collect(),
        f2: (3..=n_max).map(|n| f(n, 1)).collect(),
        f3: (3..=n_max).map(|n| f(n, 2)).collect(),
        b: [b1, b2],
        inner,
        residuals: [res[0], res[1], res[2]],
        f2_over_f1_sq: (3..=n_max).map(|n| f(n, 1) / f(n, 0).powi(2)).collect(),
        f3_over_f1_cube: (3..=n_max).map(|n| f(n, 2) / f(n, 0).powi(3)).collect(),
        forbidden_hits: hits,
        seeds: seeds.as_ref().map(AuxSeeds::from),
    })
}

/// Reduces a depth-3 linear spec to λ plus a depth-2 recurrence for b and
/// decomposes that one in turn. `cd_hint` fixes `(c, d)` with
/// `λ(1) = d`, `λ(2) = c/d`.
pub fn reduce_depth3(spec: &RecurrenceSpec, cd_hint: Option<(f64, f64)>) -> Result<Depth3Reduction> {
    if spec.kind != RecurrenceKind::Linear || spec.depth() != 3 {
        return Err(Error::InvalidSpec("depth-3 reduction needs a depth-3 linear spec".into()));
    }
    let n_max = spec.horizon;
    if n_max < 4 {
        return Err(Error::InvalidSpec("horizon must be at least 4".into()));
    }
    let a: Vec<f64> = spec.initial.iter().map(SciNum::to_f64).collect();
    let a = [a[0], a[1], a[2]];
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("initial values must be representable as reals".into()));
    }
    let top = n_max + 2 * pad(n_max);
    let table = spec.realize(3, top)?;
    check_nonvanishing(&table, n_max)?;

    let forward = |c: f64, d: f64| -> Option<(Reduction, Seeds)> {
        if d == 0.0 || c == 0.0 {
            return None;
        }
        let params = [1.0, d, c];
        let prefix = table_prefix(&table, top);
        let seeds = Seeds::new(&table_prefix(&table, n_max), n_max);
        if seeds.first_degenerate(&params).is_some() {
            return None;
        }
        let red = reduce_forward(&prefix, &[d, c / d], top).ok()?;
        let b1 = a[1] - d * a[0];
        let b2 = a[2] - (c / d) * a[1];
        if b1 == 0.0 && b2 == 0.0 {
            return None;
        }
        Some((red, seeds))
    };

    let mut hits = 0;
    if let Some((c, d)) = cd_hint {
        let (red, seeds) = forward(c, d)
            .ok_or_else(|| Error::Construction(format!("(c, d) = ({c}, {d}) is not admissible")))?;
        return depth3_from(&table, red, CChoice::Given, Some(seeds), 0, a, n_max);
    }
    if let Ok(red) = reduce_backward(&table, top) {
        if let Ok(out) = depth3_from(&table, red, CChoice::Minimal, None, 0, a, n_max) {
            return Ok(out);
        }
    }
    let grid: Vec<f64> = scan_candidates(None).into_iter().take(8).collect();
    for &d in &grid {
        for &c in &grid {
            for (cc, dd) in [(c, d), (c + SCAN_NUDGE, d + SCAN_NUDGE)] {
                if let Some((red, seeds)) = forward(cc, dd) {
                    if let Ok(out) = depth3_from(&table, red, CChoice::Scanned, Some(seeds), hits, a, n_max) {
                        return Ok(out);
                    }
                }
                hits += 1;
            }
        }
    }
    Err(Error::Construction(format!("no admissible (c, d) among {hits} grid candidates")))
}

impl Depth3Reduction {
    pub fn horizon(&self) -> usize {
        self.lambda.len()
    }

    /// `b_1 ..= b_{N-1}` from the inner closed form.
    pub fn b_sequence(&self) -> Result<Vec<SciNum>> {
        let mut b = self.inner.closed_form_prefix()?;
        b.truncate(self.horizon() - 1);
        Ok(b)
    }

    fn accumulate(&self, b: &[SciNum]) -> Result<Vec<SciNum>> {
        let mut out = Vec::with_capacity(self.horizon());
        out.push(SciNum::from_real(self.a[0])?);
        let mut acc = SciNum::from_real(self.a[1])?;
        out.push(acc);
        for n in 2..self.horizon() {
            acc = acc
                .mul_real(self.lambda[n - 1])
                .and_then(|x| x.add(b[n - 1]))
                .map_err(|e| e.at_step(n))?;
            out.push(acc);
        }
        Ok(out)
    }

    /// `a_1 ..= a_N` from λ and the exact inner closed form for `b`.
    pub fn closed_form(&self) -> Result<Vec<SciNum>> {
        self.accumulate(&self.b_sequence()?)
    }

    /// `a_1 ..= a_N` with `b_k` replaced by `P · Π μ_2(j)` over the chosen
    /// range.
    pub fn closed_form_main_term(&self, range: ProductRange, prefactor: Prefactor) -> Result<Vec<SciNum>> {
        let p = match prefactor {
            Prefactor::B1 => self.b[0],
            Prefactor::InnerB1 => self.inner.b1,
        };
        let mut b = Vec::with_capacity(self.horizon());
        let mut prod = SciNum::from_real(p)?;
        // prod = P Π_{j=2}^{k-1} μ_2(j) at the top of each iteration.
        for k in 1..self.horizon() {
            if k >= 3 {
                prod = prod.mul_real(self.inner.mu(k - 1))?;
            }
            let term = match range {
                ProductRange::ToKMinusOne => prod,
                ProductRange::ToK if k >= 2 && k <= self.inner.horizon() => prod.mul_real(self.inner.mu(k))?,
                ProductRange::ToK => prod,
            };
            b.push(term);
        }
        self.accumulate(&b)
    }

    pub fn identities_hold(&self) -> bool {
        self.residuals.iter().all(|r| *r < IDENTITY_TOLERANCE)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConventionRow {
    pub range: ProductRange,
    pub prefactor: Prefactor,
    pub max_rel_error: f64,
    pub final_rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConventionReport {
    pub upto: usize,
    pub exact_max_rel_error: f64,
    pub rows: Vec<ConventionRow>,
    pub best: ConventionRow,
}

/// Compares the exact and main-term closed forms with direct iteration
/// for `n ≤ upto`.
pub fn closed_form_convention_check(red: &Depth3Reduction, seq: &SequenceSample, upto: usize) -> Result<ConventionReport> {
    let upto = upto.min(red.horizon()).min(seq.len());
    let errs = |vals: &[SciNum]| -> Vec<f64> { (1..=upto).map(|n| seq.term(n).rel_diff(&vals[n - 1])).collect() };
    let exact = errs(&red.closed_form()?);
    let mut rows = Vec::new();
    for range in [ProductRange::ToKMinusOne, ProductRange::ToK] {
        for prefactor in [Prefactor::B1, Prefactor::InnerB1] {
            let e = errs(&red.closed_form_main_term(range, prefactor)?);
            // The first terms are exact by construction; judge on n ≥ 4.
            rows.push(ConventionRow {
                range,
                prefactor,
                max_rel_error: e[3.min(e.len())..].iter().fold(0.0, |m: f64, x| m.max(*x)),
                final_rel_error: *e.last().unwrap_or(&0.0),
            });
        }
    }
    let best = rows
        .iter()
        .min_by(|a, b| a.final_rel_error.total_cmp(&b.final_rel_error))
        .cloned()
        .ok_or_else(|| Error::Empty("no conventions".into()))?;
    Ok(ConventionReport {
        upto,
        exact_max_rel_error: exact.iter().fold(0.0, |m: f64, x| m.max(*x)),
        rows,
        best,
    })
}

/// Repeated backward reduction of a depth-L spec down to depth 1. Level `i`
/// reduces depth `L - i`; the last level's inner table holds the final
/// multiplier `μ`.
pub fn reduce_chain(spec: &RecurrenceSpec) -> Result<Vec<Reduction>> {
    if spec.kind != RecurrenceKind::Linear || spec.depth() < 2 {
        return Err(Error::InvalidSpec("repeated reduction needs a linear spec of depth ≥ 2".into()));
    }
    let l = spec.depth();
    let top = spec.horizon + l * pad(spec.horizon);
    let mut table = spec.realize(l, top)?;
    let mut levels = Vec::with_capacity(l - 1);
    while table.depth() >= 2 {
        let red = reduce_backward(&table, table.last_step())?;
        table = red.inner.clone();
        levels.push(red);
    }
    Ok(levels)
}
