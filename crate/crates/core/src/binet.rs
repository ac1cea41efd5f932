//! Constant-coefficient recurrences solved through their characteristic
//! roots.
//!
//! For `a_{n+1} = c_1 a_n + … + c_L a_{n-L+1}` the characteristic polynomial
//! is `r^L - c_1 r^{L-1} - … - c_L`, and every solution has the form
//! `a_n = Σ_k (Σ_j γ_{k,j} n^{m_k - j}) r_k^n`.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scinum::SciNum;

pub type C64 = Complex<f64>;

pub const MAX_DEGREE: usize = 10;
/// Roots closer than this (relative to `max(1, |r|)`) are one repeated root.
pub const CLUSTER_RADIUS: f64 = 1e-8;
pub const MAX_CONDITION: f64 = 1e12;
pub const MODULUS_GAP: f64 = 1e-8;
pub const GAMMA_FLOOR: f64 = 1e-10;
pub const IMAG_TOLERANCE: f64 = 1e-6;
pub const MAX_DENOMINATOR: i64 = 1_000_000;
pub const RATIONAL_TOLERANCE: f64 = 1e-12;

/// Candidate roots this close are checked for being a single repeated root.
const CANDIDATE_RADIUS: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharPoly {
    /// `c_1 … c_L`.
    pub coeffs: Vec<f64>,
}

impl CharPoly {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidSpec("characteristic polynomial needs L ≥ 1".into()));
        }
        if coeffs.len() > MAX_DEGREE {
            return Err(Error::Unsupported(format!(
                "degree {} exceeds the supported maximum {MAX_DEGREE}",
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("non-finite coefficient".into()));
        }
        if coeffs[coeffs.len() - 1] == 0.0 {
            return Err(Error::InvalidSpec("c_L must be nonzero".into()));
        }
        Ok(CharPoly { coeffs })
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    /// Monic coefficients in descending powers: `[1, -c_1, …, -c_L]`.
    pub fn monic(&self) -> Vec<f64> {
        std::iter::once(1.0).chain(self.coeffs.iter().map(|c| -c)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Root {
    pub value: C64,
    pub multiplicity: usize,
}

/// Taylor coefficients `t_j = p^{(j)}(z) / j!` together with a bound on their
/// rounding error.
fn taylor(monic: &[f64], z: C64) -> (Vec<C64>, Vec<f64>) {
    let deg = monic.len() - 1;
    let mut t: Vec<C64> = monic.iter().map(|&a| C64::new(a, 0.0)).collect();
    let mut bound: Vec<f64> = monic.iter().map(|a| a.abs()).collect();
    let az = z.norm();
    let mut out = Vec::with_capacity(deg + 1);
    let mut err = Vec::with_capacity(deg + 1);
    for j in 0..=deg {
        let len = deg + 1 - j;
        for i in 1..len {
            t[i] = t[i] + t[i - 1] * z;
            bound[i] += bound[i - 1] * az;
        }
        out.push(t[len - 1]);
        err.push(4.0 * (deg as f64 + 1.0) * f64::EPSILON * bound[len - 1]);
    }
    (out, err)
}

fn polish(monic: &[f64], mut z: C64, order: usize) -> C64 {
    let mut best = taylor(monic, z).0[order].norm();
    for _ in 0..60 {
        let (t, _) = taylor(monic, z);
        let d = t[order + 1] * (order as f64 + 1.0);
        if d.norm() == 0.0 {
            break;
        }
        let next = z - t[order] / d;
        let val = taylor(monic, next).0[order].norm();
        if !(val < best) {
            break;
        }
        best = val;
        z = next;
        if best == 0.0 {
            break;
        }
    }
    z
}

/// Width of the root cluster of multiplicity `m` centred at `z`, estimated
/// from the lower Taylor coefficients with rounding noise removed.
fn cluster_spread(monic: &[f64], z: C64, m: usize) -> f64 {
    let (t, err) = taylor(monic, z);
    let lead = t[m].norm();
    if lead == 0.0 {
        return f64::INFINITY;
    }
    (0..m)
        .map(|j| {
            let v = (t[j].norm() - err[j]).max(0.0);
            (v / lead).powf(1.0 / (m - j) as f64)
        })
        .fold(0.0, f64::max)
}

fn snap_real(z: C64) -> C64 {
    if z.im.abs() <= 64.0 * f64::EPSILON * z.norm().max(1.0) {
        C64::new(z.re, 0.0)
    } else {
        z
    }
}

/// Aberth–Ehrlich simultaneous iteration, used when the eigen-solve does not
/// converge.
fn aberth(monic: &[f64]) -> Vec<C64> {
    let deg = monic.len() - 1;
    let radius = 1.0 + monic[1..].iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let mut z: Vec<C64> = (0..deg)
        .map(|k| C64::from_polar(radius * 0.5, 0.4 + std::f64::consts::TAU * k as f64 / deg as f64))
        .collect();
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for i in 0..deg {
            let (t, _) = taylor(monic, z[i]);
            if t[0].norm() == 0.0 {
                continue;
            }
            let ratio = t[0] / t[1];
            let repulse: C64 = (0..deg)
                .filter(|&j| j != i)
                .map(|j| C64::new(1.0, 0.0) / (z[i] - z[j]))
                .sum();
            let step = ratio / (C64::new(1.0, 0.0) - ratio * repulse);
            if step.re.is_finite() && step.im.is_finite() {
                z[i] -= step;
                moved = moved.max(step.norm() / z[i].norm().max(1.0));
            }
        }
        if moved < 1e-15 {
            break;
        }
    }
    z
}

/// All roots with multiplicity, sorted by decreasing modulus then by argument.
pub fn char_roots(p: &CharPoly) -> Result<Vec<Root>> {
    let monic = p.monic();
    let deg = p.degree();
    let raw: Vec<C64> = if deg == 1 {
        vec![C64::new(p.coeffs[0], 0.0)]
    } else {
        let mut m = DMatrix::<f64>::zeros(deg, deg);
        for (j, c) in p.coeffs.iter().enumerate() {
            m[(0, j)] = *c;
        }
        for i in 1..deg {
            m[(i, i - 1)] = 1.0;
        }
        match Schur::try_new(m, f64::EPSILON, 10_000) {
            Some(schur) => schur.complex_eigenvalues().iter().copied().collect(),
            None => aberth(&monic),
        }
    };
    if raw.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Construction("eigenvalue solver failed".into()));
    }
    let polished: Vec<C64> = raw.iter().map(|&z| polish(&monic, z, 0)).collect();

    // Single-linkage grouping of nearby candidates.
    let mut group: Vec<usize> = (0..deg).collect();
    for i in 0..deg {
        for j in 0..i {
            let scale = polished[i].norm().max(1.0);
            if (polished[i] - polished[j]).norm() < CANDIDATE_RADIUS * scale {
                let (gi, gj) = (group[i], group[j]);
                for g in group.iter_mut() {
                    if *g == gi {
                        *g = gj;
                    }
                }
            }
        }
    }
    let mut roots = Vec::new();
    let mut seen = vec![false; deg];
    for i in 0..deg {
        if seen[i] {
            continue;
        }
        let members: Vec<usize> = (0..deg).filter(|&k| group[k] == group[i]).collect();
        for &k in &members {
            seen[k] = true;
        }
        let m = members.len();
        if m == 1 {
            roots.push(Root {
                value: snap_real(polished[i]),
                multiplicity: 1,
            });
            continue;
        }
        let centroid = members.iter().map(|&k| raw[k]).sum::<C64>() / m as f64;
        let centre = polish(&monic, centroid, m - 1);
        if cluster_spread(&monic, centre, m) <= CLUSTER_RADIUS * centre.norm().max(1.0) {
            roots.push(Root {
                value: snap_real(centre),
                multiplicity: m,
            });
        } else {
            roots.extend(members.iter().map(|&k| Root {
                value: snap_real(polished[k]),
                multiplicity: 1,
            }));
        }
    }
    roots.sort_by(|a, b| {
        b.value
            .norm()
            .total_cmp(&a.value.norm())
            .then(b.value.im.total_cmp(&a.value.im))
    });
    Ok(roots)
}

/// Expands `Π (r - r_k)^{m_k}` back into `c_1 … c_L`.
pub fn expand_roots(roots: &[Root]) -> Vec<C64> {
    let mut poly = vec![C64::new(1.0, 0.0)];
    for root in roots {
        for _ in 0..root.multiplicity {
            let mut next = vec![C64::new(0.0, 0.0); poly.len() + 1];
            for (i, a) in poly.iter().enumerate() {
                next[i] += a;
                next[i + 1] -= a * root.value;
            }
            poly = next;
        }
    }
    poly[1..].iter().map(|a| -a).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinetSolution {
    pub poly: CharPoly,
    pub roots: Vec<Root>,
    /// `gammas[k][j]` multiplies `n^{m_k - 1 - j} r_k^n`.
    pub gammas: Vec<Vec<C64>>,
    pub dominant_index: Option<usize>,
    pub condition: f64,
    /// Largest relative mismatch at the initial conditions.
    pub initial_residual: f64,
}

/// Column `(k, j)` of the confluent Vandermonde system at index `n`.
fn basis(root: C64, power: usize, n: usize) -> C64 {
    root.powu(n as u32) * (n as f64).powi(power as i32)
}

pub fn binet_coeffs(poly: &CharPoly, roots: &[Root], initial: &[SciNum]) -> Result<BinetSolution> {
    let l = poly.degree();
    if initial.len() != l {
        return Err(Error::InvalidSpec(format!("need {l} initial values, got {}", initial.len())));
    }
    if roots.iter().map(|r| r.multiplicity).sum::<usize>() != l {
        return Err(Error::InvalidSpec("root multiplicities do not sum to the degree".into()));
    }
    let rhs: Vec<f64> = initial.iter().map(SciNum::to_f64).collect();
    if rhs.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("initial values must be representable as reals".into()));
    }
    let rhs_scale = rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut columns: Vec<(usize, usize)> = Vec::with_capacity(l);
    for (k, root) in roots.iter().enumerate() {
        for j in 0..root.multiplicity {
            columns.push((k, root.multiplicity - 1 - j));
        }
    }
    let mut a = DMatrix::<C64>::zeros(l, l);
    let mut col_scale = vec![1.0; l];
    for (c, &(k, power)) in columns.iter().enumerate() {
        for n in 1..=l {
            a[(n - 1, c)] = basis(roots[k].value, power, n);
        }
        let s = a.column(c).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        if s > 0.0 {
            col_scale[c] = s;
            a.column_mut(c).iter_mut().for_each(|z| *z /= s);
        }
    }
    let sv = a.clone().singular_values();
    let (smax, smin) = sv
        .iter()
        .fold((0.0f64, f64::INFINITY), |(hi, lo), &s| (hi.max(s), lo.min(s)));
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned(condition));
    }
    let mut gammas: Vec<Vec<C64>> = roots.iter().map(|r| vec![C64::new(0.0, 0.0); r.multiplicity]).collect();
    if rhs_scale > 0.0 {
        let b = DVector::from_iterator(l, rhs.iter().map(|v| C64::new(v / rhs_scale, 0.0)));
        let x = a
            .lu()
            .solve(&b)
            .ok_or(Error::IllConditioned(f64::INFINITY))?;
        for (c, &(k, power)) in columns.iter().enumerate() {
            let m = roots[k].multiplicity;
            gammas[k][m - 1 - power] = x[c] / col_scale[c] * rhs_scale;
        }
    }
    let dominant_index = match roots {
        [] => None,
        [_] => Some(0),
        [first, second, ..] => {
            let (m1, m2) = (first.value.norm(), second.value.norm());
            ((m1 - m2) > MODULUS_GAP * m1).then_some(0)
        }
    };
    let mut sol = BinetSolution {
        poly: poly.clone(),
        roots: roots.to_vec(),
        gammas,
        dominant_index,
        condition,
        initial_residual: 0.0,
    };
    sol.initial_residual = (1..=l)
        .map(|n| {
            let got = sol.reconstruct(n).to_f64();
            let want = rhs[n - 1];
            (got - want).abs() / want.abs().max(rhs_scale * 1e-300).max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max);
    Ok(sol)
}

/// Roots and coefficients for `a_{n+1} = c_1 a_n + … + c_L a_{n-L+1}` from
/// `a_1 … a_L`.
pub fn solve(coeffs: &[f64], initial: &[SciNum]) -> Result<BinetSolution> {
    let poly = CharPoly::new(coeffs.to_vec())?;
    let roots = char_roots(&poly)?;
    binet_coeffs(&poly, &roots, initial)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reconstruction {
    pub value: SciNum,
    /// `|Im| / |Re|` of the complex sum.
    pub imag_ratio: f64,
    /// `log10` of the largest single term, a scale for cancellation.
    pub term_log10: f64,
}

impl Reconstruction {
    pub fn flagged(&self) -> bool {
        !(self.imag_ratio < IMAG_TOLERANCE)
    }
}

impl BinetSolution {
    pub fn reconstruct(&self, n: usize) -> SciNum {
        self.reconstruct_detail(n).value
    }

    /// Evaluates the closed form in log-magnitude / phase form so that large
    /// `n` cannot overflow.
    pub fn reconstruct_detail(&self, n: usize) -> Reconstruction {
        let nf = n as f64;
        let mut terms: Vec<(f64, f64)> = Vec::new();
        for (root, gam) in self.roots.iter().zip(&self.gammas) {
            let m = root.multiplicity;
            let g: C64 = gam
                .iter()
                .enumerate()
                .map(|(j, c)| c * nf.powi((m - 1 - j) as i32))
                .sum();
            if g.norm() == 0.0 || root.value.norm() == 0.0 {
                continue;
            }
            let mag = g.norm().log10() + nf * root.value.norm().log10();
            let phase = g.arg() + nf * root.value.arg();
            terms.push((mag, phase));
        }
        let top = terms.iter().map(|t| t.0).fold(f64::NEG_INFINITY, f64::max);
        if terms.is_empty() {
            return Reconstruction {
                value: SciNum::ZERO,
                imag_ratio: 0.0,
                term_log10: f64::NEG_INFINITY,
            };
        }
        let sum: C64 = terms
            .iter()
            .map(|&(mag, phase)| C64::from_polar(10f64.powf(mag - top), phase))
            .sum();
        let imag_ratio = if sum.re == 0.0 {
            if sum.im == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            sum.im.abs() / sum.re.abs()
        };
        let value = if sum.re == 0.0 {
            SciNum::ZERO
        } else {
            SciNum::from_log10(sum.re.signum() as i8, top + sum.re.abs().log10()).unwrap_or(SciNum::ZERO)
        };
        Reconstruction {
            value,
            imag_ratio,
            term_log10: top,
        }
    }

    pub fn dominant(&self) -> Option<&Root> {
        self.dominant_index.map(|k| &self.roots[k])
    }

    pub fn predict_benford(&self) -> BenfordVerdict {
        predict_benford(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictStatus {
    Benford,
    NotBenford,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckOutcome {
    Pass,
    Fail,
    Ambiguous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub check: String,
    pub outcome: CheckOutcome,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Irrationality {
    Rational { p: i64, q: i64 },
    PresumedIrrational { max_denominator: i64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenfordVerdict {
    pub status: VerdictStatus,
    pub reasons: Vec<Condition>,
    pub log10_r1: Option<f64>,
    pub irrationality: Option<Irrationality>,
}

/// Continued-fraction scan for a small-denominator rational close to `x`.
///
/// A convergent `p/q` counts only if it is within [`RATIONAL_TOLERANCE`] and
/// also `q² |x - p/q| < 1e-4`. Every real has convergents with error below
/// `1/q²`, so the tolerance alone would flag most irrationals once `q` nears
/// `10^6`; the second test asks for an approximation far better than that
/// generic bound. This is a heuristic, not a proof.
pub fn irrationality_scan(x: f64) -> Irrationality {
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut y = x;
    for _ in 0..64 {
        let a = y.floor();
        if a.abs() > 1e15 {
            break;
        }
        let a = a as i128;
        (h0, h1) = (h1, a * h1 + h0);
        (k0, k1) = (k1, a * k1 + k0);
        if k1 > MAX_DENOMINATOR as i128 {
            break;
        }
        let err = (x - h1 as f64 / k1 as f64).abs();
        let q = k1 as f64;
        if err < RATIONAL_TOLERANCE && q * q * err < 1e-4 {
            return Irrationality::Rational {
                p: h1 as i64,
                q: k1 as i64,
            };
        }
        let frac = y - y.floor();
        if frac == 0.0 {
            return Irrationality::Rational {
                p: h1 as i64,
                q: k1 as i64,
            };
        }
        y = 1.0 / frac;
    }
    Irrationality::PresumedIrrational {
        max_denominator: MAX_DENOMINATOR,
    }
}

fn condition(check: &str, outcome: CheckOutcome, detail: String) -> Condition {
    Condition {
        check: check.to_string(),
        outcome,
        detail,
    }
}

/// Checks, in order: a unique real dominant root of multiplicity one, its
/// modulus differs from 1, its coefficient is nonzero, and `log10|r_1|`
/// has no small-denominator rational approximation.
pub fn predict_benford(sol: &BinetSolution) -> BenfordVerdict {
    use CheckOutcome::*;
    let mut reasons = Vec::new();
    let inconclusive = |reasons| BenfordVerdict {
        status: VerdictStatus::Inconclusive,
        reasons,
        log10_r1: None,
        irrationality: None,
    };
    let Some(k) = sol.dominant_index else {
        reasons.push(condition(
            "distinct_dominant",
            Ambiguous,
            "no root of strictly maximal modulus".into(),
        ));
        return inconclusive(reasons);
    };
    let root = sol.roots[k];
    if root.value.im != 0.0 {
        reasons.push(condition(
            "distinct_dominant",
            Ambiguous,
            format!("dominant root {} is complex", root.value),
        ));
        return inconclusive(reasons);
    }
    if root.multiplicity > 1 {
        reasons.push(condition(
            "distinct_dominant",
            Fail,
            format!("dominant root has multiplicity {}", root.multiplicity),
        ));
        return inconclusive(reasons);
    }
    reasons.push(condition(
        "distinct_dominant",
        Pass,
        format!("r1 = {}", root.value.re),
    ));
    let modulus = root.value.norm();
    if (modulus - 1.0).abs() <= MODULUS_GAP {
        reasons.push(condition("modulus_not_one", Ambiguous, format!("|r1| = {modulus}")));
        return inconclusive(reasons);
    }
    reasons.push(condition("modulus_not_one", Pass, format!("|r1| = {modulus}")));
    let biggest = sol
        .gammas
        .iter()
        .flatten()
        .fold(0.0f64, |m, g| m.max(g.norm()));
    let g1 = sol.gammas[k][0].norm();
    if !(g1 > GAMMA_FLOOR * biggest) {
        reasons.push(condition(
            "gamma_nonzero",
            Fail,
            format!("|gamma1| = {g1:e} relative to max {biggest:e}"),
        ));
        return inconclusive(reasons);
    }
    reasons.push(condition("gamma_nonzero", Pass, format!("|gamma1| = {g1:e}")));
    let x = modulus.log10();
    let scan = irrationality_scan(x);
    let status = match scan {
        Irrationality::Rational { p, q } => {
            reasons.push(condition(
                "log10_r1_irrational",
                Fail,
                if q == 1 {
                    format!("log10|r1| = {p} rational")
                } else {
                    format!("log10|r1| = {p}/{q} rational")
                },
            ));
            VerdictStatus::NotBenford
        }
        Irrationality::PresumedIrrational { max_denominator } => {
            reasons.push(condition(
                "log10_r1_irrational",
                Pass,
                format!("no rational with denominator ≤ {max_denominator}, presumed irrational"),
            ));
            VerdictStatus::Benford
        }
    };
    BenfordVerdict {
        status,
        reasons,
        log10_r1: Some(x),
        irrationality: Some(scan),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sci(v: &[f64]) -> Vec<SciNum> {
        v.iter().map(|&x| SciNum::from_real(x).unwrap()).collect()
    }

    fn roots_of(c: &[f64]) -> Vec<Root> {
        char_roots(&CharPoly::new(c.to_vec()).unwrap()).unwrap()
    }

    #[test]
    fn golden_ratio_roots() {
        let r = roots_of(&[1.0, 1.0]);
        let s5 = 5f64.sqrt();
        assert_eq!(r.len(), 2);
        assert!((r[0].value.re - (1.0 + s5) / 2.0).abs() < 1e-14);
        assert!((r[1].value.re - (1.0 - s5) / 2.0).abs() < 1e-14);
        assert!(r.iter().all(|x| x.value.im == 0.0 && x.multiplicity == 1));
    }

    #[test]
    fn double_and_triple_roots_merge() {
        let r = roots_of(&[2.0, -1.0]);
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].multiplicity, 2);
        assert!((r[0].value.re - 1.0).abs() < 1e-10);

        // (r - 2)^3 = r^3 - 6r^2 + 12r - 8
        let r = roots_of(&[6.0, -12.0, 8.0]);
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].multiplicity, 3);
        assert!((r[0].value.re - 2.0).abs() < 1e-10);

        // (r - 1)^2 (r + 3) = r^3 + r^2 - 5r + 3
        let r = roots_of(&[-1.0, 5.0, -3.0]);
        assert_eq!(r.len(), 2);
        assert_eq!((r[0].multiplicity, r[1].multiplicity), (1, 2));
        assert!((r[0].value.re + 3.0).abs() < 1e-10);
    }

    #[test]
    fn close_but_distinct_roots_stay_apart() {
        // (r - 1)(r - 1.001)
        let r = roots_of(&[2.001, -1.001]);
        assert_eq!(r.len(), 2);
        assert!((r[0].value.re - 1.001).abs() < 1e-10);
        assert!((r[1].value.re - 1.0).abs() < 1e-10);
    }

    #[test]
    fn cubic_with_integer_roots() {
        // r^3 - 6r^2 + 11r - 6
        let r = roots_of(&[6.0, -11.0, 6.0]);
        let vals: Vec<f64> = r.iter().map(|x| x.value.re).collect();
        for (got, want) in vals.iter().zip([3.0, 2.0, 1.0]) {
            assert!((got - want).abs() < 1e-10, "{vals:?}");
        }
    }

    #[test]
    fn complex_pair_and_expansion() {
        // r^2 + 1 after sign convention: c = [0, -1]
        let r = roots_of(&[0.0, -1.0]);
        assert_eq!(r.len(), 2);
        assert!((r[0].value.im.abs() - 1.0).abs() < 1e-14);
        let back = expand_roots(&r);
        assert!((back[0].re).abs() < 1e-12 && (back[1].re + 1.0).abs() < 1e-12);
    }

    #[test]
    fn degree_cap_and_validation() {
        assert!(matches!(CharPoly::new(vec![1.0; 11]), Err(Error::Unsupported(_))));
        assert!(CharPoly::new(vec![1.0, 0.0]).is_err());
        assert!(CharPoly::new(vec![]).is_err());
    }

    #[test]
    fn fibonacci_gammas_and_terms() {
        let sol = solve(&[1.0, 1.0], &sci(&[1.0, 1.0])).unwrap();
        let s5 = 5f64.sqrt();
        assert!((sol.gammas[0][0].re - 1.0 / s5).abs() < 1e-12);
        assert!((sol.gammas[1][0].re + 1.0 / s5).abs() < 1e-12);
        assert_eq!(sol.reconstruct(10).to_f64().round(), 55.0);
        let f100 = sol.reconstruct(100);
        assert_eq!(f100.exponent(), 20);
        assert!((f100.mantissa() - 3.542_248_481_792_619_2).abs() < 1e-10);
        assert!((sol.reconstruct(1).to_f64() - 1.0).abs() < 1e-12);
        assert!(sol.initial_residual < 1e-9);
    }

    #[test]
    fn single_root_and_repeated_root_gammas() {
        let sol = solve(&[3.0], &sci(&[6.0])).unwrap();
        assert!((sol.gammas[0][0].re - 2.0).abs() < 1e-12);

        let sol = solve(&[2.0, -1.0], &sci(&[1.0, 3.0])).unwrap();
        assert!((sol.gammas[0][0].re - 2.0).abs() < 1e-9);
        assert!((sol.gammas[0][1].re + 1.0).abs() < 1e-9);
        assert!((sol.reconstruct(3).to_f64() - 5.0).abs() < 1e-9);
    }

    #[test]
    fn complex_roots_reconstruct_real_values() {
        // a_{n+1} = a_n - a_{n-1}: period 6
        let sol = solve(&[1.0, -1.0], &sci(&[1.0, 2.0])).unwrap();
        let want = [1.0, 2.0, 1.0, -1.0, -2.0, -1.0, 1.0, 2.0];
        for (n, w) in want.iter().enumerate() {
            let r = sol.reconstruct_detail(n + 1);
            assert!((r.value.to_f64() - w).abs() < 1e-10);
            assert!(!r.flagged());
        }
        assert_eq!(sol.predict_benford().status, VerdictStatus::Inconclusive);
    }

    #[test]
    fn verdict_examples() {
        let fib = solve(&[1.0, 1.0], &sci(&[1.0, 1.0])).unwrap().predict_benford();
        assert_eq!(fib.status, VerdictStatus::Benford);

        let hundred = solve(&[100.0], &sci(&[1.0])).unwrap().predict_benford();
        assert_eq!(hundred.status, VerdictStatus::NotBenford);
        assert_eq!(hundred.irrationality, Some(Irrationality::Rational { p: 2, q: 1 }));
        assert!(hundred.reasons.last().unwrap().detail.ends_with("= 2 rational"));

        let two = solve(&[2.0], &sci(&[1.0])).unwrap().predict_benford();
        assert_eq!(two.status, VerdictStatus::Benford);

        let unit = solve(&[1.0], &sci(&[1.0])).unwrap().predict_benford();
        assert_eq!(unit.status, VerdictStatus::Inconclusive);

        let double = solve(&[4.0, -4.0], &sci(&[1.0, 1.0])).unwrap().predict_benford();
        assert_eq!(double.status, VerdictStatus::Inconclusive);
    }

    #[test]
    fn vanishing_dominant_coefficient_is_inconclusive() {
        // Initial values on the (1 - √5)/2 branch only.
        let psi = (1.0 - 5f64.sqrt()) / 2.0;
        let v = solve(&[1.0, 1.0], &sci(&[psi, psi * psi])).unwrap().predict_benford();
        assert_eq!(v.status, VerdictStatus::Inconclusive);
        assert_eq!(v.reasons.last().unwrap().check, "gamma_nonzero");
    }

    #[test]
    fn verdict_is_scale_invariant() {
        for scale in [1e-30, -7.0, 3e25] {
            let a = solve(&[1.0, 1.0], &sci(&[1.0, 1.0])).unwrap().predict_benford();
            let b = solve(&[1.0, 1.0], &sci(&[scale, scale])).unwrap().predict_benford();
            assert_eq!(a.status, b.status);
            let checks = |v: &BenfordVerdict| v.reasons.iter().map(|r| (r.check.clone(), r.outcome)).collect::<Vec<_>>();
            assert_eq!(checks(&a), checks(&b));
        }
    }

    #[test]
    fn irrationality_scan_cases() {
        assert_eq!(irrationality_scan(2.0), Irrationality::Rational { p: 2, q: 1 });
        assert_eq!(irrationality_scan(5.0 / 7.0), Irrationality::Rational { p: 5, q: 7 });
        assert_eq!(
            irrationality_scan(123457.0 / 999983.0),
            Irrationality::Rational { p: 123457, q: 999983 }
        );
        for x in [2f64.log10(), 3f64.log10(), ((1.0 + 5f64.sqrt()) / 2.0).log10()] {
            assert!(matches!(irrationality_scan(x), Irrationality::PresumedIrrational { .. }));
        }
    }

    #[test]
    fn ill_conditioned_system_is_reported() {
        let roots = [
            Root { value: C64::new(1.0, 0.0), multiplicity: 1 },
            Root { value: C64::new(1.0 + 1e-14, 0.0), multiplicity: 1 },
        ];
        let poly = CharPoly::new(vec![2.0, -1.0]).unwrap();
        assert!(matches!(
            binet_coeffs(&poly, &roots, &sci(&[1.0, 2.0])),
            Err(Error::IllConditioned(_))
        ));
    }
}
