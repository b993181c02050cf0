//! Finite differences, d-monotone and log-d-monotone sequences, the
//! truncated Hausdorff moment problem, and exchangeable binary laws.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::mixtures::{beta_moment, MixingLawSpec};
use crate::numerics::{binomial, det_lu, solve_linear};
use crate::sampling::{draw, RowSampler, SampleMatrix};

pub const MONOTONE_TOL: f64 = 1e-12;
pub const HANKEL_TOL: f64 = 1e-9;

/// A finite sequence `(b_0, …, b_d)` with `b_0 = 1` and non-negative entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct MonotoneSequence {
    values: Vec<f64>,
}

impl MonotoneSequence {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.first() != Some(&1.0) {
            return invalid("sequence must start with b_0 = 1");
        }
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return invalid(format!("entry {i} is not a finite non-negative real"));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn d(&self) -> usize {
        self.values.len() - 1
    }
}

impl TryFrom<Vec<f64>> for MonotoneSequence {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<MonotoneSequence> for Vec<f64> {
    fn from(s: MonotoneSequence) -> Self {
        s.values
    }
}

/// `∇^j v_k = Σ_i (−1)^i C(j,i) v_{k+i}` on a raw slice.
pub fn nabla(v: &[f64], j: usize, k: usize) -> f64 {
    (0..=j)
        .map(|i| {
            let t = binomial(j, i) * v[k + i];
            if i % 2 == 0 {
                t
            } else {
                -t
            }
        })
        .sum()
}

pub fn backward_difference(seq: &MonotoneSequence, j: usize, k: usize) -> Result<f64> {
    if j + k > seq.d() {
        return Err(Error::IndexOutOfRange { sum: j + k, d: seq.d() });
    }
    Ok(nabla(&seq.values, j, k))
}

pub(crate) fn d_monotone_slice(v: &[f64]) -> bool {
    let d = v.len() - 1;
    (0..=d).all(|k| nabla(v, d - k, k) >= -MONOTONE_TOL)
}

pub fn is_d_monotone(seq: &MonotoneSequence) -> bool {
    d_monotone_slice(&seq.values)
}

pub fn is_log_d_monotone(seq: &MonotoneSequence) -> Result<bool> {
    if let Some(i) = seq.values.iter().position(|v| *v <= 0.0) {
        return Err(Error::NonPositiveEntry(i));
    }
    let logs: Vec<f64> = seq.values.iter().map(|v| v.ln()).collect();
    let d = seq.d();
    Ok((0..d).all(|k| nabla(&logs, d - k, k) >= -MONOTONE_TOL))
}

/// Outcome of the truncated Hausdorff moment problem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtendibilityVerdict {
    pub extendible: bool,
    pub hankel_values: Vec<f64>,
    /// Smallest determinant after dividing by `scale^size`, where `scale` is
    /// the largest absolute matrix entry.
    pub min_hankel: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<MixingLawSpec>,
}

fn hankel(n: usize, f: impl Fn(usize, usize) -> f64) -> Vec<Vec<f64>> {
    (0..n).map(|i| (0..n).map(|j| f(i, j)).collect()).collect()
}

/// The lower/upper Hankel matrices for index `n` (`Ĥ_n`, `Ȟ_n`).
fn hankel_pair(b: &[f64], n: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let l = n / 2;
    let nb = |i: usize| b[i] - b[i + 1];
    if n % 2 == 0 {
        (hankel(l + 1, |i, j| b[i + j]), hankel(l, |i, j| nb(i + j + 1)))
    } else {
        (hankel(l + 1, |i, j| b[i + j + 1]), hankel(l + 1, |i, j| nb(i + j)))
    }
}

fn scaled_det(m: Vec<Vec<f64>>) -> (f64, f64) {
    let size = m.len() as i32;
    let scale = m.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    let det = det_lu(m);
    let rel = if scale > 0.0 { det / scale.powi(size) } else { 0.0 };
    (det, rel)
}

/// Decides whether `(b_0, …, b_d)` is the moment sequence of a law on `[0,1]`
/// through the Hankel determinants `Ĥ_n, Ȟ_n`, `n = 1, …, d`.
pub fn hausdorff_extendible(seq: &MonotoneSequence) -> Result<ExtendibilityVerdict> {
    if !is_d_monotone(seq) {
        return Err(Error::NotDMonotone);
    }
    let b = &seq.values;
    let mut hankel_values = Vec::with_capacity(2 * seq.d());
    let mut min_hankel = f64::INFINITY;
    for n in 1..=seq.d() {
        let (lo, up) = hankel_pair(b, n);
        for m in [lo, up] {
            let (det, rel) = scaled_det(m);
            hankel_values.push(det);
            min_hankel = min_hankel.min(rel);
        }
    }
    if hankel_values.is_empty() {
        min_hankel = 0.0;
    }
    let extendible = min_hankel >= -HANKEL_TOL;
    let witness = if extendible && seq.d() <= 4 { moment_witness(b) } else { None };
    Ok(ExtendibilityVerdict { extendible, hankel_values, min_hankel, witness })
}

/// Nodes and weights of the `n`-point Gauss rule of the moment functional `c`.
fn gauss_rule(c: &[f64], n: usize) -> Option<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Some((vec![], vec![]));
    }
    let a = solve_linear(hankel(n, |i, j| c[i + j]), (0..n).map(|i| -c[i + n]).collect())?;
    let nodes = match n {
        1 => vec![-a[0]],
        2 => {
            let (p, q) = (a[1], a[0]);
            let disc = p * p - 4.0 * q;
            if disc < -1e-12 {
                return None;
            }
            let r = disc.max(0.0).sqrt();
            vec![(-p - r) / 2.0, (-p + r) / 2.0]
        }
        _ => return None,
    };
    let vander = hankel(n, |i, j| nodes[j].powi(i as i32));
    let w = solve_linear(vander, c[..n].to_vec())?;
    Some((nodes, w))
}

fn accept_witness(b: &[f64], atoms: Vec<f64>, weights: Vec<f64>) -> Option<MixingLawSpec> {
    if atoms.iter().any(|a| !(-1e-9..=1.0 + 1e-9).contains(a)) || weights.iter().any(|w| *w < -1e-9) {
        return None;
    }
    let mut atoms: Vec<f64> = atoms.into_iter().map(|a| a.clamp(0.0, 1.0)).collect();
    let mut weights: Vec<f64> = weights.into_iter().map(|w| w.max(0.0)).collect();
    let keep: Vec<bool> = weights.iter().map(|w| *w > 1e-14).collect();
    atoms = atoms.iter().zip(&keep).filter(|(_, k)| **k).map(|(a, _)| *a).collect();
    weights = weights.iter().zip(&keep).filter(|(_, k)| **k).map(|(w, _)| *w).collect();
    let s: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= s);
    for (k, bk) in b.iter().enumerate() {
        let mk: f64 = atoms.iter().zip(&weights).map(|(a, w)| w * a.powi(k as i32)).sum();
        if (mk - bk).abs() > 1e-8 {
            return None;
        }
    }
    Some(MixingLawSpec::FiniteDiscrete { atoms, weights })
}

/// A finite discrete law on `[0,1]` with moments `b` (`d ≤ 4`).
fn moment_witness(b: &[f64]) -> Option<MixingLawSpec> {
    let d = b.len() - 1;
    if d == 0 {
        return Some(MixingLawSpec::PointMass { m: 1.0 });
    }
    if d % 2 == 1 {
        for n in (1..=(d + 1) / 2).rev() {
            if let Some((x, w)) = gauss_rule(b, n) {
                if let Some(law) = accept_witness(b, x, w) {
                    return Some(law);
                }
            }
        }
        None
    } else {
        let c: Vec<f64> = (0..d).map(|k| b[k] - b[k + 1]).collect();
        for n in (0..=d / 2).rev() {
            let Some((x, w)) = gauss_rule(&c, n) else { continue };
            let mut atoms = Vec::new();
            let mut weights = Vec::new();
            let mut ok = true;
            for (xi, wi) in x.iter().zip(&w) {
                if *xi >= 1.0 - 1e-12 {
                    ok = false;
                    break;
                }
                atoms.push(*xi);
                weights.push(wi / (1.0 - xi));
            }
            if !ok {
                continue;
            }
            atoms.push(1.0);
            weights.push(1.0 - weights.iter().sum::<f64>());
            if let Some(law) = accept_witness(b, atoms, weights) {
                return Some(law);
            }
        }
        None
    }
}

/// Law of an exchangeable binary vector: `p_k` is the probability of any one
/// fixed pattern with `k` ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct BinaryExchangeableLaw {
    p: Vec<f64>,
}

impl BinaryExchangeableLaw {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return invalid("need p_0..p_d");
        }
        if p.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return invalid("pattern probabilities must be non-negative");
        }
        let d = p.len() - 1;
        let total: f64 = p.iter().enumerate().map(|(k, v)| binomial(d, k) * v).sum();
        if (total - 1.0).abs() > 1e-12 {
            return invalid(format!("pattern probabilities sum to {total}, not 1"));
        }
        Ok(Self { p })
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn d(&self) -> usize {
        self.p.len() - 1
    }
}

impl TryFrom<Vec<f64>> for BinaryExchangeableLaw {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<BinaryExchangeableLaw> for Vec<f64> {
    fn from(l: BinaryExchangeableLaw) -> Self {
        l.p
    }
}

/// `b_k = Σ_i C(d−k, i) p_{d−i}`: the probability that `k` fixed coordinates are all one.
pub fn b_from_p(law: &BinaryExchangeableLaw) -> MonotoneSequence {
    let d = law.d();
    let mut values: Vec<f64> = (0..=d)
        .map(|k| (0..=d - k).map(|i| binomial(d - k, i) * law.p[d - i]).sum())
        .collect();
    values[0] = 1.0;
    MonotoneSequence { values }
}

/// `p_k = ∇^{d−k} b_k`.
pub fn p_from_b(seq: &MonotoneSequence) -> Result<BinaryExchangeableLaw> {
    if !is_d_monotone(seq) {
        return Err(Error::NotDMonotone);
    }
    let d = seq.d();
    let p = (0..=d).map(|k| nabla(&seq.values, d - k, k).max(0.0)).collect();
    Ok(BinaryExchangeableLaw { p })
}

/// `b_k = E[M^k]` for `M` on `[0,1]`.
pub fn moment_sequence(m: &MixingLawSpec, d: usize) -> Result<MonotoneSequence> {
    m.validate()?;
    if !m.on_unit_interval() {
        return Err(Error::UnsupportedLaw(format!("{} is not supported on [0,1]", m.name())));
    }
    let values = match m {
        MixingLawSpec::Beta { p, q } => (0..=d).map(|k| beta_moment(*p, *q, k)).collect(),
        _ => (0..=d).map(|k| m.moment(k as u32)).collect::<Result<Vec<_>>>()?,
    };
    MonotoneSequence::new(values)
}

/// `(1{U_1 ≤ M}, …, 1{U_d ≤ M})`.
#[derive(Debug, Clone)]
pub struct BinaryMixture {
    pub m: MixingLawSpec,
    pub d: usize,
}

impl RowSampler for BinaryMixture {
    fn dim(&self) -> usize {
        self.d
    }
    fn fill_row(&self, rng: &mut dyn RngCore, out: &mut [f64]) -> Result<()> {
        let m = self.m.sample(rng);
        for x in out.iter_mut() {
            *x = f64::from(u8::from(rng.random::<f64>() < m));
        }
        Ok(())
    }
    fn describe(&self) -> String {
        format!("binary(M={}, d={})", self.m, self.d)
    }
}

pub fn sample_binary_mixture<R: RngCore>(m: &MixingLawSpec, d: usize, n: usize, rng: &mut R) -> Result<SampleMatrix> {
    m.validate()?;
    if !m.on_unit_interval() {
        return Err(Error::UnsupportedLaw(format!("{} is not supported on [0,1]", m.name())));
    }
    if d == 0 {
        return invalid("dimension must be at least 1");
    }
    draw(&BinaryMixture { m: m.clone(), d }, n, rng)
}

/// Pólya urn with `r` red and `b` blue balls; each drawn ball is returned with
/// one more of its colour. Red is coded as 1.
#[derive(Debug, Clone)]
pub struct PolyaUrn {
    pub r: u32,
    pub b: u32,
    pub d: usize,
}

impl RowSampler for PolyaUrn {
    fn dim(&self) -> usize {
        self.d
    }
    fn fill_row(&self, rng: &mut dyn RngCore, out: &mut [f64]) -> Result<()> {
        let (mut red, mut blue) = (f64::from(self.r), f64::from(self.b));
        for x in out.iter_mut() {
            if rng.random::<f64>() * (red + blue) < red {
                *x = 1.0;
                red += 1.0;
            } else {
                *x = 0.0;
                blue += 1.0;
            }
        }
        Ok(())
    }
    fn describe(&self) -> String {
        format!("polya(r={}, b={}, d={})", self.r, self.b, self.d)
    }
}

pub fn sample_polya_urn<R: RngCore>(r: u32, b: u32, d: usize, n: usize, rng: &mut R) -> Result<SampleMatrix> {
    if r == 0 || b == 0 {
        return invalid("the urn needs at least one ball of each colour");
    }
    if d == 0 {
        return invalid("dimension must be at least 1");
    }
    draw(&PolyaUrn { r, b, d }, n, rng)
}

/// Probability of a fixed urn pattern with `ones` ones among `d` draws.
pub fn polya_pattern_probability(r: u32, b: u32, d: usize, ones: usize) -> f64 {
    let (r, b) = (f64::from(r), f64::from(b));
    let up: f64 = (0..ones).map(|k| r + k as f64).product();
    let down: f64 = (0..d - ones).map(|k| b + k as f64).product();
    let all: f64 = (0..d).map(|k| r + b + k as f64).product();
    up * down / all
}

/// Index `Σ x_k 2^k` of a binary row, used for pattern tallies.
pub fn pattern_index(row: &[f64]) -> usize {
    row.iter().enumerate().filter(|(_, v)| **v > 0.5).map(|(k, _)| 1 << k).sum()
}
