//! Marshall–Olkin (continuous) and wide-sense geometric (discrete) laws with
//! the lack-of-memory property.

use std::collections::BTreeMap;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::mixtures::{beta_moment, MixingLawSpec};
use crate::moments::{hausdorff_extendible, is_d_monotone, is_log_d_monotone, ExtendibilityVerdict, MonotoneSequence};
use crate::numerics::binomial;
use crate::sampling::{draw, unit_exp, RowSampler, SampleMatrix};

pub const SHOCK_DIM_CAP: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    Continuous,
    Discrete,
}

/// The sequence `(b_0, …, b_d)` parameterizing an exchangeable law with the
/// lack-of-memory property.
#[derive(Debug, Clone, PartialEq)]
pub struct LomParameterSeq {
    b: MonotoneSequence,
    flavor: Flavor,
}

impl LomParameterSeq {
    pub fn new(b: MonotoneSequence, flavor: Flavor) -> Result<Self> {
        match flavor {
            Flavor::Continuous => {
                if !is_log_d_monotone(&b)? {
                    return invalid("Marshall-Olkin parameters must be log-d-monotone");
                }
            }
            Flavor::Discrete => {
                if !is_d_monotone(&b) {
                    return invalid("geometric parameters must be d-monotone");
                }
            }
        }
        Ok(Self { b, flavor })
    }

    pub fn b(&self) -> &MonotoneSequence {
        &self.b
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn d(&self) -> usize {
        self.b.d()
    }
}

fn sorted_asc(x: &[f64]) -> Vec<f64> {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// `∏_k b_k^{x_[d−k+1] − x_[d−k]}` with ascending order statistics, `x_[0] = 0`.
fn lom_survival(b: &[f64], x: &[f64]) -> Result<f64> {
    let d = b.len() - 1;
    if x.len() != d {
        return invalid(format!("point has {} coordinates, model has {d}", x.len()));
    }
    if x.iter().any(|v| v.is_nan() || *v < 0.0) {
        return invalid("survival arguments must be non-negative");
    }
    let s = sorted_asc(x);
    let mut out = 1.0;
    for k in 1..=d {
        let hi = s[d - k];
        let lo = if k == d { 0.0 } else { s[d - k - 1] };
        let e = hi - lo;
        if e > 0.0 {
            out *= b[k].powf(e);
        }
    }
    Ok(out)
}

pub fn mo_survival(params: &LomParameterSeq, x: &[f64]) -> Result<f64> {
    if params.flavor != Flavor::Continuous {
        return invalid("mo_survival needs a continuous-flavor parameter sequence");
    }
    lom_survival(params.b.values(), x)
}

pub fn geo_survival(params: &LomParameterSeq, nvec: &[u64]) -> Result<f64> {
    if params.flavor != Flavor::Discrete {
        return invalid("geo_survival needs a discrete-flavor parameter sequence");
    }
    let x: Vec<f64> = nvec.iter().map(|v| *v as f64).collect();
    lom_survival(params.b.values(), &x)
}

/// Shock intensities (Marshall–Olkin) or per-step subset probabilities
/// (geometric), either per cardinality or per explicit subset. Subset keys are
/// comma-separated 1-based indices such as `"1,3"`; `""` is the empty set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShockRateSpec {
    /// `λ_1, …, λ_d`: every subset of size `m` fires at rate `λ_m`.
    CardinalityRates(Vec<f64>),
    /// `p_0, …, p_d`: every subset of size `m` is drawn with probability `p_m`.
    CardinalityProbs(Vec<f64>),
    Subsets(BTreeMap<String, f64>),
}

fn parse_subset(key: &str, d: usize) -> Result<u32> {
    let mut mask = 0u32;
    for part in key.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let i: usize = part.parse().map_err(|_| Error::InvalidParameter(format!("bad subset key {key:?}")))?;
        if i == 0 || i > d {
            return invalid(format!("subset index {i} outside 1..={d}"));
        }
        mask |= 1 << (i - 1);
    }
    Ok(mask)
}

impl ShockRateSpec {
    /// Dimension implied by a cardinality spec.
    pub fn implied_dim(&self) -> Option<usize> {
        match self {
            Self::CardinalityRates(l) => Some(l.len()),
            Self::CardinalityProbs(p) => p.len().checked_sub(1),
            Self::Subsets(_) => None,
        }
    }

    /// `(subset mask, value)` pairs with positive value.
    pub fn subset_values(&self, d: usize) -> Result<Vec<(u32, f64)>> {
        if d == 0 {
            return invalid("dimension must be at least 1");
        }
        if d > SHOCK_DIM_CAP {
            return Err(Error::DimensionCap { d, cap: SHOCK_DIM_CAP });
        }
        if let Some(dd) = self.implied_dim() {
            if dd != d {
                return invalid(format!("spec has dimension {dd}, expected {d}"));
            }
        }
        let mut out = Vec::new();
        match self {
            Self::CardinalityRates(l) | Self::CardinalityProbs(l) => {
                let offset = usize::from(matches!(self, Self::CardinalityRates(_)));
                let start = u32::from(offset == 1);
                for mask in start..(1u32 << d) {
                    let v = l[mask.count_ones() as usize - offset];
                    if v > 0.0 {
                        out.push((mask, v));
                    }
                }
            }
            Self::Subsets(map) => {
                for (k, v) in map {
                    let mask = parse_subset(k, d)?;
                    if *v > 0.0 {
                        out.push((mask, *v));
                    }
                }
                out.sort_by_key(|(m, _)| *m);
                if out.windows(2).any(|w| w[0].0 == w[1].0) {
                    return invalid("duplicate subset keys");
                }
            }
        }
        let vals: Vec<f64> = match self {
            Self::Subsets(m) => m.values().copied().collect(),
            Self::CardinalityRates(l) | Self::CardinalityProbs(l) => l.clone(),
        };
        if vals.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return invalid("rates and probabilities must be finite and non-negative");
        }
        Ok(out)
    }

    /// Per-cardinality values, failing unless equal-size subsets share a value.
    fn per_cardinality(&self, d: usize, with_empty: bool) -> Result<Vec<f64>> {
        let pairs = self.subset_values(d)?;
        let lo = usize::from(!with_empty);
        let mut vals: Vec<Option<f64>> = vec![None; d + 1];
        let mut count = vec![0usize; d + 1];
        for (mask, v) in &pairs {
            let m = mask.count_ones() as usize;
            if m < lo {
                continue;
            }
            count[m] += 1;
            match vals[m] {
                Some(w) if (w - v).abs() > 1e-12 * w.abs().max(1.0) => return Err(Error::NotExchangeable),
                _ => vals[m] = Some(*v),
            }
        }
        for m in lo..=d {
            if vals[m].is_some() && count[m] as f64 != binomial(d, m) {
                return Err(Error::NotExchangeable);
            }
        }
        Ok((lo..=d).map(|m| vals[m].unwrap_or(0.0)).collect())
    }

    pub fn exchangeable_rates(&self, d: usize) -> Result<Vec<f64>> {
        self.per_cardinality(d, false)
    }

    pub fn exchangeable_probs(&self, d: usize) -> Result<Vec<f64>> {
        self.per_cardinality(d, true)
    }
}

/// `b_k = ∏_{i=1}^k exp{−Σ_j C(d−i, j) λ_{j+1}}` from per-cardinality rates.
pub fn b_from_lambda(lam: &[f64]) -> Result<LomParameterSeq> {
    let d = lam.len();
    if d == 0 {
        return invalid("need at least one rate");
    }
    if lam.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return invalid("rates must be finite and non-negative");
    }
    if lam.iter().all(|v| *v == 0.0) {
        return invalid("all shock rates are zero");
    }
    let mut b = vec![1.0; d + 1];
    let mut acc = 0.0;
    for i in 1..=d {
        acc += (0..=d - i).map(|j| binomial(d - i, j) * lam[j]).sum::<f64>();
        b[i] = (-acc).exp();
    }
    LomParameterSeq::new(MonotoneSequence::new(b)?, Flavor::Continuous)
}

/// Inverse of [`b_from_lambda`].
pub fn lambda_from_b(params: &LomParameterSeq) -> Vec<f64> {
    let b = params.b.values();
    let d = params.d();
    let s: Vec<f64> = (0..d).map(|m| -(b[d - m] / b[d - m - 1]).ln()).collect();
    (0..d)
        .map(|m| {
            (0..=m)
                .map(|j| {
                    let t = binomial(m, j) * s[j];
                    if (m - j) % 2 == 0 {
                        t
                    } else {
                        -t
                    }
                })
                .sum()
        })
        .collect()
}

/// `b_k = Σ_i C(d−k, i) p_i` from per-cardinality step probabilities `p_0..p_d`.
pub fn b_from_p(p: &[f64]) -> Result<LomParameterSeq> {
    if p.len() < 2 {
        return invalid("need p_0..p_d with d >= 1");
    }
    let d = p.len() - 1;
    if p.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return invalid("probabilities must be non-negative");
    }
    let total: f64 = (0..=d).map(|m| binomial(d, m) * p[m]).sum();
    if (total - 1.0).abs() > 1e-12 {
        return invalid(format!("subset probabilities sum to {total}, not 1"));
    }
    let b: Vec<f64> = (0..=d).map(|k| (0..=d - k).map(|i| binomial(d - k, i) * p[i]).sum()).collect();
    if b[1] >= 1.0 {
        return invalid("some component is never hit");
    }
    let mut b = b;
    b[0] = 1.0;
    LomParameterSeq::new(MonotoneSequence::new(b)?, Flavor::Discrete)
}

/// Marshall–Olkin law from explicit shocks: `X_k = min{E_I : k ∈ I}`.
#[derive(Debug, Clone)]
pub struct MoShocks {
    d: usize,
    shocks: Vec<(u32, f64)>,
}

impl MoShocks {
    pub fn new(spec: &ShockRateSpec, d: usize) -> Result<Self> {
        let shocks = spec.subset_values(d)?;
        for k in 0..d {
            if !shocks.iter().any(|(m, _)| m & (1 << k) != 0) {
                return invalid(format!("component {} is never hit by a shock", k + 1));
            }
        }
        Ok(Self { d, shocks })
    }

    /// `exp(−Σ_I λ_I max_{k∈I} x_k)`.
    pub fn survival(&self, x: &[f64]) -> f64 {
        let s: f64 = self
            .shocks
            .iter()
            .map(|(mask, r)| {
                let top = (0..self.d).filter(|k| mask & (1 << k) != 0).map(|k| x[k]).fold(0.0f64, f64::max);
                r * top
            })
            .sum();
        (-s).exp()
    }
}

impl RowSampler for MoShocks {
    fn dim(&self) -> usize {
        self.d
    }
    fn fill_row(&self, rng: &mut dyn RngCore, out: &mut [f64]) -> Result<()> {
        out.fill(f64::INFINITY);
        for (mask, rate) in &self.shocks {
            let e = unit_exp(rng) / rate;
            for (k, x) in out.iter_mut().enumerate() {
                if mask & (1 << k) != 0 && e < *x {
                    *x = e;
                }
            }
        }
        Ok(())
    }
    fn describe(&self) -> String {
        format!("mo_shocks(d={}, shocks={})", self.d, self.shocks.len())
    }
}

pub fn sample_mo_shocks<R: RngCore>(spec: &ShockRateSpec, d: usize, n: usize, rng: &mut R) -> Result<SampleMatrix> {
    draw(&MoShocks::new(spec, d)?, n, rng)
}

/// Wide-sense geometric law: iid random subsets `S_1, S_2, …`; `X_k` is the
/// first step whose subset contains `k`.
#[derive(Debug, Clone)]
pub struct GeoShocks {
    d: usize,
    masks: Vec<u32>,
    cum: Vec<f64>,
    probs: Vec<f64>,
}

const GEO_STEP_CAP: u64 = 100_000_000;

impl GeoShocks {
    pub fn new(spec: &ShockRateSpec, d: usize) -> Result<Self> {
        let pairs = spec.subset_values(d)?;
        let total: f64 = pairs.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > 1e-12 {
            return invalid(format!("subset probabilities sum to {total}, not 1"));
        }
        for k in 0..d {
            if !pairs.iter().any(|(m, _)| m & (1 << k) != 0) {
                return invalid(format!("component {} is never hit", k + 1));
            }
        }
        let mut acc = 0.0;
        let cum = pairs.iter().map(|(_, p)| {
            acc += p;
            acc
        });
        let cum: Vec<f64> = cum.collect();
        Ok(Self { d, masks: pairs.iter().map(|p| p.0).collect(), probs: pairs.iter().map(|p| p.1).collect(), cum })
    }

    /// `∏_j q({k : n_k ≥ j})` with `q(A)` the probability that a step misses `A`.
    pub fn survival(&self, n: &[u64]) -> f64 {
        let mut levels: Vec<u64> = n.to_vec();
        levels.sort_unstable();
        levels.dedup();
        let mut out = 1.0;
        let mut prev = 0u64;
        for lv in levels {
            if lv == 0 {
                continue;
            }
            let a: u32 = (0..self.d).filter(|k| n[*k] >= lv).map(|k| 1u32 << k).sum();
            let q: f64 = self.masks.iter().zip(&self.probs).filter(|(m, _)| *m & a == 0).map(|(_, p)| p).sum();
            out *= q.powf((lv - prev) as f64);
            prev = lv;
        }
        out
    }
}

impl RowSampler for GeoShocks {
    fn dim(&self) -> usize {
        self.d
    }
    fn fill_row(&self, rng: &mut dyn RngCore, out: &mut [f64]) -> Result<()> {
        let full = (1u32 << self.d) - 1;
        let mut hit = 0u32;
        let last = *self.cum.last().unwrap_or(&1.0);
        for step in 1..=GEO_STEP_CAP {
            let u = rng.random::<f64>() * last;
            let i = self.cum.partition_point(|c| *c <= u).min(self.masks.len() - 1);
            let fresh = self.masks[i] & !hit;
            if fresh != 0 {
                for (k, x) in out.iter_mut().enumerate() {
                    if fresh & (1 << k) != 0 {
                        *x = step as f64;
                    }
                }
                hit |= fresh;
                if hit == full {
                    return Ok(());
                }
            }
        }
        Err(Error::TruncationOverflow(GEO_STEP_CAP as f64))
    }
    fn describe(&self) -> String {
        format!("geo_shocks(d={}, subsets={})", self.d, self.masks.len())
    }
}

pub fn sample_geo_shocks<R: RngCore>(spec: &ShockRateSpec, d: usize, n: usize, rng: &mut R) -> Result<SampleMatrix> {
    draw(&GeoShocks::new(spec, d)?, n, rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpAtom {
    pub size: f64,
    pub rate: f64,
}

/// Compound Poisson subordinator with drift and killing, Laplace exponent
/// `Ψ(x) = a·1{x>0} + μx + Σ_j β_j (1 − e^{−m_j x})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompoundPoissonSubordinatorSpec {
    #[serde(default)]
    pub drift: f64,
    #[serde(default)]
    pub kill: f64,
    #[serde(default)]
    pub jumps: Vec<JumpAtom>,
}

impl CompoundPoissonSubordinatorSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !ok(self.drift) || !ok(self.kill) {
            return invalid("drift and kill rate must be finite and non-negative");
        }
        if self.jumps.iter().any(|j| !(j.size > 0.0 && j.size.is_finite() && j.rate > 0.0 && j.rate.is_finite())) {
            return invalid("jump atoms need positive finite size and rate");
        }
        if self.drift == 0.0 && self.kill == 0.0 && self.jumps.is_empty() {
            return invalid("degenerate subordinator: no drift, jumps or killing");
        }
        Ok(())
    }

    pub fn psi(&self, x: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        self.kill + self.drift * x + self.jumps.iter().map(|j| -j.rate * (-j.size * x).exp_m1()).sum::<f64>()
    }

    /// Parameters `b_k = exp(−Ψ(k))` of the induced Marshall–Olkin law.
    pub fn b_sequence(&self, d: usize) -> Result<LomParameterSeq> {
        self.validate()?;
        let b = (0..=d).map(|k| (-self.psi(k as f64)).exp()).collect();
        LomParameterSeq::new(MonotoneSequence::new(b)?, Flavor::Continuous)
    }

    fn jump_rate(&self) -> f64 {
        self.jumps.iter().map(|j| j.rate).sum()
    }
}

/// First-passage times `X_k = inf{t ≥ 0 : Z_t > ε_k}` of a compound Poisson
/// subordinator, simulated event by event.
#[derive(Debug, Clone)]
pub struct MoCiid {
    pub sub: CompoundPoissonSubordinatorSpec,
    pub d: usize,
}

impl MoCiid {
    pub fn new(sub: CompoundPoissonSubordinatorSpec, d: usize) -> Result<Self> {
        sub.validate()?;
        if d == 0 {
            return invalid("dimension must be at least 1");
        }
        Ok(Self { sub, d })
    }
}

pub(crate) fn sorted_thresholds(rng: &mut dyn RngCore, d: usize) -> Vec<(f64, usize)> {
    let mut eps: Vec<(f64, usize)> = (0..d).map(|k| (unit_exp(rng), k)).collect();
    eps.sort_by(|a, b| a.0.total_cmp(&b.0));
    eps
}

impl RowSampler for MoCiid {
    fn dim(&self) -> usize {
        self.d
    }
    fn fill_row(&self, rng: &mut dyn RngCore, out: &mut [f64]) -> Result<()> {
        let eps = sorted_thresholds(rng, self.d);
        let beta = self.sub.jump_rate();
        let mu = self.sub.drift;
        let kill_t = if self.sub.kill > 0.0 { unit_exp(rng) / self.sub.kill } else { f64::INFINITY };
        let (mut t, mut z, mut idx) = (0.0, 0.0, 0usize);
        loop {
            let next_jump = if beta > 0.0 { t + unit_exp(rng) / beta } else { f64::INFINITY };
            let seg_end = next_jump.min(kill_t);
            if mu > 0.0 {
                while idx < self.d && z + mu * (seg_end - t) > eps[idx].0 {
                    out[eps[idx].1] = t + (eps[idx].0 - z) / mu;
                    idx += 1;
                }
            }
            if idx == self.d {
                return Ok(());
            }
            if seg_end == f64::INFINITY {
                break;
            }
            z += mu * (seg_end - t);
            t = seg_end;
            if t == kill_t {
                break;
            }
            let mut u = rng.random::<f64>() * beta;
            let mut size = self.sub.jumps.last().map_or(0.0, |j| j.size);
            for j in &self.sub.jumps {
                if u < j.rate {
                    size = j.size;
                    break;
                }
                u -= j.rate;
            }
            z += size;
            while idx < self.d && z > eps[idx].0 {
                out[eps[idx].1] = t;
                idx += 1;
            }
            if idx == self.d {
                return Ok(());
            }
        }
        for &(_, k) in &eps[idx..] {
            out[k] = t;
        }
        if kill_t == f64::INFINITY {
            for &(_, k) in &eps[idx..] {
                out[k] = f64::INFINITY;
            }
        }
        Ok(())
    }
    fn describe(&self) -> String {
        format!("mo_ciid(drift={}, kill={}, jumps={})", self.sub.drift, self.sub.kill, self.sub.jumps.len())
    }
}

pub fn sample_mo_ciid<R: RngCore>(sub: &CompoundPoissonSubordinatorSpec, d: usize, n: usize, rng: &mut R) -> Result<SampleMatrix> {
    draw(&MoCiid::new(sub.clone(), d)?, n, rng)
}

/// First-passage times of the random walk `Z_n = Y_1 + … + Y_n` over iid unit
/// exponential thresholds.
#[derive(Debug, Clone)]
pub struct GeoCiid {
    pub y: MixingLawSpec,
    pub d: usize,
    b1: f64,
}

impl GeoCiid {
    pub fn new(y: MixingLawSpec, d: usize) -> Result<Self> {
        y.validate()?;
        if d == 0 {
            return invalid("dimension must be at least 1");
        }
        let b1 = y.laplace(1.0);
        Ok(Self { y, d, b1 })
    }

    pub fn b_sequence(&self) -> Result<LomParameterSeq> {
        let b = (0..=self.d).map(|k| self.y.laplace(k as f64)).collect();
        LomParameterSeq::new(MonotoneSequence::new(b)?, Flavor::Discrete)
    }
}

impl RowSampler for GeoCiid {
    fn dim(&self) -> usize {
        self.d
    }
    fn fill_row(&self, rng: &mut dyn RngCore, out: &mut [f64]) -> Result<()> {
        let eps = sorted_thresholds(rng, self.d);
        let top = eps[self.d - 1].0;
        let cap = if self.b1 >= 1.0 { 0.0 } else { ((top + 27.7) / -self.b1.ln()).ceil().min(1e12) };
        let (mut z, mut idx, mut step) = (0.0, 0usize, 0.0);
        while idx < self.d && step < cap {
            step += 1.0;
            z += self.y.sample(rng);
            while idx < self.d && z > eps[idx].0 {
                out[eps[idx].1] = step;
                idx += 1;
            }
        }
        for &(_, k) in &eps[idx..] {
            out[k] = f64::INFINITY;
        }
        Ok(())
    }
    fn describe(&self) -> String {
        format!("geo_ciid(Y={}, d={})", self.y, self.d)
    }
}

pub fn sample_geo_ciid<R: RngCore>(y: &MixingLawSpec, d: usize, n: usize, rng: &mut R) -> Result<SampleMatrix> {
    draw(&GeoCiid::new(y.clone(), d)?, n, rng)
}

/// Whether the exchangeable law extends to a conditionally iid one of any
/// dimension.
pub fn is_ciid_extendible(params: &LomParameterSeq) -> Result<ExtendibilityVerdict> {
    match params.flavor {
        Flavor::Discrete => hausdorff_extendible(&params.b),
        Flavor::Continuous => {
            let b = params.b.values();
            let a: Vec<f64> = (0..params.d()).map(|i| -(b[i + 1] / b[i]).ln()).collect();
            if a.is_empty() || a[0] == 0.0 {
                return Ok(ExtendibilityVerdict {
                    extendible: true,
                    hankel_values: vec![],
                    min_hankel: 0.0,
                    witness: None,
                });
            }
            let norm: Vec<f64> = a.iter().map(|v| (v / a[0]).max(0.0)).collect();
            let mut norm = norm;
            norm[0] = 1.0;
            hausdorff_extendible(&MonotoneSequence::new(norm)?)
        }
    }
}

/// `b_k = Γ(p+k)Γ(p+q) / (Γ(p)Γ(p+q+k))`, discrete flavor.
pub fn beta_family_bseq(p: f64, q: f64, d: usize) -> Result<LomParameterSeq> {
    if !(p > 0.0 && q > 0.0 && p.is_finite() && q.is_finite()) {
        return invalid("beta family needs p, q > 0");
    }
    let b = (0..=d).map(|k| beta_moment(p, q, k)).collect();
    LomParameterSeq::new(MonotoneSequence::new(b)?, Flavor::Discrete)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cont(b: &[f64]) -> LomParameterSeq {
        LomParameterSeq::new(MonotoneSequence::new(b.to_vec()).unwrap(), Flavor::Continuous).unwrap()
    }

    #[test]
    fn survival_closed_forms() {
        let p = cont(&[1.0, 0.6, 0.4]);
        let v = mo_survival(&p, &[0.3, 1.1]).unwrap();
        assert!((v - 0.6f64.powf(0.8) * 0.4f64.powf(0.3)).abs() < 1e-15);
        assert_eq!(mo_survival(&p, &[0.0, 0.0]).unwrap(), 1.0);
        let q = 0.7f64;
        let iid = cont(&[1.0, q, q * q, q * q * q]);
        let x = [0.2, 1.5, 0.9];
        assert!((mo_survival(&iid, &x).unwrap() - q.powf(2.6)).abs() < 1e-14);
        assert!(mo_survival(&p, &[-1.0, 0.0]).is_err());
        let g = LomParameterSeq::new(MonotoneSequence::new(vec![1.0, 0.3]).unwrap(), Flavor::Discrete).unwrap();
        assert!((geo_survival(&g, &[4]).unwrap() - 0.3f64.powi(4)).abs() < 1e-15);
    }

    #[test]
    fn lambda_reparametrization() {
        let l2 = 0.8;
        let p = b_from_lambda(&[0.0, l2]).unwrap();
        let b = p.b().values();
        assert!((b[1] - (-l2).exp()).abs() < 1e-15);
        assert!((b[2] - (-l2).exp()).abs() < 1e-15);
        let one = b_from_lambda(&[0.4]).unwrap();
        assert!((one.b().values()[1] - (-0.4f64).exp()).abs() < 1e-15);
        let lam = [0.3, 0.2, 0.5];
        let back = lambda_from_b(&b_from_lambda(&lam).unwrap());
        for (x, y) in back.iter().zip(lam) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(b_from_lambda(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn brute_force_survival_matches_reparametrization() {
        let lam = [0.3, 0.2, 0.5];
        let shocks = MoShocks::new(&ShockRateSpec::CardinalityRates(lam.to_vec()), 3).unwrap();
        let p = b_from_lambda(&lam).unwrap();
        for x in [[0.1, 0.5, 0.2], [1.0, 0.0, 2.0], [0.3, 0.3, 0.3]] {
            assert!((shocks.survival(&x) - mo_survival(&p, &x).unwrap()).abs() < 1e-14);
        }
    }

    #[test]
    fn geometric_reparametrization() {
        let p = [0.1, 0.1, 0.1, 0.3];
        let seq = b_from_p(&p).unwrap();
        let g = GeoShocks::new(&ShockRateSpec::CardinalityProbs(p.to_vec()), 3).unwrap();
        for n in [[1u64, 2, 3], [0, 0, 4], [2, 2, 2]] {
            assert!((g.survival(&n) - geo_survival(&seq, &n).unwrap()).abs() < 1e-14);
        }
    }

    #[test]
    fn subset_specs() {
        let mut m = BTreeMap::new();
        m.insert("1,3".to_string(), 0.5);
        m.insert("2".to_string(), 1.0);
        let spec = ShockRateSpec::Subsets(m);
        assert!(matches!(spec.exchangeable_rates(3), Err(Error::NotExchangeable)));
        assert!(MoShocks::new(&spec, 3).is_ok());
        let mut e = BTreeMap::new();
        for k in ["1", "2", "1,2"] {
            e.insert(k.to_string(), 0.5);
        }
        assert_eq!(ShockRateSpec::Subsets(e).exchangeable_rates(2).unwrap(), vec![0.5, 0.5]);
        let json: ShockRateSpec = serde_json::from_str(r#"{"subsets":{"1,3":0.2,"2":0.1}}"#).unwrap();
        assert_eq!(json.subset_values(3).unwrap(), vec![(2, 0.1), (5, 0.2)]);
    }

    #[test]
    fn extendibility() {
        let sub = CompoundPoissonSubordinatorSpec { drift: 0.0, kill: 0.0, jumps: vec![] };
        assert!(sub.validate().is_err());
        let b: Vec<f64> = (0..=4).map(|k| 1.0 / (1.0 + k as f64)).collect();
        let gamma = cont(&b);
        assert!(is_ciid_extendible(&gamma).unwrap().extendible);
        let disc = LomParameterSeq::new(MonotoneSequence::new(vec![1.0, 0.5, 0.2]).unwrap(), Flavor::Discrete).unwrap();
        assert!(!is_ciid_extendible(&disc).unwrap().extendible);
        let bf = beta_family_bseq(1.0, 1.0, 3).unwrap();
        assert!((bf.b().values()[3] - 0.25).abs() < 1e-15);
        assert!(is_ciid_extendible(&bf).unwrap().extendible);
        assert_eq!(beta_family_bseq(2.0, 3.0, 0).unwrap().b().values(), &[1.0]);
    }
}
