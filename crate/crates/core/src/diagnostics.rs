//! Empirical checks of the necessary conditions for conditional iid-ness and
//! the Monte Carlo harness comparing samplers with closed forms.

use std::io::Write;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{invalid, Error, Result};
use crate::numerics::binomial;
use crate::sampling::{draw, draw_seeded, format_real, RowSampler, SampleMatrix};

/// Pass rule for every statistical comparison: `|emp − exact| ≤ 3·se + 1e-3`.
pub const SE_MULT: f64 = 3.0;
pub const ABS_FLOOR: f64 = 1e-3;

pub fn within_tolerance(empirical: f64, exact: f64, se: f64) -> bool {
    (empirical - exact).abs() <= SE_MULT * se + ABS_FLOOR
}

/// Standard quantile levels used for verification grids.
pub const GRID_LEVELS: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];

/// Five diagonal points `(q_i, …, q_i)` plus five staggered points whose
/// `k`-th coordinate is `q_{(j+k) mod 5}`, mapped through `quantile`.
pub fn quantile_grid<Q: Fn(f64) -> f64>(quantile: Q, d: usize) -> Vec<Vec<f64>> {
    let q: Vec<f64> = GRID_LEVELS.iter().map(|p| quantile(*p)).collect();
    let mut grid: Vec<Vec<f64>> = q.iter().map(|v| vec![*v; d]).collect();
    if d > 1 {
        for j in 0..q.len() {
            grid.push((0..d).map(|k| q[(j + k) % q.len()]).collect());
        }
    }
    grid
}

/// Empirical quantile (type 1, inverse of the empirical df) of sorted data.
pub fn empirical_quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let k = ((p * n as f64).ceil() as usize).clamp(1, n);
    sorted[k - 1]
}

/// Grid from pooled empirical marginal quantiles of a sample.
pub fn empirical_grid(samples: &SampleMatrix) -> Vec<Vec<f64>> {
    let mut pooled = samples.data.clone();
    pooled.sort_by(f64::total_cmp);
    quantile_grid(|p| empirical_quantile(&pooled, p), samples.d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

fn check_pairs(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return invalid("paired samples differ in length");
    }
    if x.len() < 2 {
        return invalid("need at least two pairs");
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return invalid("samples must not contain NaN");
    }
    Ok(())
}

/// Sum of `t(t−1)/2` over runs of equal values in a sorted sequence.
fn tied_pairs<T: PartialEq>(sorted: &[T]) -> u64 {
    let mut total = 0u64;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as u64;
        total += t * (t - 1) / 2;
        i = j;
    }
    total
}

/// Sorts `v` and returns the number of strict inversions.
fn merge_count(v: &mut [f64], buf: &mut Vec<f64>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut v[..mid], buf) + merge_count(&mut v[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            swaps += (mid - i) as u64;
            buf.push(v[j]);
            j += 1;
        } else {
            buf.push(v[i]);
            i += 1;
        }
    }
    buf.extend_from_slice(&v[i..mid]);
    buf.extend_from_slice(&v[j..n]);
    v.copy_from_slice(buf);
    swaps
}

struct Fenwick(Vec<u64>);

impl Fenwick {
    fn new(n: usize) -> Self {
        Self(vec![0; n + 1])
    }
    fn add(&mut self, i: usize) {
        let mut i = i + 1;
        while i < self.0.len() {
            self.0[i] += 1;
            i += i & i.wrapping_neg();
        }
    }
    /// Count of inserted ranks `< i`.
    fn below(&self, i: usize) -> u64 {
        let mut i = i;
        let mut s = 0;
        while i > 0 {
            s += self.0[i];
            i -= i & i.wrapping_neg();
        }
        s
    }
}

/// Per-observation concordance balance `s_i = #concordant − #discordant`.
fn concordance_balance(x: &[f64], y: &[f64], order: &[usize]) -> Vec<i64> {
    let n = x.len();
    let mut ys: Vec<f64> = y.to_vec();
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    let rank: Vec<usize> = y.iter().map(|v| ys.partition_point(|w| w.total_cmp(v).is_lt())).collect();
    let mut groups: Vec<&[usize]> = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && x[order[j]] == x[order[i]] {
            j += 1;
        }
        groups.push(&order[i..j]);
        i = j;
    }
    let mut s = vec![0i64; n];
    let mut sweep = |groups: &mut dyn Iterator<Item = &&[usize]>, sign: i64| {
        let mut bit = Fenwick::new(ys.len());
        let mut inserted = 0u64;
        for g in groups {
            for &k in g.iter() {
                let below = bit.below(rank[k]) as i64;
                let above = (inserted - bit.below(rank[k] + 1)) as i64;
                s[k] += sign * (below - above);
            }
            for &k in g.iter() {
                bit.add(rank[k]);
                inserted += 1;
            }
        }
    };
    sweep(&mut groups.iter(), 1);
    sweep(&mut groups.iter().rev(), -1);
    s
}

/// Kendall's tau `(C − D)/C(n, 2)`; tied pairs count as neither. The
/// standard error is the U-statistic estimate `2·sd(s_i/(n−1))/√n`.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<Estimate> {
    check_pairs(x, y)?;
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));
    let xs: Vec<f64> = order.iter().map(|&i| x[i]).collect();
    let xy: Vec<(f64, f64)> = order.iter().map(|&i| (x[i], y[i])).collect();
    let n1 = tied_pairs(&xs);
    let n3 = tied_pairs(&xy);
    let mut yv: Vec<f64> = order.iter().map(|&i| y[i]).collect();
    let mut buf = Vec::with_capacity(n);
    let swaps = merge_count(&mut yv, &mut buf);
    let n2 = tied_pairs(&yv);
    let n0 = (n as u64) * (n as u64 - 1) / 2;
    let balance = n0 as i128 - n1 as i128 - n2 as i128 + n3 as i128 - 2 * swaps as i128;
    let tau = balance as f64 / n0 as f64;

    let s = concordance_balance(x, y, &order);
    debug_assert_eq!(s.iter().map(|v| *v as i128).sum::<i128>(), 2 * balance);
    let h: Vec<f64> = s.iter().map(|v| *v as f64 / (n - 1) as f64).collect();
    let var = h.iter().map(|v| (v - tau).powi(2)).sum::<f64>() / (n - 1) as f64;
    Ok(Estimate { value: tau, stderr: (4.0 * var / n as f64).sqrt() })
}

pub fn empirical_kendall_tau(pairs: &[(f64, f64)]) -> Result<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
    Ok(kendall_tau(&x, &y)?.value)
}

/// Pearson correlation with the large-sample error `(1 − r²)/√n`.
pub fn pearson_correlation(x: &[f64], y: &[f64]) -> Result<Estimate> {
    check_pairs(x, y)?;
    if x.iter().chain(y).any(|v| v.is_infinite()) {
        return invalid("correlation needs finite samples");
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return invalid("correlation undefined for a constant sample");
    }
    let r = sxy / (sxx * syy).sqrt();
    Ok(Estimate { value: r, stderr: (1.0 - r * r) / n.sqrt() })
}

/// Right-continuous empirical distribution function of a finite sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalDf {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
}

impl EmpiricalDf {
    pub fn eval(&self, t: f64) -> f64 {
        match self.breakpoints.partition_point(|b| *b <= t) {
            0 => 0.0,
            i => self.values[i - 1],
        }
    }

    /// `sup_t |F̂(t) − F(t)|` for a continuous `F`, checked at every jump
    /// from both sides.
    pub fn sup_distance<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let mut prev = 0.0;
        let mut sup = 0.0f64;
        for (b, v) in self.breakpoints.iter().zip(&self.values) {
            let ft = f(*b);
            sup = sup.max((ft - prev).abs()).max((ft - v).abs());
            prev = *v;
        }
        sup
    }
}

/// Empirical df `t ↦ (1/d) Σ 1{x_k ≤ t}` of one row.
pub fn empirical_h(row: &[f64]) -> Result<EmpiricalDf> {
    if row.is_empty() {
        return invalid("row must have at least one coordinate");
    }
    if row.iter().any(|v| v.is_nan()) {
        return invalid("row must not contain NaN");
    }
    let mut s = row.to_vec();
    s.sort_by(f64::total_cmp);
    let d = s.len() as f64;
    let mut breakpoints = Vec::new();
    let mut values = Vec::new();
    for (i, v) in s.iter().enumerate() {
        if i + 1 < s.len() && s[i + 1] == *v {
            continue;
        }
        breakpoints.push(*v);
        values.push((i + 1) as f64 / d);
    }
    Ok(EmpiricalDf { breakpoints, values })
}

/// `h_{n,d}(p) = Σ_{k=1}^n P(Bin(d, p) ≥ k)`.
pub fn h_nd(n: usize, d: usize, p: f64) -> f64 {
    let pmf: Vec<f64> = (0..=d).map(|i| binomial(d, i) * p.powi(i as i32) * (1.0 - p).powi((d - i) as i32)).collect();
    (1..=n).map(|k| pmf[k..].iter().sum::<f64>()).sum()
}

fn h_nd_derivative(n: usize, d: usize, p: f64) -> f64 {
    (1..=n.min(d))
        .map(|k| d as f64 * binomial(d - 1, k - 1) * p.powi(k as i32 - 1) * (1.0 - p).powi((d - k) as i32))
        .sum()
}

/// Reference marginal for the majorization bound.
#[derive(Clone, Copy)]
pub enum MarginalRef<'a> {
    /// Pooled empirical marginal of all coordinates.
    Pooled,
    Cdf(&'a dyn Fn(f64) -> f64),
}

#[derive(Debug, Clone, Serialize)]
pub struct MajorizationRow {
    pub n: usize,
    pub lhs: f64,
    pub bound: f64,
    pub stderr: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MajorizationReport {
    pub x: f64,
    pub p: f64,
    pub rows: Vec<MajorizationRow>,
    pub pass: bool,
}

/// Partial sums `Σ_{k≤n} F̂_{X_[k]}(x)` against `h_{n,d}(F_1(x))`.
pub fn majorization_report(samples: &SampleMatrix, x: f64, marginal: MarginalRef<'_>) -> Result<MajorizationReport> {
    let d = samples.d;
    if d < 2 {
        return invalid("majorization needs d >= 2");
    }
    let counts: Vec<usize> = samples.rows().map(|r| r.iter().filter(|v| **v <= x).count()).collect();
    let nf = samples.n as f64;
    let pooled = match marginal {
        MarginalRef::Pooled => true,
        MarginalRef::Cdf(_) => false,
    };
    let p = match marginal {
        MarginalRef::Pooled => counts.iter().sum::<usize>() as f64 / (nf * d as f64),
        MarginalRef::Cdf(f) => f(x),
    };
    let mut rows = Vec::new();
    for n in 1..d {
        let bound = h_nd(n, d, p);
        let slope = if pooled { h_nd_derivative(n, d, p) } else { 0.0 };
        let z: Vec<f64> = counts.iter().map(|c| (*c).min(n) as f64 - slope * *c as f64 / d as f64).collect();
        let zm = z.iter().sum::<f64>() / nf;
        let lhs = counts.iter().map(|c| (*c).min(n) as f64).sum::<f64>() / nf;
        let var = z.iter().map(|v| (v - zm).powi(2)).sum::<f64>() / (nf - 1.0).max(1.0);
        let stderr = (var / nf).sqrt();
        let ok = lhs <= bound + SE_MULT * stderr + ABS_FLOOR;
        rows.push(MajorizationRow { n, lhs, bound, stderr, ok });
    }
    let pass = rows.iter().all(|r| r.ok);
    Ok(MajorizationReport { x, p, rows, pass })
}

pub fn majorization_check(samples: &SampleMatrix, x: f64, marginal: MarginalRef<'_>) -> Result<bool> {
    Ok(majorization_report(samples, x, marginal)?.pass)
}

#[derive(Debug, Clone, Serialize)]
pub struct RadialReport {
    pub mu: f64,
    pub ks_statistics: Vec<f64>,
    pub ks_critical: f64,
    pub grid_z: Vec<f64>,
    pub z_critical: f64,
    pub pass: bool,
}

/// Level of the radial-symmetry test, split by Bonferroni over all statistics.
pub const RADIAL_ALPHA: f64 = 0.01;

/// Compares `X − μ` with `μ − X`: a Kolmogorov–Smirnov distance per
/// coordinate and a z-statistic of the joint lower-orthant frequencies at
/// grid points.
pub fn radial_symmetry_report(samples: &SampleMatrix, mu: f64) -> Result<RadialReport> {
    if samples.data.iter().any(|v| v.is_infinite()) {
        return invalid("radial symmetry needs finite samples");
    }
    let n = samples.n;
    let d = samples.d;
    if n < 2 {
        return invalid("need at least two rows");
    }
    let centered: Vec<f64> = samples.data.iter().map(|v| v - mu).collect();
    let mut pooled = centered.clone();
    pooled.sort_by(f64::total_cmp);
    let grid = quantile_grid(|p| empirical_quantile(&pooled, p), d);
    let alpha = RADIAL_ALPHA / (d + grid.len()) as f64;
    let nf = n as f64;

    let ks_critical = (-0.5 * (alpha / 2.0).ln()).sqrt() * (2.0 / nf).sqrt();
    let ks_statistics: Vec<f64> = (0..d)
        .map(|k| {
            let mut a: Vec<f64> = (0..n).map(|i| centered[i * d + k]).collect();
            a.sort_by(f64::total_cmp);
            let b: Vec<f64> = a.iter().rev().map(|v| -v).collect();
            ks_distance(&a, &b)
        })
        .collect();

    let z_critical = Normal::new(0.0, 1.0).map_err(|e| Error::Unsupported(e.to_string()))?.inverse_cdf(1.0 - alpha / 2.0);
    let grid_z: Vec<f64> = grid
        .iter()
        .map(|t| {
            let diffs: Vec<f64> = (0..n)
                .map(|i| {
                    let row = &centered[i * d..(i + 1) * d];
                    let lo = row.iter().zip(t).all(|(v, s)| *v <= *s) as i32 as f64;
                    let hi = row.iter().zip(t).all(|(v, s)| -*v <= *s) as i32 as f64;
                    lo - hi
                })
                .collect();
            let m = diffs.iter().sum::<f64>() / nf;
            let var = diffs.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (nf - 1.0);
            let se = (var / nf).sqrt();
            if se == 0.0 {
                if m == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                m / se
            }
        })
        .collect();
    let pass = ks_statistics.iter().all(|s| *s <= ks_critical) && grid_z.iter().all(|z| z.abs() <= z_critical);
    Ok(RadialReport { mu, ks_statistics, ks_critical, grid_z, z_critical, pass })
}

pub fn radial_symmetry_test(samples: &SampleMatrix, mu: f64) -> Result<bool> {
    Ok(radial_symmetry_report(samples, mu)?.pass)
}

/// Two-sample Kolmogorov–Smirnov distance of sorted samples of equal size.
fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut sup = 0.0f64;
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        sup = sup.max((i as f64 / n - j as f64 / m).abs());
    }
    sup
}

/// Fraction of rows with at least one exactly tied pair of coordinates.
pub fn tie_frequency(samples: &SampleMatrix) -> Result<f64> {
    if samples.d < 2 {
        return invalid("ties need d >= 2");
    }
    let tied = samples
        .rows()
        .filter(|r| {
            let mut s = r.to_vec();
            s.sort_by(f64::total_cmp);
            s.windows(2).any(|w| w[0] == w[1])
        })
        .count();
    Ok(tied as f64 / samples.n as f64)
}

/// `M ~ U[0, 1/2]`; given `M`, iid coordinates equal to `1/2 ± M` with
/// probability one half each.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScarsiniModel;

impl RowSampler for ScarsiniModel {
    fn dim(&self) -> usize {
        2
    }
    fn fill_row(&self, rng: &mut dyn RngCore, out: &mut [f64]) -> Result<()> {
        let m = 0.5 * rng.random::<f64>();
        for x in out.iter_mut() {
            *x = if rng.random::<bool>() { 0.5 + m } else { 0.5 - m };
        }
        Ok(())
    }
    fn describe(&self) -> String {
        "scarsini".into()
    }
}

pub fn scarsini_model<R: RngCore>(n: usize, rng: &mut R) -> Result<SampleMatrix> {
    draw(&ScarsiniModel, n, rng)
}

/// `½ min(x_1, x_2) + ½ max(0, x_1 + x_2 − 1)` on `[0, 1]²`, extended by
/// clamping.
pub fn scarsini_cdf(x1: f64, x2: f64) -> f64 {
    let (a, b) = (x1.clamp(0.0, 1.0), x2.clamp(0.0, 1.0));
    0.5 * a.min(b) + 0.5 * (a + b - 1.0).max(0.0)
}

/// Sequential conditional inversion of a survival function on `[0, ∞)^d`,
/// `d ≤ 3`. Conditional survival functions are ratios of (mixed) partial
/// derivatives; coordinates landing on an earlier value within `SNAP` are
/// recorded as exact ties, and tied blocks are differentiated jointly.
pub struct ConditionalInversion<F> {
    survival: F,
    d: usize,
}

const STEP_REL: f64 = 1e-5;
// mixed second differences lose ε/h² to roundoff, so they need a wider step
const MIXED_STEP_REL: f64 = 1e-3;
const SNAP_REL: f64 = 1e-7;
const INVERSION_TOL: f64 = 1e-10;
const MONOTONE_SLACK: f64 = 1e-6;
// survival values are trusted to this many ulps when bounding stencil roundoff
const SURVIVAL_ULPS: f64 = 32.0;
pub const CONDITIONAL_DIM_CAP: usize = 3;

/// Second-order one-sided first-derivative stencil `(offset, weight)`,
/// forward when `forward`, with step at most `room / 2`.
fn derivative_stencil(h: f64, room: f64, forward: bool) -> Vec<(f64, f64)> {
    let h = h.min(room / 2.0);
    let sgn = if forward { 1.0 } else { -1.0 };
    vec![(0.0, -1.5 * sgn / h), (sgn * h, 2.0 * sgn / h), (2.0 * sgn * h, -0.5 * sgn / h)]
}

impl<F: Fn(&[f64]) -> f64 + Sync> ConditionalInversion<F> {
    pub fn new(survival: F, d: usize) -> Result<Self> {
        if d == 0 {
            return invalid("dimension must be at least 1");
        }
        if d > CONDITIONAL_DIM_CAP {
            return Err(Error::DimensionCap { d, cap: CONDITIONAL_DIM_CAP });
        }
        Ok(Self { survival, d })
    }

    /// `(−1)^m ∂_{B_1}⋯∂_{B_m} S` at `(past, y, 0, …)`, where the blocks
    /// `B_j` group equal past values and each moves its coordinates together,
    /// paired with a bound on its roundoff error.
    fn numerator(&self, past: &[f64], y: f64) -> (f64, f64) {
        let k = past.len();
        let mut point = vec![0.0; self.d];
        point[..k].copy_from_slice(past);
        point[k] = y;
        let mut blocks: Vec<(f64, Vec<usize>)> = Vec::new();
        for (i, v) in past.iter().enumerate() {
            match blocks.iter_mut().find(|(w, _)| w == v) {
                Some((_, idx)) => idx.push(i),
                None => blocks.push((*v, vec![i])),
            }
        }
        if blocks.is_empty() {
            let v = (self.survival)(&point);
            return (v, SURVIVAL_ULPS * f64::EPSILON * v.abs());
        }
        let step = if blocks.len() > 1 { MIXED_STEP_REL } else { STEP_REL };
        let values: Vec<f64> = blocks.iter().map(|(v, _)| *v).collect();
        let stencils: Vec<Vec<(f64, f64)>> = values
            .iter()
            .map(|&v| {
                // difference away from y so the stencil only changes where y
                // crosses v; other blocks move too and leave half the distance
                let forward = y <= v;
                let mut room = if forward { f64::INFINITY } else { v };
                for (w, share) in values.iter().map(|w| (*w, 0.5)).chain([(y, 1.0)]) {
                    if (forward && w > v) || (!forward && w < v) {
                        room = room.min(share * (w - v).abs());
                    }
                }
                derivative_stencil(step * v.abs().max(1.0), room, forward)
            })
            .collect();
        let mut total = 0.0;
        let mut magnitude = 0.0;
        let mut idx = vec![0usize; blocks.len()];
        loop {
            let mut p = point.clone();
            let mut w = 1.0;
            for (b, (_, members)) in blocks.iter().enumerate() {
                let (off, c) = stencils[b][idx[b]];
                w *= c;
                for &m in members {
                    p[m] += off;
                }
            }
            let term = w * (self.survival)(&p);
            total += term;
            magnitude += term.abs();
            let mut b = 0;
            while b < idx.len() {
                idx[b] += 1;
                if idx[b] < stencils[b].len() {
                    break;
                }
                idx[b] = 0;
                b += 1;
            }
            if b == idx.len() {
                break;
            }
        }
        let noise = SURVIVAL_ULPS * f64::EPSILON * magnitude;
        if blocks.len() % 2 == 1 {
            (-total, noise)
        } else {
            (total, noise)
        }
    }

    fn next_coordinate(&self, past: &[f64], u: f64) -> Result<f64> {
        let (denom, denom_noise) = self.numerator(past, 0.0);
        if !(denom > 0.0 && denom.is_finite()) {
            return Err(Error::NonMonotoneConditional(format!("conditioning density {denom} at {past:?}")));
        }
        let mut seen: Vec<(f64, f64, f64)> = Vec::new();
        let mut g = |y: f64| -> Result<f64> {
            // evaluate just to the right of an earlier value so the atom of a tie stays left of y
            let shifted = past
                .iter()
                .find(|v| (y - **v).abs() <= SNAP_REL * v.abs().max(1.0))
                .map(|v| v + 2.0 * SNAP_REL * v.abs().max(1.0))
                .unwrap_or(y);
            let (num, noise) = self.numerator(past, shifted);
            let val = num / denom;
            let slack = MONOTONE_SLACK + (noise + val.abs() * denom_noise) / denom;
            if !(val.is_finite() && val >= -slack && val <= 1.0 + slack) {
                return Err(Error::NonMonotoneConditional(format!("conditional survival {val} at y={y}")));
            }
            seen.push((y, val, slack));
            Ok(val)
        };
        let y = if g(0.0)? <= u {
            0.0
        } else {
            let mut hi = 1.0;
            while g(hi)? > u {
                hi *= 2.0;
                if hi > 1e300 {
                    return Ok(f64::INFINITY);
                }
            }
            let mut lo = if hi > 1.0 { hi / 2.0 } else { 0.0 };
            while hi - lo > INVERSION_TOL * hi.max(1.0) {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if g(mid)? > u {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            hi
        };
        seen.sort_by(|a, b| a.0.total_cmp(&b.0));
        if let Some(w) = seen.windows(2).find(|w| w[1].1 > w[0].1 + w[0].2 + w[1].2) {
            return Err(Error::NonMonotoneConditional(format!(
                "conditional survival rises from {} at y={} to {} at y={} given {past:?}",
                w[0].1, w[0].0, w[1].1, w[1].0
            )));
        }
        let snapped = past.iter().find(|v| (y - **v).abs() <= 4.0 * SNAP_REL * v.abs().max(1.0)).copied();
        Ok(snapped.unwrap_or(y))
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> RowSampler for ConditionalInversion<F> {
    fn dim(&self) -> usize {
        self.d
    }
    fn fill_row(&self, rng: &mut dyn RngCore, out: &mut [f64]) -> Result<()> {
        for k in 0..self.d {
            let u: f64 = rng.random();
            out[k] = self.next_coordinate(&out[..k], u)?;
        }
        Ok(())
    }
    fn describe(&self) -> String {
        format!("conditional_inversion(d={})", self.d)
    }
}

pub fn conditional_inversion_sampler<F, R>(survival: F, d: usize, n: usize, rng: &mut R) -> Result<SampleMatrix>
where
    F: Fn(&[f64]) -> f64 + Sync,
    R: RngCore,
{
    draw(&ConditionalInversion::new(survival, d)?, n, rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// `P(X > x)`.
    Survival,
    /// `P(X ≤ x)`.
    Cdf,
}

#[derive(Debug, Clone, Serialize)]
pub struct McReport {
    pub sampler: String,
    pub kind: EventKind,
    pub n: usize,
    pub seed: u64,
    pub points: Vec<Vec<f64>>,
    pub closed: Vec<f64>,
    pub empirical: Vec<f64>,
    pub stderr: Vec<f64>,
    pub pass: bool,
}

impl McReport {
    pub fn point_ok(&self, i: usize) -> bool {
        within_tolerance(self.empirical[i], self.closed[i], self.stderr[i])
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One line per grid point: coordinates, closed form, empirical, stderr, ok.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        let d = self.points.first().map_or(0, Vec::len);
        let mut header: Vec<String> = (1..=d).map(|k| format!("x{k}")).collect();
        header.extend(["closed", "empirical", "stderr", "ok"].map(String::from));
        wtr.write_record(&header)?;
        for (i, p) in self.points.iter().enumerate() {
            let mut rec: Vec<String> = p.iter().map(|v| format_real(*v)).collect();
            rec.push(format_real(self.closed[i]));
            rec.push(format_real(self.empirical[i]));
            rec.push(format_real(self.stderr[i]));
            rec.push(self.point_ok(i).to_string());
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Compares a seeded sample against a closed form at every grid point.
pub fn compare_with_closed_form<E>(samples: &SampleMatrix, closed: E, kind: EventKind, grid: &[Vec<f64>]) -> Result<McReport>
where
    E: Fn(&[f64]) -> Result<f64>,
{
    let mut closed_vals = Vec::with_capacity(grid.len());
    let mut empirical = Vec::with_capacity(grid.len());
    let mut stderr = Vec::with_capacity(grid.len());
    for p in grid {
        if p.len() != samples.d {
            return invalid(format!("grid point has {} coordinates, samples have {}", p.len(), samples.d));
        }
        let (e, se) = match kind {
            EventKind::Survival => samples.empirical_survival(p),
            EventKind::Cdf => samples.empirical_cdf(p),
        };
        closed_vals.push(closed(p)?);
        empirical.push(e);
        stderr.push(se);
    }
    let mut report = McReport {
        sampler: samples.meta.clone(),
        kind,
        n: samples.n,
        seed: samples.seed.unwrap_or(0),
        points: grid.to_vec(),
        closed: closed_vals,
        empirical,
        stderr,
        pass: false,
    };
    report.pass = (0..grid.len()).all(|i| report.point_ok(i));
    Ok(report)
}

/// Draws `n` rows with the seeded block scheme and compares with `closed`.
pub fn mc_verify<S, E>(sampler: &S, closed: E, kind: EventKind, grid: &[Vec<f64>], n: usize, seed: u64, threads: usize) -> Result<McReport>
where
    S: RowSampler + ?Sized,
    E: Fn(&[f64]) -> Result<f64>,
{
    let samples = draw_seeded(sampler, n, seed, threads)?;
    compare_with_closed_form(&samples, closed, kind, grid)
}

/// Kendall tau and correlation of the first two columns plus majorization
/// at the pooled median.
#[derive(Debug, Clone, Serialize)]
pub struct NecessaryConditions {
    pub kendall: Estimate,
    pub correlation: Option<Estimate>,
    pub majorization: MajorizationReport,
    pub pass: bool,
}

pub fn necessary_conditions(samples: &SampleMatrix) -> Result<NecessaryConditions> {
    if samples.d < 2 {
        return invalid("necessary conditions need d >= 2");
    }
    let (x, y) = (samples.column(0), samples.column(1));
    let kendall = kendall_tau(&x, &y)?;
    let correlation = pearson_correlation(&x, &y).ok();
    let mut pooled = samples.data.clone();
    pooled.sort_by(f64::total_cmp);
    let median = empirical_quantile(&pooled, 0.5);
    let majorization = majorization_report(samples, median, MarginalRef::Pooled)?;
    let pass = kendall.value >= -SE_MULT * kendall.stderr
        && correlation.is_none_or(|c| c.value >= -SE_MULT * c.stderr)
        && majorization.pass;
    Ok(NecessaryConditions { kendall, correlation, majorization, pass })
}
