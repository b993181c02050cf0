//! Min-stable multivariate exponential laws: stable tail dependence
//! functions, extreme-value copulas, and the strong-IDT series sampler.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::mixtures::{sample_positive_stable, MixingLawSpec};
use crate::numerics::{first_passage, gamma, integrate_pieces};
use crate::sampling::{draw, unit_exp, RowSampler, SampleMatrix};

/// A unit-mean distribution function on `[0, ∞]`, or (for `MoAtom`) a random
/// one driven by a mixing law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GSpec {
    /// `G(x) = exp(−(Γ(1−θ) x)^{−1/θ})`.
    Frechet { theta: f64 },
    /// `G(x) = 1 − exp(−(Γ(θ+1) x)^{1/θ})`.
    Weibull { theta: f64 },
    /// `G_t = e^{−M} + (1 − e^{−M}) 1{t ≥ 1/(1 − e^{−M})}` with random `M`.
    MoAtom { m: MixingLawSpec },
    /// Right-continuous step function: `values[i]` on `[breakpoints[i], breakpoints[i+1])`,
    /// zero before the first breakpoint.
    Step { breakpoints: Vec<f64>, values: Vec<f64> },
}

fn mo_scale(m: f64) -> f64 {
    if m == f64::INFINITY {
        1.0
    } else {
        -(-m).exp_m1()
    }
}

impl GSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Frechet { theta } if !(*theta > 0.0 && *theta < 1.0) => invalid("Frechet index must lie in (0,1)"),
            Self::Weibull { theta } if !(*theta > 0.0 && theta.is_finite()) => invalid("Weibull index must be positive"),
            Self::MoAtom { m } => {
                m.validate()?;
                let zero = match m {
                    MixingLawSpec::PointMass { m } => *m == 0.0,
                    MixingLawSpec::FiniteDiscrete { atoms, weights } => {
                        atoms.iter().zip(weights).any(|(a, w)| *a == 0.0 && *w > 0.0)
                    }
                    _ => false,
                };
                if zero {
                    invalid("Marshall-Olkin atom law must be positive")
                } else {
                    Ok(())
                }
            }
            Self::Step { breakpoints, values } => {
                if breakpoints.is_empty() || breakpoints.len() != values.len() {
                    return invalid("step function needs equally many breakpoints and values");
                }
                if breakpoints[0] < 0.0 || breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
                    return invalid("breakpoints must be non-negative and strictly increasing");
                }
                if values.windows(2).any(|w| w[1] < w[0]) || values[0] < 0.0 || *values.last().unwrap() != 1.0 {
                    return invalid("step values must be non-decreasing in [0,1] and end at 1");
                }
                let mean = self.step_mean();
                if (mean - 1.0).abs() > 1e-8 {
                    return invalid(format!("step distribution has mean {mean}, not 1"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    fn step_mean(&self) -> f64 {
        let Self::Step { breakpoints, values } = self else { return f64::NAN };
        let mut mean = breakpoints[0];
        for i in 0..breakpoints.len() - 1 {
            mean += (1.0 - values[i]) * (breakpoints[i + 1] - breakpoints[i]);
        }
        mean
    }

    /// `G(s)` for deterministic variants.
    pub fn cdf(&self, s: f64) -> f64 {
        match self {
            Self::Frechet { theta } => {
                if s <= 0.0 {
                    0.0
                } else {
                    (-(gamma(1.0 - theta) * s).powf(-1.0 / theta)).exp()
                }
            }
            Self::Weibull { theta } => {
                if s <= 0.0 {
                    0.0
                } else {
                    -(-(gamma(theta + 1.0) * s).powf(1.0 / theta)).exp_m1()
                }
            }
            Self::Step { breakpoints, values } => {
                let i = breakpoints.partition_point(|b| *b <= s);
                if i == 0 {
                    0.0
                } else {
                    values[i - 1]
                }
            }
            Self::MoAtom { m } => m.expect(|mm| if s * mo_scale(mm) >= 1.0 { 1.0 } else { (-mm).exp() }, &[]),
        }
    }

    /// `log G(s)`, accurate where `G(s)` is close to 1.
    pub fn log_cdf(&self, s: f64) -> f64 {
        match self {
            Self::Frechet { theta } if s > 0.0 => -(gamma(1.0 - theta) * s).powf(-1.0 / theta),
            Self::Weibull { theta } if s > 0.0 => (-(-(gamma(theta + 1.0) * s).powf(1.0 / theta)).exp()).ln_1p(),
            _ => self.cdf(s).ln(),
        }
    }

    /// `ℓ_G(x) = ∫_0^∞ 1 − ∏_k G(u/x_k) du`, averaged over `M` for `MoAtom`.
    pub fn ell(&self, x: &[f64]) -> f64 {
        let xs: Vec<f64> = x.iter().copied().filter(|v| *v > 0.0).collect();
        if xs.is_empty() {
            return 0.0;
        }
        match self {
            Self::MoAtom { m } => {
                let mut s = xs.clone();
                s.sort_by(f64::total_cmp);
                let d = s.len();
                m.expect(
                    |mm| {
                        let mut acc = 0.0;
                        let mut prev = 0.0;
                        for (j, xj) in s.iter().enumerate() {
                            let cnt = (d - j) as f64;
                            let w = if mm == f64::INFINITY { 1.0 } else { -(-mm * cnt).exp_m1() / mo_scale(mm) };
                            acc += (xj - prev) * w;
                            prev = *xj;
                        }
                        acc
                    },
                    &[],
                )
            }
            Self::Step { breakpoints, .. } => {
                let mut pts: Vec<f64> = xs.iter().flat_map(|xk| breakpoints.iter().map(move |b| b * xk)).collect();
                pts.push(0.0);
                pts.sort_by(f64::total_cmp);
                pts.dedup();
                let mut acc = 0.0;
                for w in pts.windows(2) {
                    let mid = 0.5 * (w[0] + w[1]);
                    let p: f64 = xs.iter().map(|xk| self.cdf(mid / xk)).product();
                    acc += (1.0 - p) * (w[1] - w[0]);
                }
                acc
            }
            _ => {
                let top = xs.iter().fold(0.0f64, |a, b| a.max(*b));
                let h = |v: f64| {
                    let u = v.exp();
                    -xs.iter().map(|xk| self.log_cdf(u / xk)).sum::<f64>().exp_m1() * u
                };
                let lt = top.ln();
                let mut hi = lt + 2.0;
                while hi < 700.0 && h(hi) > 1e-17 * top {
                    hi += 1.0;
                }
                let breaks: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
                integrate_pieces(h, lt - 50.0, hi, &breaks, 1e-12 * top)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedG {
    pub g: GSpec,
    pub weight: f64,
}

/// Stable tail dependence function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StdfSpec {
    Independence,
    Logistic { theta: f64 },
    NegativeLogistic { theta: f64 },
    Lf { g: GSpec },
    Triplet { b: f64, c: f64, atoms: Vec<WeightedG> },
}

impl StdfSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Independence => Ok(()),
            Self::Logistic { theta } if !(*theta > 0.0 && *theta <= 1.0) => invalid("logistic index must lie in (0,1]"),
            Self::NegativeLogistic { theta } if !(*theta > 0.0 && theta.is_finite()) => {
                invalid("negative logistic index must be positive")
            }
            Self::Lf { g } => g.validate(),
            Self::Triplet { b, c, atoms } => {
                if !(*b >= 0.0 && b.is_finite() && *c > 0.0 && c.is_finite()) {
                    return invalid("triplet needs b >= 0 and c > 0");
                }
                if atoms.is_empty() || atoms.iter().any(|a| !(a.weight >= 0.0)) {
                    return invalid("triplet needs non-negative atom weights");
                }
                let s: f64 = atoms.iter().map(|a| a.weight).sum();
                if (s - 1.0).abs() > 1e-12 {
                    return invalid(format!("atom weights sum to {s}, not 1"));
                }
                atoms.iter().try_for_each(|a| a.g.validate())
            }
            _ => Ok(()),
        }
    }

    /// Equivalent `(b, c, γ)` representation; `None` for independence.
    pub fn as_triplet(&self) -> Option<(f64, f64, Vec<WeightedG>)> {
        let one = |g: GSpec| Some((0.0, 1.0, vec![WeightedG { g, weight: 1.0 }]));
        match self {
            Self::Independence => None,
            Self::Logistic { theta } if *theta >= 1.0 => None,
            Self::Logistic { theta } => one(GSpec::Frechet { theta: *theta }),
            Self::NegativeLogistic { theta } => one(GSpec::Weibull { theta: 1.0 / theta }),
            Self::Lf { g } => one(g.clone()),
            Self::Triplet { b, c, atoms } => Some((*b, *c, atoms.clone())),
        }
    }

    /// Exponential rate of the margins under the canonical series construction.
    pub fn natural_rate(&self) -> f64 {
        match self {
            Self::Triplet { b, c, .. } => b + c,
            _ => 1.0,
        }
    }
}

pub fn stdf_eval(spec: &StdfSpec, x: &[f64]) -> Result<f64> {
    if x.iter().any(|v| v.is_nan() || *v < 0.0) {
        return invalid("stable tail dependence arguments must be non-negative");
    }
    Ok(match spec {
        StdfSpec::Independence => x.iter().sum(),
        StdfSpec::Logistic { theta } => {
            let top = x.iter().fold(0.0f64, |a, b| a.max(*b));
            if top == 0.0 {
                0.0
            } else {
                top * x.iter().map(|v| (v / top).powf(1.0 / theta)).sum::<f64>().powf(*theta)
            }
        }
        StdfSpec::NegativeLogistic { theta } => {
            let d = x.len();
            if d > 24 {
                return Err(Error::DimensionCap { d, cap: 24 });
            }
            let mut acc = 0.0;
            for mask in 1u32..(1 << d) {
                let s: f64 = (0..d).filter(|k| mask & (1 << k) != 0).map(|k| x[k].powf(-theta)).sum();
                let term = s.powf(-1.0 / theta);
                if mask.count_ones() % 2 == 1 {
                    acc += term;
                } else {
                    acc -= term;
                }
            }
            acc
        }
        StdfSpec::Lf { g } => g.ell(x),
        StdfSpec::Triplet { b, c, atoms } => {
            let l1: f64 = x.iter().sum();
            let mix: f64 = atoms.iter().map(|a| a.weight * a.g.ell(x)).sum();
            (b * l1 + c * mix) / (b + c)
        }
    })
}

/// `exp(−rate · ℓ(x))`.
pub fn minstable_survival(spec: &StdfSpec, rate: f64, x: &[f64]) -> Result<f64> {
    if !(rate > 0.0 && rate.is_finite()) {
        return invalid("rate must be positive");
    }
    Ok((-rate * stdf_eval(spec, x)?).exp())
}

/// `C(u) = exp(−ℓ(−log u_1, …, −log u_d))`.
pub fn extreme_value_copula_eval(spec: &StdfSpec, u: &[f64]) -> Result<f64> {
    if u.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return invalid("copula arguments must lie in [0,1]");
    }
    if u.iter().any(|v| *v == 0.0) {
        return Ok(0.0);
    }
    let x: Vec<f64> = u.iter().map(|v| -v.ln()).collect();
    Ok((-stdf_eval(spec, &x)?).exp())
}

const MAX_ARRIVALS: usize = 5_000_000;
const FRECHET_TERMS: usize = 4000;
const PASSAGE_TOL: f64 = 1e-10;
const T_CAP: f64 = 1e9;

#[derive(Debug, Clone)]
enum Piece {
    Frechet { theta: f64, rate: f64 },
    Jump(GSpec),
}

/// Series sampler for a min-stable law given by `(b, c, γ)`:
/// `Z_t = b t + Σ_n −log G^{(n)}((Γ_n / (c t))−)` and `X_k = inf{t : Z_t > ε_k}`.
/// Frechet atoms factor as `(c t)^{1/θ} S` with `S` the truncated series plus
/// its expected tail.
#[derive(Debug, Clone)]
pub struct MinStableSeries {
    d: usize,
    b: f64,
    c: f64,
    scale: f64,
    frechet: Vec<(f64, f64)>,
    jumps: Vec<(GSpec, f64)>,
    jump_rate: f64,
    /// `Γ(θ+1)` for Weibull atoms, unused otherwise.
    weibull_scale: Vec<f64>,
    /// Largest `Γ_n / (c t)` with a non-zero term across all jump atoms.
    reach: f64,
    describe: String,
}

struct Realization<'a> {
    s: &'a MinStableSeries,
    frechet_sums: Vec<f64>,
    arrivals: Vec<(f64, usize, f64)>,
    last: f64,
}

impl MinStableSeries {
    pub fn new(spec: &StdfSpec, rate: f64, d: usize) -> Result<Self> {
        spec.validate()?;
        if d == 0 {
            return invalid("dimension must be at least 1");
        }
        if !(rate > 0.0 && rate.is_finite()) {
            return invalid("rate must be positive");
        }
        let (b, c, atoms) = spec.as_triplet().unwrap_or((1.0, 0.0, vec![]));
        let mut frechet = Vec::new();
        let mut jumps = Vec::new();
        for a in atoms.iter().filter(|a| a.weight > 0.0) {
            let piece = match &a.g {
                GSpec::Frechet { theta } => Piece::Frechet { theta: *theta, rate: a.weight },
                g => Piece::Jump(g.clone()),
            };
            match piece {
                Piece::Frechet { theta, rate } => frechet.push((theta, rate)),
                Piece::Jump(g) => {
                    if let GSpec::MoAtom { m } = &g {
                        if mo_lower_bound(m).is_none() {
                            return Err(Error::Unsupported(format!(
                                "series sampling needs a mixing law bounded away from 0, got {}",
                                m.name()
                            )));
                        }
                    }
                    jumps.push((g, a.weight));
                }
            }
        }
        let jump_rate = jumps.iter().map(|j| j.1).sum();
        let weibull_scale = jumps
            .iter()
            .map(|(g, _)| if let GSpec::Weibull { theta } = g { gamma(theta + 1.0) } else { 0.0 })
            .collect();
        let reach = jumps.iter().map(|(g, _)| reach(g)).fold(0.0, f64::max);
        Ok(Self {
            d,
            b,
            c,
            scale: (b + c) / rate,
            frechet,
            jumps,
            jump_rate,
            weibull_scale,
            reach,
            describe: format!("minstable(b={b}, c={c}, atoms={}, rate={rate}, d={d})", atoms.len()),
        })
    }

}

/// Largest argument `s` at which a jump atom's term can still be non-negligible.
fn reach(g: &GSpec) -> f64 {
    match g {
        GSpec::Weibull { theta } => 40f64.powf(*theta) / gamma(theta + 1.0),
        GSpec::MoAtom { m } => 1.0 / mo_scale(mo_lower_bound(m).unwrap_or(f64::INFINITY)),
        GSpec::Step { breakpoints, .. } => *breakpoints.last().unwrap_or(&0.0),
        GSpec::Frechet { .. } => f64::INFINITY,
    }
}

fn mo_lower_bound(m: &MixingLawSpec) -> Option<f64> {
    match m {
        MixingLawSpec::PointMass { m } => Some(*m),
        MixingLawSpec::FiniteDiscrete { atoms, weights } => {
            atoms.iter().zip(weights).filter(|(_, w)| **w > 0.0).map(|(a, _)| *a).reduce(f64::min)
        }
        MixingLawSpec::Pareto { .. } | MixingLawSpec::LogSeries { .. } => Some(1.0),
        _ => None,
    }
}

impl<'a> Realization<'a> {
    fn new(s: &'a MinStableSeries, rng: &mut dyn RngCore) -> Self {
        let frechet_sums = s
            .frechet
            .iter()
            .map(|&(theta, w)| {
                let k = gamma(1.0 - theta);
                let mut g = 0.0;
                let mut sum = 0.0;
                for _ in 0..FRECHET_TERMS {
                    g += unit_exp(rng) / w;
                    let term = (k * g).powf(-1.0 / theta);
                    sum += term;
                    if term < 1e-14 * sum {
                        break;
                    }
                }
                let e = 1.0 / theta;
                sum + w * k.powf(-e) * g.powf(1.0 - e) / (e - 1.0)
            })
            .collect();
        Self { s, frechet_sums, arrivals: Vec::new(), last: 0.0 }
    }

    fn extend(&mut self, rng: &mut dyn RngCore, upto: f64) -> Result<()> {
        if self.s.jump_rate == 0.0 {
            return Ok(());
        }
        while self.last <= upto {
            if self.arrivals.len() >= MAX_ARRIVALS {
                return Err(Error::TruncationOverflow(upto));
            }
            self.last += unit_exp(rng) / self.s.jump_rate;
            let mut u = rng.random::<f64>() * self.s.jump_rate;
            let mut idx = self.s.jumps.len() - 1;
            for (i, (_, w)) in self.s.jumps.iter().enumerate() {
                if u < *w {
                    idx = i;
                    break;
                }
                u -= w;
            }
            let m = match &self.s.jumps[idx].0 {
                GSpec::MoAtom { m } => m.sample(rng),
                _ => 0.0,
            };
            self.arrivals.push((self.last, idx, m));
        }
        Ok(())
    }

    fn horizon(&self, t: f64) -> f64 {
        self.s.c * t * self.s.reach
    }

    fn z(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let ct = self.s.c * t;
        let mut z = self.s.b * t;
        for (&(theta, _), sum) in self.s.frechet.iter().zip(&self.frechet_sums) {
            z += ct.powf(1.0 / theta) * sum;
        }
        for &(gam, idx, m) in &self.arrivals {
            let s = gam / ct;
            if s > self.s.reach {
                break;
            }
            let term = match &self.s.jumps[idx].0 {
                GSpec::MoAtom { .. } => {
                    if s * mo_scale(m) <= 1.0 {
                        m
                    } else {
                        0.0
                    }
                }
                GSpec::Weibull { theta } => {
                    let r = (self.s.weibull_scale[idx] * s).powf(1.0 / theta);
                    if r > 40.0 {
                        0.0
                    } else {
                        -(-(-r).exp()).ln_1p()
                    }
                }
                GSpec::Step { breakpoints, values } => {
                    let i = breakpoints.partition_point(|b| *b < s);
                    if i == 0 {
                        f64::INFINITY
                    } else {
                        -values[i - 1].ln()
                    }
                }
                GSpec::Frechet { .. } => 0.0,
            };
            z += term;
        }
        z
    }
}

impl RowSampler for MinStableSeries {
    fn dim(&self) -> usize {
        self.d
    }
    fn fill_row(&self, rng: &mut dyn RngCore, out: &mut [f64]) -> Result<()> {
        let mut real = Realization::new(self, rng);
        for x in out.iter_mut() {
            let eps = unit_exp(rng);
            let mut hi = 1.0;
            loop {
                real.extend(rng, real.horizon(hi))?;
                if real.z(hi) > eps {
                    break;
                }
                hi *= 2.0;
                if hi > T_CAP {
                    return Err(Error::TruncationOverflow(hi));
                }
            }
            let t = first_passage(|t| if t > hi { f64::INFINITY } else { real.z(t) }, eps.next_up(), PASSAGE_TOL);
            *x = t * self.scale;
        }
        Ok(())
    }
    fn describe(&self) -> String {
        self.describe.clone()
    }
}

pub fn sample_minstable<R: RngCore>(spec: &StdfSpec, d: usize, n: usize, rng: &mut R) -> Result<SampleMatrix> {
    draw(&MinStableSeries::new(spec, spec.natural_rate(), d)?, n, rng)
}

/// Logistic law through `Z_t = S t^{1/θ}`: `X_k = (ε_k / S)^θ / rate`.
#[derive(Debug, Clone)]
pub struct LogisticDirect {
    pub theta: f64,
    pub rate: f64,
    pub d: usize,
}

impl RowSampler for LogisticDirect {
    fn dim(&self) -> usize {
        self.d
    }
    fn fill_row(&self, rng: &mut dyn RngCore, out: &mut [f64]) -> Result<()> {
        let s = sample_positive_stable(self.theta, rng);
        for x in out.iter_mut() {
            *x = (unit_exp(rng) / s).powf(self.theta) / self.rate;
        }
        Ok(())
    }
    fn describe(&self) -> String {
        format!("logistic_direct(theta={}, rate={}, d={})", self.theta, self.rate, self.d)
    }
}

pub fn sample_logistic_direct<R: RngCore>(theta: f64, rate: f64, d: usize, n: usize, rng: &mut R) -> Result<SampleMatrix> {
    if !(theta > 0.0 && theta < 1.0) {
        return invalid("logistic index must lie in (0,1)");
    }
    if !(rate > 0.0 && rate.is_finite()) || d == 0 {
        return invalid("need rate > 0 and d >= 1");
    }
    draw(&LogisticDirect { theta, rate, d }, n, rng)
}
