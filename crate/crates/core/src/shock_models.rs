//! Exchangeable exogenous shock models, additive subordinators, the Dirichlet
//! prior and the Sato-frailty family.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{invalid, Error, Result};
use crate::lack_of_memory::{CompoundPoissonSubordinatorSpec, SHOCK_DIM_CAP};
use crate::numerics::{binomial, generalized_inverse_decreasing, ln_gamma};
use crate::sampling::{draw, RowSampler, SampleMatrix};

const INVERSE_TOL: f64 = 1e-12;

fn sorted_asc(x: &[f64]) -> Vec<f64> {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

fn check_unit_cube(u: &[f64], d: usize) -> Result<()> {
    if u.len() != d {
        return invalid(format!("point has {} coordinates, model has {d}", u.len()));
    }
    if u.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return invalid("copula arguments must lie in [0, 1]");
    }
    Ok(())
}

/// Survival function of a single shock arrival time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShockSurvival {
    /// `exp(−λx)`; `λ = 0` means the shock never arrives.
    Exponential { rate: f64 },
    /// `exp(−λ x^k)`.
    Weibull { rate: f64, shape: f64 },
    /// `(1 + x/s)^{−α}`.
    Pareto {
        alpha: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// Right-continuous step function equal to `values[i]` on
    /// `[breakpoints[i], breakpoints[i+1])` and 1 before the first breakpoint.
    Step { breakpoints: Vec<f64>, values: Vec<f64> },
}

fn one() -> f64 {
    1.0
}

impl ShockSurvival {
    pub fn validate(&self) -> Result<()> {
        let nonneg = |v: f64| v.is_finite() && v >= 0.0;
        let pos = |v: f64| v.is_finite() && v > 0.0;
        match self {
            Self::Exponential { rate } if !nonneg(*rate) => invalid("exponential rate must be finite and >= 0"),
            Self::Weibull { rate, shape } if !nonneg(*rate) || !pos(*shape) => {
                invalid("Weibull shock needs rate >= 0 and shape > 0")
            }
            Self::Pareto { alpha, scale } if !pos(*alpha) || !pos(*scale) => {
                invalid("Pareto shock needs alpha > 0 and scale > 0")
            }
            Self::Step { breakpoints, values } => {
                if breakpoints.is_empty() || breakpoints.len() != values.len() {
                    return invalid("step shock needs equally many breakpoints and values");
                }
                if !breakpoints.iter().all(|t| pos(*t)) || breakpoints.windows(2).any(|w| w[0] >= w[1]) {
                    return invalid("step breakpoints must be positive and strictly increasing");
                }
                if !values.iter().all(|v| (0.0..=1.0).contains(v)) || values.windows(2).any(|w| w[0] < w[1]) {
                    return invalid("step values must be non-increasing in [0, 1]");
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    fn is_trivial(&self) -> bool {
        match self {
            Self::Exponential { rate } | Self::Weibull { rate, .. } => *rate == 0.0,
            Self::Step { values, .. } => values.iter().all(|v| *v == 1.0),
            Self::Pareto { .. } => false,
        }
    }

    pub fn survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        match self {
            Self::Exponential { rate } => (-rate * x).exp(),
            Self::Weibull { rate, shape } => (-rate * x.powf(*shape)).exp(),
            Self::Pareto { alpha, scale } => (1.0 + x / scale).powf(-alpha),
            Self::Step { breakpoints, values } => match breakpoints.partition_point(|t| *t <= x) {
                0 => 1.0,
                i => values[i - 1],
            },
        }
    }

    /// Draw by inversion: `inf{x : H̄(x) ≤ U}`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = 1.0 - rng.random::<f64>();
        match self {
            Self::Exponential { rate } => -u.ln() / rate,
            Self::Weibull { rate, shape } => (-u.ln() / rate).powf(1.0 / shape),
            Self::Pareto { alpha, scale } => scale * (u.powf(-1.0 / alpha) - 1.0),
            Self::Step { breakpoints, values } => match values.iter().position(|v| *v <= u) {
                Some(i) => breakpoints[i],
                None => f64::INFINITY,
            },
        }
    }
}

/// Per-cardinality shock survival functions `H̄_1, …, H̄_d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ShockSurvivalSpec {
    pub by_cardinality: Vec<ShockSurvival>,
}

/// Exchangeable shock model `X_k = min{E_I : k ∈ I}` where the law of `E_I`
/// depends on `|I|` only.
#[derive(Debug, Clone)]
pub struct ExShock {
    h: Vec<ShockSurvival>,
}

impl ExShock {
    pub fn new(spec: &ShockSurvivalSpec) -> Result<Self> {
        let d = spec.by_cardinality.len();
        if d == 0 {
            return invalid("need at least one shock family");
        }
        if d > SHOCK_DIM_CAP {
            return Err(Error::DimensionCap { d, cap: SHOCK_DIM_CAP });
        }
        for h in &spec.by_cardinality {
            h.validate()?;
        }
        if spec.by_cardinality.iter().all(ShockSurvival::is_trivial) {
            return invalid("no shock ever arrives");
        }
        Ok(Self { h: spec.by_cardinality.clone() })
    }

    pub fn d(&self) -> usize {
        self.h.len()
    }

    /// `F̄_1(x) = ∏_m H̄_m(x)^{C(d−1, m−1)}`.
    pub fn marginal_survival(&self, x: f64) -> f64 {
        self.level_factor(1, x)
    }

    /// `∏_{m=1}^{d−k+1} H̄_m(x)^{C(d−k, m−1)}`.
    fn level_factor(&self, k: usize, x: f64) -> f64 {
        let d = self.d();
        (1..=d - k + 1)
            .map(|m| {
                let e = binomial(d - k, m - 1);
                let h = self.h[m - 1].survival(x);
                if h == 1.0 {
                    1.0
                } else {
                    h.powf(e)
                }
            })
            .product()
    }

    pub fn survival(&self, x: &[f64]) -> Result<f64> {
        let d = self.d();
        if x.len() != d {
            return invalid(format!("point has {} coordinates, model has {d}", x.len()));
        }
        let s = sorted_asc(x);
        Ok((1..=d).map(|k| self.level_factor(k, s[d - k])).product())
    }

    /// `u_[1] ∏_{k≥2} g_k(u_[k])` with `g_k = ∏_m (H̄_m ∘ F̄_1^{−1})^{C(d−k, m−1)}`.
    pub fn copula(&self, u: &[f64]) -> Result<f64> {
        let d = self.d();
        check_unit_cube(u, d)?;
        let s = sorted_asc(u);
        if s[0] == 0.0 {
            return Ok(0.0);
        }
        let mut cache: Vec<(f64, f64)> = Vec::new();
        let mut out = s[0];
        for k in 2..=d {
            let v = s[k - 1];
            let t = match cache.iter().find(|(w, _)| *w == v) {
                Some((_, t)) => *t,
                None => {
                    let t = generalized_inverse_decreasing(|x| self.marginal_survival(x), v, INVERSE_TOL);
                    cache.push((v, t));
                    t
                }
            };
            out *= self.level_factor(k, t);
        }
        Ok(out)
    }
}

impl RowSampler for ExShock {
    fn dim(&self) -> usize {
        self.d()
    }
    fn fill_row(&self, rng: &mut dyn RngCore, out: &mut [f64]) -> Result<()> {
        out.fill(f64::INFINITY);
        for mask in 1u32..(1u32 << self.d()) {
            let e = self.h[mask.count_ones() as usize - 1].sample(rng);
            let mut bits = mask;
            while bits != 0 {
                let k = bits.trailing_zeros() as usize;
                if e < out[k] {
                    out[k] = e;
                }
                bits &= bits - 1;
            }
        }
        Ok(())
    }
    fn describe(&self) -> String {
        format!("exshock(d={})", self.d())
    }
}

pub fn exshock_sample<R: RngCore>(spec: &ShockSurvivalSpec, d: usize, n: usize, rng: &mut R) -> Result<SampleMatrix> {
    if d > SHOCK_DIM_CAP {
        return Err(Error::DimensionCap { d, cap: SHOCK_DIM_CAP });
    }
    if spec.by_cardinality.len() != d {
        return invalid(format!("spec lists {} shock families, dimension is {d}", spec.by_cardinality.len()));
    }
    draw(&ExShock::new(spec)?, n, rng)
}

pub fn exshock_copula_eval(spec: &ShockSurvivalSpec, u: &[f64]) -> Result<f64> {
    ExShock::new(spec)?.copula(u)
}

/// Continuous, strictly increasing base distribution of a Dirichlet prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum BaseDistSpec {
    Uniform { lo: f64, hi: f64 },
    Exponential { rate: f64 },
    Normal { mean: f64, sd: f64 },
    Logistic { loc: f64, scale: f64 },
}

impl BaseDistSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Self::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && lo < hi,
            Self::Exponential { rate } => rate.is_finite() && *rate > 0.0,
            Self::Normal { mean, sd } => mean.is_finite() && sd.is_finite() && *sd > 0.0,
            Self::Logistic { loc, scale } => loc.is_finite() && scale.is_finite() && *scale > 0.0,
        };
        if ok {
            Ok(())
        } else {
            invalid(format!("invalid base distribution {self:?}"))
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Self::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Self::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            Self::Normal { mean, sd } => Normal::new(*mean, *sd).map(|n| n.cdf(x)).unwrap_or(f64::NAN),
            Self::Logistic { loc, scale } => 1.0 / (1.0 + (-(x - loc) / scale).exp()),
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        match self {
            Self::Uniform { lo, hi } => lo + p * (hi - lo),
            Self::Exponential { rate } => -(-p).ln_1p() / rate,
            Self::Normal { mean, sd } => Normal::new(*mean, *sd).map(|n| n.inverse_cdf(p)).unwrap_or(f64::NAN),
            Self::Logistic { loc, scale } => loc + scale * (p / (1.0 - p)).ln(),
        }
    }

    /// Whether `dG` is symmetric about its median.
    pub fn is_symmetric(&self) -> bool {
        !matches!(self, Self::Exponential { .. })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        // open interval keeps the normal and logistic quantiles finite
        let mut p: f64 = rng.random();
        while p == 0.0 {
            p = rng.random();
        }
        self.quantile(p)
    }
}

/// Non-decreasing additive process described by its Laplace exponents `Ψ_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdditiveFamilySpec {
    /// Lévy pieces: `pieces[i]` drives the process on `[t_i, t_{i+1})` with
    /// `t_0 = 0` and the last piece running to infinity.
    PiecewiseLevy {
        breakpoints: Vec<f64>,
        pieces: Vec<CompoundPoissonSubordinatorSpec>,
    },
    DirichletPrior { c: f64, g: BaseDistSpec },
    /// Sato subordinator built from the Gamma exponent `α log(1 + x)`.
    Sato { alpha: f64 },
}

impl AdditiveFamilySpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::PiecewiseLevy { breakpoints, pieces } => {
                if pieces.len() != breakpoints.len() + 1 {
                    return invalid("piecewise Lévy family needs one more piece than breakpoints");
                }
                if breakpoints.iter().any(|t| !(t.is_finite() && *t > 0.0)) || breakpoints.windows(2).any(|w| w[0] >= w[1]) {
                    return invalid("breakpoints must be positive and strictly increasing");
                }
                pieces.iter().try_for_each(|p| p.validate())
            }
            Self::DirichletPrior { c, g } => {
                if !(c.is_finite() && *c > 0.0) {
                    return invalid("Dirichlet prior needs c > 0");
                }
                g.validate()
            }
            Self::Sato { alpha } => {
                if alpha.is_finite() && *alpha > 0.0 {
                    Ok(())
                } else {
                    invalid("Sato family needs alpha > 0")
                }
            }
        }
    }

    /// `Ψ_t(x) = −log E[exp(−x Z_t)]`.
    pub fn psi(&self, t: f64, x: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        match self {
            Self::PiecewiseLevy { breakpoints, pieces } => {
                let mut lo = 0.0;
                let mut acc = 0.0;
                for (i, piece) in pieces.iter().enumerate() {
                    let hi = breakpoints.get(i).copied().unwrap_or(f64::INFINITY);
                    let len = t.min(hi) - lo;
                    if len <= 0.0 {
                        break;
                    }
                    acc += len * piece.psi(x);
                    lo = hi;
                }
                acc
            }
            Self::DirichletPrior { c, g } => {
                let a = c * (1.0 - g.cdf(t));
                if a <= 0.0 {
                    return f64::INFINITY;
                }
                ln_gamma(c + x) - ln_gamma(*c) - ln_gamma(a + x) + ln_gamma(a)
            }
            Self::Sato { alpha } => alpha * (x * t.max(0.0)).ln_1p(),
        }
    }

    /// `Ψ_t(k) − Ψ_t(k−1)` for integer `k ≥ 1`.
    pub fn psi_increment(&self, t: f64, k: usize) -> f64 {
        match self {
            Self::DirichletPrior { c, g } => {
                let a = c * (1.0 - g.cdf(t));
                let j = (k - 1) as f64;
                ((c + j) / (a + j)).ln()
            }
            _ => self.psi(t, k as f64) - self.psi(t, (k - 1) as f64),
        }
    }

    /// Probes that `t ↦ Ψ_t` is non-decreasing and that `Ψ_t − Ψ_s` passes
    /// the Bernstein sign probes, for consecutive pairs of `times`.
    pub fn check_increments(&self, times: &[f64]) -> bool {
        let mut ts = sorted_asc(times);
        ts.dedup();
        ts.windows(2).all(|w| {
            let (s, t) = (w[0], w[1]);
            let f = |x: f64| self.psi(t, x) - self.psi(s, x);
            let finite = (1..=8).all(|k| self.psi(t, k as f64).is_finite());
            !finite || (probe_points().iter().all(|x| f(*x) >= -1e-12) && bernstein_probe(f, false))
        })
    }
}

/// `exp(−Σ_j [Ψ_{x_(j)}(d−j+1) − Ψ_{x_(j)}(d−j)])` with ascending order statistics.
pub fn additive_survival(spec: &AdditiveFamilySpec, x: &[f64]) -> Result<f64> {
    spec.validate()?;
    if x.is_empty() {
        return invalid("need at least one coordinate");
    }
    if x.iter().any(|v| v.is_nan()) {
        return invalid("survival arguments must not be NaN");
    }
    if !matches!(spec, AdditiveFamilySpec::DirichletPrior { .. }) && x.iter().any(|v| *v < 0.0) {
        return invalid("survival arguments must be non-negative");
    }
    let d = x.len();
    let s = sorted_asc(x);
    let total: f64 = (1..=d).map(|j| spec.psi_increment(s[j - 1], d - j + 1)).sum();
    Ok((-total).exp())
}

/// Dirichlet-prior samples by the predictive urn: each new coordinate copies
/// a uniformly chosen earlier one with probability `k/(c+k)`.
#[derive(Debug, Clone)]
pub struct DirichletUrn {
    pub c: f64,
    pub g: BaseDistSpec,
    pub d: usize,
}

impl DirichletUrn {
    pub fn new(c: f64, g: BaseDistSpec, d: usize) -> Result<Self> {
        AdditiveFamilySpec::DirichletPrior { c, g: g.clone() }.validate()?;
        if d == 0 {
            return invalid("dimension must be at least 1");
        }
        Ok(Self { c, g, d })
    }
}

impl RowSampler for DirichletUrn {
    fn dim(&self) -> usize {
        self.d
    }
    fn fill_row(&self, rng: &mut dyn RngCore, out: &mut [f64]) -> Result<()> {
        out[0] = self.g.sample(rng);
        for k in 1..self.d {
            let kf = k as f64;
            out[k] = if rng.random::<f64>() < kf / (self.c + kf) {
                out[rng.random_range(0..k)]
            } else {
                self.g.sample(rng)
            };
        }
        Ok(())
    }
    fn describe(&self) -> String {
        format!("dirichlet_prior(c={}, d={})", self.c, self.d)
    }
}

pub fn sample_dp<R: RngCore>(c: f64, g: &BaseDistSpec, d: usize, n: usize, rng: &mut R) -> Result<SampleMatrix> {
    draw(&DirichletUrn::new(c, g.clone(), d)?, n, rng)
}

/// `u_[1] ∏_{k≥2} (c u_[k] + k − 1)/(c + k − 1)`.
pub fn dp_copula_eval(c: f64, u: &[f64]) -> Result<f64> {
    if !(c > 0.0 && c.is_finite()) {
        return invalid("Dirichlet prior needs c > 0");
    }
    if u.is_empty() {
        return invalid("need at least one coordinate");
    }
    check_unit_cube(u, u.len())?;
    let s = sorted_asc(u);
    let mut out = s[0];
    for (i, v) in s.iter().enumerate().skip(1) {
        let j = i as f64;
        out *= (c * v + j) / (c + j);
    }
    Ok(out)
}

/// `(∏_k ((d−k) x_[k] + 1)/((d−k+1) x_[k] + 1))^α`.
pub fn sato_survival(alpha: f64, x: &[f64]) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return invalid("Sato family needs alpha > 0");
    }
    if x.is_empty() {
        return invalid("need at least one coordinate");
    }
    if x.iter().any(|v| v.is_nan() || *v < 0.0) {
        return invalid("survival arguments must be non-negative");
    }
    let d = x.len();
    let s = sorted_asc(x);
    let log: f64 = (1..=d)
        .map(|k| {
            let v = s[k - 1];
            ((d - k) as f64 * v).ln_1p() - ((d - k + 1) as f64 * v).ln_1p()
        })
        .sum();
    Ok((alpha * log).exp())
}

/// Sato-frailty law; sampled through conditional inversion of its survival function.
#[derive(Debug, Clone, Copy)]
pub struct SatoFrailty {
    pub alpha: f64,
    pub d: usize,
}

impl SatoFrailty {
    pub fn new(alpha: f64, d: usize) -> Result<Self> {
        AdditiveFamilySpec::Sato { alpha }.validate()?;
        if d == 0 {
            return invalid("dimension must be at least 1");
        }
        Ok(Self { alpha, d })
    }

    pub fn survival(&self, x: &[f64]) -> f64 {
        sato_survival(self.alpha, x).unwrap_or(f64::NAN)
    }
}

/// Laplace exponent of an infinitely divisible law on `[0, ∞)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BernsteinSpec {
    /// `α log(1 + x)`.
    Gamma { alpha: f64 },
    CompoundPoisson(CompoundPoissonSubordinatorSpec),
    /// `a·1{x > 0}`.
    Kill { rate: f64 },
}

impl BernsteinSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Gamma { alpha } if !(alpha.is_finite() && *alpha > 0.0) => invalid("Gamma exponent needs alpha > 0"),
            Self::CompoundPoisson(s) => s.validate(),
            Self::Kill { rate } if !(rate.is_finite() && *rate > 0.0) => invalid("kill rate must be positive"),
            _ => Ok(()),
        }
    }

    pub fn psi(&self, x: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        match self {
            Self::Gamma { alpha } => alpha * x.ln_1p(),
            Self::CompoundPoisson(s) => s.psi(x),
            Self::Kill { rate } => *rate,
        }
    }

    /// `Ψ'(x)` for `x > 0`.
    pub fn dpsi(&self, x: f64) -> f64 {
        match self {
            Self::Gamma { alpha } => alpha / (1.0 + x),
            Self::CompoundPoisson(s) => s.drift + s.jumps.iter().map(|j| j.rate * j.size * (-j.size * x).exp()).sum::<f64>(),
            Self::Kill { .. } => 0.0,
        }
    }
}

const PROBE_POINTS: usize = 20;
const PROBE_ORDER: usize = 6;
const PROBE_REL_TOL: f64 = 1e-8;

fn probe_points() -> Vec<f64> {
    (0..PROBE_POINTS)
        .map(|i| 10f64.powf(-2.0 + 4.0 * i as f64 / (PROBE_POINTS - 1) as f64))
        .collect()
}

/// Sign probes of a Bernstein function `f`: `f ≥ 0` and
/// `(−1)^{n−1} Δ_h^n f(x) ≥ 0` for `n = 1..6`, `h = x/100`, at 20 log-spaced
/// points in `[0.01, 100]`. Forward differences of a function with completely
/// monotone derivative carry the exact sign, so only rounding needs slack.
fn bernstein_probe<F: Fn(f64) -> f64>(f: F, check_value: bool) -> bool {
    probe_points().into_iter().all(|x| {
        let h = 1e-2 * x;
        let vals: Vec<f64> = (0..=PROBE_ORDER).map(|j| f(x + j as f64 * h)).collect();
        if vals.iter().any(|v| !v.is_finite()) {
            return false;
        }
        if check_value && vals[0] < -PROBE_REL_TOL * vals[0].abs().max(1.0) {
            return false;
        }
        (1..=PROBE_ORDER).all(|n| {
            let mut diff = 0.0;
            let mut scale = 0.0;
            for (j, v) in vals.iter().take(n + 1).enumerate() {
                let c = binomial(n, j);
                diff += if (n - j) % 2 == 0 { c * v } else { -c * v };
                scale += c * v.abs();
            }
            let signed = if n % 2 == 1 { diff } else { -diff };
            signed >= -PROBE_REL_TOL * scale
        })
    })
}

/// Whether `Ψ` passes the self-decomposability probes: `Ψ(0+) = 0` and
/// `x ↦ xΨ'(x)` is Bernstein at the probe points.
pub fn check_self_decomposable(spec: &BernsteinSpec) -> Result<bool> {
    spec.validate()?;
    if spec.psi(1e-12) > 1e-8 {
        return Ok(false);
    }
    Ok(bernstein_probe(|x| x * spec.dpsi(x), true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lack_of_memory::{b_from_lambda, mo_survival, JumpAtom};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn exps(rates: &[f64]) -> ShockSurvivalSpec {
        ShockSurvivalSpec { by_cardinality: rates.iter().map(|r| ShockSurvival::Exponential { rate: *r }).collect() }
    }

    #[test]
    fn idiosyncratic_and_global_shocks() {
        let u = [0.3, 0.8, 0.55];
        let indep = exshock_copula_eval(&exps(&[1.0, 0.0, 0.0]), &u).unwrap();
        assert!((indep - 0.3 * 0.8 * 0.55).abs() < 1e-10);
        let global = exshock_copula_eval(&exps(&[0.0, 0.0, 2.0]), &u).unwrap();
        assert!((global - 0.3).abs() < 1e-10);
    }

    #[test]
    fn exponential_shocks_match_marshall_olkin() {
        let lam = [0.4, 0.3, 0.2, 0.5];
        let spec = exps(&lam);
        let b = b_from_lambda(&lam).unwrap();
        let rate1 = -b.b().values()[1].ln();
        for u in [[0.2, 0.5, 0.9, 0.7], [0.6, 0.6, 0.6, 0.6], [0.05, 0.99, 0.4, 0.31]] {
            let x: Vec<f64> = u.iter().map(|v: &f64| -v.ln() / rate1).collect();
            let oracle = mo_survival(&b, &x).unwrap();
            let got = exshock_copula_eval(&spec, &u).unwrap();
            assert!((got - oracle).abs() < 1e-9, "{got} vs {oracle}");
            let direct = ExShock::new(&spec).unwrap().survival(&x).unwrap();
            assert!((direct - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn shock_sampler_matches_copula_on_diagonal() {
        let spec = ShockSurvivalSpec {
            by_cardinality: vec![
                ShockSurvival::Weibull { rate: 1.0, shape: 1.5 },
                ShockSurvival::Pareto { alpha: 2.0, scale: 1.0 },
                ShockSurvival::Exponential { rate: 0.3 },
            ],
        };
        let m = ExShock::new(&spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = exshock_sample(&spec, 3, 40_000, &mut rng).unwrap();
        for u in [0.3, 0.5, 0.8] {
            let t = generalized_inverse_decreasing(|x| m.marginal_survival(x), u, 1e-12);
            let (p, se) = s.empirical_survival(&[t, t, t]);
            let c = m.copula(&[u, u, u]).unwrap();
            assert!((p - c).abs() < 4.0 * se + 1e-3, "u={u}: {p} vs {c}");
        }
    }

    #[test]
    fn shock_dimension_cap() {
        let spec = exps(&[1.0; 21]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(exshock_sample(&spec, 21, 1, &mut rng), Err(Error::DimensionCap { .. })));
    }

    #[test]
    fn step_shocks_sample_and_evaluate() {
        let h = ShockSurvival::Step { breakpoints: vec![1.0, 2.0], values: vec![0.5, 0.0] };
        h.validate().unwrap();
        assert_eq!(h.survival(0.5), 1.0);
        assert_eq!(h.survival(1.0), 0.5);
        assert_eq!(h.survival(3.0), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 20_000;
        let ones = (0..n).filter(|_| h.sample(&mut rng) == 1.0).count() as f64 / n as f64;
        assert!((ones - 0.5).abs() < 0.02);
    }

    #[test]
    fn levy_case_reduces_to_marshall_olkin() {
        let sub = CompoundPoissonSubordinatorSpec { drift: 0.2, kill: 0.1, jumps: vec![JumpAtom { size: 0.7, rate: 1.3 }] };
        let spec = AdditiveFamilySpec::PiecewiseLevy { breakpoints: vec![], pieces: vec![sub.clone()] };
        let b = sub.b_sequence(3).unwrap();
        for x in [[0.0, 0.0, 0.0], [0.5, 1.2, 0.1], [2.0, 2.0, 0.3], [0.0, 3.0, 1.0]] {
            let got = additive_survival(&spec, &x).unwrap();
            let oracle = mo_survival(&b, &x).unwrap();
            assert!((got - oracle).abs() < 1e-12, "{got} vs {oracle}");
        }
    }

    #[test]
    fn additive_survival_margins() {
        let spec = AdditiveFamilySpec::Sato { alpha: 1.7 };
        assert_eq!(additive_survival(&spec, &[0.0, 0.0]).unwrap(), 1.0);
        let x = 0.8;
        let one = additive_survival(&spec, &[x]).unwrap();
        assert!((one - (-spec.psi(x, 1.0)).exp()).abs() < 1e-15);
    }

    #[test]
    fn sato_closed_form_agrees_with_additive_form() {
        let alpha = 0.9;
        assert!((sato_survival(alpha, &[1.5]).unwrap() - 2.5f64.powf(-alpha)).abs() < 1e-15);
        assert_eq!(sato_survival(alpha, &[0.0, 0.0, 0.0]).unwrap(), 1.0);
        let spec = AdditiveFamilySpec::Sato { alpha };
        for a in [0.0, 0.3, 1.0, 2.5] {
            for b in [0.1, 0.7, 4.0] {
                for c in [0.0, 1.1, 3.3] {
                    let x = [a, b, c];
                    let d = (sato_survival(alpha, &x).unwrap() - additive_survival(&spec, &x).unwrap()).abs();
                    assert!(d < 1e-12);
                }
            }
        }
    }

    #[test]
    fn dirichlet_copula_values() {
        assert!((dp_copula_eval(1.0, &[0.5, 0.5]).unwrap() - 0.375).abs() < 1e-15);
        assert_eq!(dp_copula_eval(2.0, &[0.4, 0.0, 0.9]).unwrap(), 0.0);
        let u = [0.3, 0.6, 0.9];
        assert!((dp_copula_eval(1e8, &u).unwrap() - 0.3 * 0.6 * 0.9).abs() < 1e-6);
    }

    #[test]
    fn dirichlet_additive_form_is_the_copula() {
        let g = BaseDistSpec::Uniform { lo: 0.0, hi: 1.0 };
        let spec = AdditiveFamilySpec::DirichletPrior { c: 2.5, g };
        let x = [0.2, 0.7, 0.45];
        let u: Vec<f64> = x.iter().map(|v| 1.0 - v).collect();
        let a = additive_survival(&spec, &x).unwrap();
        let b = dp_copula_eval(2.5, &u).unwrap();
        assert!((a - b).abs() < 1e-12);
        // the log-gamma form of Ψ_t agrees with the Frullani increments
        let t = 0.35;
        for k in 1..4 {
            let inc = spec.psi(t, k as f64) - spec.psi(t, (k - 1) as f64);
            assert!((inc - spec.psi_increment(t, k)).abs() < 1e-10);
        }
    }

    #[test]
    fn dirichlet_urn_limits() {
        let g = BaseDistSpec::Uniform { lo: 0.0, hi: 1.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = sample_dp(1e-6, &g, 4, 2000, &mut rng).unwrap();
        let equal = s.rows().filter(|r| r.iter().all(|v| *v == r[0])).count();
        assert!(equal >= 1995);
        let s = sample_dp(1.0, &g, 2, 40_000, &mut rng).unwrap();
        for x in [0.25, 0.5, 0.8] {
            let (p, se) = s.empirical_cdf(&[x, x]);
            let exact = x * (x + 1.0) / 2.0;
            assert!((p - exact).abs() < 4.0 * se, "{p} vs {exact}");
        }
    }

    #[test]
    fn increments_of_families_are_bernstein() {
        let times = [0.1, 0.5, 1.0, 2.0, 5.0];
        assert!(AdditiveFamilySpec::Sato { alpha: 2.0 }.check_increments(&times));
        let dp = AdditiveFamilySpec::DirichletPrior { c: 3.0, g: BaseDistSpec::Exponential { rate: 1.0 } };
        assert!(dp.check_increments(&times));
        let lv = AdditiveFamilySpec::PiecewiseLevy {
            breakpoints: vec![1.0],
            pieces: vec![
                CompoundPoissonSubordinatorSpec { drift: 1.0, kill: 0.0, jumps: vec![] },
                CompoundPoissonSubordinatorSpec { drift: 0.0, kill: 0.0, jumps: vec![JumpAtom { size: 1.0, rate: 2.0 }] },
            ],
        };
        assert!(lv.check_increments(&times));
    }

    #[test]
    fn self_decomposability_probes() {
        assert!(check_self_decomposable(&BernsteinSpec::Gamma { alpha: 1.3 }).unwrap());
        assert!(!check_self_decomposable(&BernsteinSpec::Kill { rate: 0.5 }).unwrap());
        let cp = BernsteinSpec::CompoundPoisson(CompoundPoissonSubordinatorSpec {
            drift: 0.0,
            kill: 0.0,
            jumps: vec![JumpAtom { size: 1.0, rate: 1.0 }],
        });
        // hand derivative of x e^{−x} is (1 − x) e^{−x}: negative past x = 1
        let negative_somewhere = probe_points().iter().any(|x| (1.0 - x) * (-x).exp() < 0.0);
        assert!(negative_somewhere);
        assert_eq!(check_self_decomposable(&cp).unwrap(), !negative_somewhere);
    }

    #[test]
    fn specs_round_trip_json() {
        let spec: AdditiveFamilySpec =
            serde_json::from_str(r#"{"kind":"dirichlet_prior","c":2,"g":{"family":"normal","mean":0,"sd":1}}"#).unwrap();
        assert!(spec.validate().is_ok());
        let sh: ShockSurvivalSpec =
            serde_json::from_str(r#"[{"kind":"exponential","rate":1},{"kind":"pareto","alpha":2}]"#).unwrap();
        assert_eq!(sh.by_cardinality.len(), 2);
        let b: BernsteinSpec = serde_json::from_str(r#"{"kind":"compound_poisson","jumps":[{"size":1,"rate":1}]}"#).unwrap();
        assert!(b.validate().is_ok());
    }
}
