//! Command-line front end: `sample`, `eval`, `check`, `verify`, `diagnose`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::diagnostics::{
    compare_with_closed_form, empirical_quantile, kendall_tau, majorization_report, quantile_grid, radial_symmetry_report,
    tie_frequency, ConditionalInversion, EventKind, MarginalRef, GRID_LEVELS,
};
use crate::error::Error;
use crate::extreme_value::{extreme_value_copula_eval, minstable_survival, stdf_eval, LogisticDirect, MinStableSeries, StdfSpec};
use crate::lack_of_memory::{
    b_from_lambda, b_from_p, geo_survival, is_ciid_extendible, lambda_from_b, mo_survival, CompoundPoissonSubordinatorSpec,
    Flavor, GeoCiid, GeoShocks, LomParameterSeq, MoCiid, MoShocks, ShockRateSpec,
};
use crate::mixtures::{archimedean_copula_eval, ArchimedeanGenerator, ArchimedeanSampler, ExchNormal, L1Ciid, LinfCiid, MixingLawSpec, SphericalCiid};
use crate::moments::{hausdorff_extendible, moment_sequence, BinaryMixture, ExtendibilityVerdict, MonotoneSequence, PolyaUrn};
use crate::numerics::generalized_inverse_decreasing;
use crate::sampling::{draw_seeded, RowSampler, SampleMatrix};
use crate::shock_models::{additive_survival, dp_copula_eval, exshock_copula_eval, sato_survival, AdditiveFamilySpec, BaseDistSpec, ExShock, DirichletUrn, ShockSurvivalSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_VERIFY_FAILED: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn validation(msg: impl Into<String>) -> Self {
        Self { code: EXIT_VALIDATION, message: msg.into() }
    }
    fn io(msg: impl Into<String>) -> Self {
        Self { code: EXIT_IO, message: msg.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io(_) | Error::Csv(_) => EXIT_IO,
            _ => EXIT_VALIDATION,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::io(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "ciid", version, about = "Samplers, closed forms and checks for conditionally iid laws")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw n rows and write them as CSV.
    Sample(SampleArgs),
    /// Evaluate a closed form at one point.
    Eval(EvalArgs),
    /// Decide extendibility of a sequence-parameterized model.
    Check(ModelArgs),
    /// Compare a seeded sample with the closed form on a grid.
    Verify(VerifyArgs),
    /// Run empirical diagnostics on a CSV sample.
    Diagnose(DiagnoseArgs),
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Model JSON, inline or as a file path.
    #[arg(long)]
    pub model: Option<String>,
    /// Extra model field as KEY=VALUE (VALUE is parsed as JSON when possible).
    #[arg(long = "param", value_name = "KEY=VALUE")]
    pub params: Vec<String>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub seed: u64,
    /// Output CSV path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (0 = all cores). Output does not depend on it.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalKind {
    Survival,
    Cdf,
    Copula,
    Stdf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Comma-separated coordinates; `inf` is accepted.
    #[arg(long, allow_hyphen_values = true)]
    pub point: String,
    #[arg(long, value_enum, default_value_t = EvalKind::Survival)]
    pub kind: EvalKind,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 100_000)]
    pub n: usize,
    #[arg(long)]
    pub seed: u64,
    /// Grid as a JSON array of points, inline or as a file path.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Also write the per-point report as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    /// CSV file with header x1,...,xd.
    pub csv: PathBuf,
    /// Comma-separated subset of kendall, majorization, radial, ties.
    #[arg(long, default_value = "kendall,majorization,radial,ties")]
    pub tests: String,
    /// Centre for the radial-symmetry test; pooled median by default.
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    /// Evaluation point for the majorization check; pooled median by default.
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<f64>,
}

fn default_sigma() -> f64 {
    1.0
}

fn default_base() -> BaseDistSpec {
    BaseDistSpec::Uniform { lo: 0.0, hi: 1.0 }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolyaParams {
    pub r: u32,
    pub b: u32,
}

/// Model description accepted by every subcommand, tagged by `family`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    ExchNormal {
        d: usize,
        #[serde(default)]
        mu: f64,
        #[serde(default = "default_sigma")]
        sigma: f64,
        rho: f64,
    },
    Spherical { d: usize, m: MixingLawSpec },
    L1 { d: usize, m: MixingLawSpec },
    Linf { d: usize, m: MixingLawSpec },
    Archimedean { d: usize, m: MixingLawSpec },
    /// Exchangeable `{0,1}^d` law from a moment sequence `b`, a mixing law `m`
    /// on `[0,1]`, or a Pólya urn.
    Binary {
        d: Option<usize>,
        b: Option<Vec<f64>>,
        m: Option<MixingLawSpec>,
        polya: Option<PolyaParams>,
    },
    MarshallOlkin {
        d: Option<usize>,
        b: Option<Vec<f64>>,
        shocks: Option<ShockRateSpec>,
        subordinator: Option<CompoundPoissonSubordinatorSpec>,
    },
    Geometric {
        d: Option<usize>,
        b: Option<Vec<f64>>,
        shocks: Option<ShockRateSpec>,
        y: Option<MixingLawSpec>,
    },
    Minstable {
        d: usize,
        stdf: StdfSpec,
        rate: Option<f64>,
        #[serde(default)]
        direct: bool,
    },
    Exshock { shocks: ShockSurvivalSpec },
    DirichletPrior {
        d: usize,
        c: f64,
        #[serde(default = "default_base")]
        g: BaseDistSpec,
    },
    Sato { d: usize, alpha: f64 },
}

type Evaluator = Box<dyn Fn(&[f64]) -> crate::Result<f64> + Sync>;

/// A validated model with the operations its family supports.
pub struct Model {
    pub family: String,
    pub d: usize,
    sampler: Option<Box<dyn RowSampler>>,
    survival: Option<Evaluator>,
    cdf: Option<Evaluator>,
    copula: Option<Evaluator>,
    stdf: Option<Evaluator>,
    check: Option<Box<dyn Fn() -> crate::Result<ExtendibilityVerdict>>>,
    /// Continuous margins, so the survival copula follows by marginal inversion.
    continuous: bool,
    verify_kind: EventKind,
    grid: Option<Vec<Vec<f64>>>,
}

fn lower_clamped(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| v.max(0.0)).collect()
}

fn check_len(x: &[f64], d: usize) -> crate::Result<()> {
    if x.len() != d {
        return Err(Error::InvalidParameter(format!("point has {} coordinates, model has {d}", x.len())));
    }
    if x.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidParameter("point contains NaN".into()));
    }
    Ok(())
}

fn exactly_one<T>(opts: &[bool], what: &str) -> CliResult<()> {
    let _ = std::marker::PhantomData::<T>;
    if opts.iter().filter(|b| **b).count() != 1 {
        return Err(CliError::validation(format!("give exactly one of {what}")));
    }
    Ok(())
}

fn resolve_dim(explicit: Option<usize>, implied: &[Option<usize>]) -> CliResult<usize> {
    let mut dims = implied.iter().flatten().copied();
    let first = explicit.or_else(|| dims.next());
    match first {
        Some(d) if d >= 1 => {
            if implied.iter().flatten().any(|v| *v != d) {
                return Err(CliError::validation("dimension disagrees with the parameter sequence"));
            }
            Ok(d)
        }
        _ => Err(CliError::validation("cannot determine the dimension; set d")),
    }
}

impl ModelSpec {
    pub fn build(&self) -> CliResult<Model> {
        let mut m = Model {
            family: self.family_name().to_string(),
            d: 0,
            sampler: None,
            survival: None,
            cdf: None,
            copula: None,
            stdf: None,
            check: None,
            continuous: true,
            verify_kind: EventKind::Survival,
            grid: None,
        };
        match self.clone() {
            ModelSpec::ExchNormal { d, mu, sigma, rho } => {
                let law = ExchNormal::new(mu, sigma, rho, d)?;
                m.d = d;
                let l = law.clone();
                m.survival = Some(Box::new(move |x| Ok(l.survival(x))));
                m.sampler = Some(Box::new(law));
            }
            ModelSpec::Spherical { d, m: mix } => {
                let law = SphericalCiid::new(mix, d)?;
                m.d = d;
                let l = law.clone();
                m.survival = Some(Box::new(move |x| Ok(l.survival(x))));
                m.sampler = Some(Box::new(law));
            }
            ModelSpec::L1 { d, m: mix } => {
                let law = L1Ciid::new(mix.clone(), d)?;
                let gen = ArchimedeanGenerator::new(mix)?;
                m.d = d;
                let l = law.clone();
                m.survival = Some(Box::new(move |x| Ok(l.survival(&lower_clamped(x)))));
                m.copula = Some(Box::new(move |u| archimedean_copula_eval(&gen, u)));
                m.sampler = Some(Box::new(law));
            }
            ModelSpec::Linf { d, m: mix } => {
                let law = LinfCiid::new(mix, d)?;
                m.d = d;
                let l = law.clone();
                m.survival = Some(Box::new(move |x| Ok(l.survival(&lower_clamped(x)))));
                m.sampler = Some(Box::new(law));
            }
            ModelSpec::Archimedean { d, m: mix } => {
                let inner = L1Ciid::new(mix.clone(), d)?;
                let gen = ArchimedeanGenerator::new(mix)?;
                m.d = d;
                let g2 = gen.clone();
                m.cdf = Some(Box::new(move |u| archimedean_copula_eval(&g2, &clamp_unit(u))));
                m.copula = Some(Box::new(move |u| archimedean_copula_eval(&gen, u)));
                m.sampler = Some(Box::new(ArchimedeanSampler { inner }));
                m.verify_kind = EventKind::Cdf;
                m.grid = Some(quantile_grid(|p| p, d));
            }
            ModelSpec::Binary { d, b, m: mix, polya } => {
                exactly_one::<()>(&[b.is_some(), mix.is_some(), polya.is_some()], "b, m or polya")?;
                let dd = resolve_dim(d, &[b.as_ref().and_then(|v| v.len().checked_sub(1))])?;
                let seq = match (&b, &mix, &polya) {
                    (Some(b), _, _) => MonotoneSequence::new(b.clone())?,
                    (_, Some(mx), _) => {
                        if !mx.on_unit_interval() {
                            return Err(Error::UnsupportedLaw(format!("{} is not supported on [0,1]", mx.name())).into());
                        }
                        mx.validate()?;
                        m.sampler = Some(Box::new(BinaryMixture { m: mx.clone(), d: dd }));
                        moment_sequence(mx, dd)?
                    }
                    (_, _, Some(p)) => {
                        if p.r == 0 || p.b == 0 {
                            return Err(CliError::validation("the urn needs at least one ball of each colour"));
                        }
                        m.sampler = Some(Box::new(PolyaUrn { r: p.r, b: p.b, d: dd }));
                        let beta = MixingLawSpec::Beta { p: f64::from(p.r), q: f64::from(p.b) };
                        moment_sequence(&beta, dd)?
                    }
                    _ => unreachable!(),
                };
                m.d = dd;
                m.continuous = false;
                let bv = seq.values().to_vec();
                m.survival = Some(Box::new(move |x| {
                    // P(X > x) for X ∈ {0,1}^d is b_j with j = #{k : 0 ≤ x_k < 1}
                    if x.iter().any(|v| *v >= 1.0) {
                        return Ok(0.0);
                    }
                    Ok(bv[x.iter().filter(|v| **v >= 0.0).count()])
                }));
                let s2 = seq.clone();
                m.check = Some(Box::new(move || hausdorff_extendible(&s2)));
                m.grid = Some(
                    (0..=dd)
                        .map(|j| (0..dd).map(|k| if k < j { 0.5 } else { -0.5 }).collect())
                        .chain((1..dd).map(|j| (0..dd).map(|k| if (k + j) % 2 == 0 { 0.5 } else { -0.5 }).collect()))
                        .collect(),
                );
            }
            ModelSpec::MarshallOlkin { d, b, shocks, subordinator } => {
                exactly_one::<()>(&[b.is_some(), shocks.is_some(), subordinator.is_some()], "b, shocks or subordinator")?;
                let implied = [b.as_ref().and_then(|v| v.len().checked_sub(1)), shocks.as_ref().and_then(ShockRateSpec::implied_dim)];
                let dd = resolve_dim(d, &implied)?;
                m.d = dd;
                let params: Option<LomParameterSeq> = if let Some(b) = &b {
                    let p = LomParameterSeq::new(MonotoneSequence::new(b.clone())?, Flavor::Continuous)?;
                    let rates = lambda_from_b(&p);
                    m.sampler = Some(Box::new(MoShocks::new(&ShockRateSpec::CardinalityRates(rates), dd)?));
                    Some(p)
                } else if let Some(s) = &shocks {
                    let sh = MoShocks::new(s, dd)?;
                    let sv = sh.clone();
                    m.survival = Some(Box::new(move |x| Ok(sv.survival(&lower_clamped(x)))));
                    m.sampler = Some(Box::new(sh));
                    s.exchangeable_rates(dd).ok().map(|l| b_from_lambda(&l)).transpose()?
                } else {
                    let sub = subordinator.clone().unwrap_or_default();
                    let p = sub.b_sequence(dd)?;
                    m.sampler = Some(Box::new(MoCiid::new(sub, dd)?));
                    Some(p)
                };
                if let Some(p) = params {
                    if m.survival.is_none() {
                        let pv = p.clone();
                        m.survival = Some(Box::new(move |x| mo_survival(&pv, &lower_clamped(x))));
                    }
                    m.check = Some(Box::new(move || is_ciid_extendible(&p)));
                }
            }
            ModelSpec::Geometric { d, b, shocks, y } => {
                exactly_one::<()>(&[b.is_some(), shocks.is_some(), y.is_some()], "b, shocks or y")?;
                let implied = [b.as_ref().and_then(|v| v.len().checked_sub(1)), shocks.as_ref().and_then(ShockRateSpec::implied_dim)];
                let dd = resolve_dim(d, &implied)?;
                m.d = dd;
                m.continuous = false;
                let params: Option<LomParameterSeq> = if let Some(b) = &b {
                    Some(LomParameterSeq::new(MonotoneSequence::new(b.clone())?, Flavor::Discrete)?)
                } else if let Some(s) = &shocks {
                    let sh = GeoShocks::new(s, dd)?;
                    let sv = sh.clone();
                    m.survival = Some(Box::new(move |x| Ok(sv.survival(&steps(x)))));
                    m.sampler = Some(Box::new(sh));
                    s.exchangeable_probs(dd).ok().map(|p| b_from_p(&p)).transpose()?
                } else {
                    let law = GeoCiid::new(y.clone().unwrap_or(MixingLawSpec::PointMass { m: 1.0 }), dd)?;
                    let p = law.b_sequence()?;
                    m.sampler = Some(Box::new(law));
                    Some(p)
                };
                if let Some(p) = params {
                    if m.survival.is_none() {
                        let pv = p.clone();
                        m.survival = Some(Box::new(move |x| geo_survival(&pv, &steps(x))));
                    }
                    m.check = Some(Box::new(move || is_ciid_extendible(&p)));
                }
            }
            ModelSpec::Minstable { d, stdf, rate, direct } => {
                stdf.validate()?;
                let rate = rate.unwrap_or_else(|| stdf.natural_rate());
                m.d = d;
                m.sampler = match (&stdf, direct) {
                    (StdfSpec::Logistic { theta }, true) => {
                        if !(*theta > 0.0 && *theta < 1.0) || !(rate > 0.0 && rate.is_finite()) || d == 0 {
                            return Err(CliError::validation("direct logistic sampler needs theta in (0,1), rate > 0, d >= 1"));
                        }
                        Some(Box::new(LogisticDirect { theta: *theta, rate, d }))
                    }
                    (_, true) => return Err(CliError::validation("direct sampling is only available for the logistic family")),
                    _ => Some(Box::new(MinStableSeries::new(&stdf, rate, d)?)),
                };
                let (s1, s2, s3) = (stdf.clone(), stdf.clone(), stdf);
                m.survival = Some(Box::new(move |x| minstable_survival(&s1, rate, &lower_clamped(x))));
                m.copula = Some(Box::new(move |u| extreme_value_copula_eval(&s2, u)));
                m.stdf = Some(Box::new(move |x| stdf_eval(&s3, x)));
            }
            ModelSpec::Exshock { shocks } => {
                let law = ExShock::new(&shocks)?;
                m.d = law.d();
                let l = law.clone();
                m.survival = Some(Box::new(move |x| l.survival(&lower_clamped(x))));
                m.copula = Some(Box::new(move |u| exshock_copula_eval(&shocks, u)));
                m.sampler = Some(Box::new(law));
            }
            ModelSpec::DirichletPrior { d, c, g } => {
                let urn = DirichletUrn::new(c, g.clone(), d)?;
                m.d = d;
                let fam = AdditiveFamilySpec::DirichletPrior { c, g };
                m.survival = Some(Box::new(move |x| additive_survival(&fam, x)));
                m.copula = Some(Box::new(move |u| dp_copula_eval(c, u)));
                m.sampler = Some(Box::new(urn));
            }
            ModelSpec::Sato { d, alpha } => {
                AdditiveFamilySpec::Sato { alpha }.validate()?;
                if d == 0 {
                    return Err(CliError::validation("dimension must be at least 1"));
                }
                m.d = d;
                m.survival = Some(Box::new(move |x| sato_survival(alpha, &lower_clamped(x))));
                if d <= crate::diagnostics::CONDITIONAL_DIM_CAP {
                    let f = move |x: &[f64]| sato_survival(alpha, x).unwrap_or(f64::NAN);
                    m.sampler = Some(Box::new(ConditionalInversion::new(f, d)?));
                }
            }
        }
        Ok(m)
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            Self::ExchNormal { .. } => "exch_normal",
            Self::Spherical { .. } => "spherical",
            Self::L1 { .. } => "l1",
            Self::Linf { .. } => "linf",
            Self::Archimedean { .. } => "archimedean",
            Self::Binary { .. } => "binary",
            Self::MarshallOlkin { .. } => "marshall_olkin",
            Self::Geometric { .. } => "geometric",
            Self::Minstable { .. } => "minstable",
            Self::Exshock { .. } => "exshock",
            Self::DirichletPrior { .. } => "dirichlet_prior",
            Self::Sato { .. } => "sato",
        }
    }
}

impl Default for CompoundPoissonSubordinatorSpec {
    fn default() -> Self {
        Self { drift: 1.0, kill: 0.0, jumps: vec![] }
    }
}

fn clamp_unit(u: &[f64]) -> Vec<f64> {
    u.iter().map(|v| v.clamp(0.0, 1.0)).collect()
}

/// Integer step counts `⌊max(x, 0)⌋` for discrete survival functions.
fn steps(x: &[f64]) -> Vec<u64> {
    x.iter().map(|v| if v.is_infinite() && *v > 0.0 { u64::MAX } else { v.max(0.0).floor() as u64 }).collect()
}

impl Model {
    fn unsupported(&self, what: &str) -> CliError {
        CliError::validation(format!("family {} does not support {what}", self.family))
    }

    pub fn sampler(&self) -> CliResult<&dyn RowSampler> {
        self.sampler.as_deref().ok_or_else(|| self.unsupported("sampling"))
    }

    pub fn survival(&self, x: &[f64]) -> CliResult<f64> {
        check_len(x, self.d)?;
        let f = self.survival.as_ref().ok_or_else(|| self.unsupported("survival evaluation"))?;
        Ok(f(x)?)
    }

    /// `P(X ≤ x)` by inclusion–exclusion over survival margins.
    pub fn cdf(&self, x: &[f64]) -> CliResult<f64> {
        check_len(x, self.d)?;
        if let Some(f) = &self.cdf {
            return Ok(f(x)?);
        }
        let f = self.survival.as_ref().ok_or_else(|| self.unsupported("cdf evaluation"))?;
        if self.d > 20 {
            return Err(Error::DimensionCap { d: self.d, cap: 20 }.into());
        }
        let mut total = 0.0;
        let mut y = vec![f64::NEG_INFINITY; self.d];
        for mask in 0u32..(1 << self.d) {
            for (k, v) in y.iter_mut().enumerate() {
                *v = if mask & (1 << k) != 0 { x[k] } else { f64::NEG_INFINITY };
            }
            let s = f(&y)?;
            total += if mask.count_ones() % 2 == 0 { s } else { -s };
        }
        Ok(total.clamp(0.0, 1.0))
    }

    fn marginal_survival(&self, t: f64) -> CliResult<f64> {
        let mut y = vec![f64::NEG_INFINITY; self.d];
        y[0] = t;
        self.survival(&y)
    }

    /// `inf{t : F̄_1(t) ≤ 1 − p}` by bracketing and bisection.
    pub fn marginal_quantile(&self, p: f64) -> CliResult<f64> {
        let target = 1.0 - p;
        let f = |t: f64| self.marginal_survival(t).unwrap_or(f64::NAN);
        self.marginal_survival(0.0)?;
        let mut lo = -1.0;
        while f(lo) <= target {
            lo = 2.0 * lo - 1.0;
            if lo < -1e300 {
                return Ok(f64::NEG_INFINITY);
            }
        }
        let x = lo + generalized_inverse_decreasing(|s| f(lo + s), target, 1e-12);
        Ok(x)
    }

    pub fn copula(&self, u: &[f64]) -> CliResult<f64> {
        check_len(u, self.d)?;
        if let Some(f) = &self.copula {
            return Ok(f(u)?);
        }
        if !self.continuous || self.survival.is_none() {
            return Err(self.unsupported("copula evaluation"));
        }
        if u.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(CliError::validation("copula arguments must lie in [0, 1]"));
        }
        if u.iter().any(|v| *v == 0.0) {
            return Ok(0.0);
        }
        let x: Vec<f64> = u.iter().map(|v| self.marginal_quantile(1.0 - v)).collect::<CliResult<_>>()?;
        self.survival(&x)
    }

    pub fn stdf(&self, x: &[f64]) -> CliResult<f64> {
        check_len(x, self.d)?;
        let f = self.stdf.as_ref().ok_or_else(|| self.unsupported("stdf evaluation"))?;
        Ok(f(x)?)
    }

    pub fn check(&self) -> CliResult<ExtendibilityVerdict> {
        let f = self.check.as_ref().ok_or_else(|| {
            CliError::validation(format!("family {} is not checkable (use binary, marshall_olkin or geometric)", self.family))
        })?;
        Ok(f()?)
    }

    pub fn default_grid(&self) -> CliResult<Vec<Vec<f64>>> {
        if let Some(g) = &self.grid {
            return Ok(g.clone());
        }
        let q: Vec<f64> = GRID_LEVELS.iter().map(|p| self.marginal_quantile(*p)).collect::<CliResult<_>>()?;
        let snapped: Vec<f64> = if self.continuous { q } else { q.iter().map(|v| (v + 1e-9).floor()).collect() };
        Ok(quantile_grid(
            |p| snapped[GRID_LEVELS.iter().position(|l| *l == p).unwrap_or(0)],
            self.d,
        ))
    }

    pub fn verify_kind(&self) -> EventKind {
        self.verify_kind
    }

    pub fn closed_form(&self, kind: EventKind, x: &[f64]) -> CliResult<f64> {
        match kind {
            EventKind::Survival => self.survival(x),
            EventKind::Cdf => self.cdf(x),
        }
    }
}

fn parse_json_or_file(src: &str) -> CliResult<Value> {
    let text = if src.trim_start().starts_with(['{', '[']) {
        src.to_string()
    } else {
        std::fs::read_to_string(src).map_err(|e| CliError::io(format!("cannot read {src}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| CliError::validation(format!("invalid JSON: {e}")))
}

/// Merges `--model` JSON with `--param` fields; a key given in both with
/// different values is an error.
pub fn load_model(args: &ModelArgs) -> CliResult<ModelSpec> {
    let mut map = match &args.model {
        Some(src) => match parse_json_or_file(src)? {
            Value::Object(m) => m,
            _ => return Err(CliError::validation("model JSON must be an object")),
        },
        None => Map::new(),
    };
    for kv in &args.params {
        let (k, v) = kv.split_once('=').ok_or_else(|| CliError::validation(format!("--param expects KEY=VALUE, got {kv:?}")))?;
        let val = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
        if let Some(old) = map.get(k) {
            if *old != val {
                return Err(CliError::validation(format!("--param {k}={v} conflicts with the model JSON value {old}")));
            }
        }
        map.insert(k.to_string(), val);
    }
    if map.is_empty() {
        return Err(CliError::validation("no model given; use --model or --param family=..."));
    }
    serde_json::from_value(Value::Object(map)).map_err(|e| CliError::validation(format!("invalid model: {e}")))
}

fn parse_point(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|t| crate::sampling::parse_real(t.trim()).map_err(CliError::from))
        .collect()
}

/// Fixed 12 significant digits with trailing zeros removed.
pub fn format_sig12(v: f64) -> String {
    if !v.is_finite() {
        return crate::sampling::format_real(v);
    }
    if v == 0.0 {
        return "0".into();
    }
    let exp = v.abs().log10().floor() as i32;
    let trim = |s: String| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if (-5..15).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = trim(format!("{v:.decimals$}"));
        if s == "-0" {
            "0".into()
        } else {
            s
        }
    } else {
        let s = format!("{v:.11e}");
        let (mant, e) = s.split_once('e').unwrap_or((&s, "0"));
        format!("{}e{}", trim(mant.to_string()), e)
    }
}

#[derive(Serialize)]
struct CheckOutput<'a> {
    family: &'a str,
    #[serde(flatten)]
    verdict: ExtendibilityVerdict,
}

#[derive(Serialize, Default)]
struct DiagnoseOutput {
    n: usize,
    d: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    kendall: Option<crate::diagnostics::Estimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    majorization: Option<crate::diagnostics::MajorizationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    radial: Option<crate::diagnostics::RadialReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ties: Option<f64>,
}

fn write_samples(s: &SampleMatrix, out: &Option<PathBuf>, stdout: &mut dyn Write) -> CliResult<()> {
    match out {
        Some(path) => {
            let f = File::create(path).map_err(|e| CliError::io(format!("cannot create {}: {e}", path.display())))?;
            let mut w = BufWriter::new(f);
            s.write_csv(&mut w)?;
            w.flush()?;
        }
        None => s.write_csv(stdout)?,
    }
    Ok(())
}

pub fn cmd_sample(args: &SampleArgs, out: &mut dyn Write) -> CliResult<()> {
    let model = load_model(&args.model)?.build()?;
    let s = draw_seeded(model.sampler()?, args.n, args.seed, args.threads)?;
    write_samples(&s, &args.out, out)
}

pub fn cmd_eval(args: &EvalArgs, out: &mut dyn Write) -> CliResult<()> {
    let model = load_model(&args.model)?.build()?;
    let x = parse_point(&args.point)?;
    let v = match args.kind {
        EvalKind::Survival => model.survival(&x)?,
        EvalKind::Cdf => model.cdf(&x)?,
        EvalKind::Copula => model.copula(&x)?,
        EvalKind::Stdf => model.stdf(&x)?,
    };
    writeln!(out, "{}", format_sig12(v))?;
    Ok(())
}

pub fn cmd_check(args: &ModelArgs, out: &mut dyn Write) -> CliResult<()> {
    let spec = load_model(args)?;
    let model = spec.build()?;
    let verdict = model.check()?;
    let o = CheckOutput { family: &model.family, verdict };
    writeln!(out, "{}", serde_json::to_string_pretty(&o).map_err(Error::from)?)?;
    Ok(())
}

/// Runs the verification; `Ok(false)` means the report failed.
pub fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write) -> CliResult<bool> {
    let model = load_model(&args.model)?.build()?;
    let grid: Vec<Vec<f64>> = match &args.grid {
        Some(src) => serde_json::from_value(parse_json_or_file(src)?)
            .map_err(|e| CliError::validation(format!("grid must be an array of points: {e}")))?,
        None => model.default_grid()?,
    };
    let samples = draw_seeded(model.sampler()?, args.n, args.seed, args.threads)?;
    let kind = model.verify_kind();
    let report = compare_with_closed_form(&samples, |x| model.closed_form(kind, x).map_err(|e| Error::InvalidParameter(e.message)), kind, &grid)?;
    writeln!(out, "{}", report.to_json()?)?;
    if let Some(path) = &args.out {
        let f = File::create(path).map_err(|e| CliError::io(format!("cannot create {}: {e}", path.display())))?;
        report.write_csv(BufWriter::new(f))?;
    }
    Ok(report.pass)
}

pub fn cmd_diagnose(args: &DiagnoseArgs, out: &mut dyn Write) -> CliResult<()> {
    let f = File::open(&args.csv).map_err(|e| CliError::io(format!("cannot open {}: {e}", args.csv.display())))?;
    let s = SampleMatrix::read_csv(BufReader::new(f))?;
    let mut pooled = s.data.clone();
    pooled.sort_by(f64::total_cmp);
    let median = empirical_quantile(&pooled, 0.5);
    let mut o = DiagnoseOutput { n: s.n, d: s.d, ..Default::default() };
    for t in args.tests.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        match t {
            "kendall" => {
                if s.d < 2 {
                    return Err(CliError::validation("kendall needs at least two columns"));
                }
                o.kendall = Some(kendall_tau(&s.column(0), &s.column(1))?);
            }
            "majorization" => o.majorization = Some(majorization_report(&s, args.x.unwrap_or(median), MarginalRef::Pooled)?),
            "radial" => o.radial = Some(radial_symmetry_report(&s, args.mu.unwrap_or(median))?),
            "ties" => o.ties = Some(tie_frequency(&s)?),
            other => return Err(CliError::validation(format!("unknown diagnostic {other:?}"))),
        }
    }
    writeln!(out, "{}", serde_json::to_string_pretty(&o).map_err(Error::from)?)?;
    Ok(())
}

/// Parses `args` and runs the command, writing results to `out` and
/// messages to `err`. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => EXIT_OK,
                _ => EXIT_VALIDATION,
            };
        }
    };
    let result = match &cli.command {
        Command::Sample(a) => cmd_sample(a, out).map(|_| EXIT_OK),
        Command::Eval(a) => cmd_eval(a, out).map(|_| EXIT_OK),
        Command::Check(a) => cmd_check(a, out).map(|_| EXIT_OK),
        Command::Verify(a) => cmd_verify(a, out).map(|ok| if ok { EXIT_OK } else { EXIT_VERIFY_FAILED }),
        Command::Diagnose(a) => cmd_diagnose(a, out).map(|_| EXIT_OK),
    };
    match result {
        Ok(code) => {
            if code == EXIT_VERIFY_FAILED {
                let _ = writeln!(err, "error: verification failed");
            }
            code
        }
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig12_formatting() {
        assert_eq!(format_sig12(0.5), "0.5");
        assert_eq!(format_sig12(0.375), "0.375");
        assert_eq!(format_sig12(1.0), "1");
        assert_eq!(format_sig12(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_sig12(123456.789), "123456.789");
        assert_eq!(format_sig12(2.5e-9), "2.5e-9");
        assert_eq!(format_sig12(0.0), "0");
    }

    #[test]
    fn param_conflicts_are_errors() {
        let args = ModelArgs {
            model: Some(r#"{"family":"sato","d":1,"alpha":1}"#.into()),
            params: vec!["alpha=2".into()],
        };
        let e = load_model(&args).unwrap_err();
        assert_eq!(e.code, EXIT_VALIDATION);
        let args = ModelArgs { model: None, params: vec!["family=sato".into(), "d=1".into(), "alpha=1".into()] };
        assert_eq!(load_model(&args).unwrap(), ModelSpec::Sato { d: 1, alpha: 1.0 });
    }

    #[test]
    fn inclusion_exclusion_cdf() {
        let m = ModelSpec::Sato { d: 2, alpha: 1.0 }.build().unwrap();
        let x = [0.7, 1.3];
        let f1 = |t: f64| 1.0 - 1.0 / (1.0 + t);
        let direct = 1.0 - (1.0 - f1(0.7)) - (1.0 - f1(1.3)) + sato_survival(1.0, &x).unwrap();
        assert!((m.cdf(&x).unwrap() - direct).abs() < 1e-14);
    }

    #[test]
    fn generic_copula_matches_closed_form() {
        let spec = ModelSpec::Exshock {
            shocks: serde_json::from_str(r#"[{"kind":"exponential","rate":1},{"kind":"exponential","rate":0.5}]"#).unwrap(),
        };
        let m = spec.build().unwrap();
        let u = [0.3, 0.8];
        let closed = m.copula(&u).unwrap();
        let mut generic = spec.build().unwrap();
        generic.copula = None;
        assert!((generic.copula(&u).unwrap() - closed).abs() < 1e-9);
    }

    #[test]
    fn marginal_quantiles_for_real_support() {
        let m = ModelSpec::ExchNormal { d: 2, mu: 1.0, sigma: 2.0, rho: 0.3 }.build().unwrap();
        assert!((m.marginal_quantile(0.5).unwrap() - 1.0).abs() < 1e-8);
        let m = ModelSpec::Sato { d: 1, alpha: 2.0 }.build().unwrap();
        let q = m.marginal_quantile(0.75).unwrap();
        assert!((q - (0.25f64.powf(-0.5) - 1.0)).abs() < 1e-9);
    }
}
