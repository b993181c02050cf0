//! One-factor static families: exchangeable normal, spherical (scale
//! mixtures of normals), ℓ1-norm symmetric / Archimedean, and ℓ∞-norm
//! symmetric laws.

mod law;

pub use law::{beta_moment, sample_positive_stable, MixingLawSpec};
pub(crate) use law::require_finite_support;

use rand::{Rng, RngCore};

use crate::error::{invalid, Result};
use crate::numerics::generalized_inverse_decreasing;
use crate::sampling::{draw, std_normal, unit_exp, RowSampler, SampleMatrix};

fn check_dim(d: usize) -> Result<()> {
    if d == 0 {
        invalid("dimension must be at least 1")
    } else {
        Ok(())
    }
}

/// `μ + σ(√ρ M + √(1−ρ) M_k)` with iid standard normal `M, M_1, …, M_d`.
#[derive(Debug, Clone)]
pub struct ExchNormal {
    pub mu: f64,
    pub sigma: f64,
    pub rho: f64,
    pub d: usize,
}

impl ExchNormal {
    pub fn new(mu: f64, sigma: f64, rho: f64, d: usize) -> Result<Self> {
        check_dim(d)?;
        if !(0.0..=1.0).contains(&rho) {
            return invalid(format!("correlation {rho} outside [0,1] admits no conditionally iid representation"));
        }
        if !(sigma > 0.0 && sigma.is_finite()) || !mu.is_finite() {
            return invalid("need finite mu and sigma > 0");
        }
        Ok(Self { mu, sigma, rho, d })
    }

    /// Joint survival `P(X > x)`, by quadrature over the common factor.
    pub fn survival(&self, x: &[f64]) -> f64 {
        let (a, b) = (self.rho.sqrt(), (1.0 - self.rho).sqrt());
        if b == 0.0 {
            let z = x.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
            return crate::numerics::normal_sf((z - self.mu) / self.sigma);
        }
        let phi = |m: f64| (-0.5 * m * m).exp() / (2.0 * std::f64::consts::PI).sqrt();
        crate::numerics::integrate(
            |m| {
                let p: f64 = x
                    .iter()
                    .map(|xk| crate::numerics::normal_sf(((xk - self.mu) / self.sigma - a * m) / b))
                    .product();
                p * phi(m)
            },
            -9.0,
            9.0,
            1e-12,
        )
    }
}

impl RowSampler for ExchNormal {
    fn dim(&self) -> usize {
        self.d
    }
    fn fill_row(&self, rng: &mut dyn RngCore, out: &mut [f64]) -> Result<()> {
        let m = std_normal(rng);
        let (a, b) = (self.rho.sqrt(), (1.0 - self.rho).sqrt());
        for x in out.iter_mut() {
            *x = self.mu + self.sigma * (a * m + b * std_normal(rng));
        }
        Ok(())
    }
    fn describe(&self) -> String {
        format!("exch_normal(mu={}, sigma={}, rho={}, d={})", self.mu, self.sigma, self.rho, self.d)
    }
}

pub fn sample_exch_normal<R: RngCore>(mu: f64, sigma: f64, rho: f64, d: usize, n: usize, rng: &mut R) -> Result<SampleMatrix> {
    draw(&ExchNormal::new(mu, sigma, rho, d)?, n, rng)
}

/// Uniform law on the Euclidean unit sphere of `R^d`.
#[derive(Debug, Clone)]
pub struct UniformSphere {
    pub d: usize,
}

impl RowSampler for UniformSphere {
    fn dim(&self) -> usize {
        self.d
    }
    fn fill_row(&self, rng: &mut dyn RngCore, out: &mut [f64]) -> Result<()> {
        loop {
            for x in out.iter_mut() {
                *x = std_normal(rng);
            }
            let norm = out.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                out.iter_mut().for_each(|v| *v /= norm);
                return Ok(());
            }
        }
    }
    fn describe(&self) -> String {
        format!("uniform_sphere(d={})", self.d)
    }
}

pub fn sample_uniform_sphere<R: RngCore>(d: usize, n: usize, rng: &mut R) -> Result<SampleMatrix> {
    check_dim(d)?;
    draw(&UniformSphere { d }, n, rng)
}

/// `M·(Y_1, …, Y_d)` with iid standard normal `Y_k`.
#[derive(Debug, Clone)]
pub struct SphericalCiid {
    pub m: MixingLawSpec,
    pub d: usize,
}

impl SphericalCiid {
    pub fn new(m: MixingLawSpec, d: usize) -> Result<Self> {
        check_dim(d)?;
        m.validate()?;
        require_finite_support(&m)?;
        Ok(Self { m, d })
    }

    /// Joint survival `P(X > x) = E[∏ Φ̄(x_k / M)]`.
    pub fn survival(&self, x: &[f64]) -> f64 {
        self.m.expect(
            |m| {
                x.iter()
                    .map(|xk| {
                        if m == 0.0 {
                            f64::from(u8::from(*xk < 0.0))
                        } else {
                            crate::numerics::normal_sf(xk / m)
                        }
                    })
                    .product()
            },
            &[],
        )
    }
}

impl RowSampler for SphericalCiid {
    fn dim(&self) -> usize {
        self.d
    }
    fn fill_row(&self, rng: &mut dyn RngCore, out: &mut [f64]) -> Result<()> {
        let m = self.m.sample(rng);
        for x in out.iter_mut() {
            *x = m * std_normal(rng);
        }
        Ok(())
    }
    fn describe(&self) -> String {
        format!("spherical(M={}, d={})", self.m, self.d)
    }
}

pub fn sample_spherical_ciid<R: RngCore>(m: &MixingLawSpec, d: usize, n: usize, rng: &mut R) -> Result<SampleMatrix> {
    draw(&SphericalCiid::new(m.clone(), d)?, n, rng)
}

/// Williamson `d`-transform `E[(1 − x/R)_+^{d−1}]`.
pub fn williamson_transform(r: &MixingLawSpec, d: usize, x: f64) -> Result<f64> {
    check_dim(d)?;
    r.validate()?;
    if x < 0.0 || x.is_nan() {
        return invalid(format!("argument must be >= 0, got {x}"));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    let k = (d - 1) as i32;
    let f = |m: f64| if m > x { (1.0 - x / m).powi(k) } else { 0.0 };
    Ok(r.expect(f, &[x]).clamp(0.0, 1.0))
}

/// `R·(E_1, …, E_d)/‖E‖₁`, the ℓ1-norm symmetric law with radial part `R`.
#[derive(Debug, Clone)]
pub struct L1Symmetric {
    pub r: MixingLawSpec,
    pub d: usize,
}

impl L1Symmetric {
    pub fn survival(&self, x: &[f64]) -> Result<f64> {
        williamson_transform(&self.r, self.d, x.iter().sum())
    }
}

impl RowSampler for L1Symmetric {
    fn dim(&self) -> usize {
        self.d
    }
    fn fill_row(&self, rng: &mut dyn RngCore, out: &mut [f64]) -> Result<()> {
        let r = self.r.sample(rng);
        for x in out.iter_mut() {
            *x = unit_exp(rng);
        }
        let s: f64 = out.iter().sum();
        out.iter_mut().for_each(|v| *v = r * *v / s);
        Ok(())
    }
    fn describe(&self) -> String {
        format!("l1_symmetric(R={}, d={})", self.r, self.d)
    }
}

pub fn sample_l1_symmetric<R: RngCore>(r: &MixingLawSpec, d: usize, n: usize, rng: &mut R) -> Result<SampleMatrix> {
    check_dim(d)?;
    r.validate()?;
    require_finite_support(r)?;
    draw(&L1Symmetric { r: r.clone(), d }, n, rng)
}

/// `E/M` with iid unit exponentials `E_k`; joint survival `φ(‖x‖₁)` for the
/// Laplace transform `φ` of `M`.
#[derive(Debug, Clone)]
pub struct L1Ciid {
    pub m: MixingLawSpec,
    pub d: usize,
}

impl L1Ciid {
    pub fn new(m: MixingLawSpec, d: usize) -> Result<Self> {
        check_dim(d)?;
        m.validate()?;
        Ok(Self { m, d })
    }

    pub fn survival(&self, x: &[f64]) -> f64 {
        self.m.laplace(x.iter().map(|v| v.max(0.0)).sum())
    }
}

impl RowSampler for L1Ciid {
    fn dim(&self) -> usize {
        self.d
    }
    fn fill_row(&self, rng: &mut dyn RngCore, out: &mut [f64]) -> Result<()> {
        let m = self.m.sample(rng);
        for x in out.iter_mut() {
            let e = unit_exp(rng);
            *x = if m == f64::INFINITY { 0.0 } else { e / m };
        }
        Ok(())
    }
    fn describe(&self) -> String {
        format!("l1(M={}, d={})", self.m, self.d)
    }
}

pub fn sample_l1_ciid<R: RngCore>(m: &MixingLawSpec, d: usize, n: usize, rng: &mut R) -> Result<SampleMatrix> {
    draw(&L1Ciid::new(m.clone(), d)?, n, rng)
}

/// Archimedean generator: the Laplace transform `φ` of a mixing law.
#[derive(Debug, Clone)]
pub struct ArchimedeanGenerator {
    pub law: MixingLawSpec,
}

impl ArchimedeanGenerator {
    pub fn new(law: MixingLawSpec) -> Result<Self> {
        law.validate()?;
        Ok(Self { law })
    }

    pub fn phi(&self, x: f64) -> f64 {
        self.law.laplace(x)
    }

    /// Generalized inverse `inf{x ≥ 0 : φ(x) ≤ u}`.
    pub fn phi_inv(&self, u: f64) -> f64 {
        if u >= 1.0 {
            return 0.0;
        }
        generalized_inverse_decreasing(|x| self.phi(x), u, 1e-12)
    }
}

/// `φ(φ⁻¹(u_1) + … + φ⁻¹(u_d))`.
pub fn archimedean_copula_eval(gen: &ArchimedeanGenerator, u: &[f64]) -> Result<f64> {
    if u.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return invalid("copula arguments must lie in [0,1]");
    }
    if u.iter().any(|v| *v == 0.0) {
        return Ok(0.0);
    }
    let s: f64 = u.iter().map(|v| gen.phi_inv(*v)).sum();
    Ok(gen.phi(s).clamp(0.0, 1.0))
}

/// Samples of the Archimedean copula: `φ(X_k)` for `X` from [`L1Ciid`].
#[derive(Debug, Clone)]
pub struct ArchimedeanSampler {
    pub inner: L1Ciid,
}

impl RowSampler for ArchimedeanSampler {
    fn dim(&self) -> usize {
        self.inner.d
    }
    fn fill_row(&self, rng: &mut dyn RngCore, out: &mut [f64]) -> Result<()> {
        self.inner.fill_row(rng, out)?;
        out.iter_mut().for_each(|v| *v = self.inner.m.laplace(*v));
        Ok(())
    }
    fn describe(&self) -> String {
        format!("archimedean(M={}, d={})", self.inner.m, self.inner.d)
    }
}

/// The third-moment symmetry residual `φ(3φ⁻¹(½)) − 1.5 φ(2φ⁻¹(½)) + ¼` of the
/// Frank generator; zero would be required for radial symmetry.
pub fn frank_symmetry_residual(theta: f64) -> Result<f64> {
    let g = ArchimedeanGenerator::new(MixingLawSpec::LogSeries { theta })?;
    let t = g.phi_inv(0.5);
    Ok(g.phi(3.0 * t) - 1.5 * g.phi(2.0 * t) + 0.25)
}

/// Gnedin's `g_d(x) = E[1{M > x} M^{−d}]`.
pub fn gnedin_g(m: &MixingLawSpec, d: usize, x: f64) -> Result<f64> {
    check_dim(d)?;
    m.validate()?;
    if x < 0.0 || x.is_nan() {
        return invalid(format!("argument must be >= 0, got {x}"));
    }
    let k = d as i32;
    Ok(m.expect(|v| if v > x { v.powi(-k) } else { 0.0 }, &[x]))
}

/// `M·(U_1, …, U_d)` with iid standard uniforms.
#[derive(Debug, Clone)]
pub struct LinfCiid {
    pub m: MixingLawSpec,
    pub d: usize,
}

impl LinfCiid {
    pub fn new(m: MixingLawSpec, d: usize) -> Result<Self> {
        check_dim(d)?;
        m.validate()?;
        Ok(Self { m, d })
    }

    /// Joint survival `E[∏ (1 − x_k/M)_+]`.
    pub fn survival(&self, x: &[f64]) -> f64 {
        let top = x.iter().fold(0.0f64, |a, b| a.max(*b));
        self.m.expect(
            |m| {
                if m <= top {
                    return 0.0;
                }
                if m == f64::INFINITY {
                    return 1.0;
                }
                x.iter().map(|xk| 1.0 - xk.max(0.0) / m).product()
            },
            &[top],
        )
    }

    pub fn sample_row_with_m<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) -> f64 {
        let m = self.m.sample(rng);
        for x in out.iter_mut() {
            *x = m * rng.random::<f64>();
        }
        m
    }
}

impl RowSampler for LinfCiid {
    fn dim(&self) -> usize {
        self.d
    }
    fn fill_row(&self, rng: &mut dyn RngCore, out: &mut [f64]) -> Result<()> {
        self.sample_row_with_m(rng, out);
        Ok(())
    }
    fn describe(&self) -> String {
        format!("linf(M={}, d={})", self.m, self.d)
    }
}

pub fn sample_linf_ciid<R: RngCore>(m: &MixingLawSpec, d: usize, n: usize, rng: &mut R) -> Result<SampleMatrix> {
    draw(&LinfCiid::new(m.clone(), d)?, n, rng)
}

/// Copula of `(X_1, X_2) = M(U_1, U_2)` for Pareto(α) `M`.
pub fn pareto_uniform_copula(alpha: f64, u1: f64, u2: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return invalid("alpha must be positive");
    }
    if !(0.0..=1.0).contains(&u1) || !(0.0..=1.0).contains(&u2) {
        return invalid("copula arguments must lie in [0,1]");
    }
    let (lo, hi) = if u1 <= u2 { (u1, u2) } else { (u2, u1) };
    let t = alpha / (1.0 + alpha);
    let e = 1.0 + 1.0 / alpha;
    Ok(if hi <= t {
        (1.0 + alpha).powi(2) / (alpha * (alpha + 2.0)) * u1 * u2
    } else if lo <= t {
        lo - (1.0 + alpha).powf(e) / (2.0 + alpha) * lo * (1.0 - hi).powf(e)
    } else if lo >= 1.0 {
        1.0
    } else {
        lo - alpha / (2.0 + alpha) * (1.0 - lo).powf(-1.0 / alpha) * (1.0 - hi).powf(e)
    })
}

/// Marginal distribution function of `M·U` for Pareto(α) `M`.
pub fn pareto_uniform_marginal_cdf(alpha: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x <= 1.0 {
        alpha / (1.0 + alpha) * x
    } else {
        1.0 - x.powf(-alpha) / (1.0 + alpha)
    }
}
