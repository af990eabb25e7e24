//! Non-homogeneous Galton–Watson processes with offspring laws on `{1, 2, ...}`.
//!
//! Harmonic moments `E_k(1/Z_n^r)` are computed two ways: by Monte Carlo,
//! and by quadrature of the iterated generating function. For the second,
//! with `F_n = f_1 ∘ ⋯ ∘ f_n` and `M_n = ∏ E(L_i)`,
//!
//! ```text
//! M_n^r · E_k(1/Z_n^r) = 1/Γ(r+1) ∫₀^∞ F_n(exp(-u^{1/r} / M_n))^k du,
//! ```
//!
//! which is the usual `∫₀¹ F_n(t)^k (ln 1/t)^{r-1} dt / (Γ(r) t)` after the
//! substitution `t = exp(-u^{1/r}/M_n)`. Working on the normalized scale
//! keeps the integrand `O(1)` and free of endpoint singularities for every
//! `r > 0`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_ur, ln_gamma};

use crate::distributions::{LawSampler, OffspringLaw};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_pieces, Tolerance};

/// Monte Carlo replicas per independently seeded batch.
pub const MC_BATCH: u64 = 10_000;

/// Absolute tolerance on the normalized moment `M_n^r E_k(1/Z_n^r)`.
pub const QUADRATURE_TOL: f64 = 1e-11;

/// A sequence of offspring laws `ξ_1, ξ_2, ...`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MechanismSpec", into = "MechanismSpec")]
pub enum Mechanism {
    /// The same law for `horizon` generations.
    Homogeneous { law: OffspringLaw, horizon: usize },
    Explicit { laws: Vec<OffspringLaw> },
    /// `ξ_i = (1 - x_i) δ₁ + x_i δ₂`.
    BernoulliEfficiency { x: Vec<f64> },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum MechanismSpec {
    Homogeneous { law: OffspringLaw, horizon: usize },
    Explicit { laws: Vec<OffspringLaw> },
    Bernoulli { x: Vec<f64> },
}

impl TryFrom<MechanismSpec> for Mechanism {
    type Error = Error;

    fn try_from(spec: MechanismSpec) -> Result<Self> {
        Ok(match spec {
            MechanismSpec::Homogeneous { law, horizon } => Mechanism::homogeneous(law, horizon),
            MechanismSpec::Explicit { laws } => Mechanism::explicit(laws),
            MechanismSpec::Bernoulli { x } => Mechanism::bernoulli(x)?,
        })
    }
}

impl From<Mechanism> for MechanismSpec {
    fn from(mech: Mechanism) -> Self {
        match mech {
            Mechanism::Homogeneous { law, horizon } => MechanismSpec::Homogeneous { law, horizon },
            Mechanism::Explicit { laws } => MechanismSpec::Explicit { laws },
            Mechanism::BernoulliEfficiency { x } => MechanismSpec::Bernoulli { x },
        }
    }
}

impl Mechanism {
    pub fn homogeneous(law: OffspringLaw, horizon: usize) -> Self {
        Self::Homogeneous { law, horizon }
    }

    pub fn explicit(laws: Vec<OffspringLaw>) -> Self {
        Self::Explicit { laws }
    }

    /// Bernoulli efficiencies; zeros are allowed and freeze a generation.
    pub fn bernoulli(x: Vec<f64>) -> Result<Self> {
        if let Some(&bad) = x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::domain("x_i", bad, "0 <= x_i <= 1"));
        }
        Ok(Self::BernoulliEfficiency { x })
    }

    /// Number of generations the mechanism defines.
    pub fn horizon(&self) -> usize {
        match self {
            Self::Homogeneous { horizon, .. } => *horizon,
            Self::Explicit { laws } => laws.len(),
            Self::BernoulliEfficiency { x } => x.len(),
        }
    }

    /// Law of generation `i` (1-based).
    pub fn law(&self, i: usize) -> Result<OffspringLaw> {
        if i == 0 || i > self.horizon() {
            return Err(Error::HorizonExceeded { requested: i, horizon: self.horizon() });
        }
        Ok(match self {
            Self::Homogeneous { law, .. } => law.clone(),
            Self::Explicit { laws } => laws[i - 1].clone(),
            Self::BernoulliEfficiency { x } => OffspringLaw::Bernoulli12 { x: x[i - 1] },
        })
    }

    /// Laws of generations `1..=n`.
    pub fn laws(&self, n: usize) -> Result<Vec<OffspringLaw>> {
        self.check_horizon(n)?;
        (1..=n).map(|i| self.law(i)).collect()
    }

    /// `M_n = ∏_{i ≤ n} E(L_i)`.
    pub fn cumulative_mean(&self, n: usize) -> Result<f64> {
        self.check_horizon(n)?;
        Ok(match self {
            Self::Homogeneous { law, .. } => law.mean().powi(n as i32),
            _ => (1..=n).map(|i| self.law(i).map(|l| l.mean())).product::<Result<f64>>()?,
        })
    }

    fn check_horizon(&self, n: usize) -> Result<()> {
        if n > self.horizon() {
            return Err(Error::HorizonExceeded { requested: n, horizon: self.horizon() });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ExactQuadrature,
    MonteCarlo,
}

/// How to evaluate a sequence of moments.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Estimator {
    Quadrature,
    MonteCarlo { samples: u64, seed: u64 },
}

/// `E_k(1/Z_n^r)` with its provenance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentResult {
    pub n: usize,
    pub k: u64,
    pub r: f64,
    /// `M_n`.
    pub cumulative_mean: f64,
    pub value: f64,
    pub method: Method,
    /// Quadrature error estimate or Monte Carlo standard error, on `value`.
    pub error: f64,
    /// Monte Carlo sample count (0 for quadrature).
    pub samples: u64,
}

impl MomentResult {
    /// `M_n^r · E_k(1/Z_n^r)`.
    pub fn normalized(&self) -> f64 {
        self.value * self.cumulative_mean.powf(self.r)
    }

    pub fn normalized_error(&self) -> f64 {
        self.error * self.cumulative_mean.powf(self.r)
    }

    fn initial(k: u64, r: f64, method: Method) -> Self {
        Self { n: 0, k, r, cumulative_mean: 1.0, value: (k as f64).powf(-r), method, error: 0.0, samples: 0 }
    }
}

fn check_kr(k: u64, r: f64) -> Result<()> {
    if k == 0 {
        return Err(Error::Precondition("initial population k must be >= 1".into()));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::domain("r", r, "r > 0"));
    }
    Ok(())
}

/// One realization of `Z_n` started from `Z_0 = k`.
pub fn simulate<R: Rng + ?Sized>(mech: &Mechanism, k: u64, n: usize, rng: &mut R) -> Result<u64> {
    let samplers: Vec<LawSampler> = mech.laws(n)?.iter().map(OffspringLaw::sampler).collect();
    Ok(run(&samplers, k, rng))
}

fn run<R: Rng + ?Sized>(samplers: &[LawSampler], k: u64, rng: &mut R) -> u64 {
    samplers.iter().fold(k, |z, s| s.sample_sum(z, rng))
}

/// Streaming mean and variance (Welford), mergeable across batches.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunningStats {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Self) {
        if other.count == 0 {
            return;
        }
        let total = self.count + other.count;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / total as f64;
        self.m2 += other.m2 + delta * delta * (self.count as f64 * other.count as f64) / total as f64;
        self.count = total;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn standard_error(&self) -> f64 {
        (self.variance() / self.count as f64).sqrt()
    }
}

/// Runs `samples` replicas of `draw` in batches of [`MC_BATCH`]; batch `b`
/// draws from stream `b` of a ChaCha generator seeded with `seed`, so the
/// result does not depend on the thread count.
pub fn monte_carlo<F>(samples: u64, seed: u64, draw: F) -> RunningStats
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let batches = samples.div_ceil(MC_BATCH);
    let batch = |b: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(b);
        let len = MC_BATCH.min(samples - b * MC_BATCH);
        let mut stats = RunningStats::default();
        for _ in 0..len {
            stats.push(draw(&mut rng));
        }
        stats
    };
    let indices: Vec<u64> = (0..batches).collect();
    let parts = crate::par::map(&indices, |&b| batch(b));
    parts.iter().fold(RunningStats::default(), |mut acc, p| {
        acc.merge(p);
        acc
    })
}

/// Monte Carlo estimate of `E_k(1/Z_n^r)`.
pub fn harmonic_moment_mc(
    mech: &Mechanism,
    k: u64,
    n: usize,
    r: f64,
    num_samples: u64,
    seed: u64,
) -> Result<MomentResult> {
    check_kr(k, r)?;
    if num_samples < 100 {
        return Err(Error::Precondition(format!("need at least 100 samples, got {num_samples}")));
    }
    let samplers: Vec<LawSampler> = mech.laws(n)?.iter().map(OffspringLaw::sampler).collect();
    let stats = monte_carlo(num_samples, seed, |rng| (run(&samplers, k, rng) as f64).powf(-r));
    Ok(MomentResult {
        n,
        k,
        r,
        cumulative_mean: mech.cumulative_mean(n)?,
        value: stats.mean(),
        method: Method::MonteCarlo,
        error: stats.standard_error(),
        samples: num_samples,
    })
}

/// `F(t)` for `F = laws[0] ∘ laws[1] ∘ ⋯`, carried as the pair
/// `(t, 1 - t)` so that both ends of `[0, 1]` keep full relative precision.
pub(crate) fn compose_pgfs(laws: &[OffspringLaw], mut t: f64, mut q: f64) -> (f64, f64) {
    for law in laws.iter().rev() {
        if t <= 0.5 {
            t = law.pgf_at(t);
            q = 1.0 - t;
        } else {
            q = law.pgf_complement(q);
            t = 1.0 - q;
        }
    }
    (t, q)
}

/// `F_n(t)` for a mechanism, with `t ∈ [0, 1]`.
pub fn iterated_pgf(mech: &Mechanism, n: usize, t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::domain("t", t, "0 <= t <= 1"));
    }
    let laws = mech.laws(n)?;
    let (t, q) = compose_pgfs(&laws, t, 1.0 - t);
    Ok(if t <= 0.5 { t } else { 1.0 - q })
}

/// `E_k(1/Z_n^r)` by quadrature of the composed generating function.
pub fn harmonic_moment_quadrature(mech: &Mechanism, k: u64, n: usize, r: f64) -> Result<MomentResult> {
    check_kr(k, r)?;
    let laws = mech.laws(n)?;
    if n == 0 {
        return Ok(MomentResult::initial(k, r, Method::ExactQuadrature));
    }
    let big_m = mech.cumulative_mean(n)?;
    let (normalized, error) = normalized_quadrature(&laws, big_m, k, r)?;
    let scale = big_m.powf(-r);
    Ok(MomentResult {
        n,
        k,
        r,
        cumulative_mean: big_m,
        value: normalized * scale,
        method: Method::ExactQuadrature,
        error: error * scale,
        samples: 0,
    })
}

fn normalized_quadrature(laws: &[OffspringLaw], big_m: f64, k: u64, r: f64) -> Result<(f64, f64)> {
    let kf = k as f64;
    let inv_r = 1.0 / r;
    let integrand = |u: f64| {
        let s = u.powf(inv_r) / big_m;
        let (t, q) = compose_pgfs(laws, (-s).exp(), -(-s).exp_m1());
        if t <= 0.5 {
            t.powf(kf)
        } else {
            (kf * (-q).ln_1p()).exp()
        }
    };
    // Z_n ≥ k bounds the integrand by exp(-k u^{1/r}/M); the tail beyond U
    // is then at most (M/k)^r Q(r, k U^{1/r}/M).
    let tail_budget = 0.01 * QUADRATURE_TOL;
    let lead = (big_m / kf).powf(r);
    let mut v: f64 = 1.0;
    while lead * gamma_ur(r, v) > tail_budget {
        v *= 2.0;
    }
    let upper = (big_m * v / kf).powf(r);
    let mut breakpoints = vec![0.0];
    let mut b = 1e-6;
    while b < upper {
        breakpoints.push(b);
        b *= 10.0;
    }
    breakpoints.push(upper);
    let est = integrate_pieces(integrand, &breakpoints, Tolerance::absolute(QUADRATURE_TOL))?;
    let norm = ln_gamma(r + 1.0).exp();
    Ok((est.value / norm, (est.error + tail_budget) / norm))
}

/// `E_k(1/Z_n^r)` by the requested estimator.
pub fn harmonic_moment(mech: &Mechanism, k: u64, n: usize, r: f64, est: Estimator) -> Result<MomentResult> {
    match est {
        Estimator::Quadrature => harmonic_moment_quadrature(mech, k, n, r),
        Estimator::MonteCarlo { samples, seed } => {
            if n == 0 {
                check_kr(k, r)?;
                return Ok(MomentResult { samples, ..MomentResult::initial(k, r, Method::MonteCarlo) });
            }
            harmonic_moment_mc(mech, k, n, r, samples, seed)
        }
    }
}

/// Moments for `n = 0..=n_max`.
pub fn moment_sequence(
    mech: &Mechanism,
    k: u64,
    n_max: usize,
    r: f64,
    est: Estimator,
) -> Result<Vec<MomentResult>> {
    mech.check_horizon(n_max)?;
    (0..=n_max).map(|n| harmonic_moment(mech, k, n, r, est)).collect()
}

/// `[M_n^r E_k(1/Z_n^r)]` for `n = 0..=n_max`.
pub fn normalized_sequence(mech: &Mechanism, k: u64, n_max: usize, r: f64, est: Estimator) -> Result<Vec<f64>> {
    Ok(moment_sequence(mech, k, n_max, r, est)?.iter().map(MomentResult::normalized).collect())
}

/// The geometric decay rate `r_k = max{p₁^k, 1/μ}` of `E_k(1/Z_n)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateConstant {
    pub value: f64,
    /// `p₁^k μ = 1`: the two regimes meet and polynomial corrections appear.
    pub degenerate: bool,
}

pub fn rate_constant(law: &OffspringLaw, k: u64) -> Result<RateConstant> {
    let mu = law.mean();
    if mu <= 1.0 {
        return Err(Error::Degenerate);
    }
    let p1k = law.p1().powf(k as f64);
    Ok(RateConstant { value: p1k.max(1.0 / mu), degenerate: (p1k * mu - 1.0).abs() < 1e-12 })
}

/// `E_k(1/Z_n) / r_k^n` for `n = 0..=n_max` under a homogeneous law.
/// Reported as an empirical sequence; convergence is not certified.
pub fn rate_ratios(law: &OffspringLaw, k: u64, n_max: usize) -> Result<Vec<f64>> {
    let rate = rate_constant(law, k)?.value;
    let mech = Mechanism::homogeneous(law.clone(), n_max);
    let seq = moment_sequence(&mech, k, n_max, 1.0, Estimator::Quadrature)?;
    Ok(seq.iter().map(|m| m.value / rate.powi(m.n as i32)).collect())
}
