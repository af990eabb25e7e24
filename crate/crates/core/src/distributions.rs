//! Offspring laws on `{1, 2, ...}`, their generating functions and samplers,
//! and the comparison constants that place a law between members of the
//! reference family `g_{c,m}`.
//!
//! Every generating function is available in two forms: `pgf_at(t)`, which
//! is accurate for small `t`, and `pgf_complement(q) = 1 - pgf(1 - q)`, which
//! is accurate for small `q`. Iterated compositions switch between the two so
//! that neither end of `[0, 1]` loses relative precision.

use std::sync::Arc;

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Binomial, Distribution, Geometric, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gcm;

/// Largest support accepted for custom pmfs.
pub const MAX_CUSTOM_SUPPORT: usize = 1_000_000;

/// Tolerance on the total mass of a custom pmf.
const PMF_MASS_TOL: f64 = 1e-12;

/// Differences below this are treated as ties by [`OffspringLaw::membership_scan`].
pub const MEMBERSHIP_TIE: f64 = 1e-14;

/// Cap on `(k + 1) · max_support` for exact enumeration.
pub const ENUMERATION_LIMIT: usize = 100_000;

/// An offspring distribution with support in `{1, 2, ...}`.
///
/// Construct through the validating constructors (or JSON); the variants are
/// public for matching.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LawSpec", into = "LawSpec")]
pub enum OffspringLaw {
    /// Point mass at `m`.
    Dirac { m: u64 },
    /// `(1-x) δ₁ + x δ₂`.
    Bernoulli12 { x: f64 },
    /// `1 + Binomial(n, x)`.
    OnePlusBinomial { n: u64, x: f64 },
    /// `1 + Poisson(x)`.
    OnePlusPoisson { x: f64 },
    /// `1 + Geometric` with total mean `m`; generating function `t/(m-(m-1)t)`.
    OnePlusGeometric { m: f64 },
    /// Uniform on `{1, ..., n}`.
    UniformRange { n: u64 },
    /// Uniform on `{1, n}`.
    UniformPair { n: u64 },
    Custom(CustomPmf),
}

/// A finite pmf on `{1, ..., N}`.
#[derive(Clone, Debug)]
pub struct CustomPmf {
    // probs[j] = P(L = j + 1)
    probs: Arc<[f64]>,
    cdf: Arc<[f64]>,
    mean: f64,
    variance: f64,
}

impl PartialEq for CustomPmf {
    fn eq(&self, other: &Self) -> bool {
        self.probs == other.probs
    }
}

impl CustomPmf {
    /// `probs[j]` is the probability of the value `j + 1`.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidLaw("custom pmf is empty".into()));
        }
        if probs.len() > MAX_CUSTOM_SUPPORT {
            return Err(Error::InvalidLaw(format!(
                "custom pmf support {} exceeds {MAX_CUSTOM_SUPPORT}",
                probs.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::InvalidLaw(format!("custom pmf has invalid probability {p}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PMF_MASS_TOL {
            return Err(Error::InvalidLaw(format!("custom pmf sums to {total}, not 1")));
        }
        let mut acc = 0.0;
        let cdf: Vec<f64> = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        let mean: f64 = probs.iter().enumerate().map(|(j, p)| (j + 1) as f64 * p).sum();
        let variance: f64 =
            probs.iter().enumerate().map(|(j, p)| ((j + 1) as f64 - mean).powi(2) * p).sum();
        Ok(Self { probs: probs.into(), cdf: cdf.into(), mean, variance })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    fn sample_inverse_cdf<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.random::<f64>() * self.cdf[self.cdf.len() - 1];
        let idx = self.cdf.partition_point(|&c| c <= u);
        idx.min(self.probs.len() - 1) as u64 + 1
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum LawSpec {
    Dirac { m: u64 },
    Bernoulli12 { x: f64 },
    OnePlusBinomial { n: u64, x: f64 },
    OnePlusPoisson { x: f64 },
    OnePlusGeometric { m: f64 },
    UniformRange { n: u64 },
    UniformPair { n: u64 },
    Custom { pmf: Vec<f64> },
}

impl TryFrom<LawSpec> for OffspringLaw {
    type Error = Error;

    fn try_from(spec: LawSpec) -> Result<Self> {
        match spec {
            LawSpec::Dirac { m } => OffspringLaw::dirac(m),
            LawSpec::Bernoulli12 { x } => OffspringLaw::bernoulli12(x),
            LawSpec::OnePlusBinomial { n, x } => OffspringLaw::one_plus_binomial(n, x),
            LawSpec::OnePlusPoisson { x } => OffspringLaw::one_plus_poisson(x),
            LawSpec::OnePlusGeometric { m } => OffspringLaw::one_plus_geometric(m),
            LawSpec::UniformRange { n } => OffspringLaw::uniform_range(n),
            LawSpec::UniformPair { n } => OffspringLaw::uniform_pair(n),
            LawSpec::Custom { pmf } => OffspringLaw::custom(pmf),
        }
    }
}

impl From<OffspringLaw> for LawSpec {
    fn from(law: OffspringLaw) -> Self {
        match law {
            OffspringLaw::Dirac { m } => LawSpec::Dirac { m },
            OffspringLaw::Bernoulli12 { x } => LawSpec::Bernoulli12 { x },
            OffspringLaw::OnePlusBinomial { n, x } => LawSpec::OnePlusBinomial { n, x },
            OffspringLaw::OnePlusPoisson { x } => LawSpec::OnePlusPoisson { x },
            OffspringLaw::OnePlusGeometric { m } => LawSpec::OnePlusGeometric { m },
            OffspringLaw::UniformRange { n } => LawSpec::UniformRange { n },
            OffspringLaw::UniformPair { n } => LawSpec::UniformPair { n },
            OffspringLaw::Custom(pmf) => LawSpec::Custom { pmf: pmf.probs.to_vec() },
        }
    }
}

fn probability(name: &'static str, x: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&x) {
        Ok(x)
    } else {
        Err(Error::domain(name, x, "0 <= x <= 1"))
    }
}

/// Outcome of the grid comparison against `g_{c,m}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    /// `E(t^L) ≤ g_{c,m}(t)` at every grid point.
    InAc,
    /// `E(t^L) ≥ g_{c,m}(t)` at every grid point.
    InAcPrime,
    /// Both strict signs occur.
    Neither,
    /// Every difference is a tie.
    Inconclusive,
}

impl OffspringLaw {
    pub fn dirac(m: u64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidLaw("Dirac mass must sit at m >= 1".into()));
        }
        Ok(Self::Dirac { m })
    }

    pub fn bernoulli12(x: f64) -> Result<Self> {
        Ok(Self::Bernoulli12 { x: probability("x", x)? })
    }

    pub fn one_plus_binomial(n: u64, x: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidLaw("binomial needs n >= 1".into()));
        }
        Ok(Self::OnePlusBinomial { n, x: probability("x", x)? })
    }

    pub fn one_plus_poisson(x: f64) -> Result<Self> {
        if !(x > 0.0 && x.is_finite()) {
            return Err(Error::domain("x", x, "x > 0"));
        }
        Ok(Self::OnePlusPoisson { x })
    }

    pub fn one_plus_geometric(m: f64) -> Result<Self> {
        if !(m > 1.0 && m.is_finite()) {
            return Err(Error::domain("m", m, "m > 1"));
        }
        Ok(Self::OnePlusGeometric { m })
    }

    pub fn uniform_range(n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidLaw("uniform range needs n >= 1".into()));
        }
        Ok(Self::UniformRange { n })
    }

    pub fn uniform_pair(n: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidLaw("uniform pair needs n >= 2".into()));
        }
        Ok(Self::UniformPair { n })
    }

    /// `pmf[j]` is the probability of the value `j + 1`.
    pub fn custom(pmf: Vec<f64>) -> Result<Self> {
        Ok(Self::Custom(CustomPmf::new(pmf)?))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Dirac { .. } => "dirac",
            Self::Bernoulli12 { .. } => "bernoulli12",
            Self::OnePlusBinomial { .. } => "one_plus_binomial",
            Self::OnePlusPoisson { .. } => "one_plus_poisson",
            Self::OnePlusGeometric { .. } => "one_plus_geometric",
            Self::UniformRange { .. } => "uniform_range",
            Self::UniformPair { .. } => "uniform_pair",
            Self::Custom(_) => "custom",
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Self::Dirac { m } => *m as f64,
            Self::Bernoulli12 { x } => 1.0 + x,
            Self::OnePlusBinomial { n, x } => 1.0 + *n as f64 * x,
            Self::OnePlusPoisson { x } => 1.0 + x,
            Self::OnePlusGeometric { m } => *m,
            Self::UniformRange { n } => (*n as f64 + 1.0) / 2.0,
            Self::UniformPair { n } => (*n as f64 + 1.0) / 2.0,
            Self::Custom(c) => c.mean,
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            Self::Dirac { .. } => 0.0,
            Self::Bernoulli12 { x } => x * (1.0 - x),
            Self::OnePlusBinomial { n, x } => *n as f64 * x * (1.0 - x),
            Self::OnePlusPoisson { x } => *x,
            Self::OnePlusGeometric { m } => m * (m - 1.0),
            Self::UniformRange { n } => {
                let n = *n as f64;
                (n * n - 1.0) / 12.0
            }
            Self::UniformPair { n } => ((*n as f64 - 1.0) / 2.0).powi(2),
            Self::Custom(c) => c.variance,
        }
    }

    /// `P(L = 1)`.
    pub fn p1(&self) -> f64 {
        match self {
            Self::Dirac { m } => (*m == 1) as u8 as f64,
            Self::Bernoulli12 { x } => 1.0 - x,
            Self::OnePlusBinomial { n, x } => (1.0 - x).powi(*n as i32),
            Self::OnePlusPoisson { x } => (-x).exp(),
            Self::OnePlusGeometric { m } => 1.0 / m,
            Self::UniformRange { n } => 1.0 / *n as f64,
            Self::UniformPair { .. } => 0.5,
            Self::Custom(c) => c.probs[0],
        }
    }

    /// Largest support point, if finite.
    pub fn max_support(&self) -> Option<u64> {
        match self {
            Self::Dirac { m } => Some(*m),
            Self::Bernoulli12 { .. } => Some(2),
            Self::OnePlusBinomial { n, .. } => Some(n + 1),
            Self::OnePlusPoisson { .. } | Self::OnePlusGeometric { .. } => None,
            Self::UniformRange { n } | Self::UniformPair { n } => Some(*n),
            Self::Custom(c) => Some(c.probs.len() as u64),
        }
    }

    /// The pmf indexed by value (`pmf[0]` is `P(L = 0) = 0`), for finite
    /// support laws.
    pub fn pmf(&self) -> Option<Vec<f64>> {
        let top = self.max_support()? as usize;
        let mut p = vec![0.0; top + 1];
        match self {
            Self::Dirac { m } => p[*m as usize] = 1.0,
            Self::Bernoulli12 { x } => {
                p[1] = 1.0 - x;
                p[2] = *x;
            }
            Self::OnePlusBinomial { n, x } => {
                let n = *n as usize;
                let ln_fact = ln_factorials(n);
                for i in 0..=n {
                    p[i + 1] = binomial_term(&ln_fact, n, i, *x);
                }
            }
            Self::UniformRange { n } => {
                for v in p.iter_mut().skip(1) {
                    *v = 1.0 / *n as f64;
                }
            }
            Self::UniformPair { n } => {
                p[1] = 0.5;
                p[*n as usize] += 0.5;
            }
            Self::Custom(c) => p[1..].copy_from_slice(&c.probs),
            Self::OnePlusPoisson { .. } | Self::OnePlusGeometric { .. } => unreachable!(),
        }
        Some(p)
    }

    /// `E(t^L)` for `t ∈ [0, 1]`.
    pub fn pgf(&self, t: f64) -> Result<f64> {
        probability("t", t)?;
        Ok(if t <= 0.5 { self.pgf_at(t) } else { 1.0 - self.pgf_complement(1.0 - t) })
    }

    /// `E(t^L)`, accurate for small `t`. No argument check.
    pub fn pgf_at(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            Self::Dirac { m } => t.powi(*m as i32),
            Self::Bernoulli12 { x } => t * x.mul_add(t, 1.0 - x),
            Self::OnePlusBinomial { n, x } => t * x.mul_add(t, 1.0 - x).powi(*n as i32),
            Self::OnePlusPoisson { x } => t * (x * (t - 1.0)).exp(),
            Self::OnePlusGeometric { m } => t / (m - (m - 1.0) * t),
            Self::UniformRange { n } => {
                // Horner on t(1 + t + ... + t^{n-1}) / n
                let mut acc = 0.0;
                for _ in 0..*n {
                    acc = t * (1.0 + acc);
                }
                acc / *n as f64
            }
            Self::UniformPair { n } => 0.5 * (t + t.powi(*n as i32)),
            Self::Custom(c) => c.probs.iter().rev().fold(0.0, |acc, p| t * (p + acc)),
        }
    }

    /// `1 - E((1-q)^L)`, accurate for small `q`. No argument check.
    pub fn pgf_complement(&self, q: f64) -> f64 {
        if q <= 0.0 {
            return 0.0;
        }
        if q >= 1.0 {
            return 1.0;
        }
        let ln_t = (-q).ln_1p();
        // 1 - (1-q)^j
        let tail = |j: f64| -(j * ln_t).exp_m1();
        match self {
            Self::Dirac { m } => tail(*m as f64),
            Self::Bernoulli12 { x } => q * (1.0 + x - x * q),
            Self::OnePlusBinomial { n, x } => -(ln_t + *n as f64 * (-x * q).ln_1p()).exp_m1(),
            Self::OnePlusPoisson { x } => -(ln_t - x * q).exp_m1(),
            Self::OnePlusGeometric { m } => m * q / (m - 1.0).mul_add(q, 1.0),
            Self::UniformRange { n } => (1..=*n).map(|j| tail(j as f64)).sum::<f64>() / *n as f64,
            Self::UniformPair { n } => 0.5 * (q + tail(*n as f64)),
            Self::Custom(c) => {
                c.probs.iter().enumerate().map(|(j, p)| p * tail((j + 1) as f64)).sum()
            }
        }
    }

    /// One draw from the law.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self {
            Self::Dirac { m } => *m,
            Self::Bernoulli12 { x } => 1 + (rng.random::<f64>() < *x) as u64,
            Self::OnePlusBinomial { n, x } => 1 + Binomial::new(*n, *x).unwrap().sample(rng),
            Self::OnePlusPoisson { x } => 1 + Poisson::new(*x).unwrap().sample(rng) as u64,
            Self::OnePlusGeometric { m } => 1 + Geometric::new(1.0 / m).unwrap().sample(rng),
            Self::UniformRange { n } => rng.random_range(1..=*n),
            Self::UniformPair { n } => {
                if rng.random::<bool>() {
                    *n
                } else {
                    1
                }
            }
            Self::Custom(c) => c.sample_inverse_cdf(rng),
        }
    }

    /// A sampler with precomputed tables, for repeated draws.
    pub fn sampler(&self) -> LawSampler {
        let alias = match self {
            Self::Custom(c) => Some(WeightedAliasIndex::new(c.probs.to_vec()).expect("validated pmf")),
            _ => None,
        };
        LawSampler { law: self.clone(), alias }
    }

    /// `A(ξ)`: the smallest `c` with `E(t^L) ≤ g_{c,m}(t)` on `[0, 1]`.
    /// Closed forms for the parametric families; Dirac laws give 0.
    pub fn a_upper(&self) -> Result<f64> {
        Ok(match self {
            Self::Dirac { .. } => 0.0,
            Self::Bernoulli12 { x } => {
                if *x <= 0.0 || *x >= 1.0 {
                    0.0
                } else {
                    // (1-x)^A (1+x) = 1
                    x.ln_1p() / -(-x).ln_1p()
                }
            }
            Self::OnePlusBinomial { n, x } => {
                if *x <= 0.0 || *x >= 1.0 {
                    0.0
                } else {
                    // (1 + xn)(1-x)^{nA} = 1
                    let n = *n as f64;
                    (x * n).ln_1p() / (-n * (-x).ln_1p())
                }
            }
            // e^{xA} = 1 + x
            Self::OnePlusPoisson { x } => x.ln_1p() / x,
            Self::OnePlusGeometric { .. } => 1.0,
            Self::UniformRange { n } => {
                if *n == 1 {
                    0.0
                } else {
                    // 2 n^A = n + 1
                    let n = *n as f64;
                    ((n + 1.0) / 2.0).ln() / n.ln()
                }
            }
            // 2^{A+1} = n + 1
            Self::UniformPair { n } => (*n as f64 + 1.0).log2() - 1.0,
            Self::Custom(_) => {
                return Err(Error::Unsupported { operation: "a_upper", variant: "custom" })
            }
        })
    }

    /// `A'(ξ)`: the largest `c` with `E(t^L) ≥ g_{c,m}(t)` on `[0, 1]`, where
    /// a closed form is known.
    pub fn a_lower(&self) -> Result<f64> {
        Ok(match self {
            Self::Dirac { .. } => 0.0,
            Self::Bernoulli12 { x } => {
                if *x <= 0.0 {
                    0.0
                } else {
                    (1.0 - x) / (1.0 + x)
                }
            }
            Self::UniformPair { n } => {
                let n = *n as f64;
                (n - 1.0) / (n + 1.0)
            }
            Self::OnePlusGeometric { .. } => 1.0,
            Self::UniformRange { n: 1 } => 0.0,
            other => return Err(Error::Unsupported { operation: "a_lower", variant: other.kind() }),
        })
    }

    /// Schröder exponent `γ` solving `p₁ μ^γ = 1`; infinite when `p₁ = 0`.
    pub fn schroder_gamma(&self) -> Result<f64> {
        let mu = self.mean();
        if mu <= 1.0 {
            return Err(Error::Degenerate);
        }
        let p1 = self.p1();
        if p1 <= 0.0 {
            return Ok(f64::INFINITY);
        }
        Ok(-p1.ln() / mu.ln())
    }

    /// `Var(L) / (m (m - 1))`, which sits between `A'(ξ)` and `A(ξ)`.
    pub fn variance_ratio(&self) -> Result<f64> {
        let m = self.mean();
        if m <= 1.0 {
            return Err(Error::Degenerate);
        }
        Ok(self.variance() / (m * (m - 1.0)))
    }

    /// Grid semi-decision of membership in `𝒜_c` / `𝒜'_c`: compares `E(t^L)`
    /// with `g_{c,m}(t)`, `m = E(L)`, on `grid_size` uniform points of
    /// `(0, 1)` plus geometrically spaced points approaching both ends. Near
    /// the ends the difference is divided by `t` (resp. `1 - t`), so that
    /// the comparison of slopes at `0` and `1` is not lost to the tie
    /// threshold.
    pub fn membership_scan(&self, c: f64, grid_size: usize) -> Result<Membership> {
        if !(c > 0.0) {
            return Err(Error::domain("c", c, "c > 0"));
        }
        if grid_size < 2 {
            return Err(Error::Precondition("membership scan needs grid_size >= 2".into()));
        }
        let m = self.mean();
        let h = 1.0 / (grid_size + 1) as f64;
        let uniform = (1..=grid_size).map(|i| i as f64 * h);
        // four points per decade; the t → 0 side goes much deeper because
        // g_{c,m}(t)/t approaches its slope only like t^c
        let near_end = |floor: f64| (1..).map(|j| h * 10f64.powf(-(j as f64) / 4.0)).take_while(move |&s| s >= floor);
        let mut saw_pos = false;
        let mut saw_neg = false;
        let mut check = |d: f64| {
            if d > MEMBERSHIP_TIE {
                saw_pos = true;
            } else if d < -MEMBERSHIP_TIE {
                saw_neg = true;
            }
        };
        for t in uniform {
            let d = if t <= 0.5 {
                self.pgf_at(t) - gcm::pgf_at(c, m, t)
            } else {
                let q = 1.0 - t;
                gcm::pgf_complement(c, m, q) - self.pgf_complement(q)
            };
            check(d);
        }
        for t in near_end(1e-300) {
            check((self.pgf_at(t) - gcm::pgf_at(c, m, t)) / t);
        }
        for q in near_end(1e-12) {
            check((gcm::pgf_complement(c, m, q) - self.pgf_complement(q)) / q);
        }
        Ok(match (saw_pos, saw_neg) {
            (false, false) => Membership::Inconclusive,
            (false, true) => Membership::InAc,
            (true, false) => Membership::InAcPrime,
            (true, true) => Membership::Neither,
        })
    }

    /// Grid estimate of `A(ξ)` for any law: bisection on `c ∈ (0, 10]` for
    /// the smallest `c` whose scan reports `InAc`. The classes grow with `c`,
    /// so the predicate is monotone. A semi-decision, like the scan itself.
    pub fn a_upper_numeric(&self, grid_size: usize) -> Result<f64> {
        let inside = |c: f64| -> Result<bool> {
            Ok(matches!(self.membership_scan(c, grid_size)?, Membership::InAc | Membership::Inconclusive))
        };
        let (mut lo, mut hi) = (0.0, 10.0);
        if !inside(hi)? {
            return Err(Error::Precondition("law is not dominated by g_{c,m} for any c <= 10".into()));
        }
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if inside(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// Grid estimate of `A'(ξ)`: the largest `c ∈ (0, 10]` whose scan reports
    /// `InAcPrime`, or 0 when no such `c` exists.
    pub fn a_lower_numeric(&self, grid_size: usize) -> Result<f64> {
        let inside = |c: f64| -> Result<bool> {
            Ok(matches!(self.membership_scan(c, grid_size)?, Membership::InAcPrime | Membership::Inconclusive))
        };
        let (mut lo, mut hi) = (0.0, 10.0);
        if !inside(1e-9)? {
            return Ok(0.0);
        }
        if inside(hi)? {
            return Ok(hi);
        }
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if inside(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }

    /// The law of `L + b`, for laws with finite support.
    pub fn shifted(&self, b: u64) -> Result<Self> {
        if b == 0 {
            return Ok(self.clone());
        }
        let Some(pmf) = self.pmf() else {
            return Err(Error::Unsupported { operation: "shifted", variant: self.kind() });
        };
        let mut out = vec![0.0; b as usize];
        out.extend_from_slice(&pmf[1..]);
        Self::custom(out)
    }

    /// `E(L) · E(1/(L₁ + ⋯ + L_k + L'))` by exact enumeration, where `L'` is
    /// an independent size-biased copy. The identity makes this `1/(k+1)`.
    pub fn size_biased_identity_check(&self, k: usize) -> Result<f64> {
        if k > 12 {
            return Err(Error::Precondition(format!("enumeration supports k <= 12, got {k}")));
        }
        let Some(top) = self.max_support() else {
            return Err(Error::SupportTooLarge { size: usize::MAX, limit: ENUMERATION_LIMIT });
        };
        let size = (k + 1).saturating_mul(top as usize);
        if size > ENUMERATION_LIMIT {
            return Err(Error::SupportTooLarge { size, limit: ENUMERATION_LIMIT });
        }
        let pmf = self.pmf().expect("finite support");
        let mean = self.mean();
        let biased: Vec<f64> = pmf.iter().enumerate().map(|(j, p)| j as f64 * p / mean).collect();
        let mut total = biased;
        for _ in 0..k {
            total = convolve(&total, &pmf);
        }
        let inv: f64 = total.iter().enumerate().skip(1).map(|(s, p)| p / s as f64).sum();
        Ok(mean * inv)
    }
}

fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// `ln j!` for `j = 0..=n`.
pub(crate) fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for j in 1..=n {
        acc += (j as f64).ln();
        out.push(acc);
    }
    out
}

/// `C(n, i) x^i (1-x)^{n-i}` from a log-factorial table, with the `x ∈ {0, 1}`
/// endpoints handled exactly.
pub(crate) fn binomial_term(ln_fact: &[f64], n: usize, i: usize, x: f64) -> f64 {
    if x <= 0.0 {
        return (i == 0) as u8 as f64;
    }
    if x >= 1.0 {
        return (i == n) as u8 as f64;
    }
    let ln_c = ln_fact[n] - ln_fact[i] - ln_fact[n - i];
    (ln_c + i as f64 * x.ln() + (n - i) as f64 * (-x).ln_1p()).exp()
}

/// Reusable sampler; the custom variant draws through an alias table.
#[derive(Clone, Debug)]
pub struct LawSampler {
    law: OffspringLaw,
    alias: Option<WeightedAliasIndex<f64>>,
}

impl LawSampler {
    pub fn law(&self) -> &OffspringLaw {
        &self.law
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match &self.alias {
            Some(alias) => alias.sample(rng) as u64 + 1,
            None => self.law.sample(rng),
        }
    }

    /// Sum of `count` independent draws. Parametric families use their
    /// closed-form convolutions, so this stays cheap for large `count`.
    pub fn sample_sum<R: Rng + ?Sized>(&self, count: u64, rng: &mut R) -> u64 {
        if count == 0 {
            return 0;
        }
        match &self.law {
            OffspringLaw::Dirac { m } => m * count,
            OffspringLaw::Bernoulli12 { x } => count + sample_binomial(count, *x, rng),
            OffspringLaw::OnePlusBinomial { n, x } => count + sample_binomial(n * count, *x, rng),
            OffspringLaw::OnePlusPoisson { x } => {
                count + Poisson::new(x * count as f64).unwrap().sample(rng) as u64
            }
            OffspringLaw::OnePlusGeometric { m } => {
                count + gcm::negative_binomial_count(count as f64, m - 1.0, rng) as u64
            }
            OffspringLaw::UniformPair { n } => count + (n - 1) * sample_binomial(count, 0.5, rng),
            OffspringLaw::UniformRange { .. } | OffspringLaw::Custom(_) => {
                (0..count).map(|_| self.sample(rng)).sum()
            }
        }
    }
}

fn sample_binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    if p <= 0.0 {
        0
    } else if p >= 1.0 {
        n
    } else {
        Binomial::new(n, p).unwrap().sample(rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::LN_2;

    fn closed_form_laws() -> Vec<OffspringLaw> {
        vec![
            OffspringLaw::dirac(3).unwrap(),
            OffspringLaw::bernoulli12(0.3).unwrap(),
            OffspringLaw::bernoulli12(0.5).unwrap(),
            OffspringLaw::bernoulli12(0.9).unwrap(),
            OffspringLaw::one_plus_binomial(4, 0.3).unwrap(),
            OffspringLaw::one_plus_poisson(1.0).unwrap(),
            OffspringLaw::one_plus_poisson(0.2).unwrap(),
            OffspringLaw::one_plus_geometric(2.0).unwrap(),
            OffspringLaw::uniform_range(3).unwrap(),
            OffspringLaw::uniform_range(7).unwrap(),
            OffspringLaw::uniform_pair(3).unwrap(),
            OffspringLaw::uniform_pair(10).unwrap(),
        ]
    }

    #[test]
    fn pgf_examples() {
        let g = OffspringLaw::one_plus_geometric(2.0).unwrap();
        assert!((g.pgf(0.5).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let b = OffspringLaw::bernoulli12(0.5).unwrap();
        assert!((b.pgf(0.5).unwrap() - 0.375).abs() < 1e-15);
        for law in closed_form_laws() {
            assert!((law.pgf(1.0).unwrap() - 1.0).abs() < 1e-15, "{law:?}");
            assert_eq!(law.pgf(0.0).unwrap(), 0.0);
        }
        assert!(b.pgf(1.2).is_err());
        assert!(b.pgf(-0.2).is_err());
    }

    #[test]
    fn pgf_forms_agree_with_pmf() {
        let laws = [
            OffspringLaw::one_plus_binomial(5, 0.35).unwrap(),
            OffspringLaw::uniform_range(6).unwrap(),
            OffspringLaw::uniform_pair(4).unwrap(),
            OffspringLaw::custom(vec![0.2, 0.0, 0.5, 0.3]).unwrap(),
        ];
        for law in laws {
            let pmf = law.pmf().unwrap();
            for i in 1..20 {
                let t = i as f64 / 20.0;
                let direct: f64 = pmf.iter().enumerate().map(|(j, p)| p * t.powi(j as i32)).sum();
                assert!((law.pgf_at(t) - direct).abs() < 1e-14);
                assert!((1.0 - law.pgf_complement(1.0 - t) - direct).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn pgf_is_monotone_and_convex() {
        for law in closed_form_laws() {
            let vals: Vec<f64> = (0..=200).map(|i| law.pgf(i as f64 / 200.0).unwrap()).collect();
            for w in vals.windows(3) {
                assert!(w[1] >= w[0] - 1e-15);
                assert!(w[2] - 2.0 * w[1] + w[0] >= -1e-13, "{law:?}");
            }
        }
    }

    #[test]
    fn custom_validation() {
        assert!(OffspringLaw::custom(vec![]).is_err());
        assert!(OffspringLaw::custom(vec![0.5, 0.4]).is_err());
        assert!(OffspringLaw::custom(vec![1.2, -0.2]).is_err());
        assert!(OffspringLaw::custom(vec![0.5, 0.5 + 1e-13]).is_ok());
    }

    #[test]
    fn json_round_trip_and_tags() {
        let law: OffspringLaw = serde_json::from_str(r#"{"kind":"bernoulli12","x":0.25}"#).unwrap();
        assert_eq!(law, OffspringLaw::Bernoulli12 { x: 0.25 });
        let law: OffspringLaw = serde_json::from_str(r#"{"kind":"custom","pmf":[0.5,0.5]}"#).unwrap();
        assert_eq!(law.mean(), 1.5);
        let text = serde_json::to_string(&OffspringLaw::one_plus_poisson(1.0).unwrap()).unwrap();
        assert_eq!(text, r#"{"kind":"one_plus_poisson","x":1.0}"#);
        assert!(serde_json::from_str::<OffspringLaw>(r#"{"kind":"bernoulli12","x":1.5}"#).is_err());
        assert!(serde_json::from_str::<OffspringLaw>(r#"{"kind":"custom","pmf":[0.3]}"#).is_err());
    }

    #[test]
    fn sampling_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let d = OffspringLaw::dirac(3).unwrap();
        assert!((0..100).all(|_| d.sample(&mut rng) == 3));

        let x = 0.3;
        let b = OffspringLaw::bernoulli12(x).unwrap();
        let n = 100_000;
        let twos = (0..n).filter(|_| b.sample(&mut rng) == 2).count() as f64;
        let sd = (n as f64 * x * (1.0 - x)).sqrt();
        assert!((twos - n as f64 * x).abs() < 3.0 * sd);

        let p = OffspringLaw::one_plus_poisson(1.0).unwrap();
        let mean = (0..n).map(|_| p.sample(&mut rng) as f64).sum::<f64>() / n as f64;
        assert!((mean - 2.0).abs() < 3.0 * (1.0 / n as f64).sqrt());
    }

    #[test]
    fn sampler_means() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 50_000;
        for law in closed_form_laws().into_iter().chain([OffspringLaw::custom(vec![0.1, 0.6, 0.3]).unwrap()]) {
            let s = law.sampler();
            let mean = (0..n).map(|_| s.sample(&mut rng) as f64).sum::<f64>() / n as f64;
            let se = (law.variance() / n as f64).sqrt();
            assert!((mean - law.mean()).abs() <= 3.5 * se + 1e-12, "{law:?}: {mean}");
            // sums of 40 draws: mean 40 μ
            let sum_mean = (0..5_000).map(|_| s.sample_sum(40, &mut rng) as f64).sum::<f64>() / 5_000.0;
            let sum_se = (40.0 * law.variance() / 5_000.0).sqrt();
            assert!((sum_mean - 40.0 * law.mean()).abs() <= 3.5 * sum_se + 1e-9, "{law:?}: {sum_mean}");
        }
    }

    #[test]
    fn a_upper_examples() {
        let p = OffspringLaw::one_plus_poisson(1.0).unwrap();
        assert!((p.a_upper().unwrap() - LN_2).abs() < 1e-15);
        let u = OffspringLaw::uniform_range(3).unwrap();
        assert!((u.a_upper().unwrap() - LN_2 / 3f64.ln()).abs() < 1e-15);
        assert!((u.a_upper().unwrap() - 0.630930).abs() < 1e-6);
        assert_eq!(OffspringLaw::dirac(4).unwrap().a_upper().unwrap(), 0.0);
        let b = OffspringLaw::bernoulli12(0.5).unwrap();
        assert!((b.a_upper().unwrap() - 1.5f64.ln() / LN_2).abs() < 1e-15);
        assert!((b.a_upper().unwrap() - 0.584963).abs() < 1e-6);
        assert_eq!(OffspringLaw::one_plus_geometric(3.0).unwrap().a_upper().unwrap(), 1.0);
        assert!(matches!(
            OffspringLaw::custom(vec![0.5, 0.5]).unwrap().a_upper(),
            Err(Error::Unsupported { .. })
        ));
    }

    #[test]
    fn a_upper_solves_defining_equations() {
        for &n in &[2u64, 3, 10, 100] {
            let a = OffspringLaw::uniform_range(n).unwrap().a_upper().unwrap();
            assert!((2.0 * (n as f64).powf(a) - (n as f64 + 1.0)).abs() < 1e-12);
        }
        for &(n, x) in &[(1u64, 0.5), (3, 0.2), (10, 0.7)] {
            let a = OffspringLaw::one_plus_binomial(n, x).unwrap().a_upper().unwrap();
            let nf = n as f64;
            assert!(((1.0 + x * nf) * (1.0 - x).powf(nf * a) - 1.0).abs() < 1e-12);
        }
        for &x in &[0.1, 1.0, 5.0] {
            let a = OffspringLaw::one_plus_poisson(x).unwrap().a_upper().unwrap();
            assert!(((x * a).exp() - (1.0 + x)).abs() < 1e-12);
        }
        for &n in &[2u64, 3, 9] {
            let a = OffspringLaw::uniform_pair(n).unwrap().a_upper().unwrap();
            assert!((2f64.powf(a + 1.0) - (n as f64 + 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn a_lower_examples() {
        assert!((OffspringLaw::bernoulli12(0.5).unwrap().a_lower().unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(OffspringLaw::uniform_pair(3).unwrap().a_lower().unwrap(), 0.5);
        assert_eq!(OffspringLaw::one_plus_geometric(5.0).unwrap().a_lower().unwrap(), 1.0);
        assert_eq!(OffspringLaw::dirac(2).unwrap().a_lower().unwrap(), 0.0);
        assert!(OffspringLaw::one_plus_poisson(1.0).unwrap().a_lower().is_err());
    }

    #[test]
    fn schroder_examples() {
        let g = OffspringLaw::bernoulli12(0.5).unwrap().schroder_gamma().unwrap();
        assert!((g - LN_2 / 1.5f64.ln()).abs() < 1e-14);
        assert!((g - 1.709511).abs() < 1e-6);
        assert_eq!(OffspringLaw::bernoulli12(1.0).unwrap().schroder_gamma().unwrap(), f64::INFINITY);
        let g = OffspringLaw::one_plus_geometric(3.7).unwrap().schroder_gamma().unwrap();
        assert!((g - 1.0).abs() < 1e-15);
        assert_eq!(OffspringLaw::dirac(1).unwrap().schroder_gamma(), Err(Error::Degenerate));
    }

    #[test]
    fn variance_ratio_examples() {
        for &x in &[0.2, 0.5, 0.8] {
            let v = OffspringLaw::bernoulli12(x).unwrap().variance_ratio().unwrap();
            assert!((v - (1.0 - x) / (1.0 + x)).abs() < 1e-15);
        }
        assert_eq!(OffspringLaw::dirac(3).unwrap().variance_ratio().unwrap(), 0.0);
        let g = OffspringLaw::one_plus_geometric(2.5).unwrap().variance_ratio().unwrap();
        assert!((g - 1.0).abs() < 1e-15);
        assert_eq!(OffspringLaw::bernoulli12(0.0).unwrap().variance_ratio(), Err(Error::Degenerate));
    }

    #[test]
    fn constants_are_ordered() {
        for law in closed_form_laws() {
            if law.mean() <= 1.0 {
                continue;
            }
            let upper = law.a_upper().unwrap();
            let ratio = law.variance_ratio().unwrap();
            let inv_gamma = 1.0 / law.schroder_gamma().unwrap();
            assert!(ratio <= upper + 1e-10, "{law:?}");
            assert!(inv_gamma <= upper + 1e-10, "{law:?}");
            if let Ok(lower) = law.a_lower() {
                assert!(lower <= ratio + 1e-10, "{law:?}");
                assert!(lower <= inv_gamma + 1e-10, "{law:?}");
            }
        }
    }

    #[test]
    fn bernoulli_constant_chain() {
        for i in 1..100 {
            let x = i as f64 / 100.0;
            let law = OffspringLaw::bernoulli12(x).unwrap();
            let lower = law.a_lower().unwrap();
            let upper = law.a_upper().unwrap();
            assert!(lower < 1.0 - x && 1.0 - x < upper, "x = {x}");
        }
    }

    #[test]
    fn membership_examples() {
        let b = OffspringLaw::bernoulli12(0.5).unwrap();
        let alpha = b.a_upper().unwrap();
        let alpha_p = b.a_lower().unwrap();
        assert_eq!(b.membership_scan(alpha + 0.01, 10_000).unwrap(), Membership::InAc);
        assert_eq!(b.membership_scan(alpha_p - 0.01, 10_000).unwrap(), Membership::InAcPrime);
        let p = 0.2;
        let xi = OffspringLaw::custom(vec![1.0 - p, p / 2.0, p / 2.0]).unwrap();
        let c = 1.0 / xi.schroder_gamma().unwrap();
        assert_eq!(xi.membership_scan(c, 10_000).unwrap(), Membership::Neither);
        let g = OffspringLaw::one_plus_geometric(2.0).unwrap();
        assert_eq!(g.membership_scan(1.0, 1_000).unwrap(), Membership::Inconclusive);
        assert!(b.membership_scan(1.0, 1).is_err());
    }

    #[test]
    fn membership_brackets_every_closed_form_law() {
        let eps = 1e-3;
        for law in closed_form_laws() {
            let upper = law.a_upper().unwrap();
            assert_eq!(law.membership_scan(upper + eps, 10_000).unwrap(), Membership::InAc, "{law:?}");
            if let Ok(lower) = law.a_lower() {
                if lower > eps {
                    assert_eq!(
                        law.membership_scan(lower - eps, 10_000).unwrap(),
                        Membership::InAcPrime,
                        "{law:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn numeric_constants_match_closed_forms() {
        for law in closed_form_laws() {
            if law.mean() <= 1.0 || matches!(law, OffspringLaw::Dirac { .. } | OffspringLaw::OnePlusGeometric { .. }) {
                continue;
            }
            let exact = law.a_upper().unwrap();
            let numeric = law.a_upper_numeric(4_000).unwrap();
            assert!((numeric - exact).abs() < 1e-6, "{law:?}: {numeric} vs {exact}");
            if let Ok(lower) = law.a_lower() {
                let numeric = law.a_lower_numeric(4_000).unwrap();
                assert!((numeric - lower).abs() < 1e-3, "{law:?}: {numeric} vs {lower}");
            }
        }
        let custom = OffspringLaw::custom(vec![0.5, 0.25, 0.25]).unwrap();
        let a = custom.a_upper_numeric(4_000).unwrap();
        assert!(a > custom.variance_ratio().unwrap() - 1e-9 && a < 1.0);
    }

    #[test]
    fn shifting_dominates() {
        let law = OffspringLaw::custom(vec![0.5, 0.3, 0.2]).unwrap();
        let shifted = law.shifted(2).unwrap();
        assert!((shifted.mean() - law.mean() - 2.0).abs() < 1e-14);
        assert_eq!(shifted.p1(), 0.0);
        assert!(OffspringLaw::one_plus_poisson(1.0).unwrap().shifted(1).is_err());
    }

    #[test]
    fn size_biased_examples() {
        let b = OffspringLaw::bernoulli12(0.5).unwrap();
        assert!((b.size_biased_identity_check(1).unwrap() - 0.5).abs() < 1e-15);
        for law in closed_form_laws().into_iter().filter(|l| l.max_support().is_some()) {
            assert!((law.size_biased_identity_check(0).unwrap() - 1.0).abs() < 1e-14);
        }
        let d = OffspringLaw::dirac(2).unwrap();
        assert!((d.size_biased_identity_check(3).unwrap() - 0.25).abs() < 1e-15);
        let p = OffspringLaw::one_plus_poisson(1.0).unwrap();
        assert!(matches!(p.size_biased_identity_check(2), Err(Error::SupportTooLarge { .. })));
        assert!(b.size_biased_identity_check(13).is_err());
    }
}
