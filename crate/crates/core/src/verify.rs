//! Named batches of numerical checks of the moment bounds.
//!
//! Each check carries a signed margin, `bound - value` up to orientation,
//! so that a nonnegative margin means the check passed. Suites avoid using a
//! module as its own oracle: closed-form `g_{c,m}` moments check the Monte
//! Carlo engine, quadrature checks the Bernoulli brackets, and exact
//! enumeration checks the size-biased identity.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bernoulli::{self, Boundary};
use crate::distributions::OffspringLaw;
use crate::error::{Error, Result};
use crate::gcm;
use crate::par;
use crate::process::{self, Estimator, Mechanism};

/// Seed used when the caller does not supply one.
pub const DEFAULT_SEED: u64 = 20_050_617;

/// Every registered suite, in report order.
pub const SUITES: [&str; 10] = [
    "gcm_semigroup",
    "gcm_moments",
    "thm_tb_upper",
    "thm_tb_limit",
    "bernoulli_tdd",
    "higher_moments",
    "discontinuity_tf",
    "divergence_pkc",
    "size_biased",
    "rate_lower_bound",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    Fast,
    Full,
}

impl Budget {
    fn mc_samples(self) -> u64 {
        match self {
            Budget::Fast => 100_000,
            Budget::Full => 10_000_000,
        }
    }

    fn pick<T>(self, fast: T, full: T) -> T {
        match self {
            Budget::Fast => fast,
            Budget::Full => full,
        }
    }
}

impl fmt::Display for Budget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.pick("fast", "full"))
    }
}

impl FromStr for Budget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(Budget::Fast),
            "full" => Ok(Budget::Full),
            other => Err(Error::Precondition(format!("unknown budget `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub description: String,
    pub margin: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite_name: String,
    pub checks: Vec<Check>,
    pub overall: bool,
}

impl SuiteReport {
    fn new(name: &str) -> Self {
        Self { suite_name: name.to_string(), checks: Vec::new(), overall: true }
    }

    /// Records a check; it passes iff `margin >= 0` (NaN fails).
    fn check(&mut self, description: impl Into<String>, margin: f64) {
        let pass = margin >= 0.0;
        self.overall &= pass;
        self.checks.push(Check { description: description.into(), margin, pass });
    }

    /// `value ≤ bound`.
    fn at_most(&mut self, description: impl Into<String>, value: f64, bound: f64) {
        self.check(description, bound - value);
    }

    /// `value ≥ bound`.
    fn at_least(&mut self, description: impl Into<String>, value: f64, bound: f64) {
        self.check(description, value - bound);
    }

    /// `|value - target| ≤ tol`.
    fn close(&mut self, description: impl Into<String>, value: f64, target: f64, tol: f64) {
        self.check(description, tol - (value - target).abs());
    }

    /// Smallest margin over all checks.
    pub fn worst_margin(&self) -> f64 {
        self.checks.iter().map(|c| c.margin).fold(f64::INFINITY, f64::min)
    }
}

/// Runs one suite with the default seed.
pub fn run_suite(name: &str, budget: Budget) -> Result<SuiteReport> {
    run_suite_seeded(name, budget, DEFAULT_SEED)
}

pub fn run_suite_seeded(name: &str, budget: Budget, seed: u64) -> Result<SuiteReport> {
    match name {
        "gcm_semigroup" => gcm_semigroup(budget, seed),
        "gcm_moments" => gcm_moments(budget, seed),
        "thm_tb_upper" => thm_tb_upper(budget, seed),
        "thm_tb_limit" => thm_tb_limit(budget),
        "bernoulli_tdd" => bernoulli_tdd(budget),
        "higher_moments" => higher_moments(budget),
        "discontinuity_tf" => discontinuity_tf(budget),
        "divergence_pkc" => divergence_pkc(budget),
        "size_biased" => size_biased(budget, seed),
        "rate_lower_bound" => rate_lower_bound(budget),
        other => Err(Error::UnknownSuite(other.to_string())),
    }
}

/// Runs every suite, in parallel, returning reports in [`SUITES`] order.
pub fn run_all(budget: Budget, seed: u64) -> Result<Vec<SuiteReport>> {
    par::map(&SUITES, |name| run_suite_seeded(name, budget, seed)).into_iter().collect()
}

fn gcm_semigroup(budget: Budget, seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("gcm_semigroup");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = budget.pick(10_000, 1_000_000);
    let mut worst: f64 = 0.0;
    for _ in 0..points {
        let c = rng.random_range(0.05..5.0);
        let m1 = rng.random_range(1.0..20.0);
        let m2 = rng.random_range(1.0..20.0);
        let t = rng.random::<f64>();
        let (composed, direct) = gcm::semigroup_compose(c, m1, m2, t)?;
        worst = worst.max((composed - direct).abs());
    }
    report.at_most(format!("max |g_(c,m1)∘g_(c,m2) - g_(c,m1·m2)| over {points} random points"), worst, 1e-12);
    Ok(report)
}

fn mc_inverse_shifted(c: f64, m: f64, k: u64, r: u32, samples: u64, seed: u64) -> process::RunningStats {
    process::monte_carlo(samples, seed, |rng| {
        let z = gcm::sample_gcm_sum(c, m, k, rng);
        1.0 / (1..=r).fold(1.0, |acc, i| acc * (z - i as f64 * c))
    })
}

fn gcm_moments(budget: Budget, seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("gcm_moments");
    for &m in &[2.0f64, 10.0, 1e3, 1e6] {
        let g1 = gcm::g_function(1.0, m)?;
        report.close(format!("G(1,{m}) = ln m/(m-1)"), g1, m.ln() / (m - 1.0), 1e-12 * g1.max(1e-300) + 1e-15);
        let g2 = gcm::g_function(2.0, m)?;
        let oracle = 1.0 / (m - 1.0) - m.ln() / (m - 1.0).powi(2);
        report.close(format!("G(2,{m}) closed form"), g2, oracle, 1e-10 * oracle);
    }
    for &u in &[0.1, 0.3, 0.5, 0.8] {
        for &m in &[2.0, 50.0] {
            let direct = gcm::g_function(u, m)?;
            let beta = gcm::g_function_incomplete_beta(u, m)?;
            report.close(format!("G({u},{m}) quadrature vs incomplete Beta"), direct, beta, 1e-9 * direct);
        }
    }
    let mut worst_lo = f64::INFINITY;
    let mut worst_hi = f64::INFINITY;
    for &c in &[0.3, 1.0, 1.7, 3.0] {
        for k in 1..=8u64 {
            if k as f64 <= c {
                continue;
            }
            for &m in &[1.5, 4.0, 100.0, 1e5] {
                let v = m * gcm::harmonic_moment_exact(c, m, k)?;
                worst_lo = worst_lo.min(v - 1.0 / k as f64);
                worst_hi = worst_hi.min(1.0 / (k as f64 - c) - v);
            }
        }
    }
    report.check("1/k <= m E_k(1/Z) on the (c,k,m) grid", worst_lo + 1e-13);
    report.check("m E_k(1/Z) < 1/(k-c) on the (c,k,m) grid", worst_hi);

    let samples = budget.mc_samples();
    let mut stream = seed;
    for &c in &[1.0, 2.0] {
        for &k in &[3u64, 5] {
            for &r in &[1u32, 2] {
                if !(k as f64 > r as f64 * c) {
                    continue;
                }
                for &m in &[2.0, 4.0] {
                    stream = stream.wrapping_add(1);
                    let stats = mc_inverse_shifted(c, m, k, r, samples, stream);
                    let exact = gcm::inverse_shifted_moment(c, m, k, r)?;
                    report.close(
                        format!("MC inverse shifted moment c={c} k={k} r={r} m={m} (3σ)"),
                        stats.mean(),
                        exact,
                        3.0 * stats.standard_error(),
                    );
                }
            }
        }
    }
    // the Monte Carlo engine of the process module against the closed form
    let geo = Mechanism::homogeneous(OffspringLaw::one_plus_geometric(2.0)?, 4);
    let mc = process::harmonic_moment_mc(&geo, 3, 4, 1.0, samples, seed ^ 0x5eed)?;
    let exact = gcm::harmonic_moment_exact(1.0, 16.0, 3)?;
    report.close("process MC of geometric mechanism vs G(3,16) (3σ)", mc.value, exact, 3.0 * mc.error);
    Ok(report)
}

/// Laws with a closed-form `A(ξ)`, used by the growth-bound suites.
fn reference_laws() -> Result<Vec<OffspringLaw>> {
    Ok(vec![
        OffspringLaw::one_plus_poisson(1.0)?,
        OffspringLaw::uniform_range(3)?,
        OffspringLaw::bernoulli12(0.5)?,
        OffspringLaw::one_plus_binomial(3, 0.3)?,
        OffspringLaw::uniform_pair(4)?,
        OffspringLaw::one_plus_geometric(1.5)?,
    ])
}

fn thm_tb_upper(budget: Budget, seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("thm_tb_upper");
    let n_max = budget.pick(8, 14);
    for law in reference_laws()? {
        let a = law.a_upper()?;
        let mech = Mechanism::homogeneous(law.clone(), n_max);
        for k in 1..=5u64 {
            let kf = k as f64;
            if kf <= a {
                continue;
            }
            let seq = process::moment_sequence(&mech, k, n_max, 1.0, Estimator::Quadrature)?;
            let lower = seq.iter().map(|m| m.normalized() - 1.0 / kf).fold(f64::INFINITY, f64::min);
            let upper = seq.iter().map(|m| 1.0 / (kf - a) - m.normalized()).fold(f64::INFINITY, f64::min);
            let monotone = seq.windows(2).map(|w| w[1].normalized() - w[0].normalized()).fold(f64::INFINITY, f64::min);
            let tag = format!("{} k={k} n<={n_max}", law.kind());
            report.check(format!("{tag}: 1/k <= M_n E_k(1/Z_n)"), lower + 1e-10);
            report.check(format!("{tag}: M_n E_k(1/Z_n) <= 1/(k-A)"), upper + 1e-10);
            report.check(format!("{tag}: M_n E_k(1/Z_n) nondecreasing"), monotone + 1e-9);
        }
    }
    // quadrature against Monte Carlo on a mixed matrix of mechanisms
    let samples = budget.mc_samples();
    let cases: Vec<(Mechanism, u64, usize)> = vec![
        (Mechanism::homogeneous(OffspringLaw::one_plus_poisson(1.0)?, 6), 2, 6),
        (Mechanism::homogeneous(OffspringLaw::uniform_range(3)?, 5), 1, 5),
        (Mechanism::bernoulli(vec![0.2, 0.9, 0.5, 0.1, 0.7, 0.4])?, 3, 6),
        (
            Mechanism::explicit(vec![
                OffspringLaw::uniform_pair(3)?,
                OffspringLaw::one_plus_binomial(2, 0.4)?,
                OffspringLaw::custom(vec![0.5, 0.2, 0.3])?,
                OffspringLaw::one_plus_geometric(1.8)?,
            ]),
            4,
            4,
        ),
        (Mechanism::homogeneous(OffspringLaw::custom(vec![0.7, 0.0, 0.3])?, 6), 5, 6),
    ];
    for (i, (mech, k, n)) in cases.iter().enumerate() {
        let q = process::harmonic_moment_quadrature(mech, *k, *n, 1.0)?;
        let mc = process::harmonic_moment_mc(mech, *k, *n, 1.0, samples, seed.wrapping_add(i as u64))?;
        report.close(format!("case {i}: quadrature vs MC (3σ), k={k} n={n}"), q.value, mc.value, 3.0 * mc.error);
    }
    Ok(report)
}

/// Checks that `m G(k/c, m)/c` increases along `m_grid` towards `1/(k-c)`,
/// and lies within 5% of it once `m ≥ 10⁴`.
pub fn tb_limit_check(c: f64, k: u64, m_grid: &[f64]) -> Result<SuiteReport> {
    let kf = k as f64;
    if !(c > 0.0) {
        return Err(Error::domain("c", c, "c > 0"));
    }
    if !(kf > c) {
        return Err(Error::Precondition(format!("need k > c, got k = {k}, c = {c}")));
    }
    if m_grid.is_empty() {
        return Err(Error::Precondition("m grid is empty".into()));
    }
    let limit = 1.0 / (kf - c);
    let mut report = SuiteReport::new("thm_tb_limit");
    let values: Vec<f64> = m_grid
        .iter()
        .map(|&m| Ok(m * gcm::harmonic_moment_exact(c, m, k)?))
        .collect::<Result<_>>()?;
    let tag = format!("c={c} k={k}");
    let step = values.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    if values.len() > 1 {
        report.check(format!("{tag}: m E_k(1/Z) increasing in m"), step);
    }
    let below = values.iter().map(|v| limit - v).fold(f64::INFINITY, f64::min);
    report.check(format!("{tag}: m E_k(1/Z) < 1/(k-c)"), below);
    let (m_last, v_last) = (m_grid[m_grid.len() - 1], values[values.len() - 1]);
    if m_last >= 1e4 {
        report.close(format!("{tag}: within 5% of 1/(k-c) at m={m_last}"), v_last, limit, 0.05 * limit);
    }
    Ok(report)
}

fn thm_tb_limit(budget: Budget) -> Result<SuiteReport> {
    let top = budget.pick(6, 10);
    let grid: Vec<f64> = (1..=top).map(|j| 10f64.powi(j)).collect();
    let mut report = SuiteReport::new("thm_tb_limit");
    for &(c, k) in &[(1.0, 2u64), (1.0, 3), (2.0, 3), (0.5, 1), (2.0, 5), (0.7, 2)] {
        report.checks.extend(tb_limit_check(c, k, &grid)?.checks);
    }
    let m = 1e4;
    report.close("m G(2,m) at m=1e4 within 0.2% of 1", m * gcm::g_function(2.0, m)?, 1.0, 2e-3);
    report.overall = report.checks.iter().all(|c| c.pass);
    Ok(report)
}

fn bernoulli_tdd(budget: Budget) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("bernoulli_tdd");
    let n_max = 20;
    let n_sandwich = budget.pick(30, 40);
    for i in 1..=9 {
        let x = i as f64 / 10.0;
        let mech = Mechanism::homogeneous(OffspringLaw::bernoulli12(x)?, n_sandwich);
        let s = bernoulli::sandwich(x, budget.pick(300, 1000), Boundary::Refined)?;
        for k in 1..=5u64 {
            let kf = k as f64;
            let seq = process::moment_sequence(&mech, k, n_max, 1.0, Estimator::Quadrature)?;
            let lower = seq.iter().map(|m| m.normalized() - 1.0 / kf).fold(f64::INFINITY, f64::min);
            let upper =
                seq.iter().map(|m| 1.0 / (kf - bernoulli::alpha_second(x)) - m.normalized()).fold(f64::INFINITY, f64::min);
            report.check(format!("x={x} k={k}: 1/k <= (1+x)^n E_k(1/Z_n), n<={n_max}"), lower + 1e-10);
            report.check(format!("x={x} k={k}: (1+x)^n E_k(1/Z_n) <= 1/(k-(1-x)), n<={n_max}"), upper + 1e-10);
            // finite n underestimates the limit, so the upper bracket must exceed it
            let finite = process::harmonic_moment_quadrature(&mech, k, n_sandwich, 1.0)?.normalized();
            report.at_least(
                format!("x={x} k={k}: sandwich upper B_k >= quadrature at n={n_sandwich}"),
                s.upper(k as usize) + 1e-9,
                finite,
            );
        }
    }
    let xs = [0.3, 0.5, 0.7];
    let mech = Mechanism::bernoulli(xs.to_vec())?;
    let (lo, hi) = bernoulli::nonhomogeneous_bk_bounds(&xs, 2)?;
    for n in 0..=3 {
        let v = process::harmonic_moment_quadrature(&mech, 2, n, 1.0)?.normalized();
        report.check(format!("x=(0.3,0.5,0.7) k=2 n={n}: inside [{lo:.6}, {hi:.6}]"), (v - lo).min(hi - v) + 1e-10);
    }
    Ok(report)
}

fn higher_moments(budget: Budget) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("higher_moments");
    let law = OffspringLaw::one_plus_poisson(1.0)?;
    let c = law.a_upper()?;
    let n_max = budget.pick(10, 14);
    let mech = Mechanism::homogeneous(law, n_max);
    for k in 3..=6u64 {
        let kf = k as f64;
        let second = process::moment_sequence(&mech, k, n_max, 2.0, Estimator::Quadrature)?;
        let first = process::moment_sequence(&mech, k, n_max, 1.0, Estimator::Quadrature)?;
        let bound = 1.0 / ((kf - c) * (kf - 2.0 * c));
        let worst = second.iter().map(|m| bound - m.normalized()).fold(f64::INFINITY, f64::min);
        report.check(format!("k={k}: M_n² E_k(1/Z_n²) <= 1/((k-c)(k-2c)), n<={n_max}"), worst + 1e-10);
        let var_bound = 3.0 * c / (kf * (kf - c) * (kf - 2.0 * c));
        let worst_var = second
            .iter()
            .zip(&first)
            .map(|(s, f)| var_bound - (s.normalized() - f.normalized().powi(2)))
            .fold(f64::INFINITY, f64::min);
        report.check(format!("k={k}: M_n² Var_k(1/Z_n) <= 3c/(k(k-c)(k-2c)), n<={n_max}"), worst_var + 1e-10);
    }
    // real r: the Gamma-ratio generalization
    for &r in &[0.5, 1.5, 2.5] {
        let k = 4u64;
        if (k as f64) <= c * r {
            continue;
        }
        let bound = 1.0 / gcm::rising_bound_denominator(c, k, r)?;
        let seq = process::moment_sequence(&mech, k, n_max, r, Estimator::Quadrature)?;
        let worst = seq.iter().map(|m| bound - m.normalized()).fold(f64::INFINITY, f64::min);
        report.check(format!("k={k} r={r}: M_n^r E_k(1/Z_n^r) <= Γ(k/c-r)/(c^r Γ(k/c))"), worst + 1e-10);
    }
    Ok(report)
}

fn discontinuity_tf(budget: Budget) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("discontinuity_tf");
    for &m in &[1.05f64, 2.0, 10.0] {
        let n = (8.0 / m.log10()).ceil() as i32;
        let big_m = m.powi(n);
        for k in 2..=4u64 {
            let kf = k as f64;
            let limit = 1.0 / (kf - 1.0);
            let v = big_m * gcm::g_function(kf, big_m)?;
            report.close(format!("m={m} k={k}: m^n G(k,m^n) -> 1/(k-1) at n={n}"), v, limit, 1e-4);
            report.check(format!("m={m} k={k}: limit differs from the n=0 value 1/k"), (limit - 1.0 / kf) - 1e-4);
        }
        if budget == Budget::Full || m == 1.05 {
            let mech = Mechanism::homogeneous(OffspringLaw::one_plus_geometric(m)?, n as usize);
            let q = process::harmonic_moment_quadrature(&mech, 3, n as usize, 1.0)?.normalized();
            report.close(format!("m={m} k=3: iterated-pgf quadrature at n={n} matches the limit"), q, 0.5, 1e-4);
        }
    }
    Ok(report)
}

fn divergence_pkc(budget: Budget) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("divergence_pkc");
    let top = budget.pick(4, 8);
    let grid: Vec<f64> = (1..=top).map(|j| 10f64.powi(j)).collect();
    for &(c, k) in &[(2.0, 1u64), (3.0, 1), (3.0, 2), (2.0, 2), (1.0, 1)] {
        let p = gcm::divergence_profile(c, k, &grid)?;
        let step = p.normalized.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        report.check(format!("c={c} k={k}: m E_k(1/Z) strictly increasing"), step);
        if let Some(bound) = p.scale_bound {
            let worst = p.scaled.iter().map(|s| bound - s).fold(f64::INFINITY, f64::min);
            report.check(format!("c={c} k={k}: (m-1)^(k/c) E_k(1/Z) <= c/(k(c-k))"), worst);
        }
    }
    let p = gcm::divergence_profile(2.0, 1, &[1e4])?;
    report.at_least("c=2 k=1: m E(1/Z) > 10 at m=1e4", p.normalized[0], 10.0);
    Ok(report)
}

/// A random pmf on `{1, ..., len}` with a few zero entries.
fn random_pmf<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..len).map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.random::<f64>() }).collect();
    if w.iter().all(|&v| v == 0.0) {
        w[0] = 1.0;
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    w
}

fn size_biased(budget: Budget, seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("size_biased");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = budget.pick(20, 200);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let len = rng.random_range(1..=12);
        let law = OffspringLaw::custom(random_pmf(&mut rng, len))?;
        for k in 0..=8 {
            let v = law.size_biased_identity_check(k)?;
            worst = worst.max((v - 1.0 / (k as f64 + 1.0)).abs());
        }
    }
    report.at_most(format!("{count} random laws, k<=8: |E(L) E(1/(L_1+…+L_k+L')) - 1/(k+1)|"), worst, 1e-12);
    for law in [
        OffspringLaw::bernoulli12(0.5)?,
        OffspringLaw::uniform_range(6)?,
        OffspringLaw::uniform_pair(5)?,
        OffspringLaw::one_plus_binomial(4, 0.35)?,
        OffspringLaw::dirac(3)?,
    ] {
        let worst = (0..=8)
            .map(|k| Ok((law.size_biased_identity_check(k)? - 1.0 / (k as f64 + 1.0)).abs()))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        report.at_most(format!("{}: identity for k<=8", law.kind()), worst, 1e-12);
    }
    Ok(report)
}

fn rate_lower_bound(budget: Budget) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("rate_lower_bound");
    let n_max = budget.pick(12, 20);
    let laws = vec![
        OffspringLaw::bernoulli12(0.4)?,
        OffspringLaw::bernoulli12(1.0)?,
        OffspringLaw::one_plus_poisson(0.5)?,
        OffspringLaw::custom(vec![0.9, 0.075, 0.0, 0.0, 0.0, 0.025])?,
        OffspringLaw::custom(vec![0.6, 0.0, 0.4])?,
        OffspringLaw::uniform_range(4)?,
    ];
    for law in laws {
        for k in 1..=4u64 {
            let rate = process::rate_constant(&law, k)?;
            let ratios = process::rate_ratios(&law, k, n_max)?;
            // E_k(1/Z_n) / r_k^n ≥ 1/k, relative to the bound
            let worst = ratios.iter().map(|h| h * k as f64 - 1.0).fold(f64::INFINITY, f64::min);
            let tag = if rate.degenerate { " (degenerate rate)" } else { "" };
            report.check(
                format!("{} k={k}: E_k(1/Z_n) >= r_k^n/k for n<={n_max}{tag}", law.kind()),
                worst + 1e-9,
            );
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite() {
        assert_eq!(run_suite("nope", Budget::Fast), Err(Error::UnknownSuite("nope".into())));
    }

    #[test]
    fn budget_parsing() {
        assert_eq!("fast".parse::<Budget>().unwrap(), Budget::Fast);
        assert!("slow".parse::<Budget>().is_err());
    }

    #[test]
    fn semigroup_suite() {
        let r = run_suite("gcm_semigroup", Budget::Fast).unwrap();
        assert!(r.overall, "{r:?}");
        assert!(r.worst_margin() >= 0.0);
    }

    #[test]
    fn tb_limit_examples() {
        let r = tb_limit_check(1.0, 2, &[10.0, 100.0, 1e3, 1e4]).unwrap();
        assert!(r.overall, "{r:?}");
        let r = tb_limit_check(1.0, 3, &[10.0, 1e4, 1e6]).unwrap();
        assert!(r.overall, "{r:?}");
        assert!(tb_limit_check(2.0, 2, &[10.0]).is_err());
    }

    #[test]
    fn margins_are_signed() {
        let mut r = SuiteReport::new("t");
        r.at_most("ok", 1.0, 2.0);
        assert!(r.overall);
        r.at_least("bad", 1.0, 2.0);
        assert!(!r.overall);
        assert_eq!(r.worst_margin(), -1.0);
        r.check("nan", f64::NAN);
        assert!(!r.checks[2].pass);
    }
}
