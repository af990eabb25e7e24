//! The reference family `L_{c,m}` with generating function
//! `g_{c,m}(t) = t / (m - (m-1) t^c)^{1/c}`.
//!
//! For integer `c` these are genuine offspring laws (one plus `c` times a
//! negative binomial). For non-integer `c` the variable lives on the lattice
//! `1 + cℕ` and only serves as a comparison scale, but the family keeps the
//! semigroup property `g_{c,m} ∘ g_{c,m'} = g_{c,mm'}` and admits exact
//! inverse factorial moments, which is what makes it useful.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use serde::{Deserialize, Serialize};
use statrs::function::beta::checked_beta_reg;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_pieces, Tolerance};

/// `g_{c,m}(t)` without argument checks. Accurate for small `t`.
pub(crate) fn pgf_at(c: f64, m: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if m == 1.0 {
        return t;
    }
    // m - (m-1) t^c = 1 + (m-1)(1 - t^c)
    let one_minus_tc = -(c * t.ln()).exp_m1();
    // multiply by t rather than adding ln t, which would cost |ln t|·ε
    t * (-(m - 1.0).mul_add(one_minus_tc, 1.0).ln() / c).exp()
}

/// `1 - g_{c,m}(1 - q)` without argument checks. Accurate for small `q`.
pub(crate) fn pgf_complement(c: f64, m: f64, q: f64) -> f64 {
    if q <= 0.0 {
        return 0.0;
    }
    if q >= 1.0 {
        return 1.0;
    }
    let ln_t = (-q).ln_1p();
    let w = -(c * ln_t).exp_m1();
    -(ln_t - ((m - 1.0) * w).ln_1p() / c).exp_m1()
}

fn check_params(c: f64, m: f64) -> Result<()> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::domain("c", c, "c > 0"));
    }
    if !(m >= 1.0 && m.is_finite()) {
        return Err(Error::domain("m", m, "m >= 1"));
    }
    Ok(())
}

fn check_unit(t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::domain("t", t, "0 <= t <= 1"));
    }
    Ok(())
}

/// `g_{c,m}(t) = t / (m - (m-1) t^c)^{1/c}`.
pub fn gcm_pgf(c: f64, m: f64, t: f64) -> Result<f64> {
    check_params(c, m)?;
    check_unit(t)?;
    if t == 1.0 {
        return Ok(1.0);
    }
    Ok(if t <= 0.5 { pgf_at(c, m, t) } else { 1.0 - pgf_complement(c, m, 1.0 - t) })
}

/// Evaluates both sides of the semigroup identity: returns
/// `(g_{c,m1}(g_{c,m2}(t)), g_{c,m1·m2}(t))`.
pub fn semigroup_compose(c: f64, m1: f64, m2: f64, t: f64) -> Result<(f64, f64)> {
    check_params(c, m1)?;
    check_params(c, m2)?;
    check_unit(t)?;
    let inner = gcm_pgf(c, m2, t)?;
    Ok((gcm_pgf(c, m1, inner)?, gcm_pgf(c, m1 * m2, t)?))
}

/// One draw of `L_{c,m}`: `1 + c·G` with `G` negative binomial, realised as
/// a Poisson variable whose rate is Gamma(shape `1/c`, scale `m-1`).
pub fn sample_gcm<R: Rng + ?Sized>(c: f64, m: f64, rng: &mut R) -> f64 {
    sample_gcm_sum(c, m, 1, rng)
}

/// One draw of the sum of `k` independent copies of `L_{c,m}`.
pub fn sample_gcm_sum<R: Rng + ?Sized>(c: f64, m: f64, k: u64, rng: &mut R) -> f64 {
    k as f64 + c * negative_binomial_count(k as f64 / c, m - 1.0, rng)
}

/// Gamma–Poisson mixture with Gamma(shape, scale) rate.
pub(crate) fn negative_binomial_count<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> f64 {
    if scale <= 0.0 || shape <= 0.0 {
        return 0.0;
    }
    let rate = Gamma::new(shape, scale).expect("positive gamma parameters").sample(rng);
    if rate <= 0.0 {
        return 0.0;
    }
    Poisson::new(rate).expect("positive poisson rate").sample(rng)
}

/// `E_k^{c,m}(Z(Z+c)⋯(Z+rc)) = m^{r+1} k(k+c)⋯(k+rc)`.
pub fn factorial_moment(c: f64, m: f64, k: u64, r: u32) -> f64 {
    let k = k as f64;
    (0..=r).fold(m.powi(r as i32 + 1), |acc, i| acc * (k + i as f64 * c))
}

/// `E_k^{c,m}(1/[(Z-c)⋯(Z-rc)]) = 1/(m^r (k-c)⋯(k-rc))`, for `k > rc`.
pub fn inverse_shifted_moment(c: f64, m: f64, k: u64, r: u32) -> Result<f64> {
    let kf = k as f64;
    if !(kf > r as f64 * c) {
        return Err(Error::Precondition(format!("need k > r·c, got k = {k}, r = {r}, c = {c}")));
    }
    let denom = (1..=r).fold(m.powi(r as i32), |acc, i| acc * (kf - i as f64 * c));
    Ok(1.0 / denom)
}

/// `G(u, m) = ∫₀¹ t^{u-1} / (1 + (m-1) t) dt`, by adaptive quadrature.
///
/// For `u < 1` the substitution `t = s^{1/u}` removes the endpoint
/// singularity: `G = (1/u) ∫₀¹ ds / (1 + (m-1) s^{1/u})`. Breakpoints are
/// seeded around the knee of the denominator, which sits at `t ≈ 1/(m-1)`
/// and gets very sharp for large `m`.
pub fn g_function(u: f64, m: f64) -> Result<f64> {
    if !(u > 0.0 && u.is_finite()) {
        return Err(Error::domain("u", u, "u > 0"));
    }
    if !(m > 1.0 && m.is_finite()) {
        return Err(Error::domain("m", m, "m > 1"));
    }
    let a = m - 1.0;
    let tol = Tolerance::new(0.0, 1e-13);
    if u < 1.0 {
        let knee = (-u * a.ln()).exp();
        let bps = breakpoints(knee, None);
        let est = integrate_pieces(|s: f64| 1.0 / a.mul_add(s.powf(1.0 / u), 1.0), &bps, tol)?;
        Ok(est.value / u)
    } else {
        let bps = breakpoints(1.0 / a, Some(u));
        let est = integrate_pieces(
            |t: f64| ((u - 1.0) * t.ln()).exp() / a.mul_add(t, 1.0),
            &bps,
            tol,
        )?;
        Ok(est.value)
    }
}

fn breakpoints(knee: f64, concentration: Option<f64>) -> Vec<f64> {
    let mut pts = vec![0.0, 1.0];
    for j in -4..=4 {
        let p = knee * 10f64.powi(j);
        if p > 0.0 && p < 1.0 {
            pts.push(p);
        }
    }
    // t^{u-1} piles up within ~1/u of t = 1 when u is large.
    if let Some(u) = concentration {
        let mut w = 1.0 / u;
        while w < 0.5 {
            pts.push(1.0 - w);
            w *= 10.0;
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Cross-check path for `u < 1`: `G(u,m) = B_{u,1-u}(1 - 1/m) / (m-1)^u`
/// with `B` the (unregularised) incomplete Beta function.
pub fn g_function_incomplete_beta(u: f64, m: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::domain("u", u, "0 < u < 1"));
    }
    if !(m > 1.0 && m.is_finite()) {
        return Err(Error::domain("m", m, "m > 1"));
    }
    let regularized = checked_beta_reg(u, 1.0 - u, 1.0 - 1.0 / m)
        .map_err(|e| Error::Precondition(format!("incomplete beta: {e}")))?;
    let complete = std::f64::consts::PI / (std::f64::consts::PI * u).sin();
    Ok(regularized * complete / (m - 1.0).powf(u))
}

/// `E_k^{c,m}(1/Z) = G(k/c, m) / c`; equals `1/k` when `m = 1`.
pub fn harmonic_moment_exact(c: f64, m: f64, k: u64) -> Result<f64> {
    check_params(c, m)?;
    if k == 0 {
        return Err(Error::domain("k", 0.0, "k >= 1"));
    }
    if m == 1.0 {
        return Ok(1.0 / k as f64);
    }
    Ok(g_function(k as f64 / c, m)? / c)
}

/// `E_k^c(1/W^r) = Γ(k/c - r) / (c^r Γ(k/c))` for the Gamma limit `W` of
/// `Z/m`, valid for `k > cr`.
pub fn w_limit_moment(c: f64, k: u64, r: f64) -> Result<f64> {
    let u = k as f64 / c;
    if !(c > 0.0) {
        return Err(Error::domain("c", c, "c > 0"));
    }
    if !(r > 0.0) {
        return Err(Error::domain("r", r, "r > 0"));
    }
    if !(u > r) {
        return Err(Error::Precondition(format!("need k > c·r, got k = {k}, c = {c}, r = {r}")));
    }
    Ok((ln_gamma(u - r) - ln_gamma(u) - r * c.ln()).exp())
}

/// `[k, c]_r = c^r Γ(k/c) / Γ(k/c - r)`; for integer `r` this is
/// `∏_{i=1}^r (k - ic)`.
pub fn rising_bound_denominator(c: f64, k: u64, r: f64) -> Result<f64> {
    w_limit_moment(c, k, r).map(|v| 1.0 / v)
}

/// `ℓ(k, c) = c / (k (c - k))`, the scale of `(m-1)^{k/c} E_k^{c,m}(1/Z)`
/// when `k < c`.
pub fn small_k_scale(c: f64, k: u64) -> f64 {
    let k = k as f64;
    c / (k * (c - k))
}

/// Growth of `m E_k^{c,m}(1/Z)` along an increasing grid of means, for `k ≤ c`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceProfile {
    pub c: f64,
    pub k: u64,
    pub m: Vec<f64>,
    /// `m · E_k^{c,m}(1/Z)`
    pub normalized: Vec<f64>,
    /// `(m-1)^{k/c} · E_k^{c,m}(1/Z)`; only meaningful for `k < c`.
    pub scaled: Vec<f64>,
    /// `ℓ(k, c)` when `k < c`.
    pub scale_bound: Option<f64>,
    pub normalized_increasing: bool,
    pub scaled_increasing: bool,
    pub within_scale_bound: bool,
}

pub fn divergence_profile(c: f64, k: u64, m_grid: &[f64]) -> Result<DivergenceProfile> {
    if k == 0 || k as f64 > c {
        return Err(Error::Precondition(format!("divergence profile needs 1 <= k <= c, got k = {k}, c = {c}")));
    }
    let u = k as f64 / c;
    let mut normalized = Vec::with_capacity(m_grid.len());
    let mut scaled = Vec::with_capacity(m_grid.len());
    for &m in m_grid {
        let e = harmonic_moment_exact(c, m, k)?;
        normalized.push(m * e);
        scaled.push((m - 1.0).powf(u) * e);
    }
    let strictly_increasing = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
    let scale_bound = (u < 1.0).then(|| small_k_scale(c, k));
    let within_scale_bound = scale_bound.map_or(true, |b| scaled.iter().all(|&s| s <= b));
    Ok(DivergenceProfile {
        c,
        k,
        m: m_grid.to_vec(),
        normalized_increasing: strictly_increasing(&normalized),
        scaled_increasing: strictly_increasing(&scaled),
        normalized,
        scaled,
        scale_bound,
        within_scale_bound,
    })
}

/// The law of `L_{c,m}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GcmLaw {
    c: f64,
    m: f64,
}

impl GcmLaw {
    pub fn new(c: f64, m: f64) -> Result<Self> {
        check_params(c, m)?;
        Ok(Self { c, m })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn mean(&self) -> f64 {
        self.m
    }

    pub fn variance(&self) -> f64 {
        self.c * self.m * (self.m - 1.0)
    }

    pub fn pgf(&self, t: f64) -> Result<f64> {
        gcm_pgf(self.c, self.m, t)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        sample_gcm(self.c, self.m, rng)
    }

    /// `L_{c,m} ∘ L_{c,m'} = L_{c,mm'}`.
    pub fn compose(&self, inner: &GcmLaw) -> Result<GcmLaw> {
        if self.c != inner.c {
            return Err(Error::Precondition("composition needs a common c".into()));
        }
        GcmLaw::new(self.c, self.m * inner.m)
    }

    pub fn sum_of(self, k: u64) -> GcmSumLaw {
        GcmSumLaw { base: self, k }
    }
}

/// `Z` = sum of `k` independent copies of `L_{c,m}` (the measure `P_k^{c,m}`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GcmSumLaw {
    pub base: GcmLaw,
    pub k: u64,
}

impl GcmSumLaw {
    pub fn pgf(&self, t: f64) -> Result<f64> {
        Ok(self.base.pgf(t)?.powi(self.k as i32))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        sample_gcm_sum(self.base.c, self.base.m, self.k, rng)
    }

    pub fn harmonic_moment(&self) -> Result<f64> {
        harmonic_moment_exact(self.base.c, self.base.m, self.k)
    }

    pub fn factorial_moment(&self, r: u32) -> f64 {
        factorial_moment(self.base.c, self.base.m, self.k, r)
    }

    pub fn inverse_shifted_moment(&self, r: u32) -> Result<f64> {
        inverse_shifted_moment(self.base.c, self.base.m, self.k, r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{LN_2, PI};

    #[test]
    fn pgf_examples() {
        assert!((gcm_pgf(1.0, 2.0, 0.5).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(gcm_pgf(0.7, 1.0, 0.37).unwrap(), 0.37);
        let expected = 0.8 / (3.0f64 - 2.0 * 0.64).sqrt();
        assert!((gcm_pgf(2.0, 3.0, 0.8).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.609994).abs() < 1e-6);
        assert_eq!(gcm_pgf(2.0, 3.0, 0.0).unwrap(), 0.0);
        assert_eq!(gcm_pgf(2.0, 3.0, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn pgf_domain_errors() {
        assert!(gcm_pgf(0.0, 2.0, 0.5).is_err());
        assert!(gcm_pgf(1.0, 0.5, 0.5).is_err());
        assert!(gcm_pgf(1.0, 2.0, 1.5).is_err());
        assert!(gcm_pgf(1.0, 2.0, -0.1).is_err());
    }

    #[test]
    fn semigroup_examples() {
        let (a, b) = semigroup_compose(2.0, 2.0, 3.0, 0.7).unwrap();
        assert!((a - b).abs() < 1e-13);
        let (a, b) = semigroup_compose(0.5, 2.0, 2.0, 0.3).unwrap();
        assert!((a - b).abs() < 1e-13);
        let (a, b) = semigroup_compose(1.3, 1.0, 4.0, 0.6).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn factorial_moment_examples() {
        assert_eq!(factorial_moment(1.0, 2.0, 2, 0), 4.0);
        assert_eq!(factorial_moment(1.0, 2.0, 2, 1), 24.0);
        assert_eq!(factorial_moment(2.0, 3.0, 1, 1), 27.0);
    }

    #[test]
    fn inverse_shifted_examples() {
        assert!((inverse_shifted_moment(1.0, 2.0, 3, 1).unwrap() - 0.25).abs() < 1e-15);
        assert!((inverse_shifted_moment(1.0, 2.0, 5, 2).unwrap() - 1.0 / 48.0).abs() < 1e-15);
        assert!((inverse_shifted_moment(2.0, 4.0, 5, 2).unwrap() - 1.0 / 48.0).abs() < 1e-15);
        assert!(inverse_shifted_moment(2.0, 4.0, 4, 2).is_err());
    }

    // Antiderivative of t^{j}/(1+at) for j = 1, 2, evaluated on [0, 1].
    fn g2_closed(m: f64) -> f64 {
        let a = m - 1.0;
        1.0 / a - (1.0 + a).ln() / (a * a)
    }

    fn g3_closed(m: f64) -> f64 {
        let a = m - 1.0;
        1.0 / (2.0 * a) - 1.0 / (a * a) + (1.0 + a).ln() / (a * a * a)
    }

    #[test]
    fn g_function_closed_forms() {
        assert!((g_function(1.0, 2.0).unwrap() - LN_2).abs() < 1e-14);
        assert!((g_function(2.0, 2.0).unwrap() - (1.0 - LN_2)).abs() < 1e-14);
        for &m in &[1.5, 3.0, 17.0, 1e3] {
            let g1 = g_function(1.0, m).unwrap();
            assert!((g1 - m.ln() / (m - 1.0)).abs() < 1e-13 * g1.max(1.0));
            assert!((g_function(2.0, m).unwrap() - g2_closed(m)).abs() < 1e-13);
            assert!((g_function(3.0, m).unwrap() - g3_closed(m)).abs() < 1e-13);
        }
    }

    #[test]
    fn g_function_large_mean_relative_accuracy() {
        let m = 1e8;
        let g = g_function(3.0, m).unwrap();
        let reference = g3_closed(m);
        assert!(((g - reference) / reference).abs() < 1e-9, "{g} vs {reference}");
    }

    #[test]
    fn g_function_half_limit_is_pi() {
        let m: f64 = 1e12;
        let scaled = (m - 1.0).sqrt() * g_function(0.5, m).unwrap();
        assert!((scaled - PI).abs() < 1e-5, "{scaled}");
        assert!(scaled < PI);
    }

    #[test]
    fn incomplete_beta_agrees_with_quadrature() {
        for &u in &[0.05, 0.25, 0.5, 0.8, 0.95] {
            for &m in &[1.2, 2.0, 10.0, 1e4] {
                let q = g_function(u, m).unwrap();
                let b = g_function_incomplete_beta(u, m).unwrap();
                assert!(((q - b) / q).abs() < 1e-9, "u={u} m={m}: {q} vs {b}");
            }
        }
        assert!(g_function_incomplete_beta(1.0, 2.0).is_err());
    }

    #[test]
    fn harmonic_moment_examples() {
        assert!((harmonic_moment_exact(1.0, 2.0, 1).unwrap() - LN_2).abs() < 1e-14);
        let e = harmonic_moment_exact(1.0, 2.0, 3).unwrap();
        assert!((1.0 / 6.0..=0.25).contains(&e));
        assert_eq!(harmonic_moment_exact(2.0, 1.0, 4).unwrap(), 0.25);
    }

    #[test]
    fn harmonic_moment_vs_monte_carlo() {
        let (c, m, k) = (2.0, 10.0, 1);
        let exact = harmonic_moment_exact(c, m, k).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let v = 1.0 / sample_gcm_sum(c, m, k, &mut rng);
            s += v;
            s2 += v * v;
        }
        let mean = s / n as f64;
        let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
        assert!((mean - exact).abs() < 3.0 * se, "{mean} vs {exact} (se {se})");
    }

    #[test]
    fn w_limit_examples() {
        assert!((w_limit_moment(1.0, 3, 1.0).unwrap() - 0.5).abs() < 1e-14);
        assert!((w_limit_moment(1.0, 5, 2.0).unwrap() - 1.0 / 12.0).abs() < 1e-14);
        assert!((w_limit_moment(0.5, 4, 3.0).unwrap() - 1.0 / (3.5 * 3.0 * 2.5)).abs() < 1e-13);
        assert!(w_limit_moment(2.0, 4, 2.0).is_err());
        // large k/c stays finite through log-gamma
        let v = w_limit_moment(1e-6, 1, 1.0).unwrap();
        assert!((v - 1.0 / (1.0 - 1e-6)).abs() < 1e-6);
    }

    #[test]
    fn divergence_examples() {
        let p = divergence_profile(2.0, 1, &[2.0, 10.0, 100.0]).unwrap();
        assert!(p.normalized_increasing);
        assert!(p.scaled_increasing);
        assert!(p.within_scale_bound);
        assert!(p.scaled[0] <= 2.0);
        let e = std::f64::consts::E;
        let p = divergence_profile(1.0, 1, &[e]).unwrap();
        assert!((p.normalized[0] - e / (e - 1.0)).abs() < 1e-12);
        assert!((p.normalized[0] - 1.581977).abs() < 1e-6);
        assert!(divergence_profile(1.0, 2, &[2.0]).is_err());
    }

    #[test]
    fn sampler_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert_eq!(sample_gcm(2.0, 1.0, &mut rng), 1.0);
        let n = 200_000;
        let law = GcmLaw::new(2.0, 3.0).unwrap();
        let draws: Vec<f64> = (0..n).map(|_| law.sample(&mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let m4 = draws.iter().map(|d| (d - mean).powi(4)).sum::<f64>() / n as f64;
        let var_se = ((m4 - var * var) / n as f64).sqrt();
        assert!((mean - 3.0).abs() < 3.0 * (12.0 / n as f64).sqrt());
        assert!((var - law.variance()).abs() < 3.0 * var_se, "{var} (se {var_se})");
        assert!(draws.iter().all(|d| ((d - 1.0) / 2.0).fract() == 0.0));
    }
}
