//! The Bernoulli case: offspring `(1-x) δ₁ + x δ₂` in every generation.
//!
//! For a homogeneous efficiency `x`, the limits `B_k(x) = lim (1+x)^n E_k(1/Z_n)`
//! satisfy the triangular system
//!
//! ```text
//! B_k = (1+x) Σ_{i=0}^{k} C(k,i) x^i (1-x)^{k-i} B_{k+i},
//! ```
//!
//! which is solved from `k = n` down to `1` with `B_k` for `k > n` replaced by
//! lower and upper boundary guesses. The operator is positive, so the two
//! solutions bracket the true values.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distributions::{binomial_term, ln_factorials};
use crate::error::{Error, Result};
use crate::par;
use crate::roots::{bisect, golden_section_min};

/// `α(x) = ln(1+x) / ln(1/(1-x))`, the comparison constant `A(ξ)` of the law.
pub fn alpha(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        x.ln_1p() / -(-x).ln_1p()
    }
}

/// `α'(x) = (1-x)/(1+x)`.
pub fn alpha_prime(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (1.0 - x) / (1.0 + x)
    }
}

/// `α''(x) = 1 - x`, the sharp upper constant.
pub fn alpha_second(x: f64) -> f64 {
    1.0 - x
}

/// `1 - x(1-x)/(1+3x)`, which bounds `x B_1(x)` from below.
pub fn b1_lower_constant(x: f64) -> f64 {
    1.0 - x * (1.0 - x) / (1.0 + 3.0 * x)
}

fn check_efficiency(x: f64) -> Result<()> {
    if !(x > 0.0 && x <= 1.0) {
        return Err(Error::domain(
            "x",
            x,
            "0 < x <= 1; the recursion has a unique solution only when no efficiency is zero",
        ));
    }
    Ok(())
}

/// Binomial weights `C(k,i) x^i (1-x)^{k-i}`, `i = 0..=k`.
fn weights(ln_fact: &[f64], k: usize, x: f64) -> Vec<f64> {
    (0..=k).map(|i| binomial_term(ln_fact, k, i, x)).collect()
}

/// Right side of the recursion at `k`, with efficiency `x1` for the first
/// generation and `values(j)` standing for `B_j` of the shifted sequence.
pub fn bk_recursion_rhs<F: Fn(u64) -> f64>(x1: f64, values: F, k: u64) -> f64 {
    let k = k as usize;
    let ln_fact = ln_factorials(k);
    let w = weights(&ln_fact, k, x1);
    (1.0 + x1) * w.iter().enumerate().map(|(i, wi)| wi * values((k + i) as u64)).sum::<f64>()
}

/// Boundary values used for `B_k`, `k > n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// `1/k` and `1/(k-1)`.
    Coarse,
    /// `1/(k - α'(x))` and `1/(k - α''(x))`.
    Refined,
}

impl Boundary {
    pub fn as_str(self) -> &'static str {
        match self {
            Boundary::Coarse => "coarse",
            Boundary::Refined => "refined",
        }
    }

    fn values(self, x: f64, k: usize) -> (f64, f64) {
        let k = k as f64;
        match self {
            Boundary::Coarse => (1.0 / k, 1.0 / (k - 1.0)),
            Boundary::Refined => (1.0 / (k - alpha_prime(x)), 1.0 / (k - alpha_second(x))),
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coarse" => Ok(Boundary::Coarse),
            "refined" => Ok(Boundary::Refined),
            other => Err(Error::Precondition(format!("unknown boundary `{other}`"))),
        }
    }
}

/// Lower and upper brackets of `B_1(x), ..., B_n(x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BkSandwich {
    pub x: f64,
    pub n: usize,
    pub boundary: Boundary,
    /// `lower[k-1] ≤ B_k(x)`.
    pub lower: Vec<f64>,
    /// `upper[k-1] ≥ B_k(x)`.
    pub upper: Vec<f64>,
}

/// One row of the CSV table `x, k, b_lower, b_upper, boundary, n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SandwichRow {
    pub x: f64,
    pub k: usize,
    pub b_lower: f64,
    pub b_upper: f64,
    pub boundary: Boundary,
    pub n: usize,
}

impl BkSandwich {
    pub fn lower(&self, k: usize) -> f64 {
        self.lower[k - 1]
    }

    pub fn upper(&self, k: usize) -> f64 {
        self.upper[k - 1]
    }

    /// `max_k upper[k] / lower[k]`.
    pub fn max_ratio(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u / l).fold(1.0, f64::max)
    }

    /// The guaranteed bound on [`Self::max_ratio`] for this boundary choice.
    pub fn ratio_guarantee(&self) -> f64 {
        match self.boundary {
            Boundary::Coarse => 1.0 + 1.0 / self.n as f64,
            Boundary::Refined => 1.0 + 0.172 / (self.n as f64 + self.x),
        }
    }

    /// Bracket of `B(x) = x B_1(x)`.
    pub fn b_bracket(&self) -> (f64, f64) {
        (self.x * self.lower(1), self.x * self.upper(1))
    }

    pub fn rows(&self) -> Vec<SandwichRow> {
        (1..=self.n)
            .map(|k| SandwichRow {
                x: self.x,
                k,
                b_lower: self.lower(k),
                b_upper: self.upper(k),
                boundary: self.boundary,
                n: self.n,
            })
            .collect()
    }

    /// Largest relative residual of the recursion over `k = 1..=n`, for both
    /// brackets, with the boundary values substituted beyond `n`.
    pub fn recursion_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (arr, pick_upper) in [(&self.lower, false), (&self.upper, true)] {
            let values = |j: u64| {
                let j = j as usize;
                if j <= self.n {
                    arr[j - 1]
                } else {
                    let (lo, hi) = self.boundary.values(self.x, j);
                    if pick_upper {
                        hi
                    } else {
                        lo
                    }
                }
            };
            for k in 1..=self.n {
                let rhs = bk_recursion_rhs(self.x, values, k as u64);
                worst = worst.max((arr[k - 1] - rhs).abs() / arr[k - 1]);
            }
        }
        worst
    }
}

/// Solves the truncated recursion for `k = n, ..., 1`.
pub fn sandwich(x: f64, n: usize, boundary: Boundary) -> Result<BkSandwich> {
    check_efficiency(x)?;
    if n == 0 {
        return Err(Error::Precondition("sandwich needs n >= 1".into()));
    }
    let ln_fact = ln_factorials(n);
    let mut lower = vec![0.0; 2 * n + 1];
    let mut upper = vec![0.0; 2 * n + 1];
    for j in n + 1..=2 * n {
        (lower[j], upper[j]) = boundary.values(x, j);
    }
    let ln_growth = x.ln_1p();
    let ln_stay = (-x).ln_1p();
    for k in (1..=n).rev() {
        // Isolate B_k: the i = 0 term carries weight (1-x)^k, leaving the
        // divisor 1 - (1+x)(1-x)^k > 0.
        let (sum_lo, sum_hi, divisor) = if x >= 1.0 {
            (lower[2 * k], upper[2 * k], 1.0)
        } else {
            let w = weights(&ln_fact[..=k], k, x);
            let mut lo = 0.0;
            let mut hi = 0.0;
            for i in 1..=k {
                lo += w[i] * lower[k + i];
                hi += w[i] * upper[k + i];
            }
            (lo, hi, -(ln_growth + k as f64 * ln_stay).exp_m1())
        };
        lower[k] = (1.0 + x) * sum_lo / divisor;
        upper[k] = (1.0 + x) * sum_hi / divisor;
    }
    Ok(BkSandwich {
        x,
        n,
        boundary,
        lower: lower[1..=n].to_vec(),
        upper: upper[1..=n].to_vec(),
    })
}

/// A grid point of the curve `B(x) = x B_1(x) = (1+x) B_2(x)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub x: f64,
    pub b_lower: f64,
    pub b_upper: f64,
    /// `x B_1 = (1+x) B_2` holds to within the bracket width.
    pub identity_holds: bool,
}

pub fn curve_point(x: f64, n: usize, boundary: Boundary) -> Result<CurvePoint> {
    let s = sandwich(x, n.max(2), boundary)?;
    let (b_lower, b_upper) = s.b_bracket();
    let via_b2 = ((1.0 + x) * s.lower(2), (1.0 + x) * s.upper(2));
    let width = (b_upper - b_lower).max(1e-14 * b_upper);
    let identity_holds =
        (via_b2.0 - b_lower).abs() <= width && (via_b2.1 - b_upper).abs() <= width;
    Ok(CurvePoint { x, b_lower, b_upper, identity_holds })
}

/// Brackets of `B(x)` over a grid, solved in parallel.
pub fn b_curve(n: usize, x_grid: &[f64], boundary: Boundary) -> Result<Vec<CurvePoint>> {
    par::map(x_grid, |&x| curve_point(x, n, boundary)).into_iter().collect()
}

/// The default curve grid `0.01, 0.02, ..., 0.99`.
pub fn default_grid() -> Vec<f64> {
    (1..=99).map(|i| i as f64 / 100.0).collect()
}

/// Location and value of the minimum of `B`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BStar {
    pub x_star: f64,
    /// `x* B_1` lower bracket at `x*`.
    pub b_lower: f64,
    /// `x* B_1` upper bracket at `x*`; a certified upper bound on `min B`.
    pub b_upper: f64,
    pub n: usize,
}

/// Golden-section search of the upper bracket of `B` over `[0.05, 0.95]`
/// with the refined boundary. Assumes `B` is unimodal there, which is an
/// empirical observation rather than a proven fact.
pub fn find_bstar(n: usize, tol_x: f64) -> Result<BStar> {
    if !(tol_x > 0.0) {
        return Err(Error::domain("tol_x", tol_x, "tol_x > 0"));
    }
    let mut failure = None;
    let (x_star, _) = golden_section_min(
        |x| match sandwich(x, n, Boundary::Refined) {
            Ok(s) => s.b_bracket().1,
            Err(e) => {
                failure.get_or_insert(e);
                f64::INFINITY
            }
        },
        0.05,
        0.95,
        tol_x,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let (b_lower, b_upper) = sandwich(x_star, n, Boundary::Refined)?.b_bracket();
    Ok(BStar { x_star, b_lower, b_upper, n })
}

/// The constant `c_k(x)` making one branching step exact on the `1/(k-c)`
/// scale, with the residual of the equivalent second characterization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CkResult {
    pub x: f64,
    pub k: u64,
    pub c_k: f64,
    /// `k(1+x) E_{k-1}(1/(Z_1 + 2 - c_k)) - 1`.
    pub characterization_residual: f64,
}

/// Solves `(1+x) E_k(1/(Z_1 - c)) = 1/(k - c)` for `c ∈ [(1-x)², 1-x]`.
pub fn ck_solve(x: f64, k: u64) -> Result<CkResult> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::domain("x", x, "0 < x < 1"));
    }
    if k == 0 {
        return Err(Error::Precondition("c_k needs k >= 1".into()));
    }
    let ku = k as usize;
    let ln_fact = ln_factorials(ku);
    let w = weights(&ln_fact, ku, x);
    let kf = k as f64;
    let phi = |c: f64| {
        let s: f64 = w.iter().enumerate().map(|(i, wi)| wi / (kf + i as f64 - c)).sum();
        (1.0 + x) * s - 1.0 / (kf - c)
    };
    // c_1 sits exactly on the upper end, so widen by a few ulps' worth.
    let lo = (1.0 - x).powi(2);
    let hi = 1.0 - x;
    let pad = 1e-9 * hi;
    let c_k = bisect(phi, lo - pad, (hi + pad).min(0.5 * (1.0 + hi)), 1e-14)?;

    let w_prev = weights(&ln_fact[..ku], ku - 1, x);
    let e: f64 = w_prev.iter().enumerate().map(|(i, wi)| wi / ((ku - 1 + i) as f64 + 2.0 - c_k)).sum();
    Ok(CkResult { x, k, c_k, characterization_residual: kf * (1.0 + x) * e - 1.0 })
}

/// `[1/k, 1/(k - α''(min x_i))]`, which contains `∏(1+x_i) E_k(1/Z_n)` for
/// every `n` along the sequence.
pub fn nonhomogeneous_bk_bounds(x_seq: &[f64], k: u64) -> Result<(f64, f64)> {
    if x_seq.is_empty() {
        return Err(Error::Precondition("efficiency sequence is empty".into()));
    }
    if let Some(&bad) = x_seq.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::domain("x_i", bad, "0 <= x_i <= 1"));
    }
    if k == 0 {
        return Err(Error::Precondition("k must be >= 1".into()));
    }
    let x_min = x_seq.iter().copied().fold(f64::INFINITY, f64::min);
    let kf = k as f64;
    Ok((1.0 / kf, 1.0 / (kf - alpha_second(x_min))))
}

/// Status of the conjecture that `B_k` decreases in `x`, between two grid
/// points.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MonotoneStatus {
    /// `upper(x₂) < lower(x₁)`: certified decrease.
    Decreasing,
    /// `lower(x₂) > upper(x₁)`: certified increase, contradicting the conjecture.
    Violation,
    /// Brackets overlap.
    Unresolved,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MonotoneCheck {
    pub k: usize,
    pub x_left: f64,
    pub x_right: f64,
    pub status: MonotoneStatus,
}

/// Compares the brackets of `B_1, ..., B_{k_max}` at consecutive points of
/// an increasing grid.
pub fn monotonicity_experiment(
    n: usize,
    x_grid: &[f64],
    k_max: usize,
    boundary: Boundary,
) -> Result<Vec<MonotoneCheck>> {
    if k_max == 0 || k_max > n {
        return Err(Error::Precondition(format!("need 1 <= k_max <= n, got k_max = {k_max}, n = {n}")));
    }
    if x_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Precondition("x grid must be strictly increasing".into()));
    }
    let solved: Vec<BkSandwich> =
        par::map(x_grid, |&x| sandwich(x, n, boundary)).into_iter().collect::<Result<_>>()?;
    let mut out = Vec::new();
    for pair in solved.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        for k in 1..=k_max {
            let status = if b.upper(k) < a.lower(k) {
                MonotoneStatus::Decreasing
            } else if b.lower(k) > a.upper(k) {
                MonotoneStatus::Violation
            } else {
                MonotoneStatus::Unresolved
            };
            out.push(MonotoneCheck { k, x_left: a.x, x_right: b.x, status });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rhs_examples() {
        let v = |j: u64| 1.0 / j as f64 + 0.01 * j as f64;
        for k in 1..6 {
            assert!((bk_recursion_rhs(1.0, v, k) - 2.0 * v(2 * k)).abs() < 1e-15);
            assert!((bk_recursion_rhs(0.0, v, k) - v(k)).abs() < 1e-15);
        }
    }

    #[test]
    fn b1_b2_relation() {
        let s = sandwich(0.4, 200, Boundary::Refined).unwrap();
        let x = 0.4;
        let lhs = bk_recursion_rhs(x, |j| s.lower(j as usize), 1);
        assert!((lhs - s.lower(1)).abs() < 1e-13);
        assert!((x * s.lower(1) - (1.0 + x) * s.lower(2)).abs() < 1e-13);
    }

    #[test]
    fn doubling_is_exact_with_refined_boundary() {
        for n in [1, 7, 50] {
            let s = sandwich(1.0, n, Boundary::Refined).unwrap();
            for k in 1..=n {
                assert!((s.lower(k) - 1.0 / k as f64).abs() < 1e-15);
                assert!((s.upper(k) - 1.0 / k as f64).abs() < 1e-15);
            }
        }
        let s = sandwich(1.0, 10, Boundary::Coarse).unwrap();
        for k in 1..=10 {
            assert!((s.lower(k) - 1.0 / k as f64).abs() < 1e-15);
            assert!(s.upper(k) <= (1.0 + 0.1) * s.lower(k));
        }
    }

    #[test]
    fn rejects_zero_efficiency() {
        assert!(matches!(sandwich(0.0, 10, Boundary::Coarse), Err(Error::Domain { .. })));
        assert!(sandwich(1.1, 10, Boundary::Coarse).is_err());
        assert!(sandwich(0.5, 0, Boundary::Coarse).is_err());
    }

    #[test]
    fn sandwich_examples() {
        let s = sandwich(0.5, 100, Boundary::Coarse).unwrap();
        assert!(s.lower(2) <= s.upper(2) && s.upper(2) / s.lower(2) <= 1.01);
        let s = sandwich(0.38, 1000, Boundary::Refined).unwrap();
        let (lo, hi) = s.b_bracket();
        assert!(lo >= 0.9274 - 0.0005 && hi <= 0.9274 + 0.0005, "[{lo}, {hi}]");
    }

    #[test]
    fn sandwich_invariants() {
        for &x in &[0.05, 0.3, 0.5, 0.77, 0.95] {
            for &n in &[5, 40, 300] {
                for boundary in [Boundary::Coarse, Boundary::Refined] {
                    let s = sandwich(x, n, boundary).unwrap();
                    assert!(s.recursion_residual() < 1e-12);
                    assert!(s.max_ratio() <= s.ratio_guarantee() + 1e-13, "{x} {n} {boundary}");
                    for k in 1..=n {
                        let kf = k as f64;
                        assert!(s.lower(k) <= s.upper(k));
                        assert!(1.0 / kf <= s.lower(k) + 1e-14);
                        if k >= 2 {
                            assert!(s.upper(k) <= 1.0 / (kf - 1.0) + 1e-14);
                        }
                        let lo = 1.0 / (kf - alpha_prime(x));
                        let hi = 1.0 / (kf - alpha_second(x));
                        assert!(s.upper(k) >= lo - 1e-13 && s.lower(k) <= hi + 1e-13);
                    }
                }
            }
        }
    }

    #[test]
    fn brackets_nest_as_n_grows() {
        let a = sandwich(0.4, 100, Boundary::Refined).unwrap().b_bracket();
        let b = sandwich(0.4, 1000, Boundary::Refined).unwrap().b_bracket();
        assert!(a.0 <= b.0 + 1e-14 && b.1 <= a.1 + 1e-14);
    }

    #[test]
    fn curve_examples() {
        let p = curve_point(1.0, 10, Boundary::Refined).unwrap();
        assert!((p.b_lower - 1.0).abs() < 1e-15 && (p.b_upper - 1.0).abs() < 1e-15);
        let p = curve_point(0.01, 2000, Boundary::Refined).unwrap();
        assert!(p.b_lower >= 0.98 && p.b_upper <= 1.0, "{p:?}");
        let p = curve_point(0.5, 200, Boundary::Refined).unwrap();
        assert!(p.b_upper >= 8.0 / 9.0 && p.b_lower <= 1.0);
        let curve = b_curve(100, &default_grid(), Boundary::Coarse).unwrap();
        assert_eq!(curve.len(), 99);
        assert!(curve.iter().all(|p| p.identity_holds && p.b_lower <= p.b_upper));
    }

    #[test]
    fn b1_side_bounds() {
        for i in 1..=20 {
            let x = i as f64 / 21.0;
            let s = sandwich(x, 1000, Boundary::Refined).unwrap();
            assert!(b1_lower_constant(x) / x < s.lower(1), "x = {x}");
            assert!(s.upper(1) < 1.0 / x, "x = {x}");
        }
    }

    #[test]
    fn bstar_coarse_search() {
        let b = find_bstar(200, 0.01).unwrap();
        assert!((0.33..=0.43).contains(&b.x_star), "{b:?}");
        assert!(b.b_lower <= b.b_upper && b.b_upper < 0.93);
    }

    #[test]
    fn ck_examples() {
        let r = ck_solve(0.5, 1).unwrap();
        assert!((r.c_k - 0.5).abs() < 1e-12);
        let r = ck_solve(0.5, 200).unwrap();
        assert!((r.c_k - 1.0 / 3.0).abs() < 0.01);
        let c1 = ck_solve(0.5, 1).unwrap().c_k;
        let c2 = ck_solve(0.5, 2).unwrap().c_k;
        assert!(c2 + 0.5 * c1 >= 0.5 - 1e-12);
        assert!(ck_solve(0.0, 1).is_err());
        assert!(ck_solve(1.0, 1).is_err());
    }

    #[test]
    fn ck_invariants() {
        for &x in &[0.1, 0.3, 0.5, 0.7, 0.9] {
            let mut prev = None;
            for k in 1..=40 {
                let r = ck_solve(x, k).unwrap();
                assert!(r.c_k <= 1.0 - x + 1e-12 && r.c_k >= (1.0 - x).powi(2) - 1e-12);
                assert!(r.characterization_residual.abs() < 1e-9, "{r:?}");
                if let Some(p) = prev {
                    assert!(r.c_k + x * p >= 1.0 - x - 1e-12);
                }
                prev = Some(r.c_k);
            }
        }
    }

    #[test]
    fn nonhomogeneous_examples() {
        assert_eq!(nonhomogeneous_bk_bounds(&[1.0, 1.0], 3).unwrap(), (1.0 / 3.0, 1.0 / 3.0));
        let (lo, hi) = nonhomogeneous_bk_bounds(&[0.3, 0.5, 0.7], 2).unwrap();
        assert_eq!(lo, 0.5);
        assert!((hi - 1.0 / 1.3).abs() < 1e-15);
        assert!(nonhomogeneous_bk_bounds(&[], 2).is_err());
    }

    #[test]
    fn monotonicity_experiment_runs() {
        let grid: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
        let checks = monotonicity_experiment(200, &grid, 4, Boundary::Refined).unwrap();
        assert_eq!(checks.len(), 8 * 4);
        assert!(monotonicity_experiment(10, &[0.5, 0.4], 2, Boundary::Coarse).is_err());
    }
}
