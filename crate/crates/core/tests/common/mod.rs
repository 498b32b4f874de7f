//! Independent reference implementations used by the oracle and acceptance
//! suites. Everything here is written directly from the definitions, with
//! plain loops and no shared code paths with the library.

#![allow(dead_code)]

use cifscore::step::StepFunction;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random small competing-risks sample; integer-valued times force ties.
pub fn random_sample(rng: &mut ChaCha8Rng, n: usize, tied: bool, censor_p: f64) -> (Vec<f64>, Vec<u32>) {
    let times = (0..n)
        .map(|_| {
            if tied {
                rng.random_range(1..=8) as f64
            } else {
                0.05 + 10.0 * rng.random::<f64>()
            }
        })
        .collect();
    let events = (0..n)
        .map(|_| {
            if rng.random::<f64>() < censor_p {
                0
            } else {
                rng.random_range(1..=2)
            }
        })
        .collect();
    (times, events)
}

/// Random CIF with 1–6 knots on (0, 10].
pub fn random_cif(rng: &mut ChaCha8Rng) -> StepFunction {
    let k = rng.random_range(1..=6);
    let mut grid: Vec<f64> = (0..k).map(|_| 0.01 + 10.0 * rng.random::<f64>()).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let mut values: Vec<f64> = (0..grid.len()).map(|_| rng.random::<f64>()).collect();
    values.sort_by(f64::total_cmp);
    StepFunction::cif(grid, values).unwrap()
}

/// Value of a right-continuous CIF at `t` by scanning every knot.
pub fn cif_at(c: &StepFunction, t: f64) -> f64 {
    let mut v = 0.0;
    for (g, x) in c.grid().iter().zip(c.values()) {
        if *g <= t {
            v = *x;
        }
    }
    v
}

/// `τ − ∫₀^τ F` written as a sum over jumps: each jump `ΔF` at `g ≤ τ`
/// removes `ΔF · (τ − g)`.
pub fn restricted_mean_by_jumps(c: &StepFunction, tau: f64) -> f64 {
    let mut prev = 0.0;
    let mut area = 0.0;
    for (g, x) in c.grid().iter().zip(c.values()) {
        if *g <= tau {
            area += (x - prev) * (tau - g);
        }
        prev = *x;
    }
    tau - area
}

/// Product-limit survivor of the "failure" times, O(n²) and by definition.
/// `failure[i]` marks the estimator's events. At tied times the non-failures
/// leave the risk set first when `others_first` is set.
pub fn product_limit(times: &[f64], failure: &[bool], others_first: bool) -> Vec<(f64, f64)> {
    let mut fail_times: Vec<f64> = times
        .iter()
        .zip(failure)
        .filter(|(_, &f)| f)
        .map(|(&t, _)| t)
        .collect();
    fail_times.sort_by(f64::total_cmp);
    fail_times.dedup();
    let mut s = 1.0;
    let mut out = Vec::new();
    for &u in &fail_times {
        let d = times.iter().zip(failure).filter(|(&t, &f)| f && t == u).count();
        let at_risk = times
            .iter()
            .zip(failure)
            .filter(|(&t, &f)| t > u || (t == u && (f || !others_first)))
            .count();
        s *= 1.0 - d as f64 / at_risk as f64;
        out.push((u, s));
    }
    out
}

/// Reverse KM of the censoring distribution, events removed first at ties.
pub fn censoring_km(times: &[f64], events: &[u32]) -> Vec<(f64, f64)> {
    let failure: Vec<bool> = events.iter().map(|&e| e == 0).collect();
    product_limit(times, &failure, true)
}

pub fn km_eval(km: &[(f64, f64)], t: f64) -> f64 {
    let mut v = 1.0;
    for &(u, s) in km {
        if u <= t {
            v = s;
        }
    }
    v
}

pub fn km_left(km: &[(f64, f64)], t: f64) -> f64 {
    let mut v = 1.0;
    for &(u, s) in km {
        if u < t {
            v = s;
        }
    }
    v
}

/// IPCW Brier at `t`: three terms summed subject by subject.
pub fn brier_oracle(times: &[f64], events: &[u32], pred: &[f64], t: f64, cause: u32) -> f64 {
    let km = censoring_km(times, events);
    if km_eval(&km, t) == 0.0 {
        return f64::NAN;
    }
    let n = times.len() as f64;
    let mut total = 0.0;
    for i in 0..times.len() {
        let term = if times[i] > t {
            pred[i].powi(2) / km_eval(&km, t)
        } else if events[i] == cause {
            (1.0 - pred[i]).powi(2) / km_left(&km, times[i])
        } else if events[i] != 0 {
            pred[i].powi(2) / km_left(&km, times[i])
        } else {
            0.0
        };
        total += term;
    }
    total / n
}

/// Weighted case/control pair enumeration.
pub fn auc_oracle(times: &[f64], events: &[u32], pred: &[f64], t: f64, cause: u32) -> f64 {
    let km = censoring_km(times, events);
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..times.len() {
        if !(times[i] <= t && events[i] == cause) {
            continue;
        }
        let wi = 1.0 / km_left(&km, times[i]);
        for j in 0..times.len() {
            if times[j] <= t {
                continue;
            }
            let wj = 1.0 / km_eval(&km, t);
            let s = if pred[i] > pred[j] {
                1.0
            } else if pred[i] == pred[j] {
                0.5
            } else {
                0.0
            };
            num += wi * wj * s;
            den += wi * wj;
        }
    }
    num / den
}

/// Truncated cause-specific concordance by pair enumeration.
pub fn cindex_oracle(times: &[f64], events: &[u32], scores: &[f64], tau: f64, cause: u32) -> f64 {
    let km = censoring_km(times, events);
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..times.len() {
        if events[i] != cause || times[i] >= tau {
            continue;
        }
        let w = km_left(&km, times[i]).powi(-2);
        for j in 0..times.len() {
            if times[i] < times[j] {
                let s = if scores[i] > scores[j] {
                    1.0
                } else if scores[i] == scores[j] {
                    0.5
                } else {
                    0.0
                };
                num += w * s;
                den += w;
            }
        }
    }
    num / den
}

/// Unweighted pseudo R² for uncensored data, from the sample formulas with
/// ordinary least squares in normal-equation form. `None` when the outcome
/// is constant.
pub fn brute_pseudo_r2(y: &[f64], m: &[f64]) -> Option<(f64, f64, f64)> {
    let n = y.len() as f64;
    let (sx, sy): (f64, f64) = (m.iter().sum(), y.iter().sum());
    let (sxx, sxy): (f64, f64) = (m.iter().map(|a| a * a).sum(), m.iter().zip(y).map(|(a, b)| a * b).sum());
    let det = n * sxx - sx * sx;
    let ybar = sy / n;
    let (a, b) = if det.abs() <= 1e-12 * (n * sxx).max(1e-300) {
        (ybar, 0.0)
    } else {
        let b = (n * sxy - sx * sy) / det;
        ((sy - b * sx) / n, b)
    };
    let fit: Vec<f64> = m.iter().map(|x| a + b * x).collect();
    let tss: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
    if tss <= 1e-20 {
        return None;
    }
    let ess: f64 = fit.iter().map(|f| (f - ybar).powi(2)).sum();
    let rss: f64 = y.iter().zip(&fit).map(|(v, f)| (v - f).powi(2)).sum();
    let raw: f64 = y.iter().zip(m).map(|(v, x)| (v - x).powi(2)).sum();
    let r2 = ess / tss;
    let l2 = if raw <= 1e-24 { 1.0 } else { rss / raw };
    Some((r2, l2, r2 * l2))
}

/// Adaptive Simpson quadrature.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + rec(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    rec(f, a, fa, b, fb, m, fm, whole, tol, 50)
}

/// `F_k(t; x)` by quadrature of `h_k(u) exp(−H₁(u) − H₂(u))` written with
/// the hazards themselves, substituting `u = t·z²` to tame `u^{v−1}` at 0.
pub fn cif_by_quadrature(lambda: [f64; 2], beta: [&[f64]; 2], v: f64, x: &[f64], t: f64, cause: usize) -> f64 {
    let lin = |b: &[f64]| -> f64 { x.iter().zip(b).map(|(a, c)| a * c).sum() };
    let hazard = |k: usize, u: f64| v * lambda[k].powf(v) * u.powf(v - 1.0) * lin(beta[k]).exp();
    let cumhaz = |k: usize, u: f64| (lambda[k] * u).powf(v) * lin(beta[k]).exp();
    let integrand = |z: f64| {
        if z == 0.0 {
            return 0.0;
        }
        let u = t * z * z;
        hazard(cause, u) * (-cumhaz(0, u) - cumhaz(1, u)).exp() * 2.0 * t * z
    };
    adaptive_simpson(&integrand, 0.0, 1.0, 1e-13)
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn median(x: &[f64]) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Sample skewness and excess kurtosis (moment estimators).
pub fn skew_kurt(x: &[f64]) -> (f64, f64) {
    let m = mean(x);
    let n = x.len() as f64;
    let m2 = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
    let m3 = x.iter().map(|v| (v - m).powi(3)).sum::<f64>() / n;
    let m4 = x.iter().map(|v| (v - m).powi(4)).sum::<f64>() / n;
    (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
}
