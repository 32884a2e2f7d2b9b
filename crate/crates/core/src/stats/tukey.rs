use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

use super::{anova_oneway, check_groups, Group, StatsError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TukeyPair {
    pub a: String,
    pub b: String,
    /// mean(b) − mean(a).
    pub mean_difference: f64,
    pub q: f64,
    /// Upper tail of the studentized range at `q`.
    pub p: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TukeyResult {
    pub corrected_alpha: f64,
    pub k: usize,
    pub n_per_group: usize,
    pub df_within: usize,
    pub ms_within: f64,
    /// Studentized-range quantile at 1 − alpha for (k, df_within).
    pub critical_q: f64,
    /// All pairs a < b in input order.
    pub pairs: Vec<TukeyPair>,
}

impl TukeyResult {
    pub fn pair(&self, a: &str, b: &str) -> Option<&TukeyPair> {
        self.pairs
            .iter()
            .find(|p| (p.a == a && p.b == b) || (p.a == b && p.b == a))
    }
}

/// Tukey HSD on balanced groups, testing each pair at `alpha`.
pub fn tukey_hsd(groups: &[Group], alpha: f64) -> Result<TukeyResult, StatsError> {
    check_groups(groups)?;
    let sizes: Vec<usize> = groups.iter().map(|g| g.values.len()).collect();
    if sizes.iter().any(|&n| n != sizes[0]) {
        return Err(StatsError::UnbalancedGroups(sizes));
    }
    let anova = anova_oneway(groups)?;
    let k = groups.len();
    let n = sizes[0];
    let ms_within = anova.ms_within();
    let se = (ms_within / n as f64).sqrt();
    let df = anova.df_within as f64;
    let critical_q = qtukey(1.0 - alpha, k, df);

    let mut pairs = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in i + 1..k {
            let diff = anova.means[j] - anova.means[i];
            let q = diff.abs() / se;
            pairs.push(TukeyPair {
                a: groups[i].label.clone(),
                b: groups[j].label.clone(),
                mean_difference: diff,
                q,
                p: (1.0 - ptukey(q, k, df)).max(0.0),
                significant: q > critical_q,
            });
        }
    }
    Ok(TukeyResult {
        corrected_alpha: alpha,
        k,
        n_per_group: n,
        df_within: anova.df_within,
        ms_within,
        critical_q,
        pairs,
    })
}

const GL_POINTS: usize = 16;

/// Gauss–Legendre nodes and weights on [-1, 1].
fn gauss_legendre() -> &'static [(f64, f64); GL_POINTS] {
    static NODES: OnceLock<[(f64, f64); GL_POINTS]> = OnceLock::new();
    NODES.get_or_init(|| {
        let n = GL_POINTS;
        let mut out = [(0.0, 0.0); GL_POINTS];
        for (i, slot) in out.iter_mut().enumerate() {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for m in 2..=n {
                    let p2 = ((2 * m - 1) as f64 * x * p1 - (m - 1) as f64 * p0) / m as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            *slot = (x, 2.0 / ((1.0 - x * x) * dp * dp));
        }
        out
    })
}

/// Composite Gauss–Legendre over `panels` equal panels of [a, b].
fn integrate(a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / panels as f64;
    let nodes = gauss_legendre();
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        total += nodes
            .iter()
            .map(|&(x, w)| w * f(mid + 0.5 * h * x))
            .sum::<f64>();
    }
    0.5 * h * total
}

fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// CDF of the range of `k` standard normals.
fn range_cdf(w: f64, k: usize) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    let km1 = (k - 1) as i32;
    let v = k as f64
        * integrate(-8.5, 8.5, 24, |z| {
            norm_pdf(z) * (norm_cdf(z) - norm_cdf(z - w)).powi(km1)
        });
    v.clamp(0.0, 1.0)
}

/// CDF of the studentized range with `k` means and `df` error degrees of
/// freedom; `df = f64::INFINITY` gives the plain normal range.
pub fn ptukey(q: f64, k: usize, df: f64) -> f64 {
    assert!(k >= 2, "studentized range needs k >= 2");
    assert!(df > 0.0, "degrees of freedom must be positive");
    if q <= 0.0 {
        return 0.0;
    }
    if q.is_infinite() {
        return 1.0;
    }
    if df.is_infinite() || df > 1e5 {
        return range_cdf(q, k);
    }
    // S = sqrt(chi2_df / df) has log density
    //   (df/2) ln(df/2) + ln 2 − lnΓ(df/2) + (df − 1) ln s − df s²/2.
    let half = df / 2.0;
    let log_c = half * half.ln() + std::f64::consts::LN_2 - ln_gamma(half);
    let spread = 12.0 / (2.0 * df).sqrt();
    let lo = (1.0 - spread).max(0.0);
    let hi = 1.0 + spread.max(1.0) * 1.5;
    let v = integrate(lo, hi, 40, |s| {
        if s <= 0.0 {
            return 0.0;
        }
        let log_f = log_c + (df - 1.0) * s.ln() - df * s * s / 2.0;
        log_f.exp() * range_cdf(q * s, k)
    });
    v.clamp(0.0, 1.0)
}

/// Quantile of the studentized range: the `q` with `ptukey(q, k, df) = p`.
pub fn qtukey(p: f64, k: usize, df: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "probability must be in (0, 1)");
    let f = |q: f64| ptukey(q, k, df) - p;
    let (mut lo, mut flo) = (0.0, -p);
    let mut hi = 4.0;
    let mut fhi = f(hi);
    while fhi < 0.0 {
        lo = hi;
        flo = fhi;
        hi *= 2.0;
        fhi = f(hi);
    }
    // Illinois variant of regula falsi.
    let mut side = 0;
    for _ in 0..200 {
        let x = (lo * fhi - hi * flo) / (fhi - flo);
        let fx = f(x);
        if fx.abs() < 1e-13 || (hi - lo) < 1e-12 {
            return x;
        }
        if (fx < 0.0) == (flo < 0.0) {
            lo = x;
            flo = fx;
            if side == -1 {
                fhi /= 2.0;
            }
            side = -1;
        } else {
            hi = x;
            fhi = fx;
            if side == 1 {
                flo /= 2.0;
            }
            side = 1;
        }
    }
    0.5 * (lo + hi)
}
