//! Regression-discontinuity estimation of intervention effects on hashtag
//! adoption: y = b + m x + beta * 1{x > x0}, fit by exact normal equations
//! with pivoting, with full inference statistics, polynomial comparison,
//! effect classification, and ranked effect tables.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};
use crate::ingest::TweetRecord;

/// Daily hashtag usage normalized by same-day cohort tweet volume. Days on
/// which the cohort posted nothing are absent, not zero.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HashtagSeries {
    pub hashtag: String,
    /// (day index from the corpus start, normalized usage).
    pub points: Vec<(f64, f64)>,
    pub total_count: u64,
}

fn epoch_day(ts: i64) -> i64 {
    ts.div_euclid(86_400)
}

/// Rank hashtags by total usage in cohort tweets and build one normalized
/// daily series per kept hashtag. Returns the series and the epoch day that
/// maps to x = 0 (the first day of the full record stream).
pub fn build_hashtag_series(
    records: &[TweetRecord],
    cohort: &std::collections::BTreeSet<String>,
    top_k: usize,
) -> (Vec<HashtagSeries>, i64) {
    let day0 = records.iter().map(|r| epoch_day(r.created_at)).min().unwrap_or(0);
    let mut volume: BTreeMap<i64, u64> = BTreeMap::new();
    let mut usage: BTreeMap<&str, BTreeMap<i64, u64>> = BTreeMap::new();
    let mut totals: BTreeMap<&str, u64> = BTreeMap::new();
    for r in records {
        if !cohort.contains(&r.author_id) {
            continue;
        }
        let day = epoch_day(r.created_at);
        *volume.entry(day).or_default() += 1;
        for h in &r.hashtags {
            *usage.entry(h.as_str()).or_default().entry(day).or_default() += 1;
            *totals.entry(h.as_str()).or_default() += 1;
        }
    }
    let mut ranked: Vec<(&str, u64)> = totals.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(top_k);

    let series = ranked
        .into_iter()
        .map(|(tag, total)| {
            let counts = &usage[tag];
            let points = volume
                .iter()
                .map(|(day, vol)| {
                    let count = counts.get(day).copied().unwrap_or(0);
                    ((day - day0) as f64, count as f64 / *vol as f64)
                })
                .collect();
            HashtagSeries { hashtag: tag.to_string(), points, total_count: total }
        })
        .collect();
    (series, day0)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RddFit {
    pub hashtag: String,
    pub degree: usize,
    pub separate_slopes: bool,
    /// Layout: [intercept, slope_1..slope_degree, beta, (post-side slope
    /// interactions when separate_slopes)].
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub t_values: Vec<f64>,
    pub p_values: Vec<f64>,
    pub rss: f64,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    pub f_statistic: f64,
    pub f_p_value: f64,
    pub log_likelihood: f64,
    pub aic: f64,
    pub bic: f64,
    pub n: usize,
    pub x0: f64,
    /// True when the fit interpolates the data (RSS ~ 0); p-values are
    /// reported as zero in that case.
    pub degenerate: bool,
}

impl RddFit {
    pub fn intercept(&self) -> f64 {
        self.coefficients[0]
    }

    pub fn slope(&self) -> f64 {
        self.coefficients[1]
    }

    pub fn beta(&self) -> f64 {
        self.coefficients[1 + self.degree]
    }

    pub fn beta_p_value(&self) -> f64 {
        self.p_values[1 + self.degree]
    }
}

/// Solve A x = b by Gaussian elimination with partial pivoting; A is square
/// row-major and consumed.
fn solve_pivoting(mut a: Vec<f64>, n: usize, mut b: Vec<f64>) -> Result<Vec<f64>> {
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| a[r * n + col].abs().partial_cmp(&a[s * n + col].abs()).unwrap())
            .unwrap();
        if a[pivot * n + col].abs() < 1e-12 {
            return Err(Error::numerical("singular design matrix"));
        }
        if pivot != col {
            for j in 0..n {
                a.swap(col * n + j, pivot * n + j);
            }
            b.swap(col, pivot);
        }
        for row in (col + 1)..n {
            let factor = a[row * n + col] / a[col * n + col];
            if factor != 0.0 {
                for j in col..n {
                    a[row * n + j] -= factor * a[col * n + j];
                }
                b[row] -= factor * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for j in (row + 1)..n {
            acc -= a[row * n + j] * x[j];
        }
        x[row] = acc / a[row * n + row];
    }
    Ok(x)
}

fn design_row(x: f64, x0: f64, degree: usize, separate_slopes: bool) -> Vec<f64> {
    let treated = if x > x0 { 1.0 } else { 0.0 };
    let mut row = Vec::with_capacity(degree + 2);
    row.push(1.0);
    for d in 1..=degree {
        row.push(x.powi(d as i32));
    }
    row.push(treated);
    if separate_slopes {
        for d in 1..=degree {
            row.push(treated * x.powi(d as i32));
        }
    }
    row
}

/// Two-sided p from Student's t via the regularized incomplete beta.
fn t_p_value(t: f64, df: f64) -> f64 {
    beta_reg(df / 2.0, 0.5, df / (df + t * t))
}

fn f_p_value(f: f64, d1: f64, d2: f64) -> f64 {
    if f <= 0.0 {
        return 1.0;
    }
    beta_reg(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f))
}

pub fn fit_rdd_with_options(
    series: &HashtagSeries,
    x0: f64,
    degree: usize,
    separate_slopes: bool,
) -> Result<RddFit> {
    if !(1..=4).contains(&degree) {
        return Err(Error::invalid(format!("degree {degree} outside 1..=4")));
    }
    let n = series.points.len();
    if n < degree + 3 {
        return Err(Error::invalid(format!(
            "series '{}' has {n} points; degree {degree} needs at least {}",
            series.hashtag,
            degree + 3
        )));
    }
    let p = if separate_slopes { 2 * (degree + 1) } else { degree + 2 };
    if n <= p {
        return Err(Error::invalid(format!("{n} points cannot identify {p} coefficients")));
    }

    let design: Vec<Vec<f64>> = series
        .points
        .iter()
        .map(|(x, _)| design_row(*x, x0, degree, separate_slopes))
        .collect();
    let ys: Vec<f64> = series.points.iter().map(|(_, y)| *y).collect();

    let mut xtx = vec![0.0f64; p * p];
    let mut xty = vec![0.0f64; p];
    for (row, &y) in design.iter().zip(&ys) {
        for i in 0..p {
            xty[i] += row[i] * y;
            for j in 0..p {
                xtx[i * p + j] += row[i] * row[j];
            }
        }
    }
    let coefficients = solve_pivoting(xtx.clone(), p, xty)?;

    // (X'X)^-1 column by column for the coefficient covariance.
    let mut xtx_inv = vec![0.0f64; p * p];
    for col in 0..p {
        let mut unit = vec![0.0; p];
        unit[col] = 1.0;
        let solved = solve_pivoting(xtx.clone(), p, unit)?;
        for row in 0..p {
            xtx_inv[row * p + col] = solved[row];
        }
    }

    let mut rss = 0.0;
    for (row, &y) in design.iter().zip(&ys) {
        let fitted: f64 = row.iter().zip(&coefficients).map(|(x, b)| x * b).sum();
        rss += (y - fitted) * (y - fitted);
    }
    let mean_y = ys.iter().sum::<f64>() / n as f64;
    let tss: f64 = ys.iter().map(|y| (y - mean_y) * (y - mean_y)).sum();
    let df = (n - p) as f64;
    let sigma2 = rss / df;
    let degenerate = rss <= 1e-12 * tss.max(1.0);

    let std_errors: Vec<f64> =
        (0..p).map(|i| (sigma2 * xtx_inv[i * p + i]).max(0.0).sqrt()).collect();
    let t_values: Vec<f64> = coefficients
        .iter()
        .zip(&std_errors)
        .map(|(b, se)| if *se > 0.0 { b / se } else { f64::INFINITY })
        .collect();
    let p_values: Vec<f64> = t_values
        .iter()
        .map(|t| if degenerate { 0.0 } else { t_p_value(t.abs(), df) })
        .collect();

    let r_squared = if tss > 0.0 { 1.0 - rss / tss } else { 1.0 };
    let adj_r_squared = 1.0 - (1.0 - r_squared) * (n as f64 - 1.0) / df;
    let f_statistic = if rss > 0.0 {
        ((tss - rss) / (p as f64 - 1.0)) / (rss / df)
    } else {
        f64::INFINITY
    };
    let f_p = if degenerate || !f_statistic.is_finite() {
        0.0
    } else {
        f_p_value(f_statistic, p as f64 - 1.0, df)
    };
    let (log_likelihood, aic, bic) = if rss > 0.0 {
        let ll = -0.5 * n as f64 * ((std::f64::consts::TAU * rss / n as f64).ln() + 1.0);
        (ll, 2.0 * p as f64 - 2.0 * ll, p as f64 * (n as f64).ln() - 2.0 * ll)
    } else {
        (f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY)
    };

    Ok(RddFit {
        hashtag: series.hashtag.clone(),
        degree,
        separate_slopes,
        coefficients,
        std_errors,
        t_values,
        p_values,
        rss,
        r_squared,
        adj_r_squared,
        f_statistic,
        f_p_value: f_p,
        log_likelihood,
        aic,
        bic,
        n,
        x0,
        degenerate,
    })
}

/// Common-slope discontinuity fit (the default specification).
pub fn fit_rdd(series: &HashtagSeries, x0: f64, degree: usize) -> Result<RddFit> {
    fit_rdd_with_options(series, x0, degree, false)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EffectClass {
    Declining,
    Increasing,
    Mixed,
}

pub const SLOPE_MARGIN: f64 = 0.001;

/// Effect rule on a degree-1 fit: declining when beta < 0 with slope at or
/// below +margin, increasing when beta > 0 with slope at or above -margin,
/// mixed otherwise.
pub fn classify_beta_slope(beta: f64, slope: f64, margin: f64) -> EffectClass {
    if beta < 0.0 && slope <= margin {
        EffectClass::Declining
    } else if beta > 0.0 && slope >= -margin {
        EffectClass::Increasing
    } else {
        EffectClass::Mixed
    }
}

pub fn classify_effect(fit: &RddFit) -> EffectClass {
    debug_assert_eq!(fit.degree, 1, "effect classification applies to degree-1 fits");
    classify_beta_slope(fit.beta(), fit.slope(), SLOPE_MARGIN)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RankedRow {
    pub hashtag: String,
    pub abs_beta: f64,
    pub slope: f64,
    pub intercept: f64,
    pub p_value: f64,
    /// Marked at p <= 0.05.
    pub significant: bool,
}

fn to_row(fit: &RddFit) -> RankedRow {
    RankedRow {
        hashtag: fit.hashtag.clone(),
        abs_beta: fit.beta().abs(),
        slope: fit.slope(),
        intercept: fit.intercept(),
        p_value: fit.beta_p_value(),
        significant: fit.beta_p_value() <= 0.05,
    }
}

/// Filter fits by the treatment p-value, split by effect class, and rank
/// each side by |beta| descending (ties by hashtag).
pub fn rank_hashtags(
    fits: &[RddFit],
    p_max: f64,
    top_n: usize,
) -> (Vec<RankedRow>, Vec<RankedRow>) {
    let mut declining = Vec::new();
    let mut increasing = Vec::new();
    for fit in fits {
        if fit.beta_p_value() > p_max {
            continue;
        }
        match classify_effect(fit) {
            EffectClass::Declining => declining.push(to_row(fit)),
            EffectClass::Increasing => increasing.push(to_row(fit)),
            EffectClass::Mixed => {}
        }
    }
    let order = |a: &RankedRow, b: &RankedRow| {
        b.abs_beta
            .partial_cmp(&a.abs_beta)
            .unwrap()
            .then_with(|| a.hashtag.cmp(&b.hashtag))
    };
    declining.sort_by(order);
    increasing.sort_by(order);
    declining.truncate(top_n);
    increasing.truncate(top_n);
    (declining, increasing)
}

/// Fit every degree from 1 to `max_degree` for goodness-of-fit comparison.
pub fn compare_degrees(series: &HashtagSeries, x0: f64, max_degree: usize) -> Result<Vec<RddFit>> {
    (1..=max_degree.clamp(1, 4))
        .map(|degree| fit_rdd(series, x0, degree))
        .collect()
}

/// Fit all series in parallel, dropping those too short to fit.
pub fn fit_all(series: &[HashtagSeries], x0: f64, degree: usize) -> Vec<RddFit> {
    series
        .par_iter()
        .filter_map(|s| fit_rdd(s, x0, degree).ok())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::oracle;
    use crate::synth::{step_series, StepSeriesSpec};

    fn series_from(xs: &[f64], ys: &[f64]) -> HashtagSeries {
        HashtagSeries {
            hashtag: "test".into(),
            points: xs.iter().copied().zip(ys.iter().copied()).collect(),
            total_count: ys.len() as u64,
        }
    }

    #[test]
    fn exact_step() {
        let fixture = step_series(&StepSeriesSpec {
            seed: 0,
            n_days: 80,
            x0: 39.0,
            intercept: 0.1,
            slope: 0.0,
            jump: 0.2,
            noise_sigma: 0.0,
        });
        let fit = fit_rdd(&fixture.as_series("step"), 39.0, 1).unwrap();
        assert!(fit.slope().abs() < 1e-12);
        assert!((fit.intercept() - 0.1).abs() < 1e-12);
        assert!((fit.beta() - 0.2).abs() < 1e-12);
        assert!(fit.rss < 1e-12);
        assert!(fit.degenerate);
        assert!(fit.p_values.iter().all(|p| *p == 0.0));
    }

    #[test]
    fn pure_trend_no_jump() {
        let xs: Vec<f64> = (0..50).map(|x| x as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let fit = fit_rdd(&series_from(&xs, &ys), 24.0, 1).unwrap();
        assert!((fit.slope() - 2.0).abs() < 1e-10);
        assert!((fit.intercept() - 1.0).abs() < 1e-10);
        assert!(fit.beta().abs() < 1e-9);
    }

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        if a == b {
            return true;
        }
        if a.is_infinite() || b.is_infinite() {
            return a == b;
        }
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn matches_independent_ols_oracle() {
        for seed in 0..10u64 {
            let fixture = step_series(&StepSeriesSpec {
                seed,
                n_days: 70,
                x0: 34.0,
                intercept: 1.5,
                slope: -0.02,
                jump: -0.6,
                noise_sigma: 0.25,
            });
            let series = fixture.as_series("noisy");
            let fit = fit_rdd(&series, 34.0, 1).unwrap();
            let design: Vec<Vec<f64>> = fixture
                .xs
                .iter()
                .map(|&x| vec![1.0, x, if x > 34.0 { 1.0 } else { 0.0 }])
                .collect();
            let reference = oracle::ols(&design, &fixture.ys).unwrap();
            for i in 0..3 {
                assert!(rel_close(fit.coefficients[i], reference.coefficients[i], 1e-8));
                assert!(rel_close(fit.std_errors[i], reference.std_errors[i], 1e-8));
                assert!(rel_close(fit.p_values[i], reference.p_values[i], 1e-8));
            }
            assert!(rel_close(fit.r_squared, reference.r_squared, 1e-8));
            assert!(rel_close(fit.adj_r_squared, reference.adj_r_squared, 1e-8));
            assert!(rel_close(fit.f_statistic, reference.f_statistic, 1e-8));
            assert!(rel_close(fit.f_p_value, reference.f_p_value, 1e-8));
            assert!(rel_close(fit.aic, reference.aic, 1e-8));
            assert!(rel_close(fit.bic, reference.bic, 1e-8));
        }
    }

    #[test]
    fn residuals_orthogonal_to_design() {
        let fixture = step_series(&StepSeriesSpec {
            seed: 5,
            n_days: 60,
            x0: 29.0,
            intercept: 0.4,
            slope: 0.01,
            jump: 0.3,
            noise_sigma: 0.1,
        });
        let series = fixture.as_series("orth");
        let fit = fit_rdd(&series, 29.0, 1).unwrap();
        let mut dots = [0.0f64; 3];
        for (x, y) in &series.points {
            let row = [1.0, *x, if *x > 29.0 { 1.0 } else { 0.0 }];
            let fitted: f64 = row.iter().zip(&fit.coefficients).map(|(a, b)| a * b).sum();
            let r = y - fitted;
            for (d, v) in dots.iter_mut().zip(row) {
                *d += r * v;
            }
        }
        // scale by the column norms
        let n = series.points.len() as f64;
        for (i, d) in dots.iter().enumerate() {
            let scale = if i == 1 { n * 60.0 } else { n };
            assert!((d / scale).abs() < 1e-8, "column {i} dot {d}");
        }
    }

    #[test]
    fn treatment_never_increases_rss() {
        for seed in 0..5u64 {
            let fixture = step_series(&StepSeriesSpec {
                seed,
                n_days: 50,
                x0: 24.0,
                intercept: 0.2,
                slope: 0.005,
                jump: 0.0,
                noise_sigma: 0.2,
            });
            let series = fixture.as_series("rss");
            let with = fit_rdd(&series, 24.0, 1).unwrap();
            // intercept + slope only
            let design: Vec<Vec<f64>> = fixture.xs.iter().map(|&x| vec![1.0, x]).collect();
            let without = oracle::ols(&design, &fixture.ys).unwrap();
            assert!(with.rss <= without.rss + 1e-12);
        }
    }

    #[test]
    fn beta_invariant_under_x_shift() {
        let fixture = step_series(&StepSeriesSpec {
            seed: 9,
            n_days: 60,
            x0: 30.0,
            intercept: 1.0,
            slope: 0.03,
            jump: -0.4,
            noise_sigma: 0.05,
        });
        let base = fit_rdd(&fixture.as_series("shift"), 30.0, 1).unwrap();
        let shifted = HashtagSeries {
            hashtag: "shift".into(),
            points: fixture.xs.iter().map(|x| x + 100.0).zip(fixture.ys.iter().copied()).collect(),
            total_count: 0,
        };
        let moved = fit_rdd(&shifted, 130.0, 1).unwrap();
        assert!((base.beta() - moved.beta()).abs() < 1e-7);
        assert!((base.slope() - moved.slope()).abs() < 1e-9);
    }

    #[test]
    fn singular_when_all_points_on_one_side() {
        let xs: Vec<f64> = (0..30).map(|x| x as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x * 0.1).collect();
        let err = fit_rdd(&series_from(&xs, &ys), 100.0, 1).unwrap_err();
        assert!(matches!(err, Error::Numerical(_)));
    }

    #[test]
    fn effect_classification_rule() {
        assert_eq!(classify_beta_slope(-1.512, -0.047, SLOPE_MARGIN), EffectClass::Declining);
        assert_eq!(classify_beta_slope(0.138, -0.001, SLOPE_MARGIN), EffectClass::Increasing);
        assert_eq!(classify_beta_slope(0.05, -0.02, SLOPE_MARGIN), EffectClass::Mixed);
        assert_eq!(classify_beta_slope(-0.05, 0.0011, SLOPE_MARGIN), EffectClass::Mixed);
        assert_eq!(classify_beta_slope(-0.05, 0.001, SLOPE_MARGIN), EffectClass::Declining);
        assert_eq!(classify_beta_slope(0.0, 0.0, SLOPE_MARGIN), EffectClass::Mixed);
    }

    #[test]
    fn exact_quadratic_degree_two() {
        let xs: Vec<f64> = (0..40).map(|x| x as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 0.5 * x * x - 2.0 * x + 3.0).collect();
        let fits = compare_degrees(&series_from(&xs, &ys), 19.0, 2).unwrap();
        assert!(fits[1].r_squared > 1.0 - 1e-12);
        assert!(fits[1].rss < 1e-6);
    }

    #[test]
    fn ranking_orders_by_abs_beta() {
        let mk = |name: &str, b: f64, m: f64, sigma: f64, seed: u64| {
            let fixture = step_series(&StepSeriesSpec {
                seed,
                n_days: 60,
                x0: 29.0,
                intercept: 2.0,
                slope: m,
                jump: b,
                noise_sigma: sigma,
            });
            let mut series = fixture.as_series(name);
            series.hashtag = name.to_string();
            fit_rdd(&series, 29.0, 1).unwrap()
        };
        let fits = vec![
            mk("bigdrop", -1.5, -0.001, 0.05, 1),
            mk("smalldrop", -0.3, -0.001, 0.05, 2),
            mk("rise", 0.8, 0.0, 0.05, 3),
            mk("noise", 0.0, 0.0, 1.5, 4),
        ];
        let (declining, increasing) = rank_hashtags(&fits, 0.2, 10);
        let names: Vec<&str> = declining.iter().map(|r| r.hashtag.as_str()).collect();
        assert_eq!(names, vec!["bigdrop", "smalldrop"]);
        assert!(declining[0].significant);
        assert_eq!(increasing[0].hashtag, "rise");
        assert!(!increasing.iter().any(|r| r.hashtag == "noise"));
    }

    #[test]
    fn series_normalization_examples() {
        use crate::ingest::{TweetRecord, TweetType};
        let mut records = Vec::new();
        let mk = |id: &str, author: &str, day: i64, hashtags: Vec<&str>| TweetRecord {
            tweet_id: id.to_string(),
            author_id: author.to_string(),
            created_at: day * 86_400 + 60,
            tweet_type: TweetType::Original,
            parent_tweet_id: None,
            parent_author_id: None,
            text: String::new(),
            urls: vec![],
            hashtags: hashtags.into_iter().map(String::from).collect(),
            author_created_at: 1,
            author_followers: 0,
            author_friends: 0,
        };
        // day 0: 50 cohort tweets, 5 carry the tag; day 1: no cohort tweets
        for i in 0..50 {
            let tags = if i < 5 { vec!["tag"] } else { vec![] };
            records.push(mk(&format!("a{i}"), "q1", 0, tags));
        }
        records.push(mk("outsider", "other", 1, vec!["tag"]));
        let cohort: std::collections::BTreeSet<String> = ["q1".to_string()].into_iter().collect();
        let (series, day0) = build_hashtag_series(&records, &cohort, 100);
        assert_eq!(day0, 0);
        assert_eq!(series.len(), 1);
        assert_eq!(series[0].hashtag, "tag");
        assert_eq!(series[0].points, vec![(0.0, 0.1)]);
    }
}
