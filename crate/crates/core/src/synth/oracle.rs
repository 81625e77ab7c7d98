//! Independent brute-force reference computations used by tests and the
//! acceptance suite. Nothing here shares code with the modules it checks:
//! OLS is textbook normal equations with explicit Gauss-Jordan inversion,
//! t/F tail probabilities come from a local incomplete-beta evaluation,
//! modularity optima from exhaustive partition enumeration, propagation
//! curves from naive double loops, and SVD from nalgebra.
//!
//! Inputs are capped: partition enumeration <= 10 nodes, OLS <= 1,000
//! points, propagation trees <= 200 nodes.

use std::collections::BTreeMap;

use crate::cascades::Cascade;
use crate::error::{Error, Result};

pub const MAX_PARTITION_NODES: usize = 10;
pub const MAX_OLS_POINTS: usize = 1000;
pub const MAX_TREE_NODES: usize = 200;

// ---------------------------------------------------------------------------
// Textbook OLS with explicit matrix inversion
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct OlsStats {
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
}

/// Gauss-Jordan inversion with partial pivoting.
fn invert(matrix: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = matrix.len();
    let mut aug: Vec<Vec<f64>> = matrix
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| aug[a][col].abs().partial_cmp(&aug[b][col].abs()).unwrap())
            .unwrap();
        if aug[pivot][col].abs() < 1e-12 {
            return Err(Error::numerical("singular matrix in oracle inversion"));
        }
        aug.swap(col, pivot);
        let p = aug[col][col];
        for v in aug[col].iter_mut() {
            *v /= p;
        }
        for row in 0..n {
            if row != col {
                let factor = aug[row][col];
                if factor != 0.0 {
                    for j in 0..2 * n {
                        aug[row][j] -= factor * aug[col][j];
                    }
                }
            }
        }
    }
    Ok(aug.into_iter().map(|row| row[n..].to_vec()).collect())
}

/// Ordinary least squares over explicit design rows, with inference
/// statistics computed the long way.
pub fn ols(design: &[Vec<f64>], ys: &[f64]) -> Result<OlsStats> {
    let n = design.len();
    if n == 0 || n != ys.len() {
        return Err(Error::invalid("oracle OLS: empty or mismatched input"));
    }
    if n > MAX_OLS_POINTS {
        return Err(Error::invalid(format!("oracle OLS capped at {MAX_OLS_POINTS} points")));
    }
    let p = design[0].len();
    if n <= p {
        return Err(Error::invalid("oracle OLS: need more rows than columns"));
    }

    let mut xtx = vec![vec![0.0f64; p]; p];
    let mut xty = vec![0.0f64; p];
    for (row, &y) in design.iter().zip(ys) {
        for i in 0..p {
            xty[i] += row[i] * y;
            for j in 0..p {
                xtx[i][j] += row[i] * row[j];
            }
        }
    }
    let inv = invert(&xtx)?;
    let coefficients: Vec<f64> = (0..p)
        .map(|i| (0..p).map(|j| inv[i][j] * xty[j]).sum())
        .collect();

    let mut rss = 0.0;
    for (row, &y) in design.iter().zip(ys) {
        let fitted: f64 = row.iter().zip(&coefficients).map(|(x, b)| x * b).sum();
        rss += (y - fitted) * (y - fitted);
    }
    let mean_y = ys.iter().sum::<f64>() / n as f64;
    let tss: f64 = ys.iter().map(|y| (y - mean_y) * (y - mean_y)).sum();

    let df = (n - p) as f64;
    let sigma2 = rss / df;
    let std_errors: Vec<f64> = (0..p).map(|i| (sigma2 * inv[i][i]).max(0.0).sqrt()).collect();
    let degenerate = rss <= 1e-12 * tss.max(1.0);
    let t_values: Vec<f64> = coefficients
        .iter()
        .zip(&std_errors)
        .map(|(b, se)| if *se > 0.0 { b / se } else { f64::INFINITY })
        .collect();
    let p_values: Vec<f64> = t_values
        .iter()
        .map(|t| if degenerate { 0.0 } else { 2.0 * student_t_sf(t.abs(), df) })
        .collect();

    let r_squared = if tss > 0.0 { 1.0 - rss / tss } else { 1.0 };
    let adj_r_squared = 1.0 - (1.0 - r_squared) * (n as f64 - 1.0) / df;
    let f_statistic = if p > 1 && rss > 0.0 {
        ((tss - rss) / (p as f64 - 1.0)) / (rss / df)
    } else {
        f64::INFINITY
    };
    let f_p_value = if degenerate || !f_statistic.is_finite() {
        0.0
    } else {
        f_sf(f_statistic, p as f64 - 1.0, df)
    };
    let log_likelihood = if rss > 0.0 {
        -0.5 * n as f64 * ((std::f64::consts::TAU * rss / n as f64).ln() + 1.0)
    } else {
        f64::INFINITY
    };
    let aic = 2.0 * p as f64 - 2.0 * log_likelihood;
    let bic = p as f64 * (n as f64).ln() - 2.0 * log_likelihood;
    Ok(OlsStats {
        coefficients,
        std_errors,
        t_values,
        p_values,
        rss,
        r_squared,
        adj_r_squared,
        f_statistic,
        f_p_value,
        log_likelihood,
        aic,
        bic,
        n,
    })
}

// ---------------------------------------------------------------------------
// Tail probabilities via the regularized incomplete beta function
// ---------------------------------------------------------------------------

fn ln_gamma(x: f64) -> f64 {
    // Lanczos approximation, g = 7, n = 9.
    const COEFFS: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEFFS[0];
    for (i, c) in COEFFS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (std::f64::consts::TAU).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Continued fraction for the incomplete beta function (Lentz's method).
fn betacf(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 300;
    const EPS: f64 = 1e-15;
    const FPMIN: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < FPMIN {
        d = FPMIN;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta I_x(a, b).
pub fn betai(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let front = (ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln()).exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * betacf(a, b, x) / a
    } else {
        1.0 - front * betacf(b, a, 1.0 - x) / b
    }
}

/// P(T > t) for Student's t with `df` degrees of freedom, t >= 0.
pub fn student_t_sf(t: f64, df: f64) -> f64 {
    0.5 * betai(df / 2.0, 0.5, df / (df + t * t))
}

/// P(F > f) for the F distribution with (d1, d2) degrees of freedom.
pub fn f_sf(f: f64, d1: f64, d2: f64) -> f64 {
    if f <= 0.0 {
        return 1.0;
    }
    betai(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f))
}

// ---------------------------------------------------------------------------
// Modularity by exhaustive partition enumeration
// ---------------------------------------------------------------------------

/// Modularity of a membership vector over undirected weighted edges
/// (self-loops contribute twice to their endpoint's degree).
pub fn modularity(n: usize, edges: &[(usize, usize, f64)], membership: &[usize]) -> f64 {
    assert_eq!(membership.len(), n);
    let mut adj = vec![0.0f64; n * n];
    for &(u, v, w) in edges {
        if u == v {
            adj[u * n + u] += 2.0 * w;
        } else {
            adj[u * n + v] += w;
            adj[v * n + u] += w;
        }
    }
    let degree: Vec<f64> = (0..n).map(|i| (0..n).map(|j| adj[i * n + j]).sum()).collect();
    let two_m: f64 = degree.iter().sum();
    if two_m == 0.0 {
        return 0.0;
    }
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if membership[i] == membership[j] {
                q += adj[i * n + j] - degree[i] * degree[j] / two_m;
            }
        }
    }
    q / two_m
}

/// Best partition over all set partitions (restricted growth strings).
pub fn best_partition(n: usize, edges: &[(usize, usize, f64)]) -> Result<(f64, Vec<usize>)> {
    if n == 0 || n > MAX_PARTITION_NODES {
        return Err(Error::invalid(format!(
            "partition enumeration supports 1..={MAX_PARTITION_NODES} nodes, got {n}"
        )));
    }
    let mut assignment = vec![0usize; n];
    let mut best_q = f64::NEG_INFINITY;
    let mut best = assignment.clone();
    loop {
        let q = modularity(n, edges, &assignment);
        if q > best_q {
            best_q = q;
            best = assignment.clone();
        }
        // next restricted growth string
        let mut i = n;
        loop {
            if i == 1 {
                return Ok((best_q, best));
            }
            i -= 1;
            let max_prefix = assignment[..i].iter().copied().max().unwrap();
            if assignment[i] <= max_prefix {
                assignment[i] += 1;
                for j in (i + 1)..n {
                    assignment[j] = 0;
                }
                break;
            }
        }
    }
}

/// Normalized mutual information between two labelings
/// (2 I / (H_a + H_b); 1.0 when both are trivially identical).
pub fn nmi(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let mut count_a: BTreeMap<usize, f64> = BTreeMap::new();
    let mut count_b: BTreeMap<usize, f64> = BTreeMap::new();
    let mut joint: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *count_a.entry(x).or_default() += 1.0;
        *count_b.entry(y).or_default() += 1.0;
        *joint.entry((x, y)).or_default() += 1.0;
    }
    let h = |counts: &BTreeMap<usize, f64>| -> f64 {
        counts.values().map(|c| -(c / n) * (c / n).ln()).sum()
    };
    let (ha, hb) = (h(&count_a), h(&count_b));
    if ha + hb == 0.0 {
        return 1.0;
    }
    let mut mi = 0.0;
    for ((x, y), c) in &joint {
        let pxy = c / n;
        mi += pxy * (pxy / (count_a[x] / n * count_b[y] / n)).ln();
    }
    2.0 * mi / (ha + hb)
}

// ---------------------------------------------------------------------------
// Propagation curves by naive double loops
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Default)]
pub struct OracleCurves {
    pub size_ccdf: Vec<(f64, f64, u64)>,
    pub breadth_by_depth: Vec<(f64, f64, u64)>,
    pub breadth_by_depth_strict: Vec<(f64, f64, u64)>,
    pub unique_users: Vec<(f64, f64, u64)>,
    pub time_to_kth_unique: Vec<(f64, f64, u64)>,
}

struct NaiveTree {
    depths: Vec<usize>,
    repaired: bool,
}

/// Tree by exhaustive parent lookup: for every event scan the whole cascade
/// for its parent; missing parents attach to the root.
fn naive_tree(cascade: &Cascade) -> Result<NaiveTree> {
    // distinct tweets, first occurrence order
    let mut ids: Vec<&str> = Vec::new();
    for e in &cascade.events {
        if !ids.iter().any(|x| *x == e.tweet_id) {
            ids.push(&e.tweet_id);
        }
    }
    if ids.len() > MAX_TREE_NODES {
        return Err(Error::invalid(format!("oracle tree capped at {MAX_TREE_NODES} nodes")));
    }
    let mut parents: Vec<usize> = vec![0; ids.len()];
    let mut repaired = false;
    for (pos, id) in ids.iter().enumerate() {
        if pos == 0 {
            continue;
        }
        let event = cascade.events.iter().find(|e| e.tweet_id == *id).unwrap();
        let mut parent_pos = None;
        if let Some(pid) = event.parent_tweet_id.as_deref() {
            for (qpos, qid) in ids.iter().enumerate() {
                if *qid == pid && qpos != pos {
                    parent_pos = Some(qpos);
                    break;
                }
            }
        }
        parents[pos] = match parent_pos {
            Some(q) => q,
            None => {
                repaired = true;
                0
            }
        };
    }
    let mut depths = vec![0usize; ids.len()];
    for pos in 1..ids.len() {
        let mut d = 0usize;
        let mut cur = pos;
        while cur != 0 && d <= ids.len() {
            cur = parents[cur];
            d += 1;
        }
        depths[pos] = d;
    }
    Ok(NaiveTree { depths, repaired })
}

fn naive_breadth(trees: &[&NaiveTree]) -> Vec<(f64, f64, u64)> {
    let max_depth = trees
        .iter()
        .map(|t| t.depths.iter().copied().max().unwrap_or(0))
        .max()
        .unwrap_or(0);
    let mut out = Vec::new();
    for d in 0..=max_depth {
        let mut total = 0.0;
        let mut n = 0u64;
        for t in trees {
            let reach = t.depths.iter().copied().max().unwrap_or(0);
            if reach >= d {
                let count = t.depths.iter().filter(|&&x| x == d).count();
                total += count as f64;
                n += 1;
            }
        }
        if n > 0 {
            out.push((d as f64, total / n as f64, n));
        }
    }
    out
}

pub fn propagation_curves(cascades: &[Cascade]) -> Result<OracleCurves> {
    if cascades.is_empty() {
        return Err(Error::invalid("oracle curves need a non-empty group"));
    }
    let mut curves = OracleCurves::default();

    // CCDF: for every distinct size count cascades at least that large.
    let mut distinct_sizes: Vec<usize> = Vec::new();
    for c in cascades {
        if !distinct_sizes.contains(&c.size()) {
            distinct_sizes.push(c.size());
        }
    }
    distinct_sizes.sort_unstable();
    for s in distinct_sizes {
        let ge = cascades.iter().filter(|c| c.size() >= s).count();
        curves.size_ccdf.push((s as f64, ge as f64 / cascades.len() as f64, cascades.len() as u64));
    }

    let trees: Vec<NaiveTree> = cascades.iter().map(naive_tree).collect::<Result<_>>()?;
    let all: Vec<&NaiveTree> = trees.iter().collect();
    let clean: Vec<&NaiveTree> = trees.iter().filter(|t| !t.repaired).collect();
    curves.breadth_by_depth = naive_breadth(&all);
    curves.breadth_by_depth_strict = naive_breadth(&clean);

    // unique users after the i-th event (1-based)
    let max_len = cascades.iter().map(|c| c.size()).max().unwrap();
    for i in 0..max_len {
        let mut total = 0.0;
        let mut n = 0u64;
        for c in cascades {
            if c.size() > i {
                let mut distinct: Vec<&str> = Vec::new();
                for e in &c.events[..=i] {
                    if !distinct.contains(&e.author_id.as_str()) {
                        distinct.push(&e.author_id);
                    }
                }
                total += distinct.len() as f64;
                n += 1;
            }
        }
        curves.unique_users.push(((i + 1) as f64, total / n as f64, n));
    }

    // mean hours to the k-th distinct author
    let max_unique = cascades
        .iter()
        .map(|c| {
            let mut distinct: Vec<&str> = Vec::new();
            for e in &c.events {
                if !distinct.contains(&e.author_id.as_str()) {
                    distinct.push(&e.author_id);
                }
            }
            distinct.len()
        })
        .max()
        .unwrap();
    for k in 1..=max_unique {
        let mut total = 0.0;
        let mut n = 0u64;
        for c in cascades {
            let mut distinct: Vec<&str> = Vec::new();
            for e in &c.events {
                if !distinct.contains(&e.author_id.as_str()) {
                    distinct.push(&e.author_id);
                    if distinct.len() == k {
                        total += (e.created_at - c.events[0].created_at) as f64 / 3600.0;
                        n += 1;
                        break;
                    }
                }
            }
        }
        if n > 0 {
            curves.time_to_kth_unique.push((k as f64, total / n as f64, n));
        }
    }
    Ok(curves)
}

// ---------------------------------------------------------------------------
// Exhaustive threshold scan
// ---------------------------------------------------------------------------

/// Scan every candidate threshold (midpoints of distinct score values with
/// 0/1 sentinels) and recount the confusion matrix from scratch for each.
pub fn threshold_scan(scores: &[f64], labels: &[bool]) -> (f64, f64) {
    let mut values: Vec<f64> = scores.to_vec();
    values.push(0.0);
    values.push(1.0);
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values.dedup();
    let candidates: Vec<f64> = values.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect();

    let mut best_theta = candidates[0];
    let mut best_g = -1.0f64;
    for &theta in &candidates {
        let mut tp = 0u64;
        let mut fp = 0u64;
        let mut tn = 0u64;
        let mut fn_ = 0u64;
        for (s, &l) in scores.iter().zip(labels) {
            if *s > theta {
                if l {
                    tp += 1
                } else {
                    fp += 1
                }
            } else if l {
                fn_ += 1
            } else {
                tn += 1
            }
        }
        let sens = if tp + fn_ > 0 { tp as f64 / (tp + fn_) as f64 } else { 0.0 };
        let spec = if tn + fp > 0 { tn as f64 / (tn + fp) as f64 } else { 0.0 };
        let g = (sens * spec).sqrt();
        if g > best_g {
            best_g = g;
            best_theta = theta;
        }
    }
    (best_theta, best_g)
}

// ---------------------------------------------------------------------------
// Dense SVD (nalgebra) and brute-force tf-idf
// ---------------------------------------------------------------------------

/// Singular values (descending) of a dense row-major matrix.
pub fn singular_values(rows: &[Vec<f64>]) -> Vec<f64> {
    if rows.is_empty() || rows[0].is_empty() {
        return Vec::new();
    }
    let m = nalgebra::DMatrix::from_row_iterator(
        rows.len(),
        rows[0].len(),
        rows.iter().flat_map(|r| r.iter().copied()),
    );
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sv
}

/// Brute-force tf-idf ranking per cluster document, ties broken by term.
pub fn tfidf_rank(cluster_docs: &[Vec<String>], top: usize) -> Vec<Vec<(String, f64)>> {
    let k = cluster_docs.len();
    cluster_docs
        .iter()
        .map(|doc| {
            let mut terms: Vec<&String> = Vec::new();
            for t in doc {
                if !terms.contains(&t) {
                    terms.push(t);
                }
            }
            let mut scored: Vec<(String, f64)> = terms
                .into_iter()
                .map(|term| {
                    let tf = doc.iter().filter(|t| *t == term).count() as f64;
                    let df = cluster_docs.iter().filter(|d| d.contains(term)).count() as f64;
                    (term.clone(), tf * (k as f64 / df).ln())
                })
                .collect();
            scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
            scored.truncate(top);
            scored
        })
        .collect()
}

/// Log-likelihood-ratio score for exponential gap mixtures, the Bayes-rate
/// reference for the planted-signal detector fixture.
pub fn bayes_gap_score(gaps_hours: &[f64], unreliable_mean: f64, reliable_mean: f64) -> f64 {
    gaps_hours
        .iter()
        .map(|g| {
            let lu = -(unreliable_mean.ln()) - g / unreliable_mean;
            let lr = -(reliable_mean.ln()) - g / reliable_mean;
            lu - lr
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invert_identity_recovery() {
        let m = vec![vec![4.0, 2.0], vec![2.0, 3.0]];
        let inv = invert(&m).unwrap();
        // m * inv == I
        for i in 0..2 {
            for j in 0..2 {
                let x: f64 = (0..2).map(|k| m[i][k] * inv[k][j]).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((x - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ols_exact_step() {
        // y = 0.1 before x0=39, 0.3 after; design [1, x, ind]
        let mut design = Vec::new();
        let mut ys = Vec::new();
        for x in 0..80 {
            design.push(vec![1.0, x as f64, if x > 39 { 1.0 } else { 0.0 }]);
            ys.push(if x > 39 { 0.3 } else { 0.1 });
        }
        let fit = ols(&design, &ys).unwrap();
        assert!((fit.coefficients[0] - 0.1).abs() < 1e-12);
        assert!(fit.coefficients[1].abs() < 1e-12);
        assert!((fit.coefficients[2] - 0.2).abs() < 1e-12);
        assert!(fit.rss < 1e-12);
        assert_eq!(fit.p_values, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn t_tail_matches_known_values() {
        // Known references: P(T_10 > 2.228) ~ 0.025, P(T_inf-ish > 1.96) ~ 0.025.
        assert!((student_t_sf(2.228, 10.0) - 0.025).abs() < 5e-4);
        assert!((student_t_sf(1.96, 100000.0) - 0.025).abs() < 5e-4);
        // symmetry/limits
        assert!((student_t_sf(0.0, 5.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn f_tail_matches_known_value() {
        // P(F(1, 10) > 4.965) ~ 0.05
        assert!((f_sf(4.965, 1.0, 10.0) - 0.05).abs() < 5e-4);
    }

    #[test]
    fn modularity_two_cliques() {
        // two triangles joined by one edge
        let edges = vec![
            (0, 1, 1.0),
            (1, 2, 1.0),
            (0, 2, 1.0),
            (3, 4, 1.0),
            (4, 5, 1.0),
            (3, 5, 1.0),
            (2, 3, 1.0),
        ];
        let (q, partition) = best_partition(6, &edges).unwrap();
        assert!(q > 0.3);
        assert_eq!(partition[0], partition[1]);
        assert_eq!(partition[0], partition[2]);
        assert_eq!(partition[3], partition[4]);
        assert_eq!(partition[3], partition[5]);
        assert_ne!(partition[0], partition[3]);
    }

    #[test]
    fn partition_cap_enforced() {
        assert!(best_partition(11, &[]).is_err());
    }

    #[test]
    fn nmi_extremes() {
        assert_eq!(nmi(&[0, 0, 1, 1], &[1, 1, 0, 0]), 1.0);
        let independent = nmi(&[0, 0, 1, 1], &[0, 1, 0, 1]);
        assert!(independent.abs() < 1e-12);
    }

    #[test]
    fn threshold_scan_example() {
        let (theta, g) = threshold_scan(&[0.1, 0.2, 0.8, 0.9], &[false, false, true, true]);
        assert_eq!(theta, 0.5);
        assert_eq!(g, 1.0);
    }

    #[test]
    fn singular_values_of_diagonal() {
        let rows = vec![vec![3.0, 0.0], vec![0.0, 4.0]];
        let sv = singular_values(&rows);
        assert!((sv[0] - 4.0).abs() < 1e-12);
        assert!((sv[1] - 3.0).abs() < 1e-12);
    }
}
