//! Seeded k-means with k-means++ initialization, plus the silhouette and
//! Davies-Bouldin separability measures used for model selection.

use rayon::prelude::*;

use crate::rng::SplitMix64;

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[derive(Clone, Debug)]
pub struct KMeansFit {
    pub centroids: Vec<Vec<f64>>,
    pub assignment: Vec<usize>,
    pub inertia: f64,
    /// Inertia after each assign/update iteration; non-increasing.
    pub inertia_trace: Vec<f64>,
}

fn assign_points(data: &[Vec<f64>], centroids: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let pairs: Vec<(usize, f64)> = data
        .par_iter()
        .map(|x| {
            let mut best = (0usize, f64::INFINITY);
            for (ci, c) in centroids.iter().enumerate() {
                let d = sq_dist(x, c);
                if d < best.1 {
                    best = (ci, d);
                }
            }
            best
        })
        .collect();
    let inertia = pairs.iter().map(|(_, d)| d).sum();
    (pairs.into_iter().map(|(c, _)| c).collect(), inertia)
}

fn kmeanspp_init(data: &[Vec<f64>], k: usize, rng: &mut SplitMix64) -> Vec<Vec<f64>> {
    let mut centroids = Vec::with_capacity(k);
    centroids.push(data[rng.next_index(data.len())].clone());
    let mut d2: Vec<f64> = data.iter().map(|x| sq_dist(x, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total <= 0.0 {
            rng.next_index(data.len())
        } else {
            let mut target = rng.next_f64() * total;
            let mut chosen = data.len() - 1;
            for (i, w) in d2.iter().enumerate() {
                target -= w;
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        };
        centroids.push(data[next].clone());
        let last = centroids.last().unwrap();
        for (i, x) in data.iter().enumerate() {
            let d = sq_dist(x, last);
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    centroids
}

/// One seeded k-means run. Stops when assignments reach a fixpoint, the
/// relative inertia improvement drops below `tol`, or `max_iter` passes.
pub fn kmeans(
    data: &[Vec<f64>],
    k: usize,
    rng: &mut SplitMix64,
    max_iter: usize,
    tol: f64,
) -> KMeansFit {
    assert!(k >= 1 && data.len() >= k);
    let dim = data[0].len();
    let mut centroids = kmeanspp_init(data, k, rng);
    let (mut assignment, mut inertia) = assign_points(data, &centroids);
    let mut trace = vec![inertia];

    for _ in 0..max_iter {
        // Update step: each non-empty centroid becomes the mean of its
        // members; an emptied cluster is re-seeded on the farthest point.
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (x, &c) in data.iter().zip(&assignment) {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(x) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for s in sums[c].iter_mut() {
                    *s /= counts[c] as f64;
                }
                centroids[c] = std::mem::take(&mut sums[c]);
            } else {
                let far = data
                    .iter()
                    .enumerate()
                    .map(|(i, x)| (i, sq_dist(x, &centroids[assignment[i]])))
                    .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(b.0.cmp(&a.0)))
                    .map(|(i, _)| i)
                    .unwrap();
                centroids[c] = data[far].clone();
            }
        }
        let (next_assignment, next_inertia) = assign_points(data, &centroids);
        let unchanged = next_assignment == assignment;
        let small_gain = inertia - next_inertia <= tol * inertia.max(f64::MIN_POSITIVE);
        assignment = next_assignment;
        inertia = next_inertia;
        trace.push(inertia);
        if unchanged || small_gain {
            break;
        }
    }
    KMeansFit { centroids, assignment, inertia, inertia_trace: trace }
}

/// Best of `restarts` seeded runs by final inertia (ties keep the earliest
/// restart).
pub fn kmeans_best_of(
    data: &[Vec<f64>],
    k: usize,
    seed: u64,
    restarts: usize,
    max_iter: usize,
    tol: f64,
) -> KMeansFit {
    let mut base = SplitMix64::new(seed);
    let mut best: Option<KMeansFit> = None;
    for r in 0..restarts.max(1) {
        let mut rng = base.fork(r as u64);
        let fit = kmeans(data, k, &mut rng, max_iter, tol);
        if best.as_ref().map_or(true, |b| fit.inertia < b.inertia) {
            best = Some(fit);
        }
    }
    best.unwrap()
}

/// Mean silhouette coefficient. With more than `sample_cap` points a seeded
/// subsample is scored instead of the full set.
pub fn silhouette(
    data: &[Vec<f64>],
    assignment: &[usize],
    k: usize,
    sample_cap: usize,
    seed: u64,
) -> f64 {
    let n = data.len();
    let idx: Vec<usize> = if n > sample_cap {
        SplitMix64::new(seed).sample_indices(n, sample_cap)
    } else {
        (0..n).collect()
    };
    let scores: Vec<f64> = idx
        .par_iter()
        .map(|&i| {
            let mut sum = vec![0.0f64; k];
            let mut count = vec![0u64; k];
            for &j in &idx {
                if j == i {
                    continue;
                }
                sum[assignment[j]] += sq_dist(&data[i], &data[j]).sqrt();
                count[assignment[j]] += 1;
            }
            let own = assignment[i];
            if count[own] == 0 {
                return 0.0; // singleton in the sample
            }
            let a = sum[own] / count[own] as f64;
            let b = (0..k)
                .filter(|&c| c != own && count[c] > 0)
                .map(|c| sum[c] / count[c] as f64)
                .fold(f64::INFINITY, f64::min);
            if !b.is_finite() {
                return 0.0;
            }
            (b - a) / a.max(b)
        })
        .collect();
    scores.iter().sum::<f64>() / scores.len() as f64
}

/// Davies-Bouldin index; lower is better. Empty clusters are skipped.
pub fn davies_bouldin(data: &[Vec<f64>], assignment: &[usize], k: usize) -> f64 {
    let dim = data[0].len();
    let mut centroids = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (x, &c) in data.iter().zip(assignment) {
        counts[c] += 1;
        for (s, v) in centroids[c].iter_mut().zip(x) {
            *s += v;
        }
    }
    for c in 0..k {
        if counts[c] > 0 {
            for s in centroids[c].iter_mut() {
                *s /= counts[c] as f64;
            }
        }
    }
    let mut scatter = vec![0.0f64; k];
    for (x, &c) in data.iter().zip(assignment) {
        scatter[c] += sq_dist(x, &centroids[c]).sqrt();
    }
    for c in 0..k {
        if counts[c] > 0 {
            scatter[c] /= counts[c] as f64;
        }
    }
    let live: Vec<usize> = (0..k).filter(|&c| counts[c] > 0).collect();
    if live.len() < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    for &i in &live {
        let mut worst = 0.0f64;
        for &j in &live {
            if i == j {
                continue;
            }
            let m = sq_dist(&centroids[i], &centroids[j]).sqrt();
            if m > 0.0 {
                worst = worst.max((scatter[i] + scatter[j]) / m);
            }
        }
        total += worst;
    }
    total / live.len() as f64
}
