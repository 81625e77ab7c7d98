//! Co-engagement account vectors: a binary account x cascade incidence
//! matrix reduced to its top-k singular directions. Each account's vector is
//! the projection of its incidence row, i.e. row i of U_k * Sigma_k.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::cascades::Cascade;

/// Reduced co-engagement vectors for every account seen in the training
/// cascades. Accounts outside the map get the zero vector at inference.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct UserVectors {
    pub k: usize,
    pub vectors: BTreeMap<String, Vec<f64>>,
    pub singular_values: Vec<f64>,
}

impl UserVectors {
    pub fn get(&self, account: &str) -> Option<&[f64]> {
        self.vectors.get(account).map(|v| v.as_slice())
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix (row-major,
/// n x n). Returns eigenvalues descending with matching eigenvectors as
/// rows. Deterministic: fixed sweep order, fixed convergence threshold.
pub fn symmetric_eigen(mut a: Vec<f64>, n: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let frob: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let tol = 1e-14 * frob.max(1e-300);
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p * n + q].abs();
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= tol / (n * n) as f64 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                // Standard two-sided rotation eliminating a[p][q].
                let (s, c) = {
                    let tau = (aqq - app) / (2.0 * apq);
                    let t = if tau >= 0.0 {
                        1.0 / (tau + (1.0 + tau * tau).sqrt())
                    } else {
                        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    (t * c, c)
                };
                for i in 0..n {
                    let aip = a[i * n + p];
                    let aiq = a[i * n + q];
                    a[i * n + p] = c * aip - s * aiq;
                    a[i * n + q] = s * aip + c * aiq;
                }
                for j in 0..n {
                    let apj = a[p * n + j];
                    let aqj = a[q * n + j];
                    a[p * n + j] = c * apj - s * aqj;
                    a[q * n + j] = s * apj + c * aqj;
                }
                for i in 0..n {
                    let vip = v[i * n + p];
                    let viq = v[i * n + q];
                    v[i * n + p] = c * vip - s * viq;
                    v[i * n + q] = s * vip + c * viq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[j * n + j]
            .partial_cmp(&a[i * n + i])
            .unwrap()
            .then(i.cmp(&j))
    });
    let values: Vec<f64> = order.iter().map(|&i| a[i * n + i]).collect();
    let vectors: Vec<Vec<f64>> = order
        .iter()
        .map(|&col| (0..n).map(|row| v[row * n + col]).collect())
        .collect();
    (values, vectors)
}

/// Flip an eigen/singular vector so its largest-magnitude entry (smallest
/// index on ties) is positive.
fn fix_sign(vec: &mut [f64]) {
    let mut best = 0usize;
    for (i, x) in vec.iter().enumerate() {
        if x.abs() > vec[best].abs() {
            best = i;
        }
    }
    if vec[best] < 0.0 {
        for x in vec.iter_mut() {
            *x = -*x;
        }
    }
}

/// Build the account x cascade binary incidence matrix and project each
/// account row onto the top-k singular directions. `k` is truncated to the
/// numerical rank with a warning when it exceeds it.
pub fn build_user_vectors(cascades: &[Cascade], k: usize) -> UserVectors {
    assert!(k >= 1, "k must be at least 1");
    let mut account_set: BTreeSet<&str> = BTreeSet::new();
    for c in cascades {
        for e in &c.events {
            account_set.insert(e.author_id.as_str());
        }
    }
    let accounts: Vec<&str> = account_set.into_iter().collect();
    let index: BTreeMap<&str, usize> = accounts.iter().enumerate().map(|(i, a)| (*a, i)).collect();
    let (n_acc, n_cas) = (accounts.len(), cascades.len());
    if n_acc == 0 || n_cas == 0 {
        return UserVectors::default();
    }

    // Binary incidence, row-major accounts x cascades.
    let mut m = vec![0.0f64; n_acc * n_cas];
    for (j, c) in cascades.iter().enumerate() {
        for e in &c.events {
            m[index[e.author_id.as_str()] * n_cas + j] = 1.0;
        }
    }

    // Eigendecompose the smaller Gram matrix.
    let use_cascade_side = n_cas <= n_acc;
    let side = if use_cascade_side { n_cas } else { n_acc };
    let mut gram = vec![0.0f64; side * side];
    if use_cascade_side {
        for a in 0..side {
            for b in a..side {
                let mut dot = 0.0;
                for i in 0..n_acc {
                    dot += m[i * n_cas + a] * m[i * n_cas + b];
                }
                gram[a * side + b] = dot;
                gram[b * side + a] = dot;
            }
        }
    } else {
        for a in 0..side {
            for b in a..side {
                let ra = &m[a * n_cas..(a + 1) * n_cas];
                let rb = &m[b * n_cas..(b + 1) * n_cas];
                let dot: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
                gram[a * side + b] = dot;
                gram[b * side + a] = dot;
            }
        }
    }
    let (eigvals, eigvecs) = symmetric_eigen(gram, side);

    let lambda_max = eigvals.first().copied().unwrap_or(0.0).max(0.0);
    let rank = eigvals
        .iter()
        .filter(|&&l| l > 1e-12 && l > lambda_max * 1e-10)
        .count();
    let k_eff = k.min(rank);
    if k_eff < k {
        log::warn!("user-vector dimension truncated from {k} to rank {k_eff}");
    }

    let mut singular_values = Vec::with_capacity(k_eff);
    // columns[j][i] = sigma_j * u_{i,j}
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(k_eff);
    for j in 0..k_eff {
        let sigma = eigvals[j].max(0.0).sqrt();
        singular_values.push(sigma);
        let mut col = vec![0.0f64; n_acc];
        if use_cascade_side {
            // u_j = M v_j / sigma; column = M v_j.
            let vj = &eigvecs[j];
            for i in 0..n_acc {
                let row = &m[i * n_cas..(i + 1) * n_cas];
                col[i] = row.iter().zip(vj).map(|(x, y)| x * y).sum();
            }
            // sign fixed on u_j (same pattern as col)
            fix_sign(&mut col);
        } else {
            let uj = &eigvecs[j];
            let mut u = uj.clone();
            fix_sign(&mut u);
            for i in 0..n_acc {
                col[i] = sigma * u[i];
            }
        }
        columns.push(col);
    }

    let mut vectors = BTreeMap::new();
    for (i, account) in accounts.iter().enumerate() {
        let v: Vec<f64> = columns.iter().map(|col| col[i]).collect();
        vectors.insert(account.to_string(), v);
    }
    UserVectors { k: k_eff, vectors, singular_values }
}
