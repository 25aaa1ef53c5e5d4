//! Straight-from-the-formula reference implementations. They share no code
//! with the library beyond the test-data RNG.
#![allow(dead_code)]

/// Inverse by Gauss-Jordan elimination with partial pivoting.
pub fn gauss_jordan_inverse(a: &[f64], d: usize) -> Vec<f64> {
    let w = 2 * d;
    let mut aug = vec![0.0; d * w];
    for i in 0..d {
        aug[i * w..i * w + d].copy_from_slice(&a[i * d..(i + 1) * d]);
        aug[i * w + d + i] = 1.0;
    }
    for col in 0..d {
        let pivot = (col..d).max_by(|&r, &s| aug[r * w + col].abs().total_cmp(&aug[s * w + col].abs())).unwrap();
        if pivot != col {
            for k in 0..w {
                aug.swap(col * w + k, pivot * w + k);
            }
        }
        let p = aug[col * w + col];
        for k in 0..w {
            aug[col * w + k] /= p;
        }
        for r in 0..d {
            if r != col {
                let f = aug[r * w + col];
                if f != 0.0 {
                    for k in 0..w {
                        aug[r * w + k] -= f * aug[col * w + k];
                    }
                }
            }
        }
    }
    (0..d).flat_map(|i| aug[i * w + d..(i + 1) * w].to_vec()).collect()
}

pub fn mean(rows: &[Vec<f64>]) -> Vec<f64> {
    let d = rows[0].len();
    (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / rows.len() as f64).collect()
}

/// Sample covariance (n - 1 divisor), row-major.
pub fn covariance(rows: &[Vec<f64>]) -> Vec<f64> {
    let (n, d) = (rows.len(), rows[0].len());
    let mu = mean(rows);
    let mut s = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            s[i * d + j] = rows.iter().map(|r| (r[i] - mu[i]) * (r[j] - mu[j])).sum::<f64>() / (n - 1) as f64;
        }
    }
    s
}

/// `sqrt((x - mu)^T (S + lambda I)^-1 (x - mu))` with `lambda = max(1e-6 tr(S) / d, 1e-12)`.
pub fn mdsa(mu: &[f64], cov: &[f64], x: &[f64]) -> f64 {
    let d = mu.len();
    let tr: f64 = (0..d).map(|i| cov[i * d + i]).sum();
    let lambda = (1e-6 * tr / d as f64).max(1e-12);
    let mut reg = cov.to_vec();
    (0..d).for_each(|i| reg[i * d + i] += lambda);
    let inv = gauss_jordan_inverse(&reg, d);
    let diff: Vec<f64> = x.iter().zip(mu).map(|(a, b)| a - b).collect();
    let mut q = 0.0;
    for i in 0..d {
        for j in 0..d {
            q += diff[i] * inv[i * d + j] * diff[j];
        }
    }
    q.max(0.0).sqrt()
}

pub fn mdsa_from_traces(rows: &[Vec<f64>], x: &[f64]) -> f64 {
    mdsa(&mean(rows), &covariance(rows), x)
}

/// Plain Gaussian KDE: drop features with sample variance below the
/// threshold, Scott bandwidth per kept feature, then the double loop over
/// stored traces and features.
pub fn lsa(rows: &[Vec<f64>], var_threshold: f64, x: &[f64]) -> f64 {
    let (m, d) = (rows.len(), rows[0].len());
    let mu = mean(rows);
    let var: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| (r[j] - mu[j]).powi(2)).sum::<f64>() / (m - 1) as f64).collect();
    let kept: Vec<usize> = (0..d).filter(|&j| var[j] >= var_threshold && var[j] > 0.0).collect();
    let k = kept.len() as f64;
    let h: Vec<f64> = kept.iter().map(|&j| var[j].sqrt() * (m as f64).powf(-1.0 / (k + 4.0))).collect();
    let mut f = 0.0;
    for r in rows {
        let mut prod = 1.0;
        for (idx, &j) in kept.iter().enumerate() {
            let hj = h[idx];
            prod *= (2.0 * std::f64::consts::PI * hj * hj).powf(-0.5) * (-(x[j] - r[j]).powi(2) / (2.0 * hj * hj)).exp();
        }
        f += prod;
    }
    f /= m as f64;
    -(f.max(1e-300)).ln()
}

/// The savings points for one skip count, enumerated directly: sort, take the
/// first `k`, count and average.
pub fn savings(sa: &[f64], iou: &[f64], ids: &[String], k: usize, thresholds: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..sa.len()).collect();
    order.sort_by(|&a, &b| sa[a].partial_cmp(&sa[b]).unwrap().then(ids[a].cmp(&ids[b])));
    let skipped = &order[..k];
    let class =
        thresholds.iter().map(|&t| if k == 0 { 0.0 } else { skipped.iter().filter(|&&i| iou[i] < t).count() as f64 / k as f64 }).collect();
    let mut total = 0.0;
    for &i in skipped {
        total += 1.0 - iou[i];
    }
    (class, if k == 0 { 0.0 } else { total / k as f64 })
}
