//! Dense symmetric positive-definite helpers on row-major `d x d` slices.

/// Lower Cholesky factor `L` with `A = L Lᵀ`, or `None` if a pivot is not
/// strictly positive.
pub fn cholesky(a: &[f64], d: usize) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), d * d);
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let dot: f64 = (0..j).map(|k| l[i * d + k] * l[j * d + k]).sum();
            if i == j {
                let pivot = a[i * d + i] - dot;
                if !pivot.is_finite() || pivot <= 0.0 {
                    return None;
                }
                l[i * d + i] = pivot.sqrt();
            } else {
                l[i * d + j] = (a[i * d + j] - dot) / l[j * d + j];
            }
        }
    }
    Some(l)
}

/// Inverse of an SPD matrix through its Cholesky factor; the result is
/// exactly symmetric.
pub fn spd_inverse(a: &[f64], d: usize) -> Option<Vec<f64>> {
    let l = cholesky(a, d)?;
    // Invert L in place (lower triangular, forward substitution per column).
    let mut linv = vec![0.0; d * d];
    for col in 0..d {
        linv[col * d + col] = 1.0 / l[col * d + col];
        for i in col + 1..d {
            let s: f64 = (col..i).map(|k| l[i * d + k] * linv[k * d + col]).sum();
            linv[i * d + col] = -s / l[i * d + i];
        }
    }
    // A⁻¹ = L⁻ᵀ L⁻¹
    let mut inv = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let s: f64 = (i..d).map(|k| linv[k * d + i] * linv[k * d + j]).sum();
            inv[i * d + j] = s;
            inv[j * d + i] = s;
        }
    }
    Some(inv)
}

pub fn is_symmetric(a: &[f64], d: usize, rel_tol: f64) -> bool {
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    (0..d).all(|i| (0..i).all(|j| (a[i * d + j] - a[j * d + i]).abs() <= rel_tol * scale))
}
