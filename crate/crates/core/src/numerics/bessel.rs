/// `J_0(z), …, J_kmax(z)` for real `z ≥ 0` by Miller's backward recurrence,
/// normalized with `J_0 + 2 Σ J_{2k} = 1`.
pub fn bessel_j_sequence(z: f64, kmax: usize) -> Vec<f64> {
    assert!(z >= 0.0 && z.is_finite(), "bessel argument must be finite and nonnegative");
    let mut out = vec![0.0; kmax + 1];
    if z == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let n = kmax.max(z.ceil() as usize).max(1);
    let start = 2 * ((n + (160.0 * n as f64).sqrt() as usize) / 2) + 20;

    const BIG: f64 = 1e250;
    let (mut above, mut current) = (0.0f64, 1e-30f64);
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        if k <= kmax {
            out[k] = current;
        }
        if k % 2 == 0 {
            norm += 2.0 * current;
        }
        let below = 2.0 * k as f64 / z * current - above;
        above = current;
        current = below;
        if current.abs() > BIG {
            current /= BIG;
            above /= BIG;
            norm /= BIG;
            for v in out.iter_mut() {
                *v /= BIG;
            }
        }
    }
    out[0] = current;
    norm += current;
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}

/// Smallest order `K` such that `Σ_{k ≥ K} 2|J_k(z)| < tol`, or `None` if it
/// exceeds `cap`. Uses `|J_k(z)| ≤ (z/2)^k / k!`, whose tail beyond `k > z`
/// is bounded by twice its first term.
pub fn chebyshev_order(z: f64, tol: f64, cap: usize) -> Option<usize> {
    if !(tol > 0.0) || !z.is_finite() {
        return None;
    }
    let half = z / 2.0;
    let mut log_term = 0.0f64; // ln((z/2)^k / k!)
    let log_tol = (tol / 4.0).ln();
    for k in 0..=cap {
        if k > 0 {
            log_term += if half > 0.0 { half.ln() } else { f64::NEG_INFINITY } - (k as f64).ln();
        }
        if (k as f64) > z && log_term < log_tol {
            return Some(k.max(1));
        }
    }
    None
}
