//! Probabilists' Hermite polynomials.

/// H_q(x) via H_{q+1} = x H_q - q H_{q-1}.
pub fn hermite_eval(q: u32, x: f64) -> f64 {
    if q == 0 {
        return 1.0;
    }
    let (mut h0, mut h1) = (1.0, x);
    for n in 1..q {
        let h2 = x * h1 - n as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// Fill `out[q] = H_q(x) / q!` for q = 0..out.len().
///
/// The scaled recurrence e_{q+1} = (x e_q - e_{q-1}) / (q+1) avoids
/// forming large factorials.
pub(crate) fn hermite_scaled_all(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = x;
    }
    for q in 1..out.len().saturating_sub(1) {
        out[q + 1] = (x * out[q] - out[q - 1]) / (q as f64 + 1.0);
    }
}

/// Monomial coefficients of H_q: H_q(z) = sum_k c_k z^{q-2k},
/// c_k = (-1)^k q! / (2^k k! (q-2k)!). Returned as (power, coefficient).
pub fn hermite_monomials(q: u32) -> Vec<(u32, i128)> {
    let mut out = Vec::new();
    // c_0 = 1; c_{k+1} = -c_k (q-2k)(q-2k-1) / (2(k+1))
    let mut c: i128 = 1;
    let mut k = 0u32;
    loop {
        out.push((q - 2 * k, c));
        if 2 * (k + 1) > q {
            break;
        }
        let a = (q - 2 * k) as i128 * (q - 2 * k - 1) as i128;
        c = -c * a / (2 * (k as i128 + 1));
        k += 1;
    }
    out
}
