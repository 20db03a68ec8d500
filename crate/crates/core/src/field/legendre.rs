/// Unit-normalized associated Legendre functions p_{ell,m}(t), m = 0..=ell,
/// with int_{-1}^{1} p_{ell,m}^2 dt = 1.
pub fn normalized_legendre_row(ell: u32, t: f64, out: &mut [f64]) {
    let l = ell as usize;
    debug_assert!(out.len() > l);
    let s = (1.0 - t * t).max(0.0).sqrt();
    let mut pmm = std::f64::consts::FRAC_1_SQRT_2;
    for m in 0..=l {
        if m > 0 {
            pmm *= ((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * s;
        }
        if m == l {
            out[m] = pmm;
            break;
        }
        // climb in degree at fixed order
        let mut p0 = pmm;
        let mut p1 = ((2 * m + 3) as f64).sqrt() * t * pmm;
        let mut a_prev = ((2 * m + 3) as f64).sqrt();
        for j in m + 2..=l {
            let jf = j as f64;
            let mf = m as f64;
            let a = ((4.0 * jf * jf - 1.0) / (jf * jf - mf * mf)).sqrt();
            let p2 = a * (t * p1 - p0 / a_prev);
            p0 = p1;
            p1 = p2;
            a_prev = a;
        }
        out[m] = p1;
    }
}
