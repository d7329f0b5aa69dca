//! First-order Marcum Q function.

/// Right-tail probability `Q1(a, b) = P(X > b)` for a Rician variable
/// with noncentrality `a` and unit scale; equivalently the right tail of
/// a noncentral chi-squared with 2 degrees of freedom and noncentrality
/// `a^2` evaluated at `b^2`.
///
/// Series form: `Q1(a,b) = sum_k Pois(k; a^2/2) * Q_gamma(k+1, b^2/2)`
/// accumulated with running terms to relative accuracy ~1e-12. Far tails
/// short-circuit: for `|a - b| >= 12` the result is 0 or 1 to well below
/// f64 resolution.
pub fn marcum_q1(a: f64, b: f64) -> f64 {
    assert!(a >= 0.0 && b >= 0.0, "marcum_q1 arguments must be nonnegative");
    if b == 0.0 {
        return 1.0;
    }
    if a - b >= 12.0 {
        return 1.0;
    }
    if b - a >= 12.0 && b >= 16.0 {
        return 0.0;
    }
    let lam = 0.5 * a * a;
    let th = 0.5 * b * b;

    // Running Poisson weight over k and running regularized upper
    // incomplete gamma Q(k+1, th) = e^()-th) * sum_{j<=k} th^j/j!.
    let mut pois = (-lam).exp();
    let mut gterm = (-th).exp();
    let mut gsum = gterm;
    let mut total = 0.0f64;
    let mut k = 0usize;
    loop {
        total += pois * gsum;
        // Stop once the remaining Poisson mass cannot move the result.
        if k as f64 > lam && pois < 1e-17 * (1.0 + total) {
            break;
        }
        if k > 200_000 {
            break;
        }
        pois *= lam / (k as f64 + 1.0);
        gterm *= th / (k as f64 + 1.0);
        gsum += gterm;
        if gsum > 1.0 {
            gsum = 1.0;
        }
        k += 1;
    }
    total.clamp(0.0, 1.0)
}
