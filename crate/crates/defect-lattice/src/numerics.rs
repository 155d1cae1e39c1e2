//! Small numerical kernels shared across modules.

/// Pairwise summation in index order. Deterministic for a given slice.
pub fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= 16 {
        return x.iter().sum();
    }
    let mid = x.len() / 2;
    pairwise_sum(&x[..mid]) + pairwise_sum(&x[mid..])
}

fn simpson_rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson quadrature on a finite interval.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    // split into panels so that narrow features are not missed
    let panels = 64;
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for i in 0..panels {
        let (x0, x1) = (a + i as f64 * h, a + (i + 1) as f64 * h);
        let (f0, f1, fm) = (f(x0), f(x1), f(0.5 * (x0 + x1)));
        let whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
        total += simpson_rec(f, x0, x1, f0, fm, f1, whole, tol / panels as f64, 40);
    }
    total
}

/// Quadrature of a decaying integrand on [a, inf) via r = a + t/(1-t).
pub fn integrate_to_infinity(f: &dyn Fn(f64) -> f64, a: f64, tol: f64) -> f64 {
    let g = |t: f64| {
        if t >= 1.0 {
            return 0.0;
        }
        let s = 1.0 - t;
        let v = f(a + t / s) / (s * s);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    integrate(&g, 0.0, 1.0, tol)
}

/// Surface measure of the unit sphere in R^d (d = 1, 2, 3).
pub fn sphere_area(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        _ => 4.0 * std::f64::consts::PI,
    }
}

/// Volume of the ball of radius r in R^d.
pub fn ball_volume(d: usize, r: f64) -> f64 {
    match d {
        1 => 2.0 * r,
        2 => std::f64::consts::PI * r * r,
        _ => 4.0 / 3.0 * std::f64::consts::PI * r * r * r,
    }
}

/// Upper bound for sum_{x in P, |x| > radius} f(|x|) over a point set with
/// minimum spacing `r0`, for `f` nonincreasing and nonnegative. Each point
/// owns a disjoint ball of radius r0/2 on which f(|y| - r0/2) >= f(|x|).
pub fn packing_tail(f: &dyn Fn(f64) -> f64, radius: f64, d: usize, r0: f64) -> f64 {
    let h = 0.5 * r0;
    let a = (radius - h).max(0.0);
    let g = |r: f64| r.powi(d as i32 - 1) * f((r - h).max(0.0));
    sphere_area(d) / ball_volume(d, h) * integrate_to_infinity(&g, a, 1e-14)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination.
    pub r2: f64,
    /// Root mean square residual.
    pub rms: f64,
    /// Standard error of the slope.
    pub slope_se: f64,
}

/// Ordinary least squares y = a + b x.
pub fn line_fit(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let dof = (n as f64 - 2.0).max(1.0);
    Some(LineFit { slope, intercept, r2, rms: (sse / nf).sqrt(), slope_se: (sse / dof / sxx).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_integers() {
        let x: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&x), 499500.0);
    }

    #[test]
    fn semi_infinite_quadrature() {
        let v = integrate_to_infinity(&|r: f64| (-r).exp(), 0.0, 1e-12);
        assert!((v - 1.0).abs() < 1e-10);
        let v = integrate_to_infinity(&|r: f64| (1.0 + r).powi(-3), 1.0, 1e-12);
        assert!((v - 0.125).abs() < 1e-10);
    }

    #[test]
    fn packing_tail_dominates_square_lattice_sum() {
        let f = |r: f64| (1.0 + r).powi(-5);
        let mut direct = 0.0;
        for i in -400i64..=400 {
            for j in -400i64..=400 {
                let r = ((i * i + j * j) as f64).sqrt();
                if r > 5.0 {
                    direct += f(r);
                }
            }
        }
        let bound = packing_tail(&f, 5.0, 2, 1.0);
        assert!(bound >= direct, "{bound} < {direct}");
        assert!(bound < 20.0 * direct);
    }

    #[test]
    fn exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 1.5 - 2.0 * v).collect();
        let f = line_fit(&x, &y).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-14);
        assert!((f.r2 - 1.0).abs() < 1e-14);
    }
}
