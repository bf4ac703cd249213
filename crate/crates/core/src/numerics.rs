//! Shared numerical kernels: trapezoidal quadrature on uniform grids,
//! fourth-order finite differences, Gauss-Legendre panels, golden-section
//! minimization and cubic interpolation.

/// Composite trapezoid of samples `y` with uniform spacing `h`.
pub fn trapezoid(y: &[f64], h: f64) -> f64 {
    if y.len() < 2 {
        return 0.0;
    }
    let sum: f64 = y.iter().sum();
    h * (sum - 0.5 * (y[0] + y[y.len() - 1]))
}

/// First derivative of uniformly spaced samples, fourth-order accurate.
/// Centered five-point stencil in the interior, one-sided at the two
/// nodes on each edge.
pub fn derivative1(u: &[f64], h: f64) -> Vec<f64> {
    let m = u.len();
    assert!(m >= 5, "derivative1 needs at least 5 nodes");
    let mut d = vec![0.0; m];
    let inv = 1.0 / (12.0 * h);
    for i in 2..m - 2 {
        d[i] = (-u[i + 2] + 8.0 * u[i + 1] - 8.0 * u[i - 1] + u[i - 2]) * inv;
    }
    d[0] = (-25.0 * u[0] + 48.0 * u[1] - 36.0 * u[2] + 16.0 * u[3] - 3.0 * u[4]) * inv;
    d[1] = (-3.0 * u[0] - 10.0 * u[1] + 18.0 * u[2] - 6.0 * u[3] + u[4]) * inv;
    d[m - 1] =
        (25.0 * u[m - 1] - 48.0 * u[m - 2] + 36.0 * u[m - 3] - 16.0 * u[m - 4] + 3.0 * u[m - 5])
            * inv;
    d[m - 2] =
        (3.0 * u[m - 1] + 10.0 * u[m - 2] - 18.0 * u[m - 3] + 6.0 * u[m - 4] - u[m - 5]) * inv;
    d
}

/// Second derivative of uniformly spaced samples, fourth-order accurate.
pub fn derivative2(u: &[f64], h: f64) -> Vec<f64> {
    let m = u.len();
    assert!(m >= 6, "derivative2 needs at least 6 nodes");
    let mut d = vec![0.0; m];
    let inv = 1.0 / (12.0 * h * h);
    for i in 2..m - 2 {
        d[i] = (-u[i + 2] + 16.0 * u[i + 1] - 30.0 * u[i] + 16.0 * u[i - 1] - u[i - 2]) * inv;
    }
    d[0] = (45.0 * u[0] - 154.0 * u[1] + 214.0 * u[2] - 156.0 * u[3] + 61.0 * u[4] - 10.0 * u[5])
        * inv;
    d[1] = (10.0 * u[0] - 15.0 * u[1] - 4.0 * u[2] + 14.0 * u[3] - 6.0 * u[4] + u[5]) * inv;
    d[m - 1] = (45.0 * u[m - 1] - 154.0 * u[m - 2] + 214.0 * u[m - 3] - 156.0 * u[m - 4]
        + 61.0 * u[m - 5]
        - 10.0 * u[m - 6])
        * inv;
    d[m - 2] = (10.0 * u[m - 1] - 15.0 * u[m - 2] - 4.0 * u[m - 3] + 14.0 * u[m - 4]
        - 6.0 * u[m - 5]
        + u[m - 6])
        * inv;
    d
}

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1],
/// computed by Newton iteration on the Legendre polynomial.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess for the i-th root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(x) and P'_n(x).
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Integrate `f` over [a, b] with `panels` Gauss-Legendre panels of `pts`
/// points each.
pub fn panel_gl<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize, pts: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(pts);
    let w = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * w;
        let mid = lo + 0.5 * w;
        let half = 0.5 * w;
        let mut s = 0.0;
        for (x, wt) in nodes.iter().zip(&weights) {
            s += wt * f(mid + half * x);
        }
        total += s * half;
    }
    total
}

/// Golden-section search for the minimum of `f` on [a, b].
/// Returns (x_min, f_min). `xtol` is the absolute interval tolerance.
pub fn golden_section_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, xtol: f64) -> (f64, f64) {
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - INVPHI * (b - a);
    let mut x2 = a + INVPHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while (b - a).abs() > xtol {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INVPHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INVPHI * (b - a);
            f2 = f(x2);
        }
    }
    if f1 < f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Cubic (four-point Lagrange) interpolation of uniformly spaced samples
/// at abscissa `x`, with `x0` the first node and `h` the spacing.
/// Clamps to the sample range at the edges.
pub fn cubic_interp(u: &[f64], x0: f64, h: f64, x: f64) -> f64 {
    let m = u.len();
    debug_assert!(m >= 4);
    let s = (x - x0) / h;
    let mut i = s.floor() as isize - 1;
    if i < 0 {
        i = 0;
    }
    if i as usize > m - 4 {
        i = (m - 4) as isize;
    }
    let i = i as usize;
    let t = s - (i as f64 + 1.0); // offset from the second stencil node, in [-1, 2]
    let (u0, u1, u2, u3) = (u[i], u[i + 1], u[i + 2], u[i + 3]);
    // Lagrange basis on nodes -1, 0, 1, 2.
    let l0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
    let l1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
    let l2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
    let l3 = (t + 1.0) * t * (t - 1.0) / 6.0;
    u0 * l0 + u1 * l1 + u2 * l2 + u3 * l3
}

/// Smallest power of two >= n.
pub fn next_pow2(n: usize) -> usize {
    let mut p = 1;
    while p < n {
        p <<= 1;
    }
    p
}

/// Deterministic float formatting used by every CSV/JSON writer:
/// 17 significant digits, scientific notation (round-trips f64 exactly).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// FNV-1a 64-bit hash, hex encoded. Used for config fingerprints.
pub fn fnv1a_hex(data: &[u8]) -> String {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in data {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{hash:016x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_linear_exact() {
        let y: Vec<f64> = (0..11).map(|i| 2.0 * i as f64).collect();
        assert!((trapezoid(&y, 0.5) - 50.0).abs() < 1e-12);
    }

    #[test]
    fn derivatives_exact_on_quartics() {
        // Both stencil families are fourth order: exact on x^4 up to roundoff.
        let h = 0.1;
        let u: Vec<f64> = (0..12).map(|i| (i as f64 * h).powi(4)).collect();
        let d1 = derivative1(&u, h);
        let d2 = derivative2(&u, h);
        for (i, (a, b)) in d1.iter().zip(&d2).enumerate() {
            let x = i as f64 * h;
            assert!((a - 4.0 * x.powi(3)).abs() < 1e-10, "d1 at node {i}");
            assert!((b - 12.0 * x * x).abs() < 1e-8, "d2 at node {i}");
        }
    }

    #[test]
    fn gl_integrates_gaussian() {
        let v = panel_gl(
            |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt(),
            -9.0,
            9.0,
            18,
            20,
        );
        assert!((v - 1.0).abs() < 1e-14);
    }

    #[test]
    fn golden_section_quadratic() {
        let (x, _) = golden_section_min(|x| (x - 0.3).powi(2), 0.0, 1.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-9);
    }

    #[test]
    fn cubic_interp_reproduces_cubics() {
        let h = 0.25;
        let u: Vec<f64> = (0..9).map(|i| (i as f64 * h).powi(3)).collect();
        for &x in &[0.1, 0.625, 1.3, 1.99] {
            assert!((cubic_interp(&u, 0.0, h, x) - x.powi(3)).abs() < 1e-12);
        }
    }

    #[test]
    fn fmt_round_trips() {
        for &x in &[1.0 / 3.0, -2.718281828459045e-12, 6.02214076e23] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }
}
