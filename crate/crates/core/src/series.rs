//! Truncated power-series arithmetic and the formal solution of the Abel
//! equation `u(f(z)) = u(z) + 1` at a parabolic fixed point.

use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Product of two series truncated to `len` coefficients.
pub(crate) fn mul(a: &[Complex64], b: &[Complex64], len: usize) -> Vec<Complex64> {
    let mut out = vec![ZERO; len];
    for (i, &ai) in a.iter().enumerate().take(len) {
        if ai == ZERO {
            continue;
        }
        for (j, &bj) in b.iter().enumerate().take(len - i) {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// `log(1 + g)` for a series `g` with `g[0] = 0`.
fn log1p(g: &[Complex64], len: usize) -> Vec<Complex64> {
    // (log(1+g))' = g' / (1+g), solved coefficientwise.
    let one_plus: Vec<Complex64> = (0..len)
        .map(|i| if i == 0 { Complex64::new(1.0, 0.0) } else { g.get(i).copied().unwrap_or(ZERO) })
        .collect();
    let dg: Vec<Complex64> = (0..len)
        .map(|i| g.get(i + 1).copied().unwrap_or(ZERO) * (i as f64 + 1.0))
        .collect();
    // h = dg / (1+g)
    let mut h = vec![ZERO; len];
    for i in 0..len {
        let mut s = dg[i];
        for k in 1..=i {
            s -= one_plus[k] * h[i - k];
        }
        h[i] = s;
    }
    let mut out = vec![ZERO; len];
    for i in 1..len {
        out[i] = h[i - 1] / i as f64;
    }
    out
}

/// `exp(s)` for a series with `s[0] = 0`.
fn exp(s: &[Complex64], len: usize) -> Vec<Complex64> {
    // e' = s' e
    let mut e = vec![ZERO; len];
    e[0] = Complex64::new(1.0, 0.0);
    for n in 1..len {
        let mut acc = ZERO;
        for k in 1..=n {
            acc += s.get(k).copied().unwrap_or(ZERO) * k as f64 * e[n - k];
        }
        e[n] = acc / n as f64;
    }
    e
}

/// Laurent-plus-log expansion `u(z) = sum_j c_j z^j + beta * log z`.
#[derive(Debug, Clone)]
pub(crate) struct AbelSeries {
    /// `coef[k]` multiplies `z^(k - q)`; the `z^0` slot is unused.
    pub coef: Vec<Complex64>,
    pub beta: Complex64,
    pub q: usize,
}

/// Solves `u(f(z)) - u(z) - 1 = O(z^orders)` for `f(z) = z + a z^(q+1) + ...`
/// given by its coefficients `f[k]` (index = power).
pub(crate) fn solve_abel(f: &[Complex64], q: usize, orders: usize) -> AbelSeries {
    let a = f[q + 1];
    let len = orders + q + 1;
    // g(z) = f(z)/z - 1
    let g: Vec<Complex64> = (0..len).map(|i| if i == 0 { ZERO } else { f.get(i + 1).copied().unwrap_or(ZERO) }).collect();
    let log_g = log1p(&g, len);

    let mut residual = vec![ZERO; orders];
    residual[0] = Complex64::new(-1.0, 0.0);
    let mut coef = vec![ZERO; orders];
    let mut beta = ZERO;

    for m in 0..orders {
        let r = residual[m];
        if m == q {
            beta = -r / a;
            for (i, &l) in log_g.iter().enumerate().skip(m) {
                if i < orders {
                    residual[i] += beta * l;
                }
            }
            continue;
        }
        let j = m as i64 - q as i64;
        let c = -r / (a * j as f64);
        coef[m] = c;
        let scaled: Vec<Complex64> = log_g.iter().map(|&l| l * j as f64).collect();
        let mut e = exp(&scaled, len);
        e[0] -= 1.0;
        for (i, &ei) in e.iter().enumerate() {
            let idx = j + i as i64;
            if idx >= m as i64 && (idx as usize) < orders {
                residual[idx as usize] += c * ei;
            }
        }
    }
    AbelSeries { coef, beta, q }
}

impl AbelSeries {
    /// Value at `z`, with `log z` measured from the ray through `dir`
    /// (`log(z / dir)`, principal branch).
    pub fn eval(&self, z: Complex64, dir: Complex64) -> Complex64 {
        let inv = z.inv();
        let mut acc = ZERO;
        // negative powers
        let mut p = Complex64::new(1.0, 0.0);
        for k in (0..self.q).rev() {
            p *= inv;
            acc += self.coef[k] * p;
        }
        // positive powers (Horner)
        let mut pos = ZERO;
        for k in (self.q + 1..self.coef.len()).rev() {
            pos = (pos + self.coef[k]) * z;
        }
        acc + pos + self.beta * (z / dir).ln()
    }

    pub fn derivative(&self, z: Complex64) -> Complex64 {
        let inv = z.inv();
        let mut acc = ZERO;
        let mut p = inv;
        for k in (0..self.q).rev() {
            p *= inv;
            let j = k as f64 - self.q as f64;
            acc += self.coef[k] * j * p;
        }
        let mut pos = ZERO;
        for k in (self.q + 1..self.coef.len()).rev() {
            let j = (k - self.q) as f64;
            pos = pos * z + self.coef[k] * j;
        }
        // pos currently holds sum j c_j z^(j-1) evaluated by Horner from the top
        acc + pos + self.beta * inv
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn log_and_exp_invert() {
        let g = vec![ZERO, c(0.5), c(-0.25), c(0.125)];
        let l = log1p(&g, 6);
        // log(1 + z/2 - z^2/4 + z^3/8): first term z/2
        assert!((l[1] - c(0.5)).norm() < 1e-15);
        let e = exp(&l, 6);
        for i in 1..4 {
            assert!((e[i] - g[i]).norm() < 1e-14);
        }
    }

    #[test]
    fn z_plus_z2_has_unit_log_term() {
        // f = z + z^2: u = -1/z + log z + ...
        let f = vec![ZERO, c(1.0), c(1.0)];
        let s = solve_abel(&f, 1, 8);
        assert!((s.coef[0] - c(-1.0)).norm() < 1e-15);
        assert!((s.beta - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn residual_is_high_order() {
        let f = vec![ZERO, c(1.0), c(1.0)];
        let s = solve_abel(&f, 1, 10);
        let dir = c(-1.0);
        let z = Complex64::new(-0.02, 0.001);
        let fz = z + z * z;
        let res = s.eval(fz, dir) - s.eval(z, dir) - 1.0;
        assert!(res.norm() < 1e-14, "{res}");
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        let f = vec![ZERO, c(1.0), ZERO, c(-2.0), c(1.0)];
        let s = solve_abel(&f, 2, 12);
        let dir = c(1.0);
        let z = Complex64::new(0.05, 0.01);
        let h = 1e-6;
        let fd = (s.eval(z + h, dir) - s.eval(z - h, dir)) / (2.0 * h);
        let an = s.derivative(z);
        assert!((fd - an).norm() / an.norm() < 1e-7, "{fd} vs {an}");
    }
}
