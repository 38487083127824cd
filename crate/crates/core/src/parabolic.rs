//! The quadratic map `P(z) = λz + z²` with `λ = e^{2πi p/q}`, escape tests,
//! and the parabolic germ of `P^q` at the fixed point 0.

use num_complex::Complex64;
use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{self, AbelSeries};

/// Escape radius used when none is given.
pub const DEFAULT_ESCAPE_RADIUS: f64 = 4.0;

/// Largest `q` accepted: `P^q` is expanded exactly, and its degree is `2^q`.
pub const MAX_Q: u32 = 12;

/// Default number of `P^q` steps allowed when looking for a petal trap.
pub const DEFAULT_CERTIFY_STEPS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParabolicPolynomial {
    pub p: i64,
    pub q: u32,
    pub lambda: Complex64,
}

/// `e^{2πi p/q}`, exact when the angle is a multiple of a quarter turn.
fn root_of_unity(p: i64, q: u32) -> Complex64 {
    let q = q as i64;
    let r = p.rem_euclid(q);
    if (4 * r) % q == 0 {
        return match 4 * r / q {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
    }
    let theta = std::f64::consts::TAU * r as f64 / q as f64;
    Complex64::new(theta.cos(), theta.sin())
}

impl ParabolicPolynomial {
    pub fn new(p: i64, q: u32) -> Result<Self> {
        if q == 0 {
            return Err(Error::domain("q must be positive"));
        }
        if q > MAX_Q {
            return Err(Error::domain(format!("q = {q} exceeds the supported maximum {MAX_Q}")));
        }
        if p.gcd(&(q as i64)) != 1 {
            return Err(Error::domain(format!("{p}/{q} is not in lowest terms")));
        }
        Ok(Self { p, q, lambda: root_of_unity(p, q) })
    }

    /// Parses `"p/q"`.
    pub fn parse(s: &str) -> Result<Self> {
        let (p, q) = s
            .split_once('/')
            .ok_or_else(|| Error::domain(format!("expected P/Q, got {s:?}")))?;
        let p: i64 = p.trim().parse().map_err(|_| Error::domain(format!("bad numerator in {s:?}")))?;
        let q: u32 = q.trim().parse().map_err(|_| Error::domain(format!("bad denominator in {s:?}")))?;
        Self::new(p, q)
    }

    #[inline]
    pub fn eval(&self, z: Complex64) -> Complex64 {
        z * (self.lambda + z)
    }

    #[inline]
    pub fn eval_q(&self, mut z: Complex64) -> Complex64 {
        for _ in 0..self.q {
            z = self.eval(z);
        }
        z
    }

    /// The critical point `-λ/2`.
    pub fn critical_point(&self) -> Complex64 {
        -self.lambda / 2.0
    }

    /// Exact coefficients of the polynomial `P^q` (index = power).
    pub fn iterate_coefficients(&self, order: usize) -> Vec<Complex64> {
        let mut s = vec![Complex64::new(0.0, 0.0); order + 1];
        if order >= 1 {
            s[1] = Complex64::new(1.0, 0.0);
        }
        for _ in 0..self.q {
            let sq = series::mul(&s, &s, order + 1);
            for (si, qi) in s.iter_mut().zip(sq) {
                *si = self.lambda * *si + qi;
            }
        }
        s
    }
}

/// Truncated expansion of `P^q(z) = z + a z^{q+1} + ...` at 0.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParabolicGerm {
    pub q: u32,
    pub a: Complex64,
    /// Coefficients of `P^q` through `order`, indexed by power.
    pub higher: Vec<Complex64>,
    pub order: usize,
}

/// Truncated power series of `P^q` at 0.
pub fn germ_coefficients(poly: &ParabolicPolynomial, order: usize) -> Result<ParabolicGerm> {
    let q = poly.q as usize;
    if order < q + 1 {
        return Err(Error::domain(format!("germ order {order} must be at least q+1 = {}", q + 1)));
    }
    let higher = poly.iterate_coefficients(order);
    let a = higher[q + 1];
    if a.norm() == 0.0 {
        return Err(Error::domain("degenerate germ: leading coefficient vanishes"));
    }
    Ok(ParabolicGerm { q: poly.q, a, higher, order })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EscapeStatus {
    Escaped(usize),
    Bounded(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EscapeResult {
    pub status: EscapeStatus,
    pub final_modulus: f64,
}

/// Iterates `P` until `|P^n(z)| > radius` or `maxiter` steps have passed.
pub fn escape_test(poly: &ParabolicPolynomial, z: Complex64, maxiter: usize, radius: f64) -> EscapeResult {
    let r2 = radius * radius;
    let mut z = z;
    for n in 0..=maxiter {
        if z.norm_sqr() > r2 {
            return EscapeResult { status: EscapeStatus::Escaped(n), final_modulus: z.norm() };
        }
        if n == maxiter {
            break;
        }
        z = poly.eval(z);
    }
    EscapeResult { status: EscapeStatus::Bounded(maxiter), final_modulus: z.norm() }
}

/// Where an orbit was caught by an attracting petal trap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapEntry {
    /// Number of `P` steps taken before the orbit was inside the trap.
    pub steps: usize,
    pub point: Complex64,
    pub petal: usize,
}

/// Outcome of following an orbit of `P` under a joint escape/trap test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OrbitFate {
    Escaped(usize),
    Trapped(TrapEntry),
    Undetermined,
}

/// Geometry of the attracting petals of `P^q`: trap half-planes in the
/// coordinate `w = -1/(q a z^q)`, where `Re w` grows by at least 1/2 per step.
#[derive(Debug, Clone)]
pub struct PetalGeometry {
    pub poly: ParabolicPolynomial,
    pub germ: ParabolicGerm,
    /// Trap threshold `C₀`: the half-plane `Re w > C₀`.
    pub trap_re: f64,
    /// Log-correction coefficient `b` in `u = -1/(q a z^q) + b log(z^q) + ...`.
    pub log_coef: Complex64,
    pub(crate) abel: AbelSeries,
    q_a: Complex64,
}

/// Residual orders used in the asymptotic Fatou expansion.
pub(crate) fn abel_orders(q: usize) -> usize {
    4 * q + 6
}

impl PetalGeometry {
    pub fn new(poly: &ParabolicPolynomial) -> Result<Self> {
        let q = poly.q as usize;
        let orders = abel_orders(q);
        let full_degree = 1usize << q;
        let germ = germ_coefficients(poly, full_degree.max(orders + q + 2))?;
        let abel = series::solve_abel(&germ.higher, q, orders);
        let log_coef = abel.beta / q as f64;
        let r_star = trap_radius(&germ);
        let bound_re = 1.0 / (q as f64 * germ.a.norm() * r_star.powi(q as i32));
        let trap_re = bound_re.max(10.0 * (1.0 + log_coef.norm()));
        let q_a = germ.a * q as f64;
        Ok(Self { poly: *poly, germ, trap_re, log_coef, abel, q_a })
    }

    /// The trap coordinate `w = -1/(q a z^q)`.
    #[inline]
    pub fn trap_coordinate(&self, z: Complex64) -> Complex64 {
        -(self.q_a * z.powu(self.poly.q)).inv()
    }

    #[inline]
    pub fn in_trap(&self, z: Complex64) -> bool {
        if z.norm_sqr() == 0.0 {
            return false;
        }
        self.trap_coordinate(z).re > self.trap_re
    }

    /// Unit direction of the attracting axis numbered `j`.
    pub fn attracting_direction(&self, j: usize) -> Complex64 {
        let q = self.poly.q as f64;
        let base = (-self.germ.a.inv()).arg();
        Complex64::from_polar(1.0, (base + std::f64::consts::TAU * j as f64) / q)
    }

    /// Unit direction of the repelling axis numbered `j`.
    pub fn repelling_direction(&self, j: usize) -> Complex64 {
        let q = self.poly.q as f64;
        let base = self.germ.a.inv().arg();
        Complex64::from_polar(1.0, (base + std::f64::consts::TAU * j as f64) / q)
    }

    /// Attracting petal whose sector contains `z`.
    pub fn attracting_petal_of(&self, z: Complex64) -> usize {
        sector_index(z, self.attracting_direction(0), self.poly.q)
    }

    pub fn repelling_petal_of(&self, z: Complex64) -> usize {
        sector_index(z, self.repelling_direction(0), self.poly.q)
    }

    /// Follows the orbit of `P` until it escapes `radius`, enters an attracting
    /// trap, or `max_steps` steps pass.
    pub fn follow(&self, z: Complex64, max_steps: usize, radius: f64) -> OrbitFate {
        let r2 = radius * radius;
        let mut z = z;
        for n in 0..=max_steps {
            let m = z.norm_sqr();
            if m > r2 {
                return OrbitFate::Escaped(n);
            }
            if m > 0.0 && m < self.trap_modulus_sq() && self.in_trap(z) {
                return OrbitFate::Trapped(TrapEntry { steps: n, point: z, petal: self.attracting_petal_of(z) });
            }
            if n < max_steps {
                z = self.poly.eval(z);
            }
        }
        OrbitFate::Undetermined
    }

    /// Like [`follow`](Self::follow), but only accepts entry into trap `petal`.
    pub fn follow_to_petal(&self, z: Complex64, petal: usize, max_steps: usize, radius: f64) -> OrbitFate {
        let r2 = radius * radius;
        let mut z = z;
        for n in 0..=max_steps {
            let m = z.norm_sqr();
            if m > r2 {
                return OrbitFate::Escaped(n);
            }
            if m > 0.0 && m < self.trap_modulus_sq() && self.in_trap(z) && self.attracting_petal_of(z) == petal {
                return OrbitFate::Trapped(TrapEntry { steps: n, point: z, petal });
            }
            if n < max_steps {
                z = self.poly.eval(z);
            }
        }
        OrbitFate::Undetermined
    }

    /// Squared modulus bound implied by `Re w > C₀`.
    #[inline]
    fn trap_modulus_sq(&self) -> f64 {
        let q = self.poly.q as f64;
        (1.0 / (q * self.germ.a.norm() * self.trap_re)).powf(2.0 / q)
    }
}

fn sector_index(z: Complex64, dir0: Complex64, q: u32) -> usize {
    let rel = (z / dir0).arg(); // (-π, π]
    let q = q as f64;
    let k = (rel * q / std::f64::consts::TAU).round();
    (k.rem_euclid(q)) as usize
}

/// Largest radius on which the majorant of `|Δw - 1|` stays below 1/2.
fn trap_radius(germ: &ParabolicGerm) -> f64 {
    let q = germ.q as usize;
    let a = germ.a.norm();
    let bound = |r: f64| -> f64 {
        let mut h = 0.0;
        let mut rp = r.powi(q as i32 + 1);
        for c in germ.higher.iter().skip(q + 2) {
            h += c.norm() * rp;
            rp *= r;
        }
        let rq = r.powi(q as i32);
        let g = a * rq + h;
        if g >= 1.0 {
            return f64::INFINITY;
        }
        h / (a * rq) + (q as f64 + 1.0) * g * g / (2.0 * a * rq * (1.0 - g).powi(q as i32 + 2))
    };
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if bound(mid) <= 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// True only if the `P`-orbit of `z` provably reaches an attracting trap,
/// which certifies `z ∈ int K`. `false` means "not certified".
pub fn petal_certificate(poly: &ParabolicPolynomial, germ: &ParabolicGerm, z: Complex64) -> bool {
    let geom = match PetalGeometry::new(poly) {
        Ok(g) => g,
        Err(_) => return false,
    };
    debug_assert_eq!(geom.germ.a, germ.a);
    matches!(
        geom.follow(z, DEFAULT_CERTIFY_STEPS * poly.q as usize, DEFAULT_ESCAPE_RADIUS),
        OrbitFate::Trapped(_)
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn half_germ_by_hand() {
        // (-z+z²) ∘ (-z+z²) = z - 2z³ + z⁴
        let poly = ParabolicPolynomial::new(1, 2).unwrap();
        let g = germ_coefficients(&poly, 4).unwrap();
        let expect = [c(0., 0.), c(1., 0.), c(0., 0.), c(-2., 0.), c(1., 0.)];
        assert_eq!(g.higher, expect);
        assert_eq!(g.a, c(-2.0, 0.0));
    }

    #[test]
    fn unit_rotation_germ_is_the_map() {
        let poly = ParabolicPolynomial::new(1, 1).unwrap();
        let g = germ_coefficients(&poly, 2).unwrap();
        assert_eq!(g.a, c(1.0, 0.0));
    }

    #[test]
    fn germ_is_tangent_to_identity() {
        for (p, q) in [(1, 3), (2, 5), (3, 7), (1, 4)] {
            let poly = ParabolicPolynomial::new(p, q).unwrap();
            let g = germ_coefficients(&poly, q as usize + 4).unwrap();
            assert!((g.higher[1] - 1.0).norm() < 1e-12);
            for k in 2..=q as usize {
                assert!(g.higher[k].norm() < 1e-12, "{p}/{q} coefficient {k}");
            }
            assert!(g.a.norm() > 1e-6);
        }
    }

    #[test]
    fn germ_order_too_small() {
        let poly = ParabolicPolynomial::new(1, 3).unwrap();
        assert!(matches!(germ_coefficients(&poly, 3), Err(Error::Domain(_))));
    }

    #[test]
    fn polynomial_invariants() {
        for (p, q) in [(1, 2), (2, 5), (3, 8)] {
            let poly = ParabolicPolynomial::new(p, q).unwrap();
            assert!((poly.lambda.norm() - 1.0).abs() < 1e-15);
            assert!((poly.lambda.powu(q) - 1.0).norm() < 1e-12);
        }
        assert!(ParabolicPolynomial::new(2, 4).is_err());
        assert!(ParabolicPolynomial::new(1, 0).is_err());
        assert_eq!(ParabolicPolynomial::parse("2/5").unwrap().q, 5);
        assert!(ParabolicPolynomial::parse("2-5").is_err());
    }

    #[test]
    fn escape_examples() {
        let poly = ParabolicPolynomial::new(1, 2).unwrap();
        let r = escape_test(&poly, c(3.0, 0.0), 100, 4.0);
        assert_eq!(r.status, EscapeStatus::Escaped(1));
        assert!((r.final_modulus - 6.0).abs() < 1e-12);
        assert_eq!(escape_test(&poly, c(0.0, 0.0), 50, 4.0).status, EscapeStatus::Bounded(50));
        assert_eq!(escape_test(&poly, c(5.0, 0.0), 50, 4.0).status, EscapeStatus::Escaped(0));
    }

    #[test]
    fn petal_certificate_examples() {
        let poly = ParabolicPolynomial::new(1, 2).unwrap();
        let germ = germ_coefficients(&poly, 8).unwrap();
        let geom = PetalGeometry::new(&poly).unwrap();
        let d = geom.attracting_direction(0);
        assert!(petal_certificate(&poly, &germ, d * 0.05));
        assert!(!petal_certificate(&poly, &germ, c(0.0, 0.0)));
        assert!(!petal_certificate(&poly, &germ, c(3.0, 0.0)));
    }

    #[test]
    fn attracting_axes_point_inward() {
        for (p, q) in [(1, 1), (1, 2), (1, 3), (2, 5)] {
            let poly = ParabolicPolynomial::new(p, q).unwrap();
            let geom = PetalGeometry::new(&poly).unwrap();
            for j in 0..q as usize {
                let d = geom.attracting_direction(j);
                assert!((geom.germ.a * d.powu(q)).re < 0.0);
                assert_eq!(geom.attracting_petal_of(d * 0.01), j);
                let e = geom.repelling_direction(j);
                assert!((geom.germ.a * e.powu(q)).re > 0.0);
            }
        }
    }
}
