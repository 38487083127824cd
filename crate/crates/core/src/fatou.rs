//! Attracting Fatou coordinate `φ` on int K and repelling parametrization
//! `ψ₊ : ℂ → ℂ` for the parabolic point of `P`.
//!
//! Both are built from the asymptotic expansion `u` of the Abel equation
//! `u ∘ P^q = u + 1`: `φ(z) = lim u(P^{qn}(z)) - n` and
//! `ψ₊(w) = lim P^{qn}(u⁻¹(w - n))`, where the limits are taken once the
//! orbit is deep enough that the truncation defect of `u` no longer matters.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parabolic::{OrbitFate, ParabolicGerm, ParabolicPolynomial, PetalGeometry, DEFAULT_ESCAPE_RADIUS};

/// One of the two ends of the Écalle cylinder `ℂ/ℤ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum End {
    Upper,
    Lower,
}

impl End {
    pub fn sign(self) -> f64 {
        match self {
            End::Upper => 1.0,
            End::Lower => -1.0,
        }
    }
}

impl std::str::FromStr for End {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "upper" | "up" | "+" => Ok(End::Upper),
            "lower" | "low" | "-" => Ok(End::Lower),
            _ => Err(Error::domain(format!("unknown cylinder end {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtlasOptions {
    pub tol: f64,
    pub max_depth: usize,
    pub attracting_petal: usize,
    pub repelling_petal: usize,
    pub chosen_end: End,
}

impl Default for AtlasOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_depth: 100_000, attracting_petal: 0, repelling_petal: 0, chosen_end: End::Upper }
    }
}

impl AtlasOptions {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

/// Normalized Fatou coordinates for one polynomial.
#[derive(Debug, Clone)]
pub struct FatouAtlas {
    pub geometry: PetalGeometry,
    pub chosen_end: End,
    pub attracting_petal_index: usize,
    pub repelling_petal_index: usize,
    /// First point of the critical orbit inside the chosen attracting trap;
    /// `φ` vanishes there.
    pub normalization_anchor: Complex64,
    pub tol: f64,
    pub max_depth: usize,
    /// `Re w` beyond which the expansion defect is negligible at `tol`.
    pub deep_re: f64,
    offset: Complex64,
    attracting_dir: Complex64,
    repelling_dir: Complex64,
}

/// Asymptotic Fatou coordinate `u(z) = -1/(q a z^q) + b log(z^q) + ...`.
///
/// The logarithm is measured from the axis of the petal (attracting or
/// repelling) whose sector contains `z`, which keeps `u` continuous inside
/// each petal.
pub fn approx_fatou(geometry: &PetalGeometry, z: Complex64) -> Result<Complex64> {
    if z.norm_sqr() == 0.0 {
        return Err(Error::domain("approximate Fatou coordinate is singular at 0"));
    }
    let att =geometry.attracting_direction(geometry.attracting_petal_of(z));
    let rep = geometry.repelling_direction(geometry.repelling_petal_of(z));
    // the nearer axis wins
    let dir = if (z / att).arg().abs() <= (z / rep).arg().abs() { att } else { rep };
    Ok(geometry.abel.eval(z, dir))
}

/// `n` points of the chosen attracting petal where `φ` is certified, drawn
/// from a sector around the petal axis with a seeded generator.
pub fn sample_petal_points(atlas: &FatouAtlas, n: usize, seed: u64) -> Result<Vec<Complex64>> {
    let q = atlas.poly().q as f64;
    let dir = atlas.attracting_direction();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..200 * n.max(1) {
        if out.len() == n {
            break;
        }
        let r = rng.gen_range(0.01..0.3);
        let th = rng.gen_range(-0.6..0.6) * std::f64::consts::PI / q;
        let z = dir * Complex64::from_polar(r, th);
        if atlas.phi_attracting(z).is_ok() {
            out.push(z);
        }
    }
    if out.len() < n {
        return Err(Error::Resource(format!("found only {} certified petal points", out.len())));
    }
    Ok(out)
}

/// Leading term only: `-1/(q a z^q)`.
pub fn leading_fatou_term(germ: &ParabolicGerm, z: Complex64) -> Complex64 {
    -(germ.a * germ.q as f64 * z.powu(germ.q)).inv()
}

impl FatouAtlas {
    pub fn new(poly: &ParabolicPolynomial, opts: AtlasOptions) -> Result<Self> {
        if opts.tol <= 0.0 {
            return Err(Error::domain("tolerance must be positive"));
        }
        let q = poly.q as usize;
        if opts.attracting_petal >= q || opts.repelling_petal >= q {
            return Err(Error::domain(format!("petal indices must be below q = {q}")));
        }
        let geometry = PetalGeometry::new(poly)?;
        let attracting_dir = geometry.attracting_direction(opts.attracting_petal);
        let repelling_dir = geometry.repelling_direction(opts.repelling_petal);
        let deep_re = deep_threshold(&geometry, attracting_dir, opts.tol);

        let mut atlas = Self {
            geometry,
            chosen_end: opts.chosen_end,
            attracting_petal_index: opts.attracting_petal,
            repelling_petal_index: opts.repelling_petal,
            normalization_anchor: Complex64::new(0.0, 0.0),
            tol: opts.tol,
            max_depth: opts.max_depth,
            deep_re,
            offset: Complex64::new(0.0, 0.0),
            attracting_dir,
            repelling_dir,
        };
        let crit = poly.critical_point();
        let entry = match atlas.geometry.follow_to_petal(crit, opts.attracting_petal, opts.max_depth * q, DEFAULT_ESCAPE_RADIUS) {
            OrbitFate::Trapped(e) => e,
            _ => return Err(Error::NotCertified { point: crit, steps: opts.max_depth * q }),
        };
        atlas.normalization_anchor = entry.point;
        atlas.offset = atlas.phi_raw(entry.point)?;
        Ok(atlas)
    }

    pub fn poly(&self) -> &ParabolicPolynomial {
        &self.geometry.poly
    }

    pub fn germ(&self) -> &ParabolicGerm {
        &self.geometry.germ
    }

    pub fn attracting_direction(&self) -> Complex64 {
        self.attracting_dir
    }

    pub fn repelling_direction(&self) -> Complex64 {
        self.repelling_dir
    }

    /// Unnormalized coordinate: `lim u(P^{qn}(P^k z)) - n - k/q`, where `P^k z`
    /// is the first iterate inside the chosen trap.
    fn phi_raw(&self, z: Complex64) -> Result<Complex64> {
        let q = self.geometry.poly.q as usize;
        let entry = match self.geometry.follow_to_petal(z, self.attracting_petal_index, self.max_depth * q, DEFAULT_ESCAPE_RADIUS) {
            OrbitFate::Trapped(e) => e,
            _ => return Err(Error::NotCertified { point: z, steps: self.max_depth * q }),
        };
        let shift = entry.steps as f64 / q as f64;
        self.phi_from_trap(entry.point).map(|v| v - shift)
    }

    /// Limit of `u(P^{qn}(z)) - n` for `z` already inside the chosen trap.
    fn phi_from_trap(&self, z: Complex64) -> Result<Complex64> {
        let poly = &self.geometry.poly;
        let mut z = z;
        let mut n = 0usize;
        while self.geometry.trap_coordinate(z).re < self.deep_re {
            z = poly.eval_q(z);
            n += 1;
            if n > self.max_depth {
                return Err(Error::Precision { what: "attracting Fatou coordinate", residual: f64::NAN });
            }
        }
        let mut est = self.geometry.abel.eval(z, self.attracting_dir) - n as f64;
        loop {
            let z1 = poly.eval_q(z);
            let est1 = self.geometry.abel.eval(z1, self.attracting_dir) - (n + 1) as f64;
            let diff = (est1 - est).norm();
            z = z1;
            n += 1;
            est = est1;
            if diff < self.tol {
                return Ok(est);
            }
            if n > self.max_depth {
                return Err(Error::Precision { what: "attracting Fatou coordinate", residual: diff });
            }
        }
    }

    /// Normalized attracting Fatou coordinate; `φ(anchor) = 0` and
    /// `φ(P^q z) = φ(z) + 1`.
    pub fn phi_attracting(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.phi_raw(z)? - self.offset)
    }

    /// Inverse of the repelling expansion near 0: solves `u(z) = w` in the
    /// chosen repelling petal.
    fn inverse_repelling(&self, w: Complex64) -> Result<Complex64> {
        let germ = &self.geometry.germ;
        let q = germ.q;
        let v = -(germ.a * q as f64 * w).inv();
        // q-th root of v closest to the repelling axis
        let (r, th) = v.to_polar();
        let rho = r.powf(1.0 / q as f64);
        let target = self.repelling_dir.arg();
        let mut best = Complex64::new(0.0, 0.0);
        let mut best_gap = f64::INFINITY;
        for k in 0..q {
            let cand = Complex64::from_polar(rho, (th + std::f64::consts::TAU * k as f64) / q as f64);
            let gap = (cand.arg() - target).rem_euclid(std::f64::consts::TAU);
            let gap = gap.min(std::f64::consts::TAU - gap);
            if gap < best_gap {
                best_gap = gap;
                best = cand;
            }
        }
        let mut z = best;
        for _ in 0..60 {
            let f = self.geometry.abel.eval(z, self.repelling_dir) - w;
            let step = f / self.geometry.abel.derivative(z);
            z -= step;
            if step.norm() <= 1e-15 * z.norm() {
                return Ok(z);
            }
        }
        let res = (self.geometry.abel.eval(z, self.repelling_dir) - w).norm();
        if res < self.tol * 1e-3 {
            Ok(z)
        } else {
            Err(Error::Precision { what: "repelling Fatou inverse", residual: res })
        }
    }

    /// Repelling parametrization `ψ₊(w) = P^{qn}(u⁻¹(w - n))`.
    pub fn psi_repelling(&self, w: Complex64) -> Result<Complex64> {
        if !(w.re.is_finite() && w.im.is_finite()) {
            return Err(Error::domain("ψ₊ argument must be finite"));
        }
        let n = (w.re + self.deep_re).ceil().max(0.0);
        if n > self.max_depth as f64 {
            return Err(Error::Precision { what: "repelling Fatou coordinate", residual: f64::NAN });
        }
        let mut z = self.inverse_repelling(w - n)?;
        let steps = n as usize * self.geometry.poly.q as usize;
        for _ in 0..steps {
            z = self.geometry.poly.eval(z);
            if !z.norm_sqr().is_finite() {
                break;
            }
        }
        Ok(z)
    }
}

/// Smallest `Re w` at which the truncation defect of the expansion, summed
/// over the rest of the orbit, is below `tol / 10`.
///
/// The defect is `O(|w|^{-M/q})` for `M` residual orders; its constant is
/// measured at the trap threshold, where it dominates rounding noise, and the
/// tail sum is extrapolated from there.
fn deep_threshold(geometry: &PetalGeometry, dir: Complex64, tol: f64) -> f64 {
    let q = geometry.poly.q;
    let exponent = crate::parabolic::abel_orders(q as usize) as f64 / q as f64;
    let r0 = geometry.trap_re;
    let worst = max_defect(geometry, dir, r0);
    let c = worst * r0.powf(exponent);
    // tail(R) ≈ c R^{1-e} / (e-1)
    let r = (c / ((exponent - 1.0) * tol / 10.0)).powf(1.0 / (exponent - 1.0));
    r.max(r0)
}

/// Largest one-step defect `|u(P^q z) - u(z) - 1|` on the arc `|arg w| ≤ π/3`
/// of the line `Re w = r`.
pub(crate) fn max_defect(geometry: &PetalGeometry, dir: Complex64, r: f64) -> f64 {
    let q = geometry.poly.q;
    let qa = geometry.germ.a * q as f64;
    let mut worst: f64 = 0.0;
    for k in 0..8 {
        let ang = -std::f64::consts::FRAC_PI_3 + k as f64 * std::f64::consts::FRAC_PI_3 / 3.5;
        let w = Complex64::new(r, r * ang.tan());
        let v = -(qa * w).inv();
        let (m, th) = v.to_polar();
        let rho = m.powf(1.0 / q as f64);
        let z = (0..q)
            .map(|j| Complex64::from_polar(rho, (th + std::f64::consts::TAU * j as f64) / q as f64))
            .min_by(|x, y| (x / dir).arg().abs().total_cmp(&(y / dir).arg().abs()))
            .unwrap();
        let z1 = geometry.poly.eval_q(z);
        let defect = (geometry.abel.eval(z1, dir) - geometry.abel.eval(z, dir) - 1.0).norm();
        worst = worst.max(defect);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atlas(p: i64, q: u32, tol: f64) -> FatouAtlas {
        let poly = ParabolicPolynomial::new(p, q).unwrap();
        FatouAtlas::new(&poly, AtlasOptions::default().with_tol(tol)).unwrap()
    }

    #[test]
    fn leading_term_half() {
        let poly = ParabolicPolynomial::new(1, 2).unwrap();
        let geom = PetalGeometry::new(&poly).unwrap();
        let z = Complex64::new(0.3, 0.1);
        let lead = leading_fatou_term(&geom.germ, z);
        let by_hand = (4.0 * z * z).inv();
        assert!((lead - by_hand).norm() < 1e-14);
        let scaled = lead * geom.germ.a * 2.0 * z * z;
        assert!((scaled + 1.0).norm() < 1e-15);
    }

    #[test]
    fn approx_fatou_step_is_one() {
        let poly = ParabolicPolynomial::new(1, 2).unwrap();
        let geom = PetalGeometry::new(&poly).unwrap();
        let z = geom.attracting_direction(0) * 0.01;
        let d = approx_fatou(&geom, poly.eval_q(z)).unwrap() - approx_fatou(&geom, z).unwrap();
        assert!((d - 1.0).norm() < 1e-3, "{d}");
        assert!(approx_fatou(&geom, Complex64::new(0.0, 0.0)).is_err());
    }

    #[test]
    fn anchor_normalization() {
        let a = atlas(1, 2, 1e-10);
        let anchor = a.normalization_anchor;
        assert!(a.phi_attracting(anchor).unwrap().norm() < 1e-12);
        let one = a.phi_attracting(a.poly().eval_q(anchor)).unwrap();
        assert!((one - 1.0).norm() < 1e-9, "{one}");
    }

    #[test]
    fn abel_residual_on_axis_point() {
        let a = atlas(1, 2, 1e-10);
        let z = a.attracting_direction() * 0.05;
        let r = a.phi_attracting(a.poly().eval_q(z)).unwrap() - a.phi_attracting(z).unwrap() - 1.0;
        assert!(r.norm() < 1e-8, "{r}");
    }

    #[test]
    fn phi_converged_independently_of_depth() {
        let a = atlas(1, 3, 1e-10);
        let mut deeper = a.clone();
        deeper.deep_re *= 4.0;
        for z in [a.attracting_direction() * 0.1, Complex64::new(-0.2, 0.1), a.normalization_anchor * 1.3] {
            let (Ok(x), Ok(y)) = (a.phi_raw(z), deeper.phi_raw(z)) else { continue };
            assert!((x - y).norm() < 1e-8, "{z}: {x} vs {y}");
        }
    }

    #[test]
    fn escaping_point_is_not_certified() {
        let a = atlas(1, 2, 1e-9);
        assert!(matches!(a.phi_attracting(Complex64::new(3.0, 0.0)), Err(Error::NotCertified { .. })));
    }

    #[test]
    fn psi_functional_equation() {
        let a = atlas(1, 2, 1e-10);
        let w = Complex64::new(0.3, -0.2);
        let r = a.psi_repelling(w + 1.0).unwrap() - a.poly().eval_q(a.psi_repelling(w).unwrap());
        assert!(r.norm() < 1e-8, "{r}");
    }

    #[test]
    fn psi_tends_to_zero_up_the_cylinder() {
        let a = atlas(1, 2, 1e-9);
        let mut prev = f64::INFINITY;
        for h in [5.0, 20.0, 80.0, 320.0, 5000.0] {
            let m = a.psi_repelling(Complex64::new(0.5, h)).unwrap().norm();
            assert!(m < prev);
            prev = m;
        }
        assert!(prev < 1e-2);
    }

    #[test]
    fn bad_petal_index() {
        let poly = ParabolicPolynomial::new(1, 2).unwrap();
        let opts = AtlasOptions { attracting_petal: 2, ..AtlasOptions::default() };
        assert!(FatouAtlas::new(&poly, opts).is_err());
    }
}
