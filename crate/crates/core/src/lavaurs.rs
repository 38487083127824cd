//! Lavaurs maps `g_σ = ψ₊ ∘ T_σ ∘ φ`, horn maps `h_σ = T_σ ∘ φ ∘ ψ₊`, and the
//! virtual multipliers of `h_σ` at the two ends of the cylinder.
//!
//! Near the upper end `h_σ(w) = w + ν₊ + o(1)`; in the coordinate `e^{2πiw}`
//! this is multiplication by `m₊ = e^{2πiν₊}`. At the lower end the
//! coordinate is `e^{-2πiw}` and `m₋ = e^{-2πiν₋}`. Shifting `σ` by `t`
//! shifts both `ν` by `t`, so `m₊` gains `e^{2πit}` and `m₋` gains `e^{-2πit}`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fatou::{End, FatouAtlas};

/// Number of equispaced samples along `Re w ∈ [0, 1)` used to measure `ν`.
pub const END_SAMPLES: usize = 16;
/// Largest height tried when measuring `ν`.
pub const END_MAX_HEIGHT: f64 = 40.0;
const END_STABLE: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct LavaursSystem {
    pub atlas: FatouAtlas,
    pub sigma: Complex64,
    /// Bound on `P^q` steps spent certifying a point before giving up.
    pub depth_limit: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VirtualMultiplier {
    pub end: End,
    /// Translation limit of `h_σ(w) - w` at the end.
    pub nu: Complex64,
    pub m: Complex64,
    /// Height `|Im w|` at which the estimate stabilized.
    pub height: f64,
    /// `φ` of the critical value of `P` (diagnostic only).
    pub z0_estimate: Option<Complex64>,
}

impl LavaursSystem {
    pub fn new(atlas: FatouAtlas, sigma: Complex64) -> Self {
        let depth_limit = atlas.max_depth;
        Self { atlas, sigma, depth_limit }
    }

    /// Caps certification work for every map evaluation.
    pub fn with_depth_limit(mut self, depth_limit: usize) -> Self {
        self.depth_limit = depth_limit;
        self.atlas.max_depth = depth_limit;
        self
    }

    pub fn with_sigma(&self, sigma: Complex64) -> Self {
        Self { atlas: self.atlas.clone(), sigma, depth_limit: self.depth_limit }
    }

    /// `g_σ(z) = ψ₊(φ(z) + σ)`; defined on int K only.
    pub fn lavaurs_map(&self, z: Complex64) -> Result<Complex64> {
        let phi = self.atlas.phi_attracting(z)?;
        self.atlas.psi_repelling(phi + self.sigma)
    }

    /// `h_σ(w) = φ(ψ₊(w)) + σ`; defined where `ψ₊(w) ∈ int K`.
    pub fn horn_map(&self, w: Complex64) -> Result<Complex64> {
        let z = self.atlas.psi_repelling(w)?;
        Ok(self.atlas.phi_attracting(z)? + self.sigma)
    }

    fn nu_at_height(&self, height: f64) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..END_SAMPLES {
            let w = Complex64::new(k as f64 / END_SAMPLES as f64, height);
            acc += self.horn_map(w)? - w;
        }
        Ok(acc / END_SAMPLES as f64)
    }

    /// Virtual multiplier at `end`, from the translation limit `ν`.
    pub fn end_translation(&self, end: End) -> Result<VirtualMultiplier> {
        let sign = end.sign();
        let mut h = 6.0;
        let mut prev = self.nu_at_height(sign * h)?;
        loop {
            let next_h = h + 2.0;
            if next_h > END_MAX_HEIGHT {
                return Err(Error::Precision { what: "virtual multiplier", residual: f64::NAN });
            }
            let next = self.nu_at_height(sign * next_h)?;
            let gap = (next - prev).norm();
            prev = next;
            h = next_h;
            if gap < END_STABLE {
                break;
            }
        }
        let nu = prev;
        let z0_estimate = self
            .atlas
            .phi_attracting(self.atlas.poly().eval(self.atlas.poly().critical_point()))
            .ok();
        Ok(VirtualMultiplier { end, nu, m: multiplier_from_nu(end, nu), height: h, z0_estimate })
    }
}

/// `e^{2πiν}` at the upper end, `e^{-2πiν}` at the lower end.
pub fn multiplier_from_nu(end: End, nu: Complex64) -> Complex64 {
    (Complex64::new(0.0, std::f64::consts::TAU * end.sign()) * nu).exp()
}

/// Phase `σ` (real part reduced to `[0, 1)`) for which the virtual multiplier
/// at `end` equals `e^{2πiω}`. Only `ω mod 1` matters.
pub fn solve_sigma(atlas: &FatouAtlas, omega: f64, end: End) -> Result<Complex64> {
    if !omega.is_finite() {
        return Err(Error::domain(format!("ω must be finite, got {omega}")));
    }
    let base = LavaursSystem::new(atlas.clone(), Complex64::new(0.0, 0.0));
    let nu0 = base.end_translation(end)?.nu;
    // ν(σ) = ν(0) + σ; upper: ν = ω (mod 1), lower: ν = -ω (mod 1)
    let mut sigma = match end {
        End::Upper => Complex64::new(omega, 0.0) - nu0,
        End::Lower => Complex64::new(-omega, 0.0) - nu0,
    };
    sigma.re = sigma.re.rem_euclid(1.0);
    if sigma.re >= 1.0 {
        sigma.re -= 1.0;
    }

    let check = base.with_sigma(sigma).end_translation(end)?;
    let target = Complex64::from_polar(1.0, std::f64::consts::TAU * omega);
    let err = (check.m - target).norm();
    if err >= 1e-4 {
        return Err(Error::Precision { what: "σ solver verification", residual: err });
    }
    Ok(sigma)
}
