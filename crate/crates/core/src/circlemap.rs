//! The critical circle map `f_t = R_t ∘ B`, `B(z) = z²(z-3)/(1-3z)`, through
//! its lift `F(x) = t + (1/2πi) Log B(e^{2πix})`: rotation numbers, tuning,
//! dynamical partitions, real bounds and pulled-back balls near partition
//! intervals.
//!
//! On `ℝ` the lift has the closed form
//! `F(x) = t + x - (1/π) atan2(sin 2πx, 3 - cos 2πx)`; on the strip
//! `|Im x| < ln 3 / 2π` it is
//! `F(x) = t + x + (1/2πi) [Log(1 - z/3) - Log(1 - 1/(3z))]`, `z = e^{2πix}`.
//! The critical point is `x = 0` (`z = 1`), of local degree 3.

use std::cmp::Ordering;
use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cfrac;
use crate::error::{Error, Result};
use crate::hypgeo::{self, Cone, SlitPlaneDomain, Triple};

/// Half-height of the strip used for complex work.
pub const H_STRIP: f64 = 0.1;
/// Half-height of the strip where the complex formula for `F` is valid.
pub const STRIP_LIMIT: f64 = 0.174_855_060_107_390_28; // ln 3 / 2π
pub const DEFAULT_BUDGET: usize = 20_000_000;
/// `|F^q(0) - p|` below this counts as an exact return.
const EXACT_RETURN: f64 = 1e-13;
pub const BOUNDS_CSV_HEADER: &str = "level,num_points,max_adjacent_ratio,min_interval,max_interval";
/// Deepest level accepted by [`partition_ball`]; bounds the pullback length `m`.
pub const BALL_LEVEL_CAP: usize = 8;

/// `B(z)` and `B'(z) = -6z(z-1)²/(1-3z)²`.
pub fn blaschke_eval(z: Complex64) -> Result<(Complex64, Complex64)> {
    let den = 1.0 - 3.0 * z;
    if den.norm() < 1e-300 || !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::domain("B has a pole at 1/3"));
    }
    let b = z * z * (z - 3.0) / den;
    let db = -6.0 * z * (z - 1.0) * (z - 1.0) / (den * den);
    Ok((b, db))
}

/// A degree-one lift of an increasing circle homeomorphism.
pub trait CircleLift: Sync {
    fn lift(&self, x: f64) -> f64;

    /// The rotation number the map was tuned or measured to.
    fn rotation(&self) -> f64;

    /// `F^{-1}(y)` by bisection, to an absolute width of `1e-14` (or the
    /// floating-point resolution at `y`).
    fn invert(&self, y: f64) -> Result<f64> {
        let g0 = self.lift(0.0);
        let (mut lo, mut hi) = (y - g0 - 1.0, y - g0 + 1.0);
        if !(self.lift(lo) <= y && self.lift(hi) >= y) {
            return Err(Error::Precision { what: "circle map inversion bracket", residual: f64::NAN });
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= 1e-14 {
                break;
            }
            if self.lift(mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// `x ↦ x + ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidRotation {
    pub rho: f64,
}

impl CircleLift for RigidRotation {
    fn lift(&self, x: f64) -> f64 {
        x + self.rho
    }
    fn rotation(&self) -> f64 {
        self.rho
    }
    fn invert(&self, y: f64) -> Result<f64> {
        Ok(y - self.rho)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleMapLift {
    pub t: f64,
    pub h_strip: f64,
    /// Rotation number: the tuning target, or a measured value.
    pub rotation: f64,
    pub critical_point: f64,
}

impl CircleMapLift {
    /// Lift with parameter `t`; the rotation number is measured to `1e-12`.
    pub fn new(t: f64) -> Result<Self> {
        if !t.is_finite() {
            return Err(Error::domain("t must be finite"));
        }
        let mut lift = Self { t, h_strip: H_STRIP, rotation: f64::NAN, critical_point: 0.0 };
        lift.rotation = rotation_number(&lift, DEFAULT_BUDGET, 1e-12)?;
        Ok(lift)
    }

    fn unmeasured(t: f64) -> Self {
        Self { t, h_strip: H_STRIP, rotation: f64::NAN, critical_point: 0.0 }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (s, c) = (TAU * x).sin_cos();
        self.t + x - s.atan2(3.0 - c) / PI
    }

    /// `F'(x)` on `ℝ`.
    pub fn derivative(&self, x: f64) -> f64 {
        let c = (TAU * x).cos();
        // d/dx atan2(sin, 3 - cos) = 2π (3cos - 1)/(10 - 6cos)
        1.0 - 2.0 * (3.0 * c - 1.0) / (10.0 - 6.0 * c)
    }

    /// `F` and `F'` on the strip `|Im x| < STRIP_LIMIT`.
    pub fn eval_complex(&self, x: Complex64) -> Result<(Complex64, Complex64)> {
        if !(x.im.abs() < STRIP_LIMIT) || !x.re.is_finite() {
            return Err(Error::domain(format!("{x} is outside the strip of the lift")));
        }
        let z = (Complex64::new(0.0, TAU) * x).exp();
        let third = 1.0 / 3.0;
        let logs = (1.0 - z * third).ln() - (1.0 - (3.0 * z).inv()).ln();
        let f = self.t + x + logs / Complex64::new(0.0, TAU);
        let df = 2.0 + z / (z - 3.0) + 3.0 * z / (1.0 - 3.0 * z);
        Ok((f, df))
    }

    /// `F^m` and its derivative on the strip; fails if an iterate leaves it.
    pub fn iterate_complex(&self, x: Complex64, m: usize) -> Result<(Complex64, Complex64)> {
        let mut x = x;
        let mut d = Complex64::new(1.0, 0.0);
        for _ in 0..m {
            let (f, df) = self.eval_complex(x)?;
            d *= df;
            x = f;
        }
        Ok((x, d))
    }
}

impl CircleLift for CircleMapLift {
    fn lift(&self, x: f64) -> f64 {
        self.eval(x)
    }
    fn rotation(&self) -> f64 {
        self.rotation
    }
}

/// `F^q(0) - p`, or `None` once `evals` would pass `budget`.
fn return_gap<F: CircleLift + ?Sized>(f: &F, p: i64, q: u64, evals: &mut usize, budget: usize) -> Option<f64> {
    if *evals + q as usize > budget {
        return None;
    }
    *evals += q as usize;
    let mut x = 0.0;
    for _ in 0..q {
        x = f.lift(x);
    }
    Some(x - p as f64)
}

/// Sign of `ρ - p/q` as certified by `F^q(0)`: positive gap ⇒ `ρ ≥ p/q`,
/// negative ⇒ `ρ ≤ p/q`, exact return ⇒ `ρ = p/q`.
fn classify_gap(gap: f64) -> Ordering {
    if gap.abs() < EXACT_RETURN {
        Ordering::Equal
    } else if gap > 0.0 {
        Ordering::Greater
    } else {
        Ordering::Less
    }
}

/// True if `F^q(x) - x - p` changes sign on a grid, i.e. `ρ = p/q`.
fn has_periodic_orbit<F: CircleLift + ?Sized>(f: &F, p: i64, q: u64, evals: &mut usize, budget: usize) -> bool {
    const GRID: usize = 64;
    if *evals + GRID * q as usize > budget {
        return false;
    }
    *evals += GRID * q as usize;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..GRID {
        let x0 = i as f64 / GRID as f64;
        let mut x = x0;
        for _ in 0..q {
            x = f.lift(x);
        }
        let g = x - x0 - p as f64;
        lo = lo.min(g);
        hi = hi.max(g);
    }
    lo <= 0.0 && hi >= 0.0
}

/// Rotation number by Stern–Brocot descent on the sign of `F^q(0) - p`.
/// The result is within `tol` of `ρ`; `budget` bounds evaluations of `F`.
pub fn rotation_number<F: CircleLift + ?Sized>(f: &F, budget: usize, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::domain("tolerance must be positive"));
    }
    let mut evals = 1;
    let n = f.lift(0.0).floor() as i64;
    let (mut lp, mut lq, mut hp, mut hq) = (n, 1u64, n + 1, 1u64);
    // consecutive moves toward the same bound
    let mut streak = 0;
    let mut last_move = Ordering::Equal;
    loop {
        let width = 1.0 / (lq as f64 * hq as f64);
        if width <= 2.0 * tol {
            return Ok(0.5 * (lp as f64 / lq as f64 + hp as f64 / hq as f64));
        }
        let (mp, mq) = (lp + hp, lq + hq);
        let gap = return_gap(f, mp, mq, &mut evals, budget)
            .ok_or(Error::Precision { what: "rotation number budget", residual: width })?;
        let side = classify_gap(gap);
        match side {
            Ordering::Equal => return Ok(mp as f64 / mq as f64),
            Ordering::Greater => (lp, lq) = (mp, mq),
            Ordering::Less => (hp, hq) = (mp, mq),
        }
        streak = if side == last_move { streak + 1 } else { 1 };
        last_move = side;
        if streak >= 4 {
            // closing in on one fixed bound; it may be the rotation number
            let (p, q) = if side == Ordering::Greater { (hp, hq) } else { (lp, lq) };
            if has_periodic_orbit(f, p, q, &mut evals, budget) {
                return Ok(p as f64 / q as f64);
            }
        }
    }
}

/// Compares `ρ(F)` with the irrational `omega` along the Stern–Brocot path
/// of `omega`; `None` if they agree down to interval width `width`.
fn compare_rotation<F: CircleLift + ?Sized>(f: &F, omega: f64, width: f64, budget: usize) -> Result<Option<Ordering>> {
    let mut evals = 0;
    let n = omega.floor() as i64;
    let (mut lp, mut lq, mut hp, mut hq) = (n, 1u64, n + 1, 1u64);
    for (p, q, omega_above) in [(lp, lq, true), (hp, hq, false)] {
        let gap = return_gap(f, p, q, &mut evals, budget)
            .ok_or(Error::Precision { what: "rotation comparison budget", residual: 1.0 })?;
        match (classify_gap(gap), omega_above) {
            (Ordering::Less | Ordering::Equal, true) => return Ok(Some(Ordering::Less)),
            (Ordering::Greater | Ordering::Equal, false) => return Ok(Some(Ordering::Greater)),
            _ => {}
        }
    }
    loop {
        if 1.0 / (lq as f64 * hq as f64) <= width {
            return Ok(None);
        }
        let (mp, mq) = (lp + hp, lq + hq);
        let omega_above = omega * mq as f64 > mp as f64;
        let gap = return_gap(f, mp, mq, &mut evals, budget)
            .ok_or(Error::Precision { what: "rotation comparison budget", residual: 1.0 / (lq as f64 * hq as f64) })?;
        match (classify_gap(gap), omega_above) {
            (Ordering::Equal, true) | (Ordering::Less, true) => return Ok(Some(Ordering::Less)),
            (Ordering::Equal, false) | (Ordering::Greater, false) => return Ok(Some(Ordering::Greater)),
            (_, true) => (lp, lq) = (mp, mq),
            (_, false) => (hp, hq) = (mp, mq),
        }
    }
}

/// Bisects `t ∈ [0, 1]` until `|ρ(F_t) - ω| < tol`. `ω` must be irrational
/// (in the sense of its double-precision expansion not terminating early).
pub fn tune_rotation(omega: f64, tol: f64) -> Result<CircleMapLift> {
    if !(omega > 0.0 && omega < 1.0) {
        return Err(Error::domain(format!("ω must lie in (0, 1), got {omega}")));
    }
    if !(tol > 0.0) {
        return Err(Error::domain("tolerance must be positive"));
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let at = |t: f64| compare_rotation(&CircleMapLift::unmeasured(t), omega, tol / 4.0, DEFAULT_BUDGET);
    if at(lo)? != Some(Ordering::Less) || at(hi)? != Some(Ordering::Greater) {
        return Err(Error::domain(format!("rotation numbers at t = 0, 1 do not bracket {omega}")));
    }
    let mut t = 0.5;
    for _ in 0..200 {
        t = 0.5 * (lo + hi);
        match at(t)? {
            Some(Ordering::Less) => lo = t,
            Some(Ordering::Greater) => hi = t,
            _ => break,
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    let mut lift = CircleMapLift::unmeasured(t);
    let rho = rotation_number(&lift, DEFAULT_BUDGET, tol / 4.0)?;
    if (rho - omega).abs() >= tol {
        return Err(Error::Precision { what: "rotation tuning", residual: (rho - omega).abs() });
    }
    lift.rotation = omega;
    Ok(lift)
}

/// Indices of the forward orbit points `F^j(0) mod 1`, `j < count`, listed in
/// increasing position on the circle.
pub fn orbit_order_type<F: CircleLift + ?Sized>(f: &F, count: usize) -> Vec<usize> {
    let mut x = 0.0_f64;
    let mut pts = Vec::with_capacity(count);
    for j in 0..count {
        pts.push((x.rem_euclid(1.0), j));
        x = f.lift(x);
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.into_iter().map(|(_, j)| j).collect()
}

/// A point of the backward critical orbit: `F^index(x) ≡ 0 (mod 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionPoint {
    /// Position in `[0, 1)`.
    pub x: f64,
    pub index: usize,
}

/// `[start, end)` on the circle; `end` may exceed 1 for the wrapping interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionInterval {
    pub start: f64,
    pub end: f64,
    pub start_index: usize,
    pub end_index: usize,
}

impl PartitionInterval {
    pub fn length(&self) -> f64 {
        self.end - self.start
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicalPartition {
    pub level: usize,
    /// Sorted by position.
    pub points: Vec<PartitionPoint>,
}

impl DynamicalPartition {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Interval `i` runs from point `i` to point `i + 1` (cyclically).
    pub fn interval(&self, i: usize) -> PartitionInterval {
        let n = self.points.len();
        let s = self.points[i % n];
        let e = self.points[(i + 1) % n];
        let end = if (i + 1) % n == 0 { e.x + 1.0 } else { e.x };
        PartitionInterval { start: s.x, end, start_index: s.index, end_index: e.index }
    }

    pub fn intervals(&self) -> Vec<PartitionInterval> {
        (0..self.points.len()).map(|i| self.interval(i)).collect()
    }

    /// Index of the interval containing `x mod 1`.
    pub fn locate(&self, x: f64) -> usize {
        let x = x.rem_euclid(1.0);
        let k = self.points.partition_point(|p| p.x <= x);
        if k == 0 { self.points.len() - 1 } else { k - 1 }
    }

    /// `I_n(x)`.
    pub fn interval_of(&self, x: f64) -> PartitionInterval {
        self.interval(self.locate(x))
    }
}

/// Partitions at levels `0..=n_max`, sharing one backward orbit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionSet {
    pub rotation: f64,
    /// `q_0 = 1, q_1, q_2, ...`
    pub denominators: Vec<u64>,
    /// `F^{-k}(0) mod 1`.
    pub orbit: Vec<f64>,
    pub levels: Vec<DynamicalPartition>,
}

impl PartitionSet {
    pub fn build<F: CircleLift + ?Sized>(f: &F, n_max: usize) -> Result<Self> {
        let rotation = f.rotation();
        if !(rotation > 0.0 && rotation < 1.0) {
            return Err(Error::domain(format!("partitions need a rotation number in (0, 1), got {rotation}")));
        }
        let cf = cfrac::cf_expand(rotation, n_max + 2)?;
        let qs = cfrac::denominators(&cf)?;
        if qs.len() < n_max + 2 {
            return Err(Error::Resource(format!(
                "rotation number has only {} partial quotients; level {n_max} needs {}",
                qs.len() - 1,
                n_max + 1
            )));
        }
        let total = (qs[n_max] + qs[n_max + 1]) as usize;
        if total > 5_000_000 {
            return Err(Error::Resource(format!("level {n_max} needs {total} points")));
        }
        let mut orbit = Vec::with_capacity(total);
        let mut x = 0.0_f64;
        for _ in 0..total {
            orbit.push(x.rem_euclid(1.0));
            // keep the lift near [0, 1) so the bisection resolution stays fine
            x = f.invert(x.rem_euclid(1.0))?;
        }
        let levels = (0..=n_max)
            .map(|n| {
                let count = (qs[n] + qs[n + 1]) as usize;
                let mut points: Vec<PartitionPoint> =
                    orbit[..count].iter().enumerate().map(|(index, &x)| PartitionPoint { x, index }).collect();
                points.sort_by(|a, b| a.x.total_cmp(&b.x));
                DynamicalPartition { level: n, points }
            })
            .collect();
        Ok(Self { rotation, denominators: qs, orbit, levels })
    }

    pub fn level(&self, n: usize) -> Result<&DynamicalPartition> {
        self.levels
            .get(n)
            .ok_or_else(|| Error::Resource(format!("level {n} beyond computed {}", self.levels.len() - 1)))
    }

    pub fn max_level(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn real_bounds(&self) -> CommensurabilityReport {
        let mut levels = Vec::with_capacity(self.levels.len());
        for (n, part) in self.levels.iter().enumerate() {
            let ivs = part.intervals();
            let lens: Vec<f64> = ivs.iter().map(|i| i.length()).collect();
            let m = lens.len();
            let mut max_adj: f64 = 1.0;
            if m > 1 {
                for i in 0..m {
                    let r = lens[i] / lens[(i + 1) % m];
                    max_adj = max_adj.max(r.max(1.0 / r));
                }
            }
            let max_parent = if n == 0 {
                1.0 / lens.iter().copied().fold(f64::INFINITY, f64::min)
            } else {
                let parent = &self.levels[n - 1];
                ivs.iter()
                    .map(|iv| parent.interval_of(iv.start).length() / iv.length())
                    .fold(1.0, f64::max)
            };
            levels.push(LevelBounds {
                level: n,
                num_points: part.len(),
                max_adjacent_ratio: max_adj,
                min_interval: lens.iter().copied().fold(f64::INFINITY, f64::min),
                max_interval: lens.iter().copied().fold(0.0, f64::max),
                max_parent_ratio: max_parent,
            });
        }
        let k = levels.iter().map(|l| l.max_adjacent_ratio).fold(1.0, f64::max);
        let k_prime = levels.iter().map(|l| l.max_parent_ratio).fold(1.0, f64::max);
        CommensurabilityReport { levels, k, k_prime }
    }

    /// Smallest `n` with `|I_n(x)| ≤ ell`, and `|I_n(x)| / ell`.
    pub fn scale_match(&self, x: f64, ell: f64) -> Result<ScaleMatch> {
        if !(ell > 0.0 && ell < 1.0) {
            return Err(Error::domain(format!("ell must lie in (0, 1), got {ell}")));
        }
        for (n, part) in self.levels.iter().enumerate() {
            let len = part.interval_of(x).length();
            if len <= ell {
                return Ok(ScaleMatch { level: n, length: len, ratio: len / ell });
            }
        }
        Err(Error::Resource(format!("no computed level reaches scale {ell} at {x}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleMatch {
    pub level: usize,
    pub length: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelBounds {
    pub level: usize,
    pub num_points: usize,
    /// Largest `max(r, 1/r)` over adjacent interval pairs.
    pub max_adjacent_ratio: f64,
    pub min_interval: f64,
    pub max_interval: f64,
    /// Largest `|parent| / |child|`; at level 0, `1 / min length`.
    pub max_parent_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommensurabilityReport {
    pub levels: Vec<LevelBounds>,
    /// Adjacent intervals at every computed level are `k`-commensurable.
    pub k: f64,
    /// `|I_n(x)| / ell ∈ [1/k_prime, k_prime]` for the scale match.
    pub k_prime: f64,
}

impl CommensurabilityReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(BOUNDS_CSV_HEADER);
        s.push('\n');
        for l in &self.levels {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                l.level, l.num_points, l.max_adjacent_ratio, l.min_interval, l.max_interval
            );
        }
        s
    }
}

pub fn dynamical_partition<F: CircleLift + ?Sized>(f: &F, n: usize) -> Result<DynamicalPartition> {
    Ok(PartitionSet::build(f, n)?.levels.swap_remove(n))
}

pub fn real_bounds_report<F: CircleLift + ?Sized>(f: &F, n_max: usize) -> Result<CommensurabilityReport> {
    Ok(PartitionSet::build(f, n_max)?.real_bounds())
}

/// Levels computed by [`scale_match`].
pub const SCALE_MATCH_LEVELS: usize = 18;

pub fn scale_match<F: CircleLift + ?Sized>(f: &F, x: f64, ell: f64) -> Result<ScaleMatch> {
    PartitionSet::build(f, SCALE_MATCH_LEVELS)?.scale_match(x, ell)
}

/// Ball below a partition interval, obtained by pulling a cone ball at the
/// critical point back through `F^m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionBall {
    pub level: usize,
    pub interval: PartitionInterval,
    pub m: usize,
    pub center: Complex64,
    pub radius: f64,
    /// Hyperbolic radius of the cone ball that was pulled back.
    pub cone_radius: f64,
    /// `radius / |I|`.
    pub radius_ratio: f64,
    /// `dist(center, I) / |I|`.
    pub distance_ratio: f64,
    pub below_real: bool,
    /// Sampled boundary of `F^m(ball)` lies in the 30° cone at 0.
    pub image_in_cone: bool,
    /// Sampled boundary of `F^{m+1}(ball)` lies in the upper half-plane.
    pub next_image_upper: bool,
}

/// Height `h₁ ≤ h_strip` such that `F` maps the part of the standard cone at 0
/// with `|Im| ≤ h₁` into the upper half-plane (checked on a polar grid).
pub fn cone_height(lift: &CircleMapLift) -> Result<f64> {
    let cone = Cone::standard(0.0);
    let half = 0.5 * cone.opening_deg.to_radians();
    let axis = cone.direction_deg.to_radians();
    let maps_up = |h: f64| -> Result<bool> {
        for i in 0..=16 {
            let th = axis - half + 2.0 * half * i as f64 / 16.0;
            let reach = h / th.sin().abs();
            for j in 1..=64 {
                let z = Complex64::from_polar(reach * j as f64 / 64.0, th);
                if lift.eval_complex(z)?.0.im <= 0.0 {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    };
    let mut h = lift.h_strip;
    for _ in 0..60 {
        if maps_up(h)? {
            return Ok(h);
        }
        h *= 0.9;
    }
    Err(Error::Precision { what: "cone height", residual: h })
}

fn ball_fits(domain: &SlitPlaneDomain, cone: &Cone, center: Complex64, r: f64, h1: f64) -> bool {
    match domain.ball_boundary(center, r, 128) {
        Ok(pts) => pts.iter().all(|&z| cone.contains(z) && z.im > -h1),
        Err(_) => false,
    }
}

/// Cone ball at the apex 0 for the image triple, inside `|Im| < h1`.
fn capped_cone_ball(triple: &Triple, r0: f64, h1: f64) -> Result<(Complex64, f64)> {
    let cone = Cone::standard(0.0);
    let domain = SlitPlaneDomain::new(triple.a, triple.d)?;
    if let Some(ball) = hypgeo::cone_ball(triple, &cone, r0, 1e4)? {
        if ball_fits(&domain, &cone, ball.center, r0, h1) {
            return Ok((ball.center, r0));
        }
    }
    // too deep for the cap: keep the center inside the cap and shrink r
    let mut best = (Complex64::new(0.0, -0.5 * h1), 0.0);
    for f in [0.3, 0.4, 0.5, 0.6, 0.7, 0.8] {
        let center = Complex64::new(0.0, -f * h1);
        let (mut lo, mut hi) = (0.0, r0);
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if ball_fits(&domain, &cone, center, mid, h1) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if lo > best.1 {
            best = (center, lo);
        }
    }
    if best.1 > 0.0 {
        Ok(best)
    } else {
        Err(Error::Precision { what: "capped cone ball", residual: 0.0 })
    }
}

/// Continues `G = (F^m)^{-1}` with `G(w_from) = z_from` along the segment to
/// `w_to` by Newton steps of length at most `step`.
fn continue_inverse(
    lift: &CircleMapLift,
    m: usize,
    w_from: Complex64,
    z_from: Complex64,
    w_to: Complex64,
    step: f64,
) -> Result<Complex64> {
    let n = ((w_to - w_from).norm() / step).ceil().max(1.0) as usize;
    let mut z = z_from;
    let mut k = 0;
    let mut sub = 1usize;
    while k < n * sub {
        let w = w_from + (w_to - w_from) * ((k + 1) as f64 / (n * sub) as f64);
        match newton(lift, m, z, w) {
            Ok(next) => {
                z = next;
                k += 1;
            }
            Err(e) => {
                if sub >= 1 << 10 {
                    return Err(e);
                }
                sub *= 2;
                k *= 2;
            }
        }
    }
    Ok(z)
}

fn newton(lift: &CircleMapLift, m: usize, z0: Complex64, w: Complex64) -> Result<Complex64> {
    let mut z = z0;
    let mut residual = f64::NAN;
    for _ in 0..30 {
        let (f, df) = lift.iterate_complex(z, m)?;
        residual = (f - w).norm();
        if residual <= 1e-13 * (1.0 + w.norm()) {
            return Ok(z);
        }
        z -= (f - w) / df;
        if !(z.re.is_finite() && z.im.is_finite()) {
            break;
        }
    }
    Err(Error::Precision { what: "inverse branch continuation", residual })
}

/// Pulls the cone ball for interval `i` of level `n ≥ 2` back to a euclidean
/// ball below the interval.
pub fn partition_ball(lift: &CircleMapLift, set: &PartitionSet, n: usize, i: usize, r0: f64, h1: f64) -> Result<PartitionBall> {
    if !(2..=BALL_LEVEL_CAP).contains(&n) {
        return Err(Error::domain(format!("partition balls need level 2 ≤ n ≤ {BALL_LEVEL_CAP}, got {n}")));
    }
    let part = set.level(n)?;
    let len = part.len();
    if i >= len {
        return Err(Error::domain(format!("interval {i} out of range at level {n}")));
    }
    let left = part.interval((i + len - 1) % len);
    let mid = part.interval(i);
    let right = part.interval((i + 1) % len);
    // lifted, increasing endpoints a < b < c < d around the middle interval
    let b = mid.start;
    let c = mid.end;
    let a = if left.end > 1.0 { left.start - 1.0 } else { left.start };
    let a = if a > b { a - 1.0 } else { a };
    let mut d = right.end - right.start + c;
    if d <= c {
        d += 1.0;
    }
    let ends = [(a, left.start_index), (b, mid.start_index), (c, mid.end_index), (d, right.end_index)];
    let m = ends.iter().map(|e| e.1).min().unwrap();
    let crit = ends.iter().find(|e| e.1 == m).unwrap().0;

    // F^m on the endpoints, snapped to the known orbit positions
    let mut images = [0.0; 4];
    for (slot, &(x, k)) in images.iter_mut().zip(&ends) {
        let mut y = x;
        for _ in 0..m {
            y = lift.eval(y);
        }
        let exact = set.orbit[k - m];
        *slot = exact + (y - exact).round();
    }
    let mut crit_image = crit;
    for _ in 0..m {
        crit_image = lift.eval(crit_image);
    }
    let shift = crit_image.round();
    for v in images.iter_mut() {
        *v -= shift;
    }
    let triple = Triple::new(images[0], images[1], images[2], images[3])?;
    let (w0, r) = capped_cone_ball(&triple, r0, h1)?;
    let domain = SlitPlaneDomain::new(triple.a, triple.d)?;
    let inscribed = hypgeo::inscribed_disk(&domain, &hypgeo::HyperbolicBall { center: w0, radius: r })?;

    let step = (triple.c - triple.b).min(w0.norm()) / 8.0;
    let lifted = Complex64::new(shift, 0.0);
    let z0 = continue_inverse(lift, m, lifted, Complex64::new(crit, 0.0), w0 + lifted, step)?;
    let (_, dfm) = lift.iterate_complex(z0, m)?;
    let big_r = domain.boundary_distance(w0).min(STRIP_LIMIT - w0.im.abs());
    let branch_disk = hypgeo::EuclideanBall { center: w0, radius: inscribed.radius };
    if !(branch_disk.radius < big_r) {
        return Err(Error::Precision { what: "univalence radius", residual: big_r });
    }
    let rho = inscribed.radius;
    let radius = rho / dfm.norm() / (1.0 + rho / big_r).powi(2);
    let center = z0;

    let cone = Cone::standard(0.0);
    let mut image_in_cone = true;
    let mut next_image_upper = true;
    for k in 0..64 {
        let z = center + Complex64::from_polar(radius, TAU * k as f64 / 64.0);
        match lift.iterate_complex(z, m) {
            Ok((fz, _)) => {
                let fz = fz - lifted;
                image_in_cone &= cone.contains(fz) && inscribed.contains(fz);
                next_image_upper &= lift.eval_complex(fz).map(|(g, _)| g.im > 0.0).unwrap_or(false);
            }
            Err(_) => {
                image_in_cone = false;
                next_image_upper = false;
            }
        }
    }
    let i_len = c - b;
    let nearest = Complex64::new(center.re.clamp(b, c), 0.0);
    Ok(PartitionBall {
        level: n,
        interval: mid,
        m,
        center,
        radius,
        cone_radius: r,
        radius_ratio: radius / i_len,
        distance_ratio: (center - nearest).norm() / i_len,
        below_real: center.im + radius < 0.0,
        image_in_cone,
        next_image_upper,
    })
}

/// Balls for every interval at levels `levels`, in level-major order.
pub fn ball_sweep(lift: &CircleMapLift, set: &PartitionSet, levels: std::ops::RangeInclusive<usize>, r0: f64) -> Result<Vec<PartitionBall>> {
    let h1 = cone_height(lift)?;
    let jobs: Vec<(usize, usize)> = levels
        .map(|n| set.level(n).map(|p| (0..p.len()).map(move |i| (n, i)).collect::<Vec<_>>()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    jobs.par_iter().map(|&(n, i)| partition_ball(lift, set, n, i, r0, h1)).collect()
}
