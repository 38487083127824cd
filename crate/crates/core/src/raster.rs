//! Enriched escape classification under `(P, g_σ)`, Julia–Lavaurs rasters,
//! pixel-cover area statistics, and a horn-map orbit classifier.
//!
//! A point is followed by `P` until it escapes or is caught by an attracting
//! trap; caught points are sent through `g_σ` and followed again, up to
//! `lavaurs_depth` times. Points still caught after the last application are
//! labeled [`PixelLabel::Captured`]: they lie in int K at every stage seen so
//! far, which makes them an interior proxy rather than part of the boundary.
//!
//! A pixel belongs to the cover of `L` when its center is undecided or when
//! its center and four corners do not all fall in the same class (same escape
//! level, or all captured). Different classes are separated by preimages of
//! `J` under `g_σ`, all of which lie in `L`, so straddling pixels meet `L`.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write as _};
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fatou::End;
use crate::lavaurs::LavaursSystem;
use crate::parabolic::OrbitFate;

pub const DEFAULT_MAXITER: usize = 10_000;
pub const DEFAULT_LAVAURS_DEPTH: usize = 8;
pub const CSV_HEADER: &str = "resolution,escaped_p,escaped_lavaurs,undecided,cover_area";
pub const INTERIOR_CSV_HEADER: &str = "resolution,captured,interior_proxy_area,numerical_failures";

/// Axis-aligned rectangle `[re_min, re_max] × [im_min, im_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Region {
    pub fn square(half_width: f64) -> Self {
        Self { re_min: -half_width, re_max: half_width, im_min: -half_width, im_max: half_width }
    }

    pub fn area(&self) -> f64 {
        (self.re_max - self.re_min) * (self.im_max - self.im_min)
    }

    fn validate(&self) -> Result<()> {
        let ok = [self.re_min, self.re_max, self.im_min, self.im_max].iter().all(|v| v.is_finite())
            && self.re_min < self.re_max
            && self.im_min < self.im_max;
        if ok {
            Ok(())
        } else {
            Err(Error::Validation(format!("degenerate region {self:?}")))
        }
    }
}

impl Default for Region {
    fn default() -> Self {
        Self::square(2.0)
    }
}

impl std::str::FromStr for Region {
    type Err = Error;

    /// `x0,y0,x1,y1`: opposite corners, lower-left first.
    fn from_str(s: &str) -> Result<Self> {
        let v: Vec<f64> = s
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Validation(format!("region {s:?}: {e}")))?;
        let [re_min, im_min, re_max, im_max] = v[..] else {
            return Err(Error::Validation(format!("region {s:?} needs four numbers")));
        };
        let r = Self { re_min, re_max, im_min, im_max };
        r.validate()?;
        Ok(r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RasterConfig {
    pub region: Region,
    pub resolution: usize,
    pub maxiter: usize,
    /// Number of `g_σ` applications; 0 gives a plain scan of K.
    pub lavaurs_depth: usize,
    pub escape_radius: f64,
}

impl Default for RasterConfig {
    fn default() -> Self {
        Self {
            region: Region::default(),
            resolution: 256,
            maxiter: DEFAULT_MAXITER,
            lavaurs_depth: DEFAULT_LAVAURS_DEPTH,
            escape_radius: crate::parabolic::DEFAULT_ESCAPE_RADIUS,
        }
    }
}

impl RasterConfig {
    pub fn validate(&self) -> Result<()> {
        self.region.validate()?;
        if self.resolution < 16 {
            return Err(Error::Validation(format!("resolution must be at least 16, got {}", self.resolution)));
        }
        if !(self.escape_radius >= 4.0) {
            return Err(Error::Validation(format!("escape radius must be at least 4, got {}", self.escape_radius)));
        }
        if self.maxiter == 0 {
            return Err(Error::Validation("maxiter must be positive".into()));
        }
        if self.lavaurs_depth > 1000 {
            return Err(Error::Validation("lavaurs depth above 1000".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PixelLabel {
    /// Escaped under `P` after `n` steps, no `g_σ` needed.
    EscapedP(usize),
    /// Escaped after `k ≥ 1` applications of `g_σ` and `n` further steps.
    EscapedLavaurs { k: usize, n: usize },
    /// Certified in int K after the last allowed application of `g_σ`.
    Captured,
    Undecided,
}

impl PixelLabel {
    /// Class used for the straddling test: escape level, or captured.
    fn key(self) -> u16 {
        match self {
            PixelLabel::Undecided => 0,
            PixelLabel::EscapedP(_) => 1,
            PixelLabel::EscapedLavaurs { k, .. } => 1 + k as u16,
            PixelLabel::Captured => u16::MAX,
        }
    }
}

/// Label of `z` plus whether a numerical failure forced `Undecided`.
fn classify(sys: &LavaursSystem, cfg: &RasterConfig, z: Complex64) -> (PixelLabel, bool) {
    let geom = &sys.atlas.geometry;
    let q = geom.poly.q as f64;
    let mut z = z;
    for k in 0..=cfg.lavaurs_depth {
        if z.re.is_nan() || z.im.is_nan() {
            return (PixelLabel::Undecided, true);
        }
        match geom.follow(z, cfg.maxiter, cfg.escape_radius) {
            OrbitFate::Escaped(n) => {
                let label = if k == 0 { PixelLabel::EscapedP(n) } else { PixelLabel::EscapedLavaurs { k, n } };
                return (label, false);
            }
            OrbitFate::Undetermined => return (PixelLabel::Undecided, false),
            OrbitFate::Trapped(entry) => {
                if k == cfg.lavaurs_depth {
                    return (PixelLabel::Captured, false);
                }
                let image = sys
                    .atlas
                    .phi_attracting(entry.point)
                    .and_then(|phi| sys.atlas.psi_repelling(phi - entry.steps as f64 / q + sys.sigma));
                match image {
                    Ok(w) => z = w,
                    Err(_) => return (PixelLabel::Undecided, true),
                }
            }
        }
    }
    unreachable!("loop returns at k = lavaurs_depth")
}

/// Enriched escape label of a single point.
pub fn classify_point(sys: &LavaursSystem, cfg: &RasterConfig, z: Complex64) -> PixelLabel {
    classify(sys, cfg, z).0
}

/// Per-pixel labels at one resolution, row-major from the top-left corner.
#[derive(Debug, Clone)]
pub struct ClassificationRaster {
    pub config: RasterConfig,
    /// Label of each pixel center.
    pub labels: Vec<PixelLabel>,
    /// Pixels in the cover of `L`.
    pub cover: Vec<bool>,
    pub numerical_failures: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LabelCounts {
    pub escaped_p: usize,
    pub escaped_lavaurs: usize,
    pub captured: usize,
    pub undecided: usize,
}

impl LabelCounts {
    pub fn total(&self) -> usize {
        self.escaped_p + self.escaped_lavaurs + self.captured + self.undecided
    }
}

/// Counts by pixel class: cover pixels count as undecided whatever their
/// center label.
fn count(labels: impl Iterator<Item = (PixelLabel, bool)>) -> LabelCounts {
    let mut c = LabelCounts::default();
    for (label, covered) in labels {
        if covered {
            c.undecided += 1;
            continue;
        }
        match label {
            PixelLabel::EscapedP(_) => c.escaped_p += 1,
            PixelLabel::EscapedLavaurs { .. } => c.escaped_lavaurs += 1,
            PixelLabel::Captured => c.captured += 1,
            PixelLabel::Undecided => c.undecided += 1,
        }
    }
    c
}

impl ClassificationRaster {
    pub fn counts(&self) -> LabelCounts {
        count(self.labels.iter().copied().zip(self.cover.iter().copied()))
    }

    pub fn pixel_area(&self) -> f64 {
        let n = self.config.resolution as f64;
        self.config.region.area() / (n * n)
    }

    pub fn cover_area(&self) -> f64 {
        self.cover.iter().filter(|&&c| c).count() as f64 * self.pixel_area()
    }

    /// 8-bit RGB, row-major, first row at `im_max`.
    pub fn rgb(&self) -> Vec<u8> {
        let maxiter = self.config.maxiter;
        let mut out = Vec::with_capacity(self.labels.len() * 3);
        for (label, &covered) in self.labels.iter().zip(&self.cover) {
            let px = if covered { [0, 0, 0] } else { color(*label, maxiter) };
            out.extend_from_slice(&px);
        }
        out
    }

    pub fn write_png(&self, path: &Path) -> Result<()> {
        let n = self.config.resolution as u32;
        let file = BufWriter::new(File::create(path)?);
        let mut enc = png::Encoder::new(file, n, n);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().map_err(png_error)?;
        writer.write_image_data(&self.rgb()).map_err(png_error)?;
        writer.finish().map_err(png_error)?;
        Ok(())
    }
}

fn png_error(e: png::EncodingError) -> Error {
    match e {
        png::EncodingError::IoError(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(other.to_string())),
    }
}

fn color(label: PixelLabel, maxiter: usize) -> [u8; 3] {
    let shade = |n: usize| ((1.0 + n as f64).ln() / (1.0 + maxiter as f64).ln()).min(1.0);
    match label {
        PixelLabel::Undecided => [0, 0, 0],
        PixelLabel::Captured => [24, 32, 88],
        PixelLabel::EscapedP(n) => {
            let v = (255.0 - 150.0 * shade(n)).round() as u8;
            [v, v, v]
        }
        PixelLabel::EscapedLavaurs { k, n } => {
            let hue = (k as f64 * 0.381_966).fract();
            hsv(hue, 0.65, 0.95 - 0.55 * shade(n))
        }
    }
}

fn hsv(h: f64, s: f64, v: f64) -> [u8; 3] {
    let i = (h * 6.0).floor();
    let f = h * 6.0 - i;
    let (p, q, t) = (v * (1.0 - s), v * (1.0 - f * s), v * (1.0 - (1.0 - f) * s));
    let (r, g, b) = match i as i32 % 6 {
        0 => (v, t, p),
        1 => (q, v, p),
        2 => (p, v, t),
        3 => (p, q, v),
        4 => (t, p, v),
        _ => (v, p, q),
    };
    [(r * 255.0).round() as u8, (g * 255.0).round() as u8, (b * 255.0).round() as u8]
}

/// Labels on the `(m+1)²` pixel-corner lattice and the `m²` pixel centers of
/// an `m × m` raster. Coarser rasters whose side divides `m` sample subsets of
/// these two grids.
struct Samples {
    m: usize,
    corners: Vec<u16>,
    corner_failures: Vec<bool>,
    centers: Vec<PixelLabel>,
    center_failures: Vec<bool>,
}

fn sample(sys: &LavaursSystem, cfg: &RasterConfig, m: usize) -> Samples {
    let r = cfg.region;
    let dx = (r.re_max - r.re_min) / m as f64;
    let dy = (r.im_max - r.im_min) / m as f64;
    let corners: Vec<(u16, bool)> = (0..=m)
        .into_par_iter()
        .flat_map_iter(|i| {
            let im = r.im_max - i as f64 * dy;
            (0..=m).map(move |j| Complex64::new(r.re_min + j as f64 * dx, im))
                .map(|z| {
                    let (label, failed) = classify(sys, cfg, z);
                    (label.key(), failed)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let centers: Vec<(PixelLabel, bool)> = (0..m)
        .into_par_iter()
        .flat_map_iter(|i| {
            let im = r.im_max - (i as f64 + 0.5) * dy;
            (0..m).map(move |j| Complex64::new(r.re_min + (j as f64 + 0.5) * dx, im))
                .map(|z| classify(sys, cfg, z))
                .collect::<Vec<_>>()
        })
        .collect();
    let (corners, corner_failures) = corners.into_iter().unzip();
    let (centers, center_failures) = centers.into_iter().unzip();
    Samples { m, corners, corner_failures, centers, center_failures }
}

impl Samples {
    /// Raster of side `n`, where `n` divides `m`.
    fn raster(&self, cfg: &RasterConfig, n: usize) -> ClassificationRaster {
        let s = self.m / n;
        let w = self.m + 1;
        let mut labels = Vec::with_capacity(n * n);
        let mut cover = Vec::with_capacity(n * n);
        let mut failures = 0;
        for i in 0..n {
            for j in 0..n {
                let (label, failed) = if s % 2 == 0 {
                    // the center lies on the corner lattice; its full label is
                    // only needed for coloring, so rebuild it from the key
                    let idx = (s * i + s / 2) * w + s * j + s / 2;
                    (label_from_key(self.corners[idx]), self.corner_failures[idx])
                } else {
                    let idx = (s * i + s / 2) * self.m + s * j + s / 2;
                    (self.centers[idx], self.center_failures[idx])
                };
                let key = label.key();
                let corner_keys = [
                    self.corners[s * i * w + s * j],
                    self.corners[s * i * w + s * (j + 1)],
                    self.corners[s * (i + 1) * w + s * j],
                    self.corners[s * (i + 1) * w + s * (j + 1)],
                ];
                let straddles = key == 0 || corner_keys.iter().any(|&c| c != key);
                failures += usize::from(failed);
                labels.push(label);
                cover.push(straddles);
            }
        }
        ClassificationRaster { config: RasterConfig { resolution: n, ..*cfg }, labels, cover, numerical_failures: failures }
    }
}

/// Representative label for a class key (iteration counts are not kept on
/// the corner lattice).
fn label_from_key(key: u16) -> PixelLabel {
    match key {
        0 => PixelLabel::Undecided,
        1 => PixelLabel::EscapedP(0),
        u16::MAX => PixelLabel::Captured,
        k => PixelLabel::EscapedLavaurs { k: (k - 1) as usize, n: 0 },
    }
}

/// Classifies every pixel of `cfg` (centers plus corners for the cover).
pub fn render(sys: &LavaursSystem, cfg: &RasterConfig) -> Result<ClassificationRaster> {
    cfg.validate()?;
    let samples = sample(sys, cfg, cfg.resolution);
    Ok(samples.raster(cfg, cfg.resolution))
}

/// [`render`] followed by a PNG write.
pub fn render_to_file(sys: &LavaursSystem, cfg: &RasterConfig, path: &Path) -> Result<ClassificationRaster> {
    let raster = render(sys, cfg)?;
    raster.write_png(path)?;
    Ok(raster)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreaRow {
    pub resolution: usize,
    pub counts: LabelCounts,
    pub cover_area: f64,
    /// Area of pixels whose whole stencil is captured.
    pub interior_proxy_area: f64,
    pub numerical_failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaReport {
    pub config: RasterConfig,
    pub rows: Vec<AreaRow>,
}

impl AreaReport {
    /// Main report with the fixed header [`CSV_HEADER`].
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                r.resolution, r.counts.escaped_p, r.counts.escaped_lavaurs, r.counts.undecided, r.cover_area
            );
        }
        s
    }

    /// Companion report with the captured class, which the main header has
    /// no column for.
    pub fn interior_csv(&self) -> String {
        let mut s = String::from(INTERIOR_CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{},{}", r.resolution, r.counts.captured, r.interior_proxy_area, r.numerical_failures);
        }
        s
    }

    /// Writes `area.csv` and `interior_proxy.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut f = BufWriter::new(File::create(dir.join("area.csv"))?);
        f.write_all(self.to_csv().as_bytes())?;
        f.flush()?;
        let mut f = BufWriter::new(File::create(dir.join("interior_proxy.csv"))?);
        f.write_all(self.interior_csv().as_bytes())?;
        f.flush()?;
        Ok(())
    }
}

/// Cover statistics at each resolution. Every resolution must divide the
/// largest one; all rasters then sample one shared pair of grids.
pub fn area_scan(sys: &LavaursSystem, cfg: &RasterConfig, resolutions: &[usize]) -> Result<AreaReport> {
    if resolutions.is_empty() {
        return Err(Error::Validation("no resolutions given".into()));
    }
    if resolutions.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Validation("resolutions must be strictly increasing".into()));
    }
    let m = *resolutions.last().unwrap();
    if let Some(bad) = resolutions.iter().find(|&&n| m % n != 0) {
        return Err(Error::Validation(format!("resolution {bad} does not divide {m}")));
    }
    for &n in resolutions {
        RasterConfig { resolution: n, ..*cfg }.validate()?;
    }
    let samples = sample(sys, cfg, m);
    let rows = resolutions
        .iter()
        .map(|&n| {
            let raster = samples.raster(cfg, n);
            let counts = raster.counts();
            AreaRow {
                resolution: n,
                counts,
                cover_area: raster.cover_area(),
                interior_proxy_area: counts.captured as f64 * raster.pixel_area(),
                numerical_failures: raster.numerical_failures,
            }
        })
        .collect();
    Ok(AreaReport { config: *cfg, rows })
}

/// Proxy classes for horn-map orbits on the repelling cylinder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HornFate {
    /// `ψ₊` of some iterate was not certified in int K.
    Escapes,
    /// Stayed above the upper-end threshold for the second half of the budget.
    UpperTrapped,
    /// Visited `Im w ≤ -ε` at least three times.
    FarRecurrent,
    Undecided,
}

/// Height above which `h_σ` is a near-translation at the upper end; falls
/// back to the largest sampled height when the end estimate fails.
pub fn upper_threshold(sys: &LavaursSystem) -> f64 {
    sys.end_translation(End::Upper).map(|v| v.height).unwrap_or(crate::lavaurs::END_MAX_HEIGHT)
}

/// Iterates `h_σ` from `w` for up to `budget` steps.
pub fn horn_orbit_classify(sys: &LavaursSystem, w: Complex64, epsilon: f64, budget: usize) -> Result<HornFate> {
    if !(epsilon > 0.0) {
        return Err(Error::domain("epsilon must be positive"));
    }
    if budget == 0 {
        return Ok(HornFate::Undecided);
    }
    let threshold = upper_threshold(sys);
    let stay = budget.div_ceil(2);
    let mut w = w;
    let mut low_visits = 0;
    let mut above_run = 0;
    for _ in 0..budget {
        w = match sys.horn_map(w) {
            Ok(v) => v,
            Err(Error::NotCertified { .. }) => return Ok(HornFate::Escapes),
            Err(_) => return Ok(HornFate::Undecided),
        };
        if w.im <= -epsilon {
            low_visits += 1;
            if low_visits >= 3 {
                return Ok(HornFate::FarRecurrent);
            }
        }
        above_run = if w.im > threshold { above_run + 1 } else { 0 };
    }
    Ok(if above_run >= stay { HornFate::UpperTrapped } else { HornFate::Undecided })
}
