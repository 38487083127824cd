use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use implosion::cfrac::{self, ContinuedFraction, GOLDEN};
use implosion::circlemap::{self, CircleMapLift, PartitionSet, RigidRotation};
use implosion::fatou::{sample_petal_points, AtlasOptions, End, FatouAtlas};
use implosion::hypgeo;
use implosion::lavaurs::{solve_sigma, LavaursSystem};
use implosion::parabolic::ParabolicPolynomial;
use implosion::raster::{self, HornFate, RasterConfig, Region};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::manifest::Manifest;
use crate::{Cli, CliError, Command, Common};

/// Residual bound for the functional-equation checks.
const FATOU_TOL: f64 = 1e-8;

pub fn parse_omega(s: &str) -> Result<f64, CliError> {
    let s = s.trim();
    let value = if s == "golden" {
        GOLDEN
    } else if let Some(list) = s.strip_prefix("cf:") {
        let quotients = list
            .split(',')
            .map(|t| t.trim().parse::<u64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::Usage(format!("--omega {s:?}: {e}")))?;
        ContinuedFraction::from_quotients(quotients)?.value
    } else {
        s.parse::<f64>().map_err(|e| CliError::Usage(format!("--omega {s:?}: {e}")))?
    };
    if !(value > 0.0 && value < 1.0) {
        return Err(CliError::Validation(format!("ω must lie in (0, 1), got {value}")));
    }
    Ok(value)
}

pub fn parse_complex(s: &str) -> Result<Complex64, CliError> {
    let parts: Vec<&str> = s.split(',').collect();
    let [re, im] = parts[..] else {
        return Err(CliError::Usage(format!("expected re,im, got {s:?}")));
    };
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| CliError::Usage(format!("{s:?}: {e}")));
    Ok(Complex64::new(num(re)?, num(im)?))
}

struct Run<'a> {
    common: &'a Common,
    out: &'a Path,
    manifest: Manifest,
}

impl Run<'_> {
    fn omega(&mut self) -> Result<f64, CliError> {
        let omega = parse_omega(&self.common.omega)?;
        self.manifest.param("omega", self.common.omega.clone());
        self.manifest.param("omega_value", omega);
        Ok(omega)
    }

    fn atlas(&mut self) -> Result<FatouAtlas, CliError> {
        let poly = ParabolicPolynomial::parse(&self.common.pq)?;
        self.manifest.param("pq", self.common.pq.clone());
        Ok(FatouAtlas::new(&poly, AtlasOptions::default())?)
    }

    fn system(&mut self) -> Result<LavaursSystem, CliError> {
        let atlas = self.atlas()?;
        let sigma = match &self.common.sigma {
            Some(s) => parse_complex(s)?,
            None => {
                let omega = self.omega()?;
                solve_sigma(&atlas, omega, End::Upper)?
            }
        };
        self.manifest.sigma = Some([sigma.re, sigma.im]);
        Ok(LavaursSystem::new(atlas, sigma))
    }

    fn raster_config(&mut self) -> Result<RasterConfig, CliError> {
        let mut cfg = RasterConfig::default();
        if let Some(r) = &self.common.region {
            cfg.region = Region::from_str(r)?;
        }
        if let Some(n) = self.common.resolution {
            cfg.resolution = n;
        }
        if let Some(m) = self.common.maxiter {
            cfg.maxiter = m;
        }
        if let Some(d) = self.common.depth {
            cfg.lavaurs_depth = d;
        }
        cfg.validate()?;
        let r = cfg.region;
        self.manifest.param("region", vec![r.re_min, r.im_min, r.re_max, r.im_max]);
        self.manifest.param("resolution", cfg.resolution);
        self.manifest.param("maxiter", cfg.maxiter);
        self.manifest.param("depth", cfg.lavaurs_depth);
        self.manifest.param("escape_radius", cfg.escape_radius);
        Ok(cfg)
    }

    fn tuned_lift(&mut self, tol: f64) -> Result<CircleMapLift, CliError> {
        let omega = self.omega()?;
        self.manifest.param("tune_tol", tol);
        let lift = circlemap::tune_rotation(omega, tol)?;
        self.manifest.param("t", lift.t);
        Ok(lift)
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        std::fs::write(self.out.join(name), contents)?;
        self.manifest.outputs.push(name.to_owned());
        Ok(())
    }
}

pub fn execute(cli: &Cli, argv: &[String]) -> Result<(), CliError> {
    let start = Instant::now();
    let common = &cli.common;
    std::fs::create_dir_all(&common.out)?;
    let mut run = Run {
        common,
        out: &common.out,
        manifest: Manifest { argv: argv.iter().skip(1).cloned().collect(), seed: common.seed, ..Default::default() },
    };
    // failures of a check still leave outputs and a manifest behind
    let verdict = dispatch(&mut run, &cli.command);
    run.manifest.wall_time_seconds = start.elapsed().as_secs_f64();
    if !run.manifest.subcommand.is_empty() {
        run.manifest.write(run.out)?;
    }
    verdict
}

fn dispatch(run: &mut Run, command: &Command) -> Result<(), CliError> {
    match command {
        Command::Render => {
            run.manifest.subcommand = "render".into();
            let cfg = run.raster_config()?;
            let sys = run.system()?;
            let raster = raster::render_to_file(&sys, &cfg, &run.out.join("render.png"))?;
            run.manifest.outputs.push("render.png".into());
            let c = raster.counts();
            println!(
                "{}x{} pixels: escaped_p {} escaped_lavaurs {} captured {} undecided {}; cover area {}",
                cfg.resolution, cfg.resolution, c.escaped_p, c.escaped_lavaurs, c.captured, c.undecided, raster.cover_area()
            );
            Ok(())
        }
        Command::AreaScan { resolutions } => {
            run.manifest.subcommand = "area-scan".into();
            let cfg = run.raster_config()?;
            run.manifest.param("resolutions", resolutions.clone());
            let sys = run.system()?;
            let report = raster::area_scan(&sys, &cfg, resolutions)?;
            report.write(run.out)?;
            run.manifest.outputs.extend(["area.csv".into(), "interior_proxy.csv".into()]);
            print!("{}", report.to_csv());
            Ok(())
        }
        Command::FatouCheck { samples } => {
            run.manifest.subcommand = "fatou-check".into();
            run.manifest.param("samples", *samples);
            let atlas = run.atlas()?;
            let poly = *atlas.poly();
            let mut abel: f64 = 0.0;
            for z in sample_petal_points(&atlas, *samples, run.common.seed)? {
                let r = atlas.phi_attracting(poly.eval_q(z))? - atlas.phi_attracting(z)? - 1.0;
                abel = abel.max(r.norm());
            }
            let mut rng = ChaCha8Rng::seed_from_u64(run.common.seed);
            let mut psi: f64 = 0.0;
            for _ in 0..*samples {
                let w = Complex64::new(rng.gen_range(0.0..1.0), rng.gen_range(-3.0..3.0));
                let r = atlas.psi_repelling(w + 1.0)? - poly.eval_q(atlas.psi_repelling(w)?);
                psi = psi.max(r.norm());
            }
            let mut csv = String::from("check,samples,max_residual,tolerance\n");
            let _ = writeln!(csv, "abel,{samples},{abel},{FATOU_TOL}");
            let _ = writeln!(csv, "repelling,{samples},{psi},{FATOU_TOL}");
            run.write("fatou.csv", &csv)?;
            print!("{csv}");
            if abel >= FATOU_TOL || psi >= FATOU_TOL {
                return Err(CliError::Precision(format!("abel {abel}, repelling {psi}")));
            }
            Ok(())
        }
        Command::SigmaSolve { end } => {
            run.manifest.subcommand = "sigma-solve".into();
            let end = End::from_str(end)?;
            run.manifest.param("end", format!("{end:?}").to_lowercase());
            let atlas = run.atlas()?;
            let omega = run.omega()?;
            let sigma = match &run.common.sigma {
                Some(s) => parse_complex(s)?,
                None => solve_sigma(&atlas, omega, end)?,
            };
            run.manifest.sigma = Some([sigma.re, sigma.im]);
            let vm = LavaursSystem::new(atlas, sigma).end_translation(end)?;
            let target = Complex64::from_polar(1.0, std::f64::consts::TAU * omega);
            let err = (vm.m - target).norm();
            println!("sigma = {} {:+}i", sigma.re, sigma.im);
            println!("multiplier = {} {:+}i (|m - e^(2πiω)| = {err:e})", vm.m.re, vm.m.im);
            let mut csv = String::from("end,omega,sigma_re,sigma_im,m_re,m_im,multiplier_error\n");
            let _ = writeln!(csv, "{:?},{omega},{},{},{},{},{err}", end, sigma.re, sigma.im, vm.m.re, vm.m.im);
            run.write("sigma.csv", &csv)?;
            Ok(())
        }
        Command::HornProbe { heights, samples, epsilon, budget } => {
            run.manifest.subcommand = "horn-probe".into();
            run.manifest.param("heights", heights.clone());
            run.manifest.param("samples", *samples);
            run.manifest.param("epsilon", *epsilon);
            run.manifest.param("budget", *budget);
            let sys = run.system()?;
            let mut csv = String::from("re,im,fate\n");
            for &h in heights {
                for j in 0..*samples {
                    let w = Complex64::new((j as f64 + 0.5) / *samples as f64, h);
                    let fate = match raster::horn_orbit_classify(&sys, w, *epsilon, *budget)? {
                        HornFate::Escapes => "ESCAPES",
                        HornFate::UpperTrapped => "UPPER_TRAPPED",
                        HornFate::FarRecurrent => "FAR_RECURRENT",
                        HornFate::Undecided => "UNDECIDED",
                    };
                    let _ = writeln!(csv, "{},{},{fate}", w.re, w.im);
                }
            }
            run.write("horn.csv", &csv)?;
            print!("{csv}");
            Ok(())
        }
        Command::CircleTune { tol } => {
            run.manifest.subcommand = "circle-tune".into();
            let lift = run.tuned_lift(*tol)?;
            let rho = circlemap::rotation_number(&lift, circlemap::DEFAULT_BUDGET, tol / 4.0)?;
            let qs = cfrac::denominators(&cfrac::cf_expand(lift.rotation, 8)?)?;
            let count = match (qs.get(5), qs.get(6)) {
                (Some(a), Some(b)) => (a + b) as usize,
                _ => 21,
            };
            let matches = circlemap::orbit_order_type(&lift, count)
                == circlemap::orbit_order_type(&RigidRotation { rho: lift.rotation }, count);
            let mut csv = String::from("omega,t,rotation,rotation_error,order_points,order_type_matches\n");
            let _ = writeln!(csv, "{},{},{rho},{},{count},{matches}", lift.rotation, lift.t, (rho - lift.rotation).abs());
            run.write("circle.csv", &csv)?;
            print!("{csv}");
            if !matches {
                return Err(CliError::Validation("orbit order type differs from the rigid rotation".into()));
            }
            Ok(())
        }
        Command::PartitionReport { levels } => {
            run.manifest.subcommand = "partition-report".into();
            run.manifest.param("levels", *levels);
            let lift = run.tuned_lift(1e-10)?;
            let report = PartitionSet::build(&lift, *levels)?.real_bounds();
            run.write("bounds.csv", &report.to_csv())?;
            print!("{}", report.to_csv());
            println!("K = {}, K' = {}", report.k, report.k_prime);
            Ok(())
        }
        Command::ScaleMatch { samples, levels } => {
            run.manifest.subcommand = "scale-match".into();
            run.manifest.param("samples", *samples);
            run.manifest.param("levels", *levels);
            let lift = run.tuned_lift(1e-10)?;
            let set = PartitionSet::build(&lift, *levels)?;
            let report = set.real_bounds();
            let floor = report.levels[set.max_level()].max_interval;
            let mut rng = ChaCha8Rng::seed_from_u64(run.common.seed);
            let mut csv = String::from("x,ell,level,length,ratio\n");
            let mut outside = 0;
            for _ in 0..*samples {
                let x: f64 = rng.gen_range(0.0..1.0);
                let ell = (rng.gen_range(floor.ln()..0.5_f64.ln())).exp();
                let m = set.scale_match(x, ell)?;
                if !(m.ratio >= 1.0 / report.k_prime && m.ratio <= report.k_prime) {
                    outside += 1;
                }
                let _ = writeln!(csv, "{x},{ell},{},{},{}", m.level, m.length, m.ratio);
            }
            run.write("scale_match.csv", &csv)?;
            println!("K' = {}; {outside} of {samples} ratios outside [1/K', K']", report.k_prime);
            if outside > 0 {
                return Err(CliError::Validation(format!("{outside} scale ratios outside [1/K', K']")));
            }
            Ok(())
        }
        Command::BallSweep { levels, r0 } => {
            run.manifest.subcommand = "ball-sweep".into();
            run.manifest.param("levels", *levels);
            run.manifest.param("r0", *r0);
            let lift = run.tuned_lift(1e-10)?;
            let set = PartitionSet::build(&lift, *levels)?;
            let balls = circlemap::ball_sweep(&lift, &set, 2..=*levels, *r0)?;
            let mut csv = String::from(
                "level,start,end,m,center_re,center_im,radius,radius_ratio,distance_ratio,below_real,image_in_cone,next_image_upper\n",
            );
            for b in &balls {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{},{},{},{},{},{},{}",
                    b.level,
                    b.interval.start,
                    b.interval.end,
                    b.m,
                    b.center.re,
                    b.center.im,
                    b.radius,
                    b.radius_ratio,
                    b.distance_ratio,
                    b.below_real,
                    b.image_in_cone,
                    b.next_image_upper
                );
            }
            run.write("balls.csv", &csv)?;
            for n in 2..=*levels {
                let lv = balls.iter().filter(|b| b.level == n);
                let r = lv.clone().map(|b| b.radius_ratio).fold(f64::INFINITY, f64::min);
                let d = lv.map(|b| b.distance_ratio).fold(0.0, f64::max);
                println!("level {n}: min r/|I| = {r}, max d/|I| = {d}");
            }
            let bad = balls.iter().filter(|b| !(b.below_real && b.image_in_cone)).count();
            if bad > 0 {
                return Err(CliError::Validation(format!("{bad} balls fail containment checks")));
            }
            Ok(())
        }
        Command::ConeSearch { k, samples } => {
            run.manifest.subcommand = "cone-search".into();
            run.manifest.param("k", *k);
            run.manifest.param("samples", *samples);
            let consts = hypgeo::cone_search(*k, run.common.seed)?;
            let fresh = hypgeo::validate_cone_constants(&consts, *samples, run.common.seed.wrapping_add(1))?;
            let mut csv = String::from("k,m0,r0,opening_deg,direction_deg,fresh_samples,failures,worst_diam,seed\n");
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{},{},{}",
                consts.k, consts.m0, consts.r0, consts.opening_deg, consts.direction_deg, fresh.samples, fresh.failures,
                fresh.worst_diam, fresh.seed
            );
            run.write("cone.csv", &csv)?;
            print!("{csv}");
            if fresh.failures > 0 {
                return Err(CliError::Validation(format!(
                    "{} of {} fresh triples fail; first {:?}",
                    fresh.failures, fresh.samples, fresh.first_failure
                )));
            }
            Ok(())
        }
        Command::Replay { .. } => unreachable!("replay is resolved before dispatch"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_forms() {
        assert_eq!(parse_omega("golden").unwrap(), GOLDEN);
        assert!((parse_omega("cf:1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1").unwrap() - GOLDEN).abs() < 1e-12);
        assert_eq!(parse_omega("0.25").unwrap(), 0.25);
        assert!(matches!(parse_omega("1.5"), Err(CliError::Validation(_))));
        assert!(matches!(parse_omega("cf:1,x"), Err(CliError::Usage(_))));
    }

    #[test]
    fn complex_pairs() {
        assert_eq!(parse_complex("0.5,-2").unwrap(), Complex64::new(0.5, -2.0));
        assert!(parse_complex("1").is_err());
    }
}
