//! The five verbs. Each stage checks the cache, computes on a miss (unless
//! `io.compute = false`), and copies its payload into the output directory.

use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use kslab_core::flow::{
    initial_state_from_deviation, shoot_stable_manifold, BlowupParams, ExitEvent, ShotRecord,
    UStarSample,
};
use kslab_core::io::{
    profile_table, read_profile, spectrum_table, trajectory_table, write_atomic, ProfileMeta, SpectrumMeta, Table,
};
use kslab_core::profiles::ProfileSettings;
use kslab_core::spectrum::{spectral_gap_projection_check, tail_exponent_check, GapCheck};
use kslab_core::{
    assemble, blowup_extract, build_measure, eigen_solve, eigen_solve_refined, evolve, find_profile, make_grid, phi0_exact,
    BlowupReport, FlowContext, FlowParams, FlowRun, Profile, RadialField,
};

use crate::cache::{Cache, EntryKey, Payload};
use crate::config::{ExperimentConfig, GridChoice};
use crate::CliError;

/// Seed of the random gap-check campaign unless `--seed` is given.
pub const DEFAULT_SEED: u64 = 7;

pub struct Runner {
    pub cfg: ExperimentConfig,
    pub out_dir: PathBuf,
    pub seed: u64,
    cache: Cache,
}

#[derive(Serialize)]
struct ProfileKey {
    grid: GridChoice,
    n_index: usize,
    bracket: Option<(f64, f64)>,
    tol: f64,
    closed_form: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumSidecar {
    pub meta: SpectrumMeta,
    /// `mu_1`, minus the eigenvalue closest to -1 (extrapolated when refined).
    pub mu_1: Option<f64>,
    pub tail_window: [f64; 2],
    pub tail_slopes: Vec<Option<f64>>,
    pub seed: u64,
    pub gap_check: Option<GapCheck>,
    /// Largest change of a nonpositive eigenvalue when `r_max` is doubled.
    pub r_max_shift: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvolveSidecar {
    pub n: usize,
    pub params: FlowParams,
    pub growth_rates: Vec<f64>,
    pub initial_a: Vec<f64>,
    pub steps: usize,
    pub halvings: usize,
    pub max_drift: f64,
    pub exit: Option<ExitEvent>,
    pub blowup: Option<BlowupReport>,
    pub blowup_error: Option<String>,
    pub ustar: Vec<UStarSample>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShootSidecar {
    pub n: usize,
    pub a2_star: f64,
    pub bracket: (f64, f64),
    pub bisect_tol: f64,
    pub shots: Vec<ShotRecord>,
    pub trapped_duration: f64,
    pub trapped_exit: Option<ExitEvent>,
    pub blowup: Option<BlowupReport>,
}

fn log(msg: impl AsRef<str>) {
    eprintln!("kslab: {}", msg.as_ref());
}

fn json_bytes<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("sidecars serialize");
    s.push('\n');
    s.into_bytes()
}

fn parse_json<T: for<'de> Deserialize<'de>>(name: &str, bytes: &[u8]) -> Result<T, CliError> {
    serde_json::from_slice(bytes).map_err(|e| CliError::numerical(format!("corrupt {name}: {e}")))
}

fn utf8<'a>(name: &str, bytes: &'a [u8]) -> Result<&'a str, CliError> {
    std::str::from_utf8(bytes).map_err(|_| CliError::numerical(format!("{name} is not UTF-8")))
}

fn file<'a>(payload: &'a Payload, name: &str) -> &'a [u8] {
    &payload.iter().find(|(n, _)| n == name).expect("payload lists its files").1
}

impl Runner {
    pub fn new(cfg: ExperimentConfig, out: Option<PathBuf>, seed: Option<u64>, no_cache: bool) -> Self {
        let out_dir = out.unwrap_or_else(|| cfg.io.out_dir.clone());
        let cache_dir = match (&cfg.io.cache_dir, out_dir == cfg.io.out_dir) {
            (Some(d), _) => d.clone(),
            (None, true) => cfg.cache_dir(),
            (None, false) => out_dir.join("cache"),
        };
        Self { cache: Cache::new(cache_dir, !no_cache), out_dir, seed: seed.unwrap_or(DEFAULT_SEED), cfg }
    }

    fn n(&self) -> usize {
        self.cfg.profile.n_index
    }

    fn name(&self, stem: &str, ext: &str) -> String {
        format!("{stem}_n{}.{ext}", self.n())
    }

    fn profile_key(&self) -> ProfileKey {
        let p = &self.cfg.profile;
        let closed = self.cfg.uses_closed_form();
        ProfileKey {
            grid: self.cfg.grid_choice(),
            n_index: p.n_index,
            bracket: if closed { None } else { self.cfg.profile_bracket() },
            tol: p.tol,
            closed_form: closed,
        }
    }

    /// Cache lookup, computation on a miss, and publication to `out_dir`.
    fn stage(
        &self,
        module: &str,
        key: EntryKey,
        names: &[&str],
        compute: impl FnOnce() -> Result<Payload, CliError>,
    ) -> Result<Payload, CliError> {
        let payload = match self.cache.get(&key, names)? {
            Some(p) => {
                log(format!("cache hit: {module} {}", &key.hash()[..12]));
                p
            }
            None if !self.cfg.io.compute => {
                return Err(CliError::missing(format!(
                    "no cached {module} for this configuration and io.compute = false"
                )))
            }
            None => {
                log(format!("computing {module}"));
                let p = compute()?;
                self.cache.put(&key, &p)?;
                p
            }
        };
        for (name, bytes) in &payload {
            let path = self.out_dir.join(name);
            if path.exists() && !self.cfg.io.overwrite {
                return Err(CliError::config(format!(
                    "{} exists and io.overwrite = false",
                    path.display()
                )));
            }
            write_atomic(&path, bytes)?;
        }
        Ok(payload)
    }

    pub fn profile(&self) -> Result<Profile, CliError> {
        let (csv, json) = (self.name("profile", "csv"), self.name("profile", "json"));
        let key = EntryKey::new("profile", &self.profile_key());
        let payload = self.stage("profile", key, &[&csv, &json], || {
            let g = self.cfg.grid_choice();
            let grid = make_grid(g.nodes, g.r_max, g.stretch)?;
            let profile = if self.cfg.uses_closed_form() {
                phi0_exact(&grid)
            } else {
                let bracket = self.cfg.profile_bracket().expect("validated");
                find_profile(self.n(), bracket, self.cfg.profile.tol, &grid, &ProfileSettings::default())?
            };
            Ok(vec![
                (csv.clone(), profile_table(&profile).to_csv().into_bytes()),
                (json.clone(), json_bytes(&ProfileMeta::of(&profile))),
            ])
        })?;
        let meta: ProfileMeta = parse_json(&json, file(&payload, &json))?;
        let table = Table::parse(utf8(&csv, file(&payload, &csv))?)?;
        Ok(read_profile(&table, &meta)?)
    }

    pub fn spectrum(&self) -> Result<SpectrumSidecar, CliError> {
        let profile = self.profile()?;
        let (csv, json) = (self.name("spectrum", "csv"), self.name("spectrum", "json"));
        let key = EntryKey::new("spectrum", &(self.profile_key(), &self.cfg.spectrum, self.seed));
        let payload = self.stage("spectrum", key, &[&csv, &json], || {
            let sc = &self.cfg.spectrum;
            let measure = build_measure(&profile, profile.grid())?;
            let op = assemble(&profile, &measure)?;
            let report = if sc.refine { eigen_solve_refined(&profile, sc.k)? } else { eigen_solve(&op, sc.k)? };
            if !report.complete {
                return Err(CliError::numerical(format!(
                    "no positive eigenvalue among the lowest {}; nonpositive modes may be missing (raise spectrum.k)",
                    sc.k
                )));
            }
            let window = (sc.tail_window[0], sc.tail_window[1]);
            let tail_slopes: Vec<Option<f64>> = report
                .pairs
                .iter()
                .map(|p| if p.eigenvalue < 0.0 { tail_exponent_check(p, window).ok().map(|t| t.slope) } else { None })
                .collect();
            let gap_check = if sc.gap_trials > 0 {
                Some(spectral_gap_projection_check(&op, &report, sc.gap_trials, self.seed)?)
            } else {
                None
            };
            let r_max_shift = if sc.r_max_double_check { Some(self.r_max_shift(&profile, report.nonpositive_count)?) } else { None };
            let sidecar = SpectrumSidecar {
                meta: SpectrumMeta::of(&report, self.n(), profile.grid()),
                mu_1: report.scaling_mode().map(|p| {
                    -report.extrapolated.as_ref().map_or(p.eigenvalue, |ex| ex[p.index])
                }),
                tail_window: sc.tail_window,
                tail_slopes: tail_slopes.clone(),
                seed: self.seed,
                gap_check,
                r_max_shift,
            };
            Ok(vec![
                (csv.clone(), spectrum_table(&report, &tail_slopes).to_csv().into_bytes()),
                (json.clone(), json_bytes(&sidecar)),
            ])
        })?;
        let side: SpectrumSidecar = parse_json(&json, file(&payload, &json))?;
        let table = Table::parse(utf8(&csv, file(&payload, &csv))?)?;
        let eig = table.float_column("eigenvalue")?;
        println!("N_{} = {}", self.n(), side.meta.nonpositive_count);
        if let Some(mu) = side.mu_1 {
            println!("mu_1 = {mu:.10}");
        }
        if let Some(gap) = side.meta.gap {
            println!("gap = {gap:.10}");
        }
        let list: Vec<String> = eig.iter().map(|v| format!("{v:.10}")).collect();
        println!("eigenvalues = [{}]", list.join(", "));
        Ok(side)
    }

    /// Compares extrapolated nonpositive eigenvalues on `[0, r_max]` and
    /// `[0, 2 r_max]`; extrapolation removes the resolution change that a
    /// stretched grid would otherwise mix into the shift.
    fn r_max_shift(&self, profile: &Profile, count: usize) -> Result<f64, CliError> {
        if count == 0 {
            return Ok(0.0);
        }
        let g = self.cfg.grid_choice();
        let grid = make_grid(2 * (g.nodes - 1) + 1, 2.0 * g.r_max, g.stretch)?;
        let wide = profile.resample(&grid)?;
        let base = eigen_solve_refined(profile, count)?.extrapolated.expect("refined reports extrapolate");
        let wide = eigen_solve_refined(&wide, count)?.extrapolated.expect("refined reports extrapolate");
        Ok(base.iter().zip(&wide).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    fn context(&self) -> Result<(FlowContext, RadialField), CliError> {
        let profile = self.profile()?;
        let ctx = FlowContext::new(&profile)?;
        let p = &self.cfg.flow.perturbation;
        let w2 = p.width * p.width;
        let v0 = RadialField::from_fn(ctx.grid(), |r| p.amplitude * (-r * r / w2).exp());
        Ok((ctx, v0))
    }

    pub fn evolve(&self) -> Result<EvolveSidecar, CliError> {
        let (csv, json) = (self.name("trajectory", "csv"), self.name("evolve", "json"));
        let key = EntryKey::new("evolve", &(self.profile_key(), &self.cfg.flow));
        let payload = self.stage("evolve", key, &[&csv, &json], || {
            let (ctx, v0) = self.context()?;
            let k = ctx.unstable_modes().len();
            let a = if self.cfg.flow.a.is_empty() { vec![0.0; k] } else { self.cfg.flow.a.clone() };
            if a.len() != k {
                return Err(CliError::config(format!(
                    "flow.a has {} entries but the profile has {k} unstable directions",
                    a.len()
                )));
            }
            let params = self.cfg.flow_params();
            let init = initial_state_from_deviation(&ctx, &v0, &a, &params)?;
            let run = evolve(&init, &ctx, &params)?;
            let (blowup, blowup_error) = extract(&run, &ctx);
            let side = EvolveSidecar {
                n: self.n(),
                params,
                growth_rates: ctx.growth_rates(),
                initial_a: init.a.clone(),
                steps: run.steps,
                halvings: run.halvings,
                max_drift: run.max_drift,
                exit: run.exit,
                blowup,
                blowup_error,
                ustar: run.ustar.clone(),
            };
            Ok(vec![(csv.clone(), trajectory_table(&run).to_csv().into_bytes()), (json.clone(), json_bytes(&side))])
        })?;
        let side: EvolveSidecar = parse_json(&json, file(&payload, &json))?;
        match (&side.exit, &side.blowup) {
            (Some(e), _) => println!("exit at s = {:.6} via {:?}, side {:+}", e.s, e.bound, e.a_sign),
            (None, Some(b)) => println!(
                "trapped to s_end; T = {:.12e}, rate_fit = {:.6}, sup_growth = {:.6}, (T-t)|u| = {:.6}",
                b.blowup_time, b.rate_fit, b.sup_growth, b.type_one_product
            ),
            (None, None) => println!("trapped to s_end; {}", side.blowup_error.as_deref().unwrap_or("no blow-up report")),
        }
        Ok(side)
    }

    pub fn shoot(&self) -> Result<ShootSidecar, CliError> {
        let (csv, json) = (self.name("shoot_trajectory", "csv"), self.name("shoot", "json"));
        let key = EntryKey::new("shoot", &(self.profile_key(), &self.cfg.flow, &self.cfg.shoot));
        let payload = self.stage("shoot", key, &[&csv, &json], || {
            let (ctx, _) = self.context()?;
            if ctx.unstable_modes().len() != 1 {
                return Err(CliError::config(format!(
                    "shoot needs exactly one unstable direction; profile n = {} has {}",
                    self.n(),
                    ctx.unstable_modes().len()
                )));
            }
            let p = &self.cfg.flow.perturbation;
            let (amp, w2) = (self.cfg.shoot.base_amplitude, p.width * p.width);
            let base = RadialField::from_fn(ctx.grid(), |r| amp * (-r * r / w2).exp());
            let [lo, hi] = self.cfg.shoot.bracket;
            let params = self.cfg.flow_params();
            let shot = shoot_stable_manifold(&ctx, &base, (lo, hi), self.cfg.shoot.bisect_tol, &params)?;
            let (blowup, _) = extract(&shot.trapped, &ctx);
            let side = ShootSidecar {
                n: self.n(),
                a2_star: shot.a2_star,
                bracket: shot.bracket,
                bisect_tol: self.cfg.shoot.bisect_tol,
                shots: shot.shots.clone(),
                trapped_duration: shot.trapped_duration,
                trapped_exit: shot.trapped.exit,
                blowup,
            };
            Ok(vec![
                (csv.clone(), trajectory_table(&shot.trapped).to_csv().into_bytes()),
                (json.clone(), json_bytes(&side)),
            ])
        })?;
        let side: ShootSidecar = parse_json(&json, file(&payload, &json))?;
        println!(
            "a2* = {:.10e} after {} shots, trapped for {:.4}",
            side.a2_star,
            side.shots.len(),
            side.trapped_duration
        );
        Ok(side)
    }

    /// Summarizes whatever artifacts for this `n` exist in `out_dir`.
    pub fn report(&self) -> Result<String, CliError> {
        let read = |name: String| -> Result<Option<Vec<u8>>, CliError> {
            match std::fs::read(self.out_dir.join(&name)) {
                Ok(b) => Ok(Some(b)),
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
                Err(e) => Err(CliError::numerical(format!("{name}: {e}"))),
            }
        };
        let pname = self.name("profile", "json");
        let Some(pbytes) = read(pname.clone())? else {
            return Err(CliError::missing(format!(
                "{} not found; run `kslab profile` first",
                self.out_dir.join(pname).display()
            )));
        };
        let meta: ProfileMeta = parse_json(&pname, &pbytes)?;
        let mut s = String::new();
        let _ = writeln!(s, "# Report for n = {}\n", meta.n);
        let _ = writeln!(s, "## Profile\n");
        let _ = writeln!(s, "- center value a_n = {:.12}", meta.a_n);
        let _ = writeln!(s, "- tail constant c = {:.12}", meta.tail_c);
        let _ = writeln!(s, "- residual sup = {:.3e}", meta.residual_sup);
        let _ = writeln!(s, "- grid: {} nodes, r_max {}, stretch {}", meta.grid.nodes, meta.grid.r_max, meta.grid.stretch);
        let _ = writeln!(s, "- source: {:?}", meta.source);
        if let Some(b) = read(self.name("spectrum", "json"))? {
            let sp: SpectrumSidecar = parse_json("spectrum", &b)?;
            let _ = writeln!(s, "\n## Spectrum\n");
            let _ = writeln!(s, "- nonpositive eigenvalues N = {}", sp.meta.nonpositive_count);
            if let Some(mu) = sp.mu_1 {
                let _ = writeln!(s, "- mu_1 = {mu:.10}");
            }
            if let Some(g) = sp.meta.gap {
                let _ = writeln!(s, "- first positive eigenvalue = {g:.10}");
            }
            if let Some(ex) = &sp.meta.extrapolated {
                let list: Vec<String> = ex.iter().map(|v| format!("{v:.10}")).collect();
                let _ = writeln!(s, "- extrapolated eigenvalues = [{}]", list.join(", "));
            }
            if let Some(gc) = &sp.gap_check {
                let _ = writeln!(
                    s,
                    "- gap check: {} trials (seed {}), {} violations, min L2 ratio {:.6}, min H1 ratio {:.6}",
                    gc.trials, sp.seed, gc.violations, gc.min_l2_ratio, gc.min_h1_ratio
                );
            }
            if let Some(shift) = sp.r_max_shift {
                let _ = writeln!(s, "- shift under doubled r_max = {shift:.3e}");
            }
        }
        if let Some(b) = read(self.name("evolve", "json"))? {
            let ev: EvolveSidecar = parse_json("evolve", &b)?;
            let _ = writeln!(s, "\n## Flow\n");
            let _ = writeln!(s, "- s0 = {}, s_end = {}, ds = {}, steps = {}, halvings = {}", ev.params.s0, ev.params.s_end, ev.params.ds, ev.steps, ev.halvings);
            match (&ev.exit, &ev.blowup) {
                (Some(e), _) => {
                    let _ = writeln!(s, "- exit at s = {:.6} via {:?}, side {:+}", e.s, e.bound, e.a_sign);
                }
                (None, Some(r)) => {
                    let _ = writeln!(s, "- blow-up time T = {:.12e}", r.blowup_time);
                    let _ = writeln!(s, "- rate fit = {:.6}, sup growth = {:.6}", r.rate_fit, r.sup_growth);
                    let _ = writeln!(s, "- (T - t) |u|_inf = {:.6} against |U|_inf = {:.6}", r.type_one_product, r.profile_sup);
                    let _ = writeln!(s, "- lambda e^(s/2) -> {:.10} (spread {:.2e})", r.lambda_limit, r.lambda_spread);
                    if let Some(k) = r.u_star_slope {
                        let _ = writeln!(s, "- limit profile slope = {k:.4}");
                    }
                }
                (None, None) => {
                    let _ = writeln!(s, "- trapped; {}", ev.blowup_error.as_deref().unwrap_or("no blow-up report"));
                }
            }
        }
        if let Some(b) = read(self.name("shoot", "json"))? {
            let sh: ShootSidecar = parse_json("shoot", &b)?;
            let _ = writeln!(s, "\n## Stable-manifold bisection\n");
            let _ = writeln!(s, "- a2* = {:.10e}, bracket ({:e}, {:e}), tol {:e}", sh.a2_star, sh.bracket.0, sh.bracket.1, sh.bisect_tol);
            let _ = writeln!(s, "- {} shots, trapped for {:.4}", sh.shots.len(), sh.trapped_duration);
        }
        write_atomic(&self.out_dir.join(self.name("report", "md")), s.as_bytes())?;
        print!("{s}");
        Ok(s)
    }
}

fn extract(run: &FlowRun, ctx: &FlowContext) -> (Option<BlowupReport>, Option<String>) {
    if run.exit.is_some() {
        return (None, None);
    }
    match blowup_extract(run, ctx, &BlowupParams::default()) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    }
}
