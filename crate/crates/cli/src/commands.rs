//! One function per subcommand.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{ArgAction, ArgMatches, Args};
use serde::{Deserialize, Serialize};

use cyclone_sde::calibration::{bias_report, bin_equal_count, compute_residuals, fit_sigma, report_csv};
use cyclone_sde::density::{histogram, Kde1d};
use cyclone_sde::dynamics::{
    bifurcation_scan, find_fixed_points, monotone_drift_check, AlphaMode, Environment, Parameter,
    RootOptions,
};
use cyclone_sde::enkf::{train, EpochLog, TrainingSchedule};
use cyclone_sde::hazard::{gridded_pdi_climatology, lmi, return_periods, site_maxima, Site};
use cyclone_sde::simulate::{simulate, SimConfig};
use cyclone_sde::sindy::{build_system, least_squares, StateOptions, SystemOptions};
use cyclone_sde::subset::{cv_path, SpliceOptions};
use cyclone_sde::synthetic::{generate_with, SyntheticConfig, INTENSITY_QUANTUM_MPS};
use cyclone_sde::trajectory::{load_trajectories, save_trajectories};
use cyclone_sde::{
    builtin_paper_model, full_basis, load_model, load_tracks, save_model, save_tracks,
    IntensityModel, TrackSeries,
};

use crate::config::resolve;
use crate::provenance::RunDir;
use crate::{CliError, Globals};

pub fn dispatch(name: &str, m: &ArgMatches, section: &toml::Table, g: Globals) -> Result<(), CliError> {
    match name {
        "generate" => run(m, section, g, name, generate),
        "fit" => run(m, section, g, name, fit),
        "select" => run(m, section, g, name, select),
        "tune" => run(m, section, g, name, tune),
        "calibrate" => run(m, section, g, name, calibrate),
        "simulate" => run(m, section, g, name, simulate_cmd),
        "bifurcate" => run(m, section, g, name, bifurcate),
        "hazard" => run(m, section, g, name, hazard),
        "model" => run(m, section, g, name, model_cmd),
        other => Err(CliError::Usage(format!("unknown command {other}"))),
    }
}

/// Context handed to each command.
pub struct Ctx<'a> {
    pub globals: Globals,
    pub command: &'a str,
    pub config: toml::Table,
}

impl Ctx<'_> {
    fn finish(&self, out: RunDir, inputs: &[&Path]) -> Result<(), CliError> {
        let mut full = toml::Table::new();
        full.insert("seed".into(), toml::Value::Integer(self.globals.seed as i64));
        full.insert("workers".into(), toml::Value::Integer(self.globals.workers as i64));
        full.insert(self.command.into(), toml::Value::Table(self.config.clone()));
        out.finish(self.command, self.globals.seed, &full, inputs)
    }
}

fn run<T, F>(m: &ArgMatches, section: &toml::Table, g: Globals, name: &str, f: F) -> Result<(), CliError>
where
    T: clap::FromArgMatches + Serialize + serde::de::DeserializeOwned,
    F: FnOnce(T, &Ctx<'_>) -> Result<(), CliError>,
{
    let (args, table) = resolve::<T>(m, section)?;
    let ctx = Ctx {
        globals: g,
        command: name,
        config: table,
    };
    f(args, &ctx)
}

fn required<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, CliError> {
    p.as_deref()
        .ok_or_else(|| CliError::Usage(format!("--{flag} is required (flag or config file)")))
}

fn read_tracks(path: &Path) -> Result<Vec<TrackSeries>, CliError> {
    let t = load_tracks(path)?;
    if t.is_empty() {
        return Err(CliError::Data(format!("{}: no storms", path.display())));
    }
    Ok(t)
}

fn read_model(path: &Option<PathBuf>) -> Result<IntensityModel, CliError> {
    match path {
        Some(p) => Ok(load_model(p)?),
        None => Ok(builtin_paper_model()),
    }
}

fn horizon_steps(hours: u32) -> Result<usize, CliError> {
    if hours == 0 || !hours.is_multiple_of(6) {
        return Err(CliError::Usage(format!("horizon {hours} h is not a positive multiple of 6 h")));
    }
    Ok((hours / 6) as usize)
}

fn coefficient_table(model: &IntensityModel) -> String {
    let mut s = String::from("index,term,exponents,coefficient\n");
    for (i, (t, c)) in model.basis().terms().iter().zip(model.coefficients()).enumerate() {
        let e: Vec<String> = t.0.iter().map(|x| x.to_string()).collect();
        let _ = writeln!(s, "{i},{t},{},{c}", e.join(" "));
    }
    s
}

#[derive(Args, Serialize, Deserialize, Debug)]
pub struct GenerateArgs {
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub n_storms: usize,
    /// Points per storm before dissipation, 6 h apart.
    #[arg(long, default_value_t = 40)]
    pub duration_steps: usize,
    /// Round intensities to the 2.57 m/s quantum.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub quantize: bool,
}

fn generate(a: GenerateArgs, ctx: &Ctx<'_>) -> Result<(), CliError> {
    let mut cfg = SyntheticConfig::new(a.n_storms, a.duration_steps);
    cfg.quantize = a.quantize;
    let tracks = generate_with(ctx.globals.seed, &cfg)?;
    let mut out = RunDir::create(&a.out)?;
    save_tracks(&tracks, out.path("tracks.csv"))?;
    out.record("tracks.csv");
    println!("wrote {} storms to {}", tracks.len(), out.path("tracks.csv").display());
    ctx.finish(out, &[])
}

#[derive(Args, Serialize, Deserialize, Debug)]
pub struct FitArgs {
    /// Track file.
    #[arg(long)]
    pub tracks: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Longest integration window, hours.
    #[arg(long, default_value_t = 120)]
    pub max_horizon_hours: u32,
    /// Polynomial degree of the library.
    #[arg(long, default_value_t = 3)]
    pub degree: u32,
    /// Use every n-th start point.
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    /// Also write the assembled system.
    #[arg(long, default_value_t = false, action = ArgAction::Set)]
    pub dump_system: bool,
}

fn fit(a: FitArgs, ctx: &Ctx<'_>) -> Result<(), CliError> {
    let tracks_path = required(&a.tracks, "tracks")?;
    let tracks = read_tracks(tracks_path)?;
    let basis = full_basis(a.degree);
    let opts = SystemOptions {
        max_horizon_steps: horizon_steps(a.max_horizon_hours)?,
        stride: a.stride,
        state: StateOptions::default(),
    };
    let sys = build_system(&tracks, &basis, &opts)?;
    let ls = least_squares(&sys, None)?;
    let model = IntensityModel::new(basis, ls.coefficients.clone())?.with_sigma(0.0, 0.0);
    let mut out = RunDir::create(&a.out)?;
    let summary = format!(
        "storms {}\nrows {}\ncolumns {}\nrank {}\nrank_deficient {}\nrss {}\n",
        tracks.len(),
        sys.n_rows(),
        sys.n_cols(),
        ls.rank,
        ls.rank_deficient,
        ls.rss
    );
    out.write("fit_summary.txt", &summary)?;
    out.write("ols_coefficients.csv", &coefficient_table(&model))?;
    save_model(&model, out.path("ols_model.json"))?;
    out.record("ols_model.json");
    if a.dump_system {
        sys.save_csv(out.path("system.csv"))?;
        out.record("system.csv");
    }
    print!("{summary}");
    ctx.finish(out, &[tracks_path])
}

fn default_k_values() -> Vec<usize> {
    (1..=15).collect()
}

#[derive(Args, Serialize, Deserialize, Debug)]
pub struct SelectArgs {
    #[arg(long)]
    pub tracks: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 120)]
    pub max_horizon_hours: u32,
    #[arg(long, default_value_t = 3)]
    pub degree: u32,
    /// Support sizes to evaluate.
    #[arg(long, value_delimiter = ',', default_values_t = default_k_values())]
    pub k_values: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// Random restarts of the splicing search.
    #[arg(long, default_value_t = SpliceOptions::default().restarts)]
    pub restarts: usize,
    /// Support size to write as a model; without it only the path is written.
    #[arg(long)]
    pub k: Option<usize>,
}

fn select(a: SelectArgs, ctx: &Ctx<'_>) -> Result<(), CliError> {
    let tracks_path = required(&a.tracks, "tracks")?;
    let tracks = read_tracks(tracks_path)?;
    let basis = full_basis(a.degree);
    let sys = build_system(&tracks, &basis, &SystemOptions::new(horizon_steps(a.max_horizon_hours)?))?;
    let opts = SpliceOptions {
        restarts: a.restarts,
        ..Default::default()
    };
    let mut ks = a.k_values.clone();
    if let Some(k) = a.k {
        if !ks.contains(&k) {
            ks.push(k);
        }
    }
    ks.sort_unstable();
    ks.dedup();
    let path = cv_path(&sys, &ks, a.folds, ctx.globals.seed, &opts)?;
    let mut out = RunDir::create(&a.out)?;
    out.write("path.csv", &path.to_csv())?;
    let mut supports = String::new();
    for e in &path.entries {
        let names: Vec<String> = e.support.iter().map(|&j| basis.terms()[j].to_string()).collect();
        let _ = writeln!(supports, "{}: {}", e.k, names.join(" | "));
    }
    out.write("supports.txt", &supports)?;
    print!("{}", path.to_csv());
    match path.one_se_k() {
        Some(k) => println!("one-standard-error suggestion: k = {k}"),
        None => println!("one-standard-error suggestion: none"),
    }
    if let Some(k) = a.k {
        let e = path.entry(k).expect("k evaluated");
        let sub = basis.subset(&e.support)?;
        let coefs: Vec<f64> = e.support.iter().map(|&j| e.coefficients[j]).collect();
        let model = IntensityModel::new(sub, coefs)?.with_sigma(0.0, 0.0);
        save_model(&model, out.path("model.json"))?;
        out.record("model.json");
        out.write("coefficients.csv", &coefficient_table(&model))?;
        println!("wrote k = {k} model to {}", out.path("model.json").display());
    } else {
        println!("no --k given: choose a support size from the path and rerun with --k");
    }
    ctx.finish(out, &[tracks_path])
}

fn standard_horizons() -> Vec<u32> {
    TrainingSchedule::standard().horizons_hours
}

#[derive(Args, Serialize, Deserialize, Debug)]
pub struct TuneArgs {
    #[arg(long)]
    pub tracks: Option<PathBuf>,
    /// Initial model (its basis is the support being tuned).
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// One epoch per horizon, hours.
    #[arg(long, value_delimiter = ',', default_values_t = standard_horizons())]
    pub horizons_hours: Vec<u32>,
    #[arg(long, default_value_t = 16)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 100)]
    pub ensemble_size: usize,
    /// Observation noise, m/s.
    #[arg(long, default_value_t = INTENSITY_QUANTUM_MPS)]
    pub obs_noise_std: f64,
}

fn tune(a: TuneArgs, ctx: &Ctx<'_>) -> Result<(), CliError> {
    let tracks_path = required(&a.tracks, "tracks")?;
    let model_path = required(&a.model, "model")?;
    let tracks = read_tracks(tracks_path)?;
    let init = load_model(model_path)?;
    let schedule = TrainingSchedule {
        horizons_hours: a.horizons_hours.clone(),
        batch_size: a.batch_size,
        obs_noise_std: a.obs_noise_std,
        ensemble_size: a.ensemble_size,
        spread_std: None,
    };
    let outcome = train(&tracks, &init, &schedule, ctx.globals.seed)?;
    let mut out = RunDir::create(&a.out)?;
    let mut log = String::from(EpochLog::CSV_HEADER);
    log.push('\n');
    for e in &outcome.log {
        log.push_str(&e.csv_line());
        log.push('\n');
    }
    out.write("epochs.csv", &log)?;
    save_model(&outcome.model, out.path("model.json"))?;
    out.record("model.json");
    out.write("coefficients.csv", &coefficient_table(&outcome.model))?;
    print!("{log}");
    ctx.finish(out, &[tracks_path, model_path])
}

#[derive(Args, Serialize, Deserialize, Debug)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub tracks: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Forecast length of the residuals, hours.
    #[arg(long, default_value_t = 6)]
    pub horizon_hours: u32,
    #[arg(long, default_value_t = 6)]
    pub bins: usize,
    #[arg(long, default_value_t = cyclone_sde::calibration::BOOTSTRAP_RESAMPLES)]
    pub resamples: usize,
}

fn calibrate(a: CalibrateArgs, ctx: &Ctx<'_>) -> Result<(), CliError> {
    let tracks_path = required(&a.tracks, "tracks")?;
    let model_path = required(&a.model, "model")?;
    let tracks = read_tracks(tracks_path)?;
    let model = load_model(model_path)?;
    let res = compute_residuals(&model, &tracks, a.horizon_hours)?;
    let bins = bin_equal_count(&res, a.bins, a.resamples, ctx.globals.seed)?;
    let fit = fit_sigma(&bins)?;
    let calibrated = fit.apply(&model);
    let mut out = RunDir::create(&a.out)?;
    let report = report_csv(&bins, &fit);
    out.write("calibration.csv", &report)?;
    save_model(&calibrated, out.path("model.json"))?;
    out.record("model.json");
    print!("{report}");
    let flagged: Vec<String> = bias_report(&bins)
        .iter()
        .filter(|b| b.significant)
        .map(|b| format!("[{}, {}]", b.v_low, b.v_high))
        .collect();
    if !flagged.is_empty() {
        println!("mean residual beyond 2 SE in bins: {}", flagged.join(" "));
    }
    ctx.finish(out, &[tracks_path, model_path])
}

#[derive(Args, Serialize, Deserialize, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub tracks: Option<PathBuf>,
    /// Model file; the built-in model when absent.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub members: usize,
    /// Internal step, hours.
    #[arg(long, default_value_t = 0.75)]
    pub dt_internal_hours: f64,
    /// Drop the noise term.
    #[arg(long, default_value_t = false, action = ArgAction::Set)]
    pub deterministic: bool,
    /// Lower clamp on intensity, m/s.
    #[arg(long, default_value_t = 0.0)]
    pub clamp_floor: f64,
    /// Leave intensity unbounded below.
    #[arg(long, default_value_t = false, action = ArgAction::Set)]
    pub no_clamp: bool,
    /// Initial intensity, m/s; each storm's first observation when absent.
    #[arg(long)]
    pub v0: Option<f64>,
}

fn simulate_cmd(a: SimulateArgs, ctx: &Ctx<'_>) -> Result<(), CliError> {
    let tracks_path = required(&a.tracks, "tracks")?;
    let tracks = read_tracks(tracks_path)?;
    let model = read_model(&a.model)?;
    let cfg = SimConfig {
        dt_internal_hours: a.dt_internal_hours,
        stochastic: !a.deterministic,
        seed: ctx.globals.seed,
        n_members: a.members,
        clamp_floor: if a.no_clamp { None } else { Some(a.clamp_floor) },
    };
    let mut all = Vec::new();
    let mut failures = String::from("storm_id,member_id,reason\n");
    let mut n_fail = 0;
    for t in &tracks {
        let v0 = a.v0.unwrap_or(t.points[0].v_obs);
        let o = simulate(&model, t, v0, &cfg)?;
        for f in &o.failures {
            let _ = writeln!(failures, "{},{},{}", t.storm_id, f.member_id, f.reason);
            n_fail += 1;
        }
        all.extend(o.members);
    }
    let mut out = RunDir::create(&a.out)?;
    save_trajectories(&all, out.path("trajectories.csv"))?;
    out.record("trajectories.csv");
    if n_fail > 0 {
        out.write("failures.csv", &failures)?;
        log::warn!("{n_fail} members diverged; see failures.csv");
    }
    println!("wrote {} trajectories for {} storms", all.len(), tracks.len());
    let mut inputs: Vec<&Path> = vec![tracks_path];
    if let Some(p) = &a.model {
        inputs.push(p);
    }
    ctx.finish(out, &inputs)
}

#[derive(Args, Serialize, Deserialize, Debug)]
pub struct BifurcateArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Scanned input: z, vp, chi or shear.
    #[arg(long, default_value = "shear")]
    pub parameter: String,
    #[arg(long, default_value_t = 0.0)]
    pub from: f64,
    #[arg(long, default_value_t = 30.0)]
    pub to: f64,
    #[arg(long, default_value_t = 301)]
    pub steps: usize,
    #[arg(long, default_value_t = Environment::FAVORABLE.z)]
    pub z: f64,
    #[arg(long, default_value_t = Environment::FAVORABLE.vp)]
    pub vp: f64,
    #[arg(long, default_value_t = Environment::FAVORABLE.chi)]
    pub chi: f64,
    #[arg(long, default_value_t = Environment::FAVORABLE.shear)]
    pub shear: f64,
    /// Upper end of the intensity search, m/s.
    #[arg(long, default_value_t = cyclone_sde::dynamics::DEFAULT_V_MAX)]
    pub v_max: f64,
    #[arg(long, default_value_t = cyclone_sde::dynamics::DEFAULT_GRID)]
    pub grid: usize,
    /// Freeze the damping factor at this value.
    #[arg(long)]
    pub fixed_alpha: Option<f64>,
}

fn bifurcate(a: BifurcateArgs, ctx: &Ctx<'_>) -> Result<(), CliError> {
    let model = read_model(&a.model)?;
    let p: Parameter = a.parameter.parse()?;
    let env = Environment {
        z: a.z,
        vp: a.vp,
        chi: a.chi,
        shear: a.shear,
    };
    let opts = RootOptions {
        v_max: a.v_max,
        grid: a.grid,
        alpha: match a.fixed_alpha {
            Some(x) => AlphaMode::Fixed(x),
            None => AlphaMode::Coupled,
        },
    };
    let base = find_fixed_points(&model, &env, &opts)?;
    let scan = bifurcation_scan(&model, &env, p, (a.from, a.to), a.steps, &opts)?;
    let mut fp = String::from("root_v,stability,slope\n");
    for r in &base.roots {
        let _ = writeln!(fp, "{},{},{}", r.v, r.stability, r.slope);
    }
    let mut folds = format!("{},kind\n", p.name());
    for f in &scan.folds {
        let kind = if f.annihilation { "annihilation" } else { "creation" };
        let _ = writeln!(folds, "{},{kind}", f.value);
    }
    let mut out = RunDir::create(&a.out)?;
    out.write("fixed_points.csv", &fp)?;
    out.write("scan.csv", &scan.to_csv())?;
    out.write("folds.csv", &folds)?;
    print!("fixed points at base environment\n{fp}");
    println!(
        "drift monotone in intensity: {}",
        monotone_drift_check(&model, &env, &opts)
    );
    print!("saddle-node folds\n{folds}");
    let inputs: Vec<&Path> = a.model.iter().map(|p| p.as_path()).collect();
    ctx.finish(out, &inputs)
}

#[derive(Args, Serialize, Deserialize, Debug)]
pub struct HazardArgs {
    /// Trajectory file written by `simulate`.
    #[arg(long)]
    pub trajectories: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Record length the trajectories represent, years.
    #[arg(long)]
    pub years: Option<f64>,
    /// Grid cell size for the power dissipation map, degrees.
    #[arg(long, default_value_t = 6.0)]
    pub cell_deg: f64,
    /// Site latitude; with --lon enables site statistics.
    #[arg(long, allow_negative_numbers = true)]
    pub lat: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub lon: Option<f64>,
    #[arg(long, default_value_t = cyclone_sde::hazard::DEFAULT_RADIUS_KM)]
    pub radius_km: f64,
    /// Histogram bin width, m/s.
    #[arg(long, default_value_t = INTENSITY_QUANTUM_MPS)]
    pub bin_width: f64,
}

const NO_DATA: &str = "# no data\n";

fn hazard(a: HazardArgs, ctx: &Ctx<'_>) -> Result<(), CliError> {
    let traj_path = required(&a.trajectories, "trajectories")?;
    let years = a
        .years
        .ok_or_else(|| CliError::Usage("--years is required (flag or config file)".into()))?;
    let set = load_trajectories(traj_path)?;
    let mut out = RunDir::create(&a.out)?;

    let grid = gridded_pdi_climatology(&set, a.cell_deg, years)?;
    let mut g = String::from("lat_cell,lon_cell,pdi_per_year\n");
    for ((i, j), v) in &grid {
        let _ = writeln!(g, "{},{},{v}", *i as f64 * a.cell_deg, *j as f64 * a.cell_deg);
    }
    if grid.is_empty() {
        g.push_str(NO_DATA);
    }
    out.write("pdi_grid.csv", &g)?;

    let lmis: Vec<f64> = set.iter().filter(|s| !s.is_empty()).map(lmi).collect();
    let mut l = String::from("bin_low,probability\n");
    if lmis.is_empty() {
        l.push_str(NO_DATA);
    } else {
        let (lo, p) = histogram(&lmis, a.bin_width, 0.0)?;
        for (i, x) in p.iter().enumerate() {
            let _ = writeln!(l, "{},{x}", lo + i as f64 * a.bin_width);
        }
    }
    out.write("lmi_histogram.csv", &l)?;

    if let (Some(lat), Some(lon)) = (a.lat, a.lon) {
        let site = Site {
            lat,
            lon,
            radius_km: a.radius_km,
        };
        let maxima = site_maxima(&set, &site);
        let mut rp = String::from("intensity_mps,return_period_years\n");
        let mut lf = String::from("v_mps,density\n");
        let mut summary = format!("site {lat},{lon} radius_km {}\n", a.radius_km);
        if maxima.is_empty() {
            rp.push_str(NO_DATA);
            lf.push_str(NO_DATA);
            summary.push_str("no data: no trajectory enters the site radius\n");
        } else {
            for (v, y) in return_periods(&maxima, years)? {
                let _ = writeln!(rp, "{v},{y}");
            }
            let d = cyclone_sde::hazard::landfall_distribution(&set, &site);
            let _ = writeln!(summary, "storms {}\nsamples {}", maxima.len(), d.samples.len());
            match Kde1d::new(&d.samples, None) {
                Ok(k) => {
                    let lo = d.samples.iter().copied().fold(f64::INFINITY, f64::min) - 3.0 * k.bandwidth;
                    let hi = d.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 3.0 * k.bandwidth;
                    for i in 0..=200 {
                        let v = lo + (hi - lo) * i as f64 / 200.0;
                        let _ = writeln!(lf, "{v},{}", k.density(v));
                    }
                }
                Err(_) => lf.push_str("# no density: fewer than two distinct samples\n"),
            }
        }
        print!("{summary}");
        out.write("site_summary.txt", &summary)?;
        out.write("return_periods.csv", &rp)?;
        out.write("landfall_density.csv", &lf)?;
    }
    println!("{} trajectories, {} occupied cells", set.len(), grid.len());
    ctx.finish(out, &[traj_path])
}

#[derive(Args, Serialize, Deserialize, Debug)]
pub struct ModelArgs {
    /// Model file; the built-in model when absent.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Write the model as JSON to this path.
    #[arg(long)]
    pub export: Option<PathBuf>,
}

fn model_cmd(a: ModelArgs, _ctx: &Ctx<'_>) -> Result<(), CliError> {
    let model = read_model(&a.model)?;
    print!("{}", coefficient_table(&model));
    println!(
        "sigma(v') = {} v' + {}",
        model.sigma_slope, model.sigma_intercept
    );
    if let Some(p) = &a.export {
        save_model(&model, p)?;
        println!("wrote {}", p.display());
    }
    Ok(())
}
