//! Experiment orchestration and the run directory layout.
//!
//! ```text
//! <out>/manifest.txt    resolved config (valid input), version and constants as comments
//! <out>/summary.txt     key=value results, 17 significant digits
//! <out>/constants.txt   constants bundle
//! <out>/noise.bin       the master path, reusable via --noise-file
//! <out>/energy.csv      simulate, diagnose
//! <out>/h1.csv          diagnose
//! <out>/convergence.csv convergence
//! <out>/fields/*.bin    field snapshots with fields/index.csv
//! <out>/pullback/*.csv  per-horizon member norms and the semi-distance table
//! ```
//!
//! All computation finishes before anything is written; one thread writes.

use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use stochhr::attractor::{CloudSpec, PullbackSpec};
use stochhr::diagnostics::{gronwall_bound, AbsorbingRadii, ConstantsBundle};
use stochhr::io::{read_noise, read_state, write_noise, write_state};
use stochhr::{
    absorbing_radius, compute_constants, energy_series, h1_report, integrate, ou_from_wiener,
    pullback_cloud, sample_wiener, Grid, OuPath, Params, ProfileSet, Role, SolveSpec, StateTriple,
    WienerPath,
};

use crate::config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Simulate,
    Pullback,
    Diagnose,
    Convergence,
}

impl Experiment {
    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::Pullback => "pullback",
            Experiment::Diagnose => "diagnose",
            Experiment::Convergence => "convergence",
        }
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "simulate" => Ok(Experiment::Simulate),
            "pullback" => Ok(Experiment::Pullback),
            "diagnose" => Ok(Experiment::Diagnose),
            "convergence" => Ok(Experiment::Convergence),
            other => Err(format!("unknown experiment `{other}`")),
        }
    }
}

/// A file to be written, relative to the run directory.
enum Artifact {
    Text(PathBuf, String),
    State(PathBuf, StateTriple),
    Noise(PathBuf, WienerPath, OuPath),
}

struct Output {
    summary: String,
    artifacts: Vec<Artifact>,
}

impl Output {
    fn new(experiment: Experiment) -> Self {
        Self {
            summary: format!("experiment={}\n", experiment.as_str()),
            artifacts: Vec::new(),
        }
    }

    fn kv(&mut self, key: &str, v: f64) {
        let _ = writeln!(self.summary, "{key}={v:.16e}");
    }

    fn kv_int(&mut self, key: &str, v: impl std::fmt::Display) {
        let _ = writeln!(self.summary, "{key}={v}");
    }

    fn text(&mut self, name: &str, body: String) {
        self.artifacts.push(Artifact::Text(name.into(), body));
    }
}

/// What a finished run produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub summary: String,
}

struct Setup {
    grid: Arc<Grid>,
    params: Params,
    wiener: WienerPath,
    ou: OuPath,
    constants: ConstantsBundle,
}

fn setup(cfg: &RunConfig) -> Result<Setup> {
    let grid = stochhr::grid::build_grid(&cfg.grid_spec()).context("building the grid")?;
    let params = cfg.params();
    params.validate_for(&grid).context("checking parameters")?;
    let tg = cfg.time_grid().context("building the noise time grid")?;
    let (wiener, ou) = match &cfg.noise.file {
        Some(path) => {
            let f = fs::File::open(path)
                .with_context(|| format!("opening noise file {}", path.display()))?;
            let (w, o) = read_noise(&mut std::io::BufReader::new(f))
                .with_context(|| format!("reading noise file {}", path.display()))?;
            use stochhr::noise::PathChannels;
            if w.time_grid() != &tg {
                bail!(
                    "noise file {} covers [{}, {}] with dt {}, config expects [{}, {}] with dt {}",
                    path.display(),
                    w.time_grid().t_min(),
                    w.time_grid().t_max(),
                    w.time_grid().dt(),
                    tg.t_min(),
                    tg.t_max(),
                    tg.dt()
                );
            }
            if o.kappa() != params.kappa {
                bail!(
                    "noise file kappa {} differs from params.kappa {}",
                    o.kappa(),
                    params.kappa
                );
            }
            if w.seed() != cfg.noise.seed {
                bail!(
                    "noise file seed {} differs from noise.seed {}",
                    w.seed(),
                    cfg.noise.seed
                );
            }
            (w, o)
        }
        None => {
            let w = sample_wiener(cfg.noise.seed, tg);
            let o = ou_from_wiener(&w, params.kappa).context("building the OU process")?;
            (w, o)
        }
    };
    let profiles = ProfileSet::new(&params, &grid).context("evaluating noise profiles")?;
    let mut constants =
        compute_constants(&params, &profiles, &grid).context("computing constants")?;
    constants.radii = absorbing_radius(
        &ou,
        &constants,
        &params,
        &profiles,
        cfg.quadrature_horizon(),
    )
    .ok();
    Ok(Setup {
        grid,
        params,
        wiener,
        ou,
        constants,
    })
}

fn initial_state(cfg: &RunConfig, grid: &Arc<Grid>) -> Result<StateTriple> {
    let init = &cfg.initial;
    match init.kind.as_str() {
        "constant" => Ok(StateTriple::constant(
            grid.clone(),
            Role::Original,
            init.values,
        )),
        "ball" => {
            let mut cloud = CloudSpec::ball(1, init.radius, init.seed).sample(grid)?;
            Ok(cloud.remove(0))
        }
        "file" => {
            let path = init.file.as_ref().context("initial.file is required")?;
            let f = fs::File::open(path)
                .with_context(|| format!("opening initial state {}", path.display()))?;
            Ok(
                read_state(&mut std::io::BufReader::new(f), grid, Role::Original)
                    .with_context(|| format!("reading initial state {}", path.display()))?,
            )
        }
        other => bail!("unknown initial kind `{other}`"),
    }
}

fn manifest(cfg: &RunConfig, experiment: Experiment, constants: &ConstantsBundle) -> String {
    let mut resolved = cfg.resolved();
    resolved.experiment.kind = Some(experiment.as_str().into());
    let mut out = format!(
        "# stochhr {}\n# experiment = {}\n# seed = {}\n",
        env!("CARGO_PKG_VERSION"),
        experiment.as_str(),
        cfg.noise.seed
    );
    for line in constants.to_key_values().lines() {
        let _ = writeln!(out, "# {line}");
    }
    out.push('\n');
    out.push_str(&resolved.to_toml());
    out
}

fn solve_spec(cfg: &RunConfig, dt: f64) -> SolveSpec {
    SolveSpec::new(cfg.solve.t_start, cfg.solve.t_end, dt)
        .with_stride(cfg.solve.snapshot_stride)
        .with_stepper(cfg.stepper())
}

fn radii_summary(out: &mut Output, radii: Option<&AbsorbingRadii>) {
    match radii {
        Some(r) => {
            out.kv("R_H", r.r_h);
            out.kv("R0", r.big_r0);
            out.kv("r0", r.r0);
        }
        None => out.kv_int("R_H", "unavailable"),
    }
}

fn energy_csv(reports: &[stochhr::EnergyReport], gronwall: Option<&[f64]>) -> String {
    let mut s = String::from(
        "time,energy,grad_energy,u_l4_pow4,gamma_sq,lifted_sq,derivative,forcing,residual",
    );
    if gronwall.is_some() {
        s.push_str(",gronwall_bound");
    }
    s.push('\n');
    for (i, r) in reports.iter().enumerate() {
        let _ = write!(
            s,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.time,
            r.energy,
            r.grad_energy,
            r.u_l4_pow4,
            r.gamma_sq,
            r.lifted_sq,
            r.derivative,
            r.forcing,
            r.residual
        );
        if let Some(g) = gronwall {
            let _ = write!(s, ",{:.16e}", g[i]);
        }
        s.push('\n');
    }
    s
}

fn run_trajectory(cfg: &RunConfig, s: &Setup, out: &mut Output, diagnose: bool) -> Result<()> {
    let g0 = initial_state(cfg, &s.grid)?;
    let spec = solve_spec(cfg, cfg.solver_dt());
    let traj = integrate(&spec, &s.params, &s.ou, &g0).context("integrating the trajectory")?;
    out.kv_int("snapshots", traj.len());
    out.kv_int("steps", traj.substeps);
    let last = traj.original(traj.len() - 1)?;
    out.kv("final_time", *traj.times.last().expect("nonempty"));
    out.kv("final_norm", last.norm());
    for (i, name) in ["u", "v", "z"].iter().enumerate() {
        out.kv(
            &format!("final_{name}_mean"),
            last.component(i).values().iter().sum::<f64>() / s.grid.len() as f64,
        );
    }
    radii_summary(out, s.constants.radii.as_ref());

    let reports = if traj.len() >= 3 {
        Some(energy_series(&traj, &s.constants)?)
    } else {
        None
    };
    if let Some(reports) = &reports {
        let max_energy = reports.iter().map(|r| r.energy).fold(0.0, f64::max);
        out.kv("max_energy", max_energy);
        out.kv("final_energy", reports.last().expect("nonempty").energy);
        let interior: Vec<_> = reports.iter().filter(|r| r.interior).collect();
        let worst = interior
            .iter()
            .map(|r| r.residual)
            .fold(f64::NEG_INFINITY, f64::max);
        out.kv("max_residual", worst);
        let nonpositive = interior.iter().filter(|r| r.residual <= 0.0).count();
        out.kv_int(
            "residual_nonpositive",
            format!("{nonpositive}/{}", interior.len()),
        );
        let gronwall = diagnose.then(|| gronwall_bound(reports, s.constants.sigma));
        if let Some(g) = &gronwall {
            let violations = reports
                .iter()
                .zip(g)
                .filter(|(r, b)| r.energy > **b * (1.0 + 1e-8))
                .count();
            out.kv_int("gronwall_violations", violations);
        }
        out.text("energy.csv", energy_csv(reports, gronwall.as_deref()));
    }

    if diagnose {
        let h1 = h1_report(&traj);
        let mut csv = String::from("time,grad_sq,lap_u_sq,lap_v_sq,lap_z_sq\n");
        for r in &h1 {
            let _ = writeln!(
                csv,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.time, r.grad_sq, r.lap_sq[0], r.lap_sq[1], r.lap_sq[2]
            );
        }
        out.kv(
            "max_grad_sq",
            h1.iter().map(|r| r.grad_sq).fold(0.0, f64::max),
        );
        out.text("h1.csv", csv);
        out.artifacts
            .push(Artifact::State("fields/final.bin".into(), last.clone()));
        out.text(
            "fields/index.csv",
            format!("file,time\nfinal.bin,{:.16e}\n", traj.times.last().unwrap()),
        );
    } else {
        let stride = cfg.experiment.field_stride;
        let mut index = String::from("file,time\n");
        for i in 0..traj.len() {
            let keep = if stride == 0 {
                i + 1 == traj.len()
            } else {
                i % stride == 0 || i + 1 == traj.len()
            };
            if keep {
                let name = format!("snap_{i:05}.bin");
                let _ = writeln!(index, "{name},{:.16e}", traj.times[i]);
                out.artifacts.push(Artifact::State(
                    format!("fields/{name}").into(),
                    traj.original(i)?,
                ));
            }
        }
        out.text("fields/index.csv", index);
    }
    Ok(())
}

fn run_pullback(cfg: &RunConfig, s: &Setup, out: &mut Output) -> Result<()> {
    let exp = &cfg.experiment;
    let r_h = s.constants.radii.map(|r| r.r_h);
    let radius = match (exp.cloud_radius, r_h) {
        (Some(r), _) => r,
        (None, Some(r)) => exp.cloud_radius_factor * r,
        (None, None) => bail!(
            "absorbing radius unavailable (quadrature horizon {} too short or off the noise window); \
             set experiment.cloud_radius",
            cfg.quadrature_horizon()
        ),
    };
    let mut spec = PullbackSpec::new(
        exp.horizons.clone(),
        CloudSpec::ball(exp.cloud, radius, exp.cloud_seed),
        cfg.solver_dt(),
    );
    spec.stepper = cfg.stepper();
    spec.absorbing_radius = r_h;
    let report = pullback_cloud(&spec, &s.params, &s.grid, &s.ou).context("pullback run")?;
    radii_summary(out, s.constants.radii.as_ref());
    out.kv("cloud_radius_initial", radius);
    out.kv_int("cloud_members", exp.cloud);
    let mut table = String::from("horizon,radius,semi_distance,absorbed\n");
    for (i, h) in report.results.iter().enumerate() {
        let absorbed = match h.absorbed {
            Some(true) => "true",
            Some(false) => "false",
            None => "unknown",
        };
        let _ = writeln!(
            table,
            "{:.16e},{:.16e},{:.16e},{absorbed}",
            h.horizon, h.radius, h.semi_distance
        );
        out.kv(&format!("horizon_{i}"), h.horizon);
        out.kv(&format!("radius_{i}"), h.radius);
        out.kv(&format!("semi_distance_{i}"), h.semi_distance);
        let mut members = String::from("member,norm\n");
        for (k, n) in h.member_norms.iter().enumerate() {
            let _ = writeln!(members, "{k},{n:.16e}");
        }
        out.text(&format!("pullback/horizon_{i:02}.csv"), members);
        if exp.dump_states {
            for (k, st) in h.states.iter().enumerate() {
                out.artifacts.push(Artifact::State(
                    format!("fields/pullback_h{i:02}_m{k:03}.bin").into(),
                    st.clone(),
                ));
            }
        }
    }
    match report.absorption_horizon() {
        Some(t) => out.kv("absorption_horizon", t),
        None => out.kv_int("absorption_horizon", "none"),
    }
    out.text("pullback/semidistance.csv", table);
    Ok(())
}

fn run_convergence(cfg: &RunConfig, s: &Setup, out: &mut Output) -> Result<()> {
    let g0 = initial_state(cfg, &s.grid)?;
    let mut finals = Vec::new();
    for &dt in &cfg.experiment.convergence_dts {
        let spec = solve_spec(cfg, dt).with_stride(usize::MAX);
        let traj = integrate(&spec, &s.params, &s.ou, &g0)
            .with_context(|| format!("integrating with dt = {dt}"))?;
        finals.push(traj.original(traj.len() - 1)?);
    }
    let dts = &cfg.experiment.convergence_dts;
    let mut csv = String::from("dt,difference_to_next,observed_order\n");
    let diffs: Vec<f64> = finals
        .windows(2)
        .map(|w| w[0].distance(&w[1]))
        .collect::<stochhr::Result<_>>()?;
    for (i, &dt) in dts.iter().enumerate() {
        let diff = diffs.get(i).copied();
        let order = if i + 1 < diffs.len() {
            Some((diffs[i] / diffs[i + 1]).ln() / (dts[i] / dts[i + 1]).ln())
        } else {
            None
        };
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
        let _ = writeln!(csv, "{dt:.16e},{},{}", fmt(diff), fmt(order));
        if let Some(d) = diff {
            out.kv(&format!("difference_{i}"), d);
        }
        if let Some(o) = order {
            out.kv(&format!("order_{i}"), o);
        }
    }
    out.text("convergence.csv", csv);
    Ok(())
}

fn write_all(dir: &Path, manifest: String, constants: String, out: Output) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let write_text = |rel: &Path, body: &str| -> Result<()> {
        let path = dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))
    };
    write_text(Path::new("manifest.txt"), &manifest)?;
    write_text(Path::new("constants.txt"), &constants)?;
    for art in out.artifacts {
        match art {
            Artifact::Text(rel, body) => write_text(&rel, &body)?,
            Artifact::State(rel, state) => {
                let path = dir.join(&rel);
                fs::create_dir_all(path.parent().expect("inside run dir"))?;
                let mut w = BufWriter::new(fs::File::create(&path)?);
                write_state(&mut w, &state)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            Artifact::Noise(rel, w, o) => {
                let path = dir.join(&rel);
                let mut f = BufWriter::new(fs::File::create(&path)?);
                write_noise(&mut f, &w, &o)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
        }
    }
    write_text(Path::new("summary.txt"), &out.summary)?;
    Ok(())
}

/// Runs one experiment and writes the run directory.
pub fn run(cfg: &RunConfig, experiment: Experiment, dir: &Path) -> Result<RunOutcome> {
    if let Some(kind) = &cfg.experiment.kind {
        if kind != experiment.as_str() {
            bail!(
                "config declares experiment `{kind}` but `{}` was requested",
                experiment.as_str()
            );
        }
    }
    let s = setup(cfg)?;
    let mut out = Output::new(experiment);
    out.kv_int("seed", cfg.noise.seed);
    out.kv("c1", s.constants.c1);
    out.kv("sigma", s.constants.sigma);
    out.kv("F", s.constants.f_const);
    out.kv("C_bound", s.constants.c_bound);
    match experiment {
        Experiment::Simulate => run_trajectory(cfg, &s, &mut out, false),
        Experiment::Diagnose => run_trajectory(cfg, &s, &mut out, true),
        Experiment::Pullback => run_pullback(cfg, &s, &mut out),
        Experiment::Convergence => run_convergence(cfg, &s, &mut out),
    }
    .with_context(|| format!("{} stage", experiment.as_str()))?;
    if cfg.noise.file.is_none() {
        out.artifacts.push(Artifact::Noise(
            "noise.bin".into(),
            s.wiener.clone(),
            s.ou.clone(),
        ));
    }
    let summary = out.summary.clone();
    write_all(
        dir,
        manifest(cfg, experiment, &s.constants),
        s.constants.to_key_values(),
        out,
    )?;
    Ok(RunOutcome {
        dir: dir.to_path_buf(),
        summary,
    })
}
