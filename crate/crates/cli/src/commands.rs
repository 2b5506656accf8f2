//! Command implementations. Each command writes its files into the output
//! directory and returns the summary lines; timing goes to stdout only so
//! that output files are reproducible byte for byte.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::{s, Array2};
use oirs_core::analysis::{fading_samples, offset_sweep, Receiver};
use oirs_core::export::{
    read_phase_mask, write_map_csv, write_partition_csv, write_phase_mask, write_samples_csv, write_sweep_csv,
};
use oirs_core::opa::{aperture_energy, array_grid, focal_spacing, fraunhofer, gaussian_incident, uniform_incident};
use oirs_core::split::region_sizes;
use oirs_core::{
    aim_array, aim_groups, build_reflectance, compose_target_field, opa_efficiency, optimize_grouping,
    power_matrices, ratio_deviation, receiver_power_density, region_powers, retrieve_phase, EfficiencyComparison,
    FieldGrid, GaussianBeam, InitialPhase, MirrorArray, OpticalSetup, PhasedArray, PowerDensityMap, RetrievalConfig,
    RingLayout, SplitConfig, SplitError, SplitSpec, SplitTarget, Vec3, Window, ZeroOrder,
};
use thiserror::Error;

use crate::config::{ArrayKind, Illumination, InitialPhaseMode, Scenario, ZeroOrderMode};

#[derive(Error, Debug)]
pub enum RunError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Compute(String),
    #[error("{0}")]
    Infeasible(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Compute(_) => 3,
            RunError::Infeasible(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            RunError::Config(_) => "config",
            RunError::Compute(_) => "compute",
            RunError::Infeasible(_) => "infeasible_ratio",
        }
    }
}

fn compute<E: std::fmt::Display>(e: E) -> RunError {
    RunError::Compute(e.to_string())
}

fn config(msg: impl Into<String>) -> RunError {
    RunError::Config(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Aim,
    Powermap,
    Efficiency,
    SplitMa,
    SplitOpa,
    RetrievePhase,
    PointingSweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Aim => "aim",
            Command::Powermap => "powermap",
            Command::Efficiency => "efficiency",
            Command::SplitMa => "split-ma",
            Command::SplitOpa => "split-opa",
            Command::RetrievePhase => "retrieve-phase",
            Command::PointingSweep => "pointing-sweep",
        }
    }
}

/// Everything a command needs besides the scenario itself.
pub struct Context {
    pub command: Command,
    pub scenario: Scenario,
    pub config_dir: PathBuf,
    pub config_sha256: String,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Context {
    fn header(&self) -> String {
        format!("# oirs {} config_sha256={} seed={}\n", self.command.name(), self.config_sha256, self.seed)
    }

    /// Writes `name` in the output directory, prefixed with the run header.
    fn write<F: FnOnce(&mut Vec<u8>) -> io::Result<()>>(&self, name: &str, body: F) -> Result<(), RunError> {
        let mut buf = self.header().into_bytes();
        body(&mut buf).map_err(compute)?;
        let path = self.out_dir.join(name);
        std::fs::write(&path, buf).map_err(|e| compute(format!("cannot write {}: {e}", path.display())))
    }

    fn write_summary(&self, lines: &[String]) -> Result<(), RunError> {
        self.write("summary.txt", |w| lines.iter().try_for_each(|l| writeln!(w, "{l}")))
    }

    fn kind(&self) -> ArrayKind {
        self.scenario.array.kind
    }

    fn require(&self, kind: ArrayKind) -> Result<(), RunError> {
        if self.kind() != kind {
            let want = if kind == ArrayKind::Ma { "ma" } else { "opa" };
            return Err(config(format!("command {} needs array.kind = \"{want}\"", self.command.name())));
        }
        Ok(())
    }

    fn beam(&self) -> Result<GaussianBeam, RunError> {
        let b = &self.scenario.beam;
        let center = b.center.map_or(Vec3::ZERO, |c| Vec3::new(c[0].0, c[1].0, 0.0));
        let dir = b.direction.map_or(Vec3::new(0.0, 0.0, -1.0), Vec3::from);
        GaussianBeam::new(b.amplitude, b.waist.0, b.kappa, center, dir).map_err(|e| config(e.to_string()))
    }

    fn mirror_array(&self) -> Result<MirrorArray, RunError> {
        let a = &self.scenario.array;
        let side = a.side.expect("validated").0;
        MirrorArray::grid(a.rows, a.cols, side, a.gap.map_or(0.0, |g| g.0)).map_err(|e| config(e.to_string()))
    }

    fn targets_3d(&self) -> Result<Vec<Vec3>, RunError> {
        if self.scenario.targets.is_empty() {
            return Err(config(format!("command {} needs at least one [[targets]] entry", self.command.name())));
        }
        Ok(self.scenario.targets.iter().map(|t| Vec3::new(t.center[0].0, t.center[1].0, t.center[2].0)).collect())
    }

    fn split_spec(&self, need_radius: bool) -> Result<SplitSpec, RunError> {
        if self.scenario.targets.is_empty() {
            return Err(config(format!("command {} needs at least one [[targets]] entry", self.command.name())));
        }
        let targets = self
            .scenario
            .targets
            .iter()
            .enumerate()
            .map(|(k, t)| {
                let radius = match (t.radius, need_radius) {
                    (Some(r), _) => r.0,
                    (None, false) => 0.0,
                    (None, true) => return Err(config(format!("targets[{k}].radius is required"))),
                };
                let z = t.center.get(2).map_or(0.0, |z| z.0);
                Ok(SplitTarget { center: Vec3::new(t.center[0].0, t.center[1].0, z), weight: t.weight, radius })
            })
            .collect::<Result<Vec<_>, _>>()?;
        SplitSpec::new(targets).map_err(|e| config(e.to_string()))
    }

    fn opa(&self) -> Result<Opa, RunError> {
        let a = &self.scenario.array;
        let s = self.scenario.setup.as_ref().expect("validated");
        let setup = OpticalSetup::new(s.wavelength.0, s.focal_length.0).map_err(|e| config(e.to_string()))?;
        let pitch = a.pitch.expect("validated").0;
        let array = match (a.active, a.fill_factor) {
            (Some(d), _) => PhasedArray::new(a.rows, a.cols, pitch, d.0),
            (None, Some(f)) => PhasedArray::with_fill_factor(a.rows, a.cols, pitch, f),
            (None, None) => PhasedArray::new(a.rows, a.cols, pitch, pitch),
        }
        .map_err(|e| config(e.to_string()))?
        .with_gap_phase(a.gap_phase);
        let grid = array_grid(&array, a.samples_per_pitch.unwrap_or(8), a.padding.unwrap_or(2))
            .map_err(|e| config(e.to_string()))?;
        let incident = match a.illumination {
            Illumination::Uniform => uniform_incident(&grid),
            Illumination::Gaussian => gaussian_incident(&grid, &self.beam()?),
        };
        Ok(Opa { array, setup, incident })
    }

    fn phase_mask(&self, opa: &Opa) -> Result<PhasedArray, RunError> {
        let Some(rel) = &self.scenario.array.phase_file else {
            return Ok(opa.array.clone());
        };
        let path = self.config_dir.join(rel);
        let file = std::fs::File::open(&path).map_err(|e| config(format!("cannot open {}: {e}", path.display())))?;
        let mask = read_phase_mask(io::BufReader::new(file)).map_err(|e| config(e.to_string()))?;
        if mask.rows() != opa.array.rows() || mask.cols() != opa.array.cols() {
            return Err(config("phase file shape does not match the array"));
        }
        opa.array.clone().with_phase(mask.phase().clone()).map_err(|e| config(e.to_string()))
    }

    fn ma_map(&self, array: &MirrorArray, beam: &GaussianBeam, target: Vec3) -> Result<PowerDensityMap, RunError> {
        let aim = aim_array(array, beam, target).map_err(compute)?;
        let g = &self.scenario.grid;
        let half = g.half_width.map_or(array.side(), |h| h.0);
        receiver_power_density(array, beam, &aim, Window::square(half), g.resolution, g.spot_side.map(|s| s.0))
            .map_err(compute)
    }

    /// Focal-plane intensity of the configured mask, cropped to the window.
    fn opa_map(&self, opa: &Opa) -> Result<PowerDensityMap, RunError> {
        let mask = self.phase_mask(opa)?;
        let far = fraunhofer(&build_reflectance(&mask, &opa.incident).map_err(compute)?, &opa.setup);
        let default_half = opa.setup.wavelength * opa.setup.focal_length / opa.array.pitch() / 2.0;
        crop(&far, self.scenario.grid.half_width.map_or(default_half, |h| h.0))
    }

    fn map(&self) -> Result<PowerDensityMap, RunError> {
        match self.kind() {
            ArrayKind::Ma => {
                let targets = self.targets_3d()?;
                self.ma_map(&self.mirror_array()?, &self.beam()?, targets[0])
            }
            ArrayKind::Opa => self.opa_map(&self.opa()?),
        }
    }
}

struct Opa {
    array: PhasedArray,
    setup: OpticalSetup,
    incident: FieldGrid,
}

impl Opa {
    fn focal_grid(&self) -> FieldGrid {
        let (du, dv) = focal_spacing(&self.incident, &self.setup);
        FieldGrid::zeros(self.incident.nx(), self.incident.ny(), du, dv).expect("valid geometry")
    }
}

/// Intensity of the samples with `|x|, |y| ≤ half`.
fn crop(field: &FieldGrid, half: f64) -> Result<PowerDensityMap, RunError> {
    let cols: Vec<usize> = (0..field.nx()).filter(|&j| field.x(j).abs() <= half).collect();
    let rows: Vec<usize> = (0..field.ny()).filter(|&i| field.y(i).abs() <= half).collect();
    let (Some(&c0), Some(&c1), Some(&r0), Some(&r1)) = (cols.first(), cols.last(), rows.first(), rows.last()) else {
        return Err(config("grid.half_width is smaller than one focal-plane sample"));
    };
    let values: Array2<f64> = field.data().slice(s![r0..=r1, c0..=c1]).mapv(|c| c.norm_sqr());
    PowerDensityMap::from_parts(values, field.x(c0), field.y(r0), field.dx(), field.dy()).map_err(compute)
}

fn timed<T>(label: &str, f: impl FnOnce() -> T) -> T {
    let t0 = Instant::now();
    let out = f();
    println!("wall_time_{label}_s={:.6}", t0.elapsed().as_secs_f64());
    out
}

fn e(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn run(ctx: &Context) -> Result<(), RunError> {
    std::fs::create_dir_all(&ctx.out_dir)
        .map_err(|err| compute(format!("cannot create {}: {err}", ctx.out_dir.display())))?;
    match ctx.command {
        Command::Aim => aim(ctx),
        Command::Powermap => powermap(ctx),
        Command::Efficiency => efficiency(ctx),
        Command::SplitMa => split_ma(ctx),
        Command::SplitOpa => split_opa(ctx, true),
        Command::RetrievePhase => split_opa(ctx, false),
        Command::PointingSweep => pointing_sweep(ctx),
    }
}

fn aim(ctx: &Context) -> Result<(), RunError> {
    ctx.require(ArrayKind::Ma)?;
    let (array, beam, target) = (ctx.mirror_array()?, ctx.beam()?, ctx.targets_3d()?[0]);
    let aim = timed("control", || aim_array(&array, &beam, target)).map_err(compute)?;
    ctx.write("aim.csv", |w| {
        writeln!(w, "row,col,theta_rad,r00,r01,r02,r10,r11,r12,r20,r21,r22,nx,ny,nz")?;
        for (el, a) in array.elements().iter().zip(aim.entries()) {
            let a = a.expect("every element is aimed");
            let r = a.rotation.entries();
            let n = a.normal.get();
            let mut line = format!("{},{},{}", el.row, el.col, e(a.theta));
            for v in r.iter().flatten().chain([n.x, n.y, n.z].iter()) {
                let _ = write!(line, ",{}", e(*v));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    })?;
    let max_theta = aim.entries().iter().flatten().map(|a| a.theta).fold(0.0, f64::max);
    ctx.write_summary(&[
        format!("elements={}", aim.len()),
        format!("target_m={} {} {}", e(target.x), e(target.y), e(target.z)),
        format!("max_theta_rad={}", e(max_theta)),
    ])
}

fn powermap(ctx: &Context) -> Result<(), RunError> {
    let map = timed("control", || ctx.map())?;
    ctx.write("map.csv", |w| write_map_csv(&map, w))?;
    let (px, py) = map.argmax();
    ctx.write_summary(&[
        format!("cells={}x{}", map.nx(), map.ny()),
        format!("map_power_w={}", e(map.total_power())),
        format!("peak_at_m={} {}", e(px), e(py)),
    ])
}

fn efficiency(ctx: &Context) -> Result<(), RunError> {
    match ctx.kind() {
        ArrayKind::Ma => {
            let (array, beam, target) = (ctx.mirror_array()?, ctx.beam()?, ctx.targets_3d()?[0]);
            let cmp = timed("control", || -> Result<_, RunError> {
                let aim = aim_array(&array, &beam, target).map_err(compute)?;
                let layout = RingLayout::square_annuli(&array, &beam, array.pitch()).map_err(compute)?;
                EfficiencyComparison::compute(&array, &beam, &aim, &layout).map_err(compute)
            })?;
            println!("{cmp}");
            ctx.write_summary(&[
                format!("eta_ring={}", e(cmp.ring)),
                format!("eta_numeric={}", e(cmp.numeric)),
                format!("relative_difference={}", e(cmp.relative_difference())),
            ])
        }
        ArrayKind::Opa => {
            let opa = ctx.opa()?;
            let eta = timed("control", || opa_efficiency(&opa.array, &opa.incident, &opa.setup)).map_err(compute)?;
            println!("eta_opa={eta:.6}");
            ctx.write_summary(&[format!("fill_factor={}", e(opa.array.fill_factor())), format!("eta_opa={}", e(eta))])
        }
    }
}

fn split_summary(
    lines: &mut Vec<String>,
    powers: &[f64],
    weights: &[f64],
    deviation: f64,
    tol: f64,
) {
    let total: f64 = powers.iter().sum();
    for (k, p) in powers.iter().enumerate() {
        let share = if total > 0.0 { p / total } else { 0.0 };
        lines.push(format!("group_{}_power_w={} share={}", k + 1, e(*p), e(share)));
    }
    let wsum: f64 = weights.iter().sum();
    let wanted: Vec<String> = weights.iter().map(|w| e(w / wsum)).collect();
    lines.push(format!("target_shares={}", wanted.join(" ")));
    lines.push(format!("total_power_w={}", e(total)));
    lines.push(format!("ratio_deviation={}", e(deviation)));
    lines.push(format!("ratio_tol={}", e(tol)));
    lines.push(format!("feasible={}", deviation <= tol));
}

fn split_ma(ctx: &Context) -> Result<(), RunError> {
    ctx.require(ArrayKind::Ma)?;
    let (array, beam) = (ctx.mirror_array()?, ctx.beam()?);
    let spec = ctx.split_spec(false)?;
    let weights = spec.weights();
    let solver = &ctx.scenario.solver;
    let cfg = SplitConfig { ratio_tol: solver.ratio_tol, restarts: solver.restarts, seed: ctx.seed };
    let (partition, infeasible) = timed("control", || -> Result<_, RunError> {
        let matrices = power_matrices(&array, &beam, &spec).map_err(compute)?;
        match optimize_grouping(&matrices, &weights, &cfg) {
            Ok(p) => Ok((p, false)),
            Err(SplitError::InfeasibleRatio { best, .. }) => Ok((*best, true)),
            Err(err) => Err(compute(err)),
        }
    })?;
    ctx.write("partition.csv", |w| write_partition_csv(&partition, w))?;

    let mut lines = vec![format!("targets={}", spec.len()), format!("elements={}", partition.assignment().len())];
    let idle = partition.group_size(0);
    lines.push(format!("idle_elements={idle}"));
    let centers = spec.centers();
    let aim = aim_groups(&array, &beam, &centers, partition.assignment()).map_err(compute)?;
    let g = &ctx.scenario.grid;
    let half = g.half_width.map_or(array.side(), |h| h.0);
    for k in 0..spec.len() {
        let sub = aim.restricted_to(k);
        let name = format!("map_target{}.csv", k + 1);
        if sub.active_count() == 0 {
            lines.push(format!("{name}=skipped_empty_group"));
            continue;
        }
        let map = receiver_power_density(&array, &beam, &sub, Window::square(half), g.resolution, g.spot_side.map(|s| s.0))
            .map_err(compute)?;
        ctx.write(&name, |w| write_map_csv(&map, w))?;
    }
    split_summary(&mut lines, partition.group_power(), &weights, partition.deviation(&weights), cfg.ratio_tol);
    ctx.write_summary(&lines)?;
    if infeasible {
        return Err(RunError::Infeasible(format!(
            "best ratio deviation {:.6} exceeds tolerance {}",
            partition.deviation(&weights),
            cfg.ratio_tol
        )));
    }
    Ok(())
}

fn split_opa(ctx: &Context, report_regions: bool) -> Result<(), RunError> {
    ctx.require(ArrayKind::Opa)?;
    let opa = ctx.opa()?;
    let spec = ctx.split_spec(true)?;
    let solver = &ctx.scenario.solver;
    let zero_order = match solver.zero_order {
        ZeroOrderMode::Ignore => ZeroOrder::Ignore,
        ZeroOrderMode::Superimpose => ZeroOrder::Superimpose,
        ZeroOrderMode::Block => ZeroOrder::Block { radius: solver.block_radius.expect("validated").0 },
    };
    let cfg = RetrievalConfig {
        max_iters: solver.gs_iterations,
        tol: solver.gs_tol,
        seed: ctx.seed,
        zero_order,
        initial: match solver.initial_phase {
            InitialPhaseMode::Random => InitialPhase::Random,
            InitialPhaseMode::Flat => InitialPhase::Flat,
        },
        quantization: solver.quantization,
        region_feedback: solver.region_feedback,
    };
    let target = {
        let shape = compose_target_field(&spec, &opa.focal_grid()).map_err(|err| config(err.to_string()))?;
        let flat = opa.array.clone().with_phase(Array2::from_elem((opa.array.rows(), opa.array.cols()), opa.array.gap_phase())).map_err(compute)?;
        let budget = aperture_energy(&opa.array, &opa.incident).map_err(compute)?
            * opa_efficiency(&flat, &opa.incident, &opa.setup).map_err(compute)?;
        shape.with_energy(solver.target_energy_fraction * budget)
    };
    let result =
        timed("control", || retrieve_phase(&target, &opa.array, &opa.incident, &opa.setup, &cfg)).map_err(compute)?;
    ctx.write("phase.csv", |w| write_phase_mask(&result.array, w))?;

    let r = &result.report;
    let mut lines = vec![
        format!("iterations={}", r.iterations),
        format!("converged={}", r.converged),
        format!("correlation={}", e(r.correlation)),
    ];
    if !report_regions {
        ctx.write("history.csv", |w| {
            writeln!(w, "iteration,correlation")?;
            r.history.iter().enumerate().try_for_each(|(k, c)| writeln!(w, "{},{}", k + 1, e(*c)))
        })?;
        return ctx.write_summary(&lines);
    }

    let default_half = opa.setup.wavelength * opa.setup.focal_length / opa.array.pitch() / 2.0;
    let map = crop(&result.far_field, ctx.scenario.grid.half_width.map_or(default_half, |h| h.0))?;
    ctx.write("map.csv", |w| write_map_csv(&map, w))?;
    let powers = region_powers(&result.far_field, &spec);
    let sizes = region_sizes(&result.far_field, &spec);
    let weights = spec.weights();
    let deviation = ratio_deviation(&powers, &weights);
    let total = result.far_field.energy();
    lines.push(format!("region_cells={}", sizes.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ")));
    lines.push(format!("in_region_fraction={}", e(powers.iter().sum::<f64>() / total)));
    if let ZeroOrder::Block { radius } = zero_order {
        lines.push(format!("zero_order_block_radius_m={}", e(radius)));
    }
    split_summary(&mut lines, &powers, &weights, deviation, solver.ratio_tol);
    ctx.write_summary(&lines)?;
    if deviation > solver.ratio_tol {
        return Err(RunError::Infeasible(format!(
            "achieved ratio deviation {deviation:.6} exceeds tolerance {}",
            solver.ratio_tol
        )));
    }
    Ok(())
}

fn pointing_sweep(ctx: &Context) -> Result<(), RunError> {
    let sweep = ctx.scenario.sweep.as_ref().ok_or_else(|| config("command pointing-sweep needs a [sweep] section"))?;
    let rx_cfg =
        ctx.scenario.receiver.as_ref().ok_or_else(|| config("command pointing-sweep needs a [receiver] section"))?;
    let center = rx_cfg.center.map_or((0.0, 0.0), |c| (c[0].0, c[1].0));
    let rx = Receiver::new(center, rx_cfg.radius.0).map_err(|err| config(err.to_string()))?;
    let mut offsets: Vec<(f64, f64)> = sweep.offsets.iter().map(|o| (o[0].0, o[1].0)).collect();
    if let Some(m) = sweep.max_offset {
        let n = sweep.steps;
        for k in 0..n {
            let t = if n == 1 { 0.0 } else { -1.0 + 2.0 * k as f64 / (n - 1) as f64 };
            offsets.push((t * m.0, 0.0));
        }
    }
    if offsets.is_empty() && sweep.sigma.is_none() {
        return Err(config("sweep needs offsets, max_offset or sigma"));
    }
    let map = ctx.map()?;
    let points = timed("control", || offset_sweep(&map, &rx, &offsets));
    ctx.write("sweep.csv", |w| write_sweep_csv(&points, w))?;
    let mut lines = vec![
        format!("receiver_center_m={} {}", e(center.0), e(center.1)),
        format!("receiver_radius_m={}", e(rx.radius)),
        format!("offsets={}", points.len()),
        format!("out_of_window={}", points.iter().filter(|p| p.power.is_err()).count()),
    ];
    if let Some(sigma) = sweep.sigma {
        let samples = fading_samples(&map, &rx, sigma.0, sweep.samples, ctx.seed).map_err(compute)?;
        ctx.write("samples.csv", |w| write_samples_csv(&samples, w))?;
        let s = samples.summary();
        lines.push(format!("sigma_m={}", e(sigma.0)));
        lines.push(format!("samples={}", s.count));
        lines.push(format!("mean_power_w={}", e(s.mean)));
        lines.push(format!("variance_w2={}", e(s.variance)));
        lines.push(format!("p05_power_w={}", e(s.p05)));
    }
    ctx.write_summary(&lines)
}

/// Directory containing the config file, for resolving relative paths.
pub fn config_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}
