use std::path::{Path, PathBuf};
use std::time::Instant;

use qrev::arrow::{fluorescence_ensemble_arrow, fluorescence_log_arrow, BoundaryPair, OperatorChain};
use qrev::channels::{completeness_residual, reversed_completeness_residual, ChannelSpec, QuadratureConfig, Readout};
use qrev::qubit::{Operator2, PureState};
use qrev::trajectory::{mirror_deviation, simulate_forward, unravel_backward, ReadoutRecord, SimConfig, TrajectoryRecord};
use qrev::weak::{time_reversed_weak_value, weak_protocol_probabilities, weak_value, MeterModel, PointerBasis};

use crate::config::Plan;
use crate::output::{num, write_file, Csv, Summary};
use crate::AppError;

/// Where results go and what to echo into them.
pub struct Context<'a> {
    pub experiment: &'a str,
    pub out_dir: &'a Path,
    pub config_toml: &'a str,
    pub config_table: &'a toml::Table,
    pub version: &'a str,
    pub started: Instant,
}

impl Context<'_> {
    fn summary(&self) -> Summary {
        Summary::new(self.version, self.experiment)
    }

    fn finish(&self, mut s: Summary, files: &mut Vec<PathBuf>) -> Result<(), AppError> {
        s.float("wall_clock_seconds", self.started.elapsed().as_secs_f64());
        files.push(write_file(self.out_dir, "summary.toml", &s.finish(self.config_table)?)?);
        Ok(())
    }

    fn csv(&self, header: &[&str]) -> Csv {
        Csv::new(self.config_toml, header)
    }
}

/// Library errors are either bad parameters (caught late) or violated
/// physics invariants.
pub fn physics(e: qrev::Error) -> AppError {
    match e {
        qrev::Error::InvalidParameter { .. } | qrev::Error::RequiresFluorescence(_) | qrev::Error::ReadoutMismatch { .. } => {
            AppError::Config(e.to_string())
        }
        other => AppError::Physics(other),
    }
}

pub fn run(plan: &Plan, ctx: &Context) -> Result<Vec<PathBuf>, AppError> {
    match plan {
        Plan::Simulate { sim, initial } => simulate(sim, initial, ctx),
        Plan::Ensemble { sim, initial, n } => ensemble(sim, initial, *n, ctx),
        Plan::Prepost { sim, pre, post, record } => prepost(sim, pre, post, record.as_ref(), ctx),
        Plan::Weak { observable, pre, post, meter, span, points } => weak(observable, pre, post, meter, *span, *points, ctx),
        Plan::Povm { channels, quadrature } => {
            let rows = povm_rows(channels, quadrature)?;
            povm_files(&rows, ctx)
        }
    }
}

fn readout_cells(r: Option<&Readout>) -> [String; 2] {
    match r {
        None => [String::new(), String::new()],
        Some(Readout::Heterodyne { i, q }) => [num(*i), num(*q)],
        Some(Readout::Continuous(y)) => [num(*y), String::new()],
        Some(Readout::Binary(b)) => [b.to_string(), String::new()],
    }
}

/// Row `n` carries the readout that produced state `n`; row 0 has none.
fn trajectory_rows(csv: &mut Csv, tr: &TrajectoryRecord) {
    for (n, (t, s)) in tr.times.iter().zip(&tr.states).enumerate() {
        let [i, q] = readout_cells(n.checked_sub(1).map(|k| &tr.readouts[k]));
        csv.row(&[num(*t), num(s.x), num(s.y), num(s.z), i, q, tr.direction.label().to_string()]);
    }
}

const TRAJECTORY_HEADER: [&str; 7] = ["t", "x", "y", "z", "I", "Q", "direction"];

fn simulate(sim: &SimConfig, initial: &PureState, ctx: &Context) -> Result<Vec<PathBuf>, AppError> {
    let fwd = simulate_forward(initial, sim).map_err(physics)?;
    let chain = OperatorChain::from_record(&fwd.record(), sim).map_err(physics)?;
    let stats = chain.arrow_from(initial).map_err(physics)?;
    let mut csv = ctx.csv(&TRAJECTORY_HEADER);
    trajectory_rows(&mut csv, &fwd);
    let mut s = ctx.summary();
    s.float("log_r", stats.log_r);
    s.float("p_forward_given_record", stats.p_forward_given_record);
    if matches!(sim.channel, ChannelSpec::Fluorescence { .. }) {
        s.float("log_r_bloch_estimator", fluorescence_log_arrow(&fwd).map_err(physics)?.log_r);
    }
    s.int("steps", fwd.steps() as u64);
    let f = fwd.final_state.bloch();
    s.floats("forward_final", &[f.x, f.y, f.z]);
    if ctx.experiment == "unravel" {
        let bwd = unravel_backward(&fwd).map_err(physics)?;
        trajectory_rows(&mut csv, &bwd);
        let b = bwd.final_state.bloch();
        s.floats("backward_final", &[b.x, b.y, b.z]);
        s.float("mirror_deviation", mirror_deviation(&fwd, &bwd));
    }
    let mut files = vec![write_file(ctx.out_dir, "trajectory.csv", &csv.finish())?];
    ctx.finish(s, &mut files)?;
    Ok(files)
}

fn ensemble(sim: &SimConfig, initial: &PureState, n: usize, ctx: &Context) -> Result<Vec<PathBuf>, AppError> {
    let e = fluorescence_ensemble_arrow(&initial.density(), sim, n).map_err(physics)?;
    let m = &e.moments;
    let cols = [m.mean_x(), m.mean_y(), m.mean_z(), m.mean_x2(), m.mean_y2(), m.mean_z2()];
    let mut moments = ctx.csv(&["t", "mean_x", "mean_y", "mean_z", "mean_x2", "mean_y2", "mean_z2"]);
    for (k, t) in m.times.iter().enumerate() {
        let mut row = vec![num(*t)];
        row.extend(cols.iter().map(|c| num(c[k])));
        moments.row(&row);
    }
    let mut per = ctx.csv(&["trajectory", "log_r"]);
    for (k, l) in e.log_r.iter().enumerate() {
        per.row(&[k.to_string(), num(*l)]);
    }
    let mut s = ctx.summary();
    s.float("mean_log_r_mc", e.mean_mc);
    s.float("mean_log_r_analytic", e.mean_analytic);
    s.float("stderr", e.stderr);
    s.float("deviation_in_stderr", (e.mean_mc - e.mean_analytic).abs() / e.stderr);
    s.int("n_trajectories", n as u64);
    let mut files = vec![
        write_file(ctx.out_dir, "moments.csv", &moments.finish())?,
        write_file(ctx.out_dir, "log_r.csv", &per.finish())?,
    ];
    ctx.finish(s, &mut files)?;
    Ok(files)
}

fn prepost(
    sim: &SimConfig,
    pre: &PureState,
    post: &PureState,
    given: Option<&ReadoutRecord>,
    ctx: &Context,
) -> Result<Vec<PathBuf>, AppError> {
    let record = match given {
        Some(r) => r.clone(),
        None => simulate_forward(pre, sim).map_err(physics)?.record(),
    };
    let chain = OperatorChain::from_record(&record, sim).map_err(physics)?;
    let ends = BoundaryPair { pre: *pre, post: *post };
    let stats = chain.prepost_arrow(&ends).map_err(physics)?;
    let mut csv = ctx.csv(&["t", "I", "Q"]);
    for (k, r) in record.readouts.iter().enumerate() {
        let [i, q] = readout_cells(Some(r));
        csv.row(&[num((k + 1) as f64 * sim.dt), i, q]);
    }
    let mut s = ctx.summary();
    s.float("log_r", stats.log_r);
    s.float("p_forward_given_record", stats.p_forward_given_record);
    s.float("log_p_forward", chain.log_forward_prepost(&ends));
    s.float("log_p_backward", chain.log_backward_prepost(&ends));
    s.string("record_source", if given.is_some() { "config" } else { "synthesized" });
    let mut files = vec![write_file(ctx.out_dir, "record.csv", &csv.finish())?];
    ctx.finish(s, &mut files)?;
    Ok(files)
}

fn weak(
    obs: &Operator2,
    pre: &PureState,
    post: &PureState,
    meter: &MeterModel,
    span: f64,
    points: usize,
    ctx: &Context,
) -> Result<Vec<PathBuf>, AppError> {
    let w = weak_value(obs, pre, post).map_err(physics)?;
    let rev = time_reversed_weak_value(obs, pre, post).map_err(physics)?;
    let p = weak_protocol_probabilities(pre, post, meter);
    let kt = meter.strength();
    let reach = kt * w.value.re.abs().max(rev.re.abs()) + span * meter.delta;
    let mut csv = ctx.csv(&["v", "forward", "reversed_position", "reversed_momentum"]);
    for j in 0..points {
        let v = -reach + 2.0 * reach * j as f64 / (points - 1) as f64;
        csv.row(&[
            num(v),
            num(meter.pointer_amplitude(&w, v).norm_sqr()),
            num(meter.reversed_pointer_amplitude(PointerBasis::Position, &w, rev, v).norm_sqr()),
            num(meter.reversed_pointer_amplitude(PointerBasis::Momentum, &w, rev, v).norm_sqr()),
        ]);
    }
    let mut s = ctx.summary();
    s.floats("weak_value", &[w.value.re, w.value.im]);
    s.floats("reversed_weak_value", &[rev.re, rev.im]);
    s.floats("pointer_shift", &[kt * w.value.re, kt * w.value.im]);
    s.floats("reversed_pointer_shift", &[kt * rev.re, kt * rev.im]);
    s.float("postselection_overlap", w.overlap.norm());
    s.boolean("ill_conditioned", w.ill_conditioned);
    s.float("meter_overlap", meter.overlap());
    s.float("p_forward", p.forward);
    s.float("p_backward", p.backward);
    s.float("p_reverse", p.reverse);
    let mut files = vec![write_file(ctx.out_dir, "pointer.csv", &csv.finish())?];
    ctx.finish(s, &mut files)?;
    Ok(files)
}

pub struct PovmRow {
    pub family: &'static str,
    pub forward: f64,
    pub reversed: f64,
    pub threshold: f64,
}

impl PovmRow {
    pub fn pass(&self) -> bool {
        self.forward < self.threshold && self.reversed < self.threshold
    }
}

/// Documented residual bounds for the default quadrature grids.
pub fn povm_threshold(spec: &ChannelSpec) -> f64 {
    match spec {
        ChannelSpec::Dichotomous { .. } => 1e-14,
        ChannelSpec::Gaussian { .. } => 1e-8,
        ChannelSpec::Fluorescence { .. } => 1e-4,
    }
}

pub fn povm_rows(channels: &[ChannelSpec], quad: &QuadratureConfig) -> Result<Vec<PovmRow>, AppError> {
    channels
        .iter()
        .map(|c| {
            Ok(PovmRow {
                family: c.name(),
                forward: completeness_residual(c, quad).map_err(physics)?,
                reversed: reversed_completeness_residual(c, quad).map_err(physics)?,
                threshold: povm_threshold(c),
            })
        })
        .collect()
}

pub fn povm_table(rows: &[PovmRow]) -> String {
    let mut out = format!("{:<13} {:>12} {:>12} {:>10}  status\n", "family", "forward", "reversed", "threshold");
    for r in rows {
        out.push_str(&format!(
            "{:<13} {:>12.3e} {:>12.3e} {:>10.0e}  {}\n",
            r.family,
            r.forward,
            r.reversed,
            r.threshold,
            if r.pass() { "ok" } else { "FAIL" }
        ));
    }
    out
}

pub fn povm_files(rows: &[PovmRow], ctx: &Context) -> Result<Vec<PathBuf>, AppError> {
    let mut csv = ctx.csv(&["family", "forward_residual", "reversed_residual", "threshold", "pass"]);
    for r in rows {
        csv.row(&[r.family.to_string(), num(r.forward), num(r.reversed), num(r.threshold), r.pass().to_string()]);
    }
    let mut s = ctx.summary();
    s.float("max_residual", rows.iter().map(|r| r.forward.max(r.reversed)).fold(0.0, f64::max));
    let all = rows.iter().all(PovmRow::pass);
    s.boolean("all_pass", all);
    let mut files = vec![write_file(ctx.out_dir, "povm_check.csv", &csv.finish())?];
    ctx.finish(s, &mut files)?;
    print!("{}", povm_table(rows));
    if !all {
        return Err(AppError::Threshold);
    }
    Ok(files)
}
