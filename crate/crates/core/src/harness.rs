//! Trial execution, cross-trial aggregation and CSV/metadata output.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fxnlms::{anc_step, ControllerState, FixedStep, Plant, StepSchedule, Tick};
use crate::metrics::{true_msd, AnrTracker};
use crate::noise::{gen_white, NoiseSource, RngStream};
use crate::scenario::{Scenario, StepPolicy};
use crate::sss::{FullMsdOracle, SssState};

/// Step-size schedule built from a scenario.
#[derive(Debug, Clone)]
pub enum Schedule {
    Fixed(FixedStep),
    Switched(SssState),
}

impl Schedule {
    pub fn from_scenario(scenario: &Scenario) -> Result<Self> {
        Ok(match &scenario.algorithm.policy {
            StepPolicy::Fixed { mu } => Schedule::Fixed(FixedStep(*mu)),
            StepPolicy::Switched {
                candidates,
                rho,
                clamp,
            } => Schedule::Switched(
                SssState::new(candidates.clone(), scenario.taps, *rho)?
                    .with_clamping(*clamp)
                    .with_epsilon(scenario.epsilon),
            ),
        })
    }

    pub fn trends(&self) -> Option<&[f64]> {
        match self {
            Schedule::Fixed(_) => None,
            Schedule::Switched(s) => Some(s.trends()),
        }
    }

    pub fn selected_index(&self) -> Option<usize> {
        match self {
            Schedule::Fixed(_) => None,
            Schedule::Switched(s) => Some(s.selected()),
        }
    }
}

impl StepSchedule for Schedule {
    fn step_size(&mut self, xf: &[f64], xf_norm2: f64, sigma_e2: f64, g: f64) -> Result<f64> {
        match self {
            Schedule::Fixed(f) => f.step_size(xf, xf_norm2, sigma_e2, g),
            Schedule::Switched(s) => s.step_size(xf, xf_norm2, sigma_e2, g),
        }
    }
}

/// View of the loop handed to observers after every tick.
pub struct TickContext<'a> {
    pub iter: usize,
    pub tick: &'a Tick,
    pub controller: &'a ControllerState,
    pub schedule: &'a Schedule,
}

/// Where and why a trial stopped early.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceInfo {
    pub trial: usize,
    pub iteration: usize,
    pub message: String,
}

/// Reference noise and measurement noise for one trial.
pub fn trial_signals(scenario: &Scenario, source: &NoiseSource, trial: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rng = RngStream::new(scenario.seed, trial as u64);
    let n = scenario.iterations;
    let x = source.generate(n, &mut rng)?;
    let v = if scenario.measurement_variance > 0.0 {
        gen_white(n, 0.0, scenario.measurement_variance, &mut rng)?
    } else {
        vec![0.0; n]
    };
    Ok((x, v))
}

/// Run the control loop of one trial, calling `observe` after every
/// accepted tick. Returns divergence details if the loop stopped early.
pub fn simulate_trial<F>(
    scenario: &Scenario,
    source: &NoiseSource,
    trial: usize,
    mut observe: F,
) -> Result<Option<DivergenceInfo>>
where
    F: FnMut(&TickContext<'_>),
{
    let (x, v) = trial_signals(scenario, source, trial)?;
    let mut plant = Plant::new(scenario.primary.clone(), scenario.secondary.clone());
    let mut controller = ControllerState::new(
        scenario.taps,
        scenario.secondary_estimate.clone(),
        scenario.algorithm.lambda,
        scenario.epsilon,
    )?;
    let mut schedule = Schedule::from_scenario(scenario)?;
    let scaling = scenario.algorithm.scaling;
    for iter in 0..scenario.iterations {
        match anc_step(&mut plant, &mut controller, x[iter], v[iter], &mut schedule, scaling) {
            Ok(tick) => observe(&TickContext {
                iter,
                tick: &tick,
                controller: &controller,
                schedule: &schedule,
            }),
            Err(
                e @ (Error::Divergence { .. } | Error::NonFinite { .. } | Error::TrendFault(_)),
            ) => {
                return Ok(Some(DivergenceInfo {
                    trial,
                    iteration: iter,
                    message: e.to_string(),
                }))
            }
            Err(e) => return Err(e),
        }
    }
    Ok(None)
}

/// One emitted CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct TickRow {
    pub iter: usize,
    pub e: f64,
    pub d: f64,
    pub anr_db: Option<f64>,
    pub selected_mu: f64,
    pub trends: Option<Vec<f64>>,
    pub true_msd: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub trial: usize,
    pub rows: Vec<TickRow>,
    pub divergence: Option<DivergenceInfo>,
    pub wall_time: Duration,
    pub trend_columns: usize,
}

impl RunResult {
    pub fn diverged(&self) -> bool {
        self.divergence.is_some()
    }

    /// Mean ANR over the last `window` rows (undefined samples skipped).
    pub fn final_mean_anr(&self, window: usize) -> Option<f64> {
        let start = self.rows.len().saturating_sub(window);
        mean_defined(self.rows[start..].iter().map(|r| r.anr_db))
    }

    pub fn selected_steps(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.selected_mu).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = csv_header(self.trend_columns);
        for r in &self.rows {
            let trends: Vec<Option<f64>> = match &r.trends {
                Some(t) => t.iter().copied().map(Some).collect(),
                None => vec![None; self.trend_columns],
            };
            push_row(
                &mut out,
                r.iter,
                &[Some(r.e), Some(r.d)],
                r.anr_db.map(Cell::Value).unwrap_or(Cell::Na),
                Some(r.selected_mu),
                &trends,
                r.true_msd,
            );
        }
        out
    }
}

fn mean_defined(it: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let (sum, n) = it.flatten().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Run one trial and record every tick.
pub fn run_trial(scenario: &Scenario, trial: usize) -> Result<RunResult> {
    let source = NoiseSource::new(&scenario.noise)?;
    run_trial_with(scenario, &source, trial)
}

pub fn run_trial_with(scenario: &Scenario, source: &NoiseSource, trial: usize) -> Result<RunResult> {
    let started = Instant::now();
    let mut anr = AnrTracker::new(scenario.beta)?;
    let w_opt = scenario.optimal_weights();
    let mut rows = Vec::with_capacity(scenario.iterations);
    let divergence = simulate_trial(scenario, source, trial, |ctx| {
        let msd = w_opt
            .as_deref()
            .map(|w| true_msd(ctx.controller.weights(), w).unwrap_or(f64::NAN));
        rows.push(TickRow {
            iter: ctx.iter,
            e: ctx.tick.e,
            d: ctx.tick.d,
            anr_db: anr.step(ctx.tick.e, ctx.tick.d),
            selected_mu: ctx.tick.mu,
            trends: ctx.schedule.trends().map(<[f64]>::to_vec),
            true_msd: msd,
        });
    })?;
    Ok(RunResult {
        trial,
        rows,
        divergence,
        wall_time: started.elapsed(),
        trend_columns: scenario.algorithm.trend_columns(),
    })
}

enum Cell {
    Value(f64),
    Na,
}

fn fmt_num(x: f64) -> String {
    // `{:?}` is the shortest representation that round-trips.
    format!("{x:?}")
}

pub fn csv_header(trend_columns: usize) -> String {
    let mut h = String::from("iter,e,d,anr_db,selected_mu");
    for k in 1..=trend_columns {
        let _ = write!(h, ",J_{k}");
    }
    h.push_str(",true_msd\n");
    h
}

fn push_row(
    out: &mut String,
    iter: usize,
    ed: &[Option<f64>; 2],
    anr: Cell,
    mu: Option<f64>,
    trends: &[Option<f64>],
    msd: Option<f64>,
) {
    let opt = |v: Option<f64>| v.map(fmt_num).unwrap_or_default();
    let _ = write!(out, "{iter},{},{},", opt(ed[0]), opt(ed[1]));
    match anr {
        Cell::Value(v) => out.push_str(&fmt_num(v)),
        Cell::Na => out.push_str("NA"),
    }
    let _ = write!(out, ",{}", opt(mu));
    for t in trends {
        let _ = write!(out, ",{}", opt(*t));
    }
    let _ = writeln!(out, ",{}", opt(msd));
}

/// Pointwise means over the non-diverged trials.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateCurves {
    pub e: Vec<f64>,
    pub d: Vec<f64>,
    /// `None` where any included trial had an undefined ANR.
    pub anr_db: Vec<Option<f64>>,
    pub selected_mu: Vec<f64>,
    pub trends: Option<Vec<Vec<f64>>>,
    pub true_msd: Option<Vec<f64>>,
    pub trend_columns: usize,
    pub included: usize,
}

impl AggregateCurves {
    pub fn to_csv(&self) -> String {
        let mut out = csv_header(self.trend_columns);
        for i in 0..self.e.len() {
            let trends: Vec<Option<f64>> = match &self.trends {
                Some(t) => t.iter().map(|col| Some(col[i])).collect(),
                None => vec![None; self.trend_columns],
            };
            push_row(
                &mut out,
                i,
                &[Some(self.e[i]), Some(self.d[i])],
                self.anr_db[i].map(Cell::Value).unwrap_or(Cell::Na),
                Some(self.selected_mu[i]),
                &trends,
                self.true_msd.as_ref().map(|m| m[i]),
            );
        }
        out
    }

    /// First iteration at which the mean ANR is at or below `level_db`.
    pub fn first_reaching(&self, level_db: f64) -> Option<usize> {
        self.anr_db
            .iter()
            .position(|a| a.is_some_and(|v| v <= level_db))
    }

    pub fn mean_anr_over(&self, range: std::ops::Range<usize>) -> Option<f64> {
        mean_defined(self.anr_db[range].iter().copied())
    }

    pub fn final_mean_anr(&self, window: usize) -> Option<f64> {
        let n = self.anr_db.len();
        self.mean_anr_over(n.saturating_sub(window)..n)
    }
}

/// Accumulates trials in index order.
#[derive(Debug, Default)]
struct Aggregator {
    e: Vec<f64>,
    d: Vec<f64>,
    anr: Vec<f64>,
    anr_na: Vec<bool>,
    mu: Vec<f64>,
    trends: Vec<Vec<f64>>,
    msd: Vec<f64>,
    has_trends: bool,
    has_msd: bool,
    count: usize,
}

impl Aggregator {
    fn add(&mut self, r: &RunResult) {
        let n = r.rows.len();
        if self.count == 0 {
            self.e = vec![0.0; n];
            self.d = vec![0.0; n];
            self.anr = vec![0.0; n];
            self.anr_na = vec![false; n];
            self.mu = vec![0.0; n];
            self.has_trends = r.rows.first().is_some_and(|row| row.trends.is_some());
            self.has_msd = r.rows.first().is_some_and(|row| row.true_msd.is_some());
            if self.has_trends {
                self.trends = vec![vec![0.0; n]; r.trend_columns];
            }
            if self.has_msd {
                self.msd = vec![0.0; n];
            }
        }
        for (i, row) in r.rows.iter().enumerate() {
            self.e[i] += row.e;
            self.d[i] += row.d;
            match row.anr_db {
                Some(a) => self.anr[i] += a,
                None => self.anr_na[i] = true,
            }
            self.mu[i] += row.selected_mu;
            if let Some(t) = &row.trends {
                for (col, v) in self.trends.iter_mut().zip(t) {
                    col[i] += v;
                }
            }
            if let Some(m) = row.true_msd {
                self.msd[i] += m;
            }
        }
        self.count += 1;
    }

    fn finish(self, trend_columns: usize) -> AggregateCurves {
        let n = self.count as f64;
        let div = |v: Vec<f64>| v.into_iter().map(|s| s / n).collect::<Vec<_>>();
        let anr_db = self
            .anr
            .into_iter()
            .zip(self.anr_na)
            .map(|(s, na)| (!na).then(|| s / n))
            .collect();
        AggregateCurves {
            e: div(self.e),
            d: div(self.d),
            anr_db,
            selected_mu: div(self.mu),
            trends: self
                .has_trends
                .then(|| self.trends.into_iter().map(div).collect()),
            true_msd: self.has_msd.then(|| div(self.msd)),
            trend_columns,
            included: self.count,
        }
    }
}

/// Per-trial quantities kept after the rows are dropped.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialSummary {
    pub trial: usize,
    pub diverged: bool,
    pub iterations_run: usize,
    /// Mean ANR over the final window.
    pub final_anr_db: Option<f64>,
    pub final_selected_mu: Option<f64>,
    /// Number of ticks after the switch-analysis start where the selected
    /// step-size increased.
    pub up_switches: usize,
    /// Ticks examined for up-switches.
    pub switch_ticks: usize,
    /// Mean true MSD over the final window (identification mode only).
    pub final_true_msd: Option<f64>,
}

/// Window and offsets used to summarize trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryWindows {
    pub final_window: usize,
    pub switch_after: usize,
}

impl Default for SummaryWindows {
    fn default() -> Self {
        SummaryWindows {
            final_window: 1000,
            switch_after: 100,
        }
    }
}

impl TrialSummary {
    pub fn from_run(r: &RunResult, w: SummaryWindows) -> Self {
        let steps = r.selected_steps();
        let mut up = 0;
        let mut ticks = 0;
        for i in (w.switch_after + 1)..steps.len() {
            ticks += 1;
            if steps[i] > steps[i - 1] {
                up += 1;
            }
        }
        let start = r.rows.len().saturating_sub(w.final_window);
        let final_true_msd = mean_defined(r.rows[start..].iter().map(|row| row.true_msd));
        TrialSummary {
            trial: r.trial,
            diverged: r.diverged(),
            iterations_run: r.rows.len(),
            final_anr_db: r.final_mean_anr(w.final_window),
            final_selected_mu: steps.last().copied(),
            up_switches: up,
            switch_ticks: ticks,
            final_true_msd,
        }
    }
}

/// Options for [`run_experiment`].
#[derive(Debug, Clone, Default)]
pub struct ExperimentOptions {
    /// Directory for CSV and metadata output; nothing is written if unset.
    pub out_dir: Option<PathBuf>,
    /// Skip the per-trial CSV files.
    pub aggregate_only: bool,
    pub windows: SummaryWindows,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub aggregate: AggregateCurves,
    pub summaries: Vec<TrialSummary>,
    pub divergences: Vec<DivergenceInfo>,
    pub wall_time: Duration,
}

impl ExperimentOutcome {
    pub fn excluded(&self) -> usize {
        self.divergences.len()
    }
}

#[derive(Serialize)]
struct Metadata<'a> {
    name: &'a str,
    algorithm: &'a str,
    seed: u64,
    trials: usize,
    iterations: usize,
    included_trials: usize,
    excluded_trials: usize,
    divergences: &'a [DivergenceInfo],
    artifact_version: &'a str,
    generated_unix_secs: u64,
    wall_time_secs: f64,
    scenario: String,
}

pub fn trial_file_name(trial: usize) -> String {
    format!("trial_{trial:04}.csv")
}

/// Run all trials (in parallel), average the non-diverged ones and
/// optionally write per-trial CSVs, `aggregate.csv` and `metadata.json`.
pub fn run_experiment(scenario: &Scenario, opts: &ExperimentOptions) -> Result<ExperimentOutcome> {
    let started = Instant::now();
    let source = NoiseSource::new(&scenario.noise)?;
    if let Some(dir) = &opts.out_dir {
        fs::create_dir_all(dir)?;
    }
    let mut agg = Aggregator::default();
    let mut summaries = Vec::with_capacity(scenario.trials);
    let mut divergences = Vec::new();
    // Bounded batches keep memory flat; results are consumed in trial order.
    let batch = (rayon::current_num_threads() * 2).max(1);
    let indices: Vec<usize> = (0..scenario.trials).collect();
    for chunk in indices.chunks(batch) {
        let results: Vec<Result<RunResult>> = chunk
            .par_iter()
            .map(|&t| run_trial_with(scenario, &source, t))
            .collect();
        for r in results {
            let r = r?;
            if let (Some(dir), false) = (&opts.out_dir, opts.aggregate_only) {
                write_file(&dir.join(trial_file_name(r.trial)), &r.to_csv())?;
            }
            summaries.push(TrialSummary::from_run(&r, opts.windows));
            match &r.divergence {
                Some(d) => divergences.push(d.clone()),
                None => agg.add(&r),
            }
        }
    }
    if agg.count == 0 {
        return Err(Error::AllDiverged {
            trials: scenario.trials,
        });
    }
    let aggregate = agg.finish(scenario.algorithm.trend_columns());
    let wall_time = started.elapsed();
    if let Some(dir) = &opts.out_dir {
        write_file(&dir.join("aggregate.csv"), &aggregate.to_csv())?;
        let meta = Metadata {
            name: &scenario.name,
            algorithm: scenario.algorithm.label(),
            seed: scenario.seed,
            trials: scenario.trials,
            iterations: scenario.iterations,
            included_trials: aggregate.included,
            excluded_trials: divergences.len(),
            divergences: &divergences,
            artifact_version: env!("CARGO_PKG_VERSION"),
            generated_unix_secs: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            wall_time_secs: wall_time.as_secs_f64(),
            scenario: scenario.to_config_string(),
        };
        let json = serde_json::to_string_pretty(&meta).map_err(std::io::Error::other)?;
        write_file(&dir.join("metadata.json"), &json)?;
    }
    Ok(ExperimentOutcome {
        aggregate,
        summaries,
        divergences,
        wall_time,
    })
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(contents.as_bytes())?;
    w.flush()?;
    Ok(())
}

/// Agreement between step selections driven by the diagonal trends and
/// those the full-matrix recursion would make on the same inputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub ticks: usize,
    pub agreements: usize,
    pub per_trial: Vec<f64>,
}

impl OracleReport {
    pub fn agreement_rate(&self) -> f64 {
        if self.ticks == 0 {
            0.0
        } else {
            self.agreements as f64 / self.ticks as f64
        }
    }
}

/// Run every trial with the full-matrix oracle shadowing the engine.
pub fn oracle_agreement(scenario: &Scenario) -> Result<OracleReport> {
    let StepPolicy::Switched { candidates, rho, .. } = &scenario.algorithm.policy else {
        return Err(Error::config("the MSD oracle needs a switched step-size scenario"));
    };
    let source = NoiseSource::new(&scenario.noise)?;
    let per_trial: Vec<Result<(usize, usize)>> = (0..scenario.trials)
        .into_par_iter()
        .map(|t| {
            let mut oracle = FullMsdOracle::new(candidates.clone(), scenario.taps, *rho)?
                .with_epsilon(scenario.epsilon);
            let mut fault = None;
            let (mut ticks, mut agree) = (0usize, 0usize);
            simulate_trial(scenario, &source, t, |ctx| {
                if fault.is_some() {
                    return;
                }
                let xf = ctx.controller.filtered_reference();
                match oracle.iterate(xf, ctx.tick.sigma_e2, ctx.tick.g) {
                    Ok(idx) => {
                        ticks += 1;
                        if Some(idx) == ctx.schedule.selected_index() {
                            agree += 1;
                        }
                    }
                    Err(e) => fault = Some(e),
                }
            })?;
            match fault {
                Some(e) => Err(e),
                None => Ok((ticks, agree)),
            }
        })
        .collect();
    let mut report = OracleReport {
        ticks: 0,
        agreements: 0,
        per_trial: Vec::with_capacity(per_trial.len()),
    };
    for r in per_trial {
        let (t, a) = r?;
        report.ticks += t;
        report.agreements += a;
        report
            .per_trial
            .push(if t == 0 { 0.0 } else { a as f64 / t as f64 });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(algo: &str, iterations: usize, trials: usize) -> Scenario {
        Scenario::parse(&format!(
            "[run]\ntaps = 16\niterations = {iterations}\ntrials = {trials}\nseed = 42\n\
             [paths]\nprimary = preset:primary\nsecondary = preset:secondary\n\
             secondary_estimate = preset:secondary\n\
             [noise]\nkind = white\n[algorithm]\n{algo}\n"
        ))
        .unwrap()
    }

    #[test]
    fn trial_is_deterministic() {
        let s = scenario("kind = sss\ncandidates = 0.6, 0.3, 0.15, 0.075", 500, 1);
        let a = run_trial(&s, 3).unwrap().to_csv();
        let b = run_trial(&s, 3).unwrap().to_csv();
        assert_eq!(a, b);
        assert_ne!(a, run_trial(&s, 4).unwrap().to_csv());
    }

    #[test]
    fn single_candidate_matches_fixed_step() {
        let sss = scenario("kind = sss\ncandidates = 0.3", 2000, 1);
        let fixed = scenario("kind = fixed\nmu = 0.3", 2000, 1);
        let a = run_trial(&sss, 0).unwrap();
        let b = run_trial(&fixed, 0).unwrap();
        let ea: Vec<f64> = a.rows.iter().map(|r| r.e).collect();
        let eb: Vec<f64> = b.rows.iter().map(|r| r.e).collect();
        assert_eq!(ea, eb);
    }

    #[test]
    fn unit_scaling_is_bit_identical_to_plain_update() {
        // EHCF/MCC aside, `scaling = unit` must not perturb anything.
        let a = scenario("kind = sss\ncandidates = 0.6, 0.3\nscaling = unit", 1500, 1);
        let b = scenario("kind = sss\ncandidates = 0.6, 0.3", 1500, 1);
        assert_eq!(run_trial(&a, 0).unwrap().to_csv(), run_trial(&b, 0).unwrap().to_csv());
    }

    #[test]
    fn csv_layout() {
        let s = scenario("kind = fixed\nmu = 0.1", 3, 1);
        let csv = run_trial(&s, 0).unwrap().to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "iter,e,d,anr_db,selected_mu,J_1,true_msd");
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first.len(), 7);
        assert_eq!(first[0], "0");
        assert_eq!(first[4], "0.1");
        assert_eq!(first[5], "");
        assert_eq!(first[6], "");

        let s = scenario("kind = sss\ncandidates = 0.6, 0.3, 0.15", 2, 1);
        let csv = run_trial(&s, 0).unwrap().to_csv();
        assert!(csv.starts_with("iter,e,d,anr_db,selected_mu,J_1,J_2,J_3,true_msd\n"));
    }

    #[test]
    fn single_trial_aggregate_is_identity() {
        let s = scenario("kind = sss\ncandidates = 0.6, 0.3, 0.15, 0.075", 400, 1);
        let out = run_experiment(&s, &ExperimentOptions::default()).unwrap();
        assert_eq!(out.aggregate.to_csv(), run_trial(&s, 0).unwrap().to_csv());
    }

    #[test]
    fn summary_counts_up_switches() {
        let s = scenario("kind = fixed\nmu = 0.1", 10, 1);
        let mut r = run_trial(&s, 0).unwrap();
        let steps = [0.6, 0.3, 0.3, 0.15, 0.3, 0.15, 0.075, 0.15, 0.075, 0.075];
        for (row, mu) in r.rows.iter_mut().zip(steps) {
            row.selected_mu = mu;
        }
        let sum = TrialSummary::from_run(
            &r,
            SummaryWindows {
                final_window: 5,
                switch_after: 2,
            },
        );
        assert_eq!(sum.switch_ticks, 7);
        assert_eq!(sum.up_switches, 2);
        assert_eq!(sum.final_selected_mu, Some(0.075));
    }

    #[test]
    fn oracle_requires_switched_policy() {
        let s = scenario("kind = fixed\nmu = 0.1", 10, 1);
        assert!(oracle_agreement(&s).is_err());
    }
}
