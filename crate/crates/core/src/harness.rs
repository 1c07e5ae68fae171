//! Monte-Carlo experiments: trials, threshold sweeps, mismatch histograms and
//! parameter ablations.
//!
//! A trial's detector traces do not depend on the threshold, so each trial is
//! simulated once and every threshold of the grid is applied to the stored
//! traces. Trials are seeded by index alone and results are reduced in index
//! order, so output is independent of the worker count.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detectors::{metric_trace, DetectorKind, DetectorParams, Projection, TraceSeed};
use crate::error::{Error, Result};
use crate::jammers::JammerKind;
use crate::rng::{stream, Domain};
use crate::signal::{
    derive_sync_sequence, draw_rayleigh_channel, load_channel_file, sample_arrival, synthesize_receive_stream,
    ChannelRealization, ChannelSource, ScenarioConfig, Secret,
};

pub const THREADS_ENV: &str = "JASS_THREADS";

/// Outcome of one trial: the statistic of every window `l = 0..=L` for each detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_index: u64,
    pub arrival: usize,
    pub seq_energy: f64,
    pub traces: BTreeMap<DetectorKind, Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub alpha: f64,
    pub fpr: f64,
    pub fnr: f64,
    pub ter: f64,
}

pub fn default_alpha_grid() -> Vec<f64> {
    (0..=40).map(|i| i as f64 * 0.025).collect()
}

fn default_num_trials() -> usize {
    2000
}

fn default_detectors() -> Vec<DetectorKind> {
    vec![DetectorKind::Jass, DetectorKind::Bajass, DetectorKind::Unmitigated]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub scenario: ScenarioConfig,
    #[serde(default = "default_detectors")]
    pub detectors: Vec<DetectorKind>,
    #[serde(default = "default_alpha_grid")]
    pub alpha_grid: Vec<f64>,
    #[serde(default = "default_num_trials")]
    pub num_trials: usize,
    /// CSV destination; the JSON sidecar goes next to it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
    /// Use this arrival time in every trial instead of sampling it.
    #[serde(default, alias = "fixed_L", skip_serializing_if = "Option::is_none")]
    pub fixed_l: Option<usize>,
    #[serde(default)]
    pub projection: Projection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioConfig::default(),
            detectors: default_detectors(),
            alpha_grid: default_alpha_grid(),
            num_trials: default_num_trials(),
            output_path: None,
            fixed_l: None,
            projection: Projection::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.num_trials == 0 {
            return Err(Error::InvalidArgument("num_trials must be at least 1".into()));
        }
        if self.detectors.is_empty() {
            return Err(Error::InvalidArgument("no detectors selected".into()));
        }
        if self.alpha_grid.is_empty() {
            return Err(Error::InvalidArgument("alpha grid is empty".into()));
        }
        if self.alpha_grid.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::InvalidArgument("alpha grid values must lie in [0, 1]".into()));
        }
        if self.alpha_grid.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidArgument("alpha grid must be sorted ascending".into()));
        }
        Ok(())
    }

    pub fn detector_params(&self) -> DetectorParams {
        DetectorParams {
            assumed_jammer_antennas: self.scenario.assumed_jammer_antennas,
            power_iterations: self.scenario.power_iterations,
            projection: self.projection,
        }
    }
}

/// Worker count from `JASS_THREADS`, or the rayon default when unset.
pub fn configured_threads() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(Error::InvalidArgument(format!("{THREADS_ENV}={v:?} is not a positive integer"))),
        },
        Err(_) => Ok(rayon::current_num_threads()),
    }
}

/// Reusable trial generator for one scenario. A channel file is read once.
#[derive(Debug, Clone)]
pub struct Simulator {
    scenario: ScenarioConfig,
    detectors: Vec<DetectorKind>,
    params: DetectorParams,
    fixed_arrival: Option<usize>,
    channels: Option<Arc<Vec<ChannelRealization>>>,
}

impl Simulator {
    pub fn new(scenario: ScenarioConfig, detectors: Vec<DetectorKind>) -> Result<Self> {
        scenario.validate()?;
        let channels = match &scenario.channel_source {
            ChannelSource::RayleighIid => None,
            ChannelSource::File { path, normalize } => {
                let chans = load_channel_file(path, *normalize)?;
                let first = &chans[0];
                if first.bs_antennas() != scenario.bs_antennas || first.jammer_antennas() != scenario.jammer_antennas {
                    return Err(Error::dims(
                        "channel file",
                        format!(
                            "records are B={} I={} but the scenario has B={} I={}",
                            first.bs_antennas(),
                            first.jammer_antennas(),
                            scenario.bs_antennas,
                            scenario.jammer_antennas
                        ),
                    ));
                }
                Some(Arc::new(chans))
            }
        };
        let params = DetectorParams::new(scenario.assumed_jammer_antennas, scenario.power_iterations);
        Ok(Self {
            scenario,
            detectors,
            params,
            fixed_arrival: None,
            channels,
        })
    }

    pub fn from_config(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self::new(config.scenario.clone(), config.detectors.clone())?
            .with_fixed_arrival(config.fixed_l)
            .with_projection(config.projection))
    }

    pub fn with_fixed_arrival(mut self, arrival: Option<usize>) -> Self {
        self.fixed_arrival = arrival;
        self
    }

    pub fn with_projection(mut self, projection: Projection) -> Self {
        self.params.projection = projection;
        self
    }

    pub fn scenario(&self) -> &ScenarioConfig {
        &self.scenario
    }

    fn channel(&self, trial: u64) -> Result<ChannelRealization> {
        match &self.channels {
            Some(chans) => chans.get(trial as usize).cloned().ok_or(Error::ChannelsExhausted {
                needed: trial as usize + 1,
                available: chans.len(),
            }),
            None => draw_rayleigh_channel(
                self.scenario.bs_antennas,
                self.scenario.jammer_antennas,
                &mut stream(self.scenario.master_seed, Domain::Channel, trial, 0),
            ),
        }
    }

    pub fn trial(&self, trial_index: u64) -> Result<TrialRecord> {
        let sc = &self.scenario;
        let seed = sc.master_seed;
        let secret = Secret::random(&mut stream(seed, Domain::Secret, trial_index, 0));
        let seq = derive_sync_sequence(secret, sc.seq_len)?;
        let arrival = match self.fixed_arrival {
            Some(l) => l,
            None => sample_arrival(
                sc.arrival_probability(),
                &mut stream(seed, Domain::Arrival, trial_index, 0),
            )?,
        };
        let chan = self.channel(trial_index)?;
        let rx = synthesize_receive_stream(
            &chan,
            &seq,
            arrival,
            &sc.jammer_spec(),
            sc.noise_power(),
            stream(seed, Domain::Jammer, trial_index, 0),
            &mut stream(seed, Domain::Noise, trial_index, 0),
        )?;
        let trace_seed = TraceSeed {
            master_seed: seed,
            trial: trial_index,
        };
        let mut traces = BTreeMap::new();
        for &kind in &self.detectors {
            traces.insert(kind, metric_trace(&rx, &seq, kind, &self.params, trace_seed)?);
        }
        Ok(TrialRecord {
            trial_index,
            arrival,
            seq_energy: seq.energy(),
            traces,
        })
    }

    /// Trials `0..num_trials` on a pool of `threads` workers, in index order.
    pub fn run(&self, num_trials: usize, threads: usize) -> Result<Vec<TrialRecord>> {
        if let Some(chans) = &self.channels {
            if chans.len() < num_trials {
                return Err(Error::ChannelsExhausted {
                    needed: num_trials,
                    available: chans.len(),
                });
            }
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
        pool.install(|| {
            (0..num_trials as u64)
                .into_par_iter()
                .map(|t| self.trial(t))
                .collect()
        })
    }
}

/// One trial of `scenario` with sampled arrival.
pub fn run_trial(scenario: &ScenarioConfig, detectors: &[DetectorKind], trial_index: u64) -> Result<TrialRecord> {
    Simulator::new(scenario.clone(), detectors.to_vec())?.trial(trial_index)
}

/// FPR/FNR/TER of `kind` at every `alpha`, classifying each trial at its first
/// crossing of `alpha * ||s||^2`.
pub fn sweep_thresholds(records: &[TrialRecord], kind: DetectorKind, alpha_grid: &[f64]) -> Result<Vec<RocPoint>> {
    if records.is_empty() {
        return Err(Error::InvalidArgument("no trial records to sweep".into()));
    }
    let mut false_pos = vec![0usize; alpha_grid.len()];
    let mut false_neg = vec![0usize; alpha_grid.len()];
    let mut running = Vec::new();
    for rec in records {
        let trace = rec
            .traces
            .get(&kind)
            .ok_or_else(|| Error::InvalidArgument(format!("trial {} has no {kind} trace", rec.trial_index)))?;
        // the first crossing of tau is the first index where the running max reaches tau
        running.clear();
        let mut m = f64::NEG_INFINITY;
        running.extend(trace.iter().map(|&v| {
            m = m.max(v);
            m
        }));
        for (a, &alpha) in alpha_grid.iter().enumerate() {
            let tau = alpha * rec.seq_energy;
            let first = running.partition_point(|&v| v < tau);
            if first == running.len() {
                false_neg[a] += 1;
            } else if first < rec.arrival {
                false_pos[a] += 1;
            }
        }
    }
    let n = records.len() as f64;
    Ok(alpha_grid
        .iter()
        .enumerate()
        .map(|(a, &alpha)| {
            let fpr = false_pos[a] as f64 / n;
            let fnr = false_neg[a] as f64 / n;
            RocPoint {
                alpha,
                fpr,
                fnr,
                ter: fpr + fnr,
            }
        })
        .collect())
}

/// Formats with six significant digits; identical input gives identical text.
pub fn format_sig6(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let decimals = (5 - v.abs().log10().floor() as i32).max(0) as usize;
    format!("{v:.decimals$}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocResult {
    pub curves: Vec<(DetectorKind, Vec<RocPoint>)>,
}

impl RocResult {
    pub fn curve(&self, kind: DetectorKind) -> Option<&[RocPoint]> {
        self.curves.iter().find(|(k, _)| *k == kind).map(|(_, c)| c.as_slice())
    }

    /// Lowest TER over the grid.
    pub fn best(&self, kind: DetectorKind) -> Option<RocPoint> {
        self.curve(kind)?
            .iter()
            .copied()
            .min_by(|a, b| a.ter.total_cmp(&b.ter))
    }

    /// Grid point closest to `alpha`.
    pub fn at_alpha(&self, kind: DetectorKind, alpha: f64) -> Option<RocPoint> {
        self.curve(kind)?
            .iter()
            .copied()
            .min_by(|a, b| (a.alpha - alpha).abs().total_cmp(&(b.alpha - alpha).abs()))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("detector,alpha,fpr,fnr,ter\n");
        for (kind, curve) in &self.curves {
            for p in curve {
                let _ = writeln!(
                    out,
                    "{kind},{},{},{},{}",
                    format_sig6(p.alpha),
                    format_sig6(p.fpr),
                    format_sig6(p.fnr),
                    format_sig6(p.ter)
                );
            }
        }
        out
    }
}

fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

fn write_outputs(csv_path: &Path, csv: &str, config: &ExperimentConfig, extra: serde_json::Value) -> Result<()> {
    if let Some(dir) = csv_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(csv_path, csv)?;
    let sidecar = serde_json::json!({
        "generator": concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")),
        "master_seed": config.scenario.master_seed,
        "config": config,
        "run": extra,
    });
    fs::write(sidecar_path(csv_path), serde_json::to_string_pretty(&sidecar)? + "\n")?;
    Ok(())
}

/// Sweeps stored traces for every configured detector.
pub fn roc_from_records(records: &[TrialRecord], config: &ExperimentConfig) -> Result<RocResult> {
    let curves = config
        .detectors
        .iter()
        .map(|&k| Ok((k, sweep_thresholds(records, k, &config.alpha_grid)?)))
        .collect::<Result<_>>()?;
    Ok(RocResult { curves })
}

pub fn run_roc_experiment(config: &ExperimentConfig) -> Result<RocResult> {
    run_roc_experiment_with_threads(config, configured_threads()?)
}

pub fn run_roc_experiment_with_threads(config: &ExperimentConfig, threads: usize) -> Result<RocResult> {
    let records = Simulator::from_config(config)?.run(config.num_trials, threads)?;
    let result = roc_from_records(&records, config)?;
    if let Some(path) = &config.output_path {
        write_outputs(path, &result.to_csv(), config, serde_json::json!({ "kind": "roc" }))?;
    }
    Ok(result)
}

/// Histogram of `L - l_hat` over trials that detected at or before `L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MismatchPmf {
    pub jammer: JammerKind,
    pub detector: DetectorKind,
    /// `counts[d]` trials detected with mismatch `d`.
    pub counts: Vec<u64>,
    pub false_negatives: u64,
}

impl MismatchPmf {
    pub fn detections(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.detections() == 0
    }

    pub fn frequency(&self, mismatch: usize) -> f64 {
        let n = self.detections();
        if n == 0 {
            0.0
        } else {
            self.counts.get(mismatch).copied().unwrap_or(0) as f64 / n as f64
        }
    }

    /// Detections with mismatch in `range`.
    pub fn mass(&self, range: std::ops::RangeInclusive<usize>) -> u64 {
        range.filter_map(|d| self.counts.get(d)).sum()
    }
}

/// Mismatch histogram for each jammer kind and detector at a single `alpha`.
/// Requires `config.fixed_l`.
pub fn mismatch_histograms(
    config: &ExperimentConfig,
    alpha: f64,
    jammers: &[JammerKind],
    threads: usize,
) -> Result<Vec<MismatchPmf>> {
    let arrival = config
        .fixed_l
        .ok_or_else(|| Error::InvalidArgument("the mismatch experiment needs fixed_l".into()))?;
    let mut out = Vec::new();
    for &jammer in jammers {
        let mut cfg = config.clone();
        cfg.scenario.jammer_kind = jammer;
        let records = Simulator::from_config(&cfg)?.run(cfg.num_trials, threads)?;
        for &detector in &cfg.detectors {
            let mut pmf = MismatchPmf {
                jammer,
                detector,
                counts: vec![0; arrival + 1],
                false_negatives: 0,
            };
            for rec in &records {
                let tau = alpha * rec.seq_energy;
                match rec.traces[&detector].iter().position(|&v| v >= tau) {
                    Some(l) => pmf.counts[rec.arrival - l] += 1,
                    None => pmf.false_negatives += 1,
                }
            }
            out.push(pmf);
        }
    }
    Ok(out)
}

pub fn mismatch_csv(pmfs: &[MismatchPmf]) -> String {
    let mut out = String::from("jammer,detector,mismatch,count,frequency\n");
    for p in pmfs {
        if p.is_empty() {
            let _ = writeln!(out, "{},{},empty,0,0", p.jammer, p.detector);
            continue;
        }
        for (d, &c) in p.counts.iter().enumerate() {
            let _ = writeln!(out, "{},{},{d},{c},{}", p.jammer, p.detector, format_sig6(p.frequency(d)));
        }
    }
    out
}

pub fn run_mismatch_experiment(config: &ExperimentConfig, alpha: f64, jammers: &[JammerKind]) -> Result<Vec<MismatchPmf>> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("alpha {alpha} outside [0, 1]")));
    }
    let pmfs = mismatch_histograms(config, alpha, jammers, configured_threads()?)?;
    if let Some(path) = &config.output_path {
        let extra = serde_json::json!({ "kind": "mismatch", "alpha": alpha, "jammers": jammers });
        write_outputs(path, &mismatch_csv(&pmfs), config, extra)?;
    }
    Ok(pmfs)
}

/// Scenario fields an ablation can sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationParam {
    SeqLen,
    BsAntennas,
    SnrDb,
    RhoDb,
    /// True and assumed jammer antennas together.
    JammerAntennas,
    PowerIterations,
    /// Assumed jammer antennas only.
    AssumedJammerAntennas,
}

impl AblationParam {
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "k" | "K" | "seq_len" => Self::SeqLen,
            "b" | "B" | "bs_antennas" => Self::BsAntennas,
            "snr_db" | "snr" => Self::SnrDb,
            "rho_db" | "rho" => Self::RhoDb,
            "i" | "I" | "jammer_antennas" => Self::JammerAntennas,
            "t_max" | "power_iterations" => Self::PowerIterations,
            "i_hat" | "I_hat" | "assumed_jammer_antennas" => Self::AssumedJammerAntennas,
            other => return Err(Error::UnknownParameter(other.to_string())),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::SeqLen => "k",
            Self::BsAntennas => "b",
            Self::SnrDb => "snr_db",
            Self::RhoDb => "rho_db",
            Self::JammerAntennas => "i",
            Self::PowerIterations => "t_max",
            Self::AssumedJammerAntennas => "i_hat",
        }
    }

    fn is_integer(self) -> bool {
        !matches!(self, Self::SnrDb | Self::RhoDb)
    }

    pub fn apply(self, scenario: &mut ScenarioConfig, value: f64) -> Result<()> {
        if self.is_integer() && (value < 0.0 || value.fract() != 0.0) {
            return Err(Error::InvalidArgument(format!(
                "{} takes non-negative integers, got {value}",
                self.name()
            )));
        }
        let n = value as usize;
        match self {
            Self::SeqLen => scenario.seq_len = n,
            Self::BsAntennas => scenario.bs_antennas = n,
            Self::SnrDb => scenario.snr_db = value,
            Self::RhoDb => scenario.rho_db = value,
            Self::JammerAntennas => {
                scenario.jammer_antennas = n;
                scenario.assumed_jammer_antennas = n;
            }
            Self::PowerIterations => scenario.power_iterations = n,
            Self::AssumedJammerAntennas => scenario.assumed_jammer_antennas = n,
        }
        Ok(())
    }
}

/// Output path of one ablation value: `roc.csv` becomes `roc_t_max_2.csv`.
pub fn ablation_output_path(base: &Path, param: AblationParam, value: f64) -> PathBuf {
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("roc");
    let tag = format!("{value}").replace('-', "m").replace('.', "p");
    base.with_file_name(format!("{stem}_{}_{tag}.csv", param.name()))
}

/// Re-runs the ROC experiment once per value of `vary`.
pub fn run_ablation(config: &ExperimentConfig, vary: &str, values: &[f64]) -> Result<Vec<(f64, RocResult)>> {
    let param = AblationParam::parse(vary)?;
    let threads = configured_threads()?;
    values
        .iter()
        .map(|&value| {
            let mut cfg = config.clone();
            param.apply(&mut cfg.scenario, value)?;
            cfg.output_path = config
                .output_path
                .as_deref()
                .map(|p| ablation_output_path(p, param, value));
            Ok((value, run_roc_experiment_with_threads(&cfg, threads)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(arrival: usize, trace: Vec<f64>, energy: f64) -> TrialRecord {
        TrialRecord {
            trial_index: 0,
            arrival,
            seq_energy: energy,
            traces: BTreeMap::from([(DetectorKind::Jass, trace)]),
        }
    }

    #[test]
    fn sweep_hand_case() {
        let recs = [record(1, vec![0.1 * 2.0, 0.9 * 2.0], 2.0)];
        let p = sweep_thresholds(&recs, DetectorKind::Jass, &[0.5]).unwrap();
        assert_eq!((p[0].fpr, p[0].fnr, p[0].ter), (0.0, 0.0, 0.0));
    }

    #[test]
    fn sweep_zero_threshold_detects_immediately() {
        let recs = [
            record(0, vec![0.3], 1.0),
            record(3, vec![0.0, 0.1, 0.2, 0.3], 1.0),
            record(2, vec![0.5, 0.1, 0.2], 1.0),
        ];
        let p = sweep_thresholds(&recs, DetectorKind::Jass, &[0.0, 1.0]).unwrap();
        assert!((p[0].fpr - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(p[0].fnr, 0.0);
        assert_eq!(p[1].fnr, 1.0);
    }

    #[test]
    fn sweep_matches_direct_first_crossing() {
        let mut rng = stream(1, Domain::Noise, 0, 0);
        let grid = default_alpha_grid();
        let recs: Vec<_> = (0..50)
            .map(|i| {
                let l = i % 9;
                let trace = (0..=l).map(|_| rand::Rng::random::<f64>(&mut rng) * 3.0).collect();
                record(l, trace, 3.0)
            })
            .collect();
        let pts = sweep_thresholds(&recs, DetectorKind::Jass, &grid).unwrap();
        for (p, &alpha) in pts.iter().zip(&grid) {
            let (mut fp, mut fneg) = (0, 0);
            for r in &recs {
                let o = crate::detectors::detect(&r.traces[&DetectorKind::Jass], alpha * r.seq_energy);
                match o.classification {
                    crate::detectors::Classification::FalsePositive => fp += 1,
                    crate::detectors::Classification::FalseNegative => fneg += 1,
                    _ => {}
                }
            }
            assert_eq!(p.fpr, fp as f64 / 50.0);
            assert_eq!(p.fnr, fneg as f64 / 50.0);
        }
    }

    #[test]
    fn sweep_rejects_empty_and_missing() {
        assert!(sweep_thresholds(&[], DetectorKind::Jass, &[0.5]).is_err());
        let recs = [record(0, vec![1.0], 1.0)];
        assert!(sweep_thresholds(&recs, DetectorKind::Bajass, &[0.5]).is_err());
    }

    #[test]
    fn sig6_format() {
        assert_eq!(format_sig6(0.0), "0");
        assert_eq!(format_sig6(0.375), "0.375000");
        assert_eq!(format_sig6(1.0), "1.00000");
        assert_eq!(format_sig6(0.0105), "0.0105000");
        assert_eq!(format_sig6(123456.7), "123457");
    }

    #[test]
    fn trial_is_deterministic() {
        let sc = ScenarioConfig {
            master_seed: 5,
            ..Default::default()
        };
        let a = run_trial(&sc, &[DetectorKind::Jass, DetectorKind::Unmitigated], 3).unwrap();
        let b = run_trial(&sc, &[DetectorKind::Jass, DetectorKind::Unmitigated], 3).unwrap();
        assert_eq!(a, b);
        for t in a.traces.values() {
            assert_eq!(t.len(), a.arrival + 1);
        }
    }

    #[test]
    fn fixed_arrival_is_used() {
        let sim = Simulator::new(ScenarioConfig::default(), vec![DetectorKind::Unmitigated])
            .unwrap()
            .with_fixed_arrival(Some(64));
        for t in 0..5 {
            assert_eq!(sim.trial(t).unwrap().arrival, 64);
        }
    }

    #[test]
    fn high_snr_no_jammer_peaks_at_arrival() {
        let sc = ScenarioConfig {
            jammer_kind: JammerKind::None,
            snr_db: 60.0,
            ..Default::default()
        };
        let sim = Simulator::new(sc, vec![DetectorKind::Jass]).unwrap().with_fixed_arrival(Some(40));
        for t in 0..5 {
            let rec = sim.trial(t).unwrap();
            let tr = &rec.traces[&DetectorKind::Jass];
            let argmax = (0..tr.len()).max_by(|&a, &b| tr[a].total_cmp(&tr[b])).unwrap();
            assert_eq!(argmax, rec.arrival);
        }
    }

    #[test]
    fn noiseless_mismatch_all_at_zero() {
        let cfg = ExperimentConfig {
            scenario: ScenarioConfig {
                jammer_kind: JammerKind::None,
                snr_db: f64::INFINITY,
                ..Default::default()
            },
            detectors: vec![DetectorKind::JassEvd],
            num_trials: 20,
            fixed_l: Some(64),
            ..Default::default()
        };
        let pmfs = mismatch_histograms(&cfg, 0.99, &[JammerKind::None], 1).unwrap();
        assert_eq!(pmfs[0].counts.len(), 65);
        assert_eq!(pmfs[0].counts[0], 20);
    }

    #[test]
    fn empty_mismatch_marker() {
        let pmf = MismatchPmf {
            jammer: JammerKind::Barrage,
            detector: DetectorKind::Jass,
            counts: vec![0; 5],
            false_negatives: 7,
        };
        assert_eq!(mismatch_csv(&[pmf]), "jammer,detector,mismatch,count,frequency\nbarrage,jass,empty,0,0\n");
    }

    #[test]
    fn ablation_names() {
        for n in ["k", "b", "snr_db", "rho_db", "i", "t_max", "i_hat"] {
            assert_eq!(AblationParam::parse(n).unwrap().name(), n);
        }
        assert!(matches!(AblationParam::parse("gamma"), Err(Error::UnknownParameter(_))));
        let mut sc = ScenarioConfig::default();
        AblationParam::JammerAntennas.apply(&mut sc, 2.0).unwrap();
        assert_eq!((sc.jammer_antennas, sc.assumed_jammer_antennas), (2, 2));
        assert!(AblationParam::SeqLen.apply(&mut sc, 2.5).is_err());
        assert_eq!(
            ablation_output_path(Path::new("out/roc.csv"), AblationParam::SnrDb, -2.5),
            PathBuf::from("out/roc_snr_db_m2p5.csv")
        );
    }

    #[test]
    fn config_validation() {
        let mut cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        cfg.alpha_grid = vec![0.5, 0.25];
        assert!(cfg.validate().is_err());
        cfg.alpha_grid = vec![0.5, 1.5];
        assert!(cfg.validate().is_err());
        cfg.alpha_grid = default_alpha_grid();
        cfg.num_trials = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = ExperimentConfig {
            fixed_l: Some(64),
            ..Default::default()
        };
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&text).unwrap(), cfg);
        let short: ExperimentConfig =
            serde_json::from_str(r#"{"scenario": {"B": 8, "I": 2, "I_hat": 2, "K": 16, "t_max": 4, "snr_db": 0, "rho_db": 30, "jammer_kind": "barrage", "channel_source": "rayleigh_iid", "master_seed": 1}, "fixed_L": 64}"#)
                .unwrap();
        assert_eq!(short.scenario.bs_antennas, 8);
        assert_eq!(short.fixed_l, Some(64));
        assert_eq!(short.num_trials, 2000);
    }
}
