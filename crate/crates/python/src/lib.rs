//! Python bindings for `jass-core`.
//!
//! Matrices cross the boundary as lists of rows of Python `complex` values.

use std::collections::BTreeMap;
use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use jass_core::detectors::{window_statistic, DetectorParams, Projection};
use jass_core::harness::{
    self, default_alpha_grid, mismatch_histograms, ExperimentConfig, RocPoint, Simulator,
};
use jass_core::linalg::{self, CMatrix};
use jass_core::rng::{stream, Domain};
use jass_core::signal::{self, ChannelSource, ScenarioConfig, Secret, SyncSequence};
use jass_core::{DetectorKind, Error, JammerKind};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(py_err)
}

fn to_matrix(rows: Vec<Vec<Complex64>>) -> PyResult<CMatrix> {
    CMatrix::from_rows(&rows).map_err(py_err)
}

fn from_matrix(m: &CMatrix) -> Vec<Vec<Complex64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

fn detectors(names: Vec<String>) -> PyResult<Vec<DetectorKind>> {
    names.iter().map(|n| parse(n)).collect()
}

/// Simulation scenario. Defaults are B=16, I=I_hat=4, K=16, t_max=4,
/// SNR 0 dB and a 30 dB barrage jammer.
#[pyclass(module = "jass", skip_from_py_object)]
struct Scenario {
    inner: ScenarioConfig,
}

#[pymethods]
impl Scenario {
    #[new]
    #[pyo3(signature = (
        b=16, i=4, i_hat=4, k=16, t_max=4, snr_db=0.0, rho_db=30.0, jammer="barrage",
        arrival_p=None, seed=0, channel_file=None, normalize_channels=true
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        b: usize,
        i: usize,
        i_hat: usize,
        k: usize,
        t_max: usize,
        snr_db: f64,
        rho_db: f64,
        jammer: &str,
        arrival_p: Option<f64>,
        seed: u64,
        channel_file: Option<PathBuf>,
        normalize_channels: bool,
    ) -> PyResult<Self> {
        let inner = ScenarioConfig {
            bs_antennas: b,
            jammer_antennas: i,
            assumed_jammer_antennas: i_hat,
            seq_len: k,
            power_iterations: t_max,
            snr_db,
            rho_db,
            jammer_kind: parse(jammer)?,
            arrival_p,
            channel_source: match channel_file {
                Some(path) => ChannelSource::File {
                    path,
                    normalize: normalize_channels,
                },
                None => ChannelSource::RayleighIid,
            },
            master_seed: seed,
        };
        inner.validate().map_err(py_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner: ScenarioConfig = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        inner.validate().map_err(py_err)?;
        Ok(Self { inner })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[getter]
    fn b(&self) -> usize {
        self.inner.bs_antennas
    }
    #[getter]
    fn i(&self) -> usize {
        self.inner.jammer_antennas
    }
    #[getter]
    fn i_hat(&self) -> usize {
        self.inner.assumed_jammer_antennas
    }
    #[getter]
    fn k(&self) -> usize {
        self.inner.seq_len
    }
    #[getter]
    fn t_max(&self) -> usize {
        self.inner.power_iterations
    }
    #[getter]
    fn snr_db(&self) -> f64 {
        self.inner.snr_db
    }
    #[getter]
    fn rho_db(&self) -> f64 {
        self.inner.rho_db
    }
    #[getter]
    fn jammer(&self) -> &'static str {
        self.inner.jammer_kind.as_str()
    }
    #[getter]
    fn seed(&self) -> u64 {
        self.inner.master_seed
    }
    #[getter]
    fn noise_power(&self) -> f64 {
        self.inner.noise_power()
    }

    fn __repr__(&self) -> String {
        let s = &self.inner;
        format!(
            "Scenario(b={}, i={}, i_hat={}, k={}, t_max={}, snr_db={}, rho_db={}, jammer='{}', seed={})",
            s.bs_antennas,
            s.jammer_antennas,
            s.assumed_jammer_antennas,
            s.seq_len,
            s.power_iterations,
            s.snr_db,
            s.rho_db,
            s.jammer_kind,
            s.master_seed
        )
    }
}

/// Detector traces of one Monte-Carlo trial.
#[pyclass(module = "jass", skip_from_py_object)]
struct Trial {
    inner: harness::TrialRecord,
}

#[pymethods]
impl Trial {
    #[getter]
    fn trial_index(&self) -> u64 {
        self.inner.trial_index
    }
    /// Arrival time L of the sequence.
    #[getter]
    fn arrival(&self) -> usize {
        self.inner.arrival
    }
    #[getter]
    fn seq_energy(&self) -> f64 {
        self.inner.seq_energy
    }
    /// Mapping from detector name to the statistic of windows 0..=L.
    #[getter]
    fn traces(&self) -> BTreeMap<String, Vec<f64>> {
        self.inner
            .traces
            .iter()
            .map(|(k, v)| (k.as_str().to_string(), v.clone()))
            .collect()
    }

    fn __repr__(&self) -> String {
        format!("Trial(index={}, arrival={})", self.inner.trial_index, self.inner.arrival)
    }
}

fn simulator(scenario: &Scenario, names: Vec<String>, fixed_l: Option<usize>) -> PyResult<Simulator> {
    Ok(Simulator::new(scenario.inner.clone(), detectors(names)?)
        .map_err(py_err)?
        .with_fixed_arrival(fixed_l))
}

#[pyfunction]
#[pyo3(signature = (scenario, detectors, trial_index, fixed_l=None))]
fn run_trial(scenario: PyRef<'_, Scenario>, detectors: Vec<String>, trial_index: u64, fixed_l: Option<usize>) -> PyResult<Trial> {
    let sim = simulator(&scenario, detectors, fixed_l)?;
    Ok(Trial {
        inner: sim.trial(trial_index).map_err(py_err)?,
    })
}

fn roc_tuples(points: &[RocPoint]) -> Vec<(f64, f64, f64, f64)> {
    points.iter().map(|p| (p.alpha, p.fpr, p.fnr, p.ter)).collect()
}

/// `(alpha, fpr, fnr, ter)` for each threshold, from stored trials.
#[pyfunction]
#[pyo3(signature = (trials, detector, alpha_grid=None))]
fn sweep_thresholds(
    trials: Vec<PyRef<'_, Trial>>,
    detector: &str,
    alpha_grid: Option<Vec<f64>>,
) -> PyResult<Vec<(f64, f64, f64, f64)>> {
    let records: Vec<_> = trials.iter().map(|t| t.inner.clone()).collect();
    let grid = alpha_grid.unwrap_or_else(default_alpha_grid);
    let points = harness::sweep_thresholds(&records, parse(detector)?, &grid).map_err(py_err)?;
    Ok(roc_tuples(&points))
}

/// Monte-Carlo ROC experiment. Returns `{detector: [(alpha, fpr, fnr, ter), ...]}`
/// and writes CSV plus JSON sidecar when `output_path` is given.
#[pyfunction]
#[pyo3(signature = (scenario, detectors, num_trials=2000, alpha_grid=None, fixed_l=None, output_path=None, threads=None, conjugate_transpose=false))]
#[allow(clippy::too_many_arguments)]
fn roc(
    py: Python<'_>,
    scenario: PyRef<'_, Scenario>,
    detectors: Vec<String>,
    num_trials: usize,
    alpha_grid: Option<Vec<f64>>,
    fixed_l: Option<usize>,
    output_path: Option<PathBuf>,
    threads: Option<usize>,
    conjugate_transpose: bool,
) -> PyResult<BTreeMap<String, Vec<(f64, f64, f64, f64)>>> {
    let config = ExperimentConfig {
        scenario: scenario.inner.clone(),
        detectors: self::detectors(detectors)?,
        alpha_grid: alpha_grid.unwrap_or_else(default_alpha_grid),
        num_trials,
        output_path,
        fixed_l,
        projection: if conjugate_transpose {
            Projection::ConjugateTranspose
        } else {
            Projection::Pseudoinverse
        },
    };
    let threads = match threads {
        Some(n) => n,
        None => harness::configured_threads().map_err(py_err)?,
    };
    let result = py
        .detach(|| harness::run_roc_experiment_with_threads(&config, threads))
        .map_err(py_err)?;
    Ok(result
        .curves
        .iter()
        .map(|(k, c)| (k.as_str().to_string(), roc_tuples(c)))
        .collect())
}

/// Mismatch histogram `L - l_hat` per jammer kind at one threshold.
/// Returns `{(jammer, detector): counts}` where `counts[d]` is the number of
/// trials detected with mismatch `d`.
#[pyfunction]
#[pyo3(signature = (scenario, detectors, jammers, fixed_l=64, alpha=0.25, num_trials=5000))]
fn mismatch(
    py: Python<'_>,
    scenario: PyRef<'_, Scenario>,
    detectors: Vec<String>,
    jammers: Vec<String>,
    fixed_l: usize,
    alpha: f64,
    num_trials: usize,
) -> PyResult<BTreeMap<(String, String), Vec<u64>>> {
    let config = ExperimentConfig {
        scenario: scenario.inner.clone(),
        detectors: self::detectors(detectors)?,
        num_trials,
        fixed_l: Some(fixed_l),
        ..Default::default()
    };
    let jammers: Vec<JammerKind> = jammers.iter().map(|j| parse(j)).collect::<PyResult<_>>()?;
    let threads = harness::configured_threads().map_err(py_err)?;
    let pmfs = py
        .detach(|| mismatch_histograms(&config, alpha, &jammers, threads))
        .map_err(py_err)?;
    Ok(pmfs
        .into_iter()
        .map(|p| ((p.jammer.as_str().to_string(), p.detector.as_str().to_string()), p.counts))
        .collect())
}

/// Statistic of one detector on a `B x K` window.
#[pyfunction]
#[pyo3(signature = (detector, window, sequence, i_hat=4, t_max=4, seed=0, conjugate_transpose=false))]
fn statistic(
    detector: &str,
    window: Vec<Vec<Complex64>>,
    sequence: Vec<Complex64>,
    i_hat: usize,
    t_max: usize,
    seed: u64,
    conjugate_transpose: bool,
) -> PyResult<f64> {
    let y = to_matrix(window)?;
    let seq = SyncSequence::new(sequence).map_err(py_err)?;
    let mut params = DetectorParams::new(i_hat, t_max);
    if conjugate_transpose {
        params.projection = Projection::ConjugateTranspose;
    }
    let mut rng = stream(seed, Domain::Detector, 0, 0);
    window_statistic(parse(detector)?, &y, &seq, &params, &mut rng).map_err(py_err)
}

/// Sequence of length `k` derived from a nonzero 128-bit secret.
#[pyfunction]
fn sync_sequence(secret: u128, k: usize) -> PyResult<Vec<Complex64>> {
    let secret = Secret::new(secret).map_err(py_err)?;
    Ok(signal::derive_sync_sequence(secret, k).map_err(py_err)?.values().to_vec())
}

/// Secret following `secret` in the chain.
#[pyfunction]
fn next_secret(secret: u128) -> PyResult<u128> {
    let secret = Secret::new(secret).map_err(py_err)?;
    Ok(signal::next_secret(secret).map_err(py_err)?.state())
}

/// Dominant eigenvectors of a PSD matrix by deflated power iteration; returns `B x num_vecs`.
#[pyfunction]
#[pyo3(signature = (matrix, num_vecs, t_max, seed=0))]
fn principal_subspace(matrix: Vec<Vec<Complex64>>, num_vecs: usize, t_max: usize, seed: u64) -> PyResult<Vec<Vec<Complex64>>> {
    let x = to_matrix(matrix)?;
    let mut rng = stream(seed, Domain::Detector, 0, 0);
    let a = linalg::principal_subspace(&x, num_vecs, t_max, &mut rng).map_err(py_err)?;
    Ok(from_matrix(&a))
}

/// Eigenvalues (descending) and eigenvectors (as columns) of a Hermitian matrix.
#[pyfunction]
fn hermitian_evd(matrix: Vec<Vec<Complex64>>) -> PyResult<(Vec<f64>, Vec<Vec<Complex64>>)> {
    let evd = linalg::exact_hermitian_evd(&to_matrix(matrix)?).map_err(py_err)?;
    Ok((evd.eigenvalues.clone(), from_matrix(&evd.eigenvectors)))
}

/// Per-sample jammer transmit energy over a stream with arrival `arrival`.
#[pyfunction]
#[pyo3(signature = (jammer, antennas, power, arrival, k, seed=0))]
fn jammer_energy_trace(jammer: &str, antennas: usize, power: f64, arrival: usize, k: usize, seed: u64) -> PyResult<Vec<f64>> {
    let spec = jass_core::JammerSpec::new(parse(jammer)?, antennas, power, k).map_err(py_err)?;
    jass_core::jammers::jammer_energy_trace(&spec, arrival, k, seed).map_err(py_err)
}

#[pymodule]
fn jass(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Scenario>()?;
    m.add_class::<Trial>()?;
    m.add_function(wrap_pyfunction!(run_trial, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_thresholds, m)?)?;
    m.add_function(wrap_pyfunction!(roc, m)?)?;
    m.add_function(wrap_pyfunction!(mismatch, m)?)?;
    m.add_function(wrap_pyfunction!(statistic, m)?)?;
    m.add_function(wrap_pyfunction!(sync_sequence, m)?)?;
    m.add_function(wrap_pyfunction!(next_secret, m)?)?;
    m.add_function(wrap_pyfunction!(principal_subspace, m)?)?;
    m.add_function(wrap_pyfunction!(hermitian_evd, m)?)?;
    m.add_function(wrap_pyfunction!(jammer_energy_trace, m)?)?;
    m.add("DETECTORS", DetectorKind::ALL.map(|k| k.as_str()).to_vec())?;
    m.add("JAMMERS", JammerKind::ALL.map(|k| k.as_str()).to_vec())?;
    Ok(())
}
