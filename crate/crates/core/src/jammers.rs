//! Adversary models behind one causal stepping interface.
//!
//! A jammer is stepped once per sample index `k` and only ever sees the UE
//! transmit signal up to and including `k` through [`UeHistory`]. Reading
//! further ahead is a contract violation and trips a debug assertion.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::rng::{complex_normal, keyed_stream, StreamRng};
use crate::signal::SyncSequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JammerKind {
    None,
    Barrage,
    Reactive,
    Spoofing,
    DelayedSpoofing,
    Erratic,
    AntennaSwitching,
}

impl JammerKind {
    pub const ALL: [JammerKind; 7] = [
        JammerKind::None,
        JammerKind::Barrage,
        JammerKind::Reactive,
        JammerKind::Spoofing,
        JammerKind::DelayedSpoofing,
        JammerKind::Erratic,
        JammerKind::AntennaSwitching,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            JammerKind::None => "none",
            JammerKind::Barrage => "barrage",
            JammerKind::Reactive => "reactive",
            JammerKind::Spoofing => "spoofing",
            JammerKind::DelayedSpoofing => "delayed_spoofing",
            JammerKind::Erratic => "erratic",
            JammerKind::AntennaSwitching => "antenna_switching",
        }
    }
}

impl fmt::Display for JammerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for JammerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        JammerKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown jammer kind `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JammerSpec {
    pub kind: JammerKind,
    /// Number of jammer transmit antennas.
    pub antennas: usize,
    /// Linear transmit power per antenna.
    pub power: f64,
    /// Upper bound of the uniform burst/period lengths (the sequence length).
    pub max_period: usize,
}

impl JammerSpec {
    pub fn new(kind: JammerKind, antennas: usize, power: f64, max_period: usize) -> Result<Self> {
        let spec = Self {
            kind,
            antennas,
            power,
            max_period,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn inert(antennas: usize) -> Self {
        Self {
            kind: JammerKind::None,
            antennas,
            power: 0.0,
            max_period: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind != JammerKind::None && self.antennas == 0 {
            return Err(Error::InvalidArgument(format!(
                "{} jammer needs at least one antenna",
                self.kind
            )));
        }
        if !(self.power >= 0.0 && self.power.is_finite()) {
            return Err(Error::InvalidArgument(format!("jammer power {} must be finite and >= 0", self.power)));
        }
        if self.max_period == 0 {
            return Err(Error::InvalidArgument("max_period must be at least 1".into()));
        }
        if self.kind == JammerKind::AntennaSwitching && self.antennas > 63 {
            return Err(Error::InvalidArgument("antenna switching supports at most 63 antennas".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Active,
    Silent,
}

#[derive(Debug, Clone)]
pub struct JammerState {
    pub phase: Phase,
    /// Samples left in the current phase; `None` means unbounded.
    pub remaining: Option<usize>,
    /// Antennas that transmit during the current period.
    pub antenna_mask: Vec<bool>,
    rng: StreamRng,
}

/// Causal view of the UE transmit signal as seen by the jammer at index `k`:
/// `s[0..=k]`, i.e. sequence entries `0 .. k - L` once transmission has begun.
#[derive(Debug, Clone, Copy)]
pub struct UeHistory<'a> {
    seq: &'a SyncSequence,
    revealed: usize,
}

impl<'a> UeHistory<'a> {
    pub fn at(seq: &'a SyncSequence, k: usize, arrival: usize) -> Self {
        Self {
            seq,
            revealed: (k + 1).saturating_sub(arrival).min(seq.len()),
        }
    }

    /// Number of sequence entries already transmitted.
    pub fn revealed(&self) -> usize {
        self.revealed
    }

    pub fn entry(&self, idx: usize) -> C64 {
        debug_assert!(
            idx < self.revealed,
            "jammer read sequence entry {idx} but only {} are causal",
            self.revealed
        );
        self.seq.values()[idx]
    }
}

fn uniform_period(rng: &mut StreamRng, max_period: usize) -> usize {
    rng.random_range(1..=max_period)
}

/// Uniform over the nonempty subsets of `antennas`.
fn random_mask(rng: &mut StreamRng, antennas: usize) -> Vec<bool> {
    let bits: u64 = rng.random_range(1..(1u64 << antennas));
    (0..antennas).map(|a| bits >> a & 1 == 1).collect()
}

pub fn jammer_init(spec: &JammerSpec, mut rng: StreamRng) -> JammerState {
    let all = vec![true; spec.antennas];
    match spec.kind {
        JammerKind::Erratic => {
            let phase = if rng.random::<bool>() { Phase::Active } else { Phase::Silent };
            let remaining = Some(uniform_period(&mut rng, spec.max_period));
            JammerState {
                phase,
                remaining,
                antenna_mask: all,
                rng,
            }
        }
        JammerKind::AntennaSwitching => {
            let remaining = Some(uniform_period(&mut rng, spec.max_period));
            let antenna_mask = random_mask(&mut rng, spec.antennas);
            JammerState {
                phase: Phase::Active,
                remaining,
                antenna_mask,
                rng,
            }
        }
        JammerKind::None => JammerState {
            phase: Phase::Silent,
            remaining: None,
            antenna_mask: vec![false; spec.antennas],
            rng,
        },
        _ => JammerState {
            phase: Phase::Active,
            remaining: None,
            antenna_mask: all,
            rng,
        },
    }
}

/// Jammer transmit vector `w[k]` (length = number of jammer antennas).
pub fn jammer_step(
    spec: &JammerSpec,
    state: &mut JammerState,
    k: usize,
    arrival: usize,
    history: &UeHistory<'_>,
) -> Vec<C64> {
    let zero = C64::new(0.0, 0.0);
    let n = spec.antennas;
    let amp = spec.power.sqrt();
    let seq_len = history.seq.len();
    let noise = |rng: &mut StreamRng| -> Vec<C64> { (0..n).map(|_| complex_normal(rng) * amp).collect() };

    match spec.kind {
        JammerKind::None => vec![zero; n],
        JammerKind::Barrage => noise(&mut state.rng),
        JammerKind::Reactive => {
            if (arrival..arrival + seq_len).contains(&k) {
                noise(&mut state.rng)
            } else {
                vec![zero; n]
            }
        }
        JammerKind::Spoofing => {
            if (arrival..arrival + seq_len).contains(&k) {
                vec![history.entry(k - arrival) * amp; n]
            } else {
                vec![zero; n]
            }
        }
        JammerKind::DelayedSpoofing => {
            if (arrival + 1..=arrival + seq_len).contains(&k) {
                vec![history.entry(k - arrival - 1) * amp; n]
            } else {
                vec![zero; n]
            }
        }
        JammerKind::Erratic => {
            if state.remaining == Some(0) {
                state.phase = match state.phase {
                    Phase::Active => Phase::Silent,
                    Phase::Silent => Phase::Active,
                };
                state.remaining = Some(uniform_period(&mut state.rng, spec.max_period));
            }
            state.remaining = state.remaining.map(|r| r - 1);
            match state.phase {
                Phase::Active => noise(&mut state.rng),
                Phase::Silent => vec![zero; n],
            }
        }
        JammerKind::AntennaSwitching => {
            if state.remaining == Some(0) {
                state.remaining = Some(uniform_period(&mut state.rng, spec.max_period));
                state.antenna_mask = random_mask(&mut state.rng, n);
            }
            state.remaining = state.remaining.map(|r| r - 1);
            let mut w = vec![zero; n];
            for (wi, &on) in w.iter_mut().zip(&state.antenna_mask) {
                if on {
                    *wi = complex_normal(&mut state.rng) * amp;
                }
            }
            w
        }
    }
}

/// Replays a jammer over `arrival + seq_len` samples and records `||w[k]||^2`.
/// The sequence and the jammer's randomness are both derived from `seed`.
pub fn jammer_energy_trace(spec: &JammerSpec, arrival: usize, seq_len: usize, seed: u64) -> Result<Vec<f64>> {
    spec.validate()?;
    let seq = SyncSequence::from_rng(&mut keyed_stream([seed, 0x7365_7100, 0, 0]), seq_len)?;
    let mut state = jammer_init(spec, keyed_stream([seed, 0x6a61_6d00, 0, 0]));
    Ok((0..arrival + seq_len)
        .map(|k| {
            let history = UeHistory::at(&seq, k, arrival);
            jammer_step(spec, &mut state, k, arrival, &history)
                .iter()
                .map(|z| z.norm_sqr())
                .sum()
        })
        .collect())
}
