//! Synchronization sequences, channels, arrival times and the receive stream.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jammers::{jammer_init, jammer_step, JammerKind, JammerSpec, UeHistory};
use crate::linalg::{frob_norm_sq, norm_sq, CMatrix, C64};
use crate::rng::{complex_normal, complex_normal_vec, keyed_stream, StreamRng};

/// Pre-shared secret from which synchronization sequences are derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Secret(u128);

impl Secret {
    pub fn new(state: u128) -> Result<Self> {
        if state == 0 {
            Err(Error::ZeroSecret)
        } else {
            Ok(Self(state))
        }
    }

    pub fn state(self) -> u128 {
        self.0
    }

    /// The two 64-bit words of the xorshift128+ state, `(s[0], s[1])`.
    pub fn words(self) -> (u64, u64) {
        (self.0 as u64, (self.0 >> 64) as u64)
    }

    pub fn from_words(s0: u64, s1: u64) -> Result<Self> {
        Self::new(u128::from(s0) | (u128::from(s1) << 64))
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let v: u128 = rng.random();
            if v != 0 {
                return Self(v);
            }
        }
    }
}

/// One xorshift128+ step (shift triple 23/18/5) on the secret state.
pub fn next_secret(secret: Secret) -> Result<Secret> {
    let (s0, s1) = secret.words();
    if s0 == 0 && s1 == 0 {
        return Err(Error::ZeroSecret);
    }
    let mut x = s0;
    let y = s1;
    x ^= x << 23;
    let new1 = x ^ y ^ (x >> 18) ^ (y >> 5);
    Secret::from_words(y, new1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyncSequence {
    values: Vec<C64>,
    energy: f64,
}

impl SyncSequence {
    pub fn new(values: Vec<C64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "sequence length must be at least 2, got {}",
                values.len()
            )));
        }
        if values.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidArgument("sequence entries must be finite".into()));
        }
        let energy = norm_sq(&values);
        Ok(Self { values, energy })
    }

    /// `len` i.i.d. CN(0,1) entries from `rng`.
    pub fn from_rng<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Result<Self> {
        Self::new(complex_normal_vec(rng, len))
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `||s||^2`.
    pub fn energy(&self) -> f64 {
        self.energy
    }
}

const SEQUENCE_DOMAIN: u64 = 0x7365_7175_656e_6365;

/// Expands a secret into `len` CN(0,1) entries with a ChaCha8 stream keyed by the secret.
pub fn derive_sync_sequence(secret: Secret, len: usize) -> Result<SyncSequence> {
    let (s0, s1) = secret.words();
    let mut rng = keyed_stream([s0, s1, SEQUENCE_DOMAIN, len as u64]);
    SyncSequence::from_rng(&mut rng, len)
}

/// Geometric arrival time on `{0, 1, ...}` with `P(L = l) = p (1 - p)^l`,
/// sampled by inverting the CDF on one uniform draw.
pub fn sample_arrival<R: Rng + ?Sized>(p: f64, rng: &mut R) -> Result<usize> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidArgument(format!("arrival probability {p} outside (0, 1]")));
    }
    // uniform on (0, 1]
    let u = 1.0 - rng.random::<f64>();
    if p == 1.0 {
        return Ok(0);
    }
    Ok((u.ln() / (1.0 - p).ln()).floor() as usize)
}

/// UE channel `h` (length B) and jammer channel `J` (B x I; I may be zero).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h: Vec<C64>,
    pub j: CMatrix,
}

impl ChannelRealization {
    pub fn new(h: Vec<C64>, j: CMatrix) -> Result<Self> {
        if h.is_empty() || j.rows() != h.len() {
            return Err(Error::dims(
                "channel",
                format!("h has {} entries, J is {:?}", h.len(), j.shape()),
            ));
        }
        Ok(Self { h, j })
    }

    pub fn bs_antennas(&self) -> usize {
        self.h.len()
    }

    pub fn jammer_antennas(&self) -> usize {
        self.j.cols()
    }

    /// Rescales to `||h||^2 = B` and `||J||_F^2 = B I`.
    pub fn normalized(&self) -> Result<Self> {
        let b = self.bs_antennas() as f64;
        let hn = norm_sq(&self.h);
        if hn == 0.0 {
            return Err(Error::InvalidArgument("cannot normalize a zero UE channel".into()));
        }
        let h_scale = (b / hn).sqrt();
        let h = self.h.iter().map(|z| z * h_scale).collect();
        let j = if self.jammer_antennas() == 0 {
            self.j.clone()
        } else {
            let jn = frob_norm_sq(&self.j);
            if jn == 0.0 {
                return Err(Error::InvalidArgument("cannot normalize a zero jammer channel".into()));
            }
            self.j.scale_real((b * self.jammer_antennas() as f64 / jn).sqrt())
        };
        Ok(Self { h, j })
    }
}

/// i.i.d. CN(0,1) Rayleigh channels.
pub fn draw_rayleigh_channel<R: Rng + ?Sized>(
    bs_antennas: usize,
    jammer_antennas: usize,
    rng: &mut R,
) -> Result<ChannelRealization> {
    if bs_antennas == 0 || jammer_antennas >= bs_antennas {
        return Err(Error::InvalidArgument(format!(
            "need B >= 1 and I < B, got B={bs_antennas}, I={jammer_antennas}"
        )));
    }
    let h = complex_normal_vec(rng, bs_antennas);
    let j = CMatrix::random_normal(bs_antennas, jammer_antennas, rng);
    ChannelRealization::new(h, j)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelRecord {
    h: Vec<[f64; 2]>,
    #[serde(rename = "J")]
    j: Vec<Vec<[f64; 2]>>,
}

fn pairs_to_complex(v: &[[f64; 2]]) -> Vec<C64> {
    v.iter().map(|&[re, im]| C64::new(re, im)).collect()
}

fn complex_to_pairs(v: &[C64]) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

/// Reads a channel file: one JSON object per line with `h` (array of
/// `[re, im]`) and `J` (array of columns, each an array of `[re, im]`).
/// Blank lines are skipped.
pub fn load_channel_file(path: impl AsRef<Path>, normalize: bool) -> Result<Vec<ChannelRealization>> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let mut out: Vec<ChannelRealization> = Vec::new();
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ChannelRecord = serde_json::from_str(&line).map_err(|e| parse_err(line_no, e.to_string()))?;
        let h = pairs_to_complex(&record.h);
        let columns: Vec<Vec<C64>> = record.j.iter().map(|c| pairs_to_complex(c)).collect();
        let j = CMatrix::from_columns(h.len(), &columns)
            .map_err(|_| parse_err(line_no, format!("every J column must have {} entries", h.len())))?;
        let chan = ChannelRealization::new(h, j).map_err(|e| parse_err(line_no, e.to_string()))?;
        if chan.h.iter().chain(chan.j.as_slice()).any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(parse_err(line_no, "non-finite channel entry".into()));
        }
        if let Some(first) = out.first() {
            if first.j.shape() != chan.j.shape() {
                return Err(parse_err(
                    line_no,
                    format!(
                        "record is B={} I={} but earlier records are B={} I={}",
                        chan.bs_antennas(),
                        chan.jammer_antennas(),
                        first.bs_antennas(),
                        first.jammer_antennas()
                    ),
                ));
            }
        }
        let chan = if normalize {
            chan.normalized().map_err(|e| parse_err(line_no, e.to_string()))?
        } else {
            chan
        };
        out.push(chan);
    }
    if out.is_empty() {
        return Err(Error::EmptyChannelFile(path.to_path_buf()));
    }
    Ok(out)
}

pub fn write_channel_file(path: impl AsRef<Path>, channels: &[ChannelRealization]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for chan in channels {
        let record = ChannelRecord {
            h: complex_to_pairs(&chan.h),
            j: (0..chan.jammer_antennas())
                .map(|c| complex_to_pairs(&chan.j.column(c)))
                .collect(),
        };
        serde_json::to_writer(&mut w, &record)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelSource {
    RayleighIid,
    File {
        path: PathBuf,
        #[serde(default = "default_true")]
        normalize: bool,
    },
}

fn default_true() -> bool {
    true
}

/// System parameters of one simulated scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(alias = "B")]
    pub bs_antennas: usize,
    #[serde(alias = "I")]
    pub jammer_antennas: usize,
    #[serde(alias = "I_hat")]
    pub assumed_jammer_antennas: usize,
    #[serde(alias = "K")]
    pub seq_len: usize,
    #[serde(alias = "t_max")]
    pub power_iterations: usize,
    /// Average receive SNR; the noise power is `10^(-snr_db / 10)`.
    pub snr_db: f64,
    /// Jammer transmit power in dB.
    pub rho_db: f64,
    pub jammer_kind: JammerKind,
    /// Geometric arrival parameter; `1 / K^2` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arrival_p: Option<f64>,
    pub channel_source: ChannelSource,
    pub master_seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            bs_antennas: 16,
            jammer_antennas: 4,
            assumed_jammer_antennas: 4,
            seq_len: 16,
            power_iterations: 4,
            snr_db: 0.0,
            rho_db: 30.0,
            jammer_kind: JammerKind::Barrage,
            arrival_p: None,
            channel_source: ChannelSource::RayleighIid,
            master_seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn noise_power(&self) -> f64 {
        10f64.powf(-self.snr_db / 10.0)
    }

    pub fn jammer_power(&self) -> f64 {
        10f64.powf(self.rho_db / 10.0)
    }

    pub fn arrival_probability(&self) -> f64 {
        self.arrival_p
            .unwrap_or_else(|| 1.0 / (self.seq_len as f64 * self.seq_len as f64))
    }

    pub fn jammer_spec(&self) -> JammerSpec {
        JammerSpec {
            kind: self.jammer_kind,
            antennas: self.jammer_antennas,
            power: self.jammer_power(),
            max_period: self.seq_len,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.bs_antennas == 0 {
            return bad("B must be at least 1".into());
        }
        if self.assumed_jammer_antennas == 0 || self.assumed_jammer_antennas >= self.bs_antennas {
            return bad(format!(
                "need 1 <= I_hat < B, got I_hat={} B={}",
                self.assumed_jammer_antennas, self.bs_antennas
            ));
        }
        if self.jammer_antennas >= self.bs_antennas {
            return bad(format!("need I < B, got I={} B={}", self.jammer_antennas, self.bs_antennas));
        }
        if self.seq_len < 2 {
            return bad(format!("K must be at least 2, got {}", self.seq_len));
        }
        if self.power_iterations == 0 {
            return bad("t_max must be at least 1".into());
        }
        let p = self.arrival_probability();
        if !(p > 0.0 && p <= 1.0) {
            return bad(format!("arrival_p {p} outside (0, 1]"));
        }
        if self.snr_db.is_nan() || self.rho_db.is_nan() {
            return bad("snr_db and rho_db must be numbers".into());
        }
        if self.jammer_kind != JammerKind::None && self.jammer_antennas == 0 {
            return bad(format!("{} jammer needs I >= 1", self.jammer_kind));
        }
        Ok(())
    }
}

/// Receive samples `y[0], ..., y[L+K-1]` as the columns of a `B x (L+K)` matrix.
#[derive(Debug, Clone)]
pub struct ReceiveStream {
    pub samples: CMatrix,
    /// Jammer transmit signal `w[k]` as columns of an `I x (L+K)` matrix.
    pub jammer_signal: CMatrix,
    pub arrival: usize,
    pub seq_len: usize,
}

impl ReceiveStream {
    pub fn len(&self) -> usize {
        self.samples.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.cols() == 0
    }

    /// `Y_l = [y[l], ..., y[l+K-1]]`.
    pub fn window(&self, start: usize) -> CMatrix {
        self.samples.columns(start, self.seq_len)
    }
}

/// Builds `y[k] = h s[k-L] + J w[k] + n[k]` sample by sample for
/// `k = 0 .. L+K-1`. The jammer is stepped in order and only sees the UE
/// signal up to the current sample.
pub fn synthesize_receive_stream(
    chan: &ChannelRealization,
    seq: &SyncSequence,
    arrival: usize,
    jammer: &JammerSpec,
    noise_power: f64,
    jammer_rng: StreamRng,
    noise_rng: &mut StreamRng,
) -> Result<ReceiveStream> {
    jammer.validate()?;
    if jammer.kind != JammerKind::None && jammer.antennas != chan.jammer_antennas() {
        return Err(Error::dims(
            "synthesize_receive_stream",
            format!(
                "jammer has {} antennas but J has {} columns",
                jammer.antennas,
                chan.jammer_antennas()
            ),
        ));
    }
    if !(noise_power >= 0.0) {
        return Err(Error::InvalidArgument(format!("noise power {noise_power} must be >= 0")));
    }
    let b = chan.bs_antennas();
    let n_ant = chan.jammer_antennas();
    let horizon = arrival + seq.len();
    let noise_amp = noise_power.sqrt();
    let mut samples = CMatrix::zeros(b, horizon);
    let mut jammer_signal = CMatrix::zeros(n_ant, horizon);
    let mut state = jammer_init(jammer, jammer_rng);
    let zero = C64::new(0.0, 0.0);

    for k in 0..horizon {
        let ue = if k >= arrival { seq.values()[k - arrival] } else { zero };
        let w = if jammer.kind == JammerKind::None {
            vec![zero; n_ant]
        } else {
            jammer_step(jammer, &mut state, k, arrival, &UeHistory::at(seq, k, arrival))
        };
        jammer_signal.set_column(k, &w);
        for r in 0..b {
            let mut y = chan.h[r] * ue;
            for (a, wa) in chan.j.row(r).iter().zip(&w) {
                y += a * wa;
            }
            if noise_amp > 0.0 {
                y += complex_normal(noise_rng) * noise_amp;
            }
            samples[(r, k)] = y;
        }
    }
    Ok(ReceiveStream {
        samples,
        jammer_signal,
        arrival,
        seq_len: seq.len(),
    })
}
