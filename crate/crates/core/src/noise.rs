//! Seeded reference-noise sources and recorded-noise ingestion.
//!
//! All generators draw from an [`RngStream`], a ChaCha8 stream addressed by
//! `(seed, stream)`, so a trial's noise is reproducible on any platform.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, Open01, StandardNormal};

use crate::error::{Error, Result};

/// Deterministic random stream.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        RngStream { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }
}

/// Gaussian white noise.
pub fn gen_white(n: usize, mean: f64, variance: f64, rng: &mut RngStream) -> Result<Vec<f64>> {
    check_variance("white noise variance", variance)?;
    let sd = variance.sqrt();
    Ok((0..n).map(|_| mean + sd * rng.normal()).collect())
}

/// First-order autoregressive noise `x[k] = a·x[k-1] + w[k]` with
/// unit-variance Gaussian innovations and `x[-1] = 0`.
pub fn gen_ar1(n: usize, pole: f64, rng: &mut RngStream) -> Result<Vec<f64>> {
    if pole.is_nan() || pole.abs() >= 1.0 {
        return Err(Error::config(format!(
            "AR(1) pole must satisfy |a| < 1, got {pole}"
        )));
    }
    let mut prev = 0.0;
    Ok((0..n)
        .map(|_| {
            prev = pole * prev + rng.normal();
            prev
        })
        .collect())
}

/// Symmetric α-stable samples with characteristic function
/// `exp(-γ|t|^α)`.
///
/// Chambers–Mallows–Stuck transform with skewness zero: a uniform angle
/// `V ∈ (-π/2, π/2)` and a unit exponential `W` give a standard variate,
/// which is then scaled by `γ^(1/α)`.
pub fn gen_alpha_stable(n: usize, alpha: f64, gamma: f64, rng: &mut RngStream) -> Result<Vec<f64>> {
    check_alpha_stable(alpha, gamma)?;
    let scale = gamma.powf(1.0 / alpha);
    Ok((0..n)
        .map(|_| {
            let u: f64 = rng.rng.sample(Open01);
            let v = PI * (u - 0.5);
            let w: f64 = rng.rng.sample(Exp1);
            scale * standard_symmetric_stable(alpha, v, w)
        })
        .collect())
}

fn standard_symmetric_stable(alpha: f64, v: f64, w: f64) -> f64 {
    if alpha == 1.0 {
        return v.tan();
    }
    let head = (alpha * v).sin() / v.cos().powf(1.0 / alpha);
    let tail = (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha);
    head * tail
}

/// Piecewise white Gaussian noise whose variance jumps at `switch_at`.
pub fn gen_bursty(
    n: usize,
    var1: f64,
    var2: f64,
    switch_at: usize,
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    check_variance("bursty variance before switch", var1)?;
    check_variance("bursty variance after switch", var2)?;
    if switch_at > n {
        return Err(Error::config(format!(
            "bursty switch index {switch_at} exceeds length {n}"
        )));
    }
    let (sd1, sd2) = (var1.sqrt(), var2.sqrt());
    Ok((0..n)
        .map(|k| {
            let sd = if k < switch_at { sd1 } else { sd2 };
            sd * rng.normal()
        })
        .collect())
}

/// Real part of the empirical characteristic function, `(1/n) Σ cos(t·x_i)`.
pub fn empirical_cf(signal: &[f64], t: f64) -> Result<f64> {
    if signal.is_empty() {
        return Err(Error::config("empirical characteristic function of an empty signal"));
    }
    let sum: f64 = signal.iter().map(|x| (t * x).cos()).sum();
    Ok(sum / signal.len() as f64)
}

/// On-disk layout of a recorded noise file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseFormat {
    /// Mono WAV, 16-bit integer or 32-bit float PCM.
    PcmWav,
    /// One decimal sample per line.
    TextLines,
}

impl FromStr for NoiseFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pcm_wav" => Ok(NoiseFormat::PcmWav),
            "text_lines" => Ok(NoiseFormat::TextLines),
            other => Err(Error::config(format!("unknown noise file format `{other}`"))),
        }
    }
}

impl NoiseFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            NoiseFormat::PcmWav => "pcm_wav",
            NoiseFormat::TextLines => "text_lines",
        }
    }
}

/// Load a recorded noise sequence. Integer PCM is scaled to `[-1, 1]`.
pub fn load_noise(path: &Path, format: NoiseFormat) -> Result<Vec<f64>> {
    match format {
        NoiseFormat::TextLines => load_text(path),
        NoiseFormat::PcmWav => load_wav(path),
    }
}

fn ingest_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Ingest {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn load_text(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| ingest_err(path, e.to_string()))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|_| ingest_err(path, format!("line {}: `{line}` is not a number", i + 1)))?;
        if !v.is_finite() {
            return Err(ingest_err(path, format!("line {}: sample is not finite", i + 1)));
        }
        out.push(v);
    }
    Ok(out)
}

fn load_wav(path: &Path) -> Result<Vec<f64>> {
    let mut reader = hound::WavReader::open(path).map_err(|e| ingest_err(path, e.to_string()))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(ingest_err(
            path,
            format!("expected 1 channel, found {}", spec.channels),
        ));
    }
    match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| {
                s.map(|v| v as f64 / 32768.0)
                    .map_err(|e| ingest_err(path, e.to_string()))
            })
            .collect(),
        (hound::SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| {
                s.map_err(|e| ingest_err(path, e.to_string()))
                    .and_then(|v| {
                        if v.is_finite() {
                            Ok(v as f64)
                        } else {
                            Err(ingest_err(path, "sample is not finite"))
                        }
                    })
            })
            .collect(),
        (fmt, bits) => Err(ingest_err(
            path,
            format!("unsupported sample format {fmt:?} with {bits} bits per sample"),
        )),
    }
}

/// Declarative description of a reference-noise source.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSpec {
    White { mean: f64, variance: f64 },
    /// AR(1) driven by Gaussian innovations of the given variance.
    Ar1 { pole: f64, innovation_variance: f64 },
    AlphaStable { alpha: f64, gamma: f64 },
    /// `switch_at = None` switches at the midpoint of the generated run.
    Bursty {
        var1: f64,
        var2: f64,
        switch_at: Option<usize>,
    },
    /// Recorded noise; repeated cyclically when shorter than the run.
    /// `added_variance` adds white Gaussian background noise.
    File {
        path: PathBuf,
        format: NoiseFormat,
        added_variance: f64,
    },
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseSpec::White { mean, variance } => {
                if !mean.is_finite() {
                    return Err(Error::config("white noise mean must be finite"));
                }
                check_variance("white noise variance", variance)
            }
            NoiseSpec::Ar1 {
                pole,
                innovation_variance,
            } => {
                if pole.is_nan() || pole.abs() >= 1.0 {
                    return Err(Error::config(format!("AR(1) pole must satisfy |a| < 1, got {pole}")));
                }
                check_variance("AR(1) innovation variance", innovation_variance)
            }
            NoiseSpec::AlphaStable { alpha, gamma } => check_alpha_stable(alpha, gamma),
            NoiseSpec::Bursty { var1, var2, .. } => {
                check_variance("bursty variance before switch", var1)?;
                check_variance("bursty variance after switch", var2)
            }
            NoiseSpec::File { added_variance, .. } => {
                check_variance("added background variance", added_variance)
            }
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            NoiseSpec::White { .. } => "white",
            NoiseSpec::Ar1 { .. } => "ar1",
            NoiseSpec::AlphaStable { .. } => "alpha_stable",
            NoiseSpec::Bursty { .. } => "bursty",
            NoiseSpec::File { .. } => "file",
        }
    }

    /// Draw `n` samples. File sources are read on every call; callers
    /// running many trials should use [`NoiseSource`].
    pub fn generate(&self, n: usize, rng: &mut RngStream) -> Result<Vec<f64>> {
        NoiseSource::new(self)?.generate(n, rng)
    }
}

/// A [`NoiseSpec`] with any recorded file already loaded.
#[derive(Debug, Clone)]
pub struct NoiseSource {
    spec: NoiseSpec,
    recorded: Option<Vec<f64>>,
}

impl NoiseSource {
    pub fn new(spec: &NoiseSpec) -> Result<Self> {
        spec.validate()?;
        let recorded = match spec {
            NoiseSpec::File { path, format, .. } => {
                let data = load_noise(path, *format)?;
                if data.is_empty() {
                    return Err(ingest_err(path, "file contains no samples"));
                }
                Some(data)
            }
            _ => None,
        };
        Ok(NoiseSource {
            spec: spec.clone(),
            recorded,
        })
    }

    pub fn generate(&self, n: usize, rng: &mut RngStream) -> Result<Vec<f64>> {
        match self.spec {
            NoiseSpec::White { mean, variance } => gen_white(n, mean, variance, rng),
            NoiseSpec::Ar1 {
                pole,
                innovation_variance,
            } => {
                let mut x = gen_ar1(n, pole, rng)?;
                if innovation_variance != 1.0 {
                    let sd = innovation_variance.sqrt();
                    x.iter_mut().for_each(|v| *v *= sd);
                }
                Ok(x)
            }
            NoiseSpec::AlphaStable { alpha, gamma } => gen_alpha_stable(n, alpha, gamma, rng),
            NoiseSpec::Bursty {
                var1,
                var2,
                switch_at,
            } => gen_bursty(n, var1, var2, switch_at.unwrap_or(n / 2), rng),
            NoiseSpec::File { added_variance, .. } => {
                let data = self.recorded.as_deref().unwrap_or_default();
                let mut out: Vec<f64> = data.iter().copied().cycle().take(n).collect();
                if added_variance > 0.0 {
                    let background = gen_white(n, 0.0, added_variance, rng)?;
                    out.iter_mut().zip(background).for_each(|(x, b)| *x += b);
                }
                Ok(out)
            }
        }
    }
}

fn check_variance(what: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::config(format!("{what} must be finite and >= 0, got {v}")))
    }
}

fn check_alpha_stable(alpha: f64, gamma: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::config(format!("alpha must lie in (0, 2], got {alpha}")));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::config(format!("dispersion gamma must be > 0, got {gamma}")));
    }
    Ok(())
}
