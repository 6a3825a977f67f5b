//! Raw-signal preprocessing: FIR notch and band-pass filters, and sliding
//! RMS windows that turn multichannel recordings into labeled feature columns.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 4000.0;
pub const DEFAULT_WINDOW_MS: f64 = 300.0;
pub const DEFAULT_SLIDE_MS: f64 = 100.0;

/// Multichannel time series, one row per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalMatrix<T: Real> {
    data: Matrix<T>,
    sample_rate_hz: T,
}

impl<T: Real> SignalMatrix<T> {
    pub fn new(data: Matrix<T>, sample_rate_hz: T) -> Result<Self> {
        if !(sample_rate_hz > T::zero() && sample_rate_hz.is_finite()) {
            return Err(Error::Parameter(format!("sample rate must be positive, got {sample_rate_hz}")));
        }
        Ok(Self { data, sample_rate_hz })
    }

    pub fn channels(&self) -> usize {
        self.data.rows()
    }

    pub fn samples(&self) -> usize {
        self.data.cols()
    }

    pub fn sample_rate_hz(&self) -> T {
        self.sample_rate_hz
    }

    pub fn data(&self) -> &Matrix<T> {
        &self.data
    }

    /// Samples `[start, end)` of every channel.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.samples() {
            return Err(Error::Parameter(format!("invalid sample range {start}..{end}")));
        }
        let data = Matrix::from_fn(self.channels(), end - start, |c, t| self.data[(c, start + t)]);
        Ok(Self { data, sample_rate_hz: self.sample_rate_hz })
    }

    pub fn select_channels(&self, channels: &[usize]) -> Result<Self> {
        Ok(Self { data: self.data.select_rows(channels)?, sample_rate_hz: self.sample_rate_hz })
    }
}

/// Feature columns with per-window gesture label and repetition index.
///
/// Columns keep acquisition order; within a `(gesture, repetition)` block the
/// position of a column is its window index.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledWindows<T: Real> {
    pub features: Matrix<T>,
    pub labels: Vec<usize>,
    pub repetitions: Vec<usize>,
    pub day: usize,
}

impl<T: Real> LabeledWindows<T> {
    pub fn new(features: Matrix<T>, labels: Vec<usize>, repetitions: Vec<usize>, day: usize) -> Result<Self> {
        if labels.len() != features.cols() || repetitions.len() != features.cols() {
            return Err(Error::dim(
                "LabeledWindows::new",
                format!("{} labels and repetitions", features.cols()),
                format!("{} labels, {} repetitions", labels.len(), repetitions.len()),
            ));
        }
        Ok(Self { features, labels, repetitions, day })
    }

    pub fn n_channels(&self) -> usize {
        self.features.rows()
    }

    pub fn n_windows(&self) -> usize {
        self.features.cols()
    }

    /// Distinct gesture ids, ascending.
    pub fn gestures(&self) -> Vec<usize> {
        self.labels.iter().copied().collect::<BTreeSet<_>>().into_iter().collect()
    }

    /// Distinct repetition indices recorded for `gesture`, ascending.
    pub fn repetitions_of(&self, gesture: usize) -> Vec<usize> {
        self.labels
            .iter()
            .zip(&self.repetitions)
            .filter(|(&g, _)| g == gesture)
            .map(|(_, &r)| r)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// Column indices of one `(gesture, repetition)` block in window order.
    pub fn block(&self, gesture: usize, repetition: usize) -> Vec<usize> {
        (0..self.n_windows())
            .filter(|&i| self.labels[i] == gesture && self.repetitions[i] == repetition)
            .collect()
    }

    pub fn select(&self, idx: &[usize]) -> Result<Self> {
        Ok(Self {
            features: self.features.select_columns(idx)?,
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            repetitions: idx.iter().map(|&i| self.repetitions[i]).collect(),
            day: self.day,
        })
    }

    /// Same labels and bookkeeping with replaced features.
    pub fn with_features(&self, features: Matrix<T>) -> Result<Self> {
        if features.cols() != self.n_windows() {
            return Err(Error::dim("with_features", self.n_windows(), features.cols()));
        }
        Ok(Self { features, ..self.clone() })
    }

    /// Concatenates window streams; the result takes the first part's day.
    pub fn concat(parts: &[&Self]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::Parameter("nothing to concatenate".into()))?;
        let mats: Vec<&Matrix<T>> = parts.iter().map(|p| &p.features).collect();
        Ok(Self {
            features: Matrix::hstack(&mats)?,
            labels: parts.iter().flat_map(|p| p.labels.iter().copied()).collect(),
            repetitions: parts.iter().flat_map(|p| p.repetitions.iter().copied()).collect(),
            day: first.day,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FirFilter<T: Real> {
    pub taps: Vec<T>,
    pub description: String,
}

impl<T: Real> FirFilter<T> {
    pub fn new(taps: Vec<T>, description: impl Into<String>) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::Parameter("FIR filter needs at least one tap".into()));
        }
        if taps.iter().any(|t| !t.is_finite()) {
            return Err(Error::Parameter("FIR taps must be finite".into()));
        }
        Ok(Self { taps, description: description.into() })
    }

    /// `|H(e^{jω})|` at `freq_hz`, evaluated directly from the taps.
    pub fn magnitude_at(&self, freq_hz: f64, sample_rate_hz: f64) -> f64 {
        let w = 2.0 * PI * freq_hz / sample_rate_hz;
        let (mut re, mut im) = (0.0, 0.0);
        for (k, h) in self.taps.iter().enumerate() {
            let h = h.as_f64();
            re += h * (w * k as f64).cos();
            im -= h * (w * k as f64).sin();
        }
        re.hypot(im)
    }

    /// Gain in dB at `freq_hz`.
    pub fn gain_db(&self, freq_hz: f64, sample_rate_hz: f64) -> f64 {
        20.0 * self.magnitude_at(freq_hz, sample_rate_hz).log10()
    }
}

fn hamming(len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    (0..len)
        .map(|k| 0.54 - 0.46 * (2.0 * PI * k as f64 / (len - 1) as f64).cos())
        .collect()
}

fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Linear-phase FIR notch.
///
/// A conjugate zero pair sits exactly on `center_hz`; the remaining
/// `taps - 2` coefficients are a Hamming-window smoother that damps the
/// high-frequency gain of the zero pair. DC gain is normalized to one.
pub fn design_notch<T: Real>(center_hz: f64, sample_rate_hz: f64, taps: usize) -> Result<FirFilter<T>> {
    let nyquist = sample_rate_hz / 2.0;
    if !(sample_rate_hz > 0.0 && center_hz > 0.0 && center_hz < nyquist) {
        return Err(Error::Parameter(format!(
            "notch center {center_hz} Hz must lie in (0, {nyquist}) Hz"
        )));
    }
    if taps < 3 {
        return Err(Error::Parameter(format!("notch needs at least 3 taps, got {taps}")));
    }
    let w0 = 2.0 * PI * center_hz / sample_rate_hz;
    let pair = [1.0, -2.0 * w0.cos(), 1.0];
    let h = convolve(&pair, &hamming(taps - 2));
    let dc: f64 = h.iter().sum();
    FirFilter::new(
        h.into_iter().map(|v| T::lit(v / dc)).collect(),
        format!("notch {center_hz} Hz, {taps} taps @ {sample_rate_hz} Hz"),
    )
}

/// Hamming-windowed sinc band-pass, normalized to unit gain at mid-band.
pub fn design_bandpass<T: Real>(low_hz: f64, high_hz: f64, sample_rate_hz: f64, taps: usize) -> Result<FirFilter<T>> {
    let nyquist = sample_rate_hz / 2.0;
    if !(sample_rate_hz > 0.0 && low_hz > 0.0 && low_hz < high_hz && high_hz < nyquist) {
        return Err(Error::Parameter(format!(
            "band {low_hz}..{high_hz} Hz must satisfy 0 < low < high < {nyquist} Hz"
        )));
    }
    if taps == 0 {
        return Err(Error::Parameter("band-pass needs at least one tap".into()));
    }
    let fl = low_hz / sample_rate_hz;
    let fh = high_hz / sample_rate_hz;
    let mid = (taps - 1) as f64 / 2.0;
    let sinc = |x: f64| if x == 0.0 { 1.0 } else { (PI * x).sin() / (PI * x) };
    let win = hamming(taps);
    let raw: Vec<f64> = (0..taps)
        .map(|k| {
            let m = k as f64 - mid;
            win[k] * (2.0 * fh * sinc(2.0 * fh * m) - 2.0 * fl * sinc(2.0 * fl * m))
        })
        .collect();
    let probe = FirFilter { taps: raw.clone(), description: String::new() };
    let gain = probe.magnitude_at((low_hz + high_hz) / 2.0, sample_rate_hz);
    if gain == 0.0 {
        return Err(Error::Parameter("band-pass has zero gain at mid-band".into()));
    }
    FirFilter::new(
        raw.into_iter().map(|v| T::lit(v / gain)).collect(),
        format!("band-pass {low_hz}-{high_hz} Hz, {taps} taps @ {sample_rate_hz} Hz"),
    )
}

/// Causal per-channel convolution with zero history; output length equals input length.
pub fn apply_filter<T: Real>(filter: &FirFilter<T>, signal: &SignalMatrix<T>) -> SignalMatrix<T> {
    let (n, len) = (signal.channels(), signal.samples());
    let mut out = Matrix::zeros(n, len);
    for c in 0..n {
        let x = signal.data.row(c);
        let y = out.row_mut(c);
        for (t, yt) in y.iter_mut().enumerate() {
            let mut acc = T::zero();
            for (k, &h) in filter.taps.iter().enumerate().take(t + 1) {
                acc += h * x[t - k];
            }
            *yt = acc;
        }
    }
    SignalMatrix { data: out, sample_rate_hz: signal.sample_rate_hz }
}

/// Window length and hop in samples for the given durations.
pub fn window_geometry(sample_rate_hz: f64, window_ms: f64, slide_ms: f64) -> Result<(usize, usize)> {
    if !(window_ms > 0.0 && slide_ms > 0.0) {
        return Err(Error::Parameter(format!("window ({window_ms} ms) and slide ({slide_ms} ms) must be positive")));
    }
    let w = (window_ms * sample_rate_hz / 1000.0).round() as usize;
    let s = (slide_ms * sample_rate_hz / 1000.0).round() as usize;
    if w == 0 || s == 0 {
        return Err(Error::Parameter("window or slide rounds to zero samples".into()));
    }
    Ok((w, s))
}

/// Number of full windows of length `w` with hop `s` in `len` samples.
pub fn window_count(len: usize, w: usize, s: usize) -> Option<usize> {
    (w >= 1 && s >= 1 && w <= len).then(|| (len - w) / s + 1)
}

/// Majority label over a window; ties go to the label seen first.
fn majority_label(labels: &[usize]) -> usize {
    let mut counts: Vec<(usize, usize)> = Vec::new();
    for &l in labels {
        match counts.iter_mut().find(|(lab, _)| *lab == l) {
            Some((_, c)) => *c += 1,
            None => counts.push((l, 1)),
        }
    }
    let mut best = counts[0];
    for &(l, c) in &counts[1..] {
        if c > best.1 {
            best = (l, c);
        }
    }
    best.0
}

/// RMS of one contiguous segment. `labels` has one gesture id per sample.
pub fn rms_features<T: Real>(
    signal: &SignalMatrix<T>,
    labels: &[usize],
    window_ms: f64,
    slide_ms: f64,
) -> Result<LabeledWindows<T>> {
    if labels.len() != signal.samples() {
        return Err(Error::dim("rms_features", signal.samples(), labels.len()));
    }
    let (w, s) = window_geometry(signal.sample_rate_hz.as_f64(), window_ms, slide_ms)?;
    let count = window_count(signal.samples(), w, s).ok_or_else(|| {
        Error::Parameter(format!("signal of {} samples is shorter than one {w}-sample window", signal.samples()))
    })?;
    let inv_w = T::one() / T::from_count(w);
    let features = Matrix::from_fn(signal.channels(), count, |c, k| {
        let seg = &signal.data.row(c)[k * s..k * s + w];
        (seg.iter().map(|&v| v * v).sum::<T>() * inv_w).sqrt()
    });
    let window_labels = (0..count).map(|k| majority_label(&labels[k * s..k * s + w])).collect();
    LabeledWindows::new(features, window_labels, vec![0; count], 0)
}

/// Per-sample annotations of a raw recording.
///
/// Samples with a negative label are rest and are dropped before windowing.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SampleTags {
    pub labels: Vec<i64>,
    pub repetitions: Vec<usize>,
    pub trials: Vec<i64>,
}

/// Splits the recording into contiguous contraction segments (same trial id,
/// non-rest label), windows each segment separately and concatenates.
pub fn rms_features_by_trial<T: Real>(
    signal: &SignalMatrix<T>,
    tags: &SampleTags,
    window_ms: f64,
    slide_ms: f64,
    day: usize,
) -> Result<LabeledWindows<T>> {
    let len = signal.samples();
    if tags.labels.len() != len || tags.repetitions.len() != len || tags.trials.len() != len {
        return Err(Error::dim("rms_features_by_trial", format!("{len} tags per column"), "mismatched tag columns"));
    }
    let mut parts = Vec::new();
    let mut t = 0;
    while t < len {
        if tags.labels[t] < 0 {
            t += 1;
            continue;
        }
        let start = t;
        while t < len && tags.labels[t] >= 0 && tags.trials[t] == tags.trials[start] {
            t += 1;
        }
        let seg = signal.slice(start, t)?;
        let labels: Vec<usize> = tags.labels[start..t].iter().map(|&l| l as usize).collect();
        let mut win = rms_features(&seg, &labels, window_ms, slide_ms)
            .map_err(|e| Error::Data(format!("trial {} at sample {start}: {e}", tags.trials[start])))?;
        win.repetitions = vec![tags.repetitions[start]; win.n_windows()];
        win.day = day;
        parts.push(win);
    }
    let refs: Vec<&LabeledWindows<T>> = parts.iter().collect();
    LabeledWindows::concat(&refs).map_err(|_| Error::Data("recording contains no contraction samples".into()))
}

/// Notch then band-pass, with the acquisition defaults (50 Hz notch with 10
/// taps, 2 Hz–1 kHz band-pass with 15 taps).
pub fn preprocess<T: Real>(signal: &SignalMatrix<T>) -> Result<SignalMatrix<T>> {
    let fs = signal.sample_rate_hz.as_f64();
    let notch = design_notch(50.0, fs, 10)?;
    let band = design_bandpass(2.0, 1000.0_f64.min(0.45 * fs), fs, 15)?;
    Ok(apply_filter(&band, &apply_filter(&notch, signal)))
}
