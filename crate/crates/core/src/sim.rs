//! Synthetic multi-session data with known ground-truth drift.
//!
//! A session is a set of RMS feature windows drawn around per-gesture
//! prototypes. Later sessions are the reference windows pushed through a
//! known invertible channel-mixing matrix plus an offset and fresh noise,
//! so any alignment can be checked against the exact inverse transform.

use std::fmt;
use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{det, qr, svd, Matrix};
use crate::scalar::fmt_exact;
use crate::signal::LabeledWindows;

pub const DEFAULT_WITHIN_STD: f64 = 0.25;
const PROTOTYPE_RANGE: (f64, f64) = (1.0, 5.0);
const MIN_SEPARATION_STDS: f64 = 6.0;
const MAX_RESAMPLES: usize = 100;
const MIN_ABS_DET: f64 = 1e-3;

/// Cluster layout of the simulated gestures.
#[derive(Debug, Clone, PartialEq)]
pub struct GestureGeometry {
    pub n_channels: usize,
    pub n_gestures: usize,
    /// One prototype per gesture (`n_gestures × n_channels`).
    pub prototypes: Matrix<f64>,
    pub within_std: f64,
    pub reps_per_gesture: usize,
    pub windows_per_rep: usize,
}

/// Size parameters from which a [`GestureGeometry`] is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryParams {
    pub n_channels: usize,
    pub n_gestures: usize,
    pub within_std: f64,
    pub reps_per_gesture: usize,
    /// 28 windows = a 3 s contraction cut into 300 ms windows every 100 ms.
    pub windows_per_rep: usize,
}

impl Default for GeometryParams {
    fn default() -> Self {
        Self {
            n_channels: 8,
            n_gestures: 8,
            within_std: DEFAULT_WITHIN_STD,
            reps_per_gesture: 8,
            windows_per_rep: 28,
        }
    }
}

impl GestureGeometry {
    /// Draws prototypes uniformly in `[1, 5]` per channel, rejecting layouts
    /// where two prototypes are closer than six within-cluster deviations.
    pub fn random(params: &GeometryParams, seed: u64) -> Result<Self> {
        let p = params;
        if p.n_channels == 0 || p.n_gestures == 0 || p.reps_per_gesture == 0 || p.windows_per_rep == 0 {
            return Err(Error::Parameter("geometry counts must all be at least 1".into()));
        }
        if !(p.within_std >= 0.0 && p.within_std.is_finite()) {
            return Err(Error::Parameter(format!("within_std must be >= 0, got {}", p.within_std)));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..1000 {
            let prototypes = Matrix::from_fn(p.n_gestures, p.n_channels, |_, _| {
                rng.random_range(PROTOTYPE_RANGE.0..PROTOTYPE_RANGE.1)
            });
            let geom = Self {
                n_channels: p.n_channels,
                n_gestures: p.n_gestures,
                prototypes,
                within_std: p.within_std,
                reps_per_gesture: p.reps_per_gesture,
                windows_per_rep: p.windows_per_rep,
            };
            if geom.validate().is_ok() {
                return Ok(geom);
            }
        }
        Err(Error::Parameter(format!(
            "could not place {} prototypes {MIN_SEPARATION_STDS}σ apart in [1, 5]^{}",
            p.n_gestures, p.n_channels
        )))
    }

    pub fn min_prototype_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.n_gestures {
            for j in (i + 1)..self.n_gestures {
                let d: f64 = self
                    .prototypes
                    .row(i)
                    .iter()
                    .zip(self.prototypes.row(j))
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                best = best.min(d);
            }
        }
        best
    }

    pub fn validate(&self) -> Result<()> {
        if self.prototypes.shape() != (self.n_gestures, self.n_channels) {
            return Err(Error::dim(
                "GestureGeometry",
                format!("{}x{} prototypes", self.n_gestures, self.n_channels),
                format!("{:?}", self.prototypes.shape()),
            ));
        }
        if self.n_gestures > 1 && self.min_prototype_distance() < MIN_SEPARATION_STDS * self.within_std {
            return Err(Error::Parameter("prototypes are not separated by 6 within-cluster deviations".into()));
        }
        Ok(())
    }

    pub fn windows_per_day(&self) -> usize {
        self.n_gestures * self.reps_per_gesture * self.windows_per_rep
    }
}

/// Reference session: columns ordered by (gesture, repetition, window), each
/// `prototype + N(0, within_std²·I)` clipped at zero.
pub fn gen_reference(geom: &GestureGeometry, seed: u64) -> Result<LabeledWindows<f64>> {
    geom.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = geom.windows_per_day();
    let mut data = vec![0.0; geom.n_channels * total];
    let mut labels = Vec::with_capacity(total);
    let mut reps = Vec::with_capacity(total);
    let mut col = 0;
    for g in 0..geom.n_gestures {
        for r in 0..geom.reps_per_gesture {
            for _ in 0..geom.windows_per_rep {
                for c in 0..geom.n_channels {
                    let noise: f64 = if geom.within_std > 0.0 {
                        geom.within_std * rng.sample::<f64, _>(StandardNormal)
                    } else {
                        0.0
                    };
                    data[c * total + col] = (geom.prototypes[(g, c)] + noise).max(0.0);
                }
                labels.push(g);
                reps.push(r);
                col += 1;
            }
        }
    }
    LabeledWindows::new(Matrix::from_row_major(geom.n_channels, total, data)?, labels, reps, 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriftKind {
    Rotation,
    GeneralLinear,
    Gain,
    OffsetOnly,
}

impl FromStr for DriftKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "rotation" => Ok(Self::Rotation),
            "general-linear" => Ok(Self::GeneralLinear),
            "gain" => Ok(Self::Gain),
            "offset-only" => Ok(Self::OffsetOnly),
            other => Err(Error::Parameter(format!(
                "unknown drift kind {other:?} (rotation, general-linear, gain, offset-only)"
            ))),
        }
    }
}

impl fmt::Display for DriftKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Rotation => "rotation",
            Self::GeneralLinear => "general-linear",
            Self::Gain => "gain",
            Self::OffsetOnly => "offset-only",
        })
    }
}

/// Ground-truth session transform `x ↦ mixing·x + offset + N(0, noise_std²·I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftSpec {
    pub mixing: Matrix<f64>,
    pub offset: Vec<f64>,
    pub noise_std: f64,
    pub day_id: usize,
}

impl DriftSpec {
    pub fn identity(n: usize) -> Self {
        Self { mixing: Matrix::identity(n), offset: vec![0.0; n], noise_std: 0.0, day_id: 0 }
    }

    pub fn with_noise(mut self, noise_std: f64) -> Self {
        self.noise_std = noise_std;
        self
    }

    pub fn with_day(mut self, day_id: usize) -> Self {
        self.day_id = day_id;
        self
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = File::create(path)?;
        writeln!(f, "day,{}", self.day_id)?;
        writeln!(f, "noise_std,{}", fmt_exact(self.noise_std))?;
        for i in 0..self.mixing.rows() {
            let row: Vec<String> = self.mixing.row(i).iter().map(|&v| fmt_exact(v)).collect();
            writeln!(f, "mixing,{}", row.join(","))?;
        }
        let off: Vec<String> = self.offset.iter().map(|&v| fmt_exact(v)).collect();
        writeln!(f, "offset,{}", off.join(","))?;
        Ok(())
    }
}

fn gaussian_matrix(n: usize, rng: &mut ChaCha8Rng) -> Matrix<f64> {
    Matrix::from_fn(n, n, |_, _| rng.sample(StandardNormal))
}

/// Proper rotation (det = +1) from the QR factor of a Gaussian matrix.
fn random_rotation(n: usize, rng: &mut ChaCha8Rng) -> Result<Matrix<f64>> {
    let (mut q, _) = qr(&gaussian_matrix(n, rng))?;
    if det(&q)? < 0.0 {
        for i in 0..n {
            q[(i, 0)] = -q[(i, 0)];
        }
    }
    Ok(q)
}

/// Draws a drift of the given family for `n` channels.
///
/// * rotation: the polar factor of `(1 − m)·I + m·Q` for a random rotation
///   `Q`, so it stays orthogonal and moves from identity (`m = 0`) to `Q` (`m = 1`);
/// * general-linear: `I + m·G/√n` with Gaussian `G`, redrawn until `|det| > 1e-3`;
/// * gain: diagonal entries uniform in `[1 − m, 1 + m]`;
/// * offset-only: identity mixing and an offset of norm `m`.
pub fn make_drift(kind: DriftKind, magnitude: f64, n: usize, seed: u64) -> Result<DriftSpec> {
    if !(magnitude >= 0.0 && magnitude.is_finite()) {
        return Err(Error::Parameter(format!("drift magnitude must be >= 0, got {magnitude}")));
    }
    if n == 0 {
        return Err(Error::Parameter("drift needs at least one channel".into()));
    }
    if magnitude == 0.0 {
        return Ok(DriftSpec::identity(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spec = DriftSpec::identity(n);
    match kind {
        DriftKind::Rotation => {
            let q = random_rotation(n, &mut rng)?;
            let blend = Matrix::<f64>::identity(n).scale(1.0 - magnitude).add(&q.scale(magnitude));
            let s = svd(&blend)?;
            spec.mixing = s.u.dot(&s.vt);
        }
        DriftKind::GeneralLinear | DriftKind::Gain => {
            let mut accepted = None;
            for _ in 0..MAX_RESAMPLES {
                let m = if kind == DriftKind::Gain {
                    let gains: Vec<f64> =
                        (0..n).map(|_| rng.random_range(1.0 - magnitude..=1.0 + magnitude)).collect();
                    Matrix::diag(&gains)
                } else {
                    let scale = magnitude / (n as f64).sqrt();
                    Matrix::identity(n).add(&gaussian_matrix(n, &mut rng).scale(scale))
                };
                if det(&m)?.abs() > MIN_ABS_DET {
                    accepted = Some(m);
                    break;
                }
            }
            spec.mixing = accepted.ok_or_else(|| {
                Error::Parameter(format!("no invertible {kind} drift after {MAX_RESAMPLES} draws"))
            })?;
        }
        DriftKind::OffsetOnly => {
            let dir: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            spec.offset = dir.iter().map(|v| magnitude * v / norm).collect();
        }
    }
    Ok(spec)
}

/// Pushes every feature column through `spec`; labels and repetitions are kept.
/// Negative results are left as they are.
pub fn apply_drift(reference: &LabeledWindows<f64>, spec: &DriftSpec, seed: u64) -> Result<LabeledWindows<f64>> {
    let n = reference.n_channels();
    if spec.mixing.shape() != (n, n) || spec.offset.len() != n {
        return Err(Error::dim("apply_drift", format!("{n}x{n} mixing"), format!("{:?}", spec.mixing.shape())));
    }
    if !(spec.noise_std >= 0.0 && spec.noise_std.is_finite()) {
        return Err(Error::Parameter(format!("noise_std must be >= 0, got {}", spec.noise_std)));
    }
    let mut out = spec.mixing.dot(&reference.features).add_row_offsets(&spec.offset);
    if spec.noise_std > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, spec.noise_std).map_err(|e| Error::Parameter(e.to_string()))?;
        for j in 0..out.cols() {
            for i in 0..n {
                out[(i, j)] += noise.sample(&mut rng);
            }
        }
    }
    let mut day = reference.with_features(out)?;
    day.day = spec.day_id;
    Ok(day)
}

/// Seed for the noise stream of `day`, decorrelated from the drift seed `seed + day`.
pub fn noise_seed(seed: u64, day: usize) -> u64 {
    let mut z = seed.wrapping_add(day as u64).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A simulated multi-session dataset. `days[0]` is the undistorted reference (day 1).
#[derive(Debug, Clone)]
pub struct SimulatedDataset {
    pub geometry: GestureGeometry,
    pub days: Vec<LabeledWindows<f64>>,
    pub drifts: Vec<DriftSpec>,
}

/// Generates `n_days` sessions; day `d ≥ 2` uses drift seed `seed + d`.
pub fn simulate_days(
    params: &GeometryParams,
    n_days: usize,
    kind: DriftKind,
    magnitude: f64,
    noise_std: f64,
    seed: u64,
) -> Result<SimulatedDataset> {
    if n_days == 0 {
        return Err(Error::Parameter("need at least one day".into()));
    }
    let geometry = GestureGeometry::random(params, seed)?;
    let reference = gen_reference(&geometry, noise_seed(seed, 0))?;
    let mut days = vec![reference.clone()];
    let mut drifts = vec![DriftSpec::identity(geometry.n_channels).with_day(1)];
    for d in 2..=n_days {
        let spec = make_drift(kind, magnitude, geometry.n_channels, seed.wrapping_add(d as u64))?
            .with_noise(noise_std)
            .with_day(d);
        days.push(apply_drift(&reference, &spec, noise_seed(seed, d))?);
        drifts.push(spec);
    }
    Ok(SimulatedDataset { geometry, days, drifts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::{accuracy, svm_train, SvmParams};
    use crate::linalg::Lu;

    fn small() -> GeometryParams {
        GeometryParams { reps_per_gesture: 4, windows_per_rep: 10, ..Default::default() }
    }

    #[test]
    fn zero_spread_windows_equal_prototypes() {
        let p = GeometryParams { within_std: 0.0, ..small() };
        let geom = GestureGeometry::random(&p, 1).unwrap();
        let day = gen_reference(&geom, 2).unwrap();
        for j in 0..day.n_windows() {
            assert_eq!(day.features.col(j), geom.prototypes.row(day.labels[j]).to_vec());
        }
    }

    #[test]
    fn default_reference_shape_and_determinism() {
        let geom = GestureGeometry::random(&GeometryParams::default(), 3).unwrap();
        assert!(geom.min_prototype_distance() >= 6.0 * geom.within_std);
        let a = gen_reference(&geom, 4).unwrap();
        assert_eq!(a.features.shape(), (8, 8 * 8 * 28));
        assert!(a.features.as_slice().iter().all(|&v| v >= 0.0));
        assert_eq!(a, gen_reference(&geom, 4).unwrap());
    }

    #[test]
    fn zero_magnitude_is_identity() {
        for kind in [DriftKind::Rotation, DriftKind::GeneralLinear, DriftKind::Gain, DriftKind::OffsetOnly] {
            let s = make_drift(kind, 0.0, 8, 9).unwrap();
            assert_eq!(s.mixing, Matrix::identity(8));
            assert!(s.offset.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn drift_families_have_their_shape() {
        let r = make_drift(DriftKind::Rotation, 1.0, 8, 5).unwrap();
        assert!(r.mixing.transpose().dot(&r.mixing).max_abs_diff(&Matrix::identity(8)) < 1e-10);
        let half = make_drift(DriftKind::Rotation, 0.5, 8, 5).unwrap();
        assert!(half.mixing.transpose().dot(&half.mixing).max_abs_diff(&Matrix::identity(8)) < 1e-10);
        assert!(half.mixing.max_abs_diff(&Matrix::identity(8)) < r.mixing.max_abs_diff(&Matrix::identity(8)));

        let g = make_drift(DriftKind::GeneralLinear, 0.5, 8, 7).unwrap();
        assert!(det(&g.mixing).unwrap().abs() > 1e-3);

        let gain = make_drift(DriftKind::Gain, 0.3, 8, 7).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let v = gain.mixing[(i, j)];
                if i == j {
                    assert!((0.7..=1.3).contains(&v));
                } else {
                    assert_eq!(v, 0.0);
                }
            }
        }

        let off = make_drift(DriftKind::OffsetOnly, 2.0, 8, 7).unwrap();
        let norm = off.offset.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - 2.0).abs() < 1e-12);
        assert_eq!(off.mixing, Matrix::identity(8));

        assert!(make_drift(DriftKind::Gain, -1.0, 8, 0).is_err());
    }

    #[test]
    fn drift_kind_parsing() {
        assert_eq!("general-linear".parse::<DriftKind>().unwrap(), DriftKind::GeneralLinear);
        assert_eq!("offset_only".parse::<DriftKind>().unwrap(), DriftKind::OffsetOnly);
        assert_eq!(DriftKind::Gain.to_string(), "gain");
        assert!("shear".parse::<DriftKind>().is_err());
    }

    #[test]
    fn identity_drift_without_noise_is_a_no_op() {
        let geom = GestureGeometry::random(&small(), 1).unwrap();
        let day = gen_reference(&geom, 1).unwrap();
        let out = apply_drift(&day, &DriftSpec::identity(8).with_day(1), 0).unwrap();
        assert_eq!(out, day);
    }

    #[test]
    fn known_transform_is_invertible_oracle() {
        let geom = GestureGeometry::random(&small(), 2).unwrap();
        let day = gen_reference(&geom, 2).unwrap();
        for (kind, seed) in [(DriftKind::Rotation, 1), (DriftKind::GeneralLinear, 2), (DriftKind::Gain, 3)] {
            let mut spec = make_drift(kind, 0.8, 8, seed).unwrap();
            spec.offset = (0..8).map(|i| i as f64 - 3.5).collect();
            let out = apply_drift(&day, &spec, 0).unwrap();
            let inv = if kind == DriftKind::Rotation {
                spec.mixing.transpose()
            } else {
                Lu::new(&spec.mixing).unwrap().inverse().unwrap()
            };
            let back = inv.dot(&out.features.sub_row_offsets(&spec.offset));
            assert!(back.max_abs_diff(&day.features) < 1e-12, "{kind}");
            assert_eq!(out.labels, day.labels);
            assert_eq!(out.repetitions, day.repetitions);
        }
    }

    #[test]
    fn noise_is_reproducible_and_day_specific() {
        let geom = GestureGeometry::random(&small(), 3).unwrap();
        let day = gen_reference(&geom, 3).unwrap();
        let spec = DriftSpec::identity(8).with_noise(0.1);
        let a = apply_drift(&day, &spec, 11).unwrap();
        assert_eq!(a, apply_drift(&day, &spec, 11).unwrap());
        assert_ne!(a.features, apply_drift(&day, &spec, 12).unwrap().features);
        assert!(apply_drift(&day, &DriftSpec::identity(3), 0).is_err());
    }

    #[test]
    fn reference_is_classifiable_and_stays_so_after_drift() {
        let data = simulate_days(&GeometryParams::default(), 3, DriftKind::Rotation, 1.0, 0.0625, 42).unwrap();
        for day in [&data.days[0], &data.days[2]] {
            let train: Vec<usize> = (0..day.n_windows()).filter(|&j| day.repetitions[j] < 6).collect();
            let test: Vec<usize> = (0..day.n_windows()).filter(|&j| day.repetitions[j] >= 6).collect();
            let model = svm_train(&day.select(&train).unwrap(), &SvmParams::default()).unwrap();
            let held = day.select(&test).unwrap();
            let acc = accuracy(&model.predict(&held.features).unwrap(), &held.labels).unwrap();
            assert!(acc >= 0.95, "day {} accuracy {acc}", day.day);
        }
        let gain = simulate_days(&GeometryParams::default(), 2, DriftKind::Gain, 0.5, 0.0, 42).unwrap();
        let day = &gain.days[1];
        let model = svm_train(day, &SvmParams::default()).unwrap();
        assert!(accuracy(&model.predict(&day.features).unwrap(), &day.labels).unwrap() >= 0.95);
    }

    #[test]
    fn simulated_days_use_per_day_seeds() {
        let a = simulate_days(&small(), 4, DriftKind::GeneralLinear, 0.5, 0.01, 7).unwrap();
        assert_eq!(a.days.len(), 4);
        assert_eq!(a.days[3].day, 4);
        assert_eq!(a.drifts[2].mixing, make_drift(DriftKind::GeneralLinear, 0.5, 8, 10).unwrap().mixing);
        assert_ne!(a.drifts[1].mixing, a.drifts[2].mixing);
        let b = simulate_days(&small(), 4, DriftKind::GeneralLinear, 0.5, 0.01, 7).unwrap();
        assert_eq!(a.days, b.days);
    }
}
