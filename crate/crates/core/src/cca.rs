//! Canonical correlation analysis between a reference session and a new
//! session, and back-projection of new-session features into the reference
//! feature space.
//!
//! Fitting whitens both calibration blocks with `(C + εI)^{-1/2}`, takes the
//! SVD of the whitened cross-covariance `Ω = Cxx^{-1/2} Cxy Cyy^{-1/2} = U Σ Vᵀ`,
//! and maps the singular vectors back: `A = Cxx^{-1/2} U`, `B = Cyy^{-1/2} V`.
//! A new-session block `Y` is projected with `(Aᵀ)† Bᵀ (Y − μ_new) + μ_ref`.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{covariance, inv_sqrt_sym, pinv, svd, Matrix};
use crate::scalar::{fmt_exact, parse_real, Real};
use crate::signal::LabeledWindows;

/// Default ridge factor; the ridge added to a covariance `C` is
/// `ridge · trace(C) / n`.
pub const DEFAULT_RIDGE: f64 = 1e-12;

/// Default number of calibration repetitions per gesture.
pub const DEFAULT_CALIBRATION_REPS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CcaOptions<T> {
    /// Relative ridge factor (see [`DEFAULT_RIDGE`]).
    pub ridge: T,
    /// Mean-center each block before fitting and re-add the reference mean
    /// after projection. Without it a pure offset between sessions cannot be
    /// undone by the linear map.
    pub center: bool,
}

impl<T: Real> Default for CcaOptions<T> {
    fn default() -> Self {
        Self { ridge: T::lit(DEFAULT_RIDGE), center: true }
    }
}

/// Fitted alignment between a reference block `X` and a new block `Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct CcaMapping<T: Real> {
    /// Canonical directions for the reference data, one per column (`n × m`).
    pub a: Matrix<T>,
    /// Canonical directions for the new-session data (`n × m`).
    pub b: Matrix<T>,
    /// Canonical correlations, descending, clipped into `[0, 1]`.
    pub correlations: Vec<T>,
    pub mean_ref: Vec<T>,
    pub mean_new: Vec<T>,
    pub ridge: T,
}

/// Fits CCA with centering and the given relative ridge.
pub fn cca_fit<T: Real>(ref_calib: &Matrix<T>, new_calib: &Matrix<T>, ridge: T) -> Result<CcaMapping<T>> {
    cca_fit_with(ref_calib, new_calib, &CcaOptions { ridge, center: true })
}

pub fn cca_fit_with<T: Real>(x: &Matrix<T>, y: &Matrix<T>, opts: &CcaOptions<T>) -> Result<CcaMapping<T>> {
    let n = x.rows();
    if y.rows() != n {
        return Err(Error::dim("cca_fit", format!("{n} channels"), y.rows()));
    }
    if x.cols() != y.cols() {
        return Err(Error::Pairing(format!(
            "reference has {} windows but new session has {}",
            x.cols(),
            y.cols()
        )));
    }
    if x.cols() <= n {
        return Err(Error::Pairing(format!("need more than {n} paired windows, got {}", x.cols())));
    }
    if !(opts.ridge >= T::zero() && opts.ridge.is_finite()) {
        return Err(Error::Parameter(format!("ridge must be finite and >= 0, got {}", opts.ridge)));
    }

    let (mean_ref, mean_new) = if opts.center {
        (x.row_means(), y.row_means())
    } else {
        (vec![T::zero(); n], vec![T::zero(); n])
    };
    let xc = x.sub_row_offsets(&mean_ref);
    let yc = y.sub_row_offsets(&mean_new);

    let cxx = covariance(&xc, &xc)?;
    let cyy = covariance(&yc, &yc)?;
    let cxy = covariance(&xc, &yc)?;

    let nf = T::from_count(n);
    let wx = inv_sqrt_sym(&cxx, opts.ridge * cxx.trace() / nf)?;
    let wy = inv_sqrt_sym(&cyy, opts.ridge * cyy.trace() / nf)?;

    let omega = wx.dot(&cxy).dot(&wy);
    let s = svd(&omega)?;
    let a = wx.dot(&s.u);
    let b = wy.dot(&s.vt.transpose());
    let correlations = s.sigma.iter().map(|&c| c.max(T::zero()).min(T::one())).collect();

    Ok(CcaMapping { a, b, correlations, mean_ref, mean_new, ridge: opts.ridge })
}

impl<T: Real> CcaMapping<T> {
    pub fn n_channels(&self) -> usize {
        self.a.rows()
    }

    pub fn n_components(&self) -> usize {
        self.a.cols()
    }

    pub fn mean_correlation(&self) -> T {
        self.correlations.iter().copied().sum::<T>() / T::from_count(self.correlations.len())
    }

    /// The linear part of the back-projection, `(Aᵀ)† Bᵀ`.
    pub fn projection_matrix(&self) -> Result<Matrix<T>> {
        Ok(pinv(&self.a.transpose())?.dot(&self.b.transpose()))
    }

    /// Maps new-session feature columns into the reference feature space.
    pub fn project(&self, new_day: &Matrix<T>) -> Result<Matrix<T>> {
        if new_day.rows() != self.n_channels() {
            return Err(Error::dim("cca_project", format!("{} channels", self.n_channels()), new_day.rows()));
        }
        let p = self.projection_matrix()?;
        Ok(p.dot(&new_day.sub_row_offsets(&self.mean_new)).add_row_offsets(&self.mean_ref))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new().flexible(true).has_headers(false).from_writer(w);
        out.write_record(["n", &self.n_channels().to_string()])?;
        out.write_record(["m", &self.n_components().to_string()])?;
        out.write_record(["ridge", &fmt_exact(self.ridge)])?;
        let mut row = |key: &str, vals: &[T]| {
            let rec = std::iter::once(key.to_string()).chain(vals.iter().map(|&v| fmt_exact(v)));
            out.write_record(rec)
        };
        for i in 0..self.a.rows() {
            row("a", self.a.row(i))?;
        }
        for i in 0..self.b.rows() {
            row("b", self.b.row(i))?;
        }
        row("correlations", &self.correlations)?;
        row("mean_ref", &self.mean_ref)?;
        row("mean_new", &self.mean_new)?;
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().flexible(true).has_headers(false).from_reader(r);
        let records = rd.records().collect::<std::result::Result<Vec<_>, _>>()?;
        let mut lines = records.iter();
        let mut next = |key: &str| -> Result<Vec<String>> {
            let rec = lines.next().ok_or_else(|| Error::ModelFormat(format!("missing {key:?} line")))?;
            if rec.get(0) != Some(key) {
                return Err(Error::ModelFormat(format!("expected {key:?}, found {:?}", rec.get(0))));
            }
            Ok(rec.iter().skip(1).map(str::to_string).collect())
        };
        let count = |v: Vec<String>, key: &str| -> Result<usize> {
            v.first()
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::ModelFormat(format!("bad {key} value")))
        };
        let n = count(next("n")?, "n")?;
        let m = count(next("m")?, "m")?;
        let ridge = parse_vec::<T>(&next("ridge")?, 1, "ridge")?[0];
        let mut a_rows = Vec::with_capacity(n);
        for _ in 0..n {
            a_rows.push(parse_vec(&next("a")?, m, "a")?);
        }
        let mut b_rows = Vec::with_capacity(n);
        for _ in 0..n {
            b_rows.push(parse_vec(&next("b")?, m, "b")?);
        }
        let correlations = parse_vec(&next("correlations")?, m, "correlations")?;
        let mean_ref = parse_vec(&next("mean_ref")?, n, "mean_ref")?;
        let mean_new = parse_vec(&next("mean_new")?, n, "mean_new")?;
        Ok(Self {
            a: Matrix::from_rows(&a_rows)?,
            b: Matrix::from_rows(&b_rows)?,
            correlations,
            mean_ref,
            mean_new,
            ridge,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(File::create(path)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(File::open(path)?)
    }
}

pub(crate) fn parse_vec<T: Real>(fields: &[String], len: usize, key: &str) -> Result<Vec<T>> {
    if fields.len() != len {
        return Err(Error::ModelFormat(format!("{key}: expected {len} values, found {}", fields.len())));
    }
    fields
        .iter()
        .map(|f| parse_real(f).ok_or_else(|| Error::ModelFormat(format!("{key}: cannot parse {f:?}"))))
        .collect()
}

/// Projects a labeled new-session stream; labels and repetitions are kept.
pub fn cca_project<T: Real>(mapping: &CcaMapping<T>, new_day: &LabeledWindows<T>) -> Result<LabeledWindows<T>> {
    new_day.with_features(mapping.project(&new_day.features)?)
}

/// Column-paired calibration blocks from two sessions.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationPair<T: Real> {
    pub reference: Matrix<T>,
    pub new: Matrix<T>,
    /// Source column of each paired reference window.
    pub reference_columns: Vec<usize>,
    /// Source column of each paired new-session window.
    pub new_columns: Vec<usize>,
}

/// One `(gesture, repetition in x, repetition in y)` block pairing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockPair {
    pub gesture: usize,
    pub rep_x: usize,
    pub rep_y: usize,
}

/// Pairs windows position-by-position inside each listed block, truncating
/// each block pair to the shorter of the two.
pub fn pair_blocks<T: Real>(
    x: &LabeledWindows<T>,
    y: &LabeledWindows<T>,
    pairs: &[BlockPair],
) -> Result<CalibrationPair<T>> {
    if x.n_channels() != y.n_channels() {
        return Err(Error::dim("pair_blocks", x.n_channels(), y.n_channels()));
    }
    let mut xi = Vec::new();
    let mut yi = Vec::new();
    for p in pairs {
        let bx = x.block(p.gesture, p.rep_x);
        let by = y.block(p.gesture, p.rep_y);
        let len = bx.len().min(by.len());
        xi.extend_from_slice(&bx[..len]);
        yi.extend_from_slice(&by[..len]);
    }
    if xi.is_empty() {
        return Err(Error::Pairing("no windows could be paired".into()));
    }
    Ok(CalibrationPair {
        reference: x.features.select_columns(&xi)?,
        new: y.features.select_columns(&yi)?,
        reference_columns: xi,
        new_columns: yi,
    })
}

/// The first `reps_per_gesture` repetitions of every gesture, paired across
/// sessions by `(gesture, repetition rank, window index)`.
pub fn calibration_subset<T: Real>(
    reference: &LabeledWindows<T>,
    new_day: &LabeledWindows<T>,
    reps_per_gesture: usize,
) -> Result<CalibrationPair<T>> {
    if reps_per_gesture == 0 {
        return Err(Error::Parameter("reps_per_gesture must be at least 1".into()));
    }
    let mut gestures = reference.gestures();
    gestures.extend(new_day.gestures());
    gestures.sort_unstable();
    gestures.dedup();

    let mut short = Vec::new();
    let mut detail = Vec::new();
    let mut pairs = Vec::new();
    for &g in &gestures {
        let rx = reference.repetitions_of(g);
        let ry = new_day.repetitions_of(g);
        if rx.len() < reps_per_gesture || ry.len() < reps_per_gesture {
            short.push(g);
            detail.push(format!(
                "gesture {g}: {} reference / {} new repetitions",
                rx.len(),
                ry.len()
            ));
            continue;
        }
        pairs.extend((0..reps_per_gesture).map(|k| BlockPair { gesture: g, rep_x: rx[k], rep_y: ry[k] }));
    }
    if !short.is_empty() {
        return Err(Error::CalibrationCoverage {
            gestures: short,
            detail: format!("need {reps_per_gesture} repetitions each ({})", detail.join("; ")),
        });
    }
    pair_blocks(reference, new_day, &pairs)
}
