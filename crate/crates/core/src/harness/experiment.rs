//! Train-once / calibrate-per-session protocol and its evaluation.

use std::collections::BTreeSet;

use crate::cca::{calibration_subset, cca_fit_with, cca_project, CalibrationPair, CcaMapping, CcaOptions};
use crate::classifier::{accuracy, svm_train, SvmModel};
use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;
use crate::harness::metrics::{correlation_metrics, within_day_upper_bound, DayReport};
use crate::signal::LabeledWindows;
use crate::sim::simulate_days;

type Windows = LabeledWindows<f64>;

/// Column indices of a session split by repetition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Holds out the last `test_reps` repetitions of every gesture.
pub fn split_by_repetition(day: &Windows, test_reps: usize) -> Result<Split> {
    let mut held_out = BTreeSet::new();
    for g in day.gestures() {
        let reps = day.repetitions_of(g);
        if reps.len() <= test_reps {
            return Err(Error::Data(format!(
                "gesture {g} has {} repetitions; cannot hold out {test_reps}",
                reps.len()
            )));
        }
        held_out.extend(reps[reps.len() - test_reps..].iter().map(|&r| (g, r)));
    }
    let (test, train) = (0..day.n_windows()).partition(|&j| held_out.contains(&(day.labels[j], day.repetitions[j])));
    Ok(Split { train, test })
}

/// `(gesture, repetition)` blocks consumed by calibration: the first
/// `calibration_reps` repetitions of each gesture.
pub fn calibration_blocks(day: &Windows, calibration_reps: usize) -> BTreeSet<(usize, usize)> {
    day.gestures()
        .into_iter()
        .flat_map(|g| day.repetitions_of(g).into_iter().take(calibration_reps).map(move |r| (g, r)))
        .collect()
}

/// Position of session `index` (0-based, chronological) as `(day, session)`.
pub fn session_position(index: usize, sessions_per_day: usize) -> (usize, usize) {
    (index / sessions_per_day + 1, index % sessions_per_day)
}

pub fn cca_options(cfg: &ExperimentConfig) -> CcaOptions<f64> {
    CcaOptions { ridge: cfg.ridge, center: cfg.center }
}

/// Trains the classifier on the reference session's training split.
pub fn train_reference(reference: &Windows, cfg: &ExperimentConfig) -> Result<(SvmModel<f64>, Split)> {
    let split = split_by_repetition(reference, cfg.test_reps)?;
    let model = svm_train(&reference.select(&split.train)?, &cfg.svm)?;
    Ok((model, split))
}

/// Fits the alignment of one later session against the reference.
pub fn calibrate_session(
    reference: &Windows,
    session: &Windows,
    cfg: &ExperimentConfig,
) -> Result<(CalibrationPair<f64>, CcaMapping<f64>)> {
    let pair = calibration_subset(reference, session, cfg.calibration_reps)?;
    let mapping = cca_fit_with(&pair.reference, &pair.new, &cca_options(cfg))?;
    Ok((pair, mapping))
}

/// Which columns of a session fed calibration and which were scored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvaluationAudit {
    pub day: usize,
    pub session: usize,
    pub calibration_columns: Vec<usize>,
    /// Columns scored for aligned and unaligned accuracy.
    pub eval_columns: Vec<usize>,
    /// Columns scored for the pooled baseline.
    pub pooled_eval_columns: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub reports: Vec<DayReport>,
    pub model: SvmModel<f64>,
    pub pooled_model: SvmModel<f64>,
    /// Fitted mapping for every session after the reference, in order.
    pub mappings: Vec<CcaMapping<f64>>,
    pub audits: Vec<EvaluationAudit>,
    pub acc_reference: f64,
    pub within_day_upper_bound: f64,
    pub reference_split: Split,
}

/// Scores every later session with a fixed model and fitted mappings.
///
/// `mappings[i]` belongs to `sessions[i + 1]`.
pub fn evaluate_sessions(
    sessions: &[Windows],
    model: &SvmModel<f64>,
    mappings: &[CcaMapping<f64>],
    cfg: &ExperimentConfig,
) -> Result<ExperimentOutcome> {
    let reference = sessions.first().ok_or_else(|| Error::Data("no sessions".into()))?;
    if mappings.len() + 1 != sessions.len() {
        return Err(Error::dim("evaluate_sessions", format!("{} mappings", sessions.len() - 1), mappings.len()));
    }
    let ref_split = split_by_repetition(reference, cfg.test_reps)?;
    let ref_test = reference.select(&ref_split.test)?;
    let acc_reference = accuracy(&model.predict(&ref_test.features)?, &ref_test.labels)?;
    if acc_reference <= 0.0 {
        return Err(Error::Training("reference accuracy is zero; relative accuracy undefined".into()));
    }
    let upper = within_day_upper_bound(reference, &cca_options(cfg))?;

    // Pooled baseline: every session's training split, no alignment.
    let splits = sessions
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let (d, k) = session_position(i, cfg.sessions_per_day);
            split_by_repetition(s, cfg.test_reps).map_err(|e| e.in_day(format!("{d}.{k}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let pooled_parts = sessions
        .iter()
        .zip(&splits)
        .map(|(s, sp)| s.select(&sp.train))
        .collect::<Result<Vec<_>>>()?;
    let pooled_refs: Vec<&Windows> = pooled_parts.iter().collect();
    let pooled_model = svm_train(&LabeledWindows::concat(&pooled_refs)?, &cfg.svm)?;

    let mut reports = Vec::with_capacity(mappings.len());
    let mut audits = Vec::with_capacity(mappings.len());
    for (i, (session, mapping)) in sessions.iter().zip(&splits).skip(1).zip(mappings).enumerate() {
        let (session, split) = session;
        let (day, sub) = session_position(i + 1, cfg.sessions_per_day);
        let ctx = format!("{day}.{sub}");
        let wrap = |e: Error| e.in_day(&ctx);

        let pair = calibration_subset(reference, session, cfg.calibration_reps).map_err(wrap)?;
        let calib = calibration_blocks(session, cfg.calibration_reps);
        let in_calib = |j: &usize| calib.contains(&(session.labels[*j], session.repetitions[*j]));
        let eval_columns: Vec<usize> = (0..session.n_windows()).filter(|j| !in_calib(j)).collect();
        let pooled_eval_columns: Vec<usize> = split.test.iter().copied().filter(|j| !in_calib(j)).collect();
        if eval_columns.is_empty() || pooled_eval_columns.is_empty() {
            return Err(wrap(Error::Config(
                "no repetitions left for evaluation after calibration".into(),
            )));
        }

        let eval = session.select(&eval_columns)?;
        let aligned = cca_project(mapping, &eval).map_err(wrap)?;
        let acc_unaligned = accuracy(&model.predict(&eval.features)?, &eval.labels)?;
        let acc_aligned = accuracy(&model.predict(&aligned.features)?, &aligned.labels)?;
        let pooled_eval = session.select(&pooled_eval_columns)?;
        let acc_pooled = accuracy(&pooled_model.predict(&pooled_eval.features)?, &pooled_eval.labels)?;

        let corr = correlation_metrics(&pair.reference, &pair.new, mapping).map_err(wrap)?;
        reports.push(DayReport {
            day,
            session: sub,
            mean_canonical_correlation_aligned: corr.aligned,
            mean_channelwise_correlation_unaligned: corr.unaligned,
            correlation_gain: corr.gain,
            within_day_upper_bound: upper,
            normalized_aligned_correlation: corr.aligned / upper,
            acc_unaligned,
            acc_aligned,
            acc_pooled,
            acc_reference,
            relative_accuracy: acc_aligned / acc_reference,
        });
        audits.push(EvaluationAudit {
            day,
            session: sub,
            calibration_columns: pair.new_columns.clone(),
            eval_columns,
            pooled_eval_columns,
        });
    }

    Ok(ExperimentOutcome {
        reports,
        model: model.clone(),
        pooled_model,
        mappings: mappings.to_vec(),
        audits,
        acc_reference,
        within_day_upper_bound: upper,
        reference_split: ref_split,
    })
}

/// Full protocol on recorded or simulated sessions (first = reference).
pub fn run_on_sessions(sessions: &[Windows], cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    if sessions.len() < 2 {
        return Err(Error::Data(format!("need at least 2 sessions, got {}", sessions.len())));
    }
    let reference = &sessions[0];
    let (model, _) = train_reference(reference, cfg)?;
    let mappings = sessions[1..]
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let (d, k) = session_position(i + 1, cfg.sessions_per_day);
            calibrate_session(reference, s, cfg).map(|(_, m)| m).map_err(|e| e.in_day(format!("{d}.{k}")))
        })
        .collect::<Result<Vec<_>>>()?;
    evaluate_sessions(sessions, &model, &mappings, cfg)
}

/// Simulates `cfg.days` sessions and runs the protocol on them.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let sessions = cfg.days * cfg.sessions_per_day;
    let data = simulate_days(&cfg.geometry, sessions, cfg.drift, cfg.magnitude, cfg.noise_std(), cfg.seed)?;
    run_on_sessions(&data.days, cfg)
}
