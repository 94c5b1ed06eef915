//! Detection runs: measure one witness family at a time until the criterion,
//! the ML-set check or, as a last resort, full tomography decides.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::estimation::{
    ml_estimate, ml_set_check_deltas, mlme_estimate, ppt_separable, Conclusion, SetCheckOptions,
    MLME_LAMBDA,
};
use crate::measurement::{born_probabilities, measure, Dataset};
use crate::qcore::DensityMatrix;
use crate::witness::{
    criterion_unchecked, family_from_ket, negative_pt_eigenket, preset_families, WitnessFamily,
};

/// Upper limit on measured families per run.
pub const MAX_FAMILIES: usize = 6;
/// PPT tolerance of the tomography verdict.
pub const FALLBACK_PPT_TOL: f64 = 1e-9;
/// Predicted criterion values closer than this count as tied.
pub const TIE_TOL: f64 = 1e-12;
const MLME_TOL: f64 = 1e-10;
/// Fallback ML accuracy in log-likelihood units.
const FALLBACK_ACCURACY: f64 = 1e-3;
const FALLBACK_MAX_ITER: usize = 20_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SchemeId {
    A,
    B,
    C,
    Bprime,
    Cprime,
}

impl SchemeId {
    pub const ALL: [SchemeId; 5] = [
        SchemeId::A,
        SchemeId::B,
        SchemeId::C,
        SchemeId::Bprime,
        SchemeId::Cprime,
    ];

    fn uses_set_check(self) -> bool {
        matches!(self, SchemeId::C | SchemeId::Cprime)
    }

    fn uses_custom_families(self) -> bool {
        matches!(self, SchemeId::Bprime | SchemeId::Cprime)
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SchemeId::A => "A",
            SchemeId::B => "B",
            SchemeId::C => "C",
            SchemeId::Bprime => "Bp",
            SchemeId::Cprime => "Cp",
        };
        f.write_str(s)
    }
}

impl FromStr for SchemeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(SchemeId::A),
            "B" | "b" => Ok(SchemeId::B),
            "C" | "c" => Ok(SchemeId::C),
            "Bp" | "bp" | "Bprime" | "B'" => Ok(SchemeId::Bprime),
            "Cp" | "cp" | "Cprime" | "C'" => Ok(SchemeId::Cprime),
            other => Err(Error::Parse(format!("unknown scheme {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Entangled,
    Separable,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Via {
    Criterion,
    MLSetCheck,
    TomographyFallback,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl fmt::Display for Via {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Outcome of one detection run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DetectionRecord {
    pub verdict: Verdict,
    pub n_families: usize,
    pub families_measured: Vec<String>,
    pub s_values: Vec<f64>,
    pub via: Via,
    /// Everything measured, including preset families added only for the
    /// tomography fallback of the custom-family schemes.
    #[serde(serialize_with = "serialize_dataset")]
    pub dataset: Dataset,
    /// Some estimator failed to certify convergence during the run.
    pub flagged: bool,
}

fn serialize_dataset<S: Serializer>(d: &Dataset, s: S) -> std::result::Result<S::Ok, S::Error> {
    struct Rec<'a>(&'a crate::measurement::FamilyRecord);
    impl Serialize for Rec<'_> {
        fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
            let mut m = s.serialize_map(Some(2))?;
            m.serialize_entry("family", &self.0.family.to_label_string())?;
            m.serialize_entry("counts", &self.0.counts)?;
            m.end()
        }
    }
    let mut seq = s.serialize_seq(Some(d.len()))?;
    for r in d.records() {
        seq.serialize_element(&Rec(r))?;
    }
    seq.end()
}

/// Knobs of a detection run beyond the scheme itself.
#[derive(Clone, Copy, Debug)]
pub struct DetectionOptions {
    pub n_pairs: u64,
    pub set_check: SetCheckOptions,
    /// Forces the first family (1..=6) instead of drawing it.
    pub first_family: Option<usize>,
    /// Entropy weight of the plug-in estimate used for family selection.
    pub mlme_lambda: f64,
}

impl DetectionOptions {
    pub fn new(n_pairs: u64) -> Self {
        DetectionOptions {
            n_pairs,
            set_check: SetCheckOptions::default(),
            first_family: None,
            mlme_lambda: MLME_LAMBDA,
        }
    }
}

fn predicted_s(rho: &DensityMatrix, fam: &WitnessFamily) -> f64 {
    criterion_unchecked(&born_probabilities(rho, fam)).s_value
}

/// Unmeasured preset family with the smallest predicted criterion value for
/// `rho`; ties go to the lowest label.
fn argmin_preset(rho: &DensityMatrix, d: &Dataset) -> Result<WitnessFamily> {
    let mut best: Option<(f64, WitnessFamily)> = None;
    for fam in preset_families() {
        if d.contains(&fam) {
            continue;
        }
        let s = predicted_s(rho, &fam);
        if best.is_none_or(|(b, _)| s < b - TIE_TOL) {
            best = Some((s, fam));
        }
    }
    best.map(|(_, f)| f).ok_or(Error::Exhausted)
}

/// Next family for the adaptive schemes, predicted from the MLME estimate.
pub fn select_next_family(scheme: SchemeId, d: &Dataset) -> Result<WitnessFamily> {
    select_next_family_with(scheme, d, MLME_LAMBDA)
}

pub fn select_next_family_with(
    scheme: SchemeId,
    d: &Dataset,
    lambda: f64,
) -> Result<WitnessFamily> {
    let rho = mlme_estimate(d, lambda, MLME_TOL).estimate;
    select_for_estimate(scheme, &rho, d)
}

/// Selection rule applied to a given plug-in estimate.
pub fn select_for_estimate(
    scheme: SchemeId,
    rho: &DensityMatrix,
    d: &Dataset,
) -> Result<WitnessFamily> {
    if scheme == SchemeId::A {
        return Err(Error::InvalidParameter("scheme A selects at random".into()));
    }
    if scheme.uses_custom_families() {
        if let Some((_, ket)) = negative_pt_eigenket(rho) {
            if let Ok(fam) = family_from_ket(&ket) {
                if !d.contains(&fam) {
                    return Ok(fam);
                }
            }
        }
    }
    argmin_preset(rho, d)
}

/// ML estimate followed by the PPT test. Returns the verdict and whether the
/// estimator converged.
pub fn tomography_fallback(d: &Dataset) -> Result<(Verdict, bool)> {
    let present = d.preset_indices().len();
    if present < preset_families().len() {
        return Err(Error::NotInformationallyComplete(format!(
            "{present} of 6 preset families measured"
        )));
    }
    let tol = FALLBACK_ACCURACY / d.n_total().max(1) as f64;
    let est = ml_estimate(d, tol, FALLBACK_MAX_ITER);
    let verdict = if ppt_separable(&est.estimate, FALLBACK_PPT_TOL) {
        Verdict::Separable
    } else {
        Verdict::Entangled
    };
    Ok((verdict, est.converged))
}

pub fn run_detection<R: Rng + ?Sized>(
    scheme: SchemeId,
    rho: &DensityMatrix,
    n_pairs: u64,
    rng: &mut R,
) -> Result<DetectionRecord> {
    run_detection_with(scheme, rho, &DetectionOptions::new(n_pairs), rng)
}

pub fn run_detection_with<R: Rng + ?Sized>(
    scheme: SchemeId,
    rho: &DensityMatrix,
    opts: &DetectionOptions,
    rng: &mut R,
) -> Result<DetectionRecord> {
    let delta = opts.set_check.delta;
    Ok(run_detection_deltas(scheme, rho, opts, &[delta], rng)?
        .pop()
        .expect("one margin"))
}

/// Runs one trajectory and returns the record each decision margin in
/// `deltas` would have produced. Family choices and random draws do not
/// depend on the margin, so record `i` equals a separate run with
/// `set_check.delta = deltas[i]` and the same generator state.
pub fn run_detection_deltas<R: Rng + ?Sized>(
    scheme: SchemeId,
    rho: &DensityMatrix,
    opts: &DetectionOptions,
    deltas: &[f64],
    rng: &mut R,
) -> Result<Vec<DetectionRecord>> {
    let presets = preset_families();
    let mut fam = match opts.first_family {
        Some(k) => *presets.get(k.wrapping_sub(1)).ok_or(Error::BadIndex(k))?,
        None => *presets.choose(rng).expect("six presets"),
    };
    // Scheme A fixes its whole random order up front.
    let mut order: Vec<WitnessFamily> = presets
        .iter()
        .copied()
        .filter(|f| f.key() != fam.key())
        .collect();
    order.shuffle(rng);

    let mut d = Dataset::new();
    let mut labels = Vec::new();
    let mut s_values = Vec::new();
    let mut out: Vec<Option<DetectionRecord>> = vec![None; deltas.len()];
    let mut flagged = vec![false; deltas.len()];
    let snapshot =
        |verdict, via, d: &Dataset, labels: &[String], s_values: &[f64], flagged| DetectionRecord {
            verdict,
            n_families: labels.len(),
            families_measured: labels.to_vec(),
            s_values: s_values.to_vec(),
            via,
            dataset: d.clone(),
            flagged,
        };

    for step in 1..=MAX_FAMILIES {
        let rec = measure(rho, &fam, opts.n_pairs, rng)?;
        let s = rec.criterion().s_value;
        labels.push(fam.to_label_string());
        s_values.push(s);
        d.push(rec)?;
        if s < 0.0 {
            for (slot, &f) in out.iter_mut().zip(&flagged) {
                slot.get_or_insert_with(|| {
                    snapshot(
                        Verdict::Entangled,
                        Via::Criterion,
                        &d,
                        &labels,
                        &s_values,
                        f,
                    )
                });
            }
            break;
        }
        if scheme.uses_set_check() {
            let check_opts = SetCheckOptions {
                seed: rng.gen(),
                ..opts.set_check
            };
            let open: Vec<usize> = (0..deltas.len()).filter(|&i| out[i].is_none()).collect();
            let margins: Vec<f64> = open.iter().map(|&i| deltas[i]).collect();
            for (&i, check) in open
                .iter()
                .zip(ml_set_check_deltas(&d, &check_opts, &margins))
            {
                flagged[i] |= check.flagged;
                if check.conclusion == Conclusion::Entangled {
                    out[i] = Some(snapshot(
                        Verdict::Entangled,
                        Via::MLSetCheck,
                        &d,
                        &labels,
                        &s_values,
                        flagged[i],
                    ));
                }
            }
        }
        if step == MAX_FAMILIES || out.iter().all(Option::is_some) {
            break;
        }
        fam = match scheme {
            SchemeId::A => order[step - 1],
            _ => select_next_family_with(scheme, &d, opts.mlme_lambda)?,
        };
    }

    if out.iter().any(Option::is_none) {
        // Custom-family schemes may end without informationally complete data.
        for f in presets {
            if !d.contains(&f) {
                d.push(measure(rho, &f, opts.n_pairs, rng)?)?;
            }
        }
        let (verdict, converged) = tomography_fallback(&d)?;
        let verdict = if converged {
            verdict
        } else {
            Verdict::Inconclusive
        };
        for (slot, &f) in out.iter_mut().zip(&flagged) {
            slot.get_or_insert_with(|| {
                snapshot(
                    verdict,
                    Via::TomographyFallback,
                    &d,
                    &labels,
                    &s_values,
                    f || !converged,
                )
            });
        }
    }
    Ok(out
        .into_iter()
        .map(|r| r.expect("every margin decided"))
        .collect())
}
