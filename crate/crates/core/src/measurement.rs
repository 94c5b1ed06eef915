//! Born-rule probabilities, finite-sample counts and dataset bookkeeping.

use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::qcore::{validate_prob4, DensityMatrix, Prob4};
use crate::witness::{criterion_unchecked, CriterionResult, WitnessFamily};

/// `p_j = <k_j| rho |k_j>` for the family's measurement kets.
pub fn born_probabilities(rho: &DensityMatrix, fam: &WitnessFamily) -> Prob4 {
    let mut p = fam.kets().map(|k| rho.overlap(&k).max(0.0));
    let s: f64 = p.iter().sum();
    for x in p.iter_mut() {
        *x /= s;
    }
    p
}

/// Multinomial draw of `n` trials by inverse-CDF categorical sampling.
pub fn sample_counts<R: Rng + ?Sized>(p: &Prob4, n: u64, rng: &mut R) -> Result<[u64; 4]> {
    validate_prob4(p)?;
    if n == 0 {
        return Err(Error::InvalidParameter(
            "number of trials must be positive".into(),
        ));
    }
    let c0 = p[0];
    let c1 = c0 + p[1];
    let c2 = c1 + p[2];
    let mut counts = [0u64; 4];
    for _ in 0..n {
        let u: f64 = rng.gen();
        let k = if u < c0 {
            0
        } else if u < c1 {
            1
        } else if u < c2 {
            2
        } else {
            3
        };
        counts[k] += 1;
    }
    Ok(counts)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FamilyRecord {
    pub family: WitnessFamily,
    pub counts: [u64; 4],
}

impl FamilyRecord {
    pub fn new(family: WitnessFamily, counts: [u64; 4]) -> Result<Self> {
        if counts.iter().sum::<u64>() == 0 {
            return Err(Error::InvalidParameter("record has no counts".into()));
        }
        Ok(FamilyRecord { family, counts })
    }

    pub fn n_total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn frequencies(&self) -> Prob4 {
        let n = self.n_total() as f64;
        self.counts.map(|c| c as f64 / n)
    }

    pub fn criterion(&self) -> CriterionResult {
        criterion_unchecked(&self.frequencies())
    }
}

/// Ordered family records; a family may appear at most once.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    records: Vec<FamilyRecord>,
}

impl Dataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_records(records: Vec<FamilyRecord>) -> Result<Self> {
        let mut d = Dataset::new();
        for r in records {
            d.push(r)?;
        }
        Ok(d)
    }

    pub fn push(&mut self, record: FamilyRecord) -> Result<()> {
        if self.contains(&record.family) {
            return Err(Error::InvalidParameter(format!(
                "family {} already measured",
                record.family.to_label_string()
            )));
        }
        self.records.push(record);
        Ok(())
    }

    pub fn contains(&self, family: &WitnessFamily) -> bool {
        let key = family.key();
        self.records.iter().any(|r| r.family.key() == key)
    }

    pub fn records(&self) -> &[FamilyRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn n_total(&self) -> u64 {
        self.records.iter().map(FamilyRecord::n_total).sum()
    }

    /// Preset indices present, in measurement order.
    pub fn preset_indices(&self) -> Vec<usize> {
        self.records
            .iter()
            .filter_map(|r| r.family.preset_index())
            .collect()
    }

    /// One line per record, `family_label,n1,n2,n3,n4`.
    pub fn to_text(&self) -> String {
        let mut s = String::from("# family_label,n1,n2,n3,n4\n");
        for r in &self.records {
            let c = r.counts;
            writeln!(
                s,
                "{},{},{},{},{}",
                r.family.to_label_string(),
                c[0],
                c[1],
                c[2],
                c[3]
            )
            .unwrap();
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut d = Dataset::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 5 {
                return Err(Error::Parse(format!(
                    "line {}: expected 5 fields",
                    lineno + 1
                )));
            }
            let family: WitnessFamily = fields[0].parse()?;
            let mut counts = [0u64; 4];
            for (c, f) in counts.iter_mut().zip(&fields[1..]) {
                *c = f
                    .parse()
                    .map_err(|e| Error::Parse(format!("line {}: count {f:?}: {e}", lineno + 1)))?;
            }
            d.push(FamilyRecord::new(family, counts)?)?;
        }
        Ok(d)
    }
}

/// Redraws every record from its own empirical frequencies, keeping totals.
pub fn bootstrap_resample<R: Rng + ?Sized>(d: &Dataset, rng: &mut R) -> Dataset {
    let records = d
        .records
        .iter()
        .map(|r| FamilyRecord {
            family: r.family,
            counts: sample_counts(&r.frequencies(), r.n_total(), rng)
                .expect("empirical frequencies are valid"),
        })
        .collect();
    Dataset { records }
}

/// Born probabilities of `rho` for `fam`, sampled `n` times.
pub fn measure<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    fam: &WitnessFamily,
    n: u64,
    rng: &mut R,
) -> Result<FamilyRecord> {
    let p = born_probabilities(rho, fam);
    FamilyRecord::new(*fam, sample_counts(&p, n, rng)?)
}

/// Record with counts `round(n p_j)`; used for noiseless synthetic data.
pub fn exact_record(rho: &DensityMatrix, fam: &WitnessFamily, n: u64) -> FamilyRecord {
    let p = born_probabilities(rho, fam);
    FamilyRecord {
        family: *fam,
        counts: p.map(|x| (x * n as f64).round() as u64),
    }
}
