use serde::{Deserialize, Serialize};

use super::SweepTable;
use crate::error::{Error, Result};

/// Decision thresholds, in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    pub eps_inert: f64,
    pub eps_peak: f64,
    pub eps_fit: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { eps_inert: 0.05, eps_peak: 0.1, eps_fit: 0.05 }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        for (k, v) in [("eps_inert", self.eps_inert), ("eps_peak", self.eps_peak), ("eps_fit", self.eps_fit)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(format!("{k} must be a positive number, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassLabel {
    MonotoneDecreasing,
    RiseThenFall,
    Inert,
    Unclassified,
}

impl ClassLabel {
    pub fn name(self) -> &'static str {
        match self {
            ClassLabel::MonotoneDecreasing => "monotone_decreasing",
            ClassLabel::RiseThenFall => "rise_then_fall",
            ClassLabel::Inert => "inert",
            ClassLabel::Unclassified => "unclassified",
        }
    }
}

impl std::fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Numbers behind a label; always filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationDiagnostics {
    pub max_abs_delta: f64,
    /// Position of the ΔS maximum once rows are ordered by `S_initial`.
    pub peak_index: usize,
    pub peak_s_initial: f64,
    pub peak_delta: f64,
    pub low_end_delta: f64,
    pub high_end_delta: f64,
    /// RMS residual of the best non-increasing fit.
    pub isotonic_rms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub label: ClassLabel,
    pub thresholds: Thresholds,
    pub diagnostics: ClassificationDiagnostics,
}

/// Least-squares non-increasing fit (pool adjacent violators).
pub(crate) fn decreasing_fit(y: &[f64]) -> Vec<f64> {
    // blocks of (sum, count)
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(y.len());
    for &v in y {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (s1, n1) = blocks[blocks.len() - 1];
            let (s0, n0) = blocks[blocks.len() - 2];
            if s0 / n0 as f64 >= s1 / n1 as f64 {
                break;
            }
            blocks.pop();
            *blocks.last_mut().unwrap() = (s0 + s1, n0 + n1);
        }
    }
    blocks.iter().flat_map(|&(s, n)| std::iter::repeat_n(s / n as f64, n)).collect()
}

/// Label the `ΔS(S_initial)` curve of a sweep.
///
/// Rows are ordered by `S_initial` (ties by `T`). Rules, in order: inert if
/// `max |ΔS| < eps_inert`; rise-then-fall if the maximum is interior and
/// clears both ends by `eps_peak`; monotone decreasing if a non-increasing
/// fit has RMS residual `<= eps_fit`; otherwise unclassified.
pub fn classify_dynamics(table: &SweepTable, thresholds: &Thresholds) -> Result<Classification> {
    thresholds.validate()?;
    let n = table.rows.len();
    if n < 5 {
        return Err(Error::param(format!("classification needs at least 5 rows, got {n}")));
    }
    let mut rows: Vec<_> = table.rows.iter().collect();
    rows.sort_by(|a, b| a.s_initial.total_cmp(&b.s_initial).then(a.t.total_cmp(&b.t)));
    let delta: Vec<f64> = rows.iter().map(|r| r.delta_s).collect();

    let max_abs_delta = delta.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let peak_index = delta
        .iter()
        .enumerate()
        .fold(0, |best, (i, &d)| if d > delta[best] { i } else { best });
    let fit = decreasing_fit(&delta);
    let isotonic_rms =
        (delta.iter().zip(&fit).map(|(d, f)| (d - f).powi(2)).sum::<f64>() / n as f64).sqrt();
    let diagnostics = ClassificationDiagnostics {
        max_abs_delta,
        peak_index,
        peak_s_initial: rows[peak_index].s_initial,
        peak_delta: delta[peak_index],
        low_end_delta: delta[0],
        high_end_delta: delta[n - 1],
        isotonic_rms,
    };

    let interior = peak_index > 0 && peak_index < n - 1;
    let label = if max_abs_delta < thresholds.eps_inert {
        ClassLabel::Inert
    } else if interior
        && delta[peak_index] - delta[0] >= thresholds.eps_peak
        && delta[peak_index] - delta[n - 1] >= thresholds.eps_peak
    {
        ClassLabel::RiseThenFall
    } else if isotonic_rms <= thresholds.eps_fit {
        ClassLabel::MonotoneDecreasing
    } else {
        ClassLabel::Unclassified
    };
    Ok(Classification { label, thresholds: *thresholds, diagnostics })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{Preparation, ProtocolSpec, SweepRow};

    fn table(points: &[(f64, f64)]) -> SweepTable {
        let rows = points
            .iter()
            .enumerate()
            .map(|(i, &(s, d))| SweepRow {
                t: i as f64,
                s_initial: s,
                s_sat: s + d,
                delta_s: d,
                stderr_initial: 0.0,
                stderr_sat: 0.0,
                runs: 1,
            })
            .collect();
        SweepTable {
            protocol: ProtocolSpec::thermal(),
            preparation: Preparation::default(),
            sites: 12,
            runs: 1,
            master_seed: 0,
            rows,
            samples: vec![],
            seeds: vec![],
        }
    }

    #[test]
    fn pava_matches_hand_fit() {
        assert_eq!(decreasing_fit(&[3.0, 1.0, 2.0, 0.0]), vec![3.0, 1.5, 1.5, 0.0]);
        assert_eq!(decreasing_fit(&[1.0, 2.0, 3.0]), vec![2.0, 2.0, 2.0]);
        assert_eq!(decreasing_fit(&[5.0, 4.0]), vec![5.0, 4.0]);
        assert!(decreasing_fit(&[]).is_empty());
    }

    #[test]
    fn synthetic_curves() {
        let th = Thresholds::default();
        let flat = table(&[(0.0, 0.01), (1.0, -0.02), (2.0, 0.0), (3.0, 0.03), (4.0, 0.0)]);
        assert_eq!(classify_dynamics(&flat, &th).unwrap().label, ClassLabel::Inert);
        let arc = table(&[(0.0, 1.0), (1.0, 1.5), (2.0, 1.3), (3.0, 0.6), (4.0, 0.1)]);
        let c = classify_dynamics(&arc, &th).unwrap();
        assert_eq!(c.label, ClassLabel::RiseThenFall);
        assert_eq!(c.diagnostics.peak_index, 1);
        let down = table(&[(0.0, 4.0), (1.0, 3.0), (2.0, 3.02), (3.0, 1.0), (4.0, 0.0)]);
        assert_eq!(classify_dynamics(&down, &th).unwrap().label, ClassLabel::MonotoneDecreasing);
        let zigzag = table(&[(0.0, 0.0), (1.0, 2.0), (2.0, 0.0), (3.0, 2.0), (4.0, 0.0), (5.0, 2.05)]);
        assert_eq!(classify_dynamics(&zigzag, &th).unwrap().label, ClassLabel::Unclassified);
    }

    #[test]
    fn rows_are_ordered_by_initial_entropy() {
        // Same arc with rows shuffled in T.
        let arc = table(&[(3.0, 0.6), (0.0, 1.0), (4.0, 0.1), (1.0, 1.5), (2.0, 1.3)]);
        let c = classify_dynamics(&arc, &Thresholds::default()).unwrap();
        assert_eq!(c.label, ClassLabel::RiseThenFall);
        assert_eq!(c.diagnostics.peak_s_initial, 1.0);
    }

    #[test]
    fn too_few_rows() {
        let t = table(&[(0.0, 1.0), (1.0, 0.0)]);
        assert!(classify_dynamics(&t, &Thresholds::default()).is_err());
        let bad = Thresholds { eps_fit: -1.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
