//! Power-dependent analysis of a set of count records.

use serde::Serialize;

use crate::numerics::{line_fit, LineFit};

use super::{
    g2_heralded_measured, g2_heralded_theory, klyshko, mean_photon_number, pair_rate, CountRecord, Klyshko, Measured,
    StatsError,
};

/// Derived quantities of one record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordSummary {
    pub power_w: f64,
    pub klyshko: Klyshko,
    pub pair_rate_hz: Measured,
    pub mean_photon_number: f64,
    pub g2_measured: Option<Measured>,
    pub g2_theory: f64,
}

pub fn summarize(rec: &CountRecord, truncation: u64) -> Result<RecordSummary, StatsError> {
    let k = klyshko(rec)?;
    let r = pair_rate(rec)?;
    let n = mean_photon_number(r.value, rec.tau_c_s)?;
    Ok(RecordSummary {
        power_w: rec.power_w,
        klyshko: k,
        pair_rate_hz: r,
        mean_photon_number: n,
        g2_measured: g2_heralded_measured(rec).ok(),
        g2_theory: g2_heralded_theory(n, truncation)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepAnalysis {
    /// Exponents of count rate versus pump power (log-log fits).
    pub signal_singles: LineFit,
    pub idler_singles: LineFit,
    pub twofolds: LineFit,
    /// `None` when fewer than three records have threefolds.
    pub threefolds: Option<LineFit>,
    pub records: Vec<RecordSummary>,
    /// Powers that appeared more than once and were merged.
    pub merged_powers_w: Vec<f64>,
}

/// Merges records at identical powers by summing counts and integration times.
fn collapse(records: &[CountRecord]) -> Result<(Vec<CountRecord>, Vec<f64>), StatsError> {
    let mut sorted = records.to_vec();
    sorted.sort_by(|a, b| a.power_w.total_cmp(&b.power_w));
    let mut out: Vec<CountRecord> = Vec::new();
    let mut merged = Vec::new();
    for r in sorted {
        r.validate()?;
        match out.last_mut() {
            Some(last) if last.power_w == r.power_w => {
                if last.tau_c_s != r.tau_c_s {
                    return Err(StatsError::InvalidRecord(format!(
                        "records at {} W use different coincidence windows",
                        r.power_w
                    )));
                }
                log::warn!("merging duplicate records at power {} W", r.power_w);
                if merged.last() != Some(&r.power_w) {
                    merged.push(r.power_w);
                }
                last.t_int_s += r.t_int_s;
                last.n_s += r.n_s;
                last.n_1 += r.n_1;
                last.n_2 += r.n_2;
                last.c_s1 += r.c_s1;
                last.c_s2 += r.c_s2;
                last.c_s12 += r.c_s12;
            }
            _ => out.push(r),
        }
    }
    Ok((out, merged))
}

fn loglog(name: &str, records: &[CountRecord], count: impl Fn(&CountRecord) -> u64) -> Result<LineFit, StatsError> {
    let (x, y): (Vec<f64>, Vec<f64>) = records
        .iter()
        .filter(|r| r.power_w > 0.0 && count(r) > 0)
        .map(|r| (r.power_w.ln(), (count(r) as f64 / r.t_int_s).ln()))
        .unzip();
    if x.len() < 3 {
        return Err(StatsError::Fit(format!(
            "{name}: only {} records with positive power and counts",
            x.len()
        )));
    }
    line_fit(&x, &y).map_err(|e| StatsError::Fit(format!("{name}: {e}")))
}

/// Log-log power exponents of all count classes plus per-record tables.
pub fn power_sweep_analysis(records: &[CountRecord], truncation: u64) -> Result<SweepAnalysis, StatsError> {
    let (recs, merged) = collapse(records)?;
    if recs.len() < 3 {
        return Err(StatsError::TooFewPowers(recs.len()));
    }
    Ok(SweepAnalysis {
        signal_singles: loglog("signal singles", &recs, |r| r.n_s)?,
        idler_singles: loglog("idler singles", &recs, |r| r.idler_singles())?,
        twofolds: loglog("twofolds", &recs, |r| r.twofolds())?,
        threefolds: loglog("threefolds", &recs, |r| r.c_s12).ok(),
        records: recs.iter().map(|r| summarize(r, truncation)).collect::<Result<_, _>>()?,
        merged_powers_w: merged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(p: f64) -> CountRecord {
        let n = 1e11 * p;
        CountRecord {
            power_w: p,
            t_int_s: 1.0,
            tau_c_s: 1e-9,
            n_s: (2.0 * n) as u64,
            n_1: n as u64,
            n_2: n as u64,
            c_s1: (0.1 * n) as u64,
            c_s2: (0.1 * n) as u64,
            c_s12: (1e-6 * n * n) as u64,
        }
    }

    #[test]
    fn exponents_of_linear_and_quadratic_counts() {
        let recs: Vec<_> = [1e-7, 2e-7, 4e-7, 8e-7].iter().map(|&p| synthetic(p)).collect();
        let a = power_sweep_analysis(&recs, 200).unwrap();
        assert!((a.signal_singles.slope - 1.0).abs() < 1e-6);
        assert!((a.twofolds.slope - 1.0).abs() < 1e-6);
        assert!((a.threefolds.unwrap().slope - 2.0).abs() < 0.05);
    }

    #[test]
    fn duplicates_merge_and_too_few_powers_fail() {
        let recs = vec![synthetic(1e-7), synthetic(1e-7), synthetic(2e-7)];
        assert!(matches!(power_sweep_analysis(&recs, 200), Err(StatsError::TooFewPowers(2))));
        let recs = vec![synthetic(1e-7), synthetic(1e-7), synthetic(2e-7), synthetic(3e-7)];
        let a = power_sweep_analysis(&recs, 200).unwrap();
        assert_eq!(a.merged_powers_w, vec![1e-7]);
        assert_eq!(a.records.len(), 3);
    }
}
