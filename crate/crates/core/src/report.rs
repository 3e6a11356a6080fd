//! Machine-readable series output.
//!
//! CSV columns, in order:
//!
//! | column          | meaning                                               |
//! |-----------------|-------------------------------------------------------|
//! | `index`         | agent index `n`                                       |
//! | `theta_mode`    | `fixed0`, `fixed1` or `prior(p)`                      |
//! | `p`             | `P[a_n = θ]`, exact or estimated                      |
//! | `ci_low`        | 95% Wilson lower end (empty for exact rows)           |
//! | `ci_high`       | 95% Wilson upper end (empty for exact rows)           |
//! | `p_reveal`      | probability agent `n` revealed her signal             |
//! | `reveal_bound`  | `n^{-ε*}`                                             |
//! | `correct_bound` | `1 − 2n^{-ε*²}`                                       |
//! | `satisfied`     | every applicable bound holds (estimates get CI slack) |
//! | `method`        | `montecarlo`, `tree-closed-form`, `full-enumeration` or `cascade-chain` |
//!
//! Multi-protocol comparisons prepend a `protocol` column. JSON output is an
//! array of objects with the same keys in the same order.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::bounds::{correctness_bound, reveal_bound, BoundReport, CheckKind};
use crate::exact::ExactResult;
use crate::montecarlo::{wilson_interval, EstimateSeries, ThetaMode, CONFIDENCE};
use crate::protocol::ProtocolKind;
use crate::signal::SignalParams;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub index: u128,
    pub theta_mode: String,
    pub p: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub p_reveal: f64,
    pub reveal_bound: f64,
    pub correct_bound: f64,
    pub satisfied: bool,
    pub method: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub protocol: String,
    pub index: u128,
    pub theta_mode: String,
    pub p: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub p_reveal: f64,
    pub reveal_bound: f64,
    pub correct_bound: f64,
    pub satisfied: bool,
    pub method: String,
}

impl CompareRow {
    pub fn new(protocol: ProtocolKind, row: SeriesRow) -> Self {
        CompareRow {
            protocol: protocol.name().to_string(),
            index: row.index,
            theta_mode: row.theta_mode,
            p: row.p,
            ci_low: row.ci_low,
            ci_high: row.ci_high,
            p_reveal: row.p_reveal,
            reveal_bound: row.reveal_bound,
            correct_bound: row.correct_bound,
            satisfied: row.satisfied,
            method: row.method,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

fn row_satisfied(
    protocol: ProtocolKind,
    n: u128,
    epsilon: f64,
    p: f64,
    p_slack: f64,
    reveal: f64,
    reveal_slack: f64,
) -> bool {
    let theta = crate::signal::StateOfNature::One;
    let correct = BoundReport::evaluate(
        protocol,
        n,
        theta,
        epsilon,
        CheckKind::Correctness,
        p,
        p_slack,
    )
    .satisfied;
    let revealed = protocol != ProtocolKind::TreeDeterministic
        || BoundReport::evaluate(
            protocol,
            n,
            theta,
            epsilon,
            CheckKind::Reveal,
            reveal,
            reveal_slack,
        )
        .satisfied;
    correct && revealed
}

/// Rows for a Monte Carlo series, with bounds at ε*.
pub fn estimate_rows(series: &EstimateSeries, params: &SignalParams) -> Vec<SeriesRow> {
    let eps = params.derived().epsilon_star;
    (0..series.indices.len())
        .map(|i| {
            let n = series.indices[i];
            let (rlo, rhi) = wilson_interval(series.reveals[i], series.trials, CONFIDENCE);
            SeriesRow {
                index: n,
                theta_mode: series.theta_mode.to_string(),
                p: series.p_hat[i],
                ci_low: Some(series.ci_low[i]),
                ci_high: Some(series.ci_high[i]),
                p_reveal: series.reveal_hat[i],
                reveal_bound: reveal_bound(n, eps),
                correct_bound: correctness_bound(n, eps),
                satisfied: row_satisfied(
                    series.protocol,
                    n,
                    eps,
                    series.p_hat[i],
                    series.ci_half_width[i],
                    series.reveal_hat[i],
                    (rhi - rlo) / 2.0,
                ),
                method: "montecarlo".to_string(),
            }
        })
        .collect()
}

/// Rows for exact results conditional on one θ.
pub fn exact_rows(
    protocol: ProtocolKind,
    results: &[ExactResult],
    params: &SignalParams,
) -> Vec<SeriesRow> {
    let eps = params.derived().epsilon_star;
    results
        .iter()
        .map(|r| SeriesRow {
            index: r.n,
            theta_mode: ThetaMode::Fixed(r.theta).to_string(),
            p: r.p_correct,
            ci_low: None,
            ci_high: None,
            p_reveal: r.p_reveal,
            reveal_bound: reveal_bound(r.n, eps),
            correct_bound: correctness_bound(r.n, eps),
            satisfied: row_satisfied(protocol, r.n, eps, r.p_correct, 0.0, r.p_reveal, 0.0),
            method: r.method.name().to_string(),
        })
        .collect()
}

/// Prior-weighted rows from the two conditional series. The bounds are
/// per-θ, so a weighted row is satisfied when both conditional rows are.
pub fn prior_rows(zero: &[SeriesRow], one: &[SeriesRow], prior: f64) -> Vec<SeriesRow> {
    zero.iter()
        .zip(one)
        .map(|(a, b)| SeriesRow {
            index: a.index,
            theta_mode: ThetaMode::Prior(prior).to_string(),
            p: crate::exact::prior_weighted(a.p, b.p, prior),
            ci_low: None,
            ci_high: None,
            p_reveal: crate::exact::prior_weighted(a.p_reveal, b.p_reveal, prior),
            reveal_bound: a.reveal_bound,
            correct_bound: a.correct_bound,
            satisfied: a.satisfied && b.satisfied,
            method: a.method.clone(),
        })
        .collect()
}

pub fn write_rows<T: Serialize, W: Write>(
    rows: &[T],
    format: OutputFormat,
    out: W,
) -> std::io::Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut writer = csv::Writer::from_writer(out);
            for row in rows {
                writer.serialize(row).map_err(std::io::Error::other)?;
            }
            writer.flush()
        }
        OutputFormat::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, rows).map_err(std::io::Error::other)?;
            out.write_all(b"\n")?;
            out.flush()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::StateOfNature;

    fn sample() -> Vec<SeriesRow> {
        vec![
            SeriesRow {
                index: 1,
                theta_mode: "fixed1".into(),
                p: 0.6,
                ci_low: Some(0.59),
                ci_high: Some(0.61),
                p_reveal: 1.0,
                reveal_bound: 1.0,
                correct_bound: -1.0,
                satisfied: true,
                method: "montecarlo".into(),
            },
            SeriesRow {
                index: 1u128 << 100,
                theta_mode: "prior(0.5)".into(),
                p: 0.25,
                ci_low: None,
                ci_high: None,
                p_reveal: 0.0,
                reveal_bound: 0.5,
                correct_bound: 0.0,
                satisfied: false,
                method: "tree-closed-form".into(),
            },
        ]
    }

    #[test]
    fn csv_header_and_quoting() {
        let mut buf = Vec::new();
        write_rows(&sample(), OutputFormat::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "index,theta_mode,p,ci_low,ci_high,p_reveal,reveal_bound,correct_bound,satisfied,method"
        );
        assert_eq!(
            lines.next().unwrap(),
            "1,fixed1,0.6,0.59,0.61,1.0,1.0,-1.0,true,montecarlo"
        );
        assert_eq!(
            lines.next().unwrap(),
            "1267650600228229401496703205376,prior(0.5),0.25,,,0.0,0.5,0.0,false,tree-closed-form"
        );
    }

    #[test]
    fn csv_and_json_round_trip() {
        let rows = sample();
        let mut buf = Vec::new();
        write_rows(&rows, OutputFormat::Json, &mut buf).unwrap();
        let back: Vec<SeriesRow> = serde_json::from_slice(&buf).unwrap();
        assert_eq!(back, rows);
        let mut buf = Vec::new();
        write_rows(&rows, OutputFormat::Csv, &mut buf).unwrap();
        let back: Vec<SeriesRow> = csv::Reader::from_reader(&buf[..])
            .deserialize()
            .collect::<Result<_, _>>()
            .unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn json_keys_in_schema_order() {
        let mut buf = Vec::new();
        write_rows(&sample()[..1], OutputFormat::Json, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let keys = [
            "index",
            "theta_mode",
            "p",
            "ci_low",
            "ci_high",
            "p_reveal",
            "reveal_bound",
            "correct_bound",
            "satisfied",
            "method",
        ];
        let positions: Vec<usize> = keys
            .iter()
            .map(|k| text.find(&format!("\"{k}\"")).unwrap())
            .collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn prior_rows_weight_both_states() {
        let params = SignalParams::new(0.4, 0.6).unwrap();
        let zero = exact_rows(
            ProtocolKind::TreeDeterministic,
            &[crate::exact::tree_exact(2, &params, StateOfNature::Zero).unwrap()],
            &params,
        );
        let one = exact_rows(
            ProtocolKind::TreeDeterministic,
            &[crate::exact::tree_exact(2, &params, StateOfNature::One).unwrap()],
            &params,
        );
        let prior = prior_rows(&zero, &one, 0.25);
        assert!((prior[0].p - (0.75 * zero[0].p + 0.25 * one[0].p)).abs() < 1e-15);
        assert_eq!(prior[0].theta_mode, "prior(0.25)");
    }
}
