//! Deterministic CSV renderings of the report types.
//!
//! All emitters use `.` as the decimal separator and LF line endings
//! regardless of locale. Percent-style columns are rounded to two decimals;
//! other statistics keep full precision.

use crate::dynamics::{CorrespondenceMatrix, TurnoverReport};
use crate::hashtags::{GrowthSeries, LayerHashtagReport, RingHashtagRow};
use crate::ingest::{ParseDiagnostic, RejectReason};
use crate::regression::RegressionReport;
use crate::stats::{PopulationSummary, UsageMeans, UsageStats};
use crate::model::RingId;

fn field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn opt(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

fn opt2(value: Option<f64>) -> String {
    value.map(|v| format!("{v:.2}")).unwrap_or_default()
}

/// One row per ego, with a trailing `mean` row.
pub fn usage_csv(rows: &[UsageStats], means: &UsageMeans) -> String {
    let mut out =
        String::from("ego_id,pct_social,pct_reply,pct_mention,pct_retweet,fs_ratio,tweet_freq\n");
    for r in rows {
        out.push_str(&format!(
            "{},{:.2},{:.2},{:.2},{:.2},{},{:.2}\n",
            field(&r.ego_id),
            r.pct_social,
            r.pct_reply,
            r.pct_mention,
            r.pct_retweet,
            opt2(r.fs_ratio),
            r.tweet_freq,
        ));
    }
    out.push_str(&format!(
        "mean,{:.2},{:.2},{:.2},{:.2},{},{:.2}\n",
        means.pct_social,
        means.pct_reply,
        means.pct_mention,
        means.pct_retweet,
        opt2(means.fs_ratio),
        means.tweet_freq,
    ));
    out
}

/// One row per statistic: circle sizes then scaling ratios.
pub fn population_csv(summary: &PopulationSummary) -> String {
    let mut out = String::from("statistic,mean,ci_half_width,c_index,n\n");
    for (i, s) in summary.circle_sizes.iter().enumerate() {
        out.push_str(&format!(
            "circle_size_c{},{},{},{},{}\n",
            i + 1,
            s.mean,
            s.ci_half_width,
            s.c_index,
            s.n
        ));
    }
    for (i, s) in summary.scaling_ratios.iter().enumerate() {
        out.push_str(&format!(
            "scaling_ratio_c{}_c{},{},{},{},{}\n",
            i + 2,
            i + 1,
            s.mean,
            s.ci_half_width,
            s.c_index,
            s.n
        ));
    }
    out
}

pub fn turnover_csv(report: &TurnoverReport) -> String {
    let mut out = String::from(
        "ring,mean_jaccard,jaccard_n,exit_mean_jumps,exit_mean_normalized,exit_n,\
         enter_mean_jumps,enter_mean_normalized,enter_n,\
         pooled_mean_jumps,pooled_mean_normalized,pooled_n\n",
    );
    for r in &report.rings {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.ring.label(),
            opt(r.mean_jaccard),
            r.jaccard_n,
            opt(r.exit.mean_jumps),
            opt(r.exit.mean_normalized),
            r.exit.n,
            opt(r.enter.mean_jumps),
            opt(r.enter.mean_normalized),
            r.enter.n,
            opt(r.pooled.mean_jumps),
            opt(r.pooled.mean_normalized),
            r.pooled.n,
        ));
    }
    out
}

pub fn correspondence_csv(matrix: &CorrespondenceMatrix) -> String {
    let mut out = String::from("static_ring,R1,R2,R3,R4,R5,OUT,n_ties\n");
    for (i, row) in matrix.rows.iter().enumerate() {
        out.push_str(&format!(
            "R{},{},{},{},{},{},{},{}\n",
            i + 1,
            row[0],
            row[1],
            row[2],
            row[3],
            row[4],
            row[5],
            matrix.tie_counts[i]
        ));
    }
    out
}

fn hashtag_row(out: &mut String, sample: &str, row: &RingHashtagRow) {
    let ring = row.ring.map(RingId::label).unwrap_or("ALL");
    for (group, stats) in [("activated", &row.activated), ("non_activated", &row.non_activated)] {
        out.push_str(&format!(
            "{},{},{},{:.2},{},{},{},{}\n",
            field(sample),
            ring,
            group,
            row.pct_activated,
            stats.n,
            opt(stats.mean_frequency),
            opt(stats.mean_d_rel),
            opt(stats.mean_u_rel),
        ));
    }
}

/// Rows keyed by (sample, ring, group).
pub fn hashtag_layers_csv(report: &LayerHashtagReport) -> String {
    let mut out = String::from(
        "sample,ring,group,pct_activated,n_ties,mean_frequency,mean_d_rel,mean_u_rel\n",
    );
    hashtag_row(&mut out, &report.sample, &report.overall);
    for ring in &report.rings {
        hashtag_row(&mut out, &report.sample, ring);
    }
    out
}

/// Month rows followed by a `mean` row.
pub fn growth_csv(series: &GrowthSeries) -> String {
    let mut out = String::from("month,new_alters,new_hashtags\n");
    for m in &series.months {
        out.push_str(&format!("{},{},{}\n", m.month, m.new_alters, m.new_hashtags));
    }
    out.push_str(&format!(
        "mean,{},{}\n",
        series.mean_new_alters, series.mean_new_hashtags
    ));
    out
}

/// R^2 per (sample, link group) row, columns ALL and R1..R5; empty cells for
/// models that could not be fitted.
pub fn regression_r2_csv(reports: &[RegressionReport]) -> String {
    let mut out = String::from("sample,links,ALL,R1,R2,R3,R4,R5\n");
    for report in reports {
        for (group, cells) in
            [("activated", &report.activated), ("non_activated", &report.non_activated)]
        {
            let values: Vec<String> = cells
                .iter()
                .map(|c| opt(c.model.as_ref().map(|m| m.r_squared)))
                .collect();
            out.push_str(&format!(
                "{},{},{}\n",
                field(&report.sample),
                group,
                values.join(",")
            ));
        }
    }
    out
}

/// Per-cell coefficient signs and values.
pub fn regression_coefficients_csv(reports: &[RegressionReport]) -> String {
    let mut out = String::from("sample,links,scope,predictor,coefficient,sign\n");
    for report in reports {
        for (group, cells) in
            [("activated", &report.activated), ("non_activated", &report.non_activated)]
        {
            for cell in cells.iter() {
                let Some(model) = &cell.model else { continue };
                for (name, value) in model.predictors.iter().zip(&model.coefficients) {
                    let sign = if *value > 0.0 {
                        "+"
                    } else if *value < 0.0 {
                        "-"
                    } else {
                        "0"
                    };
                    out.push_str(&format!(
                        "{},{},{},{},{},{}\n",
                        field(&report.sample),
                        group,
                        cell.scope.label(),
                        name,
                        value,
                        sign
                    ));
                }
            }
        }
    }
    out
}

/// Filter outcome: one row per ego.
pub fn filter_csv(kept: &[String], rejected: &[(String, RejectReason)]) -> String {
    let mut out = String::from("ego_id,status,reason\n");
    for ego in kept {
        out.push_str(&format!("{},kept,\n", field(ego)));
    }
    for (ego, reason) in rejected {
        out.push_str(&format!("{},rejected,{}\n", field(ego), reason));
    }
    out
}

/// Parse diagnostics, one row per malformed line.
pub fn diagnostics_csv(diagnostics: &[ParseDiagnostic]) -> String {
    let mut out = String::from("line,reason\n");
    for d in diagnostics {
        out.push_str(&format!("{},{}\n", d.line, field(&d.reason)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{Aggregation, JumpStats, RingTurnover};

    #[test]
    fn csv_uses_lf_and_dot_decimals() {
        let report = TurnoverReport {
            rings: RingId::RINGS
                .iter()
                .map(|&ring| RingTurnover {
                    ring,
                    mean_jaccard: Some(0.5),
                    jaccard_n: 4,
                    exit: JumpStats { mean_jumps: Some(2.25), mean_normalized: Some(0.75), n: 8 },
                    enter: JumpStats { mean_jumps: None, mean_normalized: None, n: 0 },
                    pooled: JumpStats { mean_jumps: Some(2.25), mean_normalized: Some(0.75), n: 8 },
                })
                .collect(),
            aggregation: Aggregation::Macro,
            n_egos: 2,
            n_window_pairs: 4,
        };
        let csv = turnover_csv(&report);
        assert!(!csv.contains('\r'));
        assert!(csv.lines().count() == 6);
        assert!(csv.contains("R1,0.5,4,2.25,0.75,8,,,0,2.25,0.75,8"));
    }

    #[test]
    fn fields_with_commas_are_quoted() {
        assert_eq!(field("a,b"), "\"a,b\"");
        assert_eq!(field("plain"), "plain");
        assert_eq!(field("say \"hi\""), "\"say \"\"hi\"\"\"");
    }
}
