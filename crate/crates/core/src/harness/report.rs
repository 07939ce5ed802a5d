//! Report serialization: JSON, CSV summary and an SVG bar chart of the
//! per-person MAE.

use std::fmt::Write as _;

use crate::error::Result;

use super::experiment::EvaluationReport;

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| v.to_string())
}

pub fn report_json(reports: &[EvaluationReport]) -> Result<String> {
    Ok(serde_json::to_string_pretty(reports)? + "\n")
}

/// One row per (cell, person) plus a `mean` and a `pooled` row per cell.
pub fn summary_csv(reports: &[EvaluationReport]) -> String {
    let mut s = String::from(
        "scenario,feature_set,personalized,pruned,person_id,mae_valence,mae_arousal,pearson_valence,pearson_arousal,error_rate\n",
    );
    for r in reports {
        let prefix = format!("{},{},{},{}", r.scenario.name(), r.feature_set.name(), r.personalized, r.pruned);
        let mut line = |who: &str, m: &super::metrics::Metrics| {
            let err = super::metrics::error_rate(0.5 * (m.valence.mae + m.arousal.mae));
            let _ = writeln!(
                s,
                "{prefix},{who},{},{},{},{},{}",
                m.valence.mae,
                m.arousal.mae,
                opt(m.valence.pearson),
                opt(m.arousal.pearson),
                err
            );
        };
        for p in &r.persons {
            line(&p.person_id, &p.metrics);
        }
        line("mean", &r.mean);
        line("pooled", &r.pooled);
    }
    s
}

/// Grouped bars of valence and arousal MAE for each person of one report.
pub fn mae_bar_svg(report: &EvaluationReport) -> String {
    let n = report.persons.len().max(1);
    let (w, h, pad) = (40.0 * n as f64 + 60.0, 240.0, 30.0);
    let top = report
        .persons
        .iter()
        .flat_map(|p| [p.metrics.valence.mae, p.metrics.arousal.mae])
        .fold(1e-9, f64::max);
    let scale = (h - 2.0 * pad) / top;
    let mut s = report
        .fingerprint
        .as_ref()
        .map_or(String::new(), |fp| format!("<!-- fingerprint={fp} -->\n"));
    s += &format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" font-family=\"sans-serif\" font-size=\"9\">\n"
    );
    let _ = writeln!(
        s,
        "<line x1=\"{pad}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        h - pad,
        w - 10.0,
        h - pad
    );
    for (i, p) in report.persons.iter().enumerate() {
        let x = pad + 10.0 + 40.0 * i as f64;
        for (k, (v, colour)) in [(p.metrics.valence.mae, "#4477aa"), (p.metrics.arousal.mae, "#cc6677")]
            .into_iter()
            .enumerate()
        {
            let bh = v * scale;
            let _ = writeln!(
                s,
                "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"14\" height=\"{:.1}\" fill=\"{colour}\"/>",
                x + 15.0 * k as f64,
                h - pad - bh,
                bh
            );
        }
        let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\">{}</text>", x, h - pad + 12.0, p.person_id);
    }
    let _ = writeln!(s, "<text x=\"{pad}\" y=\"14\">MAE per person (valence, arousal), max {top:.3}</text>");
    s.push_str("</svg>\n");
    s
}
