//! Evaluation report rendering: CSV (one row per frame plus a summary row
//! per regime) and a fixed-width text table.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::EvalReport;

#[derive(Debug, Error)]
pub enum ReportIoError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReportFormat {
    Csv,
    Text,
}

/// Frame-by-frame results plus the aggregate for one evaluation regime
/// ("all_people" or "matched").
#[derive(Debug, Clone)]
pub struct RegimeReport {
    pub label: String,
    pub frames: Vec<(u64, EvalReport)>,
    pub summary: EvalReport,
}

/// A full evaluation document, possibly holding both regimes.
#[derive(Debug, Clone, Default)]
pub struct EvalDocument {
    pub regimes: Vec<RegimeReport>,
}

pub const CSV_HEADER: &str =
    "regime,frame_id,pck_rel,pck_abs,pck_root,pcod,mrpe_x_mm,mrpe_y_mm,mrpe_z_mm,matched,gt";

fn csv_row(out: &mut String, regime: &str, frame: &str, r: &EvalReport) {
    writeln!(
        out,
        "{regime},{frame},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{},{}",
        r.pck_rel,
        r.pck_abs,
        r.pck_root,
        r.pcod,
        r.mrpe_x_mm,
        r.mrpe_y_mm,
        r.mrpe_z_mm,
        r.matched_count,
        r.gt_count
    )
    .expect("string writes cannot fail");
}

/// CSV: header, one row per frame, then one `all` summary row per regime.
/// An empty evaluation renders the header alone.
pub fn render_report_csv(doc: &EvalDocument) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for regime in &doc.regimes {
        for (frame_id, report) in &regime.frames {
            csv_row(&mut out, &regime.label, &frame_id.to_string(), report);
        }
        if !regime.frames.is_empty() {
            csv_row(&mut out, &regime.label, "all", &regime.summary);
        }
    }
    out
}

/// Text table carrying the standard column names.
pub fn render_report_text(doc: &EvalDocument) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{:<12} {:>8} {:>8} {:>9} {:>7} {:>9} {:>9} {:>9} {:>11}",
        "regime",
        "PCK_rel",
        "PCK_abs",
        "PCK_root",
        "PCOD",
        "MRPE_x",
        "MRPE_y",
        "MRPE_z",
        "matched/gt"
    )
    .unwrap();
    for regime in &doc.regimes {
        let r = &regime.summary;
        writeln!(
            out,
            "{:<12} {:>8.1} {:>8.1} {:>9.1} {:>7.1} {:>9.1} {:>9.1} {:>9.1} {:>11}",
            regime.label,
            r.pck_rel,
            r.pck_abs,
            r.pck_root,
            r.pcod,
            r.mrpe_x_mm,
            r.mrpe_y_mm,
            r.mrpe_z_mm,
            format!("{}/{}", r.matched_count, r.gt_count),
        )
        .unwrap();
    }
    out
}

/// Writes the document in the requested format.
pub fn write_report(
    doc: &EvalDocument,
    path: impl AsRef<Path>,
    format: ReportFormat,
) -> Result<(), ReportIoError> {
    let path = path.as_ref();
    let text = match format {
        ReportFormat::Csv => render_report_csv(doc),
        ReportFormat::Text => render_report_text(doc),
    };
    std::fs::write(path, text).map_err(|source| ReportIoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn perfect_report(matched: u64) -> EvalReport {
        EvalReport {
            pck_rel: 100.0,
            pck_abs: 100.0,
            pck_root: 100.0,
            pcod: 100.0,
            mrpe_x_mm: 0.0,
            mrpe_y_mm: 0.0,
            mrpe_z_mm: 0.0,
            matched_count: matched,
            gt_count: matched,
        }
    }

    #[test]
    fn empty_document_is_header_only() {
        let doc = EvalDocument {
            regimes: vec![RegimeReport {
                label: "all_people".into(),
                frames: Vec::new(),
                summary: perfect_report(0),
            }],
        };
        let csv = render_report_csv(&doc);
        assert_eq!(csv.lines().count(), 1);
        assert!(csv.starts_with(CSV_HEADER));
    }

    #[test]
    fn three_frames_render_four_rows_per_regime() {
        let frames: Vec<(u64, EvalReport)> =
            (0..3).map(|f| (f, perfect_report(2))).collect();
        let doc = EvalDocument {
            regimes: vec![RegimeReport {
                label: "all_people".into(),
                frames,
                summary: perfect_report(6),
            }],
        };
        let csv = render_report_csv(&doc);
        assert_eq!(csv.lines().count(), 5); // header + 3 frames + summary
        assert!(csv.lines().last().unwrap().starts_with("all_people,all,"));
    }

    #[test]
    fn perfect_scores_render_as_100_point_0() {
        let doc = EvalDocument {
            regimes: vec![RegimeReport {
                label: "all_people".into(),
                frames: vec![(0, perfect_report(3))],
                summary: perfect_report(3),
            }],
        };
        let text = render_report_text(&doc);
        assert!(text.contains("100.0"), "text: {text}");
        assert!(text.contains("PCK_rel") && text.contains("PCOD") && text.contains("MRPE_z"));
    }
}
