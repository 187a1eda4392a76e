//! Campaign runner: a list of checks with settings, CSV, summary and plots.

use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CheckId, CheckReport, CheckSettings};
use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignEntry {
    pub id: CheckId,
    pub settings: CheckSettings,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub entries: Vec<CampaignEntry>,
}

impl CampaignConfig {
    /// Every check once, at `d` and finest resolution `n`.
    pub fn default_campaign(d: usize, n: usize, seed: u64, timing: bool) -> Self {
        let base = CheckSettings { seed, d, n, timing, ..CheckSettings::default() };
        let entries = CheckId::ALL
            .iter()
            .map(|&id| {
                let settings = match id {
                    CheckId::KernelNormalization | CheckId::SymbolMatch => {
                        CheckSettings { l: 40.0, n: 2 * n, ..base.clone() }
                    }
                    CheckId::RieszIdentities => CheckSettings { n_fields: 20, ..base.clone() },
                    CheckId::DerivativeComparison => CheckSettings { n: 2 * n, ..base.clone() },
                    CheckId::KornChain | CheckId::PoissonChar => CheckSettings { n_fields: 20, ..base.clone() },
                    CheckId::NullSpace => CheckSettings { n_fields: 3, ..base.clone() },
                    CheckId::PoincareKorn | CheckId::SobolevEmbedding => CheckSettings { n_fields: 5, ..base.clone() },
                    _ => base.clone(),
                };
                CampaignEntry { id, settings }
            })
            .collect();
        Self { entries }
    }
}

/// Runs every entry; reports come back in declared order.
pub fn run_campaign(config: &CampaignConfig) -> Result<Vec<CheckReport>> {
    config.entries.par_iter().map(|e| e.id.run(&e.settings)).collect()
}

pub fn write_csv(reports: &[CheckReport], mut w: impl Write) -> Result<()> {
    writeln!(w, "{}", CheckReport::csv_header())?;
    for r in reports {
        writeln!(w, "{}", r.csv_row())?;
    }
    Ok(())
}

pub fn summary_text(reports: &[CheckReport]) -> String {
    let mut out = String::new();
    let passed = reports.iter().filter(|r| r.passed).count();
    let _ = writeln!(out, "{passed}/{} checks passed", reports.len());
    for r in reports {
        let _ = writeln!(
            out,
            "{} {:<22} residual {:.3e} threshold {:.3e}",
            if r.passed { "PASS" } else { "FAIL" },
            r.check_id.as_str(),
            r.residual,
            r.threshold
        );
        for (k, v) in &r.constants {
            let _ = writeln!(out, "    {k} = {v:.6e}");
        }
        for n in &r.notes {
            let _ = writeln!(out, "    note: {n}");
        }
    }
    out
}

/// Strip plot of a report's samples on a log axis.
pub fn render_svg(report: &CheckReport) -> String {
    let (w, h, pad) = (480.0, 160.0, 40.0);
    let vals: Vec<f64> = report.samples.iter().copied().filter(|v| v.is_finite() && *v > 0.0).collect();
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" font-family=\"monospace\" font-size=\"11\">\n\
         <text x=\"{pad}\" y=\"18\">{} ({} samples)</text>\n",
        report.check_id,
        vals.len()
    );
    if let (Some(lo), Some(hi)) = (
        vals.iter().copied().reduce(f64::min).map(f64::log10),
        vals.iter().copied().reduce(f64::max).map(f64::log10),
    ) {
        let span = if hi > lo { hi - lo } else { 1.0 };
        let x = |v: f64| pad + (w - 2.0 * pad) * (v.log10() - lo) / span;
        let y0 = h / 2.0;
        let _ = writeln!(svg, "<line x1=\"{pad}\" y1=\"{y0}\" x2=\"{}\" y2=\"{y0}\" stroke=\"#888\"/>", w - pad);
        for (i, v) in vals.iter().enumerate() {
            let jitter = ((i * 37) % 21) as f64 - 10.0;
            let _ = writeln!(svg, "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"#1f5fa8\"/>", x(*v), y0 + jitter);
        }
        let _ = writeln!(svg, "<text x=\"{pad}\" y=\"{}\">{:.4e}</text>", h - 12.0, 10f64.powf(lo));
        let _ = writeln!(svg, "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.4e}</text>", w - pad, h - 12.0, 10f64.powf(hi));
    }
    svg.push_str("</svg>\n");
    svg
}
