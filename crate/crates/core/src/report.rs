//! CSV and SVG artifact writers.
//!
//! Output is a pure function of the inputs (no timestamps, fixed float
//! formatting), so re-running a command overwrites byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::landscape::LandscapeProfile;
use crate::perturb::PerturbationKind;
use crate::spectrum::{linear_fit, NoiseScanRow, ScanRow};

/// One row of the accuracy table: `epsilon,norm,kind,train_acc,test_acc,gap`.
#[derive(Debug, Clone)]
pub struct AccuracyRow {
    pub epsilon: f64,
    pub kind: PerturbationKind,
    pub train_acc: f64,
    pub test_acc: f64,
    pub gap: f64,
}

pub fn accuracy_csv(rows: &[AccuracyRow]) -> String {
    let mut out = String::from("epsilon,norm,kind,train_acc,test_acc,gap\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt(r.epsilon),
            r.kind.norm(),
            r.kind.family(),
            fmt(r.train_acc),
            fmt(r.test_acc),
            fmt(r.gap)
        )
        .unwrap();
    }
    out
}

/// Landscape curves: `alpha,loss,epsilon,norm,kind,seed`.
pub fn landscape_csv(profiles: &[LandscapeProfile]) -> String {
    let mut out = String::from("alpha,loss,epsilon,norm,kind,seed\n");
    for p in profiles {
        for (&alpha, &loss) in p.alphas.iter().zip(&p.losses) {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                fmt(alpha),
                fmt(loss),
                fmt(p.spec.epsilon),
                p.spec.kind.norm(),
                p.spec.kind.family(),
                p.direction_seed
            )
            .unwrap();
        }
    }
    out
}

/// Curvature summary per profile: `epsilon,norm,kind,curvature`.
pub fn curvature_csv(rows: &[(f64, PerturbationKind, f64)]) -> String {
    let mut out = String::from("epsilon,norm,kind,curvature\n");
    for (epsilon, kind, curvature) in rows {
        writeln!(
            out,
            "{},{},{},{}",
            fmt(*epsilon),
            kind.norm(),
            kind.family(),
            fmt(*curvature)
        )
        .unwrap();
    }
    out
}

/// Spectrum rows:
/// `epsilon,norm,kind,rank,eigenvalue,eigenvalue_times_wnorm,w_norm,train_loss,lanczos_rel_err`;
/// a trailing `rank = 0` summary row carries the R^2 of the top-eigenvalue
/// vs epsilon linear fit in the `eigenvalue` column.
pub fn spectrum_csv(rows: &[ScanRow]) -> String {
    let mut out = String::from(
        "epsilon,norm,kind,rank,eigenvalue,eigenvalue_times_wnorm,w_norm,train_loss,lanczos_rel_err\n",
    );
    for r in rows {
        for (i, &val) in r.eigenvalues.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                fmt(r.epsilon),
                r.kind.norm(),
                r.kind.family(),
                i + 1,
                fmt(val),
                fmt(val * r.w_norm),
                fmt(r.w_norm),
                fmt(r.train_loss),
                fmt(r.lanczos_rel_err)
            )
            .unwrap();
        }
    }
    if rows.len() >= 2 {
        let xs: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.eigenvalues[0]).collect();
        let (_, _, r2) = linear_fit(&xs, &ys);
        let kind = rows[0].kind;
        writeln!(
            out,
            "{},{},{},0,{},0,0,0,0",
            fmt(0.0),
            kind.norm(),
            kind.family(),
            fmt(r2)
        )
        .unwrap();
    }
    out
}

/// Random-noise trajectory rows: `epsilon,epoch,top_eigenvalue,grad_norm`.
pub fn noise_scan_csv(rows: &[NoiseScanRow]) -> String {
    let mut out = String::from("epsilon,epoch,top_eigenvalue,grad_norm\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{}",
            fmt(r.epsilon),
            r.epoch,
            fmt(r.top_eigenvalue),
            fmt(r.grad_norm)
        )
        .unwrap();
    }
    out
}

fn fmt(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        // keep integers compact but unambiguous
        format!("{v:.1}")
    } else {
        format!("{v}")
    }
}

/// One polyline in a plot.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

/// Renders a fixed-size line plot with axes, ticks and a legend as SVG.
pub fn line_plot_svg(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    const W: f64 = 800.0;
    const H: f64 = 560.0;
    const ML: f64 = 80.0; // left margin
    const MR: f64 = 160.0; // room for the legend
    const MT: f64 = 50.0;
    const MB: f64 = 60.0;

    let all_points: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|s| s.points.iter().copied())
        .collect();
    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &all_points {
        x_min = x_min.min(x);
        x_max = x_max.max(x);
        y_min = y_min.min(y);
        y_max = y_max.max(y);
    }
    if all_points.is_empty() {
        x_min = 0.0;
        x_max = 1.0;
        y_min = 0.0;
        y_max = 1.0;
    }
    if x_max == x_min {
        x_max = x_min + 1.0;
    }
    if y_max == y_min {
        y_max = y_min + 1.0;
    }
    let sx = |x: f64| ML + (x - x_min) / (x_max - x_min) * (W - ML - MR);
    let sy = |y: f64| H - MB - (y - y_min) / (y_max - y_min) * (H - MT - MB);

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    )
    .unwrap();
    writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
    writeln!(
        svg,
        r#"<text x="{:.1}" y="28" font-family="sans-serif" font-size="18" text-anchor="middle">{}</text>"#,
        (ML + W - MR) / 2.0,
        escape(title)
    )
    .unwrap();
    // axes
    writeln!(
        svg,
        r#"<line x1="{ML:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black"/>"#,
        H - MB,
        W - MR,
        H - MB
    )
    .unwrap();
    writeln!(
        svg,
        r#"<line x1="{ML:.1}" y1="{MT:.1}" x2="{ML:.1}" y2="{:.1}" stroke="black"/>"#,
        H - MB
    )
    .unwrap();
    // ticks
    for i in 0..=4 {
        let fx = x_min + (x_max - x_min) * i as f64 / 4.0;
        let px = sx(fx);
        writeln!(
            svg,
            r#"<line x1="{px:.1}" y1="{:.1}" x2="{px:.1}" y2="{:.1}" stroke="black"/>"#,
            H - MB,
            H - MB + 6.0
        )
        .unwrap();
        writeln!(
            svg,
            r#"<text x="{px:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle">{:.3}</text>"#,
            H - MB + 22.0,
            fx
        )
        .unwrap();
        let fy = y_min + (y_max - y_min) * i as f64 / 4.0;
        let py = sy(fy);
        writeln!(
            svg,
            r#"<line x1="{:.1}" y1="{py:.1}" x2="{ML:.1}" y2="{py:.1}" stroke="black"/>"#,
            ML - 6.0
        )
        .unwrap();
        writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="end">{:.4}</text>"#,
            ML - 10.0,
            py + 4.0,
            fy
        )
        .unwrap();
    }
    writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        (ML + W - MR) / 2.0,
        H - 14.0,
        escape(x_label)
    )
    .unwrap();
    writeln!(
        svg,
        r#"<text x="20" y="{:.1}" font-family="sans-serif" font-size="14" text-anchor="middle" transform="rotate(-90 20 {:.1})">{}</text>"#,
        (MT + H - MB) / 2.0,
        (MT + H - MB) / 2.0,
        escape(y_label)
    )
    .unwrap();
    // curves
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut path = String::new();
        for (j, &(x, y)) in s.points.iter().enumerate() {
            let cmd = if j == 0 { "M" } else { "L" };
            write!(path, "{cmd}{:.2} {:.2} ", sx(x), sy(y)).unwrap();
        }
        writeln!(
            svg,
            r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.8"/>"#,
            path.trim_end()
        )
        .unwrap();
        // legend entry
        let ly = MT + 10.0 + i as f64 * 20.0;
        writeln!(
            svg,
            r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/>"#,
            W - MR + 10.0,
            W - MR + 40.0
        )
        .unwrap();
        writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12">{}</text>"#,
            W - MR + 46.0,
            ly + 4.0,
            escape(&s.label)
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Writes a text artifact, creating parent directories as needed.
pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}
