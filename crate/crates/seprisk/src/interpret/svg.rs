use std::fmt::Write as _;
use std::path::Path;

use crate::cli::fsutil::write_atomic_string;
use crate::error::Result;
use crate::interpret::curve::RiskCurve;

/// Canvas settings for [`render_svg`].
#[derive(Debug, Clone)]
pub struct SvgOptions {
    pub width: u32,
    pub height: u32,
    /// Defaults to the feature name.
    pub title: Option<String>,
}

impl Default for SvgOptions {
    fn default() -> Self {
        SvgOptions { width: 640, height: 440, title: None }
    }
}

const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 16.0;
const MARGIN_T: f64 = 34.0;
const MARGIN_B: f64 = 46.0;
/// Fraction of the plot height reserved for the class histograms at the
/// bottom, mirroring the curve-over-histograms figure layout.
const HIST_FRACTION: f64 = 0.28;

/// Renders a risk curve as a standalone SVG: mean odds-factor line, a
/// mean +/- sd band, thin per-run lines, and the two class histograms along
/// the bottom (survivors green, non-survivors red) on their own scale.
pub fn render_svg(curve: &RiskCurve, opts: &SvgOptions) -> String {
    let w = f64::from(opts.width.max(200));
    let h = f64::from(opts.height.max(160));
    let (px0, px1) = (MARGIN_L, w - MARGIN_R);
    let (py0, py1) = (MARGIN_T, h - MARGIN_B);
    let hist_top = py1 - (py1 - py0) * HIST_FRACTION;

    // Shared x-range: grid plus histogram support.
    let mut xlo = curve.grid[0];
    let mut xhi = curve.grid[curve.grid.len() - 1];
    for &e in &curve.histograms.edges {
        xlo = xlo.min(e);
        xhi = xhi.max(e);
    }
    // Odds axis from zero; curves live at >= 1.
    let mut yhi: f64 = 1.0;
    for run in &curve.runs {
        for &o in &run.odds_factor {
            yhi = yhi.max(o);
        }
    }
    for (m, s) in curve.mean_odds.iter().zip(&curve.sd_odds) {
        yhi = yhi.max(m + s);
    }
    yhi *= 1.05;
    let sx = move |x: f64| px0 + (x - xlo) / (xhi - xlo) * (px1 - px0);
    let sy = move |y: f64| py1 - y / yhi * (py1 - py0);

    let mut svg = String::new();
    let _ = write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {w} {h}\" \
         font-family=\"sans-serif\" font-size=\"11\">\n"
    );
    let _ = writeln!(svg, "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>");

    // Histograms first so the curves draw over them.
    let hist_max = curve
        .histograms
        .survivor
        .iter()
        .chain(&curve.histograms.non_survivor)
        .cloned()
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    for (densities, color) in [
        (&curve.histograms.survivor, "#7fc97f"),
        (&curve.histograms.non_survivor, "#d95f5f"),
    ] {
        for (b, &d) in densities.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            let x = sx(curve.histograms.edges[b]);
            let bw = sx(curve.histograms.edges[b + 1]) - x;
            let bh = d / hist_max * (py1 - hist_top);
            let _ = writeln!(
                svg,
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" \
                 fill=\"{color}\" fill-opacity=\"0.5\"/>",
                x,
                py1 - bh,
                bw,
                bh
            );
        }
    }

    // Uncertainty band: mean + sd across, then back along mean - sd.
    let mut band = String::new();
    for (i, &x) in curve.grid.iter().enumerate() {
        let _ = write!(band, "{:.2},{:.2} ", sx(x), sy(curve.mean_odds[i] + curve.sd_odds[i]));
    }
    for (i, &x) in curve.grid.iter().enumerate().rev() {
        let y = (curve.mean_odds[i] - curve.sd_odds[i]).max(0.0);
        let _ = write!(band, "{:.2},{:.2} ", sx(x), sy(y));
    }
    let _ = writeln!(
        svg,
        "<polygon points=\"{}\" fill=\"#b9cdeb\" fill-opacity=\"0.55\"/>",
        band.trim_end()
    );

    let polyline = |ys: &[f64], stroke: &str, width: f64, opacity: f64| -> String {
        let mut pts = String::new();
        for (i, &x) in curve.grid.iter().enumerate() {
            let _ = write!(pts, "{:.2},{:.2} ", sx(x), sy(ys[i]));
        }
        format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{stroke}\" \
             stroke-width=\"{width}\" stroke-opacity=\"{opacity}\"/>\n",
            pts.trim_end()
        )
    };
    for run in &curve.runs {
        svg.push_str(&polyline(&run.odds_factor, "#8d99a8", 1.0, 0.7));
    }
    svg.push_str(&polyline(&curve.mean_odds, "#1f4e9c", 2.0, 1.0));

    // Axes and ticks.
    let _ = writeln!(
        svg,
        "<path d=\"M {px0} {py0} L {px0} {py1} L {px1} {py1}\" fill=\"none\" stroke=\"black\"/>"
    );
    for t in 0..=4 {
        let frac = f64::from(t) / 4.0;
        let xv = xlo + frac * (xhi - xlo);
        let xp = sx(xv);
        let _ = writeln!(
            svg,
            "<line x1=\"{xp:.2}\" y1=\"{py1}\" x2=\"{xp:.2}\" y2=\"{:.2}\" stroke=\"black\"/>",
            py1 + 4.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{xp:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
            py1 + 16.0,
            fmt_tick(xv)
        );
        let yv = frac * yhi;
        let yp = sy(yv);
        let _ = writeln!(
            svg,
            "<line x1=\"{:.2}\" y1=\"{yp:.2}\" x2=\"{px0}\" y2=\"{yp:.2}\" stroke=\"black\"/>",
            px0 - 4.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>",
            px0 - 7.0,
            yp + 4.0,
            fmt_tick(yv)
        );
    }
    let title = opts.title.as_deref().unwrap_or(&curve.feature);
    let _ = writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">{}</text>",
        (px0 + px1) / 2.0,
        xml_escape(title)
    );
    let _ = writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
        (px0 + px1) / 2.0,
        h - 10.0,
        xml_escape(&curve.feature)
    );
    let _ = writeln!(
        svg,
        "<text x=\"14\" y=\"{:.2}\" text-anchor=\"middle\" \
         transform=\"rotate(-90 14 {:.2})\">odds factor</text>",
        (py0 + py1) / 2.0,
        (py0 + py1) / 2.0
    );
    svg.push_str("</svg>\n");
    svg
}

pub fn write_svg(curve: &RiskCurve, opts: &SvgOptions, path: &Path) -> Result<()> {
    write_atomic_string(path, &render_svg(curve, opts))
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    let s = if a >= 100.0 {
        format!("{v:.0}")
    } else if a >= 1.0 {
        format!("{v:.2}")
    } else {
        format!("{v:.3}")
    };
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interpret::curve::RunCurve;
    use crate::interpret::hist::ClassHistograms;

    fn toy_curve(runs: usize) -> RiskCurve {
        let grid = vec![0.0, 1.0, 2.0];
        let runs: Vec<RunCurve> = (0..runs)
            .map(|r| {
                let c: Vec<f64> = grid.iter().map(|&x| x * (r + 1) as f64).collect();
                RunCurve {
                    run_id: r,
                    odds_factor: c.iter().map(|&v| v.exp()).collect(),
                    logodds_contribution: c,
                }
            })
            .collect();
        let n = grid.len();
        let mean_odds: Vec<f64> =
            (0..n).map(|i| runs.iter().map(|r| r.odds_factor[i]).sum::<f64>() / runs.len() as f64).collect();
        RiskCurve {
            feature: "x".into(),
            grid,
            mean_odds,
            sd_odds: vec![0.1; n],
            runs,
            histograms: ClassHistograms {
                feature: "x".into(),
                edges: vec![0.0, 1.0, 2.0],
                survivor: vec![0.75, 0.25],
                non_survivor: vec![0.0, 1.0],
            },
        }
    }

    #[test]
    fn emits_one_polyline_per_run_plus_the_mean() {
        let svg = render_svg(&toy_curve(3), &SvgOptions::default());
        assert!(svg.starts_with("<svg "));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 4);
        assert_eq!(svg.matches("<polygon").count(), 1);
    }

    #[test]
    fn draws_bars_only_for_nonzero_bins() {
        let svg = render_svg(&toy_curve(1), &SvgOptions::default());
        // Background rect + 3 nonzero density bars.
        assert_eq!(svg.matches("<rect").count(), 4);
        assert!(svg.contains("#7fc97f") && svg.contains("#d95f5f"));
    }

    #[test]
    fn escapes_markup_in_titles() {
        let mut curve = toy_curve(1);
        curve.feature = "a<b".into();
        let svg = render_svg(&curve, &SvgOptions { title: Some("x & y".into()), ..Default::default() });
        assert!(svg.contains("x &amp; y"));
        assert!(svg.contains("a&lt;b"));
        assert!(!svg.contains("a<b"));
    }

    #[test]
    fn tick_labels_trim_trailing_zeros() {
        assert_eq!(fmt_tick(0.0), "0");
        assert_eq!(fmt_tick(1.50), "1.5");
        assert_eq!(fmt_tick(0.250), "0.25");
        assert_eq!(fmt_tick(250.0), "250");
        assert_eq!(fmt_tick(-2.0), "-2");
    }
}
