//! Static SVG scatter of the benchmark landscape.
//!
//! Two panels: the full [0,1]×[0,1] square and a zoom onto the occupied
//! region. Baselines draw as grey/black circles, utility-aware sampling
//! as triangles and reweighing as squares colored by α (blue = fairness
//! weighted, red = performance weighted); Pareto-frontier points get a
//! black outline and the 80% rule draws as a dashed line.

use std::fmt::Write as _;

use super::benchmark::EvalReport;
use super::metrics::FairnessMetric;
use super::pareto::RULE80_THRESHOLD;

const PANEL_W: f64 = 420.0;
const PANEL_H: f64 = 420.0;
const MARGIN: f64 = 56.0;
const GAP: f64 = 48.0;

fn alpha_color(alpha: f64) -> String {
    let t = alpha.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + t * (b - a)).round() as u8;
    format!("rgb({},{},{})", lerp(40.0, 220.0), lerp(90.0, 60.0), lerp(220.0, 50.0))
}

fn base_color(label: &str) -> &'static str {
    if label == "none" {
        "#222222"
    } else if label == "rps" {
        "#888888"
    } else {
        "#b07030" // rw
    }
}

struct Panel {
    x0: f64,
    y0: f64,
    min_x: f64,
    max_x: f64,
    min_y: f64,
    max_y: f64,
}

impl Panel {
    fn px(&self, x: f64) -> f64 {
        self.x0 + (x - self.min_x) / (self.max_x - self.min_x) * PANEL_W
    }
    fn py(&self, y: f64) -> f64 {
        // svg y grows downward
        self.y0 + PANEL_H - (y - self.min_y) / (self.max_y - self.min_y) * PANEL_H
    }
}

fn marker(out: &mut String, label: &str, x: f64, y: f64, size: f64, fill: &str, on_frontier: bool) {
    let stroke = if on_frontier {
        " stroke=\"#000000\" stroke-width=\"1.5\""
    } else {
        " stroke=\"none\""
    };
    let opacity = if on_frontier { 1.0 } else { 0.55 };
    if label.starts_with("uasp") {
        // upward triangle
        let pts = format!(
            "{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}",
            x,
            y - size,
            x - size,
            y + size * 0.8,
            x + size,
            y + size * 0.8
        );
        let _ = write!(
            out,
            "<polygon points=\"{pts}\" fill=\"{fill}\" fill-opacity=\"{opacity}\"{stroke}/>"
        );
    } else if label.starts_with("uar") {
        let _ = write!(
            out,
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{fill}\" fill-opacity=\"{opacity}\"{stroke}/>",
            x - size,
            y - size,
            2.0 * size,
            2.0 * size
        );
    } else {
        let _ = write!(
            out,
            "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"{size:.2}\" fill=\"{fill}\" fill-opacity=\"{opacity}\"{stroke}/>"
        );
    }
    out.push('\n');
}

fn draw_panel(out: &mut String, report: &EvalReport, metric: FairnessMetric, panel: &Panel, title: &str) {
    let frontier = &report.pareto[&metric];
    let _ = write!(
        out,
        "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{PANEL_W}\" height=\"{PANEL_H}\" fill=\"#fbfbfb\" stroke=\"#333333\"/>\n",
        panel.x0, panel.y0
    );
    let _ = write!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"13\" text-anchor=\"middle\">{title}</text>\n",
        panel.x0 + PANEL_W / 2.0,
        panel.y0 - 10.0
    );
    // axes labels and ticks
    for k in 0..=4 {
        let fx = panel.min_x + (panel.max_x - panel.min_x) * f64::from(k) / 4.0;
        let fy = panel.min_y + (panel.max_y - panel.min_y) * f64::from(k) / 4.0;
        let _ = write!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"10\" text-anchor=\"middle\">{fx:.2}</text>\n",
            panel.px(fx),
            panel.y0 + PANEL_H + 14.0
        );
        let _ = write!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"10\" text-anchor=\"end\">{fy:.2}</text>\n",
            panel.x0 - 6.0,
            panel.py(fy) + 3.0
        );
    }
    let _ = write!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"middle\">TPR @ FPR≤{:.0}%</text>\n",
        panel.x0 + PANEL_W / 2.0,
        panel.y0 + PANEL_H + 32.0,
        report.fpr_target * 100.0
    );
    let _ = write!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 {:.1} {:.1})\">{} ratio</text>\n",
        panel.x0 - 38.0,
        panel.y0 + PANEL_H / 2.0,
        panel.x0 - 38.0,
        panel.y0 + PANEL_H / 2.0,
        metric
    );
    // 80% rule line
    if RULE80_THRESHOLD >= panel.min_y && RULE80_THRESHOLD <= panel.max_y {
        let y = panel.py(RULE80_THRESHOLD);
        let _ = write!(
            out,
            "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#d02020\" stroke-dasharray=\"6,4\"/>\n",
            panel.x0,
            panel.x0 + PANEL_W
        );
    }
    // non-frontier points first, frontier points on top
    for pass in [false, true] {
        for (i, p) in report.points.iter().enumerate() {
            let on_frontier = frontier.binary_search(&i).is_ok();
            if on_frontier != pass {
                continue;
            }
            let fair = p.fairness[&metric];
            if p.performance < panel.min_x
                || p.performance > panel.max_x
                || fair < panel.min_y
                || fair > panel.max_y
            {
                continue;
            }
            let fill = match p.alpha {
                Some(a) => alpha_color(a),
                None => base_color(&p.intervention).to_string(),
            };
            let size = if on_frontier { 6.0 } else { 3.5 };
            marker(
                out,
                &p.intervention,
                panel.px(p.performance),
                panel.py(fair),
                size,
                &fill,
                on_frontier,
            );
        }
    }
}

/// Render the performance/fairness landscape for one metric as a
/// two-panel SVG (full unit square and a zoom onto the data).
pub fn scatter_svg(report: &EvalReport, metric: FairnessMetric) -> String {
    let width = MARGIN * 2.0 + PANEL_W * 2.0 + GAP;
    let height = MARGIN * 2.0 + PANEL_H;
    let mut out = String::new();
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\">\n"
    );
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    let full = Panel {
        x0: MARGIN,
        y0: MARGIN,
        min_x: 0.0,
        max_x: 1.0,
        min_y: 0.0,
        max_y: 1.0,
    };
    draw_panel(&mut out, report, metric, &full, "full landscape");

    // zoom panel bounds: data bounding box with 5% padding
    let (mut lo_x, mut hi_x, mut lo_y, mut hi_y) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in &report.points {
        let fair = p.fairness[&metric];
        lo_x = lo_x.min(p.performance);
        hi_x = hi_x.max(p.performance);
        lo_y = lo_y.min(fair);
        hi_y = hi_y.max(fair);
    }
    let pad = |lo: f64, hi: f64| {
        let span = (hi - lo).max(0.02);
        ((lo - span * 0.05).max(0.0), (hi + span * 0.05).min(1.0))
    };
    let (min_x, max_x) = pad(lo_x, hi_x);
    let (min_y, max_y) = pad(lo_y, hi_y);
    let zoom = Panel {
        x0: MARGIN + PANEL_W + GAP,
        y0: MARGIN,
        min_x,
        max_x,
        min_y,
        max_y,
    };
    draw_panel(&mut out, report, metric, &zoom, "zoom");

    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::benchmark::{BenchmarkConfig, EvalPoint, ThresholdMode};
    use crate::valuation::ValuationConfig;
    use std::collections::BTreeMap;

    fn tiny_report() -> EvalReport {
        let mk = |perf: f64, fair: f64, label: &str, alpha: Option<f64>| {
            let mut fairness = BTreeMap::new();
            for m in FairnessMetric::all() {
                fairness.insert(m, fair);
            }
            EvalPoint {
                model_id: 0,
                intervention: label.to_string(),
                intervention_index: 0,
                alpha,
                performance: perf,
                fairness,
                threshold: 0.5,
            }
        };
        let points = vec![
            mk(0.6, 0.9, "none", None),
            mk(0.7, 0.5, "uasp(linear,alpha=0.2)", Some(0.2)),
            mk(0.5, 0.95, "uar(linear,alpha=0.8,min_max)", Some(0.8)),
        ];
        let mut pareto = BTreeMap::new();
        let mut rule80 = BTreeMap::new();
        for m in FairnessMetric::all() {
            pareto.insert(m, vec![0usize, 1, 2]);
            rule80.insert(m, Some(0));
        }
        EvalReport {
            schema_version: 1,
            fpr_target: 0.05,
            points,
            pareto,
            rule80,
            config: BenchmarkConfig {
                protected_column: "z".into(),
                interventions: vec![],
                grid: vec![],
                valuation: ValuationConfig::default(),
                fpr_target: 0.05,
                threshold_mode: ThresholdMode::Test,
                seed: 0,
            },
            warnings: vec![],
        }
    }

    #[test]
    fn svg_contains_panels_and_markers() {
        let svg = scatter_svg(&tiny_report(), FairnessMetric::DemographicParity);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("full landscape"));
        assert!(svg.contains("zoom"));
        assert!(svg.contains("<polygon")); // uasp triangle
        assert!(svg.contains("<rect x=")); // uar square
        assert!(svg.contains("<circle")); // baseline circle
        assert!(svg.contains("demographic_parity"));
    }

    #[test]
    fn svg_is_deterministic() {
        let r = tiny_report();
        let a = scatter_svg(&r, FairnessMetric::EqualOpportunity);
        let b = scatter_svg(&r, FairnessMetric::EqualOpportunity);
        assert_eq!(a, b);
    }
}
