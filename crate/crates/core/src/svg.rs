//! Native SVG line plots for the experiment results: no plotting dependency,
//! just polylines, axes, ticks, and a legend.

use crate::harness::{ExperimentResult, Scenario};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN_L: f64 = 86.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 42.0;
const MARGIN_B: f64 = 58.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];
/// Per-series cap on polyline vertices; long traces are strided down.
const MAX_POINTS: usize = 2000;

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub series: Vec<Series>,
    /// Dashed horizontal reference lines with labels.
    pub h_lines: Vec<(f64, String)>,
}

impl LinePlot {
    pub fn render(&self) -> String {
        let mut pts: Vec<(f64, f64)> = Vec::new();
        for s in &self.series {
            pts.extend(self.visible_points(&s.points));
        }
        for (y, _) in &self.h_lines {
            if y.is_finite() {
                pts.push((pts.first().map_or(0.0, |p| p.0), *y));
            }
        }
        let (x_min, x_max) = range(pts.iter().map(|p| p.0));
        let (y_min, y_max) = padded(range(pts.iter().map(|p| p.1)));

        let to_x = |x: f64| {
            MARGIN_L + (x - x_min) / (x_max - x_min).max(f64::MIN_POSITIVE)
                * (WIDTH - MARGIN_L - MARGIN_R)
        };
        let to_y = |y: f64| {
            HEIGHT - MARGIN_B
                - (y - y_min) / (y_max - y_min).max(f64::MIN_POSITIVE)
                    * (HEIGHT - MARGIN_T - MARGIN_B)
        };

        let mut out = String::new();
        out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        out.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
        ));
        out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
        out.push_str(&format!(
            "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">{}</text>\n",
            WIDTH / 2.0,
            escape(&self.title)
        ));

        // axes
        out.push_str(&format!(
            "<line x1=\"{MARGIN_L}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
            HEIGHT - MARGIN_B,
            WIDTH - MARGIN_R,
            HEIGHT - MARGIN_B
        ));
        out.push_str(&format!(
            "<line x1=\"{MARGIN_L}\" y1=\"{MARGIN_T}\" x2=\"{MARGIN_L}\" y2=\"{}\" stroke=\"black\"/>\n",
            HEIGHT - MARGIN_B
        ));

        for t in self.x_ticks(x_min, x_max) {
            let px = to_x(t);
            out.push_str(&format!(
                "<line x1=\"{px:.2}\" y1=\"{}\" x2=\"{px:.2}\" y2=\"{}\" stroke=\"black\"/>\n",
                HEIGHT - MARGIN_B,
                HEIGHT - MARGIN_B + 5.0
            ));
            let label = if self.log_x {
                format_tick(10f64.powf(t))
            } else {
                format_tick(t)
            };
            out.push_str(&format!(
                "<text x=\"{px:.2}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">{label}</text>\n",
                HEIGHT - MARGIN_B + 18.0
            ));
        }
        for t in ticks(y_min, y_max, 6) {
            let py = to_y(t);
            out.push_str(&format!(
                "<line x1=\"{}\" y1=\"{py:.2}\" x2=\"{MARGIN_L}\" y2=\"{py:.2}\" stroke=\"black\"/>\n",
                MARGIN_L - 5.0
            ));
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
                MARGIN_L - 8.0,
                py + 4.0,
                format_tick(t)
            ));
            out.push_str(&format!(
                "<line x1=\"{MARGIN_L}\" y1=\"{py:.2}\" x2=\"{}\" y2=\"{py:.2}\" stroke=\"#dddddd\" stroke-width=\"0.5\"/>\n",
                WIDTH - MARGIN_R
            ));
        }

        // axis labels
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">{}</text>\n",
            (MARGIN_L + WIDTH - MARGIN_R) / 2.0,
            HEIGHT - 14.0,
            escape(&self.x_label)
        ));
        out.push_str(&format!(
            "<text x=\"20\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 20 {})\">{}</text>\n",
            (MARGIN_T + HEIGHT - MARGIN_B) / 2.0,
            (MARGIN_T + HEIGHT - MARGIN_B) / 2.0,
            escape(&self.y_label)
        ));

        // reference lines
        for (y, label) in &self.h_lines {
            if !y.is_finite() || *y < y_min || *y > y_max {
                continue;
            }
            let py = to_y(*y);
            out.push_str(&format!(
                "<line x1=\"{MARGIN_L}\" y1=\"{py:.2}\" x2=\"{}\" y2=\"{py:.2}\" stroke=\"#cc0000\" stroke-dasharray=\"6 4\" stroke-width=\"1\"/>\n",
                WIDTH - MARGIN_R
            ));
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#cc0000\">{}</text>\n",
                WIDTH - MARGIN_R - 4.0,
                py - 4.0,
                escape(label)
            ));
        }

        // series
        for (idx, s) in self.series.iter().enumerate() {
            let color = PALETTE[idx % PALETTE.len()];
            let visible = self.visible_points(&s.points);
            if visible.is_empty() {
                continue;
            }
            let coords: Vec<String> = visible
                .iter()
                .map(|(x, y)| format!("{:.2},{:.2}", to_x(*x), to_y(*y)))
                .collect();
            out.push_str(&format!(
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                coords.join(" ")
            ));
            // legend entry
            let ly = MARGIN_T + 8.0 + idx as f64 * 16.0;
            let lx = WIDTH - MARGIN_R - 150.0;
            out.push_str(&format!(
                "<line x1=\"{lx}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
                lx + 22.0
            ));
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
                lx + 28.0,
                ly + 4.0,
                escape(&s.label)
            ));
        }
        out.push_str("</svg>\n");
        out
    }

    fn visible_points(&self, raw: &[(f64, f64)]) -> Vec<(f64, f64)> {
        let stride = (raw.len() / MAX_POINTS).max(1);
        raw.iter()
            .enumerate()
            .filter(|(i, _)| i % stride == 0 || *i == raw.len() - 1)
            .map(|(_, p)| *p)
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(x, y)| {
                if self.log_x {
                    (x.max(1.0).log10(), y)
                } else {
                    (x, y)
                }
            })
            .collect()
    }

    fn x_ticks(&self, lo: f64, hi: f64) -> Vec<f64> {
        if self.log_x {
            let mut out = Vec::new();
            let mut d = lo.floor();
            while d <= hi.ceil() {
                if d >= lo - 1e-9 && d <= hi + 1e-9 {
                    out.push(d);
                }
                d += 1.0;
            }
            if out.is_empty() {
                out.push(lo);
            }
            out
        } else {
            ticks(lo, hi, 7)
        }
    }
}

fn range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in vals.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        (0.0, 1.0)
    } else if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn padded((lo, hi): (f64, f64)) -> (f64, f64) {
    let pad = (hi - lo) * 0.06;
    (lo - pad, hi + pad)
}

fn ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    let raw_step = span / target as f64;
    let mag = 10f64.powf(raw_step.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= target as f64)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() * step;
    let mut out = Vec::new();
    let mut t = first;
    while t <= hi + step * 1e-9 {
        out.push(if t.abs() < step * 1e-9 { 0.0 } else { t });
        t += step;
    }
    out
}

fn format_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if a >= 1e4 || a < 1e-3 {
        format!("{v:.1e}")
    } else if a >= 100.0 {
        format!("{v:.0}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders the plots appropriate for the scenario; returns (file name, svg).
pub fn render_plots(result: &ExperimentResult, log_x: bool) -> Vec<(String, String)> {
    let mut out = Vec::new();
    match result.scenario {
        Scenario::Convergence | Scenario::MovingSource => {
            let pred = LinePlot {
                title: "Regional noise power reduction".into(),
                x_label: "iteration".into(),
                y_label: "P_red [dB]".into(),
                log_x,
                series: result
                    .runs
                    .iter()
                    .map(|r| Series {
                        label: r.algorithm.name().into(),
                        points: r
                            .trace
                            .iter()
                            .map(|rec| (rec.iter as f64, rec.p_red_db))
                            .collect(),
                    })
                    .collect(),
                h_lines: Vec::new(),
            };
            out.push(("pred_vs_iteration.svg".to_string(), pred.render()));

            let h_lines = result
                .runs
                .first()
                .map(|r| {
                    vec![
                        (r.j_ext_hat, "J_ext (Wiener)".to_string()),
                        (0.5 * r.j_ext_hat, "half Wiener".to_string()),
                        (r.budget_c, "budget C".to_string()),
                    ]
                })
                .unwrap_or_default();
            let jext = LinePlot {
                title: "Exterior radiation power".into(),
                x_label: "iteration".into(),
                y_label: "J_ext [W]".into(),
                log_x,
                series: result
                    .runs
                    .iter()
                    .map(|r| Series {
                        label: r.algorithm.name().into(),
                        points: r
                            .trace
                            .iter()
                            .map(|rec| (rec.iter as f64, rec.j_ext_w))
                            .collect(),
                    })
                    .collect(),
                h_lines,
            };
            out.push(("jext_vs_iteration.svg".to_string(), jext.render()));
        }
        Scenario::LambdaSweep => {
            let budget = result.runs.first().map(|r| r.budget_c).unwrap_or(0.0);
            let jext = LinePlot {
                title: "Converged exterior radiation vs penalty weight".into(),
                x_label: "lambda [kg/s]".into(),
                y_label: "J_ext [W]".into(),
                log_x: false,
                series: vec![Series {
                    label: "penal".into(),
                    points: result
                        .lambda_curve
                        .iter()
                        .map(|p| (p.lambda, p.final_j_ext_w))
                        .collect(),
                }],
                h_lines: vec![(budget, "half Wiener".to_string())],
            };
            out.push(("jext_vs_lambda.svg".to_string(), jext.render()));
            let pred = LinePlot {
                title: "Converged noise reduction vs penalty weight".into(),
                x_label: "lambda [kg/s]".into(),
                y_label: "P_red [dB]".into(),
                log_x: false,
                series: vec![Series {
                    label: "penal".into(),
                    points: result
                        .lambda_curve
                        .iter()
                        .map(|p| (p.lambda, p.final_p_red_db))
                        .collect(),
                }],
                h_lines: Vec::new(),
            };
            out.push(("pred_vs_lambda.svg".to_string(), pred.render()));
        }
        Scenario::FreqSweep => {
            let algorithms: Vec<_> = result
                .frequency_points
                .first()
                .map(|p| p.finals.iter().map(|(a, _, _)| *a).collect())
                .unwrap_or_default();
            let mut pred_series = Vec::new();
            let mut jext_series = Vec::new();
            for alg in algorithms {
                let mut pred_pts = Vec::new();
                let mut jext_pts = Vec::new();
                for point in &result.frequency_points {
                    if let Some((_, p, j)) = point.finals.iter().find(|(a, _, _)| *a == alg) {
                        pred_pts.push((point.freq_hz, *p));
                        jext_pts.push((point.freq_hz, *j));
                    }
                }
                pred_series.push(Series {
                    label: alg.name().into(),
                    points: pred_pts,
                });
                jext_series.push(Series {
                    label: alg.name().into(),
                    points: jext_pts,
                });
            }
            jext_series.push(Series {
                label: "budget C".into(),
                points: result
                    .frequency_points
                    .iter()
                    .map(|p| (p.freq_hz, p.budget_c))
                    .collect(),
            });
            out.push((
                "pred_vs_frequency.svg".to_string(),
                LinePlot {
                    title: "Noise reduction vs frequency".into(),
                    x_label: "frequency [Hz]".into(),
                    y_label: "P_red [dB]".into(),
                    log_x: false,
                    series: pred_series,
                    h_lines: Vec::new(),
                }
                .render(),
            ));
            out.push((
                "jext_vs_frequency.svg".to_string(),
                LinePlot {
                    title: "Exterior radiation vs frequency".into(),
                    x_label: "frequency [Hz]".into(),
                    y_label: "J_ext [W]".into(),
                    log_x: false,
                    series: jext_series,
                    h_lines: Vec::new(),
                }
                .render(),
            ));
        }
    }
    out
}

/// Minimal well-formedness check used by tests and the validate subcommand:
/// every opened tag closes in order and the root is `<svg>`.
pub fn xml_well_formed(svg: &str) -> bool {
    let mut stack: Vec<String> = Vec::new();
    let mut rest = svg;
    while let Some(start) = rest.find('<') {
        let Some(end_rel) = rest[start..].find('>') else {
            return false;
        };
        let tag = &rest[start + 1..start + end_rel];
        rest = &rest[start + end_rel + 1..];
        if tag.starts_with('?') || tag.starts_with('!') {
            continue;
        }
        if let Some(name) = tag.strip_prefix('/') {
            match stack.pop() {
                Some(open) if open == name.trim() => {}
                _ => return false,
            }
        } else if !tag.ends_with('/') {
            let name = tag.split_whitespace().next().unwrap_or("");
            stack.push(name.to_string());
        }
    }
    stack.is_empty()
}
