//! SVG figures rendered from the CSV files alone.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::error::{CliError, CliResult};

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Style {
    Line,
    Dashed,
    Markers,
    Steps,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
    pub color: &'static str,
}

#[derive(Debug, Clone, Default)]
pub struct Panel {
    pub title: String,
    pub xlabel: String,
    pub ylabel: String,
    pub series: Vec<Series>,
    /// Logarithmic y axis; non-positive values are dropped.
    pub log_y: bool,
}

const W: f64 = 560.0;
const H: f64 = 380.0;
const ML: f64 = 70.0;
const MR: f64 = 150.0;
const MT: f64 = 34.0;
const MB: f64 = 50.0;

fn nice_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    mag * if f < 1.5 {
        1.0
    } else if f < 3.5 {
        2.0
    } else if f < 7.5 {
        5.0
    } else {
        10.0
    }
}

fn tick_label(v: f64, step: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if step >= 1.0 && v.abs() < 1e6 {
        format!("{v:.0}")
    } else if step >= 1e-3 && v.abs() < 1e6 {
        let digits = (-step.log10().floor()).max(0.0) as usize;
        format!("{v:.digits$}")
    } else {
        format!("{v:.1e}")
    }
}

fn range(series: &[Series], pick: fn(&(f64, f64)) -> f64) -> (f64, f64) {
    let (lo, hi) = series
        .iter()
        .flat_map(|s| s.points.iter().map(pick))
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(v), b.max(v))
        });
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-300 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn render_panel(out: &mut String, panel: &Panel, ox: f64, oy: f64) {
    if panel.log_y {
        let mut linear = panel.clone();
        linear.log_y = false;
        for s in &mut linear.series {
            s.points = s
                .points
                .iter()
                .filter(|p| p.1 > 0.0)
                .map(|p| (p.0, p.1.log10()))
                .collect();
        }
        linear.ylabel = format!("log10 {}", panel.ylabel);
        return render_panel(out, &linear, ox, oy);
    }
    let (x0, x1) = range(&panel.series, |p| p.0);
    let (mut y0, y1) = range(&panel.series, |p| p.1);
    if y0 > 0.0 && y0 < 0.3 * y1 {
        y0 = 0.0;
    }
    let (pw, ph) = (W - ML - MR, H - MT - MB);
    let sx = |x: f64| ox + ML + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| oy + MT + ph - (y - y0) / (y1 - y0) * ph;
    let _ = writeln!(
        out,
        r##"<rect x="{:.2}" y="{:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="#333"/>"##,
        ox + ML,
        oy + MT
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="14">{}</text>"#,
        ox + ML + pw / 2.0,
        oy + 20.0,
        esc(&panel.title)
    );
    for (v0, v1, vertical) in [(x0, x1, true), (y0, y1, false)] {
        let step = nice_step(v1 - v0);
        let mut v = (v0 / step).ceil() * step;
        while v <= v1 + step * 1e-9 {
            let label = tick_label(v, step);
            if vertical {
                let x = sx(v);
                let _ = writeln!(
                    out,
                    r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#333"/><text x="{x:.2}" y="{:.2}" text-anchor="middle" font-size="11">{label}</text>"##,
                    oy + MT + ph,
                    oy + MT + ph + 5.0,
                    oy + MT + ph + 18.0
                );
            } else {
                let y = sy(v);
                let _ = writeln!(
                    out,
                    r##"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#333"/><text x="{:.2}" y="{:.2}" text-anchor="end" font-size="11">{label}</text>"##,
                    ox + ML - 5.0,
                    ox + ML,
                    ox + ML - 8.0,
                    y + 4.0
                );
            }
            v += step;
        }
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12">{}</text>"#,
        ox + ML + pw / 2.0,
        oy + H - 10.0,
        esc(&panel.xlabel)
    );
    let _ = writeln!(
        out,
        r#"<text transform="translate({:.2},{:.2}) rotate(-90)" text-anchor="middle" font-size="12">{}</text>"#,
        ox + 16.0,
        oy + MT + ph / 2.0,
        esc(&panel.ylabel)
    );
    for (k, s) in panel.series.iter().enumerate() {
        let pts: Vec<(f64, f64)> = s
            .points
            .iter()
            .copied()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .collect();
        match s.style {
            Style::Markers => {
                for (x, y) in &pts {
                    let _ = writeln!(
                        out,
                        r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}"/>"#,
                        sx(*x),
                        sy(*y),
                        s.color
                    );
                }
            }
            Style::Line | Style::Dashed | Style::Steps => {
                let mut d = String::new();
                for (i, (x, y)) in pts.iter().enumerate() {
                    if s.style == Style::Steps && i > 0 {
                        let _ = write!(d, "{:.2},{:.2} ", sx(*x), sy(pts[i - 1].1));
                    }
                    let _ = write!(d, "{:.2},{:.2} ", sx(*x), sy(*y));
                }
                let dash = if s.style == Style::Dashed {
                    r#" stroke-dasharray="6,4""#
                } else {
                    ""
                };
                let _ = writeln!(
                    out,
                    r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"{dash}/>"#,
                    d.trim_end(),
                    s.color
                );
            }
        }
        let ly = oy + MT + 14.0 * k as f64 + 6.0;
        let lx = ox + W - MR + 10.0;
        if s.style == Style::Markers {
            let _ = writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{ly:.2}" r="3" fill="{}"/><text x="{:.2}" y="{:.2}" font-size="11">{}</text>"#,
                lx + 9.0,
                s.color,
                lx + 22.0,
                ly + 4.0,
                esc(&s.label)
            );
            continue;
        }
        let _ = writeln!(
            out,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{}" stroke-width="2"{}/><text x="{:.2}" y="{:.2}" font-size="11">{}</text>"#,
            lx + 18.0,
            s.color,
            if s.style == Style::Dashed {
                r#" stroke-dasharray="4,3""#
            } else {
                ""
            },
            lx + 22.0,
            ly + 4.0,
            esc(&s.label)
        );
    }
}

/// Panels stacked vertically.
pub fn render(panels: &[Panel]) -> String {
    let height = H * panels.len() as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{height}" viewBox="0 0 {W} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (k, p) in panels.iter().enumerate() {
        render_panel(&mut out, p, 0.0, H * k as f64);
    }
    out.push_str("</svg>\n");
    out
}

/// Header-keyed string records.
pub fn read_csv(text: &str) -> CliResult<Vec<BTreeMap<String, String>>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r
        .headers()
        .map_err(|e| CliError::validation(format!("csv: {e}")))?
        .clone();
    r.records()
        .map(|rec| {
            let rec = rec.map_err(|e| CliError::validation(format!("csv: {e}")))?;
            Ok(header
                .iter()
                .zip(rec.iter())
                .map(|(h, v)| (h.to_string(), v.to_string()))
                .collect())
        })
        .collect()
}

fn num(row: &BTreeMap<String, String>, key: &str) -> CliResult<f64> {
    let v = row
        .get(key)
        .ok_or_else(|| CliError::validation(format!("csv: missing column `{key}`")))?;
    if v.is_empty() {
        return Ok(f64::NAN);
    }
    v.parse()
        .map_err(|_| CliError::validation(format!("csv: bad number `{v}` in `{key}`")))
}

/// Haar ratio and `S_q` against `t`, analytic curves and the late-time values dashed.
pub fn render_ipr(csv_text: &str) -> CliResult<String> {
    let rows = read_csv(csv_text)?;
    let mut by_q: BTreeMap<u32, Vec<[f64; 5]>> = BTreeMap::new();
    let rows: Vec<_> = rows
        .into_iter()
        .filter(|r| num(r, "t").is_ok_and(|t| t >= 1.0))
        .collect();
    for r in &rows {
        let q = num(r, "q")? as u32;
        let (i, ratio) = (num(r, "I_q")?, num(r, "haar_ratio")?);
        by_q.entry(q).or_default().push([
            num(r, "t")?,
            ratio,
            num(r, "I_q_analytic")? * ratio / i,
            num(r, "S_q")?,
            num(r, "S_q_analytic")?,
        ]);
    }
    let mut ratio = Panel {
        title: "I_q / I_q^Haar".into(),
        xlabel: "t".into(),
        ylabel: "I_q 2^{L(q-1)} / q!".into(),
        series: Vec::new(),
        log_y: true,
    };
    let mut entropy = Panel {
        title: "participation entropy".into(),
        xlabel: "t".into(),
        ylabel: "S_q".into(),
        series: Vec::new(),
        log_y: false,
    };
    for (k, (q, pts)) in by_q.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let col = |j: usize| pts.iter().map(|p| (p[0], p[j])).collect::<Vec<_>>();
        let t_range = (
            pts.first().map_or(0.0, |p| p[0]),
            pts.last().map_or(1.0, |p| p[0]),
        );
        ratio.series.push(Series {
            label: format!("q={q}"),
            points: col(1),
            style: Style::Markers,
            color,
        });
        ratio.series.push(Series {
            label: format!("q={q} exact"),
            points: col(2),
            style: Style::Line,
            color,
        });
        entropy.series.push(Series {
            label: format!("q={q}"),
            points: col(3),
            style: Style::Markers,
            color,
        });
        entropy.series.push(Series {
            label: format!("q={q} exact"),
            points: col(4),
            style: Style::Line,
            color,
        });
        let last = rows
            .iter()
            .rev()
            .find(|r| num(r, "q").ok() == Some(*q as f64));
        if let Some(r) = last {
            let haar = num(r, "I_q")? / num(r, "haar_ratio")?;
            let s_inf = haar.ln() / (1.0 - *q as f64);
            entropy.series.push(Series {
                label: format!("q={q} ergodic"),
                points: vec![(t_range.0, s_inf), (t_range.1, s_inf)],
                style: Style::Dashed,
                color,
            });
        }
    }
    if let Some(first) = by_q.values().next() {
        let (a, b) = (
            first.first().map_or(0.0, |p| p[0]),
            first.last().map_or(1.0, |p| p[0]),
        );
        ratio.series.push(Series {
            label: "Haar".into(),
            points: vec![(a, 1.0), (b, 1.0)],
            style: Style::Dashed,
            color: "#000",
        });
    }
    Ok(render(&[ratio, entropy]))
}

/// Histogram with the finite-time law and the Porter-Thomas reference.
pub fn render_hist(csv_text: &str, title: &str) -> CliResult<String> {
    let rows = read_csv(csv_text)?;
    let mut emp = Vec::new();
    let mut analytic = Vec::new();
    let mut pt = Vec::new();
    for r in &rows {
        let (lo, hi) = (num(r, "bin_lo")?, num(r, "bin_hi")?);
        let mid = 0.5 * (lo + hi);
        if emp.is_empty() {
            emp.push((lo, 0.0));
        }
        emp.push((lo, num(r, "density")?));
        emp.push((hi, num(r, "density")?));
        analytic.push((mid, num(r, "analytic")?));
        pt.push((mid, num(r, "porter_thomas")?));
    }
    if let Some(&(x, _)) = emp.last() {
        emp.push((x, 0.0));
    }
    let mut series = vec![Series {
        label: "numerics".into(),
        points: emp,
        style: Style::Line,
        color: "#1f77b4",
    }];
    if analytic.iter().any(|p| p.1.is_finite()) {
        series.push(Series {
            label: "finite-time law".into(),
            points: analytic,
            style: Style::Line,
            color: "#d62728",
        });
    }
    series.push(Series {
        label: "Porter-Thomas".into(),
        points: pt,
        style: Style::Dashed,
        color: "#000",
    });
    Ok(render(&[Panel {
        title: title.into(),
        xlabel: "p".into(),
        ylabel: "P(p)".into(),
        series,
        log_y: false,
    }]))
}

/// Averaged `S_2(t)` per model and size with the ergodic values dashed.
pub fn render_compare(csv_text: &str) -> CliResult<String> {
    let rows = read_csv(csv_text)?;
    let mut curves: BTreeMap<(String, u32), Vec<(f64, f64)>> = BTreeMap::new();
    for r in &rows {
        let model = r.get("model").cloned().unwrap_or_default();
        curves
            .entry((model, num(r, "L")? as u32))
            .or_default()
            .push((num(r, "t")?, num(r, "S_2")?));
    }
    let mut models: Vec<&String> = curves.keys().map(|k| &k.0).collect();
    models.dedup();
    let sizes: Vec<u32> = {
        let mut v: Vec<u32> = curves.keys().map(|k| k.1).collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let panels = models
        .iter()
        .map(|m| {
            let mut series = Vec::new();
            for (k, l) in sizes.iter().enumerate() {
                let color = PALETTE[k % PALETTE.len()];
                if let Some(pts) = curves.get(&((*m).clone(), *l)) {
                    let (a, b) = (
                        pts.first().map_or(0.0, |p| p.0),
                        pts.last().map_or(1.0, |p| p.0),
                    );
                    let erg = (*l as f64 - 1.0) * std::f64::consts::LN_2;
                    series.push(Series {
                        label: format!("L={l}"),
                        points: pts.clone(),
                        style: Style::Line,
                        color,
                    });
                    series.push(Series {
                        label: format!("(L-1) ln 2, L={l}"),
                        points: vec![(a, erg), (b, erg)],
                        style: Style::Dashed,
                        color,
                    });
                }
            }
            Panel {
                title: (*m).clone(),
                xlabel: "t".into(),
                ylabel: "S_2".into(),
                series,
                log_y: false,
            }
        })
        .collect::<Vec<_>>();
    Ok(render(&panels))
}

#[cfg(test)]
mod tests {
    use super::*;

    const IPR: &str = "t,q,I_q,S_q,I_q_analytic,S_q_analytic,haar_ratio\n\
        1,2,2.5e-1,1.3862943611198906e0,2.5e-1,1.3862943611198906e0,5e-1\n\
        2,2,2e-1,1.6094379124341003e0,2e-1,1.6094379124341003e0,4e-1\n";

    #[test]
    fn ipr_figure_is_pure() {
        let a = render_ipr(IPR).unwrap();
        assert_eq!(a, render_ipr(IPR).unwrap());
        assert!(a.starts_with("<svg") && a.contains("stroke-dasharray"));
    }

    #[test]
    fn missing_analytic_values_are_skipped() {
        let text = "bin_lo,bin_hi,count,density,analytic,porter_thomas\n0,1,3,3,,1\n1,2,1,1,,0.5\n";
        let svg = render_hist(text, "t = 3").unwrap();
        assert!(!svg.contains("finite-time law"));
    }

    #[test]
    fn reports_bad_columns() {
        assert!(render_ipr("t,q\n1,2\n").is_err());
    }

    #[test]
    fn ticks() {
        assert_eq!(nice_step(10.0), 2.0);
        assert_eq!(tick_label(0.25, 0.05), "0.25");
        assert_eq!(tick_label(3.0, 1.0), "3");
    }
}
