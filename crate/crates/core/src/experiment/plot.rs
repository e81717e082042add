use std::collections::BTreeMap;
use std::path::Path;

use plotters::prelude::*;

use super::RunRow;
use crate::error::{Error, Result};
use crate::routing::Algorithm;

const SIZE: (u32, u32) = (1200, 480);

const COLORS: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(214, 39, 40),
    RGBColor(44, 160, 44),
    RGBColor(148, 103, 189),
    RGBColor(255, 127, 14),
    RGBColor(23, 190, 207),
];

type SeriesKey = (Algorithm, u32, u64);

struct Series {
    label: String,
    /// (lambda, mean delay over seeds that delivered anything, mean throughput)
    points: Vec<(f64, Option<f64>, f64)>,
}

/// Average seeds at each load and group into one series per
/// (algorithm, N, message length).
fn series(rows: &[RunRow]) -> Vec<Series> {
    let mut groups: BTreeMap<SeriesKey, BTreeMap<u64, Vec<&RunRow>>> = BTreeMap::new();
    for r in rows {
        groups
            .entry((r.algorithm, r.n, r.msg_bytes))
            .or_default()
            .entry(r.lambda.to_bits())
            .or_default()
            .push(r);
    }
    groups
        .into_iter()
        .map(|((alg, n, bytes), by_load)| {
            let mut points: Vec<(f64, Option<f64>, f64)> = by_load
                .into_values()
                .map(|runs| {
                    let delays: Vec<f64> = runs.iter().filter_map(|r| r.mean_delay_ns).collect();
                    let delay = (!delays.is_empty())
                        .then(|| delays.iter().sum::<f64>() / delays.len() as f64);
                    let thr = runs.iter().map(|r| r.throughput).sum::<f64>() / runs.len() as f64;
                    (runs[0].lambda, delay, thr)
                })
                .collect();
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            Series {
                label: format!("{} {n}x{n} {bytes}B", alg.name().to_uppercase()),
                points,
            }
        })
        .collect()
}

fn draw_err<E: std::error::Error + Send + Sync>(e: DrawingAreaErrorKind<E>) -> Error {
    Error::Runtime(format!("plot: {e}"))
}

fn padded(lo: f64, hi: f64) -> std::ops::Range<f64> {
    let span = if hi > lo { hi - lo } else { hi.abs().max(1.0) };
    (lo - 0.05 * span).max(0.0)..hi + 0.05 * span
}

/// Two-panel chart (delay vs load, throughput vs load) as SVG text.
pub fn render_plot(rows: &[RunRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::arg("nothing to plot: no result rows"));
    }
    let all = series(rows);
    let (lmin, lmax) = rows.iter().fold((f64::MAX, f64::MIN), |(a, b), r| {
        (a.min(r.lambda), b.max(r.lambda))
    });
    let dmax = all
        .iter()
        .flat_map(|s| s.points.iter().filter_map(|p| p.1))
        .fold(0.0, f64::max);
    let tmax = all
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.2))
        .fold(0.0, f64::max);

    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, SIZE).into_drawing_area();
        root.fill(&WHITE).map_err(draw_err)?;
        let (left, right) = root.split_horizontally(SIZE.0 / 2);

        let panels: [(&DrawingArea<_, _>, &str, &str, f64); 2] = [
            (&left, "End-to-end delay", "mean delay (ns)", dmax),
            (&right, "Throughput", "throughput", tmax),
        ];
        for (panel, (area, title, y_desc, ymax)) in panels.into_iter().enumerate() {
            let mut chart = ChartBuilder::on(area)
                .caption(title, ("sans-serif", 20))
                .margin(12)
                .x_label_area_size(40)
                .y_label_area_size(64)
                .build_cartesian_2d(padded(lmin, lmax), padded(0.0, ymax))
                .map_err(draw_err)?;
            chart
                .configure_mesh()
                .x_desc("offered load")
                .y_desc(y_desc)
                .y_label_formatter(&|v| {
                    if panel == 0 {
                        format!("{v:.0}")
                    } else {
                        format!("{v:.2}")
                    }
                })
                .draw()
                .map_err(draw_err)?;

            for (i, s) in all.iter().enumerate() {
                let color = COLORS[i % COLORS.len()];
                let pts: Vec<(f64, f64)> = s
                    .points
                    .iter()
                    .filter_map(|&(l, d, t)| {
                        if panel == 0 {
                            d.map(|d| (l, d))
                        } else {
                            Some((l, t))
                        }
                    })
                    .collect();
                chart
                    .draw_series(LineSeries::new(pts.clone(), color.stroke_width(2)))
                    .map_err(draw_err)?
                    .label(s.label.as_str())
                    .legend(move |(x, y)| {
                        PathElement::new(vec![(x, y), (x + 18, y)], color.stroke_width(2))
                    });
                chart
                    .draw_series(pts.into_iter().map(|p| Circle::new(p, 3, color.filled())))
                    .map_err(draw_err)?;
            }
            chart
                .configure_series_labels()
                .position(if panel == 0 {
                    SeriesLabelPosition::UpperLeft
                } else {
                    SeriesLabelPosition::LowerRight
                })
                .background_style(WHITE.mix(0.85))
                .border_style(BLACK)
                .draw()
                .map_err(draw_err)?;
        }
        root.present().map_err(draw_err)?;
    }
    Ok(svg)
}

pub fn emit_plot(rows: &[RunRow], path: &Path) -> Result<()> {
    let svg = render_plot(rows)?;
    std::fs::write(path, svg).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(algs: &[Algorithm], sizes: &[u32], bytes: &[u64]) -> Vec<RunRow> {
        let mut out = Vec::new();
        for &algorithm in algs {
            for &n in sizes {
                for &msg_bytes in bytes {
                    for lambda in [0.2, 0.5, 0.8] {
                        for seed in 1..=2 {
                            out.push(RunRow {
                                algorithm,
                                n,
                                msg_bytes,
                                lambda,
                                seed,
                                sent: 100,
                                received: 90 + seed,
                                dropped: 10 - seed,
                                mean_delay_ns: Some(100.0 * lambda + seed as f64),
                                throughput: lambda * (90 + seed) as f64 / 100.0,
                            });
                        }
                    }
                }
            }
        }
        out
    }

    fn legend_entries(svg: &str, label: &str) -> usize {
        svg.lines().filter(|l| l.trim() == label).count()
    }

    #[test]
    fn message_length_figure_has_six_series() {
        let r = rows(&[Algorithm::Dra, Algorithm::Bcra], &[16], &[32, 64, 128]);
        let s = series(&r);
        assert_eq!(s.len(), 6);
        let svg = render_plot(&r).unwrap();
        for x in &s {
            assert_eq!(legend_entries(&svg, &x.label), 2, "{}", x.label);
        }
    }

    #[test]
    fn network_size_figure_has_six_series() {
        let r = rows(&[Algorithm::Dra, Algorithm::Bcra], &[8, 16, 32], &[64]);
        assert_eq!(series(&r).len(), 6);
        let svg = render_plot(&r).unwrap();
        assert_eq!(legend_entries(&svg, "BCRA 32x32 64B"), 2);
    }

    #[test]
    fn seeds_are_averaged() {
        let r = rows(&[Algorithm::Dra], &[16], &[64]);
        let s = series(&r);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].points.len(), 3);
        let (l, d, t) = s[0].points[1];
        assert_eq!(l, 0.5);
        assert!((d.unwrap() - 51.5).abs() < 1e-9);
        assert!((t - 0.5 * 0.915).abs() < 1e-12);
    }

    #[test]
    fn single_series_and_empty_input() {
        let r = rows(&[Algorithm::Dra], &[16], &[64]);
        let svg = render_plot(&r).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(legend_entries(&svg, "DRA 16x16 64B"), 2);
        assert_eq!(render_plot(&r).unwrap(), svg);
        assert!(render_plot(&[]).is_err());
    }
}
