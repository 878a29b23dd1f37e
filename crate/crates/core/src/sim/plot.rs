//! Static SVG rendering of BER-versus-Eb/N0 curves, one curve per
//! iteration count, on a log BER axis.
//!
//! The output is fully deterministic for a given record set. Zero-BER
//! points cannot be placed on a log axis; they are drawn as hollow
//! downward triangles sitting on the plot floor (censored markers) and the
//! connecting line is clipped to the floor.

use crate::error::{Error, Result};
use crate::sim::BerRecord;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 72.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 24.0;
const MARGIN_BOTTOM: f64 = 56.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

/// Renders sweep records as a self-contained SVG string.
pub fn render_svg(records: &[BerRecord], title: &str) -> Result<String> {
    if records.is_empty() {
        return Err(Error::EmptyInput("plot records"));
    }

    let mut iterations: Vec<usize> = records.iter().map(|r| r.iteration).collect();
    iterations.sort_unstable();
    iterations.dedup();

    let x_min = records.iter().map(|r| r.ebn0_db).fold(f64::INFINITY, f64::min);
    let x_max = records
        .iter()
        .map(|r| r.ebn0_db)
        .fold(f64::NEG_INFINITY, f64::max);
    let (x_min, x_max) = if (x_max - x_min).abs() < 1e-9 {
        (x_min - 1.0, x_max + 1.0)
    } else {
        (x_min - 0.25, x_max + 0.25)
    };

    let positive_min = records
        .iter()
        .map(|r| r.ber)
        .filter(|&b| b > 0.0)
        .fold(f64::INFINITY, f64::min);
    let positive_max = records
        .iter()
        .map(|r| r.ber)
        .filter(|&b| b > 0.0)
        .fold(f64::NEG_INFINITY, f64::max);
    let has_zero = records.iter().any(|r| r.ber == 0.0);
    // Decade bounds; an extra decade below when censored points exist.
    let (mut floor_exp, top_exp) = if positive_min.is_finite() {
        (
            positive_min.log10().floor() as i32 - i32::from(has_zero),
            positive_max.log10().ceil() as i32,
        )
    } else {
        (-6, 0)
    };
    if floor_exp >= top_exp {
        floor_exp = top_exp - 1;
    }
    let y_floor = 10f64.powi(floor_exp);
    let y_top = 10f64.powi(top_exp);

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let x_of = |db: f64| MARGIN_LEFT + (db - x_min) / (x_max - x_min) * plot_w;
    let y_of = |ber: f64| {
        let clamped = ber.max(y_floor).min(y_top);
        let frac = (clamped.log10() - floor_exp as f64) / (top_exp - floor_exp) as f64;
        MARGIN_TOP + (1.0 - frac) * plot_h
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"16\" font-family=\"sans-serif\" font-size=\"13\" \
         text-anchor=\"middle\">{}</text>\n",
        MARGIN_LEFT + plot_w / 2.0,
        xml_escape(title)
    ));

    // Decade grid and y labels.
    for exp in floor_exp..=top_exp {
        let y = y_of(10f64.powi(exp));
        svg.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" \
             stroke=\"#dddddd\" stroke-width=\"1\"/>\n",
            MARGIN_LEFT,
            MARGIN_LEFT + plot_w
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" \
             text-anchor=\"end\">1e{exp}</text>\n",
            MARGIN_LEFT - 6.0,
            y + 4.0
        ));
    }

    // X ticks at whole dB.
    let mut db = x_min.ceil();
    while db <= x_max + 1e-9 {
        let x = x_of(db);
        svg.push_str(&format!(
            "<line x1=\"{x:.1}\" y1=\"{:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" \
             stroke=\"#dddddd\" stroke-width=\"1\"/>\n",
            MARGIN_TOP,
            MARGIN_TOP + plot_h
        ));
        svg.push_str(&format!(
            "<text x=\"{x:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" \
             text-anchor=\"middle\">{db:.0}</text>\n",
            MARGIN_TOP + plot_h + 16.0
        ));
        db += 1.0;
    }

    // Axis frame and labels.
    svg.push_str(&format!(
        "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{plot_w:.1}\" height=\"{plot_h:.1}\" \
         fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n",
        MARGIN_LEFT, MARGIN_TOP
    ));
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" \
         text-anchor=\"middle\">Eb/N0 (dB)</text>\n",
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 14.0
    ));
    svg.push_str(&format!(
        "<text x=\"18\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" \
         text-anchor=\"middle\" transform=\"rotate(-90 18 {:.1})\">XOR BER</text>\n",
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    ));

    // Curves, ascending iteration order.
    for (ci, &iteration) in iterations.iter().enumerate() {
        let color = PALETTE[ci % PALETTE.len()];
        let mut points: Vec<&BerRecord> = records
            .iter()
            .filter(|r| r.iteration == iteration)
            .collect();
        points.sort_by(|a, b| a.ebn0_db.partial_cmp(&b.ebn0_db).unwrap());

        let path: Vec<String> = points
            .iter()
            .map(|r| format!("{:.2},{:.2}", x_of(r.ebn0_db), y_of(r.ber)))
            .collect();
        if path.len() > 1 {
            svg.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" \
                 stroke-width=\"1.5\"/>\n",
                path.join(" ")
            ));
        }
        for r in &points {
            let x = x_of(r.ebn0_db);
            let y = y_of(r.ber);
            if r.ber == 0.0 {
                // Censored marker: hollow triangle on the floor.
                svg.push_str(&format!(
                    "<polygon points=\"{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}\" fill=\"white\" \
                     stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
                    x - 4.0,
                    y - 6.0,
                    x + 4.0,
                    y - 6.0,
                    x,
                    y
                ));
            } else {
                svg.push_str(&format!(
                    "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"3\" fill=\"{color}\"/>\n"
                ));
            }
        }
    }

    // Legend, iteration-sorted.
    let legend_x = MARGIN_LEFT + plot_w - 130.0;
    let legend_y = MARGIN_TOP + 10.0;
    for (ci, &iteration) in iterations.iter().enumerate() {
        let color = PALETTE[ci % PALETTE.len()];
        let y = legend_y + 16.0 * ci as f64;
        svg.push_str(&format!(
            "<line x1=\"{legend_x:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" \
             stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            legend_x + 22.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" \
             font-size=\"11\">iteration {iteration}</text>\n",
            legend_x + 28.0,
            y + 4.0
        ));
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Renders and writes the SVG to `path`.
pub fn emit_plot(records: &[BerRecord], title: &str, path: &std::path::Path) -> Result<()> {
    let svg = render_svg(records, title)?;
    std::fs::write(path, svg)?;
    Ok(())
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
