//! Plot artifacts for variable-based calibration curves: an SVG rendering
//! with shaded 95% bands, or a delimited-text grid dump. Output is a
//! deterministic function of the input curves.

use crate::error::{Error, Result};
use crate::loess::CurveEstimate;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotFormat {
    Svg,
    Table,
}

impl std::str::FromStr for PlotFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "svg" => Ok(PlotFormat::Svg),
            "table" => Ok(PlotFormat::Table),
            other => Err(Error::Parameter(format!("unknown plot format `{other}`"))),
        }
    }
}

/// Renders the error curve and predicted-error curve as one artifact.
pub fn emit_plot(
    error_curve: &CurveEstimate,
    predicted_error_curve: &CurveEstimate,
    format: PlotFormat,
) -> Result<String> {
    if error_curve.grid != predicted_error_curve.grid {
        return Err(Error::Contract("curve grids differ".into()));
    }
    match format {
        PlotFormat::Table => Ok(table_dump(error_curve, predicted_error_curve)),
        PlotFormat::Svg => Ok(svg_plot(error_curve, predicted_error_curve)),
    }
}

fn table_dump(err: &CurveEstimate, pred: &CurveEstimate) -> String {
    let mut out = String::from("grid,err_mean,err_lo,err_hi,pred_mean,pred_lo,pred_hi\n");
    for i in 0..err.grid.len() {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            err.grid[i],
            err.mean[i],
            err.ci_low[i],
            err.ci_high[i],
            pred.mean[i],
            pred.ci_low[i],
            pred.ci_high[i]
        ));
    }
    out
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 60.0;

struct Scale {
    x_lo: f64,
    x_hi: f64,
    y_lo: f64,
    y_hi: f64,
}

impl Scale {
    fn px(&self, x: f64) -> f64 {
        MARGIN_LEFT + (x - self.x_lo) / (self.x_hi - self.x_lo) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }
    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN_BOTTOM
            - (y - self.y_lo) / (self.y_hi - self.y_lo) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

// display values clipped to [0, 1] (error as a probability), rendered in %
fn clip01(y: f64) -> f64 {
    y.clamp(0.0, 1.0)
}

fn polyline(points: &[(f64, f64)], scale: &Scale, color: &str) -> String {
    let pts: Vec<String> = points
        .iter()
        .map(|&(x, y)| format!("{:.2},{:.2}", scale.px(x), scale.py(y)))
        .collect();
    format!(
        "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"{}\"/>\n",
        color,
        pts.join(" ")
    )
}

fn band(curve: &CurveEstimate, scale: &Scale, color: &str) -> String {
    let mut pts = Vec::with_capacity(curve.grid.len() * 2);
    for i in 0..curve.grid.len() {
        pts.push((curve.grid[i], clip01(curve.ci_high[i])));
    }
    for i in (0..curve.grid.len()).rev() {
        pts.push((curve.grid[i], clip01(curve.ci_low[i])));
    }
    let path: Vec<String> = pts
        .iter()
        .map(|&(x, y)| format!("{:.2},{:.2}", scale.px(x), scale.py(y)))
        .collect();
    format!(
        "<polygon fill=\"{}\" fill-opacity=\"0.2\" stroke=\"none\" points=\"{}\"/>\n",
        color,
        path.join(" ")
    )
}

fn svg_plot(err: &CurveEstimate, pred: &CurveEstimate) -> String {
    let x_lo = err.grid[0];
    let x_hi = *err.grid.last().unwrap();
    let mut y_hi: f64 = 0.0;
    for c in [err, pred] {
        for v in &c.ci_high {
            y_hi = y_hi.max(clip01(*v));
        }
    }
    let scale = Scale {
        x_lo,
        x_hi,
        y_lo: 0.0,
        y_hi: (y_hi * 1.1).clamp(0.05, 1.0),
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    // axes
    svg.push_str(&format!(
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
        MARGIN_LEFT,
        HEIGHT - MARGIN_BOTTOM,
        WIDTH - MARGIN_RIGHT,
        HEIGHT - MARGIN_BOTTOM
    ));
    svg.push_str(&format!(
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
        MARGIN_LEFT,
        MARGIN_TOP,
        MARGIN_LEFT,
        HEIGHT - MARGIN_BOTTOM
    ));

    // axis ticks and labels
    for i in 0..=5 {
        let fx = x_lo + (x_hi - x_lo) * i as f64 / 5.0;
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\">{:.3}</text>\n",
            scale.px(fx),
            HEIGHT - MARGIN_BOTTOM + 20.0,
            fx
        ));
        let fy = scale.y_hi * i as f64 / 5.0;
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"end\">{:.1}</text>\n",
            MARGIN_LEFT - 8.0,
            scale.py(fy) + 4.0,
            fy * 100.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"14\" text-anchor=\"middle\">variable value</text>\n",
        (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
        HEIGHT - 15.0
    ));
    svg.push_str(&format!(
        "<text x=\"20\" y=\"{:.2}\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 20 {:.2})\">error (%)</text>\n",
        HEIGHT / 2.0,
        HEIGHT / 2.0
    ));

    svg.push_str(&band(err, &scale, "#d62728"));
    svg.push_str(&band(pred, &scale, "#1f77b4"));
    let err_pts: Vec<(f64, f64)> = err
        .grid
        .iter()
        .zip(&err.mean)
        .map(|(&g, &m)| (g, clip01(m)))
        .collect();
    let pred_pts: Vec<(f64, f64)> = pred
        .grid
        .iter()
        .zip(&pred.mean)
        .map(|(&g, &m)| (g, clip01(m)))
        .collect();
    svg.push_str(&polyline(&err_pts, &scale, "#d62728"));
    svg.push_str(&polyline(&pred_pts, &scale, "#1f77b4"));

    // legend
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"13\" fill=\"#d62728\">error rate</text>\n",
        WIDTH - 180.0,
        MARGIN_TOP + 10.0
    ));
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"13\" fill=\"#1f77b4\">predicted error</text>\n",
        WIDTH - 180.0,
        MARGIN_TOP + 28.0
    ));
    svg.push_str("</svg>\n");
    svg
}
