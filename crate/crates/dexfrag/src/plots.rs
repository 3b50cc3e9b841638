//! Minimal SVG line plots of the emitted CSV files, one per result figure.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::csvio::{open_reader, parse_f64};
use crate::pipeline::Manifest;
use crate::CliError;

const WIDTH: f64 = 840.0;
const HEIGHT: f64 = 520.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 170.0;
const MARGIN_T: f64 = 50.0;
const MARGIN_B: f64 = 60.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if a >= 1000.0 {
        format!("{v:.0}")
    } else if a >= 1.0 {
        format!("{v:.2}")
    } else {
        format!("{v:.4}")
    }
}

/// Renders series as polylines on linear axes with ticks and a legend.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let points = series.iter().flat_map(|s| s.points.iter());
    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in points {
        x_min = x_min.min(x);
        x_max = x_max.max(x);
        y_min = y_min.min(y);
        y_max = y_max.max(y);
    }
    if !x_min.is_finite() {
        x_min = 0.0;
        x_max = 1.0;
    }
    if !y_min.is_finite() {
        y_min = 0.0;
        y_max = 1.0;
    }
    if x_max == x_min {
        x_max = x_min + 1.0;
    }
    if y_max == y_min {
        y_max = y_min + 1.0;
    }
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let sx = |x: f64| MARGIN_L + (x - x_min) / (x_max - x_min) * plot_w;
    let sy = |y: f64| MARGIN_T + plot_h - (y - y_min) / (y_max - y_min) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"13\">"
    );
    let _ = writeln!(
        svg,
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
    );
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{}</text>",
        MARGIN_L + plot_w / 2.0,
        title
    );

    // axes with 5 ticks each
    for i in 0..=5 {
        let f = i as f64 / 5.0;
        let x = x_min + f * (x_max - x_min);
        let y = y_min + f * (y_max - y_min);
        let px = sx(x);
        let py = sy(y);
        let _ = writeln!(
            svg,
            "<line x1=\"{px}\" y1=\"{}\" x2=\"{px}\" y2=\"{}\" stroke=\"#ddd\"/>",
            MARGIN_T,
            MARGIN_T + plot_h
        );
        let _ = writeln!(
            svg,
            "<line x1=\"{}\" y1=\"{py}\" x2=\"{}\" y2=\"{py}\" stroke=\"#ddd\"/>",
            MARGIN_L,
            MARGIN_L + plot_w
        );
        let _ = writeln!(
            svg,
            "<text x=\"{px}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            MARGIN_T + plot_h + 20.0,
            tick_label(x)
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>",
            MARGIN_L - 8.0,
            py + 4.0,
            tick_label(y)
        );
    }
    let _ = writeln!(
        svg,
        "<rect x=\"{MARGIN_L}\" y=\"{MARGIN_T}\" width=\"{plot_w}\" height=\"{plot_h}\" \
         fill=\"none\" stroke=\"#333\"/>"
    );
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 14.0,
        x_label
    );
    let _ = writeln!(
        svg,
        "<text x=\"18\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">{}</text>",
        MARGIN_T + plot_h / 2.0,
        MARGIN_T + plot_h / 2.0,
        y_label
    );

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut path = String::new();
        for &(x, y) in &s.points {
            let _ = write!(path, "{:.1},{:.1} ", sx(x), sy(y));
        }
        let _ = writeln!(
            svg,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"/>",
            path.trim_end()
        );
        let ly = MARGIN_T + 14.0 + i as f64 * 18.0;
        let lx = MARGIN_L + plot_w + 12.0;
        let _ = writeln!(
            svg,
            "<line x1=\"{lx}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/>",
            lx + 18.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\">{}</text>",
            lx + 24.0,
            ly + 4.0,
            s.label
        );
    }
    svg.push_str("</svg>\n");
    svg
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn load(path: &Path) -> Result<Self, CliError> {
        let mut reader = open_reader(path)?;
        let header = reader
            .headers()?
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>();
        let mut rows = Vec::new();
        for record in reader.records() {
            rows.push(record?.iter().map(|s| s.to_string()).collect());
        }
        Ok(Table { header, rows })
    }

    fn col(&self, name: &str) -> Result<usize, CliError> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Runtime(format!("column {name} missing")))
    }

    fn f64s(&self, name: &str, filter: &dyn Fn(&[String]) -> bool) -> Result<Vec<f64>, CliError> {
        let idx = self.col(name)?;
        self.rows
            .iter()
            .filter(|r| filter(r))
            .map(|r| parse_f64(&r[idx], name))
            .collect()
    }

    fn distinct(&self, name: &str) -> Result<Vec<String>, CliError> {
        let idx = self.col(name)?;
        let set: BTreeSet<String> = self.rows.iter().map(|r| r[idx].clone()).collect();
        // numeric columns sort by value, not lexicographically
        let mut values: Vec<String> = set.into_iter().collect();
        if values.iter().all(|v| v.parse::<f64>().is_ok()) {
            values.sort_by(|a, b| {
                a.parse::<f64>()
                    .unwrap()
                    .partial_cmp(&b.parse::<f64>().unwrap())
                    .expect("finite column values")
            });
        }
        Ok(values)
    }
}

fn require(manifest: &Manifest, out_dir: &Path, name: &str) -> Result<PathBuf, CliError> {
    let path = out_dir.join(name);
    let listed = manifest
        .files
        .iter()
        .any(|f| f.file_name().map(|n| n == name).unwrap_or(false));
    if !listed || !path.is_file() {
        return Err(CliError::Io(format!(
            "plot input {name} is missing from the manifest or disk"
        )));
    }
    Ok(path)
}

fn save(out_dir: &Path, name: &str, svg: String) -> Result<PathBuf, CliError> {
    let path = out_dir.join(name);
    std::fs::write(&path, svg)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

fn xy(xs: Vec<f64>, ys: Vec<f64>) -> Vec<(f64, f64)> {
    xs.into_iter().zip(ys).collect()
}

/// Renders one SVG per result-figure analogue from the manifest's CSVs.
pub fn emit_plots(manifest: &Manifest, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut written = Vec::new();

    // miner profits against the speed ratio
    let econ = Table::load(&require(manifest, out_dir, "econ.csv")?)?;
    let all = |_: &[String]| true;
    let pi = econ.f64s("pi", &all)?;
    let mut series = Vec::new();
    for (col, label) in [
        ("profit_A_single", "A, single ledger"),
        ("profit_B_single", "B, single ledger"),
        ("profit_A_frag", "A, fragmented"),
        ("profit_B_frag", "B, fragmented"),
    ] {
        series.push(Series {
            label: label.into(),
            points: xy(pi.clone(), econ.f64s(col, &all)?),
        });
    }
    written.push(save(
        out_dir,
        "econ.svg",
        line_plot(
            "Expected miner profit by ledger arrangement",
            "speed ratio pi",
            "expected profit",
            &series,
        ),
    )?);

    // bootstrapped mean delay by cluster structure, one line per slow mean
    let boot = Table::load(&require(manifest, out_dir, "bootstrap.csv")?)?;
    let slow_col = boot.col("slow_mean_ms")?;
    let mut series = Vec::new();
    for slow in boot.distinct("slow_mean_ms")? {
        let slow_owned = slow.clone();
        let filter = move |r: &[String]| r[slow_col] == slow_owned;
        let eta_a = boot.f64s("eta_a", &filter)?;
        let means = boot.f64s("grand_mean_ms", &filter)?;
        series.push(Series {
            label: format!("slow {} ms", parse_f64(&slow, "slow_mean_ms")?),
            points: xy(eta_a, means),
        });
    }
    written.push(save(
        out_dir,
        "bootstrap.svg",
        line_plot(
            "Network-wide mean delay across cluster splits",
            "nodes in cluster A (of total)",
            "bootstrapped mean delay (ms)",
            &series,
        ),
    )?);

    // full-network densities and CDFs at the extreme slow means
    let density = Table::load(&require(manifest, out_dir, "density.csv")?)?;
    let cdf = Table::load(&require(manifest, out_dir, "cdf.csv")?)?;
    let slow_values = density.distinct("slow_mean_ms")?;
    let extremes: Vec<String> = match (slow_values.first(), slow_values.last()) {
        (Some(a), Some(b)) if a != b => vec![a.clone(), b.clone()],
        (Some(a), _) => vec![a.clone()],
        _ => Vec::new(),
    };
    for slow in &extremes {
        for (table, x_col, y_col, stem, title) in [
            (&density, "bin_center_ms", "density", "density_full", "Message delay density"),
            (&cdf, "x_ms", "cdf", "cdf_full", "Message delay distribution"),
        ] {
            let scope_col = table.col("scope")?;
            let slow_col = table.col("slow_mean_ms")?;
            let eta_a_col = table.col("eta_a")?;
            let mut series = Vec::new();
            for eta_a in table.distinct("eta_a")? {
                let slow = slow.clone();
                let eta = eta_a.clone();
                let filter = move |r: &[String]| {
                    r[scope_col] == "full" && r[slow_col] == slow && r[eta_a_col] == eta
                };
                series.push(Series {
                    label: format!("({eta_a},{})", 10 - eta_a.parse::<usize>().unwrap_or(0)),
                    points: xy(table.f64s(x_col, &filter)?, table.f64s(y_col, &filter)?),
                });
            }
            let label = parse_f64(slow, "slow_mean_ms")?;
            written.push(save(
                out_dir,
                &format!("{stem}_{label:.0}.svg"),
                line_plot(
                    &format!("{title} (slow links {label:.0} ms)"),
                    "delay (ms)",
                    y_col,
                    &series,
                ),
            )?);
        }
    }

    // per-cluster densities at the largest slow mean
    if let Some(slow) = slow_values.last() {
        let scope_col = density.col("scope")?;
        let slow_col = density.col("slow_mean_ms")?;
        let eta_a_col = density.col("eta_a")?;
        for eta_a in density.distinct("eta_a")? {
            let mut series = Vec::new();
            for scope in ["A", "B"] {
                let slow = slow.clone();
                let eta = eta_a.clone();
                let filter = move |r: &[String]| {
                    r[scope_col] == scope && r[slow_col] == slow && r[eta_a_col] == eta
                };
                series.push(Series {
                    label: format!("source in {scope}"),
                    points: xy(
                        density.f64s("bin_center_ms", &filter)?,
                        density.f64s("density", &filter)?,
                    ),
                });
            }
            written.push(save(
                out_dir,
                &format!("cluster_density_{eta_a}.svg"),
                line_plot(
                    &format!("Per-cluster delay density, eta_a = {eta_a}"),
                    "delay (ms)",
                    "density",
                    &series,
                ),
            )?);
        }
    }

    // winning probabilities and the advantage ratio
    let winprob = Table::load(&require(manifest, out_dir, "winprob.csv")?)?;
    let slow_col = winprob.col("slow_mean_ms")?;
    for (col, stem, title) in [
        ("p_cluster_a", "winprob_cluster", "Probability of smallest delay (cluster A)"),
        ("p_node_a", "winprob_node_a", "Probability of smallest delay (node in A)"),
        ("p_node_b", "winprob_node_b", "Probability of smallest delay (node in B)"),
        ("ratio_a_over_b", "ratio", "Winning likelihood ratio (A over B)"),
    ] {
        let mut series = Vec::new();
        for slow in winprob.distinct("slow_mean_ms")? {
            let slow_owned = slow.clone();
            let filter = move |r: &[String]| r[slow_col] == slow_owned;
            series.push(Series {
                label: format!("slow {} ms", parse_f64(&slow, "slow_mean_ms")?),
                points: xy(winprob.f64s("eta_a", &filter)?, winprob.f64s(col, &filter)?),
            });
        }
        written.push(save(
            out_dir,
            &format!("{stem}.svg"),
            line_plot(title, "nodes in cluster A (of total)", col, &series),
        )?);
    }

    Ok(written)
}
