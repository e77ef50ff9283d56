//! SVG figures from trajectory CSVs.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hinge_penalty::solver::{read_trajectory_csv, TrajectoryRecord};
use plotters::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Panel {
    /// Every h_k against epochs.
    Constraints,
    /// Objective (left axis) and max violation (right axis).
    Objective,
}

impl Panel {
    pub fn as_str(self) -> &'static str {
        match self {
            Panel::Constraints => "constraints",
            Panel::Objective => "objective",
        }
    }
}

const SIZE: (u32, u32) = (800, 500);

fn range(values: impl Iterator<Item = f64>) -> Option<std::ops::Range<f64>> {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() || !hi.is_finite() {
        return None;
    }
    let pad = ((hi - lo) * 0.05).max(1e-9 * (1.0 + lo.abs().max(hi.abs())));
    Some(lo - pad..hi + pad)
}

fn epochs(records: &[TrajectoryRecord], epoch: u64) -> Vec<f64> {
    records.iter().map(|r| r.t as f64 / epoch as f64).collect()
}

fn drawing_err<E: std::fmt::Debug>(e: E) -> anyhow::Error {
    anyhow::anyhow!("drawing failed: {e:?}")
}

fn constraints_svg(records: &[TrajectoryRecord], epoch: u64, title: &str) -> Result<String> {
    let m = records[0].constraints.len();
    if m == 0 || records.iter().any(|r| r.constraints.len() != m) {
        bail!("trajectory has no constraint columns");
    }
    let xs = epochs(records, epoch);
    let xr = range(xs.iter().copied()).context("no finite epochs")?;
    let yr = range(records.iter().flat_map(|r| r.constraints.iter().copied()).chain([0.0]))
        .context("no finite constraint values")?;
    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, SIZE).into_drawing_area();
        root.fill(&WHITE).map_err(drawing_err)?;
        let mut chart = ChartBuilder::on(&root)
            .caption(title, ("sans-serif", 18))
            .margin(12)
            .x_label_area_size(40)
            .y_label_area_size(60)
            .build_cartesian_2d(xr.clone(), yr)
            .map_err(drawing_err)?;
        chart
            .configure_mesh()
            .x_desc("epoch")
            .y_desc("h_k(x)")
            .draw()
            .map_err(drawing_err)?;
        chart
            .draw_series(LineSeries::new([(xr.start, 0.0), (xr.end, 0.0)], BLACK.mix(0.4)))
            .map_err(drawing_err)?;
        for k in 0..m {
            let color = Palette99::pick(k).to_rgba();
            chart
                .draw_series(LineSeries::new(
                    xs.iter().zip(records).map(|(&x, r)| (x, r.constraints[k])),
                    color,
                ))
                .map_err(drawing_err)?
                .label(format!("h_{}", k + 1))
                .legend(move |(x, y)| PathElement::new([(x, y), (x + 18, y)], color));
        }
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(drawing_err)?;
        root.present().map_err(drawing_err)?;
    }
    Ok(svg)
}

fn objective_svg(records: &[TrajectoryRecord], epoch: u64, title: &str) -> Result<String> {
    let f: Vec<f64> = records
        .iter()
        .map(|r| r.f_exact)
        .collect::<Option<_>>()
        .context("trajectory has no objective column")?;
    let v: Vec<f64> = records
        .iter()
        .map(|r| r.max_violation)
        .collect::<Option<_>>()
        .context("trajectory has no max_violation column")?;
    let xs = epochs(records, epoch);
    let xr = range(xs.iter().copied()).context("no finite epochs")?;
    let fr = range(f.iter().copied()).context("no finite objective values")?;
    let vr = range(v.iter().copied().chain([0.0])).context("no finite violation values")?;
    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, SIZE).into_drawing_area();
        root.fill(&WHITE).map_err(drawing_err)?;
        let mut chart = ChartBuilder::on(&root)
            .caption(title, ("sans-serif", 18))
            .margin(12)
            .x_label_area_size(40)
            .y_label_area_size(60)
            .right_y_label_area_size(60)
            .build_cartesian_2d(xr.clone(), fr)
            .map_err(drawing_err)?
            .set_secondary_coord(xr, vr);
        chart
            .configure_mesh()
            .x_desc("epoch")
            .y_desc("objective")
            .draw()
            .map_err(drawing_err)?;
        chart
            .configure_secondary_axes()
            .y_desc("max violation")
            .draw()
            .map_err(drawing_err)?;
        chart
            .draw_series(LineSeries::new(xs.iter().copied().zip(f.iter().copied()), BLUE))
            .map_err(drawing_err)?
            .label("objective")
            .legend(|(x, y)| PathElement::new([(x, y), (x + 18, y)], BLUE));
        chart
            .draw_secondary_series(LineSeries::new(xs.iter().copied().zip(v.iter().copied()), RED))
            .map_err(drawing_err)?
            .label("max violation")
            .legend(|(x, y)| PathElement::new([(x, y), (x + 18, y)], RED));
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(drawing_err)?;
        root.present().map_err(drawing_err)?;
    }
    Ok(svg)
}

/// Renders one panel of a trajectory to an SVG string.
pub fn render(records: &[TrajectoryRecord], panel: Panel, epoch: u64, title: &str) -> Result<String> {
    if records.is_empty() {
        bail!("trajectory is empty");
    }
    if epoch == 0 {
        bail!("epoch must be at least 1");
    }
    match panel {
        Panel::Constraints => constraints_svg(records, epoch, title),
        Panel::Objective => objective_svg(records, epoch, title),
    }
}

/// Output stem: the file stem, prefixed by the parent directory name so
/// that `a/trajectory.csv` and `b/trajectory.csv` do not collide.
fn stem(path: &Path) -> String {
    let file = path.file_stem().and_then(|s| s.to_str()).unwrap_or("plot");
    match path.parent().and_then(|p| p.file_name()).and_then(|s| s.to_str()) {
        Some(parent) => format!("{parent}_{file}"),
        None => file.to_string(),
    }
}

/// Writes `<stem>_<panel>.svg` into `out_dir` for every CSV and panel.
/// Nothing is written for a CSV that fails to render.
pub fn cmd_plot(csvs: &[PathBuf], out_dir: &Path, panels: &[Panel], epoch: u64) -> Result<Vec<PathBuf>> {
    if csvs.is_empty() {
        bail!("no input CSVs");
    }
    let mut rendered = Vec::new();
    for path in csvs {
        let file = fs::File::open(path).with_context(|| format!("reading {}", path.display()))?;
        let records = read_trajectory_csv(file).with_context(|| format!("trajectory {}", path.display()))?;
        let s = stem(path);
        for &panel in panels {
            let svg = render(&records, panel, epoch, &s).with_context(|| format!("plotting {}", path.display()))?;
            rendered.push((out_dir.join(format!("{s}_{}.svg", panel.as_str())), svg));
        }
    }
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for (path, svg) in rendered {
        fs::write(&path, svg).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
    }
    Ok(written)
}
