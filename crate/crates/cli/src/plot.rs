use crate::error::CliError;
use plotters::prelude::*;
use seesaw_core::pipeline::{LedgerRow, Phase, RunLedger};
use std::path::{Path, PathBuf};

type Series = (String, Vec<(f64, f64)>);

fn plot_error<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Runtime(format!("plot: {e}"))
}

fn stage_rows(ledger: &RunLedger, stage: u8) -> Vec<&LedgerRow> {
    let rows: Vec<&LedgerRow> = ledger.rows().iter().filter(|r| r.stage == stage).collect();
    let main = if stage == 1 { Phase::Neat } else { Phase::Tune };
    let primary: Vec<&LedgerRow> = rows.iter().copied().filter(|r| r.phase == main).collect();
    if primary.is_empty() {
        rows
    } else {
        primary
    }
}

/// Best and mean fitness per generation, one chart per stage present:
/// the NEAT population for stage 1 and the weight search for stage 2.
pub fn stage_charts(ledger: &RunLedger, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut written = Vec::new();
    for (stage, title) in [(1u8, "Stage 1: NEAT population"), (2, "Stage 2: weight tuning")] {
        let rows = stage_rows(ledger, stage);
        if rows.is_empty() {
            continue;
        }
        let best = rows.iter().map(|r| (r.generation as f64, r.best)).collect();
        let mean = rows.iter().map(|r| (r.generation as f64, r.mean)).collect();
        let path = dir.join(format!("fitness-stage{stage}.svg"));
        line_chart(&path, title, &[("best".into(), best), ("mean".into(), mean)])?;
        written.push(path);
    }
    Ok(written)
}

/// Stage-1 best fitness of several runs on shared axes.
pub fn comparison_chart(ledgers: &[RunLedger], labels: &[String], path: &Path) -> Result<PathBuf, CliError> {
    let series: Vec<Series> = ledgers
        .iter()
        .zip(labels)
        .map(|(l, label)| (label.clone(), stage_rows(l, 1).iter().map(|r| (r.generation as f64, r.best)).collect()))
        .collect();
    line_chart(path, "Best fitness per generation", &series)?;
    Ok(path.to_path_buf())
}

/// Legend label for a ledger: its directory name, or its file stem.
pub fn label_for(path: &Path) -> String {
    path.parent()
        .and_then(|p| p.file_name())
        .or_else(|| path.file_stem())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn bounds(series: &[Series]) -> (f64, f64, f64, f64) {
    let pts = series.iter().flat_map(|(_, p)| p.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    let pad = if y1 > y0 { 0.05 * (y1 - y0) } else { 0.5 };
    (x0, x1, y0 - pad, y1 + pad)
}

fn line_chart(path: &Path, title: &str, series: &[Series]) -> Result<(), CliError> {
    let (x0, x1, y0, y1) = bounds(series);
    let root = SVGBackend::new(path, (800, 480)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_error)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 22))
        .margin(16)
        .x_label_area_size(44)
        .y_label_area_size(64)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(plot_error)?;
    chart
        .configure_mesh()
        .x_desc("generation")
        .y_desc("fitness")
        .draw()
        .map_err(plot_error)?;
    for (i, (label, points)) in series.iter().enumerate() {
        let color = Palette99::pick(i).to_rgba();
        chart
            .draw_series(LineSeries::new(points.iter().copied(), color.stroke_width(2)))
            .map_err(plot_error)?
            .label(label.as_str())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.85))
        .border_style(BLACK)
        .position(SeriesLabelPosition::LowerRight)
        .draw()
        .map_err(plot_error)?;
    root.present().map_err(plot_error)?;
    Ok(())
}
