use crate::error::{Error, Result};
use crate::geometry::Pixel;
use crate::raster::FlowField;

use super::{ConsistencyMap, Match, MatchSet};

/// Correspondence-selection settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionConfig {
    /// Target number of matches `N`.
    pub n_total: usize,
    pub grid_rows: usize,
    pub grid_cols: usize,
    /// Inconsistency threshold in pixels; flows above it are discarded.
    pub delta_fc: f64,
    pub min_valid_matches: usize,
    pub min_valid_regions: usize,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            n_total: 2000,
            grid_rows: 10,
            grid_cols: 10,
            delta_fc: 1.0,
            min_valid_matches: 50,
            min_valid_regions: 10,
        }
    }
}

impl SelectionConfig {
    pub fn regions(&self) -> usize {
        self.grid_rows * self.grid_cols
    }

    /// Per-region quota `N / M`.
    pub fn per_region(&self) -> usize {
        self.n_total / self.regions()
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_rows == 0 || self.grid_cols == 0 {
            return Err(Error::InvalidParameter("selection grid must be nonempty".into()));
        }
        if self.n_total < self.regions() {
            return Err(Error::InvalidParameter(format!(
                "n_total {} is below the region count {}",
                self.n_total,
                self.regions()
            )));
        }
        if !(self.delta_fc > 0.0) {
            return Err(Error::InvalidParameter("delta_fc must be positive".into()));
        }
        Ok(())
    }
}

/// Best-N selection output; `short` is set when fewer than `n` pixels were valid.
#[derive(Debug, Clone, PartialEq)]
pub struct BestN {
    pub matches: MatchSet,
    pub short: bool,
}

/// Totals reported by local best-K selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ValidityReport {
    pub valid_matches: usize,
    pub valid_regions: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateOutcome {
    Accepted,
    UseConstantMotion,
}

fn make_match(fwd: &FlowField, width: usize, index: usize, inconsistency: f64) -> Match {
    let (x, y) = (index % width, index / width);
    let source = Pixel::new(x as f64, y as f64);
    Match {
        source,
        target: source + fwd.get(x, y),
        inconsistency,
    }
}

fn by_value_then_index(a: &(f64, usize), b: &(f64, usize)) -> std::cmp::Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// The `n` valid pixels of least inconsistency, ties broken in row-major order.
pub fn select_best_n(consistency: &ConsistencyMap, fwd: &FlowField, n: usize) -> Result<BestN> {
    if n == 0 {
        return Err(Error::InvalidParameter("best-N needs n ≥ 1".into()));
    }
    check_shape(consistency, fwd)?;
    let mut ranked: Vec<(f64, usize)> = consistency
        .values
        .iter()
        .zip(&consistency.valid)
        .enumerate()
        .filter_map(|(i, (v, ok))| ok.then_some((*v, i)))
        .collect();
    let short = ranked.len() < n;
    if !short {
        ranked.select_nth_unstable_by(n - 1, by_value_then_index);
        ranked.truncate(n);
    }
    ranked.sort_by(by_value_then_index);
    Ok(BestN {
        matches: ranked
            .into_iter()
            .map(|(v, i)| make_match(fwd, consistency.width, i, v))
            .collect(),
        short,
    })
}

/// Thresholds at `delta_fc`, then keeps the `min(N/M, Q_j)` least-inconsistent
/// survivors of every region `j` on a `grid_rows × grid_cols` grid.
pub fn select_local_best_k(
    consistency: &ConsistencyMap,
    fwd: &FlowField,
    cfg: &SelectionConfig,
) -> Result<(MatchSet, ValidityReport)> {
    cfg.validate()?;
    check_shape(consistency, fwd)?;
    let (w, h) = (consistency.width, consistency.height);
    if w < cfg.grid_cols || h < cfg.grid_rows {
        return Err(Error::InvalidParameter(format!(
            "{w}x{h} image is smaller than the {}x{} selection grid",
            cfg.grid_cols, cfg.grid_rows
        )));
    }
    let mut regions: Vec<Vec<(f64, usize)>> = vec![Vec::new(); cfg.regions()];
    for y in 0..h {
        let ry = y * cfg.grid_rows / h;
        for x in 0..w {
            let i = y * w + x;
            let v = consistency.values[i];
            if consistency.valid[i] && v <= cfg.delta_fc {
                regions[ry * cfg.grid_cols + x * cfg.grid_cols / w].push((v, i));
            }
        }
    }
    let quota = cfg.per_region();
    let mut matches = Vec::with_capacity(cfg.n_total);
    let mut report = ValidityReport::default();
    for mut survivors in regions {
        if survivors.is_empty() {
            continue;
        }
        report.valid_regions += 1;
        let k = quota.min(survivors.len());
        if k < survivors.len() {
            survivors.select_nth_unstable_by(k - 1, by_value_then_index);
            survivors.truncate(k);
        }
        survivors.sort_by(by_value_then_index);
        matches.extend(survivors.into_iter().map(|(v, i)| make_match(fwd, w, i, v)));
    }
    report.valid_matches = matches.len();
    Ok((MatchSet::new(matches), report))
}

/// Falls back to the constant-motion model when too few matches or regions survive.
/// Both thresholds are inclusive.
pub fn sufficiency_gate(report: &ValidityReport, cfg: &SelectionConfig) -> GateOutcome {
    if report.valid_matches < cfg.min_valid_matches || report.valid_regions < cfg.min_valid_regions {
        GateOutcome::UseConstantMotion
    } else {
        GateOutcome::Accepted
    }
}

fn check_shape(consistency: &ConsistencyMap, fwd: &FlowField) -> Result<()> {
    if consistency.width != fwd.width() || consistency.height != fwd.height() {
        return Err(Error::Shape("consistency map and flow differ in size".into()));
    }
    Ok(())
}
