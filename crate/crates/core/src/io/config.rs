//! Flat `key = value` pipeline configuration.
//!
//! One key per line, `#` starts a comment, unknown keys are rejected. Keys
//! that are absent keep their defaults. The three RANSAC stages share
//! iteration count, confidence and minimum inlier count; each has its own
//! threshold.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model_selection::ModelSpec;
use crate::pipeline::{PipelineConfig, ScaleMethod};

pub const KEYS: [&str; 21] = [
    "n_total",
    "grid_rows",
    "grid_cols",
    "delta_fc",
    "min_valid_matches",
    "min_valid_regions",
    "ransac_max_iterations",
    "ransac_confidence",
    "ransac_min_inliers",
    "e_inlier_threshold",
    "h_inlier_threshold",
    "pnp_inlier_threshold",
    "gric_sigma",
    "gric_model",
    "cheirality_min_ratio",
    "scale_method",
    "delta_rigid",
    "scale_max_iterations",
    "scale_rel_tol",
    "flow_gate",
    "seed",
];

fn value<T: FromStr>(raw: &str, line: usize, key: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    raw.parse::<T>().map_err(|e| Error::Parse {
        line,
        message: format!("{key}: '{raw}': {e}"),
    })
}

fn apply(cfg: &mut PipelineConfig, key: &str, raw: &str, line: usize) -> Result<()> {
    let sel = &mut cfg.selection;
    let tr = &mut cfg.tracker;
    match key {
        "n_total" => sel.n_total = value(raw, line, key)?,
        "grid_rows" => sel.grid_rows = value(raw, line, key)?,
        "grid_cols" => sel.grid_cols = value(raw, line, key)?,
        "delta_fc" => sel.delta_fc = value(raw, line, key)?,
        "min_valid_matches" => sel.min_valid_matches = value(raw, line, key)?,
        "min_valid_regions" => sel.min_valid_regions = value(raw, line, key)?,
        "ransac_max_iterations" => {
            let v = value(raw, line, key)?;
            tr.essential_ransac.max_iterations = v;
            tr.homography_ransac.max_iterations = v;
            cfg.pnp_ransac.max_iterations = v;
        }
        "ransac_confidence" => {
            let v = value(raw, line, key)?;
            tr.essential_ransac.confidence = v;
            tr.homography_ransac.confidence = v;
            cfg.pnp_ransac.confidence = v;
        }
        "ransac_min_inliers" => {
            let v = value(raw, line, key)?;
            tr.essential_ransac.min_inliers = v;
            tr.homography_ransac.min_inliers = v;
            cfg.pnp_ransac.min_inliers = v;
        }
        "e_inlier_threshold" => tr.essential_ransac.inlier_threshold = value(raw, line, key)?,
        "h_inlier_threshold" => tr.homography_ransac.inlier_threshold = value(raw, line, key)?,
        "pnp_inlier_threshold" => cfg.pnp_ransac.inlier_threshold = value(raw, line, key)?,
        "gric_sigma" => tr.gric.sigma = value(raw, line, key)?,
        "gric_model" => {
            tr.epipolar_spec = match raw {
                "essential" => ModelSpec::ESSENTIAL,
                "fundamental" => ModelSpec::FUNDAMENTAL,
                _ => {
                    return Err(Error::Parse {
                        line,
                        message: format!("gric_model: expected essential or fundamental, got '{raw}'"),
                    })
                }
            }
        }
        "cheirality_min_ratio" => tr.cheirality_min_ratio = value(raw, line, key)?,
        "scale_method" => {
            cfg.scale_method = match raw {
                "iterative" => ScaleMethod::Iterative,
                "simple" => ScaleMethod::Simple,
                _ => {
                    return Err(Error::Parse {
                        line,
                        message: format!("scale_method: expected iterative or simple, got '{raw}'"),
                    })
                }
            }
        }
        "delta_rigid" => cfg.scale.delta_rigid = value(raw, line, key)?,
        "scale_max_iterations" => cfg.scale.max_iterations = value(raw, line, key)?,
        "scale_rel_tol" => cfg.scale.rel_tol = value(raw, line, key)?,
        "flow_gate" => {
            cfg.flow_gate = match raw {
                "off" | "none" => None,
                _ => Some(value(raw, line, key)?),
            }
        }
        "seed" => cfg.seed = value(raw, line, key)?,
        _ => {
            return Err(Error::Parse {
                line,
                message: format!("unknown key '{key}'"),
            })
        }
    }
    Ok(())
}

/// Parses a configuration over the defaults and validates the result.
pub fn parse_config(text: &str) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::default();
    for (i, raw_line) in text.lines().enumerate() {
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, raw) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: i + 1,
            message: format!("expected key = value, got '{line}'"),
        })?;
        apply(&mut cfg, key.trim(), raw.trim(), i + 1)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn read_config(path: impl AsRef<Path>) -> Result<PipelineConfig> {
    parse_config(&fs::read_to_string(path)?)
}

/// Serializes every key. Shared RANSAC settings are taken from the essential
/// stage.
pub fn format_config(cfg: &PipelineConfig) -> String {
    let sel = &cfg.selection;
    let tr = &cfg.tracker;
    let e = &tr.essential_ransac;
    let gric_model = if tr.epipolar_spec == ModelSpec::FUNDAMENTAL {
        "fundamental"
    } else {
        "essential"
    };
    let scale_method = match cfg.scale_method {
        ScaleMethod::Iterative => "iterative",
        ScaleMethod::Simple => "simple",
    };
    let flow_gate = cfg.flow_gate.map_or("off".to_string(), |g| g.to_string());
    let values = [
        sel.n_total.to_string(),
        sel.grid_rows.to_string(),
        sel.grid_cols.to_string(),
        sel.delta_fc.to_string(),
        sel.min_valid_matches.to_string(),
        sel.min_valid_regions.to_string(),
        e.max_iterations.to_string(),
        e.confidence.to_string(),
        e.min_inliers.to_string(),
        e.inlier_threshold.to_string(),
        tr.homography_ransac.inlier_threshold.to_string(),
        cfg.pnp_ransac.inlier_threshold.to_string(),
        tr.gric.sigma.to_string(),
        gric_model.to_string(),
        tr.cheirality_min_ratio.to_string(),
        scale_method.to_string(),
        cfg.scale.delta_rigid.to_string(),
        cfg.scale.max_iterations.to_string(),
        cfg.scale.rel_tol.to_string(),
        flow_gate,
        cfg.seed.to_string(),
    ];
    let mut out = String::new();
    for (k, v) in KEYS.iter().zip(values) {
        let _ = writeln!(out, "{k} = {v}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = PipelineConfig::default();
        assert_eq!(parse_config(&format_config(&cfg)).unwrap(), cfg);
    }

    #[test]
    fn overrides_and_comments() {
        let cfg = parse_config("# tuned\nn_total = 500 # fewer\nscale_method=simple\nflow_gate = 2.5\n").unwrap();
        assert_eq!(cfg.selection.n_total, 500);
        assert_eq!(cfg.scale_method, ScaleMethod::Simple);
        assert_eq!(cfg.flow_gate, Some(2.5));
    }

    #[test]
    fn unknown_key_names_the_line() {
        assert!(matches!(
            parse_config("seed = 1\nbogus = 2\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
