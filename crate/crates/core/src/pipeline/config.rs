//! Flat `key = value` configuration with `[input]` and `[view NAME]` sections.
//!
//! ```text
//! seed = 7
//! lambda = 10
//! k_range = 2, 8
//!
//! [input]
//! n = 600
//!
//! [view shape]
//! kind = gaussian_blobs
//! centers = 0,0; 6,0; 0,6; 6,6
//! scales = 0.8
//! ```
//!
//! Top-level keys set [`PipelineConfig`] fields. `[input]` either names a CSV (`path`,
//! `orientation`) or, together with `[view …]` sections, describes a generated multi-view dataset.

use std::path::PathBuf;
use std::str::FromStr;

use super::PipelineConfig;
use crate::data::{compose_multiview, generate, load_csv, DataMatrix, GeneratorKind, GeneratorSpec, Orientation};
use crate::error::{MiscError, Result};
use crate::factorization::{HUpdateRule, KernelKind, KernelWidth};
use crate::model_selection::KCriterion;

/// Where the data for a run comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum InputSource {
    Csv { path: PathBuf, orientation: Orientation },
    /// Independently generated parts stacked as separate feature blocks.
    Generated { n: usize, seed: u64, parts: Vec<(String, GeneratorKind)> },
}

impl InputSource {
    /// Loads the data and, for generated input, the ground-truth view labels.
    pub fn load(&self) -> Result<(DataMatrix, Vec<(String, Vec<usize>)>)> {
        match self {
            InputSource::Csv { path, orientation } => Ok((load_csv(path, *orientation)?, Vec::new())),
            InputSource::Generated { n, seed, parts } => {
                let datasets = parts
                    .iter()
                    .enumerate()
                    .map(|(i, (_, kind))| generate(&GeneratorSpec::new(kind.clone(), *n, seed.wrapping_add(i as u64))))
                    .collect::<Result<Vec<_>>>()?;
                let composed = compose_multiview(&datasets, *seed)?;
                let views = parts
                    .iter()
                    .zip(composed.views)
                    .map(|((name, _), (_, labels))| (name.clone(), labels))
                    .collect();
                Ok((composed.data, views))
            }
        }
    }
}

/// A parsed configuration file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunSettings {
    pub pipeline: PipelineConfig,
    pub input: Option<InputSource>,
}

fn err(line: usize, message: impl Into<String>) -> MiscError {
    MiscError::Config {
        line,
        message: message.into(),
    }
}

fn parse_value<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| err(line, format!("invalid value `{value}` for `{key}`")))
}

fn parse_list<T: FromStr>(line: usize, key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(|v| parse_value(line, key, v.trim()))
        .collect()
}

fn parse_bool(line: usize, key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(err(line, format!("invalid boolean `{value}` for `{key}`"))),
    }
}

fn parse_enum<T: serde::de::DeserializeOwned>(line: usize, key: &str, value: &str) -> Result<T> {
    serde_json::from_value(serde_json::Value::String(value.to_string()))
        .map_err(|_| err(line, format!("invalid value `{value}` for `{key}`")))
}

/// Sets one top-level key. Shared with command-line overrides.
pub(crate) fn apply_key(cfg: &mut PipelineConfig, line: usize, key: &str, value: &str) -> Result<()> {
    match key {
        "seed" => cfg.seed = parse_value(line, key, value)?,
        "lambda" => cfg.lambda = parse_value(line, key, value)?,
        "eps_neighbors" => cfg.eps_neighbors = parse_value(line, key, value)?,
        "kernel" => cfg.kernel.kind = parse_enum::<KernelKind>(line, key, value)?,
        "kernel_width" => {
            cfg.kernel.width = if value.eq_ignore_ascii_case("auto") {
                KernelWidth::Auto
            } else {
                let w: f64 = parse_value(line, key, value)?;
                if !(w > 0.0) {
                    return Err(err(line, "kernel_width must be positive or `auto`"));
                }
                KernelWidth::Fixed(w)
            }
        }
        "k_range" => match parse_list::<usize>(line, key, value)?.as_slice() {
            &[lo, hi] => cfg.k_range = Some((lo, hi)),
            _ => return Err(err(line, "k_range needs two values: min, max")),
        },
        "k_override" => cfg.k_override = Some(parse_list(line, key, value)?),
        "v_override" => cfg.v_override = Some(parse_value(line, key, value)?),
        "k_criterion" => cfg.k_criterion = parse_enum::<KCriterion>(line, key, value)?,
        "h_rule" => cfg.h_rule = parse_enum::<HUpdateRule>(line, key, value)?,
        "max_iter" => cfg.max_iter = parse_value(line, key, value)?,
        "rel_tol" => cfg.rel_tol = parse_value(line, key, value)?,
        "ica_max_iter" => cfg.ica_max_iter = parse_value(line, key, value)?,
        "ica_tol" => cfg.ica_tol = parse_value(line, key, value)?,
        "kmeans_restarts" => cfg.kmeans_restarts = parse_value(line, key, value)?,
        "parallel" => cfg.parallel = parse_bool(line, key, value)?,
        "output_dir" => cfg.output_dir = Some(PathBuf::from(value)),
        _ => return Err(err(line, format!("unknown key `{key}`"))),
    }
    Ok(())
}

fn parse_point(line: usize, key: &str, value: &str) -> Result<Vec<f64>> {
    parse_list(line, key, value)
}

#[derive(Default)]
struct ViewDraft {
    name: String,
    line: usize,
    kind: Option<String>,
    params: Vec<(usize, String, String)>,
}

impl ViewDraft {
    fn build(self) -> Result<(String, GeneratorKind)> {
        let kind_name = self.kind.ok_or_else(|| err(self.line, format!("view `{}` needs a `kind`", self.name)))?;
        let mut kind = match kind_name.as_str() {
            "gaussian_blobs" => GeneratorKind::GaussianBlobs {
                centers: Vec::new(),
                scales: Vec::new(),
            },
            "atom" => GeneratorKind::atom(),
            "lsun" => GeneratorKind::lsun(),
            "rings" => GeneratorKind::rings(),
            other => return Err(err(self.line, format!("unknown generator kind `{other}`"))),
        };
        let mut blob_scales: Option<Vec<f64>> = None;
        for (line, key, value) in &self.params {
            let (line, key, value) = (*line, key.as_str(), value.as_str());
            match (&mut kind, key) {
                (GeneratorKind::GaussianBlobs { centers, .. }, "centers") => {
                    *centers = value
                        .split(';')
                        .map(|c| parse_point(line, key, c.trim()))
                        .collect::<Result<_>>()?;
                }
                (GeneratorKind::GaussianBlobs { .. }, "scales" | "scale") => {
                    blob_scales = Some(parse_list(line, key, value)?)
                }
                (GeneratorKind::Atom { core_radius, .. }, "core_radius") => *core_radius = parse_value(line, key, value)?,
                (GeneratorKind::Atom { shell_inner, .. }, "shell_inner") => *shell_inner = parse_value(line, key, value)?,
                (GeneratorKind::Atom { shell_outer, .. }, "shell_outer") => *shell_outer = parse_value(line, key, value)?,
                (GeneratorKind::Lsun { bar_length, .. }, "bar_length") => *bar_length = parse_value(line, key, value)?,
                (GeneratorKind::Lsun { bar_width, .. }, "bar_width") => *bar_width = parse_value(line, key, value)?,
                (GeneratorKind::Lsun { gap, .. }, "gap") => *gap = parse_value(line, key, value)?,
                (GeneratorKind::Lsun { ball_radius, .. }, "ball_radius") => *ball_radius = parse_value(line, key, value)?,
                (GeneratorKind::Lsun { ball_center, .. }, "ball_center") => match parse_point(line, key, value)?.as_slice() {
                    &[x, y] => *ball_center = [x, y],
                    _ => return Err(err(line, "ball_center needs two coordinates")),
                },
                (GeneratorKind::Rings { inner_radius, .. }, "inner_radius") => *inner_radius = parse_value(line, key, value)?,
                (GeneratorKind::Rings { outer_radius, .. }, "outer_radius") => *outer_radius = parse_value(line, key, value)?,
                (GeneratorKind::Rings { noise, .. }, "noise") => *noise = parse_value(line, key, value)?,
                _ => return Err(err(line, format!("unknown key `{key}` for generator `{kind_name}`"))),
            }
        }
        if let GeneratorKind::GaussianBlobs { centers, scales } = &mut kind {
            if centers.is_empty() {
                return Err(err(self.line, format!("view `{}` needs `centers`", self.name)));
            }
            let given = blob_scales.unwrap_or_else(|| vec![1.0]);
            *scales = match given.len() {
                1 => vec![given[0]; centers.len()],
                l if l == centers.len() => given,
                _ => return Err(err(self.line, "give one scale, or one per center")),
            };
        }
        Ok((self.name, kind))
    }
}

enum Section {
    Top,
    Input,
    View,
}

/// Parses a configuration file. `#` starts a comment anywhere; `;` only at the start of a line,
/// since it also separates blob centers.
pub fn parse_config(text: &str) -> Result<RunSettings> {
    parse_config_with_defaults(text, PipelineConfig::default())
}

/// As [`parse_config`], starting from `defaults` instead of [`PipelineConfig::default`].
pub fn parse_config_with_defaults(text: &str, defaults: PipelineConfig) -> Result<RunSettings> {
    let mut pipeline = defaults;
    let mut section = Section::Top;
    let mut input_path: Option<PathBuf> = None;
    let mut orientation = Orientation::SamplesAsRows;
    let mut gen_n: Option<usize> = None;
    let mut gen_seed: Option<u64> = None;
    let mut views: Vec<ViewDraft> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim_start().starts_with(';') {
            continue;
        }
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(header) = content.strip_prefix('[') {
            let header = header
                .strip_suffix(']')
                .ok_or_else(|| err(line, "unterminated section header"))?
                .trim();
            let mut words = header.split_whitespace();
            match (words.next(), words.next(), words.next()) {
                (Some("input"), None, None) => section = Section::Input,
                (Some("view"), Some(name), None) => {
                    if views.iter().any(|v| v.name == name) {
                        return Err(err(line, format!("duplicate view `{name}`")));
                    }
                    views.push(ViewDraft {
                        name: name.to_string(),
                        line,
                        ..ViewDraft::default()
                    });
                    section = Section::View;
                }
                _ => return Err(err(line, format!("unknown section `[{header}]`"))),
            }
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| err(line, "expected `key = value`"))?;
        if value.is_empty() {
            return Err(err(line, format!("missing value for `{key}`")));
        }
        match section {
            Section::Top => apply_key(&mut pipeline, line, key, value)?,
            Section::Input => match key {
                "path" => input_path = Some(PathBuf::from(value)),
                "orientation" => orientation = parse_value(line, key, value)?,
                "n" => gen_n = Some(parse_value(line, key, value)?),
                "seed" => gen_seed = Some(parse_value(line, key, value)?),
                _ => return Err(err(line, format!("unknown input key `{key}`"))),
            },
            Section::View => {
                let view = views.last_mut().expect("inside a view section");
                if key == "kind" {
                    view.kind = Some(value.to_string());
                } else {
                    view.params.push((line, key.to_string(), value.to_string()));
                }
            }
        }
    }

    let input = match (input_path, views.is_empty()) {
        (Some(_), false) => return Err(MiscError::invalid("give either an input path or generated views, not both")),
        (Some(path), true) => Some(InputSource::Csv { path, orientation }),
        (None, false) => {
            let parts = views.into_iter().map(ViewDraft::build).collect::<Result<Vec<_>>>()?;
            let n = gen_n.ok_or_else(|| MiscError::invalid("generated input needs `n` in [input]"))?;
            Some(InputSource::Generated {
                n,
                seed: gen_seed.unwrap_or(pipeline.seed),
                parts,
            })
        }
        (None, true) => None,
    };
    pipeline.validate()?;
    Ok(RunSettings { pipeline, input })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_when_empty() {
        let s = parse_config("# nothing\n\n").unwrap();
        assert_eq!(s.pipeline, PipelineConfig::default());
        assert!(s.input.is_none());
    }

    #[test]
    fn top_level_keys() {
        let s = parse_config(
            "seed = 7\nlambda = 2.5 # inline\nkernel = linear\nkernel_width = 1.5\nk_range = 2, 6\nk_override = 3\nv_override = 2\nparallel = yes\nk_criterion = spherical_bic\n",
        )
        .unwrap();
        let p = s.pipeline;
        assert_eq!(p.seed, 7);
        assert_eq!(p.lambda, 2.5);
        assert_eq!(p.kernel.kind, KernelKind::Linear);
        assert_eq!(p.kernel.width, KernelWidth::Fixed(1.5));
        assert_eq!(p.k_range, Some((2, 6)));
        assert_eq!(p.k_override, Some(vec![3]));
        assert_eq!(p.v_override, Some(2));
        assert!(p.parallel);
        assert_eq!(p.k_criterion, KCriterion::SphericalBic);
    }

    #[test]
    fn csv_input() {
        let s = parse_config("[input]\npath = data.csv\norientation = features_as_rows\n").unwrap();
        assert_eq!(
            s.input,
            Some(InputSource::Csv {
                path: "data.csv".into(),
                orientation: Orientation::FeaturesAsRows
            })
        );
    }

    #[test]
    fn generated_views() {
        let text = "seed = 3\n[input]\nn = 40\n[view shape]\nkind = gaussian_blobs\ncenters = 0,0; 5,5\nscales = 0.5\n[view ring]\nkind = atom\nshell_inner = 4\nshell_outer = 5\n";
        let s = parse_config(text).unwrap();
        let Some(InputSource::Generated { n, seed, parts }) = &s.input else {
            panic!("expected generated input");
        };
        assert_eq!((*n, *seed, parts.len()), (40, 3, 2));
        assert_eq!(
            parts[0].1,
            GeneratorKind::GaussianBlobs {
                centers: vec![vec![0.0, 0.0], vec![5.0, 5.0]],
                scales: vec![0.5, 0.5]
            }
        );
        let (data, views) = s.input.unwrap().load().unwrap();
        assert_eq!((data.dim(), data.n_samples()), (5, 40));
        assert_eq!(views[0].0, "shape");
        assert_eq!(views[1].0, "ring");
    }

    #[test]
    fn errors_carry_line_numbers() {
        for (text, expected_line) in [
            ("seed = 1\nbogus = 2\n", 2),
            ("lambda = abc\n", 1),
            ("\n\n[weird]\n", 3),
            ("seed\n", 1),
            ("[view a]\nkind = atom\ncenters = 1,2\n", 3),
        ] {
            match parse_config(text) {
                Err(MiscError::Config { line, .. }) => assert_eq!(line, expected_line, "{text}"),
                other => panic!("expected config error for {text:?}, got {other:?}"),
            }
        }
    }
}
