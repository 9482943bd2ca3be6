//! TOML run configuration.
//!
//! ```toml
//! seed = 7
//!
//! [interactions]
//! preset = "nn"            # "nn", "nn_diag" or explicit lists below
//! dim = 2
//! alpha = ["1", "1"]
//! beta = ["3", "3"]
//! # directions = [[1, 0], [0, 1]]
//!
//! [field]
//! generator = "random"     # "alpha", "beta", "laminate", "random"
//! period = 4
//! fractions = [0.5, 0.25]
//! # file = "field.txt"     # or "bundled:<name>"
//!
//! [schedule]
//! directions = 64
//! radii = [16.0, 32.0, 64.0, 128.0]
//! order = 1
//! ```
//!
//! Each subcommand reads its own section (`check`, `bounds`, `design`,
//! `localize`, `verify`, `sweep`); see the README for the keys.

use std::path::{Path, PathBuf};

use bondmix::io::parse_rational;
use bondmix::lattice::{ivec, make_field, BondField, FieldKind, InteractionSet, Strength};
use num_rational::Ratio;
use serde::Deserialize;

use crate::bundled;
use crate::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub interactions: Option<Interactions>,
    pub field: Option<FieldSpec>,
    pub schedule: Option<ScheduleSpec>,
    pub check: Option<CheckSpec>,
    pub bounds: Option<BoundsSpec>,
    pub design: Option<DesignSpec>,
    pub localize: Option<LocalizeSpec>,
    pub verify: Option<VerifySpec>,
    pub sweep: Option<SweepSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Interactions {
    pub preset: Option<String>,
    pub dim: Option<usize>,
    pub directions: Option<Vec<Vec<i64>>>,
    pub alpha: Option<Vec<String>>,
    pub beta: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub file: Option<String>,
    pub generator: Option<String>,
    pub period: Option<usize>,
    pub fractions: Option<Vec<f64>>,
    pub axis: Option<usize>,
    pub beta_width: Option<Vec<usize>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    pub directions: Option<usize>,
    pub radii: Option<Vec<f64>>,
    pub order: Option<u8>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    /// "alpha", "beta" or "bounds".
    pub reference: String,
    pub tolerance: Option<f64>,
    pub c_slack: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSpec {
    pub theta: f64,
    pub samples: Option<usize>,
    pub phi: PhiSpec,
    /// Number of normals for an additional crystalline approximation.
    pub approx: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiSpec {
    /// "crystalline", "euclidean", "alpha", "beta", "averaging".
    pub kind: String,
    pub scale: Option<f64>,
    pub terms: Option<Vec<Term>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub c: f64,
    pub nu: Vec<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSpec {
    pub uniform: Option<String>,
    pub t: Option<Vec<String>>,
    pub theta: Option<Vec<String>>,
    pub t_max: Option<usize>,
    pub radii: Option<Vec<f64>>,
    pub tolerance: Option<f64>,
    pub polygon_directions: Option<usize>,
    pub polygon_radius: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalizeSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub level: Option<u32>,
    pub theta: Vec<f64>,
    pub sites_per_cell: Option<usize>,
    pub delta: Option<f64>,
    pub rho_sites: Option<f64>,
    pub directions: Option<usize>,
    pub c_slack: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    /// "bundled" or "random".
    pub suite: Option<String>,
    pub fields: Option<usize>,
    pub window: Option<Vec<i64>>,
    pub windows_per_field: Option<usize>,
    pub max_period: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub thetas: Option<Vec<String>>,
    pub directions: Option<usize>,
    pub radius: Option<f64>,
    pub t_max: Option<usize>,
}

pub fn cfg(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

pub fn load(path: &Path) -> Result<(RunConfig, Vec<u8>), CliError> {
    let bytes = std::fs::read(path).map_err(|e| cfg(format!("cannot read {}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes).map_err(|_| cfg("config is not UTF-8"))?;
    let config: RunConfig = toml::from_str(text).map_err(|e| cfg(e.message().to_string()))?;
    Ok((config, bytes))
}

pub fn rational(text: &str) -> Result<Strength, CliError> {
    parse_rational(text).map_err(|e| cfg(format!("bad rational {text:?}: {e}")))
}

pub fn ratios(list: &[String]) -> Result<Vec<Ratio<i64>>, CliError> {
    list.iter().map(|s| rational(s)).collect()
}

impl RunConfig {
    pub fn interaction_set(&self) -> Result<InteractionSet, CliError> {
        let Some(spec) = &self.interactions else {
            return Err(cfg("missing [interactions]"));
        };
        let one = |list: &Option<Vec<String>>, default: i64| -> Result<Vec<Strength>, CliError> {
            match list {
                Some(v) => v.iter().map(|s| rational(s)).collect(),
                None => Ok(vec![Strength::from_integer(default)]),
            }
        };
        let alpha = one(&spec.alpha, 1)?;
        let beta = one(&spec.beta, 3)?;
        let uniform = |v: &[Strength], name: &str| -> Result<Strength, CliError> {
            if v.iter().all(|x| *x == v[0]) {
                Ok(v[0])
            } else {
                Err(cfg(format!("preset sets take a single {name} strength")))
            }
        };
        let built = match spec.preset.as_deref() {
            Some("nn") => {
                let dim = spec.dim.unwrap_or(2);
                InteractionSet::nearest_neighbor(dim, uniform(&alpha, "alpha")?, uniform(&beta, "beta")?)
            }
            Some("nn_diag") => InteractionSet::nn_diagonal(uniform(&alpha, "alpha")?, uniform(&beta, "beta")?),
            Some(other) => return Err(cfg(format!("unknown preset {other:?}"))),
            None => {
                let dim = spec.dim.ok_or_else(|| cfg("interactions.dim is required without a preset"))?;
                let dirs = spec.directions.as_ref().ok_or_else(|| cfg("interactions.directions is required"))?;
                let dirs: Vec<_> = dirs.iter().map(|v| ivec(v)).collect();
                let n = dirs.len();
                let expand = |v: Vec<Strength>| if v.len() == 1 { vec![v[0]; n] } else { v };
                InteractionSet::new(dim, dirs, expand(alpha), expand(beta))
            }
        };
        built.map_err(|e| cfg(e.to_string()))
    }

    /// The field named by `[field]`; files are resolved against `base`.
    pub fn field(&self, base: &Path) -> Result<BondField, CliError> {
        let Some(spec) = &self.field else {
            return Err(cfg("missing [field]"));
        };
        if let Some(file) = &spec.file {
            if spec.generator.is_some() {
                return Err(cfg("field.file and field.generator are exclusive"));
            }
            let text = match file.strip_prefix("bundled:") {
                Some(name) => bundled::field_text(name).ok_or_else(|| cfg(format!("no bundled field {name:?}")))?.to_string(),
                None => {
                    let path = resolve(base, file);
                    std::fs::read_to_string(&path).map_err(|e| cfg(format!("cannot read {}: {e}", path.display())))?
                }
            };
            return bondmix::io::read_field(&text).map_err(|e| cfg(format!("{file}: {e}")));
        }
        let set = self.interaction_set()?;
        let period = spec.period.unwrap_or(1);
        let kind = match spec.generator.as_deref() {
            Some("alpha") => FieldKind::HomogeneousAlpha,
            Some("beta") => FieldKind::HomogeneousBeta,
            Some("laminate") => FieldKind::Laminate {
                axis: spec.axis.unwrap_or(0),
                beta_width: spec.beta_width.clone().ok_or_else(|| cfg("laminate needs field.beta_width"))?,
            },
            Some("random") => FieldKind::Random {
                fractions: spec.fractions.clone().ok_or_else(|| cfg("random needs field.fractions"))?,
                seed: self.seed.ok_or_else(|| cfg("seed is required for the random generator"))?,
            },
            Some(other) => return Err(cfg(format!("unknown generator {other:?}"))),
            None => return Err(cfg("field needs file or generator")),
        };
        make_field(kind, &set, period).map_err(|e| cfg(e.to_string()))
    }

    pub fn schedule(&self) -> &ScheduleSpec {
        static EMPTY: ScheduleSpec = ScheduleSpec { directions: None, radii: None, order: None };
        self.schedule.as_ref().unwrap_or(&EMPTY)
    }
}

pub fn resolve(base: &Path, file: &str) -> PathBuf {
    let p = Path::new(file);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> RunConfig {
        toml::from_str(text).unwrap()
    }

    #[test]
    fn explicit_set_expands_single_strengths() {
        let c = parse("[interactions]\ndim = 2\ndirections = [[1, 0], [0, 1], [1, 1]]\nalpha = [\"1/2\"]\nbeta = [\"2\"]\n");
        let set = c.interaction_set().unwrap();
        assert_eq!(set.len(), 3);
        assert_eq!(set.alpha(2), Ratio::new(1, 2));
        assert_eq!(set.beta(0), Ratio::from_integer(2));
    }

    #[test]
    fn presets_reject_direction_dependent_strengths() {
        let c = parse("[interactions]\npreset = \"nn\"\nalpha = [\"1\", \"2\"]\n");
        assert!(matches!(c.interaction_set(), Err(CliError::Config(_))));
    }

    #[test]
    fn file_and_generator_are_exclusive() {
        let c = parse("[field]\nfile = \"bundled:checker_nn\"\ngenerator = \"alpha\"\n");
        assert!(c.field(Path::new(".")).is_err());
    }

    #[test]
    fn bundled_fields_parse() {
        for name in ["all_alpha_nn", "checker_nn", "laminate_diag"] {
            let c = parse(&format!("[field]\nfile = \"bundled:{name}\"\n"));
            c.field(Path::new(".")).unwrap();
        }
    }

    #[test]
    fn relative_paths_resolve_against_the_config_directory() {
        assert_eq!(resolve(Path::new("/runs"), "f.txt"), PathBuf::from("/runs/f.txt"));
        assert_eq!(resolve(Path::new("/runs"), "/abs/f.txt"), PathBuf::from("/abs/f.txt"));
    }
}
