use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use arcfem::{arc_by_name, GridSpec, Method, QuadratureOrders};
use serde::{Deserialize, Serialize};

pub const DEFAULT_LEVELS: [usize; 6] = [32, 64, 128, 256, 512, 1024];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodChoice {
    Standard,
    Enriched,
    Both,
}

impl MethodChoice {
    pub fn methods(self) -> Vec<Method> {
        match self {
            MethodChoice::Standard => vec![Method::Standard],
            MethodChoice::Enriched => vec![Method::Enriched],
            MethodChoice::Both => vec![Method::Standard, Method::Enriched],
        }
    }
}

impl std::str::FromStr for MethodChoice {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Self::Standard),
            "enriched" => Ok(Self::Enriched),
            "both" => Ok(Self::Both),
            other => bail!("unknown method `{other}` (expected standard, enriched or both)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureOverrides {
    pub gauss: Option<usize>,
    pub log: Option<usize>,
    pub transition_split: Option<usize>,
}

impl QuadratureOverrides {
    pub fn apply(&self) -> QuadratureOrders {
        let base = QuadratureOrders::default();
        QuadratureOrders {
            gauss: self.gauss.unwrap_or(base.gauss),
            log: self.log.unwrap_or(base.log),
            transition_split: self.transition_split.unwrap_or(base.transition_split),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
    #[serde(default)]
    pub exclusion: Option<f64>,
}

impl FieldConfig {
    pub fn square(half_width: f64, n: usize) -> Self {
        Self {
            x_min: -half_width,
            x_max: half_width,
            y_min: -half_width,
            y_max: half_width,
            nx: n,
            ny: n,
            exclusion: None,
        }
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec {
            x_min: self.x_min,
            x_max: self.x_max,
            y_min: self.y_min,
            y_max: self.y_max,
            nx: self.nx,
            ny: self.ny,
            exclusion: self.exclusion,
        }
    }
}

/// Everything a run needs. Loaded from JSON, then overridden by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub example: String,
    /// Optional arc name; must be the arc the example is posed on.
    pub arc: Option<String>,
    pub method: MethodChoice,
    #[serde(rename = "N")]
    pub levels: Vec<usize>,
    pub out: PathBuf,
    pub quadrature: QuadratureOverrides,
    pub field: Option<FieldConfig>,
    /// Keep the hat functions of the two end nodes in the density space.
    pub psi_endpoint_hats: bool,
    pub dump_matrices: bool,
    /// Reserved; every computation is deterministic.
    pub seed: Option<u64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            example: "ex1".into(),
            arc: None,
            method: MethodChoice::Both,
            levels: DEFAULT_LEVELS.to_vec(),
            out: PathBuf::from("out"),
            quadrature: QuadratureOverrides::default(),
            field: None,
            psi_endpoint_hats: false,
            dump_matrices: false,
            seed: None,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        let expected_arc = match self.example.as_str() {
            "ex1" => "segment",
            "ex2" => "semicircle",
            "custom" => bail!(
                "custom problems need a right-hand side and an arc; build them with the library API"
            ),
            other => bail!("unknown example `{other}` (expected ex1 or ex2)"),
        };
        if let Some(arc) = &self.arc {
            arc_by_name(arc)?;
            if arc != expected_arc {
                bail!(
                    "{} is posed on the {expected_arc}, not the {arc}",
                    self.example
                );
            }
        }
        if self.levels.is_empty() {
            bail!("the N list is empty");
        }
        for pair in self.levels.windows(2) {
            if pair[1] != 2 * pair[0] {
                bail!(
                    "the N list must double from one level to the next, found {} after {}",
                    pair[1],
                    pair[0]
                );
            }
        }
        if let Some(field) = &self.field {
            if field.nx == 0
                || field.ny == 0
                || field.x_max < field.x_min
                || field.y_max < field.y_min
            {
                bail!("invalid field grid {field:?}");
            }
        }
        Ok(())
    }

    pub fn orders(&self) -> QuadratureOrders {
        self.quadrature.apply()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_mirror_the_reference_experiments() {
        let c = ExperimentConfig::default();
        assert_eq!(c.levels, DEFAULT_LEVELS);
        assert_eq!(c.method, MethodChoice::Both);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn levels_must_double() {
        let mut c = ExperimentConfig::default();
        c.levels = vec![32, 64, 96];
        assert!(c.validate().is_err());
        c.levels = vec![64, 32];
        assert!(c.validate().is_err());
        c.levels = vec![16];
        assert!(c.validate().is_ok());
    }

    #[test]
    fn json_with_partial_fields() {
        let c: ExperimentConfig = serde_json::from_str(
            r#"{"example": "ex2", "method": "enriched", "N": [16, 32], "quadrature": {"gauss": 20}}"#,
        )
        .unwrap();
        assert_eq!(c.example, "ex2");
        assert_eq!(c.method, MethodChoice::Enriched);
        assert_eq!(c.orders().gauss, 20);
        assert_eq!(c.orders().log, QuadratureOrders::default().log);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"exmaple": "ex1"}"#).is_err());
    }

    #[test]
    fn arc_names_must_match_the_example() {
        let mut c: ExperimentConfig =
            serde_json::from_str(r#"{"example": "ex2", "arc": "semicircle"}"#).unwrap();
        assert!(c.validate().is_ok());
        c.arc = Some("segment".into());
        assert!(c.validate().is_err());
        c.arc = Some("ellipse".into());
        assert!(c.validate().is_err());
    }

    #[test]
    fn unknown_examples_rejected() {
        let c = ExperimentConfig {
            example: "ex3".into(),
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }
}
