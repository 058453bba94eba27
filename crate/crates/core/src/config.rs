//! Run configuration: a case id with every parameter as a named key, read
//! from JSON and patched by dotted `key=value` overrides.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::cases::euler::{Blast, Diffraction, ShockTube};
use crate::cases::ode::{LINEAR_A, LINEAR_C0, NONLINEAR_A, NONLINEAR_C0};
use crate::integrators::IntegratorKind;
use crate::{Error, Result};

/// `{1/20, 1/40, …, 1/320}`.
pub fn halving_ladder() -> Vec<f64> {
    [20.0, 40.0, 80.0, 160.0, 320.0].iter().map(|n| 1.0 / n).collect()
}

fn table_schemes() -> Vec<IntegratorKind> {
    vec![IntegratorKind::Mpms2 { s: 0.0 }, IntegratorKind::Mpms3 { s: 2.75 }]
}

fn sweep_values() -> Vec<f64> {
    (-1..=5).map(f64::from).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearOde {
    pub c0: [f64; 2],
    pub a: f64,
    pub t_final: f64,
    /// Scheme of a single `run`.
    pub integrator: IntegratorKind,
    pub dt: f64,
    /// Schemes compared by a study and swept over `s`.
    pub schemes: Vec<IntegratorKind>,
    pub ladder: Vec<f64>,
    pub sweep_s: Vec<f64>,
}

impl Default for LinearOde {
    fn default() -> Self {
        LinearOde {
            c0: LINEAR_C0,
            a: LINEAR_A,
            t_final: 1.0,
            integrator: IntegratorKind::Mpms2 { s: 0.0 },
            dt: 1.0 / 160.0,
            schemes: table_schemes(),
            ladder: halving_ladder(),
            sweep_s: sweep_values(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NonlinearOde {
    pub c0: [f64; 3],
    pub a: f64,
    pub t_final: f64,
    /// Couple the explicit convection terms.
    pub convection: bool,
    pub integrator: IntegratorKind,
    pub dt: f64,
    pub schemes: Vec<IntegratorKind>,
    pub ladder: Vec<f64>,
    pub sweep_s: Vec<f64>,
    /// Reference step is the finest ladder step divided by this.
    pub reference_refinement: f64,
}

impl Default for NonlinearOde {
    fn default() -> Self {
        NonlinearOde {
            c0: NONLINEAR_C0,
            a: NONLINEAR_A,
            t_final: 1.0,
            convection: true,
            integrator: IntegratorKind::Mpms2 { s: 0.0 },
            dt: 1.0 / 160.0,
            schemes: table_schemes(),
            ladder: halving_ladder(),
            sweep_s: sweep_values(),
            reference_refinement: 100.0,
        }
    }
}

/// One runnable case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case")]
pub enum CaseConfig {
    #[serde(rename = "ode-linear")]
    OdeLinear(LinearOde),
    #[serde(rename = "ode-nonlinear")]
    OdeNonlinear(NonlinearOde),
    #[serde(rename = "euler1d-3species")]
    ShockTube(ShockTube),
    #[serde(rename = "euler2d-convergence")]
    Blast(Blast),
    #[serde(rename = "euler2d-diffraction")]
    Diffraction(Diffraction),
}

pub const CASE_IDS: [&str; 5] = ["ode-linear", "ode-nonlinear", "euler1d-3species", "euler2d-convergence", "euler2d-diffraction"];

impl CaseConfig {
    /// Default parameters of `id`.
    pub fn defaults(id: &str) -> Result<Self> {
        Ok(match id {
            "ode-linear" => CaseConfig::OdeLinear(LinearOde::default()),
            "ode-nonlinear" => CaseConfig::OdeNonlinear(NonlinearOde::default()),
            "euler1d-3species" => CaseConfig::ShockTube(ShockTube::default()),
            "euler2d-convergence" => CaseConfig::Blast(Blast::default()),
            "euler2d-diffraction" => CaseConfig::Diffraction(Diffraction::default()),
            other => return Err(Error::Config(format!("unknown case `{other}`; known: {}", CASE_IDS.join(", ")))),
        })
    }

    pub fn id(&self) -> &'static str {
        match self {
            CaseConfig::OdeLinear(_) => "ode-linear",
            CaseConfig::OdeNonlinear(_) => "ode-nonlinear",
            CaseConfig::ShockTube(_) => "euler1d-3species",
            CaseConfig::Blast(_) => "euler2d-convergence",
            CaseConfig::Diffraction(_) => "euler2d-diffraction",
        }
    }

    /// Switch the flow cases to their finest mesh and longest final time.
    pub fn full_scale(&mut self) {
        match self {
            CaseConfig::Blast(b) => b.full_scale(),
            CaseConfig::Diffraction(d) => d.full_scale(),
            _ => {}
        }
    }

    /// Parses a JSON document; a missing `case` key takes `fallback_id`.
    pub fn from_json(text: &str, fallback_id: Option<&str>) -> Result<Self> {
        let mut value: Value = serde_json::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?;
        if let (Value::Object(map), Some(id)) = (&mut value, fallback_id) {
            map.entry("case").or_insert_with(|| Value::String(id.to_string()));
        }
        Self::from_value(value)
    }

    pub fn load(path: &Path, fallback_id: Option<&str>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text, fallback_id).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    fn from_value(value: Value) -> Result<Self> {
        serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))
    }

    /// Applies `key.path=value` assignments. Values are read as JSON where
    /// they parse and as strings otherwise.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        let mut value = serde_json::to_value(self)?;
        for item in overrides {
            let item = item.as_ref();
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{item}` is not of the form key=value")))?;
            if key.trim() == "case" {
                return Err(Error::Config("the case id cannot be overridden".into()));
            }
            let parsed = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            set_path(&mut value, key.trim(), parsed).map_err(|e| Error::Config(format!("override `{item}`: {e}")))?;
        }
        Self::from_value(value).map_err(|e| Error::Config(format!("after overrides: {e}")))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn set_path(root: &mut Value, path: &str, new: Value) -> std::result::Result<(), String> {
    let mut node = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (depth, part) in parts.iter().enumerate() {
        let last = depth + 1 == parts.len();
        node = match node {
            Value::Object(map) => {
                if last {
                    if !map.contains_key(*part) {
                        return Err(format!("unknown key `{part}`"));
                    }
                    map.insert(part.to_string(), new);
                    return Ok(());
                }
                map.get_mut(*part).ok_or_else(|| format!("unknown key `{part}`"))?
            }
            Value::Array(items) => {
                let i: usize = part.parse().map_err(|_| format!("`{part}` is not an index"))?;
                let len = items.len();
                let slot = items.get_mut(i).ok_or_else(|| format!("index {i} out of range (length {len})"))?;
                if last {
                    *slot = new;
                    return Ok(());
                }
                slot
            }
            _ => return Err(format!("`{part}` does not name a field")),
        };
    }
    Err("empty key".into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        for id in CASE_IDS {
            let cfg = CaseConfig::defaults(id).unwrap();
            assert_eq!(cfg.id(), id);
            let back = CaseConfig::from_json(&cfg.to_json().unwrap(), None).unwrap();
            assert_eq!(back, cfg, "{id}");
        }
    }

    #[test]
    fn overrides_patch_nested_keys() {
        let cfg = CaseConfig::defaults("euler2d-diffraction").unwrap();
        let out = cfg.with_overrides(&["right.3=5.5", "scheme.integrator.scheme=mpms2", "cells_per_unit=12"]).unwrap();
        match out {
            CaseConfig::Diffraction(d) => {
                assert_eq!(d.right[3], 5.5);
                assert_eq!(d.cells_per_unit, 12);
                assert_eq!(d.scheme.integrator, IntegratorKind::Mpms2 { s: 1.5 });
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let cfg = CaseConfig::defaults("ode-linear").unwrap();
        assert!(cfg.with_overrides(&["cells=3"]).is_err());
        assert!(cfg.with_overrides(&["dt"]).is_err());
        let err = CaseConfig::from_json(r#"{"case": "ode-linear", "dtt": 0.1}"#, None).unwrap_err();
        assert!(err.to_string().contains("dtt"), "{err}");
        assert!(CaseConfig::from_json("{\n  \"a\": 1,,\n}", Some("ode-linear")).unwrap_err().to_string().contains("line 2"));
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg = CaseConfig::from_json(r#"{"a": 3.0}"#, Some("ode-linear")).unwrap();
        match cfg {
            CaseConfig::OdeLinear(c) => {
                assert_eq!(c.a, 3.0);
                assert_eq!(c.c0, LINEAR_C0);
            }
            other => panic!("{other:?}"),
        }
    }
}
