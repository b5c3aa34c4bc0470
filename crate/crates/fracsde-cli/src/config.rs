//! JSON config documents, one flavor per subcommand.
//!
//! Every document carries a mandatory `schema_version` field (this build
//! reads version 1) and rejects unknown fields, so a typo'd key fails loudly
//! instead of being silently ignored. Field names mirror the library's
//! experiment configuration: `H` / `H_values` for the Hurst parameter(s),
//! `T` for the horizon.

use std::fs;
use std::path::{Path, PathBuf};

use fracsde::{EstimatorSel, ExperimentConfig, Model};
use serde::Deserialize;

use crate::{field_err, CliError};

/// The config document version this build reads.
pub const SCHEMA_VERSION: u32 = 1;

fn default_refine() -> u32 {
    1
}

fn default_ci_level() -> f64 {
    0.95
}

/// First-pass parse: only the version field, tolerating everything else, so
/// a document from a different schema generation is reported as a version
/// mismatch rather than as an unknown-field soup.
#[derive(Debug, Deserialize)]
struct VersionProbe {
    schema_version: Option<u32>,
}

fn parse_doc<T: serde::de::DeserializeOwned>(text: &str, origin: &str) -> Result<T, CliError> {
    let probe: VersionProbe = serde_json::from_str(text)
        .map_err(|e| CliError::config(format!("config {origin}: {e}")))?;
    match probe.schema_version {
        None => {
            return Err(CliError::config(format!(
                "config {origin}: missing required field `schema_version`"
            )))
        }
        Some(SCHEMA_VERSION) => {}
        Some(v) => {
            return Err(CliError::config(format!(
                "config {origin}: unsupported schema_version {v} (this build reads version {SCHEMA_VERSION})"
            )))
        }
    }
    serde_json::from_str(text).map_err(|e| CliError::config(format!("config {origin}: {e}")))
}

/// Reads and parses one config document; all failures exit with code 2.
pub fn load_doc<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
    parse_doc(&text, &path.display().to_string())
}

/// Config for `fracsde simulate`: one trajectory of the chosen model preset.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateDoc {
    /// Checked by the loader pre-pass; listed so `deny_unknown_fields` accepts it.
    #[allow(dead_code)]
    pub schema_version: u32,
    pub model: Model,
    #[serde(rename = "H")]
    pub hurst: f64,
    pub c: f64,
    pub lambda: f64,
    pub x0: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub n: usize,
    pub seed: u64,
    #[serde(default = "default_refine")]
    pub refine: u32,
    #[serde(default)]
    pub write_driver: bool,
}

impl SimulateDoc {
    /// Field-by-field validation with document field names in the errors.
    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.hurst.is_finite() && self.hurst > 0.5 && self.hurst < 1.0) {
            return Err(field_err(
                "H",
                format!("must lie in (1/2, 1), got {}", self.hurst),
            ));
        }
        if !(self.c.is_finite() && self.c != 0.0) {
            return Err(field_err(
                "c",
                format!("must be nonzero finite, got {}", self.c),
            ));
        }
        if !self.lambda.is_finite() {
            return Err(field_err(
                "lambda",
                format!("must be finite, got {}", self.lambda),
            ));
        }
        if !(self.x0.is_finite() && self.x0 > 0.0) {
            return Err(field_err(
                "x0",
                format!("must be positive finite, got {}", self.x0),
            ));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(field_err(
                "T",
                format!("must be positive finite, got {}", self.horizon),
            ));
        }
        if self.n < 2 {
            return Err(field_err("n", format!("must be at least 2, got {}", self.n)));
        }
        if self.refine < 1 {
            return Err(field_err("refine", "must be at least 1"));
        }
        Ok(())
    }
}

/// Config for `fracsde estimate`: which estimators to run on which path CSV.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateDoc {
    /// Checked by the loader pre-pass; listed so `deny_unknown_fields` accepts it.
    #[allow(dead_code)]
    pub schema_version: u32,
    pub input: PathBuf,
    #[serde(default)]
    pub estimators: Option<Vec<EstimatorSel>>,
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default = "default_ci_level")]
    pub ci_level: f64,
}

impl EstimateDoc {
    /// Validates the document and resolves the estimator selection, always
    /// reported in the fixed order `h1, h2, c2`. Without an explicit list
    /// the default is all three estimators when `c` is supplied and the two
    /// `c`-free ones otherwise.
    pub fn selection(&self) -> Result<Vec<EstimatorSel>, CliError> {
        if !(self.ci_level.is_finite() && self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(field_err(
                "ci_level",
                format!("must lie in (0, 1), got {}", self.ci_level),
            ));
        }
        if let Some(c) = self.c {
            if !(c.is_finite() && c != 0.0) {
                return Err(field_err("c", format!("must be nonzero finite, got {c}")));
            }
        }
        let requested: Vec<EstimatorSel> = match &self.estimators {
            Some(list) if list.is_empty() => {
                return Err(field_err("estimators", "must be nonempty when present"))
            }
            Some(list) => list.clone(),
            None if self.c.is_some() => vec![EstimatorSel::H1, EstimatorSel::H2, EstimatorSel::C2],
            None => vec![EstimatorSel::H2, EstimatorSel::C2],
        };
        if requested.contains(&EstimatorSel::H1) && self.c.is_none() {
            return Err(field_err(
                "c",
                "estimator h1 needs the known volatility coefficient, but `c` is not supplied",
            ));
        }
        // Fixed output order, duplicates collapsed.
        let order = [EstimatorSel::H1, EstimatorSel::H2, EstimatorSel::C2];
        Ok(order
            .into_iter()
            .filter(|e| requested.contains(e))
            .collect())
    }
}

/// Config for `fracsde experiment`: a flat mirror of the library's
/// [`ExperimentConfig`] plus the schema version.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentDoc {
    /// Checked by the loader pre-pass; listed so `deny_unknown_fields` accepts it.
    #[allow(dead_code)]
    pub schema_version: u32,
    pub model: Model,
    #[serde(rename = "H_values")]
    pub hurst_values: Vec<f64>,
    pub c_values: Vec<f64>,
    pub lambda: f64,
    pub x0: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub n_values: Vec<usize>,
    pub replicates: usize,
    pub base_seed: u64,
    pub estimators: Vec<EstimatorSel>,
    #[serde(default = "default_ci_level")]
    pub ci_level: f64,
    #[serde(default = "default_refine")]
    pub refine: u32,
}

impl ExperimentDoc {
    /// Converts to the library config (applying a `--seed` override) and
    /// validates it; the library names the offending field on failure.
    pub fn into_config(self, seed_override: Option<u64>) -> Result<ExperimentConfig, CliError> {
        let config = ExperimentConfig {
            model: self.model,
            hurst_values: self.hurst_values,
            c_values: self.c_values,
            lambda: self.lambda,
            x0: self.x0,
            horizon: self.horizon,
            n_values: self.n_values,
            replicates: self.replicates,
            base_seed: seed_override.unwrap_or(self.base_seed),
            estimators: self.estimators,
            ci_level: self.ci_level,
            refine: self.refine,
        };
        config
            .validate()
            .map_err(|e| CliError::config(e.to_string()))?;
        Ok(config)
    }
}

/// Config for `fracsde variances`: the Hurst grid to tabulate.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariancesDoc {
    /// Checked by the loader pre-pass; listed so `deny_unknown_fields` accepts it.
    #[allow(dead_code)]
    pub schema_version: u32,
    #[serde(rename = "H_values")]
    pub hurst_values: Vec<f64>,
}

impl VariancesDoc {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.hurst_values.is_empty() {
            return Err(field_err("H_values", "must be nonempty"));
        }
        for &h in &self.hurst_values {
            if !(h.is_finite() && h > 0.5 && h < 1.0) {
                return Err(field_err(
                    "H_values",
                    format!("all values must lie in (1/2, 1), got {h}"),
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config_msg(err: CliError) -> String {
        match err {
            CliError::Config(m) => m,
            CliError::Runtime(m) => panic!("expected a config error, got runtime: {m}"),
        }
    }

    #[test]
    fn simulate_doc_applies_defaults() {
        let doc: SimulateDoc = parse_doc(
            r#"{"schema_version":1,"model":"verhulst","H":0.7,"c":0.7,
                "lambda":0.5,"x0":3.0,"T":1.0,"n":1024,"seed":7}"#,
            "test",
        )
        .unwrap();
        assert_eq!(doc.refine, 1);
        assert!(!doc.write_driver);
        assert_eq!(doc.model, Model::Verhulst);
        doc.validate().unwrap();
    }

    #[test]
    fn simulate_doc_rejects_out_of_range_hurst_naming_the_field() {
        let doc: SimulateDoc = parse_doc(
            r#"{"schema_version":1,"model":"verhulst","H":1.2,"c":0.7,
                "lambda":0.5,"x0":3.0,"T":1.0,"n":1024,"seed":7}"#,
            "test",
        )
        .unwrap();
        let msg = config_msg(doc.validate().unwrap_err());
        assert!(msg.contains("`H`"), "message should name the field: {msg}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = parse_doc::<VariancesDoc>(
            r#"{"schema_version":1,"H_values":[0.7],"bogus":3}"#,
            "test",
        )
        .unwrap_err();
        let msg = config_msg(err);
        assert!(msg.contains("bogus"), "message should name the key: {msg}");
    }

    #[test]
    fn missing_and_wrong_schema_version_are_rejected() {
        let missing = config_msg(parse_doc::<VariancesDoc>(r#"{"H_values":[0.7]}"#, "t").unwrap_err());
        assert!(missing.contains("schema_version"), "{missing}");

        let wrong = config_msg(
            parse_doc::<VariancesDoc>(r#"{"schema_version":2,"H_values":[0.7]}"#, "t").unwrap_err(),
        );
        assert!(wrong.contains("unsupported schema_version 2"), "{wrong}");
    }

    #[test]
    fn estimate_selection_defaults_depend_on_c() {
        let with_c: EstimateDoc = parse_doc(
            r#"{"schema_version":1,"input":"p.csv","c":0.7}"#,
            "t",
        )
        .unwrap();
        assert_eq!(
            with_c.selection().unwrap(),
            vec![EstimatorSel::H1, EstimatorSel::H2, EstimatorSel::C2]
        );

        let without_c: EstimateDoc =
            parse_doc(r#"{"schema_version":1,"input":"p.csv"}"#, "t").unwrap();
        assert_eq!(
            without_c.selection().unwrap(),
            vec![EstimatorSel::H2, EstimatorSel::C2]
        );
        assert_eq!(without_c.ci_level, 0.95);
    }

    #[test]
    fn estimate_h1_without_c_is_rejected_naming_c() {
        let doc: EstimateDoc = parse_doc(
            r#"{"schema_version":1,"input":"p.csv","estimators":["h1"]}"#,
            "t",
        )
        .unwrap();
        let msg = config_msg(doc.selection().unwrap_err());
        assert!(msg.contains("`c`"), "message should name the field: {msg}");
    }

    #[test]
    fn estimate_selection_is_reordered_and_deduplicated() {
        let doc: EstimateDoc = parse_doc(
            r#"{"schema_version":1,"input":"p.csv","c":0.7,
                "estimators":["c2","h1","c2"]}"#,
            "t",
        )
        .unwrap();
        assert_eq!(
            doc.selection().unwrap(),
            vec![EstimatorSel::H1, EstimatorSel::C2]
        );
    }

    #[test]
    fn experiment_doc_maps_onto_library_config() {
        let doc: ExperimentDoc = parse_doc(
            r#"{"schema_version":1,"model":"black_scholes","H_values":[0.7],
                "c_values":[0.5,1.0],"lambda":0.5,"x0":3.0,"T":1.0,
                "n_values":[256],"replicates":10,"base_seed":9,
                "estimators":["h1","c2"]}"#,
            "t",
        )
        .unwrap();
        let config = doc.into_config(Some(1234)).unwrap();
        assert_eq!(config.base_seed, 1234);
        assert_eq!(config.ci_level, 0.95);
        assert_eq!(config.refine, 1);
        assert_eq!(config.estimators, vec![EstimatorSel::H1, EstimatorSel::C2]);
    }

    #[test]
    fn variances_doc_validation() {
        let empty: VariancesDoc =
            parse_doc(r#"{"schema_version":1,"H_values":[]}"#, "t").unwrap();
        assert!(config_msg(empty.validate().unwrap_err()).contains("`H_values`"));

        let low: VariancesDoc =
            parse_doc(r#"{"schema_version":1,"H_values":[0.4]}"#, "t").unwrap();
        assert!(config_msg(low.validate().unwrap_err()).contains("0.4"));

        let ok: VariancesDoc =
            parse_doc(r#"{"schema_version":1,"H_values":[0.6,0.9]}"#, "t").unwrap();
        ok.validate().unwrap();
    }
}
