//! Versioned JSON model files.

use sbpmt_core::ensemble::SbpmtModel;
use serde::{Deserialize, Serialize};

use crate::data::Schema;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub schema: Schema,
    pub model: SbpmtModel,
}

#[derive(Debug, thiserror::Error)]
pub enum ModelFileError {
    #[error("model file is not valid JSON for this format: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported model format version {found} (expected {FORMAT_VERSION})")]
    Version { found: u32 },
    #[error("inconsistent model: {0}")]
    Invalid(String),
}

impl ModelFile {
    pub fn new(schema: Schema, model: SbpmtModel) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            schema,
            model,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, ModelFileError> {
        #[derive(Deserialize)]
        struct Header {
            format_version: u32,
        }
        let header: Header = serde_json::from_str(text)?;
        if header.format_version != FORMAT_VERSION {
            return Err(ModelFileError::Version {
                found: header.format_version,
            });
        }
        let file: ModelFile = serde_json::from_str(text)?;
        file.model
            .validate()
            .map_err(|e| ModelFileError::Invalid(e.to_string()))?;
        if file.schema.n_features() != file.model.n_features {
            return Err(ModelFileError::Invalid(
                "schema and model disagree on feature count".into(),
            ));
        }
        if file.schema.class_names.len() != file.model.n_classes {
            return Err(ModelFileError::Invalid(
                "schema and model disagree on class count".into(),
            ));
        }
        Ok(file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{read_labeled, LabelColumn};
    use crate::train::fit_parallel;
    use sbpmt_core::ensemble::SbpmtConfig;

    fn fitted() -> ModelFile {
        let text = "a,b,c,y\n".to_string()
            + &(0..60)
                .map(|i| {
                    format!(
                        "{},{},{},{}\n",
                        i % 7,
                        (i * 3) % 11,
                        if i % 2 == 0 { "u" } else { "v" },
                        if i % 3 == 0 { "p" } else { "q" }
                    )
                })
                .collect::<String>();
        let d = read_labeled(text.as_bytes(), &LabelColumn::Name("y".into()), true).unwrap();
        let cfg = SbpmtConfig {
            members: 3,
            min_leaf_size: 5,
            ..SbpmtConfig::benchmark()
        };
        ModelFile::new(d.schema, fit_parallel(&d.data, &cfg).unwrap().model)
    }

    #[test]
    fn round_trip_is_exact() {
        let file = fitted();
        let text = file.to_json();
        let back = ModelFile::from_json(&text).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn rejects_other_versions_and_broken_models() {
        let file = fitted();
        let text = file
            .to_json()
            .replacen("\"format_version\": 1", "\"format_version\": 9", 1);
        assert!(matches!(
            ModelFile::from_json(&text),
            Err(ModelFileError::Version { found: 9 })
        ));
        let mut broken = file.clone();
        broken.model.members.pop();
        assert!(matches!(
            ModelFile::from_json(&broken.to_json()),
            Err(ModelFileError::Invalid(_))
        ));
        assert!(ModelFile::from_json("{}").is_err());
    }
}
