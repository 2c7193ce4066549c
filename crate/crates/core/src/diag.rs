use std::fmt;

use serde::{Deserialize, Serialize};

/// A non-fatal problem found while processing one record.
///
/// Parsers and renderers never drop input silently: every skipped line or
/// polygon produces one of these.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polygon: Option<usize>,
    pub message: String,
}

impl Diagnostic {
    pub fn new(message: impl Into<String>) -> Self {
        Self {
            image_id: None,
            line: None,
            polygon: None,
            message: message.into(),
        }
    }

    pub fn at_line(mut self, line: usize) -> Self {
        self.line = Some(line);
        self
    }

    pub fn for_polygon(mut self, index: usize) -> Self {
        self.polygon = Some(index);
        self
    }

    pub fn for_image(mut self, image_id: impl Into<String>) -> Self {
        self.image_id = Some(image_id.into());
        self
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(id) = &self.image_id {
            write!(f, "{id}: ")?;
        }
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if let Some(p) = self.polygon {
            write!(f, "polygon {p}: ")?;
        }
        f.write_str(&self.message)
    }
}
