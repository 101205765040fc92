use std::fmt::{Display, Write};

/// Builds the commented text form of a component tree.
#[derive(Debug, Default)]
pub struct ConfigWriter {
    out: String,
}

impl ConfigWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn comment(&mut self, text: &str) -> &mut Self {
        let _ = writeln!(self.out, "# {text}");
        self
    }

    pub fn value(&mut self, value: impl Display) -> &mut Self {
        let _ = writeln!(self.out, "{value}");
        self
    }

    /// A `# label` header line followed by the value line.
    pub fn field(&mut self, label: &str, value: impl Display) -> &mut Self {
        self.comment(label).value(value)
    }

    pub fn version(&mut self, version: i64) -> &mut Self {
        self.field("Version", version)
    }

    pub fn finish(self) -> String {
        self.out
    }
}
