//! Command reports.
//!
//! A report is an ordered list of fields. The human form prints
//! `key: value` with aligned values; the `--porcelain` form prints
//! `key=value`, one per line, using ASCII spellings of generator names.
//! Both forms are deterministic functions of the inputs and flags.

use std::fmt::Display;

#[derive(Debug, Clone, PartialEq, Eq)]
struct Field {
    key: String,
    human: String,
    porcelain: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Report {
    fields: Vec<Field>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        let mut r = Self::default();
        r.field("command", command);
        r
    }

    /// A field rendered the same way in both forms.
    pub fn field(&mut self, key: impl Into<String>, value: impl Display) -> &mut Self {
        let value = value.to_string();
        self.field_alt(key, value.clone(), value)
    }

    /// A field with a separate porcelain spelling.
    pub fn field_alt(&mut self, key: impl Into<String>, human: impl Display, porcelain: impl Display) -> &mut Self {
        self.fields.push(Field {
            key: key.into(),
            human: human.to_string(),
            porcelain: porcelain.to_string(),
        });
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields.iter().find(|f| f.key == key).map(|f| f.porcelain.as_str())
    }

    pub fn render(&self, porcelain: bool) -> String {
        let mut out = String::new();
        if porcelain {
            for f in &self.fields {
                out.push_str(&f.key);
                out.push('=');
                out.push_str(&f.porcelain);
                out.push('\n');
            }
        } else {
            let width = self.fields.iter().map(|f| f.key.chars().count()).max().unwrap_or(0);
            for f in &self.fields {
                let pad = width - f.key.chars().count();
                out.push_str(&f.key);
                out.push(':');
                out.extend(std::iter::repeat_n(' ', pad + 1));
                out.push_str(&f.human);
                out.push('\n');
            }
        }
        out
    }
}

/// ASCII spelling of a generator name: `φ` becomes `phi`, `σ` becomes
/// `sigma` and `⁻¹` becomes `^-1`.
pub fn ascii_name(name: &str) -> String {
    name.replace('φ', "phi").replace('σ', "sigma").replace("⁻¹", "^-1")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_forms() {
        let mut r = Report::new("demo");
        r.field("n", 3).field_alt("word", "φφ", "phi.phi");
        assert_eq!(r.render(true), "command=demo\nn=3\nword=phi.phi\n");
        assert_eq!(r.render(false), "command: demo\nn:       3\nword:    φφ\n");
        assert_eq!(r.get("word"), Some("phi.phi"));
    }

    #[test]
    fn ascii_names() {
        assert_eq!(ascii_name("σ[1,2,1]⁻¹"), "sigma[1,2,1]^-1");
    }
}
