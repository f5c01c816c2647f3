use std::path::{Path, PathBuf};

use anyhow::Context as _;
use serde::Serialize;

use crate::Format;

/// Writes `<name>.csv` and, in JSON mode, `<name>.json` built from `json`.
/// Returns the paths written.
pub struct Writer<'a> {
    pub dir: &'a Path,
    pub format: Format,
    pub written: Vec<PathBuf>,
}

impl<'a> Writer<'a> {
    pub fn new(dir: &'a Path, format: Format) -> anyhow::Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir,
            format,
            written: Vec::new(),
        })
    }

    pub fn table<T: Serialize + ?Sized>(&mut self, name: &str, header: &[&str], rows: &[Vec<String>], json: &T) -> anyhow::Result<()> {
        let mut text = header.join(",");
        text.push('\n');
        for r in rows {
            debug_assert_eq!(r.len(), header.len());
            text.push_str(&r.iter().map(|c| csv_field(c)).collect::<Vec<_>>().join(","));
            text.push('\n');
        }
        self.file(&format!("{name}.csv"), &text)?;
        if self.format == Format::Json {
            self.file(&format!("{name}.json"), &(serde_json::to_string_pretty(json)? + "\n"))?;
        }
        Ok(())
    }

    pub fn file(&mut self, name: &str, contents: &str) -> anyhow::Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(path);
        Ok(())
    }

    pub fn report(&self) {
        for p in &self.written {
            println!("wrote {}", p.display());
        }
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quotes_only_when_needed() {
        assert_eq!(csv_field("tax"), "tax");
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    }
}
