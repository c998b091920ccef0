//! Run manifests: everything needed to reproduce a study run bit-exactly
//! (tool version, resolved config, master seed), plus bookkeeping
//! (timestamps, output paths, error tallies). `--config` accepts a
//! manifest file directly, so a run can be replayed from its own record.

pub const MARKER: &str = "lazynet-run-manifest v1";
const CONFIG_BEGIN: &str = "--- config ---";
const CONFIG_END: &str = "--- end config ---";

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub version: String,
    pub study: String,
    pub master_seed: u64,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub outputs: Vec<String>,
    pub error_rows: usize,
    /// Fully resolved config text; parsing it reproduces the run.
    pub config_text: String,
}

impl RunManifest {
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(MARKER);
        out.push('\n');
        out.push_str(&format!("version: {}\n", self.version));
        out.push_str(&format!("study: {}\n", self.study));
        out.push_str(&format!("master_seed: {}\n", self.master_seed));
        out.push_str(&format!("started_unix: {}\n", self.started_unix));
        out.push_str(&format!("finished_unix: {}\n", self.finished_unix));
        out.push_str(&format!("outputs: {}\n", self.outputs.join(", ")));
        out.push_str(&format!("error_rows: {}\n", self.error_rows));
        out.push_str(CONFIG_BEGIN);
        out.push('\n');
        out.push_str(&self.config_text);
        if !self.config_text.ends_with('\n') {
            out.push('\n');
        }
        out.push_str(CONFIG_END);
        out.push('\n');
        out
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        if !is_manifest(text) {
            return Err("not a run manifest".into());
        }
        let mut fields = std::collections::HashMap::new();
        for line in text.lines().skip(1) {
            if line == CONFIG_BEGIN {
                break;
            }
            if let Some((k, v)) = line.split_once(": ") {
                fields.insert(k.to_string(), v.to_string());
            }
        }
        let get = |k: &str| {
            fields
                .get(k)
                .cloned()
                .ok_or_else(|| format!("manifest missing field `{k}`"))
        };
        let config_text =
            extract_config(text).ok_or_else(|| "manifest has no config block".to_string())?;
        Ok(Self {
            version: get("version")?,
            study: get("study")?,
            master_seed: get("master_seed")?.parse().map_err(|_| "bad master_seed")?,
            started_unix: get("started_unix")?
                .parse()
                .map_err(|_| "bad started_unix")?,
            finished_unix: get("finished_unix")?
                .parse()
                .map_err(|_| "bad finished_unix")?,
            outputs: get("outputs")?.split(", ").map(str::to_string).collect(),
            error_rows: get("error_rows")?.parse().map_err(|_| "bad error_rows")?,
            config_text,
        })
    }
}

pub fn is_manifest(text: &str) -> bool {
    text.lines().next() == Some(MARKER)
}

/// The embedded config block, if present.
pub fn extract_config(text: &str) -> Option<String> {
    let begin = text.find(CONFIG_BEGIN)? + CONFIG_BEGIN.len() + 1;
    let end = text.rfind(CONFIG_END)?;
    (begin <= end).then(|| text[begin..end].to_string())
}
