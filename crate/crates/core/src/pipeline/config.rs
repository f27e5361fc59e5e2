use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::corpus::BucketRange;
use crate::partition::CountMode;
use crate::synth::files;

pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_FB_RANGE: &str = "2011-04-H2..2011-09-H2";
pub const DEFAULT_MARKET_RANGE: &str = "2011-04-H2..2011-10-H1";

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

fn default_fb_range() -> BucketRange {
    DEFAULT_FB_RANGE.parse().expect("valid default range")
}

fn default_market_range() -> BucketRange {
    DEFAULT_MARKET_RANGE.parse().expect("valid default range")
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Run configuration, read from a TOML file. Relative paths are resolved
/// against the directory holding the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus: PathBuf,
    pub baseline: PathBuf,
    pub lexicon: PathBuf,
    pub denial: PathBuf,
    pub removal: PathBuf,
    pub gazetteer: PathBuf,
    pub allowlist: PathBuf,
    /// Extra tokenizer vocabulary offered to the salience test.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidates: Option<PathBuf>,
    pub listings: PathBuf,
    pub deflators: PathBuf,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_fb_range")]
    pub fb_range: BucketRange,
    #[serde(default = "default_market_range")]
    pub market_range: BucketRange,
    /// Worker threads; 0 uses every available core.
    #[serde(default)]
    pub threads: usize,
    #[serde(default)]
    pub count_mode: CountMode,
}

impl PipelineConfig {
    /// Config for the file layout written by the synthetic generator.
    pub fn for_synthetic_dir(dir: &Path) -> Self {
        Self {
            corpus: dir.join(files::CORPUS),
            baseline: dir.join(files::BASELINE),
            lexicon: dir.join(files::LEXICON),
            denial: dir.join(files::DENIAL),
            removal: dir.join(files::REMOVAL),
            gazetteer: dir.join(files::GAZETTEER),
            allowlist: dir.join(files::ALLOWLIST),
            candidates: Some(dir.join(files::CANDIDATES)),
            listings: dir.join(files::LISTINGS),
            deflators: dir.join(files::DEFLATORS),
            out_dir: dir.join("out"),
            alpha: DEFAULT_ALPHA,
            fb_range: default_fb_range(),
            market_range: default_market_range(),
            threads: 0,
            count_mode: CountMode::default(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: Self =
            toml::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_relative_to(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_relative_to(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in self.input_paths_mut() {
            fix(p);
        }
        if let Some(c) = self.candidates.as_mut() {
            fix(c);
        }
        fix(&mut self.out_dir);
    }

    fn input_paths_mut(&mut self) -> [&mut PathBuf; 9] {
        [
            &mut self.corpus,
            &mut self.baseline,
            &mut self.lexicon,
            &mut self.denial,
            &mut self.removal,
            &mut self.gazetteer,
            &mut self.allowlist,
            &mut self.listings,
            &mut self.deflators,
        ]
    }

    pub fn input_paths(&self) -> Vec<(&'static str, &Path)> {
        let mut v = vec![
            ("corpus", self.corpus.as_path()),
            ("baseline", self.baseline.as_path()),
            ("lexicon", self.lexicon.as_path()),
            ("denial", self.denial.as_path()),
            ("removal", self.removal.as_path()),
            ("gazetteer", self.gazetteer.as_path()),
            ("allowlist", self.allowlist.as_path()),
            ("listings", self.listings.as_path()),
            ("deflators", self.deflators.as_path()),
        ];
        if let Some(c) = &self.candidates {
            v.push(("candidates", c.as_path()));
        }
        v
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(PipelineError::Config(format!("alpha {} must lie in (0, 1)", self.alpha)));
        }
        let mut seen = BTreeSet::new();
        for (name, p) in self.input_paths() {
            if !seen.insert(p) {
                return Err(PipelineError::Config(format!(
                    "path {} for {name} is used by more than one input",
                    p.display()
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
corpus = "c.jsonl"
baseline = "b.jsonl"
lexicon = "lex.csv"
denial = "denial.txt"
removal = "removal.txt"
gazetteer = "gaz.txt"
allowlist = "allow.txt"
listings = "listings.csv"
deflators = "/abs/deflators.csv"
"#;

    #[test]
    fn defaults_and_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, MINIMAL).unwrap();
        let cfg = PipelineConfig::load(&path).unwrap();
        assert_eq!(cfg.alpha, 0.05);
        assert_eq!(cfg.fb_range.to_string(), DEFAULT_FB_RANGE);
        assert_eq!(cfg.market_range.to_string(), DEFAULT_MARKET_RANGE);
        assert_eq!(cfg.corpus, dir.path().join("c.jsonl"));
        assert_eq!(cfg.deflators, PathBuf::from("/abs/deflators.csv"));
        assert_eq!(cfg.out_dir, dir.path().join("out"));
        assert_eq!(cfg.count_mode, CountMode::Tokens);
        assert!(cfg.candidates.is_none());
    }

    #[test]
    fn rejects_bad_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        for (extra, needle) in [
            ("alpha = 1.5\n", "alpha"),
            ("fb_range = \"2011-09-H2..2011-04-H2\"\n", "reversed"),
            ("bogus = 1\n", "bogus"),
        ] {
            std::fs::write(&path, format!("{MINIMAL}{extra}")).unwrap();
            let err = PipelineConfig::load(&path).unwrap_err().to_string();
            assert!(err.contains(needle), "{err}");
        }
        std::fs::write(&path, MINIMAL.replace("b.jsonl", "c.jsonl")).unwrap();
        assert!(PipelineConfig::load(&path).unwrap_err().to_string().contains("more than one"));
    }

    #[test]
    fn serializes_round_trip() {
        let cfg = PipelineConfig::for_synthetic_dir(Path::new("/data"));
        let text = toml::to_string(&cfg).unwrap();
        let back: PipelineConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }
}
