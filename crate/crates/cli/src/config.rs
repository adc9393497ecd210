use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ged_core::embeddings::ProviderKind;
use ged_core::evaluation::ReportFormat;
use ged_core::{Integration, ModelConfig, TrainConfig};
use serde::Deserialize;

use crate::error::CliError;

/// One corpus file: an M2 path, or an original/corrected pair of text files.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Source {
    M2(PathBuf),
    Parallel {
        original: PathBuf,
        corrected: PathBuf,
        /// Space-separated POS tags, one line per sentence.
        original_pos: Option<PathBuf>,
        corrected_pos: Option<PathBuf>,
    },
}

impl Source {
    pub fn paths(&self) -> Vec<&Path> {
        match self {
            Source::M2(p) => vec![p],
            Source::Parallel {
                original,
                corrected,
                original_pos,
                corrected_pos,
            } => {
                let mut v: Vec<&Path> = vec![original, corrected];
                v.extend(original_pos.iter().map(PathBuf::as_path));
                v.extend(corrected_pos.iter().map(PathBuf::as_path));
                v
            }
        }
    }

    fn resolve(&mut self, base: &Path) {
        match self {
            Source::M2(p) => *p = base.join(&*p),
            Source::Parallel {
                original,
                corrected,
                original_pos,
                corrected_pos,
            } => {
                *original = base.join(&*original);
                *corrected = base.join(&*corrected);
                for p in [original_pos, corrected_pos].into_iter().flatten() {
                    *p = base.join(&*p);
                }
            }
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub train: Option<Source>,
    pub dev: Option<Source>,
    pub test: BTreeMap<String, Source>,
    /// Known-word list enabling the spelling rule.
    pub lexicon: Option<PathBuf>,
    /// Static word vectors in text format.
    pub vectors: Option<PathBuf>,
    pub min_count: Option<usize>,
}

/// Optional overrides of the default network dimensions.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelOverrides {
    pub word_dim: Option<usize>,
    pub char_dim: Option<usize>,
    pub char_hidden: Option<usize>,
    pub word_hidden: Option<usize>,
    pub hidden_dim: Option<usize>,
    pub lm_hidden: Option<usize>,
    pub keep_prob: Option<f64>,
    pub char_dropout: Option<bool>,
}

impl ModelOverrides {
    pub fn apply(&self, cfg: &mut ModelConfig) {
        let set = |dst: &mut usize, v: Option<usize>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut cfg.word_dim, self.word_dim);
        set(&mut cfg.char_dim, self.char_dim);
        set(&mut cfg.char_hidden, self.char_hidden);
        set(&mut cfg.word_hidden, self.word_hidden);
        set(&mut cfg.hidden_dim, self.hidden_dim);
        set(&mut cfg.lm_hidden, self.lm_hidden);
        if let Some(k) = self.keep_prob {
            cfg.keep_prob = k;
        }
        if let Some(c) = self.char_dropout {
            cfg.char_dropout = c;
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Directory for prepared corpora.
    pub prepared: PathBuf,
    pub checkpoint: PathBuf,
    /// Defaults to the checkpoint path with a `.history.tsv` suffix.
    pub history: Option<PathBuf>,
    /// Contextual vector store.
    pub store: Option<PathBuf>,
    /// Expected provider of the store, checked on load.
    pub provider: Option<ProviderKind>,
    pub format: ReportFormat,
    pub data: DataConfig,
    pub model: ModelOverrides,
    pub train: TrainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            prepared: "prepared".into(),
            checkpoint: "model.ckpt".into(),
            history: None,
            store: None,
            provider: None,
            format: ReportFormat::Tsv,
            data: DataConfig::default(),
            model: ModelOverrides::default(),
            train: TrainConfig::default(),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub integration: Option<Integration>,
    pub store: Option<PathBuf>,
    pub annotator: Option<usize>,
    pub format: Option<ReportFormat>,
}

impl RunConfig {
    /// Reads `path` (if any), resolves its relative paths against the file's
    /// directory, then applies `over`.
    pub fn load(path: Option<&Path>, over: &Overrides) -> Result<Self, CliError> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::input(format!("{}: {e}", p.display())))?;
                let mut cfg: RunConfig = toml::from_str(&text)
                    .map_err(|e| CliError::config(format!("{}: {e}", p.display())))?;
                let base = p.parent().map(Path::to_path_buf).unwrap_or_default();
                cfg.resolve(&base);
                cfg
            }
            None => RunConfig::default(),
        };
        if let Some(s) = over.seed {
            cfg.train.seed = s;
        }
        if let Some(i) = over.integration {
            cfg.train.integration = i;
        }
        if let Some(s) = &over.store {
            cfg.store = Some(s.clone());
        }
        if let Some(a) = over.annotator {
            cfg.train.annotator = a;
        }
        if let Some(f) = over.format {
            cfg.format = f;
        }
        Ok(cfg)
    }

    fn resolve(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| *p = base.join(&*p);
        join(&mut self.prepared);
        join(&mut self.checkpoint);
        for p in [&mut self.history, &mut self.store, &mut self.data.lexicon, &mut self.data.vectors]
            .into_iter()
            .flatten()
        {
            join(p);
        }
        for s in [&mut self.data.train, &mut self.data.dev].into_iter().flatten() {
            s.resolve(base);
        }
        for s in self.data.test.values_mut() {
            s.resolve(base);
        }
    }

    pub fn history_path(&self) -> PathBuf {
        self.history
            .clone()
            .unwrap_or_else(|| self.checkpoint.with_extension("history.tsv"))
    }

    /// Named corpora in prepare order: train, dev, then tests by name.
    pub fn datasets(&self) -> Vec<(String, &Source)> {
        let mut out = Vec::new();
        if let Some(s) = &self.data.train {
            out.push(("train".to_string(), s));
        }
        if let Some(s) = &self.data.dev {
            out.push(("dev".to_string(), s));
        }
        out.extend(self.data.test.iter().map(|(n, s)| (n.clone(), s)));
        out
    }

    pub fn test_names(&self) -> Vec<String> {
        self.data.test.keys().cloned().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_paths_follow_the_file() {
        let dir = std::env::temp_dir().join(format!("ged-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.toml");
        std::fs::write(
            &path,
            r#"
store = "ctx.bin"
format = "table"
[data]
train = "a.m2"
test = { conll = { original = "o.txt", corrected = "c.txt" } }
[train]
seed = 4
patience = 2
integration = "input"
"#,
        )
        .unwrap();
        let cfg = RunConfig::load(Some(&path), &Overrides::default()).unwrap();
        assert_eq!(cfg.store.as_deref(), Some(dir.join("ctx.bin").as_path()));
        assert_eq!(cfg.prepared, dir.join("prepared"));
        assert_eq!(cfg.data.train, Some(Source::M2(dir.join("a.m2"))));
        assert!(matches!(&cfg.data.test["conll"], Source::Parallel { original, .. } if *original == dir.join("o.txt")));
        assert_eq!((cfg.train.seed, cfg.train.patience, cfg.train.gamma), (4, 2, 0.1));
        assert_eq!(cfg.format, ReportFormat::Table);

        let over = Overrides {
            seed: Some(9),
            integration: Some(Integration::Output),
            format: Some(ReportFormat::Tsv),
            ..Overrides::default()
        };
        let cfg = RunConfig::load(Some(&path), &over).unwrap();
        assert_eq!(cfg.train.seed, 9);
        assert_eq!(cfg.train.integration, Integration::Output);
        assert_eq!(cfg.format, ReportFormat::Tsv);
        assert_eq!(cfg.history_path(), dir.join("model.history.tsv"));
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = toml::from_str::<RunConfig>("[train]\ngama = 0.2\n").unwrap_err();
        assert!(err.to_string().contains("gama"), "{err}");
    }
}
