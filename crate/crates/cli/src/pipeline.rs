use crate::cache::{sha256_hex, write_atomic};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::manifest::{file_record, Manifest};
use crate::stages;
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Spectrum,
    Classical,
    Stats,
    Husimi,
    Mixed,
}

impl Stage {
    pub const ALL: [Stage; 5] = [Stage::Spectrum, Stage::Classical, Stage::Stats, Stage::Husimi, Stage::Mixed];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Spectrum => "spectrum",
            Stage::Classical => "classical",
            Stage::Stats => "stats",
            Stage::Husimi => "husimi",
            Stage::Mixed => "mixed",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Ran { files: usize, seconds: f64 },
    UpToDate,
}

/// Output sink of one stage; every file goes through here so the manifest sees it.
pub struct StageContext<'a> {
    pub cfg: &'a RunConfig,
    pub out: &'a Path,
    /// Reuse this stage's own per-item caches instead of recomputing them.
    pub resume: bool,
    written: BTreeSet<String>,
}

impl StageContext<'_> {
    pub fn path(&self, rel: &str) -> PathBuf {
        self.out.join(rel)
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> CliResult<()> {
        let path = self.path(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(CliError::io(parent.display()))?;
        }
        write_atomic(&path, bytes)?;
        self.written.insert(rel.to_string());
        Ok(())
    }

    /// Registers a file written (or reused) by a helper.
    pub fn register(&mut self, rel: &str) {
        self.written.insert(rel.to_string());
    }

    pub fn ensure_dir(&self, rel: &str) -> CliResult<PathBuf> {
        let dir = self.path(rel);
        std::fs::create_dir_all(&dir).map_err(CliError::io(dir.display()))?;
        Ok(dir)
    }
}

pub struct Pipeline {
    pub config: RunConfig,
    pub resume: bool,
    config_hash: String,
}

impl Pipeline {
    pub fn new(config: RunConfig, resume: bool) -> CliResult<Self> {
        config.validate()?;
        let config_hash = config_hash(&config);
        Ok(Self {
            config,
            resume,
            config_hash,
        })
    }

    pub fn out(&self) -> &Path {
        &self.config.run.out
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    /// Runs `stages` in order on a pool of `run.workers` threads (0: all cores).
    pub fn run(&self, stages: &[Stage]) -> CliResult<Vec<(Stage, Outcome)>> {
        let workers = self.config.run.workers;
        if workers == 0 {
            return self.run_all(stages);
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| CliError::Config(format!("cannot start {workers} workers: {e}")))?;
        pool.install(|| self.run_all(stages))
    }

    fn run_all(&self, stages: &[Stage]) -> CliResult<Vec<(Stage, Outcome)>> {
        let out = self.out();
        std::fs::create_dir_all(out).map_err(CliError::io(out.display()))?;
        let mut manifest = Manifest::load(out)?;
        manifest.tool_version = env!("CARGO_PKG_VERSION").to_string();
        manifest.config_hash = self.config_hash.clone();
        let mut outcomes = Vec::new();
        for &stage in stages {
            if manifest.is_current(stage.name(), &self.config_hash, out) {
                outcomes.push((stage, Outcome::UpToDate));
                continue;
            }
            manifest.stages.remove(stage.name());
            let start = Instant::now();
            let mut ctx = StageContext {
                cfg: &self.config,
                out,
                resume: self.resume,
                written: BTreeSet::new(),
            };
            match stage {
                Stage::Spectrum => stages::spectrum::run(&mut ctx),
                Stage::Classical => stages::classical::run(&mut ctx),
                Stage::Stats => stages::stats::run(&mut ctx),
                Stage::Husimi => stages::husimi::run(&mut ctx),
                Stage::Mixed => stages::mixed::run(&mut ctx),
            }
            .inspect_err(|_| {
                let _ = manifest.save(out);
            })?;
            let seconds = start.elapsed().as_secs_f64();
            let files = ctx.written.iter().map(|rel| file_record(out, rel)).collect::<CliResult<Vec<_>>>()?;
            let n = files.len();
            manifest.record(stage.name(), &self.config_hash, seconds, files);
            manifest.save(out)?;
            outcomes.push((stage, Outcome::Ran { files: n, seconds }));
        }
        Ok(outcomes)
    }
}

/// Digest of the configuration without the settings that cannot change any artifact.
pub fn config_hash(cfg: &RunConfig) -> String {
    let mut c = cfg.clone();
    c.run.workers = 0;
    c.run.out = PathBuf::new();
    sha256_hex(serde_json::to_string(&c).expect("config serializes").as_bytes())
}
