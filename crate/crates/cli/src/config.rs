//! Settings shared by the subcommands, merged from flags, an optional JSON
//! file and defaults (in that order of precedence).

use std::path::Path;

use omog_core::{AlignOptions, Error, MaskRule, OnlineConfig, PriorPolicy, Result, StreamOptions};
use serde::Deserialize;

/// Contents of a `--config` file. Every field is optional.
#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub rank: Option<usize>,
    pub mog_k: Option<usize>,
    pub window: Option<usize>,
    pub rho: Option<f64>,
    pub inner_tol: Option<f64>,
    pub max_inner: Option<usize>,
    pub variance_floor: Option<f64>,
    pub prior_policy: Option<PriorPolicy>,
    pub subsample: Option<f64>,
    pub seed: Option<u64>,
    pub tv: Option<bool>,
    pub tv_threshold: Option<f64>,
    pub align: Option<bool>,
    pub align_tol: Option<f64>,
    pub align_max_iters: Option<usize>,
    pub experimental: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
    }
}

/// Model and stream flags as given on the command line.
#[derive(Clone, Debug, Default, clap::Args)]
pub struct ModelFlags {
    /// Background subspace rank
    #[arg(long)]
    pub rank: Option<usize>,
    /// Number of mixture components
    #[arg(long = "mog-k")]
    pub mog_k: Option<usize>,
    /// Prior window in frames for the mixture update
    #[arg(long)]
    pub window: Option<usize>,
    /// Subspace forgetting factor in (0, 1]
    #[arg(long)]
    pub rho: Option<f64>,
    /// Inner EM stopping tolerance
    #[arg(long = "inner-tol")]
    pub inner_tol: Option<f64>,
    /// Inner EM iteration cap
    #[arg(long = "max-inner")]
    pub max_inner: Option<usize>,
    /// Base RNG seed for pixel sub-sampling and warm-start padding
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON file with default settings (flags take precedence)
    #[arg(long)]
    pub config: Option<std::path::PathBuf>,
}

#[derive(Clone, Debug, Default, clap::Args)]
pub struct StreamFlags {
    /// Pixel sub-sampling rate in (0, 1]
    #[arg(long)]
    pub subsample: Option<f64>,
    /// Refine masks with TV denoising of the residual magnitude
    #[arg(long)]
    pub tv: bool,
    /// Estimate a per-frame affine transform before updating
    #[arg(long)]
    pub align: bool,
    /// Allow combinations that are not validated (alignment with sub-sampling)
    #[arg(long)]
    pub experimental: bool,
}

impl ModelFlags {
    pub fn file(&self) -> Result<FileConfig> {
        match &self.config {
            Some(p) => FileConfig::load(p),
            None => Ok(FileConfig::default()),
        }
    }

    /// Applies flag and file overrides on top of `base`.
    pub fn online_config(&self, file: &FileConfig, base: OnlineConfig) -> Result<OnlineConfig> {
        let cfg = OnlineConfig {
            rank: self.rank.or(file.rank).unwrap_or(base.rank),
            mog_components: self.mog_k.or(file.mog_k).unwrap_or(base.mog_components),
            window_frames: self.window.or(file.window).unwrap_or(base.window_frames),
            rho: self.rho.or(file.rho).unwrap_or(base.rho),
            inner_tol: self.inner_tol.or(file.inner_tol).unwrap_or(base.inner_tol),
            inner_max_iters: self.max_inner.or(file.max_inner).unwrap_or(base.inner_max_iters),
            variance_floor: file.variance_floor.unwrap_or(base.variance_floor),
            prior_policy: file.prior_policy.unwrap_or(base.prior_policy),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn seed(&self, file: &FileConfig) -> Option<u64> {
        self.seed.or(file.seed)
    }
}

impl StreamFlags {
    pub fn stream_options(&self, file: &FileConfig, masks: bool) -> Result<StreamOptions> {
        let align = (self.align || file.align.unwrap_or(false)).then(|| {
            let d = AlignOptions::default();
            AlignOptions {
                align_tol: file.align_tol.unwrap_or(d.align_tol),
                outer_max_iters: file.align_max_iters.unwrap_or(d.outer_max_iters),
                ..d
            }
        });
        let mask_rule = if self.tv || file.tv.unwrap_or(false) {
            MaskRule::Tv {
                threshold: file.tv_threshold,
            }
        } else {
            MaskRule::Argmax
        };
        let options = StreamOptions {
            align,
            subsample: self.subsample.or(file.subsample),
            masks,
            mask_rule,
            experimental: self.experimental || file.experimental.unwrap_or(false),
        };
        options.validate()?;
        Ok(options)
    }
}
