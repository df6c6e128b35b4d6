//! Plain-text `key=value` run configuration.

use std::fmt::Write as _;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use implicit_filter::filter::{FilterConfig, LossCombo};
use implicit_filter::trainer::TrainConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    F32,
    F64,
}

impl FromStr for Precision {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f32" => Ok(Precision::F32),
            "f64" => Ok(Precision::F64),
            _ => bail!("precision must be f32 or f64, got `{s}`"),
        }
    }
}

impl std::fmt::Display for Precision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Precision::F32 => "f32",
            Precision::F64 => "f64",
        })
    }
}

/// Everything a training run depends on besides the input file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub filter: FilterConfig,
    pub train: TrainConfig,
    pub precision: Precision,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            filter: FilterConfig::default(),
            train: TrainConfig::default(),
            precision: Precision::F32,
        }
    }
}

/// Keys a manifest carries in addition to the configuration.
pub const MANIFEST_KEYS: &[&str] = &[
    "tool_version",
    "command",
    "input",
    "input_sha256",
    "deterministic",
    "threads",
    "resolution",
    "bound",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| anyhow!("invalid value `{value}` for `{key}`: {e}"))
}

impl RunConfig {
    /// Sets one key. `loss` rewrites the term weights, so it is applied
    /// before any explicit weight by [`RunConfig::apply_text`].
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let f = &mut self.filter;
        let t = &mut self.train;
        match key {
            "loss" => f.apply_combo(parse::<LossCombo>(key, value)?),
            "sigma_n_deg" => f.sigma_n_deg = parse(key, value)?,
            "sigma_p_policy" => f.sigma_p_policy = parse(key, value)?,
            "k_filter" => f.k_filter = parse(key, value)?,
            "zero_weight" => f.zero_weight = parse(key, value)?,
            "alpha1" => f.alpha1 = parse(key, value)?,
            "alpha2" => f.alpha2 = parse(key, value)?,
            "alpha3" => f.alpha3 = parse(key, value)?,
            "constraint" => f.constraint = parse(key, value)?,
            "eikonal_weight" => f.eikonal_weight = parse(key, value)?,
            "weight_floor" => f.weight_floor = parse(key, value)?,
            "filter_kind" => f.kind = parse(key, value)?,
            "per_point" => t.sampling.per_point = parse(key, value)?,
            "sigma_k" => t.sampling.sigma_k = parse(key, value)?,
            "k_neighbors" => t.sampling.k_neighbors = parse(key, value)?,
            "seed" => t.seed = parse(key, value)?,
            "iterations" => t.iterations = parse(key, value)?,
            "learning_rate" => t.learning_rate = parse(key, value)?,
            "adam_beta1" => t.adam_betas.0 = parse(key, value)?,
            "adam_beta2" => t.adam_betas.1 = parse(key, value)?,
            "warmup" => t.warmup = parse(key, value)?,
            "batch_queries" => t.batch_queries = parse(key, value)?,
            "checkpoint_every" => t.checkpoint_every = parse(key, value)?,
            "hidden" => {
                t.net.hidden = value
                    .split(',')
                    .map(|w| parse::<usize>(key, w.trim()))
                    .collect::<Result<_>>()?
            }
            "skip" => {
                t.net.skip = match value {
                    "none" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "softplus_beta" => t.net.beta = parse(key, value)?,
            "init_radius" => t.net.radius = parse(key, value)?,
            "precision" => self.precision = parse(key, value)?,
            k if MANIFEST_KEYS.contains(&k) => {}
            _ => bail!("unknown configuration key `{key}`"),
        }
        Ok(())
    }

    /// Applies `key=value` lines. Blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut pairs = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key=value, got `{line}`", n + 1))?;
            pairs.push((n + 1, k.trim().to_string(), v.trim().to_string()));
        }
        pairs.sort_by_key(|(_, k, _)| k != "loss");
        for (n, k, v) in pairs {
            self.set(&k, &v).with_context(|| format!("line {n}"))?;
        }
        Ok(())
    }

    pub fn apply_override(&mut self, kv: &str) -> Result<()> {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| anyhow!("override `{kv}` is not key=value"))?;
        self.set(k.trim(), v.trim())
    }

    pub fn validate(&self) -> Result<()> {
        self.filter.validate()?;
        self.train.validate()?;
        Ok(())
    }

    /// All keys with their resolved values, in a fixed order.
    pub fn to_text(&self) -> String {
        let f = &self.filter;
        let t = &self.train;
        let hidden: Vec<String> = t.net.hidden.iter().map(|w| w.to_string()).collect();
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        kv("precision", self.precision.to_string());
        kv("hidden", hidden.join(","));
        kv("skip", t.net.skip.map_or("none".into(), |v| v.to_string()));
        kv("softplus_beta", t.net.beta.to_string());
        kv("init_radius", t.net.radius.to_string());
        kv("filter_kind", f.kind.to_string());
        kv("sigma_n_deg", f.sigma_n_deg.to_string());
        kv("sigma_p_policy", f.sigma_p_policy.to_string());
        kv("k_filter", f.k_filter.to_string());
        kv("zero_weight", f.zero_weight.to_string());
        kv("alpha1", f.alpha1.to_string());
        kv("alpha2", f.alpha2.to_string());
        kv("alpha3", f.alpha3.to_string());
        kv("constraint", f.constraint.to_string());
        kv("eikonal_weight", f.eikonal_weight.to_string());
        kv("weight_floor", f.weight_floor.to_string());
        kv("per_point", t.sampling.per_point.to_string());
        kv("sigma_k", t.sampling.sigma_k.to_string());
        kv("k_neighbors", t.sampling.k_neighbors.to_string());
        kv("seed", t.seed.to_string());
        kv("iterations", t.iterations.to_string());
        kv("learning_rate", t.learning_rate.to_string());
        kv("adam_beta1", t.adam_betas.0.to_string());
        kv("adam_beta2", t.adam_betas.1.to_string());
        kv("warmup", t.warmup.to_string());
        kv("batch_queries", t.batch_queries.to_string());
        kv("checkpoint_every", t.checkpoint_every.to_string());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use implicit_filter::filter::{Constraint, SigmaPolicy};

    #[test]
    fn text_round_trip() {
        let mut c = RunConfig::default();
        c.apply_text("alpha3 = 5\nsigma_p_policy=diagonal # comment\n\nhidden=32,32\nskip=none\nconstraint=pull\n")
            .unwrap();
        assert_eq!(c.filter.alpha3, 5.0);
        assert_eq!(c.filter.sigma_p_policy, SigmaPolicy::PatchDiagonal);
        assert_eq!(c.filter.constraint, Constraint::Pull);
        assert_eq!(c.train.net.hidden, vec![32, 32]);
        let mut d = RunConfig::default();
        d.apply_text(&c.to_text()).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn loss_combo_is_applied_before_weights() {
        let mut c = RunConfig::default();
        c.apply_text("alpha1=0.5\nloss=cd+zero\n").unwrap();
        assert_eq!((c.filter.zero_weight, c.filter.alpha1, c.filter.alpha2), (1.0, 0.5, 0.0));
    }

    #[test]
    fn bad_input_is_reported() {
        let mut c = RunConfig::default();
        assert!(c.apply_text("alpha3").is_err());
        assert!(c.apply_text("colour=blue").is_err());
        assert!(c.apply_text("k_filter=many").is_err());
        c.apply_text("alpha3=-1").unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn manifest_metadata_is_ignored() {
        let mut c = RunConfig::default();
        c.apply_text("tool_version=0.1.0\ninput_sha256=ab\nseed=4\n").unwrap();
        assert_eq!(c.train.seed, 4);
    }
}
