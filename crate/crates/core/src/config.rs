//! Flat `key = value` tracker configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Recognized keys:
//! `k`, `lambda_w`, `w0`, `feature_region_scale`, `saliency_region_scale`,
//! `weight_rule`, `eta_feat`, `eta_sal`, `lambda_reg`, `cell_size`,
//! `saliency_provider`. Missing keys keep their defaults.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fusion::FusionConfig;

pub fn parse_config(text: &str) -> Result<FusionConfig> {
    let mut cfg = FusionConfig::default();
    let mut seen = HashSet::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key=value", n + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        if !seen.insert(key.to_string()) {
            return Err(Error::Config(format!(
                "line {}: duplicate key {key}",
                n + 1
            )));
        }
        let bad = |e: &dyn std::fmt::Display| {
            Error::Config(format!("line {}: {key} = {value:?}: {e}", n + 1))
        };
        let real = || value.parse::<f64>().map_err(|e| bad(&e));
        match key {
            "k" => cfg.k = real()?,
            "lambda_w" => cfg.lambda_w = real()?,
            "w0" => cfg.w0 = real()?,
            "feature_region_scale" => cfg.feature_region_scale = real()?,
            "saliency_region_scale" => cfg.saliency_region_scale = real()?,
            "eta_feat" => cfg.eta_feat = real()?,
            "eta_sal" => cfg.eta_sal = real()?,
            "lambda_reg" => cfg.lambda_reg = real()?,
            "cell_size" => cfg.cell_size = value.parse().map_err(|e| bad(&e))?,
            "weight_rule" => cfg.weight_rule = value.parse()?,
            "saliency_provider" => cfg.saliency_provider = value.parse()?,
            other => {
                return Err(Error::Config(format!(
                    "line {}: unknown key {other}",
                    n + 1
                )))
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn read_config(path: &Path) -> Result<FusionConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

impl FusionConfig {
    /// Canonical file form; parsing it back yields the same config.
    pub fn to_kv_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "k = {:?}", self.k);
        let _ = writeln!(s, "lambda_w = {:?}", self.lambda_w);
        let _ = writeln!(s, "w0 = {:?}", self.w0);
        let _ = writeln!(s, "feature_region_scale = {:?}", self.feature_region_scale);
        let _ = writeln!(
            s,
            "saliency_region_scale = {:?}",
            self.saliency_region_scale
        );
        let _ = writeln!(s, "weight_rule = {}", self.weight_rule.as_str());
        let _ = writeln!(s, "eta_feat = {:?}", self.eta_feat);
        let _ = writeln!(s, "eta_sal = {:?}", self.eta_sal);
        let _ = writeln!(s, "lambda_reg = {:?}", self.lambda_reg);
        let _ = writeln!(s, "cell_size = {}", self.cell_size);
        let _ = writeln!(s, "saliency_provider = {}", self.saliency_provider.as_str());
        s
    }

    /// SHA-256 of the canonical form, hex encoded.
    pub fn hash_hex(&self) -> String {
        hex::encode(Sha256::digest(self.to_kv_string().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::{SaliencySource, WeightRule};

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(
            parse_config("# nothing\n\n").unwrap(),
            FusionConfig::default()
        );
    }

    #[test]
    fn parses_every_key() {
        let text = "k=0.5\nlambda_w = 0.1\nw0=0.2\nfeature_region_scale=3\nsaliency_region_scale=1.2\n\
                    weight_rule=capped-ema\neta_feat=0.05\neta_sal=0.03\nlambda_reg=0.001\ncell_size=8\n\
                    saliency_provider=precomputed\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.k, 0.5);
        assert_eq!(cfg.lambda_w, 0.1);
        assert_eq!(cfg.w0, 0.2);
        assert_eq!(cfg.feature_region_scale, 3.0);
        assert_eq!(cfg.saliency_region_scale, 1.2);
        assert_eq!(cfg.weight_rule, WeightRule::CappedEma);
        assert_eq!(cfg.eta_feat, 0.05);
        assert_eq!(cfg.eta_sal, 0.03);
        assert_eq!(cfg.lambda_reg, 0.001);
        assert_eq!(cfg.cell_size, 8);
        assert_eq!(cfg.saliency_provider, SaliencySource::Precomputed);
    }

    #[test]
    fn canonical_form_round_trips() {
        let cfg = parse_config("k = 0.3\nw0 = 0.1\nweight_rule = capped-ema\n").unwrap();
        assert_eq!(parse_config(&cfg.to_kv_string()).unwrap(), cfg);
        assert_eq!(cfg.hash_hex().len(), 64);
        assert_ne!(cfg.hash_hex(), FusionConfig::default().hash_hex());
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "bogus = 1",
            "k",
            "k = abc",
            "k = 0.2\nk = 0.3",
            "w0 = 0.5",
            "weight_rule = sometimes",
        ] {
            assert!(
                matches!(parse_config(text), Err(Error::Config(_))),
                "{text}"
            );
        }
    }
}
