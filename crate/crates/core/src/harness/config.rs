use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::learning::LearningConfig;
use crate::patterns::ModelSpec;
use crate::recall::{RecallConfig, RecallVariant};

/// Everything that determines an experiment. Text form is flat
/// `key = value` lines; `#` starts a comment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: String,
    pub n: usize,
    pub k: usize,
    pub q: u32,
    pub gamma: u32,
    pub upsilon: u32,
    pub dstar: usize,
    pub c_sample: usize,
    pub alpha0: f64,
    pub eta: f64,
    pub theta0: f64,
    pub epsilon: f64,
    pub max_passes: usize,
    pub phi: f64,
    pub tmax_factor: usize,
    pub variant: RecallVariant,
    /// constraint tolerance during recall; `None` means `sqrt(epsilon)`
    pub zero_tol: Option<f64>,
    pub trials: usize,
    pub error_counts: Vec<usize>,
    pub ensemble_size: usize,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            scenario: String::new(),
            n: 100,
            k: 50,
            q: 11,
            gamma: 2,
            upsilon: 2,
            dstar: 10,
            c_sample: 20_000,
            alpha0: 0.95,
            eta: 0.45,
            theta0: 0.0003,
            epsilon: 1e-3,
            max_passes: 100,
            phi: 1.0,
            tmax_factor: 20,
            variant: RecallVariant::Mv,
            zero_tol: None,
            trials: 200,
            error_counts: vec![1, 2, 3, 4, 5],
            ensemble_size: 5,
            seed: 0,
        }
    }
}

fn parse_value<T: FromStr>(line: usize, key: &str, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse()
        .map_err(|e| Error::parse(line, format!("{key} = {v:?}: {e}")))
}

impl ExperimentConfig {
    /// Parses config text on top of the defaults. Unknown keys are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(line_no, format!("expected `key = value`, got {line:?}")))?;
            cfg.set(line_no, key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, line: usize, key: &str, v: &str) -> Result<()> {
        match key {
            "scenario" => self.scenario = v.to_string(),
            "n" => self.n = parse_value(line, key, v)?,
            "k" => self.k = parse_value(line, key, v)?,
            "Q" | "q" => self.q = parse_value(line, key, v)?,
            "gamma" => self.gamma = parse_value(line, key, v)?,
            "upsilon" => self.upsilon = parse_value(line, key, v)?,
            "dstar" => self.dstar = parse_value(line, key, v)?,
            "C_sample" | "c_sample" => self.c_sample = parse_value(line, key, v)?,
            "alpha0" => self.alpha0 = parse_value(line, key, v)?,
            "eta" => self.eta = parse_value(line, key, v)?,
            "theta0" => self.theta0 = parse_value(line, key, v)?,
            "epsilon" => self.epsilon = parse_value(line, key, v)?,
            "max_passes" => self.max_passes = parse_value(line, key, v)?,
            "phi" => self.phi = parse_value(line, key, v)?,
            "tmax_factor" => self.tmax_factor = parse_value(line, key, v)?,
            "variant" => self.variant = RecallVariant::parse(v).map_err(|e| Error::parse(line, e.to_string()))?,
            "zero_tol" => {
                self.zero_tol = match v {
                    "auto" => None,
                    _ => Some(parse_value(line, key, v)?),
                }
            }
            "trials" => self.trials = parse_value(line, key, v)?,
            "error_counts" => {
                self.error_counts = v
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| parse_value(line, key, s))
                    .collect::<Result<_>>()?
            }
            "ensemble_size" => self.ensemble_size = parse_value(line, key, v)?,
            "seed" => self.seed = parse_value(line, key, v)?,
            other => return Err(Error::parse(line, format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Re-runs every module-level check.
    pub fn validate(&self) -> Result<()> {
        let spec = self.spec()?;
        if self.gamma < 2 || self.upsilon < 1 || self.dstar < 1 {
            return Err(Error::Config("need gamma >= 2, upsilon >= 1, dstar >= 1".into()));
        }
        if self.c_sample == 0 {
            return Err(Error::Config("C_sample must be at least 1".into()));
        }
        self.learning()?.validate()?;
        self.recall(1).validate()?;
        if self.tmax_factor == 0 {
            return Err(Error::Config("tmax_factor must be at least 1".into()));
        }
        if self.ensemble_size == 0 {
            return Err(Error::Config("ensemble_size must be at least 1".into()));
        }
        if let Some(&e) = self.error_counts.iter().find(|&&e| e > spec.n) {
            return Err(Error::Config(format!("error count {e} exceeds n={}", spec.n)));
        }
        Ok(())
    }

    pub fn spec(&self) -> Result<ModelSpec> {
        ModelSpec::new(self.q, self.n, self.k)
    }

    pub fn learning(&self) -> Result<LearningConfig> {
        Ok(LearningConfig {
            alpha0: self.alpha0,
            eta: self.eta,
            theta0: self.theta0,
            epsilon: self.epsilon,
            max_passes: self.max_passes,
            m: self.spec()?.m(),
        })
    }

    pub fn zero_tol(&self) -> f64 {
        self.zero_tol.unwrap_or_else(|| self.epsilon.sqrt())
    }

    /// Recall settings for `e0` initial errors.
    pub fn recall(&self, e0: usize) -> RecallConfig {
        RecallConfig {
            phi: self.phi,
            tmax: crate::recall::tmax_for(e0, self.tmax_factor),
            variant: self.variant,
            zero_tol: self.zero_tol(),
        }
    }

    /// The scenario label: the configured name or one built from the
    /// parameters.
    pub fn scenario_name(&self) -> String {
        if self.scenario.is_empty() {
            format!("n{}_k{}_{}", self.n, self.k, self.variant.name())
        } else {
            self.scenario.clone()
        }
    }

    /// Canonical text form with every key resolved. Parsing it yields the
    /// same config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("scenario", self.scenario_name());
        kv("n", self.n.to_string());
        kv("k", self.k.to_string());
        kv("Q", self.q.to_string());
        kv("gamma", self.gamma.to_string());
        kv("upsilon", self.upsilon.to_string());
        kv("dstar", self.dstar.to_string());
        kv("C_sample", self.c_sample.to_string());
        kv("alpha0", self.alpha0.to_string());
        kv("eta", self.eta.to_string());
        kv("theta0", self.theta0.to_string());
        kv("epsilon", self.epsilon.to_string());
        kv("max_passes", self.max_passes.to_string());
        kv("phi", self.phi.to_string());
        kv("tmax_factor", self.tmax_factor.to_string());
        kv("variant", self.variant.name().to_string());
        kv("zero_tol", self.zero_tol.map_or_else(|| "auto".to_string(), |v| v.to_string()));
        kv("trials", self.trials.to_string());
        let counts: Vec<String> = self.error_counts.iter().map(ToString::to_string).collect();
        kv("error_counts", counts.join(","));
        kv("ensemble_size", self.ensemble_size.to_string());
        kv("seed", self.seed.to_string());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_echoes() {
        let text = "# desk run\nn = 40\nk = 20 # half\nvariant = wta\nerror_counts = 1, 3\nseed = 9\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!((cfg.n, cfg.k, cfg.seed), (40, 20, 9));
        assert_eq!(cfg.variant, RecallVariant::Wta);
        assert_eq!(cfg.error_counts, vec![1, 3]);
        assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), ExperimentConfig {
            scenario: "n40_k20_wta".into(),
            ..cfg
        });
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::parse("bogus = 1").is_err());
        assert!(ExperimentConfig::parse("n 40").is_err());
        assert!(ExperimentConfig::parse("k = 0").is_err());
        assert!(ExperimentConfig::parse("alpha0 = 0.95\neta = 1").is_err());
        assert!(ExperimentConfig::parse("phi = 1.5").is_err());
        assert!(ExperimentConfig::parse("error_counts = 1, 500").is_err());
    }
}
