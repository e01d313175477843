//! TOML run description shared by `bench` and `simulate`.
//!
//! ```toml
//! n = 1600
//! reps = 500
//! m = 2
//! signal = "chakar"        # chakar | park | step | none
//! gamma1 = [0.0, 0.4]      # MA(1) errors, one benchmark per value
//! dist = "gaussian"        # gaussian | t4
//! estimators = ["O", "R"]
//! ```
//!
//! MA(m) errors are given by `theta` and `sigma2` instead of `gamma1`.

use dbacf::mafit::MaModel;
use dbacf::sim::{ErrorSpec, EstimatorCode, Ma1Spec, NoiseDist, SignalSpec};
use dbacf::StepSignal;
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalChoice {
    #[default]
    Chakar,
    Park,
    /// Custom step function from `taus` and `levels`.
    Step,
    /// Zero signal.
    None,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    pub reps: Option<usize>,
    pub m: Option<usize>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub signal: SignalChoice,
    pub taus: Option<Vec<f64>>,
    pub levels: Option<Vec<f64>>,
    pub gamma1: Option<OneOrMany>,
    #[serde(default)]
    pub dist: NoiseDist,
    /// Rescale t4 innovations of MA(1) errors to unit variance.
    #[serde(default)]
    pub standardized: bool,
    pub theta: Option<Vec<f64>>,
    pub sigma2: Option<f64>,
    pub estimators: Option<Vec<EstimatorCode>>,
}

impl RunConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| CliError::args(format!("config: {}", e.message())))?;
        if cfg.theta.is_some() && cfg.gamma1.is_some() {
            return Err(CliError::args("config: give either gamma1 or theta, not both"));
        }
        if cfg.sigma2.is_some() && cfg.theta.is_none() {
            return Err(CliError::args("config: sigma2 needs theta"));
        }
        if cfg.signal != SignalChoice::Step && (cfg.taus.is_some() || cfg.levels.is_some()) {
            return Err(CliError::args("config: taus and levels need signal = \"step\""));
        }
        Ok(cfg)
    }

    pub fn signal_spec(&self) -> CliResult<SignalSpec> {
        Ok(match self.signal {
            SignalChoice::Chakar => SignalSpec::Chakar,
            SignalChoice::Park => SignalSpec::Park,
            SignalChoice::None => SignalSpec::Custom(StepSignal::constant(0.0)?),
            SignalChoice::Step => {
                let (Some(t), Some(l)) = (&self.taus, &self.levels) else {
                    return Err(CliError::args("config: signal = \"step\" needs taus and levels"));
                };
                SignalSpec::Custom(StepSignal::new(t.clone(), l.clone())?)
            }
        })
    }

    /// One error process per `gamma1` value (default `0`), or the MA(m)
    /// process from `theta`.
    pub fn error_specs(&self) -> CliResult<Vec<ErrorSpec>> {
        if let Some(theta) = &self.theta {
            let model = MaModel::new(theta.clone(), self.sigma2.unwrap_or(1.0))?;
            return Ok(vec![ErrorSpec::Ma { model, dist: self.dist }]);
        }
        let values = match &self.gamma1 {
            None => vec![0.0],
            Some(OneOrMany::One(g)) => vec![*g],
            Some(OneOrMany::Many(v)) if v.is_empty() => {
                return Err(CliError::args("config: gamma1 list is empty"))
            }
            Some(OneOrMany::Many(v)) => v.clone(),
        };
        values
            .into_iter()
            .map(|g| {
                let mut s = Ma1Spec::new(g, self.dist)?;
                s.standardized = self.standardized;
                Ok(ErrorSpec::Ma1(s))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_config() {
        let c = RunConfig::parse(
            "n = 1600\nreps = 500\nm = 2\ngamma1 = [0.0, -0.4]\ndist = \"t4\"\nestimators = [\"O\", \"R\"]\n",
        )
        .unwrap();
        assert_eq!(c.signal, SignalChoice::Chakar);
        assert_eq!(c.estimators, Some(vec![EstimatorCode::O, EstimatorCode::R]));
        let e = c.error_specs().unwrap();
        assert_eq!(e.len(), 2);
        assert!(matches!(e[1], ErrorSpec::Ma1(s) if s.gamma1 == -0.4 && s.dist == NoiseDist::T4));
    }

    #[test]
    fn ma_and_step_config() {
        let c = RunConfig::parse(
            "n = 100\nsignal = \"step\"\ntaus = [0.5]\nlevels = [0, 2]\ntheta = [0.5, 0.2]\nsigma2 = 0.3\nseed = 20240601\n",
        )
        .unwrap();
        assert!(matches!(c.signal_spec().unwrap(), SignalSpec::Custom(_)));
        match &c.error_specs().unwrap()[0] {
            ErrorSpec::Ma { model, .. } => assert_eq!(model.sigma2, 0.3),
            other => panic!("{other:?}"),
        }
        assert_eq!(c.seed, Some(20_240_601));
    }

    #[test]
    fn rejects_bad_configs() {
        for bad in [
            "reps = 3",
            "n = 10\nbogus = 1",
            "n = 10\ngamma1 = 0.1\ntheta = [0.5]",
            "n = 10\ntaus = [0.5]",
            "n = 10\nsigma2 = 1.0",
            "n = 10\nestimators = [\"X\"]",
        ] {
            assert!(RunConfig::parse(bad).is_err(), "{bad}");
        }
        let c = RunConfig::parse("n = 10\ngamma1 = 0.9").unwrap();
        assert!(c.error_specs().is_err());
        let c = RunConfig::parse("n = 10\nsignal = \"step\"").unwrap();
        assert!(c.signal_spec().is_err());
    }
}
