//! Flat `key: value` run configuration.
//!
//! One setting per line, `#` starts a comment, no nesting. Unknown keys are
//! rejected rather than silently ignored, so typos surface immediately.

use std::fmt;
use std::path::Path;

use dotprobe::num_complex::Complex;
use dotprobe::{ErrorMode, QubitState, SystemParams};

/// Validated run configuration with defaults applied.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub params: SystemParams<f64>,
    pub q0: QubitState<f64>,
    pub t_max: f64,
    pub n_out: usize,
    pub n_max_override: Option<usize>,
    pub tail_eps: f64,
    pub dt_lo: f64,
    pub dt_hi: f64,
    pub error_mode: ErrorMode,
}

/// Configuration failure with enough context to fix the file.
#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Io(String),
    /// line number, line content
    Malformed(usize, String),
    /// line number, key
    UnknownKey(usize, String),
    /// line number, key, parse detail
    BadValue(usize, String, String),
    /// key appeared twice
    DuplicateKey(usize, String),
    MissingKey(&'static str),
    Invalid(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io(e) => write!(f, "cannot read config: {e}"),
            ConfigError::Malformed(n, line) => {
                write!(f, "line {n}: expected `key: value`, got `{line}`")
            }
            ConfigError::UnknownKey(n, key) => write!(f, "line {n}: unknown key `{key}`"),
            ConfigError::BadValue(n, key, detail) => {
                write!(f, "line {n}: bad value for `{key}`: {detail}")
            }
            ConfigError::DuplicateKey(n, key) => write!(f, "line {n}: duplicate key `{key}`"),
            ConfigError::MissingKey(key) => write!(f, "missing required key `{key}`"),
            ConfigError::Invalid(detail) => write!(f, "invalid configuration: {detail}"),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Default)]
struct RawConfig {
    omega: Option<f64>,
    epsilon: Option<f64>,
    d1: Option<f64>,
    d2: Option<f64>,
    sigma11_0: Option<f64>,
    re_sigma12_0: Option<f64>,
    im_sigma12_0: Option<f64>,
    t_max: Option<f64>,
    n_out: Option<usize>,
    n_max_override: Option<usize>,
    tail_eps: Option<f64>,
    dt_lo: Option<f64>,
    dt_hi: Option<f64>,
    error_mode: Option<ErrorMode>,
}

fn parse_f64(n: usize, key: &str, v: &str) -> Result<f64, ConfigError> {
    v.parse::<f64>()
        .map_err(|e| ConfigError::BadValue(n, key.into(), e.to_string()))
}

fn parse_usize(n: usize, key: &str, v: &str) -> Result<usize, ConfigError> {
    v.parse::<usize>()
        .map_err(|e| ConfigError::BadValue(n, key.into(), e.to_string()))
}

/// Loads and validates a configuration file.
pub fn load_config(path: &Path) -> Result<SimConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(e.to_string()))?;
    parse_config(&text)
}

/// Parses configuration text. Required keys: `omega`, `d1`, `d2`, `t_max`.
pub fn parse_config(text: &str) -> Result<SimConfig, ConfigError> {
    let mut raw = RawConfig::default();

    for (idx, full_line) in text.lines().enumerate() {
        let n = idx + 1;
        let line = match full_line.split_once('#') {
            Some((before, _)) => before,
            None => full_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once(':')
            .ok_or_else(|| ConfigError::Malformed(n, line.to_string()))?;
        let key = key.trim();
        let value = value.trim();
        if value.is_empty() {
            return Err(ConfigError::Malformed(n, line.to_string()));
        }

        macro_rules! set {
            ($field:ident, $parsed:expr) => {{
                if raw.$field.is_some() {
                    return Err(ConfigError::DuplicateKey(n, key.into()));
                }
                raw.$field = Some($parsed);
            }};
        }

        match key {
            "omega" => set!(omega, parse_f64(n, key, value)?),
            "epsilon" => set!(epsilon, parse_f64(n, key, value)?),
            "d1" => set!(d1, parse_f64(n, key, value)?),
            "d2" => set!(d2, parse_f64(n, key, value)?),
            "sigma11_0" => set!(sigma11_0, parse_f64(n, key, value)?),
            "re_sigma12_0" => set!(re_sigma12_0, parse_f64(n, key, value)?),
            "im_sigma12_0" => set!(im_sigma12_0, parse_f64(n, key, value)?),
            "t_max" => set!(t_max, parse_f64(n, key, value)?),
            "n_out" => set!(n_out, parse_usize(n, key, value)?),
            "n_max_override" => set!(n_max_override, parse_usize(n, key, value)?),
            "tail_eps" => set!(tail_eps, parse_f64(n, key, value)?),
            "dt_lo" => set!(dt_lo, parse_f64(n, key, value)?),
            "dt_hi" => set!(dt_hi, parse_f64(n, key, value)?),
            "error_mode" => set!(
                error_mode,
                match value {
                    "asymptotic" => ErrorMode::Asymptotic,
                    "exact" => ErrorMode::Exact,
                    other => {
                        return Err(ConfigError::BadValue(
                            n,
                            key.into(),
                            format!("expected `asymptotic` or `exact`, got `{other}`"),
                        ))
                    }
                }
            ),
            other => return Err(ConfigError::UnknownKey(n, other.to_string())),
        }
    }

    let omega = raw.omega.ok_or(ConfigError::MissingKey("omega"))?;
    let d1 = raw.d1.ok_or(ConfigError::MissingKey("d1"))?;
    let d2 = raw.d2.ok_or(ConfigError::MissingKey("d2"))?;
    let t_max = raw.t_max.ok_or(ConfigError::MissingKey("t_max"))?;

    let params = SystemParams::new(omega, raw.epsilon.unwrap_or(0.0), d1, d2)
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;
    let q0 = QubitState::new(
        raw.sigma11_0.unwrap_or(1.0),
        Complex::new(
            raw.re_sigma12_0.unwrap_or(0.0),
            raw.im_sigma12_0.unwrap_or(0.0),
        ),
    )
    .map_err(|e| ConfigError::Invalid(e.to_string()))?;

    if !(t_max > 0.0) || !t_max.is_finite() {
        return Err(ConfigError::Invalid(format!(
            "t_max must be positive and finite, got {t_max}"
        )));
    }
    let n_out = raw.n_out.unwrap_or(201);
    if n_out < 2 {
        return Err(ConfigError::Invalid(format!(
            "n_out must be at least 2, got {n_out}"
        )));
    }
    let tail_eps = raw.tail_eps.unwrap_or(1e-12);
    if !(tail_eps > 0.0 && tail_eps <= 1e-6) {
        return Err(ConfigError::Invalid(format!(
            "tail_eps must lie in (0, 1e-6], got {tail_eps}"
        )));
    }
    let dt_lo = raw.dt_lo.unwrap_or(1e-3);
    let dt_hi = raw.dt_hi.unwrap_or(1e3);
    if !(dt_lo > 0.0 && dt_lo < dt_hi && dt_hi.is_finite()) {
        return Err(ConfigError::Invalid(format!(
            "need 0 < dt_lo < dt_hi, got dt_lo = {dt_lo}, dt_hi = {dt_hi}"
        )));
    }

    Ok(SimConfig {
        params,
        q0,
        t_max,
        n_out,
        n_max_override: raw.n_max_override,
        tail_eps,
        dt_lo,
        dt_hi,
        error_mode: raw.error_mode.unwrap_or(ErrorMode::Asymptotic),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_applied() {
        let cfg = parse_config("omega: 1\nd1: 26\nd2: 24\nt_max: 10\n").unwrap();
        assert_eq!(cfg.params.epsilon(), 0.0);
        assert_eq!(cfg.q0.sigma11(), 1.0);
        assert_eq!(cfg.n_out, 201);
        assert_eq!(cfg.tail_eps, 1e-12);
        assert_eq!(cfg.dt_lo, 1e-3);
        assert_eq!(cfg.dt_hi, 1e3);
        assert_eq!(cfg.error_mode, ErrorMode::Asymptotic);
    }

    #[test]
    fn missing_required_key_is_named() {
        let err = parse_config("omega: 1\nd2: 24\nt_max: 10\n").unwrap_err();
        assert_eq!(err, ConfigError::MissingKey("d1"));
    }

    #[test]
    fn rate_convention_violation_cites_rule() {
        let err = parse_config("omega: 1\nd1: 24\nd2: 26\nt_max: 10\n").unwrap_err();
        match err {
            ConfigError::Invalid(msg) => assert!(msg.contains("d1 must be >= d2"), "{msg}"),
            other => panic!("expected invalid-config, got {other:?}"),
        }
    }

    #[test]
    fn unknown_key_rejected_with_location() {
        let err = parse_config("omega: 1\nd1: 26\nd2: 24\nt_max: 10\nomga: 2\n").unwrap_err();
        assert_eq!(err, ConfigError::UnknownKey(5, "omga".into()));
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let cfg =
            parse_config("# run\n\nomega: 1 # coupling\nd1: 26\nd2: 24\nt_max: 2\n").unwrap();
        assert_eq!(cfg.params.omega(), 1.0);
        assert_eq!(cfg.t_max, 2.0);
    }

    #[test]
    fn duplicate_and_malformed_lines_rejected() {
        assert!(matches!(
            parse_config("omega: 1\nomega: 2\nd1: 26\nd2: 24\nt_max: 1\n").unwrap_err(),
            ConfigError::DuplicateKey(2, _)
        ));
        assert!(matches!(
            parse_config("omega 1\n").unwrap_err(),
            ConfigError::Malformed(1, _)
        ));
        assert!(matches!(
            parse_config("omega: abc\n").unwrap_err(),
            ConfigError::BadValue(1, _, _)
        ));
    }

    #[test]
    fn mode_and_overrides_parse() {
        let cfg = parse_config(
            "omega: 1\nd1: 26\nd2: 24\nt_max: 1\nerror_mode: exact\nn_max_override: 64\n\
             sigma11_0: 0.5\nim_sigma12_0: 0.25\n",
        )
        .unwrap();
        assert_eq!(cfg.error_mode, ErrorMode::Exact);
        assert_eq!(cfg.n_max_override, Some(64));
        assert_eq!(cfg.q0.sigma12().im, 0.25);
    }
}
