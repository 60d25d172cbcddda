use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};

/// Initial-data families with controlled right tails.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DataProfile {
    /// `A e^{−(x−c)²/(2σ²)}`.
    Gaussian { amp: f64, sigma: f64, center: f64 },
    /// `A sech²((x−c)/w)`; exponential right tail.
    Sech2 { amp: f64, width: f64, center: f64 },
    /// Gaussian times the `C^∞` bump `e^{1 − 1/(1−s²)}`, `s = (x−c)/W`;
    /// supported in `|x − c| < W`.
    Bump {
        amp: f64,
        sigma: f64,
        center: f64,
        half_width: f64,
    },
    /// `A e^{−βx − x²/(2s²)} cos(βx)`: `e^{βx}u` concentrates at `|k| = β`.
    KatoProbe { amp: f64, beta: f64, s: f64 },
}

impl DataProfile {
    pub fn gaussian(amp: f64, sigma: f64) -> Self {
        DataProfile::Gaussian {
            amp,
            sigma,
            center: 0.0,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            DataProfile::Gaussian { amp, sigma, center } => {
                let y = (x - center) / sigma;
                amp * (-0.5 * y * y).exp()
            }
            DataProfile::Sech2 { amp, width, center } => {
                let c = ((x - center) / width).cosh();
                amp / (c * c)
            }
            DataProfile::Bump {
                amp,
                sigma,
                center,
                half_width,
            } => {
                let s = (x - center) / half_width;
                if s.abs() >= 1.0 {
                    return 0.0;
                }
                let y = (x - center) / sigma;
                amp * (1.0 - 1.0 / (1.0 - s * s) - 0.5 * y * y).exp()
            }
            DataProfile::KatoProbe { amp, beta, s } => {
                amp * (-beta * x - x * x / (2.0 * s * s)).exp() * (beta * x).cos()
            }
        }
    }

    /// Upper bound for `sup |u₀|`.
    pub fn amplitude(&self) -> f64 {
        match *self {
            DataProfile::Gaussian { amp, .. }
            | DataProfile::Sech2 { amp, .. }
            | DataProfile::Bump { amp, .. } => amp.abs(),
            DataProfile::KatoProbe { amp, beta, s } => {
                // e^{−βx − x²/(2s²)} peaks at x = −βs²
                amp.abs() * (0.5 * beta * beta * s * s).exp()
            }
        }
    }

    /// Whether `∫ e^{a x₊^{5/4}} u₀² dx < ∞` for every `a > 0`.
    pub fn right_tail_admissible(&self) -> bool {
        !matches!(self, DataProfile::Sech2 { .. })
    }

    fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(name, format!("{v} must be positive")))
            }
        };
        match *self {
            DataProfile::Gaussian { sigma, .. } => positive("sigma", sigma),
            DataProfile::Sech2 { width, .. } => positive("width", width),
            DataProfile::Bump {
                sigma, half_width, ..
            } => positive("sigma", sigma).and(positive("half_width", half_width)),
            DataProfile::KatoProbe { beta, s, .. } => positive("beta", beta).and(positive("s", s)),
        }
    }
}

impl fmt::Display for DataProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            DataProfile::Gaussian { amp, sigma, center } => {
                write!(f, "gaussian:amp={amp},sigma={sigma},center={center}")
            }
            DataProfile::Sech2 { amp, width, center } => {
                write!(f, "sech2:amp={amp},width={width},center={center}")
            }
            DataProfile::Bump {
                amp,
                sigma,
                center,
                half_width,
            } => write!(
                f,
                "bump:amp={amp},sigma={sigma},center={center},half_width={half_width}"
            ),
            DataProfile::KatoProbe { amp, beta, s } => {
                write!(f, "kato_probe:amp={amp},beta={beta},s={s}")
            }
        }
    }
}

impl FromStr for DataProfile {
    type Err = Error;

    /// Parses `kind:key=value,...`; omitted keys take the defaults
    /// `amp = 0.01`, `sigma = 3`, `center = 0`, `width = 3`,
    /// `half_width = 8σ`, `beta = 0.3`, `s = 4`.
    fn from_str(text: &str) -> Result<Self> {
        let (kind, rest) = text.split_once(':').unwrap_or((text, ""));
        let mut get = std::collections::HashMap::new();
        for part in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| invalid("data", format!("expected key=value, got `{part}`")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|e| invalid("data", format!("`{part}`: {e}")))?;
            get.insert(k.trim().to_string(), v);
        }
        let allowed: &[&str] = match kind.trim() {
            "gaussian" => &["amp", "sigma", "center"],
            "sech2" => &["amp", "width", "center"],
            "bump" => &["amp", "sigma", "center", "half_width"],
            "kato_probe" => &["amp", "beta", "s"],
            other => return Err(invalid("data", format!("unknown profile `{other}`"))),
        };
        if let Some(k) = get.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(invalid("data", format!("unknown key `{k}` for `{kind}`")));
        }
        let val = |k: &str, d: f64| get.get(k).copied().unwrap_or(d);
        let p = match kind.trim() {
            "gaussian" => DataProfile::Gaussian {
                amp: val("amp", 0.01),
                sigma: val("sigma", 3.0),
                center: val("center", 0.0),
            },
            "sech2" => DataProfile::Sech2 {
                amp: val("amp", 0.01),
                width: val("width", 3.0),
                center: val("center", 0.0),
            },
            "bump" => {
                let sigma = val("sigma", 3.0);
                DataProfile::Bump {
                    amp: val("amp", 0.01),
                    sigma,
                    center: val("center", 0.0),
                    half_width: val("half_width", 8.0 * sigma),
                }
            }
            _ => DataProfile::KatoProbe {
                amp: val("amp", 0.01),
                beta: val("beta", 0.3),
                s: val("s", 4.0),
            },
        };
        p.validate()?;
        Ok(p)
    }
}

/// A sum of profiles, written `p₁ + p₂ + …`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub terms: Vec<DataProfile>,
}

impl InitialData {
    pub fn eval(&self, x: f64) -> f64 {
        self.terms.iter().map(|p| p.eval(x)).sum()
    }

    /// Upper bound for `sup |u₀|`.
    pub fn amplitude(&self) -> f64 {
        self.terms.iter().map(DataProfile::amplitude).sum()
    }

    pub fn right_tail_admissible(&self) -> bool {
        self.terms.iter().all(DataProfile::right_tail_admissible)
    }

    /// `self + other`.
    pub fn plus(&self, other: DataProfile) -> Self {
        let mut terms = self.terms.clone();
        terms.push(other);
        InitialData { terms }
    }
}

impl From<DataProfile> for InitialData {
    fn from(p: DataProfile) -> Self {
        InitialData { terms: vec![p] }
    }
}

impl fmt::Display for InitialData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

impl FromStr for InitialData {
    type Err = Error;

    /// Splits on `+` signs that start a new profile name.
    fn from_str(text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        let mut start = 0;
        for (i, c) in text.char_indices() {
            if c == '+' && text[i + 1..].trim_start().starts_with(|c: char| c.is_ascii_alphabetic()) {
                terms.push(text[start..i].trim().parse()?);
                start = i + 1;
            }
        }
        terms.push(text[start..].trim().parse()?);
        Ok(InitialData { terms })
    }
}
