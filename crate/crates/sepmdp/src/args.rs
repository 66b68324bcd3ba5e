//! Parsers for the `--eps-grid` and `--policy` argument forms.

use std::fmt;
use std::str::FromStr;

use sepmdp_core::Policy;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// `log:A:B:K` (K points log-spaced from A to B) or `lin:A:B:K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum EpsGrid {
    Log { from: f64, to: f64, points: usize },
    Lin { from: f64, to: f64, points: usize },
}

impl EpsGrid {
    pub fn values(&self) -> Vec<f64> {
        match *self {
            Self::Lin { from, to, points } => spaced(points, from, to, |i, k| from + (to - from) * i as f64 / k),
            Self::Log { from, to, points } => {
                let (a, b) = (from.log10(), to.log10());
                spaced(points, from, to, |i, k| 10f64.powf(a + (b - a) * i as f64 / k))
            }
        }
    }
}

fn spaced(points: usize, from: f64, to: f64, at: impl Fn(usize, f64) -> f64) -> Vec<f64> {
    let k = points.saturating_sub(1).max(1) as f64;
    (0..points)
        .map(|i| match i {
            0 => from,
            _ if i + 1 == points => to,
            _ => at(i, k),
        })
        .collect()
}

impl FromStr for EpsGrid {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let bad = |why: &str| CliError::Usage(format!("invalid epsilon grid {s:?}: {why}"));
        let parts: Vec<&str> = s.split(':').collect();
        let [kind, from, to, points] = parts[..] else {
            return Err(bad("expected log:A:B:K or lin:A:B:K"));
        };
        let from: f64 = from.parse().map_err(|_| bad("A is not a number"))?;
        let to: f64 = to.parse().map_err(|_| bad("B is not a number"))?;
        let points: usize = points.parse().map_err(|_| bad("K is not a positive integer"))?;
        if points == 0 {
            return Err(bad("K must be at least 1"));
        }
        if !(from.is_finite() && to.is_finite() && from >= 0.0 && to >= from) {
            return Err(bad("need 0 <= A <= B"));
        }
        match kind {
            "lin" => Ok(Self::Lin { from, to, points }),
            "log" if from > 0.0 => Ok(Self::Log { from, to, points }),
            "log" => Err(bad("log grids need A > 0")),
            _ => Err(bad("kind must be log or lin")),
        }
    }
}

impl fmt::Display for EpsGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Log { from, to, points } => write!(f, "log:{from:e}:{to:e}:{points}"),
            Self::Lin { from, to, points } => write!(f, "lin:{from:e}:{to:e}:{points}"),
        }
    }
}

impl TryFrom<String> for EpsGrid {
    type Error = CliError;

    fn try_from(s: String) -> Result<Self, CliError> {
        s.parse()
    }
}

impl From<EpsGrid> for String {
    fn from(g: EpsGrid) -> String {
        g.to_string()
    }
}

/// `const:a` or an explicit comma-separated action list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PolicySpec {
    Constant(usize),
    Explicit(Vec<usize>),
}

impl PolicySpec {
    pub fn resolve(&self, n_states: usize, n_actions: usize) -> Result<Policy, CliError> {
        let actions = match self {
            Self::Constant(a) => vec![*a; n_states],
            Self::Explicit(list) => {
                if list.len() != n_states {
                    return Err(CliError::Usage(format!(
                        "policy lists {} actions but the model has {n_states} states",
                        list.len()
                    )));
                }
                list.clone()
            }
        };
        Policy::new(actions, n_actions)
            .map_err(|_| CliError::Usage(format!("policy uses an action outside 0..{n_actions}")))
    }
}

impl FromStr for PolicySpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let bad = || CliError::Usage(format!("invalid policy {s:?}: expected const:A or a comma list"));
        if let Some(a) = s.strip_prefix("const:") {
            return a.trim().parse().map(Self::Constant).map_err(|_| bad());
        }
        s.split(',')
            .map(|x| x.trim().parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map(Self::Explicit)
            .map_err(|_| bad())
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(a) => write!(f, "const:{a}"),
            Self::Explicit(list) => {
                let parts: Vec<String> = list.iter().map(ToString::to_string).collect();
                f.write_str(&parts.join(","))
            }
        }
    }
}

impl TryFrom<String> for PolicySpec {
    type Error = CliError;

    fn try_from(s: String) -> Result<Self, CliError> {
        s.parse()
    }
}

impl From<PolicySpec> for String {
    fn from(p: PolicySpec) -> String {
        p.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_grid_points() {
        let g: EpsGrid = "log:1e-4:1e-1:7".parse().unwrap();
        let v = g.values();
        assert_eq!(v.len(), 7);
        assert_eq!(v[0], 1e-4);
        assert_eq!(v[6], 1e-1);
        assert!((v[2] - 1e-3).abs() < 1e-18);
        assert!(v.windows(2).all(|w| (w[1] / w[0] - 10f64.sqrt()).abs() < 1e-12));
    }

    #[test]
    fn lin_grid_points() {
        let v = "lin:0:0.1:5".parse::<EpsGrid>().unwrap().values();
        assert_eq!(v, vec![0.0, 0.025, 0.05, 0.07500000000000001, 0.1]);
        assert_eq!("lin:0.2:0.2:1".parse::<EpsGrid>().unwrap().values(), vec![0.2]);
    }

    #[test]
    fn bad_grids() {
        for s in [
            "log:0:1:3",
            "lin:1:0:3",
            "cube:1:2:3",
            "log:1e-3:1e-2",
            "lin:0:1:0",
            "lin:a:1:2",
        ] {
            assert!(s.parse::<EpsGrid>().is_err(), "{s}");
        }
    }

    #[test]
    fn grid_display_reparses() {
        let g: EpsGrid = "log:1e-4:1e-2:5".parse().unwrap();
        assert_eq!(g.to_string().parse::<EpsGrid>().unwrap(), g);
    }

    #[test]
    fn policy_forms() {
        let c: PolicySpec = "const:0".parse().unwrap();
        assert_eq!(c.resolve(3, 2).unwrap().actions(), &[0, 0, 0]);
        let e: PolicySpec = "0,1,0".parse().unwrap();
        assert_eq!(e.resolve(3, 2).unwrap().actions(), &[0, 1, 0]);
        assert!(e.resolve(2, 2).is_err());
        assert!("const:2".parse::<PolicySpec>().unwrap().resolve(3, 2).is_err());
        assert!("x,1".parse::<PolicySpec>().is_err());
    }
}
