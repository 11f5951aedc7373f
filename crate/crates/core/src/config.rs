//! Experiment configuration: a flat TOML table plus `--key value` overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Family, MAX_DEPTH};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Spectrum,
    IprPhase,
    IprCenter,
    Dynamics,
    LocalDecay,
    MaxDepth,
    Scattering,
    Classical,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::Spectrum,
        ExperimentKind::IprPhase,
        ExperimentKind::IprCenter,
        ExperimentKind::Dynamics,
        ExperimentKind::LocalDecay,
        ExperimentKind::MaxDepth,
        ExperimentKind::Scattering,
        ExperimentKind::Classical,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Spectrum => "spectrum",
            ExperimentKind::IprPhase => "ipr-phase",
            ExperimentKind::IprCenter => "ipr-center",
            ExperimentKind::Dynamics => "dynamics",
            ExperimentKind::LocalDecay => "local-decay",
            ExperimentKind::MaxDepth => "max-depth",
            ExperimentKind::Scattering => "scattering",
            ExperimentKind::Classical => "classical",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::config("kind", format!("unknown experiment `{s}`")))
    }
}

/// Upper bound on the number of points a grid may expand to.
pub const MAX_GRID_POINTS: usize = 1_000_000;

/// A list of values, written either as an explicit array or as an
/// inclusive `"start:stop:step"` range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub enum Grid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum GridRepr {
    List(Vec<f64>),
    Scalar(f64),
    Spec(String),
}

impl TryFrom<GridRepr> for Grid {
    type Error = String;

    fn try_from(r: GridRepr) -> std::result::Result<Self, String> {
        let g = match r {
            GridRepr::List(v) => Grid::List(v),
            GridRepr::Scalar(x) => Grid::List(vec![x]),
            GridRepr::Spec(s) => Grid::parse(&s)?,
        };
        g.check()?;
        Ok(g)
    }
}

impl From<Grid> for GridRepr {
    fn from(g: Grid) -> Self {
        match g {
            Grid::List(v) => GridRepr::List(v),
            Grid::Range { .. } => GridRepr::Spec(g.to_string()),
        }
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Grid::Range { start, stop, step } => write!(f, "{start:?}:{stop:?}:{step:?}"),
            Grid::List(v) => {
                let parts: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
                write!(f, "{}", parts.join(","))
            }
        }
    }
}

impl Grid {
    /// Parses `"start:stop:step"` or a comma-separated list.
    pub fn parse(s: &str) -> std::result::Result<Grid, String> {
        let s = s.trim();
        let num = |t: &str| -> std::result::Result<f64, String> {
            t.trim().parse::<f64>().map_err(|_| format!("`{}` is not a number", t.trim()))
        };
        let g = if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            if parts.len() != 3 {
                return Err(format!("range `{s}` must have the form start:stop:step"));
            }
            Grid::Range {
                start: num(parts[0])?,
                stop: num(parts[1])?,
                step: num(parts[2])?,
            }
        } else {
            Grid::List(s.split(',').map(num).collect::<std::result::Result<_, _>>()?)
        };
        g.check()?;
        Ok(g)
    }

    fn check(&self) -> std::result::Result<(), String> {
        match *self {
            Grid::List(ref v) => {
                if v.is_empty() {
                    return Err("grid is empty".into());
                }
                if v.len() > MAX_GRID_POINTS {
                    return Err(format!("grid has more than {MAX_GRID_POINTS} points"));
                }
                if let Some(x) = v.iter().find(|x| !x.is_finite()) {
                    return Err(format!("grid value {x} is not finite"));
                }
            }
            Grid::Range { start, stop, step } => {
                if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
                    return Err("range bounds must be finite".into());
                }
                if !(step > 0.0) {
                    return Err(format!("range step must be positive, got {step}"));
                }
                if stop < start {
                    return Err(format!("range stop {stop} is below start {start}"));
                }
                if (stop - start) / step >= MAX_GRID_POINTS as f64 {
                    return Err(format!("range expands to more than {MAX_GRID_POINTS} points"));
                }
            }
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        match *self {
            Grid::List(ref v) => v.clone(),
            Grid::Range { start, stop, step } => {
                let n = ((stop - start) / step + 1e-9).floor() as usize;
                (0..=n).map(|i| start + i as f64 * step).collect()
            }
        }
    }
}

/// A single value or a list, for per-depth counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Counts {
    One(usize),
    Many(Vec<usize>),
}

impl Counts {
    /// One count per depth; a single value is broadcast.
    pub fn per_depth(&self, depths: usize) -> std::result::Result<Vec<usize>, String> {
        match self {
            Counts::One(n) => Ok(vec![*n; depths]),
            Counts::Many(v) if v.len() == depths => Ok(v.clone()),
            Counts::Many(v) => Err(format!("{} counts given for {} depths", v.len(), depths)),
        }
    }
}

/// Every key is optional in the file; `kind` and `seed` must be supplied by
/// the file or an override.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<ExperimentKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Single depth.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depths: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub widths: Option<Grid>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub realizations: Option<Counts>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<Family>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// Energy-bin half-width of the phase diagram.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_e: Option<f64>,
    /// Band center as the middle `n` eigenstates by rank.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub band_rank: Option<usize>,
    /// Band center as the states with `|E| < band_window`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub band_window: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub times: Option<Grid>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start_column: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub momenta: Option<Grid>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_points: Option<usize>,
    /// Coefficients of the `T_0/(1 + cW²)` overlay.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_t0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

/// Keys accepted in files and as `--key` overrides.
pub const KEYS: &[&str] = &[
    "kind",
    "seed",
    "d",
    "depths",
    "widths",
    "realizations",
    "family",
    "gamma",
    "delta_e",
    "band_rank",
    "band_window",
    "times",
    "time_points",
    "start_column",
    "tol",
    "momenta",
    "k_points",
    "fit_t0",
    "fit_c",
    "output",
];

fn parse_value(raw: &str) -> toml::Value {
    if let Ok(mut t) = format!("v = {raw}").parse::<toml::Table>() {
        if let Some(v) = t.remove("v") {
            return v;
        }
    }
    if raw.contains(',') && !raw.contains(':') {
        let items: Vec<toml::Value> = raw.split(',').map(|p| parse_value(p.trim())).collect();
        return toml::Value::Array(items);
    }
    toml::Value::String(raw.to_string())
}

impl ExperimentConfig {
    /// Parses TOML text, naming the offending key on failure.
    pub fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::config("<file>", e.message().to_string()))?;
        Self::from_table(table)
    }

    fn from_table(table: toml::Table) -> Result<Self> {
        for (key, value) in &table {
            if !KEYS.contains(&key.as_str()) {
                return Err(Error::config(key.clone(), "unknown key"));
            }
            let mut single = toml::Table::new();
            single.insert(key.clone(), value.clone());
            toml::Value::Table(single)
                .try_into::<ExperimentConfig>()
                .map_err(|e| Error::config(key.clone(), e.message().trim().to_string()))?;
        }
        toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::config("<file>", e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Applies `(key, raw value)` overrides; dashes in keys become underscores.
    pub fn with_overrides<'a>(&self, overrides: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self> {
        let mut table = match toml::Value::try_from(self) {
            Ok(toml::Value::Table(t)) => t,
            Ok(_) => toml::Table::new(),
            Err(e) => return Err(Error::config("<config>", e.to_string())),
        };
        for (key, raw) in overrides {
            let key = key.trim_start_matches("--").replace('-', "_");
            if !KEYS.contains(&key.as_str()) {
                return Err(Error::config(key, "unknown key"));
            }
            let value = match parse_value(raw) {
                v @ toml::Value::Integer(_) if key == "depths" => toml::Value::Array(vec![v]),
                v => v,
            };
            table.insert(key, value);
        }
        Self::from_table(table)
    }

    /// Fails only for seeds above `i64::MAX`, which TOML cannot represent.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("seed", e.to_string()))
    }

    pub fn kind(&self) -> Result<ExperimentKind> {
        self.kind.ok_or_else(|| Error::config("kind", "experiment kind is required"))
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| Error::config("seed", "a seed is required"))
    }

    /// Checks every supplied value and the mandatory keys.
    pub fn validate(&self) -> Result<()> {
        self.kind()?;
        if self.seed()? > i64::MAX as u64 {
            return Err(Error::config("seed", format!("seed must not exceed {}", i64::MAX)));
        }
        let depth_ok = |d: usize| (1..=MAX_DEPTH).contains(&d);
        if let Some(d) = self.d {
            if !depth_ok(d) {
                return Err(Error::config("d", format!("depth must lie in 1..={MAX_DEPTH}")));
            }
        }
        if let Some(ds) = &self.depths {
            if ds.is_empty() {
                return Err(Error::config("depths", "list is empty"));
            }
            if !ds.iter().all(|&d| depth_ok(d)) {
                return Err(Error::config("depths", format!("every depth must lie in 1..={MAX_DEPTH}")));
            }
        }
        if let Some(w) = &self.widths {
            if w.values().iter().any(|&w| w < 0.0) {
                return Err(Error::config("widths", "disorder widths must be nonnegative"));
            }
        }
        if let Some(r) = &self.realizations {
            let zero = match r {
                Counts::One(n) => *n == 0,
                Counts::Many(v) => v.is_empty() || v.contains(&0),
            };
            if zero {
                return Err(Error::config("realizations", "counts must be positive"));
            }
        }
        let positive = [
            ("gamma", self.gamma),
            ("delta_e", self.delta_e),
            ("band_window", self.band_window),
            ("tol", self.tol),
        ];
        for (name, v) in positive {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::config(name, format!("must be positive and finite, got {v}")));
                }
            }
        }
        if self.band_rank == Some(0) {
            return Err(Error::config("band_rank", "must be positive"));
        }
        if self.band_rank.is_some() && self.band_window.is_some() {
            return Err(Error::config("band_window", "set either band_rank or band_window, not both"));
        }
        if let Some(t) = &self.times {
            let v = t.values();
            if v.iter().any(|&t| t < 0.0) || v.windows(2).any(|w| w[1] < w[0]) {
                return Err(Error::config("times", "times must be nonnegative and sorted"));
            }
        }
        for (name, v) in [("time_points", self.time_points), ("k_points", self.k_points)] {
            if let Some(n) = v {
                if n < 2 || n > MAX_GRID_POINTS {
                    return Err(Error::config(name, format!("must lie in 2..={MAX_GRID_POINTS}")));
                }
            }
        }
        if let Some(k) = &self.momenta {
            if k.values().iter().any(|&k| !(k > 0.0 && k < std::f64::consts::PI)) {
                return Err(Error::config("momenta", "momenta must lie in (0, π)"));
            }
        }
        for (name, v) in [("fit_t0", self.fit_t0), ("fit_c", self.fit_c)] {
            if let Some(v) = v {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::config(name, "must be nonnegative and finite"));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_forms() {
        assert_eq!(Grid::parse("0:1:0.25").unwrap().values(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(Grid::parse("1, 2.5").unwrap().values(), vec![1.0, 2.5]);
        assert_eq!(Grid::parse("0:0.3:0.1").unwrap().values().len(), 4);
        for bad in ["", "1:2", "1:0:1", "0:1:0", "0:1:-1", "a", "0:1e9:1e-9", "nan", "1,,2"] {
            assert!(Grid::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn file_and_overrides() {
        let c = ExperimentConfig::parse(
            r#"
            kind = "ipr-phase"
            seed = 7
            d = 6
            widths = "0:30:2"
            realizations = 50
            "#,
        )
        .unwrap();
        assert_eq!(c.kind, Some(ExperimentKind::IprPhase));
        assert_eq!(c.widths.as_ref().unwrap().values().len(), 16);
        let o = c
            .with_overrides([("--d", "8"), ("--delta-e", "0.15"), ("realizations", "500"), ("depths", "5,6,7")])
            .unwrap();
        assert_eq!(o.d, Some(8));
        assert_eq!(o.delta_e, Some(0.15));
        assert_eq!(o.realizations, Some(Counts::One(500)));
        assert_eq!(o.depths, Some(vec![5, 6, 7]));
        let w = c.with_overrides([("widths", "1,2,3")]).unwrap();
        assert_eq!(w.widths.unwrap().values(), vec![1.0, 2.0, 3.0]);
        let f = c.with_overrides([("family", "mgt-regular")]).unwrap();
        assert_eq!(f.family, Some(Family::MgtRegular));
    }

    #[test]
    fn errors_name_the_field() {
        let e = ExperimentConfig::parse("kind = \"spectrum\"\nseed = 1\nbogus = 3").unwrap_err();
        assert!(matches!(e, Error::Config { ref field, .. } if field == "bogus"));
        let e = ExperimentConfig::parse("seed = \"x\"").unwrap_err();
        assert!(matches!(e, Error::Config { ref field, .. } if field == "seed"));
        let e = ExperimentConfig::parse("widths = \"3:1:1\"").unwrap_err();
        assert!(matches!(e, Error::Config { ref field, .. } if field == "widths"));
        let e = ExperimentConfig::parse("kind = \"spectrum\"").unwrap().validate().unwrap_err();
        assert!(matches!(e, Error::Config { ref field, .. } if field == "seed"));
        let e = ExperimentConfig::default().with_overrides([("--nope", "1")]).unwrap_err();
        assert!(matches!(e, Error::Config { ref field, .. } if field == "nope"));
    }

    #[test]
    fn round_trip() {
        let c = ExperimentConfig {
            kind: Some(ExperimentKind::Scattering),
            seed: Some(3),
            d: Some(5),
            widths: Some(Grid::Range {
                start: 0.0,
                stop: 6.0,
                step: 0.5,
            }),
            momenta: Some(Grid::List(vec![0.5, 1.5707963267948966])),
            realizations: Some(Counts::Many(vec![4, 2])),
            family: Some(Family::MgtRandom),
            output: Some(PathBuf::from("out/x")),
            ..Default::default()
        };
        assert_eq!(ExperimentConfig::parse(&c.to_toml().unwrap()).unwrap(), c);
    }
}
