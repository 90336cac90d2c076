// Copyright 2026 qtrap Contributors
// SPDX-License-Identifier: Apache-2.0

//! Scenario configuration.
//!
//! The document is TOML read as a flat set of dotted keys; `[time]` tables
//! and `time.t_max = ...` lines are interchangeable. Recognized keys:
//!
//! | key | type | default |
//! |-----|------|---------|
//! | `q` / `tau` | float | `tau = 0.003` (`q = e^tau`) |
//! | `epsilon` | float >= 0 | `0.05` |
//! | `omega_bar` | float | `50` |
//! | `delta_bar` | float | `-50` |
//! | `alpha.re`, `alpha.im` | float | `4`, `0` |
//! | `initial.internal` | `"g"` or `"e"` | `"g"` |
//! | `initial.motional` | `"q_coherent"` or `"fock"` | `"q_coherent"` |
//! | `initial.fock` | int < D | `0` |
//! | `truncation.dim` | int >= 2 | `60` |
//! | `truncation.tail_tol` | float > 0 | `1e-10` |
//! | `coupling.route` | route name | `"q_closed"` |
//! | `coupling.pad` | int | `20` |
//! | `series.rel_tol` | float > 0 | `1e-16` |
//! | `series.max_terms` | int >= 2 | `200` |
//! | `time.t_max` | float >= 0 | `50` |
//! | `time.points` | int >= 1 | `2001` |
//! | `qgrid.re_min` ... `qgrid.im_max` | float | `-6`, `6` |
//! | `qgrid.re_points`, `qgrid.im_points` | int >= 2 | `161` |
//! | `qgrid.snapshots` | float array in `[0, t_max]` | `[0, t_max]` |
//! | `qgrid.triplets` | bool | `false` |
//! | `output.dir` | string | `"qtrap-out"` |

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use num_complex::Complex64;
use toml::Value;

use crate::coupling::{CouplingRoute, SeriesControl, DEFAULT_PAD};
use crate::error::{Error, Result};
use crate::observables::GridSpec;
use crate::qcore::{Deformation, QParams, TruncationDim};
use crate::qstates::Internal;

/// Relative tolerance for accepting both `q` and `tau` in one document.
pub const Q_TAU_CONSISTENCY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    #[default]
    Strict,
    Lenient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MotionalSpec {
    QCoherent,
    Fock(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSpec {
    pub t_max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub params: QParams,
    pub alpha: Complex64,
    pub internal: Internal,
    pub motional: MotionalSpec,
    pub dim: TruncationDim,
    pub tail_tol: f64,
    pub route: CouplingRoute,
    pub pad: usize,
    pub series: SeriesControl,
    pub time: TimeSpec,
    pub qgrid: GridSpec,
    pub snapshots: Vec<f64>,
    pub triplets: bool,
    pub out_dir: PathBuf,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            params: QParams::canonical(),
            alpha: Complex64::new(4.0, 0.0),
            internal: Internal::Ground,
            motional: MotionalSpec::QCoherent,
            dim: TruncationDim::new(60).expect("60 >= 2"),
            tail_tol: 1e-10,
            route: CouplingRoute::QClosed,
            pad: DEFAULT_PAD,
            series: SeriesControl::default(),
            time: TimeSpec {
                t_max: 50.0,
                points: 2001,
            },
            qgrid: GridSpec::default(),
            snapshots: vec![0.0, 50.0],
            triplets: false,
            out_dir: PathBuf::from("qtrap-out"),
        }
    }
}

fn config_err(key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_owned(),
        message: message.into(),
    }
}

fn flatten(prefix: &str, table: toml::Table, out: &mut BTreeMap<String, Value>) {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            Value::Table(t) => flatten(&key, t, out),
            other => {
                out.insert(key, other);
            }
        }
    }
}

struct Keys(BTreeMap<String, Value>);

impl Keys {
    fn float(&mut self, key: &str) -> Result<Option<f64>> {
        match self.0.remove(key) {
            None => Ok(None),
            Some(Value::Float(x)) => Ok(Some(x)),
            Some(Value::Integer(i)) => Ok(Some(i as f64)),
            Some(other) => Err(config_err(
                key,
                format!("expected a number, got {}", other.type_str()),
            )),
        }
    }

    fn uint(&mut self, key: &str) -> Result<Option<usize>> {
        match self.0.remove(key) {
            None => Ok(None),
            Some(Value::Integer(i)) => usize::try_from(i)
                .map(Some)
                .map_err(|_| config_err(key, format!("must be a nonnegative integer, got {i}"))),
            Some(other) => Err(config_err(
                key,
                format!("expected an integer, got {}", other.type_str()),
            )),
        }
    }

    fn string(&mut self, key: &str) -> Result<Option<String>> {
        match self.0.remove(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(other) => Err(config_err(
                key,
                format!("expected a string, got {}", other.type_str()),
            )),
        }
    }

    fn boolean(&mut self, key: &str) -> Result<Option<bool>> {
        match self.0.remove(key) {
            None => Ok(None),
            Some(Value::Boolean(b)) => Ok(Some(b)),
            Some(other) => Err(config_err(
                key,
                format!("expected a boolean, got {}", other.type_str()),
            )),
        }
    }

    fn floats(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.0.remove(key) {
            None => Ok(None),
            Some(Value::Array(items)) => items
                .into_iter()
                .map(|v| match v {
                    Value::Float(x) => Ok(x),
                    Value::Integer(i) => Ok(i as f64),
                    other => Err(config_err(
                        key,
                        format!("expected numbers, got {}", other.type_str()),
                    )),
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
            Some(other) => Err(config_err(
                key,
                format!("expected an array, got {}", other.type_str()),
            )),
        }
    }
}

fn finite(key: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(config_err(key, format!("must be finite, got {v}")))
    }
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(config_err(key, format!("must be finite and > 0, got {v}")))
    }
}

fn deformation(q: Option<f64>, tau: Option<f64>) -> Result<Deformation> {
    let from_q = |q: f64| {
        if !(q > 0.0) || !q.is_finite() {
            return Err(config_err("q", format!("must be finite and > 0, got {q}")));
        }
        Deformation::from_q(q).map_err(|e| config_err("q", e.to_string()))
    };
    let from_tau = |tau: f64| {
        Deformation::from_tau(finite("tau", tau)?).map_err(|e| config_err("tau", e.to_string()))
    };
    match (q, tau) {
        (None, None) => Ok(QParams::canonical().deformation),
        (Some(q), None) => from_q(q),
        (None, Some(tau)) => from_tau(tau),
        (Some(q), Some(tau)) => {
            let d = from_tau(tau)?;
            from_q(q)?;
            if (q - d.q()).abs() > Q_TAU_CONSISTENCY_TOL * d.q() {
                return Err(config_err(
                    "tau",
                    format!("inconsistent with q = {q}: exp(tau) = {}", d.q()),
                ));
            }
            Ok(d)
        }
    }
}

/// Parse and validate a configuration document.
pub fn parse_config(text: &str, mode: ParseMode) -> Result<ScenarioConfig> {
    let table: toml::Table =
        toml::from_str(text).map_err(|e| config_err("<document>", e.to_string()))?;
    let mut flat = BTreeMap::new();
    flatten("", table, &mut flat);
    let mut keys = Keys(flat);
    let base = ScenarioConfig::default();

    let def = deformation(keys.float("q")?, keys.float("tau")?)?;
    let epsilon = keys.float("epsilon")?.unwrap_or(base.params.epsilon);
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(config_err(
            "epsilon",
            format!("must be finite and >= 0, got {epsilon}"),
        ));
    }
    let omega_bar = finite(
        "omega_bar",
        keys.float("omega_bar")?.unwrap_or(base.params.omega_bar),
    )?;
    let delta_bar = finite(
        "delta_bar",
        keys.float("delta_bar")?.unwrap_or(base.params.delta_bar),
    )?;
    let params = QParams::new(def, epsilon, omega_bar, delta_bar)?;

    let alpha = Complex64::new(
        finite("alpha.re", keys.float("alpha.re")?.unwrap_or(base.alpha.re))?,
        finite("alpha.im", keys.float("alpha.im")?.unwrap_or(base.alpha.im))?,
    );

    let dim = keys.uint("truncation.dim")?.unwrap_or(base.dim.get());
    let dim = TruncationDim::new(dim).map_err(|e| config_err("truncation.dim", e.to_string()))?;
    let tail_tol = positive(
        "truncation.tail_tol",
        keys.float("truncation.tail_tol")?.unwrap_or(base.tail_tol),
    )?;

    let internal = match keys.string("initial.internal")?.as_deref() {
        None | Some("g") => Internal::Ground,
        Some("e") => Internal::Excited,
        Some(other) => {
            return Err(config_err(
                "initial.internal",
                format!("expected \"g\" or \"e\", got {other:?}"),
            ))
        }
    };
    let fock = keys.uint("initial.fock")?;
    let motional = match keys.string("initial.motional")?.as_deref() {
        None | Some("q_coherent") => {
            if fock.is_some() {
                return Err(config_err(
                    "initial.fock",
                    "only valid with initial.motional = \"fock\"",
                ));
            }
            MotionalSpec::QCoherent
        }
        Some("fock") => {
            let n = fock.unwrap_or(0);
            if n >= dim.get() {
                return Err(config_err(
                    "initial.fock",
                    format!("{n} is outside truncation.dim = {}", dim.get()),
                ));
            }
            MotionalSpec::Fock(n)
        }
        Some(other) => {
            return Err(config_err(
                "initial.motional",
                format!("expected \"q_coherent\" or \"fock\", got {other:?}"),
            ))
        }
    };

    let route = match keys.string("coupling.route")? {
        None => base.route,
        Some(name) => CouplingRoute::from_str(&name)
            .map_err(|e| config_err("coupling.route", e.to_string()))?,
    };
    let pad = keys.uint("coupling.pad")?.unwrap_or(base.pad);
    let series = SeriesControl {
        rel_tol: positive(
            "series.rel_tol",
            keys.float("series.rel_tol")?.unwrap_or(base.series.rel_tol),
        )?,
        max_terms: keys
            .uint("series.max_terms")?
            .unwrap_or(base.series.max_terms),
    };
    if series.max_terms < 2 {
        return Err(config_err(
            "series.max_terms",
            format!("must be >= 2, got {}", series.max_terms),
        ));
    }

    let t_max = keys.float("time.t_max")?.unwrap_or(base.time.t_max);
    if !(t_max >= 0.0) || !t_max.is_finite() {
        return Err(config_err(
            "time.t_max",
            format!("must be finite and >= 0, got {t_max}"),
        ));
    }
    let points = keys.uint("time.points")?.unwrap_or(base.time.points);
    if points == 0 {
        return Err(config_err("time.points", "must be >= 1"));
    }

    let g = base.qgrid;
    let qgrid = GridSpec {
        re_min: keys.float("qgrid.re_min")?.unwrap_or(g.re_min),
        re_max: keys.float("qgrid.re_max")?.unwrap_or(g.re_max),
        im_min: keys.float("qgrid.im_min")?.unwrap_or(g.im_min),
        im_max: keys.float("qgrid.im_max")?.unwrap_or(g.im_max),
        re_points: keys.uint("qgrid.re_points")?.unwrap_or(g.re_points),
        im_points: keys.uint("qgrid.im_points")?.unwrap_or(g.im_points),
    };
    qgrid
        .validate()
        .map_err(|e| config_err("qgrid", e.to_string()))?;
    let mut snapshots = keys
        .floats("qgrid.snapshots")?
        .unwrap_or_else(|| vec![0.0, t_max]);
    for &t in &snapshots {
        if !(0.0..=t_max).contains(&t) {
            return Err(config_err(
                "qgrid.snapshots",
                format!("{t} lies outside [0, time.t_max = {t_max}]"),
            ));
        }
    }
    snapshots.sort_by(f64::total_cmp);
    snapshots.dedup();
    let triplets = keys.boolean("qgrid.triplets")?.unwrap_or(false);
    let out_dir = keys
        .string("output.dir")?
        .map(PathBuf::from)
        .unwrap_or(base.out_dir);

    if let Some(key) = keys.0.keys().next() {
        match mode {
            ParseMode::Strict => return Err(config_err(key, "unknown key")),
            ParseMode::Lenient => {
                for key in keys.0.keys() {
                    log::warn!("ignoring unknown config key `{key}`");
                }
            }
        }
    }

    Ok(ScenarioConfig {
        params,
        alpha,
        internal,
        motional,
        dim,
        tail_tol,
        route,
        pad,
        series,
        time: TimeSpec { t_max, points },
        qgrid,
        snapshots,
        triplets,
        out_dir,
    })
}

impl ScenarioConfig {
    /// The fully resolved configuration as dotted key-value pairs. Parsing
    /// [`ScenarioConfig::to_toml`] gives back an identical config.
    pub fn entries(&self) -> Vec<(String, Value)> {
        let f = Value::Float;
        let i = |n: usize| Value::Integer(n as i64);
        let mut out = vec![
            ("tau", f(self.params.tau())),
            ("epsilon", f(self.params.epsilon)),
            ("omega_bar", f(self.params.omega_bar)),
            ("delta_bar", f(self.params.delta_bar)),
            ("alpha.re", f(self.alpha.re)),
            ("alpha.im", f(self.alpha.im)),
            (
                "initial.internal",
                Value::String(match self.internal {
                    Internal::Ground => "g".into(),
                    Internal::Excited => "e".into(),
                }),
            ),
        ];
        match self.motional {
            MotionalSpec::QCoherent => {
                out.push(("initial.motional", Value::String("q_coherent".into())))
            }
            MotionalSpec::Fock(n) => {
                out.push(("initial.motional", Value::String("fock".into())));
                out.push(("initial.fock", i(n)));
            }
        }
        out.extend([
            ("truncation.dim", i(self.dim.get())),
            ("truncation.tail_tol", f(self.tail_tol)),
            ("coupling.route", Value::String(self.route.name().into())),
            ("coupling.pad", i(self.pad)),
            ("series.rel_tol", f(self.series.rel_tol)),
            ("series.max_terms", i(self.series.max_terms)),
            ("time.t_max", f(self.time.t_max)),
            ("time.points", i(self.time.points)),
            ("qgrid.re_min", f(self.qgrid.re_min)),
            ("qgrid.re_max", f(self.qgrid.re_max)),
            ("qgrid.im_min", f(self.qgrid.im_min)),
            ("qgrid.im_max", f(self.qgrid.im_max)),
            ("qgrid.re_points", i(self.qgrid.re_points)),
            ("qgrid.im_points", i(self.qgrid.im_points)),
            (
                "qgrid.snapshots",
                Value::Array(self.snapshots.iter().map(|&t| f(t)).collect()),
            ),
            ("qgrid.triplets", Value::Boolean(self.triplets)),
            (
                "output.dir",
                Value::String(self.out_dir.display().to_string()),
            ),
        ]);
        out.into_iter().map(|(k, v)| (k.to_owned(), v)).collect()
    }

    /// Flat `key = value` document, one dotted key per line.
    pub fn to_toml(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.entries() {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }

    /// Entries as a JSON object, for manifests.
    pub fn to_json(&self) -> serde_json::Value {
        let map = self
            .entries()
            .into_iter()
            .map(|(k, v)| (k, toml_to_json(&v)))
            .collect::<serde_json::Map<_, _>>();
        serde_json::Value::Object(map)
    }

    /// Override one sweepable parameter.
    pub fn with_value(&self, key: &str, value: f64) -> Result<Self> {
        let mut cfg = self.clone();
        let p = &mut cfg.params;
        match key {
            "q" => {
                p.deformation = deformation(Some(value), None)?;
            }
            "tau" => {
                p.deformation = deformation(None, Some(value))?;
            }
            "epsilon" => {
                *p = QParams::new(p.deformation, value, p.omega_bar, p.delta_bar)
                    .map_err(|e| config_err("epsilon", e.to_string()))?;
            }
            "delta_bar" => {
                p.delta_bar = finite("delta_bar", value)?;
            }
            "alpha" => {
                cfg.alpha = Complex64::new(finite("alpha", value)?, 0.0);
            }
            other => return Err(config_err(other, "not a sweepable parameter")),
        }
        Ok(cfg)
    }
}

fn toml_to_json(v: &Value) -> serde_json::Value {
    use serde_json::Value as J;
    match v {
        Value::String(s) => J::String(s.clone()),
        Value::Integer(i) => J::from(*i),
        Value::Float(x) => J::from(*x),
        Value::Boolean(b) => J::Bool(*b),
        Value::Array(a) => J::Array(a.iter().map(toml_to_json).collect()),
        Value::Table(t) => J::Object(
            t.iter()
                .map(|(k, v)| (k.clone(), toml_to_json(v)))
                .collect(),
        ),
        Value::Datetime(d) => J::String(d.to_string()),
    }
}
