//! Experiment configuration documents.
//!
//! A config is a JSON object with `model`, `defects`, `run` and `output`
//! blocks. Only `model` is required. Validation walks the whole document and
//! reports every problem with its key path.

use std::fmt;
use std::path::PathBuf;

use resonator_core::dynamics::{
    self, ExcitationPreset, ACCUMULATION_WINDOW, DEFAULT_SAMPLES, DEFAULT_T_MAX, PULSE_PROMINENCE,
};
use resonator_core::model::{Defect, ModelParams, SiteLayout};
use resonator_core::response::{
    self, DriveSpec, DEFAULT_KAPPA, DEFAULT_OMEGA_RANGE, DEFAULT_OMEGA_STEP,
};
use resonator_core::spectra::ZERO_MODE_TOL;
use serde_json::{json, Map, Value};

pub const DEFAULT_CELLS: usize = 5;
pub const DEFAULT_SWEEP: (f64, f64, f64) = (-2.0, 2.0, 0.01);
pub const DEFAULT_OUTPUT_DIR: &str = "out";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    CsvSvg,
}

impl OutputFormat {
    pub fn name(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::CsvSvg => "csv+svg",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "csv" => Some(OutputFormat::Csv),
            "csv+svg" => Some(OutputFormat::CsvSvg),
            _ => None,
        }
    }

    pub fn svg(self) -> bool {
        self == OutputFormat::CsvSvg
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelBlock {
    pub t1: f64,
    pub t2: f64,
    pub delta: f64,
    pub cells_per_chain: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DefectEntry {
    pub site: usize,
    pub strength: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepBlock {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl Default for SweepBlock {
    fn default() -> Self {
        let (start, end, step) = DEFAULT_SWEEP;
        Self { start, end, step }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeBlock {
    pub t_max: f64,
    pub samples: usize,
}

impl Default for TimeBlock {
    fn default() -> Self {
        Self {
            t_max: DEFAULT_T_MAX,
            samples: DEFAULT_SAMPLES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveBlock {
    pub preset: ExcitationPreset,
    pub omega_start: f64,
    pub omega_end: f64,
    pub omega_step: f64,
    pub kappa: f64,
}

impl Default for DriveBlock {
    fn default() -> Self {
        Self {
            preset: ExcitationPreset::Interface,
            omega_start: DEFAULT_OMEGA_RANGE.0,
            omega_end: DEFAULT_OMEGA_RANGE.1,
            omega_step: DEFAULT_OMEGA_STEP,
            kappa: DEFAULT_KAPPA,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunBlock {
    pub sweep: SweepBlock,
    pub time: TimeBlock,
    pub excitation: ExcitationPreset,
    pub drive: DriveBlock,
    pub zero_mode_tol: f64,
    pub pulse_prominence: f64,
    pub accumulation_window: (f64, f64),
}

impl Default for RunBlock {
    fn default() -> Self {
        Self {
            sweep: SweepBlock::default(),
            time: TimeBlock::default(),
            excitation: ExcitationPreset::Interface,
            drive: DriveBlock::default(),
            zero_mode_tol: ZERO_MODE_TOL,
            pulse_prominence: PULSE_PROMINENCE,
            accumulation_window: ACCUMULATION_WINDOW,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputBlock {
    pub directory: PathBuf,
    pub format: OutputFormat,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self {
            directory: PathBuf::from(DEFAULT_OUTPUT_DIR),
            format: OutputFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelBlock,
    pub defects: Vec<DefectEntry>,
    pub run: RunBlock,
    pub output: OutputBlock,
}

impl ExperimentConfig {
    /// Config with the given model and defaults everywhere else.
    pub fn with_model(model: ModelBlock) -> Self {
        Self {
            model,
            defects: Vec::new(),
            run: RunBlock::default(),
            output: OutputBlock::default(),
        }
    }

    pub fn params(&self) -> resonator_core::Result<ModelParams> {
        let m = &self.model;
        ModelParams::new(m.t1, m.t2, m.delta, m.cells_per_chain)
    }

    pub fn layout(&self) -> SiteLayout {
        SiteLayout::new(self.model.cells_per_chain)
    }

    pub fn defects(&self) -> Vec<Defect> {
        self.defects
            .iter()
            .map(|d| Defect::new(d.site, d.strength))
            .collect()
    }

    pub fn sweep_grid(&self) -> resonator_core::Result<Vec<f64>> {
        let s = &self.run.sweep;
        response::frequency_grid(s.start, s.end, s.step)
    }

    pub fn times(&self) -> resonator_core::Result<Vec<f64>> {
        dynamics::time_grid(self.run.time.t_max, self.run.time.samples)
    }

    pub fn drive_spec(&self, preset: ExcitationPreset) -> resonator_core::Result<DriveSpec> {
        let d = &self.run.drive;
        let grid = response::frequency_grid(d.omega_start, d.omega_end, d.omega_step)?;
        DriveSpec::preset(preset, &self.layout(), grid, d.kappa)
    }

    pub fn to_value(&self) -> Value {
        let r = &self.run;
        json!({
            "model": {
                "t1": self.model.t1,
                "t2": self.model.t2,
                "delta": self.model.delta,
                "cells_per_chain": self.model.cells_per_chain,
            },
            "defects": self.defects.iter()
                .map(|d| json!({ "site": d.site, "strength": d.strength }))
                .collect::<Vec<_>>(),
            "run": {
                "sweep": { "start": r.sweep.start, "end": r.sweep.end, "step": r.sweep.step },
                "time": { "t_max": r.time.t_max, "samples": r.time.samples },
                "excitation": r.excitation.name(),
                "drive": {
                    "preset": r.drive.preset.name(),
                    "omega_start": r.drive.omega_start,
                    "omega_end": r.drive.omega_end,
                    "omega_step": r.drive.omega_step,
                    "kappa": r.drive.kappa,
                },
                "zero_mode_tol": r.zero_mode_tol,
                "pulse_prominence": r.pulse_prominence,
                "accumulation_window": [r.accumulation_window.0, r.accumulation_window.1],
            },
            "output": {
                "directory": self.output.directory.to_string_lossy(),
                "formats": self.output.format.name(),
            },
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_value()).expect("config values serialize")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid config:\n{}", format_issues(.0))]
    Invalid(Vec<ConfigIssue>),
}

impl ConfigError {
    pub fn issues(&self) -> &[ConfigIssue] {
        match self {
            ConfigError::Invalid(issues) => issues,
            ConfigError::Syntax { .. } => &[],
        }
    }

    /// True if some issue sits at exactly `path`.
    pub fn mentions(&self, path: &str) -> bool {
        self.issues().iter().any(|i| i.path == path)
    }
}

fn format_issues(issues: &[ConfigIssue]) -> String {
    issues
        .iter()
        .map(|i| format!("  {i}"))
        .collect::<Vec<_>>()
        .join("\n")
}

struct Walker {
    issues: Vec<ConfigIssue>,
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

impl Walker {
    fn issue(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.issues.push(ConfigIssue {
            path: path.into(),
            message: message.into(),
        });
    }

    fn object<'a>(
        &mut self,
        value: &'a Value,
        path: &str,
        allowed: &[&str],
    ) -> Option<&'a Map<String, Value>> {
        let Some(map) = value.as_object() else {
            self.issue(path, "expected an object");
            return None;
        };
        for key in map.keys() {
            if !allowed.contains(&key.as_str()) {
                self.issue(
                    join(path, key),
                    format!("unknown key (expected one of: {})", allowed.join(", ")),
                );
            }
        }
        Some(map)
    }

    fn number(
        &mut self,
        map: &Map<String, Value>,
        path: &str,
        key: &str,
        default: Option<f64>,
    ) -> Option<f64> {
        let full = join(path, key);
        match map.get(key) {
            None => {
                if default.is_none() {
                    self.issue(full, "missing required key");
                }
                default
            }
            Some(v) => match v.as_f64() {
                Some(x) if x.is_finite() => Some(x),
                _ => {
                    self.issue(full, "expected a finite number");
                    None
                }
            },
        }
    }

    fn count(
        &mut self,
        map: &Map<String, Value>,
        path: &str,
        key: &str,
        default: usize,
    ) -> Option<usize> {
        match map.get(key) {
            None => Some(default),
            Some(v) => match v.as_u64() {
                Some(n) => Some(n as usize),
                None => {
                    self.issue(join(path, key), "expected a non-negative integer");
                    None
                }
            },
        }
    }

    fn text<'a>(&mut self, map: &'a Map<String, Value>, path: &str, key: &str) -> Option<&'a str> {
        let v = map.get(key)?;
        let s = v.as_str();
        if s.is_none() {
            self.issue(join(path, key), "expected a string");
        }
        s
    }

    fn preset(
        &mut self,
        map: &Map<String, Value>,
        path: &str,
        key: &str,
        default: ExcitationPreset,
    ) -> ExcitationPreset {
        match self.text(map, path, key) {
            None => default,
            Some(name) => ExcitationPreset::from_name(name).unwrap_or_else(|| {
                let names: Vec<&str> = ExcitationPreset::ALL.iter().map(|p| p.name()).collect();
                self.issue(
                    join(path, key),
                    format!(
                        "unknown preset `{name}` (expected one of: {})",
                        names.join(", ")
                    ),
                );
                default
            }),
        }
    }

    fn require(&mut self, ok: bool, path: &str, message: &str) {
        if !ok {
            self.issue(path, message);
        }
    }
}

/// Parse and validate a JSON config document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let root: Value = serde_json::from_str(text).map_err(|e| ConfigError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let mut w = Walker { issues: Vec::new() };
    let config = walk_root(&mut w, &root);
    match config {
        Some(c) if w.issues.is_empty() => Ok(c),
        _ => Err(ConfigError::Invalid(w.issues)),
    }
}

fn walk_root(w: &mut Walker, root: &Value) -> Option<ExperimentConfig> {
    let map = w.object(root, "", &["model", "defects", "run", "output"])?;

    let model = match map.get("model") {
        Some(v) => walk_model(w, v),
        None => {
            w.issue("model", "missing required key");
            None
        }
    };
    // range-check defect sites even when other model keys are broken
    let cells = match map.get("model").and_then(|m| m.get("cells_per_chain")) {
        None => Some(DEFAULT_CELLS),
        Some(v) => v.as_u64().filter(|&n| n >= 1).map(|n| n as usize),
    };
    let defects = match map.get("defects") {
        Some(v) => walk_defects(w, v, cells),
        None => Some(Vec::new()),
    };
    let run = match map.get("run") {
        Some(v) => walk_run(w, v),
        None => Some(RunBlock::default()),
    };
    let output = match map.get("output") {
        Some(v) => walk_output(w, v),
        None => Some(OutputBlock::default()),
    };
    Some(ExperimentConfig {
        model: model?,
        defects: defects?,
        run: run?,
        output: output?,
    })
}

fn walk_model(w: &mut Walker, v: &Value) -> Option<ModelBlock> {
    let path = "model";
    let map = w.object(v, path, &["t1", "t2", "delta", "cells_per_chain"])?;
    let t1 = w.number(map, path, "t1", None);
    let t2 = w.number(map, path, "t2", None);
    let delta = w.number(map, path, "delta", None);
    let cells = w.count(map, path, "cells_per_chain", DEFAULT_CELLS);
    if let Some(t1) = t1 {
        w.require(t1 > 0.0, "model.t1", "must be > 0");
    }
    if let Some(n) = cells {
        w.require(n >= 1, "model.cells_per_chain", "must be >= 1");
    }
    Some(ModelBlock {
        t1: t1?,
        t2: t2?,
        delta: delta?,
        cells_per_chain: cells?,
    })
}

fn walk_defects(w: &mut Walker, v: &Value, cells: Option<usize>) -> Option<Vec<DefectEntry>> {
    let Some(list) = v.as_array() else {
        w.issue("defects", "expected a list");
        return None;
    };
    let total = cells.map(|n| SiteLayout::new(n).total_sites());
    let mut out = Vec::new();
    let mut ok = true;
    for (i, item) in list.iter().enumerate() {
        let path = format!("defects[{i}]");
        let Some(map) = w.object(item, &path, &["site", "strength"]) else {
            ok = false;
            continue;
        };
        let site = match map.get("site") {
            None => {
                w.issue(join(&path, "site"), "missing required key");
                None
            }
            Some(s) => {
                let n = s.as_u64().map(|n| n as usize);
                if n.is_none() {
                    w.issue(join(&path, "site"), "expected a non-negative integer");
                }
                n
            }
        };
        let strength = w.number(map, &path, "strength", None);
        if let (Some(s), Some(total)) = (site, total) {
            w.require(
                s < total,
                &join(&path, "site"),
                &format!("site index must be < {total}"),
            );
        }
        match (site, strength) {
            (Some(site), Some(strength)) => out.push(DefectEntry { site, strength }),
            _ => ok = false,
        }
    }
    ok.then_some(out)
}

fn walk_run(w: &mut Walker, v: &Value) -> Option<RunBlock> {
    let path = "run";
    let map = w.object(
        v,
        path,
        &[
            "sweep",
            "time",
            "excitation",
            "drive",
            "zero_mode_tol",
            "pulse_prominence",
            "accumulation_window",
        ],
    )?;
    let defaults = RunBlock::default();
    let before = w.issues.len();

    let mut sweep = defaults.sweep;
    if let Some(v) = map.get("sweep") {
        let p = "run.sweep";
        if let Some(m) = w.object(v, p, &["start", "end", "step"]) {
            sweep.start = w
                .number(m, p, "start", Some(sweep.start))
                .unwrap_or(sweep.start);
            sweep.end = w.number(m, p, "end", Some(sweep.end)).unwrap_or(sweep.end);
            sweep.step = w
                .number(m, p, "step", Some(sweep.step))
                .unwrap_or(sweep.step);
            w.require(
                sweep.start <= sweep.end,
                "run.sweep.end",
                "must be >= run.sweep.start",
            );
            w.require(sweep.step > 0.0, "run.sweep.step", "must be > 0");
        }
    }

    let mut time = defaults.time;
    if let Some(v) = map.get("time") {
        let p = "run.time";
        if let Some(m) = w.object(v, p, &["t_max", "samples"]) {
            time.t_max = w
                .number(m, p, "t_max", Some(time.t_max))
                .unwrap_or(time.t_max);
            time.samples = w
                .count(m, p, "samples", time.samples)
                .unwrap_or(time.samples);
            w.require(time.t_max > 0.0, "run.time.t_max", "must be > 0");
            w.require(time.samples >= 2, "run.time.samples", "must be >= 2");
        }
    }

    let excitation = w.preset(map, path, "excitation", defaults.excitation);

    let mut drive = defaults.drive;
    if let Some(v) = map.get("drive") {
        let p = "run.drive";
        if let Some(m) = w.object(
            v,
            p,
            &["preset", "omega_start", "omega_end", "omega_step", "kappa"],
        ) {
            drive.preset = w.preset(m, p, "preset", drive.preset);
            drive.omega_start = w
                .number(m, p, "omega_start", Some(drive.omega_start))
                .unwrap_or(drive.omega_start);
            drive.omega_end = w
                .number(m, p, "omega_end", Some(drive.omega_end))
                .unwrap_or(drive.omega_end);
            drive.omega_step = w
                .number(m, p, "omega_step", Some(drive.omega_step))
                .unwrap_or(drive.omega_step);
            drive.kappa = w
                .number(m, p, "kappa", Some(drive.kappa))
                .unwrap_or(drive.kappa);
            w.require(
                drive.omega_start <= drive.omega_end,
                "run.drive.omega_end",
                "must be >= run.drive.omega_start",
            );
            w.require(
                drive.omega_step > 0.0,
                "run.drive.omega_step",
                "must be > 0",
            );
            w.require(drive.kappa >= 0.0, "run.drive.kappa", "must be >= 0");
        }
    }

    let zero_mode_tol = w
        .number(map, path, "zero_mode_tol", Some(defaults.zero_mode_tol))
        .unwrap_or(defaults.zero_mode_tol);
    w.require(zero_mode_tol > 0.0, "run.zero_mode_tol", "must be > 0");
    let pulse_prominence = w
        .number(
            map,
            path,
            "pulse_prominence",
            Some(defaults.pulse_prominence),
        )
        .unwrap_or(defaults.pulse_prominence);
    w.require(
        pulse_prominence >= 0.0,
        "run.pulse_prominence",
        "must be >= 0",
    );

    let mut accumulation_window = defaults.accumulation_window;
    if let Some(v) = map.get("accumulation_window") {
        match v
            .as_array()
            .map(|a| a.iter().map(Value::as_f64).collect::<Option<Vec<f64>>>())
        {
            Some(Some(pair)) if pair.len() == 2 => accumulation_window = (pair[0], pair[1]),
            _ => w.issue(
                "run.accumulation_window",
                "expected a list of two numbers [start, end]",
            ),
        }
    }
    let (a, b) = accumulation_window;
    w.require(
        0.0 <= a && a <= b && b <= time.t_max,
        "run.accumulation_window",
        "must satisfy 0 <= start <= end <= run.time.t_max",
    );

    (w.issues.len() == before).then_some(RunBlock {
        sweep,
        time,
        excitation,
        drive,
        zero_mode_tol,
        pulse_prominence,
        accumulation_window,
    })
}

fn walk_output(w: &mut Walker, v: &Value) -> Option<OutputBlock> {
    let path = "output";
    let map = w.object(v, path, &["directory", "formats"])?;
    let mut out = OutputBlock::default();
    let before = w.issues.len();
    if let Some(dir) = w.text(map, path, "directory") {
        if dir.is_empty() {
            w.issue("output.directory", "must not be empty");
        }
        out.directory = PathBuf::from(dir);
    }
    if let Some(name) = w.text(map, path, "formats") {
        match OutputFormat::from_name(name) {
            Some(f) => out.format = f,
            None => w.issue(
                "output.formats",
                format!("unknown format `{name}` (expected csv or csv+svg)"),
            ),
        }
    }
    (w.issues.len() == before).then_some(out)
}
