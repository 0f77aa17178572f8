//! Sectioned `key = value` configuration files.

use std::cell::Cell;
use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use interfall::nonmarkov::{FilterSpec, SpinMemory};
use interfall::propagators::{codata, PhysicalConfig};
use interfall::wavepacket::{DEFAULT_WINDOW_SAMPLES, DEFAULT_Z_FIRST_MINIMUM};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub msg: String,
}

impl ConfigError {
    fn at(line: usize, key: impl Into<String>, msg: impl Into<String>) -> Self {
        Self { line: Some(line), key: Some(key.into()), msg: msg.into() }
    }

    fn missing(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Self { line: None, key: Some(key.into()), msg: msg.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.line, &self.key) {
            (Some(l), Some(k)) => write!(f, "line {l}, {k}: {}", self.msg),
            (Some(l), None) => write!(f, "line {l}: {}", self.msg),
            (None, Some(k)) => write!(f, "{k}: {}", self.msg),
            (None, None) => write!(f, "{}", self.msg),
        }
    }
}

impl std::error::Error for ConfigError {}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug)]
struct Entry {
    key: String,
    value: String,
    line: usize,
    used: Cell<bool>,
}

#[derive(Debug)]
pub struct Section {
    pub name: String,
    line: usize,
    entries: Vec<Entry>,
    used: Cell<bool>,
}

#[derive(Debug)]
pub struct Ini {
    sections: Vec<Section>,
}

impl Ini {
    pub fn parse(text: &str) -> Result<Self> {
        let mut sections: Vec<Section> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| ConfigError::at(line, content, "unterminated section header"))?
                    .trim();
                if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                    return Err(ConfigError::at(line, content, "bad section name"));
                }
                if sections.iter().any(|s| s.name == name) {
                    return Err(ConfigError::at(line, format!("[{name}]"), "duplicate section"));
                }
                sections.push(Section { name: name.into(), line, entries: Vec::new(), used: Cell::new(false) });
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| ConfigError::at(line, content, "expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            let section = sections
                .last_mut()
                .ok_or_else(|| ConfigError::at(line, key, "key outside any section"))?;
            let full = format!("[{}].{key}", section.name);
            if key.is_empty() {
                return Err(ConfigError::at(line, full, "empty key"));
            }
            if value.is_empty() {
                return Err(ConfigError::at(line, full, "empty value"));
            }
            if section.entries.iter().any(|e| e.key == key) {
                return Err(ConfigError::at(line, full, "duplicate key"));
            }
            section.entries.push(Entry { key: key.into(), value: value.into(), line, used: Cell::new(false) });
        }
        Ok(Self { sections })
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        let s = self.sections.iter().find(|s| s.name == name)?;
        s.used.set(true);
        Some(s)
    }

    pub fn require(&self, name: &str, kind: &str) -> Result<&Section> {
        self.section(name)
            .ok_or_else(|| ConfigError::missing(format!("[{name}]"), format!("section required for `{kind}`")))
    }

    /// Every entry as `section.key`, in file order.
    pub fn entries(&self) -> BTreeMap<String, String> {
        self.sections
            .iter()
            .flat_map(|s| s.entries.iter().map(move |e| (format!("{}.{}", s.name, e.key), e.value.clone())))
            .collect()
    }

    /// Rejects any section or key that was never read.
    pub fn check_all_used(&self, kind: &str) -> Result<()> {
        for s in &self.sections {
            if !s.used.get() {
                return Err(ConfigError::at(s.line, format!("[{}]", s.name), format!("section not used by `{kind}`")));
            }
            if let Some(e) = s.entries.iter().find(|e| !e.used.get()) {
                return Err(ConfigError::at(e.line, format!("[{}].{}", s.name, e.key), "unknown key"));
            }
        }
        Ok(())
    }
}

impl Section {
    fn entry(&self, key: &str) -> Option<&Entry> {
        let e = self.entries.iter().find(|e| e.key == key)?;
        e.used.set(true);
        Some(e)
    }

    fn err(&self, e: &Entry, msg: impl Into<String>) -> ConfigError {
        ConfigError::at(e.line, format!("[{}].{}", self.name, e.key), msg)
    }

    pub fn str(&self, key: &str) -> Option<(&str, usize)> {
        self.entry(key).map(|e| (e.value.as_str(), e.line))
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        let Some(e) = self.entry(key) else { return Ok(None) };
        let v: f64 = e.value.parse().map_err(|_| self.err(e, format!("`{}` is not a number", e.value)))?;
        if !v.is_finite() {
            return Err(self.err(e, "value must be finite"));
        }
        Ok(Some(v))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    pub fn req_f64(&self, key: &str) -> Result<f64> {
        self.f64(key)?
            .ok_or_else(|| ConfigError::missing(format!("[{}].{key}", self.name), "required key missing"))
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        let Some(e) = self.entry(key) else { return Ok(default) };
        e.value.parse().map_err(|_| self.err(e, format!("`{}` is not a non-negative integer", e.value)))
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        let Some(e) = self.entry(key) else { return Ok(default) };
        match e.value.as_str() {
            "true" | "yes" | "on" => Ok(true),
            "false" | "no" | "off" => Ok(false),
            v => Err(self.err(e, format!("`{v}` is not a boolean"))),
        }
    }

    pub fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(e) = self.entry(key) else { return Ok(None) };
        let values = e
            .value
            .split(',')
            .map(|s| s.trim().parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| self.err(e, format!("`{}` is not a comma-separated list of numbers", e.value)))?;
        Ok(Some(values))
    }

    pub fn choice<T: Copy>(&self, key: &str, options: &[(&str, T)], default: T) -> Result<T> {
        let Some(e) = self.entry(key) else { return Ok(default) };
        options.iter().find(|(name, _)| *name == e.value).map(|(_, v)| *v).ok_or_else(|| {
            let names: Vec<_> = options.iter().map(|(n, _)| *n).collect();
            self.err(e, format!("`{}` is not one of {}", e.value, names.join(", ")))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Kind {
    Diffract,
    Interfere,
    Decohere,
    CausalBreak,
    Cow,
    Verify,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Diffract => "diffract",
            Kind::Interfere => "interfere",
            Kind::Decohere => "decohere",
            Kind::CausalBreak => "causal-break",
            Kind::Cow => "cow",
            Kind::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlitBlock {
    pub d: f64,
    pub a: f64,
    pub b: f64,
    pub slits: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceBlock {
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub packet_sigma: Option<f64>,
    pub sigma_z: Option<f64>,
    pub calibrate_z: f64,
    pub window_samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterBlock {
    pub z_filter: f64,
    pub z_screen: f64,
    pub reprep_sigma: f64,
    pub filter: FilterSpec,
    pub memory: SpinMemory,
    pub downstream_coupling: bool,
    pub alpha2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CowBlock {
    pub area: f64,
    pub tilts_deg: Vec<f64>,
    pub m_grav: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    None,
    BranchFlip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyBlock {
    pub oracle: bool,
    pub fault: Fault,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub physics: Option<PhysicalConfig>,
    pub slit: Option<SlitBlock>,
    pub source: Option<SourceBlock>,
    pub distances: Vec<f64>,
    pub filter: Option<FilterBlock>,
    pub cow: Option<CowBlock>,
    pub verify: Option<VerifyBlock>,
    pub out_dir: Option<PathBuf>,
    pub format: Option<Format>,
    /// Raw `section.key` entries, echoed into the report.
    pub entries: BTreeMap<String, String>,
}

impl ExperimentConfig {
    pub fn parse(kind: Kind, text: &str) -> Result<Self> {
        let ini = Ini::parse(text)?;
        let name = kind.name();
        if let Some(s) = ini.section("experiment") {
            if let Some((k, line)) = s.str("kind") {
                if k != name {
                    return Err(ConfigError::at(line, "[experiment].kind", format!("file is for `{k}`, not `{name}`")));
                }
            }
        }
        let mut cfg = Self {
            kind,
            physics: None,
            slit: None,
            source: None,
            distances: Vec::new(),
            filter: None,
            cow: None,
            verify: None,
            out_dir: None,
            format: None,
            entries: ini.entries(),
        };
        if let Some(s) = ini.section("output") {
            cfg.out_dir = s.str("dir").map(|(d, _)| PathBuf::from(d));
            if s.str("format").is_some() {
                let opts = [("csv", Format::Csv), ("json", Format::Json), ("svg", Format::Svg)];
                cfg.format = Some(s.choice("format", &opts, Format::Csv)?);
            }
        }
        match kind {
            Kind::Diffract | Kind::Interfere => {
                cfg.physics = Some(physics(ini.require("physics", name)?)?);
                let s = ini.require("slit", name)?;
                let slits = s.usize_or("slits", if kind == Kind::Interfere { 2 } else { 1 })?;
                let block = SlitBlock { d: s.req_f64("d")?, a: s.req_f64("a")?, b: s.f64_or("b", 0.0)?, slits };
                if !(1..=2).contains(&slits) || (kind == Kind::Interfere && slits != 2) {
                    let (_, line) = s.str("slits").unwrap_or(("", s.line));
                    return Err(ConfigError::at(line, "[slit].slits", format!("{slits} slits not allowed for `{name}`")));
                }
                cfg.slit = Some(block);
                cfg.distances = distances(ini.require("screen", name)?)?;
            }
            Kind::Decohere => {
                cfg.physics = Some(physics(ini.require("physics", name)?)?);
                cfg.source = Some(source(&ini)?);
                cfg.distances = distances(ini.require("screen", name)?)?;
            }
            Kind::CausalBreak => {
                cfg.physics = Some(physics(ini.require("physics", name)?)?);
                cfg.source = Some(source(&ini)?);
                cfg.filter = Some(filter(&ini)?);
            }
            Kind::Cow => {
                cfg.physics = Some(physics(ini.require("physics", name)?)?);
                let s = ini.require("cow", name)?;
                let tilts_deg = s
                    .list("tilts_deg")?
                    .ok_or_else(|| ConfigError::missing("[cow].tilts_deg", "required key missing"))?;
                cfg.cow = Some(CowBlock { area: s.req_f64("area")?, tilts_deg, m_grav: s.f64("m_grav")? });
            }
            Kind::Verify => {
                let mut block = VerifyBlock { oracle: true, fault: Fault::None };
                if let Some(s) = ini.section("verify") {
                    block.oracle = s.bool_or("oracle", true)?;
                    block.fault = s.choice("fault", &[("none", Fault::None), ("branch_flip", Fault::BranchFlip)], Fault::None)?;
                }
                cfg.verify = Some(block);
            }
        }
        ini.check_all_used(name)?;
        Ok(cfg)
    }
}

fn physics(s: &Section) -> Result<PhysicalConfig> {
    let cfg = PhysicalConfig {
        mass: s.f64_or("mass", codata::NEUTRON_MASS)?,
        g: s.f64_or("g", 9.8)?,
        h: s.f64_or("h", codata::PLANCK)?,
        c: s.f64_or("c", codata::SPEED_OF_LIGHT)?,
        lambda: s.req_f64("lambda")?,
        delta_e: s.f64_or("delta_e", 0.0)?,
        rest_mass_phase: s.bool_or("rest_mass_phase", true)?,
    };
    cfg.validate().map_err(|e| ConfigError::at(s.line, "[physics]", e.to_string()))?;
    Ok(cfg)
}

fn distances(s: &Section) -> Result<Vec<f64>> {
    let list = s.list("distances")?;
    let range = s.list("range")?;
    let values = match (list, range) {
        (Some(v), None) => v,
        (None, Some(r)) if r.len() == 3 && r[2] >= 2.0 && r[2].fract() == 0.0 => {
            let n = r[2] as usize;
            (0..n).map(|k| r[0] + (r[1] - r[0]) * k as f64 / (n - 1) as f64).collect()
        }
        (None, Some(_)) => return Err(ConfigError::missing("[screen].range", "expected `start, stop, count` with count >= 2")),
        _ => return Err(ConfigError::missing("[screen]", "give exactly one of `distances` or `range`")),
    };
    if values.is_empty() || values.iter().any(|z| *z <= 0.0) {
        return Err(ConfigError::missing("[screen]", "distances must be positive"));
    }
    Ok(values)
}

fn source(ini: &Ini) -> Result<SourceBlock> {
    let mut block = SourceBlock {
        a: None,
        b: None,
        packet_sigma: None,
        sigma_z: None,
        calibrate_z: DEFAULT_Z_FIRST_MINIMUM,
        window_samples: DEFAULT_WINDOW_SAMPLES,
    };
    if let Some(s) = ini.section("source") {
        block.a = s.f64("a")?;
        block.b = s.f64("b")?;
        block.packet_sigma = s.f64("packet_sigma")?;
        block.sigma_z = s.f64("sigma_z")?;
        block.calibrate_z = s.f64_or("calibrate_z", block.calibrate_z)?;
        if block.a.is_some() != block.b.is_some() {
            return Err(ConfigError::at(s.line, "[source]", "give both `a` and `b` or neither"));
        }
    }
    if let Some(s) = ini.section("time_average") {
        block.window_samples = s.usize_or("samples", block.window_samples)?;
    }
    Ok(block)
}

fn filter(ini: &Ini) -> Result<FilterBlock> {
    let mut block = FilterBlock {
        z_filter: 30.0,
        z_screen: 80.0,
        reprep_sigma: 1e-3,
        filter: FilterSpec::BranchComparison,
        memory: SpinMemory::Kept,
        downstream_coupling: true,
        alpha2: 0.5,
    };
    if let Some(s) = ini.section("filter") {
        block.z_filter = s.f64_or("z_filter", block.z_filter)?;
        block.z_screen = s.f64_or("z_screen", block.z_screen)?;
        block.reprep_sigma = s.f64_or("reprep_sigma", block.reprep_sigma)?;
        block.downstream_coupling = s.bool_or("downstream_coupling", true)?;
        block.memory = s.choice(
            "memory",
            &[("kept", SpinMemory::Kept), ("equal_populations", SpinMemory::EqualPopulations), ("erased", SpinMemory::Erased)],
            SpinMemory::Kept,
        )?;
        let grating = s.choice("kind", &[("branch", false), ("grating", true)], false)?;
        if grating {
            block.filter =
                FilterSpec::Grating { period: s.req_f64("period")?, duty: s.f64_or("duty", 0.5)?, offset: s.f64_or("offset", 0.0)? };
        }
    }
    if let Some(s) = ini.section("spin") {
        block.alpha2 = s.f64_or("alpha2", 0.5)?;
        if !(0.0..=1.0).contains(&block.alpha2) {
            return Err(ConfigError::missing("[spin].alpha2", "must lie in [0, 1]"));
        }
    }
    Ok(block)
}
