//! Run configuration: one TOML file whose sections mirror the library's
//! parameter types, overridden by `MGRID_<SECTION>_<KEY>` environment
//! variables and then by command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use microgrid::milp::SolveOptions;
use microgrid::pms::PmsConfig;
use microgrid::profiles::{
    pv_power, read_irradiance_csv, read_series_csv, synth_irradiance, synth_load, IrradianceSpec, LoadSpec, TimeSeries, Unit,
};
use microgrid::sizing::{CostModel, DeviceCatalog, Exclusion};

pub const ENV_PREFIX: &str = "MGRID";

/// Where one horizon's profiles come from. With no CSV paths they are
/// synthesised from the `[load]` and `[irradiance]` sections; synthetic
/// irradiance always starts with the load.
#[derive(Debug, Clone, Copy)]
pub struct ProfileSource<'a> {
    pub hours: u32,
    pub step_minutes: u32,
    /// Load in the `timestamp,value,unit` series format.
    pub load_csv: Option<&'a Path>,
    /// Per-unit PV output (kW per kWp) in the series format.
    pub pv_csv: Option<&'a Path>,
    /// Global horizontal irradiance as `timestamp,ghi_wm2`.
    pub irradiance_csv: Option<&'a Path>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SizingSection {
    /// Synthetic horizon; ignored when the load comes from CSV.
    pub hours: u32,
    pub step_minutes: u32,
    pub exclusion: Exclusion,
    pub load_csv: Option<PathBuf>,
    pub pv_csv: Option<PathBuf>,
    pub irradiance_csv: Option<PathBuf>,
}

impl Default for SizingSection {
    fn default() -> Self {
        Self { hours: 24, step_minutes: 60, exclusion: Exclusion::Binary, load_csv: None, pv_csv: None, irradiance_csv: None }
    }
}

impl SizingSection {
    pub fn source(&self) -> ProfileSource<'_> {
        ProfileSource {
            hours: self.hours,
            step_minutes: self.step_minutes,
            load_csv: self.load_csv.as_deref(),
            pv_csv: self.pv_csv.as_deref(),
            irradiance_csv: self.irradiance_csv.as_deref(),
        }
    }
}

/// The simulation step is the controller interval `pms.t_ctrl_min`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSection {
    /// Synthetic horizon; ignored when the load comes from CSV.
    pub hours: u32,
    pub soc0: f64,
    /// Decision file; defaults to `decision.toml` in the output directory.
    pub decision: Option<PathBuf>,
    pub load_csv: Option<PathBuf>,
    pub pv_csv: Option<PathBuf>,
    pub irradiance_csv: Option<PathBuf>,
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self { hours: 8760, soc0: microgrid::sim::DEFAULT_SOC0, decision: None, load_csv: None, pv_csv: None, irradiance_csv: None }
    }
}

impl SimulationSection {
    pub fn source(&self, step_minutes: u32) -> ProfileSource<'_> {
        ProfileSource {
            hours: self.hours,
            step_minutes,
            load_csv: self.load_csv.as_deref(),
            pv_csv: self.pv_csv.as_deref(),
            irradiance_csv: self.irradiance_csv.as_deref(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Source of all randomness: the load generator uses `seed`, the
    /// irradiance generator `seed + 1`.
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub sizing: SizingSection,
    pub simulation: SimulationSection,
    pub load: LoadSpec,
    pub irradiance: IrradianceSpec,
    pub catalog: DeviceCatalog,
    pub costs: CostModel,
    pub pms: PmsConfig,
    pub solve: SolveOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            out: None,
            sizing: SizingSection::default(),
            simulation: SimulationSection::default(),
            load: LoadSpec::default(),
            irradiance: IrradianceSpec::default(),
            catalog: DeviceCatalog::default(),
            costs: CostModel::default(),
            pms: PmsConfig::default(),
            solve: SolveOptions::default(),
        }
    }
}

/// Command-line values that take precedence over file and environment.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub gap: Option<f64>,
    pub time_limit: Option<f64>,
}

/// Parsed configuration plus the directory relative paths resolve against.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: RunConfig,
    pub base: PathBuf,
    pub out: PathBuf,
}

/// 1-based line of `key` inside `[section]` (or at top level when
/// `section` is empty).
fn field_line(source: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, raw) in source.lines().enumerate() {
        let line = raw.trim();
        if let Some(header) = line.strip_prefix('[') {
            current = header.trim_start_matches('[').trim_end_matches(']').trim().to_string();
            continue;
        }
        let in_section = current == section || current.starts_with(&format!("{section}."));
        if in_section && line.split('=').next().map(str::trim) == Some(key) {
            return Some(i + 1);
        }
    }
    None
}

fn located(source: &str, section: &str, message: String) -> anyhow::Error {
    let key = message.split_whitespace().next().unwrap_or("");
    match field_line(source, section, key) {
        Some(line) => anyhow!("[{section}] {message} (line {line})"),
        None => anyhow!("[{section}] {message}"),
    }
}

/// Environment overrides as `(path, raw value, variable)`. Segments are
/// matched against the default configuration's sections; whatever is left
/// is taken as the key, so misspelt keys fail deserialisation.
fn env_overrides(vars: impl Iterator<Item = (String, String)>) -> Vec<(Vec<String>, String, String)> {
    let schema = toml::Table::try_from(RunConfig::default()).expect("default config serialises");
    let mut out: Vec<_> = vars
        .filter_map(|(name, value)| {
            let rest = name.strip_prefix(ENV_PREFIX)?.strip_prefix('_')?.to_ascii_lowercase();
            Some((resolve(&schema, &rest), value, name))
        })
        .collect();
    out.sort();
    out
}

fn resolve(table: &toml::Table, rest: &str) -> Vec<String> {
    if table.get(rest).is_some_and(|v| !v.is_table()) {
        return vec![rest.to_string()];
    }
    let mut sections: Vec<(&String, &toml::Table)> = table.iter().filter_map(|(k, v)| Some((k, v.as_table()?))).collect();
    sections.sort_by_key(|(k, _)| std::cmp::Reverse(k.len()));
    for (key, sub) in sections {
        if let Some(tail) = rest.strip_prefix(key.as_str()).and_then(|t| t.strip_prefix('_')) {
            let mut path = vec![key.clone()];
            path.extend(resolve(sub, tail));
            return path;
        }
    }
    vec![rest.to_string()]
}

fn parse_env_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}")).ok().and_then(|mut t| t.remove("v")).unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn set_path(table: &mut toml::Table, path: &[String], value: toml::Value) -> Result<()> {
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut cur = table;
    for p in parents {
        cur = cur
            .entry(p.clone())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| anyhow!("`{p}` is not a section"))?;
    }
    cur.insert(last.clone(), value);
    Ok(())
}

impl RunConfig {
    /// Parses `source`, applies environment overrides, then `flags`.
    pub fn parse(source: &str, vars: impl Iterator<Item = (String, String)>, flags: &Overrides) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(source).map_err(|e| anyhow!("{e}"))?;
        for (section, key, why) in [
            ("load", "seed", "is derived from the top-level `seed`"),
            ("irradiance", "seed", "is derived from the top-level `seed`"),
            ("irradiance", "start", "follows the load profile"),
        ] {
            if table.get(section).and_then(|s| s.get(key)).is_some() {
                let line = field_line(source, section, key).map(|l| format!(" (line {l})")).unwrap_or_default();
                bail!("[{section}] {key} {why}{line}");
            }
        }
        let overrides = env_overrides(vars);
        let mut config: RunConfig = if overrides.is_empty() {
            toml::from_str(source).map_err(|e| anyhow!("{e}"))?
        } else {
            for (path, raw, _) in &overrides {
                set_path(&mut table, path, parse_env_value(raw))?;
            }
            let names: Vec<&str> = overrides.iter().map(|(_, _, n)| n.as_str()).collect();
            table.try_into().map_err(|e| anyhow!("after environment overrides ({}): {e}", names.join(", ")))?
        };
        if let Some(seed) = flags.seed {
            config.seed = seed;
        }
        if let Some(gap) = flags.gap {
            config.solve.relative_gap = gap;
        }
        if let Some(t) = flags.time_limit {
            config.solve.time_limit = Some(t);
        }
        if flags.out.is_some() {
            config.out = flags.out.clone();
        }
        config.load.seed = config.seed;
        config.irradiance.seed = config.seed.wrapping_add(1);
        config.validate(source)?;
        Ok(config)
    }

    fn validate(&self, source: &str) -> Result<()> {
        self.load.validate().map_err(|e| located(source, "load", e))?;
        self.irradiance.validate().map_err(|e| located(source, "irradiance", e))?;
        self.catalog.validate().map_err(|e| located(source, "catalog", strip_kind(e.to_string())))?;
        self.costs.validate().map_err(|e| located(source, "costs", strip_kind(e.to_string())))?;
        self.pms.validate().map_err(|e| located(source, "pms", strip_kind(e.to_string())))?;
        self.solve.validate().map_err(|e| located(source, "solve", e))?;
        if self.sizing.hours == 0 || self.simulation.hours == 0 {
            bail!("[sizing]/[simulation] hours must be at least 1");
        }
        if self.sizing.step_minutes == 0 || 60 % self.sizing.step_minutes != 0 && self.sizing.step_minutes % 60 != 0 {
            return Err(located(source, "sizing", format!("step_minutes must divide an hour or be whole hours, got {}", self.sizing.step_minutes)));
        }
        if !(self.pms.soc_lim..=1.0).contains(&self.simulation.soc0) {
            return Err(located(source, "simulation", format!("soc0 must lie in [soc_lim, 1], got {}", self.simulation.soc0)));
        }
        if self.sizing.pv_csv.is_some() && self.sizing.irradiance_csv.is_some() {
            bail!("[sizing] pv_csv and irradiance_csv are mutually exclusive");
        }
        if self.simulation.pv_csv.is_some() && self.simulation.irradiance_csv.is_some() {
            bail!("[simulation] pv_csv and irradiance_csv are mutually exclusive");
        }
        Ok(())
    }
}

/// Drops the `invalid argument: ` style prefix of library errors.
fn strip_kind(message: String) -> String {
    match message.split_once(": ") {
        Some((kind, rest)) if kind.starts_with("invalid") => rest.to_string(),
        _ => message,
    }
}

impl Loaded {
    pub fn from_file(path: &Path, flags: &Overrides) -> Result<Self> {
        let source = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let config = RunConfig::parse(&source, std::env::vars(), flags).with_context(|| format!("invalid config {}", path.display()))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let out = config.out.clone().unwrap_or_else(|| PathBuf::from("out"));
        let loaded = Self { config, base, out };
        loaded.check_files()?;
        Ok(loaded)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    fn check_files(&self) -> Result<()> {
        let (sz, sim) = (&self.config.sizing, &self.config.simulation);
        let paths = [&sz.load_csv, &sz.pv_csv, &sz.irradiance_csv, &sim.load_csv, &sim.pv_csv, &sim.irradiance_csv, &sim.decision];
        for p in paths.into_iter().flatten() {
            let full = self.resolve(p);
            if !full.is_file() {
                bail!("referenced file {} does not exist", full.display());
            }
        }
        Ok(())
    }

    fn open(&self, p: &Path) -> Result<fs::File> {
        let full = self.resolve(p);
        fs::File::open(&full).with_context(|| format!("cannot open {}", full.display()))
    }

    /// Load (kW) and per-unit PV series for one horizon.
    pub fn profiles(&self, src: ProfileSource<'_>) -> Result<(TimeSeries, TimeSeries)> {
        let c = &self.config;
        let in_file = |p: &Path| format!("in {}", p.display());
        let load = match src.load_csv {
            Some(p) => read_series_csv(self.open(p)?).with_context(|| in_file(p))?,
            None => synth_load(&c.load, u64::from(src.hours) * 60, src.step_minutes)?,
        };
        if load.unit() != Unit::Kw {
            bail!("load profile must be in kW, got {}", load.unit().tag());
        }
        if load.step_minutes() != src.step_minutes {
            bail!("load is sampled every {} min but {} min is required", load.step_minutes(), src.step_minutes);
        }
        let pv = match (src.pv_csv, src.irradiance_csv) {
            (Some(p), _) => read_series_csv(self.open(p)?).with_context(|| in_file(p))?,
            (None, Some(p)) => {
                let ghi = read_irradiance_csv(self.open(p)?).with_context(|| in_file(p))?;
                pv_power(&ghi, &c.catalog.pv.model, 1.0)?
            }
            (None, None) => {
                let spec = IrradianceSpec { start: load.start(), ..c.irradiance.clone() };
                let minutes = load.len() as u64 * u64::from(src.step_minutes);
                pv_power(&synth_irradiance(&spec, minutes, src.step_minutes)?, &c.catalog.pv.model, 1.0)?
            }
        };
        if !load.is_aligned_with(&pv) {
            bail!(
                "load ({} samples from {}, {} min) and PV ({} samples from {}, {} min) are not aligned",
                load.len(),
                load.start(),
                load.step_minutes(),
                pv.len(),
                pv.start(),
                pv.step_minutes()
            );
        }
        Ok((load, pv))
    }
}
