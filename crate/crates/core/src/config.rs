//! Run configuration: a TOML document with `[model]`, `[chain]`,
//! `[output]`, `[caps]` and `[contours]` sections, plus dotted `--key value`
//! overrides. Unknown keys are errors.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::contour::{Adjacency, BklEpsilon};
use crate::error::{Error, Result};
use crate::exact::{ExactMethod, DEFAULT_EDGE_CAP, DEFAULT_SPIN_CAP};
use crate::mc::{BoundaryMode, ChainConfig, KernelKind, Start};
use crate::rc::selfdual_coupling;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Enumerate,
    Sample,
    Robustness,
    Diagonal,
    FkgCheck,
    Contours,
    BklCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Enumerate => "enumerate",
            Command::Sample => "sample",
            Command::Robustness => "robustness",
            Command::Diagonal => "diagonal",
            Command::FkgCheck => "fkg-check",
            Command::Contours => "contours",
            Command::BklCheck => "bkl-check",
        }
    }
}

impl std::str::FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Command::Enumerate,
            Command::Sample,
            Command::Robustness,
            Command::Diagonal,
            Command::FkgCheck,
            Command::Contours,
            Command::BklCheck,
        ]
        .into_iter()
        .find(|c| c.name() == s)
        .ok_or_else(|| Error::config("command", format!("unknown command {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeName {
    Free,
    WiredGhost,
    WeaklyWiredGhost,
    WeaklyWiredAnnulus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodName {
    BruteForce,
    Frontier,
}

/// Coupling as written: a number, or the self-dual point of each q.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Coupling {
    SelfDual,
    Value(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub dim: usize,
    pub sides: Vec<usize>,
    pub qs: Vec<usize>,
    pub coupling: Coupling,
    pub j_factor: f64,
    pub epsilons: Vec<f64>,
    pub radius: Option<usize>,
    pub mode: ModeName,
    pub annulus_width: Option<usize>,
    pub method: MethodName,
}

impl ModelConfig {
    /// Numeric coupling for `q`, including `j_factor`.
    pub fn coupling_for(&self, q: usize) -> Result<f64> {
        let base = match self.coupling {
            Coupling::SelfDual => selfdual_coupling(q as f64)?,
            Coupling::Value(j) => j,
        };
        Ok(base * self.j_factor)
    }

    pub fn boundary_mode(&self) -> BoundaryMode {
        match self.mode {
            ModeName::Free => BoundaryMode::Free,
            ModeName::WiredGhost => BoundaryMode::WiredGhost,
            ModeName::WeaklyWiredGhost => BoundaryMode::WeaklyWiredGhost,
            ModeName::WeaklyWiredAnnulus => BoundaryMode::WeaklyWiredAnnulus {
                width: self.annulus_width,
            },
        }
    }

    pub fn exact_method(&self, edge_cap: usize) -> ExactMethod {
        match self.method {
            MethodName::BruteForce => ExactMethod::BruteForce { cap: edge_cap },
            MethodName::Frontier => ExactMethod::Frontier,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainBlock {
    pub sweeps: u64,
    pub burn_in: u64,
    pub thinning: u64,
    pub seed: u64,
    pub streams: u64,
    pub batches: usize,
    pub start: Start,
    pub kernel: KernelKind,
}

impl ChainBlock {
    pub fn chain_config(&self, mode: BoundaryMode) -> ChainConfig {
        ChainConfig {
            sweeps: self.sweeps,
            burn_in: self.burn_in,
            thinning: self.thinning,
            seed: self.seed,
            stream: 0,
            batches: self.batches,
            mode,
            start: self.start,
            kernel: self.kernel,
            record_edges: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub csv: bool,
    pub json: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Caps {
    pub edges: usize,
    pub spins: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContourConfig {
    pub c_panel: Vec<f64>,
    pub min_count: u64,
    pub adjacency: Adjacency,
    pub bkl_epsilon: BklEpsilon,
}

/// A fully resolved configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub model: ModelConfig,
    pub chain: ChainBlock,
    pub output: OutputConfig,
    pub caps: Caps,
    pub contours: ContourConfig,
}

// Raw document layout. Every key is optional; defaults are applied during
// resolution.

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    command: Option<Command>,
    #[serde(default)]
    model: RawModel,
    #[serde(default)]
    chain: RawChain,
    #[serde(default)]
    output: RawOutput,
    #[serde(default)]
    caps: RawCaps,
    #[serde(default)]
    contours: RawContours,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum NumberOrName {
    Number(f64),
    Name(String),
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    #[serde(skip_serializing_if = "Option::is_none")]
    d: Option<usize>,
    #[serde(rename = "L", skip_serializing_if = "Option::is_none")]
    side: Option<usize>,
    #[serde(rename = "L_list", skip_serializing_if = "Option::is_none")]
    side_list: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    q: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    q_list: Option<Vec<usize>>,
    #[serde(rename = "J", skip_serializing_if = "Option::is_none")]
    coupling: Option<NumberOrName>,
    #[serde(rename = "J_factor", skip_serializing_if = "Option::is_none")]
    j_factor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon_list: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    r: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mode: Option<ModeName>,
    #[serde(skip_serializing_if = "Option::is_none")]
    annulus_width: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    method: Option<MethodName>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChain {
    #[serde(skip_serializing_if = "Option::is_none")]
    sweeps: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    burn_in: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    thinning: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    streams: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    batches: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    start: Option<Start>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kernel: Option<KernelKind>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    #[serde(skip_serializing_if = "Option::is_none")]
    dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    formats: Option<Vec<String>>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCaps {
    #[serde(skip_serializing_if = "Option::is_none")]
    edges: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    spins: Option<u64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawContours {
    #[serde(skip_serializing_if = "Option::is_none")]
    c_panel: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    min_count: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    adjacency: Option<Adjacency>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bkl_epsilon: Option<NumberOrName>,
}

const SECTIONS: [&str; 5] = ["model", "chain", "output", "caps", "contours"];

/// Parses a configuration document. `command` may be absent when the
/// caller supplies it (e.g. from a CLI subcommand).
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_with(text, None, &[])
}

/// Parses `text`, applies `overrides` in order, and uses `command` when
/// given in place of the document's `command` key.
pub fn parse_with(
    text: &str,
    command: Option<Command>,
    overrides: &[(String, String)],
) -> Result<RunConfig> {
    let mut table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::ConfigSyntax(e.to_string()))?;
    for (key, value) in overrides {
        apply_override(&mut table, key, value)?;
    }
    if let Some(c) = command {
        table.insert("command".into(), toml::Value::String(c.name().into()));
    }
    let raw: RawConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| Error::ConfigSyntax(e.to_string()))?;
    resolve(raw)
}

/// Sets `key` (either `section.key` or a bare key, which must be unique
/// across sections) to `value`, read as a TOML value when it parses as one
/// and as a string otherwise.
pub fn apply_override(table: &mut toml::Table, key: &str, value: &str) -> Result<()> {
    let (section, name) = match key.split_once('.') {
        Some((s, n)) => {
            if !SECTIONS.contains(&s) {
                return Err(Error::config(key, format!("unknown section {s:?}")));
            }
            (Some(s), n)
        }
        None if key == "command" => (None, key),
        None => (Some(section_of(key)?), key),
    };
    if name.is_empty() || name.contains('.') {
        return Err(Error::config(key, "malformed key"));
    }
    let parsed = format!("v = {value}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));
    match section {
        None => {
            table.insert(name.to_string(), parsed);
        }
        Some(s) => {
            let entry = table
                .entry(s.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            match entry {
                toml::Value::Table(t) => {
                    t.insert(name.to_string(), parsed);
                }
                _ => return Err(Error::config(s, "must be a table")),
            }
        }
    }
    Ok(())
}

fn section_of(key: &str) -> Result<&'static str> {
    const KEYS: [(&str, &[&str]); 5] = [
        (
            "model",
            &[
                "d",
                "L",
                "L_list",
                "q",
                "q_list",
                "J",
                "J_factor",
                "epsilon",
                "epsilon_list",
                "r",
                "mode",
                "annulus_width",
                "method",
            ],
        ),
        (
            "chain",
            &[
                "sweeps", "burn_in", "thinning", "seed", "streams", "batches", "start", "kernel",
            ],
        ),
        ("output", &["dir", "formats"]),
        ("caps", &["edges", "spins"]),
        (
            "contours",
            &["c_panel", "min_count", "adjacency", "bkl_epsilon"],
        ),
    ];
    KEYS.iter()
        .find(|(_, keys)| keys.contains(&key))
        .map(|(s, _)| *s)
        .ok_or_else(|| Error::config(key, "unknown key"))
}

fn one_or_list<T: Clone>(
    key: &str,
    one: Option<T>,
    list: Option<Vec<T>>,
    default: Vec<T>,
) -> Result<Vec<T>> {
    match (one, list) {
        (Some(_), Some(_)) => Err(Error::config(
            key,
            format!("give either {key} or {key}_list, not both"),
        )),
        (Some(x), None) => Ok(vec![x]),
        (None, Some(xs)) if xs.is_empty() => {
            Err(Error::config(format!("{key}_list"), "must not be empty"))
        }
        (None, Some(xs)) => Ok(xs),
        (None, None) => Ok(default),
    }
}

fn resolve(raw: RawConfig) -> Result<RunConfig> {
    let command = raw
        .command
        .ok_or_else(|| Error::config("command", "no command given"))?;
    let m = raw.model;
    let dim = m.d.unwrap_or(2);
    if dim == 0 {
        return Err(Error::config("model.d", "d must be at least 1"));
    }
    let sides = one_or_list("L", m.side, m.side_list, vec![9])?;
    let qs = one_or_list("q", m.q, m.q_list, vec![25])?;
    let epsilons = one_or_list("epsilon", m.epsilon, m.epsilon_list, vec![1.0])?;
    let mode = m.mode.unwrap_or(ModeName::WeaklyWiredGhost);
    let coupling = match m.coupling {
        None => Coupling::SelfDual,
        Some(NumberOrName::Name(s)) if s == "selfdual" => Coupling::SelfDual,
        Some(NumberOrName::Name(s)) => {
            return Err(Error::config(
                "model.J",
                format!("expected a number or \"selfdual\", got {s:?}"),
            ))
        }
        Some(NumberOrName::Number(j)) => Coupling::Value(j),
    };
    let j_factor = m.j_factor.unwrap_or(1.0);

    if sides.contains(&0) {
        return Err(Error::config("model.L", "L must be at least 1"));
    }
    let cutset = matches!(
        mode,
        ModeName::WeaklyWiredGhost | ModeName::WeaklyWiredAnnulus
    ) || m.r.is_some();
    if let Some(&even) = sides.iter().find(|&&l| l % 2 == 0).filter(|_| cutset) {
        return Err(Error::config(
            "model.L",
            format!("L must be odd when a cutset is requested, got {even}"),
        ));
    }
    if matches!(command, Command::Robustness | Command::Diagonal)
        && sides.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(Error::config(
            "model.L_list",
            "sizes must be strictly increasing",
        ));
    }
    if qs.iter().any(|&q| q == 0 || q >= u16::MAX as usize) {
        return Err(Error::config("model.q", "q must be an integer in 1..65535"));
    }
    if let Some(&bad) = epsilons.iter().find(|e| !(0.0..=1.0).contains(*e)) {
        return Err(Error::config(
            "model.epsilon",
            format!("ε must lie in [0,1], got {bad}"),
        ));
    }
    match coupling {
        Coupling::SelfDual if dim != 2 => {
            return Err(Error::config(
                "model.J",
                "\"selfdual\" is only defined for d = 2; give J explicitly",
            ))
        }
        Coupling::Value(j) if !(j.is_finite() && j >= 0.0) => {
            return Err(Error::config(
                "model.J",
                format!("J must be a finite non-negative number, got {j}"),
            ))
        }
        _ => {}
    }
    if !(j_factor.is_finite() && j_factor >= 0.0) {
        return Err(Error::config(
            "model.J_factor",
            "must be a finite non-negative number",
        ));
    }
    if m.annulus_width.is_some() && mode != ModeName::WeaklyWiredAnnulus {
        return Err(Error::config(
            "model.annulus_width",
            "only applies to mode = \"weakly-wired-annulus\"",
        ));
    }
    if matches!(command, Command::Contours | Command::BklCheck) && dim != 2 {
        return Err(Error::config("model.d", "contour analysis needs d = 2"));
    }
    if command == Command::BklCheck && qs.iter().any(|&q| q < 2) {
        return Err(Error::config(
            "model.q",
            "the constrained check needs q >= 2",
        ));
    }

    let c = raw.chain;
    let chain = ChainBlock {
        sweeps: c.sweeps.unwrap_or(110_000),
        burn_in: c.burn_in.unwrap_or(10_000),
        thinning: c.thinning.unwrap_or(1),
        seed: c.seed.unwrap_or(0),
        streams: c.streams.unwrap_or(1),
        batches: c.batches.unwrap_or(20),
        start: c.start.unwrap_or_default(),
        kernel: c.kernel.unwrap_or_default(),
    };
    if chain.burn_in >= chain.sweeps {
        return Err(Error::config(
            "chain.burn_in",
            "burn-in must be smaller than sweeps",
        ));
    }
    if chain.thinning == 0 {
        return Err(Error::config(
            "chain.thinning",
            "thinning must be at least 1",
        ));
    }
    if chain.streams == 0 {
        return Err(Error::config("chain.streams", "streams must be at least 1"));
    }
    if chain.batches < 20 {
        return Err(Error::config("chain.batches", "need at least 20 batches"));
    }
    if (chain.sweeps - chain.burn_in).div_ceil(chain.thinning) < chain.batches as u64 {
        return Err(Error::config(
            "chain.sweeps",
            "too few recorded samples to fill the batches",
        ));
    }

    let formats = raw
        .output
        .formats
        .unwrap_or_else(|| vec!["csv".into(), "json".into()]);
    if let Some(bad) = formats.iter().find(|f| *f != "csv" && *f != "json") {
        return Err(Error::config(
            "output.formats",
            format!("unknown format {bad:?}; use csv and/or json"),
        ));
    }
    let output = OutputConfig {
        dir: raw.output.dir.unwrap_or_else(|| PathBuf::from("out")),
        csv: formats.iter().any(|f| f == "csv"),
        json: formats.iter().any(|f| f == "json"),
    };
    let caps = Caps {
        edges: raw.caps.edges.unwrap_or(DEFAULT_EDGE_CAP),
        spins: raw.caps.spins.unwrap_or(DEFAULT_SPIN_CAP),
    };

    let k = raw.contours;
    let bkl_epsilon = match k.bkl_epsilon {
        None => BklEpsilon::Bond,
        Some(NumberOrName::Name(s)) if s == "bond" => BklEpsilon::Bond,
        Some(NumberOrName::Name(s)) => {
            return Err(Error::config(
                "contours.bkl_epsilon",
                format!("expected \"bond\" or a number, got {s:?}"),
            ))
        }
        Some(NumberOrName::Number(x)) if (0.0..1.0).contains(&x) => BklEpsilon::Fixed(x),
        Some(NumberOrName::Number(x)) => {
            return Err(Error::config(
                "contours.bkl_epsilon",
                format!("must lie in [0,1), got {x}"),
            ))
        }
    };
    let c_panel = k.c_panel.unwrap_or_else(|| vec![1.0, 2.0, 3.0]);
    if c_panel.is_empty() || c_panel.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
        return Err(Error::config(
            "contours.c_panel",
            "needs one or more finite positive constants",
        ));
    }
    let contours = ContourConfig {
        c_panel,
        min_count: k.min_count.unwrap_or(5),
        adjacency: k.adjacency.unwrap_or_default(),
        bkl_epsilon,
    };

    Ok(RunConfig {
        command,
        model: ModelConfig {
            dim,
            sides,
            qs,
            coupling,
            j_factor,
            epsilons,
            radius: m.r,
            mode,
            annulus_width: m.annulus_width,
            method: m.method.unwrap_or(MethodName::BruteForce),
        },
        chain,
        output,
        caps,
        contours,
    })
}

/// Writes a resolved configuration back as a TOML document that parses to
/// the same configuration.
pub fn emit_config(cfg: &RunConfig) -> Result<String> {
    let m = &cfg.model;
    let raw = RawConfig {
        command: Some(cfg.command),
        model: RawModel {
            d: Some(m.dim),
            side: None,
            side_list: Some(m.sides.clone()),
            q: None,
            q_list: Some(m.qs.clone()),
            coupling: Some(match m.coupling {
                Coupling::SelfDual => NumberOrName::Name("selfdual".into()),
                Coupling::Value(j) => NumberOrName::Number(j),
            }),
            j_factor: Some(m.j_factor),
            epsilon: None,
            epsilon_list: Some(m.epsilons.clone()),
            r: m.radius,
            mode: Some(m.mode),
            annulus_width: m.annulus_width,
            method: Some(m.method),
        },
        chain: RawChain {
            sweeps: Some(cfg.chain.sweeps),
            burn_in: Some(cfg.chain.burn_in),
            thinning: Some(cfg.chain.thinning),
            seed: Some(cfg.chain.seed),
            streams: Some(cfg.chain.streams),
            batches: Some(cfg.chain.batches),
            start: Some(cfg.chain.start),
            kernel: Some(cfg.chain.kernel),
        },
        output: RawOutput {
            dir: Some(cfg.output.dir.clone()),
            formats: Some(
                [("csv", cfg.output.csv), ("json", cfg.output.json)]
                    .into_iter()
                    .filter(|(_, on)| *on)
                    .map(|(f, _)| f.to_string())
                    .collect(),
            ),
        },
        caps: RawCaps {
            edges: Some(cfg.caps.edges),
            spins: Some(cfg.caps.spins),
        },
        contours: RawContours {
            c_panel: Some(cfg.contours.c_panel.clone()),
            min_count: Some(cfg.contours.min_count),
            adjacency: Some(cfg.contours.adjacency),
            bkl_epsilon: Some(match cfg.contours.bkl_epsilon {
                BklEpsilon::Bond => NumberOrName::Name("bond".into()),
                BklEpsilon::Fixed(x) => NumberOrName::Number(x),
            }),
        },
    };
    toml::to_string(&raw).map_err(|e| Error::ConfigSyntax(e.to_string()))
}
