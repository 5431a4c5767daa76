//! Run-configuration format: a flat, line-oriented key/value text file with
//! repeated `layer { ... }` blocks. Chosen over positional formats so
//! configs diff cleanly; the full grammar is documented in the README.

use crate::environment::{BottomCondition, Environment, Layer, Profile, Source, SourceGeometry};
use crate::kspace::Normalization;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: `{key}` expects {expected}")]
    BadValue {
        line: usize,
        key: String,
        expected: &'static str,
    },
    #[error("line {line}: unexpected `{token}` outside a layer block")]
    UnexpectedToken { line: usize, token: String },
    #[error("line {line}: layer block is missing `{key}`")]
    MissingLayerKey { line: usize, key: &'static str },
    #[error("missing required key `{0}`")]
    MissingKey(&'static str),
    #[error("config defines no layers")]
    NoLayers,
    #[error("`{key}` out of range: {constraint}")]
    Constraint {
        key: &'static str,
        constraint: String,
    },
    #[error("environment rejected: {0}")]
    Env(#[from] crate::environment::EnvError),
}

/// Wavenumber-interval choice: `auto` spans [0, 2 k0] with k0 the largest
/// medium wavenumber in the water column.
#[derive(Debug, Clone, PartialEq)]
pub enum KGridSpec {
    Auto {
        count: usize,
    },
    Manual {
        k_min: f64,
        k_max: f64,
        count: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum DepthSpec {
    Linear {
        z_min: f64,
        z_max: f64,
        count: usize,
    },
    List(Vec<f64>),
}

impl DepthSpec {
    pub fn depths(&self) -> Vec<f64> {
        match self {
            DepthSpec::Linear {
                z_min,
                z_max,
                count,
            } => {
                if *count == 1 {
                    vec![*z_min]
                } else {
                    (0..*count)
                        .map(|i| z_min + (z_max - z_min) * i as f64 / (*count as f64 - 1.0))
                        .collect()
                }
            }
            DepthSpec::List(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RangeSpec {
    pub r_min: f64,
    pub r_max: f64,
    pub count: usize,
}

impl RangeSpec {
    pub fn ranges(&self) -> Vec<f64> {
        if self.count == 1 {
            vec![self.r_min]
        } else {
            (0..self.count)
                .map(|i| {
                    self.r_min + (self.r_max - self.r_min) * i as f64 / (self.count as f64 - 1.0)
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutputSpec {
    pub spectrum_depths: Vec<f64>,
    pub tl_grid: bool,
    pub tl_bin: bool,
    pub tl_lines: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerConfig {
    pub z_top: f64,
    pub z_bot: f64,
    pub c: Profile,
    pub rho: Profile,
    pub alpha: Profile,
    pub order: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub frequency: f64,
    pub source_depth: f64,
    pub geometry: SourceGeometry,
    pub layers: Vec<LayerConfig>,
    pub bottom: BottomCondition,
    pub global_order: usize,
    pub k_grid: KGridSpec,
    pub ranges: RangeSpec,
    pub depths: DepthSpec,
    pub outputs: OutputSpec,
    pub normalization: Normalization,
}

impl RunConfig {
    /// Build the (untagged) environment this configuration describes.
    pub fn environment(&self) -> Result<Environment, ConfigError> {
        let mut layers = Vec::with_capacity(self.layers.len());
        for (i, lc) in self.layers.iter().enumerate() {
            let layer = Layer::new(
                lc.z_top,
                lc.z_bot,
                lc.c.clone(),
                lc.rho.clone(),
                lc.alpha.clone(),
                lc.order.unwrap_or(self.global_order),
            )?;
            // Evaluate every profile across the layer now so that a bad
            // domain (for example a pseudolinear profile crossing zero)
            // fails as a configuration error, not mid-sweep.
            for step in 0..=32 {
                let z = lc.z_top + (lc.z_bot - lc.z_top) * step as f64 / 32.0;
                for (name, profile) in [("c", &lc.c), ("rho", &lc.rho), ("alpha", &lc.alpha)] {
                    profile.eval(z).map_err(|e| ConfigError::Constraint {
                        key: "layer",
                        constraint: format!("layer {i} profile {name} at z = {z}: {e}"),
                    })?;
                }
            }
            layers.push(layer);
        }
        let env = Environment::new(
            layers,
            self.bottom.clone(),
            Source {
                geometry: self.geometry,
                z_s: self.source_depth,
                frequency: self.frequency,
            },
        )?;

        let h = env.total_depth();
        let within = |z: f64| (0.0..=h).contains(&z);
        for &z in &self.outputs.spectrum_depths {
            if !within(z) {
                return Err(ConfigError::Constraint {
                    key: "output spectrum",
                    constraint: format!("probe depth {z} outside [0, {h}]"),
                });
            }
        }
        for &z in &self.outputs.tl_lines {
            if !within(z) {
                return Err(ConfigError::Constraint {
                    key: "output tl_line",
                    constraint: format!("probe depth {z} outside [0, {h}]"),
                });
            }
        }
        for z in self.depths.depths() {
            if !within(z) {
                return Err(ConfigError::Constraint {
                    key: "depths",
                    constraint: format!("receiver depth {z} outside [0, {h}]"),
                });
            }
        }
        if self.ranges.r_min < 1.0 || self.ranges.r_max < self.ranges.r_min || self.ranges.count < 1
        {
            return Err(ConfigError::Constraint {
                key: "ranges",
                constraint: "need 1 <= r_min <= r_max and nr >= 1".into(),
            });
        }
        if self.depths.depths().is_empty() {
            return Err(ConfigError::Constraint {
                key: "depths",
                constraint: "need nz >= 1".into(),
            });
        }
        Ok(env)
    }
}

fn parse_f64(line: usize, key: &str, tok: Option<&str>) -> Result<f64, ConfigError> {
    tok.and_then(|t| t.parse::<f64>().ok())
        .filter(|v| v.is_finite())
        .ok_or(ConfigError::BadValue {
            line,
            key: key.into(),
            expected: "a finite number",
        })
}

fn parse_usize(line: usize, key: &str, tok: Option<&str>) -> Result<usize, ConfigError> {
    tok.and_then(|t| t.parse::<usize>().ok())
        .ok_or(ConfigError::BadValue {
            line,
            key: key.into(),
            expected: "a non-negative integer",
        })
}

fn parse_profile(line: usize, key: &str, toks: &[&str]) -> Result<Profile, ConfigError> {
    let bad = |expected| ConfigError::BadValue {
        line,
        key: key.into(),
        expected,
    };
    match toks.first().copied() {
        Some("constant") => Ok(Profile::Constant(parse_f64(
            line,
            key,
            toks.get(1).copied(),
        )?)),
        Some("munk") => {
            let epsilon = match toks.get(1) {
                Some(t) => t.parse::<f64>().map_err(|_| bad("munk [epsilon]"))?,
                None => 0.00737,
            };
            Ok(Profile::Munk { epsilon })
        }
        Some("pseudolinear") => Ok(Profile::Pseudolinear {
            a: parse_f64(line, key, toks.get(1).copied())?,
            b: parse_f64(line, key, toks.get(2).copied())?,
        }),
        Some("tabulated") => {
            let mut table = Vec::new();
            for t in &toks[1..] {
                let (z, v) = t.split_once(':').ok_or(bad("tabulated z:value pairs"))?;
                let z = z
                    .parse::<f64>()
                    .map_err(|_| bad("tabulated z:value pairs"))?;
                let v = v
                    .parse::<f64>()
                    .map_err(|_| bad("tabulated z:value pairs"))?;
                table.push((z, v));
            }
            if table.len() < 2 {
                return Err(bad("at least two tabulated z:value pairs"));
            }
            Ok(Profile::Tabulated(table))
        }
        _ => Err(bad(
            "constant <v> | munk [eps] | pseudolinear <a> <b> | tabulated z:v ...",
        )),
    }
}

/// Parse the text form. Unknown keys are errors; every layer block must
/// set z_top, z_bot, c, rho and alpha.
pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
    let mut frequency = None;
    let mut source_depth = None;
    let mut geometry = SourceGeometry::Point;
    let mut layers: Vec<LayerConfig> = Vec::new();
    let mut bottom = None;
    let mut global_order = None;
    let mut k_grid = None;
    let mut ranges = None;
    let mut depths = None;
    let mut outputs = OutputSpec::default();
    let mut normalization = Normalization::Standard;

    struct PartialLayer {
        line: usize,
        z_top: Option<f64>,
        z_bot: Option<f64>,
        c: Option<Profile>,
        rho: Option<Profile>,
        alpha: Option<Profile>,
        order: Option<usize>,
    }
    let mut open_layer: Option<PartialLayer> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let toks: Vec<&str> = content.split_whitespace().collect();
        let key = toks[0];
        let rest = &toks[1..];

        if let Some(layer) = open_layer.as_mut() {
            match key {
                "z_top" => layer.z_top = Some(parse_f64(line, key, rest.first().copied())?),
                "z_bot" => layer.z_bot = Some(parse_f64(line, key, rest.first().copied())?),
                "c" => layer.c = Some(parse_profile(line, key, rest)?),
                "rho" => layer.rho = Some(parse_profile(line, key, rest)?),
                "alpha" => layer.alpha = Some(parse_profile(line, key, rest)?),
                "order" => layer.order = Some(parse_usize(line, key, rest.first().copied())?),
                "}" => {
                    let l = open_layer.take().unwrap();
                    let missing = |key| ConfigError::MissingLayerKey { line, key };
                    layers.push(LayerConfig {
                        z_top: l.z_top.ok_or(missing("z_top"))?,
                        z_bot: l.z_bot.ok_or(missing("z_bot"))?,
                        c: l.c.ok_or(missing("c"))?,
                        rho: l.rho.ok_or(missing("rho"))?,
                        alpha: l.alpha.ok_or(missing("alpha"))?,
                        order: l.order,
                    });
                }
                other => {
                    return Err(ConfigError::UnknownKey {
                        line,
                        key: other.into(),
                    });
                }
            }
            continue;
        }

        match key {
            "frequency" => frequency = Some(parse_f64(line, key, rest.first().copied())?),
            "source_depth" => source_depth = Some(parse_f64(line, key, rest.first().copied())?),
            "source_geometry" => {
                geometry = match rest.first().copied() {
                    Some("point") => SourceGeometry::Point,
                    Some("line") => SourceGeometry::Line,
                    _ => {
                        return Err(ConfigError::BadValue {
                            line,
                            key: key.into(),
                            expected: "point | line",
                        })
                    }
                };
            }
            "layer" => {
                if rest.first().copied() != Some("{") {
                    return Err(ConfigError::BadValue {
                        line,
                        key: key.into(),
                        expected: "layer { ... } block",
                    });
                }
                open_layer = Some(PartialLayer {
                    line,
                    z_top: None,
                    z_bot: None,
                    c: None,
                    rho: None,
                    alpha: None,
                    order: None,
                });
            }
            "bottom" => {
                bottom = Some(match rest.first().copied() {
                    Some("pressure_release") => BottomCondition::PressureRelease,
                    Some("rigid") => BottomCondition::Rigid,
                    Some("halfspace") => BottomCondition::Halfspace {
                        c: parse_f64(line, key, rest.get(1).copied())?,
                        rho: parse_f64(line, key, rest.get(2).copied())?,
                        alpha: parse_f64(line, key, rest.get(3).copied())?,
                    },
                    _ => {
                        return Err(ConfigError::BadValue {
                            line,
                            key: key.into(),
                            expected: "pressure_release | rigid | halfspace <c> <rho> <alpha>",
                        })
                    }
                });
            }
            "order" => global_order = Some(parse_usize(line, key, rest.first().copied())?),
            "k_grid" => {
                k_grid = Some(match rest.first().copied() {
                    Some("auto") => KGridSpec::Auto {
                        count: parse_usize(line, key, rest.get(1).copied())?,
                    },
                    Some("manual") => KGridSpec::Manual {
                        k_min: parse_f64(line, key, rest.get(1).copied())?,
                        k_max: parse_f64(line, key, rest.get(2).copied())?,
                        count: parse_usize(line, key, rest.get(3).copied())?,
                    },
                    _ => {
                        return Err(ConfigError::BadValue {
                            line,
                            key: key.into(),
                            expected: "auto <M> | manual <k_min> <k_max> <M>",
                        })
                    }
                });
            }
            "ranges" => {
                ranges = Some(RangeSpec {
                    r_min: parse_f64(line, key, rest.first().copied())?,
                    r_max: parse_f64(line, key, rest.get(1).copied())?,
                    count: parse_usize(line, key, rest.get(2).copied())?,
                });
            }
            "depths" => {
                depths = Some(DepthSpec::Linear {
                    z_min: parse_f64(line, key, rest.first().copied())?,
                    z_max: parse_f64(line, key, rest.get(1).copied())?,
                    count: parse_usize(line, key, rest.get(2).copied())?,
                });
            }
            "depth_list" => {
                let mut v = Vec::new();
                for t in rest {
                    v.push(parse_f64(line, key, Some(t))?);
                }
                depths = Some(DepthSpec::List(v));
            }
            "output" => match rest.first().copied() {
                Some("spectrum") => {
                    outputs
                        .spectrum_depths
                        .push(parse_f64(line, key, rest.get(1).copied())?)
                }
                Some("tl_grid") => outputs.tl_grid = true,
                Some("tl_bin") => outputs.tl_bin = true,
                Some("tl_line") => {
                    outputs
                        .tl_lines
                        .push(parse_f64(line, key, rest.get(1).copied())?)
                }
                _ => {
                    return Err(ConfigError::BadValue {
                        line,
                        key: key.into(),
                        expected: "spectrum <z> | tl_grid | tl_bin | tl_line <z>",
                    })
                }
            },
            "normalization" => {
                normalization = match rest.first().copied() {
                    Some("standard") => Normalization::Standard,
                    Some("line-h0-at-1") => Normalization::LineHankelAtOne,
                    _ => {
                        return Err(ConfigError::BadValue {
                            line,
                            key: key.into(),
                            expected: "standard | line-h0-at-1",
                        })
                    }
                };
            }
            other => {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: other.into(),
                })
            }
        }
    }

    if let Some(l) = open_layer {
        return Err(ConfigError::BadValue {
            line: l.line,
            key: "layer".into(),
            expected: "a closing `}`",
        });
    }
    if layers.is_empty() {
        return Err(ConfigError::NoLayers);
    }

    Ok(RunConfig {
        frequency: frequency.ok_or(ConfigError::MissingKey("frequency"))?,
        source_depth: source_depth.ok_or(ConfigError::MissingKey("source_depth"))?,
        geometry,
        layers,
        bottom: bottom.ok_or(ConfigError::MissingKey("bottom"))?,
        global_order: global_order.ok_or(ConfigError::MissingKey("order"))?,
        k_grid: k_grid.ok_or(ConfigError::MissingKey("k_grid"))?,
        ranges: ranges.ok_or(ConfigError::MissingKey("ranges"))?,
        depths: depths.ok_or(ConfigError::MissingKey("depths"))?,
        outputs,
        normalization,
    })
}

fn write_profile(out: &mut String, key: &str, p: &Profile) {
    match p {
        Profile::Constant(v) => writeln!(out, "  {key} constant {v:?}").unwrap(),
        Profile::Munk { epsilon } => writeln!(out, "  {key} munk {epsilon:?}").unwrap(),
        Profile::Pseudolinear { a, b } => {
            writeln!(out, "  {key} pseudolinear {a:?} {b:?}").unwrap()
        }
        Profile::Tabulated(table) => {
            let pairs: Vec<String> = table.iter().map(|(z, v)| format!("{z:?}:{v:?}")).collect();
            writeln!(out, "  {key} tabulated {}", pairs.join(" ")).unwrap();
        }
    }
}

/// Canonical text form; floats use the shortest exact representation so
/// parse -> serialize -> parse is the identity.
pub fn serialize(cfg: &RunConfig) -> String {
    let mut out = String::new();
    writeln!(out, "frequency {:?}", cfg.frequency).unwrap();
    writeln!(out, "source_depth {:?}", cfg.source_depth).unwrap();
    let geom = match cfg.geometry {
        SourceGeometry::Point => "point",
        SourceGeometry::Line => "line",
    };
    writeln!(out, "source_geometry {geom}").unwrap();
    for layer in &cfg.layers {
        writeln!(out, "layer {{").unwrap();
        writeln!(out, "  z_top {:?}", layer.z_top).unwrap();
        writeln!(out, "  z_bot {:?}", layer.z_bot).unwrap();
        write_profile(&mut out, "c", &layer.c);
        write_profile(&mut out, "rho", &layer.rho);
        write_profile(&mut out, "alpha", &layer.alpha);
        if let Some(order) = layer.order {
            writeln!(out, "  order {order}").unwrap();
        }
        writeln!(out, "}}").unwrap();
    }
    match &cfg.bottom {
        BottomCondition::PressureRelease => writeln!(out, "bottom pressure_release").unwrap(),
        BottomCondition::Rigid => writeln!(out, "bottom rigid").unwrap(),
        BottomCondition::Halfspace { c, rho, alpha } => {
            writeln!(out, "bottom halfspace {c:?} {rho:?} {alpha:?}").unwrap()
        }
    }
    writeln!(out, "order {}", cfg.global_order).unwrap();
    match &cfg.k_grid {
        KGridSpec::Auto { count } => writeln!(out, "k_grid auto {count}").unwrap(),
        KGridSpec::Manual {
            k_min,
            k_max,
            count,
        } => writeln!(out, "k_grid manual {k_min:?} {k_max:?} {count}").unwrap(),
    }
    writeln!(
        out,
        "ranges {:?} {:?} {}",
        cfg.ranges.r_min, cfg.ranges.r_max, cfg.ranges.count
    )
    .unwrap();
    match &cfg.depths {
        DepthSpec::Linear {
            z_min,
            z_max,
            count,
        } => writeln!(out, "depths {z_min:?} {z_max:?} {count}").unwrap(),
        DepthSpec::List(v) => {
            let items: Vec<String> = v.iter().map(|z| format!("{z:?}")).collect();
            writeln!(out, "depth_list {}", items.join(" ")).unwrap();
        }
    }
    for z in &cfg.outputs.spectrum_depths {
        writeln!(out, "output spectrum {z:?}").unwrap();
    }
    if cfg.outputs.tl_grid {
        writeln!(out, "output tl_grid").unwrap();
    }
    if cfg.outputs.tl_bin {
        writeln!(out, "output tl_bin").unwrap();
    }
    for z in &cfg.outputs.tl_lines {
        writeln!(out, "output tl_line {z:?}").unwrap();
    }
    let norm = match cfg.normalization {
        Normalization::Standard => "standard",
        Normalization::LineHankelAtOne => "line-h0-at-1",
    };
    writeln!(out, "normalization {norm}").unwrap();
    out
}
