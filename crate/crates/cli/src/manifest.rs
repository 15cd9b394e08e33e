//! Line-oriented `key = value` manifests: parsing, validation, and the
//! fully-resolved echo that every run writes next to its outputs.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use toeplitz_lab::perturb::{Condition, SequenceKind};
use toeplitz_lab::symbol::Symbol;

use crate::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Spectrum,
    Thresholds,
    Mourre,
    Count,
    Lap,
    Evolve,
    BandRate,
    Probe,
    Preset,
}

impl Experiment {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "spectrum" => Self::Spectrum,
            "thresholds" => Self::Thresholds,
            "mourre" => Self::Mourre,
            "count" => Self::Count,
            "lap" => Self::Lap,
            "evolve" => Self::Evolve,
            "band-rate" => Self::BandRate,
            "probe" => Self::Probe,
            "preset" => Self::Preset,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Spectrum => "spectrum",
            Self::Thresholds => "thresholds",
            Self::Mourre => "mourre",
            Self::Count => "count",
            Self::Lap => "lap",
            Self::Evolve => "evolve",
            Self::BandRate => "band-rate",
            Self::Probe => "probe",
            Self::Preset => "preset",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceSpec {
    HalfLine { n: usize },
    Lattice { dim: usize, radius: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum VectorSpec {
    /// Canonical basis vector at a site (1-based on the half-line, a lattice
    /// multi-index otherwise).
    Site(Vec<i64>),
    /// ψ_n = n^{-p}, normalized (half-line).
    Decay(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProbeSpec {
    Condition(Condition),
    Gsah { s: f64 },
}

/// A parsed and validated manifest with every default filled in.
#[derive(Debug, Clone)]
pub struct Manifest {
    pub experiment: Experiment,
    pub preset_name: Option<String>,
    pub symbol_text: String,
    pub space: SpaceSpec,
    pub potential: Option<Vec<(SequenceKind, String)>>,
    pub rank_one: Vec<(f64, VectorSpec, String)>,
    pub lambda: (f64, f64),
    pub energy: f64,
    pub ladder: Vec<usize>,
    pub times: (f64, f64, usize),
    pub fit_window: (f64, f64),
    pub etas: (f64, f64, usize),
    pub grid: usize,
    pub enlargements: Vec<f64>,
    pub interior_fraction: f64,
    pub state: VectorSpec,
    pub probe: Option<ProbeSpec>,
    pub window: (f64, f64),
    pub r_max: f64,
    pub out: String,
    pub seed: u64,
}

impl Default for Manifest {
    fn default() -> Self {
        Self {
            experiment: Experiment::Spectrum,
            preset_name: None,
            symbol_text: "twocos".into(),
            space: SpaceSpec::HalfLine { n: 512 },
            potential: None,
            rank_one: Vec::new(),
            lambda: (-1.0, 1.0),
            energy: 0.0,
            ladder: vec![256, 512, 1024],
            times: (0.0, 100.0, 4001),
            fit_window: (0.5, 1.0),
            etas: (-1.0, -3.0, 25),
            grid: 4096,
            enlargements: vec![0.1, 0.05, 0.02, 0.01],
            interior_fraction: 0.5,
            state: VectorSpec::Site(vec![1]),
            probe: None,
            window: (1.0, 2.0),
            r_max: 1e4,
            out: "out".into(),
            seed: 0,
        }
    }
}

fn err_at(line: usize, msg: impl Into<String>) -> RunError {
    RunError::Manifest(format!("line {line}: {}", msg.into()))
}

impl Manifest {
    /// Parse manifest text; unknown keys are rejected with their line number.
    pub fn parse(text: &str) -> Result<Self, RunError> {
        let mut m = Manifest::default();
        let mut seen: BTreeMap<String, usize> = BTreeMap::new();
        let mut state_set = false;
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(err_at(lineno, format!("expected `key = value`, got `{line}`")));
            };
            let key = key.trim();
            let value = value.trim();
            if let Some(prev) = seen.insert(key.to_string(), lineno) {
                return Err(err_at(lineno, format!("duplicate key `{key}` (first at line {prev})")));
            }
            match key {
                "experiment" => {
                    m.experiment = Experiment::parse(value)
                        .ok_or_else(|| err_at(lineno, format!("unknown experiment `{value}`")))?;
                }
                "name" => m.preset_name = Some(value.to_string()),
                "symbol" => {
                    parse_symbol(value, m.space_dim())
                        .map_err(|e| err_at(lineno, e))?;
                    m.symbol_text = value.to_string();
                }
                "space" => m.space = parse_space(value).map_err(|e| err_at(lineno, e))?,
                "potential" => {
                    m.potential = Some(parse_potential(value).map_err(|e| err_at(lineno, e))?)
                }
                "rank1" => m.rank_one = parse_rank_one(value).map_err(|e| err_at(lineno, e))?,
                "lambda" => {
                    let v = parse_floats(value).map_err(|e| err_at(lineno, e))?;
                    if v.len() != 2 || v[0] > v[1] {
                        return Err(err_at(lineno, "lambda needs `lo,hi` with lo <= hi"));
                    }
                    m.lambda = (v[0], v[1]);
                }
                "energy" => m.energy = parse_float(value).map_err(|e| err_at(lineno, e))?,
                "ladder" => {
                    m.ladder = value
                        .split(',')
                        .map(|s| s.trim().parse::<usize>())
                        .collect::<Result<_, _>>()
                        .map_err(|_| err_at(lineno, "ladder needs comma-separated integers"))?;
                }
                "times" => m.times = parse_linspace(value).map_err(|e| err_at(lineno, e))?,
                "fit_window" => {
                    let v = parse_floats(value).map_err(|e| err_at(lineno, e))?;
                    if v.len() != 2 || !(0.0..=1.0).contains(&v[0]) || v[0] >= v[1] || v[1] > 1.0 {
                        return Err(err_at(lineno, "fit_window needs fractions `lo,hi` in (0,1]"));
                    }
                    m.fit_window = (v[0], v[1]);
                }
                "etas" => m.etas = parse_logspace(value).map_err(|e| err_at(lineno, e))?,
                "grid" => {
                    m.grid = value
                        .parse()
                        .map_err(|_| err_at(lineno, "grid needs a positive integer"))?;
                }
                "enlargements" => {
                    m.enlargements = parse_floats(value).map_err(|e| err_at(lineno, e))?;
                }
                "interior_fraction" => {
                    m.interior_fraction = parse_float(value).map_err(|e| err_at(lineno, e))?;
                }
                "state" => {
                    m.state = parse_vector(value).map_err(|e| err_at(lineno, e))?;
                    state_set = true;
                }
                "probe" => m.probe = Some(parse_probe(value).map_err(|e| err_at(lineno, e))?),
                "window" => {
                    let v = parse_floats(value).map_err(|e| err_at(lineno, e))?;
                    if v.len() != 2 || v[0] <= 0.0 || v[0] >= v[1] {
                        return Err(err_at(lineno, "window needs `a,b` with 0 < a < b"));
                    }
                    m.window = (v[0], v[1]);
                }
                "r_max" => m.r_max = parse_float(value).map_err(|e| err_at(lineno, e))?,
                "out" => m.out = value.to_string(),
                "seed" => {
                    m.seed = value
                        .parse()
                        .map_err(|_| err_at(lineno, "seed needs an unsigned integer"))?;
                }
                other => return Err(err_at(lineno, format!("unknown key `{other}`"))),
            }
        }
        if !state_set {
            m.state = match m.space {
                SpaceSpec::HalfLine { .. } => VectorSpec::Site(vec![1]),
                SpaceSpec::Lattice { dim, .. } => VectorSpec::Site(vec![0; dim]),
            };
        }
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<(), RunError> {
        // the symbol must parse in the dimension of the space
        let dim = self.space_dim();
        parse_symbol(&self.symbol_text, dim).map_err(RunError::Manifest)?;
        if self.experiment == Experiment::Preset && self.preset_name.is_none() {
            return Err(RunError::Manifest("experiment `preset` needs `name = <preset>`".into()));
        }
        Ok(())
    }

    pub fn space_dim(&self) -> usize {
        match self.space {
            SpaceSpec::HalfLine { .. } => 1,
            SpaceSpec::Lattice { dim, .. } => dim,
        }
    }

    pub fn symbol(&self) -> Symbol {
        parse_symbol(&self.symbol_text, self.space_dim()).expect("validated at parse time")
    }

    /// Fully-resolved echo in fixed key order; parsing it back reproduces the
    /// manifest.
    pub fn resolved_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "experiment = {}", self.experiment.name());
        if let Some(name) = &self.preset_name {
            let _ = writeln!(s, "name = {name}");
        }
        let _ = writeln!(s, "symbol = {}", self.symbol_text);
        match self.space {
            SpaceSpec::HalfLine { n } => {
                let _ = writeln!(s, "space = half-line:{n}");
            }
            SpaceSpec::Lattice { dim, radius } => {
                let _ = writeln!(s, "space = lattice:{dim},{radius}");
            }
        }
        if let Some(pot) = &self.potential {
            let parts: Vec<&str> = pot.iter().map(|(_, text)| text.as_str()).collect();
            let _ = writeln!(s, "potential = {}", parts.join("+"));
        }
        if !self.rank_one.is_empty() {
            let parts: Vec<String> = self
                .rank_one
                .iter()
                .map(|(beta, _, vtext)| format!("beta:{beta} vector:{vtext}"))
                .collect();
            let _ = writeln!(s, "rank1 = {}", parts.join("; "));
        }
        let _ = writeln!(s, "lambda = {},{}", self.lambda.0, self.lambda.1);
        let _ = writeln!(s, "energy = {}", self.energy);
        let ladder: Vec<String> = self.ladder.iter().map(|n| n.to_string()).collect();
        let _ = writeln!(s, "ladder = {}", ladder.join(","));
        let _ = writeln!(s, "times = linspace:{},{},{}", self.times.0, self.times.1, self.times.2);
        let _ = writeln!(s, "fit_window = {},{}", self.fit_window.0, self.fit_window.1);
        let _ = writeln!(s, "etas = logspace:{},{},{}", self.etas.0, self.etas.1, self.etas.2);
        let _ = writeln!(s, "grid = {}", self.grid);
        let enl: Vec<String> = self.enlargements.iter().map(|m| m.to_string()).collect();
        let _ = writeln!(s, "enlargements = {}", enl.join(","));
        let _ = writeln!(s, "interior_fraction = {}", self.interior_fraction);
        let _ = writeln!(s, "state = {}", vector_text(&self.state));
        if let Some(p) = &self.probe {
            match p {
                ProbeSpec::Condition(c) => {
                    let _ = writeln!(s, "probe = condition:{c}");
                }
                ProbeSpec::Gsah { s: pow } => {
                    let _ = writeln!(s, "probe = gsah:{pow}");
                }
            }
        }
        let _ = writeln!(s, "window = {},{}", self.window.0, self.window.1);
        let _ = writeln!(s, "r_max = {}", self.r_max);
        let _ = writeln!(s, "out = {}", self.out);
        let _ = writeln!(s, "seed = {}", self.seed);
        s
    }
}

fn vector_text(v: &VectorSpec) -> String {
    match v {
        VectorSpec::Site(site) => {
            let coords: Vec<String> = site.iter().map(|c| c.to_string()).collect();
            format!("site:{}", coords.join(","))
        }
        VectorSpec::Decay(p) => format!("decay:{p}"),
    }
}

fn parse_float(s: &str) -> Result<f64, String> {
    s.trim().parse().map_err(|_| format!("bad float `{s}`"))
}

fn parse_floats(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(parse_float).collect()
}

fn parse_linspace(s: &str) -> Result<(f64, f64, usize), String> {
    let body = s.strip_prefix("linspace:").ok_or("times needs `linspace:t0,t1,count`")?;
    let parts: Vec<&str> = body.split(',').collect();
    if parts.len() != 3 {
        return Err("times needs `linspace:t0,t1,count`".into());
    }
    let t0 = parse_float(parts[0])?;
    let t1 = parse_float(parts[1])?;
    let count: usize = parts[2].trim().parse().map_err(|_| "bad count")?;
    if count < 2 || t1 <= t0 {
        return Err("times needs t1 > t0 and count >= 2".into());
    }
    Ok((t0, t1, count))
}

fn parse_logspace(s: &str) -> Result<(f64, f64, usize), String> {
    let body = s.strip_prefix("logspace:").ok_or("etas needs `logspace:e0,e1,count`")?;
    let parts: Vec<&str> = body.split(',').collect();
    if parts.len() != 3 {
        return Err("etas needs `logspace:e0,e1,count` (base-10 exponents)".into());
    }
    let e0 = parse_float(parts[0])?;
    let e1 = parse_float(parts[1])?;
    let count: usize = parts[2].trim().parse().map_err(|_| "bad count")?;
    if count < 2 {
        return Err("etas needs count >= 2".into());
    }
    Ok((e0, e1, count))
}

fn parse_space(s: &str) -> Result<SpaceSpec, String> {
    if let Some(n) = s.strip_prefix("half-line:") {
        let n: usize = n.trim().parse().map_err(|_| "bad truncation")?;
        if n == 0 {
            return Err("truncation must be positive".into());
        }
        return Ok(SpaceSpec::HalfLine { n });
    }
    if let Some(body) = s.strip_prefix("lattice:") {
        let parts: Vec<&str> = body.split(',').collect();
        if parts.len() != 2 {
            return Err("lattice needs `lattice:d,N`".into());
        }
        let dim: usize = parts[0].trim().parse().map_err(|_| "bad dimension")?;
        let radius: usize = parts[1].trim().parse().map_err(|_| "bad radius")?;
        if dim == 0 || radius == 0 {
            return Err("lattice dimension and radius must be positive".into());
        }
        return Ok(SpaceSpec::Lattice { dim, radius });
    }
    Err(format!("unknown space `{s}` (use half-line:N or lattice:d,N)"))
}

/// Named symbols plus a generic coefficient list.
pub fn parse_symbol(s: &str, dim: usize) -> Result<Symbol, String> {
    match s {
        "twocos" => {
            if dim != 1 {
                return Err("symbol `twocos` is one-dimensional".into());
            }
            Ok(Symbol::two_cos())
        }
        "twocos+cos2" => {
            if dim != 1 {
                return Err("symbol `twocos+cos2` is one-dimensional".into());
            }
            Symbol::from_coefficients(
                &[
                    (vec![1], Complex64::new(1.0, 0.0)),
                    (vec![-1], Complex64::new(1.0, 0.0)),
                    (vec![2], Complex64::new(0.5, 0.0)),
                    (vec![-2], Complex64::new(0.5, 0.0)),
                ],
                1,
            )
            .map_err(|e| e.to_string())
        }
        "laplacian" => Symbol::laplacian(dim).map_err(|e| e.to_string()),
        other => {
            let body = other
                .strip_prefix("coeffs:")
                .ok_or_else(|| format!("unknown symbol `{other}`"))?;
            let mut entries = Vec::new();
            for part in body.split(';') {
                let part = part.trim();
                if part.is_empty() {
                    continue;
                }
                let (idx, val) = part
                    .split_once('=')
                    .ok_or_else(|| format!("coefficient needs `i1,..,id=re[,im]`: `{part}`"))?;
                let alpha: Vec<i64> = idx
                    .split(',')
                    .map(|c| c.trim().parse::<i64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| format!("bad index in `{part}`"))?;
                let nums: Vec<f64> = val
                    .split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| format!("bad value in `{part}`"))?;
                let c = match nums.len() {
                    1 => Complex64::new(nums[0], 0.0),
                    2 => Complex64::new(nums[0], nums[1]),
                    _ => return Err(format!("value needs 1 or 2 numbers in `{part}`")),
                };
                entries.push((alpha, c));
            }
            Symbol::from_coefficients(&entries, dim).map_err(|e| e.to_string())
        }
    }
}

fn parse_potential(s: &str) -> Result<Vec<(SequenceKind, String)>, String> {
    let mut out = Vec::new();
    for part in s.split('+') {
        let part = part.trim();
        let (kind, arg) = part
            .split_once(':')
            .ok_or_else(|| format!("potential term needs `kind:args`: `{part}`"))?;
        let spec = match kind {
            "power" => SequenceKind::Power { p: parse_float(arg)? },
            "logpow" => SequenceKind::LogPower { p: parse_float(arg)? },
            "oscillatory" => SequenceKind::Oscillatory { p: parse_float(arg)? },
            "alttail" => SequenceKind::AlternatingTail { p: parse_float(arg)? },
            "explicit" => SequenceKind::Explicit(parse_floats(arg)?),
            "sparse" => {
                let mut support = Vec::new();
                let mut values = Vec::new();
                for entry in arg.split(',') {
                    let (n, v) = entry
                        .split_once('=')
                        .ok_or_else(|| format!("sparse entry needs `n=v`: `{entry}`"))?;
                    support.push(n.trim().parse::<usize>().map_err(|_| "bad sparse index")?);
                    values.push(parse_float(v)?);
                }
                SequenceKind::Sparse { support, values }
            }
            other => return Err(format!("unknown potential kind `{other}`")),
        };
        out.push((spec, part.to_string()));
    }
    Ok(out)
}

fn parse_vector(s: &str) -> Result<VectorSpec, String> {
    if let Some(body) = s.strip_prefix("site:") {
        let site: Vec<i64> = body
            .split(',')
            .map(|c| c.trim().parse::<i64>())
            .collect::<Result<_, _>>()
            .map_err(|_| format!("bad site `{body}`"))?;
        return Ok(VectorSpec::Site(site));
    }
    if let Some(body) = s.strip_prefix('e') {
        if let Ok(k) = body.parse::<i64>() {
            return Ok(VectorSpec::Site(vec![k]));
        }
    }
    if let Some(p) = s.strip_prefix("decay:") {
        return Ok(VectorSpec::Decay(parse_float(p)?));
    }
    Err(format!("unknown vector `{s}` (use eK, site:i1[,i2..], or decay:p)"))
}

fn parse_rank_one(s: &str) -> Result<Vec<(f64, VectorSpec, String)>, String> {
    let mut out = Vec::new();
    for clause in s.split(';') {
        let clause = clause.trim();
        if clause.is_empty() {
            continue;
        }
        let mut beta = None;
        let mut vector = None;
        let mut vtext = String::new();
        for token in clause.split_whitespace() {
            if let Some(b) = token.strip_prefix("beta:") {
                beta = Some(parse_float(b)?);
            } else if let Some(v) = token.strip_prefix("vector:") {
                vector = Some(parse_vector(v)?);
                vtext = v.to_string();
            } else {
                return Err(format!("unknown rank1 token `{token}`"));
            }
        }
        match (beta, vector) {
            (Some(b), Some(v)) => out.push((b, v, vtext)),
            _ => return Err(format!("rank1 clause needs `beta:B vector:V`: `{clause}`")),
        }
    }
    Ok(out)
}

fn parse_probe(s: &str) -> Result<ProbeSpec, String> {
    if let Some(c) = s.strip_prefix("condition:") {
        let cond = match c.trim() {
            "S" => Condition::S,
            "M" => Condition::M,
            "L" => Condition::L,
            "H" => Condition::H,
            other => return Err(format!("unknown condition `{other}`")),
        };
        return Ok(ProbeSpec::Condition(cond));
    }
    if let Some(p) = s.strip_prefix("gsah:") {
        return Ok(ProbeSpec::Gsah { s: parse_float(p)? });
    }
    Err(format!("unknown probe `{s}` (use condition:S|M|L|H or gsah:s)"))
}
