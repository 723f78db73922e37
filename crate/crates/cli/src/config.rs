//! Flat `key = value` run configuration, keys namespaced with dots.
//!
//! Blank lines and lines starting with `#` are ignored. Duplicate and
//! unknown keys are rejected so typos surface as config errors.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(format!("line {}: expected 'key = value'", idx + 1));
        };
        let key = k.trim().to_string();
        if key.is_empty() {
            return Err(format!("line {}: empty key", idx + 1));
        }
        if map.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(format!("line {}: duplicate key '{key}'", idx + 1));
        }
    }
    Ok(map)
}

struct Reader {
    map: BTreeMap<String, String>,
    used: BTreeSet<String>,
}

impl Reader {
    fn get(&mut self, key: &str) -> Option<String> {
        let v = self.map.get(key).cloned();
        if v.is_some() {
            self.used.insert(key.to_string());
        }
        v
    }

    fn require(&mut self, key: &str) -> Result<String, String> {
        self.get(key).ok_or_else(|| format!("missing key '{key}'"))
    }

    fn f64(&mut self, key: &str) -> Result<Option<f64>, String> {
        self.get(key)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| format!("key '{key}': cannot parse '{v}' as a number"))
            })
            .transpose()
    }

    fn f64_or(&mut self, key: &str, default: f64) -> Result<f64, String> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    fn require_f64(&mut self, key: &str) -> Result<f64, String> {
        self.f64(key)?.ok_or_else(|| format!("missing key '{key}'"))
    }

    fn usize_or(&mut self, key: &str, default: usize) -> Result<usize, String> {
        self.get(key)
            .map(|v| {
                v.parse::<usize>()
                    .map_err(|_| format!("key '{key}': cannot parse '{v}' as an integer"))
            })
            .transpose()
            .map(|o| o.unwrap_or(default))
    }

    fn bool_or(&mut self, key: &str, default: bool) -> Result<bool, String> {
        match self.get(key).as_deref() {
            None => Ok(default),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(v) => Err(format!("key '{key}': expected true or false, got '{v}'")),
        }
    }

    fn finish(self) -> Result<(), String> {
        let unknown: Vec<String> = self
            .map
            .keys()
            .filter(|k| !self.used.contains(*k))
            .cloned()
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(format!("unknown keys: {}", unknown.join(", ")))
        }
    }
}

#[derive(Debug, Clone)]
pub enum DampingConfig {
    Constant(f64),
    Sinusoidal {
        base: f64,
        amplitude: f64,
        omega: f64,
        spatial: bool,
    },
    /// CSV file, one row per frame: `t,v0,v1,...` over the interior nodes.
    Tabulated(PathBuf),
    TwoPlusSin,
    Rational {
        m0: f64,
        m1: f64,
    },
    Counterexample,
}

#[derive(Debug, Clone)]
pub enum Lambda1Source {
    Analytic,
    Discrete,
    Value(f64),
}

#[derive(Debug, Clone)]
pub enum EpsPolicy {
    Certificate,
    Value(f64),
}

#[derive(Debug, Clone)]
pub enum InitialData {
    Zero,
    Sine { modes: Vec<usize>, amplitude: f64 },
    File(PathBuf),
}

#[derive(Debug, Clone)]
pub struct RunSpec {
    pub lengths: Vec<f64>,
    pub offsets: Vec<f64>,
    pub points: Vec<usize>,
    pub damping: DampingConfig,
    pub bounds: Option<(f64, f64)>,
    pub lambda1: Lambda1Source,
    pub eps: EpsPolicy,
    pub u0: InitialData,
    pub u1: InitialData,
    pub t_end: f64,
    pub cfl_factor: f64,
    pub sample_every: usize,
    pub trace_path: PathBuf,
    pub report_path: PathBuf,
    pub bound_tol: f64,
    pub fit_lo: Option<f64>,
    pub fit_hi: Option<f64>,
}

fn parse_modes(v: &str) -> Result<Vec<usize>, String> {
    v.split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| format!("cannot parse mode number '{p}'"))
        })
        .collect()
}

fn parse_initial(
    r: &mut Reader,
    key: &str,
    default_kind: &str,
    dimension: usize,
) -> Result<InitialData, String> {
    let kind = r.get(key).unwrap_or_else(|| default_kind.to_string());
    let amplitude = r.f64_or(&format!("{key}_amplitude"), 1.0)?;
    let modes = match r.get(&format!("{key}_mode")) {
        Some(v) => parse_modes(&v)?,
        None => vec![1; dimension],
    };
    match kind.as_str() {
        "zero" => Ok(InitialData::Zero),
        "sine" => {
            if modes.len() != dimension {
                return Err(format!(
                    "key '{key}_mode': need {dimension} mode number(s), got {}",
                    modes.len()
                ));
            }
            Ok(InitialData::Sine { modes, amplitude })
        }
        other => {
            if let Some(path) = other.strip_prefix("file:") {
                Ok(InitialData::File(PathBuf::from(path)))
            } else {
                Err(format!(
                    "key '{key}': expected zero, sine or file:<path>, got '{other}'"
                ))
            }
        }
    }
}

impl RunSpec {
    pub fn from_text(text: &str, config_dir: &Path) -> Result<Self, String> {
        let mut r = Reader {
            map: parse_pairs(text)?,
            used: BTreeSet::new(),
        };

        let damping_kind = r.require("damping.kind")?;
        let counterexample = damping_kind == "counterexample";

        let (lengths, offsets) = if counterexample {
            (Vec::new(), Vec::new())
        } else {
            let mut lengths = vec![r.require_f64("domain.length")?];
            let mut offsets = vec![r.f64_or("domain.offset", 0.0)?];
            if let Some(ly) = r.f64("domain.length_y")? {
                lengths.push(ly);
                offsets.push(r.f64_or("domain.offset_y", 0.0)?);
            }
            (lengths, offsets)
        };
        let dimension = lengths.len().max(1);

        let points_x = r.usize_or("grid.points", 400)?;
        let mut points = vec![points_x];
        if dimension == 2 {
            points.push(r.usize_or("grid.points_y", points_x)?);
        }

        let damping = match damping_kind.as_str() {
            "constant" => DampingConfig::Constant(r.require_f64("damping.value")?),
            "sinusoidal" => DampingConfig::Sinusoidal {
                base: r.require_f64("damping.c0")?,
                amplitude: r.require_f64("damping.c1")?,
                omega: r.require_f64("damping.omega")?,
                spatial: r.bool_or("damping.spatial", true)?,
            },
            "tabulated" => {
                let p = PathBuf::from(r.require("damping.table")?);
                DampingConfig::Tabulated(resolve(config_dir, p))
            }
            "two_plus_sin" => DampingConfig::TwoPlusSin,
            "rational" => DampingConfig::Rational {
                m0: r.require_f64("damping.m0")?,
                m1: r.require_f64("damping.m1")?,
            },
            "counterexample" => DampingConfig::Counterexample,
            other => return Err(format!("key 'damping.kind': unknown kind '{other}'")),
        };

        let bounds = if counterexample {
            None
        } else {
            Some((r.require_f64("bounds.sigma0")?, r.require_f64("bounds.sigma1")?))
        };

        let lambda1 = if counterexample {
            Lambda1Source::Analytic
        } else {
            match r.get("lambda1.source").as_deref().unwrap_or("analytic") {
                "analytic" => Lambda1Source::Analytic,
                "discrete" => Lambda1Source::Discrete,
                "value" => Lambda1Source::Value(r.require_f64("lambda1.value")?),
                other => {
                    return Err(format!(
                        "key 'lambda1.source': expected analytic, discrete or value, got '{other}'"
                    ))
                }
            }
        };

        let eps = if counterexample {
            EpsPolicy::Value(0.0)
        } else {
            match r.get("eps.policy").as_deref().unwrap_or("certificate") {
                "certificate" => EpsPolicy::Certificate,
                "value" => EpsPolicy::Value(r.require_f64("eps.value")?),
                other => {
                    return Err(format!(
                        "key 'eps.policy': expected certificate or value, got '{other}'"
                    ))
                }
            }
        };

        let (u0, u1) = if counterexample {
            (InitialData::Zero, InitialData::Zero)
        } else {
            (
                parse_initial(&mut r, "initial.u0", "sine", dimension)?,
                parse_initial(&mut r, "initial.u1", "zero", dimension)?,
            )
        };

        let t_end = r.require_f64("run.t_end")?;
        let cfl_factor = r.f64_or("run.cfl_factor", 0.9)?;
        let sample_every = r.usize_or("run.sample_every", 10)?;
        let trace_path = resolve(config_dir, PathBuf::from(
            r.get("output.trace").unwrap_or_else(|| "trace.csv".into()),
        ));
        let report_path = resolve(config_dir, PathBuf::from(
            r.get("output.report").unwrap_or_else(|| "report.json".into()),
        ));
        let bound_tol = r.f64_or("tolerances.bound", 0.02)?;
        let fit_lo = r.f64("fit.window_lo")?;
        let fit_hi = r.f64("fit.window_hi")?;

        r.finish()?;

        Ok(RunSpec {
            lengths,
            offsets,
            points,
            damping,
            bounds,
            lambda1,
            eps,
            u0,
            u1,
            t_end,
            cfl_factor,
            sample_every,
            trace_path,
            report_path,
            bound_tol,
            fit_lo,
            fit_hi,
        })
    }
}

fn resolve(dir: &Path, p: PathBuf) -> PathBuf {
    if p.is_absolute() {
        p
    } else {
        dir.join(p)
    }
}

/// Range syntax for sweeps: `v`, `v1,v2,...`, or `lo:hi:count`.
pub fn parse_range(spec: &str) -> Result<Vec<f64>, String> {
    let spec = spec.trim();
    if spec.is_empty() {
        return Err("empty range".into());
    }
    if let Some((lo, rest)) = spec.split_once(':') {
        let (hi, count) = rest
            .split_once(':')
            .ok_or_else(|| format!("range '{spec}': expected lo:hi:count"))?;
        let lo: f64 = lo.trim().parse().map_err(|_| format!("range '{spec}': bad lower bound"))?;
        let hi: f64 = hi.trim().parse().map_err(|_| format!("range '{spec}': bad upper bound"))?;
        let count: usize = count
            .trim()
            .parse()
            .map_err(|_| format!("range '{spec}': bad count"))?;
        if count == 0 {
            return Err(format!("range '{spec}': count must be at least 1"));
        }
        if !lo.is_finite() || !hi.is_finite() {
            return Err(format!("range '{spec}': bounds must be finite"));
        }
        if count == 1 {
            return Ok(vec![lo]);
        }
        let step = (hi - lo) / (count - 1) as f64;
        return Ok((0..count).map(|k| lo + k as f64 * step).collect());
    }
    spec.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| format!("range '{spec}': cannot parse '{p}'"))
        })
        .collect()
}
