//! Run configuration: a flat `key = value` text format with `#` comments and
//! dotted section prefixes (`grid.nx = 64`). Unknown and duplicate keys are
//! rejected with their line number.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::integrator::StepPolicy;
use crate::model::{Params, Preset, WInit};
use crate::operators::DEFAULT_SOLVER_TOL;

/// Everything a run needs. `Default` is the bundled default scenario:
/// the unit square at 128x128, unit coefficients, a Gaussian cell bump over
/// cosine tissue, horizon 50 with records every 0.1.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub params: Params,
    pub preset: Preset,
    pub policy: StepPolicy,
    pub p_list: Vec<u32>,
    pub solver_tol: f64,
    /// Scale factor of the refinement-convergent pointwise tolerance
    /// `c_tol * dx^2 * (||w0||_inf v_sup + K)`.
    pub c_tol: f64,
    pub output_dir: PathBuf,
    /// Interval between field snapshots; 0 writes only the initial and final
    /// fields.
    pub snapshot_every: f64,
    /// Parallel simulations in a sweep; 1 keeps wall-clock logs reproducible.
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            grid: GridSpec::new(128, 128, 1.0, 1.0).expect("static grid"),
            params: Params::new(1.0, 1.0, 1.0).expect("static params"),
            preset: Preset::GaussianBump {
                amplitude: 4.0,
                sigma: 0.1,
                floor: 0.01,
                v: 0.1,
                w: WInit::CosineTissue,
            },
            policy: StepPolicy {
                dt_max: 0.05,
                cfl_safety: 0.9,
                t_end: 50.0,
                record_every: 0.1,
            },
            p_list: vec![2, 3],
            solver_tol: DEFAULT_SOLVER_TOL,
            c_tol: 800.0,
            output_dir: PathBuf::from("out"),
            snapshot_every: 0.0,
            jobs: 1,
        }
    }
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
        parse_config(&text, &path.display().to_string())
    }
}

struct RawEntry {
    line: usize,
    value: String,
}

/// Parse the flat config format. `source` names the file in errors.
pub fn parse_config(text: &str, source: &str) -> Result<RunConfig> {
    let fail = |line: usize, message: String| Error::Config {
        path: source.to_string(),
        line,
        message,
    };
    let mut entries: BTreeMap<String, RawEntry> = BTreeMap::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some(eq) = line.find('=') else {
            return Err(fail(line_no, format!("expected `key = value`, got {line:?}")));
        };
        let key = line[..eq].trim().to_string();
        let value = line[eq + 1..].trim().to_string();
        if key.is_empty() {
            return Err(fail(line_no, "missing key before `=`".to_string()));
        }
        if value.is_empty() {
            return Err(fail(line_no, format!("missing value for key `{key}`")));
        }
        if let Some(prev) = entries.get(&key) {
            return Err(fail(
                line_no,
                format!("duplicate key `{key}` (first set on line {})", prev.line),
            ));
        }
        entries.insert(
            key,
            RawEntry {
                line: line_no,
                value,
            },
        );
    }

    let mut take = |key: &str| entries.remove(key);
    let parse_f64 = |key: &str, e: &RawEntry| -> Result<f64> {
        e.value
            .parse::<f64>()
            .map_err(|err| fail(e.line, format!("key `{key}`: {err}")))
    };
    let parse_usize = |key: &str, e: &RawEntry| -> Result<usize> {
        e.value
            .parse::<usize>()
            .map_err(|err| fail(e.line, format!("key `{key}`: {err}")))
    };
    let parse_u64 = |key: &str, e: &RawEntry| -> Result<u64> {
        e.value
            .parse::<u64>()
            .map_err(|err| fail(e.line, format!("key `{key}`: {err}")))
    };

    let defaults = RunConfig::default();

    macro_rules! f64_or {
        ($key:expr, $default:expr) => {
            match take($key) {
                Some(e) => parse_f64($key, &e)?,
                None => $default,
            }
        };
    }
    macro_rules! usize_or {
        ($key:expr, $default:expr) => {
            match take($key) {
                Some(e) => parse_usize($key, &e)?,
                None => $default,
            }
        };
    }

    let nx = usize_or!("grid.nx", defaults.grid.nx());
    let ny = usize_or!("grid.ny", defaults.grid.ny());
    let lx = f64_or!("grid.lx", defaults.grid.lx());
    let ly = f64_or!("grid.ly", defaults.grid.ly());
    let grid = GridSpec::new(nx, ny, lx, ly)?;

    let chi = f64_or!("params.chi", defaults.params.chi);
    let xi = f64_or!("params.xi", defaults.params.xi);
    let mu = f64_or!("params.mu", defaults.params.mu);
    let params = Params::new(chi, xi, mu)?;

    let policy = StepPolicy {
        dt_max: f64_or!("policy.dt_max", defaults.policy.dt_max),
        cfl_safety: f64_or!("policy.cfl_safety", defaults.policy.cfl_safety),
        t_end: f64_or!("policy.t_end", defaults.policy.t_end),
        record_every: f64_or!("policy.record_every", defaults.policy.record_every),
    };
    policy.validate()?;

    // Tissue profile: a number, or the literal `cosine-tissue`.
    let parse_w_init = |key: &str, e: &RawEntry| -> Result<WInit> {
        if e.value == "cosine-tissue" {
            Ok(WInit::CosineTissue)
        } else {
            e.value.parse::<f64>().map(WInit::Constant).map_err(|_| {
                fail(
                    e.line,
                    format!("key `{key}`: expected a number or `cosine-tissue`, got {:?}", e.value),
                )
            })
        }
    };

    let preset_name = match take("preset.name") {
        Some(e) => e.value,
        None => "gaussian-bump".to_string(),
    };
    let preset = match preset_name.as_str() {
        "constant" => Preset::Constant {
            u: f64_or!("preset.u", 1.0),
            v: f64_or!("preset.v", 1.0),
            w: f64_or!("preset.w", 1.0),
        },
        "gaussian-bump" => Preset::GaussianBump {
            amplitude: f64_or!("preset.amplitude", 4.0),
            sigma: f64_or!("preset.sigma", 0.1),
            floor: f64_or!("preset.floor", 0.01),
            v: f64_or!("preset.v", 0.1),
            w: match take("preset.w") {
                Some(e) => parse_w_init("preset.w", &e)?,
                None => WInit::CosineTissue,
            },
        },
        "cosine-tissue" => Preset::CosineTissue {
            u: f64_or!("preset.u", 1.0),
            v: f64_or!("preset.v", 0.1),
        },
        "random" => Preset::Random {
            u_mean: f64_or!("preset.u", 1.0),
            eps: f64_or!("preset.eps", 0.1),
            seed: match take("preset.seed") {
                Some(e) => parse_u64("preset.seed", &e)?,
                None => 42,
            },
            v: f64_or!("preset.v", 0.1),
            w: match take("preset.w") {
                Some(e) => parse_w_init("preset.w", &e)?,
                None => WInit::Constant(1.0),
            },
        },
        other => {
            return Err(fail(
                0,
                format!(
                    "unknown preset name {other:?}; expected constant, gaussian-bump, cosine-tissue or random"
                ),
            ))
        }
    };

    let p_list = match take("analysis.p_list") {
        Some(e) => {
            let mut ps = Vec::new();
            for part in e.value.split(',') {
                let p: u32 = part.trim().parse().map_err(|err| {
                    fail(e.line, format!("key `analysis.p_list`: {err} in {part:?}"))
                })?;
                if p < 1 {
                    return Err(fail(e.line, "p_list entries must be >= 1".to_string()));
                }
                ps.push(p);
            }
            ps
        }
        None => defaults.p_list.clone(),
    };

    let solver_tol = f64_or!("tolerances.solver_tol", defaults.solver_tol);
    if !(solver_tol > 0.0 && solver_tol < 1.0) {
        return Err(fail(0, format!("tolerances.solver_tol out of range: {solver_tol}")));
    }
    let c_tol = f64_or!("tolerances.c_tol", defaults.c_tol);
    if !(c_tol > 0.0) {
        return Err(fail(0, format!("tolerances.c_tol must be positive: {c_tol}")));
    }

    let output_dir = match take("output.dir") {
        Some(e) => PathBuf::from(e.value),
        None => defaults.output_dir.clone(),
    };
    let snapshot_every = f64_or!("output.snapshot_every", defaults.snapshot_every);
    if snapshot_every < 0.0 {
        return Err(fail(0, "output.snapshot_every must be nonnegative".to_string()));
    }
    let jobs = usize_or!("jobs", defaults.jobs).max(1);

    if let Some((key, entry)) = entries.into_iter().next() {
        return Err(fail(entry.line, format!("unknown key `{key}`")));
    }

    Ok(RunConfig {
        grid,
        params,
        preset,
        policy,
        p_list,
        solver_tol,
        c_tol,
        output_dir,
        snapshot_every,
        jobs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_the_default_scenario() {
        let cfg = parse_config("", "test.cfg").unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn full_config_round_trip() {
        let text = "\
# test configuration
grid.nx = 32
grid.ny = 48
grid.lx = 2.0
grid.ly = 3.0
params.chi = 0.5
params.xi = 0.25
params.mu = 2.0
preset.name = random
preset.u = 1.5
preset.eps = 0.2
preset.seed = 7
preset.v = 0.0
preset.w = cosine-tissue
policy.dt_max = 0.01
policy.cfl_safety = 0.8
policy.t_end = 2.5
policy.record_every = 0.5
analysis.p_list = 2,3,4
tolerances.solver_tol = 1e-11
tolerances.c_tol = 500
output.dir = results/run1
output.snapshot_every = 1.0
jobs = 2
";
        let cfg = parse_config(text, "test.cfg").unwrap();
        assert_eq!(cfg.grid.nx(), 32);
        assert_eq!(cfg.grid.ny(), 48);
        assert_eq!(cfg.params.mu, 2.0);
        assert_eq!(
            cfg.preset,
            Preset::Random {
                u_mean: 1.5,
                eps: 0.2,
                seed: 7,
                v: 0.0,
                w: WInit::CosineTissue,
            }
        );
        assert_eq!(cfg.p_list, vec![2, 3, 4]);
        assert_eq!(cfg.solver_tol, 1e-11);
        assert_eq!(cfg.output_dir, PathBuf::from("results/run1"));
        assert_eq!(cfg.jobs, 2);
    }

    #[test]
    fn unknown_key_is_rejected_with_line_number() {
        let text = "grid.nx = 64\nchii = 1\n";
        match parse_config(text, "bad.cfg") {
            Err(Error::Config { line, message, .. }) => {
                assert_eq!(line, 2);
                assert!(message.contains("chii"), "message: {message}");
            }
            other => panic!("expected Config error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_key_is_rejected() {
        let text = "params.mu = 1\nparams.mu = 2\n";
        match parse_config(text, "dup.cfg") {
            Err(Error::Config { line, message, .. }) => {
                assert_eq!(line, 2);
                assert!(message.contains("duplicate"), "message: {message}");
            }
            other => panic!("expected Config error, got {other:?}"),
        }
    }

    #[test]
    fn bad_values_are_rejected() {
        assert!(parse_config("grid.nx = sixty\n", "x.cfg").is_err());
        assert!(parse_config("params.mu = -1\n", "x.cfg").is_err());
        assert!(parse_config("policy.cfl_safety = 1.5\n", "x.cfg").is_err());
        assert!(parse_config("preset.name = blob\n", "x.cfg").is_err());
        assert!(parse_config("preset.w = wibble\npreset.name = random\n", "x.cfg").is_err());
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = "\n# full line comment\nparams.mu = 2.0 # trailing comment\n\n";
        let cfg = parse_config(text, "c.cfg").unwrap();
        assert_eq!(cfg.params.mu, 2.0);
    }

    #[test]
    fn zero_horizon_is_accepted() {
        let cfg = parse_config("policy.t_end = 0\n", "z.cfg").unwrap();
        assert_eq!(cfg.policy.t_end, 0.0);
    }
}
