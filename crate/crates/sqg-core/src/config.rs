//! Run configuration: strict TOML parsing, default resolution with an echo of
//! every defaulted field, and a canonical content hash that names the output
//! directory of a run.

use crate::error::{Error, Result};
use crate::evolution::{Integrator, SolverParams};
use crate::forcing::ForceSpec;
use crate::grid::{Grid, DEFAULT_DEALIAS_FRACTION, TWO_PI};
use crate::stability::SplittingParams;
use crate::steady::{Route, SteadyParams};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Steady,
    Evolve,
    Stability,
    Decay,
    Verify,
    Sweep,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Steady => "steady",
            Scenario::Evolve => "evolve",
            Scenario::Stability => "stability",
            Scenario::Decay => "decay",
            Scenario::Verify => "verify",
            Scenario::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteChoice {
    Direct,
    TimeIntegral,
    Both,
}

impl RouteChoice {
    pub fn routes(&self) -> Vec<Route> {
        match self {
            RouteChoice::Direct => vec![Route::Direct],
            RouteChoice::TimeIntegral => vec![Route::TimeIntegral],
            RouteChoice::Both => vec![Route::Direct, Route::TimeIntegral],
        }
    }
}

#[derive(Debug, Clone)]
pub struct SteadyOptions {
    pub params: SteadyParams,
    pub route: RouteChoice,
    /// Number of randomized starts for the uniqueness probe (0 disables it).
    pub uniqueness_seeds: usize,
}

#[derive(Debug, Clone)]
pub struct EvolveOptions {
    /// L2 size of the random band-limited initial state; zero starts at rest.
    pub initial_l2: f64,
    pub initial_band: (f64, f64),
    pub initial_seed: u64,
    pub checkpoint_stride: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct StabilityOptions {
    pub w0_l2: f64,
    pub w0_band: (f64, f64),
    pub w0_seed: u64,
    pub checkpoint_stride: usize,
    pub checkpoint_t_max: f64,
    pub splitting: SplittingParams,
}

#[derive(Debug, Clone)]
pub struct DecayOptions {
    pub fit_window: (f64, f64),
    pub weighted_window: (f64, f64),
    pub checkpoint_stride: usize,
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub n_fields: usize,
    pub seed_base: u64,
}

#[derive(Debug, Clone)]
pub struct SweepOptions {
    /// Scenario executed per grid point of the cross product below.
    pub run: Scenario,
    pub kappa: Vec<f64>,
    pub alpha: Vec<f64>,
    pub target_x_norm: Vec<f64>,
    pub seeds: Vec<u64>,
    pub workers: usize,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub grid: Grid,
    pub kappa: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub force: ForceSpec,
    pub solver: SolverParams,
    pub scenario: Scenario,
    pub steady: SteadyOptions,
    pub evolve: EvolveOptions,
    pub stability: StabilityOptions,
    pub decay: DecayOptions,
    pub verify: VerifyOptions,
    pub sweep: SweepOptions,
    pub output_dir: PathBuf,
    /// Hex digest of the canonical content; names the run directory. The
    /// output location itself is deliberately not part of the digest, so
    /// relocating results does not change the run's identity.
    pub config_hash: String,
    /// Every field that was filled from a default, echoed as `path = value`.
    pub defaulted: Vec<String>,
}

/// CLI-level overrides applied before validation and hashing.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output_dir: Option<PathBuf>,
    /// Output root used only when neither `output_dir` above nor the config
    /// file names one; the CLI feeds its environment default through here.
    pub default_output_root: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    /// Scenario requested on the command line. Satisfies the `scenario`
    /// requirement when the file omits it; a conflicting file value is an
    /// error rather than a silent override.
    pub scenario: Option<Scenario>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: Option<Scenario>,
    output_dir: Option<String>,
    grid: Option<RawGrid>,
    physics: Option<RawPhysics>,
    force: Option<RawForce>,
    solver: Option<RawSolver>,
    steady: Option<RawSteady>,
    evolve: Option<RawEvolve>,
    stability: Option<RawStability>,
    decay: Option<RawDecay>,
    verify: Option<RawVerify>,
    sweep: Option<RawSweep>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    n: Option<usize>,
    box_length: Option<f64>,
    dealias_fraction: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPhysics {
    kappa: Option<f64>,
    alpha: Option<f64>,
    epsilon: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawForce {
    rho0: Option<f64>,
    rho1: Option<f64>,
    amplitude: Option<f64>,
    seed: Option<u64>,
    target_x_norm: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    dt: Option<f64>,
    t_final: Option<f64>,
    integrator: Option<Integrator>,
    output_stride: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSteady {
    route: Option<RouteChoice>,
    inner_tol: Option<f64>,
    outer_tol: Option<f64>,
    max_inner: Option<usize>,
    max_outer: Option<usize>,
    dt: Option<f64>,
    tail_tol: Option<f64>,
    t_cap_factor: Option<f64>,
    richardson: Option<bool>,
    uniqueness_seeds: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEvolve {
    initial_l2: Option<f64>,
    initial_band: Option<[f64; 2]>,
    initial_seed: Option<u64>,
    checkpoint_stride: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStability {
    w0_l2: Option<f64>,
    w0_band: Option<[f64; 2]>,
    w0_seed: Option<u64>,
    checkpoint_stride: Option<usize>,
    checkpoint_t_max: Option<f64>,
    l_exponent: Option<f64>,
    gamma: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDecay {
    fit_window: Option<[f64; 2]>,
    weighted_window: Option<[f64; 2]>,
    checkpoint_stride: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVerify {
    n_fields: Option<usize>,
    seed_base: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    run: Option<Scenario>,
    kappa: Option<Vec<f64>>,
    alpha: Option<Vec<f64>>,
    target_x_norm: Option<Vec<f64>>,
    seeds: Option<Vec<u64>>,
    workers: Option<usize>,
}

struct Resolver {
    defaulted: Vec<String>,
}

impl Resolver {
    fn take<T: Copy + std::fmt::Display>(&mut self, v: Option<T>, path: &str, default: T) -> T {
        match v {
            Some(x) => x,
            None => {
                self.defaulted.push(format!("{path} = {default}"));
                default
            }
        }
    }

    fn take_pair(&mut self, v: Option<[f64; 2]>, path: &str, default: (f64, f64)) -> (f64, f64) {
        match v {
            Some([a, b]) => (a, b),
            None => {
                self.defaulted
                    .push(format!("{path} = [{}, {}]", default.0, default.1));
                default
            }
        }
    }

    fn required<T>(v: Option<T>, path: &str) -> Result<T> {
        v.ok_or_else(|| Error::validation(path, "is required"))
    }
}

/// Parse and fully resolve a config from TOML text. Unknown keys, duplicate
/// keys, and type mismatches are parse errors with line/column positions.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_with_overrides(text, &Overrides::default())
}

pub fn parse_config_with_overrides(text: &str, over: &Overrides) -> Result<RunConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
    resolve(raw, over)
}

pub fn parse_config_file(path: &Path, over: &Overrides) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config_with_overrides(&text, over)
}

fn resolve(raw: RawConfig, over: &Overrides) -> Result<RunConfig> {
    let mut r = Resolver {
        defaulted: Vec::new(),
    };

    let scenario = match (over.scenario, raw.scenario) {
        (Some(cli), Some(file)) if cli != file => {
            return Err(Error::validation(
                "scenario",
                format!(
                    "config file says {} but the {} subcommand was invoked",
                    file.name(),
                    cli.name()
                ),
            ));
        }
        (Some(cli), _) => cli,
        (None, file) => Resolver::required(file, "scenario")?,
    };

    let g = raw.grid.ok_or_else(|| Error::validation("grid", "section is required"))?;
    let n = Resolver::required(g.n, "grid.n")?;
    let box_length = r.take(g.box_length, "grid.box_length", TWO_PI);
    let dealias_fraction = r.take(
        g.dealias_fraction,
        "grid.dealias_fraction",
        DEFAULT_DEALIAS_FRACTION,
    );
    let grid = Grid::with_dealias(n, box_length, dealias_fraction)?;

    let p = raw
        .physics
        .ok_or_else(|| Error::validation("physics", "section is required"))?;
    let kappa = Resolver::required(p.kappa, "physics.kappa")?;
    let alpha = Resolver::required(p.alpha, "physics.alpha")?;
    let epsilon = r.take(p.epsilon, "physics.epsilon", 0.0);
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(Error::validation("physics.kappa", "must be finite and > 0"));
    }
    if !(1.0..2.0).contains(&alpha) {
        return Err(Error::validation("physics.alpha", "must lie in [1, 2)"));
    }
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(Error::validation("physics.epsilon", "must be >= 0"));
    }

    let f = raw
        .force
        .ok_or_else(|| Error::validation("force", "section is required"))?;
    let force = ForceSpec {
        rho0: Resolver::required(f.rho0, "force.rho0")?,
        rho1: Resolver::required(f.rho1, "force.rho1")?,
        amplitude: r.take(f.amplitude, "force.amplitude", 0.01),
        seed: {
            let s = r.take(f.seed, "force.seed", 1);
            over.seed.unwrap_or(s)
        },
        target_x_norm: f.target_x_norm,
    };
    force.validate(&grid)?;

    let s = raw.solver.unwrap_or(RawSolver {
        dt: None,
        t_final: None,
        integrator: None,
        output_stride: None,
    });
    let solver = SolverParams {
        kappa,
        alpha,
        epsilon,
        dt: r.take(s.dt, "solver.dt", 1e-3),
        t_final: r.take(s.t_final, "solver.t_final", 50.0 / kappa),
        integrator: match s.integrator {
            Some(i) => i,
            None => {
                r.defaulted.push("solver.integrator = etd_rk2".into());
                Integrator::EtdRk2
            }
        },
        output_stride: r.take(s.output_stride, "solver.output_stride", 50),
    };
    solver.validate()?;

    let st = raw.steady.unwrap_or(RawSteady {
        route: None,
        inner_tol: None,
        outer_tol: None,
        max_inner: None,
        max_outer: None,
        dt: None,
        tail_tol: None,
        t_cap_factor: None,
        richardson: None,
        uniqueness_seeds: None,
    });
    let base = SteadyParams::new(kappa, alpha);
    let steady_params = SteadyParams {
        kappa,
        alpha,
        inner_tol: r.take(st.inner_tol, "steady.inner_tol", base.inner_tol),
        outer_tol: r.take(st.outer_tol, "steady.outer_tol", base.outer_tol),
        max_inner: r.take(st.max_inner, "steady.max_inner", base.max_inner),
        max_outer: r.take(st.max_outer, "steady.max_outer", base.max_outer),
        dt: r.take(st.dt, "steady.dt", base.dt),
        tail_tol: r.take(st.tail_tol, "steady.tail_tol", base.tail_tol),
        t_cap_factor: r.take(st.t_cap_factor, "steady.t_cap_factor", base.t_cap_factor),
        richardson: r.take(st.richardson, "steady.richardson", base.richardson),
    };
    steady_params.validate()?;
    let steady = SteadyOptions {
        params: steady_params,
        route: match st.route {
            Some(rt) => rt,
            None => {
                r.defaulted.push("steady.route = direct".into());
                RouteChoice::Direct
            }
        },
        uniqueness_seeds: r.take(st.uniqueness_seeds, "steady.uniqueness_seeds", 0),
    };

    let ev = raw.evolve.unwrap_or(RawEvolve {
        initial_l2: None,
        initial_band: None,
        initial_seed: None,
        checkpoint_stride: None,
    });
    let evolve = EvolveOptions {
        initial_l2: r.take(ev.initial_l2, "evolve.initial_l2", 0.0),
        initial_band: r.take_pair(ev.initial_band, "evolve.initial_band", (1.0, 6.0)),
        initial_seed: {
            let s0 = r.take(ev.initial_seed, "evolve.initial_seed", 7);
            over.seed.map(|v| v.wrapping_add(2)).unwrap_or(s0)
        },
        checkpoint_stride: ev.checkpoint_stride,
    };

    let sb = raw.stability.unwrap_or(RawStability {
        w0_l2: None,
        w0_band: None,
        w0_seed: None,
        checkpoint_stride: None,
        checkpoint_t_max: None,
        l_exponent: None,
        gamma: None,
    });
    let splitting = SplittingParams {
        l_exponent: r.take(sb.l_exponent, "stability.l_exponent", 6.0),
        gamma: r.take(sb.gamma, "stability.gamma", 6.0),
        kappa,
    };
    splitting.validate()?;
    let stability = StabilityOptions {
        w0_l2: r.take(sb.w0_l2, "stability.w0_l2", 0.1),
        w0_band: r.take_pair(sb.w0_band, "stability.w0_band", (1.0, 6.0)),
        w0_seed: {
            let s0 = r.take(sb.w0_seed, "stability.w0_seed", 101);
            over.seed.map(|v| v.wrapping_add(1)).unwrap_or(s0)
        },
        checkpoint_stride: r.take(sb.checkpoint_stride, "stability.checkpoint_stride", 10),
        checkpoint_t_max: r.take(sb.checkpoint_t_max, "stability.checkpoint_t_max", 15.0),
        splitting,
    };
    if !(stability.w0_l2 >= 0.0 && stability.w0_l2.is_finite()) {
        return Err(Error::validation("stability.w0_l2", "must be >= 0"));
    }
    if stability.checkpoint_stride == 0 {
        return Err(Error::validation("stability.checkpoint_stride", "must be >= 1"));
    }

    let dc = raw.decay.unwrap_or(RawDecay {
        fit_window: None,
        weighted_window: None,
        checkpoint_stride: None,
    });
    let decay = DecayOptions {
        fit_window: r.take_pair(dc.fit_window, "decay.fit_window", (5.0, 20.0)),
        weighted_window: r.take_pair(dc.weighted_window, "decay.weighted_window", (1.0, 50.0)),
        checkpoint_stride: r.take(dc.checkpoint_stride, "decay.checkpoint_stride", 50),
    };
    for (name, w) in [("decay.fit_window", decay.fit_window), ("decay.weighted_window", decay.weighted_window)] {
        if !(w.0.is_finite() && w.1.is_finite() && 0.0 <= w.0 && w.0 < w.1) {
            return Err(Error::validation(name, "must be an increasing pair of times"));
        }
    }
    if decay.checkpoint_stride == 0 {
        return Err(Error::validation("decay.checkpoint_stride", "must be >= 1"));
    }

    let vf = raw.verify.unwrap_or(RawVerify {
        n_fields: None,
        seed_base: None,
    });
    let verify = VerifyOptions {
        n_fields: r.take(vf.n_fields, "verify.n_fields", 100),
        seed_base: {
            let s0 = r.take(vf.seed_base, "verify.seed_base", 0);
            over.seed.unwrap_or(s0)
        },
    };
    if verify.n_fields == 0 {
        return Err(Error::validation("verify.n_fields", "must be >= 1"));
    }

    let sw = raw.sweep.unwrap_or(RawSweep {
        run: None,
        kappa: None,
        alpha: None,
        target_x_norm: None,
        seeds: None,
        workers: None,
    });
    let sweep = SweepOptions {
        run: match sw.run {
            Some(Scenario::Sweep) => {
                return Err(Error::validation("sweep.run", "cannot itself be sweep"));
            }
            Some(x) => x,
            None => {
                r.defaulted.push("sweep.run = steady".into());
                Scenario::Steady
            }
        },
        kappa: sw.kappa.unwrap_or_else(|| vec![kappa]),
        alpha: sw.alpha.unwrap_or_else(|| vec![alpha]),
        target_x_norm: sw
            .target_x_norm
            .unwrap_or_else(|| vec![force.target_x_norm.unwrap_or(0.05)]),
        seeds: sw.seeds.unwrap_or_else(|| vec![force.seed]),
        workers: {
            let w = r.take(sw.workers, "sweep.workers", 1);
            over.threads.unwrap_or(w)
        },
    };
    if sweep.workers == 0 {
        return Err(Error::validation("sweep.workers", "must be >= 1"));
    }
    for (name, list_empty) in [
        ("sweep.kappa", sweep.kappa.is_empty()),
        ("sweep.alpha", sweep.alpha.is_empty()),
        ("sweep.target_x_norm", sweep.target_x_norm.is_empty()),
        ("sweep.seeds", sweep.seeds.is_empty()),
    ] {
        if list_empty {
            return Err(Error::validation(name, "must not be empty"));
        }
    }

    let output_dir = over
        .output_dir
        .clone()
        .or_else(|| raw.output_dir.as_ref().map(PathBuf::from))
        .or_else(|| {
            over.default_output_root.clone().map(|root| {
                r.defaulted.push(format!("output_dir = {}", root.display()));
                root
            })
        })
        .unwrap_or_else(|| {
            r.defaulted.push("output_dir = runs".into());
            PathBuf::from("runs")
        });

    let mut config = RunConfig {
        grid,
        kappa,
        alpha,
        epsilon,
        force,
        solver,
        scenario,
        steady,
        evolve,
        stability,
        decay,
        verify,
        sweep,
        output_dir,
        config_hash: String::new(),
        defaulted: r.defaulted,
    };
    config.config_hash = hash_of(&config.canonical_string());
    Ok(config)
}

fn hash_of(s: &str) -> String {
    let mut h = Sha256::new();
    h.update(s.as_bytes());
    let d = h.finalize();
    d.iter().map(|b| format!("{b:02x}")).collect()
}

impl RunConfig {
    /// Deterministic key-value rendering of all semantic content; the sha256
    /// of this string is the config hash.
    pub fn canonical_string(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            s.push_str(k);
            s.push('=');
            s.push_str(&v);
            s.push('\n');
        };
        kv("scenario", self.scenario.name().into());
        kv("grid.n", self.grid.n.to_string());
        kv("grid.box_length", self.grid.box_length.to_string());
        kv(
            "grid.dealias_fraction",
            self.grid.dealias_fraction.to_string(),
        );
        kv("physics.kappa", self.kappa.to_string());
        kv("physics.alpha", self.alpha.to_string());
        kv("physics.epsilon", self.epsilon.to_string());
        kv("force.rho0", self.force.rho0.to_string());
        kv("force.rho1", self.force.rho1.to_string());
        kv("force.amplitude", self.force.amplitude.to_string());
        kv("force.seed", self.force.seed.to_string());
        kv(
            "force.target_x_norm",
            match self.force.target_x_norm {
                Some(v) => v.to_string(),
                None => "none".into(),
            },
        );
        kv("solver.dt", self.solver.dt.to_string());
        kv("solver.t_final", self.solver.t_final.to_string());
        kv(
            "solver.integrator",
            match self.solver.integrator {
                Integrator::EtdRk2 => "etd_rk2".into(),
                Integrator::ImexCnab2 => "imex_cnab2".into(),
            },
        );
        kv("solver.output_stride", self.solver.output_stride.to_string());
        let sp = &self.steady.params;
        kv("steady.inner_tol", sp.inner_tol.to_string());
        kv("steady.outer_tol", sp.outer_tol.to_string());
        kv("steady.max_inner", sp.max_inner.to_string());
        kv("steady.max_outer", sp.max_outer.to_string());
        kv("steady.dt", sp.dt.to_string());
        kv("steady.tail_tol", sp.tail_tol.to_string());
        kv("steady.t_cap_factor", sp.t_cap_factor.to_string());
        kv("steady.richardson", sp.richardson.to_string());
        kv(
            "steady.route",
            match self.steady.route {
                RouteChoice::Direct => "direct".into(),
                RouteChoice::TimeIntegral => "time_integral".into(),
                RouteChoice::Both => "both".into(),
            },
        );
        kv(
            "steady.uniqueness_seeds",
            self.steady.uniqueness_seeds.to_string(),
        );
        kv("evolve.initial_l2", self.evolve.initial_l2.to_string());
        kv("evolve.initial_band.lo", self.evolve.initial_band.0.to_string());
        kv("evolve.initial_band.hi", self.evolve.initial_band.1.to_string());
        kv("evolve.initial_seed", self.evolve.initial_seed.to_string());
        kv(
            "evolve.checkpoint_stride",
            match self.evolve.checkpoint_stride {
                Some(v) => v.to_string(),
                None => "none".into(),
            },
        );
        kv("stability.w0_l2", self.stability.w0_l2.to_string());
        kv("stability.w0_band.lo", self.stability.w0_band.0.to_string());
        kv("stability.w0_band.hi", self.stability.w0_band.1.to_string());
        kv("stability.w0_seed", self.stability.w0_seed.to_string());
        kv(
            "stability.checkpoint_stride",
            self.stability.checkpoint_stride.to_string(),
        );
        kv(
            "stability.checkpoint_t_max",
            self.stability.checkpoint_t_max.to_string(),
        );
        kv(
            "stability.l_exponent",
            self.stability.splitting.l_exponent.to_string(),
        );
        kv("stability.gamma", self.stability.splitting.gamma.to_string());
        kv("decay.fit_window.lo", self.decay.fit_window.0.to_string());
        kv("decay.fit_window.hi", self.decay.fit_window.1.to_string());
        kv(
            "decay.weighted_window.lo",
            self.decay.weighted_window.0.to_string(),
        );
        kv(
            "decay.weighted_window.hi",
            self.decay.weighted_window.1.to_string(),
        );
        kv(
            "decay.checkpoint_stride",
            self.decay.checkpoint_stride.to_string(),
        );
        kv("verify.n_fields", self.verify.n_fields.to_string());
        kv("verify.seed_base", self.verify.seed_base.to_string());
        kv("sweep.run", self.sweep.run.name().into());
        kv(
            "sweep.kappa",
            self.sweep
                .kappa
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        kv(
            "sweep.alpha",
            self.sweep
                .alpha
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        kv(
            "sweep.target_x_norm",
            self.sweep
                .target_x_norm
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        kv(
            "sweep.seeds",
            self.sweep
                .seeds
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        s
    }

    /// Directory that receives every artifact of this run.
    pub fn run_dir(&self) -> PathBuf {
        self.output_dir.join(&self.config_hash)
    }

    /// Expand a sweep into fully resolved per-point configs. Each point
    /// carries the swept values, the sub-scenario, and its own hash.
    pub fn expand_sweep(&self) -> Result<Vec<RunConfig>> {
        let mut out = Vec::new();
        for &k in &self.sweep.kappa {
            for &a in &self.sweep.alpha {
                for &fx in &self.sweep.target_x_norm {
                    for &seed in &self.sweep.seeds {
                        let mut sub = self.clone();
                        sub.scenario = self.sweep.run;
                        sub.kappa = k;
                        sub.alpha = a;
                        sub.solver.kappa = k;
                        sub.solver.alpha = a;
                        sub.steady.params.kappa = k;
                        sub.steady.params.alpha = a;
                        sub.stability.splitting.kappa = k;
                        sub.force.target_x_norm = Some(fx);
                        sub.force.seed = seed;
                        if !(k.is_finite() && k > 0.0) {
                            return Err(Error::validation("sweep.kappa", "entries must be > 0"));
                        }
                        if !(1.0..2.0).contains(&a) {
                            return Err(Error::validation(
                                "sweep.alpha",
                                "entries must lie in [1, 2)",
                            ));
                        }
                        if !(fx.is_finite() && fx > 0.0) {
                            return Err(Error::validation(
                                "sweep.target_x_norm",
                                "entries must be > 0",
                            ));
                        }
                        sub.config_hash = hash_of(&sub.canonical_string());
                        out.push(sub);
                    }
                }
            }
        }
        Ok(out)
    }
}
