//! Commands behind the `zerorays` binary. Each returns a serializable
//! document; the binary only parses arguments, reads files and writes
//! output.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use zerorays::sphere::DEFAULT_GRID_CAP;
use zerorays::{
    count_roots_observed, estimate_kappa, newton_refine, parse_system, point_data,
    required_precision, theory_constants, CountConfig, CountResult, CountStatus, CubeGridSpec,
    IterationReport, Mode, PolynomialSystem, PrecisionContext, RefineStatus, SpherePoint,
};

pub const EXIT_CONVERGED: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_CAP_REACHED: i32 = 2;

/// Extra levels a sweep run may take beyond the exact run.
pub const SWEEP_EXTRA_LEVELS: u32 = 3;
/// A sweep run may evaluate this many times the exact run's busiest level.
pub const SWEEP_GRID_FACTOR: u64 = 16;
const SWEEP_GRID_FLOOR: u64 = 100_000;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] zerorays::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeChoice {
    Exact,
    Rounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: ModeChoice,
    /// Significand bits in rounded mode.
    pub bits: u32,
    pub max_iterations: u32,
    /// Worker threads; 0 picks the machine default.
    pub workers: usize,
    pub grid_cap: u64,
    pub output: Option<PathBuf>,
    pub trace: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: ModeChoice::Exact,
            bits: PrecisionContext::HOST_BITS,
            max_iterations: zerorays::engine::DEFAULT_MAX_ITERATIONS,
            workers: 0,
            grid_cap: DEFAULT_GRID_CAP,
            output: None,
            trace: false,
        }
    }
}

impl RunConfig {
    pub fn engine_mode(&self) -> CliResult<Mode> {
        match self.mode {
            ModeChoice::Exact => Ok(Mode::Exact),
            ModeChoice::Rounded => Ok(Mode::Rounded(PrecisionContext::new(self.bits)?)),
        }
    }

    fn count_config(&self) -> CliResult<CountConfig> {
        if self.max_iterations == 0 {
            return Err(CliError::Usage("max-iter must be at least 1".into()));
        }
        Ok(CountConfig {
            max_iterations: self.max_iterations,
            grid_cap: self.grid_cap,
            ..CountConfig::default()
        })
    }

    /// Run `job` on a pool with `workers` threads.
    pub fn install<T: Send>(&self, job: impl FnOnce() -> T + Send) -> CliResult<T> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()?;
        Ok(pool.install(job))
    }
}

pub fn exit_code(result: &CountResult) -> i32 {
    match result.status {
        CountStatus::Converged => EXIT_CONVERGED,
        CountStatus::IterationCapReached => EXIT_CAP_REACHED,
    }
}

pub fn read_input(path: &std::path::Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

/// Pretty JSON with a trailing newline.
pub fn render<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("documents serialize");
    s.push('\n');
    s
}

/// Count zero rays. With `trace` set, each level's report is passed to
/// `on_level` as soon as it is computed.
pub fn cmd_count(
    config: &RunConfig,
    input: &str,
    mut on_level: impl FnMut(&IterationReport) + Send,
) -> CliResult<CountResult> {
    let f = parse_system(input)?;
    let mode = config.engine_mode()?;
    let count_config = config.count_config()?;
    let trace = config.trace;
    let result = config.install(|| {
        count_roots_observed(&f, mode, &count_config, |report, _, _, _| {
            if trace {
                on_level(report)
            }
        })
    })??;
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Envelope {
    Satisfied,
    Violated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineReport {
    pub start: Vec<f64>,
    pub zero: Vec<f64>,
    /// Step lengths in order.
    pub trace: Vec<f64>,
    pub steps: usize,
    pub status: String,
    /// `ᾱ` at the start point.
    pub alpha_bar: f64,
    pub envelope: Envelope,
    pub warnings: Vec<String>,
}

pub fn parse_point(text: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|c| {
            c.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Usage(format!("bad coordinate {c:?}: {e}")))
        })
        .collect()
}

/// Newton refinement from `start`, which must lie on the unit sphere to
/// within `1e-6`.
pub fn cmd_refine(
    input: &str,
    start: &[f64],
    max_steps: usize,
    beta_tol: f64,
) -> CliResult<RefineReport> {
    let f = parse_system(input)?;
    if start.len() != f.n() + 1 {
        return Err(CliError::Usage(format!(
            "start has {} coordinates, the system needs {}",
            start.len(),
            f.n() + 1
        )));
    }
    let x = SpherePoint::new(start.to_vec())?;
    let (g, _) = f.normalized();
    let alpha_bar = point_data(&g, &x).alpha_bar;
    let mut warnings = Vec::new();
    // NaN counts as uncertified
    if alpha_bar.partial_cmp(&theory_constants().alpha_star) != Some(std::cmp::Ordering::Less) {
        warnings.push("uncertified start".to_string());
    }
    let r = newton_refine(&g, &x, max_steps, beta_tol);
    if r.status == RefineStatus::SingularJacobian {
        warnings.push("singular Jacobian".to_string());
    }
    Ok(RefineReport {
        start: x.to_vec(),
        zero: r.point.to_vec(),
        steps: r.steps,
        status: match r.status {
            RefineStatus::Converged => "converged",
            RefineStatus::StepLimit => "step-limit",
            RefineStatus::SingularJacobian => "singular-jacobian",
        }
        .to_string(),
        alpha_bar,
        envelope: if r.envelope_satisfied {
            Envelope::Satisfied
        } else {
            Envelope::Violated
        },
        trace: r.trace,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaReport {
    pub level: u32,
    pub eta: f64,
    pub grid_size: u64,
    pub kappa_lower_bound: Option<f64>,
}

pub fn cmd_kappa(input: &str, level: u32, grid_cap: u64) -> CliResult<KappaReport> {
    let f = parse_system(input)?;
    let (g, _) = f.normalized();
    let spec = CubeGridSpec::new(g.n(), level)?;
    let kappa = estimate_kappa(&g, spec, grid_cap)?;
    Ok(KappaReport {
        level,
        eta: spec.eta(),
        grid_size: u64::try_from(spec.point_count()).unwrap_or(u64::MAX),
        kappa_lower_bound: kappa.is_finite().then_some(kappa),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub bits: u32,
    pub u: f64,
    pub count: Option<u64>,
    pub status: CountStatus,
    pub agrees_with_exact: bool,
    /// `u ≤ required_precision`.
    pub within_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub exact_count: Option<u64>,
    pub kappa_lower_bound: Option<f64>,
    /// Sufficient unit round-off for `κ̂` and constant `1`.
    pub required_precision: Option<f64>,
    /// Largest swept `t` whose count disagrees with the exact count.
    pub breakdown_bits: Option<u32>,
    pub rows: Vec<SweepRow>,
}

pub fn parse_bits(text: &str) -> CliResult<Vec<u32>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<u32>()
                .map_err(|e| CliError::Usage(format!("bad bit count {s:?}: {e}")))
        })
        .collect()
}

/// Count in rounded mode at each `t` in `bits` and compare with exact mode.
///
/// Rounded runs are bounded by the exact run: at most
/// [`SWEEP_EXTRA_LEVELS`] more levels, and at most [`SWEEP_GRID_FACTOR`]
/// times its largest per-level evaluation count. A run stopped by these
/// bounds has no count and disagrees.
pub fn cmd_sweep(config: &RunConfig, input: &str, bits: &[u32]) -> CliResult<SweepTable> {
    let f = parse_system(input)?;
    let count_config = config.count_config()?;
    if bits.is_empty() {
        return Ok(SweepTable {
            exact_count: None,
            kappa_lower_bound: None,
            required_precision: None,
            breakdown_bits: None,
            rows: Vec::new(),
        });
    }
    for &t in bits {
        PrecisionContext::new(t)?;
    }
    config.install(|| sweep(&f, &count_config, bits))?
}

fn sweep(f: &PolynomialSystem, config: &CountConfig, bits: &[u32]) -> CliResult<SweepTable> {
    let exact = zerorays::count_roots(f, Mode::Exact, config)?;
    if exact.status != CountStatus::Converged {
        return Err(CliError::Usage(
            "exact mode did not converge; nothing to compare against".into(),
        ));
    }
    let kappa = exact.kappa_lower_bound;
    let u_max = required_precision(f.n(), f.max_degree(), f.max_terms(), kappa, 1.0);
    let busiest = exact
        .iterations
        .iter()
        .map(|it| it.evaluated_count)
        .max()
        .unwrap_or(0);
    let bounded = CountConfig {
        max_iterations: (exact.iterations.len() as u32 + SWEEP_EXTRA_LEVELS)
            .min(config.max_iterations),
        grid_cap: busiest
            .saturating_mul(SWEEP_GRID_FACTOR)
            .max(SWEEP_GRID_FLOOR)
            .min(config.grid_cap),
        ..*config
    };
    let mut rows = Vec::with_capacity(bits.len());
    for &t in bits {
        let ctx = PrecisionContext::new(t)?;
        let (count, status) = match zerorays::count_roots(f, Mode::Rounded(ctx), &bounded) {
            Ok(r) => (r.count, r.status),
            // an odd component count or similar breakdown is a wrong answer
            Err(_) => (None, CountStatus::IterationCapReached),
        };
        let u = ctx.u();
        rows.push(SweepRow {
            bits: t,
            u,
            count,
            status,
            agrees_with_exact: count.is_some() && count == exact.count,
            within_bound: u <= u_max,
        });
    }
    let breakdown_bits = rows
        .iter()
        .filter(|r| !r.agrees_with_exact)
        .map(|r| r.bits)
        .max();
    Ok(SweepTable {
        exact_count: exact.count,
        kappa_lower_bound: kappa.is_finite().then_some(kappa),
        required_precision: Some(u_max),
        breakdown_bits,
        rows,
    })
}
