//! Root counting: proximity graphs over certified grid points and the
//! refinement loop around them.

mod components;
mod graph;

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use components::{components_from_edges, ComponentSet, UnionFind};
pub use graph::{
    build_graph, check_halt, connected_components, estimate_kappa, rounded_thresholds, HaltCheck,
    ProximityGraph, Vertex, VertexPair,
};

use crate::alpha::newton_refine;
use crate::arith::PrecisionContext;
use crate::error::{Error, Result};
use crate::poly::PolynomialSystem;
use crate::sphere::{CubeGrid, CubeGridSpec, DEFAULT_GRID_CAP};
use graph::{next_candidates, scan_level, Carried};

/// Which arithmetic the certification tests run in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Host double precision, treated as exact.
    Exact,
    /// Every operation rounded to the context's precision, with the
    /// strengthened tests that tolerate it.
    Rounded(PrecisionContext),
}

pub const DEFAULT_MAX_ITERATIONS: u32 = 24;
pub const DEFAULT_REFINE_STEPS: usize = 20;
pub const DEFAULT_BETA_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountConfig {
    pub max_iterations: u32,
    pub grid_cap: u64,
    pub refine_steps: usize,
    pub beta_tol: f64,
}

impl Default for CountConfig {
    fn default() -> Self {
        Self {
            max_iterations: DEFAULT_MAX_ITERATIONS,
            grid_cap: DEFAULT_GRID_CAP,
            refine_steps: DEFAULT_REFINE_STEPS,
            beta_tol: DEFAULT_BETA_TOL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountStatus {
    Converged,
    IterationCapReached,
}

/// State of one refinement level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    pub k: u32,
    pub eta: f64,
    pub grid_size: u64,
    /// Points evaluated at this level; the others were settled earlier.
    pub evaluated_count: u64,
    pub vertex_count: u64,
    /// Vertices carried over from coarser levels, whose descendants were
    /// not evaluated.
    pub carried_count: u64,
    pub component_count: u64,
    pub condition_i_pass: bool,
    pub condition_ii_pass: bool,
    pub min_intercomponent_distance: Option<f64>,
    pub min_excluded_fsup: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentReport {
    /// Smallest-index vertex of the component.
    pub representative: Vec<f64>,
    /// Newton limit from the representative.
    pub zero: Vec<f64>,
    /// Last step length of the refinement.
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountResult {
    /// Number of zero rays; absent unless the run converged.
    pub count: Option<u64>,
    pub status: CountStatus,
    pub iterations: Vec<IterationReport>,
    pub components: Vec<ComponentReport>,
    /// Largest grid estimate of `κ(f)` seen; `null` when infinite.
    #[serde(with = "extended_real")]
    pub kappa_lower_bound: f64,
    /// Weyl norm of the input before normalization.
    pub original_norm: f64,
}

/// Serialize `+∞` as `null` so documents stay valid JSON and round-trip.
mod extended_real {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// `η₀ = 2√2/(π√(n+1))`.
pub fn initial_eta(n: usize) -> f64 {
    2.0 * 2f64.sqrt() / (PI * ((n + 1) as f64).sqrt())
}

/// Smallest `k ≥ 1` with `2^-k ≤ η₀`.
pub fn initial_level(n: usize) -> u32 {
    let eta0 = initial_eta(n);
    (1..).find(|&k| (-(k as f64)).exp2() <= eta0).unwrap()
}

/// Count the zero rays of `f`.
pub fn count_roots(f: &PolynomialSystem, mode: Mode, config: &CountConfig) -> Result<CountResult> {
    count_roots_observed(f, mode, config, |_, _, _, _| {})
}

/// As [`count_roots`], calling `observe` with every level's report, graph,
/// components and halting verdict.
pub fn count_roots_observed(
    f: &PolynomialSystem,
    mode: Mode,
    config: &CountConfig,
    mut observe: impl FnMut(&IterationReport, &ProximityGraph, &ComponentSet, &HaltCheck),
) -> Result<CountResult> {
    if config.max_iterations == 0 {
        return Err(Error::InvalidIterationLimit);
    }
    let (f, original_norm) = f.normalized();
    let k0 = initial_level(f.n());
    let mut iterations = Vec::new();
    let mut kappa: f64 = 0.0;

    let mut candidates: Option<Vec<u64>> = None;
    let mut carried: Vec<Carried> = Vec::new();

    for k in k0..k0 + config.max_iterations {
        let spec = CubeGridSpec::new(f.n(), k)?;
        let scan = match scan_level(
            &f,
            spec,
            mode,
            config.grid_cap,
            candidates.as_deref(),
            &carried,
        ) {
            Ok(s) => s,
            // a level beyond the cap ends the run like the iteration cap
            Err(Error::GridTooLarge { .. }) if !iterations.is_empty() => break,
            Err(e) => return Err(e),
        };
        let graph = scan.graph;
        kappa = kappa.max(graph.kappa_estimate);
        let comps = connected_components(&graph);
        let halt = check_halt(&graph, &comps);
        let report = IterationReport {
            k,
            eta: spec.eta(),
            grid_size: graph.grid_size,
            evaluated_count: graph.evaluated_count,
            vertex_count: graph.vertices.len() as u64,
            carried_count: 2 * carried.len() as u64,
            component_count: comps.len() as u64,
            condition_i_pass: halt.condition_i,
            condition_ii_pass: halt.condition_ii,
            min_intercomponent_distance: halt.min_intercomponent_distance,
            min_excluded_fsup: halt.min_excluded_fsup,
        };
        observe(&report, &graph, &comps, &halt);
        iterations.push(report);
        if halt.halts() {
            let r = comps.len();
            if r % 2 == 1 {
                return Err(Error::OddComponentCount(r));
            }
            let components = comps
                .representatives
                .par_iter()
                .map(|&v| {
                    let start = &graph.vertices[v].point;
                    let refined = newton_refine(&f, start, config.refine_steps, config.beta_tol);
                    ComponentReport {
                        representative: start.to_vec(),
                        zero: refined.point.into_coords(),
                        beta: refined.trace.last().copied().unwrap_or(0.0),
                    }
                })
                .collect();
            return Ok(CountResult {
                count: Some(r as u64 / 2),
                status: CountStatus::Converged,
                iterations,
                components,
                kappa_lower_bound: kappa,
                original_norm,
            });
        }
        if let Ok(fine_spec) = CubeGridSpec::new(f.n(), k + 1) {
            let coarse = CubeGrid::with_cap(spec, u64::MAX)?;
            match CubeGrid::with_cap(fine_spec, u64::MAX) {
                Ok(fine) => candidates = Some(next_candidates(&coarse, &fine, &scan.survivors)),
                Err(_) => break,
            }
        }
        carried.extend(scan.absorbed);
        carried.iter_mut().for_each(Carried::refine);
    }

    Ok(CountResult {
        count: None,
        status: CountStatus::IterationCapReached,
        iterations,
        components: Vec::new(),
        kappa_lower_bound: kappa,
        original_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_system;

    fn run(text: &str, mode: Mode) -> CountResult {
        count_roots(&parse_system(text).unwrap(), mode, &CountConfig::default()).unwrap()
    }

    #[test]
    fn initial_level_is_one_for_small_n() {
        assert_eq!(initial_level(1), 1);
        assert_eq!(initial_level(2), 1);
        assert!(initial_eta(1) > 0.5 && initial_eta(1) < 1.0);
    }

    #[test]
    fn univariate_examples() {
        let line = r#"{"n":1,"degrees":[1],"polys":[[{"J":[0,1],"c":1},{"J":[1,0],"c":-0.5}]]}"#;
        let two = r#"{"n":1,"degrees":[2],"polys":[[{"J":[0,2],"c":1},{"J":[2,0],"c":-0.25}]]}"#;
        let circle = r#"{"n":1,"degrees":[2],"polys":[[{"J":[2,0],"c":1},{"J":[0,2],"c":1}]]}"#;
        for (text, expected) in [(line, 1), (two, 2), (circle, 0)] {
            let r = run(text, Mode::Exact);
            assert_eq!(r.status, CountStatus::Converged);
            assert_eq!(r.count, Some(expected));
            assert_eq!(r.components.len() as u64, 2 * expected);
            let last = r.iterations.last().unwrap();
            assert!(last.condition_i_pass && last.condition_ii_pass);
        }
    }

    #[test]
    fn plane_pair_has_one_ray() {
        let text = r#"{"n":2,"degrees":[1,1],"polys":[
            [{"J":[0,1,0],"c":1},{"J":[1,0,0],"c":-0.3}],
            [{"J":[0,0,1],"c":1},{"J":[1,0,0],"c":-0.7}]]}"#;
        let r = run(text, Mode::Exact);
        assert_eq!(r.count, Some(1));
        let norm = (1.0f64 + 0.09 + 0.49).sqrt();
        let zero = [1.0 / norm, 0.3 / norm, 0.7 / norm];
        for c in &r.components {
            let d = crate::sphere::distance(&c.zero, &zero);
            assert!(d < 1e-10 || (std::f64::consts::PI - d) < 1e-10);
        }
    }

    #[test]
    fn double_root_does_not_halt() {
        let text = r#"{"n":1,"degrees":[2],"polys":[[{"J":[0,2],"c":1}]]}"#;
        let config = CountConfig {
            max_iterations: 8,
            ..CountConfig::default()
        };
        let r = count_roots(&parse_system(text).unwrap(), Mode::Exact, &config).unwrap();
        assert_eq!(r.status, CountStatus::IterationCapReached);
        assert_eq!(r.count, None);
        assert_eq!(r.iterations.len(), 8);
    }

    #[test]
    fn cap_after_first_level_ends_run() {
        let text = r#"{"n":1,"degrees":[2],"polys":[[{"J":[0,2],"c":1}]]}"#;
        let config = CountConfig {
            grid_cap: 200,
            ..CountConfig::default()
        };
        let r = count_roots(&parse_system(text).unwrap(), Mode::Exact, &config).unwrap();
        assert_eq!(r.status, CountStatus::IterationCapReached);
        assert!(r.iterations.iter().all(|it| it.evaluated_count <= 200));
        let tiny = CountConfig {
            grid_cap: 4,
            ..CountConfig::default()
        };
        assert!(matches!(
            count_roots(&parse_system(text).unwrap(), Mode::Exact, &tiny),
            Err(Error::GridTooLarge { .. })
        ));
    }

    #[test]
    fn rounded_mode_at_host_precision_agrees() {
        let two = r#"{"n":1,"degrees":[2],"polys":[[{"J":[0,2],"c":1},{"J":[2,0],"c":-0.25}]]}"#;
        for bits in [53, 24] {
            let r = run(two, Mode::Rounded(PrecisionContext::new(bits).unwrap()));
            assert_eq!(r.count, Some(2), "bits {bits}");
        }
    }

    #[test]
    fn zero_iterations_rejected() {
        let text = r#"{"n":1,"degrees":[1],"polys":[[{"J":[0,1],"c":1}]]}"#;
        let config = CountConfig {
            max_iterations: 0,
            ..CountConfig::default()
        };
        assert_eq!(
            count_roots(&parse_system(text).unwrap(), Mode::Exact, &config),
            Err(Error::InvalidIterationLimit)
        );
    }

    #[test]
    fn result_round_trips_with_infinite_kappa() {
        let r = CountResult {
            count: None,
            status: CountStatus::IterationCapReached,
            iterations: vec![],
            components: vec![],
            kappa_lower_bound: f64::INFINITY,
            original_norm: 1.0,
        };
        let text = serde_json::to_string(&r).unwrap();
        assert!(text.contains("\"kappa_lower_bound\":null"));
        assert!(text.contains("\"status\":\"iteration-cap-reached\""));
        let back: CountResult = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }
}
