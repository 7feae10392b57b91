mod common;

use zerorays::oracle::{binary_form_suite, make_linear_product_system};
use zerorays::sphere::distance;
use zerorays::{
    build_graph, count_roots, count_roots_observed, newton_refine, CountConfig, CountStatus,
    CubeGridSpec, Mode, PolynomialSystem, ProximityGraph,
};

fn desk_systems() -> Vec<PolynomialSystem> {
    let mut out: Vec<PolynomialSystem> = binary_form_suite(6, 4, 1e2)
        .iter()
        .map(|fx| fx.polynomial_system())
        .collect();
    for (deg, seed) in [([1, 1], 0), ([2, 1], 3), ([1, 2], 5)] {
        out.push(make_linear_product_system(2, &deg, seed).unwrap().system());
    }
    out
}

/// The last graph and its labels, for a run that halts.
fn halting_graph(f: &PolynomialSystem) -> (ProximityGraph, Vec<usize>) {
    let mut last = None;
    let r = count_roots_observed(f, Mode::Exact, &CountConfig::default(), |_, g, c, h| {
        if h.halts() {
            last = Some((g.clone(), c.labels.clone()));
        }
    })
    .unwrap();
    assert_eq!(r.status, CountStatus::Converged);
    last.unwrap()
}

#[test]
fn every_vertex_of_a_component_refines_to_one_zero() {
    for f in desk_systems() {
        let (f, _) = f.normalized();
        let (graph, labels) = halting_graph(&f);
        let count = labels.iter().max().map_or(0, |m| m + 1);
        for c in 0..count {
            let members: Vec<usize> = (0..labels.len()).filter(|&v| labels[v] == c).collect();
            // spread the sample over the component
            let stride = (members.len() / 40).max(1);
            let zeros: Vec<Vec<f64>> = members
                .iter()
                .step_by(stride)
                .map(|&v| {
                    newton_refine(&f, &graph.vertices[v].point, 30, 1e-15)
                        .point
                        .to_vec()
                })
                .collect();
            for z in &zeros[1..] {
                assert!(distance(z, &zeros[0]) <= 1e-8, "component {c}");
            }
        }
    }
}

#[test]
fn zeros_pair_antipodally_and_are_separated() {
    for f in desk_systems() {
        let r = count_roots(&f, Mode::Exact, &CountConfig::default()).unwrap();
        let zeros: Vec<&Vec<f64>> = r.components.iter().map(|c| &c.zero).collect();
        assert_eq!(zeros.len() % 2, 0);
        for z in &zeros {
            let minus: Vec<f64> = z.iter().map(|a| -a).collect();
            let partner = zeros
                .iter()
                .map(|w| distance(w, &minus))
                .fold(f64::INFINITY, f64::min);
            assert!(partner <= 1e-8);
        }
        let d = f.max_degree() as f64;
        let bound = 2.0 * (3.0 - 7f64.sqrt()) * d.powf(-1.5) / r.kappa_lower_bound;
        for (i, a) in zeros.iter().enumerate() {
            for b in &zeros[i + 1..] {
                assert!(distance(a, b) >= bound, "{} < {bound}", distance(a, b));
            }
        }
    }
}

/// Levels after the first only evaluate points whose subtrees may still
/// hold vertices, and absorbed vertices stand in for their neighbourhoods.
/// Every vertex of a full scan must be kept or lie inside a kept extent.
#[test]
fn pruned_levels_match_full_scans() {
    for f in desk_systems() {
        let (f, _) = f.normalized();
        let mut graphs = Vec::new();
        let mut halted = None;
        count_roots_observed(&f, Mode::Exact, &CountConfig::default(), |it, g, c, h| {
            graphs.push((it.k, g.vertices.clone()));
            if h.halts() {
                halted = Some((it.k, c.len()));
            }
        })
        .unwrap();
        let max_k = if f.n() == 1 { 12 } else { 7 };
        for (k, kept) in graphs.into_iter().filter(|g| g.0 <= max_k) {
            let full = build_graph(
                &f,
                CubeGridSpec::new(f.n(), k).unwrap(),
                Mode::Exact,
                u64::MAX,
            )
            .unwrap();
            let kept_indices: std::collections::HashSet<u64> =
                kept.iter().map(|v| v.index).collect();
            for v in &full.vertices {
                if kept_indices.contains(&v.index) {
                    continue;
                }
                let covered = kept.iter().any(|w| {
                    w.extent > 0.0
                        && distance(w.point.coords(), v.point.coords()) <= w.extent + 1e-12
                });
                assert!(covered, "level {k}: vertex {} dropped", v.index);
            }
            if halted.map(|h| h.0) == Some(k) {
                assert_eq!(halted.unwrap().1, full.components.len(), "level {k}");
            }
        }
    }
}

#[test]
fn worker_count_does_not_change_results() {
    let systems = desk_systems();
    let run = |threads: usize| -> Vec<String> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| {
            systems
                .iter()
                .map(|f| {
                    serde_json::to_string(
                        &count_roots(f, Mode::Exact, &CountConfig::default()).unwrap(),
                    )
                    .unwrap()
                })
                .collect()
        })
    };
    assert_eq!(run(1), run(4));
}
