use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alpha::newton_refine;
use crate::alpha::{measures, scaled_tangent_jacobian, theory_constants};
use crate::arith::{Arithmetic, HostArithmetic, PrecisionContext};
use crate::engine::components::{ComponentSet, UnionFind};
use crate::engine::Mode;
use crate::error::{Error, Result};
use crate::linalg::{sigma_min_with, Matrix};
use crate::poly::{fill_power_table, PolynomialSystem};
use crate::sphere::{
    distance_with, is_canonical, project_with, tangent_basis_with, CubeGrid, CubeGridSpec,
    SpherePoint,
};

/// A grid point that passed the mode's certification test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    /// Index in the cube grid enumeration.
    pub index: u64,
    pub point: SpherePoint,
    pub f_sup: f64,
    pub sigma_min: f64,
    /// Host-precision `ᾱ`, kept for diagnostics in both modes.
    pub alpha_bar: f64,
    /// Radius of the certification cap around the point.
    pub radius: f64,
    /// For a point carried over from a coarser level, the angle within
    /// which all its unevaluated descendants lie; zero otherwise.
    pub extent: f64,
    /// Upper bound on the radius of those descendants; `radius` when
    /// `extent` is zero.
    pub radius_bound: f64,
}

/// A pair of vertices whose distance was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VertexPair {
    pub a: usize,
    pub b: usize,
    /// Computed distance less both extents and twice the distance
    /// rounding bound. A lower bound on the true distance between any
    /// descendants the two vertices stand for.
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProximityGraph {
    pub spec: CubeGridSpec,
    pub mode: Mode,
    pub grid_size: u64,
    /// Grid points actually evaluated; the rest were settled at a coarser
    /// level.
    pub evaluated_count: u64,
    /// Sorted by grid index.
    pub vertices: Vec<Vertex>,
    /// Connected components under the edge relation
    /// `d(a, b) ≤ r_a + r_b` (see [`ProximityGraph::is_edge`]).
    pub components: ComponentSet,
    /// Pairs in different components at the time they were examined, with
    /// distance at most `search_radius`. Every pair of vertices in
    /// different final components that is missing here is farther apart
    /// than `search_radius`.
    pub near_pairs: Vec<VertexPair>,
    pub search_radius: f64,
    /// False when linking stopped at its work budget. Components may then
    /// be split and `near_pairs` incomplete, so condition (i) fails.
    pub linked: bool,
    /// Number of evaluated grid points that failed the certification test.
    pub excluded_count: u64,
    /// Smallest residual `‖f(x)‖_∞` among those points.
    pub min_excluded_fsup: Option<f64>,
    /// `max_x min{μ_norm(f,x), ‖f‖/‖f(x)‖_∞}` over this grid.
    pub kappa_estimate: f64,
    /// Condition (i) distance threshold.
    pub separation_threshold: f64,
    /// Condition (ii) residual threshold.
    pub exclusion_threshold: f64,
}

impl ProximityGraph {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// The edge predicate, evaluated in the graph's arithmetic.
    pub fn is_edge(&self, a: usize, b: usize) -> bool {
        let (va, vb) = (&self.vertices[a], &self.vertices[b]);
        match self.mode {
            Mode::Exact => {
                let ar = HostArithmetic;
                distance_with(&ar, &va.point, &vb.point) <= ar.add(va.radius, vb.radius)
            }
            Mode::Rounded(ctx) => {
                distance_with(&ctx, &va.point, &vb.point) <= ctx.add(va.radius, vb.radius)
            }
        }
    }
}

/// Outcome of the two halting conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HaltCheck {
    pub condition_i: bool,
    pub condition_ii: bool,
    pub min_intercomponent_distance: Option<f64>,
    pub min_excluded_fsup: Option<f64>,
    /// Some unevaluated descendant of a carried vertex might have an edge
    /// into another component. Condition (i) fails while this holds.
    pub bridge_suspected: bool,
}

impl HaltCheck {
    pub fn halts(&self) -> bool {
        self.condition_i && self.condition_ii
    }
}

/// Mode-specific tests with constants already rounded into the arithmetic.
struct Criteria<A> {
    ar: A,
    rounded: bool,
    n: f64,
    norm: f64,
    max_degree: u32,
    // exact mode
    alpha_star: f64,
    sigma: f64,
    // rounded mode
    n_d32: f64,
    alpha_bullet: f64,
    radius_scale: f64,
    sqrt_n1: f64,
    sep_scale: f64,
    excl_scale: f64,
    sqrt_n1d: f64,
    // subtree settling
    sqrt_d: f64,
    sigma_lipschitz: f64,
    /// Bound on the error of a computed residual, including the error of
    /// the computed grid point.
    value_slack: f64,
    /// Bound on the error of a computed `σ_min`, and relative slack for
    /// the comparisons.
    slack: f64,
}

impl<A: Arithmetic> Criteria<A> {
    fn new(ar: A, rounded: bool, f: &PolynomialSystem) -> Self {
        let c = theory_constants();
        let n = f.n() as f64;
        let d = f.max_degree() as f64;
        let r = |x: f64| ar.round(x);
        let d32 = ar.mul(r(d), ar.sqrt(r(d)));
        let n_d32 = r(n);
        let sqrt_n = ar.sqrt(r(n));
        let radius_scale = ar.mul(ar.mul(r(1.5), r(c.sigma)), sqrt_n);
        let sqrt_n1 = ar.sqrt(r(n + 1.0));
        let sep_scale = ar.mul(r(1.5), r(PI));
        let excl_scale = ar.mul(r(FRAC_1_SQRT_2), r(PI));
        let sqrt_n1d = ar.sqrt(ar.mul(r(n + 1.0), r(d)));
        let (value_slack, slack) = if rounded {
            let u = ar.unit_roundoff();
            let terms = f.max_terms() as f64;
            // each monomial takes at most D + n + 1 roundings, the sum S − 1
            // more; the Weyl norm bounds Σ|c_J x^J| by ‖f_i‖ ≤ 1
            let value = 2.0 * (terms + d + n + 2.0 + d.sqrt() * (n + 3.0)) * u;
            let ops = terms + 2.0 * d + (n + 2.0).powi(2);
            (value, 4.0 * ops * u)
        } else {
            (1e-9, 1e-9)
        };
        Self {
            rounded,
            n,
            norm: f.norm(),
            max_degree: f.max_degree(),
            alpha_star: c.alpha_star,
            sigma: c.sigma,
            n_d32: ar.mul(n_d32, d32),
            alpha_bullet: r(c.alpha_bullet),
            radius_scale,
            sqrt_n1,
            sep_scale,
            excl_scale,
            sqrt_n1d,
            sqrt_d: d.sqrt(),
            sigma_lipschitz: n.sqrt() * d.powf(1.5),
            value_slack,
            slack,
            ar,
        }
    }

    /// True when no point within `reach` of a point with these values can
    /// be a vertex or have a residual at or below `threshold`, at any finer
    /// level.
    ///
    /// Residuals move by at most `√D` per unit of distance (exclusion
    /// lemma). `σ_min(M)` moves by at most `√n D^{3/2}`: it is the `n`-th
    /// singular value of `diag(d_i)^{-1/2} Df(x) (I − xxᵀ)`, and the Weyl
    /// norm bounds the first two derivatives of each `f_i` by `d_i` and
    /// `d_i(d_i − 1)`. Also `σ_min ≤ 1` because `‖M‖_F ≤ √n`.
    fn settled(&self, f_sup: f64, sigma_min: f64, reach: f64, threshold: f64) -> bool {
        let e = self.slack;
        if e > 0.05 {
            return false;
        }
        let f_lo = f_sup - 2.0 * self.value_slack - self.sqrt_d * reach;
        if f_lo <= 0.0 {
            return false;
        }
        let s_hi = (sigma_min + 2.0 * e + self.sigma_lipschitz * reach).min(1.0 + 2.0 * e);
        let d32 = (self.max_degree as f64).powf(1.5);
        let lhs = self.n * f_lo * d32 * (1.0 - e);
        let rhs = s_hi * s_hi * (1.0 + e);
        let no_vertex = if self.rounded {
            lhs >= self.alpha_bullet * rhs
        } else {
            lhs >= 2.0 * self.alpha_star * rhs
        };
        no_vertex && f_lo * (1.0 - e) > threshold * (1.0 + e)
    }

    /// For a vertex with these values, `Some(bound)` when every point within
    /// `reach` provably passes the certification test with a radius of at
    /// most `bound`, and lies within the vertex's own radius, so that it
    /// would join the vertex's component.
    fn absorbs(&self, f_sup: f64, sigma_min: f64, radius: f64, reach: f64) -> Option<f64> {
        let e = self.slack;
        if e > 0.05 {
            return None;
        }
        let f_hi = f_sup + 2.0 * self.value_slack + self.sqrt_d * reach;
        let s_lo = sigma_min - 2.0 * e - self.sigma_lipschitz * reach;
        if s_lo <= 0.0 {
            return None;
        }
        let d32 = (self.max_degree as f64).powf(1.5);
        let lhs = self.n * f_hi * d32 * (1.0 + e);
        let rhs = s_lo * s_lo * (1.0 - e);
        let certified = if self.rounded {
            lhs < self.alpha_bullet * rhs
        } else {
            lhs < 2.0 * self.alpha_star * rhs
        };
        let adjacent = reach <= radius * (1.0 - e) - 4.0 * self.distance_error();
        let scale = if self.rounded {
            1.5 * self.sigma
        } else {
            self.sigma
        };
        let bound = scale * self.n.sqrt() * f_hi / s_lo * (1.0 + e);
        (certified && adjacent).then_some(bound)
    }

    /// `Some((ᾱ, radius))` when the point passes the test.
    fn certify(&self, f_sup: f64, sigma_min: f64) -> (f64, Option<f64>) {
        let m = measures(
            self.n as usize,
            self.max_degree,
            self.norm,
            sigma_min,
            f_sup,
        );
        if !self.rounded {
            let pass = m.alpha_bar < self.alpha_star;
            return (m.alpha_bar, pass.then_some(self.sigma * m.beta_bar));
        }
        let ar = &self.ar;
        let lhs = ar.mul(self.n_d32, f_sup);
        let rhs = ar.mul(self.alpha_bullet, ar.mul(sigma_min, sigma_min));
        if sigma_min > 0.0 && lhs < rhs {
            let radius = ar.div(ar.mul(self.radius_scale, f_sup), sigma_min);
            (m.alpha_bar, Some(radius))
        } else {
            (m.alpha_bar, None)
        }
    }

    fn separation_threshold(&self, eta: f64) -> f64 {
        if self.rounded {
            self.ar.mul(self.ar.mul(self.sep_scale, eta), self.sqrt_n1)
        } else {
            PI * eta * (self.n + 1.0).sqrt()
        }
    }

    fn exclusion_threshold(&self, eta: f64) -> f64 {
        if self.rounded {
            self.ar
                .mul(self.ar.mul(self.excl_scale, eta), self.sqrt_n1d)
        } else {
            PI / 2.0 * eta * ((self.n + 1.0) * self.max_degree as f64).sqrt() * self.norm
        }
    }

    /// Bound on `|fl(d(x, y)) − d(x, y)|` for points within `(n + 3)u` of
    /// the sphere. The half-angle fed to arcsin is at most `π/4`, so the
    /// chord error is amplified by at most `√2`.
    fn distance_error(&self) -> f64 {
        let u = self.ar.unit_roundoff().max(f64::EPSILON);
        8.0 * (self.n + 3.0) * u
    }
}

struct Scratch {
    lattice: Vec<i64>,
    cube: Vec<f64>,
    table: Vec<f64>,
    values: Vec<f64>,
    jac: Matrix,
}

impl Scratch {
    fn new(f: &PolynomialSystem) -> Self {
        Self {
            lattice: vec![0; f.vars()],
            cube: vec![0.0; f.vars()],
            table: Vec::new(),
            values: vec![0.0; f.n()],
            jac: Matrix::zeros(f.n(), f.vars()),
        }
    }
}

/// `(‖f(x)‖_∞, σ_min(M))` at `x`, evaluated in `ar`.
fn sample<A: Arithmetic>(ar: &A, f: &PolynomialSystem, x: &[f64], s: &mut Scratch) -> (f64, f64) {
    fill_power_table(ar, x, f.max_degree(), &mut s.table);
    let stride = f.max_degree() as usize + 1;
    for (v, p) in s.values.iter_mut().zip(f.polys()) {
        *v = p.evaluate_powers(ar, &s.table, stride);
    }
    let f_sup = s.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    f.jacobian_from_table(ar, &s.table, &mut s.jac);
    let h = tangent_basis_with(ar, x);
    let m = scaled_tangent_jacobian(ar, f, &s.jac, &h);
    (f_sup, sigma_min_with(ar, &m))
}

fn kappa_term(n: usize, norm: f64, f_sup: f64, sigma_min: f64) -> f64 {
    let mu = if sigma_min > 0.0 {
        norm * (n as f64).sqrt() / sigma_min
    } else {
        f64::INFINITY
    };
    let inv = if f_sup > 0.0 {
        norm / f_sup
    } else {
        f64::INFINITY
    };
    mu.min(inv)
}

/// A vertex whose subtree is represented by the vertex itself at every
/// finer level.
#[derive(Debug, Clone)]
pub(crate) struct Carried {
    /// Canonical lattice coordinates at the current level.
    pub lattice: Vec<i64>,
    pub vertex: Vertex,
}

impl Carried {
    /// Move to the next level, where the same point has doubled coordinates.
    pub fn refine(&mut self) {
        self.lattice.iter_mut().for_each(|c| *c *= 2);
    }
}

#[derive(Default)]
struct Sweep {
    vertices: Vec<Vertex>,
    excluded: u64,
    min_excluded: Option<f64>,
    kappa: f64,
    survivors: Vec<u64>,
    absorbed: Vec<Carried>,
}

impl Sweep {
    fn merge(mut self, other: Sweep) -> Sweep {
        self.vertices.extend(other.vertices);
        self.excluded += other.excluded;
        self.min_excluded = match (self.min_excluded, other.min_excluded) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        self.kappa = self.kappa.max(other.kappa);
        self.survivors.extend(other.survivors);
        self.absorbed.extend(other.absorbed);
        self
    }

    fn exclude(&mut self, f_sup: f64, times: u64) {
        self.excluded += times;
        self.min_excluded = Some(self.min_excluded.map_or(f_sup, |m| m.min(f_sup)));
    }
}

/// A scanned level together with the canonical points whose subtrees may
/// still matter at finer levels, and the vertices whose subtrees need no
/// further evaluation.
pub(crate) struct LevelScan {
    pub graph: ProximityGraph,
    pub survivors: Vec<u64>,
    pub absorbed: Vec<Carried>,
}

/// Build the proximity graph of `f` on the grid `spec`.
///
/// Each antipodal pair of grid points is evaluated once, at the member whose
/// first nonzero lattice coordinate is positive, and mirrored. Since every
/// quantity involved is invariant under `x ↦ −x`, this changes nothing but
/// the cost, and it makes the vertex set symmetric to the last bit.
pub fn build_graph(
    f: &PolynomialSystem,
    spec: CubeGridSpec,
    mode: Mode,
    cap: u64,
) -> Result<ProximityGraph> {
    Ok(scan_level(f, spec, mode, cap, None, &[])?.graph)
}

/// Scan the whole grid (`candidates = None`) or only the listed canonical
/// indices. Every unlisted point must either be known to be a non-vertex
/// whose residual clears the exclusion threshold, or be represented by one
/// of the `carried` vertices, given in this level's coordinates.
pub(crate) fn scan_level(
    f: &PolynomialSystem,
    spec: CubeGridSpec,
    mode: Mode,
    cap: u64,
    candidates: Option<&[u64]>,
    carried: &[Carried],
) -> Result<LevelScan> {
    let grid = match candidates {
        None => CubeGrid::with_cap(spec, cap)?,
        Some(list) => {
            let grid = CubeGrid::with_cap(spec, u64::MAX)?;
            let points = 2 * list.len() as u128;
            if points > cap as u128 {
                return Err(Error::GridTooLarge {
                    k: spec.k,
                    points,
                    cap,
                });
            }
            grid
        }
    };
    Ok(match mode {
        Mode::Exact => scan_in(
            f,
            &grid,
            mode,
            Criteria::new(HostArithmetic, false, f),
            candidates,
            carried,
        ),
        Mode::Rounded(ctx) => {
            let rounded = f.map_coefficients(|c| ctx.round(c));
            scan_in(
                &rounded,
                &grid,
                mode,
                Criteria::new(ctx, true, &rounded),
                candidates,
                carried,
            )
        }
    })
}

fn scan_in<A: Arithmetic>(
    f: &PolynomialSystem,
    grid: &CubeGrid,
    mode: Mode,
    crit: Criteria<A>,
    candidates: Option<&[u64]>,
    carried: &[Carried],
) -> LevelScan {
    let spec = grid.spec();
    let eta = spec.eta();
    let ar = &crit.ar;
    let (n, norm) = (f.n(), f.norm());
    // every descendant of a level-k point lies within this angle of it
    let reach = 2.0 * (eta * (n as f64).sqrt() / 2.0).min(1.0).asin();
    let next_threshold = crit.exclusion_threshold(eta / 2.0);

    let visit = |(mut acc, mut s): (Sweep, Scratch), index: u64| {
        grid.lattice_into(index, &mut s.lattice);
        if !is_canonical(&s.lattice) {
            return (acc, s);
        }
        for (c, &l) in s.cube.iter_mut().zip(&s.lattice) {
            *c = l as f64 * eta;
        }
        let x = project_with(ar, &s.cube).expect("cube points are nonzero");
        let (f_sup, sigma_min) = sample(ar, f, &x, &mut s);
        acc.kappa = acc.kappa.max(kappa_term(n, norm, f_sup, sigma_min));
        match crit.certify(f_sup, sigma_min) {
            (alpha_bar, Some(radius)) => {
                let vertex = Vertex {
                    index,
                    point: x,
                    f_sup,
                    sigma_min,
                    alpha_bar,
                    radius,
                    extent: 0.0,
                    radius_bound: radius,
                };
                match crit.absorbs(f_sup, sigma_min, radius, reach) {
                    Some(bound) => acc.absorbed.push(Carried {
                        lattice: s.lattice.clone(),
                        vertex: Vertex {
                            extent: reach,
                            radius_bound: bound,
                            ..vertex.clone()
                        },
                    }),
                    None => acc.survivors.push(index),
                }
                acc.vertices.push(mirror(grid, &vertex));
                acc.vertices.push(vertex);
            }
            (_, None) => {
                if !crit.settled(f_sup, sigma_min, reach, next_threshold) {
                    acc.survivors.push(index);
                }
                acc.exclude(f_sup, 2)
            }
        }
        (acc, s)
    };
    let init = || (Sweep::default(), Scratch::new(f));
    let sweep = match candidates {
        None => (0..grid.len())
            .into_par_iter()
            .fold(init, visit)
            .map(|(acc, _)| acc)
            .reduce(Sweep::default, Sweep::merge),
        Some(list) => list
            .par_iter()
            .copied()
            .fold(init, visit)
            .map(|(acc, _)| acc)
            .reduce(Sweep::default, Sweep::merge),
    };
    let evaluated_count = match candidates {
        None => grid.len(),
        Some(list) => 2 * list.len() as u64,
    };

    let Sweep {
        mut vertices,
        excluded,
        min_excluded,
        kappa,
        mut survivors,
        mut absorbed,
    } = sweep;
    for c in carried {
        let index = grid
            .index_of(&c.lattice)
            .expect("carried points lie on the grid");
        let vertex = Vertex {
            index,
            ..c.vertex.clone()
        };
        vertices.push(mirror(grid, &vertex));
        vertices.push(vertex);
    }
    vertices.sort_by_key(|v| v.index);
    survivors.sort_unstable();
    absorbed.sort_by_key(|c| c.vertex.index);

    let separation_threshold = crit.separation_threshold(eta);
    let exclusion_threshold = crit.exclusion_threshold(eta);
    let max_radius = vertices.iter().fold(0.0f64, |m, v| m.max(v.radius_bound));
    let search_radius = (2.0 * max_radius).max(separation_threshold) + 4.0 * crit.distance_error();
    let (components, near_pairs, linked) = link(f, &crit, &vertices, search_radius);

    let graph = ProximityGraph {
        spec,
        mode,
        grid_size: grid.len(),
        evaluated_count,
        vertices,
        components,
        near_pairs,
        search_radius,
        linked,
        excluded_count: excluded,
        min_excluded_fsup: min_excluded,
        kappa_estimate: kappa,
        separation_threshold,
        exclusion_threshold,
    };
    LevelScan {
        graph,
        survivors,
        absorbed,
    }
}

fn mirror(grid: &CubeGrid, v: &Vertex) -> Vertex {
    Vertex {
        index: grid.antipode(v.index),
        point: v.point.negated(),
        ..v.clone()
    }
}

/// Canonical indices at the next level of the children of `survivors`.
///
/// A fine lattice point `c` has the coarse parent `p` with `p_j = c_j / 2`,
/// rounding odd coordinates toward zero. Parents stay on the cube surface,
/// every fine point has exactly one parent, and all descendants of `p` lie
/// within one coarse mesh step of it in each coordinate.
pub(crate) fn next_candidates(coarse: &CubeGrid, fine: &CubeGrid, survivors: &[u64]) -> Vec<u64> {
    let half = 1i64 << fine.spec().k;
    let mut out: Vec<u64> = survivors
        .par_iter()
        .flat_map_iter(|&index| {
            let parent = coarse.lattice(index);
            let axes: Vec<Vec<i64>> = parent
                .iter()
                .map(|&p| match p.signum() {
                    0 => vec![-1, 0, 1],
                    s => [2 * p, 2 * p + s]
                        .into_iter()
                        .filter(|c| c.abs() <= half)
                        .collect(),
                })
                .collect();
            let total: usize = axes.iter().map(Vec::len).product();
            let mut child = vec![0i64; parent.len()];
            (0..total)
                .map(|mut code| {
                    for (c, axis) in child.iter_mut().zip(&axes) {
                        *c = axis[code % axis.len()];
                        code /= axis.len();
                    }
                    if !is_canonical(&child) {
                        child.iter_mut().for_each(|c| *c = -*c);
                    }
                    fine.index_of(&child)
                        .expect("children lie on the fine grid")
                })
                .collect::<Vec<_>>()
        })
        .collect();
    out.sort_unstable();
    out
}

/// Pair examinations allowed per vertex when linking one level.
pub const LINK_BUDGET_PER_VERTEX: usize = 256;
const LINK_BUDGET_FLOOR: usize = 1 << 20;

/// Vertices whose caps provably contain a common point.
struct Unit {
    witness: Vec<f64>,
    members: Vec<usize>,
    /// Largest computed distance from a member to the witness, plus the
    /// member's extent.
    reach: f64,
}

/// Components of the graph and the cross-component pairs within
/// `search_radius`.
///
/// Checking all pairs is quadratic, and near a zero the graph is close to a
/// clique: every certified cap contains the zero its point converges to. So
/// vertices are first gathered around witnesses (Newton limits). If
/// `fl(d(a, w)) ≤ r_a − s_a` and `fl(d(b, w)) ≤ r_b − s_b`, with `s` covering
/// the rounding error of three distance evaluations and one addition, then
/// `fl(d(a, b)) ≤ fl(r_a + r_b)`, so each group is a clique of the computed
/// edge relation. Pairs across groups are examined one by one unless the
/// triangle inequality through the two witnesses puts all of them beyond
/// `search_radius`.
///
/// When round-off makes every cap useless and every pair near, this is
/// quadratic in time and memory. The work is capped at
/// [`LINK_BUDGET_PER_VERTEX`] pair examinations per vertex; past that the
/// returned flag is false and the partial result must not be used to halt.
fn link<A: Arithmetic>(
    f: &PolynomialSystem,
    crit: &Criteria<A>,
    vertices: &[Vertex],
    search_radius: f64,
) -> (ComponentSet, Vec<VertexPair>, bool) {
    let ar = &crit.ar;
    let err = crit.distance_error();
    let u = ar.unit_roundoff();

    let mut groups: Vec<Unit> = Vec::new();
    let mut loners: Vec<Unit> = Vec::new();
    for (a, v) in vertices.iter().enumerate() {
        let limit = v.radius - 2.0 * err - 2.0 * u * v.radius;
        let lone = || Unit {
            witness: v.point.to_vec(),
            members: vec![a],
            reach: v.extent,
        };
        if limit <= 0.0 {
            loners.push(lone());
            continue;
        }
        let hit = groups
            .iter()
            .enumerate()
            .map(|(g, unit)| (g, distance_with(ar, &v.point, &unit.witness)))
            .find(|&(_, d)| d <= limit);
        if let Some((g, d)) = hit {
            groups[g].members.push(a);
            groups[g].reach = groups[g].reach.max(d + v.extent);
            continue;
        }
        let z = newton_refine(f, &v.point, 6, 0.0).point;
        let d = distance_with(ar, &v.point, &z);
        if d <= limit {
            groups.push(Unit {
                witness: z.into_coords(),
                members: vec![a],
                reach: d + v.extent,
            });
        } else {
            loners.push(lone());
        }
    }

    let mut uf = UnionFind::new(vertices.len());
    for g in &groups {
        for &m in &g.members[1..] {
            uf.union(g.members[0], m);
        }
    }

    let mut units = groups;
    units.extend(loners);
    // sweep in order of the witnesses' first coordinate; the gap there
    // bounds the chord between witnesses
    units.sort_by(|a, b| {
        a.witness[0]
            .total_cmp(&b.witness[0])
            .then(a.members[0].cmp(&b.members[0]))
    });
    let max_reach = units.iter().fold(0.0f64, |m, g| m.max(g.reach));
    let window = search_radius + 2.0 * max_reach + 4.0 * err;
    let chord = if window >= PI {
        f64::INFINITY
    } else {
        2.0 * (window / 2.0).sin() + 1e-12
    };

    let mut pairs = Vec::new();
    let mut budget = LINK_BUDGET_PER_VERTEX
        .saturating_mul(vertices.len())
        .max(LINK_BUDGET_FLOOR);
    let mut complete = true;
    'sweep: for i in 0..units.len() {
        for j in i + 1..units.len() {
            let (gi, gj) = (&units[i], &units[j]);
            if gj.witness[0] - gi.witness[0] > chord {
                break;
            }
            if budget == 0 {
                complete = false;
                break 'sweep;
            }
            budget -= 1;
            // groups are cliques, so one merged pair settles the rest
            if uf.same(gi.members[0], gj.members[0]) {
                continue;
            }
            let dw = distance_with(ar, &gi.witness, &gj.witness);
            if dw - gi.reach - gj.reach - 4.0 * err > search_radius {
                continue;
            }
            for &a in &gi.members {
                for &b in &gj.members {
                    if uf.same(a, b) {
                        continue;
                    }
                    if budget == 0 {
                        complete = false;
                        break 'sweep;
                    }
                    budget -= 1;
                    let (va, vb) = (&vertices[a], &vertices[b]);
                    let d = distance_with(ar, &va.point, &vb.point);
                    if d <= ar.add(va.radius, vb.radius) {
                        uf.union(a, b);
                    }
                    let gap = d - va.extent - vb.extent - 2.0 * err;
                    if gap <= search_radius {
                        pairs.push(VertexPair {
                            a: a.min(b),
                            b: a.max(b),
                            distance: gap,
                        });
                    }
                }
            }
        }
    }
    pairs.sort_by_key(|p| (p.a, p.b));
    (ComponentSet::from_union_find(&mut uf), pairs, complete)
}

pub fn connected_components(graph: &ProximityGraph) -> ComponentSet {
    graph.components.clone()
}

/// Evaluate both halting conditions for `graph` at its own level.
///
/// A carried vertex stands for descendants that were never evaluated. If
/// one of them could have an edge into another component, the components
/// of the full graph might differ, so condition (i) is reported failed.
pub fn check_halt(graph: &ProximityGraph, components: &ComponentSet) -> HaltCheck {
    let u = match graph.mode {
        Mode::Exact => f64::EPSILON,
        Mode::Rounded(ctx) => ctx.u(),
    };
    let cross = || {
        graph
            .near_pairs
            .iter()
            .filter(|p| components.labels[p.a] != components.labels[p.b])
    };
    let min_intercomponent_distance = cross().map(|p| p.distance).reduce(f64::min);
    let bridge_suspected = cross().any(|p| {
        let (va, vb) = (&graph.vertices[p.a], &graph.vertices[p.b]);
        va.extent + vb.extent > 0.0
            && p.distance <= (va.radius_bound + vb.radius_bound) * (1.0 + 2.0 * u)
    });
    let condition_i = graph.linked
        && !bridge_suspected
        && min_intercomponent_distance.is_none_or(|d| d > graph.separation_threshold);
    let condition_ii = graph
        .min_excluded_fsup
        .is_none_or(|s| s > graph.exclusion_threshold);
    HaltCheck {
        condition_i,
        condition_ii,
        min_intercomponent_distance,
        min_excluded_fsup: graph.min_excluded_fsup,
        bridge_suspected,
    }
}

/// Grid lower bound on `κ(f)` for a normalized `f`.
pub fn estimate_kappa(f: &PolynomialSystem, spec: CubeGridSpec, cap: u64) -> Result<f64> {
    let grid = CubeGrid::with_cap(spec, cap)?;
    let eta = spec.eta();
    let (n, norm) = (f.n(), f.norm());
    Ok((0..grid.len())
        .into_par_iter()
        .fold(
            || (0.0f64, Scratch::new(f)),
            |(acc, mut s), index| {
                grid.lattice_into(index, &mut s.lattice);
                if !is_canonical(&s.lattice) {
                    return (acc, s);
                }
                for (c, &l) in s.cube.iter_mut().zip(&s.lattice) {
                    *c = l as f64 * eta;
                }
                let x = project_with(&HostArithmetic, &s.cube).expect("cube points are nonzero");
                let (f_sup, sigma_min) = sample(&HostArithmetic, f, &x, &mut s);
                (acc.max(kappa_term(n, norm, f_sup, sigma_min)), s)
            },
        )
        .map(|(acc, _)| acc)
        .reduce(|| 0.0, f64::max))
}

/// Rounded-mode constants, exposed for diagnostics and tests.
pub fn rounded_thresholds(ctx: &PrecisionContext, f: &PolynomialSystem, eta: f64) -> (f64, f64) {
    let crit = Criteria::new(*ctx, true, f);
    (
        crit.separation_threshold(eta),
        crit.exclusion_threshold(eta),
    )
}
