//! Geometry on the unit sphere `S^n ⊂ R^{n+1}` and the cube-surface grid
//! that discretizes it.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::arith::{Arithmetic, HostArithmetic};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub const DEFAULT_GRID_CAP: u64 = 100_000_000;

/// Tolerance on `|‖x‖ − 1|` for points built from host arithmetic.
pub const UNIT_TOLERANCE: f64 = 1e-12;

const TANGENT_TOLERANCE: f64 = 1e-10;
const HOUSEHOLDER_DEGENERACY: f64 = 1e-8;

/// Uniform grid of mesh `η = 2^{-k}` on the surface of the cube
/// `{y ∈ R^{n+1} : ‖y‖_∞ = 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CubeGridSpec {
    pub n: usize,
    pub k: u32,
}

impl CubeGridSpec {
    pub fn new(n: usize, k: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidLevel);
        }
        Ok(Self { n, k })
    }

    pub fn eta(&self) -> f64 {
        (-(self.k as f64)).exp2()
    }

    /// `(2^{k+1}+1)^{n+1} − (2^{k+1}−1)^{n+1}`, saturating.
    pub fn point_count(&self) -> u128 {
        let m = 1u128.checked_shl(self.k + 1).unwrap_or(u128::MAX);
        let outer = pow_saturating(m.saturating_add(1), self.n as u32 + 1);
        if outer == u128::MAX {
            return u128::MAX;
        }
        let inner = pow_saturating(m - 1, self.n as u32 + 1);
        outer - inner
    }
}

fn pow_saturating(base: u128, exp: u32) -> u128 {
    (0..exp).fold(1u128, |acc, _| acc.saturating_mul(base))
}

/// Random-access enumeration of the cube-surface lattice.
///
/// Points are grouped by owning face `(j, s)` (coordinate `j` equal to `s = ±1`),
/// faces ordered `(0,−1), (0,+1), (1,−1), …`. A point is emitted only from the
/// first face that owns it, so within face `(j, s)` the coordinates before `j`
/// range over interior values and those after `j` over the full range.
#[derive(Debug, Clone)]
pub struct CubeGrid {
    spec: CubeGridSpec,
    half: i64,
    face_sizes: Vec<u64>,
    len: u64,
}

impl CubeGrid {
    pub fn new(spec: CubeGridSpec) -> Result<Self> {
        Self::with_cap(spec, DEFAULT_GRID_CAP)
    }

    pub fn with_cap(spec: CubeGridSpec, cap: u64) -> Result<Self> {
        if spec.k == 0 {
            return Err(Error::InvalidLevel);
        }
        let points = spec.point_count();
        if points > cap as u128 {
            return Err(Error::GridTooLarge {
                k: spec.k,
                points,
                cap,
            });
        }
        let half = 1i64 << spec.k;
        let dim = spec.n + 1;
        let inner = (2 * half - 1) as u64;
        let outer = (2 * half + 1) as u64;
        let face_sizes: Vec<u64> = (0..dim)
            .map(|j| inner.pow(j as u32) * outer.pow((dim - 1 - j) as u32))
            .collect();
        let len = 2 * face_sizes.iter().sum::<u64>();
        debug_assert_eq!(len as u128, points);
        Ok(Self {
            spec,
            half,
            face_sizes,
            len,
        })
    }

    pub fn spec(&self) -> CubeGridSpec {
        self.spec
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn dim(&self) -> usize {
        self.spec.n + 1
    }

    /// Integer coordinates `i` of the point `y = i · 2^{-k}`.
    pub fn lattice(&self, index: u64) -> Vec<i64> {
        let mut out = vec![0; self.dim()];
        self.lattice_into(index, &mut out);
        out
    }

    pub fn lattice_into(&self, index: u64, out: &mut [i64]) {
        assert!(index < self.len, "grid index out of range");
        let dim = self.dim();
        let mut rem = index;
        let mut face = 0;
        loop {
            let size = self.face_sizes[face / 2];
            if rem < size {
                break;
            }
            rem -= size;
            face += 1;
        }
        let j = face / 2;
        let sign = if face % 2 == 0 { -1 } else { 1 };
        let inner = (2 * self.half - 1) as u64;
        let outer = (2 * self.half + 1) as u64;
        // least significant digit is the last coordinate
        for c in (0..dim).rev() {
            if c == j {
                out[c] = sign * self.half;
            } else if c < j {
                out[c] = (rem % inner) as i64 - (self.half - 1);
                rem /= inner;
            } else {
                out[c] = (rem % outer) as i64 - self.half;
                rem /= outer;
            }
        }
    }

    /// Inverse of [`lattice`](Self::lattice).
    pub fn index_of(&self, lattice: &[i64]) -> Option<u64> {
        let dim = self.dim();
        if lattice.len() != dim || lattice.iter().any(|c| c.abs() > self.half) {
            return None;
        }
        let j = lattice.iter().position(|c| c.abs() == self.half)?;
        let face = 2 * j + usize::from(lattice[j] > 0);
        let inner = (2 * self.half - 1) as u64;
        let outer = (2 * self.half + 1) as u64;
        let mut idx = 0u64;
        for (c, &v) in lattice.iter().enumerate() {
            if c == j {
                continue;
            }
            if c < j {
                idx = idx * inner + (v + self.half - 1) as u64;
            } else {
                idx = idx * outer + (v + self.half) as u64;
            }
        }
        let offset: u64 = (0..face).map(|f| self.face_sizes[f / 2]).sum();
        Some(offset + idx)
    }

    pub fn antipode(&self, index: u64) -> u64 {
        let neg: Vec<i64> = self.lattice(index).iter().map(|c| -c).collect();
        self.index_of(&neg).expect("grid is antipodally closed")
    }

    /// Cube point `y` with `‖y‖_∞ = 1`.
    pub fn cube_point(&self, index: u64) -> Vec<f64> {
        let eta = self.spec.eta();
        self.lattice(index)
            .iter()
            .map(|&i| i as f64 * eta)
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len).map(move |i| self.cube_point(i))
    }
}

/// Lattice points are representatives of antipodal pairs when their first
/// nonzero coordinate is positive.
pub fn is_canonical(lattice: &[i64]) -> bool {
    lattice.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0)
}

/// Stream the cube points of a grid, refusing grids above the default cap.
pub fn generate_grid(spec: CubeGridSpec) -> Result<impl Iterator<Item = Vec<f64>>> {
    let grid = CubeGrid::new(spec)?;
    Ok((0..grid.len()).map(move |i| grid.cube_point(i)))
}

/// A point of `S^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SpherePoint(Vec<f64>);

impl SpherePoint {
    /// Accepts coordinates already of unit norm.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        let norm = euclidean_norm(&coords);
        if (norm - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::NotOnSphere(norm));
        }
        Ok(Self(coords))
    }

    /// `v / ‖v‖`.
    pub fn normalize(v: &[f64]) -> Result<Self> {
        project(v)
    }

    /// Wrap coordinates produced by an emulated arithmetic; their norm is
    /// only 1 up to the context's round-off.
    pub(crate) fn from_raw(coords: Vec<f64>) -> Self {
        Self(coords)
    }

    pub fn basis(dim: usize, axis: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[axis] = 1.0;
        Self(v)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|c| -c).collect())
    }
}

impl Deref for SpherePoint {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

pub fn euclidean_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `φ(y) = y / ‖y‖`.
pub fn project(y: &[f64]) -> Result<SpherePoint> {
    let x = project_with(&HostArithmetic, y)?;
    Ok(x)
}

pub fn project_with<A: Arithmetic>(ar: &A, y: &[f64]) -> Result<SpherePoint> {
    let norm = ar.sqrt(ar.dot(y, y));
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::ZeroVector);
    }
    Ok(SpherePoint::from_raw(
        y.iter().map(|&c| ar.div(c, norm)).collect(),
    ))
}

/// `φ^{-1}(x) = x / ‖x‖_∞`.
pub fn project_inverse(x: &[f64]) -> Result<Vec<f64>> {
    let inf = x.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if inf == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(x.iter().map(|c| c / inf).collect())
}

/// Angular distance `arccos⟨x, y⟩` between unit vectors.
pub fn distance(x: &[f64], y: &[f64]) -> f64 {
    distance_with(&HostArithmetic, x, y)
}

/// Angular distance with every operation rounded in `ar`.
///
/// The angle is recovered from the shorter of the chords `‖x − y‖` and
/// `‖x + y‖` through `θ = 2 arcsin(‖x − y‖/2)`. Unlike the arccosine of a
/// rounded inner product, which cannot resolve angles below about `√u`,
/// this keeps the absolute error at a small multiple of `u`.
pub fn distance_with<A: Arithmetic>(ar: &A, x: &[f64], y: &[f64]) -> f64 {
    let mut minus = 0.0;
    let mut plus = 0.0;
    for (a, b) in x.iter().zip(y) {
        let d = ar.sub(*a, *b);
        let s = ar.add(*a, *b);
        minus = ar.add(minus, ar.mul(d, d));
        plus = ar.add(plus, ar.mul(s, s));
    }
    let half_angle = |sq: f64| ar.asin(ar.div(ar.sqrt(sq), 2.0).min(1.0));
    if minus <= plus {
        ar.mul(2.0, half_angle(minus))
    } else {
        ar.sub(
            ar.round(std::f64::consts::PI),
            ar.mul(2.0, half_angle(plus)),
        )
    }
}

/// `exp_x(h) = cos(‖h‖) x + sin(‖h‖)/‖h‖ · h` for `h ∈ T_x S^n`.
pub fn exp_map(x: &SpherePoint, h: &[f64]) -> Result<SpherePoint> {
    if h.len() != x.dim() {
        return Err(Error::Dimension {
            expected: x.dim(),
            found: h.len(),
        });
    }
    let len = euclidean_norm(h);
    let inner = HostArithmetic.dot(x, h);
    if inner.abs() > TANGENT_TOLERANCE * len.max(1.0) {
        return Err(Error::NotTangent(inner));
    }
    if len == 0.0 {
        return Ok(x.clone());
    }
    let (s, c) = len.sin_cos();
    let v: Vec<f64> = x
        .iter()
        .zip(h)
        .map(|(xi, hi)| c * xi + s / len * hi)
        .collect();
    let norm = euclidean_norm(&v);
    Ok(SpherePoint(v.iter().map(|c| c / norm).collect()))
}

/// Orthonormal basis of `T_x S^n`: the first `n` columns of the Householder
/// reflection `I − 2yyᵀ`, `y = (x − e_last)/‖x − e_last‖`, which swaps `x`
/// and the last basis vector.
///
/// When `x` is within `1e-8` of `e_last` the first `n` identity columns are
/// returned.
pub fn tangent_basis(x: &[f64]) -> Matrix {
    tangent_basis_with(&HostArithmetic, x)
}

pub fn tangent_basis_with<A: Arithmetic>(ar: &A, x: &[f64]) -> Matrix {
    let dim = x.len();
    let n = dim - 1;
    let mut y = x.to_vec();
    y[n] = ar.sub(y[n], 1.0);
    let norm = ar.sqrt(ar.dot(&y, &y));
    let mut h = Matrix::zeros(dim, n);
    if norm < HOUSEHOLDER_DEGENERACY {
        for i in 0..n {
            h[(i, i)] = 1.0;
        }
        return h;
    }
    y.iter_mut().for_each(|c| *c = ar.div(*c, norm));
    for i in 0..dim {
        for j in 0..n {
            let r = ar.mul(2.0, ar.mul(y[i], y[j]));
            h[(i, j)] = if i == j { ar.sub(1.0, r) } else { -r };
        }
    }
    h
}
