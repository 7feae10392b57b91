//! Homogeneous polynomial systems: storage, parsing, evaluation,
//! differentiation and the Weyl (Bombieri) norm.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::arith::{Arithmetic, HostArithmetic};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// One term `c · X^J`.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub exponents: Vec<u32>,
    pub coefficient: f64,
}

impl Monomial {
    pub fn new(exponents: Vec<u32>, coefficient: f64) -> Self {
        Self {
            exponents,
            coefficient,
        }
    }

    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }
}

/// Borrowed view of a stored term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term<'a> {
    pub exponents: &'a [u32],
    pub coefficient: f64,
}

/// A homogeneous polynomial in `vars` variables, terms sorted by exponent
/// vector (lexicographic).
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    vars: usize,
    degree: u32,
    exponents: Vec<u32>,
    coefficients: Vec<f64>,
    multinomials: Vec<f64>,
}

impl Polynomial {
    /// Build from terms, rejecting non-homogeneous input and duplicate
    /// exponent vectors. Zero coefficients are dropped after validation.
    pub fn new(vars: usize, degree: u32, terms: Vec<Monomial>) -> Result<Self> {
        Self::with_index(0, vars, degree, terms)
    }

    fn with_index(poly: usize, vars: usize, degree: u32, mut terms: Vec<Monomial>) -> Result<Self> {
        for t in &terms {
            if t.exponents.len() != vars {
                return Err(Error::ExponentArity {
                    poly,
                    found: t.exponents.len(),
                    expected: vars,
                });
            }
            if !t.coefficient.is_finite() {
                return Err(Error::NonFiniteCoefficient { poly });
            }
            if t.degree() != degree {
                return Err(Error::NotHomogeneous {
                    poly,
                    monomial: t.exponents.iter().map(|&e| e as i64).collect(),
                    found: t.degree() as i64,
                    expected: degree,
                });
            }
        }
        terms.sort_by(|a, b| a.exponents.cmp(&b.exponents));
        if let Some(w) = terms.windows(2).find(|w| w[0].exponents == w[1].exponents) {
            return Err(Error::DuplicateMonomial {
                poly,
                monomial: w[0].exponents.clone(),
            });
        }
        terms.retain(|t| t.coefficient != 0.0);

        let mut exponents = Vec::with_capacity(terms.len() * vars);
        let mut coefficients = Vec::with_capacity(terms.len());
        let mut multinomials = Vec::with_capacity(terms.len());
        for t in terms {
            multinomials.push(multinomial(&t.exponents));
            exponents.extend_from_slice(&t.exponents);
            coefficients.push(t.coefficient);
        }
        Ok(Self {
            vars,
            degree,
            exponents,
            coefficients,
            multinomials,
        })
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = Term<'_>> + '_ {
        self.exponents
            .chunks_exact(self.vars.max(1))
            .zip(&self.coefficients)
            .map(|(e, c)| Term {
                exponents: e,
                coefficient: *c,
            })
    }

    pub fn to_monomials(&self) -> Vec<Monomial> {
        self.terms()
            .map(|t| Monomial::new(t.exponents.to_vec(), t.coefficient))
            .collect()
    }

    /// `⟨g, h⟩ = Σ_J g_J h_J / (d choose J)`; both operands must share degree
    /// and variable count.
    pub fn weyl_inner(&self, other: &Polynomial) -> f64 {
        assert_eq!(self.vars, other.vars, "variable count mismatch");
        assert_eq!(self.degree, other.degree, "degree mismatch");
        let a: Vec<_> = self.terms().zip(&self.multinomials).collect();
        let b: Vec<_> = other.terms().collect();
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < a.len() && j < b.len() {
            match a[i].0.exponents.cmp(b[j].exponents) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += a[i].0.coefficient * b[j].coefficient / a[i].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    /// `sqrt(Σ_J c_J² / (d choose J))`.
    pub fn weyl_norm(&self) -> f64 {
        self.coefficients
            .iter()
            .zip(&self.multinomials)
            .map(|(c, m)| c * c / m)
            .sum::<f64>()
            .sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Polynomial {
        self.map_coefficients(|c| c * factor)
    }

    /// Apply `op` to every coefficient. `op` must not map a nonzero
    /// coefficient to zero.
    pub fn map_coefficients(&self, op: impl Fn(f64) -> f64) -> Polynomial {
        let mut p = self.clone();
        p.coefficients.iter_mut().for_each(|c| *c = op(*c));
        p
    }

    /// Value at `x`, one term at a time.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        let table = power_table(&HostArithmetic, x, self.degree);
        self.evaluate_powers(&HostArithmetic, &table, self.degree as usize + 1)
    }

    /// Evaluate from a power table laid out as `table[k * stride + e] = x_k^e`.
    pub(crate) fn evaluate_powers<A: Arithmetic>(
        &self,
        ar: &A,
        table: &[f64],
        stride: usize,
    ) -> f64 {
        let mut acc = 0.0;
        for t in self.terms() {
            let mut v = t.coefficient;
            for (k, &e) in t.exponents.iter().enumerate() {
                if e > 0 {
                    v = ar.mul(v, table[k * stride + e as usize]);
                }
            }
            acc = ar.add(acc, v);
        }
        acc
    }

    /// Gradient from a power table; writes `vars` partial derivatives.
    pub(crate) fn gradient_powers<A: Arithmetic>(
        &self,
        ar: &A,
        table: &[f64],
        stride: usize,
        out: &mut [f64],
    ) {
        out.iter_mut().for_each(|g| *g = 0.0);
        for t in self.terms() {
            for (k, &ek) in t.exponents.iter().enumerate() {
                if ek == 0 {
                    continue;
                }
                let mut v = ar.mul(t.coefficient, ek as f64);
                for (j, &e) in t.exponents.iter().enumerate() {
                    let e = if j == k { e - 1 } else { e };
                    if e > 0 {
                        v = ar.mul(v, table[j * stride + e as usize]);
                    }
                }
                out[k] = ar.add(out[k], v);
            }
        }
    }

    /// Substitute `X ↦ Q X`, i.e. return `g(X) = f(QX)` for a square
    /// row-major `q`.
    pub fn compose_linear(&self, q: &Matrix) -> Polynomial {
        assert_eq!(q.rows(), self.vars);
        assert_eq!(q.cols(), self.vars);
        let mut out: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for t in self.terms() {
            let mut partial: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
            partial.insert(vec![0; self.vars], t.coefficient);
            for (j, &e) in t.exponents.iter().enumerate() {
                for _ in 0..e {
                    partial = multiply_linear(&partial, q.row(j));
                }
            }
            for (k, v) in partial {
                *out.entry(k).or_insert(0.0) += v;
            }
        }
        let terms = out.into_iter().map(|(e, c)| Monomial::new(e, c)).collect();
        Polynomial::new(self.vars, self.degree, terms).expect("composition preserves homogeneity")
    }

    /// `(Σ_k a_k X_k)^d` expanded.
    pub fn linear_power(linear: &[f64], degree: u32) -> Polynomial {
        let mut acc: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        acc.insert(vec![0; linear.len()], 1.0);
        for _ in 0..degree {
            acc = multiply_linear(&acc, linear);
        }
        let terms = acc.into_iter().map(|(e, c)| Monomial::new(e, c)).collect();
        Polynomial::new(linear.len(), degree, terms).expect("power of a linear form is homogeneous")
    }
}

fn multiply_linear(poly: &BTreeMap<Vec<u32>, f64>, linear: &[f64]) -> BTreeMap<Vec<u32>, f64> {
    let mut out = BTreeMap::new();
    for (e, c) in poly {
        for (k, a) in linear.iter().enumerate() {
            if *a == 0.0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[k] += 1;
            *out.entry(e2).or_insert(0.0) += c * a;
        }
    }
    out
}

/// `d! / (J_0! ⋯ J_n!)`, computed exactly then converted once.
pub fn multinomial(exponents: &[u32]) -> f64 {
    let mut acc = BigUint::one();
    let mut total = 0u64;
    // product of binomials C(J_0 + … + J_k, J_k)
    for &e in exponents {
        for i in 1..=e as u64 {
            total += 1;
            acc *= total;
            acc /= i;
        }
    }
    acc.to_f64().unwrap_or(f64::INFINITY)
}

/// Powers `x_k^e` for `e ≤ degree`, each by one multiplication in `ar`.
pub(crate) fn power_table<A: Arithmetic>(ar: &A, x: &[f64], degree: u32) -> Vec<f64> {
    let mut table = Vec::new();
    fill_power_table(ar, x, degree, &mut table);
    table
}

pub(crate) fn fill_power_table<A: Arithmetic>(
    ar: &A,
    x: &[f64],
    degree: u32,
    table: &mut Vec<f64>,
) {
    let stride = degree as usize + 1;
    table.clear();
    table.resize(x.len() * stride, 0.0);
    for (k, &xk) in x.iter().enumerate() {
        let row = &mut table[k * stride..(k + 1) * stride];
        row[0] = 1.0;
        for e in 1..stride {
            row[e] = ar.mul(row[e - 1], xk);
        }
    }
}

/// A square homogeneous system: `n` polynomials in `n + 1` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialSystem {
    polys: Vec<Polynomial>,
    degrees: Vec<u32>,
    max_degree: u32,
    max_terms: usize,
    norm: f64,
}

impl PolynomialSystem {
    pub fn new(polys: Vec<Polynomial>) -> Result<Self> {
        let n = polys.len();
        if n == 0 {
            return Err(Error::EmptySystem);
        }
        for (i, p) in polys.iter().enumerate() {
            if p.vars() != n + 1 {
                return Err(Error::Dimension {
                    expected: n + 1,
                    found: p.vars(),
                });
            }
            if p.degree() == 0 {
                return Err(Error::Malformed(format!("polynomial {i} has degree 0")));
            }
            if p.is_empty() {
                return Err(Error::ZeroPolynomial(i));
            }
        }
        let degrees: Vec<u32> = polys.iter().map(Polynomial::degree).collect();
        let max_degree = *degrees.iter().max().unwrap();
        let max_terms = polys.iter().map(Polynomial::len).max().unwrap();
        let norm = polys.iter().map(Polynomial::weyl_norm).fold(0.0, f64::max);
        Ok(Self {
            polys,
            degrees,
            max_degree,
            max_terms,
            norm,
        })
    }

    /// Number of equations; the ambient space is `R^{n+1}`.
    pub fn n(&self) -> usize {
        self.polys.len()
    }

    pub fn vars(&self) -> usize {
        self.n() + 1
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    /// `D = max d_i`.
    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    /// `S = max_i #terms(f_i)`.
    pub fn max_terms(&self) -> usize {
        self.max_terms
    }

    pub fn polys(&self) -> &[Polynomial] {
        &self.polys
    }

    /// `‖f‖ = max_i ‖f_i‖` (cached).
    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// Recompute the cached norm from the terms.
    pub fn recompute_norm(&self) -> f64 {
        self.polys
            .iter()
            .map(Polynomial::weyl_norm)
            .fold(0.0, f64::max)
    }

    /// Scale so that `‖f‖ = 1`. Returns the scaled system and the original norm.
    pub fn normalized(&self) -> (PolynomialSystem, f64) {
        let norm = self.norm;
        let polys = self.polys.iter().map(|p| p.scaled(1.0 / norm)).collect();
        let scaled = PolynomialSystem::new(polys).expect("scaling preserves validity");
        (scaled, norm)
    }

    /// The same system with each coefficient replaced by `op(c)`.
    pub fn map_coefficients(&self, op: impl Fn(f64) -> f64) -> PolynomialSystem {
        let polys = self.polys.iter().map(|p| p.map_coefficients(&op)).collect();
        PolynomialSystem::new(polys).expect("coefficient map preserves validity")
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm - 1.0).abs() <= 1e-12
    }

    fn check_point(&self, x: &[f64]) {
        assert_eq!(x.len(), self.vars(), "point has wrong dimension");
    }

    /// `(f_1(x), …, f_n(x))`.
    pub fn evaluate(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        let mut table = Vec::new();
        self.evaluate_into(&HostArithmetic, x, &mut table, &mut out);
        out
    }

    /// Values and their sup-norm.
    pub fn evaluate_sup(&self, x: &[f64]) -> (Vec<f64>, f64) {
        let v = self.evaluate(x);
        let sup = sup_norm(&v);
        (v, sup)
    }

    pub fn evaluate_with<A: Arithmetic>(&self, ar: &A, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        let mut table = Vec::new();
        self.evaluate_into(ar, x, &mut table, &mut out);
        out
    }

    pub(crate) fn evaluate_into<A: Arithmetic>(
        &self,
        ar: &A,
        x: &[f64],
        table: &mut Vec<f64>,
        out: &mut [f64],
    ) {
        self.check_point(x);
        fill_power_table(ar, x, self.max_degree, table);
        let stride = self.max_degree as usize + 1;
        for (o, p) in out.iter_mut().zip(&self.polys) {
            *o = p.evaluate_powers(ar, table, stride);
        }
    }

    /// `Df(x)`, an `n × (n+1)` matrix.
    pub fn jacobian(&self, x: &[f64]) -> Matrix {
        self.jacobian_with(&HostArithmetic, x)
    }

    pub fn jacobian_with<A: Arithmetic>(&self, ar: &A, x: &[f64]) -> Matrix {
        self.check_point(x);
        let table = power_table(ar, x, self.max_degree);
        let mut jac = Matrix::zeros(self.n(), self.vars());
        self.jacobian_from_table(ar, &table, &mut jac);
        jac
    }

    pub(crate) fn jacobian_from_table<A: Arithmetic>(
        &self,
        ar: &A,
        table: &[f64],
        jac: &mut Matrix,
    ) {
        let stride = self.max_degree as usize + 1;
        let mut row = vec![0.0; self.vars()];
        for (i, p) in self.polys.iter().enumerate() {
            p.gradient_powers(ar, table, stride, &mut row);
            for (k, v) in row.iter().enumerate() {
                jac[(i, k)] = *v;
            }
        }
    }

    /// `f ∘ Q` polynomial by polynomial.
    pub fn compose_linear(&self, q: &Matrix) -> PolynomialSystem {
        let polys = self.polys.iter().map(|p| p.compose_linear(q)).collect();
        PolynomialSystem::new(polys).expect("composition preserves validity")
    }

    pub fn from_document(doc: &SystemDocument) -> Result<Self> {
        if doc.n == 0 {
            return Err(Error::EmptySystem);
        }
        if doc.degrees.len() != doc.n {
            return Err(Error::Malformed(format!(
                "degrees has {} entries, n = {}",
                doc.degrees.len(),
                doc.n
            )));
        }
        if doc.polys.len() != doc.n {
            return Err(Error::Malformed(format!(
                "polys has {} entries, n = {}",
                doc.polys.len(),
                doc.n
            )));
        }
        let vars = doc.n + 1;
        let mut polys = Vec::with_capacity(doc.n);
        for (i, (terms, &degree)) in doc.polys.iter().zip(&doc.degrees).enumerate() {
            if degree == 0 {
                return Err(Error::Malformed(format!(
                    "degree of polynomial {i} must be positive"
                )));
            }
            let mut monomials = Vec::with_capacity(terms.len());
            for t in terms {
                if t.exponents.len() != vars {
                    return Err(Error::ExponentArity {
                        poly: i,
                        found: t.exponents.len(),
                        expected: vars,
                    });
                }
                if t.exponents.iter().any(|&e| e < 0) {
                    return Err(Error::NegativeExponent {
                        poly: i,
                        monomial: t.exponents.clone(),
                    });
                }
                let total: i64 = t.exponents.iter().sum();
                if total != degree as i64 {
                    return Err(Error::NotHomogeneous {
                        poly: i,
                        monomial: t.exponents.clone(),
                        found: total,
                        expected: degree,
                    });
                }
                let exps = t
                    .exponents
                    .iter()
                    .map(|&e| {
                        u32::try_from(e)
                            .map_err(|_| Error::Malformed(format!("exponent {e} too large")))
                    })
                    .collect::<Result<Vec<u32>>>()?;
                monomials.push(Monomial::new(exps, t.c));
            }
            polys.push(Polynomial::with_index(i, vars, degree, monomials)?);
        }
        PolynomialSystem::new(polys)
    }

    pub fn to_document(&self) -> SystemDocument {
        SystemDocument {
            n: self.n(),
            degrees: self.degrees.clone(),
            polys: self
                .polys
                .iter()
                .map(|p| {
                    p.terms()
                        .map(|t| TermDocument {
                            exponents: t.exponents.iter().map(|&e| e as i64).collect(),
                            c: t.coefficient,
                        })
                        .collect()
                })
                .collect(),
            expected_count: None,
        }
    }
}

pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Input document: `{"n": …, "degrees": […], "polys": [[{"J": […], "c": …}, …], …]}`.
///
/// Test fixtures may carry an `expected_count`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDocument {
    pub n: usize,
    pub degrees: Vec<u32>,
    pub polys: Vec<Vec<TermDocument>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_count: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermDocument {
    #[serde(rename = "J")]
    pub exponents: Vec<i64>,
    pub c: f64,
}

/// Parse and validate a system document.
pub fn parse_system(text: &str) -> Result<PolynomialSystem> {
    let doc: SystemDocument =
        serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
    PolynomialSystem::from_document(&doc)
}

/// Weyl norm of a single polynomial.
pub fn weyl_norm(p: &Polynomial) -> f64 {
    p.weyl_norm()
}
