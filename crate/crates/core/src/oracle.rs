//! Ground truth that shares no numerics with the counting engine: exact
//! rational Sturm sequences for binary forms and linear-product systems with
//! known zero sets.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::alpha::{compute_m, sigma_min};
use crate::engine::estimate_kappa;
use crate::error::{Error, Result};
use crate::poly::{sup_norm, Monomial, Polynomial, PolynomialSystem, SystemDocument};
use crate::sphere::CubeGridSpec;

/// Dense univariate polynomial with exact rational coefficients, constant
/// term first. The leading coefficient is never zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalPolynomial {
    coeffs: Vec<BigRational>,
}

impl RationalPolynomial {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn from_integers(coeffs: &[i64]) -> Self {
        Self::new(
            coeffs
                .iter()
                .map(|&c| BigRational::from_integer(c.into()))
                .collect(),
        )
    }

    /// Exact conversion; every finite double is a dyadic rational.
    pub fn from_f64(coeffs: &[f64]) -> Self {
        Self::new(
            coeffs
                .iter()
                .map(|&c| BigRational::from_float(c).expect("finite"))
                .collect(),
        )
    }

    pub fn coefficients(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&BigRational> {
        self.coeffs.last()
    }

    pub fn evaluate(&self, t: &BigRational) -> BigRational {
        self.coeffs
            .iter()
            .rev()
            .fold(BigRational::zero(), |acc, c| acc * t + c)
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * BigRational::from_integer(BigInt::from(i)))
                .collect(),
        )
    }

    /// Quotient and remainder of Euclidean division by a nonzero `d`.
    pub fn div_rem(&self, d: &Self) -> (Self, Self) {
        let dd = d.degree().expect("division by the zero polynomial");
        let lead = d.leading().unwrap().clone();
        let mut rem = self.coeffs.clone();
        let mut quot = vec![BigRational::zero(); self.coeffs.len().saturating_sub(dd)];
        while rem.len() > dd && !rem.is_empty() {
            let shift = rem.len() - 1 - dd;
            let q = rem.last().unwrap() / &lead;
            for (i, c) in d.coeffs.iter().enumerate() {
                rem[shift + i] -= &q * c;
            }
            quot[shift] = q;
            rem.pop();
            while rem.last().is_some_and(Zero::is_zero) {
                rem.pop();
            }
        }
        (Self::new(quot), Self::new(rem))
    }

    /// Monic greatest common divisor.
    pub fn gcd(&self, other: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.div_rem(&b).1;
            a = b;
            b = r;
        }
        a.monic()
    }

    fn monic(self) -> Self {
        match self.leading().cloned() {
            Some(l) => Self::new(self.coeffs.into_iter().map(|c| c / &l).collect()),
            None => self,
        }
    }

    /// `p / gcd(p, p')`: same roots, all simple.
    pub fn square_free(&self) -> Self {
        if self.degree().unwrap_or(0) == 0 {
            return self.clone();
        }
        let g = self.gcd(&self.derivative());
        self.div_rem(&g).0
    }

    /// Sturm chain `p, p', −rem(p, p'), …`.
    pub fn sturm_sequence(&self) -> Vec<Self> {
        let mut chain = vec![self.clone()];
        if self.is_zero() {
            return chain;
        }
        let mut next = self.derivative();
        while !next.is_zero() {
            let r = chain.last().unwrap().div_rem(&next).1;
            chain.push(next);
            next = Self::new(r.coeffs.into_iter().map(|c| -c).collect());
        }
        chain
    }

    /// Number of distinct real roots.
    pub fn count_real_roots(&self) -> u64 {
        let p = self.square_free();
        match p.degree() {
            None | Some(0) => return 0,
            _ => {}
        }
        let chain = p.sturm_sequence();
        // signs at ±∞ are the signs of the leading terms
        let at = |positive: bool| {
            chain
                .iter()
                .map(|q| {
                    let s = q.leading().unwrap().signum();
                    if !positive && q.degree().unwrap() % 2 == 1 {
                        -s
                    } else {
                        s
                    }
                })
                .collect::<Vec<_>>()
        };
        let variations = |signs: Vec<BigRational>| {
            signs
                .windows(2)
                .filter(|w| {
                    (w[0].is_positive() && w[1].is_negative())
                        || (w[0].is_negative() && w[1].is_positive())
                })
                .count() as u64
        };
        variations(at(false)) - variations(at(true))
    }
}

/// Real zero rays of a binary form given by its coefficients,
/// `coeffs[b]` multiplying `X₀^{d−b} X₁^b`.
pub fn binary_form_ray_count_exact(coeffs: &[BigRational]) -> Result<u64> {
    if coeffs.iter().all(Zero::is_zero) {
        return Err(Error::Oracle("zero polynomial".into()));
    }
    let affine = RationalPolynomial::new(coeffs.to_vec());
    let at_infinity = coeffs.last().is_some_and(Zero::is_zero) as u64;
    Ok(affine.count_real_roots() + at_infinity)
}

/// Real zero rays of a binary form, counted exactly from its (exactly
/// representable) floating-point coefficients.
pub fn binary_form_ray_count(p: &Polynomial) -> Result<u64> {
    if p.vars() != 2 {
        return Err(Error::Dimension {
            expected: 2,
            found: p.vars(),
        });
    }
    let d = p.degree() as usize;
    let mut coeffs = vec![BigRational::zero(); d + 1];
    for t in p.terms() {
        coeffs[t.exponents[1] as usize] = BigRational::from_float(t.coefficient).expect("finite");
    }
    binary_form_ray_count_exact(&coeffs)
}

/// Exact value of `p` at a rational point.
pub fn evaluate_exact(p: &Polynomial, x: &[BigRational]) -> BigRational {
    p.terms()
        .map(|t| {
            let mut v = BigRational::from_float(t.coefficient).expect("finite");
            for (xi, &e) in x.iter().zip(t.exponents) {
                v *= num_traits::pow(xi.clone(), e as usize);
            }
            v
        })
        .fold(BigRational::zero(), |a, b| a + b)
}

/// `‖f(z)‖_∞ ≤ tol` and `σ_min(M(z)) > tol`, with `f` normalized first.
pub fn verify_zero(f: &PolynomialSystem, z: &[f64], tol: f64) -> bool {
    let (f, _) = f.normalized();
    let residual = sup_norm(&f.evaluate(z));
    residual <= tol && sigma_min(&compute_m(&f, z)) > tol
}

/// A system `f_i = Π_j ℓ_ij` of products of integer linear forms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProductSystem {
    /// `forms[i][j]` holds the coefficients of `ℓ_ij`.
    pub forms: Vec<Vec<Vec<i64>>>,
    /// One primitive integer vector per zero ray.
    pub rays: Vec<Vec<i64>>,
    pub known_count: u64,
    pub seed: u64,
}

impl LinearProductSystem {
    pub fn system(&self) -> PolynomialSystem {
        let vars = self.forms.len() + 1;
        let polys = self
            .forms
            .iter()
            .map(|factors| product_of_forms(vars, factors))
            .collect();
        PolynomialSystem::new(polys).expect("nonzero products")
    }
}

/// Knobs for the generator's rejection sampling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearProductOptions {
    /// Coefficients are drawn from `−range..=range`.
    pub coefficient_range: i64,
    /// Smallest angle allowed between two distinct zero rays.
    pub min_ray_angle: f64,
    /// Smallest `|ℓ(ζ)|/(‖ℓ‖‖ζ‖)` for a form `ℓ` and a zero ray or factor
    /// crossing `ζ` it does not pass through.
    pub min_form_clearance: f64,
    pub max_attempts: u32,
}

impl Default for LinearProductOptions {
    fn default() -> Self {
        Self {
            coefficient_range: 5,
            min_ray_angle: 0.15,
            min_form_clearance: 0.15,
            max_attempts: 100_000,
        }
    }
}

pub fn make_linear_product_system(
    n: usize,
    degrees: &[u32],
    seed: u64,
) -> Result<LinearProductSystem> {
    make_linear_product_system_with(n, degrees, seed, &LinearProductOptions::default())
}

/// Draw random integer forms until every choice of one factor per
/// polynomial meets in a single ray, the rays are distinct, and each ray
/// lies on exactly one factor of each polynomial.
pub fn make_linear_product_system_with(
    n: usize,
    degrees: &[u32],
    seed: u64,
    opts: &LinearProductOptions,
) -> Result<LinearProductSystem> {
    if n < 2 || degrees.len() != n || degrees.contains(&0) {
        return Err(Error::Oracle(format!(
            "bad shape: n = {n}, degrees = {degrees:?}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..opts.max_attempts {
        let forms: Vec<Vec<Vec<i64>>> = degrees
            .iter()
            .map(|&d| {
                (0..d)
                    .map(|_| {
                        (0..=n)
                            .map(|_| {
                                rng.gen_range(-opts.coefficient_range..=opts.coefficient_range)
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        if !crossings_clear(&forms, opts) {
            continue;
        }
        if let Some(rays) = admissible_rays(&forms, opts) {
            return Ok(LinearProductSystem {
                known_count: rays.len() as u64,
                rays,
                forms,
                seed,
            });
        }
    }
    Err(Error::Oracle(format!(
        "no admissible system after {} attempts",
        opts.max_attempts
    )))
}

fn admissible_rays(forms: &[Vec<Vec<i64>>], opts: &LinearProductOptions) -> Option<Vec<Vec<i64>>> {
    let n = forms.len();
    let mut rays: Vec<Vec<i64>> = Vec::new();
    let mut choice = vec![0usize; n];
    loop {
        let rows: Vec<&[i64]> = choice
            .iter()
            .enumerate()
            .map(|(i, &j)| forms[i][j].as_slice())
            .collect();
        let ray = kernel_ray(&rows)?;
        for (i, factors) in forms.iter().enumerate() {
            for (j, form) in factors.iter().enumerate() {
                let on = dot_i(form, &ray) == 0;
                if on != (j == choice[i]) {
                    return None;
                }
                if !on && clearance(form, &ray) < opts.min_form_clearance {
                    return None;
                }
            }
        }
        for other in &rays {
            if ray_angle(other, &ray) < opts.min_ray_angle {
                return None;
            }
        }
        rays.push(ray);

        // next choice tuple
        let mut i = 0;
        loop {
            if i == n {
                return Some(rays);
            }
            choice[i] += 1;
            if choice[i] < forms[i].len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

/// Where two factors of one polynomial cross, the system comes close to a
/// singular zero if a factor of another polynomial passes nearby. Require
/// every such crossing ray to keep `min_form_clearance` from those factors.
fn crossings_clear(forms: &[Vec<Vec<i64>>], opts: &LinearProductOptions) -> bool {
    let n = forms.len();
    for (i, factors) in forms.iter().enumerate() {
        for a in 0..factors.len() {
            for b in a + 1..factors.len() {
                for h in (0..n).filter(|&h| h != i) {
                    let rest: Vec<usize> = (0..n).filter(|&p| p != i && p != h).collect();
                    let mut choice = vec![0usize; rest.len()];
                    loop {
                        let mut rows: Vec<&[i64]> = vec![&factors[a], &factors[b]];
                        rows.extend(
                            rest.iter()
                                .zip(&choice)
                                .map(|(&p, &j)| forms[p][j].as_slice()),
                        );
                        let Some(ray) = kernel_ray(&rows) else {
                            return false;
                        };
                        if forms[h]
                            .iter()
                            .any(|form| clearance(form, &ray) < opts.min_form_clearance)
                        {
                            return false;
                        }
                        let mut q = 0;
                        while q < rest.len() {
                            choice[q] += 1;
                            if choice[q] < forms[rest[q]].len() {
                                break;
                            }
                            choice[q] = 0;
                            q += 1;
                        }
                        if q == rest.len() {
                            break;
                        }
                    }
                }
            }
        }
    }
    true
}

fn dot_i(a: &[i64], b: &[i64]) -> i128 {
    a.iter().zip(b).map(|(&x, &y)| x as i128 * y as i128).sum()
}

fn norm_i(a: &[i64]) -> f64 {
    (dot_i(a, a) as f64).sqrt()
}

fn clearance(form: &[i64], ray: &[i64]) -> f64 {
    (dot_i(form, ray) as f64).abs() / (norm_i(form) * norm_i(ray))
}

/// Angle between the lines spanned by `a` and `b`, in `[0, π/2]`.
fn ray_angle(a: &[i64], b: &[i64]) -> f64 {
    let c = (dot_i(a, b) as f64).abs() / (norm_i(a) * norm_i(b));
    c.min(1.0).acos()
}

/// Primitive integer generator of the kernel of an `n × (n+1)` integer
/// matrix, when the kernel is one-dimensional. The sign is fixed so the
/// first nonzero entry is positive.
fn kernel_ray(rows: &[&[i64]]) -> Option<Vec<i64>> {
    let n = rows.len();
    let cols = n + 1;
    let mut m: Vec<Vec<BigRational>> = rows
        .iter()
        .map(|r| {
            r.iter()
                .map(|&c| BigRational::from_integer(c.into()))
                .collect()
        })
        .collect();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        if row == n {
            break;
        }
        let Some(p) = (row..n).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(row, p);
        let lead = m[row][col].clone();
        for c in &mut m[row] {
            *c /= &lead;
        }
        for r in 0..n {
            if r != row && !m[r][col].is_zero() {
                let factor = m[r][col].clone();
                for c in 0..cols {
                    let delta = &factor * &m[row][c];
                    m[r][c] -= delta;
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    if pivots.len() != n {
        return None;
    }
    let free = (0..cols).find(|c| !pivots.contains(c)).unwrap();
    let mut v = vec![BigRational::zero(); cols];
    v[free] = BigRational::one();
    for (r, &pc) in pivots.iter().enumerate() {
        v[pc] = -m[r][free].clone();
    }
    // clear denominators, then divide by the content
    let lcm = v.iter().fold(BigInt::one(), |acc, x| {
        num_integer::Integer::lcm(&acc, x.denom())
    });
    let ints: Vec<BigInt> = v
        .iter()
        .map(|x| (x * BigRational::from_integer(lcm.clone())).to_integer())
        .collect();
    let content = ints
        .iter()
        .fold(BigInt::zero(), |acc, x| num_integer::Integer::gcd(&acc, x));
    let sign = if ints.iter().find(|x| !x.is_zero())?.is_negative() {
        -BigInt::one()
    } else {
        BigInt::one()
    };
    ints.iter()
        .map(|x| (x / &content * &sign).to_i64())
        .collect()
}

/// Expand `Π_j ℓ_j` into monomials with exact integer arithmetic.
fn product_of_forms(vars: usize, factors: &[Vec<i64>]) -> Polynomial {
    let mut terms: std::collections::BTreeMap<Vec<u32>, BigInt> = std::collections::BTreeMap::new();
    terms.insert(vec![0; vars], BigInt::one());
    for form in factors {
        let mut next = std::collections::BTreeMap::new();
        for (exps, c) in &terms {
            for (k, &a) in form.iter().enumerate() {
                if a == 0 {
                    continue;
                }
                let mut e = exps.clone();
                e[k] += 1;
                *next.entry(e).or_insert_with(BigInt::zero) += c * BigInt::from(a);
            }
        }
        terms = next;
    }
    let monomials = terms
        .into_iter()
        .filter(|(_, c)| !c.is_zero())
        .map(|(e, c)| Monomial::new(e, c.to_f64().expect("small coefficients")))
        .collect();
    Polynomial::new(vars, factors.len() as u32, monomials).expect("homogeneous product")
}

/// A random binary form with a known ray count.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryFormCase {
    pub form: Polynomial,
    pub known_count: u64,
    pub seed: u64,
}

/// Product of distinct dyadic linear factors `X₁ − rX₀`, irreducible
/// quadratics and possibly `X₀`, of total degree between 1 and
/// `max_degree`. Every coefficient is a dyadic rational, so the
/// floating-point form is exact.
pub fn random_binary_form(seed: u64, max_degree: u32) -> BinaryFormCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let degree = rng.gen_range(1..=max_degree);
    // factors as ascending coefficient lists in t = X₁/X₀
    let mut factors: Vec<Vec<BigRational>> = Vec::new();
    let mut roots: Vec<BigRational> = Vec::new();
    let mut at_infinity = false;
    let mut remaining = degree;
    let dyadic = |rng: &mut ChaCha8Rng, range: i64| {
        let den = [1i64, 2, 4][rng.gen_range(0..3)];
        BigRational::new(rng.gen_range(-range * den..=range * den).into(), den.into())
    };
    while remaining > 0 {
        let kind = rng.gen_range(0..10);
        if kind == 0 && !at_infinity {
            at_infinity = true;
            remaining -= 1;
        } else if kind < 4 && remaining >= 2 {
            // t² + b t + c with b² < 4c
            let b = dyadic(&mut rng, 2);
            let c = &b * &b / BigRational::from_integer(4.into())
                + BigRational::new(rng.gen_range(1..=8).into(), 4.into());
            factors.push(vec![c, b, BigRational::one()]);
            remaining -= 2;
        } else {
            let r = dyadic(&mut rng, 2);
            if roots
                .iter()
                .any(|x| (x - &r).abs() < BigRational::new(1.into(), 4.into()))
            {
                continue;
            }
            factors.push(vec![-r.clone(), BigRational::one()]);
            roots.push(r);
            remaining -= 1;
        }
    }
    let mut coeffs = vec![BigRational::one()];
    for fac in &factors {
        let mut out = vec![BigRational::zero(); coeffs.len() + fac.len() - 1];
        for (i, a) in coeffs.iter().enumerate() {
            for (j, b) in fac.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        coeffs = out;
    }
    // homogenize: t^b ↦ X₀^{d−b} X₁^b; a factor X₀ leaves the top degree empty
    let monomials = coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(b, c)| {
            let b = b as u32;
            Monomial::new(vec![degree - b, b], c.to_f64().unwrap())
        })
        .collect();
    let form = Polynomial::new(2, degree, monomials).expect("homogeneous");
    BinaryFormCase {
        form,
        known_count: roots.len() as u64 + at_infinity as u64,
        seed,
    }
}

/// A system with its oracle count.
#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub name: String,
    pub system: SystemDocument,
    pub expected_count: u64,
    /// Grid lower bound on the condition number of the normalized system.
    pub kappa_estimate: f64,
}

impl Fixture {
    /// The input document with `expected_count` filled in.
    pub fn document(&self) -> SystemDocument {
        SystemDocument {
            expected_count: Some(self.expected_count),
            ..self.system.clone()
        }
    }

    pub fn polynomial_system(&self) -> PolynomialSystem {
        PolynomialSystem::from_document(&self.system).expect("fixture systems are valid")
    }
}

/// Grid level for the condition estimate used to screen fixtures.
pub const SCREEN_LEVEL: u32 = 7;

fn screen_kappa(f: &PolynomialSystem) -> f64 {
    let (g, _) = f.normalized();
    let spec = CubeGridSpec::new(f.n(), SCREEN_LEVEL).expect("level in range");
    estimate_kappa(&g, spec, u64::MAX).expect("uncapped")
}

/// `count` random binary forms of degree at most `max_degree`, taken from
/// seeds `0, 1, …` and kept when the grid estimate of `κ` is at most
/// `kappa_max`. The expected count is the Sturm count, which must agree
/// with the construction.
pub fn binary_form_suite(count: usize, max_degree: u32, kappa_max: f64) -> Vec<Fixture> {
    let mut out = Vec::with_capacity(count);
    for seed in 0.. {
        if out.len() == count {
            break;
        }
        let case = random_binary_form(seed, max_degree);
        let sturm = binary_form_ray_count(&case.form).expect("nonzero form");
        assert_eq!(sturm, case.known_count, "seed {seed}");
        let f = PolynomialSystem::new(vec![case.form]).expect("nonzero form");
        let kappa = screen_kappa(&f);
        if kappa <= kappa_max {
            out.push(Fixture {
                name: format!("binary-{seed}"),
                system: f.to_document(),
                expected_count: sturm,
                kappa_estimate: kappa,
            });
        }
    }
    out
}

/// Degree pairs of the default multivariate suite.
pub const LINEAR_PRODUCT_DEGREES: [[u32; 2]; 10] = [
    [1, 1],
    [2, 1],
    [1, 2],
    [2, 2],
    [3, 1],
    [1, 3],
    [3, 2],
    [2, 3],
    [3, 3],
    [3, 3],
];

/// One linear-product system per entry of `degrees`, each from the first
/// seed whose grid estimate of `κ` is at most `kappa_max`.
pub fn linear_product_suite(degrees: &[[u32; 2]], kappa_max: f64) -> Result<Vec<Fixture>> {
    let mut out = Vec::with_capacity(degrees.len());
    for (i, deg) in degrees.iter().enumerate() {
        let mut seed = 1000 * i as u64;
        loop {
            let lp = make_linear_product_system(2, deg, seed)?;
            let f = lp.system();
            let kappa = screen_kappa(&f);
            if kappa <= kappa_max {
                out.push(Fixture {
                    name: format!("linear-product-{}x{}-{seed}", deg[0], deg[1]),
                    system: f.to_document(),
                    expected_count: lp.known_count,
                    kappa_estimate: kappa,
                });
                break;
            }
            seed += 1;
        }
    }
    Ok(out)
}
