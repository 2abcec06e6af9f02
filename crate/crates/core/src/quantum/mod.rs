//! Dense complex linear algebra for quantum effects and density operators.
//!
//! Matrices are row-major over the computational basis with `|0⟩ = (1, 0)ᵀ`.
//! A matrix over a collection `C` lays its tensor factors out in the global
//! (lexicographic) order of `C`, the first factor being the most significant
//! digit of a basis index.

mod rationalize;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::algebra::{Rational, SystemCollection};
use crate::error::{Error, Result};

pub use rationalize::{rationalize, Rationalization};

pub type CMatrix = DMatrix<Complex64>;

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_SEP_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ATTEMPTS: usize = 64;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn zeros(d: usize) -> CMatrix {
    CMatrix::zeros(d, d)
}

/// `|ψ⟩⟨ψ|` for a (not necessarily normalised) vector.
pub fn projector(psi: &[Complex64]) -> CMatrix {
    let d = psi.len();
    CMatrix::from_fn(d, d, |i, j| psi[i] * psi[j].conj())
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    m.is_square() && max_abs_diff(m, &m.adjoint()) <= tol
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Eigenvalues of the Hermitian part, ascending.
pub fn eigenvalues(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut ev: Vec<f64> = hermitian_part(m).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Nearest positive semidefinite matrix (Frobenius norm), by clipping the
/// spectrum of the Hermitian part at zero.
pub fn psd_projection(m: &CMatrix) -> CMatrix {
    let mut eig = SymmetricEigen::new(hermitian_part(m));
    eig.eigenvalues.apply(|l| *l = l.max(0.0));
    let v = &eig.eigenvectors;
    let diag = CMatrix::from_diagonal(&eig.eigenvalues.map(|l| c(l, 0.0)));
    v * diag * v.adjoint()
}

fn require_square(m: &CMatrix) -> Result<()> {
    if m.is_square() {
        Ok(())
    } else {
        Err(Error::ShapeMismatch(format!(
            "expected a square matrix, found {}×{}",
            m.nrows(),
            m.ncols()
        )))
    }
}

/// `0 ⊑ M ⊑ I` within `tol`.
pub fn validate_effect(m: &CMatrix, tol: f64) -> Result<bool> {
    require_square(m)?;
    if !is_hermitian(m, tol) {
        return Ok(false);
    }
    let ev = eigenvalues(m);
    Ok(ev.iter().all(|&l| l >= -tol && l <= 1.0 + tol))
}

/// Hermitian, positive and of unit trace, within `tol`.
pub fn validate_density(m: &CMatrix, tol: f64) -> Result<bool> {
    require_square(m)?;
    if !is_hermitian(m, tol) {
        return Ok(false);
    }
    let ev = eigenvalues(m);
    Ok(ev.iter().all(|&l| l >= -tol) && (trace(m).re - 1.0).abs() <= tol)
}

/// A trace-one positive matrix over `H_C`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    systems: SystemCollection,
    matrix: CMatrix,
}

impl DensityOperator {
    pub fn new(systems: SystemCollection, matrix: CMatrix, tol: f64) -> Result<Self> {
        require_square(&matrix)?;
        if matrix.nrows() != systems.dim() {
            return Err(Error::DimensionMismatch {
                expected: systems.dim(),
                found: matrix.nrows(),
            });
        }
        if !validate_density(&matrix, tol)? {
            return Err(Error::InvalidValue(format!(
                "not a density operator over {systems}"
            )));
        }
        Ok(DensityOperator { systems, matrix })
    }

    pub fn maximally_mixed(systems: SystemCollection) -> Self {
        let d = systems.dim();
        DensityOperator {
            matrix: identity(d).scale(1.0 / d as f64),
            systems,
        }
    }

    pub fn systems(&self) -> &SystemCollection {
        &self.systems
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// `ρ₁ ⊠ ρ₂` over the sorted union of the two collections.
    pub fn boxtimes(&self, other: &DensityOperator) -> Result<DensityOperator> {
        let (matrix, systems) = boxtimes(&self.matrix, &self.systems, &other.matrix, &other.systems)?;
        Ok(DensityOperator { systems, matrix })
    }
}

/// `tr(Lρ)`, clamped to `[0, 1]`.
pub fn born(effect: &CMatrix, rho: &DensityOperator) -> Result<f64> {
    let d = rho.matrix.nrows();
    if effect.nrows() != d || effect.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: effect.nrows(),
        });
    }
    Ok(trace_of_product(effect, &rho.matrix).clamp(0.0, 1.0))
}

/// Real part of `tr(AB)` without forming the product.
pub fn trace_of_product(a: &CMatrix, b: &CMatrix) -> f64 {
    let d = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..d {
        for k in 0..d {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc.re
}

/// Born value converted into the probability algebra.
pub fn born_rational(effect: &CMatrix, rho: &DensityOperator, how: Rationalization) -> Result<Rational> {
    Ok(rationalize(born(effect, rho)?, how))
}

/// Mixed-radix digits of `index`, most significant first.
fn digits(mut index: usize, radices: &[usize]) -> Vec<usize> {
    let mut out = vec![0; radices.len()];
    for (slot, &r) in out.iter_mut().zip(radices).rev() {
        *slot = index % r;
        index /= r;
    }
    out
}

fn undigits(ds: &[usize], radices: &[usize]) -> usize {
    ds.iter().zip(radices).fold(0, |acc, (&d, &r)| acc * r + d)
}

/// For each basis index of `H_C ⊗ H_D` (C-factors first), its position in
/// `H_{C⊎D}`.
pub fn sort_indices(first: &SystemCollection, second: &SystemCollection) -> Result<Vec<usize>> {
    let union = first.try_union(second)?;
    let order: Vec<&str> = first.names().chain(second.names()).collect();
    let radices: Vec<usize> = first.factor_dims().into_iter().chain(second.factor_dims()).collect();
    let target_names: Vec<&str> = union.names().collect();
    let target_radices = union.factor_dims();
    // Position of each target factor within the unsorted layout.
    let source_pos: Vec<usize> = target_names
        .iter()
        .map(|n| order.iter().position(|m| m == n).expect("union member"))
        .collect();
    let total = union.dim();
    Ok((0..total)
        .map(|i| {
            let ds = digits(i, &radices);
            let sorted: Vec<usize> = source_pos.iter().map(|&p| ds[p]).collect();
            undigits(&sorted, &target_radices)
        })
        .collect())
}

/// The 0/1 permutation matrix `P` with `P e_i = e_{σ(i)}`, sorting
/// `H_C ⊗ H_D` into `H_{C⊎D}`.
pub fn sort_permutation(first: &SystemCollection, second: &SystemCollection) -> Result<CMatrix> {
    let perm = sort_indices(first, second)?;
    let d = perm.len();
    let mut p = zeros(d);
    for (i, &j) in perm.iter().enumerate() {
        p[(j, i)] = c(1.0, 0.0);
    }
    Ok(p)
}

fn check_dim(m: &CMatrix, systems: &SystemCollection) -> Result<()> {
    require_square(m)?;
    if m.nrows() != systems.dim() {
        return Err(Error::DimensionMismatch {
            expected: systems.dim(),
            found: m.nrows(),
        });
    }
    Ok(())
}

/// `L₁ ⊠ L₂ = P (L₁ ⊗ L₂) P†` over the sorted union of the grades.
pub fn boxtimes(
    l1: &CMatrix,
    c1: &SystemCollection,
    l2: &CMatrix,
    c2: &SystemCollection,
) -> Result<(CMatrix, SystemCollection)> {
    check_dim(l1, c1)?;
    check_dim(l2, c2)?;
    let perm = sort_indices(c1, c2)?;
    let k = kron(l1, l2);
    let d = k.nrows();
    let mut out = zeros(d);
    for i in 0..d {
        for j in 0..d {
            out[(perm[i], perm[j])] = k[(i, j)];
        }
    }
    Ok((out, c1.union(c2).expect("checked by sort_indices")))
}

/// Trace out the systems `over` from a matrix on `H_C`.
pub fn partial_trace(m: &CMatrix, systems: &SystemCollection, over: &SystemCollection) -> Result<CMatrix> {
    check_dim(m, systems)?;
    let kept = systems.difference(over)?;
    let names: Vec<&str> = systems.names().collect();
    let radices = systems.factor_dims();
    let traced: Vec<bool> = names.iter().map(|n| over.contains(n)).collect();
    let kept_radices: Vec<usize> = radices.iter().zip(&traced).filter(|(_, &t)| !t).map(|(&r, _)| r).collect();
    let traced_radices: Vec<usize> = radices.iter().zip(&traced).filter(|(_, &t)| t).map(|(&r, _)| r).collect();

    let split: Vec<(usize, usize)> = (0..m.nrows())
        .map(|i| {
            let ds = digits(i, &radices);
            let (mut k, mut t) = (Vec::new(), Vec::new());
            for (d, &is_traced) in ds.into_iter().zip(&traced) {
                if is_traced {
                    t.push(d)
                } else {
                    k.push(d)
                }
            }
            (undigits(&k, &kept_radices), undigits(&t, &traced_radices))
        })
        .collect();

    let mut out = zeros(kept.dim());
    for (i, &(ki, ti)) in split.iter().enumerate() {
        for (j, &(kj, tj)) in split.iter().enumerate() {
            if ti == tj {
                out[(ki, kj)] += m[(i, j)];
            }
        }
    }
    Ok(out)
}

/// `tr_{C'}(L (ρ ⊠ I_{C∖C'}))`.
pub fn partial_evaluation(
    effect: &CMatrix,
    systems: &SystemCollection,
    rho: &DensityOperator,
) -> Result<CMatrix> {
    check_dim(effect, systems)?;
    let rest = systems.difference(rho.systems())?;
    let (lifted, _) = boxtimes(rho.matrix(), rho.systems(), &identity(rest.dim()), &rest)?;
    let out = partial_trace(&(effect * lifted), systems, rho.systems())?;
    Ok(hermitian_part(&out))
}

/// Sample `GG†/tr(GG†)` with `G` a standard complex Gaussian matrix.
pub fn random_density<R: rand::Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| {
        c(StandardNormal.sample(&mut *rng), StandardNormal.sample(&mut *rng))
    });
    let gg = &g * g.adjoint();
    let t = trace(&gg).re;
    hermitian_part(&gg.unscale(t))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Distinguished {
    pub rho: DensityOperator,
    pub seed: u64,
    pub attempts: usize,
    /// `tr(L_i ρ̂)` per input effect.
    pub traces: Vec<f64>,
    /// Smallest pairwise trace gap.
    pub min_gap: f64,
}

/// Search for a density operator under which every pair of the given
/// (pairwise distinct) effects has a different Born value.
pub fn distinguishing_density(
    effects: &[CMatrix],
    systems: &SystemCollection,
    seed: u64,
    max_attempts: usize,
    sep_tol: f64,
    tol: f64,
) -> Result<Distinguished> {
    for e in effects {
        check_dim(e, systems)?;
    }
    for i in 0..effects.len() {
        for j in i + 1..effects.len() {
            if max_abs_diff(&effects[i], &effects[j]) <= tol {
                return Err(Error::Indistinct { first: i, second: j });
            }
        }
    }
    let d = systems.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut closest = (0, 0, f64::NEG_INFINITY);
    for attempt in 1..=max_attempts {
        let matrix = random_density(&mut rng, d);
        let traces: Vec<f64> = effects.iter().map(|e| trace_of_product(e, &matrix)).collect();
        let (i, j, gap) = min_pair_gap(&traces);
        if gap > sep_tol {
            let rho = DensityOperator::new(systems.clone(), matrix, tol)?;
            // Re-verify against the stored operator.
            let traces: Vec<f64> = effects.iter().map(|e| trace_of_product(e, rho.matrix())).collect();
            let (_, _, min_gap) = min_pair_gap(&traces);
            if min_gap > sep_tol {
                return Ok(Distinguished {
                    rho,
                    seed,
                    attempts: attempt,
                    traces,
                    min_gap,
                });
            }
        }
        if gap > closest.2 {
            closest = (i, j, gap);
        }
    }
    Err(Error::AttemptsExhausted {
        attempts: max_attempts,
        first: closest.0,
        second: closest.1,
        gap: closest.2,
    })
}

fn min_pair_gap(values: &[f64]) -> (usize, usize, f64) {
    let mut best = (0, 0, f64::INFINITY);
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            let gap = (values[i] - values[j]).abs();
            if gap < best.2 {
                best = (i, j, gap);
            }
        }
    }
    best
}

/// Named matrices accepted in input files.
///
/// `ket*` and `proj*` both denote the rank-one projector onto the state.
pub fn named(name: &str) -> Result<CMatrix> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let one = c(1.0, 0.0);
    let zero = c(0.0, 0.0);
    let param = |prefix: &str| -> Option<Result<usize>> {
        let rest = name.strip_prefix(prefix)?.strip_suffix(')')?;
        Some(rest.trim().parse::<usize>().map_err(|_| Error::Parse(format!("bad dimension in `{name}`"))))
    };
    if let Some(d) = param("maximally_mixed(") {
        let d = d?;
        return Ok(identity(d).unscale(d as f64));
    }
    if let Some(d) = param("identity(") {
        return Ok(identity(d?));
    }
    if let Some(d) = param("zero(") {
        return Ok(zeros(d?));
    }
    let m = match name {
        "ket0" | "proj0" => projector(&[one, zero]),
        "ket1" | "proj1" => projector(&[zero, one]),
        "ket+" | "proj+" => projector(&[c(h, 0.0), c(h, 0.0)]),
        "ket-" | "proj-" => projector(&[c(h, 0.0), c(-h, 0.0)]),
        "bell_phi_plus" => projector(&[c(h, 0.0), zero, zero, c(h, 0.0)]),
        _ => return Err(Error::Parse(format!("unknown named matrix `{name}`"))),
    };
    Ok(m)
}
