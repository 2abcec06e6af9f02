//! Existence of effect-valued coupling matrices with prescribed marginals.
//!
//! Given row sums `r_i`, column sums `c_j` and a support pattern, decide
//! whether there is a matrix `(m_ij)` of effects with `Σ_j m_ij = r_i`,
//! `Σ_i m_ij = c_j` and `m_ij = 0` off the support. This is the common core
//! of the decomposability test and of Aczel–Mendler bisimilarity.

use nalgebra::DMatrix;
use num_traits::Zero;

use super::flow::FlowNetwork;
use super::{AlgebraKind, EffectAlgebraContext, EffectValue, FiniteTable, Rational};
use crate::error::{Error, Result};
use crate::quantum::{self, CMatrix};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeasibilityOptions {
    /// Residual below which the quantum search declares feasibility.
    pub feas_tol: f64,
    pub max_iters: usize,
}

impl Default for FeasibilityOptions {
    fn default() -> Self {
        FeasibilityOptions {
            feas_tol: 1e-6,
            max_iters: 20_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CouplingMethod {
    /// Trivial instance (empty, or a nonzero marginal with no support).
    Direct,
    NorthWestCorner,
    MaxFlow,
    Exhaustive,
    /// All marginals have rank at most one: every cell is a multiple of
    /// both its row and its column sum, leaving a scalar transport problem.
    RankOne,
    Dykstra,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeasibilityVerdict {
    pub feasible: bool,
    pub witness: Option<Vec<Vec<EffectValue>>>,
    pub residual: f64,
    pub method: CouplingMethod,
    /// The verdict is exact or analytic rather than a numerical residual test.
    pub certified: bool,
    pub iterations: usize,
}

impl FeasibilityVerdict {
    fn exact(feasible: bool, witness: Option<Vec<Vec<EffectValue>>>, method: CouplingMethod) -> Self {
        FeasibilityVerdict {
            feasible,
            witness,
            residual: 0.0,
            method,
            certified: true,
            iterations: 0,
        }
    }
}

fn zero_like(ctx: &EffectAlgebraContext, sample: &EffectValue) -> EffectValue {
    match (ctx.kind(), sample) {
        (AlgebraKind::Quantum(_), EffectValue::Matrix(m)) => EffectValue::Matrix(quantum::zeros(m.nrows())),
        (AlgebraKind::Finite(t), _) => EffectValue::Finite(t.name(t.zero()).to_string()),
        _ => EffectValue::Rational(Rational::zero()),
    }
}

fn total(ctx: &EffectAlgebraContext, values: &[EffectValue], zero: &EffectValue) -> Result<EffectValue> {
    let mut acc = zero.clone();
    for v in values {
        acc = ctx
            .sum(&acc, v)?
            .ok_or_else(|| Error::IllFormed(format!("marginal sum exceeds one at {v}")))?;
    }
    Ok(acc)
}

/// Decide whether a coupling with the given marginals and support exists.
pub fn coupling_feasible(
    ctx: &EffectAlgebraContext,
    rows: &[EffectValue],
    cols: &[EffectValue],
    support: &[Vec<bool>],
    opts: FeasibilityOptions,
) -> Result<FeasibilityVerdict> {
    if support.len() != rows.len() || support.iter().any(|s| s.len() != cols.len()) {
        return Err(Error::ShapeMismatch(format!(
            "support must be {}×{}",
            rows.len(),
            cols.len()
        )));
    }
    for v in rows.iter().chain(cols) {
        ctx.check(v)?;
    }
    let Some(sample) = rows.first().or(cols.first()) else {
        return Ok(FeasibilityVerdict::exact(true, Some(Vec::new()), CouplingMethod::Direct));
    };
    if let EffectValue::Matrix(m) = sample {
        if let Some(bad) = rows.iter().chain(cols).filter_map(EffectValue::as_matrix).find(|x| x.nrows() != m.nrows()) {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: bad.nrows(),
            });
        }
    }
    let zero = zero_like(ctx, sample);
    let (rt, ct) = (total(ctx, rows, &zero)?, total(ctx, cols, &zero)?);
    if !ctx.approx_eq(&rt, &ct) {
        return Err(Error::TotalMismatch(format!("rows sum to {rt}, columns to {ct}")));
    }

    // A nonzero marginal whose line has no support can never be met.
    let row_blocked = (0..rows.len()).find(|&i| !support[i].iter().any(|&s| s) && !ctx.is_zero(&rows[i]));
    let col_blocked = (0..cols.len()).find(|&j| !support.iter().any(|s| s[j]) && !ctx.is_zero(&cols[j]));
    if let Some(v) = row_blocked.map(|i| &rows[i]).or(col_blocked.map(|j| &cols[j])) {
        let mut verdict = FeasibilityVerdict::exact(false, None, CouplingMethod::Direct);
        verdict.residual = ctx.distance(v, &zero);
        return Ok(verdict);
    }
    // With a single row or column the coupling is forced.
    if rows.len() == 1 {
        return Ok(FeasibilityVerdict::exact(true, Some(vec![cols.to_vec()]), CouplingMethod::Direct));
    }
    if cols.len() == 1 {
        let witness = rows.iter().map(|r| vec![r.clone()]).collect();
        return Ok(FeasibilityVerdict::exact(true, Some(witness), CouplingMethod::Direct));
    }

    match ctx.kind() {
        AlgebraKind::Probability => Ok(probability_coupling(ctx, rows, cols, support)),
        AlgebraKind::Finite(t) => Ok(finite_coupling(t, rows, cols, support)),
        AlgebraKind::Quantum(_) => {
            let rows: Vec<CMatrix> = rows.iter().filter_map(|v| v.as_matrix().cloned()).collect();
            let cols: Vec<CMatrix> = cols.iter().filter_map(|v| v.as_matrix().cloned()).collect();
            Ok(quantum_coupling(ctx.tol(), &rows, &cols, support, opts))
        }
    }
}

/// Decomposability of one instance `a + b = c + d`.
pub fn is_decomposable_instance(
    ctx: &EffectAlgebraContext,
    a: &EffectValue,
    b: &EffectValue,
    c: &EffectValue,
    d: &EffectValue,
    opts: FeasibilityOptions,
) -> Result<FeasibilityVerdict> {
    let ab = ctx.sum(a, b)?.ok_or_else(|| Error::InvalidInstance(format!("{a} and {b} are not orthogonal")))?;
    let cd = ctx.sum(c, d)?.ok_or_else(|| Error::InvalidInstance(format!("{c} and {d} are not orthogonal")))?;
    if !ctx.approx_eq(&ab, &cd) {
        return Err(Error::InvalidInstance(format!("{ab} differs from {cd}")));
    }
    coupling_feasible(
        ctx,
        &[a.clone(), b.clone()],
        &[c.clone(), d.clone()],
        &[vec![true, true], vec![true, true]],
        opts,
    )
}

fn rationals(values: &[EffectValue]) -> Vec<Rational> {
    values.iter().filter_map(|v| v.as_rational().cloned()).collect()
}

fn probability_coupling(
    ctx: &EffectAlgebraContext,
    rows: &[EffectValue],
    cols: &[EffectValue],
    support: &[Vec<bool>],
) -> FeasibilityVerdict {
    let (rows, cols) = (rationals(rows), rationals(cols));
    let (n, m) = (rows.len(), cols.len());
    let slack = Rational::from_float(ctx.tol()).unwrap_or_else(Rational::zero) * Rational::from_integer((n + m).into());
    let to_witness = |w: Vec<Vec<Rational>>| -> Vec<Vec<EffectValue>> {
        w.into_iter().map(|r| r.into_iter().map(EffectValue::Rational).collect()).collect()
    };

    if support.iter().all(|r| r.iter().all(|&s| s)) {
        let mut w = vec![vec![Rational::zero(); m]; n];
        let (mut r, mut c) = (rows.clone(), cols.clone());
        let (mut i, mut j) = (0, 0);
        while i < n && j < m {
            let x = if r[i] < c[j] { r[i].clone() } else { c[j].clone() };
            r[i] -= &x;
            c[j] -= &x;
            w[i][j] = x;
            if r[i].is_zero() {
                i += 1;
            } else {
                j += 1;
            }
        }
        let leftover: Rational = r.iter().chain(c.iter()).cloned().sum();
        let feasible = leftover <= slack;
        let mut verdict = FeasibilityVerdict::exact(feasible, feasible.then(|| to_witness(w)), CouplingMethod::NorthWestCorner);
        verdict.residual = super::rational_to_f64(&leftover);
        return verdict;
    }

    let (source, sink) = (n + m, n + m + 1);
    let mut net = FlowNetwork::new(n + m + 2);
    for (i, r) in rows.iter().enumerate() {
        net.add_edge(source, i, r.clone());
    }
    for (j, c) in cols.iter().enumerate() {
        net.add_edge(n + j, sink, c.clone());
    }
    let mut handles = Vec::new();
    for i in 0..n {
        for j in 0..m {
            if support[i][j] {
                handles.push((i, j, net.add_edge(i, n + j, rows[i].clone())));
            }
        }
    }
    let flow = net.max_flow(source, sink, &Rational::zero());
    let want: Rational = rows.iter().cloned().sum();
    let gap = &want - &flow;
    let feasible = gap <= slack;
    let witness = feasible.then(|| {
        let mut w = vec![vec![Rational::zero(); m]; n];
        for (i, j, h) in &handles {
            w[*i][*j] = net.flow(*h);
        }
        to_witness(w)
    });
    let mut verdict = FeasibilityVerdict::exact(feasible, witness, CouplingMethod::MaxFlow);
    verdict.residual = super::rational_to_f64(&gap);
    verdict
}

fn finite_coupling(t: &FiniteTable, rows: &[EffectValue], cols: &[EffectValue], support: &[Vec<bool>]) -> FeasibilityVerdict {
    let id = |v: &EffectValue| match v {
        EffectValue::Finite(name) => t.id(name).expect("checked"),
        _ => unreachable!("checked by context"),
    };
    let rows: Vec<usize> = rows.iter().map(id).collect();
    let cols: Vec<usize> = cols.iter().map(id).collect();
    let (n, m) = (rows.len(), cols.len());

    struct Search<'a> {
        t: &'a FiniteTable,
        rows: &'a [usize],
        cols: &'a [usize],
        support: &'a [Vec<bool>],
        cells: Vec<Vec<usize>>,
        row_acc: Vec<usize>,
        col_acc: Vec<usize>,
    }

    impl Search<'_> {
        fn run(&mut self, k: usize) -> bool {
            let (n, m) = (self.rows.len(), self.cols.len());
            if k == n * m {
                return (0..m).all(|j| self.col_acc[j] == self.cols[j]);
            }
            let (i, j) = (k / m, k % m);
            let candidates: Vec<usize> = if self.support[i][j] {
                (0..self.t.len()).collect()
            } else {
                vec![self.t.zero()]
            };
            for e in candidates {
                let Some(r) = self.t.sum(self.row_acc[i], e) else { continue };
                let Some(c) = self.t.sum(self.col_acc[j], e) else { continue };
                if !self.t.leq(r, self.rows[i]) || !self.t.leq(c, self.cols[j]) {
                    continue;
                }
                if j == m - 1 && r != self.rows[i] {
                    continue;
                }
                let (saved_r, saved_c) = (self.row_acc[i], self.col_acc[j]);
                self.row_acc[i] = r;
                self.col_acc[j] = c;
                self.cells[i][j] = e;
                if self.run(k + 1) {
                    return true;
                }
                self.row_acc[i] = saved_r;
                self.col_acc[j] = saved_c;
            }
            false
        }
    }

    let mut search = Search {
        t,
        rows: &rows,
        cols: &cols,
        support,
        cells: vec![vec![t.zero(); m]; n],
        row_acc: vec![t.zero(); n],
        col_acc: vec![t.zero(); m],
    };
    let feasible = search.run(0);
    let witness = feasible.then(|| {
        search
            .cells
            .iter()
            .map(|r| r.iter().map(|&e| EffectValue::Finite(t.name(e).to_string())).collect())
            .collect()
    });
    FeasibilityVerdict::exact(feasible, witness, CouplingMethod::Exhaustive)
}

fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn rank(m: &CMatrix, tol: f64) -> usize {
    quantum::eigenvalues(m).iter().filter(|&&l| l > tol).count()
}

fn quantum_coupling(
    tol: f64,
    rows: &[CMatrix],
    cols: &[CMatrix],
    support: &[Vec<bool>],
    opts: FeasibilityOptions,
) -> FeasibilityVerdict {
    let rank_tol = tol.max(1e-12);
    if rows.iter().chain(cols).all(|m| rank(m, rank_tol) <= 1) {
        rank_one_coupling(rank_tol, rows, cols, support, opts)
    } else {
        dykstra_coupling(rows, cols, support, opts)
    }
}

/// Every cell below a rank-one marginal `w·P` is `p·P` for some `p ≥ 0`, so
/// a cell can be nonzero only where its row and column share a direction.
fn rank_one_coupling(
    rank_tol: f64,
    rows: &[CMatrix],
    cols: &[CMatrix],
    support: &[Vec<bool>],
    opts: FeasibilityOptions,
) -> FeasibilityVerdict {
    let split = |m: &CMatrix| {
        let w = quantum::trace(m).re;
        (w, (w > rank_tol).then(|| m.unscale(w)))
    };
    let rows: Vec<(f64, Option<CMatrix>)> = rows.iter().map(split).collect();
    let cols: Vec<(f64, Option<CMatrix>)> = cols.iter().map(split).collect();
    let (n, m) = (rows.len(), cols.len());
    let d = rows.iter().chain(&cols).find_map(|(_, p)| p.as_ref().map(|p| p.nrows())).unwrap_or(0);

    let (source, sink) = (n + m, n + m + 1);
    let mut net = FlowNetwork::new(n + m + 2);
    for (i, (w, _)) in rows.iter().enumerate() {
        net.add_edge(source, i, *w);
    }
    for (j, (w, _)) in cols.iter().enumerate() {
        net.add_edge(n + j, sink, *w);
    }
    let mut handles = Vec::new();
    for i in 0..n {
        for j in 0..m {
            let aligned = match (&rows[i].1, &cols[j].1) {
                (Some(p), Some(q)) => quantum::max_abs_diff(p, q) <= opts.feas_tol,
                _ => false,
            };
            if support[i][j] && aligned {
                handles.push((i, j, net.add_edge(i, n + j, rows[i].0)));
            }
        }
    }
    let flow = net.max_flow(source, sink, &1e-15);
    let want: f64 = rows.iter().map(|(w, _)| w).sum();
    let residual = (want - flow).max(0.0);
    let feasible = residual <= opts.feas_tol;
    let witness = feasible.then(|| {
        let mut cells = vec![vec![EffectValue::Matrix(quantum::zeros(d)); m]; n];
        for (i, j, h) in &handles {
            let p = rows[*i].1.as_ref().expect("aligned rows have a direction");
            cells[*i][*j] = EffectValue::Matrix(p.scale(net.flow(*h)));
        }
        cells
    });
    FeasibilityVerdict {
        feasible,
        witness,
        residual,
        method: CouplingMethod::RankOne,
        certified: true,
        iterations: 0,
    }
}

/// Dykstra's alternating projections between the product of PSD cones (one
/// per supported cell) and the affine space of matrices with the required
/// row and column sums.
fn dykstra_coupling(rows: &[CMatrix], cols: &[CMatrix], support: &[Vec<bool>], opts: FeasibilityOptions) -> FeasibilityVerdict {
    let (n, m) = (rows.len(), cols.len());
    let d = rows[0].nrows();
    let cells: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .filter(|&(i, j)| support[i][j])
        .collect();
    let targets: Vec<&CMatrix> = rows.iter().chain(cols).collect();

    // Pseudo-inverse of the (signless) Laplacian A Aᵀ of the support graph.
    let nodes = n + m;
    let mut lap = DMatrix::<f64>::zeros(nodes, nodes);
    for &(i, j) in &cells {
        let (r, c) = (i, n + j);
        lap[(r, r)] += 1.0;
        lap[(c, c)] += 1.0;
        lap[(r, c)] += 1.0;
        lap[(c, r)] += 1.0;
    }
    let lap_pinv = lap.pseudo_inverse(1e-10).expect("non-negative epsilon");

    let violation = |x: &[CMatrix]| -> Vec<CMatrix> {
        let mut acc: Vec<CMatrix> = targets.iter().map(|t| -(*t).clone()).collect();
        for (k, &(i, j)) in cells.iter().enumerate() {
            acc[i] += &x[k];
            acc[n + j] += &x[k];
        }
        acc
    };
    let project_affine = |x: &[CMatrix]| -> Vec<CMatrix> {
        let v = violation(x);
        let y: Vec<CMatrix> = (0..nodes)
            .map(|a| {
                let mut s = quantum::zeros(d);
                for (b, vb) in v.iter().enumerate() {
                    let coef = lap_pinv[(a, b)];
                    if coef != 0.0 {
                        s += vb.scale(coef);
                    }
                }
                s
            })
            .collect();
        cells
            .iter()
            .enumerate()
            .map(|(k, &(i, j))| &x[k] - &y[i] - &y[n + j])
            .collect()
    };
    let residual_of = |x: &[CMatrix]| violation(x).iter().map(frobenius).fold(0.0, f64::max);

    let mut x = project_affine(&vec![quantum::zeros(d); cells.len()]);
    let mut p = vec![quantum::zeros(d); cells.len()];
    let mut q = vec![quantum::zeros(d); cells.len()];
    let mut best = f64::INFINITY;
    let mut checkpoint = f64::INFINITY;
    let mut residual = f64::INFINITY;
    let mut y: Vec<CMatrix> = Vec::new();
    let mut iterations = 0;
    while iterations < opts.max_iters {
        iterations += 1;
        y = x.iter().zip(&p).map(|(xk, pk)| quantum::psd_projection(&(xk + pk))).collect();
        for k in 0..cells.len() {
            p[k] = &x[k] + &p[k] - &y[k];
        }
        let shifted: Vec<CMatrix> = y.iter().zip(&q).map(|(yk, qk)| yk + qk).collect();
        x = project_affine(&shifted);
        for k in 0..cells.len() {
            q[k] = &shifted[k] - &x[k];
        }
        residual = residual_of(&y);
        best = best.min(residual);
        if residual < opts.feas_tol {
            break;
        }
        // Give up once the residual has flattened out.
        if iterations % 2000 == 0 {
            if checkpoint - best < 1e-10 {
                break;
            }
            checkpoint = best;
        }
    }
    let feasible = residual < opts.feas_tol;
    let witness = feasible.then(|| {
        let mut out = vec![vec![EffectValue::Matrix(quantum::zeros(d)); m]; n];
        for (k, &(i, j)) in cells.iter().enumerate() {
            out[i][j] = EffectValue::Matrix(quantum::hermitian_part(&y[k]));
        }
        out
    });
    FeasibilityVerdict {
        feasible,
        witness,
        residual,
        method: CouplingMethod::Dykstra,
        certified: false,
        iterations,
    }
}
