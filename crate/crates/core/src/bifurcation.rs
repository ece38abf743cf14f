//! Sotomayor transcritical test, one-parameter continuation of the design and
//! aligned branches in `μ` (added to the third canonical target value), and
//! the logistic normal form used as a reference.

use std::fmt;

use thiserror::Error;

use crate::dynamics::VectorFieldBundle;
use crate::equilibria::{
    aligned_angles, design_frameworks, formation_record, solve_aligned_from, solve_aligned_grid, EquilibriaError,
    EquilibriumKind, GaugeSlice, PARALLEL_TOL, TOL_ZERO,
};
use crate::graph::TwoCyclesMap;
use crate::numkernel::{
    eigenvalues, fd_jacobian, fd_mixed_directional, fd_second_directional, norm2, norm_inf, DenseMatrix, NumError,
    Spectrum, Svd,
};
use crate::rigidity::{in_singular_set, is_parallel, Framework, RigidityError};
use crate::Scalar;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum BifurcationError {
    #[error("not an equilibrium at μ = {mu}: residual {residual:e}")]
    NotEquilibrium { mu: f64, residual: f64 },
    #[error("state has {got} entries, family dimension is {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("sweep needs at least one sample and a positive half-width")]
    InvalidSweep,
    #[error(transparent)]
    Equilibria(#[from] EquilibriaError),
    #[error(transparent)]
    Rigidity(#[from] RigidityError),
    #[error(transparent)]
    Num(#[from] NumError),
}

/// A vector field `f(q, μ)` on `ℝ^dim`.
pub trait ParamFamily<T: Scalar>: Sync {
    fn dim(&self) -> usize;

    fn eval(&self, q: &[T], mu: T) -> Vec<T>;

    /// `∂f/∂q`; only needs to be exact at equilibria.
    fn jacobian(&self, q: &[T], mu: T) -> DenseMatrix<T> {
        fd_jacobian(|p: &[T]| self.eval(p, mu), q, T::lit(1e-6))
    }

    /// Quantity that vanishes exactly at equilibria.
    fn equilibrium_residual(&self, q: &[T], mu: T) -> T {
        norm_inf(&self.eval(q, mu))
    }
}

/// A family given by a closure.
pub struct FnFamily<F> {
    dim: usize,
    f: F,
}

impl<F> FnFamily<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<T: Scalar, F: Fn(&[T], T) -> Vec<T> + Sync> ParamFamily<T> for FnFamily<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, q: &[T], mu: T) -> Vec<T> {
        (self.f)(q, mu)
    }
}

/// The formation field on the gauge slice, with `μ` added to the target
/// value of canonical edge 3.
#[derive(Debug, Clone)]
pub struct FormationMuFamily<T: Scalar> {
    base: VectorFieldBundle<T>,
    edge: usize,
    slice: GaugeSlice,
}

impl<T: Scalar> FormationMuFamily<T> {
    pub fn new(base: VectorFieldBundle<T>) -> Result<Self, BifurcationError> {
        let map = TwoCyclesMap::find(base.graph()).map_err(EquilibriaError::from)?;
        Ok(Self {
            edge: map.edge[2],
            slice: GaugeSlice::new(base.graph()),
            base,
        })
    }

    pub fn base(&self) -> &VectorFieldBundle<T> {
        &self.base
    }

    /// Graph index of the perturbed edge.
    pub fn edge(&self) -> usize {
        self.edge
    }

    pub fn slice(&self) -> &GaugeSlice {
        &self.slice
    }

    pub fn bundle_at(&self, mu: T) -> Result<VectorFieldBundle<T>, BifurcationError> {
        let lengths = self.base.lengths().perturbed(self.edge, mu)?;
        self.base
            .with_lengths(lengths)
            .map_err(|e| BifurcationError::Equilibria(e.into()))
    }

    /// Slice coordinates of a framework (after moving it into the gauge).
    pub fn coordinates(&self, f: &Framework<T>) -> Vec<T> {
        self.slice.project(&f.canonical_gauge().to_flat())
    }

    pub fn framework(&self, q: &[T]) -> Result<Framework<T>, BifurcationError> {
        Ok(Framework::from_flat(self.base.graph().clone(), &self.slice.embed(q))?)
    }
}

impl<T: Scalar> ParamFamily<T> for FormationMuFamily<T> {
    fn dim(&self) -> usize {
        self.slice.dim()
    }

    fn eval(&self, q: &[T], mu: T) -> Vec<T> {
        let nan = || vec![T::nan(); self.slice.dim()];
        let Ok(b) = self.bundle_at(mu) else { return nan() };
        let x = self.slice.embed(q);
        self.slice.reduce_vector(&x, &b.eval_fx(&x)).unwrap_or_else(|_| nan())
    }

    fn jacobian(&self, q: &[T], mu: T) -> DenseMatrix<T> {
        let x = self.slice.embed(q);
        match self.bundle_at(mu) {
            Ok(b) => self
                .slice
                .reduce_jacobian(&x, &b.jacobian_x(&x))
                .unwrap_or_else(|_| DenseMatrix::from_fn(q.len(), q.len(), |_, _| T::nan())),
            Err(_) => DenseMatrix::from_fn(q.len(), q.len(), |_, _| T::nan()),
        }
    }

    fn equilibrium_residual(&self, q: &[T], mu: T) -> T {
        match self.bundle_at(mu) {
            Ok(b) => norm_inf(&b.eval_fx(&self.slice.embed(q))),
            Err(_) => T::infinity(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SotomayorOptions<T> {
    /// Relative zero threshold for eigenvalues (times the spectral radius).
    pub tol_zero: T,
    /// Largest equilibrium residual accepted.
    pub eq_tol: T,
    /// `|wᵀ∂f/∂μ| ≤ max(tol_mu_rel ‖∂f/∂μ‖, tol_mu_abs)` counts as zero.
    pub tol_mu_rel: T,
    pub tol_mu_abs: T,
    /// Threshold for the two non-degeneracy scalars.
    pub tol_nondeg: T,
    pub h_x: T,
    pub h_mu: T,
}

impl<T: Scalar> Default for SotomayorOptions<T> {
    fn default() -> Self {
        Self {
            tol_zero: T::lit(TOL_ZERO),
            eq_tol: T::lit(1e-9),
            tol_mu_rel: T::lit(1e-6),
            tol_mu_abs: T::lit(1e-9),
            tol_nondeg: T::lit(1e-3),
            h_x: T::lit(1e-4),
            h_mu: T::lit(1e-4),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SotomayorReport<T> {
    pub eigenvalues: Spectrum<T>,
    pub zero_eig_unique: bool,
    pub others_negative: bool,
    /// Two or more eigenvalues at zero.
    pub degenerate: bool,
    /// Unit left kernel vector.
    pub w: Vec<T>,
    /// Unit right kernel vector.
    pub v: Vec<T>,
    /// `‖wᵀ J‖₂` and `‖J v‖₂`.
    pub left_residual: T,
    pub right_residual: T,
    /// `wᵀ ∂f/∂μ`.
    pub t_mu: T,
    /// `‖∂f/∂μ‖₂`.
    pub dfdmu_norm: T,
    /// `wᵀ D²f(v, v)`.
    pub t_quad: T,
    /// `wᵀ (∂²f/∂q∂μ) v`.
    pub t_mixed: T,
    pub verdict: bool,
}

/// Transcritical conditions at the equilibrium `(q0, mu0)` of `family`.
///
/// `v` is oriented so that its largest component is positive and `w` so that
/// `wᵀv ≥ 0`; the signs of `t_quad` and `t_mixed` follow this choice.
pub fn sotomayor_check<T: Scalar, P: ParamFamily<T> + ?Sized>(
    family: &P,
    q0: &[T],
    mu0: T,
    opts: &SotomayorOptions<T>,
) -> Result<SotomayorReport<T>, BifurcationError> {
    if q0.len() != family.dim() {
        return Err(BifurcationError::Dimension {
            expected: family.dim(),
            got: q0.len(),
        });
    }
    let residual = family.equilibrium_residual(q0, mu0);
    if !(residual <= opts.eq_tol) {
        return Err(BifurcationError::NotEquilibrium {
            mu: mu0.as_f64(),
            residual: residual.as_f64(),
        });
    }
    let j = family.jacobian(q0, mu0);
    let spectrum = eigenvalues(&j)?;
    let tol = opts.tol_zero * spectrum.spectral_radius();
    let zeros = spectrum.values().iter().filter(|c| c.norm() <= tol).count();
    let zero_eig_unique = zeros == 1;
    let others_negative = spectrum
        .values()
        .iter()
        .filter(|c| c.norm() > tol)
        .all(|c| c.re < -tol);

    let n = q0.len();
    let right = Svd::new(&j)?;
    let left = Svd::new(&j.transpose())?;
    let mut v = right.v.column(n - 1);
    let mut w = left.v.column(n - 1);
    let imax = (0..n)
        .max_by(|a, b| v[*a].abs().partial_cmp(&v[*b].abs()).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap_or(0);
    if v[imax] < T::zero() {
        v.iter_mut().for_each(|c| *c = -*c);
    }
    if crate::numkernel::dot(&w, &v) < T::zero() {
        w.iter_mut().for_each(|c| *c = -*c);
    }
    let left_residual = norm2(&j.vecmat(&w)?);
    let right_residual = norm2(&j.matvec(&v)?);

    let k = crate::numkernel::fd_step(mu0, opts.h_mu);
    let fp = family.eval(q0, mu0 + k);
    let fm = family.eval(q0, mu0 - k);
    let dfdmu: Vec<T> = fp.iter().zip(&fm).map(|(a, b)| (*a - *b) / (T::two() * k)).collect();
    let t_mu = crate::numkernel::dot(&w, &dfdmu);
    let dfdmu_norm = norm2(&dfdmu);
    let d2 = fd_second_directional(|p: &[T]| family.eval(p, mu0), q0, &v, opts.h_x);
    let t_quad = crate::numkernel::dot(&w, &d2);
    let dm = fd_mixed_directional(|p: &[T], m| family.eval(p, m), q0, mu0, &v, opts.h_x, opts.h_mu);
    let t_mixed = crate::numkernel::dot(&w, &dm);

    let mu_ok = t_mu.abs() <= (opts.tol_mu_rel * dfdmu_norm).max(opts.tol_mu_abs);
    let verdict = zero_eig_unique
        && others_negative
        && mu_ok
        && t_quad.abs() > opts.tol_nondeg
        && t_mixed.abs() > opts.tol_nondeg;
    Ok(SotomayorReport {
        eigenvalues: spectrum,
        zero_eig_unique,
        others_negative,
        degenerate: zeros >= 2,
        w,
        v,
        left_residual,
        right_residual,
        t_mu,
        dfdmu_norm,
        t_quad,
        t_mixed,
        verdict,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BranchKind {
    Design,
    AncillaryAligned,
}

impl BranchKind {
    pub fn name(self) -> &'static str {
        match self {
            BranchKind::Design => "design",
            BranchKind::AncillaryAligned => "ancillary_aligned",
        }
    }
}

impl fmt::Display for BranchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct BranchPoint<T> {
    pub mu: T,
    pub branch: BranchKind,
    /// Canonical-gauge framework.
    pub framework: Framework<T>,
    /// Largest real part of the gauge spectrum.
    pub leading_real: T,
    pub stable: bool,
    /// Edge errors in graph edge order.
    pub errors: Vec<T>,
    pub kind: EquilibriumKind,
    pub spectrum: Spectrum<T>,
}

#[derive(Debug, Clone)]
pub struct SweepResult<T> {
    pub mu_grid: Vec<T>,
    /// Points in grid order, design branch first at each `μ`.
    pub points: Vec<BranchPoint<T>>,
    /// Grid values where a branch could not be continued.
    pub gaps: Vec<(BranchKind, T)>,
    /// The base lengths lie in the singular set.
    pub in_singular_set: bool,
}

impl<T: Scalar> SweepResult<T> {
    pub fn branch(&self, kind: BranchKind) -> Vec<&BranchPoint<T>> {
        self.points.iter().filter(|p| p.branch == kind).collect()
    }

    pub fn grid_step(&self) -> Option<T> {
        (self.mu_grid.len() >= 2).then(|| self.mu_grid[1] - self.mu_grid[0])
    }
}

/// Symmetric grid of `samples` values on `[−eps, eps]`.
pub fn mu_grid<T: Scalar>(eps: T, samples: usize) -> Vec<T> {
    if samples == 1 {
        return vec![T::zero()];
    }
    let last = T::lit((samples - 1) as f64);
    (0..samples)
        .map(|i| {
            // The middle sample is exactly zero for odd counts.
            if 2 * i + 1 == samples {
                T::zero()
            } else {
                -eps + T::two() * eps * T::lit(i as f64) / last
            }
        })
        .collect()
}

fn branch_point<T: Scalar>(
    b: &VectorFieldBundle<T>,
    mu: T,
    branch: BranchKind,
    f: &Framework<T>,
) -> Result<BranchPoint<T>, EquilibriaError> {
    let r = formation_record(b, f)?;
    let framework = r.framework.clone().expect("formation record");
    Ok(BranchPoint {
        mu,
        branch,
        errors: framework.edge_errors(b.lengths())?,
        leading_real: r.leading_real(),
        stable: r.stable,
        kind: r.kind,
        spectrum: r.spectrum_gauge,
        framework,
    })
}

fn parallel_measure<T: Scalar>(f: &Framework<T>, map: &TwoCyclesMap) -> T {
    let z = f.edge_vectors().z;
    let (a, b) = (z[map.edge[0]], z[map.edge[4]]);
    a.cross(b).abs() / (a.norm() * b.norm())
}

/// The design framework of `b`'s lengths whose `z₁` and `z₅` are closest to
/// parallel. Several designs can be parallel at once; ties go to the lowest
/// realization index so the choice does not depend on rounding.
pub fn most_parallel_design<T: Scalar>(b: &VectorFieldBundle<T>) -> Result<Framework<T>, BifurcationError> {
    let map = TwoCyclesMap::find(b.graph()).map_err(EquilibriaError::from)?;
    let designs = design_frameworks(b.graph(), b.lengths())?;
    let measures: Vec<T> = designs.iter().map(|f| parallel_measure(f, &map)).collect();
    let best = measures.iter().fold(T::infinity(), |m, &v| m.min(v));
    let pick = measures
        .iter()
        .position(|&v| v <= best + T::lit(PARALLEL_TOL))
        .expect("four realizations");
    Ok(designs[pick].clone())
}

/// Continues the design branch through the most parallel design framework of
/// the base lengths and the aligned ancillary branch crossing it, over a
/// symmetric grid of `samples` values of `μ` in `[−eps, eps]`.
///
/// The aligned branch starts at the first grid value from the aligned
/// solution nearest the design branch and is warm-started with a secant
/// predictor; a failed step is retried with up to three halvings before a gap
/// is recorded.
pub fn mu_sweep<T: Scalar>(b0: &VectorFieldBundle<T>, eps: T, samples: usize) -> Result<SweepResult<T>, BifurcationError> {
    if samples == 0 || !(eps > T::zero()) {
        return Err(BifurcationError::InvalidSweep);
    }
    let reference = most_parallel_design(b0)?;
    mu_sweep_from(b0, &reference, eps, samples)
}

/// As [`mu_sweep`], tracking the design branch through `reference`, which
/// must be a design framework of the base lengths.
pub fn mu_sweep_from<T: Scalar>(
    b0: &VectorFieldBundle<T>,
    reference: &Framework<T>,
    eps: T,
    samples: usize,
) -> Result<SweepResult<T>, BifurcationError> {
    if samples == 0 || !(eps > T::zero()) {
        return Err(BifurcationError::InvalidSweep);
    }
    let family = FormationMuFamily::new(b0.clone())?;
    let map = TwoCyclesMap::find(b0.graph()).map_err(EquilibriaError::from)?;
    let grid = mu_grid(eps, samples);
    let in_singular = in_singular_set(b0.graph(), b0.lengths(), T::lit(1e-8))?;
    let reference = reference.clone();

    let mut points = Vec::new();
    let mut gaps = Vec::new();
    let mut prev_design = reference;
    let mut history: Vec<(T, [T; 2])> = Vec::new();
    for (i, &mu) in grid.iter().enumerate() {
        let Ok(b) = family.bundle_at(mu) else {
            gaps.push((BranchKind::Design, mu));
            gaps.push((BranchKind::AncillaryAligned, mu));
            history.clear();
            continue;
        };
        let design = design_frameworks(b.graph(), b.lengths()).ok().and_then(|fs| {
            fs.into_iter().min_by(|a, c| {
                a.max_distance(&prev_design)
                    .partial_cmp(&c.max_distance(&prev_design))
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
        });
        let design_point = design.as_ref().and_then(|f| branch_point(&b, mu, BranchKind::Design, f).ok());
        match &design_point {
            Some(p) => {
                prev_design = p.framework.clone();
                points.push(p.clone());
            }
            None => gaps.push((BranchKind::Design, mu)),
        }

        let aligned = if history.is_empty() {
            if i == 0 {
                start_aligned(&b, &prev_design)
            } else {
                None
            }
        } else {
            continue_aligned(&family, &history, mu, design_point.as_ref(), &map)
        };
        match aligned {
            Some((angles, f)) => match branch_point(&b, mu, BranchKind::AncillaryAligned, &f) {
                Ok(p) => {
                    history.push((mu, angles));
                    points.push(p);
                }
                Err(_) => gaps.push((BranchKind::AncillaryAligned, mu)),
            },
            None => gaps.push((BranchKind::AncillaryAligned, mu)),
        }
    }
    Ok(SweepResult {
        mu_grid: grid,
        points,
        gaps,
        in_singular_set: in_singular,
    })
}

fn start_aligned<T: Scalar>(b: &VectorFieldBundle<T>, design: &Framework<T>) -> Option<([T; 2], Framework<T>)> {
    let sols = solve_aligned_grid(b, 12).ok()?;
    sols.into_iter()
        .filter(|s| !s.record.kind.is_design())
        .filter_map(|s| Some((s.angles, s.record.framework?)))
        .min_by(|a, c| {
            a.1.max_distance(design)
                .partial_cmp(&c.1.max_distance(design))
                .unwrap_or(std::cmp::Ordering::Equal)
        })
}

fn predict<T: Scalar>(history: &[(T, [T; 2])], mu: T) -> [T; 2] {
    let (m1, a1) = history[history.len() - 1];
    if history.len() < 2 {
        return a1;
    }
    let (m0, a0) = history[history.len() - 2];
    let s = (mu - m1) / (m1 - m0);
    [a1[0] + s * (a1[0] - a0[0]), a1[1] + s * (a1[1] - a0[1])]
}

/// Newton from the secant predictor; rejects designs away from `μ = 0`
/// because they belong to the other branch.
fn aligned_step<T: Scalar>(
    family: &FormationMuFamily<T>,
    history: &[(T, [T; 2])],
    mu: T,
) -> Option<([T; 2], Framework<T>)> {
    let b = family.bundle_at(mu).ok()?;
    let sol = solve_aligned_from(&b, unwrap_near(predict(history, mu), history.last()?.1)).ok()??;
    if sol.record.kind.is_design() && mu != T::zero() {
        return None;
    }
    let angles = unwrap_near(sol.angles, history.last()?.1);
    Some((angles, sol.record.framework?))
}

/// Shifts angles by multiples of 2π to lie near `reference`.
fn unwrap_near<T: Scalar>(a: [T; 2], reference: [T; 2]) -> [T; 2] {
    let tau = T::two() * T::PI();
    std::array::from_fn(|k| a[k] - ((a[k] - reference[k]) / tau).round() * tau)
}

fn continue_aligned<T: Scalar>(
    family: &FormationMuFamily<T>,
    history: &[(T, [T; 2])],
    mu: T,
    design: Option<&BranchPoint<T>>,
    map: &TwoCyclesMap,
) -> Option<([T; 2], Framework<T>)> {
    if let Some(r) = aligned_step(family, history, mu) {
        return Some(r);
    }
    let (m_last, _) = *history.last()?;
    for halvings in 1..=3u32 {
        let parts = 1usize << halvings;
        let mut local: Vec<(T, [T; 2])> = history.to_vec();
        let mut last = None;
        for k in 1..=parts {
            let m = m_last + (mu - m_last) * T::lit(k as f64) / T::lit(parts as f64);
            match aligned_step(family, &local, m) {
                Some((a, f)) => {
                    local.push((m, a));
                    last = Some((a, f));
                }
                None => {
                    last = None;
                    break;
                }
            }
        }
        if last.is_some() {
            return last;
        }
    }
    // At the crossing the aligned branch meets the design branch.
    let d = design?;
    let z = d.framework.edge_vectors().z;
    if is_parallel(z[map.edge[0]], z[map.edge[4]], T::lit(PARALLEL_TOL)) {
        let angles = unwrap_near(aligned_angles(&d.framework).ok()?, history.last()?.1);
        return Some((angles, d.framework.clone()));
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// The design branch is stable for `μ > 0`.
    DesignStableAbove,
    /// The design branch is stable for `μ < 0`.
    DesignStableBelow,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Detection<T> {
    Detected {
        orientation: Orientation,
        crossing_design: T,
        crossing_aligned: T,
    },
    NotDetected {
        reason: String,
    },
    Indeterminate {
        reason: String,
    },
}

impl<T> Detection<T> {
    pub fn is_detected(&self) -> bool {
        matches!(self, Detection::Detected { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            Detection::Detected { .. } => "detected",
            Detection::NotDetected { .. } => "not detected",
            Detection::Indeterminate { .. } => "indeterminate",
        }
    }
}

/// Single sign change of a branch: `(sign before, sign after, crossing μ)`.
fn crossing<T: Scalar>(pts: &[&BranchPoint<T>]) -> Result<(i8, i8, T), String> {
    let scale = pts.iter().fold(T::zero(), |m, p| m.max(p.leading_real.abs()));
    let tol = T::lit(TOL_ZERO) * scale;
    let sign = |v: T| {
        if v > tol {
            1i8
        } else if v < -tol {
            -1
        } else {
            0
        }
    };
    let nonzero: Vec<(usize, i8)> = pts
        .iter()
        .enumerate()
        .map(|(k, p)| (k, sign(p.leading_real)))
        .filter(|(_, s)| *s != 0)
        .collect();
    let changes: Vec<usize> = (1..nonzero.len()).filter(|&k| nonzero[k].1 != nonzero[k - 1].1).collect();
    match changes.as_slice() {
        [] => Err("leading real part keeps one sign".into()),
        [k] => {
            let (ia, sa) = nonzero[k - 1];
            let (ib, sb) = nonzero[*k];
            let between: Vec<usize> = (ia + 1..ib).collect();
            let mu = if let Some(&z) = between.first() {
                pts[z].mu
            } else {
                let (pa, pb) = (pts[ia], pts[ib]);
                pa.mu - pa.leading_real * (pb.mu - pa.mu) / (pb.leading_real - pa.leading_real)
            };
            Ok((sa, sb, mu))
        }
        _ => Err("leading real part changes sign more than once".into()),
    }
}

/// Exchange of stability between the two branches of a sweep.
pub fn transcritical_detect<T: Scalar>(sweep: &SweepResult<T>) -> Detection<T> {
    let Some(step) = sweep.grid_step() else {
        return Detection::Indeterminate {
            reason: "fewer than two samples".into(),
        };
    };
    if !sweep.gaps.is_empty() {
        return Detection::Indeterminate {
            reason: format!("{} gap(s) in the branches", sweep.gaps.len()),
        };
    }
    let design = sweep.branch(BranchKind::Design);
    let aligned = sweep.branch(BranchKind::AncillaryAligned);
    if design.len() < 2 || aligned.len() < 2 {
        return Detection::Indeterminate {
            reason: "a branch has fewer than two points".into(),
        };
    }
    let (d, a) = match (crossing(&design), crossing(&aligned)) {
        (Ok(d), Ok(a)) => (d, a),
        (Err(r), _) => return Detection::NotDetected { reason: format!("design branch: {r}") },
        (_, Err(r)) => return Detection::NotDetected { reason: format!("aligned branch: {r}") },
    };
    if d.0 != -a.0 || d.1 != -a.1 {
        return Detection::NotDetected {
            reason: "both branches change stability the same way".into(),
        };
    }
    let slack = step.abs() * T::lit(1.0 + 1e-9);
    if d.2.abs() > slack || a.2.abs() > slack {
        return Detection::NotDetected {
            reason: "crossing is farther than one grid step from zero".into(),
        };
    }
    Detection::Detected {
        orientation: if d.1 < 0 {
            Orientation::DesignStableAbove
        } else {
            Orientation::DesignStableBelow
        },
        crossing_design: d.2,
        crossing_aligned: a.2,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Unstable,
    /// Zero eigenvalue.
    Degenerate,
}

impl Stability {
    pub fn name(self) -> &'static str {
        match self {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
            Stability::Degenerate => "degenerate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticRow<T> {
    pub mu: T,
    pub x: T,
    pub stability: Stability,
}

/// Equilibria of `ẋ = x(μ − x)` on a grid of `samples` values in
/// `[mu_min, mu_max]`: `x = 0` with derivative `μ` and `x = μ` with
/// derivative `−μ`.
pub fn logistic_reference<T: Scalar>(mu_min: T, mu_max: T, samples: usize) -> Vec<LogisticRow<T>> {
    let classify = |slope: T| {
        if slope < T::zero() {
            Stability::Stable
        } else if slope > T::zero() {
            Stability::Unstable
        } else {
            Stability::Degenerate
        }
    };
    let mus: Vec<T> = match samples {
        0 => Vec::new(),
        1 => vec![mu_min],
        _ => (0..samples)
            .map(|i| mu_min + (mu_max - mu_min) * T::lit(i as f64) / T::lit((samples - 1) as f64))
            .collect(),
    };
    let mut rows = Vec::new();
    for mu in mus {
        rows.push(LogisticRow {
            mu,
            x: T::zero(),
            stability: classify(mu),
        });
        if mu != T::zero() {
            rows.push(LogisticRow {
                mu,
                x: mu,
                stability: classify(-mu),
            });
        }
    }
    rows
}
