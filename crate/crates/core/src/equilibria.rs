//! Design and ancillary equilibria, gauge-fixed spectra, Poincaré–Hopf
//! indices, the equilibrium census and its stabilizability verdicts.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::dynamics::{builtin_law, DynamicsError, Eq1Sign, VectorFieldBundle};
use crate::graph::{FormationGraph, GraphError, TwoCyclesMap};
use crate::numkernel::{
    eigenvalues, fd_jacobian, newton_root, newton_root_with_jacobian, norm_inf, DenseMatrix, Lu, NewtonOptions,
    NumError, Spectrum,
};
use crate::rigidity::{is_parallel, two_cycles_realizations, Framework, RigidityError, TargetLengths, Vec2};
use crate::Scalar;

/// Largest `‖F_x‖∞` accepted for an equilibrium.
pub const EQ_TOL: f64 = 1e-9;

/// Eigenvalues with `|Re λ| ≤ TOL_ZERO · spectral radius` count as zero.
pub const TOL_ZERO: f64 = 1e-6;

/// Largest `|e_i|` of a design equilibrium.
pub const DESIGN_ERROR_TOL: f64 = 1e-8;

/// Relative tolerance of the parallelism test `|a × b| ≤ tol ‖a‖‖b‖`.
pub const PARALLEL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EquilibriaError {
    #[error("not an equilibrium: ‖F‖∞ = {residual:e}")]
    NotEquilibrium { residual: f64 },
    #[error("non-hyperbolic equilibrium (smallest |Re λ| = {min_abs_real:e}); use the bifurcation tools")]
    NonHyperbolic { min_abs_real: f64 },
    #[error("the gauge is undefined because edge 1 has zero length")]
    DegenerateGauge,
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Rigidity(#[from] RigidityError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Num(#[from] NumError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EquilibriumKind {
    Design,
    AncillaryAligned,
    AncillaryCollinear,
    AncillaryOther,
}

impl EquilibriumKind {
    pub fn name(self) -> &'static str {
        match self {
            EquilibriumKind::Design => "design",
            EquilibriumKind::AncillaryAligned => "ancillary_aligned",
            EquilibriumKind::AncillaryCollinear => "ancillary_collinear",
            EquilibriumKind::AncillaryOther => "ancillary_other",
        }
    }

    pub fn is_design(self) -> bool {
        self == EquilibriumKind::Design
    }
}

impl fmt::Display for EquilibriumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A classified equilibrium.
#[derive(Debug, Clone)]
pub struct EquilibriumRecord<T> {
    /// Model state: stacked positions in the canonical gauge for formations.
    pub state: Vec<T>,
    pub framework: Option<Framework<T>>,
    pub kind: EquilibriumKind,
    /// Spectrum of the reduced Jacobian (dimension `2n − 3` for formations).
    pub spectrum_gauge: Spectrum<T>,
    /// Poincaré–Hopf index, or 0 when the equilibrium is not hyperbolic.
    pub index: i8,
    pub stable: bool,
    pub residual: T,
}

impl<T: Scalar> EquilibriumRecord<T> {
    pub fn leading_real(&self) -> T {
        self.spectrum_gauge.leading_real()
    }

    pub fn is_hyperbolic(&self) -> bool {
        self.index != 0
    }
}

/// Stability and hyperbolicity of a reduced spectrum.
pub fn classify_spectrum<T: Scalar>(s: &Spectrum<T>) -> (bool, bool) {
    let radius = s.spectral_radius();
    if radius == T::zero() {
        return (false, false);
    }
    let tol = T::lit(TOL_ZERO) * radius;
    let stable = s.real_parts().iter().all(|r| *r < -tol);
    let hyperbolic = s.real_parts().iter().all(|r| r.abs() > tol);
    (stable, hyperbolic)
}

/// Slice of the configuration space transverse to the SE(2) orbits: the
/// origin of edge 0 is pinned at zero and the target of edge 0 on the x axis.
#[derive(Debug, Clone)]
pub struct GaugeSlice {
    n: usize,
    origin: usize,
    target: usize,
    free: Vec<usize>,
}

impl GaugeSlice {
    pub fn new(graph: &FormationGraph) -> Self {
        let (origin, target) = graph.edges()[0];
        let pinned = [2 * origin, 2 * origin + 1, 2 * target + 1];
        let free = (0..2 * graph.n()).filter(|i| !pinned.contains(i)).collect();
        Self {
            n: graph.n(),
            origin,
            target,
            free,
        }
    }

    /// Dimension `2n − 3`.
    pub fn dim(&self) -> usize {
        self.free.len()
    }

    pub fn free_indices(&self) -> &[usize] {
        &self.free
    }

    /// Slice coordinates to stacked positions.
    pub fn embed<T: Scalar>(&self, q: &[T]) -> Vec<T> {
        let mut x = vec![T::zero(); 2 * self.n];
        for (qi, &i) in q.iter().zip(&self.free) {
            x[i] = *qi;
        }
        x
    }

    /// Slice coordinates of stacked positions already in the gauge.
    pub fn project<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        self.free.iter().map(|&i| x[i]).collect()
    }

    /// `M = [C | T]`: slice coordinate directions followed by the two
    /// translations and the rotation about the origin.
    pub fn basis_matrix<T: Scalar>(&self, x: &[T]) -> DenseMatrix<T> {
        let dim = 2 * self.n;
        let k = self.dim();
        DenseMatrix::from_fn(dim, dim, |r, c| {
            if c < k {
                if self.free[c] == r {
                    T::one()
                } else {
                    T::zero()
                }
            } else {
                match (c - k, r % 2) {
                    (0, 0) | (1, 1) => T::one(),
                    (0, _) | (1, _) => T::zero(),
                    (_, 0) => -x[r + 1],
                    _ => x[r - 1],
                }
            }
        })
    }

    fn basis_lu<T: Scalar>(&self, x: &[T]) -> Result<Lu<T>, EquilibriaError> {
        let z0 = Vec2::new(x[2 * self.target] - x[2 * self.origin], x[2 * self.target + 1] - x[2 * self.origin + 1]);
        let scale = T::one().max(norm_inf(x));
        if z0.norm() <= T::lit(1e-9) * scale {
            return Err(EquilibriaError::DegenerateGauge);
        }
        let lu = Lu::new(&self.basis_matrix(x))?;
        if lu.is_singular() {
            return Err(EquilibriaError::DegenerateGauge);
        }
        Ok(lu)
    }

    /// Slice component of a velocity `v` at `x`, after removing its rigid
    /// motion part.
    pub fn reduce_vector<T: Scalar>(&self, x: &[T], v: &[T]) -> Result<Vec<T>, EquilibriaError> {
        let mut c = self.basis_lu(x)?.solve(v)?;
        c.truncate(self.dim());
        Ok(c)
    }

    /// Reduced Jacobian at an equilibrium `x` from the full Jacobian `j`.
    pub fn reduce_jacobian<T: Scalar>(&self, x: &[T], j: &DenseMatrix<T>) -> Result<DenseMatrix<T>, EquilibriaError> {
        let lu = self.basis_lu(x)?;
        let jc = j.select_cols(&self.free);
        let k = self.dim();
        let mut out = DenseMatrix::zeros(k, k);
        for c in 0..k {
            let y = lu.solve(&jc.column(c))?;
            for r in 0..k {
                out[(r, c)] = y[r];
            }
        }
        Ok(out)
    }
}

/// The up to four design frameworks of a 2-cycles graph in the canonical gauge.
pub fn design_frameworks<T: Scalar>(
    g: &FormationGraph,
    d: &TargetLengths<T>,
) -> Result<Vec<Framework<T>>, EquilibriaError> {
    let out = two_cycles_realizations(g, d)?;
    Ok(out)
}

fn check_equilibrium<T: Scalar>(b: &VectorFieldBundle<T>, x: &[T]) -> Result<T, EquilibriaError> {
    let residual = norm_inf(&b.eval_fx(x));
    if !(residual <= T::lit(EQ_TOL)) {
        return Err(EquilibriaError::NotEquilibrium {
            residual: residual.as_f64(),
        });
    }
    Ok(residual)
}

/// Reduced Jacobian of `b` at the equilibrium `f` (in its canonical gauge).
pub fn gauge_jacobian<T: Scalar>(b: &VectorFieldBundle<T>, f: &Framework<T>) -> Result<DenseMatrix<T>, EquilibriaError> {
    let x = f.canonical_gauge().to_flat();
    check_equilibrium(b, &x)?;
    let slice = GaugeSlice::new(b.graph());
    slice.reduce_jacobian(&x, &b.jacobian_x(&x))
}

/// Spectrum of the Jacobian on the gauge slice (`2n − 3` eigenvalues).
pub fn gauge_fixed_spectrum<T: Scalar>(b: &VectorFieldBundle<T>, f: &Framework<T>) -> Result<Spectrum<T>, EquilibriaError> {
    Ok(eigenvalues(&gauge_jacobian(b, f)?)?)
}

/// Sign of the determinant of the reduced Jacobian.
pub fn poincare_index<T: Scalar>(b: &VectorFieldBundle<T>, f: &Framework<T>) -> Result<i8, EquilibriaError> {
    let j = gauge_jacobian(b, f)?;
    index_of(&j, &eigenvalues(&j)?)
}

fn index_of<T: Scalar>(j: &DenseMatrix<T>, s: &Spectrum<T>) -> Result<i8, EquilibriaError> {
    let (_, hyperbolic) = classify_spectrum(s);
    if !hyperbolic {
        let min_abs_real = s.real_parts().iter().fold(f64::INFINITY, |m, r| m.min(r.abs().as_f64()));
        return Err(EquilibriaError::NonHyperbolic { min_abs_real });
    }
    let det = Lu::new(j)?.determinant();
    Ok(if det > T::zero() { 1 } else { -1 })
}

fn scale_of<T: Scalar>(b: &VectorFieldBundle<T>) -> T {
    b.lengths().plain_lengths().iter().fold(T::one(), |m, l| m.max(*l))
}

fn newton_tol<T: Scalar>(b: &VectorFieldBundle<T>) -> T {
    let l = scale_of(b);
    T::lit(1e-12) * l * l * l
}

/// Classifies an equilibrium of a 2-cycles-type formation.
pub fn equilibrium_kind<T: Scalar>(b: &VectorFieldBundle<T>, f: &Framework<T>) -> EquilibriumKind {
    let e = f.edge_errors(b.lengths()).unwrap_or_default();
    if e.iter().all(|v| v.abs() <= T::lit(DESIGN_ERROR_TOL)) {
        return EquilibriumKind::Design;
    }
    let z = f.edge_vectors().z;
    let tol = T::lit(PARALLEL_TOL);
    let nonzero: Vec<Vec2<T>> = z.iter().copied().filter(|v| v.norm() > T::zero()).collect();
    if nonzero.windows(2).all(|w| is_parallel(w[0], w[1], tol)) {
        return EquilibriumKind::AncillaryCollinear;
    }
    if let Ok(map) = TwoCyclesMap::find(b.graph()) {
        if is_parallel(z[map.edge[0]], z[map.edge[4]], tol) {
            return EquilibriumKind::AncillaryAligned;
        }
    }
    EquilibriumKind::AncillaryOther
}

/// Verifies and classifies a formation equilibrium.
pub fn formation_record<T: Scalar>(
    b: &VectorFieldBundle<T>,
    f: &Framework<T>,
) -> Result<EquilibriumRecord<T>, EquilibriaError> {
    let f = f.canonical_gauge();
    let x = f.to_flat();
    let residual = check_equilibrium(b, &x)?;
    let j = GaugeSlice::new(b.graph()).reduce_jacobian(&x, &b.jacobian_x(&x))?;
    let spectrum = eigenvalues(&j)?;
    let (stable, _) = classify_spectrum(&spectrum);
    let index = index_of(&j, &spectrum).unwrap_or(0);
    Ok(EquilibriumRecord {
        state: x,
        kind: equilibrium_kind(b, &f),
        framework: Some(f),
        spectrum_gauge: spectrum,
        index,
        stable,
        residual,
    })
}

/// An aligned equilibrium with the two angles that parametrize it.
#[derive(Debug, Clone)]
pub struct AlignedSolution<T> {
    /// Directions of `x₂ − x₃` and `x₄ − x₃` (canonical labels).
    pub angles: [T; 2],
    pub record: EquilibriumRecord<T>,
}

/// Solves `e₂ = e₃ = e₄ = 0` by construction and the force balance at the
/// two co-leader agent by Newton over the two free angles.
struct AlignedProblem<'a, T: Scalar> {
    b: &'a VectorFieldBundle<T>,
    map: TwoCyclesMap,
    l: [T; 5],
    /// Angles of the design frameworks that also satisfy `z₁ ∥ z₅`.
    aligned_designs: Vec<[T; 2]>,
}

/// Newton converges only linearly onto a design that is also aligned (the
/// two solution branches cross there); iterates this close in angle are
/// replaced by the exact design.
const DESIGN_SNAP: f64 = 1e-4;

impl<'a, T: Scalar> AlignedProblem<'a, T> {
    fn new(b: &'a VectorFieldBundle<T>) -> Result<Self, EquilibriaError> {
        let map = TwoCyclesMap::find(b.graph())?;
        let l = map.to_canonical_edges(&b.lengths().plain_lengths());
        let aligned_designs = match two_cycles_realizations(b.graph(), b.lengths()) {
            Ok(fs) => fs
                .iter()
                .filter(|f| {
                    let z = f.edge_vectors().z;
                    is_parallel(z[map.edge[0]], z[map.edge[4]], T::lit(PARALLEL_TOL))
                })
                .filter_map(|f| aligned_angles(f).ok())
                .collect(),
            Err(_) => Vec::new(),
        };
        Ok(Self {
            b,
            map,
            l,
            aligned_designs,
        })
    }

    fn snap(&self, t: [T; 2]) -> [T; 2] {
        let tau = T::two() * T::PI();
        let close = |a: T, c: T| {
            let d = (a - c) % tau;
            d.abs().min(tau - d.abs()) <= T::lit(DESIGN_SNAP)
        };
        self.aligned_designs
            .iter()
            .find(|d| close(t[0], d[0]) && close(t[1], d[1]))
            .copied()
            .unwrap_or(t)
    }

    fn positions(&self, t: &[T]) -> Vec<T> {
        let x1 = Vec2::zero();
        let x3 = Vec2::new(self.l[2], T::zero());
        let x2 = x3 + Vec2::new(t[0].cos(), t[0].sin()) * self.l[1];
        let x4 = x3 + Vec2::new(t[1].cos(), t[1].sin()) * self.l[3];
        let pts = self.map.from_canonical_vertices(&[x1, x2, x3, x4]);
        pts.iter().flat_map(|p| [p.x, p.y]).collect()
    }

    fn residual(&self, t: &[T]) -> Vec<T> {
        let v = self.map.vertex[0];
        let fx = self.b.eval_fx(&self.positions(t));
        vec![fx[2 * v], fx[2 * v + 1]]
    }

    fn solve(&self, seed: [T; 2]) -> Option<AlignedSolution<T>> {
        let opts = NewtonOptions {
            tol: newton_tol(self.b),
            ..NewtonOptions::default()
        };
        let rep = newton_root(|t: &[T]| self.residual(t), &seed, &opts).ok()?;
        let angles = self.snap([rep.x[0], rep.x[1]]);
        let x = self.positions(&angles);
        let f = Framework::from_flat(self.b.graph().clone(), &x).ok()?;
        let record = formation_record(self.b, &f).ok()?;
        let tau = T::two() * T::PI();
        let wrap = |a: T| {
            let r = a % tau;
            if r < T::zero() {
                r + tau
            } else {
                r
            }
        };
        Some(AlignedSolution {
            angles: [wrap(angles[0]), wrap(angles[1])],
            record,
        })
    }
}

/// Angles of a framework in the aligned-solver parametrization: directions of
/// `x₂ − x₃` and `x₄ − x₃` measured from the direction of `x₃ − x₁`
/// (canonical labels).
pub fn aligned_angles<T: Scalar>(f: &Framework<T>) -> Result<[T; 2], EquilibriaError> {
    let map = TwoCyclesMap::find(f.graph())?;
    let p = map.to_canonical_vertices(f.positions());
    let reference = p[2] - p[0];
    let base = reference.y.atan2(reference.x);
    let angle = |v: Vec2<T>| v.y.atan2(v.x) - base;
    Ok([angle(p[1] - p[2]), angle(p[3] - p[2])])
}

/// Newton from one pair of angles.
pub fn solve_aligned_from<T: Scalar>(
    b: &VectorFieldBundle<T>,
    angles: [T; 2],
) -> Result<Option<AlignedSolution<T>>, EquilibriaError> {
    Ok(AlignedProblem::new(b)?.solve(angles))
}

/// All aligned solutions reached from a `grid × grid` seed lattice of angles,
/// deduplicated in the canonical gauge and sorted by kind, leading real part
/// and angles. Designs reached by the solver are included with kind design.
pub fn solve_aligned_grid<T: Scalar>(
    b: &VectorFieldBundle<T>,
    grid: usize,
) -> Result<Vec<AlignedSolution<T>>, EquilibriaError> {
    let problem = AlignedProblem::new(b)?;
    let step = T::two() * T::PI() / T::lit(grid.max(1) as f64);
    let seeds: Vec<[T; 2]> = (0..grid * grid)
        .map(|k| [step * T::lit((k / grid) as f64), step * T::lit((k % grid) as f64)])
        .collect();
    let found: Vec<Option<AlignedSolution<T>>> = seeds.par_iter().map(|s| problem.solve(*s)).collect();
    let tol = T::lit(1e-6) * scale_of(b);
    let mut out: Vec<AlignedSolution<T>> = Vec::new();
    for s in found.into_iter().flatten() {
        if !out.iter().any(|o| same_framework(&o.record, &s.record, tol)) {
            out.push(s);
        }
    }
    out.sort_by(|a, c| record_order(&a.record, &c.record));
    Ok(out)
}

/// Aligned ancillary candidates on a 12 × 12 angle grid (see [`solve_aligned_grid`]).
pub fn solve_ancillary_aligned<T: Scalar>(b: &VectorFieldBundle<T>) -> Result<Vec<EquilibriumRecord<T>>, EquilibriaError> {
    Ok(solve_aligned_grid(b, 12)?.into_iter().map(|s| s.record).collect())
}

fn same_framework<T: Scalar>(a: &EquilibriumRecord<T>, b: &EquilibriumRecord<T>, tol: T) -> bool {
    a.state.len() == b.state.len() && a.state.iter().zip(&b.state).all(|(p, q)| (*p - *q).abs() <= tol)
}

fn record_order<T: Scalar>(a: &EquilibriumRecord<T>, b: &EquilibriumRecord<T>) -> std::cmp::Ordering {
    a.kind
        .cmp(&b.kind)
        .then(a.leading_real().partial_cmp(&b.leading_real()).unwrap_or(std::cmp::Ordering::Equal))
        .then_with(|| {
            for (p, q) in a.state.iter().zip(&b.state) {
                match p.partial_cmp(q) {
                    Some(std::cmp::Ordering::Equal) | None => continue,
                    Some(o) => return o,
                }
            }
            std::cmp::Ordering::Equal
        })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CensusOptions {
    /// Aligned-solver seeds per angle.
    pub grid: usize,
    /// Random seeds in a square of side `4 · max length`.
    pub n_random: usize,
    /// Random collinear seeds.
    pub n_collinear: usize,
    /// Absolute coordinate tolerance (times the length scale) for merging.
    pub dedupe_tol: f64,
    pub seed: u64,
}

impl Default for CensusOptions {
    fn default() -> Self {
        Self {
            grid: 12,
            n_random: 200,
            n_collinear: 20,
            dedupe_tol: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CensusReport<T> {
    /// Deduplicated records, sorted by kind, leading real part and state.
    pub records: Vec<EquilibriumRecord<T>>,
    /// Some design equilibrium exists.
    pub feasible: bool,
    /// Every stable record is a design equilibrium.
    pub almost_surely_stable: bool,
    /// Sum of the indices of the hyperbolic records.
    pub index_sum: i64,
    pub seeds_tried: usize,
    /// Seeds whose Newton run failed or ended at a degenerate point.
    pub seeds_dropped: usize,
}

impl<T: Scalar> CensusReport<T> {
    pub fn count(&self, kind: EquilibriumKind) -> usize {
        self.records.iter().filter(|r| r.kind == kind).count()
    }

    pub fn stable_records(&self) -> impl Iterator<Item = &EquilibriumRecord<T>> {
        self.records.iter().filter(|r| r.stable)
    }
}

/// A dynamical system whose equilibria can be enumerated by [`census_model`].
pub trait SystemModel<T: Scalar>: Sync {
    fn state_dim(&self) -> usize;

    /// Vanishes exactly at equilibria.
    fn residual(&self, x: &[T]) -> Vec<T>;

    fn residual_jacobian(&self, x: &[T]) -> DenseMatrix<T> {
        fd_jacobian(|p: &[T]| self.residual(p), x, T::lit(1e-6))
    }

    fn newton_tol(&self) -> T {
        T::lit(1e-12)
    }

    fn seeds(&self, opts: &CensusOptions, rng: &mut ChaCha8Rng) -> Vec<Vec<T>>;

    /// Verified, classified record; `None` drops the point.
    fn record(&self, x: &[T]) -> Option<EquilibriumRecord<T>>;

    /// Coordinate tolerance used when merging records.
    fn dedupe_tol(&self, opts: &CensusOptions) -> T {
        T::lit(opts.dedupe_tol)
    }
}

/// Seeds Newton from every model seed in parallel, then merges and sorts.
pub fn census_model<T: Scalar, M: SystemModel<T>>(model: &M, opts: &CensusOptions) -> CensusReport<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let seeds = model.seeds(opts, &mut rng);
    let newton = NewtonOptions {
        tol: model.newton_tol(),
        ..NewtonOptions::default()
    };
    let found: Vec<Option<EquilibriumRecord<T>>> = seeds
        .par_iter()
        .map(|s| {
            let rep = newton_root_with_jacobian(
                |x: &[T]| model.residual(x),
                |x: &[T]| model.residual_jacobian(x),
                s,
                &newton,
            )
            .ok()?;
            model.record(&rep.x)
        })
        .collect();
    let tol = model.dedupe_tol(opts);
    let mut records: Vec<EquilibriumRecord<T>> = Vec::new();
    let mut dropped = 0;
    for r in found {
        match r {
            Some(r) => {
                if !records.iter().any(|o| same_framework(o, &r, tol)) {
                    records.push(r);
                }
            }
            None => dropped += 1,
        }
    }
    records.sort_by(record_order);
    let feasible = records.iter().any(|r| r.kind.is_design());
    let almost_surely_stable = records.iter().filter(|r| r.stable).all(|r| r.kind.is_design());
    let index_sum = records.iter().map(|r| r.index as i64).sum();
    CensusReport {
        records,
        feasible,
        almost_surely_stable,
        index_sum,
        seeds_tried: seeds.len(),
        seeds_dropped: dropped,
    }
}

/// A formation seen as a [`SystemModel`] on stacked positions.
pub struct FormationModel<'a, T: Scalar> {
    b: &'a VectorFieldBundle<T>,
}

impl<'a, T: Scalar> FormationModel<'a, T> {
    pub fn new(b: &'a VectorFieldBundle<T>) -> Self {
        Self { b }
    }
}

impl<T: Scalar> SystemModel<T> for FormationModel<'_, T> {
    fn state_dim(&self) -> usize {
        2 * self.b.graph().n()
    }

    fn residual(&self, x: &[T]) -> Vec<T> {
        self.b.eval_fx(x)
    }

    fn residual_jacobian(&self, x: &[T]) -> DenseMatrix<T> {
        self.b.jacobian_x(x)
    }

    fn newton_tol(&self) -> T {
        newton_tol(self.b)
    }

    fn seeds(&self, opts: &CensusOptions, rng: &mut ChaCha8Rng) -> Vec<Vec<T>> {
        let n = self.b.graph().n();
        let half = 2.0 * scale_of(self.b).as_f64();
        let mut out = Vec::new();
        if let Ok(designs) = design_frameworks(self.b.graph(), self.b.lengths()) {
            out.extend(designs.iter().map(|f| f.to_flat()));
        }
        if let Ok(aligned) = solve_aligned_grid(self.b, opts.grid) {
            out.extend(aligned.into_iter().map(|s| s.record.state));
        }
        for _ in 0..opts.n_collinear {
            out.push(
                (0..2 * n)
                    .map(|i| if i % 2 == 0 { T::lit(rng.gen_range(-half..half)) } else { T::zero() })
                    .collect(),
            );
        }
        for _ in 0..opts.n_random {
            out.push((0..2 * n).map(|_| T::lit(rng.gen_range(-half..half))).collect());
        }
        out
    }

    fn record(&self, x: &[T]) -> Option<EquilibriumRecord<T>> {
        let f = Framework::from_flat(self.b.graph().clone(), x).ok()?;
        formation_record(self.b, &f).ok()
    }

    fn dedupe_tol(&self, opts: &CensusOptions) -> T {
        T::lit(opts.dedupe_tol) * scale_of(self.b)
    }
}

/// Census of a formation: design constructors, the aligned solver, collinear
/// and random seeds, polished by Newton and merged modulo SE(2).
pub fn census<T: Scalar>(b: &VectorFieldBundle<T>, opts: &CensusOptions) -> CensusReport<T> {
    census_model(&FormationModel::new(b), opts)
}

/// `ẋ = x(1 − k x²)` with a chosen design set.
#[derive(Debug, Clone)]
pub struct ScalarDemo<T> {
    pub k: T,
    pub design: Vec<T>,
}

impl<T: Scalar> ScalarDemo<T> {
    pub fn field(&self, x: T) -> T {
        x * (T::one() - self.k * x * x)
    }

    pub fn derivative(&self, x: T) -> T {
        T::one() - T::lit(3.0) * self.k * x * x
    }
}

impl<T: Scalar> SystemModel<T> for ScalarDemo<T> {
    fn state_dim(&self) -> usize {
        1
    }

    fn residual(&self, x: &[T]) -> Vec<T> {
        vec![self.field(x[0])]
    }

    fn residual_jacobian(&self, x: &[T]) -> DenseMatrix<T> {
        DenseMatrix::from_fn(1, 1, |_, _| self.derivative(x[0]))
    }

    fn seeds(&self, opts: &CensusOptions, rng: &mut ChaCha8Rng) -> Vec<Vec<T>> {
        let half = 2.0 / self.k.as_f64().sqrt();
        let grid = opts.grid.max(2);
        let mut out: Vec<Vec<T>> = (0..=grid)
            .map(|i| vec![T::lit(-half + 2.0 * half * i as f64 / grid as f64)])
            .collect();
        out.extend((0..opts.n_random).map(|_| vec![T::lit(rng.gen_range(-half..half))]));
        out
    }

    fn record(&self, x: &[T]) -> Option<EquilibriumRecord<T>> {
        let residual = self.field(x[0]).abs();
        if !(residual <= T::lit(EQ_TOL)) {
            return None;
        }
        let j = DenseMatrix::from_fn(1, 1, |_, _| self.derivative(x[0]));
        let spectrum = eigenvalues(&j).ok()?;
        let (stable, _) = classify_spectrum(&spectrum);
        let design = self.design.iter().any(|d| (*d - x[0]).abs() <= T::lit(1e-8));
        Some(EquilibriumRecord {
            state: x.to_vec(),
            framework: None,
            kind: if design {
                EquilibriumKind::Design
            } else {
                EquilibriumKind::AncillaryOther
            },
            index: index_of(&j, &spectrum).unwrap_or(0),
            spectrum_gauge: spectrum,
            stable,
            residual,
        })
    }
}

/// Eigenvalues as `(re, im)` pairs.
pub type EigenTuple = Vec<(f64, f64)>;

/// Reference spectra to match against.
#[derive(Debug, Clone, PartialEq)]
pub struct PublishedSpectra {
    pub d1: EigenTuple,
    pub d2: EigenTuple,
    pub a1: EigenTuple,
}

impl PublishedSpectra {
    /// The three 5-tuples reported for the gradient 2-cycles example.
    pub fn fig2() -> Self {
        Self {
            d1: vec![(-17.5, 1.3), (-17.5, -1.3), (-11.9, 0.0), (-7.9, 0.0), (-0.6, 0.0)],
            d2: vec![(0.6, 0.0), (-18.6, 3.0), (-18.6, -3.0), (-9.4, 3.1), (-9.4, -3.1)],
            a1: vec![(-23.4, 4.8), (-23.4, -4.8), (-11.0, 2.8), (-11.0, -2.8), (-1.6, 0.0)],
        }
    }
}

/// Lengths of the example as printed.
pub const FIG2_LENGTHS: [f64; 5] = [2.0, 2.6, 2.0, 1.4, 3.3];

/// Error functions a reading of the example could use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConventionLaw {
    /// `e = ‖z‖² − L²` with the values read as plain lengths.
    SquaredOfPlain,
    /// `e = ‖z‖ − L`.
    Plain,
    /// `e = ‖z‖² − d` with the values read as squared lengths.
    ValuesAsSquared,
    Eq1Printed,
    Eq1Corrected,
}

/// Assignment of the last two values to edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LengthOrder {
    AsPrinted,
    /// Values 4 and 5 exchanged.
    TailSwapped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ConventionId {
    pub law: ConventionLaw,
    pub order: LengthOrder,
}

impl ConventionId {
    pub fn all() -> Vec<Self> {
        let laws = [
            ConventionLaw::SquaredOfPlain,
            ConventionLaw::Plain,
            ConventionLaw::ValuesAsSquared,
            ConventionLaw::Eq1Printed,
            ConventionLaw::Eq1Corrected,
        ];
        let mut out = Vec::new();
        for order in [LengthOrder::AsPrinted, LengthOrder::TailSwapped] {
            for law in laws {
                out.push(Self { law, order });
            }
        }
        out
    }

    pub fn name(&self) -> String {
        let law = match self.law {
            ConventionLaw::SquaredOfPlain => "squared_of_plain",
            ConventionLaw::Plain => "plain",
            ConventionLaw::ValuesAsSquared => "values_as_squared",
            ConventionLaw::Eq1Printed => "eq1_printed",
            ConventionLaw::Eq1Corrected => "eq1_corrected",
        };
        let order = match self.order {
            LengthOrder::AsPrinted => "as_printed",
            LengthOrder::TailSwapped => "tail_swapped",
        };
        format!("{law}/{order}")
    }

    /// Unit-gain bundle on the canonical 2-cycles for the given values.
    pub fn bundle(&self, values: &[f64; 5]) -> Result<VectorFieldBundle<f64>, EquilibriaError> {
        let mut v = *values;
        if self.order == LengthOrder::TailSwapped {
            v.swap(3, 4);
        }
        let g = FormationGraph::two_cycles();
        let b = match self.law {
            ConventionLaw::SquaredOfPlain => VectorFieldBundle::with_builtin(
                g,
                TargetLengths::squared(v.iter().map(|l| l * l).collect())?,
                builtin_law("gradient_squared", 1.0, None)?,
            )?,
            ConventionLaw::ValuesAsSquared => VectorFieldBundle::with_builtin(
                g,
                TargetLengths::squared(v.to_vec())?,
                builtin_law("gradient_squared", 1.0, None)?,
            )?,
            ConventionLaw::Plain => VectorFieldBundle::with_builtin(
                g,
                TargetLengths::plain(v.to_vec())?,
                builtin_law("gradient_plain", 1.0, None)?,
            )?,
            ConventionLaw::Eq1Printed | ConventionLaw::Eq1Corrected => {
                let sign = if self.law == ConventionLaw::Eq1Printed {
                    Eq1Sign::Printed
                } else {
                    Eq1Sign::Corrected
                };
                VectorFieldBundle::with_builtin(
                    g,
                    TargetLengths::plain(v.to_vec())?,
                    builtin_law("eq1_plain", 1.0, Some(sign))?,
                )?
            }
        };
        Ok(b)
    }
}

impl fmt::Display for ConventionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Best multiset matching of `computed` onto `published` (same length),
/// minimizing the largest absolute deviation. Returns the deviation of each
/// published value under that matching.
pub fn match_spectra(computed: &[(f64, f64)], published: &[(f64, f64)]) -> Option<Vec<f64>> {
    if computed.len() != published.len() {
        return None;
    }
    let n = computed.len();
    let dist = |i: usize, j: usize| {
        let (a, b) = (computed[i], published[j]);
        ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut perm: Vec<usize> = (0..n).collect();
    permute(&mut perm, 0, &mut |p| {
        let devs: Vec<f64> = (0..n).map(|j| dist(p[j], j)).collect();
        let worst = devs.iter().cloned().fold(0.0, f64::max);
        if best.as_ref().is_none_or(|(w, _)| worst < *w) {
            best = Some((worst, devs));
        }
    });
    best.map(|(_, d)| d)
}

fn permute(p: &mut Vec<usize>, k: usize, visit: &mut dyn FnMut(&[usize])) {
    if k == p.len() {
        visit(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, visit);
        p.swap(k, i);
    }
}

/// Best candidate for one published tuple.
#[derive(Debug, Clone)]
pub struct CandidateMatch {
    pub label: &'static str,
    pub framework: Framework<f64>,
    pub spectrum: Spectrum<f64>,
    /// Deviation per published eigenvalue, in published order.
    pub deviations: Vec<f64>,
    pub max_deviation: f64,
    /// The candidate has the stability character of the published tuple.
    pub character_ok: bool,
}

#[derive(Debug, Clone)]
pub struct ConventionScore {
    pub id: ConventionId,
    pub d1: Option<CandidateMatch>,
    pub d2: Option<CandidateMatch>,
    pub a1: Option<CandidateMatch>,
    /// Largest deviation over the three tuples (infinite if one is missing).
    pub max_deviation: f64,
    /// Stable D1, exactly one unstable eigenvalue at D2, stable A1.
    pub qualitative: bool,
}

#[derive(Debug, Clone)]
pub struct ConventionReport {
    /// All conventions, best first.
    pub scores: Vec<ConventionScore>,
    pub tolerance: f64,
}

impl ConventionReport {
    pub fn best(&self) -> &ConventionScore {
        &self.scores[0]
    }

    pub fn quantitative_match(&self) -> bool {
        self.best().max_deviation <= self.tolerance
    }

    pub fn qualitative_match(&self) -> bool {
        self.best().qualitative
    }
}

fn best_candidate(
    label: &'static str,
    records: &[&EquilibriumRecord<f64>],
    published: &[(f64, f64)],
    character: impl Fn(&Spectrum<f64>) -> bool,
) -> Option<CandidateMatch> {
    let mut all: Vec<CandidateMatch> = records
        .iter()
        .filter_map(|r| {
            let deviations = match_spectra(&r.spectrum_gauge.to_f64_pairs(), published)?;
            let max_deviation = deviations.iter().cloned().fold(0.0, f64::max);
            Some(CandidateMatch {
                label,
                framework: r.framework.clone()?,
                character_ok: character(&r.spectrum_gauge),
                spectrum: r.spectrum_gauge.clone(),
                deviations,
                max_deviation,
            })
        })
        .collect();
    all.sort_by(|a, b| {
        b.character_ok
            .cmp(&a.character_ok)
            .then(a.max_deviation.total_cmp(&b.max_deviation))
    });
    all.into_iter().next()
}

fn stable_character(s: &Spectrum<f64>) -> bool {
    classify_spectrum(s).0
}

fn one_unstable_character(s: &Spectrum<f64>) -> bool {
    let tol = TOL_ZERO * s.spectral_radius();
    s.count_positive(tol) == 1 && s.count_negative(tol) == s.len() - 1
}

/// Scores one convention against the published tuples.
pub fn score_convention(id: ConventionId, values: &[f64; 5], published: &PublishedSpectra) -> ConventionScore {
    let empty = ConventionScore {
        id,
        d1: None,
        d2: None,
        a1: None,
        max_deviation: f64::INFINITY,
        qualitative: false,
    };
    let Ok(b) = id.bundle(values) else { return empty };
    let designs: Vec<EquilibriumRecord<f64>> = match design_frameworks(b.graph(), b.lengths()) {
        Ok(fs) => fs.iter().filter_map(|f| formation_record(&b, f).ok()).collect(),
        Err(_) => return empty,
    };
    let aligned: Vec<EquilibriumRecord<f64>> = solve_aligned_grid(&b, 12)
        .map(|v| v.into_iter().map(|s| s.record).filter(|r| !r.kind.is_design()).collect())
        .unwrap_or_default();
    let design_refs: Vec<&EquilibriumRecord<f64>> = designs.iter().collect();
    let aligned_refs: Vec<&EquilibriumRecord<f64>> = aligned.iter().collect();
    let d1 = best_candidate("D1", &design_refs, &published.d1, stable_character);
    let d2 = best_candidate("D2", &design_refs, &published.d2, one_unstable_character);
    let a1 = best_candidate("A1", &aligned_refs, &published.a1, stable_character);
    let parts = [&d1, &d2, &a1];
    let max_deviation = parts
        .iter()
        .map(|c| c.as_ref().map_or(f64::INFINITY, |c| c.max_deviation))
        .fold(0.0, f64::max);
    let qualitative = parts.iter().all(|c| c.as_ref().is_some_and(|c| c.character_ok));
    ConventionScore {
        id,
        d1,
        d2,
        a1,
        max_deviation,
        qualitative,
    }
}

/// Evaluates every candidate reading of the example and ranks them:
/// conventions reproducing the stability character first, then by the
/// largest eigenvalue deviation.
pub fn identify_convention(values: &[f64; 5], published: &PublishedSpectra) -> ConventionReport {
    let mut scores: Vec<ConventionScore> = ConventionId::all()
        .into_par_iter()
        .map(|id| score_convention(id, values, published))
        .collect();
    scores.sort_by(|a, b| {
        b.qualitative
            .cmp(&a.qualitative)
            .then(a.max_deviation.total_cmp(&b.max_deviation))
    });
    ConventionReport {
        scores,
        tolerance: 0.15,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bundle(d: Vec<f64>) -> VectorFieldBundle<f64> {
        VectorFieldBundle::with_builtin(
            FormationGraph::two_cycles(),
            TargetLengths::squared(d).unwrap(),
            builtin_law("gradient_squared", 1.0, None).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn gauge_spectrum_drops_three_structural_zeros() {
        let b = bundle(vec![1.0, 5.0, 4.0, 3.0, 2.0]);
        for f in design_frameworks(b.graph(), b.lengths()).unwrap() {
            let full = eigenvalues(&b.jacobian_x(&f.to_flat())).unwrap();
            let gauge = gauge_fixed_spectrum(&b, &f).unwrap();
            assert_eq!(gauge.len(), 5);
            let tol = TOL_ZERO * full.spectral_radius();
            assert_eq!(full.count_zero(tol), 3 + gauge.count_zero(tol));
            let mut rest = full.nonzero(tol).real_parts();
            let mut g = gauge.real_parts();
            rest.sort_by(f64::total_cmp);
            g.sort_by(f64::total_cmp);
            for (a, c) in rest.iter().zip(&g) {
                assert!((a - c).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn non_equilibrium_is_rejected() {
        let b = bundle(vec![1.0, 5.0, 4.0, 3.0, 2.0]);
        let f = Framework::from_flat(b.graph().clone(), &[0.0, 0.0, 1.0, 0.2, 0.3, 1.0, -1.0, 0.4]).unwrap();
        assert!(matches!(gauge_fixed_spectrum(&b, &f), Err(EquilibriaError::NotEquilibrium { .. })));
    }

    #[test]
    fn spectrum_matching_is_permutation_invariant() {
        let p = PublishedSpectra::fig2();
        let mut c = p.d1.clone();
        c.reverse();
        let d = match_spectra(&c, &p.d1).unwrap();
        assert!(d.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn scalar_demo_taxonomy() {
        let demo = ScalarDemo { k: 1.0, design: vec![1.0] };
        let rep = census_model(&demo, &CensusOptions::default());
        let xs: Vec<f64> = rep.records.iter().map(|r| r.state[0]).collect();
        assert_eq!(xs.len(), 3);
        assert!(rep.feasible && !rep.almost_surely_stable);
    }
}
