//! Frameworks, edge vectors, rigidity matrices and the feasible and singular
//! length sets of the 2-cycles formation.
//!
//! Positions are stacked as `[x₁ₓ, x₁ᵧ, x₂ₓ, …]`, which is the ordering that
//! makes `z = (A_m ⊗ I₂) x`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

use crate::graph::{FormationGraph, GraphError, TwoCyclesMap};
use crate::numkernel::{rank_tol, DenseMatrix, NumError};
use crate::Scalar;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum RigidityError {
    #[error("framework has {got} points but the graph has {expected} vertices")]
    PointCount { expected: usize, got: usize },
    #[error("framework coordinates must be finite")]
    NonFinite,
    #[error("{got} target lengths given for {expected} edges")]
    LengthCount { expected: usize, got: usize },
    #[error("target length {index} is {value}, lengths must be positive")]
    NonPositiveLength { index: usize, value: f64 },
    #[error("lengths {lengths:?} violate the strict triangle inequality on triangle ({}, {}, {})", .triangle[0], .triangle[1], .triangle[2])]
    Infeasible { triangle: [usize; 3], lengths: [f64; 3] },
    #[error("signed length of the fifth edge must be non-zero")]
    ZeroSignedLength,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Num(#[from] NumError),
}

/// A point or vector in the plane.
#[derive(Clone, Copy, PartialEq, Default)]
pub struct Vec2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Vec2<T> {
    #[inline]
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y
    }

    /// Planar cross product `x₁y₂ − y₁x₂`.
    #[inline]
    pub fn cross(self, o: Self) -> T {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm_sq(self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    /// Counter-clockwise rotation by `theta`.
    #[inline]
    pub fn rotate(self, theta: T) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    /// Rotation by a quarter turn counter-clockwise.
    #[inline]
    pub fn perp(self) -> Self {
        Self::new(-self.y, self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl<T: Scalar> Add for Vec2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl<T: Scalar> Sub for Vec2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl<T: Scalar> Neg for Vec2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

impl<T: Scalar> Mul<T> for Vec2<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s)
    }
}

impl<T: fmt::Debug> fmt::Debug for Vec2<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?}, {:?})", self.x, self.y)
    }
}

/// Agent positions attached to a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Framework<T> {
    graph: FormationGraph,
    x: Vec<Vec2<T>>,
}

impl<T: Scalar> Framework<T> {
    pub fn new(graph: FormationGraph, x: Vec<Vec2<T>>) -> Result<Self, RigidityError> {
        if x.len() != graph.n() {
            return Err(RigidityError::PointCount {
                expected: graph.n(),
                got: x.len(),
            });
        }
        if x.iter().any(|p| !p.is_finite()) {
            return Err(RigidityError::NonFinite);
        }
        Ok(Self { graph, x })
    }

    /// Builds a framework from stacked coordinates `[x₁ₓ, x₁ᵧ, …]`.
    pub fn from_flat(graph: FormationGraph, flat: &[T]) -> Result<Self, RigidityError> {
        if flat.len() != 2 * graph.n() {
            return Err(RigidityError::PointCount {
                expected: graph.n(),
                got: flat.len() / 2,
            });
        }
        let x = flat.chunks(2).map(|c| Vec2::new(c[0], c[1])).collect();
        Self::new(graph, x)
    }

    pub fn graph(&self) -> &FormationGraph {
        &self.graph
    }

    pub fn positions(&self) -> &[Vec2<T>] {
        &self.x
    }

    pub fn to_flat(&self) -> Vec<T> {
        self.x.iter().flat_map(|p| [p.x, p.y]).collect()
    }

    pub fn edge_vectors(&self) -> EdgeVectors<T> {
        EdgeVectors {
            z: self
                .graph
                .edges()
                .iter()
                .map(|&(o, t)| self.x[t] - self.x[o])
                .collect(),
        }
    }

    /// `e_i = ‖z_i‖² − d_i` (squared) or `‖z_i‖ − d_i` (plain).
    pub fn edge_errors(&self, d: &TargetLengths<T>) -> Result<Vec<T>, RigidityError> {
        d.check_edge_count(self.graph.m())?;
        Ok(self
            .edge_vectors()
            .z
            .iter()
            .zip(d.values())
            .map(|(z, di)| match d.convention() {
                LengthConvention::Squared => z.norm_sq() - *di,
                LengthConvention::Plain => z.norm() - *di,
            })
            .collect())
    }

    /// `R = D(z) (A_m ⊗ I₂)`: row `i` holds `−zᵢᵀ` in the origin block and
    /// `zᵢᵀ` in the target block.
    pub fn rigidity_matrix(&self) -> DenseMatrix<T> {
        let z = self.edge_vectors().z;
        let mut r = DenseMatrix::zeros(self.graph.m(), 2 * self.graph.n());
        for (i, &(o, t)) in self.graph.edges().iter().enumerate() {
            r[(i, 2 * o)] = -z[i].x;
            r[(i, 2 * o + 1)] = -z[i].y;
            r[(i, 2 * t)] = z[i].x;
            r[(i, 2 * t + 1)] = z[i].y;
        }
        r
    }

    pub fn rigidity_rank(&self, tol: T) -> Result<usize, RigidityError> {
        Ok(rank_tol(&self.rigidity_matrix(), tol)?)
    }

    /// True iff the rigidity matrix has rank `2n − 3`.
    pub fn is_infinitesimally_rigid(&self, tol: T) -> Result<bool, RigidityError> {
        let n = self.graph.n();
        if n < 2 {
            return Ok(true);
        }
        Ok(self.rigidity_rank(tol)? == 2 * n - 3)
    }

    /// True iff the framework is infinitesimally rigid and loses that property
    /// when any single edge is removed.
    pub fn is_minimally_rigid(&self, tol: T) -> Result<bool, RigidityError> {
        if !self.is_infinitesimally_rigid(tol)? {
            return Ok(false);
        }
        let r = self.rigidity_matrix();
        let target = 2 * self.graph.n() - 3;
        for drop in 0..self.graph.m() {
            let keep: Vec<usize> = (0..self.graph.m()).filter(|&k| k != drop).collect();
            if rank_tol(&r.select_rows(&keep), tol)? == target {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Applies `x ↦ R(theta) x + t` to every agent.
    pub fn transformed(&self, theta: T, t: Vec2<T>) -> Self {
        Self {
            graph: self.graph.clone(),
            x: self.x.iter().map(|p| p.rotate(theta) + t).collect(),
        }
    }

    /// Reflection across the horizontal axis.
    pub fn mirrored(&self) -> Self {
        Self {
            graph: self.graph.clone(),
            x: self.x.iter().map(|p| Vec2::new(p.x, -p.y)).collect(),
        }
    }

    /// Representative of the SE(2) orbit: the origin of edge 0 sits at the
    /// origin and edge 0 points along +x. Frameworks whose edge 0 vanishes
    /// are only translated.
    pub fn canonical_gauge(&self) -> Self {
        if self.graph.m() == 0 {
            return self.clone();
        }
        let (o, t) = self.graph.edges()[0];
        let z = self.x[t] - self.x[o];
        let theta = if z.norm() > T::zero() { -z.y.atan2(z.x) } else { T::zero() };
        let shift = self.x[o];
        Self {
            graph: self.graph.clone(),
            x: self.x.iter().map(|p| (*p - shift).rotate(theta)).collect(),
        }
    }

    /// Largest coordinate difference to `other`.
    pub fn max_distance(&self, other: &Self) -> T {
        self.x
            .iter()
            .zip(&other.x)
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).norm()))
    }
}

/// Edge vectors `z_i = x(target) − x(origin)` in edge order.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeVectors<T> {
    pub z: Vec<Vec2<T>>,
}

impl<T: Scalar> EdgeVectors<T> {
    pub fn from_flat(flat: &[T]) -> Self {
        Self {
            z: flat.chunks(2).map(|c| Vec2::new(c[0], c[1])).collect(),
        }
    }

    pub fn to_flat(&self) -> Vec<T> {
        self.z.iter().flat_map(|p| [p.x, p.y]).collect()
    }

    /// Block-diagonal `m × 2m` matrix with `zᵢᵀ` in block `i`.
    pub fn dz(&self) -> DenseMatrix<T> {
        block_diag_rows(&self.z)
    }
}

/// Block-diagonal `m × 2m` matrix with `vᵢᵀ` in block `i`.
pub fn block_diag_rows<T: Scalar>(v: &[Vec2<T>]) -> DenseMatrix<T> {
    let mut d = DenseMatrix::zeros(v.len(), 2 * v.len());
    for (i, p) in v.iter().enumerate() {
        d[(i, 2 * i)] = p.x;
        d[(i, 2 * i + 1)] = p.y;
    }
    d
}

/// How target values and edge errors are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LengthConvention {
    /// Values are squared lengths; `e = ‖z‖² − d`.
    Squared,
    /// Values are plain lengths; `e = ‖z‖ − d`.
    Plain,
}

impl LengthConvention {
    pub fn name(self) -> &'static str {
        match self {
            LengthConvention::Squared => "squared",
            LengthConvention::Plain => "plain",
        }
    }
}

/// Target edge lengths with the convention used to form errors.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetLengths<T> {
    values: Vec<T>,
    convention: LengthConvention,
}

impl<T: Scalar> TargetLengths<T> {
    pub fn new(values: Vec<T>, convention: LengthConvention) -> Result<Self, RigidityError> {
        for (i, v) in values.iter().enumerate() {
            if !(*v > T::zero()) || !v.is_finite() {
                return Err(RigidityError::NonPositiveLength {
                    index: i + 1,
                    value: v.as_f64(),
                });
            }
        }
        Ok(Self { values, convention })
    }

    pub fn squared(values: Vec<T>) -> Result<Self, RigidityError> {
        Self::new(values, LengthConvention::Squared)
    }

    pub fn plain(values: Vec<T>) -> Result<Self, RigidityError> {
        Self::new(values, LengthConvention::Plain)
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn convention(&self) -> LengthConvention {
        self.convention
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Euclidean edge lengths regardless of the convention.
    pub fn plain_lengths(&self) -> Vec<T> {
        match self.convention {
            LengthConvention::Squared => self.values.iter().map(|v| v.sqrt()).collect(),
            LengthConvention::Plain => self.values.clone(),
        }
    }

    /// Squared edge lengths regardless of the convention.
    pub fn squared_lengths(&self) -> Vec<T> {
        match self.convention {
            LengthConvention::Squared => self.values.clone(),
            LengthConvention::Plain => self.values.iter().map(|v| *v * *v).collect(),
        }
    }

    /// Same geometry expressed in the other convention.
    pub fn with_convention(&self, convention: LengthConvention) -> Self {
        let values = match convention {
            LengthConvention::Squared => self.squared_lengths(),
            LengthConvention::Plain => self.plain_lengths(),
        };
        Self { values, convention }
    }

    /// Copy with `delta` added to value `index`.
    pub fn perturbed(&self, index: usize, delta: T) -> Result<Self, RigidityError> {
        let mut values = self.values.clone();
        values[index] += delta;
        Self::new(values, self.convention)
    }

    pub(crate) fn check_edge_count(&self, m: usize) -> Result<(), RigidityError> {
        if self.values.len() != m {
            return Err(RigidityError::LengthCount {
                expected: m,
                got: self.values.len(),
            });
        }
        Ok(())
    }
}

/// Orientation of the two triangles of a 2-cycles realization: the side of
/// `x₃` relative to the ray `x₁→x₂`, and of `x₄` relative to `x₁→x₃`.
pub const REALIZATION_SIDES: [(i8, i8); 4] = [(1, 1), (1, -1), (-1, 1), (-1, -1)];

/// Closed-form realization of the 2-cycles in the canonical gauge.
///
/// `x₁ = 0`, `x₂` on the positive x-axis, `x₃` on side `s3` of the line
/// `x₁x₂`, and `x₄` on side `s4` of the line `x₁x₃`. Lengths are plain and in
/// canonical edge order.
pub fn realize_two_cycles<T: Scalar>(l: &[T; 5], s3: i8, s4: i8) -> Result<[Vec2<T>; 4], RigidityError> {
    let [l1, l2, l3, l4, l5] = *l;
    check_triangle([1, 2, 3], [l1, l2, l3])?;
    check_triangle([1, 3, 4], [l3, l4, l5])?;
    let x1 = Vec2::zero();
    let x2 = Vec2::new(l1, T::zero());
    let (a, h) = intersect(l1, l3, l2);
    let x3 = Vec2::new(a, h * side(s3));
    let u = x3 * (T::one() / l3);
    let (a4, h4) = intersect(l3, l5, l4);
    let x4 = u * a4 + u.perp() * (h4 * side(s4));
    Ok([x1, x2, x3, x4])
}

fn side<T: Scalar>(s: i8) -> T {
    if s >= 0 {
        T::one()
    } else {
        -T::one()
    }
}

/// Intersection of the circle of radius `r0` about the origin with the circle
/// of radius `r1` about `(base, 0)`: returns the foot `a` and height `h ≥ 0`.
fn intersect<T: Scalar>(base: T, r0: T, r1: T) -> (T, T) {
    let a = (r0 * r0 - r1 * r1 + base * base) / (T::two() * base);
    let h2 = r0 * r0 - a * a;
    (a, h2.max(T::zero()).sqrt())
}

fn check_triangle<T: Scalar>(labels: [usize; 3], sides: [T; 3]) -> Result<(), RigidityError> {
    let [a, b, c] = sides;
    if a < b + c && b < a + c && c < a + b {
        Ok(())
    } else {
        Err(RigidityError::Infeasible {
            triangle: labels,
            lengths: [a.as_f64(), b.as_f64(), c.as_f64()],
        })
    }
}

/// The (up to four) design frameworks of a 2-cycles graph, in the canonical
/// gauge and in [`REALIZATION_SIDES`] order. Vertex labels in infeasibility
/// errors are the graph's own, 1-based.
pub fn two_cycles_realizations<T: Scalar>(
    g: &FormationGraph,
    d: &TargetLengths<T>,
) -> Result<Vec<Framework<T>>, RigidityError> {
    let map = TwoCyclesMap::find(g)?;
    d.check_edge_count(g.m())?;
    let plain = d.plain_lengths();
    let l = map.to_canonical_edges(&plain);
    let mut out = Vec::with_capacity(4);
    for (s3, s4) in REALIZATION_SIDES {
        let pts = realize_two_cycles(&l, s3, s4).map_err(|e| relabel(e, &map))?;
        out.push(Framework::new(g.clone(), map.from_canonical_vertices(&pts))?.canonical_gauge());
    }
    Ok(out)
}

fn relabel(e: RigidityError, map: &TwoCyclesMap) -> RigidityError {
    match e {
        RigidityError::Infeasible { triangle, lengths } => RigidityError::Infeasible {
            triangle: triangle.map(|c| map.vertex[c - 1] + 1),
            lengths,
        },
        other => other,
    }
}

/// Output of [`make_singular_lengths`].
#[derive(Debug, Clone)]
pub struct SingularLengths<T> {
    /// Squared lengths in canonical edge order.
    pub lengths: TargetLengths<T>,
    /// Canonical 2-cycles framework with `z₁ ∥ z₅`.
    pub witness: Framework<T>,
    /// Pairs of coincident agents (1-based), if any.
    pub superposed: Vec<(usize, usize)>,
}

/// Builds squared lengths in the singular set of the canonical 2-cycles.
///
/// `d1, d2, d3` are the squared lengths of the first triangle. `x₄` is placed
/// on the line of `z₁` at signed distance `s` from `x₁`: positive means `z₅`
/// points the same way as `z₁`.
pub fn make_singular_lengths<T: Scalar>(d1: T, d2: T, d3: T, s: T) -> Result<SingularLengths<T>, RigidityError> {
    for (i, v) in [d1, d2, d3].into_iter().enumerate() {
        if !(v > T::zero()) {
            return Err(RigidityError::NonPositiveLength {
                index: i + 1,
                value: v.as_f64(),
            });
        }
    }
    if s == T::zero() || !s.is_finite() {
        return Err(RigidityError::ZeroSignedLength);
    }
    let (l1, l2, l3) = (d1.sqrt(), d2.sqrt(), d3.sqrt());
    check_triangle([1, 2, 3], [l1, l2, l3])?;
    let x1 = Vec2::zero();
    let x2 = Vec2::new(l1, T::zero());
    let (a, h) = intersect(l1, l3, l2);
    let x3 = Vec2::new(a, h);
    let x4 = Vec2::new(s, T::zero());
    let pts = vec![x1, x2, x3, x4];
    let scale = l1.max(l2).max(l3).max(s.abs());
    let mut superposed = Vec::new();
    for i in 0..4 {
        for j in i + 1..4 {
            if (pts[i] - pts[j]).norm() <= T::lit(1e-12) * scale {
                superposed.push((i + 1, j + 1));
            }
        }
    }
    let witness = Framework::new(FormationGraph::two_cycles(), pts)?;
    let z = witness.edge_vectors().z;
    let lengths = TargetLengths::squared(z.iter().map(|v| v.norm_sq()).collect())?;
    Ok(SingularLengths {
        lengths,
        witness,
        superposed,
    })
}

/// `|a × b| ≤ tol · ‖a‖‖b‖`.
pub fn is_parallel<T: Scalar>(a: Vec2<T>, b: Vec2<T>, tol: T) -> bool {
    a.cross(b).abs() <= tol * a.norm() * b.norm()
}

/// True iff some design framework of `d` has `z₁ ∥ z₅` within `tol`.
pub fn in_singular_set<T: Scalar>(g: &FormationGraph, d: &TargetLengths<T>, tol: T) -> Result<bool, RigidityError> {
    let map = TwoCyclesMap::find(g)?;
    Ok(two_cycles_realizations(g, d)?.iter().any(|f| {
        let z = f.edge_vectors().z;
        is_parallel(z[map.edge[0]], z[map.edge[4]], tol)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::kron_i2;

    fn fw(points: &[(f64, f64)]) -> Framework<f64> {
        Framework::new(
            FormationGraph::two_cycles(),
            points.iter().map(|&(x, y)| Vec2::new(x, y)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn edge_vectors_by_subtraction() {
        let f = fw(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (-1.0, 0.0)]);
        let z = f.edge_vectors().z;
        let expected = [(1.0, 0.0), (-1.0, 1.0), (0.0, -1.0), (1.0, 1.0), (-1.0, 0.0)];
        for (zi, e) in z.iter().zip(expected) {
            assert_eq!((zi.x, zi.y), e);
        }
        let am2 = kron_i2(&f.graph().mixed_adjacency::<f64>());
        assert_eq!(am2.matvec(&f.to_flat()).unwrap(), f.edge_vectors().to_flat());
    }

    #[test]
    fn superposed_agents_give_zero_edges() {
        let f = fw(&[(2.0, 3.0); 4]);
        assert!(f.edge_vectors().z.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn translation_leaves_edges_unchanged() {
        let f = fw(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (-1.0, 0.0)]);
        let g = f.transformed(0.0, Vec2::new(5.0, 7.0));
        assert_eq!(f.edge_vectors(), g.edge_vectors());
    }

    #[test]
    fn edge_error_values() {
        let g = FormationGraph::new(2, vec![(0, 1)]).unwrap();
        let f = Framework::new(g.clone(), vec![Vec2::new(0.0, 0.0), Vec2::new(2.0, 0.0)]).unwrap();
        let d = TargetLengths::squared(vec![1.0]).unwrap();
        assert_eq!(f.edge_errors(&d).unwrap(), vec![3.0]);
        let f = Framework::new(g, vec![Vec2::new(0.0, 0.0), Vec2::new(0.6, 0.8)]).unwrap();
        assert_eq!(f.edge_errors(&d).unwrap(), vec![0.0]);
        assert!(f.edge_errors(&TargetLengths::squared(vec![1.0, 1.0]).unwrap()).is_err());
    }

    #[test]
    fn rigidity_matrix_layout() {
        let f = fw(&[(0.0, 0.0), (1.0, 0.0), (0.3, 1.0), (-1.0, 0.5)]);
        let r = f.rigidity_matrix();
        let dz = f.edge_vectors().dz();
        let am2 = kron_i2(&f.graph().mixed_adjacency::<f64>());
        assert!((&r - &(&dz * &am2)).max_abs() == 0.0);
        // First row: edge 1→2 with z₁ = (1, 0).
        assert_eq!(r.row(0), &[-1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn rigidity_predicates() {
        let generic = fw(&[(0.0, 0.0), (1.0, 0.1), (0.3, 1.0), (-1.0, 0.5)]);
        assert!(generic.is_infinitesimally_rigid(1e-9).unwrap());
        assert!(generic.is_minimally_rigid(1e-9).unwrap());
        let line = fw(&[(0.0, 0.0), (1.0, 0.0), (2.5, 0.0), (-1.0, 0.0)]);
        assert!(line.rigidity_rank(1e-9).unwrap() < 5);
        assert!(!line.is_infinitesimally_rigid(1e-9).unwrap());
        let parallel = fw(&[(0.0, 0.0), (1.0, 0.0), (0.3, 1.0), (-2.0, 0.0)]);
        assert!(parallel.is_infinitesimally_rigid(1e-9).unwrap());
        let tri = Framework::new(
            FormationGraph::triangle(),
            vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.2, 0.9)],
        )
        .unwrap();
        assert!(tri.is_minimally_rigid(1e-9).unwrap());
        let extra = FormationGraph::new(4, vec![(0, 1), (1, 2), (2, 0), (3, 2), (0, 3), (1, 3)]).unwrap();
        let over = Framework::new(extra, generic.positions().to_vec()).unwrap();
        assert!(over.is_infinitesimally_rigid(1e-9).unwrap());
        assert!(!over.is_minimally_rigid(1e-9).unwrap());
    }

    #[test]
    fn singular_lengths_example() {
        let s = make_singular_lengths(1.0f64, 5.0, 4.0, -2.0).unwrap();
        let d = s.lengths.values();
        for (got, want) in d.iter().zip([1.0, 5.0, 4.0, 8.0, 4.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        let z = s.witness.edge_vectors().z;
        assert!(is_parallel(z[0], z[4], 1e-12));
        assert!(s.superposed.is_empty());
        assert!(in_singular_set(&FormationGraph::two_cycles(), &s.lengths, 1e-9).unwrap());
    }

    #[test]
    fn singular_lengths_with_superposition() {
        let s = make_singular_lengths(1.0, 5.0, 4.0, 1.0).unwrap();
        assert_eq!(s.superposed, vec![(2, 4)]);
        assert!(s.witness.is_infinitesimally_rigid(1e-9).unwrap());
    }

    #[test]
    fn singular_lengths_errors() {
        assert!(matches!(
            make_singular_lengths(1.0, 4.0, 9.0, 1.5),
            Err(RigidityError::Infeasible { .. })
        ));
        assert!(matches!(
            make_singular_lengths(1.0, 5.0, 4.0, 0.0),
            Err(RigidityError::ZeroSignedLength)
        ));
    }

    #[test]
    fn realizations_of_unit_lengths() {
        let d = TargetLengths::squared(vec![1.0f64; 5]).unwrap();
        let fws = two_cycles_realizations(&FormationGraph::two_cycles(), &d).unwrap();
        assert_eq!(fws.len(), 4);
        let coincident = fws
            .iter()
            .filter(|f| (f.positions()[3] - f.positions()[1]).norm() < 1e-12)
            .count();
        assert_eq!(coincident, 2);
        for f in &fws {
            assert!(f.edge_errors(&d).unwrap().iter().all(|e| e.abs() < 1e-12));
        }
        // The coincident realizations have z₅ = z₁, so these lengths are singular.
        assert!(in_singular_set(&FormationGraph::two_cycles(), &d, 1e-6).unwrap());
    }

    #[test]
    fn fig2_lengths_are_not_singular() {
        let d = TargetLengths::plain(vec![2.0, 2.6, 2.0, 1.4, 3.3]).unwrap();
        assert!(!in_singular_set(&FormationGraph::two_cycles(), &d, 1e-6).unwrap());
    }

    #[test]
    fn infeasible_triangle_is_named() {
        let d = TargetLengths::squared(vec![1.0, 4.0, 9.0, 1.0, 1.0]).unwrap();
        match two_cycles_realizations(&FormationGraph::two_cycles(), &d) {
            Err(RigidityError::Infeasible { triangle, .. }) => assert_eq!(triangle, [1, 2, 3]),
            other => panic!("expected infeasibility, got {other:?}"),
        }
    }

    #[test]
    fn non_positive_length_rejected() {
        assert!(TargetLengths::squared(vec![1.0, 0.0]).is_err());
    }
}
