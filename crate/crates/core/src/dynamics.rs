//! Compatible control laws, the formation vector field in agent and edge
//! coordinates, and the analytic Jacobians.
//!
//! Agent `v` with outgoing edges `j` (and `k`) moves as
//! `ẋ_v = u(d_j; e_j) z_j` or `ẋ_v = u₁ z_j + u₂ z_k`, where for two
//! co-leaders `u₁, u₂` depend on `(d_j, d_k; e_j, e_k, z_jᵀz_k)` and the pair
//! is ordered by edge index. Writing `w_j` for the term of edge `j`, the edge
//! dynamics are `ż = (A_e ⊗ I₂) w`.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::graph::FormationGraph;
use crate::numkernel::{fd_step, kron_i2, left_nullspace, rank_tol, DenseMatrix, NumError};
use crate::rigidity::{block_diag_rows, Framework, LengthConvention, RigidityError, TargetLengths, Vec2};
use crate::Scalar;

/// Largest `|e_i|` (relative to `max(1, d_i)`) accepted as a design
/// equilibrium by the factorized Jacobian formulas.
pub const DESIGN_TOL: f64 = 1e-8;

/// Largest violation of the cycle constraints accepted by [`VectorFieldBundle::eval_fz`].
pub const CYCLE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DynamicsError {
    #[error("unknown control law '{0}' (expected gradient_squared, gradient_plain or eq1_plain)")]
    UnknownLaw(String),
    #[error("gain must be positive, got {0}")]
    InvalidGain(f64),
    #[error("law '{law}' uses the {law_convention} convention but the lengths use {length_convention}")]
    ConventionMismatch {
        law: String,
        law_convention: &'static str,
        length_convention: &'static str,
    },
    #[error("{expected} laws required (one per vertex), got {got}")]
    LawCount { expected: usize, got: usize },
    #[error("state has {got} entries, expected {expected}")]
    StateLength { expected: usize, got: usize },
    #[error("edge vectors violate the cycle constraints by {violation:e}")]
    InconsistentState { violation: f64 },
    #[error("factorized Jacobian is only valid at a design equilibrium (max |e| = {max_error:e})")]
    FormulaDomain { max_error: f64 },
    #[error("control law of vertex {vertex} has a degenerate zero at e = 0")]
    DegenerateLaw { vertex: usize },
    #[error(transparent)]
    Rigidity(#[from] RigidityError),
    #[error(transparent)]
    Num(#[from] NumError),
}

/// Value and derivatives of a single co-leader law at `(d; e)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinglePartials<T> {
    pub u: T,
    pub u_e: T,
    pub u_ee: T,
    /// Explicit derivative in `d` with `e` held fixed.
    pub u_d: T,
}

/// Values and derivatives of a two co-leader law at
/// `(d_j, d_k; x = e_j, y = e_k, s = z_jᵀz_k)`. Index 0 refers to `u₁`,
/// index 1 to `u₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairPartials<T> {
    pub u: [T; 2],
    pub u_x: [T; 2],
    pub u_y: [T; 2],
    pub u_s: [T; 2],
    pub u_xx: [T; 2],
    pub u_dj: [T; 2],
    pub u_dk: [T; 2],
}

/// A feedback family compatible with the formation problem: it vanishes
/// whenever the errors it sees vanish.
///
/// Derivatives default to central finite differences; built-in laws
/// override them analytically.
pub trait ControlLaw<T: Scalar>: Send + Sync {
    fn name(&self) -> String;

    fn convention(&self) -> LengthConvention;

    fn single(&self, d: T, e: T) -> T;

    fn pair(&self, dj: T, dk: T, ej: T, ek: T, s: T) -> (T, T);

    fn single_partials(&self, d: T, e: T) -> SinglePartials<T> {
        let h1 = T::lit(1e-6);
        let h2 = T::lit(1e-4);
        let he = fd_step(e, h1);
        let hd = fd_step(d, h1);
        let he2 = fd_step(e, h2);
        let u = self.single(d, e);
        SinglePartials {
            u,
            u_e: (self.single(d, e + he) - self.single(d, e - he)) / (T::two() * he),
            u_ee: (self.single(d, e + he2) - T::two() * u + self.single(d, e - he2)) / (he2 * he2),
            u_d: (self.single(d + hd, e) - self.single(d - hd, e)) / (T::two() * hd),
        }
    }

    fn pair_partials(&self, dj: T, dk: T, ej: T, ek: T, s: T) -> PairPartials<T> {
        let h1 = T::lit(1e-6);
        let h2 = T::lit(1e-4);
        let f = |a: [T; 5]| {
            let (u1, u2) = self.pair(a[0], a[1], a[2], a[3], a[4]);
            [u1, u2]
        };
        let base = [dj, dk, ej, ek, s];
        let center = f(base);
        let d1 = |idx: usize| -> [T; 2] {
            let h = fd_step(base[idx], h1);
            let mut p = base;
            let mut m = base;
            p[idx] += h;
            m[idx] -= h;
            let (fp, fm) = (f(p), f(m));
            [(fp[0] - fm[0]) / (T::two() * h), (fp[1] - fm[1]) / (T::two() * h)]
        };
        let hx = fd_step(ej, h2);
        let mut p = base;
        let mut m = base;
        p[2] += hx;
        m[2] -= hx;
        let (fp, fm) = (f(p), f(m));
        let u_xx = [
            (fp[0] - T::two() * center[0] + fm[0]) / (hx * hx),
            (fp[1] - T::two() * center[1] + fm[1]) / (hx * hx),
        ];
        PairPartials {
            u: center,
            u_x: d1(2),
            u_y: d1(3),
            u_s: d1(4),
            u_xx,
            u_dj: d1(0),
            u_dk: d1(1),
        }
    }
}

/// Sign of the literal gradient coefficient in the motivating example.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Eq1Sign {
    /// `ẋ_i = (‖x_i − x_j‖ − d)(x_i − x_j)`, i.e. `u = −gain·e`.
    Printed,
    /// `ẋ_i = −(‖x_i − x_j‖ − d)(x_i − x_j)`, i.e. `u = gain·e`.
    Corrected,
}

/// Built-in laws with analytic derivatives. Two co-leader agents use
/// `u₁ = c·e_j`, `u₂ = c·e_k` with the same coefficient `c` as one co-leader
/// agents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BuiltinLaw<T> {
    /// `u = gain·e`, `e = ‖z‖² − d`.
    GradientSquared { gain: T },
    /// `u = gain·e`, `e = ‖z‖ − d`.
    GradientPlain { gain: T },
    /// `u = ∓gain·e`, `e = ‖z‖ − d`, sign per [`Eq1Sign`].
    Eq1Plain { gain: T, sign: Eq1Sign },
}

impl<T: Scalar> BuiltinLaw<T> {
    fn coefficient(&self) -> T {
        match *self {
            BuiltinLaw::GradientSquared { gain } | BuiltinLaw::GradientPlain { gain } => gain,
            BuiltinLaw::Eq1Plain { gain, sign: Eq1Sign::Corrected } => gain,
            BuiltinLaw::Eq1Plain { gain, sign: Eq1Sign::Printed } => -gain,
        }
    }

    pub fn gain(&self) -> T {
        match *self {
            BuiltinLaw::GradientSquared { gain }
            | BuiltinLaw::GradientPlain { gain }
            | BuiltinLaw::Eq1Plain { gain, .. } => gain,
        }
    }
}

/// Looks up a built-in law by its scenario name.
pub fn builtin_law<T: Scalar>(name: &str, gain: T, sign: Option<Eq1Sign>) -> Result<BuiltinLaw<T>, DynamicsError> {
    if !(gain > T::zero()) || !gain.is_finite() {
        return Err(DynamicsError::InvalidGain(gain.as_f64()));
    }
    match name {
        "gradient_squared" => Ok(BuiltinLaw::GradientSquared { gain }),
        "gradient_plain" => Ok(BuiltinLaw::GradientPlain { gain }),
        "eq1_plain" => Ok(BuiltinLaw::Eq1Plain {
            gain,
            sign: sign.unwrap_or(Eq1Sign::Printed),
        }),
        other => Err(DynamicsError::UnknownLaw(other.to_string())),
    }
}

impl<T: Scalar> ControlLaw<T> for BuiltinLaw<T> {
    fn name(&self) -> String {
        match self {
            BuiltinLaw::GradientSquared { .. } => "gradient_squared".into(),
            BuiltinLaw::GradientPlain { .. } => "gradient_plain".into(),
            BuiltinLaw::Eq1Plain { sign: Eq1Sign::Printed, .. } => "eq1_plain(printed)".into(),
            BuiltinLaw::Eq1Plain { sign: Eq1Sign::Corrected, .. } => "eq1_plain(corrected)".into(),
        }
    }

    fn convention(&self) -> LengthConvention {
        match self {
            BuiltinLaw::GradientSquared { .. } => LengthConvention::Squared,
            _ => LengthConvention::Plain,
        }
    }

    fn single(&self, _d: T, e: T) -> T {
        self.coefficient() * e
    }

    fn pair(&self, _dj: T, _dk: T, ej: T, ek: T, _s: T) -> (T, T) {
        let c = self.coefficient();
        (c * ej, c * ek)
    }

    fn single_partials(&self, _d: T, e: T) -> SinglePartials<T> {
        let c = self.coefficient();
        SinglePartials {
            u: c * e,
            u_e: c,
            u_ee: T::zero(),
            u_d: T::zero(),
        }
    }

    fn pair_partials(&self, _dj: T, _dk: T, ej: T, ek: T, _s: T) -> PairPartials<T> {
        let c = self.coefficient();
        let z = T::zero();
        PairPartials {
            u: [c * ej, c * ek],
            u_x: [c, z],
            u_y: [z, c],
            u_s: [z, z],
            u_xx: [z, z],
            u_dj: [z, z],
            u_dk: [z, z],
        }
    }
}

type SingleFn<T> = dyn Fn(T, T) -> T + Send + Sync;
type PairFn<T> = dyn Fn(T, T, T, T, T) -> (T, T) + Send + Sync;

/// A user-supplied law given by closures; derivatives use finite differences.
#[derive(Clone)]
pub struct CustomLaw<T> {
    name: String,
    convention: LengthConvention,
    single: Arc<SingleFn<T>>,
    pair: Arc<PairFn<T>>,
}

impl<T: Scalar> CustomLaw<T> {
    /// `single(d, e)` and `pair(d_j, d_k, e_j, e_k, s)`.
    pub fn new(
        name: impl Into<String>,
        convention: LengthConvention,
        single: impl Fn(T, T) -> T + Send + Sync + 'static,
        pair: impl Fn(T, T, T, T, T) -> (T, T) + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            convention,
            single: Arc::new(single),
            pair: Arc::new(pair),
        }
    }
}

impl<T> fmt::Debug for CustomLaw<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomLaw").field("name", &self.name).finish()
    }
}

impl<T: Scalar> ControlLaw<T> for CustomLaw<T> {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn convention(&self) -> LengthConvention {
        self.convention
    }

    fn single(&self, d: T, e: T) -> T {
        (self.single)(d, e)
    }

    fn pair(&self, dj: T, dk: T, ej: T, ek: T, s: T) -> (T, T) {
        (self.pair)(dj, dk, ej, ek, s)
    }
}

/// Edges driven by one agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeGroup {
    Leader,
    Single(usize),
    Pair(usize, usize),
}

/// Graph, lengths and per-vertex laws: everything needed to evaluate the
/// vector field.
#[derive(Clone)]
pub struct VectorFieldBundle<T: Scalar> {
    graph: FormationGraph,
    lengths: TargetLengths<T>,
    laws: Vec<Arc<dyn ControlLaw<T>>>,
    groups: Vec<EdgeGroup>,
    /// Edge-indexed group membership: `group_of[k]` is the origin vertex of `k`.
    cokernel: Vec<Vec<T>>,
    ae2: DenseMatrix<T>,
    am2: DenseMatrix<T>,
}

impl<T: Scalar> fmt::Debug for VectorFieldBundle<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorFieldBundle")
            .field("graph", &self.graph)
            .field("lengths", &self.lengths)
            .field("laws", &self.laws.iter().map(|l| l.name()).collect::<Vec<_>>())
            .finish()
    }
}

/// Jacobian data of the edge dynamics at a design equilibrium.
#[derive(Debug, Clone)]
pub struct JacobianBundle<T> {
    pub zprime: Vec<Vec2<T>>,
    pub zdprime: Vec<Vec2<T>>,
    /// `(A_e ⊗ I₂) D(z′)ᵀ D(z)`, `2m × 2m`.
    pub dfdz: DenseMatrix<T>,
    /// `(A_e ⊗ I₂) D(z″)ᵀ`, `2m × m`.
    pub dfdd: DenseMatrix<T>,
    /// `D(z) A_e D(z′)ᵀ` written entrywise: `J_ij = (A_e)_ij z_iᵀ z′_j`.
    pub j_reduced: DenseMatrix<T>,
    /// `m − rank(J_reduced)` at the default tolerance.
    pub corank: usize,
}

impl<T: Scalar> VectorFieldBundle<T> {
    /// One law shared by every agent.
    pub fn new(
        graph: FormationGraph,
        lengths: TargetLengths<T>,
        law: Arc<dyn ControlLaw<T>>,
    ) -> Result<Self, DynamicsError> {
        let laws = vec![law; graph.n()];
        Self::with_laws(graph, lengths, laws)
    }

    /// Convenience constructor for a built-in law.
    pub fn with_builtin(
        graph: FormationGraph,
        lengths: TargetLengths<T>,
        law: BuiltinLaw<T>,
    ) -> Result<Self, DynamicsError> {
        Self::new(graph, lengths, Arc::new(law))
    }

    /// One law per vertex (vertices without co-leaders ignore theirs).
    pub fn with_laws(
        graph: FormationGraph,
        lengths: TargetLengths<T>,
        laws: Vec<Arc<dyn ControlLaw<T>>>,
    ) -> Result<Self, DynamicsError> {
        if laws.len() != graph.n() {
            return Err(DynamicsError::LawCount {
                expected: graph.n(),
                got: laws.len(),
            });
        }
        lengths.check_edge_count(graph.m())?;
        for law in &laws {
            if law.convention() != lengths.convention() {
                return Err(DynamicsError::ConventionMismatch {
                    law: law.name(),
                    law_convention: law.convention().name(),
                    length_convention: lengths.convention().name(),
                });
            }
        }
        let groups = (0..graph.n())
            .map(|v| match graph.outgoing(v).as_slice() {
                [] => EdgeGroup::Leader,
                [j] => EdgeGroup::Single(*j),
                [j, k] => EdgeGroup::Pair(*j, *k),
                _ => unreachable!("graph validation bounds the outvalence"),
            })
            .collect();
        let am: DenseMatrix<T> = graph.mixed_adjacency();
        let cokernel = left_nullspace(&am, T::lit(1e-9))?;
        Ok(Self {
            ae2: kron_i2(&graph.edge_adjacency()),
            am2: kron_i2(&am),
            graph,
            lengths,
            laws,
            groups,
            cokernel,
        })
    }

    /// Same graph and laws with new target values (same convention).
    pub fn with_lengths(&self, lengths: TargetLengths<T>) -> Result<Self, DynamicsError> {
        Self::with_laws(self.graph.clone(), lengths, self.laws.clone())
    }

    pub fn graph(&self) -> &FormationGraph {
        &self.graph
    }

    pub fn lengths(&self) -> &TargetLengths<T> {
        &self.lengths
    }

    pub fn convention(&self) -> LengthConvention {
        self.lengths.convention()
    }

    pub fn law_names(&self) -> Vec<String> {
        self.laws.iter().map(|l| l.name()).collect()
    }

    pub fn groups(&self) -> &[EdgeGroup] {
        &self.groups
    }

    /// `A_e ⊗ I₂`.
    pub fn ae2(&self) -> &DenseMatrix<T> {
        &self.ae2
    }

    /// `A_m ⊗ I₂`.
    pub fn am2(&self) -> &DenseMatrix<T> {
        &self.am2
    }

    fn error_of(&self, k: usize, z: Vec2<T>) -> T {
        let d = self.lengths.values()[k];
        match self.convention() {
            LengthConvention::Squared => z.norm_sq() - d,
            LengthConvention::Plain => z.norm() - d,
        }
    }

    /// `∂e_k/∂z_k`.
    fn error_gradient(&self, z: Vec2<T>) -> Vec2<T> {
        match self.convention() {
            LengthConvention::Squared => z * T::two(),
            LengthConvention::Plain => {
                let n = z.norm();
                if n > T::zero() {
                    z * (T::one() / n)
                } else {
                    Vec2::zero()
                }
            }
        }
    }

    /// `|∂e/∂z|` factor relating `z′` to `z`: 2 (squared) or `1/‖z‖` (plain).
    fn slope(&self, z: Vec2<T>) -> T {
        match self.convention() {
            LengthConvention::Squared => T::two(),
            LengthConvention::Plain => {
                let n = z.norm();
                if n > T::zero() {
                    T::one() / n
                } else {
                    T::zero()
                }
            }
        }
    }

    fn check_len(&self, got: usize, expected: usize) -> Result<(), DynamicsError> {
        if got != expected {
            return Err(DynamicsError::StateLength { expected, got });
        }
        Ok(())
    }

    fn unpack(z: &[T]) -> Vec<Vec2<T>> {
        z.chunks(2).map(|c| Vec2::new(c[0], c[1])).collect()
    }

    /// Edge errors of an edge state.
    pub fn errors_of_z(&self, z: &[T]) -> Vec<T> {
        Self::unpack(z)
            .iter()
            .enumerate()
            .map(|(k, zk)| self.error_of(k, *zk))
            .collect()
    }

    /// Per-edge control terms `w_k` (coefficient times edge vector).
    pub fn edge_terms(&self, z: &[T]) -> Vec<Vec2<T>> {
        let zv = Self::unpack(z);
        let d = self.lengths.values();
        let mut w = vec![Vec2::zero(); self.graph.m()];
        for (v, group) in self.groups.iter().enumerate() {
            match *group {
                EdgeGroup::Leader => {}
                EdgeGroup::Single(j) => {
                    w[j] = zv[j] * self.laws[v].single(d[j], self.error_of(j, zv[j]));
                }
                EdgeGroup::Pair(j, k) => {
                    let (u1, u2) = self.laws[v].pair(
                        d[j],
                        d[k],
                        self.error_of(j, zv[j]),
                        self.error_of(k, zv[k]),
                        zv[j].dot(zv[k]),
                    );
                    w[j] = zv[j] * u1;
                    w[k] = zv[k] * u2;
                }
            }
        }
        w
    }

    /// Agent velocities `ẋ` (length `2n`) for stacked positions `x`.
    ///
    /// Panics if `x` does not hold `2n` coordinates.
    pub fn eval_fx(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), 2 * self.graph.n(), "position vector length");
        let z = self.am2.matvec(x).expect("shape checked");
        let w = self.edge_terms(&z);
        let mut out = vec![T::zero(); x.len()];
        for (k, wk) in w.iter().enumerate() {
            let o = self.graph.origin(k);
            out[2 * o] += wk.x;
            out[2 * o + 1] += wk.y;
        }
        out
    }

    /// Velocity of a framework.
    pub fn eval_fx_framework(&self, f: &Framework<T>) -> Vec<T> {
        self.eval_fx(&f.to_flat())
    }

    /// Largest violation of the cycle constraints `Σ c_i z_i = 0`, where `c`
    /// ranges over an orthonormal basis of the cokernel of `A_m`.
    pub fn cycle_violation(&self, z: &[T]) -> T {
        let zv = Self::unpack(z);
        self.cokernel.iter().fold(T::zero(), |acc, c| {
            let s = c.iter().zip(&zv).fold(Vec2::zero(), |s, (ci, zi)| s + *zi * *ci);
            acc.max(s.norm())
        })
    }

    /// Edge velocities `ż = (A_e ⊗ I₂) w(z)` after checking that `z` comes
    /// from a framework.
    pub fn eval_fz(&self, z: &[T]) -> Result<Vec<T>, DynamicsError> {
        self.check_len(z.len(), 2 * self.graph.m())?;
        let scale = T::one().max(z.iter().fold(T::zero(), |m, v| m.max(v.abs())));
        let violation = self.cycle_violation(z);
        if violation > T::lit(CYCLE_TOL) * scale {
            return Err(DynamicsError::InconsistentState {
                violation: violation.as_f64(),
            });
        }
        Ok(self.eval_fz_unchecked(z))
    }

    /// Edge velocities without the cycle-constraint check; the formula extends
    /// smoothly to all of `ℝ^{2m}`.
    pub fn eval_fz_unchecked(&self, z: &[T]) -> Vec<T> {
        let w: Vec<T> = self.edge_terms(z).iter().flat_map(|p| [p.x, p.y]).collect();
        self.ae2.matvec(&w).expect("shape checked")
    }

    /// `∂w/∂z` (`2m × 2m`), valid at every state.
    pub fn edge_term_jacobian(&self, z: &[T]) -> DenseMatrix<T> {
        let m = self.graph.m();
        let zv = Self::unpack(z);
        let d = self.lengths.values();
        let mut wj = DenseMatrix::zeros(2 * m, 2 * m);
        // Adds `a I + p qᵀ` at block (r, c).
        let mut put = |r: usize, c: usize, a: T, p: Vec2<T>, q: Vec2<T>| {
            let pv = [p.x, p.y];
            let qv = [q.x, q.y];
            for s in 0..2 {
                for t in 0..2 {
                    let diag = if s == t { a } else { T::zero() };
                    wj[(2 * r + s, 2 * c + t)] += diag + pv[s] * qv[t];
                }
            }
        };
        for (v, group) in self.groups.iter().enumerate() {
            match *group {
                EdgeGroup::Leader => {}
                EdgeGroup::Single(j) => {
                    let p = self.laws[v].single_partials(d[j], self.error_of(j, zv[j]));
                    put(j, j, p.u, zv[j], self.error_gradient(zv[j]) * p.u_e);
                }
                EdgeGroup::Pair(j, k) => {
                    let p = self.laws[v].pair_partials(
                        d[j],
                        d[k],
                        self.error_of(j, zv[j]),
                        self.error_of(k, zv[k]),
                        zv[j].dot(zv[k]),
                    );
                    let (gj, gk) = (self.error_gradient(zv[j]), self.error_gradient(zv[k]));
                    put(j, j, p.u[0], zv[j], gj * p.u_x[0] + zv[k] * p.u_s[0]);
                    put(j, k, T::zero(), zv[j], gk * p.u_y[0] + zv[j] * p.u_s[0]);
                    put(k, j, T::zero(), zv[k], gj * p.u_x[1] + zv[k] * p.u_s[1]);
                    put(k, k, p.u[1], zv[k], gk * p.u_y[1] + zv[j] * p.u_s[1]);
                }
            }
        }
        wj
    }

    /// Exact `∂F/∂z = (A_e ⊗ I₂) ∂w/∂z` at any state.
    pub fn jacobian_z_full(&self, z: &[T]) -> DenseMatrix<T> {
        &self.ae2 * &self.edge_term_jacobian(z)
    }

    /// Exact `∂F_x/∂x` (`2n × 2n`) at any state.
    pub fn jacobian_x(&self, x: &[T]) -> DenseMatrix<T> {
        let z = self.am2.matvec(x).expect("shape checked");
        let wj = self.edge_term_jacobian(&z);
        let wa = &wj * &self.am2;
        let n = self.graph.n();
        let mut out = DenseMatrix::zeros(2 * n, 2 * n);
        for k in 0..self.graph.m() {
            let o = self.graph.origin(k);
            for s in 0..2 {
                for c in 0..2 * n {
                    out[(2 * o + s, c)] += wa[(2 * k + s, c)];
                }
            }
        }
        out
    }

    /// Exact `∂F/∂d` (`2m × m`) at any state, by differentiating the control
    /// terms in the target values (`∂e_k/∂d_k = −1`).
    pub fn jacobian_d_full(&self, z: &[T]) -> DenseMatrix<T> {
        let zdd = self.total_d_vectors(z);
        &self.ae2 * &block_diag_rows(&zdd).transpose()
    }

    /// `z″_k = Σ_j (du_j/dd_k) z_j`, summing over the edges `j` sharing the
    /// origin of `k`.
    fn total_d_vectors(&self, z: &[T]) -> Vec<Vec2<T>> {
        let zv = Self::unpack(z);
        let d = self.lengths.values();
        let mut out = vec![Vec2::zero(); self.graph.m()];
        for (v, group) in self.groups.iter().enumerate() {
            match *group {
                EdgeGroup::Leader => {}
                EdgeGroup::Single(j) => {
                    let p = self.laws[v].single_partials(d[j], self.error_of(j, zv[j]));
                    out[j] = zv[j] * (p.u_d - p.u_e);
                }
                EdgeGroup::Pair(j, k) => {
                    let p = self.laws[v].pair_partials(
                        d[j],
                        d[k],
                        self.error_of(j, zv[j]),
                        self.error_of(k, zv[k]),
                        zv[j].dot(zv[k]),
                    );
                    out[j] = zv[j] * (p.u_dj[0] - p.u_x[0]) + zv[k] * (p.u_dj[1] - p.u_x[1]);
                    out[k] = zv[j] * (p.u_dk[0] - p.u_y[0]) + zv[k] * (p.u_dk[1] - p.u_y[1]);
                }
            }
        }
        out
    }

    /// Largest `|e_i| / max(1, d_i)`.
    pub fn max_relative_error(&self, z: &[T]) -> T {
        self.errors_of_z(z)
            .iter()
            .zip(self.lengths.values())
            .fold(T::zero(), |m, (e, d)| m.max(e.abs() / T::one().max(*d)))
    }

    fn require_design(&self, z: &[T]) -> Result<(), DynamicsError> {
        self.check_len(z.len(), 2 * self.graph.m())?;
        let err = self.max_relative_error(z);
        if err > T::lit(DESIGN_TOL) {
            return Err(DynamicsError::FormulaDomain {
                max_error: err.as_f64(),
            });
        }
        Ok(())
    }

    /// Rejects laws whose zero at `e = 0` is not regular.
    pub fn check_regular(&self) -> Result<(), DynamicsError> {
        let d = self.lengths.values();
        let tiny = T::lit(1e-12);
        for (v, group) in self.groups.iter().enumerate() {
            let degenerate = match *group {
                EdgeGroup::Leader => false,
                EdgeGroup::Single(j) => self.laws[v].single_partials(d[j], T::zero()).u_e.abs() <= tiny,
                EdgeGroup::Pair(j, k) => {
                    let p = self.laws[v].pair_partials(d[j], d[k], T::zero(), T::zero(), T::zero());
                    (p.u_x[0] * p.u_y[1] - p.u_y[0] * p.u_x[1]).abs() <= tiny
                }
            };
            if degenerate {
                return Err(DynamicsError::DegenerateLaw { vertex: v + 1 });
            }
        }
        Ok(())
    }

    /// `z′_k = slope_k Σ_j (∂u_j/∂e_k) z_j` over the edges `j` sharing the
    /// origin of `k`, evaluated at a design equilibrium.
    pub fn zprime_vectors(&self, z: &[T]) -> Result<Vec<Vec2<T>>, DynamicsError> {
        self.require_design(z)?;
        self.check_regular()?;
        Ok(self.zprime_unchecked(z))
    }

    fn zprime_unchecked(&self, z: &[T]) -> Vec<Vec2<T>> {
        let zv = Self::unpack(z);
        let d = self.lengths.values();
        let mut out = vec![Vec2::zero(); self.graph.m()];
        for (v, group) in self.groups.iter().enumerate() {
            match *group {
                EdgeGroup::Leader => {}
                EdgeGroup::Single(j) => {
                    let p = self.laws[v].single_partials(d[j], self.error_of(j, zv[j]));
                    out[j] = zv[j] * (p.u_e * self.slope(zv[j]));
                }
                EdgeGroup::Pair(j, k) => {
                    let p = self.laws[v].pair_partials(
                        d[j],
                        d[k],
                        self.error_of(j, zv[j]),
                        self.error_of(k, zv[k]),
                        zv[j].dot(zv[k]),
                    );
                    out[j] = (zv[j] * p.u_x[0] + zv[k] * p.u_x[1]) * self.slope(zv[j]);
                    out[k] = (zv[j] * p.u_y[0] + zv[k] * p.u_y[1]) * self.slope(zv[k]);
                }
            }
        }
        out
    }

    /// `z″` at a design equilibrium: `z″_k = Σ_j (du_j/dd_k) z_j` with the
    /// total derivative in `d_k`.
    pub fn zdprime_vectors(&self, z: &[T]) -> Result<Vec<Vec2<T>>, DynamicsError> {
        self.require_design(z)?;
        Ok(self.total_d_vectors(z))
    }

    /// `(A_e ⊗ I₂) D(z′)ᵀ D(z)` at a design equilibrium.
    pub fn jacobian_z(&self, z: &[T]) -> Result<DenseMatrix<T>, DynamicsError> {
        let zp = self.zprime_vectors(z)?;
        Ok(self.factorized_dfdz(z, &zp))
    }

    fn factorized_dfdz(&self, z: &[T], zp: &[Vec2<T>]) -> DenseMatrix<T> {
        let dz = block_diag_rows(&Self::unpack(z));
        let dzp_t = block_diag_rows(zp).transpose();
        &(&self.ae2 * &dzp_t) * &dz
    }

    /// `(A_e ⊗ I₂) D(z″)ᵀ` at a design equilibrium.
    pub fn jacobian_d(&self, z: &[T]) -> Result<DenseMatrix<T>, DynamicsError> {
        let zdd = self.zdprime_vectors(z)?;
        Ok(&self.ae2 * &block_diag_rows(&zdd).transpose())
    }

    /// `J = D(z) A_e D(z′)ᵀ` (`m × m`) at a design equilibrium.
    pub fn reduced_j(&self, z: &[T]) -> Result<DenseMatrix<T>, DynamicsError> {
        self.require_design(z)?;
        self.check_regular()?;
        Ok(self.reduced_from(z, &self.zprime_unchecked(z)))
    }

    fn reduced_from(&self, z: &[T], zp: &[Vec2<T>]) -> DenseMatrix<T> {
        let zv = Self::unpack(z);
        let ae: DenseMatrix<T> = self.graph.edge_adjacency();
        DenseMatrix::from_fn(self.graph.m(), self.graph.m(), |i, j| ae[(i, j)] * zv[i].dot(zp[j]))
    }

    /// All factorized Jacobian data at a design equilibrium.
    pub fn jacobian_bundle(&self, z: &[T]) -> Result<JacobianBundle<T>, DynamicsError> {
        self.require_design(z)?;
        self.check_regular()?;
        let zprime = self.zprime_unchecked(z);
        let zdprime = self.total_d_vectors(z);
        let j_reduced = self.reduced_from(z, &zprime);
        let rank = rank_tol(&j_reduced, T::lit(1e-9))?;
        Ok(JacobianBundle {
            dfdz: self.factorized_dfdz(z, &zprime),
            dfdd: &self.ae2 * &block_diag_rows(&zdprime).transpose(),
            corank: self.graph.m() - rank,
            j_reduced,
            zprime,
            zdprime,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::fd_jacobian;
    use crate::rigidity::two_cycles_realizations;

    fn squared_bundle(d: Vec<f64>) -> VectorFieldBundle<f64> {
        VectorFieldBundle::with_builtin(
            FormationGraph::two_cycles(),
            TargetLengths::squared(d).unwrap(),
            builtin_law("gradient_squared", 1.0, None).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn builtin_lookup() {
        let law: BuiltinLaw<f64> = builtin_law("gradient_squared", 2.0, None).unwrap();
        let p = law.single_partials(1.0, 0.0);
        assert_eq!((p.u, p.u_e), (0.0, 2.0));
        assert_eq!(law.pair(1.0, 1.0, 0.0, 0.0, 0.7), (0.0, 0.0));
        assert!(matches!(builtin_law::<f64>("bogus", 1.0, None), Err(DynamicsError::UnknownLaw(_))));
        assert!(matches!(builtin_law::<f64>("gradient_plain", 0.0, None), Err(DynamicsError::InvalidGain(_))));
        let printed: BuiltinLaw<f64> = builtin_law("eq1_plain", 1.0, None).unwrap();
        assert_eq!(printed.single(1.0, 0.5), -0.5);
    }

    #[test]
    fn convention_mismatch_is_rejected() {
        let r = VectorFieldBundle::with_builtin(
            FormationGraph::two_cycles(),
            TargetLengths::squared(vec![1.0; 5]).unwrap(),
            builtin_law("gradient_plain", 1.0, None).unwrap(),
        );
        assert!(matches!(r, Err(DynamicsError::ConventionMismatch { .. })));
    }

    #[test]
    fn custom_law_partials_match_builtin() {
        let custom = CustomLaw::new(
            "quad",
            LengthConvention::Squared,
            |_d: f64, e: f64| e + e * e,
            |_dj, _dk, ej: f64, ek: f64, s: f64| (ej + 0.1 * s * ek, ek),
        );
        let p = custom.single_partials(2.0, 0.0);
        assert!((p.u_e - 1.0).abs() < 1e-8 && (p.u_ee - 2.0).abs() < 1e-5);
        let q = custom.pair_partials(1.0, 1.0, 0.0, 0.0, 3.0);
        assert!((q.u_y[0] - 0.3).abs() < 1e-8 && q.u_s[0].abs() < 1e-8);
    }

    #[test]
    fn design_framework_is_equilibrium() {
        let b = squared_bundle(vec![1.0, 5.0, 4.0, 3.0, 2.0]);
        for f in two_cycles_realizations(b.graph(), b.lengths()).unwrap() {
            let v = b.eval_fx_framework(&f);
            assert!(v.iter().all(|x| x.abs() < 1e-12));
        }
        let superposed = vec![0.3; 8];
        assert!(b.eval_fx(&superposed).iter().all(|x| *x == 0.0));
    }

    #[test]
    fn pushforward_identity() {
        let b = squared_bundle(vec![1.0, 5.0, 4.0, 3.0, 2.0]);
        let x = [0.1, -0.2, 1.3, 0.4, -0.5, 2.0, 0.7, -1.1];
        let z = b.am2().matvec(&x).unwrap();
        let fz = b.eval_fz(&z).unwrap();
        let push = b.am2().matvec(&b.eval_fx(&x)).unwrap();
        for (a, c) in fz.iter().zip(&push) {
            assert!((a - c).abs() < 1e-12);
        }
        let mut bad = z.clone();
        bad[0] += 0.1;
        assert!(matches!(b.eval_fz(&bad), Err(DynamicsError::InconsistentState { .. })));
    }

    #[test]
    fn analytic_jacobians_match_fd() {
        let b = squared_bundle(vec![1.0, 5.0, 4.0, 3.0, 2.0]);
        let x = [0.1, -0.2, 1.3, 0.4, -0.5, 2.0, 0.7, -1.1];
        let jx = b.jacobian_x(&x);
        let fd = fd_jacobian(|p: &[f64]| b.eval_fx(p), &x, 1e-6);
        assert!((&jx - &fd).max_abs() < 1e-6 * jx.max_abs());
        let z = b.am2().matvec(&x).unwrap();
        let jz = b.jacobian_z_full(&z);
        let fdz = fd_jacobian(|p: &[f64]| b.eval_fz_unchecked(p), &z, 1e-6);
        assert!((&jz - &fdz).max_abs() < 1e-6 * jz.max_abs());
    }

    #[test]
    fn zprime_for_gradient_squared() {
        let b = squared_bundle(vec![1.0, 5.0, 4.0, 3.0, 2.0]);
        let f = &two_cycles_realizations(b.graph(), b.lengths()).unwrap()[0];
        let z = f.edge_vectors();
        let zp = b.zprime_vectors(&z.to_flat()).unwrap();
        for (a, c) in zp.iter().zip(&z.z) {
            assert!((*a - *c * 2.0).norm() < 1e-12);
        }
        let zdd = b.zdprime_vectors(&z.to_flat()).unwrap();
        for (a, c) in zdd.iter().zip(&z.z) {
            assert!((*a + *c).norm() < 1e-12);
        }
    }

    #[test]
    fn formula_domain_and_regularity() {
        let b = squared_bundle(vec![1.0, 5.0, 4.0, 3.0, 2.0]);
        let z = b.am2().matvec(&[0.1, -0.2, 1.3, 0.4, -0.5, 2.0, 0.7, -1.1]).unwrap();
        assert!(matches!(b.jacobian_z(&z), Err(DynamicsError::FormulaDomain { .. })));
        let zero: Arc<dyn ControlLaw<f64>> = Arc::new(CustomLaw::new(
            "zero",
            LengthConvention::Squared,
            |_, _| 0.0,
            |_, _, _, _, _| (0.0, 0.0),
        ));
        let flat = VectorFieldBundle::new(b.graph().clone(), b.lengths().clone(), zero).unwrap();
        let f = &two_cycles_realizations(b.graph(), b.lengths()).unwrap()[0];
        assert!(matches!(
            flat.reduced_j(&f.edge_vectors().to_flat()),
            Err(DynamicsError::DegenerateLaw { .. })
        ));
    }
}
