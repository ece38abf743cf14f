use std::io;
use std::path::PathBuf;

use formation_core::bifurcation::BifurcationError;
use formation_core::dynamics::DynamicsError;
use formation_core::equilibria::EquilibriaError;
use formation_core::graph::GraphError;
use formation_core::numkernel::NumError;
use formation_core::rigidity::RigidityError;
use serde::Serialize;
use thiserror::Error;

/// Exit status for input that fails validation.
pub const EXIT_VALIDATION: u8 = 2;
/// Exit status for a numerical failure on valid input.
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: io::Error },
    #[error("cannot write {}: {source}", path.display())]
    Write { path: PathBuf, source: io::Error },
    #[error("{}:{line}:{column}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported scenario format {0} (this build reads format 1)")]
    Format(u32),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Rigidity(#[from] RigidityError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Equilibria(#[from] EquilibriaError),
    #[error(transparent)]
    Bifurcation(#[from] BifurcationError),
    #[error(transparent)]
    Num(#[from] NumError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Class {
    Validation,
    Numerical,
}

type Classified = (&'static str, Class);

fn num(e: &NumError) -> Classified {
    let code = match e {
        NumError::Dimension { .. } | NumError::InvalidArgument(_) => "numerical_input",
        NumError::Convergence { .. } | NumError::NoConvergence { .. } => "no_convergence",
        NumError::BlowUp { .. } => "blow_up",
        NumError::Singular => "singular",
    };
    (code, Class::Numerical)
}

fn graph(e: &GraphError) -> Classified {
    let code = match e {
        GraphError::VertexOutOfRange { .. } => "edge_index",
        GraphError::SelfLoop { .. } => "self_loop",
        GraphError::DuplicateEdge { .. } => "duplicate_edge",
        GraphError::Outvalence { .. } => "outvalence",
        GraphError::NotTwoCycles => "not_two_cycles",
    };
    (code, Class::Validation)
}

fn rigidity(e: &RigidityError) -> Classified {
    match e {
        RigidityError::PointCount { .. } | RigidityError::NonFinite => ("positions", Class::Validation),
        RigidityError::LengthCount { .. } | RigidityError::NonPositiveLength { .. } => {
            ("lengths", Class::Validation)
        }
        RigidityError::Infeasible { .. } => ("infeasible", Class::Validation),
        RigidityError::ZeroSignedLength => ("lengths", Class::Validation),
        RigidityError::Graph(g) => graph(g),
        RigidityError::Num(n) => num(n),
    }
}

fn dynamics(e: &DynamicsError) -> Classified {
    match e {
        DynamicsError::UnknownLaw(_) => ("unknown_law", Class::Validation),
        DynamicsError::InvalidGain(_) | DynamicsError::LawCount { .. } => ("law", Class::Validation),
        DynamicsError::ConventionMismatch { .. } => ("convention", Class::Validation),
        DynamicsError::StateLength { .. } | DynamicsError::InconsistentState { .. } => {
            ("positions", Class::Validation)
        }
        DynamicsError::FormulaDomain { .. } => ("not_equilibrium", Class::Numerical),
        DynamicsError::DegenerateLaw { .. } => ("degenerate_law", Class::Numerical),
        DynamicsError::Rigidity(r) => rigidity(r),
        DynamicsError::Num(n) => num(n),
    }
}

fn equilibria(e: &EquilibriaError) -> Classified {
    match e {
        EquilibriaError::NotEquilibrium { .. } => ("not_equilibrium", Class::Numerical),
        EquilibriaError::NonHyperbolic { .. } => ("non_hyperbolic", Class::Numerical),
        EquilibriaError::DegenerateGauge => ("degenerate_gauge", Class::Numerical),
        EquilibriaError::Dynamics(d) => dynamics(d),
        EquilibriaError::Rigidity(r) => rigidity(r),
        EquilibriaError::Graph(g) => graph(g),
        EquilibriaError::Num(n) => num(n),
    }
}

fn bifurcation(e: &BifurcationError) -> Classified {
    match e {
        BifurcationError::NotEquilibrium { .. } => ("not_equilibrium", Class::Numerical),
        BifurcationError::Dimension { .. } => ("positions", Class::Validation),
        BifurcationError::InvalidSweep => ("sweep_parameters", Class::Validation),
        BifurcationError::Equilibria(q) => equilibria(q),
        BifurcationError::Rigidity(r) => rigidity(r),
        BifurcationError::Num(n) => num(n),
    }
}

impl CliError {
    fn classify(&self) -> Classified {
        match self {
            CliError::Read { .. } => ("read", Class::Validation),
            CliError::Write { .. } => ("write", Class::Validation),
            CliError::Parse { .. } => ("parse", Class::Validation),
            CliError::Format(_) => ("format", Class::Validation),
            CliError::Invalid(_) => ("invalid", Class::Validation),
            CliError::Graph(g) => graph(g),
            CliError::Rigidity(r) => rigidity(r),
            CliError::Dynamics(d) => dynamics(d),
            CliError::Equilibria(q) => equilibria(q),
            CliError::Bifurcation(b) => bifurcation(b),
            CliError::Num(n) => num(n),
        }
    }

    /// Stable machine-readable identifier of the failure.
    pub fn code(&self) -> &'static str {
        self.classify().0
    }

    pub fn exit_code(&self) -> u8 {
        match self.classify().1 {
            Class::Validation => EXIT_VALIDATION,
            Class::Numerical => EXIT_NUMERICAL,
        }
    }

    pub fn record(&self) -> ErrorRecord {
        ErrorRecord {
            error: ErrorBody {
                code: self.code(),
                exit_code: self.exit_code(),
                message: self.to_string(),
            },
        }
    }
}

/// JSON shape written to stderr on failure.
#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub error: ErrorBody,
}

#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub code: &'static str,
    pub exit_code: u8,
    pub message: String,
}
