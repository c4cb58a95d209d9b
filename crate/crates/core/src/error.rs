use thiserror::Error;

/// Errors raised by the IFE pipeline.
#[derive(Debug, Error)]
pub enum IfeError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("element {element}: interface cuts edge ({a}, {b}) more than once")]
    MultipleEdgeCuts { element: usize, a: usize, b: usize },

    #[error("element {element}: degenerate cut, all candidate plane triples are collinear")]
    DegenerateCut { element: usize },

    #[error(
        "matrix is not positive definite (p'Ap = {curvature:e} at iteration {iteration}); \
         increase the penalty parameter sigma"
    )]
    Indefinite { iteration: usize, curvature: f64 },

    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, IfeError>;

/// Non-fatal conditions recorded while building the discretization.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// |level set| at the node fell below the snapping tolerance; the node was
    /// assigned to the plus side.
    NodeSnapped { node: usize },
    /// The interface only touches the element at snapped vertices; the
    /// element is treated as lying on the minus side.
    TouchingElement { element: usize },
    /// The approximating plane re-intersected the fourth cut edge outside the
    /// open edge and the point was clamped to the nearest endpoint.
    ReintersectionClamped { element: usize, t: f64 },
    /// The local 8x8 system is badly conditioned.
    NearSingularBasis { element: usize, condition: f64 },
    /// AMG coarsening reduced the level size by less than 5 %.
    CoarseningStagnated { level: usize, size: usize },
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Warning::NodeSnapped { node } => write!(f, "node {node} snapped to the plus side"),
            Warning::ReintersectionClamped { element, t } => {
                write!(f, "element {element}: plane re-intersection t = {t:e} clamped")
            }
            Warning::NearSingularBasis { element, condition } => {
                write!(f, "element {element}: local IFE system condition estimate {condition:e}")
            }
            Warning::TouchingElement { element } => {
                write!(f, "element {element} only touches the interface at snapped vertices")
            }
            Warning::CoarseningStagnated { level, size } => {
                write!(f, "AMG coarsening stagnated at level {level} ({size} unknowns)")
            }
        }
    }
}
