use alloc::string::String;

pub type Result<T> = core::result::Result<T, LabError>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LabError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("word domain violation at atom {atom}")]
    WordDomain { atom: usize },
    #[error("uniqueness violated: two closest points at distance {distance:e}")]
    UniquenessViolated { distance: f64 },
    #[error("n0 too small: bent disk component touches the patch boundary")]
    N0TooSmall,
    #[error("no recrossing for u <= {u_max}; increase u_max or check the tangency side")]
    NoRecrossing { u_max: u32 },
    #[error("m = {m} is below m_min = {m_min}")]
    MBelowMin { m: i32, m_min: i32 },
    #[error("newton failed to converge (residual {residual:e})")]
    NewtonFailed { residual: f64 },
    #[error("no fold in domain")]
    NoFold,
    #[error("degenerate fold point at parameters ({u:e}, {v:e})")]
    DegenerateFold { u: f64, v: f64 },
    #[error("surface is not locally a graph over (y, t)")]
    NotAGraph,
    #[error("constant not resolved: successive estimates {spread:e} apart")]
    ConstantNotResolved { spread: f64 },
    #[error("no cluster with at least {needed} members; increase n_max")]
    IncreaseNMax { needed: usize },
    #[error("not yet straight (residual {residual:e}); increase j")]
    NotStraight { residual: f64 },
    #[error("distance {distance:e} below the precision floor")]
    BelowPrecision { distance: f64 },
    #[error("pullback left the chart before reaching D_a(p)")]
    ChartExit,
    #[error("no conjugacy candidate: modulus {modulus} differs")]
    NoCandidate { modulus: String },
    #[error("transport violated at k = {k} (residual {residual:e})")]
    TransportViolated { k: usize, residual: f64 },
    #[error("index {index} outside the computed range")]
    OutOfRange { index: usize },
}

impl LabError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        LabError::Domain(msg.into())
    }
}
