use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("point {x} outside domain [{lo}, {hi}]")]
    OutsideDomain { x: f64, lo: f64, hi: f64 },

    #[error("invalid form: all coefficients are zero")]
    InvalidForm,

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("enumeration budget exceeded: {requested} forms requested, budget {budget}")]
    Budget { requested: u128, budget: u128 },

    #[error("search budget exceeded at shell size {shell}")]
    ShellBudget { shell: i64 },

    #[error("short vectors are linearly dependent")]
    DegenerateVectors,

    #[error("x0 = {x0} within {radius:.3e} of the domain boundary")]
    Boundary { x0: f64, radius: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("derivative certification failed: {0}")]
    Certification(String),

    #[error("box radius {radius} too small: fewer than 3 non-collinear integer points")]
    BoxTooSmall { radius: i64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
