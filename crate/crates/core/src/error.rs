use thiserror::Error;

use crate::Point3;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("spherical Bessel order {order} exceeds the supported maximum {max}")]
    UnsupportedOrder { order: usize, max: usize },

    #[error("{function} is singular at z = 0")]
    SingularArgument { function: &'static str },

    #[error("{function} overflowed at order {order} for z = {z}")]
    Overflow {
        function: &'static str,
        order: usize,
        z: num_complex::Complex64,
    },

    #[error("Legendre argument {0} lies outside [-1, 1]")]
    LegendreDomain(f64),

    #[error("field radius {0} coincides with the source radius")]
    CoincidentRadius(f64),

    #[error("evaluation point {0:?} coincides with a monopole source")]
    CoincidentSource(Point3),

    #[error("kernel evaluated at coincident points {0:?}")]
    CoincidentPoints(Point3),

    #[error("invalid core-shell configuration: {0}")]
    InvalidConfig(String),

    #[error("modal boundary-condition system is singular at order n = {0}")]
    ModalSingularity(usize),

    #[error("track radius {0} lies on an interface")]
    TrackOnInterface(f64),

    #[error("unsupported quadrature degree {requested}; supported degrees: {supported:?}")]
    UnsupportedDegree {
        requested: usize,
        supported: &'static [usize],
    },

    #[error("mesh quality: {0}")]
    MeshQuality(String),

    #[error("mesh file, line {line}: {message}")]
    MeshFormat { line: usize, message: String },

    #[error("scenario validation: {0}")]
    Validation(String),

    #[error("assembly failed: non-finite integrand on element {element} of surface '{surface}' for collocation row {row}")]
    AssemblyFailure {
        surface: String,
        element: usize,
        row: usize,
    },

    #[error("dense factorization is numerically singular (relative residual {residual:e}); check for a fictitious frequency or inconsistent boundary conditions")]
    SingularSystem { residual: f64 },

    #[error("point {point:?} is {distance:.3e} from a surface, inside the near-boundary threshold {threshold:.3e}")]
    NearBoundary {
        point: Point3,
        distance: f64,
        threshold: f64,
    },

    #[error("point {0:?} does not lie in any fluid domain")]
    Location(Point3),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
