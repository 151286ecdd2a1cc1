//! A single error type for whole runs, sorted into input problems and
//! numerical failures.

use crate::bounds::BoundsError;
use crate::config::ConfigError;
use crate::convex::ConvexError;
use crate::dbar::DbarError;
use crate::geom::GeomError;
use crate::jensen::JensenError;
use crate::minimize::MinimizeError;
use crate::quadrature::QuadratureError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Convex(#[from] ConvexError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Jensen(#[from] JensenError),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Minimize(#[from] MinimizeError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Dbar(#[from] DbarError),
}

impl Error {
    /// Divergent integrals, failed quadrature and minimization without a
    /// finite value; everything else is a problem with the input.
    pub fn is_numerical(&self) -> bool {
        fn geom(e: &GeomError) -> bool {
            matches!(e, GeomError::Divergent { .. } | GeomError::QuadratureFailure(_))
        }
        match self {
            Error::Geom(e) => geom(e),
            Error::Minimize(MinimizeError::NoFiniteValue) => true,
            Error::Bounds(BoundsError::Geom(e)) => geom(e),
            Error::Bounds(BoundsError::Minimize(MinimizeError::NoFiniteValue)) => true,
            Error::Dbar(DbarError::QuadratureFailure(_)) => true,
            Error::Dbar(DbarError::Geom(e)) => geom(e),
            _ => false,
        }
    }

    /// The offending input field, where one can be named.
    pub fn field(&self) -> Option<String> {
        fn geom(e: &GeomError) -> Option<String> {
            match e {
                GeomError::Invalid { field, .. } => Some(field.clone()),
                GeomError::OutsideDomain { .. } => Some("grid".into()),
                GeomError::DomainViolation { .. } => Some("phi".into()),
                GeomError::Quadrature(_) => Some("quadrature".into()),
                GeomError::Convex(_) => Some("phi".into()),
                _ => None,
            }
        }
        match self {
            Error::Config(e) => Some(e.field.clone()),
            Error::Convex(_) => Some("phi".into()),
            Error::Quadrature(_) => Some("quadrature".into()),
            Error::Jensen(_) => None,
            Error::Geom(e) | Error::Bounds(BoundsError::Geom(e)) | Error::Dbar(DbarError::Geom(e)) => geom(e),
            Error::Minimize(_) => None,
            Error::Bounds(BoundsError::Invalid { field, .. }) | Error::Dbar(DbarError::Invalid { field, .. }) => Some(field.clone()),
            Error::Bounds(BoundsError::OutsideDomain(_)) => Some("grid".into()),
            Error::Bounds(BoundsError::EmptyFeasibleSet(_)) => Some("n_phi".into()),
            Error::Bounds(BoundsError::Convex(_)) => Some("phi".into()),
            Error::Bounds(BoundsError::Minimize(_)) => None,
            Error::Dbar(DbarError::RadiusViolation { .. }) => Some("points".into()),
            Error::Dbar(DbarError::Quadrature(_)) => Some("quadrature".into()),
            Error::Dbar(DbarError::QuadratureFailure(_)) => None,
        }
    }

    /// The message without the field prefix.
    pub fn message(&self) -> String {
        match self {
            Error::Config(e) => e.message.clone(),
            Error::Geom(GeomError::Invalid { message, .. })
            | Error::Bounds(BoundsError::Invalid { message, .. })
            | Error::Bounds(BoundsError::Geom(GeomError::Invalid { message, .. }))
            | Error::Dbar(DbarError::Invalid { message, .. })
            | Error::Dbar(DbarError::Geom(GeomError::Invalid { message, .. })) => message.clone(),
            e => e.to_string(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
