use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A box field is non-finite or a side is not strictly positive.
    InvalidBox,
    /// Collinear points, zero-area regions and similar.
    DegenerateGeometry(&'static str),
    /// A decoded quantity left the representable range.
    OutOfRange(&'static str),
    /// A configuration value violates its type's invariants.
    InvalidConfig(&'static str),
    EmptyInput(&'static str),
    /// Inputs that must share an image id do not.
    MixedImages,
    /// A class or side label does not index into its distribution.
    InvalidLabel(usize),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidBox => f.write_str("invalid box: fields must be finite and sides positive"),
            Error::DegenerateGeometry(what) => write!(f, "degenerate geometry: {what}"),
            Error::OutOfRange(what) => write!(f, "value out of range: {what}"),
            Error::InvalidConfig(what) => write!(f, "invalid configuration: {what}"),
            Error::EmptyInput(what) => write!(f, "empty input: {what}"),
            Error::MixedImages => f.write_str("inputs span more than one image id"),
            Error::InvalidLabel(label) => write!(f, "label {label} is out of range"),
        }
    }
}

impl core::error::Error for Error {}
