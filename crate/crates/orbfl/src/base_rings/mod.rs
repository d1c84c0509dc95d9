//! Residue fields and truncated Laurent series: the local field F = F_q((t)).

mod field;
mod series;

pub use field::{Fq, ResidueField, ResidueFieldDto};
pub use series::{Series, SeriesDto, DEFAULT_PREC, VAL_INF};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ArithError {
    #[error("operands live over different residue fields")]
    FieldMismatch,
    #[error("insufficient precision: {0}")]
    InsufficientPrecision(String),
    #[error("residue characteristic {0} is not supported (odd p only)")]
    UnsupportedCharacteristic(u32),
    #[error("bad residue field data: {0}")]
    BadField(String),
    #[error("element is not invertible: {0}")]
    NotInvertible(String),
}
