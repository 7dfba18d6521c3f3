use crate::ring::Domain;

/// Errors surfaced by ring arithmetic, the CKKS layer, and model packing.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid ring parameters: {0}")]
    InvalidParams(String),

    #[error(
        "modulus chain totals {total_bits} bits, exceeding the {max_bits}-bit \
         bound for ring degree {ring_degree} at {security_bits}-bit security"
    )]
    InsecureChain {
        ring_degree: usize,
        total_bits: u32,
        max_bits: u32,
        security_bits: u32,
    },

    #[error("operands use incompatible ring parameters")]
    ParamsMismatch,

    #[error("expected polynomial in {expected:?} domain, found {found:?}")]
    WrongDomain { expected: Domain, found: Domain },

    #[error("modulus chain exhausted: cannot drop below one prime")]
    LevelExhausted,

    #[error("operand levels differ: {0} vs {1}")]
    LevelMismatch(usize, usize),

    #[error("operand scales differ beyond tolerance: {0:e} vs {1:e}")]
    ScaleMismatch(f64, f64),

    #[error("{count} values exceed the capacity of {slots} slots")]
    SlotCapacity { count: usize, slots: usize },

    #[error("non-finite value at slot {0}")]
    NonFinite(usize),

    #[error("model has no arrays")]
    EmptyModel,

    #[error("array {name:?} declares shape for {expect} elements but holds {got}")]
    ShapeMismatch {
        name: String,
        expect: usize,
        got: usize,
    },

    #[error("flat vector holds {got} values but the layout needs {need}")]
    LengthMismatch { need: usize, got: usize },

    #[error("packed model does not match its layout: {0}")]
    PackedModelMismatch(String),
}
