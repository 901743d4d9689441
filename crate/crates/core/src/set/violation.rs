use std::fmt;

/// One broken invariant of an ellipsotope description.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    CenterGeneratorMismatch { center: usize, generator_rows: usize },
    GeneratorConstraintMismatch { generator_cols: usize, constraint_cols: usize },
    ConstraintDimensionMismatch { constraint_rows: usize, rhs_len: usize },
    BlocksOverlap { index: usize, first: usize, second: usize },
    IndexOutOfRange { index: usize, m: usize },
    IndexMissing { index: usize },
    EmptyBlock { block: usize },
    InvalidNorm { p: String },
    NonFinite { field: &'static str },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            CenterGeneratorMismatch { center, generator_rows } => write!(
                f,
                "center/generator dimension mismatch: center has {center} entries, generators have {generator_rows} rows"
            ),
            GeneratorConstraintMismatch { generator_cols, constraint_cols } => write!(
                f,
                "generator/constraint column mismatch: {generator_cols} generators, {constraint_cols} constraint columns"
            ),
            ConstraintDimensionMismatch { constraint_rows, rhs_len } => write!(
                f,
                "constraint dimension mismatch: A has {constraint_rows} rows, b has {rhs_len} entries"
            ),
            BlocksOverlap { index, first, second } => write!(
                f,
                "index set blocks overlap: index {index} in blocks {first} and {second}"
            ),
            IndexOutOfRange { index, m } => {
                write!(f, "index set entry {index} out of range for {m} generators")
            }
            IndexMissing { index } => write!(f, "index set does not cover index {index}"),
            EmptyBlock { block } => write!(f, "index set block {block} is empty"),
            InvalidNorm { p } => write!(f, "norm order {p} must be greater than 1"),
            NonFinite { field } => write!(f, "non-finite value in {field}"),
        }
    }
}
