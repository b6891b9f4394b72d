use thiserror::Error;

use crate::cart::CartError;
use crate::eval::EvalError;
use crate::ingest::IngestError;
use crate::whatif::WhatIfError;

/// Any failure raised by the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Cart(#[from] CartError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    WhatIf(#[from] WhatIfError),
}
