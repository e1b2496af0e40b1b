//! History-dependent gaze value maps.
//!
//! A static saliency map `S` becomes a value map that changes after every
//! fixation:
//!
//! ```text
//! V = w0 * S + w1 * C + w2 * E
//! ```
//!
//! where `C` scores the oculomotor cost of each candidate saccade from the
//! current fixation and `E` is a weighted sum of Gaussians over the fixations
//! made so far. The argmax of `V` is the predicted next fixation.
//!
//! ```
//! use std::sync::Arc;
//! use gazeval_core::{presets, Dims, Grid, PixelCoord, PredictionContext};
//!
//! let saliency = Grid::from_fn(Dims::new(32, 24), |col, row| ((col * row) % 7) as f64);
//! let ctx = PredictionContext::new(
//!     Arc::new(saliency),
//!     vec![PixelCoord::new(10.0, 8.0), PixelCoord::new(14.0, 9.0)],
//!     presets::deepgaze_ii(),
//!     presets::illustrative_profile(),
//! )?;
//! let next = ctx.predict_next()?;
//! assert!(next.x < 32.0 && next.y < 24.0);
//! # Ok::<(), gazeval_core::Error>(())
//! ```

pub mod cost;
pub mod error;
pub mod eval;
pub mod exploration;
pub mod fitting;
pub mod grid;
pub mod io;
pub mod metrics;
pub mod optim;
pub mod presets;
pub mod synth;
pub mod value;

pub use error::{Error, ErrorClass, Result};
pub use eval::{compare, evaluate, EvalReport};
pub use fitting::{fit, FitConfig, FitResult};
pub use grid::{argmax, standardize, Dims, Grid, PixelCoord};
pub use io::{CostProfile, Dataset, ModelParams, PhiIndexing};
pub use metrics::{auc_at, auc_set, nss_at, nss_set};
pub use value::{nstep_context, NStepMode, PredictionContext};

// Book chapters run as doctests so their snippets stay honest.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/value-maps.md")]
    mod value_maps {}
    #[doc = include_str!("../../../book/src/cost.md")]
    mod cost {}
    #[doc = include_str!("../../../book/src/exploration.md")]
    mod exploration {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/fitting.md")]
    mod fitting {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/service.md")]
    mod service {}
}
