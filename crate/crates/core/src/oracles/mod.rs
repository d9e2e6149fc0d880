//! Reference implementations used to validate the samplers: matrix
//! exponentials, exact forward-backward marginals, rejection sampling of
//! endpoint-conditioned paths, and numerically integrated sufficient
//! statistics. None of these touch the uniformization machinery.

mod expm;
mod posterior;
mod rejection;

pub use expm::{transition_matrix, SquareMatrix};
pub use posterior::{exact_posterior_marginals, exact_sufficient_stats, GridPosterior};
pub use rejection::{rejection_sample_endpoint, RejectionDraw};
