//! Multivariate mean estimators: robust (block) descent, its iterative
//! imputation variant for coordinatewise missingness, and the net-based
//! minimum Kolmogorov distance estimator.

mod descent;
mod iterative;
mod mk;
mod net;
mod sdp;

pub use descent::{
    descent_steps, robust_block_descent, robust_descent, robust_descent_blocks,
    robust_descent_with, sq_dist, DEFAULT_SDP_ITERS,
};
pub use iterative::{iterative_robust_descent, DescentConfig, DescentPlan, IpwHint};
pub use mk::{check_all_or_nothing, multivariate_mk, MultiMk, SUBGRADIENT_STEPS};
pub use net::{quarter_net, rejection_cap, SphereNet, MAX_NET_DIM, NET_RADIUS};
pub use sdp::{capped_weights, solve_sdp_approx, BlockMeans, SdpSolution};
