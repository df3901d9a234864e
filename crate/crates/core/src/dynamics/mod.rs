//! Langevin state-space models, steady covariances, adiabatic elimination and
//! time-domain integration.

mod elimination;
mod lyapunov;
mod statespace;
mod timedomain;

pub use elimination::{adiabatic_eliminate, EliminationResult};
pub use lyapunov::{solve_lyapunov, steady_covariance};
pub use statespace::{
    build_state_space, dissipator_terms, lindblad_contribution, Channel, ChannelKind, LindbladTerms,
    StateSpaceModel,
};
pub use timedomain::{integrate_time_domain, InitialState, TimeDomainConfig, Trajectory};
