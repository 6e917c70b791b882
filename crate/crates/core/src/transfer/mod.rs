//! Periodized transfer operators at inverse temperature `beta`: Perron
//! eigenpairs, Gibbs marginals, the Doob-transformed Markov chain, chain
//! sampling, and the free-energy diagnostic.

mod gibbs;
mod kernel;
mod spectrum;

pub use gibbs::{
    free_energy, gibbs_marginal, markov_kernel, sample_chain, stationary_distribution,
    viscous_solutions, MarkovChain, SampledChain,
};
pub use kernel::{build_kernel, build_mechanical_kernel, mechanical_radius, PeriodizedKernel};
pub use spectrum::{principal_eigenpair, TransferSpectrum};
