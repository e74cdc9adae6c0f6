//! The five-layer network: predicates, atomic temporal neurons with an
//! interval autoencoder, "and"/"or" reduction, and the output conjunction.

mod backward;
pub mod checkpoint;
mod forward;
mod params;

pub use backward::{backward, backward_from, loss, loss_grad};
pub use forward::{
    atomic_forward, forward, layer2_predicates, output_forward, predict, reduction_forward, AggregateTrace,
    ForwardTrace, Mode, NeuronTrace,
};
pub use params::{Dense, Gradients, IntervalSeed, Mlp, NetworkConfig, NeuronKind, NeuronSpec, TlnnParams};

pub(crate) use forward::{decoder_input, interval_from_codes, window_from_interval};
