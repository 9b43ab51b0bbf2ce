//! Value-based reinforcement learning on flat parameter vectors: Q-networks
//! (feedforward, dueling, optional GRU front end), a ring replay buffer, and
//! a double-DQN training loop with soft target updates.

pub mod net;
pub mod replay;
pub mod trainer;

pub use net::{dueling_combine, soft_update, Arch, NetSpec, QNet};
pub use replay::{ReplayBuffer, Transition};
pub use trainer::{
    argmax_masked, ddqn_target, evaluate, load_checkpoint, loss_and_grad, random_rollout,
    save_checkpoint, select_action, train, Algo, EpisodeStat, TrainConfig, TrainResult,
};
