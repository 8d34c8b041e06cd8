//! Problem representation, cost evaluation and synthetic instances.

mod design;
mod instance;
mod partition;
mod prior;

pub use design::{DesignKind, DesignSpec};
pub use instance::{generate_instance, generate_perfect_instance, GroupMode, ProblemInstance, Truth};
pub use partition::GroupPartition;
pub use prior::{PriorSpec, Signal};
