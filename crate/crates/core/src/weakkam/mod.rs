//! Discrete weak-KAM machinery: Lax–Oleinik operators on a torus grid, the
//! critical value as a min-plus eigenvalue, conjugate solution pairs, the
//! Mather-set indicator, finite-horizon value tables with path
//! reconstruction, and the large-deviation action deficit.

mod cost;
mod critical;
mod pair;
mod table;

pub use cost::CostMatrix;
pub use critical::{critical_value, CriticalValue};
pub use pair::{
    action_deficit, calibrated_successor_scores, mather_indicator, weak_kam_pair, WeakKamPair,
};
pub use table::{finite_action_table, minimizer_path, newton_refine, MinimizerPath, ValueTable};
