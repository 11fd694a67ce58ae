//! Press experiments: sensor alpha ramp, hand motion, the chamfer terminal
//! check and the outer simulation loop.

pub mod chamfer;
pub mod press;
pub mod scenario;

pub use chamfer::chamfer_translation_free;
pub use press::{run_press, PressResult, PressRun, Termination};
pub use scenario::{GridSpec, ObjectSpec, PressScenario, PressSpec, SensorSpec};

use crate::geometry::SensorLayout;

/// Per-particle blend weight: 0 on the mounting layer, 1 on the contact
/// layer, linear in between.
pub fn alpha_field(layout: &SensorLayout) -> Vec<f64> {
    let top = (layout.layers - 1) as f64;
    layout
        .indices
        .iter()
        .map(|idx| (layout.layers - 1 - idx.layer) as f64 / top)
        .collect()
}

/// True once `l` reaches the scenario's threshold (inclusive).
pub fn terminal_check(l: f64, scenario: &PressScenario) -> bool {
    l >= scenario.press.terminal_threshold
}
