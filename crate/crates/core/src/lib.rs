//! Geometry and kinematics engine that turns part of an object model into
//! an embedded robotic arm.

pub mod fabrication;
pub mod fixtures;
pub mod hull;
pub mod kinematics;
pub mod mesh;
pub mod pipeline;
pub mod segmentation;
pub mod selection;
pub mod task;
pub mod workspace;
