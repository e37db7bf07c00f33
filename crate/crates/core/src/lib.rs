// Licensed under the Apache-2.0 license

//! Frame-based secure boot with an onboard recovery engine.
//!
//! Firmware is split into signed 1 KiB frames. At boot every frame is
//! checked against a golden manifest held in ROM; corrupted frames are
//! re-flashed from ROM, after which flash writes and RAM execution are
//! locked against untrusted code and DMA.
//!
//! The [`timing`] model is generic over the float type. The aliases below
//! fix it to `f64` (and `f32` for the narrow variants).

pub mod attack;
pub mod boot;
pub mod crypto;
pub mod device;
pub mod frame;
pub mod recovery;
pub mod report;
pub mod timing;
pub mod verify;

pub type TimingParams = timing::TimingParams<f64>;
pub type CostReport = timing::CostReport<f64>;
pub type Overhead = timing::Overhead<f64>;
pub type TimingParamsF32 = timing::TimingParams<f32>;
pub type CostReportF32 = timing::CostReport<f32>;
