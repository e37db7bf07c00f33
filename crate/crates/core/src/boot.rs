// Licensed under the Apache-2.0 license

//! Top-level secure boot state machine.
//!
//! ```text
//! PowerOn -> FsblInit -> PmpApplied -> Bootstrapping(0..n) -> BootOk
//!                             |                |
//!                             v                v
//!                        SecureHalt    RecoveryTriggered -> ReVerifying -> BootOk
//!                                              |                 |
//!                                              v                 v
//!                                         SecureHalt        SecureHalt
//! ```
//!
//! At most one recovery round runs per boot. The device only reaches
//! `BootOk` when every frame in flash has passed both checks.

use serde::{Deserialize, Serialize};

use crate::crypto::{derive_key, FRAME_SIGNING_PURPOSE};
use crate::device::{AccessSource, DeviceState, PmpRule, SourceSet};
use crate::recovery::{lock_memory, recover, RecoveryError, RecoveryReport};
use crate::timing::{estimate, CostReport, TimingParams};
use crate::verify::{verify_image, ChainFault, ChainReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BootTrigger {
    PowerOn,
    HardwareReset,
    GpioPin7,
}

impl BootTrigger {
    pub const ALL: [BootTrigger; 3] = [
        BootTrigger::PowerOn,
        BootTrigger::HardwareReset,
        BootTrigger::GpioPin7,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HaltReason {
    MissingRecoveryData,
    PostRecoveryVerificationFailed,
    ImageParseFailure,
    ManifestMismatch,
    /// Verification failed and recovery is switched off (baseline mode).
    RecoveryDisabled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "state", content = "detail")]
pub enum BootState {
    PowerOn,
    FsblInit,
    PmpApplied,
    Bootstrapping(u32),
    RecoveryTriggered,
    ReVerifying,
    BootOk,
    SecureHalt(HaltReason),
}

impl BootState {
    pub fn is_terminal(&self) -> bool {
        matches!(self, BootState::BootOk | BootState::SecureHalt(_))
    }

    /// Edges of the boot state graph.
    pub fn can_step_to(&self, next: &BootState) -> bool {
        use BootState::*;
        use HaltReason::*;
        match (self, next) {
            (PowerOn, FsblInit) | (FsblInit, PmpApplied) => true,
            (PmpApplied, Bootstrapping(0)) => true,
            (PmpApplied, SecureHalt(ImageParseFailure | ManifestMismatch)) => true,
            (Bootstrapping(i), Bootstrapping(j)) => *j == i + 1,
            (Bootstrapping(_), BootOk | RecoveryTriggered | SecureHalt(RecoveryDisabled)) => true,
            (RecoveryTriggered, ReVerifying | SecureHalt(MissingRecoveryData)) => true,
            (ReVerifying, BootOk | SecureHalt(PostRecoveryVerificationFailed)) => true,
            _ => false,
        }
    }
}

/// True if `trace` starts at power-on, follows the graph and ends terminal.
pub fn is_valid_trace(trace: &[BootState]) -> bool {
    trace.first() == Some(&BootState::PowerOn)
        && trace.last().is_some_and(BootState::is_terminal)
        && trace.windows(2).all(|w| w[0].can_step_to(&w[1]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "result", content = "reason")]
pub enum BootOutcome {
    BootOk,
    SecureHalt(HaltReason),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootConfig {
    pub care_enabled: bool,
    /// Recorded in the report only; the hardware countermeasures it stands
    /// for have no functional effect here.
    pub secure_ibex_flag: bool,
    pub timing_params: TimingParams<f64>,
}

impl Default for BootConfig {
    fn default() -> Self {
        BootConfig {
            care_enabled: true,
            secure_ibex_flag: false,
            timing_params: TimingParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootReport {
    pub trigger: BootTrigger,
    pub secure_ibex_flag: bool,
    pub state_trace: Vec<BootState>,
    pub chain: ChainReport,
    pub recovery: Option<RecoveryReport>,
    pub cost: CostReport<f64>,
    pub outcome: BootOutcome,
}

/// Locked rule installed by the first stage loader: ROM is readable and
/// executable by the secure boot path alone.
pub fn rom_guard_rule(device: &DeviceState) -> PmpRule {
    let map = device.memory_map();
    PmpRule {
        base: map.rom_base,
        limit: map.rom_base + map.rom_size,
        allow_read: SourceSet::SECURE_BOOT_ONLY,
        allow_write: SourceSet::NONE,
        allow_execute: SourceSet::SECURE_BOOT_ONLY,
        locked: true,
    }
}

const SECURE_PATH: &str = "the secure boot path always reaches ROM and flash after reset";

/// Boots the device once.
///
/// The trigger only selects the entry; every trigger resets the PMP table
/// and runs the same sequence. With CARE enabled, a verified image is handed
/// off with flash and RAM locked.
pub fn boot(device: &mut DeviceState, trigger: BootTrigger, config: &BootConfig) -> BootReport {
    let mut trace = vec![BootState::PowerOn];
    device.reset();

    // First stage: identity and key material from ROM.
    let rom = device.secure_rom(AccessSource::SecureBoot).expect(SECURE_PATH);
    let frame_key = derive_key(rom.master_key(), rom.identity(), FRAME_SIGNING_PURPOSE);
    let n_frames = rom.manifest().len().max(1) as u32;
    trace.push(BootState::FsblInit);

    let guard = rom_guard_rule(device);
    device.apply_pmp_rules(vec![guard]).expect(SECURE_PATH);
    trace.push(BootState::PmpApplied);

    let chain = verify_image(device, &frame_key).expect(SECURE_PATH);
    let mut recovery = None;

    let outcome = match &chain.fault {
        Some(ChainFault::ImageParseFailure { .. }) => {
            BootOutcome::SecureHalt(HaltReason::ImageParseFailure)
        }
        Some(ChainFault::ManifestMismatch { .. }) => {
            BootOutcome::SecureHalt(HaltReason::ManifestMismatch)
        }
        None => {
            trace.extend(chain.per_frame.iter().map(|r| BootState::Bootstrapping(r.frame_number)));
            if chain.all_verified() {
                if config.care_enabled {
                    lock_memory(device).expect(SECURE_PATH);
                }
                BootOutcome::BootOk
            } else if !config.care_enabled {
                BootOutcome::SecureHalt(HaltReason::RecoveryDisabled)
            } else {
                trace.push(BootState::RecoveryTriggered);
                match recover(
                    device,
                    AccessSource::SecureBoot,
                    chain.failing_frames(),
                    &frame_key,
                    config.timing_params.reflash_us_per_frame,
                ) {
                    Ok(report) => {
                        trace.push(BootState::ReVerifying);
                        let ok = report.post_recovery_chain.all_verified();
                        recovery = Some(report);
                        if ok {
                            BootOutcome::BootOk
                        } else {
                            BootOutcome::SecureHalt(HaltReason::PostRecoveryVerificationFailed)
                        }
                    }
                    Err(RecoveryError::MissingRecoveryData(_)) => {
                        BootOutcome::SecureHalt(HaltReason::MissingRecoveryData)
                    }
                    Err(e) => panic!("{SECURE_PATH}: {e}"),
                }
            }
        }
    };
    trace.push(match outcome {
        BootOutcome::BootOk => BootState::BootOk,
        BootOutcome::SecureHalt(reason) => BootState::SecureHalt(reason),
    });

    let n_recovered = recovery
        .as_ref()
        .map_or(0, |r| r.recovered_frames.len() as u32);
    let cost = estimate(
        n_frames,
        config.care_enabled,
        n_recovered.min(n_frames),
        &config.timing_params,
    )
    .expect("boot config carries valid timing parameters");

    BootReport {
        trigger,
        secure_ibex_flag: config.secure_ibex_flag,
        state_trace: trace,
        chain,
        recovery,
        cost,
        outcome,
    }
}
