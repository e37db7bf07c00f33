// Licensed under the Apache-2.0 license

//! The resilience engine.
//!
//! Recovery runs in three steps: look up each failing frame's placement and
//! golden payload in ROM, re-flash exactly those frame slots, then lock flash
//! writes and RAM execution against untrusted sources. The image is verified
//! again afterwards and the result travels with the report.
//!
//! ROM holds payloads only, so each restored frame is re-signed with the
//! frame key rather than copied verbatim.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::Key256;
use crate::device::{frame_slot_offset, AccessSource, DeviceError, DeviceState, PmpRule, SourceSet};
use crate::frame::{encode_frame, Frame, FRAME_LEN, PAYLOAD_LEN};
use crate::verify::{verify_image, ChainReport, VerifyError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RecoveryError {
    #[error("no recovery data for frame {0}")]
    MissingRecoveryData(u32),
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub recovered_frames: BTreeSet<u32>,
    pub bytes_reflashed: u64,
    pub reflash_time_us: f64,
    pub locked: bool,
    pub post_recovery_chain: ChainReport,
}

/// The two rules installed by [`lock_memory`].
pub fn lockdown_rules(device: &DeviceState) -> [PmpRule; 2] {
    let map = device.memory_map();
    let flash = PmpRule {
        base: map.flash_base,
        limit: map.flash_base + map.flash_size,
        allow_read: SourceSet::ALL,
        allow_write: SourceSet::SECURE_BOOT_ONLY,
        allow_execute: SourceSet::ALL,
        locked: true,
    };
    let ram = PmpRule {
        base: map.ram_base,
        limit: map.ram_base + map.ram_size,
        allow_read: SourceSet::ALL,
        allow_write: SourceSet::ALL,
        allow_execute: SourceSet::SECURE_BOOT_ONLY,
        locked: true,
    };
    [flash, ram]
}

pub fn is_locked(device: &DeviceState) -> bool {
    let rules = device.pmp_rules();
    lockdown_rules(device).iter().all(|r| rules.contains(r))
}

/// Installs the lockdown rules ahead of everything unlocked. Calling it
/// again is a no-op.
pub fn lock_memory(device: &mut DeviceState) -> Result<(), DeviceError> {
    if is_locked(device) {
        return Ok(());
    }
    let mut rules: Vec<PmpRule> = lockdown_rules(device).to_vec();
    rules.extend(device.pmp_rules().iter().copied());
    device.apply_pmp_rules(rules)
}

/// Restores every frame in `failing` from ROM, locks memory and re-verifies.
///
/// Nothing is written unless recovery data exists for every failing frame.
pub fn recover(
    device: &mut DeviceState,
    source: AccessSource,
    failing: &BTreeSet<u32>,
    frame_key: &Key256,
    reflash_us_per_frame: f64,
) -> Result<RecoveryReport, RecoveryError> {
    let rom = device.secure_rom(source)?;
    let mut restore = Vec::with_capacity(failing.len());
    for &n in failing {
        let entry = rom
            .manifest()
            .entry(n)
            .ok_or(RecoveryError::MissingRecoveryData(n))?;
        let payload = rom
            .recovery_payload(n)
            .ok_or(RecoveryError::MissingRecoveryData(n))?;
        restore.push(Frame::signed(
            frame_key,
            n,
            entry.offset,
            *payload,
            entry.payload_len,
        ));
    }

    for frame in &restore {
        let slot = frame_slot_offset(frame.header.frame_number);
        device.flash_erase(source, slot, FRAME_LEN)?;
        device.flash_write(source, slot, &encode_frame(frame))?;
    }

    lock_memory(device)?;
    let post_recovery_chain = verify_image(device, frame_key)?;
    Ok(RecoveryReport {
        recovered_frames: failing.clone(),
        bytes_reflashed: (PAYLOAD_LEN * failing.len()) as u64,
        reflash_time_us: reflash_us_per_frame * failing.len() as f64,
        locked: is_locked(device),
        post_recovery_chain,
    })
}
