// Licensed under the Apache-2.0 license

//! Adversary model: flash mutations and DMA writes, plus seeded campaigns.
//!
//! Every mutation goes through the device bus as `UntrustedCode` (frame
//! attacks) or `Dma` (raw writes), so the PMP table decides whether it
//! lands. Campaigns are drawn from SplitMix64 so they can be regenerated
//! bit-for-bit from the seed in any language.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::{sha256_digest, Digest256};
use crate::device::{
    frame_slot_offset, AccessSource, DeviceError, DeviceState, RomLayout, FLASH_BASE, RAM_BASE,
    RAM_SIZE, ROM_BASE,
};
use crate::frame::{HeaderField, FRAME_LEN, HEADER_LEN, IMAGE_HEADER_LEN, PAYLOAD_LEN};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AttackError {
    #[error("attack target out of range: {0}")]
    OutOfRange(String),
    #[error("malformed attack: {0}")]
    Invalid(String),
    #[error("a campaign needs at least one attack and one frame")]
    EmptyCampaign,
    #[error("campaign line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "variant")]
pub enum AttackVariant {
    /// Flip one bit of a frame slot. `byte` indexes the 1024-byte slot.
    BitFlip { frame: u32, byte: u32, bit: u8 },
    PayloadReplace {
        frame: u32,
        #[serde(with = "hex::serde")]
        payload: Vec<u8>,
    },
    /// Overwrite a header field with `value`, little-endian, truncated to the
    /// field width. For the 32-byte tag only its first eight bytes change.
    HeaderTamper {
        frame: u32,
        field: HeaderField,
        value: u64,
    },
    /// Swap two whole frame slots.
    Relocate { from: u32, to: u32 },
    DmaWrite {
        address: u32,
        #[serde(with = "hex::serde")]
        bytes: Vec<u8>,
    },
}

impl AttackVariant {
    pub fn name(&self) -> &'static str {
        match self {
            AttackVariant::BitFlip { .. } => "bit_flip",
            AttackVariant::PayloadReplace { .. } => "payload_replace",
            AttackVariant::HeaderTamper { .. } => "header_tamper",
            AttackVariant::Relocate { .. } => "relocate",
            AttackVariant::DmaWrite { .. } => "dma_write",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackSpec {
    #[serde(flatten)]
    pub variant: AttackVariant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl From<AttackVariant> for AttackSpec {
    fn from(variant: AttackVariant) -> Self {
        AttackSpec {
            variant,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutationRecord {
    pub applied: AttackSpec,
    pub pre_digest: Digest256,
    pub post_digest: Digest256,
    /// The write was refused by access control.
    pub blocked: bool,
}

fn frame_slots(device: &DeviceState) -> u32 {
    let size = device.memory_map().flash_size as usize;
    (size.saturating_sub(IMAGE_HEADER_LEN) / FRAME_LEN) as u32
}

fn check_frame(device: &DeviceState, frame: u32) -> Result<(), AttackError> {
    let slots = frame_slots(device);
    if frame >= slots {
        return Err(AttackError::OutOfRange(format!(
            "frame {frame} (image has {slots})"
        )));
    }
    Ok(())
}

/// Raw digest over the byte ranges an attack touches.
fn region_digest(device: &DeviceState, ranges: &[(u32, usize)]) -> Digest256 {
    let mut buf = Vec::new();
    for &(addr, len) in ranges {
        if let Some(bytes) = device.peek(addr, len) {
            buf.extend_from_slice(bytes);
        }
    }
    sha256_digest(&buf)
}

/// Maps a write result to "blocked", passing real errors through.
fn write_outcome(result: Result<(), DeviceError>) -> Result<bool, AttackError> {
    match result {
        Ok(()) => Ok(false),
        Err(DeviceError::AccessDenied { .. }) => Ok(true),
        Err(DeviceError::OutOfRange { base, len }) => Err(AttackError::OutOfRange(format!(
            "{base:#010x} (+{len})"
        ))),
        Err(e) => Err(AttackError::Invalid(e.to_string())),
    }
}

fn read_untrusted(device: &mut DeviceState, offset: u32, len: usize) -> Result<Option<Vec<u8>>, AttackError> {
    match device.flash_read(AccessSource::UntrustedCode, offset, len) {
        Ok(b) => Ok(Some(b)),
        Err(DeviceError::AccessDenied { .. }) => Ok(None),
        Err(e) => Err(AttackError::OutOfRange(e.to_string())),
    }
}

/// Applies one attack to the device.
pub fn inject(device: &mut DeviceState, attack: &AttackSpec) -> Result<MutationRecord, AttackError> {
    let ranges: Vec<(u32, usize)> = match &attack.variant {
        AttackVariant::BitFlip { frame, byte, bit } => {
            check_frame(device, *frame)?;
            if *byte as usize >= FRAME_LEN || *bit > 7 {
                return Err(AttackError::Invalid(format!("byte {byte} bit {bit}")));
            }
            vec![(FLASH_BASE + frame_slot_offset(*frame), FRAME_LEN)]
        }
        AttackVariant::PayloadReplace { frame, payload } => {
            check_frame(device, *frame)?;
            if payload.len() != PAYLOAD_LEN {
                return Err(AttackError::Invalid(format!(
                    "payload of {} bytes",
                    payload.len()
                )));
            }
            vec![(FLASH_BASE + frame_slot_offset(*frame), FRAME_LEN)]
        }
        AttackVariant::HeaderTamper { frame, .. } => {
            check_frame(device, *frame)?;
            vec![(FLASH_BASE + frame_slot_offset(*frame), FRAME_LEN)]
        }
        AttackVariant::Relocate { from, to } => {
            check_frame(device, *from)?;
            check_frame(device, *to)?;
            vec![
                (FLASH_BASE + frame_slot_offset(*from), FRAME_LEN),
                (FLASH_BASE + frame_slot_offset(*to), FRAME_LEN),
            ]
        }
        AttackVariant::DmaWrite { address, bytes } => {
            if device
                .memory_map()
                .region_of(*address, bytes.len() as u32)
                .is_none()
            {
                return Err(AttackError::OutOfRange(format!(
                    "{address:#010x} (+{})",
                    bytes.len()
                )));
            }
            vec![(*address, bytes.len())]
        }
    };
    let pre_digest = region_digest(device, &ranges);

    let src = AccessSource::UntrustedCode;
    let blocked = match &attack.variant {
        AttackVariant::BitFlip { frame, byte, bit } => {
            let at = frame_slot_offset(*frame) + byte;
            match read_untrusted(device, at, 1)? {
                Some(b) => write_outcome(device.flash_write(src, at, &[b[0] ^ (1 << bit)]))?,
                None => true,
            }
        }
        AttackVariant::PayloadReplace { frame, payload } => {
            let at = frame_slot_offset(*frame) + HEADER_LEN as u32;
            write_outcome(device.flash_write(src, at, payload))?
        }
        AttackVariant::HeaderTamper { frame, field, value } => {
            let range = field.range();
            let width = range.len().min(8);
            let at = frame_slot_offset(*frame) + range.start as u32;
            write_outcome(device.flash_write(src, at, &value.to_le_bytes()[..width]))?
        }
        AttackVariant::Relocate { from, to } => {
            let (a, b) = (frame_slot_offset(*from), frame_slot_offset(*to));
            match (read_untrusted(device, a, FRAME_LEN)?, read_untrusted(device, b, FRAME_LEN)?) {
                (Some(from_bytes), Some(to_bytes)) => {
                    write_outcome(device.flash_write(src, b, &from_bytes))?
                        | write_outcome(device.flash_write(src, a, &to_bytes))?
                }
                _ => true,
            }
        }
        AttackVariant::DmaWrite { address, bytes } => {
            write_outcome(device.bus_write(AccessSource::Dma, *address, bytes))?
        }
    };

    Ok(MutationRecord {
        applied: attack.clone(),
        pre_digest,
        post_digest: region_digest(device, &ranges),
        blocked,
    })
}

/// SplitMix64 (Steele, Lea and Flood). The reference sequence for seed
/// 1234567 starts 6457827717110365317, 3203168211198807973.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Draw in `0..n` by multiply-shift.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }

    pub fn bytes(&mut self, len: usize) -> Vec<u8> {
        let mut out = Vec::with_capacity(len + 8);
        while out.len() < len {
            out.extend_from_slice(&self.next_u64().to_le_bytes());
        }
        out.truncate(len);
        out
    }
}

/// Address ranges a campaign for an image of `frame_count` frames can
/// target, matching a device provisioned from that image.
pub fn campaign_regions(frame_count: u32) -> [(u32, u32); 3] {
    let n = frame_count as usize;
    let rom = RomLayout::new(n, n).total as u32;
    let flash = (IMAGE_HEADER_LEN + n * FRAME_LEN) as u32;
    [(ROM_BASE, rom), (FLASH_BASE, flash), (RAM_BASE, RAM_SIZE)]
}

/// A reproducible campaign of `n_attacks` attacks.
///
/// Draw order per attack: variant (`below(5)`), then the variant's
/// coordinates in field order. DMA writes pick a region (`below(3)`: ROM,
/// flash, RAM), a length in 1..=16, then an address that keeps the write
/// inside the region.
pub fn random_campaign(
    frame_count: u32,
    seed: u64,
    n_attacks: usize,
) -> Result<Vec<AttackSpec>, AttackError> {
    if n_attacks == 0 || frame_count == 0 {
        return Err(AttackError::EmptyCampaign);
    }
    let mut rng = SplitMix64::new(seed);
    let fc = frame_count as u64;
    let regions = campaign_regions(frame_count);
    let mut out = Vec::with_capacity(n_attacks);
    for _ in 0..n_attacks {
        let variant = match rng.below(5) {
            0 => AttackVariant::BitFlip {
                frame: rng.below(fc) as u32,
                byte: rng.below(FRAME_LEN as u64) as u32,
                bit: rng.below(8) as u8,
            },
            1 => AttackVariant::PayloadReplace {
                frame: rng.below(fc) as u32,
                payload: rng.bytes(PAYLOAD_LEN),
            },
            2 => AttackVariant::HeaderTamper {
                frame: rng.below(fc) as u32,
                field: HeaderField::ALL[rng.below(HeaderField::ALL.len() as u64) as usize],
                value: rng.next_u64(),
            },
            3 => {
                let from = rng.below(fc);
                let to = if fc > 1 {
                    (from + 1 + rng.below(fc - 1)) % fc
                } else {
                    from
                };
                AttackVariant::Relocate {
                    from: from as u32,
                    to: to as u32,
                }
            }
            _ => {
                let (base, size) = regions[rng.below(3) as usize];
                let len = (1 + rng.below(16)).min(size as u64);
                let address = base + rng.below(size as u64 - len + 1) as u32;
                AttackVariant::DmaWrite {
                    address,
                    bytes: rng.bytes(len as usize),
                }
            }
        };
        out.push(AttackSpec {
            variant,
            seed: Some(seed),
        });
    }
    Ok(out)
}

/// Campaign file: one JSON object per line. Blank lines and lines starting
/// with `#` are ignored.
pub fn write_campaign(attacks: &[AttackSpec]) -> String {
    let mut out = String::new();
    for a in attacks {
        out.push_str(&serde_json::to_string(a).expect("attack specs serialize"));
        out.push('\n');
    }
    out
}

pub fn parse_campaign(text: &str) -> Result<Vec<AttackSpec>, AttackError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| {
            let l = l.trim();
            !l.is_empty() && !l.starts_with('#')
        })
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| AttackError::Parse {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}
