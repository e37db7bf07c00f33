// Licensed under the Apache-2.0 license

//! Per-frame integrity and authenticity checks and the chain of trust.
//!
//! Integrity compares the SHA-256 of the payload with the golden digest held
//! in ROM. Authenticity recomputes the HMAC tag over that digest and the
//! placement fields and compares it with the tag carried in the header. The
//! chain folds the per-frame verdicts in frame order:
//!
//! ```text
//! V_0 = true
//! V_{i+1} = V_i && authentic(f_i) && intact(f_i)
//! ```
//!
//! with frames numbered from 0, so `V_i` is the state after `i` frames.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::{constant_time_eq, sha256_digest, Key256};
use crate::device::{frame_slot_offset, AccessSource, DeviceError, DeviceState};
use crate::frame::{
    decode_frame, decode_image_header, frame_tag, DeviceIdentity, Frame, GoldenManifest,
    ManifestEntry, FRAME_LEN, IMAGE_HEADER_LEN,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureDetail {
    DigestMismatch,
    TagMismatch,
    MalformedFrame,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyResult {
    pub frame_number: u32,
    pub integrity_ok: bool,
    pub authenticity_ok: bool,
    pub failure_detail: Option<FailureDetail>,
}

impl VerifyResult {
    pub fn passed(&self) -> bool {
        self.integrity_ok && self.authenticity_ok
    }

    fn malformed(frame_number: u32) -> Self {
        VerifyResult {
            frame_number,
            integrity_ok: false,
            authenticity_ok: false,
            failure_detail: Some(FailureDetail::MalformedFrame),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainState {
    /// `verdicts[i]` is the chain value after `i` frames; `verdicts[0]` is true.
    pub verdicts: Vec<bool>,
    pub failing_frames: BTreeSet<u32>,
}

impl ChainState {
    pub fn final_verdict(&self) -> bool {
        *self.verdicts.last().expect("verdicts always holds V_0")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status", content = "frames")]
pub enum ChainOutcome {
    AllVerified,
    FramesFailed(BTreeSet<u32>),
}

/// Image-level failures that prevent frame-by-frame verification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ChainFault {
    ImageParseFailure { detail: String },
    ManifestMismatch { detail: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainReport {
    pub chain: ChainState,
    pub per_frame: Vec<VerifyResult>,
    pub outcome: ChainOutcome,
    pub fault: Option<ChainFault>,
}

impl ChainReport {
    pub fn all_verified(&self) -> bool {
        self.outcome == ChainOutcome::AllVerified
    }

    pub fn failing_frames(&self) -> &BTreeSet<u32> {
        &self.chain.failing_frames
    }

    fn from_results(per_frame: Vec<VerifyResult>, fault: Option<ChainFault>) -> Self {
        let chain = fold_chain(&per_frame);
        let outcome = if chain.final_verdict() {
            ChainOutcome::AllVerified
        } else {
            ChainOutcome::FramesFailed(chain.failing_frames.clone())
        };
        ChainReport {
            chain,
            per_frame,
            outcome,
            fault,
        }
    }

    fn parse_failure(detail: String) -> Self {
        Self::from_results(
            vec![VerifyResult::malformed(0)],
            Some(ChainFault::ImageParseFailure { detail }),
        )
    }

    fn manifest_mismatch(manifest: &GoldenManifest, detail: String) -> Self {
        let mut per_frame: Vec<_> = manifest
            .entries
            .iter()
            .map(|e| VerifyResult::malformed(e.frame_number))
            .collect();
        if per_frame.is_empty() {
            per_frame.push(VerifyResult::malformed(0));
        }
        Self::from_results(per_frame, Some(ChainFault::ManifestMismatch { detail }))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VerifyError {
    #[error("frame header says {found}, golden entry is for frame {expected}")]
    FrameNumberMismatch { expected: u32, found: u32 },
    #[error(transparent)]
    Device(#[from] DeviceError),
}

/// Runs both checks on one frame. Both are always evaluated.
pub fn verify_frame(
    frame: &Frame,
    golden: &ManifestEntry,
    frame_key: &Key256,
) -> Result<VerifyResult, VerifyError> {
    let h = &frame.header;
    if h.frame_number != golden.frame_number {
        return Err(VerifyError::FrameNumberMismatch {
            expected: golden.frame_number,
            found: h.frame_number,
        });
    }
    let digest = sha256_digest(&frame.payload);
    let integrity_ok = constant_time_eq(digest.as_bytes(), golden.golden_digest.as_bytes());
    let expected_tag = frame_tag(frame_key, &digest, h.frame_number, h.offset, h.payload_len);
    let authenticity_ok = constant_time_eq(expected_tag.as_bytes(), h.tag.as_bytes());
    let failure_detail = if !integrity_ok {
        Some(FailureDetail::DigestMismatch)
    } else if !authenticity_ok {
        Some(FailureDetail::TagMismatch)
    } else {
        None
    };
    Ok(VerifyResult {
        frame_number: h.frame_number,
        integrity_ok,
        authenticity_ok,
        failure_detail,
    })
}

/// Verifies one serialized frame slot against its golden entry. Slots that
/// do not decode, or that hold another frame, are malformed.
pub fn verify_slot(slot: &[u8], golden: &ManifestEntry, frame_key: &Key256) -> VerifyResult {
    decode_frame(slot)
        .ok()
        .and_then(|frame| verify_frame(&frame, golden, frame_key).ok())
        .unwrap_or_else(|| VerifyResult::malformed(golden.frame_number))
}

/// Folds per-frame results (in frame order) into the chain of trust.
pub fn fold_chain(per_frame: &[VerifyResult]) -> ChainState {
    let mut verdicts = Vec::with_capacity(per_frame.len() + 1);
    verdicts.push(true);
    let mut failing_frames = BTreeSet::new();
    for r in per_frame {
        let prev = *verdicts.last().unwrap();
        verdicts.push(prev && r.authenticity_ok && r.integrity_ok);
        if !r.passed() {
            failing_frames.insert(r.frame_number);
        }
    }
    ChainState {
        verdicts,
        failing_frames,
    }
}

/// Verifies a serialized image held in memory.
///
/// Every frame is checked, even after the chain has gone false, so that the
/// report lists all corrupted frames. Frame checks run in parallel; the fold
/// is sequential.
pub fn verify_image_bytes(
    image: &[u8],
    manifest: &GoldenManifest,
    expected_identity: Option<&DeviceIdentity>,
    frame_key: &Key256,
) -> ChainReport {
    let header = match decode_image_header(image) {
        Ok(h) => h,
        Err(e) => return ChainReport::parse_failure(e.to_string()),
    };
    if header.frame_count == 0 {
        return ChainReport::parse_failure("image holds no frames".into());
    }
    let expected_len = IMAGE_HEADER_LEN as u64 + header.frame_count as u64 * FRAME_LEN as u64;
    if image.len() as u64 != expected_len {
        return ChainReport::parse_failure(format!(
            "image declares {} frames ({expected_len} bytes) but is {} bytes",
            header.frame_count,
            image.len()
        ));
    }
    if header.frame_count as usize != manifest.len() {
        return ChainReport::manifest_mismatch(
            manifest,
            format!(
                "image has {} frames, manifest has {}",
                header.frame_count,
                manifest.len()
            ),
        );
    }
    if let Some(id) = expected_identity {
        if *id != header.identity {
            return ChainReport::manifest_mismatch(
                manifest,
                "image identity differs from device identity".into(),
            );
        }
    }
    if manifest
        .entries
        .iter()
        .enumerate()
        .any(|(i, e)| e.frame_number != i as u32)
    {
        return ChainReport::manifest_mismatch(manifest, "manifest is not contiguous".into());
    }

    let body = &image[IMAGE_HEADER_LEN..];
    let per_frame: Vec<VerifyResult> = body
        .par_chunks_exact(FRAME_LEN)
        .zip(manifest.entries.par_iter())
        .map(|(slot, golden)| verify_slot(slot, golden, frame_key))
        .collect();
    ChainReport::from_results(per_frame, None)
}

/// Verifies the image in the device's flash against the ROM manifest,
/// reading both through the secure boot path.
pub fn verify_image(device: &mut DeviceState, frame_key: &Key256) -> Result<ChainReport, VerifyError> {
    let rom = device.secure_rom(AccessSource::SecureBoot)?;
    let manifest = rom.manifest().clone();
    let identity = *rom.identity();

    let flash_len = device.memory_map().flash_size as usize;
    if flash_len < IMAGE_HEADER_LEN {
        return Ok(ChainReport::parse_failure("flash smaller than image header".into()));
    }
    let mut image = device.flash_read(AccessSource::SecureBoot, 0, IMAGE_HEADER_LEN)?;
    let slots = (flash_len - IMAGE_HEADER_LEN) / FRAME_LEN;
    for n in 0..slots as u32 {
        image.extend(device.flash_read(AccessSource::SecureBoot, frame_slot_offset(n), FRAME_LEN)?);
    }
    let tail = flash_len - image.len();
    if tail > 0 {
        image.extend(device.flash_read(AccessSource::SecureBoot, image.len() as u32, tail)?);
    }
    Ok(verify_image_bytes(&image, &manifest, Some(&identity), frame_key))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::{derive_key, FRAME_SIGNING_PURPOSE};
    use crate::frame::{build_image, encode_frame, serialize_image, HeaderField, HEADER_LEN};

    fn setup() -> (crate::frame::FirmwareImage, GoldenManifest, Key256) {
        let identity = DeviceIdentity {
            vendor_id: 1,
            uuid: [0xEE; 16],
            board_version: 4,
            firmware_revision: 9,
        };
        let master = Key256::master([0x33; 32]);
        let fw: Vec<u8> = (0..5734u32).map(|i| (i % 251) as u8).collect();
        let (image, manifest) = build_image(&fw, identity, &master).unwrap();
        let key = derive_key(&master, &identity, FRAME_SIGNING_PURPOSE);
        (image, manifest, key)
    }

    #[test]
    fn untampered_frame_passes() {
        let (image, manifest, key) = setup();
        let r = verify_frame(&image.frames[0], &manifest.entries[0], &key).unwrap();
        assert!(r.integrity_ok && r.authenticity_ok);
        assert_eq!(r.failure_detail, None);
    }

    #[test]
    fn payload_bit_flip_fails_both() {
        let (image, manifest, key) = setup();
        let mut f = image.frames[1].clone();
        f.payload[17] ^= 0x04;
        let r = verify_frame(&f, &manifest.entries[1], &key).unwrap();
        assert!(!r.integrity_ok);
        assert!(!r.authenticity_ok);
        assert_eq!(r.failure_detail, Some(FailureDetail::DigestMismatch));
    }

    #[test]
    fn header_offset_tamper_fails_authenticity_only() {
        let (image, manifest, key) = setup();
        let mut f = image.frames[2].clone();
        f.header.offset += 4;
        let r = verify_frame(&f, &manifest.entries[2], &key).unwrap();
        assert!(r.integrity_ok);
        assert!(!r.authenticity_ok);
        assert_eq!(r.failure_detail, Some(FailureDetail::TagMismatch));
    }

    #[test]
    fn frame_number_mismatch_is_an_error() {
        let (image, manifest, key) = setup();
        assert_eq!(
            verify_frame(&image.frames[0], &manifest.entries[3], &key),
            Err(VerifyError::FrameNumberMismatch { expected: 3, found: 0 })
        );
    }

    #[test]
    fn golden_image_all_verified() {
        let (image, manifest, key) = setup();
        let report = verify_image_bytes(&serialize_image(&image), &manifest, None, &key);
        assert!(report.all_verified());
        assert_eq!(report.chain.verdicts, vec![true; 7]);
        assert!(report.fault.is_none());
    }

    #[test]
    fn frames_two_and_four_corrupted() {
        let (image, manifest, key) = setup();
        let mut bytes = serialize_image(&image);
        for n in [2usize, 4] {
            bytes[IMAGE_HEADER_LEN + n * FRAME_LEN + HEADER_LEN + 5] ^= 1;
        }
        let report = verify_image_bytes(&bytes, &manifest, None, &key);
        assert_eq!(
            report.outcome,
            ChainOutcome::FramesFailed(BTreeSet::from([2, 4]))
        );
        assert_eq!(
            report.chain.verdicts,
            vec![true, true, true, false, false, false, false]
        );
    }

    #[test]
    fn degenerate_images_are_parse_failures() {
        let (image, manifest, key) = setup();
        let empty = crate::frame::FirmwareImage {
            identity: image.identity,
            frames: vec![],
        };
        let report = verify_image_bytes(&serialize_image(&empty), &manifest, None, &key);
        assert!(matches!(report.fault, Some(ChainFault::ImageParseFailure { .. })));
        assert_eq!(report.per_frame[0].failure_detail, Some(FailureDetail::MalformedFrame));
        assert_eq!(report.outcome, ChainOutcome::FramesFailed(BTreeSet::from([0])));

        let bytes = serialize_image(&image);
        let report = verify_image_bytes(&bytes[..bytes.len() - 1], &manifest, None, &key);
        assert!(matches!(report.fault, Some(ChainFault::ImageParseFailure { .. })));
    }

    #[test]
    fn manifest_count_mismatch_fails_every_frame() {
        let (image, mut manifest, key) = setup();
        manifest.entries.pop();
        let report = verify_image_bytes(&serialize_image(&image), &manifest, None, &key);
        assert!(matches!(report.fault, Some(ChainFault::ManifestMismatch { .. })));
        assert_eq!(report.failing_frames().len(), 5);
        assert!(!report.chain.final_verdict());
    }

    #[test]
    fn relocated_frame_is_malformed() {
        let (image, manifest, key) = setup();
        let slot = encode_frame(&image.frames[0]);
        let r = verify_slot(&slot, &manifest.entries[3], &key);
        assert_eq!(r.failure_detail, Some(FailureDetail::MalformedFrame));
    }

    #[test]
    fn every_header_field_is_covered() {
        let (image, manifest, key) = setup();
        let good = encode_frame(&image.frames[1]);
        for field in HeaderField::ALL {
            for byte in field.range() {
                let mut slot = good;
                slot[byte] ^= 0x80;
                assert!(
                    !verify_slot(&slot, &manifest.entries[1], &key).passed(),
                    "{field:?} byte {byte}"
                );
            }
        }
    }
}
