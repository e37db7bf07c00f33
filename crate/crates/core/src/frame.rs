// Licensed under the Apache-2.0 license

//! Frame and image formats.
//!
//! Firmware is cut into 968-byte payloads. Each payload travels in a 1 KiB
//! frame whose 56-byte header carries the HMAC tag that binds the payload
//! digest to the frame's position. All multi-byte integers are little-endian.
//!
//! Frame header layout:
//!
//! | offset | size | field          |
//! |--------|------|----------------|
//! | 0      | 2    | magic          |
//! | 2      | 2    | format_version |
//! | 4      | 4    | frame_number   |
//! | 8      | 4    | offset         |
//! | 12     | 2    | payload_len    |
//! | 14     | 2    | flags (zero)   |
//! | 16     | 8    | reserved       |
//! | 24     | 32   | tag            |

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::{
    derive_key, hmac_tag_parts, sha256_digest, Digest256, Key256, Tag256, FRAME_SIGNING_PURPOSE,
};

pub const FRAME_LEN: usize = 1024;
pub const HEADER_LEN: usize = 56;
pub const PAYLOAD_LEN: usize = FRAME_LEN - HEADER_LEN;
pub const FRAME_MAGIC: u16 = 0xCA8E;
pub const FORMAT_VERSION: u16 = 1;

pub const IMAGE_MAGIC: &[u8; 8] = b"CAREIMG1";
pub const IMAGE_HEADER_LEN: usize = 64;
pub const MANIFEST_MAGIC: &[u8; 8] = b"CAREMAN1";
pub const MANIFEST_HEADER_LEN: usize = 12;
pub const MANIFEST_ENTRY_LEN: usize = 44;

pub type Payload = [u8; PAYLOAD_LEN];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrameError {
    #[error("firmware is empty")]
    EmptyFirmware,
    #[error("firmware of {0} bytes does not fit 32-bit frame addressing")]
    FirmwareTooLarge(usize),
    #[error("bad magic in {field}")]
    BadMagic { field: &'static str },
    #[error("unsupported version {found} in {field}")]
    UnsupportedVersion { field: &'static str, found: u16 },
    #[error("bad length for {field}: {found}")]
    BadLength { field: &'static str, found: usize },
    #[error("non-zero reserved bits in {field}")]
    NonZeroReserved { field: &'static str },
    #[error("file truncated: need {needed} bytes, have {found}")]
    TruncatedFile { needed: usize, found: usize },
    #[error("declared {declared} frames but {present} present")]
    FrameCountMismatch { declared: u32, present: usize },
    #[error("frame sequence broken: expected frame {expected}, found {found:?}")]
    GapInFrames { expected: u32, found: Option<u32> },
    #[error("manifest entries are not strictly sorted by frame number")]
    UnsortedManifest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DeviceIdentity {
    pub vendor_id: u32,
    #[serde(with = "hex::serde")]
    pub uuid: [u8; 16],
    pub board_version: u16,
    pub firmware_revision: u32,
}

impl DeviceIdentity {
    pub const ENCODED_LEN: usize = 26;

    /// Fixed-order little-endian encoding used for key derivation and files.
    pub fn canonical_bytes(&self) -> [u8; Self::ENCODED_LEN] {
        let mut out = [0u8; Self::ENCODED_LEN];
        out[0..4].copy_from_slice(&self.vendor_id.to_le_bytes());
        out[4..20].copy_from_slice(&self.uuid);
        out[20..22].copy_from_slice(&self.board_version.to_le_bytes());
        out[22..26].copy_from_slice(&self.firmware_revision.to_le_bytes());
        out
    }

    pub fn from_canonical_bytes(b: &[u8; Self::ENCODED_LEN]) -> Self {
        Self {
            vendor_id: le_u32(&b[0..4]),
            uuid: b[4..20].try_into().unwrap(),
            board_version: le_u16(&b[20..22]),
            firmware_revision: le_u32(&b[22..26]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameHeader {
    pub magic: u16,
    pub format_version: u16,
    pub frame_number: u32,
    pub offset: u32,
    pub payload_len: u16,
    pub flags: u16,
    pub reserved: [u8; 8],
    pub tag: Tag256,
}

impl FrameHeader {
    pub fn encode(&self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        out[0..2].copy_from_slice(&self.magic.to_le_bytes());
        out[2..4].copy_from_slice(&self.format_version.to_le_bytes());
        out[4..8].copy_from_slice(&self.frame_number.to_le_bytes());
        out[8..12].copy_from_slice(&self.offset.to_le_bytes());
        out[12..14].copy_from_slice(&self.payload_len.to_le_bytes());
        out[14..16].copy_from_slice(&self.flags.to_le_bytes());
        out[16..24].copy_from_slice(&self.reserved);
        out[24..56].copy_from_slice(self.tag.as_bytes());
        out
    }
}

/// Byte range of each header field inside a serialized frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeaderField {
    Magic,
    FormatVersion,
    FrameNumber,
    Offset,
    PayloadLen,
    Flags,
    Reserved,
    Tag,
}

impl HeaderField {
    pub const ALL: [HeaderField; 8] = [
        HeaderField::Magic,
        HeaderField::FormatVersion,
        HeaderField::FrameNumber,
        HeaderField::Offset,
        HeaderField::PayloadLen,
        HeaderField::Flags,
        HeaderField::Reserved,
        HeaderField::Tag,
    ];

    pub fn range(self) -> std::ops::Range<usize> {
        match self {
            HeaderField::Magic => 0..2,
            HeaderField::FormatVersion => 2..4,
            HeaderField::FrameNumber => 4..8,
            HeaderField::Offset => 8..12,
            HeaderField::PayloadLen => 12..14,
            HeaderField::Flags => 14..16,
            HeaderField::Reserved => 16..24,
            HeaderField::Tag => 24..56,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub header: FrameHeader,
    pub payload: Payload,
}

/// Message authenticated by a frame tag: the payload digest followed by the
/// header fields that place the payload.
pub fn frame_tag(
    key: &Key256,
    digest: &Digest256,
    frame_number: u32,
    offset: u32,
    payload_len: u16,
) -> Tag256 {
    hmac_tag_parts(
        key,
        &[
            digest.as_bytes(),
            &frame_number.to_le_bytes(),
            &offset.to_le_bytes(),
            &payload_len.to_le_bytes(),
        ],
    )
}

impl Frame {
    /// Builds and signs a frame. The payload must already be zero padded.
    pub fn signed(
        key: &Key256,
        frame_number: u32,
        offset: u32,
        payload: Payload,
        payload_len: u16,
    ) -> Self {
        let digest = sha256_digest(&payload);
        let tag = frame_tag(key, &digest, frame_number, offset, payload_len);
        Frame {
            header: FrameHeader {
                magic: FRAME_MAGIC,
                format_version: FORMAT_VERSION,
                frame_number,
                offset,
                payload_len,
                flags: 0,
                reserved: [0; 8],
                tag,
            },
            payload,
        }
    }

    pub fn data(&self) -> &[u8] {
        &self.payload[..self.header.payload_len as usize]
    }
}

pub fn encode_frame(frame: &Frame) -> [u8; FRAME_LEN] {
    let mut out = [0u8; FRAME_LEN];
    out[..HEADER_LEN].copy_from_slice(&frame.header.encode());
    out[HEADER_LEN..].copy_from_slice(&frame.payload);
    out
}

/// Decodes one 1024-byte frame. Checks run in header order and stop at the
/// first bad field.
pub fn decode_frame(bytes: &[u8]) -> Result<Frame, FrameError> {
    if bytes.len() != FRAME_LEN {
        return Err(FrameError::BadLength {
            field: "frame",
            found: bytes.len(),
        });
    }
    let magic = le_u16(&bytes[0..2]);
    if magic != FRAME_MAGIC {
        return Err(FrameError::BadMagic {
            field: "frame.magic",
        });
    }
    let format_version = le_u16(&bytes[2..4]);
    if format_version != FORMAT_VERSION {
        return Err(FrameError::UnsupportedVersion {
            field: "frame.format_version",
            found: format_version,
        });
    }
    let payload_len = le_u16(&bytes[12..14]);
    if payload_len == 0 || payload_len as usize > PAYLOAD_LEN {
        return Err(FrameError::BadLength {
            field: "frame.payload_len",
            found: payload_len as usize,
        });
    }
    let flags = le_u16(&bytes[14..16]);
    if flags != 0 {
        return Err(FrameError::NonZeroReserved {
            field: "frame.flags",
        });
    }
    let reserved: [u8; 8] = bytes[16..24].try_into().unwrap();
    if reserved != [0; 8] {
        return Err(FrameError::NonZeroReserved {
            field: "frame.reserved",
        });
    }
    let payload: Payload = bytes[HEADER_LEN..].try_into().unwrap();
    if payload[payload_len as usize..].iter().any(|&b| b != 0) {
        return Err(FrameError::NonZeroReserved {
            field: "frame.payload_padding",
        });
    }
    Ok(Frame {
        header: FrameHeader {
            magic,
            format_version,
            frame_number: le_u32(&bytes[4..8]),
            offset: le_u32(&bytes[8..12]),
            payload_len,
            flags,
            reserved,
            tag: Tag256(bytes[24..56].try_into().unwrap()),
        },
        payload,
    })
}

/// Splits firmware into zero-padded payloads with their true lengths.
pub fn split_payloads(firmware: &[u8]) -> Result<Vec<(Payload, u16)>, FrameError> {
    if firmware.is_empty() {
        return Err(FrameError::EmptyFirmware);
    }
    if firmware.len() > u32::MAX as usize {
        return Err(FrameError::FirmwareTooLarge(firmware.len()));
    }
    Ok(firmware
        .chunks(PAYLOAD_LEN)
        .map(|chunk| {
            let mut payload = [0u8; PAYLOAD_LEN];
            payload[..chunk.len()].copy_from_slice(chunk);
            (payload, chunk.len() as u16)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub frame_number: u32,
    pub offset: u32,
    pub payload_len: u16,
    pub golden_digest: Digest256,
}

/// Reference digests for every frame, kept in secure ROM.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldenManifest {
    pub entries: Vec<ManifestEntry>,
}

impl GoldenManifest {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, frame_number: u32) -> Option<&ManifestEntry> {
        self.entries
            .binary_search_by_key(&frame_number, |e| e.frame_number)
            .ok()
            .map(|i| &self.entries[i])
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FirmwareImage {
    pub identity: DeviceIdentity,
    pub frames: Vec<Frame>,
}

/// Frames the firmware, signs every frame with the key derived for
/// `identity`, and returns the image with its golden manifest.
pub fn build_image(
    firmware: &[u8],
    identity: DeviceIdentity,
    master: &Key256,
) -> Result<(FirmwareImage, GoldenManifest), FrameError> {
    let payloads = split_payloads(firmware)?;
    let frame_key = derive_key(master, &identity, FRAME_SIGNING_PURPOSE);
    let mut frames = Vec::with_capacity(payloads.len());
    let mut entries = Vec::with_capacity(payloads.len());
    for (i, (payload, payload_len)) in payloads.into_iter().enumerate() {
        let frame_number = i as u32;
        let offset = frame_number * PAYLOAD_LEN as u32;
        let frame = Frame::signed(&frame_key, frame_number, offset, payload, payload_len);
        entries.push(ManifestEntry {
            frame_number,
            offset,
            payload_len,
            golden_digest: sha256_digest(&frame.payload),
        });
        frames.push(frame);
    }
    Ok((FirmwareImage { identity, frames }, GoldenManifest { entries }))
}

/// Concatenates the frame data back into the original firmware.
pub fn reassemble(image: &FirmwareImage) -> Result<Vec<u8>, FrameError> {
    let mut out = Vec::with_capacity(image.frames.len() * PAYLOAD_LEN);
    for (i, frame) in image.frames.iter().enumerate() {
        let expected = i as u32;
        if frame.header.frame_number != expected || frame.header.offset as usize != out.len() {
            return Err(FrameError::GapInFrames {
                expected,
                found: Some(frame.header.frame_number),
            });
        }
        out.extend_from_slice(frame.data());
    }
    Ok(out)
}

pub fn encode_image_header(identity: &DeviceIdentity, frame_count: u32) -> [u8; IMAGE_HEADER_LEN] {
    let mut out = [0u8; IMAGE_HEADER_LEN];
    out[0..8].copy_from_slice(IMAGE_MAGIC);
    out[8..10].copy_from_slice(&FORMAT_VERSION.to_le_bytes());
    out[10..14].copy_from_slice(&frame_count.to_le_bytes());
    out[14..40].copy_from_slice(&identity.canonical_bytes());
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ImageHeader {
    pub format_version: u16,
    pub frame_count: u32,
    pub identity: DeviceIdentity,
}

pub fn decode_image_header(bytes: &[u8]) -> Result<ImageHeader, FrameError> {
    if bytes.len() < IMAGE_HEADER_LEN {
        return Err(FrameError::TruncatedFile {
            needed: IMAGE_HEADER_LEN,
            found: bytes.len(),
        });
    }
    if &bytes[0..8] != IMAGE_MAGIC {
        return Err(FrameError::BadMagic {
            field: "image.magic",
        });
    }
    let format_version = le_u16(&bytes[8..10]);
    if format_version != FORMAT_VERSION {
        return Err(FrameError::UnsupportedVersion {
            field: "image.format_version",
            found: format_version,
        });
    }
    if bytes[40..IMAGE_HEADER_LEN].iter().any(|&b| b != 0) {
        return Err(FrameError::NonZeroReserved {
            field: "image.reserved",
        });
    }
    Ok(ImageHeader {
        format_version,
        frame_count: le_u32(&bytes[10..14]),
        identity: DeviceIdentity::from_canonical_bytes(bytes[14..40].try_into().unwrap()),
    })
}

pub fn serialize_image(image: &FirmwareImage) -> Vec<u8> {
    let mut out = Vec::with_capacity(IMAGE_HEADER_LEN + image.frames.len() * FRAME_LEN);
    out.extend_from_slice(&encode_image_header(
        &image.identity,
        image.frames.len() as u32,
    ));
    for frame in &image.frames {
        out.extend_from_slice(&encode_frame(frame));
    }
    out
}

pub fn parse_image(bytes: &[u8]) -> Result<FirmwareImage, FrameError> {
    let header = decode_image_header(bytes)?;
    let body = &bytes[IMAGE_HEADER_LEN..];
    if !body.len().is_multiple_of(FRAME_LEN) {
        return Err(FrameError::TruncatedFile {
            needed: IMAGE_HEADER_LEN + body.len().div_ceil(FRAME_LEN) * FRAME_LEN,
            found: bytes.len(),
        });
    }
    let present = body.len() / FRAME_LEN;
    if present != header.frame_count as usize {
        return Err(FrameError::FrameCountMismatch {
            declared: header.frame_count,
            present,
        });
    }
    let frames = body
        .chunks_exact(FRAME_LEN)
        .map(decode_frame)
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FirmwareImage {
        identity: header.identity,
        frames,
    })
}

pub fn serialize_manifest(manifest: &GoldenManifest) -> Vec<u8> {
    let mut out =
        Vec::with_capacity(MANIFEST_HEADER_LEN + manifest.entries.len() * MANIFEST_ENTRY_LEN);
    out.extend_from_slice(MANIFEST_MAGIC);
    out.extend_from_slice(&(manifest.entries.len() as u32).to_le_bytes());
    for e in &manifest.entries {
        out.extend_from_slice(&e.frame_number.to_le_bytes());
        out.extend_from_slice(&e.offset.to_le_bytes());
        out.extend_from_slice(&e.payload_len.to_le_bytes());
        out.extend_from_slice(&[0, 0]);
        out.extend_from_slice(e.golden_digest.as_bytes());
    }
    out
}

pub fn parse_manifest(bytes: &[u8]) -> Result<GoldenManifest, FrameError> {
    if bytes.len() < MANIFEST_HEADER_LEN {
        return Err(FrameError::TruncatedFile {
            needed: MANIFEST_HEADER_LEN,
            found: bytes.len(),
        });
    }
    if &bytes[0..8] != MANIFEST_MAGIC {
        return Err(FrameError::BadMagic {
            field: "manifest.magic",
        });
    }
    let declared = le_u32(&bytes[8..12]);
    let body = &bytes[MANIFEST_HEADER_LEN..];
    if !body.len().is_multiple_of(MANIFEST_ENTRY_LEN) {
        return Err(FrameError::TruncatedFile {
            needed: MANIFEST_HEADER_LEN + body.len().div_ceil(MANIFEST_ENTRY_LEN) * MANIFEST_ENTRY_LEN,
            found: bytes.len(),
        });
    }
    let present = body.len() / MANIFEST_ENTRY_LEN;
    if present != declared as usize {
        return Err(FrameError::FrameCountMismatch { declared, present });
    }
    let mut entries = Vec::with_capacity(present);
    for chunk in body.chunks_exact(MANIFEST_ENTRY_LEN) {
        if chunk[10..12] != [0, 0] {
            return Err(FrameError::NonZeroReserved {
                field: "manifest.pad",
            });
        }
        let entry = ManifestEntry {
            frame_number: le_u32(&chunk[0..4]),
            offset: le_u32(&chunk[4..8]),
            payload_len: le_u16(&chunk[8..10]),
            golden_digest: Digest256(chunk[12..44].try_into().unwrap()),
        };
        if entries
            .last()
            .is_some_and(|prev: &ManifestEntry| prev.frame_number >= entry.frame_number)
        {
            return Err(FrameError::UnsortedManifest);
        }
        entries.push(entry);
    }
    Ok(GoldenManifest { entries })
}

pub(crate) fn le_u16(b: &[u8]) -> u16 {
    u16::from_le_bytes(b[..2].try_into().unwrap())
}

pub(crate) fn le_u32(b: &[u8]) -> u32 {
    u32::from_le_bytes(b[..4].try_into().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity() -> DeviceIdentity {
        DeviceIdentity {
            vendor_id: 0xCAFE_0001,
            uuid: *b"0123456789abcdef",
            board_version: 2,
            firmware_revision: 11,
        }
    }

    fn master() -> Key256 {
        Key256::master([0x11; 32])
    }

    fn firmware(len: usize) -> Vec<u8> {
        (0..len).map(|i| (i * 31 + 7) as u8).collect()
    }

    #[test]
    fn layout_constants() {
        assert_eq!(HEADER_LEN + PAYLOAD_LEN, 1024);
        assert_eq!(PAYLOAD_LEN, 968);
        assert_eq!(
            HeaderField::ALL.iter().map(|f| f.range().len()).sum::<usize>(),
            HEADER_LEN
        );
    }

    #[test]
    fn split_lengths() {
        assert_eq!(split_payloads(&firmware(5734)).unwrap().len(), 6);

        let exact = split_payloads(&firmware(968)).unwrap();
        assert_eq!(exact.len(), 1);
        assert_eq!(exact[0].1, 968);

        let over = split_payloads(&firmware(969)).unwrap();
        assert_eq!(over.len(), 2);
        assert_eq!(over[1].1, 1);
        assert!(over[1].0[1..].iter().all(|&b| b == 0));
        assert_eq!(over[1].0[1..].len(), 967);

        assert_eq!(split_payloads(&[]), Err(FrameError::EmptyFirmware));
    }

    #[test]
    fn build_six_frames() {
        let (image, manifest) = build_image(&firmware(5734), identity(), &master()).unwrap();
        assert_eq!(image.frames.len(), 6);
        assert_eq!(manifest.len(), 6);
        for (i, (f, e)) in image.frames.iter().zip(&manifest.entries).enumerate() {
            assert_eq!(f.header.frame_number, i as u32);
            assert_eq!(f.header.offset, i as u32 * 968);
            assert_eq!(e.golden_digest, sha256_digest(&f.payload));
            assert_eq!(encode_frame(f).len(), 1024);
        }
        assert_eq!(image.frames[5].header.payload_len as usize, 5734 - 5 * 968);
        assert_eq!(serialize_image(&image).len(), 64 + 6 * 1024);
    }

    #[test]
    fn single_frame_base_case_and_determinism() {
        let (a, _) = build_image(b"hello", identity(), &master()).unwrap();
        assert_eq!(a.frames[0].header.offset, 0);
        let (b, _) = build_image(b"hello", identity(), &master()).unwrap();
        assert_eq!(serialize_image(&a), serialize_image(&b));
    }

    #[test]
    fn decode_rejects_bad_input() {
        let (image, _) = build_image(&firmware(100), identity(), &master()).unwrap();
        let good = encode_frame(&image.frames[0]);
        assert_eq!(decode_frame(&good).unwrap(), image.frames[0]);

        assert!(matches!(
            decode_frame(&good[..1023]),
            Err(FrameError::BadLength { field: "frame", found: 1023 })
        ));

        let mut bad = good;
        bad[0] ^= 0x01;
        // Version is also corrupted here; magic is reported because it is checked first.
        bad[2] = 0xFF;
        assert_eq!(
            decode_frame(&bad),
            Err(FrameError::BadMagic { field: "frame.magic" })
        );

        let mut bad = good;
        bad[2] = 9;
        assert!(matches!(
            decode_frame(&bad),
            Err(FrameError::UnsupportedVersion { found: 9, .. })
        ));

        let mut bad = good;
        bad[12..14].copy_from_slice(&969u16.to_le_bytes());
        assert!(matches!(
            decode_frame(&bad),
            Err(FrameError::BadLength { field: "frame.payload_len", .. })
        ));

        let mut bad = good;
        bad[12..14].copy_from_slice(&0u16.to_le_bytes());
        assert!(decode_frame(&bad).is_err());

        let mut bad = good;
        bad[20] = 1;
        assert!(matches!(
            decode_frame(&bad),
            Err(FrameError::NonZeroReserved { field: "frame.reserved" })
        ));

        let mut bad = good;
        bad[HEADER_LEN + 500] = 1;
        assert!(matches!(
            decode_frame(&bad),
            Err(FrameError::NonZeroReserved { field: "frame.payload_padding" })
        ));
    }

    #[test]
    fn image_file_errors() {
        let (image, manifest) = build_image(&firmware(5734), identity(), &master()).unwrap();
        let bytes = serialize_image(&image);
        assert_eq!(parse_image(&bytes).unwrap(), image);

        assert!(matches!(
            parse_image(&bytes[..bytes.len() - 10]),
            Err(FrameError::TruncatedFile { .. })
        ));
        assert!(matches!(
            parse_image(&bytes[..30]),
            Err(FrameError::TruncatedFile { .. })
        ));

        // Drop the last whole frame but keep the header claiming six.
        assert_eq!(
            parse_image(&bytes[..bytes.len() - FRAME_LEN]),
            Err(FrameError::FrameCountMismatch { declared: 6, present: 5 })
        );

        let mut bad = bytes.clone();
        bad[3] = b'X';
        assert_eq!(
            parse_image(&bad),
            Err(FrameError::BadMagic { field: "image.magic" })
        );

        let m = serialize_manifest(&manifest);
        assert_eq!(m.len(), 12 + 6 * 44);
        assert_eq!(parse_manifest(&m).unwrap(), manifest);
        assert!(matches!(
            parse_manifest(&m[..m.len() - 1]),
            Err(FrameError::TruncatedFile { .. })
        ));
        assert!(matches!(
            parse_manifest(&m[..m.len() - 44]),
            Err(FrameError::FrameCountMismatch { declared: 6, present: 5 })
        ));
    }

    #[test]
    fn image_header_bytes() {
        let header = encode_image_header(&identity(), 6);
        assert_eq!(&header[..8], b"CAREIMG1");
        assert_eq!(&header[8..10], &[1, 0]);
        assert_eq!(&header[10..14], &[6, 0, 0, 0]);
        assert_eq!(&header[14..18], &0xCAFE_0001u32.to_le_bytes());
        assert_eq!(&header[18..34], b"0123456789abcdef");
        assert_eq!(&header[34..36], &[2, 0]);
        assert_eq!(&header[36..40], &[11, 0, 0, 0]);
        assert!(header[40..].iter().all(|&b| b == 0));
    }

    #[test]
    fn reassemble_cases() {
        let fw = firmware(5734);
        let (image, _) = build_image(&fw, identity(), &master()).unwrap();
        assert_eq!(reassemble(&image).unwrap(), fw);

        let mut gapped = image.clone();
        gapped.frames.remove(2);
        assert_eq!(
            reassemble(&gapped),
            Err(FrameError::GapInFrames { expected: 2, found: Some(3) })
        );

        let (small, _) = build_image(&[0xAB; 10], identity(), &master()).unwrap();
        assert_eq!(reassemble(&small).unwrap(), vec![0xAB; 10]);
    }
}
