// Licensed under the Apache-2.0 license

#![allow(dead_code)]

pub mod oracle;

use care_core::crypto::{derive_key, Key256, FRAME_SIGNING_PURPOSE};
use care_core::device::DeviceState;
use care_core::frame::{build_image, serialize_image, DeviceIdentity, FirmwareImage, GoldenManifest};

pub struct Fixture {
    pub device: DeviceState,
    pub golden: Vec<u8>,
    pub image: FirmwareImage,
    pub manifest: GoldenManifest,
    pub master: Key256,
    pub frame_key: Key256,
}

pub fn identity() -> DeviceIdentity {
    DeviceIdentity {
        vendor_id: 0x0000_CA2E,
        uuid: *b"integration-test",
        board_version: 2,
        firmware_revision: 7,
    }
}

pub fn firmware(len: usize) -> Vec<u8> {
    (0..len).map(|i| (i.wrapping_mul(31) ^ (i >> 8)) as u8).collect()
}

/// A provisioned device for a `firmware_len`-byte application.
pub fn fixture(firmware_len: usize) -> Fixture {
    let master = Key256::master([0x5C; 32]);
    let (image, manifest) = build_image(&firmware(firmware_len), identity(), &master).unwrap();
    let golden = serialize_image(&image);
    let device = DeviceState::provision(&image, manifest.clone(), master.clone()).unwrap();
    let frame_key = derive_key(&master, &identity(), FRAME_SIGNING_PURPOSE);
    Fixture {
        device,
        golden,
        image,
        manifest,
        master,
        frame_key,
    }
}

/// The six-frame reference application.
pub fn six_frames() -> Fixture {
    fixture(5734)
}
