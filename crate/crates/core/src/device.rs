// Licensed under the Apache-2.0 license

//! Simulated SoC memory system with PMP-style access control.
//!
//! Three disjoint regions make up the address space: the secure ROM (trust
//! anchor), the flash holding the serialized firmware image, and RAM. Every
//! access carries an [`AccessSource`] and is decided by the ordered PMP rule
//! table (first match wins), falling back to a default policy when no rule
//! covers the address.
//!
//! The ROM is wired to the secure boot path only: it is never writable and
//! never reachable from untrusted code or DMA, whatever the rule table says.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::{sha256_digest, Key256, KeyRole};
use crate::frame::{
    le_u32, parse_manifest, serialize_image, serialize_manifest, DeviceIdentity, FirmwareImage,
    FrameError, GoldenManifest, Payload, FRAME_LEN, IMAGE_HEADER_LEN, MANIFEST_ENTRY_LEN,
    MANIFEST_HEADER_LEN, PAYLOAD_LEN,
};

pub const ROM_BASE: u32 = 0x0000_0000;
pub const RAM_BASE: u32 = 0x1000_0000;
pub const RAM_SIZE: u32 = 0x0001_0000;
pub const FLASH_BASE: u32 = 0x2000_0000;
pub const MAX_PMP_RULES: usize = 16;

pub const ROM_MAGIC: &[u8; 8] = b"CAREROM1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccessSource {
    SecureBoot,
    UntrustedCode,
    Dma,
}

impl AccessSource {
    pub const ALL: [AccessSource; 3] = [
        AccessSource::SecureBoot,
        AccessSource::UntrustedCode,
        AccessSource::Dma,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccessKind {
    Read,
    Write,
    Execute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    Rom,
    Flash,
    Ram,
}

/// One permission bit per access source.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SourceSet {
    pub secure_boot: bool,
    pub untrusted_code: bool,
    pub dma: bool,
}

impl SourceSet {
    pub const NONE: SourceSet = SourceSet {
        secure_boot: false,
        untrusted_code: false,
        dma: false,
    };
    pub const ALL: SourceSet = SourceSet {
        secure_boot: true,
        untrusted_code: true,
        dma: true,
    };
    pub const SECURE_BOOT_ONLY: SourceSet = SourceSet {
        secure_boot: true,
        untrusted_code: false,
        dma: false,
    };

    pub fn contains(&self, source: AccessSource) -> bool {
        match source {
            AccessSource::SecureBoot => self.secure_boot,
            AccessSource::UntrustedCode => self.untrusted_code,
            AccessSource::Dma => self.dma,
        }
    }
}

/// A base/limit protection rule. `limit` is exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PmpRule {
    pub base: u32,
    pub limit: u32,
    pub allow_read: SourceSet,
    pub allow_write: SourceSet,
    pub allow_execute: SourceSet,
    pub locked: bool,
}

impl PmpRule {
    pub fn allows(&self, source: AccessSource, kind: AccessKind) -> bool {
        match kind {
            AccessKind::Read => self.allow_read.contains(source),
            AccessKind::Write => self.allow_write.contains(source),
            AccessKind::Execute => self.allow_execute.contains(source),
        }
    }

    fn covers(&self, addr: u64) -> bool {
        (self.base as u64) <= addr && addr < self.limit as u64
    }

    fn overlaps(&self, other: &PmpRule) -> bool {
        self.base < other.limit && other.base < self.limit
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "by", content = "index")]
pub enum DeniedBy {
    /// Index into the rule table in force at the time of the access.
    Rule(usize),
    /// ROM is only reachable from the secure boot path.
    SourceGated,
    /// ROM contents are fixed.
    ReadOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "verdict", content = "denied")]
pub enum Verdict {
    Allowed,
    Denied(DeniedBy),
}

impl Verdict {
    pub fn is_allowed(&self) -> bool {
        matches!(self, Verdict::Allowed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessRecord {
    pub source: AccessSource,
    pub kind: AccessKind,
    pub base: u32,
    pub len: u32,
    pub verdict: Verdict,
    /// Index into [`DeviceState::pmp_history`] of the table that decided it.
    pub pmp_generation: usize,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DeviceError {
    #[error("{0} PMP rules requested, at most {MAX_PMP_RULES} supported")]
    TooManyRules(usize),
    #[error("rule {index} would replace, remove or shadow a locked rule")]
    LockedRuleConflict { index: usize },
    #[error("rule {index} has base >= limit")]
    InvalidRule { index: usize },
    #[error("access at {base:#010x} (+{len}) is outside any single region")]
    OutOfRange { base: u32, len: u32 },
    #[error("{requester:?} {kind:?} at {base:#010x} (+{len}) denied by {by:?}")]
    AccessDenied {
        requester: AccessSource,
        kind: AccessKind,
        base: u32,
        len: u32,
        by: DeniedBy,
    },
    #[error("malformed ROM image: {0}")]
    MalformedRom(String),
    #[error("recovery payload for frame {0} has no manifest entry")]
    OrphanRecoveryPayload(u32),
}

impl From<FrameError> for DeviceError {
    fn from(e: FrameError) -> Self {
        DeviceError::MalformedRom(e.to_string())
    }
}

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("snapshot I/O on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error("pmp.json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Address ranges of the three regions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryMap {
    pub rom_base: u32,
    pub rom_size: u32,
    pub flash_base: u32,
    pub flash_size: u32,
    pub ram_base: u32,
    pub ram_size: u32,
}

impl MemoryMap {
    pub fn region_of(&self, base: u32, len: u32) -> Option<RegionKind> {
        let end = base as u64 + len as u64;
        [
            (RegionKind::Rom, self.rom_base, self.rom_size),
            (RegionKind::Flash, self.flash_base, self.flash_size),
            (RegionKind::Ram, self.ram_base, self.ram_size),
        ]
        .into_iter()
        .find(|&(_, rb, rs)| base >= rb && (base as u64) < rb as u64 + rs as u64 && end <= rb as u64 + rs as u64)
        .map(|(kind, _, _)| kind)
    }

    pub fn range(&self, kind: RegionKind) -> (u32, u32) {
        match kind {
            RegionKind::Rom => (self.rom_base, self.rom_size),
            RegionKind::Flash => (self.flash_base, self.flash_size),
            RegionKind::Ram => (self.ram_base, self.ram_size),
        }
    }
}

/// Decides an access against a rule table. Pure: the same inputs always
/// give the same verdict.
///
/// The range is cut at every rule boundary inside it; each piece is decided
/// by the first rule covering it, or by the default policy. The first denied
/// piece decides the verdict.
pub fn decide_access(
    rules: &[PmpRule],
    map: &MemoryMap,
    source: AccessSource,
    kind: AccessKind,
    base: u32,
    len: u32,
) -> Result<Verdict, DeviceError> {
    let region = map
        .region_of(base, len)
        .ok_or(DeviceError::OutOfRange { base, len })?;
    if region == RegionKind::Rom {
        if source != AccessSource::SecureBoot {
            return Ok(Verdict::Denied(DeniedBy::SourceGated));
        }
        if kind == AccessKind::Write {
            return Ok(Verdict::Denied(DeniedBy::ReadOnly));
        }
    }
    if len == 0 {
        return Ok(Verdict::Allowed);
    }

    let start = base as u64;
    let end = start + len as u64;
    let mut cuts = vec![start, end];
    for r in rules {
        for edge in [r.base as u64, r.limit as u64] {
            if start < edge && edge < end {
                cuts.push(edge);
            }
        }
    }
    cuts.sort_unstable();
    cuts.dedup();

    for seg_start in &cuts[..cuts.len() - 1] {
        match rules.iter().position(|r| r.covers(*seg_start)) {
            Some(i) if !rules[i].allows(source, kind) => {
                return Ok(Verdict::Denied(DeniedBy::Rule(i)));
            }
            Some(_) => {}
            // Flash and RAM are open until a rule says otherwise; the ROM
            // case was settled above.
            None => {}
        }
    }
    Ok(Verdict::Allowed)
}

/// Checks a proposed rule table against the locked rules of the current one.
fn validate_rule_table(current: &[PmpRule], proposed: &[PmpRule]) -> Result<(), DeviceError> {
    if proposed.len() > MAX_PMP_RULES {
        return Err(DeviceError::TooManyRules(proposed.len()));
    }
    if let Some(index) = proposed.iter().position(|r| r.base >= r.limit) {
        return Err(DeviceError::InvalidRule { index });
    }
    // Locked rules must survive unchanged and in the same relative order.
    let mut cursor = 0;
    for (index, locked) in current.iter().enumerate().filter(|(_, r)| r.locked) {
        match proposed[cursor..].iter().position(|r| r == locked) {
            Some(p) => cursor += p + 1,
            None => return Err(DeviceError::LockedRuleConflict { index }),
        }
    }
    // Nothing new may sit in front of a locked rule and overlap it.
    for (j, rule) in proposed.iter().enumerate() {
        if !(rule.locked && current.contains(rule)) {
            continue;
        }
        if let Some(index) = proposed[..j]
            .iter()
            .position(|earlier| !current.contains(earlier) && earlier.overlaps(rule))
        {
            return Err(DeviceError::LockedRuleConflict { index });
        }
    }
    Ok(())
}

/// Trusted contents of the secure ROM.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SecureRom {
    identity: DeviceIdentity,
    master_key: Key256,
    fsbl_marker: [u8; 32],
    manifest: GoldenManifest,
    recovery_payloads: BTreeMap<u32, Payload>,
}

/// Byte offsets of the ROM image sections.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RomLayout {
    pub identity: usize,
    pub master_key: usize,
    pub fsbl_marker: usize,
    pub manifest: usize,
    pub recovery: usize,
    pub total: usize,
}

pub const RECOVERY_ENTRY_LEN: usize = 4 + PAYLOAD_LEN;

impl RomLayout {
    pub fn new(manifest_entries: usize, recovery_entries: usize) -> Self {
        let manifest = 100;
        let recovery = manifest + MANIFEST_HEADER_LEN + manifest_entries * MANIFEST_ENTRY_LEN;
        RomLayout {
            identity: 8,
            master_key: 36,
            fsbl_marker: 68,
            manifest,
            recovery,
            total: recovery + 4 + recovery_entries * RECOVERY_ENTRY_LEN,
        }
    }

    pub fn manifest_entry(&self, index: usize) -> usize {
        self.manifest + MANIFEST_HEADER_LEN + index * MANIFEST_ENTRY_LEN
    }
}

impl SecureRom {
    pub fn fsbl_marker_default() -> [u8; 32] {
        sha256_digest(b"care first stage boot loader").0
    }

    pub fn new(
        identity: DeviceIdentity,
        master_key: Key256,
        manifest: GoldenManifest,
        recovery_payloads: BTreeMap<u32, Payload>,
    ) -> Result<Self, DeviceError> {
        if master_key.role() != KeyRole::Master {
            return Err(DeviceError::MalformedRom("ROM key must be a master key".into()));
        }
        if let Some(&orphan) = recovery_payloads
            .keys()
            .find(|&&n| manifest.entry(n).is_none())
        {
            return Err(DeviceError::OrphanRecoveryPayload(orphan));
        }
        Ok(SecureRom {
            identity,
            master_key,
            fsbl_marker: Self::fsbl_marker_default(),
            manifest,
            recovery_payloads,
        })
    }

    /// Recovery data is the payload of every frame of the golden image.
    pub fn for_image(
        image: &FirmwareImage,
        manifest: GoldenManifest,
        master_key: Key256,
    ) -> Result<Self, DeviceError> {
        let payloads = image
            .frames
            .iter()
            .map(|f| (f.header.frame_number, f.payload))
            .collect();
        Self::new(image.identity, master_key, manifest, payloads)
    }

    /// A copy of this ROM lacking the recovery payload for one frame.
    pub fn without_recovery_payload(&self, frame_number: u32) -> Self {
        let mut rom = self.clone();
        rom.recovery_payloads.remove(&frame_number);
        rom
    }

    pub fn identity(&self) -> &DeviceIdentity {
        &self.identity
    }

    pub fn master_key(&self) -> &Key256 {
        &self.master_key
    }

    pub fn fsbl_marker(&self) -> &[u8; 32] {
        &self.fsbl_marker
    }

    pub fn manifest(&self) -> &GoldenManifest {
        &self.manifest
    }

    pub fn recovery_payload(&self, frame_number: u32) -> Option<&Payload> {
        self.recovery_payloads.get(&frame_number)
    }

    pub fn recovery_frames(&self) -> impl Iterator<Item = u32> + '_ {
        self.recovery_payloads.keys().copied()
    }

    pub fn layout(&self) -> RomLayout {
        RomLayout::new(self.manifest.len(), self.recovery_payloads.len())
    }

    /// ROM image: magic | identity (26) | pad (2) | master key | FSBL marker |
    /// manifest (manifest file format) | recovery count u32 | (frame u32, payload)*.
    pub fn to_bytes(&self) -> Vec<u8> {
        let layout = self.layout();
        let mut out = Vec::with_capacity(layout.total);
        out.extend_from_slice(ROM_MAGIC);
        out.extend_from_slice(&self.identity.canonical_bytes());
        out.extend_from_slice(&[0, 0]);
        out.extend_from_slice(self.master_key.expose());
        out.extend_from_slice(&self.fsbl_marker);
        out.extend_from_slice(&serialize_manifest(&self.manifest));
        out.extend_from_slice(&(self.recovery_payloads.len() as u32).to_le_bytes());
        for (n, payload) in &self.recovery_payloads {
            out.extend_from_slice(&n.to_le_bytes());
            out.extend_from_slice(payload);
        }
        debug_assert_eq!(out.len(), layout.total);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DeviceError> {
        let short = || DeviceError::MalformedRom("truncated".into());
        if bytes.len() < 100 + MANIFEST_HEADER_LEN {
            return Err(short());
        }
        if &bytes[..8] != ROM_MAGIC {
            return Err(DeviceError::MalformedRom("bad magic".into()));
        }
        let identity = DeviceIdentity::from_canonical_bytes(bytes[8..34].try_into().unwrap());
        let master_key = Key256::master(bytes[36..68].try_into().unwrap());
        let fsbl_marker: [u8; 32] = bytes[68..100].try_into().unwrap();
        let manifest_count = le_u32(&bytes[108..112]) as usize;
        let layout = RomLayout::new(manifest_count, 0);
        if bytes.len() < layout.recovery + 4 {
            return Err(short());
        }
        let manifest = parse_manifest(&bytes[layout.manifest..layout.recovery])?;
        let recovery_count = le_u32(&bytes[layout.recovery..]) as usize;
        let layout = RomLayout::new(manifest_count, recovery_count);
        if bytes.len() != layout.total {
            return Err(DeviceError::MalformedRom(format!(
                "expected {} bytes, found {}",
                layout.total,
                bytes.len()
            )));
        }
        let recovery_payloads = bytes[layout.recovery + 4..]
            .chunks_exact(RECOVERY_ENTRY_LEN)
            .map(|c| (le_u32(c), c[4..].try_into().unwrap()))
            .collect::<BTreeMap<u32, Payload>>();
        if recovery_payloads.len() != recovery_count {
            return Err(DeviceError::MalformedRom("duplicate recovery entry".into()));
        }
        let mut rom = SecureRom::new(identity, master_key, manifest, recovery_payloads)?;
        rom.fsbl_marker = fsbl_marker;
        Ok(rom)
    }
}

/// Flash offset of frame `frame_number`'s 1024-byte slot.
pub fn frame_slot_offset(frame_number: u32) -> u32 {
    IMAGE_HEADER_LEN as u32 + frame_number * FRAME_LEN as u32
}

/// The simulated device: ROM, flash, RAM, PMP table and access log.
#[derive(Debug, Clone)]
pub struct DeviceState {
    rom: SecureRom,
    rom_bytes: Vec<u8>,
    flash: Vec<u8>,
    ram: Vec<u8>,
    map: MemoryMap,
    pmp: Vec<PmpRule>,
    pmp_history: Vec<Vec<PmpRule>>,
    access_log: Vec<AccessRecord>,
}

impl DeviceState {
    /// A device whose flash holds `flash` verbatim and whose PMP table is empty.
    pub fn new(rom: SecureRom, flash: Vec<u8>) -> Self {
        let rom_bytes = rom.to_bytes();
        let map = MemoryMap {
            rom_base: ROM_BASE,
            rom_size: rom_bytes.len() as u32,
            flash_base: FLASH_BASE,
            flash_size: flash.len() as u32,
            ram_base: RAM_BASE,
            ram_size: RAM_SIZE,
        };
        DeviceState {
            rom,
            rom_bytes,
            flash,
            ram: vec![0; RAM_SIZE as usize],
            map,
            pmp: Vec::new(),
            pmp_history: vec![Vec::new()],
            access_log: Vec::new(),
        }
    }

    /// A factory-fresh device: golden image in flash, its payloads as
    /// recovery data in ROM.
    pub fn provision(
        image: &FirmwareImage,
        manifest: GoldenManifest,
        master_key: Key256,
    ) -> Result<Self, DeviceError> {
        let rom = SecureRom::for_image(image, manifest, master_key)?;
        Ok(Self::new(rom, serialize_image(image)))
    }

    pub fn memory_map(&self) -> &MemoryMap {
        &self.map
    }

    pub fn pmp_rules(&self) -> &[PmpRule] {
        &self.pmp
    }

    pub fn pmp_history(&self) -> &[Vec<PmpRule>] {
        &self.pmp_history
    }

    pub fn access_log(&self) -> &[AccessRecord] {
        &self.access_log
    }

    /// Raw flash contents, bypassing access control. For test oracles and
    /// snapshot export only.
    pub fn flash_contents(&self) -> &[u8] {
        &self.flash
    }

    /// Raw view of `len` bytes at `addr` within one region, bypassing access
    /// control and the log.
    pub fn peek(&self, addr: u32, len: usize) -> Option<&[u8]> {
        let region = self.map.region_of(addr, u32::try_from(len).ok()?)?;
        let (base, _) = self.map.range(region);
        let at = (addr - base) as usize;
        let mem = match region {
            RegionKind::Rom => &self.rom_bytes,
            RegionKind::Flash => &self.flash,
            RegionKind::Ram => &self.ram,
        };
        Some(&mem[at..at + len])
    }

    pub fn ram_contents(&self) -> &[u8] {
        &self.ram
    }

    pub fn rom_bytes(&self) -> &[u8] {
        &self.rom_bytes
    }

    /// Installs a new rule table, keeping every locked rule intact.
    pub fn apply_pmp_rules(&mut self, rules: Vec<PmpRule>) -> Result<(), DeviceError> {
        validate_rule_table(&self.pmp, &rules)?;
        self.pmp = rules;
        self.pmp_history.push(self.pmp.clone());
        Ok(())
    }

    /// Hardware reset: PMP entries, locked or not, are cleared.
    pub fn reset(&mut self) {
        self.pmp.clear();
        self.pmp_history.push(Vec::new());
    }

    pub fn check_access(
        &mut self,
        source: AccessSource,
        kind: AccessKind,
        base: u32,
        len: u32,
    ) -> Result<Verdict, DeviceError> {
        let verdict = decide_access(&self.pmp, &self.map, source, kind, base, len)?;
        self.access_log.push(AccessRecord {
            source,
            kind,
            base,
            len,
            verdict,
            pmp_generation: self.pmp_history.len() - 1,
        });
        Ok(verdict)
    }

    fn checked(
        &mut self,
        source: AccessSource,
        kind: AccessKind,
        base: u32,
        len: usize,
    ) -> Result<(RegionKind, usize), DeviceError> {
        let len32 = u32::try_from(len).map_err(|_| DeviceError::OutOfRange { base, len: u32::MAX })?;
        match self.check_access(source, kind, base, len32)? {
            Verdict::Allowed => {}
            Verdict::Denied(by) => {
                return Err(DeviceError::AccessDenied {
                    requester: source,
                    kind,
                    base,
                    len: len32,
                    by,
                })
            }
        }
        let region = self
            .map
            .region_of(base, len32)
            .expect("decide_access checked the range");
        let (region_base, _) = self.map.range(region);
        Ok((region, (base - region_base) as usize))
    }

    /// Reads from any region through the access-control check.
    pub fn bus_read(
        &mut self,
        source: AccessSource,
        addr: u32,
        len: usize,
    ) -> Result<Vec<u8>, DeviceError> {
        let (region, at) = self.checked(source, AccessKind::Read, addr, len)?;
        let mem = match region {
            RegionKind::Rom => &self.rom_bytes,
            RegionKind::Flash => &self.flash,
            RegionKind::Ram => &self.ram,
        };
        Ok(mem[at..at + len].to_vec())
    }

    /// Writes to flash or RAM through the access-control check. ROM writes
    /// are always denied.
    pub fn bus_write(
        &mut self,
        source: AccessSource,
        addr: u32,
        bytes: &[u8],
    ) -> Result<(), DeviceError> {
        let (region, at) = self.checked(source, AccessKind::Write, addr, bytes.len())?;
        let mem = match region {
            RegionKind::Rom => unreachable!("ROM writes are denied"),
            RegionKind::Flash => &mut self.flash,
            RegionKind::Ram => &mut self.ram,
        };
        mem[at..at + bytes.len()].copy_from_slice(bytes);
        Ok(())
    }

    pub fn flash_read(
        &mut self,
        source: AccessSource,
        offset: u32,
        len: usize,
    ) -> Result<Vec<u8>, DeviceError> {
        let addr = self.flash_addr(offset, len)?;
        self.bus_read(source, addr, len)
    }

    pub fn flash_write(
        &mut self,
        source: AccessSource,
        offset: u32,
        bytes: &[u8],
    ) -> Result<(), DeviceError> {
        let addr = self.flash_addr(offset, bytes.len())?;
        self.bus_write(source, addr, bytes)
    }

    /// Erased flash reads back as 0xFF.
    pub fn flash_erase(
        &mut self,
        source: AccessSource,
        offset: u32,
        len: usize,
    ) -> Result<(), DeviceError> {
        self.flash_write(source, offset, &vec![0xFF; len])
    }

    fn flash_addr(&self, offset: u32, len: usize) -> Result<u32, DeviceError> {
        FLASH_BASE
            .checked_add(offset)
            .filter(|_| offset as u64 + len as u64 <= self.flash.len() as u64)
            .ok_or(DeviceError::OutOfRange {
                base: FLASH_BASE.wrapping_add(offset),
                len: len as u32,
            })
    }

    pub fn rom_read(
        &mut self,
        source: AccessSource,
        offset: u32,
        len: usize,
    ) -> Result<Vec<u8>, DeviceError> {
        if offset as u64 + len as u64 > self.rom_bytes.len() as u64 {
            return Err(DeviceError::OutOfRange {
                base: ROM_BASE.wrapping_add(offset),
                len: len as u32,
            });
        }
        self.bus_read(source, ROM_BASE + offset, len)
    }

    /// Structured view of the ROM, granted only to the secure boot path.
    pub fn secure_rom(&mut self, source: AccessSource) -> Result<&SecureRom, DeviceError> {
        let len = self.rom_bytes.len();
        self.checked(source, AccessKind::Read, ROM_BASE, len)?;
        Ok(&self.rom)
    }

    /// Writes `rom.bin`, `flash.bin` and `pmp.json` into `dir`.
    pub fn export_snapshot(&self, dir: &Path) -> Result<(), SnapshotError> {
        let io = |path: &Path| {
            let path = path.display().to_string();
            move |source| SnapshotError::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        let rom = dir.join("rom.bin");
        fs::write(&rom, &self.rom_bytes).map_err(io(&rom))?;
        let flash = dir.join("flash.bin");
        fs::write(&flash, &self.flash).map_err(io(&flash))?;
        let pmp = dir.join("pmp.json");
        fs::write(&pmp, serde_json::to_vec_pretty(&self.pmp)?).map_err(io(&pmp))?;
        Ok(())
    }

    /// Rebuilds a device from a snapshot directory. The access log starts empty.
    pub fn import_snapshot(dir: &Path) -> Result<Self, SnapshotError> {
        let read = |name: &str| {
            let path = dir.join(name);
            fs::read(&path).map_err(|source| SnapshotError::Io {
                path: path.display().to_string(),
                source,
            })
        };
        let rom = SecureRom::from_bytes(&read("rom.bin")?)?;
        let flash = read("flash.bin")?;
        let rules: Vec<PmpRule> = serde_json::from_slice(&read("pmp.json")?)?;
        let mut device = DeviceState::new(rom, flash);
        device.apply_pmp_rules(rules)?;
        Ok(device)
    }
}
