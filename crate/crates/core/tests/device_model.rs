// Licensed under the Apache-2.0 license

mod support;

use care_core::device::*;
use care_core::recovery::lock_memory;
use proptest::prelude::*;

#[derive(Debug, Clone)]
enum Op {
    Write { source: usize, addr: u32, bytes: Vec<u8> },
    Read { source: usize, addr: u32, len: usize },
    Rules(Vec<PmpRule>),
    Lock,
    Reset,
}

fn source(i: usize) -> AccessSource {
    AccessSource::ALL[i % 3]
}

fn set(bits: u8) -> SourceSet {
    SourceSet {
        secure_boot: bits & 1 != 0,
        untrusted_code: bits & 2 != 0,
        dma: bits & 4 != 0,
    }
}

/// Addresses concentrated around region edges.
fn addr() -> impl Strategy<Value = u32> {
    prop_oneof![
        0u32..0x2000,
        (RAM_BASE - 8)..(RAM_BASE + 0x100),
        (FLASH_BASE - 8)..(FLASH_BASE + 0x1900),
        any::<u32>(),
    ]
}

fn rule() -> impl Strategy<Value = PmpRule> {
    (addr(), 1u32..0x2000, any::<u8>(), any::<u8>(), any::<u8>(), any::<bool>()).prop_map(
        |(base, span, r, w, x, locked)| PmpRule {
            base,
            limit: base.saturating_add(span),
            allow_read: set(r),
            allow_write: set(w),
            allow_execute: set(x),
            locked,
        },
    )
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        4 => (0usize..3, addr(), proptest::collection::vec(any::<u8>(), 1..32))
            .prop_map(|(source, addr, bytes)| Op::Write { source, addr, bytes }),
        2 => (0usize..3, addr(), 1usize..64).prop_map(|(source, addr, len)| Op::Read { source, addr, len }),
        1 => proptest::collection::vec(rule(), 0..5).prop_map(Op::Rules),
        1 => Just(Op::Lock),
        1 => Just(Op::Reset),
    ]
}

fn run(device: &mut DeviceState, ops: &[Op]) {
    for op in ops {
        match op {
            Op::Write { source: s, addr, bytes } => {
                let _ = device.bus_write(source(*s), *addr, bytes);
            }
            Op::Read { source: s, addr, len } => {
                let _ = device.bus_read(source(*s), *addr, *len);
            }
            Op::Rules(rules) => {
                let _ = device.apply_pmp_rules(rules.clone());
            }
            Op::Lock => {
                let _ = lock_memory(device);
            }
            Op::Reset => device.reset(),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn rom_never_changes(ops in proptest::collection::vec(op(), 1..40)) {
        let mut d = support::six_frames().device;
        let rom = d.rom_bytes().to_vec();
        run(&mut d, &ops);
        prop_assert_eq!(d.rom_bytes(), &rom[..]);
        // Non-secure sources never read ROM.
        for rec in d.access_log() {
            if rec.base < d.memory_map().rom_size && rec.source != AccessSource::SecureBoot {
                prop_assert!(!rec.verdict.is_allowed());
            }
        }
    }

    #[test]
    fn access_log_replays_exactly(ops in proptest::collection::vec(op(), 1..40)) {
        let mut d = support::six_frames().device;
        run(&mut d, &ops);
        let map = *d.memory_map();
        for rec in d.access_log() {
            let table = &d.pmp_history()[rec.pmp_generation];
            let replay = decide_access(table, &map, rec.source, rec.kind, rec.base, rec.len).unwrap();
            prop_assert_eq!(replay, rec.verdict);
        }
    }

    #[test]
    fn locked_rules_survive_until_reset(ops in proptest::collection::vec(op(), 1..30)) {
        let mut d = support::six_frames().device;
        lock_memory(&mut d).unwrap();
        let locked: Vec<PmpRule> = d.pmp_rules().to_vec();
        let ops: Vec<Op> = ops.into_iter().filter(|o| !matches!(o, Op::Reset)).collect();
        run(&mut d, &ops);
        prop_assert_eq!(&d.pmp_rules()[..2], &locked[..]);
    }
}

#[test]
fn post_lock_writes_denied_at_flash_edges() {
    let mut d = support::six_frames().device;
    lock_memory(&mut d).unwrap();
    let map = *d.memory_map();
    let end = map.flash_base + map.flash_size;
    for src in [AccessSource::UntrustedCode, AccessSource::Dma] {
        for addr in [map.flash_base, map.flash_base + 1, end - 2, end - 1] {
            assert!(
                !d.check_access(src, AccessKind::Write, addr, 1).unwrap().is_allowed(),
                "{src:?} at {addr:#x}"
            );
        }
        // Straddling either edge of flash is out of range, not allowed.
        assert!(d.check_access(src, AccessKind::Write, map.flash_base - 1, 2).is_err());
        assert!(d.check_access(src, AccessKind::Write, end - 1, 2).is_err());
        assert!(d.check_access(src, AccessKind::Write, end, 1).is_err());
        // RAM stays writable but not executable.
        assert!(d.check_access(src, AccessKind::Write, map.ram_base, 4).unwrap().is_allowed());
        assert!(!d.check_access(src, AccessKind::Execute, map.ram_base + map.ram_size - 1, 1).unwrap().is_allowed());
    }
    assert!(d.check_access(AccessSource::SecureBoot, AccessKind::Write, end - 1, 1).unwrap().is_allowed());
}

#[test]
fn snapshot_round_trip_through_files() {
    let mut d = support::six_frames().device;
    lock_memory(&mut d).unwrap();
    let dir = tempfile::tempdir().unwrap();
    d.export_snapshot(dir.path()).unwrap();
    for name in ["rom.bin", "flash.bin", "pmp.json"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let back = DeviceState::import_snapshot(dir.path()).unwrap();
    assert_eq!(back.rom_bytes(), d.rom_bytes());
    assert_eq!(back.flash_contents(), d.flash_contents());
    assert_eq!(back.pmp_rules(), d.pmp_rules());
}
