// Licensed under the Apache-2.0 license

use std::fmt;
use std::fs;
use std::path::Path;

use care_core::attack::{inject, parse_campaign, random_campaign, write_campaign, AttackSpec, AttackVariant};
use care_core::boot::{boot, BootConfig, BootOutcome, BootTrigger};
use care_core::crypto::{derive_key, Key256, FRAME_SIGNING_PURPOSE, KEY_LEN};
use care_core::device::DeviceState;
use care_core::frame::{
    build_image, decode_image_header, parse_image, parse_manifest, serialize_image, serialize_manifest,
    DeviceIdentity, HEADER_LEN,
};
use care_core::report::{ReportEnvelope, ReportInputs, ReportPayload, SimulationReport};
use care_core::timing::estimate;
use care_core::verify::{verify_image_bytes, ChainFault};
use care_core::TimingParams;

use crate::{AttackGenArgs, BuildArgs, CostArgs, SimulateArgs, VerifyArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok = 0,
    VerificationFailed = 1,
    InputError = 2,
    SecureHalt = 3,
}

#[derive(Debug)]
pub struct InputError(String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

type Result<T> = std::result::Result<T, InputError>;

fn fail<T>(msg: impl Into<String>) -> Result<T> {
    Err(InputError(msg.into()))
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| InputError(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| InputError(format!("cannot write {}: {e}", path.display())))
}

fn read_key(path: &Path) -> Result<Key256> {
    let bytes = read(path)?;
    if bytes.len() != KEY_LEN {
        return fail(format!(
            "BadKeyLength: {} holds {} bytes, expected {KEY_LEN}",
            path.display(),
            bytes.len()
        ));
    }
    Ok(Key256::master(bytes.try_into().unwrap()))
}

fn timing_params(path: Option<&Path>, inputs: &mut ReportInputs) -> Result<TimingParams> {
    match path {
        None => Ok(TimingParams::default()),
        Some(p) => {
            inputs.add_file("timing", &p.display().to_string(), &read(p)?);
            TimingParams::load(p).map_err(|e| InputError(e.to_string()))
        }
    }
}

fn add_input(inputs: &mut ReportInputs, role: &str, path: &Path, contents: &[u8]) {
    inputs.add_file(role, &path.display().to_string(), contents);
}

/// Keys are recorded by path only.
fn add_key_path(inputs: &mut ReportInputs, path: &Path) {
    inputs.paths.insert("key".into(), path.display().to_string());
}

pub fn build(a: &BuildArgs) -> Result<Status> {
    let master = read_key(&a.key)?;
    let firmware = read(&a.firmware)?;
    let identity = DeviceIdentity {
        vendor_id: a.vendor_id,
        uuid: a.uuid,
        board_version: a.board_version,
        firmware_revision: a.firmware_revision,
    };
    let (image, manifest) = build_image(&firmware, identity, &master)
        .map_err(|e| InputError(format!("{}: {e}", a.firmware.display())))?;
    write(&a.out, &serialize_image(&image))?;
    write(&a.manifest_out, &serialize_manifest(&manifest))?;
    println!("frames: {}", image.frames.len());
    Ok(Status::Ok)
}

pub fn verify(a: &VerifyArgs) -> Result<Status> {
    let image = read(&a.image)?;
    let manifest_bytes = read(&a.manifest)?;
    let master = read_key(&a.key)?;
    let manifest = parse_manifest(&manifest_bytes)
        .map_err(|e| InputError(format!("{}: {e}", a.manifest.display())))?;
    let header = decode_image_header(&image).map_err(|e| InputError(format!("{}: {e}", a.image.display())))?;
    let frame_key = derive_key(&master, &header.identity, FRAME_SIGNING_PURPOSE);
    let report = verify_image_bytes(&image, &manifest, None, &frame_key);

    let mut inputs = ReportInputs::default();
    add_input(&mut inputs, "image", &a.image, &image);
    add_input(&mut inputs, "manifest", &a.manifest, &manifest_bytes);
    add_key_path(&mut inputs, &a.key);
    let status = match &report.fault {
        Some(ChainFault::ImageParseFailure { detail }) => {
            eprintln!("error: {}: {detail}", a.image.display());
            Status::InputError
        }
        _ if report.all_verified() => Status::Ok,
        _ => Status::VerificationFailed,
    };
    print!("{}", ReportEnvelope::new("verify", inputs, ReportPayload::Chain(report)).to_json());
    Ok(status)
}

fn attacks_for(a: &SimulateArgs, frame_count: u32, inputs: &mut ReportInputs) -> Result<Vec<AttackSpec>> {
    if let Some(path) = &a.campaign {
        let text = read(path)?;
        add_input(inputs, "campaign", path, &text);
        let text = String::from_utf8(text).map_err(|_| InputError(format!("{}: not UTF-8", path.display())))?;
        let specs = parse_campaign(&text).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
        if let Some(seed) = a.seed {
            if let Some(bad) = specs.iter().find(|s| s.seed.is_some_and(|s| s != seed)) {
                return fail(format!(
                    "campaign was generated with seed {}, --seed is {seed}",
                    bad.seed.unwrap()
                ));
            }
        }
        return Ok(specs);
    }
    if let Some(frames) = &a.corrupt {
        inputs.add_option("corrupt", frames.iter().map(u32::to_string).collect::<Vec<_>>().join(","));
        return Ok(frames
            .iter()
            .map(|&frame| {
                AttackVariant::BitFlip {
                    frame,
                    byte: HEADER_LEN as u32,
                    bit: 0,
                }
                .into()
            })
            .collect());
    }
    if let Some(seed) = a.seed {
        inputs.add_option("attacks", a.attacks);
        return random_campaign(frame_count, seed, a.attacks).map_err(|e| InputError(e.to_string()));
    }
    Ok(Vec::new())
}

pub fn simulate(a: &SimulateArgs) -> Result<Status> {
    let image_bytes = read(&a.image)?;
    let manifest_bytes = read(&a.manifest)?;
    let master = read_key(&a.key)?;
    let image = parse_image(&image_bytes).map_err(|e| InputError(format!("{}: {e}", a.image.display())))?;
    let manifest = parse_manifest(&manifest_bytes)
        .map_err(|e| InputError(format!("{}: {e}", a.manifest.display())))?;
    if manifest.len() != image.frames.len() {
        return fail(format!(
            "{} has {} frames, {} has {}",
            a.image.display(),
            image.frames.len(),
            a.manifest.display(),
            manifest.len()
        ));
    }

    let mut inputs = ReportInputs {
        seed: a.seed,
        ..ReportInputs::default()
    };
    add_input(&mut inputs, "image", &a.image, &image_bytes);
    add_input(&mut inputs, "manifest", &a.manifest, &manifest_bytes);
    add_key_path(&mut inputs, &a.key);
    inputs.add_option("care", if a.care.enabled() { "on" } else { "off" });
    inputs.add_option("secure_ibex", a.secure_ibex);
    let timing = timing_params(a.timing.as_deref(), &mut inputs)?;

    let mut device = DeviceState::provision(&image, manifest, master).map_err(|e| InputError(e.to_string()))?;
    let attacks = attacks_for(a, image.frames.len() as u32, &mut inputs)?;
    let mut records = Vec::with_capacity(attacks.len());
    for (i, spec) in attacks.iter().enumerate() {
        records.push(inject(&mut device, spec).map_err(|e| InputError(format!("attack {}: {e}", i + 1)))?);
    }

    let config = BootConfig {
        care_enabled: a.care.enabled(),
        secure_ibex_flag: a.secure_ibex,
        timing_params: timing,
    };
    let report = boot(&mut device, BootTrigger::PowerOn, &config);
    let flash_matches_golden = device.flash_contents() == &image_bytes[..];
    let outcome = report.outcome;
    let recovered: Vec<String> = report
        .recovery
        .iter()
        .flat_map(|r| r.recovered_frames.iter().map(u32::to_string))
        .collect();
    let time_us = report.cost.time_us;

    if let Some(dir) = &a.snapshot_out {
        fs::create_dir_all(dir).map_err(|e| InputError(format!("cannot create {}: {e}", dir.display())))?;
        device.export_snapshot(dir).map_err(|e| InputError(e.to_string()))?;
    }

    let envelope = ReportEnvelope::new(
        "simulate",
        inputs,
        ReportPayload::Simulation(SimulationReport {
            attacks: records,
            boot: report,
            flash_matches_golden,
        }),
    );
    match &a.report {
        Some(path) => {
            write(path, envelope.to_json().as_bytes())?;
            match outcome {
                BootOutcome::BootOk => println!("outcome: boot_ok"),
                BootOutcome::SecureHalt(reason) => println!(
                    "outcome: secure_halt ({})",
                    serde_json::to_value(reason).unwrap().as_str().unwrap_or_default()
                ),
            }
            println!("recovered: {}", recovered.join(","));
            println!("time_us: {time_us:.2}");
        }
        None => print!("{}", envelope.to_json()),
    }
    Ok(match outcome {
        BootOutcome::BootOk => Status::Ok,
        BootOutcome::SecureHalt(_) => Status::SecureHalt,
    })
}

fn number(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

pub fn cost(a: &CostArgs) -> Result<Status> {
    let mut inputs = ReportInputs::default();
    let params = timing_params(a.timing.as_deref(), &mut inputs)?;
    let report = estimate(a.frames, a.care.enabled(), a.recovered, &params).map_err(|e| InputError(e.to_string()))?;
    if a.json {
        inputs.add_option("frames", a.frames);
        inputs.add_option("care", if a.care.enabled() { "on" } else { "off" });
        inputs.add_option("recovered", a.recovered);
        print!("{}", ReportEnvelope::new("cost", inputs, ReportPayload::Cost(report)).to_json());
    } else {
        println!("frames: {}", report.n_frames);
        println!("care: {}", if report.care_enabled { "on" } else { "off" });
        println!("recovered: {}", report.n_recovered);
        println!("cycles: {}", number(report.total_cycles));
        println!("time_us: {:.2}", report.time_us);
        println!("energy: {:.2}", report.energy);
        println!("delta_us: {:.2}", report.delta_vs_baseline_us);
        println!("recovery_us: {:.2}", report.recovery_us);
    }
    Ok(Status::Ok)
}

pub fn attack_gen(a: &AttackGenArgs) -> Result<Status> {
    let campaign = random_campaign(a.frames, a.seed, a.attacks).map_err(|e| InputError(e.to_string()))?;
    let text = format!(
        "# care campaign seed={} frames={} attacks={}\n{}",
        a.seed,
        a.frames,
        a.attacks,
        write_campaign(&campaign)
    );
    write(&a.out, text.as_bytes())?;
    println!("attacks: {}", campaign.len());
    Ok(Status::Ok)
}
