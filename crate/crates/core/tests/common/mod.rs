#![allow(dead_code)]

pub mod gen;
pub mod oracle;

use macrocell_core::binfmt;
use macrocell_core::compiler::compile;
use macrocell_core::container::{Container, ContainerConfig};
use macrocell_core::lang::RACK_MANAGER_SOURCE;
use macrocell_core::perfdata::{PerfData, PlatformType};

pub const UNIFORM_EPD: &str = include_str!("../../fixtures/uniform.epd");

pub fn uniform_perf() -> PerfData {
    macrocell_core::perfdata::parse_perf_data(UNIFORM_EPD).unwrap()
}

pub fn platform(id: &str) -> PlatformType {
    PlatformType::parse_identity(id).unwrap()
}

pub fn rack_file(perfs: &[PerfData]) -> Vec<u8> {
    binfmt::serialize(&compile(RACK_MANAGER_SOURCE, perfs).unwrap()).unwrap()
}

pub fn container(platform: PerfData, budget: u64, max_platforms: u16) -> Container {
    Container::new(ContainerConfig {
        platform,
        memory_budget: budget,
        max_platform_types: max_platforms,
    })
    .unwrap()
}

use macrocell_core::container::{AppMemory, ContextId, ExecRequest, ExecStatus, ExternalRegion, InitRequest};
use macrocell_core::lang::parse_source;

/// Guard bytes placed on both sides of external regions.
pub const GUARD: usize = 64;
pub const CANARY: u8 = 0xA5;

/// Application memory of `[guard][region][guard]` with the region holding `initial`.
pub fn guarded_region(initial: &[u8]) -> (AppMemory, ExternalRegion) {
    let mut bytes = vec![CANARY; GUARD];
    bytes.extend_from_slice(initial);
    bytes.extend(std::iter::repeat_n(CANARY, GUARD));
    let mem = AppMemory::from_bytes(bytes);
    let region = ExternalRegion::new(&mem, GUARD, GUARD + initial.len()).unwrap();
    (mem, region)
}

pub fn guards_intact(mem: &AppMemory) -> bool {
    let bytes = mem.snapshot();
    let n = bytes.len();
    bytes[..GUARD].iter().chain(&bytes[n - GUARD..]).all(|&b| b == CANARY)
}

/// Fills its locals with `CANARY` bytes when executed.
pub const CANARY_PROGRAM: &str = "local int32 c[0..7];\nlocal int8 k;\nfor (k = 0; k <= 7; k++) c[k] = -1515870811;\n";

/// Initializes and runs the canary program in `container`.
pub fn plant_canary_context(container: &mut Container) -> ContextId {
    let perf = container.config().platform.clone();
    let file = binfmt::serialize(&compile(CANARY_PROGRAM, &[perf]).unwrap()).unwrap();
    let id = container
        .initialize(InitRequest {
            compiled_file: &file,
            external_region: ExternalRegion::standalone(0),
            allocated_time: u64::MAX,
        })
        .unwrap();
    assert_eq!(container.execute(ExecRequest { context_id: id }).status, ExecStatus::Ok);
    id
}

pub fn canary_context_intact(container: &Container, id: ContextId) -> bool {
    container
        .context_locals(id)
        .is_some_and(|l| l[..32].iter().all(|&b| b == CANARY) && l[32] == 8)
}

#[derive(Debug, Default)]
pub struct Differential {
    pub wcet: u64,
    pub overhead: u64,
    pub fuel: Vec<u64>,
    pub traps: Vec<Option<&'static str>>,
}

/// Compiles `source`, then executes it once per entry of `inputs` in a single
/// context, writing each input into the external region first. Every run is
/// compared with the oracle; the first disagreement is returned as an error.
pub fn differential(source: &str, perf: &PerfData, inputs: &[Vec<u8>]) -> Result<Differential, String> {
    let ast = parse_source(source).map_err(|e| format!("parse: {e}\n{source}"))?;
    let (ext_size, loc_size) = oracle::region_sizes(&ast);
    let file = compile(source, std::slice::from_ref(perf)).map_err(|e| format!("compile: {e}\n{source}"))?;
    let h = file.header();
    if (h.external_var_size as usize, h.local_var_size as usize) != (ext_size, loc_size) {
        return Err(format!("sizes {h:?} vs oracle {ext_size}/{loc_size}"));
    }
    let wcet = file.wcet_for(&perf.platform).unwrap();
    let bytes = binfmt::serialize(&file).unwrap();

    let mut c = container(perf.clone(), 1 << 20, 4);
    let canary = plant_canary_context(&mut c);
    let (mem, region) = guarded_region(&vec![0; ext_size]);
    let id = c
        .initialize(InitRequest {
            compiled_file: &bytes,
            external_region: region.clone(),
            allocated_time: wcet,
        })
        .map_err(|e| format!("init: {e}"))?;

    let mut out = Differential {
        wcet,
        overhead: perf.request_overhead,
        ..Default::default()
    };
    let mut locals = vec![0u8; loc_size];
    for (n, input) in inputs.iter().enumerate() {
        assert_eq!(input.len(), ext_size);
        region.write(0, input).unwrap();
        let expect = oracle::run(&ast, input, &locals);
        let resp = c.execute(ExecRequest { context_id: id });
        let trap = match resp.status {
            ExecStatus::Ok => None,
            ExecStatus::Trap(t) => Some(t.as_str()),
            ExecStatus::UnknownContext => return Err("context vanished".into()),
        };
        let fail = |what: String| Err(format!("run {n}: {what}\n{source}"));
        if trap != expect.trap.map(|t| t.code()) {
            return fail(format!("status {trap:?}, oracle {:?}", expect.trap));
        }
        if region.to_vec() != expect.externals {
            return fail(format!(
                "externals {:?}, oracle {:?}",
                region.to_vec(),
                expect.externals
            ));
        }
        if c.context_locals(id).unwrap() != expect.locals.as_slice() {
            return fail(format!("locals {:?}, oracle {:?}", c.context_locals(id), expect.locals));
        }
        if resp.fuel_consumed + perf.request_overhead > wcet {
            return fail(format!(
                "fuel {} + overhead {} > wcet {wcet}",
                resp.fuel_consumed, perf.request_overhead
            ));
        }
        if !guards_intact(&mem) || !canary_context_intact(&c, canary) {
            return fail("canary overwritten".into());
        }
        locals = expect.locals;
        out.fuel.push(resp.fuel_consumed);
        out.traps.push(trap);
    }
    Ok(out)
}

pub fn random_bytes(rng: &mut impl rand::Rng, n: usize) -> Vec<u8> {
    (0..n).map(|_| rng.gen()).collect()
}
