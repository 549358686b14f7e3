//! Compiles the Rack Manager rule and runs it against a few rack states.

use macrocell_core::binfmt;
use macrocell_core::compiler::compile;
use macrocell_core::container::{Container, ContainerConfig};
use macrocell_core::harness::{rack_manager_scenario, Calculator, RackInputs, RACK_SIZE};
use macrocell_core::lang::RACK_MANAGER_SOURCE;
use macrocell_core::perfdata::parse_perf_data;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let perf = parse_perf_data(include_str!("../fixtures/uniform.epd"))?;
    let compiled = compile(RACK_MANAGER_SOURCE, std::slice::from_ref(&perf))?;
    println!(
        "compiled {} bytes of macro-code, WCET on {} = {}",
        compiled.header().macro_code_length,
        perf.platform,
        compiled.wcet_for(&perf.platform).unwrap_or_default()
    );
    let file = binfmt::serialize(&compiled)?;

    let mut mixed = RackInputs::uniform(false, true, 0);
    for (i, c) in mixed.calculators.iter_mut().enumerate() {
        *c = Calculator {
            powered: true,
            criticity: i as i8,
        };
    }
    let cases = [
        ("ground fault", RackInputs::uniform(true, true, 9)),
        ("all critical", RackInputs::uniform(false, true, 9)),
        ("rising criticity", mixed),
    ];
    for (name, inputs) in cases {
        let mut container = Container::new(ContainerConfig {
            platform: perf.clone(),
            memory_budget: 4096,
            max_platform_types: 4,
        })?;
        let report = rack_manager_scenario(&file, &mut container, &inputs)?;
        println!(
            "{name:>16}: stopped {:?} of {RACK_SIZE}, fuel {}",
            report.stopped(),
            report.exec.fuel_consumed
        );
    }
    Ok(())
}
