//! Independent one-shot runs, each in its own fresh container.
//!
//! Used for differential testing and benchmarks. Jobs share nothing, so the
//! parallel and sequential drivers give identical results in identical order.

use crate::container::{Container, ContainerConfig, ExecRequest, ExecResponse, ExternalRegion, InitError};
use crate::par;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchJob {
    pub file: Vec<u8>,
    /// Initial contents of the external region.
    pub externals: Vec<u8>,
    pub allocated_time: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchOutcome {
    pub result: Result<ExecResponse, InitError>,
    pub externals: Vec<u8>,
    pub locals: Vec<u8>,
}

/// Initializes and executes one job in a fresh container.
pub fn run_job(config: &ContainerConfig, job: &BatchJob) -> BatchOutcome {
    let mut container = Container::new(config.clone()).expect("valid container configuration");
    let region = ExternalRegion::standalone(job.externals.len());
    region.write(0, &job.externals).expect("region sized to the job");
    let init = container.initialize(crate::container::InitRequest {
        compiled_file: &job.file,
        external_region: region.clone(),
        allocated_time: job.allocated_time,
    });
    let (result, locals) = match init {
        Ok(id) => {
            let resp = container.execute(ExecRequest { context_id: id });
            let locals = container.context_locals(id).unwrap_or_default().to_vec();
            (Ok(resp), locals)
        }
        Err(e) => (Err(e), Vec::new()),
    };
    BatchOutcome {
        result,
        externals: region.to_vec(),
        locals,
    }
}

pub fn run_batch_sequential(config: &ContainerConfig, jobs: &[BatchJob]) -> Vec<BatchOutcome> {
    par::map_sequential(jobs, |j| run_job(config, j))
}

#[cfg(feature = "parallel")]
pub fn run_batch_parallel(config: &ContainerConfig, jobs: &[BatchJob]) -> Vec<BatchOutcome> {
    par::map(jobs, |j| run_job(config, j))
}

/// Parallel when the `parallel` feature is enabled, sequential otherwise.
pub fn run_batch(config: &ContainerConfig, jobs: &[BatchJob]) -> Vec<BatchOutcome> {
    par::map(jobs, |j| run_job(config, j))
}
