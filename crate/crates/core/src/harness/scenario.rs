//! Init/execute protocol driver and the Rack Manager scenario.

use super::{ExternalBinding, HarnessError, Value, VarPath};
use crate::compiler::{layout_variables, VariableLayout};
use crate::container::{Container, ContextId, ExecRequest, ExecResponse, ExecStatus, InitRequest, InitResponse};
use crate::lang::{check_source, RACK_MANAGER_SOURCE};

/// Protocol messages between calling application and container, in the
/// order they were exchanged.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Message {
    InitRequest {
        file_len: usize,
        region_len: usize,
        allocated_time: u64,
    },
    InitResponse(InitResponse),
    ExecRequest(ContextId),
    ExecResponse(ExecResponse),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioRun {
    pub trace: Vec<Message>,
    pub init: InitResponse,
    pub exec: Option<ExecResponse>,
}

/// Writes `inputs`, initializes `file` once and executes it once.
///
/// Binding errors abort before any message is sent. Init failures are
/// reported in the returned run, not as an error.
pub fn run_scenario(
    container: &mut Container,
    file: &[u8],
    binding: &ExternalBinding,
    allocated_time: u64,
    inputs: &[(VarPath, Value)],
) -> Result<ScenarioRun, HarnessError> {
    for (path, value) in inputs {
        binding.write_var(path, *value)?;
    }
    let mut trace = vec![Message::InitRequest {
        file_len: file.len(),
        region_len: binding.region().len(),
        allocated_time,
    }];
    let init = container.initialize(InitRequest {
        compiled_file: file,
        external_region: binding.region().clone(),
        allocated_time,
    });
    trace.push(Message::InitResponse(init.clone()));
    let exec = match &init {
        Ok(id) => {
            trace.push(Message::ExecRequest(*id));
            let resp = container.execute(ExecRequest { context_id: *id });
            trace.push(Message::ExecResponse(resp));
            Some(resp)
        }
        Err(_) => None,
    };
    Ok(ScenarioRun { trace, init, exec })
}

pub const RACK_SIZE: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Calculator {
    pub powered: bool,
    pub criticity: i8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RackInputs {
    pub ground: bool,
    /// `calculators[0]` is `calculator[1]`.
    pub calculators: [Calculator; RACK_SIZE],
}

impl RackInputs {
    pub fn uniform(ground: bool, powered: bool, criticity: i8) -> Self {
        RackInputs {
            ground,
            calculators: [Calculator { powered, criticity }; RACK_SIZE],
        }
    }

    pub fn to_vars(&self) -> Vec<(VarPath, Value)> {
        let mut out = vec![("ground".parse().unwrap(), Value::Bool(self.ground))];
        for (i, c) in self.calculators.iter().enumerate() {
            let k = i + 1;
            out.push((
                format!("calculator[{k}].powered").parse().unwrap(),
                Value::Bool(c.powered),
            ));
            out.push((
                format!("calculator[{k}].criticity").parse().unwrap(),
                Value::Int(c.criticity as i64),
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RackReport {
    pub inputs: RackInputs,
    pub calculators: [Calculator; RACK_SIZE],
    pub exec: ExecResponse,
    pub trace: Vec<Message>,
}

impl RackReport {
    /// 1-based numbers of calculators that were powered and are now off.
    pub fn stopped(&self) -> Vec<usize> {
        (0..RACK_SIZE)
            .filter(|&i| self.inputs.calculators[i].powered && !self.calculators[i].powered)
            .map(|i| i + 1)
            .collect()
    }
}

/// Layout of the Rack Manager rule, as the calling application derives it.
pub fn rack_manager_layout() -> VariableLayout {
    layout_variables(&check_source(RACK_MANAGER_SOURCE).expect("bundled rule compiles"))
}

/// Runs the Rack Manager rule once on `inputs` and reads back every calculator.
pub fn rack_manager_scenario(
    compiled_file: &[u8],
    container: &mut Container,
    inputs: &RackInputs,
) -> Result<RackReport, HarnessError> {
    let binding = ExternalBinding::allocate(&rack_manager_layout());
    let run = run_scenario(container, compiled_file, &binding, u64::MAX, &inputs.to_vars())?;
    run.init?;
    let exec = run.exec.expect("executed after successful init");
    if exec.status != ExecStatus::Ok {
        return Err(HarnessError::Exec(exec.status.to_string()));
    }
    let mut calculators = [Calculator::default(); RACK_SIZE];
    for (i, c) in calculators.iter_mut().enumerate() {
        let k = i + 1;
        let powered = binding.read_var(&format!("calculator[{k}].powered").parse()?)?;
        let criticity = binding.read_var(&format!("calculator[{k}].criticity").parse()?)?;
        *c = match (powered, criticity) {
            (Value::Bool(powered), Value::Int(crit)) => Calculator {
                powered,
                criticity: crit as i8,
            },
            _ => unreachable!("Rack Manager field types"),
        };
    }
    Ok(RackReport {
        inputs: *inputs,
        calculators,
        exec,
        trace: run.trace,
    })
}
