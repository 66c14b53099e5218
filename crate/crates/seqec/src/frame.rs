//! Symplectic Pauli-frame execution of the protocol schedules.
//!
//! All protocol circuits are built from H, CNOT and CZ acting on stabilizer
//! states with deterministic ideal outcomes, and every noise process in the
//! model is a probabilistic Pauli (or a declared-bit flip). A run therefore
//! reduces to propagating an error frame through the Clifford schedule —
//! no amplitudes at all. This path is independent of the density-matrix
//! kernels and doubles as the fault-injection engine used to build decode
//! tables and as the trajectory sampler of the Monte-Carlo oracle.

use crate::channels::{ErrorParams, OpKind, ReadoutMode, RestingMode};
use crate::pauli::{PauliLetter, PauliString};
use crate::schedule::{OpCounter, RecordLabel, ScheduledOp};
use crate::{Result, SimError};
use rand::Rng;
use rand_chacha::ChaCha12Rng;

/// X/Z bit masks in index space (qubit 0 = most significant bit).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PauliFrame {
    pub x: u64,
    pub z: u64,
}

impl PauliFrame {
    pub fn xor_pauli(&mut self, p: &PauliString) {
        self.x ^= p.xmask();
        self.z ^= p.zmask();
    }

    pub fn to_pauli(self, n_qubits: usize) -> PauliString {
        let letters: Vec<PauliLetter> = (0..n_qubits)
            .map(|q| {
                let bit = 1u64 << (n_qubits - 1 - q);
                match (self.x & bit != 0, self.z & bit != 0) {
                    (false, false) => PauliLetter::I,
                    (true, false) => PauliLetter::X,
                    (true, true) => PauliLetter::Y,
                    (false, true) => PauliLetter::Z,
                }
            })
            .collect();
        PauliString::from_letters(&letters)
    }
}

/// A planned single fault: inject `pauli` right after the op at `ordinal`
/// (counting executed noisy ops from zero), or flip that op's declared bit
/// when it is a readout.
#[derive(Clone, Debug)]
pub enum FaultAction {
    Pauli(PauliString),
    FlipDeclared,
}

#[derive(Clone, Debug)]
pub struct FaultPlan {
    pub ordinal: usize,
    pub action: FaultAction,
}

/// Noise sampling source for Monte-Carlo runs; `None` runs noiselessly
/// (used for fault injection).
pub enum FrameNoise<'a> {
    None,
    Sampled { params: &'a ErrorParams, rng: &'a mut ChaCha12Rng },
}

/// Outcome of one frame run.
#[derive(Clone, Debug)]
pub struct FrameRun {
    pub frame: PauliFrame,
    pub record: Vec<(RecordLabel, bool)>,
    pub ops: OpCounter,
    /// Ops executed (inject excluded), for fault-location enumeration.
    pub executed: usize,
    /// Identity of each executed op along this path.
    pub op_log: Vec<ScheduledOp>,
}

pub struct FrameExecutor<'a> {
    pub n_qubits: usize,
    pub noise: FrameNoise<'a>,
    pub fault: Option<FaultPlan>,
    pub run: FrameRun,
    active: u64,
    retired_rest: bool,
    collect_log: bool,
}

impl<'a> FrameExecutor<'a> {
    pub fn new(n_qubits: usize, active_qubits: &[usize], noise: FrameNoise<'a>) -> Self {
        let mut active = 0u64;
        for &q in active_qubits {
            active |= 1u64 << (n_qubits - 1 - q);
        }
        Self {
            n_qubits,
            noise,
            fault: None,
            run: FrameRun {
                frame: PauliFrame::default(),
                record: Vec::new(),
                ops: OpCounter::default(),
                executed: 0,
                op_log: Vec::new(),
            },
            active,
            retired_rest: false,
            collect_log: false,
        }
    }

    pub fn with_fault(mut self, fault: FaultPlan) -> Self {
        self.fault = Some(fault);
        self
    }

    pub fn with_op_log(mut self) -> Self {
        self.collect_log = true;
        self
    }

    fn qmask(&self, q: usize) -> u64 {
        1u64 << (self.n_qubits - 1 - q)
    }

    fn sample_depol(&mut self, targets: &[usize]) -> Option<PauliString> {
        let FrameNoise::Sampled { params, rng } = &mut self.noise else {
            return None;
        };
        let (p, arity) = match targets.len() {
            1 => (params.p_sqg, 1usize),
            _ => (params.p_tqg, 2usize),
        };
        if p == 0.0 || rng.gen::<f64>() >= p {
            return None;
        }
        // Uniform over the non-identity Paulis of this arity.
        let count = 4usize.pow(arity as u32) - 1;
        let pick = rng.gen_range(1..=count);
        let letters = [PauliLetter::I, PauliLetter::X, PauliLetter::Y, PauliLetter::Z];
        let mut ls = vec![PauliLetter::I; self.n_qubits];
        for (j, &t) in targets.iter().enumerate() {
            ls[t] = letters[(pick >> (2 * (arity - 1 - j))) & 3];
        }
        Some(PauliString::from_letters(&ls))
    }

    fn apply_resting(&mut self, kind: OpKind, participants_mask: u64) {
        let FrameNoise::Sampled { params, rng } = &mut self.noise else {
            return;
        };
        if params.resting_mode == RestingMode::None {
            return;
        }
        let gamma = crate::channels::resting_gamma(kind, params).expect("validated params");
        // Phase damping = Z with probability 1 - alpha.
        let p_z = 1.0 - crate::channels::phase_damping_alpha(gamma);
        if p_z == 0.0 {
            return;
        }
        let resting = self.active & !participants_mask;
        let mut zmask = 0u64;
        for q in 0..self.n_qubits {
            let bit = 1u64 << (self.n_qubits - 1 - q);
            if resting & bit != 0 && rng.gen::<f64>() < p_z {
                zmask ^= bit;
            }
        }
        self.run.frame.z ^= zmask;
    }

    /// Execute one op, mirroring the density-matrix scheduler's noise
    /// placement exactly.
    pub fn execute_op(&mut self, op: &ScheduledOp) -> Result<()> {
        let mut part_mask = 0u64;
        for q in op.participants() {
            part_mask |= self.qmask(q);
        }
        match op {
            ScheduledOp::Inject { pauli } => {
                self.run.frame.xor_pauli(pauli);
                return Ok(()); // uncounted, no noise
            }
            ScheduledOp::Sqg { gate, target } => {
                self.conj_gate(gate, &[*target])?;
                if let Some(p) = self.sample_depol(&[*target]) {
                    self.run.frame.xor_pauli(&p);
                }
                self.run.ops.sqg += 1;
            }
            ScheduledOp::Tqg { gate, control, target } => {
                self.conj_gate(gate, &[*control, *target])?;
                if let Some(p) = self.sample_depol(&[*control, *target]) {
                    self.run.frame.xor_pauli(&p);
                }
                self.run.ops.tqg += 1;
            }
            ScheduledOp::Init { target } => {
                let bit = self.qmask(*target);
                self.run.frame.x &= !bit;
                self.run.frame.z &= !bit;
                if let FrameNoise::Sampled { params, rng } = &mut self.noise {
                    if params.p_init > 0.0 && rng.gen::<f64>() < params.p_init {
                        self.run.frame.x |= bit;
                    }
                }
                self.active |= bit;
                self.run.ops.init += 1;
            }
            ScheduledOp::Readout { target, label } => {
                let bit = self.qmask(*target);
                let true_bit = self.run.frame.x & bit != 0;
                let mut declared = true_bit;
                if let FrameNoise::Sampled { params, rng } = &mut self.noise {
                    match params.readout_mode {
                        ReadoutMode::Symmetric => {
                            if params.p_ro > 0.0 && rng.gen::<f64>() < params.p_ro {
                                declared = !declared;
                            }
                        }
                        ReadoutMode::Asymmetric => {
                            // Only a true "minus" (bit 1) can be misdeclared.
                            if true_bit && params.p_ro > 0.0 && rng.gen::<f64>() < params.p_ro {
                                declared = false;
                            }
                        }
                    }
                }
                if let Some(f) = &self.fault {
                    if f.ordinal == self.run.executed {
                        if let FaultAction::FlipDeclared = f.action {
                            declared = !declared;
                        }
                    }
                }
                // Post-measurement the qubit is a computational state: the
                // x part stays physical, the z part is an irrelevant phase.
                self.run.frame.z &= !bit;
                self.run.record.push((*label, declared));
                if !self.retired_rest {
                    self.active &= !bit;
                }
                self.run.ops.readout += 1;
            }
        }

        // Planned Pauli fault right after this op.
        if let Some(f) = self.fault.clone() {
            if f.ordinal == self.run.executed {
                if let FaultAction::Pauli(p) = &f.action {
                    self.run.frame.xor_pauli(p);
                }
            }
        }
        if let Some(kind) = op.kind() {
            self.apply_resting(kind, part_mask);
        }
        if self.collect_log {
            self.run.op_log.push(op.clone());
        }
        self.run.executed += 1;
        Ok(())
    }

    pub fn execute_sequence(&mut self, ops: &[ScheduledOp]) -> Result<()> {
        for op in ops {
            self.execute_op(op)?;
        }
        Ok(())
    }

    fn conj_gate(&mut self, gate: &str, targets: &[usize]) -> Result<()> {
        let masks: Vec<u64> = targets.iter().map(|&q| self.qmask(q)).collect();
        let f = &mut self.run.frame;
        match (gate, masks.as_slice()) {
            ("H", [bit]) => {
                let x = f.x & bit != 0;
                let z = f.z & bit != 0;
                if x != z {
                    f.x ^= bit;
                    f.z ^= bit;
                }
            }
            ("X" | "Y" | "Z", [_bit]) => {} // Paulis commute with the frame
            ("CNOT" | "CX", [cb, tb]) => {
                if f.x & cb != 0 {
                    f.x ^= tb;
                }
                if f.z & tb != 0 {
                    f.z ^= cb;
                }
            }
            ("CZ", [ab, bb]) => {
                if f.x & ab != 0 {
                    f.z ^= bb;
                }
                if f.x & bb != 0 {
                    f.z ^= ab;
                }
            }
            _ => return Err(SimError::UnknownGate(gate.to_string())),
        }
        Ok(())
    }
}
