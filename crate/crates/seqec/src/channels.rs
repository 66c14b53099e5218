//! Error processes of the sequential noise model: depolarizing gate errors,
//! phase-damping resting errors, initialisation errors and readout
//! declaration errors.

use crate::dm::{CMat, DensityMatrix, C_ZERO};
use crate::pauli::{PauliLetter, PauliString};
use crate::sparse::CsrMatrix;
use crate::{Result, SimError, TOL_CONTRACT};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// A completeness-satisfying set of Kraus operators on 1 or 2 qubits.
#[derive(Clone, Debug)]
pub struct KrausChannel {
    pub arity: usize,
    pub operators: Vec<CMat>,
}

impl KrausChannel {
    pub fn new(arity: usize, operators: Vec<CMat>) -> Result<Self> {
        let dim = 1usize << arity;
        let mut sum = CMat::zeros(dim);
        for k in &operators {
            if k.dim != dim {
                return Err(SimError::DimensionMismatch(format!(
                    "{}x{} Kraus operator in arity-{arity} channel",
                    k.dim, k.dim
                )));
            }
            let kdk = k.dagger().mul(k);
            for i in 0..dim * dim {
                sum.a[i] += kdk.a[i];
            }
        }
        let dev = sum.max_abs_diff(&CMat::identity(dim));
        if dev > TOL_CONTRACT {
            return Err(SimError::IncompleteChannel(dev));
        }
        Ok(Self { arity, operators })
    }

    pub fn identity(arity: usize) -> Self {
        Self { arity, operators: vec![CMat::identity(1 << arity)] }
    }

    /// `rho' = sum_K K rho K^dagger` on `targets`.
    pub fn apply(&self, rho: &DensityMatrix, targets: &[usize]) -> Result<DensityMatrix> {
        if targets.len() != self.arity {
            return Err(SimError::BadTargets(targets.to_vec()));
        }
        let mut out = DensityMatrix { n_qubits: rho.n_qubits, m: CMat::zeros(rho.dim()) };
        // Pauli-mixture channels conjugate by permutation, far cheaper than
        // the general sparse path.
        if let Some(mix) = self.pauli_mixture() {
            for (p, pauli) in mix {
                if p == 0.0 {
                    continue;
                }
                let mut term = rho.clone();
                let full = embed_pauli(&pauli, targets, rho.n_qubits);
                term.conj_pauli(&full);
                out.add_scaled(&term, p);
            }
            return Ok(out);
        }
        for k in &self.operators {
            let emb = crate::sparse::embed_operator(k, targets, rho.n_qubits)?;
            emb.conj_apply_into(rho, &mut out);
        }
        Ok(out)
    }

    /// When every Kraus operator is a scalar multiple of a Pauli string,
    /// return the exact probability decomposition `(|c|^2, P)`.
    pub fn pauli_mixture(&self) -> Option<Vec<(f64, PauliString)>> {
        let mut out = Vec::with_capacity(self.operators.len());
        for k in self.operators.iter() {
            out.push(as_scaled_pauli(k, self.arity)?);
        }
        Some(out)
    }

    /// 4^arity x 4^arity superoperator matrix (column-major vectorisation),
    /// used to compare channel representations.
    pub fn superoperator(&self) -> CMat {
        let dim = 1usize << self.arity;
        let mut s = CMat::zeros(dim * dim);
        for k in &self.operators {
            // vec(K rho K^dag) = (K (x) conj(K)) vec(rho) with row-major
            // vectorisation vec(rho)[r*dim+c] = rho[r,c].
            for r1 in 0..dim {
                for c1 in 0..dim {
                    let kv = k.get(r1, c1);
                    if kv == C_ZERO {
                        continue;
                    }
                    for r2 in 0..dim {
                        for c2 in 0..dim {
                            let kc = k.get(r2, c2).conj();
                            if kc == C_ZERO {
                                continue;
                            }
                            let row = r1 * dim + r2;
                            let col = c1 * dim + c2;
                            let v = s.get(row, col);
                            s.set(row, col, v + kv * kc);
                        }
                    }
                }
            }
        }
        s
    }
}

fn as_scaled_pauli(k: &CMat, arity: usize) -> Option<(f64, PauliString)> {
    let letters = [PauliLetter::I, PauliLetter::X, PauliLetter::Y, PauliLetter::Z];
    let dim = 1usize << arity;
    let combos = 4usize.pow(arity as u32);
    'combo: for idx in 0..combos {
        let ls: Vec<PauliLetter> = (0..arity)
            .map(|q| letters[(idx >> (2 * (arity - 1 - q))) & 3])
            .collect();
        let p = PauliString::from_letters(&ls);
        // Find the scale from the first nonzero entry, then verify.
        let col0 = 0u64;
        let r0 = (col0 ^ p.xmask()) as usize;
        let scale = k.get(r0, 0) / p.basis_phase(0);
        if scale.norm() < 1e-14 {
            continue;
        }
        for c in 0..dim {
            let r = (c as u64 ^ p.xmask()) as usize;
            for rr in 0..dim {
                let want = if rr == r { scale * p.basis_phase(c as u64) } else { C_ZERO };
                if (k.get(rr, c) - want).norm() > 1e-12 {
                    continue 'combo;
                }
            }
        }
        return Some((scale.norm_sqr(), p));
    }
    None
}

fn embed_pauli(p: &PauliString, targets: &[usize], n_qubits: usize) -> PauliString {
    let mut letters = vec![PauliLetter::I; n_qubits];
    for (j, &t) in targets.iter().enumerate() {
        letters[t] = p.letter(j);
    }
    PauliString::from_letters(&letters)
}

/// Single-qubit depolarizing channel with total error probability `p` split
/// evenly over X, Y, Z.
pub fn depolarizing_1q(p: f64) -> Result<KrausChannel> {
    check_prob(p)?;
    let w0 = (1.0 - p).sqrt();
    let w = (p / 3.0).sqrt();
    let mut ops = vec![scaled(&crate::dm::gates::x(), 0.0)];
    ops[0] = scaled(&CMat::identity(2), w0);
    ops.push(scaled(&crate::dm::gates::x(), w));
    ops.push(scaled(&crate::dm::gates::y(), w));
    ops.push(scaled(&crate::dm::gates::z(), w));
    KrausChannel::new(1, ops)
}

/// Two-qubit depolarizing channel: 15 non-identity Pauli pairs at `p/15`.
pub fn depolarizing_2q(p: f64) -> Result<KrausChannel> {
    check_prob(p)?;
    let letters = [PauliLetter::I, PauliLetter::X, PauliLetter::Y, PauliLetter::Z];
    let mut ops = Vec::with_capacity(16);
    ops.push(scaled(&CMat::identity(4), (1.0 - p).sqrt()));
    let w = (p / 15.0).sqrt();
    for i in 0..4 {
        for j in 0..4 {
            if i == 0 && j == 0 {
                continue;
            }
            let p2 = PauliString::from_letters(&[letters[i], letters[j]]);
            ops.push(scaled(&pauli_matrix(&p2), w));
        }
    }
    KrausChannel::new(2, ops)
}

fn pauli_matrix(p: &PauliString) -> CMat {
    let dim = 1usize << p.n_qubits();
    let mut m = CMat::zeros(dim);
    for c in 0..dim {
        let r = (c as u64 ^ p.xmask()) as usize;
        m.set(r, c, p.basis_phase(c as u64));
    }
    m
}

/// Phase damping in the two-operator representation `sqrt(alpha) I`,
/// `sqrt(1-alpha) Z` with `alpha = (1 + sqrt(1-gamma)) / 2`. Off-diagonals
/// scale by exactly `sqrt(1-gamma)`.
pub fn phase_damping(gamma: f64) -> Result<KrausChannel> {
    check_gamma(gamma)?;
    let alpha = phase_damping_alpha(gamma);
    KrausChannel::new(
        1,
        vec![
            scaled(&CMat::identity(2), alpha.sqrt()),
            scaled(&crate::dm::gates::z(), (1.0 - alpha).sqrt()),
        ],
    )
}

pub fn phase_damping_alpha(gamma: f64) -> f64 {
    (1.0 + (1.0 - gamma).sqrt()) / 2.0
}

/// Standard representation `E0 = diag(1, sqrt(1-gamma))`, `E1 = diag(0,
/// sqrt(gamma))`; kept for the representation-equivalence check.
pub fn phase_damping_standard(gamma: f64) -> Result<KrausChannel> {
    check_gamma(gamma)?;
    let e0 = CMat::from_real(&[&[1.0, 0.0], &[0.0, (1.0 - gamma).sqrt()]]);
    let e1 = CMat::from_real(&[&[0.0, 0.0], &[0.0, gamma.sqrt()]]);
    KrausChannel::new(1, vec![e0, e1])
}

/// `gamma = 1 - exp(-t / (2 T2))` for idle time `t`.
pub fn gamma_from_t2(t: f64, t2_spin: f64) -> Result<f64> {
    if t2_spin <= 0.0 {
        return Err(SimError::BadCoherenceTime(t2_spin));
    }
    if t < 0.0 {
        return Err(SimError::BadCoherenceTime(t));
    }
    Ok(1.0 - (-t / (2.0 * t2_spin)).exp())
}

fn scaled(m: &CMat, s: f64) -> CMat {
    let mut out = m.clone();
    out.scale(s);
    out
}

fn check_prob(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(SimError::BadProbability(p));
    }
    Ok(())
}

fn check_gamma(g: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&g) {
        return Err(SimError::BadGamma(g));
    }
    Ok(())
}

/// Operation kinds carrying distinct durations and noise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpKind {
    Sqg,
    Tqg,
    Readout,
    Init,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ReadoutMode {
    #[default]
    Symmetric,
    Asymmetric,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RestingMode {
    #[default]
    None,
    ScaledByPTqg,
    FromT2,
}

/// Durations of the sequential operations, seconds.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Durations {
    pub sqg: f64,
    pub tqg: f64,
    pub readout: f64,
    pub init: f64,
}

impl Default for Durations {
    fn default() -> Self {
        Self { sqg: 5e-6, tqg: 1e-5, readout: 1e-4, init: 1e-5 }
    }
}

impl Durations {
    pub fn of(&self, kind: OpKind) -> f64 {
        match kind {
            OpKind::Sqg => self.sqg,
            OpKind::Tqg => self.tqg,
            OpKind::Readout => self.readout,
            OpKind::Init => self.init,
        }
    }
}

/// Full error-model parameter set.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ErrorParams {
    pub p_tqg: f64,
    pub p_sqg: f64,
    pub p_init: f64,
    pub p_ro: f64,
    pub readout_mode: ReadoutMode,
    pub resting_mode: RestingMode,
    /// Ground-state (spin) coherence time, seconds; used by `FromT2`.
    pub t2_spin: f64,
    /// Excited-state (optical) coherence time, seconds; reference only.
    pub t2_opt: f64,
    pub durations: Durations,
}

impl ErrorParams {
    pub fn zero_noise() -> Self {
        default_params(0.0).unwrap()
    }

    pub fn validate(&self) -> Result<()> {
        for p in [self.p_tqg, self.p_sqg, self.p_init, self.p_ro] {
            check_prob(p)?;
        }
        for d in [
            self.durations.sqg,
            self.durations.tqg,
            self.durations.readout,
            self.durations.init,
        ] {
            if d <= 0.0 {
                return Err(SimError::Config(format!("non-positive duration {d}")));
            }
        }
        if self.resting_mode == RestingMode::FromT2 && self.t2_spin <= 0.0 {
            return Err(SimError::Config(
                "resting_mode = from_t2 requires t2_spin > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Parameter ratios of the sequential model: `p_sqg = p_tqg / 10`,
/// `p_init = p_ro = 2/3 * p_sqg` (initialisation and readout live in the
/// computational basis, so phase errors do not contribute).
pub fn default_params(p_tqg: f64) -> Result<ErrorParams> {
    check_prob(p_tqg)?;
    let p_sqg = p_tqg / 10.0;
    let p_ir = p_sqg * 2.0 / 3.0;
    Ok(ErrorParams {
        p_tqg,
        p_sqg,
        p_init: p_ir,
        p_ro: p_ir,
        readout_mode: ReadoutMode::Symmetric,
        resting_mode: RestingMode::None,
        t2_spin: 2.5e-3,
        t2_opt: 2.5e-3,
        durations: Durations::default(),
    })
}

/// Resting (idle) damping coefficient for one operation of `kind`.
pub fn resting_gamma(kind: OpKind, params: &ErrorParams) -> Result<f64> {
    match params.resting_mode {
        RestingMode::None => Ok(0.0),
        RestingMode::ScaledByPTqg => {
            let g = match kind {
                OpKind::Sqg => params.p_tqg,
                OpKind::Tqg => 2.0 * params.p_tqg,
                OpKind::Readout => 20.0 * params.p_tqg,
                OpKind::Init => 2.0 * params.p_tqg,
            };
            check_gamma(g)?;
            Ok(g)
        }
        RestingMode::FromT2 => gamma_from_t2(params.durations.of(kind), params.t2_spin),
    }
}

/// Single-qubit state after noisy initialisation: `diag(1 - p_init, p_init)`.
pub fn noisy_init_state(p_init: f64) -> Result<DensityMatrix> {
    check_prob(p_init)?;
    let mut rho = DensityMatrix::basis_state(1, "0")?;
    rho.m.set(0, 0, Complex64::new(1.0 - p_init, 0.0));
    rho.m.set(1, 1, Complex64::new(p_init, 0.0));
    Ok(rho)
}

/// Mix the two unnormalized measurement branches into declared branches.
///
/// Symmetric: each branch is misdeclared with probability `p_ro`.
/// Asymmetric: a `-1` (minus) result may be declared `+1`, never the
/// reverse.
pub fn noisy_readout(
    plus: &DensityMatrix,
    minus: &DensityMatrix,
    p_ro: f64,
    mode: ReadoutMode,
) -> Result<(DensityMatrix, DensityMatrix)> {
    check_prob(p_ro)?;
    let mut declared_plus;
    let mut declared_minus;
    match mode {
        ReadoutMode::Symmetric => {
            declared_plus = plus.clone();
            declared_plus.m.scale(1.0 - p_ro);
            declared_plus.add_scaled(minus, p_ro);
            declared_minus = minus.clone();
            declared_minus.m.scale(1.0 - p_ro);
            declared_minus.add_scaled(plus, p_ro);
        }
        ReadoutMode::Asymmetric => {
            declared_plus = plus.clone();
            declared_plus.add_scaled(minus, p_ro);
            declared_minus = minus.clone();
            declared_minus.m.scale(1.0 - p_ro);
        }
    }
    Ok((declared_plus, declared_minus))
}

/// Sparse identity kept around for projector algebra call sites.
pub fn identity_csr(n_qubits: usize) -> CsrMatrix {
    CsrMatrix::identity(1 << n_qubits)
}
