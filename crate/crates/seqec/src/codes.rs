//! The three distance-3 codes: generators, logical operators, logical basis
//! states, lookup-table decoding and noiseless (perfect) error correction.

use crate::dm::{CMat, DensityMatrix, StateVector, C_ZERO};
use crate::pauli::{PauliLetter, PauliString};
use crate::{Result, SimError};
use num_complex::Complex64;
use std::collections::HashMap;

/// One of the six Bloch-axis logical states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BlochState {
    Zero,
    One,
    Plus,
    Minus,
    PlusI,
    MinusI,
}

pub const BLOCH_STATES: [BlochState; 6] = [
    BlochState::Zero,
    BlochState::One,
    BlochState::Plus,
    BlochState::Minus,
    BlochState::PlusI,
    BlochState::MinusI,
];

impl BlochState {
    pub fn label(&self) -> &'static str {
        match self {
            BlochState::Zero => "0",
            BlochState::One => "1",
            BlochState::Plus => "+",
            BlochState::Minus => "-",
            BlochState::PlusI => "+i",
            BlochState::MinusI => "-i",
        }
    }

    /// Reduced single-qubit state vector.
    pub fn reduced_vector(&self) -> StateVector {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let (a, b) = match self {
            BlochState::Zero => (Complex64::new(1.0, 0.0), C_ZERO),
            BlochState::One => (C_ZERO, Complex64::new(1.0, 0.0)),
            BlochState::Plus => (Complex64::new(s, 0.0), Complex64::new(s, 0.0)),
            BlochState::Minus => (Complex64::new(s, 0.0), Complex64::new(-s, 0.0)),
            BlochState::PlusI => (Complex64::new(s, 0.0), Complex64::new(0.0, s)),
            BlochState::MinusI => (Complex64::new(s, 0.0), Complex64::new(0.0, -s)),
        };
        StateVector { n_qubits: 1, amp: vec![a, b] }
    }

    /// The logical NOT flipping this state to its antipode: `Z_L` on the
    /// X axis, `X_L` elsewhere.
    pub fn not_axis(&self) -> PauliLetter {
        match self {
            BlochState::Plus | BlochState::Minus => PauliLetter::Z,
            _ => PauliLetter::X,
        }
    }

    /// State reached after `n` applications of the logical NOT (up to a
    /// global phase).
    pub fn after_nots(&self, n: usize) -> BlochState {
        if n % 2 == 0 {
            return *self;
        }
        match self {
            BlochState::Zero => BlochState::One,
            BlochState::One => BlochState::Zero,
            BlochState::Plus => BlochState::Minus,
            BlochState::Minus => BlochState::Plus,
            BlochState::PlusI => BlochState::MinusI,
            BlochState::MinusI => BlochState::PlusI,
        }
    }
}

/// A distance-3 stabilizer code with its lookup decoder.
#[derive(Clone, Debug)]
pub struct StabilizerCode {
    pub name: &'static str,
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub generators: Vec<PauliString>,
    pub logical_x: PauliString,
    pub logical_y: PauliString,
    pub logical_z: PauliString,
    /// Minimum-weight correction for every syndrome.
    pub lookup_table: HashMap<u16, PauliString>,
}

impl StabilizerCode {
    /// Syndrome bits: bit `i` set when the error anticommutes with
    /// generator `i`.
    pub fn syndrome_of(&self, e: &PauliString) -> u16 {
        let mut s = 0u16;
        for (i, g) in self.generators.iter().enumerate() {
            if !g.commutes_with(e) {
                s |= 1 << i;
            }
        }
        s
    }

    /// All `2^(n-k)` stabilizer-group elements with exact phases.
    pub fn stabilizer_group(&self) -> Vec<PauliString> {
        let mut group = vec![PauliString::identity(self.n)];
        for g in &self.generators {
            let mut next = Vec::with_capacity(group.len() * 2);
            for e in &group {
                next.push(e.clone());
                next.push(e.mul(g));
            }
            group = next;
        }
        group
    }

    /// Minimum-weight representative of `op`'s coset modulo the stabilizer,
    /// ties broken by the lexicographic string form.
    pub fn min_weight_coset_rep(&self, op: &PauliString) -> PauliString {
        let mut best = op.clone();
        let mut best_key = (best.weight(), format!("{best}"));
        for s in self.stabilizer_group() {
            let cand = op.mul(&s);
            let key = (cand.weight(), format!("{cand}"));
            if key < best_key {
                best_key = key;
                best = cand;
            }
        }
        best
    }

    /// Classify a normalizer Pauli: `None` when it is a stabilizer (up to
    /// phase), otherwise the logical letter it implements.
    pub fn logical_class(&self, op: &PauliString) -> Option<PauliLetter> {
        debug_assert_eq!(self.syndrome_of(op), 0, "only defined on the normalizer");
        let anti_z = !op.commutes_with(&self.logical_z);
        let anti_x = !op.commutes_with(&self.logical_x);
        match (anti_z, anti_x) {
            (false, false) => None,
            (true, false) => Some(PauliLetter::X),
            (true, true) => Some(PauliLetter::Y),
            (false, true) => Some(PauliLetter::Z),
        }
    }

    /// Deviation from the codespace: max over generators of
    /// `|tr(g rho) - tr(rho)|`.
    pub fn codespace_deviation(&self, rho: &DensityMatrix) -> f64 {
        let t = rho.trace();
        self.generators
            .iter()
            .map(|g| (rho.expectation(g).unwrap() - t).abs())
            .fold(0.0, f64::max)
    }
}

fn parse_all(strings: &[&str]) -> Vec<PauliString> {
    strings.iter().map(|s| PauliString::parse(s).unwrap()).collect()
}

/// Enumerate Pauli errors of the given weight in the deterministic order
/// used for lookup-table construction: ascending qubit tuples, letters
/// ordered X < Y < Z per position.
pub fn errors_of_weight(n: usize, w: usize) -> Vec<PauliString> {
    let letters = [PauliLetter::X, PauliLetter::Y, PauliLetter::Z];
    if w == 0 {
        return vec![PauliString::identity(n)];
    }
    if w > n {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut combo: Vec<usize> = (0..w).collect();
    loop {
        let assignments = 3usize.pow(w as u32);
        for a in 0..assignments {
            let mut ls = vec![PauliLetter::I; n];
            for (j, &q) in combo.iter().enumerate() {
                ls[q] = letters[(a / 3usize.pow((w - 1 - j) as u32)) % 3];
            }
            out.push(PauliString::from_letters(&ls));
        }
        // Advance the ascending combination, or finish.
        let mut i = w;
        let mut moved = false;
        while i > 0 {
            i -= 1;
            if combo[i] != i + n - w {
                combo[i] += 1;
                for j in i + 1..w {
                    combo[j] = combo[j - 1] + 1;
                }
                moved = true;
                break;
            }
        }
        if !moved {
            return out;
        }
    }
}

fn build_lookup(n: usize, generators: &[PauliString]) -> HashMap<u16, PauliString> {
    let total = 1usize << generators.len();
    let mut table = HashMap::with_capacity(total);
    table.insert(0u16, PauliString::identity(n));
    let syndrome = |e: &PauliString| -> u16 {
        let mut s = 0u16;
        for (i, g) in generators.iter().enumerate() {
            if !g.commutes_with(e) {
                s |= 1 << i;
            }
        }
        s
    };
    for w in 1..=n {
        if table.len() == total {
            break;
        }
        for e in errors_of_weight(n, w) {
            let s = syndrome(&e);
            table.entry(s).or_insert(e);
        }
    }
    table
}

/// The five-qubit perfect code with cyclic generators `XZZXI` etc.
pub fn five_one_three() -> StabilizerCode {
    let generators = parse_all(&["XZZXI", "IXZZX", "XIXZZ", "ZXIXZ"]);
    finish_code("513", 5, generators, "XXXXX", "ZZZZZ")
}

/// The Steane code built from the `[7,4]` Hamming parity checks.
pub fn steane() -> StabilizerCode {
    // Hamming check matrix rows over qubits 0..6: column q is q+1 in binary.
    let rows: [[usize; 4]; 3] = [[3, 4, 5, 6], [1, 2, 5, 6], [0, 2, 4, 6]];
    let mut gen_strings = Vec::new();
    for kind in ['X', 'Z'] {
        for row in rows.iter() {
            let mut s: Vec<char> = "IIIIIII".chars().collect();
            for &q in row {
                s[q] = kind;
            }
            gen_strings.push(s.into_iter().collect::<String>());
        }
    }
    let refs: Vec<&str> = gen_strings.iter().map(String::as_str).collect();
    let generators = parse_all(&refs);
    finish_code("steane", 7, generators, "XXXXXXX", "ZZZZZZZ")
}

/// The nine-data-qubit distance-3 surface code on a 3x3 lattice:
/// four weight-4 bulk stabilizers and four weight-2 boundary stabilizers.
pub fn surface9() -> StabilizerCode {
    let generators = parse_all(&[
        // X-type.
        "IXXIIIIII",
        "XXIXXIIII",
        "IIIIXXIXX",
        "IIIIIIXXI",
        // Z-type.
        "ZIIZIIIII",
        "IZZIZZIII",
        "IIIZZIZZI",
        "IIIIIZIIZ",
    ]);
    finish_code("surface9", 9, generators, "XIIXIIXII", "ZZZIIIIII")
}

fn finish_code(
    name: &'static str,
    n: usize,
    generators: Vec<PauliString>,
    raw_x: &str,
    raw_z: &str,
) -> StabilizerCode {
    let lookup_table = build_lookup(n, &generators);
    let mut code = StabilizerCode {
        name,
        n,
        k: 1,
        d: 3,
        generators,
        logical_x: PauliString::parse(raw_x).unwrap(),
        logical_y: PauliString::identity(n),
        logical_z: PauliString::parse(raw_z).unwrap(),
        lookup_table,
    };
    code.logical_z = code.min_weight_coset_rep(&code.logical_z);
    code.logical_x = code.min_weight_coset_rep(&code.logical_x);
    code.logical_y =
        code.min_weight_coset_rep(&code.logical_x.mul(&code.logical_z).with_extra_phase(1));
    code
}

pub fn by_name(name: &str) -> Result<StabilizerCode> {
    match name {
        "513" => Ok(five_one_three()),
        "steane" => Ok(steane()),
        "surface9" => Ok(surface9()),
        other => Err(SimError::UnknownCode(other.to_string())),
    }
}

pub const CODE_NAMES: [&str; 3] = ["513", "steane", "surface9"];

/// The logical codewords of a code; the six Bloch states derive from them.
#[derive(Clone, Debug)]
pub struct LogicalBasis {
    pub zero: StateVector,
    pub one: StateVector,
}

impl LogicalBasis {
    pub fn state(&self, which: BlochState) -> StateVector {
        let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match which {
            BlochState::Zero => self.zero.clone(),
            BlochState::One => self.one.clone(),
            BlochState::Plus => combine(&self.zero, &self.one, s, s),
            BlochState::Minus => combine(&self.zero, &self.one, s, -s),
            BlochState::PlusI => combine(&self.zero, &self.one, s, s * i),
            BlochState::MinusI => combine(&self.zero, &self.one, s, -s * i),
        }
    }
}

fn combine(a: &StateVector, b: &StateVector, ca: Complex64, cb: Complex64) -> StateVector {
    let mut out = a.clone().scaled(ca);
    out.add(b, cb);
    out
}

/// Construct `|0_L>` by projecting a computational seed onto the joint `+1`
/// eigenspace, then `|1_L> = X_L |0_L>`.
pub fn logical_basis(code: &StabilizerCode) -> Result<LogicalBasis> {
    let n = code.n;
    let dim = 1usize << n;
    for seed in 0..dim as u64 {
        let mut psi = StateVector::basis(n, seed);
        // (I + Z_L)/2 first, then the generator projectors.
        let mut ops = vec![code.logical_z.clone()];
        ops.extend(code.generators.iter().cloned());
        for g in &ops {
            let mut next = psi.clone();
            next.add_pauli_scaled(&psi, g, Complex64::new(1.0, 0.0));
            for a in next.amp.iter_mut() {
                *a *= 0.5;
            }
            psi = next;
        }
        if psi.norm() > 1e-6 {
            psi.normalize()?;
            let one = psi.apply_pauli(&code.logical_x);
            return Ok(LogicalBasis { zero: psi, one });
        }
    }
    Err(SimError::ZeroTrace)
}

/// One round of perfect (noise-free) error correction by projector algebra:
/// project onto each syndrome subspace, apply the lookup correction, sum.
pub fn perfect_ec(rho: &DensityMatrix, code: &StabilizerCode) -> DensityMatrix {
    assert_eq!(rho.n_qubits, code.n, "perfect_ec acts on the data register");
    let mut out = DensityMatrix { n_qubits: code.n, m: CMat::zeros(rho.dim()) };
    let cutoff = rho.trace() * 1e-30;
    split_recursive(rho, code, 0, 0u16, cutoff, &mut out);
    out
}

fn split_recursive(
    branch: &DensityMatrix,
    code: &StabilizerCode,
    gi: usize,
    syndrome: u16,
    cutoff: f64,
    out: &mut DensityMatrix,
) {
    if gi == code.generators.len() {
        let corr = &code.lookup_table[&syndrome];
        let mut fixed = branch.clone();
        fixed.conj_pauli(corr);
        out.add_scaled(&fixed, 1.0);
        return;
    }
    let (plus, minus) = project_generator(branch, &code.generators[gi]);
    if plus.trace() > cutoff {
        split_recursive(&plus, code, gi + 1, syndrome, cutoff, out);
    }
    if minus.trace() > cutoff {
        split_recursive(&minus, code, gi + 1, syndrome | (1 << gi), cutoff, out);
    }
}

/// `(P+ rho P+, P- rho P-)` for `P± = (I ± g)/2` with Hermitian Pauli `g`.
fn project_generator(rho: &DensityMatrix, g: &PauliString) -> (DensityMatrix, DensityMatrix) {
    let dim = rho.dim();
    let x = g.xmask() as usize;
    let mut plus = DensityMatrix { n_qubits: rho.n_qubits, m: CMat::zeros(dim) };
    let mut minus = plus.clone();
    for r in 0..dim {
        let pr = g.basis_phase((r ^ x) as u64);
        for c in 0..dim {
            let v = rho.m.a[r * dim + c];
            // a = (g rho)[r,c], b = (rho g)[r,c], cc = (g rho g)[r,c].
            let a = pr * rho.m.a[(r ^ x) * dim + c];
            let b = rho.m.a[r * dim + (c ^ x)] * g.basis_phase((c ^ x) as u64);
            let cc = pr * rho.m.a[(r ^ x) * dim + (c ^ x)] * g.basis_phase((c ^ x) as u64).conj();
            plus.m.a[r * dim + c] = (v + a + b + cc) * 0.25;
            minus.m.a[r * dim + c] = (v - a - b + cc) * 0.25;
        }
    }
    (plus, minus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn all_codes() -> Vec<StabilizerCode> {
        vec![five_one_three(), steane(), surface9()]
    }

    #[test]
    fn generators_commute_pairwise() {
        for code in all_codes() {
            for (i, a) in code.generators.iter().enumerate() {
                for b in code.generators.iter().skip(i + 1) {
                    assert!(a.commutes_with(b), "{}: {a} vs {b}", code.name);
                }
            }
        }
    }

    #[test]
    fn generator_counts_and_weights() {
        assert_eq!(five_one_three().generators.len(), 4);
        assert_eq!(steane().generators.len(), 6);
        let c = surface9();
        assert_eq!(c.generators.len(), 8);
        let mut weights: Vec<usize> = c.generators.iter().map(|g| g.weight()).collect();
        weights.sort_unstable();
        assert_eq!(weights, vec![2, 2, 2, 2, 4, 4, 4, 4]);
    }

    #[test]
    fn logical_operators_commute_with_generators_and_anticommute() {
        for code in all_codes() {
            for g in &code.generators {
                assert!(code.logical_x.commutes_with(g));
                assert!(code.logical_z.commutes_with(g));
                assert!(code.logical_y.commutes_with(g));
            }
            assert!(!code.logical_x.commutes_with(&code.logical_z));
        }
    }

    #[test]
    fn logical_x_and_z_have_weight_three() {
        for code in all_codes() {
            assert_eq!(code.logical_x.weight(), 3, "{} X_L", code.name);
            assert_eq!(code.logical_z.weight(), 3, "{} Z_L", code.name);
        }
        // Exhaustive minimum over each full logical coset.
        for code in all_codes() {
            let group = code.stabilizer_group();
            for logical in [&code.logical_x, &code.logical_z] {
                let min = group.iter().map(|s| logical.mul(s).weight()).min().unwrap();
                assert_eq!(min, 3, "{}", code.name);
            }
        }
    }

    #[test]
    fn five_qubit_weight_one_syndromes_are_distinct() {
        let code = five_one_three();
        let mut seen = std::collections::HashSet::new();
        for e in errors_of_weight(5, 1) {
            let s = code.syndrome_of(&e);
            assert_ne!(s, 0, "{e} should be detectable");
            assert!(seen.insert(s), "syndrome clash for {e}");
        }
        assert_eq!(seen.len(), 15);
    }

    #[test]
    fn lookup_tables_cover_all_syndromes_with_safe_weight_one_decoding() {
        for code in all_codes() {
            let total = 1usize << code.generators.len();
            assert_eq!(code.lookup_table.len(), total, "{}", code.name);
            for e in errors_of_weight(code.n, 1) {
                let s = code.syndrome_of(&e);
                let corr = &code.lookup_table[&s];
                // corr * e must be a stabilizer, not a logical.
                let left = corr.mul(&e);
                assert_eq!(code.syndrome_of(&left), 0);
                assert!(
                    code.logical_class(&left).is_none(),
                    "{}: weight-1 error {e} miscorrected by {corr}",
                    code.name
                );
            }
        }
    }

    #[test]
    fn steane_css_split() {
        // X errors only trigger Z-type generators (the last three).
        let code = steane();
        for q in 0..7 {
            let e = PauliString::single(7, q, PauliLetter::X);
            let s = code.syndrome_of(&e);
            assert_eq!(s & 0b000111, 0, "X error touched X-type checks");
            assert_ne!(s & 0b111000, 0);
        }
    }

    #[test]
    fn logical_basis_is_stabilized() {
        for code in all_codes() {
            let basis = logical_basis(&code).unwrap();
            for state in BLOCH_STATES {
                let psi = basis.state(state);
                let rho = DensityMatrix::from_pure(&psi);
                for g in &code.generators {
                    assert_abs_diff_eq!(rho.expectation(g).unwrap(), 1.0, epsilon = 1e-10);
                }
            }
            let olap = basis.zero.inner(&basis.one).norm();
            assert!(olap < 1e-10, "{}", code.name);
        }
    }

    #[test]
    fn logical_expectations_match_bloch_axes() {
        for code in all_codes() {
            let basis = logical_basis(&code).unwrap();
            let zero = DensityMatrix::from_pure(&basis.state(BlochState::Zero));
            assert_abs_diff_eq!(zero.expectation(&code.logical_z).unwrap(), 1.0, epsilon = 1e-10);
            let plus = DensityMatrix::from_pure(&basis.state(BlochState::Plus));
            assert_abs_diff_eq!(plus.expectation(&code.logical_z).unwrap(), 0.0, epsilon = 1e-10);
            assert_abs_diff_eq!(plus.expectation(&code.logical_x).unwrap(), 1.0, epsilon = 1e-10);
            let pi = DensityMatrix::from_pure(&basis.state(BlochState::PlusI));
            assert_abs_diff_eq!(pi.expectation(&code.logical_y).unwrap(), 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn steane_zero_logical_has_eight_components() {
        let basis = logical_basis(&steane()).unwrap();
        let nonzero = basis.zero.amp.iter().filter(|a| a.norm() > 1e-9).count();
        assert_eq!(nonzero, 8);
        let amp = basis.zero.amp.iter().find(|a| a.norm() > 1e-9).unwrap();
        assert_abs_diff_eq!(amp.norm(), 1.0 / 8f64.sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn perfect_ec_fixes_codespace_and_weight_one_errors() {
        for code in all_codes() {
            let basis = logical_basis(&code).unwrap();
            let zero = DensityMatrix::from_pure(&basis.state(BlochState::Zero));
            let out = perfect_ec(&zero, &code);
            assert!(out.m.max_abs_diff(&zero.m) < 1e-10, "{}", code.name);

            for e in errors_of_weight(code.n, 1) {
                let mut damaged = zero.clone();
                damaged.conj_pauli(&e);
                let fixed = perfect_ec(&damaged, &code);
                let fid = fixed.fidelity_with_pure(&basis.zero).unwrap();
                assert!(fid > 1.0 - 1e-10, "{}: {e} not corrected (F = {fid})", code.name);
            }
        }
    }

    #[test]
    fn perfect_ec_recovers_all_six_states_after_weight_one() {
        for code in all_codes() {
            let basis = logical_basis(&code).unwrap();
            for state in BLOCH_STATES {
                let psi = basis.state(state);
                let rho = DensityMatrix::from_pure(&psi);
                for e in errors_of_weight(code.n, 1) {
                    let mut damaged = rho.clone();
                    damaged.conj_pauli(&e);
                    let fixed = perfect_ec(&damaged, &code);
                    let fid = fixed.fidelity_with_pure(&psi).unwrap();
                    assert!(fid > 1.0 - 1e-10, "{} {state:?} {e}", code.name);
                }
            }
        }
    }

    #[test]
    fn perfect_ec_is_idempotent_and_trace_preserving() {
        let code = five_one_three();
        let basis = logical_basis(&code).unwrap();
        let mut rho = DensityMatrix::from_pure(&basis.state(BlochState::Plus));
        // Smear with a weight-2 error component.
        let e = PauliString::parse("XIIXI").unwrap();
        let mut damaged = rho.clone();
        damaged.conj_pauli(&e);
        rho.m.scale(0.7);
        rho.add_scaled(&damaged, 0.3);

        let once = perfect_ec(&rho, &code);
        let twice = perfect_ec(&once, &code);
        assert!(once.m.max_abs_diff(&twice.m) < 1e-10);
        assert_abs_diff_eq!(once.trace(), rho.trace(), epsilon = 1e-10);
        assert!(code.codespace_deviation(&once) < 1e-10);
    }

    #[test]
    fn five_qubit_weight_two_errors_decode_to_logicals_exactly_when_expected() {
        // For the perfect code every weight-2 error shares its syndrome with
        // one weight-1 error, so correction leaves a logical operator.
        let code = five_one_three();
        let basis = logical_basis(&code).unwrap();
        let zero = DensityMatrix::from_pure(&basis.zero);
        let mut logical_count = 0;
        for e in errors_of_weight(5, 2) {
            let corr = &code.lookup_table[&code.syndrome_of(&e)];
            let residual = corr.mul(&e);
            let class = code.logical_class(&residual);
            let mut damaged = zero.clone();
            damaged.conj_pauli(&e);
            let fixed = perfect_ec(&damaged, &code);
            let fid = fixed.fidelity_with_pure(&basis.zero).unwrap();
            match class {
                None | Some(PauliLetter::Z) => assert!(fid > 1.0 - 1e-10),
                _ => {
                    assert!(fid < 1e-10, "{e}: expected logical flip, F = {fid}");
                    logical_count += 1;
                }
            }
        }
        assert!(logical_count > 0);
    }

    #[test]
    fn code_registry() {
        assert!(by_name("513").is_ok());
        assert!(by_name("steane").is_ok());
        assert!(by_name("surface9").is_ok());
        assert!(by_name("shor").is_err());
    }
}
