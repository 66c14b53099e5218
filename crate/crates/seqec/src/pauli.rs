//! Pauli strings in symplectic (X-mask, Z-mask) form.
//!
//! A string is stored as `i^phase_pow · X^xmask · Z^zmask`, where the masks
//! live in *index space*: the bit for qubit `q` of an `n`-qubit string is bit
//! `n - 1 - q`, matching the basis-index convention of the crate (qubit 0 is
//! the most significant tensor factor). A `Y` letter is `iXZ`, so it sets both
//! mask bits and bumps the stored phase once.

use crate::{Result, SimError};
use num_complex::Complex64;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PauliLetter {
    I,
    X,
    Y,
    Z,
}

impl PauliLetter {
    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(Self::I),
            'X' => Some(Self::X),
            'Y' => Some(Self::Y),
            'Z' => Some(Self::Z),
            _ => None,
        }
    }

    fn as_char(self) -> char {
        match self {
            Self::I => 'I',
            Self::X => 'X',
            Self::Y => 'Y',
            Self::Z => 'Z',
        }
    }
}

/// A phased n-qubit Pauli operator.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    n_qubits: usize,
    xmask: u64,
    zmask: u64,
    /// Power of `i` in front of `X^xmask Z^zmask`.
    phase_pow: u8,
}

impl PauliString {
    pub fn identity(n_qubits: usize) -> Self {
        Self { n_qubits, xmask: 0, zmask: 0, phase_pow: 0 }
    }

    /// Build from letters, phase `+1` in letter form (`Y` counts as `iXZ`
    /// internally, which cancels in the letter-form phase).
    pub fn from_letters(letters: &[PauliLetter]) -> Self {
        let n = letters.len();
        let mut x = 0u64;
        let mut z = 0u64;
        let mut phase = 0u8;
        for (q, l) in letters.iter().enumerate() {
            let bit = 1u64 << (n - 1 - q);
            match l {
                PauliLetter::I => {}
                PauliLetter::X => x |= bit,
                PauliLetter::Y => {
                    x |= bit;
                    z |= bit;
                    phase = (phase + 1) % 4;
                }
                PauliLetter::Z => z |= bit,
            }
        }
        Self { n_qubits: n, xmask: x, zmask: z, phase_pow: phase }
    }

    /// Parse e.g. `"XZZXI"`, `"-YIZ"`, `"+iXX"`.
    pub fn parse(s: &str) -> Result<Self> {
        let mut rest = s;
        let mut phase = 0u8;
        if let Some(r) = rest.strip_prefix("+i") {
            phase = 1;
            rest = r;
        } else if let Some(r) = rest.strip_prefix("-i") {
            phase = 3;
            rest = r;
        } else if let Some(r) = rest.strip_prefix('-') {
            phase = 2;
            rest = r;
        } else if let Some(r) = rest.strip_prefix('+') {
            rest = r;
        }
        let letters: Option<Vec<_>> = rest.chars().map(PauliLetter::from_char).collect();
        let letters = letters.ok_or_else(|| SimError::UnknownGate(s.to_string()))?;
        let mut p = Self::from_letters(&letters);
        p.phase_pow = (p.phase_pow + phase) % 4;
        Ok(p)
    }

    /// Single-letter string on `target` of an `n_qubits` register.
    pub fn single(n_qubits: usize, target: usize, letter: PauliLetter) -> Self {
        let mut letters = vec![PauliLetter::I; n_qubits];
        letters[target] = letter;
        Self::from_letters(&letters)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn letter(&self, q: usize) -> PauliLetter {
        let bit = 1u64 << (self.n_qubits - 1 - q);
        match (self.xmask & bit != 0, self.zmask & bit != 0) {
            (false, false) => PauliLetter::I,
            (true, false) => PauliLetter::X,
            (true, true) => PauliLetter::Y,
            (false, true) => PauliLetter::Z,
        }
    }

    pub fn letters(&self) -> Vec<PauliLetter> {
        (0..self.n_qubits).map(|q| self.letter(q)).collect()
    }

    pub fn xmask(&self) -> u64 {
        self.xmask
    }

    pub fn zmask(&self) -> u64 {
        self.zmask
    }

    /// Number of non-identity letters.
    pub fn weight(&self) -> usize {
        (self.xmask | self.zmask).count_ones() as usize
    }

    pub fn is_identity_up_to_phase(&self) -> bool {
        self.xmask == 0 && self.zmask == 0
    }

    /// Letter-form phase as a complex unit (`Y` letters absorbed).
    pub fn letter_phase(&self) -> Complex64 {
        let y_count = (self.xmask & self.zmask).count_ones() as u8;
        ipow((4 + self.phase_pow - y_count % 4) % 4)
    }

    /// True when the operators commute.
    pub fn commutes_with(&self, other: &Self) -> bool {
        let anti = (self.xmask & other.zmask).count_ones()
            + (self.zmask & other.xmask).count_ones();
        anti % 2 == 0
    }

    /// Product `self · other` with exact phase tracking.
    pub fn mul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.n_qubits, other.n_qubits);
        let cross = (self.zmask & other.xmask).count_ones() as u8;
        Self {
            n_qubits: self.n_qubits,
            xmask: self.xmask ^ other.xmask,
            zmask: self.zmask ^ other.zmask,
            phase_pow: (self.phase_pow + other.phase_pow + 2 * (cross % 2)) % 4,
        }
    }

    /// Multiply the stored phase by `i^k`.
    pub fn with_extra_phase(mut self, k: u8) -> Self {
        self.phase_pow = (self.phase_pow + k) % 4;
        self
    }

    /// Drop the phase, keeping the unsigned operator.
    pub fn unsigned(mut self) -> Self {
        self.phase_pow = 0;
        self
    }

    /// Phase picked up when acting on basis state `j`: `P|j> = ph(j) |j ^ xmask>`.
    pub fn basis_phase(&self, j: u64) -> Complex64 {
        let minus = (self.zmask & j).count_ones() as u8;
        ipow((self.phase_pow + 2 * (minus % 2)) % 4)
    }

    /// Extend to a wider register, acting on the first `self.n_qubits` qubits.
    pub fn padded(&self, n_qubits: usize) -> Self {
        debug_assert!(n_qubits >= self.n_qubits);
        let shift = n_qubits - self.n_qubits;
        Self {
            n_qubits,
            xmask: self.xmask << shift,
            zmask: self.zmask << shift,
            phase_pow: self.phase_pow,
        }
    }

    /// Restrict to the first `n_qubits` qubits; the remainder must be identity.
    pub fn truncated(&self, n_qubits: usize) -> Self {
        let shift = self.n_qubits - n_qubits;
        debug_assert_eq!((self.xmask | self.zmask) & ((1u64 << shift) - 1), 0);
        Self {
            n_qubits,
            xmask: self.xmask >> shift,
            zmask: self.zmask >> shift,
            phase_pow: self.phase_pow,
        }
    }
}

fn ipow(k: u8) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ph = self.letter_phase();
        if (ph - Complex64::new(-1.0, 0.0)).norm() < 1e-9 {
            write!(f, "-")?;
        } else if (ph - Complex64::new(0.0, 1.0)).norm() < 1e-9 {
            write!(f, "+i")?;
        } else if (ph - Complex64::new(0.0, -1.0)).norm() < 1e-9 {
            write!(f, "-i")?;
        }
        for l in self.letters() {
            write!(f, "{}", l.as_char())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display_round_trip() {
        for s in ["XZZXI", "IXZZX", "YIZ", "-XX", "+iZY"] {
            let p = PauliString::parse(s).unwrap();
            let back = format!("{p}");
            let norm = if s.starts_with('+') && !s.starts_with("+i") { &s[1..] } else { s };
            assert_eq!(back, norm);
        }
    }

    #[test]
    fn products_track_phase() {
        let x = PauliString::parse("X").unwrap();
        let z = PauliString::parse("Z").unwrap();
        let y = PauliString::parse("Y").unwrap();
        // iXZ = Y
        let ixz = x.mul(&z).with_extra_phase(1);
        assert_eq!(ixz, y);
        // XZ = -ZX
        let xz = x.mul(&z);
        let zx = z.mul(&x);
        assert_eq!(xz.xmask, zx.xmask);
        assert_eq!(xz.zmask, zx.zmask);
        assert_eq!((xz.phase_pow + 2) % 4, zx.phase_pow);
    }

    #[test]
    fn commutation_matches_weight_overlap() {
        let a = PauliString::parse("XZZXI").unwrap();
        let b = PauliString::parse("IXZZX").unwrap();
        assert!(a.commutes_with(&b));
        let x0 = PauliString::single(5, 0, PauliLetter::X);
        let z0 = PauliString::single(5, 0, PauliLetter::Z);
        assert!(!x0.commutes_with(&z0));
    }

    #[test]
    fn basis_phase_of_y() {
        let y = PauliString::parse("Y").unwrap();
        // Y|0> = i|1>, Y|1> = -i|0>
        assert_eq!(y.basis_phase(0), Complex64::new(0.0, 1.0));
        assert_eq!(y.basis_phase(1), Complex64::new(0.0, -1.0));
    }

    #[test]
    fn squares_to_identity_with_sign() {
        for s in ["X", "Y", "Z"] {
            let p = PauliString::parse(s).unwrap();
            let sq = p.mul(&p);
            assert!(sq.is_identity_up_to_phase());
            assert_eq!(sq.phase_pow % 4, 0, "{s}^2 should be +I");
        }
    }
}
