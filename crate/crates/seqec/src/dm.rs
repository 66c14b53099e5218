//! Dense density matrices, state vectors and the bit-index kernels that
//! apply gates, channels and measurements to them.
//!
//! Basis-index convention: qubit 0 is the most significant bit, so qubit `q`
//! of an `n`-qubit register owns bit `n - 1 - q` of a basis index. Density
//! matrices are kept *unnormalized*: the trace carries the probability of the
//! branch the state lives on.

use crate::pauli::PauliString;
use crate::{Result, SimError, TOL_CONTRACT, TOL_EXACT};
use num_complex::Complex64;

pub const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const C_ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Square complex matrix, row-major. Used both for small gate matrices and
/// as the raw storage behind [`DensityMatrix`].
#[derive(Clone, PartialEq)]
pub struct CMat {
    pub dim: usize,
    pub a: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, a: vec![C_ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.a[i * dim + i] = C_ONE;
        }
        m
    }

    pub fn from_rows(rows: &[&[Complex64]]) -> Self {
        let dim = rows.len();
        let mut m = Self::zeros(dim);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), dim);
            m.a[i * dim..(i + 1) * dim].copy_from_slice(r);
        }
        m
    }

    /// Real matrix helper for tests and gate tables.
    pub fn from_real(rows: &[&[f64]]) -> Self {
        let dim = rows.len();
        let mut m = Self::zeros(dim);
        for (i, r) in rows.iter().enumerate() {
            for (j, v) in r.iter().enumerate() {
                m.a[i * dim + j] = Complex64::new(*v, 0.0);
            }
        }
        m
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.a[r * self.dim + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.a[r * self.dim + c] = v;
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn dagger(&self) -> Self {
        let mut out = Self::zeros(self.dim);
        for r in 0..self.dim {
            for c in 0..self.dim {
                out.set(c, r, self.get(r, c).conj());
            }
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = Self::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let v = self.a[r * n + k];
                if v == C_ZERO {
                    continue;
                }
                for c in 0..n {
                    out.a[r * n + c] += v * other.a[k * n + c];
                }
            }
        }
        out
    }

    pub fn add_scaled(&mut self, other: &Self, s: f64) {
        for (a, b) in self.a.iter_mut().zip(other.a.iter()) {
            *a += s * b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for a in self.a.iter_mut() {
            *a *= s;
        }
    }

    pub fn kron(&self, other: &Self) -> Self {
        let (n, m) = (self.dim, other.dim);
        let mut out = Self::zeros(n * m);
        for r1 in 0..n {
            for c1 in 0..n {
                let v = self.get(r1, c1);
                if v == C_ZERO {
                    continue;
                }
                for r2 in 0..m {
                    for c2 in 0..m {
                        out.set(r1 * m + r2, c1 * m + c2, v * other.get(r2, c2));
                    }
                }
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.a
            .iter()
            .zip(other.a.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn unitarity_deviation(&self) -> f64 {
        self.dagger().mul(self).max_abs_diff(&Self::identity(self.dim))
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for r in 0..self.dim {
            for c in r..self.dim {
                dev = dev.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        dev
    }

    /// Eigenvalues of a Hermitian matrix by cyclic Jacobi. Test/debug only.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let n = self.dim;
        let mut m = self.clone();
        for _sweep in 0..60 {
            let mut off: f64 = 0.0;
            for r in 0..n {
                for c in (r + 1)..n {
                    off = off.max(m.get(r, c).norm());
                }
            }
            if off < 1e-13 {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = m.get(p, q);
                    if apq.norm() < 1e-15 {
                        continue;
                    }
                    // Diagonalize the 2x2 block (p,q) with a complex rotation.
                    let app = m.get(p, p).re;
                    let aqq = m.get(q, q).re;
                    let phase = apq / apq.norm();
                    let theta = 0.5 * (2.0 * apq.norm()).atan2(aqq - app);
                    let (c, s) = (theta.cos(), theta.sin());
                    let sp = phase * s;
                    // Rows.
                    for k in 0..n {
                        let mpk = m.get(p, k);
                        let mqk = m.get(q, k);
                        m.set(p, k, c * mpk - sp.conj() * mqk);
                        m.set(q, k, sp * mpk + c * mqk);
                    }
                    // Columns.
                    for k in 0..n {
                        let mkp = m.get(k, p);
                        let mkq = m.get(k, q);
                        m.set(k, p, c * mkp - sp * mkq);
                        m.set(k, q, sp.conj() * mkp + c * mkq);
                    }
                }
            }
        }
        let mut ev: Vec<f64> = (0..n).map(|i| m.get(i, i).re).collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }
}

impl std::fmt::Debug for CMat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "CMat {}x{}", self.dim, self.dim)?;
        for r in 0..self.dim.min(8) {
            for c in 0..self.dim.min(8) {
                let v = self.get(r, c);
                write!(f, "{:+.3}{:+.3}i ", v.re, v.im)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Pure state over `n` qubits with unit 2-norm.
#[derive(Clone, Debug)]
pub struct StateVector {
    pub n_qubits: usize,
    pub amp: Vec<Complex64>,
}

impl StateVector {
    pub fn basis(n_qubits: usize, index: u64) -> Self {
        let mut amp = vec![C_ZERO; 1 << n_qubits];
        amp[index as usize] = C_ONE;
        Self { n_qubits, amp }
    }

    pub fn norm(&self) -> f64 {
        self.amp.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if n < 1e-300 {
            return Err(SimError::ZeroTrace);
        }
        for a in self.amp.iter_mut() {
            *a /= n;
        }
        Ok(())
    }

    /// `|out> = P |self>` for a Pauli string on the same register.
    pub fn apply_pauli(&self, p: &PauliString) -> Self {
        assert_eq!(p.n_qubits(), self.n_qubits);
        let mut amp = vec![C_ZERO; self.amp.len()];
        for (j, a) in self.amp.iter().enumerate() {
            if *a == C_ZERO {
                continue;
            }
            let j = j as u64;
            amp[(j ^ p.xmask()) as usize] = p.basis_phase(j) * a;
        }
        Self { n_qubits: self.n_qubits, amp }
    }

    /// Accumulate `|self> += s * P |src>`.
    pub fn add_pauli_scaled(&mut self, src: &Self, p: &PauliString, s: Complex64) {
        for (j, a) in src.amp.iter().enumerate() {
            if *a == C_ZERO {
                continue;
            }
            let j = j as u64;
            self.amp[(j ^ p.xmask()) as usize] += s * p.basis_phase(j) * a;
        }
    }

    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amp
            .iter()
            .zip(other.amp.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scaled(mut self, s: Complex64) -> Self {
        for a in self.amp.iter_mut() {
            *a *= s;
        }
        self
    }

    pub fn add(&mut self, other: &Self, s: Complex64) {
        for (a, b) in self.amp.iter_mut().zip(other.amp.iter()) {
            *a += s * b;
        }
    }
}

/// Unnormalized density matrix; the trace is the branch probability.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    pub n_qubits: usize,
    pub m: CMat,
}

#[inline]
fn qbit(n: usize, q: usize) -> u64 {
    1u64 << (n - 1 - q)
}

impl DensityMatrix {
    pub fn dim(&self) -> usize {
        self.m.dim
    }

    /// Rank-1 projector `|bits><bits|`.
    pub fn basis_state(n_qubits: usize, bits: &str) -> Result<Self> {
        if bits.len() != n_qubits {
            return Err(SimError::BadBitString { got: bits.len(), want: n_qubits });
        }
        let mut idx = 0usize;
        for b in bits.chars() {
            idx = (idx << 1)
                | match b {
                    '0' => 0,
                    '1' => 1,
                    _ => return Err(SimError::BadBitString { got: bits.len(), want: n_qubits }),
                };
        }
        let mut m = CMat::zeros(1 << n_qubits);
        m.set(idx, idx, C_ONE);
        Ok(Self { n_qubits, m })
    }

    pub fn from_pure(psi: &StateVector) -> Self {
        let dim = psi.amp.len();
        let mut m = CMat::zeros(dim);
        for r in 0..dim {
            if psi.amp[r] == C_ZERO {
                continue;
            }
            for c in 0..dim {
                m.set(r, c, psi.amp[r] * psi.amp[c].conj());
            }
        }
        Self { n_qubits: psi.n_qubits, m }
    }

    pub fn trace(&self) -> f64 {
        self.m.trace().re
    }

    pub fn purity(&self) -> f64 {
        // tr(rho^2) = sum |rho_rc|^2 for Hermitian rho.
        self.m.a.iter().map(|v| v.norm_sqr()).sum::<f64>() / self.trace().powi(2)
    }

    pub fn normalized(&self) -> Result<Self> {
        let t = self.trace();
        if t < 1e-300 {
            return Err(SimError::ZeroTrace);
        }
        let mut out = self.clone();
        out.m.scale(1.0 / t);
        Ok(out)
    }

    pub fn check_hermitian(&self) -> Result<()> {
        let dev = self.m.hermiticity_deviation();
        if dev > TOL_EXACT {
            return Err(SimError::DimensionMismatch(format!(
                "Hermiticity violated by {dev:.3e}"
            )));
        }
        Ok(())
    }

    /// Apply a `k`-qubit unitary to `targets`. Debug builds verify unitarity.
    pub fn apply_unitary(&mut self, u: &CMat, targets: &[usize]) -> Result<()> {
        self.check_targets(targets)?;
        let k = targets.len();
        if u.dim != 1 << k {
            return Err(SimError::DimensionMismatch(format!(
                "{}x{} gate on {k} targets",
                u.dim, u.dim
            )));
        }
        debug_assert!(
            u.unitarity_deviation() < TOL_EXACT.max(1e-12),
            "non-unitary gate"
        );
        if let Some((perm, phases)) = monomial_decomposition(u) {
            self.conj_monomial(&perm, &phases, targets);
        } else {
            self.conj_dense(u, targets);
        }
        Ok(())
    }

    /// `rho -> P rho P^dagger` for a full-register Pauli string.
    pub fn conj_pauli(&mut self, p: &PauliString) {
        assert_eq!(p.n_qubits(), self.n_qubits);
        let dim = self.dim();
        let x = p.xmask() as usize;
        if x == 0 {
            // Diagonal Pauli: pure sign pattern.
            for r in 0..dim {
                let sr = p.basis_phase(r as u64);
                for c in 0..dim {
                    let sc = p.basis_phase(c as u64).conj();
                    self.m.a[r * dim + c] *= sr * sc;
                }
            }
            return;
        }
        let mut out = vec![C_ZERO; dim * dim];
        for r in 0..dim {
            let pr = p.basis_phase(r as u64);
            let rr = r ^ x;
            for c in 0..dim {
                let v = self.m.a[r * dim + c];
                if v == C_ZERO {
                    continue;
                }
                let pc = p.basis_phase(c as u64).conj();
                out[rr * dim + (c ^ x)] = pr * pc * v;
            }
        }
        self.m.a = out;
    }

    fn conj_monomial(&mut self, perm: &[usize], phases: &[Complex64], targets: &[usize]) {
        let dim = self.dim();
        let n = self.n_qubits;
        let k = targets.len();
        // Per-index image under the embedded monomial operator.
        let tbits: Vec<u64> = targets.iter().map(|&q| qbit(n, q)).collect();
        let mut image = vec![0usize; dim];
        let mut phase = vec![C_ONE; dim];
        for r in 0..dim {
            let mut a = 0usize;
            for (j, tb) in tbits.iter().enumerate() {
                if r as u64 & tb != 0 {
                    a |= 1 << (k - 1 - j);
                }
            }
            let b = perm[a];
            let mut rr = r;
            for (j, tb) in tbits.iter().enumerate() {
                let want = (b >> (k - 1 - j)) & 1;
                if want == 1 {
                    rr |= *tb as usize;
                } else {
                    rr &= !(*tb as usize);
                }
            }
            image[r] = rr;
            phase[r] = phases[a];
        }
        let mut out = vec![C_ZERO; dim * dim];
        for r in 0..dim {
            let (ir, pr) = (image[r], phase[r]);
            for c in 0..dim {
                let v = self.m.a[r * dim + c];
                if v == C_ZERO {
                    continue;
                }
                out[ir * dim + image[c]] = pr * phase[c].conj() * v;
            }
        }
        self.m.a = out;
    }

    fn conj_dense(&mut self, u: &CMat, targets: &[usize]) {
        let dim = self.dim();
        let n = self.n_qubits;
        let k = targets.len();
        let kk = 1 << k;
        let tbits: Vec<u64> = targets.iter().map(|&q| qbit(n, q)).collect();
        let tmask: u64 = tbits.iter().copied().fold(0, |a, b| a | b);

        // Indices of each 2^k-block for every "rest" pattern.
        let mut blocks: Vec<Vec<usize>> = Vec::with_capacity(dim >> k);
        for rest in 0..dim {
            if rest as u64 & tmask != 0 {
                continue;
            }
            let mut idx = vec![0usize; kk];
            for (a, slot) in idx.iter_mut().enumerate() {
                let mut r = rest;
                for (j, tb) in tbits.iter().enumerate() {
                    if (a >> (k - 1 - j)) & 1 == 1 {
                        r |= *tb as usize;
                    }
                }
                *slot = r;
            }
            blocks.push(idx);
        }

        // Left multiply: B = U_emb * rho (columns untouched).
        let mut tmp = vec![C_ZERO; kk];
        for idx in &blocks {
            for c in 0..dim {
                for (a, t) in tmp.iter_mut().enumerate() {
                    let mut acc = C_ZERO;
                    for b in 0..kk {
                        let uv = u.a[a * kk + b];
                        if uv != C_ZERO {
                            acc += uv * self.m.a[idx[b] * dim + c];
                        }
                    }
                    *t = acc;
                }
                for (a, t) in tmp.iter().enumerate() {
                    self.m.a[idx[a] * dim + c] = *t;
                }
            }
        }
        // Right multiply: rho' = B * U_emb^dagger (rows untouched).
        for idx in &blocks {
            for r in 0..dim {
                let row = r * dim;
                for (a, t) in tmp.iter_mut().enumerate() {
                    let mut acc = C_ZERO;
                    for b in 0..kk {
                        let uv = u.a[a * kk + b].conj();
                        if uv != C_ZERO {
                            acc += self.m.a[row + idx[b]] * uv;
                        }
                    }
                    *t = acc;
                }
                for (a, t) in tmp.iter().enumerate() {
                    self.m.a[row + idx[a]] = *t;
                }
            }
        }
    }

    /// Phase damping with coefficient `gamma` applied independently to every
    /// qubit in `mask` (index-space mask): off-diagonal elements pick up
    /// `sqrt(1-gamma)` per differing masked bit.
    pub fn damp_offdiagonals(&mut self, mask: u64, gamma: f64) {
        if gamma == 0.0 || mask == 0 {
            return;
        }
        let f = (1.0 - gamma).sqrt();
        let dim = self.dim();
        // Precompute f^w for w differing bits.
        let maxw = mask.count_ones() as usize;
        let mut pw = vec![1.0f64; maxw + 1];
        for w in 1..=maxw {
            pw[w] = pw[w - 1] * f;
        }
        for r in 0..dim {
            for c in 0..dim {
                let d = ((r ^ c) as u64 & mask).count_ones() as usize;
                if d > 0 {
                    self.m.a[r * dim + c] *= pw[d];
                }
            }
        }
    }

    /// Project onto the Z outcome of `target`: returns `(plus, minus)` with
    /// `plus = P0 rho P0`, `minus = P1 rho P1`, both unnormalized.
    pub fn measure_z(&self, target: usize) -> (Self, Self) {
        let bit = qbit(self.n_qubits, target) as usize;
        let dim = self.dim();
        let mut plus = Self { n_qubits: self.n_qubits, m: CMat::zeros(dim) };
        let mut minus = Self { n_qubits: self.n_qubits, m: CMat::zeros(dim) };
        for r in 0..dim {
            let rb = r & bit;
            for c in 0..dim {
                if rb != (c & bit) {
                    continue;
                }
                let v = self.m.a[r * dim + c];
                if v == C_ZERO {
                    continue;
                }
                if rb == 0 {
                    plus.m.a[r * dim + c] = v;
                } else {
                    minus.m.a[r * dim + c] = v;
                }
            }
        }
        (plus, minus)
    }

    /// Trace out `target` and re-tensor it as `|0><0|`. Trace preserving.
    pub fn reset_qubit(&mut self, target: usize) {
        let bit = qbit(self.n_qubits, target) as usize;
        let dim = self.dim();
        let mut out = vec![C_ZERO; dim * dim];
        for r in 0..dim {
            if r & bit != 0 {
                continue;
            }
            for c in 0..dim {
                if c & bit != 0 {
                    continue;
                }
                out[r * dim + c] =
                    self.m.a[r * dim + c] + self.m.a[(r | bit) * dim + (c | bit)];
            }
        }
        self.m.a = out;
    }

    /// Partial trace over `traced` qubits; remaining qubits keep their order.
    pub fn partial_trace(&self, traced: &[usize]) -> Self {
        let n = self.n_qubits;
        let keep: Vec<usize> = (0..n).filter(|q| !traced.contains(q)).collect();
        let nk = keep.len();
        let kdim = 1usize << nk;
        let tdim = 1usize << traced.len();
        let keep_bits: Vec<u64> = keep.iter().map(|&q| qbit(n, q)).collect();
        let tr_bits: Vec<u64> = traced.iter().map(|&q| qbit(n, q)).collect();
        let mut out = CMat::zeros(kdim);
        for a in 0..kdim {
            let mut base_r = 0u64;
            for (j, kb) in keep_bits.iter().enumerate() {
                if (a >> (nk - 1 - j)) & 1 == 1 {
                    base_r |= kb;
                }
            }
            for b in 0..kdim {
                let mut base_c = 0u64;
                for (j, kb) in keep_bits.iter().enumerate() {
                    if (b >> (nk - 1 - j)) & 1 == 1 {
                        base_c |= kb;
                    }
                }
                let mut acc = C_ZERO;
                for t in 0..tdim {
                    let mut extra = 0u64;
                    for (j, tb) in tr_bits.iter().enumerate() {
                        if (t >> j) & 1 == 1 {
                            extra |= tb;
                        }
                    }
                    acc += self.m.get((base_r | extra) as usize, (base_c | extra) as usize);
                }
                out.set(a, b, acc);
            }
        }
        Self { n_qubits: nk, m: out }
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self {
            n_qubits: self.n_qubits + other.n_qubits,
            m: self.m.kron(&other.m),
        }
    }

    /// `tr(P rho)`; real within tolerance for Hermitian inputs.
    pub fn expectation(&self, p: &PauliString) -> Result<f64> {
        if p.n_qubits() != self.n_qubits {
            return Err(SimError::DimensionMismatch(format!(
                "{}-qubit Pauli on {}-qubit state",
                p.n_qubits(),
                self.n_qubits
            )));
        }
        let dim = self.dim();
        let x = p.xmask() as usize;
        let mut acc = C_ZERO;
        for k in 0..dim {
            acc += p.basis_phase(k as u64) * self.m.a[k * dim + (k ^ x)];
        }
        debug_assert!(acc.im.abs() < TOL_CONTRACT * self.trace().max(1.0));
        Ok(acc.re)
    }

    /// `<psi| rho |psi>` after normalizing the trace to one.
    pub fn fidelity_with_pure(&self, psi: &StateVector) -> Result<f64> {
        if psi.n_qubits != self.n_qubits {
            return Err(SimError::DimensionMismatch("fidelity dims".into()));
        }
        let t = self.trace();
        if t < 1e-300 {
            return Err(SimError::ZeroTrace);
        }
        let dim = self.dim();
        let mut acc = C_ZERO;
        for r in 0..dim {
            let ar = psi.amp[r].conj();
            if ar == C_ZERO {
                continue;
            }
            for c in 0..dim {
                let ac = psi.amp[c];
                if ac == C_ZERO {
                    continue;
                }
                acc += ar * self.m.a[r * dim + c] * ac;
            }
        }
        Ok(acc.re / t)
    }

    pub fn add_scaled(&mut self, other: &Self, s: f64) {
        assert_eq!(self.n_qubits, other.n_qubits);
        self.m.add_scaled(&other.m, s);
    }

    fn check_targets(&self, targets: &[usize]) -> Result<()> {
        for (i, &t) in targets.iter().enumerate() {
            if t >= self.n_qubits || targets[..i].contains(&t) {
                return Err(SimError::BadTargets(targets.to_vec()));
            }
        }
        Ok(())
    }
}

/// Try to decompose a gate matrix as a monomial operator (one nonzero per
/// row): returns the column permutation and per-column phases such that
/// `U |b> = phases[b] |perm[b]>`.
pub fn monomial_decomposition(u: &CMat) -> Option<(Vec<usize>, Vec<Complex64>)> {
    let dim = u.dim;
    let mut perm = vec![usize::MAX; dim];
    let mut phases = vec![C_ZERO; dim];
    for r in 0..dim {
        let mut hit = None;
        for c in 0..dim {
            let v = u.get(r, c);
            if v.norm() > 1e-14 {
                if hit.is_some() {
                    return None;
                }
                hit = Some((c, v));
            }
        }
        let (c, v) = hit?;
        if perm[c] != usize::MAX {
            return None;
        }
        perm[c] = r;
        phases[c] = v;
    }
    Some((perm, phases))
}

/// Named gate matrices used by the scheduler and code constructions.
pub mod gates {
    use super::{CMat, C_ONE, C_ZERO};
    use num_complex::Complex64;

    pub fn x() -> CMat {
        CMat::from_real(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    pub fn y() -> CMat {
        let i = Complex64::new(0.0, 1.0);
        CMat::from_rows(&[&[C_ZERO, -i], &[i, C_ZERO]])
    }

    pub fn z() -> CMat {
        CMat::from_real(&[&[1.0, 0.0], &[0.0, -1.0]])
    }

    pub fn h() -> CMat {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        CMat::from_real(&[&[s, s], &[s, -s]])
    }

    pub fn s_gate() -> CMat {
        CMat::from_rows(&[
            &[C_ONE, C_ZERO],
            &[C_ZERO, Complex64::new(0.0, 1.0)],
        ])
    }

    /// Controlled single-qubit gate; control is the first (most significant)
    /// qubit of the pair.
    pub fn controlled(u: &CMat) -> CMat {
        assert_eq!(u.dim, 2);
        let mut m = CMat::identity(4);
        for r in 0..2 {
            for c in 0..2 {
                m.set(2 + r, 2 + c, u.get(r, c));
            }
        }
        m
    }

    pub fn cnot() -> CMat {
        controlled(&x())
    }

    pub fn cz() -> CMat {
        controlled(&z())
    }

    pub fn by_name(name: &str) -> Option<CMat> {
        match name {
            "X" => Some(x()),
            "Y" => Some(y()),
            "Z" => Some(z()),
            "H" => Some(h()),
            "S" => Some(s_gate()),
            "CNOT" | "CX" => Some(cnot()),
            "CZ" => Some(cz()),
            "CY" => Some(controlled(&y())),
            _ => None,
        }
    }
}
