//! Pauli operators in symplectic form and Clifford conjugation tables.
//!
//! A [`PauliString`] on `n <= MAX_QUBITS` qubits is stored as two packed bit
//! masks plus an exact phase `i^k`. The Hermitian single-qubit label for a
//! position is read off its `(x, z)` bits: `(1, 0) = X`, `(0, 1) = Z`,
//! `(1, 1) = Y` (not `XZ`), so `Y⊗Y` with phase `0` is Hermitian.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest register handled by the packed representation.
pub const MAX_QUBITS: usize = 12;

/// One-qubit Pauli label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// A power of `i`, stored mod 4.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_exponent(k: i64) -> Self {
        Phase(k.rem_euclid(4) as u8)
    }

    pub fn exponent(self) -> u8 {
        self.0
    }

    pub fn mul(self, other: Phase) -> Phase {
        Phase((self.0 + other.0) % 4)
    }

    pub fn conj(self) -> Phase {
        Phase((4 - self.0) % 4)
    }

    pub fn is_real(self) -> bool {
        self.0 % 2 == 0
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.0 {
            0 => "+",
            1 => "+i",
            2 => "-",
            _ => "-i",
        })
    }
}

/// `i^phase · ⊗_q σ_q` with `σ_q` decoded from `(xbits_q, zbits_q)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    xbits: u64,
    zbits: u64,
    phase: Phase,
}

/// Exponent of `i` picked up by the one-qubit product `σ(x1,z1)·σ(x2,z2)`.
fn product_exponent(x1: bool, z1: bool, x2: bool, z2: bool) -> i64 {
    let (x2, z2) = (x2 as i64, z2 as i64);
    match (x1, z1) {
        (false, false) => 0,
        (true, true) => z2 - x2,
        (true, false) => z2 * (2 * x2 - 1),
        (false, true) => x2 * (1 - 2 * z2),
    }
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        assert!(n <= MAX_QUBITS, "at most {MAX_QUBITS} qubits supported");
        PauliString { n, xbits: 0, zbits: 0, phase: Phase::ONE }
    }

    pub fn from_bits(n: usize, xbits: u64, zbits: u64, phase: Phase) -> Self {
        assert!(n <= MAX_QUBITS, "at most {MAX_QUBITS} qubits supported");
        let mask = Self::mask(n);
        assert!(xbits & !mask == 0 && zbits & !mask == 0, "bits outside register");
        PauliString { n, xbits, zbits, phase }
    }

    /// A single non-identity factor `p` on qubit `q`.
    pub fn single(n: usize, q: usize, p: Pauli) -> Self {
        let mut out = Self::identity(n);
        out.set(q, p);
        out
    }

    /// Builds from `(qubit, label)` pairs; later entries overwrite earlier ones.
    pub fn from_sparse(n: usize, factors: &[(usize, Pauli)]) -> Self {
        let mut out = Self::identity(n);
        for &(q, p) in factors {
            out.set(q, p);
        }
        out
    }

    fn mask(n: usize) -> u64 {
        if n == 64 {
            u64::MAX
        } else {
            (1u64 << n) - 1
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn xbits(&self) -> u64 {
        self.xbits
    }

    pub fn zbits(&self) -> u64 {
        self.zbits
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn with_phase(mut self, phase: Phase) -> Self {
        self.phase = phase;
        self
    }

    pub fn get(&self, q: usize) -> Pauli {
        assert!(q < self.n, "qubit {q} out of range");
        Pauli::from_bits(self.xbits >> q & 1 == 1, self.zbits >> q & 1 == 1)
    }

    pub fn set(&mut self, q: usize, p: Pauli) {
        assert!(q < self.n, "qubit {q} out of range");
        let (x, z) = p.bits();
        self.xbits = (self.xbits & !(1 << q)) | ((x as u64) << q);
        self.zbits = (self.zbits & !(1 << q)) | ((z as u64) << q);
    }

    /// Number of non-identity positions.
    pub fn weight(&self) -> usize {
        (self.xbits | self.zbits).count_ones() as usize
    }

    pub fn is_identity_up_to_phase(&self) -> bool {
        self.xbits == 0 && self.zbits == 0
    }

    pub fn is_hermitian(&self) -> bool {
        self.phase.is_real()
    }

    /// Same operator with phase dropped.
    pub fn unsigned(&self) -> Self {
        self.with_phase(Phase::ONE)
    }

    /// Restriction to one qubit, phase dropped.
    pub fn restricted(&self, q: usize) -> Self {
        Self::single(self.n, q, self.get(q))
    }

    fn check_dims(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::Dimension { expected: self.n, found: other.n });
        }
        Ok(())
    }

    /// Group product `self · other`.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.check_dims(other)?;
        let mut k = self.phase.exponent() as i64 + other.phase.exponent() as i64;
        for q in 0..self.n {
            k += product_exponent(
                self.xbits >> q & 1 == 1,
                self.zbits >> q & 1 == 1,
                other.xbits >> q & 1 == 1,
                other.zbits >> q & 1 == 1,
            );
        }
        Ok(PauliString {
            n: self.n,
            xbits: self.xbits ^ other.xbits,
            zbits: self.zbits ^ other.zbits,
            phase: Phase::from_exponent(k),
        })
    }

    /// True iff the symplectic inner product is even.
    pub fn commutes(&self, other: &Self) -> Result<bool> {
        self.check_dims(other)?;
        let anti = (self.xbits & other.zbits) ^ (self.zbits & other.xbits);
        Ok(anti.count_ones() % 2 == 0)
    }

    /// Adjoint: phase conjugated, factors are Hermitian.
    pub fn adjoint(&self) -> Self {
        self.with_phase(self.phase.conj())
    }

    /// `self` restricted to a subset of qubits given as a mask, phase dropped.
    pub fn masked(&self, mask: u64) -> Self {
        PauliString { n: self.n, xbits: self.xbits & mask, zbits: self.zbits & mask, phase: Phase::ONE }
    }

    /// Label string without phase, qubit 0 first.
    pub fn label(&self) -> String {
        (0..self.n).map(|q| self.get(q).symbol()).collect()
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.phase, self.label())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Parses `"XYZI"`, optionally prefixed by `+`, `-`, `+i`, `-i` or `i`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (phase, body) = if let Some(rest) = s.strip_prefix("+i") {
            (Phase::I, rest)
        } else if let Some(rest) = s.strip_prefix("-i") {
            (Phase::MINUS_I, rest)
        } else if let Some(rest) = s.strip_prefix('i') {
            (Phase::I, rest)
        } else if let Some(rest) = s.strip_prefix('-') {
            (Phase::MINUS_ONE, rest)
        } else if let Some(rest) = s.strip_prefix('+') {
            (Phase::ONE, rest)
        } else {
            (Phase::ONE, s)
        };
        if body.len() > MAX_QUBITS {
            return Err(Error::Parse(format!("pauli string too long: {s}")));
        }
        let mut out = PauliString::identity(body.len());
        for (q, c) in body.chars().enumerate() {
            let p = match c {
                'I' | '_' => Pauli::I,
                'X' => Pauli::X,
                'Y' => Pauli::Y,
                'Z' => Pauli::Z,
                _ => return Err(Error::Parse(format!("bad pauli symbol {c:?} in {s}"))),
            };
            out.set(q, p);
        }
        out.phase = phase;
        Ok(out)
    }
}

/// A Clifford unitary given by its conjugation action on the generators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CliffordAction {
    n: usize,
    image_of_x: Vec<PauliString>,
    image_of_z: Vec<PauliString>,
}

impl CliffordAction {
    pub fn identity(n: usize) -> Self {
        CliffordAction {
            n,
            image_of_x: (0..n).map(|q| PauliString::single(n, q, Pauli::X)).collect(),
            image_of_z: (0..n).map(|q| PauliString::single(n, q, Pauli::Z)).collect(),
        }
    }

    /// Validates Hermiticity and the canonical commutation relations.
    pub fn new(image_of_x: Vec<PauliString>, image_of_z: Vec<PauliString>) -> Result<Self> {
        let n = image_of_x.len();
        if image_of_z.len() != n {
            return Err(Error::Dimension { expected: n, found: image_of_z.len() });
        }
        for p in image_of_x.iter().chain(&image_of_z) {
            if p.num_qubits() != n {
                return Err(Error::Dimension { expected: n, found: p.num_qubits() });
            }
            if !p.is_hermitian() {
                return Err(Error::InvalidClifford(format!("image {p} is not Hermitian")));
            }
        }
        for i in 0..n {
            for j in 0..n {
                let xz = image_of_x[i].commutes(&image_of_z[j])?;
                if xz != (i != j) {
                    return Err(Error::InvalidClifford(format!(
                        "images of X{i} and Z{j} have wrong commutation"
                    )));
                }
                if !image_of_x[i].commutes(&image_of_x[j])? || !image_of_z[i].commutes(&image_of_z[j])? {
                    return Err(Error::InvalidClifford(format!("images of qubits {i},{j} do not commute")));
                }
            }
        }
        Ok(CliffordAction { n, image_of_x, image_of_z })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn image_of_x(&self, q: usize) -> &PauliString {
        &self.image_of_x[q]
    }

    pub fn image_of_z(&self, q: usize) -> &PauliString {
        &self.image_of_z[q]
    }

    /// `A P A†`.
    pub fn conjugate(&self, p: &PauliString) -> Result<PauliString> {
        if p.num_qubits() != self.n {
            return Err(Error::Dimension { expected: self.n, found: p.num_qubits() });
        }
        // σ = i^{xz} X^x Z^z per qubit.
        let y_count = (p.xbits() & p.zbits()).count_ones() as i64;
        let mut out = PauliString::identity(self.n)
            .with_phase(Phase::from_exponent(p.phase().exponent() as i64 + y_count));
        for q in 0..self.n {
            if p.xbits() >> q & 1 == 1 {
                out = out.multiply(&self.image_of_x[q])?;
            }
            if p.zbits() >> q & 1 == 1 {
                out = out.multiply(&self.image_of_z[q])?;
            }
        }
        Ok(out)
    }

    /// The action of `self` followed by `next`.
    pub fn then(&self, next: &CliffordAction) -> Result<CliffordAction> {
        let image_of_x = self.image_of_x.iter().map(|p| next.conjugate(p)).collect::<Result<_>>()?;
        let image_of_z = self.image_of_z.iter().map(|p| next.conjugate(p)).collect::<Result<_>>()?;
        Ok(CliffordAction { n: self.n, image_of_x, image_of_z })
    }

    /// Inverse action, via GF(2) elimination on the symplectic matrix and a
    /// phase fix-up of each recovered generator.
    pub fn inverse(&self) -> Result<CliffordAction> {
        let n = self.n;
        // Row r of `rows` is the image of generator r (X0..Xn-1, Z0..Zn-1) as
        // a 2n-bit vector (x bits low, z bits high); augmented with identity.
        let mut rows: Vec<(u64, u64)> = self
            .image_of_x
            .iter()
            .chain(&self.image_of_z)
            .enumerate()
            .map(|(r, p)| (p.xbits() | (p.zbits() << n), 1u64 << r))
            .collect();
        let dim = 2 * n;
        for col in 0..dim {
            let pivot = (col..dim)
                .find(|&r| rows[r].0 >> col & 1 == 1)
                .ok_or_else(|| Error::InvalidClifford("singular symplectic matrix".into()))?;
            rows.swap(col, pivot);
            for r in 0..dim {
                if r != col && rows[r].0 >> col & 1 == 1 {
                    rows[r].0 ^= rows[col].0;
                    rows[r].1 ^= rows[col].1;
                }
            }
        }
        // rows[col].1 now lists which generator images multiply to unit vector `col`.
        let preimage = |col: usize| -> Result<PauliString> {
            let combo = rows[col].1;
            let mut xb = 0u64;
            let mut zb = 0u64;
            for r in 0..dim {
                if combo >> r & 1 == 1 {
                    if r < n {
                        xb ^= 1 << r;
                    } else {
                        zb ^= 1 << (r - n);
                    }
                }
            }
            let candidate = PauliString::from_bits(n, xb, zb, Phase::ONE);
            let target = if col < n {
                PauliString::single(n, col, Pauli::X)
            } else {
                PauliString::single(n, col - n, Pauli::Z)
            };
            let image = self.conjugate(&candidate)?;
            debug_assert_eq!(image.unsigned(), target);
            // A(c) = i^k · target, so A(i^-k c) = target.
            Ok(candidate.with_phase(image.phase().conj()))
        };
        let image_of_x = (0..n).map(preimage).collect::<Result<Vec<_>>>()?;
        let image_of_z = (n..dim).map(preimage).collect::<Result<Vec<_>>>()?;
        CliffordAction::new(image_of_x, image_of_z)
    }
}

/// Named Clifford gates used by the distillation circuits.
pub mod gates {
    use super::*;

    fn p(n: usize, factors: &[(usize, Pauli)], phase: Phase) -> PauliString {
        PauliString::from_sparse(n, factors).with_phase(phase)
    }

    fn single(n: usize, q: usize, x_img: (Pauli, Phase), z_img: (Pauli, Phase)) -> CliffordAction {
        let mut a = CliffordAction::identity(n);
        a.image_of_x[q] = p(n, &[(q, x_img.0)], x_img.1);
        a.image_of_z[q] = p(n, &[(q, z_img.0)], z_img.1);
        a
    }

    use Pauli::{X as PX, Y as PY, Z as PZ};
    const P: Phase = Phase::ONE;
    const M: Phase = Phase::MINUS_ONE;

    pub fn h(n: usize, q: usize) -> CliffordAction {
        single(n, q, (PZ, P), (PX, P))
    }
    pub fn s(n: usize, q: usize) -> CliffordAction {
        single(n, q, (PY, P), (PZ, P))
    }
    pub fn sdg(n: usize, q: usize) -> CliffordAction {
        single(n, q, (PY, M), (PZ, P))
    }
    pub fn x(n: usize, q: usize) -> CliffordAction {
        single(n, q, (PX, P), (PZ, M))
    }
    pub fn y(n: usize, q: usize) -> CliffordAction {
        single(n, q, (PX, M), (PZ, M))
    }
    pub fn z(n: usize, q: usize) -> CliffordAction {
        single(n, q, (PX, M), (PZ, P))
    }
    /// `Y(π/2) = exp(-iπY/4)`: X → -Z, Z → X.
    pub fn sqrt_y(n: usize, q: usize) -> CliffordAction {
        single(n, q, (PZ, M), (PX, P))
    }
    /// `Y(-π/2)`: X → Z, Z → -X.
    pub fn sqrt_y_dg(n: usize, q: usize) -> CliffordAction {
        single(n, q, (PZ, P), (PX, M))
    }

    pub fn cx(n: usize, c: usize, t: usize) -> CliffordAction {
        let mut a = CliffordAction::identity(n);
        a.image_of_x[c] = p(n, &[(c, PX), (t, PX)], P);
        a.image_of_z[t] = p(n, &[(c, PZ), (t, PZ)], P);
        a
    }
    pub fn cz(n: usize, c: usize, t: usize) -> CliffordAction {
        let mut a = CliffordAction::identity(n);
        a.image_of_x[c] = p(n, &[(c, PX), (t, PZ)], P);
        a.image_of_x[t] = p(n, &[(c, PZ), (t, PX)], P);
        a
    }
    pub fn cy(n: usize, c: usize, t: usize) -> CliffordAction {
        let mut a = CliffordAction::identity(n);
        a.image_of_x[c] = p(n, &[(c, PX), (t, PY)], P);
        a.image_of_x[t] = p(n, &[(c, PZ), (t, PX)], P);
        a.image_of_z[t] = p(n, &[(c, PZ), (t, PZ)], P);
        a
    }
    pub fn swap(n: usize, a: usize, b: usize) -> CliffordAction {
        let mut out = CliffordAction::identity(n);
        out.image_of_x.swap(a, b);
        out.image_of_z.swap(a, b);
        out
    }
}
