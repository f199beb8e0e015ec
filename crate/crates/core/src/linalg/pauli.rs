use num_traits::{One, Zero};

use super::{Ket, Operator};
use crate::error::{Error, Result};
use crate::scalar::{Cplx, Real};

pub const MAX_QUBITS: usize = 12;

fn single<T: Real>(label: char) -> Result<Operator<T>> {
    let o = Cplx::<T>::one();
    let z = Cplx::<T>::zero();
    let i = Cplx::<T>::i();
    let data = match label.to_ascii_uppercase() {
        'I' => vec![o, z, z, o],
        'X' => vec![z, o, o, z],
        'Y' => vec![z, -i, i, z],
        'Z' => vec![o, z, z, -o],
        other => return Err(Error::UnknownPauliLabel(other)),
    };
    Operator::from_vec(2, 2, data)
}

/// Kronecker product of single-qubit Paulis, first label on the most significant qubit.
pub fn pauli_string<T: Real>(labels: &str) -> Result<Operator<T>> {
    let n = labels.chars().count();
    if n == 0 {
        return Err(Error::InvalidInput("Pauli string must act on at least one qubit".into()));
    }
    if n > MAX_QUBITS {
        return Err(Error::InvalidInput(format!(
            "Pauli string acts on {n} qubits; at most {MAX_QUBITS} are supported"
        )));
    }
    let mut out = Operator::identity(1);
    for c in labels.chars() {
        out = out.kron(&single(c)?);
    }
    Ok(out)
}

/// Pauli `label` acting on `qubit` (0-based) of an `n`-qubit register.
pub fn single_site<T: Real>(label: char, qubit: usize, n: usize) -> Result<Operator<T>> {
    if qubit >= n {
        return Err(Error::InvalidInput(format!(
            "qubit index {qubit} out of range for {n} qubits"
        )));
    }
    let s: String = (0..n).map(|k| if k == qubit { label } else { 'I' }).collect();
    pauli_string(&s)
}

/// Product state from a label over {0, 1, +, -}, first character most significant.
pub fn product_state<T: Real>(label: &str) -> Result<Ket<T>> {
    if label.is_empty() {
        return Err(Error::InvalidInput("empty product-state label".into()));
    }
    let h = T::FRAC_1_SQRT_2();
    let mut out = Ket::from_real(&[T::one()]);
    for c in label.chars() {
        let q = match c {
            '0' => Ket::from_real(&[T::one(), T::zero()]),
            '1' => Ket::from_real(&[T::zero(), T::one()]),
            '+' => Ket::from_real(&[h, h]),
            '-' => Ket::from_real(&[h, -h]),
            other => {
                return Err(Error::InvalidInput(format!(
                    "unknown product-state symbol '{other}' (expected 0, 1, +, -)"
                )))
            }
        };
        out = out.kron(&q);
    }
    Ok(out)
}
