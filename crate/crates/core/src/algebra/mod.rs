//! Words and linear combinations in semicircular letters, and their exact
//! traces.

mod element;
mod letters;
mod trace;

pub use element::{sharp, star, star_tensor, Element, Polynomial, Tensor2, Tensor3, TensorElement, MAX_DEGREE};
pub use letters::{LetterId, Word};
pub use trace::{TraceConfig, TraceEngine, TraceMode};

use crate::covariance::HurstParams;
use crate::error::{Error, Result};

/// `φ(w)` with a throwaway engine in the given mode.
pub fn word_trace(p: &HurstParams, w: &Word, mode: TraceMode) -> Result<f64> {
    TraceEngine::with_config(*p, TraceConfig { mode, ..Default::default() }).word_trace(w)
}

pub fn element_trace(p: &HurstParams, e: &Element) -> Result<f64> {
    TraceEngine::new(*p).element_trace(e)
}

pub fn tensor_trace<const K: usize>(p: &HurstParams, te: &TensorElement<K>) -> Result<f64> {
    TraceEngine::new(*p).tensor_trace(te)
}

pub fn contract_middle(p: &HurstParams, tt: &Tensor3) -> Result<Element> {
    TraceEngine::new(*p).contract_middle(tt)
}

pub fn l2_inner(p: &HurstParams, a: &Element, b: &Element) -> Result<f64> {
    TraceEngine::new(*p).l2_inner(a, b)
}

pub fn l2_norm(p: &HurstParams, a: &Element) -> Result<f64> {
    TraceEngine::new(*p).l2_norm(a)
}

pub fn operator_norm_estimate(p: &HurstParams, a: &Element, r: usize) -> Result<f64> {
    TraceEngine::new(*p).operator_norm_estimate(a, r)
}

/// Order-1 tensor derivative of `P` at `x`, lifted to a 2-tensor.
pub fn tensor_derivative(poly: &Polynomial, x: &Element) -> Tensor2 {
    poly.derivative_tensor(x)
}

/// Order-2 tensor derivative of `P` at `x`.
pub fn tensor_second_derivative(poly: &Polynomial, x: &Element) -> Tensor3 {
    poly.second_derivative_tensor(x)
}

/// Either derivative order, tagged by arity.
#[derive(Clone, Debug, PartialEq)]
pub enum TensorDerivative {
    First(Tensor2),
    Second(Tensor3),
}

pub fn tensor_derivative_of_order(poly: &Polynomial, x: &Element, order: u8) -> Result<TensorDerivative> {
    match order {
        1 => Ok(TensorDerivative::First(poly.derivative_tensor(x))),
        2 => Ok(TensorDerivative::Second(poly.second_derivative_tensor(x))),
        _ => Err(Error::Domain(format!("tensor derivative order {order} not in {{1,2}}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::Time;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        /// The ε-linear part of `P(x + εy)` equals `∂P(x) ♯ y`.
        #[test]
        fn first_order_expansion(coeffs in prop::collection::vec(-3i32..4, 1..6),
                                 tx in 1u64..8, ty in 1u64..8, ty2 in 1u64..8) {
            let poly = Polynomial::new(coeffs.iter().map(|&c| c as f64).collect::<Vec<_>>()).unwrap();
            let x = Element::atom(Time::dyadic(tx, 3).unwrap());
            let y = &Element::atom(Time::dyadic(ty, 3).unwrap())
                * &Element::atom(Time::dyadic(ty2, 3).unwrap());
            // ε-coefficient of (x + εy)^k: sum_i x^i y x^{k-1-i}
            let mut lin = Element::zero();
            for (k, &a) in poly.coeffs().iter().enumerate().skip(1) {
                for i in 0..k {
                    lin = &lin + &(&(&x.pow(i) * &y) * &x.pow(k - 1 - i)).scale(a);
                }
            }
            prop_assert_eq!(sharp(&tensor_derivative(&poly, &x), &y), lin);
        }
    }

    #[test]
    fn order_dispatch() {
        let x = Element::atom(Time::HORIZON);
        let p = Polynomial::monomial(2).unwrap();
        assert_eq!(tensor_derivative_of_order(&p, &x, 2).unwrap(), TensorDerivative::Second(Tensor3::unit()));
        assert!(tensor_derivative_of_order(&p, &x, 3).is_err());
    }
}
