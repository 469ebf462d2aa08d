//! Elementwise activations with derivative evaluators up to a declared order.
//!
//! Smooth activations expose exact k-th derivatives. These are generated from
//! the closure of polynomials in (tanh x, sech x) under differentiation, using
//! tanh' = sech² and sech' = -sech·tanh, so no hand-derived formulas beyond
//! the first order enter the code.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    ReLU,
    Tanh,
    /// sech(x) = 1/cosh(x); a smooth bump, useful as a "parametric smooth"
    /// activation with all derivatives available.
    Sech,
}

/// Highest derivative order the smooth evaluators are generated for.
pub const MAX_DERIVATIVE_ORDER: usize = 6;

/// A polynomial in t = tanh(x) and s = sech(x): sum of c · t^a · s^b.
#[derive(Clone, Debug)]
struct TsPoly {
    terms: Vec<(f64, u32, u32)>,
}

impl TsPoly {
    fn eval(&self, t: f64, s: f64) -> f64 {
        let mut acc = 0.0;
        for &(c, a, b) in &self.terms {
            acc += c * t.powi(a as i32) * s.powi(b as i32);
        }
        acc
    }

    /// d/dx, using t' = s² and s' = -s·t.
    fn derivative(&self) -> TsPoly {
        let mut terms: Vec<(f64, u32, u32)> = Vec::new();
        for &(c, a, b) in &self.terms {
            if a > 0 {
                push_term(&mut terms, (c * a as f64, a - 1, b + 2));
            }
            if b > 0 {
                push_term(&mut terms, (-c * b as f64, a + 1, b));
            }
        }
        TsPoly { terms }
    }
}

fn push_term(terms: &mut Vec<(f64, u32, u32)>, (c, a, b): (f64, u32, u32)) {
    for entry in terms.iter_mut() {
        if entry.1 == a && entry.2 == b {
            entry.0 += c;
            return;
        }
    }
    terms.push((c, a, b));
}

fn derivative_table(seed: TsPoly) -> Vec<TsPoly> {
    let mut table = vec![seed];
    for k in 0..MAX_DERIVATIVE_ORDER {
        let next = table[k].derivative();
        table.push(next);
    }
    table
}

fn tanh_table() -> &'static Vec<TsPoly> {
    use std::sync::OnceLock;
    static TABLE: OnceLock<Vec<TsPoly>> = OnceLock::new();
    TABLE.get_or_init(|| {
        derivative_table(TsPoly {
            terms: vec![(1.0, 1, 0)],
        })
    })
}

fn sech_table() -> &'static Vec<TsPoly> {
    use std::sync::OnceLock;
    static TABLE: OnceLock<Vec<TsPoly>> = OnceLock::new();
    TABLE.get_or_init(|| {
        derivative_table(TsPoly {
            terms: vec![(1.0, 0, 1)],
        })
    })
}

impl Activation {
    pub fn value(self, x: f64) -> f64 {
        match self {
            Activation::ReLU => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Sech => 1.0 / x.cosh(),
        }
    }

    pub fn is_smooth(self) -> bool {
        !matches!(self, Activation::ReLU)
    }

    /// k-th derivative at x. ReLU: order 1 is the step function (undefined at
    /// the kink; callers detect x == 0 themselves), orders >= 2 are 0 off the
    /// kink.
    pub fn derivative(self, x: f64, k: usize) -> f64 {
        match self {
            Activation::ReLU => match k {
                0 => x.max(0.0),
                1 => {
                    if x > 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                }
                _ => 0.0,
            },
            Activation::Tanh => {
                assert!(k <= MAX_DERIVATIVE_ORDER, "tanh derivative order {k}");
                let t = x.tanh();
                let s = 1.0 / x.cosh();
                tanh_table()[k].eval(t, s)
            }
            Activation::Sech => {
                assert!(k <= MAX_DERIVATIVE_ORDER, "sech derivative order {k}");
                let t = x.tanh();
                let s = 1.0 / x.cosh();
                sech_table()[k].eval(t, s)
            }
        }
    }

    /// Value together with first and second derivatives (the jet workhorse).
    #[inline]
    pub fn d012(self, x: f64) -> (f64, f64, f64) {
        match self {
            Activation::ReLU => {
                if x > 0.0 {
                    (x, 1.0, 0.0)
                } else {
                    (0.0, 0.0, 0.0)
                }
            }
            Activation::Tanh => {
                let t = x.tanh();
                let d1 = 1.0 - t * t;
                (t, d1, -2.0 * t * d1)
            }
            Activation::Sech => {
                let t = x.tanh();
                let s = 1.0 / x.cosh();
                let d1 = -s * t;
                // s'' = s·t² - s³
                (s, d1, s * (t * t) - s * s * s)
            }
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Activation::ReLU => "relu",
            Activation::Tanh => "tanh",
            Activation::Sech => "sech",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Activation> {
        match tag {
            "relu" => Some(Activation::ReLU),
            "tanh" => Some(Activation::Tanh),
            "sech" => Some(Activation::Sech),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn central(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn smooth_derivatives_match_finite_differences() {
        for act in [Activation::Tanh, Activation::Sech] {
            for &x in &[-1.3, -0.2, 0.0, 0.45, 2.1] {
                for k in 0..MAX_DERIVATIVE_ORDER {
                    let fd = central(|y| act.derivative(y, k), x, 1e-5);
                    let exact = act.derivative(x, k + 1);
                    assert!(
                        (fd - exact).abs() <= 1e-6 * (1.0 + exact.abs()),
                        "{act:?} order {k} at {x}: fd {fd} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn d012_agrees_with_derivative_table() {
        for act in [Activation::Tanh, Activation::Sech] {
            for &x in &[-0.7, 0.2, 1.9] {
                let (v, d1, d2) = act.d012(x);
                assert!((v - act.derivative(x, 0)).abs() < 1e-15);
                assert!((d1 - act.derivative(x, 1)).abs() < 1e-14);
                assert!((d2 - act.derivative(x, 2)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn relu_basics() {
        assert_eq!(Activation::ReLU.value(-2.0), 0.0);
        assert_eq!(Activation::ReLU.value(3.0), 3.0);
        assert_eq!(Activation::ReLU.derivative(2.0, 1), 1.0);
        assert_eq!(Activation::ReLU.derivative(-2.0, 1), 0.0);
        assert_eq!(Activation::ReLU.derivative(2.0, 2), 0.0);
    }
}
