//! Certified arithmetic: dyadic floats, intervals, elementary functions and
//! rotation numbers.

pub mod complex;
pub mod elementary;
pub mod float;
pub mod omega;
pub mod param;
pub mod real;

pub use complex::BigComplex;
pub use float::{Float, Round};
pub use omega::{ExpansionEnd, GeneratorRule, IrrationalSpec, Omega};
pub use param::Param;
pub use real::{BigReal, Enclosure};

/// Working precision with an escalation cap.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Precision {
    pub bits: u32,
    pub cap: u32,
}

impl Default for Precision {
    fn default() -> Precision {
        Precision { bits: 256, cap: 8192 }
    }
}

impl Precision {
    pub fn new(bits: u32, cap: u32) -> Precision {
        Precision { bits, cap: cap.max(bits) }
    }

    /// Successive precisions: `bits`, `2 bits`, ... up to `cap`.
    pub fn ladder(&self) -> impl Iterator<Item = u32> {
        let cap = self.cap;
        std::iter::successors(Some(self.bits.max(16)), move |&b| {
            let n = b.saturating_mul(2);
            (b < cap).then_some(n.min(cap))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_doubles_to_cap() {
        let v: Vec<u32> = Precision::new(256, 1500).ladder().collect();
        assert_eq!(v, vec![256, 512, 1024, 1500]);
    }
}
