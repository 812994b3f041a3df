//! Arithmetic in GF(2^ell) through exponent and logarithm tables.

use super::MdsError;

/// Primitive polynomials, bit `i` holding the coefficient of `x^i`.
pub const PRIMITIVE_POLYS: [u32; 16] = [
    0x3,     // x + 1
    0x7,     // x^2 + x + 1
    0xB,     // x^3 + x + 1
    0x13,    // x^4 + x + 1
    0x25,    // x^5 + x^2 + 1
    0x43,    // x^6 + x + 1
    0x83,    // x^7 + x + 1
    0x11D,   // x^8 + x^4 + x^3 + x^2 + 1
    0x211,   // x^9 + x^4 + 1
    0x409,   // x^10 + x^3 + 1
    0x805,   // x^11 + x^2 + 1
    0x1053,  // x^12 + x^6 + x^4 + x + 1
    0x201B,  // x^13 + x^4 + x^3 + x + 1
    0x4443,  // x^14 + x^10 + x^6 + x + 1
    0x8003,  // x^15 + x + 1
    0x1100B, // x^16 + x^12 + x^3 + x + 1
];

/// Elements are the integers `0..2^ell` read as polynomials over GF(2).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Field {
    ell: u32,
    poly: u32,
    exp: Vec<u16>,
    log: Vec<u16>,
}

impl Field {
    pub fn new(ell: u32) -> Result<Self, MdsError> {
        if !(1..=16).contains(&ell) {
            return Err(MdsError::FieldSize(ell));
        }
        let poly = PRIMITIVE_POLYS[ell as usize - 1];
        let q = 1usize << ell;
        let order = q - 1;
        let mut exp = vec![0u16; 2 * order];
        let mut log = vec![0u16; q];
        let mut cur = 1u32;
        for (i, e) in exp.iter_mut().take(order).enumerate() {
            *e = cur as u16;
            log[cur as usize] = i as u16;
            cur <<= 1;
            if cur & (1 << ell) != 0 {
                cur ^= poly;
            }
        }
        debug_assert_eq!(cur, 1, "polynomial for ell = {ell} is primitive");
        for i in order..2 * order {
            exp[i] = exp[i - order];
        }
        Ok(Self { ell, poly, exp, log })
    }

    pub fn bits(&self) -> u32 {
        self.ell
    }

    pub fn size(&self) -> usize {
        1 << self.ell
    }

    pub fn poly(&self) -> u32 {
        self.poly
    }

    pub fn add(&self, a: u16, b: u16) -> u16 {
        a ^ b
    }

    pub fn mul(&self, a: u16, b: u16) -> u16 {
        if a == 0 || b == 0 {
            0
        } else {
            self.exp[self.log[a as usize] as usize + self.log[b as usize] as usize]
        }
    }

    pub fn inv(&self, a: u16) -> Option<u16> {
        if a == 0 {
            None
        } else {
            let order = self.size() - 1;
            Some(self.exp[(order - self.log[a as usize] as usize) % order])
        }
    }

    /// `alpha^k` for the primitive element `alpha`; negative powers wrap.
    pub fn alpha_pow(&self, k: i64) -> u16 {
        let order = (self.size() - 1) as i64;
        self.exp[k.rem_euclid(order) as usize]
    }

    /// Order of `a` in the multiplicative group.
    pub fn order_of(&self, a: u16) -> Option<usize> {
        if a == 0 {
            return None;
        }
        let mut cur = a;
        let mut n = 1;
        while cur != 1 {
            cur = self.mul(cur, a);
            n += 1;
        }
        Some(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Carry-less product reduced modulo `poly`, bit by bit.
    fn slow_mul(a: u32, b: u32, ell: u32, poly: u32) -> u32 {
        let mut acc = 0u32;
        for i in 0..ell {
            if b >> i & 1 == 1 {
                acc ^= a << i;
            }
        }
        for bit in (ell..2 * ell).rev() {
            if acc >> bit & 1 == 1 {
                acc ^= poly << (bit - ell);
            }
        }
        acc
    }

    #[test]
    fn every_listed_polynomial_is_primitive() {
        for ell in 1..=16 {
            let f = Field::new(ell).unwrap();
            let alpha = f.alpha_pow(1);
            assert_eq!(f.order_of(alpha), Some(f.size() - 1), "ell = {ell}");
        }
    }

    #[test]
    fn gf4_table() {
        let f = Field::new(2).unwrap();
        // alpha = 2, alpha^2 = alpha + 1 = 3.
        assert_eq!(f.mul(2, 2), 3);
        for a in 0..4u16 {
            assert_eq!(f.mul(1, a), a);
            assert_eq!(f.add(a, a), 0);
        }
    }

    #[test]
    fn products_match_polynomial_arithmetic() {
        for ell in [3u32, 4, 8, 11] {
            let f = Field::new(ell).unwrap();
            let q = f.size() as u32;
            let step = (q / 64).max(1);
            for a in (0..q).step_by(step as usize) {
                for b in (0..q).step_by(step as usize) {
                    assert_eq!(f.mul(a as u16, b as u16) as u32, slow_mul(a, b, ell, f.poly()));
                }
                if a != 0 {
                    assert_eq!(f.mul(a as u16, f.inv(a as u16).unwrap()), 1);
                }
            }
        }
    }

    #[test]
    fn unsupported_sizes() {
        assert!(Field::new(0).is_err());
        assert!(Field::new(17).is_err());
    }
}
