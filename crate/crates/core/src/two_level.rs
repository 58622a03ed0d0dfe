//! Closed-form propagation of a driven `{|g⟩, |r⟩}` pair.
//!
//! When only the target is driven and the control is frozen in `|1⟩` or
//! `|r⟩`, the 9-level dynamics splits into independent 2×2 blocks. The
//! optimizer works entirely in these blocks.

use nalgebra::{Matrix2, Vector2};

use crate::dynamics::C64;

pub type Mat2 = Matrix2<C64>;
pub type Vec2 = Vector2<C64>;

/// Block Hamiltonian `[[e_g, (Ω/2)e^{iξ}], [(Ω/2)e^{-iξ}, e_r]]`. The
/// diagonal energies may carry imaginary decay parts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoLevel {
    pub omega: f64,
    pub xi: f64,
    pub e_g: C64,
    pub e_r: C64,
}

impl TwoLevel {
    pub fn hamiltonian(&self) -> Mat2 {
        let half = C64::from_polar(0.5 * self.omega, self.xi);
        let half_conj = C64::from_polar(0.5 * self.omega, -self.xi);
        Mat2::new(self.e_g, half, half_conj, self.e_r)
    }

    /// `exp(-iHt)`.
    pub fn propagator(&self, t: f64) -> Mat2 {
        let mean = 0.5 * (self.e_g + self.e_r);
        let d = 0.5 * (self.e_r - self.e_g);
        let half = C64::from_polar(0.5 * self.omega, self.xi);
        let half_conj = C64::from_polar(0.5 * self.omega, -self.xi);
        // traceless part B = [[-d, half], [half*, d]], B² = s² I
        let s2 = d * d + 0.25 * self.omega * self.omega;
        let (cos_st, sinc) = cos_sinc(s2, t);
        let phase = (C64::new(0.0, -t) * mean).exp();
        let mi = C64::new(0.0, -1.0);
        Mat2::new(
            phase * (cos_st - mi * sinc * d),
            phase * mi * sinc * half,
            phase * mi * sinc * half_conj,
            phase * (cos_st + mi * sinc * d),
        )
    }
}

/// `cos(st)` and `sin(st)/s` as functions of `s²`.
fn cos_sinc(s2: C64, t: f64) -> (C64, C64) {
    let x2 = s2 * t * t;
    if x2.norm() < 1e-6 {
        let cos = 1.0 - x2 / 2.0 + x2 * x2 / 24.0;
        let sinc = t * (1.0 - x2 / 6.0 + x2 * x2 / 120.0);
        (cos, sinc)
    } else {
        let s = s2.sqrt();
        let st = s * t;
        (st.cos(), st.sin() / s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn expm_series(h: &Mat2, t: f64) -> Mat2 {
        // high-order Taylor with squaring, test-only reference
        let a = h * C64::new(0.0, -t / 1024.0);
        let mut term = Mat2::identity();
        let mut sum = Mat2::identity();
        for k in 1..30 {
            term = term * a / C64::new(k as f64, 0.0);
            sum += term;
        }
        for _ in 0..10 {
            sum = sum * sum;
        }
        sum
    }

    #[test]
    fn matches_series_with_decay() {
        let blocks = [
            TwoLevel { omega: 0.9, xi: 0.3, e_g: C64::new(0.0, -0.01), e_r: C64::new(-0.4, -0.02) },
            TwoLevel { omega: 2.0, xi: -1.1, e_g: C64::new(0.0, 0.0), e_r: C64::new(0.5, 0.0) },
            TwoLevel { omega: 0.0, xi: 0.0, e_g: C64::new(0.2, 0.0), e_r: C64::new(0.2, 0.0) },
        ];
        for b in blocks {
            for t in [0.0, 1e-5, 0.7, 5.3] {
                let exact = b.propagator(t);
                let reference = expm_series(&b.hamiltonian(), t);
                assert!((exact - reference).norm() < 1e-12, "{b:?} t={t}");
            }
        }
    }
}
