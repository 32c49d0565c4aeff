//! Error function (from `libm`, accurate to a few ulp) and its inverse
//! (from `statrs`).

pub use libm::{erf, erfc};
pub use statrs::function::erf::erf_inv;

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values from scipy.special.
    #[test]
    fn erf_reference_values() {
        let cases = [
            (0.5, 0.5204998778130465),
            (1.0, 0.8427007929497148),
            (2.7, 0.9998656672600594),
            (-2.7, -0.9998656672600594),
            (3.5, 0.9999992569016276),
        ];
        for (x, want) in cases {
            assert!((erf(x) - want).abs() < 1e-13, "x={x}");
        }
        assert_eq!(erf(0.0), 0.0);
    }

    #[test]
    fn erfc_tail_reference_values() {
        let cases = [
            (3.0, 2.2090496998585445e-05),
            (4.0, 1.541725790028002e-08),
            (5.0, 1.5374597944280347e-12),
            (6.0, 2.1519736712498913e-17),
        ];
        for (x, want) in cases {
            assert!(((erfc(x) - want) / want).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn erf_inv_reference_values() {
        let cases = [
            (0.9, 1.1630871536766743),
            (0.8, 0.9061938024368232),
            (0.6, 0.5951160814499948),
            (-0.3, -0.2724627147267544),
            (0.99, 1.8213863677184496),
        ];
        for (y, want) in cases {
            assert!((erf_inv(y) - want).abs() < 1e-13, "y={y}");
        }
        assert_eq!(erf_inv(0.0), 0.0);
        // Standard normal quantiles: sqrt(2) * erfinv(1 - 2 eps).
        let z95 = std::f64::consts::SQRT_2 * erf_inv(0.9);
        assert!((z95 - 1.6448536269514722).abs() < 1e-13);
    }

    #[test]
    fn erf_inv_round_trips() {
        for i in 1..200 {
            let y = -0.995 + i as f64 * 0.01;
            assert!((erf(erf_inv(y)) - y).abs() < 1e-13, "y={y}");
        }
    }
}
