//! Complex gamma function (Lanczos approximation with reflection).

use std::f64::consts::PI;

use crate::{Error, Result, C64};

const G: f64 = 607.0 / 128.0;
const COEFFS: [f64; 15] = [
    0.999_999_999_999_997_1,
    57.156_235_665_862_92,
    -59.597_960_355_475_49,
    14.136_097_974_741_747,
    -0.491_913_816_097_620_2,
    0.339_946_499_848_118_9e-4,
    0.465_236_289_270_485_8e-4,
    -0.983_744_753_048_795_6e-4,
    0.158_088_703_224_912_5e-3,
    -0.210_264_441_724_103_2e-3,
    0.217_439_618_115_212_6e-3,
    -0.164_318_106_536_763_9e-3,
    0.844_182_239_838_527_4e-4,
    -0.261_908_384_015_814_1e-4,
    0.368_991_826_595_316_2e-5,
];

fn is_pole(z: C64) -> bool {
    z.re <= 0.0 && z.im.abs() < 1e-14 && (z.re - z.re.round()).abs() < 1e-14
}

/// `ln Γ(z)` for `Re z ≥ 1/2` (principal-ish; only `exp` of it is used).
fn ln_gamma_right(z: C64) -> C64 {
    let z = z - 1.0;
    let mut a = C64::new(COEFFS[0], 0.0);
    for (k, &c) in COEFFS.iter().enumerate().skip(1) {
        a += c / (z + k as f64);
    }
    let t = z + G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + a.ln()
}

/// `Γ(z)` for complex `z`; relative error around `1e-14` for `|z| ≤ 20`.
pub fn gamma_complex(z: C64) -> Result<C64> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::NonFinite(z));
    }
    if is_pole(z) {
        return Err(Error::PoleOfGamma(z));
    }
    if z.re < 0.5 {
        let s = (PI * z).sin();
        return Ok(PI / (s * ln_gamma_right(1.0 - z).exp()));
    }
    Ok(ln_gamma_right(z).exp())
}
