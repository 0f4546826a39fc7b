//! Small shared helpers: deterministic sub-seed derivation, Gaussian sampling,
//! fixed-precision float formatting, and hex encoding.

use rand::Rng;
use sha2::{Digest, Sha256};

/// Derive a labelled sub-seed from a base seed.
///
/// One global seed drives every stochastic stage; each stage mixes in a
/// distinct label so streams are independent but fully reproducible:
/// `sha256(seed_le || label)[..8]` interpreted little-endian.
pub fn derive_seed(base: u64, label: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(base.to_le_bytes());
    hasher.update(label.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("sha256 yields >= 8 bytes"))
}

/// One standard-normal pair via Box–Muller on the generator's uniforms.
///
/// Hand-rolled (rather than a distributions crate) so that bitwise
/// reproducibility depends only on the seeded generator itself.
pub fn gaussian_pair<R: Rng>(rng: &mut R) -> (f64, f64) {
    loop {
        let u1: f64 = rng.gen();
        if u1 > 0.0 {
            let u2: f64 = rng.gen();
            let r = (-2.0 * u1.ln()).sqrt();
            let theta = 2.0 * std::f64::consts::PI * u2;
            return (r * theta.cos(), r * theta.sin());
        }
    }
}

/// Format a float with 9 significant digits as plain decimal text.
///
/// Used by every TSV artifact so that identical values always serialize to
/// identical bytes.
pub fn fmt_sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        // -0.0 normalizes to 0.0; non-finite values never reach artifacts
        // (watchdogs abort first) but format defensively.
        return format!("{:.8}", if x.is_finite() { 0.0 } else { x });
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (8 - magnitude).clamp(0, 17) as usize;
    format!("{x:.decimals$}")
}

/// Lowercase hex encoding of a byte slice (for sha256 manifests).
pub fn to_hex(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// sha256 of a byte slice as lowercase hex.
pub fn sha256_hex(bytes: &[u8]) -> String {
    to_hex(&Sha256::digest(bytes))
}
