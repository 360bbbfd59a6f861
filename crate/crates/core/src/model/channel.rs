use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::params::{ChannelGenConfig, ChannelRealization};
use crate::error::{Error, Result};

/// Distance-dependent power gain `d^-beta`.
pub fn path_loss_gain(distance: f64, exponent: f64) -> Result<f64> {
    if !(distance > 0.0) || !distance.is_finite() {
        return Err(Error::Domain(format!(
            "distance must be positive, got {distance}"
        )));
    }
    Ok(distance.powf(-exponent))
}

/// Squared magnitude of a unit-power Rician amplitude with linear factor `k_factor`.
///
/// The line-of-sight component has power `K/(K+1)` and the scattered part is
/// circular Gaussian with power `1/(K+1)`, so `E|v|^2 = 1`.
pub fn rician_power<R: Rng + ?Sized>(k_factor: f64, rng: &mut R) -> f64 {
    // Draw the Gaussians unconditionally so the stream layout does not depend on K.
    let x: f64 = StandardNormal.sample(rng);
    let y: f64 = StandardNormal.sample(rng);
    if k_factor.is_infinite() {
        return 1.0;
    }
    let los = (k_factor / (k_factor + 1.0)).sqrt();
    let nlos = (1.0 / (2.0 * (k_factor + 1.0))).sqrt();
    let re = los + nlos * x;
    let im = nlos * y;
    re * re + im * im
}

fn uniform<R: Rng + ?Sized>(range: (f64, f64), rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    range.0 + (range.1 - range.0) * u
}

/// Draw one channel realization; fully determined by `seed`.
pub fn draw_channel(seed: u64, cfg: &ChannelGenConfig) -> ChannelRealization {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k_factor = cfg.rician_k();
    let mut gain = |range: (f64, f64)| {
        let d = uniform(range, &mut rng);
        let fading = rician_power(k_factor, &mut rng);
        // Ranges are validated positive, so the path loss cannot fail.
        d.powf(-cfg.pathloss_exponent) * fading
    };
    let h1 = gain(cfg.ap_user_distance);
    let h2 = gain(cfg.ap_user_distance);
    let g = gain(cfg.interuser_distance);
    ChannelRealization {
        gain_user_ap: [h1, h2],
        gain_interuser: g,
    }
}
