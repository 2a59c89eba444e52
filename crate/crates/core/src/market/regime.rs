//! Barrier projection for the reflecting regimes.
//!
//! A coordinate that violates its barrier by `v` is reflected to
//! `barrier ± v/2` (strictly inside the open region). The mass this moves is
//! taken from, or handed to, the remaining coordinates in proportion to their
//! room to their own bound, so no donor crosses a barrier. When the available
//! room is short the reflection factor shrinks below one half; the moved
//! point always stays strictly interior.

use super::rank::rank_order;
use super::spec::Regime;
use crate::error::{Result, SptError};

const REFLECTION: f64 = 0.5;
const MARGIN: f64 = 1e-12;

/// Projects `weights` (a simplex point) so that the regime barrier holds
/// strictly. Returns `true` when the weights were changed.
pub fn enforce_regime(weights: &mut [f64], regime: &Regime) -> Result<bool> {
    let mut perm = Vec::with_capacity(weights.len());
    enforce_regime_with(weights, regime, &mut perm)
}

/// [`enforce_regime`] with a caller-owned rank buffer.
pub fn enforce_regime_with(weights: &mut [f64], regime: &Regime, perm: &mut Vec<usize>) -> Result<bool> {
    let n = weights.len();
    match *regime {
        Regime::Free => Ok(false),
        Regime::ReflectNf { phi } => {
            regime.validate(n)?;
            let floors = vec![phi; n];
            raise_to_floors(weights, &floors, |i, w| w[i] <= phi)
        }
        Regime::ReflectLf { m, kappa } => {
            regime.validate(n)?;
            rank_order(weights, perm);
            // only the top-m ranks are bound by kappa; the others may shrink to 0
            let mut floors = vec![0.0; n];
            for &i in perm.iter().take(m) {
                floors[i] = kappa;
            }
            raise_to_floors(weights, &floors, |i, w| floors[i] > 0.0 && w[i] <= kappa)
        }
        Regime::ReflectDiversity { delta } => {
            regime.validate(n)?;
            lower_to_cap(weights, 1.0 - delta)
        }
    }
}

fn raise_to_floors(weights: &mut [f64], floors: &[f64], violates: impl Fn(usize, &[f64]) -> bool) -> Result<bool> {
    let n = weights.len();
    let violators: Vec<usize> = (0..n).filter(|&i| violates(i, weights)).collect();
    if violators.is_empty() {
        return Ok(false);
    }
    let deficit: f64 = violators.iter().map(|&i| floors[i] - weights[i]).sum();
    let room: f64 = (0..n).filter(|i| !violators.contains(i)).map(|j| weights[j] - floors[j]).sum();
    let slack = room - deficit;
    if slack <= 0.0 {
        return Err(SptError::Config(format!("barrier infeasible: room {room} does not cover deficit {deficit}")));
    }
    let margin = MARGIN.min(slack / (4.0 * violators.len() as f64));
    let factor = if deficit > 0.0 { REFLECTION.min(slack / (2.0 * deficit)) } else { 0.0 };
    let mut moved = 0.0;
    for &i in &violators {
        let target = floors[i] + factor * (floors[i] - weights[i]) + margin;
        moved += target - weights[i];
        weights[i] = target;
    }
    let share = moved / room;
    for j in (0..n).filter(|i| !violators.contains(i)) {
        weights[j] -= share * (weights[j] - floors[j]);
    }
    Ok(true)
}

fn lower_to_cap(weights: &mut [f64], cap: f64) -> Result<bool> {
    let n = weights.len();
    let violators: Vec<usize> = (0..n).filter(|&i| weights[i] >= cap).collect();
    if violators.is_empty() {
        return Ok(false);
    }
    let excess: f64 = violators.iter().map(|&i| weights[i] - cap).sum();
    let room: f64 = (0..n).filter(|i| !violators.contains(i)).map(|j| cap - weights[j]).sum();
    let slack = room - excess;
    if slack <= 0.0 {
        return Err(SptError::Config(format!("diversity cap {cap} infeasible: room {room}, excess {excess}")));
    }
    let margin = MARGIN.min(slack / (4.0 * violators.len() as f64));
    let factor = if excess > 0.0 { REFLECTION.min(slack / (2.0 * excess)) } else { 0.0 };
    let mut moved = 0.0;
    for &i in &violators {
        let target = cap - factor * (weights[i] - cap) - margin;
        moved += weights[i] - target;
        weights[i] = target;
    }
    let share = moved / room;
    for j in (0..n).filter(|i| !violators.contains(i)) {
        weights[j] += share * (cap - weights[j]);
    }
    Ok(true)
}
