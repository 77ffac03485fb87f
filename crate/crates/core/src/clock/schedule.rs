//! Decoding windows: level `l` is decoded while the clock polarization lies
//! in `[k_off, k_on]`.

use serde::{Deserialize, Serialize};

use super::ClockError;
use crate::memory::ProtocolParams;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub level: u32,
    /// Nominal start `t_l = l t_prot + (l - 1) t_dec`.
    pub t_l: f64,
    /// `floor(K e^{-r t_l})`.
    pub k_on: i64,
    /// `ceil(K e^{-r (t_l + t_dec)})`.
    pub k_off: i64,
}

impl Window {
    pub fn contains(&self, k: f64) -> bool {
        self.k_off as f64 <= k && k <= self.k_on as f64
    }

    /// Interval during which the mean polarization `K e^{-rt}` is inside
    /// the window.
    pub fn mean_interval(&self, k_bits: u64, rate: f64) -> (f64, f64) {
        let k = k_bits as f64;
        (
            (k / self.k_on as f64).ln() / rate,
            (k / self.k_off as f64).ln() / rate,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowSchedule {
    pub k_bits: u64,
    pub windows: Vec<Window>,
}

impl WindowSchedule {
    pub fn level(&self, l: u32) -> Option<&Window> {
        self.windows.get(l.checked_sub(1)? as usize)
    }
}

/// Nominal start of level `l`'s window.
pub fn level_start(l: u32, t_prot: f64, t_dec: f64) -> f64 {
    f64::from(l) * t_prot + f64::from(l.saturating_sub(1)) * t_dec
}

/// Integer polarization windows for every level of `protocol`.
pub fn window_schedule(protocol: &ProtocolParams) -> Result<WindowSchedule, ClockError> {
    let k = protocol.clock_bits as f64;
    let r = protocol.rate;
    let mut windows: Vec<Window> = Vec::with_capacity(protocol.levels as usize);
    for level in 1..=protocol.levels {
        let t_l = level_start(level, protocol.t_prot, protocol.t_dec);
        let k_on = (k * (-r * t_l).exp()).floor() as i64;
        let k_off = (k * (-r * (t_l + protocol.t_dec)).exp()).ceil() as i64;
        if k_on <= k_off {
            return Err(ClockError::DegenerateWindow { level, k_on, k_off });
        }
        if let Some(prev) = windows.last() {
            if k_on >= prev.k_off {
                return Err(ClockError::OverlappingWindows {
                    level: prev.level,
                    next: level,
                });
            }
        }
        windows.push(Window {
            level,
            t_l,
            k_on,
            k_off,
        });
    }
    Ok(WindowSchedule {
        k_bits: protocol.clock_bits,
        windows,
    })
}
