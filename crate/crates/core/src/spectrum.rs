use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered OAM basis `l = -l_max ..= l_max` shared by every state and operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModeSpectrum {
    l_max: u32,
}

impl ModeSpectrum {
    /// The qutrit basis `{-1, 0, +1}`.
    pub const QUTRIT: ModeSpectrum = ModeSpectrum { l_max: 1 };

    pub fn new(l_max: u32) -> Result<Self> {
        if l_max < 1 {
            return Err(Error::domain("l_max must be at least 1"));
        }
        if l_max > 16 {
            return Err(Error::domain(format!("l_max = {l_max} is beyond the supported cutoff 16")));
        }
        Ok(ModeSpectrum { l_max })
    }

    pub fn l_max(&self) -> u32 {
        self.l_max
    }

    /// Number of modes per photon, `2 l_max + 1`.
    pub fn dim(&self) -> usize {
        2 * self.l_max as usize + 1
    }

    /// Position of winding number `l` in the basis, if it is inside the cutoff.
    pub fn index(&self, l: i32) -> Option<usize> {
        let shifted = l as i64 + self.l_max as i64;
        if shifted < 0 || shifted >= self.dim() as i64 {
            None
        } else {
            Some(shifted as usize)
        }
    }

    pub fn l_at(&self, index: usize) -> i32 {
        index as i32 - self.l_max as i32
    }

    pub fn contains(&self, l: i32) -> bool {
        self.index(l).is_some()
    }

    /// Winding numbers in basis order.
    pub fn modes(&self) -> impl Iterator<Item = i32> + Clone {
        let l_max = self.l_max as i32;
        -l_max..=l_max
    }
}

impl Default for ModeSpectrum {
    fn default() -> Self {
        Self::QUTRIT
    }
}
