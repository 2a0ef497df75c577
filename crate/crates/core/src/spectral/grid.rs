use crate::error::{Error, Result};

/// Integer wavevector `(kx, ky, kz)`.
pub type Wavevector = [i64; 3];

/// Resolution metadata for a periodic box of Fourier modes.
///
/// Modes span `k ∈ [-M, M-1]³` where `M` is the half-width. Products of two
/// such fields are formed on a padded physical grid of `padded_points³`
/// points, with `padded_points ≥ 3M` so that no aliased triad lands back in
/// the band. When a resolved half-width `N` is set, the band splits into the
/// resolved set `F = [-N, N-1]³` and its complement `G`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WaveGrid {
    half_width: usize,
    padded_points: usize,
    resolved_half_width: Option<usize>,
}

impl WaveGrid {
    pub fn new(half_width: usize, resolved_half_width: Option<usize>) -> Result<Self> {
        if half_width == 0 {
            return Err(Error::InvalidGrid("half-width must be at least 1".into()));
        }
        if let Some(n) = resolved_half_width {
            if n == 0 || n > half_width {
                return Err(Error::InvalidGrid(format!(
                    "resolved half-width {n} must lie in [1, {half_width}]"
                )));
            }
        }
        Ok(Self {
            half_width,
            padded_points: fft_friendly_size(3 * half_width),
            resolved_half_width,
        })
    }

    /// Same band and resolved set with a caller-chosen padded size.
    pub fn with_padded_points(self, padded_points: usize) -> Result<Self> {
        if padded_points < 3 * self.half_width {
            return Err(Error::InvalidGrid(format!(
                "padded size {padded_points} violates the 3/2 rule for half-width {}",
                self.half_width
            )));
        }
        Ok(Self {
            padded_points,
            ..self
        })
    }

    pub fn with_resolved(self, resolved_half_width: usize) -> Result<Self> {
        Self::new(self.half_width, Some(resolved_half_width))
            .map(|g| Self {
                padded_points: self.padded_points,
                ..g
            })
    }

    pub fn without_resolved(self) -> Self {
        Self {
            resolved_half_width: None,
            ..self
        }
    }

    #[inline]
    pub fn half_width(&self) -> usize {
        self.half_width
    }

    #[inline]
    pub fn padded_points(&self) -> usize {
        self.padded_points
    }

    #[inline]
    pub fn resolved_half_width(&self) -> Option<usize> {
        self.resolved_half_width
    }

    /// Modes per dimension, `2M`.
    #[inline]
    pub fn modes_per_dim(&self) -> usize {
        2 * self.half_width
    }

    /// Number of wavevectors in the band, `(2M)³`.
    #[inline]
    pub fn mode_count(&self) -> usize {
        let n = self.modes_per_dim();
        n * n * n
    }

    /// Storage index along one axis for wavenumber `k`, or `None` if outside `[-M, M-1]`.
    #[inline]
    pub fn axis_index(&self, k: i64) -> Option<usize> {
        wrap_index(k, self.half_width)
    }

    /// Wavenumber stored at axis index `i`.
    #[inline]
    pub fn axis_wavenumber(&self, i: usize) -> i64 {
        unwrap_index(i, self.half_width)
    }

    /// Flat storage index of `k` (lexicographic over wrapped axis indices).
    #[inline]
    pub fn index_of(&self, k: Wavevector) -> Option<usize> {
        let n = self.modes_per_dim();
        let ix = self.axis_index(k[0])?;
        let iy = self.axis_index(k[1])?;
        let iz = self.axis_index(k[2])?;
        Some((ix * n + iy) * n + iz)
    }

    #[inline]
    pub fn wavevector(&self, index: usize) -> Wavevector {
        let n = self.modes_per_dim();
        let iz = index % n;
        let iy = (index / n) % n;
        let ix = index / (n * n);
        [
            self.axis_wavenumber(ix),
            self.axis_wavenumber(iy),
            self.axis_wavenumber(iz),
        ]
    }

    pub fn wavevectors(&self) -> impl Iterator<Item = (usize, Wavevector)> + '_ {
        (0..self.mode_count()).map(move |i| (i, self.wavevector(i)))
    }

    #[inline]
    pub fn contains(&self, k: Wavevector) -> bool {
        k.iter().all(|&c| in_band(c, self.half_width))
    }

    /// Whether `k` lies in the resolved set `F`. Errors when no resolved set is defined.
    pub fn is_resolved(&self, k: Wavevector) -> Result<bool> {
        let n = self.resolved_half_width.ok_or(Error::ResolvedSetMissing)?;
        Ok(k.iter().all(|&c| in_band(c, n)))
    }
}

/// Build a grid of half-width `M` with optional resolved half-width `N`.
pub fn make_wavegrid(half_width: i64, resolved_half_width: Option<i64>) -> Result<WaveGrid> {
    if half_width < 1 {
        return Err(Error::InvalidGrid(format!(
            "half-width must be positive, got {half_width}"
        )));
    }
    let resolved = match resolved_half_width {
        Some(n) if n < 1 => {
            return Err(Error::InvalidGrid(format!(
                "resolved half-width must be positive, got {n}"
            )))
        }
        Some(n) => Some(n as usize),
        None => None,
    };
    WaveGrid::new(half_width as usize, resolved)
}

/// Smallest integer `>= target` whose only prime factors are 2, 3 and 5.
pub fn fft_friendly_size(target: usize) -> usize {
    let mut n = target.max(1);
    loop {
        let mut m = n;
        for p in [2, 3, 5] {
            while m.is_multiple_of(p) {
                m /= p;
            }
        }
        if m == 1 {
            return n;
        }
        n += 1;
    }
}

#[inline]
pub(crate) fn in_band(k: i64, half_width: usize) -> bool {
    let m = half_width as i64;
    -m <= k && k < m
}

#[inline]
pub(crate) fn wrap_index(k: i64, half_width: usize) -> Option<usize> {
    let m = half_width as i64;
    if k >= 0 && k < m {
        Some(k as usize)
    } else if k < 0 && k >= -m {
        Some((k + 2 * m) as usize)
    } else {
        None
    }
}

#[inline]
pub(crate) fn unwrap_index(i: usize, half_width: usize) -> i64 {
    if i < half_width {
        i as i64
    } else {
        i as i64 - 2 * half_width as i64
    }
}

/// Wavenumbers of a band of half-width `b` in wrapped order: `0..b`, then `-b..0`.
pub(crate) fn band_wavenumbers(b: usize) -> Vec<i64> {
    (0..2 * b).map(|i| unwrap_index(i, b)).collect()
}
