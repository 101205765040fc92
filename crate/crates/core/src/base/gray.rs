use crate::error::{Error, Result};

fn check(index: usize, m: usize) -> Result<()> {
    if m == 0 || !m.is_power_of_two() {
        return Err(Error::invalid(format!("{m} is not a power of two")));
    }
    if index >= m {
        return Err(Error::invalid(format!("index {index} out of range 0..{m}")));
    }
    Ok(())
}

/// Binary-reflected Gray code of `index` within an alphabet of size `m`.
pub fn gray_encode(index: usize, m: usize) -> Result<usize> {
    check(index, m)?;
    Ok(index ^ (index >> 1))
}

/// Inverse of [`gray_encode`].
pub fn gray_decode(code: usize, m: usize) -> Result<usize> {
    check(code, m)?;
    let mut value = code;
    let mut shift = code >> 1;
    while shift != 0 {
        value ^= shift;
        shift >>= 1;
    }
    Ok(value)
}
