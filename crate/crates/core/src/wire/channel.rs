use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum InvalidChannel {
    #[error("channel {0} is outside 1..=13")]
    Channel(u8),
    #[error("{0} MHz is not a 2.4 GHz channel centre")]
    Frequency(u16),
}

/// Centre frequency in MHz of a 2.4 GHz channel, channels 1 through 13.
pub fn channel_freq(channel: u8) -> Result<u16, InvalidChannel> {
    if !(1..=13).contains(&channel) {
        return Err(InvalidChannel::Channel(channel));
    }
    Ok(2412 + 5 * (u16::from(channel) - 1))
}

pub fn freq_channel(freq_mhz: u16) -> Result<u8, InvalidChannel> {
    let err = InvalidChannel::Frequency(freq_mhz);
    let offset = freq_mhz.checked_sub(2412).ok_or(err)?;
    if offset % 5 != 0 || offset / 5 > 12 {
        return Err(err);
    }
    Ok((offset / 5 + 1) as u8)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid() {
        assert_eq!(channel_freq(1), Ok(2412));
        assert_eq!(channel_freq(6), Ok(2437));
        assert_eq!(channel_freq(8), Ok(2447));
        assert_eq!(channel_freq(0), Err(InvalidChannel::Channel(0)));
        assert_eq!(channel_freq(14), Err(InvalidChannel::Channel(14)));
        assert_eq!(freq_channel(2484), Err(InvalidChannel::Frequency(2484)));
        assert_eq!(freq_channel(2413), Err(InvalidChannel::Frequency(2413)));
        assert_eq!(freq_channel(2400), Err(InvalidChannel::Frequency(2400)));
        for ch in 1..=13 {
            assert_eq!(freq_channel(channel_freq(ch).unwrap()), Ok(ch));
        }
    }
}
