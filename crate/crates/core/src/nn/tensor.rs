use crate::error::{Error, Result};

/// Dense `channels × length` signal stored channel-major: all of channel 0's
/// timeline, then channel 1, and so on.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T = f64> {
    channels: usize,
    length: usize,
    data: Vec<T>,
}

impl<T> Tensor<T> {
    pub fn new(channels: usize, length: usize, data: Vec<T>) -> Result<Self> {
        if channels == 0 {
            return Err(Error::shape("tensor needs at least one channel"));
        }
        if data.len() != channels * length {
            return Err(Error::shape(format!(
                "data has {} values, expected {channels}x{length}",
                data.len()
            )));
        }
        Ok(Self {
            channels,
            length,
            data,
        })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn channel(&self, c: usize) -> &[T] {
        &self.data[c * self.length..(c + 1) * self.length]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [T] {
        &mut self.data[c * self.length..(c + 1) * self.length]
    }
}

impl<T: Copy> Tensor<T> {
    pub fn filled(channels: usize, length: usize, value: T) -> Self {
        assert!(channels > 0, "tensor needs at least one channel");
        Self {
            channels,
            length,
            data: vec![value; channels * length],
        }
    }

    /// Builds a tensor from equally long per-channel rows.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let length = rows.first().map_or(0, |r| r.as_ref().len());
        if rows.iter().any(|r| r.as_ref().len() != length) {
            return Err(Error::shape("rows have different lengths"));
        }
        let data = rows
            .iter()
            .flat_map(|r| r.as_ref().iter().copied())
            .collect();
        Self::new(rows.len(), length, data)
    }

    #[inline]
    pub fn get(&self, c: usize, t: usize) -> T {
        self.data[c * self.length + t]
    }

    /// Copies the time range `[start, end)` of every channel.
    pub fn slice_time(&self, start: usize, end: usize) -> Result<Self> {
        if start > end || end > self.length {
            return Err(Error::shape(format!(
                "time slice {start}..{end} outside length {}",
                self.length
            )));
        }
        let mut data = Vec::with_capacity(self.channels * (end - start));
        for c in 0..self.channels {
            data.extend_from_slice(&self.channel(c)[start..end]);
        }
        Self::new(self.channels, end - start, data)
    }
}

impl Tensor<f64> {
    pub fn zeros(channels: usize, length: usize) -> Self {
        Self::filled(channels, length, 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Stacks `b`'s channels after `a`'s.
pub fn concat_channels<T: Copy>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    if a.length != b.length {
        return Err(Error::shape(format!(
            "concat length mismatch: {} vs {}",
            a.length, b.length
        )));
    }
    let mut data = Vec::with_capacity(a.data.len() + b.data.len());
    data.extend_from_slice(&a.data);
    data.extend_from_slice(&b.data);
    Tensor::new(a.channels + b.channels, a.length, data)
}

/// Inverse of [`concat_channels`]: the first `first` channels, then the rest.
pub fn split_channels<T: Copy>(x: &Tensor<T>, first: usize) -> Result<(Tensor<T>, Tensor<T>)> {
    if first == 0 || first >= x.channels {
        return Err(Error::shape(format!(
            "cannot split {} channels at {first}",
            x.channels
        )));
    }
    let cut = first * x.length;
    Ok((
        Tensor::new(first, x.length, x.data[..cut].to_vec())?,
        Tensor::new(x.channels - first, x.length, x.data[cut..].to_vec())?,
    ))
}
