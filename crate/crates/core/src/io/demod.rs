use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Rectangular-window digital downconversion.
///
/// Segment `s` of length `L` yields `(2/L) sum_j raw[sL+j] exp(-2 pi i f (sL+j) / f_s)`;
/// a trailing partial segment is dropped. For a tone `A cos(2 pi f t + phi)`
/// with whole cycles per segment every output equals `A e^{i phi}`.
pub fn demodulate(
    raw: &[f64],
    carrier_freq: f64,
    sample_rate: f64,
    segment_len: usize,
) -> Result<Vec<Complex64>> {
    if segment_len == 0 {
        return Err(Error::invalid("segment_len must be at least 1"));
    }
    if raw.len() < segment_len {
        return Err(Error::invalid(format!(
            "record of {} samples is shorter than one segment of {segment_len}",
            raw.len()
        )));
    }
    if !(sample_rate > 0.0 && sample_rate.is_finite() && carrier_freq.is_finite()) {
        return Err(Error::invalid(
            "sample_rate must be positive and frequencies finite",
        ));
    }
    let step = 2.0 * PI * carrier_freq / sample_rate;
    let scale = 2.0 / segment_len as f64;
    Ok(raw
        .chunks_exact(segment_len)
        .enumerate()
        .map(|(s, seg)| {
            let base = s * segment_len;
            let sum: Complex64 = seg
                .iter()
                .enumerate()
                .map(|(j, &x)| x * Complex64::from_polar(1.0, -step * (base + j) as f64))
                .sum();
            sum * scale
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(a: f64, phi: f64, f: f64, fs: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|k| a * (2.0 * PI * f * k as f64 / fs + phi).cos())
            .collect()
    }

    #[test]
    fn recovers_tone() {
        let raw = tone(0.7, 0.4, 125e6, 1e9, 256 * 8 + 100);
        let out = demodulate(&raw, 125e6, 1e9, 256).unwrap();
        assert_eq!(out.len(), 8);
        let expected = Complex64::from_polar(0.7, 0.4);
        for z in out {
            assert!((z - expected).norm() < 1e-9);
        }
    }

    #[test]
    fn zeros_and_errors() {
        let out = demodulate(&[0.0; 50], 10.0, 100.0, 10).unwrap();
        assert!(out.iter().all(|z| *z == Complex64::new(0.0, 0.0)));
        assert!(demodulate(&[0.0; 5], 10.0, 100.0, 10).is_err());
        assert!(demodulate(&[0.0; 5], 10.0, 100.0, 0).is_err());
    }
}
