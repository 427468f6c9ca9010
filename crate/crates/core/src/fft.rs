//! Thin 2-D FFT layer over rustfft.
//!
//! Transforms are separable: a length-W pass over rows, a transpose, a
//! length-H pass, and a transpose back.  Plans are cached process-wide
//! behind a mutex; the lock is taken once per 2-D transform, not per row.

use num_complex::Complex;
use once_cell::sync::Lazy;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::sync::{Arc, Mutex};

static PLANNER: Lazy<Mutex<FftPlanner<f64>>> = Lazy::new(|| Mutex::new(FftPlanner::new()));

fn plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    PLANNER.lock().unwrap().plan_fft(len, direction)
}

fn transpose(src: &[Complex<f64>], h: usize, w: usize) -> Vec<Complex<f64>> {
    let mut out = vec![Complex::default(); h * w];
    crate::exec::for_each_row_mut(&mut out, h, |j, row| {
        for (i, v) in row.iter_mut().enumerate() {
            *v = src[i * w + j];
        }
    });
    out
}

fn pass_rows(buf: &mut [Complex<f64>], width: usize, fft: &Arc<dyn Fft<f64>>) {
    let scratch_len = fft.get_inplace_scratch_len();
    crate::exec::for_each_row_mut(buf, width, |_, row| {
        let mut scratch = vec![Complex::default(); scratch_len];
        fft.process_with_scratch(row, &mut scratch);
    });
}

fn fft2_inplace(buf: &mut Vec<Complex<f64>>, h: usize, w: usize, direction: FftDirection) {
    debug_assert_eq!(buf.len(), h * w);
    let row_fft = plan(w, direction);
    let col_fft = plan(h, direction);
    pass_rows(buf, w, &row_fft);
    let mut t = transpose(buf, h, w);
    pass_rows(&mut t, h, &col_fft);
    *buf = transpose(&t, w, h);
}

/// Unnormalized forward 2-D DFT of a real row-major buffer.
pub(crate) fn fft2(data: &[f64], h: usize, w: usize) -> Vec<Complex<f64>> {
    let mut buf: Vec<Complex<f64>> = data.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft2_inplace(&mut buf, h, w, FftDirection::Forward);
    buf
}

/// Inverse 2-D DFT including the `1/(h*w)` normalization; returns the real
/// part.  Imaginary residue from conjugate-symmetric spectra is dropped.
pub(crate) fn ifft2_real(spectrum: &[Complex<f64>], h: usize, w: usize) -> Vec<f64> {
    let mut buf = spectrum.to_vec();
    fft2_inplace(&mut buf, h, w, FftDirection::Inverse);
    let scale = 1.0 / (h * w) as f64;
    buf.iter().map(|v| v.re * scale).collect()
}

/// Optical transfer function of a centered kernel on an `h x w` grid: the
/// kernel center tap goes to index (0, 0) with cyclic wrap, then a forward
/// DFT.  Taps are accumulated, so kernels larger than the grid fold
/// correctly.
pub(crate) fn psf2otf(taps: &[f64], kh: usize, kw: usize, h: usize, w: usize) -> Vec<Complex<f64>> {
    debug_assert_eq!(taps.len(), kh * kw);
    let ch = (kh / 2) as isize;
    let cw = (kw / 2) as isize;
    let mut padded = vec![0.0; h * w];
    for i in 0..kh {
        for j in 0..kw {
            let r = (i as isize - ch).rem_euclid(h as isize) as usize;
            let c = (j as isize - cw).rem_euclid(w as isize) as usize;
            padded[r * w + c] += taps[i * kw + j];
        }
    }
    fft2(&padded, h, w)
}
