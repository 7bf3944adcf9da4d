//! OFDM(A) burst synthesis: subcarrier mapping, unitary IDFT, cyclic prefix,
//! multipath, CFO rotation and AWGN.
//!
//! Sample `n` of the body of symbol `g` (counted from the end of its cyclic
//! prefix) is rotated by `exp(j 2 pi phi n / N)` and the whole symbol by the
//! accumulated phase `exp(j 2 pi phi (g0 + g)(N + Nc) / N)`. Cyclic-prefix
//! samples continue the same ramp backwards, so a burst is a contiguous
//! stretch of a single CFO-rotated sample stream.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;

use crate::channel::LinkChannel;
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::seed::Seed;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubcarrierMap {
    pub n: usize,
    pub data: Vec<usize>,
    pub nulls: Vec<usize>,
}

impl SubcarrierMap {
    /// `q` nulls evenly interleaved at `floor(i N / q)`, data on the rest.
    pub fn interleaved(n: usize, q: usize) -> Result<Self> {
        if q == 0 || q > n {
            return Err(Error::config(
                "n_data",
                format!("null count must be in 1..={n}, got {q}"),
            ));
        }
        let nulls: Vec<usize> = (0..q).map(|i| i * n / q).collect();
        let mut is_null = vec![false; n];
        for &i in &nulls {
            is_null[i] = true;
        }
        let data = (0..n).filter(|&i| !is_null[i]).collect();
        Ok(SubcarrierMap { n, data, nulls })
    }
}

pub fn make_map(cfg: &SystemConfig) -> Result<SubcarrierMap> {
    SubcarrierMap::interleaved(cfg.n_subcarriers, cfg.n_nulls())
}

/// A block of OFDM symbols. `symbols` holds the transmitted frequency-domain
/// payload; `time` holds the time-domain samples (CP first) either as sent
/// or as received, depending on where the burst came from.
#[derive(Debug, Clone, PartialEq)]
pub struct OfdmBurst {
    pub symbols: Vec<Vec<Complex64>>,
    pub time: Vec<Vec<Complex64>>,
    pub cfo: f64,
    pub cp_len: usize,
}

impl OfdmBurst {
    pub fn n_symbols(&self) -> usize {
        self.time.len()
    }

    /// The CP-stripped body of symbol `g`.
    pub fn body(&self, g: usize) -> &[Complex64] {
        &self.time[g][self.cp_len..]
    }

    /// Dump as CSV with columns `symbol,sample,re,im`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "symbol,sample,re,im")?;
        for (g, sym) in self.time.iter().enumerate() {
            for (i, s) in sym.iter().enumerate() {
                writeln!(w, "{g},{i},{},{}", s.re, s.im)?;
            }
        }
        Ok(())
    }
}

/// Diagonal of the phase rotation matrix `D(phi)`.
pub fn phase_rotation(phi: f64, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|i| Complex64::from_polar(1.0, 2.0 * PI * phi * i as f64 / n as f64))
        .collect()
}

/// Accumulated CFO phase at the start of symbol `g` (CP included in the count).
pub fn eta(phi: f64, g: usize, cfg: &SystemConfig) -> Complex64 {
    Complex64::from_polar(
        1.0,
        2.0 * PI * phi * (g * cfg.symbol_len()) as f64 / cfg.n_subcarriers as f64,
    )
}

/// Unitary inverse DFT.
pub fn idft(freq: &[Complex64]) -> Vec<Complex64> {
    let n = freq.len();
    let mut buf = freq.to_vec();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let s = 1.0 / (n as f64).sqrt();
    buf.iter_mut().for_each(|x| *x *= s);
    buf
}

/// Unitary forward DFT.
pub fn dft(time: &[Complex64]) -> Vec<Complex64> {
    let n = time.len();
    let mut buf = time.to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let s = 1.0 / (n as f64).sqrt();
    buf.iter_mut().for_each(|x| *x *= s);
    buf
}

/// Build a burst from explicit frequency-domain symbols (length N each).
pub fn modulate_symbols(cfg: &SystemConfig, symbols: Vec<Vec<Complex64>>) -> OfdmBurst {
    let n = cfg.n_subcarriers;
    let time = symbols
        .iter()
        .map(|s| {
            assert_eq!(s.len(), n);
            let body = idft(s);
            let mut t = Vec::with_capacity(n + cfg.cp_len);
            t.extend_from_slice(&body[n - cfg.cp_len..]);
            t.extend_from_slice(&body);
            t
        })
        .collect();
    OfdmBurst {
        symbols,
        time,
        cfo: 0.0,
        cp_len: cfg.cp_len,
    }
}

/// Random unit-power QPSK burst on the data carriers of `map`.
pub fn modulate(cfg: &SystemConfig, map: &SubcarrierMap, seed: u64) -> OfdmBurst {
    let mut rng = Seed(seed).rng();
    let a = std::f64::consts::FRAC_1_SQRT_2;
    let symbols = (0..cfg.n_symbols)
        .map(|_| {
            let mut s = vec![ZERO; cfg.n_subcarriers];
            for &i in &map.data {
                let bits: u8 = rng.random_range(0..4);
                let re = if bits & 1 == 0 { a } else { -a };
                let im = if bits & 2 == 0 { a } else { -a };
                s[i] = Complex64::new(re, im);
            }
            s
        })
        .collect();
    modulate_symbols(cfg, symbols)
}

/// Per-link transmission parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Impairments {
    pub cfo: f64,
    /// Index of the first symbol of this burst within the ongoing transmission.
    pub symbol_offset: usize,
    /// Amplitude applied to the unit-power waveform.
    pub gain: f64,
    /// Noise power per complex sample, W. Zero disables noise.
    pub noise_power_w: f64,
}

impl Impairments {
    /// Amplitude such that the average transmit power over a symbol body is
    /// `tx_power_w` with unit-power data on every data carrier.
    pub fn for_power(cfg: &SystemConfig, cfo: f64, tx_power_w: f64) -> Self {
        Impairments {
            cfo,
            symbol_offset: 0,
            gain: (tx_power_w * cfg.n_subcarriers as f64 / cfg.n_data as f64).sqrt(),
            noise_power_w: cfg.noise_power_w(),
        }
    }

    /// Unit-amplitude, noise-free transmission with the given CFO.
    pub fn clean(cfo: f64) -> Self {
        Impairments {
            cfo,
            symbol_offset: 0,
            gain: 1.0,
            noise_power_w: 0.0,
        }
    }
}

/// Pass a burst through a link: multipath, CFO rotation, then AWGN.
pub fn apply_link<R: Rng + ?Sized>(
    burst: &OfdmBurst,
    link: &LinkChannel,
    imp: &Impairments,
    cfg: &SystemConfig,
    rng: &mut R,
) -> OfdmBurst {
    let n = cfg.n_subcarriers;
    let sym_len = cfg.symbol_len();
    let stream: Vec<Complex64> = burst.time.iter().flatten().map(|s| s * imp.gain).collect();
    let mut out = vec![ZERO; stream.len()];
    for (t, y) in out.iter_mut().enumerate() {
        for (l, h) in link.taps.iter().enumerate().take(t + 1) {
            *y += h * stream[t - l];
        }
    }
    let step = 2.0 * PI * imp.cfo / n as f64;
    let noise_std = (imp.noise_power_w / 2.0).sqrt();
    for (t, y) in out.iter_mut().enumerate() {
        let g = t / sym_len;
        let i = t % sym_len;
        let k = ((imp.symbol_offset + g) * sym_len + i) as f64 - cfg.cp_len as f64;
        *y *= Complex64::from_polar(1.0, step * k);
        if imp.noise_power_w > 0.0 {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *y += Complex64::new(re, im) * noise_std;
        }
    }
    OfdmBurst {
        symbols: burst.symbols.clone(),
        time: out.chunks(sym_len).map(<[Complex64]>::to_vec).collect(),
        cfo: imp.cfo,
        cp_len: cfg.cp_len,
    }
}

/// Noise-free multi-AAU receive via per-link convolution: row `m` of the
/// returned matrix for symbol `g` is the body received by AAU `m`, summed
/// over all UEs. `channels[m][k]` is the UE `k` -> AAU `m` link and
/// `cfo[(m, k)]` its CFO.
pub fn stacked_receive(
    cfg: &SystemConfig,
    bursts: &[OfdmBurst],
    channels: &[Vec<LinkChannel>],
    cfo: &DMatrix<f64>,
    gains: &[f64],
) -> Result<Vec<DMatrix<Complex64>>> {
    let (m_count, k_count) = check_dims(cfg, bursts, channels, cfo, gains)?;
    let n = cfg.n_subcarriers;
    let lb = bursts[0].n_symbols();
    let mut out = vec![DMatrix::from_element(m_count, n, ZERO); lb];
    // Noise is off, so the generator is never drawn from.
    let mut no_rng = Seed(0).rng();
    for (m, row) in channels.iter().enumerate() {
        for k in 0..k_count {
            let imp = Impairments {
                cfo: cfo[(m, k)],
                symbol_offset: 0,
                gain: gains[k],
                noise_power_w: 0.0,
            };
            let rx = apply_link(&bursts[k], &row[k], &imp, cfg, &mut no_rng);
            for (g, y) in out.iter_mut().enumerate() {
                for (i, s) in rx.body(g).iter().enumerate() {
                    y[(m, i)] += s;
                }
            }
        }
    }
    Ok(out)
}

/// The same received matrix built from the stacked matrix identity
/// `Y_g = sqrt(N) sum_k (eta_g H^k F_L^T X_g^k F^H) o Phi^k`, with unitary `F`.
pub fn hadamard_receive(
    cfg: &SystemConfig,
    bursts: &[OfdmBurst],
    channels: &[Vec<LinkChannel>],
    cfo: &DMatrix<f64>,
    gains: &[f64],
) -> Result<Vec<DMatrix<Complex64>>> {
    let (m_count, k_count) = check_dims(cfg, bursts, channels, cfo, gains)?;
    let n = cfg.n_subcarriers;
    let l = cfg.n_taps;
    let scale = 1.0 / (n as f64).sqrt();
    let f = DMatrix::from_fn(n, n, |r, c| {
        Complex64::from_polar(scale, -2.0 * PI * (r * c) as f64 / n as f64)
    });
    let f_l = f.columns(0, l).into_owned();
    let f_h = f.adjoint();
    let sqrt_n = Complex64::new((n as f64).sqrt(), 0.0);
    let lb = bursts[0].n_symbols();
    let mut out = Vec::with_capacity(lb);
    for g in 0..lb {
        let mut y = DMatrix::from_element(m_count, n, ZERO);
        for k in 0..k_count {
            let h = DMatrix::from_fn(m_count, l, |m, t| channels[m][k].taps[t]);
            let x = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(bursts[k].symbols[g].clone()));
            let mut core = (&h * f_l.transpose()) * x * &f_h;
            let phi = DMatrix::from_fn(m_count, n, |m, i| {
                Complex64::from_polar(1.0, 2.0 * PI * i as f64 * cfo[(m, k)] / n as f64)
            });
            for m in 0..m_count {
                let e = eta(cfo[(m, k)], g, cfg) * gains[k];
                for i in 0..n {
                    core[(m, i)] *= e;
                }
            }
            y += core.component_mul(&phi) * sqrt_n;
        }
        out.push(y);
    }
    Ok(out)
}

fn check_dims(
    cfg: &SystemConfig,
    bursts: &[OfdmBurst],
    channels: &[Vec<LinkChannel>],
    cfo: &DMatrix<f64>,
    gains: &[f64],
) -> Result<(usize, usize)> {
    let m = channels.len();
    let k = bursts.len();
    if m == 0 || k == 0 {
        return Err(Error::Dimension("need at least one AAU and one UE".into()));
    }
    if channels.iter().any(|row| row.len() != k) {
        return Err(Error::Dimension(format!("every channel row must have {k} links")));
    }
    if channels.iter().flatten().any(|c| c.taps.len() != cfg.n_taps) {
        return Err(Error::Dimension(format!("every link needs {} taps", cfg.n_taps)));
    }
    if cfo.shape() != (m, k) {
        return Err(Error::Dimension(format!("cfo matrix is {:?}, expected ({m}, {k})", cfo.shape())));
    }
    if gains.len() != k {
        return Err(Error::Dimension(format!("{} gains for {k} UEs", gains.len())));
    }
    let lb = bursts[0].n_symbols();
    if bursts.iter().any(|b| {
        b.n_symbols() != lb || b.symbols.iter().any(|s| s.len() != cfg.n_subcarriers)
    }) {
        return Err(Error::Dimension("bursts disagree in shape".into()));
    }
    Ok((m, k))
}
