//! Linear UL equalizers, reciprocity-calibrated DL precoders and the
//! UL/DL transmit-receive relations.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{add_awgn, ChannelError, HardwareResponse};
use crate::numerics::{gram, solve_hermitian, ComplexMatrix, NumericsError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BeamformingError {
    #[error("singular channel Gram matrix: {0}")]
    SingularMatrix(NumericsError),
    #[error("dimension mismatch in {op}: {detail}")]
    DimensionMismatch { op: &'static str, detail: String },
    #[error("hardware response entry {index} is zero")]
    ZeroHardwareEntry { index: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl From<NumericsError> for BeamformingError {
    fn from(e: NumericsError) -> Self {
        match e {
            NumericsError::SingularMatrix { .. } => BeamformingError::SingularMatrix(e),
            other => BeamformingError::DimensionMismatch {
                op: "numerics",
                detail: other.to_string(),
            },
        }
    }
}

impl From<ChannelError> for BeamformingError {
    fn from(e: ChannelError) -> Self {
        match e {
            ChannelError::ZeroHardwareEntry { index } => {
                BeamformingError::ZeroHardwareEntry { index }
            }
            other => BeamformingError::InvalidArgument(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FilterKind {
    /// Matched filter: MRC on the uplink, MRT on the downlink.
    Mrc,
    Zf,
    Rzf {
        alpha: f64,
    },
}

/// Average UL power of each UE, linear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    per_ue_power: Vec<f64>,
}

impl PowerAllocation {
    pub fn new(per_ue_power: Vec<f64>) -> Result<Self, BeamformingError> {
        if let Some(p) = per_ue_power
            .iter()
            .find(|p| !(**p >= 0.0) || !p.is_finite())
        {
            return Err(BeamformingError::InvalidArgument(format!(
                "UE power must be finite and >= 0, got {p}"
            )));
        }
        Ok(Self { per_ue_power })
    }

    pub fn uniform(k: usize, power: f64) -> Self {
        Self {
            per_ue_power: vec![power; k],
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.per_ue_power
    }

    pub fn len(&self) -> usize {
        self.per_ue_power.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_ue_power.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.per_ue_power.iter().sum::<f64>() / self.per_ue_power.len().max(1) as f64
    }
}

/// Diagonal reciprocity calibration applied at the BS before precoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationMatrix {
    pub diag: Vec<Complex64>,
}

impl CalibrationMatrix {
    pub fn identity(m: usize) -> Self {
        Self {
            diag: vec![Complex64::new(1.0, 0.0); m],
        }
    }
}

fn check_filter(kind: FilterKind) -> Result<(), BeamformingError> {
    if let FilterKind::Rzf { alpha } = kind {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(BeamformingError::InvalidArgument(format!(
                "RZF alpha must be finite and >= 0, got {alpha}"
            )));
        }
    }
    Ok(())
}

/// K x M UL equalizer `F_eq` for an M x K channel.
pub fn equalizer(
    h_ul: &ComplexMatrix,
    kind: FilterKind,
) -> Result<ComplexMatrix, BeamformingError> {
    check_filter(kind)?;
    let hh = h_ul.conj_transpose();
    match kind {
        FilterKind::Mrc => Ok(hh),
        FilterKind::Zf => {
            if h_ul.rows() < h_ul.cols() {
                return Err(BeamformingError::SingularMatrix(
                    NumericsError::SingularMatrix { ratio: 0.0 },
                ));
            }
            Ok(solve_hermitian(&gram(h_ul), &hh)?)
        }
        FilterKind::Rzf { alpha } => Ok(solve_hermitian(&gram(h_ul).add_diagonal(alpha), &hh)?),
    }
}

/// Calibration that undoes the BS Tx/Rx mismatch, `C = R_bs T_bs^{-1}`.
///
/// With this choice `H_dl F_pr` is diagonal for a ZF precoder built from
/// the UL channel.
pub fn calibration(bs_hw: &HardwareResponse) -> Result<CalibrationMatrix, BeamformingError> {
    if bs_hw.tx.len() != bs_hw.rx.len() {
        return Err(BeamformingError::DimensionMismatch {
            op: "calibration",
            detail: format!("tx {} vs rx {}", bs_hw.tx.len(), bs_hw.rx.len()),
        });
    }
    let zero = Complex64::new(0.0, 0.0);
    let diag = bs_hw
        .tx
        .iter()
        .zip(&bs_hw.rx)
        .enumerate()
        .map(|(i, (&t, &r))| {
            if t == zero || r == zero {
                Err(BeamformingError::ZeroHardwareEntry { index: i })
            } else {
                Ok(r / t)
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CalibrationMatrix { diag })
}

/// M x K DL precoder with total power `M` (unit power per chain).
pub fn precoder(
    h_ul: &ComplexMatrix,
    cal: &CalibrationMatrix,
    kind: FilterKind,
) -> Result<ComplexMatrix, BeamformingError> {
    precoder_with_power(h_ul, cal, kind, 1.0)
}

/// As [`precoder`], normalized so that `||F_pr||_F^2 = M * chain_power`.
pub fn precoder_with_power(
    h_ul: &ComplexMatrix,
    cal: &CalibrationMatrix,
    kind: FilterKind,
    chain_power: f64,
) -> Result<ComplexMatrix, BeamformingError> {
    if cal.diag.len() != h_ul.rows() {
        return Err(BeamformingError::DimensionMismatch {
            op: "precoder",
            detail: format!(
                "calibration has {} entries, channel has {} rows",
                cal.diag.len(),
                h_ul.rows()
            ),
        });
    }
    // H* (G)^{-T} = ((G)^{-1} H^H)^T with G = H^H H (+ alpha I)
    let raw = equalizer(h_ul, kind)?.transpose().scale_rows(&cal.diag)?;
    let norm = raw.frobenius_norm();
    if !(norm > 0.0) {
        return Err(BeamformingError::InvalidArgument(
            "precoder has zero norm".into(),
        ));
    }
    let target = (h_ul.rows() as f64 * chain_power).sqrt();
    Ok(raw.scale_real(target / norm))
}

/// MMSE-style default regularization `K sigma^2 / P_avg`.
pub fn default_rzf_alpha(k: usize, noise_variance: f64, power: &PowerAllocation) -> f64 {
    let p = power.mean();
    if p > 0.0 {
        k as f64 * noise_variance / p
    } else {
        0.0
    }
}

/// Regularizer substituted when ZF hits a rank-deficient channel.
pub fn zf_fallback_alpha(h_ul: &ComplexMatrix) -> f64 {
    let k = h_ul.cols().max(1) as f64;
    (1e-6 * h_ul.frobenius_norm_sqr() / k).max(f64::MIN_POSITIVE)
}

fn vector_len(v: &ComplexMatrix, op: &'static str) -> Result<usize, BeamformingError> {
    if v.cols() != 1 {
        return Err(BeamformingError::DimensionMismatch {
            op,
            detail: format!("expected a column vector, got {}x{}", v.rows(), v.cols()),
        });
    }
    Ok(v.rows())
}

/// `y = H_ul sqrt(P) s + z`.
pub fn ul_receive<R: Rng + ?Sized>(
    h_ul: &ComplexMatrix,
    power: &PowerAllocation,
    s: &ComplexMatrix,
    noise_variance: f64,
    rng: &mut R,
) -> Result<ComplexMatrix, BeamformingError> {
    let k = vector_len(s, "ul_receive")?;
    if k != h_ul.cols() || power.len() != k {
        return Err(BeamformingError::DimensionMismatch {
            op: "ul_receive",
            detail: format!(
                "channel {}x{}, {} powers, {} symbols",
                h_ul.rows(),
                h_ul.cols(),
                power.len(),
                k
            ),
        });
    }
    let scaled: Vec<Complex64> = s
        .as_slice()
        .iter()
        .zip(power.as_slice())
        .map(|(&x, &p)| x * p.sqrt())
        .collect();
    let y = h_ul.matmul(&ComplexMatrix::column_vector(&scaled))?;
    Ok(add_awgn(&y, noise_variance, rng)?)
}

/// `s_hat = F_eq y`.
pub fn detect(f_eq: &ComplexMatrix, y: &ComplexMatrix) -> Result<ComplexMatrix, BeamformingError> {
    let m = vector_len(y, "detect")?;
    if f_eq.cols() != m {
        return Err(BeamformingError::DimensionMismatch {
            op: "detect",
            detail: format!(
                "equalizer {}x{}, received vector of {}",
                f_eq.rows(),
                f_eq.cols(),
                m
            ),
        });
    }
    Ok(f_eq.matmul(y)?)
}

/// `y_ue = H_dl F_pr s + z`.
pub fn dl_receive<R: Rng + ?Sized>(
    h_dl: &ComplexMatrix,
    f_pr: &ComplexMatrix,
    s: &ComplexMatrix,
    noise_variance: f64,
    rng: &mut R,
) -> Result<ComplexMatrix, BeamformingError> {
    let k = vector_len(s, "dl_receive")?;
    if h_dl.cols() != f_pr.rows() || f_pr.cols() != k {
        return Err(BeamformingError::DimensionMismatch {
            op: "dl_receive",
            detail: format!(
                "channel {}x{}, precoder {}x{}, {} symbols",
                h_dl.rows(),
                h_dl.cols(),
                f_pr.rows(),
                f_pr.cols(),
                k
            ),
        });
    }
    let y = h_dl.matmul(f_pr)?.matmul(s)?;
    Ok(add_awgn(&y, noise_variance, rng)?)
}

/// Post-equalization SINR of every UE, linear.
///
/// `SINR_k = p_k |f_k h_k|^2 / (sum_{j != k} p_j |f_k h_j|^2 + ||f_k||^2 sigma^2)`.
/// A zero denominator yields `+inf` (noiseless, interference-free).
pub fn post_eq_sinr(
    h_ul: &ComplexMatrix,
    f_eq: &ComplexMatrix,
    power: &PowerAllocation,
    noise_variance: f64,
) -> Result<Vec<f64>, BeamformingError> {
    let (m, k) = h_ul.shape();
    if f_eq.shape() != (k, m) || power.len() != k {
        return Err(BeamformingError::DimensionMismatch {
            op: "post_eq_sinr",
            detail: format!(
                "channel {}x{}, equalizer {}x{}, {} powers",
                m,
                k,
                f_eq.rows(),
                f_eq.cols(),
                power.len()
            ),
        });
    }
    if !(noise_variance >= 0.0) {
        return Err(BeamformingError::InvalidArgument(format!(
            "noise variance must be >= 0, got {noise_variance}"
        )));
    }
    let p = power.as_slice();
    let fh = f_eq.matmul(h_ul)?;
    let sinr = (0..k)
        .map(|row| {
            let f_norm: f64 = f_eq.row(row).iter().map(Complex64::norm_sqr).sum();
            let signal = p[row] * fh[(row, row)].norm_sqr();
            let interference: f64 = (0..k)
                .filter(|&j| j != row)
                .map(|j| p[j] * fh[(row, j)].norm_sqr())
                .sum();
            let denom = interference + f_norm * noise_variance;
            if denom > 0.0 {
                signal / denom
            } else if signal > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .collect();
    Ok(sinr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{complex_gaussian, compose_dl, compose_ul, stream_rng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_channel(seed: u64, m: usize, k: usize) -> ComplexMatrix {
        let mut rng = stream_rng(seed, 0);
        ComplexMatrix::from_fn(m, k, |_, _| complex_gaussian(&mut rng, 1.0))
    }

    fn off_diagonal_max(a: &ComplexMatrix) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..a.rows() {
            for j in 0..a.cols() {
                if i != j {
                    worst = worst.max(a[(i, j)].norm());
                }
            }
        }
        worst
    }

    fn off_diagonal_ratio(a: &ComplexMatrix) -> f64 {
        let mut off = 0.0;
        let mut on = 0.0;
        for i in 0..a.rows() {
            for j in 0..a.cols() {
                if i == j {
                    on += a[(i, j)].norm_sqr();
                } else {
                    off += a[(i, j)].norm_sqr();
                }
            }
        }
        off / on
    }

    #[test]
    fn equalizer_trivial_cases() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(equalizer(&i2, FilterKind::Mrc).unwrap(), i2);
        let zf = equalizer(&i2.scale_real(2.0), FilterKind::Zf).unwrap();
        assert!(zf.sub(&i2.scale_real(0.5)).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn zf_is_left_inverse() {
        let h = random_channel(1, 16, 2);
        let f = equalizer(&h, FilterKind::Zf).unwrap();
        let fh = f.matmul(&h).unwrap();
        assert!(off_diagonal_max(&fh) < 1e-10);
        assert!(fh.sub(&ComplexMatrix::identity(2)).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn rzf_limits() {
        let h = random_channel(2, 16, 2);
        let zf = equalizer(&h, FilterKind::Zf).unwrap();
        let rzf = equalizer(&h, FilterKind::Rzf { alpha: 1e-12 }).unwrap();
        assert!(rzf.sub(&zf).unwrap().max_abs() < 1e-6);

        let alpha = 1e12;
        let big = equalizer(&h, FilterKind::Rzf { alpha })
            .unwrap()
            .scale_real(alpha);
        let hh = h.conj_transpose();
        assert!(big.sub(&hh).unwrap().max_abs() < 1e-6 * hh.max_abs());
    }

    #[test]
    fn zf_rank_deficient_is_singular() {
        let col = [c(1.0, 0.0), c(0.0, 1.0), c(1.0, 1.0)];
        let h = ComplexMatrix::from_fn(3, 2, |r, _| col[r]);
        assert!(matches!(
            equalizer(&h, FilterKind::Zf),
            Err(BeamformingError::SingularMatrix(_))
        ));
        // more UEs than chains
        let wide = random_channel(3, 2, 3);
        assert!(matches!(
            equalizer(&wide, FilterKind::Zf),
            Err(BeamformingError::SingularMatrix(_))
        ));
        // regularized version still solves
        let alpha = zf_fallback_alpha(&h);
        assert!(equalizer(&h, FilterKind::Rzf { alpha }).is_ok());
    }

    #[test]
    fn rzf_rejects_negative_alpha() {
        let h = random_channel(4, 4, 2);
        assert!(matches!(
            equalizer(&h, FilterKind::Rzf { alpha: -1.0 }),
            Err(BeamformingError::InvalidArgument(_))
        ));
    }

    #[test]
    fn calibration_identity_and_zero_entry() {
        let cal = calibration(&HardwareResponse::identity(4)).unwrap();
        assert_eq!(cal, CalibrationMatrix::identity(4));
        let hw = HardwareResponse {
            tx: vec![c(1.0, 0.0), c(0.0, 0.0)],
            rx: vec![c(1.0, 0.0), c(1.0, 0.0)],
        };
        assert_eq!(
            calibration(&hw),
            Err(BeamformingError::ZeroHardwareEntry { index: 1 })
        );
    }

    #[test]
    fn calibration_diagonalizes_scaled_tx() {
        // T_bs = 2I, R_bs = I
        let m = 16;
        let h_p = random_channel(5, m, 2);
        let bs = HardwareResponse {
            tx: vec![c(2.0, 0.0); m],
            rx: vec![c(1.0, 0.0); m],
        };
        let ue = HardwareResponse::identity(2);
        let cal = calibration(&bs).unwrap();
        assert!(cal.diag.iter().all(|d| (*d - c(0.5, 0.0)).norm() < 1e-15));
        let h_ul = compose_ul(&h_p, &bs, &ue).unwrap();
        let h_dl = compose_dl(&h_p, &ue, &bs).unwrap();
        let eff = h_dl
            .matmul(&precoder(&h_ul, &cal, FilterKind::Zf).unwrap())
            .unwrap();
        assert!(off_diagonal_ratio(&eff) < 1e-10);
    }

    #[test]
    fn calibration_random_hardware() {
        let m = 16;
        let mut rng = stream_rng(6, 1);
        let h_p = random_channel(6, m, 3);
        let bs = HardwareResponse::random(m, 2.0, &mut rng);
        let ue = HardwareResponse::random(3, 2.0, &mut rng);
        let h_ul = compose_ul(&h_p, &bs, &ue).unwrap();
        let h_dl = compose_dl(&h_p, &ue, &bs).unwrap();
        let calibrated = precoder(&h_ul, &calibration(&bs).unwrap(), FilterKind::Zf).unwrap();
        assert!(off_diagonal_ratio(&h_dl.matmul(&calibrated).unwrap()) < 1e-10);
        // without calibration the leakage is substantial
        let raw = precoder(&h_ul, &CalibrationMatrix::identity(m), FilterKind::Zf).unwrap();
        assert!(off_diagonal_ratio(&h_dl.matmul(&raw).unwrap()) > 1e-4);
    }

    #[test]
    fn precoder_trivial_cases() {
        let i2 = ComplexMatrix::identity(2);
        let cal = CalibrationMatrix::identity(2);
        let zf = precoder(&i2, &cal, FilterKind::Zf).unwrap();
        assert!(zf.sub(&i2).unwrap().max_abs() < 1e-15);
        let mrt = precoder(&i2, &cal, FilterKind::Mrc).unwrap();
        assert!(mrt.sub(&i2).unwrap().max_abs() < 1e-15);

        let h = random_channel(7, 16, 2);
        let f =
            precoder_with_power(&h, &CalibrationMatrix::identity(16), FilterKind::Zf, 2.0).unwrap();
        assert!((f.frobenius_norm_sqr() - 32.0).abs() < 1e-9);
        let eff = h.transpose().matmul(&f).unwrap();
        assert!(off_diagonal_max(&eff) < 1e-10);

        let bad = CalibrationMatrix::identity(3);
        assert!(matches!(
            precoder(&h, &bad, FilterKind::Zf),
            Err(BeamformingError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn mrt_with_identity_channel_is_calibration() {
        let cal = CalibrationMatrix {
            diag: vec![c(0.6, 0.8), c(1.0, 0.0)],
        };
        let f = precoder(&ComplexMatrix::identity(2), &cal, FilterKind::Mrc).unwrap();
        let expect = ComplexMatrix::from_diagonal(&cal.diag);
        // both have Frobenius norm^2 = 2 = M
        assert!(f.sub(&expect).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn ul_receive_cases() {
        let mut rng = stream_rng(0, 0);
        let s = ComplexMatrix::column_vector(&[c(1.0, 0.0), c(0.0, 1.0)]);
        let y = ul_receive(
            &ComplexMatrix::identity(2),
            &PowerAllocation::uniform(2, 1.0),
            &s,
            0.0,
            &mut rng,
        )
        .unwrap();
        assert_eq!(y, s);
        let p = PowerAllocation::new(vec![4.0, 1.0]).unwrap();
        let y = ul_receive(&ComplexMatrix::identity(2), &p, &s, 0.0, &mut rng).unwrap();
        assert_eq!(y.as_slice(), &[c(2.0, 0.0), c(0.0, 1.0)]);

        // seeded case against explicit arithmetic
        let h = random_channel(8, 4, 2);
        let p = PowerAllocation::new(vec![0.5, 2.0]).unwrap();
        let y = ul_receive(&h, &p, &s, 0.3, &mut stream_rng(8, 9)).unwrap();
        let mut noise_rng = stream_rng(8, 9);
        for m in 0..4 {
            let expect = h[(m, 0)] * 0.5f64.sqrt() * s[(0, 0)]
                + h[(m, 1)] * 2f64.sqrt() * s[(1, 0)]
                + complex_gaussian(&mut noise_rng, 0.3);
            assert!((y[(m, 0)] - expect).norm() < 1e-14);
        }

        let short = ComplexMatrix::column_vector(&[c(1.0, 0.0)]);
        assert!(ul_receive(&h, &p, &short, 0.0, &mut rng).is_err());
    }

    #[test]
    fn detect_cases() {
        let h = random_channel(9, 16, 2);
        let s = ComplexMatrix::column_vector(&[c(1.0, -1.0), c(-0.5, 0.25)]);
        let y = ul_receive(
            &h,
            &PowerAllocation::uniform(2, 1.0),
            &s,
            0.0,
            &mut stream_rng(0, 0),
        )
        .unwrap();
        let s_hat = detect(&equalizer(&h, FilterKind::Zf).unwrap(), &y).unwrap();
        assert!(s_hat.sub(&s).unwrap().max_abs() < 1e-10);

        // MRC with orthogonal columns: s_hat_k = ||h_k||^2 s_k
        let h = ComplexMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 2.0)],
            vec![c(1.0, 0.0), c(0.0, 0.0)],
        ]);
        let y = ul_receive(
            &h,
            &PowerAllocation::uniform(2, 1.0),
            &s,
            0.0,
            &mut stream_rng(0, 0),
        )
        .unwrap();
        let s_hat = detect(&equalizer(&h, FilterKind::Mrc).unwrap(), &y).unwrap();
        let g = gram(&h);
        for k in 0..2 {
            assert!((s_hat[(k, 0)] - s[(k, 0)] * g[(k, k)]).norm() < 1e-14);
        }

        let zero = ComplexMatrix::zeros(2, 3);
        assert_eq!(detect(&zero, &y).unwrap(), ComplexMatrix::zeros(2, 1));
        assert!(detect(&zero, &s).is_err());
    }

    #[test]
    fn dl_receive_cases() {
        let mut rng = stream_rng(1, 1);
        let s = ComplexMatrix::column_vector(&[c(1.0, 0.0), c(0.0, 1.0)]);
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(dl_receive(&i2, &i2, &s, 0.0, &mut rng).unwrap(), s);

        let h = random_channel(10, 16, 2);
        let f = precoder(&h, &CalibrationMatrix::identity(16), FilterKind::Zf).unwrap();
        let h_dl = h.transpose();
        let y = dl_receive(&h_dl, &f, &s, 0.0, &mut rng).unwrap();
        let d = h_dl.matmul(&f).unwrap();
        for k in 0..2 {
            assert!(d[(k, k)].im.abs() < 1e-10 && d[(k, k)].re > 0.0);
            assert!((y[(k, 0)] - d[(k, k)] * s[(k, 0)]).norm() < 1e-10);
        }

        let zeros = ComplexMatrix::zeros(2, 1);
        let y = dl_receive(&h_dl, &f, &zeros, 1.0, &mut stream_rng(4, 4)).unwrap();
        let noise = add_awgn(&zeros, 1.0, &mut stream_rng(4, 4)).unwrap();
        assert_eq!(y, noise);
    }

    #[test]
    fn sinr_cases() {
        let i2 = ComplexMatrix::identity(2);
        let p = PowerAllocation::uniform(2, 1.0);
        let sinr = post_eq_sinr(&i2, &equalizer(&i2, FilterKind::Mrc).unwrap(), &p, 1.0).unwrap();
        assert_eq!(sinr, vec![1.0, 1.0]);

        let h = random_channel(11, 16, 3);
        let f = equalizer(&h, FilterKind::Zf).unwrap();
        let p = PowerAllocation::new(vec![1.0, 2.0, 0.5]).unwrap();
        let sinr = post_eq_sinr(&h, &f, &p, 0.1).unwrap();
        for (k, s) in sinr.iter().enumerate() {
            let f_norm: f64 = f.row(k).iter().map(Complex64::norm_sqr).sum();
            let closed = p.as_slice()[k] / (f_norm * 0.1);
            assert!((s - closed).abs() <= 1e-9 * closed);
        }

        let scaled = PowerAllocation::new(vec![10.0, 20.0, 5.0]).unwrap();
        let sinr10 = post_eq_sinr(&h, &f, &scaled, 1.0).unwrap();
        let mrc = equalizer(&h, FilterKind::Mrc).unwrap();
        let a = post_eq_sinr(&h, &mrc, &p, 0.1).unwrap();
        let b = post_eq_sinr(&h, &mrc, &scaled, 1.0).unwrap();
        for k in 0..3 {
            assert!((sinr10[k] - sinr[k]).abs() <= 1e-9 * sinr[k]);
            assert!((a[k] - b[k]).abs() <= 1e-12 * a[k]);
        }
        assert!(post_eq_sinr(&h, &f, &PowerAllocation::uniform(2, 1.0), 1.0).is_err());
    }

    #[test]
    fn default_alpha_formula() {
        let p = PowerAllocation::new(vec![1.0, 3.0]).unwrap();
        assert_eq!(default_rzf_alpha(2, 0.5, &p), 0.5);
        assert!(PowerAllocation::new(vec![-1.0]).is_err());
    }
}
