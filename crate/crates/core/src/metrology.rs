//! Quantum Fisher information of simulated probes with respect to the signal strength w.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::engine::{cptp_projector, AutoQecScheme};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigendecomposition, Operator};
use crate::lindblad::{default_dt, fmt_sig, integrate_with, Lindbladian, SimulationConfig, Trajectory};
use crate::noise::NoiseModel;
use crate::scalar::{creal, Real};

pub const SLD_CUTOFF: f64 = 1e-10;
pub const DEFAULT_SAMPLES: usize = 50;
pub const DEFAULT_HORIZON: f64 = 5.0;

/// 4t²(Tr[H²ρ₀] − Tr[Hρ₀]²)
pub fn ideal_qfi<T: Real>(h: &Operator<T>, rho0: &Operator<T>, t: T) -> T {
    let hr = h.matmul(rho0);
    let m1 = hr.trace().re;
    let m2 = h.matmul(&hr).trace().re;
    T::lit(4.0) * t * t * (m2 - m1 * m1)
}

/// F = 2 Σ_{λj+λk > 1e-10} |⟨j|dρ|k⟩|² / (λj + λk) in the eigenbasis of ρ.
pub fn qfi_sld<T: Real>(rho: &Operator<T>, drho: &Operator<T>) -> Result<T> {
    if rho.rows() != drho.rows() || !drho.is_square() {
        return Err(Error::DimensionMismatch {
            context: "QFI state vs derivative",
            expected: rho.rows(),
            found: drho.rows(),
        });
    }
    let eig = hermitian_eigendecomposition(&rho.hermitian_part())?;
    let d = rho.rows();
    let dh = drho.hermitian_part();
    // columns of dρ·V, then ⟨j|dρ|k⟩ = v_j† (dρ v_k)
    let dv: Vec<_> = eig.vectors.iter().map(|v| dh.apply(v)).collect();
    let cut = T::lit(SLD_CUTOFF);
    let mut f = T::zero();
    for j in 0..d {
        for k in j..d {
            let s = eig.values[j] + eig.values[k];
            if s <= cut {
                continue;
            }
            let m = eig.vectors[j].inner(&dv[k]).norm_sqr();
            let w = if j == k { T::one() } else { T::lit(2.0) };
            f = f + w * m / s;
        }
    }
    Ok(T::lit(2.0) * f)
}

/// The physical setup whose w-dependence is probed.
#[derive(Clone, Copy, Debug)]
pub struct Experiment<'a, T> {
    pub h: &'a Operator<T>,
    pub model: &'a NoiseModel<T>,
    pub scheme: Option<&'a AutoQecScheme<T>>,
    pub rho0: &'a Operator<T>,
}

impl<T: Real> Experiment<'_, T> {
    pub fn ideal(&self, t: T) -> T {
        ideal_qfi(self.h, self.rho0, t)
    }
}

#[derive(Clone, Debug)]
pub struct QfiOptions<T> {
    /// Number of sampling intervals on (0, T]; t = 0 is always included.
    pub samples: usize,
    /// Central-difference half step; `None` selects 1e-4·max(1, |w|).
    pub dw: Option<T>,
    /// Also evaluate F[P̃_E[ρ(t)]]; this adds a third run at w.
    pub projected: bool,
}

impl<T: Real> Default for QfiOptions<T> {
    fn default() -> Self {
        QfiOptions {
            samples: DEFAULT_SAMPLES,
            dw: None,
            projected: false,
        }
    }
}

pub fn default_dw<T: Real>(w: T) -> T {
    T::lit(1e-4) * T::one().max(w.abs())
}

#[derive(Clone, Debug, Serialize)]
pub struct CurveParams {
    pub w: f64,
    pub kappa: f64,
    #[serde(rename = "R")]
    pub r: Option<f64>,
    pub c: Option<usize>,
    pub dw: f64,
    pub dt: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct QfiCurve<T> {
    pub label: String,
    pub times: Vec<T>,
    /// Raw values; may dip to about −1e-9 from round-off.
    pub qfi: Vec<T>,
    pub params: CurveParams,
}

impl<T: Real> QfiCurve<T> {
    pub fn reported(&self) -> Vec<T> {
        self.qfi.iter().map(|&f| f.max(T::zero())).collect()
    }

    pub fn last(&self) -> Option<T> {
        self.qfi.last().copied()
    }
}

#[derive(Clone, Debug)]
pub struct QfiRun<T> {
    pub curve: QfiCurve<T>,
    pub projected: Option<QfiCurve<T>>,
    /// Run at w, present when the projected curve was requested.
    pub center: Option<Trajectory<T>>,
}

/// Uniform sample grid: step chosen so every sample time is hit exactly.
pub fn sample_plan<T: Real>(t_max: T, samples: usize, dt_max: T) -> (T, usize) {
    let samples = samples.max(1);
    let interval = t_max / T::lit(samples as f64);
    if interval <= T::zero() {
        return (dt_max, 1);
    }
    let per = ((interval / dt_max).as_f64() - 1e-9).ceil().max(1.0) as usize;
    (interval / T::lit(per as f64), per)
}

/// F(t) from central differences of runs at w ± dw sharing one grid.
pub fn qfi_curve<T: Real>(
    exp: &Experiment<'_, T>,
    cfg: &SimulationConfig<T>,
    opts: &QfiOptions<T>,
    label: &str,
) -> Result<QfiRun<T>> {
    cfg.validate()?;
    let dw = opts.dw.unwrap_or_else(|| default_dw(cfg.w));
    if !(dw > T::zero()) {
        return Err(Error::InvalidInput(format!("dw must be > 0, got {dw}")));
    }
    let shifted = |w: T| SimulationConfig { w, ..cfg.clone() };
    let worst = shifted(cfg.w.abs() + dw);
    let dt_max = cfg
        .dt
        .unwrap_or_else(|| default_dt(exp.h, exp.model, exp.scheme, &worst));
    let (dt, per) = sample_plan(cfg.t_max, opts.samples, dt_max);

    let run = |w: T| -> Result<Trajectory<T>> {
        let c = shifted(w);
        let gen = Lindbladian::new(exp.h, exp.model, exp.scheme, &c)?;
        integrate_with(&gen, exp.rho0, c.t_max, dt, per, c.enforce_hermiticity)
    };
    let ((plus, minus), center) = rayon::join(
        || rayon::join(|| run(cfg.w + dw), || run(cfg.w - dw)),
        || if opts.projected { Some(run(cfg.w)) } else { None },
    );
    let (plus, minus) = (plus?, minus?);
    let center = center.transpose()?;

    let inv = creal(T::one() / (T::lit(2.0) * dw));
    let half = creal(T::lit(0.5));
    let projector = match (opts.projected, exp.scheme) {
        (true, Some(s)) => Some(cptp_projector(s)),
        _ => None,
    };
    let mut qfi = Vec::with_capacity(plus.states.len());
    let mut qfi_proj = Vec::new();
    for (k, (rp, rm)) in plus.states.iter().zip(&minus.states).enumerate() {
        let drho = (rp - rm).scaled(inv);
        let rho = match &center {
            Some(c) => c.states[k].clone(),
            None => (rp + rm).scaled(half),
        };
        qfi.push(qfi_sld(&rho, &drho)?);
        if let Some(p) = &projector {
            qfi_proj.push(qfi_sld(&p.apply(&rho), &p.apply(&drho))?);
        }
    }
    let params = CurveParams {
        w: cfg.w.as_f64(),
        kappa: cfg.kappa.as_f64(),
        r: exp.scheme.map(|_| cfg.r.as_f64()),
        c: exp.scheme.map(|s| s.order()),
        dw: dw.as_f64(),
        dt: dt.as_f64(),
    };
    let curve = QfiCurve {
        label: label.to_string(),
        times: plus.times.clone(),
        qfi,
        params: params.clone(),
    };
    let projected = projector.map(|_| QfiCurve {
        label: format!("{label}-projected"),
        times: plus.times.clone(),
        qfi: qfi_proj,
        params,
    });
    Ok(QfiRun {
        curve,
        projected,
        center,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingReport {
    #[serde(rename = "R")]
    pub r_values: Vec<f64>,
    pub t: f64,
    pub f_ideal: f64,
    pub f: Vec<f64>,
    pub eps: Vec<f64>,
    /// eps(R) / eps(2R)
    #[serde(rename = "ratio")]
    pub ratios: Vec<f64>,
    /// log₂ of the geometric mean of the ratios; absent when flagged.
    pub fitted_c: Option<f64>,
    /// Some eps(R) is not resolvably positive.
    pub flagged: bool,
    /// |F_dt(T) − F_{dt/2}(T)| per R, when requested.
    pub integrator_error: Option<Vec<f64>>,
    /// Every eps exceeds 100× its integrator error estimate.
    pub resolvable: Option<bool>,
}

/// ε(R) = F_id(T) − F_R(T) over an R-doubling ladder.
pub fn scaling_experiment<T: Real>(
    exp: &Experiment<'_, T>,
    r_list: &[T],
    t: T,
    cfg: &SimulationConfig<T>,
    dw: Option<T>,
    estimate_integrator_error: bool,
) -> Result<ScalingReport> {
    if r_list.len() < 2 {
        return Err(Error::InvalidInput("scaling needs at least two R values".into()));
    }
    for w in r_list.windows(2) {
        let ratio = (w[1] / w[0]).as_f64();
        if !(w[0] > T::zero()) || (ratio - 2.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "R values must double: {} -> {}",
                w[0], w[1]
            )));
        }
    }
    if exp.scheme.is_none() {
        return Err(Error::InvalidInput("scaling needs an engineered scheme".into()));
    }
    let f_ideal = exp.ideal(t).as_f64();
    let opts = QfiOptions {
        samples: 1,
        dw,
        projected: false,
    };
    let results: Vec<Result<(f64, Option<f64>)>> = r_list
        .par_iter()
        .map(|&r| {
            let base = SimulationConfig {
                r,
                t_max: t,
                ..cfg.clone()
            };
            let coarse = qfi_curve(exp, &base, &opts, "scaling")?;
            let f = coarse.curve.last().unwrap_or_else(T::zero).as_f64();
            let err = if estimate_integrator_error {
                let fine_cfg = SimulationConfig {
                    dt: Some(T::lit(coarse.curve.params.dt * 0.5)),
                    ..base
                };
                let fine = qfi_curve(exp, &fine_cfg, &opts, "scaling")?;
                Some((fine.curve.last().unwrap_or_else(T::zero).as_f64() - f).abs())
            } else {
                None
            };
            Ok((f, err))
        })
        .collect();
    let mut f = Vec::new();
    let mut errs = Vec::new();
    for r in results {
        let (fi, e) = r?;
        f.push(fi);
        errs.push(e);
    }
    let eps: Vec<f64> = f.iter().map(|fi| f_ideal - fi).collect();
    let floor = 1e-9 * f_ideal.max(1.0);
    let flagged = eps.iter().any(|&e| e <= floor);
    let ratios: Vec<f64> = eps.windows(2).map(|w| w[0] / w[1]).collect();
    let fitted_c = if flagged {
        None
    } else {
        let mean_log = ratios.iter().map(|r| r.log2()).sum::<f64>() / ratios.len() as f64;
        Some(mean_log)
    };
    let integrator_error: Option<Vec<f64>> = errs.into_iter().collect();
    let resolvable = integrator_error
        .as_ref()
        .map(|ie| eps.iter().zip(ie).all(|(e, i)| *e > 100.0 * i));
    Ok(ScalingReport {
        r_values: r_list.iter().map(|r| r.as_f64()).collect(),
        t: t.as_f64(),
        f_ideal,
        f,
        eps,
        ratios,
        fitted_c,
        flagged,
        integrator_error,
        resolvable,
    })
}

/// Per sample: F[P̃ρ] ≤ F[ρ] ≤ F_id, each with slack 1e-4·F_id + 1e-8.
pub fn data_processing_check<T: Real>(raw: &[T], projected: &[T], ideal: &[T]) -> Vec<bool> {
    raw.iter()
        .zip(projected)
        .zip(ideal)
        .map(|((&f, &fp), &fid)| {
            let slack = T::lit(1e-4) * fid.abs() + T::lit(1e-8);
            fp <= f + slack && f <= fid + slack
        })
        .collect()
}

/// Right inequality only, for curves without a projected counterpart.
pub fn ideal_bound_check<T: Real>(raw: &[T], ideal: &[T]) -> Vec<bool> {
    raw.iter()
        .zip(ideal)
        .map(|(&f, &fid)| f <= fid + T::lit(1e-4) * fid.abs() + T::lit(1e-8))
        .collect()
}

/// Columns of a curves CSV; absent optional columns are written empty.
#[derive(Clone, Debug, Default)]
pub struct CurveTable<'a, T> {
    pub times: &'a [T],
    pub qfi: &'a [T],
    pub qfi_projected: Option<&'a [T]>,
    pub qfi_ideal: Option<&'a [T]>,
    pub qfi_noqec: Option<&'a [T]>,
}

pub const CURVE_HEADER: &str = "t,qfi,qfi_projected,qfi_ideal,qfi_noqec";

impl<T: Real> CurveTable<'_, T> {
    fn cell(col: Option<&[T]>, k: usize) -> String {
        col.and_then(|c| c.get(k))
            .map(|v| fmt_sig(v.max(T::zero()).as_f64()))
            .unwrap_or_default()
    }

    pub fn rows(&self, label: Option<&str>) -> String {
        let mut s = String::new();
        for (k, t) in self.times.iter().enumerate() {
            if let Some(l) = label {
                let _ = write!(s, "{l},");
            }
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                fmt_sig(t.as_f64()),
                Self::cell(Some(self.qfi), k),
                Self::cell(self.qfi_projected, k),
                Self::cell(self.qfi_ideal, k),
                Self::cell(self.qfi_noqec, k),
            );
        }
        s
    }

    pub fn to_csv(&self) -> String {
        format!("{CURVE_HEADER}\n{}", self.rows(None))
    }
}

/// Density operator of a pure state.
pub fn pure_state<T: Real>(psi: &crate::linalg::Ket<T>) -> Operator<T> {
    Operator::outer(psi, psi)
}
