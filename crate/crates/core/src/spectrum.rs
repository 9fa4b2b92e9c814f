//! Spectra, input vectors, exponential families and control problems.
//!
//! All infinite sequences are held at a fixed truncation. A spectrum built from
//! a preset remembers the preset so that modes beyond the stored truncation can
//! still be evaluated (the simulator uses this for its tail estimate).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{cplx, cplx_vec};
use crate::C64;

/// Relative tolerance used when matching eigenvalues against their conjugates.
const CONJUGATE_MATCH_TOL: f64 = 1e-12;

/// Deviation `d(k) = μ_k - λ_k` applied by the perturbed strip preset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviationRule {
    /// `d(k) = scale / k`
    Harmonic {
        #[serde(with = "cplx")]
        scale: C64,
    },
    /// `d(k) = scale / k^power`, `power ≥ 1`
    Power {
        #[serde(with = "cplx")]
        scale: C64,
        power: f64,
    },
}

impl Default for DeviationRule {
    fn default() -> Self {
        DeviationRule::Harmonic {
            scale: C64::new(1.0, 0.0),
        }
    }
}

impl DeviationRule {
    pub fn zero() -> Self {
        DeviationRule::Harmonic {
            scale: C64::new(0.0, 0.0),
        }
    }

    /// Deviation of mode `k` (1-based).
    pub fn at(&self, k: usize) -> C64 {
        let k = k as f64;
        match *self {
            DeviationRule::Harmonic { scale } => scale / k,
            DeviationRule::Power { scale, power } => scale / k.powf(power),
        }
    }

    /// `C` and `p` with `|d(k)| ≤ C / k^p`.
    pub fn envelope(&self) -> (f64, f64) {
        match *self {
            DeviationRule::Harmonic { scale } => (scale.norm(), 1.0),
            DeviationRule::Power { scale, power } => (scale.norm(), power),
        }
    }

    fn validate(&self) -> Result<()> {
        if let DeviationRule::Power { power, .. } = *self {
            if !(power >= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "deviation power must be at least 1, got {power}"
                )));
            }
        }
        Ok(())
    }
}

/// Built-in spectrum families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumPreset {
    /// `λ_j = -j²π²`: the Dirichlet heat equation on `[0, 1]`.
    Heat { n: usize },
    /// `λ_k = i k`.
    ImaginaryLadder { n: usize },
    /// `μ_k = i k + d(k)`.
    StripPerturbed {
        n: usize,
        #[serde(default)]
        deviation: DeviationRule,
    },
}

/// How `|e^{λ_j t}|` behaves as `j → ∞` for a preset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrowthClass {
    /// `Re λ_j → -∞`
    Dissipative,
    /// `Re λ_j` stays in a bounded strip.
    Strip,
}

impl SpectrumPreset {
    pub fn len(&self) -> usize {
        match *self {
            SpectrumPreset::Heat { n }
            | SpectrumPreset::ImaginaryLadder { n }
            | SpectrumPreset::StripPerturbed { n, .. } => n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Eigenvalue `k` (1-based) of the infinite sequence.
    pub fn eigenvalue(&self, k: usize) -> C64 {
        let kf = k as f64;
        match self {
            SpectrumPreset::Heat { .. } => C64::new(-(kf * PI).powi(2), 0.0),
            SpectrumPreset::ImaginaryLadder { .. } => C64::new(0.0, kf),
            SpectrumPreset::StripPerturbed { deviation, .. } => C64::new(0.0, kf) + deviation.at(k),
        }
    }

    pub fn growth(&self) -> GrowthClass {
        match self {
            SpectrumPreset::Heat { .. } => GrowthClass::Dissipative,
            _ => GrowthClass::Strip,
        }
    }

    /// The preset's eigenvectors form a Riesz basis, so `T = 0` is admissible.
    pub fn riesz_like(&self) -> bool {
        true
    }

    pub fn with_len(&self, n: usize) -> Self {
        match self {
            SpectrumPreset::Heat { .. } => SpectrumPreset::Heat { n },
            SpectrumPreset::ImaginaryLadder { .. } => SpectrumPreset::ImaginaryLadder { n },
            SpectrumPreset::StripPerturbed { deviation, .. } => SpectrumPreset::StripPerturbed {
                n,
                deviation: deviation.clone(),
            },
        }
    }
}

/// Spectrum descriptor as it appears in problem documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumDescriptor {
    Preset(SpectrumPreset),
    Explicit(#[serde(with = "cplx_vec")] Vec<C64>),
}

/// Ordered eigenvalues with validity metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    eigenvalues: Vec<C64>,
    re_lower_bound: Option<f64>,
    conjugate_closed: bool,
    preset: Option<SpectrumPreset>,
}

impl Spectrum {
    /// Wraps a list as-is, computing the metadata but enforcing no invariant.
    pub fn from_raw(eigenvalues: Vec<C64>) -> Self {
        let re_lower_bound = eigenvalues.iter().map(|l| l.re).reduce(f64::min);
        let conjugate_closed = is_conjugate_closed(&eigenvalues);
        Self {
            eigenvalues,
            re_lower_bound,
            conjugate_closed,
            preset: None,
        }
    }

    pub fn eigenvalues(&self) -> &[C64] {
        &self.eigenvalues
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn re_lower_bound(&self) -> Option<f64> {
        self.re_lower_bound
    }

    pub fn conjugate_closed(&self) -> bool {
        self.conjugate_closed
    }

    pub fn preset(&self) -> Option<&SpectrumPreset> {
        self.preset.as_ref()
    }

    /// Drops the preset, leaving a purely finite spectrum.
    pub fn into_finite(mut self) -> Self {
        self.preset = None;
        self
    }

    pub fn descriptor(&self) -> SpectrumDescriptor {
        match &self.preset {
            Some(p) => SpectrumDescriptor::Preset(p.clone()),
            None => SpectrumDescriptor::Explicit(self.eigenvalues.clone()),
        }
    }

    /// Eigenvalue `j` (1-based); beyond the stored truncation only available
    /// for preset spectra.
    pub fn extended_eigenvalue(&self, j: usize) -> Option<C64> {
        if j >= 1 && j <= self.eigenvalues.len() {
            Some(self.eigenvalues[j - 1])
        } else {
            self.preset.as_ref().map(|p| p.eigenvalue(j))
        }
    }
}

/// Builds a validated spectrum. Explicit lists are sorted by modulus (stable).
pub fn build_spectrum(descriptor: &SpectrumDescriptor) -> Result<Spectrum> {
    match descriptor {
        SpectrumDescriptor::Preset(preset) => {
            if preset.is_empty() {
                return Err(Error::ZeroOrder);
            }
            if let SpectrumPreset::StripPerturbed { deviation, .. } = preset {
                deviation.validate()?;
            }
            let eigs: Vec<C64> = (1..=preset.len()).map(|k| preset.eigenvalue(k)).collect();
            check_distinct(&eigs)?;
            if let Some(k) = eigs.windows(2).position(|w| w[0].norm() > w[1].norm()) {
                return Err(Error::InvalidParameter(format!(
                    "deviation rule breaks the modulus ordering between modes {} and {}",
                    k + 1,
                    k + 2
                )));
            }
            let mut s = Spectrum::from_raw(eigs);
            s.preset = Some(preset.clone());
            Ok(s)
        }
        SpectrumDescriptor::Explicit(list) => {
            check_distinct(list)?;
            let mut eigs = list.clone();
            eigs.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
            Ok(Spectrum::from_raw(eigs))
        }
    }
}

fn check_distinct(eigs: &[C64]) -> Result<()> {
    for i in 0..eigs.len() {
        for j in i + 1..eigs.len() {
            if eigs[i] == eigs[j] {
                return Err(Error::DuplicateEigenvalue {
                    first: i + 1,
                    second: j + 1,
                    value: eigs[i],
                });
            }
        }
    }
    Ok(())
}

fn conjugate_match(a: C64, b: C64) -> bool {
    (a - b).norm() <= CONJUGATE_MATCH_TOL * a.norm().max(1.0)
}

/// Index of the conjugate partner of every eigenvalue, if the list is closed.
pub fn conjugate_pairing(eigs: &[C64]) -> Option<Vec<usize>> {
    let mut partner = vec![usize::MAX; eigs.len()];
    for i in 0..eigs.len() {
        if partner[i] != usize::MAX {
            continue;
        }
        let target = eigs[i].conj();
        if conjugate_match(eigs[i], target) {
            partner[i] = i;
            continue;
        }
        let j = (0..eigs.len())
            .find(|&j| j != i && partner[j] == usize::MAX && conjugate_match(eigs[j], target))?;
        partner[i] = j;
        partner[j] = i;
    }
    Some(partner)
}

fn is_conjugate_closed(eigs: &[C64]) -> bool {
    conjugate_pairing(eigs).is_some()
}

/// Diagnostic scan of a spectrum; never fails.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumValidation {
    pub len: usize,
    pub distinct: bool,
    pub duplicate_pair: Option<(usize, usize)>,
    /// `|λ_1| ≤ |λ_2| ≤ …`
    pub ordered: bool,
    /// `min_j Re λ_j`
    pub re_bound: Option<f64>,
    /// The stored β (if any) bounds every `Re λ_j` from below.
    pub re_bound_satisfied: bool,
    pub conjugate_closed: bool,
}

impl SpectrumValidation {
    pub fn is_valid(&self) -> bool {
        self.distinct && self.ordered && self.re_bound_satisfied
    }
}

pub fn validate_spectrum(s: &Spectrum) -> SpectrumValidation {
    let eigs = s.eigenvalues();
    let mut duplicate_pair = None;
    'outer: for i in 0..eigs.len() {
        for j in i + 1..eigs.len() {
            if eigs[i] == eigs[j] {
                duplicate_pair = Some((i + 1, j + 1));
                break 'outer;
            }
        }
    }
    let ordered = eigs.windows(2).all(|w| w[0].norm() <= w[1].norm());
    let re_bound = eigs.iter().map(|l| l.re).reduce(f64::min);
    let re_bound_satisfied = match s.re_lower_bound() {
        Some(beta) => eigs.iter().all(|l| l.re >= beta),
        None => true,
    };
    SpectrumValidation {
        len: eigs.len(),
        distinct: duplicate_pair.is_none(),
        duplicate_pair,
        ordered,
        re_bound,
        re_bound_satisfied,
        conjugate_closed: is_conjugate_closed(eigs),
    }
}

/// Modal input weights `b_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct InputVector {
    coefficients: Vec<C64>,
}

impl InputVector {
    pub fn new(coefficients: Vec<C64>) -> Result<Self> {
        if let Some(i) = coefficients
            .iter()
            .position(|b| !(b.re.is_finite() && b.im.is_finite()))
        {
            return Err(Error::InvalidParameter(format!(
                "b_{} is not finite",
                i + 1
            )));
        }
        Ok(Self { coefficients })
    }

    pub fn constant(value: C64, n: usize) -> Self {
        Self {
            coefficients: vec![value; n],
        }
    }

    pub fn ones(n: usize) -> Self {
        Self::constant(C64::new(1.0, 0.0), n)
    }

    pub fn coefficients(&self) -> &[C64] {
        &self.coefficients
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }
}

/// The functions `t ↦ e^{-λ_j t} b_j` on `[0, L]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentialFamily {
    spectrum: Spectrum,
    input: InputVector,
    horizon: f64,
    len: usize,
}

pub fn exponential_family(
    s: &Spectrum,
    b: &InputVector,
    horizon: f64,
) -> Result<ExponentialFamily> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::NonPositiveHorizon(horizon));
    }
    if s.is_empty() {
        return Err(Error::EmptySpectrum);
    }
    Ok(ExponentialFamily {
        spectrum: s.clone(),
        input: b.clone(),
        horizon,
        len: s.len().min(b.len()),
    })
}

impl ExponentialFamily {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn input(&self) -> &InputVector {
        &self.input
    }

    /// `λ_j`, 0-based.
    pub fn rate(&self, j: usize) -> C64 {
        self.spectrum.eigenvalues[j]
    }

    /// `b_j`, 0-based.
    pub fn weight(&self, j: usize) -> C64 {
        self.input.coefficients[j]
    }

    pub fn rates(&self) -> &[C64] {
        &self.spectrum.eigenvalues[..self.len]
    }

    pub fn weights(&self) -> &[C64] {
        &self.input.coefficients[..self.len]
    }

    /// Element `j` (0-based) at time `t`; zero outside `[0, L]`.
    pub fn eval(&self, j: usize, t: f64) -> C64 {
        if !(0.0..=self.horizon).contains(&t) {
            return C64::new(0.0, 0.0);
        }
        (-self.rate(j) * t).exp() * self.weight(j)
    }

    /// Same rates and horizon, different weights.
    pub fn with_input(&self, b: &InputVector) -> Self {
        Self {
            spectrum: self.spectrum.clone(),
            input: b.clone(),
            horizon: self.horizon,
            len: self.spectrum.len().min(b.len()),
        }
    }

    /// Leading `n` elements.
    pub fn truncated(&self, n: usize) -> Self {
        let mut out = self.clone();
        out.len = n.min(self.len);
        out
    }
}

/// Initial modal state, input weights and horizons of a null-control problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlProblem {
    spectrum: Spectrum,
    input: InputVector,
    x0: Vec<C64>,
    t1: f64,
    settle_lag: f64,
}

impl ControlProblem {
    pub fn new(
        spectrum: Spectrum,
        input: InputVector,
        x0: Vec<C64>,
        t1: f64,
        settle_lag: f64,
    ) -> Result<Self> {
        if spectrum.is_empty() {
            return Err(Error::EmptySpectrum);
        }
        if input.len() != spectrum.len() {
            return Err(Error::LengthMismatch {
                what: format!("b (spectrum has {} eigenvalues)", spectrum.len()),
                expected: spectrum.len(),
                found: input.len(),
            });
        }
        if x0.len() != spectrum.len() {
            return Err(Error::LengthMismatch {
                what: format!("x0 (spectrum has {} eigenvalues)", spectrum.len()),
                expected: spectrum.len(),
                found: x0.len(),
            });
        }
        if let Some(i) = x0
            .iter()
            .position(|x| !(x.re.is_finite() && x.im.is_finite()))
        {
            return Err(Error::InvalidParameter(format!(
                "x0_{} is not finite",
                i + 1
            )));
        }
        if !(settle_lag >= 0.0) || !(t1 > settle_lag) || !t1.is_finite() {
            return Err(Error::InvalidHorizon { t1, settle_lag });
        }
        Ok(Self {
            spectrum,
            input,
            x0,
            t1,
            settle_lag,
        })
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn input(&self) -> &InputVector {
        &self.input
    }

    pub fn x0(&self) -> &[C64] {
        &self.x0
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn settle_lag(&self) -> f64 {
        self.settle_lag
    }

    /// Control horizon `L = t1 - T`.
    pub fn horizon(&self) -> f64 {
        self.t1 - self.settle_lag
    }

    pub fn len(&self) -> usize {
        self.spectrum.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spectrum.is_empty()
    }

    pub fn family(&self) -> ExponentialFamily {
        exponential_family(&self.spectrum, &self.input, self.horizon())
            .expect("validated on construction")
    }

    pub fn x0_norm(&self) -> f64 {
        crate::numeric::norm2(&self.x0)
    }

    /// Same problem with `x0` replaced.
    pub fn with_x0(&self, x0: Vec<C64>) -> Result<Self> {
        Self::new(
            self.spectrum.clone(),
            self.input.clone(),
            x0,
            self.t1,
            self.settle_lag,
        )
    }
}
